//! Recursive-descent parser for specifications and parameter files.
//!
//! Operator precedence, loosest to tightest:
//! `<=>` < `=>` < `\/` < `/\` < `not` < comparisons/membership/set-comparisons
//! < `union`/`intersect` < `+`,`-` < `*`,`/`,`%` < unary minus < postfix
//! (`[..]`, `<..>`, application). Quantifier bodies extend as far right as
//! possible.

use crate::ast::*;
use crate::diag::{Diagnostic, Phase};
use crate::lexer::{tokenize, TokKind, Token};

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

pub fn parse_spec_text(source: &str) -> PResult<Spec> {
    let toks = tokenize(source)?;
    Parser::new(toks).parse_spec()
}

/// Parse a parameter file: `letting <name> be <literal>` lines only.
pub fn parse_param_text(source: &str) -> PResult<Vec<(String, Expr)>> {
    let toks = tokenize(source)?;
    let mut p = Parser::new(toks);
    let mut out = Vec::new();
    while !p.at_end() {
        p.expect_kw("letting")?;
        let name = p.expect_ident()?;
        p.expect_kw("be")?;
        let e = p.parse_expr()?;
        out.push((name, e));
    }
    Ok(out)
}

/// Parse a single expression (used by tests and the model round-trip check).
pub fn parse_expr_text(source: &str) -> PResult<Expr> {
    let toks = tokenize(source)?;
    let mut p = Parser::new(toks);
    let e = p.parse_expr()?;
    if !p.at_end() {
        return Err(p.err_here("trailing input after expression"));
    }
    Ok(e)
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Parser {
        Parser { toks, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_text(&self) -> &str {
        self.toks.get(self.pos).map(|t| t.text.as_str()).unwrap_or("")
    }

    fn here(&self) -> Pos {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.pos)
            .unwrap_or_default()
    }

    fn err_here(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(Phase::Parse, self.here(), msg)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek_text() == text {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.err_here(format!("expected `{text}`, found `{}`", self.peek_text())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        self.expect(kw)
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokKind::Ident => Ok(self.bump().unwrap().text),
            _ => Err(self.err_here(format!("expected identifier, found `{}`", self.peek_text()))),
        }
    }

    // -- specification ------------------------------------------------------

    pub fn parse_spec(&mut self) -> PResult<Spec> {
        let mut spec = Spec { decls: Vec::new(), objective: None, constraints: Vec::new() };
        while let Some(t) = self.peek() {
            let pos = t.pos;
            match t.text.as_str() {
                "given" => {
                    self.bump();
                    let names = self.parse_name_list()?;
                    self.expect(":")?;
                    let dom = self.parse_domain()?;
                    for name in names {
                        spec.decls.push(Decl {
                            kind: DeclKind::Given,
                            name,
                            domain: dom.clone(),
                            rep_tag: None,
                            value: None,
                            pos,
                        });
                    }
                }
                "find" => {
                    self.bump();
                    let names = self.parse_name_list()?;
                    self.expect(":")?;
                    let dom = self.parse_domain()?;
                    for name in names {
                        spec.decls.push(Decl {
                            kind: DeclKind::Find,
                            name,
                            domain: dom.clone(),
                            rep_tag: None,
                            value: None,
                            pos,
                        });
                    }
                }
                "letting" => {
                    self.bump();
                    let name = self.expect_ident()?;
                    self.expect_kw("be")?;
                    if self.eat("domain") {
                        let dom = self.parse_domain()?;
                        spec.decls.push(Decl {
                            kind: DeclKind::LettingDomain,
                            name,
                            domain: dom,
                            rep_tag: None,
                            value: None,
                            pos,
                        });
                    } else {
                        let e = self.parse_expr()?;
                        spec.decls.push(Decl {
                            kind: DeclKind::Letting,
                            name,
                            domain: TypeExpr::IntUnbounded, // refined by instantiation
                            rep_tag: None,
                            value: Some(e),
                            pos,
                        });
                    }
                }
                "maximising" | "minimising" => {
                    let dir = if t.text == "maximising" { OptDir::Maximising } else { OptDir::Minimising };
                    self.bump();
                    let e = self.parse_expr()?;
                    if spec.objective.is_some() {
                        return Err(Diagnostic::error(Phase::Parse, pos, "more than one objective"));
                    }
                    spec.objective = Some((dir, e));
                }
                "such" => {
                    self.bump();
                    self.expect_kw("that")?;
                    loop {
                        let e = self.parse_expr()?;
                        spec.constraints.push(e);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                other => {
                    return Err(Diagnostic::error(
                        Phase::Parse,
                        pos,
                        format!("expected a declaration, objective or `such that`, found `{other}`"),
                    ))
                }
            }
        }
        Ok(spec)
    }

    fn parse_name_list(&mut self) -> PResult<Vec<String>> {
        let mut names = vec![self.expect_ident()?];
        while self.eat(",") {
            names.push(self.expect_ident()?);
        }
        Ok(names)
    }

    // -- domains ------------------------------------------------------------

    pub fn parse_domain(&mut self) -> PResult<TypeExpr> {
        match self.peek_text() {
            "int" => {
                self.bump();
                if self.eat("(") {
                    let lo = self.parse_expr()?;
                    self.expect("..")?;
                    let hi = if self.peek_text() == ")" { None } else { Some(self.parse_expr()?) };
                    self.expect(")")?;
                    match (&lo, &hi) {
                        (Expr::IntLit(a), Some(Expr::IntLit(b))) => Ok(TypeExpr::IntRange(*a, *b)),
                        _ => Ok(TypeExpr::IntRangeExpr(Box::new(lo), hi.map(Box::new))),
                    }
                } else {
                    Ok(TypeExpr::IntUnbounded)
                }
            }
            "bool" => {
                self.bump();
                Ok(TypeExpr::Bool)
            }
            "set" | "mset" => {
                let is_mset = self.peek_text() == "mset";
                self.bump();
                let attr = self.parse_size_attr()?;
                self.expect_kw("of")?;
                let elem = self.parse_domain()?;
                Ok(if is_mset {
                    TypeExpr::MSet(attr, Box::new(elem))
                } else {
                    TypeExpr::Set(attr, Box::new(elem))
                })
            }
            "function" => {
                self.bump();
                let attrs = self.parse_func_attrs()?;
                let from = self.parse_domain()?;
                self.expect("->")?;
                let to = self.parse_domain()?;
                Ok(TypeExpr::Function(attrs, Box::new(from), Box::new(to)))
            }
            "relation" => {
                self.bump();
                self.expect_kw("of")?;
                self.expect("(")?;
                let mut comps = vec![self.parse_domain()?];
                while self.eat("*") {
                    comps.push(self.parse_domain()?);
                }
                self.expect(")")?;
                Ok(TypeExpr::Relation(comps))
            }
            "tuple" => {
                self.bump();
                self.expect("(")?;
                let mut comps = vec![self.parse_domain()?];
                while self.eat(",") {
                    comps.push(self.parse_domain()?);
                }
                self.expect(")")?;
                Ok(TypeExpr::Tuple(comps))
            }
            "matrix" => {
                self.bump();
                self.expect_kw("indexed")?;
                self.expect_kw("by")?;
                self.expect("[")?;
                let mut idx = vec![self.parse_domain()?];
                while self.eat(",") {
                    idx.push(self.parse_domain()?);
                }
                self.expect("]")?;
                self.expect_kw("of")?;
                let elem = self.parse_domain()?;
                Ok(TypeExpr::Matrix(idx, Box::new(elem)))
            }
            _ => {
                if self.peek().map(|t| t.kind) == Some(TokKind::Ident) {
                    Ok(TypeExpr::Named(self.expect_ident()?))
                } else {
                    Err(self.err_here(format!("expected a domain, found `{}`", self.peek_text())))
                }
            }
        }
    }

    fn parse_size_attr(&mut self) -> PResult<SizeAttr> {
        if !self.eat("(") {
            return Ok(SizeAttr::Unbounded);
        }
        let which = self.peek_text().to_string();
        if which != "size" && which != "maxsize" {
            return Err(self.err_here(format!("expected `size` or `maxsize`, found `{which}`")));
        }
        self.bump();
        let n = self.parse_expr()?;
        self.expect(")")?;
        Ok(match (which.as_str(), &n) {
            ("size", Expr::IntLit(k)) => SizeAttr::Exact(*k),
            ("maxsize", Expr::IntLit(k)) => SizeAttr::MaxSize(*k),
            ("size", _) => SizeAttr::ExactExpr(Box::new(n)),
            _ => SizeAttr::MaxSizeExpr(Box::new(n)),
        })
    }

    fn parse_func_attrs(&mut self) -> PResult<FuncAttrs> {
        let mut attrs = FuncAttrs::default();
        let mut seen_partial = false;
        // one or more parenthesized attribute groups: (total) or (total, injective)
        while self.peek_text() == "(" {
            // `(` may also start the from-domain, e.g. rare parenthesized domain;
            // attribute groups always begin with an attribute keyword.
            let next = self.toks.get(self.pos + 1).map(|t| t.text.as_str()).unwrap_or("");
            if !matches!(next, "total" | "partial" | "injective" | "surjective") {
                break;
            }
            self.bump();
            loop {
                match self.peek_text() {
                    "total" => {
                        if seen_partial {
                            return Err(self.err_here("function declared both total and partial"));
                        }
                        attrs.total = true;
                    }
                    "partial" => {
                        if attrs.total {
                            return Err(self.err_here("function declared both total and partial"));
                        }
                        seen_partial = true;
                    }
                    "injective" => attrs.injective = true,
                    "surjective" => attrs.surjective = true,
                    other => {
                        return Err(self.err_here(format!("expected a function attribute, found `{other}`")))
                    }
                }
                self.bump();
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(")")?;
        }
        Ok(attrs)
    }

    // -- expressions ---------------------------------------------------------

    pub fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_iff()
    }

    fn parse_iff(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_implies()?;
        while self.eat("<=>") {
            let rhs = self.parse_implies()?;
            lhs = Expr::BinOp(BinOp::Iff, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_implies(&mut self) -> PResult<Expr> {
        let lhs = self.parse_or()?;
        if self.eat("=>") {
            // right associative
            let rhs = self.parse_implies()?;
            Ok(Expr::BinOp(BinOp::Implies, Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_and()?;
        while self.eat("\\/") {
            let rhs = self.parse_and()?;
            lhs = Expr::BinOp(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_not()?;
        while self.eat("/\\") {
            let rhs = self.parse_not()?;
            lhs = Expr::BinOp(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> PResult<Expr> {
        if self.eat("not") {
            let inner = self.parse_not()?;
            Ok(Expr::UnOp(UnOp::Not, Box::new(inner)))
        } else {
            self.parse_cmp()
        }
    }

    fn parse_cmp(&mut self) -> PResult<Expr> {
        let lhs = self.parse_union()?;
        let op = match self.peek_text() {
            "=" => Some(BinOp::Eq),
            "!=" => Some(BinOp::Neq),
            "<" => Some(BinOp::Lt),
            ">" => Some(BinOp::Gt),
            "<=" => Some(BinOp::Le),
            ">=" => Some(BinOp::Ge),
            "elem" => Some(BinOp::Elem),
            "subset" => Some(BinOp::Subset),
            "subseteq" => Some(BinOp::SubsetEq),
            "supset" => Some(BinOp::Supset),
            "supseteq" => Some(BinOp::SupsetEq),
            "@" => None, // bubble, handled below
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let rhs = self.parse_union()?;
            let mut e = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
            // `e @ h`: bubble annotation (accepted for tests and golden files)
            while self.eat("@") {
                let h = self.parse_union()?;
                e = Expr::Bubble { value: Box::new(e), helpers: Box::new(h), aux: vec![] };
            }
            Ok(e)
        } else if self.eat("@") {
            let h = self.parse_union()?;
            Ok(Expr::Bubble { value: Box::new(lhs), helpers: Box::new(h), aux: vec![] })
        } else {
            Ok(lhs)
        }
    }

    fn parse_union(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_additive()?;
        loop {
            let op = match self.peek_text() {
                "union" => BinOp::Union,
                "intersect" => BinOp::Intersect,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_additive()?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_multiplicative()?;
        loop {
            let op = match self.peek_text() {
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_multiplicative()?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek_text() {
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                "%" => BinOp::Mod,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        if self.eat("-") {
            let inner = self.parse_unary()?;
            return Ok(match inner {
                Expr::IntLit(v) => Expr::IntLit(-v),
                e => Expr::UnOp(UnOp::Neg, Box::new(e)),
            });
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut e = self.parse_primary()?;
        loop {
            match self.peek_text() {
                "[" => {
                    self.bump();
                    let mut idx = vec![self.parse_expr()?];
                    while self.eat(",") {
                        idx.push(self.parse_expr()?);
                    }
                    self.expect("]")?;
                    e = Expr::MatrixIndex(Box::new(e), idx);
                }
                "(" => {
                    // function application: f(e) or inverse application f(<- e)
                    self.bump();
                    let inv = self.peek_text() == "<"
                        && self.toks.get(self.pos + 1).map(|t| t.text.as_str()) == Some("-");
                    if inv {
                        self.pos += 2;
                    }
                    let arg = self.parse_expr()?;
                    self.expect(")")?;
                    e = if inv {
                        Expr::FuncInvApp(Box::new(e), Box::new(arg))
                    } else {
                        Expr::FuncApp(Box::new(e), Box::new(arg))
                    };
                }
                "<" => {
                    // speculative: projection / tuple indexing `e<a, _, 3>`
                    let save = self.pos;
                    match self.try_parse_proj(e.clone()) {
                        Ok(pe) => e = pe,
                        Err(_) => {
                            self.pos = save;
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn try_parse_proj(&mut self, base: Expr) -> PResult<Expr> {
        self.expect("<")?;
        let mut args = Vec::new();
        loop {
            if self.eat("_") {
                args.push(ProjArg::Underscore);
            } else {
                args.push(ProjArg::Expr(self.parse_additive()?));
            }
            if self.eat(",") {
                continue;
            }
            break;
        }
        self.expect(">")?;
        Ok(Expr::RelProj(Box::new(base), args))
    }

    fn parse_quant(&mut self, kind: QuantKind) -> PResult<Expr> {
        let binder = self.expect_ident()?;
        let over = if self.eat("elem") {
            // surface form `sum i elem x . e`, normalized to `sum i : x . e`
            QuantDomain::Collection(Box::new(self.parse_union()?))
        } else {
            self.expect(":")?;
            if matches!(
                self.peek_text(),
                "int" | "bool" | "set" | "mset" | "function" | "relation" | "tuple" | "matrix"
            ) {
                QuantDomain::Domain(self.parse_domain()?)
            } else {
                QuantDomain::Collection(Box::new(self.parse_union()?))
            }
        };
        self.expect(".")?;
        let body = self.parse_expr()?;
        Ok(Expr::Quant { kind, binder, over, body: Box::new(body) })
    }

    fn parse_call(&mut self, op: UnOp) -> PResult<Expr> {
        self.expect("(")?;
        let e = self.parse_expr()?;
        self.expect(")")?;
        Ok(Expr::UnOp(op, Box::new(e)))
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.err_here("unexpected end of input")),
        };
        match t.kind {
            TokKind::Int => {
                self.bump();
                let v: i64 = t
                    .text
                    .parse()
                    .map_err(|_| Diagnostic::error(Phase::Parse, t.pos, "integer literal out of range"))?;
                Ok(Expr::IntLit(v))
            }
            TokKind::Ident => {
                self.bump();
                Ok(Expr::Ref(t.text))
            }
            _ => match t.text.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::BoolLit(true))
                }
                "false" => {
                    self.bump();
                    Ok(Expr::BoolLit(false))
                }
                "forall" => {
                    self.bump();
                    self.parse_quant(QuantKind::Forall)
                }
                "exists" => {
                    self.bump();
                    self.parse_quant(QuantKind::Exists)
                }
                "sum" => {
                    self.bump();
                    self.parse_quant(QuantKind::Sum)
                }
                "card" => {
                    self.bump();
                    self.parse_call(UnOp::Card)
                }
                "min" => {
                    self.bump();
                    self.parse_call(UnOp::Min)
                }
                "max" => {
                    self.bump();
                    self.parse_call(UnOp::Max)
                }
                "defined" => {
                    self.bump();
                    self.parse_call(UnOp::Defined)
                }
                "range" => {
                    self.bump();
                    self.parse_call(UnOp::Range)
                }
                "alldiff" => {
                    self.bump();
                    self.parse_call(UnOp::AllDiff)
                }
                "tuple" => {
                    self.bump();
                    self.expect("(")?;
                    let mut es = vec![self.parse_expr()?];
                    while self.eat(",") {
                        es.push(self.parse_expr()?);
                    }
                    self.expect(")")?;
                    Ok(Expr::TupleLit(es))
                }
                "function" => {
                    self.bump();
                    self.expect("(")?;
                    let mut pairs = Vec::new();
                    if self.peek_text() != ")" {
                        loop {
                            let a = self.parse_expr()?;
                            self.expect("-->")?;
                            let b = self.parse_expr()?;
                            pairs.push((a, b));
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    Ok(Expr::FuncLit(pairs))
                }
                "relation" => {
                    self.bump();
                    self.expect("(")?;
                    let mut tuples = Vec::new();
                    if self.peek_text() != ")" {
                        loop {
                            tuples.push(self.parse_expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    Ok(Expr::RelLit(tuples))
                }
                "{" => {
                    self.bump();
                    let mut es = Vec::new();
                    if self.peek_text() != "}" {
                        loop {
                            es.push(self.parse_expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect("}")?;
                    Ok(Expr::SetLit(es))
                }
                "(" => {
                    self.bump();
                    let first = self.parse_expr()?;
                    if self.eat(",") {
                        // tuple literal (a, b, ...)
                        let mut es = vec![first];
                        loop {
                            es.push(self.parse_expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                        self.expect(")")?;
                        Ok(Expr::TupleLit(es))
                    } else {
                        self.expect(")")?;
                        Ok(first)
                    }
                }
                "_" => Err(Diagnostic::error(
                    Phase::Parse,
                    t.pos,
                    "`_` is only allowed inside a relation projection",
                )),
                other => Err(Diagnostic::error(
                    Phase::Parse,
                    t.pos,
                    format!("expected an expression, found `{other}`"),
                )),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_find() {
        let s = parse_spec_text("find x : int(1..3)").unwrap();
        assert_eq!(s.decls.len(), 1);
        assert_eq!(s.decls[0].domain, TypeExpr::IntRange(1, 3));
        assert!(s.objective.is_none());
        assert!(s.constraints.is_empty());
    }

    #[test]
    fn parses_knapsack() {
        let text = "\
given      item_count,capacity : int
letting    item be domain int(1..item_count)
given      volume,value : function (total) item -> int(1..)
find       x : set of item
maximising sum i elem x . value(i)
such that  (sum i elem x . volume(i)) <= capacity
";
        let s = parse_spec_text(text).unwrap();
        assert_eq!(s.decls.iter().filter(|d| d.kind == DeclKind::Given).count(), 4);
        assert_eq!(s.decls.iter().filter(|d| d.kind == DeclKind::LettingDomain).count(), 1);
        assert_eq!(s.decls.iter().filter(|d| d.kind == DeclKind::Find).count(), 1);
        assert!(matches!(s.objective, Some((OptDir::Maximising, _))));
        assert_eq!(s.constraints.len(), 1);
        // `sum i elem x . e` normalizes to quantification over the collection x
        if let Some((_, Expr::Quant { kind, over, .. })) = &s.objective {
            assert_eq!(*kind, QuantKind::Sum);
            assert!(matches!(over, QuantDomain::Collection(c) if **c == Expr::Ref("x".into())));
        } else {
            panic!("objective is not a sum");
        }
    }

    #[test]
    fn parse_error_at_end_of_input() {
        let err = parse_spec_text("such that x = ").unwrap_err();
        assert!(err.message.contains("expected"));
    }

    #[test]
    fn projection_vs_comparison() {
        let e = parse_expr_text("r<1,_>").unwrap();
        assert!(matches!(e, Expr::RelProj(_, ref args) if args.len() == 2));
        let e = parse_expr_text("a < b").unwrap();
        assert!(matches!(e, Expr::BinOp(BinOp::Lt, _, _)));
        let e = parse_expr_text("t<2>").unwrap();
        assert!(matches!(e, Expr::RelProj(_, ref args) if args.len() == 1));
    }

    #[test]
    fn precedence_and_quant_body_extent() {
        let e = parse_expr_text("not x = 1 /\\ y").unwrap();
        // (not (x = 1)) /\ y
        match e {
            Expr::BinOp(BinOp::And, lhs, _) => assert!(matches!(*lhs, Expr::UnOp(UnOp::Not, _))),
            other => panic!("unexpected parse: {other:?}"),
        }
        let e = parse_expr_text("forall i : int(1..3) . i > 0 /\\ i < 4").unwrap();
        assert!(matches!(e, Expr::Quant { .. }), "quantifier body extends right");
    }

    #[test]
    fn function_and_relation_literals() {
        let e = parse_expr_text("function (1 --> 2, 2 --> 3)").unwrap();
        assert!(matches!(e, Expr::FuncLit(ref ps) if ps.len() == 2));
        let e = parse_expr_text("relation ((1,2), (2,1))").unwrap();
        assert!(matches!(e, Expr::RelLit(ref ts) if ts.len() == 2));
    }

    #[test]
    fn inverse_application() {
        let e = parse_expr_text("f(<- 3)").unwrap();
        assert!(matches!(e, Expr::FuncInvApp(_, _)));
    }
}
