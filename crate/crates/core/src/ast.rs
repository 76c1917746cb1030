//! The specification / expression / type data model shared by every phase,
//! plus the primitive term utilities the rewrite rules are built from
//! (substitution, conjunction splitting, reference queries, alpha-equality).

use std::collections::BTreeSet;
use std::fmt;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Size attribute on set/mset domains. The `*Expr` forms hold symbolic
/// bounds (e.g. `size n` where `n` is a given); parameter instantiation
/// resolves them to the concrete forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeAttr {
    Exact(i64),
    MaxSize(i64),
    Unbounded,
    ExactExpr(Box<Expr>),
    MaxSizeExpr(Box<Expr>),
}

impl SizeAttr {
    pub fn exact_n(&self) -> Option<i64> {
        match self {
            SizeAttr::Exact(n) => Some(*n),
            _ => None,
        }
    }
    pub fn maxsize_n(&self) -> Option<i64> {
        match self {
            SizeAttr::MaxSize(n) => Some(*n),
            _ => None,
        }
    }
    pub fn is_concrete(&self) -> bool {
        matches!(self, SizeAttr::Exact(_) | SizeAttr::MaxSize(_) | SizeAttr::Unbounded)
    }
}

/// Function attributes. Exactly one of total/partial; validation enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FuncAttrs {
    pub total: bool,
    pub injective: bool,
    pub surjective: bool,
}

/// Semantic types. `IntRangeExpr`, `IntUnbounded` and `Named` only survive
/// until parameter instantiation; phases 4+ require concrete types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExpr {
    IntRange(i64, i64),
    Bool,
    Set(SizeAttr, Box<TypeExpr>),
    MSet(SizeAttr, Box<TypeExpr>),
    Function(FuncAttrs, Box<TypeExpr>, Box<TypeExpr>),
    Relation(Vec<TypeExpr>),
    Tuple(Vec<TypeExpr>),
    Matrix(Vec<TypeExpr>, Box<TypeExpr>),
    /// Symbolic int range: lo expr, optional hi expr (open range `int(lo..)`).
    IntRangeExpr(Box<Expr>, Option<Box<Expr>>),
    /// `int` with no range (givens only; closed by instantiation).
    IntUnbounded,
    /// Domain alias reference, resolved at instantiation.
    Named(String),
}

impl TypeExpr {
    pub fn is_int(&self) -> bool {
        matches!(self, TypeExpr::IntRange(..) | TypeExpr::IntUnbounded | TypeExpr::IntRangeExpr(..))
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, TypeExpr::Bool)
    }

    /// True for types a flat model may declare decision variables over.
    pub fn is_flat(&self) -> bool {
        match self {
            TypeExpr::IntRange(..) | TypeExpr::Bool => true,
            TypeExpr::Matrix(idx, elem) => {
                idx.iter().all(|t| matches!(t, TypeExpr::IntRange(..))) && elem.is_flat()
                    && !matches!(**elem, TypeExpr::Matrix(..))
            }
            _ => false,
        }
    }

    /// True once no symbolic ranges, unresolved names or unbounded ints remain.
    pub fn is_concrete(&self) -> bool {
        match self {
            TypeExpr::IntRange(..) | TypeExpr::Bool => true,
            TypeExpr::Set(a, e) | TypeExpr::MSet(a, e) => a.is_concrete() && e.is_concrete(),
            TypeExpr::Function(_, a, b) => a.is_concrete() && b.is_concrete(),
            TypeExpr::Relation(cs) | TypeExpr::Tuple(cs) => cs.iter().all(|t| t.is_concrete()),
            TypeExpr::Matrix(idx, e) => idx.iter().all(|t| t.is_concrete()) && e.is_concrete(),
            _ => false,
        }
    }

    /// Shape-level compatibility: int ranges compare equal regardless of bounds.
    pub fn compatible(&self, other: &TypeExpr) -> bool {
        use TypeExpr::*;
        match (self, other) {
            (a, b) if a.is_int() && b.is_int() => true,
            (Bool, Bool) => true,
            (Set(_, a), Set(_, b)) | (MSet(_, a), MSet(_, b)) => a.compatible(b),
            (Function(_, a1, b1), Function(_, a2, b2)) => a1.compatible(a2) && b1.compatible(b2),
            (Relation(a), Relation(b)) | (Tuple(a), Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.compatible(y))
            }
            (Matrix(i1, e1), Matrix(i2, e2)) => {
                i1.len() == i2.len()
                    && i1.iter().zip(i2).all(|(x, y)| x.compatible(y))
                    && e1.compatible(e2)
            }
            _ => false,
        }
    }

    /// True if the type contains an abstract (non int/bool/matrix-of-flat) constructor.
    pub fn is_abstract(&self) -> bool {
        match self {
            TypeExpr::IntRange(..) | TypeExpr::Bool | TypeExpr::IntUnbounded
            | TypeExpr::IntRangeExpr(..) => false,
            TypeExpr::Matrix(_, e) => e.is_abstract() || matches!(**e, TypeExpr::Tuple(_)),
            _ => true,
        }
    }
}

/// Representation choice for one abstract variable (occurrence). Nested
/// abstract element types carry their own inner choice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum RepTag {
    Occurrence,
    ExplicitFixed(Option<Box<RepTag>>),
    ExplicitFlags(Option<Box<RepTag>>),
    Func1D(Option<Box<RepTag>>),
    Func2D,
    RelSetOfTuples,
}

impl RepTag {
    /// Short stable label used in model metadata and matrix name suffixes.
    pub fn label(&self) -> String {
        match self {
            RepTag::Occurrence => "occurrence".into(),
            RepTag::ExplicitFixed(None) => "explicit".into(),
            RepTag::ExplicitFixed(Some(inner)) => format!("explicit[{}]", inner.label()),
            RepTag::ExplicitFlags(None) => "flags".into(),
            RepTag::ExplicitFlags(Some(inner)) => format!("flags[{}]", inner.label()),
            RepTag::Func1D(None) => "func1d".into(),
            RepTag::Func1D(Some(inner)) => format!("func1d[{}]", inner.label()),
            RepTag::Func2D => "func2d".into(),
            RepTag::RelSetOfTuples => "relset".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeclKind {
    Given,
    Letting,
    LettingDomain,
    Find,
    AuxFind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub kind: DeclKind,
    pub name: String,
    pub domain: TypeExpr,
    pub rep_tag: Option<RepTag>,
    /// Literal value expression for Letting declarations.
    pub value: Option<Expr>,
    pub pos: Pos,
}

impl Decl {
    pub fn find(name: impl Into<String>, domain: TypeExpr) -> Decl {
        Decl {
            kind: DeclKind::Find,
            name: name.into(),
            domain,
            rep_tag: None,
            value: None,
            pos: Pos::default(),
        }
    }

    pub fn aux(name: impl Into<String>, domain: TypeExpr) -> Decl {
        Decl { kind: DeclKind::AuxFind, ..Decl::find(name, domain) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Abs,
    Not,
    Neg,
    Card,
    Min,
    Max,
    Defined,
    Range,
    AllDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
    Implies,
    Iff,
    Elem,
    Union,
    Intersect,
    Subset,
    SubsetEq,
    Supset,
    SupsetEq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantKind {
    Forall,
    Exists,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuantDomain {
    Domain(TypeExpr),
    Collection(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjArg {
    Expr(Expr),
    Underscore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    IntLit(i64),
    BoolLit(bool),
    Ref(String),
    UnOp(UnOp, Box<Expr>),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    Quant {
        kind: QuantKind,
        binder: String,
        over: QuantDomain,
        body: Box<Expr>,
    },
    MatrixIndex(Box<Expr>, Vec<Expr>),
    /// 0-based static tuple component access, `t<0>`.
    TupleIndex(Box<Expr>, usize),
    FuncApp(Box<Expr>, Box<Expr>),
    FuncInvApp(Box<Expr>, Box<Expr>),
    RelProj(Box<Expr>, Vec<ProjArg>),
    TupleLit(Vec<Expr>),
    SetLit(Vec<Expr>),
    /// Function literal, `function (1 --> 2, ...)`.
    FuncLit(Vec<(Expr, Expr)>),
    /// Relation literal, `relation ((1,2), ...)`.
    RelLit(Vec<Expr>),
    /// `value @ helpers`: an expression annotated with helper constraints
    /// and the auxiliary declarations they constrain.
    Bubble {
        value: Box<Expr>,
        helpers: Box<Expr>,
        aux: Vec<Decl>,
    },
}

impl Expr {
    pub fn bref(name: impl Into<String>) -> Box<Expr> {
        Box::new(Expr::Ref(name.into()))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::BinOp(BinOp::And, Box::new(a), Box::new(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::BinOp(BinOp::Eq, Box::new(a), Box::new(b))
    }

    pub fn implies(a: Expr, b: Expr) -> Expr {
        Expr::BinOp(BinOp::Implies, Box::new(a), Box::new(b))
    }

    pub fn forall(binder: impl Into<String>, over: QuantDomain, body: Expr) -> Expr {
        Expr::Quant { kind: QuantKind::Forall, binder: binder.into(), over, body: Box::new(body) }
    }

    pub fn quant(kind: QuantKind, binder: impl Into<String>, over: QuantDomain, body: Expr) -> Expr {
        Expr::Quant { kind, binder: binder.into(), over, body: Box::new(body) }
    }

    /// `e = true` as printed by the occurrence rules.
    pub fn is_true(e: Expr) -> Expr {
        Expr::eq(e, Expr::BoolLit(true))
    }

    pub fn over_range(lo: i64, hi: i64) -> QuantDomain {
        QuantDomain::Domain(TypeExpr::IntRange(lo, hi))
    }

    /// Child expressions, left to right. Quantifier collection and bubble
    /// helpers are children; quantifier bodies and bubble values too.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::IntLit(_) | Expr::BoolLit(_) | Expr::Ref(_) => vec![],
            Expr::UnOp(_, a) => vec![a],
            Expr::BinOp(_, a, b) => vec![a, b],
            Expr::Quant { over, body, .. } => {
                let mut v = vec![];
                if let QuantDomain::Collection(c) = over {
                    v.push(&**c);
                }
                v.push(&**body);
                v
            }
            Expr::MatrixIndex(b, idx) => {
                let mut v = vec![&**b];
                v.extend(idx.iter());
                v
            }
            Expr::TupleIndex(b, _) => vec![b],
            Expr::FuncApp(f, a) | Expr::FuncInvApp(f, a) => vec![f, a],
            Expr::RelProj(b, args) => {
                let mut v = vec![&**b];
                for a in args {
                    if let ProjArg::Expr(e) = a {
                        v.push(e);
                    }
                }
                v
            }
            Expr::TupleLit(es) | Expr::SetLit(es) | Expr::RelLit(es) => es.iter().collect(),
            Expr::FuncLit(ps) => ps.iter().flat_map(|(a, b)| [a, b]).collect(),
            Expr::Bubble { value, helpers, .. } => vec![value, helpers],
        }
    }
}

/// Direction of an optimisation objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptDir {
    Maximising,
    Minimising,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Spec {
    pub decls: Vec<Decl>,
    pub objective: Option<(OptDir, Expr)>,
    pub constraints: Vec<Expr>,
}

impl Spec {
    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn decl_mut(&mut self, name: &str) -> Option<&mut Decl> {
        self.decls.iter_mut().find(|d| d.name == name)
    }
}

// ---------------------------------------------------------------------------
// term utilities

/// Collect the free variable names of `e`.
pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    fn go(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match e {
            Expr::Ref(n) => {
                if !bound.iter().any(|b| b == n) {
                    out.insert(n.clone());
                }
            }
            Expr::Quant { binder, over, body, .. } => {
                if let QuantDomain::Collection(c) = over {
                    go(c, bound, out);
                }
                bound.push(binder.clone());
                go(body, bound, out);
                bound.pop();
            }
            _ => {
                for c in e.children() {
                    go(c, bound, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut Vec::new(), &mut out);
    out
}

/// True iff `name` occurs free in `e`.
pub fn has_reference_to(name: &str, e: &Expr) -> bool {
    fn go(e: &Expr, name: &str) -> bool {
        match e {
            Expr::Ref(n) => n == name,
            Expr::Quant { binder, over, body, .. } => {
                let in_over = match over {
                    QuantDomain::Collection(c) => go(c, name),
                    QuantDomain::Domain(_) => false,
                };
                in_over || (binder != name && go(body, name))
            }
            _ => e.children().iter().any(|c| go(c, name)),
        }
    }
    go(e, name)
}

/// Rebuild `e` with `f` applied to each immediate child.
pub fn map_children(e: &Expr, f: &mut impl FnMut(&Expr) -> Expr) -> Expr {
    match e {
        Expr::IntLit(_) | Expr::BoolLit(_) | Expr::Ref(_) => e.clone(),
        Expr::UnOp(op, a) => Expr::UnOp(*op, Box::new(f(a))),
        Expr::BinOp(op, a, b) => Expr::BinOp(*op, Box::new(f(a)), Box::new(f(b))),
        Expr::Quant { kind, binder, over, body } => Expr::Quant {
            kind: *kind,
            binder: binder.clone(),
            over: match over {
                QuantDomain::Domain(t) => QuantDomain::Domain(t.clone()),
                QuantDomain::Collection(c) => QuantDomain::Collection(Box::new(f(c))),
            },
            body: Box::new(f(body)),
        },
        Expr::MatrixIndex(b, idx) => {
            Expr::MatrixIndex(Box::new(f(b)), idx.iter().map(|i| f(i)).collect())
        }
        Expr::TupleIndex(b, i) => Expr::TupleIndex(Box::new(f(b)), *i),
        Expr::FuncApp(a, b) => Expr::FuncApp(Box::new(f(a)), Box::new(f(b))),
        Expr::FuncInvApp(a, b) => Expr::FuncInvApp(Box::new(f(a)), Box::new(f(b))),
        Expr::RelProj(b, args) => Expr::RelProj(
            Box::new(f(b)),
            args.iter()
                .map(|a| match a {
                    ProjArg::Expr(e) => ProjArg::Expr(f(e)),
                    ProjArg::Underscore => ProjArg::Underscore,
                })
                .collect(),
        ),
        Expr::TupleLit(es) => Expr::TupleLit(es.iter().map(|x| f(x)).collect()),
        Expr::SetLit(es) => Expr::SetLit(es.iter().map(|x| f(x)).collect()),
        Expr::RelLit(es) => Expr::RelLit(es.iter().map(|x| f(x)).collect()),
        Expr::FuncLit(ps) => Expr::FuncLit(ps.iter().map(|(a, b)| (f(a), f(b))).collect()),
        Expr::Bubble { value, helpers, aux } => Expr::Bubble {
            value: Box::new(f(value)),
            helpers: Box::new(f(helpers)),
            aux: aux.clone(),
        },
    }
}

/// Capture-avoiding substitution of every free occurrence of `name` in
/// `body` by `replacement`. Inner binders colliding with free names of the
/// replacement are renamed fresh.
pub fn substitute(body: &Expr, name: &str, replacement: &Expr) -> Expr {
    let repl_free = free_vars(replacement);
    subst_go(body, name, replacement, &repl_free, &mut 0)
}

fn subst_go(
    e: &Expr,
    name: &str,
    replacement: &Expr,
    repl_free: &BTreeSet<String>,
    fresh: &mut u32,
) -> Expr {
    match e {
        Expr::Ref(n) if n == name => replacement.clone(),
        Expr::Quant { kind, binder, over, body } => {
            let over2 = match over {
                QuantDomain::Domain(t) => QuantDomain::Domain(t.clone()),
                QuantDomain::Collection(c) => {
                    QuantDomain::Collection(Box::new(subst_go(c, name, replacement, repl_free, fresh)))
                }
            };
            if binder == name {
                // shadowed: the body is untouched
                return Expr::Quant { kind: *kind, binder: binder.clone(), over: over2, body: body.clone() };
            }
            let (binder2, body2) = if repl_free.contains(binder) && has_reference_to(name, body) {
                // rename the binder to avoid capturing a free name of the replacement
                let mut nb;
                loop {
                    nb = format!("{}_r{}", binder, fresh);
                    *fresh += 1;
                    if !repl_free.contains(&nb) && !has_reference_to(&nb, body) {
                        break;
                    }
                }
                let renamed = substitute(body, binder, &Expr::Ref(nb.clone()));
                (nb, renamed)
            } else {
                (binder.clone(), (**body).clone())
            };
            Expr::Quant {
                kind: *kind,
                binder: binder2,
                over: over2,
                body: Box::new(subst_go(&body2, name, replacement, repl_free, fresh)),
            }
        }
        _ => map_children(e, &mut |c| subst_go(c, name, replacement, repl_free, fresh)),
    }
}

/// Split a (possibly nested) conjunction into its conjunct list. A
/// non-conjunction yields a singleton.
pub fn split_conjunction(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::BinOp(BinOp::And, a, b) => {
            let mut v = split_conjunction(a);
            v.extend(split_conjunction(b));
            v
        }
        _ => vec![e.clone()],
    }
}

/// Left-associated conjunction of a non-empty list.
pub fn conjoin(mut parts: Vec<Expr>) -> Expr {
    assert!(!parts.is_empty(), "conjoin of empty list");
    let mut acc = parts.remove(0);
    for p in parts {
        acc = Expr::and(acc, p);
    }
    acc
}

/// Canonicalize quantifier binder names to `q_1, q_2, ...` in depth-first
/// order. Free names are untouched.
pub fn canonicalize_binders(e: &Expr) -> Expr {
    fn go(e: &Expr, counter: &mut u32) -> Expr {
        match e {
            Expr::Quant { kind, binder, over, body } => {
                let over2 = match over {
                    QuantDomain::Domain(t) => QuantDomain::Domain(t.clone()),
                    QuantDomain::Collection(c) => QuantDomain::Collection(Box::new(go(c, counter))),
                };
                *counter += 1;
                let nb = format!("q_{counter}");
                let body2 = substitute(body, binder, &Expr::Ref(nb.clone()));
                Expr::Quant { kind: *kind, binder: nb, over: over2, body: Box::new(go(&body2, counter)) }
            }
            _ => map_children(e, &mut |c| go(c, counter)),
        }
    }
    go(e, &mut 0)
}

/// Alpha-equivalence: structural identity up to consistent renaming of
/// quantifier binders.
pub fn structural_eq(a: &Expr, b: &Expr) -> bool {
    canonicalize_binders(a) == canonicalize_binders(b)
}
