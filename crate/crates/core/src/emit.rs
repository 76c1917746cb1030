//! Flat-model construction and printing (phase 8 plus output).
//!
//! A finished rewrite branch is turned into a flat model by renaming
//! auxiliary variables (`aux_1`, `aux_2`, … in order of first occurrence)
//! and quantifier binders (`q_1`, `q_2`, … depth-first through the objective
//! and then the constraints), dropping the virtual declarations that only
//! existed to drive rule matching, and scanning the result for anything that
//! is not expressible over int/bool matrix variables. The printer emits a
//! deterministic, re-parseable text form with the representation choices and
//! the rule trace as comments.

use crate::ast::*;
use crate::diag::RefineError;
use crate::engine::WorkSpec;
use crate::rep::{RepSpec, Slot};

/// A refined model ready for solving, checking or printing.
#[derive(Debug, Clone)]
pub struct FlatModel {
    pub spec: Spec,
    /// `var#tag` entries, or `var@<slot>#tag` in per-constraint mode.
    pub rep_summary: Vec<String>,
    pub rule_trace: Vec<String>,
    /// Hash of the source specification text this model refines.
    pub spec_hash: String,
}

// -- name fixing --------------------------------------------------------------------

fn rename_binders(e: &Expr, counter: &mut u32) -> Expr {
    if let Expr::Quant { kind, binder, over, body } = e {
        let over2 = match over {
            QuantDomain::Domain(t) => QuantDomain::Domain(t.clone()),
            QuantDomain::Collection(c) => {
                QuantDomain::Collection(Box::new(rename_binders(c, counter)))
            }
        };
        *counter += 1;
        let new = format!("q_{counter}");
        let body2 = if *binder == new {
            (**body).clone()
        } else {
            substitute(body, binder, &Expr::Ref(new.clone()))
        };
        return Expr::Quant {
            kind: *kind,
            binder: new,
            over: over2,
            body: Box::new(rename_binders(&body2, counter)),
        };
    }
    map_children(e, &mut |c| rename_binders(c, counter))
}

fn rename_refs(e: &Expr, map: &std::collections::BTreeMap<String, String>) -> Expr {
    if let Expr::Ref(n) = e {
        if let Some(new) = map.get(n) {
            return Expr::Ref(new.clone());
        }
    }
    map_children(e, &mut |c| rename_refs(c, map))
}

fn first_occurrences(e: &Expr, names: &mut Vec<String>) {
    if let Expr::Ref(n) = e {
        if !names.iter().any(|x| x == n) {
            names.push(n.clone());
        }
    }
    for c in e.children() {
        first_occurrences(c, names);
    }
}

/// Deterministic renaming of auxiliary variables and quantifier binders.
/// Idempotent: fixing an already-fixed specification changes nothing.
pub fn fix_names(spec: &mut Spec) {
    // binders first, so auxiliary names can never collide with a binder
    let mut counter = 0u32;
    if let Some((_, obj)) = &mut spec.objective {
        *obj = rename_binders(obj, &mut counter);
    }
    for c in &mut spec.constraints {
        *c = rename_binders(c, &mut counter);
    }
    // scalar auxiliaries in order of first occurrence, then declaration order
    let aux_names: Vec<String> = spec
        .decls
        .iter()
        .filter(|d| {
            d.kind == DeclKind::AuxFind
                && matches!(d.domain, TypeExpr::IntRange(..) | TypeExpr::Bool)
        })
        .map(|d| d.name.clone())
        .collect();
    let mut seen: Vec<String> = Vec::new();
    if let Some((_, obj)) = &spec.objective {
        first_occurrences(obj, &mut seen);
    }
    for c in &spec.constraints {
        first_occurrences(c, &mut seen);
    }
    let mut ordered: Vec<String> =
        seen.into_iter().filter(|n| aux_names.contains(n)).collect();
    for n in &aux_names {
        if !ordered.contains(n) {
            ordered.push(n.clone());
        }
    }
    let map: std::collections::BTreeMap<String, String> = ordered
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), format!("aux_{}", i + 1)))
        .collect();
    if map.iter().all(|(k, v)| k == v) {
        return;
    }
    for d in &mut spec.decls {
        if let Some(new) = map.get(&d.name) {
            d.name = new.clone();
        }
    }
    if let Some((_, obj)) = &mut spec.objective {
        *obj = rename_refs(obj, &map);
    }
    for c in &mut spec.constraints {
        *c = rename_refs(c, &map);
    }
}

// -- flatness scan --------------------------------------------------------------------

fn scan_expr(e: &Expr, spec: &Spec, binders: &mut Vec<String>, out: &mut Vec<String>) {
    let is_letting_base = |b: &Expr| match b {
        Expr::Ref(n) => spec.decl(n).map(|d| d.kind == DeclKind::Letting).unwrap_or(false),
        Expr::FuncLit(_) | Expr::RelLit(_) => true,
        _ => false,
    };
    match e {
        Expr::Bubble { .. } => out.push("a bubble (`@`) remains".into()),
        Expr::Quant { over: QuantDomain::Collection(_), .. } => {
            out.push("quantification over a collection remains".into())
        }
        Expr::BinOp(
            op @ (BinOp::Elem
            | BinOp::Union
            | BinOp::Intersect
            | BinOp::Subset
            | BinOp::SubsetEq
            | BinOp::Supset
            | BinOp::SupsetEq),
            ..,
        ) => out.push(format!("set operator {op:?} remains")),
        Expr::UnOp(op @ (UnOp::Card | UnOp::Min | UnOp::Max | UnOp::Defined | UnOp::Range), _) => {
            out.push(format!("abstract operator {op:?} remains"))
        }
        Expr::FuncApp(f, _) if !is_letting_base(f) => {
            out.push("application of a non-constant function remains".into())
        }
        Expr::FuncInvApp(..) => out.push("inverse function application remains".into()),
        Expr::RelProj(r, args) => {
            if !is_letting_base(r) || args.iter().any(|a| matches!(a, ProjArg::Underscore)) {
                out.push("projection of a non-constant relation remains".into());
            }
        }
        Expr::TupleIndex(..) => out.push("tuple indexing remains".into()),
        Expr::SetLit(_) | Expr::TupleLit(_) => {
            out.push("a collection literal remains outside constant position".into())
        }
        Expr::Ref(n) => {
            if !binders.iter().any(|b| b == n) && spec.decl(n).is_none() {
                out.push(format!("reference to undeclared `{n}`"));
            } else if let Some(d) = spec.decl(n) {
                if matches!(d.kind, DeclKind::Find | DeclKind::AuxFind) && !d.domain.is_flat() {
                    out.push(format!("reference to abstract variable `{n}`"));
                }
            }
        }
        _ => {}
    }
    // descend (FuncApp/RelProj arguments still need checking, but constant
    // bases are fine)
    if let Expr::Quant { binder, over, body, .. } = e {
        if let QuantDomain::Collection(c) = over {
            scan_expr(c, spec, binders, out);
        }
        binders.push(binder.clone());
        scan_expr(body, spec, binders, out);
        binders.pop();
        return;
    }
    match e {
        Expr::FuncApp(f, x) => {
            if !is_letting_base(f) {
                scan_expr(f, spec, binders, out);
            }
            scan_expr(x, spec, binders, out);
        }
        Expr::RelProj(r, args) => {
            if !is_letting_base(r) {
                scan_expr(r, spec, binders, out);
            }
            for a in args {
                if let ProjArg::Expr(x) = a {
                    scan_expr(x, spec, binders, out);
                }
            }
        }
        _ => {
            for c in e.children() {
                scan_expr(c, spec, binders, out);
            }
        }
    }
}

/// Everything preventing `spec` from being a flat model (empty = flat).
pub fn flatness_violations(spec: &Spec) -> Vec<String> {
    let mut out = Vec::new();
    for d in &spec.decls {
        match d.kind {
            DeclKind::Letting | DeclKind::LettingDomain => {}
            DeclKind::Given => out.push(format!("unresolved given `{}`", d.name)),
            DeclKind::Find | DeclKind::AuxFind => {
                if !d.domain.is_flat() {
                    out.push(format!("decision variable `{}` has an abstract domain", d.name));
                }
            }
        }
    }
    let mut binders = Vec::new();
    if let Some((_, obj)) = &spec.objective {
        scan_expr(obj, spec, &mut binders, &mut out);
    }
    for c in &spec.constraints {
        scan_expr(c, spec, &mut binders, &mut out);
    }
    out
}

// -- model construction ------------------------------------------------------------------

fn slot_label(s: &Slot) -> String {
    match s {
        Slot::Global => String::new(),
        Slot::Objective => "@obj".into(),
        Slot::Constraint(i) => format!("@c{i}"),
    }
}

fn rep_summary(rs: &RepSpec) -> Vec<String> {
    let mut out = Vec::new();
    for d in &rs.spec.decls {
        if d.kind != DeclKind::Find || !d.domain.is_abstract() {
            continue;
        }
        let entries: Vec<(&Slot, &RepTag)> = rs
            .assignment
            .iter()
            .filter(|((n, _), _)| *n == d.name)
            .map(|((_, s), t)| (s, t))
            .collect();
        if entries.len() <= 1 {
            if let Some(t) =
                d.rep_tag.as_ref().or_else(|| entries.first().map(|(_, t)| *t))
            {
                out.push(format!("{}#{}", d.name, t.label()));
            }
        } else {
            for (s, t) in entries {
                out.push(format!("{}{}#{}", d.name, slot_label(s), t.label()));
            }
        }
    }
    out
}

/// Drop virtual declarations, fix names and package a finished branch as a
/// flat model. Errors if anything abstract survived rewriting.
pub fn build_flat_model(ws: &WorkSpec, spec_hash: &str) -> Result<FlatModel, RefineError> {
    let summary = rep_summary(&ws.rs);
    let mut spec = ws.rs.spec.clone();
    spec.decls.retain(|d| match d.kind {
        DeclKind::Letting => true,
        DeclKind::LettingDomain | DeclKind::Given => false,
        DeclKind::Find | DeclKind::AuxFind => d.domain.is_flat(),
    });
    fix_names(&mut spec);
    let violations = flatness_violations(&spec);
    if let Some(v) = violations.first() {
        return Err(RefineError::Diag(format!("refinement left a non-flat model: {v}")));
    }
    Ok(FlatModel {
        spec,
        rep_summary: summary,
        rule_trace: ws.trace.clone(),
        spec_hash: spec_hash.to_string(),
    })
}

// -- printing ---------------------------------------------------------------------------

pub fn print_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::IntRange(l, h) => format!("int({l}..{h})"),
        TypeExpr::Bool => "bool".into(),
        TypeExpr::IntUnbounded => "int".into(),
        TypeExpr::IntRangeExpr(lo, hi) => match hi {
            Some(h) => format!("int({}..{})", print_expr(lo), print_expr(h)),
            None => format!("int({}..)", print_expr(lo)),
        },
        TypeExpr::Named(n) => n.clone(),
        TypeExpr::Set(attr, e) => format!("set {}of {}", print_attr(attr), print_type(e)),
        TypeExpr::MSet(attr, e) => format!("mset {}of {}", print_attr(attr), print_type(e)),
        TypeExpr::Function(attrs, a, b) => {
            let mut words = Vec::new();
            if attrs.total {
                words.push("total");
            }
            if attrs.injective {
                words.push("injective");
            }
            if attrs.surjective {
                words.push("surjective");
            }
            let prefix = if words.is_empty() {
                String::new()
            } else {
                format!("({}) ", words.join(", "))
            };
            format!("function {}{} -> {}", prefix, print_type(a), print_type(b))
        }
        TypeExpr::Relation(cs) => format!(
            "relation of ({})",
            cs.iter().map(print_type).collect::<Vec<_>>().join(" * ")
        ),
        TypeExpr::Tuple(cs) => format!(
            "tuple ({})",
            cs.iter().map(print_type).collect::<Vec<_>>().join(", ")
        ),
        TypeExpr::Matrix(idx, e) => format!(
            "matrix indexed by [{}] of {}",
            idx.iter().map(print_type).collect::<Vec<_>>().join(", "),
            print_type(e)
        ),
    }
}

fn print_attr(a: &SizeAttr) -> String {
    match a {
        SizeAttr::Exact(n) => format!("(size {n}) "),
        SizeAttr::MaxSize(n) => format!("(maxsize {n}) "),
        SizeAttr::Unbounded => String::new(),
        SizeAttr::ExactExpr(e) => format!("(size {}) ", print_expr(e)),
        SizeAttr::MaxSizeExpr(e) => format!("(maxsize {}) ", print_expr(e)),
    }
}

fn is_atomic(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Ref(_)
            | Expr::BoolLit(_)
            | Expr::MatrixIndex(..)
            | Expr::FuncApp(..)
            | Expr::RelProj(..)
            | Expr::TupleIndex(..)
            | Expr::SetLit(_)
            | Expr::TupleLit(_)
            | Expr::FuncLit(_)
            | Expr::RelLit(_)
    ) || matches!(e, Expr::IntLit(v) if *v >= 0)
}

fn paren(e: &Expr) -> String {
    if is_atomic(e) {
        print_expr(e)
    } else {
        format!("({})", print_expr(e))
    }
}

fn binop_text(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Mod => "%",
        BinOp::Eq => "=",
        BinOp::Neq => "!=",
        BinOp::Lt => "<",
        BinOp::Gt => ">",
        BinOp::Le => "<=",
        BinOp::Ge => ">=",
        BinOp::And => "/\\",
        BinOp::Or => "\\/",
        BinOp::Implies => "=>",
        BinOp::Iff => "<=>",
        BinOp::Elem => "elem",
        BinOp::Union => "union",
        BinOp::Intersect => "intersect",
        BinOp::Subset => "subset",
        BinOp::SubsetEq => "subseteq",
        BinOp::Supset => "supset",
        BinOp::SupsetEq => "supseteq",
    }
}

/// Deterministic text form. Compound operands are always parenthesized, so
/// the output re-parses to the same tree regardless of precedence.
pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::IntLit(v) => v.to_string(),
        Expr::BoolLit(b) => b.to_string(),
        Expr::Ref(n) => n.clone(),
        Expr::UnOp(UnOp::Not, a) => format!("not {}", paren(a)),
        Expr::UnOp(UnOp::Neg, a) => format!("-{}", paren(a)),
        Expr::UnOp(op, a) => {
            let name = match op {
                UnOp::Abs => "abs",
                UnOp::Card => "card",
                UnOp::Min => "min",
                UnOp::Max => "max",
                UnOp::Defined => "defined",
                UnOp::Range => "range",
                UnOp::AllDiff => "alldiff",
                UnOp::Not | UnOp::Neg => unreachable!(),
            };
            format!("{name}({})", print_expr(a))
        }
        Expr::BinOp(op, a, b) => format!("{} {} {}", paren(a), binop_text(*op), paren(b)),
        Expr::Quant { kind, binder, over, body } => {
            let k = match kind {
                QuantKind::Forall => "forall",
                QuantKind::Exists => "exists",
                QuantKind::Sum => "sum",
            };
            let o = match over {
                QuantDomain::Domain(t) => print_type(t),
                QuantDomain::Collection(c) => paren(c),
            };
            format!("{k} {binder} : {o} . {}", print_expr(body))
        }
        Expr::MatrixIndex(b, idx) => format!(
            "{}[{}]",
            paren(b),
            idx.iter().map(print_expr).collect::<Vec<_>>().join(", ")
        ),
        Expr::TupleIndex(b, j) => format!("{}<{j}>", paren(b)),
        Expr::FuncApp(f, x) => format!("{}({})", paren(f), print_expr(x)),
        Expr::FuncInvApp(f, x) => format!("{}(<- {})", paren(f), print_expr(x)),
        Expr::RelProj(r, args) => {
            let a: Vec<String> = args
                .iter()
                .map(|x| match x {
                    ProjArg::Expr(e2) => print_expr(e2),
                    ProjArg::Underscore => "_".into(),
                })
                .collect();
            format!("{}<{}>", paren(r), a.join(", "))
        }
        Expr::SetLit(es) => format!(
            "{{{}}}",
            es.iter().map(print_expr).collect::<Vec<_>>().join(", ")
        ),
        Expr::TupleLit(es) => format!(
            "tuple ({})",
            es.iter().map(print_expr).collect::<Vec<_>>().join(", ")
        ),
        Expr::FuncLit(ps) => format!(
            "function ({})",
            ps.iter()
                .map(|(a, b)| format!("{} --> {}", print_expr(a), print_expr(b)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        Expr::RelLit(es) => format!(
            "relation ({})",
            es.iter().map(print_expr).collect::<Vec<_>>().join(", ")
        ),
        Expr::Bubble { value, helpers, .. } => {
            format!("{} @ {}", paren(value), paren(helpers))
        }
    }
}

/// The complete model text: comments with metadata, declarations, objective
/// and constraints. Deterministic and re-parseable.
pub fn print_model(fm: &FlatModel) -> String {
    let mut out = String::new();
    if !fm.rep_summary.is_empty() {
        out.push_str(&format!("$ rep: {}\n", fm.rep_summary.join(" ")));
    }
    if !fm.rule_trace.is_empty() {
        out.push_str(&format!("$ rules: {}\n", fm.rule_trace.join(",")));
    }
    for d in &fm.spec.decls {
        match d.kind {
            DeclKind::Letting => {
                if let Some(v) = &d.value {
                    out.push_str(&format!("letting {} be {}\n", d.name, print_expr(v)));
                }
            }
            DeclKind::LettingDomain => {
                out.push_str(&format!(
                    "letting {} be domain {}\n",
                    d.name,
                    print_type(&d.domain)
                ));
            }
            DeclKind::Given => {
                out.push_str(&format!("given {} : {}\n", d.name, print_type(&d.domain)));
            }
            DeclKind::Find | DeclKind::AuxFind => {
                out.push_str(&format!("find {} : {}\n", d.name, print_type(&d.domain)));
            }
        }
    }
    if let Some((dir, obj)) = &fm.spec.objective {
        let word = match dir {
            OptDir::Maximising => "maximising",
            OptDir::Minimising => "minimising",
        };
        out.push_str(&format!("{word} {}\n", print_expr(obj)));
    }
    if !fm.spec.constraints.is_empty() {
        out.push_str("such that\n");
        let lines: Vec<String> = fm
            .spec
            .constraints
            .iter()
            .map(|c| format!("    {}", print_expr(c)))
            .collect();
        out.push_str(&lines.join(",\n"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_spec_text;

    #[test]
    fn fix_names_renames_binders_and_aux_in_order() {
        let mut spec = parse_spec_text(
            "find x : int(1..3) such that forall i : int(1..3) . exists j : int(1..3) . i = j",
        )
        .unwrap();
        spec.decls.push(Decl::aux("zz", TypeExpr::IntRange(0, 3)));
        spec.decls.push(Decl::aux("mm", TypeExpr::IntRange(0, 3)));
        spec.constraints.push(Expr::eq(Expr::Ref("mm".into()), Expr::Ref("zz".into())));
        fix_names(&mut spec);
        // binders depth-first
        match &spec.constraints[0] {
            Expr::Quant { binder, body, .. } => {
                assert_eq!(binder, "q_1");
                match &**body {
                    Expr::Quant { binder, .. } => assert_eq!(binder, "q_2"),
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
        // mm occurs first, so it becomes aux_1
        assert_eq!(
            spec.constraints[1],
            Expr::eq(Expr::Ref("aux_1".into()), Expr::Ref("aux_2".into()))
        );
        let before = spec.clone();
        fix_names(&mut spec);
        assert_eq!(spec, before, "name fixing must be idempotent");
    }

    #[test]
    fn flatness_scan_accepts_flat_and_rejects_abstract() {
        let flat = parse_spec_text(
            "letting f be function (1 --> 2, 2 --> 1) \
             find m : matrix indexed by [int(1..2)] of bool \
             such that forall q_1 : int(1..2) . (m[q_1] = true) => (f(q_1) >= 1)",
        )
        .unwrap();
        assert!(flatness_violations(&flat).is_empty());

        let abstract_spec =
            parse_spec_text("find x : set of int(1..3) such that 2 elem x").unwrap();
        assert!(!flatness_violations(&abstract_spec).is_empty());
    }

    #[test]
    fn printed_model_reparses_identically() {
        let text = "letting f be function (1 --> 2, 2 --> 1) \
             find m : matrix indexed by [int(1..2)] of bool \
             find y : int(0..2) \
             maximising y + 1 \
             such that forall q_1 : int(1..2) . (m[q_1] = true) => (f(q_1) >= y), \
             alldiff(m) = alldiff(m)";
        let spec = parse_spec_text(text).unwrap();
        let fm = FlatModel {
            spec,
            rep_summary: vec!["x#occurrence".into()],
            rule_trace: vec!["rule_set_elem".into()],
            spec_hash: "abc".into(),
        };
        let printed = print_model(&fm);
        let reparsed = parse_spec_text(&printed).expect("printed model must parse");
        let fm2 = FlatModel { spec: reparsed, ..fm.clone() };
        assert_eq!(print_model(&fm2), printed, "print is a fixpoint of parse∘print");
    }

    #[test]
    fn types_print_in_surface_syntax() {
        assert_eq!(print_type(&TypeExpr::IntRange(1, 3)), "int(1..3)");
        assert_eq!(
            print_type(&TypeExpr::Set(
                SizeAttr::MaxSize(2),
                Box::new(TypeExpr::IntRange(1, 3))
            )),
            "set (maxsize 2) of int(1..3)"
        );
        assert_eq!(
            print_type(&TypeExpr::Matrix(
                vec![TypeExpr::IntRange(1, 2), TypeExpr::IntRange(1, 3)],
                Box::new(TypeExpr::Bool)
            )),
            "matrix indexed by [int(1..2), int(1..3)] of bool"
        );
        let f = TypeExpr::Function(
            FuncAttrs { total: true, injective: true, surjective: false },
            Box::new(TypeExpr::IntRange(1, 2)),
            Box::new(TypeExpr::IntRange(1, 2)),
        );
        assert_eq!(print_type(&f), "function (total, injective) int(1..2) -> int(1..2)");
    }
}
