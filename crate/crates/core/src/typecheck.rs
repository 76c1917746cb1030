//! Validation, type checking and parameter instantiation.
//!
//! Validation checks name resolution and domain well-formedness without
//! typing expressions. Type checking types every expression shape-level
//! (integer ranges compare equal regardless of bounds, since symbolic bounds
//! are not resolved yet) and normalizes `t<k>` on tuple-typed bases from a
//! projection node into a static component access. Instantiation merges a
//! parameter file into the specification: givens become lettings, domain
//! aliases and symbolic ranges are resolved, and everything left must be
//! concrete and finite.

use crate::ast::*;
use crate::diag::{Diagnostic, Phase};
use crate::eval::{domain_count, eval_expr, value_conforms, value_to_expr, Env, Value};
use std::collections::{BTreeMap, BTreeSet};

// ---------------------------------------------------------------------------
// validation

pub fn validate_spec(spec: &Spec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for d in &spec.decls {
        if !seen.insert(&d.name) {
            diags.push(Diagnostic::error(
                Phase::Validate,
                d.pos,
                format!("`{}` is declared more than once", d.name),
            ));
        }
        check_domain(&d.domain, d.pos, spec, &mut diags);
    }
    let names: BTreeSet<&str> = spec.decls.iter().map(|d| d.name.as_str()).collect();
    let mut check_expr = |e: &Expr| {
        let mut scope: Vec<String> = Vec::new();
        check_refs(e, &names, &mut scope, spec, &mut diags);
    };
    for d in &spec.decls {
        if let Some(v) = &d.value {
            check_expr(v);
        }
    }
    if let Some((_, obj)) = &spec.objective {
        check_expr(obj);
    }
    for c in &spec.constraints {
        check_expr(c);
    }
    diags
}

fn check_domain(t: &TypeExpr, pos: Pos, spec: &Spec, diags: &mut Vec<Diagnostic>) {
    match t {
        TypeExpr::IntRange(l, h) => {
            if l > h {
                diags.push(Diagnostic::warning(
                    Phase::Validate,
                    pos,
                    format!("empty integer range int({l}..{h})"),
                ));
            }
        }
        TypeExpr::Set(attr, elem) | TypeExpr::MSet(attr, elem) => {
            if let (SizeAttr::Exact(k), Ok(Some(n))) = (attr, domain_count(elem)) {
                if !matches!(**elem, TypeExpr::MSet(..)) && (*k as u128) > n {
                    diags.push(Diagnostic::warning(
                        Phase::Validate,
                        pos,
                        format!("size {k} exceeds the {n} values of the element domain"),
                    ));
                }
            }
            if let SizeAttr::Exact(k) | SizeAttr::MaxSize(k) = attr {
                if *k < 0 {
                    diags.push(Diagnostic::error(Phase::Validate, pos, "negative size attribute"));
                }
            }
            check_domain(elem, pos, spec, diags);
        }
        TypeExpr::Function(_, from, to) => {
            if matches!(
                **from,
                TypeExpr::Set(..)
                    | TypeExpr::MSet(..)
                    | TypeExpr::Function(..)
                    | TypeExpr::Relation(..)
                    | TypeExpr::Matrix(..)
            ) {
                diags.push(Diagnostic::error(Phase::Validate, pos, "unsupported function domain"));
            }
            check_domain(from, pos, spec, diags);
            check_domain(to, pos, spec, diags);
        }
        TypeExpr::Relation(cs) | TypeExpr::Tuple(cs) => {
            for c in cs {
                check_domain(c, pos, spec, diags);
            }
        }
        TypeExpr::Matrix(idx, elem) => {
            for i in idx {
                check_domain(i, pos, spec, diags);
            }
            check_domain(elem, pos, spec, diags);
        }
        TypeExpr::Named(n) => {
            let ok = spec
                .decls
                .iter()
                .any(|d| d.name == *n && d.kind == DeclKind::LettingDomain);
            if !ok {
                diags.push(Diagnostic::error(
                    Phase::Validate,
                    pos,
                    format!("`{n}` is not a declared domain alias"),
                ));
            }
        }
        TypeExpr::Bool | TypeExpr::IntUnbounded | TypeExpr::IntRangeExpr(..) => {}
    }
}

fn check_refs(
    e: &Expr,
    names: &BTreeSet<&str>,
    scope: &mut Vec<String>,
    spec: &Spec,
    diags: &mut Vec<Diagnostic>,
) {
    match e {
        Expr::Ref(n) => {
            if !scope.iter().any(|b| b == n) && !names.contains(n.as_str()) {
                diags.push(Diagnostic::error(
                    Phase::Validate,
                    Pos::default(),
                    format!("`{n}` is not declared"),
                ));
            }
        }
        Expr::Quant { binder, over, body, .. } => {
            match over {
                QuantDomain::Collection(c) => check_refs(c, names, scope, spec, diags),
                QuantDomain::Domain(t) => check_domain(t, Pos::default(), spec, diags),
            }
            if scope.iter().any(|b| b == binder) || names.contains(binder.as_str()) {
                diags.push(Diagnostic::warning(
                    Phase::Validate,
                    Pos::default(),
                    format!("binder `{binder}` shadows an enclosing name"),
                ));
            }
            scope.push(binder.clone());
            check_refs(body, names, scope, spec, diags);
            scope.pop();
        }
        _ => {
            for c in e.children() {
                check_refs(c, names, scope, spec, diags);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// typing

/// Replace domain aliases throughout a type (shape-level typing only;
/// symbolic ranges are left alone).
fn resolve_alias(spec: &Spec, t: &TypeExpr) -> TypeExpr {
    match t {
        TypeExpr::Named(n) => match spec.decl(n) {
            Some(d) if d.kind == DeclKind::LettingDomain => resolve_alias(spec, &d.domain),
            _ => t.clone(),
        },
        TypeExpr::Set(a, e) => TypeExpr::Set(a.clone(), Box::new(resolve_alias(spec, e))),
        TypeExpr::MSet(a, e) => TypeExpr::MSet(a.clone(), Box::new(resolve_alias(spec, e))),
        TypeExpr::Function(attrs, a, b) => TypeExpr::Function(
            *attrs,
            Box::new(resolve_alias(spec, a)),
            Box::new(resolve_alias(spec, b)),
        ),
        TypeExpr::Relation(cs) => {
            TypeExpr::Relation(cs.iter().map(|c| resolve_alias(spec, c)).collect())
        }
        TypeExpr::Tuple(cs) => TypeExpr::Tuple(cs.iter().map(|c| resolve_alias(spec, c)).collect()),
        TypeExpr::Matrix(idx, e) => TypeExpr::Matrix(
            idx.iter().map(|c| resolve_alias(spec, c)).collect(),
            Box::new(resolve_alias(spec, e)),
        ),
        _ => t.clone(),
    }
}

type TResult = Result<TypeExpr, String>;

/// Shape-level type of `e`. `binders` maps quantifier binders (and bubble
/// auxiliaries) in scope, innermost last.
pub fn type_of(e: &Expr, spec: &Spec, binders: &[(String, TypeExpr)]) -> TResult {
    match e {
        Expr::IntLit(v) => Ok(TypeExpr::IntRange(*v, *v)),
        Expr::BoolLit(_) => Ok(TypeExpr::Bool),
        Expr::Ref(n) => {
            if let Some((_, t)) = binders.iter().rev().find(|(b, _)| b == n) {
                return Ok(t.clone());
            }
            match spec.decl(n) {
                Some(d) if d.kind == DeclKind::LettingDomain => {
                    Err(format!("domain alias `{n}` used as a value"))
                }
                Some(d) => {
                    if matches!(d.domain, TypeExpr::IntUnbounded) {
                        if let Some(v) = &d.value {
                            return type_of(v, spec, binders);
                        }
                    }
                    Ok(resolve_alias(spec, &d.domain))
                }
                None => Err(format!("`{n}` is not declared")),
            }
        }
        Expr::UnOp(op, a) => {
            let ta = type_of(a, spec, binders)?;
            match op {
                UnOp::Abs | UnOp::Neg => {
                    expect_intlike(&ta, "an arithmetic operand")?;
                    Ok(TypeExpr::IntUnbounded)
                }
                UnOp::Not => {
                    expect_bool(&ta, "`not`")?;
                    Ok(TypeExpr::Bool)
                }
                UnOp::Card => match ta {
                    TypeExpr::Set(..) | TypeExpr::MSet(..) | TypeExpr::Relation(..) => {
                        Ok(TypeExpr::IntUnbounded)
                    }
                    other => Err(format!("card of a non-collection {other:?}")),
                },
                UnOp::Min | UnOp::Max => match ta {
                    TypeExpr::Set(_, e) if e.is_int() => Ok(*e),
                    other => Err(format!("min/max of {other:?}, expected a set of int")),
                },
                UnOp::Defined => match ta {
                    TypeExpr::Function(_, from, _) => Ok(TypeExpr::Set(SizeAttr::Unbounded, from)),
                    other => Err(format!("defined of a non-function {other:?}")),
                },
                UnOp::Range => match ta {
                    TypeExpr::Function(_, _, to) => Ok(TypeExpr::Set(SizeAttr::Unbounded, to)),
                    other => Err(format!("range of a non-function {other:?}")),
                },
                UnOp::AllDiff => match ta {
                    TypeExpr::Matrix(..) => Ok(TypeExpr::Bool),
                    other => Err(format!("alldiff of a non-matrix {other:?}")),
                },
            }
        }
        Expr::BinOp(op, a, b) => {
            let ta = type_of(a, spec, binders)?;
            let tb = type_of(b, spec, binders)?;
            use BinOp::*;
            match op {
                Add | Sub | Mul | Div | Mod => {
                    expect_intlike(&ta, "an arithmetic operand")?;
                    expect_intlike(&tb, "an arithmetic operand")?;
                    Ok(TypeExpr::IntUnbounded)
                }
                Lt | Gt | Le | Ge => {
                    expect_intlike(&ta, "a comparison operand")?;
                    expect_intlike(&tb, "a comparison operand")?;
                    Ok(TypeExpr::Bool)
                }
                Eq | Neq => {
                    if !ta.compatible(&tb) && !(is_intlike(&ta) && is_intlike(&tb)) {
                        return Err(format!("incomparable operand types {ta:?} and {tb:?}"));
                    }
                    Ok(TypeExpr::Bool)
                }
                And | Or | Implies | Iff => {
                    expect_bool(&ta, "a logical operand")?;
                    expect_bool(&tb, "a logical operand")?;
                    Ok(TypeExpr::Bool)
                }
                Elem => match &tb {
                    TypeExpr::Set(_, elem) | TypeExpr::MSet(_, elem) => {
                        if !ta.compatible(elem) {
                            return Err(format!(
                                "membership of {ta:?} in a collection of {elem:?}"
                            ));
                        }
                        Ok(TypeExpr::Bool)
                    }
                    TypeExpr::Relation(cs) => {
                        // a unary relation is viewed as a set of its scalar component
                        let elem_ok = match cs.as_slice() {
                            [c] => ta.compatible(c),
                            _ => ta.compatible(&TypeExpr::Tuple(cs.clone())),
                        };
                        if !elem_ok {
                            return Err("relation membership needs a matching tuple".into());
                        }
                        Ok(TypeExpr::Bool)
                    }
                    other => Err(format!("membership in a non-collection {other:?}")),
                },
                Union | Intersect => match (&ta, &tb) {
                    (TypeExpr::Set(_, e1), TypeExpr::Set(_, e2)) if e1.compatible(e2) => {
                        Ok(TypeExpr::Set(SizeAttr::Unbounded, e1.clone()))
                    }
                    _ => Err(format!("set operation on {ta:?} and {tb:?}")),
                },
                Subset | SubsetEq | Supset | SupsetEq => match (&ta, &tb) {
                    (TypeExpr::Set(_, e1), TypeExpr::Set(_, e2)) if e1.compatible(e2) => {
                        Ok(TypeExpr::Bool)
                    }
                    _ => Err(format!("set comparison of {ta:?} and {tb:?}")),
                },
            }
        }
        Expr::Quant { kind, binder, over, body } => {
            let bt = binder_type(over, spec, binders)?;
            let mut inner = binders.to_vec();
            inner.push((binder.clone(), bt));
            let tbody = type_of(body, spec, &inner)?;
            match kind {
                QuantKind::Forall | QuantKind::Exists => {
                    expect_bool(&tbody, "a quantifier body")?;
                    Ok(TypeExpr::Bool)
                }
                QuantKind::Sum => {
                    if !is_intlike(&tbody) && !tbody.is_bool() {
                        return Err(format!("sum body has type {tbody:?}"));
                    }
                    Ok(TypeExpr::IntUnbounded)
                }
            }
        }
        Expr::MatrixIndex(base, idx) => {
            let tb = type_of(base, spec, binders)?;
            match tb {
                TypeExpr::Matrix(dims, elem) => {
                    if idx.len() > dims.len() {
                        return Err(format!(
                            "{} indices into a {}-dimensional matrix",
                            idx.len(),
                            dims.len()
                        ));
                    }
                    for i in idx {
                        expect_intlike(&type_of(i, spec, binders)?, "a matrix index")?;
                    }
                    if idx.len() == dims.len() {
                        Ok(*elem)
                    } else {
                        Ok(TypeExpr::Matrix(dims[idx.len()..].to_vec(), elem))
                    }
                }
                other => Err(format!("indexing into a non-matrix {other:?}")),
            }
        }
        Expr::TupleIndex(base, i) => match type_of(base, spec, binders)? {
            TypeExpr::Tuple(cs) => cs
                .get(*i)
                .cloned()
                .ok_or_else(|| format!("tuple component {} of a {}-tuple", i + 1, cs.len())),
            other => Err(format!("component access on a non-tuple {other:?}")),
        },
        Expr::FuncApp(f, a) => {
            let tf = type_of(f, spec, binders)?;
            match tf {
                TypeExpr::Function(_, from, to) => {
                    let ta = type_of(a, spec, binders)?;
                    if !ta.compatible(&from) {
                        return Err(format!("function applied to {ta:?}, expected {from:?}"));
                    }
                    Ok(*to)
                }
                other => Err(format!("applying a non-function {other:?}")),
            }
        }
        Expr::FuncInvApp(f, a) => {
            let tf = type_of(f, spec, binders)?;
            match tf {
                TypeExpr::Function(_, from, to) => {
                    let ta = type_of(a, spec, binders)?;
                    if !ta.compatible(&to) {
                        return Err(format!(
                            "inverse application to {ta:?}, expected {to:?}"
                        ));
                    }
                    Ok(*from)
                }
                other => Err(format!("inverse-applying a non-function {other:?}")),
            }
        }
        Expr::RelProj(base, args) => {
            let tb = type_of(base, spec, binders)?;
            match tb {
                TypeExpr::Relation(cs) => {
                    if args.len() != cs.len() {
                        return Err(format!(
                            "projection has {} arguments, relation has {} components",
                            args.len(),
                            cs.len()
                        ));
                    }
                    let mut free = Vec::new();
                    for (a, c) in args.iter().zip(&cs) {
                        match a {
                            ProjArg::Expr(e) => {
                                let ta = type_of(e, spec, binders)?;
                                if !ta.compatible(c) {
                                    return Err(format!(
                                        "projection argument {ta:?} incompatible with component {c:?}"
                                    ));
                                }
                            }
                            ProjArg::Underscore => free.push(c.clone()),
                        }
                    }
                    if free.is_empty() {
                        Ok(TypeExpr::Bool)
                    } else {
                        Ok(TypeExpr::Relation(free))
                    }
                }
                TypeExpr::Tuple(cs) => {
                    // `t<k>`: static component access, 0-based (normalized elsewhere)
                    match args.as_slice() {
                        [ProjArg::Expr(Expr::IntLit(k))] => {
                            if *k < 0 || *k as usize >= cs.len() {
                                Err(format!("tuple component {k} of a {}-tuple", cs.len()))
                            } else {
                                Ok(cs[*k as usize].clone())
                            }
                        }
                        _ => Err("tuple component access needs one integer literal".into()),
                    }
                }
                other => Err(format!("projecting a non-relation {other:?}")),
            }
        }
        Expr::TupleLit(es) => Ok(TypeExpr::Tuple(
            es.iter().map(|x| type_of(x, spec, binders)).collect::<Result<_, _>>()?,
        )),
        Expr::SetLit(es) => {
            let mut elem: Option<TypeExpr> = None;
            for x in es {
                let t = type_of(x, spec, binders)?;
                match &elem {
                    None => elem = Some(t),
                    Some(prev) if prev.compatible(&t) => {}
                    Some(prev) => {
                        return Err(format!("set literal mixes {prev:?} and {t:?}"));
                    }
                }
            }
            Ok(TypeExpr::Set(
                SizeAttr::Unbounded,
                Box::new(elem.unwrap_or(TypeExpr::IntUnbounded)),
            ))
        }
        Expr::FuncLit(ps) => {
            let mut from: Option<TypeExpr> = None;
            let mut to: Option<TypeExpr> = None;
            for (a, b) in ps {
                let ta = type_of(a, spec, binders)?;
                let tb = type_of(b, spec, binders)?;
                match &from {
                    None => from = Some(ta),
                    Some(p) if p.compatible(&ta) => {}
                    Some(p) => return Err(format!("function literal mixes {p:?} and {ta:?}")),
                }
                match &to {
                    None => to = Some(tb),
                    Some(p) if p.compatible(&tb) => {}
                    Some(p) => return Err(format!("function literal mixes {p:?} and {tb:?}")),
                }
            }
            Ok(TypeExpr::Function(
                FuncAttrs::default(),
                Box::new(from.unwrap_or(TypeExpr::IntUnbounded)),
                Box::new(to.unwrap_or(TypeExpr::IntUnbounded)),
            ))
        }
        Expr::RelLit(ts) => {
            let mut comps: Option<Vec<TypeExpr>> = None;
            for t in ts {
                match type_of(t, spec, binders)? {
                    TypeExpr::Tuple(cs) => match &comps {
                        None => comps = Some(cs),
                        Some(prev)
                            if prev.len() == cs.len()
                                && prev.iter().zip(&cs).all(|(a, b)| a.compatible(b)) => {}
                        Some(_) => return Err("relation literal mixes tuple shapes".into()),
                    },
                    other => {
                        return Err(format!("relation literal element {other:?} is not a tuple"))
                    }
                }
            }
            Ok(TypeExpr::Relation(comps.unwrap_or_default()))
        }
        Expr::Bubble { value, helpers, aux } => {
            let mut inner = binders.to_vec();
            for d in aux {
                inner.push((d.name.clone(), d.domain.clone()));
            }
            let th = type_of(helpers, spec, &inner)?;
            expect_bool(&th, "bubble helper constraints")?;
            type_of(value, spec, &inner)
        }
    }
}

fn is_intlike(t: &TypeExpr) -> bool {
    t.is_int() || t.is_bool()
}

fn expect_intlike(t: &TypeExpr, what: &str) -> Result<(), String> {
    if is_intlike(t) {
        Ok(())
    } else {
        Err(format!("expected an integer for {what}, got {t:?}"))
    }
}

fn expect_bool(t: &TypeExpr, what: &str) -> Result<(), String> {
    if t.is_bool() {
        Ok(())
    } else {
        Err(format!("expected a boolean for {what}, got {t:?}"))
    }
}

fn binder_type(
    over: &QuantDomain,
    spec: &Spec,
    binders: &[(String, TypeExpr)],
) -> TResult {
    match over {
        QuantDomain::Domain(t) => Ok(resolve_alias(spec, t)),
        QuantDomain::Collection(c) => match type_of(c, spec, binders)? {
            TypeExpr::Set(_, e) | TypeExpr::MSet(_, e) => Ok(*e),
            TypeExpr::Relation(cs) => Ok(TypeExpr::Tuple(cs)),
            other => Err(format!("cannot quantify over {other:?}")),
        },
    }
}

/// Rewrite `t<k>` (projection syntax on tuple-typed bases) into static
/// component accesses, bottom-up.
fn normalize_expr(
    e: &Expr,
    spec: &Spec,
    binders: &mut Vec<(String, TypeExpr)>,
) -> Result<Expr, String> {
    let e = match e {
        Expr::Quant { kind, binder, over, body } => {
            let over2 = match over {
                QuantDomain::Domain(t) => QuantDomain::Domain(t.clone()),
                QuantDomain::Collection(c) => {
                    QuantDomain::Collection(Box::new(normalize_expr(c, spec, binders)?))
                }
            };
            let bt = binder_type(&over2, spec, binders)?;
            binders.push((binder.clone(), bt));
            let body2 = normalize_expr(body, spec, binders)?;
            binders.pop();
            Expr::Quant { kind: *kind, binder: binder.clone(), over: over2, body: Box::new(body2) }
        }
        Expr::Bubble { value, helpers, aux } => {
            for d in aux {
                binders.push((d.name.clone(), d.domain.clone()));
            }
            let v = normalize_expr(value, spec, binders)?;
            let h = normalize_expr(helpers, spec, binders)?;
            for _ in aux {
                binders.pop();
            }
            Expr::Bubble { value: Box::new(v), helpers: Box::new(h), aux: aux.clone() }
        }
        Expr::RelProj(base, args) => {
            let base2 = normalize_expr(base, spec, binders)?;
            let mut args2 = Vec::with_capacity(args.len());
            for a in args {
                args2.push(match a {
                    ProjArg::Expr(x) => ProjArg::Expr(normalize_expr(x, spec, binders)?),
                    ProjArg::Underscore => ProjArg::Underscore,
                });
            }
            let tb = type_of(&base2, spec, binders)?;
            if let TypeExpr::Tuple(cs) = tb {
                match args2.as_slice() {
                    [ProjArg::Expr(Expr::IntLit(k))] if *k >= 0 && (*k as usize) < cs.len() => {
                        Expr::TupleIndex(Box::new(base2), *k as usize)
                    }
                    _ => {
                        return Err(
                            "tuple component access needs one integer literal in range".into()
                        )
                    }
                }
            } else {
                Expr::RelProj(Box::new(base2), args2)
            }
        }
        Expr::UnOp(op, a) => Expr::UnOp(*op, Box::new(normalize_expr(a, spec, binders)?)),
        Expr::BinOp(op, a, b) => Expr::BinOp(
            *op,
            Box::new(normalize_expr(a, spec, binders)?),
            Box::new(normalize_expr(b, spec, binders)?),
        ),
        Expr::MatrixIndex(b, idx) => Expr::MatrixIndex(
            Box::new(normalize_expr(b, spec, binders)?),
            idx.iter().map(|i| normalize_expr(i, spec, binders)).collect::<Result<_, _>>()?,
        ),
        Expr::TupleIndex(b, i) => Expr::TupleIndex(Box::new(normalize_expr(b, spec, binders)?), *i),
        Expr::FuncApp(f, a) => Expr::FuncApp(
            Box::new(normalize_expr(f, spec, binders)?),
            Box::new(normalize_expr(a, spec, binders)?),
        ),
        Expr::FuncInvApp(f, a) => Expr::FuncInvApp(
            Box::new(normalize_expr(f, spec, binders)?),
            Box::new(normalize_expr(a, spec, binders)?),
        ),
        Expr::TupleLit(es) => Expr::TupleLit(
            es.iter().map(|x| normalize_expr(x, spec, binders)).collect::<Result<_, _>>()?,
        ),
        Expr::SetLit(es) => Expr::SetLit(
            es.iter().map(|x| normalize_expr(x, spec, binders)).collect::<Result<_, _>>()?,
        ),
        Expr::RelLit(es) => Expr::RelLit(
            es.iter().map(|x| normalize_expr(x, spec, binders)).collect::<Result<_, _>>()?,
        ),
        Expr::FuncLit(ps) => Expr::FuncLit(
            ps.iter()
                .map(|(a, b)| {
                    Ok((normalize_expr(a, spec, binders)?, normalize_expr(b, spec, binders)?))
                })
                .collect::<Result<_, String>>()?,
        ),
        Expr::IntLit(_) | Expr::BoolLit(_) | Expr::Ref(_) => e.clone(),
    };
    Ok(e)
}

/// Type-check (and normalize) all expressions of a specification in place.
/// Constraints must be boolean, the objective integer.
pub fn typecheck_spec(spec: &mut Spec) -> Result<(), Diagnostic> {
    let mk = |msg: String| Diagnostic::error(Phase::TypeCheck, Pos::default(), msg);
    let snapshot = spec.clone();
    for d in &mut spec.decls {
        if let Some(v) = &d.value {
            let v2 = normalize_expr(v, &snapshot, &mut Vec::new()).map_err(mk)?;
            type_of(&v2, &snapshot, &[]).map_err(mk)?;
            d.value = Some(v2);
        }
    }
    if let Some((dir, obj)) = &spec.objective {
        let o2 = normalize_expr(obj, &snapshot, &mut Vec::new()).map_err(mk)?;
        let t = type_of(&o2, &snapshot, &[]).map_err(mk)?;
        if !is_intlike(&t) {
            return Err(mk(format!("objective has type {t:?}, expected int")));
        }
        spec.objective = Some((*dir, o2));
    }
    for c in spec.constraints.iter_mut() {
        let c2 = normalize_expr(c, &snapshot, &mut Vec::new()).map_err(mk)?;
        let t = type_of(&c2, &snapshot, &[]).map_err(mk)?;
        if !t.is_bool() {
            return Err(mk(format!("constraint has type {t:?}, expected bool")));
        }
        *c = c2;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// instantiation

/// Environment of all letting values, in declaration order.
pub fn letting_env(spec: &Spec) -> Result<Env, String> {
    let mut env = Env::default();
    for d in &spec.decls {
        if let Some(v) = &d.value {
            let val = eval_expr(v, &env).map_err(|e| e.0)?;
            env.insert(&d.name, val);
        }
    }
    Ok(env)
}

fn resolve_size(attr: &SizeAttr, env: &Env) -> Result<SizeAttr, String> {
    let eval_i = |e: &Expr| -> Result<i64, String> {
        match eval_expr(e, env).map_err(|x| x.0)? {
            Value::Int(n) => Ok(n),
            other => Err(format!("size attribute evaluated to {other:?}")),
        }
    };
    Ok(match attr {
        SizeAttr::ExactExpr(e) => SizeAttr::Exact(eval_i(e)?),
        SizeAttr::MaxSizeExpr(e) => SizeAttr::MaxSize(eval_i(e)?),
        other => other.clone(),
    })
}

/// Largest integer occurring anywhere in a value; used to close open ranges
/// from supplied parameter literals.
fn max_int_in(v: &Value) -> Option<i64> {
    match v {
        Value::Int(n) => Some(*n),
        Value::Bool(_) => None,
        Value::Set(s) => s.iter().filter_map(max_int_in).max(),
        Value::Tuple(t) => t.iter().filter_map(max_int_in).max(),
        Value::Func(m) => m.values().filter_map(max_int_in).max(),
        Value::Rel(r) => r.iter().flatten().filter_map(max_int_in).max(),
        Value::Matrix(cells, _) => cells.iter().filter_map(max_int_in).max(),
    }
}

/// The tightest simple domain containing a literal value; infers domains of
/// lettings declared without one.
fn domain_of_value(v: &Value) -> Result<TypeExpr, String> {
    fn join(ds: Vec<TypeExpr>) -> Result<TypeExpr, String> {
        let mut it = ds.into_iter();
        let mut acc = match it.next() {
            Some(d) => d,
            // an empty collection: any element domain serves
            None => TypeExpr::IntRange(1, 0),
        };
        for d in it {
            acc = match (acc, d) {
                (TypeExpr::IntRange(a, b), TypeExpr::IntRange(c, e)) => {
                    TypeExpr::IntRange(a.min(c), b.max(e))
                }
                (TypeExpr::Bool, TypeExpr::Bool) => TypeExpr::Bool,
                (TypeExpr::Tuple(xs), TypeExpr::Tuple(ys)) if xs.len() == ys.len() => {
                    TypeExpr::Tuple(
                        xs.into_iter()
                            .zip(ys)
                            .map(|(x, y)| join(vec![x, y]))
                            .collect::<Result<_, _>>()?,
                    )
                }
                (a, b) => return Err(format!("mixed element domains {a:?} and {b:?}")),
            };
        }
        Ok(acc)
    }
    Ok(match v {
        Value::Int(n) => TypeExpr::IntRange(*n, *n),
        Value::Bool(_) => TypeExpr::Bool,
        Value::Set(s) => TypeExpr::Set(
            SizeAttr::Unbounded,
            Box::new(join(s.iter().map(domain_of_value).collect::<Result<_, _>>()?)?),
        ),
        Value::Tuple(t) => TypeExpr::Tuple(
            t.iter().map(domain_of_value).collect::<Result<_, _>>()?,
        ),
        Value::Func(m) => {
            let from = join(m.keys().map(domain_of_value).collect::<Result<_, _>>()?)?;
            let total = match &from {
                TypeExpr::IntRange(l, h) => m.len() as i64 == (h - l + 1).max(0),
                _ => false,
            };
            TypeExpr::Function(
                FuncAttrs { total, injective: false, surjective: false },
                Box::new(from),
                Box::new(join(m.values().map(domain_of_value).collect::<Result<_, _>>()?)?),
            )
        }
        Value::Rel(r) => {
            let arity = r.iter().map(|t| t.len()).max().unwrap_or(0);
            let mut cols = Vec::new();
            for j in 0..arity {
                cols.push(join(
                    r.iter()
                        .filter_map(|t| t.get(j))
                        .map(domain_of_value)
                        .collect::<Result<_, _>>()?,
                )?);
            }
            TypeExpr::Relation(cols)
        }
        Value::Matrix(..) => return Err("cannot infer a domain for a matrix value".into()),
    })
}

fn resolve_domain(
    t: &TypeExpr,
    spec: &Spec,
    env: &Env,
    hint: Option<&Value>,
) -> Result<TypeExpr, String> {
    let eval_i = |e: &Expr| -> Result<i64, String> {
        match eval_expr(e, env).map_err(|x| x.0)? {
            Value::Int(n) => Ok(n),
            other => Err(format!("range bound evaluated to {other:?}")),
        }
    };
    Ok(match t {
        TypeExpr::IntRange(..) | TypeExpr::Bool => t.clone(),
        TypeExpr::IntRangeExpr(lo, hi) => {
            let l = eval_i(lo)?;
            let h = match hi {
                Some(e) => eval_i(e)?,
                None => match hint.and_then(max_int_in) {
                    Some(m) => m.max(l),
                    None => return Err("open integer range with no value to close it".into()),
                },
            };
            TypeExpr::IntRange(l, h)
        }
        TypeExpr::IntUnbounded => match hint {
            Some(v) => domain_of_value(v)?,
            None => return Err("unbounded integer domain with no value to close it".into()),
        },
        TypeExpr::Named(n) => match spec.decl(n) {
            Some(d) if d.kind == DeclKind::LettingDomain => {
                resolve_domain(&d.domain, spec, env, hint)?
            }
            _ => return Err(format!("`{n}` is not a declared domain alias")),
        },
        TypeExpr::Set(attr, elem) => TypeExpr::Set(
            resolve_size(attr, env)?,
            Box::new(resolve_domain(elem, spec, env, None)?),
        ),
        TypeExpr::MSet(attr, elem) => TypeExpr::MSet(
            resolve_size(attr, env)?,
            Box::new(resolve_domain(elem, spec, env, None)?),
        ),
        TypeExpr::Function(attrs, from, to) => TypeExpr::Function(
            *attrs,
            Box::new(resolve_domain(from, spec, env, hint)?),
            Box::new(resolve_domain(to, spec, env, hint)?),
        ),
        TypeExpr::Relation(cs) => TypeExpr::Relation(
            cs.iter().map(|c| resolve_domain(c, spec, env, None)).collect::<Result<_, _>>()?,
        ),
        TypeExpr::Tuple(cs) => TypeExpr::Tuple(
            cs.iter().map(|c| resolve_domain(c, spec, env, None)).collect::<Result<_, _>>()?,
        ),
        TypeExpr::Matrix(idx, elem) => TypeExpr::Matrix(
            idx.iter().map(|i| resolve_domain(i, spec, env, None)).collect::<Result<_, _>>()?,
            Box::new(resolve_domain(elem, spec, env, None)?),
        ),
    })
}

fn resolve_domains_in_expr(e: &Expr, spec: &Spec, env: &Env) -> Result<Expr, String> {
    fn go(e: &Expr, spec: &Spec, env: &Env) -> Result<Expr, String> {
        match e {
            Expr::Quant { kind, binder, over, body } => {
                let over2 = match over {
                    QuantDomain::Domain(t) => {
                        QuantDomain::Domain(resolve_domain(t, spec, env, None)?)
                    }
                    QuantDomain::Collection(c) => {
                        QuantDomain::Collection(Box::new(go(c, spec, env)?))
                    }
                };
                Ok(Expr::Quant {
                    kind: *kind,
                    binder: binder.clone(),
                    over: over2,
                    body: Box::new(go(body, spec, env)?),
                })
            }
            _ => {
                let mut res: Result<(), String> = Ok(());
                let out = crate::ast::map_children(e, &mut |c| match go(c, spec, env) {
                    Ok(x) => x,
                    Err(err) => {
                        if res.is_ok() {
                            res = Err(err);
                        }
                        c.clone()
                    }
                });
                res.map(|_| out)
            }
        }
    }
    go(e, spec, env)
}

/// Merge parameter bindings into a specification. Givens become lettings,
/// all domains become concrete, symbolic bounds are evaluated.
pub fn instantiate(spec: &Spec, params: &[(String, Expr)]) -> Result<Spec, Diagnostic> {
    let mk = |msg: String| Diagnostic::error(Phase::TypeCheck, Pos::default(), msg);
    let param_map: BTreeMap<&str, &Expr> =
        params.iter().map(|(n, e)| (n.as_str(), e)).collect();
    for (n, _) in params {
        match spec.decl(n) {
            Some(d) if d.kind == DeclKind::Given => {}
            Some(_) => return Err(mk(format!("parameter `{n}` does not name a given"))),
            None => return Err(mk(format!("parameter `{n}` is not declared"))),
        }
    }

    let mut env = Env::default();
    let mut out = Spec { decls: Vec::new(), objective: None, constraints: Vec::new() };
    for d in &spec.decls {
        match d.kind {
            DeclKind::Given => {
                let pe = param_map
                    .get(d.name.as_str())
                    .ok_or_else(|| mk(format!("no value supplied for given `{}`", d.name)))?;
                let val = eval_expr(pe, &env).map_err(|e| mk(e.0))?;
                let dom = resolve_domain(&d.domain, spec, &env, Some(&val)).map_err(mk)?;
                if !value_conforms(&val, &dom) {
                    return Err(mk(format!(
                        "value supplied for `{}` does not fit its domain",
                        d.name
                    )));
                }
                env.insert(&d.name, val.clone());
                out.decls.push(Decl {
                    kind: DeclKind::Letting,
                    name: d.name.clone(),
                    domain: dom,
                    rep_tag: None,
                    value: Some(value_to_expr(&val)),
                    pos: d.pos,
                });
            }
            DeclKind::Letting => {
                let v = d.value.as_ref().expect("letting without value");
                let val = eval_expr(v, &env).map_err(|e| mk(e.0))?;
                let dom = resolve_domain(&d.domain, spec, &env, Some(&val)).map_err(mk)?;
                env.insert(&d.name, val.clone());
                out.decls.push(Decl {
                    kind: DeclKind::Letting,
                    name: d.name.clone(),
                    domain: dom,
                    rep_tag: None,
                    value: Some(value_to_expr(&val)),
                    pos: d.pos,
                });
            }
            DeclKind::LettingDomain => {
                // fully resolved into every use; not carried forward
            }
            DeclKind::Find | DeclKind::AuxFind => {
                let dom = resolve_domain(&d.domain, spec, &env, None).map_err(mk)?;
                if !dom.is_concrete() {
                    return Err(mk(format!(
                        "domain of `{}` is not concrete after instantiation",
                        d.name
                    )));
                }
                out.decls.push(Decl { domain: dom, value: None, ..d.clone() });
            }
        }
    }

    out.objective = match &spec.objective {
        Some((dir, e)) => Some((*dir, resolve_domains_in_expr(e, spec, &env).map_err(mk)?)),
        None => None,
    };
    for c in &spec.constraints {
        out.constraints.push(resolve_domains_in_expr(c, spec, &env).map_err(mk)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_param_text, parse_spec_text};

    const KNAPSACK: &str = "\
given      item_count,capacity : int
letting    item be domain int(1..item_count)
given      volume,value : function (total) item -> int(1..)
find       x : set of item
maximising sum i elem x . value(i)
such that  (sum i elem x . volume(i)) <= capacity
";

    const KNAPSACK_PARAM: &str = "\
letting item_count be 3
letting capacity be 4
letting volume be function (1 --> 2, 2 --> 3, 3 --> 4)
letting value be function (1 --> 3, 2 --> 4, 3 --> 5)
";

    #[test]
    fn validates_and_typechecks_knapsack() {
        let mut s = parse_spec_text(KNAPSACK).unwrap();
        let diags = validate_spec(&s);
        assert!(diags.is_empty(), "{diags:?}");
        typecheck_spec(&mut s).unwrap();
    }

    #[test]
    fn instantiates_knapsack() {
        let mut s = parse_spec_text(KNAPSACK).unwrap();
        typecheck_spec(&mut s).unwrap();
        let params = parse_param_text(KNAPSACK_PARAM).unwrap();
        let inst = instantiate(&s, &params).unwrap();
        // x : set of int(1..3)
        let x = inst.decl("x").unwrap();
        assert_eq!(
            x.domain,
            TypeExpr::Set(SizeAttr::Unbounded, Box::new(TypeExpr::IntRange(1, 3)))
        );
        // open codomain of `value` closed at the largest image, 5
        let v = inst.decl("value").unwrap();
        match &v.domain {
            TypeExpr::Function(attrs, from, to) => {
                assert!(attrs.total);
                assert_eq!(**from, TypeExpr::IntRange(1, 3));
                assert_eq!(**to, TypeExpr::IntRange(1, 5));
            }
            other => panic!("unexpected domain {other:?}"),
        }
        assert!(inst.decls.iter().all(|d| d.domain.is_concrete()));
    }

    #[test]
    fn rejects_unknown_reference() {
        let s = parse_spec_text("find x : int(1..3) such that x = y").unwrap();
        let diags = validate_spec(&s);
        assert!(diags.iter().any(|d| d.message.contains("`y` is not declared")));
    }

    #[test]
    fn rejects_function_from_set_domain() {
        let s =
            parse_spec_text("find f : function (total) set of int(1..2) -> int(1..2)").unwrap();
        let diags = validate_spec(&s);
        assert!(diags.iter().any(|d| d.message == "unsupported function domain"));
    }

    #[test]
    fn warns_on_unsatisfiable_size() {
        let s = parse_spec_text("find x : set (size 5) of int(1..3)").unwrap();
        let diags = validate_spec(&s);
        assert!(diags
            .iter()
            .any(|d| d.severity == crate::diag::Severity::Warning && d.message.contains("size 5")));
    }

    #[test]
    fn normalizes_tuple_component_access() {
        let mut s = parse_spec_text(
            "find t : tuple (int(1..2), bool) such that t<0> = 2, t<1> = true",
        )
        .unwrap();
        typecheck_spec(&mut s).unwrap();
        assert_eq!(
            s.constraints[0],
            Expr::eq(Expr::TupleIndex(Expr::bref("t"), 0), Expr::IntLit(2))
        );
        assert_eq!(
            s.constraints[1],
            Expr::eq(Expr::TupleIndex(Expr::bref("t"), 1), Expr::BoolLit(true))
        );
    }

    #[test]
    fn rejects_ill_typed_constraint() {
        let mut s = parse_spec_text("find x : set of int(1..3) such that x = 3").unwrap();
        assert!(typecheck_spec(&mut s).is_err());
        let mut s = parse_spec_text("find x : int(1..3) such that x + 1").unwrap();
        assert!(typecheck_spec(&mut s).is_err());
    }

    #[test]
    fn quantifier_over_collection_types_binder() {
        let mut s = parse_spec_text(
            "find r : relation of (int(1..2) * int(1..2)) such that forall t elem r . t<0> <= t<1>",
        )
        .unwrap();
        typecheck_spec(&mut s).unwrap();
        // t<1> on the tuple-typed binder becomes a component access
        match &s.constraints[0] {
            Expr::Quant { body, .. } => match &**body {
                Expr::BinOp(BinOp::Le, a, _) => {
                    assert!(matches!(**a, Expr::TupleIndex(_, 0)));
                }
                other => panic!("unexpected body {other:?}"),
            },
            other => panic!("unexpected constraint {other:?}"),
        }
    }

    #[test]
    fn missing_parameter_is_an_error() {
        let s = parse_spec_text("given n : int find x : int(1..n)").unwrap();
        let err = instantiate(&s, &[]).unwrap_err();
        assert!(err.message.contains("no value supplied"));
    }
}
