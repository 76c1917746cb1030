//! Representation selection (phase 4), channelling (phase 5) and structural
//! constraints (phase 6).
//!
//! Each abstract find-variable is assigned one representation tag per slot
//! (globally, or per constraint in per-constraint mode). Every tag induces
//! concretely named matrix declarations; the names are a fixed function of
//! the variable name and the tag, which is what lets the oracle decode flat
//! solutions back into abstract values:
//!
//! - `x_occ`      occurrence bitmap (bool matrix over the element domain)
//! - `x_exp`      explicit element list (fixed size)
//! - `x_expf`     explicit list with flags — a *virtual* matrix of
//!   `tuple (elem, bool)` whose component matrices `x_expf_t0` / `x_expf_t1`
//!   materialize through the matrix-of-tuples rule
//! - `x_1d`/`x_2d` function representations
//! - `r_set`      a relation's set-of-tuples view (virtual), occurrence-backed
//!   by `r_set_occ`
//! - `t_t0`, `t_t1`, … component variables of a tuple find-variable
//!
//! Virtual declarations carry abstract domains plus the inner tag; they exist
//! so the rewrite rules can type and refine accesses, and are dropped when
//! models are emitted.
//!
//! Explicit representations are canonicalized (strictly sorted, inactive
//! cells pinned), so each abstract object has exactly one flat encoding and
//! solution *counts* match the abstract specification. Sortedness of nested
//! (set-of-set) elements is expressed by strictly increasing an injective
//! integer encoding of each cell, built from literal positional weights.

use crate::ast::*;
use crate::diag::RefineError;
use std::collections::{BTreeMap, BTreeSet};

/// Where a representation choice applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Global,
    Objective,
    Constraint(usize),
}

pub type RepAssignment = BTreeMap<(String, Slot), RepTag>;

/// One refinement branch: a specification plus its representation choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepSpec {
    pub spec: Spec,
    pub assignment: RepAssignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepMode {
    SingleRep,
    PerConstraint,
}

// -- induced matrix names ----------------------------------------------------

pub fn occ_name(base: &str) -> String {
    format!("{base}_occ")
}
pub fn exp_name(base: &str) -> String {
    format!("{base}_exp")
}
pub fn expf_name(base: &str) -> String {
    format!("{base}_expf")
}
pub fn f1d_name(base: &str) -> String {
    format!("{base}_1d")
}
pub fn f2d_name(base: &str) -> String {
    format!("{base}_2d")
}
pub fn relset_name(base: &str) -> String {
    format!("{base}_set")
}
/// Tuple component matrix/variable, `<j>` of `base`.
pub fn tuple_comp_name(base: &str, j: usize) -> String {
    format!("{base}_t{j}")
}

// -- candidates ---------------------------------------------------------------

/// Index dimensions an occurrence bitmap needs for one element: a single int
/// range, or one range per component of a tuple of int ranges.
pub fn occurrence_dims(elem: &TypeExpr) -> Option<Vec<TypeExpr>> {
    match elem {
        TypeExpr::IntRange(..) => Some(vec![elem.clone()]),
        TypeExpr::Tuple(cs) if cs.iter().all(|c| matches!(c, TypeExpr::IntRange(..))) => {
            Some(cs.clone())
        }
        _ => None,
    }
}

/// All admissible representation tags for an abstract domain, in a fixed
/// order (the enumeration order of refinement branches).
pub fn candidate_reps(d: &TypeExpr, all_reps: bool) -> Result<Vec<RepTag>, String> {
    match d {
        TypeExpr::Set(attr, elem) => {
            let mut out = Vec::new();
            if occurrence_dims(elem).is_some() {
                out.push(RepTag::Occurrence);
            }
            let exact = matches!(attr, SizeAttr::Exact(_));
            let maxsize = matches!(attr, SizeAttr::MaxSize(_));
            match &**elem {
                TypeExpr::IntRange(..) => {
                    if exact {
                        out.push(RepTag::ExplicitFixed(None));
                    }
                    if maxsize || (exact && all_reps) {
                        out.push(RepTag::ExplicitFlags(None));
                    }
                }
                TypeExpr::Set(..) => {
                    let inner = candidate_reps(elem, all_reps)?;
                    if exact {
                        for i in &inner {
                            out.push(RepTag::ExplicitFixed(Some(Box::new(i.clone()))));
                        }
                    }
                    if maxsize || (exact && all_reps) {
                        for i in &inner {
                            out.push(RepTag::ExplicitFlags(Some(Box::new(i.clone()))));
                        }
                    }
                }
                _ => {}
            }
            if out.is_empty() {
                return Err(format!("no representation covers {d:?}"));
            }
            Ok(out)
        }
        TypeExpr::Function(attrs, from, to) => {
            let mut out = Vec::new();
            if matches!(**from, TypeExpr::IntRange(..)) && matches!(**to, TypeExpr::IntRange(..)) {
                if attrs.total {
                    out.push(RepTag::Func1D(None));
                }
                out.push(RepTag::Func2D);
            }
            if out.is_empty() {
                return Err(format!("no representation covers {d:?}"));
            }
            Ok(out)
        }
        TypeExpr::Relation(cs) => {
            if cs.iter().all(|c| matches!(c, TypeExpr::IntRange(..))) {
                Ok(vec![RepTag::RelSetOfTuples])
            } else {
                Err(format!("no representation covers {d:?}"))
            }
        }
        TypeExpr::Matrix(_, elem) => candidate_reps(elem, all_reps),
        other => Err(format!("no representation covers {other:?}")),
    }
}

/// The set-of-tuples view of a relation's component types. A unary relation
/// is viewed as a set of its single component, not of 1-tuples.
pub fn relation_set_dom(cs: &[TypeExpr]) -> TypeExpr {
    let elem = if cs.len() == 1 { cs[0].clone() } else { TypeExpr::Tuple(cs.to_vec()) };
    TypeExpr::Set(SizeAttr::Unbounded, Box::new(elem))
}

// -- induced declarations -----------------------------------------------------

fn find_decl(name: String, domain: TypeExpr) -> Decl {
    Decl::find(name, domain)
}

fn virtual_decl(name: String, domain: TypeExpr, inner: Option<RepTag>) -> Decl {
    Decl { rep_tag: inner, ..Decl::aux(name, domain) }
}

/// The declarations induced by representing `dom` (reached through matrix
/// indices `outer`) under `tag`, rooted at `base`. Concrete matrices are
/// plain finds; virtual (abstract-typed) carriers are aux finds holding the
/// inner tag and are dropped at emission.
pub fn induce_decls(
    base: &str,
    outer: &[TypeExpr],
    dom: &TypeExpr,
    tag: &RepTag,
) -> Result<Vec<Decl>, String> {
    let mk_idx = |extra: &[TypeExpr]| -> Vec<TypeExpr> {
        outer.iter().cloned().chain(extra.iter().cloned()).collect()
    };
    let mut out = Vec::new();
    match (dom, tag) {
        (TypeExpr::Matrix(idx, elem), _) => {
            // a matrix of abstract cells: the tag applies to the element type
            let inner_outer = mk_idx(idx);
            out.extend(induce_decls(base, &inner_outer, elem, tag)?);
        }
        (TypeExpr::Set(_, elem), RepTag::Occurrence) => {
            let dims = occurrence_dims(elem)
                .ok_or_else(|| format!("occurrence needs int(-tuple) elements, got {elem:?}"))?;
            out.push(find_decl(
                occ_name(base),
                TypeExpr::Matrix(mk_idx(&dims), Box::new(TypeExpr::Bool)),
            ));
        }
        (TypeExpr::Set(attr, elem), RepTag::ExplicitFixed(inner)) => {
            let n = attr
                .exact_n()
                .ok_or_else(|| "explicit representation needs an exact size".to_string())?;
            let idx = mk_idx(&[TypeExpr::IntRange(1, n)]);
            match (&**elem, inner) {
                (TypeExpr::IntRange(..), None) => {
                    out.push(find_decl(exp_name(base), TypeExpr::Matrix(idx, elem.clone())));
                }
                (TypeExpr::Set(..), Some(itag)) => {
                    let name = exp_name(base);
                    out.push(virtual_decl(
                        name.clone(),
                        TypeExpr::Matrix(idx.clone(), elem.clone()),
                        Some((**itag).clone()),
                    ));
                    out.extend(induce_decls(&name, &idx, elem, itag)?);
                }
                _ => return Err(format!("explicit representation of {elem:?} unsupported")),
            }
        }
        (TypeExpr::Set(attr, elem), RepTag::ExplicitFlags(inner)) => {
            let n = attr
                .exact_n()
                .or_else(|| attr.maxsize_n())
                .ok_or_else(|| "flagged representation needs a size bound".to_string())?;
            let idx = mk_idx(&[TypeExpr::IntRange(1, n)]);
            let name = expf_name(base);
            let cell = TypeExpr::Tuple(vec![(**elem).clone(), TypeExpr::Bool]);
            out.push(virtual_decl(
                name.clone(),
                TypeExpr::Matrix(idx.clone(), Box::new(cell)),
                inner.as_ref().map(|i| (**i).clone()),
            ));
            // flag component is always a concrete bool matrix
            let flags = find_decl(
                tuple_comp_name(&name, 1),
                TypeExpr::Matrix(idx.clone(), Box::new(TypeExpr::Bool)),
            );
            match (&**elem, inner) {
                (TypeExpr::IntRange(..), None) => {
                    out.push(find_decl(
                        tuple_comp_name(&name, 0),
                        TypeExpr::Matrix(idx.clone(), elem.clone()),
                    ));
                    out.push(flags);
                }
                (TypeExpr::Set(..), Some(itag)) => {
                    let vals = tuple_comp_name(&name, 0);
                    out.push(virtual_decl(
                        vals.clone(),
                        TypeExpr::Matrix(idx.clone(), elem.clone()),
                        Some((**itag).clone()),
                    ));
                    out.extend(induce_decls(&vals, &idx, elem, itag)?);
                    out.push(flags);
                }
                _ => return Err(format!("flagged representation of {elem:?} unsupported")),
            }
        }
        (TypeExpr::Function(_, from, to), RepTag::Func1D(_)) => {
            out.push(find_decl(
                f1d_name(base),
                TypeExpr::Matrix(mk_idx(&[(**from).clone()]), to.clone()),
            ));
        }
        (TypeExpr::Function(_, from, to), RepTag::Func2D) => {
            out.push(find_decl(
                f2d_name(base),
                TypeExpr::Matrix(
                    mk_idx(&[(**from).clone(), (**to).clone()]),
                    Box::new(TypeExpr::Bool),
                ),
            ));
        }
        (TypeExpr::Relation(cs), RepTag::RelSetOfTuples) => {
            let name = relset_name(base);
            let setdom = relation_set_dom(cs);
            out.push(virtual_decl(name.clone(), setdom.clone(), Some(RepTag::Occurrence)));
            out.extend(induce_decls(&name, outer, &setdom, &RepTag::Occurrence)?);
        }
        _ => return Err(format!("tag {tag:?} is inadmissible for {dom:?}")),
    }
    Ok(out)
}

// -- representation enumeration ------------------------------------------------

fn occurs_in(name: &str, e: &Expr) -> bool {
    has_reference_to(name, e)
}

/// Split every tuple-typed find-variable into per-component find-variables
/// (the tuple-access rewrite rule redirects `t<j>` to them). The original
/// declaration stays as a virtual carrier.
fn split_tuples(spec: &mut Spec) {
    let mut i = 0;
    while i < spec.decls.len() {
        if spec.decls[i].kind == DeclKind::Find {
            if let TypeExpr::Tuple(cs) = spec.decls[i].domain.clone() {
                let name = spec.decls[i].name.clone();
                spec.decls[i].kind = DeclKind::AuxFind; // virtual from here on
                for (j, c) in cs.iter().enumerate() {
                    i += 1;
                    spec.decls.insert(i, find_decl(tuple_comp_name(&name, j), c.clone()));
                }
            }
        }
        i += 1;
    }
}

/// Split every find-variable of type matrix-of-tuples into per-component
/// matrices (targets of the matrix-of-tuples rule).
fn split_tuple_matrices(spec: &mut Spec) {
    let mut i = 0;
    while i < spec.decls.len() {
        if spec.decls[i].kind == DeclKind::Find {
            if let TypeExpr::Matrix(idx, elem) = spec.decls[i].domain.clone() {
                if let TypeExpr::Tuple(cs) = *elem {
                    let name = spec.decls[i].name.clone();
                    spec.decls[i].kind = DeclKind::AuxFind;
                    for (j, c) in cs.iter().enumerate() {
                        i += 1;
                        spec.decls.insert(
                            i,
                            find_decl(
                                tuple_comp_name(&name, j),
                                TypeExpr::Matrix(idx.clone(), Box::new(c.clone())),
                            ),
                        );
                    }
                }
            }
        }
        i += 1;
    }
}

/// Phase 4: every combination of representation choices, each as a branch
/// specification carrying induced declarations.
pub fn enumerate_representations(
    spec: &Spec,
    mode: RepMode,
    all_reps: bool,
) -> Result<Vec<RepSpec>, RefineError> {
    let mut base = spec.clone();
    split_tuples(&mut base);
    split_tuple_matrices(&mut base);

    // abstract find-variables needing a tag, in declaration order
    let mut vars: Vec<(String, TypeExpr, Vec<RepTag>)> = Vec::new();
    for d in &base.decls {
        if d.kind != DeclKind::Find || !d.domain.is_abstract() {
            continue;
        }
        let cands = candidate_reps(&d.domain, all_reps)
            .map_err(|m| RefineError::NoRepresentation(d.name.clone(), m))?;
        vars.push((d.name.clone(), d.domain.clone(), cands));
    }

    // slot list per variable
    let mut slots_of: Vec<Vec<Slot>> = Vec::new();
    for (name, _, cands) in &vars {
        let nested = cands.iter().any(|t| {
            matches!(
                t,
                RepTag::ExplicitFixed(Some(_)) | RepTag::ExplicitFlags(Some(_))
            )
        });
        let mut slots = Vec::new();
        if mode == RepMode::PerConstraint && !nested {
            if let Some((_, obj)) = &base.objective {
                if occurs_in(name, obj) {
                    slots.push(Slot::Objective);
                }
            }
            for (i, c) in base.constraints.iter().enumerate() {
                if occurs_in(name, c) {
                    slots.push(Slot::Constraint(i));
                }
            }
        }
        if slots.is_empty() {
            slots = vec![Slot::Global];
        }
        slots_of.push(slots);
    }

    // Cartesian product over all (variable, slot) cells
    let mut cells: Vec<(String, Slot, Vec<RepTag>)> = Vec::new();
    for ((name, _, cands), slots) in vars.iter().zip(&slots_of) {
        for s in slots {
            cells.push((name.clone(), *s, cands.clone()));
        }
    }
    let mut combos: Vec<RepAssignment> = vec![BTreeMap::new()];
    for (name, slot, cands) in &cells {
        let mut next = Vec::new();
        for combo in &combos {
            for tag in cands {
                let mut c2 = combo.clone();
                c2.insert((name.clone(), *slot), tag.clone());
                next.push(c2);
            }
        }
        combos = next;
    }

    let mut out = Vec::new();
    for assignment in combos {
        let mut s = base.clone();
        for (name, _, cands) in &vars {
            // distinct tags chosen for this variable, in candidate order
            let chosen: BTreeSet<&RepTag> = assignment
                .iter()
                .filter(|((v, _), _)| v == name)
                .map(|(_, t)| t)
                .collect();
            let ordered: Vec<&RepTag> =
                cands.iter().filter(|t| chosen.contains(t)).collect();
            if ordered.len() == 1 {
                s.decl_mut(name).unwrap().rep_tag = Some(ordered[0].clone());
            }
            let pos = s.decls.iter().position(|d| d.name == *name).unwrap();
            let dom = s.decls[pos].domain.clone();
            let mut insert_at = pos + 1;
            for tag in ordered {
                let induced = induce_decls(name, &[], &dom, tag)
                    .map_err(|m| RefineError::NoRepresentation(name.clone(), m))?;
                for d in induced {
                    s.decls.insert(insert_at, d);
                    insert_at += 1;
                }
            }
        }
        out.push(RepSpec { spec: s, assignment });
    }
    Ok(out)
}

// -- expression builders --------------------------------------------------------

fn ilit(v: i64) -> Expr {
    Expr::IntLit(v)
}

fn idx(base: &str, indices: Vec<Expr>) -> Expr {
    Expr::MatrixIndex(Expr::bref(base), indices)
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::BinOp(op, Box::new(a), Box::new(b))
}

fn sum_over(binder: &str, dom: TypeExpr, body: Expr) -> Expr {
    Expr::quant(QuantKind::Sum, binder, QuantDomain::Domain(dom), body)
}

fn forall_over(binder: &str, dom: TypeExpr, body: Expr) -> Expr {
    Expr::forall(binder, QuantDomain::Domain(dom), body)
}

fn exists_over(binder: &str, dom: TypeExpr, body: Expr) -> Expr {
    Expr::quant(QuantKind::Exists, binder, QuantDomain::Domain(dom), body)
}

/// `tuple_access(m[i..])<j>` on a virtual matrix of tuples.
fn cell_comp(name: &str, indices: Vec<Expr>, j: usize) -> Expr {
    Expr::TupleIndex(Box::new(idx(name, indices)), j)
}

/// Nested `sum v1 : d1 . sum v2 : d2 . body(v1,v2)` over occurrence dims.
fn nested_sum(dims: &[TypeExpr], mk_body: impl FnOnce(Vec<Expr>) -> Expr) -> Expr {
    let binders: Vec<String> = (0..dims.len()).map(|i| format!("v{}", i + 1)).collect();
    let body = mk_body(binders.iter().map(|b| Expr::Ref(b.clone())).collect());
    let mut e = body;
    for (b, d) in binders.iter().zip(dims).rev() {
        e = sum_over(b, d.clone(), e);
    }
    e
}

// -- canonical integer encodings for nested cells --------------------------------

/// Injective integer encoding of one abstract cell (reached at `prefix`
/// indices) represented by `tag`. Used to express strict ordering /
/// pinning of nested explicit representations with literal weights.
fn encode_cell(base: &str, prefix: &[Expr], dom: &TypeExpr, tag: &RepTag) -> Option<Expr> {
    let (attr, elem) = match dom {
        TypeExpr::Set(a, e) => (a, e),
        _ => return None,
    };
    let (l, h) = match **elem {
        TypeExpr::IntRange(l, h) => (l, h),
        _ => return None,
    };
    let with_prefix = |extra: Expr| -> Vec<Expr> {
        prefix.iter().cloned().chain(std::iter::once(extra)).collect()
    };
    match tag {
        RepTag::Occurrence => {
            let name = occ_name(base);
            let mut terms = Vec::new();
            for v in l..=h {
                let w = 1i64.checked_shl((v - l) as u32)?;
                terms.push(bin(BinOp::Mul, idx(&name, with_prefix(ilit(v))), ilit(w)));
            }
            Some(sum_expr(terms))
        }
        RepTag::ExplicitFixed(None) => {
            let n = attr.exact_n()?;
            let name = exp_name(base);
            let b = h - l + 1;
            let mut terms = Vec::new();
            for j in 1..=n {
                let w = b.checked_pow((j - 1) as u32)?;
                terms.push(bin(
                    BinOp::Mul,
                    bin(BinOp::Sub, idx(&name, with_prefix(ilit(j))), ilit(l)),
                    ilit(w),
                ));
            }
            Some(sum_expr(terms))
        }
        RepTag::ExplicitFlags(None) => {
            let n = attr.exact_n().or_else(|| attr.maxsize_n())?;
            let name = expf_name(base);
            let b = 2 * (h - l + 1);
            let mut terms = Vec::new();
            for j in 1..=n {
                let w = b.checked_pow((j - 1) as u32)?;
                // (val - l) * 2 + flag, an injective per-cell code
                let val = cell_comp(&name, with_prefix(ilit(j)), 0);
                let flag = cell_comp(&name, with_prefix(ilit(j)), 1);
                let code = bin(
                    BinOp::Add,
                    bin(BinOp::Mul, bin(BinOp::Sub, val, ilit(l)), ilit(2)),
                    flag,
                );
                terms.push(bin(BinOp::Mul, code, ilit(w)));
            }
            Some(sum_expr(terms))
        }
        _ => None,
    }
}

/// Encoding of the canonical *minimal* abstract object of `dom` under `tag`
/// (what a pinned inactive cell must hold).
fn encode_minimal(dom: &TypeExpr, tag: &RepTag) -> Option<i64> {
    let (attr, elem) = match dom {
        TypeExpr::Set(a, e) => (a, e),
        _ => return None,
    };
    let (l, h) = match **elem {
        TypeExpr::IntRange(l, h) => (l, h),
        _ => return None,
    };
    // minimal set: empty when the size may be 0, else {l, l+1, …}
    let k = attr.exact_n().unwrap_or(0);
    match tag {
        RepTag::Occurrence => {
            let mut acc = 0i64;
            for v in l..(l + k) {
                acc += 1i64.checked_shl((v - l) as u32)?;
            }
            Some(acc)
        }
        RepTag::ExplicitFixed(None) => {
            let b = h - l + 1;
            let mut acc = 0i64;
            for j in 1..=k {
                acc += (j - 1) * b.checked_pow((j - 1) as u32)?;
            }
            Some(acc)
        }
        RepTag::ExplicitFlags(None) => {
            // inactive inner cells are themselves pinned; minimal = k active
            // prefix cells holding l, l+1, … (k = 0 for maxsize: all pinned)
            let b = 2 * (h - l + 1);
            let mut acc = 0i64;
            for j in 1..=k {
                let code = (j - 1) * 2 + 1;
                acc += code * b.checked_pow((j - 1) as u32)?;
            }
            Some(acc)
        }
        _ => None,
    }
}

fn sum_expr(mut terms: Vec<Expr>) -> Expr {
    if terms.is_empty() {
        return ilit(0);
    }
    let mut acc = terms.remove(0);
    for t in terms {
        acc = bin(BinOp::Add, acc, t);
    }
    acc
}

// -- structural constraints --------------------------------------------------------

/// Phase 6: constraints making every representation encode exactly one valid
/// combinatorial object (appended to the branch specification).
pub fn add_structural_constraints(rs: &mut RepSpec) -> Result<(), RefineError> {
    let mut extra = Vec::new();
    let work: Vec<(String, TypeExpr, Vec<RepTag>)> = rs
        .spec
        .decls
        .iter()
        .filter(|d| d.kind == DeclKind::Find && d.domain.is_abstract())
        .map(|d| (d.name.clone(), d.domain.clone(), var_tags(rs, &d.name)))
        .collect();
    for (name, dom, tags) in work {
        // an explicit-family representation bounds cardinality by its slot
        // count, so once channelling links it to an occurrence matrix the
        // occurrence size bound is entailed and need not be emitted
        let explicit_bounds_card = tags.iter().any(|t| {
            matches!(t, RepTag::ExplicitFixed(_) | RepTag::ExplicitFlags(_))
        });
        for tag in tags {
            if tag == RepTag::Occurrence && explicit_bounds_card {
                continue;
            }
            structural_for(&name, &[], &dom, &tag, &mut extra)
                .map_err(|m| RefineError::Diag(format!("structural constraints for `{name}`: {m}")))?;
        }
    }
    rs.spec.constraints.extend(extra);
    Ok(())
}

/// Distinct tags assigned to one variable, in candidate order.
pub fn var_tags(rs: &RepSpec, name: &str) -> Vec<RepTag> {
    if let Some(d) = rs.spec.decl(name) {
        if let Some(t) = &d.rep_tag {
            return vec![t.clone()];
        }
    }
    let chosen: BTreeSet<&RepTag> = rs
        .assignment
        .iter()
        .filter(|((v, _), _)| v == name)
        .map(|(_, t)| t)
        .collect();
    let dom = &rs.spec.decl(name).unwrap().domain;
    let cands = candidate_reps(dom, true).unwrap_or_default();
    cands.into_iter().filter(|t| chosen.contains(t)).collect()
}

pub fn structural_for(
    base: &str,
    outer: &[TypeExpr],
    dom: &TypeExpr,
    tag: &RepTag,
    out: &mut Vec<Expr>,
) -> Result<(), String> {
    // constraints on matrix cells reached through `outer` dims are wrapped in
    // foralls over those dims
    let wrap = |outer: &[TypeExpr], body: Expr| -> Expr {
        let mut e = body;
        for (i, d) in outer.iter().enumerate().rev() {
            e = forall_over(&format!("o{}", i + 1), d.clone(), e);
        }
        e
    };
    let obinders: Vec<Expr> =
        (0..outer.len()).map(|i| Expr::Ref(format!("o{}", i + 1))).collect();
    let with_outer = |extra: Vec<Expr>| -> Vec<Expr> {
        obinders.iter().cloned().chain(extra).collect()
    };

    match (dom, tag) {
        (TypeExpr::Matrix(idx_dims, elem), _) => {
            let inner_outer: Vec<TypeExpr> =
                outer.iter().cloned().chain(idx_dims.iter().cloned()).collect();
            structural_for(base, &inner_outer, elem, tag, out)?;
        }
        (TypeExpr::Set(attr, elem), RepTag::Occurrence) => {
            let dims = occurrence_dims(elem).ok_or("occurrence dims")?;
            let name = occ_name(base);
            let bound = match attr {
                SizeAttr::Exact(n) => Some((BinOp::Eq, *n)),
                SizeAttr::MaxSize(n) => Some((BinOp::Le, *n)),
                _ => None,
            };
            if let Some((op, n)) = bound {
                let sum = nested_sum(&dims, |vs| idx(&name, with_outer(vs)));
                out.push(wrap(outer, bin(op, sum, ilit(n))));
            }
        }
        (TypeExpr::Set(attr, elem), RepTag::ExplicitFixed(inner)) => {
            let n = attr.exact_n().ok_or("explicit needs exact size")?;
            match (&**elem, inner) {
                (TypeExpr::IntRange(..), None) => {
                    if n >= 2 {
                        let name = exp_name(base);
                        let j = || Expr::Ref("j".into());
                        let body = bin(
                            BinOp::Lt,
                            idx(&name, with_outer(vec![j()])),
                            idx(&name, with_outer(vec![bin(BinOp::Add, j(), ilit(1))])),
                        );
                        out.push(wrap(outer, forall_over("j", TypeExpr::IntRange(1, n - 1), body)));
                    }
                }
                (TypeExpr::Set(..), Some(itag)) => {
                    let name = exp_name(base);
                    // sorted by an injective integer encoding of each cell
                    if n >= 2 {
                        let j = || Expr::Ref("j".into());
                        let pre_j = with_outer(vec![j()]);
                        let pre_j1 = with_outer(vec![bin(BinOp::Add, j(), ilit(1))]);
                        let e1 = encode_cell(&name, &pre_j, elem, itag).ok_or("cell encoding")?;
                        let e2 = encode_cell(&name, &pre_j1, elem, itag).ok_or("cell encoding")?;
                        out.push(wrap(
                            outer,
                            forall_over("j", TypeExpr::IntRange(1, n - 1), bin(BinOp::Lt, e1, e2)),
                        ));
                    }
                    // each cell is itself a valid object
                    let cell_outer: Vec<TypeExpr> =
                        outer.iter().cloned().chain([TypeExpr::IntRange(1, n)]).collect();
                    structural_for(&name, &cell_outer, elem, itag, out)?;
                }
                _ => return Err(format!("explicit of {elem:?}")),
            }
        }
        (TypeExpr::Set(attr, elem), RepTag::ExplicitFlags(inner)) => {
            let n = attr
                .exact_n()
                .or_else(|| attr.maxsize_n())
                .ok_or("flags need a size bound")?;
            let name = expf_name(base);
            let j = || Expr::Ref("j".into());
            let flag_at = |i: Expr| cell_comp(&name, with_outer(vec![i]), 1);
            // flags form a prefix: flag[j+1] => flag[j]
            if n >= 2 {
                out.push(wrap(
                    outer,
                    forall_over(
                        "j",
                        TypeExpr::IntRange(1, n - 1),
                        Expr::implies(
                            flag_at(bin(BinOp::Add, j(), ilit(1))),
                            flag_at(j()),
                        ),
                    ),
                ));
            }
            // size bound on the number of flags; with maxsize the slot count
            // already equals the bound, so only an exact size needs asserting
            if attr.exact_n().is_some() {
                let fsum = sum_over("j", TypeExpr::IntRange(1, n), flag_at(j()));
                out.push(wrap(outer, bin(BinOp::Eq, fsum, ilit(n))));
            }
            match (&**elem, inner) {
                (TypeExpr::IntRange(l, _), None) => {
                    let val_at = |i: Expr| cell_comp(&name, with_outer(vec![i]), 0);
                    if n >= 2 {
                        // active prefix strictly increasing
                        out.push(wrap(
                            outer,
                            forall_over(
                                "j",
                                TypeExpr::IntRange(1, n - 1),
                                Expr::implies(
                                    flag_at(bin(BinOp::Add, j(), ilit(1))),
                                    bin(
                                        BinOp::Lt,
                                        val_at(j()),
                                        val_at(bin(BinOp::Add, j(), ilit(1))),
                                    ),
                                ),
                            ),
                        ));
                    }
                    // inactive cells pinned to the domain minimum
                    out.push(wrap(
                        outer,
                        forall_over(
                            "j",
                            TypeExpr::IntRange(1, n),
                            Expr::implies(
                                Expr::eq(flag_at(j()), Expr::BoolLit(false)),
                                Expr::eq(val_at(j()), ilit(*l)),
                            ),
                        ),
                    ));
                }
                (TypeExpr::Set(..), Some(itag)) => {
                    let vals = tuple_comp_name(&name, 0);
                    let enc_at = |i: Expr| {
                        encode_cell(&vals, &with_outer(vec![i]), elem, itag)
                            .ok_or("cell encoding")
                    };
                    if n >= 2 {
                        out.push(wrap(
                            outer,
                            forall_over(
                                "j",
                                TypeExpr::IntRange(1, n - 1),
                                Expr::implies(
                                    flag_at(bin(BinOp::Add, j(), ilit(1))),
                                    bin(
                                        BinOp::Lt,
                                        enc_at(j())?,
                                        enc_at(bin(BinOp::Add, j(), ilit(1)))?,
                                    ),
                                ),
                            ),
                        ));
                    }
                    let pin = encode_minimal(elem, itag).ok_or("minimal encoding")?;
                    out.push(wrap(
                        outer,
                        forall_over(
                            "j",
                            TypeExpr::IntRange(1, n),
                            Expr::implies(
                                Expr::eq(flag_at(j()), Expr::BoolLit(false)),
                                Expr::eq(enc_at(j())?, ilit(pin)),
                            ),
                        ),
                    ));
                    let cell_outer: Vec<TypeExpr> =
                        outer.iter().cloned().chain([TypeExpr::IntRange(1, n)]).collect();
                    structural_for(&vals, &cell_outer, elem, itag, out)?;
                }
                _ => return Err(format!("flags of {elem:?}")),
            }
        }
        (TypeExpr::Function(attrs, from, to), RepTag::Func1D(_)) => {
            let name = f1d_name(base);
            if attrs.injective {
                // primitive alldifferent on the image matrix
                let target: Expr = if outer.is_empty() {
                    Expr::Ref(name.clone())
                } else {
                    idx(&name, obinders.clone())
                };
                out.push(wrap(outer, Expr::UnOp(UnOp::AllDiff, Box::new(target))));
            }
            if attrs.surjective {
                let body = exists_over(
                    "i",
                    (**from).clone(),
                    Expr::eq(idx(&name, with_outer(vec![Expr::Ref("i".into())])), Expr::Ref("v".into())),
                );
                out.push(wrap(outer, forall_over("v", (**to).clone(), body)));
            }
        }
        (TypeExpr::Function(attrs, from, to), RepTag::Func2D) => {
            let name = f2d_name(base);
            let row = sum_over(
                "j",
                (**to).clone(),
                idx(&name, with_outer(vec![Expr::Ref("i".into()), Expr::Ref("j".into())])),
            );
            let op = if attrs.total { BinOp::Eq } else { BinOp::Le };
            out.push(wrap(outer, forall_over("i", (**from).clone(), bin(op, row, ilit(1)))));
            if attrs.injective || attrs.surjective {
                let col = sum_over(
                    "i",
                    (**from).clone(),
                    idx(&name, with_outer(vec![Expr::Ref("i".into()), Expr::Ref("j".into())])),
                );
                if attrs.injective {
                    out.push(wrap(
                        outer,
                        forall_over("j", (**to).clone(), bin(BinOp::Le, col.clone(), ilit(1))),
                    ));
                }
                if attrs.surjective {
                    out.push(wrap(
                        outer,
                        forall_over("j", (**to).clone(), bin(BinOp::Ge, col, ilit(1))),
                    ));
                }
            }
        }
        (TypeExpr::Relation(cs), RepTag::RelSetOfTuples) => {
            let name = relset_name(base);
            let setdom = relation_set_dom(cs);
            structural_for(&name, outer, &setdom, &RepTag::Occurrence, out)?;
        }
        _ => return Err(format!("tag {tag:?} for {dom:?}")),
    }
    Ok(())
}

// -- channelling ---------------------------------------------------------------

/// Phase 5: link coexisting representations of one variable so they always
/// encode the same abstract object. Chain topology over the distinct tags in
/// candidate order.
pub fn add_channelling(rs: &mut RepSpec) -> Result<(), RefineError> {
    let mut extra = Vec::new();
    let work: Vec<(String, TypeExpr, Vec<RepTag>)> = rs
        .spec
        .decls
        .iter()
        .filter(|d| d.kind == DeclKind::Find && d.domain.is_abstract())
        .map(|d| (d.name.clone(), d.domain.clone(), var_tags(rs, &d.name)))
        .collect();
    for (name, dom, tags) in work {
        for pair in tags.windows(2) {
            channel_pair(&name, &dom, &pair[0], &pair[1], &mut extra)
                .map_err(|m| RefineError::Diag(format!("channelling for `{name}`: {m}")))?;
        }
    }
    rs.spec.constraints.extend(extra);
    Ok(())
}

fn channel_pair(
    base: &str,
    dom: &TypeExpr,
    t1: &RepTag,
    t2: &RepTag,
    out: &mut Vec<Expr>,
) -> Result<(), String> {
    use RepTag::*;
    match dom {
        TypeExpr::Set(attr, elem) => {
            let edom = match &**elem {
                TypeExpr::IntRange(..) => (**elem).clone(),
                other => return Err(format!("channelling over {other:?} elements")),
            };
            let n = attr.exact_n().or_else(|| attr.maxsize_n());
            let v = || Expr::Ref("v".into());
            let j = || Expr::Ref("j".into());
            match (t1, t2) {
                (Occurrence, ExplicitFixed(None)) => {
                    let n = n.ok_or("bounded size")?;
                    let body = bin(
                        BinOp::Iff,
                        idx(&occ_name(base), vec![v()]),
                        exists_over(
                            "j",
                            TypeExpr::IntRange(1, n),
                            Expr::eq(idx(&exp_name(base), vec![j()]), v()),
                        ),
                    );
                    out.push(forall_over("v", edom, body));
                }
                (Occurrence, ExplicitFlags(None)) => {
                    let n = n.ok_or("bounded size")?;
                    let fm = expf_name(base);
                    let body = bin(
                        BinOp::Iff,
                        idx(&occ_name(base), vec![v()]),
                        exists_over(
                            "j",
                            TypeExpr::IntRange(1, n),
                            Expr::and(
                                cell_comp(&fm, vec![j()], 1),
                                Expr::eq(cell_comp(&fm, vec![j()], 0), v()),
                            ),
                        ),
                    );
                    out.push(forall_over("v", edom, body));
                }
                (ExplicitFixed(None), ExplicitFlags(None)) => {
                    let n1 = attr.exact_n().ok_or("exact size")?;
                    let n2 = n.ok_or("bounded size")?;
                    let fm = expf_name(base);
                    out.push(forall_over(
                        "j",
                        TypeExpr::IntRange(1, n1),
                        exists_over(
                            "j2",
                            TypeExpr::IntRange(1, n2),
                            Expr::and(
                                cell_comp(&fm, vec![Expr::Ref("j2".into())], 1),
                                Expr::eq(
                                    cell_comp(&fm, vec![Expr::Ref("j2".into())], 0),
                                    idx(&exp_name(base), vec![j()]),
                                ),
                            ),
                        ),
                    ));
                    out.push(bin(
                        BinOp::Eq,
                        sum_over(
                            "j2",
                            TypeExpr::IntRange(1, n2),
                            cell_comp(&fm, vec![Expr::Ref("j2".into())], 1),
                        ),
                        ilit(n1),
                    ));
                }
                other => return Err(format!("unsupported channelling pair {other:?}")),
            }
        }
        TypeExpr::Function(_, from, to) => match (t1, t2) {
            (Func1D(None), Func2D) => {
                let body = bin(
                    BinOp::Iff,
                    idx(&f2d_name(base), vec![Expr::Ref("i".into()), Expr::Ref("j".into())]),
                    Expr::eq(idx(&f1d_name(base), vec![Expr::Ref("i".into())]), Expr::Ref("j".into())),
                );
                out.push(forall_over(
                    "i",
                    (**from).clone(),
                    forall_over("j", (**to).clone(), body),
                ));
            }
            other => return Err(format!("unsupported channelling pair {other:?}")),
        },
        other => return Err(format!("channelling for {other:?}")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_spec_text;

    fn set_of_int(attr: SizeAttr, l: i64, h: i64) -> TypeExpr {
        TypeExpr::Set(attr, Box::new(TypeExpr::IntRange(l, h)))
    }

    #[test]
    fn candidates_match_admissibility_table() {
        let d = set_of_int(SizeAttr::Exact(2), 1, 3);
        assert_eq!(
            candidate_reps(&d, false).unwrap(),
            vec![RepTag::Occurrence, RepTag::ExplicitFixed(None)]
        );
        let d = set_of_int(SizeAttr::MaxSize(2), 1, 3);
        assert_eq!(
            candidate_reps(&d, false).unwrap(),
            vec![RepTag::Occurrence, RepTag::ExplicitFlags(None)]
        );
        let f = TypeExpr::Function(
            FuncAttrs { total: true, ..Default::default() },
            Box::new(TypeExpr::IntRange(1, 3)),
            Box::new(TypeExpr::IntRange(1, 2)),
        );
        assert_eq!(
            candidate_reps(&f, false).unwrap(),
            vec![RepTag::Func1D(None), RepTag::Func2D]
        );
        let m = TypeExpr::MSet(SizeAttr::Exact(2), Box::new(TypeExpr::IntRange(1, 3)));
        assert!(candidate_reps(&m, false).is_err());
    }

    #[test]
    fn exact_sets_admit_flags_only_with_all_reps() {
        let d = set_of_int(SizeAttr::Exact(2), 1, 3);
        let all = candidate_reps(&d, true).unwrap();
        assert!(all.contains(&RepTag::ExplicitFlags(None)));
    }

    #[test]
    fn induced_occurrence_matrix() {
        let d = set_of_int(SizeAttr::MaxSize(3), 1, 3);
        let ds = induce_decls("x", &[], &d, &RepTag::Occurrence).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].name, "x_occ");
        assert_eq!(
            ds[0].domain,
            TypeExpr::Matrix(vec![TypeExpr::IntRange(1, 3)], Box::new(TypeExpr::Bool))
        );
        assert!(ds[0].domain.is_flat());
    }

    #[test]
    fn induced_flags_components() {
        let d = set_of_int(SizeAttr::MaxSize(2), 1, 3);
        let ds = induce_decls("x", &[], &d, &RepTag::ExplicitFlags(None)).unwrap();
        let names: Vec<&str> = ds.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["x_expf", "x_expf_t0", "x_expf_t1"]);
        assert!(ds[0].domain.is_abstract()); // the virtual tuple matrix
        assert!(ds[1].domain.is_flat());
        assert!(ds[2].domain.is_flat());
    }

    #[test]
    fn induced_nested_explicit_chain() {
        // set (size 2) of set (size 1) of int(1..2), outer explicit, inner occurrence
        let inner = set_of_int(SizeAttr::Exact(1), 1, 2);
        let d = TypeExpr::Set(SizeAttr::Exact(2), Box::new(inner));
        let tag = RepTag::ExplicitFixed(Some(Box::new(RepTag::Occurrence)));
        let ds = induce_decls("x", &[], &d, &tag).unwrap();
        let names: Vec<&str> = ds.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["x_exp", "x_exp_occ"]);
        assert_eq!(
            ds[1].domain,
            TypeExpr::Matrix(
                vec![TypeExpr::IntRange(1, 2), TypeExpr::IntRange(1, 2)],
                Box::new(TypeExpr::Bool)
            )
        );
    }

    #[test]
    fn relation_chain_induces_occurrence_set() {
        let d = TypeExpr::Relation(vec![TypeExpr::IntRange(1, 2), TypeExpr::IntRange(1, 2)]);
        let ds = induce_decls("r", &[], &d, &RepTag::RelSetOfTuples).unwrap();
        let names: Vec<&str> = ds.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["r_set", "r_set_occ"]);
        assert_eq!(
            ds[1].domain,
            TypeExpr::Matrix(
                vec![TypeExpr::IntRange(1, 2), TypeExpr::IntRange(1, 2)],
                Box::new(TypeExpr::Bool)
            )
        );
    }

    #[test]
    fn single_rep_counts() {
        let s = parse_spec_text(
            "find x : set (maxsize 2) of int(1..3) such that card(x) >= 1, card(x) <= 2",
        )
        .unwrap();
        let reps = enumerate_representations(&s, RepMode::SingleRep, false).unwrap();
        assert_eq!(reps.len(), 2);
        let reps = enumerate_representations(&s, RepMode::PerConstraint, false).unwrap();
        assert_eq!(reps.len(), 4);
        // the two mixed branches carry channelling constraints
        let mut mixed = 0;
        for mut r in reps {
            let before = r.spec.constraints.len();
            add_channelling(&mut r).unwrap();
            if r.spec.constraints.len() > before {
                mixed += 1;
            }
        }
        assert_eq!(mixed, 2);
    }

    #[test]
    fn no_abstract_vars_is_one_empty_assignment() {
        let s = parse_spec_text("find x : int(1..3) such that x >= 2").unwrap();
        let reps = enumerate_representations(&s, RepMode::PerConstraint, false).unwrap();
        assert_eq!(reps.len(), 1);
        assert!(reps[0].assignment.is_empty());
    }

    #[test]
    fn structural_explicit_sorted() {
        let s = parse_spec_text("find x : set (size 2) of int(1..3)").unwrap();
        let reps = enumerate_representations(&s, RepMode::SingleRep, false).unwrap();
        let mut exp = reps
            .into_iter()
            .find(|r| r.spec.decl("x").unwrap().rep_tag == Some(RepTag::ExplicitFixed(None)))
            .unwrap();
        add_structural_constraints(&mut exp).unwrap();
        assert_eq!(exp.spec.constraints.len(), 1);
        // forall j : int(1..1) . x_exp[j] < x_exp[j+1]
        match &exp.spec.constraints[0] {
            Expr::Quant { kind: QuantKind::Forall, over, body, .. } => {
                assert_eq!(*over, QuantDomain::Domain(TypeExpr::IntRange(1, 1)));
                assert!(matches!(**body, Expr::BinOp(BinOp::Lt, _, _)));
            }
            other => panic!("unexpected structural constraint {other:?}"),
        }
    }

    #[test]
    fn tuple_find_splits_into_components() {
        let s = parse_spec_text("find t : tuple (int(1..2), bool)").unwrap();
        let reps = enumerate_representations(&s, RepMode::SingleRep, false).unwrap();
        assert_eq!(reps.len(), 1);
        let names: Vec<&str> = reps[0].spec.decls.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["t", "t_t0", "t_t1"]);
        assert_eq!(reps[0].spec.decls[0].kind, DeclKind::AuxFind);
    }
}
