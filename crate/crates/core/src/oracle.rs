//! Brute-force solution oracle.
//!
//! Enumerates all solutions of an abstract specification and of a refined
//! flat model, decodes each flat solution back to abstract values by
//! inverting the induced-variable naming scheme, and checks that the two
//! solution sets agree exactly. Decoding must also be injective on the flat
//! solutions: a duplicate decoded solution means the model's structural
//! constraints fail to make the representation canonical.

use crate::ast::*;
use crate::diag::OracleError;
use crate::emit::FlatModel;
use crate::eval::{domain_count, domain_values, eval_expr, Value};
use crate::rep;
use crate::typecheck::letting_env;
use std::collections::{BTreeMap, BTreeSet};

/// Hard cap on the number of candidate assignments enumerated per side.
pub const MAX_CANDIDATES: u128 = 10_000_000;

pub type Assignment = BTreeMap<String, Value>;

fn oerr<T>(msg: impl Into<String>) -> Result<T, OracleError> {
    Err(OracleError::Decode(msg.into()))
}

// -- enumeration ------------------------------------------------------------------------

/// What an undefined constraint evaluation (partial function applied outside
/// its defined set, min of an empty set, ...) means for a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UndefPolicy {
    /// The candidate is excluded (treated as unsatisfied). Matches the
    /// two-dimensional function encoding, where an undefined application
    /// contributes no rows.
    #[default]
    Exclude,
    /// The enumeration aborts with the evaluation error.
    Error,
}

/// All solutions of `spec` by exhaustive enumeration over its decision
/// variables, under the default undefinedness policy (exclude). With an
/// objective only the optimal solutions are returned.
pub fn enumerate_solutions(spec: &Spec) -> Result<Vec<Assignment>, OracleError> {
    enumerate_solutions_with(spec, UndefPolicy::Exclude)
}

/// As [`enumerate_solutions`], with an explicit undefinedness policy.
pub fn enumerate_solutions_with(
    spec: &Spec,
    undef: UndefPolicy,
) -> Result<Vec<Assignment>, OracleError> {
    let finds: Vec<&Decl> = spec
        .decls
        .iter()
        .filter(|d| matches!(d.kind, DeclKind::Find | DeclKind::AuxFind))
        .collect();
    let mut total: u128 = 1;
    for d in &finds {
        let n = domain_count(&d.domain)
            .map_err(OracleError::Eval)?
            .ok_or_else(|| OracleError::TooLarge(format!("domain of `{}`", d.name)))?;
        total = total
            .checked_mul(n)
            .filter(|t| *t <= MAX_CANDIDATES)
            .ok_or_else(|| OracleError::TooLarge(format!("{total} x {n} candidates")))?;
    }
    let values: Vec<Vec<Value>> = finds
        .iter()
        .map(|d| domain_values(&d.domain).map_err(OracleError::Eval))
        .collect::<Result<_, _>>()?;
    let base = letting_env(spec).map_err(OracleError::Eval)?;

    let mut sols: Vec<(Assignment, Option<i64>)> = Vec::new();
    let mut odometer = vec![0usize; finds.len()];
    if values.iter().any(|v| v.is_empty()) {
        return Ok(Vec::new());
    }
    'outer: loop {
        let mut env = base.clone();
        for (d, (vs, i)) in finds.iter().zip(values.iter().zip(&odometer)) {
            env.insert(&d.name, vs[*i].clone());
        }
        let mut sat = true;
        for c in &spec.constraints {
            match eval_expr(c, &env) {
                Ok(Value::Bool(true)) => {}
                Err(e) if undef == UndefPolicy::Error => {
                    return Err(OracleError::Eval(e.0));
                }
                Ok(Value::Bool(false)) | Err(_) => {
                    sat = false;
                    break;
                }
                Ok(other) => {
                    return Err(OracleError::Eval(format!(
                        "constraint evaluated to non-boolean {other:?}"
                    )))
                }
            }
        }
        if sat {
            let obj = match &spec.objective {
                None => Some(None),
                Some((_, e)) => match eval_expr(e, &env) {
                    Ok(Value::Int(v)) => Some(Some(v)),
                    Ok(Value::Bool(b)) => Some(Some(b as i64)),
                    Ok(other) => {
                        return Err(OracleError::Eval(format!(
                            "objective evaluated to {other:?}"
                        )))
                    }
                    Err(e) if undef == UndefPolicy::Error => {
                        return Err(OracleError::Eval(e.0));
                    }
                    Err(_) => None, // undefined objective excludes the candidate
                },
            };
            if let Some(obj) = obj {
                let assignment: Assignment = finds
                    .iter()
                    .zip(values.iter().zip(&odometer))
                    .map(|(d, (vs, i))| (d.name.clone(), vs[*i].clone()))
                    .collect();
                sols.push((assignment, obj));
            }
        }
        // advance the odometer
        for pos in (0..odometer.len()).rev() {
            odometer[pos] += 1;
            if odometer[pos] < values[pos].len() {
                continue 'outer;
            }
            odometer[pos] = 0;
        }
        break;
    }
    if let Some((dir, _)) = &spec.objective {
        let best = match dir {
            OptDir::Maximising => sols.iter().filter_map(|(_, o)| *o).max(),
            OptDir::Minimising => sols.iter().filter_map(|(_, o)| *o).min(),
        };
        sols.retain(|(_, o)| *o == best);
    }
    Ok(sols.into_iter().map(|(a, _)| a).collect())
}

// -- decoding ---------------------------------------------------------------------------

fn parse_tag(label: &str) -> Result<RepTag, OracleError> {
    let (head, inner) = match label.find('[') {
        Some(i) if label.ends_with(']') => {
            (&label[..i], Some(parse_tag(&label[i + 1..label.len() - 1])?))
        }
        _ => (label, None),
    };
    let boxed = inner.map(Box::new);
    Ok(match head {
        "occurrence" => RepTag::Occurrence,
        "explicit" => RepTag::ExplicitFixed(boxed),
        "flags" => RepTag::ExplicitFlags(boxed),
        "func1d" => RepTag::Func1D(boxed),
        "func2d" => RepTag::Func2D,
        "relset" => RepTag::RelSetOfTuples,
        other => return oerr(format!("unknown representation label `{other}`")),
    })
}

/// First representation tag per variable, recovered from a model's
/// `var#tag` / `var@slot#tag` summary lines.
pub fn tags_from_summary(summary: &[String]) -> Result<BTreeMap<String, RepTag>, OracleError> {
    let mut out = BTreeMap::new();
    for entry in summary {
        let (lhs, label) = entry
            .split_once('#')
            .ok_or_else(|| OracleError::Decode(format!("malformed summary entry `{entry}`")))?;
        let name = lhs.split('@').next().unwrap_or(lhs).to_string();
        out.entry(name).or_insert(parse_tag(label)?);
    }
    Ok(out)
}

fn mat_get<'a>(v: &'a Value, idx: &[i64]) -> Result<&'a Value, OracleError> {
    let mut cur = v;
    for i in idx {
        match cur {
            Value::Matrix(cells, lo) => {
                let off = i - lo;
                if off < 0 || off as usize >= cells.len() {
                    return oerr(format!("index {i} out of bounds (lo {lo}, len {})", cells.len()));
                }
                cur = &cells[off as usize];
            }
            other => return oerr(format!("indexing into non-matrix value {other:?}")),
        }
    }
    Ok(cur)
}

fn range_of(t: &TypeExpr) -> Result<(i64, i64), OracleError> {
    match t {
        TypeExpr::IntRange(l, h) => Ok((*l, *h)),
        other => oerr(format!("expected an int range index, got {other:?}")),
    }
}

fn index_combos(dims: &[TypeExpr]) -> Result<Vec<Vec<i64>>, OracleError> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for d in dims {
        let (l, h) = range_of(d)?;
        let mut next = Vec::new();
        for prefix in &out {
            for v in l..=h {
                let mut row = prefix.clone();
                row.push(v);
                next.push(row);
            }
        }
        out = next;
    }
    Ok(out)
}

fn get_var<'a>(env: &'a Assignment, name: &str) -> Result<&'a Value, OracleError> {
    env.get(name)
        .ok_or_else(|| OracleError::Decode(format!("flat solution has no variable `{name}`")))
}

fn cell_bool(v: &Value) -> Result<bool, OracleError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => oerr(format!("expected a boolean cell, got {other:?}")),
    }
}

/// Decode the value of one abstract variable (rooted at `base`, reached
/// through matrix index prefix `prefix`) from a flat solution.
fn decode_at(
    env: &Assignment,
    base: &str,
    prefix: &[i64],
    dom: &TypeExpr,
    tag: &RepTag,
) -> Result<Value, OracleError> {
    match (dom, tag) {
        (TypeExpr::Matrix(idx, elem), _) => {
            fn build(
                env: &Assignment,
                base: &str,
                prefix: &mut Vec<i64>,
                idx: &[TypeExpr],
                elem: &TypeExpr,
                tag: &RepTag,
            ) -> Result<Value, OracleError> {
                if idx.is_empty() {
                    return decode_at(env, base, prefix, elem, tag);
                }
                let (l, h) = range_of(&idx[0])?;
                let mut cells = Vec::new();
                for i in l..=h {
                    prefix.push(i);
                    cells.push(build(env, base, prefix, &idx[1..], elem, tag)?);
                    prefix.pop();
                }
                Ok(Value::Matrix(cells, l))
            }
            build(env, base, &mut prefix.to_vec(), idx, elem, tag)
        }
        (TypeExpr::Set(_, elem), RepTag::Occurrence) => {
            let dims = rep::occurrence_dims(elem)
                .ok_or_else(|| OracleError::Decode(format!("occurrence over {elem:?}")))?;
            let m = get_var(env, &rep::occ_name(base))?;
            let mut s = BTreeSet::new();
            for combo in index_combos(&dims)? {
                let full: Vec<i64> = prefix.iter().chain(&combo).copied().collect();
                if cell_bool(mat_get(m, &full)?)? {
                    let v = if combo.len() == 1 && !matches!(**elem, TypeExpr::Tuple(_)) {
                        Value::Int(combo[0])
                    } else {
                        Value::Tuple(combo.iter().map(|i| Value::Int(*i)).collect())
                    };
                    s.insert(v);
                }
            }
            Ok(Value::Set(s))
        }
        (TypeExpr::Set(attr, elem), RepTag::ExplicitFixed(inner)) => {
            let n = attr
                .exact_n()
                .ok_or_else(|| OracleError::Decode("explicit without exact size".into()))?;
            let name = rep::exp_name(base);
            let mut s = BTreeSet::new();
            for j in 1..=n {
                let full: Vec<i64> = prefix.iter().copied().chain([j]).collect();
                let v = match inner {
                    None => mat_get(get_var(env, &name)?, &full)?.clone(),
                    Some(itag) => decode_at(env, &name, &full, elem, itag)?,
                };
                s.insert(v);
            }
            Ok(Value::Set(s))
        }
        (TypeExpr::Set(attr, elem), RepTag::ExplicitFlags(inner)) => {
            let n = attr
                .exact_n()
                .or_else(|| attr.maxsize_n())
                .ok_or_else(|| OracleError::Decode("flags without a size bound".into()))?;
            let name = rep::expf_name(base);
            let flags = get_var(env, &rep::tuple_comp_name(&name, 1))?;
            let vals_name = rep::tuple_comp_name(&name, 0);
            let mut s = BTreeSet::new();
            for j in 1..=n {
                let full: Vec<i64> = prefix.iter().copied().chain([j]).collect();
                if !cell_bool(mat_get(flags, &full)?)? {
                    continue;
                }
                let v = match inner {
                    None => mat_get(get_var(env, &vals_name)?, &full)?.clone(),
                    Some(itag) => decode_at(env, &vals_name, &full, elem, itag)?,
                };
                s.insert(v);
            }
            Ok(Value::Set(s))
        }
        (TypeExpr::Function(_, from, _), RepTag::Func1D(_)) => {
            let m = get_var(env, &rep::f1d_name(base))?;
            let (l, h) = range_of(from)?;
            let mut map = BTreeMap::new();
            for i in l..=h {
                let full: Vec<i64> = prefix.iter().copied().chain([i]).collect();
                map.insert(Value::Int(i), mat_get(m, &full)?.clone());
            }
            Ok(Value::Func(map))
        }
        (TypeExpr::Function(_, from, to), RepTag::Func2D) => {
            let m = get_var(env, &rep::f2d_name(base))?;
            let (fl, fh) = range_of(from)?;
            let (tl, th) = range_of(to)?;
            let mut map = BTreeMap::new();
            for i in fl..=fh {
                for j in tl..=th {
                    let full: Vec<i64> = prefix.iter().copied().chain([i, j]).collect();
                    if cell_bool(mat_get(m, &full)?)? {
                        map.insert(Value::Int(i), Value::Int(j));
                    }
                }
            }
            Ok(Value::Func(map))
        }
        (TypeExpr::Relation(cs), RepTag::RelSetOfTuples) => {
            let setdom = rep::relation_set_dom(cs);
            let sv = decode_at(env, &rep::relset_name(base), prefix, &setdom, &RepTag::Occurrence)?;
            let s = match sv {
                Value::Set(s) => s,
                other => return oerr(format!("relation set view decoded to {other:?}")),
            };
            let r = s
                .into_iter()
                .map(|v| match v {
                    Value::Tuple(t) => t,
                    scalar => vec![scalar],
                })
                .collect();
            Ok(Value::Rel(r))
        }
        _ => oerr(format!("cannot decode {dom:?} under tag {tag:?}")),
    }
}

/// Reconstruct the abstract assignment a flat solution encodes.
pub fn decode_solution(
    abstract_spec: &Spec,
    tags: &BTreeMap<String, RepTag>,
    flat: &Assignment,
) -> Result<Assignment, OracleError> {
    let mut out = Assignment::new();
    for d in &abstract_spec.decls {
        if d.kind != DeclKind::Find {
            continue;
        }
        let v = if d.domain.is_flat() {
            get_var(flat, &d.name)?.clone()
        } else if let TypeExpr::Tuple(cs) = &d.domain {
            let parts: Vec<Value> = (0..cs.len())
                .map(|j| get_var(flat, &rep::tuple_comp_name(&d.name, j)).cloned())
                .collect::<Result<_, _>>()?;
            Value::Tuple(parts)
        } else if let TypeExpr::Matrix(idx, elem) = &d.domain {
            if let TypeExpr::Tuple(cs) = &**elem {
                // component matrices, reassembled cell-wise
                let comps: Vec<&Value> = (0..cs.len())
                    .map(|j| get_var(flat, &rep::tuple_comp_name(&d.name, j)))
                    .collect::<Result<_, _>>()?;
                fn zip_tuple(
                    comps: &[&Value],
                    idx: &[TypeExpr],
                    prefix: &mut Vec<i64>,
                ) -> Result<Value, OracleError> {
                    if idx.is_empty() {
                        let parts: Vec<Value> = comps
                            .iter()
                            .map(|m| mat_get(m, prefix).cloned())
                            .collect::<Result<_, _>>()?;
                        return Ok(Value::Tuple(parts));
                    }
                    let (l, h) = range_of(&idx[0])?;
                    let mut cells = Vec::new();
                    for i in l..=h {
                        prefix.push(i);
                        cells.push(zip_tuple(comps, &idx[1..], prefix)?);
                        prefix.pop();
                    }
                    Ok(Value::Matrix(cells, l))
                }
                zip_tuple(&comps, idx, &mut Vec::new())?
            } else {
                let tag = tags.get(&d.name).ok_or_else(|| {
                    OracleError::Decode(format!("no representation tag for `{}`", d.name))
                })?;
                decode_at(flat, &d.name, &[], &d.domain, tag)?
            }
        } else {
            let tag = tags.get(&d.name).ok_or_else(|| {
                OracleError::Decode(format!("no representation tag for `{}`", d.name))
            })?;
            decode_at(flat, &d.name, &[], &d.domain, tag)?
        };
        out.insert(d.name.clone(), v);
    }
    Ok(out)
}

// -- the equivalence check -------------------------------------------------------------

/// Human-readable rendering of a value (solution listings and witnesses).
pub fn format_value(v: &Value) -> String {
    fmt_value(v)
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Set(s) => format!(
            "{{{}}}",
            s.iter().map(fmt_value).collect::<Vec<_>>().join(", ")
        ),
        Value::Tuple(t) => format!(
            "({})",
            t.iter().map(fmt_value).collect::<Vec<_>>().join(", ")
        ),
        Value::Func(m) => format!(
            "function ({})",
            m.iter()
                .map(|(k, x)| format!("{} --> {}", fmt_value(k), fmt_value(x)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        Value::Rel(r) => format!(
            "relation ({})",
            r.iter()
                .map(|t| format!(
                    "({})",
                    t.iter().map(fmt_value).collect::<Vec<_>>().join(", ")
                ))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        Value::Matrix(cells, _) => format!(
            "[{}]",
            cells.iter().map(fmt_value).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn fmt_assignment(a: &Assignment) -> String {
    a.iter()
        .map(|(n, v)| format!("{n} = {}", fmt_value(v)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Outcome of checking one flat model against its source specification.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub equivalent: bool,
    pub abstract_solutions: usize,
    pub flat_solutions: usize,
    /// A decoded flat solution the specification does not admit.
    pub spurious: Option<String>,
    /// A specification solution no flat solution decodes to.
    pub missing: Option<String>,
    /// An abstract solution encoded by more than one flat solution.
    pub duplicate: Option<String>,
}

impl CheckReport {
    pub fn failure_summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some(w) = &self.spurious {
            parts.push(format!("spurious solution: {w}"));
        }
        if let Some(w) = &self.missing {
            parts.push(format!("missing solution: {w}"));
        }
        if let Some(w) = &self.duplicate {
            parts.push(format!("non-canonical encoding of: {w}"));
        }
        parts.join("; ")
    }
}

/// Prove (by exhaustion) that `model` has exactly the same solutions as
/// `abstract_spec`, one flat solution per abstract solution.
pub fn check_equivalence(
    abstract_spec: &Spec,
    model: &FlatModel,
) -> Result<CheckReport, OracleError> {
    check_equivalence_with(abstract_spec, model, UndefPolicy::Exclude)
}

/// As [`check_equivalence`], with an explicit undefinedness policy for the
/// abstract side.
pub fn check_equivalence_with(
    abstract_spec: &Spec,
    model: &FlatModel,
    undef: UndefPolicy,
) -> Result<CheckReport, OracleError> {
    let tags = tags_from_summary(&model.rep_summary)?;
    let abs = enumerate_solutions_with(abstract_spec, undef)?;
    let flat = enumerate_solutions(&model.spec)?;
    let abs_set: BTreeSet<&Assignment> = abs.iter().collect();

    let mut decoded_counts: BTreeMap<Assignment, usize> = BTreeMap::new();
    for f in &flat {
        let d = decode_solution(abstract_spec, &tags, f)?;
        *decoded_counts.entry(d).or_insert(0) += 1;
    }
    let spurious = decoded_counts
        .keys()
        .find(|d| !abs_set.contains(d))
        .map(fmt_assignment);
    let missing = abs
        .iter()
        .find(|a| !decoded_counts.contains_key(*a))
        .map(fmt_assignment);
    let duplicate = decoded_counts
        .iter()
        .find(|(_, c)| **c > 1)
        .map(|(d, _)| fmt_assignment(d));
    Ok(CheckReport {
        equivalent: spurious.is_none() && missing.is_none() && duplicate.is_none(),
        abstract_solutions: abs.len(),
        flat_solutions: flat.len(),
        spurious,
        missing,
        duplicate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_spec_text;

    #[test]
    fn enumerates_and_filters_optima() {
        let spec = parse_spec_text(
            "find x : int(1..5) maximising x such that (x % 2) = 0",
        )
        .unwrap();
        let sols = enumerate_solutions(&spec).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0]["x"], Value::Int(4));
    }

    #[test]
    fn abstract_set_enumeration_counts_subsets() {
        let spec =
            parse_spec_text("find s : set of int(1..3) such that 2 elem s").unwrap();
        let sols = enumerate_solutions(&spec).unwrap();
        assert_eq!(sols.len(), 4); // {2} plus any subset of {1,3}
    }

    #[test]
    fn decode_inverts_occurrence_and_flags() {
        let spec = parse_spec_text("find s : set (maxsize 2) of int(1..3)").unwrap();
        let mut tags = BTreeMap::new();
        tags.insert("s".to_string(), RepTag::Occurrence);
        let mut flat = Assignment::new();
        flat.insert(
            "s_occ".into(),
            Value::Matrix(
                vec![Value::Bool(true), Value::Bool(false), Value::Bool(true)],
                1,
            ),
        );
        let dec = decode_solution(&spec, &tags, &flat).unwrap();
        assert_eq!(
            dec["s"],
            Value::Set([Value::Int(1), Value::Int(3)].into_iter().collect())
        );

        tags.insert("s".to_string(), RepTag::ExplicitFlags(None));
        let mut flat = Assignment::new();
        flat.insert(
            "s_expf_t0".into(),
            Value::Matrix(vec![Value::Int(2), Value::Int(1)], 1),
        );
        flat.insert(
            "s_expf_t1".into(),
            Value::Matrix(vec![Value::Bool(true), Value::Bool(false)], 1),
        );
        let dec = decode_solution(&spec, &tags, &flat).unwrap();
        assert_eq!(dec["s"], Value::Set([Value::Int(2)].into_iter().collect()));
    }

    #[test]
    fn summary_labels_round_trip() {
        let tags = tags_from_summary(&[
            "x#occurrence".into(),
            "y@c0#explicit[flags]".into(),
            "y@c1#occurrence".into(),
            "f#func2d".into(),
        ])
        .unwrap();
        assert_eq!(tags["x"], RepTag::Occurrence);
        assert_eq!(
            tags["y"],
            RepTag::ExplicitFixed(Some(Box::new(RepTag::ExplicitFlags(None))))
        );
        assert_eq!(tags["f"], RepTag::Func2D);
    }

    #[test]
    fn too_large_spaces_are_rejected() {
        let spec = parse_spec_text(
            "find a : set of int(1..30) find b : set of int(1..30)",
        )
        .unwrap();
        assert!(matches!(
            enumerate_solutions(&spec),
            Err(OracleError::TooLarge(_))
        ));
    }
}
