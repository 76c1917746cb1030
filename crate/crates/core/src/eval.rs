//! Abstract values and the expression interpreter.
//!
//! One evaluator serves both sides of the equivalence check: abstract
//! specifications (sets, functions, relations, tuples) and flat models
//! (ints, bools, matrices). Booleans coerce to 0/1 in arithmetic contexts,
//! matching the printed form of the occurrence rules (`sum i : dom . m[i]`).
//!
//! Evaluation is strict: both operands of a connective are evaluated before
//! combining, so an undefined sub-expression (partial function application,
//! min of an empty set, division by zero) always surfaces as an error.

use crate::ast::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Set(BTreeSet<Value>),
    Tuple(Vec<Value>),
    Func(BTreeMap<Value, Value>),
    Rel(BTreeSet<Vec<Value>>),
    /// Matrix cells plus the lower bound of the index range.
    Matrix(Vec<Value>, i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalError(pub String);

impl std::fmt::Display for EvalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

type EResult = Result<Value, EvalError>;

fn err<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError(msg.into()))
}

#[derive(Debug, Clone, Default)]
pub struct Env {
    pub bindings: BTreeMap<String, Value>,
}

impl Env {
    pub fn with(&self, name: &str, v: Value) -> Env {
        let mut e = self.clone();
        e.bindings.insert(name.to_string(), v);
        e
    }

    pub fn insert(&mut self, name: &str, v: Value) {
        self.bindings.insert(name.to_string(), v);
    }
}

fn as_int(v: &Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(*n),
        Value::Bool(b) => Ok(if *b { 1 } else { 0 }),
        other => err(format!("expected an integer, got {other:?}")),
    }
}

fn as_bool(v: &Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => err(format!("expected a boolean, got {other:?}")),
    }
}

fn as_set(v: &Value) -> Result<BTreeSet<Value>, EvalError> {
    match v {
        Value::Set(s) => Ok(s.clone()),
        Value::Rel(r) => Ok(r.iter().map(|t| Value::Tuple(t.clone())).collect()),
        other => err(format!("expected a set, got {other:?}")),
    }
}

/// Elements a quantifier ranges over when its domain is a collection.
fn collection_elems(v: &Value) -> Result<Vec<Value>, EvalError> {
    match v {
        Value::Set(s) => Ok(s.iter().cloned().collect()),
        Value::Rel(r) => Ok(r.iter().map(|t| Value::Tuple(t.clone())).collect()),
        other => err(format!("cannot quantify over {other:?}")),
    }
}

pub fn eval_expr(e: &Expr, env: &Env) -> EResult {
    match e {
        Expr::IntLit(v) => Ok(Value::Int(*v)),
        Expr::BoolLit(b) => Ok(Value::Bool(*b)),
        Expr::Ref(n) => env
            .bindings
            .get(n)
            .cloned()
            .ok_or_else(|| EvalError(format!("unbound name `{n}`"))),
        Expr::UnOp(op, a) => {
            let v = eval_expr(a, env)?;
            match op {
                UnOp::Abs => Ok(Value::Int(as_int(&v)?.abs())),
                UnOp::Neg => Ok(Value::Int(-as_int(&v)?)),
                UnOp::Not => Ok(Value::Bool(!as_bool(&v)?)),
                UnOp::Card => match &v {
                    Value::Set(s) => Ok(Value::Int(s.len() as i64)),
                    Value::Rel(r) => Ok(Value::Int(r.len() as i64)),
                    other => err(format!("card of {other:?}")),
                },
                UnOp::Min | UnOp::Max => {
                    let s = as_set(&v)?;
                    let mut it = s.iter().map(as_int);
                    let first = match it.next() {
                        Some(x) => x?,
                        None => return err("min/max of an empty set"),
                    };
                    let mut best = first;
                    for x in it {
                        let x = x?;
                        best = if *op == UnOp::Min { best.min(x) } else { best.max(x) };
                    }
                    Ok(Value::Int(best))
                }
                UnOp::Defined => match &v {
                    Value::Func(m) => Ok(Value::Set(m.keys().cloned().collect())),
                    other => err(format!("defined of {other:?}")),
                },
                UnOp::Range => match &v {
                    Value::Func(m) => Ok(Value::Set(m.values().cloned().collect())),
                    other => err(format!("range of {other:?}")),
                },
                UnOp::AllDiff => match &v {
                    Value::Matrix(cells, _) => {
                        let mut seen = BTreeSet::new();
                        for c in cells {
                            if !seen.insert(c.clone()) {
                                return Ok(Value::Bool(false));
                            }
                        }
                        Ok(Value::Bool(true))
                    }
                    other => err(format!("alldiff of {other:?}")),
                },
            }
        }
        Expr::BinOp(op, a, b) => {
            let va = eval_expr(a, env)?;
            let vb = eval_expr(b, env)?;
            use BinOp::*;
            match op {
                Add => Ok(Value::Int(as_int(&va)? + as_int(&vb)?)),
                Sub => Ok(Value::Int(as_int(&va)? - as_int(&vb)?)),
                Mul => Ok(Value::Int(as_int(&va)? * as_int(&vb)?)),
                Div => {
                    let d = as_int(&vb)?;
                    if d == 0 {
                        return err("division by zero");
                    }
                    Ok(Value::Int(as_int(&va)? / d))
                }
                Mod => {
                    let d = as_int(&vb)?;
                    if d == 0 {
                        return err("modulo by zero");
                    }
                    Ok(Value::Int(as_int(&va)? % d))
                }
                Eq => Ok(Value::Bool(va == vb)),
                Neq => Ok(Value::Bool(va != vb)),
                Lt => Ok(Value::Bool(as_int(&va)? < as_int(&vb)?)),
                Gt => Ok(Value::Bool(as_int(&va)? > as_int(&vb)?)),
                Le => Ok(Value::Bool(as_int(&va)? <= as_int(&vb)?)),
                Ge => Ok(Value::Bool(as_int(&va)? >= as_int(&vb)?)),
                And => Ok(Value::Bool(as_bool(&va)? && as_bool(&vb)?)),
                Or => Ok(Value::Bool(as_bool(&va)? || as_bool(&vb)?)),
                Implies => Ok(Value::Bool(!as_bool(&va)? || as_bool(&vb)?)),
                Iff => Ok(Value::Bool(as_bool(&va)? == as_bool(&vb)?)),
                Elem => match &vb {
                    Value::Set(s) => Ok(Value::Bool(s.contains(&va))),
                    Value::Rel(r) => match &va {
                        Value::Tuple(t) => Ok(Value::Bool(r.contains(t))),
                        other => err(format!("membership of {other:?} in a relation")),
                    },
                    other => err(format!("membership in {other:?}")),
                },
                Union => Ok(Value::Set(as_set(&va)?.union(&as_set(&vb)?).cloned().collect())),
                Intersect => {
                    Ok(Value::Set(as_set(&va)?.intersection(&as_set(&vb)?).cloned().collect()))
                }
                SubsetEq => Ok(Value::Bool(as_set(&va)?.is_subset(&as_set(&vb)?))),
                Subset => {
                    let (sa, sb) = (as_set(&va)?, as_set(&vb)?);
                    Ok(Value::Bool(sa.is_subset(&sb) && sa != sb))
                }
                SupsetEq => Ok(Value::Bool(as_set(&vb)?.is_subset(&as_set(&va)?))),
                Supset => {
                    let (sa, sb) = (as_set(&va)?, as_set(&vb)?);
                    Ok(Value::Bool(sb.is_subset(&sa) && sa != sb))
                }
            }
        }
        Expr::Quant { kind, binder, over, body } => {
            let elems: Vec<Value> = match over {
                QuantDomain::Domain(t) => domain_values(t).map_err(EvalError)?,
                QuantDomain::Collection(c) => collection_elems(&eval_expr(c, env)?)?,
            };
            match kind {
                QuantKind::Forall => {
                    let mut acc = true;
                    for v in elems {
                        let r = eval_expr(body, &env.with(binder, v))?;
                        acc &= as_bool(&r)?;
                    }
                    Ok(Value::Bool(acc))
                }
                QuantKind::Exists => {
                    let mut acc = false;
                    for v in elems {
                        let r = eval_expr(body, &env.with(binder, v))?;
                        acc |= as_bool(&r)?;
                    }
                    Ok(Value::Bool(acc))
                }
                QuantKind::Sum => {
                    let mut acc = 0i64;
                    for v in elems {
                        let r = eval_expr(body, &env.with(binder, v))?;
                        acc += as_int(&r)?;
                    }
                    Ok(Value::Int(acc))
                }
            }
        }
        Expr::MatrixIndex(base, idx) => {
            let mut v = eval_expr(base, env)?;
            for i in idx {
                let iv = as_int(&eval_expr(i, env)?)?;
                match v {
                    Value::Matrix(cells, lo) => {
                        let off = iv - lo;
                        if off < 0 || off as usize >= cells.len() {
                            return err(format!("matrix index {iv} out of bounds"));
                        }
                        v = cells[off as usize].clone();
                    }
                    other => return err(format!("indexing into {other:?}")),
                }
            }
            Ok(v)
        }
        Expr::TupleIndex(base, i) => match eval_expr(base, env)? {
            Value::Tuple(t) => t
                .get(*i)
                .cloned()
                .ok_or_else(|| EvalError(format!("tuple index {i} out of bounds"))),
            other => err(format!("tuple-indexing into {other:?}")),
        },
        Expr::FuncApp(f, a) => {
            let fv = eval_expr(f, env)?;
            let av = eval_expr(a, env)?;
            match fv {
                Value::Func(m) => m
                    .get(&av)
                    .cloned()
                    .ok_or_else(|| EvalError(format!("function applied outside its defined set at {av:?}"))),
                other => err(format!("applying {other:?} as a function")),
            }
        }
        Expr::FuncInvApp(..) => err("function inverse application is not supported"),
        Expr::RelProj(base, args) => {
            let rv = eval_expr(base, env)?;
            let rel = match rv {
                Value::Rel(r) => r,
                other => return err(format!("projecting {other:?} as a relation")),
            };
            let mut concrete: Vec<Option<Value>> = Vec::with_capacity(args.len());
            let mut underscores = 0usize;
            for a in args {
                match a {
                    ProjArg::Expr(e) => concrete.push(Some(eval_expr(e, env)?)),
                    ProjArg::Underscore => {
                        underscores += 1;
                        concrete.push(None);
                    }
                }
            }
            if let Some(t) = rel.iter().next() {
                if t.len() != args.len() {
                    return err("projection arity mismatch");
                }
            }
            if underscores == 0 {
                let t: Vec<Value> = concrete.into_iter().map(|v| v.unwrap()).collect();
                Ok(Value::Bool(rel.contains(&t)))
            } else {
                let mut out = BTreeSet::new();
                for t in &rel {
                    let matches = t
                        .iter()
                        .zip(&concrete)
                        .all(|(tv, cv)| cv.as_ref().map(|c| c == tv).unwrap_or(true));
                    if matches {
                        let proj: Vec<Value> = t
                            .iter()
                            .zip(&concrete)
                            .filter(|(_, cv)| cv.is_none())
                            .map(|(tv, _)| tv.clone())
                            .collect();
                        out.insert(proj);
                    }
                }
                if underscores == 1 {
                    // a single open position projects to a set of scalars
                    Ok(Value::Set(out.into_iter().map(|mut t| t.remove(0)).collect()))
                } else {
                    Ok(Value::Rel(out))
                }
            }
        }
        Expr::TupleLit(es) => Ok(Value::Tuple(
            es.iter().map(|x| eval_expr(x, env)).collect::<Result<_, _>>()?,
        )),
        Expr::SetLit(es) => Ok(Value::Set(
            es.iter().map(|x| eval_expr(x, env)).collect::<Result<_, _>>()?,
        )),
        Expr::FuncLit(ps) => {
            let mut m = BTreeMap::new();
            for (a, b) in ps {
                let k = eval_expr(a, env)?;
                let v = eval_expr(b, env)?;
                if m.insert(k.clone(), v).is_some() {
                    return err(format!("function literal maps {k:?} twice"));
                }
            }
            Ok(Value::Func(m))
        }
        Expr::RelLit(ts) => {
            let mut r = BTreeSet::new();
            for t in ts {
                match eval_expr(t, env)? {
                    Value::Tuple(vals) => {
                        r.insert(vals);
                    }
                    other => return err(format!("relation literal element {other:?} is not a tuple")),
                }
            }
            Ok(Value::Rel(r))
        }
        Expr::Bubble { .. } => err("bubble reached the evaluator"),
    }
}

// ---------------------------------------------------------------------------
// domain enumeration

/// Number of values in a concrete domain, for cap checks. `None` on overflow.
pub fn domain_count(t: &TypeExpr) -> Result<Option<u128>, String> {
    fn choose(n: u128, k: u128) -> Option<u128> {
        if k > n {
            return Some(0);
        }
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc.checked_mul(n - i)?;
            acc /= i + 1;
        }
        Some(acc)
    }
    match t {
        TypeExpr::IntRange(l, h) => Ok(Some(if h >= l { (h - l + 1) as u128 } else { 0 })),
        TypeExpr::Bool => Ok(Some(2)),
        TypeExpr::Set(attr, elem) => {
            let n = match domain_count(elem)? {
                Some(n) => n,
                None => return Ok(None),
            };
            match attr {
                SizeAttr::Exact(k) => Ok(choose(n, *k as u128)),
                SizeAttr::MaxSize(k) => {
                    let mut acc: u128 = 0;
                    for i in 0..=(*k as u128) {
                        match choose(n, i) {
                            Some(c) => acc = match acc.checked_add(c) {
                                Some(a) => a,
                                None => return Ok(None),
                            },
                            None => return Ok(None),
                        }
                    }
                    Ok(Some(acc))
                }
                SizeAttr::Unbounded => {
                    if n > 64 {
                        return Ok(None);
                    }
                    Ok(2u128.checked_pow(n as u32))
                }
                _ => Err("symbolic size attribute in a concrete domain".into()),
            }
        }
        TypeExpr::Tuple(cs) => {
            let mut acc: u128 = 1;
            for c in cs {
                match domain_count(c)? {
                    Some(n) => {
                        acc = match acc.checked_mul(n) {
                            Some(a) => a,
                            None => return Ok(None),
                        }
                    }
                    None => return Ok(None),
                }
            }
            Ok(Some(acc))
        }
        TypeExpr::Relation(cs) => {
            match domain_count(&TypeExpr::Tuple(cs.clone()))? {
                Some(n) if n <= 64 => Ok(2u128.checked_pow(n as u32)),
                _ => Ok(None),
            }
        }
        TypeExpr::Function(attrs, from, to) => {
            let nf = match domain_count(from)? {
                Some(n) => n,
                None => return Ok(None),
            };
            let nt = match domain_count(to)? {
                Some(n) => n,
                None => return Ok(None),
            };
            let base = if attrs.total { nt } else { nt + 1 };
            // upper bound; injective/surjective filtering only shrinks it
            base.checked_pow(nf.min(64) as u32).map(Some).ok_or(()).or(Ok(None))
        }
        TypeExpr::Matrix(idx, elem) => {
            let mut cells: u128 = 1;
            for i in idx {
                match domain_count(i)? {
                    Some(n) => {
                        cells = match cells.checked_mul(n) {
                            Some(c) => c,
                            None => return Ok(None),
                        }
                    }
                    None => return Ok(None),
                }
            }
            let ne = match domain_count(elem)? {
                Some(n) => n,
                None => return Ok(None),
            };
            if cells > 64 {
                return Ok(None);
            }
            Ok(ne.checked_pow(cells as u32))
        }
        other => Err(format!("cannot count values of a non-concrete domain {other:?}")),
    }
}

/// All values of a concrete, finite domain, in a fixed deterministic order.
pub fn domain_values(t: &TypeExpr) -> Result<Vec<Value>, String> {
    match t {
        TypeExpr::IntRange(l, h) => Ok((*l..=*h).map(Value::Int).collect()),
        TypeExpr::Bool => Ok(vec![Value::Bool(false), Value::Bool(true)]),
        TypeExpr::Set(attr, elem) => {
            let elems = domain_values(elem)?;
            let n = elems.len();
            if n > 24 {
                return Err(format!("set element domain too large ({n})"));
            }
            let keep = |sz: usize| match attr {
                SizeAttr::Exact(k) => sz as i64 == *k,
                SizeAttr::MaxSize(k) => (sz as i64) <= *k,
                SizeAttr::Unbounded => true,
                _ => false,
            };
            let mut out = Vec::new();
            for mask in 0u32..(1u32 << n) {
                let sz = mask.count_ones() as usize;
                if !keep(sz) {
                    continue;
                }
                let s: BTreeSet<Value> = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| elems[i].clone())
                    .collect();
                out.push(Value::Set(s));
            }
            Ok(out)
        }
        TypeExpr::Tuple(cs) => {
            let parts: Vec<Vec<Value>> = cs.iter().map(domain_values).collect::<Result<_, _>>()?;
            let mut out = vec![Vec::new()];
            for p in &parts {
                let mut next = Vec::new();
                for prefix in &out {
                    for v in p {
                        let mut t = prefix.clone();
                        t.push(v.clone());
                        next.push(t);
                    }
                }
                out = next;
            }
            Ok(out.into_iter().map(Value::Tuple).collect())
        }
        TypeExpr::Relation(cs) => {
            let tuples = domain_values(&TypeExpr::Tuple(cs.clone()))?;
            let n = tuples.len();
            if n > 24 {
                return Err(format!("relation tuple space too large ({n})"));
            }
            let tuples: Vec<Vec<Value>> = tuples
                .into_iter()
                .map(|v| match v {
                    Value::Tuple(t) => t,
                    _ => unreachable!(),
                })
                .collect();
            let mut out = Vec::new();
            for mask in 0u32..(1u32 << n) {
                let r: BTreeSet<Vec<Value>> = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| tuples[i].clone())
                    .collect();
                out.push(Value::Rel(r));
            }
            Ok(out)
        }
        TypeExpr::Function(attrs, from, to) => {
            let froms = domain_values(from)?;
            let tos = domain_values(to)?;
            // per argument: either one of the images, or (if partial) undefined
            let mut out: Vec<BTreeMap<Value, Value>> = vec![BTreeMap::new()];
            for fv in &froms {
                let mut next = Vec::new();
                for m in &out {
                    if !attrs.total {
                        next.push(m.clone());
                    }
                    for tv in &tos {
                        let mut m2 = m.clone();
                        m2.insert(fv.clone(), tv.clone());
                        next.push(m2);
                    }
                }
                out = next;
            }
            let mut res = Vec::new();
            for m in out {
                if attrs.injective {
                    let imgs: BTreeSet<&Value> = m.values().collect();
                    if imgs.len() != m.len() {
                        continue;
                    }
                }
                if attrs.surjective {
                    let imgs: BTreeSet<&Value> = m.values().collect();
                    if !tos.iter().all(|t| imgs.contains(t)) {
                        continue;
                    }
                }
                res.push(Value::Func(m));
            }
            Ok(res)
        }
        TypeExpr::Matrix(idx, elem) => {
            if idx.is_empty() {
                return domain_values(elem);
            }
            let lo = match &idx[0] {
                TypeExpr::IntRange(l, _) => *l,
                other => return Err(format!("matrix index must be an int range, got {other:?}")),
            };
            let n = match domain_count(&idx[0])? {
                Some(n) => n as usize,
                None => return Err("matrix index range too large".into()),
            };
            let inner = if idx.len() == 1 {
                (**elem).clone()
            } else {
                TypeExpr::Matrix(idx[1..].to_vec(), elem.clone())
            };
            let cell_vals = domain_values(&inner)?;
            let mut out: Vec<Vec<Value>> = vec![Vec::new()];
            for _ in 0..n {
                let mut next = Vec::new();
                for prefix in &out {
                    for v in &cell_vals {
                        let mut row = prefix.clone();
                        row.push(v.clone());
                        next.push(row);
                    }
                }
                out = next;
            }
            Ok(out.into_iter().map(|cells| Value::Matrix(cells, lo)).collect())
        }
        other => Err(format!("cannot enumerate a non-concrete domain {other:?}")),
    }
}

/// Check a literal value against a declared (concrete) domain.
pub fn value_conforms(v: &Value, t: &TypeExpr) -> bool {
    match (v, t) {
        (Value::Int(n), TypeExpr::IntRange(l, h)) => l <= n && n <= h,
        (Value::Int(_), TypeExpr::IntUnbounded) => true,
        (Value::Bool(_), TypeExpr::Bool) => true,
        (Value::Set(s), TypeExpr::Set(attr, elem)) => {
            let size_ok = match attr {
                SizeAttr::Exact(k) => s.len() as i64 == *k,
                SizeAttr::MaxSize(k) => (s.len() as i64) <= *k,
                _ => true,
            };
            size_ok && s.iter().all(|x| value_conforms(x, elem))
        }
        (Value::Tuple(vs), TypeExpr::Tuple(cs)) => {
            vs.len() == cs.len() && vs.iter().zip(cs).all(|(x, c)| value_conforms(x, c))
        }
        (Value::Func(m), TypeExpr::Function(attrs, from, to)) => {
            let domain_ok = m.keys().all(|k| value_conforms(k, from));
            let image_ok = m.values().all(|x| value_conforms(x, to));
            let total_ok = if attrs.total {
                match domain_count(from) {
                    Ok(Some(n)) => m.len() as u128 == n,
                    _ => true,
                }
            } else {
                true
            };
            domain_ok && image_ok && total_ok
        }
        (Value::Rel(r), TypeExpr::Relation(cs)) => r.iter().all(|t| {
            t.len() == cs.len() && t.iter().zip(cs).all(|(x, c)| value_conforms(x, c))
        }),
        (Value::Matrix(cells, lo), TypeExpr::Matrix(idx, elem)) => {
            if idx.is_empty() {
                return false;
            }
            let (l, h) = match &idx[0] {
                TypeExpr::IntRange(l, h) => (*l, *h),
                _ => return false,
            };
            if *lo != l || cells.len() as i64 != h - l + 1 {
                return false;
            }
            let inner = if idx.len() == 1 {
                (**elem).clone()
            } else {
                TypeExpr::Matrix(idx[1..].to_vec(), elem.clone())
            };
            cells.iter().all(|c| value_conforms(c, &inner))
        }
        _ => false,
    }
}

/// Render a value as a literal expression (for printing flat lettings).
pub fn value_to_expr(v: &Value) -> Expr {
    match v {
        Value::Int(n) => Expr::IntLit(*n),
        Value::Bool(b) => Expr::BoolLit(*b),
        Value::Set(s) => Expr::SetLit(s.iter().map(value_to_expr).collect()),
        Value::Tuple(t) => Expr::TupleLit(t.iter().map(value_to_expr).collect()),
        Value::Func(m) => {
            Expr::FuncLit(m.iter().map(|(k, x)| (value_to_expr(k), value_to_expr(x))).collect())
        }
        Value::Rel(r) => Expr::RelLit(
            r.iter()
                .map(|t| Expr::TupleLit(t.iter().map(value_to_expr).collect()))
                .collect(),
        ),
        Value::Matrix(..) => unreachable!("matrix literals are never printed"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr_text;

    fn ev(src: &str, env: &Env) -> Value {
        eval_expr(&parse_expr_text(src).unwrap(), env).unwrap()
    }

    #[test]
    fn subseteq_and_max() {
        let env = Env::default();
        assert_eq!(ev("{1,3} subseteq {1,2,3}", &env), Value::Bool(true));
        assert_eq!(ev("max({2,5,3})", &env), Value::Int(5));
        assert!(eval_expr(&parse_expr_text("min({})").unwrap(), &env).is_err());
    }

    #[test]
    fn knapsack_objective_by_hand() {
        // x = {3}, value = {1->3, 2->4, 3->5}: sum i elem x . value(i) = 5
        let mut env = Env::default();
        env.insert("x", Value::Set([Value::Int(3)].into_iter().collect()));
        env.insert(
            "value",
            Value::Func(
                [(Value::Int(1), Value::Int(3)), (Value::Int(2), Value::Int(4)), (Value::Int(3), Value::Int(5))]
                    .into_iter()
                    .collect(),
            ),
        );
        assert_eq!(ev("sum i elem x . value(i)", &env), Value::Int(5));
    }

    #[test]
    fn bool_coerces_in_arithmetic() {
        let mut env = Env::default();
        env.insert(
            "m",
            Value::Matrix(vec![Value::Bool(true), Value::Bool(false), Value::Bool(true)], 1),
        );
        assert_eq!(ev("sum i : int(1..3) . m[i]", &env), Value::Int(2));
        assert_eq!(ev("(1 = 1) * 7", &env), Value::Int(7));
    }

    #[test]
    fn relation_projection() {
        let mut env = Env::default();
        let rel: BTreeSet<Vec<Value>> = [
            vec![Value::Int(1), Value::Int(1)],
            vec![Value::Int(1), Value::Int(2)],
            vec![Value::Int(2), Value::Int(1)],
        ]
        .into_iter()
        .collect();
        env.insert("r", Value::Rel(rel));
        assert_eq!(ev("r<1,1>", &env), Value::Bool(true));
        assert_eq!(ev("r<2,2>", &env), Value::Bool(false));
        let proj = ev("r<1,_>", &env);
        let expected: BTreeSet<Value> = [Value::Int(1), Value::Int(2)].into_iter().collect();
        assert_eq!(proj, Value::Set(expected));
        assert_eq!(ev("2 elem r<1,_>", &env), Value::Bool(true));
        assert_eq!(ev("2 elem r<2,_>", &env), Value::Bool(false));
    }

    #[test]
    fn division_truncates_toward_zero_and_mod_takes_dividend_sign() {
        let env = Env::default();
        assert_eq!(ev("7 / 2", &env), Value::Int(3));
        assert_eq!(ev("(-7) / 2", &env), Value::Int(-3));
        assert_eq!(ev("(-7) % 2", &env), Value::Int(-1));
        assert_eq!(ev("7 % (-2)", &env), Value::Int(1));
    }

    #[test]
    fn set_domain_counts() {
        // C(3,2) = 3 exact-size-2 subsets of int(1..3)
        let t = TypeExpr::Set(SizeAttr::Exact(2), Box::new(TypeExpr::IntRange(1, 3)));
        assert_eq!(domain_values(&t).unwrap().len(), 3);
        assert_eq!(domain_count(&t).unwrap(), Some(3));
        let t = TypeExpr::Set(SizeAttr::MaxSize(2), Box::new(TypeExpr::IntRange(1, 3)));
        assert_eq!(domain_values(&t).unwrap().len(), 7);
        // total functions int(1..2) -> int(1..2): 4; partial: 9
        let f = TypeExpr::Function(
            FuncAttrs { total: true, ..Default::default() },
            Box::new(TypeExpr::IntRange(1, 2)),
            Box::new(TypeExpr::IntRange(1, 2)),
        );
        assert_eq!(domain_values(&f).unwrap().len(), 4);
        let p = TypeExpr::Function(
            FuncAttrs::default(),
            Box::new(TypeExpr::IntRange(1, 2)),
            Box::new(TypeExpr::IntRange(1, 2)),
        );
        assert_eq!(domain_values(&p).unwrap().len(), 9);
    }
}
