//! The non-deterministic rewrite engine (phase 7).
//!
//! A rewrite rule is a partial function from an expression to a *set* of
//! alternative replacements. The rules of a database combine into a total
//! mapping: where at least one rule matches, the union of all matching rules'
//! outputs; elsewhere, the singleton of the input. Rewriting proceeds
//! leftmost-innermost — the first (in traversal order) innermost node where
//! the combined mapping is non-trivial is replaced, and each alternative
//! continues as its own branch. The models produced are exactly the reachable
//! normal forms.
//!
//! A few rules are marked *exclusive*: when such a rule matches a node it
//! overrides all other rules there (used for constant folding and for the
//! direct occurrence shortcut of `elem`, which would otherwise double every
//! membership into two observationally equal models).
//!
//! Rules run against a context giving them the current specification, the
//! representation assignment with the active slot, the quantifier binders and
//! bubble auxiliaries in scope, and a fresh-name counter.

use crate::ast::*;
use crate::diag::RefineError;
use crate::rep::{self, RepAssignment, RepSpec, Slot};
use crate::typecheck;

/// Everything a rule may consult while matching at one node.
pub struct RuleCtx<'a> {
    pub spec: &'a Spec,
    pub assignment: &'a RepAssignment,
    pub slot: Slot,
    /// Quantifier binders in scope, innermost last.
    pub binders: Vec<(String, TypeExpr)>,
    /// Auxiliary declarations of enclosing bubbles.
    pub scoped: Vec<Decl>,
    pub fresh: u32,
}

/// What a representation lookup resolves to: the (possibly virtual) carrier
/// name, the matrix indices already applied to reach the object, its tag and
/// its abstract domain. A relation resolves directly to its set-of-tuples
/// view (`r` becomes `r_set` under occurrence).
#[derive(Debug, Clone)]
pub struct RepInfo {
    pub base: String,
    pub trail: Vec<Expr>,
    pub tag: RepTag,
    pub dom: TypeExpr,
}

impl<'a> RuleCtx<'a> {
    pub fn new(spec: &'a Spec, assignment: &'a RepAssignment) -> Self {
        RuleCtx {
            spec,
            assignment,
            slot: Slot::Global,
            binders: Vec::new(),
            scoped: Vec::new(),
            fresh: 0,
        }
    }

    pub fn decl_of(&self, name: &str) -> Option<&Decl> {
        self.scoped
            .iter()
            .rev()
            .find(|d| d.name == name)
            .or_else(|| self.spec.decl(name))
    }

    /// Shape-level type of `e` under the binders and bubble auxiliaries in
    /// scope; `None` when the expression does not type yet (e.g. it already
    /// references matrices only induced at finalization).
    pub fn type_of(&self, e: &Expr) -> Option<TypeExpr> {
        let mut binders = self.binders.clone();
        for d in &self.scoped {
            binders.push((d.name.clone(), d.domain.clone()));
        }
        typecheck::type_of(e, self.spec, &binders).ok()
    }

    /// The representation of a (possibly indexed) abstract object, if the
    /// current slot assigns one.
    pub fn rep_of(&self, e: &Expr) -> Option<RepInfo> {
        let (name, trail) = lift_indexed(e)?;
        let d = self.decl_of(&name)?;
        if !matches!(d.kind, DeclKind::Find | DeclKind::AuxFind) {
            return None;
        }
        // peel matrix dimensions already consumed by the index trail
        let mut dom = d.domain.clone();
        let mut rest = trail.len();
        while rest > 0 {
            match dom {
                TypeExpr::Matrix(idx, elem) if idx.len() <= rest => {
                    rest -= idx.len();
                    dom = *elem;
                }
                _ => return None,
            }
        }
        if !dom.is_abstract() {
            return None;
        }
        let tag = d
            .rep_tag
            .clone()
            .or_else(|| self.assignment.get(&(name.clone(), self.slot)).cloned())
            .or_else(|| self.assignment.get(&(name.clone(), Slot::Global)).cloned())?;
        // a relation is handled through its set-of-tuples view
        if let (TypeExpr::Relation(cs), RepTag::RelSetOfTuples) = (&dom, &tag) {
            let elem = if cs.len() == 1 { cs[0].clone() } else { TypeExpr::Tuple(cs.clone()) };
            return Some(RepInfo {
                base: rep::relset_name(&name),
                trail,
                tag: RepTag::Occurrence,
                dom: TypeExpr::Set(SizeAttr::Unbounded, Box::new(elem)),
            });
        }
        Some(RepInfo { base: name, trail, tag, dom })
    }

    /// A name not declared anywhere in scope: `stem` itself if free, else
    /// `stem_2`, `stem_3`, …. Auxiliaries still sitting inside bubbles of
    /// other constraints count as taken, so two distinct introductions can
    /// never merge at finalization.
    pub fn fresh_name(&mut self, stem: &str) -> String {
        fn bubble_aux_names(e: &Expr, out: &mut std::collections::BTreeSet<String>) {
            if let Expr::Bubble { aux, .. } = e {
                for d in aux {
                    out.insert(d.name.clone());
                }
            }
            for c in e.children() {
                bubble_aux_names(c, out);
            }
        }
        let mut pending = std::collections::BTreeSet::new();
        if let Some((_, obj)) = &self.spec.objective {
            bubble_aux_names(obj, &mut pending);
        }
        for c in &self.spec.constraints {
            bubble_aux_names(c, &mut pending);
        }
        let taken = |ctx: &RuleCtx, n: &str| -> bool {
            ctx.decl_of(n).is_some()
                || ctx.binders.iter().any(|(b, _)| b == n)
                || pending.contains(n)
        };
        if !taken(self, stem) {
            return stem.to_string();
        }
        loop {
            self.fresh += 1;
            let cand = format!("{stem}_{}", self.fresh + 1);
            if !taken(self, &cand) {
                return cand;
            }
        }
    }

    /// A binder name that cannot capture anything in scope.
    pub fn fresh_binder(&mut self, stem: &str) -> String {
        self.fresh += 1;
        format!("{stem}{}", self.fresh)
    }
}

/// `Ref` or a chain of matrix indexing over one — the shapes rule matching
/// treats as atomic operands.
pub fn lift_indexed(e: &Expr) -> Option<(String, Vec<Expr>)> {
    match e {
        Expr::Ref(n) => Some((n.clone(), Vec::new())),
        Expr::MatrixIndex(b, idxs) => {
            let (n, mut t) = lift_indexed(b)?;
            t.extend(idxs.iter().cloned());
            Some((n, t))
        }
        _ => None,
    }
}

pub type RuleFn = fn(&Expr, &mut RuleCtx) -> Option<Vec<Expr>>;

pub struct RewriteRule {
    pub name: &'static str,
    /// An exclusive rule's matches suppress all other rules at that node.
    pub exclusive: bool,
    pub apply: RuleFn,
}

/// The combined (total) mapping at a single node: the union of matching
/// rules' alternatives, or the singleton of `e` itself.
pub fn apply_combined(e: &Expr, rules: &[RewriteRule], ctx: &mut RuleCtx) -> Vec<Expr> {
    match apply_at(e, rules, ctx) {
        Some(alts) => alts.into_iter().map(|(a, _)| a).collect(),
        None => vec![e.clone()],
    }
}

fn apply_at(
    e: &Expr,
    rules: &[RewriteRule],
    ctx: &mut RuleCtx,
) -> Option<Vec<(Expr, &'static str)>> {
    for r in rules.iter().filter(|r| r.exclusive) {
        if let Some(alts) = (r.apply)(e, ctx) {
            let alts: Vec<_> =
                alts.into_iter().filter(|a| a != e).map(|a| (a, r.name)).collect();
            if !alts.is_empty() {
                return Some(alts);
            }
        }
    }
    let mut out: Vec<(Expr, &'static str)> = Vec::new();
    for r in rules.iter().filter(|r| !r.exclusive) {
        if let Some(alts) = (r.apply)(e, ctx) {
            for a in alts {
                if a != *e && !out.iter().any(|(x, _)| *x == a) {
                    out.push((a, r.name));
                }
            }
        }
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

/// Scope adjustments when descending into child `i` of `e`. Returns how many
/// binders / scoped declarations were pushed.
fn enter(e: &Expr, i: usize, ctx: &mut RuleCtx) -> (usize, usize) {
    match e {
        Expr::Quant { binder, over, .. } => {
            let body_idx = e.children().len() - 1;
            if i == body_idx {
                let bt = binder_type(over, ctx);
                ctx.binders.push((binder.clone(), bt));
                return (1, 0);
            }
            (0, 0)
        }
        Expr::Bubble { aux, .. } => {
            for d in aux {
                ctx.scoped.push(d.clone());
            }
            (0, aux.len())
        }
        _ => (0, 0),
    }
}

fn binder_type(over: &QuantDomain, ctx: &RuleCtx) -> TypeExpr {
    match over {
        QuantDomain::Domain(t) => t.clone(),
        QuantDomain::Collection(c) => match ctx.type_of(c) {
            Some(TypeExpr::Set(_, e)) | Some(TypeExpr::MSet(_, e)) => *e,
            Some(TypeExpr::Relation(cs)) => {
                if cs.len() == 1 {
                    cs[0].clone()
                } else {
                    TypeExpr::Tuple(cs)
                }
            }
            _ => TypeExpr::IntUnbounded,
        },
    }
}

fn rebuild_child(e: &Expr, target: usize, new: Expr) -> Expr {
    let mut i = 0usize;
    map_children(e, &mut |c| {
        let r = if i == target { new.clone() } else { c.clone() };
        i += 1;
        r
    })
}

/// One leftmost-innermost rewrite of `e`: the alternatives for the whole
/// expression with its first redex replaced, tagged with the rule that fired.
pub fn step(e: &Expr, rules: &[RewriteRule], ctx: &mut RuleCtx) -> Option<Vec<(Expr, &'static str)>> {
    let n = e.children().len();
    for i in 0..n {
        let (nb, ns) = enter(e, i, ctx);
        let child = e.children()[i].clone();
        let res = step(&child, rules, ctx);
        for _ in 0..nb {
            ctx.binders.pop();
        }
        for _ in 0..ns {
            ctx.scoped.pop();
        }
        if let Some(alts) = res {
            return Some(
                alts.into_iter().map(|(c, nm)| (rebuild_child(e, i, c), nm)).collect(),
            );
        }
    }
    apply_at(e, rules, ctx)
}

#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub max_steps: u64,
    pub max_models: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { max_steps: 100_000, max_models: 64 }
    }
}

/// All normal forms of a single expression (used where a rule database is
/// exercised outside a full specification).
pub fn expr_normal_forms(
    e: &Expr,
    rules: &[RewriteRule],
    ctx: &mut RuleCtx,
    cfg: &EngineConfig,
) -> Result<Vec<Expr>, RefineError> {
    let mut stack = vec![e.clone()];
    let mut out: Vec<Expr> = Vec::new();
    let mut steps = 0u64;
    while let Some(cur) = stack.pop() {
        match step(&cur, rules, ctx) {
            Some(alts) => {
                steps += 1;
                if steps > cfg.max_steps {
                    return Err(RefineError::ResourceLimit(format!(
                        "rewrite step limit {} exceeded",
                        cfg.max_steps
                    )));
                }
                for (a, _) in alts.into_iter().rev() {
                    stack.push(a);
                }
            }
            None => {
                if !out.iter().any(|x| structural_eq(x, &cur)) {
                    out.push(cur);
                }
            }
        }
    }
    Ok(out)
}

/// One refinement branch in flight: the specification being rewritten, the
/// rules applied so far, and the fresh-name counter.
#[derive(Debug, Clone)]
pub struct WorkSpec {
    pub rs: RepSpec,
    pub trace: Vec<String>,
    pub fresh: u32,
}

impl WorkSpec {
    pub fn new(rs: RepSpec) -> Self {
        WorkSpec { rs, trace: Vec::new(), fresh: 0 }
    }
}

/// One leftmost-innermost step anywhere in the specification (objective
/// first, then constraints in order).
fn step_spec(ws: &WorkSpec, rules: &[RewriteRule]) -> Option<Vec<WorkSpec>> {
    let mut ctx = RuleCtx::new(&ws.rs.spec, &ws.rs.assignment);
    ctx.fresh = ws.fresh;
    if let Some((_, obj)) = &ws.rs.spec.objective {
        ctx.slot = Slot::Objective;
        if let Some(alts) = step(obj, rules, &mut ctx) {
            let fresh = ctx.fresh;
            return Some(
                alts.into_iter()
                    .map(|(e, nm)| {
                        let mut w = ws.clone();
                        w.rs.spec.objective.as_mut().unwrap().1 = e;
                        w.trace.push(nm.to_string());
                        w.fresh = fresh;
                        w
                    })
                    .collect(),
            );
        }
    }
    for i in 0..ws.rs.spec.constraints.len() {
        ctx.slot = Slot::Constraint(i);
        if let Some(alts) = step(&ws.rs.spec.constraints[i], rules, &mut ctx) {
            let fresh = ctx.fresh;
            return Some(
                alts.into_iter()
                    .map(|(e, nm)| {
                        let mut w = ws.clone();
                        w.rs.spec.constraints[i] = e;
                        w.trace.push(nm.to_string());
                        w.fresh = fresh;
                        w
                    })
                    .collect(),
            );
        }
    }
    None
}

fn spec_key(spec: &Spec) -> String {
    let mut s = String::new();
    for d in &spec.decls {
        s.push_str(&format!("{:?};{:?};{:?}|", d.kind, d.name, d.domain));
    }
    if let Some((dir, e)) = &spec.objective {
        s.push_str(&format!("obj{:?}:{:?}|", dir, canonicalize_binders(e)));
    }
    for c in &spec.constraints {
        s.push_str(&format!("{:?}|", canonicalize_binders(c)));
    }
    s
}

/// All rewrite normal forms reachable from one representation branch
/// (depth-first, first alternative first; duplicates modulo binder renaming
/// collapse).
pub fn normal_forms(
    start: RepSpec,
    rules: &[RewriteRule],
    cfg: &EngineConfig,
) -> Result<Vec<WorkSpec>, RefineError> {
    let mut stack = vec![WorkSpec::new(start)];
    let mut out: Vec<WorkSpec> = Vec::new();
    let mut keys: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    let mut steps = 0u64;
    while let Some(ws) = stack.pop() {
        match step_spec(&ws, rules) {
            Some(succs) => {
                steps += 1;
                if steps > cfg.max_steps {
                    return Err(RefineError::ResourceLimit(format!(
                        "rewrite step limit {} exceeded",
                        cfg.max_steps
                    )));
                }
                for s in succs.into_iter().rev() {
                    stack.push(s);
                }
            }
            None => {
                if keys.insert(spec_key(&ws.rs.spec)) {
                    out.push(ws);
                    if out.len() >= cfg.max_models {
                        // cap reached: remaining branches are dropped
                        return Ok(out);
                    }
                }
            }
        }
    }
    Ok(out)
}

// -- bubble finalization ---------------------------------------------------------

/// Convert every bubble sitting at a boolean position into a plain
/// conjunction with its helpers, and append the auxiliary declarations (with
/// the induced matrices and structural constraints of abstract auxiliaries).
pub fn finalize_bubbles(ws: &mut WorkSpec) -> Result<(), RefineError> {
    let mut aux: Vec<Decl> = Vec::new();
    if let Some((dir, obj)) = ws.rs.spec.objective.clone() {
        let mut e = obj;
        while let Expr::Bubble { value, helpers, aux: a } = e {
            aux.extend(a);
            ws.rs.spec.constraints.push(strip_bubbles(&helpers, true, &mut aux)?);
            e = *value;
        }
        let e = strip_bubbles(&e, false, &mut aux)?;
        ws.rs.spec.objective = Some((dir, e));
    }
    let cs = std::mem::take(&mut ws.rs.spec.constraints);
    for c in cs {
        let c2 = strip_bubbles(&c, true, &mut aux)?;
        ws.rs.spec.constraints.push(c2);
    }
    // append auxiliary declarations, expanding abstract ones into their
    // induced matrices plus structural constraints
    for d in aux {
        if let Some(prev) = ws.rs.spec.decl(&d.name) {
            if prev.domain == d.domain {
                continue; // the same auxiliary introduced twice
            }
            return Err(RefineError::Diag(format!(
                "auxiliary `{}` declared with two different domains",
                d.name
            )));
        }
        if d.domain.is_abstract() {
            let tag = d.rep_tag.clone().ok_or_else(|| {
                RefineError::DanglingBubble(format!(
                    "abstract auxiliary `{}` carries no representation",
                    d.name
                ))
            })?;
            ws.rs.spec.decls.push(d.clone());
            let induced = rep::induce_decls(&d.name, &[], &d.domain, &tag)
                .map_err(|m| RefineError::NoRepresentation(d.name.clone(), m))?;
            ws.rs.spec.decls.extend(induced);
            let mut extra = Vec::new();
            rep::structural_for(&d.name, &[], &d.domain, &tag, &mut extra)
                .map_err(RefineError::Diag)?;
            ws.rs.spec.constraints.extend(extra);
        } else {
            ws.rs.spec.decls.push(d);
        }
    }
    // nothing may remain annotated
    if let Some((_, obj)) = &ws.rs.spec.objective {
        if contains_bubble(obj) {
            return Err(RefineError::DanglingBubble(
                "objective still carries a bubble after finalization".into(),
            ));
        }
    }
    for c in &ws.rs.spec.constraints {
        if contains_bubble(c) {
            return Err(RefineError::DanglingBubble(
                "a constraint still carries a bubble at a non-boolean position".into(),
            ));
        }
    }
    Ok(())
}

pub fn contains_bubble(e: &Expr) -> bool {
    matches!(e, Expr::Bubble { .. }) || e.children().iter().any(|c| contains_bubble(c))
}

fn strip_bubbles(e: &Expr, bool_pos: bool, aux: &mut Vec<Decl>) -> Result<Expr, RefineError> {
    match e {
        Expr::Bubble { value, helpers, aux: a } if bool_pos => {
            aux.extend(a.iter().cloned());
            Ok(Expr::and(
                strip_bubbles(value, true, aux)?,
                strip_bubbles(helpers, true, aux)?,
            ))
        }
        Expr::Bubble { .. } => Err(RefineError::DanglingBubble(
            "a bubble reached a non-boolean position".into(),
        )),
        Expr::UnOp(UnOp::Not, a) => {
            Ok(Expr::UnOp(UnOp::Not, Box::new(strip_bubbles(a, true, aux)?)))
        }
        Expr::BinOp(op @ (BinOp::And | BinOp::Or | BinOp::Implies | BinOp::Iff), a, b) => {
            Ok(Expr::BinOp(
                *op,
                Box::new(strip_bubbles(a, true, aux)?),
                Box::new(strip_bubbles(b, true, aux)?),
            ))
        }
        Expr::Quant { kind: kind @ (QuantKind::Forall | QuantKind::Exists), binder, over, body } => {
            let over2 = match over {
                QuantDomain::Domain(t) => QuantDomain::Domain(t.clone()),
                QuantDomain::Collection(c) => {
                    QuantDomain::Collection(Box::new(strip_bubbles(c, false, aux)?))
                }
            };
            Ok(Expr::Quant {
                kind: *kind,
                binder: binder.clone(),
                over: over2,
                body: Box::new(strip_bubbles(body, true, aux)?),
            })
        }
        other => {
            let mut err = None;
            let rebuilt = map_children(other, &mut |c| match strip_bubbles(c, false, aux) {
                Ok(x) => x,
                Err(e2) => {
                    err = Some(e2);
                    c.clone()
                }
            });
            match err {
                Some(e2) => Err(e2),
                None => Ok(rebuilt),
            }
        }
    }
}

// -- loop-invariant hoisting -----------------------------------------------------

/// Whether quantification over `over` is provably nonempty (hoisting a
/// conjunct out of a `forall` is only sound then).
fn provably_nonempty(over: &QuantDomain, decls: &[Decl]) -> bool {
    match over {
        QuantDomain::Domain(TypeExpr::IntRange(l, h)) => l <= h,
        QuantDomain::Domain(TypeExpr::Bool) => true,
        QuantDomain::Collection(c) => match &**c {
            Expr::SetLit(es) => !es.is_empty(),
            Expr::Ref(n) => decls.iter().any(|d| {
                d.name == *n
                    && match (&d.kind, &d.domain, &d.value) {
                        (_, TypeExpr::Set(SizeAttr::Exact(k), _), _) => *k >= 1,
                        (DeclKind::Letting, _, Some(Expr::SetLit(es))) => !es.is_empty(),
                        _ => false,
                    }
            }),
            _ => false,
        },
        _ => false,
    }
}

fn hoist_expr(e: &Expr, decls: &[Decl]) -> Expr {
    let e = map_children(e, &mut |c| hoist_expr(c, decls));
    if let Expr::Quant { kind: QuantKind::Forall, binder, over, body } = &e {
        if provably_nonempty(over, decls) {
            let parts = split_conjunction(body);
            let (inv, var): (Vec<Expr>, Vec<Expr>) =
                parts.into_iter().partition(|p| !has_reference_to(binder, p));
            if !inv.is_empty() {
                let mut pieces = inv;
                if !var.is_empty() {
                    pieces.push(Expr::forall(
                        binder.clone(),
                        over.clone(),
                        conjoin(var),
                    ));
                }
                return conjoin(pieces);
            }
        }
    }
    e
}

/// Hoist binder-independent conjuncts out of provably nonempty `forall`s,
/// throughout the specification.
pub fn hoist_spec(spec: &mut Spec) {
    let decls = spec.decls.clone();
    for c in &mut spec.constraints {
        *c = hoist_expr(c, &decls);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr_text;
    use std::collections::BTreeMap;

    fn toy_a_to_b(e: &Expr, _: &mut RuleCtx) -> Option<Vec<Expr>> {
        matches!(e, Expr::Ref(n) if n == "A").then(|| vec![Expr::Ref("B".into())])
    }
    fn toy_a_to_c(e: &Expr, _: &mut RuleCtx) -> Option<Vec<Expr>> {
        matches!(e, Expr::Ref(n) if n == "A").then(|| vec![Expr::Ref("C".into())])
    }
    fn toy_b_to_d(e: &Expr, _: &mut RuleCtx) -> Option<Vec<Expr>> {
        matches!(e, Expr::Ref(n) if n == "B").then(|| vec![Expr::Ref("D".into())])
    }

    fn toy_rules() -> Vec<RewriteRule> {
        vec![
            RewriteRule { name: "a_to_b", exclusive: false, apply: toy_a_to_b },
            RewriteRule { name: "a_to_c", exclusive: false, apply: toy_a_to_c },
            RewriteRule { name: "b_to_d", exclusive: false, apply: toy_b_to_d },
        ]
    }

    #[test]
    fn combined_mapping_unions_matches_and_defaults_to_singleton() {
        let spec = Spec::default();
        let asg = BTreeMap::new();
        let mut ctx = RuleCtx::new(&spec, &asg);
        let rules = toy_rules();
        assert_eq!(
            apply_combined(&Expr::Ref("A".into()), &rules, &mut ctx),
            vec![Expr::Ref("B".into()), Expr::Ref("C".into())]
        );
        assert_eq!(
            apply_combined(&Expr::Ref("C".into()), &rules, &mut ctx),
            vec![Expr::Ref("C".into())]
        );
        assert_eq!(
            apply_combined(&Expr::Ref("D".into()), &rules, &mut ctx),
            vec![Expr::Ref("D".into())]
        );
    }

    #[test]
    fn expr_normal_forms_of_toy_database() {
        let spec = Spec::default();
        let asg = BTreeMap::new();
        let mut ctx = RuleCtx::new(&spec, &asg);
        let rules = toy_rules();
        let nf = expr_normal_forms(&Expr::Ref("A".into()), &rules, &mut ctx, &Default::default())
            .unwrap();
        assert_eq!(nf, vec![Expr::Ref("D".into()), Expr::Ref("C".into())]);
    }

    #[test]
    fn step_is_leftmost_innermost() {
        // in A + A the left occurrence rewrites first
        let spec = Spec::default();
        let asg = BTreeMap::new();
        let mut ctx = RuleCtx::new(&spec, &asg);
        let e = Expr::BinOp(BinOp::Add, Expr::bref("A"), Expr::bref("A"));
        let alts = step(&e, &toy_rules(), &mut ctx).unwrap();
        assert_eq!(alts.len(), 2);
        assert_eq!(
            alts[0].0,
            Expr::BinOp(BinOp::Add, Expr::bref("B"), Expr::bref("A"))
        );
    }

    #[test]
    fn lift_indexed_handles_chains() {
        let e = parse_expr_text("m[i][j]").unwrap();
        let (n, t) = lift_indexed(&e).unwrap();
        assert_eq!(n, "m");
        assert_eq!(t, vec![Expr::Ref("i".into()), Expr::Ref("j".into())]);
        assert!(lift_indexed(&parse_expr_text("f(i)").unwrap()).is_none());
    }

    #[test]
    fn hoist_moves_binder_free_conjuncts_out() {
        let mut spec = crate::parser::parse_spec_text(
            "find t : bool find A : set (size 2) of int(1..3) \
             such that forall s : A . (t /\\ (s >= 1))",
        )
        .unwrap();
        hoist_spec(&mut spec);
        assert_eq!(
            spec.constraints[0],
            Expr::and(
                Expr::Ref("t".into()),
                Expr::forall(
                    "s",
                    QuantDomain::Collection(Expr::bref("A")),
                    Expr::BinOp(BinOp::Ge, Expr::bref("s"), Box::new(Expr::IntLit(1)))
                )
            )
        );
    }

    #[test]
    fn hoist_leaves_possibly_empty_collections_alone() {
        let mut spec = crate::parser::parse_spec_text(
            "find t : bool find A : set (maxsize 2) of int(1..3) \
             such that forall s : A . (t /\\ (s >= 1))",
        )
        .unwrap();
        let before = spec.constraints.clone();
        hoist_spec(&mut spec);
        assert_eq!(spec.constraints, before);
    }

    #[test]
    fn finalize_conjoins_bubble_under_forall_and_appends_aux() {
        // forall j : int(1..2) . (aux @ (aux = 1)) >= 1  — the bubble sits at
        // a non-boolean position and must have been lifted first; place it at
        // the body position instead
        let spec = crate::parser::parse_spec_text("find y : int(1..2)").unwrap();
        let bubble = Expr::Bubble {
            value: Box::new(Expr::BinOp(
                BinOp::Ge,
                Expr::bref("aux"),
                Box::new(Expr::IntLit(1)),
            )),
            helpers: Box::new(Expr::eq(Expr::Ref("aux".into()), Expr::Ref("y".into()))),
            aux: vec![Decl::aux("aux", TypeExpr::IntRange(1, 2))],
        };
        let c = Expr::forall("j", Expr::over_range(1, 2), bubble);
        let mut ws = WorkSpec::new(RepSpec {
            spec: Spec { constraints: vec![c], ..spec },
            assignment: BTreeMap::new(),
        });
        finalize_bubbles(&mut ws).unwrap();
        assert!(ws.rs.spec.decl("aux").is_some());
        assert!(!contains_bubble(&ws.rs.spec.constraints[0]));
    }
}
