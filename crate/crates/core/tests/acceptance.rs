//! Acceptance suite: one test (and one pass/fail line) per criterion.

use refine::ast::*;
use refine::emit::{flatness_violations, print_model, FlatModel};
use refine::engine::{
    self, apply_combined, contains_bubble, expr_normal_forms, finalize_bubbles, normal_forms,
    EngineConfig, RewriteRule, RuleCtx, WorkSpec,
};
use refine::eval::{eval_expr, Value};
use refine::oracle::{self, check_equivalence, enumerate_solutions};
use refine::parser::{parse_expr_text, parse_spec_text};
use refine::pipeline::{refine_source, PipelineOptions};
use refine::rep::{
    self, add_channelling, add_structural_constraints, enumerate_representations, RepMode,
    RepSpec,
};
use refine::rules::{default_rules, min_max_rules};
use refine::typecheck;
use std::collections::BTreeMap;
use std::time::Instant;

fn timed<T>(limit_s: u64, what: &str, f: impl FnOnce() -> T) -> T {
    let t0 = Instant::now();
    let out = f();
    let dt = t0.elapsed();
    assert!(
        dt.as_secs() < limit_s,
        "{what} took {dt:?}, limit {limit_s}s"
    );
    out
}

fn front(src: &str) -> Spec {
    let mut s = parse_spec_text(src).unwrap();
    typecheck::typecheck_spec(&mut s).unwrap();
    typecheck::instantiate(&s, &[]).unwrap()
}

/// 1. The first rewrite of `a subseteq b` is quantified membership.
#[test]
fn criterion_1_subseteq_first_rewrite() {
    timed(1, "criterion 1", || {
        let spec = front(
            "find a : set of int(1..3) find b : set of int(1..3) such that a subseteq b",
        );
        let assignment = BTreeMap::new();
        let mut ctx = RuleCtx::new(&spec, &assignment);
        let rules = default_rules();
        let alts = engine::step(&spec.constraints[0], &rules, &mut ctx)
            .expect("subseteq must rewrite");
        assert_eq!(alts.len(), 1, "subseteq has exactly one refinement");
        let expected = parse_expr_text("forall i : a . i elem b").unwrap();
        assert!(
            structural_eq(&alts[0].0, &expected),
            "got {:?}",
            alts[0].0
        );
    });
    println!("criterion 1: PASS");
}

/// 2. The worked max/bubble example: pre- and post-hoist forms.
#[test]
fn criterion_2_max_bubbles_and_hoisting() {
    timed(5, "criterion 2", || {
        let spec = front(
            "find t : set (size 2) of int(1..3) \
             find A : set (size 2) of set (size 2) of int(1..3) \
             such that forall s : A . ((max(s) - max(t)) = 0) => (0 elem s)",
        );
        let assignment = BTreeMap::new();
        let mut ctx = RuleCtx::new(&spec, &assignment);
        let rules = min_max_rules();
        let forms = expr_normal_forms(
            &spec.constraints[0],
            &rules,
            &mut ctx,
            &EngineConfig::default(),
        )
        .unwrap();
        assert_eq!(forms.len(), 1, "one normal form expected");

        let mut branch = spec.clone();
        branch.constraints[0] = forms[0].clone();
        let mut ws = WorkSpec::new(RepSpec { spec: branch, assignment: BTreeMap::new() });
        finalize_bubbles(&mut ws).unwrap();
        let pre_hoist = ws.rs.spec.constraints[0].clone();

        // pre-hoist form: helper constraints still sit inside the quantifier
        // (the auxiliary is an upper bound: forall i : s . i <= max_s)
        let expected_pre = parse_expr_text(
            "forall s : A . ((((max_s - max_t) = 0) => (0 elem s)) \
             /\\ (((max_s elem s) /\\ (forall i : s . i <= max_s)) \
             /\\ ((max_t elem t) /\\ (forall j : t . j <= max_t))))",
        )
        .unwrap();
        assert!(
            structural_eq(&pre_hoist, &expected_pre),
            "pre-hoist form differs:\n{pre_hoist:?}"
        );

        engine::hoist_spec(&mut ws.rs.spec);
        let post_hoist = ws.rs.spec.constraints[0].clone();
        // invariants (the whole of bubble_t) leave the quantifier
        let expected_post = parse_expr_text(
            "((max_t elem t) /\\ (forall j : t . j <= max_t)) \
             /\\ (forall s : A . (((((max_s - max_t) = 0) => (0 elem s)) \
             /\\ (max_s elem s)) /\\ (forall i : s . i <= max_s)))",
        )
        .unwrap();
        assert!(
            structural_eq(&post_hoist, &expected_post),
            "post-hoist form differs:\n{post_hoist:?}"
        );
    });
    println!("criterion 2: PASS");
}

fn toy_a(e: &Expr, _ctx: &mut RuleCtx) -> Option<Vec<Expr>> {
    match e {
        Expr::Ref(n) if n == "A" => Some(vec![Expr::Ref("B".into()), Expr::Ref("C".into())]),
        _ => None,
    }
}

fn toy_b(e: &Expr, _ctx: &mut RuleCtx) -> Option<Vec<Expr>> {
    match e {
        Expr::Ref(n) if n == "B" => Some(vec![Expr::Ref("D".into())]),
        _ => None,
    }
}

/// 3. Rule combination: union where matched, singleton elsewhere; the
/// normal forms of A under {A→B, A→C, B→D} are {C, D}.
#[test]
fn criterion_3_rule_combination_semantics() {
    timed(1, "criterion 3", || {
        let rules = vec![
            RewriteRule { name: "toy_a", exclusive: false, apply: toy_a },
            RewriteRule { name: "toy_b", exclusive: false, apply: toy_b },
        ];
        let spec = Spec::default();
        let assignment = BTreeMap::new();
        let mut ctx = RuleCtx::new(&spec, &assignment);
        let a = Expr::Ref("A".into());
        let c = Expr::Ref("C".into());
        let d = Expr::Ref("D".into());
        assert_eq!(
            apply_combined(&a, &rules, &mut ctx),
            vec![Expr::Ref("B".into()), c.clone()]
        );
        assert_eq!(apply_combined(&c, &rules, &mut ctx), vec![c.clone()]);
        assert_eq!(apply_combined(&d, &rules, &mut ctx), vec![d.clone()]);
        let nfs = expr_normal_forms(&a, &rules, &mut ctx, &EngineConfig::default()).unwrap();
        assert_eq!(nfs, vec![d, c]);
    });
    println!("criterion 3: PASS");
}

const KNAPSACK: &str = "\
given      item_count, capacity : int
letting    item be domain int(1..item_count)
given      volume, value : function (total) item -> int(1..)
find       x : set of item
maximising sum i elem x . value(i)
such that  (sum i elem x . volume(i)) <= capacity
";

const KNAPSACK_PARAMS: &str = "\
letting item_count be 3
letting capacity be 4
letting volume be function (1 --> 2, 2 --> 3, 3 --> 4)
letting value be function (1 --> 3, 2 --> 4, 3 --> 5)
";

/// 4. Knapsack end to end: every model's optimum is 5, reached only at x={3}.
#[test]
fn criterion_4_knapsack_end_to_end() {
    timed(10, "criterion 4", || {
        let params = refine::parser::parse_param_text(KNAPSACK_PARAMS).unwrap();
        let out = refine_source(KNAPSACK, &params, &PipelineOptions::default()).unwrap();
        assert!(!out.models.is_empty());
        let want_x = Value::Set([Value::Int(3)].into_iter().collect());
        for fm in &out.models {
            let flat = enumerate_solutions(&fm.spec).unwrap();
            assert_eq!(flat.len(), 1, "unique optimal solution expected");
            // the flat optimum is 5
            let mut env = typecheck::letting_env(&fm.spec).unwrap();
            for (n, v) in &flat[0] {
                env.insert(n, v.clone());
            }
            let (_, obj) = fm.spec.objective.as_ref().unwrap();
            assert_eq!(eval_expr(obj, &env).unwrap(), Value::Int(5));
            // and decodes to x = {3}
            let tags = oracle::tags_from_summary(&fm.rep_summary).unwrap();
            let dec = oracle::decode_solution(&out.spec, &tags, &flat[0]).unwrap();
            assert_eq!(dec["x"], want_x);
        }
    });
    println!("criterion 4: PASS");
}

fn corpus() -> Vec<(String, String)> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().map(|e| e == "spec").unwrap_or(false) {
            out.push((
                p.file_stem().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&p).unwrap(),
            ));
        }
    }
    out.sort();
    assert!(out.len() >= 12, "corpus must hold at least 12 specifications");
    out
}

fn all_reps_opts() -> PipelineOptions {
    PipelineOptions { all_reps: true, ..PipelineOptions::default() }
}

/// 5. Every model of every corpus spec has exactly the abstract solution set.
#[test]
fn criterion_5_corpus_solution_equivalence() {
    timed(120, "criterion 5", || {
        for (name, src) in corpus() {
            let out = refine_source(&src, &[], &all_reps_opts())
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!out.models.is_empty(), "{name}: no models");
            for (i, fm) in out.models.iter().enumerate() {
                let r = check_equivalence(&out.spec, fm)
                    .unwrap_or_else(|e| panic!("{name} model {i}: {e}"));
                assert!(
                    r.equivalent,
                    "{name} model {i}: {}",
                    r.failure_summary()
                );
            }
        }
    });
    println!("criterion 5: PASS");
}

const MAXSIZE_SET: &str = "find s : set (maxsize 2) of int(1..3) \
     such that card(s) <= 2, 1 elem s";

/// 6. Representation counts: 2 single-representation models, 4 branches in
/// per-constraint mode of which the 2 mixed ones carry channelling.
#[test]
fn criterion_6_representation_counts() {
    timed(10, "criterion 6", || {
        let single = refine_source(MAXSIZE_SET, &[], &PipelineOptions::default()).unwrap();
        assert_eq!(single.models.len(), 2, "occurrence and flags");

        let per = refine_source(
            MAXSIZE_SET,
            &[],
            &PipelineOptions { rep_mode: RepMode::PerConstraint, ..PipelineOptions::default() },
        )
        .unwrap();
        assert_eq!(per.models.len(), 4, "2 x 2 per-constraint branches");
        let mixed: Vec<&FlatModel> = per
            .models
            .iter()
            .filter(|fm| {
                let tags: std::collections::BTreeSet<&str> = fm
                    .rep_summary
                    .iter()
                    .filter_map(|e| e.split('#').nth(1))
                    .collect();
                tags.len() > 1
            })
            .collect();
        assert_eq!(mixed.len(), 2, "two mixed branches");
        for fm in &mixed {
            // channelled models declare the matrices of both representations
            assert!(fm.spec.decl("s_occ").is_some());
            assert!(fm.spec.decl("s_expf_t1").is_some());
        }
        for fm in &per.models {
            let r = check_equivalence(&per.spec, fm).unwrap();
            assert!(r.equivalent, "{}", r.failure_summary());
        }
    });
    println!("criterion 6: PASS");
}

fn structural_count(dom: &TypeExpr, tag: &RepTag) -> usize {
    // structural constraints may mention virtual carrier matrices; a rewrite
    // pass redirects those to the concrete component matrices
    let mut full = Spec::default();
    let mut v = Decl::find("v", dom.clone());
    v.rep_tag = Some(tag.clone());
    full.decls.push(v);
    full.decls.extend(rep::induce_decls("v", &[], dom, tag).unwrap());
    let mut cs = Vec::new();
    rep::structural_for("v", &[], dom, tag, &mut cs).unwrap();
    full.constraints = cs;
    let rs = RepSpec { spec: full, assignment: BTreeMap::new() };
    let forms = normal_forms(rs, &default_rules(), &EngineConfig::default()).unwrap();
    let mut ws = forms.into_iter().next().unwrap();
    finalize_bubbles(&mut ws).unwrap();
    let mut spec = ws.rs.spec;
    spec.decls.retain(|d| d.domain.is_flat());
    enumerate_solutions(&spec).unwrap().len()
}

/// 7. Structurally valid assignments match the analytic object counts.
#[test]
fn criterion_7_structural_counts() {
    timed(30, "criterion 7", || {
        let i14 = TypeExpr::IntRange(1, 4);
        let set_ex2 = TypeExpr::Set(SizeAttr::Exact(2), Box::new(i14.clone()));
        let set_mx2 = TypeExpr::Set(SizeAttr::MaxSize(2), Box::new(i14.clone()));
        // C(4,2) and sum of C(4,k) for k <= 2
        assert_eq!(structural_count(&set_ex2, &RepTag::Occurrence), 6);
        assert_eq!(structural_count(&set_ex2, &RepTag::ExplicitFixed(None)), 6);
        assert_eq!(structural_count(&set_mx2, &RepTag::Occurrence), 11);
        assert_eq!(structural_count(&set_mx2, &RepTag::ExplicitFlags(None)), 11);

        let total = FuncAttrs { total: true, injective: false, surjective: false };
        let partial = FuncAttrs::default();
        let f_total = TypeExpr::Function(
            total,
            Box::new(TypeExpr::IntRange(1, 3)),
            Box::new(TypeExpr::IntRange(1, 2)),
        );
        let f_partial = TypeExpr::Function(
            partial,
            Box::new(TypeExpr::IntRange(1, 3)),
            Box::new(TypeExpr::IntRange(1, 2)),
        );
        // |to|^|from| and (|to|+1)^|from|
        assert_eq!(structural_count(&f_total, &RepTag::Func1D(None)), 8);
        assert_eq!(structural_count(&f_total, &RepTag::Func2D), 8);
        assert_eq!(structural_count(&f_partial, &RepTag::Func2D), 27);

        let r = TypeExpr::Relation(vec![TypeExpr::IntRange(1, 2), TypeExpr::IntRange(1, 2)]);
        assert_eq!(structural_count(&r, &RepTag::RelSetOfTuples), 16);

        // nested: 2-subsets of the 3 subsets of {1,2} with at most 1 element
        let nested = TypeExpr::Set(
            SizeAttr::Exact(2),
            Box::new(TypeExpr::Set(
                SizeAttr::MaxSize(1),
                Box::new(TypeExpr::IntRange(1, 2)),
            )),
        );
        let tag = RepTag::ExplicitFixed(Some(Box::new(RepTag::ExplicitFlags(None))));
        assert_eq!(structural_count(&nested, &tag), 3);
    });
    println!("criterion 7: PASS");
}

/// 8. Flatness, printability and run-to-run determinism over the corpus.
#[test]
fn criterion_8_flatness_and_determinism() {
    timed(30, "criterion 8", || {
        for (name, src) in corpus() {
            let run = |_: u32| -> Vec<String> {
                refine_source(&src, &[], &all_reps_opts())
                    .unwrap()
                    .models
                    .iter()
                    .map(print_model)
                    .collect()
            };
            let first = run(1);
            assert_eq!(first, run(2), "{name}: runs differ");
            let out = refine_source(&src, &[], &all_reps_opts()).unwrap();
            for (fm, text) in out.models.iter().zip(&first) {
                assert!(
                    flatness_violations(&fm.spec).is_empty(),
                    "{name}: not flat"
                );
                assert!(fm.spec.constraints.iter().all(|c| !contains_bubble(c)));
                let reparsed = parse_spec_text(text).unwrap_or_else(|e| panic!("{name}: {e}"));
                let again = print_model(&FlatModel { spec: reparsed, ..fm.clone() });
                assert_eq!(&again, text, "{name}: print/parse round-trip changed");
            }
        }
    });
    println!("criterion 8: PASS");
}

/// 9. Removing any structural or channelling constraint from a mixed
/// dual-representation model makes the check fail with a witness.
#[test]
fn criterion_9_fault_injection() {
    // both constraints admit enough solutions that every structural and
    // channelling constraint in the mixed-representation models is load-bearing
    const FAULT_SET: &str = "find s : set (maxsize 2) of int(1..3) \
         such that card(s) <= 2, (2 elem s) \\/ (3 elem s)";
    timed(10, "criterion 9", || {
        let spec = {
            let mut s = parse_spec_text(FAULT_SET).unwrap();
            typecheck::typecheck_spec(&mut s).unwrap();
            typecheck::instantiate(&s, &[]).unwrap()
        };
        let hash = "fault-injection";
        let mut tested = 0usize;
        for mut rs in enumerate_representations(&spec, RepMode::PerConstraint, false).unwrap() {
            let n_orig = rs.spec.constraints.len();
            add_channelling(&mut rs).unwrap();
            let n_chan = rs.spec.constraints.len() - n_orig;
            if n_chan == 0 {
                continue; // only the mixed branches channel
            }
            add_structural_constraints(&mut rs).unwrap();
            let n_added = rs.spec.constraints.len() - n_orig;
            let forms = normal_forms(rs, &default_rules(), &EngineConfig::default()).unwrap();
            for mut ws in forms {
                finalize_bubbles(&mut ws).unwrap();
                let fm = refine::emit::build_flat_model(&ws, hash).unwrap();
                let base = check_equivalence(&spec, &fm).unwrap();
                assert!(base.equivalent, "baseline: {}", base.failure_summary());
                for i in n_orig..n_orig + n_added {
                    let mut broken = fm.clone();
                    broken.spec.constraints.remove(i);
                    let r = check_equivalence(&spec, &broken).unwrap();
                    assert!(
                        !r.equivalent,
                        "dropping added constraint {i} went undetected"
                    );
                    assert!(
                        !r.failure_summary().is_empty(),
                        "failure must carry a witness"
                    );
                    tested += 1;
                }
            }
        }
        assert!(tested >= 2, "expected at least two injected faults, got {tested}");
    });
    println!("criterion 9: PASS");
}
