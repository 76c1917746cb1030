//! Randomized properties of the expression utilities: substitution,
//! conjunction splitting, alpha-equality, binder canonicalization, and the
//! printer/parser round trip.

use proptest::prelude::*;
use refine::ast::{
    canonicalize_binders, conjoin, split_conjunction, structural_eq, substitute, BinOp, Expr,
    QuantDomain, QuantKind, TypeExpr, UnOp,
};
use refine::emit::print_expr;
use refine::parser::parse_expr_text;

fn arb_binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Eq),
        Just(BinOp::Neq),
        Just(BinOp::Lt),
        Just(BinOp::Le),
        Just(BinOp::Ge),
        Just(BinOp::And),
        Just(BinOp::Or),
        Just(BinOp::Implies),
        Just(BinOp::Iff),
        Just(BinOp::Elem),
        Just(BinOp::Union),
        Just(BinOp::Intersect),
        Just(BinOp::SubsetEq),
    ]
}

/// Expressions built from the printable, binder-aware core: literals, free
/// references `a`/`b`/`c`, unary/binary operators, and quantifiers binding
/// `q`/`r` over small integer ranges. Every generated tree prints to text the
/// front end parses back.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..10i64).prop_map(Expr::IntLit),
        any::<bool>().prop_map(Expr::BoolLit),
        prop_oneof![Just("a"), Just("b"), Just("c")].prop_map(|n| Expr::Ref(n.into())),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (arb_binop(), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::BinOp(op, Box::new(l), Box::new(r))),
            inner.clone().prop_map(|e| Expr::UnOp(UnOp::Not, Box::new(e))),
            (
                prop_oneof![Just(QuantKind::Forall), Just(QuantKind::Exists), Just(QuantKind::Sum)],
                prop_oneof![Just("q"), Just("r")],
                1..3i64,
                3..5i64,
                inner,
            )
                .prop_map(|(kind, binder, lo, hi, body)| Expr::Quant {
                    kind,
                    binder: binder.into(),
                    over: QuantDomain::Domain(TypeExpr::IntRange(lo, hi)),
                    body: Box::new(body),
                }),
        ]
    })
}

proptest! {
    /// Renaming a free variable to a fresh name and back is the identity.
    #[test]
    fn substitute_round_trip(e in arb_expr()) {
        let swapped = substitute(&e, "a", &Expr::Ref("tmp_swap".into()));
        let back = substitute(&swapped, "tmp_swap", &Expr::Ref("a".into()));
        prop_assert_eq!(&back, &e);
    }

    /// Splitting the rebuilt conjunction of a split yields the same parts.
    #[test]
    fn split_conjoin_idempotent(e in arb_expr()) {
        let parts = split_conjunction(&e);
        let rebuilt = conjoin(parts.clone());
        let parts2 = split_conjunction(&rebuilt);
        prop_assert_eq!(parts2.len(), parts.len());
        for (p, q) in parts.iter().zip(parts2.iter()) {
            prop_assert!(structural_eq(p, q));
        }
    }

    /// Alpha-equality is reflexive and invariant under binder renaming.
    #[test]
    fn structural_eq_reflexive_and_alpha(e in arb_expr()) {
        prop_assert!(structural_eq(&e, &e));
        let canon = canonicalize_binders(&e);
        prop_assert!(structural_eq(&e, &canon));
        prop_assert!(structural_eq(&canon, &e));
    }

    /// Alpha-equality is symmetric and transitive on independent pairs.
    #[test]
    fn structural_eq_symmetric_transitive(
        a in arb_expr(),
        b in arb_expr(),
    ) {
        prop_assert_eq!(structural_eq(&a, &b), structural_eq(&b, &a));
        let c = canonicalize_binders(&b);
        if structural_eq(&a, &b) && structural_eq(&b, &c) {
            prop_assert!(structural_eq(&a, &c));
        }
    }

    /// Canonicalizing binders twice changes nothing the second time.
    #[test]
    fn canonicalize_binders_idempotent(e in arb_expr()) {
        let once = canonicalize_binders(&e);
        let twice = canonicalize_binders(&once);
        prop_assert_eq!(&twice, &once);
    }

    /// Printed expressions parse back to an alpha-equal tree.
    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let text = print_expr(&e);
        let parsed = parse_expr_text(&text)
            .map_err(|d| TestCaseError::fail(format!("parse of `{text}`: {d}")))?;
        prop_assert!(
            structural_eq(&parsed, &e),
            "round trip changed `{}` into `{}`", text, print_expr(&parsed)
        );
    }
}
