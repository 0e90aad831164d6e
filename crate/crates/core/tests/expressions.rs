use proptest::prelude::*;
use spraymetric::expr::Expression;
use spraymetric::jet::{Jet, JetSpace};

/// Random expression text over `x1, x2, y1, y2`.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0.0f64..10.0).prop_map(|c| format!("{c:.3}")),
        (1usize..=2).prop_map(|i| format!("x{i}")),
        (1usize..=2).prop_map(|i| format!("y{i}")),
        Just("xx".to_string()),
        Just("yy".to_string()),
        Just("xy".to_string()),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]))
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner.clone(), prop::sample::select(vec!["sqrt", "exp", "ln", "abs", "sin", "cos"]))
                .prop_map(|(a, f)| format!("{f}({a})")),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn point() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-2.0f64..2.0, 2), prop::collection::vec(-2.0f64..2.0, 2))
}

proptest! {
    #[test]
    fn printed_form_reparses_to_the_same_tree(t in expr_text()) {
        let e = Expression::parse(&t, 2).unwrap();
        let again = Expression::parse(&e.to_string(), 2).unwrap();
        prop_assert_eq!(e.root(), again.root());
    }

    #[test]
    fn order_zero_jets_match_reals_bit_for_bit(t in expr_text(), (x, y) in point()) {
        let e = Expression::parse(&t, 2).unwrap();
        let space = JetSpace::get(4).unwrap();
        let lift = |v: &[f64]| v.iter().map(|c| Jet::constant(&space, 0, *c)).collect::<Vec<_>>();
        let real = e.eval_f64(&x, &y);
        let jet = e.eval(&lift(&x), &lift(&y));
        match (real, jet) {
            (Ok(a), Ok(b)) => prop_assert!(a.to_bits() == b.value().to_bits() || (a.is_nan() && b.value().is_nan())),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "real {:?} vs jet {:?}", a, b.map(|j| j.value())),
        }
    }
}

#[test]
fn inner_product_builtin_is_exact() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for n in 2..=4 {
        let e = Expression::parse("xy", n).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let direct = x.iter().zip(&y).fold(0.0, |acc, (a, b)| acc + a * b);
            assert_eq!(e.eval_f64(&x, &y).unwrap(), direct);
        }
    }
}

#[test]
fn documented_error_messages() {
    let msg = |t: &str| Expression::parse(t, 2).unwrap_err().to_string();
    assert_eq!(msg("y1 +"), "syntax error at offset 4: expected expression, found end of input");
    assert_eq!(msg("x3"), "variable index 3 at offset 0 is outside 1..=2");
    assert_eq!(msg("y1^x1"), "syntax error at offset 3: expected constant exponent, found variable expression");
    let e = |t: &str| Expression::parse(t, 2).unwrap().eval_f64(&[2.0, 0.0], &[1.0, 0.0]).unwrap();
    assert_eq!(e("2^3^2"), 512.0);
    assert_eq!(e("-x1^2"), -4.0);
    assert_eq!(Expression::parse("xy", 2).unwrap().root(), Expression::parse("x1*y1 + x2*y2", 2).unwrap().root());
}
