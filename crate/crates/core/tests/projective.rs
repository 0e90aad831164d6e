mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spraymetric::projective::{collinearity_defect, connection_shift_residual, deform_flat, GeneratorFunction, GeneratorKind};
use spraymetric::spray::PhasePoint;

use common::{expr, poly_x, random_points};

#[test]
fn deformed_connection_is_a_shift_of_the_flat_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut gens: Vec<(String, usize)> = (0..20).map(|k| (poly_x(&mut rng, 2 + k % 2, 3), 2 + k % 2)).collect();
    gens.push(("0 - ln(sqrt(1 - xx))".into(), 3));
    gens.push(("ln(sqrt(sqrt(yy) + xy))".into(), 2));
    for (g, n) in gens {
        let pf = GeneratorFunction::new(expr(&g, n)).factor();
        for p in random_points(&mut rng, n, 10, 0.4) {
            let r = connection_shift_residual(&pf, &p).unwrap();
            assert!(r <= 1e-10, "{g}: {r}");
        }
    }
}

#[test]
fn basic_generators_give_straight_geodesics() {
    let starts = [
        ([0.1, 0.2], [1.0, 0.3]),
        ([-0.3, 0.0], [0.2, 1.0]),
        ([0.0, -0.4], [-0.7, 0.7]),
        ([0.25, 0.25], [-1.0, -0.2]),
        ([-0.1, 0.3], [0.5, -0.9]),
    ];
    for g in ["0 - ln(sqrt(1 - xx))", "0 - ln(sqrt(1 + xx))"] {
        let gen = GeneratorFunction::new(expr(g, 2));
        assert_eq!(gen.kind, GeneratorKind::Basic);
        let s = deform_flat(&gen.factor()).with_domain(vec![expr("0.81 - xx", 2)]);
        for (x, y) in starts {
            let d = collinearity_defect(&s, &PhasePoint::new(x.to_vec(), y.to_vec()), 0.01, 40).unwrap();
            assert!(d <= 1e-6, "{g}: defect {d}");
        }
    }
}
