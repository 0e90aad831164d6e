#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spraymetric::expr::Expression;
use spraymetric::spray::{PhasePoint, Spray};

/// `c` formatted as `+ c` or `- |c|`; the grammar has no unary minus.
fn signed(c: f64) -> String {
    if c < 0.0 {
        format!(" - {:.6}", -c)
    } else {
        format!(" + {c:.6}")
    }
}

/// Polynomial of total degree `deg` in the base coordinates.
pub fn poly_x(rng: &mut ChaCha8Rng, n: usize, deg: usize) -> String {
    let mut s = format!("{:.6}", rng.gen_range(0.2..1.0));
    let mut monos: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..deg {
        let mut next = Vec::new();
        for m in &monos {
            let start = m.last().copied().unwrap_or(0);
            for v in start..n {
                let mut m2 = m.clone();
                m2.push(v);
                next.push(m2);
            }
        }
        for m in &next {
            let c = rng.gen_range(-1.0..1.0);
            let factors: Vec<String> = m.iter().map(|v| format!("x{}", v + 1)).collect();
            s.push_str(&format!("{}*{}", signed(c), factors.join("*")));
        }
        monos = next;
    }
    s
}

/// `G^i = Σ_{a≤b} c^i_{ab}(x) y^a y^b` with `c` linear in `x`.
pub fn random_quadratic_spray(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            let mut s = String::from("0");
            for a in 0..n {
                for b in a..n {
                    let c = poly_x(rng, n, 1);
                    s.push_str(&format!(" + ({c})*y{}*y{}", a + 1, b + 1));
                }
            }
            s
        })
        .collect()
}

pub fn spray_from(n: usize, g: &[String]) -> Spray {
    let refs: Vec<&str> = g.iter().map(String::as_str).collect();
    Spray::parse(n, &refs).expect("generated spray parses")
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, count: usize, x_half: f64) -> Vec<PhasePoint> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-x_half..x_half)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if y.iter().map(|v| v * v).sum::<f64>() > 0.04 {
            out.push(PhasePoint::new(x, y));
        }
    }
    out
}

pub fn expr(text: &str, n: usize) -> Expression {
    Expression::parse(text, n).expect("test expression parses")
}
