//! Composite Gauss–Legendre quadrature on `[0, 1]` with panel doubling.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    /// Nodes on `[-1, 1]`, ascending.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on `P_m`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[m - 1 - i] = z;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// `(P_m(z), P_m'(z))` by the three-term recurrence.
fn legendre(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    (p1, m as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub value: Vec<f64>,
    pub panels: usize,
    /// Max coefficient change at the last doubling.
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Refinement<E> {
    Failed(E),
    /// Tolerance not met within the panel budget.
    Budget { panels: usize, change: f64 },
}

impl GaussLegendre {
    /// `∫₀¹ f(t) dt` for vector-valued `f` over `panels` equal panels.
    pub fn composite<E>(
        &self,
        panels: usize,
        dim: usize,
        f: &mut dyn FnMut(f64) -> Result<Vec<f64>, E>,
    ) -> Result<Vec<f64>, E> {
        let h = 1.0 / panels as f64;
        let mut acc = vec![0.0; dim];
        for k in 0..panels {
            let a = k as f64 * h;
            for (z, w) in self.nodes.iter().zip(&self.weights) {
                let t = a + 0.5 * h * (z + 1.0);
                let v = f(t)?;
                debug_assert_eq!(v.len(), dim);
                for (s, x) in acc.iter_mut().zip(&v) {
                    *s += 0.5 * h * w * x;
                }
            }
        }
        Ok(acc)
    }

    /// Doubles the panel count from `start` until successive results differ
    /// by at most `tol·max(1, |c|)` in every component.
    pub fn adaptive<E>(
        &self,
        start: usize,
        max_panels: usize,
        tol: f64,
        dim: usize,
        f: &mut dyn FnMut(f64) -> Result<Vec<f64>, E>,
    ) -> Result<Integral, Refinement<E>> {
        let mut panels = start.max(1);
        let mut prev = self.composite(panels, dim, f).map_err(Refinement::Failed)?;
        loop {
            let next_panels = panels * 2;
            if next_panels > max_panels {
                let change = f64::INFINITY;
                return Err(Refinement::Budget { panels, change });
            }
            let next = self.composite(next_panels, dim, f).map_err(Refinement::Failed)?;
            let mut ok = true;
            let mut change = 0.0f64;
            for (a, b) in prev.iter().zip(&next) {
                let d = (a - b).abs();
                change = change.max(d);
                if !(d <= tol * b.abs().max(1.0)) {
                    ok = false;
                }
            }
            if ok {
                return Ok(Integral { value: next, panels: next_panels, change });
            }
            if next_panels * 2 > max_panels {
                return Err(Refinement::Budget { panels: next_panels, change });
            }
            prev = next;
            panels = next_panels;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_nodes() {
        let g = GaussLegendre::new(2);
        assert_relative_eq!(g.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g.weights[0], 1.0, epsilon = 1e-15);
        let g = GaussLegendre::new(3);
        assert_eq!(g.nodes[1], 0.0);
        assert_relative_eq!(g.weights[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(g.nodes[2], 0.6f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn weights_sum_to_two() {
        for m in [1, 4, 7, 16, 32] {
            let g = GaussLegendre::new(m);
            assert_relative_eq!(g.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2m_minus_1() {
        let g = GaussLegendre::new(16);
        for deg in 0..32 {
            let v = g
                .composite::<()>(1, 1, &mut |t| Ok(vec![t.powi(deg)]))
                .unwrap()[0];
            assert_relative_eq!(v, 1.0 / (deg as f64 + 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn adaptive_converges_on_smooth_integrand() {
        let g = GaussLegendre::new(16);
        let r = g
            .adaptive::<()>(1, 1 << 10, 1e-12, 1, &mut |t| Ok(vec![(20.0 * t).sin()]))
            .unwrap();
        assert_relative_eq!(r.value[0], (1.0 - 20f64.cos()) / 20.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let g = GaussLegendre::new(4);
        let r = g.adaptive::<()>(1, 8, 1e-14, 1, &mut |t| Ok(vec![t.sqrt()]));
        assert!(matches!(r, Err(Refinement::Budget { .. })));
    }
}
