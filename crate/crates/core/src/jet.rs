//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A [`Jet`] of order `k` in `m` variables stores `∂^β f / β!` for every
//! multi-index `|β| ≤ k`, densely, in graded order. Because monomials of
//! lower degree always come first, the coefficients of an order-`k` jet are a
//! prefix of those of any higher-order jet in the same variables: truncation
//! is a slice and jets of different orders can share one [`JetSpace`].

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::EvalError;
use crate::scalar::{integer_exponent, Scalar};

/// Highest truncation order any jet may carry.
pub const MAX_ORDER: usize = 5;
/// Highest variable count (2n for n = 6).
pub const MAX_VARS: usize = 12;

const NONE: u32 = u32::MAX;

/// Monomial tables shared by all jets in `vars` variables.
pub struct JetSpace {
    vars: usize,
    exponents: Vec<Vec<u8>>,
    degree: Vec<u8>,
    /// `count[k]` = number of monomials of degree ≤ k.
    count: Vec<usize>,
    /// `product[a][b]` = index of monomial a+b, for b < count[MAX_ORDER - deg a].
    product: Vec<Vec<u32>>,
    /// `raise[a * vars + v]` = index of a + e_v, or NONE past MAX_ORDER.
    raise: Vec<u32>,
    /// `β!` per monomial.
    factorial: Vec<f64>,
    /// First variable with a nonzero exponent and the index of β − e_v.
    lower: Vec<(u8, u32)>,
    index: HashMap<Vec<u8>, usize>,
}

impl JetSpace {
    fn build(vars: usize) -> Self {
        let mut exponents: Vec<Vec<u8>> = Vec::new();
        let mut count = Vec::with_capacity(MAX_ORDER + 1);
        for d in 0..=MAX_ORDER {
            let mut cur = vec![0u8; vars];
            monomials_of_degree(vars, d, 0, &mut cur, &mut exponents);
            count.push(exponents.len());
        }
        let index: HashMap<Vec<u8>, usize> =
            exponents.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let degree: Vec<u8> = exponents.iter().map(|e| e.iter().sum()).collect();

        let product = exponents
            .iter()
            .enumerate()
            .map(|(a, ea)| {
                let limit = count[MAX_ORDER - degree[a] as usize];
                (0..limit)
                    .map(|b| {
                        let sum: Vec<u8> =
                            ea.iter().zip(&exponents[b]).map(|(p, q)| p + q).collect();
                        index[&sum] as u32
                    })
                    .collect()
            })
            .collect();

        let mut raise = vec![NONE; exponents.len() * vars];
        for (a, ea) in exponents.iter().enumerate() {
            if (degree[a] as usize) < MAX_ORDER {
                for v in 0..vars {
                    let mut e = ea.clone();
                    e[v] += 1;
                    raise[a * vars + v] = index[&e] as u32;
                }
            }
        }

        let factorial = exponents
            .iter()
            .map(|e| e.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product())
            .collect();

        let lower = exponents
            .iter()
            .map(|e| match e.iter().position(|&k| k > 0) {
                Some(v) => {
                    let mut p = e.clone();
                    p[v] -= 1;
                    (v as u8, index[&p] as u32)
                }
                None => (0, NONE),
            })
            .collect();

        JetSpace { vars, exponents, degree, count, product, raise, factorial, lower, index }
    }

    /// Shared tables for `vars` variables, built once per process.
    pub fn get(vars: usize) -> Result<Arc<JetSpace>, EvalError> {
        if vars == 0 || vars > MAX_VARS {
            return Err(EvalError::TooManyVariables { vars, max: MAX_VARS });
        }
        static SPACES: OnceLock<Mutex<HashMap<usize, Arc<JetSpace>>>> = OnceLock::new();
        let spaces = SPACES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = spaces.lock().unwrap_or_else(|e| e.into_inner());
        Ok(guard.entry(vars).or_insert_with(|| Arc::new(JetSpace::build(vars))).clone())
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    /// Number of coefficients of an order-`k` jet: C(m + k, k).
    pub fn len(&self, order: usize) -> usize {
        self.count[order]
    }

    pub fn exponents(&self, idx: usize) -> &[u8] {
        &self.exponents[idx]
    }

    pub fn index_of(&self, beta: &[u8]) -> Option<usize> {
        self.index.get(beta).copied()
    }
}

fn monomials_of_degree(vars: usize, left: usize, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == vars {
        cur[pos] = left as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k as u8;
        monomials_of_degree(vars, left - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// A truncated Taylor expansion around a point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("vars", &self.space.vars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

fn check_order(order: usize) -> Result<(), EvalError> {
    if order > MAX_ORDER {
        return Err(EvalError::UnsupportedOrder { requested: order, max: MAX_ORDER });
    }
    Ok(())
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, order: usize, value: f64) -> Jet {
        let mut coeffs = vec![0.0; space.len(order)];
        coeffs[0] = value;
        Jet { space: space.clone(), order, coeffs }
    }

    pub fn from_coeffs(space: &Arc<JetSpace>, order: usize, coeffs: Vec<f64>) -> Jet {
        assert_eq!(coeffs.len(), space.len(order), "coefficient count must match the order");
        Jet { space: space.clone(), order, coeffs }
    }

    /// The seed jet of variable `var`: value plus a unit first-order slot.
    pub fn variable(space: &Arc<JetSpace>, order: usize, value: f64, var: usize) -> Jet {
        let mut j = Jet::constant(space, order, value);
        if order >= 1 {
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    /// Seeds for the phase coordinates: `x` occupies slots `0..n`, `y` slots `n..2n`.
    pub fn lift_point(x: &[f64], y: &[f64], order: usize) -> Result<Vec<Jet>, EvalError> {
        check_order(order)?;
        let space = JetSpace::get(x.len() + y.len())?;
        Ok(x.iter()
            .chain(y)
            .enumerate()
            .map(|(v, &c)| Jet::variable(&space, order, c, v))
            .collect())
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vars(&self) -> usize {
        self.space.vars
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficient `∂^β f / β!`.
    pub fn coefficient(&self, beta: &[u8]) -> Result<f64, EvalError> {
        let deg: usize = beta.iter().map(|&b| b as usize).sum();
        if deg > self.order {
            return Err(EvalError::Order { requested: deg, available: self.order });
        }
        let idx = self.space.index_of(beta).ok_or(EvalError::Order {
            requested: deg,
            available: self.order,
        })?;
        Ok(self.coeffs[idx])
    }

    /// The true partial derivative `∂^β f`.
    pub fn partial(&self, beta: &[u8]) -> Result<f64, EvalError> {
        let c = self.coefficient(beta)?;
        let idx = self.space.index_of(beta).expect("checked by coefficient");
        Ok(c * self.space.factorial[idx])
    }

    /// First partial with respect to variable `v`.
    pub fn d1(&self, v: usize) -> f64 {
        if self.order == 0 {
            return f64::NAN;
        }
        self.coeffs[1 + v]
    }

    /// `∂/∂v` as a jet of one lower order. Panics on an order-0 jet.
    pub fn derivative(&self, v: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let len = self.space.len(order);
        let vars = self.space.vars;
        let mut coeffs = vec![0.0; len];
        for (a, c) in coeffs.iter_mut().enumerate() {
            let up = self.space.raise[a * vars + v] as usize;
            let mult = self.space.exponents[up][v] as f64;
            *c = mult * self.coeffs[up];
        }
        Jet { space: self.space.clone(), order, coeffs }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: self.coeffs[..self.space.len(order)].to_vec(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    fn zip_with(&self, rhs: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert_eq!(self.space.vars, rhs.space.vars);
        let order = self.order.min(rhs.order);
        let len = self.space.len(order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: (0..len).map(|i| f(self.coeffs[i], rhs.coeffs[i])).collect(),
        }
    }

    fn product(&self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.space.vars, rhs.space.vars);
        let order = self.order.min(rhs.order);
        let sp = &self.space;
        let mut out = vec![0.0; sp.len(order)];
        for a in 0..sp.len(order) {
            let ca = self.coeffs[a];
            if ca == 0.0 {
                continue;
            }
            let limit = sp.len(order - sp.degree[a] as usize);
            let table = &sp.product[a];
            for b in 0..limit {
                out[table[b] as usize] += ca * rhs.coeffs[b];
            }
        }
        Jet { space: self.space.clone(), order, coeffs: out }
    }

    /// `Σ_j derivs[j] · h^j` with `h = self − value`; `derivs[j] = f^(j)(u0)/j!`.
    fn series(&self, derivs: &[f64]) -> Result<Jet, EvalError> {
        if let Some(bad) = derivs.iter().position(|d| !d.is_finite()) {
            // A non-finite leading value is a legitimate overflow; a non-finite
            // derivative means the function is singular at this point.
            if bad > 0 {
                return Err(EvalError::Domain { op: "series", value: self.value() });
            }
        }
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let k = self.order;
        let mut acc = Jet::constant(&self.space, k, derivs[k]);
        for j in (0..k).rev() {
            acc = acc.product(&h);
            acc.coeffs[0] += derivs[j];
        }
        Ok(acc)
    }

    pub fn recip(&self) -> Result<Jet, EvalError> {
        let v = self.value();
        if v == 0.0 {
            return Err(EvalError::Domain { op: "div", value: v });
        }
        let mut d = Vec::with_capacity(self.order + 1);
        d.push(1.0 / v);
        for j in 1..=self.order {
            d.push(-d[j - 1] / v);
        }
        self.series(&d)
    }

    /// Quotient computed degree by degree from `self = rhs · q`.
    pub fn checked_div(&self, rhs: &Jet) -> Result<Jet, EvalError> {
        let b0 = rhs.value();
        if b0 == 0.0 {
            return Err(EvalError::Domain { op: "div", value: b0 });
        }
        let order = self.order.min(rhs.order);
        let sp = &self.space;
        let mut q = Jet::constant(sp, order, self.coeffs[0] / b0);
        let mut tail = rhs.truncate(order);
        tail.coeffs[0] = 0.0;
        for d in 1..=order {
            let t = tail.product(&q);
            for idx in sp.count[d - 1]..sp.count[d] {
                q.coeffs[idx] = (self.coeffs[idx] - t.coeffs[idx]) / b0;
            }
        }
        Ok(q)
    }

    /// Substitute `vars_i ↦ value_i + shifts_i`, where every shift has zero
    /// constant term. The result lives in the shifts' space and order.
    pub fn compose(&self, shifts: &[Jet]) -> Jet {
        assert_eq!(shifts.len(), self.space.vars, "one shift per variable");
        let target = &shifts[0].space;
        let order = shifts.iter().map(|s| s.order).min().unwrap_or(0);
        let upto = self.space.len(self.order.min(order));
        let mut monomials: Vec<Jet> = Vec::with_capacity(upto);
        let mut out = Jet::constant(target, order, self.coeffs[0]);
        monomials.push(Jet::constant(target, order, 1.0));
        for idx in 1..upto {
            let (v, prev) = self.space.lower[idx];
            let m = monomials[prev as usize].product(&shifts[v as usize]);
            let c = self.coeffs[idx];
            if c != 0.0 {
                for (o, t) in out.coeffs.iter_mut().zip(&m.coeffs) {
                    *o += c * t;
                }
            }
            monomials.push(m);
        }
        out
    }
}

fn binomial_coeffs(p: f64, k: usize) -> Vec<f64> {
    let mut b = Vec::with_capacity(k + 1);
    b.push(1.0);
    for j in 1..=k {
        b.push(b[j - 1] * (p - (j - 1) as f64) / j as f64);
    }
    b
}

impl Scalar for Jet {
    fn lift(&self, c: f64) -> Self {
        Jet::constant(&self.space, self.order, c)
    }

    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn mul(&self, rhs: &Self) -> Self {
        self.product(rhs)
    }

    fn neg(&self) -> Self {
        Jet {
            space: self.space.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        self.checked_div(rhs)
    }

    fn sqrt(&self) -> Result<Self, EvalError> {
        let v = self.value();
        if v < 0.0 || (v == 0.0 && self.order > 0) {
            return Err(EvalError::Domain { op: "sqrt", value: v });
        }
        let s = v.sqrt();
        let b = binomial_coeffs(0.5, self.order);
        let mut d = vec![s];
        let mut vp = s;
        for bj in b.iter().skip(1) {
            vp /= v;
            d.push(bj * vp);
        }
        self.series(&d)
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut d = vec![e];
        for j in 1..=self.order {
            d.push(d[j - 1] / j as f64);
        }
        // exp never has singular derivatives; an overflowing value is carried as inf.
        self.series(&d).unwrap_or_else(|_| self.lift(f64::NAN))
    }

    fn ln(&self) -> Result<Self, EvalError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(EvalError::Domain { op: "ln", value: v });
        }
        let mut d = vec![v.ln()];
        let mut vp = 1.0;
        for j in 1..=self.order {
            vp *= v;
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign / (j as f64 * vp));
        }
        self.series(&d)
    }

    /// Sign frozen from the value; at zero the positive branch is taken.
    fn abs(&self) -> Self {
        if self.value() < 0.0 {
            Scalar::neg(self)
        } else {
            self.clone()
        }
    }

    fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut d = Vec::with_capacity(self.order + 1);
        let mut fact = 1.0;
        for j in 0..=self.order {
            if j > 0 {
                fact *= j as f64;
            }
            d.push(cycle[j % 4] / fact);
        }
        d[0] = self.value().sin();
        self.series(&d).unwrap_or_else(|_| self.lift(f64::NAN))
    }

    fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let mut d = Vec::with_capacity(self.order + 1);
        let mut fact = 1.0;
        for j in 0..=self.order {
            if j > 0 {
                fact *= j as f64;
            }
            d.push(cycle[j % 4] / fact);
        }
        d[0] = self.value().cos();
        self.series(&d).unwrap_or_else(|_| self.lift(f64::NAN))
    }

    fn powf(&self, p: f64) -> Result<Self, EvalError> {
        let v = self.value();
        let value = crate::scalar::real_pow(v, p)?;
        let b = binomial_coeffs(p, self.order);
        let mut d = vec![value];
        match integer_exponent(p) {
            Some(k) => {
                for (j, bj) in b.iter().enumerate().skip(1) {
                    if *bj == 0.0 {
                        d.push(0.0);
                    } else {
                        if v == 0.0 && k - (j as i32) < 0 {
                            return Err(EvalError::Domain { op: "pow", value: v });
                        }
                        d.push(bj * v.powi(k - j as i32));
                    }
                }
            }
            None => {
                for (j, bj) in b.iter().enumerate().skip(1) {
                    d.push(bj * v.powf(p - j as f64));
                }
            }
        }
        self.series(&d)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Scalar::add(self, rhs)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Scalar::sub(self, rhs)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Scalar::neg(self)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seeds(y: f64, order: usize) -> Vec<Jet> {
        Jet::lift_point(&[0.0], &[y], order).unwrap()
    }

    #[test]
    fn coefficient_count_is_binomial() {
        let sp = JetSpace::get(6).unwrap();
        assert_eq!(sp.len(0), 1);
        assert_eq!(sp.len(1), 7);
        assert_eq!(sp.len(3), 84);
        let sp = JetSpace::get(12).unwrap();
        assert_eq!(sp.len(3), 455);
    }

    #[test]
    fn lift_sets_value_and_unit_slot() {
        let s = seeds(2.0, 1);
        assert_eq!(s[1].value(), 2.0);
        assert_eq!(s[1].partial(&[0, 1]).unwrap(), 1.0);
        assert_eq!(s[1].partial(&[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn square_partials() {
        let y = &seeds(3.0, 2)[1];
        let sq = y * y;
        assert_eq!(sq.partial(&[0, 1]).unwrap(), 6.0);
        assert_eq!(sq.partial(&[0, 2]).unwrap(), 2.0);
    }

    #[test]
    fn cube_third_partial() {
        let y = &seeds(1.7, 3)[1];
        let cube = &(y * y) * y;
        assert_relative_eq!(cube.partial(&[0, 3]).unwrap(), 6.0, epsilon = 1e-14);
        assert_eq!(cube.partial(&[0, 0]).unwrap(), cube.value());
    }

    #[test]
    fn exp_of_ln_is_identity() {
        let s = Jet::lift_point(&[0.3, -0.2], &[1.4, 0.8], 3).unwrap();
        let y = &s[2];
        let back = y.ln().unwrap().exp();
        for (a, b) in back.coeffs().iter().zip(y.coeffs()) {
            assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn cross_coefficient_of_product() {
        let s = Jet::lift_point(&[1.0], &[1.0], 2).unwrap();
        let p = &s[0] * &s[1];
        assert_eq!(p.partial(&[1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn log_of_product_is_sum_of_logs() {
        let s = Jet::lift_point(&[0.0, 0.0], &[1.3, 0.6], 3).unwrap();
        let lhs = (&s[2] * &s[3]).ln().unwrap();
        let rhs = &s[2].ln().unwrap() + &s[3].ln().unwrap();
        for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn pythagorean_identity() {
        let s = Jet::lift_point(&[0.7, -1.1], &[2.3, 0.4], 3).unwrap();
        let u = &(&s[0] * &s[3]) + &s[2];
        let sn = Scalar::sin(&u);
        let cs = Scalar::cos(&u);
        let one = &(&sn * &sn) + &(&cs * &cs);
        assert!((one.value() - 1.0).abs() < 1e-13);
        assert!(one.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
    }

    #[test]
    fn partial_beyond_order_is_an_error() {
        let y = &seeds(1.0, 1)[1];
        assert!(matches!(y.partial(&[0, 2]), Err(EvalError::Order { .. })));
    }

    #[test]
    fn order_above_max_rejected() {
        assert!(Jet::lift_point(&[0.0], &[1.0], MAX_ORDER + 1).is_err());
    }

    #[test]
    fn division_inverts_multiplication() {
        let s = Jet::lift_point(&[0.5, 2.0], &[-1.0, 3.0], 4).unwrap();
        let a = &(&s[0] * &s[1]) + &s[3];
        let b = &(&s[2] * &s[2]).add_scalar(1.5) + &s[1];
        let q = a.checked_div(&b).unwrap();
        let back = &q * &b;
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_lowers_order() {
        let s = Jet::lift_point(&[2.0], &[3.0], 3).unwrap();
        // f = x^2 y
        let f = &(&s[0] * &s[0]) * &s[1];
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 2);
        assert_relative_eq!(fx.value(), 12.0);
        assert_relative_eq!(fx.partial(&[1, 0]).unwrap(), 6.0);
        assert_relative_eq!(fx.partial(&[1, 1]).unwrap(), 2.0);
    }

    #[test]
    fn compose_matches_direct_evaluation() {
        // f(u, v) = u^2 v + 3v expanded at (1, 2), then u = 1 + t, v = 2 + 2t.
        let s = Jet::lift_point(&[1.0], &[2.0], 3).unwrap();
        let f = &(&(&s[0] * &s[0]) * &s[1]) + &s[1].scale(3.0);
        let t_space = JetSpace::get(2).unwrap();
        let t = Jet::variable(&t_space, 3, 0.0, 0);
        let g = f.compose(&[t.clone(), t.scale(2.0)]);
        // (1+t)^2 (2+2t) + 3(2+2t) = 2 + 6t + 6t^2 + 2t^3 + 6 + 6t
        assert_relative_eq!(g.value(), 8.0);
        assert_relative_eq!(g.coefficient(&[1, 0]).unwrap(), 12.0);
        assert_relative_eq!(g.coefficient(&[2, 0]).unwrap(), 6.0);
        assert_relative_eq!(g.coefficient(&[3, 0]).unwrap(), 2.0);
    }
}
