//! Truncated power series, the curve
//! `F(x, y) = sum_k nu_k A_k(1+x) ((y+1-p0)/(1+x) + p0)^k - y - 1`
//! around its double point at the origin, its two analytic branches, and the
//! series of `W(z) = E[z^X]` around 0.
//!
//! Branch coefficients are obtained by substituting the partial branch into
//! the bivariate series and reading off the first nonzero coefficient, which
//! makes every step checkable through the residual.

use serde::Serialize;

use crate::dist_solver::{iterate_law, pgf_of};
use crate::error::{Error, Result};
use crate::model::{Model, Pmf, Regime, REGIME_TOL};

/// Largest order accepted for bivariate expansions.
pub const MAX_BIVARIATE_ORDER: usize = 12;

/// Univariate series `a_0 + a_1 x + ... + a_D x^D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least a constant term");
        Self { coeffs }
    }

    pub fn zeros(order: usize) -> Self {
        Self::new(vec![0.0; order + 1])
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[0] = c;
        s
    }

    /// The series `x`.
    pub fn variable(order: usize) -> Self {
        let mut s = Self::zeros(order);
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, 0.0);
        Self::new(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.order().min(other.order());
        Self::new((0..=d).map(|i| self.coeffs[i] + other.coeffs[i]).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.order().min(other.order());
        let mut out = vec![0.0; d + 1];
        for (i, &a) in self.coeffs[..=d].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out[i..].iter_mut().zip(&other.coeffs) {
                *o += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::constant(1.0, self.order());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// `1 / self`; needs a nonzero constant term.
    pub fn reciprocal(&self) -> Option<Self> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 {
            return None;
        }
        let mut b = vec![0.0; self.coeffs.len()];
        b[0] = 1.0 / a0;
        for n in 1..b.len() {
            let s: f64 = (1..=n).map(|i| self.coeffs[i] * b[n - i]).sum();
            b[n] = -s / a0;
        }
        Some(Self::new(b))
    }

    /// `self(inner(x))` as a polynomial composition, truncated at the
    /// smaller order. Exact when `inner` has no constant term.
    pub fn compose(&self, inner: &Self) -> Self {
        let d = self.order().min(inner.order());
        let inner = inner.truncate(d);
        let mut out = Self::zeros(d);
        for &a in self.coeffs.iter().rev() {
            out = out.mul(&inner);
            out.coeffs[0] += a;
        }
        out
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zeros(0);
        }
        Self::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &a)| (i + 1) as f64 * a)
                .collect(),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }
}

/// Bivariate series `sum a_{i,j} x^i y^j` with `i + j <= D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BivariateSeries {
    order: usize,
    /// `coeffs[i][j]`, zero whenever `i + j > order`.
    coeffs: Vec<Vec<f64>>,
}

impl BivariateSeries {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![vec![0.0; order + 1]; order + 1],
        }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[0][0] = c;
        s
    }

    pub fn x(order: usize) -> Self {
        let mut s = Self::zeros(order);
        if order >= 1 {
            s.coeffs[1][0] = 1.0;
        }
        s
    }

    pub fn y(order: usize) -> Self {
        let mut s = Self::zeros(order);
        if order >= 1 {
            s.coeffs[0][1] = 1.0;
        }
        s
    }

    /// Embeds a series in `x` alone.
    pub fn from_x_series(s: &TruncatedSeries, order: usize) -> Self {
        let mut out = Self::zeros(order);
        for i in 0..=order.min(s.order()) {
            out.coeffs[i][0] = s.coeff(i);
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            return 0.0;
        }
        self.coeffs[i][j]
    }

    /// Rows `a_{i,.}` of the coefficient matrix.
    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.order.min(other.order);
        let mut out = Self::zeros(d);
        for i in 0..=d {
            for j in 0..=d - i {
                out.coeffs[i][j] = self.coeffs[i][j] + other.coeffs[i][j];
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().flatten().for_each(|a| *a *= c);
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.order.min(other.order);
        let mut out = Self::zeros(d);
        for i1 in 0..=d {
            for j1 in 0..=d - i1 {
                let a = self.coeffs[i1][j1];
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..=d - i1 - j1 {
                    for j2 in 0..=d - i1 - j1 - i2 {
                        out.coeffs[i1 + i2][j1 + j2] += a * other.coeffs[i2][j2];
                    }
                }
            }
        }
        out
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        for i in (0..=self.order).rev() {
            let row: f64 = self.coeffs[i][..=self.order - i]
                .iter()
                .rev()
                .fold(0.0, |acc, &a| acc * y + a);
            total = total * x + row;
        }
        total
    }

    /// `F(x, y(x))` for a series `y` without constant term, through the
    /// smaller of the two orders.
    pub fn substitute_y(&self, y: &TruncatedSeries) -> TruncatedSeries {
        let d = self.order.min(y.order());
        let y = y.truncate(d);
        debug_assert!(y.coeff(0) == 0.0, "substitution needs y(0) = 0");
        let mut out = TruncatedSeries::zeros(d);
        let mut y_pow = TruncatedSeries::constant(1.0, d);
        for j in 0..=d {
            let row = TruncatedSeries::new((0..=d).map(|i| self.coeff(i, j)).collect());
            out = out.add(&row.mul(&y_pow));
            y_pow = y_pow.mul(&y);
        }
        out
    }
}

/// Coefficients of `A(1+x)` where `A` is the generating function of `law`.
pub fn pgf_shifted(law: &Pmf, order: usize) -> TruncatedSeries {
    let mut out = vec![0.0; order + 1];
    // Row n of Pascal's triangle, truncated at the order.
    let mut binom = vec![0.0; order + 1];
    binom[0] = 1.0;
    for (n, &p) in law.probs().iter().enumerate() {
        if n > 0 {
            for j in (1..=order.min(n)).rev() {
                binom[j] += binom[j - 1];
            }
        }
        if p > 0.0 {
            for (o, &b) in out.iter_mut().zip(&binom) {
                *o += p * b;
            }
        }
    }
    TruncatedSeries::new(out)
}

/// `P(X = 0)` used inside `F`: `1 - E_nu[m]` unless the model is
/// supercritical, in which case it is read from the converged law of `X`.
pub fn default_p0(model: &Model) -> Result<f64> {
    if model.classify().regime != Regime::Supercritical {
        return Ok(1.0 - model.moments().e_m);
    }
    Ok(iterate_law(model, 400, 100_000, 1e-12)?.p0())
}

pub fn f_series(model: &Model, order: usize) -> Result<BivariateSeries> {
    Ok(f_series_with_p0(model, order, default_p0(model)?))
}

pub fn f_series_with_p0(model: &Model, order: usize, p0: f64) -> BivariateSeries {
    let d = order;
    // u = p0 + (1 - p0 + y) / (1 + x)
    let inv = TruncatedSeries::new((0..=d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
    let inv = BivariateSeries::from_x_series(&inv, d);
    let numer = BivariateSeries::constant(1.0 - p0, d).add(&BivariateSeries::y(d));
    let u = BivariateSeries::constant(p0, d).add(&numer.mul(&inv));
    let nu = model.offspring().probs();
    let mut acc = BivariateSeries::zeros(d);
    for k in (0..nu.len()).rev() {
        acc = acc.mul(&u);
        if nu[k] > 0.0 {
            let a = pgf_shifted(model.arrivals().law(k), d).scale(nu[k]);
            acc = acc.add(&BivariateSeries::from_x_series(&a, d));
        }
    }
    let shift = BivariateSeries::constant(-1.0, d).add(&BivariateSeries::y(d).scale(-1.0));
    acc.add(&shift)
}

/// Exact evaluation of `F` and `dF/dy` from the laws, without truncation.
#[derive(Debug, Clone)]
pub struct FCurve<'a> {
    model: &'a Model,
    p0: f64,
}

impl<'a> FCurve<'a> {
    pub fn new(model: &'a Model) -> Result<Self> {
        Ok(Self::with_p0(model, default_p0(model)?))
    }

    pub fn with_p0(model: &'a Model, p0: f64) -> Self {
        Self { model, p0 }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    fn u(&self, x: f64, y: f64) -> f64 {
        (y + 1.0 - self.p0) / (1.0 + x) + self.p0
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let u = self.u(x, y);
        let mut total = 0.0;
        let mut u_pow = 1.0;
        for (k, &nu) in self.model.offspring().probs().iter().enumerate() {
            if nu > 0.0 {
                total += nu * pgf_of(self.model.arrivals().law(k).probs(), 1.0 + x) * u_pow;
            }
            u_pow *= u;
        }
        total - y - 1.0
    }

    pub fn dy(&self, x: f64, y: f64) -> f64 {
        let u = self.u(x, y);
        let mut total = 0.0;
        let mut u_pow = 1.0;
        for (k, &nu) in self.model.offspring().probs().iter().enumerate().skip(1) {
            if nu > 0.0 {
                total += nu * k as f64 * pgf_of(self.model.arrivals().law(k).probs(), 1.0 + x) * u_pow;
            }
            u_pow *= u;
        }
        total / (1.0 + x) - 1.0
    }
}

/// Closed forms of the second-order coefficients of `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticPart {
    pub a02: f64,
    pub a11: f64,
    pub a20: f64,
}

impl QuadraticPart {
    /// Valid for any arrival family, with `p0 = 1 - E_nu[m]`.
    pub fn of(model: &Model) -> Self {
        let m = model.moments();
        let (b, e, s2) = (m.e_sb_m, m.e_m, m.sigma2);
        Self {
            a02: s2 / 2.0,
            a11: b - 1.0 - s2 * e,
            a20: m.e_q / 2.0 + e * (1.0 - b) + s2 * e * e / 2.0,
        }
    }

    /// Forms written in terms of `E_nu_bar[m]` alone. `a11` agrees with
    /// [`QuadraticPart::of`] when `E_nu[m] = E_nu_bar[m]` (degree-independent
    /// arrivals); this `a20` does not satisfy `discriminant() = theta`.
    pub fn size_biased_forms(model: &Model) -> Self {
        let m = model.moments();
        let (b, s2) = (m.e_sb_m, m.sigma2);
        Self {
            a02: s2 / 2.0,
            a11: b * (1.0 - s2) - 1.0,
            a20: (m.e_q + b * b * (s2 - 2.0) - 2.0 * b) / 2.0,
        }
    }

    /// `a11^2 - 4 a02 a20`, which equals theta.
    pub fn discriminant(&self) -> f64 {
        self.a11 * self.a11 - 4.0 * self.a02 * self.a20
    }
}

/// First-order coefficients `(c_-, c_+)` of the two branches.
pub fn puiseux_c(model: &Model) -> Result<(f64, f64)> {
    let theta = model.theta();
    if theta <= REGIME_TOL {
        return Err(Error::NotSubcritical { theta });
    }
    let q = QuadraticPart::of(model);
    let s2 = model.moments().sigma2;
    let root = theta.sqrt();
    Ok(((-q.a11 - root) / s2, (-q.a11 + root) / s2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchSign {
    Minus,
    Plus,
}

impl BranchSign {
    pub fn factor(self) -> f64 {
        match self {
            BranchSign::Minus => -1.0,
            BranchSign::Plus => 1.0,
        }
    }
}

/// Branch `y(x) = sum_{k=1}^D c_k x^k` of `F(x, y) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PuiseuxBranch {
    /// `c_1 .. c_D`.
    pub c: Vec<f64>,
    pub sign: BranchSign,
}

impl PuiseuxBranch {
    pub fn order(&self) -> usize {
        self.c.len()
    }

    pub fn as_series(&self) -> TruncatedSeries {
        let mut coeffs = Vec::with_capacity(self.c.len() + 1);
        coeffs.push(0.0);
        coeffs.extend_from_slice(&self.c);
        TruncatedSeries::new(coeffs)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.as_series().eval(x)
    }

    /// Coefficients of `F(x, y(x))` through order `D + 1`; all vanish for an
    /// exact branch.
    pub fn residual_series(&self, f: &BivariateSeries) -> TruncatedSeries {
        let d = (self.order() + 1).min(f.order());
        f.substitute_y(&self.as_series().truncate(d))
    }
}

pub fn puiseux_branch(model: &Model, sign: BranchSign, order: usize) -> Result<PuiseuxBranch> {
    if order == 0 || order > MAX_BIVARIATE_ORDER {
        return Err(Error::Config(format!(
            "branch order must be in 1..={MAX_BIVARIATE_ORDER}, got {order}"
        )));
    }
    let (c_minus, c_plus) = puiseux_c(model)?;
    let f = f_series(model, order + 1)?;
    let c1 = match sign {
        BranchSign::Minus => c_minus,
        BranchSign::Plus => c_plus,
    };
    // Adding c_k x^k changes the x^{k+1} coefficient by c_k (a11 + 2 a02 c1).
    let linear = f.coeff(1, 1) + 2.0 * f.coeff(0, 2) * c1;
    let mut c = vec![c1];
    for k in 2..=order {
        if linear.abs() < 1e-12 {
            return Err(Error::DegenerateStep {
                order: k,
                coefficient: linear,
            });
        }
        let mut y = vec![0.0];
        y.extend_from_slice(&c);
        y.resize(k + 2, 0.0);
        let r = f.substitute_y(&TruncatedSeries::new(y));
        c.push(-r.coeff(k + 1) / linear);
    }
    Ok(PuiseuxBranch { c, sign })
}

/// Solves `F(x, y) = 0` for `y` by damped Newton steps from `y_seed`.
pub fn newton_continue(model: &Model, x: f64, y_seed: f64) -> Result<f64> {
    let curve = FCurve::new(model)?;
    newton_on(&curve, x, y_seed)
}

pub fn newton_on(curve: &FCurve<'_>, x: f64, y_seed: f64) -> Result<f64> {
    const TOL: f64 = 1e-12;
    if x <= -1.0 {
        return Err(Error::NewtonDiverged {
            x,
            residual: f64::INFINITY,
        });
    }
    let mut y = y_seed;
    let mut f = curve.eval(x, y);
    for _ in 0..200 {
        if f.abs() < TOL {
            return Ok(y);
        }
        let slope = curve.dy(x, y);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let step = f / slope;
        let mut lambda = 1.0;
        loop {
            let candidate = y - lambda * step;
            let fc = curve.eval(x, candidate);
            if fc.abs() < f.abs() || lambda < 1e-10 {
                y = candidate;
                f = fc;
                break;
            }
            lambda *= 0.5;
        }
        if !f.is_finite() {
            break;
        }
    }
    if f.abs() < TOL {
        return Ok(y);
    }
    Err(Error::NewtonDiverged { x, residual: f.abs() })
}

/// Extra orders carried internally by [`w_series`]: truncation only spoils
/// the top coefficients.
pub const W_GUARD: usize = 32;

/// Coefficients `w_0 .. w_D` of `W(z)` by formal fixed-point iteration of
/// `W(z) = sum_k nu_k A_k(z) s(z)^k`, `s(z) = sum_j w_{j+1} z^j + p0`.
pub fn w_series(model: &Model, order: usize) -> Result<TruncatedSeries> {
    w_series_with(model, order, 1e-14, 200_000)
}

pub fn w_series_with(model: &Model, order: usize, tol: f64, max_iters: usize) -> Result<TruncatedSeries> {
    let p0 = default_p0(model)?;
    let d = order + W_GUARD;
    let nu = model.offspring().probs();
    let laws: Vec<TruncatedSeries> = (0..nu.len())
        .map(|k| {
            let mut c = model.arrivals().law(k).probs().to_vec();
            c.resize(d + 1, 0.0);
            TruncatedSeries::new(c)
        })
        .collect();
    let mut w = TruncatedSeries::constant(p0, d);
    let mut last = f64::NAN;
    for _ in 0..max_iters {
        let mut s = w.coeffs()[1..].to_vec();
        s.push(0.0);
        s[0] += p0;
        let s = TruncatedSeries::new(s);
        let mut acc = TruncatedSeries::zeros(d);
        for k in (0..nu.len()).rev() {
            acc = acc.mul(&s);
            if nu[k] > 0.0 {
                acc = acc.add(&laws[k].scale(nu[k]));
            }
        }
        last = acc
            .coeffs()
            .iter()
            .zip(w.coeffs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = acc;
        if last < tol {
            return Ok(w.truncate(order));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        last_distance: last,
    })
}

/// Ratio-test estimate of `lim w_{k+1}/w_k` over the last `window` ratios;
/// its inverse estimates the radius of convergence.
pub fn coefficient_ratio(series: &TruncatedSeries, window: usize) -> Result<f64> {
    let c = series.coeffs();
    let usable = c.iter().position(|&a| !(a > 1e-280)).unwrap_or(c.len());
    if window == 0 || usable < window + 1 {
        return Err(Error::InsufficientSupport {
            needed: window.max(1) + 1,
            available: usable,
        });
    }
    let tail = &c[usable - window - 1..usable];
    let log_sum: f64 = tail.windows(2).map(|w| (w[1] / w[0]).ln()).sum();
    Ok((log_sum / window as f64).exp())
}

pub fn radius_estimate(series: &TruncatedSeries, window: usize) -> Result<f64> {
    Ok(1.0 / coefficient_ratio(series, window)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArrivalFamily, OffspringDist};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn series_arithmetic() {
        let one_plus_x = TruncatedSeries::new(vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        let inv = one_plus_x.reciprocal().unwrap();
        assert_eq!(inv.coeffs(), &[1.0, -1.0, 1.0, -1.0, 1.0]);
        assert_eq!(one_plus_x.pow(3).coeffs(), &[1.0, 3.0, 3.0, 1.0, 0.0]);
        // exp(x) composed with 2x
        let exp = TruncatedSeries::new(vec![1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0]);
        let two_x = TruncatedSeries::new(vec![0.0, 2.0, 0.0, 0.0, 0.0]);
        let e2 = exp.compose(&two_x);
        for (a, b) in e2.coeffs().iter().zip([1.0, 2.0, 2.0, 4.0 / 3.0, 2.0 / 3.0]) {
            assert!(close(*a, b, 1e-15));
        }
        assert_eq!(one_plus_x.pow(2).derivative().coeffs(), &[2.0, 2.0, 0.0, 0.0]);
        assert!(TruncatedSeries::zeros(3).reciprocal().is_none());
    }

    #[test]
    fn bivariate_arithmetic() {
        let d = 4;
        let x = BivariateSeries::x(d);
        let y = BivariateSeries::y(d);
        let s = x.add(&y);
        let sq = s.mul(&s);
        assert_eq!((sq.coeff(2, 0), sq.coeff(1, 1), sq.coeff(0, 2)), (1.0, 2.0, 1.0));
        assert!(close(sq.eval(0.3, 0.2), 0.25, 1e-15));
        // (x + y)^2 with y = x + x^2 gives 4x^2 + 4x^3 + x^4
        let yx = TruncatedSeries::new(vec![0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(sq.substitute_y(&yx).coeffs(), &[0.0, 0.0, 4.0, 4.0, 1.0]);
    }

    #[test]
    fn shifted_pgf_examples() {
        assert_eq!(pgf_shifted(&Pmf::point_mass(0), 4).coeffs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(pgf_shifted(&Pmf::point_mass(2), 4).coeffs(), &[1.0, 2.0, 1.0, 0.0, 0.0]);
        let alpha: f64 = 0.325;
        let a = pgf_shifted(&Pmf::poisson(alpha, 30).unwrap(), 8);
        let mut fact = 1.0;
        for j in 0..=8 {
            if j > 0 {
                fact *= j as f64;
            }
            assert!(close(a.coeff(j), alpha.powi(j as i32) / fact, 1e-12), "j = {j}");
        }
    }

    #[test]
    fn no_cars_branch_is_flat() {
        let m = Model::new(OffspringDist::geometric(60).unwrap(), ArrivalFamily::uniform(Pmf::point_mass(0))).unwrap();
        let (c_minus, c_plus) = puiseux_c(&m).unwrap();
        assert_eq!(c_minus, 0.0);
        assert!(close(c_plus, 2.0 / m.moments().sigma2, 1e-12));
        let b = puiseux_branch(&m, BranchSign::Minus, 6).unwrap();
        assert!(b.c.iter().all(|&c| c.abs() < 1e-14), "{:?}", b.c);
        let w = w_series(&m, 10).unwrap();
        assert!(close(w.coeff(0), 1.0, 1e-15));
        assert!(w.coeffs()[1..].iter().all(|&c| c.abs() < 1e-15));
    }

    #[test]
    fn critical_model_has_no_separated_branches() {
        let m = Model::geometric_poisson(2f64.sqrt() - 1.0, 60, 30).unwrap();
        assert!(matches!(puiseux_c(&m), Err(Error::NotSubcritical { .. })));
        assert!(matches!(
            puiseux_branch(&m, BranchSign::Minus, 4),
            Err(Error::NotSubcritical { .. })
        ));
    }

    #[test]
    fn newton_at_origin() {
        let m = Model::geometric_poisson(0.325, 60, 30).unwrap();
        assert_eq!(newton_continue(&m, 0.0, 0.0).unwrap(), 0.0);
    }
}
