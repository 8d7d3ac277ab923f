//! Law of `X`, the number of cars visiting the root of the unconditioned
//! tree, as the fixed point of
//! `X = sum_{i <= Y} (X_i - 1)_+ + L_Y`, `Y ~ nu`, iterated from `X = 0`.
//!
//! The `m`-th iterate is the law of `X` on the tree cut at height `m`, so the
//! iterates increase stochastically to the true law. Mass beyond the
//! truncation order is never renormalized away; it is kept as `mass_defect`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Model, MASS_TOL};

/// Entries below this are treated as numerically absent in tail fits.
const TINY: f64 = 1e-280;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistVector {
    pmf: Vec<f64>,
    mass_defect: f64,
}

impl DistVector {
    pub fn new(pmf: Vec<f64>, mass_defect: f64) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::LengthMismatch { expected: 1, got: 0 });
        }
        if let Some((index, &value)) = pmf.iter().enumerate().find(|(_, &p)| !(p >= 0.0)) {
            return Err(Error::NegativeProbability { index, value });
        }
        if !(mass_defect >= 0.0) {
            return Err(Error::NegativeProbability {
                index: pmf.len(),
                value: mass_defect,
            });
        }
        let sum: f64 = pmf.iter().sum::<f64>() + mass_defect;
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { pmf, mass_defect })
    }

    /// Point mass at 0, truncated at order `n`.
    pub fn zero(n: usize) -> Self {
        let mut pmf = vec![0.0; n + 1];
        pmf[0] = 1.0;
        Self { pmf, mass_defect: 0.0 }
    }

    fn from_raw(mut pmf: Vec<f64>) -> Self {
        for p in pmf.iter_mut() {
            *p = p.max(0.0);
        }
        let mass_defect = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
        Self { pmf, mass_defect }
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    /// Truncation order `N` (entries `p_0 .. p_N`).
    pub fn order(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn p0(&self) -> f64 {
        self.pmf[0]
    }

    /// Mean of the truncated part, `sum k p_k`.
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Generating function `W(z) = sum p_k z^k` of the truncated part.
    pub fn pgf(&self, z: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, &p| acc * z + p)
    }

    /// Total-variation distance, counting the defects as one extra atom.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        let len = self.pmf.len().max(other.pmf.len());
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        let body: f64 = (0..len)
            .map(|k| (get(&self.pmf, k) - get(&other.pmf, k)).abs())
            .sum();
        0.5 * (body + (self.mass_defect - other.mass_defect).abs())
    }
}

/// Law of `(X - 1)_+`.
pub fn flux_law(dist: &DistVector) -> DistVector {
    let p = &dist.pmf;
    let pmf = if p.len() == 1 {
        vec![p[0]]
    } else {
        let mut q = Vec::with_capacity(p.len() - 1);
        q.push(p[0] + p[1]);
        q.extend_from_slice(&p[2..]);
        q
    };
    DistVector {
        pmf,
        mass_defect: dist.mass_defect,
    }
}

/// One application of the distributional map, keeping the truncation order.
pub fn de_map(model: &Model, dist: &DistVector) -> DistVector {
    let n = dist.order();
    let flux = flux_law(dist);
    let q = flux.pmf();
    let nu = model.offspring().probs();
    // Horner in the offspring variable: H = nu_k mu_k + q * H.
    let mut acc = vec![0.0; n + 1];
    let mut scratch = vec![0.0; n + 1];
    for k in (0..nu.len()).rev() {
        if k + 1 < nu.len() {
            convolve_truncated(q, &acc, &mut scratch);
            std::mem::swap(&mut acc, &mut scratch);
        }
        if nu[k] > 0.0 {
            for (a, &m) in acc.iter_mut().zip(model.arrivals().law(k).probs()) {
                *a += nu[k] * m;
            }
        }
    }
    DistVector::from_raw(acc)
}

fn convolve_truncated(a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = out.len();
    let b_len = b.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1);
    let a_len = a.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1);
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, &ai) in a[..a_len].iter().enumerate() {
        if ai == 0.0 || i >= n {
            continue;
        }
        let end = b_len.min(n - i);
        for (o, &bj) in out[i..i + end].iter_mut().zip(&b[..end]) {
            *o += ai * bj;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawIteration {
    pub law: DistVector,
    pub iterations: usize,
    /// TV distance between the last two iterates.
    pub last_distance: f64,
    /// TV distances between successive iterates, in order.
    pub distances: Vec<f64>,
}

pub fn iterate_law(model: &Model, n: usize, max_iters: usize, tol: f64) -> Result<DistVector> {
    iterate_law_detailed(model, n, max_iters, tol).map(|it| it.law)
}

pub fn iterate_law_detailed(model: &Model, n: usize, max_iters: usize, tol: f64) -> Result<LawIteration> {
    if n == 0 {
        return Err(Error::InsufficientSupport { needed: 1, available: 0 });
    }
    let mut current = DistVector::zero(n);
    let mut distances = Vec::new();
    for it in 1..=max_iters {
        let next = de_map(model, &current);
        let d = next.tv_distance(&current);
        distances.push(d);
        current = next;
        if d < tol {
            return Ok(LawIteration {
                law: current,
                iterations: it,
                last_distance: d,
                distances,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        last_distance: distances.last().copied().unwrap_or(f64::NAN),
    })
}

/// Indices whose values are not affected by truncation: the top tenth of the
/// range (at least 5 indices) is discarded, as are entries below 1e-280.
pub fn reliable_len(dist: &DistVector) -> usize {
    let len = dist.pmf.len();
    let guard = (len / 10).max(5);
    let cut = len.saturating_sub(guard);
    dist.pmf[..cut].iter().position(|&p| !(p > TINY)).unwrap_or(cut)
}

/// Geometric tail rate `rho = lim p_{k+1}/p_k`, estimated as the geometric
/// mean of the last `window` reliable ratios.
pub fn tail_rate(dist: &DistVector, window: usize) -> Result<f64> {
    let reliable = reliable_len(dist);
    if window == 0 || reliable < window + 1 {
        return Err(Error::InsufficientSupport {
            needed: window.max(1) + 1,
            available: reliable,
        });
    }
    let p = &dist.pmf[reliable - window - 1..reliable];
    let log_sum: f64 = p.windows(2).map(|w| (w[1] / w[0]).ln()).sum();
    Ok((log_sum / window as f64).exp())
}

/// Right-hand side of the generating-function equation
/// `W(z) = sum_k nu_k A_k(z) ((W(z) - p0)/z + p0)^k`, using `W` and `p0`
/// from the law itself.
pub fn eq_rhs(model: &Model, dist: &DistVector, z: f64) -> f64 {
    let w = dist.pgf(z);
    let p0 = dist.p0();
    let s = (w - p0) / z + p0;
    let mut total = 0.0;
    let mut s_pow = 1.0;
    for (k, &nu) in model.offspring().probs().iter().enumerate() {
        if nu > 0.0 {
            total += nu * pgf_of(model.arrivals().law(k).probs(), z) * s_pow;
        }
        s_pow *= s;
    }
    total
}

pub fn eq_residual(model: &Model, dist: &DistVector, z: f64) -> f64 {
    (dist.pgf(z) - eq_rhs(model, dist, z)).abs()
}

pub(crate) fn pgf_of(probs: &[f64], z: f64) -> f64 {
    probs.iter().rev().fold(0.0, |acc, &p| acc * z + p)
}
