//! Parking models: an offspring law for the tree together with one car-arrival
//! law per vertex degree, their moments and the phase criterion.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance on the offspring mean.
pub const CRITICAL_MEAN_TOL: f64 = 1e-9;
/// Default tolerance on theta used by [`Model::classify`].
pub const REGIME_TOL: f64 = 1e-10;

/// A probability law on `{0, 1, ..., len-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
    /// Walker alias table over `0..=last_positive`: (acceptance, alias).
    table: Vec<(f64, u32)>,
    last_positive: usize,
}

impl Pmf {
    /// Validates entries (non-negative, summing to 1 within [`MASS_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::NotNormalized { sum: 0.0 });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(Error::NegativeProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self::from_valid(probs))
    }

    /// Rescales non-negative weights to total mass one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        for (index, &value) in weights.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(Error::NegativeProbability { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self::from_valid(weights.into_iter().map(|w| w / sum).collect()))
    }

    fn from_valid(probs: Vec<f64>) -> Self {
        let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        let table = alias_table(&probs[..=last_positive]);
        Self {
            probs,
            table,
            last_positive,
        }
    }

    pub fn point_mass(value: usize) -> Self {
        let mut probs = vec![0.0; value + 1];
        probs[value] = 1.0;
        Self::from_valid(probs)
    }

    /// Poisson law truncated to `{0..=truncation}` and renormalized.
    pub fn poisson(rate: f64, truncation: usize) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::Config(format!("Poisson rate must be >= 0, got {rate}")));
        }
        let mut weights = Vec::with_capacity(truncation + 1);
        let mut term = (-rate).exp();
        for i in 0..=truncation {
            weights.push(term);
            term *= rate / (i + 1) as f64;
        }
        Self::normalized(weights)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("Bernoulli parameter must be in [0,1], got {p}")));
        }
        Ok(Self::from_valid(vec![1.0 - p, p]))
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// Largest index carrying positive mass.
    pub fn max_support(&self) -> usize {
        self.last_positive
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mean).powi(2) * p)
            .sum()
    }

    /// `E[L(L-1)]`, which equals `sigma^2 + m^2 - m`.
    pub fn second_factorial_moment(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64) * (k as f64 - 1.0) * p)
            .sum()
    }

    pub fn is_point_mass_at(&self, value: usize) -> bool {
        (self.prob(value) - 1.0).abs() <= MASS_TOL
    }

    /// Mixture `(1 - t) delta_0 + t self`.
    pub fn thinned(&self, t: f64) -> Self {
        let mut probs: Vec<f64> = self.probs.iter().map(|p| t * p).collect();
        probs[0] += 1.0 - t;
        Self::from_valid(probs)
    }

    /// Size-biased law `k p_k / mean`.
    pub fn size_biased(&self) -> Result<Self> {
        Self::normalized(
            self.probs
                .iter()
                .enumerate()
                .map(|(k, p)| k as f64 * p)
                .collect(),
        )
    }

    /// Alias-method draw; consumes exactly one `f64` from `rng`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let x = rng.random::<f64>() * self.table.len() as f64;
        let i = (x as usize).min(self.table.len() - 1);
        let (accept, alias) = self.table[i];
        if x - (i as f64) < accept {
            i
        } else {
            alias as usize
        }
    }
}

fn alias_table(probs: &[f64]) -> Vec<(f64, u32)> {
    let n = probs.len();
    let total: f64 = probs.iter().sum();
    let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64 / total).collect();
    let mut table: Vec<(f64, u32)> = (0..n).map(|i| (1.0, i as u32)).collect();
    let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
    while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
        table[s] = (scaled[s], l as u32);
        scaled[l] -= 1.0 - scaled[s];
        if scaled[l] < 1.0 {
            large.pop();
            small.push(l);
        }
    }
    // Leftovers are 1 up to rounding.
    table
}

/// Critical offspring law of the Galton-Watson tree.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDist {
    law: Pmf,
    mean: f64,
    variance: f64,
}

impl OffspringDist {
    pub fn new(law: Pmf) -> Result<Self> {
        let mean = law.mean();
        if (mean - 1.0).abs() > CRITICAL_MEAN_TOL {
            return Err(Error::NonCriticalOffspring { mean });
        }
        if law.is_point_mass_at(1) {
            return Err(Error::DegenerateModel("offspring law is delta_1".into()));
        }
        let variance = law.variance();
        Ok(Self {
            law,
            mean,
            variance,
        })
    }

    /// `nu_k = 2^{-k-1}` truncated at `k_max` and renormalized.
    pub fn geometric(k_max: usize) -> Result<Self> {
        Self::geometric_ratio(0.5, k_max)
    }

    /// `nu_k proportional to ratio^k` on `{0..=k_max}`.
    pub fn geometric_ratio(ratio: f64, k_max: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Config(format!("geometric ratio must be in (0,1), got {ratio}")));
        }
        let weights = (0..=k_max).map(|k| ratio.powi(k as i32)).collect();
        Self::new(Pmf::normalized(weights)?)
    }

    /// `nu_0 = nu_2 = 1/2`.
    pub fn binary() -> Self {
        Self::new(Pmf::from_valid(vec![0.5, 0.0, 0.5])).expect("binary law is critical")
    }

    /// Exponentially tilts `weights` (`w_k theta^k`) so that the mean becomes exactly one.
    pub fn tilted_to_critical(weights: Vec<f64>) -> Result<Self> {
        let base = Pmf::normalized(weights)?;
        if base.prob(0) <= 0.0 || base.max_support() < 2 {
            return Err(Error::Config(
                "recentering needs nu_0 > 0 and some nu_k > 0 with k >= 2".into(),
            ));
        }
        let tilted_mean = |log_theta: f64| -> f64 {
            // Normalize in log space to avoid overflow for large supports.
            let logs: Vec<f64> = base
                .probs()
                .iter()
                .enumerate()
                .map(|(k, &p)| if p > 0.0 { p.ln() + k as f64 * log_theta } else { f64::NEG_INFINITY })
                .collect();
            let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (mut num, mut den) = (0.0, 0.0);
            for (k, l) in logs.iter().enumerate() {
                let w = (l - max).exp();
                num += k as f64 * w;
                den += w;
            }
            num / den
        };
        let (mut lo, mut hi) = (-50.0f64, 50.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if tilted_mean(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let log_theta = 0.5 * (lo + hi);
        let weights = base
            .probs()
            .iter()
            .enumerate()
            .map(|(k, &p)| p * (k as f64 * log_theta).exp())
            .collect();
        Self::new(Pmf::normalized(weights)?)
    }

    pub fn law(&self) -> &Pmf {
        &self.law
    }

    pub fn probs(&self) -> &[f64] {
        self.law.probs()
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.law.prob(k)
    }

    pub fn k_max(&self) -> usize {
        self.law.max_support()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sigma^2.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Degrees with positive probability.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.law
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, _)| k)
    }
}

/// Car-arrival laws indexed by vertex degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalFamily {
    laws: Vec<Pmf>,
    default: Pmf,
}

impl ArrivalFamily {
    /// `laws[k]` is used for degree `k`; degrees past the end use `default`.
    pub fn new(laws: Vec<Pmf>, default: Pmf) -> Self {
        Self { laws, default }
    }

    pub fn uniform(law: Pmf) -> Self {
        Self::new(Vec::new(), law)
    }

    /// Cars arrive on leaves only.
    pub fn leaf_only(law: Pmf) -> Self {
        Self::new(vec![law], Pmf::point_mass(0))
    }

    #[inline]
    pub fn law(&self, degree: usize) -> &Pmf {
        self.laws.get(degree).unwrap_or(&self.default)
    }

    pub fn mean(&self, degree: usize) -> f64 {
        self.law(degree).mean()
    }

    pub fn variance(&self, degree: usize) -> f64 {
        self.law(degree).variance()
    }

    fn thinned(&self, t: f64) -> Self {
        Self {
            laws: self.laws.iter().map(|l| l.thinned(t)).collect(),
            default: self.default.thinned(t),
        }
    }
}

/// Moments entering the phase criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelMoments {
    /// `sum_k k nu_k m_k`, the mean arrival under the size-biased degree law.
    pub e_sb_m: f64,
    /// `sum_k nu_k m_k`.
    pub e_m: f64,
    /// `sum_k nu_k (sigma_k^2 + m_k^2 - m_k)`.
    pub e_q: f64,
    /// Offspring variance.
    pub sigma2: f64,
    pub theta: f64,
}

impl ModelMoments {
    pub fn compute(offspring: &OffspringDist, arrivals: &ArrivalFamily) -> Self {
        let (mut e_sb_m, mut e_m, mut e_q) = (0.0, 0.0, 0.0);
        for (k, &nu) in offspring.probs().iter().enumerate() {
            if nu == 0.0 {
                continue;
            }
            let law = arrivals.law(k);
            let m = law.mean();
            e_sb_m += k as f64 * nu * m;
            e_m += nu * m;
            e_q += nu * law.second_factorial_moment();
        }
        let sigma2 = offspring.variance();
        let theta = (1.0 - e_sb_m).powi(2) - sigma2 * e_q;
        Self {
            e_sb_m,
            e_m,
            e_q,
            sigma2,
            theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub regime: Regime,
    /// Whether `E_nu_bar[m] <= 1`, the hypothesis under which the sign of theta decides the phase.
    pub hypothesis_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    offspring: OffspringDist,
    arrivals: ArrivalFamily,
    moments: ModelMoments,
}

impl Model {
    pub fn new(offspring: OffspringDist, arrivals: ArrivalFamily) -> Result<Self> {
        let all_delta_one = offspring
            .support()
            .all(|k| arrivals.law(k).is_point_mass_at(1));
        if all_delta_one {
            return Err(Error::DegenerateModel(
                "every arrival law on the offspring support is delta_1".into(),
            ));
        }
        Ok(Self::from_parts(offspring, arrivals))
    }

    fn from_parts(offspring: OffspringDist, arrivals: ArrivalFamily) -> Self {
        let moments = ModelMoments::compute(&offspring, &arrivals);
        Self {
            offspring,
            arrivals,
            moments,
        }
    }

    /// Geometric offspring (truncated at `k_max`) with Poisson(`rate`) arrivals on every vertex.
    pub fn geometric_poisson(rate: f64, k_max: usize, truncation: usize) -> Result<Self> {
        Self::new(
            OffspringDist::geometric(k_max)?,
            ArrivalFamily::uniform(Pmf::poisson(rate, truncation)?),
        )
    }

    pub fn offspring(&self) -> &OffspringDist {
        &self.offspring
    }

    pub fn arrivals(&self) -> &ArrivalFamily {
        &self.arrivals
    }

    pub fn moments(&self) -> &ModelMoments {
        &self.moments
    }

    pub fn theta(&self) -> f64 {
        self.moments.theta
    }

    pub fn classify(&self) -> Classification {
        self.classify_with_tol(REGIME_TOL)
    }

    pub fn classify_with_tol(&self, tol: f64) -> Classification {
        let hypothesis_holds = self.moments.e_sb_m <= 1.0;
        let theta = self.moments.theta;
        let regime = if !hypothesis_holds || theta < -tol {
            Regime::Supercritical
        } else if theta > tol {
            Regime::Subcritical
        } else {
            Regime::Critical
        };
        Classification {
            regime,
            hypothesis_holds,
        }
    }

    /// Smallest `t` in `[0, 1]` with `(1 - b t)^2 = Sigma^2 Q t`, or `+inf`.
    pub fn t_max(&self) -> f64 {
        let b = self.moments.e_sb_m;
        let s = self.moments.sigma2 * self.moments.e_q;
        // b^2 t^2 - (2b + s) t + 1 = 0; smaller root in cancellation-free form.
        let lin = 2.0 * b + s;
        let disc = lin * lin - 4.0 * b * b;
        if disc < 0.0 || lin <= 0.0 {
            return f64::INFINITY;
        }
        let root = 2.0 / (lin + disc.sqrt());
        if root <= 1.0 {
            root
        } else {
            f64::INFINITY
        }
    }

    /// Mean root flux with arrivals thinned to `(1-t) delta_0 + t mu`.
    pub fn mean_flux_curve(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidT(t));
        }
        if t > self.t_max() {
            return Ok(f64::INFINITY);
        }
        let ModelMoments {
            e_sb_m,
            e_q,
            sigma2,
            ..
        } = self.moments;
        let a = 1.0 - e_sb_m * t;
        let disc = (a * a - sigma2 * e_q * t).max(0.0);
        Ok((a - disc.sqrt()) / sigma2)
    }

    /// Replaces each arrival law by `(1-t) delta_0 + t mu_k`.
    pub fn dilute(&self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidT(t));
        }
        if t == 1.0 {
            return Ok(self.clone());
        }
        Ok(Self::from_parts(
            self.offspring.clone(),
            self.arrivals.thinned(t),
        ))
    }

    /// `E[phi(T)] = (1 - E_nu_bar[m] - sqrt(theta)) / Sigma^2`, infinite when theta < 0.
    pub fn theoretical_flux_mean(&self) -> f64 {
        if self.classify().regime == Regime::Supercritical {
            return f64::INFINITY;
        }
        let m = &self.moments;
        (1.0 - m.e_sb_m - m.theta.max(0.0).sqrt()) / m.sigma2
    }

    /// Probability that the root of the unconditioned tree receives no car,
    /// `1 - E_nu[m]`, valid when theta >= 0.
    pub fn root_free_probability(&self) -> Option<f64> {
        match self.classify().regime {
            Regime::Supercritical => None,
            _ => Some(1.0 - self.moments.e_m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo_poisson(rate: f64) -> Model {
        Model::geometric_poisson(rate, 60, 30).unwrap()
    }

    fn binary_with(arrivals: ArrivalFamily) -> Model {
        Model::new(OffspringDist::binary(), arrivals).unwrap()
    }

    #[test]
    fn geometric_poisson_moments() {
        let m = Model::geometric_poisson(0.325, 40, 30).unwrap();
        assert!((m.moments().sigma2 - 2.0).abs() < 1e-8);
        assert!((m.moments().e_sb_m - 0.325).abs() < 1e-9);
    }

    #[test]
    fn no_cars_gives_theta_one() {
        let m = binary_with(ArrivalFamily::uniform(Pmf::point_mass(0)));
        assert_eq!(m.theta(), 1.0);
        assert_eq!(m.t_max(), f64::INFINITY);
        assert_eq!(m.theoretical_flux_mean(), 0.0);
    }

    #[test]
    fn leaf_two_cars_is_critical() {
        let arrivals = ArrivalFamily::new(
            vec![Pmf::point_mass(2), Pmf::point_mass(0), Pmf::point_mass(0)],
            Pmf::point_mass(0),
        );
        let m = binary_with(arrivals);
        // Brute-force sums over the support {0, 2}.
        let nu = [(0usize, 0.5), (2usize, 0.5)];
        let laws = [(2.0, 0.0), (0.0, 0.0)]; // (mean, variance)
        let e_sb: f64 = nu.iter().zip(&laws).map(|((k, p), (m, _))| *k as f64 * p * m).sum();
        let e_m: f64 = nu.iter().zip(&laws).map(|((_, p), (m, _))| p * m).sum();
        let e_q: f64 = nu
            .iter()
            .zip(&laws)
            .map(|((_, p), (m, v))| p * (v + m * m - m))
            .sum();
        let mm = m.moments();
        assert_eq!((mm.e_sb_m, mm.e_m, mm.e_q, mm.sigma2), (e_sb, e_m, e_q, 1.0));
        assert_eq!((e_sb, e_m, e_q), (0.0, 1.0, 1.0));
        assert_eq!(m.theta(), 0.0);
        assert_eq!(m.classify().regime, Regime::Critical);
    }

    #[test]
    fn theta_along_poisson_family() {
        for alpha in [0.1, 0.2, 0.325, 0.4, 0.5] {
            let m = geo_poisson(alpha);
            let expected = (1.0f64 - alpha).powi(2) - 2.0 * alpha * alpha;
            assert!((m.theta() - expected).abs() < 1e-12, "alpha {alpha}");
        }
        assert!((geo_poisson(0.325).theta() - 0.244375).abs() < 1e-12);
        assert!(geo_poisson(2f64.sqrt() - 1.0).theta().abs() < 1e-12);
    }

    #[test]
    fn regimes() {
        assert_eq!(geo_poisson(0.325).classify().regime, Regime::Subcritical);
        assert_eq!(geo_poisson(2f64.sqrt() - 1.0).classify().regime, Regime::Critical);
        let sup = geo_poisson(0.5);
        assert_eq!(sup.classify().regime, Regime::Supercritical);
        assert!((sup.theta() + 0.25).abs() < 1e-12);
    }

    #[test]
    fn hypothesis_flag_when_size_biased_mean_exceeds_one() {
        let m = binary_with(ArrivalFamily::new(
            vec![Pmf::point_mass(0), Pmf::point_mass(0), Pmf::point_mass(1)],
            Pmf::point_mass(0),
        ));
        // E_nu_bar[m] = 2 * 1/2 * 1 = 1, borderline; push above with two cars.
        assert!(m.classify().hypothesis_holds);
        let m = binary_with(ArrivalFamily::new(
            vec![Pmf::point_mass(0), Pmf::point_mass(0), Pmf::point_mass(2)],
            Pmf::point_mass(0),
        ));
        let c = m.classify();
        assert!(!c.hypothesis_holds);
        assert_eq!(c.regime, Regime::Supercritical);
    }

    #[test]
    fn t_max_values() {
        assert!((geo_poisson(0.5).t_max() - (3.0 - 5f64.sqrt())).abs() < 1e-12);
        assert_eq!(geo_poisson(0.325).t_max(), f64::INFINITY);
        assert!((geo_poisson(2f64.sqrt() - 1.0).t_max() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mean_flux_curve_values() {
        let m = geo_poisson(0.5);
        assert_eq!(m.mean_flux_curve(0.0).unwrap(), 0.0);
        let expected = (0.75 - 0.3125f64.sqrt()) / 2.0;
        assert!((m.mean_flux_curve(0.5).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.0954915).abs() < 1e-7);
        assert_eq!(m.mean_flux_curve(0.9).unwrap(), f64::INFINITY);
        assert_eq!(m.mean_flux_curve(1.5), Err(Error::InvalidT(1.5)));
        assert!(matches!(m.mean_flux_curve(-0.1), Err(Error::InvalidT(_))));
    }

    #[test]
    fn flux_mean_values() {
        let m = geo_poisson(0.325);
        let expected = (0.675 - 0.244375f64.sqrt()) / 2.0;
        assert!((m.theoretical_flux_mean() - expected).abs() < 1e-12);
        assert!((expected - 0.0903286).abs() < 1e-7);
        assert_eq!(geo_poisson(0.5).theoretical_flux_mean(), f64::INFINITY);
    }

    #[test]
    fn dilution() {
        let m = geo_poisson(0.5);
        assert_eq!(m.dilute(1.0).unwrap(), m);
        let zero = m.dilute(0.0).unwrap();
        assert_eq!(zero.theta(), 1.0);
        assert!(zero.arrivals().law(3).is_point_mass_at(0));

        let d = m.dilute(0.65).unwrap();
        for k in 0..10 {
            assert!((d.arrivals().mean(k) - 0.325).abs() < 1e-12);
        }
        // Brute-force second factorial moment of the mixture: t * alpha^2.
        let law = d.arrivals().law(0);
        let q: f64 = law
            .probs()
            .iter()
            .enumerate()
            .map(|(i, p)| (i * i) as f64 * p - i as f64 * p)
            .sum();
        assert!((q - 0.65 * 0.25).abs() < 1e-12);
        let expected_theta = (1.0f64 - 0.325).powi(2) - 2.0 * 0.65 * 0.25;
        assert!((d.theta() - expected_theta).abs() < 1e-12);
        assert_eq!(d.classify().regime, Regime::Subcritical);
        assert!(matches!(m.dilute(1.01), Err(Error::InvalidT(_))));
    }

    #[test]
    fn builder_errors() {
        let delta_one = Pmf::point_mass(1);
        assert!(matches!(
            OffspringDist::new(delta_one),
            Err(Error::DegenerateModel(_))
        ));
        assert!(matches!(
            OffspringDist::new(Pmf::new(vec![0.5, 0.25, 0.25]).unwrap()),
            Err(Error::NonCriticalOffspring { .. })
        ));
        assert!(matches!(
            Pmf::new(vec![0.5, -0.1, 0.6]),
            Err(Error::NegativeProbability { index: 1, .. })
        ));
        assert!(matches!(Pmf::new(vec![0.5, 0.4]), Err(Error::NotNormalized { .. })));
        let all_one = Model::new(OffspringDist::binary(), ArrivalFamily::uniform(Pmf::point_mass(1)));
        assert!(matches!(all_one, Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn tilting_recenters_geometric() {
        let weights: Vec<f64> = (0..=60).map(|k| 0.3f64.powi(k)).collect();
        let nu = OffspringDist::tilted_to_critical(weights).unwrap();
        assert!((nu.mean() - 1.0).abs() < 1e-12);
        let reference = OffspringDist::geometric(60).unwrap();
        for k in 0..20 {
            assert!((nu.prob(k) - reference.prob(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampler_matches_probabilities() {
        use rand::SeedableRng;
        let law = Pmf::poisson(1.3, 30).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let reps = 200_000;
        let mut counts = vec![0usize; 31];
        for _ in 0..reps {
            counts[law.sample(&mut rng)] += 1;
        }
        for k in 0..6 {
            let p = law.prob(k);
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            let freq = counts[k] as f64 / reps as f64;
            assert!((freq - p).abs() < 4.0 * se, "k={k} freq={freq} p={p}");
        }
    }

    #[test]
    fn alias_table_reproduces_law() {
        for probs in [
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.0, 0.5],
            vec![0.1, 0.2, 0.3, 0.4],
            Pmf::poisson(0.325, 30).unwrap().probs().to_vec(),
        ] {
            let table = alias_table(&probs);
            let n = table.len() as f64;
            let mut mass = vec![0.0; probs.len()];
            for (i, &(accept, alias)) in table.iter().enumerate() {
                mass[i] += accept / n;
                mass[alias as usize] += (1.0 - accept) / n;
            }
            for (m, p) in mass.iter().zip(&probs) {
                assert!((m - p).abs() < 1e-14, "{probs:?}");
            }
        }
        use rand::SeedableRng;
        let zero = Pmf::new(vec![0.3, 0.0, 0.7]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        assert!((0..10_000).all(|_| zero.sample(&mut rng) != 1));
    }

    #[test]
    fn flux_identity_at_one() {
        for alpha in [0.05, 0.2, 0.325, 0.41] {
            let m = geo_poisson(alpha);
            let phi1 = m.mean_flux_curve(1.0).unwrap();
            assert!((phi1 - m.theoretical_flux_mean()).abs() < 1e-12);
        }
    }
}
