//! The pinned reproduction suite: eleven numbered checks, each with the
//! sample sizes and tolerances it is specified with.
//!
//! A criterion passes only if its literal statement holds. Where the literal
//! statement is known to disagree with the mathematics (printed closed forms,
//! tail prefactors, finite-size effects) the corrected check is reported in
//! the detail lines next to it, without changing the verdict.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist_solver::{eq_residual, iterate_law, tail_rate};
use crate::error::Result;
use crate::harness::{
    cluster_experiment, derive_seed, estimate_flux_lln, estimate_giant_constant, fringe_census, mean_flux_report,
    root_parked_report, simulate_unconditioned, tail_report, EstimateReport, UnconditionedSummary,
};
use crate::model::{ArrivalFamily, Model, OffspringDist, Pmf};
use crate::parking::{clusters, park, park_sequential};
use crate::series::{f_series, newton_continue, puiseux_branch, puiseux_c, w_series, BranchSign, QuadraticPart};
use crate::treegen::{parse_instance, sample_arrivals, ConditionedSampler};

pub const REPRO_SEED: u64 = 20_240_917;

pub const REFERENCE_INSTANCE: &str = include_str!("../fixtures/eleven_vertex.txt");

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "reference instance parks exactly"),
    (2, "critical arrival rate sqrt(2) - 1"),
    (3, "Abelian property"),
    (4, "root-parked probability"),
    (5, "mean flux"),
    (6, "cross-solver consistency"),
    (7, "Newton-Puiseux expansion"),
    (8, "subcritical flux tails"),
    (9, "supercritical flux LLN"),
    (10, "offcritical cluster geometry"),
    (11, "fringe frequencies"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn summary_line(&self) -> String {
        format!(
            "{} criterion {:>2}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds
        )
    }
}

/// Collects checks of one criterion.
struct Checks {
    passed: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    /// A check that decides the verdict.
    fn check(&mut self, ok: bool, msg: String) {
        self.passed &= ok;
        self.details.push(format!("[{}] {msg}", if ok { "ok" } else { "FAILED" }));
    }

    /// A diagnostic that does not affect the verdict.
    fn note(&mut self, msg: String) {
        self.details.push(format!("[info] {msg}"));
    }
}

fn geo(alpha: f64) -> Model {
    Model::geometric_poisson(alpha, 60, 30).expect("valid model")
}

fn z_line(r: &EstimateReport) -> String {
    format!(
        "{} = {:.7} +- {:.7} (reps {}, censored {}), reference {}, z = {}",
        r.name,
        r.estimate,
        r.std_error,
        r.reps,
        r.censored,
        r.reference.map_or("none".into(), |v| format!("{v:.7}")),
        r.z_score.map_or("none".into(), |z| format!("{z:.2}"))
    )
}

/// Runs the selected criteria in order; `on_done` sees each outcome as soon
/// as it is available.
pub struct Repro {
    seed: u64,
    subcritical: Option<UnconditionedSummary>,
    supercritical: Option<UnconditionedSummary>,
}

const ROOT_REPS: u64 = 1_000_000;
const ROOT_CAP: usize = 10_000_000;

impl Repro {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            subcritical: None,
            supercritical: None,
        }
    }

    pub fn run(&mut self, ids: &[u8], mut on_done: impl FnMut(&CriterionOutcome)) -> Result<Vec<CriterionOutcome>> {
        let mut out = Vec::new();
        for &id in ids {
            let start = Instant::now();
            let checks = match id {
                1 => self.c1()?,
                2 => self.c2(),
                3 => self.c3()?,
                4 => self.c4()?,
                5 => self.c5()?,
                6 => self.c6()?,
                7 => self.c7()?,
                8 => self.c8()?,
                9 => self.c9()?,
                10 => self.c10()?,
                11 => self.c11()?,
                _ => return Err(crate::error::Error::Config(format!("no criterion {id}"))),
            };
            let outcome = CriterionOutcome {
                id,
                title: CRITERIA[id as usize - 1].1.to_string(),
                passed: checks.passed,
                details: checks.details,
                seconds: start.elapsed().as_secs_f64(),
            };
            on_done(&outcome);
            out.push(outcome);
        }
        Ok(out)
    }

    fn seed(&self, id: u64) -> u64 {
        derive_seed(self.seed, id)
    }

    fn subcritical_summary(&mut self) -> &UnconditionedSummary {
        let seed = self.seed(4);
        self.subcritical
            .get_or_insert_with(|| simulate_unconditioned(&geo(0.325), ROOT_REPS, ROOT_CAP, seed, false).0)
    }

    fn supercritical_summary(&mut self) -> &UnconditionedSummary {
        let seed = self.seed(40);
        self.supercritical
            .get_or_insert_with(|| simulate_unconditioned(&geo(0.5), ROOT_REPS, ROOT_CAP, seed, false).0)
    }

    fn c1(&self) -> Result<Checks> {
        let mut c = Checks::new();
        let (tree, cars) = parse_instance(REFERENCE_INSTANCE)?;
        let start = Instant::now();
        let r = park(&tree, &cars)?;
        let elapsed = start.elapsed();
        let parked: Vec<usize> = (0..tree.len()).filter(|&v| r.parked[v]).collect();
        let mut fluxes: Vec<u64> = r.edge_flux.iter().copied().filter(|&f| f > 0).collect();
        fluxes.sort_unstable_by(|a, b| b.cmp(a));
        let stats = clusters(&tree, &r.parked)?;
        c.check(r.root_flux == 2, format!("root flux {} (expected 2)", r.root_flux));
        c.check(
            parked == [0, 1, 4, 6, 8, 9, 10],
            format!("parked vertices {parked:?} (expected [0, 1, 4, 6, 8, 9, 10])"),
        );
        c.check(fluxes == [2, 1, 1, 1, 1], format!("non-zero edge fluxes {fluxes:?} (expected [2, 1, 1, 1, 1])"));
        c.check(stats.sizes == [6, 1], format!("cluster sizes {:?} (expected [6, 1])", stats.sizes));
        c.check(
            elapsed.as_secs_f64() < 1e-3,
            format!("parking took {:.1} us (limit 1 ms)", elapsed.as_secs_f64() * 1e6),
        );
        Ok(c)
    }

    fn c2(&self) -> Checks {
        let mut c = Checks::new();
        let alpha_c = 2f64.sqrt() - 1.0;
        let theta = geo(alpha_c).theta();
        c.check(theta.abs() < 1e-10, format!("theta(sqrt 2 - 1) = {theta:e} (limit 1e-10)"));
        let below = geo(alpha_c - 1e-3).theta();
        let above = geo(alpha_c + 1e-3).theta();
        c.check(
            below > 0.0 && above < 0.0,
            format!("theta(alpha_c - 1e-3) = {below:e}, theta(alpha_c + 1e-3) = {above:e}"),
        );
        // Bisection on the truncated model, as an independent locator.
        let (mut lo, mut hi) = (0.2, 0.6);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if geo(mid).theta() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        c.check(
            (lo - alpha_c).abs() < 1e-9,
            format!("sign change located at {lo:.12} (sqrt 2 - 1 = {alpha_c:.12})"),
        );
        c
    }

    fn c3(&self) -> Result<Checks> {
        let mut c = Checks::new();
        let model = geo(0.5);
        let samplers: Vec<ConditionedSampler> = (1..=50)
            .map(|n| ConditionedSampler::new(model.offspring(), n))
            .collect::<Result<_>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed(3));
        let (mut mismatches, mut cars_total) = (0usize, 0u64);
        for _ in 0..1000 {
            let n = rng.random_range(1..=50usize);
            let tree = samplers[n - 1].sample(&mut rng);
            let rate = rng.random_range(0.2..1.5);
            let instance = Model::new(model.offspring().clone(), ArrivalFamily::uniform(Pmf::poisson(rate, 30)?))?;
            let cars = sample_arrivals(&tree, &instance, &mut rng);
            let reference = park(&tree, &cars)?;
            let mut order: Vec<usize> = (0..cars.total() as usize).collect();
            cars_total += cars.total();
            for _ in 0..20 {
                order.shuffle(&mut rng);
                if park_sequential(&tree, &cars, &order)? != reference {
                    mismatches += 1;
                }
            }
        }
        c.check(
            mismatches == 0,
            format!("20000 car orders on 1000 trees ({cars_total} cars): {mismatches} mismatches"),
        );
        Ok(c)
    }

    fn c4(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let sub = root_parked_report(&geo(0.325), self.subcritical_summary());
        c.check(sub.within(4.0), format!("alpha 0.325: {}", z_line(&sub)));
        let sup = root_parked_report(&geo(0.5), self.supercritical_summary());
        let gap = (0.5 - sup.estimate) / sup.std_error;
        c.check(
            gap > 5.0,
            format!("alpha 0.5: {}, below 0.5 by {gap:.1} sigma (need > 5)", z_line(&sup)),
        );
        Ok(c)
    }

    fn c5(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let m = geo(0.325);
        c.note(format!("closed form E[phi] = {:.9}", m.theoretical_flux_mean()));
        let full = mean_flux_report(&m, 1.0, self.subcritical_summary())?;
        c.check(full.within(4.0), format!("alpha 0.325, t = 1: {}", z_line(&full)));
        c.check(
            (full.reference.unwrap_or(f64::NAN) - 0.0903286).abs() < 1e-6,
            "reference agrees with 0.0903286".into(),
        );
        let half = geo(0.5);
        let diluted = half.dilute(0.5)?;
        let (summary, _) = simulate_unconditioned(&diluted, ROOT_REPS, ROOT_CAP, self.seed(5), false);
        let r = mean_flux_report(&half, 0.5, &summary)?;
        c.check(r.within(4.0), format!("alpha 0.5, t = 0.5: {}", z_line(&r)));
        c.check(
            (r.reference.unwrap_or(f64::NAN) - 0.0954915).abs() < 1e-6,
            "reference agrees with 0.0954915".into(),
        );
        Ok(c)
    }

    fn c6(&self) -> Result<Checks> {
        let mut c = Checks::new();
        let m = geo(0.325);
        let law = iterate_law(&m, 400, 100_000, 1e-14)?;
        let p0 = law.p0();
        c.check((p0 - 0.675).abs() < 1e-8, format!("p_0 = {p0:.12} (0.675 +- 1e-8)"));
        let (c_minus, _) = puiseux_c(&m)?;
        let mean = law.mean();
        c.check(
            (mean - c_minus).abs() < 1e-6 && (mean - 0.4153286).abs() < 1e-6,
            format!("E[X] = {mean:.10}, c_- = {c_minus:.10} (0.4153286 +- 1e-6)"),
        );
        let w = w_series(&m, 60)?;
        let worst = (0..=60)
            .map(|k| (w.coeff(k) - law.pmf()[k]).abs())
            .fold(0.0, f64::max);
        c.check(worst < 1e-10, format!("max |w_k - p_k| over k <= 60: {worst:e}"));
        for z in [0.2, 0.5, 0.9] {
            let r = eq_residual(&m, &law, z);
            c.check(r < 1e-8, format!("generating-function residual at z = {z}: {r:e}"));
        }
        Ok(c)
    }

    fn c7(&self) -> Result<Checks> {
        let mut c = Checks::new();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed(7));
        let mut done = 0;
        let (mut printed_a20_ok, mut corrected_a20_ok) = (true, true);
        while done < 5 {
            let k_max = rng.random_range(2..=6usize);
            let weights: Vec<f64> = (0..=k_max).map(|_| rng.random_range(0.05..1.0)).collect();
            let Ok(offspring) = OffspringDist::tilted_to_critical(weights) else {
                continue;
            };
            let cars: Vec<f64> = (0..3).map(|i| rng.random_range(0.0..1.0) * [4.0, 1.0, 0.3][i]).collect();
            let model = Model::new(offspring, ArrivalFamily::uniform(Pmf::normalized(cars)?))?;
            if model.theta() < 0.05 {
                continue;
            }
            done += 1;
            let mo = model.moments();
            let f = f_series(&model, 10)?;
            let printed = QuadraticPart::size_biased_forms(&model);
            let corrected = QuadraticPart::of(&model);
            let (a02, a11, a20) = (f.coeff(0, 2), f.coeff(1, 1), f.coeff(2, 0));
            let mut ok = (a02 - mo.sigma2 / 2.0).abs() < 1e-10;
            ok &= (a11 - printed.a11).abs() < 1e-10;
            let p20 = (a20 - printed.a20).abs() < 1e-10;
            let c20 = (a20 - corrected.a20).abs() < 1e-10;
            printed_a20_ok &= p20;
            corrected_a20_ok &= c20;
            for sign in [BranchSign::Minus, BranchSign::Plus] {
                let branch = puiseux_branch(&model, sign, 8)?;
                let residual = branch.residual_series(&f);
                let worst = residual.coeffs().iter().map(|x| x.abs()).fold(0.0, f64::max);
                ok &= worst < 1e-9;
                let mut newton_gap = 0.0f64;
                for x in [-0.05, 0.05] {
                    let y = newton_continue(&model, x, branch.c[0] * x)?;
                    newton_gap = newton_gap.max((y - branch.eval(x)).abs());
                }
                ok &= newton_gap < 1e-8;
                c.note(format!(
                    "model {done} ({sign:?}): residual through x^9 {worst:.1e}, Newton gap at +-0.05 {newton_gap:.1e}"
                ));
            }
            c.check(
                ok,
                format!(
                    "model {done}: theta {:.4}, a02 {a02:.6} (Sigma^2/2 {:.6}), a11 {a11:.6} (E_bar[m](1 - Sigma^2) - 1 = {:.6})",
                    mo.theta,
                    mo.sigma2 / 2.0,
                    printed.a11
                ),
            );
            c.note(format!(
                "model {done}: a20 {a20:.10}, printed closed form {:.10}, corrected form {:.10}",
                printed.a20, corrected.a20
            ));
        }
        c.check(
            printed_a20_ok,
            "a20 equals (E[m^2 + sigma^2 - m] + E_bar[m]^2 (Sigma^2 - 2) - 2 E_bar[m]) / 2 on all models".into(),
        );
        c.note(format!(
            "corrected a20 = Q/2 + E[m](1 - E_bar[m]) + Sigma^2 E[m]^2 / 2 matches on all models: {corrected_a20_ok}"
        ));
        Ok(c)
    }

    fn c8(&self) -> Result<Checks> {
        let mut c = Checks::new();
        let m = geo(0.325);
        let thresholds: Vec<u64> = (0..=64).collect();
        let (summary, _) = simulate_unconditioned(&m, 10_000_000, 100_000, self.seed(8), false);
        let report = tail_report(&m, &summary, &thresholds);
        let law = iterate_law(&m, 400, 100_000, 1e-14)?;
        let rho = tail_rate(&law, 50)?;
        let log_rho = rho.ln();
        c.note(format!(
            "10^7 trees, {} censored at 10^5 vertices; fit over k = {:?}",
            report.censored, report.fit_thresholds
        ));
        c.check(
            report.slope < -0.05 && report.r_squared > 0.99,
            format!("log-survival slope {:.4}, R^2 {:.5}", report.slope, report.r_squared),
        );
        let rel = (report.slope - log_rho).abs() / log_rho.abs();
        c.check(
            rel <= 0.25,
            format!("slope {:.4} vs log(tail_rate) {log_rho:.4}: relative gap {:.1}% (limit 25%)", report.slope, 100.0 * rel),
        );
        c.check(rho < 1.0 - 1e-3, format!("tail_rate {rho:.6} < 1 - 1e-3"));
        let rel_c = (report.corrected_slope - log_rho).abs() / log_rho.abs();
        c.note(format!(
            "with the k^(-3/2) prefactor removed the slope is {:.4}, relative gap {:.1}%",
            report.corrected_slope,
            100.0 * rel_c
        ));
        Ok(c)
    }

    fn c9(&mut self) -> Result<Checks> {
        let mut c = Checks::new();
        let m = geo(0.5);
        let p_hat = root_parked_report(&m, self.supercritical_summary());
        let (r, _) = estimate_flux_lln(&m, 2000, 500, self.seed(9), Some(&p_hat))?;
        c.check(r.within(4.0), format!("phi(T_n)/n, n = 2000: {}", z_line(&r)));
        Ok(c)
    }

    fn c10(&self) -> Result<Checks> {
        let mut c = Checks::new();
        let n_list = [1_000, 10_000, 100_000];
        let reps = 200;

        let sup = geo(0.5);
        let (rows, records) = cluster_experiment(&sup, &n_list, reps, self.seed(10))?;
        for r in &rows {
            c.note(format!(
                "alpha 0.5, n {}: C_max/n {:.4} +- {:.4}, mean C_2 {:.1}, max C_2 {}, C_2 <= 30 ln n in {:.1}%",
                r.n,
                r.mean_cmax_over_n,
                r.se_cmax_over_n,
                r.mean_c2,
                r.max_c2,
                100.0 * r.frac_c2_below_30_ln_n
            ));
        }
        let means: Vec<f64> = rows.iter().map(|r| r.mean_cmax_over_n).collect();
        let spread = means.iter().cloned().fold(f64::MIN, f64::max) - means.iter().cloned().fold(f64::MAX, f64::min);
        c.check(spread < 0.02, format!("spread of mean C_max/n across n: {spread:.4} (limit 0.02)"));
        let giant = estimate_giant_constant(&sup, &[20, 40, 80], 10, 10_000, self.seed(100), 100_000)?;
        for (h, r) in &giant.by_height {
            c.note(format!("spine estimate K = {h}: {:.4} +- {:.4}", r.estimate, r.std_error));
        }
        c.note(format!(
            "consecutive K within 2 sigma: {}; {} grafts saturated",
            giant.stabilized, giant.saturated_grafts
        ));
        let last = rows.last().expect("three sizes");
        let g = giant.final_estimate().expect("three heights");
        let cross = EstimateReport::new("C_max/n at n = 10^5", last.mean_cmax_over_n, last.se_cmax_over_n, reps)
            .with_reference(g.estimate, Some(g.std_error));
        c.check(cross.within(4.0), format!("{} vs spine estimate at K = 80: z = {:.2}", cross.name, cross.z_score.unwrap_or(f64::NAN)));
        let c2_ok = records
            .iter()
            .filter(|r| r.c_2 as f64 <= 30.0 * (r.n as f64).ln())
            .count() as f64
            / records.len() as f64;
        c.check(c2_ok >= 0.99, format!("C_2 <= 30 ln n in {:.2}% of replicates (need 99%)", 100.0 * c2_ok));

        let sub = geo(0.325);
        let (rows, records) = cluster_experiment(&sub, &n_list, reps, self.seed(11))?;
        let cmax_ok = records
            .iter()
            .filter(|r| r.c_max as f64 <= 30.0 * (r.n as f64).ln())
            .count() as f64
            / records.len() as f64;
        c.check(cmax_ok >= 0.99, format!("alpha 0.325: C_max <= 30 ln n in {:.2}% of replicates", 100.0 * cmax_ok));
        let medians: Vec<f64> = rows.iter().map(|r| r.median_cmax_over_ln_n).collect();
        c.check(
            medians.windows(2).all(|w| w[1] <= w[0]),
            format!("alpha 0.325: median C_max/ln n by n = {medians:.3?} (must not increase)"),
        );
        Ok(c)
    }

    fn c11(&self) -> Result<Checks> {
        let mut c = Checks::new();
        let geometric = geo(0.325);
        for k in [0, 1] {
            let census = fringe_census(&geometric, 10_000, k, 6, 200, derive_seed(self.seed(11), k as u64))?;
            let worst = census
                .rows
                .iter()
                .max_by(|a, b| a.z_score().abs().total_cmp(&b.z_score().abs()))
                .expect("patterns exist");
            c.check(
                census.rows.iter().all(|r| r.z_score().abs() <= 4.0),
                format!(
                    "geometric, k = {k}: {} patterns, largest |z| {:.2} at {:?}; residual {:.4} (exact {:.4})",
                    census.rows.len(),
                    worst.z_score().abs(),
                    worst.pattern,
                    census.residual_empirical,
                    census.residual_exact
                ),
            );
            if k == 0 {
                let leaf = census.row(&[0]).expect("single vertex");
                c.note(format!("single vertex: {:.5} +- {:.5} vs nu_0 = {:.5}", leaf.empirical, leaf.std_error, leaf.exact));
            }
        }
        let binary = Model::new(OffspringDist::binary(), ArrivalFamily::uniform(Pmf::point_mass(0)))?;
        let census = fringe_census(&binary, 10_001, 1, 6, 200, self.seed(12))?;
        let cherry = census.row(&[2, 0, 0]).expect("cherry pattern");
        c.check(
            (cherry.exact - 0.25).abs() < 1e-15 && cherry.z_score().abs() <= 4.0,
            format!(
                "binary cherry, k = 1: {:.5} +- {:.5} vs 1/4, z = {:.2}",
                cherry.empirical,
                cherry.std_error,
                cherry.z_score()
            ),
        );
        Ok(c)
    }
}
