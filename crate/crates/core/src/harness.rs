//! Seeded Monte Carlo experiments.
//!
//! Replicate `r` of an experiment seeded with `s` draws its tree from the
//! ChaCha8 stream `2r` of seed `s` and its cars from stream `2r + 1`, so every
//! replicate can be regenerated on its own. Replicates are processed in fixed
//! chunks whose partial results are combined in chunk order; together with
//! integer counters this makes every report bit-identical for any number of
//! worker threads.
//!
//! Unconditioned trees are parked while they are generated (depth first, with
//! a stack of open vertices), so memory stays proportional to the height.

use std::collections::HashMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Model, Regime};
use crate::parking::{clusters, park};
use crate::treegen::{enumerate_plane_trees, sample_arrivals, ConditionedSampler, PlaneTree};

/// Replicates per work unit.
pub const CHUNK: u64 = 1024;

/// Flux assigned to a grafted subtree abandoned at its size cap.
pub const SATURATED: u64 = u64::MAX / 4;

/// Histograms keep exact counts up to this value and lump the rest.
pub const HIST_LEN: usize = 1024;

pub fn replicate_rngs(master_seed: u64, rep: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut tree = ChaCha8Rng::seed_from_u64(master_seed);
    tree.set_stream(2 * rep);
    let mut cars = ChaCha8Rng::seed_from_u64(master_seed);
    cars.set_stream(2 * rep + 1);
    (tree, cars)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of a sub-experiment (one tree size, one height, ...).
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(tag))
}

fn map_chunks<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let chunks = reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(reps)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeOutcome {
    /// Cars visiting the root; a lower bound when `censored`.
    pub visits: u64,
    pub size: usize,
    /// The tree reached the size cap; only the generated part was parked.
    pub censored: bool,
}

impl TreeOutcome {
    pub fn flux(&self) -> u64 {
        self.visits.saturating_sub(1)
    }
}

/// Generates an unconditioned tree depth first and parks it on the fly.
///
/// Draws are made in the same order as `sample_gw` followed by
/// `sample_arrivals`, so the outcome equals parking those trees.
pub fn park_streaming_gw<R1, R2>(model: &Model, tree_rng: &mut R1, car_rng: &mut R2, size_cap: usize) -> TreeOutcome
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let law = model.offspring().law();
    let arrivals = model.arrivals();
    // (children still to generate, cars collected so far)
    let mut stack: Vec<(u32, u64)> = Vec::with_capacity(64);
    let mut size = 0usize;
    loop {
        if size >= size_cap {
            while let Some((_, acc)) = stack.pop() {
                match stack.last_mut() {
                    Some(parent) => parent.1 = parent.1.saturating_add(acc.saturating_sub(1)),
                    None => {
                        return TreeOutcome {
                            visits: acc,
                            size,
                            censored: true,
                        }
                    }
                }
            }
            unreachable!("size cap is at least one");
        }
        let d = law.sample(tree_rng);
        let cars = arrivals.law(d).sample(car_rng) as u64;
        size += 1;
        stack.push((d as u32, cars));
        loop {
            let top = stack.last_mut().expect("stack holds the current path");
            if top.0 > 0 {
                top.0 -= 1;
                break;
            }
            let (_, acc) = stack.pop().expect("non-empty");
            match stack.last_mut() {
                Some(parent) => parent.1 = parent.1.saturating_add(acc.saturating_sub(1)),
                None => {
                    return TreeOutcome {
                        visits: acc,
                        size,
                        censored: false,
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpineOutcome {
    /// Parked status of `S_0 .. S_h`.
    pub spine_parked: Vec<bool>,
    /// Grafted subtrees abandoned at `graft_cap` and treated as sending
    /// infinitely many cars.
    pub saturated_grafts: u32,
    /// Vertices generated.
    pub size: usize,
}

const NONE: u32 = u32::MAX;

struct SpineFrame {
    remaining: u32,
    next_slot: u32,
    spine_slot: u32,
    level: u32,
    acc: u64,
}

/// Streaming counterpart of `sample_spine_tree` + `park`, returning the
/// parked status of the spine. Each grafted Galton-Watson subtree may use at
/// most `graft_cap` vertices.
pub fn park_streaming_spine<R1, R2>(
    model: &Model,
    h: usize,
    tree_rng: &mut R1,
    car_rng: &mut R2,
    graft_cap: usize,
) -> Result<SpineOutcome>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let law = model.offspring().law();
    let biased = law.size_biased()?;
    let arrivals = model.arrivals();
    // Without any cars an abandoned graft sends exactly nothing.
    let overflow = if model.moments().e_m > 0.0 { SATURATED } else { 0 };
    let mut spine_parked = vec![false; h + 1];
    let mut saturated_grafts = 0;
    let mut size = 0usize;
    let mut stack: Vec<SpineFrame> = Vec::with_capacity(h + 64);
    // (stack depth of the graft root, vertices generated in the graft)
    let mut graft: Option<(usize, usize)> = None;
    let mut next: Option<u32> = Some(0);
    loop {
        let (d, spine_slot, level) = match next {
            Some(lv) if (lv as usize) < h => {
                let y = biased.sample(tree_rng) as u32;
                let slot = tree_rng.random_range(0..y);
                (y, slot, lv)
            }
            Some(lv) => (law.sample(tree_rng) as u32, NONE, lv),
            None => (law.sample(tree_rng) as u32, NONE, NONE),
        };
        let cars = arrivals.law(d as usize).sample(car_rng) as u64;
        size += 1;
        if next.is_none() {
            match graft.as_mut() {
                None => graft = Some((stack.len(), 1)),
                Some(g) => g.1 += 1,
            }
        }
        stack.push(SpineFrame {
            remaining: d,
            next_slot: 0,
            spine_slot,
            level,
            acc: cars,
        });
        if let Some((base, count)) = graft {
            if count > graft_cap {
                stack.truncate(base);
                let host = stack.last_mut().expect("a graft hangs below a spine vertex");
                host.acc = host.acc.saturating_add(overflow);
                saturated_grafts += 1;
                graft = None;
            }
        }
        next = loop {
            let Some(top) = stack.last_mut() else {
                unreachable!("the root frame is popped last");
            };
            if top.remaining > 0 {
                top.remaining -= 1;
                let slot = top.next_slot;
                top.next_slot += 1;
                break if slot == top.spine_slot { Some(top.level + 1) } else { None };
            }
            let frame = stack.pop().expect("non-empty");
            if frame.level != NONE {
                spine_parked[frame.level as usize] = frame.acc >= 1;
            }
            if matches!(graft, Some((base, _)) if base == stack.len()) {
                graft = None;
            }
            match stack.last_mut() {
                Some(parent) => parent.acc = parent.acc.saturating_add(frame.acc.saturating_sub(1)),
                None => {
                    return Ok(SpineOutcome {
                        spine_parked,
                        saturated_grafts,
                        size,
                    })
                }
            }
        };
    }
}

/// Point estimate with its standard error and, when a closed form or an
/// independent estimate exists, the reference value and z-score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub reps: u64,
    pub reference: Option<f64>,
    /// Standard error of the reference when it is itself an estimate.
    pub reference_std_error: Option<f64>,
    pub z_score: Option<f64>,
    pub censored: u64,
    /// The reference is infinite (mean flux beyond `t_max`).
    pub diverges: bool,
}

impl EstimateReport {
    pub fn new(name: &str, estimate: f64, std_error: f64, reps: u64) -> Self {
        Self {
            name: name.to_string(),
            estimate,
            std_error,
            reps,
            reference: None,
            reference_std_error: None,
            z_score: None,
            censored: 0,
            diverges: false,
        }
    }

    pub fn with_reference(mut self, reference: f64, reference_std_error: Option<f64>) -> Self {
        if !reference.is_finite() {
            self.diverges = true;
            return self;
        }
        let se = (self.std_error.powi(2) + reference_std_error.unwrap_or(0.0).powi(2)).sqrt();
        let diff = self.estimate - reference;
        self.z_score = Some(if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        });
        self.reference = Some(reference);
        self.reference_std_error = reference_std_error;
        self
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score.is_some_and(|z| z.abs() <= sigmas)
    }
}

/// Mean and standard error from a sum and sum of squares.
fn mean_and_se(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Aggregate of parking many unconditioned trees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnconditionedSummary {
    pub reps: u64,
    pub censored: u64,
    /// Censored trees whose generated part left the root free: their true
    /// status is unknown.
    pub censored_undetermined: u64,
    /// Trees with at least one car visiting the root.
    pub parked: u64,
    pub flux_sum: u128,
    pub flux_sq_sum: u128,
    /// `visits_hist[k]` counts trees with `X = k` for `k < HIST_LEN`.
    pub visits_hist: Vec<u64>,
    pub visits_overflow: u64,
    pub max_flux: u64,
}

impl UnconditionedSummary {
    fn empty() -> Self {
        Self {
            reps: 0,
            censored: 0,
            censored_undetermined: 0,
            parked: 0,
            flux_sum: 0,
            flux_sq_sum: 0,
            visits_hist: vec![0; HIST_LEN],
            visits_overflow: 0,
            max_flux: 0,
        }
    }

    fn record(&mut self, o: &TreeOutcome) {
        self.reps += 1;
        if o.censored {
            self.censored += 1;
            if o.visits == 0 {
                self.censored_undetermined += 1;
            }
        }
        if o.visits >= 1 {
            self.parked += 1;
        }
        let f = o.flux();
        self.flux_sum += f as u128;
        self.flux_sq_sum += (f as u128) * (f as u128);
        self.max_flux = self.max_flux.max(f);
        match self.visits_hist.get_mut(o.visits as usize) {
            Some(c) => *c += 1,
            None => self.visits_overflow += 1,
        }
    }

    fn merge(&mut self, other: &Self) {
        self.reps += other.reps;
        self.censored += other.censored;
        self.censored_undetermined += other.censored_undetermined;
        self.parked += other.parked;
        self.flux_sum += other.flux_sum;
        self.flux_sq_sum += other.flux_sq_sum;
        self.max_flux = self.max_flux.max(other.max_flux);
        for (a, b) in self.visits_hist.iter_mut().zip(&other.visits_hist) {
            *a += b;
        }
        self.visits_overflow += other.visits_overflow;
    }

    /// Frequency of `X >= 1`; censored trees count by their lower bound.
    pub fn root_parked(&self) -> (f64, f64) {
        let p = self.parked as f64;
        mean_and_se(p, p, self.reps)
    }

    pub fn flux_mean(&self) -> (f64, f64) {
        mean_and_se(self.flux_sum as f64, self.flux_sq_sum as f64, self.reps)
    }

    /// Number of trees with `flux >= k`.
    pub fn flux_at_least(&self, k: u64) -> u64 {
        let start = (k + 1) as usize;
        if start >= HIST_LEN {
            return self.visits_overflow;
        }
        self.visits_hist[start..].iter().sum::<u64>() + self.visits_overflow
    }

    /// Empirical law of `X` on `0..HIST_LEN`.
    pub fn visits_frequencies(&self) -> Vec<f64> {
        self.visits_hist.iter().map(|&c| c as f64 / self.reps as f64).collect()
    }
}

/// Parks `reps` unconditioned trees. With `keep_records` the per-replicate
/// outcomes are returned in replicate order.
pub fn simulate_unconditioned(
    model: &Model,
    reps: u64,
    size_cap: usize,
    seed: u64,
    keep_records: bool,
) -> (UnconditionedSummary, Option<Vec<TreeOutcome>>) {
    let parts = map_chunks(reps, |range| {
        let mut summary = UnconditionedSummary::empty();
        let mut records = Vec::new();
        for rep in range {
            let (mut t, mut c) = replicate_rngs(seed, rep);
            let o = park_streaming_gw(model, &mut t, &mut c, size_cap);
            summary.record(&o);
            if keep_records {
                records.push(o);
            }
        }
        (summary, records)
    });
    let mut total = UnconditionedSummary::empty();
    let mut all = keep_records.then(Vec::new);
    for (s, r) in parts {
        total.merge(&s);
        if let Some(a) = all.as_mut() {
            a.extend(r);
        }
    }
    (total, all)
}

pub fn root_parked_report(model: &Model, summary: &UnconditionedSummary) -> EstimateReport {
    let (p, se) = summary.root_parked();
    let mut r = EstimateReport::new("root_parked", p, se, summary.reps);
    r.censored = summary.censored;
    match model.root_free_probability() {
        Some(free) => r.with_reference(1.0 - free, None),
        None => r,
    }
}

pub fn estimate_root_parked(model: &Model, reps: u64, size_cap: usize, seed: u64) -> EstimateReport {
    let (summary, _) = simulate_unconditioned(model, reps, size_cap, seed, false);
    root_parked_report(model, &summary)
}

pub fn mean_flux_report(model: &Model, t: f64, summary: &UnconditionedSummary) -> Result<EstimateReport> {
    let (m, se) = summary.flux_mean();
    let mut r = EstimateReport::new("mean_flux", m, se, summary.reps);
    r.censored = summary.censored;
    Ok(r.with_reference(model.mean_flux_curve(t)?, None))
}

/// Mean root flux with arrivals diluted to `(1-t) delta_0 + t mu`.
pub fn estimate_mean_flux(model: &Model, t: f64, reps: u64, size_cap: usize, seed: u64) -> Result<EstimateReport> {
    let diluted = model.dilute(t)?;
    let (summary, _) = simulate_unconditioned(&diluted, reps, size_cap, seed, false);
    mean_flux_report(model, t, &summary)
}

/// Per-replicate observables of conditioned-tree experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConditionedRecord {
    pub n: usize,
    pub rep: u64,
    pub flux: u64,
    pub parked: usize,
    pub c_max: usize,
    pub c_2: usize,
}

fn park_conditioned(model: &Model, sampler: &ConditionedSampler, seed: u64, rep: u64) -> Result<ConditionedRecord> {
    let (mut t, mut c) = replicate_rngs(seed, rep);
    let tree = sampler.sample(&mut t);
    let cars = sample_arrivals(&tree, model, &mut c);
    let result = park(&tree, &cars)?;
    let stats = clusters(&tree, &result.parked)?;
    Ok(ConditionedRecord {
        n: tree.len(),
        rep,
        flux: result.root_flux,
        parked: result.parked_count(),
        c_max: stats.c_max,
        c_2: stats.c_2,
    })
}

/// Parks `reps` trees conditioned to have `n` vertices.
pub fn simulate_conditioned(model: &Model, n: usize, reps: u64, seed: u64) -> Result<Vec<ConditionedRecord>> {
    let sampler = ConditionedSampler::new(model.offspring(), n)?;
    let parts = map_chunks(reps, |range| {
        range
            .map(|rep| park_conditioned(model, &sampler, seed, rep))
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(reps as usize);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Regenerates replicate `rep` of an unconditioned experiment.
pub fn unconditioned_instance(
    model: &Model,
    seed: u64,
    rep: u64,
    size_cap: usize,
) -> Result<(PlaneTree, crate::treegen::CarAssignment)> {
    let (mut t, mut c) = replicate_rngs(seed, rep);
    let tree = crate::treegen::sample_gw(model, &mut t, size_cap)?;
    let cars = sample_arrivals(&tree, model, &mut c);
    Ok((tree, cars))
}

/// Regenerates replicate `rep` of a conditioned experiment.
pub fn conditioned_instance(
    model: &Model,
    n: usize,
    seed: u64,
    rep: u64,
) -> Result<(PlaneTree, crate::treegen::CarAssignment)> {
    let sampler = ConditionedSampler::new(model.offspring(), n)?;
    let (mut t, mut c) = replicate_rngs(seed, rep);
    let tree = sampler.sample(&mut t);
    let cars = sample_arrivals(&tree, model, &mut c);
    Ok((tree, cars))
}

/// `phi(T_n)/n` over conditioned trees. The reference is 0 unless the
/// model is supercritical, where it is `E_nu[m] - p` with `p` the estimated
/// probability that the root of the unconditioned tree is parked.
pub fn estimate_flux_lln(
    model: &Model,
    n: usize,
    reps: u64,
    seed: u64,
    root_parked: Option<&EstimateReport>,
) -> Result<(EstimateReport, Vec<ConditionedRecord>)> {
    let records = simulate_conditioned(model, n, reps, seed)?;
    let (sum, sum_sq) = records.iter().fold((0.0, 0.0), |(s, q), r| {
        let x = r.flux as f64 / n as f64;
        (s + x, q + x * x)
    });
    let (m, se) = mean_and_se(sum, sum_sq, reps);
    let report = EstimateReport::new("flux_lln", m, se, reps);
    let report = match model.classify().regime {
        Regime::Supercritical => match root_parked {
            Some(p) => report.with_reference(model.moments().e_m - p.estimate, Some(p.std_error)),
            None => report,
        },
        _ => report.with_reference(0.0, None),
    };
    Ok((report, records))
}

/// One row of the fringe census.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeRow {
    /// Depth-first degrees of the pattern.
    pub pattern: Vec<u32>,
    pub depth_k_vertices: usize,
    pub empirical: f64,
    pub std_error: f64,
    pub exact: f64,
}

impl FringeRow {
    pub fn z_score(&self) -> f64 {
        let diff = self.empirical - self.exact;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff.abs() <= 1e-15 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeCensus {
    pub n: usize,
    pub k: usize,
    pub max_pattern_size: usize,
    pub reps: u64,
    pub rows: Vec<FringeRow>,
    /// Vertices without a `k`-th ancestor or with a larger pattern.
    pub residual_empirical: f64,
    pub residual_exact: f64,
}

impl FringeCensus {
    pub fn row(&self, pattern: &[u32]) -> Option<&FringeRow> {
        self.rows.iter().find(|r| r.pattern == pattern)
    }

    pub fn bucket_total(&self) -> f64 {
        self.rows.iter().map(|r| r.empirical).sum::<f64>() + self.residual_empirical
    }
}

fn pattern_key(degrees: &[u32]) -> u64 {
    debug_assert!(degrees.len() <= 8 && degrees.iter().all(|&d| d < 16));
    degrees
        .iter()
        .fold(degrees.len() as u64, |acc, &d| (acc << 4) | d as u64)
}

/// Number of vertices at depth `k` of the tree with these degrees.
fn vertices_at_depth(degrees: &[u32], k: usize) -> usize {
    let mut count = 0;
    let mut stack: Vec<u32> = Vec::new();
    for &d in degrees {
        if stack.len() == k {
            count += 1;
        }
        if let Some(top) = stack.last_mut() {
            *top -= 1;
        }
        stack.push(d);
        while stack.last() == Some(&0) {
            stack.pop();
        }
    }
    count
}

/// Frequencies of `H_k(T_n, x) = t` over patterns `t` with at most
/// `max_pattern_size` vertices, against `n_k(t) prod_v nu(deg v)`.
pub fn fringe_census(
    model: &Model,
    n: usize,
    k: usize,
    max_pattern_size: usize,
    reps: u64,
    seed: u64,
) -> Result<FringeCensus> {
    if max_pattern_size == 0 || max_pattern_size > 8 {
        return Err(Error::Config(format!(
            "pattern size must be in 1..=8, got {max_pattern_size}"
        )));
    }
    let nu = model.offspring().probs();
    let mut patterns = Vec::new();
    for size in 1..=max_pattern_size {
        for t in enumerate_plane_trees(size) {
            let weight: f64 = t.iter().map(|&d| nu.get(d as usize).copied().unwrap_or(0.0)).product();
            let nk = vertices_at_depth(&t, k);
            if weight > 0.0 && nk > 0 {
                patterns.push((t, nk, nk as f64 * weight));
            }
        }
    }
    let index: HashMap<u64, usize> = patterns
        .iter()
        .enumerate()
        .map(|(i, (t, _, _))| (pattern_key(t), i))
        .collect();
    let sampler = ConditionedSampler::new(model.offspring(), n)?;
    let parts = map_chunks(reps, |range| {
        let mut sums = vec![(0.0f64, 0.0f64); patterns.len()];
        let mut counts = vec![0usize; patterns.len()];
        for rep in range {
            let (mut rng, _) = replicate_rngs(seed, rep);
            let tree = sampler.sample(&mut rng);
            let degrees = tree.degrees();
            let sizes = tree.subtree_sizes();
            counts.iter_mut().for_each(|c| *c = 0);
            for a in 0..tree.len() {
                if sizes[a] <= max_pattern_size {
                    if let Some(&i) = index.get(&pattern_key(&degrees[a..a + sizes[a]])) {
                        counts[i] += patterns[i].1;
                    }
                }
            }
            for (s, &c) in sums.iter_mut().zip(&counts) {
                let f = c as f64 / n as f64;
                s.0 += f;
                s.1 += f * f;
            }
        }
        sums
    });
    let mut sums = vec![(0.0f64, 0.0f64); patterns.len()];
    for part in parts {
        for (s, p) in sums.iter_mut().zip(part) {
            s.0 += p.0;
            s.1 += p.1;
        }
    }
    let rows: Vec<FringeRow> = patterns
        .into_iter()
        .zip(sums)
        .map(|((pattern, nk, exact), (s, q))| {
            let (empirical, std_error) = mean_and_se(s, q, reps);
            FringeRow {
                pattern,
                depth_k_vertices: nk,
                empirical,
                std_error,
                exact,
            }
        })
        .collect();
    let residual_empirical = 1.0 - rows.iter().map(|r| r.empirical).sum::<f64>();
    let residual_exact = 1.0 - rows.iter().map(|r| r.exact).sum::<f64>();
    Ok(FringeCensus {
        n,
        k,
        max_pattern_size,
        reps,
        rows,
        residual_empirical,
        residual_exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterRow {
    pub n: usize,
    pub reps: u64,
    pub mean_cmax_over_n: f64,
    pub se_cmax_over_n: f64,
    pub q10_cmax_over_n: f64,
    pub q50_cmax_over_n: f64,
    pub q90_cmax_over_n: f64,
    pub mean_c2: f64,
    pub max_c2: usize,
    pub median_cmax_over_ln_n: f64,
    /// Fraction of replicates with `C_2 <= 30 ln n`.
    pub frac_c2_below_30_ln_n: f64,
    /// Fraction of replicates with `C_max <= 30 ln n`.
    pub frac_cmax_below_30_ln_n: f64,
}

/// Empirical quantile (type 7, linear interpolation) of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_clusters(n: usize, records: &[ConditionedRecord]) -> ClusterRow {
    let reps = records.len() as u64;
    let nf = n as f64;
    let ln_n = nf.ln();
    let mut ratios: Vec<f64> = records.iter().map(|r| r.c_max as f64 / nf).collect();
    let (sum, sum_sq) = ratios.iter().fold((0.0, 0.0), |(s, q), x| (s + x, q + x * x));
    let (mean, se) = mean_and_se(sum, sum_sq, reps);
    ratios.sort_by(f64::total_cmp);
    let mut per_log: Vec<f64> = records.iter().map(|r| r.c_max as f64 / ln_n).collect();
    per_log.sort_by(f64::total_cmp);
    let frac = |f: &dyn Fn(&ConditionedRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / reps as f64;
    ClusterRow {
        n,
        reps,
        mean_cmax_over_n: mean,
        se_cmax_over_n: se,
        q10_cmax_over_n: quantile(&ratios, 0.1),
        q50_cmax_over_n: quantile(&ratios, 0.5),
        q90_cmax_over_n: quantile(&ratios, 0.9),
        mean_c2: records.iter().map(|r| r.c_2 as f64).sum::<f64>() / reps as f64,
        max_c2: records.iter().map(|r| r.c_2).max().unwrap_or(0),
        median_cmax_over_ln_n: quantile(&per_log, 0.5),
        frac_c2_below_30_ln_n: frac(&|r| r.c_2 as f64 <= 30.0 * ln_n),
        frac_cmax_below_30_ln_n: frac(&|r| r.c_max as f64 <= 30.0 * ln_n),
    }
}

/// Largest parked clusters of conditioned trees for each size in `n_list`.
pub fn cluster_experiment(
    model: &Model,
    n_list: &[usize],
    reps: u64,
    seed: u64,
) -> Result<(Vec<ClusterRow>, Vec<ConditionedRecord>)> {
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for &n in n_list {
        let records = simulate_conditioned(model, n, reps, derive_seed(seed, n as u64))?;
        rows.push(summarize_clusters(n, &records));
        all.extend(records);
    }
    Ok((rows, all))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GiantReport {
    pub margin: usize,
    pub graft_cap: usize,
    /// One estimate per truncation height, in the order given.
    pub by_height: Vec<(usize, EstimateReport)>,
    /// Consecutive heights agree within 2 standard errors.
    pub stabilized: bool,
    pub saturated_grafts: u64,
}

impl GiantReport {
    pub fn final_estimate(&self) -> Option<&EstimateReport> {
        self.by_height.last().map(|(_, r)| r)
    }
}

/// Frequency with which all spine vertices of `T(K)` below the top `margin`
/// ones are parked, for each `K` in `heights`.
pub fn estimate_giant_constant(
    model: &Model,
    heights: &[usize],
    margin: usize,
    reps: u64,
    seed: u64,
    graft_cap: usize,
) -> Result<GiantReport> {
    let theta = model.theta();
    if model.classify().regime != Regime::Supercritical {
        return Err(Error::NotSupercritical { theta });
    }
    spine_parked_frequencies(model, heights, margin, reps, seed, graft_cap)
}

/// [`estimate_giant_constant`] without the regime check.
pub fn spine_parked_frequencies(
    model: &Model,
    heights: &[usize],
    margin: usize,
    reps: u64,
    seed: u64,
    graft_cap: usize,
) -> Result<GiantReport> {
    let mut by_height = Vec::new();
    let mut saturated = 0u64;
    for &h in heights {
        if margin == 0 || margin > h {
            return Err(Error::Config(format!("need 1 <= margin <= K, got margin {margin}, K {h}")));
        }
        let hseed = derive_seed(seed, h as u64);
        let parts = map_chunks(reps, |range| -> Result<(u64, u64)> {
            let (mut hits, mut sat) = (0u64, 0u64);
            for rep in range {
                let (mut t, mut c) = replicate_rngs(hseed, rep);
                let o = park_streaming_spine(model, h, &mut t, &mut c, graft_cap)?;
                sat += o.saturated_grafts as u64;
                if o.spine_parked[margin..].iter().all(|&p| p) {
                    hits += 1;
                }
            }
            Ok((hits, sat))
        });
        let mut hits = 0u64;
        for p in parts {
            let (hh, s) = p?;
            hits += hh;
            saturated += s;
        }
        let (m, se) = mean_and_se(hits as f64, hits as f64, reps);
        by_height.push((h, EstimateReport::new("giant_constant", m, se, reps)));
    }
    let stabilized = by_height.windows(2).all(|w| {
        let (a, b) = (&w[0].1, &w[1].1);
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        (a.estimate - b.estimate).abs() <= 2.0 * se
    });
    Ok(GiantReport {
        margin,
        graft_cap,
        by_height,
        stabilized,
        saturated_grafts: saturated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub k: u64,
    pub hits: u64,
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub reps: u64,
    pub censored: u64,
    pub rows: Vec<TailRow>,
    /// Thresholds `k >= 1` with at least `MIN_HITS` hits used in the fits.
    pub fit_thresholds: Vec<u64>,
    /// Least-squares slope of `ln P(phi >= k)` against `k`.
    pub slope: f64,
    /// Coefficient of determination of the raw fit.
    pub r_squared: f64,
    /// Same fit after removing a `k^{-3/2}` prefactor.
    pub corrected_slope: f64,
    /// The model is supercritical; the tail is not expected to be geometric.
    pub warning: bool,
}

pub const MIN_HITS: u64 = 100;

/// Least-squares slope and coefficient of determination.
fn ls_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (sxy / sxx, r2)
}

pub fn tail_report(model: &Model, summary: &UnconditionedSummary, thresholds: &[u64]) -> TailReport {
    let rows: Vec<TailRow> = thresholds
        .iter()
        .map(|&k| {
            let hits = summary.flux_at_least(k);
            TailRow {
                k,
                hits,
                survival: hits as f64 / summary.reps as f64,
            }
        })
        .collect();
    let fit: Vec<&TailRow> = rows.iter().filter(|r| r.k >= 1 && r.hits >= MIN_HITS).collect();
    let raw: Vec<(f64, f64)> = fit.iter().map(|r| (r.k as f64, r.survival.ln())).collect();
    let corrected: Vec<(f64, f64)> = fit
        .iter()
        .map(|r| (r.k as f64, r.survival.ln() + 1.5 * (r.k as f64).ln()))
        .collect();
    let ((slope, r_squared), (corrected_slope, _)) = if fit.len() >= 2 {
        (ls_fit(&raw), ls_fit(&corrected))
    } else {
        ((f64::NAN, f64::NAN), (f64::NAN, f64::NAN))
    };
    TailReport {
        reps: summary.reps,
        censored: summary.censored,
        fit_thresholds: fit.iter().map(|r| r.k).collect(),
        rows,
        slope,
        r_squared,
        corrected_slope,
        warning: model.classify().regime == Regime::Supercritical,
    }
}

/// Empirical survival function of the root flux over unconditioned trees.
pub fn tail_experiment(
    model: &Model,
    reps: u64,
    thresholds: &[u64],
    size_cap: usize,
    seed: u64,
) -> (TailReport, UnconditionedSummary) {
    let (summary, _) = simulate_unconditioned(model, reps, size_cap, seed, false);
    (tail_report(model, &summary, thresholds), summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArrivalFamily, OffspringDist, Pmf};
    use crate::treegen::{sample_gw, sample_spine_tree};

    #[test]
    fn streaming_matches_materialized() {
        let m = Model::geometric_poisson(0.45, 60, 30).unwrap();
        for rep in 0..300 {
            let (mut t1, mut c1) = replicate_rngs(5, rep);
            let o = park_streaming_gw(&m, &mut t1, &mut c1, 100_000);
            let (mut t2, mut c2) = replicate_rngs(5, rep);
            let Ok(tree) = sample_gw(&m, &mut t2, 100_000) else {
                assert!(o.censored);
                continue;
            };
            let cars = sample_arrivals(&tree, &m, &mut c2);
            let r = park(&tree, &cars).unwrap();
            assert_eq!((o.visits, o.size, o.censored), (r.visits[0], tree.len(), false));
        }
    }

    #[test]
    fn streaming_spine_matches_materialized() {
        let m = Model::geometric_poisson(0.5, 60, 30).unwrap();
        for h in [0, 1, 4, 12] {
            for rep in 0..100 {
                let (mut t1, mut c1) = replicate_rngs(8, rep);
                let o = park_streaming_spine(&m, h, &mut t1, &mut c1, usize::MAX).unwrap();
                let (mut t2, mut c2) = replicate_rngs(8, rep);
                let st = sample_spine_tree(&m, h, &mut t2, usize::MAX).unwrap();
                let cars = sample_arrivals(&st.tree, &m, &mut c2);
                let r = park(&st.tree, &cars).unwrap();
                let expected: Vec<bool> = st.spine.iter().map(|&v| r.parked[v]).collect();
                assert_eq!(o.spine_parked, expected, "h {h} rep {rep}");
                assert_eq!(o.size, st.tree.len());
            }
        }
    }

    #[test]
    fn censoring_gives_lower_bound() {
        let m = Model::geometric_poisson(0.3, 60, 30).unwrap();
        let mut censored = 0;
        for rep in 0..2000 {
            let (mut t, mut c) = replicate_rngs(1, rep);
            let small = park_streaming_gw(&m, &mut t, &mut c, 20);
            let (mut t, mut c) = replicate_rngs(1, rep);
            let big = park_streaming_gw(&m, &mut t, &mut c, 1_000_000);
            if small.censored {
                censored += 1;
                assert!(small.visits <= big.visits);
                assert_eq!(small.size, 20);
            } else {
                assert_eq!(small, big);
            }
        }
        assert!(censored > 0);
    }

    #[test]
    fn no_cars_experiments() {
        let m = Model::new(OffspringDist::geometric(60).unwrap(), ArrivalFamily::uniform(Pmf::point_mass(0))).unwrap();
        let r = estimate_root_parked(&m, 5000, 10_000, 3);
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.z_score, Some(0.0));
        let f = estimate_mean_flux(&m, 0.7, 2000, 10_000, 3).unwrap();
        assert_eq!(f.estimate, 0.0);
        let (lln, _) = estimate_flux_lln(&m, 101, 50, 3, None).unwrap();
        assert_eq!(lln.estimate, 0.0);
        let (rows, _) = cluster_experiment(&m, &[101], 20, 3).unwrap();
        assert_eq!(rows[0].mean_cmax_over_n, 0.0);
        let giant = spine_parked_frequencies(&m, &[20], 5, 200, 3, 10_000).unwrap();
        assert_eq!(giant.final_estimate().unwrap().estimate, 0.0);
        assert!(matches!(
            estimate_giant_constant(&m, &[20], 5, 10, 3, 10_000),
            Err(Error::NotSupercritical { .. })
        ));
        let (tails, _) = tail_experiment(&m, 3000, &[0, 1, 2], 10_000, 3);
        assert_eq!(tails.rows[1].hits, 0);
    }

    #[test]
    fn mean_flux_at_zero_is_exact() {
        let m = Model::geometric_poisson(0.5, 60, 30).unwrap();
        let r = estimate_mean_flux(&m, 0.0, 1000, 10_000, 9).unwrap();
        assert_eq!((r.estimate, r.z_score), (0.0, Some(0.0)));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let m = Model::geometric_poisson(0.325, 60, 30).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    let (s, _) = simulate_unconditioned(&m, 3000, 100_000, 11, false);
                    let f = fringe_census(&m, 201, 1, 4, 300, 11).unwrap();
                    (s, f)
                })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn fringe_buckets_and_depth_counts() {
        assert_eq!(vertices_at_depth(&[2, 0, 0], 1), 2);
        assert_eq!(vertices_at_depth(&[2, 1, 0, 0], 2), 1);
        assert_eq!(vertices_at_depth(&[0], 0), 1);
        assert_eq!(vertices_at_depth(&[0], 1), 0);
        let m = Model::geometric_poisson(0.3, 60, 30).unwrap();
        for k in [0, 1, 2] {
            let census = fringe_census(&m, 301, k, 5, 40, 4).unwrap();
            assert!((census.bucket_total() - 1.0).abs() < 1e-12);
            assert!(census.residual_empirical >= -1e-12);
        }
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
    }
}
