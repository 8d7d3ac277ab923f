//! Plane trees in depth-first (Lukasiewicz) encoding and their samplers:
//! unconditioned Galton-Watson trees, trees conditioned on their size via the
//! cycle lemma, and spine trees `T(h)`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::model::{Model, OffspringDist, Pmf};

/// Default vertex budget for unconditioned samplers.
pub const DEFAULT_SIZE_CAP: usize = 10_000_000;

/// Sentinel parent index of the root.
pub const NO_PARENT: usize = usize::MAX;

/// Rooted plane tree stored as children counts in depth-first order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneTree {
    degrees: Vec<u32>,
    parent: Vec<usize>,
}

impl PlaneTree {
    /// Builds a tree from depth-first children counts, checking that they
    /// form a valid excursion.
    pub fn from_degrees(degrees: Vec<u32>) -> Result<Self> {
        check_excursion(&degrees)?;
        let parent = parents_from_degrees(&degrees);
        Ok(Self { degrees, parent })
    }

    pub fn single_vertex() -> Self {
        Self {
            degrees: vec![0],
            parent: vec![NO_PARENT],
        }
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v] as usize
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        match self.parent[v] {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    /// Children of `v` in plane order.
    pub fn children(&self, v: usize) -> Vec<usize> {
        let sizes = self.subtree_sizes();
        let mut out = Vec::with_capacity(self.degree(v));
        let mut c = v + 1;
        for _ in 0..self.degree(v) {
            out.push(c);
            c += sizes[c];
        }
        out
    }

    /// Number of vertices in the subtree of descendants of each vertex.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![1usize; self.len()];
        for v in (1..self.len()).rev() {
            size[self.parent[v]] += size[v];
        }
        size
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.len()];
        for v in 1..self.len() {
            depth[v] = depth[self.parent[v]] + 1;
        }
        depth
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// `S_0 = 0, S_{i+1} = S_i + deg(v_i) - 1`; ends at `-1`.
    pub fn lukasiewicz(&self) -> Vec<i64> {
        let mut walk = Vec::with_capacity(self.len() + 1);
        let mut s = 0i64;
        walk.push(s);
        for &d in &self.degrees {
            s += d as i64 - 1;
            walk.push(s);
        }
        walk
    }

    pub fn from_lukasiewicz(walk: &[i64]) -> Result<Self> {
        if walk.len() < 2 {
            return Err(Error::InvalidExcursion("walk needs at least two points".into()));
        }
        if walk[0] != 0 {
            return Err(Error::InvalidExcursion(format!("walk starts at {}", walk[0])));
        }
        let mut degrees = Vec::with_capacity(walk.len() - 1);
        for w in walk.windows(2) {
            let step = w[1] - w[0];
            if step < -1 {
                return Err(Error::InvalidExcursion(format!("step {step} below -1")));
            }
            degrees.push((step + 1) as u32);
        }
        Self::from_degrees(degrees)
    }
}

impl fmt::Display for PlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_counts(f, &self.degrees)
    }
}

impl FromStr for PlaneTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_degrees(parse_counts(s)?)
    }
}

fn write_counts<T: fmt::Display>(f: &mut fmt::Formatter<'_>, values: &[T]) -> fmt::Result {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{v}")?;
    }
    Ok(())
}

fn parse_counts<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| Error::Config(format!("invalid count {tok:?}")))
        })
        .collect()
}

fn check_excursion(degrees: &[u32]) -> Result<()> {
    if degrees.is_empty() {
        return Err(Error::InvalidExcursion("empty degree sequence".into()));
    }
    let n = degrees.len();
    let mut s = 0i64;
    for (i, &d) in degrees.iter().enumerate() {
        s += d as i64 - 1;
        if s < 0 && i + 1 < n {
            return Err(Error::InvalidExcursion(format!(
                "walk hits -1 at step {} before the end ({n})",
                i + 1
            )));
        }
    }
    if s != -1 {
        return Err(Error::InvalidExcursion(format!("walk ends at {s}, expected -1")));
    }
    Ok(())
}

fn parents_from_degrees(degrees: &[u32]) -> Vec<usize> {
    let mut parent = vec![NO_PARENT; degrees.len()];
    // (vertex, children still to attach)
    let mut stack: Vec<(usize, u32)> = Vec::new();
    for (v, &d) in degrees.iter().enumerate() {
        if let Some(top) = stack.last_mut() {
            parent[v] = top.0;
            top.1 -= 1;
            if top.1 == 0 {
                stack.pop();
            }
        }
        if d > 0 {
            stack.push((v, d));
        }
    }
    parent
}

/// Tree `T(h)` together with the indices of its spine vertices `S_0 .. S_h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpineTree {
    pub tree: PlaneTree,
    pub spine: Vec<usize>,
}

/// Number of cars arriving at each vertex, in depth-first order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarAssignment {
    pub counts: Vec<u64>,
}

impl CarAssignment {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl fmt::Display for CarAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_counts(f, &self.counts)
    }
}

impl FromStr for CarAssignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self::new(parse_counts(s)?))
    }
}

/// Reads a tree file: first non-comment line holds degrees, the second the
/// arrival counts. Lines starting with `#` are ignored.
pub fn parse_instance(text: &str) -> Result<(PlaneTree, CarAssignment)> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let tree: PlaneTree = lines
        .next()
        .ok_or_else(|| Error::Config("missing degree line".into()))?
        .parse()?;
    let cars: CarAssignment = lines
        .next()
        .ok_or_else(|| Error::Config("missing arrivals line".into()))?
        .parse()?;
    if cars.len() != tree.len() {
        return Err(Error::LengthMismatch {
            expected: tree.len(),
            got: cars.len(),
        });
    }
    Ok((tree, cars))
}

pub fn format_instance(tree: &PlaneTree, cars: &CarAssignment) -> String {
    format!("{tree}\n{cars}\n")
}

/// Unconditioned Galton-Watson tree, generated by running its Lukasiewicz
/// walk until it hits -1. One degree draw per vertex, in depth-first order.
pub fn sample_gw<R: Rng + ?Sized>(model: &Model, rng: &mut R, size_cap: usize) -> Result<PlaneTree> {
    sample_gw_from(model.offspring(), rng, size_cap)
}

pub fn sample_gw_from<R: Rng + ?Sized>(
    offspring: &OffspringDist,
    rng: &mut R,
    size_cap: usize,
) -> Result<PlaneTree> {
    let law = offspring.law();
    let mut degrees = Vec::new();
    let mut pending = 1i64;
    while pending > 0 {
        if degrees.len() >= size_cap {
            return Err(Error::SizeCapExceeded { cap: size_cap });
        }
        let d = law.sample(rng);
        degrees.push(d as u32);
        pending += d as i64 - 1;
    }
    let parent = parents_from_degrees(&degrees);
    Ok(PlaneTree { degrees, parent })
}

/// Exact sampler of the tree conditioned to have `n` vertices.
///
/// The degree multiset is a multinomial draw conditioned on summing to
/// `n - 1` (rejection on the sum), the sequence is shuffled, and the cycle
/// lemma picks the unique rotation that is a valid excursion.
#[derive(Debug, Clone)]
pub struct ConditionedSampler {
    n: usize,
    support: Vec<(usize, f64)>,
}

impl ConditionedSampler {
    pub fn new(offspring: &OffspringDist, n: usize) -> Result<Self> {
        if n == 0 || !size_reachable(offspring, n) {
            return Err(Error::UnreachableSize { n });
        }
        Ok(Self {
            n,
            support: offspring.support().map(|k| (k, offspring.prob(k))).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Degree counts `(k, N_k)` with `sum N_k = n` and `sum k N_k = n - 1`.
    pub fn sample_counts<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<(usize, u64)> {
        let target = (self.n - 1) as u64;
        let mut counts = Vec::with_capacity(self.support.len());
        'retry: loop {
            counts.clear();
            let mut remaining = self.n as u64;
            let mut rest_mass = 1.0f64;
            let mut sum = 0u64;
            for (i, &(k, p)) in self.support.iter().enumerate() {
                let c = if i + 1 == self.support.len() || remaining == 0 {
                    remaining
                } else {
                    let q = (p / rest_mass).clamp(0.0, 1.0);
                    Binomial::new(remaining, q)
                        .expect("valid binomial parameters")
                        .sample(rng)
                };
                rest_mass -= p;
                remaining -= c;
                sum += k as u64 * c;
                if sum > target {
                    continue 'retry;
                }
                counts.push((k, c));
            }
            if sum == target {
                return counts;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PlaneTree {
        let counts = self.sample_counts(rng);
        let mut seq: Vec<u32> = Vec::with_capacity(self.n);
        for (k, c) in counts {
            seq.extend(std::iter::repeat_n(k as u32, c as usize));
        }
        seq.shuffle(rng);
        let degrees = cycle_lemma_rotation(&seq);
        let parent = parents_from_degrees(&degrees);
        PlaneTree { degrees, parent }
    }
}

pub fn sample_gw_conditioned<R: Rng + ?Sized>(model: &Model, n: usize, rng: &mut R) -> Result<PlaneTree> {
    Ok(ConditionedSampler::new(model.offspring(), n)?.sample(rng))
}

/// Rotation of a degree sequence with total step `-1` that is a valid
/// excursion: start right after the first time the walk reaches its minimum.
pub fn cycle_lemma_rotation(seq: &[u32]) -> Vec<u32> {
    let mut s = 0i64;
    let mut min = i64::MAX;
    let mut argmin = 0;
    for (i, &d) in seq.iter().enumerate() {
        s += d as i64 - 1;
        if s < min {
            min = s;
            argmin = i + 1;
        }
    }
    debug_assert_eq!(s, -1, "cycle lemma needs total step -1");
    let start = argmin % seq.len();
    seq[start..].iter().chain(&seq[..start]).copied().collect()
}

/// Whether some tree with `n` vertices has positive probability: `nu_0 > 0`
/// and `n - 1` is a sum of positive support values (at most `n - 1` parts).
pub fn size_reachable(offspring: &OffspringDist, n: usize) -> bool {
    if n == 0 {
        return false;
    }
    if n == 1 {
        return offspring.prob(0) > 0.0;
    }
    if offspring.prob(0) <= 0.0 {
        return false;
    }
    let parts: Vec<usize> = offspring.support().filter(|&k| k > 0).collect();
    let target = n - 1;
    let mut reach = vec![false; target + 1];
    reach[0] = true;
    for s in 1..=target {
        reach[s] = parts.iter().any(|&p| p <= s && reach[s - p]);
    }
    reach[target]
}

/// Spine tree `T(h)`: spine vertices `S_0 .. S_{h-1}` have size-biased degree
/// with the spine child at a uniform position; the other children root
/// independent Galton-Watson trees. `S_h` has an ordinary degree.
///
/// Degrees are drawn in depth-first order from `rng`; for each `S_i` with
/// `i < h` the spine slot is drawn right after its degree.
pub fn sample_spine_tree<R: Rng + ?Sized>(
    model: &Model,
    h: usize,
    rng: &mut R,
    size_cap: usize,
) -> Result<SpineTree> {
    let law = model.offspring().law();
    let biased = law.size_biased()?;
    let mut degrees: Vec<u32> = Vec::new();
    let mut spine = Vec::with_capacity(h + 1);
    // Frame: (children left, next slot, spine slot if this is S_i with i < h)
    let mut stack: Vec<(u32, u32, Option<u32>)> = Vec::new();
    let mut next_is_spine = Some(0usize);
    loop {
        if degrees.len() >= size_cap {
            return Err(Error::SizeCapExceeded { cap: size_cap });
        }
        let v = degrees.len();
        let frame = match next_is_spine {
            Some(level) => {
                spine.push(v);
                spine_vertex(law, &biased, level, h, rng)
            }
            None => {
                let d = law.sample(rng) as u32;
                (d, 0, None)
            }
        };
        degrees.push(frame.0);
        stack.push(frame);
        // Find the next child slot to fill.
        next_is_spine = loop {
            match stack.last_mut() {
                None => {
                    let parent = parents_from_degrees(&degrees);
                    return Ok(SpineTree {
                        tree: PlaneTree { degrees, parent },
                        spine,
                    });
                }
                Some(top) if top.0 == 0 => {
                    stack.pop();
                }
                Some(top) => {
                    top.0 -= 1;
                    let slot = top.1;
                    top.1 += 1;
                    break if top.2 == Some(slot) {
                        Some(spine.len())
                    } else {
                        None
                    };
                }
            }
        };
    }
}

fn spine_vertex<R: Rng + ?Sized>(
    law: &Pmf,
    biased: &Pmf,
    level: usize,
    h: usize,
    rng: &mut R,
) -> (u32, u32, Option<u32>) {
    if level < h {
        let y = biased.sample(rng) as u32;
        let slot = rng.random_range(0..y);
        (y, 0, Some(slot))
    } else {
        (law.sample(rng) as u32, 0, None)
    }
}

/// Independent arrivals, `counts[x] ~ mu_(deg x)`, one draw per vertex in
/// depth-first order.
pub fn sample_arrivals<R: Rng + ?Sized>(tree: &PlaneTree, model: &Model, rng: &mut R) -> CarAssignment {
    let arrivals = model.arrivals();
    CarAssignment::new(
        tree.degrees
            .iter()
            .map(|&d| arrivals.law(d as usize).sample(rng) as u64)
            .collect(),
    )
}

/// Every valid degree sequence (plane tree) with exactly `n` vertices, in
/// lexicographic order of the degree sequence.
pub fn enumerate_plane_trees(n: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, pending: i64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let placed = cur.len();
        if placed == n {
            if pending == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let left = (n - placed) as i64;
        // Each remaining vertex can close at most one pending slot.
        for d in 0..left as u32 {
            let p = pending - 1 + d as i64;
            if p <= 0 && placed + 1 < n {
                continue;
            }
            if p > left - 1 {
                break;
            }
            cur.push(d);
            rec(n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, 1, &mut Vec::with_capacity(n), &mut out);
    }
    out
}
