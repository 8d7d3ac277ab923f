use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treepark::model::{ArrivalFamily, Model, OffspringDist, Pmf};
use treepark::treegen::{
    enumerate_plane_trees, sample_arrivals, sample_gw, sample_gw_conditioned, sample_spine_tree, ConditionedSampler,
    PlaneTree,
};

fn binary() -> Model {
    Model::new(OffspringDist::binary(), ArrivalFamily::uniform(Pmf::point_mass(0))).unwrap()
}

fn geometric() -> Model {
    Model::geometric_poisson(0.325, 60, 30).unwrap()
}

fn within(freq: f64, p: f64, reps: usize, sigmas: f64) -> bool {
    (freq - p).abs() <= sigmas * (p * (1.0 - p) / reps as f64).sqrt()
}

#[test]
fn single_vertex_probability_is_nu0() {
    let m = binary();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let reps = 100_000;
    let singles = (0..reps)
        .filter(|_| sample_gw(&m, &mut rng, 1_000_000).is_ok_and(|t| t.len() == 1))
        .count();
    assert!(within(singles as f64 / reps as f64, 0.5, reps, 3.0));
}

#[test]
fn binary_sizes_follow_catalan_law() {
    // P(|T| = 2j + 1) = Catalan(j) / 2^(2j + 1).
    let m = binary();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let reps = 200_000;
    let mut counts = HashMap::new();
    for _ in 0..reps {
        if let Ok(t) = sample_gw(&m, &mut rng, 10_000) {
            *counts.entry(t.len()).or_insert(0usize) += 1;
        }
    }
    let mut catalan = 1.0f64;
    for j in 0..8usize {
        let p = catalan / 2f64.powi(2 * j as i32 + 1);
        let freq = *counts.get(&(2 * j + 1)).unwrap_or(&0) as f64 / reps as f64;
        assert!(within(freq, p, reps, 4.0), "size {}: {freq} vs {p}", 2 * j + 1);
        catalan *= 2.0 * (2 * j + 1) as f64 / (j + 2) as f64;
    }
}

#[test]
fn geometric_size_tail_has_exponent_three_halves() {
    let m = geometric();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let reps = 1_000_000;
    let edges: Vec<usize> = (0..=10).map(|i| (10.0 * 100f64.powf(i as f64 / 10.0)).round() as usize).collect();
    let mut bins = vec![0usize; edges.len() - 1];
    for _ in 0..reps {
        let Ok(t) = sample_gw(&m, &mut rng, 2_000) else { continue };
        if let Some(b) = edges.windows(2).position(|w| t.len() >= w[0] && t.len() < w[1]) {
            bins[b] += 1;
        }
    }
    let points: Vec<(f64, f64)> = edges
        .windows(2)
        .zip(&bins)
        .map(|(w, &c)| {
            let mid = ((w[0] * (w[1] - 1)) as f64).sqrt();
            (mid.ln(), (c as f64 / (w[1] - w[0]) as f64).ln())
        })
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.5).abs() < 0.15, "slope {slope}");
}

#[test]
fn truncated_mean_size_grows_with_cap() {
    let m = geometric();
    let mean = |cap: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let total: usize = (0..20_000)
            .map(|_| sample_gw(&m, &mut rng, cap).map_or(cap, |t| t.len()))
            .sum();
        total as f64 / 20_000.0
    };
    let (a, b, c) = (mean(100), mean(10_000), mean(1_000_000));
    assert!(a < b && b < c, "{a} {b} {c}");
}

/// Total-variation distance between sampled shapes and the exact law
/// proportional to the product of offspring probabilities.
fn conditioned_tv(offspring: &OffspringDist, n: usize, reps: usize, seed: u64) -> f64 {
    let shapes = enumerate_plane_trees(n);
    let weights: Vec<f64> = shapes
        .iter()
        .map(|t| t.iter().map(|&d| offspring.prob(d as usize)).product())
        .collect();
    let total: f64 = weights.iter().sum();
    let index: HashMap<Vec<u32>, usize> = shapes.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let sampler = ConditionedSampler::new(offspring, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; shapes.len()];
    for _ in 0..reps {
        counts[index[sampler.sample(&mut rng).degrees()]] += 1;
    }
    0.5 * counts
        .iter()
        .zip(&weights)
        .map(|(&c, &w)| (c as f64 / reps as f64 - w / total).abs())
        .sum::<f64>()
}

#[test]
fn conditioned_binary_matches_enumeration() {
    for n in [3, 5, 7, 9] {
        let tv = conditioned_tv(&OffspringDist::binary(), n, 1_000_000, n as u64);
        assert!(tv < 0.01, "n = {n}: TV {tv}");
    }
}

#[test]
fn conditioned_nonuniform_law_matches_enumeration() {
    let nu = OffspringDist::tilted_to_critical(vec![0.4, 0.1, 0.2, 0.3]).unwrap();
    let tv = conditioned_tv(&nu, 6, 1_000_000, 6);
    assert!(tv < 0.01, "TV {tv}");
}

#[test]
fn conditioned_binary_five_has_two_internal_vertices() {
    let m = binary();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let t = sample_gw_conditioned(&m, 5, &mut rng).unwrap();
        assert_eq!(t.degrees().iter().filter(|&&d| d == 2).count(), 2);
        assert_eq!(t.degrees().iter().filter(|&&d| d == 0).count(), 3);
    }
}

#[test]
fn conditioned_leaf_fraction_is_nu0() {
    let m = geometric();
    let sampler = ConditionedSampler::new(m.offspring(), 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let reps = 10_000;
    let fractions: Vec<f64> = (0..reps)
        .map(|_| sampler.sample(&mut rng).degrees().iter().filter(|&&d| d == 0).count() as f64 / 100.0)
        .collect();
    let mean = fractions.iter().sum::<f64>() / reps as f64;
    let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let se = (var / reps as f64).sqrt();
    // Uniform plane trees with n vertices have n / 2 leaves on average.
    assert!((mean - 0.5).abs() < 3.0 * se, "{mean}");
    assert!((mean - 0.5).abs() < 0.01);
}

#[test]
fn spine_degrees_are_size_biased() {
    let m = geometric();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let reps = 100_000;
    let mut counts = [0usize; 12];
    let mut too_big = 0;
    for _ in 0..reps {
        // The grafted trees have infinite mean size, so a few hit the cap.
        let Ok(st) = sample_spine_tree(&m, 5, &mut rng, 1_000_000) else {
            too_big += 1;
            continue;
        };
        let d = st.tree.degree(st.spine[2]);
        if d < counts.len() {
            counts[d] += 1;
        }
    }
    assert!(too_big < reps / 100);
    let kept = reps - too_big;
    for (k, &c) in counts.iter().enumerate().take(8) {
        let p = k as f64 * 0.5f64.powi(k as i32 + 1);
        assert!(within(c as f64 / kept as f64, p, kept, 3.0), "k = {k}");
    }
}

#[test]
fn spine_suffix_is_a_smaller_spine_tree() {
    let m = geometric();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let Ok(st) = sample_spine_tree(&m, 6, &mut rng, 1_000_000) else { continue };
        let sizes = st.tree.subtree_sizes();
        let depths = st.tree.depths();
        for (i, &v) in st.spine.iter().enumerate() {
            assert_eq!(depths[v], i);
            if i + 1 < st.spine.len() {
                let next = st.spine[i + 1];
                assert_eq!(st.tree.parent(next), Some(v));
                assert!(next < v + sizes[v]);
                assert!(st.tree.degree(v) >= 1);
            }
        }
        // The subtree of S_2 is a tree of height at least h - 2.
        let top = st.spine[2];
        let sub = PlaneTree::from_degrees(st.tree.degrees()[top..top + sizes[top]].to_vec()).unwrap();
        assert!(sub.height() >= st.spine.len() - 3);
    }
}

#[test]
fn arrivals_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let none = Model::new(OffspringDist::binary(), ArrivalFamily::uniform(Pmf::point_mass(0))).unwrap();
    let t = sample_gw_conditioned(&none, 101, &mut rng).unwrap();
    assert_eq!(sample_arrivals(&t, &none, &mut rng).total(), 0);

    let leaves = Model::new(OffspringDist::binary(), ArrivalFamily::leaf_only(Pmf::point_mass(2))).unwrap();
    let cars = sample_arrivals(&t, &leaves, &mut rng);
    for v in 0..t.len() {
        assert_eq!(cars.counts[v], if t.degree(v) == 0 { 2 } else { 0 });
    }

    let m = geometric();
    let n = 100_000;
    let t = sample_gw_conditioned(&m, n, &mut rng).unwrap();
    let total = sample_arrivals(&t, &m, &mut rng).total() as f64;
    let se = (0.325 / n as f64).sqrt();
    assert!((total / n as f64 - 0.325).abs() < 3.0 * se);
}

#[test]
fn same_seed_same_tree() {
    let m = geometric();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (
            sample_gw_conditioned(&m, 500, &mut rng).unwrap(),
            sample_spine_tree(&m, 10, &mut rng, 1_000_000).ok(),
        )
    };
    assert_eq!(draw(10), draw(10));
    assert_ne!(draw(10).0, draw(11).0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lukasiewicz_round_trip(seed in any::<u64>(), n in 1usize..400) {
        let m = geometric();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = sample_gw_conditioned(&m, n, &mut rng).unwrap();
        let walk = t.lukasiewicz();
        prop_assert_eq!(*walk.last().unwrap(), -1);
        prop_assert!(walk[..walk.len() - 1].iter().all(|&x| x >= 0));
        prop_assert_eq!(PlaneTree::from_lukasiewicz(&walk).unwrap(), t.clone());
        prop_assert_eq!(t.to_string().parse::<PlaneTree>().unwrap(), t);
    }

    #[test]
    fn unconditioned_trees_are_valid(seed in any::<u64>()) {
        let m = geometric();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..150 {
            if let Ok(t) = sample_gw(&m, &mut rng, 100_000) {
                let edges: usize = t.degrees().iter().map(|&d| d as usize).sum();
                prop_assert_eq!(edges + 1, t.len());
                prop_assert_eq!(PlaneTree::from_lukasiewicz(&t.lukasiewicz()).unwrap(), t);
            }
        }
    }
}
