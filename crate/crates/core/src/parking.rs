//! The parking process on a decorated plane tree.
//!
//! Cars arrive on vertices and drive toward the root, stopping at the first
//! free vertex. By the Abelian property the outcome does not depend on the
//! order of the cars, so the main engine is a single reverse depth-first pass
//! of `X_v = L_v + sum_children (X_c - 1)_+`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::treegen::{CarAssignment, PlaneTree};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParkingResult {
    /// Cars visiting each vertex (`X_v`).
    pub visits: Vec<u64>,
    pub parked: Vec<bool>,
    /// Cars crossing the edge from each vertex to its parent. The root has no
    /// parent edge; its entry is 0 and the exiting cars are `root_flux`.
    pub edge_flux: Vec<u64>,
    pub root_flux: u64,
}

impl ParkingResult {
    pub fn parked_count(&self) -> usize {
        self.parked.iter().filter(|&&p| p).count()
    }
}

fn check_aligned(tree: &PlaneTree, arrivals: &CarAssignment) -> Result<()> {
    if arrivals.len() != tree.len() {
        return Err(Error::LengthMismatch {
            expected: tree.len(),
            got: arrivals.len(),
        });
    }
    Ok(())
}

pub fn park(tree: &PlaneTree, arrivals: &CarAssignment) -> Result<ParkingResult> {
    check_aligned(tree, arrivals)?;
    let parents = tree.parents();
    let mut visits = arrivals.counts.clone();
    let mut edge_flux = vec![0u64; tree.len()];
    // Children always come after their parent in depth-first order.
    for v in (1..tree.len()).rev() {
        let out = visits[v].saturating_sub(1);
        edge_flux[v] = out;
        visits[parents[v]] += out;
    }
    let root_flux = visits[0].saturating_sub(1);
    let parked: Vec<bool> = visits.iter().map(|&x| x >= 1).collect();
    let result = ParkingResult {
        visits,
        parked,
        edge_flux,
        root_flux,
    };
    debug_assert_eq!(
        arrivals.total(),
        result.root_flux + result.parked_count() as u64,
        "conservation of cars"
    );
    Ok(result)
}

/// Owner vertex of each car token: cars are numbered vertex by vertex in
/// depth-first order.
pub fn car_owners(arrivals: &CarAssignment) -> Vec<usize> {
    let mut owners = Vec::with_capacity(arrivals.total() as usize);
    for (v, &c) in arrivals.counts.iter().enumerate() {
        owners.extend(std::iter::repeat_n(v, c as usize));
    }
    owners
}

/// Drives the cars one at a time in the given order of car tokens (see
/// [`car_owners`] for the numbering).
pub fn park_sequential(tree: &PlaneTree, arrivals: &CarAssignment, order: &[usize]) -> Result<ParkingResult> {
    check_aligned(tree, arrivals)?;
    let owners = car_owners(arrivals);
    if order.len() != owners.len() {
        return Err(Error::LengthMismatch {
            expected: owners.len(),
            got: order.len(),
        });
    }
    let mut seen = vec![false; owners.len()];
    for &car in order {
        if car >= owners.len() || std::mem::replace(&mut seen[car], true) {
            return Err(Error::InvalidOrder(format!("token {car}")));
        }
    }
    let n = tree.len();
    let mut visits = vec![0u64; n];
    let mut parked = vec![false; n];
    let mut edge_flux = vec![0u64; n];
    let mut root_flux = 0;
    for &car in order {
        let mut v = owners[car];
        loop {
            visits[v] += 1;
            if !parked[v] {
                parked[v] = true;
                break;
            }
            match tree.parent(v) {
                Some(p) => {
                    edge_flux[v] += 1;
                    v = p;
                }
                None => {
                    root_flux += 1;
                    break;
                }
            }
        }
    }
    Ok(ParkingResult {
        visits,
        parked,
        edge_flux,
        root_flux,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterStats {
    /// Component sizes, largest first.
    pub sizes: Vec<usize>,
    pub c_max: usize,
    pub c_2: usize,
}

impl ClusterStats {
    pub fn from_sizes(mut sizes: Vec<usize>) -> Self {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let c_max = sizes.first().copied().unwrap_or(0);
        let c_2 = sizes.get(1).copied().unwrap_or(0);
        Self { sizes, c_max, c_2 }
    }
}

/// Connected components of the parked vertices.
pub fn clusters(tree: &PlaneTree, parked: &[bool]) -> Result<ClusterStats> {
    if parked.len() != tree.len() {
        return Err(Error::LengthMismatch {
            expected: tree.len(),
            got: parked.len(),
        });
    }
    let parents = tree.parents();
    let mut component = vec![usize::MAX; tree.len()];
    let mut sizes = Vec::new();
    for v in 0..tree.len() {
        if !parked[v] {
            continue;
        }
        let id = match tree.parent(v) {
            Some(p) if parked[p] => component[parents[v]],
            _ => {
                sizes.push(0);
                sizes.len() - 1
            }
        };
        component[v] = id;
        sizes[id] += 1;
    }
    Ok(ClusterStats::from_sizes(sizes))
}
