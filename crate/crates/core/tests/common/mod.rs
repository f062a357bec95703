//! Generators and brute-force oracles shared by the integration tests.
//!
//! The oracles work on raw block ids and never call the solver, so they can
//! be used to check it.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use asd::graph::Graph;
use asd::{Device, GroundSet, Limits, Partition, Reduction};
use proptest::prelude::*;
use rand::Rng;

pub fn ground(n: usize) -> Arc<GroundSet> {
    Arc::new(GroundSet::numbered(n).unwrap())
}

pub fn partition(g: &Arc<GroundSet>, keys: &[u32]) -> Partition {
    Partition::kernel(g.clone(), keys).unwrap()
}

pub fn device(n: usize, reads: &[Vec<u32>]) -> Device {
    let g = ground(n);
    let parts = reads.iter().map(|k| partition(&g, k)).collect();
    Device::new(None, g, parts).unwrap()
}

pub fn lin(n: usize) -> Device {
    Device::linear(n, 1, &Limits::default()).unwrap()
}

pub fn prod(ds: &[Device]) -> Device {
    Device::product_all(ds, &Limits::default()).unwrap()
}

// ---- random generation --------------------------------------------------

pub fn random_keys<R: Rng>(rng: &mut R, n: usize) -> Vec<u32> {
    let blocks = rng.gen_range(1..=n) as u32;
    (0..n).map(|_| rng.gen_range(0..blocks)).collect()
}

/// A device with `1..=max_states` states and `1..=max_parts` reads.
pub fn random_device<R: Rng>(rng: &mut R, max_states: usize, max_parts: usize) -> Device {
    let n = rng.gen_range(1..=max_states);
    let p = rng.gen_range(1..=max_parts);
    let reads: Vec<Vec<u32>> = (0..p).map(|_| random_keys(rng, n)).collect();
    device(n, &reads)
}

/// A random state-minimal device: reads are drawn until they separate states.
pub fn random_minimal_device<R: Rng>(rng: &mut R, max_states: usize, max_parts: usize) -> Device {
    loop {
        let d = random_device(rng, max_states, max_parts);
        if meet_blocks(d.partitions()) == d.num_states() {
            return d;
        }
    }
}

/// A binary (every read has two blocks), non-perfect, state-minimal device on
/// `n` states.
pub fn random_binary_factor<R: Rng>(rng: &mut R, n: usize) -> Device {
    loop {
        let p = rng.gen_range(2..=6);
        let reads: Vec<Vec<u32>> = (0..p)
            .map(|_| loop {
                let keys: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
                if keys.contains(&0) && keys.contains(&1) {
                    break keys;
                }
            })
            .collect();
        let d = device(n, &reads);
        let perfect = d.partitions().iter().any(|q| q.num_blocks() == n);
        if !perfect && meet_blocks(d.partitions()) == n {
            return d;
        }
    }
}

/// The same device with its states renamed by a random permutation.
pub fn shuffled<R: Rng>(rng: &mut R, d: &Device) -> Device {
    let n = d.num_states();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let reads: Vec<Vec<u32>> = d
        .partitions()
        .iter()
        .map(|q| (0..n).map(|x| q.block_ids()[perm[x]]).collect())
        .collect();
    device(n, &reads)
}

pub fn arb_keys(max_n: usize) -> impl Strategy<Value = (usize, Vec<u32>)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec(0..n as u32, n)))
}

pub fn arb_device(max_states: usize, max_parts: usize) -> impl Strategy<Value = Device> {
    (1..=max_states)
        .prop_flat_map(move |n| {
            prop::collection::vec(prop::collection::vec(0..n as u32, n), 1..=max_parts)
                .prop_map(move |reads| device(n, &reads))
        })
}

pub fn arb_minimal_device(max_states: usize, max_parts: usize) -> impl Strategy<Value = Device> {
    arb_device(max_states, max_parts).prop_filter("state-minimal", |d| {
        meet_blocks(d.partitions()) == d.num_states()
    })
}

/// A random connected graph on `n` vertices: a random spanning tree plus
/// extra edges kept with probability `density`.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> Graph {
    let mut edges = HashSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.insert((u, v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                edges.insert((u, v));
            }
        }
    }
    let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
    edges.sort();
    Graph::from_indices(n, &edges).unwrap()
}

// ---- oracles ------------------------------------------------------------

/// Number of blocks of the meet of `parts`, by grouping states on their
/// tuple of block ids.
pub fn meet_blocks(parts: &[Partition]) -> usize {
    let Some(first) = parts.first() else {
        return 1;
    };
    let n = first.len();
    let tuples: HashSet<Vec<u32>> = (0..n)
        .map(|x| parts.iter().map(|q| q.block_ids()[x]).collect())
        .collect();
    tuples.len()
}

/// `rho ∘ phi ⪯ pi`: states with the same `rho` block under `phi` share a
/// `pi` block.
pub fn pulled_refines(rho: &Partition, phi: &[usize], pi: &Partition) -> bool {
    let mut seen: HashMap<u32, u32> = HashMap::new();
    phi.iter().enumerate().all(|(x, &y)| {
        let key = rho.block_ids()[y];
        *seen.entry(key).or_insert(pi.block_ids()[x]) == pi.block_ids()[x]
    })
}

/// Direct check of the reduction condition.
pub fn verify(d: &Device, e: &Device, r: &Reduction) -> bool {
    r.phi.len() == d.num_states()
        && r.alpha.len() == d.num_partitions()
        && r.phi.iter().all(|&y| y < e.num_states())
        && r.alpha.iter().all(|&j| j < e.num_partitions())
        && d.partitions()
            .iter()
            .zip(&r.alpha)
            .all(|(pi, &j)| pulled_refines(&e.partitions()[j], &r.phi, pi))
}

/// Exhaustive search over all `|S(E)|^|S(D)|` state maps.
pub fn reduces(d: &Device, e: &Device) -> Option<Reduction> {
    let n = d.num_states();
    let m = e.num_states();
    let mut phi = vec![0usize; n];
    loop {
        let alpha: Option<Vec<usize>> = d
            .partitions()
            .iter()
            .map(|pi| e.partitions().iter().position(|rho| pulled_refines(rho, &phi, pi)))
            .collect();
        if let Some(alpha) = alpha {
            return Some(Reduction { phi, alpha });
        }
        let mut i = n;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            phi[i] += 1;
            if phi[i] < m {
                break;
            }
            phi[i] = 0;
        }
    }
}

pub fn capacity(d: &Device) -> f64 {
    let r = d.partitions().iter().map(Partition::num_blocks).max().unwrap();
    (r as f64).log2()
}

pub fn sigma(d: &Device) -> f64 {
    (meet_blocks(d.partitions()) as f64).log2()
}

/// Smallest number of reads whose meet separates all states, trying
/// subsets in increasing size; `None` when the device is not state-minimal.
pub fn perfectness_index(d: &Device) -> Option<usize> {
    let n = d.num_states();
    if meet_blocks(d.partitions()) != n {
        return None;
    }
    if n == 1 {
        return Some(1);
    }
    fn any_subset(parts: &[Partition], start: usize, left: usize, picked: &mut Vec<Partition>, n: usize) -> bool {
        if left == 0 {
            return meet_blocks(picked) == n;
        }
        (start..parts.len()).any(|i| {
            picked.push(parts[i].clone());
            let hit = any_subset(parts, i + 1, left - 1, picked, n);
            picked.pop();
            hit
        })
    }
    (1..=d.num_partitions()).find(|&k| any_subset(d.partitions(), 0, k, &mut Vec::new(), n))
}

pub fn is_clique(g: &Graph, vs: &[usize]) -> bool {
    let distinct: HashSet<usize> = vs.iter().copied().collect();
    distinct.len() == vs.len()
        && vs.iter().all(|&v| v < g.num_vertices())
        && vs
            .iter()
            .enumerate()
            .all(|(i, &u)| vs[i + 1..].iter().all(|&v| g.has_edge(u, v)))
}

/// Exhaustive clique test over all vertex subsets.
pub fn has_clique(g: &Graph, k: usize) -> bool {
    let n = g.num_vertices();
    (0u32..1 << n).any(|mask| {
        mask.count_ones() as usize == k && {
            let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            is_clique(g, &vs)
        }
    })
}

pub fn is_isomorphism(g: &Graph, h: &Graph, phi: &[usize]) -> bool {
    let image: HashSet<usize> = phi.iter().copied().collect();
    g.num_vertices() == h.num_vertices()
        && phi.len() == g.num_vertices()
        && image.len() == phi.len()
        && g.num_edges() == h.num_edges()
        && g.edges().all(|(u, v)| h.has_edge(phi[u], phi[v]))
}

pub fn degree_sequence(g: &Graph) -> Vec<usize> {
    let mut seq: Vec<usize> = (0..g.num_vertices()).map(|v| g.degree(v)).collect();
    seq.sort_unstable();
    seq
}
