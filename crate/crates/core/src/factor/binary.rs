//! Factoring a device into binary devices.
//!
//! Let `E = E_1 × ... × E_k` be a product of non-perfect minimal binary
//! devices. Its partitions are tuples `u = (u_1, ..., u_k)`, and since two
//! distinct two-block partitions always join to the top partition,
//! `|u ∨ v| = 2^(number of coordinates where u and v agree)`. So the graph
//! joining partitions that differ in one coordinate is a Hamming graph, and
//! its edges fall into one class per coordinate. From a class `c` we get the
//! partition `κ_c` that forgets coordinate `c`, and from those the partition
//! `λ_c` that remembers only coordinate `c`; the blocks of `λ_c` are the
//! states of the factor `E_c`.
//!
//! Perfect binary factors (`C_2`) are split off first: they are exactly what
//! keeps the join of all partitions from being the top partition.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;

use super::FactorError;
use crate::config::{Limits, SolverConfig};
use crate::device::Device;
use crate::minimize::minimize;
use crate::partition::{join_count, union_find::DisjointSet, GroundSet, Partition};
use crate::reduction::{decide_equivalence, ReductionError};

/// Splits a minimal device into binary factors, or returns `None` when it
/// is not a product of binary devices. The product of the returned factors
/// is checked to be equivalent to the input.
pub(crate) fn extract_factors(dm: &Device) -> Result<Option<Vec<Device>>, ReductionError> {
    let n = dm.num_states();
    if n == 1 {
        return Ok(Some(Vec::new()));
    }
    let Some(r) = dm.regularity().filter(|r| r.is_power_of_two() && *r >= 2) else {
        return Ok(None);
    };
    let m = r.trailing_zeros() as usize;
    let q = dm.join_of_partitions();
    if !q.num_blocks().is_power_of_two() {
        return Ok(None);
    }
    let perfect = q.num_blocks().trailing_zeros() as usize;
    if perfect > m {
        return Ok(None);
    }
    let mut factors: Vec<Device> = (0..perfect)
        .map(|_| Device::perfect(2).expect("2 >= 1"))
        .collect();
    if perfect < m {
        let e = restrict(dm, &q.blocks()[0]);
        if e.regularity() != Some(1 << (m - perfect)) {
            return Ok(None);
        }
        match split_nonperfect(&e, m - perfect) {
            Some(parts) => factors.extend(parts),
            None => return Ok(None),
        }
    }
    let product = Device::product_all(&factors, &Limits {
        product_max_states: usize::MAX,
        ..Limits::default()
    })?;
    if product.num_states() != n {
        return Ok(None);
    }
    let check = SolverConfig::default();
    Ok(decide_equivalence(dm, &product, &check)?
        .is_equivalent()
        .then_some(factors))
}

/// The device seen on a subset of states, listed in increasing order.
fn restrict(d: &Device, states: &[usize]) -> Device {
    let ground = Arc::new(
        GroundSet::new(states.iter().map(|&x| d.states().label(x).to_string()))
            .expect("subset labels are distinct"),
    );
    let parts = d
        .partitions()
        .iter()
        .map(|p| {
            let keys: Vec<u32> = states.iter().map(|&x| p.block_ids()[x]).collect();
            Partition::from_keys(ground.clone(), &keys, p.num_blocks())
        })
        .collect();
    Device::new(d.name().map(str::to_string), ground, parts).expect("restriction keeps partitions")
}

/// Splits a `2^k`-regular device whose join is the top partition into `k`
/// binary factors, following the coordinate classes of the Hamming graph.
fn split_nonperfect(e: &Device, k: usize) -> Option<Vec<Device>> {
    let ps = e.partitions();
    let p = ps.len();
    let joins = |a: usize, b: usize| {
        join_count(
            ps[a].block_ids(),
            ps[a].num_blocks(),
            ps[b].block_ids(),
            ps[b].num_blocks(),
        )
    };
    // distance[a][b] = number of coordinates where the tuples differ.
    let mut distance = vec![vec![0usize; p]; p];
    for a in 0..p {
        for b in a + 1..p {
            let joined = joins(a, b);
            if !joined.is_power_of_two() {
                return None;
            }
            let agree = joined.trailing_zeros() as usize;
            distance[a][b] = k.checked_sub(agree)?;
            distance[b][a] = distance[a][b];
        }
    }
    let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
    for a in 0..p {
        for b in a + 1..p {
            if distance[a][b] == 1 {
                let next = edge_id.len();
                edge_id.insert((a, b), next);
            }
        }
    }
    if edge_id.is_empty() {
        return (k == 1).then(|| vec![e.clone()]);
    }
    let edge = |a: usize, b: usize| edge_id[&(a.min(b), a.max(b))];
    let mut classes = DisjointSet::new(edge_id.len());
    for a in 0..p {
        for b in a + 1..p {
            let common: Vec<usize> = (0..p)
                .filter(|&v| distance[a][v] == 1 && distance[b][v] == 1)
                .collect();
            match distance[a][b] {
                1 => {
                    for &v in &common {
                        classes.union(edge(a, b), edge(a, v));
                        classes.union(edge(a, b), edge(v, b));
                    }
                }
                2 => {
                    if common.len() != 2 {
                        return None;
                    }
                    let (v, x) = (common[0], common[1]);
                    classes.union(edge(a, v), edge(x, b));
                    classes.union(edge(v, b), edge(a, x));
                }
                _ => {}
            }
        }
    }
    let mut by_class: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    let mut ordered: Vec<(usize, usize)> = edge_id.keys().copied().collect();
    ordered.sort_unstable();
    let mut class_order = Vec::new();
    for &(a, b) in &ordered {
        let c = classes.find(edge(a, b));
        by_class
            .entry(c)
            .or_insert_with(|| {
                class_order.push(c);
                Vec::new()
            })
            .push((a, b));
    }
    if class_order.len() != k {
        return None;
    }
    let ground = e.states().clone();
    let kappas: Vec<Partition> = class_order
        .iter()
        .map(|c| {
            by_class[c].iter().fold(Partition::top(ground.clone()), |acc, &(a, b)| {
                acc.meet_unchecked(&ps[a].join_unchecked(&ps[b]))
            })
        })
        .collect();
    let mut factors = Vec::with_capacity(k);
    for c in 0..k {
        let lambda = if k == 1 {
            Partition::identity(ground.clone())
        } else {
            (0..k)
                .filter(|&o| o != c)
                .fold(Partition::identity(ground.clone()), |acc, o| acc.join_unchecked(&kappas[o]))
        };
        factors.push(quotient(e, &lambda));
    }
    Some(factors)
}

/// The device induced on the blocks of `lambda`: each block becomes a state
/// (named after its first member) and each partition `u` becomes `u ∨ λ`
/// read on those blocks.
fn quotient(e: &Device, lambda: &Partition) -> Device {
    let reps: Vec<usize> = lambda.blocks().iter().map(|b| b[0]).collect();
    let ground = Arc::new(
        GroundSet::new(reps.iter().map(|&x| e.states().label(x).to_string()))
            .expect("representative labels are distinct"),
    );
    let parts = e
        .partitions()
        .iter()
        .map(|u| {
            let joined = u.join_unchecked(lambda);
            let keys: Vec<u32> = reps.iter().map(|&x| joined.block_ids()[x]).collect();
            Partition::from_keys(ground.clone(), &keys, joined.num_blocks())
        })
        .collect();
    Device::new(None, ground, parts).expect("quotient keeps partitions")
}

/// Factors `d` into binary devices, up to equivalence.
///
/// Returns `None` when `d` is not equivalent to any product of binary
/// devices.
pub fn factor_binary(d: &Device) -> Result<Option<Vec<Device>>, FactorError> {
    Ok(extract_factors(&minimize(d).device)?)
}

/// Outcome of searching all binary factorizations with small factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorAudit {
    /// Every factor size in the factorization is within the enumeration cap,
    /// so the search covered all binary factorizations.
    pub complete: bool,
    /// Candidate products compared with the device.
    pub candidates_checked: usize,
    /// Candidate products equivalent to the device.
    pub factorizations_found: usize,
    /// Every factorization found matches the extracted one factor by factor.
    pub unique: bool,
}

/// [`factor_binary`], followed by an exhaustive search over products of
/// candidate binary devices with at most `cap` states each.
pub fn factor_binary_audited(
    d: &Device,
    cap: usize,
    config: &SolverConfig,
) -> Result<Option<(Vec<Device>, FactorAudit)>, FactorError> {
    let dm = minimize(d).device;
    let Some(factors) = extract_factors(&dm)? else {
        return Ok(None);
    };
    let mut sizes: Vec<usize> = factors.iter().map(Device::num_states).collect();
    sizes.sort_unstable();
    let complete = sizes.iter().all(|&s| s <= cap);
    let perfect = factors.iter().filter(|f| f.is_perfect()).count();
    let mut pool: HashMap<usize, Vec<Device>> = HashMap::new();
    for s in 2..=cap.min(dm.num_states()) {
        pool.insert(s, binary_candidates(s)?);
    }
    let mut audit = FactorAudit {
        complete,
        candidates_checked: 0,
        factorizations_found: 0,
        unique: true,
    };
    let n = dm.num_states();
    let limits = Limits {
        product_max_states: usize::MAX,
        ..Limits::default()
    };
    for split in splittings(n, factors.len(), cap) {
        if split.iter().filter(|&&s| s == 2).count() != perfect {
            continue;
        }
        for choice in multiset_choices(&split, &pool) {
            let picked: Vec<Device> = choice.iter().map(|&(s, i)| pool[&s][i].clone()).collect();
            let count: usize = picked.iter().map(Device::num_partitions).product();
            if count != dm.num_partitions() {
                continue;
            }
            audit.candidates_checked += 1;
            let product = Device::product_all(&picked, &limits)?;
            if !decide_equivalence(&dm, &product, config)?.is_equivalent() {
                continue;
            }
            audit.factorizations_found += 1;
            if !same_factors(&picked, &factors, config)? {
                audit.unique = false;
            }
        }
    }
    Ok(Some((factors, audit)))
}

/// True iff the two lists match under some permutation with equivalent
/// factors in matched positions.
fn same_factors(a: &[Device], b: &[Device], config: &SolverConfig) -> Result<bool, FactorError> {
    if a.len() != b.len() {
        return Ok(false);
    }
    let mut taken = vec![false; b.len()];
    fn go(
        i: usize,
        a: &[Device],
        b: &[Device],
        taken: &mut [bool],
        config: &SolverConfig,
    ) -> Result<bool, FactorError> {
        if i == a.len() {
            return Ok(true);
        }
        for j in 0..b.len() {
            if !taken[j] && decide_equivalence(&a[i], &b[j], config)?.is_equivalent() {
                taken[j] = true;
                if go(i + 1, a, b, taken, config)? {
                    return Ok(true);
                }
                taken[j] = false;
            }
        }
        Ok(false)
    }
    go(0, a, b, &mut taken, config)
}

/// Non-decreasing lists of `count` factors in `2..=cap` multiplying to `n`.
fn splittings(n: usize, count: usize, cap: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, count: usize, min: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if count == 0 {
            if n == 1 {
                out.push(cur.clone());
            }
            return;
        }
        for s in min..=cap.min(n) {
            if n % s == 0 {
                cur.push(s);
                go(n / s, count - 1, s, cap, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(n, count, 2, cap, &mut Vec::new(), &mut out);
    out
}

/// For a sorted list of sizes, every choice of candidates with repeated
/// sizes taking non-decreasing candidate indices.
fn multiset_choices(split: &[usize], pool: &HashMap<usize, Vec<Device>>) -> Vec<Vec<(usize, usize)>> {
    fn go(
        k: usize,
        split: &[usize],
        pool: &HashMap<usize, Vec<Device>>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if k == split.len() {
            out.push(cur.clone());
            return;
        }
        let s = split[k];
        let start = match cur.last() {
            Some(&(prev, i)) if prev == s => i,
            _ => 0,
        };
        for i in start..pool.get(&s).map_or(0, Vec::len) {
            cur.push((s, i));
            go(k + 1, split, pool, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, split, pool, &mut Vec::new(), &mut out);
    out
}

/// All minimal binary devices on `s` states, one per equivalence class.
///
/// Enumerates families of two-block partitions whose meet is the identity
/// and keeps one family per orbit of the state permutations.
pub fn binary_candidates(s: usize) -> Result<Vec<Device>, FactorError> {
    if !(2..=6).contains(&s) {
        return Err(FactorError::InvalidParameter(format!(
            "binary candidates are enumerated for 2 to 6 states, not {s}"
        )));
    }
    let ground = Arc::new(GroundSet::numbered(s).expect("s >= 1"));
    // Two-block partitions as bit masks of the block not containing state 0.
    let masks: Vec<u32> = (1..1u32 << (s - 1)).map(|m| m << 1).collect();
    let perms = permutations(s);
    let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut out = Vec::new();
    for family in 1u64..1 << masks.len() {
        let chosen: Vec<u32> = (0..masks.len())
            .filter(|&i| family >> i & 1 == 1)
            .map(|i| masks[i])
            .collect();
        let separates = (0..s).all(|x| {
            (x + 1..s).all(|y| chosen.iter().any(|&m| (m >> x & 1) != (m >> y & 1)))
        });
        if !separates {
            continue;
        }
        let canon = perms
            .iter()
            .map(|perm| {
                let mut moved: Vec<u32> = chosen.iter().map(|&m| normalize(permute(m, perm), s)).collect();
                moved.sort_unstable();
                moved
            })
            .min()
            .expect("at least one permutation");
        if !seen.insert(canon) {
            continue;
        }
        let parts = chosen
            .iter()
            .map(|&m| {
                let keys: Vec<u32> = (0..s).map(|x| m >> x & 1).collect();
                Partition::from_keys(ground.clone(), &keys, 2)
            })
            .collect();
        out.push(Device::new(None, ground.clone(), parts)?);
    }
    Ok(out)
}

fn permute(mask: u32, perm: &[usize]) -> u32 {
    perm.iter()
        .enumerate()
        .fold(0, |acc, (x, &y)| acc | ((mask >> x & 1) << y))
}

/// The same two-block partition, written so that state 0 is not in the mask.
fn normalize(mask: u32, s: usize) -> u32 {
    if mask & 1 == 1 {
        !mask & ((1 << s) - 1)
    } else {
        mask
    }
}

fn permutations(s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..s).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            let j = if k % 2 == 0 { i } else { 0 };
            cur.swap(j, k - 1);
        }
    }
    heap(s, &mut cur, &mut out);
    out
}
