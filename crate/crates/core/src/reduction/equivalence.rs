use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{verify_reduction, Reduction, ReductionError};
use crate::config::SolverConfig;
use crate::device::Device;
use crate::invariants::{poly_signature, SignatureDiff};
use crate::minimize::{is_partition_minimal, is_state_minimal, minimize};
use crate::partition::{GroundSet, Partition};

/// Why two devices are not equivalent.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NotEquivalent {
    StateCount { left: usize, right: usize },
    PartitionCount { left: usize, right: usize },
    Signature { certificate: SignatureDiff },
    /// Colour refinement of the states ends with different colour counts.
    Refinement,
    /// The search found no bijection.
    NoBijection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceOutcome {
    Equivalent {
        forward: Reduction,
        backward: Reduction,
    },
    NotEquivalent(NotEquivalent),
}

impl EquivalenceOutcome {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceOutcome::Equivalent { .. })
    }
}

/// Decides `d ≡ e`, returning reductions in both directions between the
/// original devices.
///
/// Both devices are minimized first. Minimal devices are equivalent exactly
/// when a bijection of states carries every partition of one onto a
/// partition of the other, and that is what is searched for.
pub fn decide_equivalence(
    d: &Device,
    e: &Device,
    config: &SolverConfig,
) -> Result<EquivalenceOutcome, ReductionError> {
    let dm = minimize(d);
    let em = minimize(e);
    let (a, b) = (&dm.device, &em.device);
    if a.num_states() != b.num_states() {
        return Ok(EquivalenceOutcome::NotEquivalent(NotEquivalent::StateCount {
            left: a.num_states(),
            right: b.num_states(),
        }));
    }
    if a.num_partitions() != b.num_partitions() {
        return Ok(EquivalenceOutcome::NotEquivalent(NotEquivalent::PartitionCount {
            left: a.num_partitions(),
            right: b.num_partitions(),
        }));
    }
    if config.signature_depth > 0 {
        let sa = poly_signature(a, config.signature_depth);
        let sb = poly_signature(b, config.signature_depth);
        if let (Ok(sa), Ok(sb)) = (sa, sb) {
            if let Some(certificate) = sa.first_difference(&sb) {
                return Ok(EquivalenceOutcome::NotEquivalent(NotEquivalent::Signature {
                    certificate,
                }));
            }
        }
    }
    let Some((ca, cb)) = joint_refinement(a, b) else {
        return Ok(EquivalenceOutcome::NotEquivalent(NotEquivalent::Refinement));
    };
    let Some(iso) = search_bijection(a, b, &ca, &cb, config.node_budget)? else {
        return Ok(EquivalenceOutcome::NotEquivalent(NotEquivalent::NoBijection));
    };
    let inverse = invert(&iso);
    let forward = dm.to_min.then(&iso).then(&em.from_min);
    let backward = em.to_min.then(&inverse).then(&dm.from_min);
    assert!(verify_reduction(d, e, &forward)?, "forward witness failed");
    assert!(verify_reduction(e, d, &backward)?, "backward witness failed");
    Ok(EquivalenceOutcome::Equivalent { forward, backward })
}

fn invert(r: &Reduction) -> Reduction {
    let mut phi = vec![0; r.phi.len()];
    for (x, &y) in r.phi.iter().enumerate() {
        phi[y] = x;
    }
    let mut alpha = vec![0; r.alpha.len()];
    for (i, &j) in r.alpha.iter().enumerate() {
        alpha[j] = i;
    }
    Reduction { phi, alpha }
}

/// Colour refinement run on both devices with a shared colour table.
///
/// A state's colour is repeatedly replaced by its old colour together with
/// the multiset, over partitions, of the colour multisets of its blocks.
/// Returns `None` when the colour histograms diverge.
fn joint_refinement(a: &Device, b: &Device) -> Option<(Vec<u32>, Vec<u32>)> {
    let mut table: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut intern = |key: Vec<u32>| {
        let next = table.len() as u32;
        *table.entry(key).or_insert(next)
    };
    let mut ca = vec![0u32; a.num_states()];
    let mut cb = vec![0u32; b.num_states()];
    let mut classes = 1;
    loop {
        let na = refine_step(a, &ca, &mut intern);
        let nb = refine_step(b, &cb, &mut intern);
        if histogram(&na) != histogram(&nb) {
            return None;
        }
        let count = histogram(&na).len();
        ca = na;
        cb = nb;
        if count == classes {
            return Some((ca, cb));
        }
        classes = count;
    }
}

fn refine_step(d: &Device, colors: &[u32], intern: &mut impl FnMut(Vec<u32>) -> u32) -> Vec<u32> {
    let mut per_state: Vec<Vec<u32>> = vec![Vec::new(); d.num_states()];
    for p in d.partitions() {
        for block in p.blocks() {
            let mut key: Vec<u32> = block.iter().map(|&x| colors[x]).collect();
            key.sort_unstable();
            let id = intern(key);
            for &x in block {
                per_state[x].push(id);
            }
        }
    }
    per_state
        .into_iter()
        .enumerate()
        .map(|(x, mut ids)| {
            ids.sort_unstable();
            ids.push(u32::MAX);
            ids.push(colors[x]);
            intern(ids)
        })
        .collect()
}

fn histogram(colors: &[u32]) -> std::collections::BTreeMap<u32, usize> {
    let mut h = std::collections::BTreeMap::new();
    for &c in colors {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

const UNSET: u32 = u32::MAX;

enum Undo {
    Fwd(usize),
    Bwd(usize),
    Kill(usize, usize),
}

struct Bijection<'a> {
    a: &'a Device,
    b: &'a Device,
    order: Vec<usize>,
    candidates: Vec<Vec<usize>>,
    q_count: usize,
    fwd_base: Vec<usize>,
    fwd: Vec<u32>,
    bwd_base: Vec<usize>,
    bwd: Vec<u32>,
    alive: Vec<Vec<u32>>,
    alive_len: Vec<usize>,
    /// For each target partition, how many sources still accept it.
    support: Vec<usize>,
    used: Vec<bool>,
    phi: Vec<usize>,
    trail: Vec<Undo>,
    explored: u64,
    budget: u64,
}

/// Searches for a state bijection `phi` between minimal devices such that
/// every partition of `a` is the pullback of a partition of `b`.
fn search_bijection(
    a: &Device,
    b: &Device,
    ca: &[u32],
    cb: &[u32],
    budget: u64,
) -> Result<Option<Reduction>, ReductionError> {
    debug_assert!(is_state_minimal(a) && is_partition_minimal(a));
    let n = a.num_states();
    let (p_count, q_count) = (a.num_partitions(), b.num_partitions());
    // Rarest colours first, then declaration order.
    let mut class_size: HashMap<u32, usize> = HashMap::new();
    for &c in ca {
        *class_size.entry(c).or_default() += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&x| (class_size[&ca[x]], x));
    let candidates = (0..n)
        .map(|x| (0..n).filter(|&y| cb[y] == ca[x]).collect())
        .collect();
    let mut fwd_base = Vec::new();
    let mut bwd_base = Vec::new();
    let (mut fl, mut bl) = (0, 0);
    for p in a.partitions() {
        for q in b.partitions() {
            fwd_base.push(fl);
            fl += p.num_blocks();
            bwd_base.push(bl);
            bl += q.num_blocks();
        }
    }
    let mut s = Bijection {
        a,
        b,
        order,
        candidates,
        q_count,
        fwd_base,
        fwd: vec![UNSET; fl],
        bwd_base,
        bwd: vec![UNSET; bl],
        alive: (0..p_count)
            .map(|p| {
                (0..q_count as u32)
                    .filter(|&q| {
                        a.partitions()[p].num_blocks() == b.partitions()[q as usize].num_blocks()
                    })
                    .collect()
            })
            .collect(),
        alive_len: vec![0; p_count],
        support: vec![0; q_count],
        used: vec![false; n],
        phi: vec![0; n],
        trail: Vec::new(),
        explored: 0,
        budget,
    };
    for p in 0..p_count {
        s.alive_len[p] = s.alive[p].len();
        for &q in &s.alive[p] {
            s.support[q as usize] += 1;
        }
    }
    if s.alive_len.contains(&0) || s.support.contains(&0) {
        return Ok(None);
    }
    if !s.descend(0)? {
        return Ok(None);
    }
    let alpha = (0..p_count)
        .map(|p| {
            s.alive[p][..s.alive_len[p]]
                .iter()
                .copied()
                .find(|&q| b.partitions()[q as usize].pullback(a.states().clone(), &s.phi).ok().as_ref() == Some(&a.partitions()[p]))
                .expect("a complete bijection matches every partition") as usize
        })
        .collect();
    Ok(Some(Reduction { phi: s.phi, alpha }))
}

impl Bijection<'_> {
    fn descend(&mut self, depth: usize) -> Result<bool, ReductionError> {
        if depth == self.order.len() {
            return Ok(true);
        }
        let x = self.order[depth];
        for i in 0..self.candidates[x].len() {
            let y = self.candidates[x][i];
            if self.used[y] {
                continue;
            }
            self.explored += 1;
            if self.explored > self.budget {
                return Err(ReductionError::SearchBudgetExceeded {
                    explored: self.explored,
                });
            }
            let mark = self.trail.len();
            if self.assign(x, y) {
                self.used[y] = true;
                self.phi[x] = y;
                if self.descend(depth + 1)? {
                    return Ok(true);
                }
                self.used[y] = false;
            }
            self.undo(mark);
        }
        Ok(false)
    }

    fn assign(&mut self, x: usize, y: usize) -> bool {
        let (a, b) = (self.a, self.b);
        for (p, pi) in a.partitions().iter().enumerate() {
            let pb = pi.block_ids()[x] as usize;
            let mut i = 0;
            while i < self.alive_len[p] {
                let q = self.alive[p][i] as usize;
                let target = &b.partitions()[q];
                let qb = target.block_ids()[y] as usize;
                let pair = p * self.q_count + q;
                let fslot = self.fwd_base[pair] + pb;
                let bslot = self.bwd_base[pair] + qb;
                let ok = match (self.fwd[fslot], self.bwd[bslot]) {
                    (UNSET, UNSET) => {
                        if pi.blocks()[pb].len() == target.blocks()[qb].len() {
                            self.fwd[fslot] = qb as u32;
                            self.bwd[bslot] = pb as u32;
                            self.trail.push(Undo::Fwd(fslot));
                            self.trail.push(Undo::Bwd(bslot));
                            true
                        } else {
                            false
                        }
                    }
                    (f, bw) => f == qb as u32 && bw == pb as u32,
                };
                if ok {
                    i += 1;
                    continue;
                }
                let last = self.alive_len[p] - 1;
                self.alive[p].swap(i, last);
                self.alive_len[p] = last;
                self.support[q] -= 1;
                self.trail.push(Undo::Kill(p, q));
                if last == 0 || self.support[q] == 0 {
                    return false;
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().expect("trail is longer than mark") {
                Undo::Fwd(slot) => self.fwd[slot] = UNSET,
                Undo::Bwd(slot) => self.bwd[slot] = UNSET,
                Undo::Kill(p, q) => {
                    self.alive_len[p] += 1;
                    self.support[q] += 1;
                }
            }
        }
    }
}

/// A uniformly random relabelling of the minimal form of `d`, with a
/// reduction from `d` to it.
///
/// States of the result are named `r0, r1, ...`; the permutation is drawn
/// from a ChaCha8 stream seeded with `seed`.
pub fn random_equivalent(d: &Device, seed: u64) -> (Device, Reduction) {
    let m = minimize(d);
    let min = &m.device;
    let n = min.num_states();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let ground = Arc::new(
        GroundSet::new((0..n).map(|i| format!("r{i}"))).expect("fresh labels are distinct"),
    );
    let moved: Vec<Partition> = min
        .partitions()
        .iter()
        .map(|p| {
            let mut keys = vec![0u32; n];
            for (x, &y) in perm.iter().enumerate() {
                keys[y] = p.block_ids()[x];
            }
            Partition::from_keys(ground.clone(), &keys, p.num_blocks())
        })
        .collect();
    let e = Device::new(min.name().map(str::to_string), ground, moved.clone())
        .expect("relabelling keeps the partitions");
    let iso = Reduction {
        phi: perm,
        alpha: moved
            .iter()
            .map(|p| e.partition_index(p).expect("partition was inserted"))
            .collect(),
    };
    let witness = m.to_min.then(&iso);
    (e, witness)
}
