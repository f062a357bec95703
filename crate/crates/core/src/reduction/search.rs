use serde::Serialize;

use super::{verify_reduction, Reduction, ReductionError, Refutation};
use crate::config::SolverConfig;
use crate::device::Device;
use crate::invariants::{prescreen, Prescreen};
use crate::minimize::is_state_minimal;

/// How a negative answer was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    /// Exhaustive backtracking over state maps.
    Backtracking,
    /// No grouping of product factors admits factor-wise reductions.
    ProductGrouping,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReduceOutcome {
    Reducible(Reduction),
    NotReducible(Refutation),
}

impl ReduceOutcome {
    pub fn witness(&self) -> Option<&Reduction> {
        match self {
            ReduceOutcome::Reducible(r) => Some(r),
            ReduceOutcome::NotReducible(_) => None,
        }
    }

    pub fn into_witness(self) -> Option<Reduction> {
        match self {
            ReduceOutcome::Reducible(r) => Some(r),
            ReduceOutcome::NotReducible(_) => None,
        }
    }
}

/// Decides `d <= e`.
///
/// A positive answer carries the lexicographically first state map, with
/// states of `d` assigned in declaration order and targets tried in the
/// declaration order of `e`. Each partition is sent to the first partition of
/// `e`, in canonical order, that works for that map.
pub fn find_reduction(
    d: &Device,
    e: &Device,
    config: &SolverConfig,
) -> Result<ReduceOutcome, ReductionError> {
    if let Prescreen::Fail(reason) = prescreen(d, e) {
        return Ok(ReduceOutcome::NotReducible(Refutation::Prescreen { reason }));
    }
    if config.product_shortcut && crate::factor::product_grouping_refutes(d, e, config)? {
        return Ok(ReduceOutcome::NotReducible(Refutation::NoPhi {
            method: SearchMethod::ProductGrouping,
        }));
    }
    match search_phi(d, e, config.node_budget)? {
        Some(r) => {
            assert!(
                verify_reduction(d, e, &r)?,
                "search produced an invalid reduction"
            );
            Ok(ReduceOutcome::Reducible(r))
        }
        None => Ok(ReduceOutcome::NotReducible(Refutation::NoPhi {
            method: SearchMethod::Backtracking,
        })),
    }
}

const UNSET: u32 = u32::MAX;

enum Undo {
    Owner(usize),
    Load(usize, u32),
    Kill(usize),
}

struct Search<'a> {
    d: &'a Device,
    e: &'a Device,
    n: usize,
    m: usize,
    q_count: usize,
    /// Start of the owner table of each `(π, q)` pair, indexed by q-block.
    owner_base: Vec<usize>,
    owner: Vec<u32>,
    /// Start of the load table of each `(π, q)` pair, indexed by π-block.
    load_base: Vec<usize>,
    load: Vec<u32>,
    /// Per-π sparse set of surviving targets: `alive[π][..alive_len[π]]`.
    alive: Vec<Vec<u32>>,
    alive_len: Vec<usize>,
    injective: bool,
    bijective: bool,
    used: Vec<bool>,
    phi: Vec<usize>,
    trail: Vec<Undo>,
    explored: u64,
    budget: u64,
}

/// Backtracking search for a state map, without any prescreen.
pub(crate) fn search_phi(
    d: &Device,
    e: &Device,
    budget: u64,
) -> Result<Option<Reduction>, ReductionError> {
    let injective = is_state_minimal(d);
    let (n, m) = (d.num_states(), e.num_states());
    if injective && n > m {
        return Ok(None);
    }
    let (p_count, q_count) = (d.num_partitions(), e.num_partitions());
    let mut owner_base = Vec::with_capacity(p_count * q_count);
    let mut load_base = Vec::with_capacity(p_count * q_count);
    let (mut owner_len, mut load_len) = (0, 0);
    for pi in d.partitions() {
        for q in e.partitions() {
            owner_base.push(owner_len);
            owner_len += q.num_blocks();
            load_base.push(load_len);
            load_len += pi.num_blocks();
        }
    }
    let bijective = injective && n == m;
    let mut s = Search {
        d,
        e,
        n,
        m,
        q_count,
        owner_base,
        owner: vec![UNSET; owner_len],
        load_base,
        load: vec![0; if bijective { load_len } else { 0 }],
        alive: vec![(0..q_count as u32).collect(); p_count],
        alive_len: vec![q_count; p_count],
        injective,
        bijective,
        used: vec![false; m],
        phi: vec![0; n],
        trail: Vec::new(),
        explored: 0,
        budget,
    };
    if !s.descend(0)? {
        return Ok(None);
    }
    let alpha = (0..p_count)
        .map(|pi| {
            s.alive[pi][..s.alive_len[pi]]
                .iter()
                .copied()
                .min()
                .expect("a complete map keeps a target for every partition") as usize
        })
        .collect();
    Ok(Some(Reduction { phi: s.phi, alpha }))
}

impl Search<'_> {
    fn descend(&mut self, x: usize) -> Result<bool, ReductionError> {
        if x == self.n {
            return Ok(true);
        }
        for y in 0..self.m {
            if self.injective && self.used[y] {
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
                self.phi[x] = y;
                self.used[y] = true;
                if self.future_ok(x + 1) && self.descend(x + 1)? {
                    return Ok(true);
                }
                self.used[y] = false;
            }
            self.undo(mark);
        }
        Ok(false)
    }

    /// Records `phi(x) = y`, dropping every target partition that it rules
    /// out. Returns false as soon as some source partition has none left.
    fn assign(&mut self, x: usize, y: usize) -> bool {
        let (d, e) = (self.d, self.e);
        for (p, pi) in d.partitions().iter().enumerate() {
            let block = pi.block_ids()[x];
            let mut i = 0;
            while i < self.alive_len[p] {
                let q = self.alive[p][i] as usize;
                let target = &e.partitions()[q];
                let qb = target.block_ids()[y] as usize;
                let pair = p * self.q_count + q;
                let slot = self.owner_base[pair] + qb;
                let ok = match self.owner[slot] {
                    UNSET => {
                        self.owner[slot] = block;
                        self.trail.push(Undo::Owner(slot));
                        if self.bijective {
                            // Under a bijection the whole q-block lands inside
                            // this π-block, so their sizes must fit.
                            let size = target.blocks()[qb].len() as u32;
                            let lslot = self.load_base[pair] + block as usize;
                            self.load[lslot] += size;
                            self.trail.push(Undo::Load(lslot, size));
                            self.load[lslot] <= pi.blocks()[block as usize].len() as u32
                        } else {
                            true
                        }
                    }
                    owner => owner == block,
                };
                if ok {
                    i += 1;
                } else {
                    let last = self.alive_len[p] - 1;
                    self.alive[p].swap(i, last);
                    self.alive_len[p] = last;
                    self.trail.push(Undo::Kill(p));
                    if last == 0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Forward check: every unassigned state still has a target that no
    /// source partition rules out.
    fn future_ok(&self, from: usize) -> bool {
        (from..self.n).all(|x| {
            (0..self.m).any(|y| !(self.injective && self.used[y]) && self.compatible(x, y))
        })
    }

    /// Whether `phi(x) = y` would leave every source partition a target.
    fn compatible(&self, x: usize, y: usize) -> bool {
        let (d, e) = (self.d, self.e);
        d.partitions().iter().enumerate().all(|(p, pi)| {
            let block = pi.block_ids()[x];
            self.alive[p][..self.alive_len[p]].iter().any(|&q| {
                let target = &e.partitions()[q as usize];
                let qb = target.block_ids()[y] as usize;
                let pair = p * self.q_count + q as usize;
                match self.owner[self.owner_base[pair] + qb] {
                    UNSET if self.bijective => {
                        let lslot = self.load_base[pair] + block as usize;
                        self.load[lslot] + target.blocks()[qb].len() as u32
                            <= pi.blocks()[block as usize].len() as u32
                    }
                    UNSET => true,
                    owner => owner == block,
                }
            })
        })
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().expect("trail is longer than mark") {
                Undo::Owner(slot) => self.owner[slot] = UNSET,
                Undo::Load(slot, size) => self.load[slot] -= size,
                Undo::Kill(p) => self.alive_len[p] += 1,
            }
        }
    }
}
