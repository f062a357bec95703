//! Direct-product factorization.
//!
//! Reductions between products of non-perfect state-minimal binary devices
//! split factor by factor: `×D_i <= ×E_j` holds exactly when the indices of
//! the `E_j` can be grouped into sets `J_i` with `D_i <= ×_{j∈J_i} E_j`.
//! This module searches for such groupings, reads them off a given
//! reduction, and uses them to factor devices into binary pieces.

mod binary;
mod perfect;

use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::config::{Limits, SolverConfig};
use crate::device::{Device, DeviceError};
use crate::minimize::{is_state_minimal, minimize};
use crate::reduction::{find_reduction, verify_reduction, Reduction, ReductionError};

pub use binary::{binary_candidates, factor_binary, factor_binary_audited, FactorAudit};
pub use perfect::{factor_perfect, PerfectFactorization};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FactorError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("factor {factor} of the target does not move exactly one source factor")]
    NonUniqueTau { factor: usize },
    #[error("source factor {factor} receives no target factor")]
    IncompleteGrouping { factor: usize },
    #[error("the reduction does not verify")]
    InvalidReduction,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

impl From<DeviceError> for FactorError {
    fn from(e: DeviceError) -> Self {
        FactorError::Reduction(e.into())
    }
}

/// A grouping `{J_1, ..., J_m}` of target factor indices, one group per
/// source factor. Indices are 0-based here and printed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexPartition(pub Vec<Vec<usize>>);

impl IndexPartition {
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.0
            .iter()
            .map(|g| g.iter().map(|j| j + 1).collect())
            .collect()
    }
}

impl fmt::Display for IndexPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, g) in self.one_based().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let items: Vec<String> = g.iter().map(ToString::to_string).collect();
            write!(f, "{{{}}}", items.join(","))?;
        }
        f.write_str("}")
    }
}

impl Serialize for IndexPartition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.one_based().serialize(serializer)
    }
}

/// A grouping together with the factor-wise reductions
/// `D_i -> ×_{j∈J_i} E_j` that justify it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGrouping {
    pub groups: IndexPartition,
    pub reductions: Vec<Reduction>,
}

fn check_hypotheses(ds: &[Device], es: &[Device]) -> Result<(), FactorError> {
    if ds.is_empty() || es.is_empty() {
        return Err(FactorError::HypothesisViolation("empty factor list".into()));
    }
    for (side, list) in [("source", ds), ("target", es)] {
        for (i, d) in list.iter().enumerate() {
            let which = || format!("{side} factor {}", i + 1);
            if !d.is_binary() {
                return Err(FactorError::HypothesisViolation(format!("{} is not binary", which())));
            }
            if d.is_perfect() {
                return Err(FactorError::HypothesisViolation(format!("{} is perfect", which())));
            }
            if !is_state_minimal(d) {
                return Err(FactorError::HypothesisViolation(format!(
                    "{} is not state-minimal",
                    which()
                )));
            }
        }
    }
    let size = |list: &[Device]| {
        list.iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(d.num_states()))
    };
    if size(ds) != size(es) {
        return Err(FactorError::HypothesisViolation(
            "the products have different numbers of states".into(),
        ));
    }
    Ok(())
}

/// The product of the listed factors, in index order.
pub(crate) fn sub_product(es: &[Device], group: &[usize]) -> Result<Device, DeviceError> {
    let picked: Vec<Device> = group.iter().map(|&j| es[j].clone()).collect();
    Device::product_all(&picked, &Limits {
        product_max_states: usize::MAX,
        ..Limits::default()
    })
}

/// Decides `×ds <= ×es` through a grouping of the target factors.
///
/// Groups are tried in lexicographic order of `(J_1, J_2, ...)`, each `J_i`
/// a subset of the unused indices listed in increasing order; the first
/// grouping whose factor-wise reductions all exist is returned.
pub fn binary_product_reduce(
    ds: &[Device],
    es: &[Device],
    config: &SolverConfig,
) -> Result<Option<ProductGrouping>, FactorError> {
    check_hypotheses(ds, es)?;
    let sub_config = SolverConfig {
        product_shortcut: false,
        ..*config
    };
    let mut search = GroupSearch {
        ds,
        es,
        config: sub_config,
        cache: HashMap::new(),
        groups: Vec::new(),
        reductions: Vec::new(),
    };
    let mut used = vec![false; es.len()];
    if search.descend(0, &mut used)? {
        Ok(Some(ProductGrouping {
            groups: IndexPartition(search.groups),
            reductions: search.reductions,
        }))
    } else {
        Ok(None)
    }
}

struct GroupSearch<'a> {
    ds: &'a [Device],
    es: &'a [Device],
    config: SolverConfig,
    cache: HashMap<(usize, Vec<usize>), Option<Reduction>>,
    groups: Vec<Vec<usize>>,
    reductions: Vec<Reduction>,
}

impl GroupSearch<'_> {
    fn descend(&mut self, i: usize, used: &mut [bool]) -> Result<bool, FactorError> {
        if i == self.ds.len() {
            return Ok(used.iter().all(|&u| u));
        }
        let free: Vec<usize> = (0..self.es.len()).filter(|&j| !used[j]).collect();
        let target = self.ds[i].num_states();
        for group in subsets_with_product(&free, self.es, target) {
            let Some(r) = self.sub_reduction(i, &group)? else {
                continue;
            };
            for &j in &group {
                used[j] = true;
            }
            self.groups.push(group.clone());
            self.reductions.push(r);
            if self.descend(i + 1, used)? {
                return Ok(true);
            }
            self.groups.pop();
            self.reductions.pop();
            for &j in &group {
                used[j] = false;
            }
        }
        Ok(false)
    }

    fn sub_reduction(&mut self, i: usize, group: &[usize]) -> Result<Option<Reduction>, FactorError> {
        let key = (i, group.to_vec());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let target = sub_product(self.es, group)?;
        let found = find_reduction(&self.ds[i], &target, &self.config)?.into_witness();
        self.cache.insert(key, found.clone());
        Ok(found)
    }
}

/// Non-empty subsets of `free`, in lexicographic order, whose state counts
/// multiply to `target`.
fn subsets_with_product(free: &[usize], es: &[Device], target: usize) -> Vec<Vec<usize>> {
    fn go(
        free: &[usize],
        es: &[Device],
        start: usize,
        left: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if left == 1 && !current.is_empty() {
            out.push(current.clone());
            return;
        }
        for k in start..free.len() {
            let size = es[free[k]].num_states();
            if size > 1 && left % size == 0 {
                current.push(free[k]);
                go(free, es, k + 1, left / size, current, out);
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(free, es, 0, target, &mut Vec::new(), &mut out);
    out
}

/// Mixed-radix coordinates of product states, first factor most significant.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    sizes: Vec<usize>,
    strides: Vec<usize>,
}

impl Layout {
    pub(crate) fn new(sizes: Vec<usize>) -> Self {
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        Self { sizes, strides }
    }

    pub(crate) fn total(&self) -> usize {
        self.sizes.iter().product()
    }

    pub(crate) fn coord(&self, index: usize, factor: usize) -> usize {
        index / self.strides[factor] % self.sizes[factor]
    }

    pub(crate) fn with_coord(&self, index: usize, factor: usize, value: usize) -> usize {
        index - self.coord(index, factor) * self.strides[factor] + value * self.strides[factor]
    }
}

/// Reads the grouping off a reduction `r` of `×ds` to `×es`.
///
/// For every target factor `j` and every fixing of the other target
/// coordinates, running through the states of `E_j` and mapping back with
/// `phi^{-1}` must change exactly one source coordinate, and the same one
/// for every fixing. All fixings are checked.
pub fn extract_index_partition(
    r: &Reduction,
    ds: &[Device],
    es: &[Device],
) -> Result<IndexPartition, FactorError> {
    check_hypotheses(ds, es)?;
    let d = sub_product(ds, &(0..ds.len()).collect::<Vec<_>>())?;
    let e = sub_product(es, &(0..es.len()).collect::<Vec<_>>())?;
    if !verify_reduction(&d, &e, r)? {
        return Err(FactorError::InvalidReduction);
    }
    let n = d.num_states();
    let mut inverse = vec![usize::MAX; n];
    for (x, &y) in r.phi.iter().enumerate() {
        if inverse[y] != usize::MAX {
            return Err(FactorError::InvalidReduction);
        }
        inverse[y] = x;
    }
    let dl = Layout::new(ds.iter().map(Device::num_states).collect());
    let el = Layout::new(es.iter().map(Device::num_states).collect());
    let mut tau = vec![usize::MAX; es.len()];
    for (j, slot) in tau.iter_mut().enumerate() {
        for base in (0..el.total()).filter(|&y| el.coord(y, j) == 0) {
            let first = inverse[base];
            let mut moved: Option<usize> = None;
            for v in 1..el.sizes[j] {
                let other = inverse[el.with_coord(base, j, v)];
                for i in 0..ds.len() {
                    if dl.coord(other, i) != dl.coord(first, i) {
                        match moved {
                            None => moved = Some(i),
                            Some(p) if p == i => {}
                            Some(_) => return Err(FactorError::NonUniqueTau { factor: j + 1 }),
                        }
                    }
                }
            }
            let Some(i) = moved else {
                return Err(FactorError::NonUniqueTau { factor: j + 1 });
            };
            if *slot != usize::MAX && *slot != i {
                return Err(FactorError::NonUniqueTau { factor: j + 1 });
            }
            *slot = i;
        }
    }
    let mut groups = vec![Vec::new(); ds.len()];
    for (j, &i) in tau.iter().enumerate() {
        groups[i].push(j);
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(FactorError::IncompleteGrouping { factor: i + 1 });
    }
    Ok(IndexPartition(groups))
}

/// Refutes `d <= e` through groupings when both devices factor into
/// non-perfect binary devices with the same total state count.
///
/// Returns false when the shortcut does not apply or finds a grouping.
pub(crate) fn product_grouping_refutes(
    d: &Device,
    e: &Device,
    config: &SolverConfig,
) -> Result<bool, ReductionError> {
    let (dm, em) = (minimize(d).device, minimize(e).device);
    if dm.num_states() != em.num_states() || !plausible_product(&dm) || !plausible_product(&em) {
        return Ok(false);
    }
    let (Some(ds), Some(es)) = (binary::extract_factors(&dm)?, binary::extract_factors(&em)?) else {
        return Ok(false);
    };
    if ds.len() + es.len() < 3 || ds.iter().chain(&es).any(Device::is_perfect) {
        return Ok(false);
    }
    match binary_product_reduce(&ds, &es, config) {
        Ok(found) => Ok(found.is_none()),
        Err(FactorError::Reduction(err)) => Err(err),
        Err(_) => Ok(false),
    }
}

/// A cheap necessary condition for being a product of at least two binary
/// devices: the partitions all have the same power-of-two block count `2^m`
/// with `m >= 2`.
fn plausible_product(d: &Device) -> bool {
    d.regularity()
        .is_some_and(|r| r >= 4 && r.is_power_of_two())
}
