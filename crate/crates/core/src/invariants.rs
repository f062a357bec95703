//! Order-preserving invariants and lattice-polynomial signatures.
//!
//! Capacity and state complexity are measured in bits (base-2 logarithms).
//! Comparisons between devices are done on the underlying integer counts so
//! that they are exact.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::device::Device;
use crate::minimize::{is_state_minimal, minimize};
use crate::partition::{join_count, meet_count, meet_ids, LatticePoly};

/// Deepest supported lattice-polynomial signature.
pub const MAX_SIGNATURE_DEPTH: usize = 3;
const MAX_SIGNATURE_TUPLES: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantError {
    #[error("signature depth {depth} is outside 1..={max}")]
    DepthOutOfRange { depth: usize, max: usize },
    #[error("signature needs {tuples} partition tuples, more than the cap of {cap}")]
    TooManyTuples { tuples: usize, cap: usize },
}

/// A bit count that prints as an integer when it is one.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Bits(pub f64);

impl Bits {
    pub fn of(count: usize) -> Self {
        Bits((count as f64).log2())
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            serializer.serialize_i64(self.0 as i64)
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.fract() == 0.0 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// The number of reads needed to learn the state exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PerfectnessIndex {
    Finite(usize),
    Infinite,
}

impl Serialize for PerfectnessIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PerfectnessIndex::Finite(k) => serializer.serialize_u64(*k as u64),
            PerfectnessIndex::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl fmt::Display for PerfectnessIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerfectnessIndex::Finite(k) => write!(f, "{k}"),
            PerfectnessIndex::Infinite => f.write_str("inf"),
        }
    }
}

/// `max log2 |π|` over the partitions.
pub fn capacity(d: &Device) -> f64 {
    Bits::of(d.max_blocks()).0
}

/// `log2 |⋀Π(D)|`, the number of bits a minimal equivalent device stores.
pub fn state_complexity(d: &Device) -> f64 {
    Bits::of(d.meet_of_partitions().num_blocks()).0
}

/// Smallest number of partitions whose meet is the identity.
pub fn perfectness_index(d: &Device) -> PerfectnessIndex {
    if !is_state_minimal(d) {
        return PerfectnessIndex::Infinite;
    }
    let n = d.num_states();
    if n == 1 {
        return PerfectnessIndex::Finite(1);
    }
    let parts: Vec<(&[u32], usize)> = d
        .partitions()
        .iter()
        .map(|p| (p.block_ids(), p.num_blocks()))
        .collect();
    let max_r = d.max_blocks();
    let top = vec![0u32; n];
    for k in 1..=parts.len() {
        if index_search(&parts, &top, 1, 0, k, max_r, n) {
            return PerfectnessIndex::Finite(k);
        }
    }
    unreachable!("the meet of all partitions is the identity")
}

/// Depth-first search for `left` more partitions, taken from `start..`, that
/// bring the meet `cur` down to the identity.
fn index_search(
    parts: &[(&[u32], usize)],
    cur: &[u32],
    cur_blocks: usize,
    start: usize,
    left: usize,
    max_r: usize,
    n: usize,
) -> bool {
    if cur_blocks == n {
        return true;
    }
    if left == 0 || parts.len() - start < left {
        return false;
    }
    let reachable = (0..left).try_fold(cur_blocks, |acc, _| acc.checked_mul(max_r));
    if reachable.is_some_and(|r| r < n) {
        return false;
    }
    for j in start..=parts.len() - left {
        let (ids, blocks) = parts[j];
        let next = meet_ids(cur, cur_blocks, ids, blocks);
        let next_blocks = next.iter().max().map_or(0, |&m| m as usize + 1);
        // A partition that splits nothing never belongs to a smallest family.
        if next_blocks == cur_blocks {
            continue;
        }
        if index_search(parts, &next, next_blocks, j + 1, left - 1, max_r, n) {
            return true;
        }
    }
    false
}

/// Capacity, state complexity and perfectness index together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub capacity: Bits,
    pub sigma: Bits,
    pub perfectness_index: PerfectnessIndex,
}

impl InvariantReport {
    pub fn of(d: &Device) -> Self {
        Self {
            capacity: Bits::of(d.max_blocks()),
            sigma: Bits::of(d.meet_of_partitions().num_blocks()),
            perfectness_index: perfectness_index(d),
        }
    }

    /// `{"capacity":x,"sigma":y,"perfectness_index":k}`
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report JSON is always serializable")
    }
}

/// `σ(D) <= i(D) · C(D)`, checked exactly as `|⋀Π| <= max|π|^i`.
pub fn sigma_capacity_bound(d: &Device) -> bool {
    match perfectness_index(d) {
        PerfectnessIndex::Infinite => true,
        PerfectnessIndex::Finite(k) => {
            let states = d.meet_of_partitions().num_blocks();
            let mut bound: usize = 1;
            for _ in 0..k {
                match bound.checked_mul(d.max_blocks()) {
                    Some(b) => bound = b,
                    None => return true,
                }
            }
            states <= bound
        }
    }
}

/// An invariant showing that the source cannot reduce to the target.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "invariant", rename_all = "snake_case")]
pub enum FailReason {
    Capacity { source: Bits, target: Bits },
    Sigma { source: Bits, target: Bits },
    Perfectness {
        source: PerfectnessIndex,
        target: PerfectnessIndex,
    },
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailReason::Capacity { source, target } => {
                write!(f, "capacity {source} exceeds {target}")
            }
            FailReason::Sigma { source, target } => {
                write!(f, "state complexity {source} exceeds {target}")
            }
            FailReason::Perfectness { source, target } => {
                write!(f, "perfectness index {source} is below {target} at equal state count")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prescreen {
    Pass,
    Fail(FailReason),
}

impl Prescreen {
    pub fn passed(&self) -> bool {
        matches!(self, Prescreen::Pass)
    }
}

/// Necessary conditions for `d <= e`.
///
/// The perfectness test is only applied when the minimized devices have the
/// same number of states, and is evaluated on those minimized devices.
pub fn prescreen(d: &Device, e: &Device) -> Prescreen {
    let (cd, ce) = (d.max_blocks(), e.max_blocks());
    if cd > ce {
        return Prescreen::Fail(FailReason::Capacity {
            source: Bits::of(cd),
            target: Bits::of(ce),
        });
    }
    let (sd, se) = (
        d.meet_of_partitions().num_blocks(),
        e.meet_of_partitions().num_blocks(),
    );
    if sd > se {
        return Prescreen::Fail(FailReason::Sigma {
            source: Bits::of(sd),
            target: Bits::of(se),
        });
    }
    if sd == se {
        let id = perfectness_index(&minimize(d).device);
        let ie = perfectness_index(&minimize(e).device);
        if id < ie {
            return Prescreen::Fail(FailReason::Perfectness {
                source: id,
                target: ie,
            });
        }
    }
    Prescreen::Pass
}

/// Multiset of block-count profiles of lattice polynomials evaluated on all
/// ordered tuples of partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySignature {
    pub depth: usize,
    pub entries: BTreeMap<Vec<usize>, usize>,
}

/// One profile that occurs a different number of times in two signatures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignatureDiff {
    pub depth: usize,
    pub polynomials: Vec<String>,
    pub block_counts: Vec<usize>,
    pub left: usize,
    pub right: usize,
}

/// The polynomials whose block counts form a profile at the given depth.
pub fn signature_polynomials(depth: usize) -> Vec<LatticePoly> {
    let x = LatticePoly::var;
    let mut out = vec![x(1)];
    if depth >= 2 {
        out.push(x(1).meet(x(2)));
        out.push(x(1).join(x(2)));
    }
    if depth >= 3 {
        out.push(x(1).meet(x(2)).meet(x(3)));
        out.push(x(1).join(x(2)).join(x(3)));
        out.push(x(1).meet(x(2)).join(x(3)));
        out.push(x(1).join(x(2)).meet(x(3)));
    }
    out
}

impl PolySignature {
    /// The first profile, in sorted order, whose multiplicities differ.
    pub fn first_difference(&self, other: &PolySignature) -> Option<SignatureDiff> {
        let keys: std::collections::BTreeSet<&Vec<usize>> =
            self.entries.keys().chain(other.entries.keys()).collect();
        keys.into_iter().find_map(|k| {
            let left = self.entries.get(k).copied().unwrap_or(0);
            let right = other.entries.get(k).copied().unwrap_or(0);
            (left != right).then(|| SignatureDiff {
                depth: self.depth,
                polynomials: signature_polynomials(self.depth)
                    .iter()
                    .map(ToString::to_string)
                    .collect(),
                block_counts: k.clone(),
                left,
                right,
            })
        })
    }
}

pub fn poly_signature(d: &Device, depth: usize) -> Result<PolySignature, InvariantError> {
    if depth == 0 || depth > MAX_SIGNATURE_DEPTH {
        return Err(InvariantError::DepthOutOfRange {
            depth,
            max: MAX_SIGNATURE_DEPTH,
        });
    }
    let ps = d.partitions();
    let p = ps.len();
    let tuples = p.saturating_pow(depth as u32);
    if tuples > MAX_SIGNATURE_TUPLES {
        return Err(InvariantError::TooManyTuples {
            tuples,
            cap: MAX_SIGNATURE_TUPLES,
        });
    }
    let mut entries: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    if depth == 1 {
        for q in ps {
            *entries.entry(vec![q.num_blocks()]).or_default() += 1;
        }
        return Ok(PolySignature { depth, entries });
    }
    let max_b = d.max_blocks();
    let mut scratch = vec![0u32; max_b * max_b];
    let mut stamp = 0u32;
    if depth == 2 {
        for i in 0..p {
            for j in i..p {
                let (a, b) = (&ps[i], &ps[j]);
                stamp += 1;
                let m = meet_count(a.block_ids(), b.block_ids(), b.num_blocks(), &mut scratch, stamp);
                let jn = join_count(a.block_ids(), a.num_blocks(), b.block_ids(), b.num_blocks());
                *entries.entry(vec![a.num_blocks(), m, jn]).or_default() += 1;
                if i != j {
                    *entries.entry(vec![b.num_blocks(), m, jn]).or_default() += 1;
                }
            }
        }
        return Ok(PolySignature { depth, entries });
    }
    for a in ps {
        for b in ps {
            let ab_meet = a.meet_unchecked(b);
            let ab_join = a.join_unchecked(b);
            for c in ps {
                let profile = vec![
                    a.num_blocks(),
                    ab_meet.num_blocks(),
                    ab_join.num_blocks(),
                    ab_meet.meet_unchecked(c).num_blocks(),
                    ab_join.join_unchecked(c).num_blocks(),
                    ab_meet.join_unchecked(c).num_blocks(),
                    ab_join.meet_unchecked(c).num_blocks(),
                ];
                *entries.entry(profile).or_default() += 1;
            }
        }
    }
    Ok(PolySignature { depth, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Limits;

    fn lin(n: usize) -> Device {
        Device::linear(n, 1, &Limits::default()).unwrap()
    }

    #[test]
    fn report_json() {
        let d = lin(4).product(&lin(2), &Limits::default()).unwrap();
        assert_eq!(
            InvariantReport::of(&d).to_json(),
            r#"{"capacity":2,"sigma":6,"perfectness_index":4}"#
        );
        let t = Device::from_json(r#"{"states":["a","b"],"partitions":[[["a","b"]]]}"#).unwrap();
        assert_eq!(
            InvariantReport::of(&t).to_json(),
            r#"{"capacity":0,"sigma":0,"perfectness_index":"inf"}"#
        );
        let c3 = Device::perfect(3).unwrap();
        assert_eq!(
            InvariantReport::of(&c3).to_json(),
            format!(r#"{{"capacity":{},"sigma":{},"perfectness_index":1}}"#, 3f64.log2(), 3f64.log2())
        );
    }

    #[test]
    fn linear_perfectness_indices() {
        for n in 1..=4 {
            assert_eq!(perfectness_index(&lin(n)), PerfectnessIndex::Finite(n));
        }
    }

    #[test]
    fn projective_sigma() {
        for n in 1..=5 {
            let p = Device::projective(n, &Limits::default()).unwrap();
            assert_eq!(state_complexity(&p), n as f64);
            assert_eq!(capacity(&p), 1.0);
            assert!(sigma_capacity_bound(&p));
        }
    }

    #[test]
    fn prescreen_reflexive() {
        let d = lin(3);
        assert!(prescreen(&d, &d).passed());
    }

    #[test]
    fn signature_depth_bounds() {
        let d = lin(2);
        assert!(poly_signature(&d, 0).is_err());
        assert!(poly_signature(&d, 4).is_err());
        let s1 = poly_signature(&d, 1).unwrap();
        assert_eq!(s1.entries.get(&vec![2]), Some(&3));
        let s2 = poly_signature(&d, 2).unwrap();
        assert_eq!(s2.entries.values().sum::<usize>(), 9);
        assert_eq!(s2.entries.get(&vec![2, 2, 2]), Some(&3));
        assert_eq!(s2.entries.get(&vec![2, 4, 1]), Some(&6));
        let s3 = poly_signature(&d, 3).unwrap();
        assert_eq!(s3.entries.values().sum::<usize>(), 27);
    }

    #[test]
    fn signature_difference_names_polynomials() {
        let a = poly_signature(&lin(2), 2).unwrap();
        let b = poly_signature(&Device::projective(2, &Limits::default()).unwrap(), 2).unwrap();
        let diff = a.first_difference(&b).unwrap();
        assert_eq!(diff.polynomials, ["x1", "x1 ∧ x2", "x1 ∨ x2"]);
        assert_ne!(diff.left, diff.right);
        assert_eq!(a.first_difference(&a), None);
    }
}
