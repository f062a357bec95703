//! Reductions between devices: checking them, finding them, and deciding
//! equivalence.
//!
//! A reduction of `D` to `E` is a state map `phi: S(D) -> S(E)` together
//! with a partition map `alpha: Π(D) -> Π(E)` such that `alpha(π) ∘ phi`
//! refines `π` for every `π` in `Π(D)`. Partition maps are stored as indices
//! into the canonical partition order of the devices.

mod equivalence;
mod interactive;
mod search;

use std::collections::HashMap;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::device::{Device, DeviceError};
use crate::invariants::FailReason;
use crate::partition::{refines_ids, PartitionError};

pub use equivalence::{decide_equivalence, random_equivalent, EquivalenceOutcome, NotEquivalent};
pub use interactive::{ip_nonequiv_sim, IpReport, IpTrial};
pub use search::{find_reduction, ReduceOutcome, SearchMethod};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("{what} has length {got}, expected {expected}")]
    DomainMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} maps entry {index} to {image}, outside a codomain of size {size}")]
    ImageOutOfRange {
        what: &'static str,
        index: usize,
        image: usize,
        size: usize,
    },
    #[error("search budget exhausted after {explored} nodes")]
    SearchBudgetExceeded { explored: u64 },
    #[error("precondition violated: {0}")]
    PreconditionMismatch(String),
    #[error("malformed witness: {0}")]
    Witness(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

impl From<PartitionError> for ReductionError {
    fn from(e: PartitionError) -> Self {
        ReductionError::Device(e.into())
    }
}

/// The maps `(phi, alpha)` of a reduction, by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Reduction {
    pub phi: Vec<usize>,
    pub alpha: Vec<usize>,
}

impl Reduction {
    /// The identity reduction of a device to itself.
    pub fn identity(d: &Device) -> Self {
        Self {
            phi: (0..d.num_states()).collect(),
            alpha: (0..d.num_partitions()).collect(),
        }
    }

    /// `self` followed by `next`: if `self` reduces `D` to `E` and `next`
    /// reduces `E` to `F`, the result reduces `D` to `F`.
    pub fn then(&self, next: &Reduction) -> Reduction {
        Reduction {
            phi: self.phi.iter().map(|&x| next.phi[x]).collect(),
            alpha: self.alpha.iter().map(|&i| next.alpha[i]).collect(),
        }
    }

    pub fn phi_is_injective(&self) -> bool {
        is_injective(&self.phi)
    }

    pub fn alpha_is_injective(&self) -> bool {
        is_injective(&self.alpha)
    }

    /// Checks that both maps have the right domain and codomain sizes.
    pub fn check_shape(&self, d: &Device, e: &Device) -> Result<(), ReductionError> {
        check_map("phi", &self.phi, d.num_states(), e.num_states())?;
        check_map("alpha", &self.alpha, d.num_partitions(), e.num_partitions())
    }

    /// The witness as JSON: `{"phi":{"s":"s'",...},"alpha":[...]}` with the
    /// state map keyed in the declaration order of `d`.
    pub fn to_json(&self, d: &Device, e: &Device) -> String {
        serde_json::to_string(&self.labeled(d, e)).expect("witness JSON is always serializable")
    }

    pub(crate) fn labeled<'a>(&'a self, d: &'a Device, e: &'a Device) -> LabeledReduction<'a> {
        LabeledReduction {
            reduction: self,
            from: d,
            to: e,
        }
    }

    /// Parses a witness written by [`Reduction::to_json`].
    pub fn from_json(text: &str, d: &Device, e: &Device) -> Result<Self, ReductionError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawWitness {
            phi: HashMap<String, String>,
            alpha: Vec<usize>,
        }
        let raw: RawWitness =
            serde_json::from_str(text).map_err(|err| ReductionError::Witness(err.to_string()))?;
        if raw.phi.len() != d.num_states() {
            return Err(ReductionError::DomainMismatch {
                what: "phi",
                expected: d.num_states(),
                got: raw.phi.len(),
            });
        }
        let phi = d
            .states()
            .labels()
            .iter()
            .map(|s| {
                let target = raw
                    .phi
                    .get(s)
                    .ok_or_else(|| ReductionError::Witness(format!("phi has no entry for {s:?}")))?;
                e.states()
                    .index_of(target)
                    .ok_or_else(|| ReductionError::Witness(format!("unknown target state {target:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let r = Reduction {
            phi,
            alpha: raw.alpha,
        };
        r.check_shape(d, e)?;
        Ok(r)
    }
}

/// Serializable view of a reduction with state labels resolved.
pub(crate) struct LabeledReduction<'a> {
    reduction: &'a Reduction,
    from: &'a Device,
    to: &'a Device,
}

struct PhiMap<'a>(&'a LabeledReduction<'a>);

impl Serialize for PhiMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let r = self.0;
        let mut map = serializer.serialize_map(Some(r.reduction.phi.len()))?;
        for (x, &y) in r.reduction.phi.iter().enumerate() {
            map.serialize_entry(r.from.states().label(x), r.to.states().label(y))?;
        }
        map.end()
    }
}

impl Serialize for LabeledReduction<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Reduction", 2)?;
        s.serialize_field("phi", &PhiMap(self))?;
        s.serialize_field("alpha", &self.reduction.alpha)?;
        s.end()
    }
}

fn is_injective(map: &[usize]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(map.len());
    map.iter().all(|x| seen.insert(*x))
}

fn check_map(what: &'static str, map: &[usize], len: usize, size: usize) -> Result<(), ReductionError> {
    if map.len() != len {
        return Err(ReductionError::DomainMismatch {
            what,
            expected: len,
            got: map.len(),
        });
    }
    match map.iter().position(|&y| y >= size) {
        Some(index) => Err(ReductionError::ImageOutOfRange {
            what,
            index,
            image: map[index],
            size,
        }),
        None => Ok(()),
    }
}

/// True iff `r` is a reduction of `d` to `e`.
pub fn verify_reduction(d: &Device, e: &Device, r: &Reduction) -> Result<bool, ReductionError> {
    r.check_shape(d, e)?;
    let mut keys = vec![0u32; d.num_states()];
    for (pi, &target) in d.partitions().iter().zip(&r.alpha) {
        let q = &e.partitions()[target];
        for (key, &y) in keys.iter_mut().zip(&r.phi) {
            *key = q.block_ids()[y];
        }
        if !refines_ids(&keys, q.num_blocks(), pi.block_ids()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Why a reduction does not exist.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Refutation {
    /// An order-preserving invariant separates the devices.
    Prescreen { reason: FailReason },
    /// The search ran to completion without finding a state map.
    NoPhi { method: SearchMethod },
}
