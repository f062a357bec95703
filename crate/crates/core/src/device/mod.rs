//! Abstract storage devices: a state space and a family of read partitions.
//!
//! A [`Device`] keeps its partitions deduplicated and sorted by canonical
//! block list, so serialization is deterministic and partition indices (as
//! used by reduction witnesses) are stable.

mod constructors;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::partition::{GroundSet, Partition, PartitionError};

/// Errors raised while building devices.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeviceError {
    #[error("device has no states")]
    EmptyStateSpace,
    #[error("device has no partitions")]
    EmptyPartitionSet,
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("{what} = {value} exceeds the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed device JSON: {0}")]
    Json(String),
}

/// The on-disk device description.
///
/// `{"name": "...", "states": ["s1", ...], "partitions": [[["s1","s2"],["s3"]], ...]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDevice {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub states: Vec<String>,
    pub partitions: Vec<Vec<Vec<String>>>,
}

impl RawDevice {
    /// Checks the description and produces the canonical device.
    pub fn validate(self) -> Result<Device, DeviceError> {
        if self.states.is_empty() {
            return Err(DeviceError::EmptyStateSpace);
        }
        let states = Arc::new(GroundSet::new(self.states)?);
        let partitions = self
            .partitions
            .iter()
            .map(|blocks| Partition::from_blocks(states.clone(), blocks))
            .collect::<Result<Vec<_>, _>>()?;
        Device::new(self.name, states, partitions)
    }
}

/// Which of the named device classes a device belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub perfect: bool,
    pub trivial: bool,
    /// `Some(r)` when every partition has exactly `r` blocks.
    pub regular: Option<usize>,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Device {
    name: Option<String>,
    states: Arc<GroundSet>,
    partitions: Vec<Partition>,
}

impl Device {
    /// Builds a device, deduplicating and sorting the partitions.
    pub fn new(
        name: Option<String>,
        states: Arc<GroundSet>,
        mut partitions: Vec<Partition>,
    ) -> Result<Self, DeviceError> {
        if partitions.is_empty() {
            return Err(DeviceError::EmptyPartitionSet);
        }
        if partitions.iter().any(|p| !Arc::ptr_eq(p.ground(), &states) && **p.ground() != *states) {
            return Err(PartitionError::GroundMismatch.into());
        }
        partitions.sort_by(|a, b| a.canonical_cmp(b));
        partitions.dedup();
        Ok(Self {
            name,
            states,
            partitions,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, DeviceError> {
        let raw: RawDevice =
            serde_json::from_str(text).map_err(|e| DeviceError::Json(e.to_string()))?;
        raw.validate()
    }

    pub fn to_raw(&self) -> RawDevice {
        RawDevice {
            name: self.name.clone(),
            states: self.states.labels().to_vec(),
            partitions: self.partitions.iter().map(Partition::label_blocks).collect(),
        }
    }

    /// Compact canonical JSON, without a trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("device JSON is always serializable")
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn without_name(mut self) -> Self {
        self.name = None;
        self
    }

    pub fn states(&self) -> &Arc<GroundSet> {
        &self.states
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_partitions(&self) -> usize {
        self.partitions.len()
    }

    /// Position of `p` in the canonical partition order.
    pub fn partition_index(&self, p: &Partition) -> Option<usize> {
        self.partitions
            .binary_search_by(|q| q.canonical_cmp(p))
            .ok()
            .filter(|&i| self.partitions[i] == *p)
    }

    /// The meet of every partition; the identity exactly when any two states
    /// can be told apart by some read.
    pub fn meet_of_partitions(&self) -> Partition {
        let mut acc = Partition::top(self.states.clone());
        for p in &self.partitions {
            acc = acc.meet_unchecked(p);
        }
        acc
    }

    pub fn join_of_partitions(&self) -> Partition {
        let mut acc = Partition::identity(self.states.clone());
        for p in &self.partitions {
            acc = acc.join_unchecked(p);
        }
        acc
    }

    pub fn is_perfect(&self) -> bool {
        self.partitions.iter().any(Partition::is_identity)
    }

    pub fn is_trivial(&self) -> bool {
        self.partitions.len() == 1 && self.partitions[0].is_top()
    }

    pub fn regularity(&self) -> Option<usize> {
        let r = self.partitions[0].num_blocks();
        self.partitions.iter().all(|p| p.num_blocks() == r).then_some(r)
    }

    pub fn is_binary(&self) -> bool {
        self.regularity() == Some(2)
    }

    pub fn classify(&self) -> Classification {
        let regular = self.regularity();
        Classification {
            perfect: self.is_perfect(),
            trivial: self.is_trivial(),
            regular,
            binary: regular == Some(2),
        }
    }

    /// Largest block count over all partitions.
    pub fn max_blocks(&self) -> usize {
        self.partitions.iter().map(Partition::num_blocks).max().unwrap_or(1)
    }
}
