//! Abstract storage devices: finite state spaces read through set
//! partitions, compared by reductions.

pub mod config;
pub mod device;
pub mod factor;
pub mod graph;
pub mod invariants;
pub mod minimize;
pub mod partition;
pub mod reduction;

pub use config::{Limits, SolverConfig};
pub use device::{Classification, Device, DeviceError, RawDevice};
pub use partition::{GroundSet, LatticePoly, Partition, PartitionError};
pub use reduction::{Reduction, ReductionError};
