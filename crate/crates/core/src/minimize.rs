//! Minimality predicates and the construction of a minimal equivalent device.

use std::sync::Arc;

use crate::device::Device;
use crate::partition::{GroundSet, Partition};
use crate::reduction::Reduction;

/// True iff every pair of states is separated by some read.
pub fn is_state_minimal(d: &Device) -> bool {
    d.meet_of_partitions().is_identity()
}

/// True iff no partition refines a different one.
pub fn is_partition_minimal(d: &Device) -> bool {
    let ps = d.partitions();
    ps.iter().enumerate().all(|(i, p)| {
        ps.iter()
            .enumerate()
            .all(|(j, q)| i == j || !p.refines(q).expect("shared ground"))
    })
}

/// A minimal device together with reductions in both directions.
#[derive(Debug, Clone)]
pub struct Minimized {
    pub device: Device,
    /// Reduces the original device to the minimal one.
    pub to_min: Reduction,
    /// Reduces the minimal device back to the original.
    pub from_min: Reduction,
}

/// Merges indistinguishable states and drops reads that are coarser than
/// another read.
///
/// Each merged state keeps the label of its lowest-index member.
pub fn minimize(d: &Device) -> Minimized {
    let meet = d.meet_of_partitions();
    let reps: Vec<usize> = meet.blocks().iter().map(|b| b[0]).collect();
    let ground = Arc::new(
        GroundSet::new(reps.iter().map(|&x| d.states().label(x).to_string()))
            .expect("labels of distinct states are distinct"),
    );
    let pulled: Vec<Partition> = d
        .partitions()
        .iter()
        .map(|p| p.pullback(ground.clone(), &reps).expect("representatives are states"))
        .collect();
    let mut kept: Vec<Partition> = Vec::new();
    for (i, p) in pulled.iter().enumerate() {
        let coarser = pulled
            .iter()
            .enumerate()
            .any(|(j, q)| i != j && q != p && q.refines(p).expect("shared ground"));
        if !coarser {
            kept.push(p.clone());
        }
    }
    let device = Device::new(d.name().map(str::to_string), ground, kept)
        .expect("a minimal device keeps at least one partition");

    let to_min = Reduction {
        phi: meet.block_ids().iter().map(|&b| b as usize).collect(),
        alpha: pulled
            .iter()
            .map(|p| {
                device
                    .partitions()
                    .iter()
                    .position(|r| r.refines(p).expect("shared ground"))
                    .expect("every pulled partition is refined by a kept one")
            })
            .collect(),
    };
    let from_min = Reduction {
        phi: reps,
        alpha: device
            .partitions()
            .iter()
            .map(|r| {
                pulled
                    .iter()
                    .position(|p| p == r)
                    .expect("kept partitions come from the original")
            })
            .collect(),
    };
    Minimized {
        device,
        to_min,
        from_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Limits;
    use crate::reduction::verify_reduction;

    fn check(d: &Device) -> Minimized {
        let m = minimize(d);
        assert!(verify_reduction(d, &m.device, &m.to_min).unwrap());
        assert!(verify_reduction(&m.device, d, &m.from_min).unwrap());
        assert!(is_state_minimal(&m.device));
        assert!(is_partition_minimal(&m.device));
        assert_eq!(minimize(&m.device).device.to_json(), m.device.to_json());
        m
    }

    #[test]
    fn minimal_devices_are_unchanged() {
        let p3 = Device::projective(3, &Limits::default()).unwrap();
        assert!(is_state_minimal(&p3) && is_partition_minimal(&p3));
        let m = check(&p3);
        assert_eq!(m.device, p3);
        assert_eq!(m.to_min, Reduction::identity(&p3));
        assert_eq!(m.from_min, Reduction::identity(&p3));
    }

    #[test]
    fn coarse_reads_are_pruned() {
        let d = Device::from_json(
            r#"{"states":["a","b","c"],"partitions":[[["a"],["b"],["c"]],[["a","b","c"]]]}"#,
        )
        .unwrap();
        assert!(!is_partition_minimal(&d));
        let m = check(&d);
        assert_eq!(m.device.num_partitions(), 1);
        assert!(m.device.is_perfect());
    }

    #[test]
    fn inseparable_states_merge() {
        let d = Device::from_json(
            r#"{"states":["a","b","c","d"],"partitions":[[["b","a"],["c","d"]],[["a","b","c"],["d"]]]}"#,
        )
        .unwrap();
        assert!(!is_state_minimal(&d));
        let m = check(&d);
        assert_eq!(m.device.states().labels(), ["a", "c", "d"]);
        assert_eq!(m.to_min.phi, vec![0, 0, 1, 2]);
        assert_eq!(m.from_min.phi, vec![0, 2, 3]);
    }

    #[test]
    fn single_partition_is_an_antichain() {
        assert!(is_partition_minimal(&Device::trivial(3).unwrap()));
        let m = check(&Device::trivial(3).unwrap());
        assert_eq!(m.device.num_states(), 1);
    }
}
