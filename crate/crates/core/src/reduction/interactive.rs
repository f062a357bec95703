//! Simulation of the two-message interactive proof of non-equivalence.
//!
//! The verifier picks one of the two devices at random, sends a random
//! relabelling of it, and accepts if the prover names the right one. An
//! honest prover with unbounded power always wins when the devices differ,
//! and can do no better than guessing when they are equivalent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{decide_equivalence, random_equivalent, ReductionError};
use crate::config::SolverConfig;
use crate::device::Device;
use crate::minimize::minimize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IpTrial {
    /// The verifier's secret choice.
    pub bit: u8,
    /// Seed of the relabelling sent to the prover.
    pub relabel_seed: u64,
    /// The prover's answer.
    pub answer: u8,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpReport {
    pub trials: usize,
    pub accepted: usize,
    pub accept_rate: f64,
    pub log: Vec<IpTrial>,
}

pub fn ip_nonequiv_sim(
    d0: &Device,
    d1: &Device,
    trials: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<IpReport, ReductionError> {
    if trials == 0 {
        return Err(ReductionError::PreconditionMismatch(
            "at least one trial is required".into(),
        ));
    }
    let m0 = minimize(d0).device;
    let m1 = minimize(d1).device;
    if m0.num_states() != m1.num_states() || m0.num_partitions() != m1.num_partitions() {
        return Err(ReductionError::PreconditionMismatch(format!(
            "minimal devices have shapes {}x{} and {}x{}",
            m0.num_states(),
            m0.num_partitions(),
            m1.num_states(),
            m1.num_partitions()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::with_capacity(trials);
    for _ in 0..trials {
        let bit = u8::from(rng.gen::<bool>());
        let relabel_seed = rng.gen::<u64>();
        let chosen = if bit == 0 { &m0 } else { &m1 };
        let (challenge, _) = random_equivalent(chosen, relabel_seed);
        let answer = if decide_equivalence(&m0, &challenge, config)?.is_equivalent() {
            0
        } else {
            1
        };
        log.push(IpTrial {
            bit,
            relabel_seed,
            answer,
            accepted: answer == bit,
        });
    }
    let accepted = log.iter().filter(|t| t.accepted).count();
    Ok(IpReport {
        trials,
        accepted,
        accept_rate: accepted as f64 / trials as f64,
        log,
    })
}
