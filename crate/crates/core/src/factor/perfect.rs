use serde::Serialize;

use super::FactorError;
use crate::config::{Limits, SolverConfig};
use crate::device::Device;
use crate::reduction::decide_equivalence;

/// Largest `m` whose factorization is certified by an equivalence check.
pub const CERTIFY_MAX: u64 = 64;

/// `C_m ≡ ×_i C_{p_i}^{a_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerfectFactorization {
    pub m: u64,
    /// `(p_i, a_i)` with the primes increasing.
    pub factors: Vec<(u64, u32)>,
    /// Whether `C_m` was checked to be equivalent to the product; `None`
    /// when `m` is too large to check.
    pub certified: Option<bool>,
}

/// Prime factorization of the perfect device `C_m`.
pub fn factor_perfect(m: u64, config: &SolverConfig) -> Result<PerfectFactorization, FactorError> {
    if m < 2 {
        return Err(FactorError::InvalidParameter(format!("factor_perfect needs m >= 2, got {m}")));
    }
    let mut factors = Vec::new();
    let mut rest = m;
    let mut p = 2;
    while p * p <= rest {
        let mut a = 0;
        while rest % p == 0 {
            rest /= p;
            a += 1;
        }
        if a > 0 {
            factors.push((p, a));
        }
        p += 1;
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    let certified = if m <= CERTIFY_MAX {
        let parts: Vec<Device> = factors
            .iter()
            .flat_map(|&(p, a)| (0..a).map(move |_| p))
            .map(|p| Device::perfect(p as usize))
            .collect::<Result<_, _>>()?;
        let product = Device::product_all(&parts, &Limits::default())?;
        let cm = Device::perfect(m as usize)?;
        Some(decide_equivalence(&cm, &product, config)?.is_equivalent())
    } else {
        None
    };
    Ok(PerfectFactorization {
        m,
        factors,
        certified,
    })
}
