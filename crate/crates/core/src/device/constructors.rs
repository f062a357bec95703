//! The standard device families and the two ways of combining devices.

use std::collections::HashSet;
use std::sync::Arc;

use super::{Device, DeviceError};
use crate::config::Limits;
use crate::partition::{GroundSet, Partition};

fn bit_strings(n: usize) -> Arc<GroundSet> {
    let labels = (0..1usize << n).map(|x| format!("{x:0n$b}"));
    Arc::new(GroundSet::new(labels).expect("bit strings are distinct"))
}

/// Number of `k`-dimensional subspaces of an `n`-dimensional space over F_2.
fn gaussian_binomial_2(n: usize, k: usize) -> u128 {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (1u128 << (n - i)) - 1;
        den *= (1u128 << (i + 1)) - 1;
    }
    num / den
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

impl Device {
    /// The perfect device `C_m` on states `1..=m` with the identity as its
    /// only partition.
    pub fn perfect(m: usize) -> Result<Device, DeviceError> {
        if m == 0 {
            return Err(DeviceError::InvalidParameter("perfect device needs m >= 1".into()));
        }
        let states = Arc::new(GroundSet::numbered(m)?);
        Device::new(
            Some(format!("C_{m}")),
            states.clone(),
            vec![Partition::identity(states)],
        )
    }

    /// The trivial device on states `1..=m`, whose only read reveals nothing.
    pub fn trivial(m: usize) -> Result<Device, DeviceError> {
        if m == 0 {
            return Err(DeviceError::InvalidParameter("trivial device needs m >= 1".into()));
        }
        let states = Arc::new(GroundSet::numbered(m)?);
        Device::new(Some(format!("T_{m}")), states.clone(), vec![Partition::top(states)])
    }

    /// The projective device `P_n`: states are `n`-bit strings and each read
    /// reveals a single bit.
    pub fn projective(n: usize, limits: &Limits) -> Result<Device, DeviceError> {
        if n == 0 {
            return Err(DeviceError::InvalidParameter("projective device needs n >= 1".into()));
        }
        if n > limits.projective_max_bits {
            return Err(DeviceError::CapExceeded {
                what: "projective bits",
                value: n,
                cap: limits.projective_max_bits,
            });
        }
        let states = bit_strings(n);
        let partitions = (0..n)
            .map(|i| {
                let bit = n - 1 - i;
                let keys: Vec<u32> = (0..1u32 << n).map(|x| (x >> bit) & 1).collect();
                Partition::from_keys(states.clone(), &keys, 2)
            })
            .collect();
        Device::new(Some(format!("P_{n}")), states, partitions)
    }

    /// The linear device `L_{n,k}`: states are `n`-bit strings and the reads
    /// are the kernels of the surjective linear maps `F_2^n -> F_2^k`.
    ///
    /// Each kernel is enumerated once, through the reduced row echelon form of
    /// the map's row space.
    pub fn linear(n: usize, k: usize, limits: &Limits) -> Result<Device, DeviceError> {
        if k == 0 || k > n {
            return Err(DeviceError::InvalidParameter(format!(
                "linear device needs 1 <= k <= n, got n = {n}, k = {k}"
            )));
        }
        if n > limits.linear_max_bits {
            return Err(DeviceError::CapExceeded {
                what: "linear bits",
                value: n,
                cap: limits.linear_max_bits,
            });
        }
        let count = gaussian_binomial_2(n, k);
        if count > limits.linear_max_partitions as u128 {
            return Err(DeviceError::CapExceeded {
                what: "linear kernels",
                value: count.min(usize::MAX as u128) as usize,
                cap: limits.linear_max_partitions,
            });
        }
        let states = bit_strings(n);
        let mut partitions = Vec::with_capacity(count as usize);
        // Column j is variable x_{j+1}, stored at bit n-1-j of the state index.
        let col_bit = |j: usize| 1u32 << (n - 1 - j);
        for pivots in combinations(n, k) {
            let free: Vec<(usize, usize)> = pivots
                .iter()
                .enumerate()
                .flat_map(|(r, &c)| {
                    let pivots = &pivots;
                    (c + 1..n)
                        .filter(move |j| !pivots.contains(j))
                        .map(move |j| (r, j))
                })
                .collect();
            for fill in 0u64..1 << free.len() {
                let mut rows: Vec<u32> = pivots.iter().map(|&c| col_bit(c)).collect();
                for (bit, &(r, j)) in free.iter().enumerate() {
                    if fill >> bit & 1 == 1 {
                        rows[r] |= col_bit(j);
                    }
                }
                let keys: Vec<u32> = (0..1u32 << n)
                    .map(|x| {
                        rows.iter()
                            .enumerate()
                            .fold(0, |acc, (r, &row)| acc | (((row & x).count_ones() & 1) << r))
                    })
                    .collect();
                partitions.push(Partition::from_keys(states.clone(), &keys, 1 << k));
            }
        }
        let name = if k == 1 {
            format!("L_{n}")
        } else {
            format!("L_{{{n},{k}}}")
        };
        Device::new(Some(name), states, partitions)
    }

    /// The direct product: states are pairs and reads are pairs of reads.
    pub fn product(&self, other: &Device, limits: &Limits) -> Result<Device, DeviceError> {
        let size = self.num_states().saturating_mul(other.num_states());
        if size > limits.product_max_states {
            return Err(DeviceError::CapExceeded {
                what: "product states",
                value: size,
                cap: limits.product_max_states,
            });
        }
        let states = Arc::new(self.states.product(&other.states)?);
        let mut partitions = Vec::with_capacity(self.num_partitions() * other.num_partitions());
        for p in &self.partitions {
            for q in &other.partitions {
                partitions.push(p.product_in(q, states.clone()));
            }
        }
        let name = match (&self.name, &other.name) {
            (Some(a), Some(b)) => Some(format!("{a} x {b}")),
            _ => None,
        };
        Device::new(name, states, partitions)
    }

    /// Left-folded product of a non-empty list of devices.
    pub fn product_all(devices: &[Device], limits: &Limits) -> Result<Device, DeviceError> {
        let (first, rest) = devices
            .split_first()
            .ok_or_else(|| DeviceError::InvalidParameter("empty product".into()))?;
        rest.iter()
            .try_fold(first.clone(), |acc, d| acc.product(d, limits))
    }

    /// The device answering up to `k` non-adaptive reads at once: its
    /// partitions are the meets of all families of at most `k` partitions.
    pub fn k_reads(&self, k: usize, limits: &Limits) -> Result<Device, DeviceError> {
        if k == 0 {
            return Err(DeviceError::InvalidParameter("k_reads needs k >= 1".into()));
        }
        let p = self.num_partitions();
        let subsets: u128 = (1..=k.min(p)).map(|j| binomial(p, j)).sum();
        if subsets > limits.k_reads_max_subsets as u128 {
            return Err(DeviceError::CapExceeded {
                what: "read subsets",
                value: subsets.min(usize::MAX as u128) as usize,
                cap: limits.k_reads_max_subsets,
            });
        }
        let mut seen: HashSet<Partition> = HashSet::new();
        let mut stack: Vec<(usize, usize, Partition)> = self
            .partitions
            .iter()
            .enumerate()
            .map(|(i, q)| (i, 1, q.clone()))
            .collect();
        while let Some((last, size, acc)) = stack.pop() {
            if size < k {
                for j in last + 1..p {
                    stack.push((j, size + 1, acc.meet_unchecked(&self.partitions[j])));
                }
            }
            seen.insert(acc);
        }
        let name = self.name.as_ref().map(|n| format!("{n}^({k})"));
        Device::new(name, self.states.clone(), seen.into_iter().collect())
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(current.clone());
        let mut i = k;
        while i > 0 && current[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        current[i - 1] += 1;
        for j in i..k {
            current[j] = current[j - 1] + 1;
        }
    }
}
