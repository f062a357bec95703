//! Size caps and search budgets.
//!
//! Every exhaustive routine in the crate is bounded by one of these values so
//! that an oversized input fails loudly instead of running for hours.

/// Caps on device constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest `n` accepted by the projective device constructor.
    pub projective_max_bits: usize,
    /// Largest `n` accepted by the linear device constructor.
    pub linear_max_bits: usize,
    /// Largest number of distinct kernels a linear device may have.
    pub linear_max_partitions: usize,
    /// Largest state space a direct product may produce.
    pub product_max_states: usize,
    /// Largest number of read subsets enumerated by the k-read construction.
    pub k_reads_max_subsets: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            projective_max_bits: 10,
            linear_max_bits: 8,
            linear_max_partitions: 20_000,
            product_max_states: 4096,
            k_reads_max_subsets: 2_000_000,
        }
    }
}

/// Knobs for the reduction and equivalence searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    /// Backtracking nodes (tentative state assignments) allowed per search.
    pub node_budget: u64,
    /// Refute reductions between binary products through their index
    /// groupings before falling back to the generic search.
    pub product_shortcut: bool,
    /// Expression depth of the lattice-polynomial signature compared before
    /// an equivalence search.
    pub signature_depth: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            node_budget: 10_000_000,
            product_shortcut: true,
            signature_depth: 2,
        }
    }
}

impl SolverConfig {
    /// The plain backtracking search with no structural shortcut.
    pub fn generic() -> Self {
        Self {
            product_shortcut: false,
            ..Self::default()
        }
    }
}
