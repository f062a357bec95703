use std::fmt;

use super::{Partition, PartitionError};

/// A lattice polynomial over partition variables `x1, x2, ...`.
///
/// Variables are numbered from 1. Evaluating on `k` arguments requires every
/// variable index to lie in `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LatticePoly {
    Var(usize),
    Meet(Box<LatticePoly>, Box<LatticePoly>),
    Join(Box<LatticePoly>, Box<LatticePoly>),
}

impl LatticePoly {
    pub fn var(index: usize) -> Self {
        LatticePoly::Var(index)
    }

    pub fn meet(self, other: LatticePoly) -> Self {
        LatticePoly::Meet(Box::new(self), Box::new(other))
    }

    pub fn join(self, other: LatticePoly) -> Self {
        LatticePoly::Join(Box::new(self), Box::new(other))
    }

    /// Largest variable index that occurs.
    pub fn arity(&self) -> usize {
        match self {
            LatticePoly::Var(i) => *i,
            LatticePoly::Meet(a, b) | LatticePoly::Join(a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            LatticePoly::Var(_) => 1,
            LatticePoly::Meet(a, b) | LatticePoly::Join(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn check(&self, given: usize) -> Result<(), PartitionError> {
        match self {
            LatticePoly::Var(i) if *i == 0 || *i > given => {
                Err(PartitionError::Arity { index: *i, given })
            }
            LatticePoly::Var(_) => Ok(()),
            LatticePoly::Meet(a, b) | LatticePoly::Join(a, b) => {
                a.check(given)?;
                b.check(given)
            }
        }
    }

    pub fn eval(&self, args: &[Partition]) -> Result<Partition, PartitionError> {
        self.check(args.len())?;
        if let Some(first) = args.first() {
            if args.iter().any(|p| !p.same_ground(first)) {
                return Err(PartitionError::GroundMismatch);
            }
        }
        Ok(self.eval_unchecked(args))
    }

    pub(crate) fn eval_unchecked(&self, args: &[Partition]) -> Partition {
        match self {
            LatticePoly::Var(i) => args[i - 1].clone(),
            LatticePoly::Meet(a, b) => a.eval_unchecked(args).meet_unchecked(&b.eval_unchecked(args)),
            LatticePoly::Join(a, b) => a.eval_unchecked(args).join_unchecked(&b.eval_unchecked(args)),
        }
    }
}

impl fmt::Display for LatticePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(p: &LatticePoly, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match p {
                LatticePoly::Var(_) => write!(f, "{p}"),
                _ => write!(f, "({p})"),
            }
        }
        match self {
            LatticePoly::Var(i) => write!(f, "x{i}"),
            LatticePoly::Meet(a, b) => {
                side(a, f)?;
                f.write_str(" ∧ ")?;
                side(b, f)
            }
            LatticePoly::Join(a, b) => {
                side(a, f)?;
                f.write_str(" ∨ ")?;
                side(b, f)
            }
        }
    }
}
