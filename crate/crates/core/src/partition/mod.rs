//! Set partitions of finite, ordered ground sets.
//!
//! A [`Partition`] is stored in canonical form: every element carries the id
//! of its block, and block ids are assigned in order of first appearance. That
//! makes blocks sorted by their minimum element and elements ascending inside
//! each block, so two partitions are equal exactly when their block-id arrays
//! are equal.
//!
//! The refinement order is the usual one: `pi.refines(&rho)` holds when every
//! block of `pi` sits inside a block of `rho`. The identity partition (all
//! singletons) is the bottom of the lattice and the one-block partition is the
//! top.

mod poly;
pub(crate) mod union_find;

pub use poly::LatticePoly;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use union_find::DisjointSet;

/// Errors raised while building or combining partitions.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("ground set is empty")]
    EmptyGround,
    #[error("duplicate label `{0}` in ground set")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("element `{0}` appears in more than one block")]
    Overlap(String),
    #[error("element `{0}` is not covered by any block")]
    Coverage(String),
    #[error("partition contains an empty block")]
    EmptyBlock,
    #[error("partitions are over different ground sets")]
    GroundMismatch,
    #[error("map has {got} entries but its domain has {expected} elements")]
    MapLength { expected: usize, got: usize },
    #[error("map sends element {element} to {image}, outside a codomain of {size} elements")]
    ImageOutOfRange {
        element: usize,
        image: usize,
        size: usize,
    },
    #[error("polynomial refers to variable x{index} but {given} arguments were supplied")]
    Arity { index: usize, given: usize },
}

/// An ordered list of distinct element labels.
#[derive(Clone)]
pub struct GroundSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl GroundSet {
    pub fn new<I, S>(labels: I) -> Result<Self, PartitionError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(PartitionError::EmptyGround);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(PartitionError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    /// The ground set `{1, ..., n}` with decimal labels.
    pub fn numbered(n: usize) -> Result<Self, PartitionError> {
        Self::new((1..=n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false; ground sets are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Row-major cartesian product with labels `(s,t)`.
    ///
    /// When every left label is already a parenthesised tuple the tuple is
    /// extended instead of nested, so `((a,b),c)` is written `(a,b,c)`.
    pub fn product(&self, other: &GroundSet) -> Result<GroundSet, PartitionError> {
        let flatten = self
            .labels
            .iter()
            .all(|l| l.len() >= 2 && l.starts_with('(') && l.ends_with(')'));
        let mut labels = Vec::with_capacity(self.len() * other.len());
        for s in &self.labels {
            let left = if flatten { &s[1..s.len() - 1] } else { s.as_str() };
            for t in &other.labels {
                labels.push(format!("({left},{t})"));
            }
        }
        GroundSet::new(labels)
    }
}

impl PartialEq for GroundSet {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for GroundSet {}

impl fmt::Debug for GroundSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.labels).finish()
    }
}

/// A partition of a [`GroundSet`] in canonical form.
#[derive(Clone)]
pub struct Partition {
    ground: Arc<GroundSet>,
    block_of: Vec<u32>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from blocks of labels, validating that they cover
    /// the ground set exactly once.
    pub fn from_blocks<B, S>(ground: Arc<GroundSet>, blocks: &[B]) -> Result<Self, PartitionError>
    where
        B: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut index_blocks = Vec::with_capacity(blocks.len());
        for block in blocks {
            let mut indices = Vec::with_capacity(block.as_ref().len());
            for label in block.as_ref() {
                let label = label.as_ref();
                let i = ground
                    .index_of(label)
                    .ok_or_else(|| PartitionError::UnknownLabel(label.to_string()))?;
                indices.push(i);
            }
            index_blocks.push(indices);
        }
        Self::from_index_blocks(ground, &index_blocks)
    }

    /// Same as [`Partition::from_blocks`] with element indices.
    pub fn from_index_blocks(
        ground: Arc<GroundSet>,
        blocks: &[Vec<usize>],
    ) -> Result<Self, PartitionError> {
        let n = ground.len();
        let mut owner = vec![u32::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(PartitionError::EmptyBlock);
            }
            for &x in block {
                if x >= n {
                    return Err(PartitionError::UnknownLabel(format!("#{x}")));
                }
                if owner[x] != u32::MAX {
                    return Err(PartitionError::Overlap(ground.label(x).to_string()));
                }
                owner[x] = b as u32;
            }
        }
        if let Some(x) = owner.iter().position(|&b| b == u32::MAX) {
            return Err(PartitionError::Coverage(ground.label(x).to_string()));
        }
        Ok(Self::from_keys(ground, &owner, blocks.len()))
    }

    /// The kernel of `f`: elements are in one block iff `f` agrees on them.
    pub fn kernel<T: Eq + Hash>(ground: Arc<GroundSet>, f: &[T]) -> Result<Self, PartitionError> {
        if f.len() != ground.len() {
            return Err(PartitionError::MapLength {
                expected: ground.len(),
                got: f.len(),
            });
        }
        let mut ids: HashMap<&T, u32> = HashMap::new();
        let mut block_of = Vec::with_capacity(f.len());
        for value in f {
            let next = ids.len() as u32;
            block_of.push(*ids.entry(value).or_insert(next));
        }
        Ok(Self::from_canonical(ground, block_of))
    }

    pub fn identity(ground: Arc<GroundSet>) -> Self {
        let block_of = (0..ground.len() as u32).collect();
        Self::from_canonical(ground, block_of)
    }

    pub fn top(ground: Arc<GroundSet>) -> Self {
        let block_of = vec![0; ground.len()];
        Self::from_canonical(ground, block_of)
    }

    /// Canonicalizes arbitrary block keys in `0..key_space`.
    pub(crate) fn from_keys(ground: Arc<GroundSet>, keys: &[u32], key_space: usize) -> Self {
        let mut relabel = vec![u32::MAX; key_space];
        let mut next = 0u32;
        let block_of = keys
            .iter()
            .map(|&k| {
                let slot = &mut relabel[k as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *slot
            })
            .collect();
        Self::from_canonical(ground, block_of)
    }

    /// `block_of` must already be a restricted growth string.
    pub(crate) fn from_canonical(ground: Arc<GroundSet>, block_of: Vec<u32>) -> Self {
        debug_assert_eq!(block_of.len(), ground.len());
        let count = block_of.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
        let mut blocks = vec![Vec::new(); count];
        for (x, &b) in block_of.iter().enumerate() {
            blocks[b as usize].push(x);
        }
        Self {
            ground,
            block_of,
            blocks,
        }
    }

    pub fn ground(&self) -> &Arc<GroundSet> {
        &self.ground
    }

    /// Number of elements of the ground set.
    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x] as usize
    }

    /// Block id of every element, in canonical (first appearance) numbering.
    pub fn block_ids(&self) -> &[u32] {
        &self.block_of
    }

    pub fn same_block(&self, x: usize, y: usize) -> bool {
        self.block_of[x] == self.block_of[y]
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    pub fn is_top(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn label_blocks(&self) -> Vec<Vec<String>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&x| self.ground.label(x).to_string()).collect())
            .collect()
    }

    pub fn same_ground(&self, other: &Partition) -> bool {
        Arc::ptr_eq(&self.ground, &other.ground) || *self.ground == *other.ground
    }

    fn check_ground(&self, other: &Partition) -> Result<(), PartitionError> {
        if self.same_ground(other) {
            Ok(())
        } else {
            Err(PartitionError::GroundMismatch)
        }
    }

    /// True iff every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> Result<bool, PartitionError> {
        self.check_ground(other)?;
        Ok(refines_ids(&self.block_of, self.num_blocks(), &other.block_of))
    }

    /// Greatest common refinement.
    pub fn meet(&self, other: &Partition) -> Result<Partition, PartitionError> {
        self.check_ground(other)?;
        Ok(self.meet_unchecked(other))
    }

    pub(crate) fn meet_unchecked(&self, other: &Partition) -> Partition {
        let block_of = meet_ids(&self.block_of, self.num_blocks(), &other.block_of, other.num_blocks());
        Self::from_canonical(self.ground.clone(), block_of)
    }

    /// Finest common coarsening, computed as connected components of the
    /// union of both equivalence relations.
    pub fn join(&self, other: &Partition) -> Result<Partition, PartitionError> {
        self.check_ground(other)?;
        Ok(self.join_unchecked(other))
    }

    pub(crate) fn join_unchecked(&self, other: &Partition) -> Partition {
        let na = self.num_blocks();
        let mut dsu = DisjointSet::new(na + other.num_blocks());
        for (&a, &b) in self.block_of.iter().zip(&other.block_of) {
            dsu.union(a as usize, na + b as usize);
        }
        let keys: Vec<u32> = self
            .block_of
            .iter()
            .map(|&a| dsu.find(a as usize) as u32)
            .collect();
        Self::from_keys(self.ground.clone(), &keys, na + other.num_blocks())
    }

    /// Direct product over the cartesian product of the two ground sets.
    pub fn product(&self, other: &Partition) -> Result<Partition, PartitionError> {
        let ground = Arc::new(self.ground.product(&other.ground)?);
        Ok(self.product_in(other, ground))
    }

    /// Direct product onto a prebuilt product ground set, so that all
    /// partitions of a product device share one [`GroundSet`].
    pub(crate) fn product_in(&self, other: &Partition, ground: Arc<GroundSet>) -> Partition {
        debug_assert_eq!(ground.len(), self.len() * other.len());
        let nb = other.num_blocks() as u32;
        let mut keys = Vec::with_capacity(ground.len());
        for &a in &self.block_of {
            for &b in &other.block_of {
                keys.push(a * nb + b);
            }
        }
        Self::from_keys(ground, &keys, self.num_blocks() * other.num_blocks())
    }

    /// The pullback `self ∘ phi`, a partition of `domain` in which `x` and `y`
    /// share a block iff `phi(x)` and `phi(y)` share a block of `self`.
    pub fn pullback(
        &self,
        domain: Arc<GroundSet>,
        phi: &[usize],
    ) -> Result<Partition, PartitionError> {
        if phi.len() != domain.len() {
            return Err(PartitionError::MapLength {
                expected: domain.len(),
                got: phi.len(),
            });
        }
        let mut keys = Vec::with_capacity(phi.len());
        for (element, &image) in phi.iter().enumerate() {
            let Some(&b) = self.block_of.get(image) else {
                return Err(PartitionError::ImageOutOfRange {
                    element,
                    image,
                    size: self.len(),
                });
            };
            keys.push(b);
        }
        Ok(Self::from_keys(domain, &keys, self.num_blocks()))
    }

    /// Orders partitions by their canonical block lists.
    pub fn canonical_cmp(&self, other: &Partition) -> Ordering {
        self.blocks.cmp(&other.blocks)
    }

    /// Meet of a family; the top partition for an empty family.
    pub fn meet_all<'a, I>(ground: &Arc<GroundSet>, parts: I) -> Result<Partition, PartitionError>
    where
        I: IntoIterator<Item = &'a Partition>,
    {
        let mut acc = Partition::top(ground.clone());
        for p in parts {
            acc = acc.meet(p)?;
        }
        Ok(acc)
    }

    /// Join of a family; the identity partition for an empty family.
    pub fn join_all<'a, I>(ground: &Arc<GroundSet>, parts: I) -> Result<Partition, PartitionError>
    where
        I: IntoIterator<Item = &'a Partition>,
    {
        let mut acc = Partition::identity(ground.clone());
        for p in parts {
            acc = acc.join(p)?;
        }
        Ok(acc)
    }
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        self.block_of == other.block_of && self.same_ground(other)
    }
}

impl Eq for Partition {}

impl Hash for Partition {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.block_of.hash(state);
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("{")?;
            for (j, &x) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                f.write_str(self.ground.label(x))?;
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition({self})")
    }
}

// Raw kernels over block-id slices. The solvers call these in tight loops.

pub(crate) fn refines_ids(a: &[u32], a_blocks: usize, b: &[u32]) -> bool {
    let mut image = vec![u32::MAX; a_blocks];
    for (&x, &y) in a.iter().zip(b) {
        let slot = &mut image[x as usize];
        if *slot == u32::MAX {
            *slot = y;
        } else if *slot != y {
            return false;
        }
    }
    true
}

pub(crate) fn meet_ids(a: &[u32], a_blocks: usize, b: &[u32], b_blocks: usize) -> Vec<u32> {
    let space = a_blocks * b_blocks;
    let mut next = 0u32;
    if space <= 1 << 22 {
        let mut relabel = vec![u32::MAX; space];
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                let slot = &mut relabel[x as usize * b_blocks + y as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *slot
            })
            .collect()
    } else {
        let mut relabel: HashMap<(u32, u32), u32> = HashMap::new();
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                *relabel.entry((x, y)).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }
}

/// Block count of the meet, without materializing it. `scratch` must have
/// room for `a_blocks * b_blocks` entries.
pub(crate) fn meet_count(a: &[u32], b: &[u32], b_blocks: usize, scratch: &mut Vec<u32>, stamp: u32) -> usize {
    let mut count = 0;
    for (&x, &y) in a.iter().zip(b) {
        let slot = &mut scratch[x as usize * b_blocks + y as usize];
        if *slot != stamp {
            *slot = stamp;
            count += 1;
        }
    }
    count
}

pub(crate) fn join_count(a: &[u32], a_blocks: usize, b: &[u32], b_blocks: usize) -> usize {
    let mut dsu = DisjointSet::new(a_blocks + b_blocks);
    let mut merges = 0;
    for (&x, &y) in a.iter().zip(b) {
        if dsu.union(x as usize, a_blocks + y as usize) {
            merges += 1;
        }
    }
    a_blocks + b_blocks - merges
}
