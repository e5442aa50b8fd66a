//! Integer partitions and the set partitions of `{1..m}` realising them.
//!
//! Canonical orders:
//! * partitions of `m` are listed in reverse lexicographic order, so
//!   `(3), (2,1), (1,1,1)`;
//! * a [`BlockSplit`] lists its blocks by descending size, ties broken by the
//!   smallest element, each block sorted ascending;
//! * the splits of a given type are sorted lexicographically by that block list.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Default cap on `m` for set-partition enumeration.
pub const DEFAULT_SPLIT_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("m must be at least 1")]
    ZeroWeight,
    #[error("partition parts must be positive and weakly decreasing, got {0:?}")]
    Malformed(Vec<usize>),
    #[error("m = {m} exceeds the enumeration cap {cap}")]
    CapExceeded { m: usize, cap: usize },
    #[error("blocks {0:?} do not form a set partition of 1..m")]
    BadSplit(Vec<Vec<usize>>),
}

/// A weakly decreasing sequence of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self, PartitionError> {
        let ok = parts.iter().all(|&p| p > 0) && parts.windows(2).all(|w| w[0] >= w[1]);
        if !ok || parts.is_empty() {
            return Err(PartitionError::Malformed(parts));
        }
        Ok(Self { parts })
    }

    /// Builds a partition from parts in any order.
    pub fn from_unsorted(mut parts: Vec<usize>) -> Result<Self, PartitionError> {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self::new(parts)
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `λ'_i = #{j : λ_j >= i}`.
    pub fn conjugate(&self) -> Partition {
        let parts = (1..=self.parts[0])
            .map(|i| self.parts.iter().filter(|&&p| p >= i).count())
            .collect();
        Partition { parts }
    }

    /// `(size, multiplicity)` pairs, largest size first.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &p in &self.parts {
            match out.last_mut() {
                Some((s, k)) if *s == p => *k += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// Number of set partitions of `{1..m}` of this type:
    /// `m! / (∏ λ_j! · ∏ mult_i!)`.
    pub fn split_count(&self) -> u128 {
        let mut count = factorial(self.weight());
        for &p in &self.parts {
            count /= factorial(p);
        }
        for (_, k) in self.multiplicities() {
            count /= factorial(k);
        }
        count
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = PartitionError;
    fn try_from(v: Vec<usize>) -> Result<Self, PartitionError> {
        Self::new(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All partitions of `m` in reverse lexicographic order.
pub fn enumerate_partitions(m: usize) -> Result<Vec<Partition>, PartitionError> {
    if m == 0 {
        return Err(PartitionError::ZeroWeight);
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill(m, m, &mut current, &mut out);
    Ok(out)
}

fn fill(rest: usize, max: usize, current: &mut Vec<usize>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition {
            parts: current.clone(),
        });
        return;
    }
    for p in (1..=rest.min(max)).rev() {
        current.push(p);
        fill(rest - p, p, current, out);
        current.pop();
    }
}

/// A set partition of `{1..m}` in canonical block order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct BlockSplit {
    blocks: Vec<Vec<usize>>,
}

impl BlockSplit {
    /// Validates and canonicalises a list of blocks over `1..m`.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        let m: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; m + 1];
        for block in &blocks {
            if block.is_empty() {
                return Err(PartitionError::BadSplit(blocks.clone()));
            }
            for &x in block {
                if x == 0 || x > m || seen[x] {
                    return Err(PartitionError::BadSplit(blocks.clone()));
                }
                seen[x] = true;
            }
        }
        for block in &mut blocks {
            block.sort_unstable();
        }
        blocks.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn m(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// The block-size multiset as a partition.
    pub fn block_type(&self) -> Partition {
        Partition {
            parts: self.blocks.iter().map(Vec::len).collect(),
        }
    }

    /// Blocks as bitmasks over zero-based indices (element `i` is bit `i-1`).
    pub fn masks(&self) -> Vec<u32> {
        self.blocks
            .iter()
            .map(|b| b.iter().fold(0u32, |acc, &x| acc | 1 << (x - 1)))
            .collect()
    }
}

impl TryFrom<Vec<Vec<usize>>> for BlockSplit {
    type Error = PartitionError;
    fn try_from(v: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        Self::new(v)
    }
}

impl From<BlockSplit> for Vec<Vec<usize>> {
    fn from(s: BlockSplit) -> Self {
        s.blocks
    }
}

impl fmt::Display for BlockSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks
            .iter()
            .map(|b| b.iter().map(usize::to_string).collect::<String>())
            .collect();
        write!(f, "{{{}}}", blocks.join("|"))
    }
}

/// Every set partition of `{1..m}`, canonicalised, in restricted-growth order.
pub fn set_partitions(m: usize, cap: usize) -> Result<Vec<BlockSplit>, PartitionError> {
    if m == 0 {
        return Err(PartitionError::ZeroWeight);
    }
    if m > cap {
        return Err(PartitionError::CapExceeded { m, cap });
    }
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    grow(1, m, &mut blocks, &mut out);
    Ok(out)
}

fn grow(x: usize, m: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<BlockSplit>) {
    if x > m {
        out.push(BlockSplit::new(blocks.clone()).expect("restricted growth yields a set partition"));
        return;
    }
    for i in 0..blocks.len() {
        blocks[i].push(x);
        grow(x + 1, m, blocks, out);
        blocks[i].pop();
    }
    blocks.push(vec![x]);
    grow(x + 1, m, blocks, out);
    blocks.pop();
}

/// All splits of type `λ`, in canonical order, with the default cap.
pub fn splits_of_type(lambda: &Partition) -> Result<Vec<BlockSplit>, PartitionError> {
    splits_of_type_capped(lambda, DEFAULT_SPLIT_CAP)
}

pub fn splits_of_type_capped(lambda: &Partition, cap: usize) -> Result<Vec<BlockSplit>, PartitionError> {
    let mut all = splits_by_type(lambda.weight(), cap)?;
    Ok(all.remove(lambda).unwrap_or_default())
}

/// Splits of `{1..m}` grouped by type, each group in canonical order.
pub fn splits_by_type(m: usize, cap: usize) -> Result<BTreeMap<Partition, Vec<BlockSplit>>, PartitionError> {
    let mut map: BTreeMap<Partition, Vec<BlockSplit>> = BTreeMap::new();
    for split in set_partitions(m, cap)? {
        map.entry(split.block_type()).or_default().push(split);
    }
    for group in map.values_mut() {
        group.sort();
    }
    Ok(map)
}

/// Bell numbers via the Bell triangle, independent of the enumerators above.
pub fn bell_number(m: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..m {
        let mut next = vec![*row.last().expect("row is nonempty")];
        for &x in &row {
            let last = *next.last().expect("row is nonempty");
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_counts_and_order() {
        let three: Vec<Vec<usize>> = enumerate_partitions(3)
            .unwrap()
            .into_iter()
            .map(Into::into)
            .collect();
        assert_eq!(three, vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(enumerate_partitions(4).unwrap().len(), 5);
        assert_eq!(enumerate_partitions(6).unwrap().len(), 11);
        assert_eq!(enumerate_partitions(0), Err(PartitionError::ZeroWeight));
    }

    #[test]
    fn conjugates() {
        assert_eq!(p(&[3]).conjugate(), p(&[1, 1, 1]));
        assert_eq!(p(&[2, 1]).conjugate(), p(&[2, 1]));
        assert_eq!(p(&[4, 2, 1]).conjugate(), p(&[3, 2, 1, 1]));
    }

    #[test]
    fn rejects_malformed() {
        assert!(Partition::new(vec![1, 2]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
        assert!(Partition::new(vec![]).is_err());
        assert!(BlockSplit::new(vec![vec![1, 2], vec![2]]).is_err());
        assert!(BlockSplit::new(vec![vec![1, 4]]).is_err());
    }

    #[test]
    fn splits_of_small_types() {
        let s: Vec<String> = splits_of_type(&p(&[2, 1]))
            .unwrap()
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(s, vec!["{12|3}", "{13|2}", "{23|1}"]);
        assert_eq!(splits_of_type(&p(&[2, 1, 1])).unwrap().len(), 6);
        assert_eq!(splits_of_type(&p(&[5])).unwrap().len(), 1);
        assert!(matches!(
            splits_of_type(&p(&[11])),
            Err(PartitionError::CapExceeded { m: 11, cap: 10 })
        ));
    }

    #[test]
    fn canonical_block_order() {
        let s = BlockSplit::new(vec![vec![3], vec![4, 1], vec![2]]).unwrap();
        assert_eq!(s.blocks(), &[vec![1, 4], vec![2], vec![3]]);
        assert_eq!(s.masks(), vec![0b1001, 0b0010, 0b0100]);
    }

    #[test]
    fn bell_triangle() {
        let expected = [1u128, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (m, &b) in expected.iter().enumerate() {
            assert_eq!(bell_number(m), b);
        }
    }

    #[test]
    fn counts_match_enumeration_and_bell() {
        for m in 1..=8 {
            let groups = splits_by_type(m, DEFAULT_SPLIT_CAP).unwrap();
            let mut total = 0u128;
            for lambda in enumerate_partitions(m).unwrap() {
                let n = groups.get(&lambda).map_or(0, Vec::len) as u128;
                assert_eq!(n, lambda.split_count(), "{lambda}");
                total += n;
            }
            assert_eq!(total, bell_number(m));
        }
    }

    #[test]
    fn serde_layout() {
        let s = BlockSplit::new(vec![vec![2, 1], vec![3]]).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "[[1,2],[3]]");
        assert_eq!(serde_json::to_string(&p(&[2, 1])).unwrap(), "[2,1]");
        assert!(serde_json::from_str::<Partition>("[1,2]").is_err());
    }
}
