use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` accepted by [`enumerate_partitions`].
pub const MAX_PARTITION_SIZE: usize = 8;

/// A set partition of `{0, .., n-1}`; blocks are ordered by least element
/// and each block is sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionStructure {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl PartitionStructure {
    pub fn nu(&self) -> usize {
        self.blocks.len()
    }

    /// Bit mask of each block.
    pub fn masks(&self) -> Vec<u32> {
        self.blocks
            .iter()
            .map(|b| b.iter().fold(0u32, |m, &i| m | (1 << i)))
            .collect()
    }

    /// Moebius weight `prod (-1)^{|B|-1} (|B|-1)!` of the partition lattice.
    pub fn moebius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let k = b.len() - 1;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(k)
            })
            .product()
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// All set partitions of `{0, .., n-1}` in restricted-growth order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<PartitionStructure>> {
    if !(1..=MAX_PARTITION_SIZE).contains(&n) {
        return Err(Error::OutOfRange {
            what: "partition size",
            value: n as i64,
            range: "1..=8",
        });
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    grow(&mut labels, 1, 1, &mut out);
    Ok(out)
}

fn grow(labels: &mut Vec<usize>, pos: usize, used: usize, out: &mut Vec<PartitionStructure>) {
    let n = labels.len();
    if pos == n {
        let mut blocks = vec![Vec::new(); used];
        for (i, &l) in labels.iter().enumerate() {
            blocks[l].push(i);
        }
        out.push(PartitionStructure { n, blocks });
        return;
    }
    for l in 0..=used {
        labels[pos] = l;
        grow(labels, pos + 1, used.max(l + 1), out);
    }
}

/// All perfect matchings of `set`. The empty set has one empty matching.
pub fn enumerate_pairings(set: &[usize]) -> Result<Vec<Vec<(usize, usize)>>> {
    if set.len() % 2 == 1 {
        return Err(Error::OddPairing(set.len()));
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(set.len() / 2);
    pair_up(set.to_vec(), &mut current, &mut out);
    Ok(out)
}

fn pair_up(rest: Vec<usize>, current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    if rest.is_empty() {
        out.push(current.clone());
        return;
    }
    let first = rest[0];
    for k in 1..rest.len() {
        let mut remaining = Vec::with_capacity(rest.len() - 2);
        remaining.extend(rest[1..k].iter().copied());
        remaining.extend(rest[k + 1..].iter().copied());
        current.push((first, rest[k]));
        pair_up(remaining, current, out);
        current.pop();
    }
}
