//! Block partitions of the coordinate index set.
//!
//! Coordinates are 1-based throughout: a scheme partitions `{1, ..., j_max}`
//! into consecutive blocks `B_k = {l_k, ..., l_{k+1} - 1}`. Three kinds are
//! supported: the exponential boundaries `l_k = ⌊e^k⌋` of the adaptive block
//! prior, dyadic (wavelet-style) blocks `B_k = {2^k, ..., 2^{k+1} - 1}`, and
//! constant-size blocks.

use crate::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// `l_k = ⌊e^k⌋`, duplicate boundaries collapsed.
    Exponential,
    /// `B_k = {2^k, ..., 2^{k+1} - 1}`.
    Dyadic,
    /// Every block has the given size, except possibly the last.
    Constant(usize),
}

/// A partition of `{1, ..., j_max}` into consecutive blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockScheme {
    kind: BlockKind,
    /// 1-based start indices `l_k`; strictly increasing, first entry 1.
    boundaries: Vec<usize>,
    j_max: usize,
}

impl BlockScheme {
    pub fn build(kind: BlockKind, j_max: usize) -> Result<Self> {
        if j_max == 0 {
            return invalid("j_max must be at least 1");
        }
        let mut boundaries = Vec::new();
        match kind {
            BlockKind::Exponential => {
                let mut k = 0u32;
                loop {
                    let l = (k as f64).exp().floor() as usize;
                    if l > j_max {
                        break;
                    }
                    if boundaries.last() != Some(&l) {
                        boundaries.push(l);
                    }
                    k += 1;
                }
            }
            BlockKind::Dyadic => {
                let mut l = 1usize;
                while l <= j_max {
                    boundaries.push(l);
                    l *= 2;
                }
            }
            BlockKind::Constant(m) => {
                if m == 0 {
                    return invalid("constant block size must be positive");
                }
                let mut l = 1usize;
                while l <= j_max {
                    boundaries.push(l);
                    l += m;
                }
            }
        }
        Ok(BlockScheme { kind, boundaries, j_max })
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn n_blocks(&self) -> usize {
        self.boundaries.len()
    }

    /// 1-based start index of block k.
    pub fn start(&self, k: usize) -> usize {
        self.boundaries[k]
    }

    /// 1-based inclusive end index of block k (final block truncated at j_max).
    pub fn end(&self, k: usize) -> usize {
        if k + 1 < self.boundaries.len() {
            self.boundaries[k + 1] - 1
        } else {
            self.j_max
        }
    }

    pub fn size(&self, k: usize) -> usize {
        self.end(k) - self.start(k) + 1
    }

    /// 0-based range for slicing coefficient vectors.
    pub fn range0(&self, k: usize) -> std::ops::Range<usize> {
        (self.start(k) - 1)..self.end(k)
    }

    /// The block containing 1-based coordinate j; O(log K).
    pub fn block_of(&self, j: usize) -> Result<usize> {
        if j == 0 || j > self.j_max {
            return invalid(format!("coordinate {j} outside 1..={}", self.j_max));
        }
        Ok(self.boundaries.partition_point(|&l| l <= j) - 1)
    }
}
