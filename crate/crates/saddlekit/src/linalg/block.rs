use serde::{Deserialize, Serialize};

use super::{dist_sq, dot};

/// A vector partitioned into ordered blocks, e.g. `x = [x₁ᵀ,...,x_Nᵀ]ᵀ`.
///
/// `concat` and `split` round-trip bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockVector {
    blocks: Vec<Vec<f64>>,
}

impl BlockVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        BlockVector { blocks }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        BlockVector {
            blocks: dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut Vec<f64> {
        &mut self.blocks[i]
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn concat(&self) -> Vec<f64> {
        self.blocks.concat()
    }

    pub fn split(flat: &[f64], dims: &[usize]) -> Self {
        assert_eq!(flat.len(), dims.iter().sum::<usize>(), "split dim mismatch");
        let mut blocks = Vec::with_capacity(dims.len());
        let mut at = 0;
        for &d in dims {
            blocks.push(flat[at..at + d].to_vec());
            at += d;
        }
        BlockVector { blocks }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().map(|b| dot(b, b)).sum()
    }

    pub fn dist_sq(&self, other: &BlockVector) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| dist_sq(a, b))
            .sum()
    }

    pub fn dist(&self, other: &BlockVector) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// `self += s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &BlockVector) {
        debug_assert_eq!(self.dims(), other.dims());
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn scale(&self, s: f64) -> BlockVector {
        BlockVector {
            blocks: self.blocks.iter().map(|b| super::scale(b, s)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_split_identity() {
        let bv = BlockVector::new(vec![vec![1.0, 2.5e-300], vec![-0.0], vec![3.0, 4.0, 5.0]]);
        let flat = bv.concat();
        let back = BlockVector::split(&flat, &bv.dims());
        // bit-exact round trip, including signed zero
        assert_eq!(bv, back);
        assert!(back.block(1)[0].is_sign_negative());
    }

    #[test]
    fn total_dim_sums_blocks() {
        let bv = BlockVector::zeros(&[2, 0, 3]);
        assert_eq!(bv.total_dim(), 5);
        assert_eq!(bv.dims(), vec![2, 0, 3]);
    }
}
