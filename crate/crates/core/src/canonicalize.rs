//! Nilpotency detection and the kernel-flag triangular form.
//!
//! For nilpotent `A` of index `n`, the flag `ker A ⊂ ker A² ⊂ … ⊂ ker Aⁿ`
//! is `A`-invariant in the sense `A(ker Aᵏ) ⊆ ker Aᵏ⁻¹`. Stacking orthonormal
//! bases of the successive differences `Hₖ = ker Aᵏ ⊖ ker Aᵏ⁻¹` gives a unitary
//! `U` with `U A U*` strictly block upper triangular.
//!
//! The flag is computed by deflation: with `Q` an orthonormal basis of the
//! complement of the current flag level, the next level is the null space of
//! the compression `Q* A Q`. Each level is therefore orthogonal to the previous
//! ones by construction and nesting holds even when ranks are decided by a
//! threshold.
//!
//! Roundoff in each level is amplified by roughly `‖A‖/gap` in the next, so on
//! inputs with small singular values the null singular values of later
//! compressions drift upward. A fixed threshold then misses them and reports a
//! spurious extra level. Besides the threshold, a split is therefore also made
//! at the widest gap (ratio at least [`GAP_RATIO`]) whose lower side is below
//! [`GAP_CEILING`]`·‖A‖`.
//!
//! Blocks are zero-padded to the common size `d₁`, embedding `A` as `A ⊕ 0`
//! on an `n·d₁`-dimensional space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{assemble_blocks, op_norm, svd, BlockMatrix, BlockPartition, Matrix, Svd, C64};

/// Default relative threshold below which singular values count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default largest relative singular value that a gap split may discard.
pub const GAP_CEILING: f64 = 1e-8;
/// Minimum ratio between neighbouring singular values for a gap split.
pub const GAP_RATIO: f64 = 1e3;

/// Smallest `n ≥ 1` with `‖Aⁿ‖ ≤ tol·‖A‖ⁿ`. The zero matrix has index 1.
pub fn nilpotency_index(a: &Matrix, tol: f64) -> Result<usize> {
    check_square(a)?;
    let dim = a.nrows();
    let scale = op_norm(a);
    if dim == 0 || scale == 0.0 {
        return Ok(1);
    }
    let unit = a.unscale(scale);
    let mut power = unit.clone();
    let mut ratio = 1.0;
    for k in 1..=dim {
        ratio = op_norm(&power);
        if ratio <= tol {
            return Ok(k);
        }
        power = &power * &unit;
    }
    Err(Error::NotNilpotent { power: dim, ratio })
}

/// Flag dimensions `(d₁, …, dₙ)` with the default rank threshold.
pub fn kernel_flag(a: &Matrix) -> Result<BlockPartition> {
    Canonicalizer::default().kernel_flag(a)
}

/// [`Canonicalizer::triangularize`] with the default rank threshold.
pub fn triangularize(a: &Matrix) -> Result<TriangularForm> {
    Canonicalizer::default().triangularize(a)
}

/// Which chain of subspaces the triangular form is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagSide {
    /// `ker A ⊂ ker A² ⊂ …`, block sizes non-increasing.
    #[default]
    Kernel,
    /// `ran Aⁿ⁻¹ ⊂ … ⊂ ran A ⊂ H`, the kernel flag of `A*` read backwards;
    /// block sizes non-decreasing. Rank decisions drift differently, so it
    /// often succeeds where the kernel side does not and vice versa.
    Range,
}

/// Flag computations with configurable rank decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canonicalizer {
    /// Singular values at or below `max(rank_tol, dim·ε)·‖A‖` are zero.
    pub rank_tol: f64,
    /// Relative bound on values a gap split may discard.
    pub gap_ceiling: f64,
    pub side: FlagSide,
}

impl Default for Canonicalizer {
    fn default() -> Self {
        Canonicalizer { rank_tol: DEFAULT_RANK_TOL, gap_ceiling: GAP_CEILING, side: FlagSide::Kernel }
    }
}

impl Canonicalizer {
    pub fn new(rank_tol: f64) -> Self {
        Canonicalizer { rank_tol, ..Default::default() }
    }

    pub fn with_side(self, side: FlagSide) -> Self {
        Canonicalizer { side, ..self }
    }

    /// Dimensions of `ker Aᵏ ⊖ ker Aᵏ⁻¹`, whatever the configured side.
    pub fn kernel_flag(&self, a: &Matrix) -> Result<BlockPartition> {
        let levels = self.flag_bases(a)?;
        Ok(BlockPartition::new(levels.iter().map(|b| b.ncols()).collect()))
    }

    pub fn triangularize(&self, a: &Matrix) -> Result<TriangularForm> {
        let levels = match self.side {
            FlagSide::Kernel => self.flag_bases(a)?,
            FlagSide::Range => {
                // A*(ker A*ᵏ) ⊆ ker A*ᵏ⁻¹, so reversing the levels makes A
                // strictly block upper triangular
                let mut levels = self.flag_bases(&a.adjoint())?;
                levels.reverse();
                levels
            }
        };
        Ok(form_from_levels(a, levels))
    }


    /// Orthonormal bases (as columns) of the flag differences `H₁, H₂, …`.
    fn flag_bases(&self, a: &Matrix) -> Result<Vec<Matrix>> {
        check_square(a)?;
        let dim = a.nrows();
        if dim == 0 {
            return Err(Error::ShapeMismatch("cannot canonicalize an empty matrix".into()));
        }
        let scale = op_norm(a);
        let threshold = self.rank_tol.max(dim as f64 * f64::EPSILON) * scale;

        let mut levels = Vec::new();
        let mut complement = Matrix::identity(dim, dim);
        let ceiling = self.gap_ceiling * scale;
        while complement.ncols() > 0 {
            let width = complement.ncols();
            let compressed = complement.adjoint() * a * &complement;
            let Svd { s, v, .. } = svd(&compressed);
            // ascending, so the candidate null directions come first
            let order: Vec<usize> = (0..width).rev().collect();
            let sorted: Vec<f64> = order.iter().map(|&k| s[k]).collect();
            let null_count = split_point(&sorted, threshold, ceiling);
            let (null, keep) = order.split_at(null_count);
            if null.is_empty() {
                let smallest = sorted.first().copied().unwrap_or(0.0);
                return Err(Error::NotNilpotent {
                    power: levels.len() + 1,
                    ratio: if scale > 0.0 { smallest / scale } else { smallest },
                });
            }

            let mut level = &complement * v.select_columns(null.iter());
            for mut col in level.column_iter_mut() {
                let pivot = col
                    .iter()
                    .copied()
                    .max_by(|p, q| p.norm().total_cmp(&q.norm()))
                    .unwrap_or_default();
                if pivot.norm() > 0.0 {
                    let phase = pivot.conj().unscale(pivot.norm());
                    col.iter_mut().for_each(|z| *z *= phase);
                }
            }
            complement = &complement * v.select_columns(keep.iter());
            levels.push(level);
        }
        Ok(levels)
    }
}

/// Triangular form for the flag with the given level bases.
fn form_from_levels(a: &Matrix, levels: Vec<Matrix>) -> TriangularForm {
    let dim = a.nrows();
    let partition = BlockPartition::new(levels.iter().map(|b| b.ncols()).collect());
    let n = partition.len();

    let mut u = Matrix::zeros(dim, dim);
    let mut row = 0;
    for basis in &levels {
        u.view_mut((row, 0), (basis.ncols(), dim))
            .copy_from(&basis.adjoint());
        row += basis.ncols();
    }

    // d₁ in exact arithmetic; the maximum guards against rank decisions
    // that break monotonicity
    let pad = partition.sizes().iter().copied().max().unwrap_or(0);
    let mut blocks = BlockMatrix::square(BlockPartition::uniform(n, pad));
    for i in 0..n {
        for j in (i + 1)..n {
            let corner = levels[i].adjoint() * a * &levels[j];
            let mut padded = Matrix::zeros(pad, pad);
            padded.view_mut((0, 0), corner.shape()).copy_from(&corner);
            blocks.insert(i, j, padded).expect("uniform partition fits every block");
        }
    }

    TriangularForm { u, partition, pad, blocks }
}

/// Number of leading entries of the ascending `sorted` to treat as zero:
/// everything at or below `threshold`, extended to the widest gap of ratio
/// at least [`GAP_RATIO`] whose lower side does not exceed `ceiling`.
fn split_point(sorted: &[f64], threshold: f64, ceiling: f64) -> usize {
    let base = sorted.partition_point(|&v| v <= threshold);
    let mut best = (base, 0.0);
    for count in base.max(1)..=sorted.len() {
        let lower = sorted[count - 1];
        if lower > ceiling.max(threshold) {
            break;
        }
        let upper = sorted.get(count).copied().unwrap_or(f64::INFINITY);
        let ratio = if lower > 0.0 { upper / lower } else { f64::INFINITY };
        if ratio >= GAP_RATIO && ratio > best.1 {
            best = (count, ratio);
        }
    }
    best.0
}

fn check_square(a: &Matrix) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )))
    }
}

/// Unitary flag coordinates of a nilpotent matrix with padded blocks.
#[derive(Debug, Clone)]
pub struct TriangularForm {
    /// Rows are the flag basis vectors; `U A U*` is strictly block upper triangular.
    pub u: Matrix,
    /// Level dimensions, `dₖ = dim ker Aᵏ − dim ker Aᵏ⁻¹` on the kernel
    /// side and reversed on the range side; zeros only after lifting.
    pub partition: BlockPartition,
    /// Common padded block size, the largest level.
    pub pad: usize,
    /// Padded blocks `a_{i,j}` (0-based, `i < j` only), each `pad × pad`.
    pub blocks: BlockMatrix,
}

impl TriangularForm {
    /// Number of flag levels `n` (the nilpotency order used).
    pub fn n(&self) -> usize {
        self.partition.len()
    }

    /// Dimension of the original space.
    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Dimension `n·pad` of the padded space.
    pub fn embed_dim(&self) -> usize {
        self.n() * self.pad
    }

    /// Padded block `a_{i,j}` with 1-based level indices.
    pub fn a(&self, i: usize, j: usize) -> Matrix {
        self.blocks.block(i - 1, j - 1)
    }

    /// Padded block matrix assembled in flag coordinates.
    pub fn padded(&self) -> Matrix {
        assemble_blocks(&self.blocks).expect("blocks are shaped by construction")
    }

    /// Appends empty flag levels until there are at least `levels` of them.
    /// `Aⁿ = 0` implies `Aᵐ = 0` for `m ≥ n`, so the form stays valid.
    pub fn lifted(&self, levels: usize) -> TriangularForm {
        if self.n() >= levels {
            return self.clone();
        }
        let mut sizes = self.partition.sizes().to_vec();
        sizes.resize(levels, 0);
        let mut blocks = BlockMatrix::square(BlockPartition::uniform(levels, self.pad));
        for (&(i, j), block) in self.blocks.iter() {
            blocks.insert(i, j, block.clone()).expect("same block size");
        }
        TriangularForm {
            u: self.u.clone(),
            partition: BlockPartition::new(sizes),
            pad: self.pad,
            blocks,
        }
    }

    /// Unitary `W` from `C^dim ⊕ C^(embed − dim)` onto padded flag
    /// coordinates, so that `W (A ⊕ 0) W*` is the padded block matrix.
    pub fn embedding(&self) -> Matrix {
        let dim = self.dim();
        let embed = self.embed_dim();
        let mut w = Matrix::zeros(embed, embed);
        let mut spare = dim;
        for (i, &d) in self.partition.sizes().iter().enumerate() {
            let offset = self.partition.offset(i);
            for r in 0..self.pad {
                let row = i * self.pad + r;
                if r < d {
                    w.row_mut(row).columns_mut(0, dim).copy_from(&self.u.row(offset + r));
                } else {
                    w[(row, spare)] = C64::new(1.0, 0.0);
                    spare += 1;
                }
            }
        }
        w
    }

    /// `A ⊕ 0` on the padded space, in original coordinates.
    pub fn embed_original(&self, a: &Matrix) -> Matrix {
        embed_zero(a, self.embed_dim())
    }
}

/// `A ⊕ 0` of total size `size`.
pub fn embed_zero(a: &Matrix, size: usize) -> Matrix {
    let mut out = Matrix::zeros(size, size);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out
}

/// Largest Frobenius norm over blocks `(i, j)` with `i ≥ j` of `U A U*`,
/// using the unpadded flag partition.
pub fn lower_block_residual(a: &Matrix, form: &TriangularForm) -> f64 {
    let conj = &form.u * a * form.u.adjoint();
    let p = &form.partition;
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        for j in 0..=i {
            let (ri, cj) = (p.sizes()[i], p.sizes()[j]);
            if ri == 0 || cj == 0 {
                continue;
            }
            let block = conj.view((p.offset(i), p.offset(j)), (ri, cj));
            worst = worst.max(block.norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{jordan_block, unitarity_residual};

    fn direct_sum(parts: &[Matrix]) -> Matrix {
        let dim = parts.iter().map(|p| p.nrows()).sum();
        let mut out = Matrix::zeros(dim, dim);
        let mut at = 0;
        for p in parts {
            out.view_mut((at, at), p.shape()).copy_from(p);
            at += p.nrows();
        }
        out
    }

    #[test]
    fn index_examples() {
        assert_eq!(nilpotency_index(&jordan_block(3), 1e-10).unwrap(), 3);
        assert_eq!(nilpotency_index(&Matrix::zeros(4, 4), 1e-10).unwrap(), 1);
        assert!(matches!(
            nilpotency_index(&Matrix::identity(2, 2), 1e-10),
            Err(Error::NotNilpotent { .. })
        ));
        assert!(nilpotency_index(&Matrix::zeros(2, 3), 1e-10).is_err());
    }

    #[test]
    fn flag_examples() {
        assert_eq!(kernel_flag(&jordan_block(4)).unwrap().sizes(), &[1, 1, 1, 1]);
        let a = direct_sum(&[jordan_block(4), jordan_block(2)]);
        assert_eq!(kernel_flag(&a).unwrap().sizes(), &[2, 2, 1, 1]);
        assert_eq!(kernel_flag(&Matrix::zeros(3, 3)).unwrap().sizes(), &[3]);
        assert!(matches!(
            kernel_flag(&Matrix::identity(3, 3)),
            Err(Error::NotNilpotent { power: 1, .. })
        ));
    }

    #[test]
    fn split_rules() {
        assert_eq!(split_point(&[0.0, 1e-17, 0.5, 1.0], 1e-10, 1e-8), 2);
        assert_eq!(split_point(&[1e-17, 3e-10, 1e-3], 1e-10, 1e-8), 1);
        assert_eq!(split_point(&[1e-17, 3e-10, 1e-9, 1e-3], 1e-10, 1e-8), 1);
        assert_eq!(split_point(&[1e-17, 2e-17, 1e-9, 1e-4], 1e-10, 1e-8), 2);
        assert_eq!(split_point(&[1e-9, 1e-7, 1.0], 1e-10, 1e-8), 0);
        assert_eq!(split_point(&[1e-9, 1e-5, 1.0], 1e-10, 1e-8), 1);
        assert_eq!(split_point(&[1e-9, 2e-9], 1e-10, 1e-8), 2);
        assert_eq!(split_point(&[0.0, 0.0, 0.0, 1.0], 1e-10, 1e-8), 3);
        assert_eq!(split_point(&[0.0, 1e-9, 1.0], 1e-10, 1e-8), 1);
        assert_eq!(split_point(&[0.5, 1.0], 1e-10, 1e-8), 0);
        assert_eq!(split_point(&[1e-7, 1.0], 1e-10, 1e-8), 0);
        assert_eq!(split_point(&[], 1e-10, 1e-8), 0);
    }

    #[test]
    fn jordan_block_form_is_standard() {
        let form = triangularize(&jordan_block(4)).unwrap();
        assert_eq!(form.partition.sizes(), &[1, 1, 1, 1]);
        assert_eq!(form.pad, 1);
        assert_eq!(form.embed_dim(), 4);
        for i in 1..4 {
            assert!((form.a(i, i + 1)[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(form.a(1, 3).norm() < 1e-14);
        assert!(lower_block_residual(&jordan_block(4), &form) < 1e-14);
        assert!(unitarity_residual(&form.u) < 1e-14);
    }

    #[test]
    fn range_side_reverses_sizes() {
        let a = direct_sum(&[jordan_block(4), jordan_block(2)]);
        let canon = Canonicalizer::default().with_side(FlagSide::Range);
        let form = canon.triangularize(&a).unwrap();
        assert_eq!(form.partition.sizes(), &[1, 1, 2, 2]);
        assert_eq!(form.pad, 2);
        assert!(lower_block_residual(&a, &form) < 1e-14);
        assert!(unitarity_residual(&form.u) < 1e-14);
        // first level spans the range of A³
        let top = form.u.rows(0, 1).adjoint();
        let cube = &a * &a * &a;
        assert!((&top * (top.adjoint() * &cube) - &cube).norm() < 1e-14);
        // the partition query stays on the kernel side
        assert_eq!(canon.kernel_flag(&a).unwrap().sizes(), &[2, 2, 1, 1]);
    }

    #[test]
    fn zero_matrix_form() {
        let form = triangularize(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(form.n(), 1);
        assert_eq!(form.pad, 3);
        assert_eq!(form.blocks.iter().count(), 0);
    }

    #[test]
    fn embedding_carries_padding() {
        let a = direct_sum(&[jordan_block(3), jordan_block(1)]);
        let form = triangularize(&a).unwrap();
        assert_eq!(form.partition.sizes(), &[2, 1, 1]);
        assert_eq!(form.embed_dim(), 6);
        let w = form.embedding();
        assert!(unitarity_residual(&w) < 1e-13);
        let lhs = &w * form.embed_original(&a) * w.adjoint();
        assert!((lhs - form.padded()).norm() < 1e-13);

        let lifted = form.lifted(4);
        assert_eq!(lifted.partition.sizes(), &[2, 1, 1, 0]);
        assert_eq!(lifted.embed_dim(), 8);
        let w = lifted.embedding();
        let lhs = &w * lifted.embed_original(&a) * w.adjoint();
        assert!((lhs - lifted.padded()).norm() < 1e-13);
    }
}
