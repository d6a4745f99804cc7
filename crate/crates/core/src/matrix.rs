//! Dense complex matrices and the handful of factorizations the commutator
//! constructions are built from: singular values, Hermitian PSD roots, the
//! Moore-Penrose pseudoinverse and block assembly over a fixed partition.
//!
//! All scalars are `Complex<f64>`. Real inputs are the zero-imaginary case.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Dense complex matrix; the universal carrier throughout the crate.
pub type Matrix = DMatrix<C64>;

/// Asymmetry budget for Hermitian inputs, relative to the operator norm.
pub const TOL_HERM: f64 = 1e-10;
/// Most negative eigenvalue tolerated by [`psd_root`], relative to the operator norm.
pub const TOL_PSD: f64 = 1e-10;
/// Reconstruction budget for `psd_root(M, p)^p` against `M`.
pub const TOL_ROOT: f64 = 1e-9;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a matrix from real entries given in row-major order.
pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Matrix {
    assert_eq!(entries.len(), rows * cols, "entry count must equal rows * cols");
    Matrix::from_fn(rows, cols, |i, j| c64(entries[i * cols + j], 0.0))
}

/// Diagonal matrix with the given real entries.
pub fn real_diag(entries: &[f64]) -> Matrix {
    let n = entries.len();
    Matrix::from_fn(n, n, |i, j| if i == j { c64(entries[i], 0.0) } else { C64::default() })
}

/// Single nilpotent Jordan block of size `n` (ones on the superdiagonal).
pub fn jordan_block(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| if j == i + 1 { c64(1.0, 0.0) } else { C64::default() })
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Frobenius norm.
pub fn fro_norm(m: &Matrix) -> f64 {
    m.norm()
}

/// Thin singular value decomposition `m = U diag(s) V*`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: Matrix,
    /// Non-increasing, length `k`.
    pub s: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: Matrix,
}

/// Thin SVD computed by faer.
///
/// nalgebra's complex SVD returns inaccurate factors for nearly
/// rank-deficient inputs, which is exactly the regime of nilpotent blocks.
pub fn svd(m: &Matrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd { u: Matrix::zeros(rows, 0), s: Vec::new(), v: Matrix::zeros(cols, 0) };
    }
    let fm = faer::Mat::<C64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = fm.thin_svd().expect("SVD of a finite matrix converges");
    let (fu, fv) = (dec.U(), dec.V());
    let diag = dec.S().column_vector();
    Svd {
        u: Matrix::from_fn(rows, k, |i, j| fu[(i, j)]),
        s: (0..k).map(|j| diag[j].re).collect(),
        v: Matrix::from_fn(cols, k, |i, j| fv[(i, j)]),
    }
}

/// Singular values in non-increasing order, with multiplicity
/// (`min(rows, cols)` of them).
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    svd(m).s
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn op_norm(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `‖U U* − I‖_F`, the unitarity defect of a square matrix.
pub fn unitarity_residual(u: &Matrix) -> f64 {
    let n = u.nrows();
    let left = u * u.adjoint() - Matrix::identity(n, n);
    let right = u.adjoint() * u - Matrix::identity(u.ncols(), u.ncols());
    left.norm().max(right.norm())
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part of `m` (`+inf` when empty).
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(f64::INFINITY)
}

/// Hermitian PSD `p`-th root of a Hermitian PSD matrix.
///
/// Negative eigenvalues within the PSD tolerance are clipped to zero before
/// taking roots, since inputs typically arrive as sums of products.
pub fn psd_root(m: &Matrix, p: u32) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "psd_root needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if p == 0 {
        return Err(Error::ShapeMismatch("root order must be positive".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let asym = (m - m.adjoint()).norm();
    let (values, vectors) = hermitian_eigen(m);
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if asym > TOL_HERM * scale.max(f64::MIN_POSITIVE) && asym > 0.0 {
        return Err(Error::NotHermitian {
            residual: if scale > 0.0 { asym / scale } else { asym },
        });
    }
    if let Some(&lowest) = values.first() {
        if lowest < -TOL_PSD * scale {
            return Err(Error::NotPsd { eigenvalue: lowest });
        }
    }
    let exponent = 1.0 / f64::from(p);
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let root = lambda.max(0.0).powf(exponent);
        scaled.column_mut(j).scale_mut(root);
    }
    let root = &scaled * vectors.adjoint();
    Ok((&root + root.adjoint()).scale(0.5))
}

/// Powers `(G G*)^e` for each exponent in `exponents`, computed from the
/// SVD of `G` as `U Σ^{2e} U*`.
///
/// Equal to `psd_root(G G*, 1/e)` in exact arithmetic, but the Gram matrix is
/// never formed, so singular values of `G` far below `√ε·‖G‖` survive.
/// Those at or below the [`pinv`] cutoff are roundoff and map to zero.
pub fn gram_powers(g: &Matrix, exponents: &[f64]) -> Vec<Matrix> {
    let rows = g.nrows();
    if rows == 0 || g.ncols() == 0 {
        return exponents.iter().map(|_| Matrix::zeros(rows, rows)).collect();
    }
    let Svd { u, s, .. } = svd(g);
    let cutoff = rows.max(g.ncols()) as f64 * f64::EPSILON * s[0];
    exponents
        .iter()
        .map(|&e| {
            let mut scaled = u.clone();
            for (k, &sigma) in s.iter().enumerate() {
                let value = if sigma > cutoff { sigma.powf(2.0 * e) } else { 0.0 };
                scaled.column_mut(k).scale_mut(value);
            }
            let power = scaled * u.adjoint();
            (&power + power.adjoint()).scale(0.5)
        })
        .collect()
}

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// `max(rows, cols) · ε · s₁` are treated as zero.
pub fn pinv(m: &Matrix) -> Matrix {
    let (rows, cols) = m.shape();
    pinv_solve_right(m, &Matrix::identity(rows, rows)).unwrap_or_else(|_| Matrix::zeros(cols, rows))
}

/// Thin SVD `(U, Σ⁺, V)` with the [`pinv`] cutoff applied to `Σ⁺`.
fn pinv_factors(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (rows, cols) = m.shape();
    let Svd { u, s, v } = svd(m);
    let largest = s.first().copied().unwrap_or(0.0);
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * largest;
    let inv = s
        .iter()
        .map(|&sigma| if sigma > cutoff { 1.0 / sigma } else { 0.0 })
        .collect();
    (u, inv, v)
}

/// `pinv(m) · rhs`, applied factor by factor as `V (Σ⁺ (U* rhs))`.
///
/// Never forms the pseudoinverse, whose entries reach `1/s_min`.
pub fn pinv_solve_right(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    pinv_solve_right_within(m, rhs, 0.0)
}

/// [`pinv_solve_right`] that also drops the weakest directions of `m`,
/// smallest first, while `‖rhs − m·result‖_F` grows by at most `budget`.
///
/// Near-null directions of `m` mostly carry roundoff of `rhs`, which `1/σ`
/// would otherwise amplify.
pub fn pinv_solve_right_within(m: &Matrix, rhs: &Matrix, budget: f64) -> Result<Matrix> {
    if m.nrows() != rhs.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "pinv of a {}x{} matrix cannot act on {} rows",
            m.nrows(),
            m.ncols(),
            rhs.nrows()
        )));
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Matrix::zeros(m.ncols(), rhs.ncols()));
    }
    let (u, mut inv, v) = pinv_factors(m);
    let mut inner = u.adjoint() * rhs;
    let weights: Vec<f64> = inner.row_iter().map(|row| row.norm()).collect();
    truncate(&mut inv, &weights, budget);
    for (k, &s) in inv.iter().enumerate() {
        inner.row_mut(k).scale_mut(s);
    }
    Ok(v * inner)
}

/// `lhs · pinv(m)`, applied as `((lhs V) Σ⁺) U*`.
pub fn pinv_solve_left(lhs: &Matrix, m: &Matrix) -> Result<Matrix> {
    pinv_solve_left_within(lhs, m, 0.0)
}

/// [`pinv_solve_left`] with the dropping rule of [`pinv_solve_right_within`]
/// applied to `‖lhs − result·m‖_F`.
pub fn pinv_solve_left_within(lhs: &Matrix, m: &Matrix, budget: f64) -> Result<Matrix> {
    if m.ncols() != lhs.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "pinv of a {}x{} matrix cannot act on {} columns",
            m.nrows(),
            m.ncols(),
            lhs.ncols()
        )));
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Matrix::zeros(lhs.nrows(), m.nrows()));
    }
    let (u, mut inv, v) = pinv_factors(m);
    let mut inner = lhs * v;
    let weights: Vec<f64> = inner.column_iter().map(|col| col.norm()).collect();
    truncate(&mut inv, &weights, budget);
    for (k, &s) in inv.iter().enumerate() {
        inner.column_mut(k).scale_mut(s);
    }
    Ok(inner * u.adjoint())
}

/// Zeroes `inv` from the weakest direction up while the dropped `weights`
/// stay within `budget` in root-sum-square.
fn truncate(inv: &mut [f64], weights: &[f64], budget: f64) {
    let mut spent = 0.0;
    for k in (0..inv.len()).rev() {
        if inv[k] == 0.0 {
            continue;
        }
        spent += weights[k] * weights[k];
        if spent > budget * budget {
            break;
        }
        inv[k] = 0.0;
    }
}

/// Nearest matrix (in every unitarily invariant norm) with spectral norm
/// at most `cap`: singular values above `cap` are lowered to it.
pub fn clip_norm(m: &Matrix, cap: f64) -> Matrix {
    let Svd { u, s, v } = svd(m);
    if s.first().is_none_or(|&top| top <= cap) {
        return m.clone();
    }
    let mut scaled = u;
    for (k, &sigma) in s.iter().enumerate() {
        scaled.column_mut(k).scale_mut(sigma.min(cap));
    }
    scaled * v.adjoint()
}

/// Sizes `(d₁, …, dₙ)` of a direct-sum decomposition. Zero sizes are legal
/// placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockPartition {
    sizes: Vec<usize>,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Self {
        BlockPartition { sizes }
    }

    /// `count` blocks, all of size `size`.
    pub fn uniform(count: usize, size: usize) -> Self {
        BlockPartition { sizes: vec![size; count] }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Start index of block `i` (0-based).
    pub fn offset(&self, i: usize) -> usize {
        self.sizes[..i].iter().sum()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.sizes.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Sparse map of blocks over row and column partitions. Indices are 0-based;
/// absent blocks are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    rows: BlockPartition,
    cols: BlockPartition,
    blocks: BTreeMap<(usize, usize), Matrix>,
}

impl BlockMatrix {
    pub fn new(rows: BlockPartition, cols: BlockPartition) -> Self {
        BlockMatrix { rows, cols, blocks: BTreeMap::new() }
    }

    pub fn square(partition: BlockPartition) -> Self {
        Self::new(partition.clone(), partition)
    }

    pub fn row_partition(&self) -> &BlockPartition {
        &self.rows
    }

    pub fn col_partition(&self) -> &BlockPartition {
        &self.cols
    }

    pub fn insert(&mut self, i: usize, j: usize, block: Matrix) -> Result<()> {
        if i >= self.rows.len() || j >= self.cols.len() {
            return Err(Error::ShapeMismatch(format!(
                "block index ({i}, {j}) outside a {}x{} block grid",
                self.rows.len(),
                self.cols.len()
            )));
        }
        let expected = (self.rows.sizes[i], self.cols.sizes[j]);
        if block.shape() != expected {
            return Err(Error::ShapeMismatch(format!(
                "block ({i}, {j}) is {}x{}, partition expects {}x{}",
                block.nrows(),
                block.ncols(),
                expected.0,
                expected.1
            )));
        }
        self.blocks.insert((i, j), block);
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&Matrix> {
        self.blocks.get(&(i, j))
    }

    /// Block `(i, j)`, materializing zeros when absent.
    pub fn block(&self, i: usize, j: usize) -> Matrix {
        self.blocks
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(self.rows.sizes[i], self.cols.sizes[j]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Matrix)> {
        self.blocks.iter()
    }
}

/// Dense matrix with block `(i, j)` placed at the partition offsets.
pub fn assemble_blocks(bm: &BlockMatrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(bm.rows.total(), bm.cols.total());
    for (&(i, j), block) in &bm.blocks {
        let expected = (bm.rows.sizes[i], bm.cols.sizes[j]);
        if block.shape() != expected {
            return Err(Error::ShapeMismatch(format!(
                "block ({i}, {j}) is {}x{}, partition expects {}x{}",
                block.nrows(),
                block.ncols(),
                expected.0,
                expected.1
            )));
        }
        out.view_mut((bm.rows.offset(i), bm.cols.offset(j)), expected)
            .copy_from(block);
    }
    Ok(out)
}

/// Cuts a square matrix into all blocks of `partition` (zero-size blocks
/// are skipped).
pub fn extract_blocks(m: &Matrix, partition: &BlockPartition) -> Result<BlockMatrix> {
    if partition.total() != m.nrows() || partition.total() != m.ncols() {
        return Err(Error::PartitionMismatch {
            total: partition.total(),
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let mut bm = BlockMatrix::square(partition.clone());
    for i in 0..partition.len() {
        for j in 0..partition.len() {
            let shape = (partition.sizes[i], partition.sizes[j]);
            if shape.0 == 0 || shape.1 == 0 {
                continue;
            }
            let block = m.view((partition.offset(i), partition.offset(j)), shape).into_owned();
            bm.blocks.insert((i, j), block);
        }
    }
    Ok(bm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).norm() <= tol
    }

    #[test]
    fn singular_values_of_small_cases() {
        let sv = singular_values(&real_diag(&[3.0, 1.0, 2.0]));
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14 && (sv[2] - 1.0).abs() < 1e-14);
        assert_eq!(singular_values(&Matrix::zeros(2, 2)), vec![0.0, 0.0]);
        let sv = singular_values(&jordan_block(2));
        assert!((sv[0] - 1.0).abs() < 1e-14 && sv[1].abs() < 1e-14);
    }

    #[test]
    fn psd_root_examples() {
        let r = psd_root(&real_diag(&[16.0, 81.0]), 4).unwrap();
        assert!(close(&r, &real_diag(&[2.0, 3.0]), 1e-12));

        let r = psd_root(&Matrix::zeros(3, 3), 2).unwrap();
        assert!(close(&r, &Matrix::zeros(3, 3), 0.0));

        // eigenvalues {1, 3} with eigenvectors (1, ∓1)/√2
        let m = from_real_rows(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s3 = 3f64.sqrt();
        let expected = from_real_rows(
            2,
            2,
            &[(1.0 + s3) / 2.0, (s3 - 1.0) / 2.0, (s3 - 1.0) / 2.0, (1.0 + s3) / 2.0],
        );
        let r = psd_root(&m, 2).unwrap();
        assert!(close(&r, &expected, 1e-12));
        assert!((r[(0, 0)].re - 1.36603).abs() < 1e-5);
    }

    #[test]
    fn psd_root_rejects_bad_inputs() {
        let skew = from_real_rows(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(psd_root(&skew, 2), Err(Error::NotHermitian { .. })));
        let indefinite = real_diag(&[1.0, -1.0]);
        assert!(matches!(psd_root(&indefinite, 2), Err(Error::NotPsd { .. })));
        // roundoff-level negatives are clipped
        let r = psd_root(&real_diag(&[1.0, -1e-14]), 2).unwrap();
        assert_eq!(r[(1, 1)].re, 0.0);
    }

    #[test]
    fn gram_powers_match_psd_root() {
        let g = Matrix::from_fn(3, 5, |i, j| c64((((i + 1) * (j + 2)) as f64).sin(), ((i + 2 * j) as f64).cos()));
        let gram = &g * g.adjoint();
        let powers = gram_powers(&g, &[0.25, 0.5]);
        assert!(close(&powers[0], &psd_root(&gram, 4).unwrap(), 1e-12));
        assert!(close(&powers[1], &psd_root(&gram, 2).unwrap(), 1e-12));
        assert!(close(&(&powers[0] * &powers[0]), &powers[1], 1e-12));
        assert_eq!(gram_powers(&Matrix::zeros(2, 0), &[0.5])[0], Matrix::zeros(2, 2));

        // rank one: the null direction stays exactly null under the root
        let v = Matrix::from_fn(3, 1, |i, _| c64(1.0 + i as f64, -0.5));
        let root = gram_powers(&(&v * v.adjoint()), &[0.25]).remove(0);
        let null = Matrix::from_fn(3, 1, |i, _| c64([1.0, 0.0, -1.0][i], 0.0));
        let null = &null - &v * (v.adjoint() * &null).scale(1.0 / v.norm_squared());
        assert!((&root * &null).norm() < 1e-14);
    }

    #[test]
    fn pinv_examples() {
        assert!(close(&pinv(&real_diag(&[2.0, 0.0])), &real_diag(&[0.5, 0.0]), 1e-15));
        let eye = Matrix::identity(3, 3);
        assert!(close(&pinv(&eye), &eye, 1e-15));
        let expected = from_real_rows(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(close(&pinv(&jordan_block(2)), &expected, 1e-15));
        assert_eq!(pinv(&Matrix::zeros(0, 3)).shape(), (3, 0));
    }

    #[test]
    fn assemble_examples() {
        let mut bm = BlockMatrix::square(BlockPartition::new(vec![1, 1]));
        bm.insert(0, 1, from_real_rows(1, 1, &[1.0])).unwrap();
        assert_eq!(assemble_blocks(&bm).unwrap(), jordan_block(2));

        let bm = BlockMatrix::square(BlockPartition::new(vec![2, 2]));
        assert_eq!(assemble_blocks(&bm).unwrap(), Matrix::zeros(4, 4));

        let mut bm = BlockMatrix::square(BlockPartition::new(vec![2, 1]));
        bm.insert(0, 0, Matrix::identity(2, 2)).unwrap();
        bm.insert(0, 1, from_real_rows(2, 1, &[1.0, 0.0])).unwrap();
        let expected = from_real_rows(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(assemble_blocks(&bm).unwrap(), expected);
    }

    #[test]
    fn insert_checks_shape() {
        let mut bm = BlockMatrix::square(BlockPartition::new(vec![2, 1]));
        assert!(matches!(
            bm.insert(0, 1, Matrix::zeros(1, 1)),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(bm.insert(3, 0, Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn extract_examples() {
        let bm = extract_blocks(&jordan_block(2), &BlockPartition::new(vec![1, 1])).unwrap();
        assert_eq!(bm.block(0, 1), from_real_rows(1, 1, &[1.0]));
        assert_eq!(bm.block(0, 0), Matrix::zeros(1, 1));
        assert_eq!(bm.block(1, 0), Matrix::zeros(1, 1));
        assert_eq!(bm.block(1, 1), Matrix::zeros(1, 1));

        let bm = extract_blocks(&Matrix::zeros(4, 4), &BlockPartition::new(vec![2, 2])).unwrap();
        assert!(bm.iter().all(|(_, b)| b.iter().all(|z| *z == C64::default())));

        assert!(matches!(
            extract_blocks(&Matrix::zeros(3, 3), &BlockPartition::new(vec![2, 2])),
            Err(Error::PartitionMismatch { .. })
        ));
    }

    #[test]
    fn zero_size_blocks_compose() {
        let p = BlockPartition::new(vec![2, 0, 1]);
        let m = Matrix::from_fn(3, 3, |i, j| c64(i as f64, j as f64));
        let bm = extract_blocks(&m, &p).unwrap();
        assert_eq!(bm.block(1, 1).shape(), (0, 0));
        assert_eq!(assemble_blocks(&bm).unwrap(), m);
    }
}
