//! Explicit commutator factorizations `A = BC − CB` of a nilpotent matrix.
//!
//! Both constructions work in flag coordinates, where `A = Σ_{i<j} a_{i,j} ⊗ e_{i,j}`
//! with square `pad × pad` blocks. They look for
//!
//! ```text
//! B = Σ_{i=1}^{n-1} b_i ⊗ e_{i,i+1},    C = Σ_{2≤i≤j≤n} c_{i,j} ⊗ e_{i,j}
//! ```
//!
//! for which `A = BC − CB` is equivalent to the blockwise equations
//!
//! ```text
//! b_1 c_{2,j} = a_{1,j}                          (2 ≤ j ≤ n)
//! b_i c_{i+1,j} = a_{i,j} + c_{i,j-1} b_{j-1}    (2 ≤ i < j ≤ n)
//! ```
//!
//! * [`construct_proposition`] takes every `b_i = 1` and solves for `C` by
//!   recursion, so `C` is a sum of blocks of `A`.
//! * [`construct_theorem`] builds `b_i` from fourth roots of sums of
//!   `a_{i,j} a_{i,j}*`, which places `B` and `C` in the ideal generated by
//!   `|A|^{1/2^{n-3}}`. Every division is carried out by a contraction
//!   obtained from [`crate::douglas`].
//!
//! Block and witness indices in this module are 1-based flag levels.
//! Factors are returned in original coordinates on the padded space `A ⊕ 0`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::canonicalize::{embed_zero, TriangularForm};
use crate::douglas::{Douglas, FactorResult};
use crate::error::{Error, Result};
use crate::matrix::{
    assemble_blocks, extract_blocks, fro_norm, gram_powers, op_norm, BlockMatrix, BlockPartition, Matrix,
};

/// Bound on the global relative commutator residual accepted by the constructions.
pub const TOL_COMM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Proposition,
    Theorem,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Proposition => "proposition",
            Mode::Theorem => "theorem",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposition" => Ok(Mode::Proposition),
            "theorem" => Ok(Mode::Theorem),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// Factors `B`, `C` on the padded space with construction metadata.
#[derive(Debug, Clone)]
pub struct CommutatorPair {
    /// `B` in original coordinates of `A ⊕ 0`.
    pub b: Matrix,
    /// `C` in original coordinates of `A ⊕ 0`.
    pub c: Matrix,
    pub mode: Mode,
    /// Number of flag levels used (after lifting in theorem mode).
    pub n: usize,
    /// Ideal exponent `t`: `1/2^{n-3}` in theorem mode, `1` in proposition mode.
    pub exponent: f64,
    pub form: TriangularForm,
}

impl CommutatorPair {
    pub fn embed_dim(&self) -> usize {
        self.b.nrows()
    }

    /// `B` in padded flag coordinates.
    pub fn b_flag(&self) -> Matrix {
        let w = self.form.embedding();
        &w * &self.b * w.adjoint()
    }

    /// `C` in padded flag coordinates.
    pub fn c_flag(&self) -> Matrix {
        let w = self.form.embedding();
        &w * &self.c * w.adjoint()
    }
}

/// Intermediate contractions of the theorem-mode construction.
#[derive(Debug, Clone, Default)]
pub struct WitnessSet {
    /// `b_i` for `1 ≤ i ≤ n−1` (flag coordinates, `pad × pad`).
    pub b: BTreeMap<usize, Matrix>,
    /// `b_i² r_{i,j} = a_{i,j}`.
    pub r: BTreeMap<(usize, usize), Matrix>,
    /// `b_i² x_i = b_{i−1}` for `2 ≤ i ≤ n−3`.
    pub x: BTreeMap<usize, Matrix>,
    /// `b_{n−2} z = b_{n−3}`.
    pub z: Matrix,
    /// `b_{n−1} s = c_{n−1,n−1}`.
    pub s: Matrix,
    /// Recursion carriers `y_{p,j}`.
    pub y: BTreeMap<(usize, usize), Matrix>,
    /// Relative residual of every Douglas solve, keyed by a label.
    pub residuals: BTreeMap<String, f64>,
}

impl WitnessSet {
    /// Largest spectral norm among `r`, `x`, `z` and `s`.
    pub fn max_norm(&self) -> f64 {
        self.r
            .values()
            .chain(self.x.values())
            .chain([&self.z, &self.s])
            .map(op_norm)
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    /// `‖(A ⊕ 0) − (BC − CB)‖_F / ‖A‖_F` (absolute when `A = 0`).
    pub residual_rel: f64,
    /// Residuals of the blockwise equations keyed by 1-based `(i, j)`,
    /// on the same scale as `residual_rel`. Empty when no flag form is known.
    #[serde(serialize_with = "serialize_block_map")]
    pub per_block_residuals: BTreeMap<(usize, usize), f64>,
    pub norm_b: f64,
    pub norm_c: f64,
    pub max_witness_norm: f64,
}

fn serialize_block_map<S: serde::Serializer>(
    map: &BTreeMap<(usize, usize), f64>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut out = serializer.serialize_map(Some(map.len()))?;
    for ((i, j), v) in map {
        out.serialize_entry(&format!("{i},{j}"), v)?;
    }
    out.end()
}

impl VerifyReport {
    pub fn with_witnesses(mut self, witnesses: &WitnessSet) -> Self {
        self.max_witness_norm = witnesses.max_norm();
        self
    }

    pub fn max_block_residual(&self) -> f64 {
        self.per_block_residuals.values().copied().fold(0.0, f64::max)
    }
}

/// Block store indexed by 1-based flag levels; absent blocks are zero.
struct Blocks {
    pad: usize,
    map: BTreeMap<(usize, usize), Matrix>,
}

impl Blocks {
    fn new(pad: usize) -> Self {
        Blocks { pad, map: BTreeMap::new() }
    }

    fn get(&self, i: usize, j: usize) -> Matrix {
        self.map
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(self.pad, self.pad))
    }

    fn set(&mut self, i: usize, j: usize, m: Matrix) {
        self.map.insert((i, j), m);
    }

    fn to_block_matrix(&self, n: usize) -> BlockMatrix {
        let mut bm = BlockMatrix::square(BlockPartition::uniform(n, self.pad));
        for (&(i, j), m) in &self.map {
            bm.insert(i - 1, j - 1, m.clone()).expect("uniform pad blocks");
        }
        bm
    }
}

fn pair_from_flag(
    form: TriangularForm,
    b_flag: &BlockMatrix,
    c_flag: &BlockMatrix,
    mode: Mode,
    exponent: f64,
) -> CommutatorPair {
    let w = form.embedding();
    let b_hat = assemble_blocks(b_flag).expect("uniform pad blocks");
    let c_hat = assemble_blocks(c_flag).expect("uniform pad blocks");
    CommutatorPair {
        b: w.adjoint() * b_hat * &w,
        c: w.adjoint() * c_hat * &w,
        mode,
        n: form.n(),
        exponent,
        form,
    }
}

/// `B` a block shift of identities, `C` solved by recursion.
pub fn construct_proposition(form: &TriangularForm) -> Result<CommutatorPair> {
    let n = form.n();
    let pad = form.pad;
    let identity = Matrix::identity(pad, pad);

    let mut b = Blocks::new(pad);
    let mut c = Blocks::new(pad);
    if n >= 2 {
        for i in 1..n {
            b.set(i, i + 1, identity.clone());
        }
        for j in 2..=n {
            c.set(2, j, form.a(1, j));
        }
        for i in 2..n {
            for j in (i + 1)..=n {
                c.set(i + 1, j, form.a(i, j) + c.get(i, j - 1));
            }
        }
    }
    Ok(pair_from_flag(
        form.clone(),
        &b.to_block_matrix(n),
        &c.to_block_matrix(n),
        Mode::Proposition,
        1.0,
    ))
}

/// Theorem-mode factorization with all intermediate witnesses.
///
/// Inputs with fewer than four flag levels are lifted to four empty-padded
/// levels first.
pub fn construct_theorem(form: &TriangularForm) -> Result<(CommutatorPair, WitnessSet)> {
    let form = form.lifted(4);
    let n = form.n();
    let pad = form.pad;
    let a = |i: usize, j: usize| form.a(i, j);
    let douglas = Douglas::default();
    let mut w = WitnessSet::default();

    let solve = |w: &mut WitnessSet, label: String, x: &Matrix, y: &Matrix| -> Result<Matrix> {
        let FactorResult { r, residual, .. } = douglas
            .factor_right(x, y, 1.0)
            .map_err(|e| with_context(e, &label))?;
        w.residuals.insert(label, residual);
        Ok(r)
    };
    // Row factor G with G G* = Σ_{j ≥ from} a_{i,j} a_{i,j}* plus the given extra terms.
    let row_factor = |i: usize, from: usize, extra: &[Matrix]| -> Matrix {
        let mut parts = extra.to_vec();
        parts.extend((from..=n).map(|j| a(i, j)));
        hstack(pad, &parts)
    };
    // (b, b²) with b = (G G*)^{1/4}.
    let root4 = |g: &Matrix| -> (Matrix, Matrix) {
        let mut powers = gram_powers(g, &[0.25, 0.5]).into_iter();
        (powers.next().expect("two powers"), powers.next().expect("two powers"))
    };

    // b_1, …, b_{n−2} and the witnesses r_{i,j}, x_i, z.
    // Each b_i is taken from the SVD of a factor of its defining sum, so the
    // fourth root never sees a squared-up Gram matrix.
    let mut b: BTreeMap<usize, Matrix> = BTreeMap::new();
    let mut b_sq: BTreeMap<usize, Matrix> = BTreeMap::new();
    for i in 1..=n - 2 {
        let extra = match i {
            1 => None,
            _ if i == n - 2 => Some(b_sq[&(i - 1)].clone()),
            _ => Some(b[&(i - 1)].clone()),
        };
        let (root, square) = root4(&row_factor(i, i + 1, extra.as_slice()));
        b.insert(i, root);
        b_sq.insert(i, square);
    }

    for i in 1..=n - 2 {
        for j in (i + 1)..=n {
            let r = solve(&mut w, format!("r_{{{i},{j}}}"), &b_sq[&i], &a(i, j))?;
            w.r.insert((i, j), r);
        }
    }
    for i in 2..=n - 3 {
        let x = solve(&mut w, format!("x_{i}"), &b_sq[&i], &b[&(i - 1)])?;
        w.x.insert(i, x);
    }
    w.z = solve(&mut w, "z".into(), &b[&(n - 2)], &b[&(n - 3)])?;

    let mut c = Blocks::new(pad);

    // y_{2,j} = r_{1,j}, c_{2,j} = b_1 y_{2,j}.
    for j in 2..=n {
        let y = w.r[&(1, j)].clone();
        c.set(2, j, &b[&1] * &y);
        w.y.insert((2, j), y);
    }

    // y_{p,j} = r_{p−1,j} + x_{p−1} y_{p−1,j−1} b_{j−1}, c_{p,j} = b_{p−1} y_{p,j}.
    for p in 3..=n - 2 {
        for j in p..n {
            let y = &w.r[&(p - 1, j)] + &w.x[&(p - 1)] * &w.y[&(p - 1, j - 1)] * &b[&(j - 1)];
            c.set(p, j, &b[&(p - 1)] * &y);
            w.y.insert((p, j), y);
        }
    }

    // c_{n−1,n−1} = b_{n−2} r_{n−2,n−1} + z y_{n−2,n−2} b_{n−2}.
    let c_last_diag = &b[&(n - 2)] * &w.r[&(n - 2, n - 1)]
        + &w.z * &w.y[&(n - 2, n - 2)] * &b[&(n - 2)];
    c.set(n - 1, n - 1, c_last_diag.clone());

    // b_{n−1} = (a a* + (c c*)²)^{1/4}, witnesses r_{n−1,n} and s.
    let cc = gram_powers(&c_last_diag, &[1.0]).remove(0);
    let (b_last, b_last_sq) = root4(&hstack(pad, &[a(n - 1, n), cc]));
    b.insert(n - 1, b_last.clone());
    let r = solve(&mut w, format!("r_{{{},{n}}}", n - 1), &b_last_sq, &a(n - 1, n))?;
    w.r.insert((n - 1, n), r);
    w.s = solve(&mut w, "s".into(), &b_last, &c_last_diag)?;

    // c_{p,n} = b_{p−1} r_{p−1,n} + b_{p−1} x_{p−1} y_{p−1,n−1} b_{n−1}.
    for p in 3..=n - 2 {
        let bp = &b[&(p - 1)];
        let v = bp * &w.r[&(p - 1, n)] + bp * &w.x[&(p - 1)] * &w.y[&(p - 1, n - 1)] * &b_last;
        c.set(p, n, v);
    }

    // c_{n−1,n} = b_{n−2} r_{n−2,n} + z y_{n−2,n−1} b_{n−1}.
    let v = &b[&(n - 2)] * &w.r[&(n - 2, n)] + &w.z * &w.y[&(n - 2, n - 1)] * &b_last;
    c.set(n - 1, n, v);

    // c_{n,n} = b_{n−1} r_{n−1,n} + s b_{n−1}.
    let v = &b_last * &w.r[&(n - 1, n)] + &w.s * &b_last;
    c.set(n, n, v);

    let mut b_blocks = Blocks::new(pad);
    for i in 1..n {
        b_blocks.set(i, i + 1, b[&i].clone());
    }
    let b_bm = b_blocks.to_block_matrix(n);
    let c_bm = c.to_block_matrix(n);

    let b_hat = assemble_blocks(&b_bm)?;
    let c_hat = assemble_blocks(&c_bm)?;
    let a_hat = form.padded();
    let scale = fro_norm(&a_hat).max(1.0);
    let residual = fro_norm(&(&a_hat - (&b_hat * &c_hat - &c_hat * &b_hat))) / scale;
    if residual > TOL_COMM {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: TOL_COMM,
            context: "assembled commutator".into(),
        });
    }

    w.b = b;
    let exponent = 0.5f64.powi(n as i32 - 3);
    Ok((pair_from_flag(form, &b_bm, &c_bm, Mode::Theorem, exponent), w))
}

/// Horizontal concatenation of `rows × ·` matrices.
fn hstack(rows: usize, parts: &[Matrix]) -> Matrix {
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((0, at), p.shape()).copy_from(p);
        at += p.ncols();
    }
    out
}

fn with_context(err: Error, label: &str) -> Error {
    match err {
        Error::ResidualTooLarge { residual, tolerance, context } => Error::ResidualTooLarge {
            residual,
            tolerance,
            context: format!("{label}: {context}"),
        },
        other => other,
    }
}

/// Factorization in the requested mode; witnesses are only produced in
/// theorem mode.
pub fn construct(form: &TriangularForm, mode: Mode) -> Result<(CommutatorPair, Option<WitnessSet>)> {
    match mode {
        Mode::Proposition => construct_proposition(form).map(|p| (p, None)),
        Mode::Theorem => construct_theorem(form).map(|(p, w)| (p, Some(w))),
    }
}

/// Global residual and norms of `A ⊕ 0` against `BC − CB`.
pub fn verify_matrices(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<VerifyReport> {
    if !a.is_square() || !b.is_square() || !c.is_square() {
        return Err(Error::DimensionMismatch("A, B and C must be square".into()));
    }
    if b.shape() != c.shape() {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{} but C is {}x{}",
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    if a.nrows() > b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {0}x{0}, larger than the {1}x{1} factors",
            a.nrows(),
            b.nrows()
        )));
    }
    let a_emb = embed_zero(a, b.nrows());
    let diff = a_emb - (b * c - c * b);
    let scale = residual_scale(a);
    Ok(VerifyReport {
        residual_rel: fro_norm(&diff) / scale,
        per_block_residuals: BTreeMap::new(),
        norm_b: op_norm(b),
        norm_c: op_norm(c),
        max_witness_norm: 0.0,
    })
}

/// [`verify_matrices`] plus the blockwise residuals in flag coordinates.
pub fn verify_commutator(a: &Matrix, pair: &CommutatorPair) -> Result<VerifyReport> {
    let mut report = verify_matrices(a, &pair.b, &pair.c)?;
    let form = &pair.form;
    if a.nrows() != form.dim() || pair.b.nrows() != form.embed_dim() {
        return Err(Error::DimensionMismatch(format!(
            "pair was built for a {0}x{0} input on a {1}-dimensional space",
            form.dim(),
            form.embed_dim()
        )));
    }
    let n = form.n();
    let partition = BlockPartition::uniform(n, form.pad);
    let w = form.embedding();
    let a_hat = extract_blocks(&(&w * form.embed_original(a) * w.adjoint()), &partition)?;
    let b_hat = extract_blocks(&pair.b_flag(), &partition)?;
    let c_hat = extract_blocks(&pair.c_flag(), &partition)?;
    let blk = |m: &BlockMatrix, i: usize, j: usize| m.block(i - 1, j - 1);
    let scale = residual_scale(a);

    for j in 2..=n {
        let res = blk(&b_hat, 1, 2) * blk(&c_hat, 2, j) - blk(&a_hat, 1, j);
        report.per_block_residuals.insert((1, j), fro_norm(&res) / scale);
    }
    for i in 2..n {
        for j in (i + 1)..=n {
            let res = blk(&b_hat, i, i + 1) * blk(&c_hat, i + 1, j)
                - blk(&a_hat, i, j)
                - blk(&c_hat, i, j - 1) * blk(&b_hat, j - 1, j);
            report.per_block_residuals.insert((i, j), fro_norm(&res) / scale);
        }
    }
    Ok(report)
}

fn residual_scale(a: &Matrix) -> f64 {
    let norm = fro_norm(a);
    if norm > 0.0 {
        norm
    } else {
        1.0
    }
}
