//! Majorization-to-factorization: from `t·x*x ⪰ y*y` produce `r` with
//! `y = r·x` and `‖r‖ ≤ √t` (and the adjoint statement for `y = x·r`).
//!
//! The factor starts as the minimal-norm solution built from the
//! pseudoinverse of `x`, which vanishes on the orthocomplement of the range
//! of `x` and meets the norm cap in exact arithmetic. In floating point the
//! weakest directions of `x` carry roundoff of `y` amplified by `1/σ`, so
//! singular values of `r` above `√t` are clipped to it and the residual is
//! measured after clipping.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{fro_norm, min_eigenvalue, op_norm, clip_norm, pinv_solve_left_within, pinv_solve_right_within, Matrix};

/// Relative slack on the majorization check.
pub const TOL_MAJOR: f64 = 1e-8;
/// Bound on `‖y − r·x‖_F / max(‖y‖_F, 1)`.
pub const TOL_RESID: f64 = 1e-8;
/// Share of the residual tolerance spent on dropping weak directions.
pub const DROP_FRACTION: f64 = 0.1;
/// Slack on `‖r‖ ≤ √t`.
pub const TOL_NORM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `y = r·x`
    Left,
    /// `y = x·r`
    Right,
}

#[derive(Debug, Clone)]
pub struct FactorResult {
    pub r: Matrix,
    pub orientation: Orientation,
    /// `√t`
    pub bound: f64,
    /// Spectral norm of `r`.
    pub achieved_norm: f64,
    /// Spectral norm of the unclipped pseudoinverse solution.
    pub raw_norm: f64,
    /// Relative Frobenius residual of the factorization.
    pub residual: f64,
}

/// Factorization engine with configurable tolerances.
#[derive(Debug, Clone, Copy)]
pub struct Douglas {
    pub tol_major: f64,
    pub tol_resid: f64,
}

impl Default for Douglas {
    fn default() -> Self {
        Douglas { tol_major: TOL_MAJOR, tol_resid: TOL_RESID }
    }
}

impl Douglas {
    /// Solve `y = r·x` given `t·x*x ⪰ y*y`.
    pub fn factor_left(&self, x: &Matrix, y: &Matrix, t: f64) -> Result<FactorResult> {
        check_t(t)?;
        if x.ncols() != y.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "factor_left needs equal column counts, got x {}x{} and y {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        let gram_x = (x.adjoint() * x).scale(t);
        let gram_y = y.adjoint() * y;
        self.check_majorization(&gram_x, &gram_y)?;

        let raw = pinv_solve_left_within(y, x, self.drop_budget(y))?;
        let (r, raw_norm) = clip(raw, t);
        let residual = fro_norm(&(y - &r * x)) / fro_norm(y).max(1.0);
        self.finish(r, raw_norm, Orientation::Left, t, residual)
    }

    /// Solve `y = x·r` given `t·x·x* ⪰ y·y*`.
    pub fn factor_right(&self, x: &Matrix, y: &Matrix, t: f64) -> Result<FactorResult> {
        check_t(t)?;
        if x.nrows() != y.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "factor_right needs equal row counts, got x {}x{} and y {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        let gram_x = (x * x.adjoint()).scale(t);
        let gram_y = y * y.adjoint();
        self.check_majorization(&gram_x, &gram_y)?;

        let raw = pinv_solve_right_within(x, y, self.drop_budget(y))?;
        let (r, raw_norm) = clip(raw, t);
        let residual = fro_norm(&(y - x * &r)) / fro_norm(y).max(1.0);
        self.finish(r, raw_norm, Orientation::Right, t, residual)
    }

    /// Part of `y` that may be left unexplained so that roundoff in the
    /// weakest directions of `x` does not inflate `r`.
    fn drop_budget(&self, y: &Matrix) -> f64 {
        DROP_FRACTION * self.tol_resid * fro_norm(y).max(1.0)
    }

    fn check_majorization(&self, dominant: &Matrix, dominated: &Matrix) -> Result<()> {
        let lowest = min_eigenvalue(&(dominant - dominated));
        let threshold = -self.tol_major * op_norm(dominant);
        if lowest < threshold {
            return Err(Error::MajorizationViolated { eigenvalue: lowest, threshold });
        }
        Ok(())
    }

    fn finish(
        &self,
        r: Matrix,
        raw_norm: f64,
        orientation: Orientation,
        t: f64,
        residual: f64,
    ) -> Result<FactorResult> {
        if residual > self.tol_resid {
            return Err(Error::ResidualTooLarge {
                residual,
                tolerance: self.tol_resid,
                context: format!("{orientation:?} factorization"),
            });
        }
        Ok(FactorResult {
            achieved_norm: op_norm(&r),
            raw_norm,
            r,
            orientation,
            bound: t.sqrt(),
            residual,
        })
    }
}

fn clip(raw: Matrix, t: f64) -> (Matrix, f64) {
    let raw_norm = op_norm(&raw);
    if raw_norm <= t.sqrt() {
        return (raw, raw_norm);
    }
    (clip_norm(&raw, t.sqrt()), raw_norm)
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("majorization constant must be positive, got {t}")))
    }
}

/// [`Douglas::factor_left`] with default tolerances.
pub fn factor_left(x: &Matrix, y: &Matrix, t: f64) -> Result<FactorResult> {
    Douglas::default().factor_left(x, y, t)
}

/// [`Douglas::factor_right`] with default tolerances.
pub fn factor_right(x: &Matrix, y: &Matrix, t: f64) -> Result<FactorResult> {
    Douglas::default().factor_right(x, y, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{from_real_rows, jordan_block, real_diag};

    fn close(a: &Matrix, b: &Matrix) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn left_examples() {
        let eye = Matrix::identity(2, 2);
        let res = factor_left(&eye, &eye, 1.0).unwrap();
        assert!(close(&res.r, &eye));
        assert!((res.achieved_norm - 1.0).abs() < 1e-12);
        assert_eq!(res.orientation, Orientation::Left);

        let res = factor_left(&real_diag(&[2.0, 1.0]), &eye, 1.0).unwrap();
        assert!(close(&res.r, &real_diag(&[0.5, 1.0])));
        assert!((res.achieved_norm - 1.0).abs() < 1e-12);

        let err = factor_left(&real_diag(&[1.0, 0.0]), &real_diag(&[0.0, 1.0]), 1.0).unwrap_err();
        assert!(matches!(err, Error::MajorizationViolated { eigenvalue, .. } if eigenvalue < -0.5));
    }

    #[test]
    fn right_examples() {
        let eye = Matrix::identity(2, 2);
        assert!(close(&factor_right(&eye, &eye, 1.0).unwrap().r, &eye));

        let res = factor_right(&eye, &real_diag(&[2.0, 2.0]), 4.0).unwrap();
        assert!(close(&res.r, &real_diag(&[2.0, 2.0])));
        assert!((res.achieved_norm - res.bound).abs() < 1e-12);

        let j2 = jordan_block(2);
        let res = factor_right(&j2, &j2, 1.0).unwrap();
        assert!(close(&res.r, &real_diag(&[0.0, 1.0])));
        assert!(res.residual < 1e-15);
    }

    #[test]
    fn rejects_shapes_and_t() {
        let x = Matrix::zeros(2, 3);
        let y = Matrix::zeros(3, 2);
        assert!(matches!(factor_left(&x, &y, 1.0), Err(Error::ShapeMismatch(_))));
        assert!(matches!(factor_right(&x, &y, 1.0), Err(Error::ShapeMismatch(_))));
        assert!(factor_left(&x, &Matrix::zeros(1, 3), 0.0).is_err());
        assert!(factor_left(&x, &Matrix::zeros(1, 3), f64::NAN).is_err());
    }

    #[test]
    fn zero_x_only_factors_zero_y() {
        let x = Matrix::zeros(2, 2);
        let res = factor_right(&x, &Matrix::zeros(2, 1), 1.0).unwrap();
        assert_eq!(res.r, Matrix::zeros(2, 1));
        assert!(factor_right(&x, &from_real_rows(2, 1, &[1.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn rectangular_right_factor() {
        // x is 2x3 with full row rank; y = x·m for a contraction m
        let x = from_real_rows(2, 3, &[1.0, 0.0, 1.0, 0.0, 2.0, 0.0]);
        let m = from_real_rows(3, 1, &[0.5, 0.5, 0.0]);
        let y = &x * &m;
        let res = factor_right(&x, &y, 1.0).unwrap();
        assert!(res.achieved_norm <= 1.0 + TOL_NORM);
        assert!((&x * &res.r - &y).norm() < 1e-12);
    }
}
