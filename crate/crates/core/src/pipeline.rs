//! Triangularize, construct and verify in one call.
//!
//! Rank decisions in the kernel flag are threshold heuristics, while the
//! final check of `A = BC − CB` and of the witness norms is exact. When the
//! requested thresholds do not produce a factorization that passes, a few
//! alternative thresholds are tried and the first verified result is kept.

use crate::canonicalize::{Canonicalizer, FlagSide};
use crate::construct::{construct, verify_commutator, CommutatorPair, Mode, VerifyReport, WitnessSet, TOL_COMM};
use crate::douglas::TOL_NORM;
use crate::error::Result;
use crate::matrix::Matrix;

/// Rank thresholds tried, each on both flag sides, after the requested
/// canonicalizer.
pub const FALLBACK_RANK_TOLS: [f64; 5] = [1e-10, 1e-9, 1e-12, 1e-8, 1e-14];

#[derive(Debug, Clone)]
pub struct Factorization {
    pub pair: CommutatorPair,
    pub witnesses: Option<WitnessSet>,
    pub report: VerifyReport,
    /// Rank decisions of the flag actually used.
    pub canon: Canonicalizer,
}

impl Factorization {
    /// Residual within `tol` and every witness a contraction up to
    /// [`TOL_NORM`].
    pub fn passes(&self, tol: f64) -> bool {
        self.report.residual_rel <= tol && self.report.max_witness_norm <= 1.0 + TOL_NORM
    }
}

/// [`factor_within`] at the default residual tolerance.
pub fn factor(a: &Matrix, mode: Mode, canon: &Canonicalizer) -> Result<Factorization> {
    factor_within(a, mode, canon, TOL_COMM)
}

/// Factorization verified against `tol`, falling back to
/// [`FALLBACK_RANK_TOLS`] on both flag sides when `canon` fails. If none passes, the outcome
/// for `canon` itself is returned.
pub fn factor_within(a: &Matrix, mode: Mode, canon: &Canonicalizer, tol: f64) -> Result<Factorization> {
    let first = attempt(a, mode, canon);
    if first.as_ref().is_ok_and(|f| f.passes(tol)) {
        return first;
    }
    FALLBACK_RANK_TOLS
        .iter()
        .flat_map(|&rank_tol| {
            [FlagSide::Kernel, FlagSide::Range].map(|side| Canonicalizer { rank_tol, side, ..*canon })
        })
        .filter(|alt| alt != canon)
        .filter_map(|alt| attempt(a, mode, &alt).ok())
        .find(|f| f.passes(tol))
        .map_or(first, Ok)
}

/// One pass with a fixed rank threshold.
pub fn attempt(a: &Matrix, mode: Mode, canon: &Canonicalizer) -> Result<Factorization> {
    let form = canon.triangularize(a)?;
    let (pair, witnesses) = construct(&form, mode)?;
    let mut report = verify_commutator(a, &pair)?;
    if let Some(w) = &witnesses {
        report = report.with_witnesses(w);
    }
    Ok(Factorization { pair, witnesses, report, canon: *canon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::jordan_block;
    use crate::testgen::{gen_nilpotent, Decay, GenSpec};

    #[test]
    fn first_passing_attempt_is_kept() {
        let f = factor(&jordan_block(4), Mode::Theorem, &Canonicalizer::default()).unwrap();
        assert_eq!(f.canon, Canonicalizer::default());
        assert!(f.passes(1e-12));
    }

    #[test]
    fn falls_back_when_the_requested_threshold_fails() {
        // a threshold this loose merges genuine levels and breaks the residual
        let spec = GenSpec {
            decay: Decay::Geometric { rho: 0.5 },
            conjugate: true,
            seed: 3,
            ..GenSpec::new(vec![4, 3])
        };
        let a = gen_nilpotent(&spec).unwrap();
        let loose = Canonicalizer::new(0.1);
        assert!(!attempt(&a, Mode::Theorem, &loose).is_ok_and(|f| f.passes(TOL_COMM)));
        let f = factor(&a, Mode::Theorem, &loose).unwrap();
        assert!(f.passes(TOL_COMM));
        assert_ne!(f.canon, loose);
    }

    #[test]
    fn failures_report_the_requested_attempt() {
        let err = factor(&Matrix::identity(3, 3), Mode::Proposition, &Canonicalizer::default());
        assert!(matches!(err, Err(crate::Error::NotNilpotent { .. })));
    }
}
