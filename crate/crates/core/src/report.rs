//! JSON run report written next to the factors by the command-line tool.
//!
//! Schema (all numbers finite):
//!
//! | field | meaning |
//! |---|---|
//! | `input_path` | matrix file that was factored |
//! | `dim` | size of the input |
//! | `n` | flag levels used (after lifting in theorem mode) |
//! | `partition` | flag level dimensions |
//! | `flag_side` | `kernel` or `range`, the chain the levels come from |
//! | `rank_tol` | relative rank threshold of the flag that was used |
//! | `pad`, `embed_dim` | padded block size and `n·pad` |
//! | `mode` | `theorem` or `proposition` |
//! | `exponent_t` | ideal exponent carried by the pair |
//! | `residual_rel` | `‖(A ⊕ 0) − (BC − CB)‖_F / ‖A‖_F` |
//! | `norm_B`, `norm_C` | spectral norms |
//! | `max_witness_norm` | largest contraction norm (0 in proposition mode) |
//! | `singular_values_A/B/C` | leading 64 singular values |
//! | `timing_ms` | wall time of triangularize + construct + verify |

use serde::{Deserialize, Serialize};

use crate::canonicalize::FlagSide;
use crate::matrix::{singular_values, Matrix};
use crate::pipeline::Factorization;

/// Number of leading singular values kept in a report.
pub const REPORTED_SINGULAR_VALUES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub input_path: String,
    pub dim: usize,
    pub n: usize,
    pub partition: Vec<usize>,
    pub flag_side: FlagSide,
    pub rank_tol: f64,
    pub pad: usize,
    pub embed_dim: usize,
    pub mode: String,
    pub exponent_t: f64,
    pub residual_rel: f64,
    #[serde(rename = "norm_B")]
    pub norm_b: f64,
    #[serde(rename = "norm_C")]
    pub norm_c: f64,
    pub max_witness_norm: f64,
    #[serde(rename = "singular_values_A")]
    pub singular_values_a: Vec<f64>,
    #[serde(rename = "singular_values_B")]
    pub singular_values_b: Vec<f64>,
    #[serde(rename = "singular_values_C")]
    pub singular_values_c: Vec<f64>,
    pub timing_ms: f64,
}

impl RunReport {
    pub fn new(input_path: &str, a: &Matrix, fact: &Factorization, timing_ms: f64) -> Self {
        let truncated = |m: &Matrix| {
            let mut s = singular_values(m);
            s.truncate(REPORTED_SINGULAR_VALUES);
            s
        };
        let form = &fact.pair.form;
        RunReport {
            input_path: input_path.to_string(),
            dim: a.nrows(),
            n: fact.pair.n,
            partition: form.partition.sizes().to_vec(),
            flag_side: fact.canon.side,
            rank_tol: fact.canon.rank_tol,
            pad: form.pad,
            embed_dim: form.embed_dim(),
            mode: fact.pair.mode.to_string(),
            exponent_t: fact.pair.exponent,
            residual_rel: fact.report.residual_rel,
            norm_b: fact.report.norm_b,
            norm_c: fact.report.norm_c,
            max_witness_norm: fact.report.max_witness_norm,
            singular_values_a: truncated(a),
            singular_values_b: truncated(&fact.pair.b),
            singular_values_c: truncated(&fact.pair.c),
            timing_ms,
        }
    }

    pub fn all_finite(&self) -> bool {
        [
            self.exponent_t,
            self.rank_tol,
            self.residual_rel,
            self.norm_b,
            self.norm_c,
            self.max_witness_norm,
            self.timing_ms,
        ]
        .iter()
        .chain(&self.singular_values_a)
        .chain(&self.singular_values_b)
        .chain(&self.singular_values_c)
        .all(|v| v.is_finite())
    }
}
