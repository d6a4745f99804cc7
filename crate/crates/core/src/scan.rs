//! Exponent-scan experiment: for every `(n, dim, trial)` generate a
//! conjugated nilpotent with Jordan blocks of size `n`, factor it in theorem
//! mode, verify, and record the empirical decay exponents.

use std::io::Write;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::analysis::{exponent_report, DecayModel};
use crate::canonicalize::Canonicalizer;
use crate::construct::Mode;
use crate::error::{Error, Result};
use crate::parallel;
use crate::pipeline::factor;
use crate::testgen::{gen_nilpotent, scan_jordan_sizes, Decay, GenSpec};

pub const CSV_HEADER: &str =
    "n,dim,trial,guaranteed_t,achieved_B,achieved_C,domination_constant,residual_rel,status";

/// Largest padded dimension a scan may request.
pub const MAX_EMBED_DIM: usize = 512;

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub n_range: RangeInclusive<usize>,
    pub decay: Decay,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Residual bound a trial must meet.
    pub tol: f64,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (*self.n_range.start(), *self.n_range.end());
        if lo < 4 || hi > 12 || lo > hi {
            return Err(Error::InvalidSpec(format!("n-range {lo}..{hi} must lie within 4..12")));
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidSpec("dims list is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be positive".into()));
        }
        for n in self.n_range.clone() {
            for &dim in &self.dims {
                if dim < n {
                    return Err(Error::InvalidSpec(format!("dim {dim} cannot hold a Jordan block of size {n}")));
                }
                let embed = n * dim.div_ceil(n);
                if embed > MAX_EMBED_DIM {
                    return Err(Error::InvalidSpec(format!(
                        "n = {n}, dim = {dim} needs a {embed}-dimensional padded space (max {MAX_EMBED_DIM})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn jobs(&self) -> Vec<(usize, usize, usize)> {
        let mut jobs = Vec::new();
        for n in self.n_range.clone() {
            for &dim in &self.dims {
                for trial in 0..self.trials {
                    jobs.push((n, dim, trial));
                }
            }
        }
        jobs
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub dim: usize,
    pub trial: usize,
    pub guaranteed_t: f64,
    pub achieved_b: f64,
    pub achieved_c: f64,
    pub domination_constant: f64,
    pub residual_rel: f64,
    pub status: String,
}

impl ScanRow {
    pub fn passed(&self) -> bool {
        self.status == "ok"
    }

    fn failed(n: usize, dim: usize, trial: usize, status: String) -> Self {
        ScanRow {
            n,
            dim,
            trial,
            guaranteed_t: 0.5f64.powi(n as i32 - 3),
            achieved_b: f64::NAN,
            achieved_c: f64::NAN,
            domination_constant: f64::NAN,
            residual_rel: f64::NAN,
            status,
        }
    }
}

pub fn run_trial(cfg: &ScanConfig, n: usize, dim: usize, trial: usize) -> ScanRow {
    let spec = GenSpec {
        jordan_sizes: scan_jordan_sizes(n, dim),
        decay: cfg.decay,
        conjugate: true,
        seed: cfg.seed.wrapping_add(trial as u64),
    };
    let outcome = gen_nilpotent(&spec).and_then(|a| {
        let fact = factor(&a, Mode::Theorem, &Canonicalizer::default())?;
        let report = exponent_report(&a, &fact.pair, DecayModel::for_decay(&cfg.decay))?;
        Ok((fact, report))
    });
    match outcome {
        Ok((fact, report)) => {
            let residual = fact.report.residual_rel;
            ScanRow {
                n,
                dim,
                trial,
                guaranteed_t: report.guaranteed_t,
                achieved_b: report.achieved_b,
                achieved_c: report.achieved_c,
                domination_constant: report.domination_constant,
                residual_rel: residual,
                status: if residual > cfg.tol {
                    "residual".into()
                } else if !fact.passes(cfg.tol) {
                    "witness".into()
                } else {
                    "ok".into()
                },
            }
        }
        Err(e) => ScanRow::failed(n, dim, trial, format!("error: {e}").replace(',', ";")),
    }
}

fn sorted(mut rows: Vec<ScanRow>) -> Vec<ScanRow> {
    rows.sort_by_key(|r| (r.n, r.dim, r.trial));
    rows
}

/// Runs every trial, in parallel when the `parallel` feature is on.
pub fn run_scan(cfg: &ScanConfig) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let jobs = cfg.jobs();
    Ok(sorted(parallel::map(&jobs, |&(n, dim, trial)| run_trial(cfg, n, dim, trial))))
}

/// Runs every trial on the calling thread.
pub fn run_scan_sequential(cfg: &ScanConfig) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let jobs = cfg.jobs();
    Ok(sorted(parallel::map_sequential(&jobs, |&(n, dim, trial)| run_trial(cfg, n, dim, trial))))
}

pub fn write_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.dim,
            r.trial,
            r.guaranteed_t,
            r.achieved_b,
            r.achieved_c,
            r.domination_constant,
            r.residual_rel,
            r.status
        )?;
    }
    Ok(())
}
