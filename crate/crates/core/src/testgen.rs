//! Seeded nilpotent test matrices with prescribed Jordan structure and
//! singular-value decay.
//!
//! A direct sum of weighted shifts has the weights as its singular values,
//! so scaling the superdiagonal gives exact control of `s(A)`. Optional
//! conjugation by a Haar unitary hides the structure without changing it.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c64, Matrix};

/// Decay imposed on the superdiagonal weights, indexed `k = 1, 2, …` over
/// the nonzero superdiagonal entries in global order.
///
/// Serialized as `{"kind": "geometric", "rho": 0.5}`; the string form
/// `"geometric:0.5"` is accepted on input too.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "DecayRepr")]
pub enum Decay {
    #[default]
    None,
    /// weight `ρᵏ`
    Geometric { rho: f64 },
    /// weight `k^{−α}`
    Polynomial { alpha: f64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DecayRepr {
    Text(String),
    Tagged(TaggedDecay),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TaggedDecay {
    None,
    Geometric { rho: f64 },
    Polynomial { alpha: f64 },
}

impl TryFrom<DecayRepr> for Decay {
    type Error = Error;

    fn try_from(repr: DecayRepr) -> Result<Self> {
        match repr {
            DecayRepr::Text(s) => s.parse(),
            DecayRepr::Tagged(TaggedDecay::None) => Ok(Decay::None),
            DecayRepr::Tagged(TaggedDecay::Geometric { rho }) => Ok(Decay::Geometric { rho }),
            DecayRepr::Tagged(TaggedDecay::Polynomial { alpha }) => Ok(Decay::Polynomial { alpha }),
        }
    }
}

impl Decay {
    pub fn weight(&self, k: usize) -> f64 {
        match *self {
            Decay::None => 1.0,
            Decay::Geometric { rho } => rho.powi(k as i32),
            Decay::Polynomial { alpha } => (k as f64).powf(-alpha),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Decay::Geometric { rho } if !(rho > 0.0 && rho < 1.0) => {
                Err(Error::InvalidSpec(format!("geometric rho must lie in (0, 1), got {rho}")))
            }
            Decay::Polynomial { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::InvalidSpec(format!("polynomial alpha must be positive, got {alpha}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for Decay {
    type Err = Error;

    /// `none`, `geometric:RHO` or `polynomial:ALPHA`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, param) = match s.split_once(':') {
            Some((k, p)) => (k, Some(p)),
            None => (s, None),
        };
        let param = |name: &str| -> Result<f64> {
            param
                .ok_or_else(|| Error::Parse(format!("{kind} decay needs a {name} parameter")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad {name} in {s:?}")))
        };
        let decay = match kind {
            "none" => Decay::None,
            "geometric" => Decay::Geometric { rho: param("rho")? },
            "polynomial" => Decay::Polynomial { alpha: param("alpha")? },
            other => return Err(Error::Parse(format!("unknown decay family {other:?}"))),
        };
        decay.validate()?;
        Ok(decay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(alias = "sizes")]
    pub jordan_sizes: Vec<usize>,
    #[serde(default)]
    pub decay: Decay,
    #[serde(default)]
    pub conjugate: bool,
    #[serde(default)]
    pub seed: u64,
}

impl GenSpec {
    pub fn new(jordan_sizes: Vec<usize>) -> Self {
        GenSpec { jordan_sizes, decay: Decay::None, conjugate: false, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.jordan_sizes.is_empty() {
            return Err(Error::InvalidSpec("jordan_sizes must be non-empty".into()));
        }
        if self.jordan_sizes.contains(&0) {
            return Err(Error::InvalidSpec("Jordan block sizes must be positive".into()));
        }
        self.decay.validate()
    }

    pub fn dim(&self) -> usize {
        self.jordan_sizes.iter().sum()
    }

    pub fn order(&self) -> usize {
        self.jordan_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GenSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// `⊕ J_size` with weighted superdiagonal, optionally conjugated by a Haar
/// unitary drawn from `spec.seed`.
pub fn gen_nilpotent(spec: &GenSpec) -> Result<Matrix> {
    spec.validate()?;
    let dim = spec.dim();
    let mut a = Matrix::zeros(dim, dim);
    let mut start = 0;
    let mut k = 0;
    for &size in &spec.jordan_sizes {
        for i in start..start + size - 1 {
            k += 1;
            a[(i, i + 1)] = c64(spec.decay.weight(k), 0.0);
        }
        start += size;
    }
    if spec.conjugate {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let q = haar_unitary(dim, &mut rng);
        a = &q * a * q.adjoint();
    }
    Ok(a)
}

/// Standard complex Gaussian matrix: entries `(g₁ + i g₂)/√2`.
pub fn complex_gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Matrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re * scale, im * scale)
    })
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    let qr = complex_gaussian(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d.unscale(d.norm()) } else { c64(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// Jordan sizes for the scan experiment: as many blocks of size `n` as fit
/// in `dim`, plus one remainder block.
pub fn scan_jordan_sizes(n: usize, dim: usize) -> Vec<usize> {
    let mut sizes = vec![n; dim / n];
    if !dim.is_multiple_of(n) {
        sizes.push(dim % n);
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{jordan_block, unitarity_residual};

    #[test]
    fn plain_block_is_jordan() {
        let spec = GenSpec { seed: 99, ..GenSpec::new(vec![4]) };
        assert_eq!(gen_nilpotent(&spec).unwrap(), jordan_block(4));
    }

    #[test]
    fn weights_run_over_all_blocks() {
        let spec = GenSpec {
            decay: Decay::Geometric { rho: 0.5 },
            ..GenSpec::new(vec![2, 3])
        };
        let a = gen_nilpotent(&spec).unwrap();
        assert_eq!(a[(0, 1)].re, 0.5);
        assert_eq!(a[(1, 2)].re, 0.0);
        assert_eq!(a[(2, 3)].re, 0.25);
        assert_eq!(a[(3, 4)].re, 0.125);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 7, 20] {
            assert!(unitarity_residual(&haar_unitary(n, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn json_schema() {
        let text = r#"{"jordan_sizes":[4,2],"decay":{"kind":"geometric","rho":0.5},"conjugate":true,"seed":42}"#;
        let spec = GenSpec::from_json(text).unwrap();
        assert_eq!(spec.jordan_sizes, vec![4, 2]);
        assert_eq!(spec.decay, Decay::Geometric { rho: 0.5 });
        assert!(spec.conjugate);
        assert_eq!(spec.seed, 42);
        let back: GenSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);

        let minimal = GenSpec::from_json(r#"{"jordan_sizes":[4],"decay":{"kind":"none"},"seed":0}"#).unwrap();
        let short = GenSpec::from_json(r#"{"sizes":[4,2],"decay":"geometric:0.5","seed":7}"#).unwrap();
        assert_eq!(short.decay, Decay::Geometric { rho: 0.5 });
        assert_eq!(short.jordan_sizes, vec![4, 2]);
        assert!(GenSpec::from_json(r#"{"sizes":[4],"decay":"geometric:2"}"#).is_err());
        assert_eq!(minimal, GenSpec::new(vec![4]));
    }

    #[test]
    fn invalid_specs() {
        assert!(GenSpec::from_json("{").is_err());
        assert!(GenSpec::from_json(r#"{"jordan_sizes":[]}"#).is_err());
        assert!(GenSpec::from_json(r#"{"jordan_sizes":[0, 2]}"#).is_err());
        assert!(GenSpec::from_json(r#"{"jordan_sizes":[3],"decay":{"kind":"geometric","rho":1.5}}"#).is_err());
        assert!(GenSpec::from_json(r#"{"jordan_sizes":[3],"decay":{"kind":"polynomial","alpha":-1}}"#).is_err());
    }

    #[test]
    fn decay_strings() {
        assert_eq!("none".parse::<Decay>().unwrap(), Decay::None);
        assert_eq!("geometric:0.5".parse::<Decay>().unwrap(), Decay::Geometric { rho: 0.5 });
        assert_eq!("polynomial:2".parse::<Decay>().unwrap(), Decay::Polynomial { alpha: 2.0 });
        assert!("geometric".parse::<Decay>().is_err());
        assert!("geometric:2".parse::<Decay>().is_err());
        assert!("cubic:1".parse::<Decay>().is_err());
    }

    #[test]
    fn scan_sizes() {
        assert_eq!(scan_jordan_sizes(4, 16), vec![4, 4, 4, 4]);
        assert_eq!(scan_jordan_sizes(5, 16), vec![5, 5, 5, 1]);
    }
}
