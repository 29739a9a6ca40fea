//! Scalar-parameter sampling families with their sufficient statistics and
//! classical UMVUEs.
//!
//! * `exp`: exponential with **mean** θ (rate 1/θ), so `T = ΣXᵢ ~ Gamma(n, scale θ)`.
//! * `lognormal:<σ²>`: `log X ~ N(log θ, σ²)` with σ² known; the estimand is θ.
//! * `normal:<σ²>`: `X ~ N(θ, σ²)` with σ² known.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::generators::{Constraint, DomainSpec};
use crate::rng::{seeded, SimRng};

/// An i.i.d. sample `X₁, …, Xₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    obs: Vec<f64>,
}

impl Sample {
    pub fn new(obs: Vec<f64>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::Config("a sample needs at least one observation".into()));
        }
        Ok(Self { obs })
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.obs
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.obs
    }
}

impl AsRef<[f64]> for Sample {
    fn as_ref(&self) -> &[f64] {
        &self.obs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Exponential,
    LogNormal { sigma2: f64 },
    Normal { sigma2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    kind: ModelKind,
}

fn check_variance(sigma2: f64) -> Result<()> {
    if sigma2.is_finite() && sigma2 > 0.0 {
        Ok(())
    } else {
        Err(Error::parse("sigma2", format!("variance must be positive, got {sigma2}")))
    }
}

/// One standard normal draw by the Box–Muller cosine branch.
fn standard_normal(rng: &mut SimRng) -> f64 {
    let u1 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

impl Model {
    pub fn exponential() -> Self {
        Self {
            kind: ModelKind::Exponential,
        }
    }

    pub fn lognormal(sigma2: f64) -> Result<Self> {
        check_variance(sigma2)?;
        Ok(Self {
            kind: ModelKind::LogNormal { sigma2 },
        })
    }

    pub fn normal(sigma2: f64) -> Result<Self> {
        check_variance(sigma2)?;
        Ok(Self {
            kind: ModelKind::Normal { sigma2 },
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn id(&self) -> String {
        match self.kind {
            ModelKind::Exponential => "exp".into(),
            ModelKind::LogNormal { sigma2 } => format!("lognormal:{sigma2}"),
            ModelKind::Normal { sigma2 } => format!("normal:{sigma2}"),
        }
    }

    /// Θ. The normal mean is unrestricted; the other two are positive.
    pub fn param_space(&self) -> DomainSpec {
        match self.kind {
            ModelKind::Normal { .. } => DomainSpec::reals(1),
            _ => DomainSpec::positive(1),
        }
    }

    fn support(&self) -> Constraint {
        match self.kind {
            ModelKind::Normal { .. } => Constraint::AllReals,
            _ => Constraint::StrictlyPositive,
        }
    }

    /// Declared, not computed: each builtin's statistic is complete sufficient.
    pub fn complete_sufficient(&self) -> bool {
        true
    }

    pub fn check_param(&self, theta: f64) -> Result<()> {
        self.param_space().check(&[theta])
    }

    pub fn check_sample(&self, x: &Sample) -> Result<()> {
        DomainSpec::new(x.len(), self.support())?.check(x.as_slice())
    }

    /// `n` i.i.d. draws, deterministic in `(θ, n, seed)`.
    pub fn sample(&self, theta: f64, n: usize, seed: u64) -> Result<Sample> {
        self.check_param(theta)?;
        if n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        let mut rng = seeded(seed);
        let mut buf = Vec::with_capacity(n);
        self.draw_into(theta, n, &mut rng, &mut buf);
        Sample::new(buf)
    }

    /// Fills `buf` with `n` draws from `rng`. `theta` must already be valid.
    pub(crate) fn draw_into(&self, theta: f64, n: usize, rng: &mut SimRng, buf: &mut Vec<f64>) {
        buf.clear();
        match self.kind {
            ModelKind::Exponential => {
                for _ in 0..n {
                    let u: f64 = rng.random();
                    buf.push(-theta * (1.0 - u).ln());
                }
            }
            ModelKind::LogNormal { sigma2 } => {
                let (mu, sd) = (theta.ln(), sigma2.sqrt());
                for _ in 0..n {
                    buf.push((mu + sd * standard_normal(rng)).exp());
                }
            }
            ModelKind::Normal { sigma2 } => {
                let sd = sigma2.sqrt();
                for _ in 0..n {
                    buf.push(theta + sd * standard_normal(rng));
                }
            }
        }
    }

    /// `ΣXᵢ` for exponential and normal, `Σ log Xᵢ` for lognormal.
    pub fn sufficient_stat(&self, x: &Sample) -> Result<Vec<f64>> {
        self.check_sample(x)?;
        Ok(vec![self.statistic(x.as_slice())])
    }

    pub(crate) fn statistic(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::LogNormal { .. } => x.iter().map(|v| v.ln()).sum(),
            _ => x.iter().sum(),
        }
    }

    /// The classical UMVUE of θ: the sample mean, or
    /// `exp(mean(log X) − σ²/(2n))` for lognormal.
    pub fn classical_umvue(&self, x: &Sample) -> Result<f64> {
        self.check_sample(x)?;
        Ok(self.classical_raw(x.as_slice()))
    }

    pub(crate) fn classical_raw(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        match self.kind {
            ModelKind::LogNormal { sigma2 } => (self.statistic(x) / n - sigma2 / (2.0 * n)).exp(),
            _ => self.statistic(x) / n,
        }
    }
}

/// Parses `exp`, `lognormal:<σ²>` or `normal:<σ²>`.
pub fn parse_model(spec: &str) -> Result<Model> {
    let spec = spec.trim();
    let variance = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::parse("model", format!("bad variance `{s}`: {e}")))
    };
    if spec == "exp" {
        Ok(Model::exponential())
    } else if let Some(v) = spec.strip_prefix("lognormal:") {
        Model::lognormal(variance(v)?)
    } else if let Some(v) = spec.strip_prefix("normal:") {
        Model::normal(variance(v)?)
    } else {
        Err(Error::parse(
            "model",
            format!("unknown model `{spec}` (expected exp, lognormal:<sigma2>, normal:<sigma2>)"),
        ))
    }
}
