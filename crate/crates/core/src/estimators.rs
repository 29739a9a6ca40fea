//! Estimators as function objects over samples, their images in the dual
//! space `η̂ = ∇φ(δ)`, the map back `δ̃ = (∇φ)⁻¹(η̃)`, Rao–Blackwellization by
//! permutation averaging, and the registry of closed-form type-I UMVUEs.
//!
//! Conditioning on the order statistics of an i.i.d. sample is the same as
//! averaging over all reorderings of the sample, so
//! [`rao_blackwellize_by_symmetry`] computes `E[η̂ | order statistics]` exactly
//! for `n ≤ 8` and by seeded random permutations beyond that.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::models::{Model, ModelKind};
use crate::rng::seeded;
use crate::stats::pairwise_sum;

pub type SampleFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// A declared unbiasedness property. Declarations are claims that `risk_lab`
/// checks; nothing relies on them being true.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum UnbiasednessTag {
    /// `E_θ[δ] = θ` (equivalently type-II Bregman unbiased for any generator).
    Classical,
    /// `E_θ[∇φ(δ)] = ∇φ(θ)` for the named generator.
    TypeI(String),
}

#[derive(Clone)]
pub struct Estimator {
    id: String,
    map: SampleFn,
    tags: Vec<UnbiasednessTag>,
    requires_min_n: usize,
}

impl fmt::Debug for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Estimator")
            .field("id", &self.id)
            .field("tags", &self.tags)
            .field("requires_min_n", &self.requires_min_n)
            .finish()
    }
}

impl Estimator {
    pub fn new(
        id: impl Into<String>,
        requires_min_n: usize,
        map: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            map: Arc::new(map),
            tags: Vec::new(),
            requires_min_n: requires_min_n.max(1),
        }
    }

    pub fn with_tag(mut self, tag: UnbiasednessTag) -> Self {
        if !self.tags.contains(&tag) {
            self.tags.push(tag);
        }
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tags(&self) -> &[UnbiasednessTag] {
        &self.tags
    }

    pub fn requires_min_n(&self) -> usize {
        self.requires_min_n
    }

    pub fn estimate(&self, x: &[f64]) -> Result<f64> {
        if x.len() < self.requires_min_n {
            return Err(Error::Config(format!(
                "estimator `{}` needs n >= {}, got {}",
                self.id,
                self.requires_min_n,
                x.len()
            )));
        }
        (self.map)(x)
    }

    /// `δ ≡ v`.
    pub fn constant(v: f64) -> Self {
        Self::new(format!("const:{v}"), 1, move |_| Ok(v))
    }

    pub fn sample_mean() -> Self {
        Self::new("mean", 1, |x| Ok(x.iter().sum::<f64>() / x.len() as f64))
    }

    pub fn geometric_mean() -> Self {
        Self::new("geomean", 1, |x| {
            Ok((x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64).exp())
        })
    }

    /// `X₁`.
    pub fn first_observation() -> Self {
        Self::new("first", 1, |x| Ok(x[0]))
    }

    /// The model's classical UMVUE.
    pub fn classical(model: &Model) -> Self {
        let m = *model;
        Self::new("classical", 1, move |x| Ok(m.classical_raw(x))).with_tag(UnbiasednessTag::Classical)
    }

    /// `inner` applied to the first `k` observations only.
    pub fn first_k(k: usize, inner: &Estimator) -> Self {
        let inner = inner.clone();
        let min = k.max(inner.requires_min_n);
        Self {
            id: format!("first-k:{k}"),
            requires_min_n: min,
            tags: inner.tags.clone(),
            map: Arc::new(move |x: &[f64]| inner.estimate(&x[..k])),
        }
    }

    /// Renames the estimator, keeping everything else.
    pub fn named(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// `η̂ = ∇φ ∘ δ`.
#[derive(Clone)]
pub struct DualEstimator {
    base: Estimator,
    generator: Arc<Generator>,
}

impl fmt::Debug for DualEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualEstimator")
            .field("base", &self.base.id)
            .field("generator", &self.generator.id())
            .finish()
    }
}

impl DualEstimator {
    pub fn base(&self) -> &Estimator {
        &self.base
    }

    pub fn generator(&self) -> &Arc<Generator> {
        &self.generator
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.generator.gradient1(self.base.estimate(x)?)
    }
}

fn require_scalar(g: &Generator) -> Result<()> {
    if g.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: g.dim(),
        });
    }
    Ok(())
}

pub fn to_dual(g: &Arc<Generator>, e: &Estimator) -> Result<DualEstimator> {
    require_scalar(g)?;
    Ok(DualEstimator {
        base: e.clone(),
        generator: Arc::clone(g),
    })
}

/// `δ̃ = (∇φ)⁻¹ ∘ η̃` for an arbitrary dual map.
pub fn from_dual(
    g: &Arc<Generator>,
    id: impl Into<String>,
    requires_min_n: usize,
    dual: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
) -> Result<Estimator> {
    require_scalar(g)?;
    let g = Arc::clone(g);
    Ok(Estimator::new(id, requires_min_n, move |x| g.invert_gradient1(dual(x)?)))
}

/// Maps a [`DualEstimator`] back to the primal space.
pub fn from_dual_estimator(d: &DualEstimator) -> Result<Estimator> {
    let inner = d.clone();
    let out = from_dual(
        &d.generator,
        d.base.id.clone(),
        d.base.requires_min_n,
        move |x| inner.eval(x),
    )?;
    Ok(Estimator {
        tags: d.base.tags.clone(),
        ..out
    })
}

/// Largest `n` for which exact permutation averaging is allowed (8! = 40320).
pub const EXACT_MAX_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PermutationBudget {
    /// All `n!` orderings.
    Exact,
    /// `count` uniformly random orderings from a stream seeded by `seed`.
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Symmetrized {
    pub value: f64,
    pub permutations: usize,
}

/// Averages `map` over reorderings of `x`.
///
/// Exact mode visits permutations in lexicographic index order and sums with
/// [`pairwise_sum`], so the result is bit-reproducible.
pub fn rao_blackwellize_by_symmetry(
    map: impl Fn(&[f64]) -> Result<f64>,
    x: &[f64],
    budget: PermutationBudget,
) -> Result<Symmetrized> {
    let n = x.len();
    if n == 0 {
        return Err(Error::Config("cannot symmetrize an empty sample".into()));
    }
    let mut buf = x.to_vec();
    let values = match budget {
        PermutationBudget::Exact => {
            if n > EXACT_MAX_N {
                return Err(Error::Budget(format!(
                    "exact permutation averaging needs n <= {EXACT_MAX_N}, got n = {n}"
                )));
            }
            let mut values = Vec::new();
            for perm in (0..n).permutations(n) {
                for (slot, &i) in buf.iter_mut().zip(&perm) {
                    *slot = x[i];
                }
                values.push(map(&buf)?);
            }
            values
        }
        PermutationBudget::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::Budget("sampled permutation count must be positive".into()));
            }
            let mut rng = seeded(seed);
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                buf.shuffle(&mut rng);
                values.push(map(&buf)?);
            }
            values
        }
    };
    Ok(Symmetrized {
        value: pairwise_sum(&values) / values.len() as f64,
        permutations: values.len(),
    })
}

/// `δ̃ = (∇φ)⁻¹(E[∇φ(δ) | order statistics])`: the dual-space Rao–Blackwell
/// improvement of `e`.
pub fn extended_rao_blackwell(
    g: &Arc<Generator>,
    e: &Estimator,
    budget: PermutationBudget,
) -> Result<Estimator> {
    let dual = to_dual(g, e)?;
    let id = format!("rb({})", e.id());
    from_dual(g, id, e.requires_min_n(), move |x| {
        Ok(rao_blackwellize_by_symmetry(|p| dual.eval(p), x, budget)?.value)
    })
}

/// The closed-form type-I Bregman UMVUE for a (model, generator) pair.
///
/// | model      | generator                | estimator          |
/// |------------|--------------------------|--------------------|
/// | exp        | neglog                   | ΣXᵢ / (n − 1)      |
/// | lognormal  | negentropy               | geometric mean     |
/// | any        | sqeuclid, mahalanobis 1×1| classical UMVUE    |
pub fn build_type1_umvue(m: &Model, g: &Generator) -> Result<Estimator> {
    require_scalar(g)?;
    let tag = UnbiasednessTag::TypeI(g.id().to_string());
    let e = match (m.kind(), g.id()) {
        (ModelKind::Exponential, "neglog") => Estimator::new("type1", 2, |x| {
            Ok(x.iter().sum::<f64>() / (x.len() as f64 - 1.0))
        }),
        (ModelKind::LogNormal { .. }, "negentropy") => Estimator::geometric_mean().named("type1"),
        // ∇φ is linear, so type-I and classical unbiasedness coincide
        (_, "sqeuclid") | (_, "mahalanobis") => Estimator::classical(m).named("type1"),
        (_, gid) => {
            return Err(Error::Unsupported(format!(
                "no closed-form type-I UMVUE registered for model `{}` with generator `{gid}`",
                m.id()
            )))
        }
    };
    Ok(e.with_tag(tag))
}

/// Parses `classical`, `type1`, `first-k:<k>` or `const:<v>`.
///
/// `first-k:<k>` is the type-I UMVUE rule applied to the first `k`
/// observations when the pair is registered, and the sample mean of the first
/// `k` observations otherwise. Without a model, `classical` is the sample mean
/// and `type1` is unavailable.
pub fn parse_estimator(spec: &str, model: Option<&Model>, g: &Generator) -> Result<Estimator> {
    let spec = spec.trim();
    if let Some(v) = spec.strip_prefix("const:") {
        let v: f64 = v
            .parse()
            .map_err(|e| Error::parse("estimator", format!("bad constant `{v}`: {e}")))?;
        return Ok(Estimator::constant(v));
    }
    if let Some(k) = spec.strip_prefix("first-k:") {
        let k: usize = k
            .parse()
            .map_err(|e| Error::parse("estimator", format!("bad k `{k}`: {e}")))?;
        if k == 0 {
            return Err(Error::parse("estimator", "first-k needs k >= 1"));
        }
        let inner = match model.map(|m| build_type1_umvue(m, g)) {
            Some(Ok(e)) => e,
            _ => Estimator::sample_mean(),
        };
        return Ok(Estimator::first_k(k, &inner));
    }
    match (spec, model) {
        ("classical", Some(m)) => Ok(Estimator::classical(m)),
        ("classical", None) => Ok(Estimator::sample_mean().named("classical")),
        ("type1", Some(m)) => build_type1_umvue(m, g),
        ("type1", None) => Err(Error::Unsupported("type1 needs a parametric model".into())),
        _ => Err(Error::parse(
            "estimator",
            format!("unknown estimator `{spec}` (expected classical, type1, first-k:<k>, const:<v>)"),
        )),
    }
}
