//! Monte Carlo laboratory for Bregman risks.
//!
//! Every experiment draws `M` replicate samples from a model. Replicates are
//! generated in fixed chunks of [`CHUNK_SIZE`]; chunk `c` uses the stream
//! seeded by [`chunk_seed`]`(seed, c)`. Chunks may run on any number of
//! workers, results are gathered in replicate order and reduced with the
//! fixed-shape [`pairwise_sum`], so reports are bitwise identical for every
//! worker count. Two experiments that share `(model, θ, n, M, seed)` see the
//! same samples, which is what the paired comparisons rely on.
//!
//! Left-orientation reports decompose
//! `E[D_φ(θ, δ)] = D_φ(θ, θ̂*) + E[D_φ(θ̂*, δ)]` where `θ̂*` is the replicate
//! Bregman mean; right-orientation reports decompose
//! `E[D_φ(δ, θ)] = D_φ(E δ, θ) + E[D_φ(δ, E δ)]`. Both centers are plug-in
//! estimates from the same replicates, so the identities hold exactly up to
//! rounding.

use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{bregman_div, Orientation};
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::generators::Generator;
use crate::models::Model;
use crate::rng::{chunk_seed, seeded};
use crate::stats::{pairwise_sum, summarize};

pub const CHUNK_SIZE: usize = 4096;
pub const MIN_REPLICATES: usize = 1000;
/// `|z| ≤ Z_THRESHOLD` passes an unbiasedness check.
pub const Z_THRESHOLD: f64 = 4.0;
/// Largest tolerated fraction of replicates dropped for domain violations.
pub const DROP_TOLERANCE: f64 = 0.001;
/// Excess kurtosis of the per-replicate loss above which a report carries a
/// heavy-tail warning.
pub const HEAVY_TAIL_KURTOSIS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub replicates: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            workers: default_workers(),
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::Config(format!(
                "M = {} is below the minimum of {MIN_REPLICATES} replicates",
                self.replicates
            )));
        }
        Ok(())
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Applies `f` to `M` replicate samples and returns the results in replicate order.
pub fn simulate<R, F>(model: &Model, theta: f64, n: usize, mc: &McConfig, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&[f64]) -> R + Sync,
{
    model.check_param(theta)?;
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let m = mc.replicates;
    let chunks = m.div_ceil(CHUNK_SIZE);
    let run_chunk = |c: usize| {
        let mut rng = seeded(chunk_seed(mc.seed, c as u64));
        let count = CHUNK_SIZE.min(m - c * CHUNK_SIZE);
        let mut buf = Vec::with_capacity(n);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            model.draw_into(theta, n, &mut rng, &mut buf);
            out.push(f(&buf));
        }
        out
    };
    let parts: Vec<Vec<R>> = if mc.workers <= 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(mc.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect())
    };
    Ok(parts.into_iter().flatten().collect())
}

/// Per-replicate estimates, `None` where the estimator failed or left `g`'s domain.
fn replicate_estimates(
    model: &Model,
    theta: f64,
    n: usize,
    e: &Estimator,
    g: Option<&Generator>,
    mc: &McConfig,
) -> Result<Vec<Option<f64>>> {
    simulate(model, theta, n, mc, |x| match e.estimate(x) {
        Ok(d) if d.is_finite() && g.is_none_or(|g| g.domain().contains(&[d])) => Some(d),
        _ => None,
    })
}

fn check_common(model: &Model, theta: f64, n: usize, e: &Estimator, g: Option<&Generator>, mc: &McConfig) -> Result<()> {
    mc.validate()?;
    model.check_param(theta)?;
    if let Some(g) = g {
        if g.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: g.dim(),
            });
        }
        g.domain().check(&[theta])?;
    }
    if n < e.requires_min_n() {
        return Err(Error::Config(format!(
            "estimator `{}` needs n >= {}, got n = {n}",
            e.id(),
            e.requires_min_n()
        )));
    }
    Ok(())
}

fn loss(g: &Generator, orientation: Orientation, theta: f64, d: f64) -> Result<f64> {
    match orientation {
        Orientation::Left => bregman_div(g, &[theta], &[d]),
        Orientation::Right => bregman_div(g, &[d], &[theta]),
    }
}

fn mean_of(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub model: String,
    pub generator: String,
    pub estimator: String,
    pub theta: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub orientation: Orientation,
    pub risk: f64,
    pub bias_term: f64,
    pub variance_term: f64,
    /// `θ̂*_δ` for left orientation, the replicate mean of `δ` for right.
    pub center: f64,
    pub se_risk: f64,
    pub dropped: usize,
    pub valid: bool,
    pub excess_kurtosis: f64,
    pub heavy_tail_warning: bool,
}

impl RiskReport {
    pub fn residual(&self) -> f64 {
        self.risk - self.bias_term - self.variance_term
    }
}

/// Bregman risk of `e` at θ with its bias–variance decomposition.
#[allow(clippy::too_many_arguments)]
pub fn estimate_risk(
    model: &Model,
    theta: f64,
    n: usize,
    e: &Estimator,
    g: &Generator,
    orientation: Orientation,
    mc: &McConfig,
) -> Result<RiskReport> {
    check_common(model, theta, n, e, Some(g), mc)?;
    let raw = replicate_estimates(model, theta, n, e, Some(g), mc)?;
    risk_from_estimates(model, theta, n, e.id(), g, orientation, mc, &raw)
}

#[allow(clippy::too_many_arguments)]
fn risk_from_estimates(
    model: &Model,
    theta: f64,
    n: usize,
    estimator_id: &str,
    g: &Generator,
    orientation: Orientation,
    mc: &McConfig,
    raw: &[Option<f64>],
) -> Result<RiskReport> {
    let kept: Vec<f64> = raw.iter().flatten().copied().collect();
    let dropped = raw.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::Numeric(format!(
            "every replicate of `{estimator_id}` left the domain of `{}`",
            g.id()
        )));
    }
    let losses = kept
        .iter()
        .map(|&d| loss(g, orientation, theta, d))
        .collect::<Result<Vec<_>>>()?;
    let (center, bias_term, variance_term) = match orientation {
        Orientation::Left => {
            let duals = kept.iter().map(|&d| g.gradient1(d)).collect::<Result<Vec<_>>>()?;
            let center = g.invert_gradient1(mean_of(&duals))?;
            let spread = kept
                .iter()
                .map(|&d| bregman_div(g, &[center], &[d]))
                .collect::<Result<Vec<_>>>()?;
            (center, bregman_div(g, &[theta], &[center])?, mean_of(&spread))
        }
        Orientation::Right => {
            let center = mean_of(&kept);
            let spread = kept
                .iter()
                .map(|&d| bregman_div(g, &[d], &[center]))
                .collect::<Result<Vec<_>>>()?;
            (center, bregman_div(g, &[center], &[theta])?, mean_of(&spread))
        }
    };
    let s = summarize(&losses);
    Ok(RiskReport {
        model: model.id(),
        generator: g.id().to_string(),
        estimator: estimator_id.to_string(),
        theta,
        n,
        replicates: mc.replicates,
        seed: mc.seed,
        orientation,
        risk: s.mean,
        bias_term,
        variance_term,
        center,
        se_risk: s.se,
        dropped,
        valid: dropped as f64 <= DROP_TOLERANCE * mc.replicates as f64,
        excess_kurtosis: s.excess_kurtosis,
        heavy_tail_warning: s.excess_kurtosis > HEAVY_TAIL_KURTOSIS,
    })
}

/// Left and right reports of one estimator computed from a single replicate set.
pub fn estimate_risk_both(
    model: &Model,
    theta: f64,
    n: usize,
    e: &Estimator,
    g: &Generator,
    mc: &McConfig,
) -> Result<(RiskReport, RiskReport)> {
    check_common(model, theta, n, e, Some(g), mc)?;
    let raw = replicate_estimates(model, theta, n, e, Some(g), mc)?;
    Ok((
        risk_from_estimates(model, theta, n, e.id(), g, Orientation::Left, mc, &raw)?,
        risk_from_estimates(model, theta, n, e.id(), g, Orientation::Right, mc, &raw)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnbiasednessType {
    #[serde(rename = "type-I")]
    TypeI,
    #[serde(rename = "type-II")]
    TypeII,
}

impl std::fmt::Display for UnbiasednessType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnbiasednessType::TypeI => "type-I",
            UnbiasednessType::TypeII => "type-II",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.passed() { "PASS" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbiasednessReport {
    #[serde(rename = "type")]
    pub kind: UnbiasednessType,
    pub model: String,
    pub generator: String,
    pub estimator: String,
    pub theta: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Replicate mean of `∇φ(δ)` (type-I) or `δ` (type-II).
    pub mean: f64,
    /// `∇φ(θ)` (type-I) or `θ` (type-II).
    pub target: f64,
    pub se: f64,
    pub z_score: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub dropped: usize,
}

fn z_score(mean: f64, target: f64, se: f64) -> f64 {
    let diff = mean - target;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * (1.0 + target.abs()) {
        0.0
    } else {
        // degenerate replicate distribution away from the target
        f64::MAX.copysign(diff)
    }
}

#[allow(clippy::too_many_arguments)]
fn mean_test(
    kind: UnbiasednessType,
    model: &Model,
    theta: f64,
    n: usize,
    estimator_id: &str,
    generator_id: &str,
    mc: &McConfig,
    values: &[Option<f64>],
    target: f64,
) -> UnbiasednessReport {
    let kept: Vec<f64> = values.iter().flatten().copied().collect();
    let s = summarize(&kept);
    let z = z_score(s.mean, target, s.se);
    UnbiasednessReport {
        kind,
        model: model.id(),
        generator: generator_id.to_string(),
        estimator: estimator_id.to_string(),
        theta,
        n,
        replicates: mc.replicates,
        seed: mc.seed,
        mean: s.mean,
        target,
        se: s.se,
        z_score: z,
        threshold: Z_THRESHOLD,
        verdict: if z.abs() <= Z_THRESHOLD && !kept.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        dropped: values.len() - kept.len(),
    }
}

/// Tests `E_θ[∇φ(δ)] = ∇φ(θ)` at every grid point.
pub fn check_type1_unbiased(
    model: &Model,
    theta_grid: &[f64],
    n: usize,
    e: &Estimator,
    g: &Generator,
    mc: &McConfig,
) -> Result<Vec<UnbiasednessReport>> {
    theta_grid
        .iter()
        .map(|&theta| {
            check_common(model, theta, n, e, Some(g), mc)?;
            let duals: Vec<Option<f64>> = replicate_estimates(model, theta, n, e, Some(g), mc)?
                .into_iter()
                .map(|d| d.and_then(|d| g.gradient1(d).ok()))
                .collect();
            let target = g.gradient1(theta)?;
            Ok(mean_test(UnbiasednessType::TypeI, model, theta, n, e.id(), g.id(), mc, &duals, target))
        })
        .collect()
}

/// Tests `E_θ[δ] = θ` at every grid point (classical unbiasedness).
pub fn check_type2_unbiased(
    model: &Model,
    theta_grid: &[f64],
    n: usize,
    e: &Estimator,
    mc: &McConfig,
) -> Result<Vec<UnbiasednessReport>> {
    check_mean_against(model, theta_grid, n, e, Ok, mc)
}

/// Tests `E_θ[δ] = target(θ)` at every grid point; reported as type-II.
pub fn check_mean_against(
    model: &Model,
    theta_grid: &[f64],
    n: usize,
    e: &Estimator,
    target: impl Fn(f64) -> Result<f64>,
    mc: &McConfig,
) -> Result<Vec<UnbiasednessReport>> {
    theta_grid
        .iter()
        .map(|&theta| {
            check_common(model, theta, n, e, None, mc)?;
            let raw = replicate_estimates(model, theta, n, e, None, mc)?;
            Ok(mean_test(UnbiasednessType::TypeII, model, theta, n, e.id(), "-", mc, &raw, target(theta)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LehmannGridPoint {
    pub theta_prime: f64,
    pub expected_loss: f64,
    pub se: f64,
    /// Paired difference `E[ℓ(θ', δ)] − E[ℓ(θ, δ)]` and its standard error.
    pub diff_vs_theta: f64,
    pub diff_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LehmannGridReport {
    pub model: String,
    pub generator: String,
    pub estimator: String,
    pub orientation: Orientation,
    pub theta: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub points: Vec<LehmannGridPoint>,
    pub argmin_index: usize,
    pub argmin_theta: f64,
    /// Set when another grid point tied exactly with θ and the tie went to θ.
    pub tie_broken_toward_theta: bool,
    pub dropped: usize,
}

/// Estimates `E_θ[ℓ(θ', δ)]` across a grid of `θ'` from one shared replicate set.
#[allow(clippy::too_many_arguments)]
pub fn lehmann_grid_check(
    model: &Model,
    theta: f64,
    grid: &[f64],
    n: usize,
    e: &Estimator,
    g: &Generator,
    orientation: Orientation,
    mc: &McConfig,
) -> Result<LehmannGridReport> {
    check_common(model, theta, n, e, Some(g), mc)?;
    let Some(theta_index) = grid.iter().position(|&t| t == theta) else {
        return Err(Error::Config(format!("the θ' grid must contain θ = {theta}")));
    };
    for &t in grid {
        g.domain().check(&[t])?;
    }
    let raw = replicate_estimates(model, theta, n, e, Some(g), mc)?;
    let kept: Vec<f64> = raw.iter().flatten().copied().collect();
    let table = grid
        .iter()
        .map(|&t| kept.iter().map(|&d| loss(g, orientation, t, d)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let base = &table[theta_index];
    let points: Vec<LehmannGridPoint> = grid
        .iter()
        .zip(&table)
        .map(|(&t, losses)| {
            let s = summarize(losses);
            let diffs: Vec<f64> = losses.iter().zip(base).map(|(a, b)| a - b).collect();
            let d = summarize(&diffs);
            LehmannGridPoint {
                theta_prime: t,
                expected_loss: s.mean,
                se: s.se,
                diff_vs_theta: d.mean,
                diff_se: d.se,
            }
        })
        .collect();
    let best = points
        .iter()
        .map(|p| p.expected_loss)
        .fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..points.len()).filter(|&i| points[i].expected_loss == best).collect();
    let (argmin_index, tie_broken_toward_theta) = if tied.contains(&theta_index) {
        (theta_index, tied.len() > 1)
    } else {
        (tied[0], false)
    };
    Ok(LehmannGridReport {
        model: model.id(),
        generator: g.id().to_string(),
        estimator: e.id().to_string(),
        orientation,
        theta,
        n,
        replicates: mc.replicates,
        seed: mc.seed,
        argmin_theta: grid[argmin_index],
        argmin_index,
        tie_broken_toward_theta,
        points,
        dropped: raw.len() - kept.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub model: String,
    pub generator: String,
    pub estimator_1: String,
    pub estimator_2: String,
    pub orientation: Orientation,
    pub theta: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub risk_1: f64,
    pub se_1: f64,
    pub risk_2: f64,
    pub se_2: f64,
    /// Mean of the paired per-replicate loss difference (estimator 1 minus 2).
    pub difference: f64,
    pub difference_se: f64,
    pub difference_z: f64,
    pub dropped: usize,
}

/// Risks of two estimators on common random numbers with a paired difference.
#[allow(clippy::too_many_arguments)]
pub fn compare_estimators(
    model: &Model,
    theta: f64,
    n: usize,
    e1: &Estimator,
    e2: &Estimator,
    g: &Generator,
    orientation: Orientation,
    mc: &McConfig,
) -> Result<ComparisonReport> {
    check_common(model, theta, n, e1, Some(g), mc)?;
    check_common(model, theta, n, e2, Some(g), mc)?;
    let in_domain = |e: &Estimator, x: &[f64]| match e.estimate(x) {
        Ok(d) if g.domain().contains(&[d]) => Some(d),
        _ => None,
    };
    let pairs = simulate(model, theta, n, mc, |x| in_domain(e1, x).zip(in_domain(e2, x)))?;
    let kept: Vec<(f64, f64)> = pairs.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(Error::Numeric("no replicate was valid for both estimators".into()));
    }
    let l1 = kept.iter().map(|&(a, _)| loss(g, orientation, theta, a)).collect::<Result<Vec<_>>>()?;
    let l2 = kept.iter().map(|&(_, b)| loss(g, orientation, theta, b)).collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| a - b).collect();
    let (s1, s2, d) = (summarize(&l1), summarize(&l2), summarize(&diffs));
    Ok(ComparisonReport {
        model: model.id(),
        generator: g.id().to_string(),
        estimator_1: e1.id().to_string(),
        estimator_2: e2.id().to_string(),
        orientation,
        theta,
        n,
        replicates: mc.replicates,
        seed: mc.seed,
        risk_1: s1.mean,
        se_1: s1.se,
        risk_2: s2.mean,
        se_2: s2.se,
        difference: d.mean,
        difference_se: d.se,
        difference_z: z_score(d.mean, 0.0, d.se),
        dropped: pairs.len() - kept.len(),
    })
}

/// Serializes rows as CSV with a header line.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Config(format!("cannot write CSV: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("cannot write CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// One JSON object per line.
pub fn to_json_lines<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// One CSV row per grid point, with the report-level fields repeated.
#[derive(Debug, Clone, Serialize)]
pub struct LehmannGridRow {
    pub model: String,
    pub generator: String,
    pub estimator: String,
    pub orientation: Orientation,
    pub theta: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub theta_prime: f64,
    pub expected_loss: f64,
    pub se: f64,
    pub diff_vs_theta: f64,
    pub diff_se: f64,
    pub is_argmin: bool,
}

impl LehmannGridReport {
    pub fn rows(&self) -> Vec<LehmannGridRow> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| LehmannGridRow {
                model: self.model.clone(),
                generator: self.generator.clone(),
                estimator: self.estimator.clone(),
                orientation: self.orientation,
                theta: self.theta,
                n: self.n,
                replicates: self.replicates,
                seed: self.seed,
                theta_prime: p.theta_prime,
                expected_loss: p.expected_loss,
                se: p.se,
                diff_vs_theta: p.diff_vs_theta,
                diff_se: p.diff_se,
                is_argmin: i == self.argmin_index,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::build_type1_umvue;

    fn mc(m: usize) -> McConfig {
        McConfig::new(m, 5).with_workers(2)
    }

    #[test]
    fn constant_oracle_has_zero_risk() {
        let m = Model::exponential();
        for g in [Generator::neg_log(1), Generator::neg_entropy(1), Generator::squared_euclidean(1)] {
            for o in [Orientation::Left, Orientation::Right] {
                let r = estimate_risk(&m, 2.0, 3, &Estimator::constant(2.0), &g, o, &mc(2000)).unwrap();
                assert!(r.risk.abs() < 1e-14 && r.bias_term.abs() < 1e-14 && r.variance_term.abs() < 1e-14);
                assert!(r.valid);
            }
        }
    }

    #[test]
    fn preconditions() {
        let m = Model::exponential();
        let nl = Generator::neg_log(1);
        let t1 = build_type1_umvue(&m, &nl).unwrap();
        assert!(estimate_risk(&m, 2.0, 5, &t1, &nl, Orientation::Left, &mc(999)).is_err());
        assert!(estimate_risk(&m, 2.0, 1, &t1, &nl, Orientation::Left, &mc(1000)).is_err());
        assert!(matches!(
            estimate_risk(&m, -2.0, 5, &t1, &nl, Orientation::Left, &mc(1000)),
            Err(Error::Domain { .. })
        ));
        // θ valid for the normal model but outside the neglog domain
        let nm = Model::normal(1.0).unwrap();
        assert!(matches!(
            estimate_risk(&nm, -1.0, 5, &Estimator::sample_mean(), &nl, Orientation::Left, &mc(1000)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn dropped_replicates_invalidate_report() {
        // the normal sample mean around θ = 0.05 is often negative
        let nm = Model::normal(1.0).unwrap();
        let nl = Generator::neg_log(1);
        let r = estimate_risk(&nm, 0.05, 2, &Estimator::sample_mean(), &nl, Orientation::Right, &mc(2000)).unwrap();
        assert!(r.dropped > 0);
        assert!(!r.valid);
        // a rare excursion stays within tolerance
        let r = estimate_risk(&nm, 4.0, 4, &Estimator::sample_mean(), &nl, Orientation::Right, &mc(2000)).unwrap();
        assert!(r.valid);
    }

    #[test]
    fn decomposition_is_exact_in_sample() {
        let m = Model::lognormal(0.5).unwrap();
        for g in [Generator::neg_log(1), Generator::neg_entropy(1), Generator::squared_euclidean(1)] {
            for e in [Estimator::classical(&m), Estimator::first_observation(), Estimator::geometric_mean()] {
                let (l, r) = estimate_risk_both(&m, 1.7, 4, &e, &g, &mc(3000)).unwrap();
                assert!(l.residual().abs() <= 1e-9 * (1.0 + l.risk), "{} {}", g.id(), e.id());
                assert!(r.residual().abs() <= 1e-9 * (1.0 + r.risk), "{} {}", g.id(), e.id());
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let m = Model::exponential();
        let nl = Generator::neg_log(1);
        let e = build_type1_umvue(&m, &nl).unwrap();
        let base = estimate_risk(&m, 2.0, 5, &e, &nl, Orientation::Left, &McConfig::new(10_000, 9).with_workers(1)).unwrap();
        for w in [2, 8] {
            let r = estimate_risk(&m, 2.0, 5, &e, &nl, Orientation::Left, &McConfig::new(10_000, 9).with_workers(w)).unwrap();
            assert_eq!(r.risk.to_bits(), base.risk.to_bits());
            assert_eq!(r.center.to_bits(), base.center.to_bits());
            assert_eq!(r, base);
        }
    }

    #[test]
    fn identical_estimators_compare_to_zero() {
        let m = Model::exponential();
        let nl = Generator::neg_log(1);
        let e = build_type1_umvue(&m, &nl).unwrap();
        let c = compare_estimators(&m, 2.0, 5, &e, &e, &nl, Orientation::Left, &mc(2000)).unwrap();
        assert_eq!(c.difference, 0.0);
        assert_eq!(c.difference_se, 0.0);
        assert_eq!(c.risk_1, c.risk_2);
    }

    #[test]
    fn grid_with_constant_estimator() {
        let m = Model::exponential();
        let nl = Generator::neg_log(1);
        let grid = [1.0, 1.5, 2.0, 2.5];
        let r = lehmann_grid_check(&m, 2.0, &grid, 3, &Estimator::constant(2.5), &nl, Orientation::Left, &mc(1000)).unwrap();
        assert_eq!(r.argmin_theta, 2.5);
        assert_eq!(r.points[3].expected_loss, 0.0);
        assert!(lehmann_grid_check(&m, 2.0, &[1.0, 3.0], 3, &Estimator::constant(2.5), &nl, Orientation::Left, &mc(1000)).is_err());
        assert!(lehmann_grid_check(&m, 2.0, &[-1.0, 2.0], 3, &Estimator::constant(2.5), &nl, Orientation::Left, &mc(1000)).is_err());
        let rows = r.rows();
        assert_eq!(rows.len(), 4);
        assert!(rows[3].is_argmin);
    }

    #[test]
    fn csv_and_json_emission() {
        let m = Model::exponential();
        let nl = Generator::neg_log(1);
        let r = estimate_risk(&m, 2.0, 3, &Estimator::constant(2.0), &nl, Orientation::Left, &mc(1000)).unwrap();
        let csv = to_csv(std::slice::from_ref(&r)).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("model,generator,estimator,theta,n,replicates,seed,orientation,risk"));
        assert!(lines.next().unwrap().starts_with("exp,neglog,const:2,2.0,3,1000,5,left,"));
        let json = to_json_lines(&[r]).unwrap();
        let v: serde_json::Value = serde_json::from_str(json.trim()).unwrap();
        assert_eq!(v["seed"], 5);
        assert_eq!(v["orientation"], "left");
    }
}
