//! Exact verification by enumeration over finite-support i.i.d. models.
//!
//! A [`DiscreteModel`] has support `v₁ < … < v_m` (positive, distinct) and the
//! exponential-tilt family `pᵢ(θ) ∝ exp(−θ vᵢ)`, `θ > 0`. Every expectation
//! is a finite sum over the `mⁿ` outcome tuples, enumerated in lexicographic
//! support order and reduced with [`pairwise_sum`], so results carry no Monte
//! Carlo error and are bit-reproducible for any worker count.
//!
//! Rao–Blackwellization conditions on the order statistics (the multiset of
//! observed values), which is sufficient for every i.i.d. family. The
//! conditional law given the multiset is uniform over its arrangements, so the
//! conditional expectation is a permutation average.

use std::collections::HashMap;
use std::sync::Arc;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{bregman_div, dual_div};
use crate::error::{Error, Result};
use crate::estimators::{rao_blackwellize_by_symmetry, Estimator, PermutationBudget, EXACT_MAX_N};
use crate::generators::{invert_monotone, Constraint, Generator};
use crate::stats::pairwise_sum;

/// Upper bound on `mⁿ`.
pub const MAX_OUTCOMES: usize = 2_000_000;
/// Slack allowed on the Rao–Blackwell inequality.
pub const RB_SLACK: f64 = 1e-12;
/// A risk gap above this counts as a strict improvement.
pub const STRICT_GAP: f64 = 1e-6;
/// Decomposition residuals at or below this pass.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    support: Vec<f64>,
    n: usize,
    workers: usize,
    /// Overrides the tilted family with a θ-free pmf.
    fixed_pmf: Option<Vec<f64>>,
}

impl DiscreteModel {
    pub fn new(support: Vec<f64>, n: usize) -> Result<Self> {
        if support.is_empty() || n == 0 {
            return Err(Error::Config("support and sample size must be non-empty".into()));
        }
        if let Some((i, v)) = support.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain {
                coordinate: i,
                value: *v,
                domain: "(0, inf)".into(),
            });
        }
        if support.iter().tuple_combinations().any(|(a, b)| a == b) {
            return Err(Error::Config("support values must be distinct".into()));
        }
        let outcomes = (support.len() as u128).checked_pow(n as u32);
        if outcomes.is_none_or(|o| o > MAX_OUTCOMES as u128) {
            return Err(Error::Budget(format!(
                "{}^{n} outcome tuples exceed the cap of {MAX_OUTCOMES}",
                support.len()
            )));
        }
        Ok(Self {
            support,
            n,
            workers: 1,
            fixed_pmf: None,
        })
    }

    /// A model whose pmf is `pmf` for every θ.
    pub fn with_fixed_pmf(support: Vec<f64>, n: usize, pmf: Vec<f64>) -> Result<Self> {
        let mut dm = Self::new(support, n)?;
        if pmf.len() != dm.support.len() {
            return Err(Error::Dimension {
                expected: dm.support.len(),
                got: pmf.len(),
            });
        }
        if pmf.iter().any(|p| !(*p >= 0.0)) || (pmf.iter().sum::<f64>() - 1.0).abs() > 1e-14 {
            return Err(Error::parse("pmf", "probabilities must be nonnegative and sum to 1"));
        }
        dm.fixed_pmf = Some(pmf);
        Ok(dm)
    }

    /// Support `{1, 2, …, m}`.
    pub fn integers(m: usize, n: usize) -> Result<Self> {
        Self::new((1..=m).map(|v| v as f64).collect(), n)
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn outcomes(&self) -> usize {
        self.support.len().pow(self.n as u32)
    }

    /// `pᵢ(θ) ∝ exp(−θ vᵢ)`.
    pub fn pmf(&self, theta: f64) -> Result<Vec<f64>> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::Domain {
                coordinate: 0,
                value: theta,
                domain: "(0, inf)".into(),
            });
        }
        if let Some(p) = &self.fixed_pmf {
            return Ok(p.clone());
        }
        let vmin = self.support.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self.support.iter().map(|v| (-theta * (v - vmin)).exp()).collect();
        let z: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / z).collect())
    }

    /// Visits the tuples whose leading index is `lead`, in lexicographic order.
    fn visit_block(&self, lead: usize, probs: &[f64], mut visit: impl FnMut(&[f64], f64) -> Result<()>) -> Result<()> {
        let m = self.support.len();
        let mut idx = vec![0usize; self.n];
        idx[0] = lead;
        let mut tuple: Vec<f64> = idx.iter().map(|&i| self.support[i]).collect();
        loop {
            let w: f64 = idx.iter().map(|&i| probs[i]).product();
            visit(&tuple, w)?;
            // odometer over positions 1..n
            let mut pos = self.n;
            loop {
                if pos == 1 {
                    return Ok(());
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < m {
                    tuple[pos] = self.support[idx[pos]];
                    break;
                }
                idx[pos] = 0;
                tuple[pos] = self.support[0];
            }
        }
    }

    /// `Σ_tuples P(tuple) f(tuple)` for a vector-valued `f`.
    pub fn exact_expectation<F>(&self, theta: f64, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let probs = self.pmf(theta)?;
        let block = |lead: usize| -> Result<Vec<Vec<f64>>> {
            let mut terms: Vec<Vec<f64>> = Vec::new();
            self.visit_block(lead, &probs, |x, w| {
                let v = f(x)?;
                if terms.is_empty() {
                    terms = vec![Vec::new(); v.len()];
                } else if v.len() != terms.len() {
                    return Err(Error::Dimension {
                        expected: terms.len(),
                        got: v.len(),
                    });
                }
                for (t, fv) in terms.iter_mut().zip(v) {
                    t.push(w * fv);
                }
                Ok(())
            })?;
            Ok(terms)
        };
        let m = self.support.len();
        let blocks: Vec<Vec<Vec<f64>>> = if self.workers <= 1 {
            (0..m).map(block).collect::<Result<_>>()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            pool.install(|| (0..m).into_par_iter().map(block).collect::<Result<_>>())?
        };
        let k = blocks[0].len();
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let all: Vec<f64> = blocks.iter().flat_map(|b| b[j].iter().copied()).collect();
            if all.len() != self.outcomes() {
                return Err(Error::Dimension {
                    expected: k,
                    got: blocks.iter().map(|b| b.len()).min().unwrap_or(0),
                });
            }
            out.push(pairwise_sum(&all));
        }
        Ok(out)
    }

    /// Scalar convenience form of [`Self::exact_expectation`].
    pub fn expect<F>(&self, theta: f64, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        Ok(self.exact_expectation(theta, |x| Ok(vec![f(x)?]))?[0])
    }

    /// Every multiset of size `n` drawn from the support, as sorted value vectors.
    fn multisets(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let mut sorted = self.support.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.into_iter().combinations_with_replacement(self.n)
    }
}

fn multiset_key(x: &[f64]) -> Vec<u64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v.into_iter().map(f64::to_bits).collect()
}

/// The exact dual-space Rao–Blackwellization of `e` given the order statistics.
#[derive(Debug, Clone)]
pub struct RaoBlackwellized {
    pub estimator: Estimator,
    /// True when `e` is constant on every multiset (up to 1e-12 relative).
    pub permutation_invariant: bool,
}

fn exact_arrangement_values(e: &Estimator, g: &Generator, x: &[f64]) -> Result<(f64, bool)> {
    if x.len() > EXACT_MAX_N {
        return Err(Error::Budget(format!(
            "exact conditioning needs n <= {EXACT_MAX_N}, got n = {}",
            x.len()
        )));
    }
    let first = e.estimate(x)?;
    let invariant = std::cell::Cell::new(true);
    let avg = rao_blackwellize_by_symmetry(
        |p| {
            let d = e.estimate(p)?;
            if (d - first).abs() > 1e-12 * (1.0 + first.abs()) {
                invariant.set(false);
            }
            g.gradient1(d)
        },
        x,
        PermutationBudget::Exact,
    )?;
    Ok((g.invert_gradient1(avg.value)?, invariant.get()))
}

/// `δ̃(T) = (∇φ)⁻¹(E[∇φ(δ) | T])` with `T` the order statistics, tabulated
/// over every multiset of the support.
pub fn exact_rao_blackwell(dm: &DiscreteModel, g: &Arc<Generator>, e: &Estimator) -> Result<RaoBlackwellized> {
    if g.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: g.dim(),
        });
    }
    let mut table = HashMap::new();
    let mut invariant = true;
    for ms in dm.multisets() {
        let (value, inv) = exact_arrangement_values(e, g, &ms)?;
        invariant &= inv;
        table.insert(multiset_key(&ms), value);
    }
    let table = Arc::new(table);
    let (g, base) = (Arc::clone(g), e.clone());
    let estimator = Estimator::new(format!("rb({})", e.id()), e.requires_min_n(), move |x| {
        match table.get(&multiset_key(x)) {
            Some(&v) => Ok(v),
            None => Ok(exact_arrangement_values(&base, &g, x)?.0),
        }
    });
    Ok(RaoBlackwellized {
        estimator,
        permutation_invariant: invariant,
    })
}

/// Exact `E_θ[D_φ(θ, δ)]`.
pub fn exact_left_risk(dm: &DiscreteModel, theta: f64, g: &Generator, e: &Estimator) -> Result<f64> {
    dm.expect(theta, |x| bregman_div(g, &[theta], &[e.estimate(x)?]))
}

/// Exact `E_θ[D_{φ*}(∇φ(δ), ∇φ(θ))]`, the left risk computed in the dual space.
pub fn exact_dual_left_risk(dm: &DiscreteModel, theta: f64, g: &Generator, e: &Estimator) -> Result<f64> {
    let eta = g.gradient1(theta)?;
    dm.expect(theta, |x| dual_div(g, &[g.gradient1(e.estimate(x)?)?], &[eta]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbRow {
    pub generator: String,
    pub estimator: String,
    pub theta: f64,
    pub risk_original: f64,
    pub risk_rao_blackwell: f64,
    /// `risk_original − risk_rao_blackwell`; never below `−RB_SLACK` when the
    /// inequality holds.
    pub gap: f64,
    pub strict: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbTable {
    pub rows: Vec<RbRow>,
    pub permutation_invariant: bool,
    /// Largest amount by which the Rao–Blackwellized risk exceeds the original.
    pub max_violation: f64,
    pub pass: bool,
}

/// Exact left risks of `e` and of its Rao–Blackwellization across `theta_grid`.
pub fn verify_rb_inequality(dm: &DiscreteModel, g: &Arc<Generator>, e: &Estimator, theta_grid: &[f64]) -> Result<RbTable> {
    let rb = exact_rao_blackwell(dm, g, e)?;
    let mut rows = Vec::with_capacity(theta_grid.len());
    let mut max_violation = f64::NEG_INFINITY;
    for &theta in theta_grid {
        let risk_original = exact_left_risk(dm, theta, g, e)?;
        let risk_rao_blackwell = exact_left_risk(dm, theta, g, &rb.estimator)?;
        let gap = risk_original - risk_rao_blackwell;
        max_violation = max_violation.max(-gap);
        rows.push(RbRow {
            generator: g.id().to_string(),
            estimator: e.id().to_string(),
            theta,
            risk_original,
            risk_rao_blackwell,
            gap,
            strict: gap > STRICT_GAP,
            holds: gap >= -RB_SLACK,
        });
    }
    let pass = rows.iter().all(|r| r.holds);
    Ok(RbTable {
        rows,
        permutation_invariant: rb.permutation_invariant,
        max_violation: max_violation.max(0.0),
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactDecomposition {
    pub risk: f64,
    pub bias_term: f64,
    pub variance_term: f64,
    pub center: f64,
}

impl ExactDecomposition {
    pub fn residual(&self) -> f64 {
        self.risk - self.bias_term - self.variance_term
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionResiduals {
    pub generator: String,
    pub estimator: String,
    pub theta: f64,
    pub left: ExactDecomposition,
    pub right: ExactDecomposition,
    pub max_residual: f64,
    pub pass: bool,
}

/// Exact left and right risk decompositions of `e` at θ.
pub fn verify_decompositions(dm: &DiscreteModel, g: &Generator, e: &Estimator, theta: f64) -> Result<DecompositionResiduals> {
    g.domain().check(&[theta])?;
    let first = dm.exact_expectation(theta, |x| {
        let d = e.estimate(x)?;
        Ok(vec![
            bregman_div(g, &[theta], &[d])?,
            bregman_div(g, &[d], &[theta])?,
            g.gradient1(d)?,
            d,
        ])
    })?;
    let (risk_left, risk_right, dual_mean, mean) = (first[0], first[1], first[2], first[3]);
    let center_left = g.invert_gradient1(dual_mean)?;
    g.domain().check(&[mean])?;
    let second = dm.exact_expectation(theta, |x| {
        let d = e.estimate(x)?;
        Ok(vec![bregman_div(g, &[center_left], &[d])?, bregman_div(g, &[d], &[mean])?])
    })?;
    let left = ExactDecomposition {
        risk: risk_left,
        bias_term: bregman_div(g, &[theta], &[center_left])?,
        variance_term: second[0],
        center: center_left,
    };
    let right = ExactDecomposition {
        risk: risk_right,
        bias_term: bregman_div(g, &[mean], &[theta])?,
        variance_term: second[1],
        center: mean,
    };
    let max_residual = left.residual().abs().max(right.residual().abs());
    Ok(DecompositionResiduals {
        generator: g.id().to_string(),
        estimator: e.id().to_string(),
        theta,
        left,
        right,
        max_residual,
        pass: max_residual <= RESIDUAL_TOL,
    })
}

/// Scales a positive statistic `s` by the constant `c(θ₀)` that makes
/// `E_{θ₀}[∇φ(c·s)] = ∇φ(θ₀)`: an estimator that is type-I unbiased at the
/// single parameter value θ₀.
pub fn calibrate_type1(dm: &DiscreteModel, g: &Generator, s: &Estimator, theta0: f64) -> Result<Estimator> {
    let target = g.gradient1(theta0)?;
    let dual_mean = |c: f64| dm.expect(theta0, |x| g.gradient1(c * s.estimate(x)?));
    // surface evaluation errors instead of letting the root search see NaN
    dual_mean(1.0)?;
    let c = invert_monotone(
        |c| dual_mean(c).unwrap_or(f64::NAN),
        |_| f64::NAN,
        target,
        Constraint::StrictlyPositive,
    )?;
    let base = s.clone();
    Ok(Estimator::new(
        format!("calibrated({})", s.id()),
        s.requires_min_n(),
        move |x| Ok(c * base.estimate(x)?),
    ))
}

/// The fixed battery: three supports, four generators, three estimators,
/// three θ values.
pub mod battery {
    use super::*;
    use nalgebra::DMatrix;

    pub fn models() -> Vec<DiscreteModel> {
        vec![
            DiscreteModel::new(vec![1.0, 2.0, 3.0], 4).unwrap(),
            DiscreteModel::new(vec![0.5, 1.5, 2.5, 4.0], 5).unwrap(),
            DiscreteModel::new(vec![0.5, 1.0, 2.0, 3.0, 5.0, 8.0], 6).unwrap(),
        ]
    }

    pub fn generators() -> Vec<Arc<Generator>> {
        vec![
            Arc::new(Generator::squared_euclidean(1)),
            Arc::new(Generator::mahalanobis(DMatrix::from_element(1, 1, 2.0)).unwrap()),
            Arc::new(Generator::neg_entropy(1)),
            Arc::new(Generator::neg_log(1)),
        ]
    }

    /// `X₁`, `(2X₁ + X₂)/3` and `max Xᵢ` (the last is permutation-invariant).
    pub fn estimators() -> Vec<Estimator> {
        vec![
            Estimator::first_observation(),
            Estimator::new("weighted", 2, |x| Ok((2.0 * x[0] + x[1]) / 3.0)),
            Estimator::new("max", 1, |x| Ok(x.iter().copied().fold(f64::NEG_INFINITY, f64::max))),
        ]
    }

    pub fn thetas() -> Vec<f64> {
        vec![0.5, 1.0, 2.0]
    }
}
