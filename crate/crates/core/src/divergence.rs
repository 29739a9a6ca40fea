//! Bregman divergences, the primal/dual transport identity, Bregman means and
//! the two bias–variance decompositions of an expected divergence over a
//! finite weighted sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{dot, Generator};

/// Which argument of `D_φ` the random quantity occupies.
///
/// `Left` is the loss `D_φ(θ, δ)` (estimand first), `Right` is `D_φ(δ, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Left,
    Right,
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Orientation::Left),
            "right" => Ok(Orientation::Right),
            _ => Err(Error::parse("orientation", format!("expected left or right, got `{s}`"))),
        }
    }
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Orientation::Left => "left",
            Orientation::Right => "right",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub orientation: Orientation,
    pub total: f64,
    pub bias_term: f64,
    pub variance_term: f64,
    /// The Bregman mean `x*` for `Left`, the arithmetic mean for `Right`.
    pub center: Vec<f64>,
}

impl DecompositionReport {
    pub fn residual(&self) -> f64 {
        self.total - self.bias_term - self.variance_term
    }
}

/// Rounding slack below zero that is reported as an exact zero. Scaled by the
/// magnitude of the terms being cancelled.
const NEGATIVE_SLACK: f64 = 1e-12;

fn clamp_nonnegative(d: f64, scale: f64) -> Result<f64> {
    if d >= 0.0 {
        Ok(d)
    } else if d >= -NEGATIVE_SLACK * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::Numeric(format!("divergence evaluated to {d} < 0")))
    }
}

/// `D_φ(x, y) = φ(x) − φ(y) − ⟨∇φ(y), x − y⟩`.
pub fn bregman_div(g: &Generator, x: &[f64], y: &[f64]) -> Result<f64> {
    let fx = g.value(x)?;
    let fy = g.value(y)?;
    let grad = g.gradient(y)?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let lin = dot(&grad, &diff);
    clamp_nonnegative(fx - fy - lin, fx.abs() + fy.abs() + lin.abs())
}

/// `D_{φ*}(u, v)` between two dual points, using `∇φ* = (∇φ)⁻¹`.
pub fn dual_div(g: &Generator, u: &[f64], v: &[f64]) -> Result<f64> {
    let fu = g.conjugate_value(u)?;
    let fv = g.conjugate_value(v)?;
    let grad = g.invert_gradient(v)?;
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let lin = dot(&grad, &diff);
    clamp_nonnegative(fu - fv - lin, fu.abs() + fv.abs() + lin.abs())
}

/// `D_{φ*}(∇φ(y), ∇φ(x))`, which equals `D_φ(x, y)`.
pub fn dual_transport(g: &Generator, x: &[f64], y: &[f64]) -> Result<f64> {
    let gx = g.gradient(x)?;
    let gy = g.gradient(y)?;
    dual_div(g, &gy, &gx)
}

fn check_weights<P: AsRef<[f64]>>(points: &[P], weights: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Config("empty sample".into()));
    }
    if points.len() != weights.len() {
        return Err(Error::Dimension {
            expected: points.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::parse("weights", format!("negative or non-finite weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::parse("weights", format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Uniform weights `1/k`.
pub fn uniform_weights(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

fn weighted_mean<P: AsRef<[f64]>>(points: &[P], weights: &[f64]) -> Vec<f64> {
    let d = points[0].as_ref().len();
    let mut acc = vec![0.0; d];
    for (p, &w) in points.iter().zip(weights) {
        for (a, v) in acc.iter_mut().zip(p.as_ref()) {
            *a += w * v;
        }
    }
    acc
}

/// The minimizer of `Σ wᵢ D_φ(x, xᵢ)`: `(∇φ)⁻¹(Σ wᵢ ∇φ(xᵢ))`.
pub fn bregman_mean<P: AsRef<[f64]>>(g: &Generator, points: &[P], weights: &[f64]) -> Result<Vec<f64>> {
    check_weights(points, weights)?;
    let duals = points
        .iter()
        .map(|p| g.gradient(p.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let avg = weighted_mean(&duals, weights);
    g.invert_gradient(&avg)
}

fn expected_div<P: AsRef<[f64]>>(
    points: &[P],
    weights: &[f64],
    f: impl Fn(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for (p, &w) in points.iter().zip(weights) {
        acc += w * f(p.as_ref())?;
    }
    Ok(acc)
}

/// `E[D_φ(x, X)] = D_φ(x, x*) + E[D_φ(x*, X)]` with `x*` the Bregman mean.
pub fn decompose_left<P: AsRef<[f64]>>(
    g: &Generator,
    x: &[f64],
    points: &[P],
    weights: &[f64],
) -> Result<DecompositionReport> {
    g.domain().check(x)?;
    let center = bregman_mean(g, points, weights)?;
    let total = expected_div(points, weights, |p| bregman_div(g, x, p))?;
    let variance_term = expected_div(points, weights, |p| bregman_div(g, &center, p))?;
    let bias_term = bregman_div(g, x, &center)?;
    Ok(DecompositionReport {
        orientation: Orientation::Left,
        total,
        bias_term,
        variance_term,
        center,
    })
}

/// `E[D_φ(X, y)] = D_φ(E[X], y) + E[D_φ(X, E[X])]`.
pub fn decompose_right<P: AsRef<[f64]>>(
    g: &Generator,
    y: &[f64],
    points: &[P],
    weights: &[f64],
) -> Result<DecompositionReport> {
    check_weights(points, weights)?;
    g.domain().check(y)?;
    let center = weighted_mean(points, weights);
    let total = expected_div(points, weights, |p| bregman_div(g, p, y))?;
    let variance_term = expected_div(points, weights, |p| bregman_div(g, p, &center))?;
    let bias_term = bregman_div(g, &center, y)?;
    Ok(DecompositionReport {
        orientation: Orientation::Right,
        total,
        bias_term,
        variance_term,
        center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn divergence_examples() {
        let sq = Generator::squared_euclidean(2);
        assert_eq!(bregman_div(&sq, &[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(bregman_div(&sq, &[1.5, 2.0], &[1.5, 2.0]).unwrap(), 0.0);

        let nl = Generator::neg_log(1);
        let d = bregman_div(&nl, &[2.0], &[1.0]).unwrap();
        assert!((d - (2.0 - 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((d - 0.306853).abs() < 1e-6);

        let ne = Generator::neg_entropy(1);
        let d = bregman_div(&ne, &[1.0], &[E]).unwrap();
        // 1·log(1/e) − 1 + e = e − 2
        assert!((d - (E - 2.0)).abs() < 1e-15);
        assert!((d - 0.718282).abs() < 1e-6);
    }

    #[test]
    fn transport_examples() {
        let sq = Generator::squared_euclidean(2);
        assert!((dual_transport(&sq, &[1.0, 0.0], &[0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        let nl = Generator::neg_log(1);
        assert_eq!(dual_transport(&nl, &[2.0], &[2.0]).unwrap(), 0.0);
        let d = dual_transport(&nl, &[2.0], &[1.0]).unwrap();
        assert!((d - bregman_div(&nl, &[2.0], &[1.0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn means() {
        let w = uniform_weights(2);
        let sq = Generator::squared_euclidean(1);
        assert_eq!(bregman_mean(&sq, &pts(&[1.0, 3.0]), &w).unwrap(), vec![2.0]);
        let nl = Generator::neg_log(1);
        assert!((bregman_mean(&nl, &pts(&[1.0, 3.0]), &w).unwrap()[0] - 1.5).abs() < 1e-15);
        let ne = Generator::neg_entropy(1);
        assert!((bregman_mean(&ne, &pts(&[1.0, 4.0]), &w).unwrap()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn weight_validation() {
        let sq = Generator::squared_euclidean(1);
        let p = pts(&[1.0, 3.0]);
        assert!(bregman_mean(&sq, &p, &[0.5, 0.6]).is_err());
        assert!(bregman_mean(&sq, &p, &[1.5, -0.5]).is_err());
        assert!(bregman_mean(&sq, &p, &[1.0]).is_err());
        assert!(bregman_mean::<Vec<f64>>(&sq, &[], &[]).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let sq = Generator::squared_euclidean(1);
        let w = uniform_weights(2);
        let p = pts(&[-1.0, 1.0]);

        let point_mass = decompose_left(&sq, &[3.0], &pts(&[3.0]), &[1.0]).unwrap();
        assert_eq!(
            (point_mass.total, point_mass.bias_term, point_mass.variance_term),
            (0.0, 0.0, 0.0)
        );
        let point_mass = decompose_right(&sq, &[3.0], &pts(&[3.0]), &[1.0]).unwrap();
        assert_eq!(
            (point_mass.total, point_mass.bias_term, point_mass.variance_term),
            (0.0, 0.0, 0.0)
        );

        // E[½(0 − X)²] with X = ±1 is ½, all of it variance
        let left = decompose_left(&sq, &[0.0], &p, &w).unwrap();
        assert_eq!((left.total, left.bias_term, left.variance_term), (0.5, 0.0, 0.5));
        let right = decompose_right(&sq, &[0.0], &p, &w).unwrap();
        assert_eq!((right.total, right.bias_term, right.variance_term), (0.5, 0.0, 0.5));

        let nl = Generator::neg_log(1);
        let left = decompose_left(&nl, &[1.5], &pts(&[1.0, 3.0]), &w).unwrap();
        assert!(left.bias_term.abs() < 1e-15);
        assert!((left.center[0] - 1.5).abs() < 1e-15);
        assert!(left.residual().abs() < 1e-12);

        let ne = Generator::neg_entropy(1);
        let p = pts(&[0.5, 2.0, 4.5]);
        let w3 = [0.2, 0.3, 0.5];
        let mean = 0.2 * 0.5 + 0.3 * 2.0 + 0.5 * 4.5;
        let right = decompose_right(&ne, &[mean], &p, &w3).unwrap();
        assert!(right.bias_term < 1e-15);
        assert!(right.residual().abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let nl = Generator::neg_log(1);
        assert!(matches!(bregman_div(&nl, &[2.0], &[-1.0]), Err(Error::Domain { .. })));
        assert!(matches!(bregman_div(&nl, &[0.0], &[1.0]), Err(Error::Domain { .. })));
        assert!(decompose_left(&nl, &[-1.0], &pts(&[1.0]), &[1.0]).is_err());
        assert!(decompose_right(&nl, &[1.0], &pts(&[1.0, -2.0]), &uniform_weights(2)).is_err());
    }

    #[test]
    fn orientation_parse() {
        assert_eq!("left".parse::<Orientation>().unwrap(), Orientation::Left);
        assert_eq!(Orientation::Right.to_string(), "right");
        assert!("up".parse::<Orientation>().is_err());
    }
}
