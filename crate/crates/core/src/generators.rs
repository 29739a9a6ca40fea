//! Bregman generators: strictly convex, differentiable functions `φ` on an open
//! convex domain together with their gradient (mirror map), its inverse, and
//! the convex conjugate.
//!
//! Four generators are built in:
//!
//! | id            | φ(x)                  | ∇φ(x)     | induced divergence        |
//! |---------------|-----------------------|-----------|---------------------------|
//! | `sqeuclid`    | ½‖x‖²                 | x         | half squared Euclidean    |
//! | `mahalanobis` | ½ xᵀAx                | Ax        | Mahalanobis               |
//! | `negentropy`  | Σ (xᵢ log xᵢ − xᵢ)    | log x     | generalized KL            |
//! | `neglog`      | −Σ log xᵢ             | −1/x      | Itakura–Saito             |
//!
//! Every generator except Mahalanobis is coordinate-separable, so the inverse
//! gradient can always be recovered numerically by a scalar root search per
//! coordinate. Closed forms are used when enabled (the default); they can be
//! switched off with [`Generator::with_closed_forms`] to exercise the numeric
//! route.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Constraint applied to every coordinate of a domain. All constraints are open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    AllReals,
    StrictlyPositive,
    OpenInterval { lo: f64, hi: f64 },
}

impl Constraint {
    fn bounds(self) -> (f64, f64) {
        match self {
            Constraint::AllReals => (f64::NEG_INFINITY, f64::INFINITY),
            Constraint::StrictlyPositive => (0.0, f64::INFINITY),
            Constraint::OpenInterval { lo, hi } => (lo, hi),
        }
    }

    pub fn contains(self, v: f64) -> bool {
        let (lo, hi) = self.bounds();
        v.is_finite() && v > lo && v < hi
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::AllReals => write!(f, "(-inf, inf)"),
            Constraint::StrictlyPositive => write!(f, "(0, inf)"),
            Constraint::OpenInterval { lo, hi } => write!(f, "({lo}, {hi})"),
        }
    }
}

/// An open box domain `Ω ⊆ R^d` with the same constraint on every coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    dim: usize,
    constraint: Constraint,
}

impl DomainSpec {
    pub fn new(dim: usize, constraint: Constraint) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("domain dimension must be at least 1".into()));
        }
        if let Constraint::OpenInterval { lo, hi } = constraint {
            if !(lo < hi) {
                return Err(Error::Config(format!(
                    "open interval requires lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(Self { dim, constraint })
    }

    pub fn reals(dim: usize) -> Self {
        Self::new(dim, Constraint::AllReals).expect("dim >= 1")
    }

    pub fn positive(dim: usize) -> Self {
        Self::new(dim, Constraint::StrictlyPositive).expect("dim >= 1")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|&v| self.constraint.contains(v))
    }

    /// Returns the first offending coordinate as a [`Error::Domain`].
    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        match x.iter().position(|&v| !self.constraint.contains(v)) {
            None => Ok(()),
            Some(i) => Err(Error::Domain {
                coordinate: i,
                value: x[i],
                domain: self.constraint.to_string(),
            }),
        }
    }
}

#[derive(Clone)]
enum Kind {
    SquaredEuclidean,
    Mahalanobis {
        a: DMatrix<f64>,
        a_inv: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
    NegEntropy,
    NegLog,
}

/// Max iterations of the safeguarded Newton / bisection inverse.
pub const INVERSE_MAX_ITER: usize = 200;
/// Relative step tolerance of the numeric inverse.
pub const INVERSE_TOL: f64 = 1e-12;

/// A Bregman generator. Immutable once built; every method is a pure function.
#[derive(Clone)]
pub struct Generator {
    id: String,
    domain: DomainSpec,
    kind: Kind,
    closed_forms: bool,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("id", &self.id)
            .field("dim", &self.domain.dim)
            .field("closed_forms", &self.closed_forms)
            .finish()
    }
}

impl Generator {
    /// φ(x) = ½‖x‖² on R^d.
    pub fn squared_euclidean(dim: usize) -> Self {
        Self {
            id: "sqeuclid".into(),
            domain: DomainSpec::reals(dim),
            kind: Kind::SquaredEuclidean,
            closed_forms: true,
        }
    }

    /// φ(x) = ½ xᵀAx on R^d. Fails unless `a` is symmetric positive definite.
    pub fn mahalanobis(a: DMatrix<f64>) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d {
            return Err(Error::Config(format!(
                "Mahalanobis matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("Mahalanobis matrix has non-finite entries".into()));
        }
        let scale = a.amax().max(1.0);
        for i in 0..d {
            for j in (i + 1)..d {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Config(format!(
                        "Mahalanobis matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = Cholesky::new(a.clone()).ok_or_else(|| {
            Error::Config("Mahalanobis matrix is not positive definite".into())
        })?;
        let a_inv = chol.inverse();
        Ok(Self {
            id: "mahalanobis".into(),
            domain: DomainSpec::reals(d),
            kind: Kind::Mahalanobis { a, a_inv, chol },
            closed_forms: true,
        })
    }

    /// φ(x) = Σ (xᵢ log xᵢ − xᵢ) on the positive orthant.
    pub fn neg_entropy(dim: usize) -> Self {
        Self {
            id: "negentropy".into(),
            domain: DomainSpec::positive(dim),
            kind: Kind::NegEntropy,
            closed_forms: true,
        }
    }

    /// φ(x) = −Σ log xᵢ on the positive orthant.
    pub fn neg_log(dim: usize) -> Self {
        Self {
            id: "neglog".into(),
            domain: DomainSpec::positive(dim),
            kind: Kind::NegLog,
            closed_forms: true,
        }
    }

    /// Toggles the registered closed forms for the inverse gradient and the
    /// conjugate. With closed forms off, inversion goes through the numeric
    /// root search (or a Cholesky solve for Mahalanobis) and the conjugate is
    /// evaluated as ⟨y, x⟩ − φ(x) at the recovered x.
    pub fn with_closed_forms(mut self, enabled: bool) -> Self {
        self.closed_forms = enabled;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn closed_forms(&self) -> bool {
        self.closed_forms
    }

    /// The Mahalanobis matrix, if any.
    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            Kind::Mahalanobis { a, .. } => Some(a),
            _ => None,
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.domain.check(x)?;
        Ok(match &self.kind {
            Kind::SquaredEuclidean => 0.5 * dot(x, x),
            Kind::Mahalanobis { a, .. } => {
                let v = DVector::from_column_slice(x);
                0.5 * v.dot(&(a * &v))
            }
            Kind::NegEntropy => x.iter().map(|&v| v * v.ln() - v).sum(),
            Kind::NegLog => -x.iter().map(|&v| v.ln()).sum::<f64>(),
        })
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.domain.check(x)?;
        Ok(match &self.kind {
            Kind::Mahalanobis { a, .. } => {
                let v = DVector::from_column_slice(x);
                (a * v).as_slice().to_vec()
            }
            _ => x.iter().map(|&v| self.scalar_gradient(v)).collect(),
        })
    }

    /// Checks that `y` lies in the (open) range of ∇φ.
    pub fn check_dual(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: y.len(),
            });
        }
        for (i, &v) in y.iter().enumerate() {
            let ok = match self.kind {
                Kind::NegLog => v.is_finite() && v < 0.0,
                _ => v.is_finite(),
            };
            if !ok {
                let range = match self.kind {
                    Kind::NegLog => "(-inf, 0)",
                    _ => "(-inf, inf)",
                };
                return Err(Error::Range {
                    coordinate: i,
                    value: v,
                    range: range.into(),
                });
            }
        }
        Ok(())
    }

    /// (∇φ)⁻¹(y) = ∇φ*(y).
    pub fn invert_gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dual(y)?;
        let x = match &self.kind {
            Kind::Mahalanobis { a_inv, chol, .. } => {
                let v = DVector::from_column_slice(y);
                let x = if self.closed_forms {
                    a_inv * v
                } else {
                    chol.solve(&v)
                };
                x.as_slice().to_vec()
            }
            _ if self.closed_forms => y
                .iter()
                .map(|&v| match self.kind {
                    Kind::SquaredEuclidean => v,
                    Kind::NegEntropy => v.exp(),
                    Kind::NegLog => -1.0 / v,
                    Kind::Mahalanobis { .. } => unreachable!(),
                })
                .collect(),
            _ => y
                .iter()
                .map(|&v| self.invert_scalar_numeric(v))
                .collect::<Result<Vec<_>>>()?,
        };
        // exp/division can overflow or underflow to the boundary for extreme duals
        self.domain.check(&x).map_err(|e| match e {
            Error::Domain {
                coordinate, value, ..
            } => Error::Numeric(format!(
                "inverse gradient left the domain at coordinate {coordinate} (value {value})"
            )),
            other => other,
        })?;
        Ok(x)
    }

    /// φ*(y), via the closed form when enabled, else ⟨y, x⟩ − φ(x) at x = ∇φ*(y).
    pub fn conjugate_value(&self, y: &[f64]) -> Result<f64> {
        if self.closed_forms {
            if let Some(v) = self.conjugate_closed_form(y) {
                return v;
            }
        }
        self.conjugate_generic(y)
    }

    /// φ*(y) = ⟨y, x⟩ − φ(x) with x recovered through [`Self::invert_gradient`].
    pub fn conjugate_generic(&self, y: &[f64]) -> Result<f64> {
        let x = self.invert_gradient(y)?;
        Ok(dot(y, &x) - self.value(&x)?)
    }

    /// The registered closed-form conjugate, when one exists.
    pub fn conjugate_closed_form(&self, y: &[f64]) -> Option<Result<f64>> {
        if let Err(e) = self.check_dual(y) {
            return Some(Err(e));
        }
        Some(Ok(match &self.kind {
            Kind::SquaredEuclidean => 0.5 * dot(y, y),
            Kind::Mahalanobis { a_inv, .. } => {
                let v = DVector::from_column_slice(y);
                0.5 * v.dot(&(a_inv * &v))
            }
            Kind::NegEntropy => y.iter().map(|v| v.exp()).sum(),
            Kind::NegLog => y.iter().map(|&v| -1.0 - (-v).ln()).sum(),
        }))
    }

    /// Scalar convenience wrappers for one-dimensional generators.
    pub fn value1(&self, x: f64) -> Result<f64> {
        self.value(std::slice::from_ref(&x))
    }

    pub fn gradient1(&self, x: f64) -> Result<f64> {
        Ok(self.gradient(std::slice::from_ref(&x))?[0])
    }

    pub fn invert_gradient1(&self, y: f64) -> Result<f64> {
        Ok(self.invert_gradient(std::slice::from_ref(&y))?[0])
    }

    fn scalar_gradient(&self, v: f64) -> f64 {
        match self.kind {
            Kind::SquaredEuclidean => v,
            Kind::NegEntropy => v.ln(),
            Kind::NegLog => -1.0 / v,
            Kind::Mahalanobis { .. } => unreachable!("Mahalanobis is not separable"),
        }
    }

    fn scalar_curvature(&self, v: f64) -> f64 {
        match self.kind {
            Kind::SquaredEuclidean => 1.0,
            Kind::NegEntropy => 1.0 / v,
            Kind::NegLog => 1.0 / (v * v),
            Kind::Mahalanobis { .. } => unreachable!("Mahalanobis is not separable"),
        }
    }

    fn invert_scalar_numeric(&self, y: f64) -> Result<f64> {
        invert_monotone(
            |x| self.scalar_gradient(x),
            |x| self.scalar_curvature(x),
            y,
            self.domain.constraint,
        )
    }
}

/// Solves `f(x) = target` for a strictly increasing `f` on an open interval,
/// with a safeguarded Newton iteration that falls back to bisection whenever
/// the Newton step leaves the current bracket.
pub fn invert_monotone(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    target: f64,
    constraint: Constraint,
) -> Result<f64> {
    let (lo_bound, hi_bound) = constraint.bounds();
    let mut x0 = 1.0;
    if !constraint.contains(x0) {
        x0 = if lo_bound.is_finite() && hi_bound.is_finite() {
            0.5 * (lo_bound + hi_bound)
        } else if lo_bound.is_finite() {
            lo_bound + 1.0
        } else {
            hi_bound - 1.0
        };
    }

    // step toward the boundary: halve the gap to a finite bound, double otherwise
    let toward = |x: f64, bound: f64, step: f64| {
        if bound.is_finite() {
            0.5 * (x + bound)
        } else {
            x + step
        }
    };

    let f0 = f(x0) - target;
    if f0 == 0.0 {
        return Ok(x0);
    }
    let (mut lo, mut hi);
    let mut step = 1.0;
    let mut expansions = 0;
    if f0 < 0.0 {
        lo = x0;
        hi = toward(x0, hi_bound, step);
        while f(hi) - target < 0.0 {
            lo = hi;
            step *= 2.0;
            hi = toward(hi, hi_bound, step);
            expansions += 1;
            if expansions > 4 * INVERSE_MAX_ITER || !hi.is_finite() {
                return Err(Error::Numeric(format!(
                    "could not bracket the inverse of {target}"
                )));
            }
        }
    } else {
        hi = x0;
        lo = toward(x0, lo_bound, -step);
        while f(lo) - target > 0.0 {
            hi = lo;
            step *= 2.0;
            lo = toward(lo, lo_bound, -step);
            expansions += 1;
            if expansions > 4 * INVERSE_MAX_ITER || !lo.is_finite() || !constraint.contains(lo) {
                return Err(Error::Numeric(format!(
                    "could not bracket the inverse of {target}"
                )));
            }
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..INVERSE_MAX_ITER {
        let fx = f(x) - target;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = df(x);
        let newton = x - fx / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= INVERSE_TOL * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        if next == lo || next == hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numeric(format!(
        "inverse of {target} did not converge in {INVERSE_MAX_ITER} iterations"
    )))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reads a Mahalanobis matrix: first line `d`, then `d` rows of `d`
/// whitespace-separated reals.
pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let d: usize = lines
        .next()
        .ok_or_else(|| Error::parse("matrix", "empty matrix file"))?
        .trim()
        .parse()
        .map_err(|e| Error::parse("matrix", format!("bad dimension line: {e}")))?;
    if d == 0 {
        return Err(Error::parse("matrix", "dimension must be at least 1"));
    }
    let mut data = Vec::with_capacity(d * d);
    for row in 0..d {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse("matrix", format!("missing row {row}")))?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse("matrix", format!("row {row}: {e}")))?;
        if vals.len() != d {
            return Err(Error::parse(
                "matrix",
                format!("row {row} has {} entries, expected {d}", vals.len()),
            ));
        }
        data.extend(vals);
    }
    if lines.next().is_some() {
        return Err(Error::parse("matrix", format!("more than {d} rows")));
    }
    Ok(DMatrix::from_row_slice(d, d, &data))
}

/// Named generators, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct GeneratorRegistry {
    entries: BTreeMap<String, Arc<Generator>>,
}

impl GeneratorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `sqeuclid`, `negentropy` and `neglog` in dimension `dim`.
    pub fn with_builtins(dim: usize) -> Self {
        let mut r = Self::new();
        r.register(Generator::squared_euclidean(dim));
        r.register(Generator::neg_entropy(dim));
        r.register(Generator::neg_log(dim));
        r
    }

    pub fn register(&mut self, g: Generator) -> Arc<Generator> {
        let g = Arc::new(g);
        self.entries.insert(g.id.clone(), Arc::clone(&g));
        g
    }

    pub fn get(&self, id: &str) -> Option<Arc<Generator>> {
        self.entries.get(id).cloned()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Parses a generator selection string: `sqeuclid`, `negentropy`, `neglog`,
/// or `mahalanobis:<path-to-matrix-file>`. The separable generators are built
/// in dimension `dim`; Mahalanobis takes its dimension from the matrix.
pub fn parse_generator(spec: &str, dim: usize) -> Result<Generator> {
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix("mahalanobis:") {
        let g = Generator::mahalanobis(read_matrix_file(path)?)?;
        if g.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: g.dim(),
            });
        }
        return Ok(g);
    }
    GeneratorRegistry::with_builtins(dim)
        .get(spec)
        .map(|g| (*g).clone())
        .ok_or_else(|| {
            Error::parse(
                "generator",
                format!("unknown generator `{spec}` (expected sqeuclid, negentropy, neglog, mahalanobis:<path>)"),
            )
        })
}
