//! Weighted inner-product spaces and the unit sphere inside them.
//!
//! A vector carries its quadrature weights, so the same code handles plain
//! `R^d` (all weights one) and square-root densities sampled on a grid
//! (weights equal to cell areas, making the inner product a Riemann sum).

use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Element of a weighted inner-product space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "AmbientRepr<T>", into = "AmbientRepr<T>")]
#[serde(bound = "T: Real")]
pub struct AmbientVector<T> {
    values: Vec<T>,
    weights: Arc<[T]>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct AmbientRepr<T> {
    values: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> TryFrom<AmbientRepr<T>> for AmbientVector<T> {
    type Error = Error;
    fn try_from(r: AmbientRepr<T>) -> Result<Self> {
        AmbientVector::new(r.values, r.weights)
    }
}

impl<T: Real> From<AmbientVector<T>> for AmbientRepr<T> {
    fn from(v: AmbientVector<T>) -> Self {
        AmbientRepr {
            weights: v.weights.to_vec(),
            values: v.values,
        }
    }
}

/// Checks that `weights` are usable quadrature weights.
pub fn validate_weights<T: Real>(weights: &[T]) -> Result<()> {
    if weights.len() < 2 {
        return Err(Error::InvalidWeights(format!(
            "dimension must be at least 2, got {}",
            weights.len()
        )));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > T::zero()) || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("weight {i} is {w}, must be positive")));
    }
    Ok(())
}

impl<T: Real> AmbientVector<T> {
    pub fn new(values: Vec<T>, weights: Vec<T>) -> Result<Self> {
        validate_weights(&weights)?;
        Self::with_weights(values, weights.into())
    }

    /// Builds a vector sharing an already validated weight array.
    pub fn with_weights(values: Vec<T>, weights: Arc<[T]>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: weights.len(),
            });
        }
        validate_weights(&weights)?;
        Ok(Self { values, weights })
    }

    /// Vector in plain `R^d` (unit weights).
    pub fn euclidean(values: Vec<T>) -> Result<Self> {
        let weights = vec![T::one(); values.len()];
        Self::new(values, weights)
    }

    pub fn zeros(weights: Arc<[T]>) -> Self {
        Self {
            values: vec![T::zero(); weights.len()],
            weights,
        }
    }

    /// Zero vector in the same space as `self`.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.weights.clone())
    }

    /// Vector in the same space as `self` with the given values.
    pub fn sibling(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: self.dim(),
            });
        }
        Ok(Self {
            values,
            weights: self.weights.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weights_arc(&self) -> &Arc<[T]> {
        &self.weights
    }

    /// Errors unless `other` lives in the same weighted space.
    pub fn same_space(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        if Arc::ptr_eq(&self.weights, &other.weights) || self.weights[..] == other.weights[..] {
            Ok(())
        } else {
            Err(Error::WeightMismatch)
        }
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        self.same_space(other)?;
        Ok(self.dot(other))
    }

    /// Weighted inner product without the space check.
    #[inline]
    pub(crate) fn dot(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.weights.iter())
            .map(|((&a, &b), &w)| w * a * b)
            .sum()
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// `self += a * x`
    #[inline]
    pub(crate) fn axpy(&mut self, a: T, x: &Self) {
        for (s, &v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| a * v).collect(),
            weights: self.weights.clone(),
        }
    }

    /// `a * self + b * other`
    pub(crate) fn combine(&self, a: T, other: &Self, b: T) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(self.combine(T::one(), other, -T::one()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(self.combine(T::one(), other, T::one()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Weighted inner product `sum_i w_i x_i y_i`.
pub fn inner<T: Real>(x: &AmbientVector<T>, y: &AmbientVector<T>) -> Result<T> {
    x.inner(y)
}

/// Unit-norm element of a weighted inner-product space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "AmbientVector<T>", into = "AmbientVector<T>")]
#[serde(bound = "T: Real")]
pub struct SpherePoint<T> {
    vector: AmbientVector<T>,
}

impl<T: Real> TryFrom<AmbientVector<T>> for SpherePoint<T> {
    type Error = Error;
    fn try_from(v: AmbientVector<T>) -> Result<Self> {
        SpherePoint::new(v)
    }
}

impl<T: Real> From<SpherePoint<T>> for AmbientVector<T> {
    fn from(p: SpherePoint<T>) -> Self {
        p.vector
    }
}

impl<T> Deref for SpherePoint<T> {
    type Target = AmbientVector<T>;
    fn deref(&self) -> &AmbientVector<T> {
        &self.vector
    }
}

impl<T: Real> SpherePoint<T> {
    /// Wraps a vector whose norm is already one (within tolerance) and
    /// rescales away the residual roundoff.
    pub fn new(vector: AmbientVector<T>) -> Result<Self> {
        let norm = vector.norm();
        if (norm - T::one()).abs() > T::unit_tol() {
            return Err(Error::NotUnitNorm { norm: norm.f64() });
        }
        Ok(Self {
            vector: vector.scaled(T::one() / norm),
        })
    }

    /// Projects a nonzero vector radially onto the sphere.
    pub fn normalize(vector: AmbientVector<T>) -> Result<Self> {
        let norm = vector.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NotUnitNorm { norm: norm.f64() });
        }
        Ok(Self {
            vector: vector.scaled(T::one() / norm),
        })
    }

    /// Normalized point in `R^d`.
    pub fn euclidean(values: Vec<T>) -> Result<Self> {
        Self::normalize(AmbientVector::euclidean(values)?)
    }

    pub fn vector(&self) -> &AmbientVector<T> {
        &self.vector
    }

    pub fn into_vector(self) -> AmbientVector<T> {
        self.vector
    }

    pub fn is_antipodal_to(&self, other: &Self) -> bool {
        matches!(relate(self, other), Relation::Antipodal)
    }
}

/// Position of `x2` relative to `x1`: `x2 = cos * x1 + residual`.
pub(crate) struct PlaneFrame<T> {
    pub cos: T,
    pub sin: T,
    pub residual: AmbientVector<T>,
}

impl<T: Real> PlaneFrame<T> {
    pub fn new(x1: &AmbientVector<T>, x2: &AmbientVector<T>) -> Self {
        let cos = x1.dot(x2);
        let residual = x2.combine(T::one(), x1, -cos);
        let sin = residual.norm();
        Self { cos, sin, residual }
    }

    pub fn angle(&self) -> T {
        self.sin.atan2(self.cos)
    }
}

pub(crate) enum Relation<T> {
    Identical,
    Antipodal,
    Generic(PlaneFrame<T>),
}

pub(crate) fn relate<T: Real>(x1: &AmbientVector<T>, x2: &AmbientVector<T>) -> Relation<T> {
    let frame = PlaneFrame::new(x1, x2);
    if frame.sin <= T::snap() {
        if frame.cos > T::zero() {
            Relation::Identical
        } else {
            Relation::Antipodal
        }
    } else {
        Relation::Generic(frame)
    }
}

/// Great-circle distance in radians, in `[0, pi]`.
///
/// Computed as `atan2(|x2 - <x1,x2> x1|, <x1,x2>)`, which equals
/// `arccos(<x1,x2>)` on the sphere but keeps full precision near 0 and pi.
pub fn geodesic_distance<T: Real>(x1: &SpherePoint<T>, x2: &SpherePoint<T>) -> Result<T> {
    x1.same_space(x2)?;
    if x1.values() == x2.values() {
        return Ok(T::zero());
    }
    Ok(PlaneFrame::new(x1, x2).angle())
}

/// Point `gamma(a)` on the minimizing geodesic with `gamma(0) = x1`, `gamma(1) = x2`.
pub fn geodesic_point<T: Real>(x1: &SpherePoint<T>, x2: &SpherePoint<T>, a: T) -> Result<SpherePoint<T>> {
    x1.same_space(x2)?;
    if !(a >= T::zero() && a <= T::one()) {
        return Err(Error::InvalidArgument(format!("geodesic parameter {a} outside [0, 1]")));
    }
    match relate(x1, x2) {
        Relation::Identical => Ok(x1.clone()),
        Relation::Antipodal => Err(Error::GeodesicUndefined),
        Relation::Generic(frame) => {
            let t = a * frame.angle();
            let v = x1.combine(t.cos(), &frame.residual, t.sin() / frame.sin);
            SpherePoint::normalize(v)
        }
    }
}

/// Riemannian log map: the tangent vector at `base` pointing to `x` with length `d(base, x)`.
pub fn log_map<T: Real>(base: &SpherePoint<T>, x: &SpherePoint<T>) -> Result<AmbientVector<T>> {
    base.same_space(x)?;
    match relate(base, x) {
        Relation::Identical => Ok(base.zeros_like()),
        Relation::Antipodal => Err(Error::GeodesicUndefined),
        Relation::Generic(frame) => {
            let theta = frame.angle();
            Ok(frame.residual.scaled(theta / frame.sin))
        }
    }
}

/// Riemannian exp map of a tangent vector at `base`.
pub fn exp_map<T: Real>(base: &SpherePoint<T>, tangent: &AmbientVector<T>) -> Result<SpherePoint<T>> {
    base.same_space(tangent)?;
    let t = tangent.norm();
    if t == T::zero() {
        return Ok(base.clone());
    }
    SpherePoint::normalize(base.combine(t.cos(), tangent, t.sin() / t))
}

const KARCHER_MAX_ITER: usize = 200;

/// Sample Frechet (Karcher) mean by intrinsic gradient descent.
///
/// Starts from the normalized chordal average (or the first point when
/// that average nearly vanishes), steps along the mean log map with unit
/// step size, and halves the step whenever the objective increases by
/// more than its rounding noise.
pub fn frechet_mean<T: Real>(points: &[SpherePoint<T>]) -> Result<SpherePoint<T>> {
    let first = points.first().ok_or(Error::EmptyInput("Frechet mean of no points"))?;
    for p in &points[1..] {
        first.same_space(p)?;
    }
    if points.len() == 1 {
        return Ok(first.clone());
    }

    let n = T::c(points.len() as f64);
    let mut chordal = first.zeros_like();
    for p in points {
        chordal.axpy(T::one() / n, p);
    }
    let mut z = if chordal.norm() < T::c(1e-8) {
        first.clone()
    } else {
        SpherePoint::normalize(chordal)?
    };

    let objective = |z: &SpherePoint<T>| -> T {
        points
            .iter()
            .map(|p| {
                let d = PlaneFrame::new(z, p).angle();
                d * d
            })
            .sum::<T>()
            / n
    };
    let mean_log = |z: &SpherePoint<T>| -> Result<AmbientVector<T>> {
        let mut g = z.zeros_like();
        for p in points {
            g.axpy(T::one() / n, &log_map(z, p)?);
        }
        Ok(g)
    };

    let mut f = objective(&z);
    let mut step = T::one();
    let mut grad = mean_log(&z)?;
    for _ in 0..KARCHER_MAX_ITER {
        let g = grad.norm();
        if g <= T::grad_tol() {
            return Ok(z);
        }
        let candidate = exp_map(&z, &grad.scaled(step))?;
        let f_new = objective(&candidate);
        // Below the rounding noise of the objective a comparison says nothing.
        let noise = T::c(1e3) * T::epsilon() * f.abs();
        if step * g * g > noise && f_new > f + noise {
            step *= T::c(0.5);
            continue;
        }
        z = candidate;
        f = f_new;
        grad = mean_log(&z)?;
    }
    let gradient_norm = grad.norm();
    if gradient_norm <= T::grad_tol() {
        return Ok(z);
    }
    Err(Error::NoConvergence {
        iterations: KARCHER_MAX_ITER,
        gradient_norm: gradient_norm.f64(),
    })
}

/// Norm of the Riemannian gradient of `z -> (1/2n) sum d^2(z, x_i)`.
pub fn frechet_gradient_norm<T: Real>(z: &SpherePoint<T>, points: &[SpherePoint<T>]) -> Result<T> {
    let n = T::c(points.len() as f64);
    let mut g = z.zeros_like();
    for p in points {
        g.axpy(T::one() / n, &log_map(z, p)?);
    }
    Ok(g.norm())
}
