//! Square-root maps from compositions and densities onto the sphere, kernel
//! density estimation on rectangular grids, and the Fisher-Rao distance.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{geodesic_distance, AmbientVector, SpherePoint};
use crate::scalar::Real;

/// Components below `-NEG_SLACK` are rejected rather than clamped.
const NEG_SLACK: f64 = 1e-9;
/// Allowed deviation of `∫ f` from one for a density grid.
const MASS_TOL: f64 = 1e-6;
/// Default histogram resolution per axis.
pub const DEFAULT_CELLS: usize = 50;
/// Kernels are truncated at this many standard deviations.
const KERNEL_RADIUS: f64 = 4.0;

/// Nonnegative parts summing to `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Composition<T> {
    parts: Vec<T>,
    kappa: T,
}

impl<T: Real> Composition<T> {
    /// Validates nonnegativity and `Σ parts = kappa`.
    pub fn new(parts: Vec<T>, kappa: T) -> Result<Self> {
        Self::check_parts(&parts, kappa)?;
        let sum: T = parts.iter().copied().sum();
        let tol = T::unit_tol() * kappa.max(T::one());
        if (sum - kappa).abs() > tol {
            return Err(Error::InvalidArgument(format!("parts sum to {sum}, expected {kappa}")));
        }
        Ok(Self { parts, kappa })
    }

    /// Rescales nonnegative parts so that they sum to `kappa`.
    pub fn normalized(parts: Vec<T>, kappa: T) -> Result<Self> {
        Self::check_parts(&parts, kappa)?;
        let sum: T = parts.iter().copied().sum();
        if !(sum > T::zero()) {
            return Err(Error::InvalidArgument("parts sum to zero".into()));
        }
        let scale = kappa / sum;
        Ok(Self {
            parts: parts.into_iter().map(|z| z * scale).collect(),
            kappa,
        })
    }

    fn check_parts(parts: &[T], kappa: T) -> Result<()> {
        if parts.len() < 2 {
            return Err(Error::InvalidArgument("a composition needs at least two parts".into()));
        }
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
        }
        for (index, &z) in parts.iter().enumerate() {
            if !z.is_finite() || z < T::zero() {
                return Err(Error::NegativeValue { index, value: z.f64() });
            }
        }
        Ok(())
    }

    pub fn parts(&self) -> &[T] {
        &self.parts
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.parts.len()
    }
}

/// `z ↦ (√(z₁/κ), …, √(z_d/κ))`.
pub fn psr<T: Real>(c: &Composition<T>) -> Result<SpherePoint<T>> {
    let values = c.parts.iter().map(|&z| (z / c.kappa).sqrt()).collect();
    SpherePoint::new(AmbientVector::euclidean(values)?)
}

/// Squares the components of `x` and scales by `kappa`.
pub fn psr_inverse<T: Real>(x: &SpherePoint<T>, kappa: T) -> Result<Composition<T>> {
    let parts = squared_nonnegative(x.values())?;
    Composition::normalized(parts.into_iter().map(|s| s * kappa).collect(), kappa)
}

fn squared_nonnegative<T: Real>(values: &[T]) -> Result<Vec<T>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            if v < -T::c(NEG_SLACK) {
                Err(Error::NegativeValue { index, value: v.f64() })
            } else {
                let v = v.max(T::zero());
                Ok(v * v)
            }
        })
        .collect()
}

/// Position of a three-part composition in the equilateral ternary diagram
/// with vertices `(0,0)`, `(1,0)` and `(1/2, √3/2)`.
pub fn ternary<T: Real>(c: &Composition<T>) -> Result<(T, T)> {
    if c.dim() != 3 {
        return Err(Error::DimensionMismatch { left: c.dim(), right: 3 });
    }
    let [a, b, z] = [c.parts[0], c.parts[1], c.parts[2]];
    let sum = a + b + z;
    let half = T::c(0.5);
    Ok(((b + half * z) / sum, T::c(0.75).sqrt() * z / sum))
}

/// Longitude and latitude in radians of a point on S².
pub fn lon_lat<T: Real>(x: &SpherePoint<T>) -> Result<(T, T)> {
    let v = x.values();
    if v.len() != 3 {
        return Err(Error::DimensionMismatch { left: v.len(), right: 3 });
    }
    let lat = v[2].max(-T::one()).min(T::one()).asin();
    Ok((v[1].atan2(v[0]), lat))
}

/// One axis of a rectangular grid: `cells` equal-width cells covering `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Axis<T> {
    pub min: T,
    pub max: T,
    pub cells: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(min: T, max: T, cells: usize) -> Result<Self> {
        let axis = Self { min, max, cells };
        axis.validate()?;
        Ok(axis)
    }

    fn validate(&self) -> Result<()> {
        if self.cells == 0 || !self.min.is_finite() || !self.max.is_finite() || !(self.max > self.min) {
            return Err(Error::InvalidArgument(format!(
                "invalid axis [{}, {}] with {} cells",
                self.min, self.max, self.cells
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> T {
        (self.max - self.min) / T::c(self.cells as f64)
    }

    pub fn center(&self, i: usize) -> T {
        self.min + self.width() * (T::c(i as f64) + T::c(0.5))
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }

    /// Cell containing `x`; the right endpoint belongs to the last cell.
    pub fn locate(&self, x: T) -> Option<usize> {
        if !(x >= self.min && x <= self.max) {
            return None;
        }
        let i = ((x - self.min) / self.width()).floor().to_usize().unwrap_or(0);
        Some(i.min(self.cells - 1))
    }
}

impl<T: Real> fmt::Display for Axis<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.cells)
    }
}

/// Grid description parsed from `"AX:min:max:cells[,AX2:min:max:cells]"`.
///
/// The `AX` labels only name the axes; their order defines the row-major
/// layout with the first axis varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub labels: Vec<String>,
    pub axes: Vec<Axis<T>>,
}

impl<T: Real> FromStr for GridSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut labels = Vec::new();
        let mut axes = Vec::new();
        for part in s.split(',') {
            let fields: Vec<&str> = part.trim().split(':').collect();
            let [label, min, max, cells] = fields[..] else {
                return Err(Error::InvalidArgument(format!("axis spec {part:?} is not AX:min:max:cells")));
            };
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad number {v:?} in axis spec {part:?}")))
            };
            let cells = cells
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad cell count in axis spec {part:?}")))?;
            axes.push(Axis::new(T::c(num(min)?), T::c(num(max)?), cells)?);
            labels.push(label.trim().to_string());
        }
        if !(1..=2).contains(&axes.len()) {
            return Err(Error::InvalidArgument(format!("grids need one or two axes, got {}", axes.len())));
        }
        Ok(Self { labels, axes })
    }
}

fn cell_count<T: Real>(axes: &[Axis<T>]) -> usize {
    axes.iter().map(|a| a.cells).product()
}

fn cell_weight<T: Real>(axes: &[Axis<T>]) -> T {
    axes.iter().map(|a| a.width()).fold(T::one(), |acc, w| acc * w)
}

#[derive(Deserialize)]
#[serde(bound = "T: Real")]
struct DensityGridRepr<T> {
    axes: Vec<Axis<T>>,
    values: Vec<T>,
}

/// A probability density discretized on a rectangular grid, stored row-major
/// with the first axis varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "DensityGridRepr<T>")]
pub struct DensityGrid<T> {
    axes: Vec<Axis<T>>,
    values: Vec<T>,
}

impl<T: Real> TryFrom<DensityGridRepr<T>> for DensityGrid<T> {
    type Error = Error;

    fn try_from(repr: DensityGridRepr<T>) -> Result<Self> {
        Self::new(repr.axes, repr.values)
    }
}

impl<T: Real> DensityGrid<T> {
    /// Validates shape, nonnegativity, and unit mass within `1e-6`.
    pub fn new(axes: Vec<Axis<T>>, values: Vec<T>) -> Result<Self> {
        let grid = Self::unchecked_mass(axes, values)?;
        let mass = grid.mass();
        if (mass - T::one()).abs().f64() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("density integrates to {mass}, expected 1")));
        }
        Ok(grid)
    }

    /// Rescales nonnegative values so that they integrate to one.
    pub fn normalized(axes: Vec<Axis<T>>, values: Vec<T>) -> Result<Self> {
        let mut grid = Self::unchecked_mass(axes, values)?;
        let mass = grid.mass();
        if !(mass > T::zero()) {
            return Err(Error::InvalidArgument("density has zero mass".into()));
        }
        for v in &mut grid.values {
            *v /= mass;
        }
        Ok(grid)
    }

    fn unchecked_mass(axes: Vec<Axis<T>>, values: Vec<T>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("grid without axes".into()));
        }
        for axis in &axes {
            axis.validate()?;
        }
        let cells = cell_count(&axes);
        if values.len() != cells {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: cells,
            });
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::NegativeValue { index, value: v.f64() });
            }
        }
        Ok(Self { axes, values })
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Area (length, volume) of a single cell; all cells are equal.
    pub fn cell_weight(&self) -> T {
        cell_weight(&self.axes)
    }

    /// Per-cell quadrature weights.
    pub fn cell_weights(&self) -> Vec<T> {
        vec![self.cell_weight(); self.values.len()]
    }

    /// `Σ f · w`.
    pub fn mass(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.cell_weight()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.axes == other.axes
    }

    /// Value at a multi-index, first axis slowest.
    pub fn at(&self, index: &[usize]) -> T {
        self.values[flat_index(&self.axes, index)]
    }
}

fn flat_index<T: Real>(axes: &[Axis<T>], index: &[usize]) -> usize {
    axes.iter().zip(index).fold(0, |acc, (axis, &i)| acc * axis.cells + i)
}

/// `f ↦ √f` as a point on the sphere of `L²` with cell-area weights.
pub fn fpsr<T: Real>(f: &DensityGrid<T>) -> Result<SpherePoint<T>> {
    let weights: Arc<[T]> = f.cell_weights().into();
    let values = f.values.iter().map(|v| v.sqrt()).collect();
    let g = AmbientVector::with_weights(values, weights)?;
    let norm_sq = g.norm() * g.norm();
    if (norm_sq - T::one()).abs().f64() > MASS_TOL.max(T::UNIT) {
        return Err(Error::NotUnitNorm { norm: g.norm().f64() });
    }
    SpherePoint::normalize(g)
}

/// Squares a point on the weighted sphere back into a density on `axes`,
/// renormalized to unit mass. Components of either sign are squared.
pub fn fpsr_inverse<T: Real>(x: &SpherePoint<T>, axes: &[Axis<T>]) -> Result<DensityGrid<T>> {
    let cells = cell_count(axes);
    if x.dim() != cells {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: cells,
        });
    }
    let w = cell_weight(axes);
    if x.weights().iter().any(|&xi| (xi - w).abs() > T::snap() * w.max(T::one())) {
        return Err(Error::WeightMismatch);
    }
    DensityGrid::normalized(axes.to_vec(), x.values().iter().map(|&v| v * v).collect())
}

/// `arccos ∫ √(f g)`, the geodesic distance between square-root densities.
pub fn fisher_rao_distance<T: Real>(f: &DensityGrid<T>, g: &DensityGrid<T>) -> Result<T> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    geodesic_distance(&fpsr(f)?, &fpsr(g)?)
}

/// Geodesic distance between the square roots of two compositions.
pub fn composition_distance<T: Real>(a: &Composition<T>, b: &Composition<T>) -> Result<T> {
    geodesic_distance(&psr(a)?, &psr(b)?)
}

/// Bounding box of the samples with `cells` cells per axis.
pub fn default_axes<T: Real>(samples: &[Vec<T>], cells: usize) -> Result<Vec<Axis<T>>> {
    let dim = sample_dim(samples)?;
    (0..dim)
        .map(|k| {
            let (lo, hi) = range(samples, k);
            if !(hi > lo) {
                return Err(Error::DegenerateSample(format!("coordinate {} is constant", k + 1)));
            }
            Axis::new(lo, hi, cells)
        })
        .collect()
}

fn sample_dim<T: Real>(samples: &[Vec<T>]) -> Result<usize> {
    let first = samples.first().ok_or(Error::EmptyInput("no samples"))?;
    let dim = first.len();
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidArgument(format!("samples must be 1- or 2-dimensional, got {dim}")));
    }
    for s in samples {
        if s.len() != dim {
            return Err(Error::DimensionMismatch { left: s.len(), right: dim });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample coordinate".into()));
        }
    }
    Ok(dim)
}

fn range<T: Real>(samples: &[Vec<T>], k: usize) -> (T, T) {
    samples.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), s| {
        (lo.min(s[k]), hi.max(s[k]))
    })
}

/// Smoothed-histogram density estimate on `axes`.
///
/// Samples are binned on the grid, then smoothed along each axis in turn by
/// a Gaussian kernel truncated at four standard deviations. The standard
/// deviation on each axis is `bandwidth_scale · (max − min) / 5` of the
/// sample coordinates. Near the boundary each cell is divided by the kernel
/// mass that falls inside the grid, and the result is rescaled to integrate
/// to one. Samples outside the grid are ignored.
pub fn estimate_density<T: Real>(samples: &[Vec<T>], axes: &[Axis<T>], bandwidth_scale: T) -> Result<DensityGrid<T>> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample(format!("{} sample(s); need at least 2", samples.len())));
    }
    let dim = sample_dim(samples)?;
    if axes.len() != dim {
        return Err(Error::DimensionMismatch {
            left: axes.len(),
            right: dim,
        });
    }
    for axis in axes {
        axis.validate()?;
    }
    if !(bandwidth_scale > T::zero()) || !bandwidth_scale.is_finite() {
        return Err(Error::InvalidArgument(format!("bandwidth scale must be positive, got {bandwidth_scale}")));
    }
    if samples.iter().all(|s| s == &samples[0]) {
        return Err(Error::DegenerateSample("all samples are identical".into()));
    }

    let mut counts = vec![T::zero(); cell_count(axes)];
    let mut inside = 0usize;
    let mut index = vec![0usize; dim];
    'samples: for s in samples {
        for (k, axis) in axes.iter().enumerate() {
            match axis.locate(s[k]) {
                Some(i) => index[k] = i,
                None => continue 'samples,
            }
        }
        counts[flat_index(axes, &index)] += T::one();
        inside += 1;
    }
    if inside == 0 {
        return Err(Error::DegenerateSample("no samples fall inside the grid".into()));
    }

    let mut values = counts;
    for (k, axis) in axes.iter().enumerate() {
        let (lo, hi) = range(samples, k);
        let sd = bandwidth_scale * (hi - lo) / T::c(5.0);
        if sd > T::zero() {
            let stride: usize = axes[k + 1..].iter().map(|a| a.cells).product();
            values = smooth_axis(&values, axis.cells, stride, sd / axis.width());
        }
    }
    DensityGrid::normalized(axes.to_vec(), values)
}

/// Boundary-corrected Gaussian smoothing along one axis of a row-major array.
fn smooth_axis<T: Real>(values: &[T], len: usize, stride: usize, sd_cells: T) -> Vec<T> {
    let radius = (T::c(KERNEL_RADIUS) * sd_cells)
        .ceil()
        .to_usize()
        .unwrap_or(usize::MAX)
        .min(len - 1);
    let kernel: Vec<T> = (0..=radius)
        .map(|k| {
            let z = T::c(k as f64) / sd_cells;
            (-T::c(0.5) * z * z).exp()
        })
        .collect();
    let block = len * stride;
    let mut out = vec![T::zero(); values.len()];
    for start in (0..values.len()).step_by(block) {
        for offset in 0..stride {
            let at = |i: usize| start + offset + i * stride;
            for i in 0..len {
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(len - 1);
                let (mut acc, mut mass) = (T::zero(), T::zero());
                for j in lo..=hi {
                    let w = kernel[i.abs_diff(j)];
                    acc += w * values[at(j)];
                    mass += w;
                }
                out[at(i)] = acc / mass;
            }
        }
    }
    out
}
