//! Projections that keep predictions inside the nonnegative orthant `H₊`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{AmbientVector, SpherePoint};
use crate::scalar::Real;
use crate::skew::{Rotation, SkewOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// Rotate only as far as the boundary of `H₊`.
    Proj1,
    /// Nearest point of `H₊`, renormalized.
    Proj2,
    None,
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Projection::Proj1 => "proj1",
            Projection::Proj2 => "proj2",
            Projection::None => "none",
        })
    }
}

impl FromStr for Projection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proj1" => Ok(Projection::Proj1),
            "proj2" => Ok(Projection::Proj2),
            "none" => Ok(Projection::None),
            other => Err(Error::InvalidArgument(format!("unknown projection {other:?}"))),
        }
    }
}

const ORTHANT_SLACK: f64 = 1e-12;
const SCAN_STEPS: usize = 64;
const BISECTION_WIDTH: f64 = 1e-12;

fn min_component<T: Real>(x: &AmbientVector<T>) -> (usize, T) {
    x.values()
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::infinity()), |best, (i, v)| if v < best.1 { (i, v) } else { best })
}

fn in_orthant<T: Real>(x: &AmbientVector<T>) -> bool {
    min_component(x).1 >= -T::c(ORTHANT_SLACK)
}

/// `exp(c₁ L) x` with `c₁ = sup{c ∈ [0,1] : exp(cL) x ∈ H₊}`.
///
/// The feasible set is sampled on a grid of 64 steps from `c = 1`
/// downwards; the crossing after the largest feasible grid point is then
/// located by bisection. Returns the point and `c₁`.
pub fn project1<T: Real>(x: &SpherePoint<T>, op: &SkewOperator<T>) -> Result<(SpherePoint<T>, T)> {
    let (index, value) = min_component(x);
    if value < -T::c(ORTHANT_SLACK) {
        return Err(Error::NotInOrthant {
            index,
            value: value.f64(),
        });
    }
    op.apply(x)?;
    let rotation = Rotation::new(op);
    let at = |c: T| rotation.apply(c, x);
    let full = at(T::one());
    if in_orthant(&full) {
        return Ok((SpherePoint::normalize(full)?, T::one()));
    }
    let step = T::one() / T::c(SCAN_STEPS as f64);
    let mut lo = T::zero();
    for i in (0..SCAN_STEPS).rev() {
        let c = T::c(i as f64) * step;
        if in_orthant(&at(c)) {
            lo = c;
            break;
        }
    }
    let mut hi = lo + step;
    let width = T::c(BISECTION_WIDTH).max(T::c(4.0) * T::epsilon());
    while hi - lo > width {
        let mid = (lo + hi) * T::c(0.5);
        if in_orthant(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((SpherePoint::normalize(at(lo))?, lo))
}

/// Nearest point of `H₊` (componentwise clipping at zero), renormalized
/// onto the sphere.
pub fn project2<T: Real>(x_rot: &AmbientVector<T>) -> Result<SpherePoint<T>> {
    let clipped: Vec<T> = x_rot.values().iter().map(|&v| v.max(T::zero())).collect();
    if clipped.iter().all(|&v| v == T::zero()) {
        return Err(Error::ProjectionDegenerate);
    }
    SpherePoint::normalize(x_rot.sibling(clipped)?)
}
