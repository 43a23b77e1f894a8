use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{frechet_mean, SpherePoint};
use crate::scalar::Real;
use crate::skew::{spherical_log, SkewOperator};

/// Which differences the autoregression runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `R_t = x_t ⊖ μ_x`, rotations away from the Frechet mean.
    Sar,
    /// `R_t = x_{t+1} ⊖ x_t`, rotations between consecutive observations.
    Dsar,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Sar => "sar",
            Variant::Dsar => "dsar",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sar" => Ok(Variant::Sar),
            "dsar" => Ok(Variant::Dsar),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

/// Operator-valued series derived from sphere observations.
#[derive(Debug, Clone)]
pub struct DifferencedSeries<T> {
    pub variant: Variant,
    /// `R_t`; `n` entries for SAR, `n − 1` for DSAR.
    pub operators: Vec<SkewOperator<T>>,
    /// Frechet mean for SAR; the first observation for DSAR.
    pub base: SpherePoint<T>,
    pub last_observation: SpherePoint<T>,
    pub observations: Vec<SpherePoint<T>>,
}

pub fn build_differenced_series<T: Real>(points: &[SpherePoint<T>], variant: Variant) -> Result<DifferencedSeries<T>> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 observations, got {}",
            points.len()
        )));
    }
    for p in &points[1..] {
        points[0].same_space(p)?;
    }
    let (base, operators) = match variant {
        Variant::Sar => {
            let mean = frechet_mean(points)?;
            let ops = points
                .iter()
                .enumerate()
                .map(|(index, x)| {
                    spherical_log(&mean, x).map_err(|e| match e {
                        Error::LogUndefinedAtAntipode => Error::AntipodalToMean { index },
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (mean, ops)
        }
        Variant::Dsar => {
            let ops = points
                .windows(2)
                .enumerate()
                .map(|(index, w)| {
                    spherical_log(&w[0], &w[1]).map_err(|e| match e {
                        Error::LogUndefinedAtAntipode => Error::AntipodalPair { index },
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (points[0].clone(), ops)
        }
    };
    Ok(DifferencedSeries {
        variant,
        operators,
        base,
        last_observation: points[points.len() - 1].clone(),
        observations: points.to_vec(),
    })
}
