use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Root diagnostics of `φ(z) = 1 − α_1 z − … − α_p z^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub stationary: bool,
    /// Smallest modulus among the roots of `φ`; `None` stands for `+∞`
    /// (no finite roots, i.e. all coefficients zero).
    pub min_root_modulus: Option<f64>,
}

impl StationarityReport {
    pub fn min_root_modulus_or_inf(&self) -> f64 {
        self.min_root_modulus.unwrap_or(f64::INFINITY)
    }
}

/// The process is stationary iff every root of `φ` lies outside the unit circle.
///
/// Roots of `φ` are reciprocals of the eigenvalues of the companion matrix
/// of `z^p − α_1 z^{p−1} − … − α_p`, so the smallest root modulus is one
/// over the companion spectral radius.
pub fn check_stationarity(alphas: &[f64]) -> StationarityReport {
    let p = alphas.iter().rposition(|&a| a != 0.0).map_or(0, |i| i + 1);
    if p == 0 {
        return StationarityReport {
            stationary: true,
            min_root_modulus: None,
        };
    }
    let companion = DMatrix::from_fn(p, p, |i, j| {
        if i == 0 {
            alphas[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let radius = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max);
    let min_root_modulus = 1.0 / radius;
    StationarityReport {
        stationary: min_root_modulus > 1.0,
        min_root_modulus: Some(min_root_modulus),
    }
}
