//! ψ-weights of the stationary solution and the asymptotic covariance of
//! the sample autocovariances.
//!
//! With `R_t − μ_R = Σ ψ_i ε_{t−i}` and innovation moments
//! `m1 = E⟨ε₁,ε₁⟩`, `m2 = E⟨ε₁,ε₁⟩²`, `c2 = E⟨ε₁,ε₂⟩²`, the covariance
//! between `⟨R_t, R_{t+u}⟩` and `⟨R_{t+h}, R_{t+h+v}⟩` is
//!
//! ```text
//! Γ^h_{u,v} = (m2 − m1² − 2c2) Σ_i ψ_i ψ_{i+u} ψ_{i+h} ψ_{i+h+v}
//!           + c2 (κ(h) κ(h+v−u) + κ(h+v) κ(h−u))
//! ```
//!
//! with `κ(u) = Σ_i ψ_i ψ_{i+u}`, and `√n(λ̂ − λ)` has limiting covariance
//! `V_{u,v} = Σ_h Γ^h_{u,v}`. The raw second moment
//! `E[⟨R_t,R_{t+u}⟩⟨R_{t+h},R_{t+h+v}⟩]` carries the extra constant
//! `m1² κ(u) κ(v) = λ_u λ_v`; see [`product_moment`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::skew::SkewOperator;

use super::stationarity::check_stationarity;

pub const DEFAULT_PSI_TRUNCATION: usize = 200;
const PSI_TAIL: f64 = 1e-12;
const GAMMA_TAIL: f64 = 1e-12;

/// Truncated MA(∞) weights `ψ_0 … ψ_m` of `1/φ(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiWeights {
    pub psi: Vec<f64>,
    /// Requested truncation bound.
    pub truncation: usize,
    pub alphas: Vec<f64>,
}

impl PsiWeights {
    /// `ψ_i`, zero outside the stored support.
    #[inline]
    pub fn get(&self, i: i64) -> f64 {
        if i < 0 {
            0.0
        } else {
            self.psi.get(i as usize).copied().unwrap_or(0.0)
        }
    }

    /// `κ(u) = Σ_i ψ_i ψ_{i+u}`.
    pub fn kappa(&self, u: i64) -> f64 {
        let u = u.abs();
        (0..self.psi.len() as i64).map(|i| self.get(i) * self.get(i + u)).sum()
    }

    fn quartic(&self, u: i64, h: i64, v: i64) -> f64 {
        let lo = 0.max(-u).max(-h).max(-h - v);
        let hi = self.psi.len() as i64;
        (lo..hi)
            .map(|i| self.get(i) * self.get(i + u) * self.get(i + h) * self.get(i + h + v))
            .sum()
    }

    /// Largest `h` with a possibly nonzero `Γ^h_{u,v}` for lags up to `p`.
    pub fn support(&self, p: usize) -> i64 {
        (self.psi.len() + p) as i64
    }
}

/// ψ-weights by the recursion `ψ_j = Σ_{i=1}^{min(j,p)} α_i ψ_{j−i}`.
///
/// Stops at `m` or once the last `p` weights are all below `1e−12`.
pub fn psi_weights(alphas: &[f64], m: usize) -> Result<PsiWeights> {
    let report = check_stationarity(alphas);
    if !report.stationary {
        return Err(Error::NonStationary {
            min_root_modulus: report.min_root_modulus_or_inf(),
        });
    }
    let p = alphas.len();
    let mut psi = vec![1.0];
    for j in 1..=m {
        let next: f64 = (1..=j.min(p)).map(|i| alphas[i - 1] * psi[j - i]).sum();
        psi.push(next);
        let window = p.max(1);
        if j >= window && psi[j + 1 - window..].iter().all(|v| v.abs() < PSI_TAIL) {
            break;
        }
    }
    while psi.len() > 1 && psi[psi.len() - 1].abs() < PSI_TAIL {
        psi.pop();
    }
    Ok(PsiWeights {
        psi,
        truncation: m,
        alphas: alphas.to_vec(),
    })
}

/// Scalar innovation moments entering `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnovationMoments {
    /// `E⟨ε₁,ε₁⟩`
    pub m1: f64,
    /// `E⟨ε₁,ε₁⟩²`
    pub m2: f64,
    /// `E⟨ε₁,ε₂⟩²`
    pub c2: f64,
}

/// Covariance of `⟨R_t,R_{t+u}⟩` and `⟨R_{t+h},R_{t+h+v}⟩`.
pub fn gamma_huv(h: i64, u: i64, v: i64, psi: &PsiWeights, moments: &InnovationMoments) -> f64 {
    let InnovationMoments { m2, m1, c2 } = *moments;
    (m2 - m1 * m1 - 2.0 * c2) * psi.quartic(u, h, v)
        + c2 * (psi.kappa(h) * psi.kappa(h + v - u) + psi.kappa(h + v) * psi.kappa(h - u))
}

/// Uncentered moment `E[⟨R_t,R_{t+u}⟩⟨R_{t+h},R_{t+h+v}⟩] = Γ^h_{u,v} + m1² κ(u) κ(v)`.
pub fn product_moment(h: i64, u: i64, v: i64, psi: &PsiWeights, moments: &InnovationMoments) -> f64 {
    gamma_huv(h, u, v, psi, moments) + moments.m1 * moments.m1 * psi.kappa(u) * psi.kappa(v)
}

/// Theoretical autocovariances `λ_k = m1 κ(k)`.
pub fn theoretical_lambdas(psi: &PsiWeights, moments: &InnovationMoments, p: usize) -> Vec<f64> {
    (0..=p as i64).map(|k| moments.m1 * psi.kappa(k)).collect()
}

/// Limiting covariance `V` of `√n(λ̂ − λ)` for lags `0..=p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCovariance {
    /// `(p+1) × (p+1)`, row-major.
    pub v: Vec<Vec<f64>>,
    pub moments: InnovationMoments,
    pub psi_len: usize,
    pub h_max: usize,
}

/// `V_{u,v} = Σ_{|h| ≤ h_max} Γ^h_{u,v}`.
pub fn asymptotic_covariance(
    psi: &PsiWeights,
    moments: &InnovationMoments,
    p: usize,
    h_max: usize,
) -> Result<AsymptoticCovariance> {
    let hm = h_max as i64;
    let mut tail = 0.0_f64;
    let mut v = vec![vec![0.0; p + 1]; p + 1];
    for u in 0..=p {
        for w in u..=p {
            let (ui, wi) = (u as i64, w as i64);
            let sum: f64 = (-hm..=hm).map(|h| gamma_huv(h, ui, wi, psi, moments)).sum();
            tail = tail
                .max(gamma_huv(hm, ui, wi, psi, moments).abs())
                .max(gamma_huv(-hm, ui, wi, psi, moments).abs());
            v[u][w] = sum;
            v[w][u] = sum;
        }
    }
    if !(tail < GAMMA_TAIL) {
        return Err(Error::TruncationNotConverged { tail });
    }
    Ok(AsymptoticCovariance {
        v,
        moments: *moments,
        psi_len: psi.psi.len(),
        h_max,
    })
}

/// Plug-in innovation moments from fitted residuals: empirical means of
/// `⟨ε̂_t,ε̂_t⟩`, `⟨ε̂_t,ε̂_t⟩²`, and `⟨ε̂_t,ε̂_{t+1}⟩²`.
pub fn estimate_moments<T: Real>(residuals: &[SkewOperator<T>]) -> Result<InnovationMoments> {
    if residuals.len() < 2 {
        return Err(Error::EmptyInput("moment estimation needs two residuals"));
    }
    let own = residuals
        .iter()
        .map(|e| e.hs_inner(e).map(Real::f64))
        .collect::<Result<Vec<f64>>>()?;
    let n = own.len() as f64;
    let m1 = own.iter().sum::<f64>() / n;
    let m2 = own.iter().map(|x| x * x).sum::<f64>() / n;
    let cross = residuals
        .windows(2)
        .map(|w| w[0].hs_inner(&w[1]).map(|x| x.f64().powi(2)))
        .sum::<Result<f64>>()?;
    Ok(InnovationMoments {
        m1,
        m2,
        c2: cross / (n - 1.0),
    })
}
