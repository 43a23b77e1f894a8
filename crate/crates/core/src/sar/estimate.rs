//! Sample autocovariances of an operator series and the Yule-Walker solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::skew::{lincomb_raw, SkewOperator};

use super::series::DifferencedSeries;

/// Sample autocovariances `λ̂_0 … λ̂_p` of an operator series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AutocovSequence<T> {
    pub lags: Vec<T>,
    /// Number of operators the estimates were computed from.
    pub n: usize,
    /// Mean of `⟨R_t, R_t⟩` before centering; the scale against which a
    /// vanishing `λ̂_0` is judged.
    pub second_moment: T,
}

impl<T: Real> AutocovSequence<T> {
    pub fn order(&self) -> usize {
        self.lags.len() - 1
    }

    /// Toeplitz matrix of `λ̂_0 … λ̂_{p−1}`.
    pub fn toeplitz(&self) -> Matrix<T> {
        let p = self.order();
        Matrix::from_fn(p, p, |i, j| self.lags[i.abs_diff(j)])
    }
}

/// `μ̂_R = (1/n) Σ R_t`, compressed.
pub fn mean_operator<T: Real>(operators: &[SkewOperator<T>]) -> Result<SkewOperator<T>> {
    if operators.is_empty() {
        return Err(Error::EmptyInput("mean of no operators"));
    }
    let w = T::one() / T::c(operators.len() as f64);
    let terms: Vec<_> = operators.iter().map(|op| (w, op)).collect();
    Ok(lincomb_raw(&terms)?.compress())
}

/// `R_t − μ` for every `t`.
pub fn center<T: Real>(operators: &[SkewOperator<T>], mean: &SkewOperator<T>) -> Result<Vec<SkewOperator<T>>> {
    operators
        .iter()
        .map(|op| lincomb_raw(&[(T::one(), op), (-T::one(), mean)]))
        .collect()
}

/// `λ̂_k = (1/(n−k)) Σ_{t=1}^{n−k} ⟨R_t − μ̂_R, R_{t+k} − μ̂_R⟩` for `k = 0..=p`.
pub fn autocovariances<T: Real>(series: &DifferencedSeries<T>, p: usize) -> Result<AutocovSequence<T>> {
    autocovariances_of(&series.operators, p).map(|(acov, _)| acov)
}

/// Autocovariances of a bare operator series, also returning `μ̂_R`.
pub fn autocovariances_of<T: Real>(
    operators: &[SkewOperator<T>],
    p: usize,
) -> Result<(AutocovSequence<T>, SkewOperator<T>)> {
    let n = operators.len();
    if p == 0 {
        return Err(Error::InvalidArgument("order p must be at least 1".into()));
    }
    if p >= n {
        return Err(Error::OrderTooLarge { p, n });
    }
    let mean = mean_operator(operators)?;
    let centered = center(operators, &mean)?;
    let lags = (0..=p)
        .map(|k| {
            let sum = (0..n - k)
                .map(|t| centered[t].hs_inner(&centered[t + k]))
                .sum::<Result<T>>()?;
            Ok(sum / T::c((n - k) as f64))
        })
        .collect::<Result<Vec<T>>>()?;
    let second_moment = operators
        .iter()
        .map(|op| op.hs_inner(op))
        .sum::<Result<T>>()?
        / T::c(n as f64);
    Ok((
        AutocovSequence {
            lags,
            n,
            second_moment,
        },
        mean,
    ))
}

const MAX_CONDITION: f64 = 1e12;

/// Solves `Λ̂ α̂ = (λ̂_1, …, λ̂_p)ᵀ`.
pub fn yule_walker<T: Real>(acov: &AutocovSequence<T>) -> Result<Vec<T>> {
    let p = acov.order();
    if p == 0 {
        return Err(Error::InvalidArgument("need at least lags 0 and 1".into()));
    }
    let lambda0 = acov.lags[0];
    let floor = T::c(1e-12) * acov.second_moment.max(T::min_positive_value());
    if !(lambda0 > floor) {
        return Err(Error::DegenerateAutocovariance(format!(
            "lag-0 autocovariance {lambda0} vanishes"
        )));
    }
    let toeplitz = acov.toeplitz();
    let lu = toeplitz
        .lu()
        .ok_or_else(|| Error::DegenerateAutocovariance("singular Toeplitz matrix".into()))?;
    let inverse = lu.inverse();
    let condition = toeplitz.norm1() * inverse.norm1();
    if !(condition.f64() <= MAX_CONDITION) {
        return Err(Error::DegenerateAutocovariance(format!(
            "Toeplitz condition number {condition:e} exceeds {MAX_CONDITION:e}"
        )));
    }
    let rhs = &acov.lags[1..];
    let alphas = lu.solve(rhs);
    let fitted = toeplitz.matvec(&alphas);
    let residual = fitted
        .iter()
        .zip(rhs)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt();
    let scale = acov.lags.iter().map(|&l| l * l).sum::<T>().sqrt();
    if residual > T::c(1e-10) * scale {
        return Err(Error::DegenerateAutocovariance(format!(
            "Yule-Walker residual {residual:e} too large"
        )));
    }
    Ok(alphas)
}
