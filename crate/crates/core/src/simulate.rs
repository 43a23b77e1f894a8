//! Synthetic SAR/DSAR series and the Monte Carlo harness for the
//! autocovariance central limit theorem.
//!
//! Innovations are Gaussian combinations of the plane atoms
//! `e_i⊗e_j − e_j⊗e_i`, `i < j ≤ k`, of an orthonormal frame `e_1 … e_k`.
//! Every operator in a simulated series stays in the span of these atoms,
//! so the autoregressive recursion runs on coefficient vectors and atoms
//! are only materialized when a point is rotated.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{AmbientVector, SpherePoint};
use crate::sar::{
    asymptotic_covariance, autocovariances_of, check_stationarity, psi_weights, theoretical_lambdas, yule_walker,
    InnovationMoments, Variant, DEFAULT_PSI_TRUNCATION,
};
use crate::scalar::Real;
use crate::skew::{lincomb_raw, orthonormal_basis, SkewAtom, SkewOperator};
use crate::transforms::Axis;

/// Environment variable capping the number of parallel replicates.
pub const THREADS_ENV: &str = "SPHEREAR_THREADS";

/// Burn-in steps per lag when none is given.
pub const BURN_IN_PER_LAG: usize = 50;

/// Deterministic random stream for replicate `replicate` of run `seed`.
pub fn stream(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Thread cap from `SPHEREAR_THREADS`, if set to a positive integer.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Law of the innovations: `σ` times independent standard normal
/// coefficients on the plane atoms of an orthonormal frame.
#[derive(Debug, Clone)]
pub struct InnovationSpec<T> {
    frame: Vec<AmbientVector<T>>,
    sigma: T,
}

impl<T: Real> InnovationSpec<T> {
    /// Frame of the first `k` coordinate directions of `R^d`.
    pub fn standard(dim: usize, k: usize, sigma: T) -> Result<Self> {
        Self::coordinate(vec![T::one(); dim].into(), k, sigma)
    }

    /// Frame of the first `k` coordinate directions of a weighted space,
    /// scaled to unit norm.
    pub fn coordinate(weights: Arc<[T]>, k: usize, sigma: T) -> Result<Self> {
        if k > weights.len() {
            return Err(Error::InvalidArgument(format!(
                "active size k = {k} exceeds dimension {}",
                weights.len()
            )));
        }
        let frame = (0..k)
            .map(|i| {
                let mut v = vec![T::zero(); weights.len()];
                v[i] = T::one() / weights[i].sqrt();
                AmbientVector::with_weights(v, weights.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_frame(frame, sigma)
    }

    /// Orthonormalizes `vectors` and uses the result as the frame.
    pub fn spanning(vectors: &[AmbientVector<T>], sigma: T) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyInput("no frame vectors"))?;
        for v in vectors {
            first.same_space(v)?;
        }
        let frame = orthonormal_basis(vectors);
        if frame.len() != vectors.len() {
            return Err(Error::InvalidArgument("frame vectors are linearly dependent".into()));
        }
        Self::with_frame(frame, sigma)
    }

    /// Uses an already orthonormal frame.
    pub fn with_frame(frame: Vec<AmbientVector<T>>, sigma: T) -> Result<Self> {
        if frame.len() < 2 {
            return Err(Error::InvalidArgument("innovations need an active size k ≥ 2".into()));
        }
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("innovation scale must be nonnegative, got {sigma}")));
        }
        let tol = T::c(1e3) * T::snap();
        for (i, u) in frame.iter().enumerate() {
            for (j, v) in frame.iter().enumerate().skip(i) {
                let target = if i == j { T::one() } else { T::zero() };
                if (u.inner(v)? - target).abs() > tol {
                    return Err(Error::InvalidArgument("frame is not orthonormal".into()));
                }
            }
        }
        Ok(Self { frame, sigma })
    }

    pub fn dim(&self) -> usize {
        self.frame[0].dim()
    }

    /// Active basis size `k`.
    pub fn k(&self) -> usize {
        self.frame.len()
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn frame(&self) -> &[AmbientVector<T>] {
        &self.frame
    }

    pub fn weights(&self) -> &Arc<[T]> {
        self.frame[0].weights_arc()
    }

    /// Number of plane atoms, `k(k−1)/2`.
    pub fn atom_count(&self) -> usize {
        self.k() * (self.k() - 1) / 2
    }

    /// Fresh coefficient vector of one innovation.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        (0..self.atom_count())
            .map(|_| self.sigma * T::c(rng.sample::<f64, _>(StandardNormal)))
            .collect()
    }

    /// `Σ c_ij (e_i⊗e_j − e_j⊗e_i)` with atoms in `(i, j)` lexicographic order.
    pub fn operator(&self, coefs: &[T]) -> Result<SkewOperator<T>> {
        if coefs.len() != self.atom_count() {
            return Err(Error::DimensionMismatch {
                left: coefs.len(),
                right: self.atom_count(),
            });
        }
        let k = self.k();
        let atoms = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .zip(coefs)
            .filter(|(_, &c)| c != T::zero())
            .map(|((i, j), &coef)| SkewAtom {
                coef,
                a: self.frame[i].clone(),
                b: self.frame[j].clone(),
            })
            .collect();
        SkewOperator::from_atoms(self.weights().clone(), atoms)
    }

    /// Moments of `⟨ε,ε⟩` and `⟨ε₁,ε₂⟩` for this law.
    ///
    /// With `N = k(k−1)/2` atoms of squared norm 2 and coefficients
    /// `σ g`, `⟨ε,ε⟩ = 2σ² Σ g²` is `2σ²` times a `χ²_N` variable.
    pub fn moments(&self) -> InnovationMoments {
        let n = self.atom_count() as f64;
        let s2 = self.sigma.f64().powi(2);
        InnovationMoments {
            m1: 2.0 * s2 * n,
            m2: 4.0 * s2 * s2 * (n * n + 2.0 * n),
            c2: 4.0 * s2 * s2 * n,
        }
    }
}

/// One innovation operator, compressed.
pub fn sample_innovation<T: Real, R: Rng + ?Sized>(spec: &InnovationSpec<T>, rng: &mut R) -> Result<SkewOperator<T>> {
    Ok(spec.operator(&spec.draw(rng))?.compress())
}

/// Orthonormal frame for innovations on a density grid: `base` followed by
/// low-order cosine modes, orthonormalized with the grid weights.
///
/// Including `base` makes every plane atom through it a rotation that
/// actually moves `base`.
pub fn smooth_frame<T: Real>(base: &SpherePoint<T>, axes: &[Axis<T>], k: usize) -> Result<Vec<AmbientVector<T>>> {
    let cells: usize = axes.iter().map(|a| a.cells).product();
    if base.dim() != cells {
        return Err(Error::DimensionMismatch {
            left: base.dim(),
            right: cells,
        });
    }
    let orders: Vec<Vec<usize>> = match axes.len() {
        1 => (1..k).map(|i| vec![i]).collect(),
        2 => {
            let mut pairs: Vec<Vec<usize>> = (1..=2 * k)
                .flat_map(|total| (0..=total).map(move |i| vec![i, total - i]))
                .collect();
            pairs.truncate(k.saturating_sub(1));
            pairs
        }
        n => return Err(Error::InvalidArgument(format!("smooth frames need 1 or 2 axes, got {n}"))),
    };
    let mut vectors = vec![base.vector().clone()];
    for order in &orders {
        let values = (0..cells)
            .map(|flat| {
                let mut rest = flat;
                let mut value = T::one();
                for (axis, &m) in axes.iter().zip(order).rev() {
                    let i = rest % axis.cells;
                    rest /= axis.cells;
                    let u = (T::c(i as f64) + T::c(0.5)) / T::c(axis.cells as f64);
                    value *= (T::PI() * T::c(m as f64) * u).cos();
                }
                value
            })
            .collect();
        vectors.push(base.sibling(values)?);
    }
    let frame = orthonormal_basis(&vectors);
    if frame.len() != k {
        return Err(Error::InvalidArgument(format!("could not build {k} independent frame vectors")));
    }
    Ok(frame)
}

/// Parameters of one simulated series.
#[derive(Debug, Clone)]
pub struct SimulationRun<T> {
    pub variant: Variant,
    pub alphas: Vec<f64>,
    /// `μ_R`; the zero operator when absent.
    pub mean_op: Option<SkewOperator<T>>,
    /// Rotated at every step for SAR; the starting point for DSAR.
    pub base: SpherePoint<T>,
    /// Number of output points.
    pub n: usize,
    /// Discarded warm-up steps; `50·p` when absent.
    pub burn_in: Option<usize>,
    pub seed: u64,
    pub replicate: u64,
    pub innovations: InnovationSpec<T>,
    /// Simulate even when the coefficients are not stationary.
    pub force: bool,
}

/// Output of [`simulate_series`].
#[derive(Debug, Clone)]
pub struct SimulatedSeries<T> {
    pub points: Vec<SpherePoint<T>>,
    /// Coefficients of `R_t − μ_R` for the kept steps.
    pub centered: Vec<Vec<T>>,
    /// Every innovation draw, warm-up included, oldest first.
    pub innovations: Vec<Vec<T>>,
    pub burn_in: usize,
}

impl<T: Real> SimulationRun<T> {
    fn effective_burn_in(&self) -> Result<usize> {
        let p = self.alphas.len();
        let burn_in = self.burn_in.unwrap_or(BURN_IN_PER_LAG * p);
        if burn_in < 10 * p {
            return Err(Error::InvalidArgument(format!("burn-in {burn_in} shorter than 10·p = {}", 10 * p)));
        }
        Ok(burn_in)
    }

    /// Operators driving the kept steps: `n` for SAR, `n − 1` for DSAR.
    fn steps(&self) -> usize {
        match self.variant {
            Variant::Sar => self.n,
            Variant::Dsar => self.n.saturating_sub(1),
        }
    }
}

/// Runs the AR recursion on coefficient vectors, starting from zero
/// `burn_in` steps before the first kept operator.
pub fn simulate_coefficients<T: Real, R: Rng + ?Sized>(
    alphas: &[f64],
    spec: &InnovationSpec<T>,
    steps: usize,
    burn_in: usize,
    rng: &mut R,
) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let alphas: Vec<T> = alphas.iter().map(|&a| T::c(a)).collect();
    let total = burn_in + steps;
    let mut innovations = Vec::with_capacity(total);
    let mut series: Vec<Vec<T>> = Vec::with_capacity(total);
    for t in 0..total {
        let eps = spec.draw(rng);
        let mut r = eps.clone();
        for (i, &a) in alphas.iter().enumerate() {
            if let Some(prev) = t.checked_sub(i + 1).map(|s| &series[s]) {
                for (ri, &pi) in r.iter_mut().zip(prev) {
                    *ri += a * pi;
                }
            }
        }
        innovations.push(eps);
        series.push(r);
    }
    series.drain(..burn_in);
    (series, innovations)
}

fn check_alphas(alphas: &[f64], force: bool) -> Result<()> {
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coefficient".into()));
    }
    let report = check_stationarity(alphas);
    if !report.stationary && !force {
        return Err(Error::NonStationary {
            min_root_modulus: report.min_root_modulus_or_inf(),
        });
    }
    Ok(())
}

/// Simulates a SAR or DSAR series on the sphere.
///
/// SAR rotates the fixed base by `exp(R_t)`; DSAR rotates the previous
/// point, starting at the base.
pub fn simulate_series<T: Real>(run: &SimulationRun<T>) -> Result<SimulatedSeries<T>> {
    check_alphas(&run.alphas, run.force)?;
    if run.n < 2 {
        return Err(Error::InvalidArgument("series length must be at least 2".into()));
    }
    let spec = &run.innovations;
    run.base.same_space(&spec.frame[0])?;
    if let Some(mu) = &run.mean_op {
        if mu.weights() != spec.weights() {
            return Err(Error::WeightMismatch);
        }
    }
    let burn_in = run.effective_burn_in()?;
    let mut rng = stream(run.seed, run.replicate);
    let (centered, innovations) = simulate_coefficients(&run.alphas, spec, run.steps(), burn_in, &mut rng);

    let mut points = Vec::with_capacity(run.n);
    if run.variant == Variant::Dsar {
        points.push(run.base.clone());
    }
    for coefs in &centered {
        let r = spec.operator(coefs)?;
        let r = match &run.mean_op {
            Some(mu) => lincomb_raw(&[(T::one(), &r), (T::one(), mu)])?,
            None => r,
        };
        let from = match run.variant {
            Variant::Sar => &run.base,
            Variant::Dsar => points.last().expect("DSAR starts at the base"),
        };
        let next = r.compress().rotate(from)?;
        points.push(next);
    }
    Ok(SimulatedSeries {
        points,
        centered,
        innovations,
        burn_in,
    })
}

/// Sphere points of [`simulate_series`].
pub fn simulate_sar<T: Real>(run: &SimulationRun<T>) -> Result<Vec<SpherePoint<T>>> {
    simulate_series(run).map(|s| s.points)
}

/// Setup of the autocovariance CLT experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub alphas: Vec<f64>,
    /// Active basis size of the innovations.
    pub k: usize,
    pub sigma: f64,
    /// Length of each simulated operator series.
    pub n: usize,
    pub replicates: usize,
    /// Largest lag `p` of `λ̂_0 … λ̂_p`; also the Yule-Walker order.
    pub lags: usize,
    pub seed: u64,
    pub burn_in: Option<usize>,
    /// Parallel replicate cap; falls back to `SPHEREAR_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
}

/// Minimum replicate count of the Monte Carlo harness.
pub const MIN_REPLICATES: usize = 200;

/// Sample moments of one standardized statistic across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityStats {
    pub lag: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `n (S²/6 + K²/24)`, asymptotically `χ²_2` under normality.
    pub jarque_bera: f64,
}

/// Result of [`monte_carlo_lambda_clt`]; matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    pub burn_in: usize,
    pub threads: usize,
    pub moments: InnovationMoments,
    pub lambda_true: Vec<f64>,
    pub lambda_mean: Vec<f64>,
    /// Covariance of `√n(λ̂ − λ)` across replicates.
    pub empirical_cov: Vec<Vec<f64>>,
    pub theoretical_v: Vec<Vec<f64>>,
    /// `|empirical − V| / (|V| + 1e−12)`.
    pub relative_diff: Vec<Vec<f64>>,
    pub normality: Vec<NormalityStats>,
    pub alpha_hat_mean: Vec<f64>,
    /// Covariance of `√n(α̂ − α)`, the true `α` padded with zeros to `lags` entries.
    pub alpha_hat_cov: Vec<Vec<f64>>,
    /// Replicates whose Yule-Walker solve failed; excluded from the α̂ statistics.
    pub degenerate_fits: usize,
}

impl MonteCarloReport {
    /// Largest relative discrepancy over entries with `|V| > threshold`.
    pub fn max_relative_diff(&self, threshold: f64) -> f64 {
        self.theoretical_v
            .iter()
            .flatten()
            .zip(self.relative_diff.iter().flatten())
            .filter(|(v, _)| v.abs() > threshold)
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    }
}

struct Replicate {
    lambdas: Vec<f64>,
    alphas: Option<Vec<f64>>,
}

fn run_replicate(config: &MonteCarloConfig, spec: &InnovationSpec<f64>, burn_in: usize, index: u64) -> Result<Replicate> {
    let mut rng = stream(config.seed, index);
    let (series, _) = simulate_coefficients(&config.alphas, spec, config.n, burn_in, &mut rng);
    let ops = series.iter().map(|c| spec.operator(c)).collect::<Result<Vec<_>>>()?;
    let (acov, _) = autocovariances_of(&ops, config.lags)?;
    let alphas = yule_walker(&acov).ok();
    Ok(Replicate {
        lambdas: acov.lags,
        alphas,
    })
}

/// Simulates `replicates` operator series and compares the spread of
/// `√n(λ̂ − λ)` with the limiting covariance `V`.
///
/// Replicate `r` draws from [`stream`]`(seed, r)`, so the report does not
/// depend on the number of threads.
pub fn monte_carlo_lambda_clt(config: &MonteCarloConfig) -> Result<MonteCarloReport> {
    if config.replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_REPLICATES} replicates, got {}",
            config.replicates
        )));
    }
    if config.lags == 0 || config.lags >= config.n {
        return Err(Error::OrderTooLarge {
            p: config.lags,
            n: config.n,
        });
    }
    check_alphas(&config.alphas, false)?;
    let p = config.alphas.len();
    let burn_in = config.burn_in.unwrap_or(BURN_IN_PER_LAG * p.max(1));
    let spec = InnovationSpec::standard(config.k, config.k, config.sigma)?;
    let moments = spec.moments();
    let psi = psi_weights(&config.alphas, DEFAULT_PSI_TRUNCATION.max(4 * config.n.min(5000)))?;
    let lambda_true = theoretical_lambdas(&psi, &moments, config.lags);
    let h_max = psi.support(config.lags) as usize;
    let theoretical_v = asymptotic_covariance(&psi, &moments, config.lags, h_max)?.v;

    let threads = config
        .threads
        .or_else(thread_cap_from_env)
        .unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let replicates: Vec<Replicate> = pool.install(|| {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| run_replicate(config, &spec, burn_in, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let root_n = (config.n as f64).sqrt();
    let scaled: Vec<Vec<f64>> = replicates
        .iter()
        .map(|r| r.lambdas.iter().zip(&lambda_true).map(|(l, t)| root_n * (l - t)).collect())
        .collect();
    let empirical_cov = covariance(&scaled);
    let relative_diff = empirical_cov
        .iter()
        .zip(&theoretical_v)
        .map(|(er, vr)| er.iter().zip(vr).map(|(e, v)| (e - v).abs() / (v.abs() + 1e-12)).collect())
        .collect();
    let normality = (0..=config.lags)
        .map(|lag| normality_stats(lag, &scaled.iter().map(|row| row[lag]).collect::<Vec<_>>()))
        .collect();

    let mut true_alphas = config.alphas.clone();
    true_alphas.resize(config.lags.max(p), 0.0);
    let fitted: Vec<Vec<f64>> = replicates
        .iter()
        .filter_map(|r| r.alphas.as_ref())
        .map(|a| a.iter().zip(&true_alphas).map(|(x, t)| root_n * (x - t)).collect())
        .collect();
    let degenerate_fits = replicates.len() - fitted.len();
    let alpha_hat_mean = column_means(&fitted)
        .iter()
        .zip(&true_alphas)
        .map(|(m, t)| t + m / root_n)
        .collect();

    Ok(MonteCarloReport {
        config: config.clone(),
        burn_in,
        threads,
        moments,
        lambda_mean: column_means(&replicates.iter().map(|r| r.lambdas.clone()).collect::<Vec<_>>()),
        lambda_true,
        empirical_cov,
        theoretical_v,
        relative_diff,
        normality,
        alpha_hat_mean,
        alpha_hat_cov: covariance(&fitted),
        degenerate_fits,
    })
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let n = rows.len() as f64;
    (0..first.len()).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect()
}

/// Sample covariance with divisor `n − 1`.
fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let means = column_means(rows);
    let m = means.len();
    let denom = (rows.len() as f64 - 1.0).max(1.0);
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| rows.iter().map(|r| (r[i] - means[i]) * (r[j] - means[j])).sum::<f64>() / denom)
                .collect()
        })
        .collect()
}

fn normality_stats(lag: usize, xs: &[f64]) -> NormalityStats {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let central = |k: i32| xs.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
    let m2 = central(2);
    let skewness = central(3) / m2.powf(1.5);
    let excess_kurtosis = central(4) / (m2 * m2) - 3.0;
    NormalityStats {
        lag,
        mean,
        variance: m2 * n / (n - 1.0),
        skewness,
        excess_kurtosis,
        jarque_bera: n * (skewness * skewness / 6.0 + excess_kurtosis * excess_kurtosis / 24.0),
    }
}
