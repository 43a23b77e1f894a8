use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{AmbientVector, SpherePoint};
use crate::scalar::Real;
use crate::skew::{lincomb, lincomb_raw, SkewOperator, SkewOperatorRepr};

use super::estimate::{autocovariances_of, center, yule_walker, AutocovSequence};
use super::project::{project1, project2, Projection};
use super::series::{build_differenced_series, DifferencedSeries, Variant};
use super::stationarity::{check_stationarity, StationarityReport};

/// A fitted SAR or DSAR model together with what prediction needs.
#[derive(Debug, Clone)]
pub struct SarModel<T> {
    pub variant: Variant,
    pub p: usize,
    pub alphas: Vec<T>,
    /// `μ̂_R`
    pub mean_op: SkewOperator<T>,
    /// Frechet mean for SAR, first observation for DSAR.
    pub base: SpherePoint<T>,
    pub last_observation: SpherePoint<T>,
    /// Last `p` centered operators `R_t − μ̂_R`, oldest first.
    pub history: Vec<SkewOperator<T>>,
    pub autocov: AutocovSequence<T>,
    pub stationarity: StationarityReport,
    /// `‖ε̂_t‖` of the in-sample residuals, `t = p+1 … n`.
    pub residual_norms: Vec<T>,
}

/// Fits an order-`p` model to sphere observations.
pub fn fit<T: Real>(points: &[SpherePoint<T>], p: usize, variant: Variant) -> Result<SarModel<T>> {
    if points.len() <= p + 1 {
        return Err(Error::OrderTooLarge { p, n: points.len() });
    }
    let series = build_differenced_series(points, variant)?;
    fit_series(&series, p)
}

/// Yule-Walker fit on an already differenced series.
pub fn fit_series<T: Real>(series: &DifferencedSeries<T>, p: usize) -> Result<SarModel<T>> {
    let (autocov, mean_op) = autocovariances_of(&series.operators, p)?;
    let alphas = yule_walker(&autocov)?;
    let centered = center(&series.operators, &mean_op)?;
    let residual_norms = residuals_from_centered(&centered, &alphas)?
        .iter()
        .map(SkewOperator::hs_norm)
        .collect();
    let stationarity = check_stationarity(&alphas.iter().map(|a| a.f64()).collect::<Vec<_>>());
    let history = centered[centered.len() - p..].to_vec();
    Ok(SarModel {
        variant: series.variant,
        p,
        alphas,
        mean_op,
        base: series.base.clone(),
        last_observation: series.last_observation.clone(),
        history,
        autocov,
        stationarity,
        residual_norms,
    })
}

/// `ε̂_t = C_t − Σ α_i C_{t−i}` for `t ≥ p`, with `C` the centered series.
fn residuals_from_centered<T: Real>(centered: &[SkewOperator<T>], alphas: &[T]) -> Result<Vec<SkewOperator<T>>> {
    let p = alphas.len();
    (p..centered.len())
        .map(|t| {
            let mut terms = vec![(T::one(), &centered[t])];
            terms.extend(alphas.iter().enumerate().map(|(i, &a)| (-a, &centered[t - 1 - i])));
            lincomb(&terms)
        })
        .collect()
}

/// In-sample innovations of a fitted model on its series.
pub fn residuals<T: Real>(model: &SarModel<T>, series: &DifferencedSeries<T>) -> Result<Vec<SkewOperator<T>>> {
    let centered = center(&series.operators, &model.mean_op)?;
    residuals_from_centered(&centered, &model.alphas)
}

/// `μ̂_R + Σ α_i C_{t−i}` given centered history, most recent last.
fn one_step<T: Real>(mean: &SkewOperator<T>, alphas: &[T], history: &[SkewOperator<T>]) -> Result<SkewOperator<T>> {
    let mut terms = vec![(T::one(), mean)];
    terms.extend(
        alphas
            .iter()
            .zip(history.iter().rev())
            .map(|(&a, c)| (a, c)),
    );
    Ok(lincomb_raw(&terms)?.compress())
}

/// `R̂_{n+1} = μ̂_R + α̂_1 (R_n − μ̂_R) + … + α̂_p (R_{n−p+1} − μ̂_R)`, compressed.
pub fn predict_operator<T: Real>(model: &SarModel<T>) -> Result<SkewOperator<T>> {
    one_step(&model.mean_op, &model.alphas, &model.history)
}

/// Outcome of a constrained one-step prediction.
#[derive(Debug, Clone)]
pub struct Prediction<T> {
    pub operator: SkewOperator<T>,
    /// Rotated point before any projection.
    pub unconstrained: SpherePoint<T>,
    pub point: SpherePoint<T>,
    pub projection: Projection,
    /// Whether the projection changed the rotated point.
    pub fired: bool,
    /// Rotation fraction chosen by `Proj1`.
    pub c1: Option<T>,
}

fn rotate_with_projection<T: Real>(
    start: &SpherePoint<T>,
    operator: SkewOperator<T>,
    projection: Projection,
) -> Result<Prediction<T>> {
    let unconstrained = operator.rotate(start)?;
    let (point, fired, c1) = match projection {
        Projection::None => (unconstrained.clone(), false, None),
        Projection::Proj1 => {
            let (point, c1) = project1(start, &operator)?;
            (point, c1 < T::one(), Some(c1))
        }
        Projection::Proj2 => {
            let fired = unconstrained.values().iter().any(|&v| v < T::zero());
            (project2(&unconstrained)?, fired, None)
        }
    };
    Ok(Prediction {
        operator,
        unconstrained,
        point,
        projection,
        fired,
        c1,
    })
}

/// One-step-ahead prediction: `exp(R̂) μ̂_x` for SAR, `exp(R̂) x_n` for DSAR.
pub fn predict<T: Real>(model: &SarModel<T>, projection: Projection) -> Result<Prediction<T>> {
    let operator = predict_operator(model)?;
    let start = match model.variant {
        Variant::Sar => &model.base,
        Variant::Dsar => &model.last_observation,
    };
    rotate_with_projection(start, operator, projection)
}

pub fn predict_point<T: Real>(model: &SarModel<T>, projection: Projection) -> Result<SpherePoint<T>> {
    predict(model, projection).map(|p| p.point)
}

/// Fitted value for one observation.
#[derive(Debug, Clone)]
pub struct InSampleFit<T> {
    /// Index of the observation this predicts.
    pub index: usize,
    pub predicted: SpherePoint<T>,
}

/// One-step in-sample predictions for every observation with `p`
/// predecessors in the operator series.
pub fn in_sample_fit<T: Real>(
    model: &SarModel<T>,
    series: &DifferencedSeries<T>,
    projection: Projection,
) -> Result<Vec<InSampleFit<T>>> {
    let centered = center(&series.operators, &model.mean_op)?;
    (model.p..centered.len())
        .map(|t| {
            let op = one_step(&model.mean_op, &model.alphas, &centered[t - model.p..t])?;
            let (start, index) = match series.variant {
                Variant::Sar => (&series.base, t),
                Variant::Dsar => (&series.observations[t], t + 1),
            };
            let predicted = rotate_with_projection(start, op, projection)?.point;
            Ok(InSampleFit { index, predicted })
        })
        .collect()
}

pub const MODEL_FORMAT: &str = "sar-model/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelDiagnostics<T> {
    /// `null` when all coefficients vanish (no finite roots).
    pub min_root_modulus: Option<f64>,
    pub stationary: bool,
    pub residual_norms: Vec<T>,
    pub lags: Vec<T>,
    pub n: usize,
    pub second_moment: T,
}

/// On-disk form of a [`SarModel`], tagged `"format": "sar-model/1"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelFile<T> {
    pub format: String,
    pub variant: Variant,
    pub p: usize,
    pub alphas: Vec<T>,
    pub mean_op: SkewOperatorRepr<T>,
    pub base: AmbientVector<T>,
    pub last_observation: AmbientVector<T>,
    pub history: Vec<SkewOperatorRepr<T>>,
    pub diagnostics: ModelDiagnostics<T>,
    /// Free-form description of the data the model was fitted on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
}

impl<T: Real> SarModel<T> {
    pub fn to_file(&self, source: Option<serde_json::Value>) -> ModelFile<T> {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            variant: self.variant,
            p: self.p,
            alphas: self.alphas.clone(),
            mean_op: self.mean_op.to_repr("base"),
            base: self.base.vector().clone(),
            last_observation: self.last_observation.vector().clone(),
            history: self.history.iter().map(|h| h.to_repr("base")).collect(),
            diagnostics: ModelDiagnostics {
                min_root_modulus: self.stationarity.min_root_modulus,
                stationary: self.stationarity.stationary,
                residual_norms: self.residual_norms.clone(),
                lags: self.autocov.lags.clone(),
                n: self.autocov.n,
                second_moment: self.autocov.second_moment,
            },
            source,
        }
    }

    pub fn from_file(file: &ModelFile<T>) -> Result<Self> {
        if file.format != MODEL_FORMAT {
            return Err(Error::FormatVersion {
                found: file.format.clone(),
                expected: MODEL_FORMAT.into(),
            });
        }
        if file.alphas.len() != file.p || file.history.len() != file.p {
            return Err(Error::InvalidArgument(format!(
                "model of order {} has {} coefficients and {} history entries",
                file.p,
                file.alphas.len(),
                file.history.len()
            )));
        }
        let base = SpherePoint::new(file.base.clone())?;
        let weights: Arc<[T]> = base.weights_arc().clone();
        let last = SpherePoint::new(AmbientVector::with_weights(
            file.last_observation.values().to_vec(),
            weights.clone(),
        )?)?;
        base.same_space(&last)?;
        let op = |r: &SkewOperatorRepr<T>| SkewOperator::from_repr(r, weights.clone());
        let d = &file.diagnostics;
        Ok(SarModel {
            variant: file.variant,
            p: file.p,
            alphas: file.alphas.clone(),
            mean_op: op(&file.mean_op)?,
            base,
            last_observation: last,
            history: file.history.iter().map(op).collect::<Result<_>>()?,
            autocov: AutocovSequence {
                lags: d.lags.clone(),
                n: d.n,
                second_moment: d.second_moment,
            },
            stationarity: StationarityReport {
                stationary: d.stationary,
                min_root_modulus: d.min_root_modulus,
            },
            residual_norms: d.residual_norms.clone(),
        })
    }
}

/// Parses a model file, checking the format tag before the body.
pub fn read_model_json<T: Real>(text: &str) -> Result<(SarModel<T>, Option<serde_json::Value>)> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let found = value.get("format").and_then(|f| f.as_str()).unwrap_or("").to_string();
    if found != MODEL_FORMAT {
        return Err(Error::FormatVersion {
            found,
            expected: MODEL_FORMAT.into(),
        });
    }
    let file: ModelFile<T> = serde_json::from_value(value)?;
    let model = SarModel::from_file(&file)?;
    Ok((model, file.source))
}

pub fn write_model_json<T: Real>(model: &SarModel<T>, source: Option<serde_json::Value>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&model.to_file(source))?)
}
