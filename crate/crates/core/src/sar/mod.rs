//! Spherical autoregression: differencing, Yule-Walker fitting, asymptotics,
//! and constrained prediction.

pub mod asymptotic;
pub mod estimate;
pub mod model;
pub mod project;
pub mod series;
pub mod stationarity;

pub use asymptotic::{
    asymptotic_covariance, estimate_moments, gamma_huv, product_moment, psi_weights, theoretical_lambdas,
    AsymptoticCovariance, InnovationMoments, PsiWeights, DEFAULT_PSI_TRUNCATION,
};
pub use estimate::{autocovariances, autocovariances_of, center, mean_operator, yule_walker, AutocovSequence};
pub use model::{
    fit, fit_series, in_sample_fit, predict, predict_operator, predict_point, read_model_json, residuals,
    write_model_json, InSampleFit, ModelDiagnostics, ModelFile, Prediction, SarModel, MODEL_FORMAT,
};
pub use project::{project1, project2, Projection};
pub use series::{build_differenced_series, DifferencedSeries, Variant};
pub use stationarity::{check_stationarity, StationarityReport};
