use std::path::Path;

use clap::ValueEnum;
use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::json;

use spherear::hilbert::geodesic_distance;
use spherear::io::{read_compositions, read_density_series, read_samples};
use spherear::transforms::{
    default_axes, estimate_density, fpsr, fpsr_inverse, psr, psr_inverse, GridSpec, DEFAULT_CELLS,
};
use spherear::{Axis, Composition, DensityGrid, Error, Result, SpherePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// CSV of time,part1,...,partd
    Composition,
    /// CSV of time,coord1[,coord2], one row per observation
    Samples,
    /// JSON series of density grids
    Density,
}

/// What the sphere points stand for, kept so predictions can be mapped back.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Composition { parts: Vec<String> },
    Density { axes: Vec<Axis> },
}

impl Domain {
    pub fn back_transform(&self, x: &SpherePoint) -> Result<Observation> {
        match self {
            Domain::Composition { .. } => psr_inverse(x, 1.0).map(Observation::Composition),
            Domain::Density { axes } => fpsr_inverse(x, axes).map(Observation::Density),
        }
    }

    /// Distance between back-transformed observations: geodesic distance of
    /// square roots, which is the Fisher-Rao distance for densities.
    pub fn distance(&self, predicted: &SpherePoint, observed: &SpherePoint) -> Result<f64> {
        let predicted = match self {
            Domain::Composition { .. } => squared_composition(predicted).and_then(|c| psr(&c))?,
            Domain::Density { axes } => fpsr(&fpsr_inverse(predicted, axes)?)?,
        };
        geodesic_distance(&predicted, observed)
    }
}

/// Squares and renormalizes, accepting components of either sign.
fn squared_composition(x: &SpherePoint) -> Result<Composition> {
    Composition::normalized(x.values().iter().map(|v| v * v).collect(), 1.0)
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Observation {
    Composition(Composition),
    Density(DensityGrid),
}

pub struct Dataset {
    pub format: InputFormat,
    pub labels: Vec<String>,
    pub points: Vec<SpherePoint>,
    pub domain: Domain,
    pub observations: Vec<Observation>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn source(&self, path: &Path) -> serde_json::Value {
        json!({
            "input": path.display().to_string(),
            "format": self.format,
            "labels": self.labels,
            "domain": self.domain,
        })
    }
}

pub struct DensityOptions<'a> {
    pub grid: Option<&'a str>,
    pub bandwidth_scale: f64,
}

pub fn load(path: &Path, format: InputFormat, options: &DensityOptions<'_>) -> Result<Dataset> {
    match format {
        InputFormat::Composition => {
            let series = read_compositions::<f64>(path)?;
            let points = series.compositions.iter().map(psr).collect::<Result<Vec<_>>>()?;
            Ok(Dataset {
                format,
                labels: series.labels,
                points,
                domain: Domain::Composition { parts: series.parts },
                observations: series.compositions.into_iter().map(Observation::Composition).collect(),
                warnings: series.warnings,
            })
        }
        InputFormat::Samples => {
            let series = read_samples::<f64>(path)?;
            let axes = match options.grid {
                Some(spec) => spec.parse::<GridSpec<f64>>()?.axes,
                None => {
                    let all: Vec<Vec<f64>> = series.groups.iter().flatten().cloned().collect();
                    default_axes(&all, DEFAULT_CELLS)?
                }
            };
            let grids = series
                .groups
                .iter()
                .zip(&series.labels)
                .map(|(group, label)| {
                    estimate_density(group, &axes, options.bandwidth_scale).map_err(|e| Error::Parse {
                        path: path.display().to_string(),
                        line: 0,
                        message: format!("time {label:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            density_dataset(format, series.labels, grids)
        }
        InputFormat::Density => {
            if options.grid.is_some() {
                warn!("--grid is ignored for density-grid input");
            }
            let series = read_density_series::<f64>(path)?;
            density_dataset(format, series.labels, series.grids)
        }
    }
}

fn density_dataset(format: InputFormat, labels: Vec<String>, grids: Vec<DensityGrid>) -> Result<Dataset> {
    let points = grids.iter().map(fpsr).collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        format,
        labels,
        points,
        domain: Domain::Density {
            axes: grids[0].axes().to_vec(),
        },
        observations: grids.into_iter().map(Observation::Density).collect(),
        warnings: Vec::new(),
    })
}
