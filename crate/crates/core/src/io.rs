//! File formats: compositional CSV, distributional sample CSV, density-grid
//! JSON series, and plot-data CSV output.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::SpherePoint;
use crate::scalar::Real;
use crate::transforms::{lon_lat, ternary, Axis, Composition, DensityGrid};

/// Row sums further than this from one are reported when normalizing.
const ROW_SUM_TOL: f64 = 1e-6;

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line: line as usize,
        message: message.into(),
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.kind() {
        csv::ErrorKind::Io(_) => Error::Csv(err),
        _ => parse_error(path, line, err.to_string()),
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn parse_number<T: Real>(path: &Path, line: u64, column: &str, field: &str) -> Result<T> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(T::c)
        .ok_or_else(|| parse_error(path, line, format!("column {column:?}: {field:?} is not a finite number")))
}

/// A labelled series of compositions read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionSeries<T> {
    /// Names of the part columns.
    pub parts: Vec<String>,
    pub labels: Vec<String>,
    pub compositions: Vec<Composition<T>>,
    /// Rows whose sums were rescaled to one.
    pub warnings: Vec<String>,
}

/// Reads `time,part1,…,partd` rows and normalizes every row to sum one.
pub fn read_compositions<T: Real>(path: &Path) -> Result<CompositionSeries<T>> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() < 3 {
        return Err(parse_error(path, 1, "expected a time column and at least two part columns"));
    }
    let parts: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut series = CompositionSeries {
        parts,
        labels: Vec::new(),
        compositions: Vec::new(),
        warnings: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let values = record
            .iter()
            .skip(1)
            .zip(headers.iter().skip(1))
            .map(|(field, column)| parse_number::<T>(path, line, column, field))
            .collect::<Result<Vec<T>>>()?;
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| **v < T::zero()) {
            return Err(parse_error(
                path,
                line,
                format!("column {:?}: negative part {v}", headers.get(i + 1).unwrap_or("?")),
            ));
        }
        let sum: T = values.iter().copied().sum();
        if !(sum > T::zero()) {
            return Err(parse_error(path, line, "parts sum to zero"));
        }
        if (sum.f64() - 1.0).abs() > ROW_SUM_TOL {
            let message = format!("{}: line {line}: row sums to {sum}, normalized to 1", path.display());
            warn!("{message}");
            series.warnings.push(message);
        }
        let composition = Composition::normalized(values, T::one()).map_err(|e| parse_error(path, line, e.to_string()))?;
        series.labels.push(record[0].to_string());
        series.compositions.push(composition);
    }
    if series.compositions.is_empty() {
        return Err(Error::EmptyInput("compositional CSV has no data rows"));
    }
    Ok(series)
}

/// Writes `time,part1,…` rows.
pub fn write_compositions<T: Real>(
    path: &Path,
    parts: &[String],
    labels: &[String],
    compositions: &[Composition<T>],
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(std::iter::once("time").chain(parts.iter().map(String::as_str)))?;
    for (label, c) in labels.iter().zip(compositions) {
        let mut row = vec![label.clone()];
        row.extend(c.parts().iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Observations grouped by time label, in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries<T> {
    pub labels: Vec<String>,
    pub groups: Vec<Vec<Vec<T>>>,
    /// Number of coordinates per observation.
    pub dim: usize,
}

/// Reads `time,coord1[,coord2]` rows.
pub fn read_samples<T: Real>(path: &Path) -> Result<SampleSeries<T>> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let dim = headers.len().saturating_sub(1);
    if !(1..=2).contains(&dim) {
        return Err(parse_error(path, 1, "expected columns time,coord1[,coord2]"));
    }
    let mut series = SampleSeries {
        labels: Vec::new(),
        groups: Vec::new(),
        dim,
    };
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let point = record
            .iter()
            .skip(1)
            .zip(headers.iter().skip(1))
            .map(|(field, column)| parse_number::<T>(path, line, column, field))
            .collect::<Result<Vec<T>>>()?;
        let label = &record[0];
        match series.labels.iter().position(|l| l == label) {
            Some(i) => series.groups[i].push(point),
            None => {
                series.labels.push(label.to_string());
                series.groups.push(vec![point]);
            }
        }
    }
    if series.groups.is_empty() {
        return Err(Error::EmptyInput("sample CSV has no data rows"));
    }
    Ok(series)
}

/// Writes `time,coord1[,coord2]` rows.
pub fn write_samples<T: Real>(path: &Path, labels: &[String], groups: &[Vec<Vec<T>>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let dim = groups.iter().flatten().next().map_or(1, Vec::len);
    let header: Vec<String> = std::iter::once("time".to_string())
        .chain((1..=dim).map(|i| format!("coord{i}")))
        .collect();
    writer.write_record(&header)?;
    for (label, group) in labels.iter().zip(groups) {
        for point in group {
            let mut row = vec![label.clone()];
            row.extend(point.iter().map(|v| v.to_string()));
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Density grids on a common lattice, one per time label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DensitySeries<T> {
    pub labels: Vec<String>,
    pub grids: Vec<DensityGrid<T>>,
}

#[derive(Deserialize)]
#[serde(untagged, bound = "T: Real")]
enum DensitySeriesInput<T> {
    Labelled(DensitySeries<T>),
    Bare(Vec<DensityGrid<T>>),
}

impl<T: Real> DensitySeries<T> {
    pub fn axes(&self) -> &[Axis<T>] {
        self.grids[0].axes()
    }
}

/// Parses either `{"labels": [...], "grids": [...]}` or a bare array of grids.
pub fn parse_density_series<T: Real>(text: &str) -> Result<DensitySeries<T>> {
    let series = match serde_json::from_str::<DensitySeriesInput<T>>(text)? {
        DensitySeriesInput::Labelled(s) => s,
        DensitySeriesInput::Bare(grids) => DensitySeries {
            labels: (1..=grids.len()).map(|i| i.to_string()).collect(),
            grids,
        },
    };
    if series.grids.is_empty() {
        return Err(Error::EmptyInput("density series has no grids"));
    }
    if series.labels.len() != series.grids.len() {
        return Err(Error::DimensionMismatch {
            left: series.labels.len(),
            right: series.grids.len(),
        });
    }
    if series.grids.iter().any(|g| !g.same_grid(&series.grids[0])) {
        return Err(Error::GridMismatch);
    }
    Ok(series)
}

pub fn read_density_series<T: Real>(path: &Path) -> Result<DensitySeries<T>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_density_series(&text).map_err(|e| match e {
        Error::Json(j) => parse_error(path, j.line() as u64, j.to_string()),
        other => other,
    })
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// `time,x,y` positions in the ternary diagram.
pub fn write_ternary<T: Real>(path: &Path, labels: &[String], compositions: &[Composition<T>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["time", "x", "y"])?;
    for (label, c) in labels.iter().zip(compositions) {
        let (x, y) = ternary(c)?;
        writer.write_record([label.clone(), x.to_string(), y.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// `time,lon,lat` in degrees of points on S².
pub fn write_lon_lat<T: Real>(path: &Path, labels: &[String], points: &[SpherePoint<T>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["time", "lon", "lat"])?;
    for (label, x) in labels.iter().zip(points) {
        let (lon, lat) = lon_lat(x)?;
        writer.write_record([label.clone(), lon.to_degrees().to_string(), lat.to_degrees().to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Long-format contour data: `time,x[,y],density` at cell centers.
pub fn write_contour<T: Real>(path: &Path, labels: &[String], grids: &[DensityGrid<T>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let Some(first) = grids.first() else {
        return Err(Error::EmptyInput("no grids to write"));
    };
    let axes = first.axes();
    let mut header = vec!["time", "x"];
    if axes.len() == 2 {
        header.push("y");
    }
    header.push("density");
    writer.write_record(&header)?;
    for (label, grid) in labels.iter().zip(grids) {
        if !grid.same_grid(first) {
            return Err(Error::GridMismatch);
        }
        let centers: Vec<Vec<T>> = axes.iter().map(Axis::centers).collect();
        for (flat, v) in grid.values().iter().enumerate() {
            let mut row = vec![label.clone()];
            let mut coords = Vec::with_capacity(axes.len());
            let mut rest = flat;
            for (axis, c) in axes.iter().zip(&centers).rev() {
                coords.push(c[rest % axis.cells]);
                rest /= axis.cells;
            }
            row.extend(coords.iter().rev().map(|c| c.to_string()));
            row.push(v.to_string());
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}
