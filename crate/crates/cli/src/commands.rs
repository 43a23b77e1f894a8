use std::fs;
use std::path::Path;

use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use spherear::io::{write_compositions, write_contour, write_json, write_lon_lat, write_ternary, DensitySeries};
use spherear::sar::{
    build_differenced_series, check_stationarity, fit_series, in_sample_fit, predict as predict_model,
    read_model_json, write_model_json, StationarityReport,
};
use spherear::simulate::{monte_carlo_lambda_clt, simulate_sar, smooth_frame, MonteCarloConfig};
use spherear::transforms::{fpsr, fpsr_inverse, psr, GridSpec};
use spherear::{Composition, DensityGrid, Error, InnovationSpec, Projection, Result, SimulationRun, Variant};

use crate::data::{load, DensityOptions, Domain, InputFormat, Observation};
use crate::{FitArgs, PredictArgs, SimulateArgs, ValidateArgs};

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad coefficient {s:?} in {text:?}")))
        })
        .collect()
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
struct FitDistance<'a> {
    time: &'a str,
    distance: f64,
}

#[derive(Serialize)]
struct Holdout<'a> {
    time: &'a str,
    distance: f64,
    carry_forward_distance: f64,
    projection: Projection,
    fired: bool,
    c1: Option<f64>,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    variant: Variant,
    p: usize,
    alphas: &'a [f64],
    /// `λ̂_0 … λ̂_p`
    lags: &'a [f64],
    stationarity: &'a StationarityReport,
    residual_norms: &'a [f64],
    fit_distances: Vec<FitDistance<'a>>,
    n_fit: usize,
    holdout: Option<Holdout<'a>>,
    warnings: &'a [String],
}

pub fn fit(args: FitArgs) -> Result<()> {
    if args.order == 0 {
        return Err(Error::InvalidArgument("--order must be at least 1".into()));
    }
    let options = DensityOptions {
        grid: args.data.grid.as_deref(),
        bandwidth_scale: args.data.bandwidth_scale,
    };
    let data = load(&args.input, args.data.format, &options)?;
    let n = data.points.len();
    if args.holdout >= n {
        return Err(Error::InvalidArgument(format!("cannot hold out {} of {n} observations", args.holdout)));
    }
    let train = &data.points[..n - args.holdout];
    if train.len() <= args.order + 1 {
        return Err(Error::OrderTooLarge {
            p: args.order,
            n: train.len(),
        });
    }
    let series = build_differenced_series(train, args.variant)?;
    let model = fit_series(&series, args.order)?;

    let fit_distances = in_sample_fit(&model, &series, args.projection)?
        .iter()
        .map(|f| {
            Ok(FitDistance {
                time: &data.labels[f.index],
                distance: data.domain.distance(&f.predicted, &train[f.index])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let holdout = if args.holdout > 0 {
        let prediction = predict_model(&model, args.projection)?;
        let target = &data.points[train.len()];
        Some(Holdout {
            time: &data.labels[train.len()],
            distance: data.domain.distance(&prediction.point, target)?,
            carry_forward_distance: data.domain.distance(&train[train.len() - 1], target)?,
            projection: prediction.projection,
            fired: prediction.fired,
            c1: prediction.c1,
        })
    } else {
        None
    };

    prepare_out(&args.out)?;
    let mut source = data.source(&args.input);
    source["labels"] = json!(&data.labels[..train.len()]);
    fs::write(args.out.join("model.json"), write_model_json(&model, Some(source))? + "\n")?;
    let diagnostics = Diagnostics {
        variant: model.variant,
        p: model.p,
        alphas: &model.alphas,
        lags: &model.autocov.lags,
        stationarity: &model.stationarity,
        residual_norms: &model.residual_norms,
        fit_distances,
        n_fit: train.len(),
        holdout,
        warnings: &data.warnings,
    };
    write_json(&args.out.join("diagnostics.json"), &diagnostics)?;

    let alphas: Vec<String> = model.alphas.iter().map(|a| format!("{a:.4}")).collect();
    println!("{} p={} alphas=[{}]", model.variant, model.p, alphas.join(", "));
    if let Some(h) = &diagnostics.holdout {
        println!(
            "holdout {}: distance {:.4} (carry-forward {:.4})",
            h.time, h.distance, h.carry_forward_distance
        );
    }
    if !model.stationarity.stationary {
        warn!("fitted coefficients are not stationary");
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictionFile<'a> {
    variant: Variant,
    p: usize,
    projection: Projection,
    fired: bool,
    c1: Option<f64>,
    point: &'a spherear::AmbientVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    composition: Option<&'a Composition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<&'a DensityGrid>,
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model)?;
    let (model, source) = read_model_json::<f64>(&text)?;
    let domain: Option<Domain> = source
        .as_ref()
        .and_then(|s| s.get("domain"))
        .map(|d| serde_json::from_value(d.clone()))
        .transpose()?;
    let prediction = predict_model(&model, args.projection)?;
    let observation = match &domain {
        Some(domain) => match domain.back_transform(&prediction.point) {
            Ok(obs) => Some(obs),
            Err(err) => {
                warn!("prediction cannot be mapped back to the data domain: {err}");
                None
            }
        },
        None => None,
    };
    let (composition, density) = match &observation {
        Some(Observation::Composition(c)) => (Some(c), None),
        Some(Observation::Density(d)) => (None, Some(d)),
        None => (None, None),
    };
    prepare_out(&args.out)?;
    let file = PredictionFile {
        variant: model.variant,
        p: model.p,
        projection: prediction.projection,
        fired: prediction.fired,
        c1: prediction.c1,
        point: prediction.point.vector(),
        composition,
        density,
    };
    write_json(&args.out.join("prediction.json"), &file)?;
    if let Some(c) = composition {
        let parts: Vec<String> = c.parts().iter().map(|v| format!("{v:.6}")).collect();
        println!("predicted composition [{}]", parts.join(", "));
    }
    Ok(())
}

/// Standard normal density on the grid, product over axes.
fn normal_base(axes: &[spherear::Axis]) -> Result<DensityGrid> {
    let centers: Vec<Vec<f64>> = axes.iter().map(|a| a.centers()).collect();
    let cells: usize = axes.iter().map(|a| a.cells).product();
    let values = (0..cells)
        .map(|flat| {
            let mut rest = flat;
            let mut sq = 0.0;
            for (axis, c) in axes.iter().zip(&centers).rev() {
                let x = c[rest % axis.cells];
                rest /= axis.cells;
                sq += x * x;
            }
            (-0.5 * sq).exp()
        })
        .collect();
    DensityGrid::normalized(axes.to_vec(), values)
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let alphas = parse_list(&args.alphas)?;
    let (base, spec) = match args.format {
        InputFormat::Composition => {
            let d = args.parts;
            let base = psr(&Composition::normalized(vec![1.0; d], 1.0)?)?;
            let spec = InnovationSpec::standard(d, args.k.unwrap_or(d), args.sigma)?;
            (base, spec)
        }
        InputFormat::Density => {
            let axes = args.grid.parse::<GridSpec<f64>>()?.axes;
            let base = fpsr(&normal_base(&axes)?)?;
            let frame = smooth_frame(&base, &axes, args.k.unwrap_or(4))?;
            (base, InnovationSpec::with_frame(frame, args.sigma)?)
        }
        InputFormat::Samples => {
            return Err(Error::InvalidArgument("simulate writes composition or density series".into()));
        }
    };
    let mean_op = if args.drift != 0.0 {
        let mut coefs = vec![0.0; spec.atom_count()];
        coefs[0] = args.drift;
        Some(spec.operator(&coefs)?)
    } else {
        None
    };
    let run = SimulationRun {
        variant: args.variant,
        alphas: alphas.clone(),
        mean_op,
        base,
        n: args.length,
        burn_in: None,
        seed: args.seed,
        replicate: 0,
        innovations: spec.clone(),
        force: args.force,
    };
    let points = simulate_sar(&run)?;
    let labels: Vec<String> = (1..=points.len()).map(|t| t.to_string()).collect();

    prepare_out(&args.out)?;
    let file = match args.format {
        InputFormat::Composition => {
            let comps = points
                .iter()
                .map(|x| Composition::normalized(x.values().iter().map(|v| v * v).collect(), 1.0))
                .collect::<Result<Vec<_>>>()?;
            let parts: Vec<String> = (1..=args.parts).map(|i| format!("part{i}")).collect();
            let path = args.out.join("series.csv");
            write_compositions(&path, &parts, &labels, &comps)?;
            path
        }
        _ => {
            let axes = args.grid.parse::<GridSpec<f64>>()?.axes;
            let grids = points
                .iter()
                .map(|x| fpsr_inverse(x, &axes))
                .collect::<Result<Vec<_>>>()?;
            let path = args.out.join("series.json");
            write_json(&path, &DensitySeries { labels, grids })?;
            path
        }
    };
    let manifest = json!({
        "variant": args.variant,
        "alphas": alphas,
        "length": args.length,
        "seed": args.seed,
        "sigma": args.sigma,
        "k": spec.k(),
        "drift": args.drift,
        "format": args.format,
        "forced": args.force,
        "stationarity": check_stationarity(&alphas),
        "burn_in": run.burn_in.unwrap_or(spherear::simulate::BURN_IN_PER_LAG * alphas.len()),
    });
    write_json(&args.out.join("simulation.json"), &manifest)?;
    info!("wrote {}", file.display());
    println!("wrote {} points to {}", points.len(), file.display());
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    match &args.input {
        Some(input) => validate_data(input, &args),
        None => validate_monte_carlo(&args),
    }
}

fn validate_data(input: &Path, args: &ValidateArgs) -> Result<()> {
    let options = DensityOptions {
        grid: args.data.grid.as_deref(),
        bandwidth_scale: args.data.bandwidth_scale,
    };
    let data = load(input, args.data.format, &options)?;
    prepare_out(&args.out)?;
    let mut plots = Vec::new();
    match &data.domain {
        Domain::Composition { parts } if parts.len() == 3 => {
            let comps: Vec<Composition> = data
                .observations
                .iter()
                .filter_map(|o| match o {
                    Observation::Composition(c) => Some(c.clone()),
                    Observation::Density(_) => None,
                })
                .collect();
            write_ternary(&args.out.join("ternary.csv"), &data.labels, &comps)?;
            write_lon_lat(&args.out.join("lonlat.csv"), &data.labels, &data.points)?;
            plots.extend(["ternary.csv", "lonlat.csv"]);
        }
        Domain::Composition { parts } => {
            warn!("plot data is only emitted for three-part compositions, got {}", parts.len());
        }
        Domain::Density { .. } => {
            let grids: Vec<DensityGrid> = data
                .observations
                .iter()
                .filter_map(|o| match o {
                    Observation::Density(g) => Some(g.clone()),
                    Observation::Composition(_) => None,
                })
                .collect();
            write_contour(&args.out.join("contour.csv"), &data.labels, &grids)?;
            plots.push("contour.csv");
        }
    }
    let summary = json!({
        "input": input.display().to_string(),
        "format": data.format,
        "observations": data.points.len(),
        "dimension": data.points[0].dim(),
        "labels": data.labels,
        "warnings": data.warnings,
        "plots": plots,
    });
    write_json(&args.out.join("validation.json"), &summary)?;
    println!("{} observations valid; wrote {}", data.points.len(), plots.join(", "));
    Ok(())
}

fn validate_monte_carlo(args: &ValidateArgs) -> Result<()> {
    let config = MonteCarloConfig {
        alphas: parse_list(&args.alphas)?,
        k: args.k,
        sigma: args.sigma,
        n: args.length,
        replicates: args.replicates,
        lags: args.order,
        seed: args.seed,
        burn_in: None,
        threads: None,
    };
    let report = monte_carlo_lambda_clt(&config)?;
    prepare_out(&args.out)?;
    write_json(&args.out.join("report.json"), &report)?;
    println!(
        "max relative difference (|V| > 1e-3): {:.4}; degenerate fits: {}",
        report.max_relative_diff(1e-3),
        report.degenerate_fits
    );
    Ok(())
}
