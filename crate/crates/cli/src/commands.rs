use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use noisecontrib::io::{
    decomposition_csv, decomposition_json, model_from_json, model_to_json, scenarios_from_json,
    spectrum_csv, stack_csv, summary_csv,
};
use noisecontrib::{
    cross_spectrum, demean, fit_least_squares, fit_yule_walker, load_csv, make_grid, monte_carlo,
    noise_correlation, residuals, sample_autocovariance, select_order_aic, Error, Mode,
    MultivariateSeries, NoiseScenario, StackKind, VarModel,
};
use thiserror::Error as ThisError;

use crate::output::{file_stem, OutputSet};
use crate::{ContribArgs, Estimator, FitArgs, Format, ModeArg, ReplayArgs, SeriesArgs, SimulateArgs};

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{context}: {source}")]
    Output {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load_series(args: &SeriesArgs) -> CliResult<MultivariateSeries> {
    let series = load_csv(&args.input, !args.no_header, args.sampling_interval)?;
    Ok(if args.no_demean { series } else { demean(&series) })
}

fn load_model(path: &Path) -> CliResult<VarModel> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&text).map_err(|e| match e {
        Error::Json(j) => CliError::Usage(format!("{}: malformed model document: {j}", path.display())),
        other => CliError::Usage(format!("{}: {other}", path.display())),
    })
}

fn commit(out: OutputSet, dir: &Path) -> CliResult<()> {
    let written = out.commit(dir).map_err(|source| CliError::Output {
        context: format!("cannot write outputs to {}", dir.display()),
        source,
    })?;
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn warn_if_unstable(model: &VarModel) -> f64 {
    let radius = model.spectral_radius();
    if radius >= 1.0 {
        eprintln!("warning: model is not stable (companion spectral radius {radius:.6})");
    }
    radius
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let series = load_series(&args.series)?;
    let aic = match args.max_order {
        Some(max) => Some(select_order_aic(&series, max)?),
        None => None,
    };
    let order = aic
        .as_ref()
        .map(|t| t.best_order)
        .or(args.order)
        .expect("clap enforces --order or --max-order");

    let model = match args.estimator {
        Estimator::Ls => fit_least_squares(&series, order)?,
        Estimator::Yw => {
            let cov = sample_autocovariance(&series, order)?;
            fit_yule_walker(&cov, order)?
                .with_names(series.names().to_vec())?
                .with_sampling_interval(series.sampling_interval())?
        }
    };
    let radius = warn_if_unstable(&model);
    let corr = noise_correlation(&model, series.len())?;
    let names = model.channel_names();
    let k = model.k();

    let mut out = OutputSet::default();
    out.add("model.json", model_to_json(&model));

    let mut report = String::new();
    let _ = writeln!(report, "observations: {}", series.len());
    let _ = writeln!(report, "channels: {}", names.join(", "));
    let _ = writeln!(
        report,
        "estimator: {}",
        match args.estimator {
            Estimator::Ls => "least squares",
            Estimator::Yw => "yule-walker",
        }
    );
    let _ = writeln!(report, "order: {order}");
    let _ = writeln!(
        report,
        "companion spectral radius: {radius:.6} ({})",
        if radius < 1.0 { "stable" } else { "NOT stable" }
    );
    if let Some(table) = &aic {
        let _ = writeln!(report, "\nAIC (common sample of {} rows):", table.effective_len);
        for (m, v) in table.aic.iter().enumerate() {
            let mark = if m == table.best_order { "  <- best" } else { "" };
            let _ = writeln!(report, "  {m:>3}  {v:.6}{mark}");
        }
    }
    let _ = writeln!(
        report,
        "\nnoise correlation (* exceeds 1/sqrt(N+2) = {:.4}):",
        corr.threshold
    );
    for (i, name) in names.iter().enumerate() {
        let cells: Vec<String> = (0..k)
            .map(|j| {
                let flag = if corr.is_flagged(i, j) { "*" } else { " " };
                format!("{:>8.4}{flag}", corr.matrix[(i, j)])
            })
            .collect();
        let _ = writeln!(report, "  {:<12}{}", name, cells.join(" "));
    }
    out.add("fit_report.txt", report);

    if args.out.wants(Format::Csv) {
        if let Some(table) = &aic {
            let mut csv = String::from("order,aic,best\n");
            for (m, v) in table.aic.iter().enumerate() {
                let _ = writeln!(csv, "{m},{v:?},{}", m == table.best_order);
            }
            out.add("aic.csv", csv);
        }
        let mut csv = String::from("channel_i,channel_j,correlation,threshold,exceeds_threshold\n");
        for i in 0..k {
            for j in i + 1..k {
                let _ = writeln!(
                    csv,
                    "{},{},{:?},{:?},{}",
                    names[i],
                    names[j],
                    corr.matrix[(i, j)],
                    corr.threshold,
                    corr.is_flagged(i, j)
                );
            }
        }
        out.add("noise_correlation.csv", csv);
    }
    if args.out.wants(Format::Json) {
        let matrix: Vec<Vec<f64>> = corr.matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
        let doc = serde_json::json!({
            "observations": series.len(),
            "order": order,
            "spectral_radius": radius,
            "stable": radius < 1.0,
            "aic": aic.as_ref().map(|t| serde_json::json!({
                "values": t.aic,
                "best_order": t.best_order,
                "effective_len": t.effective_len,
            })),
            "noise_correlation": {
                "channel_names": names,
                "matrix": matrix,
                "threshold": corr.threshold,
            },
        });
        out.add("fit_report.json", serde_json::to_string_pretty(&doc).expect("report serialises"));
    }
    commit(out, &args.out.out_dir)
}

fn explain_singular(e: Error) -> CliError {
    match e {
        Error::SingularFrequency { frequency } => {
            eprintln!(
                "hint: the model has a (near) unit root at f = {frequency}; try a smaller --f-max or a different grid"
            );
            CliError::Core(e)
        }
        other => CliError::Core(other),
    }
}

pub fn contrib(args: &ContribArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let grid = make_grid(args.grid_points, args.f_max)?;
    warn_if_unstable(&model);

    let cs = cross_spectrum(&model, &grid).map_err(explain_singular)?;
    let dec = match args.mode {
        ModeArg::Classical => noisecontrib::akaike_relative(&model, &grid),
        ModeArg::Extended => noisecontrib::extended_relative(&model, &grid),
    }
    .map_err(explain_singular)?;
    debug_assert_eq!(
        dec.mode(),
        match args.mode {
            ModeArg::Classical => Mode::Classical,
            ModeArg::Extended => Mode::Extended,
        }
    );

    let mut out = OutputSet::default();
    if args.out.wants(Format::Csv) {
        out.add("spectrum.csv", spectrum_csv(&cs));
        for (i, name) in model.channel_names().iter().enumerate() {
            let stem = format!("contrib_{}_{}", i + 1, file_stem(name));
            out.add(format!("{stem}_absolute.csv"), decomposition_csv(&dec, i, StackKind::Absolute)?);
            out.add(format!("{stem}_relative.csv"), decomposition_csv(&dec, i, StackKind::Relative)?);
            out.add(format!("{stem}_stack_absolute.csv"), stack_csv(&dec, i, StackKind::Absolute)?);
            out.add(format!("{stem}_stack_relative.csv"), stack_csv(&dec, i, StackKind::Relative)?);
        }
    }
    if args.out.wants(Format::Json) {
        out.add("decomposition.json", decomposition_json(&dec));
    }
    commit(out, &args.out.out_dir)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    if args.replicates == 0 || args.length == 0 {
        return Err(CliError::Usage("--replicates and --length must be positive".into()));
    }
    let scenarios = match &args.scenarios {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            scenarios_from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => NoiseScenario::single_pair_family(&model)
            .map_err(|e| CliError::Usage(format!("model covariance gives an invalid scenario: {e}")))?,
    };
    if let Some(bad) = scenarios.iter().find(|s| s.k() != model.k()) {
        return Err(CliError::Usage(format!(
            "scenario {} has {} channels but the model has {}",
            bad.label(),
            bad.k(),
            model.k()
        )));
    }
    warn_if_unstable(&model);

    let summaries = monte_carlo(&model, &scenarios, args.replicates, args.length, args.seed)?;
    if args.replicates == 1 {
        eprintln!("note: a single replicate was run; sd_var is reported as 0");
    }

    let mut out = OutputSet::default();
    if args.out.wants(Format::Csv) {
        out.add("simulation_summary.csv", summary_csv(&summaries, model.channel_names()));
    }
    if args.out.wants(Format::Json) {
        let doc = serde_json::json!({
            "channel_names": model.channel_names(),
            "summaries": summaries,
            "ratio_to_baseline": noisecontrib::simulation::ratios_to_baseline(&summaries),
        });
        out.add(
            "simulation_summary.json",
            serde_json::to_string_pretty(&doc).expect("summary serialises"),
        );
    }
    commit(out, &args.out.out_dir)
}

fn series_csv(series: &MultivariateSeries) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    series.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn replay(args: &ReplayArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let series = load_series(&args.series)?;
    let k = model.k();
    if series.channels() != k {
        return Err(CliError::Usage(format!(
            "input has {} channels but the model has {k}",
            series.channels()
        )));
    }
    if let Some(c) = args.channel {
        if c == 0 || c > k {
            return Err(CliError::Usage(format!("--channel {c} is out of range 1..={k}")));
        }
    }
    let m = model.order();
    let start = match args.replay_start {
        Some(n) if n < m + 1 || n > series.len() => {
            return Err(CliError::Usage(format!(
                "--replay-start {n} must lie in {}..={}",
                m + 1,
                series.len()
            )))
        }
        Some(n) => n - 1,
        None => m,
    };
    let resid = residuals(&model, &series)?;
    let run = |active: &[bool]| noisecontrib::replay(&model, &resid, &series, active, Some(start));

    let mut out = OutputSet::default();
    let mut log = String::new();

    let full = run(&vec![true; k])?;
    let scale = series.values().amax().max(f64::MIN_POSITIVE);
    let err = (full.values() - series.values()).rows(start, series.len() - start).amax() / scale;
    let verdict = if err <= 1e-9 { "PASS" } else { "FAIL" };
    let _ = writeln!(
        log,
        "{verdict} full-noise replay reproduces the input from sample {} on (max relative error {err:.3e})",
        start + 1
    );

    let zero = run(&vec![false; k])?;
    let channels: Vec<usize> = match args.channel {
        Some(c) => vec![c - 1],
        None => (0..k).collect(),
    };
    let mut sum = zero.values().clone();
    for &c in &channels {
        let mut active = vec![false; k];
        active[c] = true;
        let y = run(&active)?;
        sum += y.values() - zero.values();
        let name = &model.channel_names()[c];
        out.add(format!("replay_{}_{}.csv", c + 1, file_stem(name)), series_csv(&y)?);
    }
    out.add("replay_zero.csv", series_csv(&zero)?);
    if args.channel.is_none() {
        let total = MultivariateSeries::new(series.names().to_vec(), sum, series.sampling_interval())?;
        let gap = (total.values() - full.values()).amax() / scale;
        let verdict = if gap <= 1e-9 { "PASS" } else { "FAIL" };
        let _ = writeln!(
            log,
            "{verdict} sum of single-channel replays equals the full replay (max relative error {gap:.3e})"
        );
        out.add("replay_sum.csv", series_csv(&total)?);
    }
    eprint!("{log}");
    out.add("replay_log.txt", log);
    commit(out, &args.out.out_dir)
}
