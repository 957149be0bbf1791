//! Subcommand implementations. Each writes its artifacts and one manifest
//! into its output directory and returns a short report for stdout.

use std::path::{Path, PathBuf};

use breedsim_core::fock::fidelity_to_pure;
use breedsim_core::optics::Breeder;
use breedsim_core::protocol::{
    calibrate_beta, closed_form_rate, fidelity_vs_storage_curve, rate_z_score, simulate_timeline,
    BreedingModel, Correction, PipelineStates, ProtocolConfig,
};
use breedsim_core::tomography::{
    bootstrap, percentile, sample_plan, BootstrapSettings, MaxLikProblem, ReconstructionResult,
};
use breedsim_core::wigner::WignerGrid;
use breedsim_core::{fidelity, target_cat, DensityOperator, FockCutoff, StateVector};
use serde::Serialize;

use crate::cli::{
    BreedArgs, Command, Common, CorrectionArg, CurveArgs, GridArgs, SampleArgs, SimulateArgs,
    StageArg, TomographyArgs, WignerArgs, OUTPUT_ROOT_ENV,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, DensityMetadata, ReconstructionMetadata};
use crate::manifest::RunManifest;

/// Lines printed on success.
pub type Report = Vec<String>;

pub fn run(command: &Command) -> CliResult<Report> {
    let common = command.common();
    let config = resolve_config(common)?;
    let out = output_dir(common.out.as_deref(), command.name())?;
    let mut manifest = RunManifest::start(command.name(), &config);
    let mut report = match command {
        Command::Breed(a) => breed(a, &config, &out, &mut manifest)?,
        Command::Curve(a) => curve(a, &config, &out, &mut manifest)?,
        Command::Wigner(a) => wigner(a, &config, &out, &mut manifest)?,
        Command::Simulate(a) => simulate(a, &config, &out, &mut manifest)?,
        Command::Sample(a) => sample(a, &config, &out, &mut manifest)?,
        Command::Tomography(a) => tomography(a, &config, &out, &mut manifest)?,
    };
    let path = manifest.finish(&out)?;
    report.push(format!("manifest: {}", path.display()));
    Ok(report)
}

pub fn resolve_config(common: &Common) -> CliResult<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    common.overrides.apply(&mut config);
    Ok(config)
}

/// `--out`, else `$BREEDSIM_OUTPUT_ROOT/<command>`, else
/// `./breedsim-output/<command>`.
pub fn output_dir(explicit: Option<&Path>, command: &str) -> CliResult<PathBuf> {
    let dir = match explicit {
        Some(p) => p.to_owned(),
        None => std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("breedsim-output"))
            .join(command),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

/// Protocol configuration with `beta_elec` solved when calibration is asked for.
fn protocol(config: &RunConfig, manifest: &mut RunManifest) -> CliResult<ProtocolConfig> {
    let mut p = config.protocol()?;
    if let Some(rate) = config.rate.calibrate_to_hz {
        let mix = BreedingModel::new(&p, p.n_max)?.mixture(p.n_max)?;
        p.beta_elec = calibrate_beta(&p, mix.p_condition, rate)?;
        manifest.option("calibrated_beta_elec", p.beta_elec);
    }
    Ok(p)
}

fn check_grid(grid: &GridArgs) -> CliResult<()> {
    if !(grid.half_width > 0.0 && grid.half_width.is_finite()) {
        return Err(CliError::Input(format!(
            "grid half-width must be positive, got {}",
            grid.half_width
        )));
    }
    if grid.points < 2 {
        return Err(CliError::Input(format!(
            "grid needs at least 2 points per axis, got {}",
            grid.points
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Extremum {
    x: f64,
    p: f64,
    w: f64,
}

impl From<(f64, f64, f64)> for Extremum {
    fn from((x, p, w): (f64, f64, f64)) -> Self {
        Self { x, p, w }
    }
}

fn padded(rho: &DensityOperator, cutoff: FockCutoff) -> DensityOperator {
    if rho.cutoff() == cutoff {
        rho.clone()
    } else {
        rho.with_cutoff(cutoff).0
    }
}

fn target_fidelity(rho: &DensityOperator, target: &StateVector) -> CliResult<f64> {
    if rho.dim() > target.cutoff().dim() {
        return Err(CliError::Input(format!(
            "state cutoff {} exceeds the target cutoff {}; raise --cutoff",
            rho.cutoff().n_max(),
            target.cutoff().n_max()
        )));
    }
    Ok(fidelity_to_pure(&padded(rho, target.cutoff()), target)?)
}

/// Fidelity after embedding both states in the larger of their spaces.
fn state_fidelity(a: &DensityOperator, b: &DensityOperator) -> CliResult<f64> {
    let cutoff = if a.dim() >= b.dim() {
        a.cutoff()
    } else {
        b.cutoff()
    };
    Ok(fidelity(&padded(a, cutoff), &padded(b, cutoff))?)
}

#[derive(Debug, Serialize)]
struct BreedSummary {
    single: SingleBreed,
    pipeline: PipelineSummary,
}

#[derive(Debug, Serialize)]
struct SingleBreed {
    herald_probability: f64,
    fidelity_to_target: f64,
    wigner_min: Extremum,
}

#[derive(Debug, Serialize)]
struct PipelineSummary {
    n_max: u32,
    beta_elec: f64,
    p_condition: f64,
    rate_hz: f64,
    fidelity_at_creation: f64,
    fidelity_after_readout: f64,
    /// Stored state with the homodyne loss corrected.
    wigner_min_detection_corrected: Extremum,
}

fn breed(
    args: &BreedArgs,
    config: &RunConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<Report> {
    check_grid(&args.grid)?;
    manifest.option("grid_half_width", args.grid.half_width);
    manifest.option("grid_points", args.grid.points);
    let p = protocol(config, manifest)?;
    let eta = if p.condition_with_detector_loss {
        p.eta_homodyne
    } else {
        1.0
    };
    let photon = p.photon.density(p.cutoff)?;
    let herald = Breeder::new(&p.window, p.cutoff, eta)?.breed(&photon, &photon)?;
    let target = target_cat(p.target, p.cutoff)?;
    let grid =
        |rho: &DensityOperator| WignerGrid::square(rho, args.grid.half_width, args.grid.points);
    let single = SingleBreed {
        herald_probability: herald.probability,
        fidelity_to_target: fidelity_to_pure(&herald.state, &target)?,
        wigner_min: grid(&herald.state).minimum().into(),
    };

    let pipe = PipelineStates::simulate(&p)?;
    let pipeline = PipelineSummary {
        n_max: p.n_max,
        beta_elec: p.beta_elec,
        p_condition: pipe.p_condition,
        rate_hz: pipe.rate_hz,
        fidelity_at_creation: fidelity_to_pure(&pipe.created, &target)?,
        fidelity_after_readout: fidelity_to_pure(&pipe.stored, &target)?,
        wigner_min_detection_corrected: grid(pipe.corrected(Correction::Detection))
            .minimum()
            .into(),
    };

    let describe = |what: &str| DensityMetadata {
        description: what.to_owned(),
        ..Default::default()
    };
    io::write_density(
        &out.join("heralded_state.csv"),
        &herald.state,
        &describe("single breed of two fresh photons"),
    )?;
    io::write_density(
        &out.join("created_state.csv"),
        &pipe.created,
        &describe("pipeline state at creation"),
    )?;
    for name in [
        "heralded_state.csv",
        "heralded_state.toml",
        "created_state.csv",
        "created_state.toml",
    ] {
        manifest.artifact(name);
    }
    let summary = BreedSummary { single, pipeline };
    io::write_toml(&out.join("breed.toml"), &summary)?;
    manifest.artifact("breed.toml");

    let s = &summary.single;
    let q = &summary.pipeline;
    Ok(vec![
        format!("herald probability: {:.6}", s.herald_probability),
        format!(
            "fidelity to target (single breed): {:.6}",
            s.fidelity_to_target
        ),
        format!(
            "wigner minimum (single breed): {:.6} at ({:.3}, {:.3})",
            s.wigner_min.w, s.wigner_min.x, s.wigner_min.p
        ),
        format!(
            "pipeline n_max {}: p_condition {:.6}, rate {:.1} Hz",
            q.n_max, q.p_condition, q.rate_hz
        ),
        format!("fidelity at creation: {:.6}", q.fidelity_at_creation),
        format!(
            "fidelity after {} readout trips: {:.6}",
            p.readout_trips, q.fidelity_after_readout
        ),
        format!(
            "wigner minimum (stored, detection-corrected): {:.6}",
            q.wigner_min_detection_corrected.w
        ),
    ])
}

/// Parses `1,5,10`.
pub fn parse_n_max_values(text: &str) -> CliResult<Vec<u32>> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .map_err(|_| CliError::Input(format!("`{s}` is not a storage limit")))
        })
        .collect::<CliResult<Vec<u32>>>()?;
    if values.is_empty() {
        return Err(CliError::Input("the n_max list is empty".into()));
    }
    Ok(values)
}

/// Parses `start:end[:step]`, inclusive.
pub fn parse_n_max_range(text: &str) -> CliResult<Vec<u32>> {
    let bad = || CliError::Input(format!("`{text}` is not a range start:end[:step]"));
    let parts = text
        .split(':')
        .map(|s| s.trim().parse::<u32>().map_err(|_| bad()))
        .collect::<CliResult<Vec<u32>>>()?;
    let (start, end, step) = match parts[..] {
        [a, b] => (a, b, 1),
        [a, b, s] => (a, b, s),
        _ => return Err(bad()),
    };
    if step == 0 || start > end {
        return Err(CliError::Input(format!(
            "the n_max range `{text}` is empty"
        )));
    }
    Ok((start..=end).step_by(step as usize).collect())
}

fn curve(
    args: &CurveArgs,
    config: &RunConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<Report> {
    let values = match (&args.n_max_values, &args.n_max_range) {
        (Some(list), _) => parse_n_max_values(list)?,
        (None, Some(range)) => parse_n_max_range(range)?,
        (None, None) => parse_n_max_range("1:100")?,
    };
    manifest.option(
        "n_max_values",
        values
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    let p = protocol(config, manifest)?;
    let rows = fidelity_vs_storage_curve(&p, &values)?;
    io::write_curve(&out.join("curve.csv"), &rows)?;
    manifest.artifact("curve.csv");
    let above = rows.iter().filter(|r| r.rate_hz >= 1e3).count();
    let mut report = vec![format!(
        "{} points, beta_elec {:.6}, {} at or above 1 kHz",
        rows.len(),
        p.beta_elec,
        above
    )];
    report.push("n_max  rate_hz  fidelity_at_creation  fidelity_after_readout".into());
    report.extend(rows.iter().map(|r| {
        format!(
            "{}  {:.3}  {:.6}  {:.6}",
            r.n_max, r.rate_hz, r.fidelity_at_creation, r.fidelity_after_readout
        )
    }));
    Ok(report)
}

fn correction(arg: CorrectionArg) -> Correction {
    match arg {
        CorrectionArg::None => Correction::None,
        CorrectionArg::Storage => Correction::Storage,
        CorrectionArg::Detection => Correction::Detection,
        CorrectionArg::Both => Correction::Both,
    }
}

#[derive(Debug, Serialize)]
struct GridSummary {
    name: String,
    file: String,
    min: Extremum,
    max: Extremum,
}

fn wigner(
    args: &WignerArgs,
    config: &RunConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<Report> {
    check_grid(&args.grid)?;
    manifest.option("grid_half_width", args.grid.half_width);
    manifest.option("grid_points", args.grid.points);
    let mut states: Vec<(String, DensityOperator)> = Vec::new();
    if let Some(path) = &args.state {
        manifest.option("state", path.display());
        states.push(("state".into(), io::read_density(path)?.0));
    } else {
        let p = protocol(config, manifest)?;
        let pipe = PipelineStates::simulate(&p)?;
        let chosen: Vec<Correction> = if args.corrections.is_empty() {
            Correction::ALL.to_vec()
        } else {
            args.corrections.iter().copied().map(correction).collect()
        };
        manifest.option(
            "corrections",
            chosen
                .iter()
                .map(|c| c.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        for c in chosen {
            states.push((c.name().into(), pipe.corrected(c).clone()));
        }
    }
    if args.target {
        let cutoff = FockCutoff::new(config.numerics.cutoff)?;
        let target = target_cat(config.protocol()?.target, cutoff)?;
        states.push(("target".into(), DensityOperator::pure(&target)));
    }

    let mut summaries = Vec::new();
    let mut report = Vec::new();
    for (name, rho) in &states {
        let grid = WignerGrid::square(rho, args.grid.half_width, args.grid.points);
        let file = format!("wigner_{name}.csv");
        io::write_wigner(&out.join(&file), &grid)?;
        manifest.artifact(&file);
        let s = GridSummary {
            name: name.clone(),
            file,
            min: grid.minimum().into(),
            max: grid.maximum().into(),
        };
        report.push(format!(
            "{}: min {:.6} at ({:.3}, {:.3}), max {:.6} at ({:.3}, {:.3})",
            s.name, s.min.w, s.min.x, s.min.p, s.max.w, s.max.x, s.max.p
        ));
        summaries.push(s);
    }
    #[derive(Serialize)]
    struct Summary {
        grids: Vec<GridSummary>,
    }
    io::write_toml(&out.join("wigner.toml"), &Summary { grids: summaries })?;
    manifest.artifact("wigner.toml");
    Ok(report)
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    duration_s: f64,
    pulses: u64,
    heralds: u64,
    attempts: u64,
    dead_attempts: u64,
    successes: u64,
    estimated_rate_hz: f64,
    rate_std_error_hz: f64,
    closed_form_rate_hz: f64,
    z_score: f64,
    /// `|z| < 3`.
    consistent: bool,
    mean_first_photon_storage: f64,
    mean_output_fidelity: f64,
}

fn simulate(
    args: &SimulateArgs,
    config: &RunConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<Report> {
    if !(args.duration > 0.0 && args.duration.is_finite()) {
        return Err(CliError::Input(format!(
            "duration must be positive, got {}",
            args.duration
        )));
    }
    manifest.option("duration_s", args.duration);
    manifest.option("events", !args.no_events);
    let p = protocol(config, manifest)?;
    let table = BreedingModel::new(&p, p.n_max)?.herald_table(p.n_max);
    let timeline = simulate_timeline(&p, &table, args.duration, !args.no_events)?;
    let stats = &timeline.statistics;
    let closed = closed_form_rate(&p, &table);
    let z = rate_z_score(stats, closed);
    let summary = SimulationSummary {
        duration_s: stats.elapsed_s,
        pulses: stats.pulses,
        heralds: stats.heralds,
        attempts: stats.attempts,
        dead_attempts: stats.dead_attempts,
        successes: stats.successes,
        estimated_rate_hz: stats.estimated_rate_hz,
        rate_std_error_hz: stats.rate_std_error_hz,
        closed_form_rate_hz: closed,
        z_score: z,
        consistent: z.abs() < 3.0,
        mean_first_photon_storage: stats.mean_first_photon_storage,
        mean_output_fidelity: stats.mean_output_fidelity,
    };
    io::write_toml(&out.join("statistics.toml"), &summary)?;
    io::write_histogram(&out.join("storage_histogram.csv"), &stats.storage_histogram)?;
    manifest.artifact("statistics.toml");
    manifest.artifact("storage_histogram.csv");
    if !args.no_events {
        io::write_events(&out.join("events.log"), &timeline.events)?;
        manifest.artifact("events.log");
    }
    Ok(vec![
        format!(
            "pulses: {}, heralds: {}, attempts: {}",
            stats.pulses, stats.heralds, stats.attempts
        ),
        format!("successes: {}", stats.successes),
        format!(
            "rate: {:.2} +- {:.2} Hz (closed form {:.2} Hz)",
            stats.estimated_rate_hz, stats.rate_std_error_hz, closed
        ),
        format!(
            "rate check: z = {:.3} -> {}",
            z,
            if summary.consistent {
                "consistent (|z| < 3)"
            } else {
                "INCONSISTENT (|z| >= 3)"
            }
        ),
    ])
}

fn stage_state(pipe: &PipelineStates, stage: StageArg) -> &DensityOperator {
    match stage {
        StageArg::Created => &pipe.created,
        StageArg::Stored => &pipe.stored,
        StageArg::MeasuredCreated => &pipe.measured_created,
        StageArg::MeasuredStored => &pipe.measured_stored,
    }
}

fn stage_name(stage: StageArg) -> &'static str {
    match stage {
        StageArg::Created => "created",
        StageArg::Stored => "stored",
        StageArg::MeasuredCreated => "measured_created",
        StageArg::MeasuredStored => "measured_stored",
    }
}

fn sample(
    args: &SampleArgs,
    config: &RunConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<Report> {
    let mut plan = config.sampling();
    if let Some(n) = args.samples {
        plan.total = n;
    }
    if let Some(n) = args.phases {
        plan.phases = n;
    }
    if let Some(s) = args.phase_noise {
        plan.phase_noise = s;
    }
    manifest.option("samples", plan.total);
    manifest.option("phases", plan.phases);
    manifest.option("phase_noise", plan.phase_noise);
    let (rho, description) = match &args.state {
        Some(path) => {
            manifest.option("state", path.display());
            (
                io::read_density(path)?.0,
                format!("state file {}", path.display()),
            )
        }
        None => {
            let stage = args.stage.unwrap_or(StageArg::MeasuredStored);
            manifest.option("stage", stage_name(stage));
            let pipe = PipelineStates::simulate(&protocol(config, manifest)?)?;
            (
                stage_state(&pipe, stage).clone(),
                format!("pipeline stage {}", stage_name(stage)),
            )
        }
    };
    let data = sample_plan(&rho, &plan)?;
    io::write_dataset(&out.join("dataset.csv"), &data)?;
    io::write_density(
        &out.join("truth.csv"),
        &rho,
        &DensityMetadata {
            description,
            ..Default::default()
        },
    )?;
    for name in ["dataset.csv", "truth.csv", "truth.toml"] {
        manifest.artifact(name);
    }
    Ok(vec![format!(
        "{} samples at {} phases (phase noise {} rad), seed {}",
        data.len(),
        plan.phases,
        plan.phase_noise,
        plan.seed
    )])
}

/// Grid for the per-state Wigner minimum statistic.
const STAT_GRID_HALF_WIDTH: f64 = 3.0;
const STAT_GRID_POINTS: usize = 61;

/// Named statistics of one reconstructed state.
struct Statistics<'a> {
    target: &'a StateVector,
    truth: Option<&'a DensityOperator>,
}

impl Statistics<'_> {
    fn names(&self, dim: usize) -> Vec<String> {
        let mut names = vec!["fidelity_to_target".to_owned()];
        if self.truth.is_some() {
            names.push("fidelity_to_truth".into());
        }
        names.push("wigner_min".into());
        names.push("mean_photon_number".into());
        names.extend((0..dim).map(|n| format!("population_{n}")));
        names
    }

    fn evaluate(&self, rho: &DensityOperator) -> CliResult<Vec<f64>> {
        let mut v = vec![target_fidelity(rho, self.target)?];
        if let Some(truth) = self.truth {
            v.push(state_fidelity(rho, truth)?);
        }
        v.push(
            WignerGrid::square(rho, STAT_GRID_HALF_WIDTH, STAT_GRID_POINTS)
                .minimum()
                .2,
        );
        v.push(rho.mean_photon_number());
        v.extend(rho.populations());
        Ok(v)
    }
}

#[derive(Debug, Serialize)]
struct StatisticSummary {
    name: String,
    estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<Interval>,
}

#[derive(Debug, Serialize)]
struct Interval {
    mean: f64,
    std: f64,
    ci_low: f64,
    ci_high: f64,
    confidence: f64,
}

#[derive(Debug, Serialize)]
struct TomographySummary {
    samples: usize,
    cutoff: usize,
    efficiency_model: String,
    iterations: usize,
    stop_reason: String,
    log_likelihood: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap_resamples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap_failures: Option<usize>,
    statistics: Vec<StatisticSummary>,
}

fn reconstruction_metadata(
    result: &ReconstructionResult,
    samples: usize,
) -> ReconstructionMetadata {
    ReconstructionMetadata {
        samples,
        iterations: result.iterations,
        stop_reason: result.stop_reason.as_str().into(),
        log_likelihood: result.log_likelihood.last().copied().unwrap_or(f64::NAN),
        final_likelihood_gain: result.final_likelihood_gain,
        efficiency_model: result.efficiency.name().into(),
        efficiency: result.efficiency.transmission(),
        diluted_steps: result.diagnostics.diluted_steps,
        zero_probability_cells: result.diagnostics.zero_probability_cells,
        phases: result.diagnostics.phases.clone(),
    }
}

fn tomography(
    args: &TomographyArgs,
    config: &RunConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<Report> {
    let mut config = config.clone();
    let t = &mut config.tomography;
    if let Some(e) = args.efficiency {
        t.efficiency = e;
    }
    if let Some(c) = args.tomography_cutoff {
        t.cutoff = c;
    }
    if let Some(b) = args.x_bins {
        t.x_bins = b;
    }
    if let Some(m) = args.max_iterations {
        t.max_iterations = m;
    }
    if let Some(b) = args.bootstrap {
        t.bootstrap = b;
    }
    if let Some(c) = args.confidence {
        t.confidence = c;
    }
    manifest.config = config.clone();
    manifest.option("dataset", args.dataset.display());
    if let Some(truth) = &args.truth {
        manifest.option("truth", truth.display());
    }

    let data = io::read_dataset(&args.dataset)?;
    let truth = args
        .truth
        .as_deref()
        .map(io::read_density)
        .transpose()?
        .map(|t| t.0);
    let settings = config.maxlik()?;
    let target_cutoff = FockCutoff::new(config.numerics.cutoff.max(settings.cutoff.n_max()))?;
    let target = target_cat(config.protocol()?.target, target_cutoff)?;
    let stats = Statistics {
        target: &target,
        truth: truth.as_ref(),
    };

    let problem = MaxLikProblem::new(&data, settings)?;
    let result = problem.reconstruct(None)?;
    let rho = &result.rho_hat;
    let meta = reconstruction_metadata(&result, data.len());
    io::write_density(
        &out.join("rho.csv"),
        rho,
        &DensityMetadata {
            cutoff: settings.cutoff.n_max(),
            description: format!(
                "maximum-likelihood reconstruction of {}",
                args.dataset.display()
            ),
            reconstruction: Some(meta),
        },
    )?;
    io::write_likelihood(&out.join("likelihood.csv"), &result.log_likelihood)?;
    for name in ["rho.csv", "rho.toml", "likelihood.csv"] {
        manifest.artifact(name);
    }

    let names = stats.names(rho.dim());
    let estimates = stats.evaluate(rho)?;
    let mut summary = TomographySummary {
        samples: data.len(),
        cutoff: settings.cutoff.n_max(),
        efficiency_model: result.efficiency.name().into(),
        iterations: result.iterations,
        stop_reason: result.stop_reason.as_str().into(),
        log_likelihood: result.log_likelihood.last().copied().unwrap_or(f64::NAN),
        bootstrap_resamples: None,
        bootstrap_failures: None,
        statistics: names
            .iter()
            .zip(&estimates)
            .map(|(name, &estimate)| StatisticSummary {
                name: name.clone(),
                estimate,
                bootstrap: None,
            })
            .collect(),
    };

    let mut report = vec![
        format!(
            "{} samples, cutoff {}, efficiency model {}",
            data.len(),
            settings.cutoff.n_max(),
            result.efficiency.name()
        ),
        format!(
            "{} iterations ({})",
            result.iterations,
            result.stop_reason.as_str()
        ),
    ];

    let resamples = config.tomography.bootstrap;
    if resamples > 0 {
        let bs = BootstrapSettings {
            resamples,
            confidence: config.tomography.confidence,
            seed: config.numerics.seed,
            ..BootstrapSettings::default()
        };
        let mut records: Vec<Vec<f64>> = Vec::with_capacity(resamples);
        let first = bootstrap(&problem, Some(rho), &bs, |r| match stats.evaluate(r) {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                let f = v[0];
                records.push(v);
                f
            }
            _ => f64::NAN,
        })?;
        let tail = 0.5 * (1.0 - bs.confidence);
        for (k, s) in summary.statistics.iter_mut().enumerate() {
            let values: Vec<f64> = records.iter().map(|r| r[k]).collect();
            let m = values.len() as f64;
            let mean = values.iter().sum::<f64>() / m;
            let var =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0).max(1.0);
            let mut sorted = values;
            sorted.sort_by(f64::total_cmp);
            s.bootstrap = Some(Interval {
                mean,
                std: var.sqrt(),
                ci_low: percentile(&sorted, tail),
                ci_high: percentile(&sorted, 1.0 - tail),
                confidence: bs.confidence,
            });
        }
        summary.bootstrap_resamples = Some(resamples);
        summary.bootstrap_failures = Some(first.failures);
        let header: Vec<&str> = names.iter().map(String::as_str).collect();
        io::write_table(&out.join("bootstrap.csv"), &header, &records)?;
        manifest.artifact("bootstrap.csv");
    }

    for s in &summary.statistics {
        if !(s.name.starts_with("fidelity") || s.name == "wigner_min") {
            continue;
        }
        match &s.bootstrap {
            Some(b) => report.push(format!(
                "{}: {:.6} ({:.0}% CI [{:.6}, {:.6}], width {:.6})",
                s.name,
                s.estimate,
                100.0 * b.confidence,
                b.ci_low,
                b.ci_high,
                b.ci_high - b.ci_low
            )),
            None => report.push(format!("{}: {:.6}", s.name, s.estimate)),
        }
    }
    io::write_toml(&out.join("tomography.toml"), &summary)?;
    manifest.artifact("tomography.toml");
    Ok(report)
}
