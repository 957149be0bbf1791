//! Command-line surface. Override flags mirror the protocol field names.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{EfficiencyKind, RunConfig};

pub const OUTPUT_ROOT_ENV: &str = "BREEDSIM_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(
    name = "breedsim",
    version,
    about = "Cat-state breeding with a quantum memory cavity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Breed two photons once and characterize the operating point.
    Breed(BreedArgs),
    /// Rate and fidelity against the maximum storage time.
    Curve(CurveArgs),
    /// Wigner grids of a state file or of the simulated pipeline stages.
    Wigner(WignerArgs),
    /// Event-level Monte Carlo of the heralding timeline.
    Simulate(SimulateArgs),
    /// Draw homodyne samples from a state.
    Sample(SampleArgs),
    /// Maximum-likelihood reconstruction of a homodyne dataset.
    Tomography(TomographyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Breed(_) => "breed",
            Command::Curve(_) => "curve",
            Command::Wigner(_) => "wigner",
            Command::Simulate(_) => "simulate",
            Command::Sample(_) => "sample",
            Command::Tomography(_) => "tomography",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Breed(a) => &a.common,
            Command::Curve(a) => &a.common,
            Command::Wigner(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Sample(a) => &a.common,
            Command::Tomography(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration; defaults are the experimental operating point.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// Output directory [default: $BREEDSIM_OUTPUT_ROOT/<command>, or
    /// ./breedsim-output/<command>].
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub rep_rate_hz: Option<f64>,
    #[arg(long)]
    pub herald_rate_hz: Option<f64>,
    #[arg(long)]
    pub photon_fidelity: Option<f64>,
    #[arg(long)]
    pub two_photon: Option<f64>,
    /// Conditioning window half-width.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub window_phase: Option<f64>,
    #[arg(long)]
    pub condition_with_detector_loss: Option<bool>,
    #[arg(long)]
    pub n_min: Option<u32>,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub per_trip_transmission: Option<f64>,
    #[arg(long)]
    pub readout_trips: Option<u32>,
    #[arg(long)]
    pub eta_homodyne: Option<f64>,
    #[arg(long)]
    pub beta_elec: Option<f64>,
    /// Solve `beta_elec` so the rate at `n_max` equals this.
    #[arg(long)]
    pub calibrate_rate_hz: Option<f64>,
    /// Fock cutoff of the protocol simulation.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub target_amplitude: Option<f64>,
    #[arg(long)]
    pub target_squeezing_db: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, c: &mut RunConfig) {
        fn set<T: Copy>(slot: &mut T, value: Option<T>) {
            if let Some(v) = value {
                *slot = v;
            }
        }
        set(&mut c.source.rep_rate_hz, self.rep_rate_hz);
        set(&mut c.source.herald_rate_hz, self.herald_rate_hz);
        set(&mut c.source.photon_fidelity, self.photon_fidelity);
        set(&mut c.source.two_photon, self.two_photon);
        set(&mut c.conditioning.epsilon, self.epsilon);
        set(&mut c.conditioning.phase, self.window_phase);
        set(
            &mut c.conditioning.with_detector_loss,
            self.condition_with_detector_loss,
        );
        set(&mut c.storage.n_min, self.n_min);
        set(&mut c.storage.n_max, self.n_max);
        if self.per_trip_transmission.is_some() {
            c.storage.per_trip_transmission = self.per_trip_transmission;
        }
        set(&mut c.storage.readout_trips, self.readout_trips);
        set(&mut c.detection.eta_homodyne, self.eta_homodyne);
        set(&mut c.rate.beta_elec, self.beta_elec);
        if self.calibrate_rate_hz.is_some() {
            c.rate.calibrate_to_hz = self.calibrate_rate_hz;
        }
        set(&mut c.numerics.cutoff, self.cutoff);
        set(&mut c.numerics.seed, self.seed);
        set(&mut c.target.amplitude, self.target_amplitude);
        set(&mut c.target.squeezing_db, self.target_squeezing_db);
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Grid covers [-half_width, half_width] on both axes.
    #[arg(long, default_value_t = 4.0)]
    pub half_width: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 81)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BreedArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated storage limits, e.g. `1,5,10`.
    #[arg(long, conflicts_with = "n_max_range")]
    pub n_max_values: Option<String>,
    /// Inclusive range `start:end[:step]` [default: 1:100].
    #[arg(long)]
    pub n_max_range: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionArg {
    None,
    Storage,
    Detection,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct WignerArgs {
    #[command(flatten)]
    pub common: Common,
    /// Density-matrix CSV; without it the pipeline stages are simulated.
    #[arg(long, conflicts_with = "corrections")]
    pub state: Option<PathBuf>,
    /// Loss corrections to render [default: all four].
    #[arg(long, value_enum, value_delimiter = ',')]
    pub corrections: Vec<CorrectionArg>,
    /// Also render the target cat.
    #[arg(long)]
    pub target: bool,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Simulated time in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    /// Skip the event log.
    #[arg(long)]
    pub no_events: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageArg {
    Created,
    Stored,
    MeasuredCreated,
    MeasuredStored,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Density-matrix CSV to sample instead of a pipeline stage.
    #[arg(long, conflicts_with = "stage")]
    pub state: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub stage: Option<StageArg>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub phases: Option<usize>,
    /// Standard deviation of Gaussian phase noise, radians.
    #[arg(long)]
    pub phase_noise: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TomographyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset CSV with header `theta,x`.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub efficiency: Option<EfficiencyKind>,
    /// Fock cutoff of the reconstruction.
    #[arg(long)]
    pub tomography_cutoff: Option<usize>,
    #[arg(long)]
    pub x_bins: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Bootstrap resamples (0 disables the bootstrap).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Known state to compare against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}
