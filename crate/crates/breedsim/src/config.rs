//! Run configuration: a sectioned TOML file whose defaults are the
//! experimental operating point, plus command-line overrides.

use std::path::Path;

use breedsim_core::optics::{AcceptanceWindow, PhotonModel};
use breedsim_core::protocol::{
    per_trip_transmission_from_total, ProtocolConfig, OPERATING_N_MAX, REFERENCE_STORAGE_LOSS,
    REFERENCE_STORAGE_TRIPS,
};
use breedsim_core::tomography::{Binning, EfficiencyModel, MaxLikSettings, SamplingPlan};
use breedsim_core::{FockCutoff, TargetCatSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub rep_rate_hz: f64,
    pub herald_rate_hz: f64,
    pub photon_fidelity: f64,
    pub two_photon: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        let photon = PhotonModel::default();
        Self {
            rep_rate_hz: 76e6,
            herald_rate_hz: 310e3,
            photon_fidelity: photon.fidelity,
            two_photon: photon.two_photon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditioningSection {
    /// Half-width of the accepted quadrature window.
    pub epsilon: f64,
    pub phase: f64,
    pub with_detector_loss: bool,
}

impl Default for ConditioningSection {
    fn default() -> Self {
        Self {
            epsilon: 0.3,
            phase: 0.0,
            with_detector_loss: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageSection {
    pub n_min: u32,
    pub n_max: u32,
    /// Overrides the value derived from `total_loss` over `loss_trips`.
    pub per_trip_transmission: Option<f64>,
    pub total_loss: f64,
    pub loss_trips: u32,
    pub readout_trips: u32,
}

impl Default for StorageSection {
    fn default() -> Self {
        Self {
            n_min: 1,
            n_max: OPERATING_N_MAX,
            per_trip_transmission: None,
            total_loss: REFERENCE_STORAGE_LOSS,
            loss_trips: REFERENCE_STORAGE_TRIPS,
            readout_trips: REFERENCE_STORAGE_TRIPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    pub eta_homodyne: f64,
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self { eta_homodyne: 0.76 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSection {
    pub beta_elec: f64,
    /// When set, `beta_elec` is solved so the rate at `n_max` equals this.
    pub calibrate_to_hz: Option<f64>,
}

impl Default for RateSection {
    fn default() -> Self {
        Self {
            beta_elec: 1.0,
            calibrate_to_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    pub cutoff: usize,
    pub seed: u64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            cutoff: FockCutoff::protocol_default().n_max(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    pub amplitude: f64,
    pub squeezing_db: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        let t = TargetCatSpec::default();
        Self {
            amplitude: t.amplitude,
            squeezing_db: t.squeezing_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyKind {
    None,
    Detection,
    DetectionAndStorage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySection {
    pub cutoff: usize,
    pub phases: usize,
    pub x_bins: usize,
    pub x_range: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub samples: usize,
    pub phase_noise: f64,
    pub efficiency: EfficiencyKind,
    pub bootstrap: usize,
    pub confidence: f64,
}

impl Default for TomographySection {
    fn default() -> Self {
        let m = MaxLikSettings::default();
        let p = SamplingPlan::default();
        Self {
            cutoff: m.cutoff.n_max(),
            phases: m.binning.phases,
            x_bins: m.binning.x_bins,
            x_range: m.binning.x_range,
            max_iterations: m.max_iterations,
            tolerance: m.tolerance,
            samples: p.total,
            phase_noise: p.phase_noise,
            efficiency: EfficiencyKind::None,
            bootstrap: 0,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceSection,
    pub conditioning: ConditioningSection,
    pub storage: StorageSection,
    pub detection: DetectionSection,
    pub rate: RateSection,
    pub numerics: NumericsSection,
    pub target: TargetSection,
    pub tomography: TomographySection,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|message| CliError::Config {
            path: path.to_owned(),
            message,
        })
    }

    /// Parses TOML; errors carry the line, column and offending field.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string().trim_end().to_owned())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn per_trip_transmission(&self) -> CliResult<f64> {
        match self.storage.per_trip_transmission {
            Some(t) => Ok(t),
            None => Ok(per_trip_transmission_from_total(
                self.storage.total_loss,
                self.storage.loss_trips,
            )?),
        }
    }

    /// Validated core configuration (before any rate calibration).
    pub fn protocol(&self) -> CliResult<ProtocolConfig> {
        let config = ProtocolConfig {
            rep_rate_hz: self.source.rep_rate_hz,
            herald_rate_hz: self.source.herald_rate_hz,
            beta_elec: self.rate.beta_elec,
            window: AcceptanceWindow::new(self.conditioning.epsilon, self.conditioning.phase)?,
            n_min: self.storage.n_min,
            n_max: self.storage.n_max,
            per_trip_transmission: self.per_trip_transmission()?,
            readout_trips: self.storage.readout_trips,
            eta_homodyne: self.detection.eta_homodyne,
            photon: PhotonModel {
                fidelity: self.source.photon_fidelity,
                two_photon: self.source.two_photon,
            },
            condition_with_detector_loss: self.conditioning.with_detector_loss,
            cutoff: FockCutoff::new(self.numerics.cutoff)?,
            target: TargetCatSpec {
                amplitude: self.target.amplitude,
                squeezing_db: self.target.squeezing_db,
            },
            rng_seed: self.numerics.seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn efficiency(&self) -> CliResult<EfficiencyModel> {
        let eta = self.detection.eta_homodyne;
        Ok(match self.tomography.efficiency {
            EfficiencyKind::None => EfficiencyModel::None,
            EfficiencyKind::Detection => EfficiencyModel::Detection { eta },
            EfficiencyKind::DetectionAndStorage => EfficiencyModel::DetectionAndStorage {
                eta,
                storage_transmission: self
                    .per_trip_transmission()?
                    .powi(self.storage.readout_trips as i32),
            },
        })
    }

    pub fn maxlik(&self) -> CliResult<MaxLikSettings> {
        let t = &self.tomography;
        Ok(MaxLikSettings {
            cutoff: FockCutoff::new(t.cutoff)?,
            binning: Binning {
                phases: t.phases,
                x_bins: t.x_bins,
                x_range: t.x_range,
            },
            efficiency: self.efficiency()?,
            max_iterations: t.max_iterations,
            tolerance: t.tolerance,
        })
    }

    pub fn sampling(&self) -> SamplingPlan {
        SamplingPlan {
            phases: self.tomography.phases,
            total: self.tomography.samples,
            phase_noise: self.tomography.phase_noise,
            seed: self.numerics.seed,
        }
    }
}
