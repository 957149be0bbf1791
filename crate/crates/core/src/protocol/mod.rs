//! Temporal-multiplexing model of the memory cavity: closed-form generation
//! rate, storage losses, storage-resolved breeding and the rate/fidelity
//! trade-off curve.

mod timeline;

pub use timeline::{
    attempt_success_probability, closed_form_rate, rate_z_score, simulate_timeline, EventKind,
    HeraldTable, RunStatistics, Timeline, TimelineEvent,
};

use alloc::vec::Vec;

use crate::error::{ensure_range, Error, Result};
use crate::fock::{
    fidelity_to_pure, target_cat, DensityOperator, FockCutoff, StateVector, TargetCatSpec,
};
use crate::optics::{loss_channel, AcceptanceWindow, Breeder, HeraldOutcome, PhotonModel};

/// Aggregate loss of a 15-round-trip storage.
pub const REFERENCE_STORAGE_LOSS: f64 = 0.159;
pub const REFERENCE_STORAGE_TRIPS: u32 = 15;
/// Storage limit of the reference data set. Not published; it is the value
/// at which the loss-only model reproduces the reported stored-state Wigner
/// negativity.
pub const OPERATING_N_MAX: u32 = 60;
/// Observed generation rate at the operating point, used to calibrate `β_elec`.
pub const REFERENCE_RATE_HZ: f64 = 1e3;

/// Every experimental parameter of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// Laser repetition rate = cavity round-trip rate, Hz.
    pub rep_rate_hz: f64,
    /// Single-photon heralding rate, Hz.
    pub herald_rate_hz: f64,
    /// Electronic dead-time factor multiplying the rate.
    pub beta_elec: f64,
    pub window: AcceptanceWindow,
    /// Accepted first-photon storage, in round trips (inclusive bounds).
    pub n_min: u32,
    pub n_max: u32,
    pub per_trip_transmission: f64,
    /// Storage applied before the state is extracted and measured.
    pub readout_trips: u32,
    pub eta_homodyne: f64,
    pub photon: PhotonModel,
    /// Apply homodyne inefficiency to the conditioning measurement as well.
    pub condition_with_detector_loss: bool,
    pub cutoff: FockCutoff,
    pub target: TargetCatSpec,
    pub rng_seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            rep_rate_hz: 76e6,
            herald_rate_hz: 310e3,
            beta_elec: 1.0,
            window: AcceptanceWindow::default(),
            n_min: 1,
            n_max: OPERATING_N_MAX,
            per_trip_transmission: libm::pow(
                1.0 - REFERENCE_STORAGE_LOSS,
                1.0 / REFERENCE_STORAGE_TRIPS as f64,
            ),
            readout_trips: REFERENCE_STORAGE_TRIPS,
            eta_homodyne: 0.76,
            photon: PhotonModel::default(),
            condition_with_detector_loss: false,
            cutoff: FockCutoff::protocol_default(),
            target: TargetCatSpec::default(),
            rng_seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite()) {
            return Err(Error::Domain {
                what: "rep_rate_hz",
                value: self.rep_rate_hz,
            });
        }
        ensure_range("herald_rate_hz", self.herald_rate_hz, 0.0, self.rep_rate_hz)?;
        if self.herald_rate_hz >= self.rep_rate_hz {
            return Err(Error::Domain {
                what: "herald_rate_hz",
                value: self.herald_rate_hz,
            });
        }
        ensure_range("beta_elec", self.beta_elec, 0.0, 1.0)?;
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(Error::Domain {
                what: "n_min",
                value: self.n_min as f64,
            });
        }
        if !(self.per_trip_transmission > 0.0 && self.per_trip_transmission <= 1.0) {
            return Err(Error::Domain {
                what: "per_trip_transmission",
                value: self.per_trip_transmission,
            });
        }
        if !(self.eta_homodyne > 0.0 && self.eta_homodyne <= 1.0) {
            return Err(Error::Domain {
                what: "eta_homodyne",
                value: self.eta_homodyne,
            });
        }
        self.photon.density(self.cutoff)?;
        AcceptanceWindow::new(self.window.half_width(), self.window.phase())?;
        Ok(())
    }

    /// Herald probability per pulse slot.
    pub fn p_trip(&self) -> f64 {
        self.herald_rate_hz / self.rep_rate_hz
    }

    fn conditioning_efficiency(&self) -> f64 {
        if self.condition_with_detector_loss {
            self.eta_homodyne
        } else {
            1.0
        }
    }
}

/// Per-trip transmission from the loss accumulated over `n_trips`.
pub fn per_trip_transmission_from_total(total_loss: f64, n_trips: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&total_loss) {
        return Err(Error::Domain {
            what: "total storage loss",
            value: total_loss,
        });
    }
    if n_trips == 0 {
        return Err(Error::Domain {
            what: "storage trips",
            value: 0.0,
        });
    }
    Ok(libm::pow(1.0 - total_loss, 1.0 / n_trips as f64))
}

/// `n_trips` round trips in the cavity.
pub fn storage_evolve(
    rho: &DensityOperator,
    n_trips: u32,
    per_trip_transmission: f64,
) -> Result<DensityOperator> {
    ensure_range("per-trip transmission", per_trip_transmission, 0.0, 1.0)?;
    loss_channel(rho, libm::pow(per_trip_transmission, n_trips as f64))
}

/// Probability that the next herald arrives exactly `n` slots later.
pub fn delay_probability(p_trip: f64, n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    libm::pow(1.0 - p_trip, (n - 1) as f64) * p_trip
}

/// Probability that a geometric waiting time lands in `[n_min, n_max]`.
pub fn window_probability(p_trip: f64, n_min: u32, n_max: u32) -> Result<f64> {
    ensure_range("herald probability per slot", p_trip, 0.0, 1.0)?;
    if n_min < 1 || n_min > n_max {
        return Err(Error::Domain {
            what: "storage window",
            value: n_min as f64,
        });
    }
    let q = 1.0 - p_trip;
    Ok(libm::pow(q, (n_min - 1) as f64) * (1.0 - libm::pow(q, (n_max - n_min + 1) as f64)))
}

/// `f_herald/3 · β_elec · p_condition · P(n_min ≤ delay ≤ n_max)`.
///
/// One herald in three is spent triggering the phase measurement.
pub fn generation_rate(config: &ProtocolConfig, p_condition: f64) -> f64 {
    let window = window_probability(config.p_trip(), config.n_min, config.n_max).unwrap_or(0.0);
    config.herald_rate_hz / 3.0 * config.beta_elec * p_condition * window
}

/// `β_elec` that makes [`generation_rate`] equal `target_rate_hz`.
pub fn calibrate_beta(
    config: &ProtocolConfig,
    p_condition: f64,
    target_rate_hz: f64,
) -> Result<f64> {
    let unit = generation_rate(
        &ProtocolConfig {
            beta_elec: 1.0,
            ..config.clone()
        },
        p_condition,
    );
    let beta = target_rate_hz / unit;
    ensure_range("calibrated beta_elec", beta, 0.0, 1.0)
}

/// Breeding outcome when the first photon waited `storage_trips`.
#[derive(Debug, Clone)]
pub struct StorageBreed {
    pub storage_trips: u32,
    pub outcome: HeraldOutcome,
    /// Fidelity of the heralded state to the target cat.
    pub fidelity: f64,
}

/// Breeding outcomes for every first-photon storage time up to a limit.
#[derive(Debug, Clone)]
pub struct BreedingModel {
    config: ProtocolConfig,
    target: StateVector,
    entries: Vec<StorageBreed>,
}

/// Post-selected state of all successes within a storage window.
#[derive(Debug, Clone)]
pub struct HeraldedMixture {
    pub state: DensityOperator,
    /// Conditioning probability averaged over the delay distribution.
    pub p_condition: f64,
    pub window_probability: f64,
}

impl BreedingModel {
    /// Tabulates storage times `n_min ..= up_to`.
    pub fn new(config: &ProtocolConfig, up_to: u32) -> Result<Self> {
        config.validate()?;
        let breeder = Breeder::new(
            &config.window,
            config.cutoff,
            config.conditioning_efficiency(),
        )?;
        let photon = config.photon.density(config.cutoff)?;
        let target = target_cat(config.target, config.cutoff)?;
        let entries = (config.n_min..=up_to.max(config.n_min))
            .map(|n| {
                let stored = storage_evolve(&photon, n, config.per_trip_transmission)?;
                let outcome = breeder.breed(&stored, &photon)?;
                let fidelity = fidelity_to_pure(&outcome.state, &target)?;
                Ok(StorageBreed {
                    storage_trips: n,
                    outcome,
                    fidelity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            target,
            entries,
        })
    }

    pub fn entries(&self) -> &[StorageBreed] {
        &self.entries
    }

    pub fn target(&self) -> &StateVector {
        &self.target
    }

    pub fn max_storage(&self) -> u32 {
        self.entries
            .last()
            .map_or(self.config.n_min, |e| e.storage_trips)
    }

    /// Success-weighted mixture `Σ P(n) p(n) ρ_n / Σ P(n) p(n)` over
    /// `n_min ≤ n ≤ n_max`.
    pub fn mixture(&self, n_max: u32) -> Result<HeraldedMixture> {
        if n_max < self.config.n_min || n_max > self.max_storage() {
            return Err(Error::Domain {
                what: "mixture n_max",
                value: n_max as f64,
            });
        }
        let p = self.config.p_trip();
        let mut parts = Vec::new();
        let mut delay_mass = 0.0;
        let mut success_mass = 0.0;
        for e in self.entries.iter().take_while(|e| e.storage_trips <= n_max) {
            let w = delay_probability(p, e.storage_trips);
            delay_mass += w;
            success_mass += w * e.outcome.probability;
            parts.push((w * e.outcome.probability, &e.outcome.state));
        }
        let state = if success_mass > 0.0 {
            DensityOperator::mixture(&parts)?
        } else {
            // No heralds at all (p = 0): report the shortest-storage state.
            self.entries[0].outcome.state.clone()
        };
        Ok(HeraldedMixture {
            state,
            p_condition: if delay_mass > 0.0 {
                success_mass / delay_mass
            } else {
                self.entries[0].outcome.probability
            },
            window_probability: window_probability(p, self.config.n_min, n_max)?,
        })
    }

    pub fn herald_table(&self, n_max: u32) -> HeraldTable {
        let rows = self.entries.iter().take_while(|e| e.storage_trips <= n_max);
        HeraldTable::new(
            self.config.n_min,
            rows.map(|e| (e.outcome.probability, e.fidelity)).collect(),
        )
    }
}

/// One point of the rate/fidelity trade-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub n_max: u32,
    pub rate_hz: f64,
    pub fidelity_at_creation: f64,
    pub fidelity_after_readout: f64,
}

/// Rate and fidelity as functions of the maximum first-photon storage.
pub fn fidelity_vs_storage_curve(
    config: &ProtocolConfig,
    n_max_values: &[u32],
) -> Result<Vec<CurveRow>> {
    let top = *n_max_values.iter().max().ok_or(Error::Domain {
        what: "n_max list length",
        value: 0.0,
    })?;
    if let Some(&bad) = n_max_values.iter().find(|&&n| n < config.n_min) {
        return Err(Error::Domain {
            what: "n_max",
            value: bad as f64,
        });
    }
    let model = BreedingModel::new(config, top)?;
    n_max_values
        .iter()
        .map(|&n_max| curve_row(&model, n_max))
        .collect()
}

fn curve_row(model: &BreedingModel, n_max: u32) -> Result<CurveRow> {
    let config = ProtocolConfig {
        n_max,
        ..model.config.clone()
    };
    let mix = model.mixture(n_max)?;
    let stored = storage_evolve(
        &mix.state,
        config.readout_trips,
        config.per_trip_transmission,
    )?;
    Ok(CurveRow {
        n_max,
        rate_hz: generation_rate(&config, mix.p_condition),
        fidelity_at_creation: fidelity_to_pure(&mix.state, &model.target)?,
        fidelity_after_readout: fidelity_to_pure(&stored, &model.target)?,
    })
}

/// The heralded state at each stage of the characterization chain.
#[derive(Debug, Clone)]
pub struct PipelineStates {
    /// Just after the conditioning measurement.
    pub created: DensityOperator,
    /// After `readout_trips` in the cavity.
    pub stored: DensityOperator,
    /// `created` seen through the homodyne efficiency.
    pub measured_created: DensityOperator,
    /// `stored` seen through the homodyne efficiency: the raw measurement.
    pub measured_stored: DensityOperator,
    pub p_condition: f64,
    pub rate_hz: f64,
    pub target: StateVector,
}

/// Which losses a reconstruction has been corrected for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correction {
    None,
    Storage,
    Detection,
    Both,
}

impl Correction {
    pub const ALL: [Correction; 4] = [
        Correction::None,
        Correction::Storage,
        Correction::Detection,
        Correction::Both,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Correction::None => "none",
            Correction::Storage => "storage",
            Correction::Detection => "detection",
            Correction::Both => "both",
        }
    }
}

impl PipelineStates {
    /// Builds the chain from the storage-window mixture at `config.n_max`.
    pub fn simulate(config: &ProtocolConfig) -> Result<Self> {
        let model = BreedingModel::new(config, config.n_max)?;
        let mix = model.mixture(config.n_max)?;
        let rate_hz = generation_rate(config, mix.p_condition);
        Self::from_created(config, mix.state, mix.p_condition, rate_hz, model.target)
    }

    /// Builds the chain from a given state at creation.
    pub fn from_created(
        config: &ProtocolConfig,
        created: DensityOperator,
        p_condition: f64,
        rate_hz: f64,
        target: StateVector,
    ) -> Result<Self> {
        let stored = storage_evolve(&created, config.readout_trips, config.per_trip_transmission)?;
        Ok(Self {
            measured_created: loss_channel(&created, config.eta_homodyne)?,
            measured_stored: loss_channel(&stored, config.eta_homodyne)?,
            created,
            stored,
            p_condition,
            rate_hz,
            target,
        })
    }

    /// State whose reconstruction carries the given corrections: correcting
    /// a loss means looking at the stage before it.
    pub fn corrected(&self, correction: Correction) -> &DensityOperator {
        match correction {
            Correction::None => &self.measured_stored,
            Correction::Storage => &self.measured_created,
            Correction::Detection => &self.stored,
            Correction::Both => &self.created,
        }
    }
}
