//! Seeded discrete-event simulation of heralding, storage and breeding.
//!
//! Heralds form a Bernoulli process over pulse slots, sampled by geometric
//! jumps. Every attempt consumes three consecutive heralds: the photon that
//! is trapped, the photon it is bred with, and the trigger of the phase
//! measurement. `β_elec` is drawn once per attempt on the trapping herald;
//! a rejected herald leaves the attempt dead but still consumes its three
//! heralds. Under these rules the long-run rate equals the closed form.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{delay_probability, generation_rate, window_probability, ProtocolConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// A herald that does not take part in breeding.
    Herald,
    Trap,
    /// First photon released after holding for `n_max` trips.
    Hold,
    Breed,
    ConditionPass,
    ConditionFail,
    Readout,
    PhaseTrigger,
    DeadTime,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::Herald,
        EventKind::Trap,
        EventKind::Hold,
        EventKind::Breed,
        EventKind::ConditionPass,
        EventKind::ConditionFail,
        EventKind::Readout,
        EventKind::PhaseTrigger,
        EventKind::DeadTime,
    ];

    /// Inverse of [`EventKind::as_str`].
    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Herald => "herald",
            EventKind::Trap => "trap",
            EventKind::Hold => "hold",
            EventKind::Breed => "breed",
            EventKind::ConditionPass => "condition_pass",
            EventKind::ConditionFail => "condition_fail",
            EventKind::Readout => "readout",
            EventKind::PhaseTrigger => "phase_trigger",
            EventKind::DeadTime => "dead_time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineEvent {
    pub kind: EventKind,
    pub pulse_index: u64,
    /// Round trips the first photon had spent in the cavity, where relevant.
    pub storage_trips: Option<u32>,
}

/// Conditioning probability and output fidelity per first-photon storage
/// time, starting at `n_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldTable {
    n_min: u32,
    rows: Vec<(f64, f64)>,
}

impl HeraldTable {
    pub fn new(n_min: u32, rows: Vec<(f64, f64)>) -> Self {
        Self { n_min, rows }
    }

    /// Storage-independent probability, as assumed by the closed form.
    pub fn constant(n_min: u32, n_max: u32, probability: f64, fidelity: f64) -> Self {
        Self {
            n_min,
            rows: vec![(probability, fidelity); (n_max + 1 - n_min.min(n_max + 1)) as usize],
        }
    }

    pub fn n_min(&self) -> u32 {
        self.n_min
    }

    pub fn n_max(&self) -> u32 {
        self.n_min + self.rows.len() as u32 - 1
    }

    pub fn get(&self, storage_trips: u32) -> Option<(f64, f64)> {
        storage_trips
            .checked_sub(self.n_min)
            .and_then(|i| self.rows.get(i as usize).copied())
    }

    /// Conditioning probability averaged over the delay distribution.
    pub fn effective_probability(&self, p_trip: f64) -> f64 {
        let mut mass = 0.0;
        let mut acc = 0.0;
        for (i, (p, _)) in self.rows.iter().enumerate() {
            let w = delay_probability(p_trip, self.n_min + i as u32);
            mass += w;
            acc += w * p;
        }
        if mass > 0.0 {
            acc / mass
        } else {
            self.rows.first().map_or(0.0, |r| r.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStatistics {
    pub pulses: u64,
    pub elapsed_s: f64,
    pub heralds: u64,
    pub attempts: u64,
    pub dead_attempts: u64,
    pub successes: u64,
    pub estimated_rate_hz: f64,
    /// Poisson error of `estimated_rate_hz`.
    pub rate_std_error_hz: f64,
    /// Mean storage of the first photon over successes, in round trips.
    pub mean_first_photon_storage: f64,
    /// Successes per first-photon storage time (index = round trips).
    pub storage_histogram: Vec<u64>,
    /// Mean fidelity to the target at creation over successes.
    pub mean_output_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub statistics: RunStatistics,
    /// Events in pulse order; empty unless recording was requested.
    pub events: Vec<TimelineEvent>,
}

enum Phase {
    Idle,
    Holding { trapped_at: u64 },
    DeadAttempt,
    AwaitTrigger { readout_at: Option<u64> },
}

/// Runs the cavity state machine for `duration_s` of pulses.
pub fn simulate_timeline(
    config: &ProtocolConfig,
    table: &HeraldTable,
    duration_s: f64,
    record_events: bool,
) -> Result<Timeline> {
    config.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::Domain {
            what: "simulation duration",
            value: duration_s,
        });
    }
    if table.n_min() != config.n_min || table.n_max() < config.n_max {
        return Err(Error::Domain {
            what: "herald table n_max",
            value: table.n_max() as f64,
        });
    }
    let pulses = (duration_s * config.rep_rate_hz).floor().max(1.0) as u64;
    let p = config.p_trip();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut events = Vec::new();
    let mut emit = |kind, pulse_index, storage_trips| {
        if record_events {
            events.push(TimelineEvent {
                kind,
                pulse_index,
                storage_trips,
            });
        }
    };

    let mut stats = RunStatistics {
        pulses,
        elapsed_s: pulses as f64 / config.rep_rate_hz,
        heralds: 0,
        attempts: 0,
        dead_attempts: 0,
        successes: 0,
        estimated_rate_hz: 0.0,
        rate_std_error_hz: 0.0,
        mean_first_photon_storage: 0.0,
        storage_histogram: vec![0; config.n_max as usize + 1],
        mean_output_fidelity: 0.0,
    };
    let mut storage_sum = 0.0;
    let mut fidelity_sum = 0.0;
    let mut phase = Phase::Idle;
    let mut now = 0u64;
    let ln_miss = (1.0 - p).ln();

    loop {
        if p <= 0.0 {
            break;
        }
        // Geometric jump to the next heralded slot.
        let jump = if p >= 1.0 {
            1
        } else {
            let u: f64 = 1.0 - rng.random::<f64>();
            (u.ln() / ln_miss).floor() as u64 + 1
        };
        now = now.saturating_add(jump);
        if now > pulses {
            break;
        }
        stats.heralds += 1;
        phase = match phase {
            Phase::Idle => {
                stats.attempts += 1;
                if rng.random::<f64>() < config.beta_elec {
                    emit(EventKind::Trap, now, None);
                    Phase::Holding { trapped_at: now }
                } else {
                    stats.dead_attempts += 1;
                    emit(EventKind::DeadTime, now, None);
                    Phase::DeadAttempt
                }
            }
            Phase::Holding { trapped_at } => {
                let trips = (now - trapped_at).min(u32::MAX as u64) as u32;
                let mut readout_at = None;
                if trips < config.n_min {
                    emit(EventKind::Herald, now, Some(trips));
                } else if trips > config.n_max {
                    emit(
                        EventKind::Hold,
                        trapped_at + config.n_max as u64,
                        Some(config.n_max),
                    );
                    emit(EventKind::Herald, now, Some(trips));
                } else {
                    let (probability, fidelity) =
                        table.get(trips).expect("table covers the storage window");
                    emit(EventKind::Breed, now, Some(trips));
                    if rng.random::<f64>() < probability {
                        emit(EventKind::ConditionPass, now, Some(trips));
                        stats.successes += 1;
                        stats.storage_histogram[trips as usize] += 1;
                        storage_sum += trips as f64;
                        fidelity_sum += fidelity;
                        readout_at = Some(now + config.readout_trips as u64);
                    } else {
                        emit(EventKind::ConditionFail, now, Some(trips));
                    }
                }
                Phase::AwaitTrigger { readout_at }
            }
            Phase::DeadAttempt => {
                emit(EventKind::Herald, now, None);
                Phase::AwaitTrigger { readout_at: None }
            }
            Phase::AwaitTrigger { readout_at } => {
                emit(EventKind::PhaseTrigger, now, None);
                if let Some(at) = readout_at {
                    emit(EventKind::Readout, at, None);
                }
                Phase::Idle
            }
        };
    }
    if let Phase::AwaitTrigger {
        readout_at: Some(at),
    } = phase
    {
        if at <= pulses {
            emit(EventKind::Readout, at, None);
        }
    }

    let n = stats.successes as f64;
    stats.estimated_rate_hz = n / stats.elapsed_s;
    stats.rate_std_error_hz = n.sqrt() / stats.elapsed_s;
    if stats.successes > 0 {
        stats.mean_first_photon_storage = storage_sum / n;
        stats.mean_output_fidelity = fidelity_sum / n;
    }
    // Stable: same-slot events keep their causal order.
    events.sort_by_key(|e| e.pulse_index);
    Ok(Timeline {
        statistics: stats,
        events,
    })
}

/// Closed-form rate for the same table (conditioning probability averaged
/// over the storage-time distribution).
pub fn closed_form_rate(config: &ProtocolConfig, table: &HeraldTable) -> f64 {
    generation_rate(config, table.effective_probability(config.p_trip()))
}

/// `(simulated − closed form)/σ` with `σ` the Poisson error of the
/// closed-form expected count over the simulated time.
pub fn rate_z_score(stats: &RunStatistics, closed_form_hz: f64) -> f64 {
    let expected = closed_form_hz * stats.elapsed_s;
    if expected <= 0.0 {
        return if stats.successes == 0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    (stats.successes as f64 - expected) / expected.sqrt()
}

/// Probability that one attempt succeeds.
pub fn attempt_success_probability(config: &ProtocolConfig, table: &HeraldTable) -> f64 {
    let window = window_probability(config.p_trip(), config.n_min, config.n_max).unwrap_or(0.0);
    config.beta_elec * window * table.effective_probability(config.p_trip())
}
