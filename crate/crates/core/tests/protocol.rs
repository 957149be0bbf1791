use approx::assert_abs_diff_eq;
use breedsim_core::optics::{AcceptanceWindow, PhotonModel};
use breedsim_core::protocol::*;
use breedsim_core::FockCutoff;
use proptest::prelude::*;

fn small_cutoff_config() -> ProtocolConfig {
    ProtocolConfig {
        cutoff: FockCutoff::new(20).unwrap(),
        ..ProtocolConfig::default()
    }
}

#[test]
fn rate_closed_form_at_short_storage() {
    let config = ProtocolConfig {
        n_max: 15,
        ..ProtocolConfig::default()
    };
    let window = window_probability(config.p_trip(), 1, 15).unwrap();
    assert_abs_diff_eq!(window, 0.0594, epsilon = 1e-4);
    assert_abs_diff_eq!(
        generation_rate(&config, 0.235),
        310e3 / 3.0 * 0.235 * window,
        epsilon = 1e-9
    );
    assert_abs_diff_eq!(generation_rate(&config, 0.235), 1.44e3, epsilon = 5.0);
}

#[test]
fn rate_is_monotone_in_n_max() {
    let base = ProtocolConfig::default();
    let mut last = 0.0;
    for n_max in 1..=200 {
        let rate = generation_rate(
            &ProtocolConfig {
                n_max,
                ..base.clone()
            },
            0.2,
        );
        assert!(rate >= last);
        last = rate;
    }
}

#[test]
fn curve_shape() {
    let config = small_cutoff_config();
    let n_values: Vec<u32> = vec![1, 5, 10, 20, 40, 60, 80, 100];
    let rows = fidelity_vs_storage_curve(&config, &n_values).unwrap();
    assert_eq!(rows.len(), n_values.len());
    for w in rows.windows(2) {
        assert!(w[1].rate_hz > w[0].rate_hz);
        assert!(w[1].fidelity_at_creation <= w[0].fidelity_at_creation + 1e-12);
        assert!(w[1].fidelity_after_readout <= w[0].fidelity_after_readout + 1e-12);
    }
    for r in &rows {
        assert!(r.fidelity_after_readout < r.fidelity_at_creation);
    }
}

#[test]
fn mixtures_are_valid_states() {
    let config = small_cutoff_config();
    let model = BreedingModel::new(&config, 100).unwrap();
    for n_max in [1, 2, 7, 33, 100] {
        let mix = model.mixture(n_max).unwrap();
        assert!(mix.state.physicality().is_physical());
        assert!((0.0..=1.0).contains(&mix.p_condition));
    }
    assert!(model.mixture(101).is_err());
}

#[test]
fn operating_point_pipeline() {
    let config = ProtocolConfig::default();
    let pipe = PipelineStates::simulate(&config).unwrap();
    let fc = breedsim_core::fock::fidelity_to_pure(&pipe.created, &pipe.target).unwrap();
    let fs = breedsim_core::fock::fidelity_to_pure(&pipe.stored, &pipe.target).unwrap();
    assert!((0.55..=0.65).contains(&fc), "created {fc}");
    assert!((0.46..=0.56).contains(&fs), "stored {fs}");
    for c in Correction::ALL {
        assert!(pipe.corrected(c).physicality().is_physical());
    }
}

#[test]
fn beta_calibration_hits_reference_rate() {
    let config = ProtocolConfig::default();
    let pipe = PipelineStates::simulate(&config).unwrap();
    let beta = calibrate_beta(&config, pipe.p_condition, REFERENCE_RATE_HZ).unwrap();
    assert!(beta > 0.0 && beta < 1.0);
    let calibrated = ProtocolConfig {
        beta_elec: beta,
        ..config
    };
    assert_abs_diff_eq!(
        generation_rate(&calibrated, pipe.p_condition),
        1e3,
        epsilon = 1e-9
    );
}

#[test]
fn timeline_matches_closed_form_over_a_million_pulses() {
    let config = ProtocolConfig::default();
    let table = BreedingModel::new(&config, config.n_max)
        .unwrap()
        .herald_table(config.n_max);
    let duration = 2e6 / config.rep_rate_hz;
    let run = simulate_timeline(&config, &table, duration, false).unwrap();
    assert!(run.statistics.pulses >= 1_000_000);
    let closed = closed_form_rate(&config, &table);
    let z = rate_z_score(&run.statistics, closed);
    assert!(z.abs() < 3.0, "z = {z}");
    assert!(run.statistics.successes > 0);
}

#[test]
fn timeline_determinism_and_zero_herald_rate() {
    let config = ProtocolConfig {
        rng_seed: 11,
        ..ProtocolConfig::default()
    };
    let table = HeraldTable::constant(config.n_min, config.n_max, 0.22, 0.6);
    let a = simulate_timeline(&config, &table, 0.01, true).unwrap();
    let b = simulate_timeline(&config, &table, 0.01, true).unwrap();
    assert_eq!(a, b);
    let silent = ProtocolConfig {
        herald_rate_hz: 0.0,
        ..config
    };
    let run = simulate_timeline(&silent, &table, 0.01, true).unwrap();
    assert_eq!(run.statistics.successes, 0);
    assert_eq!(run.statistics.estimated_rate_hz, 0.0);
}

#[test]
fn timeline_statistics_are_consistent() {
    let config = ProtocolConfig::default();
    let table = HeraldTable::constant(config.n_min, config.n_max, 0.3, 0.6);
    let run = simulate_timeline(&config, &table, 0.05, true).unwrap();
    let s = &run.statistics;
    assert!(s.successes <= s.attempts);
    assert_eq!(s.storage_histogram.iter().sum::<u64>(), s.successes);
    assert_abs_diff_eq!(
        s.estimated_rate_hz,
        s.successes as f64 / s.elapsed_s,
        epsilon = 1e-9
    );
    assert!(
        s.mean_first_photon_storage >= 1.0 && s.mean_first_photon_storage <= config.n_max as f64
    );
    assert_abs_diff_eq!(s.mean_output_fidelity, 0.6, epsilon = 1e-12);
    assert!(run
        .events
        .windows(2)
        .all(|w| w[0].pulse_index <= w[1].pulse_index));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn timeline_agrees_with_closed_form(
        herald_rate in 1e5f64..2e6,
        n_min in 1u32..5,
        span in 0u32..200,
        p in 0.05f64..0.9,
        seed in any::<u64>(),
    ) {
        let config = ProtocolConfig {
            herald_rate_hz: herald_rate,
            n_min,
            n_max: n_min + span,
            rng_seed: seed,
            photon: PhotonModel::pure(),
            window: AcceptanceWindow::default(),
            ..ProtocolConfig::default()
        };
        let table = HeraldTable::constant(config.n_min, config.n_max, p, 0.5);
        let run = simulate_timeline(&config, &table, 0.02, false).unwrap();
        let closed = closed_form_rate(&config, &table);
        prop_assert!((closed - generation_rate(&config, p)).abs() < 1e-9 * closed.max(1.0));
        let z = rate_z_score(&run.statistics, closed);
        prop_assert!(z.abs() < 3.0, "z = {}", z);
    }
}
