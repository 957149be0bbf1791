//! Randomized invariants: physicality of every map, channel composition,
//! energy conservation, special-function identities, Wigner bound and
//! measurement completeness.

use breedsim_core::hermite::{hermite_functions, quadrature_wavefunction};
use breedsim_core::optics::{
    beam_splitter, breed, condition, homodyne_povm, loss_adjoint, loss_channel, phased_povm,
    quadrature_overlaps, AcceptanceWindow, Mode,
};
use breedsim_core::protocol::storage_evolve;
use breedsim_core::wigner::wigner;
use breedsim_core::{fidelity, CMatrix, Complex64, DensityOperator, FockCutoff};
use proptest::prelude::*;
use std::f64::consts::PI;

const CASES: u32 = 1000;

fn random_state(n_max: usize, support: usize, entries: &[(f64, f64)]) -> DensityOperator {
    let cutoff = FockCutoff::new(n_max).unwrap();
    let d = cutoff.dim();
    let g = CMatrix::from_fn(d, d, |r, c| {
        if r > support {
            Complex64::new(0.0, 0.0)
        } else {
            let (re, im) = entries[(r * d + c) % entries.len()];
            Complex64::new(re, im)
        }
    });
    let mut m = &g * g.adjoint();
    if m.trace().re < 1e-6 {
        m[(0, 0)] += Complex64::new(1.0, 0.0);
    }
    let tr = m.trace();
    DensityOperator::new(m / tr, cutoff).unwrap()
}

fn state_strategy(max_cutoff: usize) -> impl Strategy<Value = DensityOperator> {
    (2..=max_cutoff).prop_flat_map(|n| {
        (
            Just(n),
            0..=n,
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), (n + 1) * (n + 1)),
        )
            .prop_map(|(n, s, e)| random_state(n, s, &e))
    })
}

fn same_cutoff_pair(
    max_cutoff: usize,
) -> impl Strategy<Value = (DensityOperator, DensityOperator)> {
    (2..=max_cutoff).prop_flat_map(|n| {
        let entries = prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), (n + 1) * (n + 1));
        (0..=n, entries.clone(), 0..=n, entries)
            .prop_map(move |(s, a, t, b)| (random_state(n, s, &a), random_state(n, t, &b)))
    })
}

/// Pair of states whose combined photon number never exceeds the cutoff.
fn low_pair_strategy() -> impl Strategy<Value = (DensityOperator, DensityOperator)> {
    (2usize..=6).prop_flat_map(|n| {
        let half = n / 2;
        (
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), (n + 1) * (n + 1)),
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), (n + 1) * (n + 1)),
        )
            .prop_map(move |(a, b)| (random_state(n, half, &a), random_state(n, n - half, &b)))
    })
}

fn number_operator_mean(rho: &DensityOperator) -> f64 {
    rho.mean_photon_number()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn loss_channel_stays_physical(rho in state_strategy(8), eta in 0.0f64..=1.0) {
        let out = loss_channel(&rho, eta).unwrap();
        prop_assert!(out.physicality().is_physical(), "{:?}", out.physicality());
        prop_assert!((out.mean_photon_number() - eta * rho.mean_photon_number()).abs() < 1e-10);
    }

    #[test]
    fn loss_semigroup(rho in state_strategy(8), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let twice = loss_channel(&loss_channel(&rho, e1).unwrap(), e2).unwrap();
        let once = loss_channel(&rho, e1 * e2).unwrap();
        prop_assert!((twice.matrix() - once.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
    }

    #[test]
    fn storage_composes(rho in state_strategy(6), a in 0u32..20, b in 0u32..20, t in 0.9f64..=1.0) {
        let split = storage_evolve(&storage_evolve(&rho, a, t).unwrap(), b, t).unwrap();
        let joint = storage_evolve(&rho, a + b, t).unwrap();
        prop_assert!((split.matrix() - joint.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
    }

    #[test]
    fn loss_adjoint_is_dual((rho, sigma) in same_cutoff_pair(6), eta in 0.0f64..=1.0) {
        let lhs = (sigma.matrix() * loss_channel(&rho, eta).unwrap().matrix()).trace();
        let rhs = (loss_adjoint(sigma.matrix(), eta).unwrap() * rho.matrix()).trace();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn beam_splitter_conserves_energy(
        (a, b) in low_pair_strategy(),
        t in 0.0f64..=1.0,
        phase in -PI..PI,
    ) {
        let out = beam_splitter(&a, &b, t, phase).unwrap();
        prop_assert!(out.truncation_deficit() < 1e-12);
        prop_assert!(out.physicality().is_physical(), "{:?}", out.physicality());
        let (na, nb) = out.mean_photon_numbers();
        let before = number_operator_mean(&a) + number_operator_mean(&b);
        prop_assert!((na + nb - before).abs() < 1e-10);
        prop_assert!(out.reduced(Mode::A).physicality().is_physical());
    }

    #[test]
    fn conditioning_stays_physical(
        (a, b) in low_pair_strategy(),
        eps in 0.05f64..3.0,
        phase in 0.0f64..PI,
        eta in 0.3f64..=1.0,
    ) {
        let mixed = beam_splitter(&a, &b, 0.5, 0.0).unwrap();
        let window = AcceptanceWindow::new(eps, phase).unwrap();
        if let Ok(out) = condition(&mixed, Mode::B, &window, eta) {
            prop_assert!(out.probability > 0.0 && out.probability <= 1.0);
            prop_assert!(out.state.physicality().is_physical(), "{:?}", out.state.physicality());
        }
        if let Ok(out) = breed(&a, &b, &window, eta) {
            prop_assert!(out.state.physicality().is_physical());
        }
    }

    #[test]
    fn rotation_and_fidelity((rho, sigma) in same_cutoff_pair(6), phase in -PI..PI) {
        let r = rho.rotated(phase);
        prop_assert!(r.physicality().is_physical());
        prop_assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-6);
        let f = fidelity(&rho, &sigma).unwrap();
        let g = fidelity(&sigma, &rho).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&f));
        prop_assert!((f - g).abs() < 1e-6);
    }

    #[test]
    fn hermite_recurrence(n in 1usize..80, x in -12.0f64..12.0) {
        let mut psi = vec![0.0; n + 2];
        hermite_functions(x, &mut psi);
        let lhs = psi[n + 1];
        let rhs = x * (2.0 / (n as f64 + 1.0)).sqrt() * psi[n] - (n as f64 / (n as f64 + 1.0)).sqrt() * psi[n - 1];
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!((quadrature_wavefunction(n, x) - psi[n]).abs() < 1e-12);
        let mirrored = if n % 2 == 0 { psi[n] } else { -psi[n] };
        prop_assert!((quadrature_wavefunction(n, -x) - mirrored).abs() < 1e-12);
        // Ladder identity: ψ_n' = √(n/2) ψ_{n−1} − √((n+1)/2) ψ_{n+1}, checked by central difference.
        let h = 1e-5;
        let deriv = (quadrature_wavefunction(n, x + h) - quadrature_wavefunction(n, x - h)) / (2.0 * h);
        let ladder = (n as f64 / 2.0).sqrt() * psi[n - 1] - ((n as f64 + 1.0) / 2.0).sqrt() * psi[n + 1];
        prop_assert!((deriv - ladder).abs() < 1e-7);
    }

    #[test]
    fn hermite_matches_explicit_polynomials(n in 0usize..25, x in -5.0f64..5.0) {
        // Physicists' Hermite polynomials and explicit normalization.
        let (mut h0, mut h1) = (1.0f64, 2.0 * x);
        let h = if n == 0 {
            h0
        } else {
            for k in 1..n {
                let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        };
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let expected = h * (-x * x / 2.0).exp() / (2f64.powi(n as i32) * fact * PI.sqrt()).sqrt();
        let got = quadrature_wavefunction(n, x);
        prop_assert!((got - expected).abs() < 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn wigner_is_bounded(rho in state_strategy(8), x in -6.0f64..6.0, p in -6.0f64..6.0) {
        let w = wigner(&rho, x, p);
        prop_assert!(w.is_finite());
        prop_assert!(w.abs() <= 1.0 / PI + 1e-12, "W = {}", w);
    }

    #[test]
    fn povm_partition_is_complete(
        mut cuts in prop::collection::vec(-7.0f64..7.0, 1..6),
        n_max in 2usize..12,
        phase in 0.0f64..PI,
        eta in 0.1f64..=1.0,
    ) {
        cuts.sort_by(f64::total_cmp);
        let d = n_max + 1;
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend(cuts);
        edges.push(f64::INFINITY);
        let mut total = CMatrix::zeros(d, d);
        for w in edges.windows(2) {
            let element = phased_povm(&quadrature_overlaps(w[0], w[1], d), phase);
            total += loss_adjoint(&element, eta).unwrap();
        }
        prop_assert!((total - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-8);
    }

    #[test]
    fn window_povm_is_an_effect(eps in 0.01f64..4.0, phase in 0.0f64..PI, eta in 0.1f64..=1.0, n_max in 2usize..10) {
        let cutoff = FockCutoff::new(n_max).unwrap();
        let povm = homodyne_povm(&AcceptanceWindow::new(eps, phase).unwrap(), cutoff, eta).unwrap();
        let as_state = DensityOperator::new(povm.clone() / povm.trace(), cutoff);
        prop_assert!(as_state.is_ok());
        let complement = CMatrix::identity(cutoff.dim(), cutoff.dim()) - povm;
        let eig = complement.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|v| *v > -1e-9));
    }
}
