//! Two-mode operations of the breeding step: beam splitter, photon loss,
//! homodyne conditioning with a finite acceptance window.
//!
//! Two-mode matrices use the index `(n_a, n_b) → n_a·dim + n_b`.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{ensure_range, Error, Result};
use crate::fock::{same_cutoff, DensityOperator, FockCutoff, Physicality};
use crate::hermite::{hermite_functions, support_half_width};
use crate::linalg;
use crate::quadrature::integrate_adaptive;
use crate::CMatrix;

/// Absolute tolerance of every POVM matrix element.
pub const POVM_TOL: f64 = 1e-10;
/// Success probabilities below this are treated as impossible heralds.
pub const MIN_HERALD_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::A => Mode::B,
            Mode::B => Mode::A,
        }
    }
}

/// Density operator on two modes sharing one cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    matrix: CMatrix,
    cutoff: FockCutoff,
    truncation_deficit: f64,
}

impl TwoModeState {
    pub fn product(a: &DensityOperator, b: &DensityOperator) -> Result<Self> {
        same_cutoff(a.cutoff(), b.cutoff())?;
        Ok(Self {
            matrix: a.matrix().kronecker(b.matrix()),
            cutoff: a.cutoff(),
            truncation_deficit: 0.0,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    /// Trace lost when the output was cut back to `n_max` per mode.
    pub fn truncation_deficit(&self) -> f64 {
        self.truncation_deficit
    }

    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * self.cutoff.dim() + n_b
    }

    /// `⟨n_a n_b| ρ |m_a m_b⟩`
    pub fn element(&self, bra: (usize, usize), ket: (usize, usize)) -> Complex64 {
        self.matrix[(self.index(bra.0, bra.1), self.index(ket.0, ket.1))]
    }

    pub fn physicality(&self) -> Physicality {
        Physicality::of(&self.matrix)
    }

    /// Partial trace over the other mode.
    pub fn reduced(&self, keep: Mode) -> DensityOperator {
        let d = self.cutoff.dim();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    s += match keep {
                        Mode::A => self.matrix[(i * d + k, j * d + k)],
                        Mode::B => self.matrix[(k * d + i, k * d + j)],
                    };
                }
                out[(i, j)] = s;
            }
        }
        DensityOperator::normalized(out, self.cutoff)
    }

    /// `(⟨n_a⟩, ⟨n_b⟩)`
    pub fn mean_photon_numbers(&self) -> (f64, f64) {
        let d = self.cutoff.dim();
        let mut na = 0.0;
        let mut nb = 0.0;
        for a in 0..d {
            for b in 0..d {
                let p = self.matrix[(a * d + b, a * d + b)].re;
                na += a as f64 * p;
                nb += b as f64 * p;
            }
        }
        (na, nb)
    }
}

/// Lossless beam splitter with intensity transmittance `t` and phase `φ`.
///
/// Creation operators map as `a† → √t a† + √(1−t) e^{iφ} b†`,
/// `b† → √(1−t) a† − √t e^{iφ} b†`. At `t = 1/2, φ = 0` this is the real
/// symmetric splitter `a → (a+b)/√2`, `b → (a−b)/√2`, which sends `|1,1⟩`
/// to `(|2,0⟩ − |0,2⟩)/√2`.
///
/// The unitary conserves total photon number, so it is applied block by
/// block; components above the cutoff are dropped and reported as the
/// truncation deficit.
pub fn beam_splitter(
    a: &DensityOperator,
    b: &DensityOperator,
    transmittance: f64,
    phase: f64,
) -> Result<TwoModeState> {
    ensure_range("beam splitter transmittance", transmittance, 0.0, 1.0)?;
    same_cutoff(a.cutoff(), b.cutoff())?;
    let cutoff = a.cutoff();
    let d = cutoff.dim();
    let n = cutoff.n_max();
    let input = a.matrix().kronecker(b.matrix());

    let ta = transmittance.sqrt();
    let ra = (1.0 - transmittance).sqrt();
    let e = Complex64::from_polar(1.0, phase);
    let a_dag = (Complex64::new(ta, 0.0), e * ra);
    let b_dag = (Complex64::new(ra, 0.0), -e * ta);

    // Per total photon number N: basis indices and the (truncated) block.
    let blocks: Vec<(Vec<usize>, CMatrix)> = (0..=2 * n)
        .map(|total| {
            let lo = total.saturating_sub(n);
            let hi = total.min(n);
            let ks: Vec<usize> = (lo..=hi).collect();
            let idx = ks.iter().map(|&k| k * d + (total - k)).collect();
            let mut u = CMatrix::zeros(ks.len(), ks.len());
            for (col, &na) in ks.iter().enumerate() {
                let amps = transform_fock_pair(na, total - na, a_dag, b_dag);
                for (row, &k) in ks.iter().enumerate() {
                    u[(row, col)] = amps[k];
                }
            }
            (idx, u)
        })
        .collect();

    let mut out = CMatrix::zeros(d * d, d * d);
    for (idx_n, u_n) in &blocks {
        for (idx_m, u_m) in &blocks {
            let sub =
                CMatrix::from_fn(idx_n.len(), idx_m.len(), |r, c| input[(idx_n[r], idx_m[c])]);
            if sub.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let res = u_n * sub * u_m.adjoint();
            for (r, &gi) in idx_n.iter().enumerate() {
                for (c, &gj) in idx_m.iter().enumerate() {
                    out[(gi, gj)] = res[(r, c)];
                }
            }
        }
    }
    let kept = linalg::trace(&out).re;
    let mut matrix = linalg::hermitian_part(&out);
    matrix.unscale_mut(kept);
    Ok(TwoModeState {
        matrix,
        cutoff,
        truncation_deficit: (1.0 - kept).max(0.0),
    })
}

/// Output amplitudes over `|k, N−k⟩` of `(A†)^{na} (B†)^{nb} |0,0⟩/√(na! nb!)`
/// where `A† = u a† + v b†` (and likewise for `B†`).
fn transform_fock_pair(
    na: usize,
    nb: usize,
    a_dag: (Complex64, Complex64),
    b_dag: (Complex64, Complex64),
) -> Vec<Complex64> {
    let total = na + nb;
    let mut state = alloc::vec![Complex64::new(0.0, 0.0); total + 1];
    state[0] = Complex64::new(1.0, 0.0);
    let mut photons = 0;
    let mut apply = |(u, v): (Complex64, Complex64), j: usize, photons: usize| {
        let mut next = alloc::vec![Complex64::new(0.0, 0.0); total + 1];
        let norm = 1.0 / (j as f64).sqrt();
        for k in 0..=photons {
            let amp = state[k];
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            next[k + 1] += u * amp * ((k + 1) as f64).sqrt() * norm;
            next[k] += v * amp * ((photons - k + 1) as f64).sqrt() * norm;
        }
        state = next;
    };
    for j in 1..=na {
        apply(a_dag, j, photons);
        photons += 1;
    }
    for j in 1..=nb {
        apply(b_dag, j, photons);
        photons += 1;
    }
    state
}

/// Pure-loss channel with transmission `η`, via the Kraus operators
/// `A_k = Σ_n √C(n,k) η^{(n−k)/2} (1−η)^{k/2} |n−k⟩⟨n|`.
pub fn loss_channel(rho: &DensityOperator, eta: f64) -> Result<DensityOperator> {
    ensure_range("loss transmission", eta, 0.0, 1.0)?;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let d = rho.dim();
    let sb = linalg::sqrt_binomials(d);
    let src = rho.matrix();
    let out = DMatrix::from_fn(d, d, |m, n| {
        let base = libm::pow(eta, 0.5 * (m + n) as f64);
        let mut s = Complex64::new(0.0, 0.0);
        let mut lossk = 1.0;
        for k in 0..d - m.max(n) {
            s += src[(m + k, n + k)] * (sb[m + k][k] * sb[n + k][k] * base * lossk);
            lossk *= 1.0 - eta;
        }
        s
    });
    Ok(DensityOperator::normalized(out, rho.cutoff()))
}

/// Heisenberg-picture loss map `L†(Π) = Σ_k A_k† Π A_k`, used to move
/// detector inefficiency onto measurement operators.
pub fn loss_adjoint(op: &CMatrix, eta: f64) -> Result<CMatrix> {
    ensure_range("loss transmission", eta, 0.0, 1.0)?;
    let d = op.nrows();
    if eta == 1.0 {
        return Ok(op.clone());
    }
    let sb = linalg::sqrt_binomials(d);
    Ok(DMatrix::from_fn(d, d, |m, n| {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..=m.min(n) {
            let w = sb[m][k]
                * sb[n][k]
                * libm::pow(eta, 0.5 * (m + n) as f64 - k as f64)
                * libm::pow(1.0 - eta, k as f64);
            s += op[(m - k, n - k)] * w;
        }
        s
    }))
}

/// Accepted quadrature interval `[−ε, ε]` measured at LO phase `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceWindow {
    half_width: f64,
    phase: f64,
}

impl AcceptanceWindow {
    /// `half_width` may be `+∞` (accept everything).
    pub fn new(half_width: f64, phase: f64) -> Result<Self> {
        if !(half_width > 0.0) || !phase.is_finite() {
            return Err(Error::Domain {
                what: "acceptance half-width",
                value: half_width,
            });
        }
        Ok(Self { half_width, phase })
    }

    /// Window centred on `x = 0` for the `x̂` quadrature.
    pub fn x(half_width: f64) -> Result<Self> {
        Self::new(half_width, 0.0)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

impl Default for AcceptanceWindow {
    fn default() -> Self {
        Self {
            half_width: 0.3,
            phase: 0.0,
        }
    }
}

/// Real symmetric overlaps `∫_lo^hi ψ_m(x) ψ_n(x) dx` for `m, n < dim`.
/// Infinite bounds are clipped where every `ψ_n` has vanished.
pub fn quadrature_overlaps(lo: f64, hi: f64, dim: usize) -> DMatrix<f64> {
    let limit = support_half_width(dim);
    let lo = lo.max(-limit);
    let hi = hi.min(limit);
    let mut out = DMatrix::zeros(dim, dim);
    if !(hi > lo) {
        return out;
    }
    let tri = dim * (dim + 1) / 2;
    let mut psi = alloc::vec![0.0; dim];
    let flat = integrate_adaptive(
        |x, dst| {
            hermite_functions(x, &mut psi);
            let mut i = 0;
            for m in 0..dim {
                for n in m..dim {
                    dst[i] = psi[m] * psi[n];
                    i += 1;
                }
            }
        },
        lo,
        hi,
        tri,
        POVM_TOL,
    );
    let mut i = 0;
    for m in 0..dim {
        for n in m..dim {
            out[(m, n)] = flat[i];
            out[(n, m)] = flat[i];
            i += 1;
        }
    }
    out
}

/// `Π_mn = e^{i(m−n)θ} ∫ψ_mψ_n` over `[lo, hi]`, the projector onto
/// `x_θ ∈ [lo, hi]`.
pub fn phased_povm(overlaps: &DMatrix<f64>, phase: f64) -> CMatrix {
    DMatrix::from_fn(overlaps.nrows(), overlaps.ncols(), |m, n| {
        Complex64::from_polar(overlaps[(m, n)], phase * (m as f64 - n as f64))
    })
}

/// POVM element for a homodyne outcome inside `window`, seen through a
/// detector of efficiency `η_d` (loss applied before an ideal measurement).
pub fn homodyne_povm(
    window: &AcceptanceWindow,
    cutoff: FockCutoff,
    detector_efficiency: f64,
) -> Result<CMatrix> {
    if !(detector_efficiency > 0.0 && detector_efficiency <= 1.0) {
        return Err(Error::Domain {
            what: "detector efficiency",
            value: detector_efficiency,
        });
    }
    let overlaps = quadrature_overlaps(-window.half_width, window.half_width, cutoff.dim());
    loss_adjoint(&phased_povm(&overlaps, window.phase), detector_efficiency)
}

/// Conditional state of the unmeasured mode and its herald probability.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldOutcome {
    pub state: DensityOperator,
    pub probability: f64,
}

pub fn condition(
    two_mode: &TwoModeState,
    measured: Mode,
    window: &AcceptanceWindow,
    detector_efficiency: f64,
) -> Result<HeraldOutcome> {
    let povm = homodyne_povm(window, two_mode.cutoff, detector_efficiency)?;
    condition_with_povm(two_mode, measured, &povm)
}

/// `p = Tr[(1⊗Π)ρ]`, `ρ_out = Tr_measured[(1⊗Π)ρ]/p`.
pub fn condition_with_povm(
    two_mode: &TwoModeState,
    measured: Mode,
    povm: &CMatrix,
) -> Result<HeraldOutcome> {
    let d = two_mode.cutoff.dim();
    if povm.nrows() != d {
        return Err(Error::Dimension {
            expected: d,
            got: povm.nrows(),
        });
    }
    let rho = &two_mode.matrix;
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..d {
                for l in 0..d {
                    let p = povm[(l, k)];
                    if p.norm_sqr() == 0.0 {
                        continue;
                    }
                    let r = match measured {
                        Mode::B => rho[(i * d + k, j * d + l)],
                        Mode::A => rho[(k * d + i, l * d + j)],
                    };
                    s += r * p;
                }
            }
            out[(i, j)] = s;
        }
    }
    let probability = linalg::trace(&out).re;
    if !(probability >= MIN_HERALD_PROBABILITY) {
        return Err(Error::HeraldImpossible { probability });
    }
    Ok(HeraldOutcome {
        state: DensityOperator::normalized(out, two_mode.cutoff),
        probability: probability.min(1.0),
    })
}

/// One breeding step with a precomputed conditioning POVM. Reuse it when
/// breeding many input pairs at the same cutoff.
#[derive(Debug, Clone)]
pub struct Breeder {
    povm: CMatrix,
    cutoff: FockCutoff,
}

impl Breeder {
    pub fn new(
        window: &AcceptanceWindow,
        cutoff: FockCutoff,
        detector_efficiency: f64,
    ) -> Result<Self> {
        Ok(Self {
            povm: homodyne_povm(window, cutoff, detector_efficiency)?,
            cutoff,
        })
    }

    pub fn povm(&self) -> &CMatrix {
        &self.povm
    }

    /// Balanced splitter, then the window test on mode `b`; returns mode `a`.
    pub fn breed(&self, a: &DensityOperator, b: &DensityOperator) -> Result<HeraldOutcome> {
        same_cutoff(self.cutoff, a.cutoff())?;
        let mixed = beam_splitter(a, b, 0.5, 0.0)?;
        condition_with_povm(&mixed, Mode::B, &self.povm)
    }
}

pub fn breed(
    a: &DensityOperator,
    b: &DensityOperator,
    window: &AcceptanceWindow,
    detector_efficiency: f64,
) -> Result<HeraldOutcome> {
    Breeder::new(window, a.cutoff(), detector_efficiency)?.breed(a, b)
}

/// Heralded photon as `F|1⟩⟨1| + q|2⟩⟨2| + (1−F−q)|0⟩⟨0|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonModel {
    pub fidelity: f64,
    /// Two-photon contamination from the down-conversion source.
    pub two_photon: f64,
}

impl Default for PhotonModel {
    fn default() -> Self {
        Self {
            fidelity: 0.87,
            two_photon: 0.0,
        }
    }
}

impl PhotonModel {
    pub fn pure() -> Self {
        Self {
            fidelity: 1.0,
            two_photon: 0.0,
        }
    }

    pub fn density(&self, cutoff: FockCutoff) -> Result<DensityOperator> {
        ensure_range("photon fidelity", self.fidelity, 0.0, 1.0)?;
        ensure_range(
            "two-photon fraction",
            self.two_photon,
            0.0,
            1.0 - self.fidelity,
        )?;
        DensityOperator::diagonal(
            &[
                1.0 - self.fidelity - self.two_photon,
                self.fidelity,
                self.two_photon,
            ],
            cutoff,
        )
    }
}

/// `(|1⟩⟨1|, |1⟩⟨1|)` through a balanced splitter at `n_max`.
pub fn hong_ou_mandel(cutoff: FockCutoff) -> Result<TwoModeState> {
    let one = DensityOperator::fock(1, cutoff)?;
    beam_splitter(&one, &one, 0.5, 0.0)
}

/// Amplitude `1/√2` used by the balanced splitter, exposed for tests.
pub const BALANCED_AMPLITUDE: f64 = FRAC_1_SQRT_2;
