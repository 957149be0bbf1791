//! States and operators on a truncated photon-number basis.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::CMatrix;

/// Default cutoff for protocol states (mean photon numbers stay below 3).
pub const PROTOCOL_N_MAX: usize = 20;
/// Default cutoff for squeezing-heavy constructions.
pub const SQUEEZE_N_MAX: usize = 30;
/// Norm lost to truncation above which a constructor flags its result.
pub const TRUNCATION_WARNING: f64 = 1e-6;

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Photon-number truncation `n ≤ n_max`; the Hilbert space has `n_max + 1` levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockCutoff {
    n_max: usize,
}

impl FockCutoff {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::Domain {
                what: "cutoff n_max",
                value: n_max as f64,
            });
        }
        Ok(Self { n_max })
    }

    pub fn protocol_default() -> Self {
        Self {
            n_max: PROTOCOL_N_MAX,
        }
    }

    pub fn n_max(self) -> usize {
        self.n_max
    }

    pub fn dim(self) -> usize {
        self.n_max + 1
    }
}

/// Normalized pure state. Carries the norm that was discarded by truncation
/// when it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
    cutoff: FockCutoff,
    truncation_deficit: f64,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails on a zero vector or wrong length.
    pub fn new(amplitudes: DVector<Complex64>, cutoff: FockCutoff) -> Result<Self> {
        Self::with_deficit(amplitudes, cutoff, 0.0)
    }

    pub(crate) fn with_deficit(
        amplitudes: DVector<Complex64>,
        cutoff: FockCutoff,
        truncation_deficit: f64,
    ) -> Result<Self> {
        if amplitudes.len() != cutoff.dim() {
            return Err(Error::Dimension {
                expected: cutoff.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain {
                what: "state norm",
                value: norm,
            });
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
            cutoff,
            truncation_deficit,
        })
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> Complex64 {
        self.amplitudes[n]
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    /// `1 − ‖ψ‖²` of the untruncated state before renormalization.
    pub fn truncation_deficit(&self) -> f64 {
        self.truncation_deficit
    }

    pub fn is_truncated(&self) -> bool {
        self.truncation_deficit > TRUNCATION_WARNING
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum()
    }

    /// `⟨self|other⟩`
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64> {
        same_cutoff(self.cutoff, other.cutoff)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
            cutoff: self.cutoff,
        }
    }
}

/// Deviations of a matrix from the density-operator invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physicality {
    /// `max |ρ − ρ†|`
    pub hermiticity: f64,
    /// `|Tr ρ − 1|`
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl Physicality {
    pub fn is_physical(&self) -> bool {
        self.hermiticity < HERMITICITY_TOL
            && self.trace_error < TRACE_TOL
            && self.min_eigenvalue > -POSITIVITY_TOL
    }

    pub fn of(matrix: &CMatrix) -> Self {
        Self {
            hermiticity: linalg::max_abs(&(matrix - matrix.adjoint())),
            trace_error: (linalg::trace(matrix) - Complex64::new(1.0, 0.0)).norm(),
            min_eigenvalue: linalg::hermitian_eigenvalues(matrix)
                .first()
                .copied()
                .unwrap_or(0.0),
        }
    }
}

/// Mixed state on a truncated Fock space: Hermitian, unit trace, positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    cutoff: FockCutoff,
}

impl DensityOperator {
    /// Validates the invariants; use for externally supplied matrices.
    pub fn new(matrix: CMatrix, cutoff: FockCutoff) -> Result<Self> {
        if matrix.nrows() != cutoff.dim() || matrix.ncols() != cutoff.dim() {
            return Err(Error::Dimension {
                expected: cutoff.dim(),
                got: matrix.nrows(),
            });
        }
        let p = Physicality::of(&matrix);
        if !p.is_physical() {
            return Err(Error::NotPhysical(format!(
                "hermiticity {:e}, trace error {:e}, min eigenvalue {:e}",
                p.hermiticity, p.trace_error, p.min_eigenvalue
            )));
        }
        Ok(Self { matrix, cutoff })
    }

    /// Hermitian part of `matrix`, rescaled to unit trace. For outputs of
    /// maps that are physical up to round-off.
    pub(crate) fn normalized(matrix: CMatrix, cutoff: FockCutoff) -> Self {
        let mut matrix = linalg::hermitian_part(&matrix);
        let tr = linalg::trace(&matrix).re;
        matrix.unscale_mut(tr);
        Self { matrix, cutoff }
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    pub fn fock(n: usize, cutoff: FockCutoff) -> Result<Self> {
        Ok(fock_state(n, cutoff)?.to_density())
    }

    pub fn vacuum(cutoff: FockCutoff) -> Self {
        let mut matrix = CMatrix::zeros(cutoff.dim(), cutoff.dim());
        matrix[(0, 0)] = Complex64::new(1.0, 0.0);
        Self { matrix, cutoff }
    }

    /// Diagonal state from photon-number populations (missing entries are 0).
    pub fn diagonal(populations: &[f64], cutoff: FockCutoff) -> Result<Self> {
        if populations.len() > cutoff.dim() {
            return Err(Error::Dimension {
                expected: cutoff.dim(),
                got: populations.len(),
            });
        }
        let total: f64 = populations.iter().sum();
        if populations.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::Domain {
                what: "population sum",
                value: total,
            });
        }
        let mut matrix = CMatrix::zeros(cutoff.dim(), cutoff.dim());
        for (n, p) in populations.iter().enumerate() {
            matrix[(n, n)] = Complex64::new(*p, 0.0);
        }
        Ok(Self { matrix, cutoff })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff.dim()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn population(&self, n: usize) -> f64 {
        self.matrix[(n, n)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `Tr(ρ Π)` with the parity operator `Π = (−1)^n̂`.
    pub fn parity(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
            .sum()
    }

    /// `Tr(ρ A)`
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        // Tr(ρA) = Σ_mn ρ_mn A_nm
        self.matrix
            .iter()
            .zip(op.transpose().iter())
            .map(|(r, a)| r * a)
            .sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn physicality(&self) -> Physicality {
        Physicality::of(&self.matrix)
    }

    /// `U ρ U†` with `U = exp(i φ n̂)`.
    pub fn rotated(&self, phase: f64) -> Self {
        let matrix = CMatrix::from_fn(self.dim(), self.dim(), |m, n| {
            self.matrix[(m, n)] * Complex64::from_polar(1.0, phase * (m as f64 - n as f64))
        });
        Self {
            matrix,
            cutoff: self.cutoff,
        }
    }

    /// Re-expresses the state at another cutoff. Returns the population that
    /// was dropped (zero when enlarging); the result is renormalized.
    pub fn with_cutoff(&self, cutoff: FockCutoff) -> (Self, f64) {
        let d = cutoff.dim().min(self.dim());
        let mut matrix = CMatrix::zeros(cutoff.dim(), cutoff.dim());
        matrix
            .view_mut((0, 0), (d, d))
            .copy_from(&self.matrix.view((0, 0), (d, d)));
        let kept = linalg::trace(&matrix).re;
        (Self::normalized(matrix, cutoff), 1.0 - kept)
    }

    /// Convex combination `Σ w_i ρ_i / Σ w_i`.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Domain {
            what: "mixture size",
            value: 0.0,
        })?;
        let cutoff = first.1.cutoff;
        let mut matrix = CMatrix::zeros(cutoff.dim(), cutoff.dim());
        let mut total = 0.0;
        for (w, rho) in parts {
            same_cutoff(cutoff, rho.cutoff)?;
            if !(*w >= 0.0) {
                return Err(Error::Domain {
                    what: "mixture weight",
                    value: *w,
                });
            }
            matrix += &rho.matrix * Complex64::new(*w, 0.0);
            total += w;
        }
        if !(total > 0.0) {
            return Err(Error::Domain {
                what: "mixture weight sum",
                value: total,
            });
        }
        Ok(Self::normalized(matrix, cutoff))
    }
}

pub(crate) fn same_cutoff(a: FockCutoff, b: FockCutoff) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::CutoffMismatch {
            left: a.n_max(),
            right: b.n_max(),
        })
    }
}

/// Number state `|n⟩`.
pub fn fock_state(n: usize, cutoff: FockCutoff) -> Result<StateVector> {
    if n > cutoff.n_max() {
        return Err(Error::Domain {
            what: "Fock index",
            value: n as f64,
        });
    }
    let mut amps = DVector::zeros(cutoff.dim());
    amps[n] = Complex64::new(1.0, 0.0);
    StateVector::new(amps, cutoff)
}

/// Coherent state `|α⟩`, renormalized after truncation; the Poisson tail
/// above `n_max` is kept as the truncation deficit.
pub fn coherent_state(alpha: Complex64, cutoff: FockCutoff) -> StateVector {
    let amps = coherent_amplitudes(alpha, cutoff.dim());
    let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    StateVector::with_deficit(amps, cutoff, (1.0 - kept).max(0.0))
        .expect("coherent amplitudes have positive norm")
}

fn coherent_amplitudes(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let mut amps = DVector::zeros(dim);
    amps[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..dim {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    amps
}

/// Squeezing operator on the truncated space together with its measured
/// departure from unitarity.
#[derive(Debug, Clone)]
pub struct SqueezeOperator {
    matrix: CMatrix,
    unitarity_deviation: f64,
}

impl SqueezeOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `max |S†S − 1|`
    pub fn unitarity_deviation(&self) -> f64 {
        self.unitarity_deviation
    }
}

pub const MAX_SQUEEZE_DB: f64 = 20.0;
const UNITARITY_TOL: f64 = 1e-6;

/// Squeeze parameter `r` for a variance reduction of `s_db` decibels:
/// `e^{-2r} = 10^{-s_db/10}`.
pub fn squeeze_parameter(s_db: f64) -> f64 {
    libm::log(libm::pow(10.0, s_db / 20.0))
}

/// `S(r) = exp(r/2 (a² − a†²))` with `r` from [`squeeze_parameter`];
/// positive decibels shrink the x-variance by `10^{-s_db/10}`.
///
/// The generator only couples `n ↔ n ± 2`, so the even and odd sectors are
/// exponentiated separately and never mix.
pub fn squeeze_matrix(s_db: f64, cutoff: FockCutoff) -> Result<SqueezeOperator> {
    crate::error::ensure_range("squeezing (dB)", s_db, -MAX_SQUEEZE_DB, MAX_SQUEEZE_DB)?;
    let r = squeeze_parameter(s_db);
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for parity in 0..2 {
        let levels: Vec<usize> = (parity..dim).step_by(2).collect();
        let k = levels.len();
        // i·G is Hermitian; exp(G) = exp(-i (iG)).
        let mut herm = CMatrix::zeros(k, k);
        for j in 0..k.saturating_sub(1) {
            let n = levels[j] as f64;
            // ⟨n|a²|n+2⟩ = √((n+1)(n+2)); G = r/2 (a² − a†²)
            let g = 0.5 * r * ((n + 1.0) * (n + 2.0)).sqrt();
            herm[(j, j + 1)] = Complex64::new(0.0, g);
            herm[(j + 1, j)] = Complex64::new(0.0, -g);
        }
        let block = linalg::hermitian_function(&herm, |v| Complex64::from_polar(1.0, -v));
        for (bi, &mi) in levels.iter().enumerate() {
            for (bj, &mj) in levels.iter().enumerate() {
                matrix[(mi, mj)] = block[(bi, bj)];
            }
        }
    }
    let unitarity_deviation =
        linalg::max_abs(&(matrix.adjoint() * &matrix - CMatrix::identity(dim, dim)));
    if unitarity_deviation > UNITARITY_TOL {
        return Err(Error::Truncation {
            deviation: unitarity_deviation,
        });
    }
    Ok(SqueezeOperator {
        matrix,
        unitarity_deviation,
    })
}

/// Even squeezed cat `S(s)(|α⟩ + |−α⟩)` up to normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetCatSpec {
    pub amplitude: f64,
    pub squeezing_db: f64,
}

impl Default for TargetCatSpec {
    fn default() -> Self {
        Self {
            amplitude: 1.63,
            squeezing_db: 3.64,
        }
    }
}

const CAT_WORKSPACE_PADDING: usize = 40;

/// Builds the even squeezed cat on a padded working space, then crops it to
/// `cutoff`; the cropped norm is reported as the truncation deficit.
pub fn target_cat(params: TargetCatSpec, cutoff: FockCutoff) -> Result<StateVector> {
    if cutoff.n_max() < PROTOCOL_N_MAX {
        return Err(Error::Domain {
            what: "target cat cutoff",
            value: cutoff.n_max() as f64,
        });
    }
    if !params.amplitude.is_finite() {
        return Err(Error::Domain {
            what: "cat amplitude",
            value: params.amplitude,
        });
    }
    let work = FockCutoff::new(cutoff.n_max() + CAT_WORKSPACE_PADDING)?;
    let mut cat = coherent_amplitudes(Complex64::new(params.amplitude, 0.0), work.dim());
    for n in (1..work.dim()).step_by(2) {
        cat[n] = Complex64::new(0.0, 0.0);
    }
    let cat = cat.unscale(cat.norm());
    let squeezed = squeeze_matrix(params.squeezing_db, work)?.into_matrix() * cat;
    let cropped = squeezed.rows(0, cutoff.dim()).into_owned();
    let kept = cropped.norm_squared();
    StateVector::with_deficit(cropped, cutoff, (1.0 - kept).max(0.0))
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
///
/// When either argument is pure, the overlap `⟨ψ|ρ|ψ⟩` is used instead of
/// matrix square roots.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_cutoff(rho.cutoff, sigma.cutoff)?;
    for state in [rho, sigma] {
        let min = state.eigenvalues()[0];
        if min < -POSITIVITY_TOL {
            return Err(Error::Domain {
                what: "fidelity input eigenvalue",
                value: min,
            });
        }
    }
    let f = if let Some(psi) = pure_vector(sigma) {
        overlap_fidelity(rho, &psi)
    } else if let Some(psi) = pure_vector(rho) {
        overlap_fidelity(sigma, &psi)
    } else {
        let root = linalg::sqrt_psd(&rho.matrix);
        let inner = &root * &sigma.matrix * &root;
        let s: f64 = linalg::hermitian_eigenvalues(&inner)
            .into_iter()
            .map(|v| v.max(0.0).sqrt())
            .sum();
        s * s
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩`
pub fn fidelity_to_pure(rho: &DensityOperator, psi: &StateVector) -> Result<f64> {
    same_cutoff(rho.cutoff, psi.cutoff)?;
    Ok(overlap_fidelity(rho, psi.amplitudes()).clamp(0.0, 1.0))
}

fn overlap_fidelity(rho: &DensityOperator, psi: &DVector<Complex64>) -> f64 {
    psi.dotc(&(&rho.matrix * psi)).re
}

const PURITY_TOL: f64 = 1e-10;

fn pure_vector(rho: &DensityOperator) -> Option<DVector<Complex64>> {
    if rho.purity() < 1.0 - PURITY_TOL {
        return None;
    }
    let (values, vectors) = linalg::hermitian_eigen(&rho.matrix);
    let top = values.len() - 1;
    Some(vectors.column(top).into_owned())
}

/// Annihilation operator on the truncated space.
pub fn annihilation(cutoff: FockCutoff) -> CMatrix {
    let d = cutoff.dim();
    DMatrix::from_fn(d, d, |m, n| {
        if n == m + 1 {
            Complex64::new((n as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `x = (a + a†)/√2` on the truncated space.
pub fn position_operator(cutoff: FockCutoff) -> CMatrix {
    let a = annihilation(cutoff);
    (&a + a.adjoint()) * Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    #[test]
    fn cutoff_needs_two_levels_above_vacuum() {
        assert!(FockCutoff::new(1).is_err());
        assert_eq!(c(10).dim(), 11);
    }

    #[test]
    fn fock_constructor() {
        let vac = fock_state(0, c(10)).unwrap();
        assert_eq!(vac.amplitude(0), Complex64::new(1.0, 0.0));
        let one = fock_state(1, c(10)).unwrap();
        assert_eq!(one.amplitude(1), Complex64::new(1.0, 0.0));
        assert_eq!(one.amplitude(0), Complex64::new(0.0, 0.0));
        assert!(matches!(fock_state(11, c(10)), Err(Error::Domain { .. })));
    }

    #[test]
    fn coherent_state_mean_photon_number() {
        let vac = coherent_state(Complex64::new(0.0, 0.0), c(10));
        assert_abs_diff_eq!(vac.amplitude(0).re, 1.0, epsilon = 1e-15);
        let psi = coherent_state(Complex64::new(1.63, 0.0), c(20));
        assert_abs_diff_eq!(psi.mean_photon_number(), 1.63 * 1.63, epsilon = 1e-4);
        assert!(!psi.is_truncated());
    }

    #[test]
    fn coherent_truncation_is_flagged() {
        let psi = coherent_state(Complex64::new(1.63, 0.0), c(3));
        // Poisson tail above n = 3 for mean 2.6569.
        let mean: f64 = 1.63 * 1.63;
        let mut term = (-mean).exp();
        let mut kept = term;
        for n in 1..=3 {
            term *= mean / n as f64;
            kept += term;
        }
        assert!(psi.is_truncated());
        assert_abs_diff_eq!(psi.truncation_deficit(), 1.0 - kept, epsilon = 1e-12);
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_squeezing_is_identity() {
        let s = squeeze_matrix(0.0, c(12)).unwrap();
        assert!(linalg::max_abs(&(s.matrix() - CMatrix::identity(13, 13))) < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_variance() {
        let cut = c(30);
        let s = squeeze_matrix(3.64, cut).unwrap();
        let vac = fock_state(0, cut).unwrap();
        let sq = s.matrix() * vac.amplitudes();
        let x = position_operator(cut);
        let var = sq.dotc(&(&x * &x * &sq)).re;
        assert_abs_diff_eq!(var, 0.5 * 10f64.powf(-0.364), epsilon = 1e-4);
    }

    #[test]
    fn squeeze_variance_against_wavefunction_quadrature() {
        // x-variance of the squeezed vacuum from its position wavefunction.
        let cut = c(30);
        let s = squeeze_matrix(3.64, cut).unwrap();
        let psi = s.matrix() * fock_state(0, cut).unwrap().amplitudes();
        let rule = crate::quadrature::GaussLegendre::new(200);
        let mut buf = [0.0; 31];
        let var = rule.integrate(-10.0, 10.0, |x| {
            crate::hermite::hermite_functions(x, &mut buf);
            let amp: Complex64 = psi.iter().zip(buf.iter()).map(|(a, h)| a * *h).sum();
            x * x * amp.norm_sqr()
        });
        assert_abs_diff_eq!(var, 0.5 * 10f64.powf(-0.364), epsilon = 1e-4);
    }

    #[test]
    fn squeeze_inverse_pair() {
        let cut = c(30);
        let a = squeeze_matrix(3.64, cut).unwrap();
        let b = squeeze_matrix(-3.64, cut).unwrap();
        let prod = b.matrix() * a.matrix();
        assert!(linalg::max_abs(&(prod - CMatrix::identity(31, 31))) < 1e-6);
    }

    #[test]
    fn squeeze_unitarity_contract() {
        for db in [-6.0, -3.0, 1.0, 3.64, 6.0] {
            let s = squeeze_matrix(db, c(30)).unwrap();
            assert!(s.unitarity_deviation() < 1e-6);
        }
        assert!(squeeze_matrix(25.0, c(30)).is_err());
    }

    #[test]
    fn unsqueezed_cat_vacuum_overlap() {
        let alpha: f64 = 1.63;
        let cat = target_cat(
            TargetCatSpec {
                amplitude: alpha,
                squeezing_db: 0.0,
            },
            c(20),
        )
        .unwrap();
        // |⟨0|α⟩ + ⟨0|−α⟩|² / ‖|α⟩ + |−α⟩‖² = 4e^{−α²} / (2 + 2e^{−2α²})
        let a2 = alpha * alpha;
        let expected = 4.0 * (-a2).exp() / (2.0 + 2.0 * (-2.0 * a2).exp());
        assert_abs_diff_eq!(cat.amplitude(0).norm_sqr(), expected, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_cat_is_vacuum() {
        let cat = target_cat(
            TargetCatSpec {
                amplitude: 0.0,
                squeezing_db: 0.0,
            },
            c(20),
        )
        .unwrap();
        assert_abs_diff_eq!(cat.amplitude(0).norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn default_cat_has_even_support() {
        let cat = target_cat(TargetCatSpec::default(), c(20)).unwrap();
        for n in (1..21).step_by(2) {
            assert!(cat.amplitude(n).norm() < 1e-12);
        }
        assert!(!cat.is_truncated());
        assert!(target_cat(TargetCatSpec::default(), c(19)).is_err());
    }

    #[test]
    fn cat_close_to_ideal_bred_state() {
        let cut = c(20);
        let cat = target_cat(TargetCatSpec::default(), cut).unwrap();
        let mut amps = DVector::zeros(21);
        amps[0] = Complex64::new(1.0, 0.0);
        amps[2] = Complex64::new(2f64.sqrt(), 0.0);
        let bred = StateVector::new(amps, cut).unwrap();
        let f = cat.overlap(&bred).unwrap().norm_sqr();
        assert!((f - 0.99).abs() < 0.005, "fidelity {f}");
    }

    #[test]
    fn fidelity_basics() {
        let cut = c(10);
        let rho = DensityOperator::diagonal(&[0.13, 0.87], cut).unwrap();
        let one = DensityOperator::fock(1, cut).unwrap();
        let zero = DensityOperator::vacuum(cut);
        assert_abs_diff_eq!(fidelity(&rho, &one).unwrap(), 0.87, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn uhlmann_matches_classical_fidelity_for_commuting_states() {
        let cut = c(4);
        let p = [0.5, 0.3, 0.2];
        let q = [0.2, 0.2, 0.6];
        let a = DensityOperator::diagonal(&p, cut).unwrap();
        let b = DensityOperator::diagonal(&q, cut).unwrap();
        let bc: f64 = p.iter().zip(&q).map(|(x, y)| (x * y).sqrt()).sum();
        assert_abs_diff_eq!(fidelity(&a, &b).unwrap(), bc * bc, epsilon = 1e-10);
        assert_abs_diff_eq!(fidelity(&b, &a).unwrap(), bc * bc, epsilon = 1e-10);
    }

    #[test]
    fn fidelity_rejects_non_positive() {
        let cut = c(3);
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = Complex64::new(1.2, 0.0);
        m[(1, 1)] = Complex64::new(-0.2, 0.0);
        let bad = DensityOperator::normalized(m, cut);
        let ok = DensityOperator::vacuum(cut);
        assert!(matches!(fidelity(&bad, &ok), Err(Error::Domain { .. })));
    }

    #[test]
    fn parity_and_rotation() {
        let cut = c(6);
        let rho = DensityOperator::diagonal(&[0.25, 0.5, 0.25], cut).unwrap();
        assert_abs_diff_eq!(rho.parity(), 0.0, epsilon = 1e-15);
        let psi = coherent_state(Complex64::new(0.5, 0.0), cut).to_density();
        let rot = psi.rotated(0.7);
        let expect = coherent_state(Complex64::from_polar(0.5, 0.7), cut).to_density();
        assert!(linalg::max_abs(&(rot.matrix() - expect.matrix())) < 1e-12);
    }

    #[test]
    fn rejects_unphysical_matrix() {
        let cut = c(2);
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            DensityOperator::new(m, cut),
            Err(Error::NotPhysical(_))
        ));
    }
}
