//! Normalized Hermite functions, i.e. position-space Fock wavefunctions
//! `ψ_n(x) = π^{-1/4} (2^n n!)^{-1/2} H_n(x) e^{-x²/2}`.
//!
//! Values come from the normalized three-term recurrence
//! `ψ_{n+1} = x √(2/(n+1)) ψ_n − √(n/(n+1)) ψ_{n−1}`; no factorial is ever
//! formed, so high orders do not overflow.

use num_traits::Float;

const PI_QUARTER_INV: f64 = 0.751_125_544_464_942_5; // π^{-1/4}

/// `ψ_n(x)` for a single order.
pub fn quadrature_wavefunction(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI_QUARTER_INV * (-0.5 * x * x).exp();
    for k in 0..n {
        let next =
            x * (2.0 / (k as f64 + 1.0)).sqrt() * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[n] = ψ_n(x)` for `n < out.len()`.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI_QUARTER_INV * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = core::f64::consts::SQRT_2 * x * out[0];
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = x * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// Half-width beyond which every `ψ_n` with `n < dim` is negligible (< 1e-20).
pub fn support_half_width(dim: usize) -> f64 {
    let turning = (2.0 * dim as f64 + 1.0).sqrt();
    (turning + 8.0).max(12.0)
}
