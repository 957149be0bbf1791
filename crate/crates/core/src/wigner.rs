//! Wigner function from the Fock-basis Laguerre expansion.
//!
//! The element `|m⟩⟨n|` contributes `(−1)^n √(n!/m!) (2α)^{m−n}
//! L_n^{(m−n)}(4|α|²) e^{−2|α|²} / π` with `α = (x + ip)/√2`. The functions
//! `w_{mn}` are generated by their normalized Laguerre recurrences, so
//! no factorial or raw polynomial is evaluated. With this normalization
//! `|W| ≤ 1/π` and `W(0,0) = Tr(ρΠ)/π`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::fock::DensityOperator;

/// `W(x, p)`.
pub fn wigner(rho: &DensityOperator, x: f64, p: f64) -> f64 {
    let mut scratch = vec![Complex64::new(0.0, 0.0); rho.dim()];
    wigner_with_scratch(rho, x, p, &mut scratch)
}

fn wigner_with_scratch(rho: &DensityOperator, x: f64, p: f64, w: &mut [Complex64]) -> f64 {
    let m = rho.matrix();
    let d = rho.dim();
    let alpha = Complex64::new(x, p) * core::f64::consts::FRAC_1_SQRT_2;
    let two_alpha = alpha * 2.0;
    let two_alpha_conj = alpha.conj() * 2.0;

    // Row 0: w_{0n} = (2α)^n/√n! · w_00
    w[0] = Complex64::new((-2.0 * alpha.norm_sqr()).exp() / PI, 0.0);
    let mut total = m[(0, 0)].re * w[0].re;
    for n in 1..d {
        w[n] = two_alpha * w[n - 1] / (n as f64).sqrt();
        total += 2.0 * (m[(0, n)] * w[n]).re;
    }
    // Rows m ≥ 1 overwrite w in place: w[n] holds row m for n ≥ m.
    for row in 1..d {
        let sm = (row as f64).sqrt();
        let mut prev = w[row];
        w[row] = (two_alpha_conj * prev - sm * w[row - 1]) / sm;
        total += m[(row, row)].re * w[row].re;
        for n in row + 1..d {
            let next = (two_alpha * w[n - 1] - sm * prev) / (n as f64).sqrt();
            prev = w[n];
            w[n] = next;
            total += 2.0 * (m[(row, n)] * w[n]).re;
        }
    }
    total
}

/// Wigner values on a rectangular grid, stored row-major with `p` as the
/// slow index: `values[ip * xs.len() + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn evaluate(rho: &DensityOperator, xs: &[f64], ps: &[f64]) -> Self {
        let mut scratch = vec![Complex64::new(0.0, 0.0); rho.dim()];
        let mut values = Vec::with_capacity(xs.len() * ps.len());
        for &p in ps {
            for &x in xs {
                values.push(wigner_with_scratch(rho, x, p, &mut scratch));
            }
        }
        Self {
            xs: xs.to_vec(),
            ps: ps.to_vec(),
            values,
        }
    }

    /// Square grid of `n` points per axis on `[-half_width, half_width]`.
    pub fn square(rho: &DensityOperator, half_width: f64, n: usize) -> Self {
        let axis = linspace(-half_width, half_width, n);
        Self::evaluate(rho, &axis, &axis)
    }

    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ip * self.xs.len() + ix]
    }

    /// `(x, p, W)` of the smallest value.
    pub fn minimum(&self) -> (f64, f64, f64) {
        self.extremum(|a, b| a < b)
    }

    pub fn maximum(&self) -> (f64, f64, f64) {
        self.extremum(|a, b| a > b)
    }

    fn extremum(&self, better: impl Fn(f64, f64) -> bool) -> (f64, f64, f64) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if better(*v, self.values[best]) {
                best = i;
            }
        }
        let nx = self.xs.len();
        (self.xs[best % nx], self.ps[best / nx], self.values[best])
    }

    /// `max |W_self − W_other|` on a common grid.
    pub fn sup_distance(&self, other: &WignerGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
