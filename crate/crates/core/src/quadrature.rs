//! Gauss–Legendre rules and an adaptive vector-valued integrator.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `order`-point rule on [-1, 1], nodes by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[order - 1 - i] = z;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Scalar integral over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }

    /// Vector integral over [a, b]; `f(x, out)` overwrites `out`, results are
    /// accumulated into `acc`.
    pub fn integrate_into<F: FnMut(f64, &mut [f64])>(
        &self,
        a: f64,
        b: f64,
        f: &mut F,
        scratch: &mut [f64],
        acc: &mut [f64],
    ) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            f(mid + half * t, scratch);
            for (a, s) in acc.iter_mut().zip(scratch.iter()) {
                *a += w * half * s;
            }
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive integration of a vector-valued integrand of length `dim`.
///
/// Each panel is accepted when a 12-point and a 24-point rule agree to
/// `abs_tol` (max-norm); otherwise it is bisected. Depth is capped at 40.
pub fn integrate_adaptive<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    a: f64,
    b: f64,
    dim: usize,
    abs_tol: f64,
) -> Vec<f64> {
    let coarse = GaussLegendre::new(12);
    let fine = GaussLegendre::new(24);
    let mut total = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    let mut stack = vec![(a, b, 0u32)];
    while let Some((l, r, depth)) = stack.pop() {
        lo.iter_mut().for_each(|v| *v = 0.0);
        hi.iter_mut().for_each(|v| *v = 0.0);
        coarse.integrate_into(l, r, &mut f, &mut scratch, &mut lo);
        fine.integrate_into(l, r, &mut f, &mut scratch, &mut hi);
        let err = lo
            .iter()
            .zip(&hi)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        // Tolerance is shared between the two halves on refinement.
        let local_tol = abs_tol * (r - l) / (b - a).abs().max(f64::MIN_POSITIVE);
        if err <= local_tol.max(abs_tol * 1e-3) || depth >= 40 {
            for (t, v) in total.iter_mut().zip(&hi) {
                *t += v;
            }
        } else {
            let m = 0.5 * (l + r);
            stack.push((m, r, depth + 1));
            stack.push((l, m, depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        // Degree 15 is the exactness limit for 8 points.
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-9);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 12, 24, 40] {
            let s: f64 = GaussLegendre::new(n).weights().iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn adaptive_gaussian_matches_erf() {
        let v = integrate_adaptive(
            |x, out| out[0] = (-x * x).exp() / PI.sqrt(),
            -0.3,
            0.3,
            1,
            1e-12,
        );
        assert_abs_diff_eq!(v[0], libm::erf(0.3), epsilon = 1e-12);
        let v = integrate_adaptive(|x, out| out[0] = (-x * x).exp(), -12.0, 12.0, 1, 1e-12);
        assert_abs_diff_eq!(v[0], PI.sqrt(), epsilon = 1e-11);
    }
}
