//! Synthetic homodyne data, binned maximum-likelihood state reconstruction
//! and bootstrap error bars.

mod bootstrap;
mod maxlik;

pub use bootstrap::{bootstrap, percentile, BootstrapSettings, BootstrapSummary};
pub use maxlik::{
    maxlik_reconstruct, Binning, Diagnostics, EfficiencyModel, MaxLikProblem, MaxLikSettings,
    ReconstructionResult, StopReason,
};

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::hermite::hermite_functions;
use crate::optics::quadrature_overlaps;
use crate::Complex64;

/// One quadrature outcome `x` at local-oscillator phase `θ ∈ [0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneSample {
    theta: f64,
    x: f64,
}

impl HomodyneSample {
    /// Folds `θ` into `[0, π)` using `x_{θ+π} = −x_θ`.
    pub fn new(theta: f64, x: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Domain {
                what: "homodyne phase",
                value: theta,
            });
        }
        if !x.is_finite() {
            return Err(Error::Domain {
                what: "homodyne quadrature",
                value: x,
            });
        }
        let mut theta = num_traits::Euclid::rem_euclid(&theta, &(2.0 * PI));
        let mut x = x;
        if theta >= PI {
            theta -= PI;
            x = -x;
        }
        if theta >= PI {
            theta = 0.0;
            x = -x;
        }
        Ok(Self { theta, x })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetMetadata {
    /// Free-form description of what produced the data.
    pub source: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HomodyneDataset {
    samples: Vec<HomodyneSample>,
    pub metadata: DatasetMetadata,
}

impl HomodyneDataset {
    pub fn new(samples: Vec<HomodyneSample>, metadata: DatasetMetadata) -> Self {
        Self { samples, metadata }
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let samples = pairs
            .iter()
            .map(|&(t, x)| HomodyneSample::new(t, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(samples, DatasetMetadata::default()))
    }

    pub fn samples(&self) -> &[HomodyneSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn extend(&mut self, other: &HomodyneDataset) {
        self.samples.extend_from_slice(&other.samples);
    }

    /// Shifts every phase by `delta`. The result is data of
    /// `ρ.rotated(delta)` if `self` was data of `ρ`.
    pub fn rotated(&self, delta: f64) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| HomodyneSample::new(s.theta + delta, s.x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(samples, self.metadata.clone()))
    }
}

/// Quadrature distribution `pr(x|θ) = Σ ρ_mn e^{i(n−m)θ} ψ_m(x) ψ_n(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPdf {
    /// Real part of the phase-rotated density matrix; the imaginary part
    /// cancels in the sum.
    kernel: DMatrix<f64>,
}

pub fn marginal_pdf(rho: &DensityOperator, theta: f64) -> MarginalPdf {
    MarginalPdf {
        kernel: rho.rotated(-theta).matrix().map(|z| z.re),
    }
}

impl MarginalPdf {
    pub fn density(&self, x: f64) -> f64 {
        let d = self.kernel.nrows();
        let mut psi = alloc::vec![0.0; d];
        self.density_with(x, &mut psi)
    }

    fn density_with(&self, x: f64, psi: &mut [f64]) -> f64 {
        hermite_functions(x, psi);
        let mut s = 0.0;
        for (m, pm) in psi.iter().enumerate() {
            let row: f64 = psi
                .iter()
                .enumerate()
                .map(|(n, pn)| self.kernel[(m, n)] * pn)
                .sum();
            s += pm * row;
        }
        s
    }

    /// Probability of `x ∈ [lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let overlaps = quadrature_overlaps(lo, hi, self.kernel.nrows());
        self.kernel.component_mul(&overlaps).sum()
    }
}

pub const SAMPLING_SPAN: f64 = 12.0;
pub const SAMPLING_GRID: usize = 4096;

/// Inverse-CDF sampler on a fixed grid with linear interpolation.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    theta: f64,
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuadratureSampler {
    pub fn new(rho: &DensityOperator, theta: f64) -> Self {
        let pdf = marginal_pdf(rho, theta);
        let xs = crate::wigner::linspace(-SAMPLING_SPAN, SAMPLING_SPAN, SAMPLING_GRID);
        let mut psi = alloc::vec![0.0; rho.dim()];
        let values: Vec<f64> = xs
            .iter()
            .map(|&x| pdf.density_with(x, &mut psi).max(0.0))
            .collect();
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..xs.len() {
            acc += 0.5 * (values[i] + values[i - 1]) * (xs[i] - xs[i - 1]);
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Self { theta, xs, cdf }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self
            .cdf
            .partition_point(|&c| c <= u)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[i - 1] + t * (self.xs[i] - self.xs[i - 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<HomodyneSample> {
        (0..count)
            .map(|_| HomodyneSample::new(self.theta, self.draw(rng)).expect("finite sample"))
            .collect()
    }
}

/// `count` i.i.d. quadrature samples of `ρ` at phase `θ`.
pub fn sample_homodyne<R: Rng + ?Sized>(
    rho: &DensityOperator,
    theta: f64,
    count: usize,
    rng: &mut R,
) -> Result<HomodyneDataset> {
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    let samples = QuadratureSampler::new(rho, theta).sample(count, rng);
    Ok(HomodyneDataset::new(samples, DatasetMetadata::default()))
}

/// Acquisition schedule: `total` samples spread over `phases` uniform LO
/// phases in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub phases: usize,
    pub total: usize,
    /// Standard deviation of Gaussian LO phase jitter, radians.
    pub phase_noise: f64,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            phases: 12,
            total: 17_000,
            phase_noise: 0.0,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn phase_values(&self) -> Vec<f64> {
        (0..self.phases)
            .map(|k| PI * k as f64 / self.phases as f64)
            .collect()
    }
}

/// Samples a full dataset. Phase jitter is sampled exactly through the
/// jitter-averaged state, whose coherences decay as `e^{−σ²(m−n)²/2}`.
pub fn sample_plan(rho: &DensityOperator, plan: &SamplingPlan) -> Result<HomodyneDataset> {
    if plan.phases == 0 || plan.total == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(plan.phase_noise >= 0.0 && plan.phase_noise.is_finite()) {
        return Err(Error::Domain {
            what: "phase noise",
            value: plan.phase_noise,
        });
    }
    let source = if plan.phase_noise > 0.0 {
        let s2 = plan.phase_noise * plan.phase_noise;
        let m = DMatrix::from_fn(rho.dim(), rho.dim(), |m, n| {
            let k = m as f64 - n as f64;
            rho.matrix()[(m, n)] * Complex64::new((-0.5 * s2 * k * k).exp(), 0.0)
        });
        DensityOperator::normalized(m, rho.cutoff())
    } else {
        rho.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut samples = Vec::with_capacity(plan.total);
    for (k, theta) in plan.phase_values().into_iter().enumerate() {
        let count = plan.total / plan.phases + usize::from(k < plan.total % plan.phases);
        samples.extend(QuadratureSampler::new(&source, theta).sample(count, &mut rng));
    }
    Ok(HomodyneDataset::new(
        samples,
        DatasetMetadata {
            source: String::from("synthetic"),
            seed: Some(plan.seed),
        },
    ))
}
