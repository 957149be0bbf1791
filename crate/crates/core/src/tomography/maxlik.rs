//! Binned `RρR` maximum-likelihood reconstruction.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
use num_traits::Float;

use super::HomodyneDataset;
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockCutoff};
use crate::optics::{loss_adjoint, quadrature_overlaps};
use crate::{CMatrix, Complex64};

/// Losses folded into the measurement model. Correcting a loss yields the
/// state as it was before that loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EfficiencyModel {
    None,
    Detection {
        eta: f64,
    },
    /// Detection efficiency followed by a storage transmission (e.g. 0.841
    /// for 15 round trips).
    DetectionAndStorage {
        eta: f64,
        storage_transmission: f64,
    },
}

impl EfficiencyModel {
    /// Total transmission between the reconstructed state and an ideal
    /// detector.
    pub fn transmission(&self) -> f64 {
        match *self {
            EfficiencyModel::None => 1.0,
            EfficiencyModel::Detection { eta } => eta,
            EfficiencyModel::DetectionAndStorage {
                eta,
                storage_transmission,
            } => eta * storage_transmission,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EfficiencyModel::None => "none",
            EfficiencyModel::Detection { .. } => "detection",
            EfficiencyModel::DetectionAndStorage { .. } => "detection+storage",
        }
    }

    fn validate(&self) -> Result<()> {
        let t = self.transmission();
        if t > 0.0 && t <= 1.0 {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "efficiency model transmission",
                value: t,
            })
        }
    }
}

/// Phase and quadrature binning. `x_bins` equal bins cover
/// `[−x_range, x_range]`; two open tail bins complete the partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub phases: usize,
    pub x_bins: usize,
    pub x_range: f64,
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            phases: 12,
            x_bins: 200,
            x_range: 6.0,
        }
    }
}

impl Binning {
    pub fn cells_per_phase(&self) -> usize {
        self.x_bins + 2
    }

    /// Bin edges including the infinite outer ones.
    pub fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.x_bins + 3);
        e.push(f64::NEG_INFINITY);
        for i in 0..=self.x_bins {
            e.push(-self.x_range + 2.0 * self.x_range * i as f64 / self.x_bins as f64);
        }
        e.push(f64::INFINITY);
        e
    }

    fn x_index(&self, x: f64) -> usize {
        if x < -self.x_range {
            0
        } else if x >= self.x_range {
            self.x_bins + 1
        } else {
            let w = 2.0 * self.x_range / self.x_bins as f64;
            1 + (((x + self.x_range) / w) as usize).min(self.x_bins - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxLikSettings {
    pub cutoff: FockCutoff,
    pub binning: Binning,
    pub efficiency: EfficiencyModel,
    pub max_iterations: usize,
    /// Stop once the per-sample log-likelihood gain falls below this.
    pub tolerance: f64,
}

impl Default for MaxLikSettings {
    fn default() -> Self {
        Self {
            cutoff: FockCutoff::new(12).expect("valid cutoff"),
            binning: Binning::default(),
            efficiency: EfficiencyModel::None,
            max_iterations: 2000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No step, however diluted, increased the likelihood.
    Stalled,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max_iterations",
            StopReason::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Evaluations where an observed cell had zero model probability.
    pub zero_probability_cells: usize,
    /// Iterations that needed a diluted step to keep the likelihood rising.
    pub diluted_steps: usize,
    pub occupied_cells: usize,
    pub phases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub rho_hat: DensityOperator,
    pub iterations: usize,
    pub final_likelihood_gain: f64,
    /// Per-sample log-likelihood of the start point and every accepted step.
    pub log_likelihood: Vec<f64>,
    pub stop_reason: StopReason,
    pub efficiency: EfficiencyModel,
    pub diagnostics: Diagnostics,
}

const DAMPING: f64 = 1e-12;
const MAX_DILUTIONS: usize = 40;

/// Binned data plus the measurement operators of every cell, ready to be
/// solved repeatedly (e.g. for bootstrap resamples).
#[derive(Debug, Clone)]
pub struct MaxLikProblem {
    settings: MaxLikSettings,
    phases: Vec<f64>,
    /// Packed upper triangles of the real symmetric x-bin operators at zero
    /// phase, off-diagonals doubled so a packed dot product is the trace.
    povms: Vec<Vec<f64>>,
    /// Cell index (`phase · cells_per_phase + x_bin`) of every sample.
    sample_cells: Vec<u32>,
}

fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

impl MaxLikProblem {
    pub fn new(data: &HomodyneDataset, settings: MaxLikSettings) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = settings.cutoff.dim();
        let parameters = d * d - 1;
        if data.len() < parameters {
            return Err(Error::UnderDetermined {
                samples: data.len(),
                parameters,
            });
        }
        settings.efficiency.validate()?;
        let binning = settings.binning;
        if binning.phases == 0 || binning.x_bins == 0 || !(binning.x_range > 0.0) {
            return Err(Error::Domain {
                what: "binning",
                value: binning.x_bins as f64,
            });
        }
        if !(settings.tolerance >= 0.0) {
            return Err(Error::Domain {
                what: "convergence tolerance",
                value: settings.tolerance,
            });
        }

        // Few distinct phases are used exactly; otherwise bin uniformly.
        let mut distinct: Vec<f64> = data.samples().iter().map(|s| s.theta()).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let exact = distinct.len() <= binning.phases;
        let phases = if exact {
            distinct.clone()
        } else {
            (0..binning.phases)
                .map(|k| PI * k as f64 / binning.phases as f64)
                .collect()
        };
        let per = binning.cells_per_phase();
        let step = PI / binning.phases as f64;
        let sample_cells = data
            .samples()
            .iter()
            .map(|s| {
                let (k, x) = if exact {
                    let k = distinct
                        .binary_search_by(|p| p.total_cmp(&s.theta()))
                        .expect("phase listed");
                    (k, s.x())
                } else {
                    let k = (s.theta() / step).round() as usize;
                    if k >= binning.phases {
                        (0, -s.x())
                    } else {
                        (k, s.x())
                    }
                };
                (k * per + binning.x_index(x)) as u32
            })
            .collect();

        let edges = binning.edges();
        let eta = settings.efficiency.transmission();
        let mut povms = Vec::with_capacity(per);
        for j in 0..per {
            let overlaps = quadrature_overlaps(edges[j], edges[j + 1], d);
            let smeared = if eta < 1.0 {
                loss_adjoint(&overlaps.map(|v| Complex64::new(v, 0.0)), eta)?.map(|z| z.re)
            } else {
                overlaps
            };
            povms.push(pack(&smeared));
        }
        Ok(Self {
            settings,
            phases,
            povms,
            sample_cells,
        })
    }

    pub fn settings(&self) -> &MaxLikSettings {
        &self.settings
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn sample_count(&self) -> usize {
        self.sample_cells.len()
    }

    pub(crate) fn sample_cells(&self) -> &[u32] {
        &self.sample_cells
    }

    /// Observed counts per cell.
    pub fn counts(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.phases.len() * self.settings.binning.cells_per_phase()];
        for &i in &self.sample_cells {
            c[i as usize] += 1.0;
        }
        c
    }

    /// Sum of the x-bin operators of one phase (identity if complete).
    pub fn povm_sum(&self) -> DMatrix<f64> {
        let d = self.settings.cutoff.dim();
        let mut total = vec![0.0; packed_len(d)];
        for p in &self.povms {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        unpack(&total, d)
    }

    pub fn reconstruct(&self, start: Option<&DensityOperator>) -> Result<ReconstructionResult> {
        self.reconstruct_counts(&self.counts(), start)
    }

    pub(crate) fn reconstruct_counts(
        &self,
        counts: &[f64],
        start: Option<&DensityOperator>,
    ) -> Result<ReconstructionResult> {
        let cutoff = self.settings.cutoff;
        let d = cutoff.dim();
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyDataset);
        }
        let per = self.settings.binning.cells_per_phase();
        let active: Vec<(usize, usize, f64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0.0)
            .map(|(i, c)| (i / per, i % per, c / total))
            .collect();
        let mut diagnostics = Diagnostics {
            occupied_cells: active.len(),
            phases: self.phases.clone(),
            ..Diagnostics::default()
        };

        let mut rho = match start {
            Some(s) => {
                if s.cutoff() != cutoff {
                    return Err(Error::CutoffMismatch {
                        left: cutoff.n_max(),
                        right: s.cutoff().n_max(),
                    });
                }
                s.matrix().clone()
            }
            None => CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        };
        let mut eval = self.evaluate(&rho, &active, &mut diagnostics);
        let mut trace = vec![eval.0];
        let mut gain = f64::INFINITY;
        let mut stop = StopReason::MaxIterations;
        let mut iterations = 0;
        while iterations < self.settings.max_iterations {
            let (l, r) = (eval.0, &eval.1);
            let mut accepted = None;
            let full = normalize(&(r * &rho * r));
            let cand = self.evaluate(&full, &active, &mut diagnostics);
            if cand.0 >= l {
                accepted = Some((full, cand));
            } else {
                diagnostics.diluted_steps += 1;
                let id = CMatrix::identity(d, d);
                let mut eps = 1.0;
                for _ in 0..MAX_DILUTIONS {
                    let step = &id + r * Complex64::new(eps, 0.0);
                    let trial = normalize(&(&step * &rho * &step));
                    let cand = self.evaluate(&trial, &active, &mut diagnostics);
                    if cand.0 >= l {
                        accepted = Some((trial, cand));
                        break;
                    }
                    eps *= 0.5;
                }
            }
            let Some((next, next_eval)) = accepted else {
                gain = 0.0;
                stop = StopReason::Stalled;
                break;
            };
            iterations += 1;
            gain = next_eval.0 - l;
            rho = next;
            eval = next_eval;
            trace.push(eval.0);
            if gain < self.settings.tolerance {
                stop = StopReason::Converged;
                break;
            }
        }
        Ok(ReconstructionResult {
            rho_hat: DensityOperator::normalized(rho, cutoff),
            iterations,
            final_likelihood_gain: gain,
            log_likelihood: trace,
            stop_reason: stop,
            efficiency: self.settings.efficiency,
            diagnostics,
        })
    }

    /// Per-sample log-likelihood of `rho` and the operator `R(ρ)`.
    fn evaluate(
        &self,
        rho: &CMatrix,
        active: &[(usize, usize, f64)],
        diagnostics: &mut Diagnostics,
    ) -> (f64, CMatrix) {
        let d = rho.nrows();
        let len = packed_len(d);
        let mut kernel = vec![0.0; len];
        let mut r_phase = vec![0.0; len];
        let mut r = CMatrix::zeros(d, d);
        let mut loglik = 0.0;
        let mut damped = false;
        let mut current = usize::MAX;
        let flush = |k: usize, r_phase: &mut [f64], r: &mut CMatrix| {
            let theta = self.phases[k];
            let mut i = 0;
            for m in 0..d {
                for n in m..d {
                    let v = if m == n { r_phase[i] } else { 0.5 * r_phase[i] };
                    let z = Complex64::from_polar(v, theta * (m as f64 - n as f64));
                    r[(m, n)] += z;
                    if m != n {
                        r[(n, m)] += z.conj();
                    }
                    i += 1;
                }
            }
            r_phase.iter_mut().for_each(|v| *v = 0.0);
        };
        for &(k, j, f) in active {
            if k != current {
                if current != usize::MAX {
                    flush(current, &mut r_phase, &mut r);
                }
                current = k;
                let theta = self.phases[k];
                let mut i = 0;
                for m in 0..d {
                    for n in m..d {
                        kernel[i] = (rho[(m, n)]
                            * Complex64::from_polar(1.0, theta * (n as f64 - m as f64)))
                        .re;
                        i += 1;
                    }
                }
            }
            let povm = &self.povms[j];
            let mut p: f64 = povm.iter().zip(&kernel).map(|(a, b)| a * b).sum();
            if !(p > 0.0) {
                diagnostics.zero_probability_cells += 1;
                damped = true;
                p = DAMPING;
            }
            loglik += f * p.ln();
            let w = f / p;
            for (acc, v) in r_phase.iter_mut().zip(povm) {
                *acc += w * v;
            }
        }
        if current != usize::MAX {
            flush(current, &mut r_phase, &mut r);
        }
        if damped {
            for m in 0..d {
                r[(m, m)] += Complex64::new(DAMPING, 0.0);
            }
        }
        (loglik, r)
    }
}

/// One-shot reconstruction with the given settings.
pub fn maxlik_reconstruct(
    data: &HomodyneDataset,
    settings: MaxLikSettings,
) -> Result<ReconstructionResult> {
    MaxLikProblem::new(data, settings)?.reconstruct(None)
}

fn normalize(m: &CMatrix) -> CMatrix {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let tr: f64 = h.diagonal().iter().map(|z| z.re).sum();
    h / Complex64::new(tr, 0.0)
}

fn pack(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(packed_len(d));
    for i in 0..d {
        for j in i..d {
            out.push(if i == j { m[(i, j)] } else { 2.0 * m[(i, j)] });
        }
    }
    out
}

fn unpack(p: &[f64], d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            let v = if i == j { p[k] } else { 0.5 * p[k] };
            m[(i, j)] = v;
            m[(j, i)] = v;
            k += 1;
        }
    }
    m
}
