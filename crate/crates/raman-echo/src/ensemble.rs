//! Detuning grid construction and the parallel ensemble sweep.
//!
//! Members are independent, so they run concurrently; the reduction to
//! macroscopic observables walks members in ascending detuning order in
//! fixed chunks, which makes the summed output bit-identical for every
//! worker count.

use crate::linalg::CMat;
use crate::model::{EnsembleSpec, LevelSystem, ResolvedSequence, MAX_LEVELS};
use crate::propagate::{
    initial_density, run_member_from, PropagateError, PropagateOptions, TimeTrace,
};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DetuningGrid {
    pub deltas_khz: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DetuningGrid {
    pub fn single(delta_khz: f64) -> DetuningGrid {
        DetuningGrid {
            deltas_khz: vec![delta_khz],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.deltas_khz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas_khz.is_empty()
    }
}

/// Symmetric grid from -truncation to +truncation with Gaussian weights
/// w proportional to exp(-4 ln2 delta^2 / FWHM^2), renormalized after
/// truncation. A truncation that is not a multiple of the spacing is
/// rounded outward; the second return value carries that warning.
pub fn build_grid(spec: &EnsembleSpec) -> (DetuningGrid, Option<String>) {
    let ratio = spec.truncation_khz / spec.spacing_khz;
    let mut m = ratio.round();
    let mut warning = None;
    if (ratio - m).abs() > 1e-9 {
        m = ratio.ceil();
        warning = Some(format!(
            "truncation {} kHz is not a multiple of the {} kHz spacing; rounded outward to {} kHz",
            spec.truncation_khz,
            spec.spacing_khz,
            m * spec.spacing_khz
        ));
    }
    let m = m as i64;
    let degenerate = spec.fwhm_khz <= spec.spacing_khz / 100.0;
    let mut deltas = Vec::with_capacity((2 * m + 1) as usize);
    let mut weights = Vec::with_capacity((2 * m + 1) as usize);
    for k in -m..=m {
        let delta = k as f64 * spec.spacing_khz;
        let w = if degenerate {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-4.0 * 2.0f64.ln() * delta * delta / (spec.fwhm_khz * spec.fwhm_khz)).exp()
        };
        deltas.push(delta);
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (DetuningGrid { deltas_khz: deltas, weights }, warning)
}

/// Weighted macroscopic observables along the shared sample grid.
#[derive(Debug, Clone)]
pub struct EnsembleTrace {
    pub times: Vec<f64>,
    /// S(t) = sum of w(delta) rho12(delta, t).
    pub s12: Vec<C64>,
    /// P(t) = sum of w(delta) rho13(delta, t).
    pub p13: Vec<C64>,
    pub populations: Vec<[f64; MAX_LEVELS]>,
    /// Full member traces for the requested detunings.
    pub retained: Vec<TimeTrace>,
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
}

impl EnsembleTrace {
    pub fn index_at(&self, t_us: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (k, t) in self.times.iter().enumerate() {
            let d = (t - t_us).abs();
            if d < dist {
                dist = d;
                best = k;
            }
        }
        best
    }

    pub fn s12_at(&self, t_us: f64) -> C64 {
        self.s12[self.index_at(t_us)]
    }

    pub fn abs_s12(&self) -> Vec<f64> {
        self.s12.iter().map(|z| z.norm()).collect()
    }

    pub fn retained_at(&self, delta_khz: f64) -> Option<&TimeTrace> {
        self.retained
            .iter()
            .find(|t| (t.delta_khz - delta_khz).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub propagate: PropagateOptions,
    pub retained_deltas_khz: Vec<f64>,
}

/// Run every member and reduce. `rho0` overrides the sequence's initial
/// populations when given (used by free-induction analyses that start
/// from a prepared coherence).
pub fn sweep_from(
    system: &LevelSystem,
    sequence: &ResolvedSequence,
    grid: &DetuningGrid,
    rho0: Option<&CMat>,
    opts: &SweepOptions,
) -> Result<EnsembleTrace, PropagateError> {
    let rho_init = match rho0 {
        Some(r) => r.clone(),
        None => initial_density(system, &sequence.initial_populations),
    };
    let mut acc: Option<EnsembleTrace> = None;
    let retain_tol = retained_tolerance(grid);
    let order: Vec<usize> = sorted_by_delta(grid);
    for chunk in order.chunks(CHUNK) {
        let members: Vec<Result<TimeTrace, PropagateError>> = chunk
            .par_iter()
            .map(|&idx| {
                run_member_from(
                    system,
                    sequence,
                    grid.deltas_khz[idx],
                    &rho_init,
                    &opts.propagate,
                )
            })
            .collect();
        for (&idx, member) in chunk.iter().zip(members) {
            let trace = member?;
            let w = grid.weights[idx];
            let acc = acc.get_or_insert_with(|| EnsembleTrace {
                times: trace.times.clone(),
                s12: vec![C64::new(0.0, 0.0); trace.times.len()],
                p13: vec![C64::new(0.0, 0.0); trace.times.len()],
                populations: vec![[0.0; MAX_LEVELS]; trace.times.len()],
                retained: Vec::new(),
                max_trace_drift: 0.0,
                max_hermiticity_defect: 0.0,
            });
            debug_assert_eq!(acc.times.len(), trace.times.len());
            for k in 0..trace.times.len() {
                acc.s12[k] += trace.rho12[k] * w;
                acc.p13[k] += trace.rho13[k] * w;
                for l in 0..MAX_LEVELS {
                    acc.populations[k][l] += trace.populations[k][l] * w;
                }
            }
            acc.max_trace_drift = acc.max_trace_drift.max(trace.max_trace_drift);
            acc.max_hermiticity_defect = acc
                .max_hermiticity_defect
                .max(trace.max_hermiticity_defect);
            if opts
                .retained_deltas_khz
                .iter()
                .any(|r| (r - trace.delta_khz).abs() < retain_tol)
            {
                acc.retained.push(trace);
            }
        }
    }
    Ok(acc.expect("grid has at least one member"))
}

pub fn sweep(
    system: &LevelSystem,
    sequence: &ResolvedSequence,
    grid: &DetuningGrid,
    opts: &SweepOptions,
) -> Result<EnsembleTrace, PropagateError> {
    sweep_from(system, sequence, grid, None, opts)
}

fn sorted_by_delta(grid: &DetuningGrid) -> Vec<usize> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid.deltas_khz[a].total_cmp(&grid.deltas_khz[b]));
    order
}

fn retained_tolerance(grid: &DetuningGrid) -> f64 {
    let mut spacing = f64::INFINITY;
    let order = sorted_by_delta(grid);
    for w in order.windows(2) {
        spacing = spacing.min(grid.deltas_khz[w[1]] - grid.deltas_khz[w[0]]);
    }
    if spacing.is_finite() {
        spacing / 2.0
    } else {
        1e-9
    }
}

/// Closed-form free-induction envelope of a Gaussian distribution:
/// |S(t)| / |S(0)| = exp(-(2 pi sigma_f 1e-3 t)^2 / 2) with
/// sigma_f = FWHM / (2 sqrt(2 ln 2)).
pub fn fid_envelope(fwhm_khz: f64, t_us: f64) -> f64 {
    let sigma = fwhm_khz / (2.0 * (2.0 * 2.0f64.ln()).sqrt());
    let x = crate::units::TWO_PI * sigma * 1.0e-3 * t_us;
    (-0.5 * x * x).exp()
}
