//! Advance one ensemble member through a resolved sequence.
//!
//! Two independent integrators: the default applies the exact matrix
//! exponential of each segment's constant superoperator; a classical RK4
//! stepper serves as cross-validation oracle and as the path for future
//! smooth envelopes. Samples land on the absolute grid t = k * interval
//! plus every segment boundary, so all members of a sweep share one time
//! base and analysis never interpolates across a pulse edge.

use crate::linalg::{expm, CMat};
use crate::liouvillian::{
    equation_of_motion, superoperator, unvec_rho, vec_rho, LiouvillianError,
};
use crate::model::{LevelSystem, ResolvedSegment, ResolvedSequence, MAX_LEVELS};
use crate::units::to_angular;
use ndarray::Array1;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PropagateError {
    #[error("RK4 step {dt} us exceeds stability budget {max:.4} us for this segment")]
    StepSize { dt: f64, max: f64 },
    #[error("trace drift {drift:.3e} at t = {t} us (member delta = {delta} kHz)")]
    TraceDrift { t: f64, delta: f64, drift: f64 },
    #[error(transparent)]
    Liouvillian(#[from] LiouvillianError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Exact,
    Rk4,
}

impl std::str::FromStr for Integrator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Integrator::Exact),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(format!("unknown integrator {other:?}, expected exact or rk4")),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrator::Exact => "exact",
            Integrator::Rk4 => "rk4",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    pub integrator: Integrator,
    /// RK4 step, us. Ignored by the exact propagator.
    pub dt_us: f64,
    pub sample_interval_us: f64,
    /// Keep full density-matrix snapshots (cross-validation needs them).
    pub store_snapshots: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions {
            integrator: Integrator::Exact,
            dt_us: 0.005,
            sample_interval_us: 0.1,
            store_snapshots: false,
        }
    }
}

/// Per-member observable record along the sample grid.
#[derive(Debug, Clone)]
pub struct TimeTrace {
    pub delta_khz: f64,
    pub times: Vec<f64>,
    pub rho12: Vec<C64>,
    pub rho13: Vec<C64>,
    pub populations: Vec<[f64; MAX_LEVELS]>,
    pub snapshots: Option<Vec<CMat>>,
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
}

impl TimeTrace {
    /// Index of the sample closest to `t_us`.
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

    pub fn rho12_at(&self, t_us: f64) -> C64 {
        self.rho12[self.index_at(t_us)]
    }
}

fn trace_drift(rho: &CMat) -> f64 {
    let tr: C64 = rho.diag().iter().sum();
    (tr - C64::new(1.0, 0.0)).norm()
}

fn hermiticity_defect(rho: &CMat) -> f64 {
    let n = rho.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((rho[[i, j]] - rho[[j, i]].conj()).norm());
        }
    }
    worst
}

fn rehermitize(rho: &mut CMat) {
    let n = rho.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (rho[[i, j]] + rho[[j, i]].conj());
            rho[[i, j]] = avg;
            rho[[j, i]] = avg.conj();
        }
        rho[[i, i]] = C64::new(rho[[i, i]].re, 0.0);
    }
}

/// Largest dynamical frequency of a segment, rad/us: bounds the RK4 step.
fn stiffness(system: &LevelSystem, segment: &ResolvedSegment, delta_khz: f64) -> f64 {
    let mut scale: f64 = to_angular(delta_khz.abs());
    for d in segment.fields.values() {
        scale = scale.max(to_angular(d.amp_khz.abs()) / 2.0);
        scale = scale.max(to_angular(d.det_khz.abs()));
    }
    let gamma = crate::liouvillian::effective_gamma(system, &segment.gamma_overrides);
    for v in system.big_gamma.iter() {
        scale = scale.max(to_angular(*v));
    }
    for v in gamma.iter() {
        scale = scale.max(crate::units::to_decay(*v));
    }
    scale
}

/// One classical fourth-order step of the equation of motion, followed by
/// re-Hermitization. Rejects steps that would rotate any phase by more
/// than 0.1 rad.
pub fn step_rk4(
    system: &LevelSystem,
    segment: &ResolvedSegment,
    delta_khz: f64,
    rho: &CMat,
    dt_us: f64,
) -> Result<CMat, PropagateError> {
    let scale = stiffness(system, segment, delta_khz);
    if scale > 0.0 && dt_us * scale > 0.1 + 1e-12 {
        return Err(PropagateError::StepSize {
            dt: dt_us,
            max: 0.1 / scale,
        });
    }
    let k1 = equation_of_motion(system, segment, delta_khz, rho)?;
    let r2 = rho + &k1.mapv(|z| z * (dt_us / 2.0));
    let k2 = equation_of_motion(system, segment, delta_khz, &r2)?;
    let r3 = rho + &k2.mapv(|z| z * (dt_us / 2.0));
    let k3 = equation_of_motion(system, segment, delta_khz, &r3)?;
    let r4 = rho + &k3.mapv(|z| z * dt_us);
    let k4 = equation_of_motion(system, segment, delta_khz, &r4)?;
    let mut out = rho
        + &(k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (dt_us / 6.0));
    rehermitize(&mut out);
    Ok(out)
}

/// Exponential of the segment generator applied for the full duration.
pub fn propagate_segment_exact(
    system: &LevelSystem,
    segment: &ResolvedSegment,
    delta_khz: f64,
    rho: &CMat,
) -> Result<CMat, PropagateError> {
    let l = superoperator(system, segment, delta_khz)?;
    let e = expm(&l.mapv(|z| z * segment.duration()));
    Ok(unvec_rho(&e.dot(&vec_rho(rho)), system.n_levels))
}

/// Sample offsets inside (t0, t1): absolute-grid interior times, then t1.
fn segment_sample_times(t0: f64, t1: f64, interval: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let eps = 1e-9;
    let mut k = (t0 / interval).floor() as i64 + 1;
    if (k as f64 - 1.0) * interval > t0 + eps {
        k -= 1;
    }
    loop {
        let t = k as f64 * interval;
        if t > t1 - eps {
            break;
        }
        if t > t0 + eps {
            out.push(t);
        }
        k += 1;
    }
    out.push(t1);
    out
}

struct Recorder {
    trace: TimeTrace,
    abort_delta: f64,
}

impl Recorder {
    fn new(delta_khz: f64, store_snapshots: bool) -> Recorder {
        Recorder {
            trace: TimeTrace {
                delta_khz,
                times: Vec::new(),
                rho12: Vec::new(),
                rho13: Vec::new(),
                populations: Vec::new(),
                snapshots: if store_snapshots { Some(Vec::new()) } else { None },
                max_trace_drift: 0.0,
                max_hermiticity_defect: 0.0,
            },
            abort_delta: delta_khz,
        }
    }

    fn push(&mut self, t: f64, rho: &CMat) -> Result<(), PropagateError> {
        let drift = trace_drift(rho);
        if drift > 1e-6 {
            return Err(PropagateError::TraceDrift {
                t,
                delta: self.abort_delta,
                drift,
            });
        }
        self.trace.max_trace_drift = self.trace.max_trace_drift.max(drift);
        self.trace.max_hermiticity_defect =
            self.trace.max_hermiticity_defect.max(hermiticity_defect(rho));
        let n = rho.nrows();
        self.trace.times.push(t);
        self.trace.rho12.push(rho[[0, 1]]);
        self.trace.rho13.push(rho[[0, 2]]);
        let mut pops = [0.0; MAX_LEVELS];
        for i in 0..n {
            pops[i] = rho[[i, i]].re;
        }
        self.trace.populations.push(pops);
        if let Some(snaps) = &mut self.trace.snapshots {
            snaps.push(rho.clone());
        }
        Ok(())
    }
}

pub fn initial_density(system: &LevelSystem, populations: &[f64; MAX_LEVELS]) -> CMat {
    let n = system.n_levels;
    let mut rho = CMat::zeros((n, n));
    for i in 0..n {
        rho[[i, i]] = C64::new(populations[i], 0.0);
    }
    rho
}

/// Propagate a member from an explicit initial state.
pub fn run_member_from(
    system: &LevelSystem,
    sequence: &ResolvedSequence,
    delta_khz: f64,
    rho0: &CMat,
    opts: &PropagateOptions,
) -> Result<TimeTrace, PropagateError> {
    let mut rec = Recorder::new(delta_khz, opts.store_snapshots);
    let mut rho = rho0.clone();
    rec.push(0.0, &rho)?;
    for segment in &sequence.segments {
        let samples = segment_sample_times(segment.t0, segment.t1, opts.sample_interval_us);
        match opts.integrator {
            Integrator::Exact => {
                let l = superoperator(system, segment, delta_khz)?;
                let mut v: Array1<C64> = vec_rho(&rho);
                let mut prev = segment.t0;
                let mut cached: Option<(f64, CMat)> = None;
                for t in &samples {
                    let span = t - prev;
                    let step = match &cached {
                        Some((s, e)) if (s - span).abs() < 1e-12 => e.clone(),
                        _ => {
                            let e = expm(&l.mapv(|z| z * span));
                            cached = Some((span, e.clone()));
                            e
                        }
                    };
                    v = step.dot(&v);
                    rho = unvec_rho(&v, system.n_levels);
                    rec.push(*t, &rho)?;
                    prev = *t;
                }
            }
            Integrator::Rk4 => {
                let mut prev = segment.t0;
                for t in &samples {
                    let span = t - prev;
                    let n_sub = (span / opts.dt_us).ceil().max(1.0) as usize;
                    let h = span / n_sub as f64;
                    for _ in 0..n_sub {
                        rho = step_rk4(system, segment, delta_khz, &rho, h)?;
                    }
                    rec.push(*t, &rho)?;
                    prev = *t;
                }
            }
        }
    }
    Ok(rec.trace)
}

/// Propagate a member from the sequence's initial populations.
pub fn run_member(
    system: &LevelSystem,
    sequence: &ResolvedSequence,
    delta_khz: f64,
    opts: &PropagateOptions,
) -> Result<TimeTrace, PropagateError> {
    let rho0 = initial_density(system, &sequence.initial_populations);
    run_member_from(system, sequence, delta_khz, &rho0, opts)
}

/// Max entrywise |difference| between the two integrators over all samples.
pub fn cross_validate(
    system: &LevelSystem,
    sequence: &ResolvedSequence,
    delta_khz: f64,
    dt_us: f64,
    sample_interval_us: f64,
) -> Result<f64, PropagateError> {
    let base = PropagateOptions {
        integrator: Integrator::Exact,
        dt_us,
        sample_interval_us,
        store_snapshots: true,
    };
    let exact = run_member(system, sequence, delta_khz, &base)?;
    let rk4 = run_member(
        system,
        sequence,
        delta_khz,
        &PropagateOptions {
            integrator: Integrator::Rk4,
            ..base
        },
    )?;
    let a = exact.snapshots.as_ref().expect("snapshots requested");
    let b = rk4.snapshots.as_ref().expect("snapshots requested");
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        for (p, q) in x.iter().zip(y.iter()) {
            worst = worst.max((p - q).norm());
        }
    }
    Ok(worst)
}
