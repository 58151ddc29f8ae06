//! Rotating-frame Hamiltonian and relaxation for one ensemble member,
//! plus the superoperator matrix the exact propagator exponentiates.
//!
//! Relaxation is standard phenomenological population transfer with
//! feeding terms (d rho_jj gains sum_i k_ij rho_ii and loses its own
//! out-rates) and independent coherence decay. The source text this
//! model reproduces prints its relaxation bracket as a commutator,
//! which with a diagonal rate matrix would relax nothing; the feeding
//! form is the only reading consistent with the separately quoted
//! Gamma and gamma values and the T2 fit, and is what ships here.

use crate::linalg::CMat;
use crate::model::{LevelSystem, ModelError, ResolvedSegment};
use crate::units::{to_angular, to_decay};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LiouvillianError {
    #[error("density matrix not Hermitian (defect {0:.3e})")]
    NonHermitian(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Hamiltonian in the frame rotating with all fields, rad/us.
///
/// Diagonal: H11 = 0, H22 = ang(det_p - det_c), H33 = ang(det_p),
/// H44 = ang(det_p - det_a), plus ang(delta) on the shift target unless
/// the segment freezes the shift. Positive detuning means the field sits
/// above resonance. Off-diagonal: ang(amp)/2 times the phase factor on
/// each driven transition's upper-lower entry, plus conjugates.
pub fn build_hamiltonian(
    system: &LevelSystem,
    segment: &ResolvedSegment,
    delta_khz: f64,
) -> Result<CMat, LiouvillianError> {
    let n = system.n_levels;
    let mut h = CMat::zeros((n, n));
    let det = |f| {
        segment
            .fields
            .get(&f)
            .map(|d: &crate::model::FieldDrive| d.det_khz)
            .unwrap_or(0.0)
    };
    let det_p = det(crate::model::FieldId::Probe);
    let det_c = det(crate::model::FieldId::Coupling);
    let det_a = det(crate::model::FieldId::Aux);
    h[[1, 1]] = C64::new(to_angular(det_p - det_c), 0.0);
    h[[2, 2]] = C64::new(to_angular(det_p), 0.0);
    if n > 3 {
        h[[3, 3]] = C64::new(to_angular(det_p - det_a), 0.0);
    }
    if !segment.freeze_shift {
        h[[system.shift_target, system.shift_target]] += C64::new(to_angular(delta_khz), 0.0);
    }
    for (field, drive) in &segment.fields {
        let tr = system.transition_for(*field).ok_or(ModelError::FieldDimension {
            field: *field,
            lower: 0,
            upper: 0,
            levels: n,
        })?;
        if tr.upper >= n {
            return Err(ModelError::FieldDimension {
                field: *field,
                lower: tr.lower + 1,
                upper: tr.upper + 1,
                levels: n,
            }
            .into());
        }
        let half = 0.5 * to_angular(drive.amp_khz);
        let z = C64::from_polar(half, drive.phase_rad);
        h[[tr.upper, tr.lower]] += z;
        h[[tr.lower, tr.upper]] += z.conj();
    }
    Ok(h)
}

fn hermiticity_defect(rho: &CMat) -> f64 {
    let n = rho.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((rho[[i, j]] - rho[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Dephasing linewidths with a segment's overrides substituted, kHz.
pub fn effective_gamma(system: &LevelSystem, overrides: &[((usize, usize), f64)]) -> Array2<f64> {
    let mut g = system.gamma.clone();
    for ((i, j), v) in overrides {
        g[[*i, *j]] = *v;
        g[[*j, *i]] = *v;
    }
    g
}

/// Relaxation contribution to d rho/dt using explicit rate matrices.
pub fn relaxation_with(
    big_gamma: &Array2<f64>,
    gamma: &Array2<f64>,
    rho: &CMat,
) -> Result<CMat, LiouvillianError> {
    let defect = hermiticity_defect(rho);
    if defect > 1e-9 {
        return Err(LiouvillianError::NonHermitian(defect));
    }
    let n = rho.nrows();
    let mut out = CMat::zeros((n, n));
    for j in 0..n {
        let mut gain = C64::new(0.0, 0.0);
        for i in 0..n {
            gain += rho[[i, i]] * to_angular(big_gamma[[i, j]]);
        }
        let loss: f64 = (0..n).map(|l| to_angular(big_gamma[[j, l]])).sum();
        out[[j, j]] = gain - rho[[j, j]] * loss;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[[i, j]] = -rho[[i, j]] * to_decay(gamma[[i, j]]);
            }
        }
    }
    Ok(out)
}

/// Relaxation with the system's own rates (no overrides).
pub fn apply_relaxation(system: &LevelSystem, rho: &CMat) -> Result<CMat, LiouvillianError> {
    relaxation_with(&system.big_gamma, &system.gamma, rho)
}

/// Full equation of motion -i[H, rho] + relaxation for one member.
pub fn equation_of_motion(
    system: &LevelSystem,
    segment: &ResolvedSegment,
    delta_khz: f64,
    rho: &CMat,
) -> Result<CMat, LiouvillianError> {
    let h = build_hamiltonian(system, segment, delta_khz)?;
    let gamma = effective_gamma(system, &segment.gamma_overrides);
    let relax = relaxation_with(&system.big_gamma, &gamma, rho)?;
    let comm = h.dot(rho) - rho.dot(&h);
    Ok(comm.mapv(|z| z * C64::new(0.0, -1.0)) + relax)
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    CMat::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[[i / br, j / bc]] * b[[i % br, j % bc]]
    })
}

/// The segment's generator as a matrix on row-major vec(rho):
/// L = -i (H kron I - I kron H^T) + relaxation.
pub fn superoperator(
    system: &LevelSystem,
    segment: &ResolvedSegment,
    delta_khz: f64,
) -> Result<CMat, LiouvillianError> {
    let n = system.n_levels;
    let h = build_hamiltonian(system, segment, delta_khz)?;
    let id = crate::linalg::identity(n);
    let ht = CMat::from_shape_fn((n, n), |(i, j)| h[[j, i]]);
    let mut l = (kron(&h, &id) - kron(&id, &ht)).mapv(|z| z * C64::new(0.0, -1.0));
    let gamma = effective_gamma(system, &segment.gamma_overrides);
    for j in 0..n {
        let loss: f64 = (0..n).map(|k| to_angular(system.big_gamma[[j, k]])).sum();
        l[[j * n + j, j * n + j]] -= C64::new(loss, 0.0);
        for i in 0..n {
            if i != j {
                l[[j * n + j, i * n + i]] += C64::new(to_angular(system.big_gamma[[i, j]]), 0.0);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                l[[i * n + j, i * n + j]] -= C64::new(to_decay(gamma[[i, j]]), 0.0);
            }
        }
    }
    Ok(l)
}

pub fn vec_rho(rho: &CMat) -> ndarray::Array1<C64> {
    let n = rho.nrows();
    ndarray::Array1::from_shape_fn(n * n, |k| rho[[k / n, k % n]])
}

pub fn unvec_rho(v: &ndarray::Array1<C64>, n: usize) -> CMat {
    CMat::from_shape_fn((n, n), |(i, j)| v[i * n + j])
}
