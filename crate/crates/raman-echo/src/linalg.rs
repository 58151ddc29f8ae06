//! Dense complex linear algebra for superoperator-sized problems
//! (n^2 x n^2 with n <= 4): LU solves and the matrix exponential.
//! Self-contained so the numerical core has no external solver dependency.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use thiserror::Error;

pub type CMat = Array2<C64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Maximum absolute column sum.
pub fn one_norm(a: &CMat) -> f64 {
    let (n, m) = a.dim();
    let mut best = 0.0f64;
    for j in 0..m {
        let mut s = 0.0;
        for i in 0..n {
            s += a[[i, j]].norm();
        }
        best = best.max(s);
    }
    best
}

pub fn identity(n: usize) -> CMat {
    let mut m = CMat::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = C64::new(1.0, 0.0);
    }
    m
}

/// Solve `A X = B` by LU decomposition with partial pivoting.
pub fn lu_solve(a: &CMat, b: &CMat) -> Result<CMat, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::Shape(format!("A is {}x{}", n, a.ncols())));
    }
    if b.nrows() != n {
        return Err(LinalgError::Shape(format!(
            "B has {} rows, expected {n}",
            b.nrows()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let ncols = x.ncols();
    for k in 0..n {
        let mut piv = k;
        let mut piv_mag = lu[[k, k]].norm();
        for i in k + 1..n {
            let m = lu[[i, k]].norm();
            if m > piv_mag {
                piv = i;
                piv_mag = m;
            }
        }
        if piv_mag == 0.0 {
            return Err(LinalgError::Singular {
                col: k,
                pivot: piv_mag,
            });
        }
        if piv != k {
            for j in 0..n {
                lu.swap([k, j], [piv, j]);
            }
            for j in 0..ncols {
                x.swap([k, j], [piv, j]);
            }
        }
        let d = lu[[k, k]];
        for i in k + 1..n {
            let f = lu[[i, k]] / d;
            lu[[i, k]] = f;
            for j in k + 1..n {
                let s = lu[[k, j]];
                lu[[i, j]] -= f * s;
            }
            for j in 0..ncols {
                let s = x[[k, j]];
                x[[i, j]] -= f * s;
            }
        }
    }
    // back substitution
    for k in (0..n).rev() {
        let d = lu[[k, k]];
        for j in 0..ncols {
            x[[k, j]] /= d;
        }
        for i in 0..k {
            let f = lu[[i, k]];
            for j in 0..ncols {
                let s = x[[k, j]];
                x[[i, j]] -= f * s;
            }
        }
    }
    Ok(x)
}

// Pade-13 coefficients and the scaling threshold for double precision.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn scaled(a: &CMat, c: f64) -> CMat {
    a.mapv(|z| z * c)
}

/// Matrix exponential by Pade-13 approximation with scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a1 = scaled(a, 0.5f64.powi(s));
    let id = identity(n);
    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let b = &PADE13;
    let u_inner = a6.mapv(|z| z * b[13]) + a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let u_poly = a6.dot(&u_inner)
        + a6.mapv(|z| z * b[7])
        + a4.mapv(|z| z * b[5])
        + a2.mapv(|z| z * b[3])
        + id.mapv(|z| z * b[1]);
    let u = a1.dot(&u_poly);
    let v_inner = a6.mapv(|z| z * b[12]) + a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * b[6])
        + a4.mapv(|z| z * b[4])
        + a2.mapv(|z| z * b[2])
        + id.mapv(|z| z * b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = lu_solve(&q, &p).expect("Pade denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}
