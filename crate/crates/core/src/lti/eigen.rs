//! Dense eigenvalue routines for small matrices.
//!
//! Two kernels: a cyclic Jacobi sweep for symmetric matrices (used for
//! definiteness checks and matrix square roots) and a Hessenberg reduction
//! followed by double-shift QR iteration for general real eigenvalues (used
//! for the spectral radius). Both target the n <= ~16 plants this crate
//! works with.

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::num::Real;

/// Iteration budget for the QR eigenvalue loop.
const MAX_QR_ITERS: usize = 10_000;

/// Sweep budget for the Jacobi loop.
const MAX_JACOBI_SWEEPS: usize = 64;

/// Eigenvalues and orthonormal eigenvectors of a symmetric matrix.
///
/// Cyclic Jacobi rotations; eigenvectors come back as the columns of `v`.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "symmetric eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::<T>::identity(n);
    if n <= 1 {
        return Ok(((0..n).map(|i| m.get(i, i)).collect(), v));
    }
    let norm = m.max_abs();
    if norm == T::zero() {
        return Ok((vec![T::zero(); n], v));
    }
    let tol = T::epsilon() * norm;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                let x = m.get(i, j).abs();
                if x > off {
                    off = x;
                }
            }
        }
        if off <= tol {
            return Ok(((0..n).map(|i| m.get(i, i)).collect(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (T::of(2.0) * apq);
                // stable tangent of the rotation angle
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "Jacobi sweep did not reduce off-diagonal below {tol:e} in {MAX_JACOBI_SWEEPS} sweeps"
    )))
}

/// Symmetric square root of a positive definite matrix.
pub fn pd_sqrt<T: Real>(a: &Matrix<T>, what: &str) -> Result<Matrix<T>> {
    sym_sqrt(a, what, true)
}

/// Symmetric square root of a positive semidefinite matrix; slightly negative
/// eigenvalues from roundoff are clamped to zero.
pub fn psd_sqrt<T: Real>(a: &Matrix<T>, what: &str) -> Result<Matrix<T>> {
    sym_sqrt(a, what, false)
}

#[allow(clippy::needless_range_loop)]
fn sym_sqrt<T: Real>(a: &Matrix<T>, what: &str, strict: bool) -> Result<Matrix<T>> {
    let (mut vals, vecs) = symmetric_eigen(a)?;
    let scale = vals
        .iter()
        .map(|v| v.abs())
        .fold(T::zero(), |x, y| if y > x { y } else { x });
    let slack = T::of(1e-10) * if scale > T::one() { scale } else { T::one() };
    for v in vals.iter_mut() {
        if strict && *v <= T::zero() {
            return Err(Error::Definiteness(format!(
                "{what} has non-positive eigenvalue {v}"
            )));
        }
        if *v < -slack {
            return Err(Error::Definiteness(format!(
                "{what} has negative eigenvalue {v}"
            )));
        }
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    // V diag(sqrt(lambda)) V^T
    let n = a.rows();
    let mut out = Matrix::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = T::zero();
            for k in 0..n {
                s = s + vecs.get(i, k) * vals[k].sqrt() * vecs.get(j, k);
            }
            out.set(i, j, s);
        }
    }
    Ok(out)
}

/// Eigenvalues of a general real square matrix as (re, im) pairs.
pub fn eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<(T, T)>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Err(Error::Dimension("eigenvalues of an empty matrix".into()));
    }
    if n == 1 {
        return Ok(vec![(a.get(0, 0), T::zero())]);
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    hqr(&mut h)
}

/// Spectral radius: max |lambda| over the eigenvalues.
pub fn spectral_radius<T: Real>(a: &Matrix<T>) -> Result<T> {
    let eig = eigenvalues(a)?;
    Ok(eig
        .into_iter()
        .map(|(re, im)| re.hypot(im))
        .fold(T::zero(), |x, y| if y > x { y } else { x }))
}

/// Reduce to upper Hessenberg form by stabilized elementary eliminations.
fn hessenberg<T: Real>(a: &mut Matrix<T>) {
    let n = a.rows();
    for m in 1..n.saturating_sub(1) {
        // pivot: largest entry in column m-1 at or below row m
        let mut x = T::zero();
        let mut i = m;
        for j in m..n {
            if a.get(j, m - 1).abs() > x.abs() {
                x = a.get(j, m - 1);
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..n {
                let tmp = a.get(i, j);
                a.set(i, j, a.get(m, j));
                a.set(m, j, tmp);
            }
            for j in 0..n {
                let tmp = a.get(j, i);
                a.set(j, i, a.get(j, m));
                a.set(j, m, tmp);
            }
        }
        if x != T::zero() {
            for i in (m + 1)..n {
                let mut y = a.get(i, m - 1);
                if y != T::zero() {
                    y = y / x;
                    a.set(i, m - 1, y);
                    for j in m..n {
                        let v = a.get(i, j) - y * a.get(m, j);
                        a.set(i, j, v);
                    }
                    for j in 0..n {
                        let v = a.get(j, m) + y * a.get(j, i);
                        a.set(j, m, v);
                    }
                }
            }
        }
    }
    // clear the multipliers stored below the subdiagonal
    for i in 2..n {
        for j in 0..(i - 1) {
            a.set(i, j, T::zero());
        }
    }
}

/// Double-shift QR iteration on an upper Hessenberg matrix, eigenvalues only.
fn hqr<T: Real>(h: &mut Matrix<T>) -> Result<Vec<(T, T)>> {
    let n = h.rows() as isize;
    let eps = T::epsilon();
    let at = |h: &Matrix<T>, i: isize, j: isize| h.get(i as usize, j as usize);
    let set = |h: &mut Matrix<T>, i: isize, j: isize, v: T| h.set(i as usize, j as usize, v);

    let mut wr = vec![T::zero(); n as usize];
    let mut wi = vec![T::zero(); n as usize];
    let mut anorm = T::zero();
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm = anorm + at(h, i, j).abs();
        }
    }
    if anorm == T::zero() {
        return Ok(wr.into_iter().zip(wi).collect());
    }

    let mut total_iters = 0usize;
    let mut t = T::zero();
    let mut nn = n - 1;
    'outer: while nn >= 0 {
        let mut its = 0;
        loop {
            // find a small subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let mut s = at(h, l - 1, l - 1).abs() + at(h, l, l).abs();
                if s == T::zero() {
                    s = anorm;
                }
                if at(h, l, l - 1).abs() <= eps * s {
                    set(h, l, l - 1, T::zero());
                    break;
                }
                l -= 1;
            }
            let mut x = at(h, nn, nn);
            if l == nn {
                // single root found
                wr[nn as usize] = x + t;
                wi[nn as usize] = T::zero();
                nn -= 1;
                continue 'outer;
            }
            let y = at(h, nn - 1, nn - 1);
            let mut w = at(h, nn, nn - 1) * at(h, nn - 1, nn);
            if l == nn - 1 {
                // a 2x2 block splits off
                let p = (y - x) * T::of(0.5);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x = x + t;
                if q >= T::zero() {
                    z = p + if p >= T::zero() { z } else { -z };
                    wr[(nn - 1) as usize] = x + z;
                    wr[nn as usize] = wr[(nn - 1) as usize];
                    if z != T::zero() {
                        wr[nn as usize] = x - w / z;
                    }
                    wi[(nn - 1) as usize] = T::zero();
                    wi[nn as usize] = T::zero();
                } else {
                    wr[(nn - 1) as usize] = x + p;
                    wr[nn as usize] = x + p;
                    wi[(nn - 1) as usize] = -z;
                    wi[nn as usize] = z;
                }
                nn -= 2;
                continue 'outer;
            }
            // no root yet: one double QR step
            if total_iters >= MAX_QR_ITERS || its >= 30 {
                let gap = at(h, nn, nn - 1).abs();
                return Err(Error::Numeric(format!(
                    "QR eigenvalue iteration stalled after {total_iters} steps, \
                     subdiagonal {gap:e} still above tolerance {:e}",
                    eps * anorm
                )));
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t = t + x;
                for i in 0..=nn {
                    let v = at(h, i, i) - x;
                    set(h, i, i, v);
                }
                let s = at(h, nn, nn - 1).abs() + at(h, nn - 1, nn - 2).abs();
                x = T::of(0.75) * s;
                w = T::of(-0.4375) * s * s;
            }
            its += 1;
            total_iters += 1;

            let y = at(h, nn - 1, nn - 1);
            let mut p = T::zero();
            let mut q = T::zero();
            let mut r = T::zero();
            let mut m = nn - 2;
            while m >= l {
                let z = at(h, m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / at(h, m + 1, m) + at(h, m, m + 1);
                q = at(h, m + 1, m + 1) - z - rr - ss;
                r = at(h, m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p = p / s;
                q = q / s;
                r = r / s;
                if m == l {
                    break;
                }
                let u = at(h, m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (at(h, m - 1, m - 1).abs() + z.abs() + at(h, m + 1, m + 1).abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                set(h, i, i - 2, T::zero());
                if i > m + 2 {
                    set(h, i, i - 3, T::zero());
                }
            }
            for k in m..nn {
                if k != m {
                    p = at(h, k, k - 1);
                    q = at(h, k + 1, k - 1);
                    r = if k != nn - 1 {
                        at(h, k + 2, k - 1)
                    } else {
                        T::zero()
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p = p / x;
                        q = q / x;
                        r = r / x;
                    }
                }
                let root = (p * p + q * q + r * r).sqrt();
                let s = if p >= T::zero() { root } else { -root };
                if s == T::zero() {
                    continue;
                }
                if k == m {
                    if l != m {
                        let v = -at(h, k, k - 1);
                        set(h, k, k - 1, v);
                    }
                } else {
                    set(h, k, k - 1, -s * x);
                }
                p = p + s;
                x = p / s;
                let yy = q / s;
                let z = r / s;
                q = q / p;
                r = r / p;
                for j in k..=nn {
                    let mut pp = at(h, k, j) + q * at(h, k + 1, j);
                    if k != nn - 1 {
                        pp = pp + r * at(h, k + 2, j);
                        let v = at(h, k + 2, j) - pp * z;
                        set(h, k + 2, j, v);
                    }
                    let v1 = at(h, k + 1, j) - pp * yy;
                    set(h, k + 1, j, v1);
                    let v0 = at(h, k, j) - pp * x;
                    set(h, k, j, v0);
                }
                let mmin = nn.min(k + 3);
                for i in l..=mmin {
                    let mut pp = x * at(h, i, k) + yy * at(h, i, k + 1);
                    if k != nn - 1 {
                        pp = pp + z * at(h, i, k + 2);
                        let v = at(h, i, k + 2) - pp * r;
                        set(h, i, k + 2, v);
                    }
                    let v1 = at(h, i, k + 1) - pp * q;
                    set(h, i, k + 1, v1);
                    let v0 = at(h, i, k) - pp;
                    set(h, i, k, v0);
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}
