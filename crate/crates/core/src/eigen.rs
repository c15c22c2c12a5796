//! Smallest eigenpair of a Hermitian operator given only its action.
//!
//! The solver is a thick-restart Davidson iteration with Olsen-corrected
//! preconditioning. With the identity preconditioner the search space is a
//! Krylov space (Lanczos with full reorthogonalization). Rayleigh-Ritz steps
//! use a cyclic complex Jacobi eigensolver on the small projected matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::random::{gaussian_complex, rng};
use crate::C64;

/// A Hermitian linear map on `C^dim`.
pub trait HermitianOperator {
    fn dim(&self) -> usize;

    /// `y ← A x`.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// `t ← M(θ)⁻¹ r` for an approximation `M(θ) ≈ A − θ`. Must be linear in `r`.
    fn precondition(&self, _theta: f64, r: &[C64], t: &mut [C64]) {
        t.copy_from_slice(r);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Absolute residual target `‖Av − θv‖` for unit `v`.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest search space before a thick restart.
    pub max_basis: usize,
    /// Ritz vectors retained at a restart.
    pub keep: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 4000, max_basis: 32, keep: 6, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector estimate.
    pub vector: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn combine(basis: &[Vec<C64>], coeffs: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for (b, &c) in basis.iter().zip(coeffs) {
        axpy(c, b, &mut out);
    }
    out
}

/// Orthogonalizes `t` against the orthonormal `basis` (two passes); returns
/// the norm left over.
fn orthogonalize(basis: &[Vec<C64>], t: &mut [C64]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, t);
            axpy(-c, b, t);
        }
    }
    norm(t)
}

/// Smallest eigenpair of `op`, starting from `start` (or a seeded random
/// vector when `None`).
pub fn smallest_eigenpair<O: HermitianOperator + ?Sized>(
    op: &O,
    start: Option<&[C64]>,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::InvalidInput("operator has dimension 0".into()));
    }
    let max_basis = opts.max_basis.clamp(2, dim.max(2));
    let keep = opts.keep.clamp(1, max_basis - 1);

    let mut r = rng(opts.seed);
    let mut first: Vec<C64> = match start {
        Some(s) => s.to_vec(),
        None => (0..dim).map(|_| gaussian_complex(&mut r)).collect(),
    };
    if norm(&first) == 0.0 {
        first = (0..dim).map(|_| gaussian_complex(&mut r)).collect();
    }
    let n0 = norm(&first);
    first.iter_mut().for_each(|z| *z /= n0);

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_basis);
    let mut images: Vec<Vec<C64>> = Vec::with_capacity(max_basis);
    let mut h: Vec<C64> = vec![C64::new(0.0, 0.0); max_basis * max_basis];

    let push = |v: Vec<C64>,
                basis: &mut Vec<Vec<C64>>,
                images: &mut Vec<Vec<C64>>,
                h: &mut Vec<C64>| {
        let mut w = vec![C64::new(0.0, 0.0); dim];
        op.apply(&v, &mut w);
        let k = basis.len();
        for (i, b) in basis.iter().enumerate() {
            let hik = dot(b, &w);
            h[i * max_basis + k] = hik;
            h[k * max_basis + i] = hik.conj();
        }
        h[k * max_basis + k] = C64::new(dot(&v, &w).re, 0.0);
        basis.push(v);
        images.push(w);
    };
    push(first, &mut basis, &mut images, &mut h);

    if dim == 1 {
        let theta = h[0].re;
        return Ok(EigenPair { value: theta, vector: basis.remove(0), residual: 0.0, iterations: 0 });
    }

    let mut last_residual = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let k = basis.len();
        let small: Vec<C64> =
            (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| h[i * max_basis + j]).collect();
        let (vals, vecs) = hermitian_eigen(&small, k);
        let y0: Vec<C64> = (0..k).map(|i| vecs[i * k]).collect();
        let x = combine(&basis, &y0, dim);
        let ax = combine(&images, &y0, dim);
        let theta = dot(&x, &ax).re / dot(&x, &x).re;
        let resid: Vec<C64> = ax.iter().zip(&x).map(|(a, b)| a - b * theta).collect();
        let res_norm = norm(&resid);
        last_residual = res_norm;
        if res_norm <= opts.tol || k == dim {
            let nx = norm(&x);
            let vector = x.iter().map(|z| z / nx).collect();
            return Ok(EigenPair { value: theta, vector, residual: res_norm, iterations: iter });
        }
        if iter == opts.max_iter {
            break;
        }

        if k == max_basis {
            let mut nb = Vec::with_capacity(max_basis);
            let mut ni = Vec::with_capacity(max_basis);
            for c in 0..keep {
                let y: Vec<C64> = (0..k).map(|i| vecs[i * k + c]).collect();
                nb.push(combine(&basis, &y, dim));
                ni.push(combine(&images, &y, dim));
            }
            basis = nb;
            images = ni;
            h.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for i in 0..keep {
                for j in 0..keep {
                    h[i * max_basis + j] =
                        if i == j { C64::new(vals[i], 0.0) } else { C64::new(0.0, 0.0) };
                }
            }
        }

        let mut t = vec![C64::new(0.0, 0.0); dim];
        op.precondition(theta, &resid, &mut t);
        let mut px = vec![C64::new(0.0, 0.0); dim];
        op.precondition(theta, &x, &mut px);
        let denom = dot(&x, &px);
        if denom.norm() > 1e-300 {
            let eps = dot(&x, &t) / denom;
            axpy(-eps, &px, &mut t);
        }
        let before = norm(&t);
        let mut left = orthogonalize(&basis, &mut t);
        if !(left > 1e-10 * before) || !left.is_finite() {
            t = resid.clone();
            left = orthogonalize(&basis, &mut t);
        }
        if !(left > 1e-14 * norm(&resid)) || !left.is_finite() {
            t = (0..dim).map(|_| gaussian_complex(&mut r)).collect();
            left = orthogonalize(&basis, &mut t);
        }
        t.iter_mut().for_each(|z| *z /= left);
        push(t, &mut basis, &mut images, &mut h);
    }
    Err(Error::Convergence { iterations: opts.max_iter, residual: last_residual })
}

/// Eigen-decomposition of a dense `k×k` Hermitian matrix (row-major).
///
/// Returns ascending eigenvalues and the eigenvectors as columns of a
/// row-major `k×k` matrix.
pub fn hermitian_eigen(a: &[C64], k: usize) -> (Vec<f64>, Vec<C64>) {
    let mut m = a.to_vec();
    let mut v = vec![C64::new(0.0, 0.0); k * k];
    for i in 0..k {
        v[i * k + i] = C64::new(1.0, 0.0);
    }
    let frob: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for _sweep in 0..60 {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * k + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob || off == 0.0 {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = m[p * k + q];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m[p * k + p].re;
                let aqq = m[q * k + q].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, conj(phase)) · [[c, s], [-s, c]]
                let u00 = C64::new(c, 0.0);
                let u01 = C64::new(s, 0.0);
                let u10 = -phase.conj() * s;
                let u11 = phase.conj() * c;
                for i in 0..k {
                    let mp = m[i * k + p];
                    let mq = m[i * k + q];
                    m[i * k + p] = mp * u00 + mq * u10;
                    m[i * k + q] = mp * u01 + mq * u11;
                    let vp = v[i * k + p];
                    let vq = v[i * k + q];
                    v[i * k + p] = vp * u00 + vq * u10;
                    v[i * k + q] = vp * u01 + vq * u11;
                }
                for j in 0..k {
                    let mp = m[p * k + j];
                    let mq = m[q * k + j];
                    m[p * k + j] = u00.conj() * mp + u10.conj() * mq;
                    m[q * k + j] = u01.conj() * mp + u11.conj() * mq;
                }
                m[p * k + q] = C64::new(0.0, 0.0);
                m[q * k + p] = C64::new(0.0, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| m[i * k + i].re.partial_cmp(&m[j * k + j].re).unwrap());
    let vals = order.iter().map(|&i| m[i * k + i].re).collect();
    let mut vecs = vec![C64::new(0.0, 0.0); k * k];
    for (new, &old) in order.iter().enumerate() {
        for i in 0..k {
            vecs[i * k + new] = v[i * k + old];
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_hermitian(k: usize, seed: u64) -> Vec<C64> {
        let mut r = rng(seed);
        let mut a = vec![C64::new(0.0, 0.0); k * k];
        for i in 0..k {
            for j in i..k {
                let z = gaussian_complex(&mut r);
                if i == j {
                    a[i * k + i] = C64::new(z.re, 0.0);
                } else {
                    a[i * k + j] = z;
                    a[j * k + i] = z.conj();
                }
            }
        }
        a
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        for (k, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (40, 5)] {
            let a = random_hermitian(k, seed);
            let (vals, vecs) = hermitian_eigen(&a, k);
            let m = DMatrix::from_row_slice(k, k, &a);
            let mut reference: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (x, y) in vals.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
            let vm = DMatrix::from_row_slice(k, k, &vecs);
            let resid = &m * &vm - &vm * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                k,
                vals.iter().map(|&v| C64::new(v, 0.0)),
            ));
            assert!(resid.norm() < 1e-10);
        }
    }

    struct Dense {
        k: usize,
        a: Vec<C64>,
        diag_precond: bool,
    }

    impl HermitianOperator for Dense {
        fn dim(&self) -> usize {
            self.k
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            for i in 0..self.k {
                y[i] = (0..self.k).map(|j| self.a[i * self.k + j] * x[j]).sum();
            }
        }
        fn precondition(&self, theta: f64, r: &[C64], t: &mut [C64]) {
            for i in 0..self.k {
                let d = if self.diag_precond { self.a[i * self.k + i].re - theta } else { 1.0 };
                let d = if d.abs() < 1e-3 { 1e-3f64.copysign(d) } else { d };
                t[i] = r[i] / d;
            }
        }
    }

    #[test]
    fn davidson_finds_smallest_eigenvalue() {
        let k = 300;
        let mut a = random_hermitian(k, 9);
        for i in 0..k {
            a[i * k + i] += C64::new((i * i) as f64 * 0.5, 0.0);
        }
        let m = DMatrix::from_row_slice(k, k, &a);
        let lo = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        for diag_precond in [false, true] {
            let op = Dense { k, a: a.clone(), diag_precond };
            let pair = smallest_eigenpair(&op, None, &EigenOptions::default()).unwrap();
            assert!((pair.value - lo).abs() < 1e-9 * lo.abs().max(1.0), "{} vs {lo}", pair.value);
            assert!(pair.residual <= 1e-8);
        }
    }

    #[test]
    fn convergence_failure_reports_residual() {
        let k = 200;
        let a = random_hermitian(k, 10);
        let op = Dense { k, a, diag_precond: false };
        let opts = EigenOptions { max_iter: 3, ..EigenOptions::default() };
        match smallest_eigenpair(&op, None, &opts) {
            Err(Error::Convergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
