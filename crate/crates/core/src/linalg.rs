//! Dense complex linear-algebra helpers shared by the operator modules.

use num_complex::Complex;

use crate::error::{MvhlError, Result};
use crate::scalar::{CMatrix, CVector, Real};

/// Relative threshold (against the largest singular value) used for every
/// numerical-rank decision.
pub const RANK_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Thin singular value decomposition with singular values sorted in
/// decreasing order. `u` is `rows x p`, `v` is `cols x p`, `p = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct Svd<T: Real> {
    pub u: CMatrix<T>,
    pub sigma: Vec<T>,
    pub v: CMatrix<T>,
}

impl<T: Real> Svd<T> {
    pub fn rank(&self, rel_tol: T) -> usize {
        numerical_rank(&self.sigma, rel_tol)
    }

    /// Leading `r` left singular vectors.
    pub fn u_leading(&self, r: usize) -> CMatrix<T> {
        self.u.columns(0, r).into_owned()
    }

    /// Leading `r` right singular vectors.
    pub fn v_leading(&self, r: usize) -> CMatrix<T> {
        self.v.columns(0, r).into_owned()
    }
}

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Jacobi is used instead of a bidiagonalisation route because it keeps
/// full accuracy on exactly rank-deficient inputs, which is the normal case
/// for lifted matrices of spectrally sparse data.
pub fn svd<T: Real>(m: &CMatrix<T>) -> Result<Svd<T>> {
    let (rows, cols) = m.shape();
    if rows.min(cols) == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            v: CMatrix::zeros(cols, 0),
        });
    }
    if !all_finite(m) {
        return Err(MvhlError::SvdFailure);
    }
    if rows < cols {
        let t = jacobi_tall(&m.adjoint())?;
        return Ok(Svd { u: t.v, sigma: t.sigma, v: t.u });
    }
    jacobi_tall(m)
}

fn jacobi_tall<T: Real>(m: &CMatrix<T>) -> Result<Svd<T>> {
    let (rows, cols) = m.shape();
    let mut w = m.clone();
    let mut v = CMatrix::<T>::identity(cols, cols);
    let tol = T::eps() * T::from_usize_exact(rows).sqrt();
    let mut norms: Vec<T> = w.column_iter().map(|c| c.norm_squared()).collect();
    // Columns at roundoff level carry no information; rotating them never settles.
    let negligible = T::eps() * T::eps() * norms.iter().fold(T::zero(), |a, &b| a + b);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm_sqr().sqrt();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.unscale(g).conj();
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
                norms[p] = w.column(p).norm_squared();
                norms[q] = w.column(q).norm_squared();
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MvhlError::SvdFailure);
    }
    let sigma_raw: Vec<T> = norms.iter().map(|x| x.sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| sigma_raw[b].partial_cmp(&sigma_raw[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut u = CMatrix::<T>::zeros(rows, cols);
    let mut sv = CMatrix::<T>::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    let mut filled = 0;
    for &src in &order {
        let sg = sigma_raw[src];
        sv.set_column(filled, &v.column(src));
        if sg > T::zero() && sg * sg > negligible {
            u.set_column(filled, &w.column(src).unscale(sg));
            if !orthonormalize_column(&mut u, filled) {
                complete_column(&mut u, filled);
            }
        } else {
            complete_column(&mut u, filled);
        }
        sigma.push(sg);
        filled += 1;
    }
    Ok(Svd { u, sigma, v: sv })
}

/// `[x_p, x_q] <- [c x_p - s e x_q, s x_p + c e x_q]` with `e = phase`.
fn rotate<T: Real>(m: &mut CMatrix<T>, p: usize, q: usize, c: T, s: T, phase: Complex<T>) {
    let rows = m.nrows();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * rows);
    let xp = &mut head[p * rows..(p + 1) * rows];
    let xq = &mut tail[..rows];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let eb = *b * phase;
        let na = a.scale(c) - eb.scale(s);
        *b = a.scale(s) + eb.scale(c);
        *a = na;
    }
}

/// Gram-Schmidt (twice) of `cand` against columns `0..j` of `u`.
fn residual_against<T: Real>(u: &CMatrix<T>, j: usize, mut cand: CVector<T>) -> CVector<T> {
    for _ in 0..2 {
        for k in 0..j {
            let proj = u.column(k).dotc(&cand);
            cand.axpy(-proj, &u.column(k), Complex::new(T::one(), T::zero()));
        }
    }
    cand
}

/// Re-orthogonalises column `j` of `u` (unit norm on entry) against columns
/// `0..j`; returns false if little of it survives.
fn orthonormalize_column<T: Real>(u: &mut CMatrix<T>, j: usize) -> bool {
    let cand = residual_against(u, j, u.column(j).into_owned());
    let norm = cand.norm();
    if norm <= T::lit(0.5) {
        return false;
    }
    u.set_column(j, &cand.unscale(norm));
    true
}

/// Fills column `j` of `u` with a unit vector orthogonal to columns `0..j`,
/// taken from the coordinate axis with the largest orthogonal component.
fn complete_column<T: Real>(u: &mut CMatrix<T>, j: usize) {
    let rows = u.nrows();
    let mut best = CVector::<T>::zeros(rows);
    let mut best_norm = T::zero();
    for e in 0..rows {
        let mut axis = CVector::<T>::zeros(rows);
        axis[e] = Complex::new(T::one(), T::zero());
        let cand = residual_against(u, j, axis);
        let norm = cand.norm();
        if norm > best_norm {
            best_norm = norm;
            best = cand;
        }
    }
    let cand = residual_against(u, j, best.unscale(best_norm));
    let norm = cand.norm();
    u.set_column(j, &cand.unscale(norm));
}

/// Singular values in decreasing order.
pub fn singular_values<T: Real>(m: &CMatrix<T>) -> Result<Vec<T>> {
    Ok(svd(m)?.sigma)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank<T: Real>(sigma: &[T], rel_tol: T) -> usize {
    let top = sigma.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if top <= T::zero() {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * top).count()
}

pub fn nuclear_norm<T: Real>(m: &CMatrix<T>) -> Result<T> {
    Ok(singular_values(m)?.into_iter().fold(T::zero(), |a, b| a + b))
}

pub fn spectral_norm<T: Real>(m: &CMatrix<T>) -> Result<T> {
    Ok(singular_values(m)?.first().copied().unwrap_or_else(T::zero))
}

/// Frobenius inner product `<a, b> = tr(a^H b)`, conjugate-linear in `a`.
#[inline]
pub fn inner<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    a.dotc(b)
}

/// Squared Frobenius norm.
#[inline]
pub fn fro_sq<T: Real>(m: &CMatrix<T>) -> T {
    m.norm_squared()
}

pub fn all_finite<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
