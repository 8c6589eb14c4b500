//! ADMM for the multiple vectorized Hankel lift program
//!
//! ```text
//! minimise  sum_k ||H(X_k)||_*   subject to  sum_k A_k(X_k) = y
//! ```
//!
//! split as `Z_k = H(X_k)`. The `Z`-step is singular value thresholding; the
//! `X`-step has a closed form because `H*H = D^2` is diagonal over columns and
//! the measurement constraint couples the channels only within one column.
//! For data column `j` the stacked unknown `(x_{1,j}, .., x_{K,j})` is the
//! projection of the unconstrained minimiser onto the hyperplane
//! `sum_k b_{k,j}^H x_{k,j} = y[j]`. The noise-tolerant variant replaces the
//! hyperplanes by the ball `||sum_k A_k(X_k) - y||_2 <= delta`, whose
//! projection (in the `D^2`-weighted metric) reduces to a scalar root find.

use num_complex::Complex;

use crate::error::{shape_err, MvhlError, Result};
use crate::lifting::Lift;
use crate::linalg::{all_finite, nuclear_norm};
use crate::measurement::{forward, Subspace};
use crate::scalar::{real, CMatrix, CVector, Real};

/// ADMM parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Augmented-Lagrangian penalty.
    pub rho: f64,
    pub max_iter: usize,
    /// Relative primal tolerance on `max_k ||H(X_k) - Z_k||_F`.
    pub tol_primal: f64,
    /// Relative dual tolerance on `rho max_k ||Z_k - Z_k^prev||_F`.
    pub tol_dual: f64,
    /// Feasibility tolerance relative to `||y||_2`.
    pub tol_feas: f64,
    /// Radius of the measurement ball; `0` enforces equality.
    pub noise_delta: f64,
    pub over_relaxation: f64,
    pub adaptive_rho: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iter: 5000,
            tol_primal: 1e-8,
            tol_dual: 1e-8,
            tol_feas: 1e-9,
            noise_delta: 0.0,
            over_relaxation: 1.6,
            adaptive_rho: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(MvhlError::InvalidArgument(msg.to_string()));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive and finite");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0 && self.tol_feas > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.noise_delta >= 0.0 && self.noise_delta.is_finite()) {
            return bad("noise_delta must be nonnegative and finite");
        }
        if !(1.0..=1.9).contains(&self.over_relaxation) {
            return bad("over_relaxation must lie in [1, 1.9]");
        }
        Ok(())
    }
}

/// Residuals recorded after one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub feas: f64,
}

#[derive(Debug, Clone)]
pub struct SolverResult<T: Real> {
    pub estimates: Vec<CMatrix<T>>,
    /// `sum_k ||H(X_k)||_*` at the returned estimates.
    pub objective: T,
    /// `||sum_k A_k(X_k) - y||_2` at the returned estimates.
    pub feasibility: T,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<Residuals>,
    /// Penalty in force at the last iteration.
    pub final_rho: f64,
}

/// Proximal operator of `theta ||.||_*`: `U max(Sigma - theta, 0) V^H`.
///
/// Computed from the Hermitian eigendecomposition of the smaller Gram matrix
/// (`W^H W` or `W W^H`), which yields the same matrix as the SVD route.
pub fn svt<T: Real>(w: &CMatrix<T>, theta: T) -> Result<CMatrix<T>> {
    if !(theta >= T::zero()) {
        return Err(MvhlError::InvalidArgument("threshold must be nonnegative".into()));
    }
    if theta == T::zero() || w.is_empty() {
        return Ok(w.clone());
    }
    if w.nrows() < w.ncols() {
        return Ok(svt(&w.adjoint(), theta)?.adjoint());
    }
    let gram = column_gram(w);
    let dim = gram.nrows();
    let eig = gram.try_symmetric_eigen(T::eps(), 10_000).ok_or(MvhlError::SvdFailure)?;
    // Shrinkage acts as W C with C = V f(Sigma) V^H, f(sigma) = (sigma - theta)_+ / sigma.
    let mut c = CMatrix::zeros(dim, dim);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let sigma = lam.max(T::zero()).sqrt();
        if sigma <= theta {
            continue;
        }
        let f = (sigma - theta) / sigma;
        if !f.is_finite() {
            return Err(MvhlError::SvdFailure);
        }
        let col = eig.eigenvectors.column(i);
        c.ger(real(f), &col, &col.conjugate(), real(T::one()));
    }
    Ok(mul_columns(w, &c))
}

/// `W^H W` from column inner products, filling the Hermitian lower half.
fn column_gram<T: Real>(w: &CMatrix<T>) -> CMatrix<T> {
    let (rows, n) = w.shape();
    let data = w.as_slice();
    let mut g = CMatrix::zeros(n, n);
    for a in 0..n {
        let ca = &data[a * rows..(a + 1) * rows];
        for b in a..n {
            let cb = &data[b * rows..(b + 1) * rows];
            let (mut re, mut im) = (T::zero(), T::zero());
            for (x, y) in ca.iter().zip(cb) {
                // conj(x) * y
                re += x.re * y.re + x.im * y.im;
                im += x.re * y.im - x.im * y.re;
            }
            g[(a, b)] = Complex::new(re, im);
            g[(b, a)] = Complex::new(re, -im);
        }
    }
    g
}

/// `W C` accumulated column by column.
fn mul_columns<T: Real>(w: &CMatrix<T>, c: &CMatrix<T>) -> CMatrix<T> {
    let rows = w.nrows();
    let data = w.as_slice();
    let mut out = CMatrix::zeros(rows, c.ncols());
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let dst = col.as_mut_slice();
        for a in 0..w.ncols() {
            let k = c[(a, j)];
            if k.re == T::zero() && k.im == T::zero() {
                continue;
            }
            for (d, x) in dst.iter_mut().zip(&data[a * rows..(a + 1) * rows]) {
                d.re += k.re * x.re - k.im * x.im;
                d.im += k.re * x.im + k.im * x.re;
            }
        }
    }
    out
}

/// Per-column measurement geometry `sum_k ||b_{k,j}||^2`.
struct ColumnGeometry<T: Real> {
    row_energy: Vec<T>,
}

impl<T: Real> ColumnGeometry<T> {
    fn new(subspaces: &[Subspace<T>]) -> Self {
        let n = subspaces.first().map_or(0, Subspace::n);
        let mut row_energy = vec![T::zero(); n];
        for sub in subspaces {
            for (e, r) in row_energy.iter_mut().zip(sub.row_norms_sq()) {
                *e += r;
            }
        }
        Self { row_energy }
    }
}

fn check_problem<T: Real>(subspaces: &[Subspace<T>], centers: &[CMatrix<T>], y: &CVector<T>) -> Result<()> {
    if subspaces.is_empty() {
        return Err(MvhlError::InvalidArgument("at least one channel is required".into()));
    }
    if subspaces.len() != centers.len() {
        return Err(shape_err("channel count", subspaces.len(), centers.len()));
    }
    let n = y.len();
    for (sub, c) in subspaces.iter().zip(centers) {
        if sub.n() != n {
            return Err(shape_err("subspace rows", n, sub.n()));
        }
        if c.shape() != (sub.s(), n) {
            return Err(shape_err(
                "center matrix",
                format!("{}x{}", sub.s(), n),
                format!("{}x{}", c.nrows(), c.ncols()),
            ));
        }
    }
    Ok(())
}

/// Residual `y[j] - sum_k b_{k,j}^H c_{k,j}` for every column.
fn column_residuals<T: Real>(subspaces: &[Subspace<T>], centers: &[CMatrix<T>], y: &CVector<T>) -> Result<CVector<T>> {
    Ok(y - forward(subspaces, centers)?)
}

/// `x_{k,j} = c_{k,j} + t_j b_{k,j}` for every channel.
fn shift_along_rows<T: Real>(subspaces: &[Subspace<T>], centers: &[CMatrix<T>], t: &CVector<T>) -> Result<Vec<CMatrix<T>>> {
    subspaces
        .iter()
        .zip(centers)
        .map(|(sub, c)| Ok(c + sub.apply_adjoint(t)?))
        .collect()
}

/// Closed-form `X`-step under the equality constraint.
///
/// `centers[k]` is the unconstrained minimiser `D^-2 H*(M_k)`; the result
/// minimises `sum_k ||H(X_k) - M_k||_F^2` subject to `sum_k A_k(X_k) = y`.
pub fn x_update<T: Real>(centers: &[CMatrix<T>], subspaces: &[Subspace<T>], y: &CVector<T>) -> Result<Vec<CMatrix<T>>> {
    check_problem(subspaces, centers, y)?;
    x_update_with(centers, subspaces, y, &ColumnGeometry::new(subspaces))
}

fn x_update_with<T: Real>(
    centers: &[CMatrix<T>],
    subspaces: &[Subspace<T>],
    y: &CVector<T>,
    geom: &ColumnGeometry<T>,
) -> Result<Vec<CMatrix<T>>> {
    let resid = column_residuals(subspaces, centers, y)?;
    let mut t = CVector::zeros(y.len());
    for (j, (&rj, &beta)) in resid.iter().zip(&geom.row_energy).enumerate() {
        if beta > T::zero() {
            t[j] = rj * real(T::one() / beta);
        } else if rj != Complex::new(T::zero(), T::zero()) {
            return Err(MvhlError::InfeasibleColumn { column: j });
        }
    }
    shift_along_rows(subspaces, centers, &t)
}

/// `X`-step under `||sum_k A_k(X_k) - y||_2 <= delta`.
///
/// Minimises `sum_k sum_j w_j ||x_{k,j} - c_{k,j}||^2` over the ball. With
/// multiplier `mu`, column `j` moves by `mu r_j / (w_j + mu beta_j)` along
/// `b_{k,j}`, and `mu` solves `sum_j |r_j|^2 (w_j / (w_j + mu beta_j))^2 = delta^2`.
pub fn x_update_ball<T: Real>(
    centers: &[CMatrix<T>],
    subspaces: &[Subspace<T>],
    y: &CVector<T>,
    weights: &[usize],
    delta: T,
) -> Result<Vec<CMatrix<T>>> {
    check_problem(subspaces, centers, y)?;
    if weights.len() != y.len() {
        return Err(shape_err("weight vector", y.len(), weights.len()));
    }
    let w: Vec<T> = weights.iter().map(|&v| T::from_usize_exact(v)).collect();
    x_update_ball_with(centers, subspaces, y, &w, delta, &ColumnGeometry::new(subspaces))
}

fn x_update_ball_with<T: Real>(
    centers: &[CMatrix<T>],
    subspaces: &[Subspace<T>],
    y: &CVector<T>,
    weights: &[T],
    delta: T,
    geom: &ColumnGeometry<T>,
) -> Result<Vec<CMatrix<T>>> {
    let resid = column_residuals(subspaces, centers, y)?;
    let r2: Vec<T> = resid.iter().map(|z| z.norm_sqr()).collect();
    let delta2 = delta * delta;
    let beta = &geom.row_energy;
    let phi = |mu: T| -> T {
        r2.iter()
            .zip(weights)
            .zip(beta)
            .map(|((&r, &w), &b)| {
                let f = w / (w + mu * b);
                r * f * f
            })
            .fold(T::zero(), |a, b| a + b)
    };
    if phi(T::zero()) <= delta2 {
        return Ok(centers.to_vec());
    }
    let unreachable: T = r2
        .iter()
        .zip(beta)
        .filter(|(_, &b)| b == T::zero())
        .map(|(&r, _)| r)
        .fold(T::zero(), |a, b| a + b);
    if unreachable > delta2 {
        return Err(MvhlError::InfeasibleBall { delta: delta.as_f64() });
    }
    let mut lo = T::zero();
    let mut hi = T::one();
    let cap = T::lit(1e300);
    while phi(hi) > delta2 {
        lo = hi;
        hi *= T::lit(2.0);
        if hi > cap {
            return Err(MvhlError::InfeasibleBall { delta: delta.as_f64() });
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > delta2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = hi;
    let t = CVector::from_fn(y.len(), |j, _| {
        let denom = weights[j] + mu * beta[j];
        resid[j] * real(mu / denom)
    });
    shift_along_rows(subspaces, centers, &t)
}

fn check_inputs<T: Real, L: Lift>(subspaces: &[Subspace<T>], y: &CVector<T>, lift: &L) -> Result<()> {
    if subspaces.is_empty() {
        return Err(MvhlError::InvalidArgument("at least one channel is required".into()));
    }
    if y.len() != lift.n() {
        return Err(shape_err("measurement vector", lift.n(), y.len()));
    }
    for sub in subspaces {
        if sub.n() != lift.n() || sub.s() != lift.s() {
            return Err(shape_err(
                "subspace matrix",
                format!("{}x{}", lift.n(), lift.s()),
                format!("{}x{}", sub.n(), sub.s()),
            ));
        }
    }
    if y.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(MvhlError::InvalidArgument("measurement vector must be finite".into()));
    }
    Ok(())
}

/// Equality-constrained solve. `config.noise_delta` is ignored.
pub fn solve_mvhl<T: Real, L: Lift>(
    subspaces: &[Subspace<T>],
    y: &CVector<T>,
    lift: &L,
    config: &SolverConfig,
) -> Result<SolverResult<T>> {
    config.validate()?;
    check_inputs(subspaces, y, lift)?;
    run_admm(subspaces, y, lift, config, None)
}

/// Ball-constrained solve with radius `config.noise_delta > 0`.
pub fn solve_mvhl_noisy<T: Real, L: Lift>(
    subspaces: &[Subspace<T>],
    y: &CVector<T>,
    lift: &L,
    config: &SolverConfig,
) -> Result<SolverResult<T>> {
    config.validate()?;
    if config.noise_delta <= 0.0 {
        return Err(MvhlError::InvalidArgument("the noisy solve needs noise_delta > 0".into()));
    }
    check_inputs(subspaces, y, lift)?;
    run_admm(subspaces, y, lift, config, Some(T::lit(config.noise_delta)))
}

/// Dispatches on `config.noise_delta`.
pub fn solve<T: Real, L: Lift>(
    subspaces: &[Subspace<T>],
    y: &CVector<T>,
    lift: &L,
    config: &SolverConfig,
) -> Result<SolverResult<T>> {
    if config.noise_delta > 0.0 {
        solve_mvhl_noisy(subspaces, y, lift, config)
    } else {
        solve_mvhl(subspaces, y, lift, config)
    }
}

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e8;
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_FACTOR: f64 = 2.0;

fn run_admm<T: Real, L: Lift>(
    subspaces: &[Subspace<T>],
    y: &CVector<T>,
    lift: &L,
    config: &SolverConfig,
    delta: Option<T>,
) -> Result<SolverResult<T>> {
    let k = subspaces.len();
    let (s, n) = (lift.s(), lift.n());
    let (lr, lc) = lift.lifted_dims();
    let weights: Vec<T> = lift.weights().into_iter().map(T::from_usize_exact).collect();
    let geom = ColumnGeometry::new(subspaces);
    let alpha = T::lit(config.over_relaxation);
    let one_minus_alpha = T::one() - alpha;
    let ynorm = y.norm().as_f64();
    let feas_bound = delta.map_or(0.0, |d| d.as_f64()) + config.tol_feas * ynorm;

    let mut z: Vec<CMatrix<T>> = vec![CMatrix::zeros(lr, lc); k];
    let mut lam: Vec<CMatrix<T>> = vec![CMatrix::zeros(lr, lc); k];
    let mut x: Vec<CMatrix<T>> = vec![CMatrix::zeros(s, n); k];
    let mut rho = config.rho;
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<CMatrix<T>>)> = None;
    let mut converged = false;

    for iteration in 1..=config.max_iter {
        let inv_rho = real(T::lit(1.0 / rho));
        let centers = z
            .iter()
            .zip(&lam)
            .map(|(zk, lk)| {
                let m = zk - lk * inv_rho;
                let mut c = lift.adjoint(&m)?;
                for (j, mut col) in c.column_iter_mut().enumerate() {
                    col.unscale_mut(weights[j]);
                }
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        x = match delta {
            None => x_update_with(&centers, subspaces, y, &geom)?,
            Some(d) => x_update_ball_with(&centers, subspaces, y, &weights, d, &geom)?,
        };

        let mut primal = 0.0f64;
        let mut dual = 0.0f64;
        let mut z_scale = 0.0f64;
        for kk in 0..k {
            let hx = lift.lift(&x[kk])?;
            let relaxed = &hx * real(alpha) + &z[kk] * real(one_minus_alpha);
            let z_new = svt(&(&relaxed + &lam[kk] * inv_rho), T::lit(1.0 / rho))?;
            lam[kk] += (&relaxed - &z_new) * real(T::lit(rho));
            primal = primal.max((&hx - &z_new).norm().as_f64());
            dual = dual.max(rho * (&z_new - &z[kk]).norm().as_f64());
            z_scale = z_scale.max(z_new.norm().as_f64());
            z[kk] = z_new;
        }
        if !(primal.is_finite() && dual.is_finite()) || !x.iter().all(all_finite) {
            return Err(MvhlError::NonFinite { iteration });
        }
        let feas = (forward(subspaces, &x)? - y).norm().as_f64();
        history.push(Residuals { primal, dual, feas });

        let scale = ynorm.max(z_scale).max(1.0);
        let rel_primal = primal / scale;
        let rel_dual = dual / scale;
        if rel_primal <= config.tol_primal && rel_dual <= config.tol_dual && feas <= feas_bound {
            converged = true;
            break;
        }
        let merit = (rel_primal / config.tol_primal).max(rel_dual / config.tol_dual);
        if best.as_ref().is_none_or(|(m, _)| merit < *m) {
            best = Some((merit, x.clone()));
        }
        if config.adaptive_rho {
            if primal > BALANCE_RATIO * dual {
                rho = (rho * BALANCE_FACTOR).min(RHO_MAX);
            } else if dual > BALANCE_RATIO * primal {
                rho = (rho / BALANCE_FACTOR).max(RHO_MIN);
            }
        }
    }

    let estimates = match (converged, best) {
        (false, Some((_, bx))) => bx,
        _ => x,
    };
    let mut objective = T::zero();
    for xk in &estimates {
        objective += nuclear_norm(&lift.lift(xk)?)?;
    }
    let feasibility = (forward(subspaces, &estimates)? - y).norm();
    Ok(SolverResult {
        estimates,
        objective,
        feasibility,
        iterations: history.len(),
        converged,
        residual_history: history,
        final_rho: rho,
    })
}
