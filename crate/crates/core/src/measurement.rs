//! Synthetic ground truth and the measurement operators `A_k`.
//!
//! Channel `k` contributes `X_k = sum_l d_{k,l} h_k a(tau_{k,l})^T` and is
//! observed through the rows of its subspace matrix `B_k` (`n x s`): with
//! `b_{k,j}^H` the `j`-th row of `B_k`,
//!
//! ```text
//! y[j] = sum_k b_{k,j}^H x_{k,j},      x_{k,j} = column j of X_k.
//! ```
//!
//! The adjoint is the literal Frobenius adjoint: `A_k*(lambda)` has column
//! `j` equal to `lambda[j] b_{k,j}`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{shape_err, MvhlError, Result};
use crate::rng::{complex_gaussian, complex_gaussian_vector, unit_uniform};
use crate::scalar::{cis, real, CMatrix, CVector, Real};

/// `a(tau)[j] = exp(-i 2 pi j tau)`, `j = 0..n`.
pub fn steering_vector<T: Real>(tau: T, n: usize) -> CVector<T> {
    CVector::from_fn(n, |j, _| cis(-T::two_pi() * T::from_usize_exact(j) * tau))
}

/// Raster-ordered 2D steering vector: entry `p N + n` is
/// `exp(-i 2 pi (n tau + p nu))`.
pub fn steering_vector_2d<T: Real>(tau: T, nu: T, big_n: usize, p: usize) -> CVector<T> {
    CVector::from_fn(big_n * p, |idx, _| {
        let (pi, ni) = (idx / big_n, idx % big_n);
        cis(-T::two_pi() * (T::from_usize_exact(ni) * tau + T::from_usize_exact(pi) * nu))
    })
}

/// Wrap-around distance on the unit torus.
pub fn wrap_distance<T: Real>(a: T, b: T) -> T {
    let d = (a - b).abs() % T::one();
    d.min(T::one() - d)
}

/// Point sources of one channel on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSources<T: Real> {
    pub taus: Vec<T>,
    pub amps: Vec<Complex<T>>,
    /// Coefficient vector `h_k`, unit 2-norm.
    pub coeff: CVector<T>,
}

/// Per-channel sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEnsemble<T: Real> {
    pub channels: Vec<ChannelSources<T>>,
}

impl<T: Real> SourceEnsemble<T> {
    pub fn k(&self) -> usize {
        self.channels.len()
    }

    pub fn s(&self) -> usize {
        self.channels.first().map_or(0, |c| c.coeff.len())
    }

    pub fn r(&self) -> usize {
        self.channels.first().map_or(0, |c| c.taus.len())
    }
}

/// Delay-Doppler sources of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSources2D<T: Real> {
    pub delays: Vec<T>,
    pub dopplers: Vec<T>,
    pub amps: Vec<Complex<T>>,
    pub coeff: CVector<T>,
}

/// Amplitude `(1 + 10^c) e^{-i psi}`.
pub fn source_amplitude<T: Real>(c: T, psi: T) -> Complex<T> {
    cis(-psi) * (T::one() + T::lit(10.0).powf(c))
}

fn draw_amplitude<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let c: T = unit_uniform(rng);
    let psi = unit_uniform::<T, _>(rng) * T::two_pi();
    source_amplitude(c, psi)
}

fn draw_coeff<T: Real, R: Rng + ?Sized>(s: usize, rng: &mut R) -> CVector<T> {
    loop {
        let h: CVector<T> = complex_gaussian_vector(s, rng);
        let norm = h.norm();
        if norm > T::zero() {
            return h.unscale(norm);
        }
    }
}

const MAX_SEPARATION_ATTEMPTS: usize = 1_000_000;

fn draw_taus<T: Real, R: Rng + ?Sized>(r: usize, separation: f64, rng: &mut R) -> Result<Vec<T>> {
    let sep = T::lit(separation);
    for _ in 0..MAX_SEPARATION_ATTEMPTS {
        let taus: Vec<T> = (0..r).map(|_| unit_uniform(rng)).collect();
        if separation <= 0.0 || min_wrap_separation(&taus) >= sep {
            return Ok(taus);
        }
    }
    Err(MvhlError::SeparationInfeasible { separation, count: r })
}

/// Smallest pairwise wrap-around distance (`1` for fewer than two points).
pub fn min_wrap_separation<T: Real>(taus: &[T]) -> T {
    let mut best = T::one();
    for (i, &a) in taus.iter().enumerate() {
        for &b in &taus[i + 1..] {
            best = best.min(wrap_distance(a, b));
        }
    }
    best
}

/// Draws `K` channels of `r` sources with `s`-dimensional coefficients.
///
/// Per channel the draw order is: the `r` locations (resampled as a set until
/// their wrap-around separation reaches `separation`), then `(c, psi)` for each
/// amplitude, then the Gaussian coefficient vector.
pub fn gen_sources<T: Real, R: Rng + ?Sized>(
    k: usize,
    r: usize,
    s: usize,
    separation: f64,
    rng: &mut R,
) -> Result<SourceEnsemble<T>> {
    if r == 0 || s == 0 || k == 0 {
        return Err(MvhlError::InvalidArgument(format!("K = {k}, r = {r}, s = {s} must be positive")));
    }
    if separation > 0.0 && r as f64 * separation >= 1.0 {
        return Err(MvhlError::SeparationInfeasible { separation, count: r });
    }
    let channels = (0..k)
        .map(|_| {
            let taus = draw_taus(r, separation, rng)?;
            let amps = (0..r).map(|_| draw_amplitude(rng)).collect();
            let coeff = draw_coeff(s, rng);
            Ok(ChannelSources { taus, amps, coeff })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SourceEnsemble { channels })
}

/// Draws delay-Doppler channels; `counts[k]` sources in channel `k`, delays
/// and Dopplers uniform on `[0, 1)`.
pub fn gen_sources_2d<T: Real, R: Rng + ?Sized>(counts: &[usize], s: usize, rng: &mut R) -> Result<Vec<ChannelSources2D<T>>> {
    if s == 0 || counts.contains(&0) {
        return Err(MvhlError::InvalidArgument("source counts and s must be positive".into()));
    }
    Ok(counts
        .iter()
        .map(|&count| {
            let mut delays = Vec::with_capacity(count);
            let mut dopplers = Vec::with_capacity(count);
            for _ in 0..count {
                delays.push(unit_uniform(rng));
                dopplers.push(unit_uniform(rng));
            }
            let amps = (0..count).map(|_| draw_amplitude(rng)).collect();
            let coeff = draw_coeff(s, rng);
            ChannelSources2D { delays, dopplers, amps, coeff }
        })
        .collect())
}

/// `X_k = sum_l d_{k,l} h_k a(tau_{k,l})^T` for every channel.
pub fn synthesize_target<T: Real>(sources: &SourceEnsemble<T>, n: usize) -> Vec<CMatrix<T>> {
    sources
        .channels
        .iter()
        .map(|ch| {
            let mut combo = CVector::zeros(n);
            for (&tau, &d) in ch.taus.iter().zip(&ch.amps) {
                combo.axpy(d, &steering_vector(tau, n), real(T::one()));
            }
            &ch.coeff * combo.transpose()
        })
        .collect()
}

pub fn synthesize_target_2d<T: Real>(channels: &[ChannelSources2D<T>], big_n: usize, p: usize) -> Vec<CMatrix<T>> {
    channels
        .iter()
        .map(|ch| {
            let mut combo = CVector::zeros(big_n * p);
            for ((&tau, &nu), &d) in ch.delays.iter().zip(&ch.dopplers).zip(&ch.amps) {
                combo.axpy(d, &steering_vector_2d(tau, nu, big_n, p), real(T::one()));
            }
            &ch.coeff * combo.transpose()
        })
        .collect()
}

/// Subspace population models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubspaceModel {
    /// Rows are the rows of the `n x n` DFT matrix in random order, restricted
    /// to a random set of `s` distinct columns (frequencies).
    DftRows,
    /// Independent `+-1` entries.
    Rademacher,
    /// Row `j` is `[1, e^{2 pi i f_j}, .., e^{2 pi i (s-1) f_j}]`,
    /// `f_j ~ U[0, 1)`.
    FourierSteering,
}

impl SubspaceModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubspaceModel::DftRows => "dft-rows",
            SubspaceModel::Rademacher => "rademacher",
            SubspaceModel::FourierSteering => "fourier-steering",
        }
    }
}

impl fmt::Display for SubspaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubspaceModel {
    type Err = MvhlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dft-rows" => Ok(SubspaceModel::DftRows),
            "rademacher" => Ok(SubspaceModel::Rademacher),
            "fourier-steering" => Ok(SubspaceModel::FourierSteering),
            other => Err(MvhlError::UnknownModel(other.to_string())),
        }
    }
}

/// One known subspace `B_k` (`n x s`). Row `j` is `b_{k,j}^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T: Real> {
    matrix: CMatrix<T>,
    model: Option<SubspaceModel>,
}

impl<T: Real> Subspace<T> {
    pub fn new(matrix: CMatrix<T>) -> Self {
        Self { matrix, model: None }
    }

    pub fn with_model(matrix: CMatrix<T>, model: SubspaceModel) -> Self {
        Self { matrix, model: Some(model) }
    }

    /// `B` with `b_{k,j}^H` as rows.
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn model(&self) -> Option<SubspaceModel> {
        self.model
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn s(&self) -> usize {
        self.matrix.ncols()
    }

    /// `||b_{k,j}||_2^2` for every `j`.
    pub fn row_norms_sq(&self) -> Vec<T> {
        self.matrix.row_iter().map(|r| r.norm_squared()).collect()
    }

    /// Empirical `mu_0 = max_{j,c} |B[j, c]|^2`.
    pub fn empirical_mu0(&self) -> T {
        self.matrix.iter().fold(T::zero(), |m, z| m.max(z.norm_sqr()))
    }

    fn check_data(&self, x: &CMatrix<T>) -> Result<()> {
        if x.shape() != (self.s(), self.n()) {
            return Err(shape_err(
                "data matrix",
                format!("{}x{}", self.s(), self.n()),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        Ok(())
    }

    /// `A_k(X)[j] = b_{k,j}^H x_j`.
    pub fn apply(&self, x: &CMatrix<T>) -> Result<CVector<T>> {
        self.check_data(x)?;
        Ok(CVector::from_fn(self.n(), |j, _| (self.matrix.row(j) * x.column(j))[(0, 0)]))
    }

    /// `A_k*(lambda)`: column `j` is `lambda[j] b_{k,j}`.
    pub fn apply_adjoint(&self, lambda: &CVector<T>) -> Result<CMatrix<T>> {
        if lambda.len() != self.n() {
            return Err(shape_err("dual vector", self.n(), lambda.len()));
        }
        Ok(CMatrix::from_fn(self.s(), self.n(), |c, j| self.matrix[(j, c)].conj() * lambda[j]))
    }
}

/// Draws one subspace matrix of the given model.
pub fn gen_subspace<T: Real, R: Rng + ?Sized>(n: usize, s: usize, model: SubspaceModel, rng: &mut R) -> Result<Subspace<T>> {
    if n == 0 || s == 0 {
        return Err(MvhlError::InvalidArgument(format!("n = {n} and s = {s} must be positive")));
    }
    let matrix = match model {
        SubspaceModel::DftRows => {
            if s > n {
                return Err(MvhlError::InvalidArgument(format!("dft-rows needs s <= n (s = {s}, n = {n})")));
            }
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(rng);
            let freqs: Vec<usize> = rand::seq::index::sample(rng, n, s).into_vec();
            let nn = T::from_usize_exact(n);
            CMatrix::from_fn(n, s, |j, c| {
                let phase = (rows[j] * freqs[c]) % n;
                cis(-T::two_pi() * T::from_usize_exact(phase) / nn)
            })
        }
        SubspaceModel::Rademacher => {
            let signs: Vec<bool> = (0..n * s).map(|_| rng.random()).collect();
            CMatrix::from_fn(n, s, |j, c| real(if signs[j * s + c] { T::one() } else { -T::one() }))
        }
        SubspaceModel::FourierSteering => {
            let freqs: Vec<T> = (0..n).map(|_| unit_uniform(rng)).collect();
            CMatrix::from_fn(n, s, |j, c| cis(T::two_pi() * T::from_usize_exact(c) * freqs[j]))
        }
    };
    Ok(Subspace::with_model(matrix, model))
}

/// Draws `k` independent subspaces.
pub fn gen_subspaces<T: Real, R: Rng + ?Sized>(
    k: usize,
    n: usize,
    s: usize,
    model: SubspaceModel,
    rng: &mut R,
) -> Result<Vec<Subspace<T>>> {
    (0..k).map(|_| gen_subspace(n, s, model, rng)).collect()
}

/// `y = sum_k A_k(X_k)`.
pub fn forward<T: Real>(subspaces: &[Subspace<T>], xs: &[CMatrix<T>]) -> Result<CVector<T>> {
    if subspaces.len() != xs.len() {
        return Err(shape_err("channel count", subspaces.len(), xs.len()));
    }
    let n = subspaces.first().map_or(0, Subspace::n);
    let mut y = CVector::zeros(n);
    for (sub, x) in subspaces.iter().zip(xs) {
        if sub.n() != n {
            return Err(shape_err("subspace rows", n, sub.n()));
        }
        y += sub.apply(x)?;
    }
    Ok(y)
}

pub fn measurement_adjoint<T: Real>(subspace: &Subspace<T>, lambda: &CVector<T>) -> Result<CMatrix<T>> {
    subspace.apply_adjoint(lambda)
}

/// `y + eps ||y|| w / ||w||` with `w` standard complex Gaussian.
pub fn add_noise<T: Real, R: Rng + ?Sized>(y: &CVector<T>, eps: T, rng: &mut R) -> Result<CVector<T>> {
    if !(eps >= T::zero()) {
        return Err(MvhlError::InvalidArgument("noise level must be nonnegative".into()));
    }
    if eps == T::zero() {
        return Ok(y.clone());
    }
    let ynorm = y.norm();
    if ynorm == T::zero() {
        return Err(MvhlError::ZeroNorm("measurement vector"));
    }
    let mut w = CVector::from_fn(y.len(), |_, _| complex_gaussian::<T, _>(rng));
    while w.norm() == T::zero() {
        w = CVector::from_fn(y.len(), |_, _| complex_gaussian::<T, _>(rng));
    }
    let wn = w.norm();
    Ok(y + w * real(eps * ynorm / wn))
}

/// Signal-to-noise ratio implied by noise level `eps`.
pub fn snr_db(eps: f64) -> f64 {
    -20.0 * eps.log10()
}

/// `sqrt(sum_k ||X_k - E_k||_F^2 / sum_k ||X_k||_F^2)`.
pub fn relative_error<T: Real>(estimates: &[CMatrix<T>], truth: &[CMatrix<T>]) -> Result<T> {
    if estimates.len() != truth.len() {
        return Err(shape_err("channel count", truth.len(), estimates.len()));
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for (e, t) in estimates.iter().zip(truth) {
        if e.shape() != t.shape() {
            return Err(shape_err("estimate", format!("{:?}", t.shape()), format!("{:?}", e.shape())));
        }
        num += (e - t).norm_squared();
        den += t.norm_squared();
    }
    if den == T::zero() {
        return Err(MvhlError::ZeroNorm("ground truth"));
    }
    Ok((num / den).sqrt())
}
