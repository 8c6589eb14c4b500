//! Spatial-smoothing MUSIC on the lifted matrix.
//!
//! For exact data the row space of `H(X)` is spanned by the conjugated
//! steering vectors `conj(a^{(n2)}(tau_l))`, so the pseudospectrum
//!
//! ```text
//! P(tau) = 1 / || (I - V_r V_r^H) v(tau) ||^2,   v(tau) = conj(a^{(n2)}(tau)) / sqrt(n2)
//! ```
//!
//! diverges at the true locations. The two-dimensional variant uses the
//! two-level lift and `v(tau, nu) = conj(a^{(P2)}(nu) kron a^{(N2)}(tau)) / sqrt(N2 P2)`.

use std::cmp::Ordering;

use crate::error::{shape_err, MvhlError, Result};
use crate::lifting::{Lift, LiftShape, LiftShape2D};
use crate::linalg::{svd, RANK_TOL};
use crate::measurement::{steering_vector, steering_vector_2d, wrap_distance};
use crate::scalar::{CMatrix, CVector, Real};

pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_GRID_2D: usize = 256;

const GOLDEN_ITERS: usize = 60;
const REFINE_ROUNDS_2D: usize = 4;

/// Sampled pseudospectrum on the uniform grid `i / len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudospectrum<T: Real> {
    pub grid: Vec<T>,
    pub values: Vec<T>,
}

/// Pseudospectrum on the `taus x nus` grid; `values[it * nus.len() + iv]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudospectrum2D<T: Real> {
    pub taus: Vec<T>,
    pub nus: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> Pseudospectrum2D<T> {
    pub fn at(&self, it: usize, iv: usize) -> T {
        self.values[it * self.nus.len() + iv]
    }
}

/// Located peaks, sorted by location.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedSources<T: Real> {
    pub taus: Vec<T>,
    pub peak_values: Vec<T>,
}

/// Located delay-Doppler peaks, sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedSources2D<T: Real> {
    pub points: Vec<(T, T)>,
    pub peak_values: Vec<T>,
}

/// Result of assigning estimates to ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport<T: Real> {
    /// `assignment[i]` is the estimate paired with truth `i`.
    pub assignment: Vec<usize>,
    /// Wrap-around error per truth source (largest coordinate error in 2D).
    pub errors: Vec<T>,
    pub max_error: T,
    pub matched: bool,
}

fn uniform_grid<T: Real>(len: usize) -> Vec<T> {
    let g = T::from_usize_exact(len);
    (0..len).map(|i| T::from_usize_exact(i) / g).collect()
}

fn wrap_unit<T: Real>(x: T) -> T {
    let w = x - x.floor();
    if w >= T::one() {
        T::zero()
    } else {
        w
    }
}

/// Noise-subspace residual `|| (I - V V^H) v ||^2` for a unit vector `v`.
fn residual_sq<T: Real>(v_r: &CMatrix<T>, v: &CVector<T>) -> T {
    let coeffs = v_r.ad_mul(v);
    (v - v_r * coeffs).norm_squared()
}

/// Reciprocal residual, clamped so exact hits stay finite.
fn spectrum_value<T: Real>(res: T) -> T {
    T::one() / res.max(T::eps() * T::eps())
}

fn signal_subspace<T: Real>(lifted: &CMatrix<T>, r: usize) -> Result<CMatrix<T>> {
    let dec = svd(lifted)?;
    let rank = dec.rank(T::lit(RANK_TOL));
    if rank < r {
        return Err(MvhlError::RankDeficient { rank, requested: r });
    }
    Ok(dec.v_leading(r))
}

/// Minimise `f` on `[lo, hi]` by golden-section search.
fn golden_min<T: Real>(mut lo: T, mut hi: T, f: impl Fn(T) -> T) -> T {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..GOLDEN_ITERS {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// 1D MUSIC estimator holding the signal subspace of `H(X)`.
#[derive(Debug, Clone)]
pub struct Music<T: Real> {
    v_r: CMatrix<T>,
}

impl<T: Real> Music<T> {
    pub fn new(x: &CMatrix<T>, shape: &LiftShape, r: usize) -> Result<Self> {
        let max_order = shape.n1().min(shape.n2()).saturating_sub(1);
        if r == 0 || r > max_order {
            return Err(MvhlError::InvalidArgument(format!(
                "model order {r} must lie in 1..={max_order} for pencil {}x{}",
                shape.n1(),
                shape.n2()
            )));
        }
        let lifted = shape.lift(x)?;
        Ok(Self { v_r: signal_subspace(&lifted, r)? })
    }

    pub fn order(&self) -> usize {
        self.v_r.ncols()
    }

    /// `v(tau)`, unit norm.
    pub fn probe(&self, tau: T) -> CVector<T> {
        let n2 = self.v_r.nrows();
        steering_vector(tau, n2).map(|z| z.conj()).unscale(T::from_usize_exact(n2).sqrt())
    }

    pub fn residual(&self, tau: T) -> T {
        residual_sq(&self.v_r, &self.probe(tau))
    }

    pub fn value(&self, tau: T) -> T {
        spectrum_value(self.residual(tau))
    }

    pub fn pseudospectrum(&self, grid_size: usize) -> Result<Pseudospectrum<T>> {
        if grid_size < 4 * self.order() {
            return Err(MvhlError::InvalidArgument(format!(
                "grid size {grid_size} is below 4r = {}",
                4 * self.order()
            )));
        }
        let grid = uniform_grid(grid_size);
        let values = grid.iter().map(|&t| self.value(t)).collect();
        Ok(Pseudospectrum { grid, values })
    }

    /// Golden-section refinement of a grid peak within one cell either side.
    pub fn refine(&self, tau: T, cell: T) -> T {
        wrap_unit(golden_min(tau - cell, tau + cell, |t| self.residual(t)))
    }

    /// Grid search, peak picking and refinement.
    pub fn estimate(&self, grid_size: usize) -> Result<EstimatedSources<T>> {
        let spec = self.pseudospectrum(grid_size)?;
        let coarse = peak_pick(&spec, self.order())?;
        let cell = T::one() / T::from_usize_exact(grid_size);
        let mut refined: Vec<(T, T)> = coarse
            .taus
            .iter()
            .map(|&t| {
                let t = self.refine(t, cell);
                (t, self.value(t))
            })
            .collect();
        refined.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        Ok(EstimatedSources {
            taus: refined.iter().map(|p| p.0).collect(),
            peak_values: refined.iter().map(|p| p.1).collect(),
        })
    }
}

/// Pseudospectrum of `H(X)` on the uniform grid of `grid_size` points.
pub fn smoothing_music<T: Real>(x: &CMatrix<T>, shape: &LiftShape, r: usize, grid_size: usize) -> Result<Pseudospectrum<T>> {
    Music::new(x, shape, r)?.pseudospectrum(grid_size)
}

/// The `r` largest strict cyclic local maxima, sorted by location.
pub fn peak_pick<T: Real>(spec: &Pseudospectrum<T>, r: usize) -> Result<EstimatedSources<T>> {
    let v = &spec.values;
    if v.len() != spec.grid.len() {
        return Err(shape_err("pseudospectrum values", spec.grid.len(), v.len()));
    }
    let len = v.len();
    let mut peaks: Vec<usize> = (0..len)
        .filter(|&i| len >= 2 && v[i] > v[(i + len - 1) % len] && v[i] > v[(i + 1) % len])
        .collect();
    if peaks.len() < r {
        return Err(MvhlError::TooFewPeaks { found: peaks.len(), requested: r });
    }
    peaks.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    peaks.truncate(r);
    peaks.sort_unstable();
    Ok(EstimatedSources {
        taus: peaks.iter().map(|&i| spec.grid[i]).collect(),
        peak_values: peaks.iter().map(|&i| v[i]).collect(),
    })
}

/// 2D MUSIC estimator on the two-level lift.
#[derive(Debug, Clone)]
pub struct Music2D<T: Real> {
    v_r: CMatrix<T>,
    n2: usize,
    p2: usize,
}

impl<T: Real> Music2D<T> {
    pub fn new(x: &CMatrix<T>, shape: &LiftShape2D, r: usize) -> Result<Self> {
        let rows = shape.n1() * shape.p1() * shape.s();
        let cols = shape.n2() * shape.p2();
        let max_order = rows.min(cols).saturating_sub(1);
        if r == 0 || r > max_order {
            return Err(MvhlError::InvalidArgument(format!(
                "model order {r} must lie in 1..={max_order} for the two-level lift"
            )));
        }
        let lifted = shape.lift(x)?;
        Ok(Self {
            v_r: signal_subspace(&lifted, r)?,
            n2: shape.n2(),
            p2: shape.p2(),
        })
    }

    pub fn order(&self) -> usize {
        self.v_r.ncols()
    }

    pub fn probe(&self, tau: T, nu: T) -> CVector<T> {
        let norm = T::from_usize_exact(self.n2 * self.p2).sqrt();
        steering_vector_2d(tau, nu, self.n2, self.p2).map(|z| z.conj()).unscale(norm)
    }

    pub fn residual(&self, tau: T, nu: T) -> T {
        residual_sq(&self.v_r, &self.probe(tau, nu))
    }

    pub fn value(&self, tau: T, nu: T) -> T {
        spectrum_value(self.residual(tau, nu))
    }

    pub fn pseudospectrum(&self, g_tau: usize, g_nu: usize) -> Result<Pseudospectrum2D<T>> {
        if g_tau * g_nu < 4 * self.order() {
            return Err(MvhlError::InvalidArgument(format!(
                "grid {g_tau}x{g_nu} has fewer than 4r = {} points",
                4 * self.order()
            )));
        }
        let taus: Vec<T> = uniform_grid(g_tau);
        let nus: Vec<T> = uniform_grid(g_nu);
        let mut values = Vec::with_capacity(g_tau * g_nu);
        for &t in &taus {
            for &v in &nus {
                values.push(self.value(t, v));
            }
        }
        Ok(Pseudospectrum2D { taus, nus, values })
    }

    /// Alternating golden-section refinement within one cell of a grid peak.
    pub fn refine(&self, point: (T, T), cell: (T, T)) -> (T, T) {
        let (mut t, mut v) = point;
        for _ in 0..REFINE_ROUNDS_2D {
            t = golden_min(t - cell.0, t + cell.0, |x| self.residual(x, v));
            v = golden_min(v - cell.1, v + cell.1, |y| self.residual(t, y));
        }
        (wrap_unit(t), wrap_unit(v))
    }

    pub fn estimate(&self, g_tau: usize, g_nu: usize) -> Result<EstimatedSources2D<T>> {
        let spec = self.pseudospectrum(g_tau, g_nu)?;
        let coarse = peak_pick_2d(&spec, self.order())?;
        let cell = (T::one() / T::from_usize_exact(g_tau), T::one() / T::from_usize_exact(g_nu));
        let mut refined: Vec<((T, T), T)> = coarse
            .points
            .iter()
            .map(|&p| {
                let q = self.refine(p, cell);
                (q, self.value(q.0, q.1))
            })
            .collect();
        refined.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        Ok(EstimatedSources2D {
            points: refined.iter().map(|p| p.0).collect(),
            peak_values: refined.iter().map(|p| p.1).collect(),
        })
    }
}

/// 2D pseudospectrum of the two-level lift of `X` (`s x N P`, raster columns).
pub fn music_2d<T: Real>(x: &CMatrix<T>, r: usize, shape: &LiftShape2D, grid: (usize, usize)) -> Result<Pseudospectrum2D<T>> {
    Music2D::new(x, shape, r)?.pseudospectrum(grid.0, grid.1)
}

/// The `r` largest points strictly above all eight cyclic neighbours.
pub fn peak_pick_2d<T: Real>(spec: &Pseudospectrum2D<T>, r: usize) -> Result<EstimatedSources2D<T>> {
    let (gt, gv) = (spec.taus.len(), spec.nus.len());
    if spec.values.len() != gt * gv {
        return Err(shape_err("pseudospectrum values", gt * gv, spec.values.len()));
    }
    let mut peaks = Vec::new();
    for it in 0..gt {
        for iv in 0..gv {
            let here = spec.at(it, iv);
            let mut strict = true;
            'nb: for dt in [gt - 1, 0, 1] {
                for dv in [gv - 1, 0, 1] {
                    let (jt, jv) = ((it + dt) % gt, (iv + dv) % gv);
                    if (jt, jv) != (it, iv) && spec.at(jt, jv) >= here {
                        strict = false;
                        break 'nb;
                    }
                }
            }
            if strict {
                peaks.push((it, iv));
            }
        }
    }
    if peaks.len() < r {
        return Err(MvhlError::TooFewPeaks { found: peaks.len(), requested: r });
    }
    peaks.sort_by(|a, b| {
        spec.at(b.0, b.1)
            .partial_cmp(&spec.at(a.0, a.1))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    });
    peaks.truncate(r);
    peaks.sort_unstable();
    Ok(EstimatedSources2D {
        points: peaks.iter().map(|&(it, iv)| (spec.taus[it], spec.nus[iv])).collect(),
        peak_values: peaks.iter().map(|&(it, iv)| spec.at(it, iv)).collect(),
    })
}

/// Minimum-cost perfect assignment of rows to columns of a square matrix
/// (Hungarian method with potentials). Returns `col_of_row`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials and matching; index 0 is the virtual column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    col_of_row
}

fn match_by<T: Real>(n_est: usize, n_truth: usize, tol: T, dist: impl Fn(usize, usize) -> T) -> Result<MatchReport<T>> {
    if n_est != n_truth {
        return Err(shape_err("estimated sources", n_truth, n_est));
    }
    let cost: Vec<Vec<f64>> = (0..n_truth)
        .map(|i| (0..n_est).map(|j| dist(i, j).as_f64()).collect())
        .collect();
    let assignment = hungarian(&cost);
    let errors: Vec<T> = assignment.iter().enumerate().map(|(i, &j)| dist(i, j)).collect();
    let max_error = errors.iter().copied().fold(T::zero(), |a, b| a.max(b));
    Ok(MatchReport {
        assignment,
        errors,
        max_error,
        matched: max_error <= tol,
    })
}

/// Pair estimates with true locations under the wrap-around distance.
pub fn match_sources<T: Real>(est: &[T], truth: &[T], tol: T) -> Result<MatchReport<T>> {
    match_by(est.len(), truth.len(), tol, |i, j| wrap_distance(est[j], truth[i]))
}

/// 2D matching; the distance is the larger of the two wrap-around errors.
pub fn match_sources_2d<T: Real>(est: &[(T, T)], truth: &[(T, T)], tol: T) -> Result<MatchReport<T>> {
    match_by(est.len(), truth.len(), tol, |i, j| {
        wrap_distance(est[j].0, truth[i].0).max(wrap_distance(est[j].1, truth[i].1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{gen_sources, gen_sources_2d, synthesize_target, synthesize_target_2d, ChannelSources, SourceEnsemble};
    use crate::rng::{complex_gaussian_vector, stream_rng};
    use num_complex::Complex64;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn single(taus: &[f64], s: usize, n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = stream_rng(seed, 0);
        let coeff: CVector<f64> = complex_gaussian_vector(s, &mut rng);
        let src = SourceEnsemble {
            channels: vec![ChannelSources {
                taus: taus.to_vec(),
                amps: taus.iter().map(|_| Complex64::new(1.5, 0.5)).collect(),
                coeff: coeff.normalize(),
            }],
        };
        synthesize_target(&src, n).remove(0)
    }

    fn argmax(v: &[f64]) -> usize {
        (0..v.len()).max_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap()).unwrap()
    }

    #[test]
    fn single_source_argmax() {
        let x = single(&[0.3], 2, 32, 1);
        let shape = LiftShape::balanced(2, 32).unwrap();
        let spec = smoothing_music(&x, &shape, 1, 1024).unwrap();
        let tau = spec.grid[argmax(&spec.values)];
        assert!(wrap_distance(tau, 0.3) <= 1.0 / 1024.0);
        let m = Music::new(&x, &shape, 1).unwrap();
        assert!(m.value(0.3) > 1e6);
        assert!(m.value(0.3 + 2.0 / 1024.0) < 1e6);
        let est = peak_pick(&spec, 1).unwrap();
        assert_eq!(est.taus, vec![tau]);
    }

    #[test]
    fn zero_location_peak_at_origin() {
        let x = single(&[0.0], 1, 16, 2);
        let shape = LiftShape::balanced(1, 16).unwrap();
        let spec = smoothing_music(&x, &shape, 1, 256).unwrap();
        assert_eq!(argmax(&spec.values), 0);
        assert!(spec.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        let est = Music::new(&x, &shape, 1).unwrap().estimate(256).unwrap();
        assert!(wrap_distance(est.taus[0], 0.0) < 1e-6);
    }

    #[test]
    fn two_sources_two_peaks() {
        let x = single(&[0.2, 0.7], 2, 32, 3);
        let shape = LiftShape::balanced(2, 32).unwrap();
        let spec = smoothing_music(&x, &shape, 2, 1024).unwrap();
        let est = peak_pick(&spec, 2).unwrap();
        assert!(wrap_distance(est.taus[0], 0.2) <= 1.0 / 1024.0);
        assert!(wrap_distance(est.taus[1], 0.7) <= 1.0 / 1024.0);
    }

    #[test]
    fn peak_pick_cyclic_maxima() {
        let spec = Pseudospectrum {
            grid: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            values: vec![1.0, 5.0, 1.0, 9.0, 1.0],
        };
        let est = peak_pick(&spec, 2).unwrap();
        assert_eq!(est.taus, vec![0.2, 0.6]);
        assert_eq!(est.peak_values, vec![5.0, 9.0]);
        // The wrap neighbour of index 0 is index 4.
        let spec = Pseudospectrum { grid: vec![0.0, 0.25, 0.5, 0.75], values: vec![3.0, 1.0, 2.0, 2.5] };
        assert_eq!(peak_pick(&spec, 1).unwrap().taus, vec![0.0]);
    }

    #[test]
    fn peak_pick_errors() {
        let flat = Pseudospectrum { grid: uniform_grid(8), values: vec![2.0; 8] };
        assert_eq!(peak_pick(&flat, 1), Err(MvhlError::TooFewPeaks { found: 0, requested: 1 }));
        let one = Pseudospectrum { grid: uniform_grid(4), values: vec![0.0, 1.0, 0.0, 0.0] };
        assert!(matches!(peak_pick(&one, 2), Err(MvhlError::TooFewPeaks { found: 1, .. })));
    }

    #[test]
    fn preconditions() {
        let x = single(&[0.3], 1, 8, 4);
        let shape = LiftShape::balanced(1, 8).unwrap();
        // n1 = 5, n2 = 4: orders above 3 are rejected.
        assert!(matches!(smoothing_music(&x, &shape, 4, 64), Err(MvhlError::InvalidArgument(_))));
        assert!(matches!(smoothing_music(&x, &shape, 1, 3), Err(MvhlError::InvalidArgument(_))));
        assert_eq!(
            smoothing_music(&x, &shape, 2, 64).unwrap_err(),
            MvhlError::RankDeficient { rank: 1, requested: 2 }
        );
    }

    #[test]
    fn subspace_orthogonal_to_true_steering() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..10 {
            let src = gen_sources::<f64, _>(1, 3, 2, 2.0 / 40.0, &mut rng).unwrap();
            let x = synthesize_target(&src, 40).remove(0);
            let m = Music::new(&x, &LiftShape::balanced(2, 40).unwrap(), 3).unwrap();
            for &t in &src.channels[0].taus {
                assert!(m.residual(t).sqrt() <= 1e-6);
            }
        }
    }

    #[test]
    fn exact_data_consistency_50_instances() {
        let mut rng = stream_rng(6, 0);
        let grid = 1024;
        for _ in 0..50 {
            let n = rng.random_range(16..=48);
            let s = rng.random_range(1..=3);
            let r = rng.random_range(1..=3);
            let src = gen_sources::<f64, _>(1, r, s, 2.0 / n as f64, &mut rng).unwrap();
            let x = synthesize_target(&src, n).remove(0);
            let spec = smoothing_music(&x, &LiftShape::balanced(s, n).unwrap(), r, grid).unwrap();
            let est = peak_pick(&spec, r).unwrap();
            let rep = match_sources(&est.taus, &src.channels[0].taus, 1.0 / grid as f64).unwrap();
            assert!(rep.matched, "n={n} s={s} r={r}: {:?}", rep.errors);
        }
    }

    #[test]
    fn refinement_beats_grid() {
        let x = single(&[0.123456], 2, 32, 7);
        let m = Music::new(&x, &LiftShape::balanced(2, 32).unwrap(), 1).unwrap();
        let est = m.estimate(256).unwrap();
        assert!(wrap_distance(est.taus[0], 0.123456) < 1e-7);
    }

    #[test]
    fn perturbation_sanity() {
        let mut rng = stream_rng(8, 0);
        let x = single(&[0.21, 0.64], 2, 48, 9);
        let noise: Vec<Complex64> = (0..x.len()).map(|_| crate::rng::complex_gaussian(&mut rng)).collect();
        let noise = CMatrix::from_vec(x.nrows(), x.ncols(), noise);
        let xp = &x + noise.scale(1e-3 * x.norm() / noise.norm());
        let m = Music::new(&xp, &LiftShape::balanced(2, 48).unwrap(), 2).unwrap();
        let est = m.estimate(DEFAULT_GRID).unwrap();
        let rep = match_sources(&est.taus, &[0.21, 0.64], 10.0 / DEFAULT_GRID as f64).unwrap();
        assert!(rep.matched, "{:?}", rep.errors);
    }

    #[test]
    fn match_trivial_cases() {
        let rep = match_sources(&[0.1, 0.5], &[0.1, 0.5], 1e-12).unwrap();
        assert_eq!(rep.max_error, 0.0);
        assert!(rep.matched);
        let rep = match_sources(&[0.8f64], &[0.3], 0.1).unwrap();
        assert!((rep.max_error - 0.5).abs() < 1e-15);
        assert!(!rep.matched);
        let rep = match_sources(&[0.999f64], &[0.001], 0.01).unwrap();
        assert!((rep.errors[0] - 0.002).abs() < 1e-12);
        assert!(matches!(match_sources(&[0.1], &[0.1, 0.2], 0.1), Err(MvhlError::ShapeMismatch { .. })));
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn hungarian_matches_exhaustive_search() {
        let mut rng = stream_rng(10, 0);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
            let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
            let best = permutations(n).iter().map(|p| total(p)).fold(f64::INFINITY, f64::min);
            let got = hungarian(&cost);
            let mut seen = got.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
            assert!((total(&got) - best).abs() < 1e-12);
        }
    }

    #[test]
    fn match_recovers_shuffled_truth() {
        let mut rng = stream_rng(11, 0);
        let truth: Vec<f64> = (0..7).map(|_| rng.random()).collect();
        let mut order: Vec<usize> = (0..7).collect();
        order.shuffle(&mut rng);
        let est: Vec<f64> = order.iter().map(|&i| truth[i]).collect();
        let rep = match_sources(&est, &truth, 1e-15).unwrap();
        assert!(rep.matched);
        for (i, &j) in rep.assignment.iter().enumerate() {
            assert_eq!(order[j], i);
        }
    }

    fn target_2d(points: &[(f64, f64)], s: usize, big_n: usize, p: usize) -> CMatrix<f64> {
        let mut rng = stream_rng(12, 0);
        let coeff: CVector<f64> = complex_gaussian_vector(s, &mut rng);
        let ch = crate::measurement::ChannelSources2D {
            delays: points.iter().map(|q| q.0).collect(),
            dopplers: points.iter().map(|q| q.1).collect(),
            amps: points.iter().map(|_| Complex64::new(1.2, -0.4)).collect(),
            coeff: coeff.normalize(),
        };
        synthesize_target_2d(&[ch], big_n, p).remove(0)
    }

    #[test]
    fn music_2d_single_target() {
        let shape = LiftShape2D::balanced(1, 10, 10).unwrap();
        let x = target_2d(&[(0.3, 0.6)], 1, 10, 10);
        let spec = music_2d(&x, 1, &shape, (128, 128)).unwrap();
        let est = peak_pick_2d(&spec, 1).unwrap();
        let rep = match_sources_2d(&est.points, &[(0.3, 0.6)], 1.0 / 128.0).unwrap();
        assert!(rep.matched, "{:?}", est.points);
    }

    #[test]
    fn music_2d_origin() {
        let shape = LiftShape2D::balanced(2, 10, 10).unwrap();
        let x = target_2d(&[(0.0, 0.0)], 2, 10, 10);
        let est = Music2D::new(&x, &shape, 1).unwrap().estimate(64, 64).unwrap();
        assert!(est.points[0].0.min(1.0 - est.points[0].0) < 1e-6);
        assert!(est.points[0].1.min(1.0 - est.points[0].1) < 1e-6);
    }

    #[test]
    fn music_2d_two_targets_per_channel() {
        let mut rng = stream_rng(13, 0);
        let channels = gen_sources_2d::<f64, _>(&[2, 2], 2, &mut rng).unwrap();
        let xs = synthesize_target_2d(&channels, 10, 10);
        let shape = LiftShape2D::balanced(2, 10, 10).unwrap();
        for (ch, x) in channels.iter().zip(&xs) {
            let truth: Vec<(f64, f64)> = ch.delays.iter().copied().zip(ch.dopplers.iter().copied()).collect();
            let est = Music2D::new(x, &shape, 2).unwrap().estimate(256, 256).unwrap();
            assert_eq!(est.points.len(), 2);
            let rep = match_sources_2d(&est.points, &truth, 2.0 / 256.0).unwrap();
            assert!(rep.matched, "{:?} vs {:?}", est.points, truth);
        }
    }

    #[test]
    fn peak_pick_2d_neighbourhood() {
        let mut spec = Pseudospectrum2D { taus: uniform_grid(4), nus: uniform_grid(4), values: vec![0.0; 16] };
        spec.values[5] = 3.0; // (1,1)
        spec.values[15] = 2.0; // (3,3): diagonal wrap neighbour of (0,0)
        spec.values[0] = 1.0;
        let est = peak_pick_2d(&spec, 2).unwrap();
        assert_eq!(est.points, vec![(0.25, 0.25), (0.75, 0.75)]);
        assert!(peak_pick_2d(&spec, 3).is_err());
    }

    #[test]
    fn single_precision_music() {
        let x = single(&[0.4], 1, 24, 14).map(|z| num_complex::Complex::new(z.re as f32, z.im as f32));
        let spec = smoothing_music(&x, &LiftShape::balanced(1, 24).unwrap(), 1, 512).unwrap();
        let est = peak_pick(&spec, 1).unwrap();
        assert!(wrap_distance(est.taus[0], 0.4f32) <= 1.0 / 512.0);
    }
}
