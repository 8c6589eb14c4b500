//! Numerical diagnostics for the dual-certificate conditions.
//!
//! Everything here measures quantities; nothing asserts the inequalities,
//! which only hold with high probability in the right regime. Lifted-space
//! operators are composed from `P_T`, the isometry `G = H D^-1` and the
//! measurement maps, and their norms are estimated by power iteration.

use rand::seq::SliceRandom;

use crate::error::{shape_err, MvhlError, Result};
use crate::lifting::Lift;
use crate::linalg::{all_finite, spectral_norm, svd, RANK_TOL};
use crate::measurement::Subspace;
use crate::rng::{complex_gaussian_matrix, stream_rng};
use crate::scalar::{CMatrix, CVector, Real};

/// Tangent space at `U Sigma V^H` of the rank-`r` matrices.
#[derive(Debug, Clone)]
pub struct TangentSpace<T: Real> {
    u: CMatrix<T>,
    v: CMatrix<T>,
}

impl<T: Real> TangentSpace<T> {
    /// From orthonormal bases; checks `U^H U = V^H V = I` to `tol`.
    pub fn new(u: CMatrix<T>, v: CMatrix<T>, tol: T) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(shape_err("tangent bases", u.ncols(), v.ncols()));
        }
        let r = u.ncols();
        for (name, m) in [("U", &u), ("V", &v)] {
            let gap = (m.ad_mul(m) - CMatrix::identity(r, r)).norm();
            if gap > tol {
                return Err(MvhlError::InvalidArgument(format!("{name} is not orthonormal (gap {})", gap.as_f64())));
            }
        }
        Ok(Self { u, v })
    }

    /// Leading `r` singular subspaces of a lifted matrix.
    pub fn from_lifted(m: &CMatrix<T>, r: usize) -> Result<Self> {
        let dec = svd(m)?;
        let rank = dec.rank(T::lit(RANK_TOL));
        if rank < r {
            return Err(MvhlError::RankDeficient { rank, requested: r });
        }
        Ok(Self { u: dec.u_leading(r), v: dec.v_leading(r) })
    }

    pub fn u(&self) -> &CMatrix<T> {
        &self.u
    }

    pub fn v(&self) -> &CMatrix<T> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `U V^H`.
    pub fn sign_matrix(&self) -> CMatrix<T> {
        &self.u * self.v.adjoint()
    }

    fn check(&self, m: &CMatrix<T>) -> Result<()> {
        let dims = (self.u.nrows(), self.v.nrows());
        if m.shape() != dims {
            return Err(shape_err(
                "lifted matrix",
                format!("{}x{}", dims.0, dims.1),
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        Ok(())
    }

    /// `P_T(M) = U U^H M + M V V^H - U U^H M V V^H`.
    pub fn project(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.check(m)?;
        let uh_m = self.u.ad_mul(m);
        let m_v = m * &self.v;
        let core = &uh_m * &self.v;
        Ok(&self.u * uh_m + (m_v - &self.u * core) * self.v.adjoint())
    }

    /// `P_T^perp(M) = (I - U U^H) M (I - V V^H)`.
    pub fn project_perp(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        Ok(m - self.project(m)?)
    }
}

/// Smallest `mu_1` with `max_l ||U_l||_F^2 <= mu_1 r / n` and
/// `max_j ||e_j^T V||^2 <= mu_1 r / n`, `U_l` the `l`-th block of `s` rows.
pub fn incoherence_mu1<T: Real, L: Lift>(x: &CMatrix<T>, lift: &L, r: usize) -> Result<T> {
    let tangent = TangentSpace::from_lifted(&lift.lift(x)?, r)?;
    Ok(tangent_mu1(&tangent, lift.s(), lift.n()))
}

fn tangent_mu1<T: Real>(t: &TangentSpace<T>, s: usize, n: usize) -> T {
    let blocks = t.u.nrows() / s;
    let u_max = (0..blocks)
        .map(|l| t.u.rows(l * s, s).norm_squared())
        .fold(T::zero(), |a, b| a.max(b));
    let v_max = t.v.row_iter().map(|row| row.norm_squared()).fold(T::zero(), |a, b| a.max(b));
    T::from_usize_exact(n) * u_max.max(v_max) / T::from_usize_exact(t.rank())
}

/// `||M||_{G,F} = ||G*(M)||_F`.
pub fn g_fro_norm<T: Real, L: Lift>(lift: &L, m: &CMatrix<T>) -> Result<T> {
    Ok(lift.g_adjoint(m)?.norm())
}

/// `||M||_{G,inf}`: largest column 2-norm of `G*(M)`.
pub fn g_inf_norm<T: Real, L: Lift>(lift: &L, m: &CMatrix<T>) -> Result<T> {
    Ok(lift
        .g_adjoint(m)?
        .column_iter()
        .map(|c| c.norm())
        .fold(T::zero(), |a, b| a.max(b)))
}

/// A linear map between matrix spaces together with its adjoint.
pub trait LinearMap<T: Real> {
    /// Shape of the input matrices.
    fn domain(&self) -> (usize, usize);
    fn apply(&self, m: &CMatrix<T>) -> Result<CMatrix<T>>;
    fn apply_adjoint(&self, m: &CMatrix<T>) -> Result<CMatrix<T>>;
}

/// A map given by a forward and an adjoint closure.
pub struct FnMap<F, G> {
    domain: (usize, usize),
    forward: F,
    adjoint: G,
}

impl<F, G> FnMap<F, G> {
    pub fn new(domain: (usize, usize), forward: F, adjoint: G) -> Self {
        Self { domain, forward, adjoint }
    }
}

impl<T: Real, F, G> LinearMap<T> for FnMap<F, G>
where
    F: Fn(&CMatrix<T>) -> Result<CMatrix<T>>,
    G: Fn(&CMatrix<T>) -> Result<CMatrix<T>>,
{
    fn domain(&self) -> (usize, usize) {
        self.domain
    }

    fn apply(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        (self.forward)(m)
    }

    fn apply_adjoint(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        (self.adjoint)(m)
    }
}

/// A self-adjoint map given by one closure.
pub struct SelfAdjointMap<F> {
    domain: (usize, usize),
    f: F,
}

impl<F> SelfAdjointMap<F> {
    pub fn new(domain: (usize, usize), f: F) -> Self {
        Self { domain, f }
    }
}

impl<T: Real, F> LinearMap<T> for SelfAdjointMap<F>
where
    F: Fn(&CMatrix<T>) -> Result<CMatrix<T>>,
{
    fn domain(&self) -> (usize, usize) {
        self.domain
    }

    fn apply(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        (self.f)(m)
    }

    fn apply_adjoint(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        (self.f)(m)
    }
}

/// Power-iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub max_iter: usize,
    /// Stop once the relative Rayleigh-quotient change drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-6, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate<T: Real> {
    pub norm: T,
    /// Final Rayleigh quotient of `L* L`.
    pub rayleigh: T,
    pub iterations: usize,
}

/// Spectral norm of `L` by power iteration on `L* L` from a seeded start.
pub fn op_norm<T: Real, M: LinearMap<T> + ?Sized>(map: &M, opts: &PowerOptions) -> Result<NormEstimate<T>> {
    let (rows, cols) = map.domain();
    let mut rng = stream_rng(opts.seed, 0);
    let mut x: CMatrix<T> = complex_gaussian_matrix(rows, cols, &mut rng);
    let norm0 = x.norm();
    x.unscale_mut(norm0);
    let mut prev = T::zero();
    let mut rayleigh = T::zero();
    let mut iterations = 0;
    for it in 1..=opts.max_iter.max(1) {
        iterations = it;
        let lx = map.apply(&x)?;
        let y = map.apply_adjoint(&lx)?;
        if !all_finite(&y) {
            return Err(MvhlError::NonFinite { iteration: it });
        }
        // x has unit norm, so <x, L*L x> = ||L x||^2.
        rayleigh = lx.norm_squared();
        let ny = y.norm();
        if ny <= T::zero() {
            rayleigh = T::zero();
            break;
        }
        x = y.unscale(ny);
        if it > 1 && (rayleigh - prev).abs() <= T::lit(opts.tol) * rayleigh {
            break;
        }
        prev = rayleigh;
    }
    Ok(NormEstimate { norm: rayleigh.sqrt(), rayleigh, iterations })
}

/// A measured condition value and whether it meets its threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionValue<T: Real> {
    pub value: T,
    pub threshold: T,
    pub satisfied: bool,
}

impl<T: Real> ConditionValue<T> {
    fn new(value: T, threshold: T) -> Self {
        Self { value, threshold, satisfied: value <= threshold }
    }
}

/// `G A_i* A_j G*` on lifted matrices.
fn measured_gram<T: Real, L: Lift>(lift: &L, sub_i: &Subspace<T>, sub_j: &Subspace<T>, m: &CMatrix<T>) -> Result<CMatrix<T>> {
    let lambda = sub_j.apply(&lift.g_adjoint(m)?)?;
    lift.g_apply(&sub_i.apply_adjoint(&lambda)?)
}

/// `|| P_T G A*A G* P_T - P_T G G* P_T ||`, to be compared with 1/4.
pub fn check_concentration<T: Real, L: Lift>(
    tangent: &TangentSpace<T>,
    subspace: &Subspace<T>,
    lift: &L,
    opts: &PowerOptions,
) -> Result<ConditionValue<T>> {
    let map = SelfAdjointMap::new(lift.lifted_dims(), |m: &CMatrix<T>| {
        let pm = tangent.project(m)?;
        let diff = measured_gram(lift, subspace, subspace, &pm)? - lift.range_project(&pm)?;
        tangent.project(&diff)
    });
    Ok(ConditionValue::new(op_norm(&map, opts)?.norm, T::lit(0.25)))
}

/// `|| P_{T_i} G A_i* A_j G* P_{T_j} ||`, to be compared with 1/(8K).
pub fn check_cross_incoherence<T: Real, L: Lift>(
    (t_i, sub_i): (&TangentSpace<T>, &Subspace<T>),
    (t_j, sub_j): (&TangentSpace<T>, &Subspace<T>),
    lift: &L,
    channels: usize,
    opts: &PowerOptions,
) -> Result<ConditionValue<T>> {
    let map = FnMap::new(
        lift.lifted_dims(),
        |m: &CMatrix<T>| t_i.project(&measured_gram(lift, sub_i, sub_j, &t_j.project(m)?)?),
        |m: &CMatrix<T>| t_j.project(&measured_gram(lift, sub_j, sub_i, &t_i.project(m)?)?),
    );
    let threshold = T::one() / T::from_usize_exact(8 * channels.max(1));
    Ok(ConditionValue::new(op_norm(&map, opts)?.norm, threshold))
}

/// How the measurement indices are split among golfing steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    /// Equal contiguous blocks; the last absorbs the remainder.
    Contiguous,
    /// A seeded random permutation cut into the same block sizes.
    Random(u64),
}

/// Disjoint index sets covering `0..n`.
pub fn partition_indices(n: usize, t0: usize, kind: Partition) -> Result<Vec<Vec<usize>>> {
    if t0 == 0 {
        return Ok(Vec::new());
    }
    if t0 > n {
        return Err(MvhlError::InvalidArgument(format!("{t0} partitions of {n} measurements leave empty blocks")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if let Partition::Random(seed) = kind {
        order.shuffle(&mut stream_rng(seed, 1));
    }
    let base = n / t0;
    Ok((0..t0)
        .map(|t| {
            let end = if t + 1 == t0 { n } else { (t + 1) * base };
            let mut block = order[t * base..end].to_vec();
            block.sort_unstable();
            block
        })
        .collect())
}

/// `ceil(log2(48 K r s mu_0))`, at least 1.
pub fn default_golfing_steps(k: usize, r: usize, s: usize, mu0: f64) -> usize {
    let arg = 48.0 * (k * r * s) as f64 * mu0;
    arg.log2().ceil().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GolfingOptions {
    /// Number of steps; defaults to [`default_golfing_steps`].
    pub t0: Option<usize>,
    pub partition: Partition,
}

impl Default for GolfingOptions {
    fn default() -> Self {
        Self { t0: None, partition: Partition::Contiguous }
    }
}

/// Output of the golfing construction.
#[derive(Debug, Clone)]
pub struct GolfingCertificate<T: Real> {
    /// `Y_k` per channel.
    pub certificates: Vec<CMatrix<T>>,
    /// Accumulated dual vector with `G*(Y_k) = A_k*(lambda)`.
    pub lambda: CVector<T>,
    pub t0: usize,
    pub mu0: T,
    /// `||U_k V_k^H - P_{T_k}(Y_{k,t})||_F` for `t = 0..=t0`, per channel.
    pub cond_f_history: Vec<Vec<T>>,
    /// Final value of the above, against `1 / (48 K s mu_0)`.
    pub cond_f: Vec<ConditionValue<T>>,
    /// `||P_{T_k}^perp(Y_k)||` against 1/2.
    pub cond_op: Vec<ConditionValue<T>>,
    /// Largest Frobenius gap between the recursive and the recomputed residual.
    pub recursion_gap: T,
    /// `||(G*(Y_1), ..., G*(Y_K)) - A*(lambda)||_F`.
    pub range_residual: T,
}

/// Golfing scheme: builds approximate dual certificates `Y_k` from disjoint
/// measurement batches, tracking the residual `E_{k,t}` both through its
/// recursion and recomputed from `Y_{k,t}`.
pub fn golfing_certificate<T: Real, L: Lift>(
    tangents: &[TangentSpace<T>],
    subspaces: &[Subspace<T>],
    lift: &L,
    opts: &GolfingOptions,
) -> Result<GolfingCertificate<T>> {
    let k = tangents.len();
    if k == 0 || subspaces.len() != k {
        return Err(shape_err("subspaces", k, subspaces.len()));
    }
    let n = lift.n();
    let s = lift.s();
    let r = tangents[0].rank();
    let mu0 = subspaces.iter().map(|b| b.empirical_mu0()).fold(T::zero(), |a, b| a.max(b));
    let t0 = opts.t0.unwrap_or_else(|| default_golfing_steps(k, r, s, mu0.as_f64()));
    let parts = partition_indices(n, t0, opts.partition)?;

    let targets: Vec<CMatrix<T>> = tangents.iter().map(|t| t.sign_matrix()).collect();
    let (rows, cols) = lift.lifted_dims();
    let mut ys = vec![CMatrix::<T>::zeros(rows, cols); k];
    let mut errs = targets.clone();
    let mut history: Vec<Vec<T>> = errs.iter().map(|e| vec![e.norm()]).collect();
    let mut lambda_hat = CVector::<T>::zeros(n);
    let mut gap = T::zero();

    for part in &parts {
        let scale = T::from_usize_exact(n) / T::from_usize_exact(part.len());
        let mut mask = CVector::<T>::zeros(n);
        for &j in part {
            mask[j] = crate::scalar::real(T::one());
        }
        // lambda^{t-1} = sum_k A_{k,t} G* E_{k,t-1}
        let mut lambda = CVector::<T>::zeros(n);
        for (sub, e) in subspaces.iter().zip(&errs) {
            lambda += sub.apply(&lift.g_adjoint(e)?)?;
        }
        lambda.component_mul_assign(&mask);
        lambda_hat.axpy(crate::scalar::real(scale), &lambda, crate::scalar::real(T::one()));

        let mut next_errs = Vec::with_capacity(k);
        for c in 0..k {
            let step = lift.g_apply(&subspaces[c].apply_adjoint(&lambda)?)?.scale(scale);
            let correction = &errs[c] - lift.range_project(&errs[c])?;
            ys[c] += &step + &correction;
            // E_t = E_{t-1} - P_T(step + correction), using E_{t-1} in T.
            let recursive = &errs[c] - tangents[c].project(&(step + correction))?;
            let direct = &targets[c] - tangents[c].project(&ys[c])?;
            gap = gap.max((&recursive - &direct).norm());
            history[c].push(direct.norm());
            next_errs.push(recursive);
        }
        errs = next_errs;
    }
    let mut range_sq = T::zero();
    for (sub, y) in subspaces.iter().zip(&ys) {
        range_sq += (lift.g_adjoint(y)? - sub.apply_adjoint(&lambda_hat)?).norm_squared();
    }

    let f_threshold = T::one() / (T::lit(48.0) * T::from_usize_exact(k * s) * mu0);
    let cond_f = history
        .iter()
        .map(|h| ConditionValue::new(*h.last().expect("history starts at t = 0"), f_threshold))
        .collect();
    let cond_op = tangents
        .iter()
        .zip(&ys)
        .map(|(t, y)| Ok(ConditionValue::new(spectral_norm(&t.project_perp(y)?)?, T::lit(0.5))))
        .collect::<Result<Vec<_>>>()?;
    Ok(GolfingCertificate {
        certificates: ys,
        lambda: lambda_hat,
        t0,
        mu0,
        cond_f_history: history,
        cond_f,
        cond_op,
        recursion_gap: gap,
        range_residual: range_sq.sqrt(),
    })
}

/// All diagnostics for one instance.
#[derive(Debug, Clone)]
pub struct CertificateReport<T: Real> {
    pub mu0: T,
    pub mu1: Vec<T>,
    pub concentration: Vec<ConditionValue<T>>,
    /// Largest cross-incoherence over ordered pairs `i != j`.
    pub cross_mu: ConditionValue<T>,
    pub golfing: GolfingCertificate<T>,
}

impl<T: Real> CertificateReport<T> {
    pub fn all_finite(&self) -> bool {
        let vals = std::iter::once(self.mu0)
            .chain(self.mu1.iter().copied())
            .chain(self.concentration.iter().map(|c| c.value))
            .chain(std::iter::once(self.cross_mu.value))
            .chain(self.golfing.cond_f.iter().map(|c| c.value))
            .chain(self.golfing.cond_op.iter().map(|c| c.value))
            .chain([self.golfing.recursion_gap, self.golfing.range_residual]);
        vals.into_iter().all(|v| v.is_finite() && v >= T::zero())
    }
}

/// Incoherence, concentration, cross-incoherence and golfing diagnostics for
/// ground-truth data matrices `targets` of model order `r`.
pub fn diagnose<T: Real, L: Lift>(
    targets: &[CMatrix<T>],
    subspaces: &[Subspace<T>],
    lift: &L,
    r: usize,
    golf: &GolfingOptions,
    power: &PowerOptions,
) -> Result<CertificateReport<T>> {
    if targets.len() != subspaces.len() {
        return Err(shape_err("subspaces", targets.len(), subspaces.len()));
    }
    let tangents = targets
        .iter()
        .map(|x| TangentSpace::from_lifted(&lift.lift(x)?, r))
        .collect::<Result<Vec<_>>>()?;
    let mu1 = tangents.iter().map(|t| tangent_mu1(t, lift.s(), lift.n())).collect();
    let concentration = tangents
        .iter()
        .zip(subspaces)
        .map(|(t, b)| check_concentration(t, b, lift, power))
        .collect::<Result<Vec<_>>>()?;
    let k = targets.len();
    let mut cross = ConditionValue::new(T::zero(), T::one() / T::from_usize_exact(8 * k));
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let c = check_cross_incoherence((&tangents[i], &subspaces[i]), (&tangents[j], &subspaces[j]), lift, k, power)?;
                if c.value > cross.value {
                    cross = c;
                }
            }
        }
    }
    let golfing = golfing_certificate(&tangents, subspaces, lift, golf)?;
    Ok(CertificateReport {
        mu0: golfing.mu0,
        mu1,
        concentration,
        cross_mu: cross,
        golfing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::LiftShape;
    use crate::measurement::{gen_sources, gen_subspaces, synthesize_target, ChannelSources, SourceEnsemble, SubspaceModel};
    use crate::rng::complex_gaussian_vector;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    type M = CMatrix<f64>;

    fn random_tangent(rows: usize, cols: usize, r: usize, seed: u64) -> TangentSpace<f64> {
        let mut rng = stream_rng(seed, 0);
        let a: M = complex_gaussian_matrix(rows, r, &mut rng);
        let b: M = complex_gaussian_matrix(cols, r, &mut rng);
        TangentSpace::from_lifted(&(a * b.adjoint()), r).unwrap()
    }

    fn instance(n: usize, k: usize, s: usize, r: usize, seed: u64) -> (Vec<M>, Vec<Subspace<f64>>, LiftShape) {
        let mut rng = stream_rng(seed, 0);
        let src = gen_sources::<f64, _>(k, r, s, 1.0 / n as f64, &mut rng).unwrap();
        let subs = gen_subspaces(k, n, s, SubspaceModel::DftRows, &mut rng).unwrap();
        (synthesize_target(&src, n), subs, LiftShape::balanced(s, n).unwrap())
    }

    fn ones_subspace(n: usize) -> Subspace<f64> {
        Subspace::new(DMatrix::from_element(n, 1, Complex64::new(1.0, 0.0)))
    }

    #[test]
    fn tangent_bases_orthonormal() {
        let t = random_tangent(12, 9, 3, 1);
        let eye = M::identity(3, 3);
        assert!((t.u().ad_mul(t.u()) - &eye).norm() < 1e-12);
        assert!((t.v().ad_mul(t.v()) - &eye).norm() < 1e-12);
        assert!(TangentSpace::new(t.u().scale(2.0), t.v().clone(), 1e-12).is_err());
        assert!(TangentSpace::new(t.u().clone(), t.v().clone(), 1e-12).is_ok());
    }

    #[test]
    fn projection_fixes_tangent_and_kills_complement() {
        let t = random_tangent(12, 9, 2, 2);
        let mut rng = stream_rng(3, 0);
        let a: M = complex_gaussian_matrix(9, 2, &mut rng);
        let inside = t.u() * a.adjoint();
        assert!((t.project(&inside).unwrap() - &inside).norm() < 1e-12 * inside.norm());
        let w: M = complex_gaussian_matrix(12, 9, &mut rng);
        let pu = M::identity(12, 12) - t.u() * t.u().adjoint();
        let pv = M::identity(9, 9) - t.v() * t.v().adjoint();
        let outside = pu * w * pv;
        assert!(t.project(&outside).unwrap().norm() < 1e-12 * outside.norm());
    }

    #[test]
    fn projection_idempotent_self_adjoint_orthogonal() {
        let mut rng = stream_rng(4, 0);
        for seed in 0..20 {
            let t = random_tangent(10, 8, 1 + seed as usize % 3, seed);
            let m: M = complex_gaussian_matrix(10, 8, &mut rng);
            let w: M = complex_gaussian_matrix(10, 8, &mut rng);
            let pm = t.project(&m).unwrap();
            assert!((t.project(&pm).unwrap() - &pm).norm() <= 1e-10 * m.norm());
            let lhs = pm.dotc(&w);
            let rhs = m.dotc(&t.project(&w).unwrap());
            assert!((lhs - rhs).norm() <= 1e-10 * m.norm() * w.norm());
            assert!((&m - &pm).dotc(&pm).norm() <= 1e-10 * m.norm_squared());
        }
        assert!(t_shape_err());
    }

    fn t_shape_err() -> bool {
        random_tangent(4, 3, 1, 9).project(&M::zeros(3, 3)).is_err()
    }

    #[test]
    fn mu1_flat_exponential() {
        for &(n, s) in &[(16usize, 1usize), (17, 1), (20, 3)] {
            let src = SourceEnsemble {
                channels: vec![ChannelSources {
                    taus: vec![0.0],
                    amps: vec![Complex64::new(1.0, 0.0)],
                    coeff: complex_gaussian_vector(s, &mut stream_rng(5, 0)).normalize(),
                }],
            };
            let x = synthesize_target(&src, n).remove(0);
            let shape = LiftShape::balanced(s, n).unwrap();
            let mu1 = incoherence_mu1(&x, &shape, 1).unwrap();
            let expected = n as f64 / shape.n1().min(shape.n2()) as f64;
            assert!((mu1 - expected).abs() < 1e-10, "{mu1} vs {expected}");
        }
    }

    #[test]
    fn mu1_bounds() {
        let src = SourceEnsemble {
            channels: vec![ChannelSources {
                taus: vec![0.1, 0.6],
                amps: vec![Complex64::new(1.5, 0.0), Complex64::new(0.0, 1.8)],
                coeff: complex_gaussian_vector(1, &mut stream_rng(6, 0)).normalize(),
            }],
        };
        let x = synthesize_target(&src, 64).remove(0);
        let mu1 = incoherence_mu1(&x, &LiftShape::balanced(1, 64).unwrap(), 2).unwrap();
        assert!((1.0..=10.0).contains(&mu1), "{mu1}");
        for seed in 0..10 {
            let (xs, _, shape) = instance(32, 1, 2, 2, seed);
            assert!(incoherence_mu1(&xs[0], &shape, 2).unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn op_norm_basic_maps() {
        let opts = PowerOptions::default();
        let id = SelfAdjointMap::new((7, 5), |m: &M| Ok(m.clone()));
        assert!((op_norm(&id, &opts).unwrap().norm - 1.0).abs() < 1e-6);
        let t = random_tangent(7, 5, 2, 7);
        let pt = SelfAdjointMap::new((7, 5), |m: &M| t.project(m));
        assert!((op_norm(&pt, &opts).unwrap().norm - 1.0).abs() < 1e-3);
        let shape = LiftShape::new(2, 9, 4).unwrap();
        let ggs = SelfAdjointMap::new(shape.lifted_dims(), |m: &M| shape.range_project(m));
        assert!((op_norm(&ggs, &opts).unwrap().norm - 1.0).abs() < 1e-3);
        let zero = SelfAdjointMap::new((3, 3), |m: &M| Ok(M::zeros(m.nrows(), m.ncols())));
        assert_eq!(op_norm(&zero, &opts).unwrap().norm, 0.0);
    }

    #[test]
    fn op_norm_matches_dense_spectral_norm_and_scales() {
        let mut rng = stream_rng(8, 0);
        let a: M = complex_gaussian_matrix(6, 4, &mut rng);
        // L(X) = A X, a map from 4x3 to 6x3 with norm ||A||.
        let map = FnMap::new((4, 3), |m: &M| Ok(&a * m), |m: &M| Ok(a.adjoint() * m));
        let opts = PowerOptions { max_iter: 2000, tol: 1e-14, seed: 1 };
        let est = op_norm(&map, &opts).unwrap();
        let exact = spectral_norm(&a).unwrap();
        assert!((est.norm - exact).abs() <= 1e-6 * exact);
        let c = Complex64::new(-1.5, 2.0);
        let scaled = FnMap::new((4, 3), |m: &M| Ok((&a * m) * c), |m: &M| Ok((a.adjoint() * m) * c.conj()));
        let est_c = op_norm(&scaled, &opts).unwrap();
        assert!((est_c.norm - 2.5 * est.norm).abs() <= 1e-3 * est_c.norm);
    }

    #[test]
    fn op_norm_rejects_non_finite() {
        let bad = SelfAdjointMap::new((2, 2), |m: &M| Ok(m.map(|_| Complex64::new(f64::NAN, 0.0))));
        assert!(matches!(op_norm(&bad, &PowerOptions::default()), Err(MvhlError::NonFinite { .. })));
    }

    #[test]
    fn concentration_vanishes_for_unit_scalar_subspace() {
        let n = 24;
        let shape = LiftShape::balanced(1, n).unwrap();
        let t = random_tangent(shape.lifted_dims().0, shape.lifted_dims().1, 1, 9);
        let val = check_concentration(&t, &ones_subspace(n), &shape, &PowerOptions::default()).unwrap();
        assert!(val.value < 1e-12);
        assert!(val.satisfied);
    }

    #[test]
    fn concentration_invariant_to_rotation_of_v() {
        let (xs, subs, shape) = instance(32, 1, 2, 2, 10);
        let t = TangentSpace::from_lifted(&shape.lift(&xs[0]).unwrap(), 2).unwrap();
        let theta = 0.7f64;
        let q = M::from_row_slice(
            2,
            2,
            &[
                Complex64::new(theta.cos(), 0.0),
                Complex64::new(0.0, theta.sin()),
                Complex64::new(0.0, theta.sin()),
                Complex64::new(theta.cos(), 0.0),
            ],
        );
        let rotated = TangentSpace::new(t.u() * &q, t.v() * &q, 1e-12).unwrap();
        let opts = PowerOptions::default();
        let a = check_concentration(&t, &subs[0], &shape, &opts).unwrap().value;
        let b = check_concentration(&rotated, &subs[0], &shape, &opts).unwrap().value;
        assert!(a.is_finite());
        assert!((a - b).abs() <= 1e-6 * a.max(1.0));
    }

    #[test]
    fn cross_incoherence_zero_and_symmetric() {
        let (xs, subs, shape) = instance(32, 2, 1, 1, 11);
        let ts: Vec<_> = xs.iter().map(|x| TangentSpace::from_lifted(&shape.lift(x).unwrap(), 1).unwrap()).collect();
        let opts = PowerOptions { max_iter: 2000, tol: 1e-13, seed: 3 };
        let zero = Subspace::new(M::zeros(32, 1));
        let v0 = check_cross_incoherence((&ts[0], &subs[0]), (&ts[1], &zero), &shape, 2, &opts).unwrap();
        assert_eq!(v0.value, 0.0);
        let ab = check_cross_incoherence((&ts[0], &subs[0]), (&ts[1], &subs[1]), &shape, 2, &opts).unwrap();
        let ba = check_cross_incoherence((&ts[1], &subs[1]), (&ts[0], &subs[0]), &shape, 2, &opts).unwrap();
        assert!(ab.value.is_finite() && ab.value > 0.0);
        assert!((ab.value - ba.value).abs() <= 1e-6 * ab.value);
        assert_eq!(ab.threshold, 1.0 / 16.0);
    }

    #[test]
    fn partitions_cover_disjointly() {
        for kind in [Partition::Contiguous, Partition::Random(4)] {
            let parts = partition_indices(23, 5, kind).unwrap();
            assert_eq!(parts.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 4, 4, 7]);
            let mut all: Vec<usize> = parts.concat();
            all.sort_unstable();
            assert_eq!(all, (0..23).collect::<Vec<_>>());
        }
        assert_eq!(partition_indices(5, 2, Partition::Contiguous).unwrap(), vec![vec![0, 1], vec![2, 3, 4]]);
        assert!(partition_indices(3, 4, Partition::Contiguous).is_err());
        assert!(partition_indices(3, 0, Partition::Contiguous).unwrap().is_empty());
    }

    #[test]
    fn default_steps_formula() {
        assert_eq!(default_golfing_steps(2, 1, 1, 1.0), 7); // log2 96
        assert_eq!(default_golfing_steps(1, 1, 1, 1.0), 6); // log2 48
        assert_eq!(default_golfing_steps(2, 2, 2, 1.0), 9); // log2 384
    }

    #[test]
    fn golfing_empty_scheme() {
        let (xs, subs, shape) = instance(32, 2, 2, 2, 12);
        let ts: Vec<_> = xs.iter().map(|x| TangentSpace::from_lifted(&shape.lift(x).unwrap(), 2).unwrap()).collect();
        let cert = golfing_certificate(&ts, &subs, &shape, &GolfingOptions { t0: Some(0), ..Default::default() }).unwrap();
        for (y, c) in cert.certificates.iter().zip(&cert.cond_f) {
            assert_eq!(y.norm(), 0.0);
            assert!((c.value - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn golfing_single_full_step_is_exact() {
        let n = 20;
        let shape = LiftShape::balanced(1, n).unwrap();
        let t = random_tangent(shape.lifted_dims().0, shape.lifted_dims().1, 1, 13);
        let cert = golfing_certificate(
            std::slice::from_ref(&t),
            &[ones_subspace(n)],
            &shape,
            &GolfingOptions { t0: Some(1), ..Default::default() },
        )
        .unwrap();
        assert!(cert.cond_f[0].value < 1e-12);
        assert!(cert.recursion_gap < 1e-12);
    }

    #[test]
    fn golfing_paths_agree_and_certificate_in_range() {
        for kind in [Partition::Contiguous, Partition::Random(7)] {
            let (xs, subs, shape) = instance(64, 2, 2, 1, 14);
            let ts: Vec<_> = xs.iter().map(|x| TangentSpace::from_lifted(&shape.lift(x).unwrap(), 1).unwrap()).collect();
            let cert = golfing_certificate(&ts, &subs, &shape, &GolfingOptions { t0: None, partition: kind }).unwrap();
            assert_eq!(cert.t0, 8);
            assert!(cert.recursion_gap <= 1e-10, "{}", cert.recursion_gap);
            assert!(cert.range_residual <= 1e-10, "{}", cert.range_residual);
            assert!(cert.cond_f_history.iter().all(|h| h.len() == 9));
        }
    }

    #[test]
    fn diagnose_reports_finite_values() {
        let (xs, subs, shape) = instance(48, 2, 1, 1, 15);
        let rep = diagnose(&xs, &subs, &shape, 1, &GolfingOptions::default(), &PowerOptions::default()).unwrap();
        assert!(rep.all_finite());
        assert!(rep.mu0 >= 1.0 && rep.mu1.iter().all(|&m| m >= 1.0));
    }

    #[test]
    fn g_norms() {
        let shape = LiftShape::new(2, 7, 3).unwrap();
        let mut rng = stream_rng(16, 0);
        let x: M = complex_gaussian_matrix(2, 7, &mut rng);
        let gx = shape.g_apply(&x).unwrap();
        assert!((g_fro_norm(&shape, &gx).unwrap() - x.norm()).abs() < 1e-12);
        let max_col = x.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!((g_inf_norm(&shape, &gx).unwrap() - max_col).abs() < 1e-12);
    }
}
