//! Vectorized Hankel lifting.
//!
//! An `s x n` data matrix `X = [x_0 .. x_{n-1}]` is lifted to the
//! `(s n1) x n2` block-Hankel matrix whose `(i, j)` block (an `s x 1` column)
//! is `x_{i+j}`, with `n1 + n2 = n + 1`. The lift is low rank whenever the
//! columns of `X` are a sum of a few complex exponentials sharing one
//! coefficient vector.
//!
//! The two-level variant treats the columns as a raster over an `N x P` grid
//! (`column = p N + n`) and nests a block-Hankel over `p` around a vectorized
//! Hankel over `n`, which keeps two-dimensional exponentials low rank.
//!
//! Both lifts are described by the [`Lift`] trait: a lift is a map from the
//! (row-block, column) positions of the lifted matrix to data columns. The
//! adjoint, the multiplicity weights `w`, the weight operator `D` and the
//! isometry `G = H D^-1` follow from that map alone.

use num_complex::Complex;

use crate::error::{shape_err, MvhlError, Result};
use crate::scalar::{CMatrix, CVector, Real};

/// Geometry of a one-level vectorized Hankel lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LiftShape {
    s: usize,
    n: usize,
    n1: usize,
    n2: usize,
}

impl LiftShape {
    /// Shape with pencil parameter `n1`; `n2 = n + 1 - n1`.
    pub fn new(s: usize, n: usize, n1: usize) -> Result<Self> {
        if s == 0 || n == 0 {
            return Err(MvhlError::InvalidShape(format!("s = {s} and n = {n} must be positive")));
        }
        if n1 == 0 || n1 > n {
            return Err(MvhlError::InvalidShape(format!("pencil parameter n1 = {n1} must lie in 1..={n}")));
        }
        Ok(Self { s, n, n1, n2: n + 1 - n1 })
    }

    /// Balanced split `n1 = ceil((n + 1) / 2)`.
    pub fn balanced(s: usize, n: usize) -> Result<Self> {
        Self::new(s, n, default_pencil(n))
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }
}

/// Default pencil parameter `ceil((n + 1) / 2)`.
pub fn default_pencil(n: usize) -> usize {
    (n + 2) / 2
}

/// Geometry of the two-level (delay-Doppler) lift over an `N x P` raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LiftShape2D {
    s: usize,
    fast: LiftAxis,
    slow: LiftAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct LiftAxis {
    len: usize,
    l1: usize,
    l2: usize,
}

impl LiftAxis {
    fn new(name: &str, len: usize, l1: usize) -> Result<Self> {
        if len == 0 || l1 == 0 || l1 > len {
            return Err(MvhlError::InvalidShape(format!(
                "{name}: pencil parameter {l1} must lie in 1..={len} (extent {len})"
            )));
        }
        Ok(Self { len, l1, l2: len + 1 - l1 })
    }
}

impl LiftShape2D {
    /// `big_n` is the fast (delay) extent, `p` the slow (Doppler) extent.
    pub fn new(s: usize, big_n: usize, p: usize, n1: usize, p1: usize) -> Result<Self> {
        if s == 0 {
            return Err(MvhlError::InvalidShape("s must be positive".into()));
        }
        Ok(Self {
            s,
            fast: LiftAxis::new("fast axis", big_n, n1)?,
            slow: LiftAxis::new("slow axis", p, p1)?,
        })
    }

    pub fn balanced(s: usize, big_n: usize, p: usize) -> Result<Self> {
        Self::new(s, big_n, p, default_pencil(big_n), default_pencil(p))
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Fast-axis extent `N`.
    pub fn big_n(&self) -> usize {
        self.fast.len
    }

    /// Slow-axis extent `P`.
    pub fn p(&self) -> usize {
        self.slow.len
    }

    pub fn n1(&self) -> usize {
        self.fast.l1
    }

    pub fn n2(&self) -> usize {
        self.fast.l2
    }

    pub fn p1(&self) -> usize {
        self.slow.l1
    }

    pub fn p2(&self) -> usize {
        self.slow.l2
    }

    /// Raster index of grid point `(n, p)`.
    pub fn raster(&self, n: usize, p: usize) -> usize {
        p * self.fast.len + n
    }
}

/// A block lift: the lifted matrix has `row_blocks()` blocks of `s()` rows and
/// `cols()` columns, and the `s x 1` block at `(row_block, col)` is the data
/// column `source_column(row_block, col)`.
///
/// Every operation is a pure function of its inputs.
pub trait Lift: Send + Sync {
    fn s(&self) -> usize;

    /// Number of data columns.
    fn n(&self) -> usize;

    fn row_blocks(&self) -> usize;

    fn cols(&self) -> usize;

    fn source_column(&self, row_block: usize, col: usize) -> usize;

    /// `(rows, cols)` of the lifted matrix.
    fn lifted_dims(&self) -> (usize, usize) {
        (self.s() * self.row_blocks(), self.cols())
    }

    /// Multiplicities `w_j`: how many lifted blocks copy data column `j`.
    fn weights(&self) -> Vec<usize> {
        let mut w = vec![0usize; self.n()];
        for c in 0..self.cols() {
            for b in 0..self.row_blocks() {
                w[self.source_column(b, c)] += 1;
            }
        }
        w
    }

    fn check_data<T: Real>(&self, x: &CMatrix<T>) -> Result<()> {
        if x.shape() != (self.s(), self.n()) {
            return Err(shape_err(
                "data matrix",
                format!("{}x{}", self.s(), self.n()),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        Ok(())
    }

    fn check_lifted<T: Real>(&self, w: &CMatrix<T>) -> Result<()> {
        let (r, c) = self.lifted_dims();
        if w.shape() != (r, c) {
            return Err(shape_err(
                "lifted matrix",
                format!("{r}x{c}"),
                format!("{}x{}", w.nrows(), w.ncols()),
            ));
        }
        Ok(())
    }

    /// `H(X)`.
    fn lift<T: Real>(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.check_data(x)?;
        let s = self.s();
        let (rows, cols) = self.lifted_dims();
        let mut out = CMatrix::zeros(rows, cols);
        for c in 0..cols {
            for b in 0..self.row_blocks() {
                let src = self.source_column(b, c);
                out.view_mut((b * s, c), (s, 1)).copy_from(&x.column(src));
            }
        }
        Ok(out)
    }

    /// `H*(W)`: data column `j` is the sum of every block copied from `j`.
    fn adjoint<T: Real>(&self, w: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.check_lifted(w)?;
        let s = self.s();
        let mut out = CMatrix::zeros(s, self.n());
        for c in 0..self.cols() {
            for b in 0..self.row_blocks() {
                let dst = self.source_column(b, c);
                let block = w.view((b * s, c), (s, 1));
                let mut col = out.column_mut(dst);
                col += block;
            }
        }
        Ok(out)
    }

    /// Column `j` scaled by `w_j^(power/2)`, `power` in `{-2, -1, 1, 2}`.
    fn apply_d<T: Real>(&self, x: &CMatrix<T>, power: i32) -> Result<CMatrix<T>> {
        self.check_data(x)?;
        let w = self.weights();
        let factor = |wj: usize| -> T {
            let wj = T::from_usize_exact(wj);
            match power {
                1 => wj.sqrt(),
                -1 => T::one() / wj.sqrt(),
                2 => wj,
                _ => T::one() / wj,
            }
        };
        if !matches!(power, -2 | -1 | 1 | 2) {
            return Err(MvhlError::InvalidArgument(format!("weight power must be one of -2, -1, 1, 2 (got {power})")));
        }
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col *= Complex::new(factor(w[j]), T::zero());
        }
        Ok(out)
    }

    /// `G(X) = H(D^-1 X)`.
    fn g_apply<T: Real>(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.lift(&self.apply_d(x, -1)?)
    }

    /// `G*(W) = D^-1 H*(W)`.
    fn g_adjoint<T: Real>(&self, w: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.apply_d(&self.adjoint(w)?, -1)
    }

    /// `G G*(W)`, the orthogonal projection onto the range of `H`.
    fn range_project<T: Real>(&self, w: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.g_apply(&self.g_adjoint(w)?)
    }

    /// `H(X) v` without forming `H(X)`.
    fn lift_apply<T: Real>(&self, x: &CMatrix<T>, v: &CVector<T>) -> Result<CVector<T>> {
        self.check_data(x)?;
        if v.len() != self.cols() {
            return Err(shape_err("operand vector", self.cols(), v.len()));
        }
        let s = self.s();
        let mut out = CVector::zeros(s * self.row_blocks());
        for b in 0..self.row_blocks() {
            let mut block = out.rows_mut(b * s, s);
            for (c, &vc) in v.iter().enumerate() {
                block.axpy(vc, &x.column(self.source_column(b, c)), Complex::new(T::one(), T::zero()));
            }
        }
        Ok(out)
    }

    /// `H(X)^H u` without forming `H(X)`.
    fn lift_apply_adjoint<T: Real>(&self, x: &CMatrix<T>, u: &CVector<T>) -> Result<CVector<T>> {
        self.check_data(x)?;
        let s = self.s();
        if u.len() != s * self.row_blocks() {
            return Err(shape_err("operand vector", s * self.row_blocks(), u.len()));
        }
        let out = CVector::from_fn(self.cols(), |c, _| {
            (0..self.row_blocks()).fold(Complex::new(T::zero(), T::zero()), |acc, b| {
                acc + x.column(self.source_column(b, c)).dotc(&u.rows(b * s, s))
            })
        });
        Ok(out)
    }
}

impl Lift for LiftShape {
    fn s(&self) -> usize {
        self.s
    }

    fn n(&self) -> usize {
        self.n
    }

    fn row_blocks(&self) -> usize {
        self.n1
    }

    fn cols(&self) -> usize {
        self.n2
    }

    #[inline]
    fn source_column(&self, row_block: usize, col: usize) -> usize {
        row_block + col
    }

    fn weights(&self) -> Vec<usize> {
        hankel_weights(self)
    }
}

impl Lift for LiftShape2D {
    fn s(&self) -> usize {
        self.s
    }

    fn n(&self) -> usize {
        self.fast.len * self.slow.len
    }

    fn row_blocks(&self) -> usize {
        self.fast.l1 * self.slow.l1
    }

    fn cols(&self) -> usize {
        self.fast.l2 * self.slow.l2
    }

    /// Row block `a N1 + i`, column `b N2 + j` copies grid point
    /// `(i + j, a + b)`.
    #[inline]
    fn source_column(&self, row_block: usize, col: usize) -> usize {
        let (a, i) = (row_block / self.fast.l1, row_block % self.fast.l1);
        let (b, j) = (col / self.fast.l2, col % self.fast.l2);
        self.raster(i + j, a + b)
    }

    fn weights(&self) -> Vec<usize> {
        hankel_weights_2d(self)
    }
}

/// `w_i = min(i + 1, n1, n2, n - i)`, the number of anti-diagonal pairs.
pub fn hankel_weights(shape: &LiftShape) -> Vec<usize> {
    axis_weights(shape.n, shape.n1, shape.n2)
}

/// Product weights `w_(n,p) = w_n w_p` in raster order.
pub fn hankel_weights_2d(shape: &LiftShape2D) -> Vec<usize> {
    let wf = axis_weights(shape.fast.len, shape.fast.l1, shape.fast.l2);
    let ws = axis_weights(shape.slow.len, shape.slow.l1, shape.slow.l2);
    ws.iter().flat_map(|&b| wf.iter().map(move |&a| a * b)).collect()
}

fn axis_weights(n: usize, n1: usize, n2: usize) -> Vec<usize> {
    (0..n).map(|i| (i + 1).min(n1).min(n2).min(n - i)).collect()
}

pub fn hankel_lift<T: Real>(x: &CMatrix<T>, shape: &LiftShape) -> Result<CMatrix<T>> {
    shape.lift(x)
}

pub fn hankel_adjoint<T: Real>(w: &CMatrix<T>, shape: &LiftShape) -> Result<CMatrix<T>> {
    shape.adjoint(w)
}

pub fn hankel_lift_2d<T: Real>(x: &CMatrix<T>, shape: &LiftShape2D) -> Result<CMatrix<T>> {
    shape.lift(x)
}

pub fn hankel_adjoint_2d<T: Real>(w: &CMatrix<T>, shape: &LiftShape2D) -> Result<CMatrix<T>> {
    shape.adjoint(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{inner, numerical_rank, singular_values, RANK_TOL};
    use crate::measurement::{steering_vector, steering_vector_2d};
    use crate::rng::{complex_gaussian_matrix, complex_gaussian_vector, stream_rng};
    use crate::{Complex64, Matrix};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Independent oracle: enumerate pairs `(j, k)` with `j + k = i`.
    fn enumerated_weights(n: usize, n1: usize) -> Vec<usize> {
        let n2 = n + 1 - n1;
        (0..n)
            .map(|i| (0..n1).flat_map(|j| (0..n2).map(move |k| (j, k))).filter(|(j, k)| j + k == i).count())
            .collect()
    }

    #[test]
    fn lift_smallest_case() {
        let shape = LiftShape::new(1, 3, 2).unwrap();
        let x = Matrix::from_row_slice(1, 3, &[c(1.0), c(2.0), c(3.0)]);
        let h = shape.lift(&x).unwrap();
        assert_eq!(h, Matrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(3.0)]));
    }

    #[test]
    fn lift_with_single_row_block_is_identity() {
        let shape = LiftShape::new(2, 2, 1).unwrap();
        let mut rng = stream_rng(1, 0);
        let x: Matrix = complex_gaussian_matrix(2, 2, &mut rng);
        assert_eq!(shape.lift(&x).unwrap(), x);
    }

    #[test]
    fn lift_rejects_bad_shapes() {
        assert!(LiftShape::new(1, 3, 0).is_err());
        assert!(LiftShape::new(1, 3, 4).is_err());
        let shape = LiftShape::new(2, 4, 2).unwrap();
        let x = Matrix::zeros(2, 5);
        assert!(matches!(shape.lift(&x), Err(MvhlError::ShapeMismatch { .. })));
        assert!(shape.adjoint(&Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn single_exponential_lift_has_rank_one() {
        let shape = LiftShape::new(3, 16, 8).unwrap();
        let mut rng = stream_rng(2, 0);
        let h = complex_gaussian_vector::<f64, _>(3, &mut rng);
        let a = steering_vector(0.3721_f64, 16);
        let x = &h * a.transpose();
        let sv = singular_values(&shape.lift(&x).unwrap()).unwrap();
        assert_eq!(numerical_rank(&sv, RANK_TOL), 1);
    }

    #[test]
    fn adjoint_sums_anti_diagonals() {
        let shape = LiftShape::new(1, 3, 2).unwrap();
        let w = Matrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let x = shape.adjoint(&w).unwrap();
        assert_eq!(x, Matrix::from_row_slice(1, 3, &[c(1.0), c(5.0), c(4.0)]));
    }

    #[test]
    fn adjoint_identity_on_random_pair() {
        let shape = LiftShape::new(2, 12, 6).unwrap();
        let mut rng = stream_rng(3, 0);
        let x: Matrix = complex_gaussian_matrix(2, 12, &mut rng);
        let (r, cc) = shape.lifted_dims();
        let w: Matrix = complex_gaussian_matrix(r, cc, &mut rng);
        let lhs = inner(&shape.lift(&x).unwrap(), &w);
        let rhs = inner(&x, &shape.adjoint(&w).unwrap());
        assert!((lhs - rhs).norm() <= 1e-10 * x.norm() * w.norm());
    }

    #[test]
    fn weights_match_enumeration() {
        assert_eq!(hankel_weights(&LiftShape::new(1, 4, 2).unwrap()), vec![1, 2, 2, 1]);
        assert_eq!(hankel_weights(&LiftShape::new(1, 5, 3).unwrap()), vec![1, 2, 3, 2, 1]);
        for n in 1..20 {
            for n1 in 1..=n {
                let shape = LiftShape::new(1, n, n1).unwrap();
                assert_eq!(hankel_weights(&shape), enumerated_weights(n, n1));
                // Generic trait path agrees with the closed form.
                let generic: Vec<usize> = {
                    let mut w = vec![0; n];
                    for col in 0..shape.n2() {
                        for b in 0..n1 {
                            w[b + col] += 1;
                        }
                    }
                    w
                };
                assert_eq!(hankel_weights(&shape), generic);
            }
        }
        let w = hankel_weights(&LiftShape::new(1, 48, 24).unwrap());
        assert_eq!(w.iter().sum::<usize>(), 600);
        assert!(w.iter().all(|&wi| wi >= 1));
        assert!(w.iter().zip(w.iter().rev()).all(|(a, b)| a == b));
    }

    #[test]
    fn weight_operator() {
        let shape = LiftShape::new(1, 4, 2).unwrap();
        let ones = Matrix::from_element(1, 4, c(1.0));
        let d = shape.apply_d(&ones, 1).unwrap();
        let s2 = 2f64.sqrt();
        for (got, want) in d.iter().zip([1.0, s2, s2, 1.0]) {
            assert!((got.re - want).abs() < 1e-15 && got.im == 0.0);
        }
        assert!(shape.apply_d(&ones, 3).is_err());

        let shape = LiftShape::new(3, 9, 4).unwrap();
        let mut rng = stream_rng(4, 0);
        let x: Matrix = complex_gaussian_matrix(3, 9, &mut rng);
        let back = shape.apply_d(&shape.apply_d(&x, 1).unwrap(), -1).unwrap();
        assert!((back - &x).norm() <= 1e-14 * x.norm());
        let hh = shape.adjoint(&shape.lift(&x).unwrap()).unwrap();
        let d2 = shape.apply_d(&x, 2).unwrap();
        assert!((hh - d2).norm() <= 1e-12 * x.norm());
        let inv = shape.apply_d(&shape.apply_d(&x, 2).unwrap(), -2).unwrap();
        assert!((inv - &x).norm() <= 1e-14 * x.norm());
    }

    #[test]
    fn isometry_and_range_projection() {
        let shape = LiftShape::new(2, 10, 5).unwrap();
        let mut rng = stream_rng(5, 0);
        let x: Matrix = complex_gaussian_matrix(2, 10, &mut rng);
        let back = shape.g_adjoint(&shape.g_apply(&x).unwrap()).unwrap();
        assert!((back - &x).norm() <= 1e-12 * x.norm());
        let w = shape.lift(&x).unwrap();
        let proj = shape.range_project(&w).unwrap();
        assert!((proj - &w).norm() <= 1e-12 * w.norm());
    }

    #[test]
    fn range_projection_of_corner_entry() {
        // D^-1 H* maps the corner to x_0 = 1 (w_0 = 1); H D^-1 maps it back.
        let shape = LiftShape::new(1, 3, 2).unwrap();
        let mut w = Matrix::zeros(2, 2);
        w[(0, 0)] = c(1.0);
        let p = shape.range_project(&w).unwrap();
        assert_eq!(p, w);
    }

    #[test]
    fn implicit_application_matches_dense() {
        let shape = LiftShape::new(3, 11, 4).unwrap();
        let mut rng = stream_rng(6, 0);
        let x: Matrix = complex_gaussian_matrix(3, 11, &mut rng);
        let v = complex_gaussian_vector(shape.n2(), &mut rng);
        let u = complex_gaussian_vector(3 * shape.n1(), &mut rng);
        let h = shape.lift(&x).unwrap();
        assert!((shape.lift_apply(&x, &v).unwrap() - &h * &v).norm() < 1e-12);
        assert!((shape.lift_apply_adjoint(&x, &u).unwrap() - h.adjoint() * &u).norm() < 1e-12);
    }

    #[test]
    fn two_level_identity_and_weights() {
        let shape = LiftShape2D::new(2, 2, 2, 1, 1).unwrap();
        let mut rng = stream_rng(7, 0);
        let x: Matrix = complex_gaussian_matrix(2, 4, &mut rng);
        assert_eq!(shape.lift(&x).unwrap(), x);

        let shape = LiftShape2D::new(1, 3, 3, 2, 2).unwrap();
        let w = hankel_weights_2d(&shape);
        let axis = [1, 2, 1];
        let want: Vec<usize> = axis.iter().flat_map(|&b| axis.iter().map(move |&a| a * b)).collect();
        assert_eq!(w, want);
        // The generic counting path agrees with the product formula.
        let mut counted = vec![0; 9];
        for col in 0..shape.cols() {
            for b in 0..shape.row_blocks() {
                counted[shape.source_column(b, col)] += 1;
            }
        }
        assert_eq!(counted, want);
    }

    #[test]
    fn two_level_lift_of_single_target_has_rank_one() {
        let shape = LiftShape2D::new(2, 8, 8, 4, 4).unwrap();
        let u = nalgebra::DVector::from_vec(vec![c(0.6), Complex64::new(0.0, 0.8)]);
        let a = steering_vector_2d(0.3_f64, 0.7, 8, 8);
        let x = &u * a.transpose();
        let sv = singular_values(&shape.lift(&x).unwrap()).unwrap();
        assert_eq!(numerical_rank(&sv, RANK_TOL), 1);
    }

    #[test]
    fn two_level_adjoint_identity() {
        let shape = LiftShape2D::new(2, 5, 4, 3, 2).unwrap();
        let mut rng = stream_rng(8, 0);
        let x: Matrix = complex_gaussian_matrix(2, 20, &mut rng);
        let (r, cc) = shape.lifted_dims();
        let w: Matrix = complex_gaussian_matrix(r, cc, &mut rng);
        let lhs = inner(&shape.lift(&x).unwrap(), &w);
        let rhs = inner(&x, &shape.adjoint(&w).unwrap());
        assert!((lhs - rhs).norm() <= 1e-10 * x.norm() * w.norm());
        let back = shape.g_adjoint(&shape.g_apply(&x).unwrap()).unwrap();
        assert!((back - &x).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn single_precision_lift() {
        let shape = LiftShape::new(2, 8, 4).unwrap();
        let mut rng = stream_rng(9, 0);
        let x: crate::Matrix32 = complex_gaussian_matrix(2, 8, &mut rng);
        let back = shape.g_adjoint(&shape.g_apply(&x).unwrap()).unwrap();
        assert!((back - &x).norm() <= 1e-5 * x.norm());
    }
}
