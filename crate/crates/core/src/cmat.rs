//! Dense complex matrices and vectors, row-major storage.
//!
//! Everything in this crate works at modest sizes (n up to a few hundred),
//! so the implementations favour clarity and numerical robustness over
//! blocked performance tricks.

use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Column vector in `C^n`.
pub type CVec = Vec<C64>;

pub fn cvec_zeros(n: usize) -> CVec {
    vec![C64::new(0.0, 0.0); n]
}

/// Hermitian inner product `a^dagger b` (antilinear in the first slot).
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn cvec_norm(a: &[C64]) -> f64 {
    cdot(a, a).re.sqrt()
}

pub fn cvec_scale(a: &[C64], s: C64) -> CVec {
    a.iter().map(|x| x * s).collect()
}

pub fn cvec_sub(a: &[C64], b: &[C64]) -> CVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn cvec_max_abs(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i];
        }
        m
    }

    pub fn diag_re(entries: &[f64]) -> Self {
        CMat::diag(&entries.iter().map(|&x| cr(x)).collect::<Vec<_>>())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn col(&self, j: usize) -> CVec {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C64]) {
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    pub fn mul_vec(&self, v: &[C64]) -> CVec {
        debug_assert_eq!(self.cols, v.len());
        let mut out = cvec_zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max row sum of absolute values (the induced infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Integer matrix power, `k >= 0`.
    pub fn pow(&self, k: usize) -> CMat {
        assert!(self.is_square());
        let mut acc = CMat::identity(self.rows);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn hermitian_deviation(&self) -> f64 {
        (self - &self.adjoint()).max_abs()
    }

    pub fn unitary_deviation(&self) -> f64 {
        (&(self * &self.adjoint()) - &CMat::identity(self.rows)).max_abs()
    }

    /// Replace by the Hermitian average `(A + A^dagger)/2`.
    pub fn hermitize(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// Rank-one update `A + s v w^dagger`.
    pub fn add_outer(&self, s: C64, v: &[C64], w: &[C64]) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + s * v[i] * w[j].conj())
    }

    /// Outer product `v w^dagger`.
    pub fn outer(v: &[C64], w: &[C64]) -> CMat {
        CMat::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        for i in 0..self.rows {
            for j in 0..i.min(self.cols) {
                if self[(i, j)].norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn has_positive_diagonal(&self, tol: f64) -> bool {
        (0..self.rows.min(self.cols)).all(|i| self[(i, i)].re > tol && self[(i, i)].im.abs() <= tol.max(1e-12))
    }

    /// Solve `U x = b` for upper triangular `U` by back substitution.
    pub fn solve_upper(&self, b: &[C64]) -> CVec {
        let n = self.rows;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self[(i, j)] * x[j];
            }
            x[i] = acc / self[(i, i)];
        }
        x
    }

    /// Inverse of an upper triangular matrix (stays upper triangular).
    pub fn inv_upper(&self) -> CMat {
        let n = self.rows;
        let mut inv = CMat::zeros(n, n);
        for j in (0..n).rev() {
            let mut e = cvec_zeros(n);
            e[j] = cr(1.0);
            let x = self.solve_upper(&e);
            inv.set_col(j, &x);
        }
        inv
    }

    /// LU solve with partial pivoting for a general square system `A X = B`.
    pub fn lu_solve(&self, b: &CMat) -> CMat {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(perm[k], k)].norm();
            for r in k + 1..n {
                let v = a[(perm[r], k)].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            perm.swap(k, piv);
            let pk = perm[k];
            for r in k + 1..n {
                let pr = perm[r];
                let factor = a[(pr, k)] / a[(pk, k)];
                a[(pr, k)] = factor;
                for j in k + 1..n {
                    let sub = factor * a[(pk, j)];
                    a[(pr, j)] -= sub;
                }
                for j in 0..x.cols() {
                    let sub = factor * x[(pk, j)];
                    x[(pr, j)] -= sub;
                }
            }
        }
        let mut out = CMat::zeros(n, b.cols());
        for jcol in 0..b.cols() {
            for i in (0..n).rev() {
                let mut acc = x[(perm[i], jcol)];
                for j in i + 1..n {
                    acc -= a[(perm[i], j)] * out[(j, jcol)];
                }
                out[(i, jcol)] = acc / a[(perm[i], i)];
            }
        }
        out
    }

    pub fn inverse(&self) -> CMat {
        self.lu_solve(&CMat::identity(self.rows))
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale(cr(-1.0))
    }
}

/// Dense real matrix, row-major. Used for Poisson tensors, symplectic
/// forms and Jacobians.
#[derive(Clone, Debug, PartialEq)]
pub struct RMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = RMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> RMat {
        RMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn antisymmetry_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self[(i, j)] + self[(j, i)]).abs());
            }
        }
        dev
    }

    pub fn mul(&self, rhs: &RMat) -> RMat {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = RMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &RMat) -> RMat {
        RMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    /// Singular values, descending, via the eigenvalues of `A^T A`.
    pub fn singular_values(&self) -> Vec<f64> {
        let at_a = self.transpose().mul(self);
        let n = at_a.rows;
        let herm = CMat::from_fn(n, n, |i, j| cr(at_a[(i, j)]));
        let sym = herm.hermitize();
        let (vals, _) = crate::linalg::eig_hermitian(&sym).expect("A^T A is symmetric");
        vals.iter().map(|&l| l.max(0.0).sqrt()).collect()
    }

    /// Numerical rank with threshold `sigma > rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * smax).count()
    }
}

impl Index<(usize, usize)> for RMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Antisymmetric real matrix of coordinate Poisson brackets at a point,
/// together with a human-readable label per coordinate.
#[derive(Clone, Debug)]
pub struct PoissonTensor {
    pub labels: Vec<String>,
    pub mat: RMat,
}

impl PoissonTensor {
    pub fn dim(&self) -> usize {
        self.mat.rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_identity() {
        let a = CMat::from_fn(3, 3, |i, j| c(i as f64, j as f64));
        let id = CMat::identity(3);
        assert_eq!((&a * &id), a);
    }

    #[test]
    fn lu_solve_roundtrip() {
        let a = CMat::from_fn(4, 4, |i, j| {
            c(((i * 7 + j * 3 + 1) % 5) as f64 + 0.5, ((i + 2 * j) % 3) as f64 - 1.0)
        })
        .add_outer(cr(2.0), &[cr(1.0), cr(0.0), cr(1.0), cr(0.0)], &[cr(0.0), cr(1.0), cr(0.0), cr(1.0)]);
        let inv = a.inverse();
        let res = (&(&a * &inv) - &CMat::identity(4)).max_abs();
        assert!(res < 1e-12, "residual {res}");
    }

    #[test]
    fn upper_solve() {
        let u = CMat::from_fn(3, 3, |i, j| if j >= i { cr((i + j + 1) as f64) } else { cr(0.0) });
        let inv = u.inv_upper();
        let res = (&(&u * &inv) - &CMat::identity(3)).max_abs();
        assert!(res < 1e-14);
        assert!(inv.is_upper_triangular(0.0));
    }
}
