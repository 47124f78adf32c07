//! Forward-mode differentiation scalar used to take analytic derivatives
//! of structure functions and coordinate maps.
//!
//! A `Jet` carries a complex value together with its partial derivatives
//! with respect to a fixed list of *real* independent variables. Since the
//! independents are real, complex conjugation acts entrywise on the
//! derivative vector, so rational expressions mixing a variable and its
//! conjugate differentiate correctly.

use crate::cmat::{cr, C64};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug)]
pub struct Jet {
    pub v: C64,
    pub d: Vec<C64>,
}

impl Jet {
    /// Constant (no derivative content).
    pub fn c(v: C64) -> Jet {
        Jet { v, d: Vec::new() }
    }

    pub fn re(x: f64) -> Jet {
        Jet::c(cr(x))
    }

    /// Real independent variable: value `x`, unit derivative in slot `idx`.
    pub fn var(x: f64, idx: usize, dim: usize) -> Jet {
        let mut d = vec![C64::new(0.0, 0.0); dim];
        d[idx] = cr(1.0);
        Jet { v: cr(x), d }
    }

    /// Complex variable built from two real independents `(re, im)`.
    pub fn cvar(z: C64, re_idx: usize, im_idx: usize, dim: usize) -> Jet {
        let mut d = vec![C64::new(0.0, 0.0); dim];
        d[re_idx] = cr(1.0);
        d[im_idx] = C64::new(0.0, 1.0);
        Jet { v: z, d }
    }

    pub fn conj(&self) -> Jet {
        Jet { v: self.v.conj(), d: self.d.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet { v: self.v * s, d: self.d.iter().map(|z| z * s).collect() }
    }

    /// Square root of a jet with positive real value.
    pub fn sqrt(&self) -> Jet {
        let r = self.v.sqrt();
        let half_inv = cr(0.5) / r;
        Jet { v: r, d: self.d.iter().map(|z| z * half_inv).collect() }
    }

    /// Natural logarithm of a jet with positive real value.
    pub fn ln(&self) -> Jet {
        let inv = cr(1.0) / self.v;
        Jet { v: cr(self.v.re.ln()), d: self.d.iter().map(|z| z * inv).collect() }
    }

    pub fn inv(&self) -> Jet {
        let iv = cr(1.0) / self.v;
        let m = -iv * iv;
        Jet { v: iv, d: self.d.iter().map(|z| z * m).collect() }
    }

    pub fn real_part(&self) -> Jet {
        Jet {
            v: cr(self.v.re),
            d: self.d.iter().map(|z| cr(z.re)).collect(),
        }
    }

    pub fn imag_part(&self) -> Jet {
        Jet {
            v: cr(self.v.im),
            d: self.d.iter().map(|z| cr(z.im)).collect(),
        }
    }

    fn zip(a: &[C64], b: &[C64], f: impl Fn(C64, C64) -> C64) -> Vec<C64> {
        if a.is_empty() {
            return b.iter().map(|&y| f(C64::new(0.0, 0.0), y)).collect();
        }
        if b.is_empty() {
            return a.iter().map(|&x| f(x, C64::new(0.0, 0.0))).collect();
        }
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet { v: self.v + rhs.v, d: Jet::zip(&self.d, &rhs.d, |x, y| x + y) }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet { v: self.v - rhs.v, d: Jet::zip(&self.d, &rhs.d, |x, y| x - y) }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let (u, w) = (self.v, rhs.v);
        Jet { v: u * w, d: Jet::zip(&self.d, &rhs.d, |du, dw| du * w + u * dw) }
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        let (u, w) = (self.v, rhs.v);
        let w2 = w * w;
        Jet { v: u / w, d: Jet::zip(&self.d, &rhs.d, |du, dw| (du * w - u * dw) / w2) }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { v: -self.v, d: self.d.iter().map(|z| -z).collect() }
    }
}

macro_rules! owned_ops {
    ($($trait:ident $fn:ident),*) => {$(
        impl $trait for Jet {
            type Output = Jet;
            fn $fn(self, rhs: Jet) -> Jet { $trait::$fn(&self, &rhs) }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $fn(self, rhs: &Jet) -> Jet { $trait::$fn(&self, rhs) }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $fn(self, rhs: Jet) -> Jet { $trait::$fn(self, &rhs) }
        }
    )*};
}

owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

/// Matrix of jets with a few helpers, enough for the coordinate maps that
/// need differentiating (Cholesky, triangular solves, matrix products).
#[derive(Clone)]
pub struct JMat {
    pub n: usize,
    pub data: Vec<Jet>,
}

impl JMat {
    pub fn zeros(n: usize) -> JMat {
        JMat { n, data: vec![Jet::c(C64::new(0.0, 0.0)); n * n] }
    }

    pub fn identity(n: usize) -> JMat {
        let mut m = JMat::zeros(n);
        for i in 0..n {
            *m.at_mut(i, i) = Jet::re(1.0);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &Jet {
        &self.data[i * self.n + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Jet {
        &mut self.data[i * self.n + j]
    }

    pub fn mul(&self, rhs: &JMat) -> JMat {
        let n = self.n;
        let mut out = JMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Jet::c(C64::new(0.0, 0.0));
                for k in 0..n {
                    acc = &acc + &(self.at(i, k) * rhs.at(k, j));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn adjoint(&self) -> JMat {
        let n = self.n;
        let mut out = JMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                *out.at_mut(i, j) = self.at(j, i).conj();
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = Jet::c(C64::new(0.0, 0.0));
                for j in 0..n {
                    acc = &acc + &(self.at(i, j) * &v[j]);
                }
                acc
            })
            .collect()
    }

    /// Back substitution for an upper triangular jet matrix.
    pub fn solve_upper(&self, b: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let mut x: Vec<Jet> = b.to_vec();
        for i in (0..n).rev() {
            let mut acc = x[i].clone();
            for j in i + 1..n {
                acc = &acc - &(self.at(i, j) * &x[j]);
            }
            x[i] = &acc / self.at(i, i);
        }
        x
    }

    /// Upper-triangular Cholesky-type factor `b` with `b b^dagger = self`,
    /// for a Hermitian positive definite jet matrix.
    pub fn cholesky_upper(&self) -> JMat {
        let n = self.n;
        // Factor the 180-degree rotated matrix with a standard lower
        // Cholesky, then rotate back; the result is upper triangular.
        let mut a = JMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                *a.at_mut(i, j) = self.at(n - 1 - i, n - 1 - j).clone();
            }
        }
        let mut l = JMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = a.at(i, j).clone();
                for k in 0..j {
                    acc = &acc - &(l.at(i, k) * &l.at(j, k).conj());
                }
                if i == j {
                    *l.at_mut(i, j) = acc.real_part().sqrt();
                } else {
                    *l.at_mut(i, j) = &acc / l.at(j, j);
                }
            }
        }
        let mut out = JMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                *out.at_mut(i, j) = l.at(n - 1 - i, n - 1 - j).clone();
            }
        }
        out
    }
}
