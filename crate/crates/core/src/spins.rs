//! Zakrzewski's U(n)-covariant Poisson space on C^n: bracket, moment map,
//! symplectic form, Hamiltonian vector field, torus moment map, and the
//! minus-variant on the open unit ball.

use crate::cmat::{cr, CMat, CVec, C64, I, PoissonTensor, RMat};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::{cholesky_upper, split_u};

fn sgn(a: usize, b: usize) -> f64 {
    if a > b {
        1.0
    } else if a < b {
        -1.0
    } else {
        0.0
    }
}

/// One primary spin vector `w` in `C^n`, with the cached tail sums
/// `G_j = 1 + sum_{k >= j} |w_k|^2` (and `G_{n+1} = 1`).
#[derive(Clone, Debug)]
pub struct SpinVector {
    pub w: CVec,
    g: Vec<f64>,
}

impl SpinVector {
    pub fn new(w: CVec) -> Self {
        let n = w.len();
        let mut g = vec![1.0; n + 1];
        for j in (0..n).rev() {
            g[j] = g[j + 1] + w[j].norm_sqr();
        }
        SpinVector { w, g }
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// `G_j` for `j` in `1..=n+1` (1-based, matching the tail-sum label).
    pub fn g(&self, j: usize) -> f64 {
        self.g[j - 1]
    }

    pub fn zeros(n: usize) -> Self {
        SpinVector::new(vec![C64::new(0.0, 0.0); n])
    }
}

/// `d` pairwise Poisson-commuting spin vectors.
#[derive(Clone, Debug)]
pub struct SpinBlock {
    vecs: Vec<SpinVector>,
}

impl SpinBlock {
    pub fn new(vecs: Vec<SpinVector>) -> Self {
        assert!(!vecs.is_empty());
        let n = vecs[0].n();
        assert!(vecs.iter().all(|v| v.n() == n));
        SpinBlock { vecs }
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        SpinBlock::new((0..d).map(|_| SpinVector::zeros(n)).collect())
    }

    pub fn n(&self) -> usize {
        self.vecs[0].n()
    }

    pub fn d(&self) -> usize {
        self.vecs.len()
    }

    pub fn vec(&self, alpha: usize) -> &SpinVector {
        &self.vecs[alpha]
    }

    pub fn vecs(&self) -> &[SpinVector] {
        &self.vecs
    }
}

/// Complex structure function `{w_i, w_l}` of one Zakrzewski copy.
pub fn zak_ww(w: &[C64], i: usize, l: usize) -> C64 {
    I * cr(sgn(i, l)) * w[i] * w[l]
}

/// Complex structure function `{w_i, conj(w_l)}` of one Zakrzewski copy.
pub fn zak_wwbar(w: &[C64], i: usize, l: usize) -> C64 {
    let norm_sq: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let mut v = I * w[i] * w[l].conj();
    if i == l {
        v += I * cr(2.0 + norm_sq);
        let tail: f64 = (0..w.len()).map(|r| sgn(r, i) * w[r].norm_sqr()).sum();
        v += I * cr(tail);
    }
    v
}

/// 2x2 real block of a Poisson tensor from the four complex brackets of a
/// coordinate pair, in the order (ww, w wbar, wbar w, wbar wbar).
pub fn real_block(bww: C64, bwwb: C64, bwbw: C64, bwbwb: C64) -> [[f64; 2]; 2] {
    let quarter = 0.25;
    let xx = quarter * (bww + bwwb + bwbw + bwbwb);
    let xy = (bww - bwwb + bwbw - bwbwb) / (4.0 * I);
    let yx = (bww + bwwb - bwbw - bwbwb) / (4.0 * I);
    let yy = -quarter * (bww - bwwb - bwbw + bwbwb);
    debug_assert!(xx.im.abs() < 1e-10 * (1.0 + xx.norm()));
    [[xx.re, xy.re], [yx.re, yy.re]]
}

/// Real Poisson tensor of one spin copy in the coordinates
/// `(Re w_1..n, Im w_1..n)`.
pub fn zak_tensor(w: &SpinVector) -> PoissonTensor {
    let n = w.n();
    let mut mat = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for l in 0..n {
            let bww = zak_ww(&w.w, i, l);
            let bwwb = zak_wwbar(&w.w, i, l);
            let bwbw = -zak_wwbar(&w.w, l, i);
            let bwbwb = bww.conj();
            let blk = real_block(bww, bwwb, bwbw, bwbwb);
            mat[(i, l)] = blk[0][0];
            mat[(i, n + l)] = blk[0][1];
            mat[(n + i, l)] = blk[1][0];
            mat[(n + i, n + l)] = blk[1][1];
        }
    }
    let labels = (0..n)
        .map(|i| format!("Re w_{}", i + 1))
        .chain((0..n).map(|i| format!("Im w_{}", i + 1)))
        .collect();
    PoissonTensor { labels, mat }
}

/// Same tensor with jet entries carrying derivatives with respect to the
/// real coordinates, used by the Jacobi-identity sweeps.
pub fn zak_tensor_jets(w: &[C64]) -> Vec<Vec<Jet>> {
    let n = w.len();
    let dim = 2 * n;
    let wj: Vec<Jet> = (0..n).map(|i| Jet::cvar(w[i], i, n + i, dim)).collect();
    let norm_sq: Jet = wj.iter().fold(Jet::re(0.0), |acc, z| &acc + &(z * &z.conj()));
    let i_unit = Jet::c(I);
    let ww = |i: usize, l: usize| -> Jet { &(&i_unit * &wj[i]) * &wj[l].scale(cr(sgn(i, l))) };
    let wwb = |i: usize, l: usize| -> Jet {
        let mut v = &(&i_unit * &wj[i]) * &wj[l].conj();
        if i == l {
            v = &v + &(&i_unit * &(&norm_sq + &Jet::re(2.0)));
            let mut tail = Jet::re(0.0);
            for r in 0..n {
                tail = &tail + &(&wj[r] * &wj[r].conj()).scale(cr(sgn(r, i)));
            }
            v = &v + &(&i_unit * &tail);
        }
        v
    };
    let mut out = vec![vec![Jet::re(0.0); dim]; dim];
    for i in 0..n {
        for l in 0..n {
            let bww = ww(i, l);
            let bwwb = wwb(i, l);
            let bwbw = -&wwb(l, i);
            let bwbwb = bww.conj();
            let q = 0.25;
            let xx = (&(&bww + &bwwb) + &(&bwbw + &bwbwb)).scale(cr(q)).real_part();
            let xy = (&(&bww - &bwwb) + &(&bwbw - &bwbwb)).scale(cr(q) / I).real_part();
            let yx = (&(&bww + &bwwb) - &(&bwbw + &bwbwb)).scale(cr(q) / I).real_part();
            let yy = (&(&bww - &bwwb) - &(&bwbw - &bwbwb)).scale(cr(-q)).real_part();
            out[i][l] = xx;
            out[i][n + l] = xy;
            out[n + i][l] = yx;
            out[n + i][n + l] = yy;
        }
    }
    out
}

/// Hamiltonian vector field of a function with symplectic gradient `eta`.
pub fn ham_vec_field(w: &SpinVector, eta: &[C64]) -> CVec {
    let n = w.n();
    let w_eta_dag = CMat::outer(&w.w, eta);
    let u_part = split_u(&w_eta_dag);
    let first = u_part.mul_vec(&w.w);
    let pairing = crate::cmat::cdot(eta, &w.w) + crate::cmat::cdot(&w.w, eta);
    (0..n)
        .map(|i| first[i] - eta[i] - 0.5 * pairing * w.w[i])
        .collect()
}

/// Poisson-Lie moment map into `B(n)`: `b b^dagger = 1 + w w^dagger`.
pub fn moment_b(w: &SpinVector) -> CMat {
    let n = w.n();
    CMat::from_fn(n, n, |i, j| {
        let gj = w.g(j + 1);
        let gj1 = w.g(j + 2);
        if i == j {
            cr((gj / gj1).sqrt())
        } else if i < j {
            w.w[i] * w.w[j].conj() / (gj * gj1).sqrt()
        } else {
            cr(0.0)
        }
    })
}

/// Matrix of the symplectic form in the coordinates `(Re w, Im w)`,
/// normalized so that it is the inverse of [`zak_tensor`].
pub fn symplectic_form(w: &SpinVector) -> RMat {
    let n = w.n();
    let dim = 2 * n;
    // split each basic 1-form into real coordinates:
    //   dw_k = dx_k + i dy_k,  dG_{k+1} = sum_{r > k} 2(x_r dx_r + y_r dy_r)
    // and accumulate the coefficient matrix of the 2-form.
    let mut acc = CMat::zeros(dim, dim);
    let mut add_wedge = |a: &[C64], b: &[C64], coeff: C64| {
        // adds coeff * (sum_a a_m dx^m) wedge (sum_b b_m dx^m); imaginary
        // parts cancel only after antisymmetrization over (m, l)
        for m in 0..dim {
            if a[m].norm_sqr() == 0.0 {
                continue;
            }
            for l in 0..dim {
                let v = coeff * a[m] * b[l];
                acc[(m, l)] += v;
                acc[(l, m)] -= v;
            }
        }
    };
    let zero = vec![C64::new(0.0, 0.0); dim];
    for k in 0..n {
        // (i/2) (1/G_k) dw_k ^ dwbar_k
        let mut dw = zero.clone();
        dw[k] = cr(1.0);
        dw[n + k] = I;
        let dwb: Vec<C64> = dw.iter().map(|z| z.conj()).collect();
        add_wedge(&dw, &dwb, I * cr(0.5 / w.g(k + 1)));
    }
    for k in 0..n - 1 {
        // (i/4) 1/(G_k G_{k+1}) dG_{k+1} ^ (wbar_k dw_k - w_k dwbar_k)
        let mut dg = zero.clone();
        for r in k + 1..n {
            dg[r] = cr(2.0 * w.w[r].re);
            dg[n + r] = cr(2.0 * w.w[r].im);
        }
        let mut rhs = zero.clone();
        let wk = w.w[k];
        rhs[k] = wk.conj() - wk; // coefficient of dx_k
        rhs[n + k] = I * (wk.conj() + wk); // coefficient of dy_k
        add_wedge(&dg, &rhs, I * cr(0.25 / (w.g(k + 1) * w.g(k + 2))));
    }
    debug_assert!(acc.conj().max_abs() == acc.max_abs());
    let mut omega = RMat::zeros(dim, dim);
    for m in 0..dim {
        for l in 0..dim {
            debug_assert!(acc[(m, l)].im.abs() < 1e-9 * (1.0 + acc[(m, l)].norm()));
            omega[(m, l)] = acc[(m, l)].re;
        }
    }
    omega
}

/// Torus moment map in log space: `phi_j = (1/2) sum_alpha
/// log(G_j(w^alpha) / G_{j+1}(w^alpha))`; all entries are nonnegative.
pub fn torus_phi(block: &SpinBlock) -> Vec<f64> {
    let n = block.n();
    (0..n)
        .map(|j| {
            0.5 * block
                .vecs()
                .iter()
                .map(|w| (w.g(j + 1) / w.g(j + 2)).ln())
                .sum::<f64>()
        })
        .collect()
}

/// The minus-variant structure on the open unit ball: the bracket tensor
/// and the factor `b_-` with `b_- b_-^dagger = 1 - z z^dagger`.
pub fn minus_variant(z: &[C64]) -> Result<(PoissonTensor, CMat)> {
    let n = z.len();
    let norm_sq: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    if norm_sq >= 1.0 - 1e-10 {
        return Err(Error::BallBoundary { norm_sq });
    }
    let ww = |i: usize, l: usize| -> C64 { I * cr(sgn(i, l)) * z[i] * z[l] };
    let wwb = |i: usize, l: usize| -> C64 {
        let mut v = I * z[i] * z[l].conj();
        if i == l {
            v += I * cr(norm_sq - 2.0);
            let tail: f64 = (0..n).map(|r| sgn(r, l) * z[r].norm_sqr()).sum();
            v += I * cr(tail);
        }
        v
    };
    let mut mat = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for l in 0..n {
            let blk = real_block(ww(i, l), wwb(i, l), -wwb(l, i), ww(i, l).conj());
            mat[(i, l)] = blk[0][0];
            mat[(i, n + l)] = blk[0][1];
            mat[(n + i, l)] = blk[1][0];
            mat[(n + i, n + l)] = blk[1][1];
        }
    }
    let labels = (0..n)
        .map(|i| format!("Re z_{}", i + 1))
        .chain((0..n).map(|i| format!("Im z_{}", i + 1)))
        .collect();
    let one_minus = CMat::identity(n).add_outer(cr(-1.0), z, z);
    let b_minus = cholesky_upper(&one_minus)?;
    Ok((PoissonTensor { labels, mat }, b_minus))
}

/// Cyclic-sum Jacobiator of a jet-valued tensor field; returns the largest
/// violation over all coordinate triples. Entries with empty derivative
/// vectors count as constants.
pub fn jacobiator_max(tensor: &[Vec<Jet>]) -> f64 {
    let dim = tensor.len();
    let deriv = |jet: &Jet, d: usize| -> f64 {
        if jet.d.is_empty() {
            0.0
        } else {
            jet.d[d].re
        }
    };
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        for b in a + 1..dim {
            for c in b + 1..dim {
                let mut sum = 0.0;
                for d in 0..dim {
                    sum += tensor[a][d].v.re * deriv(&tensor[b][c], d)
                        + tensor[b][d].v.re * deriv(&tensor[c][a], d)
                        + tensor[c][d].v.re * deriv(&tensor[a][b], d);
                }
                worst = worst.max(sum.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::{c, cdot};
    use crate::sample::{random_cvec, random_spin_block, random_spin_vector, random_unitary, Rng64};
    use rand::SeedableRng;

    #[test]
    fn bracket_diagonal_vanishes() {
        let mut rng = Rng64::seed_from_u64(1);
        let w = random_spin_vector(4, &mut rng);
        for i in 0..4 {
            assert_eq!(zak_ww(&w.w, i, i), c(0.0, 0.0));
        }
    }

    #[test]
    fn bracket_at_origin() {
        let w = SpinVector::zeros(1);
        assert_eq!(zak_wwbar(&w.w, 0, 0), c(0.0, 2.0));
    }

    #[test]
    fn tensor_antisymmetric() {
        let mut rng = Rng64::seed_from_u64(2);
        let w = random_spin_vector(4, &mut rng);
        let t = zak_tensor(&w);
        assert!(t.mat.antisymmetry_deviation() < 1e-13);
    }

    #[test]
    fn jacobi_identity() {
        let mut rng = Rng64::seed_from_u64(3);
        for _ in 0..20 {
            let w = random_cvec(4, &mut rng);
            let jets = zak_tensor_jets(&w);
            assert!(jacobiator_max(&jets) < 1e-10);
        }
    }

    #[test]
    fn hamiltonian_field_edge_cases() {
        let mut rng = Rng64::seed_from_u64(4);
        let w = random_spin_vector(3, &mut rng);
        let zero = vec![c(0.0, 0.0); 3];
        assert!(crate::cmat::cvec_max_abs(&ham_vec_field(&w, &zero)) == 0.0);
        let eta = random_cvec(3, &mut rng);
        let at_zero = ham_vec_field(&SpinVector::zeros(3), &eta);
        for i in 0..3 {
            assert!((at_zero[i] + eta[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn hamiltonian_field_matches_tensor() {
        // field applied to a linear function F_xi = Im(xi^dagger w) must agree
        // with the tensor contraction of the gradients
        let mut rng = Rng64::seed_from_u64(5);
        for _ in 0..10 {
            let n = 4;
            let w = random_spin_vector(n, &mut rng);
            let eta = random_cvec(n, &mut rng);
            let field = ham_vec_field(&w, &eta);
            let t = zak_tensor(&w);
            // gradient of H with nabla H = eta in real coordinates: for
            // F_eta = Im(eta^dag w), dF/dx_i = Im(conj(eta_i)), dF/dy_i = Re(eta_i)
            let mut grad = vec![0.0; 2 * n];
            for i in 0..n {
                grad[i] = (eta[i].conj() * c(0.0, 1.0)).im * -1.0; // Im(conj(eta_i)) = -Im(eta_i)
                grad[i] = -eta[i].im;
                grad[n + i] = eta[i].re;
            }
            // X_H^a = sum_b P_ab grad_b
            for i in 0..n {
                let mut dx = 0.0;
                let mut dy = 0.0;
                for b in 0..2 * n {
                    dx += t.mat[(i, b)] * grad[b];
                    dy += t.mat[(n + i, b)] * grad[b];
                }
                assert!((field[i] - c(dx, dy)).norm() < 1e-12, "mismatch at {i}");
            }
        }
    }

    #[test]
    fn moment_map_identity() {
        let b = moment_b(&SpinVector::zeros(3));
        assert!((&b - &CMat::identity(3)).max_abs() < 1e-15);

        let b = moment_b(&SpinVector::new(vec![c(1.0, 0.0)]));
        assert!((b[(0, 0)] - cr(2.0f64.sqrt())).norm() < 1e-15);

        let mut rng = Rng64::seed_from_u64(6);
        for _ in 0..20 {
            let w = random_spin_vector(5, &mut rng);
            let b = moment_b(&w);
            let lhs = &b * &b.adjoint();
            let rhs = CMat::identity(5).add_outer(cr(1.0), &w.w, &w.w);
            assert!((&lhs - &rhs).max_abs() < 1e-13);
        }
    }

    #[test]
    fn symplectic_form_inverts_tensor() {
        let w = SpinVector::zeros(2);
        let om = symplectic_form(&w);
        // standard form: omega(x_k, y_k) = +1/ G = 1
        assert!((om[(0, 2)] - 1.0).abs() < 1e-14);

        let one = SpinVector::new(vec![c(1.0, 0.0)]);
        let om = symplectic_form(&one);
        assert!((om[(0, 1)] - 0.5).abs() < 1e-14);

        let mut rng = Rng64::seed_from_u64(7);
        for _ in 0..20 {
            let w = random_spin_vector(4, &mut rng);
            let om = symplectic_form(&w);
            let p = zak_tensor(&w);
            let prod = om.mul(&p.mat);
            let dev = prod.sub(&RMat::identity(8)).max_abs();
            assert!(dev < 1e-10, "Omega P deviation {dev}");
        }
    }

    #[test]
    fn torus_phi_properties() {
        let w = SpinBlock::zeros(3, 2);
        assert!(torus_phi(&w).iter().all(|&x| x == 0.0));

        let mut rng = Rng64::seed_from_u64(8);
        for _ in 0..100 {
            let block = random_spin_block(3, 2, &mut rng);
            let phi = torus_phi(&block);
            assert!(phi.iter().all(|&x| x >= 0.0));
            // product identity: prod_alpha G_j = exp(2 sum_{k>=j} phi_k)
            for j in 0..3 {
                let prod: f64 = block.vecs().iter().map(|w| w.g(j + 1)).product();
                let tail: f64 = phi[j..].iter().sum();
                assert!((prod - (2.0 * tail).exp()).abs() < 1e-12 * prod);
            }
            // bound: 1 + sum |w|^2 <= exp(2 sum phi)
            let total: f64 = block
                .vecs()
                .iter()
                .map(|w| w.w.iter().map(|z| z.norm_sqr()).sum::<f64>())
                .sum();
            let all: f64 = phi.iter().sum();
            assert!(1.0 + total <= (2.0 * all).exp() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn minus_variant_cases() {
        let (t0, b) = minus_variant(&[c(0.0, 0.0); 3]).unwrap();
        assert!(t0.mat.antisymmetry_deviation() < 1e-14);
        assert!((&b - &CMat::identity(3)).max_abs() < 1e-14);

        let z = [c((0.5f64).sqrt(), 0.0)];
        let (_, b) = minus_variant(&z).unwrap();
        assert!((b[(0, 0)] - cr(1.0 / 2.0f64.sqrt())).norm() < 1e-14);

        let mut rng = Rng64::seed_from_u64(9);
        for _ in 0..20 {
            let raw = random_cvec(4, &mut rng);
            let nrm: f64 = raw.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let z: Vec<C64> = raw.iter().map(|x| x * (0.8 / nrm / 1.5)).collect();
            let (_, b) = minus_variant(&z).unwrap();
            let lhs = &b * &b.adjoint();
            let rhs = CMat::identity(4).add_outer(cr(-1.0), &z, &z);
            assert!((&lhs - &rhs).max_abs() < 1e-13);
        }

        let z = [c(1.0, 0.0)];
        assert!(matches!(minus_variant(&z), Err(Error::BallBoundary { .. })));
    }

    #[test]
    fn action_is_poisson() {
        // covariance: {F_xi, F_eta}(g w) = {F_xi(g .), F_eta(g .)}(w)
        //             + {F_xi(. w), F_eta(. w)}_U(g)
        let mut rng = Rng64::seed_from_u64(10);
        let n = 3;
        let eval_bracket = |w: &SpinVector, xi: &[C64], eta: &[C64]| -> f64 {
            let field = ham_vec_field(w, eta);
            // {F_xi, F_eta} = Im(xi^dag V_{F_eta})
            cdot(xi, &field).im
        };
        for _ in 0..20 {
            let w = random_spin_vector(n, &mut rng);
            let g = random_unitary(n, &mut rng);
            let xi = random_cvec(n, &mut rng);
            let eta = random_cvec(n, &mut rng);
            let gw = SpinVector::new(g.mul_vec(&w.w));
            let lhs = eval_bracket(&gw, &xi, &eta);
            // F_xi(g .) = F_{g^dag xi}
            let gxi = g.adjoint().mul_vec(&xi);
            let geta = g.adjoint().mul_vec(&eta);
            let mid = eval_bracket(&w, &gxi, &geta);
            // U(n) Poisson bracket of phi_xi(g) = Im(xi^dag g w):
            //   {p1, p2}_U(g) = -<D' p1, g^{-1} (D p2) g>
            // with D phi = (g w xi^dag)_b and D' phi = (w xi^dag g)_b.
            let dp2 = crate::linalg::split_b(&CMat::outer(&g.mul_vec(&w.w), &eta));
            let dp1_r = crate::linalg::split_b(&(&CMat::outer(&w.w, &xi) * &g));
            let conj = &(&g.adjoint() * &dp2) * &g;
            let last = -crate::linalg::pairing(&dp1_r, &conj);
            assert!(
                (lhs - mid - last).abs() < 1e-10,
                "covariance residual {}",
                (lhs - mid - last).abs()
            );
        }
    }

    #[test]
    fn moment_map_generates_action() {
        // Im(nabla F^dag X w) = Im tr(X {F, b} b^{-1}) for linear F
        let mut rng = Rng64::seed_from_u64(11);
        let n = 3;
        for _ in 0..20 {
            let w = random_spin_vector(n, &mut rng);
            let xi = random_cvec(n, &mut rng);
            let xh = crate::sample::random_hermitian(n, &mut rng);
            let x = xh.scale(I); // skew-Hermitian
            let lhs = cdot(&xi, &x.mul_vec(&w.w)).im;

            // {F, b}: contract the tensor with jet gradients of b entries
            let dim = 2 * n;
            let wj: Vec<Jet> = (0..n).map(|i| Jet::cvar(w.w[i], i, n + i, dim)).collect();
            // G_j jets
            let mut gj = vec![Jet::re(1.0); n + 1];
            for j in (0..n).rev() {
                gj[j] = &gj[j + 1] + &(&wj[j] * &wj[j].conj()).real_part();
            }
            let tensor = zak_tensor(&w);
            // gradient of F_xi in real coords
            let mut gradf = vec![0.0; dim];
            for i in 0..n {
                gradf[i] = -xi[i].im;
                gradf[n + i] = xi[i].re;
            }
            let mut fb = CMat::zeros(n, n);
            for r in 0..n {
                for s in r..n {
                    let entry = if r == s {
                        (&gj[r] / &gj[r + 1]).sqrt()
                    } else {
                        &(&wj[r] * &wj[s].conj()) / &(&gj[s] * &gj[s + 1]).sqrt()
                    };
                    // {F, b_rs} = sum_ab dF_a P_ab d(b_rs)_b
                    let mut acc = c(0.0, 0.0);
                    for a in 0..dim {
                        if gradf[a] == 0.0 {
                            continue;
                        }
                        for bidx in 0..dim {
                            acc += cr(gradf[a] * tensor.mat[(a, bidx)]) * entry.d[bidx];
                        }
                    }
                    fb[(r, s)] = acc;
                }
            }
            let b = moment_b(&w);
            let rhs = (&(&x * &fb) * &b.inv_upper()).trace().im;
            assert!((lhs - rhs).abs() < 1e-10, "moment property residual {}", (lhs - rhs).abs());
        }
    }

    #[test]
    fn moduli_commute() {
        // {|w_i|^2, |w_j|^2} = 0: contract tensor with gradients of |w|^2
        let mut rng = Rng64::seed_from_u64(12);
        let n = 4;
        let w = random_spin_vector(n, &mut rng);
        let t = zak_tensor(&w);
        for i in 0..n {
            for j in 0..n {
                // grad |w_i|^2: dx_i -> 2 x_i, dy_i -> 2 y_i
                let mut acc = 0.0;
                let gi = [(i, 2.0 * w.w[i].re), (n + i, 2.0 * w.w[i].im)];
                let gjv = [(j, 2.0 * w.w[j].re), (n + j, 2.0 * w.w[j].im)];
                for &(a, fa) in &gi {
                    for &(b, fb) in &gjv {
                        acc += fa * t.mat[(a, b)] * fb;
                    }
                }
                assert!(acc.abs() < 1e-13);
            }
        }
    }
}
