//! Degeneration checks: the scaling limit to the nonrelativistic spin
//! Sutherland (Gibbons-Hermsen) model and the single-spin reduction to the
//! spinless chiral model.

use crate::cmat::{cr, CMat, C64, RMat};
use crate::error::{Error, Result};
use crate::reduction::{b_plus_solve, SlicePoint};
use crate::spins::{symplectic_form, SpinBlock, SpinVector};

/// One row of the scaling-limit error table.
#[derive(Clone, Debug)]
pub struct GhRow {
    pub eps: f64,
    pub value: f64,
    pub target: f64,
    pub abs_err: f64,
}

/// Rescale the spin block so every row satisfies
/// `sum_alpha |w_j^alpha|^2 = 2 gamma`, the residual constraint of the
/// scaling limit.
pub fn normalize_rows(w: &SpinBlock, gamma: f64) -> Result<SpinBlock> {
    let n = w.n();
    let d = w.d();
    let mut vecs: Vec<Vec<C64>> = (0..d).map(|a| w.vec(a).w.clone()).collect();
    let all_zero = vecs.iter().all(|row| row.iter().all(|z| z.norm_sqr() == 0.0));
    if all_zero {
        // the fully decoupled case passes through untouched
        return Ok(w.clone());
    }
    for j in 0..n {
        let total: f64 = (0..d).map(|a| vecs[a][j].norm_sqr()).sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter(format!("spin row {j} vanishes in every copy")));
        }
        let s = (2.0 * gamma / total).sqrt();
        for row in vecs.iter_mut() {
            row[j] *= s;
        }
    }
    Ok(SpinBlock::new(vecs.into_iter().map(SpinVector::new).collect()))
}

/// The nonrelativistic spin Sutherland Hamiltonian
/// `H = tr(p^2)/2 + (1/32) sum_{i != j} |(w_i., w_j.)|^2 / sin^2((q_i - q_j)/2)`.
pub fn gh_hamiltonian(q: &[f64], p: &[f64], w: &SpinBlock) -> f64 {
    let n = q.len();
    let d = w.d();
    let mut h: f64 = p.iter().map(|x| x * x).sum::<f64>() * 0.5;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pairing: C64 = (0..d).map(|a| w.vec(a).w[i] * w.vec(a).w[j].conj()).sum();
            let s = (0.5 * (q[i] - q[j])).sin();
            h += pairing.norm_sqr() / (s * s) / 32.0;
        }
    }
    h
}

/// For each scale in `eps_list`, build the constrained point at coupling
/// `eps * gamma` from the scaled data `(q, eps p, sqrt(eps) W)` and compare
/// the second-order trace combination against the Sutherland Hamiltonian.
/// The input spin rows are first normalized to the limit constraint.
pub fn gh_limit_check(
    q: &[f64],
    p: &[f64],
    w: &SpinBlock,
    eps_list: &[f64],
    gamma: f64,
) -> Result<Vec<GhRow>> {
    let n = q.len();
    let w = normalize_rows(w, gamma)?;
    let target = gh_hamiltonian(q, p, &w);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let sqrt_eps = eps.sqrt();
        let w_eps = SpinBlock::new(
            w.vecs()
                .iter()
                .map(|sv| SpinVector::new(sv.w.iter().map(|z| z * sqrt_eps).collect()))
                .collect(),
        );
        let b_plus = b_plus_solve(q, &w_eps)?;
        let b_r = CMat::from_fn(n, n, |i, j| cr((eps * p[i]).exp()) * b_plus[(i, j)]);
        let l = &b_r * &b_r.adjoint();
        let l_inv = l.inverse();
        let value = (l.trace().re + l_inv.trace().re - 2.0 * n as f64) / (8.0 * eps * eps);
        rows.push(GhRow { eps, value, target, abs_err: (value - target).abs() });
    }
    Ok(rows)
}

/// Largest deviation of the rescaled spin symplectic form from its flat
/// limit at scale `eps`: the limit form is `(i/2) dw /\ dwbar` per copy.
/// Written in the unscaled spin coordinates, the rescaled pullback of the
/// form at `sqrt(eps) w` is exactly the matrix of the form at the scaled
/// point, so the deviation shrinks linearly with `eps`.
pub fn gh_symplectic_deviation(w: &SpinBlock, eps: f64) -> f64 {
    let n = w.n();
    let mut worst: f64 = 0.0;
    for sv in w.vecs() {
        let scaled = SpinVector::new(sv.w.iter().map(|z| z * eps.sqrt()).collect());
        let om = symplectic_form(&scaled);
        let mut flat = RMat::zeros(2 * n, 2 * n);
        for k in 0..n {
            flat[(k, n + k)] = 1.0;
            flat[(n + k, k)] = -1.0;
        }
        let mut dev: f64 = 0.0;
        for a in 0..2 * n {
            for b in 0..2 * n {
                dev = dev.max((om[(a, b)] - flat[(a, b)]).abs());
            }
        }
        worst = worst.max(dev);
    }
    worst
}

/// Darboux radial coordinates of the single-spin model: solve
/// `F_jj = e^{2 theta_j} prod_{i != j} [1 + sinh^2(gamma) / (1 + sin^2((q_i - q_j)/2))]^(1/2)`
/// for `theta`, and return the reduced Hamiltonian `sum_j F_jj`.
pub fn spinless_map(s: &SlicePoint) -> Result<(Vec<f64>, f64)> {
    if s.d() != 1 {
        return Err(Error::InvalidParameter(format!(
            "the spinless reduction needs d = 1, got d = {}",
            s.d()
        )));
    }
    let n = s.n();
    let sinh2 = s.gamma.sinh().powi(2);
    let mut theta = vec![0.0; n];
    for j in 0..n {
        let fjj = s.f()[(j, j)].re;
        let mut log_prod = 0.0;
        for i in 0..n {
            if i != j {
                let s2 = (0.5 * (s.q[i] - s.q[j])).sin().powi(2);
                log_prod += 0.5 * (1.0 + sinh2 / (1.0 + s2)).ln();
            }
        }
        theta[j] = 0.5 * (fjj.ln() - log_prod);
    }
    let h_rs = s.f().trace().re;
    Ok((theta, h_rs))
}

/// The spinless chiral Hamiltonian in the Darboux variables.
pub fn rs_hamiltonian(q: &[f64], theta: &[f64], gamma: f64) -> f64 {
    let n = q.len();
    let sinh2 = gamma.sinh().powi(2);
    let mut h = 0.0;
    for i in 0..n {
        let mut prod = 1.0;
        for j in 0..n {
            if j != i {
                let s2 = (0.5 * (q[i] - q[j])).sin().powi(2);
                prod *= (1.0 + sinh2 / (1.0 + s2)).sqrt();
            }
        }
        h += (2.0 * theta[i]).exp() * prod;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::c;
    use crate::jet::Jet;
    use crate::redpoisson::{contract_reduced, reduced_tensor};
    use crate::sample::{random_regular_angles, random_spin_block, Rng64};
    use rand::SeedableRng;

    fn random_d1_slice(n: usize, gamma: f64, rng: &mut Rng64) -> SlicePoint {
        // single-spin slice points: sample positive entries directly (the
        // gauge makes v(1) itself positive)
        loop {
            let q = random_regular_angles(n, rng);
            let v: Vec<crate::cmat::CVec> = vec![(0..n)
                .map(|_| c(0.35 + 0.4 * rand::Rng::gen::<f64>(rng), 0.0))
                .collect()];
            if let Ok(sp) = SlicePoint::new(q, v, gamma) {
                return sp;
            }
        }
    }

    #[test]
    fn gh_limit_degenerate_case() {
        // p = 0 and W = 0 rows cannot be normalized; use a tiny W instead
        // with p = 0: both sides reduce to the spin kernel which scales out
        let mut rng = Rng64::seed_from_u64(90);
        let n = 2;
        let q = random_regular_angles(n, &mut rng);
        let p = vec![0.0; n];
        let w = random_spin_block(n, 2, &mut rng);
        let rows = gh_limit_check(&q, &p, &w, &[1e-2, 1e-3], 0.4).unwrap();
        // errors must shrink roughly linearly
        let ratio = rows[0].abs_err / rows[1].abs_err;
        assert!(ratio > 5.0 && ratio < 20.0, "linear convergence ratio {ratio}");
    }

    #[test]
    fn gh_limit_trivial_case() {
        // no spins and no momenta: both sides vanish at every scale
        let mut rng = Rng64::seed_from_u64(96);
        let q = random_regular_angles(3, &mut rng);
        let p = vec![0.0; 3];
        let w = SpinBlock::zeros(3, 2);
        let rows = gh_limit_check(&q, &p, &w, &[1e-1, 1e-2, 1e-3], 0.5).unwrap();
        for row in rows {
            assert!(row.value.abs() < 1e-12, "trace side {}", row.value);
            assert!(row.target.abs() < 1e-15, "limit side {}", row.target);
        }
    }

    #[test]
    fn gh_limit_with_momentum() {
        let mut rng = Rng64::seed_from_u64(91);
        let n = 3;
        let q = random_regular_angles(n, &mut rng);
        let p: Vec<f64> = (0..n).map(|_| crate::sample::normal(&mut rng) * 0.7).collect();
        let w = random_spin_block(n, 2, &mut rng);
        let rows = gh_limit_check(&q, &p, &w, &[1e-2, 1e-3], 0.5).unwrap();
        let ratio = rows[0].abs_err / rows[1].abs_err;
        assert!(ratio > 5.0 && ratio < 20.0, "linear convergence ratio {ratio}");
        // row constraint imposed exactly
        let wn = normalize_rows(&w, 0.5).unwrap();
        for j in 0..n {
            let total: f64 = wn.vecs().iter().map(|sv| sv.w[j].norm_sqr()).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gh_symplectic_block_converges() {
        let mut rng = Rng64::seed_from_u64(92);
        let w = normalize_rows(&random_spin_block(3, 2, &mut rng), 0.5).unwrap();
        let d1 = gh_symplectic_deviation(&w, 1e-2);
        let d2 = gh_symplectic_deviation(&w, 1e-3);
        let ratio = d1 / d2;
        assert!(ratio > 5.0 && ratio < 20.0, "symplectic convergence ratio {ratio}");
    }

    #[test]
    fn rank_one_identity() {
        let mut rng = Rng64::seed_from_u64(93);
        let sp = random_d1_slice(3, 0.5, &mut rng);
        let f = sp.f();
        for i in 0..3 {
            for j in 0..3 {
                let lhs = f[(i, j)] * f[(j, i)];
                let rhs = f[(i, i)] * f[(j, j)];
                assert!((lhs - rhs).norm() < 1e-14 * (1.0 + rhs.norm()));
            }
        }
    }

    #[test]
    fn spinless_single_particle() {
        let gamma = 0.5;
        let v: Vec<crate::cmat::CVec> = vec![vec![c(0.9, 0.0)]];
        let sp = SlicePoint::new(vec![0.3], v, gamma).unwrap();
        let (theta, h) = spinless_map(&sp).unwrap();
        assert!((theta[0] - 0.5 * sp.f()[(0, 0)].re.ln()).abs() < 1e-14);
        assert!((h - sp.f()[(0, 0)].re).abs() < 1e-14);
        // d != 1 rejected
        let v2: Vec<crate::cmat::CVec> = vec![vec![c(0.9, 0.0)], vec![c(0.1, 0.0)]];
        let sp2 = SlicePoint::new(vec![0.3], v2, gamma).unwrap();
        assert!(spinless_map(&sp2).is_err());
    }

    #[test]
    fn darboux_pairs() {
        // {q_i, theta_j} = delta_ij through the reduced tensor and the chain rule
        let mut rng = Rng64::seed_from_u64(94);
        for _ in 0..5 {
            let sp = random_d1_slice(3, 0.5, &mut rng);
            let n = 3;
            let dim = n + 2 * n;
            let tensor = reduced_tensor(&sp);
            // jets of theta_j over the slice coordinates
            let qj: Vec<Jet> = (0..n).map(|i| Jet::var(sp.q[i], i, dim)).collect();
            let vj: Vec<Jet> = (0..n)
                .map(|i| Jet::cvar(sp.v[0][i], n + 2 * i, n + 2 * i + 1, dim))
                .collect();
            let sinh2 = sp.gamma.sinh().powi(2);
            let thetas: Vec<Jet> = (0..n)
                .map(|j| {
                    let fjj = (&vj[j] * &vj[j].conj()).real_part();
                    let mut acc = fjj.ln().scale(cr(0.5));
                    for i in 0..n {
                        if i != j {
                            let half = (&qj[i] - &qj[j]).scale(cr(0.5));
                            let s = sin_jet(&half);
                            let s2 = &s * &s;
                            let inner = &Jet::re(1.0) + &(&Jet::re(sinh2) / &(&Jet::re(1.0) + &s2));
                            acc = &acc - &inner.ln().scale(cr(0.25));
                        }
                    }
                    acc
                })
                .collect();
            for i in 0..n {
                let qi = Jet::var(sp.q[i], i, dim);
                for j in 0..n {
                    let br = contract_reduced(&tensor, &qi, &thetas[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((br - cr(expect)).norm() < 1e-8, "darboux ({i},{j}): {br}");
                }
            }
            // theta values agree with the closed-form inversion
            let (theta, h) = spinless_map(&sp).unwrap();
            for j in 0..n {
                assert!((theta[j] - thetas[j].v.re).abs() < 1e-12);
            }
            assert!((rs_hamiltonian(&sp.q, &theta, sp.gamma) - h).abs() < 1e-10 * (1.0 + h.abs()));
        }
    }

    fn sin_jet(x: &Jet) -> Jet {
        let c = x.v.re.cos();
        let s = x.v.re.sin();
        Jet { v: cr(s), d: x.d.iter().map(|z| z * c).collect() }
    }

    #[test]
    fn spinless_newton_consistency() {
        // the d = 1 flow satisfies the same Newton equation with the
        // rank-one factorization of the force coefficient
        let mut rng = Rng64::seed_from_u64(95);
        let sp = random_d1_slice(3, 0.5, &mut rng);
        let traj = crate::dynamics::rk4_integrate(&sp, 1e-4, 0.15, 1).unwrap();
        assert!(traj.abort.is_none());
        let res = crate::dynamics::newton_residual(&traj).unwrap();
        assert!(res < 1e-7, "d=1 newton residual {res}");
    }
}
