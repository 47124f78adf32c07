//! Randomized property suites behind the `verify` subcommand.
//!
//! Each suite evaluates the invariants of one module over seeded random
//! sweeps and reports the largest violation per property. Sweeps are
//! parallelized over the sample index with one deterministic stream per
//! index, so reports do not depend on the thread count.

use crate::cmat::{cr, CMat, CVec, C64, RMat};
use crate::double::{extended_tensor_jets, free_flow, DoublePoint, ExtJetPoint, ExtLabel, FlowGenerator};
use crate::redpoisson::{
    collective_bracket, contract_reduced, invariant_algebra_bracket, invariant_bracket_via_tensor,
    lax_check, reduced_tensor, reduced_tensor_jets, trace_involution_residual, RedJetPoint, RedLabel,
};
use crate::reduction::{gauge_fix_plus, normal_form_d, slice_point_s1, SlicePoint};
use crate::sample::{self, Rng64};
use crate::spins::{jacobiator_max, moment_b, symplectic_form, zak_tensor, zak_tensor_jets, SpinVector};
use rand::Rng as _;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Zakrzewski,
    Double,
    Reduction,
    ReducedBracket,
    Lax,
    InvariantAlgebra,
    Limits,
}

impl Suite {
    pub fn parse(name: &str) -> Option<Suite> {
        match name {
            "zakrzewski" => Some(Suite::Zakrzewski),
            "double" => Some(Suite::Double),
            "reduction" => Some(Suite::Reduction),
            "reduced-bracket" => Some(Suite::ReducedBracket),
            "lax" => Some(Suite::Lax),
            "invariant-algebra" => Some(Suite::InvariantAlgebra),
            "limits" => Some(Suite::Limits),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Zakrzewski => "zakrzewski",
            Suite::Double => "double",
            Suite::Reduction => "reduction",
            Suite::ReducedBracket => "reduced-bracket",
            Suite::Lax => "lax",
            Suite::InvariantAlgebra => "invariant-algebra",
            Suite::Limits => "limits",
        }
    }

    pub fn all() -> [Suite; 7] {
        [
            Suite::Zakrzewski,
            Suite::Double,
            Suite::Reduction,
            Suite::ReducedBracket,
            Suite::Lax,
            Suite::InvariantAlgebra,
            Suite::Limits,
        ]
    }
}

#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub name: String,
    pub max_violation: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub properties: Vec<PropertyReport>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.properties.iter().all(|p| p.pass)
    }
}

fn prop(name: &str, max_violation: f64, threshold: f64) -> PropertyReport {
    PropertyReport { name: name.to_string(), max_violation, threshold, pass: max_violation < threshold }
}

/// Max of a per-sample violation over deterministic parallel streams.
fn sweep(seed: u64, samples: usize, f: impl Fn(&mut Rng64) -> f64 + Sync) -> f64 {
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample::stream(seed, i);
            f(&mut rng)
        })
        .reduce(|| 0.0, f64::max)
}

pub fn run_suite(suite: Suite, seed: u64, samples: usize) -> SuiteReport {
    let properties = if samples == 0 {
        Vec::new()
    } else {
        match suite {
            Suite::Zakrzewski => zakrzewski_props(seed, samples),
            Suite::Double => double_props(seed, samples),
            Suite::Reduction => reduction_props(seed, samples),
            Suite::ReducedBracket => reduced_bracket_props(seed, samples),
            Suite::Lax => lax_props(seed, samples),
            Suite::InvariantAlgebra => invariant_algebra_props(seed, samples),
            Suite::Limits => limits_props(seed, samples),
        }
    };
    SuiteReport { suite: suite.name(), seed, samples, properties }
}

fn rand_dim(rng: &mut Rng64, max: usize) -> usize {
    1 + (rng.gen::<u64>() as usize) % max
}

fn zakrzewski_props(seed: u64, samples: usize) -> Vec<PropertyReport> {
    let jac = sweep(seed, samples, |rng| {
        let n = rand_dim(rng, 4);
        let w = sample::random_cvec(n, rng);
        jacobiator_max(&zak_tensor_jets(&w))
    });
    let moment = sweep(seed ^ 1, samples, |rng| {
        let n = rand_dim(rng, 5);
        let w = sample::random_spin_vector(n, rng);
        let b = moment_b(&w);
        let lhs = &b * &b.adjoint();
        let rhs = CMat::identity(n).add_outer(cr(1.0), &w.w, &w.w);
        (&lhs - &rhs).max_abs()
    });
    let inverse_pair = sweep(seed ^ 2, samples, |rng| {
        let n = rand_dim(rng, 4);
        let w = sample::random_spin_vector(n, rng);
        let om = symplectic_form(&w);
        let p = zak_tensor(&w);
        om.mul(&p.mat).sub(&RMat::identity(2 * n)).max_abs()
    });
    let covariance = sweep(seed ^ 3, samples, |rng| {
        let n = rand_dim(rng, 4);
        let w = sample::random_spin_vector(n, rng);
        let g = sample::random_unitary(n, rng);
        let xi = sample::random_cvec(n, rng);
        let eta = sample::random_cvec(n, rng);
        covariance_residual(&w, &g, &xi, &eta)
    });
    let moment_gen = sweep(seed ^ 4, samples, |rng| {
        let n = rand_dim(rng, 4);
        let w = sample::random_spin_vector(n, rng);
        let xi = sample::random_cvec(n, rng);
        let x = sample::random_hermitian(n, rng).scale(crate::cmat::I);
        moment_generation_residual(&w, &xi, &x)
    });
    let moduli = sweep(seed ^ 5, samples, |rng| {
        let n = rand_dim(rng, 4);
        let w = sample::random_spin_vector(n, rng);
        let t = zak_tensor(&w);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let gi = [(i, 2.0 * w.w[i].re), (n + i, 2.0 * w.w[i].im)];
                let gj = [(j, 2.0 * w.w[j].re), (n + j, 2.0 * w.w[j].im)];
                let mut acc = 0.0;
                for &(a, fa) in &gi {
                    for &(b, fb) in &gj {
                        acc += fa * t.mat[(a, b)] * fb;
                    }
                }
                worst = worst.max(acc.abs());
            }
        }
        worst
    });
    vec![
        prop("jacobi identity of the spin tensor", jac, 1e-8),
        prop("moment factorization b b^dag = 1 + w w^dag", moment, 1e-13),
        prop("symplectic form inverts the tensor", inverse_pair, 1e-10),
        prop("unitary action is Poisson", covariance, 1e-10),
        prop("moment map generates the action", moment_gen, 1e-10),
        prop("moduli Poisson-commute", moduli, 1e-13),
    ]
}

/// Residual of the covariance identity of the spin bracket under the
/// unitary action.
pub fn covariance_residual(w: &SpinVector, g: &CMat, xi: &[C64], eta: &[C64]) -> f64 {
    let eval = |w: &SpinVector, xi: &[C64], eta: &[C64]| -> f64 {
        crate::cmat::cdot(xi, &crate::spins::ham_vec_field(w, eta)).im
    };
    let gw = SpinVector::new(g.mul_vec(&w.w));
    let lhs = eval(&gw, xi, eta);
    let gxi = g.adjoint().mul_vec(xi);
    let geta = g.adjoint().mul_vec(eta);
    let mid = eval(w, &gxi, &geta);
    let dp2 = crate::linalg::split_b(&CMat::outer(&g.mul_vec(&w.w), eta));
    let dp1_r = crate::linalg::split_b(&(&CMat::outer(&w.w, xi) * g));
    let conj = &(&g.adjoint() * &dp2) * g;
    let last = -crate::linalg::pairing(&dp1_r, &conj);
    (lhs - mid - last).abs()
}

/// Residual of the defining property of the group-valued moment map on
/// linear spin functions.
pub fn moment_generation_residual(w: &SpinVector, xi: &[C64], x: &CMat) -> f64 {
    use crate::jet::Jet;
    let n = w.n();
    let dim = 2 * n;
    let lhs = crate::cmat::cdot(xi, &x.mul_vec(&w.w)).im;
    let wj: Vec<Jet> = (0..n).map(|i| Jet::cvar(w.w[i], i, n + i, dim)).collect();
    let mut gj = vec![Jet::re(1.0); n + 1];
    for j in (0..n).rev() {
        gj[j] = &gj[j + 1] + &(&wj[j] * &wj[j].conj()).real_part();
    }
    let tensor = zak_tensor(w);
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
            let mut acc = C64::new(0.0, 0.0);
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
    let b = moment_b(w);
    let rhs = (&(x * &fb) * &b.inv_upper()).trace().im;
    (lhs - rhs).abs()
}

fn double_props(seed: u64, samples: usize) -> Vec<PropertyReport> {
    let sym = sweep(seed, samples.max(1), |rng| {
        let n = rand_dim(rng, 4);
        let g = sample::random_unitary(n, rng);
        let b = sample::random_upper_positive(n, rng);
        // unit trace scale keeps the absolute rounding threshold meaningful
        let l = &b * &b.adjoint();
        let c = n as f64 / l.trace().re;
        let l = l.scale(cr(c));
        let v: Vec<CVec> = (0..2)
            .map(|_| sample::random_cvec(n, rng).iter().map(|z| z * c.sqrt()).collect())
            .collect();
        let pt = ExtJetPoint::plain(&g, &l, &v);
        let mut labels = Vec::new();
        for i in 0..n {
            for j in 0..n {
                labels.push(ExtLabel::G { i, j, conj: false });
                labels.push(ExtLabel::L { i, j });
            }
        }
        for a in 0..2 {
            for i in 0..n {
                labels.push(ExtLabel::V { alpha: a, i, conj: false });
            }
        }
        let mut worst: f64 = 0.0;
        for &a in &labels {
            for &b in &labels {
                let ab = pt.jet(a);
                let _ = ab;
                let ab = pt.bracket(a, b).v;
                let ba = pt.bracket(b, a).v;
                worst = worst.max((ab + ba).norm());
                // reality compatibility
                let conj_pair = pt.bracket(conj_label(a), conj_label(b)).v;
                worst = worst.max((ab.conj() - conj_pair).norm());
            }
        }
        worst
    });
    let jac = sweep(seed ^ 1, (samples / 2).max(1), |rng| {
        let n = 2;
        let g = sample::random_unitary(n, rng);
        let b = sample::random_upper_positive(n, rng);
        let l = &b * &b.adjoint();
        let v: Vec<CVec> = (0..2).map(|_| sample::random_cvec(n, rng)).collect();
        jacobiator_max(&extended_tensor_jets(&g, &l, &v))
    });
    let flow = sweep(seed ^ 2, (samples / 4).max(1), |rng| {
        let n = 3;
        let g = sample::random_unitary(n, rng);
        let b = sample::random_upper_positive(n, rng);
        let pt = DoublePoint::new(g, b).unwrap();
        let w = sample::random_spin_block(n, 2, rng);
        let v: Vec<CVec> = (0..2).map(|_| sample::random_cvec(n, rng)).collect();
        let mut worst: f64 = 0.0;
        for t in [2.5, 10.0] {
            let (moved, _) = free_flow(&pt, &w, FlowGenerator::TracePower(2), t).unwrap();
            worst = worst.max(moved.g_r.unitary_deviation());
            for k in 0..3 {
                for a in 0..2 {
                    for be in 0..2 {
                        let before = crate::cmat::cdot(&v[be], &pt.l.pow(k).mul_vec(&v[a]));
                        let after = crate::cmat::cdot(&v[be], &moved.l.pow(k).mul_vec(&v[a]));
                        worst = worst.max((before - after).norm() / (1.0 + before.norm()));
                    }
                }
            }
        }
        worst
    });
    vec![
        prop("structure functions antisymmetric and real-compatible", sym, 1e-13),
        prop("jacobi identity of the extended tensor", jac, 1e-9),
        prop("free flow preserves invariants and unitarity", flow, 1e-11),
    ]
}

fn conj_label(l: ExtLabel) -> ExtLabel {
    match l {
        ExtLabel::G { i, j, conj } => ExtLabel::G { i, j, conj: !conj },
        ExtLabel::L { i, j } => ExtLabel::L { i: j, j: i },
        ExtLabel::V { alpha, i, conj } => ExtLabel::V { alpha, i, conj: !conj },
    }
}

fn reduction_props(seed: u64, samples: usize) -> Vec<PropertyReport> {
    let constraint = sweep(seed, samples, |rng| {
        let gamma = 0.5;
        let mut worst: f64 = 0.0;
        // one-spin normal form
        let y = sample::random_normal_form_y(3, gamma, 0.8, rng);
        if let Ok(dp) = normal_form_d(&y, 2, gamma) {
            worst = worst.max(dp.constraint_residual());
            if let Ok(sp) = crate::reduction::dressed_to_slice(&dp) {
                worst = worst.max(sp.moment_residual().unwrap_or(f64::INFINITY) / (2.0 * gamma).exp());
            }
        }
        // generic chart point
        if let Ok(sp) = sample::random_slice_point(3, 2, gamma, rng) {
            worst = worst.max(sp.as_dressed().constraint_residual() / (1.0 + sp.l().max_abs()));
            worst = worst.max(sp.moment_residual().unwrap_or(f64::INFINITY) / (2.0 * gamma).exp());
        }
        // slice coordinates
        if let Ok(coords) = sample::random_s1_coords(2, 2, gamma, rng) {
            if let Ok(dp) = slice_point_s1(&coords) {
                worst = worst.max(dp.constraint_residual() / (1.0 + dp.l.max_abs()));
            }
        }
        worst
    });
    let invertibility = sweep(seed ^ 1, samples, |rng| {
        let sp = match sample::random_slice_point(3, 3, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        let mut acc = sp.l().clone();
        let mut min_eig = f64::INFINITY;
        for a in 0..3 {
            acc = acc.add_outer(cr(1.0), &sp.v[a], &sp.v[a]);
            let (vals, _) = crate::linalg::eig_hermitian(&acc).unwrap();
            min_eig = min_eig.min(*vals.last().unwrap());
        }
        if min_eig > 0.0 {
            0.0
        } else {
            -min_eig
        }
    });
    let gauge = sweep(seed ^ 2, samples, |rng| {
        let sp = match sample::random_slice_point(3, 2, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        let fixed = gauge_fix_plus(&sp.q, &sp.v, sp.gamma).unwrap();
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for i in 0..3 {
                worst = worst.max((fixed.v[a][i] - sp.v[a][i]).norm());
            }
        }
        for k in 0..3 {
            worst = worst.max((fixed.tr_l_power(k) - sp.tr_l_power(k)).abs() / (1.0 + sp.tr_l_power(k).abs()));
            for a in 0..2 {
                for b in 0..2 {
                    let x = sp.invariant(k, a, b);
                    let y = fixed.invariant(k, a, b);
                    worst = worst.max((x - y).norm() / (1.0 + x.norm()));
                }
            }
        }
        worst
    });
    let chart_p_free = sweep(seed ^ 3, samples, |rng| {
        let gamma = 0.45;
        let q = sample::random_regular_angles(3, rng);
        let w = match sample::random_phi_constrained_block(3, 2, gamma, rng) {
            Ok(w) => w,
            Err(_) => return f64::INFINITY,
        };
        let mut worst: f64 = 0.0;
        for p0 in [-0.5, 0.0, 0.8] {
            let p = vec![p0, 0.2 + p0, -0.1 + p0];
            match crate::reduction::chart_qpw_forward(&q, &p, &w, gamma) {
                Ok(dp) => worst = worst.max(dp.constraint_residual() / (1.0 + dp.l.max_abs())),
                Err(_) => return f64::INFINITY,
            }
        }
        worst
    });
    vec![
        prop("constructed points satisfy the moment constraint", constraint, 1e-10),
        prop("partial dressed sums stay positive definite", invertibility, 1e-15),
        prop("gauge fixing is idempotent and invariant-preserving", gauge, 1e-12),
        prop("chart residual independent of the diagonal momenta", chart_p_free, 1e-10),
    ]
}

fn reduced_bracket_props(seed: u64, samples: usize) -> Vec<PropertyReport> {
    let flow = sweep(seed, samples, |rng| {
        let n = 2 + (rng.gen::<u64>() % 2) as usize;
        let sp = match sample::random_slice_point(n, 2, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        flow_residual(&sp)
    });
    let jac = sweep(seed ^ 1, (samples / 5).max(1), |rng| {
        let sp = match sample::random_slice_point(2, 2, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        jacobiator_max(&reduced_tensor_jets(&sp))
    });
    let reality = sweep(seed ^ 2, samples, |rng| {
        let sp = match sample::random_slice_point(2, 2, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        let pt = RedJetPoint::new(&sp, false);
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for e in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let lhs = pt
                            .bracket(
                                RedLabel::V { alpha: e, i: j, conj: true },
                                RedLabel::V { alpha: a, i, conj: false },
                            )
                            .v;
                        let rhs = pt
                            .bracket(
                                RedLabel::V { alpha: e, i: j, conj: false },
                                RedLabel::V { alpha: a, i, conj: true },
                            )
                            .v
                            .conj();
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        worst.max(reduced_tensor(&sp).mat.antisymmetry_deviation())
    });
    let weight = sweep(seed ^ 3, samples, |rng| {
        let sp = match sample::random_slice_point(2, 2, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        let lambda: Vec<f64> = (0..2).map(|_| 0.85 + 0.3 * rng.gen::<f64>()).collect();
        let scaled: Vec<CVec> = sp
            .v
            .iter()
            .map(|vc| (0..2).map(|i| vc[i] * lambda[i]).collect())
            .collect();
        let sp2 = match SlicePoint::new(sp.q.clone(), scaled, sp.gamma) {
            Ok(sp2) => sp2,
            Err(_) => return 0.0,
        };
        let p1 = RedJetPoint::new(&sp, false);
        let p2 = RedJetPoint::new(&sp2, false);
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for g in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let b1 = p1
                            .bracket(
                                RedLabel::V { alpha: a, i, conj: false },
                                RedLabel::V { alpha: g, i: j, conj: true },
                            )
                            .v;
                        let b2 = p2
                            .bracket(
                                RedLabel::V { alpha: a, i, conj: false },
                                RedLabel::V { alpha: g, i: j, conj: true },
                            )
                            .v;
                        worst = worst.max((b2 - b1 * cr(lambda[i] * lambda[j])).norm() / (1.0 + b2.norm()));
                    }
                }
            }
        }
        worst
    });
    vec![
        prop("reduced bracket generates the equations of motion", flow, 1e-10),
        prop("jacobi identity of the reduced tensor", jac, 1e-8),
        prop("reality and antisymmetry of the reduced structure", reality, 1e-13),
        prop("weight homogeneity under spin rescaling", weight, 1e-10),
    ]
}

/// Rescale the spins of a slice point so that `tr L = 2`, keeping every
/// slice property; absolute residual thresholds then compare states of a
/// common scale.
pub fn normalize_scale(sp: &SlicePoint) -> SlicePoint {
    let c = (2.0 / sp.l().trace().re).sqrt();
    let v: Vec<CVec> = sp
        .v
        .iter()
        .map(|vc| vc.iter().map(|z| z * c).collect())
        .collect();
    SlicePoint::new(sp.q.clone(), v, sp.gamma).expect("rescaled slice point stays valid")
}

/// Deviation between the reduced-bracket flow of the trace Hamiltonian and
/// the closed-form right-hand side.
pub fn flow_residual(sp: &SlicePoint) -> f64 {
    let n = sp.n();
    let d = sp.d();
    let pt = RedJetPoint::new(sp, false);
    let rhs = match crate::dynamics::eom_rhs(sp) {
        Ok(r) => r,
        Err(_) => return f64::INFINITY,
    };
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                for be in 0..d {
                    acc += pt
                        .bracket(
                            RedLabel::V { alpha: a, i, conj: false },
                            RedLabel::V { alpha: be, i: k, conj: false },
                        )
                        .v
                        * sp.v[be][k].conj();
                    acc += pt
                        .bracket(
                            RedLabel::V { alpha: a, i, conj: false },
                            RedLabel::V { alpha: be, i: k, conj: true },
                        )
                        .v
                        * sp.v[be][k];
                }
            }
            worst = worst.max((acc - rhs.vdot[a][i]).norm() / (1.0 + acc.norm()));
        }
    }
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            for be in 0..d {
                acc += pt.bracket(RedLabel::Q(i), RedLabel::V { alpha: be, i: k, conj: false }).v
                    * sp.v[be][k].conj();
                acc += pt.bracket(RedLabel::Q(i), RedLabel::V { alpha: be, i: k, conj: true }).v
                    * sp.v[be][k];
            }
        }
        worst = worst.max((acc - cr(rhs.qdot[i])).norm() / (1.0 + acc.norm()));
    }
    worst
}

fn lax_props(seed: u64, samples: usize) -> Vec<PropertyReport> {
    let ru = sweep(seed, samples, |rng| {
        let sp = match sample::random_slice_point(2, 2, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        let sp = normalize_scale(&sp);
        lax_check(&sp).unwrap_or(f64::INFINITY)
    });
    let invol = sweep(seed ^ 1, samples, |rng| {
        let sp = match sample::random_slice_point(2, 2, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        let sp = normalize_scale(&sp);
        trace_involution_residual(&sp, 3)
    });
    let coll = sweep(seed ^ 2, (samples / 2).max(1), |rng| {
        let sp = match sample::random_slice_point(3, 2, 0.5, rng) {
            Ok(sp) => sp,
            Err(_) => return f64::INFINITY,
        };
        let pt = RedJetPoint::new(&sp, true);
        let tensor = reduced_tensor(&sp);
        let fjet = |i: usize, j: usize| {
            let mut acc = crate::jet::Jet::re(0.0);
            for a in 0..2 {
                acc = &acc + &(&pt.vj(a, i) * &pt.vj(a, j).conj());
            }
            acc
        };
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let closed = collective_bracket(&sp, i, j, k, l).unwrap();
                        let assembled = contract_reduced(&tensor, &fjet(i, j), &fjet(k, l));
                        worst = worst.max((closed - assembled).norm() / (1.0 + closed.norm()));
                    }
                }
            }
        }
        // and the two-cotangent kernel on the diagonal
        let sinh_m2 = 1.0 / sp.gamma.sinh().powi(2);
        for j in 0..3 {
            for k in 0..3 {
                if j == k {
                    continue;
                }
                let z = collective_bracket(&sp, j, j, k, k).unwrap();
                let half = 0.5 * (sp.q[j] - sp.q[k]);
                let expect = (sp.f()[(j, k)] * sp.f()[(k, j)]).re * 2.0 * (half.cos() / half.sin())
                    / (1.0 + sinh_m2 * half.sin().powi(2));
                worst = worst.max((z - cr(expect)).norm() / (1.0 + expect.abs()));
            }
        }
        worst
    });
    vec![
        prop("quadratic bracket identity for the Lax matrix", ru, 1e-9),
        prop("trace Hamiltonians in involution", invol, 1e-9),
        prop("collective-spin bracket closed form", coll, 1e-10),
    ]
}

fn invariant_algebra_props(seed: u64, samples: usize) -> Vec<PropertyReport> {
    let closed = sweep(seed, samples, |rng| {
        let n = 2;
        let g = sample::random_unitary(n, rng);
        let b = sample::random_upper_positive(n, rng);
        let l = &b * &b.adjoint();
        let v: Vec<CVec> = (0..2).map(|_| sample::random_cvec(n, rng)).collect();
        let mut worst: f64 = 0.0;
        for m in 0..=2usize {
            for nn in 0..=2usize {
                for al in 0..2 {
                    for be in 0..2 {
                        for ga in 0..2 {
                            for ep in 0..2 {
                                let c1 = invariant_algebra_bracket(&l, &v, m, nn, al, be, ga, ep);
                                let c2 = invariant_bracket_via_tensor(&g, &l, &v, m, nn, al, be, ga, ep);
                                worst = worst.max((c1 - c2).norm() / (1.0 + c1.norm()));
                            }
                        }
                    }
                }
            }
        }
        worst
    });
    let fbr = sweep(seed ^ 1, samples, |rng| {
        use crate::redpoisson::fbrackets::{fsp_f, fsp_fsp, via_tensor, FSpec};
        let n = 2;
        let g = sample::random_unitary(n, rng);
        let b = sample::random_upper_positive(n, rng);
        let l = &b * &b.adjoint();
        let v: Vec<CVec> = (0..2).map(|_| sample::random_cvec(n, rng)).collect();
        let mut worst: f64 = 0.0;
        for m in 1..=2usize {
            for nn in 1..=2usize {
                let o = via_tensor(&g, &l, &v, &FSpec { m, pair: None }, &FSpec { m: nn, pair: None });
                worst = worst.max(o.norm());
                for al in 0..2 {
                    for be in 0..2 {
                        let c = fsp_f(&g, &v, m, nn, al, be);
                        let o = via_tensor(
                            &g,
                            &l,
                            &v,
                            &FSpec { m, pair: Some((al, be)) },
                            &FSpec { m: nn, pair: None },
                        );
                        worst = worst.max((c - o).norm() / (1.0 + c.norm()));
                        for ga in 0..2 {
                            for ep in 0..2 {
                                let c = fsp_fsp(&g, &l, &v, m, nn, al, be, ga, ep);
                                let o = via_tensor(
                                    &g,
                                    &l,
                                    &v,
                                    &FSpec { m, pair: Some((al, be)) },
                                    &FSpec { m: nn, pair: Some((ga, ep)) },
                                );
                                worst = worst.max((c - o).norm() / (1.0 + c.norm()));
                            }
                        }
                    }
                }
            }
        }
        worst
    });
    vec![
        prop("invariant algebra closed form against the tensor", closed, 1e-9),
        prop("spectral-function brackets against the tensor", fbr, 1e-9),
    ]
}

fn limits_props(seed: u64, samples: usize) -> Vec<PropertyReport> {
    let gh = sweep(seed, (samples / 5).max(1), |rng| {
        let n = 3;
        let q = sample::random_regular_angles(n, rng);
        let p: Vec<f64> = (0..n).map(|_| 0.6 * sample::normal(rng)).collect();
        let w = sample::random_spin_block(n, 2, rng);
        match crate::limits::gh_limit_check(&q, &p, &w, &[1e-2, 1e-3], 0.5) {
            Ok(rows) => {
                let ratio = rows[0].abs_err / rows[1].abs_err;
                if (5.0..=20.0).contains(&ratio) {
                    0.0
                } else {
                    (ratio - 12.5).abs()
                }
            }
            Err(_) => f64::INFINITY,
        }
    });
    let row_norm = sweep(seed ^ 1, samples, |rng| {
        let w = sample::random_spin_block(3, 2, rng);
        match crate::limits::normalize_rows(&w, 0.5) {
            Ok(wn) => (0..3)
                .map(|j| {
                    let total: f64 = wn.vecs().iter().map(|sv| sv.w[j].norm_sqr()).sum();
                    (total - 1.0).abs()
                })
                .fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        }
    });
    let sympl = sweep(seed ^ 2, (samples / 5).max(1), |rng| {
        let w = match crate::limits::normalize_rows(&sample::random_spin_block(3, 2, rng), 0.5) {
            Ok(w) => w,
            Err(_) => return f64::INFINITY,
        };
        let d1 = crate::limits::gh_symplectic_deviation(&w, 1e-2);
        let d2 = crate::limits::gh_symplectic_deviation(&w, 1e-3);
        let ratio = d1 / d2;
        if (5.0..=20.0).contains(&ratio) {
            0.0
        } else {
            (ratio - 12.5).abs()
        }
    });
    let rank_one = sweep(seed ^ 3, samples, |rng| {
        let q = sample::random_regular_angles(3, rng);
        let v: Vec<CVec> = vec![(0..3).map(|_| cr(0.5 + rng.gen::<f64>())).collect()];
        let sp = match SlicePoint::new(q, v, 0.5) {
            Ok(sp) => sp,
            Err(_) => return 0.0,
        };
        let f = sp.f();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst
                    .max((f[(i, j)] * f[(j, i)] - f[(i, i)] * f[(j, j)]).norm() / (1.0 + f.max_abs().powi(2)));
            }
        }
        worst
    });
    vec![
        prop("nonrelativistic limit error shrinks linearly", gh, 1e-9),
        prop("limit row constraint imposed exactly", row_norm, 1e-10),
        prop("rescaled symplectic form converges linearly", sympl, 1e-9),
        prop("rank-one factorization of the single-spin kernel", rank_one, 1e-14),
    ]
}
