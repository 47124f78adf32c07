//! Equations of motion on the gauge slice, two independent solvers, and
//! dynamical consistency checks.

use crate::cmat::{cr, CMat, CVec, C64};
use crate::double::FlowGenerator;
use crate::error::{Error, Result};
use crate::linalg::{continue_frame, expm, EigenFrame, REGULARITY_MARGIN};
use crate::reduction::{collective_spin, gauge_fix_plus, min_angle_gap, SlicePoint, COLLISION_MARGIN};

/// State on the gauge slice; identical data to a slice point.
pub type GaugeState = SlicePoint;

/// Maximal Runge-Kutta step accepted by [`rk4_integrate`].
pub const MAX_RK4_STEP: f64 = 1e-2;

/// Complex cotangent.
pub fn cot(z: C64) -> C64 {
    z.cos() / z.sin()
}

/// The trigonometric potential `V(x) = cot(x) - cot(x - i gamma)`.
///
/// Rejects arguments within `1e-12` of the real lattice `pi Z`, where the
/// first cotangent blows up.
pub fn potential_v(x: C64, gamma: f64) -> Result<C64> {
    let pi = std::f64::consts::PI;
    let re_dist = (x.re / pi - (x.re / pi).round()).abs() * pi;
    let dist = re_dist.hypot(x.im);
    if dist < 1e-12 {
        return Err(Error::PotentialPole { dist });
    }
    Ok(cot(x) - cot(x - C64::new(0.0, gamma)))
}

/// Right-hand side of the gauge-fixed equations of motion.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub qdot: Vec<f64>,
    pub vdot: Vec<CVec>,
}

/// Raw evaluation on `(q, v)` data; used by the integrator stages.
pub fn eom_rhs_raw(q: &[f64], v: &[CVec], gamma: f64) -> Result<Rhs> {
    let n = q.len();
    let d = v.len();
    let gap = min_angle_gap(q);
    if gap <= COLLISION_MARGIN {
        return Err(Error::Collision { gap, margin: COLLISION_MARGIN });
    }
    let f = collective_spin(v, n);
    let u: Vec<C64> = (0..n).map(|i| v.iter().map(|vc| vc[i]).sum()).collect();
    let qdot: Vec<f64> = (0..n).map(|j| 2.0 * f[(j, j)].re).collect();
    // potential values V((q_l - q_j)/2) for all pairs
    let mut pot = CMat::zeros(n, n);
    for l in 0..n {
        for j in 0..n {
            if l != j {
                pot[(l, j)] = potential_v(cr(0.5 * (q[l] - q[j])), gamma)?;
            }
        }
    }
    // i eta_j = (1/2) sum_{l != j} (U_l / U_j) [F_jl V(q_lj/2) + F_lj V(q_jl/2)]
    let mut i_eta = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..n {
            if l == j {
                continue;
            }
            acc += u[l] / u[j] * (f[(j, l)] * pot[(l, j)] + f[(l, j)] * pot[(j, l)]);
        }
        i_eta[j] = acc * 0.5;
    }
    let vdot: Vec<CVec> = (0..d)
        .map(|a| {
            (0..n)
                .map(|j| {
                    let mut acc = i_eta[j] * v[a][j];
                    for l in 0..n {
                        if l != j {
                            acc -= f[(j, l)] * v[a][l] * pot[(l, j)];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(Rhs { qdot, vdot })
}

pub fn eom_rhs(s: &GaugeState) -> Result<Rhs> {
    eom_rhs_raw(&s.q, &s.v, s.gamma)
}

/// The same vector field assembled through the matrix
/// `K_kl = F_kl [cot(q_kl / 2) - cot(q_kl / 2 + i gamma)]` plus the diagonal
/// gauge compensator; kept as a cross-check of [`eom_rhs`].
pub fn eom_rhs_kform(q: &[f64], v: &[CVec], gamma: f64) -> Result<Rhs> {
    let n = q.len();
    let f = collective_spin(v, n);
    let u: Vec<C64> = (0..n).map(|i| v.iter().map(|vc| vc[i]).sum()).collect();
    let mut k = CMat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let half = cr(0.5 * (q[a] - q[b]));
                k[(a, b)] = f[(a, b)] * (cot(half) - cot(half + C64::new(0.0, gamma)));
            }
        }
    }
    // diagonal compensator determined by reality of d/dt U_j; since
    // conj(K_jl) = -K_lj this is purely imaginary
    let mut z = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..n {
            if l != j {
                acc += (k[(j, l)] + k[(l, j)]) * u[l];
            }
        }
        z[j] = -acc * 0.5 / u[j];
    }
    let qdot: Vec<f64> = (0..n).map(|j| 2.0 * f[(j, j)].re).collect();
    let vdot: Vec<CVec> = (0..v.len())
        .map(|a| {
            (0..n)
                .map(|j| {
                    let mut acc = z[j] * v[a][j];
                    for l in 0..n {
                        if l != j {
                            acc += k[(j, l)] * v[a][l];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(Rhs { qdot, vdot })
}

/// Why an integration stopped before its horizon.
#[derive(Clone, Debug)]
pub enum AbortReason {
    Collision { t: f64, gap: f64 },
    InvalidState { t: f64, what: String },
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::Collision { t, gap } => write!(f, "collision at t = {t}: gap {gap:.3e}"),
            AbortReason::InvalidState { t, what } => write!(f, "invalid state at t = {t}: {what}"),
        }
    }
}

/// Time-stamped sequence of slice states with gauge-invariant observables.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<GaugeState>,
    pub gamma: f64,
    pub abort: Option<AbortReason>,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.samples[0].n()
    }

    pub fn d(&self) -> usize {
        self.samples[0].d()
    }

    /// Relative drift of `tr L^k` over the run.
    pub fn tr_drift(&self, k: usize) -> f64 {
        let base = self.samples[0].tr_l_power(k);
        self.samples
            .iter()
            .map(|s| (s.tr_l_power(k) - base).abs())
            .fold(0.0, f64::max)
            / base.abs().max(1e-300)
    }

    /// Drift of the spin invariant relative to the largest Lax scale.
    pub fn invariant_drift(&self, k: usize, alpha: usize, beta: usize) -> f64 {
        let base = self.samples[0].invariant(k, alpha, beta);
        let scale = base.norm().max(self.samples[0].tr_l_power(k).abs());
        self.samples
            .iter()
            .map(|s| (s.invariant(k, alpha, beta) - base).norm())
            .fold(0.0, f64::max)
            / scale.max(1e-300)
    }

    /// Relative drift of the conserved velocity sum `sum_j qdot_j`.
    pub fn sum_qdot_drift(&self) -> f64 {
        let val = |s: &GaugeState| 2.0 * s.f().trace().re;
        let base = val(&self.samples[0]);
        self.samples.iter().map(|s| (val(s) - base).abs()).fold(0.0, f64::max) / base.abs().max(1e-300)
    }

    pub fn min_qdot(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| (0..s.n()).map(move |j| 2.0 * s.f()[(j, j)].re))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_im_u(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.u().iter().map(|z| z.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest full moment map residual over the samples.
    pub fn max_moment_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            worst = worst.max(s.moment_residual()?);
        }
        Ok(worst)
    }
}

fn wrap_angle(x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mut y = (x + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI;
    if y <= -std::f64::consts::PI {
        y = std::f64::consts::PI;
    }
    y
}

/// Classical fourth-order Runge-Kutta on the gauge-fixed equations of
/// motion. Angles are wrapped to `(-pi, pi]`; observables are recorded
/// every `sample_every` steps. On a dynamical abort the trajectory built
/// so far is returned with the reason attached.
pub fn rk4_integrate(s0: &GaugeState, h: f64, t_end: f64, sample_every: usize) -> Result<Trajectory> {
    if !(h > 0.0) || h > MAX_RK4_STEP {
        return Err(Error::StepSize { h, max: MAX_RK4_STEP });
    }
    if sample_every == 0 {
        return Err(Error::InvalidParameter("sample_every must be positive".into()));
    }
    let gamma = s0.gamma;
    let steps = ((t_end / h) - 1e-9).ceil().max(0.0) as usize;
    let mut q = s0.q.clone();
    let mut v = s0.v.clone();
    let mut traj = Trajectory {
        times: vec![0.0],
        samples: vec![s0.clone()],
        gamma,
        abort: None,
    };
    let n = q.len();
    let d = v.len();
    let add_state = |q: &[f64], v: &[CVec], k: &Rhs, w: f64| -> (Vec<f64>, Vec<CVec>) {
        let q2: Vec<f64> = (0..n).map(|i| q[i] + w * k.qdot[i]).collect();
        let v2: Vec<CVec> = (0..d)
            .map(|a| (0..n).map(|i| v[a][i] + cr(w) * k.vdot[a][i]).collect())
            .collect();
        (q2, v2)
    };
    for m in 0..steps {
        let t = m as f64 * h;
        let k1 = match eom_rhs_raw(&q, &v, gamma) {
            Ok(r) => r,
            Err(e) => {
                traj.abort = Some(abort_from(e, t));
                return Ok(traj);
            }
        };
        let (q2, v2) = add_state(&q, &v, &k1, 0.5 * h);
        let k2 = match eom_rhs_raw(&q2, &v2, gamma) {
            Ok(r) => r,
            Err(e) => {
                traj.abort = Some(abort_from(e, t));
                return Ok(traj);
            }
        };
        let (q3, v3) = add_state(&q, &v, &k2, 0.5 * h);
        let k3 = match eom_rhs_raw(&q3, &v3, gamma) {
            Ok(r) => r,
            Err(e) => {
                traj.abort = Some(abort_from(e, t));
                return Ok(traj);
            }
        };
        let (q4, v4) = add_state(&q, &v, &k3, h);
        let k4 = match eom_rhs_raw(&q4, &v4, gamma) {
            Ok(r) => r,
            Err(e) => {
                traj.abort = Some(abort_from(e, t));
                return Ok(traj);
            }
        };
        for i in 0..n {
            q[i] += h / 6.0 * (k1.qdot[i] + 2.0 * k2.qdot[i] + 2.0 * k3.qdot[i] + k4.qdot[i]);
            q[i] = wrap_angle(q[i]);
        }
        for a in 0..d {
            for i in 0..n {
                v[a][i] += cr(h / 6.0)
                    * (k1.vdot[a][i]
                        + cr(2.0) * k2.vdot[a][i]
                        + cr(2.0) * k3.vdot[a][i]
                        + k4.vdot[a][i]);
            }
        }
        let t_next = (m + 1) as f64 * h;
        if (m + 1) % sample_every == 0 || m + 1 == steps {
            match SlicePoint::new(q.clone(), v.clone(), gamma) {
                Ok(sp) => {
                    traj.times.push(t_next);
                    traj.samples.push(sp);
                }
                Err(e) => {
                    traj.abort = Some(abort_from(e, t_next));
                    return Ok(traj);
                }
            }
        }
    }
    Ok(traj)
}

fn abort_from(e: Error, t: f64) -> AbortReason {
    match e {
        Error::Collision { gap, .. } | Error::NotRegular { gap, .. } => AbortReason::Collision { t, gap },
        other => AbortReason::InvalidState { t, what: other.to_string() },
    }
}

/// Exact solution of the reduced flow by continued diagonalization of the
/// unreduced solution curve `exp(t V(L_0)) Q_0`, followed by the canonical
/// gauge fixing.
pub fn exact_solve_generator(s0: &GaugeState, gen: FlowGenerator, t: f64) -> Result<GaugeState> {
    if t == 0.0 {
        return Ok(s0.clone());
    }
    let n = s0.n();
    let vel = gen.velocity(s0.l());
    let rho = vel.norm_inf().max(1e-12);
    // keep the per-step unitary rotation below 0.05 rad for the continuation
    let steps = ((t.abs() * rho) / 0.05).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let e = expm(&vel.scale(cr(dt)));
    let mut g = s0.q_unitary();
    let mut frame = EigenFrame { phases: s0.q.clone(), vectors: CMat::identity(n) };
    for _ in 0..steps {
        g = &e * &g;
        frame = continue_frame(&g, &frame, REGULARITY_MARGIN)?;
    }
    let eta = frame.vectors.adjoint();
    let q_t: Vec<f64> = frame.phases.iter().map(|&x| wrap_angle(x)).collect();
    let v_t: Vec<CVec> = s0.v.iter().map(|vc| eta.mul_vec(vc)).collect();
    let out = gauge_fix_plus(&q_t, &v_t, s0.gamma)?;
    debug_assert!({
        // the transported Lax matrix must agree with the one rebuilt from (Q, v)
        let l_t = &(&eta * s0.l()) * &frame.vectors;
        let spectrum_ok = (l_t.trace().re - out.l().trace().re).abs() < 1e-8 * (1.0 + l_t.trace().re.abs());
        spectrum_ok
    });
    Ok(out)
}

/// Exact solution for the flow of the coupling-weighted trace Hamiltonian,
/// whose projection is the spin Ruijsenaars-Schneider dynamics.
pub fn exact_solve(s0: &GaugeState, t: f64) -> Result<GaugeState> {
    exact_solve_generator(s0, FlowGenerator::RsHamiltonian { gamma: s0.gamma }, t)
}

/// Largest deviation between the central-difference acceleration and the
/// closed-form Newton force along a uniformly sampled trajectory.
pub fn newton_residual(traj: &Trajectory) -> Result<f64> {
    let m = traj.samples.len();
    if m < 5 {
        return Err(Error::TooFewSamples { got: m, need: 5 });
    }
    let n = traj.n();
    let dt = traj.times[1] - traj.times[0];
    for w in traj.times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidParameter("newton residual needs uniform samples".into()));
        }
    }
    // unwrap the angle histories
    let mut qs: Vec<Vec<f64>> = vec![vec![0.0; m]; n];
    for i in 0..n {
        qs[i][0] = traj.samples[0].q[i];
        for s in 1..m {
            let delta = wrap_angle(traj.samples[s].q[i] - traj.samples[s - 1].q[i]);
            qs[i][s] = qs[i][s - 1] + delta;
        }
    }
    let sinh_m2 = 1.0 / traj.gamma.sinh().powi(2);
    let mut worst: f64 = 0.0;
    for s in 1..m - 1 {
        let sp = &traj.samples[s];
        let f = sp.f();
        for i in 0..n {
            let qdd = (qs[i][s + 1] - 2.0 * qs[i][s] + qs[i][s - 1]) / (dt * dt);
            let mut force = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let half = 0.5 * (qs[i][s] - qs[j][s]);
                let fij2 = (f[(i, j)] * f[(j, i)]).re;
                force += fij2 * 2.0 * (half.cos() / half.sin()) / (1.0 + sinh_m2 * half.sin().powi(2));
            }
            worst = worst.max((0.5 * qdd - force).abs());
        }
    }
    Ok(worst)
}

/// Linear motion on the torus factor of the slice coordinates under the
/// `k`-th spectral Hamiltonian: only the `Gamma` angles rotate, with
/// frequencies `y_j^k`.
pub fn action_angle_flow(coords: &crate::reduction::S1Coords, k: usize, t: f64) -> crate::reduction::S1Coords {
    let mut out = coords.clone();
    for j in 0..coords.n() {
        out.big_gamma[j] = wrap_angle(coords.big_gamma[j] + coords.y[j].powi(k as i32) * t);
    }
    out
}
