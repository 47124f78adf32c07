//! The reduced Poisson structure on the gauge slice, collective-spin and
//! Lax brackets, the invariant algebra, and the degenerate-integrability
//! rank test.

use crate::cmat::{cr, CMat, CVec, C64, I, PoissonTensor, RMat};
use crate::double::{ExtJetPoint, ExtLabel};
use crate::error::{Error, Result};
use crate::jet::{JMat, Jet};
use crate::reduction::{s1_extract, slice_point_s1, S1Coords, SlicePoint};

fn d(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

fn sgn(a: usize, b: usize) -> f64 {
    if a > b {
        1.0
    } else if a < b {
        -1.0
    } else {
        0.0
    }
}

/// Coordinate label on the gauge slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RedLabel {
    Q(usize),
    V { alpha: usize, i: usize, conj: bool },
}

impl RedLabel {
    fn conjugated(self) -> RedLabel {
        match self {
            RedLabel::Q(i) => RedLabel::Q(i),
            RedLabel::V { alpha, i, conj } => RedLabel::V { alpha, i, conj: !conj },
        }
    }
}

/// Jet-valued slice point carrying the auxiliary matrices of the reduced
/// bracket. The real coordinates are `(q, Re v, Im v)`.
pub struct RedJetPoint {
    pub n: usize,
    pub d: usize,
    v: Vec<Jet>,
    u: Vec<Jet>,
    phase: Vec<Jet>,
    pub l: Vec<Jet>,
    s0: Vec<Jet>,
    s: Vec<Jet>,
    r: Vec<Vec<Jet>>,
}

impl RedJetPoint {
    pub fn new(sp: &SlicePoint, seeded: bool) -> Self {
        let n = sp.n();
        let dd = sp.d();
        let dim = if seeded { n + 2 * n * dd } else { 0 };
        let q: Vec<Jet> = (0..n)
            .map(|i| if seeded { Jet::var(sp.q[i], i, dim) } else { Jet::re(sp.q[i]) })
            .collect();
        let v: Vec<Jet> = (0..dd * n)
            .map(|idx| {
                let (a, i) = (idx / n, idx % n);
                if seeded {
                    let base = n + 2 * (a * n + i);
                    Jet::cvar(sp.v[a][i], base, base + 1, dim)
                } else {
                    Jet::c(sp.v[a][i])
                }
            })
            .collect();
        let u: Vec<Jet> = (0..n)
            .map(|i| (0..dd).fold(Jet::re(0.0), |acc, a| &acc + &v[a * n + i]))
            .collect();
        let phase: Vec<Jet> = q.iter().map(exp_i).collect();
        drop(q);
        let e2g = (2.0 * sp.gamma).exp();
        let mut l = vec![Jet::re(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut f = Jet::re(0.0);
                for a in 0..dd {
                    f = &f + &(&v[a * n + i] * &v[a * n + j].conj());
                }
                let denom = &(&phase[j] * &phase[i].conj()).scale(cr(e2g)) - &Jet::re(1.0);
                l[i * n + j] = &f / &denom;
            }
        }
        // S0, R^alpha, S
        let mut s0 = vec![Jet::re(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Jet::re(0.0);
                for mu in 0..dd {
                    for nu in 0..dd {
                        if mu != nu {
                            acc = &acc + &(&v[nu * n + i] * &v[mu * n + j]).scale(cr(0.25 * sgn(nu, mu)));
                        }
                    }
                }
                for mu in 0..dd {
                    acc = &acc - &(&v[mu * n + i] * &v[mu * n + j].conj()).scale(cr(0.25));
                    // inner sum over mu < nu collapsed: each mu occurs (d - 1 - mu) times
                    let times = (dd - 1 - mu) as f64;
                    acc = &acc - &(&v[mu * n + i] * &v[mu * n + j].conj()).scale(cr(0.5 * times));
                }
                acc = &acc - &l[i * n + j].scale(cr(dd as f64 / 2.0));
                s0[i * n + j] = acc;
            }
        }
        let s: Vec<Jet> = s0.iter().map(|z| &*z - &z.conj()).collect();
        let mut r = Vec::with_capacity(dd);
        for alpha in 0..dd {
            let mut m = vec![Jet::re(0.0); n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = l[i * n + j].clone();
                    for kappa in 0..dd {
                        if kappa != alpha {
                            acc = &acc
                                - &(&v[kappa * n + i] * &v[alpha * n + j]).scale(cr(0.5 * sgn(kappa, alpha)));
                        }
                    }
                    acc = &acc + &(&v[alpha * n + i] * &v[alpha * n + j].conj()).scale(cr(0.5));
                    for kappa in 0..alpha {
                        acc = &acc + &(&v[kappa * n + i] * &v[kappa * n + j].conj());
                    }
                    m[i * n + j] = acc;
                }
            }
            r.push(m);
        }
        RedJetPoint { n, d: dd, v, u, phase, l, s0, s, r }
    }

    pub fn vj(&self, alpha: usize, i: usize) -> Jet {
        self.v[alpha * self.n + i].clone()
    }

    pub fn lj(&self, i: usize, j: usize) -> Jet {
        self.l[i * self.n + j].clone()
    }

    pub fn s0j(&self, i: usize, j: usize) -> Jet {
        self.s0[i * self.n + j].clone()
    }

    fn red2(&self, a: usize, i: usize, g: usize, j: usize) -> Jet {
        let n = self.n;
        let vai = self.vj(a, i);
        let vaj = self.vj(a, j);
        let vgi = self.vj(g, i);
        let vgj = self.vj(g, j);
        let mut acc = (&vaj * &vgi).scale(I * cr(sgn(g, a)));
        let rat_a = &vai / &self.u[i];
        let rat_g = &vgj / &self.u[j];
        acc = &acc + &(&(&rat_a * &rat_g) * &self.s[i * n + j]).scale(I);
        acc = &acc + &(&rat_g * &self.r[a][i * n + j]).scale(I);
        acc = &acc - &(&rat_a * &self.r[g][j * n + i]).scale(I);
        if i != j {
            let qi = &self.phase[i];
            let qj = &self.phase[j];
            let ratio = &(qi + qj) / &(qi - qj);
            let mut inner = (&vaj * &vgi).scale(cr(2.0));
            inner = &inner + &(&vai * &vgj);
            inner = &inner - &(&(&self.u[i] / &self.u[j]) * &(&vaj * &vgj));
            inner = &inner - &(&(&self.u[j] / &self.u[i]) * &(&vai * &vgi));
            acc = &acc + &(&ratio * &inner).scale(I * cr(0.5));
        }
        acc
    }

    fn red3(&self, a: usize, i: usize, e: usize, j: usize) -> Jet {
        let n = self.n;
        let vai = self.vj(a, i);
        let vej_c = self.vj(e, j).conj();
        let mut acc = Jet::re(0.0);
        if a == e {
            let mut inner = &vai * &vej_c;
            for kappa in 0..a {
                inner = &inner + &(&self.vj(kappa, i) * &self.vj(kappa, j).conj()).scale(cr(2.0));
            }
            inner = &inner + &self.l[i * n + j].scale(cr(2.0));
            acc = &acc + &inner.scale(I);
        }
        if i != j {
            let qi = &self.phase[i];
            let qj = &self.phase[j];
            let ratio = &(qi + qj) / &(qi - qj);
            let mut inner = -&(&vai * &vej_c);
            inner = &inner + &(&(&self.u[i] / &self.u[j]) * &(&self.vj(a, j) * &vej_c));
            inner = &inner + &(&(&self.u[j] / &self.u[i]) * &(&vai * &self.vj(e, i).conj()));
            acc = &acc + &(&ratio * &inner).scale(I * cr(0.5));
        }
        let rat_a = &vai / &self.u[i];
        let rat_e = &vej_c / &self.u[j];
        acc = &acc - &(&(&rat_a * &rat_e) * &self.s[i * n + j]).scale(I);
        acc = &acc - &(&rat_e * &self.r[a][i * n + j]).scale(I);
        acc = &acc - &(&rat_a * &self.r[e][j * n + i].conj()).scale(I);
        acc
    }

    /// Complex reduced bracket of two coordinate labels.
    pub fn bracket(&self, a: RedLabel, b: RedLabel) -> Jet {
        use RedLabel::*;
        match (a, b) {
            (Q(_), Q(_)) => Jet::re(0.0),
            (V { alpha, i, conj }, Q(j)) => {
                if i == j {
                    let z = self.vj(alpha, i);
                    let z = if conj { z.conj() } else { z };
                    -&z
                } else {
                    Jet::re(0.0)
                }
            }
            (q @ Q(_), v @ V { .. }) => -&self.bracket(v, q),
            (V { alpha, i, conj: false }, V { alpha: g, i: j, conj: false }) => self.red2(alpha, i, g, j),
            (V { alpha, i, conj: false }, V { alpha: e, i: j, conj: true }) => self.red3(alpha, i, e, j),
            (V { alpha, i, conj: true }, V { alpha: g, i: j, conj: true }) => self.red2(alpha, i, g, j).conj(),
            (V { alpha, i, conj: true }, V { alpha: e, i: j, conj: false }) => self.red3(alpha, i, e, j).conj(),
        }
    }

    /// Bracket of real parts/imaginary parts of two labels.
    pub fn real_bracket(&self, a: RedLabel, a_im: bool, b: RedLabel, b_im: bool) -> Jet {
        let pp = self.bracket(a, b);
        let pc = self.bracket(a, b.conjugated());
        let cp = self.bracket(a.conjugated(), b);
        let cc = self.bracket(a.conjugated(), b.conjugated());
        match (a_im, b_im) {
            (false, false) => (&(&pp + &pc) + &(&cp + &cc)).scale(cr(0.25)),
            (false, true) => (&(&pp - &pc) + &(&cp - &cc)).scale(cr(0.25) / I),
            (true, false) => (&(&pp + &pc) - &(&cp + &cc)).scale(cr(0.25) / I),
            (true, true) => (&(&pp - &pc) - &(&cp - &cc)).scale(cr(-0.25)),
        }
    }
}

fn exp_i(theta: &Jet) -> Jet {
    let c = theta.v.re.cos();
    let s = theta.v.re.sin();
    let factor = C64::new(-s, c);
    Jet { v: C64::new(c, s), d: theta.d.iter().map(|z| z * factor).collect() }
}

/// Closed-form value of one reduced bracket at a slice point.
pub fn reduced_structure(sp: &SlicePoint, a: RedLabel, b: RedLabel) -> C64 {
    RedJetPoint::new(sp, false).bracket(a, b).v
}

/// Real coordinate labels of the reduced tensor: `(q, Re v, Im v)`.
pub fn reduced_real_labels(n: usize, d: usize) -> Vec<(RedLabel, bool)> {
    let mut out: Vec<(RedLabel, bool)> = (0..n).map(|i| (RedLabel::Q(i), false)).collect();
    for a in 0..d {
        for i in 0..n {
            out.push((RedLabel::V { alpha: a, i, conj: false }, false));
            out.push((RedLabel::V { alpha: a, i, conj: false }, true));
        }
    }
    out
}

/// Antisymmetric real matrix of the reduced structure at a slice point.
pub fn reduced_tensor(sp: &SlicePoint) -> PoissonTensor {
    let pt = RedJetPoint::new(sp, false);
    let labels = reduced_real_labels(sp.n(), sp.d());
    let dim = labels.len();
    let mut mat = RMat::zeros(dim, dim);
    for (ai, &(la, ima)) in labels.iter().enumerate() {
        for (bi, &(lb, imb)) in labels.iter().enumerate().skip(ai + 1) {
            let val = pt.real_bracket(la, ima, lb, imb).v;
            debug_assert!(val.im.abs() < 1e-9 * (1.0 + val.norm()));
            mat[(ai, bi)] = val.re;
            mat[(bi, ai)] = -val.re;
        }
    }
    let names = labels
        .iter()
        .map(|&(l, im)| match l {
            RedLabel::Q(i) => format!("q_{}", i + 1),
            RedLabel::V { alpha, i, .. } => {
                format!("{} v({})_{}", if im { "Im" } else { "Re" }, alpha + 1, i + 1)
            }
        })
        .collect();
    PoissonTensor { labels: names, mat }
}

/// Jet-valued reduced tensor for the Jacobi sweep.
pub fn reduced_tensor_jets(sp: &SlicePoint) -> Vec<Vec<Jet>> {
    let pt = RedJetPoint::new(sp, true);
    let labels = reduced_real_labels(sp.n(), sp.d());
    let dim = labels.len();
    let mut out = vec![vec![Jet::re(0.0); dim]; dim];
    for (ai, &(la, ima)) in labels.iter().enumerate() {
        for (bi, &(lb, imb)) in labels.iter().enumerate().skip(ai + 1) {
            let val = pt.real_bracket(la, ima, lb, imb).real_part();
            out[bi][ai] = -&val;
            out[ai][bi] = val;
        }
    }
    out
}

/// The auxiliary matrices entering the reduced bracket.
#[derive(Clone, Debug)]
pub struct AuxMatrices {
    pub s0: CMat,
    pub r: Vec<CMat>,
    pub s: CMat,
}

pub fn aux_matrices(sp: &SlicePoint) -> AuxMatrices {
    let pt = RedJetPoint::new(sp, false);
    let n = sp.n();
    let s0 = CMat::from_fn(n, n, |i, j| pt.s0j(i, j).v);
    let s = CMat::from_fn(n, n, |i, j| pt.s[i * n + j].v);
    let r = (0..sp.d())
        .map(|a| CMat::from_fn(n, n, |i, j| pt.r[a][i * n + j].v))
        .collect();
    AuxMatrices { s0, r, s }
}

/// Closed-form reduced bracket of two collective-spin entries
/// `{F_ij, F_kl}`.
pub fn collective_bracket(sp: &SlicePoint, i: usize, j: usize, k: usize, l: usize) -> Result<C64> {
    let n = sp.n();
    if i >= n || j >= n || k >= n || l >= n {
        return Err(Error::IndexOutOfRange(format!("({i},{j},{k},{l}) for n={n}")));
    }
    let gamma = sp.gamma;
    let aux = aux_matrices(sp);
    let f = sp.f();
    let u = sp.u();
    let q = &sp.q;
    let ct = |a: usize, b: usize| -> C64 {
        if a == b {
            cr(0.0)
        } else {
            let half = 0.5 * (q[a] - q[b]);
            cr(half.cos() / half.sin())
        }
    };
    let ctg = |a: usize, b: usize| -> C64 {
        crate::dynamics::cot(cr(0.5 * (q[a] - q[b])) - C64::new(0.0, gamma))
    };
    let su = |a: usize, b: usize| -> C64 { aux.s[(a, b)] / (u[a] * u[b]) };
    let mut acc = I * (su(i, k) - su(l, j) + su(k, j) - su(i, l)) * f[(i, j)] * f[(k, l)];
    acc += cr(0.5) * (ct(i, k) + ct(j, l) + ct(k, j) + ct(l, i)) * f[(i, j)] * f[(k, l)];
    acc += (ct(i, k) + ct(j, l) - ctg(j, k) + ctg(l, i)) * f[(i, l)] * f[(k, j)];
    acc += cr(0.5) * (ct(k, i) - ctg(l, i)) * (u[k] / u[i]) * f[(i, j)] * f[(i, l)];
    acc += cr(0.5) * (ct(j, k) + ctg(l, j)) * (u[k] / u[j]) * f[(i, j)] * f[(j, l)];
    acc += cr(0.5) * (ct(k, i) + ctg(j, k)) * (u[i] / u[k]) * f[(k, j)] * f[(k, l)];
    acc += cr(0.5) * (ct(i, l) - ctg(j, l)) * (u[i] / u[l]) * f[(l, j)] * f[(k, l)];
    acc += cr(0.5) * (ct(i, l) - ctg(i, k)) * (u[l] / u[i]) * f[(i, j)] * f[(k, i)];
    acc += cr(0.5) * (ct(l, j) + ctg(j, k)) * (u[l] / u[j]) * f[(i, j)] * f[(k, j)];
    acc += cr(0.5) * (ct(j, k) + ctg(k, i)) * (u[j] / u[k]) * f[(i, k)] * f[(k, l)];
    acc += cr(0.5) * (ct(l, j) - ctg(l, i)) * (u[j] / u[l]) * f[(i, l)] * f[(k, l)];
    Ok(acc)
}

/// Leibniz assembly of a bracket of two functions given by jets over the
/// slice coordinates, contracted through the reduced tensor.
pub fn contract_reduced(tensor: &PoissonTensor, fa: &Jet, fb: &Jet) -> C64 {
    let dim = tensor.dim();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..dim {
        if fa.d[a].norm_sqr() == 0.0 {
            continue;
        }
        for b in 0..dim {
            let p = tensor.mat[(a, b)];
            if p == 0.0 {
                continue;
            }
            acc += fa.d[a] * cr(p) * fb.d[b];
        }
    }
    acc
}

/// Kronecker product with the row index pair `(i, k)` flattened as `i n + k`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let n = a.rows();
    let m = b.rows();
    CMat::from_fn(n * m, n * m, |r, c| {
        let (i, k) = (r / m, r % m);
        let (j, l) = (c / m, c % m);
        a[(i, j)] * b[(k, l)]
    })
}

fn elementary(n: usize, a: usize, b: usize) -> CMat {
    let mut e = CMat::zeros(n, n);
    e[(a, b)] = cr(1.0);
    e
}

/// The `r`, `s` and `t` matrices of the quadratic Lax bracket.
#[derive(Clone, Debug)]
pub struct LaxStructure {
    pub r12: CMat,
    pub s12: CMat,
    pub t12: CMat,
}

pub fn lax_structure(sp: &SlicePoint) -> LaxStructure {
    let n = sp.n();
    let aux = aux_matrices(sp);
    let u = sp.u();
    let qc: Vec<C64> = sp.q.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    let mut r12 = CMat::zeros(n * n, n * n);
    let mut s12 = CMat::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let qb_ratio = I * qc[b] / (qc[a] - qc[b]);
                let qa_ratio = I * qc[a] / (qc[a] - qc[b]);
                // r: E_aa (x) (E_bb - (U_b/U_a) E_ba) and -E_ab (x) ((U_a/U_b) E_bb - 2 E_ba)
                let mut right = elementary(n, b, b);
                right = &right - &elementary(n, b, a).scale(u[b] / u[a]);
                r12 = &r12 + &kron(&elementary(n, a, a), &right).scale(qb_ratio);
                let mut right2 = elementary(n, b, b).scale(u[a] / u[b]);
                right2 = &right2 - &elementary(n, b, a).scale(cr(2.0));
                r12 = &r12 - &kron(&elementary(n, a, b), &right2).scale(qa_ratio);
                // s: E_aa (x) ((U_b/U_a) E_ab - E_bb) and (U_a/U_b) E_ab (x) E_bb
                let mut sright = elementary(n, a, b).scale(u[b] / u[a]);
                sright = &sright - &elementary(n, b, b);
                s12 = &s12 + &kron(&elementary(n, a, a), &sright).scale(qa_ratio);
                s12 = &s12 + &kron(&elementary(n, a, b), &elementary(n, b, b)).scale(qa_ratio * u[a] / u[b]);
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            let w = I * aux.s[(a, b)] / (u[a] * u[b]);
            r12 = &r12 + &kron(&elementary(n, a, a), &elementary(n, b, b)).scale(w);
            s12 = &s12 - &kron(&elementary(n, a, a), &elementary(n, b, b)).scale(w);
        }
        // the diagonal tensor term carries the weight 1/2 in both matrices;
        // with equal weights the quadratic identity closes to rounding
        r12 = &r12 + &kron(&elementary(n, a, a), &elementary(n, a, a)).scale(I * cr(0.5));
        s12 = &s12 + &kron(&elementary(n, a, a), &elementary(n, a, a)).scale(I * cr(0.5));
    }
    let s21 = swap_legs(&s12, n);
    let t12 = &(&s21 - &s12) - &r12;
    LaxStructure { r12, s12, t12 }
}

fn swap_legs(x: &CMat, n: usize) -> CMat {
    CMat::from_fn(n * n, n * n, |r, c| {
        let (i, k) = (r / n, r % n);
        let (j, l) = (c / n, c % n);
        x[(k * n + i, l * n + j)]
    })
}

/// Residual of the quadratic bracket identity for the Lax matrix: the
/// Leibniz-assembled `{L_1, L_2}` minus its `r/s/t` form, in max norm.
pub fn lax_check(sp: &SlicePoint) -> Result<f64> {
    let n = sp.n();
    let pt = RedJetPoint::new(sp, true);
    let tensor = reduced_tensor(sp);
    let lx = lax_structure(sp);
    let l = sp.l();
    let l1 = kron(l, &CMat::identity(n));
    let l2 = kron(&CMat::identity(n), l);
    let lhs = CMat::from_fn(n * n, n * n, |r, c| {
        let (i, k) = (r / n, r % n);
        let (j, l_) = (c / n, c % n);
        contract_reduced(&tensor, &pt.lj(i, j), &pt.lj(k, l_))
    });
    let mut rhs = &(&lx.r12 * &l1) * &l2;
    rhs = &rhs + &(&(&l1 * &l2) * &lx.t12);
    rhs = &rhs - &(&(&l1 * &lx.s12.transpose_legs(n)) * &l2);
    rhs = &rhs + &(&(&l2 * &lx.s12) * &l1);
    Ok((&lhs - &rhs).max_abs())
}

trait LegSwap {
    fn transpose_legs(&self, n: usize) -> CMat;
}

impl LegSwap for CMat {
    fn transpose_legs(&self, n: usize) -> CMat {
        swap_legs(self, n)
    }
}

/// Involution residual `{tr L^j, tr L^k}` through the reduced tensor.
pub fn trace_involution_residual(sp: &SlicePoint, jmax: usize) -> f64 {
    let n = sp.n();
    let pt = RedJetPoint::new(sp, true);
    let tensor = reduced_tensor(sp);
    let mut lm = JMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            *lm.at_mut(i, j) = pt.lj(i, j);
        }
    }
    let mut traces: Vec<Jet> = Vec::new();
    let mut power = JMat::identity(n);
    for _ in 0..jmax {
        power = power.mul(&lm);
        let mut tr = Jet::re(0.0);
        for i in 0..n {
            tr = &tr + power.at(i, i);
        }
        traces.push(tr);
    }
    let mut worst: f64 = 0.0;
    for a in &traces {
        for b in &traces {
            worst = worst.max(contract_reduced(&tensor, a, b).norm());
        }
    }
    worst
}

/// Spin invariant `I^k_{alpha beta} = v(beta)^dagger L^k v(alpha)`.
pub fn invariants_i(l: &CMat, v: &[CVec], k: usize, alpha: usize, beta: usize) -> C64 {
    crate::cmat::cdot(&v[beta], &l.pow(k).mul_vec(&v[alpha]))
}

/// Closed-form Poisson bracket of two spin invariants on the extended
/// phase space.
pub fn invariant_algebra_bracket(
    l: &CMat,
    v: &[CVec],
    m_pow: usize,
    n_pow: usize,
    alpha: usize,
    beta: usize,
    gamma: usize,
    epsilon: usize,
) -> C64 {
    let ii = |k: usize, a: usize, b: usize| invariants_i(l, v, k, a, b);
    let mut acc = C64::new(0.0, 0.0);
    if alpha == epsilon {
        acc += cr(2.0) * I * ii(m_pow + n_pow + 1, gamma, beta);
    }
    if gamma == beta {
        acc -= cr(2.0) * I * ii(m_pow + n_pow + 1, alpha, epsilon);
    }
    acc += I * cr(d(alpha == epsilon) - d(gamma == beta)) * ii(m_pow, alpha, beta) * ii(n_pow, gamma, epsilon);
    if alpha == epsilon {
        for mu in 0..alpha {
            acc += cr(2.0) * I * ii(n_pow, gamma, mu) * ii(m_pow, mu, beta);
        }
    }
    if gamma == beta {
        for lam in 0..beta {
            acc -= cr(2.0) * I * ii(m_pow, alpha, lam) * ii(n_pow, lam, epsilon);
        }
    }
    acc += I * cr(sgn(gamma, alpha)) * ii(m_pow, gamma, beta) * ii(n_pow, alpha, epsilon);
    acc -= I * cr(sgn(epsilon, beta)) * ii(n_pow, gamma, beta) * ii(m_pow, alpha, epsilon);
    for b in 0..m_pow {
        acc += I * (ii(b, gamma, beta) * ii(m_pow + n_pow - b, alpha, epsilon)
            - ii(m_pow + n_pow - b, gamma, beta) * ii(b, alpha, epsilon));
    }
    for b in 0..n_pow {
        acc += I * (ii(b, gamma, beta) * ii(m_pow + n_pow - b, alpha, epsilon)
            - ii(m_pow + n_pow - b, gamma, beta) * ii(b, alpha, epsilon));
    }
    acc
}

/// Tensor-contracted oracle for the invariant brackets, through the
/// extended structure in the `(g, L, v)` coordinates.
pub fn invariant_bracket_via_tensor(
    g: &CMat,
    l: &CMat,
    v: &[CVec],
    m_pow: usize,
    n_pow: usize,
    alpha: usize,
    beta: usize,
    gamma: usize,
    epsilon: usize,
) -> C64 {
    let n = g.rows();
    let (pt, _) = ExtJetPoint::seeded(g, l, v);
    let tensor = crate::double::extended_tensor(g, l, v);
    let jet_i = |k: usize, a: usize, b: usize| -> Jet {
        let mut lm = JMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                *lm.at_mut(i, j) = pt.jet(ExtLabel::L { i, j });
            }
        }
        let mut pow = JMat::identity(n);
        for _ in 0..k {
            pow = pow.mul(&lm);
        }
        let mut acc = Jet::re(0.0);
        for i in 0..n {
            for j in 0..n {
                let vb = pt.jet(ExtLabel::V { alpha: b, i, conj: true });
                let va = pt.jet(ExtLabel::V { alpha: a, i: j, conj: false });
                acc = &acc + &(&(&vb * pow.at(i, j)) * &va);
            }
        }
        acc
    };
    let fa = jet_i(m_pow, alpha, beta);
    let fb = jet_i(n_pow, gamma, epsilon);
    contract_reduced(&tensor, &fa, &fb)
}

/// Closed forms for the unreduced brackets of the spectral functions
/// `f_m = tr g^m` and `f^{alpha beta}_m = v(beta)^dagger g^m v(alpha)`.
pub mod fbrackets {
    use super::*;

    pub fn f_f() -> C64 {
        C64::new(0.0, 0.0)
    }

    pub fn fsp_f(g: &CMat, v: &[CVec], m_pow: usize, n_pow: usize, alpha: usize, beta: usize) -> C64 {
        let fmn = crate::cmat::cdot(&v[beta], &g.pow(m_pow + n_pow).mul_vec(&v[alpha]));
        -cr(2.0 * n_pow as f64) * I * fmn
    }

    #[allow(clippy::too_many_arguments)]
    pub fn fsp_fsp(
        g: &CMat,
        l: &CMat,
        v: &[CVec],
        m_pow: usize,
        n_pow: usize,
        alpha: usize,
        beta: usize,
        gamma: usize,
        epsilon: usize,
    ) -> C64 {
        let f = |m: usize, a: usize, b: usize| crate::cmat::cdot(&v[b], &g.pow(m).mul_vec(&v[a]));
        let phi = |mu: usize, nu: usize, a: usize, c: usize| -> C64 {
            let mat = &(&g.pow(a) * l) * &g.pow(c);
            crate::cmat::cdot(&v[nu], &mat.mul_vec(&v[mu]))
        };
        let mut acc = C64::new(0.0, 0.0);
        for a in 1..=m_pow {
            acc += cr(2.0) * I * f(a, alpha, epsilon) * f(m_pow + n_pow - a, gamma, beta);
        }
        for a in 1..=n_pow {
            acc -= cr(2.0) * I * f(a, alpha, epsilon) * f(m_pow + n_pow - a, gamma, beta);
        }
        acc -= I * f(m_pow, alpha, epsilon) * f(n_pow, gamma, beta);
        acc += I * f(n_pow, alpha, epsilon) * f(m_pow, gamma, beta);
        acc += I * cr(sgn(gamma, alpha)) * f(n_pow, alpha, epsilon) * f(m_pow, gamma, beta);
        acc -= I * cr(sgn(epsilon, beta)) * f(m_pow, alpha, epsilon) * f(n_pow, gamma, beta);
        acc += I * cr(d(alpha == epsilon) - d(gamma == beta)) * f(m_pow, alpha, beta) * f(n_pow, gamma, epsilon);
        if alpha == epsilon {
            for mu in 0..alpha {
                acc += cr(2.0) * I * f(n_pow, gamma, mu) * f(m_pow, mu, beta);
            }
            acc += cr(2.0) * I * phi(gamma, beta, m_pow, n_pow);
        }
        if gamma == beta {
            for lam in 0..beta {
                acc -= cr(2.0) * I * f(m_pow, alpha, lam) * f(n_pow, lam, epsilon);
            }
            acc -= cr(2.0) * I * phi(alpha, epsilon, n_pow, m_pow);
        }
        acc
    }

    /// Tensor oracle for any pair of the spectral functions.
    pub fn via_tensor(
        g: &CMat,
        l: &CMat,
        v: &[CVec],
        fa: &FSpec,
        fb: &FSpec,
    ) -> C64 {
        let n = g.rows();
        let (pt, _) = ExtJetPoint::seeded(g, l, v);
        let tensor = crate::double::extended_tensor(g, l, v);
        let build = |spec: &FSpec| -> Jet {
            let mut gm = JMat::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    *gm.at_mut(i, j) = pt.jet(ExtLabel::G { i, j, conj: false });
                }
            }
            let mut pow = JMat::identity(n);
            for _ in 0..spec.m {
                pow = pow.mul(&gm);
            }
            match spec.pair {
                None => {
                    let mut acc = Jet::re(0.0);
                    for i in 0..n {
                        acc = &acc + pow.at(i, i);
                    }
                    acc
                }
                Some((alpha, beta)) => {
                    let mut acc = Jet::re(0.0);
                    for i in 0..n {
                        for j in 0..n {
                            let vb = pt.jet(ExtLabel::V { alpha: beta, i, conj: true });
                            let va = pt.jet(ExtLabel::V { alpha, i: j, conj: false });
                            acc = &acc + &(&(&vb * pow.at(i, j)) * &va);
                        }
                    }
                    acc
                }
            }
        };
        contract_reduced(&tensor, &build(fa), &build(fb))
    }

    /// Specification of a spectral function: a trace `f_m` (`pair = None`)
    /// or a spin-sandwiched power `f^{alpha beta}_m`.
    pub struct FSpec {
        pub m: usize,
        pub pair: Option<(usize, usize)>,
    }
}

/// Spin invariants evaluated at slice coordinates, in the fixed order of
/// the degenerate-integrability rank test.
pub fn s1_invariant_functions(coords: &S1Coords) -> Result<Vec<f64>> {
    let dp = slice_point_s1(coords)?;
    let n = coords.n();
    let dd = coords.d();
    let mut out = Vec::new();
    for k in 1..=n {
        out.push(dp.l.pow(k).trace().re);
    }
    for k in 1..=n {
        out.push(invariants_i(&dp.l, &dp.v, k, 0, 0).re);
    }
    for a in 1..dd - 1 {
        for k in 1..=n {
            let z = invariants_i(&dp.l, &dp.v, k, a, 0);
            out.push(z.re);
            out.push(z.im);
        }
    }
    for k in 1..=n {
        let z = invariants_i(&dp.l, &dp.v, k, dd - 1, 0);
        out.push(z.re);
        out.push(z.im);
    }
    Ok(out)
}

/// Numeric Jacobian rank of the invariant family against the slice
/// coordinates: returns `(rank_full, rank_hamiltonians)`.
pub fn jacobian_rank(coords: &S1Coords) -> Result<(usize, usize)> {
    // validate the coordinates up front
    let dp = slice_point_s1(coords)?;
    s1_extract(&dp)?;
    let n = coords.n();
    let flat = coords.flat();
    let dim = flat.len();
    let base = s1_invariant_functions(coords)?;
    let nf = base.len();
    let mut jac = RMat::zeros(nf, dim);
    for c in 0..dim {
        let h = 1e-6 * flat[c].abs().max(1.0);
        let mut plus = flat.clone();
        plus[c] += h;
        let mut minus = flat.clone();
        minus[c] -= h;
        let fp = s1_invariant_functions(&coords.from_flat(&plus))?;
        let fm = s1_invariant_functions(&coords.from_flat(&minus))?;
        for r in 0..nf {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    let rank_full = jac.rank(1e-7);
    let ham = RMat::from_fn(n, dim, |r, c| jac[(r, c)]);
    let rank_ham = ham.rank(1e-7);
    Ok((rank_full, rank_ham))
}

/// Greedy selection of `n` rows from the last-spin invariant block that
/// maximally extend the base family, reported as offsets into the
/// `(Re I^k_{d,1}, Im I^k_{d,1})` list.
pub fn select_extending_invariants(coords: &S1Coords) -> Result<Vec<usize>> {
    let n = coords.n();
    let flat = coords.flat();
    let dim = flat.len();
    let all = s1_invariant_functions(coords)?;
    let nf = all.len();
    let mut jac = RMat::zeros(nf, dim);
    for c in 0..dim {
        let h = 1e-6 * flat[c].abs().max(1.0);
        let mut plus = flat.clone();
        plus[c] += h;
        let mut minus = flat.clone();
        minus[c] -= h;
        let fp = s1_invariant_functions(&coords.from_flat(&plus))?;
        let fm = s1_invariant_functions(&coords.from_flat(&minus))?;
        for r in 0..nf {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    let base_rows = nf - 2 * n;
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..2 * n {
            if chosen.contains(&cand) {
                continue;
            }
            let mut rows: Vec<usize> = (0..base_rows).collect();
            rows.extend(chosen.iter().map(|&c| base_rows + c));
            rows.push(base_rows + cand);
            let sub = RMat::from_fn(rows.len(), dim, |r, c| jac[(rows[r], c)]);
            let sv = sub.singular_values();
            let smallest = sv.last().copied().unwrap_or(0.0);
            if best.map_or(true, |(_, s)| smallest > s) {
                best = Some((cand, smallest));
            }
        }
        chosen.push(best.expect("candidate set nonempty").0);
    }
    Ok(chosen)
}
