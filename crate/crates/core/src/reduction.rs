//! The extended phase space, moment map, constraint solving in both
//! parametrizations, gauge fixing, and the explicit normal-form
//! constructors on the eigenvalue-diagonal slice.

use crate::cmat::{cr, CMat, CVec, C64};
use crate::double::DoublePoint;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_upper, eig_hermitian, eig_unitary};
use crate::spins::{moment_b, torus_phi, SpinBlock, SpinVector};

/// Margin below which two particle angles count as colliding.
pub const COLLISION_MARGIN: f64 = 1e-6;

/// Relative positivity tolerance for accepting a candidate Lax matrix:
/// the smallest eigenvalue must exceed `1e-10 * tr L`.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Point of the unreduced extended phase space.
#[derive(Clone, Debug)]
pub struct ExtendedPoint {
    pub double: DoublePoint,
    pub spins: SpinBlock,
    pub gamma: f64,
}

/// Point labelled by `(g_r, L, v)` with the dressed spins `v`.
#[derive(Clone, Debug)]
pub struct DressedPoint {
    pub g_r: CMat,
    pub l: CMat,
    pub v: Vec<CVec>,
    pub gamma: f64,
}

impl DressedPoint {
    pub fn n(&self) -> usize {
        self.l.rows()
    }

    pub fn d(&self) -> usize {
        self.v.len()
    }

    /// Collective spin `F = sum_alpha v(alpha) v(alpha)^dagger`.
    pub fn collective(&self) -> CMat {
        collective_spin(&self.v, self.n())
    }

    /// Residual of the moment map constraint
    /// `e^{2 gamma} g^{-1} L g - L - F = 0`.
    pub fn constraint_residual(&self) -> f64 {
        let e2g = (2.0 * self.gamma).exp();
        let conj = &(&self.g_r.adjoint() * &self.l) * &self.g_r;
        let lhs = &conj.scale(cr(e2g)) - &self.l;
        (&lhs - &self.collective()).max_abs()
    }
}

pub fn collective_spin(v: &[CVec], n: usize) -> CMat {
    let mut f = CMat::zeros(n, n);
    for vc in v {
        f = f.add_outer(cr(1.0), vc, vc);
    }
    f
}

/// Gauge-slice point: regular diagonal `g_r = Q`, dressed spins with
/// positive column sums, and the Lax matrix rebuilt from `(Q, v)`.
#[derive(Clone, Debug)]
pub struct SlicePoint {
    pub q: Vec<f64>,
    pub v: Vec<CVec>,
    pub gamma: f64,
    l: CMat,
    f: CMat,
    u: Vec<C64>,
}

impl SlicePoint {
    pub fn new(q: Vec<f64>, v: Vec<CVec>, gamma: f64) -> Result<Self> {
        let n = q.len();
        let gap = min_angle_gap(&q);
        if gap <= COLLISION_MARGIN {
            return Err(Error::NotRegular { gap, margin: COLLISION_MARGIN });
        }
        let f = collective_spin(&v, n);
        let l = l_from_qv(&q, gamma, &v)?;
        let u: Vec<C64> = (0..n).map(|i| v.iter().map(|vc| vc[i]).sum()).collect();
        for (i, ui) in u.iter().enumerate() {
            if ui.re <= 0.0 || ui.im.abs() > 1e-6 * ui.re.max(1.0) {
                return Err(Error::ZeroColumnSum { index: i, modulus: ui.norm() });
            }
        }
        Ok(SlicePoint { q, v, gamma, l, f, u })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn d(&self) -> usize {
        self.v.len()
    }

    pub fn l(&self) -> &CMat {
        &self.l
    }

    pub fn f(&self) -> &CMat {
        &self.f
    }

    pub fn u(&self) -> &[C64] {
        &self.u
    }

    pub fn q_unitary(&self) -> CMat {
        CMat::diag(&self.q.iter().map(|&t| C64::from_polar(1.0, t)).collect::<Vec<_>>())
    }

    pub fn as_dressed(&self) -> DressedPoint {
        DressedPoint { g_r: self.q_unitary(), l: self.l.clone(), v: self.v.clone(), gamma: self.gamma }
    }

    /// Residual of the full moment map equation, evaluated through the
    /// reconstructed triangular factors and primary spins.
    pub fn moment_residual(&self) -> Result<f64> {
        let ext = self.to_extended()?;
        let lam = total_moment(&ext);
        let lhs = &lam * &lam.adjoint();
        let target = CMat::identity(self.n()).scale(cr((2.0 * self.gamma).exp()));
        Ok((&lhs - &target).max_abs())
    }

    /// Rebuild the unreduced data `(g_r, b_r, W)` behind the slice point.
    pub fn to_extended(&self) -> Result<ExtendedPoint> {
        let b_r = cholesky_upper(&self.l)?;
        let spins = primary_from_dressed(&b_r, &self.v)?;
        let double = DoublePoint::new(self.q_unitary(), b_r)?;
        Ok(ExtendedPoint { double, spins, gamma: self.gamma })
    }

    pub fn tr_l_power(&self, k: usize) -> f64 {
        self.l.pow(k).trace().re
    }

    pub fn invariant(&self, k: usize, alpha: usize, beta: usize) -> C64 {
        crate::cmat::cdot(&self.v[beta], &self.l.pow(k).mul_vec(&self.v[alpha]))
    }
}

pub fn min_angle_gap(q: &[f64]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let n = q.len();
    if n < 2 {
        return tau;
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let mut d = (q[i] - q[j]).rem_euclid(tau);
            if d > std::f64::consts::PI {
                d = tau - d;
            }
            best = best.min(d);
        }
    }
    best
}

/// Chart data `(q, p, W)` on the regular constrained set, with the torus
/// moment map of the spin block pinned to the coupling.
#[derive(Clone, Debug)]
pub struct QpWChart {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub spins: SpinBlock,
    pub gamma: f64,
}

impl QpWChart {
    pub fn new(q: Vec<f64>, p: Vec<f64>, spins: SpinBlock, gamma: f64) -> Result<Self> {
        let gap = min_angle_gap(&q);
        if gap <= COLLISION_MARGIN {
            return Err(Error::NotRegular { gap, margin: COLLISION_MARGIN });
        }
        let phi = torus_phi(&spins);
        let residual = phi.iter().map(|&x| (x - gamma).abs()).fold(0.0, f64::max);
        if residual > 1e-8 {
            return Err(Error::PhiConstraint { residual });
        }
        Ok(QpWChart { q, p, spins, gamma })
    }

    /// The constrained point labelled by this chart datum.
    pub fn to_point(&self) -> Result<DressedPoint> {
        chart_qpw_forward(&self.q, &self.p, &self.spins, self.gamma)
    }

    /// Inverse chart map from a constrained point with diagonal `g_r`.
    pub fn from_point(dp: &DressedPoint) -> Result<Self> {
        let (q, p, spins) = chart_qpw_inverse(dp)?;
        QpWChart::new(q, p, spins, dp.gamma)
    }
}

/// Dressed spins `v(alpha) = b_r b_1 ... b_{alpha-1} w^alpha` and
/// half-dressed spins `v^alpha = b_r^{-1} v(alpha)`.
pub fn dressed_spins(b_r: &CMat, spins: &SpinBlock) -> (Vec<CVec>, Vec<CVec>) {
    let mut acc = b_r.clone();
    let mut dressed = Vec::with_capacity(spins.d());
    let mut half = Vec::with_capacity(spins.d());
    for alpha in 0..spins.d() {
        let w = &spins.vec(alpha).w;
        let v = acc.mul_vec(w);
        half.push(b_r.solve_upper(&v));
        dressed.push(v);
        if alpha + 1 < spins.d() {
            acc = &acc * &moment_b(spins.vec(alpha));
        }
    }
    (dressed, half)
}

/// Inverse of [`dressed_spins`]: recover the primary spins from `(b_r, v)`.
pub fn primary_from_dressed(b_r: &CMat, v: &[CVec]) -> Result<SpinBlock> {
    let mut acc = b_r.clone();
    let mut out = Vec::with_capacity(v.len());
    for (alpha, vc) in v.iter().enumerate() {
        let w = acc.solve_upper(vc);
        let sv = SpinVector::new(w);
        if alpha + 1 < v.len() {
            acc = &acc * &moment_b(&sv);
        }
        out.push(sv);
    }
    Ok(SpinBlock::new(out))
}

/// The group-valued moment map
/// `Lambda = b_l b_r b(w^1) ... b(w^d)` of the extended double.
pub fn total_moment(pt: &ExtendedPoint) -> CMat {
    let mut lam = &pt.double.b_l * &pt.double.b_r;
    for alpha in 0..pt.spins.d() {
        lam = &lam * &moment_b(pt.spins.vec(alpha));
    }
    lam
}

/// Solve the constraint for the Lax matrix on the diagonal-`g_r` set:
/// `L_ij = F_ij / (e^{2 gamma} Q_j Q_i^{-1} - 1)`. Rejects candidates that
/// fail the scale-free positivity test.
pub fn l_from_qv(q: &[f64], gamma: f64, v: &[CVec]) -> Result<CMat> {
    let n = q.len();
    let e2g = (2.0 * gamma).exp();
    let f = collective_spin(v, n);
    let l = CMat::from_fn(n, n, |i, j| {
        let phase = C64::from_polar(1.0, q[j] - q[i]);
        f[(i, j)] / (phase * e2g - cr(1.0))
    });
    let l = l.hermitize();
    let (vals, _) = eig_hermitian(&l)?;
    let min_eig = *vals.last().unwrap();
    let trace = l.trace().re;
    if min_eig <= POSITIVITY_TOL * trace.abs() {
        return Err(Error::LaxNotPositive { min_eig });
    }
    Ok(l)
}

/// Unit-diagonal upper triangular solution `b_+` of
/// `b_+ S_+(W) = Q^{-1} b_+ Q`, by the grade recursion.
pub fn b_plus_solve(q: &[f64], spins: &SpinBlock) -> Result<CMat> {
    let n = q.len();
    let gap = min_angle_gap(q);
    if gap <= COLLISION_MARGIN {
        return Err(Error::NotRegular { gap, margin: COLLISION_MARGIN });
    }
    let mut s = CMat::identity(n);
    for alpha in 0..spins.d() {
        s = &s * &moment_b(spins.vec(alpha));
    }
    let s_plus = CMat::from_fn(n, n, |i, j| s[(i, j)] / s[(i, i)]);
    let qc: Vec<C64> = q.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    let mut b_plus = CMat::identity(n);
    for grade in 1..n {
        for i in 0..n - grade {
            let j = i + grade;
            let mut rhs = C64::new(0.0, 0.0);
            for a in 0..grade {
                rhs += b_plus[(i, i + a)] * s_plus[(i + a, j)];
            }
            b_plus[(i, j)] = rhs / (qc[j] / qc[i] - cr(1.0));
        }
    }
    Ok(b_plus)
}

/// Forward chart map: from `(q, p, W)` with `phi(W) = gamma 1` build the
/// constrained point with `g_r = Q` and `b_r = e^p b_+(Q, W)`.
pub fn chart_qpw_forward(q: &[f64], p: &[f64], spins: &SpinBlock, gamma: f64) -> Result<DressedPoint> {
    let n = q.len();
    let phi = torus_phi(spins);
    let residual = phi.iter().map(|&x| (x - gamma).abs()).fold(0.0, f64::max);
    if residual > 1e-8 {
        return Err(Error::PhiConstraint { residual });
    }
    let b_plus = b_plus_solve(q, spins)?;
    let b_r = CMat::from_fn(n, n, |i, j| cr(p[i].exp()) * b_plus[(i, j)]);
    let (v, _) = dressed_spins(&b_r, spins);
    let l = &b_r * &b_r.adjoint();
    let g_r = CMat::diag(&q.iter().map(|&t| C64::from_polar(1.0, t)).collect::<Vec<_>>());
    Ok(DressedPoint { g_r, l, v, gamma })
}

/// Inverse chart map: from a constrained point with diagonal `g_r` recover
/// `(q, p, W)` and verify the torus moment map value.
pub fn chart_qpw_inverse(dp: &DressedPoint) -> Result<(Vec<f64>, Vec<f64>, SpinBlock)> {
    let n = dp.n();
    let mut q = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dp.g_r[(i, j)].norm() > 1e-10 {
                return Err(Error::InvalidParameter("chart inverse needs a diagonal g_r".into()));
            }
        }
        let z = dp.g_r[(i, i)];
        q[i] = z.im.atan2(z.re);
    }
    let b_r = cholesky_upper(&dp.l)?;
    let spins = primary_from_dressed(&b_r, &dp.v)?;
    let p: Vec<f64> = (0..n).map(|i| b_r[(i, i)].re.ln()).collect();
    let phi = torus_phi(&spins);
    let residual = phi.iter().map(|&x| (x - dp.gamma).abs()).fold(0.0, f64::max);
    if residual > 1e-8 {
        return Err(Error::PhiConstraint { residual });
    }
    Ok((q, p, spins))
}

/// Apply the unique torus element making every spin column sum real
/// positive; `q` is untouched.
pub fn gauge_fix_plus(q: &[f64], v: &[CVec], gamma: f64) -> Result<SlicePoint> {
    let n = q.len();
    let u: Vec<C64> = (0..n).map(|i| v.iter().map(|vc| vc[i]).sum()).collect();
    let mut tau = vec![C64::new(1.0, 0.0); n];
    for i in 0..n {
        let m = u[i].norm();
        if m < 1e-13 {
            return Err(Error::ZeroColumnSum { index: i, modulus: m });
        }
        tau[i] = u[i].conj() / m;
    }
    let fixed: Vec<CVec> = v
        .iter()
        .map(|vc| (0..n).map(|i| tau[i] * vc[i]).collect())
        .collect();
    SlicePoint::new(q.to_vec(), fixed, gamma)
}

/// Diagonalize `g_r` and move a constrained point onto the gauge slice.
pub fn dressed_to_slice(dp: &DressedPoint) -> Result<SlicePoint> {
    let (phases, frame) = eig_unitary(&dp.g_r)?;
    let vt = frame.adjoint();
    let v: Vec<CVec> = dp.v.iter().map(|vc| vt.mul_vec(vc)).collect();
    let sp = gauge_fix_plus(&phases, &v, dp.gamma)?;
    // consistency: the conjugated Lax matrix must match the rebuilt one
    debug_assert!({
        let l_conj = &(&vt * &dp.l) * &frame;
        let tau: Vec<C64> = (0..dp.n())
            .map(|i| {
                let ui: C64 = v.iter().map(|vc| vc[i]).sum();
                ui.conj() / ui.norm()
            })
            .collect();
        let l_fixed = CMat::from_fn(dp.n(), dp.n(), |i, j| tau[i] * l_conj[(i, j)] * tau[j].conj());
        (&l_fixed - sp.l()).max_abs() < 1e-7 * (1.0 + dp.l.max_abs())
    });
    Ok(sp)
}

/// Constrained point with `L = diag(y)` and a single nonzero spin vector,
/// all of whose components are positive.
pub fn normal_form_d(y: &[f64], d: usize, gamma: f64) -> Result<DressedPoint> {
    let n = y.len();
    if d < 2 {
        return Err(Error::InvalidParameter(
            "the spin extension needs at least two spin copies".into(),
        ));
    }
    let e2g = (2.0 * gamma).exp();
    for i in 0..n {
        let next = if i + 1 < n { y[i + 1] } else { 0.0 };
        if y[i] <= e2g * next + 1e-10 {
            return Err(Error::SpectralGap(format!(
                "need y_{} > e^(2 gamma) y_{} with margin (got {} vs {})",
                i + 1,
                i + 2,
                y[i],
                e2g * next
            )));
        }
    }
    let mut vd = vec![C64::new(0.0, 0.0); n];
    for l in 0..n {
        let mut prod = (e2g - 1.0) * y[l];
        for k in 0..n {
            if k != l {
                prod *= (e2g * y[k] - y[l]) / (y[k] - y[l]);
            }
        }
        vd[l] = cr(prod.sqrt());
    }
    let l0 = CMat::diag_re(y);
    let m = l0.add_outer(cr(1.0), &vd, &vd);
    let (_, w) = eig_hermitian(&m)?;
    let g0 = w.adjoint();
    let mut v: Vec<CVec> = (0..d - 1).map(|_| crate::cmat::cvec_zeros(n)).collect();
    v.push(vd);
    let dp = DressedPoint { g_r: g0, l: l0, v, gamma };
    let res = dp.constraint_residual();
    if res > 1e-10 * (1.0 + dp.l.max_abs()) {
        return Err(Error::InvalidParameter(format!("normal form residual {res:.3e}")));
    }
    Ok(dp)
}

/// Coordinates on the eigenvalue-diagonal slice: `L = diag(y)`, leading
/// spin `v(1)` positive, middle spins free, and two torus factors.
#[derive(Clone, Debug)]
pub struct S1Coords {
    pub y: Vec<f64>,
    pub v_lead: Vec<f64>,
    /// spin vectors `v(alpha)` for `alpha = 2..d-1` (empty when `d = 2`)
    pub v_mid: Vec<CVec>,
    /// angles of the torus factor multiplying the rotated last spin
    pub tau: Vec<f64>,
    /// angles of the torus factor multiplying `g_r`
    pub big_gamma: Vec<f64>,
    pub gamma: f64,
}

impl S1Coords {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.v_mid.len() + 2
    }

    /// The free real coordinates, in the fixed order used by rank tests.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.y.clone();
        out.extend_from_slice(&self.v_lead);
        for vm in &self.v_mid {
            out.extend(vm.iter().map(|z| z.re));
            out.extend(vm.iter().map(|z| z.im));
        }
        out.extend_from_slice(&self.tau);
        out.extend_from_slice(&self.big_gamma);
        out
    }

    pub fn from_flat(&self, flat: &[f64]) -> S1Coords {
        let n = self.n();
        let mut idx = 0;
        let take = |idx: &mut usize, k: usize| -> Vec<f64> {
            let out = flat[*idx..*idx + k].to_vec();
            *idx += k;
            out
        };
        let y = take(&mut idx, n);
        let v_lead = take(&mut idx, n);
        let mut v_mid = Vec::new();
        for _ in 0..self.v_mid.len() {
            let re = take(&mut idx, n);
            let im = take(&mut idx, n);
            v_mid.push((0..n).map(|i| C64::new(re[i], im[i])).collect());
        }
        let tau = take(&mut idx, n);
        let big_gamma = take(&mut idx, n);
        S1Coords { y, v_lead, v_mid, tau, big_gamma, gamma: self.gamma }
    }
}

/// Interlacing data shared by the slice constructors.
fn spectral_factor(y: &[f64], mu: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let n = y.len();
    let e2g = (2.0 * gamma).exp();
    for i in 0..n {
        if e2g * y[i] <= mu[i] + 1e-12 {
            return Err(Error::SpectralGap(format!(
                "need e^(2 gamma) y_{0} > mu_{0} (got {1} vs {2})",
                i + 1,
                e2g * y[i],
                mu[i]
            )));
        }
        if i + 1 < n && mu[i] <= e2g * y[i + 1] + 1e-12 {
            return Err(Error::SpectralGap(format!(
                "need mu_{} > e^(2 gamma) y_{} (got {} vs {})",
                i + 1,
                i + 2,
                mu[i],
                e2g * y[i + 1]
            )));
        }
    }
    let mut out = vec![0.0; n];
    for l in 0..n {
        let mut prod = e2g * y[l] - mu[l];
        for k in 0..n {
            if k != l {
                prod *= (e2g * y[k] - mu[l]) / (mu[k] - mu[l]);
            }
        }
        if prod <= 0.0 {
            return Err(Error::SpectralGap(format!("nonpositive square {prod} at slot {l}")));
        }
        out[l] = prod.sqrt();
    }
    Ok(out)
}

/// Build the constrained point determined by slice coordinates.
pub fn slice_point_s1(coords: &S1Coords) -> Result<DressedPoint> {
    let n = coords.n();
    let d = coords.d();
    let gamma = coords.gamma;
    let e2g = (2.0 * gamma).exp();
    for i in 0..n {
        if coords.y[i] <= 0.0 {
            return Err(Error::InvalidParameter(format!("y_{} must be positive", i + 1)));
        }
        if i + 1 < n && coords.y[i] <= coords.y[i + 1] {
            return Err(Error::InvalidParameter("y must be strictly decreasing".into()));
        }
        if coords.v_lead[i] < 0.0 {
            return Err(Error::NonPositiveLeadingSpin { index: i, value: coords.v_lead[i] });
        }
    }
    let mut v: Vec<CVec> = Vec::with_capacity(d);
    v.push(coords.v_lead.iter().map(|&x| cr(x)).collect());
    for vm in &coords.v_mid {
        v.push(vm.clone());
    }
    let mut l1 = CMat::diag_re(&coords.y);
    for vc in &v {
        l1 = l1.add_outer(cr(1.0), vc, vc);
    }
    let (mu, u1) = eig_hermitian(&l1)?;
    let big_v = spectral_factor(&coords.y, &mu, gamma)?;
    let rotated: CVec = (0..n).map(|l| C64::from_polar(big_v[l], coords.tau[l])).collect();
    let vd = u1.mul_vec(&rotated); // g_1^{-1} = u1
    let m = l1.add_outer(cr(1.0), &vd, &vd);
    let (vals, w) = eig_hermitian(&m)?;
    for i in 0..n {
        if (vals[i] - e2g * coords.y[i]).abs() > 1e-8 * (1.0 + e2g * coords.y[i]) {
            return Err(Error::SpectralGap(format!(
                "constructed spectrum {} deviates from e^(2 gamma) y {}",
                vals[i],
                e2g * coords.y[i]
            )));
        }
    }
    let g_r0 = w.adjoint();
    let g_r = CMat::from_fn(n, n, |i, j| C64::from_polar(1.0, coords.big_gamma[i]) * g_r0[(i, j)]);
    v.push(vd);
    let dp = DressedPoint { g_r, l: CMat::diag_re(&coords.y), v, gamma };
    let res = dp.constraint_residual();
    if res > 1e-9 * (1.0 + dp.l.max_abs()) {
        return Err(Error::InvalidParameter(format!("slice construction residual {res:.3e}")));
    }
    Ok(dp)
}

/// Inverse extraction of slice coordinates from a constrained point with
/// diagonal `L` and positive leading spin.
pub fn s1_extract(dp: &DressedPoint) -> Result<S1Coords> {
    let n = dp.n();
    let d = dp.d();
    let off = CMat::from_fn(n, n, |i, j| if i == j { C64::new(0.0, 0.0) } else { dp.l[(i, j)] });
    if off.max_abs() > 1e-8 * (1.0 + dp.l.max_abs()) {
        return Err(Error::InvalidParameter("slice extraction needs a diagonal L".into()));
    }
    let y: Vec<f64> = (0..n).map(|i| dp.l[(i, i)].re).collect();
    let mut v_lead = vec![0.0; n];
    for i in 0..n {
        let z = dp.v[0][i];
        if z.re <= 0.0 || z.im.abs() > 1e-8 * z.re.max(1e-8) {
            return Err(Error::NonPositiveLeadingSpin { index: i, value: z.re });
        }
        v_lead[i] = z.re;
    }
    let v_mid: Vec<CVec> = dp.v[1..d - 1].to_vec();
    let mut l1 = CMat::diag_re(&y);
    for vc in &dp.v[..d - 1] {
        l1 = l1.add_outer(cr(1.0), vc, vc);
    }
    let (mu, u1) = eig_hermitian(&l1)?;
    let big_v = spectral_factor(&y, &mu, dp.gamma)?;
    let rotated = u1.adjoint().mul_vec(&dp.v[d - 1]); // g_1 v(d)
    let mut tau = vec![0.0; n];
    for l in 0..n {
        let m = rotated[l].norm();
        if (m - big_v[l]).abs() > 1e-7 * (1.0 + big_v[l]) {
            return Err(Error::InvalidParameter(format!(
                "last spin modulus {m} deviates from the spectral value {}",
                big_v[l]
            )));
        }
        tau[l] = rotated[l].im.atan2(rotated[l].re);
    }
    let m = l1.add_outer(cr(1.0), &dp.v[d - 1], &dp.v[d - 1]);
    let (_, w) = eig_hermitian(&m)?;
    let delta = &dp.g_r * &w; // g_r (g_r^0)^{-1}
    let mut big_gamma = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && delta[(i, j)].norm() > 1e-6 * (1.0 + delta.max_abs()) {
                return Err(Error::InvalidParameter(
                    "g_r does not lie over the canonical slice representative".into(),
                ));
            }
        }
        big_gamma[i] = delta[(i, i)].im.atan2(delta[(i, i)].re);
    }
    Ok(S1Coords { y, v_lead, v_mid, tau, big_gamma, gamma: dp.gamma })
}

/// Conjugate a constrained point so that `L` becomes diagonal descending
/// and the leading spin positive, landing in the domain of [`s1_extract`].
pub fn dressed_to_s1_form(dp: &DressedPoint) -> Result<DressedPoint> {
    let n = dp.n();
    let (y, u) = eig_hermitian(&dp.l)?;
    let ut = u.adjoint();
    let mut v: Vec<CVec> = dp.v.iter().map(|vc| ut.mul_vec(vc)).collect();
    let g = &(&ut * &dp.g_r) * &u;
    let mut tau = vec![C64::new(1.0, 0.0); n];
    for i in 0..n {
        let z = v[0][i];
        if z.norm() < 1e-12 {
            return Err(Error::NonPositiveLeadingSpin { index: i, value: 0.0 });
        }
        tau[i] = z.conj() / z.norm();
    }
    for vc in v.iter_mut() {
        for i in 0..n {
            vc[i] *= tau[i];
        }
    }
    let g_fixed = CMat::from_fn(n, n, |i, j| tau[i] * g[(i, j)] * tau[j].conj());
    Ok(DressedPoint { g_r: g_fixed, l: CMat::diag_re(&y), v, gamma: dp.gamma })
}
