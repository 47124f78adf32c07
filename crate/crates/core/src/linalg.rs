//! Dense complex matrix kernel: the factorizations and spectral routines
//! every other module consumes.
//!
//! Conventions. `B(n)` is the group of upper triangular matrices with
//! positive diagonal, `U(n)` the unitary group. Every invertible `K` factors
//! uniquely as
//!
//! ```text
//!     K = b_l * g_r^{-1} = g_l * b_r^{-1},   b_l, b_r in B(n),  g_l, g_r in U(n),
//! ```
//!
//! and the two factorizations are linked by `b_l^{-1} g_l = g_r^{-1} b_r`.

use crate::cmat::{cr, CMat, CVec, C64, I};
use crate::error::{Error, Result};

/// Default bound for the condition estimate above which a matrix is
/// treated as singular.
pub const CONDITION_BOUND: f64 = 1e12;

/// Default angular regularity margin (radians) for distinct unitary
/// eigenvalues.
pub const REGULARITY_MARGIN: f64 = 1e-8;

/// Maximal max-norm step between consecutive path points accepted by the
/// eigenframe continuation.
pub const MAX_PATH_STEP: f64 = 0.1;

/// The four factors of the double factorization of an invertible matrix.
#[derive(Clone, Debug)]
pub struct Iwasawa {
    pub b_l: CMat,
    pub g_r: CMat,
    pub g_l: CMat,
    pub b_r: CMat,
}

/// Modified Gram-Schmidt QR with a reorthogonalization pass and the
/// diagonal of `R` normalized positive: `A = Q R`.
fn qr_positive(a: &CMat) -> Result<(CMat, CMat)> {
    let n = a.rows();
    let mut q = CMat::zeros(n, n);
    let mut r = CMat::zeros(n, n);
    for j in 0..n {
        let mut v = a.col(j);
        // second orthogonalization pass keeps Q orthonormal near rounding
        // for moderately conditioned inputs
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.col(i);
                let proj = crate::cmat::cdot(&qi, &v);
                for k in 0..n {
                    v[k] -= proj * qi[k];
                }
                r[(i, j)] += proj;
            }
        }
        let nrm = crate::cmat::cvec_norm(&v);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::SingularInput { cond: f64::INFINITY, bound: CONDITION_BOUND });
        }
        r[(j, j)] = cr(nrm);
        for k in 0..n {
            q[(k, j)] = v[k] / nrm;
        }
    }
    Ok((q, r))
}

fn diag_condition_estimate(r: &CMat) -> f64 {
    let n = r.rows();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..n {
        let d = r[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// 180-degree rotation `J A J` with `J` the reversal permutation.
fn rotate180(a: &CMat) -> CMat {
    let n = a.rows();
    CMat::from_fn(n, n, |i, j| a[(n - 1 - i, n - 1 - j)])
}

/// Unique factorizations `K = b_l g_r^{-1} = g_l b_r^{-1}` of an
/// invertible matrix, computed by modified Gram-Schmidt.
pub fn iwasawa_decompose(k: &CMat) -> Result<Iwasawa> {
    iwasawa_decompose_with(k, CONDITION_BOUND)
}

pub fn iwasawa_decompose_with(k: &CMat, cond_bound: f64) -> Result<Iwasawa> {
    assert!(k.is_square());
    if !k.all_finite() {
        return Err(Error::SingularInput { cond: f64::INFINITY, bound: cond_bound });
    }
    // K = Q R with R positive-diagonal upper gives g_l = Q, b_r = R^{-1}.
    let (g_l, r) = qr_positive(k)?;
    let cond = diag_condition_estimate(&r);
    if !cond.is_finite() || cond > cond_bound {
        return Err(Error::SingularInput { cond, bound: cond_bound });
    }
    let b_r = r.inv_upper();
    // K^dagger = g_r * (lower positive). Rotating by 180 degrees turns the
    // QL-type factorization into a plain QR.
    let flipped = rotate180(&k.adjoint());
    let (qf, rf) = qr_positive(&flipped)?;
    let g_r = rotate180(&qf);
    let b_l = rotate180(&rf).adjoint();
    Ok(Iwasawa { b_l, g_r, g_l, b_r })
}

/// Recover `K` from the right factors: the unique matrix with
/// `Xi_R(K) = g_r` and `Lambda_R(K) = b_r`.
pub fn reconstruct_k(g_r: &CMat, b_r: &CMat) -> Result<CMat> {
    // With X := g_r^dagger b_r one has X = b_l^{-1} g_l, so the
    // upper-times-unitary factorization of X yields b_l.
    let x = &g_r.adjoint() * b_r;
    let fx = iwasawa_decompose(&x)?;
    // X = b_l(X) g_r(X)^{-1} and b_l(X) = b_l(K)^{-1}.
    Ok(&fx.b_l.inv_upper() * &g_r.adjoint())
}

/// Unique `b` in `B(n)` with `b b^dagger = L` for positive definite
/// Hermitian `L`.
pub fn cholesky_upper(l: &CMat) -> Result<CMat> {
    let n = l.rows();
    if !l.all_finite() {
        return Err(Error::NotPositiveDefinite { pivot: f64::NAN, index: 0 });
    }
    let a = rotate180(l);
    let scale = l.max_abs().max(1.0);
    let tol = 1e-14 * scale;
    // standard lower Cholesky of the rotated matrix
    let mut low = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[(i, j)];
            for p in 0..j {
                acc -= low[(i, p)] * low[(j, p)].conj();
            }
            if i == j {
                let piv = acc.re;
                if piv <= tol {
                    return Err(Error::NotPositiveDefinite { pivot: piv, index: n - 1 - i });
                }
                low[(i, j)] = cr(piv.sqrt());
            } else {
                low[(i, j)] = acc / low[(j, j)];
            }
        }
    }
    Ok(rotate180(&low))
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// sweeps. Eigenvalues are returned in descending order; each eigenvector
/// column is phased so that its largest-modulus entry is real positive
/// (ties broken by the lowest row index).
pub fn eig_hermitian(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.rows();
    if !a.all_finite() {
        return Err(Error::NotHermitian { dev: f64::NAN });
    }
    let dev = a.hermitian_deviation();
    if dev > 1e-10 * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { dev });
    }
    let mut m = a.hermitize();
    let mut u = CMat::identity(n);
    let scale = m.max_abs().max(1e-300);
    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let abs_apq = apq.norm();
                let phase = apq / abs_apq;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let sgn = if tau >= 0.0 { 1.0 } else { -1.0 };
                let t = sgn / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase * s;
                // apply G on the right of U and G^dagger A G on A, where
                // G has columns (c, sp; -conj(sp), c) in the (p, q) plane
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c - akq * sp.conj();
                    m[(k, q)] = akp * sp + akq * c;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c - aqk * sp;
                    m[(q, k)] = apk * sp.conj() + aqk * c;
                }
                for k in 0..n {
                    let ukp = u[(k, p)];
                    let ukq = u[(k, q)];
                    u[(k, p)] = ukp * c - ukq * sp.conj();
                    u[(k, q)] = ukp * sp + ukq * c;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut v = CMat::zeros(n, n);
    for (jnew, &jold) in order.iter().enumerate() {
        let col = u.col(jold);
        v.set_col(jnew, &col);
    }
    fix_column_phases(&mut v);
    vals = sorted_vals;
    Ok((vals, v))
}

/// Phase each column so its largest-modulus entry is real positive.
pub fn fix_column_phases(v: &mut CMat) {
    let n = v.rows();
    for j in 0..v.cols() {
        let mut best = 0usize;
        let mut best_mod = -1.0f64;
        for i in 0..n {
            let m = v[(i, j)].norm();
            if m > best_mod {
                best_mod = m;
                best = i;
            }
        }
        let z = v[(best, j)];
        if z.norm() > 0.0 {
            let ph = z.conj() / z.norm();
            for i in 0..n {
                v[(i, j)] *= ph;
            }
        }
    }
}

/// Eigenphases and eigenvectors of a unitary matrix.
///
/// The matrix is first diagonalized jointly through its Hermitian and
/// skew-Hermitian parts (which commute for a normal matrix), then the
/// ordering and phases follow the [`eig_hermitian`] convention applied to
/// the Cayley transform taken across the largest spectral gap.
pub fn eig_unitary(g: &CMat) -> Result<(Vec<f64>, CMat)> {
    let dev = g.unitary_deviation();
    if dev > 1e-9 {
        return Err(Error::NotUnitary { dev });
    }
    let (mut phases, mut v) = eig_unitary_raw(g)?;
    let n = g.rows();
    // order by descending Cayley value relative to the largest gap
    let phi0 = largest_gap_midpoint(&phases);
    let keyed: Vec<f64> = phases
        .iter()
        .map(|&t| {
            let mut rel = t - phi0;
            while rel <= 0.0 {
                rel += 2.0 * std::f64::consts::PI;
            }
            while rel > 2.0 * std::f64::consts::PI {
                rel -= 2.0 * std::f64::consts::PI;
            }
            rel
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| keyed[j].partial_cmp(&keyed[i]).unwrap());
    let mut v2 = CMat::zeros(n, n);
    let mut p2 = vec![0.0; n];
    for (jn, &jo) in order.iter().enumerate() {
        v2.set_col(jn, &v.col(jo));
        p2[jn] = phases[jo];
    }
    fix_column_phases(&mut v2);
    v = v2;
    phases = p2;
    Ok((phases, v))
}

fn largest_gap_midpoint(phases: &[f64]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mut sorted: Vec<f64> = phases.iter().map(|&t| t.rem_euclid(tau)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 1 {
        return sorted[0] + std::f64::consts::PI;
    }
    let mut best_gap = -1.0;
    let mut best_mid = 0.0;
    for i in 0..n {
        let a = sorted[i];
        let b = if i + 1 < n { sorted[i + 1] } else { sorted[0] + tau };
        let gap = b - a;
        if gap > best_gap {
            best_gap = gap;
            best_mid = a + gap / 2.0;
        }
    }
    best_mid
}

/// Joint diagonalization of a unitary matrix; no ordering convention.
fn eig_unitary_raw(g: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = g.rows();
    let gh = g.adjoint();
    let h = (g + &gh).scale(cr(0.5));
    let k = (g - &gh).scale(cr(0.5) / I);
    for cluster_tol in [1e-7f64, 1e-5, 1e-3] {
        let (hvals, mut u) = eig_hermitian(&h)?;
        // refine inside clusters of nearly equal cos-values with the sine part
        let mut start = 0usize;
        while start < n {
            let mut end = start + 1;
            while end < n && (hvals[end - 1] - hvals[end]).abs() < cluster_tol {
                end += 1;
            }
            if end - start > 1 {
                let m = end - start;
                let sub = CMat::from_fn(m, m, |a, b| {
                    let ca = u.col(start + a);
                    let cb = u.col(start + b);
                    crate::cmat::cdot(&ca, &k.mul_vec(&cb))
                });
                let (_, w) = eig_hermitian(&sub.hermitize())?;
                let old: Vec<CVec> = (start..end).map(|j| u.col(j)).collect();
                for a in 0..m {
                    let mut newcol = crate::cmat::cvec_zeros(n);
                    for b in 0..m {
                        let wba = w[(b, a)];
                        for r in 0..n {
                            newcol[r] += old[b][r] * wba;
                        }
                    }
                    u.set_col(start + a, &newcol);
                }
            }
            start = end;
        }
        // Rayleigh quotients give the eigenphases
        let mut phases = vec![0.0f64; n];
        let mut ok = true;
        for j in 0..n {
            let cj = u.col(j);
            let lam = crate::cmat::cdot(&cj, &g.mul_vec(&cj));
            phases[j] = lam.im.atan2(lam.re);
            let mut resid = g.mul_vec(&cj);
            let lam_unit = C64::from_polar(1.0, phases[j]);
            for r in 0..n {
                resid[r] -= lam_unit * cj[r];
            }
            if crate::cmat::cvec_max_abs(&resid) > 1e-10 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok((phases, u));
        }
    }
    Err(Error::EigenvalueCollision { gap: 0.0, margin: 0.0 })
}

fn min_circular_gap(phases: &[f64]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let n = phases.len();
    if n < 2 {
        return tau;
    }
    let mut sorted: Vec<f64> = phases.iter().map(|&t| t.rem_euclid(tau)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = sorted[0] + tau - sorted[n - 1];
    for i in 0..n - 1 {
        best = best.min(sorted[i + 1] - sorted[i]);
    }
    best
}

/// Eigenframe of a unitary matrix: continuous phases and phase-fixed
/// eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenFrame {
    pub phases: Vec<f64>,
    pub vectors: CMat,
}

/// Smooth diagonalization along a path of unitary matrices.
///
/// The first frame uses the canonical [`eig_unitary`] convention unless a
/// previous frame is supplied; each later frame is matched to its
/// predecessor by maximal column overlap, with the overlap phased positive.
/// That phasing is exactly the discrete form of the requirement that the
/// diagonal part of the logarithmic derivative of the diagonalizer
/// vanishes.
pub fn eig_unitary_smooth(
    path: &[CMat],
    prev: Option<&EigenFrame>,
    margin: f64,
) -> Result<Vec<EigenFrame>> {
    let mut frames: Vec<EigenFrame> = Vec::with_capacity(path.len());
    let mut last: Option<EigenFrame> = prev.cloned();
    for (step, g) in path.iter().enumerate() {
        if step > 0 {
            let d = (g - &path[step - 1]).max_abs();
            if d > MAX_PATH_STEP {
                return Err(Error::StepTooLarge { step: d, max: MAX_PATH_STEP });
            }
        }
        let frame = match &last {
            None => {
                let (phases, vectors) = eig_unitary(g)?;
                let gap = min_circular_gap(&phases);
                if gap < margin {
                    return Err(Error::EigenvalueCollision { gap, margin });
                }
                EigenFrame { phases, vectors }
            }
            Some(prev_frame) => continue_frame(g, prev_frame, margin)?,
        };
        last = Some(frame.clone());
        frames.push(frame);
    }
    Ok(frames)
}

/// One continuation step: diagonalize `g` and align the frame with `prev`.
pub fn continue_frame(g: &CMat, prev: &EigenFrame, margin: f64) -> Result<EigenFrame> {
    let n = g.rows();
    let (raw_phases, raw_v) = eig_unitary_raw(g)?;
    let gap = min_circular_gap(&raw_phases);
    if gap < margin {
        return Err(Error::EigenvalueCollision { gap, margin });
    }
    // overlap matrix O = prev^dagger * raw
    let overlap = &prev.vectors.adjoint() * &raw_v;
    let mut used = vec![false; n];
    let mut perm = vec![0usize; n];
    for j in 0..n {
        let mut best = usize::MAX;
        let mut best_mag = -1.0;
        for k in 0..n {
            if used[k] {
                continue;
            }
            let m = overlap[(j, k)].norm();
            if m > best_mag {
                best_mag = m;
                best = k;
            }
        }
        perm[j] = best;
        used[best] = true;
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut vectors = CMat::zeros(n, n);
    let mut phases = vec![0.0f64; n];
    for j in 0..n {
        let k = perm[j];
        let o = overlap[(j, k)];
        let ph = if o.norm() > 0.0 { o.conj() / o.norm() } else { cr(1.0) };
        let col = raw_v.col(k);
        let fixed: CVec = col.iter().map(|z| z * ph).collect();
        vectors.set_col(j, &fixed);
        // unwrap the phase next to the previous one
        let mut delta = (raw_phases[k] - prev.phases[j]) % tau;
        if delta > std::f64::consts::PI {
            delta -= tau;
        }
        if delta < -std::f64::consts::PI {
            delta += tau;
        }
        phases[j] = prev.phases[j] + delta;
    }
    Ok(EigenFrame { phases, vectors })
}

/// Matrix exponential by scaling and squaring with a degree-13 Pade
/// approximant.
pub fn expm(a: &CMat) -> CMat {
    let n = a.rows();
    let norm = a.norm_inf();
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        ((norm / theta13).log2().ceil()) as i32
    } else {
        0
    };
    let a = a.scale(cr(0.5f64.powi(s)));
    let b: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id = CMat::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &(&(&a6.scale(cr(b[13])) + &a4.scale(cr(b[11]))) + &a2.scale(cr(b[9]))).clone();
    let u_poly = &(&a6 * u_inner)
        + &(&(&(&a6.scale(cr(b[7])) + &a4.scale(cr(b[5]))) + &a2.scale(cr(b[3]))) + &id.scale(cr(b[1])));
    let u = &a * &u_poly;
    let v_inner = &(&(&a6.scale(cr(b[12])) + &a4.scale(cr(b[10]))) + &a2.scale(cr(b[8]))).clone();
    let v = &(&a6 * v_inner)
        + &(&(&(&a6.scale(cr(b[6])) + &a4.scale(cr(b[4]))) + &a2.scale(cr(b[2]))) + &id.scale(cr(b[0])));
    let mut r = (&v - &u).lu_solve(&(&v + &u));
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Splitting `gl(n, C) = u(n) + b(n)` into skew-Hermitian and
/// upper-triangular-real-diagonal parts.
pub fn split_u(a: &CMat) -> CMat {
    let n = a.rows();
    let mut u = CMat::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = C64::new(0.0, a[(i, i)].im);
        for j in 0..i {
            u[(i, j)] = a[(i, j)];
            u[(j, i)] = -a[(i, j)].conj();
        }
    }
    u
}

pub fn split_b(a: &CMat) -> CMat {
    a - &split_u(a)
}

/// The bilinear form `<X, Y> = Im tr(XY)` on `gl(n, C)`.
pub fn pairing(x: &CMat, y: &CMat) -> f64 {
    (x * y).trace().im
}
