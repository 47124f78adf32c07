//! Seeded random generators for matrices, spins and phase-space points.
//!
//! Everything is driven by a counter-based ChaCha stream so that sweeps
//! parallelized over the sample index stay deterministic.

use crate::cmat::{cr, CMat, CVec, C64};
use crate::error::{Error, Result};
use crate::linalg;
use crate::reduction::{self, S1Coords, SlicePoint};
use crate::spins::{SpinBlock, SpinVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Rng64 = ChaCha8Rng;

/// Independent stream for sample `index` under a master seed.
pub fn stream(seed: u64, index: u64) -> Rng64 {
    use rand::SeedableRng;
    let mut r = Rng64::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Standard normal via Box-Muller.
pub fn normal(rng: &mut Rng64) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>();
        if u <= f64::MIN_POSITIVE {
            continue;
        }
        let v: f64 = rng.gen::<f64>();
        return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
    }
}

pub fn random_complex(rng: &mut Rng64) -> C64 {
    C64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_cvec(n: usize, rng: &mut Rng64) -> CVec {
    (0..n).map(|_| random_complex(rng)).collect()
}

pub fn random_matrix(n: usize, rng: &mut Rng64) -> CMat {
    CMat::from_fn(n, n, |_, _| random_complex(rng))
}

pub fn random_invertible(n: usize, rng: &mut Rng64) -> CMat {
    // Gaussian matrices are almost surely well conditioned at these sizes;
    // nudge the diagonal to keep the condition estimate comfortable.
    let mut m = random_matrix(n, rng);
    for i in 0..n {
        m[(i, i)] += cr(1.5);
    }
    m
}

pub fn random_hermitian(n: usize, rng: &mut Rng64) -> CMat {
    let a = random_matrix(n, rng);
    (&a + &a.adjoint()).scale(cr(0.5))
}

pub fn random_positive_definite(n: usize, rng: &mut Rng64) -> CMat {
    let a = random_matrix(n, rng);
    let mut l = &a * &a.adjoint();
    for i in 0..n {
        l[(i, i)] += cr(0.5);
    }
    l
}

/// Haar-distributed unitary from the QR of a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut Rng64) -> CMat {
    let a = random_matrix(n, rng);
    let f = linalg::iwasawa_decompose(&a).expect("gaussian matrix invertible");
    f.g_l
}

pub fn random_upper_positive(n: usize, rng: &mut Rng64) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            cr((0.4 * normal(rng)).exp())
        } else if j > i {
            random_complex(rng) * 0.4
        } else {
            cr(0.0)
        }
    })
}

pub fn random_spin_vector(n: usize, rng: &mut Rng64) -> SpinVector {
    SpinVector::new(random_cvec(n, rng))
}

pub fn random_spin_block(n: usize, d: usize, rng: &mut Rng64) -> SpinBlock {
    SpinBlock::new((0..d).map(|_| random_spin_vector(n, rng)).collect())
}

/// Regular diagonal-unitary angles with a guaranteed minimal gap.
pub fn random_regular_angles(n: usize, rng: &mut Rng64) -> Vec<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    loop {
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * tau - std::f64::consts::PI).collect();
        let mut sorted = q.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut gap = sorted[0] + tau - sorted[n - 1];
        for w in sorted.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        if n == 1 || gap > 0.5 / n as f64 {
            q.sort_by(|a, b| b.partial_cmp(a).unwrap());
            return q;
        }
    }
}

/// Spin block row-rescaled so the torus moment map hits `targets` exactly.
///
/// Row `j` of every copy is scaled by a common positive factor, solved
/// bottom-up; each one-dimensional equation is monotone in the factor.
pub fn scale_rows_to_phi(w: &SpinBlock, targets: &[f64]) -> Result<SpinBlock> {
    let n = w.n();
    let d = w.d();
    let mut rows: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..d).map(|a| w.vec(a).w[j]).collect())
        .collect();
    // g_next[a] = G_{j+1}(w^a) maintained while walking up from the bottom row
    let mut g_next = vec![1.0f64; d];
    for j in (0..n).rev() {
        let base: Vec<f64> = (0..d).map(|a| rows[j][a].norm_sqr()).collect();
        let total: f64 = base.iter().sum();
        if total <= 0.0 {
            return Err(Error::SamplingFailed {
                tries: 0,
                what: format!("row {j} of the spin block vanishes in every copy"),
            });
        }
        let target = 2.0 * targets[j];
        // solve sum_a ln(1 + s * base_a / g_next_a) = target for s >= 0
        let f = |s: f64| -> f64 {
            (0..d).map(|a| (1.0 + s * base[a] / g_next[a]).ln()).sum::<f64>() - target
        };
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while f(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::SamplingFailed { tries: 0, what: "row scaling diverged".into() });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let scale = s.sqrt();
        for a in 0..d {
            rows[j][a] *= scale;
            g_next[a] += s * base[a];
        }
    }
    let vecs: Vec<SpinVector> = (0..d)
        .map(|a| SpinVector::new((0..n).map(|j| rows[j][a]).collect()))
        .collect();
    Ok(SpinBlock::new(vecs))
}

/// Spin block on the level set `phi(W) = gamma * 1`.
pub fn random_phi_constrained_block(n: usize, d: usize, gamma: f64, rng: &mut Rng64) -> Result<SpinBlock> {
    let w = random_spin_block(n, d, rng);
    scale_rows_to_phi(&w, &vec![gamma; n])
}

/// Random point of the gauge slice, built through the `(q, p, W)` chart so
/// the moment map constraint holds by construction.
pub fn random_slice_point(n: usize, d: usize, gamma: f64, rng: &mut Rng64) -> Result<SlicePoint> {
    for _ in 0..64 {
        let q = random_regular_angles(n, rng);
        let p: Vec<f64> = (0..n).map(|_| 0.35 * normal(rng)).collect();
        let w = random_phi_constrained_block(n, d, gamma, rng)?;
        let dressed = match reduction::chart_qpw_forward(&q, &p, &w, gamma) {
            Ok(dp) => dp,
            Err(_) => continue,
        };
        match reduction::gauge_fix_plus(&q, &dressed.v, gamma) {
            Ok(sp) => return Ok(sp),
            Err(_) => continue,
        }
    }
    Err(Error::SamplingFailed { tries: 64, what: format!("slice point n={n} d={d} gamma={gamma}") })
}

/// Eigenvalue list obeying the spectral-gap inequalities of the
/// one-nonzero-spin normal form.
pub fn random_normal_form_y(n: usize, gamma: f64, scale: f64, rng: &mut Rng64) -> Vec<f64> {
    let e2g = (2.0 * gamma).exp();
    let mut y = vec![0.0; n];
    let mut cur = scale * (0.8 + 0.4 * rng.gen::<f64>());
    for i in (0..n).rev() {
        y[i] = cur;
        cur *= e2g * (1.25 + 0.5 * rng.gen::<f64>());
    }
    y
}

/// Random coordinates on the eigenvalue-diagonal slice, with the spectral
/// interlacing condition checked (retrying with shrunken residual spins).
pub fn random_s1_coords(n: usize, d: usize, gamma: f64, rng: &mut Rng64) -> Result<S1Coords> {
    assert!(d >= 2);
    for attempt in 0..40 {
        let shrink = 0.7f64.powi(attempt);
        let y = random_normal_form_y(n, gamma, 0.6, rng);
        let v_lead: Vec<f64> = (0..n)
            .map(|j| shrink * (0.15 + 0.25 * rng.gen::<f64>()) * y[j].sqrt())
            .collect();
        let v_mid: Vec<CVec> = (0..d.saturating_sub(2))
            .map(|_| {
                (0..n)
                    .map(|j| random_complex(rng) * (0.2 * shrink * y[j].sqrt()))
                    .collect()
            })
            .collect();
        let tau: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI - std::f64::consts::PI).collect();
        let big_gamma: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI - std::f64::consts::PI).collect();
        let coords = S1Coords { y, v_lead, v_mid, tau, big_gamma, gamma };
        if reduction::slice_point_s1(&coords).is_ok() {
            return Ok(coords);
        }
    }
    Err(Error::SamplingFailed { tries: 40, what: format!("s1 coordinates n={n} d={d}") })
}
