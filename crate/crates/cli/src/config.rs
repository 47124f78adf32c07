//! Simulation configuration: flat TOML with one table per concern.

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use spinrs_core::cmat::{CVec, C64};
use spinrs_core::reduction::{
    chart_qpw_forward, dressed_to_slice, gauge_fix_plus, normal_form_d, slice_point_s1, S1Coords,
    SlicePoint,
};
use spinrs_core::sample::{self, Rng64};
use spinrs_core::spins::{SpinBlock, SpinVector};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: System,
    pub initial: Initial,
    #[serde(default)]
    pub integrate: Integrate,
    #[serde(default)]
    pub observables: Observables,
    #[serde(default)]
    pub rng: RngCfg,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct System {
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub mode: String,
    /// eigenvalues for `normal-form` and `s1-coords`
    pub y: Option<Vec<f64>>,
    /// leading spin for `s1-coords`
    pub v_lead: Option<Vec<f64>>,
    /// middle spins for `s1-coords` as `[re, im]` pairs, one row per copy
    pub v_mid: Option<Vec<Vec<[f64; 2]>>>,
    pub tau: Option<Vec<f64>>,
    pub big_gamma: Option<Vec<f64>>,
    /// angles for `qpW` and `explicit`
    pub q: Option<Vec<f64>>,
    /// diagonal momenta for `qpW`
    pub p: Option<Vec<f64>>,
    /// primary spins for `qpW` as `[re, im]` pairs, one row per copy
    pub w: Option<Vec<Vec<[f64; 2]>>>,
    /// dressed spins for `explicit` as `[re, im]` pairs, one row per copy
    pub v: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrate {
    pub h: f64,
    pub t: f64,
    pub sample_every: usize,
    pub solver: String,
}

impl Default for Integrate {
    fn default() -> Self {
        Integrate { h: 1e-3, t: 1.0, sample_every: 10, solver: "rk4".into() }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Observables {
    pub k_list: Option<Vec<usize>>,
    /// 1-based spin copy pairs `[alpha, beta]`
    pub pairs: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngCfg {
    pub seed: u64,
}

impl Default for RngCfg {
    fn default() -> Self {
        RngCfg { seed: 0 }
    }
}

pub fn load(path: &std::path::Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg: Config = toml::from_str(&text).context("config does not match the schema")?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &Config) -> Result<()> {
    if cfg.system.n == 0 || cfg.system.d == 0 {
        bail!("system.n and system.d must be positive");
    }
    if !(cfg.system.gamma > 0.0) {
        bail!("system.gamma must be positive");
    }
    if !(cfg.integrate.h > 0.0) {
        bail!("integrate.h must be positive");
    }
    if cfg.integrate.sample_every == 0 {
        bail!("integrate.sample_every must be positive");
    }
    match cfg.integrate.solver.as_str() {
        "rk4" | "exact" | "both" => {}
        other => bail!("integrate.solver must be rk4, exact or both (got {other})"),
    }
    match cfg.initial.mode.as_str() {
        "normal-form" | "s1-coords" | "qpW" | "explicit" => {}
        other => bail!("initial.mode must be normal-form, s1-coords, qpW or explicit (got {other})"),
    }
    if let Some(pairs) = &cfg.observables.pairs {
        for p in pairs {
            if p[0] == 0 || p[1] == 0 || p[0] > cfg.system.d || p[1] > cfg.system.d {
                bail!("observables.pairs entries must be 1-based spin labels up to d");
            }
        }
    }
    Ok(())
}

fn rows_to_spins(rows: &[Vec<[f64; 2]>], n: usize, what: &str) -> Result<Vec<CVec>> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != n {
            bail!("each {what} row needs {n} complex entries");
        }
        out.push(row.iter().map(|&[re, im]| C64::new(re, im)).collect());
    }
    Ok(out)
}

impl Config {
    pub fn k_list(&self) -> Vec<usize> {
        self.observables.k_list.clone().unwrap_or_else(|| vec![0, 1, 2])
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match &self.observables.pairs {
            Some(pairs) => pairs.iter().map(|&[a, b]| (a - 1, b - 1)).collect(),
            None => {
                let d = self.system.d;
                (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).collect()
            }
        }
    }

    /// Build the initial slice state per `initial.mode`, using the seeded
    /// stream for any unspecified data.
    pub fn initial_state(&self) -> Result<SlicePoint> {
        let n = self.system.n;
        let d = self.system.d;
        let gamma = self.system.gamma;
        use rand::SeedableRng as _;
        let mut rng = Rng64::seed_from_u64(self.rng.seed);
        match self.initial.mode.as_str() {
            "normal-form" => {
                let y = match &self.initial.y {
                    Some(y) => {
                        if y.len() != n {
                            bail!("initial.y needs {n} entries");
                        }
                        y.clone()
                    }
                    None => sample::random_normal_form_y(n, gamma, 0.4, &mut rng),
                };
                let dp = normal_form_d(&y, d, gamma)?;
                Ok(dressed_to_slice(&dp)?)
            }
            "s1-coords" => {
                let coords = match (&self.initial.y, &self.initial.v_lead) {
                    (Some(y), Some(v_lead)) => {
                        if y.len() != n || v_lead.len() != n {
                            bail!("initial.y and initial.v_lead need {n} entries");
                        }
                        let v_mid = match &self.initial.v_mid {
                            Some(rows) => rows_to_spins(rows, n, "v_mid")?,
                            None => Vec::new(),
                        };
                        if v_mid.len() != d.saturating_sub(2) {
                            bail!("initial.v_mid needs {} rows for d = {d}", d.saturating_sub(2));
                        }
                        S1Coords {
                            y: y.clone(),
                            v_lead: v_lead.clone(),
                            v_mid,
                            tau: self.initial.tau.clone().unwrap_or_else(|| vec![0.0; n]),
                            big_gamma: self.initial.big_gamma.clone().unwrap_or_else(|| vec![0.0; n]),
                            gamma,
                        }
                    }
                    _ => sample::random_s1_coords(n, d, gamma, &mut rng)?,
                };
                let dp = slice_point_s1(&coords)?;
                Ok(dressed_to_slice(&dp)?)
            }
            "qpW" => {
                let (q, p, w) = match (&self.initial.q, &self.initial.p, &self.initial.w) {
                    (Some(q), Some(p), Some(w)) => {
                        if q.len() != n || p.len() != n || w.len() != d {
                            bail!("initial.q, initial.p need {n} entries and initial.w needs {d} rows");
                        }
                        let spins = rows_to_spins(w, n, "w")?;
                        let block =
                            SpinBlock::new(spins.into_iter().map(SpinVector::new).collect());
                        let block = sample::scale_rows_to_phi(&block, &vec![gamma; n])?;
                        (q.clone(), p.clone(), block)
                    }
                    _ => {
                        let q = sample::random_regular_angles(n, &mut rng);
                        let p: Vec<f64> = (0..n).map(|_| 0.3 * sample::normal(&mut rng)).collect();
                        let w = sample::random_phi_constrained_block(n, d, gamma, &mut rng)?;
                        (q, p, w)
                    }
                };
                let dp = chart_qpw_forward(&q, &p, &w, gamma)?;
                Ok(gauge_fix_plus(&q, &dp.v, gamma)?)
            }
            "explicit" => {
                let (q, v) = match (&self.initial.q, &self.initial.v) {
                    (Some(q), Some(v)) => {
                        if q.len() != n || v.len() != d {
                            bail!("initial.q needs {n} entries and initial.v needs {d} rows");
                        }
                        (q.clone(), rows_to_spins(v, n, "v")?)
                    }
                    _ => {
                        let sp = sample::random_slice_point(n, d, gamma, &mut rng)?;
                        (sp.q.clone(), sp.v.clone())
                    }
                };
                Ok(gauge_fix_plus(&q, &v, gamma)?)
            }
            other => bail!("unknown initial.mode {other}"),
        }
    }
}
