//! Command-line laboratory for the trigonometric spin
//! Ruijsenaars-Schneider system.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 dynamical
//! abort, sampling failure or verification failure.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use spinrs_core::dynamics::{exact_solve, newton_residual, rk4_integrate, GaugeState, Trajectory};
use spinrs_core::redpoisson::jacobian_rank;
use spinrs_core::reduction::normal_form_d;
use spinrs_core::sample::{self};
use spinrs_core::verify::{run_suite, Suite};
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "spinrs",
    about = "Simulation and verification laboratory for the trigonometric spin Ruijsenaars-Schneider system",
    long_about = None,
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a trajectory and emit a CSV plus a JSON summary
    Simulate {
        /// TOML configuration file
        #[arg(long)]
        config: PathBuf,
        /// Output directory for trajectory.csv and summary.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one randomized property suite and emit a JSON report
    Verify {
        /// zakrzewski | double | reduction | reduced-bracket | lax | invariant-algebra | limits | all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Optional output directory for the JSON report
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample slice coordinates and report numeric Jacobian ranks
    Rank {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of sampled points
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct the one-spin normal form and report its residuals
    NormalForm {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the degeneration checks (scaling limit and single-spin model)
    Limits {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap exits 0 for --help/--version; anything else is usage
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_thread_pool();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

/// Cap the worker pool by the SPINRS_THREADS environment variable.
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("SPINRS_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Verify { suite, seed, samples, out } => verify(&suite, seed, samples, out.as_deref()),
        Command::Rank { n, d, gamma, seed, samples, out } => {
            rank(n, d, gamma, seed, samples, out.as_deref())
        }
        Command::NormalForm { n, d, gamma, seed, out } => normal_form(n, d, gamma, seed, out.as_deref()),
        Command::Limits { seed, samples, out } => limits(seed, samples, out.as_deref()),
    }
}

/// Full-precision decimal float (17 significant digits).
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Round to three significant digits for the readable half of a report.
fn round3(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.2e}").parse().unwrap_or(x)
}

fn write_json(path: Option<&Path>, name: &str, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let file = dir.join(name);
            std::fs::write(&file, text.as_bytes())?;
            println!("wrote {}", file.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn simulate(config_path: &Path, out: &Path) -> Result<i32> {
    let cfg = config::load(config_path)?;
    let state = cfg.initial_state().context("cannot build the initial state")?;
    let k_list = cfg.k_list();
    let pairs = cfg.pairs();
    std::fs::create_dir_all(out)?;

    let run_rk4 = matches!(cfg.integrate.solver.as_str(), "rk4" | "both");
    let run_exact = matches!(cfg.integrate.solver.as_str(), "exact" | "both");

    let mut summary = json!({
        "config": {
            "n": cfg.system.n,
            "d": cfg.system.d,
            "gamma": cfg.system.gamma,
            "mode": cfg.initial.mode,
            "solver": cfg.integrate.solver,
            "h": cfg.integrate.h,
            "t": cfg.integrate.t,
            "sample_every": cfg.integrate.sample_every,
            "seed": cfg.rng.seed,
        },
    });
    let mut exit = 0;

    let mut rk_traj: Option<Trajectory> = None;
    if run_rk4 {
        let traj = rk4_integrate(&state, cfg.integrate.h, cfg.integrate.t, cfg.integrate.sample_every)
            .map_err(|e| anyhow!("integration setup: {e}"))?;
        write_trajectory_csv(&out.join("trajectory.csv"), &traj, &k_list, &pairs)?;
        let mut drifts = serde_json::Map::new();
        for k in 1..=traj.n() {
            drifts.insert(format!("tr_l_{k}"), drift_entry(traj.tr_drift(k)));
        }
        let mut inv_worst: f64 = 0.0;
        for &k in &k_list {
            for &(a, b) in &pairs {
                inv_worst = inv_worst.max(traj.invariant_drift(k, a, b));
            }
        }
        let constraint = traj.max_moment_residual().map_err(|e| anyhow!("{e}"))?;
        summary["rk4"] = json!({
            "samples": traj.times.len(),
            "drifts": Value::Object(drifts),
            "invariant_drift": drift_entry(inv_worst),
            "sum_qdot_drift": drift_entry(traj.sum_qdot_drift()),
            "max_im_column_sum": drift_entry(traj.max_im_u()),
            "constraint_residual": drift_entry(constraint),
            "min_qdot": drift_entry(traj.min_qdot()),
            "newton_residual": match newton_residual(&traj) {
                Ok(r) => drift_entry(r),
                Err(_) => Value::Null,
            },
            "abort": traj.abort.as_ref().map(|a| a.to_string()),
        });
        if let Some(a) = &traj.abort {
            eprintln!("dynamical abort: {a}");
            exit = 2;
        }
        rk_traj = Some(traj);
    }
    if run_exact && exit == 0 {
        let times: Vec<f64> = match &rk_traj {
            Some(t) => t.times.clone(),
            None => {
                let steps = (cfg.integrate.t / cfg.integrate.h).ceil() as usize;
                (0..=steps / cfg.integrate.sample_every)
                    .map(|m| (m * cfg.integrate.sample_every) as f64 * cfg.integrate.h)
                    .collect()
            }
        };
        let mut states: Vec<GaugeState> = Vec::with_capacity(times.len());
        let mut abort: Option<String> = None;
        for &t in &times {
            match exact_solve(&state, t) {
                Ok(s) => states.push(s),
                Err(e) => {
                    abort = Some(format!("exact solve at t = {t}: {e}"));
                    break;
                }
            }
        }
        let got = states.len();
        let traj = Trajectory {
            times: times[..got].to_vec(),
            samples: states,
            gamma: cfg.system.gamma,
            abort: None,
        };
        write_trajectory_csv(&out.join("trajectory_exact.csv"), &traj, &k_list, &pairs)?;
        let mut agreement = serde_json::Map::new();
        if let Some(rk) = &rk_traj {
            let mut worst: f64 = 0.0;
            for (idx, t) in traj.times.iter().enumerate() {
                let a = &rk.samples[idx];
                let b = &traj.samples[idx];
                let mut local: f64 = 0.0;
                for k in 1..=rk.n() {
                    local = local.max((a.tr_l_power(k) - b.tr_l_power(k)).abs() / a.tr_l_power(k).abs());
                }
                for &k in &k_list {
                    for &(al, be) in &pairs {
                        let x = a.invariant(k, al, be);
                        let y = b.invariant(k, al, be);
                        local = local.max((x - y).norm() / (1.0 + x.norm()));
                    }
                }
                agreement.insert(format!("t_{t}"), drift_entry(local));
                worst = worst.max(local);
            }
            agreement.insert("max".into(), drift_entry(worst));
        }
        summary["exact"] = json!({
            "samples": traj.times.len(),
            "abort": abort,
            "agreement": Value::Object(agreement),
        });
        if let Some(a) = abort {
            eprintln!("dynamical abort: {a}");
            exit = 2;
        }
    }
    let file = out.join("summary.json");
    std::fs::write(&file, serde_json::to_string_pretty(&summary)?)?;
    println!("wrote {}", file.display());
    Ok(exit)
}

fn drift_entry(x: f64) -> Value {
    json!({ "value": round3(x), "raw": x })
}

fn write_trajectory_csv(
    path: &Path,
    traj: &Trajectory,
    k_list: &[usize],
    pairs: &[(usize, usize)],
) -> Result<()> {
    let n = traj.n();
    let d = traj.d();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("q_{i}")));
    for a in 1..=d {
        for i in 1..=n {
            header.push(format!("re_v{a}_{i}"));
            header.push(format!("im_v{a}_{i}"));
        }
    }
    header.extend((1..=n).map(|k| format!("tr_l_{k}")));
    for &k in k_list {
        for &(a, b) in pairs {
            header.push(format!("re_i{}_{}{}", k, a + 1, b + 1));
            header.push(format!("im_i{}_{}{}", k, a + 1, b + 1));
        }
    }
    header.push("constraint_residual".into());
    writeln!(f, "{}", header.join(","))?;
    for (t, s) in traj.times.iter().zip(&traj.samples) {
        let mut row = vec![full(*t)];
        row.extend(s.q.iter().map(|&x| full(x)));
        for a in 0..d {
            for i in 0..n {
                row.push(full(s.v[a][i].re));
                row.push(full(s.v[a][i].im));
            }
        }
        for k in 1..=n {
            row.push(full(s.tr_l_power(k)));
        }
        for &k in k_list {
            for &(a, b) in pairs {
                let z = s.invariant(k, a, b);
                row.push(full(z.re));
                row.push(full(z.im));
            }
        }
        row.push(full(s.moment_residual().map_err(|e| anyhow!("{e}"))?));
        writeln!(f, "{}", row.join(","))?;
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn verify(suite: &str, seed: u64, samples: usize, out: Option<&Path>) -> Result<i32> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::all().to_vec()
    } else {
        vec![Suite::parse(suite).ok_or_else(|| {
            anyhow!("unknown suite {suite}; expected zakrzewski, double, reduction, reduced-bracket, lax, invariant-algebra, limits or all")
        })?]
    };
    let mut all_pass = true;
    let mut reports = Vec::new();
    for s in suites {
        let report = run_suite(s, seed, samples);
        all_pass &= report.all_pass();
        for p in &report.properties {
            println!(
                "[{}] {}: {} (max {:.3e}, threshold {:.1e})",
                report.suite,
                p.name,
                if p.pass { "pass" } else { "FAIL" },
                p.max_violation,
                p.threshold
            );
        }
        reports.push(json!({
            "suite": report.suite,
            "seed": report.seed,
            "samples": report.samples,
            "pass": report.all_pass(),
            "properties": report.properties.iter().map(|p| json!({
                "name": p.name,
                "pass": p.pass,
                "max_violation": round3(p.max_violation),
                "threshold": p.threshold,
                "raw": { "max_violation": p.max_violation },
            })).collect::<Vec<_>>(),
        }));
    }
    let doc = json!({ "reports": reports, "pass": all_pass });
    write_json(out, &format!("verify_{}.json", suite.replace('/', "_")), &doc)?;
    Ok(if all_pass { 0 } else { 2 })
}

fn rank(n: usize, d: usize, gamma: f64, seed: u64, samples: usize, out: Option<&Path>) -> Result<i32> {
    if n == 0 || d < 2 {
        bail!("rank needs n >= 1 and d >= 2");
    }
    use rayon::prelude::*;
    let results: Vec<std::result::Result<(usize, usize), String>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample::stream(seed, i);
            let coords = sample::random_s1_coords(n, d, gamma, &mut rng).map_err(|e| e.to_string())?;
            jacobian_rank(&coords).map_err(|e| e.to_string())
        })
        .collect();
    let mut histogram: std::collections::BTreeMap<String, usize> = Default::default();
    let mut failures = Vec::new();
    for r in &results {
        match r {
            Ok((full, ham)) => *histogram.entry(format!("({full}, {ham})")).or_default() += 1,
            Err(e) => failures.push(e.clone()),
        }
    }
    let expected = format!("({}, {})", 2 * n * d - n, n);
    let ok = failures.is_empty()
        && (samples == 0 || (histogram.len() == 1 && histogram.contains_key(&expected)));
    let doc = json!({
        "n": n,
        "d": d,
        "gamma": gamma,
        "seed": seed,
        "samples": samples,
        "expected": { "rank_full": 2 * n * d - n, "rank_hamiltonians": n },
        "histogram": histogram,
        "sampling_failures": failures,
        "pass": ok,
    });
    println!(
        "rank test (n, d) = ({n}, {d}): {} (expected {expected})",
        if ok { "pass" } else { "FAIL" }
    );
    write_json(out, "rank.json", &doc)?;
    if !failures.is_empty() {
        return Ok(2);
    }
    Ok(if ok { 0 } else { 2 })
}

fn normal_form(n: usize, d: usize, gamma: f64, seed: u64, out: Option<&Path>) -> Result<i32> {
    use rand::SeedableRng as _;
    let mut rng = sample::Rng64::seed_from_u64(seed);
    let y = sample::random_normal_form_y(n, gamma, 0.5, &mut rng);
    let dp = normal_form_d(&y, d, gamma).map_err(|e| anyhow!("{e}"))?;
    let sp = spinrs_core::reduction::dressed_to_slice(&dp).map_err(|e| anyhow!("{e}"))?;
    let moment = sp.moment_residual().map_err(|e| anyhow!("{e}"))?;
    let doc = json!({
        "n": n,
        "d": d,
        "gamma": gamma,
        "seed": seed,
        "y": y,
        "last_spin": dp.v[d - 1].iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>(),
        "constraint_residual": drift_entry(dp.constraint_residual()),
        "moment_residual": drift_entry(moment),
        "slice_angles": sp.q,
    });
    write_json(out, "normal_form.json", &doc)?;
    Ok(0)
}

fn limits(seed: u64, samples: usize, out: Option<&Path>) -> Result<i32> {
    let report = run_suite(Suite::Limits, seed, samples);
    for p in &report.properties {
        println!(
            "[limits] {}: {} (max {:.3e}, threshold {:.1e})",
            p.name,
            if p.pass { "pass" } else { "FAIL" },
            p.max_violation,
            p.threshold
        );
    }
    let pass = report.all_pass();
    let doc = json!({
        "seed": seed,
        "samples": samples,
        "pass": pass,
        "properties": report.properties.iter().map(|p| json!({
            "name": p.name,
            "pass": p.pass,
            "max_violation": round3(p.max_violation),
            "threshold": p.threshold,
            "raw": { "max_violation": p.max_violation },
        })).collect::<Vec<_>>(),
    });
    write_json(out, "limits.json", &doc)?;
    Ok(if pass { 0 } else { 2 })
}
