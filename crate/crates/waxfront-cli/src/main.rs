//! Command-line driver: solve / steady / smalltime / eigen / asymptotic /
//! sweep / validate / convert, all reading one flat JSON config with
//! per-field `--set` overrides.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use waxfront::conductivity::ConductivitySpec;
use waxfront::eigen;
use waxfront::error::Error;
use waxfront::outer;
use waxfront::output;
use waxfront::physical::{dimensional_to_dimensionless, PhysicalParams};
use waxfront::small_time::SmallTime;
use waxfront::solver::{self, SolverConfig};
use waxfront::steady_state::SteadyState;
use waxfront::sweep::{self, SweepSpec};
use waxfront::Conductivity;

#[derive(Parser)]
#[command(
    name = "waxfront",
    version,
    about = "Wax-layer moving-boundary solver and validation harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Flat JSON config file; flags and --set override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $WAXFRONT_OUT/<subcommand> or
    /// ./waxfront-out/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Parallel jobs for sweeps (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override a config field, e.g. --set k=2 --set eps=0.1.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the moving-boundary solver for one parameter set.
    Solve,
    /// Emit the steady-state profile and its record.
    Steady,
    /// Emit the small-time front series (and optionally a profile).
    Smalltime,
    /// Solve the principal decay-rate eigenproblem.
    Eigen,
    /// Integrate the fast-conduction outer front evolution.
    Asymptotic,
    /// Run the full parameter sweep and write per-run artifacts.
    Sweep,
    /// Run the sweep plus all cross-regime checks; nonzero exit on failure.
    Validate,
    /// Convert laboratory quantities to (eps, k) and the problem scales.
    Convert,
}

fn default_n_x() -> usize {
    solver::N_X_DEFAULT
}
fn default_t_end() -> f64 {
    20.0
}
fn default_safety() -> f64 {
    0.4
}
fn default_steady_tol() -> f64 {
    0.01
}
fn default_output_stride() -> u32 {
    8
}
fn default_grid_points() -> usize {
    201
}
fn default_samples() -> usize {
    200
}
fn default_dt_out() -> f64 {
    1e-3
}

/// Everything a config file may carry; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    k: Option<f64>,
    eps: Option<f64>,
    /// Shorthand for the quadratic conductivity family.
    c: Option<f64>,
    conductivity: Option<ConductivitySpec>,
    #[serde(default = "default_n_x")]
    n_x: usize,
    delta: Option<f64>,
    #[serde(default = "default_t_end")]
    t_end: f64,
    #[serde(default = "default_safety")]
    safety: f64,
    #[serde(default = "default_steady_tol")]
    steady_tol: f64,
    #[serde(default = "default_output_stride")]
    output_stride: u32,
    snapshot_times: Option<Vec<f64>>,
    /// Sampling resolution for profile CSVs.
    #[serde(default = "default_grid_points")]
    grid_points: usize,
    /// Sample count for the small-time series CSV.
    #[serde(default = "default_samples")]
    samples: usize,
    /// Upper end of the small-time series CSV (default: validity horizon).
    t_max: Option<f64>,
    /// If set, also emit the small-time profile at this time.
    u_at: Option<f64>,
    /// Output spacing of the outer-solution integration.
    #[serde(default = "default_dt_out")]
    dt_out: f64,
    c_values: Option<Vec<f64>>,
    k_values: Option<Vec<f64>>,
    eps_values: Option<Vec<f64>>,
    jobs: Option<usize>,
    physical: Option<PhysicalParams>,
}

impl FileConfig {
    fn load(path: Option<&Path>, sets: &[String]) -> Result<Self, Error> {
        let mut value: Value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::ParseError(format!("cannot read {}: {e}", p.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::ParseError(format!("{}: {e}", p.display())))?
            }
            None => json!({}),
        };
        if !value.is_object() {
            return Err(Error::ParseError(
                "config root must be a JSON object".into(),
            ));
        }
        for set in sets {
            let (key, raw) = set.split_once('=').ok_or_else(|| {
                Error::ParseError(format!("--set needs KEY=VALUE, got {set:?}"))
            })?;
            let parsed: Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| Value::String(raw.to_string()));
            value
                .as_object_mut()
                .expect("checked above")
                .insert(key.to_string(), parsed);
        }
        serde_json::from_value(value).map_err(|e| Error::ParseError(e.to_string()))
    }

    fn model(&self) -> Result<Conductivity, Error> {
        match (&self.conductivity, self.c) {
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "give either c or conductivity, not both".into(),
            )),
            (Some(spec), None) => spec.build(),
            (None, Some(c)) => Conductivity::quadratic(c),
            (None, None) => Conductivity::quadratic(0.0),
        }
    }

    fn require_k(&self) -> Result<f64, Error> {
        let k = self
            .k
            .ok_or_else(|| Error::InvalidConfig("config field k is required".into()))?;
        if !(k > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "k = {k} but a growing wax layer requires k > 1"
            )));
        }
        Ok(k)
    }

    fn require_eps(&self) -> Result<f64, Error> {
        let eps = self
            .eps
            .ok_or_else(|| Error::InvalidConfig("config field eps is required".into()))?;
        if !(eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must be positive, got {eps}"
            )));
        }
        Ok(eps)
    }

    fn solver_config(&self) -> Result<SolverConfig, Error> {
        let mut cfg = SolverConfig::new(self.model()?, self.require_k()?, self.require_eps()?);
        cfg.n_x = self.n_x;
        cfg.delta = self.delta;
        cfg.t_end = self.t_end;
        cfg.safety = self.safety;
        cfg.steady_tol = self.steady_tol;
        cfg.output_stride = self.output_stride;
        if let Some(times) = &self.snapshot_times {
            cfg.snapshot_times = times.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn sweep_spec(&self) -> Result<SweepSpec, Error> {
        let mut spec = SweepSpec {
            n_x: self.n_x,
            delta: self.delta,
            t_end: self.t_end,
            safety: self.safety,
            steady_tol: self.steady_tol,
            output_stride: self.output_stride,
            snapshot_times: self.snapshot_times.clone(),
            ..SweepSpec::default()
        };
        if let Some(cs) = &self.c_values {
            spec.c_values = cs.clone();
        }
        if let Some(ks) = &self.k_values {
            spec.k_values = ks.clone();
        }
        if let Some(es) = &self.eps_values {
            spec.eps_values = es.clone();
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn out_dir(cli: &Cli, sub: &str) -> PathBuf {
    if let Some(dir) = &cli.out {
        return dir.clone();
    }
    let root = std::env::var_os("WAXFRONT_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("waxfront-out"));
    root.join(sub)
}

fn jobs(cli: &Cli, cfg: &FileConfig) -> usize {
    cli.jobs
        .or(cfg.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Error> {
    let cfg = FileConfig::load(cli.config.as_deref(), &cli.sets)?;
    match cli.cmd {
        Cmd::Solve => cmd_solve(cli, &cfg),
        Cmd::Steady => cmd_steady(cli, &cfg),
        Cmd::Smalltime => cmd_smalltime(cli, &cfg),
        Cmd::Eigen => cmd_eigen(cli, &cfg),
        Cmd::Asymptotic => cmd_asymptotic(cli, &cfg),
        Cmd::Sweep => cmd_sweep(cli, &cfg, false),
        Cmd::Validate => cmd_sweep(cli, &cfg, true),
        Cmd::Convert => cmd_convert(cli, &cfg),
    }
}

fn cmd_solve(cli: &Cli, cfg: &FileConfig) -> Result<ExitCode, Error> {
    let solver_cfg = cfg.solver_config()?;
    let record = solver::run(&solver_cfg)?;
    let dir = out_dir(cli, "solve");
    let artifacts = output::write_run_artifacts(&dir, &record)?;
    output::write_manifest(&dir, &record.params, &artifacts)?;
    println!(
        "h_final = {:.6} (h_s = {:.6}, gap = {:.2e}) after {} steps, t = {:.4}",
        record.h_final(),
        record.h_s,
        record.diag.final_h_gap,
        record.diag.steps,
        record.t_final()
    );
    println!("artifacts in {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_steady(cli: &Cli, cfg: &FileConfig) -> Result<ExitCode, Error> {
    let model = cfg.model()?;
    let k = cfg.require_k()?;
    let steady = SteadyState::new(&model, k)?;
    let h_s = steady.height();
    let g = cfg.grid_points.max(2);

    let mut csv = String::from("x,u\n");
    for i in 0..g {
        let x = h_s * i as f64 / (g - 1) as f64;
        csv.push_str(&output::fmt_num(x));
        csv.push(',');
        csv.push_str(&output::fmt_num(steady.profile(x)?));
        csv.push('\n');
    }
    let record = json!({
        "k": k,
        "c": model.quadratic_coefficient(),
        "h_s": h_s,
        "mean_D": steady.mean_conductivity(),
        "inflection_point": steady.inflection_point(),
    });

    let dir = out_dir(cli, "steady");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("steady.csv"), csv)?;
    std::fs::write(dir.join("steady.json"), output::pretty(&record))?;
    let effective = effective_config(cfg);
    output::write_manifest(
        &dir,
        &effective,
        &["steady.csv".into(), "steady.json".into()],
    )?;
    println!("h_s = {h_s:.12}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_smalltime(cli: &Cli, cfg: &FileConfig) -> Result<ExitCode, Error> {
    let model = cfg.model()?;
    let k = cfg.require_k()?;
    let eps = cfg.require_eps()?;
    let st = SmallTime::new(&model, k, eps)?;
    let t_max = cfg.t_max.unwrap_or_else(|| st.t_valid());
    let n = cfg.samples.max(2);

    let mut csv = String::from("t,h\n");
    for i in 0..n {
        let t = t_max * i as f64 / (n - 1) as f64;
        csv.push_str(&output::fmt_num(t));
        csv.push(',');
        csv.push_str(&output::fmt_num(st.h(t)));
        csv.push('\n');
    }
    let dir = out_dir(cli, "smalltime");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("smalltime_h.csv"), csv)?;
    let mut artifacts = vec!["smalltime_h.csv".to_string()];

    if let Some(t) = cfg.u_at {
        if !(t > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "u_at must be positive, got {t}"
            )));
        }
        let x_max = st.h(t) / t;
        let g = cfg.grid_points.max(2);
        let mut csv = String::from("X,u\n");
        for i in 0..g {
            let x = x_max * i as f64 / (g - 1) as f64;
            csv.push_str(&output::fmt_num(x));
            csv.push(',');
            csv.push_str(&output::fmt_num(st.u(x, t)));
            csv.push('\n');
        }
        std::fs::write(dir.join("smalltime_u.csv"), csv)?;
        artifacts.push("smalltime_u.csv".to_string());
    }

    let record = json!({
        "k": k,
        "eps": eps,
        "d_prime_one": st.d_prime_one,
        "h1": st.h1,
        "h2": st.h2,
        "t_valid": st.t_valid(),
    });
    std::fs::write(dir.join("smalltime.json"), output::pretty(&record))?;
    artifacts.push("smalltime.json".to_string());
    let effective = effective_config(cfg);
    output::write_manifest(&dir, &effective, &artifacts)?;
    println!("h1 = {}, h2 = {}, valid to t = {}", st.h1, st.h2, st.t_valid());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eigen(cli: &Cli, cfg: &FileConfig) -> Result<ExitCode, Error> {
    let model = cfg.model()?;
    let k = cfg.require_k()?;
    let eps = cfg.require_eps()?;
    let pair = eigen::solve_principal_eigen(&model, k, eps)?;
    let quotient = eigen::rayleigh_quotient(&pair, &model, k, eps);
    let rayleigh_residual = (quotient - pair.lambda0).abs() / pair.lambda0;
    let limit = eigen::lambda0_small_eps(&model, k)?;

    let mut csv = String::from("x,psi0\n");
    for (x, p) in pair.x.iter().zip(&pair.psi0) {
        csv.push_str(&output::fmt_num(*x));
        csv.push(',');
        csv.push_str(&output::fmt_num(*p));
        csv.push('\n');
    }
    let record = json!({
        "lambda0": pair.lambda0,
        "lambda0_smalleps": limit,
        "rayleigh_residual": rayleigh_residual,
        "norm_constant": pair.norm_constant,
    });

    let dir = out_dir(cli, "eigen");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("psi0.csv"), csv)?;
    std::fs::write(dir.join("eigen.json"), output::pretty(&record))?;
    let effective = effective_config(cfg);
    output::write_manifest(&dir, &effective, &["psi0.csv".into(), "eigen.json".into()])?;
    println!(
        "lambda0 = {:.9} (small-eps limit {:.9}, rayleigh residual {:.2e})",
        pair.lambda0, limit, rayleigh_residual
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_asymptotic(cli: &Cli, cfg: &FileConfig) -> Result<ExitCode, Error> {
    let model = cfg.model()?;
    let k = cfg.require_k()?;
    let sol = outer::integrate_h0(&model, k, cfg.t_end, cfg.dt_out)?;

    let mut csv = String::from("t,h0\n");
    for (t, h) in sol.t.iter().zip(&sol.h0) {
        csv.push_str(&output::fmt_num(*t));
        csv.push(',');
        csv.push_str(&output::fmt_num(*h));
        csv.push('\n');
    }
    let dir = out_dir(cli, "asymptotic");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("h0.csv"), csv)?;
    let mut artifacts = vec!["h0.csv".to_string()];

    if let Some(times) = &cfg.snapshot_times {
        let g = cfg.grid_points.max(2);
        for &t in times.iter().filter(|&&t| t >= 0.0 && t <= cfg.t_end) {
            let h0 = sol.eval(t);
            let mut csv = String::from("x,u\n");
            for i in 0..g {
                let x = h0 * i as f64 / (g - 1) as f64;
                let u = if h0 > 0.0 {
                    outer::u0_profile(&model, k, h0, x)?
                } else {
                    1.0
                };
                csv.push_str(&output::fmt_num(x));
                csv.push(',');
                csv.push_str(&output::fmt_num(u));
                csv.push('\n');
            }
            let name = format!("u0_{t:.6}.csv");
            std::fs::write(dir.join(&name), csv)?;
            artifacts.push(name);
        }
    }

    let record = json!({
        "k": k,
        "c": model.quadratic_coefficient(),
        "h_s": sol.h_s,
        "mu": outer::mu(&model, k)?,
    });
    std::fs::write(dir.join("asymptotic.json"), output::pretty(&record))?;
    artifacts.push("asymptotic.json".to_string());
    let effective = effective_config(cfg);
    output::write_manifest(&dir, &effective, &artifacts)?;
    println!(
        "h0({}) = {:.8}, h_s = {:.8}, mu = {:.8}",
        cfg.t_end,
        sol.h0.last().unwrap(),
        sol.h_s,
        outer::mu(&model, k)?,
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(cli: &Cli, cfg: &FileConfig, gate: bool) -> Result<ExitCode, Error> {
    let spec = cfg.sweep_spec()?;
    let jobs = jobs(cli, cfg);
    let result = sweep::run_sweep(&spec, jobs)?;
    let dir = out_dir(cli, if gate { "validate" } else { "sweep" });
    sweep::write_sweep_artifacts(&dir, &result)?;

    let mut failed_runs = 0usize;
    for o in &result.outcomes {
        match &o.analysis {
            Ok(a) => {
                let status = if a.converged && a.invariants.pass {
                    "ok"
                } else {
                    "FAIL"
                };
                println!(
                    "c={:>4} k={:>4} eps={:>4}: {status} (gap {:.2e}, steps {})",
                    o.c, o.k, o.eps, a.reconcile.steady_gap, a.steps
                );
                if status == "FAIL" {
                    failed_runs += 1;
                }
            }
            Err(e) => {
                println!("c={:>4} k={:>4} eps={:>4}: ERROR {e}", o.c, o.k, o.eps);
                failed_runs += 1;
            }
        }
    }
    println!(
        "trends: height-with-k {}, time-with-eps {}",
        if result.trends.height_with_k.iter().all(|e| e.pass) { "ok" } else { "FAIL" },
        if result.trends.time_with_eps.iter().all(|e| e.pass) { "ok" } else { "FAIL" },
    );
    println!(
        "verdict: {} ({} runs, {} failing); report in {}",
        if result.verdict { "PASS" } else { "FAIL" },
        result.outcomes.len(),
        failed_runs,
        dir.display()
    );
    if failed_runs > 0 || (gate && !result.verdict) {
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_convert(cli: &Cli, cfg: &FileConfig) -> Result<ExitCode, Error> {
    let physical = cfg.physical.as_ref().ok_or_else(|| {
        Error::InvalidConfig("config field physical is required for convert".into())
    })?;
    let dims = dimensional_to_dimensionless(physical)?;
    let record = serde_json::to_value(dims).expect("serializable");
    let dir = out_dir(cli, "convert");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("convert.json"), output::pretty(&record))?;
    let effective = effective_config(cfg);
    output::write_manifest(&dir, &effective, &["convert.json".into()])?;
    println!(
        "eps = {:.6}, k = {:.6}, scales: {:.4} K, {:.6} m, {:.4e} s",
        dims.eps, dims.k, dims.temp_scale, dims.length_scale, dims.time_scale
    );
    Ok(ExitCode::SUCCESS)
}

/// The fully materialised config as it will be hashed into manifests;
/// re-parsing this value yields the same hash.
fn effective_config(cfg: &FileConfig) -> Value {
    serde_json::to_value(cfg).expect("serializable")
}
