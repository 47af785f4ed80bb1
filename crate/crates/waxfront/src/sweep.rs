//! Parameter sweeps with cross-regime validation.
//!
//! Each run is checked against the qualitative solution bounds (value,
//! flux, height, and growth-rate brackets plus pointwise cooling in time),
//! then reconciled with every analytic regime the crate knows about: the
//! steady state, the small-time series order, the principal decay rate,
//! and for small `ε` the outer front evolution. Trend checks compare runs
//! across the sweep axes. Failures are recorded per run; a sweep never
//! aborts because one run misbehaves.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::conductivity::Conductivity;
use crate::eigen;
use crate::error::{Error, Result};
use crate::outer;
use crate::output;
use crate::small_time::SmallTime;
use crate::solver::{self, RunRecord, SolverConfig, N_X_DEFAULT, N_X_FALLBACK};
use crate::steady_state::SteadyState;

/// Sweep definition: the cross product of the three parameter axes, with
/// shared solver controls.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub c_values: Vec<f64>,
    pub k_values: Vec<f64>,
    pub eps_values: Vec<f64>,
    pub n_x: usize,
    pub delta: Option<f64>,
    pub t_end: f64,
    pub safety: f64,
    pub steady_tol: f64,
    pub output_stride: u32,
    pub snapshot_times: Option<Vec<f64>>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            c_values: vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
            k_values: vec![2.0, 10.0, 20.0],
            eps_values: vec![0.1, 0.5, 1.0],
            n_x: N_X_DEFAULT,
            delta: None,
            t_end: 20.0,
            safety: 0.4,
            steady_tol: 0.01,
            output_stride: 8,
            snapshot_times: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.c_values.is_empty() || self.k_values.is_empty() || self.eps_values.is_empty() {
            return Err(Error::InvalidConfig("sweep axes must be non-empty".into()));
        }
        if let Some(&k) = self.k_values.iter().find(|&&k| !(k > 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "k = {k} in sweep but a growing wax layer requires k > 1"
            )));
        }
        if let Some(&e) = self.eps_values.iter().find(|&&e| !(e > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "eps = {e} in sweep but eps must be positive"
            )));
        }
        Ok(())
    }

    pub fn case_count(&self) -> usize {
        self.c_values.len() * self.k_values.len() * self.eps_values.len()
    }

    /// All `(c, k, eps)` cases in deterministic order.
    pub fn cases(&self) -> Vec<(f64, f64, f64)> {
        let mut cases = Vec::with_capacity(self.case_count());
        for &c in &self.c_values {
            for &k in &self.k_values {
                for &eps in &self.eps_values {
                    cases.push((c, k, eps));
                }
            }
        }
        cases
    }

    pub fn config_for(&self, c: f64, k: f64, eps: f64) -> Result<SolverConfig> {
        let model = Conductivity::quadratic(c)?;
        let mut cfg = SolverConfig::new(model, k, eps);
        cfg.n_x = self.n_x;
        cfg.delta = self.delta;
        cfg.t_end = self.t_end;
        cfg.safety = self.safety;
        cfg.steady_tol = self.steady_tol;
        cfg.output_stride = self.output_stride;
        if let Some(times) = &self.snapshot_times {
            cfg.snapshot_times = times.clone();
        }
        Ok(cfg)
    }
}

/// Qualitative solution-bound checks evaluated on a completed run.
///
/// `eta = 2·dX` absorbs the first-order discretisation error of the
/// one-sided boundary differences.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub eta: f64,
    /// `1/k − η ≤ v ≤ 1 + η` on every snapshot.
    pub value_bounds: bool,
    /// Pointwise cooling in time at matched physical positions.
    pub time_monotone: bool,
    /// `1 − η ≤ D(v)·v_x ≤ k + η` for the discrete flux on every snapshot.
    pub flux_bounds: bool,
    /// `0 < h < h_s + η` along the whole series.
    pub height_bounds: bool,
    /// `0 ≤ h_t < k − 1 + η` for the discrete growth rate.
    pub growth_bounds: bool,
    /// The mapped front value is the melt temperature exactly.
    pub front_value_exact: bool,
    pub pass: bool,
}

fn check_invariants(record: &RunRecord, model: &Conductivity, k: f64) -> InvariantReport {
    let n = record.params.n_x;
    let dx = 1.0 / (n - 1) as f64;
    let eta = 2.0 * dx;
    let wall_floor = 1.0 / k - eta;

    let mut value_bounds = true;
    let mut flux_bounds = true;
    let mut front_value_exact = true;
    for snap in &record.snapshots {
        for &v in &snap.v {
            if v < wall_floor || v > 1.0 + eta {
                value_bounds = false;
            }
        }
        if *snap.v.last().unwrap() != 1.0 {
            front_value_exact = false;
        }
        let grad = |i: usize| -> f64 {
            if i == 0 {
                (snap.v[1] - snap.v[0]) / (dx * snap.h)
            } else if i == n - 1 {
                (snap.v[n - 1] - snap.v[n - 2]) / (dx * snap.h)
            } else {
                (snap.v[i + 1] - snap.v[i - 1]) / (2.0 * dx * snap.h)
            }
        };
        for i in 0..n {
            let flux = model.d_unchecked(snap.v[i].clamp(0.0, 1.0)) * grad(i);
            if flux < 1.0 - eta - 1e-9 || flux > k + eta + 1e-9 {
                flux_bounds = false;
            }
        }
    }

    // Cooling in time: compare consecutive snapshots at the physical
    // positions of the earlier one (the later domain contains them).
    let mut time_monotone = true;
    for pair in record.snapshots.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.h < a.h {
            continue;
        }
        for i in 0..n {
            let x = i as f64 * dx * a.h;
            let later = interp_profile(b, x, dx);
            if later > a.v[i] + eta {
                time_monotone = false;
            }
        }
    }

    let mut height_bounds = true;
    for p in &record.series {
        if !(p.h > 0.0 && p.h < record.h_s + eta) {
            height_bounds = false;
        }
    }
    let growth_bounds = record.diag.min_discrete_ht >= -1e-12
        && record.diag.max_discrete_ht < (k - 1.0) + eta;

    let pass = value_bounds
        && time_monotone
        && flux_bounds
        && height_bounds
        && growth_bounds
        && front_value_exact;
    InvariantReport {
        eta,
        value_bounds,
        time_monotone,
        flux_bounds,
        height_bounds,
        growth_bounds,
        front_value_exact,
        pass,
    }
}

/// Linear interpolation of a snapshot at physical position `x ∈ [0, h]`.
fn interp_profile(snap: &solver::Snapshot, x: f64, dx: f64) -> f64 {
    let pos = (x / snap.h / dx).clamp(0.0, (snap.v.len() - 1) as f64);
    let i = (pos as usize).min(snap.v.len() - 2);
    let w = pos - i as f64;
    snap.v[i] * (1.0 - w) + snap.v[i + 1] * w
}

/// Linear interpolation of the front series at time `t`.
pub fn interp_series(series: &[solver::SeriesPoint], t: f64) -> Option<f64> {
    if series.is_empty() || t < series[0].t || t > series.last().unwrap().t {
        return None;
    }
    let idx = series.partition_point(|p| p.t <= t);
    if idx == 0 {
        return Some(series[0].h);
    }
    if idx >= series.len() {
        return Some(series.last().unwrap().h);
    }
    let (a, b) = (&series[idx - 1], &series[idx]);
    if b.t == a.t {
        return Some(b.h);
    }
    let w = (t - a.t) / (b.t - a.t);
    Some(a.h * (1.0 - w) + b.h * w)
}

/// First time the remaining gap `h_s − h` drops below `tol`, interpolated
/// between series samples.
pub fn time_to_steady(record: &RunRecord, tol: f64) -> Option<f64> {
    let target = record.h_s - tol;
    let series = &record.series;
    let idx = series.iter().position(|p| p.h >= target)?;
    if idx == 0 {
        return Some(series[0].t);
    }
    let (a, b) = (&series[idx - 1], &series[idx]);
    if b.h == a.h {
        return Some(b.t);
    }
    let w = (target - a.h) / (b.h - a.h);
    Some(a.t + w * (b.t - a.t))
}

/// Estimate of the asymptotic front height from three equispaced late
/// samples (exact for a single exponential approaching any offset).
fn aitken_asymptote(record: &RunRecord, fallback: f64) -> f64 {
    let series = &record.series;
    let t_first = series.first().map(|p| p.t).unwrap_or(0.0);
    let t_last = record.t_final();
    let span = t_last - t_first;
    if span <= 0.0 {
        return fallback;
    }
    let dt = span / 3.0;
    let h0 = interp_series(series, t_last - 2.0 * dt);
    let h1 = interp_series(series, t_last - dt);
    let h2 = interp_series(series, t_last);
    match (h0, h1, h2) {
        (Some(h0), Some(h1), Some(h2)) => {
            let d1 = h1 - h0;
            let d2 = h2 - h1;
            let curvature = d2 - d1;
            if curvature.abs() < 1e-14 {
                fallback
            } else {
                let est = h2 - d2 * d2 / curvature;
                if est.is_finite() && est > h2 - 1e-3 && est < h2 + (record.h_s).max(1.0) {
                    est
                } else {
                    fallback
                }
            }
        }
        _ => fallback,
    }
}

/// Cross-regime error table entries for one run.
#[derive(Debug, Clone, Serialize)]
pub struct ReconcileRow {
    pub steady_gap: f64,
    pub profile_gap: f64,
    /// Convergence order of the small-time series comparison; the two-term
    /// series truncates at third order.
    pub smalltime_exponent: Option<f64>,
    pub lambda_fit: Option<f64>,
    pub lambda0: Option<f64>,
    pub lambda_ratio: Option<f64>,
    /// Fast-conduction comparison, only meaningful for small `ε`.
    pub outer_sup_gap: Option<f64>,
}

/// Reconcile a completed run against the analytic regimes.
pub fn reconcile(record: &RunRecord, model: &Conductivity, k: f64, eps: f64) -> ReconcileRow {
    let steady_gap = record.diag.final_h_gap;
    let profile_gap = record.diag.final_profile_gap;
    let delta = record.params.delta;

    // Small-time order: error against the series at 8δ versus 4δ.
    let smalltime_exponent = SmallTime::new(model, k, eps).ok().and_then(|st| {
        let err_at = |t: f64| -> Option<f64> {
            interp_series(&record.series, t).map(|h| (h - st.h(t)).abs())
        };
        let e1 = err_at(8.0 * delta)?;
        let e0 = err_at(4.0 * delta)?;
        if e0 > 1e-12 && e1 > 1e-12 {
            Some((e1 / e0).log2())
        } else {
            None
        }
    });

    let lambda0 = eigen::solve_principal_eigen(model, k, eps)
        .ok()
        .map(|p| p.lambda0);

    // Decay fit against the run's own asymptote: the discrete equilibrium
    // sits O(dX) away from h_s, which would poison a fit pinned to h_s.
    let lambda_fit = {
        let h_inf = aitken_asymptote(record, record.h_s);
        let tol = record.params.steady_tol;
        let window = (1.2 * tol, 25.0 * tol);
        eigen::fit_decay_rate(record.series.iter().map(|p| (p.t, p.h)), h_inf, window)
            .ok()
            .map(|f| f.lambda)
    };
    let lambda_ratio = match (lambda_fit, lambda0) {
        (Some(f), Some(l)) if l > 0.0 => Some(f / l),
        _ => None,
    };

    let outer_sup_gap = if eps <= 0.1 {
        outer::integrate_h0(model, k, record.t_final().max(delta * 2.0), 1e-3)
            .ok()
            .map(|sol| {
                record
                    .series
                    .iter()
                    .map(|p| (p.h - sol.eval(p.t)).abs())
                    .fold(0.0f64, f64::max)
            })
    } else {
        None
    };

    ReconcileRow {
        steady_gap,
        profile_gap,
        smalltime_exponent,
        lambda_fit,
        lambda0,
        lambda_ratio,
        outer_sup_gap,
    }
}

/// Analysis attached to a successful run.
#[derive(Debug, Clone, Serialize)]
pub struct RunAnalysis {
    #[serde(skip)]
    pub record: RunRecord,
    pub h_s: f64,
    pub h_final: f64,
    pub t_final: f64,
    pub steps: u64,
    pub converged: bool,
    pub t_steady: Option<f64>,
    pub monotone_front: bool,
    pub invariants: InvariantReport,
    pub reconcile: ReconcileRow,
    /// Interior inflection of the steady profile observed vs. predicted by
    /// the sign change of `D'` over the steady value range.
    pub inflection_observed: bool,
    pub inflection_predicted: bool,
}

/// One sweep case with its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub c: f64,
    pub k: f64,
    pub eps: f64,
    pub n_x: usize,
    pub delta: f64,
    pub fallback_used: bool,
    pub analysis: std::result::Result<RunAnalysis, String>,
}

/// Trend comparison over one sweep axis.
#[derive(Debug, Clone, Serialize)]
pub struct TrendEntry {
    pub label: String,
    /// `(axis value, measured quantity)` pairs in axis order.
    pub values: Vec<(f64, f64)>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    /// Final height grows with `k` at fixed `(c, ε)`.
    pub height_with_k: Vec<TrendEntry>,
    /// Time to steady state grows with `ε` at fixed `(c, k)`.
    pub time_with_eps: Vec<TrendEntry>,
    pub pass: bool,
}

/// Monotone-trend checks across completed runs.
///
/// Needs at least two `k` values at some fixed `(c, ε)` and two `ε` values
/// at some fixed `(c, k)`; thinner coverage is an error.
pub fn trend_checks(outcomes: &[RunOutcome]) -> Result<TrendReport> {
    let lookup = |c: f64, k: f64, eps: f64| -> Option<&RunAnalysis> {
        outcomes
            .iter()
            .find(|o| o.c == c && o.k == k && o.eps == eps)
            .and_then(|o| o.analysis.as_ref().ok())
    };
    let mut cs: Vec<f64> = outcomes.iter().map(|o| o.c).collect();
    let mut ks: Vec<f64> = outcomes.iter().map(|o| o.k).collect();
    let mut es: Vec<f64> = outcomes.iter().map(|o| o.eps).collect();
    for v in [&mut cs, &mut ks, &mut es] {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
    }
    if ks.len() < 2 {
        return Err(Error::InsufficientCoverage(
            "need at least two k values for the height trend".into(),
        ));
    }
    if es.len() < 2 {
        return Err(Error::InsufficientCoverage(
            "need at least two eps values for the time-to-steady trend".into(),
        ));
    }

    let mut height_with_k = Vec::new();
    for &c in &cs {
        for &eps in &es {
            let values: Vec<(f64, f64)> = ks
                .iter()
                .filter_map(|&k| lookup(c, k, eps).map(|a| (k, a.h_final)))
                .collect();
            if values.len() < 2 {
                continue;
            }
            let pass = values.windows(2).all(|w| w[1].1 > w[0].1);
            height_with_k.push(TrendEntry {
                label: format!("c={c}, eps={eps}"),
                values,
                pass,
            });
        }
    }

    let mut time_with_eps = Vec::new();
    for &c in &cs {
        for &k in &ks {
            let values: Vec<(f64, f64)> = es
                .iter()
                .filter_map(|&eps| {
                    lookup(c, k, eps).and_then(|a| a.t_steady.map(|t| (eps, t)))
                })
                .collect();
            if values.len() < 2 {
                continue;
            }
            let pass = values.windows(2).all(|w| w[1].1 > w[0].1);
            time_with_eps.push(TrendEntry {
                label: format!("c={c}, k={k}"),
                values,
                pass,
            });
        }
    }

    let pass = !height_with_k.is_empty()
        && !time_with_eps.is_empty()
        && height_with_k.iter().all(|e| e.pass)
        && time_with_eps.iter().all(|e| e.pass);
    Ok(TrendReport {
        height_with_k,
        time_with_eps,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub outcomes: Vec<RunOutcome>,
    pub trends: TrendReport,
    /// Every run converged, passed its invariant suite, matched the
    /// inflection criterion, and the trends held.
    pub verdict: bool,
}

fn analyse(record: RunRecord, model: &Conductivity, k: f64, eps: f64) -> RunAnalysis {
    let invariants = check_invariants(&record, model, k);
    let row = reconcile(&record, model, k, eps);
    let t_steady = time_to_steady(&record, record.params.steady_tol);
    let steady = SteadyState::new(model, k).expect("k > 1 was validated");
    let inflection_observed = steady.inflection_point().is_some();
    let inflection_predicted = {
        // interior sign change of D' over the steady value range (1/k, 1)
        let lo = 1.0 / k;
        let n = 1024;
        let mut prev = model.d_prime_unchecked(lo + (1.0 - lo) * 1e-6);
        let mut found = false;
        for i in 1..=n {
            let u = lo + (1.0 - lo) * (i as f64 - 0.5) / n as f64;
            let cur = model.d_prime_unchecked(u.min(1.0 - 1e-9));
            if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
                found = true;
                break;
            }
            prev = cur;
        }
        found
    };
    RunAnalysis {
        h_s: record.h_s,
        h_final: record.h_final(),
        t_final: record.t_final(),
        steps: record.diag.steps,
        converged: record.diag.converged_at.is_some(),
        t_steady,
        monotone_front: record.diag.monotone_front,
        invariants,
        reconcile: row,
        inflection_observed,
        inflection_predicted,
        record,
    }
}

/// Execute one sweep case, retrying once on the finer fallback grid when
/// the default grid cannot reach the steady tolerance by `t_end`.
fn run_case(spec: &SweepSpec, c: f64, k: f64, eps: f64) -> RunOutcome {
    let build = |n_x: usize| -> Result<(RunRecord, Conductivity)> {
        let mut cfg = spec.config_for(c, k, eps)?;
        cfg.n_x = n_x;
        let model = cfg.model.clone();
        Ok((solver::run(&cfg)?, model))
    };
    let mut fallback_used = false;
    let first = build(spec.n_x);
    let attempt = match first {
        Ok((record, model)) => {
            if record.diag.converged_at.is_none() && spec.n_x == N_X_DEFAULT {
                fallback_used = true;
                build(N_X_FALLBACK)
            } else {
                Ok((record, model))
            }
        }
        err => err,
    };
    match attempt {
        Ok((record, model)) => RunOutcome {
            c,
            k,
            eps,
            n_x: record.params.n_x,
            delta: record.params.delta,
            fallback_used,
            analysis: Ok(analyse(record, &model, k, eps)),
        },
        Err(e) => RunOutcome {
            c,
            k,
            eps,
            n_x: spec.n_x,
            delta: spec.delta.unwrap_or(f64::NAN),
            fallback_used,
            analysis: Err(e.to_string()),
        },
    }
}

/// Run the whole sweep, `jobs` cases at a time.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepResult> {
    spec.validate()?;
    let cases = spec.cases();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        cases
            .par_iter()
            .map(|&(c, k, eps)| run_case(spec, c, k, eps))
            .collect()
    });

    let trends = trend_checks(&outcomes)?;
    let verdict = trends.pass
        && outcomes.iter().all(|o| match &o.analysis {
            Ok(a) => {
                a.converged
                    && a.invariants.pass
                    && a.monotone_front
                    && a.inflection_observed == a.inflection_predicted
            }
            Err(_) => false,
        });
    Ok(SweepResult {
        spec: spec.clone(),
        outcomes,
        trends,
        verdict,
    })
}

fn opt_num(v: Option<f64>) -> String {
    v.map(output::fmt_num).unwrap_or_default()
}

/// One row per run; deterministic body (no wall-clock columns).
pub fn report_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(
        "c,k,eps,n_x,delta,fallback,converged,h_s,h_final,steady_gap,profile_gap,\
         t_steady,steps,monotone_front,invariants_pass,inflection_consistent,\
         smalltime_exponent,lambda_fit,lambda0,lambda_ratio,outer_sup_gap,error\n",
    );
    for o in &result.outcomes {
        match &o.analysis {
            Ok(a) => {
                let row = [
                    output::fmt_num(o.c),
                    output::fmt_num(o.k),
                    output::fmt_num(o.eps),
                    o.n_x.to_string(),
                    output::fmt_num(o.delta),
                    o.fallback_used.to_string(),
                    a.converged.to_string(),
                    output::fmt_num(a.h_s),
                    output::fmt_num(a.h_final),
                    output::fmt_num(a.reconcile.steady_gap),
                    output::fmt_num(a.reconcile.profile_gap),
                    opt_num(a.t_steady),
                    a.steps.to_string(),
                    a.monotone_front.to_string(),
                    a.invariants.pass.to_string(),
                    (a.inflection_observed == a.inflection_predicted).to_string(),
                    opt_num(a.reconcile.smalltime_exponent),
                    opt_num(a.reconcile.lambda_fit),
                    opt_num(a.reconcile.lambda0),
                    opt_num(a.reconcile.lambda_ratio),
                    opt_num(a.reconcile.outer_sup_gap),
                    String::new(),
                ];
                out.push_str(&row.join(","));
            }
            Err(e) => {
                let row = [
                    output::fmt_num(o.c),
                    output::fmt_num(o.k),
                    output::fmt_num(o.eps),
                    o.n_x.to_string(),
                    String::new(),
                    o.fallback_used.to_string(),
                    "false".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.replace(',', ";"),
                ];
                out.push_str(&row.join(","));
            }
        }
        out.push('\n');
    }
    out
}

pub fn report_json(result: &SweepResult) -> serde_json::Value {
    json!({
        "spec": result.spec,
        "verdict": result.verdict,
        "trends": result.trends,
        "runs": result.outcomes,
    })
}

fn case_dir_name(c: f64, k: f64, eps: f64) -> String {
    format!("c{c}_k{k}_eps{eps}")
}

/// Write per-run artifact trees plus `report.csv` / `report.json` and a
/// sweep manifest.
pub fn write_sweep_artifacts(dir: &Path, result: &SweepResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut artifacts = vec!["report.csv".to_string(), "report.json".to_string()];
    for o in &result.outcomes {
        if let Ok(a) = &o.analysis {
            let sub = case_dir_name(o.c, o.k, o.eps);
            let case_dir = dir.join(&sub);
            let files = output::write_run_artifacts(&case_dir, &a.record)?;
            output::write_manifest(&case_dir, &a.record.params, &files)?;
            artifacts.push(sub);
        }
    }
    std::fs::write(dir.join("report.csv"), report_csv(result))?;
    std::fs::write(dir.join("report.json"), output::pretty(&report_json(result)))?;
    output::write_manifest(dir, &result.spec, &artifacts)?;
    Ok(())
}
