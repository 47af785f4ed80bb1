//! Explicit finite-difference solver on the boundary-fixed domain.
//!
//! The moving domain `[0, h(t)]` is mapped to the unit interval by
//! `X = x/h(t)`, which turns the problem into
//!
//! ```text
//!   ε h² v_t = D(v) v_XX + ε X h h_t v_X + D'(v) v_X²     on (0, 1)
//!   D(v) v_X = k v h                                      at X = 0
//!   v = 1                                                 at X = 1
//!   h h_t = v_X − h                                       at X = 1
//! ```
//!
//! The march is explicit with an adaptive step bounded by the diffusion,
//! gradient-squared, and front-advection limits; the step relaxes as `h`
//! grows. The equations degenerate at `t = 0`, so runs start from the
//! two-term small-time series at `t = δ`. Update order per step: front
//! first, then the interior, then the wall value from the fresh interior.

use std::time::Instant;

use serde::Serialize;

use crate::conductivity::{Conductivity, ConductivitySpec};
use crate::error::{Error, Result};
use crate::small_time::SmallTime;
use crate::steady_state::SteadyState;

/// Default grid resolution; `N_X_FALLBACK` is the retry resolution when a
/// run cannot meet its steady tolerance on the default grid.
pub const N_X_DEFAULT: usize = 161;
pub const N_X_FALLBACK: usize = 201;

/// Default initialization time; clamped down when the small-time series
/// validity horizon demands it.
pub const DELTA_DEFAULT: f64 = 1e-3;

/// Convergence is tested every this many accepted steps.
const CHECK_STRIDE: u64 = 512;

/// Grid values outside `[0, 1]` by more than this band count as clamped.
const CLAMP_BAND: f64 = 1e-12;

/// Retained series points before the recorder doubles its stride.
const SERIES_CAP: usize = 65_536;

fn default_snapshot_times() -> Vec<f64> {
    vec![
        0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0,
    ]
}

/// Fully resolved solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub eps: f64,
    pub k: f64,
    pub model: Conductivity,
    pub n_x: usize,
    /// Initialization time; `None` resolves to
    /// `min(DELTA_DEFAULT, validity horizon / 10)`.
    pub delta: Option<f64>,
    pub t_end: f64,
    /// Safety factor applied to the stability bound, in `(0, 1)`.
    pub safety: f64,
    pub steady_tol: f64,
    /// Record a series point every this many accepted steps.
    pub output_stride: u32,
    pub snapshot_times: Vec<f64>,
}

impl SolverConfig {
    pub fn new(model: Conductivity, k: f64, eps: f64) -> Self {
        Self {
            eps,
            k,
            model,
            n_x: N_X_DEFAULT,
            delta: None,
            t_end: 20.0,
            safety: 0.4,
            steady_tol: 0.01,
            output_stride: 8,
            snapshot_times: default_snapshot_times(),
        }
    }

    /// Largest admissible initialization time: a tenth of the small-time
    /// series validity horizon, so the series truncation stays well below
    /// the scheme error.
    pub fn max_delta(&self) -> Result<f64> {
        Ok(SmallTime::new(&self.model, self.k, self.eps)?.t_valid() / 10.0)
    }

    pub fn resolve_delta(&self) -> Result<f64> {
        let max = self.max_delta()?;
        match self.delta {
            None => Ok(DELTA_DEFAULT.min(max)),
            Some(d) if d > 0.0 && d <= max * (1.0 + 1e-12) => Ok(d),
            Some(d) => Err(Error::InvalidConfig(format!(
                "delta = {d} outside (0, {max}]; the small-time initialization \
                 is only trustworthy up to a tenth of its validity horizon"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "k = {} but a growing wax layer requires k > 1",
                self.k
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.n_x < 3 {
            return Err(Error::InvalidConfig(format!(
                "n_x must be at least 3, got {}",
                self.n_x
            )));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "safety factor must lie in (0, 1), got {}",
                self.safety
            )));
        }
        if !(self.steady_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "steady_tol must be positive, got {}",
                self.steady_tol
            )));
        }
        let delta = self.resolve_delta()?;
        if !(self.t_end > delta) {
            return Err(Error::InvalidConfig(format!(
                "t_end = {} does not exceed the initialization time {delta}",
                self.t_end
            )));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidConfig("output_stride must be positive".into()));
        }
        Ok(())
    }

    /// Numerically relevant parameters with all defaults materialised.
    pub fn resolved_params(&self) -> Result<ResolvedParams> {
        Ok(ResolvedParams {
            eps: self.eps,
            k: self.k,
            conductivity: self.model.spec(),
            n_x: self.n_x,
            delta: self.resolve_delta()?,
            t_end: self.t_end,
            safety: self.safety,
            steady_tol: self.steady_tol,
            output_stride: self.output_stride,
            snapshot_times: self.snapshot_times.clone(),
        })
    }
}

/// The materialised numeric parameters of a run, as recorded in summaries.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedParams {
    pub eps: f64,
    pub k: f64,
    pub conductivity: ConductivitySpec,
    pub n_x: usize,
    pub delta: f64,
    pub t_end: f64,
    pub safety: f64,
    pub steady_tol: f64,
    pub output_stride: u32,
    pub snapshot_times: Vec<f64>,
}

/// Marching state on the boundary-fixed grid.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Grid values on the uniform `X` grid over `[0, 1]`; `v[n−1] = 1`.
    pub v: Vec<f64>,
    /// Current front height.
    pub h: f64,
    pub t: f64,
    /// Last accepted step size.
    pub dt: f64,
    /// Steps on which some grid value left `[0, 1]` beyond roundoff.
    pub clamp_count: u64,
    pub step_count: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub h: f64,
    pub dt: f64,
}

/// Full grid snapshot at one time level, still in `X` coordinates;
/// physical positions are `x_i = X_i · h`.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub h: f64,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub steps: u64,
    pub clamp_count: u64,
    /// True when the front never retreated over an accepted step.
    pub monotone_front: bool,
    pub min_front_increment: f64,
    pub min_discrete_ht: f64,
    pub max_discrete_ht: f64,
    /// Time at which both steady gaps fell below `steady_tol`, if reached.
    pub converged_at: Option<f64>,
    pub final_h_gap: f64,
    pub final_profile_gap: f64,
    pub wall_seconds: f64,
}

/// Everything a completed run produces.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub params: ResolvedParams,
    pub h_s: f64,
    pub series: Vec<SeriesPoint>,
    pub snapshots: Vec<Snapshot>,
    pub diag: Diagnostics,
}

impl RunRecord {
    pub fn h_final(&self) -> f64 {
        self.series.last().map(|p| p.h).unwrap_or(f64::NAN)
    }

    pub fn t_final(&self) -> f64 {
        self.series.last().map(|p| p.t).unwrap_or(f64::NAN)
    }
}

/// Initial state at `t = δ` from the two-term small-time series.
pub fn initialize(config: &SolverConfig) -> Result<SolverState> {
    config.validate()?;
    let delta = config.resolve_delta()?;
    let series = SmallTime::new(&config.model, config.k, config.eps)?;
    let h = series.h(delta);
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "initial front height {h} is not positive at delta = {delta}"
        )));
    }
    let n = config.n_x;
    let dx = 1.0 / (n - 1) as f64;
    let k = config.k;
    let gamma = config.eps * (k - 1.0) - series.d_prime_one * k;
    let v = (0..n)
        .map(|i| {
            let xm1 = i as f64 * dx - 1.0;
            1.0 + k * h * xm1 - 0.5 * k * h * h * gamma * xm1 * xm1
        })
        .collect();
    Ok(SolverState {
        v,
        h,
        t: delta,
        dt: 0.0,
        clamp_count: 0,
        step_count: 0,
    })
}

/// Per-run constants hoisted out of the step loop.
struct Precomp {
    k: f64,
    eps: f64,
    safety: f64,
    dx: f64,
    inv_dx: f64,
    inv_dx2: f64,
    inv_2dx: f64,
    abs_km1: f64,
    /// `sup D` and `sup D'` over the invariant value range `[1/k, 1]`.
    sup_d: f64,
    sup_dp: f64,
    xs: Vec<f64>,
    quad_c: Option<f64>,
}

impl Precomp {
    fn new(config: &SolverConfig) -> Self {
        let n = config.n_x;
        let dx = 1.0 / (n - 1) as f64;
        let lo = 1.0 / config.k;
        Self {
            k: config.k,
            eps: config.eps,
            safety: config.safety,
            dx,
            inv_dx: 1.0 / dx,
            inv_dx2: 1.0 / (dx * dx),
            inv_2dx: 0.5 / dx,
            abs_km1: (config.k - 1.0).abs(),
            sup_d: config.model.d_max_on(lo, 1.0),
            sup_dp: config.model.d_prime_max_on(lo, 1.0),
            xs: (0..n).map(|i| i as f64 * dx).collect(),
            quad_c: config.model.quadratic_coefficient(),
        }
    }

    /// Largest stable step at front height `h`, before the safety factor:
    /// diffusion, gradient-squared (only when `sup D' > 0`), and
    /// front-advection limits.
    fn stable_dt(&self, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::DegenerateFront { h });
        }
        let hdx2 = (h * self.dx) * (h * self.dx);
        let mut dt = hdx2 * self.eps / (2.0 * self.sup_d);
        if self.sup_dp > 0.0 {
            dt = dt.min(2.0 * hdx2 * self.eps / self.sup_dp);
        }
        dt = dt.min(h * self.dx / self.abs_km1);
        Ok(self.safety * dt)
    }
}

/// Stable step size for the current state.
pub fn stable_dt(state: &SolverState, config: &SolverConfig) -> Result<f64> {
    Precomp::new(config).stable_dt(state.h)
}

/// Advance one step at the stable step size.
pub fn step(state: &mut SolverState, config: &SolverConfig) -> Result<()> {
    let pre = Precomp::new(config);
    let dt = pre.stable_dt(state.h)?;
    let mut scratch = vec![0.0; state.v.len()];
    advance(state, &mut scratch, &pre, &config.model, dt).map(|_| ())
}

/// Advance one step at an explicit step size (callers own stability).
pub fn step_with_dt(state: &mut SolverState, config: &SolverConfig, dt: f64) -> Result<()> {
    let pre = Precomp::new(config);
    let mut scratch = vec![0.0; state.v.len()];
    advance(state, &mut scratch, &pre, &config.model, dt).map(|_| ())
}

/// One explicit step. Returns the discrete front speed of the step.
///
/// `scratch` receives the new grid values and is swapped into the state;
/// on blow-up the state is left at the last valid step.
fn advance(
    state: &mut SolverState,
    scratch: &mut Vec<f64>,
    pre: &Precomp,
    model: &Conductivity,
    dt: f64,
) -> Result<f64> {
    let n = state.v.len();
    let h = state.h;
    let v = &state.v;

    // Front first: one-sided flux drives the growth rate.
    let front_flux = (v[n - 1] - v[n - 2]) * pre.inv_dx / h;
    let ht = front_flux - 1.0;
    let h_next = h + dt * ht;

    let scale = dt / (pre.eps * h * h);
    let adv = pre.eps * h * ht;
    match pre.quad_c {
        Some(c) => interior_quadratic(v, scratch, &pre.xs, c, scale, adv, pre.inv_dx2, pre.inv_2dx),
        None => interior_generic(
            v,
            scratch,
            &pre.xs,
            model,
            scale,
            adv,
            pre.inv_dx2,
            pre.inv_2dx,
        ),
    }
    scratch[n - 1] = 1.0;
    // Wall value from the fresh interior neighbour (new time level).
    let v1 = scratch[1];
    scratch[0] = v1 - pre.k * pre.dx * h_next * v1 / model.d_unchecked(v1);

    let (vmin, vmax) = min_max(scratch);
    let healthy = h_next.is_finite() && vmax <= 10.0 && vmin >= -10.0 && vmax.is_finite();
    if !healthy {
        return Err(Error::BlowUp {
            t: state.t,
            step: state.step_count,
            last_valid: Box::new(state.clone()),
        });
    }

    std::mem::swap(&mut state.v, scratch);
    state.h = h_next;
    state.t += dt;
    state.dt = dt;
    state.step_count += 1;
    if vmin < -CLAMP_BAND || vmax > 1.0 + CLAMP_BAND {
        state.clamp_count += 1;
    }
    Ok(ht)
}

/// Range of a grid vector; four lanes keep the reduction off the critical
/// path so it vectorizes.
fn min_max(v: &[f64]) -> (f64, f64) {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    let chunks = v.chunks_exact(4);
    let rem = chunks.remainder();
    for ch in chunks {
        for lane in 0..4 {
            lo[lane] = lo[lane].min(ch[lane]);
            hi[lane] = hi[lane].max(ch[lane]);
        }
    }
    let mut l = lo[0].min(lo[1]).min(lo[2].min(lo[3]));
    let mut h = hi[0].max(hi[1]).max(hi[2].max(hi[3]));
    for &x in rem {
        l = l.min(x);
        h = h.max(x);
    }
    (l, h)
}

#[allow(clippy::too_many_arguments)]
fn interior_quadratic(
    v: &[f64],
    out: &mut [f64],
    xs: &[f64],
    c: f64,
    scale: f64,
    adv: f64,
    inv_dx2: f64,
    inv_2dx: f64,
) {
    let n = v.len();
    let left = &v[..n - 2];
    let mid = &v[1..n - 1];
    let right = &v[2..];
    let x_in = &xs[1..n - 1];
    let inner = &mut out[1..n - 1];
    for i in 0..inner.len() {
        let a = left[i];
        let b = mid[i];
        let d = right[i];
        let cond = 1.0 + c * b * (1.0 - b);
        let slope_coef = c * (1.0 - 2.0 * b);
        let lap = (a - 2.0 * b + d) * inv_dx2;
        let grad = (d - a) * inv_2dx;
        inner[i] = b + scale * (cond * lap + (adv * x_in[i] + slope_coef * grad) * grad);
    }
}

#[allow(clippy::too_many_arguments)]
fn interior_generic(
    v: &[f64],
    out: &mut [f64],
    xs: &[f64],
    model: &Conductivity,
    scale: f64,
    adv: f64,
    inv_dx2: f64,
    inv_2dx: f64,
) {
    let n = v.len();
    for i in 1..n - 1 {
        let b = v[i];
        let cond = model.d_unchecked(b);
        let slope_coef = model.d_prime_unchecked(b);
        let lap = (v[i - 1] - 2.0 * b + v[i + 1]) * inv_dx2;
        let grad = (v[i + 1] - v[i - 1]) * inv_2dx;
        out[i] = b + scale * (cond * lap + (adv * xs[i] + slope_coef * grad) * grad);
    }
}

/// Step-strided series recorder with a retention cap: when full it doubles
/// its stride and drops every other retained point, so memory stays bounded
/// and the kept points remain exactly the stride-aligned ones.
struct SeriesRecorder {
    stride: u64,
    points: Vec<SeriesPoint>,
}

impl SeriesRecorder {
    fn new(stride: u32) -> Self {
        Self {
            stride: stride.max(1) as u64,
            points: Vec::new(),
        }
    }

    fn record(&mut self, step: u64, t: f64, h: f64, dt: f64) {
        if step % self.stride == 0 {
            self.points.push(SeriesPoint { t, h, dt });
            if self.points.len() >= SERIES_CAP {
                let mut keep = 0;
                for i in (0..self.points.len()).step_by(2) {
                    self.points[keep] = self.points[i];
                    keep += 1;
                }
                self.points.truncate(keep);
                self.stride *= 2;
            }
        }
    }
}

/// March from the small-time initial data until steady-state convergence or
/// `t_end`, whichever comes first.
///
/// Convergence means both `|h − h_s| < steady_tol` and
/// `maxᵢ |vᵢ − u_s(Xᵢ·h)| < steady_tol`, tested every few hundred steps.
pub fn run(config: &SolverConfig) -> Result<RunRecord> {
    let started = Instant::now();
    config.validate()?;
    let steady = SteadyState::new(&config.model, config.k)?;
    let h_s = steady.height();
    let pre = Precomp::new(config);
    let mut state = initialize(config)?;
    let mut scratch = vec![0.0; config.n_x];

    let mut series = SeriesRecorder::new(config.output_stride);
    series.record(0, state.t, state.h, 0.0);

    let mut snap_times: Vec<f64> = config
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > state.t && t <= config.t_end)
        .collect();
    snap_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snap_times.dedup();
    let mut next_snap = 0usize;
    let mut snapshots: Vec<Snapshot> = Vec::new();

    let mut monotone_front = true;
    let mut min_increment = f64::INFINITY;
    let mut min_ht = f64::INFINITY;
    let mut max_ht = f64::NEG_INFINITY;
    let mut converged_at = None;

    let profile_gap = |state: &SolverState| -> f64 {
        let mut gap: f64 = 0.0;
        for (i, &vi) in state.v.iter().enumerate() {
            let x = pre.xs[i] * state.h;
            gap = gap.max((vi - steady.profile_clamped(x)).abs());
        }
        gap
    };

    loop {
        let dt = pre.stable_dt(state.h)?;
        let h_prev = state.h;
        let ht = advance(&mut state, &mut scratch, &pre, &config.model, dt)?;
        let increment = state.h - h_prev;
        if increment < 0.0 {
            monotone_front = false;
        }
        min_increment = min_increment.min(increment);
        min_ht = min_ht.min(ht);
        max_ht = max_ht.max(ht);

        series.record(state.step_count, state.t, state.h, dt);
        while next_snap < snap_times.len() && state.t >= snap_times[next_snap] {
            snapshots.push(Snapshot {
                t: state.t,
                h: state.h,
                v: state.v.clone(),
            });
            next_snap += 1;
        }

        if state.t >= config.t_end {
            break;
        }
        if state.step_count % CHECK_STRIDE == 0
            && (state.h - h_s).abs() < config.steady_tol
            && profile_gap(&state) < config.steady_tol
        {
            converged_at = Some(state.t);
            break;
        }
    }

    // Final sample and snapshot always land in the record.
    if series.points.last().map(|p| p.t) != Some(state.t) {
        series.points.push(SeriesPoint {
            t: state.t,
            h: state.h,
            dt: state.dt,
        });
    }
    if snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(Snapshot {
            t: state.t,
            h: state.h,
            v: state.v.clone(),
        });
    }

    let diag = Diagnostics {
        steps: state.step_count,
        clamp_count: state.clamp_count,
        monotone_front,
        min_front_increment: if min_increment.is_finite() {
            min_increment
        } else {
            0.0
        },
        min_discrete_ht: if min_ht.is_finite() { min_ht } else { 0.0 },
        max_discrete_ht: if max_ht.is_finite() { max_ht } else { 0.0 },
        converged_at,
        final_h_gap: (state.h - h_s).abs(),
        final_profile_gap: profile_gap(&state),
        wall_seconds: started.elapsed().as_secs_f64(),
    };

    Ok(RunRecord {
        params: config.resolved_params()?,
        h_s,
        series: series.points,
        snapshots,
        diag,
    })
}
