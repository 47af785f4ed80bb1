//! Leading-order outer solution in the small-`ε` (fast-conduction) limit.
//!
//! With conduction instantaneous relative to front growth, the temperature
//! field is the quasi-steady profile for the current flux `A(t)` and the
//! front obeys the autonomous scalar ODE `h₀' = G⁻¹(h₀) − 1`, where
//! `G(λ) = (F(1) − F(λ/k))/λ`. The decay rate toward `h_s` in this limit is
//! `μ(k) = k/(k·h_s + D(1/k))`.

use crate::conductivity::{Conductivity, TOL_INV};
use crate::error::{Error, Result};
use crate::steady_state::SteadyState;

/// Front-height tolerance for the inverse of `G`.
const TOL_H: f64 = 1e-9;

/// Gap below which the integrator hands over to the exponential tail.
const TAIL_GAP: f64 = 1e-6;

/// `G(λ) = (F(1) − F(λ/k))/λ` for `λ ∈ (0, k]`: the front height at which a
/// quasi-steady profile carries wall flux `λ/k`-scaled extraction.
pub fn g(model: &Conductivity, k: f64, lam: f64) -> Result<f64> {
    if !(k > 1.0) {
        return Err(Error::NoSteadyState { k });
    }
    if !(lam > 0.0) || lam > k * (1.0 + 1e-12) {
        return Err(Error::OutOfRange {
            name: "lam",
            value: lam,
            min: 0.0,
            max: k,
        });
    }
    let lam_c = lam.min(k);
    Ok((model.kirchhoff_one() - model.kirchhoff_unchecked(lam_c / k)) / lam_c)
}

fn g_deriv(model: &Conductivity, k: f64, lam: f64) -> f64 {
    let f1 = model.kirchhoff_one();
    let fl = model.kirchhoff_unchecked(lam / k);
    let dl = model.d_unchecked(lam / k);
    (-dl * lam / k - (f1 - fl)) / (lam * lam)
}

/// Inverse of `G`: the flux multiplier `A ∈ [1, k]` with `G(A) = h`, for
/// `h ∈ [0, h_s(k)]`. `G` is strictly decreasing there, so `A` is unique;
/// safeguarded Newton with a bisection bracket.
pub fn invert_g(model: &Conductivity, k: f64, h: f64) -> Result<f64> {
    let h_s = SteadyState::new(model, k)?.height();
    if !(h >= -TOL_H && h <= h_s + TOL_H) {
        return Err(Error::OutOfRange {
            name: "h",
            value: h,
            min: 0.0,
            max: h_s,
        });
    }
    let h = h.clamp(0.0, h_s);
    let (mut lo, mut hi) = (1.0, k); // G(lo) = h_s, G(hi) = 0
    let mut a = k - (k - 1.0) * (h / h_s);
    for _ in 0..128 {
        let res = g(model, k, a)? - h;
        if res.abs() <= TOL_INV {
            return Ok(a);
        }
        // G decreases: positive residual means a is too small.
        if res > 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let mut next = a - res / g_deriv(model, k, a);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - a).abs() < f64::EPSILON * k {
            return Ok(next);
        }
        a = next;
    }
    Ok(a)
}

/// Outer decay rate `μ(k) = k/(k·h_s(k) + D(1/k))`; identical to the
/// small-`ε` limit of the principal eigenvalue.
pub fn mu(model: &Conductivity, k: f64) -> Result<f64> {
    let h_s = SteadyState::new(model, k)?.height();
    Ok(k / (model.d_unchecked(1.0 / k) + k * h_s))
}

/// Quasi-steady temperature profile `u₀(x) = F⁻¹(A·x + F(A/k))` for front
/// height `h0`, with `A = G⁻¹(h0)`.
pub fn u0_profile(model: &Conductivity, k: f64, h0: f64, x: f64) -> Result<f64> {
    if !(x >= -TOL_H && x <= h0 + TOL_H) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            min: 0.0,
            max: h0,
        });
    }
    let a = invert_g(model, k, h0)?;
    let x = x.clamp(0.0, h0);
    model.kirchhoff_inv(a * x + model.kirchhoff_unchecked(a / k))
}

/// Time series of the leading-order front height.
#[derive(Debug, Clone)]
pub struct OuterSolution {
    pub k: f64,
    pub h_s: f64,
    /// Uniform output times `0, dt_out, 2·dt_out, …`.
    pub t: Vec<f64>,
    pub h0: Vec<f64>,
}

impl OuterSolution {
    /// Linear interpolation within the stored grid; clamps outside it.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.h0[0];
        }
        if t >= self.t[n - 1] {
            return self.h0[n - 1];
        }
        let dt = self.t[1] - self.t[0];
        let i = ((t / dt) as usize).min(n - 2);
        let w = (t - self.t[i]) / (self.t[i + 1] - self.t[i]);
        self.h0[i] * (1.0 - w) + self.h0[i + 1] * w
    }
}

/// Integrate `h₀' = G⁻¹(h₀) − 1` from `h₀(0) = 0` up to `t_end`, sampling
/// every `dt_out`.
///
/// Classical fixed-step fourth-order integration; once the gap to `h_s`
/// falls below `1e-6` the remaining samples follow the exponential tail
/// `h_s − gap·e^{−μ(t−t_*)}` so the march cannot stagnate against the
/// fixed point.
pub fn integrate_h0(
    model: &Conductivity,
    k: f64,
    t_end: f64,
    dt_out: f64,
) -> Result<OuterSolution> {
    if !(t_end > 0.0) || !(dt_out > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "t_end and dt_out must be positive, got {t_end}, {dt_out}"
        )));
    }
    let h_s = SteadyState::new(model, k)?.height();
    let rate = mu(model, k)?;
    let f = |h: f64| -> Result<f64> { Ok(invert_g(model, k, h.clamp(0.0, h_s))? - 1.0) };

    let n_out = (t_end / dt_out).ceil() as usize;
    let internal = dt_out.min(1e-3 * h_s / (k - 1.0));
    let sub = (dt_out / internal).ceil().max(1.0) as usize;
    let dt = dt_out / sub as f64;

    let mut t_grid = Vec::with_capacity(n_out + 1);
    let mut h_grid = Vec::with_capacity(n_out + 1);
    t_grid.push(0.0);
    h_grid.push(0.0);

    let mut h = 0.0f64;
    let mut tail: Option<(f64, f64)> = None; // (t at handover, gap at handover)
    for i in 0..n_out {
        let t0 = i as f64 * dt_out;
        if tail.is_none() {
            for s in 0..sub {
                if h_s - h < TAIL_GAP {
                    tail = Some((t0 + s as f64 * dt, h_s - h));
                    break;
                }
                let k1 = f(h)?;
                let k2 = f(h + 0.5 * dt * k1)?;
                let k3 = f(h + 0.5 * dt * k2)?;
                let k4 = f(h + dt * k3)?;
                h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                h = h.min(h_s);
            }
        }
        let t1 = (i + 1) as f64 * dt_out;
        let value = match tail {
            Some((ts, gap)) => h_s - gap * (-rate * (t1 - ts)).exp(),
            None => h,
        };
        t_grid.push(t1);
        h_grid.push(value);
    }

    Ok(OuterSolution {
        k,
        h_s,
        t: t_grid,
        h0: h_grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(c: f64) -> Conductivity {
        Conductivity::quadratic(c).unwrap()
    }

    #[test]
    fn g_endpoint_values() {
        let m = quad(0.0);
        assert!(g(&m, 2.0, 2.0).unwrap().abs() < 1e-15);
        assert!((g(&m, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        // unit flux multiplier reproduces the steady height
        let h_s = SteadyState::new(&m, 2.0).unwrap().height();
        assert!((g(&m, 2.0, 1.0).unwrap() - h_s).abs() < 1e-15);
        assert!(g(&m, 2.0, 0.0).is_err());
        assert!(g(&m, 2.0, -1.0).is_err());
    }

    #[test]
    fn g_strictly_decreasing() {
        for c in [-3.0, 0.0, 3.0] {
            let m = quad(c);
            for k in [2.0, 10.0] {
                let mut prev = f64::INFINITY;
                for i in 1..=100 {
                    let lam = k * i as f64 / 100.0;
                    let val = g(&m, k, lam).unwrap();
                    assert!(val < prev, "c={c}, k={k}, lam={lam}");
                    prev = val;
                }
            }
        }
    }

    #[test]
    fn invert_g_values() {
        let m = quad(0.0);
        assert!((invert_g(&m, 2.0, 0.0).unwrap() - 2.0).abs() < 1e-9);
        assert!((invert_g(&m, 2.0, 0.5).unwrap() - 1.0).abs() < 1e-9);
        // algebraic oracle: (1 - A/2)/A = 0.25 -> A = 4/3
        assert!((invert_g(&m, 2.0, 0.25).unwrap() - 4.0 / 3.0).abs() < 1e-10);
        assert!(invert_g(&m, 2.0, 0.6).is_err());
    }

    #[test]
    fn invert_g_round_trip() {
        for c in [-3.0, 0.0, 3.0] {
            let m = quad(c);
            for k in [1.5, 2.0, 10.0, 20.0] {
                let h_s = SteadyState::new(&m, k).unwrap().height();
                for i in 0..=50 {
                    let h = h_s * i as f64 / 50.0;
                    let a = invert_g(&m, k, h).unwrap();
                    assert!(a >= 1.0 - 1e-9 && a <= k + 1e-9, "flux bracket");
                    let back = g(&m, k, a).unwrap();
                    assert!((back - h).abs() < 1e-10, "c={c}, k={k}, h={h}");
                }
            }
        }
    }

    #[test]
    fn mu_values() {
        assert!((mu(&quad(0.0), 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mu(&quad(3.0), 2.0).unwrap() - 2.0 / 3.25).abs() < 1e-15);
        assert!(mu(&quad(0.0), 1.0).is_err());
    }

    #[test]
    fn outer_ode_slope_at_origin() {
        for (c, k) in [(0.0, 2.0), (3.0, 10.0), (-2.0, 4.0)] {
            let m = quad(c);
            let sol = integrate_h0(&m, k, 0.01, 1e-4).unwrap();
            let slope = (sol.h0[1] - sol.h0[0]) / (sol.t[1] - sol.t[0]);
            assert!((slope - (k - 1.0)).abs() < 0.05 * (k - 1.0), "c={c}, k={k}");
        }
    }

    #[test]
    fn integrator_matches_implicit_relation() {
        // constant conductivity, k = 2: -H - ln(1 - 2H) = t exactly.
        // (the last checkpoint sits at t ≈ 8.02, so integrate past it)
        let m = quad(0.0);
        let sol = integrate_h0(&m, 2.0, 9.0, 1e-3).unwrap();
        for i in 1..=20 {
            let h = 0.4999 * i as f64 / 20.0;
            let t = -h - (1.0 - 2.0 * h).ln();
            let got = sol.eval(t);
            assert!((got - h).abs() < 1e-6, "h={h}, t={t}, got={got}");
        }
        // spot value from the closed form
        let t_quarter = -0.25 - 0.5f64.ln();
        assert!((sol.eval(t_quarter) - 0.25).abs() < 1e-6);
    }

    #[test]
    fn front_monotone_and_bounded() {
        for (c, k) in [(0.0, 2.0), (3.0, 2.0), (-3.0, 10.0)] {
            let m = quad(c);
            let h_s = SteadyState::new(&m, k).unwrap().height();
            let sol = integrate_h0(&m, k, 30.0, 1e-2).unwrap();
            for w in sol.h0.windows(2) {
                assert!(w[1] >= w[0], "c={c}, k={k}");
            }
            assert!(sol.h0.iter().all(|&h| (0.0..=h_s + 1e-12).contains(&h)));
            // long-time limit reaches the steady height
            assert!((sol.h0.last().unwrap() - h_s).abs() < 1e-6, "c={c}, k={k}");
        }
    }

    #[test]
    fn late_time_rate_matches_mu() {
        let m = quad(3.0);
        let k = 2.0;
        let h_s = SteadyState::new(&m, k).unwrap().height();
        let sol = integrate_h0(&m, k, 30.0, 1e-3).unwrap();
        let rate = mu(&m, k).unwrap();
        // ln-gap slope between two late times
        let (t1, t2) = (8.0, 12.0);
        let g1 = h_s - sol.eval(t1);
        let g2 = h_s - sol.eval(t2);
        let slope = (g1.ln() - g2.ln()) / (t2 - t1);
        assert!((slope - rate).abs() < 1e-3 * rate, "slope={slope}, mu={rate}");
    }

    #[test]
    fn wall_temperature_monotone_decreasing() {
        let m = quad(3.0);
        let k = 2.0;
        let sol = integrate_h0(&m, k, 20.0, 1e-2).unwrap();
        let mut prev = f64::INFINITY;
        for i in (0..sol.t.len()).step_by(100) {
            let a = invert_g(&m, k, sol.h0[i].min(sol.h_s)).unwrap();
            let wall = a / k;
            assert!(wall <= prev + 1e-12);
            prev = wall;
        }
        // from unity at t = 0 toward 1/k
        let a0 = invert_g(&m, k, 0.0).unwrap();
        assert!((a0 / k - 1.0).abs() < 1e-9);
        assert!((prev - 1.0 / k).abs() < 1e-4);
    }

    #[test]
    fn u0_profile_values() {
        let m = quad(0.0);
        // at h0 = h_s the quasi-steady profile is the steady profile
        let ss = SteadyState::new(&m, 2.0).unwrap();
        for i in 0..=10 {
            let x = ss.height() * i as f64 / 10.0;
            let u = u0_profile(&m, 2.0, ss.height(), x).unwrap();
            assert!((u - ss.profile(x).unwrap()).abs() < 1e-9);
        }
        // vanishing layer: wall at the melt temperature
        assert!((u0_profile(&m, 2.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-9);
        // intermediate flux from the invert_g oracle
        assert!((u0_profile(&m, 2.0, 0.25, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert!(u0_profile(&m, 2.0, 0.25, 0.3).is_err());
    }
}
