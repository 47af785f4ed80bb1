//! Principal decay rate of the approach to the steady state.
//!
//! Perturbations about the steady profile decay like `e^{−λ₀ t}` where `λ₀`
//! is the lowest eigenvalue of
//!
//! ```text
//!   ψ'' + (ελ/Δ(x)) ψ = 0          on (0, h_s),   Δ(x) = D(u_s(x))
//!   ψ'(0)    = (k / D(1/k)) ψ(0)
//!   ψ'(h_s)  = λ ψ(h_s)
//! ```
//!
//! The eigenvalue appears in the front boundary condition, so this is not a
//! textbook Sturm-Liouville problem; we solve it by shooting. For a trial
//! `λ` the ODE is integrated from the wall and the front residual
//! `ψ'(h_s) − λψ(h_s)` is driven to zero by a bracketed scan plus bisection.
//! The principal mode is the root whose eigenfunction stays positive.

use crate::conductivity::Conductivity;
use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, simpson_uniform};
use crate::steady_state::SteadyState;

/// Absolute tolerance on the converged eigenvalue.
pub const TOL_LAMBDA: f64 = 1e-9;

/// Default decay-fit window on the gap to the asymptote.
pub const FIT_WINDOW_LO: f64 = 1e-4;
pub const FIT_WINDOW_HI: f64 = 1e-2;

/// Steady-profile conductivity `Δ(x) = D(u_s(x))` sampled uniformly over
/// `[0, h_s]` (includes midpoints, so spacing is `h_s / (len − 1)`).
#[derive(Debug, Clone)]
pub struct DeltaProfile {
    pub h_s: f64,
    pub samples: Vec<f64>,
}

impl DeltaProfile {
    pub fn new(model: &Conductivity, k: f64, len: usize) -> Result<Self> {
        let steady = SteadyState::new(model, k)?;
        let h_s = steady.height();
        let samples = (0..len)
            .map(|i| {
                let x = h_s * i as f64 / (len - 1) as f64;
                Ok(model.d_unchecked(steady.profile(x)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { h_s, samples })
    }
}

/// Converged principal mode.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda0: f64,
    /// Uniform grid over `[0, h_s]`.
    pub x: Vec<f64>,
    /// Eigenfunction samples, normalised so that `∫ ψ²/Δ = 1` and `ψ(0) > 0`.
    pub psi0: Vec<f64>,
    pub psi0_prime: Vec<f64>,
    /// Scale applied to the raw shooting solution by the normalisation.
    pub norm_constant: f64,
}

struct Shooting {
    eps: f64,
    h_s: f64,
    wall_slope: f64,
    n: usize,
    dx: f64,
    /// `Δ` at steps and half-steps: `2n + 1` values.
    delta: Vec<f64>,
}

impl Shooting {
    fn new(model: &Conductivity, k: f64, eps: f64, lambda_max: f64) -> Result<Self> {
        let steady = SteadyState::new(model, k)?;
        let h_s = steady.height();
        let wall_slope = k / model.d_unchecked(1.0 / k);
        // Resolve the fastest oscillation the scan can produce.
        let omega_max = (eps * lambda_max / model.d_min()).sqrt();
        let mut n = ((h_s * omega_max / 0.05).ceil() as usize).max(200);
        if n % 2 == 1 {
            n += 1;
        }
        let dx = h_s / n as f64;
        let delta = (0..=2 * n)
            .map(|i| {
                let x = h_s * i as f64 / (2 * n) as f64;
                Ok(model.d_unchecked(steady.profile(x)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            eps,
            h_s,
            wall_slope,
            n,
            dx,
            delta,
        })
    }

    /// Integrate the shooting ODE for trial `lambda`, optionally keeping the
    /// trajectory. Returns `(residual, min ψ, trajectory)`.
    fn integrate(&self, lambda: f64, store: bool) -> (f64, f64, Option<(Vec<f64>, Vec<f64>)>) {
        let mut psi = 1.0f64;
        let mut phi = self.wall_slope;
        let mut min_psi = psi;
        let mut traj = if store {
            let mut p = Vec::with_capacity(self.n + 1);
            let mut q = Vec::with_capacity(self.n + 1);
            p.push(psi);
            q.push(phi);
            Some((p, q))
        } else {
            None
        };
        let coeff = self.eps * lambda;
        let dx = self.dx;
        for i in 0..self.n {
            let c0 = -coeff / self.delta[2 * i];
            let cm = -coeff / self.delta[2 * i + 1];
            let c1 = -coeff / self.delta[2 * i + 2];
            // classical RK4 for psi' = phi, phi' = c(x) psi
            let k1p = phi;
            let k1q = c0 * psi;
            let k2p = phi + 0.5 * dx * k1q;
            let k2q = cm * (psi + 0.5 * dx * k1p);
            let k3p = phi + 0.5 * dx * k2q;
            let k3q = cm * (psi + 0.5 * dx * k2p);
            let k4p = phi + dx * k3q;
            let k4q = c1 * (psi + dx * k3p);
            psi += dx / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            phi += dx / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            min_psi = min_psi.min(psi);
            if let Some((p, q)) = traj.as_mut() {
                p.push(psi);
                q.push(phi);
            }
        }
        (phi - lambda * psi, min_psi, traj)
    }
}

/// Solve for the principal decay rate and its eigenfunction.
pub fn solve_principal_eigen(model: &Conductivity, k: f64, eps: f64) -> Result<EigenPair> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
    }
    let lambda_ref = lambda0_small_eps(model, k)?;
    let lambda_max = 20.0 * lambda_ref * (1.0f64).max(1.0 / eps);
    let shooting = Shooting::new(model, k, eps, lambda_max)?;

    // Logarithmic bracket scan from well below the expected root.
    let brackets = 200;
    let lambda_min = lambda_max * 1e-5;
    let ratio = (lambda_max / lambda_min).powf(1.0 / brackets as f64);
    let mut lo = lambda_min;
    let (mut r_lo, _, _) = shooting.integrate(lo, false);
    for _ in 0..brackets {
        let hi = lo * ratio;
        let (r_hi, _, _) = shooting.integrate(hi, false);
        if r_lo == 0.0 || r_lo.signum() != r_hi.signum() {
            if let Some(pair) = refine_root(&shooting, lo, hi, r_lo)? {
                return Ok(pair);
            }
            // root captured a sign-changing mode; keep scanning upward
        }
        lo = hi;
        r_lo = r_hi;
    }
    Err(Error::NoRoot { lambda_max })
}

fn refine_root(shooting: &Shooting, mut lo: f64, mut hi: f64, r_lo: f64) -> Result<Option<EigenPair>> {
    let sign_lo = r_lo.signum();
    while hi - lo > TOL_LAMBDA {
        let mid = 0.5 * (lo + hi);
        let (r_mid, _, _) = shooting.integrate(mid, false);
        if r_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if r_mid.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let (_, min_psi, traj) = shooting.integrate(lambda, true);
    if min_psi <= 0.0 {
        // higher mode: the caller re-brackets
        return Ok(None);
    }
    let (mut psi, mut phi) = traj.expect("trajectory was requested");

    // Normalise: ∫ ψ²/Δ = 1 with ψ(0) > 0.
    let weighted: Vec<f64> = psi
        .iter()
        .enumerate()
        .map(|(i, p)| p * p / shooting.delta[2 * i])
        .collect();
    let norm = simpson_uniform(&weighted, shooting.dx);
    let scale = 1.0 / norm.sqrt();
    for v in psi.iter_mut() {
        *v *= scale;
    }
    for v in phi.iter_mut() {
        *v *= scale;
    }
    let x = (0..=shooting.n)
        .map(|i| shooting.h_s * i as f64 / shooting.n as f64)
        .collect();
    Ok(Some(EigenPair {
        lambda0: lambda,
        x,
        psi0: psi,
        psi0_prime: phi,
        norm_constant: scale,
    }))
}

/// The Rayleigh-quotient value of a converged pair,
/// `(k·D(1/k)⁻¹ψ(0)² + ∫(ψ')²) / (ψ(h_s)² + ε)`.
///
/// An independent identity the shooting solution must satisfy; the residual
/// against `lambda0` is the primary correctness check on the solver.
pub fn rayleigh_quotient(pair: &EigenPair, model: &Conductivity, k: f64, eps: f64) -> f64 {
    let dx = pair.x[1] - pair.x[0];
    let grad_sq: Vec<f64> = pair.psi0_prime.iter().map(|p| p * p).collect();
    let integral = simpson_uniform(&grad_sq, dx);
    let wall = k / model.d_unchecked(1.0 / k) * pair.psi0[0] * pair.psi0[0];
    let front = pair.psi0.last().unwrap();
    (wall + integral) / (front * front + eps)
}

/// Integral of `ψ²/Δ` for a converged pair; 1 when correctly normalised.
pub fn normalization_integral(pair: &EigenPair, model: &Conductivity, k: f64) -> Result<f64> {
    let steady = SteadyState::new(model, k)?;
    let weighted = pair
        .x
        .iter()
        .zip(&pair.psi0)
        .map(|(&x, &p)| Ok(p * p / model.d_unchecked(steady.profile(x)?)))
        .collect::<Result<Vec<_>>>()?;
    let dx = pair.x[1] - pair.x[0];
    Ok(simpson_uniform(&weighted, dx))
}

/// Fast-conduction limit of the decay rate: `k / (D(1/k) + k·h_s)`.
pub fn lambda0_small_eps(model: &Conductivity, k: f64) -> Result<f64> {
    let h_s = SteadyState::new(model, k)?.height();
    Ok(k / (model.d_unchecked(1.0 / k) + k * h_s))
}

/// Normalisation constant of the fast-conduction eigenfunction shape
/// `x + D(1/k)/k`.
pub fn psi0_small_eps_alpha(model: &Conductivity, k: f64) -> Result<f64> {
    let steady = SteadyState::new(model, k)?;
    let h_s = steady.height();
    let offset = model.d_unchecked(1.0 / k) / k;
    let integrand = |x: f64| {
        let u = steady.profile_clamped(x);
        let s = x + offset;
        s * s / model.d_unchecked(u)
    };
    let integral = adaptive_simpson(&integrand, 0.0, h_s, 1e-12);
    Ok(1.0 / integral.sqrt())
}

/// Fast-conduction limit of the eigenfunction, `α·(x + D(1/k)/k)`.
pub fn psi0_small_eps(model: &Conductivity, k: f64, x: f64) -> Result<f64> {
    let h_s = SteadyState::new(model, k)?.height();
    if !(x >= -1e-12 && x <= h_s + 1e-12) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            min: 0.0,
            max: h_s,
        });
    }
    let alpha = psi0_small_eps_alpha(model, k)?;
    Ok(alpha * (x + model.d_unchecked(1.0 / k) / k))
}

/// Result of a log-linear decay fit.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// Fitted decay rate (negated slope of `ln(h∞ − h)` against `t`).
    pub lambda: f64,
    /// Fitted log-amplitude (the intercept); reported, never asserted.
    pub ln_amplitude: f64,
    pub samples: usize,
}

/// Least-squares decay rate of a front series `(t, h)` approaching the
/// asymptote `h_inf` from below, restricted to samples whose remaining gap
/// lies inside `window`.
pub fn fit_decay_rate<I>(series: I, h_inf: f64, window: (f64, f64)) -> Result<DecayFit>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let (lo, hi) = window;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut n = 0usize;
    for (t, h) in series {
        let gap = h_inf - h;
        if gap >= lo && gap <= hi {
            let y = gap.ln();
            sx += t;
            sy += y;
            sxx += t * t;
            sxy += t * y;
            n += 1;
        }
    }
    if n < 20 {
        return Err(Error::InsufficientData {
            needed: 20,
            found: n,
        });
    }
    let nf = n as f64;
    let denom = nf * sxx - sx * sx;
    let slope = (nf * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / nf;
    Ok(DecayFit {
        lambda: -slope,
        ln_amplitude: intercept,
        samples: n,
    })
}
