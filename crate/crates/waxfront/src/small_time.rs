//! Two-term small-time series for the front height and temperature field.
//!
//! In the scaled coordinate `X = x/t` the early solution is
//! `h(t) = H₁t + H₂t²` and `u(X, t) = 1 + U₁(X)·t + U₂(X)·t²`, with all
//! coefficients closed-form in `(k, ε, D'(1))`. The series both validates
//! the dynamic solver at early times and provides its initial data, since
//! the governing equations degenerate at `t = 0`.

use crate::conductivity::Conductivity;
use crate::error::{Error, Result};

/// Closed-form series coefficients for given problem parameters.
#[derive(Debug, Clone, Copy)]
pub struct SmallTime {
    pub k: f64,
    pub eps: f64,
    /// `D'(1)` of the conductivity model.
    pub d_prime_one: f64,
    /// Linear front coefficient, `k − 1`.
    pub h1: f64,
    /// Quadratic front coefficient, `−½·k(k−1)(k + ε(k−1))`.
    pub h2: f64,
}

impl SmallTime {
    pub fn new(model: &Conductivity, k: f64, eps: f64) -> Result<Self> {
        if !(k > 1.0) {
            return Err(Error::NoSteadyState { k });
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
        }
        let d_prime_one = model.d_prime_unchecked(1.0);
        Ok(Self {
            k,
            eps,
            d_prime_one,
            h1: k - 1.0,
            h2: -0.5 * k * (k - 1.0) * (k + eps * (k - 1.0)),
        })
    }

    /// Front height series `h(t) = H₁t + H₂t²`. Validity is the caller's
    /// concern; see [`SmallTime::t_valid`].
    pub fn h(&self, t: f64) -> f64 {
        self.h1 * t + self.h2 * t * t
    }

    /// Advisory validity horizon: the largest `t` with `|H₂|t ≤ 0.1·H₁`.
    pub fn t_valid(&self) -> f64 {
        if self.h2 == 0.0 {
            f64::INFINITY
        } else {
            0.1 * self.h1 / self.h2.abs()
        }
    }

    /// First temperature correction `U₁(X) = k(X − (k−1))`; vanishes at the
    /// front `X = H₁`.
    pub fn u1(&self, x_scaled: f64) -> f64 {
        self.k * (x_scaled - (self.k - 1.0))
    }

    /// Second temperature correction `U₂(X)`, a quadratic in `X`.
    pub fn u2(&self, x_scaled: f64) -> f64 {
        let (k, eps, dp) = (self.k, self.eps, self.d_prime_one);
        let km1 = k - 1.0;
        let a = -(0.5 * eps * k * km1 + 0.5 * dp * k * k);
        let b = -(k * k * km1 - dp * k * k * km1);
        let c = k * k * km1 * km1 * (0.5 * (eps - dp) + 1.0)
            + 0.5 * k * k * k * km1
            + 0.5 * eps * k * km1 * km1 * km1;
        (a * x_scaled + b) * x_scaled + c
    }

    /// Temperature series `u(X, t) = 1 + U₁(X)·t + U₂(X)·t²` in the scaled
    /// coordinate `X = x/t`.
    pub fn u(&self, x_scaled: f64, t: f64) -> f64 {
        1.0 + self.u1(x_scaled) * t + self.u2(x_scaled) * t * t
    }

    /// Uniform `t → 0⁺` limits of the physical-space derivatives:
    /// `(u_x, u_xx) → (k, −εk(k−1) − D'(1)k²)`.
    pub fn initial_slope_limits(&self) -> (f64, f64) {
        let (k, eps, dp) = (self.k, self.eps, self.d_prime_one);
        (k, -eps * k * (k - 1.0) - dp * k * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(c: f64, k: f64, eps: f64) -> SmallTime {
        let model = Conductivity::quadratic(c).unwrap();
        SmallTime::new(&model, k, eps).unwrap()
    }

    #[test]
    fn front_series_values() {
        let st = coeffs(0.0, 2.0, 0.1);
        assert_eq!(st.h(0.0), 0.0);
        assert!((st.h1 - 1.0).abs() < 1e-15);
        assert!((st.h2 + 2.1).abs() < 1e-15);
        assert!((st.h(0.01) - 0.00979).abs() < 1e-15);
        let st5 = coeffs(0.0, 2.0, 0.5);
        assert!((st5.h2 + 2.5).abs() < 1e-15);
    }

    #[test]
    fn signs_for_growing_layer() {
        for (c, k, eps) in [(0.0, 1.5, 0.1), (3.0, 2.0, 0.5), (-3.0, 10.0, 1.0)] {
            let st = coeffs(c, k, eps);
            assert!(st.h1 > 0.0);
            assert!(st.h2 < 0.0);
        }
    }

    #[test]
    fn first_correction_vanishes_at_front() {
        for (c, k, eps) in [(0.0, 2.0, 0.1), (2.0, 10.0, 0.5)] {
            let st = coeffs(c, k, eps);
            assert_eq!(st.u1(st.h1), 0.0);
        }
        let st = coeffs(0.0, 2.0, 0.1);
        assert!((st.u1(0.0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn second_correction_value_at_wall() {
        // k = 2, eps = 0.1, constant conductivity: U2(0) = 8.3
        let st = coeffs(0.0, 2.0, 0.1);
        assert!((st.u2(0.0) - 8.3).abs() < 1e-12);
    }

    #[test]
    fn slope_limits() {
        let (ux, uxx) = coeffs(0.0, 2.0, 0.1).initial_slope_limits();
        assert_eq!(ux, 2.0);
        assert!((uxx + 0.2).abs() < 1e-15);
        // c = 3 means D'(1) = -3
        let (ux, uxx) = coeffs(3.0, 2.0, 0.5).initial_slope_limits();
        assert_eq!(ux, 2.0);
        assert!((uxx - 11.0).abs() < 1e-12);
        // degenerate no-growth limit: u_x -> 1+
        let (ux, _) = coeffs(0.0, 1.0 + 1e-9, 0.1).initial_slope_limits();
        assert!(ux > 1.0 && ux < 1.0 + 1e-8);
    }

    #[test]
    fn front_slope_recovers_growth_rate() {
        let st = coeffs(1.0, 3.0, 0.2);
        let mut prev_err = f64::INFINITY;
        for &d in &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let err = (st.h(d) / d - (st.k - 1.0)).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 2e-5);
    }

    /// The order-t correction problem the series coefficients solve:
    /// `(D'(1)·U₁U₁' + U₂')' = ε(U₁ − X·U₁')` in the interior with flux,
    /// front, and growth-rate matching conditions. Checked by finite
    /// differences so the test stays independent of the closed forms.
    #[test]
    fn correction_problem_residual() {
        for (c, k, eps) in [(0.0, 2.0, 0.1), (3.0, 2.0, 0.5), (-2.0, 4.0, 1.0), (1.0, 10.0, 0.3)] {
            let st = coeffs(c, k, eps);
            let dp = st.d_prime_one;
            let h1 = st.h1;
            // u2 is quadratic, so centered differences are exact up to
            // roundoff; the step just has to dominate cancellation noise
            let d = 1e-3 * h1.max(1.0);
            let scale = 1.0 + st.u2(0.0).abs().max(st.u2(h1).abs());
            let lhs = |x: f64| dp * st.u1(x) * st.k + deriv(&|y| st.u2(y), x, d);
            for i in 1..50 {
                let x = h1 * i as f64 / 50.0;
                let residual = deriv(&lhs, x, d) - eps * (st.u1(x) - x * st.k);
                assert!(
                    residual.abs() < 1e-7 * scale,
                    "c={c}, k={k}, eps={eps}, x={x}"
                );
            }
            // wall flux matching: D'(1)U1(0)U1'(0) + U2'(0) = k U1(0)
            let wall = dp * st.u1(0.0) * st.k + deriv(&|y| st.u2(y), 0.0, d)
                - st.k * st.u1(0.0);
            assert!(wall.abs() < 1e-8 * scale, "wall: c={c}, k={k}, eps={eps}");
            // front matching: U1'(H1) H2 + U2(H1) = 0
            let front = st.k * st.h2 + st.u2(h1);
            assert!(front.abs() < 1e-10 * scale, "front: c={c}, k={k}, eps={eps}");
            // growth-rate matching: 2 H2 = D'(1)U1(H1)U1'(H1) + U2'(H1)
            let rate = 2.0 * st.h2
                - (dp * st.u1(h1) * st.k + deriv(&|y| st.u2(y), h1, d));
            assert!(rate.abs() < 1e-8 * scale, "rate: c={c}, k={k}, eps={eps}");
        }
    }

    fn deriv(f: &dyn Fn(f64) -> f64, x: f64, d: f64) -> f64 {
        (f(x + d) - f(x - d)) / (2.0 * d)
    }

    #[test]
    fn rejects_bad_parameters() {
        let model = Conductivity::quadratic(0.0).unwrap();
        assert!(SmallTime::new(&model, 1.0, 0.1).is_err());
        assert!(SmallTime::new(&model, 2.0, 0.0).is_err());
    }
}
