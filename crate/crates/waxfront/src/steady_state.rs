//! Closed-form steady states of the wax layer.
//!
//! For `k > 1` the layer equilibrates at height `h_s = F(1) − F(1/k)` with
//! profile `u_s(x) = F⁻¹(x + F(1/k))`; no steady layer exists for `k ≤ 1`.
//! These are the convergence targets for every dynamic solver in the crate.

use crate::conductivity::Conductivity;
use crate::error::{Error, Result};

/// Boundary tolerance on profile coordinates.
const TOL_X: f64 = 1e-12;

/// A steady solution for a given model and cooling parameter `k > 1`.
#[derive(Debug, Clone)]
pub struct SteadyState<'a> {
    model: &'a Conductivity,
    k: f64,
    h_s: f64,
    f_wall: f64,
}

impl<'a> SteadyState<'a> {
    pub fn new(model: &'a Conductivity, k: f64) -> Result<Self> {
        if !(k > 1.0) {
            return Err(Error::NoSteadyState { k });
        }
        let f_wall = model.kirchhoff_unchecked(1.0 / k);
        let h_s = model.kirchhoff_one() - f_wall;
        Ok(Self {
            model,
            k,
            h_s,
            f_wall,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn model(&self) -> &Conductivity {
        self.model
    }

    /// Equilibrium front height `h_s = F(1) − F(1/k) > 0`.
    pub fn height(&self) -> f64 {
        self.h_s
    }

    /// Steady temperature profile `u_s(x)` for `x ∈ [0, h_s]`.
    pub fn profile(&self, x: f64) -> Result<f64> {
        if !(x >= -TOL_X && x <= self.h_s + TOL_X) {
            return Err(Error::OutOfRange {
                name: "x",
                value: x,
                min: 0.0,
                max: self.h_s,
            });
        }
        let x = x.clamp(0.0, self.h_s);
        self.model.kirchhoff_inv(x + self.f_wall)
    }

    /// Profile evaluation with the argument clamped into `[0, h_s]`;
    /// used by solver diagnostics where `x` may overshoot by grid error.
    pub(crate) fn profile_clamped(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.h_s);
        self.model
            .kirchhoff_inv(x + self.f_wall)
            .expect("clamped argument is in range")
    }

    /// Mean of `D` over `[1/k, 1]`; satisfies `h_s = (1 − 1/k) · mean`.
    pub fn mean_conductivity(&self) -> f64 {
        self.h_s / (1.0 - 1.0 / self.k)
    }

    /// `dh_s/dk = D(1/k) / k²`.
    pub fn height_derivative(&self) -> f64 {
        self.model.d_unchecked(1.0 / self.k) / (self.k * self.k)
    }

    /// Second derivative of the steady profile, `u_s'' = −D'(u_s)/D(u_s)³`.
    pub fn profile_second_derivative(&self, x: f64) -> Result<f64> {
        let u = self.profile(x)?;
        let d = self.model.d_unchecked(u);
        Ok(-self.model.d_prime_unchecked(u) / (d * d * d))
    }

    /// Location of the interior inflection point of `u_s`, when one exists.
    ///
    /// `u_s''` changes sign exactly where `D'(u_s) = 0`, which needs a zero
    /// of `D'` strictly inside `(1/k, 1)`. Detected by a sign change of the
    /// evaluated second derivative, then pinned by bisection.
    pub fn inflection_point(&self) -> Option<f64> {
        let n = 512;
        let mut prev_x = 0.0;
        let mut prev = self.profile_second_derivative(0.0).ok()?;
        for i in 1..=n {
            let x = self.h_s * i as f64 / n as f64;
            let cur = self.profile_second_derivative(x).ok()?;
            if cur == 0.0 {
                // sample sits exactly on a zero; let the bracket span it
                continue;
            }
            if prev != 0.0 && prev.signum() != cur.signum() {
                let (mut lo, mut hi, lo_sign) = (prev_x, x, prev.signum());
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let v = self.profile_second_derivative(mid).ok()?;
                    if v == 0.0 {
                        return Some(mid);
                    }
                    if v.signum() == lo_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = cur;
        }
        None
    }
}

/// `h_s(k) = F(1) − F(1/k)`; errors for `k ≤ 1` where no steady layer exists.
pub fn steady_height(model: &Conductivity, k: f64) -> Result<f64> {
    Ok(SteadyState::new(model, k)?.height())
}

/// `u_s(x) = F⁻¹(x + F(1/k))`.
pub fn steady_profile(model: &Conductivity, k: f64, x: f64) -> Result<f64> {
    SteadyState::new(model, k)?.profile(x)
}

/// Mean conductivity over the steady temperature range `[1/k, 1]`.
pub fn mean_conductivity(model: &Conductivity, k: f64) -> Result<f64> {
    Ok(SteadyState::new(model, k)?.mean_conductivity())
}

/// `dh_s/dk = D(1/k)/k²`, defined for all `k ≥ 1`.
pub fn steady_height_derivative(model: &Conductivity, k: f64) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::OutOfRange {
            name: "k",
            value: k,
            min: 1.0,
            max: f64::INFINITY,
        });
    }
    Ok(model.d_unchecked(1.0 / k) / (k * k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;

    fn quad(c: f64) -> Conductivity {
        Conductivity::quadratic(c).unwrap()
    }

    #[test]
    fn heights_match_closed_forms() {
        assert_eq!(steady_height(&quad(0.0), 2.0).unwrap(), 0.5);
        assert!((steady_height(&quad(3.0), 2.0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn height_against_quadrature_oracle() {
        for c in [-3.0, -1.0, 0.0, 2.0, 3.0] {
            for k in [1.5, 2.0, 10.0, 20.0] {
                let oracle =
                    adaptive_simpson(&|u| 1.0 + c * u * (1.0 - u), 1.0 / k, 1.0, 1e-13);
                let h = steady_height(&quad(c), k).unwrap();
                assert!((h - oracle).abs() < 1e-10, "c={c}, k={k}");
            }
        }
    }

    #[test]
    fn no_steady_state_at_or_below_one() {
        assert!(matches!(
            steady_height(&quad(0.0), 1.0),
            Err(Error::NoSteadyState { .. })
        ));
        assert!(steady_height(&quad(0.0), 0.5).is_err());
    }

    #[test]
    fn large_k_limit_approaches_mean_over_unit_interval() {
        // h_s -> <D([0,1])> - D(0)/k + O(1/k^2)
        for c in [0.0, 3.0, -2.0] {
            let model = quad(c);
            let full_mean = model.kirchhoff_one();
            let d0 = model.d(0.0).unwrap();
            let err = |k: f64| {
                (steady_height(&model, k).unwrap() - (full_mean - d0 / k)).abs()
            };
            let (e1, e2) = (err(100.0), err(200.0));
            assert!(e1 < 1e-3, "c={c}");
            // halving 1/k should quarter the remainder
            if e1 > 1e-13 {
                let ratio = e1 / e2;
                assert!(ratio > 3.0 && ratio < 5.0, "c={c}, ratio={ratio}");
            }
        }
    }

    #[test]
    fn profile_boundary_values() {
        let m0 = quad(0.0);
        assert!((steady_profile(&m0, 2.0, 0.25).unwrap() - 0.75).abs() < 1e-12);
        assert!((steady_profile(&m0, 2.0, 0.0).unwrap() - 0.5).abs() < 1e-12);
        let m3 = quad(3.0);
        assert!((steady_profile(&m3, 2.0, 0.75).unwrap() - 1.0).abs() < 1e-12);
        assert!(steady_profile(&m3, 2.0, 0.8).is_err());
        assert!(steady_profile(&m3, 2.0, -0.1).is_err());
    }

    #[test]
    fn profile_strictly_increasing() {
        for c in [-3.0, 0.0, 3.0] {
            let model = quad(c);
            let ss = SteadyState::new(&model, 10.0).unwrap();
            let mut prev = ss.profile(0.0).unwrap();
            for i in 1..=200 {
                let x = ss.height() * i as f64 / 200.0;
                let u = ss.profile(x).unwrap();
                assert!(u > prev, "c={c}, x={x}");
                prev = u;
            }
        }
    }

    #[test]
    fn transform_of_profile_has_unit_slope() {
        // (F(u_s))_x = 1: finite differences at 100 interior points.
        for c in [-3.0, 0.0, 3.0] {
            let model = quad(c);
            let ss = SteadyState::new(&model, 2.0).unwrap();
            let h = 1e-6 * ss.height();
            for i in 1..100 {
                let x = ss.height() * i as f64 / 100.0;
                let (a, b) = ((x - h).max(0.0), (x + h).min(ss.height()));
                let fa = model.kirchhoff(ss.profile(a).unwrap()).unwrap();
                let fb = model.kirchhoff(ss.profile(b).unwrap()).unwrap();
                assert!(((fb - fa) / (b - a) - 1.0).abs() < 1e-6, "c={c}, x={x}");
            }
        }
    }

    #[test]
    fn mean_conductivity_values() {
        assert!((mean_conductivity(&quad(0.0), 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mean_conductivity(&quad(3.0), 2.0).unwrap() - 1.5).abs() < 1e-14);
        // identity with the quadrature route
        let model = quad(-3.0);
        let k = 10.0;
        let oracle = adaptive_simpson(&|u| 1.0 - 3.0 * u * (1.0 - u), 0.1, 1.0, 1e-13) / 0.9;
        assert!((mean_conductivity(&model, k).unwrap() - oracle).abs() < 1e-10);
        let h = steady_height(&model, k).unwrap();
        assert!((mean_conductivity(&model, k).unwrap() - h / 0.9).abs() < 1e-14);
    }

    #[test]
    fn height_derivative_values() {
        assert!((steady_height_derivative(&quad(0.0), 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((steady_height_derivative(&quad(3.0), 2.0).unwrap() - 0.4375).abs() < 1e-15);
        // slope at k = 1 matches the near-threshold expansion h_s ~ (k-1)
        assert!((steady_height_derivative(&quad(0.0), 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn height_derivative_matches_finite_differences() {
        let delta = 1e-6;
        for c in [-2.0, 0.0, 3.0] {
            let model = quad(c);
            for k in [1.5, 2.0, 10.0] {
                let fd = (steady_height(&model, k + delta).unwrap()
                    - steady_height(&model, k - delta).unwrap())
                    / (2.0 * delta);
                let exact = steady_height_derivative(&model, k).unwrap();
                assert!((fd - exact).abs() < 1e-8, "c={c}, k={k}");
            }
        }
    }

    #[test]
    fn height_monotone_in_k() {
        for c in [-3.0, 0.0, 3.0] {
            let model = quad(c);
            let mut prev = steady_height(&model, 1.01).unwrap();
            for i in 1..=100 {
                let k = 1.01 + 0.3 * i as f64;
                let h = steady_height(&model, k).unwrap();
                assert!(h > prev, "c={c}, k={k}");
                prev = h;
            }
        }
    }

    #[test]
    fn inflection_presence_matches_derivative_criterion() {
        // D' vanishes at u = 1/2; an interior inflection needs 1/k < 1/2,
        // i.e. k > 2, and a non-constant family.
        for c in [-3.0, -1.0, 1.0, 3.0] {
            let model = quad(c);
            assert!(
                SteadyState::new(&model, 2.0).unwrap().inflection_point().is_none(),
                "c={c}, k=2"
            );
            for k in [3.0, 10.0, 20.0] {
                let ss = SteadyState::new(&model, k).unwrap();
                let xi = ss.inflection_point();
                assert!(xi.is_some(), "c={c}, k={k}");
                // the inflection sits where u_s = 1/2
                let xi = xi.unwrap();
                let u = ss.profile(xi).unwrap();
                assert!((u - 0.5).abs() < 1e-6, "c={c}, k={k}, u={u}");
            }
        }
        let constant = quad(0.0);
        for k in [2.0, 10.0] {
            assert!(SteadyState::new(&constant, k)
                .unwrap()
                .inflection_point()
                .is_none());
        }
    }
}
