//! Dimensionless wax conductivity models and the Kirchhoff transform.
//!
//! Every other module works through [`Conductivity`]: the conductivity
//! `D(u)` normalised so that `D(1) = 1`, its derivative, and the transform
//! `F(x) = ∫₀ˣ D(s) ds` with its inverse. `F` is strictly increasing because
//! `D` is strictly positive on the working interval `[0, 1]`, so the inverse
//! is single valued.
//!
//! Two families are supported: the quadratic family `D(u) = 1 + c·u·(1−u)`
//! used throughout the parameter sweeps, and tabulated `(u, D)` samples
//! interpolated with a shape-preserving monotone cubic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Absolute tolerance on `|F(x) - y|` for the transform inverse.
pub const TOL_INV: f64 = 1e-12;

/// Arguments within `[-TOL_U, 1 + TOL_U]` are clamped to `[0, 1]`;
/// anything further out is rejected.
pub const TOL_U: f64 = 1e-6;

/// Quadrature target for tabulated-model transform evaluations.
const TOL_F_TABULATED: f64 = 1e-12;

/// Conductivity description as it appears in config files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ConductivitySpec {
    Quadratic { c: f64 },
    Tabulated { points: Vec<(f64, f64)> },
}

impl ConductivitySpec {
    pub fn build(&self) -> Result<Conductivity> {
        match self {
            ConductivitySpec::Quadratic { c } => Conductivity::quadratic(*c),
            ConductivitySpec::Tabulated { points } => Conductivity::tabulated(points.clone()),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Quadratic { c: f64 },
    Tabulated(Pchip),
}

/// A validated conductivity model together with its bounds on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Conductivity {
    kind: Kind,
    d_min: f64,
    d_max: f64,
}

impl Conductivity {
    /// Quadratic family `D(u) = 1 + c·u·(1−u)`.
    ///
    /// Positivity on `[0, 1]` requires `c > -4`.
    pub fn quadratic(c: f64) -> Result<Self> {
        if !c.is_finite() || c <= -4.0 {
            return Err(Error::InvalidConfig(format!(
                "quadratic conductivity needs c > -4 for positivity on [0, 1], got c = {c}"
            )));
        }
        let mid = 1.0 + 0.25 * c;
        Ok(Self {
            kind: Kind::Quadratic { c },
            d_min: mid.min(1.0),
            d_max: mid.max(1.0),
        })
    }

    /// Tabulated samples `(u, D(u))` covering `[0, 1]`, interpolated with a
    /// monotone cubic. The samples must be strictly increasing in `u`, start
    /// at `u = 0`, end at `u = 1`, stay positive, and satisfy `D(1) = 1`.
    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidConfig(
                "tabulated conductivity needs at least two points".into(),
            ));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidConfig(
                    "tabulated conductivity abscissae must be strictly increasing".into(),
                ));
            }
        }
        let first = points.first().unwrap();
        let last = points.last().unwrap();
        if first.0.abs() > 1e-12 || (last.0 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(
                "tabulated conductivity must cover exactly [0, 1]".into(),
            ));
        }
        if (last.1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "conductivity must satisfy D(1) = 1, got D(1) = {}",
                last.1
            )));
        }
        if points.iter().any(|&(_, d)| !(d > 0.0)) {
            return Err(Error::InvalidConfig(
                "tabulated conductivity values must be strictly positive".into(),
            ));
        }
        let pchip = Pchip::new(points)?;
        // The monotone cubic does not overshoot its data, but sample densely
        // anyway to pin the working bounds.
        let mut d_min = f64::INFINITY;
        let mut d_max = f64::NEG_INFINITY;
        let n = 4097;
        for i in 0..n {
            let u = i as f64 / (n - 1) as f64;
            let d = pchip.eval(u);
            d_min = d_min.min(d);
            d_max = d_max.max(d);
        }
        if !(d_min > 0.0) {
            return Err(Error::InvalidConfig(
                "interpolated conductivity dips to zero inside [0, 1]".into(),
            ));
        }
        Ok(Self {
            kind: Kind::Tabulated(pchip),
            d_min,
            d_max,
        })
    }

    pub fn from_spec(spec: &ConductivitySpec) -> Result<Self> {
        spec.build()
    }

    /// The `c` coefficient when the model is the quadratic family.
    pub fn quadratic_coefficient(&self) -> Option<f64> {
        match self.kind {
            Kind::Quadratic { c } => Some(c),
            Kind::Tabulated(_) => None,
        }
    }

    pub fn spec(&self) -> ConductivitySpec {
        match &self.kind {
            Kind::Quadratic { c } => ConductivitySpec::Quadratic { c: *c },
            Kind::Tabulated(p) => ConductivitySpec::Tabulated {
                points: p.x.iter().copied().zip(p.y.iter().copied()).collect(),
            },
        }
    }

    /// Lower bound of `D` on `[0, 1]`.
    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    /// Upper bound of `D` on `[0, 1]`.
    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    fn check_u(u: f64) -> Result<f64> {
        if u < -TOL_U || u > 1.0 + TOL_U || !u.is_finite() {
            return Err(Error::OutOfRange {
                name: "u",
                value: u,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(u.clamp(0.0, 1.0))
    }

    /// `D(u)` for `u ∈ [0, 1]`; arguments within `TOL_U` of the interval
    /// are clamped.
    pub fn d(&self, u: f64) -> Result<f64> {
        Ok(self.d_unchecked(Self::check_u(u)?))
    }

    /// `D'(u)` with the same range policy as [`Conductivity::d`].
    pub fn d_prime(&self, u: f64) -> Result<f64> {
        Ok(self.d_prime_unchecked(Self::check_u(u)?))
    }

    /// `D` evaluated without the range check. Callers own the argument range;
    /// the quadratic form extends smoothly, the tabulated form clamps.
    #[inline]
    pub(crate) fn d_unchecked(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic { c } => 1.0 + c * u * (1.0 - u),
            Kind::Tabulated(p) => p.eval(u.clamp(0.0, 1.0)),
        }
    }

    #[inline]
    pub(crate) fn d_prime_unchecked(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic { c } => c * (1.0 - 2.0 * u),
            Kind::Tabulated(p) => p.deriv(u.clamp(0.0, 1.0)),
        }
    }

    /// Kirchhoff transform `F(x) = ∫₀ˣ D(s) ds` for `x ∈ [0, 1]`.
    ///
    /// The quadratic family uses the closed form `x + c(x²/2 − x³/3)`;
    /// tabulated models integrate the interpolant by adaptive Simpson.
    pub fn kirchhoff(&self, x: f64) -> Result<f64> {
        let x = Self::check_u(x)?;
        Ok(self.kirchhoff_unchecked(x))
    }

    #[inline]
    pub(crate) fn kirchhoff_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic { c } => x + c * x * x * (0.5 - x / 3.0),
            Kind::Tabulated(p) => p.integral_prefix(x.clamp(0.0, 1.0)),
        }
    }

    /// `F(1)`, the upper end of the transform range.
    pub fn kirchhoff_one(&self) -> f64 {
        self.kirchhoff_unchecked(1.0)
    }

    /// Inverse transform: the unique `x ∈ [0, 1]` with `|F(x) − y| ≤ TOL_INV`.
    ///
    /// Safeguarded Newton iteration; monotonicity of `F` guarantees a single
    /// root, and the bisection fallback keeps the iterate bracketed.
    pub fn kirchhoff_inv(&self, y: f64) -> Result<f64> {
        let f1 = self.kirchhoff_one();
        let tol_y = 1e-9 * f1.max(1.0);
        if !(y >= -tol_y && y <= f1 + tol_y) || !y.is_finite() {
            return Err(Error::OutOfRange {
                name: "y",
                value: y,
                min: 0.0,
                max: f1,
            });
        }
        let y = y.clamp(0.0, f1);
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        // F is close to linear with slope in [d_min, d_max]; a scaled guess
        // starts Newton in the basin almost always.
        let mut x = (y / f1).clamp(0.0, 1.0);
        for _ in 0..128 {
            let fx = self.kirchhoff_unchecked(x) - y;
            if fx.abs() <= TOL_INV {
                return Ok(x);
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.d_unchecked(x);
            let mut next = x - fx / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < f64::EPSILON {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// Maximum of `D` over `[lo, hi] ⊆ [0, 1]`.
    pub fn d_max_on(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic { c } => {
                let mut m = self.d_unchecked(lo).max(self.d_unchecked(hi));
                if *c > 0.0 && lo < 0.5 && 0.5 < hi {
                    m = m.max(1.0 + 0.25 * c);
                }
                m
            }
            Kind::Tabulated(p) => p.extremum_on(lo, hi, true),
        }
    }

    /// Minimum of `D` over `[lo, hi] ⊆ [0, 1]`.
    pub fn d_min_on(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic { c } => {
                let mut m = self.d_unchecked(lo).min(self.d_unchecked(hi));
                if *c < 0.0 && lo < 0.5 && 0.5 < hi {
                    m = m.min(1.0 + 0.25 * c);
                }
                m
            }
            Kind::Tabulated(p) => p.extremum_on(lo, hi, false),
        }
    }

    /// Maximum of `D'` over `[lo, hi] ⊆ [0, 1]`.
    pub fn d_prime_max_on(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            // D' is linear in u, so the extremes sit at the endpoints.
            Kind::Quadratic { .. } => self
                .d_prime_unchecked(lo)
                .max(self.d_prime_unchecked(hi)),
            Kind::Tabulated(p) => {
                let n = 1025;
                let mut m = f64::NEG_INFINITY;
                for i in 0..n {
                    let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                    m = m.max(p.deriv(u));
                }
                m
            }
        }
    }
}

/// Shape-preserving monotone cubic interpolant (Fritsch-Carlson derivatives)
/// plus prefix integrals of the interpolant at the knots.
#[derive(Debug, Clone)]
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    /// Integral of the interpolant from `x[0]` to each knot.
    prefix: Vec<f64>,
}

impl Pchip {
    fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let n = points.len();
        let x: Vec<f64> = points.iter().map(|p| p.0).collect();
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = slope[0];
            m[1] = slope[0];
        } else {
            m[0] = endpoint_derivative(h[0], h[1], slope[0], slope[1]);
            m[n - 1] = endpoint_derivative(
                h[n - 2],
                h[n - 3],
                slope[n - 2],
                slope[n - 3],
            );
            for i in 1..n - 1 {
                let (s0, s1) = (slope[i - 1], slope[i]);
                if s0 * s1 <= 0.0 {
                    m[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
                }
            }
        }

        let mut pchip = Self {
            x,
            y,
            m,
            prefix: Vec::new(),
        };
        let mut prefix = Vec::with_capacity(n);
        prefix.push(0.0);
        for i in 0..n - 1 {
            let seg = adaptive_simpson(
                &|u| pchip.eval(u),
                pchip.x[i],
                pchip.x[i + 1],
                TOL_F_TABULATED,
            );
            prefix.push(prefix[i] + seg);
        }
        pchip.prefix = prefix;
        Ok(pchip)
    }

    fn segment(&self, u: f64) -> usize {
        let n = self.x.len();
        self.x.partition_point(|&xi| xi <= u).clamp(1, n - 1) - 1
    }

    fn eval(&self, u: f64) -> f64 {
        let i = self.segment(u);
        let h = self.x[i + 1] - self.x[i];
        let t = (u - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        self.y[i] * h00 + h * self.m[i] * h10 + self.y[i + 1] * h01 + h * self.m[i + 1] * h11
    }

    fn deriv(&self, u: f64) -> f64 {
        let i = self.segment(u);
        let h = self.x[i + 1] - self.x[i];
        let t = (u - self.x[i]) / h;
        let t2 = t * t;
        let dh00 = (6.0 * t2 - 6.0 * t) / h;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = (-6.0 * t2 + 6.0 * t) / h;
        let dh11 = 3.0 * t2 - 2.0 * t;
        self.y[i] * dh00 + self.m[i] * dh10 + self.y[i + 1] * dh01 + self.m[i + 1] * dh11
    }

    fn integral_prefix(&self, u: f64) -> f64 {
        let i = self.segment(u);
        self.prefix[i] + adaptive_simpson(&|s| self.eval(s), self.x[i], u, TOL_F_TABULATED)
    }

    fn extremum_on(&self, lo: f64, hi: f64, max: bool) -> f64 {
        let n = 1025;
        let mut best = if max { f64::NEG_INFINITY } else { f64::INFINITY };
        for i in 0..n {
            let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let d = self.eval(u);
            best = if max { best.max(d) } else { best.min(d) };
        }
        best
    }
}

fn endpoint_derivative(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    // Three-point one-sided estimate with the usual shape guards.
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}
