//! Small quadrature helpers shared by the analytic modules.

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson_panel(a, b, fa, fm, fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson_panel(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_panel(a, m, fa, flm, fm);
    let right = simpson_panel(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Composite Simpson rule over uniformly spaced samples.
///
/// Requires at least two samples; an even interval count uses plain Simpson,
/// an odd one closes the last interval with a trapezoid.
pub fn simpson_uniform(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2, "need at least two samples");
    let intervals = n - 1;
    let pairs = intervals / 2;
    let mut acc = 0.0;
    for p in 0..pairs {
        let i = 2 * p;
        acc += dx / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
    }
    if intervals % 2 == 1 {
        acc += 0.5 * dx * (values[n - 2] + values[n - 1]);
    }
    acc
}
