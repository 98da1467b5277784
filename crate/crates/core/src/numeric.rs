//! Small scalar numerics shared by the other modules.

use crate::error::{Error, Result};

/// Bisection on a sign change of `f` over `[a, b]`, down to width `tol` or until the midpoint
/// stops moving.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSolutionInBracket(format!(
            "no sign change on [{a}, {b}] (values {fa}, {fb})"
        )));
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Newton iteration safeguarded by a sign-change bracket: a step leaving the bracket is replaced
/// by a bisection step. Converges to full precision.
pub fn newton_bracketed<F: Fn(f64) -> (f64, f64)>(f: F, a: f64, b: f64) -> Result<f64> {
    let (mut lo, mut hi) = if a < b { (a, b) } else { (b, a) };
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSolutionInBracket(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    let lo_sign = flo.signum();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if next == x || hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Aitken's delta-squared extrapolation of the last three terms.
pub fn aitken(x0: f64, x1: f64, x2: f64) -> f64 {
    let d = (x2 - x1) - (x1 - x0);
    if d == 0.0 {
        x2
    } else {
        x2 - (x2 - x1) * (x2 - x1) / d
    }
}

/// Least-squares line through `(x, y)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of the samples.
    pub correlation: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    LineFit {
        slope,
        intercept: my - slope * mx,
        correlation: sxy / (sxx * syy).sqrt(),
    }
}

/// Chebyshev values `T_0(w) ..= T_m(w)` into `out` (length `m + 1`), with derivatives in `dout`.
pub fn chebyshev_with_derivs(w: f64, out: &mut [f64], dout: &mut [f64]) {
    let len = out.len();
    if len == 0 {
        return;
    }
    out[0] = 1.0;
    dout[0] = 0.0;
    if len == 1 {
        return;
    }
    out[1] = w;
    dout[1] = 1.0;
    for t in 2..len {
        out[t] = 2.0 * w * out[t - 1] - out[t - 2];
        dout[t] = 2.0 * out[t - 1] + 2.0 * w * dout[t - 1] - dout[t - 2];
    }
}

/// Base-2 van der Corput sequence, a deterministic low-discrepancy sample of `(0, 1)`.
pub fn van_der_corput(mut i: u64) -> f64 {
    i += 1;
    let mut v = 0.0;
    let mut f = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            v += f;
        }
        i >>= 1;
        f *= 0.5;
    }
    v
}

/// Median of a slice (sorted copy). `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn newton_bracketed_matches_bisection() {
        let f = |x: f64| (x.cos() - x, -x.sin() - 1.0);
        let n = newton_bracketed(f, 0.0, 1.0).unwrap();
        let b = bisect(|x| x.cos() - x, 0.0, 1.0, 0.0).unwrap();
        assert!((n - b).abs() < 1e-15);
    }

    #[test]
    fn aitken_is_exact_on_geometric_sequences() {
        let s = |k: i32| 3.0 + 0.7 * 0.25f64.powi(k);
        assert!((aitken(s(1), s(2), s(3)) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys);
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 2.0).abs() < 1e-13);
        assert!((fit.correlation + 1.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_matches_cosine_form() {
        let mut t = [0.0; 8];
        let mut dt = [0.0; 8];
        let theta: f64 = 0.4;
        chebyshev_with_derivs(theta.cos(), &mut t, &mut dt);
        for (k, v) in t.iter().enumerate() {
            assert!((v - (k as f64 * theta).cos()).abs() < 1e-14);
        }
        // T_k'(cos θ) = k sin(kθ) / sin θ
        for (k, v) in dt.iter().enumerate() {
            let exact = k as f64 * (k as f64 * theta).sin() / theta.sin();
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn van_der_corput_first_terms() {
        assert_eq!(van_der_corput(0), 0.5);
        assert_eq!(van_der_corput(1), 0.25);
        assert_eq!(van_der_corput(2), 0.75);
    }
}
