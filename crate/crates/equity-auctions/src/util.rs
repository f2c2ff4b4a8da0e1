//! Small numeric helpers shared across modules.

/// Finds the smallest `x` in `[lo, hi]` with `f(x) >= level` by bisection,
/// assuming `f` is non-decreasing. Returns `lo` if `f(lo) >= level` and
/// `None` if `f(hi) < level`.
pub fn bisect_nondecreasing(
    f: impl Fn(f64) -> f64,
    level: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Option<f64> {
    if f(lo) >= level {
        return Some(lo);
    }
    if f(hi) < level {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if f(mid) >= level {
            b = mid;
        } else {
            a = mid;
        }
    }
    Some(b)
}

/// Root of a continuous function with a sign change on `[lo, hi]`.
/// The bracket must satisfy `f(lo) >= 0 >= f(hi)` or the reverse.
pub fn bisect_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let (mut a, mut b) = (lo, hi);
    let sign_lo = flo > 0.0;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == sign_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Formats a float with 12 significant digits, `%g`-style.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        // trim trailing zeros but keep at least one digit after the point
        if s.contains('.') {
            let t = s.trim_end_matches('0').trim_end_matches('.');
            t.to_string()
        } else {
            s
        }
    } else {
        format!("{:.11e}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_threshold() {
        let f = |x: f64| 2.0 * x - 1.0;
        let r = bisect_nondecreasing(f, 0.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.5).abs() < 1e-10);
        assert_eq!(bisect_nondecreasing(f, -5.0, 0.0, 1.0, 1e-12), Some(0.0));
        assert_eq!(bisect_nondecreasing(f, 2.0, 0.0, 1.0, 1e-12), None);
    }

    #[test]
    fn root_of_log() {
        let r = bisect_root(|u| -u.ln() - 1.0, 0.2, 1.0, 1e-13);
        assert!((r - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn g12_formatting() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(0.25), "0.25");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
    }
}
