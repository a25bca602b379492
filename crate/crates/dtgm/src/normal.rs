//! Standard normal CDF and quantile, accurate to well below 1e-10.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF `Φ(x)`.
///
/// Built on `erfc`: a Maclaurin series below 2 and a Lentz-evaluated
/// continued fraction above, giving ~1e-15 relative accuracy across the
/// `|x| ≤ 8` range the inference code uses.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile `Φ⁻¹(p)` for `p` in the open interval (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "quantile probability must lie in (0, 1), got {p}"
        )));
    }
    let mut x = quantile_seed(p);
    // Two Newton steps polish the rational seed to CDF-level accuracy.
    for _ in 0..2 {
        let err = normal_cdf(x) - p;
        let dens = normal_pdf(x);
        if dens > 0.0 {
            x -= err / dens;
        }
    }
    Ok(x)
}

fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_fraction(x)
    }
}

/// Maclaurin series for erf, adequate through x = 2.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..200usize {
        term *= -x2 / k as f64;
        let contrib = term / (2 * k + 1) as f64;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// Continued fraction for erfc on x ≥ 2 (modified Lentz).
fn erfc_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = tiny;
    let mut c = f;
    let mut d = 0.0f64;
    for n in 1..200usize {
        let a = if n == 1 { 1.0 } else { (n - 1) as f64 / 2.0 };
        let b = x;
        d = b + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() * f * FRAC_2_SQRT_PI / 2.0
}

/// Rational quantile approximation (|error| ~ 1e-9) used to seed Newton.
fn quantile_seed(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson integral of the normal density, an independent
    /// route to Φ used as the oracle here.
    fn cdf_by_quadrature(x: f64) -> f64 {
        fn simpson(a: f64, b: f64) -> f64 {
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (normal_pdf(a) + 4.0 * normal_pdf(m) + normal_pdf(b))
        }
        fn adaptive(a: f64, b: f64, whole: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(a, m);
            let right = simpson(m, b);
            if depth == 0 || (left + right - whole).abs() < 1e-14 {
                left + right + (left + right - whole) / 15.0
            } else {
                adaptive(a, m, left, depth - 1) + adaptive(m, b, right, depth - 1)
            }
        }
        0.5 + adaptive(0.0, x, simpson(0.0, x), 40)
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        for &x in &[0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 8.0] {
            let oracle = cdf_by_quadrature(x);
            assert!(
                (normal_cdf(x) - oracle).abs() < 1e-12,
                "cdf({x}) = {} vs oracle {}",
                normal_cdf(x),
                oracle
            );
            assert!((normal_cdf(-x) - (1.0 - oracle)).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_fixed_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841344746068543).abs() < 1e-12);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((normal_cdf(2.5) - 0.993790334674224).abs() < 1e-12);
    }

    #[test]
    fn quantile_hits_975() {
        let q = normal_quantile(0.975).unwrap();
        assert!((q - 1.9599639845).abs() < 1e-8);
        assert!((q - 1.959963984540054).abs() < 1e-12);
    }

    #[test]
    fn quantile_round_trip() {
        for &p in &[1e-10, 1e-6, 0.01, 0.025, 0.2, 0.5, 0.8, 0.975, 0.99, 1.0 - 1e-10] {
            let x = normal_quantile(p).unwrap();
            assert!(
                (normal_cdf(x) - p).abs() < 1e-12 * p.max(1.0 - p).max(1e-4),
                "round trip failed at p = {p}"
            );
        }
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn quantile_rejects_boundary() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(-0.2).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }
}
