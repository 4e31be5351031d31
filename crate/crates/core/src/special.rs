//! Digamma, trigamma and log-gamma on the positive real axis.
//!
//! Digamma and trigamma shift the argument upward with the recurrences
//! ψ(x) = ψ(x+1) − 1/x and ψ'(x) = ψ'(x+1) + 1/x² until x ≥ 10, then use the
//! Bernoulli asymptotic series. Absolute error is below 1e-14 for x > 0.

/// Arguments at or above this value go straight to the asymptotic series.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// B_{2k} / (2k) for k = 1..7.
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// B_{2k} for k = 1..8.
const TRIGAMMA_SERIES: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Below this, the first recurrence step is taken on its own so the
/// running products in [`shift_up`] cannot underflow.
const TINY: f64 = 1e-6;

/// Shifts x up to the asymptotic range. Returns the shifted argument and
/// the partial sums Σ 1/x_i and Σ 1/x_i², each accumulated as one fraction
/// so the loop needs no divisions.
#[inline]
fn shift_up(mut x: f64) -> (f64, f64, f64) {
    let (mut lead1, mut lead2) = (0.0, 0.0);
    if x < TINY {
        lead1 = 1.0 / x;
        lead2 = lead1 * lead1;
        x += 1.0;
    }
    if x >= ASYMPTOTIC_THRESHOLD {
        return (x, lead1, lead2);
    }
    // Σ 1/x_i = p1/q1 and Σ 1/x_i² = p2/q2.
    let (mut p1, mut q1, mut p2, mut q2) = (0.0, 1.0, 0.0, 1.0);
    while x < ASYMPTOTIC_THRESHOLD {
        let x2 = x * x;
        p1 = p1 * x + q1;
        q1 *= x;
        p2 = p2 * x2 + q2;
        q2 *= x2;
        x += 1.0;
    }
    (x, lead1 + p1 / q1, lead2 + p2 / q2)
}

/// ψ(x) − ln y for x, y > 0 with a single logarithm: the series part of
/// ψ carries ln x', which merges with ln y.
#[inline]
pub(crate) fn digamma_minus_ln(x: f64, y: f64) -> f64 {
    if !(x > 0.0) || x.is_infinite() {
        return digamma(x) - y.ln();
    }
    let (x, s1, _) = shift_up(x);
    (x / y).ln() - s1 - 0.5 / x - digamma_series(x)
}

#[inline]
fn digamma_series(x: f64) -> f64 {
    let inv2 = 1.0 / (x * x);
    // Horner in 1/x² over the series coefficients.
    let mut poly = 0.0;
    for c in DIGAMMA_SERIES.iter().rev() {
        poly = poly * inv2 + c;
    }
    poly * inv2
}

/// Digamma function ψ(x) = d/dx ln Γ(x) for x > 0.
///
/// Returns NaN for x ≤ 0 or NaN input.
pub fn digamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let (x, s1, _) = shift_up(x);
    x.ln() - s1 - 0.5 / x - digamma_series(x)
}

/// Trigamma function ψ'(x) for x > 0.
///
/// Returns NaN for x ≤ 0 or NaN input.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let (x, _, s2) = shift_up(x);
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut poly = 0.0;
    for c in TRIGAMMA_SERIES.iter().rev() {
        poly = poly * inv2 + c;
    }
    // 1/x + 1/(2x²) + Σ B_{2k} / x^{2k+1}
    s2 + inv + 0.5 * inv2 + poly * inv2 * inv
}

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

    // (x, ψ(x), ψ'(x)) computed with mpmath at 30 digits.
    const REFERENCE: [(f64, f64, f64); 8] = [
        (0.001, -1_000.575_571_931_810_3, 1_000_001.642_533_195_9),
        (0.5, -1.963_510_026_021_423_5, 4.934_802_200_544_679),
        (1.5, 0.036_489_973_978_576_52, 0.934_802_200_544_679_3),
        (3.7, 1.167_153_539_361_511_4, 0.310_037_857_670_038_3),
        (6.0, 1.706_117_668_431_800_5, 0.181_322_955_737_115_33),
        (10.25, 2.277_704_790_686_724, 0.102_474_521_517_991_87),
        (123.4, 4.811_373_775_116_277, 0.008_136_651_610_865_264),
        (1e5, 11.512_920_464_961_895, 1.000_005_000_016_666_7e-5),
    ];

    #[test]
    fn digamma_at_one_and_two() {
        assert!((digamma(1.0) + EULER_MASCHERONI).abs() < 1e-14);
        assert!((digamma(2.0) - (1.0 - EULER_MASCHERONI)).abs() < 1e-14);
    }

    #[test]
    fn matches_high_precision_reference() {
        for &(x, psi, tri) in &REFERENCE {
            let d = digamma(x);
            let t = trigamma(x);
            assert!((d - psi).abs() <= 1e-12 * psi.abs().max(1.0), "ψ({x}) = {d}, want {psi}");
            assert!((t - tri).abs() <= 1e-12 * tri.abs().max(1.0), "ψ'({x}) = {t}, want {tri}");
        }
    }

    #[test]
    fn agrees_with_statrs_digamma() {
        let mut x = 0.013;
        while x < 500.0 {
            let ours = digamma(x);
            let theirs = statrs::function::gamma::digamma(x);
            assert!((ours - theirs).abs() <= 1e-11 * theirs.abs().max(1.0), "x = {x}");
            x *= 1.37;
        }
    }

    #[test]
    fn trigamma_is_derivative_of_digamma() {
        for &x in &[0.3, 0.9, 2.5, 7.0, 40.0] {
            let h = 1e-5 * x;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((trigamma(x) - fd).abs() <= 1e-7 * trigamma(x), "x = {x}");
        }
    }

    #[test]
    fn digamma_minus_ln_matches_parts() {
        for &(x, y) in &[(1e-9, 3.0), (0.5, 0.25), (2.0, 7.5), (9.99, 1e-3), (40.0, 2.0)] {
            let want = digamma(x) - f64::ln(y);
            assert!((digamma_minus_ln(x, y) - want).abs() <= 1e-13 * want.abs().max(1.0), "x = {x}, y = {y}");
        }
    }

    #[test]
    fn tiny_arguments() {
        let x = 1e-200;
        assert!((digamma(x) + 1.0 / x).abs() / (1.0 / x) < 1e-14);
        assert!((trigamma(1e-150) - 1e300).abs() / 1e300 < 1e-14);
    }

    #[test]
    fn nonpositive_arguments_are_nan() {
        assert!(digamma(0.0).is_nan());
        assert!(digamma(-2.5).is_nan());
        assert!(trigamma(0.0).is_nan());
        assert!(digamma(f64::NAN).is_nan());
    }

    #[test]
    fn ln_gamma_small_integers() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
    }
}
