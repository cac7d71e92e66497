//! Log-gamma and modified Bessel functions of the first kind.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7); uses reflection below 1/2.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + k as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Crossover above which the large-argument expansion is tried.
pub const ASYMPTOTIC_THRESHOLD: f64 = 30.0;

/// `ln S_v(x)` where `I_v(x) = (x/2)^v / Γ(v+1) · S_v(x)`, summed from the
/// power series. `S_v(0) = 1`.
fn ln_series_factor(v: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, mut sum, mut offset) = (1.0f64, 1.0f64, 0.0f64);
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + v));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        if sum > 1e250 {
            offset += sum.ln();
            term /= sum;
            sum = 1.0;
        }
        k += 1.0;
    }
    offset + sum.ln()
}

/// `ln(√(2πx) e^{-x} I_v(x))` from the large-argument expansion, or `None`
/// when the series stops shrinking before reaching double precision.
fn ln_asymptotic_factor(v: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * v * v;
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() >= term.abs() && next != 0.0 {
            return None;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            return (sum > 0.0).then(|| sum.ln());
        }
    }
    None
}

/// `ln I_v(x)` for `v >= 0`, `x >= 0`.
pub fn ln_bessel_i(v: f64, x: f64) -> f64 {
    assert!(v >= 0.0 && x >= 0.0, "ln_bessel_i needs v >= 0 and x >= 0");
    if x == 0.0 {
        return if v == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x > ASYMPTOTIC_THRESHOLD {
        if let Some(f) = ln_asymptotic_factor(v, x) {
            return x - 0.5 * (2.0 * PI * x).ln() + f;
        }
    }
    v * (0.5 * x).ln() - ln_gamma(v + 1.0) + ln_series_factor(v, x)
}

/// `I_v(x)`; overflows to infinity for very large `x`.
pub fn bessel_i(v: f64, x: f64) -> f64 {
    ln_bessel_i(v, x).exp()
}

/// `I_{v+1}(x) / I_v(x)`.
pub fn bessel_i_ratio(v: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (ln_bessel_i(v + 1.0, x) - ln_bessel_i(v, x)).exp()
}

/// `ln[Γ(v+1) (2/x)^v I_v(x)]`, the part of `ln I_v` that vanishes at 0.
pub(crate) fn ln_normalized_bessel_i(v: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x > ASYMPTOTIC_THRESHOLD {
        if ln_asymptotic_factor(v, x).is_some() {
            return ln_bessel_i(v, x) - v * (0.5 * x).ln() + ln_gamma(v + 1.0);
        }
    }
    ln_series_factor(v, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_values() {
        assert_relative_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_relative_eq!(ln_gamma(0.5), PI.sqrt().ln(), epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(100.5), 361.435_540_467_777_57, max_relative = 1e-14);
        assert_relative_eq!(ln_gamma(0.1), 2.252_712_651_734_206, max_relative = 1e-13);
    }

    #[test]
    fn half_integer_closed_forms() {
        let mut x = 0.05;
        while x <= 50.0 {
            let i_half = (2.0 / (PI * x)).sqrt() * x.sinh();
            let i_three_halves = (2.0 / (PI * x)).sqrt() * (x.cosh() - x.sinh() / x);
            assert_relative_eq!(bessel_i(0.5, x), i_half, max_relative = 1e-10);
            assert_relative_eq!(bessel_i(1.5, x), i_three_halves, max_relative = 1e-10);
            x += 0.05;
        }
        assert_relative_eq!(bessel_i(0.5, 1.0), 0.937_674_888_245_488, max_relative = 1e-12);
    }

    #[test]
    fn integer_orders() {
        // I_0(1), I_1(1), I_0(40) from tables
        assert_relative_eq!(bessel_i(0.0, 1.0), 1.266_065_877_752_008_4, max_relative = 1e-14);
        assert_relative_eq!(bessel_i(1.0, 1.0), 0.565_159_103_992_485, max_relative = 1e-14);
        assert_relative_eq!(bessel_i(0.0, 40.0), 1.489_477_479_341_989_4e16, max_relative = 1e-12);
    }

    #[test]
    fn series_and_asymptotic_agree_at_crossover() {
        for v in [0.0, 0.5, 1.0, 2.5, 4.0] {
            let x = ASYMPTOTIC_THRESHOLD + 1e-9;
            let series = v * (0.5 * x).ln() - ln_gamma(v + 1.0) + ln_series_factor(v, x);
            let asym = x - 0.5 * (2.0 * PI * x).ln() + ln_asymptotic_factor(v, x).unwrap();
            assert_relative_eq!(series, asym, max_relative = 1e-13);
        }
    }

    #[test]
    fn large_order_falls_back_to_series() {
        // the expansion diverges immediately for v^2 >> x
        assert!(ln_asymptotic_factor(60.0, 35.0).is_none());
        let direct = 60.0 * (17.5f64).ln() - ln_gamma(61.0) + ln_series_factor(60.0, 35.0);
        assert_relative_eq!(ln_bessel_i(60.0, 35.0), direct);
        assert!(ln_bessel_i(60.0, 35.0).is_finite());
    }

    #[test]
    fn ratio_limits() {
        assert_relative_eq!(bessel_i_ratio(0.5, 1e-6), 1e-6 / 3.0, max_relative = 1e-6);
        assert!(bessel_i_ratio(0.5, 500.0) < 1.0 && bessel_i_ratio(0.5, 500.0) > 0.99);
    }
}
