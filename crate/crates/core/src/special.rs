//! Special functions: the modified Bessel function of the second kind and
//! thin wrappers over `statrs` for Γ and B.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Taylor coefficients of `1/Γ(1+x)` about 0.
const RGAMMA1P: [f64; 30] = [
    1.0,
    5.772_156_649_015_328_655_49e-1,
    -6.558_780_715_202_539_024_49e-1,
    -4.200_263_503_409_523_702_10e-2,
    1.665_386_113_822_914_793_13e-1,
    -4.219_773_455_554_433_339_02e-2,
    -9.621_971_527_876_973_032_11e-3,
    7.218_943_246_663_099_902_46e-3,
    -1.165_167_591_859_065_168_71e-3,
    -2.152_416_741_149_509_751_92e-4,
    1.280_502_823_881_161_955_12e-4,
    -2.013_485_478_078_823_868_62e-5,
    -1.250_493_482_142_670_630_72e-6,
    1.133_027_231_981_695_928_60e-6,
    -2.056_338_416_977_607_073_39e-7,
    6.116_095_104_481_416_087_21e-9,
    5.002_007_644_469_222_945_44e-9,
    -1.181_274_570_487_020_044_06e-9,
    1.043_426_711_691_100_539_79e-10,
    7.782_263_439_905_070_814_32e-12,
    -3.696_805_618_642_205_978_69e-12,
    5.100_370_287_454_475_753_72e-13,
    -2.058_326_053_566_506_635_75e-14,
    -5.348_122_539_423_017_820_29e-15,
    1.226_778_628_238_260_840_89e-15,
    -1.181_259_301_697_458_833_74e-16,
    1.186_692_254_751_600_374_62e-18,
    1.412_380_655_318_031_857_33e-18,
    -2.298_745_684_435_370_219_93e-19,
    1.714_406_321_927_337_428_15e-20,
];

const MAX_SERIES_TERMS: usize = 10_000;

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn beta(a: f64, b: f64) -> f64 {
    statrs::function::beta::beta(a, b)
}

/// Returns `(1/Γ(1+μ), 1/Γ(1-μ), γ₁, γ₂)` with
/// `γ₁ = (1/Γ(1-μ) - 1/Γ(1+μ)) / 2μ` and `γ₂ = (1/Γ(1-μ) + 1/Γ(1+μ)) / 2`,
/// evaluated from the even/odd parts of the Taylor series so that γ₁ has no
/// cancellation as μ → 0. Requires `|μ| <= 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut even = 0.0;
    let mut odd = 0.0;
    let mu2 = mu * mu;
    let mut pow = 1.0;
    for pair in RGAMMA1P.chunks(2) {
        even += pair[0] * pow;
        if let Some(c) = pair.get(1) {
            odd += c * pow;
        }
        pow *= mu2;
    }
    // 1/Γ(1+μ) = even + μ·odd
    let rg_plus = even + mu * odd;
    let rg_minus = even - mu * odd;
    (rg_plus, rg_minus, -odd, even)
}

/// Temme's series for `e^x K_μ(x)` and `e^x K_{μ+1}(x)`, `|μ| <= 1/2`, `0 < x <= 2`.
fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    let half_x = 0.5 * x;
    let ln_half = half_x.ln();
    let pimu = PI * mu;
    let fact = if pimu.abs() < f64::EPSILON {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let sigma = -mu * ln_half;
    let fact2 = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let (rg_plus, rg_minus, g1, g2) = temme_gammas(mu);
    let mut ff = fact * (g1 * sigma.cosh() - g2 * fact2 * ln_half);
    let e = sigma.exp();
    let mut p = 0.5 * e / rg_plus;
    let mut q = 0.5 / (e * rg_minus);
    let mut c = 1.0;
    let d = half_x * half_x;
    let mut sum = ff;
    let mut sum1 = p;
    for i in 1..MAX_SERIES_TERMS {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c *= d / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    let scale = x.exp();
    (sum * scale, sum1 * 2.0 / x * scale)
}

/// Steed's continued fraction (CF2) for `e^x K_μ(x)` and `e^x K_{μ+1}(x)`, `x >= 2`.
fn steed_cf2(mu: f64, x: f64) -> (f64, f64) {
    let a1 = 0.25 - mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_SERIES_TERMS {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - a1 * h) / x;
    (k_mu, k_mu1)
}

/// Exponentially scaled `e^z K_ν(z)`.
pub fn bessel_k_scaled(nu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::domain("bessel_k", format!("argument z = {z} must be > 0")));
    }
    if !nu.is_finite() {
        return Err(Error::domain("bessel_k", format!("order {nu} is not finite")));
    }
    let nu = nu.abs();
    let steps = (nu + 0.5).floor();
    let mu = nu - steps;
    let (mut k_lo, mut k_hi) = if z <= 2.0 {
        temme_series(mu, z)
    } else {
        steed_cf2(mu, z)
    };
    // forward recurrence K_{ν+1} = (2ν/z) K_ν + K_{ν-1}
    for i in 0..steps as usize {
        let next = 2.0 * (mu + i as f64 + 1.0) / z * k_hi + k_lo;
        k_lo = k_hi;
        k_hi = next;
    }
    Ok(k_lo)
}

/// Modified Bessel function of the second kind `K_ν(z)`, `z > 0`.
///
/// Temme's series for `z <= 2`, Steed's continued fraction above, then
/// upward recurrence from the order `ν - round(ν)` in `[-1/2, 1/2)`.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, z)? * (-z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from 40-digit mpmath evaluation.
    const TABLE: [(f64, f64, f64); 15] = [
        (0.5, 1.0, 0.461_068_504_447_894_558_44),
        (1.0, 1.0, 0.601_907_230_197_234_574_74),
        (0.3, 0.01, 6.890_102_638_292_769_543_2),
        (0.3, 2.0, 0.116_036_974_348_119_258_36),
        (0.7, 2.0, 0.126_013_271_306_610_636_98),
        (1.2, 0.5, 2.108_657_923_233_818_509_9),
        (1.2, 12.0, 2.331_454_731_996_021_151e-6),
        (2.5, 3.0, 0.084_060_631_974_117_382_653),
        (0.0, 1.0, 0.421_024_438_240_708_333_34),
        (1.8, 30.0, 2.248_808_690_239_877_671_8e-14),
        (3.3, 0.1, 26_338.351_717_564_912_055),
        (0.25, 1e-4, 21.351_915_864_398_119_036),
        (1.0, 1e-4, 9_999.999_508_686_404_478),
        (0.6, 50.0, 3.422_345_718_754_274_098_7e-23),
        (1.45, 7.5, 2.842_350_643_131_617_895_8e-4),
    ];

    #[test]
    fn matches_high_precision_table() {
        for &(nu, z, want) in &TABLE {
            let got = bessel_k(nu, z).unwrap();
            assert!(rel(got, want) < 1e-13, "K_{nu}({z}) = {got}, want {want}");
        }
    }

    #[test]
    fn half_integer_closed_forms() {
        for &z in &[1e-3, 0.1, 0.7, 1.0, 1.99, 2.0, 2.01, 5.0, 17.0, 60.0] {
            let k12 = (PI / (2.0 * z)).sqrt() * (-z).exp();
            assert!(rel(bessel_k(0.5, z).unwrap(), k12) < 1e-13);
            let k32 = k12 * (1.0 + 1.0 / z);
            assert!(rel(bessel_k(1.5, z).unwrap(), k32) < 1e-13);
            let k52 = k12 * (1.0 + 3.0 / z + 3.0 / (z * z));
            assert!(rel(bessel_k(2.5, z).unwrap(), k52) < 1e-13);
        }
        let at_one = (PI / 2.0).sqrt() * (-1.0f64).exp();
        assert!((bessel_k(0.5, 1.0).unwrap() - 0.4610685044).abs() < 1e-10);
        assert!(rel(bessel_k(0.5, 1.0).unwrap(), at_one) < 1e-14);
    }

    #[test]
    fn large_argument_asymptotics() {
        // Hankel expansion with a few terms as an independent oracle.
        for &nu in &[0.3, 1.0, 1.7] {
            let z = 50.0;
            let mu = 4.0 * nu * nu;
            let mut term = 1.0;
            let mut series = 1.0;
            for k in 1..8 {
                let kk = k as f64;
                term *= (mu - (2.0 * kk - 1.0).powi(2)) / (kk * 8.0 * z);
                series += term;
            }
            let oracle = (PI / (2.0 * z)).sqrt() * (-z).exp() * series;
            assert!(rel(bessel_k(nu, z).unwrap(), oracle) < 1e-12);
            let ratio = bessel_k(nu, z).unwrap() * (2.0 * z / PI).sqrt() * z.exp();
            let first_correction = (mu - 1.0).abs() / (8.0 * z);
            assert!((ratio - 1.0).abs() < 1.1 * first_correction + 1e-12);
        }
    }

    #[test]
    fn small_argument_limit() {
        let z = 1e-4;
        let lead = gamma(1.0) / 2.0 * (z / 2.0f64).powf(-1.0);
        assert!(rel(bessel_k(1.0, z).unwrap(), lead) < 1e-3);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -1.0).is_err());
        assert!(bessel_k(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn underflow_is_zero_not_nan() {
        assert_eq!(bessel_k(1.3, 1e4).unwrap(), 0.0);
        assert!(bessel_k_scaled(1.3, 1e4).unwrap() > 0.0);
    }

    #[test]
    fn temme_gammas_match_statrs() {
        for &mu in &[-0.5, -0.21, 0.0, 1e-9, 0.33, 0.5] {
            let (rp, rm, g1, g2) = temme_gammas(mu);
            assert!((rp - 1.0 / gamma(1.0 + mu)).abs() < 1e-14);
            assert!((rm - 1.0 / gamma(1.0 - mu)).abs() < 1e-14);
            assert!((g2 - 0.5 * (rm + rp)).abs() < 1e-14);
            if mu.abs() > 0.1 {
                assert!((g1 - (rm - rp) / (2.0 * mu)).abs() < 1e-13);
            }
        }
    }
}
