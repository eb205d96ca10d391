//! Scalar numerics shared by the estimators and oracles: the error function,
//! the standard normal distribution, and compensated summation.
//!
//! The normal CDF is routed through `erfc` so that tail probabilities such as
//! `q_{λ,j} = Φ(δ−λ) + Φ(−δ−λ)` stay accurate far beyond |x| ≈ 6, where a
//! naive `1 − Φ(|x|)` would lose every significant digit.

/// erf/erfc rational approximations (W. J. Cody, "Rational Chebyshev
/// approximation for the error function", Math. Comp. 23, 1969; the SPECFUN
/// coefficient set). Relative error below 1e-16 in each branch.
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERFC_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERFC_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERFC_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERFC_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
/// 1/√π.
const INV_SQRT_PI: f64 = 5.641_895_835_477_562_9e-1;
/// erfc underflows to 0 beyond this argument.
const ERFC_XBIG: f64 = 26.543;

/// Complementary error function for arguments in (0.46875, ∞).
///
/// Shared tail of the Cody scheme: a rational factor times
/// `exp(-x²)`, with the exponential split as `exp(-y²)·exp(-(x-y)(x+y))`
/// (y = x truncated to 1/16ths) to avoid rounding `x*x` itself.
fn erfc_tail(x: f64) -> f64 {
    debug_assert!(x > 0.46875);
    if x >= ERFC_XBIG {
        return 0.0;
    }
    let r = if x <= 4.0 {
        let mut num = ERFC_C[8] * x;
        let mut den = x;
        for i in 0..7 {
            num = (num + ERFC_C[i]) * x;
            den = (den + ERFC_D[i]) * x;
        }
        (num + ERFC_C[7]) / (den + ERFC_D[7])
    } else {
        let z = 1.0 / (x * x);
        let mut num = ERFC_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERFC_P[i]) * z;
            den = (den + ERFC_Q[i]) * z;
        }
        (INV_SQRT_PI - z * (num + ERFC_P[4]) / (den + ERFC_Q[4])) / x
    };
    let y = (x * 16.0).trunc() / 16.0;
    let del = (x - y) * (x + y);
    (-y * y).exp() * (-del).exp() * r
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax <= 0.46875 {
        let z = ax * ax;
        let mut num = ERF_A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + ERF_A[i]) * z;
            den = (den + ERF_B[i]) * z;
        }
        return x * (num + ERF_A[3]) / (den + ERF_B[3]);
    }
    let tail = 1.0 - erfc_tail(ax);
    if x < 0.0 {
        -tail
    } else {
        tail
    }
}

/// Complementary error function, `1 − erf(x)`, accurate in the right tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() <= 0.46875 {
        return 1.0 - erf(x);
    }
    if x < 0.0 {
        2.0 - erfc_tail(-x)
    } else {
        erfc_tail(x)
    }
}

/// Standard normal density φ(x).
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 3.989_422_804_014_327e-1;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF Φ(x) = erfc(−x/√2)/2.
pub fn normal_cdf(x: f64) -> f64 {
    const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile Φ⁻¹(p) for p ∈ (0, 1).
///
/// Acklam's rational approximation polished with one Halley step against
/// [`normal_cdf`], giving errors near machine precision across the range.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(
        p.is_finite() && p > 0.0 && p < 1.0,
        "normal quantile requires p in (0,1), got {p}"
    );

    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
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
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Halley refinement: e = Φ(x) − p, u = e/φ(x),
    // x ← x − u/(1 + x·u/2).
    let e = normal_cdf(x) - p;
    let u = e / normal_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Neumaier-compensated running sum.
///
/// Used for every estimator denominator/numerator and for Monte Carlo
/// aggregation so that results reproduce to 12+ significant digits no matter
/// how the terms were grouped by the caller.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.compensation += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of terms.
pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent Φ reference: Taylor series for erf near the origin and a
    /// Lentz-evaluated continued fraction for erfc in the tail. Shares no
    /// coefficients with the production rational approximations.
    fn normal_cdf_reference(x: f64) -> f64 {
        let t = x.abs() * std::f64::consts::FRAC_1_SQRT_2;
        let tail = if t < 2.0 {
            // erf(t) = 2/√π · Σ (−1)^n t^{2n+1} / (n! (2n+1))
            let mut term = t;
            let mut series = t;
            for n in 1..200 {
                term *= -t * t / n as f64;
                let contrib = term / (2 * n + 1) as f64;
                series += contrib;
                if contrib.abs() < 1e-20 * series.abs() {
                    break;
                }
            }
            0.5 * (1.0 - 2.0 * INV_SQRT_PI * series)
        } else {
            // erfc(t) = e^{−t²}/√π · 1/(t + (1/2)/(t + 1/(t + (3/2)/(t + …)))),
            // partial numerators a_n = n/2, evaluated by backward recurrence.
            let mut f = t;
            for n in (1..=200).rev() {
                f = t + (n as f64 / 2.0) / f;
            }
            0.5 * INV_SQRT_PI * (-t * t).exp() / f
        };
        if x >= 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }

    #[test]
    fn cdf_matches_series_reference_within_1e12() {
        // 1000-point grid over [−8, 8], absolute tolerance 1e−12.
        for i in 0..1000 {
            let x = -8.0 + 16.0 * (i as f64 + 0.5) / 1000.0;
            let got = normal_cdf(x);
            let want = normal_cdf_reference(x);
            assert!(
                (got - want).abs() <= 1e-12,
                "Φ({x}) = {got}, reference {want}"
            );
        }
    }

    #[test]
    fn cdf_known_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_779_7).abs() < 1e-12);
        assert!((normal_cdf(-1.96) - 0.024_997_895_148_220_3).abs() < 1e-12);
        // Deep tail: Φ(−10) ≈ 7.62e−24 with full relative accuracy.
        let tail = normal_cdf(-10.0);
        assert!((tail / 7.619_853_024_160_526e-24 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn erf_symmetry_and_limits() {
        for &x in &[0.1, 0.7, 1.3, 2.5, 5.0] {
            assert!((erf(-x) + erf(x)).abs() < 1e-15);
            assert!((erfc(-x) - (2.0 - erfc(x))).abs() < 1e-14);
        }
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(6.0) - 1.0).abs() < 1e-15);
        assert_eq!(erfc(30.0), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..999 {
            let p = i as f64 / 1000.0;
            let x = normal_quantile(p);
            assert!(
                (normal_cdf(x) - p).abs() < 1e-13,
                "Φ(Φ⁻¹({p})) off by {}",
                (normal_cdf(x) - p).abs()
            );
        }
        // Tail quantiles.
        let x = normal_quantile(1e-10);
        assert!((normal_cdf(x) / 1e-10 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
        assert_eq!(compensated_sum([0.1; 10]), {
            let mut acc = CompensatedSum::new();
            for _ in 0..10 {
                acc.add(0.1);
            }
            acc.value()
        });
    }
}
