//! The Mills ratio of the standard normal distribution and the objective
//! x - x^2 M(x) whose maximum drives both Lipschitz bounds.
//!
//! M(x) = (1 - Phi(x)) / phi(x) is evaluated in scaled form throughout:
//! below the crossover it is sqrt(pi/2) e^{x^2/2} erfc(x/sqrt 2), which is
//! safe because erfc keeps full relative accuracy there; from the
//! crossover up it is the Laplace continued fraction
//! 1/(x + 1/(x + 2/(x + 3/(x + ...)))), which converges fast precisely
//! where the direct product would overflow.

use crate::erf::erfc;
use crate::error::{Error, Result};

/// sqrt(pi/2).
const SQRT_PI_OVER_2: f64 = 1.2533141373155003;

/// sqrt(2).
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Arguments at or above this go through the continued fraction.
const CF_CROSSOVER: f64 = 6.0;

/// Relative change at which the continued fraction stops.
const CF_STOP: f64 = 1e-16;

/// Step used by the finite-difference derivative checks.
const FD_STEP: f64 = 1e-6;

/// Mills ratio M(x) for x >= 0. Strictly decreasing, sandwiched between
/// x/(x^2+1) and 1/x, and free of overflow for every representable x.
pub fn mills_ratio(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::NegativeArgument(x));
    }
    if x < CF_CROSSOVER {
        Ok(SQRT_PI_OVER_2 * f64::exp(0.5 * x * x) * erfc(x / SQRT_2))
    } else {
        // The classical envelope x/(x^2+1) < M < 1/x is strict with a
        // relative margin of 2/x^4 on the lower side, below one ulp past
        // x ~ 1e4; enforcing it here can only move the result toward the
        // true value.
        let cf = mills_continued_fraction(x);
        let lower = (x / (x * x + 1.0)).next_up();
        let upper = (1.0 / x).next_down();
        Ok(if lower <= upper {
            cf.clamp(lower, upper)
        } else {
            upper
        })
    }
}

/// Modified Lentz evaluation of 1/(x + 1/(x + 2/(x + 3/(x + ...)))).
fn mills_continued_fraction(x: f64) -> f64 {
    const FLOOR: f64 = 1e-300;
    let mut value = FLOOR;
    let mut c = value;
    let mut d = 0.0;
    for k in 1..100_000u64 {
        let a = if k == 1 { 1.0 } else { (k - 1) as f64 };
        d = x + a * d;
        if d == 0.0 {
            d = FLOOR;
        }
        c = x + a / c;
        if c == 0.0 {
            c = FLOOR;
        }
        d = 1.0 / d;
        let delta = c * d;
        value *= delta;
        if (delta - 1.0).abs() < CF_STOP {
            break;
        }
    }
    value
}

/// The objective f(x) = x - x^2 M(x). Zero at the origin, positive for
/// x > 0, below x/(1+x^2).
pub fn objective(x: f64) -> Result<f64> {
    let m = mills_ratio(x)?;
    Ok(x - x * x * m)
}

/// f'(x) = 1 + x^2 - x (2 + x^2) M(x).
pub fn objective_prime(x: f64) -> Result<f64> {
    let m = mills_ratio(x)?;
    Ok(1.0 + x * x - x * (2.0 + x * x) * m)
}

/// f''(x) = x^3 + 4x - M(x) (2 + 5x^2 + x^4).
pub fn objective_second(x: f64) -> Result<f64> {
    let m = mills_ratio(x)?;
    Ok(x * x * x + 4.0 * x - m * (2.0 + 5.0 * x * x + x * x * x * x))
}

/// One point evaluation of the Mills ratio and the objective with its
/// first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MillsEval {
    pub x: f64,
    pub mills: f64,
    pub value: f64,
    pub first_derivative: f64,
    pub second_derivative: f64,
}

impl MillsEval {
    pub fn at(x: f64) -> Result<Self> {
        let m = mills_ratio(x)?;
        Ok(Self {
            x,
            mills: m,
            value: x - x * x * m,
            first_derivative: 1.0 + x * x - x * (2.0 + x * x) * m,
            second_derivative: x * x * x + 4.0 * x - m * (2.0 + 5.0 * x * x + x * x * x * x),
        })
    }
}

/// Residual of the derivative identity M'(x) = x M(x) - 1 against a
/// central finite difference. At most ~1e-7 for x in [0.01, 8].
pub fn derivative_identity_residual(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NegativeArgument(x));
    }
    let fd = (mills_ratio(x + FD_STEP)? - mills_ratio(x - FD_STEP)?) / (2.0 * FD_STEP);
    Ok((fd - (x * mills_ratio(x)? - 1.0)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed once with 60-digit arbitrary-precision
    // arithmetic via M(x) = sqrt(pi/2) * erfcx(x/sqrt 2).
    const REFERENCE: &[(f64, f64)] = &[
        (0.0, 1.253314137315500251207883),
        (0.0625, 1.193182964731915311846094),
        (0.125, 1.137490921203604514832235),
        (0.25, 1.037824575853726812300365),
        (0.5, 0.8763644564536923467278531),
        (0.75, 0.7525711790634080514554734),
        (1.0, 0.6556795424187984715438712),
        (1.1615278892744785, 0.6038740178009062336034221),
        (1.5, 0.5158156382179633550265125),
        (2.0, 0.4213692292880544732249343),
        (2.5, 0.3542651113297936667839814),
        (3.0, 0.3045902987101032957336125),
        (4.0, 0.2366523829135606706239859),
        (5.0, 0.1928081047153157648774657),
        (5.9, 0.1649915453003238097285996),
        (6.0, 0.1623776608968674618156821),
        (6.1, 0.1598435289978263278355803),
        (7.0, 0.1401041834530502415995345),
        (8.0, 0.1231319632579322962821807),
        (10.0, 0.09902859647173192139533719),
        (20.0, 0.04987592598183678365824056),
        (50.0, 0.01999200958085356731115669),
        (100.0, 0.009999000299850104905603815),
        (1000.0, 0.000999999000002999985000105),
        (10000.0, 0.0000999999990000000299999985),
    ];

    #[test]
    fn matches_reference_table() {
        for &(x, want) in REFERENCE {
            let got = mills_ratio(x).unwrap();
            let tol = if x <= 6.0 { 1e-14 } else { 1e-12 };
            assert!(
                (got - want).abs() <= tol * want,
                "M({x}) = {got:e}, want {want:e}, rel err {:e}",
                ((got - want) / want).abs()
            );
        }
    }

    #[test]
    fn value_at_zero() {
        let m0 = mills_ratio(0.0).unwrap();
        assert!((m0 - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative() {
        assert!(matches!(mills_ratio(-0.5), Err(Error::NegativeArgument(_))));
        assert!(matches!(objective(-1.0), Err(Error::NegativeArgument(_))));
    }

    #[test]
    fn sandwich_between_classical_bounds() {
        // 10^4 log-spaced points over (0, 10^4].
        for i in 0..10_000 {
            let x = 1e-3 * (7.0 * std::f64::consts::LN_10 * i as f64 / 9_999.0).exp();
            let m = mills_ratio(x).unwrap();
            assert!(m > x / (x * x + 1.0), "lower bound fails at {x}: {m}");
            assert!(m < 1.0 / x, "upper bound fails at {x}: {m}");
        }
    }

    #[test]
    fn no_overflow_even_for_huge_arguments() {
        for x in [1e4, 1e8, 1e300] {
            let m = mills_ratio(x).unwrap();
            assert!(m.is_finite());
            assert!(m > 0.0);
        }
    }

    #[test]
    fn strictly_decreasing() {
        let mut prev = mills_ratio(0.0).unwrap();
        for i in 1..=2000 {
            let x = i as f64 * 0.01;
            let m = mills_ratio(x).unwrap();
            assert!(m < prev, "not decreasing at {x}");
            prev = m;
        }
    }

    #[test]
    fn scaled_limit_holds() {
        let m = mills_ratio(1000.0).unwrap();
        assert!(m * 1000.0 > 0.999999 && m * 1000.0 < 1.0);
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective(0.0).unwrap(), 0.0);
        let f3 = objective(3.0).unwrap();
        assert!(f3 > 0.0 && f3 < 0.3, "f(3) = {f3}");
        // f stays below x/(1+x^2).
        for x in [0.1, 0.5, 1.0, 2.0, 3.0, 5.0] {
            assert!(objective(x).unwrap() < x / (1.0 + x * x));
            assert!(objective(x).unwrap() > 0.0);
        }
    }

    #[test]
    fn objective_consistent_with_mills() {
        for &(x, _) in REFERENCE {
            let via_parts = x - x * x * mills_ratio(x).unwrap();
            let f = objective(x).unwrap();
            assert!((f - via_parts).abs() <= 1e-14 * f.abs().max(1.0));
        }
    }

    #[test]
    fn first_derivative_matches_finite_differences() {
        let h = 1e-6;
        for x in [0.5, 1.0, 2.0] {
            let fd = (objective(x + h).unwrap() - objective(x - h).unwrap()) / (2.0 * h);
            let fp = objective_prime(x).unwrap();
            assert!((fd - fp).abs() <= 1e-8, "x = {x}: fd {fd} vs {fp}");
        }
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let h = 1e-5;
        for x in [0.5, 1.0, 1.5, 2.0] {
            let fd = (objective_prime(x + h).unwrap() - objective_prime(x - h).unwrap())
                / (2.0 * h);
            let fpp = objective_second(x).unwrap();
            assert!((fd - fpp).abs() <= 1e-7, "x = {x}: fd {fd} vs {fpp}");
        }
    }

    #[test]
    fn derivative_sign_change_brackets_the_maximizer() {
        assert!(objective_prime(1.0).unwrap() > 0.0);
        assert!(objective_prime(1.5).unwrap() < 0.0);
    }

    #[test]
    fn derivative_identity_residuals() {
        for x in [0.01, 0.1, 1.0, 5.0, 8.0] {
            let r = derivative_identity_residual(x).unwrap();
            assert!(r <= 1e-7, "residual at {x}: {r:e}");
        }
        assert!(derivative_identity_residual(0.0).is_err());
    }

    #[test]
    fn eval_bundle_is_consistent() {
        let e = MillsEval::at(1.0).unwrap();
        assert_eq!(e.mills, mills_ratio(1.0).unwrap());
        assert_eq!(e.value, objective(1.0).unwrap());
        assert_eq!(e.first_derivative, objective_prime(1.0).unwrap());
        assert_eq!(e.second_derivative, objective_second(1.0).unwrap());
        assert!(e.mills > 1.0 / (1.0 + 1.0) && e.mills < 1.0);
    }
}
