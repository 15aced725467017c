//! Outward-rounded interval arithmetic and an interval Newton certifier.
//!
//! Every operation satisfies the containment contract: the true real result
//! over any points of the inputs lies inside the output interval. Outward
//! rounding is done by stepping endpoints to the next representable value
//! after each elementary operation rather than by switching hardware
//! rounding modes; this costs a couple of ulps of slack per operation,
//! which the certification tolerances absorb.
//!
//! The complementary error function is enclosed by widening a faithful
//! point evaluation by a configurable number of ulps (default
//! [`DEFAULT_ERFC_ULPS`]).

use crate::erf::erfc;
use crate::error::{Error, Result};

/// Default ulp widening applied around point erfc evaluations.
pub const DEFAULT_ERFC_ULPS: u32 = 4;

/// Default tolerance and box budget for the Newton search backing
/// [`maximize_objective`].
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 1_000_000;

/// A closed interval with finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

fn step_down(x: f64, k: u32) -> f64 {
    let mut y = x;
    for _ in 0..k {
        y = y.next_down();
    }
    y
}

fn step_up(x: f64, k: u32) -> f64 {
    let mut y = x;
    for _ in 0..k {
        y = y.next_up();
    }
    y
}

impl Interval {
    /// A new interval. Panics on non-finite or inverted endpoints; those
    /// only arise from using the arithmetic outside its stated domain.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(
            lo.is_finite() && hi.is_finite() && lo <= hi,
            "invalid interval [{lo}, {hi}]"
        );
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(self) -> f64 {
        let m = 0.5 * (self.lo + self.hi);
        m.clamp(self.lo, self.hi)
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn contains_interval(self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Strict containment in the interior, the interval Newton uniqueness
    /// condition.
    pub fn inside_interior_of(self, other: Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Checked division; the divisor must not contain zero. Zero-straddling
    /// divisors are only meaningful inside the Newton contractor, which
    /// uses its own extended division.
    pub fn div(self, rhs: Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::DivisionByZeroInterval {
                lo: rhs.lo,
                hi: rhs.hi,
            });
        }
        let candidates = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let lo = candidates.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval::new(step_down(lo, 1), step_up(hi, 1)))
    }

    /// Integer power. Uses repeated outward multiplication, tightened for
    /// even powers of zero-straddling intervals.
    pub fn powi(self, n: u32) -> Interval {
        if n == 0 {
            return Interval::point(1.0);
        }
        let base = if n % 2 == 0 && self.lo < 0.0 && self.hi > 0.0 {
            Interval::new(0.0, self.lo.abs().max(self.hi))
        } else {
            self
        };
        let mut acc = base;
        for _ in 1..n {
            acc = acc * base;
        }
        acc
    }

    /// Monotone enclosure of exp. The platform exp is faithful to about an
    /// ulp, so the endpoints step outward by two.
    pub fn exp(self) -> Interval {
        let lo = step_down(self.lo.exp(), 2).max(0.0);
        let hi = step_up(self.hi.exp(), 2);
        Interval::new(lo, hi)
    }

    /// Monotone enclosure of sqrt. IEEE sqrt is correctly rounded, so one
    /// ulp outward suffices.
    pub fn sqrt(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::NegativeSqrt(self.lo));
        }
        let lo = step_down(self.lo.sqrt(), 1).max(0.0);
        let hi = step_up(self.hi.sqrt(), 1);
        Ok(Interval::new(lo, hi))
    }

    /// Enclosure of erfc: a faithful point evaluation at each endpoint
    /// widened outward by `ulps`, clipped to the codomain (0, 2).
    pub fn erfc_enclosure(self, ulps: u32) -> Interval {
        let lo = step_down(erfc(self.hi), ulps).max(0.0);
        let hi = step_up(erfc(self.lo), ulps).min(2.0);
        Interval::new(lo, hi)
    }
}

impl serde::Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        (self.lo, self.hi).serialize(serializer)
    }
}

impl std::ops::Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(step_down(self.lo + rhs.lo, 1), step_up(self.hi + rhs.hi, 1))
    }
}

impl std::ops::Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::new(step_down(self.lo - rhs.hi, 1), step_up(self.hi - rhs.lo, 1))
    }
}

impl std::ops::Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let candidates = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = candidates.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(step_down(lo, 1), step_up(hi, 1))
    }
}

impl std::ops::Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

fn interval_sqrt2() -> Interval {
    let s = std::f64::consts::SQRT_2;
    Interval::new(s.next_down(), s.next_up())
}

fn interval_sqrt_pi_over_2() -> Interval {
    let pi = std::f64::consts::PI;
    (Interval::new(pi.next_down(), pi.next_up()) * Interval::point(0.5))
        .sqrt()
        .expect("pi/2 is positive")
}

/// Enclosure of the Mills ratio via sqrt(pi/2) e^{x^2/2} erfc(x/sqrt 2).
/// Safe for the certification domain (x at most 3); the direct product
/// would overflow only far beyond it.
pub fn interval_mills(x: Interval, erfc_ulps: u32) -> Result<Interval> {
    if x.lo() < 0.0 {
        return Err(Error::NegativeDomain(x.lo()));
    }
    let half_square = x.powi(2) * Interval::point(0.5);
    let scaled = half_square.exp();
    let arg = x.div(interval_sqrt2())?;
    Ok(interval_sqrt_pi_over_2() * scaled * arg.erfc_enclosure(erfc_ulps))
}

/// Enclosure of f(x) = x - x^2 M(x).
pub fn interval_objective(x: Interval, erfc_ulps: u32) -> Result<Interval> {
    let m = interval_mills(x, erfc_ulps)?;
    Ok(x - x.powi(2) * m)
}

/// Enclosure of f'(x) = 1 + x^2 - x (2 + x^2) M(x).
pub fn interval_objective_prime(x: Interval, erfc_ulps: u32) -> Result<Interval> {
    let m = interval_mills(x, erfc_ulps)?;
    let x2 = x.powi(2);
    Ok(Interval::point(1.0) + x2 - x * (Interval::point(2.0) + x2) * m)
}

/// Enclosure of f''(x) = x^3 + 4x - M(x) (2 + 5x^2 + x^4).
pub fn interval_objective_second(x: Interval, erfc_ulps: u32) -> Result<Interval> {
    let m = interval_mills(x, erfc_ulps)?;
    let poly = Interval::point(2.0) + Interval::point(5.0) * x.powi(2) + x.powi(4);
    Ok(x.powi(3) + Interval::point(4.0) * x - m * poly)
}

/// Sign of an interval value, used to report the derivative over a root
/// enclosure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Negative,
    Positive,
    Indeterminate,
}

fn classify(v: Interval) -> SignClass {
    if v.hi() < 0.0 {
        SignClass::Negative
    } else if v.lo() > 0.0 {
        SignClass::Positive
    } else {
        SignClass::Indeterminate
    }
}

/// A certified enclosure of a zero.
///
/// `unique` is set only when a Newton step mapped some ancestor box
/// strictly into its own interior, which proves existence and uniqueness
/// of the zero in that box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootEnclosure {
    pub enclosure: Interval,
    pub unique: bool,
    pub second_derivative_sign: SignClass,
}

/// Bisect-and-contract interval Newton search over `domain`.
///
/// The returned enclosures jointly contain every zero of `func` in
/// `domain`. Boxes still unresolved when the budget runs out are returned
/// with `unique == false`.
pub fn interval_newton<F, D>(
    func: F,
    deriv: D,
    domain: Interval,
    tol: f64,
    max_iter: usize,
) -> Vec<RootEnclosure>
where
    F: Fn(Interval) -> Interval,
    D: Fn(Interval) -> Interval,
{
    assert!(tol > 0.0);
    let mut queue: Vec<(Interval, bool)> = vec![(domain, false)];
    let mut found: Vec<(Interval, bool)> = Vec::new();
    let mut steps = 0usize;

    'queue: while !queue.is_empty() {
        // Widest box first.
        let next = queue
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.0.width().partial_cmp(&b.0.width()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let (mut x, mut unique) = queue.swap_remove(next);

        loop {
            steps += 1;
            if steps > max_iter {
                found.push((x, false));
                found.extend(queue.drain(..).map(|(b, _)| (b, false)));
                break 'queue;
            }
            if !func(x).contains_zero() {
                break;
            }
            if x.width() <= tol {
                found.push((x, unique));
                break;
            }
            let mid = x.midpoint();
            if mid <= x.lo() || mid >= x.hi() {
                // Box is a couple of ulps wide; nothing left to split.
                found.push((x, unique));
                break;
            }
            let f_mid = func(Interval::point(mid));
            let slope = deriv(x);

            if slope.contains_zero() {
                if f_mid.contains_zero() {
                    // No usable Newton information; plain bisection.
                    queue.push((Interval::new(x.lo(), mid), false));
                    queue.push((Interval::new(mid, x.hi()), false));
                    break;
                }
                let branches = extended_newton_branches(mid, f_mid, slope, x);
                match branches.len() {
                    0 => break, // no zero in x
                    1 if branches[0].width() > 0.9 * x.width() => {
                        queue.push((Interval::new(x.lo(), mid), false));
                        queue.push((Interval::new(mid, x.hi()), false));
                        break;
                    }
                    _ => {
                        queue.extend(branches.into_iter().map(|b| (b, false)));
                        break;
                    }
                }
            }

            let newton = Interval::point(mid) - f_mid.div(slope).expect("slope excludes zero");
            match x.intersect(newton) {
                None => break, // no zero in x
                Some(contracted) => {
                    if newton.inside_interior_of(x) {
                        unique = true;
                    }
                    if unique {
                        if contracted.width() <= tol || contracted.width() >= x.width() {
                            // Done, or at the noise floor of the interval
                            // evaluation.
                            found.push((contracted, true));
                            break;
                        }
                        x = contracted;
                    } else if contracted.width() > 0.9 * x.width() {
                        queue.push((Interval::new(contracted.lo(), mid), false));
                        queue.push((Interval::new(mid, contracted.hi()), false));
                        break;
                    } else {
                        x = contracted;
                    }
                }
            }
        }
    }

    finalize_enclosures(found, &func, &deriv, domain, tol)
}

/// Extended-division Newton step for a zero-straddling slope: the image
/// splits into up to two half-lines, returned already intersected with `x`.
fn extended_newton_branches(
    mid: f64,
    f_mid: Interval,
    slope: Interval,
    x: Interval,
) -> Vec<Interval> {
    debug_assert!(!f_mid.contains_zero() && slope.contains_zero());
    let mut out = Vec::with_capacity(2);
    // For each sign of the slope the quotient q = f_mid / slope_part is a
    // half-line; N = mid - q is the opposite half-line.
    if slope.hi() > 0.0 {
        // q in [q_lo, +inf)
        let q_lo = if f_mid.lo() > 0.0 {
            step_down(f_mid.lo() / slope.hi(), 1)
        } else {
            // f_mid < 0: q in (-inf, q_hi]; N = [mid - q_hi, +inf)
            let q_hi = step_up(f_mid.hi() / slope.hi(), 1);
            let n_lo = step_down(mid - q_hi, 1);
            if n_lo <= x.hi() {
                out.push(Interval::new(n_lo.max(x.lo()), x.hi()));
            }
            f64::NAN
        };
        if !q_lo.is_nan() {
            let n_hi = step_up(mid - q_lo, 1);
            if n_hi >= x.lo() {
                out.push(Interval::new(x.lo(), n_hi.min(x.hi())));
            }
        }
    }
    if slope.lo() < 0.0 {
        if f_mid.lo() > 0.0 {
            // q in (-inf, q_hi] with q_hi = f_lo / slope_lo < 0; N = [mid - q_hi, +inf)
            let q_hi = step_up(f_mid.lo() / slope.lo(), 1);
            let n_lo = step_down(mid - q_hi, 1);
            if n_lo <= x.hi() {
                out.push(Interval::new(n_lo.max(x.lo()), x.hi()));
            }
        } else {
            // f_mid < 0: q in [q_lo, +inf); N = (-inf, mid - q_lo]
            let q_lo = step_down(f_mid.hi() / slope.lo(), 1);
            let n_hi = step_up(mid - q_lo, 1);
            if n_hi >= x.lo() {
                out.push(Interval::new(x.lo(), n_hi.min(x.hi())));
            }
        }
    }
    out
}

/// Merges touching enclosures, re-certifies uniqueness where possible, and
/// sorts the result for deterministic output.
fn finalize_enclosures<F, D>(
    mut found: Vec<(Interval, bool)>,
    func: &F,
    deriv: &D,
    domain: Interval,
    tol: f64,
) -> Vec<RootEnclosure>
where
    F: Fn(Interval) -> Interval,
    D: Fn(Interval) -> Interval,
{
    found.sort_by(|a, b| a.0.lo().partial_cmp(&b.0.lo()).unwrap());
    let mut merged: Vec<(Interval, bool)> = Vec::new();
    for (iv, unique) in found {
        match merged.last_mut() {
            Some((last, last_unique)) if iv.lo() <= last.hi() => {
                *last = last.hull(iv);
                *last_unique = false; // merged boxes must be re-certified
            }
            _ => merged.push((iv, unique)),
        }
    }

    merged
        .into_iter()
        .map(|(mut enclosure, mut unique)| {
            if !unique {
                // Epsilon-inflation: prove uniqueness on a slightly larger
                // box, then shrink back with verified Newton steps.
                let pad = (enclosure.width() + tol).max(tol);
                let inflated = Interval::new(
                    (enclosure.lo() - pad).max(domain.lo()),
                    (enclosure.hi() + pad).min(domain.hi()),
                );
                let slope = deriv(inflated);
                if !slope.contains_zero() {
                    let mid = inflated.midpoint();
                    let newton = Interval::point(mid)
                        - func(Interval::point(mid))
                            .div(slope)
                            .expect("slope excludes zero");
                    if newton.inside_interior_of(inflated) {
                        unique = true;
                        let mut tightened = newton
                            .intersect(inflated)
                            .expect("contraction intersects its box");
                        for _ in 0..64 {
                            if tightened.width() <= tol {
                                break;
                            }
                            let mid = tightened.midpoint();
                            let slope = deriv(tightened);
                            if slope.contains_zero() {
                                break;
                            }
                            let step = Interval::point(mid)
                                - func(Interval::point(mid)).div(slope).unwrap();
                            match tightened.intersect(step) {
                                Some(next) if next.width() < tightened.width() => {
                                    tightened = next
                                }
                                _ => break,
                            }
                        }
                        enclosure = tightened;
                    }
                }
            }
            RootEnclosure {
                enclosure,
                unique,
                second_derivative_sign: classify(deriv(enclosure)),
            }
        })
        .collect()
}

/// The certified maximum of f(x) = x - x^2 M(x) over x >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximizeReport {
    /// Certified enclosure of the unique maximizer.
    pub root: RootEnclosure,
    /// Enclosure of the maximum value.
    pub maximum: Interval,
    /// Enclosure of f'' over the maximizer, certified negative.
    pub second_derivative: Interval,
}

/// Runs the interval Newton search for the critical point of the objective
/// on [0, 3], encloses the maximum value and the second derivative there,
/// and certifies that the critical point is the global maximum on x >= 0.
///
/// Global argument: the search proves f' has exactly one zero in [0, 3],
/// both f(0) and f(3) sit strictly below the maximum enclosure, and for
/// x >= 3 the classical bound f(x) < x/(1+x^2), decreasing past x = 1,
/// keeps f below the value at 3 and hence below the maximum.
pub fn maximize_objective(erfc_ulps: u32) -> Result<MaximizeReport> {
    let domain = Interval::new(0.0, 3.0);
    let func = |x: Interval| {
        interval_objective_prime(x, erfc_ulps).expect("search domain is nonnegative")
    };
    let deriv = |x: Interval| {
        interval_objective_second(x, erfc_ulps).expect("search domain is nonnegative")
    };
    let roots = interval_newton(&func, &deriv, domain, NEWTON_TOL, NEWTON_MAX_ITER);
    if roots.len() != 1 {
        return Err(Error::CertificationFailed(format!(
            "expected one critical point in [0, 3], found {}",
            roots.len()
        )));
    }
    let root = roots[0];
    if !root.unique {
        return Err(Error::CertificationFailed(
            "critical point could not be certified unique".into(),
        ));
    }
    let maximum = interval_objective(root.enclosure, erfc_ulps)?;
    let second_derivative = interval_objective_second(root.enclosure, erfc_ulps)?;
    if second_derivative.hi() >= 0.0 {
        return Err(Error::CertificationFailed(format!(
            "second derivative not certified negative: [{}, {}]",
            second_derivative.lo(),
            second_derivative.hi()
        )));
    }
    let f_at_0 = interval_objective(Interval::point(0.0), erfc_ulps)?;
    let f_at_3 = interval_objective(Interval::point(3.0), erfc_ulps)?;
    // x/(1+x^2) at x = 3 bounds f everywhere past 3.
    let tail_bound = Interval::point(3.0)
        .div(Interval::point(1.0) + Interval::point(3.0).powi(2))
        .expect("denominator is positive");
    for (what, value) in [
        ("f(0)", f_at_0),
        ("f(3)", f_at_3),
        ("x/(1+x^2) at 3", tail_bound),
    ] {
        if value.hi() >= maximum.lo() {
            return Err(Error::CertificationFailed(format!(
                "{what} = [{}, {}] does not sit below the maximum [{}, {}]",
                value.hi(),
                value.lo(),
                maximum.lo(),
                maximum.hi()
            )));
        }
    }
    Ok(MaximizeReport {
        root,
        maximum,
        second_derivative,
    })
}
