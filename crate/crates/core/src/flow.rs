//! Majorization flow: the flattest element of a total variation ball and
//! the difference bound it yields for the expected component count.
//!
//! The flattest (majorization-minimal) element is obtained by two-sided
//! water-filling: cap the largest entries at a common level shedding
//! exactly eps of mass, raise the smallest entries at a common level
//! absorbing exactly eps. Both levels come from exact piecewise-linear
//! inversion over the sorted entries, so no iterative root-finding is
//! involved. When the levels would cross, the ball contains the uniform
//! distribution, which is the global minimum of the order.

use crate::components::expected_components;
use crate::dist::{tv_distance, ProbVector, TVRadius};
use crate::error::{Error, Result};

/// Gap below which the largest or smallest entry counts as tied.
pub const EXTREME_TIE_TOL: f64 = 1e-12;

/// A base distribution, a radius, and the flattest element of the ball.
#[derive(Debug, Clone)]
pub struct FlowPoint {
    base: ProbVector,
    radius: TVRadius,
    result: ProbVector,
}

impl FlowPoint {
    pub fn new(base: ProbVector, radius: TVRadius) -> Self {
        let result = minimal_element(&base, radius);
        Self {
            base,
            radius,
            result,
        }
    }

    pub fn base(&self) -> &ProbVector {
        &self.base
    }

    pub fn radius(&self) -> TVRadius {
        self.radius
    }

    pub fn result(&self) -> &ProbVector {
        &self.result
    }
}

/// The majorization-minimal element of the total variation ball around `r`.
pub fn minimal_element(r: &ProbVector, eps: TVRadius) -> ProbVector {
    let eps = eps.value();
    if eps == 0.0 {
        return r.clone();
    }
    let n = r.len();
    let level = 1.0 / n as f64;
    let above: f64 = r.values().iter().map(|&v| (v - level).max(0.0)).sum();
    if above <= eps {
        return ProbVector::uniform(n);
    }
    let descending = r.sorted_view().descending();
    let cap = cap_level(&descending, eps);
    let ascending: Vec<f64> = descending.iter().rev().copied().collect();
    let raise = raise_level(&ascending, eps);
    // Clamping is order-free, so no permutation back is needed.
    let clamped: Vec<f64> = r.values().iter().map(|&v| v.clamp(raise, cap)).collect();
    ProbVector::new(clamped).expect("water-filling preserves total mass")
}

/// Level c with sum over entries of (v - c)_+ equal to eps, for v sorted
/// descending. The mass-above function is piecewise linear in c with
/// breakpoints at the entries.
fn cap_level(descending: &[f64], eps: f64) -> f64 {
    let mut prefix = 0.0;
    for j in 1..=descending.len() {
        prefix += descending[j - 1];
        let c = (prefix - eps) / j as f64;
        if j == descending.len() || c >= descending[j] {
            return c;
        }
    }
    unreachable!("eps below mass above uniform level guarantees a cap")
}

/// Level a with sum over entries of (a - v)_+ equal to eps, for v sorted
/// ascending.
fn raise_level(ascending: &[f64], eps: f64) -> f64 {
    let mut prefix = 0.0;
    for j in 1..=ascending.len() {
        prefix += ascending[j - 1];
        let a = (prefix + eps) / j as f64;
        if j == ascending.len() || a <= ascending[j] {
            return a;
        }
    }
    unreachable!("eps below mass above uniform level guarantees a raise")
}

/// How much flattening the ball raises the expected component count:
/// E_C(minimal_element(q, eps)) - E_C(q). Nonnegative.
pub fn flow_difference(q: &ProbVector, eps: TVRadius) -> Result<f64> {
    let flattest = minimal_element(q, eps);
    Ok(expected_components(&flattest)? - expected_components(q)?)
}

/// The two-sided flow bound: max of the flow differences of `p` and `q` at
/// their mutual distance. Dominates |E_C(p) - E_C(q)|.
pub fn flow_bound(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    let eps = TVRadius::new(tv_distance(p, q)?).expect("tv distance lies in [0, 1]");
    Ok(flow_difference(q, eps)?.max(flow_difference(p, eps)?))
}

/// Numerical flow derivative, flow_difference(r, t) / t.
///
/// Requires strictly unique extreme entries; the caller keeps `t` below
/// half the smallest gap to the adjacent sorted value so the flow only
/// moves the two extreme entries. As t shrinks this converges to the full
/// directional derivative of E_C along the flow, which is
/// [`crate::components::flow_derivative`] plus the empty-subset term
/// (r_+ - r_-).
pub fn flow_derivative_numeric(r: &ProbVector, t: f64) -> Result<f64> {
    debug_assert!(t > 0.0);
    let sorted = r.sorted_view().descending();
    let n = sorted.len();
    if n < 2
        || sorted[0] - sorted[1] <= EXTREME_TIE_TOL
        || sorted[n - 2] - sorted[n - 1] <= EXTREME_TIE_TOL
    {
        return Err(Error::DegenerateExtremes);
    }
    let eps = TVRadius::new(t).expect("step is a valid radius");
    Ok(flow_difference(r, eps)? / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::flow_derivative;
    use crate::dist::{majorizes, random_prob_vector, sample_in_tv_ball};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn radius(e: f64) -> TVRadius {
        TVRadius::new(e).unwrap()
    }

    #[test]
    fn minimal_element_examples() {
        let u = ProbVector::uniform(5);
        assert_eq!(minimal_element(&u, radius(0.3)), u);

        let r = pv(&[0.6, 0.3, 0.1]);
        let m = minimal_element(&r, radius(0.1));
        for (a, b) in m.values().iter().zip(&[0.5, 0.3, 0.2]) {
            assert!((a - b).abs() < 1e-15, "{m:?}");
        }

        let spike = pv(&[1.0, 0.0]);
        assert_eq!(minimal_element(&spike, radius(0.5)), ProbVector::uniform(2));
        assert_eq!(minimal_element(&spike, radius(0.8)), ProbVector::uniform(2));
        assert_eq!(minimal_element(&spike, radius(0.0)), spike);
    }

    #[test]
    fn minimal_element_handles_unsorted_input() {
        let r = pv(&[0.1, 0.6, 0.3]);
        let m = minimal_element(&r, radius(0.1));
        for (a, b) in m.values().iter().zip(&[0.2, 0.5, 0.3]) {
            assert!((a - b).abs() < 1e-15, "{m:?}");
        }
    }

    #[test]
    fn ball_membership_with_equality_when_not_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let r = random_prob_vector(6, &mut rng);
            let eps = 0.4 * rng.random::<f64>();
            let m = minimal_element(&r, radius(eps));
            let d = tv_distance(&r, &m).unwrap();
            assert!(d <= eps + 1e-12);
            if m != ProbVector::uniform(6) {
                assert!((d - eps).abs() <= 1e-12, "eps {eps} d {d}");
            }
        }
    }

    #[test]
    fn sampled_minimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let r = random_prob_vector(5, &mut rng);
            let eps = 0.3 * rng.random::<f64>();
            let m = minimal_element(&r, radius(eps));
            for seed in 0..100 {
                let p = sample_in_tv_ball(&r, radius(eps), seed);
                assert!(majorizes(&p, &m).unwrap(), "{p:?} vs {m:?}");
            }
        }
    }

    #[test]
    fn semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let r = random_prob_vector(6, &mut rng);
            let e1 = 0.5 * rng.random::<f64>();
            let e2 = 0.5 * rng.random::<f64>();
            let two_step = minimal_element(&minimal_element(&r, radius(e1)), radius(e2));
            let one_step = minimal_element(&r, radius(e1 + e2));
            for (a, b) in two_step.values().iter().zip(one_step.values()) {
                assert!((a - b).abs() <= 1e-12, "{two_step:?} vs {one_step:?}");
            }
        }
    }

    #[test]
    fn flow_is_monotone_in_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let r = random_prob_vector(6, &mut rng);
            let e1 = 0.3 * rng.random::<f64>();
            let e2 = e1 + 0.3 * rng.random::<f64>();
            let m1 = minimal_element(&r, radius(e1));
            let m2 = minimal_element(&r, radius(e2));
            assert!(majorizes(&m1, &m2).unwrap());
        }
    }

    #[test]
    fn flow_difference_examples() {
        let q = pv(&[0.6, 0.3, 0.1]);
        assert_eq!(flow_difference(&q, radius(0.0)).unwrap(), 0.0);
        assert_eq!(flow_difference(&ProbVector::uniform(4), radius(0.2)).unwrap(), 0.0);
        let d = flow_difference(&q, radius(0.1)).unwrap();
        let direct = expected_components(&pv(&[0.5, 0.3, 0.2])).unwrap()
            - expected_components(&q).unwrap();
        assert!(d > 0.0);
        assert!((d - direct).abs() < 1e-14);
    }

    #[test]
    fn flow_bound_dominates_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let n = rng.random_range(2..=12);
            let p = random_prob_vector(n, &mut rng);
            let q = random_prob_vector(n, &mut rng);
            let lhs = (expected_components(&p).unwrap() - expected_components(&q).unwrap()).abs();
            let bound = flow_bound(&p, &q).unwrap();
            assert!(lhs <= bound + 1e-12, "lhs {lhs} bound {bound}");
        }
        assert_eq!(
            flow_bound(&ProbVector::uniform(3), &ProbVector::uniform(3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn numeric_derivative_converges_to_formula() {
        for r in [pv(&[0.5, 0.3, 0.2]), pv(&[0.7, 0.2, 0.1])] {
            let numeric = flow_derivative_numeric(&r, 1e-6).unwrap();
            let view = r.sorted_view();
            let exact = flow_derivative(&r).unwrap() + (view.largest() - view.smallest());
            assert!(
                (numeric - exact).abs() <= 1e-3 * exact.abs(),
                "numeric {numeric} exact {exact}"
            );
        }
        assert!(matches!(
            flow_derivative_numeric(&ProbVector::uniform(3), 1e-6),
            Err(Error::DegenerateExtremes)
        ));
    }

    #[test]
    fn flow_difference_bounded_by_path_supremum() {
        // flow_difference(q, eps) is the integral of the full derivative
        // (interior sum plus the spread term) along the path, so it is at
        // most eps times the supremum there.
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..50 {
            let q = random_prob_vector(5, &mut rng);
            let eps = 0.2 * rng.random::<f64>();
            if eps == 0.0 {
                continue;
            }
            let diff = flow_difference(&q, radius(eps)).unwrap();
            let mut sup = 0.0f64;
            let steps = 256;
            for i in 0..=steps {
                let s = eps * i as f64 / steps as f64;
                let point = minimal_element(&q, radius(s));
                let view = point.sorted_view();
                let g = flow_derivative(&point).unwrap() + (view.largest() - view.smallest());
                sup = sup.max(g);
            }
            assert!(
                diff <= eps * sup * (1.0 + 1e-3) + 1e-9,
                "diff {diff} eps {eps} sup {sup}"
            );
        }
    }

    #[test]
    fn flow_point_carries_contract() {
        let base = pv(&[0.6, 0.3, 0.1]);
        let fp = FlowPoint::new(base.clone(), radius(0.1));
        assert_eq!(fp.base(), &base);
        assert!(tv_distance(fp.base(), fp.result()).unwrap() <= fp.radius().value() + 1e-12);
    }
}
