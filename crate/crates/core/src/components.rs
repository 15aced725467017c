//! Exact evaluation of the expected number of connected components and of
//! its derivative along majorization flow.
//!
//! The expectation is a weighted sum of elementary symmetric polynomials,
//! E_C(p) = sum_k (k-1)! e_k(p). Raw e_k underflows and (k-1)! overflows
//! long before n gets interesting, so everything runs on the scaled values
//! se_k = k! e_k, which stay in [0, 1] for (sub-)probability inputs by
//! Maclaurin's inequality.

use crate::dist::ProbVector;
use crate::error::{Error, Result};

/// Cap on the O(n^2) exact computations.
pub const MAX_EXACT_N: usize = 10_000;

/// Cap on the 2^n subset brute force.
pub const MAX_BRUTEFORCE_N: usize = 20;

/// Scaled elementary symmetric values se_k = k! e_k for k = 1..=kmax.
#[derive(Debug, Clone)]
pub struct SymmetricAccumulator {
    scaled: Vec<f64>,
}

impl SymmetricAccumulator {
    /// Accumulates se_k = k! e_k(values) for k = 1..=kmax in O(n kmax).
    ///
    /// The update for one value v is se_k += k v se_{k-1} with se_0 = 1,
    /// applied for k descending.
    pub fn accumulate(values: &[f64], kmax: usize) -> Result<Self> {
        debug_assert!(kmax >= 1);
        let mut e = vec![0.0; kmax + 1];
        e[0] = 1.0;
        for &v in values {
            if v < 0.0 {
                return Err(Error::NegativeInput(v));
            }
            for k in (1..=kmax).rev() {
                e[k] += k as f64 * v * e[k - 1];
            }
        }
        e.remove(0);
        Ok(Self { scaled: e })
    }

    /// se_1..se_kmax.
    pub fn scaled(&self) -> &[f64] {
        &self.scaled
    }

    /// se_k (1-based k).
    pub fn get(&self, k: usize) -> f64 {
        self.scaled[k - 1]
    }
}

/// Expected number of connected components, E_C(p) = sum_k se_k / k.
pub fn expected_components(p: &ProbVector) -> Result<f64> {
    let n = p.len();
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge {
            what: "expected_components",
            n,
            max: MAX_EXACT_N,
        });
    }
    let acc = SymmetricAccumulator::accumulate(p.values(), n)?;
    Ok(acc
        .scaled()
        .iter()
        .zip(1..)
        .map(|(se, k)| se / k as f64)
        .sum())
}

/// Literal subset-sum evaluation of E_C: sum over nonempty S of
/// (|S|-1)! prod_{j in S} p_j. Exponential; the independent oracle for
/// [`expected_components`].
pub fn expected_components_bruteforce(p: &ProbVector) -> Result<f64> {
    let n = p.len();
    if n > MAX_BRUTEFORCE_N {
        return Err(Error::TooLarge {
            what: "expected_components_bruteforce",
            n,
            max: MAX_BRUTEFORCE_N,
        });
    }
    let mut factorial = vec![1.0f64; n];
    for k in 1..n {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let v = p.values();
    let mut total = 0.0;
    for mask in 1u32..(1u32 << n) {
        let mut product = 1.0;
        let mut bits = mask;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            product *= v[j];
            if product == 0.0 {
                break;
            }
            bits &= bits - 1;
        }
        if product != 0.0 {
            total += factorial[mask.count_ones() as usize - 1] * product;
        }
    }
    Ok(total)
}

/// The interior-subset derivative sum behind the Lipschitz bound chain:
/// (r_+ - r_-) sum over nonempty S of (|S|+1)! prod_{j in S} r_j, where S
/// ranges over subsets avoiding the extreme indices. Nonnegative, zero at
/// the uniform distribution, and equal to the bound curve B_{n-2}(r_+) on
/// the extremal family.
///
/// The full directional derivative of E_C along majorization flow exceeds
/// this by exactly the empty-subset term (r_+ - r_-); see
/// [`crate::flow::flow_derivative_numeric`].
pub fn flow_derivative(r: &ProbVector) -> Result<f64> {
    let n = r.len();
    if n < 3 {
        return Err(Error::TooSmall {
            what: "flow_derivative",
            n,
            min: 3,
        });
    }
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge {
            what: "flow_derivative",
            n,
            max: MAX_EXACT_N,
        });
    }
    let view = r.sorted_view();
    let spread = view.largest() - view.smallest();
    if spread == 0.0 {
        return Ok(0.0);
    }
    let (i_max, i_min) = (view.index_of_largest(), view.index_of_smallest());
    let rest: Vec<f64> = r
        .values()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != i_max && i != i_min)
        .map(|(_, &v)| v)
        .collect();
    // (k+1)! e_k = (k+1) se_k.
    let acc = SymmetricAccumulator::accumulate(&rest, rest.len())?;
    let sum: f64 = acc
        .scaled()
        .iter()
        .zip(1..)
        .map(|(se, k)| (k + 1) as f64 * se)
        .sum();
    Ok(spread * sum)
}

/// Upper bound for [`flow_derivative`] obtained by flattening the interior
/// entries: (r_+ - r_-) sum_k C(n-2,k) (k+1)! (1 - r_- - r_+)^k (n-2)^-k.
pub fn flow_derivative_upper(r: &ProbVector) -> Result<f64> {
    let n = r.len();
    if n < 3 {
        return Err(Error::TooSmall {
            what: "flow_derivative_upper",
            n,
            min: 3,
        });
    }
    let view = r.sorted_view();
    let spread = view.largest() - view.smallest();
    if spread == 0.0 {
        return Ok(0.0);
    }
    let m = n - 2;
    let x = (1.0 - view.largest() - view.smallest()).max(0.0);
    // term_k = c_{k,m} x^k with c_{k,m} = C(m,k) (k+1)! / m^k; the running
    // ratio c_{k+1,m}/c_{k,m} = (k+2)/(k+1) (1 - k/m) keeps everything tame.
    let mut term = 2.0 * x;
    let mut sum = term;
    for k in 1..m {
        term *= (k + 2) as f64 / (k + 1) as f64 * (1.0 - k as f64 / m as f64) * x;
        sum += term;
        if term < f64::MIN_POSITIVE {
            break;
        }
    }
    Ok(spread * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{majorizes, random_majorization_pair, random_prob_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn accumulator_examples() {
        let acc = SymmetricAccumulator::accumulate(&[1.0], 1).unwrap();
        assert_eq!(acc.get(1), 1.0);

        let acc = SymmetricAccumulator::accumulate(&[0.5, 0.5], 2).unwrap();
        assert!((acc.get(1) - 1.0).abs() < 1e-15);
        assert!((acc.get(2) - 0.5).abs() < 1e-15);

        let third = 1.0 / 3.0;
        let acc = SymmetricAccumulator::accumulate(&[third; 3], 3).unwrap();
        assert!((acc.get(3) - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn accumulator_rejects_negative() {
        assert!(matches!(
            SymmetricAccumulator::accumulate(&[0.5, -0.1], 2),
            Err(Error::NegativeInput(_))
        ));
    }

    #[test]
    fn accumulator_vanishes_past_support() {
        let acc = SymmetricAccumulator::accumulate(&[0.5, 0.5, 0.0, 0.0], 4).unwrap();
        assert_eq!(acc.get(3), 0.0);
        assert_eq!(acc.get(4), 0.0);
    }

    #[test]
    fn expected_components_examples() {
        assert_eq!(expected_components(&ProbVector::point_mass(5, 0)).unwrap(), 1.0);
        assert!((expected_components(&pv(&[0.5, 0.5])).unwrap() - 1.25).abs() < 1e-15);
        let e = expected_components(&ProbVector::uniform(3)).unwrap();
        assert!((e - 38.0 / 27.0).abs() < 1e-14);
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(expected_components_bruteforce(&pv(&[1.0, 0.0])).unwrap(), 1.0);
        assert!((expected_components_bruteforce(&pv(&[0.5, 0.5])).unwrap() - 1.25).abs() < 1e-15);
        let p = pv(&[1.0 / 3.0, 0.0, 2.0 / 3.0]);
        assert!((expected_components_bruteforce(&p).unwrap() - 11.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            expected_components_bruteforce(&ProbVector::uniform(21)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn flow_derivative_examples() {
        assert_eq!(flow_derivative(&ProbVector::uniform(6)).unwrap(), 0.0);
        let g = flow_derivative(&pv(&[0.5, 0.3, 0.2])).unwrap();
        assert!((g - 0.18).abs() < 1e-15, "{g}");
        assert!(matches!(
            flow_derivative(&pv(&[0.5, 0.5])),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn flow_derivative_upper_examples() {
        assert_eq!(flow_derivative_upper(&ProbVector::uniform(4)).unwrap(), 0.0);
        // At n = 3 flattening a single interior entry changes nothing.
        let r = pv(&[0.5, 0.3, 0.2]);
        let g = flow_derivative(&r).unwrap();
        let u = flow_derivative_upper(&r).unwrap();
        assert!((g - u).abs() < 1e-15);
        let r4 = pv(&[0.4, 0.3, 0.2, 0.1]);
        assert!(flow_derivative_upper(&r4).unwrap() >= flow_derivative(&r4).unwrap());
    }

    #[test]
    fn flow_derivative_matches_finite_differences() {
        // Central differences of E_C in the direction that moves mass from
        // the largest entry to the smallest one. The derivative of E_C
        // carries the empty-subset term on top of the interior sum, so the
        // finite difference must land on gamma + (r_+ - r_-) exactly.
        let h = 1e-6;
        for r in [
            pv(&[0.5, 0.3, 0.2]),
            pv(&[0.4, 0.25, 0.2, 0.15]),
            pv(&[0.3, 0.25, 0.2, 0.15, 0.1]),
        ] {
            let view = r.sorted_view();
            let (ip, im) = (view.index_of_largest(), view.index_of_smallest());
            let spread = view.largest() - view.smallest();
            let mut fwd = r.values().to_vec();
            fwd[ip] -= h;
            fwd[im] += h;
            let mut bwd = r.values().to_vec();
            bwd[ip] += h;
            bwd[im] -= h;
            let fd = (expected_components(&pv(&fwd)).unwrap()
                - expected_components(&pv(&bwd)).unwrap())
                / (2.0 * h);
            let full = flow_derivative(&r).unwrap() + spread;
            assert!(
                (fd - full).abs() <= 1e-6 * full.abs() + 1e-9,
                "fd {fd} vs gamma + spread {full}"
            );
        }
    }

    #[test]
    fn schur_concavity_on_generated_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let q = random_prob_vector(6, &mut rng);
            let p = random_majorization_pair(&q, trial, 5);
            assert!(majorizes(&q, &p).unwrap());
            let ep = expected_components(&p).unwrap();
            let eq = expected_components(&q).unwrap();
            assert!(ep >= eq - 1e-12, "E_C(p) {ep} < E_C(q) {eq}");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_prob_vector(max_n: usize) -> impl Strategy<Value = ProbVector> {
            proptest::collection::vec(0.0f64..1.0, 2..=max_n).prop_map(|raw| {
                let sum: f64 = raw.iter().sum();
                if sum <= 0.0 {
                    return ProbVector::uniform(raw.len());
                }
                ProbVector::new(raw.iter().map(|v| v / sum).collect()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn agrees_with_bruteforce(p in arb_prob_vector(12)) {
                let fast = expected_components(&p).unwrap();
                let slow = expected_components_bruteforce(&p).unwrap();
                prop_assert!((fast - slow).abs() <= 1e-10 * slow.abs());
            }

            #[test]
            fn range_is_one_to_n(p in arb_prob_vector(12)) {
                let e = expected_components(&p).unwrap();
                prop_assert!(e >= 1.0 - 1e-12);
                prop_assert!(e <= p.len() as f64 + 1e-12);
            }

            #[test]
            fn scaled_values_stay_in_unit_interval(p in arb_prob_vector(16)) {
                let acc = SymmetricAccumulator::accumulate(p.values(), p.len()).unwrap();
                for &se in acc.scaled() {
                    prop_assert!((-1e-15..=1.0 + 1e-12).contains(&se));
                }
            }

            #[test]
            fn upper_bound_dominates(p in arb_prob_vector(10)) {
                prop_assume!(p.len() >= 3);
                let g = flow_derivative(&p).unwrap();
                let u = flow_derivative_upper(&p).unwrap();
                prop_assert!(g <= u + 1e-12, "gamma {} upper {}", g, u);
            }
        }
    }
}
