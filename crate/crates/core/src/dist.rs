//! Probability vectors, total variation distance, the majorization order,
//! and seeded test-data generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for the unit-sum check on construction.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Entries more negative than this are rejected; tiny negative noise above
/// it is clamped to zero.
pub const NEGATIVE_ENTRY_TOL: f64 = -1e-15;

/// Tolerance absorbing float noise in partial-sum comparisons.
pub const MAJORIZATION_TOL: f64 = 1e-12;

/// A probability distribution on {1, ..., n}.
///
/// Entries are nonnegative and sum to one. Inputs whose sum is within
/// `NORMALIZATION_TOL` of one are renormalized by dividing by the sum, so
/// downstream exact formulas always see a true probability vector.
///
/// Serializes as a flat JSON array of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector {
    values: Vec<f64>,
}

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        let mut values = values;
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < NEGATIVE_ENTRY_TOL {
                return Err(Error::NegativeEntry {
                    index,
                    value: *v,
                });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        if sum != 1.0 {
            for v in &mut values {
                *v /= sum;
            }
        }
        Ok(Self { values })
    }

    /// The uniform distribution on {1, ..., n}.
    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            values: vec![1.0 / n as f64; n],
        }
    }

    /// All mass on a single outcome (0-based `index`).
    pub fn point_mass(n: usize, index: usize) -> Self {
        assert!(index < n);
        let mut values = vec![0.0; n];
        values[index] = 1.0;
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sorted view with the extreme entries and their first attaining indices.
    pub fn sorted_view(&self) -> SortedProbView<'_> {
        SortedProbView::of(self)
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.values
    }
}

/// A descending rearrangement of a [`ProbVector`] together with its largest
/// and smallest entries.
///
/// Ties are broken by original index (stable sort); the extreme indices are
/// the first attaining ones.
#[derive(Debug, Clone)]
pub struct SortedProbView<'a> {
    source: &'a ProbVector,
    order: Vec<usize>,
    largest: f64,
    smallest: f64,
    index_of_largest: usize,
    index_of_smallest: usize,
}

impl<'a> SortedProbView<'a> {
    fn of(source: &'a ProbVector) -> Self {
        let v = source.values();
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap());
        let mut index_of_largest = 0;
        let mut index_of_smallest = 0;
        for (i, &x) in v.iter().enumerate() {
            if x > v[index_of_largest] {
                index_of_largest = i;
            }
            if x < v[index_of_smallest] {
                index_of_smallest = i;
            }
        }
        Self {
            source,
            largest: v[index_of_largest],
            smallest: v[index_of_smallest],
            index_of_largest,
            index_of_smallest,
            order,
        }
    }

    pub fn source(&self) -> &ProbVector {
        self.source
    }

    /// Permutation of 0-based indices giving a non-increasing sequence.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Entries in non-increasing order.
    pub fn descending(&self) -> Vec<f64> {
        let v = self.source.values();
        self.order.iter().map(|&i| v[i]).collect()
    }

    pub fn largest(&self) -> f64 {
        self.largest
    }

    pub fn smallest(&self) -> f64 {
        self.smallest
    }

    pub fn index_of_largest(&self) -> usize {
        self.index_of_largest
    }

    pub fn index_of_smallest(&self) -> usize {
        self.index_of_smallest
    }
}

/// A total variation radius in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TVRadius(f64);

impl TVRadius {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidRadius(epsilon));
        }
        Ok(Self(epsilon))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Total variation distance, half the l1 distance.
pub fn tv_distance(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_lengths(p, q)?;
    let d = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>();
    Ok(0.5 * d)
}

/// Whether `x` majorizes `y`: every descending partial sum of `x` dominates
/// the corresponding one of `y` (totals agree automatically here).
pub fn majorizes(x: &ProbVector, y: &ProbVector) -> Result<bool> {
    check_lengths(x, y)?;
    let xd = x.sorted_view().descending();
    let yd = y.sorted_view().descending();
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (a, b) in xd.iter().zip(&yd) {
        sx += a;
        sy += b;
        if sx < sy - MAJORIZATION_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Returns `p` with `p` majorized by `q`, built from `steps` random
/// Robin-Hood transfers (mass moves from a larger entry to a smaller one,
/// never past the midpoint of their gap). Deterministic given the seed.
pub fn random_majorization_pair(q: &ProbVector, rng_seed: u64, steps: usize) -> ProbVector {
    if steps == 0 {
        return q.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = q.len();
    let mut v = q.values().to_vec();
    if n >= 2 {
        for _ in 0..steps {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let (rich, poor) = if v[i] >= v[j] { (i, j) } else { (j, i) };
            let gap = v[rich] - v[poor];
            if gap <= 0.0 {
                continue;
            }
            let delta = 0.5 * gap * rng.random::<f64>();
            v[rich] -= delta;
            v[poor] += delta;
        }
    }
    ProbVector::new(v).expect("Robin-Hood transfers preserve validity")
}

/// A deterministic sample from the total variation ball around `r`:
/// a convex mix of `r` with a random simplex point, scaled to stay in
/// the ball.
pub fn sample_in_tv_ball(r: &ProbVector, eps: TVRadius, rng_seed: u64) -> ProbVector {
    if eps.value() == 0.0 {
        return r.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let target = random_prob_vector(r.len(), &mut rng);
    let distance = tv_distance(&target, r).expect("same length");
    let wanted = eps.value() * rng.random::<f64>();
    let t = if distance > 0.0 {
        (wanted / distance).min(1.0)
    } else {
        0.0
    };
    let mixed: Vec<f64> = r
        .values()
        .iter()
        .zip(target.values())
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();
    ProbVector::new(mixed).expect("convex mix stays on the simplex")
}

/// A uniformly random point of the simplex (normalized exponentials).
pub fn random_prob_vector(n: usize, rng: &mut impl Rng) -> ProbVector {
    assert!(n >= 1);
    let mut v: Vec<f64> = (0..n)
        .map(|_| -f64::ln(1.0 - rng.random::<f64>()))
        .collect();
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return ProbVector::uniform(n);
    }
    for x in &mut v {
        *x /= sum;
    }
    ProbVector::new(v).expect("normalized exponentials lie on the simplex")
}

fn check_lengths(p: &ProbVector, q: &ProbVector) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}
