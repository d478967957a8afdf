//! Scalar interference predictions for both coupler families: coincidence
//! probabilities behind a balanced-input collision, the photon-pair number
//! distribution of a doubly seeded amplifier, the extended suppression at
//! integer gains, classical two-path baselines, the partial-
//! distinguishability interpolation between them, and the gain threshold
//! where the quantum and classical coincidence rates cross a target.
//!
//! Everything here is a closed form. The matrix-element machinery of
//! [`crate::gaussian`] serves as the independent cross-check in the tests,
//! never as the implementation.

use crate::error::{Error, Result};
use crate::gaussian::Coupler;
use crate::scalar::Scalar;

/// Interfering two-path amplitudes behind a (1,1) → (1,1) coincidence.
///
/// For a beam splitter the two paths are double transmission and double
/// reflection; for an amplifier, double spontaneous and double stimulated
/// emission. In both families the paths interfere destructively, which is
/// the whole story of the coincidence dip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAmplitudes<T> {
    /// Double-transmission amplitude (double-spontaneous for the amplifier).
    pub a_dt: T,
    /// Double-reflection amplitude (double-stimulated for the amplifier).
    pub a_dr: T,
}

impl<T: Scalar> PathAmplitudes<T> {
    /// The two path amplitudes of the given coupler: (η, −(1−η)) for a
    /// beam splitter, (1/g^{3/2}, −(g−1)/g^{3/2}) for an amplifier.
    pub fn for_coupler(coupler: &Coupler<T>) -> Self {
        match coupler {
            Coupler::BeamSplitter { eta } => PathAmplitudes {
                a_dt: *eta,
                a_dr: -(T::one() - *eta),
            },
            Coupler::ParametricAmplifier { gain } => {
                let scale = T::one() / (*gain * gain.sqrt());
                PathAmplitudes {
                    a_dt: scale,
                    a_dr: -(*gain - T::one()) * scale,
                }
            }
        }
    }

    /// Coincidence probability when the two paths overlap with weight
    /// `s ∈ [0, 1]`: |a_dt|² + |a_dr|² + 2 s a_dt a_dr. Fully overlapping
    /// paths (s = 1) give the quantum rate, fully distinguishable ones
    /// (s = 0) the classical baseline.
    pub fn coincidence(&self, s: T) -> T {
        self.a_dt * self.a_dt + self.a_dr * self.a_dr
            + T::of(2.0) * s * self.a_dt * self.a_dr
    }
}

/// (1,1) → (1,1) coincidence probability behind a beam splitter: (2η−1)².
pub fn coincidence_bs<T: Scalar>(eta: T) -> Result<T> {
    let eta = Coupler::beam_splitter(eta)?.eta().unwrap();
    let d = T::of(2.0) * eta - T::one();
    Ok(d * d)
}

/// (1,1) → (1,1) coincidence probability behind an amplifier:
/// (2−g)²/g³. Equals `coincidence_bs(1/g) / g`.
pub fn coincidence_pdc<T: Scalar>(gain: T) -> Result<T> {
    let gain = Coupler::parametric(gain)?.gain().unwrap();
    let d = T::of(2.0) - gain;
    Ok(d * d / (gain * gain * gain))
}

/// Coincidence rate of distinguishable photons on a beam splitter:
/// η² + (1−η)². The two paths add in probability instead of amplitude.
pub fn classical_bs<T: Scalar>(eta: T) -> Result<T> {
    let eta = Coupler::beam_splitter(eta)?.eta().unwrap();
    let r = T::one() - eta;
    Ok(eta * eta + r * r)
}

/// Coincidence rate of distinguishable photons through an amplifier:
/// (1 + (g−1)²)/g³.
pub fn classical_pdc<T: Scalar>(gain: T) -> Result<T> {
    let gain = Coupler::parametric(gain)?.gain().unwrap();
    let r = gain - T::one();
    Ok((T::one() + r * r) / (gain * gain * gain))
}

/// Coincidence probability at partial path overlap `s ∈ [0, 1]`, affine
/// between the classical baseline at s = 0 and the quantum rate at s = 1.
pub fn partial_coincidence<T: Scalar>(coupler: &Coupler<T>, s: T) -> Result<T> {
    if !(s >= T::zero() && s <= T::one()) {
        return Err(Error::OutOfRange(format!("path overlap {s} outside [0, 1]")));
    }
    Ok(PathAmplitudes::for_coupler(coupler).coincidence(s))
}

/// Probability that a doubly seeded amplifier of gain g emits n photon
/// pairs: P_n = (g−1)^{n−1} (n+1−g)² / g^{n+2}.
///
/// At n = g−1 for integer g the factor (n+1−g) vanishes identically, which
/// is the extended suppression beyond the g = 2 coincidence dip.
fn pair_probability<T: Scalar>(gain: T, n: usize) -> T {
    if n == 0 {
        return (gain - T::one()) / (gain * gain);
    }
    let lambda = (gain - T::one()) / gain;
    let d = T::of_usize(n + 1) - gain;
    lambda.powi(n as i32 - 1) * d * d / (gain * gain * gain)
}

/// Distribution of the photon-pair number behind an amplifier seeded with
/// one photon in each mode.
#[derive(Debug, Clone)]
pub struct PairCountDistribution<T> {
    /// Amplifier gain the distribution belongs to.
    pub gain: T,
    /// P_n for n = 0..=n_max.
    pub probs: Vec<T>,
    /// Analytic remainder Σ_{n > n_max} P_n.
    pub tail: T,
}

impl<T: Scalar> PairCountDistribution<T> {
    /// Kept mass plus the analytic tail; equals 1 up to rounding.
    pub fn total(&self) -> T {
        self.probs.iter().fold(self.tail, |acc, &p| acc + p)
    }
}

/// Pair-number distribution of a doubly seeded amplifier, with the closed
/// form per entry and the geometric-series remainder as the tail.
///
/// At g = 1 the amplifier is the identity and the single seeded pair goes
/// straight through, so the distribution is the point mass at n = 1.
pub fn pair_distribution<T: Scalar>(gain: T, n_max: usize) -> Result<PairCountDistribution<T>> {
    let gain = Coupler::parametric(gain)?.gain().unwrap();
    if n_max < 1 {
        return Err(Error::OutOfRange(format!(
            "pair distribution needs n_max >= 1, got {n_max}"
        )));
    }
    if gain == T::one() {
        let mut probs = vec![T::zero(); n_max + 1];
        probs[1] = T::one();
        return Ok(PairCountDistribution {
            gain,
            probs,
            tail: T::zero(),
        });
    }
    let probs: Vec<T> = (0..=n_max).map(|n| pair_probability(gain, n)).collect();
    // Σ_{n >= M} λ^{n-1}(n+1-g)²/g³ with A = M+1−g reduces to three
    // geometric sums: λ^{M-1}[A²g + 2Aλg² + λ(1+λ)g³]/g³
    let lambda = (gain - T::one()) / gain;
    let m = n_max + 1;
    let a = T::of_usize(m + 1) - gain;
    let g2 = gain * gain;
    let bracket = a * a * gain + T::of(2.0) * a * lambda * g2 + lambda * (T::one() + lambda) * g2 * gain;
    let tail = lambda.powi(m as i32 - 1) * bracket / (g2 * gain);
    Ok(PairCountDistribution { gain, probs, tail })
}

/// Probability of the transition (1, n) → (n, 1) through a beam splitter:
/// (1−η)^{n−1} ((n+1)η − 1)², which vanishes at η = 1/(n+1).
pub fn extended_bs_probability<T: Scalar>(n: usize, eta: T) -> Result<T> {
    if n < 1 {
        return Err(Error::OutOfRange(format!(
            "extended suppression starts at one seeded photon, got n={n}"
        )));
    }
    let eta = Coupler::beam_splitter(eta)?.eta().unwrap();
    let d = T::of_usize(n + 1) * eta - T::one();
    Ok((T::one() - eta).powi(n as i32 - 1) * d * d)
}

/// Gap |P_n(g) − extended_bs_probability(n, 1/g)/g| between the two closed
/// forms the mode-swap correspondence makes equal.
pub fn duality_consistency<T: Scalar>(n: usize, gain: T) -> Result<T> {
    if n < 1 {
        return Err(Error::OutOfRange(format!(
            "pair-number consistency starts at n=1, got n={n}"
        )));
    }
    let gain = Coupler::parametric(gain)?.gain().unwrap();
    let lhs = pair_probability(gain, n);
    let rhs = extended_bs_probability(n, T::one() / gain)? / gain;
    Ok((lhs - rhs).abs())
}

/// Smallest gain in [1, 2] whose coincidence probability (2−g)²/g³ equals
/// the target, found by bisection; the rate falls monotonically from 1 to
/// 0 on that interval, so the solution is unique.
pub fn threshold_gain<T: Scalar>(target: T) -> Result<T> {
    if !(target >= T::zero()) {
        return Err(Error::OutOfRange(format!("target {target} negative")));
    }
    if target > T::one() {
        return Err(Error::NoSolution(format!(
            "coincidence probability never exceeds 1, target {target} unreachable"
        )));
    }
    if target == T::one() {
        return Ok(T::one());
    }
    if target == T::zero() {
        return Ok(T::of(2.0));
    }
    let (mut lo, mut hi) = (T::one(), T::of(2.0));
    while hi - lo > T::of(1e-12) {
        let mid = (lo + hi) / T::of(2.0);
        let d = T::of(2.0) - mid;
        if d * d / (mid * mid * mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::of(2.0))
}
