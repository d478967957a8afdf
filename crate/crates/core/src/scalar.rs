//! Scalar abstraction and the factorial/log-gamma tables the closed-form
//! matrix elements are built from.

use std::fmt::{Debug, Display};
use std::iter::{Product, Sum};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar the whole library is generic over.
///
/// Blanket-implemented for anything sufficiently float-like; in practice
/// `f64` (the default throughout the crate root aliases) and `f32`.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Product
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Pulls an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Converts a small integer index into the scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("index not representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + NumAssignOps
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Product
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Lanczos approximation (g = 7, 9 terms), good to ~1e-15 relative for x >= 1.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    debug_assert!(x > T::zero());
    let z = x - T::one();
    let mut acc = T::of(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::of(c) / (z + T::of_usize(i));
    }
    let t = z + T::of(LANCZOS_G + 0.5);
    let half_ln_two_pi = T::of(0.918_938_533_204_672_7);
    half_ln_two_pi + (z + T::of(0.5)) * t.ln() - t + acc.ln()
}

/// Table of n! and ln n! up to a fixed argument.
///
/// The plain factorials are built by sequential multiplication, which keeps
/// them exact up to 18! in f64 and within a few ulp afterwards; their logs
/// are taken directly from those products while they stay finite, falling
/// back to [`ln_gamma`] once n! overflows the scalar type.
pub struct Factorials<T> {
    fact: Vec<T>,
    ln_fact: Vec<T>,
}

impl<T: Scalar> Factorials<T> {
    pub fn new(max_n: usize) -> Self {
        let mut fact = Vec::with_capacity(max_n + 1);
        let mut ln_fact = Vec::with_capacity(max_n + 1);
        let mut f = T::one();
        for n in 0..=max_n {
            if n > 0 {
                f = f * T::of_usize(n);
            }
            fact.push(f);
            ln_fact.push(if f.is_finite() {
                f.ln()
            } else {
                ln_gamma(T::of_usize(n) + T::one())
            });
        }
        Factorials { fact, ln_fact }
    }

    pub fn max_n(&self) -> usize {
        self.fact.len() - 1
    }

    /// n!, infinite once it overflows the scalar type.
    pub fn fact(&self, n: usize) -> T {
        self.fact[n]
    }

    pub fn ln_fact(&self, n: usize) -> T {
        self.ln_fact[n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorials_are_exact() {
        let f = Factorials::<f64>::new(18);
        let mut expect = 1.0;
        for n in 0..=18usize {
            if n > 0 {
                expect *= n as f64;
            }
            assert_eq!(f.fact(n), expect, "n = {n}");
        }
        assert_eq!(f.fact(10), 3_628_800.0);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let f = Factorials::<f64>::new(170);
        for n in 1..=170usize {
            let lg = ln_gamma(n as f64 + 1.0);
            let rel = (lg - f.ln_fact(n)).abs() / f.ln_fact(n).abs().max(1.0);
            assert!(rel < 2e-14, "n = {n}: {lg} vs {}", f.ln_fact(n));
        }
    }

    #[test]
    fn ln_gamma_half_integer() {
        // Γ(1/2) = sqrt(pi)
        let lg = ln_gamma(0.5f64);
        assert!((lg - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn factorial_overflow_falls_back_to_ln_gamma() {
        let f = Factorials::<f64>::new(200);
        assert!(f.fact(171).is_infinite());
        // ln 171! = 711.71472580229000007...
        assert!((f.ln_fact(171) - 711.714_725_802_29).abs() < 1e-9);
    }

    #[test]
    fn scalar_of_round_trips() {
        assert_eq!(<f64 as Scalar>::of(0.25), 0.25);
        assert_eq!(<f32 as Scalar>::of(0.25), 0.25f32);
        assert_eq!(<f64 as Scalar>::of_usize(41), 41.0);
    }
}
