//! Truncated two-mode Fock space: indexing, state vectors and dense
//! operators on the kept window.
//!
//! A window keeps occupations `0..=n_max` in each mode, so the joint space
//! has dimension `(n_max + 1)^2` with the row-major flat layout of
//! [`flat_index`]. Amplitudes are stored complex even though every unitary
//! in this crate happens to be real in the Fock basis; tests lean on that
//! by asserting imaginary parts stay exactly zero.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Single-mode dimension of a window with the given cutoff.
pub fn dim(n_max: usize) -> usize {
    n_max + 1
}

/// Joint dimension of the two-mode window.
pub fn total_dim(n_max: usize) -> usize {
    (n_max + 1) * (n_max + 1)
}

/// Flat index of |n_a, n_b⟩, row-major in n_a.
#[inline]
pub fn flat_index(n_max: usize, n_a: usize, n_b: usize) -> usize {
    debug_assert!(n_a <= n_max && n_b <= n_max);
    n_a * (n_max + 1) + n_b
}

/// Occupations (n_a, n_b) for a flat window index.
#[inline]
pub fn occupations(n_max: usize, idx: usize) -> (usize, usize) {
    debug_assert!(idx < total_dim(n_max));
    (idx / (n_max + 1), idx % (n_max + 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Pure state on the two-mode window.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState<T> {
    n_max: usize,
    amp: Vec<Complex<T>>,
}

impl<T: Scalar> TwoModeState<T> {
    pub fn vacuum(n_max: usize) -> Self {
        let mut amp = vec![Complex::new(T::zero(), T::zero()); total_dim(n_max)];
        amp[0] = Complex::new(T::one(), T::zero());
        TwoModeState { n_max, amp }
    }

    /// Basis state |n_a, n_b⟩.
    pub fn basis(n_max: usize, n_a: usize, n_b: usize) -> Result<Self> {
        if n_a > n_max || n_b > n_max {
            return Err(Error::OutOfRange(format!(
                "basis state ({n_a}, {n_b}) outside cutoff {n_max}"
            )));
        }
        let mut s = TwoModeState::vacuum(n_max);
        s.amp[0] = Complex::new(T::zero(), T::zero());
        s.amp[flat_index(n_max, n_a, n_b)] = Complex::new(T::one(), T::zero());
        Ok(s)
    }

    pub fn from_amplitudes(n_max: usize, amp: Vec<Complex<T>>) -> Result<Self> {
        if amp.len() != total_dim(n_max) {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a window of dimension {}",
                amp.len(),
                total_dim(n_max)
            )));
        }
        Ok(TwoModeState { n_max, amp })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amp
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amp
    }

    #[inline]
    pub fn amp(&self, n_a: usize, n_b: usize) -> Complex<T> {
        self.amp[flat_index(self.n_max, n_a, n_b)]
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.n_max != other.n_max {
            return Err(Error::DimensionMismatch(format!(
                "inner product across cutoffs {} and {}",
                self.n_max, other.n_max
            )));
        }
        Ok(self
            .amp
            .iter()
            .zip(&other.amp)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * *b
            }))
    }

    pub fn norm_sqr(&self) -> T {
        self.amp.iter().map(|a| a.norm_sqr()).fold(T::zero(), |x, y| x + y)
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() || !n.is_finite() {
            return Err(Error::OutOfRange(format!("cannot normalize state with norm {n}")));
        }
        let mut out = self.clone();
        let inv = Complex::new(T::one() / n, T::zero());
        for a in &mut out.amp {
            *a = *a * inv;
        }
        Ok(out)
    }

    /// Probability mass held by basis states with total photon number
    /// strictly above `n_total`.
    pub fn tail_mass(&self, n_total: usize) -> T {
        let mut mass = T::zero();
        for (idx, a) in self.amp.iter().enumerate() {
            let (na, nb) = occupations(self.n_max, idx);
            if na + nb > n_total {
                mass = mass + a.norm_sqr();
            }
        }
        mass
    }

    /// Probability of each basis outcome, indexed like the amplitudes.
    pub fn probabilities(&self) -> Vec<T> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Largest |imaginary part| over all amplitudes.
    pub fn max_abs_imag(&self) -> T {
        self.amp
            .iter()
            .map(|a| a.im.abs())
            .fold(T::zero(), |x, y| if y > x { y } else { x })
    }

    /// Ladder action a|ψ⟩ on one mode: amplitudes shift down a step with
    /// the usual √(n+1) weight.
    pub fn lowered(&self, mode: Mode) -> Self {
        let d = dim(self.n_max);
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.amp.len()];
        for na in 0..d {
            for nb in 0..d {
                let src = match mode {
                    Mode::A if na + 1 < d => Some((na + 1, nb, na + 1)),
                    Mode::B if nb + 1 < d => Some((na, nb + 1, nb + 1)),
                    _ => None,
                };
                if let Some((sa, sb, q)) = src {
                    out[flat_index(self.n_max, na, nb)] =
                        self.amp(sa, sb) * T::of_usize(q).sqrt();
                }
            }
        }
        TwoModeState {
            n_max: self.n_max,
            amp: out,
        }
    }

    /// Ladder action a†|ψ⟩ on one mode; the component raised past the
    /// cutoff is dropped.
    pub fn raised(&self, mode: Mode) -> Self {
        let d = dim(self.n_max);
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.amp.len()];
        for na in 0..d {
            for nb in 0..d {
                let dst = match mode {
                    Mode::A if na + 1 < d => Some((na + 1, nb, na + 1)),
                    Mode::B if nb + 1 < d => Some((na, nb + 1, nb + 1)),
                    _ => None,
                };
                if let Some((ta, tb, q)) = dst {
                    out[flat_index(self.n_max, ta, tb)] =
                        self.amp(na, nb) * T::of_usize(q).sqrt();
                }
            }
        }
        TwoModeState {
            n_max: self.n_max,
            amp: out,
        }
    }

    pub fn scaled(&self, k: T) -> Self {
        let mut out = self.clone();
        for a in &mut out.amp {
            *a = *a * k;
        }
        out
    }

    /// self + k·other. Panics if the cutoffs differ.
    pub fn add_scaled(&self, other: &Self, k: T) -> Self {
        assert_eq!(self.n_max, other.n_max, "add_scaled across cutoffs");
        let mut out = self.clone();
        for (a, b) in out.amp.iter_mut().zip(&other.amp) {
            *a = *a + *b * k;
        }
        out
    }
}

/// Single-mode lowering operator on `0..=n_max`: a|n⟩ = √n |n-1⟩.
pub fn lowering_matrix<T: Scalar>(n_max: usize) -> Mat<T> {
    let d = dim(n_max);
    let mut m = Mat::zeros(d, d);
    for n in 1..d {
        m.set(n - 1, n, Complex::new(T::of_usize(n).sqrt(), T::zero()));
    }
    m
}

/// Single-mode raising operator; the component leaving the window is dropped.
pub fn raising_matrix<T: Scalar>(n_max: usize) -> Mat<T> {
    lowering_matrix::<T>(n_max).transpose()
}

/// Single-mode photon-number operator.
pub fn number_matrix<T: Scalar>(n_max: usize) -> Mat<T> {
    let d = dim(n_max);
    Mat::from_real_fn(d, d, |r, c| if r == c { T::of_usize(r) } else { T::zero() })
}

/// Dense operator on the two-mode window.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator<T> {
    n_max: usize,
    mat: Mat<T>,
}

impl<T: Scalar> FockOperator<T> {
    pub fn identity(n_max: usize) -> Self {
        FockOperator {
            n_max,
            mat: Mat::identity(total_dim(n_max)),
        }
    }

    pub fn from_mat(n_max: usize, mat: Mat<T>) -> Result<Self> {
        if !mat.is_square() || mat.rows() != total_dim(n_max) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for a window of dimension {}",
                mat.rows(),
                mat.cols(),
                total_dim(n_max)
            )));
        }
        Ok(FockOperator { n_max, mat })
    }

    /// Two-mode operator A ⊗ B from single-mode matrices.
    pub fn from_modes(n_max: usize, op_a: &Mat<T>, op_b: &Mat<T>) -> Result<Self> {
        let d = dim(n_max);
        if op_a.rows() != d || !op_a.is_square() || op_b.rows() != d || !op_b.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "single-mode factors must be {d}x{d}"
            )));
        }
        Ok(FockOperator {
            n_max,
            mat: Mat::kron(op_a, op_b),
        })
    }

    /// Ladder operator acting on one mode, identity on the other.
    pub fn mode_lowering(n_max: usize, mode: Mode) -> Self {
        let a = lowering_matrix::<T>(n_max);
        let id = Mat::identity(dim(n_max));
        let mat = match mode {
            Mode::A => Mat::kron(&a, &id),
            Mode::B => Mat::kron(&id, &a),
        };
        FockOperator { n_max, mat }
    }

    pub fn mode_raising(n_max: usize, mode: Mode) -> Self {
        let a = raising_matrix::<T>(n_max);
        let id = Mat::identity(dim(n_max));
        let mat = match mode {
            Mode::A => Mat::kron(&a, &id),
            Mode::B => Mat::kron(&id, &a),
        };
        FockOperator { n_max, mat }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mat(&self) -> &Mat<T> {
        &self.mat
    }

    /// ⟨n, m| O |i, j⟩.
    pub fn element(&self, n: usize, m: usize, i: usize, j: usize) -> Complex<T> {
        self.mat
            .at(flat_index(self.n_max, n, m), flat_index(self.n_max, i, j))
    }

    pub fn apply(&self, state: &TwoModeState<T>) -> Result<TwoModeState<T>> {
        if state.n_max() != self.n_max {
            return Err(Error::DimensionMismatch(format!(
                "operator cutoff {} applied to state cutoff {}",
                self.n_max,
                state.n_max()
            )));
        }
        TwoModeState::from_amplitudes(self.n_max, self.mat.apply(state.amplitudes()))
    }

    /// self · other, applied right to left.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n_max != other.n_max {
            return Err(Error::DimensionMismatch(format!(
                "composing operators on cutoffs {} and {}",
                self.n_max, other.n_max
            )));
        }
        Ok(FockOperator {
            n_max: self.n_max,
            mat: self.mat.matmul(&other.mat),
        })
    }

    pub fn adjoint(&self) -> Self {
        FockOperator {
            n_max: self.n_max,
            mat: self.mat.adjoint(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n_max != other.n_max {
            return Err(Error::DimensionMismatch(format!(
                "subtracting operators on cutoffs {} and {}",
                self.n_max, other.n_max
            )));
        }
        Ok(FockOperator {
            n_max: self.n_max,
            mat: self.mat.sub(&other.mat),
        })
    }

    pub fn scaled(&self, k: Complex<T>) -> Self {
        FockOperator {
            n_max: self.n_max,
            mat: self.mat.scaled(k),
        }
    }

    /// ⟨state| O |state⟩.
    pub fn expectation(&self, state: &TwoModeState<T>) -> Result<Complex<T>> {
        let applied = self.apply(state)?;
        state.inner(&applied)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_index_examples() {
        assert_eq!(flat_index(3, 0, 0), 0);
        assert_eq!(flat_index(3, 0, 3), 3);
        assert_eq!(flat_index(3, 1, 0), 4);
        assert_eq!(flat_index(3, 3, 3), 15);
        assert_eq!(occupations(3, 7), (1, 3));
    }

    #[test]
    fn basis_states_are_orthonormal() {
        let a = TwoModeState::<f64>::basis(4, 2, 3).unwrap();
        let b = TwoModeState::<f64>::basis(4, 3, 2).unwrap();
        assert_eq!(a.inner(&a).unwrap().re, 1.0);
        assert_eq!(a.inner(&b).unwrap().re, 0.0);
        assert!(TwoModeState::<f64>::basis(4, 5, 0).is_err());
    }

    #[test]
    fn inner_product_conjugates_left_argument() {
        let mut s = TwoModeState::<f64>::vacuum(1);
        s.amplitudes_mut()[0] = Complex::new(0.0, 0.5);
        s.amplitudes_mut()[1] = Complex::new(0.5, 0.0);
        let v = TwoModeState::<f64>::basis(1, 0, 0).unwrap();
        let left = s.inner(&v).unwrap();
        let right = v.inner(&s).unwrap();
        assert_eq!(left, right.conj());
        assert_eq!(left, Complex::new(0.0, -0.5));
    }

    #[test]
    fn mismatched_cutoffs_error() {
        let a = TwoModeState::<f64>::vacuum(2);
        let b = TwoModeState::<f64>::vacuum(3);
        assert!(matches!(a.inner(&b), Err(Error::DimensionMismatch(_))));
        let op = FockOperator::<f64>::identity(2);
        assert!(op.apply(&b).is_err());
    }

    #[test]
    fn number_operator_expectation() {
        let n_a = FockOperator::<f64>::from_modes(5, &number_matrix(5), &Mat::identity(6)).unwrap();
        let s = TwoModeState::<f64>::basis(5, 3, 1).unwrap();
        assert_eq!(n_a.expectation(&s).unwrap().re, 3.0);
    }

    #[test]
    fn ladder_matrices_move_occupation() {
        let low = FockOperator::<f64>::mode_lowering(3, Mode::B);
        let s = FockOperator::<f64>::mode_raising(3, Mode::B)
            .apply(&TwoModeState::basis(3, 0, 1).unwrap())
            .unwrap();
        assert!((s.amp(0, 2).re - 2.0f64.sqrt()).abs() < 1e-15);
        let back = low.apply(&s).unwrap();
        assert!((back.amp(0, 1).re - 2.0).abs() < 1e-15);
        // raising at the window edge drops the state
        let top = FockOperator::<f64>::mode_raising(3, Mode::B)
            .apply(&TwoModeState::basis(3, 0, 3).unwrap())
            .unwrap();
        assert_eq!(top.norm(), 0.0);
    }

    #[test]
    fn ladder_commutator_is_identity_inside_window() {
        // [a, a†] = 1 holds on rows below the cutoff up to the rounding in
        // sqrt(n)^2; the very last diagonal entry is -n_max because the
        // raising operator truncates there.
        let n_max = 12;
        let a = lowering_matrix::<f64>(n_max);
        let ad = raising_matrix::<f64>(n_max);
        let comm = a.matmul(&ad).sub(&ad.matmul(&a));
        for r in 0..dim(n_max) {
            for c in 0..dim(n_max) {
                let v = comm.at(r, c);
                assert_eq!(v.im, 0.0);
                if r != c {
                    assert_eq!(v.re, 0.0, "off-diagonal at ({r},{c})");
                } else if r < n_max {
                    assert!((v.re - 1.0).abs() < 1e-14, "diagonal at {r}: {}", v.re);
                } else {
                    assert!(
                        (v.re + n_max as f64).abs() < 1e-13 * n_max as f64,
                        "truncated corner at {r}: {}",
                        v.re
                    );
                }
            }
        }
    }

    #[test]
    fn tail_mass_counts_total_occupation() {
        let mut s = TwoModeState::<f64>::vacuum(2);
        let amps = s.amplitudes_mut();
        amps[0] = Complex::new(0.8, 0.0); // |0,0>
        amps[flat_index(2, 1, 1)] = Complex::new(0.0, 0.5); // |1,1>
        amps[flat_index(2, 2, 2)] = Complex::new(0.1, 0.0); // |2,2>
        assert!((s.tail_mass(1) - 0.26).abs() < 1e-15);
        assert!((s.tail_mass(2) - 0.01).abs() < 1e-15);
        assert_eq!(s.tail_mass(4), 0.0);
    }

    #[test]
    fn normalize_rejects_zero() {
        let mut s = TwoModeState::<f64>::vacuum(1);
        s.amplitudes_mut()[0] = Complex::new(0.0, 0.0);
        assert!(s.normalized().is_err());
    }

    proptest! {
        #[test]
        fn flat_index_round_trips(
            (n_max, n_a, n_b) in (0usize..=40)
                .prop_flat_map(|nm| (Just(nm), 0..=nm, 0..=nm))
        ) {
            let idx = flat_index(n_max, n_a, n_b);
            prop_assert!(idx < total_dim(n_max));
            prop_assert_eq!(occupations(n_max, idx), (n_a, n_b));
        }

        #[test]
        fn flat_index_is_injective(
            (n_max, a, b) in (1usize..=20).prop_flat_map(|nm| {
                let pair = (0..=nm, 0..=nm);
                (Just(nm), pair.clone(), pair)
            })
        ) {
            if a != b {
                prop_assert_ne!(flat_index(n_max, a.0, a.1), flat_index(n_max, b.0, b.1));
            }
        }
    }
}
