//! Partial transposition on mode b and the correspondence it generates
//! between the two coupler families.
//!
//! Swapping the incoming and outgoing mode-b indices of an amplifier of
//! gain g yields, up to the overall factor 1/√g, a beam splitter of
//! transmissivity 1/g. This module checks that statement element by
//! element through the closed forms, folds the windowed amplifier against
//! its own partial transpose to recover the scalar 1/g, evaluates the
//! equivalent trace identity with the dense oracles, and builds the
//! post-selected diagonal probe state that realizes the correspondence
//! operationally.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{self, FockOperator, TwoModeState};
use crate::gaussian::{Coupler, OracleBlock};
use crate::linalg::{self, Mat};
use crate::scalar::Scalar;

/// Both sides of the element-level correspondence and their gap.
#[derive(Debug, Clone, Copy)]
pub struct DualityResidual<T> {
    /// Amplifier element with the mode-b indices swapped: ⟨n,j|U_g|i,m⟩.
    pub lhs: T,
    /// Beam-splitter element ⟨n,m|U_{1/g}|i,j⟩ divided by √g.
    pub rhs: T,
    /// |lhs − rhs|.
    pub abs_err: T,
}

/// Swaps the incoming and outgoing mode-b indices of a two-mode operator:
/// entry ((n,m),(i,j)) of the result is entry ((n,j),(i,m)) of the input.
///
/// Involutive, and a real matrix stays real.
pub fn partial_transpose_b<T: Scalar>(op: &FockOperator<T>) -> FockOperator<T> {
    let d = op.n_max() + 1;
    FockOperator::from_mat(op.n_max(), linalg::partial_transpose_second(op.mat(), d, d))
        .expect("transposition preserves shape")
}

/// Compares ⟨n,j|U_g|i,m⟩ against g^{−1/2}·⟨n,m|U_{1/g}|i,j⟩, both sides
/// through the closed forms, so no window enters anywhere.
///
/// The two supports match exactly: the beam-splitter side conserves
/// i + j = n + m, which rearranges into the difference rule i − m = n − j
/// of the amplifier side.
pub fn check_duality<T: Scalar>(
    i: usize,
    j: usize,
    n: usize,
    m: usize,
    gain: T,
) -> Result<DualityResidual<T>> {
    let pdc = Coupler::parametric(gain)?;
    let bs = pdc.dual()?;
    let lhs = pdc.element(n, j, i, m);
    let rhs = bs.element(n, m, i, j) / gain.sqrt();
    Ok(DualityResidual {
        lhs,
        rhs,
        abs_err: (lhs - rhs).abs(),
    })
}

/// Result of folding the windowed amplifier against its partial transpose.
///
/// With V the amplifier on the window, W = (V†)^{T_b} V^{T_b} should be
/// 1/g times the identity. On a finite window that only holds where the
/// window has not mutilated the entries of V that the fold touches, and the
/// mutilation creeps in from the window edge much faster than the thermal
/// tail suggests, so the deviations are measured on the inside block of
/// total photon number up to a quarter of the cutoff and reported next to
/// the mass the amplified vacuum leaves beyond that block.
#[derive(Debug, Clone, Copy)]
pub struct WScalar<T> {
    /// Element ((0,0),(0,0)) of W; equals 1/g at any cutoff because the
    /// difference rule pins the vacuum-to-vacuum ladder.
    pub value: T,
    /// Largest off-diagonal magnitude of W on the inside block.
    pub max_off_diagonal: T,
    /// Largest deviation of an inside diagonal entry of W from `value`.
    pub max_diagonal_dev: T,
    /// Photon-number mass of the amplified vacuum beyond the inside block;
    /// the scalar picture is trustworthy only while this is small.
    pub tail_mass: T,
}

/// Folds the windowed amplifier of the given gain against its own partial
/// transpose and measures how far the result is from a multiple of the
/// identity.
///
/// W conserves total photon number, so it is assembled sector by sector
/// from the exponentiated difference lines of the amplifier; no matrix of
/// window-squared size is ever formed. The sector of total N collects
/// S_N[x,c] = V[(x,N−c),(c,N−x)] and contributes W_N = S_Nᵀ S_N.
pub fn w_scalar<T: Scalar>(gain: T, n_max: usize) -> Result<WScalar<T>> {
    let pdc = Coupler::parametric(gain)?;
    if n_max < 4 {
        return Err(Error::CutoffTooSmall(format!(
            "cutoff {n_max} leaves no inside block to test"
        )));
    }
    let probe = n_max / 4;
    let lambda = (gain - T::one()) / gain;
    let tail_mass = lambda.powi(probe as i32 + 1);

    let mut lines: BTreeMap<i64, OracleBlock<T>> = BTreeMap::new();
    let mut value = T::zero();
    let mut max_off_diagonal = T::zero();
    let mut max_diagonal_dev = T::zero();
    for total in 0..=probe {
        let len = total + 1;
        let mut s = vec![T::zero(); len * len];
        for x in 0..len {
            for c in 0..len {
                let d = x as i64 + c as i64 - total as i64;
                if !lines.contains_key(&d) {
                    lines.insert(d, pdc.oracle_block(n_max, d)?);
                }
                s[x * len + c] = lines[&d]
                    .element(x, total - c, c, total - x)
                    .expect("sector states lie inside the window");
            }
        }
        for a in 0..len {
            for c in 0..len {
                let mut acc = T::zero();
                for x in 0..len {
                    acc = acc + s[x * len + a] * s[x * len + c];
                }
                if total == 0 {
                    value = acc;
                }
                if a == c {
                    let dev = (acc - value).abs();
                    if dev > max_diagonal_dev {
                        max_diagonal_dev = dev;
                    }
                } else if acc.abs() > max_off_diagonal {
                    max_off_diagonal = acc.abs();
                }
            }
        }
    }
    Ok(WScalar {
        value,
        max_off_diagonal,
        max_diagonal_dev,
        tail_mass,
    })
}

/// Largest Fock index a single-mode operator touches in either its rows or
/// columns; zero for the zero matrix.
fn deepest_occupation<T: Scalar>(m: &Mat<T>) -> usize {
    let d = m.rows();
    for k in (0..d).rev() {
        for t in 0..d {
            if m.at(k, t).norm_sqr() > T::zero() || m.at(t, k).norm_sqr() > T::zero() {
                return k;
            }
        }
    }
    0
}

/// Tr[U (A₁⊗A₂) U† (B₁⊗B₂)] without forming any Kronecker product:
/// the trace equals Σ_{r,c} (U·A)[r,c] · conj((B†·U)[r,c]).
fn conjugated_trace<T: Scalar>(
    u: &Mat<T>,
    a1: &Mat<T>,
    a2: &Mat<T>,
    b1: &Mat<T>,
    b2: &Mat<T>,
) -> Complex<T> {
    let p1 = linalg::kron_mul_right(u, a1, a2);
    let p2 = linalg::kron_mul_left(&b1.adjoint(), &b2.adjoint(), u);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (x, y) in p1.data().iter().zip(p2.data()) {
        acc = acc + x * y.conj();
    }
    acc
}

/// Evaluates |Tr[U_g (Xa⊗Xb) U_g† (Ya⊗Yb)] −
/// (1/g)·Tr[U_{1/g} (Xa⊗Ybᵀ) U_{1/g}† (Ya⊗Xbᵀ)]| with both unitaries from
/// the dense oracle on the window.
///
/// The factors are single-mode operators on the window's mode space. They
/// must stay supported in its lower half; past that the amplifier trace
/// has already leaked out of the window and the gap measures truncation
/// instead of the identity.
pub fn check_trace_identity<T: Scalar>(
    xa: &Mat<T>,
    xb: &Mat<T>,
    ya: &Mat<T>,
    yb: &Mat<T>,
    gain: T,
    n_max: usize,
) -> Result<T> {
    let pdc = Coupler::parametric(gain)?;
    let bs = pdc.dual()?;
    let d1 = n_max + 1;
    for f in [xa, xb, ya, yb] {
        if !f.is_square() || f.rows() != d1 {
            return Err(Error::DimensionMismatch(format!(
                "factor is {}x{}, the window wants {d1}x{d1}",
                f.rows(),
                f.cols()
            )));
        }
    }
    let deepest = [xa, xb, ya, yb]
        .into_iter()
        .map(deepest_occupation)
        .max()
        .unwrap();
    if 2 * deepest > n_max {
        return Err(Error::CutoffTooSmall(format!(
            "factors reach occupation {deepest}, cutoff {n_max} leaves no headroom"
        )));
    }
    let u_pdc = pdc.dense_oracle(n_max);
    let u_bs = bs.dense_oracle(n_max);
    let lhs = conjugated_trace(u_pdc.mat(), xa, xb, ya, yb);
    let rhs = conjugated_trace(u_bs.mat(), xa, &yb.transpose(), ya, &xb.transpose());
    Ok((lhs - rhs / Complex::new(gain, T::zero())).norm())
}

/// Normalized state with amplitudes ∝ sinⁿθ on the diagonal pairs |n,n⟩.
///
/// This is what post-selecting both auxiliary photons of a two-photon
/// beam-splitter interferometer leaves behind, and for sinθ = tanh r it is
/// exactly the amplified vacuum of gain 1/cos²θ. The window must hold all
/// but 1e-12 of the geometric mass, otherwise the cutoff is rejected.
pub fn epr_probe_state<T: Scalar>(theta: T, n_max: usize) -> Result<TwoModeState<T>> {
    let s = theta.sin();
    if !(theta >= T::zero()) || theta >= T::FRAC_PI_2() {
        return Err(Error::OutOfRange(format!(
            "mixing angle {theta} outside [0, π/2)"
        )));
    }
    let s2 = s * s;
    let tail = s2.powi(n_max as i32 + 1);
    if tail > T::of(1e-12) {
        return Err(Error::CutoffTooSmall(format!(
            "diagonal mass {tail} beyond cutoff {n_max} exceeds 1e-12"
        )));
    }
    let mut amp = vec![Complex::new(T::zero(), T::zero()); fock::total_dim(n_max)];
    let mut a = T::one();
    for n in 0..=n_max {
        amp[fock::flat_index(n_max, n, n)] = Complex::new(a, T::zero());
        a = a * s;
    }
    TwoModeState::from_amplitudes(n_max, amp)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Factorials;

    fn fock_projector(d: usize, ket: usize, bra: usize) -> Mat<f64> {
        Mat::from_fn(d, d, |r, c| {
            if r == ket && c == bra {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn partial_transpose_fixes_identity_and_involutes() {
        let id = FockOperator::<f64>::identity(6);
        let pt = partial_transpose_b(&id);
        for (a, b) in pt.mat().data().iter().zip(id.mat().data()) {
            assert_eq!(a, b);
        }

        let op = Coupler::parametric(1.7).unwrap().dense_oracle(10);
        let pt = partial_transpose_b(&op);
        assert_eq!(pt.mat().max_abs_imag(), 0.0);
        let back = partial_transpose_b(&pt);
        for (a, b) in back.mat().data().iter().zip(op.mat().data()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mode_swapped_amplifier_is_a_rescaled_beam_splitter() {
        // dense route; the window is sized so entries with indices up to 3
        // carry their truncation error below 1e-9
        let gain = 1.5f64;
        let w = 36;
        let pdc = Coupler::parametric(gain).unwrap().dense_oracle(w);
        let bs = Coupler::beam_splitter(1.0 / gain).unwrap().dense_oracle(w);
        let swapped = partial_transpose_b(&pdc);
        let mut worst = 0.0f64;
        for n in 0..=3 {
            for m in 0..=3 {
                for i in 0..=3 {
                    for j in 0..=3 {
                        let got = swapped.element(n, m, i, j).re;
                        let want = bs.element(n, m, i, j).re / gain.sqrt();
                        worst = worst.max((got - want).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-9, "dense mode-swap residual {worst:e}");
    }

    #[test]
    fn sector_blocks_witness_the_same_correspondence() {
        // same statement at gain 2 through the per-line blocks, which keep
        // the memory flat and allow the wider window the larger coupling
        // needs
        let gain = 2.0f64;
        let w = 49;
        let pdc = Coupler::parametric(gain).unwrap();
        let bs = Coupler::beam_splitter(1.0 / gain).unwrap();
        let mut worst = 0.0f64;
        for n in 0..=3usize {
            for m in 0..=3usize {
                for i in 0..=3usize {
                    for j in 0..=3usize {
                        let lhs = pdc
                            .oracle_block(w, n as i64 - j as i64)
                            .unwrap()
                            .element(n, j, i, m)
                            .unwrap_or(0.0);
                        let rhs = bs
                            .oracle_block(w, (n + m) as i64)
                            .unwrap()
                            .element(n, m, i, j)
                            .unwrap_or(0.0)
                            / gain.sqrt();
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-9, "sector mode-swap residual {worst:e}");
    }

    #[test]
    fn element_correspondence_holds_on_a_grid() {
        let mut worst = 0.0f64;
        for &gain in &[1.25, 1.5, 2.0, std::f64::consts::E, 4.0] {
            for i in 0..=10 {
                for j in 0..=10 {
                    for n in 0..=10 {
                        for m in 0..=10 {
                            let r = check_duality(i, j, n, m, gain).unwrap();
                            worst = worst.max(r.abs_err);
                        }
                    }
                }
            }
        }
        assert!(worst < 1e-10, "closed-form correspondence residual {worst:e}");
    }

    #[test]
    fn correspondence_special_cases_match_hyperbolic_forms() {
        // spontaneous family: both sides equal tanhⁿr / cosh r
        for &gain in &[1.3f64, 2.0, 3.7] {
            let r = gain.sqrt().acosh();
            for n in 0..=10 {
                let want = r.tanh().powi(n as i32) / r.cosh();
                let d = check_duality(0, n, n, 0, gain).unwrap();
                assert!((d.lhs - want).abs() < 1e-12, "lhs at n={n} g={gain}");
                assert!((d.rhs - want).abs() < 1e-12, "rhs at n={n} g={gain}");
            }
        }

        // stimulated family seeded with pairs on one side: both sides equal
        // binom(n+m, m)^{1/2} tanhⁿr / cosh^{m+1} r
        let f = Factorials::<f64>::new(24);
        let gain = 2.5f64;
        let r = gain.sqrt().acosh();
        for n in 0..=5usize {
            for m in 0..=5usize {
                let binom = f.fact(n + m) / (f.fact(n) * f.fact(m));
                let want = binom.sqrt() * r.tanh().powi(n as i32) / r.cosh().powi(m as i32 + 1);
                let d = check_duality(m, n, n + m, 0, gain).unwrap();
                assert!((d.lhs - want).abs() < 1e-12, "lhs at n={n} m={m}");
                assert!((d.rhs - want).abs() < 1e-12, "rhs at n={n} m={m}");
            }
        }

        // off the common support both sides are exact zeros
        for &(i, j, n, m) in &[(1usize, 0usize, 0usize, 0usize), (2, 3, 1, 1), (0, 0, 3, 2)] {
            let d = check_duality(i, j, n, m, 2.0).unwrap();
            assert_eq!(d.lhs, 0.0);
            assert_eq!(d.rhs, 0.0);
        }
    }

    #[test]
    fn w_scalar_recovers_the_inverse_gain() {
        let w = w_scalar(1.0f64, 8).unwrap();
        assert!((w.value - 1.0).abs() < 1e-15);
        assert_eq!(w.max_off_diagonal, 0.0);
        assert!(w.max_diagonal_dev < 1e-15);
        assert_eq!(w.tail_mass, 0.0);

        let w = w_scalar(2.0f64, 40).unwrap();
        assert!((w.value - 0.5).abs() < 1e-8, "value {}", w.value);
        assert_eq!(w.tail_mass, 0.5f64.powi(11));

        let w = w_scalar(3.0f64, 60).unwrap();
        assert!((w.value - 1.0 / 3.0).abs() < 1e-8, "value {}", w.value);

        assert!(matches!(
            w_scalar(2.0f64, 1),
            Err(Error::CutoffTooSmall(_))
        ));
    }

    #[test]
    fn w_scalar_is_scalar_on_the_inside_block() {
        // windows sized to keep the edge mutilation out of the tested block
        let w = w_scalar(1.5f64, 52).unwrap();
        let expected_tail = (1.0f64 / 3.0).powi(14);
        assert!((w.tail_mass - expected_tail).abs() < 1e-15 * expected_tail.max(1.0));
        assert!(w.max_off_diagonal < 1e-8, "off-diagonal {:e}", w.max_off_diagonal);
        assert!(w.max_diagonal_dev < 1e-8, "diagonal dev {:e}", w.max_diagonal_dev);

        let w = w_scalar(2.0f64, 80).unwrap();
        assert!(w.max_off_diagonal < 1e-8, "off-diagonal {:e}", w.max_off_diagonal);
        assert!(w.max_diagonal_dev < 1e-8, "diagonal dev {:e}", w.max_diagonal_dev);
    }

    #[test]
    fn trace_identity_holds_for_fock_projectors() {
        let gain = 2.0f64;
        let w = 30;
        let d = w + 1;
        // (ket, bra) index pairs for the four factors of each case
        let cases: [[(usize, usize); 4]; 8] = [
            [(1, 1), (1, 1), (1, 1), (1, 1)],
            [(1, 1), (1, 1), (2, 2), (2, 2)],
            [(0, 0), (0, 0), (3, 3), (3, 3)],
            [(2, 0), (2, 0), (0, 2), (0, 2)],
            [(1, 0), (0, 1), (2, 1), (1, 2)],
            [(3, 1), (1, 3), (1, 1), (2, 2)],
            [(0, 1), (1, 0), (1, 2), (2, 1)],
            [(2, 2), (1, 1), (3, 3), (0, 0)],
        ];
        for case in cases {
            let [xa, xb, ya, yb] =
                case.map(|(ket, bra)| fock_projector(d, ket, bra));
            let resid = check_trace_identity(&xa, &xb, &ya, &yb, gain, w).unwrap();
            assert!(resid < 1e-8, "projector case {case:?} residual {resid:e}");
        }

        // one amplifier-side value pinned independently: projecting the
        // two-pair output of a seeded pair gives its transition probability
        let xa = fock_projector(d, 1, 1);
        let xb = fock_projector(d, 1, 1);
        let ya = fock_projector(d, 2, 2);
        let yb = fock_projector(d, 2, 2);
        let u = Coupler::parametric(gain).unwrap().dense_oracle(w);
        let lhs = conjugated_trace(u.mat(), &xa, &xb, &ya, &yb);
        let want = crate::gaussian::pdc_element(2, 2, 1, 1, gain).powi(2);
        assert!((lhs.re - want).abs() < 1e-9);
        assert!(lhs.im.abs() < 1e-14);
    }

    #[test]
    fn trace_identity_holds_for_random_hermitian_factors() {
        let w = 30;
        let d = w + 1;
        // deterministic xorshift fill, hermitized, supported on indices <= 3
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut hermitian = |d: usize| {
            let mut m: Mat<f64> = Mat::zeros(d, d);
            for r in 0..=3usize {
                for c in 0..=3usize {
                    m.set(r, c, Complex::new(next(), next()));
                }
            }
            m.add(&m.adjoint()).scaled(Complex::new(0.5, 0.0))
        };
        let (xa, xb, ya, yb) = (hermitian(d), hermitian(d), hermitian(d), hermitian(d));
        let resid = check_trace_identity(&xa, &xb, &ya, &yb, 1.5, w).unwrap();
        assert!(resid < 1e-7, "hermitian residual {resid:e}");
    }

    #[test]
    fn trace_identity_rejects_deep_or_misshapen_factors() {
        let d = 31;
        let id = Mat::<f64>::identity(d);
        let deep = fock_projector(d, 16, 16);
        assert!(matches!(
            check_trace_identity(&deep, &id, &id, &id, 2.0, 30),
            Err(Error::CutoffTooSmall(_))
        ));
        let small = Mat::<f64>::identity(5);
        assert!(matches!(
            check_trace_identity(&small, &id, &id, &id, 2.0, 30),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn epr_probe_matches_the_amplified_vacuum() {
        // the windowed evolution of the vacuum deviates from the geometric
        // law at its top edge by about λ^{n_max/2}, so the window is sized
        // to push that below the compared tolerance
        let gain = 2.0f64;
        let r = gain.sqrt().acosh();
        let theta = r.tanh().asin();
        let n_max = 64;
        let probe = epr_probe_state(theta, n_max).unwrap();
        for n in 0..=n_max {
            let want = r.tanh().powi(n as i32) / r.cosh();
            assert!(
                (probe.amp(n, n).re - want).abs() < 1e-12,
                "geometric law at n={n}"
            );
        }
        let tmsv = Coupler::parametric(gain)
            .unwrap()
            .apply(&TwoModeState::vacuum(n_max));
        for n in 0..=n_max {
            let diff = (probe.amp(n, n).re - tmsv.amp(n, n).re).abs();
            assert!(diff < 1e-10, "diagonal amplitude at n={n} off by {diff:e}");
        }
        assert!(probe.amp(3, 5).norm_sqr() == 0.0);
        assert!((probe.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epr_probe_edges() {
        let probe = epr_probe_state(1e-4f64, 6).unwrap();
        assert!((probe.amp(0, 0).re - 1.0).abs() < 1e-8);
        assert!((probe.norm() - 1.0).abs() < 1e-12);

        let probe = epr_probe_state(0.7f64, 32).unwrap();
        assert!((probe.norm() - 1.0).abs() < 1e-12);

        assert!(matches!(
            epr_probe_state(1.4f64, 40),
            Err(Error::CutoffTooSmall(_))
        ));
        assert!(matches!(epr_probe_state(1.6f64, 40), Err(Error::OutOfRange(_))));
        assert!(matches!(epr_probe_state(-0.1f64, 40), Err(Error::OutOfRange(_))));
    }
}
