//! Inference across an amplifier in both directions of time: forward
//! Born-rule probabilities, states retrodicted from measurement effects,
//! and the probability of an intermediate mode-b preparation given a past
//! mode-a preparation and a future outcome.
//!
//! The intermediate probability has two independent routes. The plain one
//! inverts the forward probabilities with Bayes' rule over the mode-b
//! ensemble. The second one never runs the amplifier at all: it evolves
//! the mode-a preparation together with the state retrodicted from the
//! mode-b outcome through the partner beam splitter of transmissivity 1/g
//! and reads the swapped roles off directly. Both must agree, and the
//! tests hold them together.
//!
//! Ensembles and measurements are kept general as validated types, but the
//! intermediate routes require every member to be diagonal in the photon
//! number basis; that covers the uniform-ensemble, photon-counting setting
//! the calculus is defined for, and keeps the evaluation inside the
//! conserved lines of the couplers.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::gaussian::{Coupler, OracleBlock};
use crate::linalg::{self, Mat};
use crate::scalar::Scalar;

/// Mode-b preparation ensemble: density matrices with prior weights.
#[derive(Debug, Clone)]
pub struct PreparationEnsemble<T> {
    states: Vec<Mat<T>>,
    priors: Vec<T>,
}

impl<T: Scalar> PreparationEnsemble<T> {
    /// Validates that the priors form a distribution, the members are
    /// Hermitian with unit trace on a common space, and the prior-weighted
    /// mixture is proportional to the identity within 1e-10, which is what
    /// makes retrodiction with no prior information consistent.
    pub fn new(states: Vec<Mat<T>>, priors: Vec<T>) -> Result<Self> {
        if states.is_empty() || states.len() != priors.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} states against {} priors",
                states.len(),
                priors.len()
            )));
        }
        let d = states[0].rows();
        let tol = T::of(1e-10);
        let mut prior_sum = T::zero();
        for &p in &priors {
            if !(p >= T::zero()) {
                return Err(Error::OutOfRange(format!("negative prior {p}")));
            }
            prior_sum = prior_sum + p;
        }
        if (prior_sum - T::one()).abs() > tol {
            return Err(Error::OutOfRange(format!("priors sum to {prior_sum}")));
        }
        let mut mix: Mat<T> = Mat::zeros(d, d);
        for (s, &p) in states.iter().zip(&priors) {
            if !s.is_square() || s.rows() != d {
                return Err(Error::DimensionMismatch(
                    "ensemble members on different spaces".into(),
                ));
            }
            if s.sub(&s.adjoint()).max_abs() > T::of(1e-12) {
                return Err(Error::OutOfRange("ensemble member not Hermitian".into()));
            }
            if (s.trace().re - T::one()).abs() > tol {
                return Err(Error::OutOfRange("ensemble member trace differs from 1".into()));
            }
            mix = mix.add(&s.scaled(Complex::new(p, T::zero())));
        }
        let c = mix.trace().re / T::of_usize(d);
        let dev = mix.sub(&Mat::identity(d).scaled(Complex::new(c, T::zero()))).max_abs();
        if dev > tol {
            return Err(Error::OutOfRange(format!(
                "prior-weighted mixture is {dev} away from a multiple of the identity"
            )));
        }
        Ok(PreparationEnsemble { states, priors })
    }

    /// The uniform ensemble of photon-number states on the window.
    pub fn uniform_fock(n_max: usize) -> Self {
        let d = n_max + 1;
        let p = T::one() / T::of_usize(d);
        let states = (0..d)
            .map(|k| {
                Mat::from_fn(d, d, |r, c| {
                    if r == k && c == k {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
            })
            .collect();
        PreparationEnsemble {
            states,
            priors: vec![p; d],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Single-mode dimension the members live on.
    pub fn dim(&self) -> usize {
        self.states[0].rows()
    }

    pub fn prior(&self, j: usize) -> T {
        self.priors[j]
    }

    pub fn state(&self, j: usize) -> &Mat<T> {
        &self.states[j]
    }

    fn is_uniform_fock(&self) -> bool {
        let p = self.priors[0];
        self.len() == self.dim()
            && self.priors.iter().all(|&q| (q - p).abs() <= T::of(1e-12))
            && self
                .states
                .iter()
                .enumerate()
                .all(|(k, s)| is_basis_projector(s, k))
    }
}

/// Photon-counting measurement: positive effects that sum to the identity.
#[derive(Debug, Clone)]
pub struct MeasurementModel<T> {
    effects: Vec<Mat<T>>,
}

impl<T: Scalar> MeasurementModel<T> {
    /// Validates positivity of each effect (smallest eigenvalue at least
    /// −1e-12) and completeness within 1e-10.
    pub fn new(effects: Vec<Mat<T>>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::DimensionMismatch("no effects".into()));
        }
        let d = effects[0].rows();
        let mut sum: Mat<T> = Mat::zeros(d, d);
        for e in &effects {
            if !e.is_square() || e.rows() != d {
                return Err(Error::DimensionMismatch(
                    "effects on different spaces".into(),
                ));
            }
            if e.sub(&e.adjoint()).max_abs() > T::of(1e-12) {
                return Err(Error::OutOfRange("effect not Hermitian".into()));
            }
            let eigs = linalg::hermitian_eigenvalues(e, T::of(1e-14));
            if eigs.first().copied().unwrap_or(T::zero()) < T::of(-1e-12) {
                return Err(Error::OutOfRange(format!(
                    "effect has negative eigenvalue {}",
                    eigs[0]
                )));
            }
            sum = sum.add(e);
        }
        if sum.sub(&Mat::identity(d)).max_abs() > T::of(1e-10) {
            return Err(Error::OutOfRange("effects do not sum to the identity".into()));
        }
        Ok(MeasurementModel { effects })
    }

    /// Projective photon-number measurement on the window.
    pub fn fock_projective(n_max: usize) -> Self {
        let d = n_max + 1;
        let effects = (0..d)
            .map(|k| {
                Mat::from_fn(d, d, |r, c| {
                    if r == k && c == k {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
            })
            .collect();
        MeasurementModel { effects }
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }

    pub fn effect(&self, m: usize) -> &Mat<T> {
        &self.effects[m]
    }

    fn is_fock_projective(&self) -> bool {
        self.len() == self.dim()
            && self
                .effects
                .iter()
                .enumerate()
                .all(|(k, e)| is_basis_projector(e, k))
    }
}

fn is_basis_projector<T: Scalar>(m: &Mat<T>, k: usize) -> bool {
    let d = m.rows();
    for r in 0..d {
        for c in 0..d {
            let want = if r == k && c == k { T::one() } else { T::zero() };
            if (m.at(r, c).re - want).abs() > T::of(1e-12) || m.at(r, c).im.abs() > T::of(1e-12) {
                return false;
            }
        }
    }
    true
}

/// Photon-number weights of an operator that is diagonal in the Fock
/// basis; anything with off-diagonal structure is rejected.
fn diagonal_weights<T: Scalar>(m: &Mat<T>, what: &str) -> Result<Vec<T>> {
    let d = m.rows();
    let mut w = Vec::with_capacity(d);
    for r in 0..d {
        for c in 0..d {
            let v = m.at(r, c);
            if r == c {
                w.push(v.re);
            } else if v.norm_sqr() > T::of(1e-24) {
                return Err(Error::OutOfRange(format!(
                    "{what} is not diagonal in the photon-number basis"
                )));
            }
        }
    }
    Ok(w)
}

/// State assigned to a measurement effect when inference runs backward:
/// the transpose in the Fock basis, normalized by the trace.
pub fn retrodicted_state<T: Scalar>(effect: &Mat<T>) -> Result<Mat<T>> {
    if !effect.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "effect is {}x{}",
            effect.rows(),
            effect.cols()
        )));
    }
    let tr = effect.trace();
    if tr.norm() <= T::of(1e-14) {
        return Err(Error::OutOfRange(
            "zero-trace effect retrodicts no state".into(),
        ));
    }
    Ok(effect
        .transpose()
        .scaled(Complex::new(T::one(), T::zero()) / tr))
}

/// Born-rule probability of counting (n, m) photons behind an amplifier of
/// the given gain seeded with |i, j⟩, evaluated on the window through the
/// exponentiated conserved line.
pub fn predictive_prob<T: Scalar>(
    i: usize,
    j: usize,
    n: usize,
    m: usize,
    gain: T,
    n_max: usize,
) -> Result<T> {
    let pdc = Coupler::parametric(gain)?;
    if i.max(j).max(n).max(m) > n_max {
        return Err(Error::CutoffTooSmall(format!(
            "occupations ({i},{j})→({n},{m}) beyond cutoff {n_max}"
        )));
    }
    if n + j != m + i {
        return Ok(T::zero());
    }
    let block = pdc.oracle_block(n_max, i as i64 - j as i64)?;
    let e = block
        .element(n, m, i, j)
        .expect("conserving entry lies on its own line");
    Ok(e * e)
}

fn check_window<T: Scalar>(
    ensemble: &PreparationEnsemble<T>,
    measurement: &MeasurementModel<T>,
    n_max: usize,
) -> Result<()> {
    if ensemble.dim() != n_max + 1 || measurement.dim() != n_max + 1 {
        return Err(Error::DimensionMismatch(format!(
            "ensemble dim {} / measurement dim {} against window {}",
            ensemble.dim(),
            measurement.dim(),
            n_max + 1
        )));
    }
    Ok(())
}

/// All intermediate probabilities P(n, j | i, m) for one past preparation
/// i and future outcome m, through Bayes' rule over the forward
/// probabilities: P(n,j|i,m) = p_j P(n,m|i,j) / Σ_{n',j'} p_{j'} P(n',m|i,j').
///
/// Entries are keyed (outcome index n on mode a, ensemble index j); pairs
/// with no conserving support are omitted, pairs whose probability happens
/// to vanish are kept.
pub fn intermediate_bayes<T: Scalar>(
    i: usize,
    m: usize,
    gain: T,
    ensemble: &PreparationEnsemble<T>,
    measurement: &MeasurementModel<T>,
    n_max: usize,
) -> Result<Vec<((usize, usize), T)>> {
    let pdc = Coupler::parametric(gain)?;
    check_window(ensemble, measurement, n_max)?;
    if i > n_max || m >= measurement.len() {
        return Err(Error::OutOfRange(format!(
            "preparation {i} or outcome {m} outside the model"
        )));
    }
    let wm = diagonal_weights(measurement.effect(m), "effect")?;
    let member_weights: Vec<Vec<T>> = (0..ensemble.len())
        .map(|j| diagonal_weights(ensemble.state(j), "ensemble member"))
        .collect::<Result<_>>()?;
    let effect_weights: Vec<Vec<T>> = (0..measurement.len())
        .map(|n| diagonal_weights(measurement.effect(n), "effect"))
        .collect::<Result<_>>()?;

    let mut lines: BTreeMap<i64, OracleBlock<T>> = BTreeMap::new();
    let mut entries = Vec::new();
    let mut denom = T::zero();
    for n in 0..measurement.len() {
        let wn = &effect_weights[n];
        for (j, wj) in member_weights.iter().enumerate() {
            let mut acc = T::zero();
            let mut supported = false;
            for (k, &wk) in wj.iter().enumerate() {
                if wk <= T::zero() {
                    continue;
                }
                let d = i as i64 - k as i64;
                // weight scan first so lines are only exponentiated when a
                // conserving term actually carries mass
                let mut any = false;
                for (mu, &wmu) in wm.iter().enumerate() {
                    let nu = mu as i64 + d;
                    if nu < 0 || nu > n_max as i64 {
                        continue;
                    }
                    if wmu > T::zero() && wn[nu as usize] > T::zero() {
                        any = true;
                        break;
                    }
                }
                if !any {
                    continue;
                }
                supported = true;
                if !lines.contains_key(&d) {
                    lines.insert(d, pdc.oracle_block(n_max, d)?);
                }
                let block = &lines[&d];
                for (mu, &wmu) in wm.iter().enumerate() {
                    let nu = mu as i64 + d;
                    if nu < 0 || nu > n_max as i64 {
                        continue;
                    }
                    let wa = wn[nu as usize];
                    if wmu <= T::zero() || wa <= T::zero() {
                        continue;
                    }
                    let e = block
                        .element(nu as usize, mu, i, k)
                        .expect("conserving entry lies on its own line");
                    acc = acc + wk * wa * wmu * e * e;
                }
            }
            if supported {
                let weighted = ensemble.prior(j) * acc;
                denom = denom + weighted;
                entries.push(((n, j), weighted));
            }
        }
    }
    if denom <= T::zero() {
        return Err(Error::NoSolution(format!(
            "outcome {m} unreachable from preparation {i}"
        )));
    }
    for (_, p) in &mut entries {
        *p = *p / denom;
    }
    Ok(entries)
}

/// The same table through the reversed picture: the past preparation and
/// the state retrodicted from the future outcome evolve through the
/// partner beam splitter of transmissivity 1/g, whose unitarity makes the
/// 1/g prefactor cancel against the Bayes denominator. The cancellation is
/// checked numerically in the uniform photon-counting setting rather than
/// assumed.
pub fn intermediate_ptr<T: Scalar>(
    i: usize,
    m: usize,
    gain: T,
    ensemble: &PreparationEnsemble<T>,
    measurement: &MeasurementModel<T>,
    n_max: usize,
) -> Result<Vec<((usize, usize), T)>> {
    let pdc = Coupler::parametric(gain)?;
    let bs = pdc.dual()?;
    check_window(ensemble, measurement, n_max)?;
    if i > n_max || m >= measurement.len() {
        return Err(Error::OutOfRange(format!(
            "preparation {i} or outcome {m} outside the model"
        )));
    }
    let sigma = retrodicted_state(measurement.effect(m))
        .map_err(|_| Error::NoSolution(format!("outcome {m} unreachable from preparation {i}")))?;
    let ws = diagonal_weights(&sigma, "retrodicted state")?;
    // Θ_j = p_j ρ_jᵀ; transposition is a no-op on diagonal weights
    let member_weights: Vec<Vec<T>> = (0..ensemble.len())
        .map(|j| diagonal_weights(ensemble.state(j), "ensemble member"))
        .collect::<Result<_>>()?;
    let effect_weights: Vec<Vec<T>> = (0..measurement.len())
        .map(|n| diagonal_weights(measurement.effect(n), "effect"))
        .collect::<Result<_>>()?;

    let mut sectors: BTreeMap<usize, OracleBlock<T>> = BTreeMap::new();
    let mut entries = Vec::new();
    let mut total = T::zero();
    for n in 0..measurement.len() {
        let wn = &effect_weights[n];
        for (j, wj) in member_weights.iter().enumerate() {
            let mut acc = T::zero();
            let mut supported = false;
            for (k, &wk) in ws.iter().enumerate() {
                if wk <= T::zero() {
                    continue;
                }
                let big_n = i + k;
                let mut any = false;
                for nu in big_n.saturating_sub(n_max)..=big_n.min(n_max) {
                    if wn[nu] > T::zero() && wj[big_n - nu] > T::zero() {
                        any = true;
                        break;
                    }
                }
                if !any {
                    continue;
                }
                supported = true;
                if !sectors.contains_key(&big_n) {
                    sectors.insert(big_n, bs.oracle_block(n_max, big_n as i64)?);
                }
                let block = &sectors[&big_n];
                for nu in big_n.saturating_sub(n_max)..=big_n.min(n_max) {
                    let mu = big_n - nu;
                    let wa = wn[nu];
                    let wb = wj[mu];
                    if wa <= T::zero() || wb <= T::zero() {
                        continue;
                    }
                    let e = block
                        .element(nu, mu, i, k)
                        .expect("conserving entry lies in its own sector");
                    acc = acc + wk * wa * wb * e * e;
                }
            }
            if supported {
                let weighted = ensemble.prior(j) * acc / gain;
                total = total + weighted;
                entries.push(((n, j), weighted));
            }
        }
    }
    if total <= T::zero() {
        return Err(Error::NoSolution(format!(
            "outcome {m} unreachable from preparation {i}"
        )));
    }
    if ensemble.is_uniform_fock() && measurement.is_fock_projective() && i + m <= n_max {
        let want = T::one() / (T::of_usize(ensemble.len()) * gain);
        if ((total - want) / want).abs() > T::of(1e-8) {
            return Err(Error::CutoffTooSmall(format!(
                "reversed-picture mass {total} drifted from {want}"
            )));
        }
    }
    for (_, p) in &mut entries {
        *p = *p / total;
    }
    Ok(entries)
}

/// Single entry of [`intermediate_bayes`]; zero for a pair that is out of
/// the table's support.
pub fn intermediate_prob_bayes<T: Scalar>(
    n: usize,
    j: usize,
    i: usize,
    m: usize,
    gain: T,
    ensemble: &PreparationEnsemble<T>,
    measurement: &MeasurementModel<T>,
    n_max: usize,
) -> Result<T> {
    let table = intermediate_bayes(i, m, gain, ensemble, measurement, n_max)?;
    Ok(table
        .iter()
        .find(|&&(key, _)| key == (n, j))
        .map(|&(_, p)| p)
        .unwrap_or_else(T::zero))
}

/// Single entry of [`intermediate_ptr`]; zero for a pair that is out of
/// the table's support.
pub fn intermediate_prob_ptr<T: Scalar>(
    n: usize,
    j: usize,
    i: usize,
    m: usize,
    gain: T,
    ensemble: &PreparationEnsemble<T>,
    measurement: &MeasurementModel<T>,
    n_max: usize,
) -> Result<T> {
    let table = intermediate_ptr(i, m, gain, ensemble, measurement, n_max)?;
    Ok(table
        .iter()
        .find(|&&(key, _)| key == (n, j))
        .map(|&(_, p)| p)
        .unwrap_or_else(T::zero))
}
