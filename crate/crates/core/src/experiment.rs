//! Monte Carlo model of a heralded two-photon amplifier run.
//!
//! Each shot draws pair counts from two weak herald amplifiers, routes the
//! idlers to trigger detectors and the signals into the main amplifier,
//! samples the main output along its conserved line, and pushes every path
//! through loss, detection inefficiency and detector saturation. Shots are
//! keyed to independent counter-mode streams of one seeded generator, so a
//! run can be split into ranges and merged without changing a single
//! sample.
//!
//! Analysis slices the tally on double trigger clicks and grades the
//! surviving coincidence rate against the one-quarter benchmark that no
//! distinguishable-photon model can beat at gain two.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{transition_probabilities, Coupler};
use crate::interference::partial_coincidence;

/// Decibel measure of the squeezing needed for a given amplifier gain.
pub fn squeezing_db(gain: f64) -> Result<f64> {
    if !(gain >= 1.0) {
        return Err(Error::OutOfRange(format!("gain {gain} below 1")));
    }
    Ok(20.0 * gain.sqrt().acosh() / std::f64::consts::LN_10)
}

/// Run parameters. Exactly one of `gain`, `squeezing`, `squeezing_db`
/// fixes the main amplifier; everything else has an ideal-apparatus
/// default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gain: Option<f64>,
    pub squeezing: Option<f64>,
    pub squeezing_db: Option<f64>,
    /// Gain of the two herald amplifiers; kept low so double pairs stay rare.
    pub herald_gain: f64,
    /// Survival probability of each propagation path.
    pub transmissivity: f64,
    /// Click probability per photon reaching a detector.
    pub detector_efficiency: f64,
    /// Detector saturation: counts above this read as this.
    pub pnr_max: u32,
    pub shots: u64,
    pub seed: u64,
    /// Overlap s of the two heralded photons; 1 is fully indistinguishable.
    pub indistinguishability: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gain: None,
            squeezing: None,
            squeezing_db: None,
            herald_gain: 1.05,
            transmissivity: 1.0,
            detector_efficiency: 1.0,
            pnr_max: 10,
            shots: 0,
            seed: 0,
            indistinguishability: 1.0,
        }
    }
}

impl ExperimentConfig {
    /// Lossless run at the given main gain.
    pub fn ideal(gain: f64, shots: u64, seed: u64) -> Self {
        ExperimentConfig {
            gain: Some(gain),
            shots,
            seed,
            ..ExperimentConfig::default()
        }
    }

    /// Main amplifier gain from whichever parameterization was given.
    pub fn resolved_gain(&self) -> Result<f64> {
        let set = [self.gain, self.squeezing, self.squeezing_db]
            .iter()
            .filter(|v| v.is_some())
            .count();
        if set != 1 {
            return Err(Error::InvalidConfig(format!(
                "exactly one of gain, squeezing, squeezing_db must be set; got {set}"
            )));
        }
        let g = if let Some(g) = self.gain {
            g
        } else if let Some(r) = self.squeezing {
            if r < 0.0 {
                return Err(Error::InvalidConfig(format!("negative squeezing {r}")));
            }
            r.cosh().powi(2)
        } else {
            let db = self.squeezing_db.unwrap();
            if db < 0.0 {
                return Err(Error::InvalidConfig(format!("negative squeezing {db} dB")));
            }
            (db * std::f64::consts::LN_10 / 20.0).cosh().powi(2)
        };
        if !(g >= 1.0) || !g.is_finite() {
            return Err(Error::InvalidConfig(format!("main gain {g} outside [1, ∞)")));
        }
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.resolved_gain()?;
        if !(self.herald_gain >= 1.0) || !self.herald_gain.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "herald gain {} outside [1, ∞)",
                self.herald_gain
            )));
        }
        for (name, v) in [
            ("transmissivity", self.transmissivity),
            ("detector_efficiency", self.detector_efficiency),
            ("indistinguishability", self.indistinguishability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.pnr_max < 1 {
            return Err(Error::InvalidConfig("pnr_max must be at least 1".into()));
        }
        if self.shots < 1 {
            return Err(Error::InvalidConfig("shots must be at least 1".into()));
        }
        Ok(())
    }
}

/// Click record of one shot: trigger a, trigger b, output a, output b.
pub type ClickPattern = (u32, u32, u32, u32);

/// Histogram of click patterns over a range of shots.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentTally {
    pub counts: BTreeMap<ClickPattern, u64>,
    pub shots_run: u64,
}

impl ExperimentTally {
    pub fn merge(&mut self, other: &ExperimentTally) {
        for (&key, &c) in &other.counts {
            *self.counts.entry(key).or_insert(0) += c;
        }
        self.shots_run += other.shots_run;
    }
}

/// How the run came out against the one-quarter benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// The coincidence rate sits below the reach of distinguishable photons.
    Quantum,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub shots: u64,
    /// Shots whose two triggers each saw exactly one photon.
    pub heralded: u64,
    /// Heralded shots with exactly one click behind each output.
    pub coincidences: u64,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub z: f64,
    pub benchmark: f64,
    pub gain: f64,
    /// Lossless heralded coincidence probability at the configured overlap.
    pub predicted_coincidence: f64,
    /// Coincidence probability of the best distinguishable-photon model.
    pub classical_floor: f64,
    pub verdict: Verdict,
}

fn sample_geometric(rng: &mut ChaCha8Rng, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let u: f64 = rng.gen();
    ((1.0 - u).ln() / lambda.ln()).floor() as usize
}

fn thin(rng: &mut ChaCha8Rng, count: usize, p: f64) -> usize {
    if p >= 1.0 {
        return count;
    }
    (0..count).filter(|_| rng.gen::<f64>() < p).count()
}

fn detect(rng: &mut ChaCha8Rng, count: usize, config: &ExperimentConfig) -> u32 {
    let arrived = thin(rng, count, config.transmissivity);
    let clicked = thin(rng, arrived, config.detector_efficiency);
    (clicked as u32).min(config.pnr_max)
}

/// Cumulative output distribution of the main amplifier for one input.
struct OutcomeTable {
    outcomes: Vec<(usize, usize)>,
    cumulative: Vec<f64>,
}

impl OutcomeTable {
    fn build(coupler: &Coupler<f64>, i: usize, j: usize, s: f64) -> Result<OutcomeTable> {
        let g = coupler.gain().unwrap_or(1.0);
        let lambda = (g - 1.0) / g;
        let reach = if lambda > 0.0 {
            (30.0 / -lambda.ln()).ceil() as usize
        } else {
            0
        };
        let n_cap = i + j + reach.max(40);
        let raw = transition_probabilities(coupler, i, j, n_cap);
        let total: f64 = raw.iter().map(|&(_, p)| p).sum();
        let mut probs: Vec<((usize, usize), f64)> =
            raw.into_iter().map(|(o, p)| (o, p / total)).collect();
        if s < 1.0 && (i, j) == (1, 1) {
            // the overlap only moves the double-pair outcome; the rest of
            // the line rescales to keep the distribution normalized
            let p_q = probs
                .iter()
                .find(|&&(o, _)| o == (1, 1))
                .map(|&(_, p)| p)
                .unwrap_or(0.0);
            if 1.0 - p_q > 1e-14 {
                let p_s = partial_coincidence(coupler, s)?;
                let rescale = (1.0 - p_s) / (1.0 - p_q);
                for (o, p) in &mut probs {
                    *p = if *o == (1, 1) { p_s } else { *p * rescale };
                }
            }
        }
        let mut outcomes = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (o, p) in probs {
            if p > 0.0 {
                acc += p;
                outcomes.push(o);
                cumulative.push(acc);
            }
        }
        Ok(OutcomeTable { outcomes, cumulative })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (usize, usize) {
        let total = *self.cumulative.last().expect("line never empties");
        let u = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.outcomes[idx.min(self.outcomes.len() - 1)]
    }
}

/// Simulate shots `lo..hi` of the configured run. Shot k draws from
/// stream k of the seeded generator, so ranges partition cleanly.
pub fn run_shot_range(config: &ExperimentConfig, lo: u64, hi: u64) -> Result<ExperimentTally> {
    config.validate()?;
    if lo > hi || hi > config.shots {
        return Err(Error::OutOfRange(format!(
            "shot range {lo}..{hi} outside 0..{}",
            config.shots
        )));
    }
    let main = Coupler::parametric(config.resolved_gain()?)?;
    let herald_lambda = (config.herald_gain - 1.0) / config.herald_gain;
    let mut tables: BTreeMap<(usize, usize), OutcomeTable> = BTreeMap::new();
    let mut tally = ExperimentTally::default();
    for shot in lo..hi {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(shot);

        let pairs_a = sample_geometric(&mut rng, herald_lambda);
        let pairs_b = sample_geometric(&mut rng, herald_lambda);
        let trigger_a = detect(&mut rng, pairs_a, config);
        let trigger_b = detect(&mut rng, pairs_b, config);
        let i = thin(&mut rng, pairs_a, config.transmissivity);
        let j = thin(&mut rng, pairs_b, config.transmissivity);

        if !tables.contains_key(&(i, j)) {
            tables.insert(
                (i, j),
                OutcomeTable::build(&main, i, j, config.indistinguishability)?,
            );
        }
        let (n, m) = tables[&(i, j)].sample(&mut rng);
        let out_a = detect(&mut rng, n, config);
        let out_b = detect(&mut rng, m, config);

        *tally
            .counts
            .entry((trigger_a, trigger_b, out_a, out_b))
            .or_insert(0) += 1;
    }
    tally.shots_run = hi - lo;
    Ok(tally)
}

/// Simulate every configured shot.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentTally> {
    run_shot_range(config, 0, config.shots)
}

/// Slice the tally on double herald clicks and grade the coincidence rate.
pub fn analyze(tally: &ExperimentTally, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let gain = config.resolved_gain()?;
    let mut heralded = 0u64;
    let mut coincidences = 0u64;
    for (&(ta, tb, oa, ob), &c) in &tally.counts {
        if ta == 1 && tb == 1 {
            heralded += c;
            if oa == 1 && ob == 1 {
                coincidences += c;
            }
        }
    }
    if heralded == 0 {
        return Err(Error::NoSolution(
            "no shot produced a double herald click".into(),
        ));
    }
    let n = heralded as f64;
    let p = coincidences as f64 / n;
    let z = 5.0;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let wilson_low = (center - half).max(0.0);
    let wilson_high = (center + half).min(1.0);
    let benchmark = 0.25;
    let main = Coupler::parametric(gain)?;
    let verdict = if wilson_high < benchmark {
        Verdict::Quantum
    } else {
        Verdict::Inconclusive
    };
    Ok(ExperimentReport {
        shots: tally.shots_run,
        heralded,
        coincidences,
        rate: p,
        wilson_low,
        wilson_high,
        z,
        benchmark,
        gain,
        predicted_coincidence: partial_coincidence(&main, config.indistinguishability)?,
        classical_floor: crate::interference::classical_pdc(gain)?,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reruns_are_identical_and_ranges_partition() {
        let mut config = ExperimentConfig::ideal(2.0, 20_000, 7);
        config.transmissivity = 0.8;
        config.detector_efficiency = 0.9;
        let full = run_experiment(&config).unwrap();
        let again = run_experiment(&config).unwrap();
        assert_eq!(full, again);

        let mut left = run_shot_range(&config, 0, 9_000).unwrap();
        let right = run_shot_range(&config, 9_000, 20_000).unwrap();
        left.merge(&right);
        assert_eq!(left, full);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::ideal(2.0, 0, 0);
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        c.shots = 1;
        assert!(c.validate().is_ok());
        c.squeezing = Some(0.5);
        assert!(matches!(c.resolved_gain(), Err(Error::InvalidConfig(_))));
        c.gain = None;
        assert!((c.resolved_gain().unwrap() - 0.5f64.cosh().powi(2)).abs() < 1e-15);
        c.transmissivity = 1.5;
        assert!(c.validate().is_err());
        c.transmissivity = 1.0;
        c.herald_gain = 0.9;
        assert!(c.validate().is_err());

        let single = run_experiment(&ExperimentConfig::ideal(2.0, 1, 3)).unwrap();
        assert_eq!(single.shots_run, 1);
        assert_eq!(single.counts.values().sum::<u64>(), 1);
    }

    #[test]
    fn toml_configs_round_trip() {
        let text = r#"
            squeezing_db = 7.65551370675726
            shots = 100
            transmissivity = 0.9
        "#;
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        assert!((config.resolved_gain().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(config.pnr_max, 10);
        assert_eq!(config.seed, 0);
        assert!((config.herald_gain - 1.05).abs() < 1e-15);

        let bad: std::result::Result<ExperimentConfig, _> = toml::from_str("shotz = 5");
        assert!(bad.is_err());
        let both: ExperimentConfig = toml::from_str("gain = 2.0\nsqueezing = 0.5\nshots = 1").unwrap();
        assert!(both.validate().is_err());
    }

    #[test]
    fn squeezing_scale() {
        assert!((squeezing_db(2.0).unwrap() - 7.65551370675726).abs() < 1e-12);
        assert!(squeezing_db(0.5).is_err());
        let c = Coupler::<f64>::from_squeezing_db(4.0).unwrap();
        assert!((squeezing_db(c.gain().unwrap()).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gain_two_coincidences_vanish_identically() {
        let config = ExperimentConfig::ideal(2.0, 150_000, 11);
        let tally = run_experiment(&config).unwrap();
        let report = analyze(&tally, &config).unwrap();
        assert!(report.heralded > 100, "heralded slice too thin to test");
        assert_eq!(report.coincidences, 0);
        assert_eq!(report.verdict, Verdict::Quantum);
        assert!(report.wilson_high < 0.25);
        assert_eq!(report.predicted_coincidence, 0.0);
    }

    #[test]
    fn gain_four_rate_matches_the_prediction() {
        let config = ExperimentConfig::ideal(4.0, 400_000, 5);
        let tally = run_experiment(&config).unwrap();
        let report = analyze(&tally, &config).unwrap();
        let want = 0.0625;
        let sigma = (want * (1.0 - want) / report.heralded as f64).sqrt();
        assert!(
            (report.rate - want).abs() < 5.0 * sigma,
            "rate {} vs {want} with sigma {sigma:e}",
            report.rate
        );
        assert!((report.predicted_coincidence - want).abs() < 1e-15);
        assert_eq!(report.verdict, Verdict::Quantum);
    }

    #[test]
    fn heralded_outputs_follow_the_conserved_line() {
        for &gain in &[1.5f64, 2.0, 3.0] {
            let mut config = ExperimentConfig::ideal(gain, 250_000, 23);
            config.pnr_max = 64;
            let tally = run_experiment(&config).unwrap();
            let mut total = 0u64;
            let mut observed: BTreeMap<(u32, u32), u64> = BTreeMap::new();
            for (&(ta, tb, oa, ob), &c) in &tally.counts {
                if ta == 1 && tb == 1 {
                    total += c;
                    *observed.entry((oa, ob)).or_insert(0) += c;
                }
            }
            let main = Coupler::parametric(gain).unwrap();
            let line = transition_probabilities(&main, 1, 1, 200);
            let norm: f64 = line.iter().map(|&(_, p)| p).sum();
            let mut tv = 0.0;
            for &((n, m), p) in &line {
                let emp = observed
                    .remove(&(n as u32, m as u32))
                    .map(|c| c as f64 / total as f64)
                    .unwrap_or(0.0);
                tv += (p / norm - emp).abs();
            }
            for (_, &c) in &observed {
                tv += c as f64 / total as f64;
            }
            tv /= 2.0;
            let bound = 4.0 / (total as f64).sqrt();
            assert!(tv < bound, "TV {tv} above {bound} at gain {gain}");
        }
    }

    #[test]
    fn dark_apparatus_never_clicks() {
        let mut config = ExperimentConfig::ideal(2.0, 10_000, 1);
        config.transmissivity = 0.0;
        let tally = run_experiment(&config).unwrap();
        assert_eq!(tally.counts.len(), 1);
        assert_eq!(tally.counts[&(0, 0, 0, 0)], 10_000);
        assert!(matches!(
            analyze(&tally, &config),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn threshold_triggers_admit_more_multipair_background() {
        let mut resolving = ExperimentConfig::ideal(2.0, 150_000, 13);
        resolving.herald_gain = 1.3;
        let mut threshold = resolving.clone();
        threshold.pnr_max = 1;
        let fine = analyze(&run_experiment(&resolving).unwrap(), &resolving).unwrap();
        let coarse = analyze(&run_experiment(&threshold).unwrap(), &threshold).unwrap();
        // saturated triggers cannot tell one pair from many, and saturated
        // outputs collapse every bright event onto (1, 1)
        assert!(coarse.heralded > fine.heralded);
        assert!(coarse.rate > fine.rate);
        assert_eq!(fine.coincidences, 0);
    }

    #[test]
    fn overlap_interpolates_the_coincidence_rate() {
        let mut rates = Vec::new();
        for &s in &[0.0f64, 0.5, 1.0] {
            let mut config = ExperimentConfig::ideal(2.0, 250_000, 29);
            config.indistinguishability = s;
            let tally = run_experiment(&config).unwrap();
            let report = analyze(&tally, &config).unwrap();
            let want = 0.25 * (1.0 - s);
            assert!((report.predicted_coincidence - want).abs() < 1e-15);
            let sigma = (want.max(0.01) / report.heralded as f64).sqrt();
            assert!(
                (report.rate - want).abs() < 5.0 * sigma,
                "rate {} vs {want} at s={s}",
                report.rate
            );
            rates.push(report.rate);
        }
        assert!(rates[0] > rates[1] && rates[1] > rates[2]);
        assert_eq!(rates[2], 0.0);
    }

    #[test]
    fn near_threshold_gain_is_inconclusive() {
        let config = ExperimentConfig::ideal(1.277793838942705, 250_000, 17);
        let tally = run_experiment(&config).unwrap();
        let report = analyze(&tally, &config).unwrap();
        assert!((report.predicted_coincidence - 0.25).abs() < 1e-12);
        assert_eq!(report.verdict, Verdict::Inconclusive);
    }
}
