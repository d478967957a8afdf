//! The five commands. Each builder resolves its parameterization, runs the
//! library, and returns a record plus an optional tolerance complaint that
//! the caller turns into a distinct exit code.

use clap::{ArgGroup, Args, ValueEnum};

use fockdual::duality::check_duality;
use fockdual::experiment::{analyze, run_experiment, squeezing_db, ExperimentConfig, Verdict};
use fockdual::gaussian::{bs_element, pdc_element, Coupler};
use fockdual::interference::{
    classical_bs, classical_pdc, coincidence_bs, coincidence_pdc, pair_distribution,
    partial_coincidence,
};
use fockdual::retrodiction::{
    intermediate_bayes, intermediate_ptr, MeasurementModel, PreparationEnsemble,
};

use crate::output::{Field, OutputRecord};

pub enum CliError {
    Validation(String),
    Tolerance(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Tolerance(m) => write!(f, "{m}"),
        }
    }
}

impl From<fockdual::Error> for CliError {
    fn from(e: fockdual::Error) -> Self {
        match e {
            fockdual::Error::CutoffTooSmall(_) => CliError::Tolerance(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub struct Outcome {
    pub record: OutputRecord,
    pub tolerance_failure: Option<String>,
}

impl Outcome {
    fn clean(record: OutputRecord) -> Self {
        Outcome {
            record,
            tolerance_failure: None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CouplerKind {
    Bs,
    Pdc,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum ParamKind {
    Eta,
    Theta,
    Gain,
    Squeezing,
    Db,
}

impl ParamKind {
    fn name(self) -> &'static str {
        match self {
            ParamKind::Eta => "eta",
            ParamKind::Theta => "theta",
            ParamKind::Gain => "gain",
            ParamKind::Squeezing => "squeezing",
            ParamKind::Db => "squeezing_db",
        }
    }
}

#[derive(Args)]
pub struct DipScanArgs {
    /// Coupler to scan
    #[arg(long, value_enum, default_value_t = CouplerKind::Bs)]
    pub coupler: CouplerKind,
    /// Parameterization of the scanned range (defaults to eta or gain)
    #[arg(long, value_enum)]
    pub parameter: Option<ParamKind>,
    /// Range start (defaults to 0 for eta, 1 for gain)
    #[arg(long)]
    pub from: Option<f64>,
    /// Range end (defaults to 1 for eta, 4 for gain)
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    /// Path overlap s, from 0 (distinguishable) to 1
    #[arg(long, default_value_t = 1.0)]
    pub overlap: f64,
}

pub fn dip_scan(args: &DipScanArgs) -> Result<Outcome, CliError> {
    let param = args.parameter.unwrap_or(match args.coupler {
        CouplerKind::Bs => ParamKind::Eta,
        CouplerKind::Pdc => ParamKind::Gain,
    });
    let compatible = matches!(
        (args.coupler, param),
        (CouplerKind::Bs, ParamKind::Eta | ParamKind::Theta)
            | (CouplerKind::Pdc, ParamKind::Gain | ParamKind::Squeezing | ParamKind::Db)
    );
    if !compatible {
        return Err(CliError::Validation(format!(
            "parameter {} does not apply to this coupler",
            param.name()
        )));
    }
    let (from, to) = match (args.from, args.to, param) {
        (Some(a), Some(b), _) => (a, b),
        (None, None, ParamKind::Eta) => (0.0, 1.0),
        (None, None, ParamKind::Gain) => (1.0, 4.0),
        _ => {
            return Err(CliError::Validation(
                "this parameterization needs an explicit --from and --to".into(),
            ))
        }
    };
    if args.steps < 1 {
        return Err(CliError::Validation("steps must be at least 1".into()));
    }
    if !(from <= to) {
        return Err(CliError::Validation(format!("empty range {from}..{to}")));
    }

    let mut record = OutputRecord::new("dip-scan");
    record.param(
        "coupler",
        match args.coupler {
            CouplerKind::Bs => "bs",
            CouplerKind::Pdc => "pdc",
        },
    );
    record.param("parameter", param.name());
    record.param("from", from);
    record.param("to", to);
    record.param("steps", args.steps);
    record.param("overlap", args.overlap);

    let canonical = match args.coupler {
        CouplerKind::Bs => "eta",
        CouplerKind::Pdc => "gain",
    };
    if param.name() == canonical {
        record.columns(&[canonical, "quantum", "classical", "interpolated"]);
    } else {
        record.columns(&[param.name(), canonical, "quantum", "classical", "interpolated"]);
    }

    for k in 0..args.steps {
        let x = if args.steps == 1 {
            from
        } else {
            let t = from + (to - from) * k as f64 / (args.steps - 1) as f64;
            t.clamp(from, to)
        };
        let coupler = match param {
            ParamKind::Eta => Coupler::beam_splitter(x),
            ParamKind::Theta => Coupler::from_mixing_angle(x),
            ParamKind::Gain => Coupler::parametric(x),
            ParamKind::Squeezing => Coupler::from_squeezing(x),
            ParamKind::Db => Coupler::from_squeezing_db(x),
        }?;
        let (canon, quantum, classical) = match args.coupler {
            CouplerKind::Bs => {
                let eta = coupler.eta().expect("beam splitter");
                (eta, coincidence_bs(eta)?, classical_bs(eta)?)
            }
            CouplerKind::Pdc => {
                let g = coupler.gain().expect("amplifier");
                (g, coincidence_pdc(g)?, classical_pdc(g)?)
            }
        };
        let interpolated = partial_coincidence(&coupler, args.overlap)?;
        let mut row = vec![Field::from(x)];
        if param.name() != canonical {
            row.push(Field::from(canon));
        }
        row.extend([
            Field::from(quantum),
            Field::from(classical),
            Field::from(interpolated),
        ]);
        record.push_row(row);
    }
    record.meta("method", "closed-form");
    Ok(Outcome::clean(record))
}

fn resolve_strength(
    gain: Option<f64>,
    squeezing: Option<f64>,
    db: Option<f64>,
) -> Result<f64, CliError> {
    if let Some(g) = gain {
        return Ok(g);
    }
    if let Some(r) = squeezing {
        if r < 0.0 {
            return Err(CliError::Validation(format!("negative squeezing {r}")));
        }
        return Ok(r.cosh().powi(2));
    }
    let db = db.expect("clap enforces one strength parameter");
    if db < 0.0 {
        return Err(CliError::Validation(format!("negative squeezing {db} dB")));
    }
    Ok((db * std::f64::consts::LN_10 / 20.0).cosh().powi(2))
}

#[derive(Args)]
#[command(group(ArgGroup::new("strength").required(true).args(["gain", "squeezing", "squeezing_db"])))]
pub struct PairDistArgs {
    /// Amplifier gain g
    #[arg(long)]
    pub gain: Option<f64>,
    /// Squeezing parameter r, gain = cosh²r
    #[arg(long)]
    pub squeezing: Option<f64>,
    /// Squeezing in decibels
    #[arg(long = "db")]
    pub squeezing_db: Option<f64>,
    /// Highest pair order to list
    #[arg(long, default_value_t = 40)]
    pub orders: usize,
}

pub fn pair_dist(args: &PairDistArgs) -> Result<Outcome, CliError> {
    let gain = resolve_strength(args.gain, args.squeezing, args.squeezing_db)?;
    let dist = pair_distribution(gain, args.orders.max(1))?;
    let mut record = OutputRecord::new("pair-dist");
    record.param("gain", gain);
    record.param("orders", args.orders);
    record.columns(&["n", "probability"]);
    let mut tail = dist.tail;
    for (n, &p) in dist.probs.iter().enumerate() {
        if n > args.orders {
            tail += p;
        } else {
            record.push_row(vec![Field::from(n), Field::from(p)]);
        }
    }
    record.meta("cutoff", args.orders);
    record.meta("tail_mass", tail);
    record.meta("total", dist.total());
    Ok(Outcome::clean(record))
}

#[derive(Args)]
pub struct DualityCheckArgs {
    /// Gains to check, comma separated
    #[arg(
        long = "gain",
        value_delimiter = ',',
        num_args = 1..,
        default_values_t = vec![1.25, 1.5, 2.0, std::f64::consts::E, 4.0]
    )]
    pub gains: Vec<f64>,
    /// Largest photon number on each leg of the sweep
    #[arg(long, default_value_t = 10)]
    pub max_photons: usize,
    /// Emit the five-row single-photon table instead of the sweep
    #[arg(long)]
    pub table: bool,
}

const TABLE_ROWS: [(&str, usize, usize, usize, usize); 5] = [
    ("vacuum stays vacuum", 0, 0, 0, 0),
    ("photon through mode a", 1, 0, 1, 0),
    ("photon through mode b", 0, 1, 0, 1),
    ("reflection a to b / pair annihilation", 1, 0, 0, 1),
    ("reflection b to a / pair emission", 0, 1, 1, 0),
];

pub fn duality_check(args: &DualityCheckArgs) -> Result<Outcome, CliError> {
    let tolerance = 1e-9;
    let mut record = OutputRecord::new("duality-check");
    record.param("max_photons", args.max_photons);
    record.param("mode", if args.table { "table" } else { "sweep" });
    let mut worst = 0.0f64;
    if args.table {
        record.columns(&["label", "gain", "eta", "bs_value", "pdc_value", "residual"]);
        for &g in &args.gains {
            let eta = 1.0 / g;
            for &(label, i, j, n, m) in &TABLE_ROWS {
                let check = check_duality(i, j, n, m, g)?;
                worst = worst.max(check.abs_err);
                record.push_row(vec![
                    Field::from(label),
                    Field::from(g),
                    Field::from(eta),
                    Field::from(bs_element(n, m, i, j, eta)),
                    Field::from(pdc_element(n, j, i, m, g)),
                    Field::from(check.abs_err),
                ]);
            }
        }
    } else {
        record.columns(&["gain", "max_residual"]);
        for &g in &args.gains {
            let mut gain_worst = 0.0f64;
            for i in 0..=args.max_photons {
                for j in 0..=args.max_photons {
                    for n in 0..=args.max_photons {
                        for m in 0..=args.max_photons {
                            gain_worst = gain_worst.max(check_duality(i, j, n, m, g)?.abs_err);
                        }
                    }
                }
            }
            worst = worst.max(gain_worst);
            record.push_row(vec![Field::from(g), Field::from(gain_worst)]);
        }
    }
    record.meta("max_residual", worst);
    record.meta("tolerance", tolerance);
    let tolerance_failure = (worst > tolerance)
        .then(|| format!("duality residual {worst:e} exceeds {tolerance:e}"));
    Ok(Outcome {
        record,
        tolerance_failure,
    })
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// TOML run configuration
    #[arg(long)]
    pub config: std::path::PathBuf,
}

pub fn experiment(args: &ExperimentArgs) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Validation(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| {
        CliError::Validation(format!("{}: {e}", args.config.display()))
    })?;
    config.validate()?;
    let gain = config.resolved_gain()?;
    let tally = run_experiment(&config)?;
    let report = analyze(&tally, &config)?;

    let mut record = OutputRecord::new("experiment");
    record.param("gain", gain);
    record.param("squeezing_db", squeezing_db(gain)?);
    record.param("herald_gain", config.herald_gain);
    record.param("transmissivity", config.transmissivity);
    record.param("detector_efficiency", config.detector_efficiency);
    record.param("pnr_max", u64::from(config.pnr_max));
    record.param("shots", config.shots);
    record.param("seed", config.seed);
    record.param("indistinguishability", config.indistinguishability);
    record.columns(&["trigger_a", "trigger_b", "output_a", "output_b", "count"]);
    for (&(ta, tb, oa, ob), &count) in &tally.counts {
        record.push_row(vec![
            Field::from(u64::from(ta)),
            Field::from(u64::from(tb)),
            Field::from(u64::from(oa)),
            Field::from(u64::from(ob)),
            Field::from(count),
        ]);
    }
    record.meta("heralded", report.heralded);
    record.meta("coincidences", report.coincidences);
    record.meta("rate", report.rate);
    record.meta("wilson_low", report.wilson_low);
    record.meta("wilson_high", report.wilson_high);
    record.meta("z", report.z);
    record.meta("benchmark", report.benchmark);
    record.meta("predicted_coincidence", report.predicted_coincidence);
    record.meta("classical_floor", report.classical_floor);
    record.meta(
        "verdict",
        match report.verdict {
            Verdict::Quantum => "QUANTUM",
            Verdict::Inconclusive => "INCONCLUSIVE",
        },
    );
    Ok(Outcome::clean(record))
}

#[derive(Args)]
#[command(group(ArgGroup::new("strength").required(true).args(["gain", "squeezing", "squeezing_db"])))]
pub struct RetroCheckArgs {
    /// Amplifier gain g
    #[arg(long)]
    pub gain: Option<f64>,
    /// Squeezing parameter r, gain = cosh²r
    #[arg(long)]
    pub squeezing: Option<f64>,
    /// Squeezing in decibels
    #[arg(long = "db")]
    pub squeezing_db: Option<f64>,
    /// Largest preparation and outcome photon number
    #[arg(long, default_value_t = 3)]
    pub max_photons: usize,
    /// Fock window; defaults to a gain-dependent size
    #[arg(long)]
    pub cutoff: Option<usize>,
}

pub fn retro_check(args: &RetroCheckArgs) -> Result<Outcome, CliError> {
    let tolerance = 1e-8;
    let gain = resolve_strength(args.gain, args.squeezing, args.squeezing_db)?;
    if gain < 1.0 {
        return Err(CliError::Validation(format!("gain {gain} below 1")));
    }
    let cutoff = args
        .cutoff
        .unwrap_or(((16.0 * gain + 16.0).ceil() as usize).max(40));
    if 2 * args.max_photons > cutoff {
        return Err(CliError::Validation(format!(
            "cutoff {cutoff} too small for photon numbers up to {}",
            args.max_photons
        )));
    }
    let ensemble = PreparationEnsemble::<f64>::uniform_fock(cutoff);
    let measurement = MeasurementModel::<f64>::fock_projective(cutoff);

    let mut record = OutputRecord::new("retro-check");
    record.param("gain", gain);
    record.param("max_photons", args.max_photons);
    record.columns(&["i", "m", "n", "j", "bayes", "ptr", "residual"]);
    let mut worst = 0.0f64;
    let mut unreachable = 0usize;
    for i in 0..=args.max_photons {
        for m in 0..=args.max_photons {
            let bayes = match intermediate_bayes(i, m, gain, &ensemble, &measurement, cutoff) {
                Ok(table) => table,
                Err(fockdual::Error::NoSolution(_)) => {
                    unreachable += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let ptr = intermediate_ptr(i, m, gain, &ensemble, &measurement, cutoff)?;
            let lookup: std::collections::BTreeMap<_, _> = ptr.into_iter().collect();
            for ((n, j), p) in bayes {
                let q = lookup.get(&(n, j)).copied().unwrap_or(0.0);
                let residual = (p - q).abs();
                worst = worst.max(residual);
                record.push_row(vec![
                    Field::from(i),
                    Field::from(m),
                    Field::from(n),
                    Field::from(j),
                    Field::from(p),
                    Field::from(q),
                    Field::from(residual),
                ]);
            }
        }
    }
    record.meta("cutoff", cutoff);
    record.meta("unreachable_outcomes", unreachable);
    record.meta("max_residual", worst);
    record.meta("tolerance", tolerance);
    let tolerance_failure = (worst > tolerance)
        .then(|| format!("inference routes disagree by {worst:e}, tolerance {tolerance:e}"));
    Ok(Outcome {
        record,
        tolerance_failure,
    })
}
