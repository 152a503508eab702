//! Parameter sweeps and the CSV rows they produce.
//!
//! A sweep file holds a base configuration plus:
//!
//! ```text
//! sweep    = lambda_h            # lambda_h | N | p
//! values   = 0.02:0.3:0.02       # list, or start:stop:step
//! schemes  = local, 0.5, 0.9, edge, opt
//! simulate = false
//! seed = 7
//! packets = 200000
//! warmup = 20000
//! reps = 10
//! ```
//!
//! The swept key may be left out of the base configuration. A `p` sweep
//! uses the partial scheme at every value and takes no `schemes` key.

use std::fmt;
use std::str::FromStr;

use aoi_mec::analytic::{aoi_bounds, p_opt_paoi, system_metrics};
use aoi_mec::model::check_stability;
use aoi_mec::par::{self, Execution};
use aoi_mec::simulate::{simulate_mec_with, SimParams, DEFAULT_PACKETS_PER_UE, DEFAULT_REPLICATIONS};
use aoi_mec::{Scheme, SystemConfig};

use crate::config::{parse_list, parse_scalar, system_config, ConfigError, Entry, KeyValues, CONFIG_KEYS};
use crate::format::cell;

pub const DEFAULT_SEED: u64 = 1;

const SWEEP_KEYS: [&str; 8] = ["sweep", "values", "schemes", "simulate", "seed", "packets", "warmup", "reps"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Swept {
    LambdaH,
    N,
    P,
}

impl fmt::Display for Swept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Swept::LambdaH => "lambda_h",
            Swept::N => "N",
            Swept::P => "p",
        })
    }
}

impl FromStr for Swept {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lambda_h" => Ok(Swept::LambdaH),
            "N" | "n" | "n_ues" => Ok(Swept::N),
            "p" => Ok(Swept::P),
            other => Err(format!("unknown swept parameter `{other}` (lambda_h, N, p)")),
        }
    }
}

/// Which scheme a sweep curve uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeChoice {
    /// Whatever the base configuration (or a `p` sweep) says.
    Base,
    Local,
    Edge,
    /// Partial offloading at the closed-form PAoI-optimal ratio of each point.
    Opt,
    Ratio(f64),
}

impl FromStr for SchemeChoice {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "local" => Ok(SchemeChoice::Local),
            "edge" => Ok(SchemeChoice::Edge),
            "opt" => Ok(SchemeChoice::Opt),
            other => other.parse().map(SchemeChoice::Ratio).map_err(|_| ()),
        }
    }
}

/// Simulation settings from a file or the command line; unset fields fall
/// back to the library defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimSettings {
    pub seed: Option<u64>,
    pub packets: Option<u64>,
    pub warmup: Option<u64>,
    pub reps: Option<usize>,
}

impl SimSettings {
    /// Field-wise `self` if set, else `fallback`.
    pub fn or(self, fallback: SimSettings) -> SimSettings {
        SimSettings {
            seed: self.seed.or(fallback.seed),
            packets: self.packets.or(fallback.packets),
            warmup: self.warmup.or(fallback.warmup),
            reps: self.reps.or(fallback.reps),
        }
    }

    pub fn params(&self) -> SimParams {
        let p = SimParams::new(
            self.seed.unwrap_or(DEFAULT_SEED),
            self.packets.unwrap_or(DEFAULT_PACKETS_PER_UE),
        )
        .with_replications(self.reps.unwrap_or(DEFAULT_REPLICATIONS));
        match self.warmup {
            Some(w) => p.with_warmup(w),
            None => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub swept: Swept,
    pub values: Vec<f64>,
    pub base: SystemConfig,
    pub schemes: Vec<(String, SchemeChoice)>,
    pub simulate: bool,
    pub sim: SimSettings,
}

/// Decimal places written in a numeric literal, for rounding range steps.
fn decimals(s: &str) -> i32 {
    s.split_once('.').map_or(0, |(_, frac)| frac.trim_end_matches(|c: char| !c.is_ascii_digit()).len() as i32)
}

fn parse_values(e: &Entry) -> Result<Vec<f64>, ConfigError> {
    if e.value.is_empty() {
        return Err(ConfigError::at(e.line, "values", "empty list"));
    }
    let values = if e.value.contains(':') {
        let parts: Vec<&str> = e.value.split(':').map(str::trim).collect();
        let [a, b, s] = parts[..] else {
            return Err(ConfigError::at(e.line, "values", "range must be start:stop:step"));
        };
        let num = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ConfigError::at(e.line, "values", format!("cannot parse `{t}`")))
        };
        let (start, stop, step) = (num(a)?, num(b)?, num(s)?);
        if step <= 0.0 {
            return Err(ConfigError::at(e.line, "values", "range step must be positive"));
        }
        let scale = 10f64.powi(decimals(a).max(decimals(s)));
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Err(ConfigError::at(e.line, "values", "empty range"));
        }
        (0..=count as u64)
            .map(|k| ((start + k as f64 * step) * scale).round() / scale)
            .collect()
    } else {
        parse_list::<f64>("values", e)?
    };
    if values.is_empty() {
        return Err(ConfigError::at(e.line, "values", "empty list"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::at(e.line, "values", "values must be strictly increasing"));
    }
    Ok(values)
}

fn check_values(swept: Swept, values: &[f64], e: &Entry) -> Result<(), ConfigError> {
    let bad = values.iter().find(|&&v| match swept {
        Swept::LambdaH => !(v > 0.0 && v.is_finite()),
        Swept::N => !(v >= 1.0 && v.fract() == 0.0),
        Swept::P => !(0.0..=1.0).contains(&v),
    });
    match bad {
        Some(v) => {
            let want = match swept {
                Swept::LambdaH => "positive rates",
                Swept::N => "positive integers",
                Swept::P => "ratios in [0, 1]",
            };
            Err(ConfigError::at(e.line, "values", format!("{v} is out of range; {swept} takes {want}")))
        }
        None => Ok(()),
    }
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv = KeyValues::parse(text)?;
        let allowed: Vec<&str> = CONFIG_KEYS.iter().chain(SWEEP_KEYS.iter()).copied().collect();
        kv.only(&allowed)?;

        let swept_entry = kv.require("sweep")?.clone();
        let swept: Swept = swept_entry
            .value
            .parse()
            .map_err(|m: String| ConfigError::at(swept_entry.line, "sweep", m))?;
        let values_entry = kv.require("values")?.clone();
        let values = parse_values(&values_entry)?;
        check_values(swept, &values, &values_entry)?;

        let first = values[0].to_string();
        match swept {
            Swept::LambdaH => kv.set_default("lambda", &first),
            Swept::N => kv.set_default("n_ues", &first),
            Swept::P => {
                if let Some(e) = kv.get("schemes") {
                    return Err(ConfigError::at(e.line, "schemes", "a p sweep always uses the partial scheme"));
                }
                kv.set_default("scheme", "partial");
                kv.set_default("p", &first);
            }
        }
        if kv.get("schemes").is_some() {
            kv.set_default("scheme", "local");
        }
        let base = system_config(&kv)?;
        if swept != Swept::P && !base.is_homogeneous() {
            return Err(ConfigError::field(
                "lambda",
                format!("sweeping {swept} needs one generation rate and one local rate for every UE"),
            ));
        }

        let schemes = match kv.get("schemes") {
            None if swept == Swept::P => vec![("partial".to_string(), SchemeChoice::Base)],
            None => vec![(base.scheme().label(), SchemeChoice::Base)],
            Some(e) => {
                let tokens: Vec<String> = parse_list("schemes", e)?;
                let mut out = Vec::with_capacity(tokens.len());
                for t in tokens {
                    let choice: SchemeChoice = t.parse().map_err(|_| {
                        ConfigError::at(e.line, "schemes", format!("unknown scheme `{t}` (local, edge, opt, or a ratio)"))
                    })?;
                    if let SchemeChoice::Ratio(p) = choice {
                        if !(0.0..=1.0).contains(&p) {
                            return Err(ConfigError::at(e.line, "schemes", format!("ratio {p} outside [0, 1]")));
                        }
                    }
                    out.push((t.to_ascii_lowercase(), choice));
                }
                out
            }
        };

        let simulate = match kv.get("simulate") {
            None => false,
            Some(e) => parse_scalar::<bool>("simulate", e)?,
        };
        let sim = SimSettings {
            seed: kv.scalar("seed")?,
            packets: kv.scalar("packets")?,
            warmup: kv.scalar("warmup")?,
            reps: kv.scalar("reps")?,
        };
        Ok(SweepSpec {
            swept,
            values,
            base,
            schemes,
            simulate,
            sim,
        })
    }

    /// Configuration of one sweep point.
    pub fn point_config(&self, value: f64, choice: SchemeChoice) -> aoi_mec::Result<SystemConfig> {
        let b = &self.base;
        let cfg = match self.swept {
            Swept::LambdaH => SystemConfig::homogeneous(
                b.num_ues(),
                value,
                b.edge_rate(),
                b.tx_rate(),
                b.local_rates()[0],
                b.scheme(),
            )?,
            Swept::N => SystemConfig::homogeneous(
                value as usize,
                b.gen_rate(0),
                b.edge_rate(),
                b.tx_rate(),
                b.local_rates()[0],
                b.scheme(),
            )?,
            Swept::P => b.with_scheme(Scheme::Partial(value))?,
        };
        match choice {
            SchemeChoice::Base => Ok(cfg),
            SchemeChoice::Local => cfg.with_scheme(Scheme::Local),
            SchemeChoice::Edge => cfg.with_scheme(Scheme::Edge),
            SchemeChoice::Ratio(p) => cfg.with_scheme(Scheme::Partial(p)),
            SchemeChoice::Opt => {
                let opt = p_opt_paoi(&cfg)?;
                cfg.with_scheme(Scheme::Partial(opt.p))
            }
        }
    }

    /// `(value, scheme)` pairs in output order: values outer, schemes inner.
    pub fn points(&self) -> Vec<(f64, usize)> {
        self.values
            .iter()
            .flat_map(|&v| (0..self.schemes.len()).map(move |s| (v, s)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Unstable,
    Error,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::Unstable => "unstable",
            RowStatus::Error => "error",
        })
    }
}

/// One evaluated point. Fields are `None` where a value does not apply or
/// could not be computed; `status` and `message` say why.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub swept: Option<Swept>,
    pub value: Option<f64>,
    pub scheme: String,
    pub p: Option<f64>,
    pub n_ues: Option<usize>,
    pub lambda_h: Option<f64>,
    pub mu_b: Option<f64>,
    pub mu_d: Option<f64>,
    pub mu_local: Option<f64>,
    pub stable: bool,
    pub near_unstable: bool,
    pub status: RowStatus,
    pub message: Option<String>,
    pub aoi: Option<f64>,
    pub paoi: Option<f64>,
    pub aoi_low: Option<f64>,
    pub aoi_up: Option<f64>,
    pub gamma: Option<f64>,
    pub sim_aoi: Option<f64>,
    pub sim_aoi_hw: Option<f64>,
    pub sim_paoi: Option<f64>,
    pub sim_paoi_hw: Option<f64>,
}

pub const ROW_HEADER: [&str; 21] = [
    "swept",
    "value",
    "scheme",
    "p",
    "n_ues",
    "lambda_h",
    "mu_b",
    "mu_d",
    "mu_local",
    "stable",
    "near_unstable",
    "status",
    "aoi",
    "paoi",
    "aoi_low",
    "aoi_up",
    "gamma",
    "sim_aoi",
    "sim_aoi_hw",
    "sim_paoi",
    "sim_paoi_hw",
];

impl ResultRow {
    fn blank(scheme: String, status: RowStatus, message: String) -> Self {
        ResultRow {
            swept: None,
            value: None,
            scheme,
            p: None,
            n_ues: None,
            lambda_h: None,
            mu_b: None,
            mu_d: None,
            mu_local: None,
            stable: false,
            near_unstable: false,
            status,
            message: Some(message),
            aoi: None,
            paoi: None,
            aoi_low: None,
            aoi_up: None,
            gamma: None,
            sim_aoi: None,
            sim_aoi_hw: None,
            sim_paoi: None,
            sim_paoi_hw: None,
        }
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.swept.map(|s| s.to_string()).unwrap_or_default(),
            cell(self.value),
            self.scheme.clone(),
            cell(self.p),
            self.n_ues.map(|n| n.to_string()).unwrap_or_default(),
            cell(self.lambda_h),
            cell(self.mu_b),
            cell(self.mu_d),
            cell(self.mu_local),
            self.stable.to_string(),
            self.near_unstable.to_string(),
            self.status.to_string(),
            cell(self.aoi),
            cell(self.paoi),
            cell(self.aoi_low),
            cell(self.aoi_up),
            cell(self.gamma),
            cell(self.sim_aoi),
            cell(self.sim_aoi_hw),
            cell(self.sim_paoi),
            cell(self.sim_paoi_hw),
        ]
    }
}

/// Analytic (and optionally simulated) metrics of one configuration.
pub fn evaluate(cfg: &SystemConfig, scheme: &str, sim: Option<&SimParams>, exec: Execution) -> ResultRow {
    let homogeneous = cfg.is_homogeneous();
    let mut row = ResultRow::blank(scheme.to_string(), RowStatus::Ok, String::new());
    row.message = None;
    row.p = Some(cfg.offload_ratio());
    row.n_ues = Some(cfg.num_ues());
    row.lambda_h = homogeneous.then(|| cfg.gen_rate(0));
    row.mu_b = Some(cfg.edge_rate());
    row.mu_d = Some(cfg.tx_rate());
    row.mu_local = homogeneous.then(|| cfg.local_rates()[0]);

    let report = check_stability(cfg);
    row.stable = report.is_stable();
    row.near_unstable = row.stable && report.is_near_unstable();
    if let Err(e) = report.require_stable() {
        row.status = RowStatus::Unstable;
        row.message = Some(e.to_string());
        return row;
    }

    let fail = |mut row: ResultRow, e: aoi_mec::Error| {
        row.status = RowStatus::Error;
        row.message = Some(e.to_string());
        row
    };
    match system_metrics(cfg) {
        Ok(m) => {
            row.aoi = Some(m.system_aoi);
            row.paoi = Some(m.system_paoi);
        }
        Err(e) => return fail(row, e),
    }
    if homogeneous {
        match aoi_bounds(cfg) {
            Ok(b) => {
                row.aoi_low = Some(b.lower);
                row.aoi_up = Some(b.upper);
                row.gamma = Some(b.gap_ratio);
            }
            Err(e) => return fail(row, e),
        }
    }
    if let Some(params) = sim {
        match simulate_mec_with(cfg, params, exec) {
            Ok(s) if s.diagnostics.diverged => {
                row.status = RowStatus::Error;
                row.message = Some("simulation diverged (queue cap reached)".into());
            }
            Ok(s) => {
                if let Some(hw) = s.system_aoi.half_width() {
                    row.sim_aoi = Some(s.system_aoi.mean);
                    row.sim_aoi_hw = Some(hw);
                }
                if let Some(hw) = s.system_paoi.half_width() {
                    row.sim_paoi = Some(s.system_paoi.mean);
                    row.sim_paoi_hw = Some(hw);
                }
            }
            Err(e) => return fail(row, e),
        }
    }
    row
}

/// Evaluate every point of a sweep. Points run in parallel; the returned
/// rows follow [`SweepSpec::points`]. Simulated point `i` uses seed
/// `params.seed + i`.
pub fn run_sweep(spec: &SweepSpec, sim: Option<&SimParams>, exec: Execution) -> Vec<ResultRow> {
    let points = spec.points();
    par::map_indices(points.len(), exec, |i| {
        let (value, s) = points[i];
        let (label, choice) = &spec.schemes[s];
        let mut row = match spec.point_config(value, *choice) {
            Ok(cfg) => {
                let params = sim.map(|p| SimParams {
                    seed: p.seed.wrapping_add(i as u64),
                    ..p.clone()
                });
                evaluate(&cfg, label, params.as_ref(), exec)
            }
            Err(e) => {
                let status = match e {
                    aoi_mec::Error::UnstableConfig(_) | aoi_mec::Error::EmptyStableInterval => RowStatus::Unstable,
                    _ => RowStatus::Error,
                };
                ResultRow::blank(label.clone(), status, e.to_string())
            }
        };
        row.swept = Some(spec.swept);
        row.value = Some(value);
        row
    })
}
