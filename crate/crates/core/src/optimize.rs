//! Offloading-ratio search and scheme comparison.

use std::fmt;

use crate::analytic::{self, AoiMetrics};
use crate::error::{Error, Result};
use crate::model::{strictly_below, Scheme, SystemConfig, CRITICAL_UTILIZATION_TOL};
use crate::par::{self, Execution};

/// Default grid step for [`search_p`].
pub const DEFAULT_RESOLUTION: f64 = 1e-3;
/// Golden-section refinement stops once the bracket is this narrow.
pub const REFINE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Aoi,
    Paoi,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Aoi => "aoi",
            Objective::Paoi => "paoi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Grid,
    Golden,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed_form",
            Method::Grid => "grid",
            Method::Golden => "golden",
        })
    }
}

/// Range of offloading ratios with every queue stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableInterval {
    pub p_min: f64,
    pub p_max: f64,
    pub min_inclusive: bool,
    pub max_inclusive: bool,
}

impl StableInterval {
    pub fn contains(&self, p: f64) -> bool {
        let above = if self.min_inclusive { p >= self.p_min } else { p > self.p_min };
        let below = if self.max_inclusive { p <= self.p_max } else { p < self.p_max };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.p_min > self.p_max
            || (self.p_min == self.p_max && !(self.min_inclusive && self.max_inclusive))
    }
}

/// Solve λ < μ_B / p and λ_n < μ_n / (1 − p) for all n, intersected with [0, 1].
///
/// Returns `None` when the transmission queue is unstable or no ratio works.
pub fn stable_p_interval(cfg: &SystemConfig) -> Option<StableInterval> {
    let lambda = cfg.total_gen();
    if !strictly_below(lambda, cfg.tx_rate()) {
        return None;
    }
    let margin = 1.0 - CRITICAL_UTILIZATION_TOL;
    // p > 1 − μ_n / λ_n for every UE
    let lower = cfg
        .gen_rates()
        .iter()
        .zip(cfg.local_rates())
        .map(|(&l, &m)| 1.0 - m * margin / l)
        .fold(f64::NEG_INFINITY, f64::max);
    // p < μ_B / λ
    let upper = cfg.edge_rate() * margin / lambda;
    let interval = StableInterval {
        p_min: lower.max(0.0),
        p_max: upper.min(1.0),
        min_inclusive: lower < 0.0,
        max_inclusive: upper > 1.0,
    };
    (!interval.is_empty()).then_some(interval)
}

/// Result of an offloading-ratio optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptResult {
    pub best_p: f64,
    pub best_value: f64,
    pub objective: Objective,
    pub method: Method,
    pub stable_interval: StableInterval,
    pub evaluations: usize,
}

/// System objective at ratio `p`, `None` when unstable.
pub fn objective_at(cfg: &SystemConfig, p: f64, objective: Objective) -> Option<f64> {
    let cfg = cfg.with_scheme(Scheme::Partial(p)).ok()?;
    let m = analytic::system_metrics(&cfg).ok()?;
    let v = match objective {
        Objective::Aoi => m.system_aoi,
        Objective::Paoi => m.system_paoi,
    };
    v.is_finite().then_some(v)
}

fn grid_points(interval: &StableInterval, resolution: f64) -> Vec<f64> {
    let steps = ((interval.p_max - interval.p_min) / resolution).floor() as usize;
    let mut pts: Vec<f64> = (0..=steps)
        .map(|i| interval.p_min + i as f64 * resolution)
        .filter(|&p| interval.contains(p))
        .collect();
    if interval.max_inclusive && pts.last().is_some_and(|&p| p < interval.p_max) {
        pts.push(interval.p_max);
    }
    if pts.is_empty() {
        pts.push(0.5 * (interval.p_min + interval.p_max));
    }
    pts
}

/// Number of strict interior local minima plus boundary minima of a sequence.
fn local_minima(values: &[f64]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] < values[i - 1];
            let right = i + 1 == n || values[i] <= values[i + 1];
            left && right
        })
        .count()
}

fn golden_section(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    evals: &mut usize,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    *evals += 2;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        *evals += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid scan of the stable interval followed by golden-section refinement
/// around the best grid point.
///
/// For the AoI objective the refinement only runs when the grid shows a
/// single local minimum; otherwise the grid argmin is returned.
pub fn search_p(
    cfg: &SystemConfig,
    objective: Objective,
    resolution: f64,
    exec: Execution,
) -> Result<OptResult> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "resolution must lie in (0, 1], got {resolution}"
        )));
    }
    let interval = stable_p_interval(cfg).ok_or(Error::EmptyStableInterval)?;
    let pts = grid_points(&interval, resolution);
    let values = par::map_slice(&pts, exec, |&p| {
        objective_at(cfg, p, objective).unwrap_or(f64::INFINITY)
    });
    let mut evaluations = pts.len();

    // First minimum wins: ties go to the smaller ratio.
    let (best_i, &best_v) = values
        .iter()
        .enumerate()
        .fold((0, &f64::INFINITY), |acc, (i, v)| if *v < *acc.1 { (i, v) } else { acc });
    if !best_v.is_finite() {
        return Err(Error::EmptyStableInterval);
    }

    let mut result = OptResult {
        best_p: pts[best_i],
        best_value: best_v,
        objective,
        method: Method::Grid,
        stable_interval: interval,
        evaluations,
    };

    let unimodal = objective == Objective::Paoi || local_minima(&values) == 1;
    if pts.len() >= 2 && unimodal {
        let lo = if best_i > 0 { pts[best_i - 1] } else { pts[0] };
        let hi = if best_i + 1 < pts.len() { pts[best_i + 1] } else { pts[best_i] };
        let f = |p: f64| objective_at(cfg, p, objective).unwrap_or(f64::INFINITY);
        let (p, v) = golden_section(f, lo, hi, REFINE_TOLERANCE, &mut evaluations);
        if v < best_v {
            result.best_p = p;
            result.best_value = v;
            result.method = Method::Golden;
        }
    }
    result.evaluations = evaluations;
    Ok(result)
}

/// Metrics of one scheme; `None` when that scheme is unstable.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub metrics: Option<AoiMetrics>,
}

impl SchemeOutcome {
    fn evaluate(cfg: &SystemConfig, scheme: Scheme) -> Self {
        let metrics = cfg
            .with_scheme(scheme)
            .ok()
            .and_then(|c| analytic::system_metrics(&c).ok());
        Self { scheme, metrics }
    }

    /// System AoI, infinite when unstable.
    pub fn system_aoi(&self) -> f64 {
        self.metrics.as_ref().map_or(f64::INFINITY, |m| m.system_aoi)
    }

    /// System PAoI, infinite when unstable.
    pub fn system_paoi(&self) -> f64 {
        self.metrics.as_ref().map_or(f64::INFINITY, |m| m.system_paoi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Local,
    Edge,
    Partial,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Local => "local",
            SchemeKind::Edge => "edge",
            SchemeKind::Partial => "partial",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeComparison {
    pub local: SchemeOutcome,
    pub edge: SchemeOutcome,
    /// Partial scheme at the PAoI-optimal ratio.
    pub partial: SchemeOutcome,
    /// `None` when all three schemes are unstable.
    pub best_aoi: Option<SchemeKind>,
    pub best_paoi: Option<SchemeKind>,
}

fn argmin(values: [(SchemeKind, f64); 3]) -> Option<SchemeKind> {
    values
        .into_iter()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |acc: Option<(SchemeKind, f64)>, (k, v)| match acc {
            Some((_, best)) if best <= v => acc,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
}

/// Local, edge and partial (at the PAoI-optimal ratio) side by side.
///
/// Heterogeneous configurations have no closed-form ratio; the partial
/// scheme then uses the PAoI grid search instead.
pub fn compare_schemes(cfg: &SystemConfig) -> SchemeComparison {
    let p = match analytic::p_opt_paoi(cfg) {
        Ok(r) => Some(r.p),
        Err(_) => search_p(cfg, Objective::Paoi, DEFAULT_RESOLUTION, Execution::Sequential)
            .ok()
            .map(|r| r.best_p),
    };
    let local = SchemeOutcome::evaluate(cfg, Scheme::Local);
    let edge = SchemeOutcome::evaluate(cfg, Scheme::Edge);
    let partial = match p {
        Some(p) => SchemeOutcome::evaluate(cfg, Scheme::Partial(p)),
        None => SchemeOutcome {
            scheme: Scheme::Partial(f64::NAN),
            metrics: None,
        },
    };
    let best_aoi = argmin([
        (SchemeKind::Local, local.system_aoi()),
        (SchemeKind::Edge, edge.system_aoi()),
        (SchemeKind::Partial, partial.system_aoi()),
    ]);
    let best_paoi = argmin([
        (SchemeKind::Local, local.system_paoi()),
        (SchemeKind::Edge, edge.system_paoi()),
        (SchemeKind::Partial, partial.system_paoi()),
    ]);
    SchemeComparison {
        local,
        edge,
        partial,
        best_aoi,
        best_paoi,
    }
}
