//! Closed-form average AoI and average peak AoI.
//!
//! Per-UE values follow the decomposition
//! `Δ_n = 1/λ_n + Σ E[S] + λ_n (E[Y W_B] + E[Y W_D] + E[Y W_U])` and
//! `Ω_n = 1/λ_n + Σ mean sojourn`. Boundary ratios (`p = 0`, `p = 1`) are
//! never evaluated through the partial-scheme expressions; they dispatch to
//! the dedicated local / edge forms.

mod terms;

use crate::error::{Error, Result};
use crate::model::{
    check_stability, derive_rates, normalize_scheme, Scheme, ServiceRate, SystemConfig,
};

pub use terms::{PERTURB_AGREE_REL, PERTURB_REL, SINGULAR_REL};
use terms::UeRates;

/// Per-UE and system-averaged AoI / PAoI.
#[derive(Debug, Clone, PartialEq)]
pub struct AoiMetrics {
    pub per_ue_aoi: Vec<f64>,
    pub per_ue_paoi: Vec<f64>,
    pub system_aoi: f64,
    pub system_paoi: f64,
}

/// Correlation-term contributions E[Y_j W_{j,·}; event] (time²).
///
/// `*_before` condition on packet `j` reaching the transmission queue before
/// packet `j − 1` has left it, `*_after` on the complement. In the edge
/// scheme there is no local stage and both local terms are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiTerms {
    pub tx_before: f64,
    pub tx_after: f64,
    pub local_before: f64,
    pub local_after: f64,
}

impl PhiTerms {
    pub fn sum(&self) -> f64 {
        self.tx_before + self.tx_after + self.local_before + self.local_after
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.tx_before, self.tx_after, self.local_before, self.local_after]
    }

    pub const NAMES: [&'static str; 4] = ["phi_tx_before", "phi_tx_after", "phi_local_before", "phi_local_after"];
}

/// Analytic targets for the simulator's correlation estimators (time²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTargets {
    /// E[Y_j W_{j,B}]
    pub yw_edge: f64,
    /// E[Y_j W_{j,D}]
    pub yw_tx: f64,
    /// E[Y_j W_{j,U}]
    pub yw_local: f64,
    /// Event split of the transmission / local terms, when available.
    pub split: Option<PhiTerms>,
}

/// Upper and lower bounds on the system average AoI (homogeneous UEs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoiBounds {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    /// gap / upper
    pub gap_ratio: f64,
    /// The upper bound without its `1/λ_h` term.
    pub paoi_without_generation: f64,
}

/// Which case of the PAoI-optimal ratio fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioBranch {
    /// μ_B ≤ (μ_h − λ_h)² / μ_h: compute everything locally.
    AllLocal,
    /// μ_h ≤ (μ_B − λ)² / μ_B: offload everything.
    AllEdge,
    /// Stationary point of Ω(p), already inside [0, 1].
    Interior,
    /// Stationary point clamped to [0, 1].
    Clamped,
}

impl RatioBranch {
    pub fn describe(self) -> &'static str {
        match self {
            RatioBranch::AllLocal => "p=0 (mu_b <= (mu_h - lambda_h)^2 / mu_h)",
            RatioBranch::AllEdge => "p=1 (mu_h <= (mu_b - lambda)^2 / mu_b)",
            RatioBranch::Interior => "interior stationary point",
            RatioBranch::Clamped => "stationary point clamped to [0, 1]",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalRatio {
    pub p: f64,
    pub branch: RatioBranch,
    /// Whether the system is stable at `p`.
    pub stable: bool,
}

fn ue_rates(cfg: &SystemConfig, ue: usize) -> Result<UeRates> {
    cfg.check_ue(ue)?;
    let rates = derive_rates(cfg);
    Ok(UeRates {
        own: cfg.gen_rate(ue),
        total: rates.total_gen,
        others: rates.others_gen[ue],
        edge: rates.eff_edge.value(),
        tx: cfg.tx_rate(),
        local: rates.eff_local[ue].value(),
    })
}

fn require_stable(cfg: &SystemConfig) -> Result<()> {
    check_stability(cfg).require_stable()
}

fn require_scheme(cfg: &SystemConfig, want: &str) -> Result<Scheme> {
    let s = cfg.scheme().normalized();
    let ok = matches!(
        (want, s),
        ("partial", Scheme::Partial(_)) | ("local", Scheme::Local) | ("edge", Scheme::Edge)
    );
    if ok {
        Ok(s)
    } else {
        Err(Error::InvalidConfig(format!(
            "{want} formula requested for scheme {s}"
        )))
    }
}

/// Φ terms of the partial scheme (0 < p < 1).
pub fn phi_terms_partial(cfg: &SystemConfig, ue: usize) -> Result<PhiTerms> {
    require_scheme(cfg, "partial")?;
    require_stable(cfg)?;
    let r = ue_rates(cfg, ue)?;
    let [a, b, c, d] = terms::resolve_singularities(&r, "partial-scheme phi terms", |r| {
        [
            terms::phi_tx_before(r),
            terms::phi_tx_after(r),
            terms::phi_local_before(r),
            terms::phi_local_after(r),
        ]
    })?;
    Ok(PhiTerms {
        tx_before: a,
        tx_after: b,
        local_before: c,
        local_after: d,
    })
}

/// Φ_e terms of the edge scheme; the local terms are zero.
pub fn phi_terms_edge(cfg: &SystemConfig, ue: usize) -> Result<PhiTerms> {
    require_scheme(cfg, "edge")?;
    require_stable(cfg)?;
    let r = ue_rates(cfg, ue)?;
    let [a, b] = terms::resolve_singularities(&r, "edge-scheme phi terms", |r| {
        [terms::phi_tx_before(r), terms::phi_tx_after(r)]
    })?;
    Ok(PhiTerms {
        tx_before: a,
        tx_after: b,
        local_before: 0.0,
        local_after: 0.0,
    })
}

pub fn avg_aoi_partial(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    let phi = phi_terms_partial(cfg, ue)?;
    let r = ue_rates(cfg, ue)?;
    Ok(1.0 / r.own
        + 1.0 / r.edge
        + 1.0 / r.tx
        + 1.0 / r.local
        + terms::first_queue_terms(r.own, r.total, r.others, r.edge)
        + r.own * phi.sum())
}

pub fn avg_paoi_partial(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    require_scheme(cfg, "partial")?;
    paoi(cfg, ue)
}

pub fn avg_aoi_local(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    require_scheme(cfg, "local")?;
    require_stable(cfg)?;
    let r = ue_rates(cfg, ue)?;
    Ok(1.0 / r.own
        + 1.0 / r.tx
        + 1.0 / r.local
        + terms::first_queue_terms(r.own, r.total, r.others, r.tx)
        + terms::local_queue_terms_after_tx(r.own, r.total, r.others, r.tx, r.local))
}

pub fn avg_paoi_local(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    require_scheme(cfg, "local")?;
    paoi(cfg, ue)
}

pub fn avg_aoi_edge(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    let phi = phi_terms_edge(cfg, ue)?;
    let r = ue_rates(cfg, ue)?;
    Ok(1.0 / r.own
        + 1.0 / r.edge
        + 1.0 / r.tx
        + terms::first_queue_terms(r.own, r.total, r.others, r.edge)
        + r.own * phi.sum())
}

pub fn avg_paoi_edge(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    require_scheme(cfg, "edge")?;
    paoi(cfg, ue)
}

fn paoi(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    require_stable(cfg)?;
    cfg.check_ue(ue)?;
    let rates = derive_rates(cfg);
    let own = cfg.gen_rate(ue);
    Ok(1.0 / own
        + rates.eff_edge.sojourn(rates.total_gen)
        + ServiceRate::Finite(cfg.tx_rate()).sojourn(rates.total_gen)
        + rates.eff_local[ue].sojourn(own))
}

/// Average AoI of one UE under whatever scheme `cfg` carries.
pub fn avg_aoi(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    let cfg = normalize_scheme(cfg);
    match cfg.scheme() {
        Scheme::Local => avg_aoi_local(&cfg, ue),
        Scheme::Edge => avg_aoi_edge(&cfg, ue),
        Scheme::Partial(_) => avg_aoi_partial(&cfg, ue),
    }
}

/// Average PAoI of one UE under whatever scheme `cfg` carries.
pub fn avg_paoi(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    paoi(cfg, ue)
}

/// Per-UE and system metrics for any stable configuration.
pub fn system_metrics(cfg: &SystemConfig) -> Result<AoiMetrics> {
    let cfg = normalize_scheme(cfg);
    require_stable(&cfg)?;
    let n = cfg.num_ues();
    let per_ue_aoi = (0..n).map(|u| avg_aoi(&cfg, u)).collect::<Result<Vec<_>>>()?;
    let per_ue_paoi = (0..n).map(|u| avg_paoi(&cfg, u)).collect::<Result<Vec<_>>>()?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(AoiMetrics {
        system_aoi: mean(&per_ue_aoi),
        system_paoi: mean(&per_ue_paoi),
        per_ue_aoi,
        per_ue_paoi,
    })
}

/// Closed-form E[Y_j W_{j,·}] for every stage, matching what the simulator
/// estimates.
pub fn correlation_targets(cfg: &SystemConfig, ue: usize) -> Result<CorrelationTargets> {
    let cfg = normalize_scheme(cfg);
    require_stable(&cfg)?;
    let r = ue_rates(&cfg, ue)?;
    Ok(match cfg.scheme() {
        Scheme::Local => CorrelationTargets {
            yw_edge: 0.0,
            yw_tx: terms::first_queue_terms(r.own, r.total, r.others, r.tx) / r.own,
            yw_local: terms::local_queue_terms_after_tx(r.own, r.total, r.others, r.tx, r.local)
                / r.own,
            split: None,
        },
        Scheme::Edge => {
            let phi = phi_terms_edge(&cfg, ue)?;
            CorrelationTargets {
                yw_edge: terms::first_queue_terms(r.own, r.total, r.others, r.edge) / r.own,
                yw_tx: phi.tx_before + phi.tx_after,
                yw_local: 0.0,
                split: Some(phi),
            }
        }
        Scheme::Partial(_) => {
            let phi = phi_terms_partial(&cfg, ue)?;
            CorrelationTargets {
                yw_edge: terms::first_queue_terms(r.own, r.total, r.others, r.edge) / r.own,
                yw_tx: phi.tx_before + phi.tx_after,
                yw_local: phi.local_before + phi.local_after,
                split: Some(phi),
            }
        }
    })
}

/// Lower bounds on E[Y_j W_{j,·}] obtained by letting upstream stages become
/// infinitely fast. The edge-stage value is exact, not a bound.
pub fn correlation_lower_bounds(cfg: &SystemConfig, ue: usize) -> Result<CorrelationTargets> {
    let cfg = normalize_scheme(cfg);
    require_stable(&cfg)?;
    let rates = derive_rates(&cfg);
    let r = ue_rates(&cfg, ue)?;
    let yw_edge = match rates.eff_edge {
        ServiceRate::Finite(b) => terms::first_queue_terms(r.own, r.total, r.others, b) / r.own,
        ServiceRate::Infinite => 0.0,
    };
    let yw_local = match rates.eff_local[ue] {
        ServiceRate::Finite(u) => 1.0 / (u * (u - r.own)) - 1.0 / (u * u),
        ServiceRate::Infinite => 0.0,
    };
    Ok(CorrelationTargets {
        yw_edge,
        yw_tx: terms::first_queue_terms(r.own, r.total, r.others, r.tx) / r.own,
        yw_local,
        split: None,
    })
}

/// Upper / lower bounds on the system average AoI for homogeneous UEs.
///
/// The upper bound is the system average PAoI including its `1/λ_h` term.
pub fn aoi_bounds(cfg: &SystemConfig) -> Result<AoiBounds> {
    let (lambda_h, _) = cfg.homogeneous_rates()?;
    let cfg = normalize_scheme(cfg);
    require_stable(&cfg)?;
    let rates = derive_rates(&cfg);
    let others = rates.others_gen[0];
    let upper = paoi(&cfg, 0)?;

    // Terms of an infinitely fast stage vanish.
    let queue_gap = |mu: ServiceRate| match mu {
        ServiceRate::Finite(m) => {
            let x = m - others;
            lambda_h / (x * x) - lambda_h * lambda_h * others / (m * x.powi(3))
        }
        ServiceRate::Infinite => 0.0,
    };
    let local_gap = match rates.eff_local[0] {
        ServiceRate::Finite(u) => lambda_h / (u * u),
        ServiceRate::Infinite => 0.0,
    };
    let gap = queue_gap(rates.eff_edge) + queue_gap(ServiceRate::Finite(cfg.tx_rate())) + local_gap;
    Ok(AoiBounds {
        lower: upper - gap,
        upper,
        gap,
        gap_ratio: gap / upper,
        paoi_without_generation: upper - 1.0 / lambda_h,
    })
}

/// Offloading ratio minimizing the system average PAoI (homogeneous UEs).
///
/// The boundary conditions are checked first, each only where the matching
/// boundary scheme is itself stable; otherwise the stationary point of
/// Ω(p) is returned, clamped to [0, 1].
pub fn p_opt_paoi(cfg: &SystemConfig) -> Result<OptimalRatio> {
    let (lambda_h, mu_h) = cfg.homogeneous_rates()?;
    let mu_b = cfg.edge_rate();
    let n = cfg.num_ues() as f64;
    let lambda = cfg.total_gen();

    let (p, branch) = if mu_h > lambda_h && mu_b <= (mu_h - lambda_h).powi(2) / mu_h {
        (0.0, RatioBranch::AllLocal)
    } else if mu_b > lambda && mu_h <= (mu_b - lambda).powi(2) / mu_b {
        (1.0, RatioBranch::AllEdge)
    } else {
        let raw = ((mu_b * mu_h).sqrt() + lambda_h - mu_h)
            / ((1.0 + n * (mu_h / mu_b).sqrt()) * lambda_h);
        if (0.0..=1.0).contains(&raw) {
            (raw, RatioBranch::Interior)
        } else {
            (raw.clamp(0.0, 1.0), RatioBranch::Clamped)
        }
    };
    let stable = check_stability(&cfg.with_scheme(Scheme::Partial(p))?).is_stable();
    Ok(OptimalRatio { p, branch, stable })
}
