//! System parameterization, effective service rates and the stability region.

use std::fmt;

use crate::error::{Error, Result};

/// Utilization above which a queue is reported as near-unstable.
pub const NEAR_UNSTABLE_UTILIZATION: f64 = 0.95;
/// Utilizations within this distance of 1 count as unstable: decimal inputs
/// such as 6 × 0.3 against 1.8 land a rounding error below the boundary.
pub const CRITICAL_UTILIZATION_TOL: f64 = 1e-12;

/// `arrival < service` with the [`CRITICAL_UTILIZATION_TOL`] margin.
pub fn strictly_below(arrival: f64, service: f64) -> bool {
    arrival < service * (1.0 - CRITICAL_UTILIZATION_TOL)
}

/// Where the computation of each packet happens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// All computation at the UE's local server.
    Local,
    /// All computation at the edge server.
    Edge,
    /// Fraction `p` of each packet's computation at the edge server, the rest
    /// locally. `Partial(0)` is `Local` and `Partial(1)` is `Edge`.
    Partial(f64),
}

impl Scheme {
    /// Offloading ratio: 0 for `Local`, 1 for `Edge`.
    pub fn offload_ratio(self) -> f64 {
        match self {
            Scheme::Local => 0.0,
            Scheme::Edge => 1.0,
            Scheme::Partial(p) => p,
        }
    }

    /// Map the boundary ratios onto the dedicated schemes.
    pub fn normalized(self) -> Scheme {
        match self {
            Scheme::Partial(p) if p == 0.0 => Scheme::Local,
            Scheme::Partial(p) if p == 1.0 => Scheme::Edge,
            s => s,
        }
    }

    pub fn label(self) -> String {
        match self {
            Scheme::Local => "local".to_string(),
            Scheme::Edge => "edge".to_string(),
            Scheme::Partial(p) => format!("partial({p})"),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A service rate that may be infinite (the stage does no work).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceRate {
    Finite(f64),
    Infinite,
}

impl ServiceRate {
    /// `rate / share`, infinite when the share of work is zero.
    pub fn scaled(rate: f64, share: f64) -> ServiceRate {
        if share <= 0.0 {
            ServiceRate::Infinite
        } else {
            ServiceRate::Finite(rate / share)
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ServiceRate::Infinite)
    }

    /// The rate as a float, `f64::INFINITY` for an infinite rate.
    pub fn value(self) -> f64 {
        match self {
            ServiceRate::Finite(r) => r,
            ServiceRate::Infinite => f64::INFINITY,
        }
    }

    /// Finite rate or `None`.
    pub fn finite(self) -> Option<f64> {
        match self {
            ServiceRate::Finite(r) => Some(r),
            ServiceRate::Infinite => None,
        }
    }

    pub fn mean_service_time(self) -> f64 {
        match self {
            ServiceRate::Finite(r) => 1.0 / r,
            ServiceRate::Infinite => 0.0,
        }
    }

    /// Mean M/M/1 sojourn time `1 / (rate - load)`; zero for an infinite rate.
    pub fn sojourn(self, load: f64) -> f64 {
        match self {
            ServiceRate::Finite(r) => 1.0 / (r - load),
            ServiceRate::Infinite => 0.0,
        }
    }
}

/// Full parameterization of the MEC system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    gen_rates: Vec<f64>,
    edge_rate: f64,
    tx_rate: f64,
    local_rates: Vec<f64>,
    scheme: Scheme,
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must be a finite positive rate, got {v}"
        )))
    }
}

impl SystemConfig {
    pub fn new(
        gen_rates: Vec<f64>,
        edge_rate: f64,
        tx_rate: f64,
        local_rates: Vec<f64>,
        scheme: Scheme,
    ) -> Result<Self> {
        if gen_rates.is_empty() {
            return Err(Error::InvalidConfig("at least one UE is required".into()));
        }
        if gen_rates.len() != local_rates.len() {
            return Err(Error::InvalidConfig(format!(
                "{} generation rates but {} local rates",
                gen_rates.len(),
                local_rates.len()
            )));
        }
        for (n, &l) in gen_rates.iter().enumerate() {
            check_rate(&format!("lambda[{n}]"), l)?;
        }
        for (n, &m) in local_rates.iter().enumerate() {
            check_rate(&format!("mu_local[{n}]"), m)?;
        }
        check_rate("mu_b", edge_rate)?;
        check_rate("mu_d", tx_rate)?;
        if let Scheme::Partial(p) = scheme {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "offloading ratio must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(Self {
            gen_rates,
            edge_rate,
            tx_rate,
            local_rates,
            scheme,
        })
    }

    /// `num_ues` identical UEs with generation rate `lambda_h` and local rate `mu_h`.
    pub fn homogeneous(
        num_ues: usize,
        lambda_h: f64,
        edge_rate: f64,
        tx_rate: f64,
        mu_h: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        Self::new(
            vec![lambda_h; num_ues],
            edge_rate,
            tx_rate,
            vec![mu_h; num_ues],
            scheme,
        )
    }

    pub fn num_ues(&self) -> usize {
        self.gen_rates.len()
    }

    pub fn gen_rates(&self) -> &[f64] {
        &self.gen_rates
    }

    pub fn gen_rate(&self, ue: usize) -> f64 {
        self.gen_rates[ue]
    }

    pub fn edge_rate(&self) -> f64 {
        self.edge_rate
    }

    pub fn tx_rate(&self) -> f64 {
        self.tx_rate
    }

    pub fn local_rates(&self) -> &[f64] {
        &self.local_rates
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn offload_ratio(&self) -> f64 {
        self.scheme.offload_ratio()
    }

    /// λ, summed with Neumaier compensation so that e.g. ten rates of 0.1
    /// total exactly 1.0 and compare correctly against a service rate.
    pub fn total_gen(&self) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &x in &self.gen_rates {
            let t = sum + x;
            comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
            sum = t;
        }
        sum + comp
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Result<Self> {
        Self::new(
            self.gen_rates.clone(),
            self.edge_rate,
            self.tx_rate,
            self.local_rates.clone(),
            scheme,
        )
    }

    /// Multiply every rate by `factor` (a change of time unit).
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.gen_rates.iter().map(|r| r * factor).collect(),
            self.edge_rate * factor,
            self.tx_rate * factor,
            self.local_rates.iter().map(|r| r * factor).collect(),
            self.scheme,
        )
    }

    /// All generation rates equal and all local rates equal.
    pub fn is_homogeneous(&self) -> bool {
        let l0 = self.gen_rates[0];
        let m0 = self.local_rates[0];
        self.gen_rates.iter().all(|&l| l == l0) && self.local_rates.iter().all(|&m| m == m0)
    }

    /// `(lambda_h, mu_h)` for a homogeneous configuration.
    pub fn homogeneous_rates(&self) -> Result<(f64, f64)> {
        if self.is_homogeneous() {
            Ok((self.gen_rates[0], self.local_rates[0]))
        } else {
            Err(Error::NotHomogeneous)
        }
    }

    pub(crate) fn check_ue(&self, ue: usize) -> Result<()> {
        if ue < self.num_ues() {
            Ok(())
        } else {
            Err(Error::UeOutOfRange {
                index: ue,
                num_ues: self.num_ues(),
            })
        }
    }
}

/// Aggregate and effective rates.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedRates {
    /// λ = Σ λ_n.
    pub total_gen: f64,
    /// λ_{-n} = λ − λ_n per UE.
    pub others_gen: Vec<f64>,
    /// μ_B' = μ_B / p.
    pub eff_edge: ServiceRate,
    /// μ_n' = μ_n / (1 − p) per UE.
    pub eff_local: Vec<ServiceRate>,
}

pub fn derive_rates(cfg: &SystemConfig) -> DerivedRates {
    let total_gen = cfg.total_gen();
    let p = cfg.offload_ratio();
    DerivedRates {
        total_gen,
        // Clamp tiny negative rounding away so λ_{-n} ≥ 0 always holds.
        others_gen: cfg
            .gen_rates
            .iter()
            .map(|&l| (total_gen - l).max(0.0))
            .collect(),
        eff_edge: ServiceRate::scaled(cfg.edge_rate, p),
        eff_local: cfg
            .local_rates
            .iter()
            .map(|&m| ServiceRate::scaled(m, 1.0 - p))
            .collect(),
    }
}

pub fn normalize_scheme(cfg: &SystemConfig) -> SystemConfig {
    SystemConfig {
        scheme: cfg.scheme.normalized(),
        ..cfg.clone()
    }
}

/// Which queue a stability verdict refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueId {
    Edge,
    Transmission,
    Local(usize),
}

impl fmt::Display for QueueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueueId::Edge => write!(f, "edge computation queue"),
            QueueId::Transmission => write!(f, "transmission queue"),
            QueueId::Local(n) => write!(f, "local computation queue of UE {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueStability {
    pub queue: QueueId,
    pub arrival_rate: f64,
    pub service_rate: ServiceRate,
}

impl QueueStability {
    pub fn is_stable(&self) -> bool {
        match self.service_rate {
            ServiceRate::Infinite => true,
            ServiceRate::Finite(mu) => strictly_below(self.arrival_rate, mu),
        }
    }

    /// ρ = arrival / service, zero for an infinite service rate.
    pub fn utilization(&self) -> f64 {
        match self.service_rate {
            ServiceRate::Finite(r) => self.arrival_rate / r,
            ServiceRate::Infinite => 0.0,
        }
    }

    /// Human-readable statement of the stability inequality.
    pub fn describe(&self) -> String {
        let (sym, rate) = match self.queue {
            QueueId::Edge => ("mu_b'", self.service_rate.value()),
            QueueId::Transmission => ("mu_d", self.service_rate.value()),
            QueueId::Local(_) => ("mu_n'", self.service_rate.value()),
        };
        let load = match self.queue {
            QueueId::Local(_) => "lambda_n",
            _ => "lambda",
        };
        let rel = if self.is_stable() { "<" } else { ">=" };
        format!(
            "{}: {load} = {} {rel} {sym} = {}",
            self.queue, self.arrival_rate, rate
        )
    }
}

/// Per-queue stability verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub edge: QueueStability,
    pub transmission: QueueStability,
    pub local: Vec<QueueStability>,
}

impl StabilityReport {
    pub fn queues(&self) -> impl Iterator<Item = &QueueStability> {
        std::iter::once(&self.edge)
            .chain(std::iter::once(&self.transmission))
            .chain(self.local.iter())
    }

    pub fn is_stable(&self) -> bool {
        self.queues().all(QueueStability::is_stable)
    }

    /// Stable but with some queue above [`NEAR_UNSTABLE_UTILIZATION`].
    pub fn is_near_unstable(&self) -> bool {
        self.queues()
            .any(|q| q.utilization() > NEAR_UNSTABLE_UTILIZATION)
    }

    pub fn max_utilization(&self) -> f64 {
        self.queues().map(QueueStability::utilization).fold(0.0, f64::max)
    }

    pub fn violations(&self) -> Vec<&QueueStability> {
        self.queues().filter(|q| !q.is_stable()).collect()
    }

    /// `Ok(())` when stable, otherwise `UnstableConfig` naming every violated inequality.
    pub fn require_stable(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::UnstableConfig(
                v.iter().map(|q| q.describe()).collect::<Vec<_>>().join("; "),
            ))
        }
    }
}

pub fn check_stability(cfg: &SystemConfig) -> StabilityReport {
    let rates = derive_rates(cfg);
    StabilityReport {
        edge: QueueStability {
            queue: QueueId::Edge,
            arrival_rate: rates.total_gen,
            service_rate: rates.eff_edge,
        },
        transmission: QueueStability {
            queue: QueueId::Transmission,
            arrival_rate: rates.total_gen,
            service_rate: ServiceRate::Finite(cfg.tx_rate),
        },
        local: cfg
            .gen_rates
            .iter()
            .zip(&rates.eff_local)
            .enumerate()
            .map(|(n, (&l, &mu))| QueueStability {
                queue: QueueId::Local(n),
                arrival_rate: l,
                service_rate: mu,
            })
            .collect(),
    }
}
