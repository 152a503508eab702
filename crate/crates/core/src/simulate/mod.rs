//! Discrete-event simulation of the edge → transmission → local tandem.
//!
//! Every stage is a single FCFS exponential server; stages with infinite
//! effective rate are skipped with zero wait and zero service. Each
//! replication draws from its own ChaCha streams (one per server and one
//! per UE's generator), so runs are reproducible and different offloading
//! ratios share random numbers.

mod engine;
mod estimators;
mod stats;
mod trace;

use crate::error::{Error, Result};
use crate::model::{check_stability, SystemConfig};
use crate::par::{self, Execution};

pub use estimators::{
    aoi_from_path, estimate_correlation_terms, paoi_from_path, trapezoid_area, CorrelationTerms,
    PathAccumulator, SampleMean, MIN_CORRELATION_RECORDS,
};
pub use stats::{geometric_chi_square, mean_sd, t_quantile_95, ChiSquareTest};
pub use trace::{write_trace, TRACE_HEADER};

pub const DEFAULT_PACKETS_PER_UE: u64 = 200_000;
pub const DEFAULT_REPLICATIONS: usize = 10;
pub const DEFAULT_QUEUE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub seed: u64,
    /// Delivered packets per UE before a replication stops.
    pub packets_per_ue: u64,
    /// Leading packets per UE excluded from every estimator.
    pub warmup_packets_per_ue: u64,
    pub replications: usize,
    /// Also estimate the correlation terms and edge-queue occupancy.
    pub record_correlations: bool,
    /// Queue length above which a run is flagged as diverging.
    pub queue_cap: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self::new(0, DEFAULT_PACKETS_PER_UE)
    }
}

impl SimParams {
    /// Parameters with the default 10% warmup and replication count.
    pub fn new(seed: u64, packets_per_ue: u64) -> Self {
        Self {
            seed,
            packets_per_ue,
            warmup_packets_per_ue: packets_per_ue / 10,
            replications: DEFAULT_REPLICATIONS,
            record_correlations: false,
            queue_cap: DEFAULT_QUEUE_CAP,
        }
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup_packets_per_ue = warmup;
        self
    }

    pub fn with_correlations(mut self, on: bool) -> Self {
        self.record_correlations = on;
        self
    }

    /// Packets per UE that enter the estimators.
    pub fn retained_per_ue(&self) -> u64 {
        self.packets_per_ue.saturating_sub(self.warmup_packets_per_ue)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParams("replications must be at least 1".into()));
        }
        if self.packets_per_ue <= self.warmup_packets_per_ue {
            return Err(Error::InvalidParams(format!(
                "packets per UE ({}) must exceed warmup ({})",
                self.packets_per_ue, self.warmup_packets_per_ue
            )));
        }
        if self.retained_per_ue() < 2 {
            return Err(Error::InvalidParams(
                "at least 2 packets per UE must remain after warmup".into(),
            ));
        }
        if self.queue_cap == 0 {
            return Err(Error::InvalidParams("queue cap must be positive".into()));
        }
        Ok(())
    }
}

/// Timestamps and delay decomposition of one delivered packet.
///
/// `edge_done − gen_time = wait_edge + service_edge`, and likewise for the
/// transmission and local stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketRecord {
    pub ue: usize,
    /// Index of the packet among its UE's packets, from 0.
    pub seq: u64,
    pub gen_time: f64,
    pub edge_done: f64,
    pub tx_done: f64,
    pub local_done: f64,
    pub wait_edge: f64,
    pub wait_tx: f64,
    pub wait_local: f64,
    pub service_edge: f64,
    pub service_tx: f64,
    pub service_local: f64,
}

impl PacketRecord {
    /// A freshly generated packet with every delay still zero.
    pub fn generated(ue: usize, seq: u64, gen_time: f64) -> Self {
        Self {
            ue,
            seq,
            gen_time,
            edge_done: gen_time,
            tx_done: gen_time,
            local_done: gen_time,
            wait_edge: 0.0,
            wait_tx: 0.0,
            wait_local: 0.0,
            service_edge: 0.0,
            service_tx: 0.0,
            service_local: 0.0,
        }
    }

    /// T_j, generation to local completion.
    pub fn system_time(&self) -> f64 {
        self.local_done - self.gen_time
    }

    pub fn sojourn_edge(&self) -> f64 {
        self.edge_done - self.gen_time
    }

    pub fn sojourn_tx(&self) -> f64 {
        self.tx_done - self.edge_done
    }

    pub fn sojourn_local(&self) -> f64 {
        self.local_done - self.tx_done
    }
}

/// Replication-pooled estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Standard deviation of the replication means over √R; `None` for one
    /// replication.
    pub std_error: Option<f64>,
    /// 95% Student-t interval.
    pub ci95: Option<(f64, f64)>,
    pub per_replication: Vec<f64>,
}

impl Estimate {
    pub fn from_replications(values: Vec<f64>) -> Self {
        let (mean, sd) = mean_sd(&values);
        let r = values.len();
        let std_error = sd.map(|s| s / (r as f64).sqrt());
        let ci95 = std_error.map(|se| {
            let h = t_quantile_95(r - 1) * se;
            (mean - h, mean + h)
        });
        Self {
            mean,
            std_error,
            ci95,
            per_replication: values,
        }
    }

    pub fn half_width(&self) -> Option<f64> {
        self.ci95.map(|(lo, hi)| 0.5 * (hi - lo))
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within_se(&self, value: f64, k: f64) -> bool {
        match self.std_error {
            Some(se) => (self.mean - value).abs() <= k * se,
            None => false,
        }
    }

    /// (mean − value) / SE.
    pub fn z_score(&self, value: f64) -> Option<f64> {
        self.std_error.map(|se| (self.mean - value) / se)
    }
}

/// Estimates of E[Y_j W_{j,·}] and cov(Y_j, W_{j,·}).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimates {
    pub yw_edge: Estimate,
    pub yw_tx: Estimate,
    pub yw_local: Estimate,
    /// Same order as the analytic split terms: transmission before / after,
    /// local before / after.
    pub split: [Estimate; 4],
    pub cov_edge: Estimate,
    pub cov_tx: Estimate,
    pub cov_local: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeEstimates {
    pub aoi: Estimate,
    pub paoi: Estimate,
    pub correlations: Option<CorrelationEstimates>,
    /// Pooled counts of other-UE packets in the edge queue seen by arrivals
    /// that find none of their own; empty without an edge stage.
    pub edge_occupancy: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub max_queue_edge: usize,
    pub max_queue_tx: usize,
    pub max_queue_local: Vec<usize>,
    /// Simulated time τ per replication.
    pub sim_time: Vec<f64>,
    /// Delivered packets per UE and replication.
    pub delivered: Vec<u64>,
    /// A queue exceeded the configured cap.
    pub diverged: bool,
    pub stable: bool,
    pub near_unstable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub per_ue: Vec<UeEstimates>,
    pub system_aoi: Estimate,
    pub system_paoi: Estimate,
    pub diagnostics: Diagnostics,
}

/// Simulate with the default execution policy.
pub fn simulate_mec(cfg: &SystemConfig, params: &SimParams) -> Result<SimResult> {
    simulate_mec_with(cfg, params, Execution::default())
}

pub fn simulate_mec_with(
    cfg: &SystemConfig,
    params: &SimParams,
    exec: Execution,
) -> Result<SimResult> {
    params.validate()?;
    let reps = par::map_indices(params.replications, exec, |r| {
        engine::run_replication(cfg, params, r as u64, |_| {})
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let n = cfg.num_ues();
    let column = |f: &dyn Fn(&engine::ReplicationOutput) -> f64| {
        Estimate::from_replications(reps.iter().map(f).collect())
    };

    let mut per_ue = Vec::with_capacity(n);
    for u in 0..n {
        let acc = |r: &engine::ReplicationOutput| r.ues[u].acc.clone();
        let aoi = column(&|r| acc(r).aoi().unwrap_or(f64::NAN));
        let paoi = column(&|r| acc(r).paoi().unwrap_or(f64::NAN));
        let correlations = params.record_correlations.then(|| {
            let yw = |k: usize| column(&|r| r.ues[u].acc.yw()[k]);
            let split = |k: usize| column(&|r| r.ues[u].acc.yw_split()[k]);
            let cov = |k: usize| column(&|r| r.ues[u].acc.cov()[k]);
            CorrelationEstimates {
                yw_edge: yw(0),
                yw_tx: yw(1),
                yw_local: yw(2),
                split: [split(0), split(1), split(2), split(3)],
                cov_edge: cov(0),
                cov_tx: cov(1),
                cov_local: cov(2),
            }
        });
        let mut edge_occupancy: Vec<u64> = Vec::new();
        for r in &reps {
            let h = &r.ues[u].occupancy;
            if edge_occupancy.len() < h.len() {
                edge_occupancy.resize(h.len(), 0);
            }
            for (a, b) in edge_occupancy.iter_mut().zip(h) {
                *a += b;
            }
        }
        per_ue.push(UeEstimates {
            aoi,
            paoi,
            correlations,
            edge_occupancy,
        });
    }

    let system = |f: &dyn Fn(&PathAccumulator) -> Option<f64>| {
        column(&|r| r.ues.iter().map(|o| f(&o.acc).unwrap_or(f64::NAN)).sum::<f64>() / n as f64)
    };
    let system_aoi = system(&|a| a.aoi());
    let system_paoi = system(&|a| a.paoi());

    let stability = check_stability(cfg);
    let diagnostics = Diagnostics {
        max_queue_edge: reps.iter().map(|r| r.max_edge).max().unwrap_or(0),
        max_queue_tx: reps.iter().map(|r| r.max_tx).max().unwrap_or(0),
        max_queue_local: (0..n)
            .map(|u| reps.iter().map(|r| r.max_local[u]).max().unwrap_or(0))
            .collect(),
        sim_time: reps.iter().map(|r| r.sim_time).collect(),
        delivered: (0..n)
            .map(|u| reps.iter().map(|r| r.delivered[u]).min().unwrap_or(0))
            .collect(),
        diverged: reps.iter().any(|r| r.diverged),
        stable: stability.is_stable(),
        near_unstable: stability.is_near_unstable(),
    };

    Ok(SimResult {
        per_ue,
        system_aoi,
        system_paoi,
        diagnostics,
    })
}

/// Retained records of one replication, grouped by UE in generation order.
pub fn collect_records(
    cfg: &SystemConfig,
    params: &SimParams,
    replication: u64,
) -> Result<Vec<Vec<PacketRecord>>> {
    params.validate()?;
    let mut out = vec![Vec::new(); cfg.num_ues()];
    engine::run_replication(cfg, params, replication, |r| out[r.ue].push(*r))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scheme;

    fn cfg(scheme: Scheme) -> SystemConfig {
        SystemConfig::homogeneous(3, 0.1, 1.5, 1.8, 0.25, scheme).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SimParams::new(1, 100).validate().is_ok());
        assert!(SimParams::new(1, 100).with_warmup(100).validate().is_err());
        assert!(SimParams::new(1, 100).with_replications(0).validate().is_err());
        assert_eq!(SimParams::default().warmup_packets_per_ue, 20_000);
    }

    #[test]
    fn records_satisfy_path_invariants() {
        for scheme in [Scheme::Local, Scheme::Edge, Scheme::Partial(0.4)] {
            let recs = collect_records(&cfg(scheme), &SimParams::new(3, 2_000), 0).unwrap();
            for path in &recs {
                assert_eq!(path.len(), 1_800);
                for w in path.windows(2) {
                    assert!(w[0].gen_time < w[1].gen_time);
                    assert!(w[0].local_done <= w[1].local_done);
                    assert_eq!(w[0].seq + 1, w[1].seq);
                }
                for r in path {
                    assert!(r.gen_time <= r.edge_done && r.edge_done <= r.tx_done);
                    assert!(r.tx_done <= r.local_done);
                    let tol = 1e-9 * r.local_done.max(1.0);
                    assert!((r.sojourn_edge() - r.wait_edge - r.service_edge).abs() < tol);
                    assert!((r.sojourn_tx() - r.wait_tx - r.service_tx).abs() < tol);
                    assert!((r.sojourn_local() - r.wait_local - r.service_local).abs() < tol);
                    match scheme {
                        Scheme::Local => {
                            assert_eq!((r.wait_edge, r.service_edge), (0.0, 0.0));
                            assert_eq!(r.edge_done, r.gen_time);
                        }
                        Scheme::Edge => {
                            assert_eq!((r.wait_local, r.service_local), (0.0, 0.0));
                            assert_eq!(r.local_done, r.tx_done);
                        }
                        Scheme::Partial(_) => {}
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = SimParams::new(42, 3_000).with_replications(3).with_correlations(true);
        let c = cfg(Scheme::Partial(0.5));
        assert_eq!(simulate_mec(&c, &p).unwrap(), simulate_mec(&c, &p).unwrap());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let p = SimParams::new(9, 2_000).with_replications(4);
        let c = cfg(Scheme::Partial(0.5));
        assert_eq!(
            simulate_mec_with(&c, &p, Execution::Sequential).unwrap(),
            simulate_mec_with(&c, &p, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn single_replication_has_no_error_bar() {
        let r = simulate_mec(&cfg(Scheme::Edge), &SimParams::new(1, 1_000).with_replications(1)).unwrap();
        assert!(r.system_aoi.std_error.is_none());
        assert!(r.system_aoi.ci95.is_none());
    }

    #[test]
    fn delivered_counts_equal_request() {
        let r = simulate_mec(&cfg(Scheme::Partial(0.3)), &SimParams::new(5, 1_500).with_replications(2)).unwrap();
        assert_eq!(r.diagnostics.delivered, vec![1_500; 3]);
        assert!(r.diagnostics.stable && !r.diagnostics.diverged);
    }

    #[test]
    fn local_scheme_has_zero_edge_correlation() {
        let r = simulate_mec(
            &cfg(Scheme::Local),
            &SimParams::new(2, 2_000).with_replications(2).with_correlations(true),
        )
        .unwrap();
        for ue in &r.per_ue {
            assert_eq!(ue.correlations.as_ref().unwrap().yw_edge.mean, 0.0);
            assert!(ue.edge_occupancy.is_empty());
        }
    }
}
