use aoi_mec::analytic::{correlation_targets, system_metrics, PhiTerms};
use aoi_mec::simulate::{Estimate, SimResult};
use aoi_mec::{Scheme, SystemConfig};

/// Largest accepted |z|, in standard errors.
pub const Z_LIMIT: f64 = 3.0;

/// Relative distortion applied by a corrupted term.
pub const CORRUPTION_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `system` or `ue<n>`.
    pub scope: String,
    pub term: String,
    pub analytic: f64,
    pub simulated: f64,
    pub std_error: Option<f64>,
    pub z: Option<f64>,
    pub pass: bool,
}

impl Comparison {
    fn new(scope: String, term: &str, analytic: f64, est: &Estimate) -> Self {
        let z = est.z_score(analytic).filter(|z| z.is_finite());
        // A stage that never holds a packet gives zero in every replication.
        let exact = est.std_error == Some(0.0) && (est.mean - analytic).abs() <= 1e-12 * analytic.abs().max(1.0);
        Comparison {
            scope,
            term: term.to_string(),
            analytic,
            simulated: est.mean,
            std_error: est.std_error,
            pass: exact || z.is_some_and(|z| z.abs() <= Z_LIMIT),
            z,
        }
    }

    pub fn name(&self) -> String {
        format!("{} {}", self.scope, self.term)
    }
}

/// UEs whose terms are compared: all of them, or only the first when every
/// UE has the same rates and the others would repeat it.
fn compared_ues(cfg: &SystemConfig) -> Vec<usize> {
    if cfg.is_homogeneous() {
        vec![0]
    } else {
        (0..cfg.num_ues()).collect()
    }
}

/// Compare simulated AoI, PAoI and correlation terms with the closed forms.
///
/// `corrupt` names a term whose analytic value is scaled by
/// [`CORRUPTION_FACTOR`] before comparison, to check that the report can
/// fail.
pub fn compare(cfg: &SystemConfig, sim: &SimResult, corrupt: Option<&str>) -> aoi_mec::Result<Vec<Comparison>> {
    let m = system_metrics(cfg)?;
    let scheme = cfg.scheme().normalized();
    let tweak = |term: &str, v: f64| if corrupt == Some(term) { v * CORRUPTION_FACTOR } else { v };

    let mut out = vec![
        Comparison::new("system".into(), "aoi", tweak("aoi", m.system_aoi), &sim.system_aoi),
        Comparison::new("system".into(), "paoi", tweak("paoi", m.system_paoi), &sim.system_paoi),
    ];
    for ue in compared_ues(cfg) {
        let scope = format!("ue{ue}");
        let est = &sim.per_ue[ue];
        out.push(Comparison::new(scope.clone(), "aoi", tweak("aoi", m.per_ue_aoi[ue]), &est.aoi));
        out.push(Comparison::new(scope.clone(), "paoi", tweak("paoi", m.per_ue_paoi[ue]), &est.paoi));

        let Some(c) = &est.correlations else { continue };
        let t = correlation_targets(cfg, ue)?;
        let mut stage = |term: &str, target: f64, e: &Estimate| {
            out.push(Comparison::new(scope.clone(), term, tweak(term, target), e));
        };
        if scheme != Scheme::Local {
            stage("yw_edge", t.yw_edge, &c.yw_edge);
        }
        stage("yw_tx", t.yw_tx, &c.yw_tx);
        if scheme != Scheme::Edge {
            stage("yw_local", t.yw_local, &c.yw_local);
        }
        if let Some(split) = t.split {
            let used = if scheme == Scheme::Edge { 2 } else { 4 };
            for k in 0..used {
                stage(PhiTerms::NAMES[k], split.as_array()[k], &c.split[k]);
            }
        }
    }
    Ok(out)
}
