//! Sample-path estimators over delivered packets of one UE.
//!
//! Records must be in generation order. The first record of a path has no
//! predecessor: it contributes to the PAoI mean (with `t_0 = 0`) but not to
//! the AoI ratio or the correlation sums.

use super::PacketRecord;
use crate::error::{Error, Result};

/// Q_j = Y_j²/2 + Y_j·T_j, the trapezoid area between two deliveries.
pub fn trapezoid_area(y: f64, t: f64) -> f64 {
    0.5 * y * y + y * t
}

/// Streaming sums behind every per-UE estimator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathAccumulator {
    prev_gen: f64,
    prev_tx_done: f64,
    seen: u64,

    /// Packets with a predecessor contributing to the sums below.
    pub pairs: u64,
    pub sum_y: f64,
    pub sum_q: f64,
    /// Σ Y·W per stage (edge, transmission, local).
    pub sum_yw: [f64; 3],
    /// Σ W per stage.
    pub sum_w: [f64; 3],
    /// Σ Y·W_D and Σ Y·W_U split by whether the packet reached the
    /// transmission queue before its predecessor left it.
    pub split: [f64; 4],

    /// Packets contributing to the PAoI mean.
    pub peaks: u64,
    pub sum_a: f64,
}

impl PathAccumulator {
    /// Sequence number expected next.
    pub fn next_seq(&self) -> u64 {
        self.seen
    }

    /// Feed the next packet; `retain` controls whether it enters the sums.
    pub fn push(&mut self, rec: &PacketRecord, retain: bool) {
        let has_prev = self.seen > 0;
        let y = rec.gen_time - self.prev_gen;
        if retain {
            self.peaks += 1;
            self.sum_a += y + rec.system_time();
            if has_prev {
                let w = [rec.wait_edge, rec.wait_tx, rec.wait_local];
                self.pairs += 1;
                self.sum_y += y;
                self.sum_q += trapezoid_area(y, rec.system_time());
                for k in 0..3 {
                    self.sum_yw[k] += y * w[k];
                    self.sum_w[k] += w[k];
                }
                let before = rec.edge_done < self.prev_tx_done;
                let off = if before { 0 } else { 1 };
                self.split[off] += y * rec.wait_tx;
                self.split[2 + off] += y * rec.wait_local;
            }
        }
        self.prev_gen = rec.gen_time;
        self.prev_tx_done = rec.tx_done;
        self.seen += 1;
    }

    pub fn aoi(&self) -> Option<f64> {
        (self.pairs > 0 && self.sum_y > 0.0).then(|| self.sum_q / self.sum_y)
    }

    pub fn paoi(&self) -> Option<f64> {
        (self.peaks > 0).then(|| self.sum_a / self.peaks as f64)
    }

    fn per_pair(&self, x: f64) -> f64 {
        x / self.pairs as f64
    }

    /// E[Y W] per stage.
    pub fn yw(&self) -> [f64; 3] {
        self.sum_yw.map(|s| self.per_pair(s))
    }

    /// E[Y W_D; before], E[Y W_D; after], E[Y W_U; before], E[Y W_U; after].
    pub fn yw_split(&self) -> [f64; 4] {
        self.split.map(|s| self.per_pair(s))
    }

    /// Sample covariance of (Y, W) per stage.
    pub fn cov(&self) -> [f64; 3] {
        let ey = self.per_pair(self.sum_y);
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = self.per_pair(self.sum_yw[k]) - ey * self.per_pair(self.sum_w[k]);
        }
        out
    }
}

/// Ratio estimator Σ Q_j / Σ Y_j over `j ≥ 2`, together with every Q_j.
pub fn aoi_from_path(records: &[PacketRecord]) -> Result<(f64, Vec<f64>)> {
    if records.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: records.len(),
        });
    }
    let q: Vec<f64> = records
        .windows(2)
        .map(|w| trapezoid_area(w[1].gen_time - w[0].gen_time, w[1].system_time()))
        .collect();
    let sum_y = records[records.len() - 1].gen_time - records[0].gen_time;
    if sum_y <= 0.0 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: 1,
        });
    }
    Ok((q.iter().sum::<f64>() / sum_y, q))
}

/// Mean of A_j = Y_j + T_j, taking `t_0 = 0` for the first record.
pub fn paoi_from_path(records: &[PacketRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut prev = 0.0;
    let mut sum = 0.0;
    for r in records {
        sum += r.gen_time - prev + r.system_time();
        prev = r.gen_time;
    }
    Ok(sum / records.len() as f64)
}

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMean {
    pub mean: f64,
    pub std_error: f64,
}

/// Path estimates of E[Y_j W_{j,B}], E[Y_j W_{j,D}], E[Y_j W_{j,U}].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTerms {
    pub edge: SampleMean,
    pub tx: SampleMean,
    pub local: SampleMean,
}

/// Minimum number of records for [`estimate_correlation_terms`].
pub const MIN_CORRELATION_RECORDS: usize = 100;
const BATCHES: usize = 20;

/// Mean with a batch-means standard error; consecutive products along one
/// path are autocorrelated, so the naive i.i.d. error would be too small.
fn batch_mean(xs: &[f64]) -> SampleMean {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let size = n / BATCHES;
    let batches: Vec<f64> = xs
        .chunks_exact(size)
        .take(BATCHES)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let bm = batches.iter().sum::<f64>() / BATCHES as f64;
    let var = batches.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    SampleMean {
        mean,
        std_error: (var / BATCHES as f64).sqrt(),
    }
}

/// Sample means of Y_j·W_{j,·} over `j ≥ 2` of one UE's path.
pub fn estimate_correlation_terms(records: &[PacketRecord]) -> Result<CorrelationTerms> {
    if records.len() < MIN_CORRELATION_RECORDS {
        return Err(Error::InsufficientData {
            needed: MIN_CORRELATION_RECORDS,
            got: records.len(),
        });
    }
    let mut prods: [Vec<f64>; 3] = Default::default();
    for w in records.windows(2) {
        let y = w[1].gen_time - w[0].gen_time;
        prods[0].push(y * w[1].wait_edge);
        prods[1].push(y * w[1].wait_tx);
        prods[2].push(y * w[1].wait_local);
    }
    Ok(CorrelationTerms {
        edge: batch_mean(&prods[0]),
        tx: batch_mean(&prods[1]),
        local: batch_mean(&prods[2]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(gen: f64, t: f64) -> PacketRecord {
        let mut r = PacketRecord::generated(0, 0, gen);
        r.edge_done = gen;
        r.tx_done = gen;
        r.local_done = gen + t;
        r.service_local = t;
        r
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid_area(2.0, 1.0), 4.0);
        assert_eq!(trapezoid_area(0.0, 5.0), 0.0);
    }

    #[test]
    fn aoi_three_packets() {
        let path = [rec(1.0, 1.0), rec(3.0, 1.0), rec(5.0, 1.0)];
        let (d, q) = aoi_from_path(&path).unwrap();
        assert_eq!(q, vec![4.0, 4.0]);
        assert_eq!(d, 2.0);
    }

    #[test]
    fn aoi_needs_two() {
        assert_eq!(
            aoi_from_path(&[rec(1.0, 1.0)]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        );
    }

    #[test]
    fn paoi_examples() {
        assert_eq!(paoi_from_path(&[rec(2.0, 1.0)]).unwrap(), 3.0);
        assert_eq!(paoi_from_path(&[rec(2.0, 1.0), rec(6.0, 1.0)]).unwrap(), 4.0);
        assert!(paoi_from_path(&[]).is_err());
    }

    #[test]
    fn accumulator_matches_slice_estimators() {
        let path: Vec<_> = (0..50)
            .map(|i| rec(1.5 * i as f64 + 0.1 * (i % 7) as f64 + 0.3, 0.2 + 0.05 * (i % 5) as f64))
            .collect();
        let mut acc = PathAccumulator::default();
        for r in &path {
            acc.push(r, true);
        }
        let (d, _) = aoi_from_path(&path).unwrap();
        assert!((acc.aoi().unwrap() - d).abs() < 1e-12);
        assert!((acc.paoi().unwrap() - paoi_from_path(&path).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn correlation_needs_hundred() {
        let path: Vec<_> = (0..99).map(|i| rec(i as f64, 1.0)).collect();
        assert!(matches!(
            estimate_correlation_terms(&path),
            Err(Error::InsufficientData { needed: 100, got: 99 })
        ));
    }
}
