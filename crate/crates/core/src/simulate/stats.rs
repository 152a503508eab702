use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-sided 95% Student-t quantile with `dof` degrees of freedom.
pub fn t_quantile_95(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Pearson goodness-of-fit of `counts[k]` against P(K = k) = (1 − q) q^k.
///
/// Bins are used left to right while their expected count is at least 5;
/// everything beyond is pooled into one tail bin.
pub fn geometric_chi_square(counts: &[u64], q: f64) -> Result<ChiSquareTest> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidParams(format!("geometric parameter {q} outside [0, 1)")));
    }
    let total: u64 = counts.iter().sum();
    let total_f = total as f64;
    let mut stat = 0.0;
    let mut bins = 0;
    let mut k = 0;
    loop {
        let expected = total_f * (1.0 - q) * q.powi(k as i32);
        let tail_after = total_f * q.powi(k as i32 + 1);
        if expected < 5.0 || tail_after < 5.0 {
            break;
        }
        let observed = counts.get(k).copied().unwrap_or(0) as f64;
        stat += (observed - expected).powi(2) / expected;
        bins += 1;
        k += 1;
    }
    let tail_expected = total_f * q.powi(k as i32);
    let tail_observed: u64 = counts.iter().skip(k).sum();
    if tail_expected > 0.0 {
        stat += (tail_observed as f64 - tail_expected).powi(2) / tail_expected;
        bins += 1;
    }
    if bins < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: bins,
        });
    }
    let dof = bins - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(stat);
    Ok(ChiSquareTest {
        statistic: stat,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantile_known_values() {
        assert!((t_quantile_95(9) - 2.262157).abs() < 1e-5);
        assert!((t_quantile_95(1000) - 1.962339).abs() < 1e-5);
    }

    #[test]
    fn exact_geometric_counts_pass() {
        let q: f64 = 0.4;
        let counts: Vec<u64> = (0..30).map(|k| (1e6 * (1.0 - q) * q.powi(k)).round() as u64).collect();
        let t = geometric_chi_square(&counts, q).unwrap();
        assert!(t.p_value > 0.99, "{t:?}");
    }

    #[test]
    fn wrong_parameter_fails() {
        let q: f64 = 0.4;
        let counts: Vec<u64> = (0..30).map(|k| (1e5 * (1.0 - q) * q.powi(k)).round() as u64).collect();
        let t = geometric_chi_square(&counts, 0.5).unwrap();
        assert!(t.p_value < 1e-6);
    }
}
