//! Picking the detectability threshold from network observations.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Default multiplier on the standard deviation of active-node counts.
pub const DEFAULT_Z: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtaEstimate {
    /// Nodes that can plausibly stay silent for a latency window.
    pub eta_latency: usize,
    /// `ceil(z * sd)` of the active-node counts.
    pub eta_variance: usize,
    pub eta: usize,
}

/// `eta = max(1, latency_blocks, ceil(z * sd))` where `sd` is the sample
/// standard deviation (n - 1 denominator) of `history`.
pub fn estimate_eta(latency_blocks: usize, history: &[u64], z: f64) -> Result<EtaEstimate> {
    if history.len() < 2 {
        return Err(CoreError::ShortHistory(history.len()));
    }
    if !z.is_finite() || z < 0.0 {
        return Err(CoreError::BadNumber(format!("z = {z}")));
    }
    // exact integer sums, one float step at the end
    let n = history.len() as u128;
    let sum: u128 = history.iter().map(|&x| x as u128).sum();
    let sum_sq: u128 = history.iter().map(|&x| (x as u128) * (x as u128)).sum();
    let numer = n * sum_sq - sum * sum;
    let variance = numer as f64 / (n * (n - 1)) as f64;
    let spread = z * variance.sqrt();
    let eta_variance = if numer == 0 || z == 0.0 { 0 } else { spread.ceil() as usize };
    Ok(EtaEstimate {
        eta_latency: latency_blocks,
        eta_variance,
        eta: 1.max(latency_blocks).max(eta_variance),
    })
}

/// Reads active-node counts from a CSV column, by header name or the first
/// column when `column` is `None`.
pub fn read_history_csv<R: Read>(reader: R, column: Option<&str>) -> Result<Vec<u64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let idx = match column {
        None => 0,
        Some(name) => rdr
            .headers()?
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CoreError::BadNumber(format!("no column {name:?}")))?,
    };
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let field = record.get(idx).unwrap_or("");
        out.push(field.parse().map_err(|_| CoreError::BadNumber(field.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_history_uses_latency() {
        let e = estimate_eta(2, &[50, 50, 50, 50], DEFAULT_Z).unwrap();
        assert_eq!(e, EtaEstimate { eta_latency: 2, eta_variance: 0, eta: 2 });
    }

    #[test]
    fn variance_term_dominates() {
        // mean 10, squared deviations 9 + 9, sd = sqrt(18 / 8) = 1.5
        let history = [10, 10, 10, 10, 10, 10, 10, 13, 7];
        let e = estimate_eta(2, &history, 3.0).unwrap();
        assert_eq!(e.eta_variance, 5);
        assert_eq!(e.eta, 5);
    }

    #[test]
    fn zero_z_falls_back() {
        let e = estimate_eta(0, &[1, 9, 4], 0.0).unwrap();
        assert_eq!(e.eta, 1);
        assert_eq!(estimate_eta(3, &[1, 9, 4], 0.0).unwrap().eta, 3);
    }

    #[test]
    fn short_history_rejected() {
        assert!(matches!(estimate_eta(1, &[], 3.0), Err(CoreError::ShortHistory(0))));
        assert!(matches!(estimate_eta(1, &[4], 3.0), Err(CoreError::ShortHistory(1))));
        assert!(estimate_eta(1, &[4, 5], f64::NAN).is_err());
    }

    #[test]
    fn csv_column() {
        let data = "block,active\n1,10\n2,12\n3, 11\n";
        assert_eq!(read_history_csv(data.as_bytes(), Some("active")).unwrap(), vec![10, 12, 11]);
        assert_eq!(read_history_csv(data.as_bytes(), None).unwrap(), vec![1, 2, 3]);
        assert!(read_history_csv(data.as_bytes(), Some("missing")).is_err());
    }
}
