//! Dolan–Moré performance profiles.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 64;
pub const GRID_MAX_LOG2: f64 = 10.0;

/// `GRID_POINTS` log-spaced points from 1 to 2¹⁰.
pub fn tau_grid() -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|k| (GRID_MAX_LOG2 * k as f64 / (GRID_POINTS - 1) as f64).exp2())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceProfile {
    pub solvers: Vec<String>,
    pub tau: Vec<f64>,
    /// `rho[s][k]`: fraction of problems solver `s` solves within `tau[k]`
    /// times the best time.
    pub rho: Vec<Vec<f64>>,
}

/// Builds the profile from `times[problem][solver]`; `None` marks a failure.
/// Problems nobody solved count as failures for everyone.
pub fn performance_profile(
    solvers: &[String],
    times: &[Vec<Option<f64>>],
) -> Result<PerformanceProfile> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no problems".into()));
    }
    if let Some(row) = times.iter().find(|r| r.len() != solvers.len()) {
        return Err(Error::Dimension(format!(
            "{} timings for {} solvers",
            row.len(),
            solvers.len()
        )));
    }
    if times
        .iter()
        .flatten()
        .flatten()
        .any(|t| !(t.is_finite() && *t > 0.0))
    {
        return Err(Error::InvalidArgument(
            "timings must be positive and finite".into(),
        ));
    }
    let ratios: Vec<Vec<Option<f64>>> = times
        .iter()
        .map(|row| {
            let best = row.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            row.iter().map(|t| t.map(|t| t / best)).collect()
        })
        .collect();
    let tau = tau_grid();
    let np = times.len() as f64;
    let rho = (0..solvers.len())
        .map(|s| {
            tau.iter()
                .map(|&t| {
                    ratios
                        .iter()
                        .filter(|r| r[s].is_some_and(|x| x <= t))
                        .count() as f64
                        / np
                })
                .collect()
        })
        .collect();
    Ok(PerformanceProfile {
        solvers: solvers.to_vec(),
        tau,
        rho,
    })
}

impl PerformanceProfile {
    /// CSV with a `tau` column followed by one column per solver.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau");
        for s in &self.solvers {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (k, t) in self.tau.iter().enumerate() {
            let _ = write!(out, "{t:e}");
            for row in &self.rho {
                let _ = write!(out, ",{}", row[k]);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = tau_grid();
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 1.0);
        assert!((g[63] - 1024.0).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fastest_solver_starts_at_one() {
        let names = vec!["a".to_string(), "b".to_string()];
        let p = performance_profile(&names, &[vec![Some(1.0), Some(3.0)]]).unwrap();
        assert_eq!(p.rho[0][0], 1.0);
        assert_eq!(p.rho[1][0], 0.0);
        assert_eq!(*p.rho[1].last().unwrap(), 1.0);
    }

    #[test]
    fn failures_never_count() {
        let names = vec!["a".to_string(), "b".to_string()];
        let p = performance_profile(&names, &[vec![Some(2.0), None], vec![Some(4.0), Some(1.0)]])
            .unwrap();
        assert_eq!(p.rho[0][0], 0.5);
        assert_eq!(*p.rho[1].last().unwrap(), 0.5);
        assert!(p.rho.iter().all(|r| r.windows(2).all(|w| w[1] >= w[0])));
        assert!(p.to_csv().starts_with("tau,a,b\n"));
    }
}
