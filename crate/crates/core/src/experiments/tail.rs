use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{DiscreteCDF, Poisson};

use super::ExperimentError;
use crate::model::{PropensityForm, ReactionNetwork};
use crate::stochastic::{DirectSimulator, JumpSimulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub c: u64,
    /// Fraction of replicas with at least `c` reactions in the window.
    pub empirical: f64,
    /// `P(N >= c)` for the dominating Poisson count.
    pub poisson: f64,
}

/// Survival functions of window reaction counts against Poisson tails at
/// the rate bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTable {
    pub omega: f64,
    pub window: f64,
    pub rate_bound: f64,
    pub replicas: u64,
    /// Per-channel Poisson mean `omega * rate_bound * window`.
    pub channel_mean: f64,
    /// Total Poisson mean `M * omega * rate_bound * window`.
    pub total_mean: f64,
    pub max_observed_rate: f64,
    pub per_channel: Vec<Vec<TailRow>>,
    pub total: Vec<TailRow>,
}

impl TailTable {
    /// Rows strictly above the Poisson mean where the empirical tail exceeds
    /// the Poisson tail.
    pub fn dominance_violations(&self) -> Vec<(Option<usize>, TailRow)> {
        let mut out = Vec::new();
        for (a, rows) in self.per_channel.iter().enumerate() {
            for r in rows {
                if r.c as f64 > self.channel_mean && r.empirical > r.poisson {
                    out.push((Some(a), *r));
                }
            }
        }
        for r in &self.total {
            if r.c as f64 > self.total_mean && r.empirical > r.poisson {
                out.push((None, *r));
            }
        }
        out
    }
}

/// Counts of each channel over `[0, window]` from counts `n0`, compared with
/// `Poisson(omega * rate_bound * window)`. Fails if any replica sees a
/// propensity above `rate_bound`.
pub fn reaction_tail(
    net: &ReactionNetwork,
    n0: &[u64],
    window: f64,
    rate_bound: f64,
    replicas: u64,
    seed: u64,
) -> Result<TailTable, ExperimentError> {
    if !(window >= 0.0 && rate_bound > 0.0) || replicas == 0 {
        return Err(ExperimentError::InvalidArgument("window >= 0, rate_bound > 0, replicas > 0".into()));
    }
    let m = net.num_reactions();
    let omega = net.omega();
    let runs: Vec<(Vec<u64>, f64)> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<_, ExperimentError> {
            let mut sim = DirectSimulator::new(net, n0, PropensityForm::MassAction, seed, r)?;
            let mut counts = vec![0u64; m];
            let mut props = vec![0.0; m];
            net.count_propensities_into(sim.counts(), PropensityForm::MassAction, &mut props);
            let mut max_rate = props.iter().copied().fold(0.0, f64::max);
            while let Some((_, a)) = sim.next_event(window)? {
                counts[a] += 1;
                net.count_propensities_into(sim.counts(), PropensityForm::MassAction, &mut props);
                max_rate = props.iter().copied().fold(max_rate, f64::max);
            }
            Ok((counts, max_rate))
        })
        .collect::<Result<_, _>>()?;
    let max_observed_rate = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    if max_observed_rate > rate_bound {
        return Err(ExperimentError::RateBoundViolated {
            observed: max_observed_rate,
            bound: rate_bound,
        });
    }
    let channel_mean = omega * rate_bound * window;
    let total_mean = m as f64 * channel_mean;
    let per_channel = (0..m)
        .map(|a| survival(runs.iter().map(|r| r.0[a]).collect(), channel_mean))
        .collect();
    let total = survival(runs.iter().map(|r| r.0.iter().sum()).collect(), total_mean);
    Ok(TailTable {
        omega,
        window,
        rate_bound,
        replicas,
        channel_mean,
        total_mean,
        max_observed_rate,
        per_channel,
        total,
    })
}

/// Rows for `c = 0 ..` until both the empirical tail is zero and the
/// Poisson tail is below 1e-12.
fn survival(mut samples: Vec<u64>, mean: f64) -> Vec<TailRow> {
    samples.sort_unstable();
    let n = samples.len() as f64;
    let poisson = (mean > 0.0).then(|| Poisson::new(mean).expect("positive mean"));
    let tail = |c: u64| -> f64 {
        match (&poisson, c) {
            (_, 0) => 1.0,
            (None, _) => 0.0,
            (Some(p), c) => p.sf(c - 1),
        }
    };
    let max = samples.last().copied().unwrap_or(0);
    let mut rows = Vec::new();
    let mut c = 0u64;
    loop {
        let at_least = samples.len() - samples.partition_point(|&v| v < c);
        let row = TailRow {
            c,
            empirical: at_least as f64 / n,
            poisson: tail(c),
        };
        rows.push(row);
        if c > max && row.poisson < 1e-12 {
            break;
        }
        c += 1;
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_rows() {
        let rows = survival(vec![0, 1, 1, 3], 0.5);
        assert_eq!(rows[0].empirical, 1.0);
        assert_eq!(rows[1].empirical, 0.75);
        assert_eq!(rows[2].empirical, 0.25);
        assert_eq!(rows[4].empirical, 0.0);
        assert!((rows[1].poisson - (1.0 - (-0.5f64).exp())).abs() < 1e-12);
        let empty = survival(vec![0, 0], 0.0);
        assert_eq!(empty[1].empirical, 0.0);
        assert_eq!(empty[1].poisson, 0.0);
    }
}
