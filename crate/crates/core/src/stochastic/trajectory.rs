use serde::Serialize;

use super::{JumpSimulator, StochasticError};
use crate::model::ReactionNetwork;

/// A recorded jump path: event times, channel labels and the initial
/// counts. Counts at any time are reconstructed from the stoichiometry.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrajectory {
    initial_counts: Vec<u64>,
    times: Vec<f64>,
    channels: Vec<usize>,
    t_end: f64,
    changes: Vec<Vec<(usize, i64)>>,
}

/// Event counts in a time window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowCounts {
    pub per_channel: Vec<u64>,
    pub total: u64,
}

impl JumpTrajectory {
    /// Run `sim` to `t_end` and record every event.
    pub fn record<S: JumpSimulator>(
        net: &ReactionNetwork,
        sim: &mut S,
        t_end: f64,
    ) -> Result<Self, StochasticError> {
        let mut traj = Self {
            initial_counts: sim.counts().to_vec(),
            times: Vec::new(),
            channels: Vec::new(),
            t_end,
            changes: (0..net.num_reactions()).map(|a| net.changes(a).to_vec()).collect(),
        };
        while let Some((t, a)) = sim.next_event(t_end)? {
            traj.times.push(t);
            traj.channels.push(a);
        }
        Ok(traj)
    }

    pub fn initial_counts(&self) -> &[u64] {
        &self.initial_counts
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn channels(&self) -> &[usize] {
        &self.channels
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn num_channels(&self) -> usize {
        self.changes.len()
    }

    /// `(t_k, a_k)` pairs.
    pub fn events(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.times.iter().copied().zip(self.channels.iter().copied())
    }

    /// `n(t) = n(0) + sum_{t_k <= t} S e_{a_k}`.
    pub fn counts_at(&self, t: f64) -> Vec<u64> {
        let mut n: Vec<i64> = self.initial_counts.iter().map(|&v| v as i64).collect();
        for (tk, a) in self.events() {
            if tk > t {
                break;
            }
            for &(i, d) in &self.changes[a] {
                n[i] += d;
            }
        }
        n.into_iter().map(|v| v as u64).collect()
    }

    /// Counts after every event, preceded by the initial counts.
    pub fn count_path(&self) -> Vec<Vec<u64>> {
        let mut n: Vec<i64> = self.initial_counts.iter().map(|&v| v as i64).collect();
        let mut out = Vec::with_capacity(self.len() + 1);
        out.push(self.initial_counts.clone());
        for &a in &self.channels {
            for &(i, d) in &self.changes[a] {
                n[i] += d;
            }
            out.push(n.iter().map(|&v| v as u64).collect());
        }
        out
    }

    /// `N_a(t)`: events of each channel with `t_k <= t`.
    pub fn reaction_counters(&self, t: f64) -> Vec<u64> {
        let end = self.times.partition_point(|&tk| tk <= t);
        let mut out = vec![0; self.num_channels()];
        for &a in &self.channels[..end] {
            out[a] += 1;
        }
        out
    }

    /// Events with `u < t_k <= t`, so that the counts equal
    /// `N_a(t) - N_a(u)` and an empty window counts nothing.
    pub fn count_reactions(&self, u: f64, t: f64) -> WindowCounts {
        assert!(u <= t, "window start after end");
        let lo = self.times.partition_point(|&tk| tk <= u);
        let hi = self.times.partition_point(|&tk| tk <= t);
        let mut per_channel = vec![0; self.num_channels()];
        for &a in &self.channels[lo..hi] {
            per_channel[a] += 1;
        }
        WindowCounts {
            per_channel,
            total: (hi - lo) as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::ssa_direct;
    use crate::model::{parse_network, PropensityForm};

    #[test]
    fn counters_and_windows() {
        let net = parse_network("2.0 : -> X\n1.0 : X -> ", 30.0).unwrap();
        let traj = ssa_direct(&net, &[10], 4.0, 5, PropensityForm::MassAction).unwrap();
        assert!(traj.len() > 50);
        assert!(traj.times().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(traj.count_reactions(1.0, 1.0).total, 0);
        assert_eq!(traj.count_reactions(0.0, 4.0).total as usize, traj.len());
        let c = traj.reaction_counters(2.5);
        let w = traj.count_reactions(0.0, 2.5);
        assert_eq!(c, w.per_channel);
        let n = traj.counts_at(4.0);
        let path = traj.count_path();
        assert_eq!(&n, path.last().unwrap());
        let births = traj.reaction_counters(4.0)[0] as i64;
        let deaths = traj.reaction_counters(4.0)[1] as i64;
        assert_eq!(n[0] as i64, 10 + births - deaths);
    }
}
