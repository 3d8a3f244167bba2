//! Informative layer dynamics: a global random drive followed by
//! threshold-triggered relaxation across the small-world graph.
//!
//! A trader whose information reaches the threshold topples: its level drops
//! to zero and a fraction `alpha` of it is split evenly among its neighbours,
//! which may push them over in turn. Information sent to neighbours is divided
//! by the trader's own degree, so boundary traders leak less in absolute terms
//! but nothing is renormalised.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::topology::AdjacencyList;

#[derive(Debug, Clone, PartialEq)]
pub struct InformativeState {
    pub info: Vec<f64>,
    pub threshold: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvalancheResult {
    pub trigger: usize,
    /// Toppling order, with repeats when an agent topples more than once.
    pub topplings: Vec<usize>,
    /// Distinct toppled agents, sorted.
    pub participants: Vec<usize>,
}

impl AvalancheResult {
    pub fn size(&self) -> usize {
        self.topplings.len()
    }
}

impl InformativeState {
    /// Levels drawn uniformly from `[0, threshold)`.
    pub fn random<R: Rng + ?Sized>(n: usize, threshold: f64, alpha: f64, rng: &mut R) -> Self {
        let info = (0..n).map(|_| rng.random::<f64>() * threshold).collect();
        InformativeState { info, threshold, alpha }
    }

    pub fn max_level(&self) -> f64 {
        self.info.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.info.iter().sum()
    }

    /// Adds an independent uniform increment from `[0, threshold - max]` to
    /// every agent, then lifts the (new) maximum agent exactly to the
    /// threshold. Returns that agent, which is the trigger of this step.
    pub fn drive<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let headroom = (self.threshold - self.max_level()).max(0.0);
        for level in &mut self.info {
            *level += rng.random::<f64>() * headroom;
        }
        let trigger = argmax(&self.info);
        self.info[trigger] = self.threshold;
        trigger
    }

    /// Relaxes the cascade started by `trigger` until every level is below the
    /// threshold. Over-threshold agents are processed first-in first-out.
    pub fn relax(
        &mut self,
        graph: &AdjacencyList,
        trigger: usize,
        cap: usize,
    ) -> Result<AvalancheResult> {
        debug_assert_eq!(graph.len(), self.info.len());
        let mut queue = VecDeque::from([trigger]);
        let mut queued = vec![false; self.info.len()];
        queued[trigger] = true;
        let mut topplings = Vec::new();

        while let Some(k) = queue.pop_front() {
            queued[k] = false;
            if self.info[k] < self.threshold {
                continue;
            }
            if topplings.len() >= cap {
                return Err(Error::RunawayAvalanche { cap });
            }
            topplings.push(k);
            let released = std::mem::take(&mut self.info[k]);
            let neighbours = graph.neighbors(k);
            let share = self.alpha * released / neighbours.len() as f64;
            for &j in neighbours {
                self.info[j] += share;
                if self.info[j] >= self.threshold && !queued[j] {
                    queued[j] = true;
                    queue.push_back(j);
                }
            }
        }

        let mut participants = topplings.clone();
        participants.sort_unstable();
        participants.dedup();
        Ok(AvalancheResult {
            trigger,
            topplings,
            participants,
        })
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
