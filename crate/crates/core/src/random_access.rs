//! Slotted random access with generate-at-will traffic.
//!
//! Every node always has a fresh sample to send. In plain slotted ALOHA each
//! node transmits with probability `p` every slot; in threshold ALOHA a node
//! only contends once its age reaches `gamma` slots, which thins the set of
//! contenders down to the nodes whose information is stalest.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim_core::{streams, RngStream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RaError {
    #[error("invalid random-access config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaNode {
    pub id: u32,
    /// Slots since the node's last successful delivery.
    pub age: u64,
    pub active: bool,
}

impl RaNode {
    pub fn new(id: u32) -> Self {
        Self { id, age: 0, active: false }
    }
}

pub fn make_nodes(n: usize) -> Vec<RaNode> {
    (0..n as u32).map(RaNode::new).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaVariant {
    #[default]
    Plain,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaConfig {
    pub n: usize,
    pub p: f64,
    /// Age threshold in slots; 0 is plain slotted ALOHA.
    pub gamma: u64,
    pub slots: u64,
}

impl RaConfig {
    pub fn validate(&self) -> Result<(), RaError> {
        if self.n == 0 {
            return Err(RaError::Invalid("n must be >= 1".into()));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(RaError::Invalid("p must lie in (0, 1]".into()));
        }
        if self.slots == 0 {
            return Err(RaError::Invalid("slots must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotOutcome {
    Idle,
    Success(u32),
    Collision(Vec<u32>),
}

impl SlotOutcome {
    pub fn transmitter_count(&self) -> usize {
        match self {
            SlotOutcome::Idle => 0,
            SlotOutcome::Success(_) => 1,
            SlotOutcome::Collision(ids) => ids.len(),
        }
    }
}

/// Plays one slot. Nodes with `age >= gamma` are active and each transmits
/// with probability `p`; a lone transmitter succeeds. Afterwards every age
/// grows by one, so the winner ends the slot at age 1.
pub fn step_slot(nodes: &mut [RaNode], cfg: &RaConfig, rng: &mut RngStream) -> SlotOutcome {
    let mut transmitters = Vec::new();
    for node in nodes.iter_mut() {
        node.active = node.age >= cfg.gamma;
        if node.active && rng.bernoulli(cfg.p) {
            transmitters.push(node.id);
        }
    }
    let outcome = match transmitters.len() {
        0 => SlotOutcome::Idle,
        1 => SlotOutcome::Success(transmitters[0]),
        _ => SlotOutcome::Collision(transmitters),
    };
    for node in nodes.iter_mut() {
        node.age += 1;
    }
    if let SlotOutcome::Success(id) = outcome {
        if let Some(node) = nodes.iter_mut().find(|n| n.id == id) {
            node.age = 1;
        }
    }
    outcome
}

/// Successes per slot.
pub fn throughput(outcomes: &[SlotOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    let successes = outcomes
        .iter()
        .filter(|o| matches!(o, SlotOutcome::Success(_)))
        .count();
    successes as f64 / outcomes.len() as f64
}

/// Mean over nodes of each node's per-slot average age. `traces[i]` holds
/// node `i`'s end-of-slot ages.
pub fn average_network_aoi(traces: &[Vec<u64>]) -> f64 {
    if traces.is_empty() {
        return 0.0;
    }
    traces
        .iter()
        .map(|tr| tr.iter().sum::<u64>() as f64 / tr.len().max(1) as f64)
        .sum::<f64>()
        / traces.len() as f64
}

/// What happened in one slot, handed to [`simulate`]'s observer.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord<'a> {
    pub slot: u64,
    pub outcome: &'a SlotOutcome,
    pub active: usize,
    pub mean_age: f64,
    pub nodes: &'a [RaNode],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaReport {
    pub config: RaConfig,
    pub throughput: f64,
    pub average_network_aoi: f64,
    pub per_node_average_age: Vec<f64>,
    pub per_node_successes: Vec<u64>,
    pub successes: u64,
    pub collisions: u64,
    pub idle: u64,
    pub mean_active: f64,
}

pub fn simulate(cfg: &RaConfig, seed: u64) -> Result<RaReport, RaError> {
    simulate_observed(cfg, seed, |_| {})
}

/// Like [`simulate`], calling `observe` after every slot.
pub fn simulate_observed<F>(cfg: &RaConfig, seed: u64, mut observe: F) -> Result<RaReport, RaError>
where
    F: FnMut(&SlotRecord<'_>),
{
    cfg.validate()?;
    let mut rng = RngStream::new(seed, streams::RANDOM_ACCESS);
    let mut nodes = make_nodes(cfg.n);
    let mut age_sums = vec![0u64; cfg.n];
    let mut wins = vec![0u64; cfg.n];
    let (mut successes, mut collisions, mut idle) = (0u64, 0u64, 0u64);
    let mut active_total = 0u64;

    for slot in 0..cfg.slots {
        let outcome = step_slot(&mut nodes, cfg, &mut rng);
        match &outcome {
            SlotOutcome::Idle => idle += 1,
            SlotOutcome::Success(id) => {
                successes += 1;
                wins[*id as usize] += 1;
            }
            SlotOutcome::Collision(_) => collisions += 1,
        }
        let mut total_age = 0u64;
        let mut active = 0usize;
        for (sum, node) in age_sums.iter_mut().zip(&nodes) {
            *sum += node.age;
            total_age += node.age;
            active += node.active as usize;
        }
        active_total += active as u64;
        observe(&SlotRecord {
            slot,
            outcome: &outcome,
            active,
            mean_age: total_age as f64 / cfg.n as f64,
            nodes: &nodes,
        });
    }

    let slots = cfg.slots as f64;
    let per_node_average_age: Vec<f64> = age_sums.iter().map(|&s| s as f64 / slots).collect();
    Ok(RaReport {
        config: *cfg,
        throughput: successes as f64 / slots,
        average_network_aoi: per_node_average_age.iter().sum::<f64>() / cfg.n as f64,
        per_node_average_age,
        per_node_successes: wins,
        successes,
        collisions,
        idle,
        mean_active: active_total as f64 / slots,
    })
}

/// Success probability per slot of plain slotted ALOHA with `n` nodes at `p`.
pub fn aloha_success_probability(n: usize, p: f64) -> f64 {
    n as f64 * p * (1.0 - p).powi(n as i32 - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaTuning {
    pub best: RaConfig,
    pub best_aoi: f64,
    /// `(config, average network AoI, throughput)` per grid point.
    pub table: Vec<(RaConfig, f64, f64)>,
}

/// Grid search minimizing average network AoI, one run per `(p, gamma)`
/// with the common `seed`. For [`RaVariant::Plain`] the gamma grid is ignored.
pub fn tune_ra(
    n: usize,
    variant: RaVariant,
    p_grid: &[f64],
    gamma_grid: &[u64],
    slots: u64,
    seed: u64,
) -> Result<RaTuning, RaError> {
    let gammas: Vec<u64> = match variant {
        RaVariant::Plain => vec![0],
        RaVariant::Threshold => gamma_grid.to_vec(),
    };
    if p_grid.is_empty() || gammas.is_empty() {
        return Err(RaError::Invalid("tuning grids must be nonempty".into()));
    }
    let configs: Vec<RaConfig> = gammas
        .iter()
        .flat_map(|&gamma| p_grid.iter().map(move |&p| RaConfig { n, p, gamma, slots }))
        .collect();
    let table = configs
        .par_iter()
        .map(|cfg| simulate(cfg, seed).map(|r| (*cfg, r.average_network_aoi, r.throughput)))
        .collect::<Result<Vec<_>, _>>()?;
    let (best, best_aoi) = table
        .iter()
        .fold(None::<(RaConfig, f64)>, |acc, &(cfg, aoi, _)| match acc {
            Some((_, a)) if a <= aoi => acc,
            _ => Some((cfg, aoi)),
        })
        .expect("nonempty grid");
    Ok(RaTuning { best, best_aoi, table })
}
