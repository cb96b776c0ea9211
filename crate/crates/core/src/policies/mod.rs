//! Goal-oriented sampling and scheduling.
//!
//! A source process is observed by a sampler that decides *when* to take a
//! sample ([`SamplingPolicy`]); samples wait in a buffer and a scheduler
//! decides *which* of them go out next as a bundle ([`SchedulingPolicy`]).
//! The receiver estimates the source with the newest value it has seen.

mod simulate;

pub use simulate::{
    eq1_empirical_loss, run_sampling, tune_beta, BetaTuning, EstimationTrace, SamplingOutcome,
    SamplingScenario,
};

use std::cmp::Ordering;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::age_metrics::{penalty_eval, AgeError, AgePenalty};
use crate::delay_models::DiscreteTable;
use crate::sim_core::{RngStream, SimTime};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("energy thresholds must not increase with battery level (row {0})")]
    NonMonotoneThresholds(usize),
    #[error("energy table rows must be sorted by battery_level_min (row {0})")]
    UnsortedEnergyTable(usize),
    #[error("energy table is empty")]
    EmptyEnergyTable,
    #[error("buffer is empty")]
    EmptyBuffer,
    #[error("invalid policy: {0}")]
    Invalid(String),
    #[error(transparent)]
    Age(#[from] AgeError),
}

/// The monitored process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceProcess {
    /// Brownian motion; `sigma2` is the variance accrued per second.
    Wiener {
        sigma2: f64,
        #[serde(default)]
        value: f64,
    },
    /// Moves by `±step` with equal probability on each advance.
    DiscreteRandomWalk {
        step: f64,
        #[serde(default)]
        value: f64,
    },
}

impl SourceProcess {
    pub fn wiener(sigma2: f64) -> Self {
        SourceProcess::Wiener { sigma2, value: 0.0 }
    }

    pub fn value(&self) -> f64 {
        match self {
            SourceProcess::Wiener { value, .. } | SourceProcess::DiscreteRandomWalk { value, .. } => {
                *value
            }
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        match self {
            SourceProcess::Wiener { sigma2, value } if *sigma2 >= 0.0 && value.is_finite() => Ok(()),
            SourceProcess::Wiener { .. } => {
                Err(PolicyError::Invalid("wiener sigma2 must be >= 0".into()))
            }
            SourceProcess::DiscreteRandomWalk { step, value } if step.is_finite() && value.is_finite() => {
                Ok(())
            }
            SourceProcess::DiscreteRandomWalk { .. } => {
                Err(PolicyError::Invalid("random walk step must be finite".into()))
            }
        }
    }

    pub fn advance(&mut self, dt_ms: u64, rng: &mut RngStream) -> f64 {
        match self {
            SourceProcess::Wiener { sigma2, value } => {
                let z: f64 = StandardNormal.sample(rng);
                *value += (*sigma2 * dt_ms as f64 / 1000.0).sqrt() * z;
                *value
            }
            SourceProcess::DiscreteRandomWalk { step, value } => {
                if rng.bernoulli(0.5) {
                    *value += *step;
                } else {
                    *value -= *step;
                }
                *value
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: u64,
    pub gen_time: SimTime,
    pub value: f64,
    pub enqueue_time: SimTime,
}

impl Sample {
    pub fn age_at(&self, t: SimTime) -> u64 {
        t.0.saturating_sub(self.gen_time.0)
    }
}

/// One row of an energy-dependent age threshold: at battery levels of at
/// least `battery_level_min` joules, wait until the age reaches `tau` ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, u64)", into = "(f64, u64)")]
pub struct EnergyThreshold {
    pub battery_level_min: f64,
    pub tau: u64,
}

impl From<(f64, u64)> for EnergyThreshold {
    fn from((battery_level_min, tau): (f64, u64)) -> Self {
        Self { battery_level_min, tau }
    }
}

impl From<EnergyThreshold> for (f64, u64) {
    fn from(row: EnergyThreshold) -> Self {
        (row.battery_level_min, row.tau)
    }
}

/// Thresholds must not grow as the stored energy grows: a fuller battery
/// never makes the sender wait longer.
pub fn validate_energy_table(table: &[EnergyThreshold]) -> Result<(), PolicyError> {
    if table.is_empty() {
        return Err(PolicyError::EmptyEnergyTable);
    }
    for (i, w) in table.windows(2).enumerate() {
        if !(w[1].battery_level_min > w[0].battery_level_min) {
            return Err(PolicyError::UnsortedEnergyTable(i + 1));
        }
        if w[1].tau > w[0].tau {
            return Err(PolicyError::NonMonotoneThresholds(i + 1));
        }
    }
    Ok(())
}

/// Threshold for a battery level: the row with the largest
/// `battery_level_min <= level`, or the first row below all of them.
pub fn energy_threshold(table: &[EnergyThreshold], level: f64) -> u64 {
    table
        .iter()
        .rev()
        .find(|row| row.battery_level_min <= level)
        .or(table.first())
        .map_or(0, |row| row.tau)
}

/// When to take the next sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SamplingPolicy {
    /// Sample as soon as nothing is in flight.
    ZeroWait,
    /// Sample at multiples of `period_ms`.
    Periodic { period_ms: u64 },
    /// Sample once the source has drifted by `beta` from the last sample.
    ChangeThreshold { beta: f64 },
    /// Sample once the receiver-side age reaches `tau` ms.
    AgeThreshold { tau: u64 },
    /// Age threshold that depends on the stored energy.
    EnergyAwareAgeThreshold { table: Vec<EnergyThreshold> },
}

impl SamplingPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        match self {
            SamplingPolicy::ZeroWait | SamplingPolicy::AgeThreshold { .. } => Ok(()),
            SamplingPolicy::Periodic { period_ms } if *period_ms > 0 => Ok(()),
            SamplingPolicy::Periodic { .. } => {
                Err(PolicyError::Invalid("period_ms must be > 0".into()))
            }
            SamplingPolicy::ChangeThreshold { beta } if *beta > 0.0 => Ok(()),
            SamplingPolicy::ChangeThreshold { .. } => {
                Err(PolicyError::Invalid("beta must be > 0".into()))
            }
            SamplingPolicy::EnergyAwareAgeThreshold { table } => validate_energy_table(table),
        }
    }

    /// Policies that only sample while the previous sample is no longer
    /// pending; only `Periodic` runs on its own clock.
    pub fn waits_for_delivery(&self) -> bool {
        !matches!(self, SamplingPolicy::Periodic { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    /// Joules.
    pub level: f64,
    pub capacity: f64,
    /// Joules per second.
    pub harvest_rate: f64,
    /// Joules per transmission.
    pub tx_cost: f64,
}

impl Battery {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.capacity >= 0.0 && (0.0..=self.capacity).contains(&self.level)) {
            return Err(PolicyError::Invalid("battery needs 0 <= level <= capacity".into()));
        }
        if !(self.harvest_rate >= 0.0 && self.tx_cost >= 0.0) {
            return Err(PolicyError::Invalid(
                "harvest_rate and tx_cost must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn harvest(&mut self, seconds: f64) {
        self.level = (self.level + self.harvest_rate * seconds).min(self.capacity);
    }

    pub fn can_transmit(&self) -> bool {
        self.level >= self.tx_cost
    }

    /// Spends one transmission's worth of energy if available.
    pub fn try_spend(&mut self) -> bool {
        if self.can_transmit() {
            self.level -= self.tx_cost;
            true
        } else {
            false
        }
    }
}

/// Everything a sampling rule may look at.
#[derive(Debug, Clone, Copy)]
pub struct SamplingContext<'a> {
    pub t: SimTime,
    pub current: f64,
    pub last_sampled_value: Option<f64>,
    pub age_since_last_delivered: u64,
    pub battery: Option<&'a Battery>,
    pub in_flight: bool,
}

pub fn should_sample(policy: &SamplingPolicy, ctx: &SamplingContext<'_>) -> bool {
    match policy {
        SamplingPolicy::ZeroWait => !ctx.in_flight,
        SamplingPolicy::Periodic { period_ms } => ctx.t.0.is_multiple_of(*period_ms),
        SamplingPolicy::ChangeThreshold { beta } => {
            !ctx.in_flight
                && ctx
                    .last_sampled_value
                    .is_none_or(|last| (ctx.current - last).abs() >= *beta)
        }
        SamplingPolicy::AgeThreshold { tau } => ctx.age_since_last_delivered >= *tau,
        SamplingPolicy::EnergyAwareAgeThreshold { table } => match ctx.battery {
            Some(b) => ctx.age_since_last_delivered >= energy_threshold(table, b.level) && b.can_transmit(),
            None => false,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SchedulingRule {
    FreshestFirst,
    OldestFirst,
    /// Minimizes the expected age penalty at delivery under `delay_model`.
    MinExpectedLoss {
        penalty: AgePenalty,
        delay_model: DiscreteTable,
    },
}

/// Which buffered samples form the next bundle, and how many (`k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulingPolicy {
    #[serde(flatten)]
    pub rule: SchedulingRule,
    #[serde(default = "one")]
    pub k: usize,
}

fn one() -> usize {
    1
}

impl SchedulingPolicy {
    pub fn new(rule: SchedulingRule, k: usize) -> Self {
        Self { rule, k }
    }

    pub fn freshest_first(k: usize) -> Self {
        Self::new(SchedulingRule::FreshestFirst, k)
    }

    pub fn oldest_first(k: usize) -> Self {
        Self::new(SchedulingRule::OldestFirst, k)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.k == 0 {
            return Err(PolicyError::Invalid("bundle size k must be >= 1".into()));
        }
        if let SchedulingRule::MinExpectedLoss { delay_model, .. } = &self.rule {
            delay_model
                .validate()
                .map_err(|e| PolicyError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}

/// Expected penalty of the age `s` will have on arrival if sent at `t_now`.
pub fn expected_loss_at_delivery(
    s: &Sample,
    t_now: SimTime,
    delay_table: &DiscreteTable,
    penalty: &AgePenalty,
) -> Result<f64, PolicyError> {
    let mut total = 0.0;
    for (delay, p) in delay_table.iter() {
        let age = (t_now.0 + delay) as f64 - s.gen_time.0 as f64;
        total += p * penalty_eval(penalty, age)?;
    }
    Ok(total)
}

fn fresher_first(a: &Sample, b: &Sample) -> Ordering {
    b.gen_time.cmp(&a.gen_time).then(a.id.cmp(&b.id))
}

/// Indices into `buffer` of the chosen bundle, in selection order.
pub fn select_indices(
    buffer: &[Sample],
    sched: &SchedulingPolicy,
    t_now: SimTime,
) -> Result<Vec<usize>, PolicyError> {
    if buffer.is_empty() {
        return Err(PolicyError::EmptyBuffer);
    }
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    match &sched.rule {
        SchedulingRule::FreshestFirst => order.sort_by(|&a, &b| fresher_first(&buffer[a], &buffer[b])),
        SchedulingRule::OldestFirst => order.sort_by(|&a, &b| {
            buffer[a]
                .gen_time
                .cmp(&buffer[b].gen_time)
                .then(buffer[a].id.cmp(&buffer[b].id))
        }),
        SchedulingRule::MinExpectedLoss { penalty, delay_model } => {
            let losses = buffer
                .iter()
                .map(|s| expected_loss_at_delivery(s, t_now, delay_model, penalty))
                .collect::<Result<Vec<_>, _>>()?;
            order.sort_by(|&a, &b| {
                losses[a]
                    .total_cmp(&losses[b])
                    .then_with(|| fresher_first(&buffer[a], &buffer[b]))
            });
        }
    }
    order.truncate(sched.k);
    Ok(order)
}

pub fn select_for_transmission(
    buffer: &[Sample],
    sched: &SchedulingPolicy,
    t_now: SimTime,
) -> Result<Vec<Sample>, PolicyError> {
    Ok(select_indices(buffer, sched, t_now)?
        .into_iter()
        .map(|i| buffer[i].clone())
        .collect())
}

/// The receiver's estimator: the value of the newest sample it holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    LastValue,
}

impl Estimator {
    /// Estimate from a delivered bundle; `None` for an empty bundle.
    pub fn estimate(&self, bundle: &[Sample]) -> Option<f64> {
        match self {
            Estimator::LastValue => bundle
                .iter()
                .max_by(|a, b| a.gen_time.cmp(&b.gen_time).then(b.id.cmp(&a.id)))
                .map(|s| s.value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: u64, gen: u64) -> Sample {
        Sample {
            id,
            gen_time: SimTime(gen),
            value: id as f64,
            enqueue_time: SimTime(gen),
        }
    }

    fn ctx(t: u64) -> SamplingContext<'static> {
        SamplingContext {
            t: SimTime(t),
            current: 0.0,
            last_sampled_value: Some(0.0),
            age_since_last_delivered: 0,
            battery: None,
            in_flight: false,
        }
    }

    #[test]
    fn zero_variance_source_is_static() {
        let mut src = SourceProcess::wiener(0.0);
        let mut rng = RngStream::new(3, 1);
        for _ in 0..100 {
            assert_eq!(src.advance(10, &mut rng), 0.0);
        }
    }

    #[test]
    fn random_walk_moves_by_step() {
        let mut src = SourceProcess::DiscreteRandomWalk { step: 1.0, value: 0.0 };
        let mut rng = RngStream::new(3, 1);
        let mut prev = 0.0;
        for _ in 0..100 {
            let v = src.advance(1, &mut rng);
            assert_eq!((v - prev).abs(), 1.0);
            prev = v;
        }
    }

    #[test]
    fn wiener_increment_variance() {
        let mut rng = RngStream::new(11, 1);
        let n = 100_000;
        let mut src = SourceProcess::wiener(1.0);
        let incs: Vec<f64> = (0..n)
            .map(|_| {
                let before = src.value();
                src.advance(1000, &mut rng) - before
            })
            .collect();
        let mean = incs.iter().sum::<f64>() / n as f64;
        let var = incs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.97..=1.03).contains(&var), "{var}");
    }

    #[test]
    fn change_threshold_rule() {
        let p = SamplingPolicy::ChangeThreshold { beta: 1.0 };
        let c = SamplingContext { current: 1.2, ..ctx(0) };
        assert!(should_sample(&p, &c));
        assert!(!should_sample(&p, &SamplingContext { in_flight: true, ..c }));
        assert!(!should_sample(&p, &SamplingContext { current: 0.5, ..c }));
        assert!(should_sample(&p, &SamplingContext { last_sampled_value: None, ..c }));
    }

    #[test]
    fn energy_aware_rule_uses_battery_level() {
        let table = vec![(0.0, 20_000).into(), (5.0, 10_000).into()];
        let p = SamplingPolicy::EnergyAwareAgeThreshold { table };
        let low = Battery { level: 3.0, capacity: 10.0, harvest_rate: 0.0, tx_cost: 1.0 };
        let c = SamplingContext {
            age_since_last_delivered: 15_000,
            battery: Some(&low),
            ..ctx(0)
        };
        assert!(!should_sample(&p, &c));
        let high = Battery { level: 6.0, ..low };
        assert!(should_sample(&p, &SamplingContext { battery: Some(&high), ..c }));
        let empty = Battery { level: 0.5, ..low };
        assert!(!should_sample(
            &p,
            &SamplingContext { battery: Some(&empty), age_since_last_delivered: 50_000, ..c }
        ));
    }

    #[test]
    fn periodic_rule() {
        let p = SamplingPolicy::Periodic { period_ms: 10 };
        assert!(should_sample(&p, &ctx(30)));
        assert!(!should_sample(&p, &ctx(31)));
    }

    #[test]
    fn energy_table_validation() {
        let ok: Vec<EnergyThreshold> = vec![(0.0, 20_000).into(), (5.0, 10_000).into()];
        assert!(validate_energy_table(&ok).is_ok());
        let bad: Vec<EnergyThreshold> = vec![(0.0, 10_000).into(), (5.0, 20_000).into()];
        assert_eq!(validate_energy_table(&bad), Err(PolicyError::NonMonotoneThresholds(1)));
        assert!(validate_energy_table(&[(0.0, 1).into()]).is_ok());
        assert_eq!(validate_energy_table(&[]), Err(PolicyError::EmptyEnergyTable));
    }

    #[test]
    fn energy_threshold_lookup() {
        let t: Vec<EnergyThreshold> = vec![(1.0, 30).into(), (5.0, 10).into()];
        assert_eq!(energy_threshold(&t, 0.0), 30);
        assert_eq!(energy_threshold(&t, 4.9), 30);
        assert_eq!(energy_threshold(&t, 5.0), 10);
    }

    #[test]
    fn battery_saturates_and_never_goes_negative() {
        let mut b = Battery { level: 0.5, capacity: 2.0, harvest_rate: 1.0, tx_cost: 1.0 };
        assert!(!b.try_spend());
        b.harvest(10.0);
        assert_eq!(b.level, 2.0);
        assert!(b.try_spend());
        assert!(b.try_spend());
        assert!(!b.try_spend());
        assert_eq!(b.level, 0.0);
    }

    #[test]
    fn expected_loss_examples() {
        let s = sample(0, 100);
        let linear = AgePenalty::Linear { a: 1.0 };
        let det = DiscreteTable::deterministic(40);
        assert_eq!(expected_loss_at_delivery(&s, SimTime(150), &det, &linear).unwrap(), 90.0);
        let zero = DiscreteTable::deterministic(0);
        let fresh = sample(0, 150);
        assert_eq!(expected_loss_at_delivery(&fresh, SimTime(150), &zero, &linear).unwrap(), 0.0);
        let two = DiscreteTable::new(vec![100, 300], vec![0.5, 0.5]).unwrap();
        let aged = sample(0, 0);
        assert_eq!(expected_loss_at_delivery(&aged, SimTime(50), &two, &linear).unwrap(), 250.0);
    }

    #[test]
    fn freshest_and_oldest() {
        let buf = vec![sample(0, 3), sample(1, 7), sample(2, 5)];
        let pick = select_for_transmission(&buf, &SchedulingPolicy::freshest_first(1), SimTime(10)).unwrap();
        assert_eq!(pick[0].gen_time, SimTime(7));
        let pick = select_for_transmission(&buf, &SchedulingPolicy::oldest_first(2), SimTime(10)).unwrap();
        assert_eq!(pick.iter().map(|s| s.id).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(
            select_for_transmission(&[], &SchedulingPolicy::freshest_first(1), SimTime(0)),
            Err(PolicyError::EmptyBuffer)
        );
    }

    #[test]
    fn non_monotone_penalty_prefers_older_sample() {
        let penalty =
            AgePenalty::table(vec![(0.0, 10.0), (300.0, 10.0), (350.0, 0.1), (500.0, 0.1)]).unwrap();
        let sched = SchedulingPolicy::new(
            SchedulingRule::MinExpectedLoss {
                penalty,
                delay_model: DiscreteTable::deterministic(100),
            },
            1,
        );
        // ages 50 and 250 at t_now = 1000
        let buf = vec![sample(0, 950), sample(1, 750)];
        let pick = select_for_transmission(&buf, &sched, SimTime(1000)).unwrap();
        assert_eq!(pick[0].id, 1);
    }

    #[test]
    fn ties_prefer_fresher_then_lower_id() {
        let sched = SchedulingPolicy::new(
            SchedulingRule::MinExpectedLoss {
                penalty: AgePenalty::Linear { a: 0.0 },
                delay_model: DiscreteTable::deterministic(0),
            },
            2,
        );
        let buf = vec![sample(4, 5), sample(2, 9), sample(3, 9)];
        let ids: Vec<u64> = select_for_transmission(&buf, &sched, SimTime(10))
            .unwrap()
            .iter()
            .map(|s| s.id)
            .collect();
        assert_eq!(ids, vec![2, 3]);
    }

    #[test]
    fn last_value_estimator() {
        let bundle = vec![sample(1, 3), sample(2, 8), sample(3, 5)];
        assert_eq!(Estimator::LastValue.estimate(&bundle), Some(2.0));
        assert_eq!(Estimator::LastValue.estimate(&[]), None);
    }

    #[test]
    fn scheduling_policy_serde() {
        let s: SchedulingPolicy = serde_json::from_str(
            r#"{"policy":"min_expected_loss","k":2,
                "penalty":{"type":"linear","a":1.0},
                "delay_model":{"values":[100],"probabilities":[1.0]}}"#,
        )
        .unwrap();
        assert_eq!(s.k, 2);
        let f: SchedulingPolicy = serde_json::from_str(r#"{"policy":"freshest_first"}"#).unwrap();
        assert_eq!(f, SchedulingPolicy::freshest_first(1));
        let p: SamplingPolicy = serde_json::from_str(
            r#"{"type":"energy_aware_age_threshold","table":[[0,20000],[5,10000]]}"#,
        )
        .unwrap();
        assert!(p.validate().is_ok());
    }
}
