use rayon::prelude::*;

use crate::age_metrics::{penalty_eval, AgePenalty, AgeTracker};
use crate::delay_models::DelayProcess;
use crate::sim_core::{streams, Engine, EventKind, EventQueue, RngStream, SimError, SimTime};

use super::{
    select_indices, should_sample, Battery, Estimator, PolicyError, Sample, SamplingContext,
    SamplingPolicy, SchedulingPolicy, SourceProcess,
};

const HARVEST_PERIOD_MS: u64 = 1000;

/// A single source/sampler/channel/receiver loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingScenario {
    pub source: SourceProcess,
    pub policy: SamplingPolicy,
    pub scheduler: SchedulingPolicy,
    pub delay: DelayProcess,
    pub horizon_ms: u64,
    pub tick_ms: u64,
    pub initial_age_ms: u64,
    pub battery: Option<Battery>,
    /// Optional age penalty averaged over the run.
    pub penalty: Option<AgePenalty>,
    /// Keep the per-tick truth/estimate paths in the outcome.
    pub record_trace: bool,
}

impl SamplingScenario {
    pub fn new(source: SourceProcess, policy: SamplingPolicy, delay: DelayProcess, horizon_ms: u64) -> Self {
        Self {
            source,
            policy,
            scheduler: SchedulingPolicy::freshest_first(1),
            delay,
            horizon_ms,
            tick_ms: 1,
            initial_age_ms: 0,
            battery: None,
            penalty: None,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        self.source.validate()?;
        self.policy.validate()?;
        self.scheduler.validate()?;
        self.delay
            .validate()
            .map_err(|e| PolicyError::Invalid(e.to_string()))?;
        if self.horizon_ms == 0 || self.tick_ms == 0 {
            return Err(PolicyError::Invalid("horizon_ms and tick_ms must be > 0".into()));
        }
        if let Some(b) = &self.battery {
            b.validate()?;
        }
        if matches!(self.policy, SamplingPolicy::EnergyAwareAgeThreshold { .. }) && self.battery.is_none() {
            return Err(PolicyError::Invalid(
                "energy-aware sampling needs a battery".into(),
            ));
        }
        Ok(())
    }
}

/// True source path and the receiver's estimate, one entry per tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimationTrace {
    pub tick_ms: u64,
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
}

/// Time-average squared estimation error over the ticks of `trace`.
pub fn eq1_empirical_loss(trace: &EstimationTrace) -> f64 {
    let n = trace.truth.len().min(trace.estimate.len());
    if n == 0 {
        return 0.0;
    }
    trace
        .truth
        .iter()
        .zip(&trace.estimate)
        .map(|(x, h)| (x - h) * (x - h))
        .sum::<f64>()
        / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOutcome {
    pub time_average_age_ms: f64,
    pub eq1_loss: f64,
    pub mean_penalty: Option<f64>,
    pub samples_generated: u64,
    pub transmissions: u64,
    pub delivered_samples: u64,
    pub energy_consumed_j: f64,
    pub min_battery_level: Option<f64>,
    pub horizon_ms: u64,
    pub tracker: AgeTracker,
    pub trace: Option<EstimationTrace>,
}

impl SamplingOutcome {
    pub fn sample_rate_per_s(&self) -> f64 {
        self.samples_generated as f64 / (self.horizon_ms as f64 / 1000.0)
    }

    /// Period in ms of a uniform sampler with the same long-run rate.
    pub fn matched_period_ms(&self) -> u64 {
        if self.samples_generated == 0 {
            return self.horizon_ms;
        }
        ((self.horizon_ms as f64 / self.samples_generated as f64).round() as u64).max(1)
    }
}

struct SamplingSim {
    source: SourceProcess,
    policy: SamplingPolicy,
    scheduler: SchedulingPolicy,
    delay: DelayProcess,
    tick_ms: u64,
    horizon_ms: u64,
    battery: Option<Battery>,
    penalty: Option<AgePenalty>,
    source_rng: RngStream,
    delay_rng: RngStream,
    tracker: AgeTracker,
    buffer: Vec<Sample>,
    in_flight: Option<Vec<Sample>>,
    next_token: u64,
    estimate: f64,
    estimate_gen: Option<SimTime>,
    last_sampled_value: Option<f64>,
    next_id: u64,
    loss_sum: f64,
    penalty_sum: f64,
    ticks: u64,
    samples_generated: u64,
    transmissions: u64,
    delivered_samples: u64,
    energy_consumed: f64,
    min_battery: Option<f64>,
    trace: Option<EstimationTrace>,
}

impl SamplingSim {
    fn on_sample_check(&mut self, t: SimTime, queue: &mut EventQueue) -> Result<(), PolicyError> {
        if t.0 > 0 {
            self.source.advance(self.tick_ms, &mut self.source_rng);
        }
        let current = self.source.value();
        let busy = self.in_flight.is_some() || !self.buffer.is_empty();
        let age = self.tracker.instantaneous_age(t)?;
        let may_sample = !(self.policy.waits_for_delivery() && busy);
        let ctx = SamplingContext {
            t,
            current,
            last_sampled_value: self.last_sampled_value,
            age_since_last_delivered: age,
            battery: self.battery.as_ref(),
            in_flight: busy,
        };
        if may_sample && should_sample(&self.policy, &ctx) {
            self.buffer.push(Sample {
                id: self.next_id,
                gen_time: t,
                value: current,
                enqueue_time: t,
            });
            self.next_id += 1;
            self.samples_generated += 1;
            self.last_sampled_value = Some(current);
        }
        self.try_transmit(t, queue)?;

        let err = current - self.estimate;
        self.loss_sum += err * err;
        if let Some(p) = &self.penalty {
            self.penalty_sum += penalty_eval(p, self.tracker.instantaneous_age(t)? as f64)?;
        }
        if let Some(trace) = &mut self.trace {
            trace.truth.push(current);
            trace.estimate.push(self.estimate);
        }
        self.ticks += 1;

        let next = t + self.tick_ms;
        if next.0 < self.horizon_ms {
            queue.schedule(next, EventKind::SampleCheck).map_err(sim_err)?;
        }
        Ok(())
    }

    fn try_transmit(&mut self, t: SimTime, queue: &mut EventQueue) -> Result<(), PolicyError> {
        while self.in_flight.is_none() && !self.buffer.is_empty() && self.delay.available(t) {
            if let Some(b) = &mut self.battery {
                if !b.try_spend() {
                    return Ok(());
                }
                self.energy_consumed += b.tx_cost;
                self.min_battery = Some(self.min_battery.map_or(b.level, |m: f64| m.min(b.level)));
            }
            let mut picked = select_indices(&self.buffer, &self.scheduler, t)?;
            picked.sort_unstable_by(|a, b| b.cmp(a));
            let bundle: Vec<Sample> = picked.into_iter().map(|i| self.buffer.remove(i)).collect();
            let delay = self
                .delay
                .sample_delay(t, &mut self.delay_rng)
                .map_err(|e| PolicyError::Invalid(e.to_string()))?;
            self.transmissions += 1;
            if delay == 0 {
                self.deliver(t, bundle)?;
            } else {
                let token = self.next_token;
                self.next_token += 1;
                self.in_flight = Some(bundle);
                queue
                    .schedule(t + delay, EventKind::Delivery(token))
                    .map_err(sim_err)?;
            }
        }
        Ok(())
    }

    fn deliver(&mut self, t: SimTime, bundle: Vec<Sample>) -> Result<(), PolicyError> {
        let newest = bundle
            .iter()
            .map(|s| s.gen_time)
            .max()
            .expect("bundles are nonempty");
        self.tracker.record_delivery(newest, t)?;
        if self.estimate_gen.is_none_or(|g| newest > g) {
            if let Some(v) = Estimator::LastValue.estimate(&bundle) {
                self.estimate = v;
                self.estimate_gen = Some(newest);
            }
        }
        self.delivered_samples += bundle.len() as u64;
        Ok(())
    }

    fn on_delivery(&mut self, t: SimTime, queue: &mut EventQueue) -> Result<(), PolicyError> {
        if let Some(bundle) = self.in_flight.take() {
            self.deliver(t, bundle)?;
        }
        self.try_transmit(t, queue)
    }

    fn on_harvest(&mut self, t: SimTime, queue: &mut EventQueue) -> Result<(), PolicyError> {
        if let Some(b) = &mut self.battery {
            b.harvest(HARVEST_PERIOD_MS as f64 / 1000.0);
        }
        let next = t + HARVEST_PERIOD_MS;
        if next.0 < self.horizon_ms {
            queue.schedule(next, EventKind::HarvestTick).map_err(sim_err)?;
        }
        self.try_transmit(t, queue)
    }
}

fn sim_err(e: SimError) -> PolicyError {
    PolicyError::Invalid(e.to_string())
}

/// Runs one sampling scenario. Deterministic for a given `seed`; the source
/// path only depends on the seed, never on the policy.
pub fn run_sampling(scenario: &SamplingScenario, seed: u64) -> Result<SamplingOutcome, PolicyError> {
    scenario.validate()?;
    let mut sim = SamplingSim {
        source: scenario.source.clone(),
        policy: scenario.policy.clone(),
        scheduler: scenario.scheduler.clone(),
        delay: scenario.delay.clone(),
        tick_ms: scenario.tick_ms,
        horizon_ms: scenario.horizon_ms,
        battery: scenario.battery,
        penalty: scenario.penalty.clone(),
        source_rng: RngStream::new(seed, streams::SOURCE),
        delay_rng: RngStream::new(seed, streams::DELAY),
        tracker: AgeTracker::new(scenario.initial_age_ms),
        buffer: Vec::new(),
        in_flight: None,
        next_token: 0,
        estimate: scenario.source.value(),
        estimate_gen: None,
        last_sampled_value: None,
        next_id: 0,
        loss_sum: 0.0,
        penalty_sum: 0.0,
        ticks: 0,
        samples_generated: 0,
        transmissions: 0,
        delivered_samples: 0,
        energy_consumed: 0.0,
        min_battery: scenario.battery.map(|b| b.level),
        trace: scenario.record_trace.then(|| EstimationTrace {
            tick_ms: scenario.tick_ms,
            ..Default::default()
        }),
    };

    let mut engine = Engine::new();
    engine.queue.schedule(SimTime::ZERO, EventKind::SampleCheck).map_err(sim_err)?;
    if sim.battery.is_some() {
        engine
            .queue
            .schedule(SimTime(HARVEST_PERIOD_MS), EventKind::HarvestTick)
            .map_err(sim_err)?;
    }

    let mut failure = None;
    let end = SimTime(scenario.horizon_ms - 1);
    engine
        .run_until(end, |event, queue| {
            let result = match event.kind {
                EventKind::SampleCheck => sim.on_sample_check(event.time, queue),
                EventKind::Delivery(_) => sim.on_delivery(event.time, queue),
                EventKind::HarvestTick => sim.on_harvest(event.time, queue),
                _ => Ok(()),
            };
            if let Err(e) = result {
                failure.get_or_insert(e);
            }
            Ok(())
        })
        .map_err(sim_err)?;
    if let Some(e) = failure {
        return Err(e);
    }

    let horizon = SimTime(scenario.horizon_ms);
    let ticks = sim.ticks.max(1) as f64;
    Ok(SamplingOutcome {
        time_average_age_ms: sim.tracker.time_average_age(horizon),
        eq1_loss: sim.loss_sum / ticks,
        mean_penalty: sim.penalty.as_ref().map(|_| sim.penalty_sum / ticks),
        samples_generated: sim.samples_generated,
        transmissions: sim.transmissions,
        delivered_samples: sim.delivered_samples,
        energy_consumed_j: sim.energy_consumed,
        min_battery_level: sim.min_battery,
        horizon_ms: scenario.horizon_ms,
        tracker: sim.tracker,
        trace: sim.trace,
    })
}

#[derive(Debug, Clone)]
pub struct BetaTuning {
    pub best_beta: f64,
    pub table: Vec<(f64, SamplingOutcome)>,
}

impl BetaTuning {
    pub fn best(&self) -> &SamplingOutcome {
        &self
            .table
            .iter()
            .find(|(b, _)| *b == self.best_beta)
            .expect("best beta is in the table")
            .1
    }
}

/// Grid search over the change threshold. Every grid point sees the same
/// source path (common seed); ties go to the earlier grid entry.
pub fn tune_beta(base: &SamplingScenario, beta_grid: &[f64], seed: u64) -> Result<BetaTuning, PolicyError> {
    if beta_grid.is_empty() {
        return Err(PolicyError::Invalid("beta grid is empty".into()));
    }
    let table = beta_grid
        .par_iter()
        .map(|&beta| {
            let scenario = SamplingScenario {
                policy: SamplingPolicy::ChangeThreshold { beta },
                ..base.clone()
            };
            run_sampling(&scenario, seed).map(|o| (beta, o))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let best_beta = table
        .iter()
        .fold(None::<(f64, f64)>, |best, (beta, o)| match best {
            Some((_, loss)) if loss <= o.eq1_loss => best,
            _ => Some((*beta, o.eq1_loss)),
        })
        .map(|(b, _)| b)
        .expect("grid is nonempty");
    Ok(BetaTuning { best_beta, table })
}
