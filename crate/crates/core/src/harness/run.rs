//! Wires the modules together for each scenario kind.

use std::collections::HashMap;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::age_metrics::AgeTracker;
use crate::delay_models::plan_from_orbits;
use crate::delay_models::rtt_envelope;
use crate::dtn::{relay_overflow, Bundle, run_dtn, DropReason, DtnOutcome, FlowStats, RelayOverflowConfig};
use crate::policies::run_sampling;
use crate::random_access::{simulate_observed, SlotOutcome};
use crate::sim_core::{streams, RngStream, SimTime};

use super::config::{
    EndToEndSection, MarsRttSection, RandomAccessSection, RelaySection, ScenarioBody, ScenarioConfig,
    ScenarioKind,
};
use super::report::{columns, Cell, FlowMetrics, MetricsReport, RunMeta, Table};
use super::HarnessError;

pub fn scenario_hash(cfg: &ScenarioConfig) -> String {
    let canonical = serde_json::to_string(&cfg.document).expect("JSON values serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Output {
    flows: Vec<FlowMetrics>,
    extras: Vec<Vec<Cell>>,
    traces: Vec<(String, Table)>,
    summary: Vec<(String, String)>,
}

/// Runs a validated scenario. `seed_override` replaces the document seed and
/// nothing else.
pub fn run_scenario(cfg: &ScenarioConfig, seed_override: Option<u64>) -> Result<MetricsReport, HarnessError> {
    let started = Instant::now();
    let seed = seed_override.unwrap_or(cfg.seed);
    let fail = |message: String| HarnessError::Run { kind: cfg.kind, message };
    let out = match &cfg.body {
        ScenarioBody::Sampling(s) => {
            let o = run_sampling(s, seed).map_err(|e| fail(e.to_string()))?;
            let secs = s.horizon_ms as f64 / 1000.0;
            let flow = FlowMetrics {
                flow: "sampler".into(),
                time_average_age_ms: Some(o.time_average_age_ms),
                eq1_loss: Some(o.eq1_loss),
                delivered: Some(o.delivered_samples),
                drops: None,
                throughput: Some(o.delivered_samples as f64 / secs),
                energy_consumed_j: Some(o.energy_consumed_j),
            };
            let extras = vec![
                o.samples_generated.into(),
                o.transmissions.into(),
                o.sample_rate_per_s().into(),
                o.mean_penalty.into(),
                o.min_battery_level.into(),
            ];
            Output {
                summary: vec![
                    ("time_average_age_ms".into(), format!("{:.3}", o.time_average_age_ms)),
                    ("eq1_loss".into(), format!("{:.6}", o.eq1_loss)),
                    ("samples_generated".into(), o.samples_generated.to_string()),
                ],
                flows: vec![flow],
                extras: vec![extras],
                traces: Vec::new(),
            }
        }
        ScenarioBody::RandomAccess(ra) => run_random_access(ra, seed).map_err(fail)?,
        ScenarioBody::Dtn(s) => {
            let o = run_dtn(s, SimTime(cfg.horizon_ms)).map_err(|e| fail(e.to_string()))?;
            check_conservation(&o)?;
            let secs = cfg.horizon_ms as f64 / 1000.0;
            let mut out = Output {
                flows: Vec::new(),
                extras: Vec::new(),
                traces: vec![("bundles.csv".into(), bundle_log(&o))],
                summary: dtn_summary(&o),
            };
            for f in &o.flows {
                out.flows.push(dtn_flow(f, secs));
                out.extras.push(vec![
                    f.injected.into(),
                    f.mean_delivery_age_ms.into(),
                    f.max_delivery_age_ms.into(),
                ]);
            }
            out
        }
        ScenarioBody::MarsRtt(m) => run_mars(m, cfg.horizon_ms).map_err(fail)?,
        ScenarioBody::RelayOverflow(r) => run_relay(r, seed)?,
        ScenarioBody::EndToEnd(e) => run_end_to_end(e, cfg, seed)?,
    };

    let mut metrics = Table::new(&columns(cfg.kind));
    for (flow, extra) in out.flows.iter().zip(out.extras) {
        let mut row = flow.cells();
        row.extend(extra);
        metrics.push(row);
    }
    Ok(MetricsReport {
        kind: cfg.kind,
        horizon_ms: cfg.horizon_ms,
        flows: out.flows,
        metrics,
        traces: out.traces,
        summary: out.summary,
        meta: RunMeta {
            seed,
            scenario_hash: scenario_hash(cfg),
            wall_time_ms: started.elapsed().as_secs_f64() * 1000.0,
        },
    })
}

fn drops_of(f: &FlowStats) -> [u64; 4] {
    DropReason::ALL.map(|r| f.dropped[&r])
}

fn dtn_flow(f: &FlowStats, secs: f64) -> FlowMetrics {
    FlowMetrics {
        flow: format!("{}->{}", f.src, f.dst),
        time_average_age_ms: Some(f.time_average_age_ms),
        eq1_loss: None,
        delivered: Some(f.delivered),
        drops: Some(drops_of(f)),
        throughput: Some(f.delivered as f64 / secs),
        energy_consumed_j: None,
    }
}

fn check_conservation(o: &DtnOutcome) -> Result<(), HarnessError> {
    if !o.is_conserved() {
        return Err(HarnessError::Conservation(format!(
            "{} injected, {} delivered, {} dropped",
            o.injected.len(),
            o.deliveries.len(),
            o.drops.len()
        )));
    }
    for f in &o.flows {
        let dropped: u64 = f.dropped.values().sum();
        if f.delivered + dropped != f.injected {
            return Err(HarnessError::Conservation(format!(
                "flow {}->{}: {} injected, {} delivered, {} dropped",
                f.src, f.dst, f.injected, f.delivered, dropped
            )));
        }
    }
    Ok(())
}

fn dtn_summary(o: &DtnOutcome) -> Vec<(String, String)> {
    let mut s = vec![
        ("injected".into(), o.injected.len().to_string()),
        ("delivered".into(), o.deliveries.len().to_string()),
    ];
    for r in DropReason::ALL {
        s.push((format!("dropped ({r})"), o.drop_count(r).to_string()));
    }
    if let Some(a) = o.mean_delivery_age_ms() {
        s.push(("mean_delivery_age_ms".into(), format!("{a:.3}")));
    }
    s
}

/// Fate of every injected bundle, in id order.
fn bundle_log(o: &DtnOutcome) -> Table {
    let mut t = Table::new(&["bundle_id", "src", "dst", "creation_ms", "fate", "node", "time_ms", "age_ms"]);
    let mut rows: Vec<(u64, Vec<Cell>)> = Vec::new();
    let by_id: HashMap<u64, &Bundle> = o.injected.iter().map(|i| (i.bundle.id, &i.bundle)).collect();
    let inj = |id: u64| by_id[&id];
    for d in &o.deliveries {
        let b = inj(d.bundle_id);
        rows.push((
            d.bundle_id,
            vec![
                d.bundle_id.into(),
                u64::from(b.src_eid).into(),
                u64::from(b.dst_eid).into(),
                b.creation_ts.0.into(),
                "delivered".into(),
                u64::from(d.node).into(),
                d.time.0.into(),
                d.age_ms.into(),
            ],
        ));
    }
    for d in &o.drops {
        let b = inj(d.bundle_id);
        rows.push((
            d.bundle_id,
            vec![
                d.bundle_id.into(),
                u64::from(b.src_eid).into(),
                u64::from(b.dst_eid).into(),
                b.creation_ts.0.into(),
                d.reason.to_string().into(),
                u64::from(d.node).into(),
                d.time.0.into(),
                Cell::Empty,
            ],
        ));
    }
    rows.sort_by_key(|(id, _)| *id);
    for (_, r) in rows {
        t.push(r);
    }
    t
}

fn run_random_access(ra: &RandomAccessSection, seed: u64) -> Result<Output, String> {
    let mut trace = Table::new(&["slot", "outcome", "transmitter_count", "mean_age"]);
    let report = simulate_observed(&ra.config, seed, |rec| {
        if ra.trace {
            let outcome = match rec.outcome {
                SlotOutcome::Idle => "idle",
                SlotOutcome::Success(_) => "success",
                SlotOutcome::Collision(_) => "collision",
            };
            trace.push(vec![
                rec.slot.into(),
                outcome.into(),
                (rec.outcome.transmitter_count() as u64).into(),
                rec.mean_age.into(),
            ]);
        }
    })
    .map_err(|e| e.to_string())?;
    let slots = ra.config.slots as f64;
    let ms = ra.slot_duration_ms as f64;
    let mut flows = vec![FlowMetrics {
        flow: "network".into(),
        time_average_age_ms: Some(report.average_network_aoi * ms),
        delivered: Some(report.successes),
        throughput: Some(report.throughput),
        ..Default::default()
    }];
    let mut extras = vec![vec![
        report.average_network_aoi.into(),
        report.collisions.into(),
        report.idle.into(),
        report.mean_active.into(),
    ]];
    for (i, (age, wins)) in report.per_node_average_age.iter().zip(&report.per_node_successes).enumerate() {
        flows.push(FlowMetrics {
            flow: format!("node{i}"),
            time_average_age_ms: Some(age * ms),
            delivered: Some(*wins),
            throughput: Some(*wins as f64 / slots),
            ..Default::default()
        });
        extras.push(vec![(*age).into(), Cell::Empty, Cell::Empty, Cell::Empty]);
    }
    Ok(Output {
        summary: vec![
            ("variant".into(), format!("{:?}", ra.variant).to_lowercase()),
            ("throughput_packets_per_slot".into(), format!("{:.6}", report.throughput)),
            ("average_network_aoi_slots".into(), format!("{:.3}", report.average_network_aoi)),
        ],
        flows,
        extras,
        traces: if ra.trace { vec![("slot_trace.csv".into(), trace)] } else { Vec::new() },
    })
}

fn run_mars(m: &MarsRttSection, horizon_ms: u64) -> Result<Output, String> {
    let horizon = SimTime(horizon_ms);
    let env = rtt_envelope(&m.link, horizon, m.step_ms);
    let plan = plan_from_orbits(&m.link, 1, 2, horizon, m.step_ms, 1.0).map_err(|e| e.to_string())?;
    let up_ms: u64 = plan.contacts().iter().map(|c| c.end - c.start).sum();
    let mut windows = 0u64;
    let mut cursor = SimTime::ZERO;
    for c in plan.contacts() {
        if c.start > cursor {
            windows += 1;
        }
        cursor = c.end;
    }
    if cursor < horizon {
        windows += 1;
    }
    let mean_rtt = 2.0 * env.mean_one_way_ms;
    let mut trace = Table::new(&["time_ms", "rtt_ms"]);
    for &(t, rtt) in &env.trace {
        trace.push(vec![t.0.into(), rtt.into()]);
    }
    let minutes = |ms: f64| format!("{:.2} min", ms / 60_000.0);
    Ok(Output {
        summary: vec![
            ("min_rtt".into(), minutes(env.min_rtt_ms as f64)),
            ("max_rtt".into(), minutes(env.max_rtt_ms as f64)),
            ("mean_one_way".into(), minutes(env.mean_one_way_ms)),
            ("outage_days".into(), format!("{:.2}", (horizon_ms - up_ms) as f64 / 86_400_000.0)),
        ],
        flows: vec![FlowMetrics { flow: "earth-mars".into(), ..Default::default() }],
        extras: vec![vec![
            env.min_rtt_ms.into(),
            mean_rtt.into(),
            env.max_rtt_ms.into(),
            env.mean_one_way_ms.into(),
            (horizon_ms - up_ms).into(),
            windows.into(),
        ]],
        traces: vec![("rtt_trace.csv".into(), trace)],
    })
}

fn policy_name(p: crate::dtn::DropPolicy) -> &'static str {
    match p {
        crate::dtn::DropPolicy::TailDrop => "tail_drop",
        crate::dtn::DropPolicy::DropStalest => "drop_stalest",
        crate::dtn::DropPolicy::DropExpiredFirst => "drop_expired_first",
    }
}

fn run_relay(r: &RelaySection, seed: u64) -> Result<Output, HarnessError> {
    let mut out = Output { flows: Vec::new(), extras: Vec::new(), traces: Vec::new(), summary: Vec::new() };
    for &policy in &r.drop_policies {
        let cfg = RelayOverflowConfig { drop_policy: policy, ..r.base.clone() };
        let o = relay_overflow(&cfg, seed).map_err(|e| HarnessError::Run {
            kind: ScenarioKind::RelayOverflow,
            message: e.to_string(),
        })?;
        check_conservation(&o)?;
        let f = &o.flows[0];
        let offered: u64 = o.forwards.iter().map(|l| l.queued_bytes).sum();
        let forwarded: u64 = o.forwards.iter().map(|l| l.forwarded_bytes).sum();
        let overflow: u64 = o.forwards.iter().map(|l| l.overflow_bytes).sum();
        let mut flow = dtn_flow(f, cfg.horizon().as_secs_f64());
        flow.flow = policy_name(policy).into();
        out.flows.push(flow);
        out.extras.push(vec![
            f.injected.into(),
            f.mean_delivery_age_ms.into(),
            offered.into(),
            forwarded.into(),
            overflow.into(),
            o.max_occupancy[0].1.into(),
        ]);
        if let Some(age) = f.mean_delivery_age_ms {
            out.summary.push((format!("mean_delivery_age_ms ({})", policy_name(policy)), format!("{age:.1}")));
        }
    }
    out.summary.insert(0, ("contact_volume_bytes".into(), r.base.contact_volume().to_string()));
    Ok(out)
}

fn run_end_to_end(e: &EndToEndSection, cfg: &ScenarioConfig, seed: u64) -> Result<Output, HarnessError> {
    let horizon = SimTime(cfg.horizon_ms);
    let o = run_dtn(&e.network, horizon).map_err(|err| HarnessError::Run {
        kind: ScenarioKind::EndToEnd,
        message: err.to_string(),
    })?;
    check_conservation(&o)?;

    let tick = cfg.tick_ms;
    let ticks = (cfg.horizon_ms / tick) as usize;
    let mut source = e.source.clone();
    let mut rng = RngStream::new(seed, streams::SOURCE);
    let mut truth = Vec::with_capacity(ticks);
    truth.push(source.value());
    for _ in 1..ticks {
        truth.push(source.advance(tick, &mut rng));
    }
    let value_at = |t: SimTime| truth[((t.0 / tick) as usize).min(ticks - 1)];

    // Receiver keeps the freshest delivered sample.
    let mut deliveries = o.deliveries.clone();
    deliveries.sort_by_key(|d| d.time);
    let mut tracker = AgeTracker::new(0);
    let mut next = 0;
    let mut estimate = truth[0];
    let mut newest: Option<SimTime> = None;
    let mut loss = 0.0;
    for (j, x) in truth.iter().enumerate() {
        let t = SimTime(j as u64 * tick);
        while next < deliveries.len() && deliveries[next].time <= t {
            let d = &deliveries[next];
            tracker.record_delivery(d.creation_ts, d.time).expect("causal, ordered deliveries");
            if newest.is_none_or(|n| d.creation_ts > n) {
                newest = Some(d.creation_ts);
                estimate = value_at(d.creation_ts);
            }
            next += 1;
        }
        loss += (x - estimate) * (x - estimate);
    }
    let loss = loss / ticks as f64;

    let f = &o.flows[0];
    let mut flow = dtn_flow(f, horizon.as_secs_f64());
    flow.eq1_loss = Some(loss);
    flow.time_average_age_ms = Some(tracker.time_average_age(horizon));
    let mut summary = dtn_summary(&o);
    summary.push(("eq1_loss".into(), format!("{loss:.6}")));
    Ok(Output {
        flows: vec![flow],
        extras: vec![vec![f.injected.into(), f.injected.into(), f.mean_delivery_age_ms.into()]],
        traces: vec![("bundles.csv".into(), bundle_log(&o))],
        summary,
    })
}
