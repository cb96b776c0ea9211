//! Multi-node store-and-forward simulation over a contact plan.
//!
//! Every injected bundle ends up in exactly one place: delivered, or dropped
//! with a reason. Bundles still buffered when no events remain are dropped as
//! expired if their lifetime has run out, otherwise as unroutable.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::age_metrics::AgeTracker;
use crate::delay_models::{Contact, ContactPlan};
use crate::sim_core::{streams, EventKind, EventQueue, RngStream, SimTime};

use super::cgr::cgr_route;
use super::node::{BpaNode, DropPolicy};
use super::{bundle_age, check_expiry, Bundle, DeliveryRecord, DropReason, DropRecord, DtnError, Eid};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub eid: Eid,
    pub capacity_bytes: u64,
    #[serde(default = "yes")]
    pub clock_accurate: bool,
    #[serde(default)]
    pub drop_policy: DropPolicy,
    #[serde(default)]
    pub lifetime_cap_ms: Option<u64>,
}

impl NodeConfig {
    pub fn new(eid: Eid, capacity_bytes: u64, drop_policy: DropPolicy) -> Self {
        Self {
            eid,
            capacity_bytes,
            clock_accurate: true,
            drop_policy,
            lifetime_cap_ms: None,
        }
    }
}

/// Periodic traffic from `src` to `dst`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub src: Eid,
    pub dst: Eid,
    #[serde(default)]
    pub start_ms: u64,
    pub period_ms: u64,
    /// Bundles to send; unbounded up to the horizon when absent.
    #[serde(default)]
    pub count: Option<u64>,
    pub payload_len: u32,
    pub lifetime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub at: SimTime,
    pub node: Eid,
    pub bundle: Bundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtnScenario {
    pub nodes: Vec<NodeConfig>,
    pub contacts: ContactPlan,
    #[serde(default)]
    pub flows: Vec<FlowSpec>,
    #[serde(default)]
    pub injections: Vec<Injection>,
}

impl DtnScenario {
    /// Problems as `(path, message)` pairs; empty when the scenario is usable.
    pub fn validate(&self) -> Vec<(String, String)> {
        let mut errs = Vec::new();
        let mut seen = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(j) = seen.insert(n.eid, i) {
                errs.push((format!("nodes[{i}].eid"), format!("duplicates nodes[{j}]")));
            }
            if n.capacity_bytes == 0 {
                errs.push((format!("nodes[{i}].capacity_bytes"), "must be > 0".into()));
            }
        }
        let known = |e: Eid| seen.contains_key(&e);
        for (i, c) in self.contacts.contacts().iter().enumerate() {
            for (field, e) in [("from", c.from), ("to", c.to)] {
                if !known(e) {
                    errs.push((format!("contacts[{i}].{field}"), format!("unknown node {e}")));
                }
            }
        }
        for (i, f) in self.flows.iter().enumerate() {
            for (field, e) in [("src", f.src), ("dst", f.dst)] {
                if !known(e) {
                    errs.push((format!("flows[{i}].{field}"), format!("unknown node {e}")));
                }
            }
            if f.period_ms == 0 {
                errs.push((format!("flows[{i}].period_ms"), "must be > 0".into()));
            }
            if f.payload_len == 0 {
                errs.push((format!("flows[{i}].payload_len"), "must be > 0".into()));
            }
        }
        for (i, inj) in self.injections.iter().enumerate() {
            if !known(inj.node) {
                errs.push((format!("injections[{i}].node"), format!("unknown node {}", inj.node)));
            }
            if !known(inj.bundle.dst_eid) {
                errs.push((
                    format!("injections[{i}].bundle.dst_eid"),
                    format!("unknown node {}", inj.bundle.dst_eid),
                ));
            }
            if inj.bundle.payload_len == 0 {
                errs.push((format!("injections[{i}].bundle.payload_len"), "must be > 0".into()));
            }
            if inj.bundle.creation_ts > inj.at {
                errs.push((format!("injections[{i}].bundle.creation_ts"), "after injection time".into()));
            }
        }
        errs
    }

    /// Explicit injections followed by flow traffic before `horizon`, in time
    /// order, with ids renumbered from 0.
    pub fn all_injections(&self, horizon: SimTime) -> Vec<Injection> {
        let mut out = self.injections.clone();
        for f in &self.flows {
            let mut k = 0;
            loop {
                if f.count.is_some_and(|c| k >= c) {
                    break;
                }
                let at = SimTime(f.start_ms + k * f.period_ms);
                if at >= horizon {
                    break;
                }
                out.push(Injection {
                    at,
                    node: f.src,
                    bundle: Bundle::new(0, f.src, f.dst, at, f.lifetime_ms, f.payload_len),
                });
                k += 1;
            }
        }
        out.sort_by_key(|inj| inj.at);
        for (id, inj) in out.iter_mut().enumerate() {
            inj.bundle.id = id as u64;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardLog {
    pub contact_id: usize,
    pub time: SimTime,
    pub queued_bytes: u64,
    pub forwarded_bytes: u64,
    pub overflow_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowStats {
    pub src: Eid,
    pub dst: Eid,
    pub injected: u64,
    pub delivered: u64,
    pub dropped: BTreeMap<DropReason, u64>,
    pub mean_delivery_age_ms: Option<f64>,
    pub max_delivery_age_ms: Option<u64>,
    pub time_average_age_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtnOutcome {
    pub injected: Vec<Injection>,
    pub deliveries: Vec<DeliveryRecord>,
    pub drops: Vec<DropRecord>,
    pub forwards: Vec<ForwardLog>,
    /// Peak buffer occupancy per node, in `nodes` order.
    pub max_occupancy: Vec<(Eid, u64)>,
    pub horizon: SimTime,
    /// Time of the last processed event (at least the horizon).
    pub end_time: SimTime,
    pub flows: Vec<FlowStats>,
}

impl DtnOutcome {
    pub fn is_conserved(&self) -> bool {
        let mut ids: Vec<u64> = self
            .deliveries
            .iter()
            .map(|d| d.bundle_id)
            .chain(self.drops.iter().map(|d| d.bundle_id))
            .collect();
        ids.sort_unstable();
        let mut want: Vec<u64> = self.injected.iter().map(|i| i.bundle.id).collect();
        want.sort_unstable();
        ids == want
    }

    pub fn drop_count(&self, reason: DropReason) -> usize {
        self.drops.iter().filter(|d| d.reason == reason).count()
    }

    pub fn dropped_bytes(&self, reason: DropReason) -> u64 {
        self.drops
            .iter()
            .filter(|d| d.reason == reason)
            .map(|d| u64::from(d.payload_len))
            .sum()
    }

    pub fn mean_delivery_age_ms(&self) -> Option<f64> {
        if self.deliveries.is_empty() {
            return None;
        }
        let sum: u64 = self.deliveries.iter().map(|d| d.age_ms).sum();
        Some(sum as f64 / self.deliveries.len() as f64)
    }
}

struct Sim<'a> {
    plan: &'a ContactPlan,
    nodes: Vec<BpaNode>,
    index: HashMap<Eid, usize>,
    queue: EventQueue,
    open: Vec<bool>,
    busy_until: Vec<SimTime>,
    in_flight: Vec<Option<(Eid, Bundle)>>,
    deliveries: Vec<DeliveryRecord>,
    drops: Vec<DropRecord>,
    forwards: Vec<ForwardLog>,
    max_occupancy: Vec<u64>,
}

const INJECT: u64 = 0;
const EXPIRY: u64 = 1;

fn tag(kind: u64, index: usize) -> EventKind {
    EventKind::Custom(((index as u64) << 1) | kind)
}

impl Sim<'_> {
    fn schedule(&mut self, t: SimTime, kind: EventKind) {
        self.queue
            .schedule(t, kind)
            .expect("events are scheduled at or after the clock");
    }

    fn drop(&mut self, b: &Bundle, node: Eid, t: SimTime, reason: DropReason) {
        self.drops.push(DropRecord {
            bundle_id: b.id,
            node,
            time: t,
            reason,
            payload_len: b.payload_len,
        });
    }

    fn arrive(&mut self, eid: Eid, b: Bundle, t: SimTime) {
        let k = self.index[&eid];
        let accurate = self.nodes[k].clock_accurate;
        if b.dst_eid == eid {
            self.deliveries.push(DeliveryRecord {
                bundle_id: b.id,
                node: eid,
                time: t,
                creation_ts: b.creation_ts,
                age_ms: bundle_age(&b, t, accurate).unwrap_or(b.age_block),
                age_block: b.age_block,
                payload_len: b.payload_len,
            });
            return;
        }
        if let Some(reason) = check_expiry(&b, t, accurate) {
            self.drop(&b, eid, t, reason);
            return;
        }
        let next_hop = match cgr_route(self.plan, eid, b.dst_eid, t, b.payload_len.into()) {
            Ok(route) => route.next_hop(),
            Err(_) => None,
        };
        let Some(next_hop) = next_hop else {
            self.drop(&b, eid, t, DropReason::NoRoute);
            return;
        };
        let res = self.nodes[k].enqueue_for(b, t, Some(next_hop));
        self.drops.extend(res.dropped);
        if res.accepted {
            self.max_occupancy[k] = self.max_occupancy[k].max(self.nodes[k].occupancy());
            if accurate {
                let q = self.nodes[k].buffer().last().expect("just accepted");
                let expires = q.bundle.creation_ts + q.bundle.effective_lifetime() + 1;
                if expires > t {
                    self.schedule(expires, tag(EXPIRY, k));
                }
            }
            self.forward_open(k, t);
        }
    }

    fn forward_open(&mut self, k: usize, t: SimTime) {
        let eid = self.nodes[k].eid;
        for i in 0..self.plan.len() {
            if self.open[i] && self.plan.contacts()[i].from == eid {
                self.forward(i, t);
            }
        }
    }

    fn forward(&mut self, i: usize, t: SimTime) {
        let c: Contact = self.plan.contacts()[i];
        let start = t.max(self.busy_until[i]);
        if start >= c.end {
            return;
        }
        let k = self.index[&c.from];
        let report = self.nodes[k]
            .forward_during_contact(&c, start)
            .expect("contact is open");
        self.drops.extend(report.dropped);
        self.busy_until[i] = report.busy_until;
        let mut forwarded = 0;
        for tx in report.transmitted {
            forwarded += u64::from(tx.bundle.payload_len);
            let token = self.in_flight.len() as u64;
            self.in_flight.push(Some((c.to, tx.bundle)));
            self.schedule(tx.arrival, EventKind::Delivery(token));
        }
        if report.queued_bytes > 0 {
            self.forwards.push(ForwardLog {
                contact_id: i,
                time: start,
                queued_bytes: report.queued_bytes,
                forwarded_bytes: forwarded,
                overflow_bytes: report.overflow_bytes,
            });
        }
    }

    fn close(&mut self, i: usize, t: SimTime) {
        self.open[i] = false;
        let c = self.plan.contacts()[i];
        let k = self.index[&c.from];
        for mut q in self.nodes[k].take_waiting_for(c.to) {
            let route = cgr_route(self.plan, c.from, q.bundle.dst_eid, t, q.bundle.payload_len.into());
            match route.ok().and_then(|r| r.next_hop()) {
                Some(next) => {
                    q.next_hop = Some(next);
                    self.nodes[k].restore(q);
                }
                None => self.drop(&q.bundle, c.from, t, DropReason::NoRoute),
            }
        }
        self.forward_open(k, t);
    }
}

pub fn run_dtn(scenario: &DtnScenario, horizon: SimTime) -> Result<DtnOutcome, DtnError> {
    if let Some((path, msg)) = scenario.validate().into_iter().next() {
        return Err(DtnError::Invalid(format!("{path}: {msg}")));
    }
    let plan = &scenario.contacts;
    let injected = scenario.all_injections(horizon);
    let nodes: Vec<BpaNode> = scenario
        .nodes
        .iter()
        .map(|n| {
            BpaNode::new(n.eid, n.capacity_bytes, n.drop_policy)
                .with_clock(n.clock_accurate)
                .with_lifetime_cap(n.lifetime_cap_ms)
        })
        .collect();
    let index = nodes.iter().enumerate().map(|(k, n)| (n.eid, k)).collect();
    let mut sim = Sim {
        plan,
        max_occupancy: vec![0; nodes.len()],
        nodes,
        index,
        queue: EventQueue::new(),
        open: vec![false; plan.len()],
        busy_until: plan.contacts().iter().map(|c| c.start).collect(),
        in_flight: Vec::new(),
        deliveries: Vec::new(),
        drops: Vec::new(),
        forwards: Vec::new(),
    };
    for (i, c) in plan.contacts().iter().enumerate() {
        sim.schedule(c.start, EventKind::ContactStart(i as u64));
        sim.schedule(c.end, EventKind::ContactEnd(i as u64));
    }
    for (i, inj) in injected.iter().enumerate() {
        sim.schedule(inj.at, tag(INJECT, i));
    }

    let mut end_time = horizon;
    while let Some(ev) = sim.queue.pop_next() {
        let t = ev.time;
        end_time = end_time.max(t);
        match ev.kind {
            EventKind::ContactStart(i) => {
                sim.open[i as usize] = true;
                sim.forward(i as usize, t);
            }
            EventKind::ContactEnd(i) => sim.close(i as usize, t),
            EventKind::Delivery(token) => {
                let (to, b) = sim.in_flight[token as usize].take().expect("delivered once");
                sim.arrive(to, b, t);
            }
            EventKind::Custom(code) if code & 1 == INJECT => {
                let inj = &injected[(code >> 1) as usize];
                sim.arrive(inj.node, inj.bundle.clone(), t);
            }
            EventKind::Custom(code) => {
                let k = (code >> 1) as usize;
                let dropped = sim.nodes[k].purge_expired(t);
                sim.drops.extend(dropped);
            }
            _ => unreachable!("no other event kinds are scheduled"),
        }
    }
    for k in 0..sim.nodes.len() {
        let accurate = sim.nodes[k].clock_accurate;
        let eid = sim.nodes[k].eid;
        for q in sim.nodes[k].drain() {
            let reason = check_expiry(&q.bundle, end_time, accurate).unwrap_or(DropReason::NoRoute);
            sim.drop(&q.bundle, eid, end_time, reason);
        }
    }

    let flows = flow_stats(&injected, &sim.deliveries, &sim.drops, horizon);
    Ok(DtnOutcome {
        max_occupancy: sim.nodes.iter().map(|n| n.eid).zip(sim.max_occupancy).collect(),
        injected,
        deliveries: sim.deliveries,
        drops: sim.drops,
        forwards: sim.forwards,
        horizon,
        end_time,
        flows,
    })
}

fn flow_stats(
    injected: &[Injection],
    deliveries: &[DeliveryRecord],
    drops: &[DropRecord],
    horizon: SimTime,
) -> Vec<FlowStats> {
    let flow_of: HashMap<u64, (Eid, Eid)> = injected
        .iter()
        .map(|i| (i.bundle.id, (i.bundle.src_eid, i.bundle.dst_eid)))
        .collect();
    let mut flows: BTreeMap<(Eid, Eid), (FlowStats, AgeTracker, u64)> = BTreeMap::new();
    let entry = |flows: &mut BTreeMap<_, _>, key: (Eid, Eid)| {
        flows.entry(key).or_insert_with(|| {
            (
                FlowStats {
                    src: key.0,
                    dst: key.1,
                    injected: 0,
                    delivered: 0,
                    dropped: DropReason::ALL.iter().map(|r| (*r, 0)).collect(),
                    mean_delivery_age_ms: None,
                    max_delivery_age_ms: None,
                    time_average_age_ms: 0.0,
                },
                AgeTracker::new(0),
                0,
            )
        });
    };
    for inj in injected {
        let key = (inj.bundle.src_eid, inj.bundle.dst_eid);
        entry(&mut flows, key);
        flows.get_mut(&key).expect("inserted").0.injected += 1;
    }
    for d in deliveries {
        let (stats, tracker, age_sum) = flows.get_mut(&flow_of[&d.bundle_id]).expect("known flow");
        stats.delivered += 1;
        *age_sum += d.age_ms;
        stats.max_delivery_age_ms = stats.max_delivery_age_ms.max(Some(d.age_ms));
        tracker
            .record_delivery(d.creation_ts, d.time)
            .expect("deliveries are time ordered and causal");
    }
    for d in drops {
        let (stats, _, _) = flows.get_mut(&flow_of[&d.bundle_id]).expect("known flow");
        *stats.dropped.get_mut(&d.reason).expect("all reasons present") += 1;
    }
    flows
        .into_values()
        .map(|(mut stats, tracker, age_sum)| {
            if stats.delivered > 0 {
                stats.mean_delivery_age_ms = Some(age_sum as f64 / stats.delivered as f64);
            }
            stats.time_average_age_ms = tracker.time_average_age(horizon);
            stats
        })
        .collect()
}

/// One relay with a single outbound contact that can carry `contact_bundles`
/// bundles. Three times that volume reaches the relay beforehand, from
/// sources of varying staleness; the relay buffer holds twice the contact
/// volume, so the contact is offered twice what it can carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelayOverflowConfig {
    pub bundle_size: u32,
    pub contact_bundles: u32,
    pub injected_factor: u32,
    pub buffer_factor: u32,
    /// Bytes per ms on the outbound contact.
    pub rate: f64,
    pub contact_start_ms: u64,
    pub owlt_ms: u64,
    /// Largest age a bundle already has when it reaches the relay.
    pub max_staleness_ms: u64,
    /// Lifetimes are drawn uniformly from this list.
    pub lifetimes_ms: Vec<u64>,
    pub drop_policy: DropPolicy,
}

impl Default for RelayOverflowConfig {
    fn default() -> Self {
        Self {
            bundle_size: 1_000,
            contact_bundles: 20,
            injected_factor: 3,
            buffer_factor: 2,
            rate: 10.0,
            contact_start_ms: 600_000,
            owlt_ms: 1_280,
            max_staleness_ms: 1_800_000,
            lifetimes_ms: vec![3_600_000, 7_200_000, 14_400_000],
            drop_policy: DropPolicy::TailDrop,
        }
    }
}

pub const RELAY_SOURCE: Eid = 1;
pub const RELAY: Eid = 2;
pub const RELAY_SINK: Eid = 3;

impl RelayOverflowConfig {
    pub fn contact_volume(&self) -> u64 {
        u64::from(self.bundle_size) * u64::from(self.contact_bundles)
    }

    pub fn contact(&self) -> Contact {
        let duration = (self.contact_volume() as f64 / self.rate).ceil() as u64;
        Contact {
            from: RELAY,
            to: RELAY_SINK,
            start: SimTime(self.contact_start_ms),
            end: SimTime(self.contact_start_ms + duration),
            rate: self.rate,
            owlt: self.owlt_ms,
        }
    }

    /// Enough time for everything forwarded to land.
    pub fn horizon(&self) -> SimTime {
        self.contact().end + self.owlt_ms + 1
    }

    pub fn validate(&self) -> Vec<(String, String)> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, field: &str, msg: &str| {
            if !ok {
                errs.push((field.to_string(), msg.to_string()));
            }
        };
        need(self.bundle_size > 0, "bundle_size", "must be > 0");
        need(self.contact_bundles > 0, "contact_bundles", "must be > 0");
        need(self.rate > 0.0 && self.rate.is_finite(), "rate", "must be > 0");
        need(self.contact_start_ms > 0, "contact_start_ms", "must be > 0");
        need(!self.lifetimes_ms.is_empty(), "lifetimes_ms", "must not be empty");
        need(self.buffer_factor > 0, "buffer_factor", "must be > 0");
        errs
    }

    pub fn scenario(&self, seed: u64) -> DtnScenario {
        let mut rng = RngStream::new(seed, streams::TRAFFIC);
        let count = self.contact_bundles * self.injected_factor;
        let mut injections: Vec<Injection> = (0..count)
            .map(|_| {
                let at = (rng.uniform() * self.contact_start_ms as f64) as u64;
                let stale = (rng.uniform() * self.max_staleness_ms as f64) as u64;
                let lifetime = self.lifetimes_ms[(rng.uniform() * self.lifetimes_ms.len() as f64) as usize];
                let creation = at.saturating_sub(stale);
                let mut b = Bundle::new(0, RELAY_SOURCE, RELAY_SINK, SimTime(creation), lifetime, self.bundle_size);
                b.age_block = at - creation;
                Injection { at: SimTime(at), node: RELAY, bundle: b }
            })
            .collect();
        injections.sort_by_key(|i| i.at);
        DtnScenario {
            nodes: vec![
                NodeConfig::new(RELAY, self.contact_volume() * u64::from(self.buffer_factor), self.drop_policy),
                NodeConfig::new(RELAY_SINK, u64::MAX / 2, DropPolicy::TailDrop),
            ],
            contacts: ContactPlan::new(vec![self.contact()]).expect("single valid contact"),
            flows: Vec::new(),
            injections,
        }
    }
}

pub fn relay_overflow(cfg: &RelayOverflowConfig, seed: u64) -> Result<DtnOutcome, DtnError> {
    if let Some((path, msg)) = cfg.validate().into_iter().next() {
        return Err(DtnError::Invalid(format!("{path}: {msg}")));
    }
    run_dtn(&cfg.scenario(seed), cfg.horizon())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(rate: f64) -> DtnScenario {
        DtnScenario {
            nodes: vec![
                NodeConfig::new(1, 100_000, DropPolicy::TailDrop),
                NodeConfig::new(2, 100_000, DropPolicy::TailDrop),
                NodeConfig::new(3, 100_000, DropPolicy::TailDrop),
            ],
            contacts: ContactPlan::new(vec![
                Contact { from: 1, to: 2, start: SimTime(1_000), end: SimTime(5_000), rate, owlt: 100 },
                Contact { from: 2, to: 3, start: SimTime(6_000), end: SimTime(9_000), rate, owlt: 200 },
            ])
            .unwrap(),
            flows: vec![FlowSpec {
                src: 1,
                dst: 3,
                start_ms: 0,
                period_ms: 500,
                count: Some(4),
                payload_len: 100,
                lifetime_ms: 60_000,
            }],
            injections: Vec::new(),
        }
    }

    #[test]
    fn two_hop_delivery() {
        let out = run_dtn(&line(1.0), SimTime(10_000)).unwrap();
        assert!(out.is_conserved());
        assert_eq!(out.deliveries.len(), 4);
        for d in &out.deliveries {
            assert_eq!(d.age_block, d.time - d.creation_ts);
            assert_eq!(d.age_ms, d.age_block);
        }
        // First bundle: leaves node 1 at 1000, lands at 1200; second hop
        // starts at 6000 and the four bundles queue behind each other.
        assert_eq!(out.deliveries[0].time, SimTime(6_000 + 100 + 200));
        assert_eq!(out.deliveries[3].time, SimTime(6_000 + 400 + 200));
        assert_eq!(out.flows.len(), 1);
        assert_eq!(out.flows[0].delivered, 4);
    }

    #[test]
    fn missed_contacts_are_unroutable() {
        let mut s = line(1.0);
        s.flows[0].start_ms = 5_500;
        let out = run_dtn(&s, SimTime(10_000)).unwrap();
        assert!(out.is_conserved());
        assert_eq!(out.drop_count(DropReason::NoRoute), 4);
    }

    #[test]
    fn short_lifetimes_expire_in_buffer() {
        let mut s = line(1.0);
        s.flows[0].lifetime_ms = 3_000;
        let out = run_dtn(&s, SimTime(10_000)).unwrap();
        assert!(out.is_conserved());
        assert_eq!(out.drop_count(DropReason::LifetimeExpired), 4);
        assert!(out.deliveries.is_empty());
    }

    #[test]
    fn relay_overflow_accounts_for_everything() {
        for policy in [DropPolicy::TailDrop, DropPolicy::DropStalest, DropPolicy::DropExpiredFirst] {
            let cfg = RelayOverflowConfig { drop_policy: policy, ..Default::default() };
            let out = relay_overflow(&cfg, 7).unwrap();
            assert!(out.is_conserved());
            assert_eq!(out.deliveries.len(), cfg.contact_bundles as usize);
            let log = &out.forwards[0];
            assert_eq!(log.queued_bytes, 2 * cfg.contact_volume());
            assert_eq!(log.overflow_bytes, log.queued_bytes - log.forwarded_bytes);
            assert!(out.max_occupancy[0].1 <= 2 * cfg.contact_volume());
        }
    }

    #[test]
    fn validation_reports_unknown_nodes() {
        let mut s = line(1.0);
        s.flows[0].dst = 9;
        let errs = s.validate();
        assert_eq!(errs, vec![("flows[0].dst".to_string(), "unknown node 9".to_string())]);
    }
}
