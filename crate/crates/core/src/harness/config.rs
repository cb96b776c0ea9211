//! Scenario documents: JSON trees validated in full before anything runs.

use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::age_metrics::AgePenalty;
use crate::delay_models::{Body, ContactPlan, DelayProcess, OrbitalLink};
use crate::dtn::{DropPolicy, DtnScenario, Eid, FlowSpec, Injection, NodeConfig, RelayOverflowConfig};
use crate::policies::SamplingScenario;
use crate::policies::{Battery, PolicyError, SamplingPolicy, SchedulingPolicy, SourceProcess};
use crate::random_access::{RaConfig, RaVariant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    /// Dotted document path; empty for document-level problems.
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Sampling,
    RandomAccess,
    Dtn,
    MarsRtt,
    RelayOverflow,
    EndToEnd,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Sampling,
        ScenarioKind::RandomAccess,
        ScenarioKind::Dtn,
        ScenarioKind::MarsRtt,
        ScenarioKind::RelayOverflow,
        ScenarioKind::EndToEnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Sampling => "sampling",
            ScenarioKind::RandomAccess => "random_access",
            ScenarioKind::Dtn => "dtn",
            ScenarioKind::MarsRtt => "mars_rtt",
            ScenarioKind::RelayOverflow => "relay_overflow",
            ScenarioKind::EndToEnd => "end_to_end",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomAccessSection {
    pub variant: RaVariant,
    pub config: RaConfig,
    pub slot_duration_ms: u64,
    /// Write the per-slot trace file.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarsRttSection {
    pub link: OrbitalLink,
    pub step_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaySection {
    pub base: RelayOverflowConfig,
    /// One run (and one output row) per policy.
    pub drop_policies: Vec<DropPolicy>,
}

/// Samples of a monitored process carried as bundles over a contact plan.
#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndSection {
    pub source: SourceProcess,
    pub sample_period_ms: u64,
    pub payload_len: u32,
    pub lifetime_ms: u64,
    pub src: Eid,
    pub dst: Eid,
    pub network: DtnScenario,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioBody {
    Sampling(SamplingScenario),
    RandomAccess(RandomAccessSection),
    Dtn(DtnScenario),
    MarsRtt(MarsRttSection),
    RelayOverflow(RelaySection),
    EndToEnd(EndToEndSection),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub horizon_ms: u64,
    pub tick_ms: u64,
    pub output_dir: Option<PathBuf>,
    pub body: ScenarioBody,
    /// The document this config was parsed from.
    pub document: Value,
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn de<T: DeserializeOwned>(value: Value, path: &str) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { path.to_string() } else { join(path, &inner) };
        SchemaError::new(path, e.into_inner().to_string())
    })
}

/// Pulls typed fields out of one JSON object, collecting every problem.
struct Fields<'e> {
    path: String,
    map: Map<String, Value>,
    errs: &'e mut Vec<SchemaError>,
}

impl<'e> Fields<'e> {
    fn open(value: Option<&Value>, path: &str, errs: &'e mut Vec<SchemaError>) -> Option<Self> {
        match value {
            Some(Value::Object(map)) => Some(Self { path: path.to_string(), map: map.clone(), errs }),
            Some(_) => {
                errs.push(SchemaError::new(path, "expected an object"));
                None
            }
            None => {
                errs.push(SchemaError::new(path, "section missing"));
                None
            }
        }
    }

    fn take<T: DeserializeOwned>(&mut self, key: &str) -> Option<Option<T>> {
        let v = self.map.remove(key)?;
        match de(v, &join(&self.path, key)) {
            Ok(t) => Some(Some(t)),
            Err(e) => {
                self.errs.push(e);
                Some(None)
            }
        }
    }

    fn req<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        match self.take(key) {
            Some(v) => v,
            None => {
                self.errs.push(SchemaError::new(join(&self.path, key), "missing field"));
                None
            }
        }
    }

    fn opt<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        self.take(key).flatten()
    }

    fn or<T: DeserializeOwned>(&mut self, key: &str, default: T) -> T {
        match self.take(key) {
            Some(Some(v)) => v,
            _ => default,
        }
    }

    fn err(&mut self, key: &str, message: impl Into<String>) {
        self.errs.push(SchemaError::new(join(&self.path, key), message));
    }

    fn finish(self) {
        for key in self.map.keys() {
            self.errs.push(SchemaError::new(join(&self.path, key), "unknown field"));
        }
    }
}

/// `"NonMonotoneThresholds: ..."` style message naming the error variant.
fn policy_message(e: &PolicyError) -> String {
    if let PolicyError::Invalid(m) = e {
        return m.clone();
    }
    let debug = format!("{e:?}");
    let name = debug.split(['(', ' ', '{']).next().unwrap_or_default();
    format!("{name}: {e}")
}

/// Parses and validates a scenario document. An empty document is treated
/// as `{}`.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, Vec<SchemaError>> {
    let doc = if text.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(text).map_err(|e| vec![SchemaError::new("", format!("not valid JSON: {e}"))])?
    };
    parse_document(doc)
}

pub fn parse_document(doc: Value) -> Result<ScenarioConfig, Vec<SchemaError>> {
    let mut errs = Vec::new();
    let Value::Object(root) = &doc else {
        return Err(vec![SchemaError::new("", "document must be an object")]);
    };
    let kind = match root.get("kind") {
        None => {
            errs.push(SchemaError::new("", "kind missing"));
            None
        }
        Some(Value::String(s)) => {
            let k = ScenarioKind::from_name(s);
            if k.is_none() {
                let names: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
                errs.push(SchemaError::new("kind", format!("unknown kind {s:?}; expected one of {}", names.join(", "))));
            }
            k
        }
        Some(_) => {
            errs.push(SchemaError::new("kind", "expected a string"));
            None
        }
    };

    let mut top = Fields { path: String::new(), map: root.clone(), errs: &mut errs };
    top.map.remove("kind");
    top.map.remove("description");
    let seed = top.or("seed", 0u64);
    let horizon_ms: Option<u64> = top.opt("horizon_ms");
    let tick_ms = top.or("tick_ms", 1u64);
    if tick_ms == 0 {
        top.err("tick_ms", "must be > 0");
    }
    if horizon_ms == Some(0) {
        top.err("horizon_ms", "must be > 0");
    }
    let output_dir = top.take::<OutputSection>("output").flatten().and_then(|o| o.dir);
    let section = kind.and_then(|k| top.map.remove(k.name()));
    for key in top.map.keys() {
        let message = if ScenarioKind::from_name(key).is_some() {
            "section does not match kind"
        } else {
            "unknown field"
        };
        top.errs.push(SchemaError::new(key.clone(), message));
    }

    let Some(kind) = kind else {
        return Err(errs);
    };
    let need_horizon = |errs: &mut Vec<SchemaError>| {
        if horizon_ms.is_none() {
            errs.push(SchemaError::new("horizon_ms", "missing field"));
        }
        horizon_ms.unwrap_or(1)
    };
    let path = kind.name();
    let body = match kind {
        ScenarioKind::Sampling => {
            let h = need_horizon(&mut errs);
            parse_sampling(section.as_ref(), path, h, tick_ms, &mut errs).map(ScenarioBody::Sampling)
        }
        ScenarioKind::RandomAccess => {
            parse_random_access(section.as_ref(), path, horizon_ms, &mut errs).map(ScenarioBody::RandomAccess)
        }
        ScenarioKind::Dtn => {
            need_horizon(&mut errs);
            parse_dtn(section.as_ref(), path, &mut errs).map(ScenarioBody::Dtn)
        }
        ScenarioKind::MarsRtt => {
            need_horizon(&mut errs);
            parse_mars(section.as_ref(), path, &mut errs).map(ScenarioBody::MarsRtt)
        }
        ScenarioKind::RelayOverflow => {
            parse_relay(section.as_ref(), path, &mut errs).map(ScenarioBody::RelayOverflow)
        }
        ScenarioKind::EndToEnd => {
            need_horizon(&mut errs);
            parse_end_to_end(section.as_ref(), path, tick_ms, &mut errs).map(ScenarioBody::EndToEnd)
        }
    };
    match body {
        Some(body) if errs.is_empty() => {
            let horizon_ms = match &body {
                ScenarioBody::RandomAccess(ra) => ra.config.slots * ra.slot_duration_ms,
                ScenarioBody::RelayOverflow(r) => r.base.horizon().0,
                _ => horizon_ms.expect("checked above"),
            };
            Ok(ScenarioConfig {
                kind,
                seed,
                horizon_ms,
                tick_ms,
                output_dir,
                body,
                document: doc,
            })
        }
        _ => {
            if errs.is_empty() {
                errs.push(SchemaError::new(path, "invalid section"));
            }
            Err(errs)
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
}

fn parse_sampling(
    section: Option<&Value>,
    path: &str,
    horizon_ms: u64,
    tick_ms: u64,
    errs: &mut Vec<SchemaError>,
) -> Option<SamplingScenario> {
    let mut f = Fields::open(section, path, errs)?;
    let source: Option<SourceProcess> = f.req("source");
    let policy: Option<SamplingPolicy> = f.req("policy");
    let scheduler = f.or("scheduler", SchedulingPolicy::freshest_first(1));
    let delay: Option<DelayProcess> = f.req("delay");
    let initial_age_ms = f.or("initial_age_ms", 0u64);
    let battery: Option<Battery> = f.opt("battery");
    let penalty: Option<AgePenalty> = f.opt("penalty");

    if let Some(Err(e)) = source.as_ref().map(SourceProcess::validate) {
        f.err("source", policy_message(&e));
    }
    if let Some(Err(e)) = policy.as_ref().map(SamplingPolicy::validate) {
        let key = match e {
            PolicyError::NonMonotoneThresholds(_) | PolicyError::UnsortedEnergyTable(_) | PolicyError::EmptyEnergyTable => {
                "policy.table"
            }
            _ => "policy",
        };
        f.err(key, policy_message(&e));
    }
    if let Err(e) = scheduler.validate() {
        f.err("scheduler", policy_message(&e));
    }
    if let Some(Err(e)) = delay.as_ref().map(DelayProcess::validate) {
        f.err("delay", e.to_string());
    }
    if let Some(Err(e)) = battery.as_ref().map(Battery::validate) {
        f.err("battery", policy_message(&e));
    }
    if matches!(policy, Some(SamplingPolicy::EnergyAwareAgeThreshold { .. })) && battery.is_none() {
        f.err("battery", "energy-aware sampling needs a battery");
    }
    f.finish();
    let mut s = SamplingScenario::new(source?, policy?, delay?, horizon_ms);
    s.scheduler = scheduler;
    s.tick_ms = tick_ms;
    s.initial_age_ms = initial_age_ms;
    s.battery = battery;
    s.penalty = penalty;
    Some(s)
}

fn parse_random_access(
    section: Option<&Value>,
    path: &str,
    horizon_ms: Option<u64>,
    errs: &mut Vec<SchemaError>,
) -> Option<RandomAccessSection> {
    let mut f = Fields::open(section, path, errs)?;
    let variant: Option<RaVariant> = f.req("variant");
    let n: Option<usize> = f.req("n");
    let p: Option<f64> = f.req("p");
    let gamma = f.or("gamma", 0u64);
    let slot_duration_ms = f.or("slot_duration_ms", 1u64);
    let trace = f.or("trace", true);
    if slot_duration_ms == 0 {
        f.err("slot_duration_ms", "must be > 0");
    }
    // A top-level horizon, when given, fixes the slot count.
    let slots = match horizon_ms {
        Some(h) => {
            f.map.remove("slots");
            Some(h / slot_duration_ms.max(1))
        }
        None => f.req::<u64>("slots"),
    };
    if variant == Some(RaVariant::Plain) && gamma != 0 {
        f.err("gamma", "plain slotted ALOHA takes no age threshold");
    }
    if n == Some(0) {
        f.err("n", "must be >= 1");
    }
    if p.is_some_and(|p| !(p > 0.0 && p <= 1.0)) {
        f.err("p", "must lie in (0, 1]");
    }
    if slots == Some(0) {
        f.err("slots", "must be >= 1");
    }
    f.finish();
    Some(RandomAccessSection {
        variant: variant?,
        config: RaConfig { n: n?, p: p?, gamma, slots: slots? },
        slot_duration_ms,
        trace,
    })
}

fn check_dtn(s: &DtnScenario, path: &str, errs: &mut Vec<SchemaError>) {
    for (p, m) in s.validate() {
        errs.push(SchemaError::new(join(path, &p), m));
    }
}

fn parse_dtn(section: Option<&Value>, path: &str, errs: &mut Vec<SchemaError>) -> Option<DtnScenario> {
    let mut f = Fields::open(section, path, errs)?;
    let nodes: Option<Vec<NodeConfig>> = f.req("nodes");
    let contacts: Option<ContactPlan> = f.req("contacts");
    let flows: Vec<FlowSpec> = f.or("flows", Vec::new());
    let injections: Vec<Injection> = f.or("injections", Vec::new());
    f.finish();
    let s = DtnScenario { nodes: nodes?, contacts: contacts?, flows, injections };
    check_dtn(&s, path, errs);
    Some(s)
}

fn parse_mars(section: Option<&Value>, path: &str, errs: &mut Vec<SchemaError>) -> Option<MarsRttSection> {
    let section = section.cloned().unwrap_or_else(|| Value::Object(Map::new()));
    let mut f = Fields::open(Some(&section), path, errs)?;
    let angle = f.or("conjunction_angle_deg", 3.0f64);
    let processing_ms = f.or("processing_ms", 0u64);
    let step_ms = f.or("step_ms", 3_600_000u64);
    let earth_phase = f.or("earth_phase_deg", 0.0f64);
    let mars_phase = f.or("mars_phase_deg", 0.0f64);
    if !(0.0..180.0).contains(&angle) {
        f.err("conjunction_angle_deg", "must lie in [0, 180)");
    }
    if step_ms == 0 {
        f.err("step_ms", "must be > 0");
    }
    f.finish();
    let mut link = OrbitalLink::earth_mars(angle);
    link.processing_ms = processing_ms;
    link.body_a = Body::EARTH.with_phase(earth_phase.to_radians());
    link.body_b = Body::MARS.with_phase(mars_phase.to_radians());
    Some(MarsRttSection { link, step_ms })
}

fn parse_relay(section: Option<&Value>, path: &str, errs: &mut Vec<SchemaError>) -> Option<RelaySection> {
    let mut section = section.cloned().unwrap_or_else(|| Value::Object(Map::new()));
    let policies = section.as_object_mut().and_then(|m| m.remove("drop_policies"));
    let drop_policies = match policies {
        None => vec![DropPolicy::TailDrop, DropPolicy::DropStalest, DropPolicy::DropExpiredFirst],
        Some(v) => match de::<Vec<DropPolicy>>(v, &join(path, "drop_policies")) {
            Ok(p) if p.is_empty() => {
                errs.push(SchemaError::new(join(path, "drop_policies"), "must not be empty"));
                p
            }
            Ok(p) => p,
            Err(e) => {
                errs.push(e);
                Vec::new()
            }
        },
    };
    let base: RelayOverflowConfig = match de(section, path) {
        Ok(b) => b,
        Err(e) => {
            errs.push(e);
            return None;
        }
    };
    for (p, m) in base.validate() {
        errs.push(SchemaError::new(join(path, &p), m));
    }
    Some(RelaySection { base, drop_policies })
}

fn parse_end_to_end(
    section: Option<&Value>,
    path: &str,
    tick_ms: u64,
    errs: &mut Vec<SchemaError>,
) -> Option<EndToEndSection> {
    let mut f = Fields::open(section, path, errs)?;
    let source: Option<SourceProcess> = f.req("source");
    let sample_period_ms: Option<u64> = f.req("sample_period_ms");
    let payload_len = f.or("payload_len", 64u32);
    let lifetime_ms: Option<u64> = f.req("lifetime_ms");
    let src: Option<Eid> = f.req("src");
    let dst: Option<Eid> = f.req("dst");
    let nodes: Option<Vec<NodeConfig>> = f.req("nodes");
    let contacts: Option<ContactPlan> = f.req("contacts");
    if let Some(Err(e)) = source.as_ref().map(SourceProcess::validate) {
        f.err("source", policy_message(&e));
    }
    if let Some(p) = sample_period_ms {
        if p == 0 || p % tick_ms.max(1) != 0 {
            f.err("sample_period_ms", "must be a positive multiple of tick_ms");
        }
    }
    if payload_len == 0 {
        f.err("payload_len", "must be > 0");
    }
    f.finish();
    let (src, dst) = (src?, dst?);
    let network = DtnScenario {
        nodes: nodes?,
        contacts: contacts?,
        flows: vec![FlowSpec {
            src,
            dst,
            start_ms: 0,
            period_ms: sample_period_ms?,
            count: None,
            payload_len,
            lifetime_ms: lifetime_ms?,
        }],
        injections: Vec::new(),
    };
    check_dtn(&network, path, errs);
    Some(EndToEndSection {
        source: source?,
        sample_period_ms: sample_period_ms?,
        payload_len,
        lifetime_ms: lifetime_ms?,
        src,
        dst,
        network,
    })
}
