//! Link delay generators (constant, i.i.d., Gilbert-Elliott style two-state
//! Markov modulation, circular-orbit geometry) and contact plans.

use std::f64::consts::TAU;
use std::path::Path;

use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim_core::{RngStream, SimTime};

/// Light travel time across one astronomical unit.
pub const LIGHT_MS_PER_AU: f64 = 499_004.784;
pub const MS_PER_DAY: f64 = 86_400_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DelayError {
    #[error("link is down at {0} (solar conjunction)")]
    LinkDown(SimTime),
    #[error("operation requires an orbital delay process")]
    WrongVariant,
    #[error("degenerate chain: p_gb = q_bg = 0")]
    DegenerateChain,
    #[error("invalid delay model: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("contact {index}: {message}")]
    BadContact { index: usize, message: String },
    #[error("contacts are not sorted by start (index {0})")]
    Unsorted(usize),
    #[error("contacts {0} and {1} overlap on the same link")]
    Overlap(usize, usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read contact plan: {0}")]
    Io(String),
}

/// A body on a circular, coplanar heliocentric orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    /// AU.
    pub orbit_radius: f64,
    /// Days.
    pub period: f64,
    /// Radians at `t = 0`.
    #[serde(default)]
    pub initial_phase: f64,
}

impl Body {
    pub const EARTH: Body = Body {
        orbit_radius: 1.0,
        period: 365.256,
        initial_phase: 0.0,
    };
    pub const MARS: Body = Body {
        orbit_radius: 1.524,
        period: 686.980,
        initial_phase: 0.0,
    };

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.initial_phase = phase;
        self
    }

    pub fn phase(&self, t: SimTime) -> f64 {
        self.initial_phase + TAU * (t.0 as f64) / (self.period * MS_PER_DAY)
    }

    /// Heliocentric position in AU.
    pub fn position(&self, t: SimTime) -> (f64, f64) {
        let phi = self.phase(t);
        (self.orbit_radius * phi.cos(), self.orbit_radius * phi.sin())
    }

    fn validate(&self, what: &str) -> Result<(), String> {
        if !(self.orbit_radius > 0.0) {
            return Err(format!("{what}.orbit_radius must be > 0"));
        }
        if !(self.period > 0.0) {
            return Err(format!("{what}.period must be > 0"));
        }
        Ok(())
    }
}

/// Time between repeated relative configurations of two bodies, in days.
pub fn synodic_period_days(a: &Body, b: &Body) -> f64 {
    1.0 / (1.0 / a.period - 1.0 / b.period).abs()
}

pub fn distance_au(a: &Body, b: &Body, t: SimTime) -> f64 {
    let (ra, rb) = (a.orbit_radius, b.orbit_radius);
    let dphi = a.phase(t) - b.phase(t);
    (ra * ra + rb * rb - 2.0 * ra * rb * dphi.cos()).max(0.0).sqrt()
}

pub fn one_way_delay_ms(distance_au: f64) -> u64 {
    (distance_au.max(0.0) * LIGHT_MS_PER_AU).round() as u64
}

/// A two-body link whose delay follows orbital geometry and which drops out
/// near superior conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalLink {
    #[serde(rename = "bodyA")]
    pub body_a: Body,
    #[serde(rename = "bodyB")]
    pub body_b: Body,
    #[serde(default)]
    pub conjunction_angle_deg: f64,
    #[serde(default)]
    pub processing_ms: u64,
}

impl OrbitalLink {
    pub fn earth_mars(conjunction_angle_deg: f64) -> Self {
        Self {
            body_a: Body::EARTH,
            body_b: Body::MARS,
            conjunction_angle_deg,
            processing_ms: 0,
        }
    }

    /// Angle in degrees, seen from A, between the Sun and B.
    pub fn sun_separation_deg(&self, t: SimTime) -> f64 {
        let (ax, ay) = self.body_a.position(t);
        let (bx, by) = self.body_b.position(t);
        let to_sun = (-ax, -ay);
        let to_b = (bx - ax, by - ay);
        let dot = to_sun.0 * to_b.0 + to_sun.1 * to_b.1;
        let cross = to_sun.0 * to_b.1 - to_sun.1 * to_b.0;
        cross.atan2(dot).abs().to_degrees()
    }

    pub fn is_up(&self, t: SimTime) -> bool {
        self.conjunction_angle_deg <= 0.0 || self.sun_separation_deg(t) >= self.conjunction_angle_deg
    }

    pub fn distance_au(&self, t: SimTime) -> f64 {
        distance_au(&self.body_a, &self.body_b, t)
    }

    pub fn one_way_delay_ms(&self, t: SimTime) -> u64 {
        one_way_delay_ms(self.distance_au(t))
    }
}

/// Finite distribution over delays in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTable {
    pub values: Vec<u64>,
    pub probabilities: Vec<f64>,
}

impl DiscreteTable {
    pub fn new(values: Vec<u64>, probabilities: Vec<f64>) -> Result<Self, DelayError> {
        let t = Self { values, probabilities };
        t.validate()?;
        Ok(t)
    }

    pub fn deterministic(value: u64) -> Self {
        Self {
            values: vec![value],
            probabilities: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<(), DelayError> {
        if self.values.is_empty() || self.values.len() != self.probabilities.len() {
            return Err(DelayError::Invalid(
                "discrete table needs matching, nonempty values and probabilities".into(),
            ));
        }
        if self.probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(DelayError::Invalid("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DelayError::Invalid(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.values.iter().copied().zip(self.probabilities.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, p)| v as f64 * p).sum()
    }

    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        let u = rng.uniform();
        let mut acc = 0.0;
        for (v, p) in self.iter() {
            acc += p;
            if u < acc {
                return v;
            }
        }
        *self.values.last().expect("validated nonempty")
    }
}

/// Memoryless delay law, in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DelayDistribution {
    Constant { d: u64 },
    Exponential { mean: f64 },
    /// Parameters of the underlying normal of `ln(delay_ms)`.
    LogNormal { mu: f64, sigma: f64 },
    DiscreteTable(DiscreteTable),
}

impl DelayDistribution {
    pub fn validate(&self) -> Result<(), DelayError> {
        match self {
            DelayDistribution::Constant { .. } => Ok(()),
            DelayDistribution::Exponential { mean } if *mean > 0.0 && mean.is_finite() => Ok(()),
            DelayDistribution::Exponential { .. } => {
                Err(DelayError::Invalid("exponential mean must be > 0".into()))
            }
            DelayDistribution::LogNormal { mu, sigma } if mu.is_finite() && *sigma >= 0.0 => Ok(()),
            DelayDistribution::LogNormal { .. } => {
                Err(DelayError::Invalid("lognormal needs finite mu and sigma >= 0".into()))
            }
            DelayDistribution::DiscreteTable(t) => t.validate(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        match self {
            DelayDistribution::Constant { d } => *d,
            DelayDistribution::Exponential { mean } => {
                let draw: f64 = Exp::new(1.0 / mean).expect("validated").sample(rng);
                draw.round() as u64
            }
            DelayDistribution::LogNormal { mu, sigma } => {
                let draw: f64 = LogNormal::new(*mu, *sigma).expect("validated").sample(rng);
                draw.round() as u64
            }
            DelayDistribution::DiscreteTable(t) => t.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelState {
    #[default]
    Good,
    Bad,
}

/// Stochastic per-transmission delay source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DelayProcess {
    Constant {
        d: u64,
    },
    IidRandom {
        distribution: DelayDistribution,
    },
    /// Hidden two-state chain; one transition per draw.
    MarkovModulated {
        p_gb: f64,
        q_bg: f64,
        good_dist: DelayDistribution,
        bad_dist: DelayDistribution,
        #[serde(default)]
        state: ChannelState,
    },
    Orbital(OrbitalLink),
}

impl DelayProcess {
    pub fn validate(&self) -> Result<(), DelayError> {
        match self {
            DelayProcess::Constant { .. } => Ok(()),
            DelayProcess::IidRandom { distribution } => distribution.validate(),
            DelayProcess::MarkovModulated {
                p_gb,
                q_bg,
                good_dist,
                bad_dist,
                ..
            } => {
                for (name, p) in [("p_gb", p_gb), ("q_bg", q_bg)] {
                    if !(0.0..=1.0).contains(p) {
                        return Err(DelayError::Invalid(format!("{name} must lie in [0, 1]")));
                    }
                }
                good_dist.validate()?;
                bad_dist.validate()
            }
            DelayProcess::Orbital(link) => {
                link.body_a.validate("bodyA").map_err(DelayError::Invalid)?;
                link.body_b.validate("bodyB").map_err(DelayError::Invalid)?;
                if !(link.conjunction_angle_deg >= 0.0 && link.conjunction_angle_deg < 180.0) {
                    return Err(DelayError::Invalid(
                        "conjunction_angle_deg must lie in [0, 180)".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Hidden state of a Markov-modulated process.
    pub fn channel_state(&self) -> Option<ChannelState> {
        match self {
            DelayProcess::MarkovModulated { state, .. } => Some(*state),
            _ => None,
        }
    }

    pub fn is_link_up(&self, t: SimTime) -> Result<bool, DelayError> {
        match self {
            DelayProcess::Orbital(link) => Ok(link.is_up(t)),
            _ => Err(DelayError::WrongVariant),
        }
    }

    /// Whether a transmission may start at `t`; only orbital links go down.
    pub fn available(&self, t: SimTime) -> bool {
        self.is_link_up(t).unwrap_or(true)
    }

    pub fn sample_delay(&mut self, t: SimTime, rng: &mut RngStream) -> Result<u64, DelayError> {
        match self {
            DelayProcess::Constant { d } => Ok(*d),
            DelayProcess::IidRandom { distribution } => Ok(distribution.sample(rng)),
            DelayProcess::MarkovModulated {
                p_gb,
                q_bg,
                good_dist,
                bad_dist,
                state,
            } => {
                let u = rng.uniform();
                *state = match *state {
                    ChannelState::Good if u < *p_gb => ChannelState::Bad,
                    ChannelState::Bad if u < *q_bg => ChannelState::Good,
                    s => s,
                };
                Ok(match state {
                    ChannelState::Good => good_dist.sample(rng),
                    ChannelState::Bad => bad_dist.sample(rng),
                })
            }
            DelayProcess::Orbital(link) => {
                if !link.is_up(t) {
                    return Err(DelayError::LinkDown(t));
                }
                Ok(link.one_way_delay_ms(t) + link.processing_ms)
            }
        }
    }
}

/// Stationary probability of the Good state.
pub fn ge_stationary_good(p_gb: f64, q_bg: f64) -> Result<f64, DelayError> {
    if p_gb + q_bg <= 0.0 {
        return Err(DelayError::DegenerateChain);
    }
    Ok(q_bg / (p_gb + q_bg))
}

pub type NodeId = u16;

/// A scheduled transmission window from one node to another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub from: NodeId,
    pub to: NodeId,
    pub start: SimTime,
    pub end: SimTime,
    /// Bytes per ms.
    pub rate: f64,
    /// One-way light time, ms.
    pub owlt: u64,
}

impl Contact {
    fn check(&self) -> Result<(), String> {
        if self.start >= self.end {
            return Err("start must precede end".into());
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err("rate must be > 0".into());
        }
        if self.from == self.to {
            return Err("from and to must differ".into());
        }
        Ok(())
    }

    /// Bytes that fit between `from` and the end of the window.
    pub fn volume_from(&self, from: SimTime) -> f64 {
        let begin = from.max(self.start);
        self.end.0.saturating_sub(begin.0) as f64 * self.rate
    }

    /// Transmission time of `bytes`, rounded up to whole ms.
    pub fn transmit_ms(&self, bytes: u64) -> u64 {
        (bytes as f64 / self.rate).ceil() as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Contact>", into = "Vec<Contact>")]
pub struct ContactPlan {
    contacts: Vec<Contact>,
}

impl ContactPlan {
    /// Accepts contacts already sorted by start.
    pub fn new(contacts: Vec<Contact>) -> Result<Self, PlanError> {
        for (index, c) in contacts.iter().enumerate() {
            c.check()
                .map_err(|message| PlanError::BadContact { index, message })?;
        }
        for (i, w) in contacts.windows(2).enumerate() {
            if w[1].start < w[0].start {
                return Err(PlanError::Unsorted(i + 1));
            }
        }
        for i in 0..contacts.len() {
            for j in i + 1..contacts.len() {
                let (a, b) = (&contacts[i], &contacts[j]);
                if a.from == b.from && a.to == b.to && b.start < a.end && a.start < b.end {
                    return Err(PlanError::Overlap(i, j));
                }
            }
        }
        Ok(Self { contacts })
    }

    /// Sorts (stably) by start before validating.
    pub fn from_unsorted(mut contacts: Vec<Contact>) -> Result<Self, PlanError> {
        contacts.sort_by_key(|c| c.start);
        Self::new(contacts)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Contact> {
        self.contacts.get(id)
    }

    /// Parses the line format `from,to,start_ms,end_ms,rate_bytes_per_ms,owlt_ms`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, PlanError> {
        let mut contacts = Vec::new();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        for record in reader.records() {
            let record = record.map_err(|e| PlanError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != 6 {
                return Err(PlanError::Parse {
                    line,
                    message: format!("expected 6 fields, found {}", record.len()),
                });
            }
            let field = |i: usize| -> Result<&str, PlanError> { Ok(&record[i]) };
            let int = |i: usize| -> Result<u64, PlanError> {
                field(i)?.parse::<u64>().map_err(|e| PlanError::Parse {
                    line,
                    message: format!("field {}: {e}", i + 1),
                })
            };
            let rate: f64 = field(4)?.parse().map_err(|e| PlanError::Parse {
                line,
                message: format!("field 5: {e}"),
            })?;
            let node = |i: usize| -> Result<NodeId, PlanError> {
                NodeId::try_from(int(i)?).map_err(|e| PlanError::Parse {
                    line,
                    message: format!("field {}: {e}", i + 1),
                })
            };
            contacts.push(Contact {
                from: node(0)?,
                to: node(1)?,
                start: SimTime(int(2)?),
                end: SimTime(int(3)?),
                rate,
                owlt: int(5)?,
            });
        }
        Self::from_unsorted(contacts)
    }

    pub fn load(path: &Path) -> Result<Self, PlanError> {
        let text = std::fs::read_to_string(path).map_err(|e| PlanError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# from,to,start_ms,end_ms,rate_bytes_per_ms,owlt_ms\n");
        for c in &self.contacts {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.from, c.to, c.start.0, c.end.0, c.rate, c.owlt
            ));
        }
        out
    }
}

impl TryFrom<Vec<Contact>> for ContactPlan {
    type Error = PlanError;
    fn try_from(contacts: Vec<Contact>) -> Result<Self, PlanError> {
        Self::new(contacts)
    }
}

impl From<ContactPlan> for Vec<Contact> {
    fn from(plan: ContactPlan) -> Self {
        plan.contacts
    }
}

/// Scans `[0, horizon]` every `step_ms` (plus the horizon itself) and emits one
/// contact `from -> to` per maximal run of instants where the link is up. Each
/// contact's owlt is the one-way delay at its midpoint.
pub fn plan_from_orbits(
    link: &OrbitalLink,
    from: NodeId,
    to: NodeId,
    horizon: SimTime,
    step_ms: u64,
    rate: f64,
) -> Result<ContactPlan, PlanError> {
    assert!(step_ms > 0, "step must be positive");
    let mut instants: Vec<SimTime> = (0..=horizon.0).step_by(step_ms as usize).map(SimTime).collect();
    if instants.last() != Some(&horizon) {
        instants.push(horizon);
    }

    let mut contacts = Vec::new();
    let mut open: Option<(SimTime, SimTime)> = None;
    let close = |span: (SimTime, SimTime), contacts: &mut Vec<Contact>| {
        let (start, end) = span;
        if start < end {
            let mid = SimTime(start.0 + (end.0 - start.0) / 2);
            contacts.push(Contact {
                from,
                to,
                start,
                end,
                rate,
                owlt: link.one_way_delay_ms(mid),
            });
        }
    };
    for &t in &instants {
        if link.is_up(t) {
            open = Some(match open {
                Some((start, _)) => (start, t),
                None => (t, t),
            });
        } else if let Some(span) = open.take() {
            close(span, &mut contacts);
        }
    }
    if let Some(span) = open {
        close(span, &mut contacts);
    }
    ContactPlan::new(contacts)
}

/// Summary of the round-trip time between two bodies sampled every `step_ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct RttEnvelope {
    pub min_rtt_ms: u64,
    pub max_rtt_ms: u64,
    pub mean_one_way_ms: f64,
    pub trace: Vec<(SimTime, u64)>,
}

pub fn rtt_envelope(link: &OrbitalLink, horizon: SimTime, step_ms: u64) -> RttEnvelope {
    assert!(step_ms > 0, "step must be positive");
    let trace: Vec<(SimTime, u64)> = (0..=horizon.0)
        .step_by(step_ms as usize)
        .map(|ms| {
            let t = SimTime(ms);
            (t, 2 * link.one_way_delay_ms(t))
        })
        .collect();
    let min_rtt_ms = trace.iter().map(|&(_, r)| r).min().unwrap_or(0);
    let max_rtt_ms = trace.iter().map(|&(_, r)| r).max().unwrap_or(0);
    let mean_one_way_ms =
        trace.iter().map(|&(_, r)| r as f64 / 2.0).sum::<f64>() / trace.len().max(1) as f64;
    RttEnvelope {
        min_rtt_ms,
        max_rtt_ms,
        mean_one_way_ms,
        trace,
    }
}
