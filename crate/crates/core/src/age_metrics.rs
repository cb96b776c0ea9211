//! Age of information: the sawtooth `age(t) = t - u(t)` where `u(t)` is the
//! generation time of the newest update delivered so far, its exact time
//! average, age penalty functions, and the position uncertainty radius of
//! peers whose last report is stale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim_core::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgeError {
    #[error("query at {t} precedes the last recorded delivery at {last}")]
    TimeRegression { t: SimTime, last: SimTime },
    #[error("delivery at {delivery} precedes generation at {generation}")]
    CausalityViolation { generation: SimTime, delivery: SimTime },
    #[error("negative age {0}")]
    NegativeAge(f64),
    #[error("penalty table breakpoints must be strictly increasing (index {0})")]
    UnsortedBreakpoints(usize),
    #[error("penalty table is empty")]
    EmptyTable,
    #[error("unknown peer {0}")]
    UnknownPeer(u32),
}

/// A delivery that was recorded, with `u` after applying it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Breakpoint {
    pub delivery_time: SimTime,
    pub gen_time: SimTime,
    /// `u(t)` right after the delivery, in ms; negative only before the first
    /// delivery when `initial_age > 0`.
    pub u_after: i64,
}

/// Age process of one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeTracker {
    initial_age: u64,
    u: i64,
    history: Vec<Breakpoint>,
}

impl Default for AgeTracker {
    fn default() -> Self {
        Self::new(0)
    }
}

impl AgeTracker {
    /// `initial_age` is the age at `t = 0`, so before any delivery the age is
    /// `initial_age + t`.
    pub fn new(initial_age: u64) -> Self {
        Self {
            initial_age,
            u: -(initial_age as i64),
            history: Vec::new(),
        }
    }

    pub fn initial_age(&self) -> u64 {
        self.initial_age
    }

    /// Generation time of the newest delivered update, if any.
    pub fn newest_generation(&self) -> Option<SimTime> {
        self.history.iter().map(|b| b.gen_time).max()
    }

    pub fn history(&self) -> &[Breakpoint] {
        &self.history
    }

    pub fn last_delivery(&self) -> Option<SimTime> {
        self.history.last().map(|b| b.delivery_time)
    }

    pub fn record_delivery(
        &mut self,
        gen_time: SimTime,
        delivery_time: SimTime,
    ) -> Result<(), AgeError> {
        if delivery_time < gen_time {
            return Err(AgeError::CausalityViolation {
                generation: gen_time,
                delivery: delivery_time,
            });
        }
        if let Some(last) = self.last_delivery() {
            if delivery_time < last {
                return Err(AgeError::TimeRegression { t: delivery_time, last });
            }
        }
        self.u = self.u.max(gen_time.0 as i64);
        self.history.push(Breakpoint {
            delivery_time,
            gen_time,
            u_after: self.u,
        });
        Ok(())
    }

    pub fn instantaneous_age(&self, t: SimTime) -> Result<u64, AgeError> {
        if let Some(last) = self.last_delivery() {
            if t < last {
                return Err(AgeError::TimeRegression { t, last });
            }
        }
        Ok((t.0 as i64 - self.u) as u64)
    }

    /// Age at any time `t`, including instants before later deliveries.
    /// Deliveries take effect at their own instant.
    pub fn age_at(&self, t: SimTime) -> u64 {
        let idx = self.history.partition_point(|b| b.delivery_time <= t);
        let u = if idx == 0 {
            -(self.initial_age as i64)
        } else {
            self.history[idx - 1].u_after
        };
        (t.0 as i64 - u) as u64
    }

    /// Exact integral of the age over `[0, horizon]` in ms².
    pub fn integrated_age(&self, horizon: SimTime) -> f64 {
        let end = horizon.0 as f64;
        let mut u = -(self.initial_age as f64);
        let mut from = 0.0_f64;
        let mut area = 0.0_f64;
        for b in &self.history {
            let to = b.delivery_time.0 as f64;
            if to >= end {
                break;
            }
            area += trapezoid(from, to, u);
            from = to;
            u = b.u_after as f64;
        }
        area + trapezoid(from, end, u)
    }

    /// Time-average age over `[0, horizon]`, in ms.
    pub fn time_average_age(&self, horizon: SimTime) -> f64 {
        if horizon.0 == 0 {
            return self.initial_age as f64;
        }
        self.integrated_age(horizon) / horizon.0 as f64
    }
}

/// Area under `t - u` for `t` in `[from, to]`.
fn trapezoid(from: f64, to: f64, u: f64) -> f64 {
    if to <= from {
        return 0.0;
    }
    0.5 * ((from - u) + (to - u)) * (to - from)
}

/// Piecewise-linear loss table over age in ms. Flat outside the breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PiecewiseTable {
    points: Vec<(f64, f64)>,
}

impl PiecewiseTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, AgeError> {
        if points.is_empty() {
            return Err(AgeError::EmptyTable);
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(AgeError::UnsortedBreakpoints(i + 1));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, age: f64) -> f64 {
        let pts = &self.points;
        let (x0, y0) = pts[0];
        if age <= x0 {
            return y0;
        }
        let idx = pts.partition_point(|&(x, _)| x <= age);
        if idx == pts.len() {
            return pts[pts.len() - 1].1;
        }
        let (xa, ya) = pts[idx - 1];
        let (xb, yb) = pts[idx];
        let y = ya + (yb - ya) * ((age - xa) / (xb - xa));
        // rounding must never push a value past its segment's endpoints
        y.clamp(ya.min(yb), ya.max(yb))
    }

    fn is_nondecreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

impl TryFrom<Vec<(f64, f64)>> for PiecewiseTable {
    type Error = AgeError;
    fn try_from(points: Vec<(f64, f64)>) -> Result<Self, AgeError> {
        Self::new(points)
    }
}

impl From<PiecewiseTable> for Vec<(f64, f64)> {
    fn from(t: PiecewiseTable) -> Self {
        t.points
    }
}

/// Loss as a function of age (ms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgePenalty {
    Linear { a: f64 },
    Exponential { a: f64 },
    PiecewiseTable { points: PiecewiseTable },
}

impl AgePenalty {
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self, AgeError> {
        Ok(AgePenalty::PiecewiseTable {
            points: PiecewiseTable::new(points)?,
        })
    }

    pub fn is_nondecreasing(&self) -> bool {
        match self {
            AgePenalty::Linear { a } | AgePenalty::Exponential { a } => *a >= 0.0,
            AgePenalty::PiecewiseTable { points } => points.is_nondecreasing(),
        }
    }
}

pub fn penalty_eval(penalty: &AgePenalty, age: f64) -> Result<f64, AgeError> {
    if age < 0.0 || age.is_nan() {
        return Err(AgeError::NegativeAge(age));
    }
    Ok(match penalty {
        AgePenalty::Linear { a } => a * age,
        AgePenalty::Exponential { a } => (a * age).exp_m1(),
        AgePenalty::PiecewiseTable { points } => points.eval(age),
    })
}

/// Worst-case displacement in meters of a peer moving at most `speed_mps`
/// since a report that is `age_ms` old.
pub fn uncertainty_radius(speed_mps: f64, age_ms: u64) -> f64 {
    speed_mps.max(0.0) * (age_ms as f64 / 1000.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeerState {
    pub position: Vec<f64>,
    pub speed_bound: f64,
    pub age: AgeTracker,
}

/// What one agent knows about its peers: last reported position, speed bound
/// and the age of that report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeerStateTable {
    peers: BTreeMap<u32, PeerState>,
}

impl PeerStateTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_peer(&mut self, id: u32, position: Vec<f64>, speed_bound: f64, initial_age: u64) {
        self.peers.insert(
            id,
            PeerState {
                position,
                speed_bound,
                age: AgeTracker::new(initial_age),
            },
        );
    }

    pub fn get(&self, id: u32) -> Option<&PeerState> {
        self.peers.get(&id)
    }

    pub fn len(&self) -> usize {
        self.peers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peers.is_empty()
    }

    /// Applies a position report generated at `gen_time` and received at
    /// `delivery_time`. Stale reports do not overwrite a newer position.
    pub fn receive_report(
        &mut self,
        id: u32,
        position: Vec<f64>,
        gen_time: SimTime,
        delivery_time: SimTime,
    ) -> Result<(), AgeError> {
        let peer = self.peers.get_mut(&id).ok_or(AgeError::UnknownPeer(id))?;
        let newer = peer.age.newest_generation().is_none_or(|g| gen_time > g);
        peer.age.record_delivery(gen_time, delivery_time)?;
        if newer {
            peer.position = position;
        }
        Ok(())
    }

    pub fn radius(&self, id: u32, t: SimTime) -> Result<f64, AgeError> {
        let peer = self.peers.get(&id).ok_or(AgeError::UnknownPeer(id))?;
        let age = peer.age.instantaneous_age(t)?;
        Ok(uncertainty_radius(peer.speed_bound, age))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ms: u64) -> SimTime {
        SimTime(ms)
    }

    #[test]
    fn age_after_single_delivery() {
        let mut tr = AgeTracker::default();
        tr.record_delivery(t(2), t(5)).unwrap();
        assert_eq!(tr.instantaneous_age(t(5)).unwrap(), 3);
    }

    #[test]
    fn age_without_deliveries_grows_from_initial() {
        assert_eq!(AgeTracker::new(0).instantaneous_age(t(7)).unwrap(), 7);
        assert_eq!(AgeTracker::new(100).instantaneous_age(t(7)).unwrap(), 107);
    }

    #[test]
    fn age_uses_newest_generation() {
        let mut tr = AgeTracker::default();
        tr.record_delivery(t(2), t(5)).unwrap();
        tr.record_delivery(t(4), t(6)).unwrap();
        assert_eq!(tr.instantaneous_age(t(10)).unwrap(), 6);
    }

    #[test]
    fn stale_delivery_keeps_u() {
        let mut tr = AgeTracker::default();
        tr.record_delivery(t(4), t(4)).unwrap();
        tr.record_delivery(t(3), t(6)).unwrap();
        assert_eq!(tr.instantaneous_age(t(6)).unwrap(), 2);
        assert_eq!(tr.history().len(), 2);
        tr.record_delivery(t(9), t(12)).unwrap();
        assert_eq!(tr.instantaneous_age(t(12)).unwrap(), 3);
    }

    #[test]
    fn causality_and_regression_errors() {
        let mut tr = AgeTracker::default();
        assert!(matches!(
            tr.record_delivery(t(9), t(8)),
            Err(AgeError::CausalityViolation { .. })
        ));
        tr.record_delivery(t(1), t(10)).unwrap();
        assert!(matches!(
            tr.instantaneous_age(t(9)),
            Err(AgeError::TimeRegression { .. })
        ));
    }

    #[test]
    fn time_average_triangle() {
        assert_eq!(AgeTracker::default().time_average_age(t(10)), 5.0);
    }

    #[test]
    fn time_average_with_one_delivery() {
        let mut tr = AgeTracker::default();
        tr.record_delivery(t(0), t(5)).unwrap();
        assert_eq!(tr.time_average_age(t(10)), 5.0);
    }

    #[test]
    fn periodic_zero_delay_sawtooth_mean() {
        let mut tr = AgeTracker::default();
        for k in 1..=100 {
            tr.record_delivery(t(4 * k), t(4 * k)).unwrap();
        }
        let avg = tr.time_average_age(t(400));
        assert!((avg - 2.0).abs() <= 0.05, "{avg}");
    }

    #[test]
    fn deliveries_after_horizon_are_ignored() {
        let mut tr = AgeTracker::default();
        tr.record_delivery(t(1), t(20)).unwrap();
        assert_eq!(tr.time_average_age(t(10)), 5.0);
    }

    #[test]
    fn penalties() {
        assert_eq!(penalty_eval(&AgePenalty::Linear { a: 2.0 }, 3.0).unwrap(), 6.0);
        assert_eq!(penalty_eval(&AgePenalty::Exponential { a: 0.7 }, 0.0).unwrap(), 0.0);
        let table = AgePenalty::table(vec![(0.0, 0.0), (10.0, 5.0), (20.0, 1.0)]).unwrap();
        assert_eq!(penalty_eval(&table, 15.0).unwrap(), 3.0);
        assert_eq!(penalty_eval(&table, 100.0).unwrap(), 1.0);
        assert!(matches!(
            penalty_eval(&table, -1.0),
            Err(AgeError::NegativeAge(_))
        ));
    }

    #[test]
    fn table_rejects_unsorted() {
        assert!(matches!(
            PiecewiseTable::new(vec![(0.0, 0.0), (10.0, 1.0), (10.0, 2.0)]),
            Err(AgeError::UnsortedBreakpoints(2))
        ));
        assert!(matches!(PiecewiseTable::new(vec![]), Err(AgeError::EmptyTable)));
    }

    #[test]
    fn table_deserializes_from_pairs() {
        let p: AgePenalty =
            serde_json::from_str(r#"{"type":"piecewise_table","points":[[0,0],[10,5]]}"#).unwrap();
        assert_eq!(penalty_eval(&p, 5.0).unwrap(), 2.5);
        assert!(serde_json::from_str::<AgePenalty>(
            r#"{"type":"piecewise_table","points":[[10,0],[0,5]]}"#
        )
        .is_err());
    }

    #[test]
    fn radius() {
        assert_eq!(uncertainty_radius(2.0, 3000), 6.0);
        assert_eq!(uncertainty_radius(0.0, 123_456), 0.0);
        assert_eq!(uncertainty_radius(1.5, 4000), 6.0);
    }

    #[test]
    fn peer_table_tracks_radius() {
        let mut peers = PeerStateTable::new();
        peers.add_peer(1, vec![0.0, 0.0], 2.0, 0);
        peers.receive_report(1, vec![5.0, 5.0], t(1000), t(2000)).unwrap();
        assert_eq!(peers.radius(1, t(4000)).unwrap(), 6.0);
        // a stale report does not roll back the position
        peers.receive_report(1, vec![9.0, 9.0], t(500), t(4500)).unwrap();
        assert_eq!(peers.get(1).unwrap().position, vec![5.0, 5.0]);
        assert!(matches!(peers.radius(7, t(0)), Err(AgeError::UnknownPeer(7))));
    }
}
