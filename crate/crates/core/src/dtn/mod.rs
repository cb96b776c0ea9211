//! Store-and-forward bundle delivery.
//!
//! Bundles carry a creation timestamp, a lifetime in ms past creation and an
//! age block accumulated hop by hop. Nodes hold bundles until a scheduled
//! contact to the next hop opens; routes are computed over the contact plan.

mod cgr;
mod codec;
mod network;
mod node;

pub use cgr::{cgr_route, earliest_arrival_within, Route};
pub use codec::{decode_bundle, encode_bundle, CodecError, HEADER_LEN, MAGIC, VERSION};
pub use network::{
    relay_overflow, run_dtn, DtnOutcome, DtnScenario, FlowSpec, FlowStats, ForwardLog, Injection, NodeConfig,
    RelayOverflowConfig,
};
pub use node::{BpaNode, DropPolicy, EnqueueResult, ForwardReport, QueuedBundle, Transmission};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim_core::SimTime;

pub use crate::delay_models::NodeId as Eid;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DtnError {
    #[error("node time {node_time} precedes bundle creation at {creation}")]
    NegativeAge { node_time: SimTime, creation: SimTime },
    #[error("no route from {src} to {dst}")]
    NoRoute { src: Eid, dst: Eid },
    #[error("contact ended at {end}, now {now}")]
    ContactClosed { end: SimTime, now: SimTime },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bundle {
    /// Local handle; not carried on the wire.
    #[serde(default)]
    pub id: u64,
    pub src_eid: Eid,
    pub dst_eid: Eid,
    pub creation_ts: SimTime,
    /// Milliseconds past creation after which the payload is useless.
    pub lifetime: u64,
    /// Bundle Age extension block, ms.
    #[serde(default)]
    pub age_block: u64,
    pub payload_len: u32,
    /// Shorter lifetime imposed by a bundle protocol agent.
    #[serde(default)]
    pub lifetime_override: Option<u64>,
}

impl Bundle {
    pub fn new(id: u64, src_eid: Eid, dst_eid: Eid, creation_ts: SimTime, lifetime: u64, payload_len: u32) -> Self {
        Self {
            id,
            src_eid,
            dst_eid,
            creation_ts,
            lifetime,
            age_block: 0,
            payload_len,
            lifetime_override: None,
        }
    }

    pub fn effective_lifetime(&self) -> u64 {
        self.lifetime_override.unwrap_or(self.lifetime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    LifetimeExpired,
    TrafficPared,
    BufferOverflow,
    NoRoute,
}

impl DropReason {
    pub const ALL: [DropReason; 4] = [
        DropReason::LifetimeExpired,
        DropReason::TrafficPared,
        DropReason::BufferOverflow,
        DropReason::NoRoute,
    ];
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::LifetimeExpired => "lifetime expired",
            DropReason::TrafficPared => "Traffic pared",
            DropReason::BufferOverflow => "depleted storage",
            DropReason::NoRoute => "no known route to destination",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub bundle_id: u64,
    pub node: Eid,
    pub time: SimTime,
    pub reason: DropReason,
    pub payload_len: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub bundle_id: u64,
    pub node: Eid,
    pub time: SimTime,
    pub creation_ts: SimTime,
    pub age_ms: u64,
    pub age_block: u64,
    pub payload_len: u32,
}

/// Age as seen by a node: from its own clock when that clock is trusted,
/// otherwise from the age block.
pub fn bundle_age(b: &Bundle, node_time: SimTime, clock_accurate: bool) -> Result<u64, DtnError> {
    if !clock_accurate {
        return Ok(b.age_block);
    }
    node_time.checked_since(b.creation_ts).ok_or(DtnError::NegativeAge {
        node_time,
        creation: b.creation_ts,
    })
}

/// A bundle expires once its age strictly exceeds the governing lifetime.
/// An override, when present, governs and expiring under it is reported as
/// traffic paring.
pub fn check_expiry(b: &Bundle, node_time: SimTime, clock_accurate: bool) -> Option<DropReason> {
    let age = bundle_age(b, node_time, clock_accurate).ok()?;
    if age <= b.effective_lifetime() {
        return None;
    }
    Some(if b.lifetime_override.is_some() {
        DropReason::TrafficPared
    } else {
        DropReason::LifetimeExpired
    })
}

/// Adds one hop's worth of elapsed time to the age block.
pub fn update_age_block(b: &Bundle, residence_ms: u64, transmit_ms: u64, owlt_ms: u64) -> Bundle {
    Bundle {
        age_block: b.age_block + residence_ms + transmit_ms + owlt_ms,
        ..b.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(creation: u64, lifetime: u64) -> Bundle {
        Bundle::new(1, 1, 2, SimTime(creation), lifetime, 100)
    }

    #[test]
    fn age_from_clock_or_block() {
        let mut b = bundle(1_000, 10_000);
        assert_eq!(bundle_age(&b, SimTime(4_000), true).unwrap(), 3_000);
        assert_eq!(bundle_age(&b, SimTime(1_000), true).unwrap(), 0);
        b.age_block = 2_500;
        assert_eq!(bundle_age(&b, SimTime(99_999), false).unwrap(), 2_500);
        assert_eq!(bundle_age(&b, SimTime(0), false).unwrap(), 2_500);
        assert!(matches!(bundle_age(&b, SimTime(10), true), Err(DtnError::NegativeAge { .. })));
    }

    #[test]
    fn expiry_is_strict() {
        let b = bundle(0, 5_000);
        assert_eq!(check_expiry(&b, SimTime(5_000), true), None);
        assert_eq!(check_expiry(&b, SimTime(5_001), true), Some(DropReason::LifetimeExpired));
        let pared = Bundle { lifetime_override: Some(3_000), ..b.clone() };
        assert_eq!(check_expiry(&pared, SimTime(3_000), true), None);
        assert_eq!(check_expiry(&pared, SimTime(3_001), true), Some(DropReason::TrafficPared));
    }

    #[test]
    fn expiry_with_inaccurate_clock_uses_age_block() {
        let mut b = bundle(0, 5_000);
        b.age_block = 5_001;
        assert_eq!(check_expiry(&b, SimTime(0), false), Some(DropReason::LifetimeExpired));
        assert_eq!(check_expiry(&b, SimTime(0), true), None);
    }

    #[test]
    fn reason_strings() {
        assert_eq!(DropReason::LifetimeExpired.to_string(), "lifetime expired");
        assert_eq!(DropReason::TrafficPared.to_string(), "Traffic pared");
    }

    #[test]
    fn age_block_updates_add_up() {
        let b = bundle(0, 1);
        assert_eq!(update_age_block(&b, 0, 0, 0), b);
        assert_eq!(update_age_block(&b, 10_000, 500, 261_478).age_block, 271_978);
        let two_hops = update_age_block(&update_age_block(&b, 3, 4, 5), 6, 7, 8);
        assert_eq!(two_hops.age_block, 3 + 4 + 5 + 6 + 7 + 8);
    }
}
