//! A bundle protocol agent: a bounded FIFO store with a drop policy and
//! per-contact forwarding.

use serde::{Deserialize, Serialize};

use crate::delay_models::Contact;
use crate::sim_core::SimTime;

use super::{bundle_age, check_expiry, update_age_block, Bundle, DropReason, DropRecord, DtnError, Eid};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropPolicy {
    /// Refuse the arriving bundle.
    #[default]
    TailDrop,
    /// Evict the oldest buffered bundles (by bundle age) to make room.
    DropStalest,
    /// Evict expired bundles first, then refuse the arrival if still full.
    DropExpiredFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueuedBundle {
    pub bundle: Bundle,
    pub enqueued_at: SimTime,
    /// Neighbour this bundle waits for; `None` means any contact.
    pub next_hop: Option<Eid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnqueueResult {
    pub accepted: bool,
    pub dropped: Vec<DropRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    /// Age block already advanced by residence, transmit time and light time.
    pub bundle: Bundle,
    pub depart: SimTime,
    pub finish: SimTime,
    pub arrival: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardReport {
    pub transmitted: Vec<Transmission>,
    pub dropped: Vec<DropRecord>,
    /// Bytes waiting for this contact once expired bundles were removed.
    pub queued_bytes: u64,
    /// Bytes waiting for this contact beyond what it can still carry.
    pub overflow_bytes: u64,
    pub available_volume: f64,
    /// When the link goes idle again.
    pub busy_until: SimTime,
}

#[derive(Debug, Clone)]
pub struct BpaNode {
    pub eid: Eid,
    pub capacity: u64,
    pub clock_accurate: bool,
    pub drop_policy: DropPolicy,
    /// Lifetime cap this agent imposes on bundles it accepts.
    pub lifetime_cap: Option<u64>,
    buffer: Vec<QueuedBundle>,
    occupancy: u64,
}

impl BpaNode {
    pub fn new(eid: Eid, capacity: u64, drop_policy: DropPolicy) -> Self {
        Self {
            eid,
            capacity,
            clock_accurate: true,
            drop_policy,
            lifetime_cap: None,
            buffer: Vec::new(),
            occupancy: 0,
        }
    }

    pub fn with_clock(mut self, accurate: bool) -> Self {
        self.clock_accurate = accurate;
        self
    }

    pub fn with_lifetime_cap(mut self, cap: Option<u64>) -> Self {
        self.lifetime_cap = cap;
        self
    }

    pub fn buffer(&self) -> &[QueuedBundle] {
        &self.buffer
    }

    pub fn occupancy(&self) -> u64 {
        self.occupancy
    }

    pub fn free(&self) -> u64 {
        self.capacity - self.occupancy
    }

    fn record(&self, b: &Bundle, time: SimTime, reason: DropReason) -> DropRecord {
        DropRecord {
            bundle_id: b.id,
            node: self.eid,
            time,
            reason,
            payload_len: b.payload_len,
        }
    }

    fn remove(&mut self, index: usize) -> QueuedBundle {
        let q = self.buffer.remove(index);
        self.occupancy -= u64::from(q.bundle.payload_len);
        q
    }

    pub fn enqueue(&mut self, bundle: Bundle, t: SimTime) -> EnqueueResult {
        self.enqueue_for(bundle, t, None)
    }

    pub fn enqueue_for(&mut self, mut bundle: Bundle, t: SimTime, next_hop: Option<Eid>) -> EnqueueResult {
        if let Some(cap) = self.lifetime_cap {
            if cap < bundle.effective_lifetime() {
                bundle.lifetime_override = Some(cap);
            }
        }
        let mut dropped = Vec::new();
        if let Some(reason) = check_expiry(&bundle, t, self.clock_accurate) {
            dropped.push(self.record(&bundle, t, reason));
            return EnqueueResult { accepted: false, dropped };
        }
        let size = u64::from(bundle.payload_len);
        if size > self.free() {
            match self.drop_policy {
                DropPolicy::TailDrop => {}
                DropPolicy::DropStalest => {
                    if size <= self.capacity {
                        while size > self.free() {
                            let stalest = self.stalest_index(t);
                            let q = self.remove(stalest);
                            dropped.push(self.record(&q.bundle, t, DropReason::BufferOverflow));
                        }
                    }
                }
                DropPolicy::DropExpiredFirst => dropped.extend(self.purge_expired(t)),
            }
        }
        if size > self.free() {
            dropped.push(self.record(&bundle, t, DropReason::BufferOverflow));
            return EnqueueResult { accepted: false, dropped };
        }
        self.occupancy += size;
        self.buffer.push(QueuedBundle { bundle, enqueued_at: t, next_hop });
        EnqueueResult { accepted: true, dropped }
    }

    /// First buffered bundle with the largest age.
    fn stalest_index(&self, t: SimTime) -> usize {
        let age = |q: &QueuedBundle| {
            if self.clock_accurate {
                bundle_age(&q.bundle, t, true).unwrap_or(0)
            } else {
                q.bundle.age_block + (t - q.enqueued_at)
            }
        };
        let mut best = 0;
        for (i, q) in self.buffer.iter().enumerate() {
            if age(q) > age(&self.buffer[best]) {
                best = i;
            }
        }
        best
    }

    pub fn purge_expired(&mut self, t: SimTime) -> Vec<DropRecord> {
        let mut dropped = Vec::new();
        let mut i = 0;
        while i < self.buffer.len() {
            match check_expiry(&self.buffer[i].bundle, t, self.clock_accurate) {
                Some(reason) => {
                    let q = self.remove(i);
                    dropped.push(self.record(&q.bundle, t, reason));
                }
                None => i += 1,
            }
        }
        dropped
    }

    /// Re-targets every bundle waiting for `neighbour`.
    pub fn take_waiting_for(&mut self, neighbour: Eid) -> Vec<QueuedBundle> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.buffer.len() {
            if self.buffer[i].next_hop == Some(neighbour) {
                out.push(self.remove(i));
            } else {
                i += 1;
            }
        }
        out
    }

    /// Puts back a bundle taken out with [`Self::take_waiting_for`], keeping
    /// its original enqueue time. Capacity cannot be exceeded because the
    /// bytes were just released.
    pub fn restore(&mut self, q: QueuedBundle) {
        self.occupancy += u64::from(q.bundle.payload_len);
        debug_assert!(self.occupancy <= self.capacity);
        let pos = self.buffer.partition_point(|p| p.enqueued_at <= q.enqueued_at);
        self.buffer.insert(pos, q);
    }

    pub fn drain(&mut self) -> Vec<QueuedBundle> {
        self.occupancy = 0;
        std::mem::take(&mut self.buffer)
    }

    /// Sends waiting bundles in FIFO order over `contact` starting at `t_now`.
    /// Expired bundles met along the way are dropped; transmission stops at
    /// the first bundle that no longer fits.
    pub fn forward_during_contact(&mut self, contact: &Contact, t_now: SimTime) -> Result<ForwardReport, DtnError> {
        if t_now >= contact.end {
            return Err(DtnError::ContactClosed { end: contact.end, now: t_now });
        }
        let start = t_now.max(contact.start);
        let available = contact.volume_from(start);
        let eligible = |q: &QueuedBundle| q.next_hop.is_none_or(|h| h == contact.to);
        let mut transmitted = Vec::new();
        let mut dropped = Vec::new();
        let mut sent: u64 = 0;
        let mut blocked = false;
        let mut waiting: u64 = 0;
        let mut i = 0;
        while i < self.buffer.len() {
            if !eligible(&self.buffer[i]) {
                i += 1;
                continue;
            }
            let size = u64::from(self.buffer[i].bundle.payload_len);
            if blocked {
                waiting += size;
                i += 1;
                continue;
            }
            let depart = start + contact.transmit_ms(sent);
            if let Some(reason) = check_expiry(&self.buffer[i].bundle, depart, self.clock_accurate) {
                let q = self.remove(i);
                dropped.push(self.record(&q.bundle, depart, reason));
                continue;
            }
            if (sent + size) as f64 > available {
                blocked = true;
                waiting += size;
                i += 1;
                continue;
            }
            let q = self.remove(i);
            sent += size;
            let finish = start + contact.transmit_ms(sent);
            let bundle = update_age_block(&q.bundle, depart - q.enqueued_at, finish - depart, contact.owlt);
            transmitted.push(Transmission {
                bundle,
                depart,
                finish,
                arrival: finish + contact.owlt,
            });
        }
        let queued = sent + waiting;
        Ok(ForwardReport {
            transmitted,
            dropped,
            queued_bytes: queued,
            overflow_bytes: (queued as f64 - available).max(0.0).ceil() as u64,
            available_volume: available,
            busy_until: start + contact.transmit_ms(sent),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(id: u64, creation: u64, lifetime: u64, len: u32) -> Bundle {
        Bundle::new(id, 1, 2, SimTime(creation), lifetime, len)
    }

    fn contact(start: u64, end: u64, rate: f64) -> Contact {
        Contact { from: 1, to: 2, start: SimTime(start), end: SimTime(end), rate, owlt: 100 }
    }

    #[test]
    fn overflow_report() {
        let mut n = BpaNode::new(1, 10_000, DropPolicy::TailDrop);
        n.enqueue(b(1, 0, 1_000_000, 600), SimTime(0));
        n.enqueue(b(2, 0, 1_000_000, 600), SimTime(0));
        let r = n.forward_during_contact(&contact(0, 1_000, 1.0), SimTime(0)).unwrap();
        assert_eq!(r.transmitted.len(), 1);
        assert_eq!(r.overflow_bytes, 200);
        assert_eq!(n.buffer().len(), 1);
        assert_eq!(n.occupancy(), 600);
    }

    #[test]
    fn expired_bundles_are_not_forwarded() {
        let mut n = BpaNode::new(1, 10_000, DropPolicy::TailDrop);
        n.enqueue(b(1, 0, 500, 10), SimTime(0));
        n.enqueue(b(2, 0, 5_000, 10), SimTime(0));
        let r = n.forward_during_contact(&contact(501, 1_000, 1.0), SimTime(0)).unwrap();
        assert_eq!(r.dropped.len(), 1);
        assert_eq!(r.dropped[0].reason, DropReason::LifetimeExpired);
        assert_eq!(r.dropped[0].time, SimTime(501));
        assert_eq!(r.transmitted.len(), 1);
        assert_eq!(r.transmitted[0].bundle.id, 2);
    }

    #[test]
    fn age_block_tracks_true_age_on_synced_clocks() {
        let mut n = BpaNode::new(1, 10_000, DropPolicy::TailDrop);
        n.enqueue(b(1, 0, 1_000_000, 250), SimTime(0));
        n.enqueue(b(2, 40, 1_000_000, 250), SimTime(40));
        let r = n.forward_during_contact(&contact(300, 2_000, 0.5), SimTime(120)).unwrap();
        for tx in &r.transmitted {
            assert_eq!(tx.bundle.age_block, tx.arrival - tx.bundle.creation_ts);
        }
        assert_eq!(r.transmitted[1].depart, SimTime(800));
        assert_eq!(r.busy_until, SimTime(1_300));
    }

    #[test]
    fn closed_contact() {
        let mut n = BpaNode::new(1, 100, DropPolicy::TailDrop);
        assert!(matches!(
            n.forward_during_contact(&contact(0, 10, 1.0), SimTime(10)),
            Err(DtnError::ContactClosed { .. })
        ));
    }

    #[test]
    fn tail_drop_refuses_arrival() {
        let mut n = BpaNode::new(1, 100, DropPolicy::TailDrop);
        assert!(n.enqueue(b(1, 0, 1_000, 60), SimTime(0)).accepted);
        let r = n.enqueue(b(2, 0, 1_000, 60), SimTime(0));
        assert!(!r.accepted);
        assert_eq!(r.dropped[0].bundle_id, 2);
        assert_eq!(r.dropped[0].reason, DropReason::BufferOverflow);
    }

    #[test]
    fn drop_stalest_evicts_oldest_creation() {
        let mut n = BpaNode::new(1, 100, DropPolicy::DropStalest);
        n.enqueue(b(1, 50, 1_000, 50), SimTime(60));
        n.enqueue(b(2, 10, 1_000, 50), SimTime(60));
        let r = n.enqueue(b(3, 55, 1_000, 50), SimTime(60));
        assert!(r.accepted);
        assert_eq!(r.dropped[0].bundle_id, 2);
        let ids: Vec<u64> = n.buffer().iter().map(|q| q.bundle.id).collect();
        assert_eq!(ids, vec![1, 3]);
    }

    #[test]
    fn drop_expired_first() {
        let mut n = BpaNode::new(1, 100, DropPolicy::DropExpiredFirst);
        n.enqueue(b(1, 0, 10, 50), SimTime(0));
        n.enqueue(b(2, 0, 1_000, 50), SimTime(0));
        let r = n.enqueue(b(3, 20, 1_000, 50), SimTime(20));
        assert!(r.accepted);
        assert_eq!(r.dropped[0].bundle_id, 1);
        assert_eq!(r.dropped[0].reason, DropReason::LifetimeExpired);
        let r = n.enqueue(b(4, 20, 1_000, 50), SimTime(20));
        assert!(!r.accepted);
    }

    #[test]
    fn lifetime_cap_pares_traffic() {
        let mut n = BpaNode::new(1, 1_000, DropPolicy::TailDrop).with_lifetime_cap(Some(100));
        n.enqueue(b(1, 0, 10_000, 10), SimTime(0));
        assert_eq!(n.buffer()[0].bundle.lifetime_override, Some(100));
        let d = n.purge_expired(SimTime(101));
        assert_eq!(d[0].reason, DropReason::TrafficPared);
    }
}
