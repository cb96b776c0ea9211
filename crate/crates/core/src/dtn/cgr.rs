//! Contact graph routing.
//!
//! A route is a chain of contacts `c1..cn` with `c1.from = src`, `cn.to = dst`
//! and `c[i].to = c[i+1].from`. A bundle ready at node time `r` departs on a
//! contact at `max(r, start)`, needs `ceil(size / rate)` ms on the link and
//! must finish before the contact ends; it arrives one light time later.
//!
//! The chosen route minimises arrival time, then hop count, then compares
//! contact ids (plan indices) lexicographically.

use crate::delay_models::{Contact, ContactPlan};
use crate::sim_core::SimTime;

use super::{DtnError, Eid};

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub contact_ids: Vec<usize>,
    pub hops: Vec<Contact>,
    pub earliest_delivery: SimTime,
}

impl Route {
    pub fn next_hop(&self) -> Option<Eid> {
        self.hops.first().map(|c| c.to)
    }
}

/// Arrival at `c.to` for a bundle ready at `c.from` at `ready`.
pub(crate) fn traverse(c: &Contact, ready: SimTime, size: u64) -> Option<SimTime> {
    let depart = ready.max(c.start);
    let done = depart + c.transmit_ms(size);
    (done <= c.end).then(|| done + c.owlt)
}

/// Earliest arrival at `dst` using at most `max_hops` contacts, for a bundle
/// ready at `from` at time `ready`.
pub fn earliest_arrival_within(
    plan: &ContactPlan,
    from: Eid,
    ready: SimTime,
    dst: Eid,
    size: u64,
    max_hops: usize,
) -> Option<SimTime> {
    let contacts = plan.contacts();
    let mut best: Vec<(Eid, SimTime)> = vec![(from, ready)];
    let lookup = |best: &[(Eid, SimTime)], n: Eid| best.iter().find(|(m, _)| *m == n).map(|(_, t)| *t);
    if from == dst {
        return Some(ready);
    }
    for _ in 0..max_hops {
        let mut next = best.clone();
        let mut changed = false;
        for c in contacts {
            let Some(r) = lookup(&best, c.from) else { continue };
            let Some(arr) = traverse(c, r, size) else { continue };
            match next.iter_mut().find(|(m, _)| *m == c.to) {
                Some((_, t)) if *t <= arr => {}
                Some((_, t)) => {
                    *t = arr;
                    changed = true;
                }
                None => {
                    next.push((c.to, arr));
                    changed = true;
                }
            }
        }
        best = next;
        if !changed {
            break;
        }
    }
    lookup(&best, dst)
}

pub fn cgr_route(
    plan: &ContactPlan,
    src: Eid,
    dst: Eid,
    t_now: SimTime,
    bundle_size: u64,
) -> Result<Route, DtnError> {
    let no_route = DtnError::NoRoute { src, dst };
    if src == dst {
        return Ok(Route {
            contact_ids: Vec::new(),
            hops: Vec::new(),
            earliest_delivery: t_now,
        });
    }
    let n = plan.len();
    let target = earliest_arrival_within(plan, src, t_now, dst, bundle_size, n).ok_or(no_route)?;
    let hops = (1..=n)
        .find(|&h| earliest_arrival_within(plan, src, t_now, dst, bundle_size, h) == Some(target))
        .expect("hop bound n reaches the unbounded optimum");

    let mut contact_ids = Vec::with_capacity(hops);
    let mut node = src;
    let mut ready = t_now;
    for remaining in (0..hops).rev() {
        let (id, arr) = plan
            .contacts()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.from == node)
            .filter_map(|(id, c)| traverse(c, ready, bundle_size).map(|arr| (id, arr)))
            .find(|&(id, arr)| {
                let to = plan.contacts()[id].to;
                earliest_arrival_within(plan, to, arr, dst, bundle_size, remaining) == Some(target)
            })
            .expect("an optimal continuation exists at every step");
        contact_ids.push(id);
        node = plan.contacts()[id].to;
        ready = arr;
    }
    Ok(Route {
        hops: contact_ids.iter().map(|&i| plan.contacts()[i]).collect(),
        contact_ids,
        earliest_delivery: target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(from: Eid, to: Eid, start: u64, end: u64, owlt: u64) -> Contact {
        Contact { from, to, start: SimTime(start), end: SimTime(end), rate: 1.0, owlt }
    }

    #[test]
    fn direct_contact() {
        let plan = ContactPlan::new(vec![c(1, 2, 100, 1_000, 50)]).unwrap();
        let r = cgr_route(&plan, 1, 2, SimTime(0), 10).unwrap();
        assert_eq!(r.contact_ids, vec![0]);
        assert_eq!(r.earliest_delivery, SimTime(100 + 10 + 50));
    }

    #[test]
    fn relay_beats_late_direct() {
        let plan = ContactPlan::new(vec![
            c(1, 3, 0, 100, 10),
            c(3, 2, 200, 300, 10),
            c(1, 2, 1_000, 2_000, 10),
        ])
        .unwrap();
        let r = cgr_route(&plan, 1, 2, SimTime(0), 10).unwrap();
        assert_eq!(r.contact_ids, vec![0, 1]);
        assert_eq!(r.earliest_delivery, SimTime(220));
        assert_eq!(r.next_hop(), Some(3));
    }

    #[test]
    fn fewer_hops_breaks_arrival_ties() {
        let plan = ContactPlan::new(vec![
            c(1, 3, 0, 100, 0),
            c(3, 2, 0, 100, 0),
            c(1, 2, 10, 100, 0),
        ])
        .unwrap();
        // Both reach node 2 at t = 20.
        let r = cgr_route(&plan, 1, 2, SimTime(0), 10).unwrap();
        assert_eq!(r.contact_ids, vec![2]);
        assert_eq!(r.earliest_delivery, SimTime(20));
    }

    #[test]
    fn contact_ids_break_remaining_ties() {
        let plan = ContactPlan::new(vec![
            c(1, 3, 0, 100, 0),
            c(1, 4, 0, 100, 0),
            c(4, 2, 0, 100, 0),
            c(3, 2, 0, 100, 0),
        ])
        .unwrap();
        let r = cgr_route(&plan, 1, 2, SimTime(0), 5).unwrap();
        assert_eq!(r.contact_ids, vec![0, 3]);
    }

    #[test]
    fn too_short_contact_is_unusable() {
        let plan = ContactPlan::new(vec![c(1, 2, 0, 9, 0)]).unwrap();
        assert!(cgr_route(&plan, 1, 2, SimTime(0), 9).is_ok());
        assert_eq!(
            cgr_route(&plan, 1, 2, SimTime(0), 10),
            Err(DtnError::NoRoute { src: 1, dst: 2 })
        );
        assert!(cgr_route(&plan, 1, 2, SimTime(1), 9).is_err());
    }

    #[test]
    fn source_is_destination() {
        let plan = ContactPlan::empty();
        let r = cgr_route(&plan, 4, 4, SimTime(7), 1).unwrap();
        assert!(r.hops.is_empty());
        assert_eq!(r.earliest_delivery, SimTime(7));
    }
}
