//! Earliest-arrival routing over a small contact plan.

use gospace::delay_models::{Contact, ContactPlan};
use gospace::dtn::cgr_route;
use gospace::sim_core::SimTime;

fn main() {
    let plan = ContactPlan::parse(
        "# from, to, start, end, rate, owlt\n\
         1, 3, 9000, 9500, 10, 1\n\
         1, 2, 1000, 2000, 10, 5\n\
         2, 3, 2500, 3000, 10, 5\n\
         2, 4, 2100, 2800, 10, 5\n\
         4, 3, 2700, 4000, 10, 5\n",
    )
    .unwrap();
    for (i, c) in plan.contacts().iter().enumerate() {
        println!("contact {i}: {} -> {} [{}, {}) owlt {}", c.from, c.to, c.start.0, c.end.0, c.owlt);
    }
    for size in [100u64, 5_500, 8_000] {
        match cgr_route(&plan, 1, 3, SimTime(0), size) {
            Ok(r) => println!(
                "{size} B: contacts {:?}, next hop {:?}, delivered at {} ms",
                r.contact_ids,
                r.next_hop(),
                r.earliest_delivery.0
            ),
            Err(e) => println!("{size} B: {e}"),
        }
    }
    let direct_only = ContactPlan::new(vec![Contact {
        from: 1,
        to: 3,
        start: SimTime(0),
        end: SimTime(10),
        rate: 1.0,
        owlt: 0,
    }])
    .unwrap();
    println!("too big for the window: {}", cgr_route(&direct_only, 1, 3, SimTime(0), 50).unwrap_err());
}
