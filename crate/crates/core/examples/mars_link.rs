//! Earth-Mars delay over one synodic period and the contact plan it implies
//! when the link is down within 3 degrees of the Sun.

use gospace::delay_models::{
    plan_from_orbits, rtt_envelope, synodic_period_days, Body, OrbitalLink, MS_PER_DAY,
};
use gospace::sim_core::SimTime;

fn main() {
    let link = OrbitalLink::earth_mars(3.0);
    let days = synodic_period_days(&Body::EARTH, &Body::MARS);
    let horizon = SimTime((days * MS_PER_DAY) as u64);
    let env = rtt_envelope(&link, horizon, 6 * 3_600_000);
    let min = |ms: f64| ms / 60_000.0;
    println!("synodic period: {days:.1} days");
    println!("round trip: {:.2} to {:.2} min", min(env.min_rtt_ms as f64), min(env.max_rtt_ms as f64));
    println!("mean one-way: {:.2} min", min(env.mean_one_way_ms));

    let plan = plan_from_orbits(&link, 1, 2, horizon, 3_600_000, 500.0).unwrap();
    for (i, c) in plan.contacts().iter().enumerate() {
        println!(
            "contact {i}: day {:.1} to {:.1}, owlt at midpoint {:.1} min",
            c.start.0 as f64 / MS_PER_DAY,
            c.end.0 as f64 / MS_PER_DAY,
            min(c.owlt as f64)
        );
    }
    for w in plan.contacts().windows(2) {
        println!("outage: {:.1} days", (w[1].start.0 - w[0].end.0) as f64 / MS_PER_DAY);
    }
}
