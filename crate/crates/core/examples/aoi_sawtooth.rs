//! Exact time-average age of a hand-made delivery sequence.

use gospace::age_metrics::AgeTracker;
use gospace::sim_core::SimTime;

fn main() {
    // (generated, delivered) in ms; the third update is older than the second
    // and does not lower the age.
    let updates = [(0, 400), (1000, 1300), (900, 1600), (2500, 2600)];
    let mut tracker = AgeTracker::new(0);
    for (gen, del) in updates {
        tracker.record_delivery(SimTime(gen), SimTime(del)).unwrap();
    }
    let horizon = SimTime(4000);
    println!("t_ms,age_ms");
    for t in (0..=horizon.0).step_by(250) {
        println!("{t},{}", tracker.age_at(SimTime(t)));
    }
    println!("integrated age: {} ms^2", tracker.integrated_age(horizon));
    println!("time-average age: {:.1} ms", tracker.time_average_age(horizon));
}
