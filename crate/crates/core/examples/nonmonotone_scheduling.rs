//! With a penalty that dips after 300 ms, the expected-loss scheduler sends
//! a slightly older sample instead of the freshest one.

use gospace::age_metrics::AgePenalty;
use gospace::delay_models::DiscreteTable;
use gospace::policies::{expected_loss_at_delivery, select_for_transmission, Sample, SchedulingPolicy, SchedulingRule};
use gospace::sim_core::SimTime;

fn main() {
    let penalty = AgePenalty::table(vec![(0.0, 10.0), (300.0, 10.0), (350.0, 0.1), (500.0, 0.1), (2000.0, 20.0)]).unwrap();
    let delay = DiscreteTable::new(vec![250, 300], vec![0.5, 0.5]).unwrap();
    let now = SimTime(5_000);
    let buffer: Vec<Sample> = [0u64, 80, 160, 900]
        .iter()
        .enumerate()
        .map(|(i, age)| Sample { id: i as u64, gen_time: SimTime(now.0 - age), value: 0.0, enqueue_time: now })
        .collect();

    for s in &buffer {
        let loss = expected_loss_at_delivery(s, now, &delay, &penalty).unwrap();
        println!("sample {} age {} ms: expected penalty {loss:.2}", s.id, s.age_at(now));
    }
    let smart = SchedulingPolicy::new(SchedulingRule::MinExpectedLoss { penalty, delay_model: delay }, 1);
    let pick = |p: &SchedulingPolicy| select_for_transmission(&buffer, p, now).unwrap()[0].id;
    println!("min expected loss sends sample {}", pick(&smart));
    println!("freshest first sends sample {}", pick(&SchedulingPolicy::freshest_first(1)));
}
