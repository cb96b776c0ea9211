//! A harvesting sender whose age threshold depends on its battery level.

use gospace::delay_models::DelayProcess;
use gospace::policies::{
    energy_threshold, run_sampling, validate_energy_table, Battery, EnergyThreshold, SamplingPolicy,
    SamplingScenario, SourceProcess,
};

fn main() {
    let table: Vec<EnergyThreshold> = vec![(0.0, 20_000).into(), (2.0, 8_000).into(), (5.0, 2_000).into()];
    validate_energy_table(&table).unwrap();
    for level in [0.5, 3.0, 9.0] {
        println!("battery {level} J -> wait for age {} ms", energy_threshold(&table, level));
    }
    // a fuller battery must never mean a longer wait
    let bad: Vec<EnergyThreshold> = vec![(0.0, 10_000).into(), (5.0, 20_000).into()];
    println!("rejected table: {}", validate_energy_table(&bad).unwrap_err());

    for harvest in [0.05, 0.2, 1.0] {
        let mut sc = SamplingScenario::new(
            SourceProcess::wiener(1.0),
            SamplingPolicy::EnergyAwareAgeThreshold { table: table.clone() },
            DelayProcess::Constant { d: 300 },
            600_000,
        );
        sc.tick_ms = 10;
        sc.battery = Some(Battery { level: 5.0, capacity: 10.0, harvest_rate: harvest, tx_cost: 1.0 });
        let o = run_sampling(&sc, 3).unwrap();
        println!(
            "harvest {harvest} W: {} samples, avg age {:.0} ms, energy {:.1} J, min battery {:.2} J",
            o.samples_generated,
            o.time_average_age_ms,
            o.energy_consumed_j,
            o.min_battery_level.unwrap_or(0.0)
        );
    }
}
