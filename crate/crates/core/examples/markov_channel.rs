//! A two-state channel: delays come in bursts while the chain sits in Bad.

use gospace::delay_models::{ge_stationary_good, ChannelState, DelayDistribution, DelayProcess};
use gospace::sim_core::{streams, RngStream, SimTime};

fn main() {
    let (p_gb, q_bg) = (0.02, 0.1);
    let mut ch = DelayProcess::MarkovModulated {
        p_gb,
        q_bg,
        good_dist: DelayDistribution::Constant { d: 200 },
        bad_dist: DelayDistribution::Exponential { mean: 2_000.0 },
        state: ChannelState::Good,
    };
    let mut rng = RngStream::new(42, streams::DELAY);
    let mut good = 0;
    let steps = 100_000;
    let mut line = String::new();
    for i in 0..steps {
        let d = ch.sample_delay(SimTime(i), &mut rng).unwrap();
        let state = ch.channel_state().unwrap();
        good += usize::from(state == ChannelState::Good);
        if i < 320 {
            line.push(if state == ChannelState::Good { '.' } else { '#' });
        }
        if i < 5 {
            println!("draw {i}: {d} ms ({state:?})");
        }
    }
    println!("first 320 states:");
    for row in line.as_bytes().chunks(80) {
        println!("  {}", String::from_utf8_lossy(row));
    }
    println!(
        "good fraction {:.4}, stationary {:.4}",
        good as f64 / steps as f64,
        ge_stationary_good(p_gb, q_bg).unwrap()
    );
}
