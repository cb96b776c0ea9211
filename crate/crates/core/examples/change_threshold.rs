//! Sampling a Wiener process when it has moved by beta, against a periodic
//! sampler with the same long-run rate.

use gospace::delay_models::{DelayDistribution, DelayProcess};
use gospace::policies::{run_sampling, tune_beta, SamplingPolicy, SamplingScenario, SourceProcess};

fn main() {
    let base = SamplingScenario::new(
        SourceProcess::wiener(1.0),
        SamplingPolicy::ZeroWait,
        DelayProcess::IidRandom { distribution: DelayDistribution::Exponential { mean: 2000.0 } },
        2_000_000,
    );
    let tuned = tune_beta(&base, &[0.5, 1.0, 1.5, 2.0, 3.0], 1).unwrap();
    println!("beta,loss,samples_per_s,avg_age_ms");
    for (beta, o) in &tuned.table {
        println!("{beta},{:.3},{:.3},{:.0}", o.eq1_loss, o.sample_rate_per_s(), o.time_average_age_ms);
    }
    let best = tuned.best();
    let periodic = SamplingScenario {
        policy: SamplingPolicy::Periodic { period_ms: best.matched_period_ms() },
        ..base
    };
    let p = run_sampling(&periodic, 1).unwrap();
    println!(
        "best beta {} loss {:.3}; periodic every {} ms loss {:.3}",
        tuned.best_beta,
        best.eq1_loss,
        best.matched_period_ms(),
        p.eq1_loss
    );
}
