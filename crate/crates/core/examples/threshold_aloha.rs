//! Plain versus threshold slotted ALOHA, each tuned over a small grid.

use gospace::random_access::{aloha_success_probability, tune_ra, RaVariant};

fn main() {
    let n = 20;
    let slots = 200_000;
    let nf = n as f64;
    let plain = tune_ra(n, RaVariant::Plain, &[0.5 / nf, 1.0 / nf, 1.5 / nf], &[0], slots, 1).unwrap();
    let p_grid: Vec<f64> = [1.5, 2.0, 2.5, 3.0].iter().map(|k| k / nf).collect();
    let gammas: Vec<u64> = [1.5, 2.0, 2.5].iter().map(|k| (k * nf) as u64).collect();
    let thr = tune_ra(n, RaVariant::Threshold, &p_grid, &gammas, slots, 1).unwrap();

    println!("variant,p,gamma,average_aoi_slots,throughput");
    for (cfg, aoi, tp) in plain.table.iter().chain(&thr.table) {
        println!("{},{:.4},{},{aoi:.2},{tp:.4}", if cfg.gamma == 0 { "plain" } else { "threshold" }, cfg.p, cfg.gamma);
    }
    println!(
        "best plain {:.2} slots, best threshold {:.2} slots ({:.0}% lower)",
        plain.best_aoi,
        thr.best_aoi,
        100.0 * (1.0 - thr.best_aoi / plain.best_aoi)
    );
    println!("analytic plain throughput at p=1/n: {:.4}", aloha_success_probability(n, 1.0 / nf));
}
