//! A relay offered twice what its next contact can carry, under each drop policy.

use gospace::dtn::{relay_overflow, DropPolicy, DropReason, RelayOverflowConfig};

fn main() {
    for policy in [DropPolicy::TailDrop, DropPolicy::DropStalest, DropPolicy::DropExpiredFirst] {
        let cfg = RelayOverflowConfig { drop_policy: policy, ..Default::default() };
        let out = relay_overflow(&cfg, 1).unwrap();
        let log = &out.forwards[0];
        println!("{policy:?}");
        println!(
            "  queued {} B, forwarded {} B, overflow {} B (contact volume {} B)",
            log.queued_bytes,
            log.forwarded_bytes,
            log.overflow_bytes,
            cfg.contact_volume()
        );
        println!(
            "  delivered {} with mean age {:.0} ms",
            out.deliveries.len(),
            out.mean_delivery_age_ms().unwrap_or(0.0)
        );
        for reason in DropReason::ALL {
            println!("  dropped ({reason}): {}", out.drop_count(reason));
        }
        assert!(out.is_conserved());
    }
}
