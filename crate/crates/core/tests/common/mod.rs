//! Reference computations shared by the integration tests. None of these
//! call into the routines they check.

#![allow(dead_code)]

use gospace::delay_models::{Body, Contact};

/// Per-slot success probability of slotted ALOHA with `n` always-backlogged
/// nodes each sending with probability `p`.
pub fn aloha_success(n: usize, p: f64) -> f64 {
    n as f64 * p * (1.0 - p).powi(n as i32 - 1)
}

/// Earliest arrival at `dst` over every chain of distinct contacts, or `None`.
pub fn brute_force_arrival(contacts: &[Contact], src: u16, dst: u16, ready: u64, size: u64) -> Option<u64> {
    fn go(contacts: &[Contact], used: u32, node: u16, ready: u64, dst: u16, size: u64, best: &mut Option<u64>) {
        if node == dst {
            *best = Some(best.map_or(ready, |b| b.min(ready)));
            return;
        }
        for (i, c) in contacts.iter().enumerate() {
            if used & (1 << i) != 0 || c.from != node {
                continue;
            }
            let depart = ready.max(c.start.0);
            let tx = (size as f64 / c.rate).ceil() as u64;
            if depart + tx > c.end.0 {
                continue;
            }
            go(contacts, used | (1 << i), c.to, depart + tx + c.owlt, dst, size, best);
        }
    }
    let mut best = None;
    go(contacts, 0, src, ready, dst, size, &mut best);
    best
}

/// Linear interpolation between breakpoints, flat outside them.
pub fn interp(points: &[(f64, f64)], x: f64) -> f64 {
    if x <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    points[points.len() - 1].1
}

/// Heliocentric position in AU of a circular orbit after `t_ms`.
pub fn orbit_xy(b: &Body, t_ms: f64) -> (f64, f64) {
    let phase = b.initial_phase + 2.0 * std::f64::consts::PI * t_ms / (b.period * 86_400_000.0);
    (b.orbit_radius * phase.cos(), b.orbit_radius * phase.sin())
}

/// Distance between two bodies in light-minutes.
pub fn light_minutes(a: &Body, b: &Body, t_ms: f64) -> f64 {
    let (ax, ay) = orbit_xy(a, t_ms);
    let (bx, by) = orbit_xy(b, t_ms);
    let au = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
    au * 149_597_870_700.0 / 299_792_458.0 / 60.0
}

/// Sun-Earth-Mars angle in degrees.
pub fn elongation_deg(earth: &Body, mars: &Body, t_ms: f64) -> f64 {
    let (ex, ey) = orbit_xy(earth, t_ms);
    let (mx, my) = orbit_xy(mars, t_ms);
    let (sx, sy) = (-ex, -ey);
    let (dx, dy) = (mx - ex, my - ey);
    let cos = (sx * dx + sy * dy) / ((sx * sx + sy * sy).sqrt() * (dx * dx + dy * dy).sqrt());
    cos.clamp(-1.0, 1.0).acos().to_degrees()
}

pub fn synodic_days(a: &Body, b: &Body) -> f64 {
    (a.period * b.period) / (b.period - a.period).abs()
}

/// Sample autocorrelation at lag 1.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let cov = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>();
    cov / var
}
