//! Bundle header encode/decode round trip.

use gospace::dtn::{decode_bundle, encode_bundle, Bundle};
use gospace::sim_core::SimTime;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(" ")
}

fn main() {
    let payload = b"rover telemetry";
    let mut b = Bundle::new(7, 10, 30, SimTime(1_700_000), 3_600_000, payload.len() as u32);
    b.age_block = 4_210;
    let wire = encode_bundle(&b, payload).unwrap();
    println!("plain header: {}", hex(&wire[..wire.len() - payload.len()]));

    b.lifetime_override = Some(600_000);
    let wire = encode_bundle(&b, payload).unwrap();
    println!("with override: {}", hex(&wire[..wire.len() - payload.len()]));
    let (back, body) = decode_bundle(&wire).unwrap();
    println!("decoded: {back:?}");
    println!("payload: {}", String::from_utf8_lossy(&body));

    let mut corrupt = wire.clone();
    corrupt[0] = 0;
    println!("corrupted magic: {}", decode_bundle(&corrupt).unwrap_err());
    println!("truncated: {}", decode_bundle(&wire[..10]).unwrap_err());
}
