//! Snapshot decoder: arbitrary bytes must either decode or be rejected with
//! an offset, and anything accepted must re-encode to the identical bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(snap) = ipm::io::read_snapshot_bytes(data) else { return };
    let encoded = ipm::io::snapshot_bytes(&snap.field, snap.time);
    assert_eq!(encoded, data, "accepted snapshots re-encode bit-identically");
});
