//! Config parser: arbitrary text must either parse or return a structured
//! error, and anything accepted must survive the echo round trip losslessly.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ipm::io::parse_config(text) else { return };
    let echo = ipm::io::echo_config(&cfg);
    let back = ipm::io::parse_config(&echo).expect("echoed config must re-parse");
    assert_eq!(back, cfg, "echo round trip must be lossless");
});
