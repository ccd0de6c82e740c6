#![no_main]

use iago::bench::parse_trace_line;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 20 {
        return;
    }
    let Ok(line) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_trace_line(line);
});
