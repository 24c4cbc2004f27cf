#![no_main]

use focalframes::immersion::{extract_frames, parse_immersion};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_immersion(text) {
        let _ = extract_frames(&spec, &spec.center());
    }
});
