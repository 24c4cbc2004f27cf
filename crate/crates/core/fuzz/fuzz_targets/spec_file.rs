#![no_main]

use focalframes::cli::spec_file::parse_spec_file;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_spec_file("fuzz.json", data);
});
