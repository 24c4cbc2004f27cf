#![no_main]

use focalframes::poly::MultiPoly;
use focalframes::scalar::Rational;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = MultiPoly::<Rational>::from_json(text) {
        let encoded = p.to_json();
        assert_eq!(MultiPoly::<Rational>::from_json(&encoded), Ok(p));
    }
});
