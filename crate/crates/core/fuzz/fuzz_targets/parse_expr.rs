#![no_main]

use focalframes::parser::parse_expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let params = vec!["u".to_string(), "v".to_string()];
    if let Ok(expr) = parse_expr(text, &params) {
        // rendered output must parse back to the same tree
        let rendered = expr.render(&params);
        assert_eq!(parse_expr(&rendered, &params).as_ref(), Ok(&expr), "{rendered}");
        let _ = expr.eval(&[0.3f64, -0.7]);
    }
});
