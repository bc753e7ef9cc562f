#![no_main]

use libfuzzer_sys::fuzz_target;
use otto_cli::parse_results;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_results(text) else { return };
    let again = parse_results(&serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    assert_eq!(again, doc);
});
