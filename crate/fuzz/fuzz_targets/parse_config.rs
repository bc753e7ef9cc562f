#![no_main]

use clap::ValueEnum;
use libfuzzer_sys::fuzz_target;
use otto_cli::{parse_config, validate, Mode};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = parse_config(text) else { return };
    let again = parse_config(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(again, cfg);
    for &mode in Mode::value_variants() {
        let _ = validate(mode, cfg.clone(), None);
    }
});
