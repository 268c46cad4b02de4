#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(spec) = infogeo_cli::spec::parse(text) {
        let echoed = serde_json::to_string(&spec).unwrap();
        assert!(infogeo_cli::spec::parse(&echoed).is_ok());
    }
});
