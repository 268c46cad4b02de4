#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(report) = infogeo_cli::parse_report(text) {
        let again = infogeo_cli::parse_report(&serde_json::to_string(&report).unwrap()).unwrap();
        assert_eq!(report, again);
    }
});
