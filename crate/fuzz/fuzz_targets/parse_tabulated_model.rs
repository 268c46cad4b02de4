#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(entry) = infogeo_cli::models::parse_tabulated(text) {
        for xi in &entry.default_points {
            let _ = infogeo_core::fisher::fisher_matrix(&entry.model, xi);
        }
    }
});
