#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use skyglow_cli::{Overrides, RunConfig};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = RunConfig::parse(text, Path::new("."), &Overrides::default());
    }
});
