#![no_main]

use libfuzzer_sys::fuzz_target;
use skyglow::dataset::{parse_observations, write_observations, Strictness};

fuzz_target!(|data: &[u8]| {
    let _ = parse_observations(data, Strictness::Strict);
    if let Ok(parsed) = parse_observations(data, Strictness::Lenient) {
        // Whatever lenient mode keeps must survive a strict re-read.
        let mut buf = Vec::new();
        write_observations(&parsed.table, &mut buf).unwrap();
        let again = parse_observations(buf.as_slice(), Strictness::Strict).unwrap();
        assert_eq!(again.table.len(), parsed.table.len());
    }
});
