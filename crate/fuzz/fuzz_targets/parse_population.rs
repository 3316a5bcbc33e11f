#![no_main]

use libfuzzer_sys::fuzz_target;
use skyglow::dataset::{parse_population, write_population};

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = parse_population(data) {
        let mut buf = Vec::new();
        write_population(&table, &mut buf).unwrap();
        assert_eq!(parse_population(buf.as_slice()).unwrap(), table);
    }
});
