#![no_main]

use libfuzzer_sys::fuzz_target;
use skyglow::validation::{read_oof_csv, write_oof_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(oof) = read_oof_csv(data) {
        let mut buf = Vec::new();
        write_oof_csv(&oof, &mut buf).unwrap();
        assert_eq!(read_oof_csv(buf.as_slice()).unwrap(), oof);
    }
});
