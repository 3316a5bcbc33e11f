#![no_main]

use libfuzzer_sys::fuzz_target;
use skyglow::ensemble::read_weights_csv;

fuzz_target!(|data: &[u8]| {
    let _ = read_weights_csv(data);
});
