#![no_main]

use libfuzzer_sys::fuzz_target;
use skyglow::learners::Model;
use skyglow::validation::TrainedPipeline;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = serde_json::from_slice::<Model>(data) {
        let text = serde_json::to_string(&model).unwrap();
        let _: Model = serde_json::from_str(&text).unwrap();
    }
    let _ = serde_json::from_slice::<TrainedPipeline>(data);
});
