#![no_main]

use axv_explain::{parse_model, serialize_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(model) = parse_model(data) {
        let text = serialize_model(&model);
        let again = parse_model(&text).expect("serialized model must parse");
        assert_eq!(again, model);
        let _ = axv_explain::validate_model(&model);
    }
});
