#![no_main]

use axv_explain::model::serialize_condition;
use axv_explain::parse_condition;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(c) = parse_condition(data) {
        let again = parse_condition(&serialize_condition(&c)).expect("serialized condition must parse");
        assert_eq!(again, c);
        let _ = axv_explain::MissionState::new(0.0).eval(&c);
    }
});
