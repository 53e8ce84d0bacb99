#![no_main]

use axv_explain::sim::{parse_log, write_log};
use axv_explain::MissionState;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(events) = parse_log(data) {
        assert_eq!(parse_log(&write_log(&events)).expect("written log must parse"), events);
        let mut state = MissionState::new(0.0);
        for e in events {
            let _ = state.ingest(e);
        }
    }
});
