#![no_main]

use axv_explain::sim::{gen_demo_mission, interleave, parse_questions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(qs) = parse_questions(data) {
        let steps = interleave(&gen_demo_mission(), &qs);
        assert!(steps.windows(2).all(|w| w[0].t() <= w[1].t()));
    }
});
