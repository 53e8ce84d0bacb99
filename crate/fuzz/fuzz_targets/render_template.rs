#![no_main]

use axv_explain::model::TemplateText;
use axv_explain::nlg::render_template;
use axv_explain::{MissionEvent, MissionState};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let state = MissionState::new(0.0)
        .ingested(MissionEvent::new(10.0, "telemetry").with("depth", 3.5).with("mode", "survey"))
        .unwrap();
    let _ = render_template(data, &state);
    if let Ok(t) = TemplateText::parse(data) {
        assert_eq!(TemplateText::parse(&t.to_string()).unwrap(), t);
    }
});
