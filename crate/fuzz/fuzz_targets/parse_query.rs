#![no_main]

use std::sync::OnceLock;

use axv_explain::model::DEMO_MODEL_SOURCE;
use axv_explain::{parse_model, parse_query, AnswerPolicy, AutonomyModel, MissionSession};
use libfuzzer_sys::fuzz_target;

fn model() -> &'static AutonomyModel {
    static MODEL: OnceLock<AutonomyModel> = OnceLock::new();
    MODEL.get_or_init(|| parse_model(DEMO_MODEL_SOURCE).unwrap())
}

fuzz_target!(|data: &str| {
    let intent = parse_query(data, model());
    if let Some(b) = intent.behavior() {
        assert!(model().behavior(b).is_some());
    }
    let session = MissionSession::with_model(model().clone(), AnswerPolicy::complete(), true).unwrap();
    let _ = session.answer(data);
});
