use std::time::{Duration, Instant};

use axv_explain::sim::{gen_demo_mission, parse_log, replay, write_log, FnSink, Speed};
use axv_explain::{MissionEvent, MissionState};

fn run(events: &[MissionEvent], speed: Speed) -> (MissionState, Vec<Instant>) {
    let mut state = MissionState::new(0.0);
    let mut arrivals = Vec::new();
    let mut sink = FnSink(|e: &MissionEvent| {
        arrivals.push(Instant::now());
        state.ingest(e.clone())
    });
    replay(events, speed, &mut sink).unwrap();
    (state, arrivals)
}

#[test]
fn factor_ten_compresses_ten_seconds_to_one() {
    let events = [MissionEvent::new(0.0, "gps_fix"), MissionEvent::new(10.0, "surfaced")];
    let (_, arrivals) = run(&events, Speed::Factor(10.0));
    let gap = arrivals[1] - arrivals[0];
    assert!(
        gap >= Duration::from_millis(800) && gap <= Duration::from_millis(1200),
        "gap {gap:?}"
    );
}

#[test]
fn max_speed_is_fast() {
    let start = Instant::now();
    let (_, arrivals) = run(&gen_demo_mission(), Speed::Max);
    assert_eq!(arrivals.len(), 7);
    assert!(start.elapsed() < Duration::from_millis(100), "{:?}", start.elapsed());
}

#[test]
fn final_state_does_not_depend_on_speed() {
    let events = gen_demo_mission();
    let (fast, _) = run(&events, Speed::Max);
    // 1400 s of mission time at factor 20000 is 70 ms
    let (paced, _) = run(&events, Speed::Factor(20_000.0));
    assert_eq!(fast, paced);
    assert_eq!(fast.clock, 1400.0);
    assert!(fast.in_zone("no_surface"));
}

#[test]
fn demo_log_survives_the_file_format() {
    let dir = std::env::temp_dir().join(format!("axv-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("demo.jsonl");
    std::fs::write(&path, write_log(&gen_demo_mission())).unwrap();
    let loaded = axv_explain::sim::load_log(&path).unwrap();
    assert_eq!(loaded, gen_demo_mission());
    assert_eq!(parse_log(&write_log(&loaded)).unwrap(), loaded);
    std::fs::remove_dir_all(dir).unwrap();
}
