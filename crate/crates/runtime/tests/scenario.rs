use std::path::Path;

use intent_core::geometry::{Goal, Vec3};
use intent_runtime::builtins;
use intent_runtime::scenario::{
    read_observations, write_observations, GazeCommand, Interpolation, Noise, Scenario, ScriptSegment, SCHEMA_VERSION,
};
use proptest::prelude::*;

fn committed_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios"))
}

#[test]
fn committed_files_match_builtins() {
    for name in builtins::NAMES {
        let file = Scenario::load(&committed_dir().join(format!("{name}.toml"))).unwrap();
        assert_eq!(file, builtins::by_name(name).unwrap(), "{name}.toml is stale; re-export with `intent scenarios --export`");
    }
}

#[test]
fn save_load_synthesize_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in builtins::NAMES {
        let original = builtins::by_name(name).unwrap();
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, original.to_toml()).unwrap();
        let loaded = Scenario::load(&path).unwrap();
        assert_eq!(loaded.synthesize().unwrap(), original.synthesize().unwrap(), "{name}");
    }
}

#[test]
fn fig7_right_turns_fully_away_and_back() {
    let sc = builtins::fig7_right();
    let obs = sc.synthesize().unwrap();
    let away = sc.labelled_span("away").unwrap();
    let goal_dirs: Vec<Vec3> = sc.goals.iter().map(|g| (g.position - sc.head).normalized().unwrap()).collect();
    let facing = |o: &intent_core::Observation| goal_dirs.iter().map(|d| d.dot(o.head.forward)).fold(f64::MIN, f64::max);
    let during: Vec<f64> = obs.iter().filter(|o| o.t > away.start && o.t <= away.end).map(facing).collect();
    assert!(!during.is_empty());
    assert!(during.iter().all(|c| *c < 0.0), "gaze should point away from every goal while away");
    assert!(facing(obs.last().unwrap()) > 0.99, "gaze should end on the sphere");
}

#[test]
fn observation_stream_file_round_trip() {
    let obs = builtins::fig7_middle().synthesize().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stream.jsonl");
    write_observations(&obs, std::fs::File::create(&path).unwrap()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["t", "head_pos", "head_dir", "hand_pos"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_eq!(read_observations(&text).unwrap(), obs);
}

#[test]
fn malformed_and_unknown_fields_are_rejected() {
    let mut text = builtins::fig7_left().to_toml();
    assert!(Scenario::from_toml(&text.replace("schema = 1", "schema = 2")).is_err());
    assert!(Scenario::from_toml("schema = 1\nname = 3").is_err());
    text.push_str("\nbogus = true\n");
    assert!(Scenario::from_toml(&text).is_err());
}

fn single(duration: f64, from: Vec3, to: Vec3, noise: Noise, seed: u64, interpolation: Interpolation) -> Scenario {
    Scenario {
        schema: SCHEMA_VERSION,
        name: "prop".into(),
        description: String::new(),
        rate: 30.0,
        seed,
        noise,
        head: Vec3::new(0.0, 0.0, 1.2),
        start_hand: from,
        start_gaze: GazeCommand::Direction(Vec3::X),
        goals: vec![Goal::new("a", "a", Vec3::new(1.0, 0.0, 0.8))],
        segments: vec![ScriptSegment {
            duration,
            hand_to: to,
            via: None,
            gaze: GazeCommand::YawSweep(90.0),
            interpolation,
            target: None,
            label: None,
        }],
    }
}

fn point() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.5..1.5f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_speed_never_exceeds_segment_speed(from in point(), to in point(), samples in 6..90usize) {
        // segment ends snap to whole samples, so use sample-aligned durations
        let duration = samples as f64 / 30.0;
        let sc = single(duration, from, to, Noise::default(), 0, Interpolation::Linear);
        let obs = sc.synthesize().unwrap();
        let bound = from.distance(to) / duration / sc.rate;
        let mut prev = from;
        for o in &obs {
            prop_assert!(o.hand.distance(prev) <= bound * (1.0 + 1e-9) + 1e-12);
            prev = o.hand;
        }
        prop_assert!(obs.last().unwrap().hand.distance(to) < 1e-12);
    }

    #[test]
    fn noise_adds_bounded_step_error(from in point(), to in point(), sigma in 0.001..0.02f64, seed in any::<u64>()) {
        let clean = single(10.0, from, to, Noise::default(), seed, Interpolation::Linear).synthesize().unwrap();
        let noisy = single(10.0, from, to, Noise { hand: sigma, gaze: 0.0 }, seed, Interpolation::Linear).synthesize().unwrap();
        // a step error is the difference of two independent per-axis draws
        let limit = 3.0 * sigma * 2f64.sqrt();
        let mut exceed = 0;
        let mut total = 0;
        for (c, n) in clean.windows(2).zip(noisy.windows(2)) {
            let err = (n[1].hand - n[0].hand) - (c[1].hand - c[0].hand);
            for e in [err.x, err.y, err.z] {
                total += 1;
                if e.abs() > limit {
                    exceed += 1;
                }
            }
        }
        prop_assert!(exceed * 50 <= total, "{exceed}/{total} step errors above 3 sigma");
    }

    #[test]
    fn toml_round_trip_preserves_stream(from in point(), to in point(), duration in 0.1..2.0f64, seed in any::<u64>(),
                                        hand in 0.0..0.01f64, gaze in 0.0..0.1f64, min_jerk in any::<bool>()) {
        let interpolation = if min_jerk { Interpolation::MinJerk } else { Interpolation::Linear };
        let sc = single(duration, from, to, Noise { hand, gaze }, seed, interpolation);
        let back = Scenario::from_toml(&sc.to_toml()).unwrap();
        prop_assert_eq!(&back, &sc);
        prop_assert_eq!(back.synthesize().unwrap(), sc.synthesize().unwrap());
    }

    #[test]
    fn sample_spacing_is_one_over_rate(duration in 0.1..5.0f64) {
        let sc = single(duration, Vec3::new(0.2, 0.0, 0.9), Vec3::new(0.6, 0.2, 0.9), Noise::default(), 1, Interpolation::MinJerk);
        let obs = sc.synthesize().unwrap();
        prop_assert_eq!(obs.len(), sc.sample_count());
        for (k, o) in obs.iter().enumerate() {
            prop_assert!((o.t - (k + 1) as f64 / sc.rate).abs() < 1e-12);
        }
    }
}
