//! Byte-level checks against files under `tests/golden/`.

use motion_icl::data::{load_samples, CollectionRole};
use motion_icl::fixtures;
use motion_icl::metrics::sample_distance;
use motion_icl::prompt::{build_practice_script, templates, ScriptLayout, TurnTag};
use motion_icl::BodyPart;

const SETUP: &str = include_str!("golden/setup.txt");
const PRACTICE_QUESTION: &str = include_str!("golden/practice_question.txt");
const ANSWER_KEY: &str = include_str!("golden/answer_key.txt");
const PREDICTION_COMMAND: &str = include_str!("golden/prediction_command.txt");

#[test]
fn template_constants_match_golden_files() {
    assert_eq!(templates::SETUP, SETUP);
    assert_eq!(templates::PRACTICE_QUESTION, PRACTICE_QUESTION);
    assert_eq!(templates::ANSWER_KEY, ANSWER_KEY);
    assert_eq!(templates::PREDICTION_COMMAND, PREDICTION_COMMAND);
}

fn around<'a>(template: &'a str, slot: &str) -> (&'a str, &'a str) {
    template.split_once(slot).expect("golden template has its slot")
}

#[test]
fn generated_script_carries_templates_verbatim() {
    let sk = fixtures::h36m_skeleton();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic");
    let base = load_samples(
        format!("{dir}/base.jsonl"),
        &sk,
        50,
        25,
        CollectionRole::BaseTrainingSet,
    )
    .unwrap();
    let support = load_samples(
        format!("{dir}/support/walking.jsonl"),
        &sk,
        50,
        25,
        CollectionRole::SupportSet,
    )
    .unwrap();
    let test = load_samples(
        format!("{dir}/test/walking.jsonl"),
        &sk,
        50,
        25,
        CollectionRole::TestSet,
    )
    .unwrap();
    let layout = ScriptLayout {
        p: 10,
        n: 5,
        l_frames: 50,
        j_frames: 25,
        precision: 1,
        stride: 2,
    };
    let script = build_practice_script(
        &base.samples()[..10],
        support.samples(),
        &test.samples()[0].observed,
        &sk,
        &layout,
    )
    .unwrap();

    assert_eq!(script.turns[0].text, SETUP);
    let (q_pre, q_post) = around(PRACTICE_QUESTION, "[observed]");
    let (a_pre, a_post) = around(ANSWER_KEY, "[future]");
    for t in &script.turns[1..31] {
        match t.tag {
            TurnTag::PracticeQuestion => assert!(t.text.starts_with(q_pre) && t.text.ends_with(q_post)),
            TurnTag::PracticeAnswerKey => assert!(t.text.starts_with(a_pre) && t.text.ends_with(a_post)),
            other => panic!("unexpected {other}"),
        }
    }
    // 50 observed frames at stride 2 show 25 of them.
    let command = PREDICTION_COMMAND.replace("[L]", "25").replace("[J]", "25");
    assert!(script.prediction_query().text.ends_with(&format!("\n\n{command}")));
}

/// Distances between the first three shipped base samples, computed with
/// numpy straight from the JSON files.
#[test]
fn distances_match_independent_computation() {
    let sk = fixtures::h36m_skeleton();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic");
    let base = load_samples(
        format!("{dir}/base.jsonl"),
        &sk,
        50,
        25,
        CollectionRole::BaseTrainingSet,
    )
    .unwrap();
    let golden: serde_json::Value = serde_json::from_str(include_str!("golden/base_distances.json")).unwrap();
    let pairs = golden["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    for pair in pairs {
        let a = base.get(pair["a"].as_str().unwrap()).unwrap();
        let b = base.get(pair["b"].as_str().unwrap()).unwrap();
        let d = sample_distance(a, b, &sk).unwrap();
        let close = |x: f64, y: &serde_json::Value| (x - y.as_f64().unwrap()).abs() <= 1e-9 * x.max(1.0);
        assert!(close(d.global, &pair["global"]));
        assert!(close(d.combined, &pair["combined"]));
        for part in BodyPart::ALL {
            assert!(close(d.per_part[&part], &pair["per_part"][part.name()]), "{part:?}");
        }
    }
}
