use std::collections::HashMap;
use std::sync::Arc;

use scogen_core::backend::{Backend, BackendConfig, BackendError, GenerationRequest, MockBackend, MockFallback, ScriptedBackend};
use scogen_core::extraction::{canonicalize, NodeKind};
use scogen_core::jsonl::read_jsonl;
use scogen_core::sampling::{Feature, FeatureElement, FeatureSet, SamplerSnapshot};
use scogen_core::synthesis::{
    answer_all, count_feature_blocks, export_sft, generate_answer, render_synthesis_prompt, synthesize_problem,
    ExportOptions, RecordStatus, Role, SftPair,
};

fn el(kind: NodeKind, name: &str, usage: &str) -> FeatureElement {
    FeatureElement { node: canonicalize(name, kind).unwrap(), name: name.into(), usage: usage.into() }
}

fn feature(i: usize, with_skill: bool) -> Feature {
    Feature {
        knowledge: el(NodeKind::Knowledge, &format!("Knowledge {i}"), &format!("knowledge usage {i}")),
        skill: with_skill.then(|| el(NodeKind::Skill, &format!("Skill {i}"), &format!("skill usage {i}"))),
        coding_skill: el(NodeKind::Coding, &format!("Coding {i}"), &format!("coding usage {i}")),
        provenance: Vec::new(),
    }
}

fn set(id: &str, features: Vec<Feature>) -> FeatureSet {
    FeatureSet {
        id: id.into(),
        scenario: canonicalize("Log Analytics", NodeKind::Scenario).unwrap(),
        scenario_name: "Log Analytics".into(),
        config: SamplerSnapshot {
            strategy: "random".into(),
            temperature: 2.0,
            complexity: features.len(),
            seed: 7,
            task: 0,
        },
        features,
        produced_by: "random".into(),
    }
}

fn cfg() -> BackendConfig {
    BackendConfig::default()
}

#[test]
fn prompt_has_one_block_per_feature() {
    for c in 1..=3 {
        let fs = set("fs-000001", (0..c).map(|i| feature(i, i != 1)).collect());
        let prompt = render_synthesis_prompt(&fs);
        assert_eq!(count_feature_blocks(&prompt), c);
        assert_eq!(prompt, render_synthesis_prompt(&fs));
        assert!(prompt.contains("Do not generate any bonus or optional challenges"));
        assert!(!prompt.contains("Log Analytics"));
    }
    let fs = set("fs-000001", vec![feature(0, true), feature(1, false)]);
    let prompt = render_synthesis_prompt(&fs);
    assert!(prompt.contains("Feature 1:\nDomain Knowledge: Knowledge 0: knowledge usage 0\nDomain Skill: Skill 0: skill usage 0\nCoding Skill: Coding 0: coding usage 0"));
    assert!(prompt.contains("Feature 2:\nDomain Knowledge: Knowledge 1: knowledge usage 1\nDomain Skill: NA\n"));
}

#[test]
fn problem_excludes_thought_process() {
    let reply = include_str!("fixtures/synthesis_c1_reply.txt");
    let fs = set(
        "fs-000000",
        vec![Feature {
            knowledge: el(NodeKind::Knowledge, "Assembly binding", "runtime resolution of referenced DLL versions"),
            skill: Some(el(NodeKind::Skill, "Binding log analysis", "read fusion logs to find the failing assembly")),
            coding_skill: el(NodeKind::Coding, "pandas groupby", "aggregate failures per assembly"),
            provenance: Vec::new(),
        }],
    );
    let prompt = render_synthesis_prompt(&fs);
    let hash = GenerationRequest::user(&cfg(), prompt).prompt_hash();
    let backend = MockBackend::new(HashMap::from([(hash, reply.to_string())]), MockFallback::Error);
    let rec = synthesize_problem(&fs, &backend, &cfg());
    assert_eq!(rec.status, RecordStatus::ProblemReady);
    assert!(rec.delimiter_found);
    assert!(rec.problem_text.starts_with("You are working on a large enterprise"));
    assert!(rec.problem_text.contains("**Dataset Schema:**"));
    assert!(!rec.problem_text.contains("Thought Process"));
    assert_eq!(rec.raw_reply, reply);
    assert_eq!(rec.features.features.len(), 1);
}

#[test]
fn missing_delimiter_keeps_whole_reply() {
    let backend = ScriptedBackend::replies(["Build a CSV parser that tolerates ragged rows."]);
    let rec = synthesize_problem(&set("fs-000002", vec![feature(0, true)]), &backend, &cfg());
    assert!(!rec.delimiter_found);
    assert_eq!(rec.problem_text, "Build a CSV parser that tolerates ragged rows.");
    assert_eq!(rec.status, RecordStatus::ProblemReady);
}

#[test]
fn backend_failure_marks_record_failed() {
    let backend = ScriptedBackend::new([Err(BackendError::Transport("connection reset".into()))]);
    let rec = synthesize_problem(&set("fs-000003", vec![feature(0, true)]), &backend, &cfg());
    assert_eq!(rec.status, RecordStatus::Failed);
    assert!(rec.error.as_deref().unwrap().contains("connection reset"));
    assert!(generate_answer(&rec, &backend, &cfg()).is_err());
}

#[test]
fn answers_are_stored_verbatim_and_aligned() {
    let mock: Arc<dyn Backend> = Arc::new(MockBackend::new(HashMap::new(), MockFallback::Synthetic));
    let sets: Vec<_> = (0..10).map(|i| set(&format!("fs-{i:06}"), vec![feature(i, true)])).collect();
    let recs: Vec<_> = sets.iter().map(|fs| synthesize_problem(fs, mock.as_ref(), &cfg())).collect();
    let answered = answer_all(&recs, mock.as_ref(), &cfg());
    assert_eq!(answered.len(), 10);
    for (i, rec) in answered.iter().enumerate() {
        assert_eq!(rec.id, format!("fs-{i:06}"));
        assert_eq!(rec.status, RecordStatus::Complete);
        let direct = mock.complete(&GenerationRequest::user(&cfg(), rec.problem_text.clone())).unwrap();
        assert_eq!(rec.answer_text, direct.text);
    }
}

#[test]
fn export_skips_incomplete_records_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockBackend::new(HashMap::new(), MockFallback::Synthetic);
    let mut recs: Vec<_> = (0..4)
        .map(|i| {
            let rec = synthesize_problem(&set(&format!("fs-{i:06}"), vec![feature(i, true)]), &mock, &cfg());
            generate_answer(&rec, &mock, &cfg()).unwrap()
        })
        .collect();
    recs[2].status = RecordStatus::Failed;

    let empty = dir.path().join("empty.jsonl");
    assert_eq!(export_sft(&[], &empty, ExportOptions::default()).unwrap(), 0);
    assert_eq!(std::fs::read(&empty).unwrap().len(), 0);

    let path = dir.path().join("sft.jsonl");
    assert_eq!(export_sft(&recs, &path, ExportOptions::default()).unwrap(), 3);
    let pairs: Vec<SftPair> = read_jsonl(&path).unwrap();
    assert_eq!(pairs.len(), 3);
    let expected: Vec<_> = recs.iter().filter(|r| r.status == RecordStatus::Complete).map(SftPair::from_record).collect();
    assert_eq!(pairs, expected);
    for pair in &pairs {
        assert!(pair.is_well_formed());
        assert_eq!(pair.messages[0].role, Role::User);
    }
    let line = std::fs::read_to_string(&path).unwrap();
    assert!(line.starts_with("{\"messages\":[{\"role\":\"user\",\"content\":"));
}

#[test]
fn optional_problem_dedup() {
    let dir = tempfile::tempdir().unwrap();
    let backend = ScriptedBackend::replies(["Real World Coding Problem:\nSame task.", "Answer."]);
    let rec = synthesize_problem(&set("fs-000000", vec![feature(0, true)]), &backend, &cfg());
    let rec = generate_answer(&rec, &backend, &cfg()).unwrap();
    let mut twin = rec.clone();
    twin.id = "fs-000001".into();
    let path = dir.path().join("sft.jsonl");
    let recs = [rec, twin];
    assert_eq!(export_sft(&recs, &path, ExportOptions::default()).unwrap(), 2);
    assert_eq!(export_sft(&recs, &path, ExportOptions { dedup_problems: true }).unwrap(), 1);
}
