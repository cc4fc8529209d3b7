//! End-to-end runs through the public API only: JSON in, verdicts and a
//! patched JSON document out.

use leakfix_core::analysis::{analyze, validate, AnalysisOptions, ReleasePolicy};
use leakfix_core::ir::{parse_app, parse_resource_spec, serialize_app, Origin, Statement};
use leakfix_core::repair::{repair, RepairOptions};

const APP: &str = r#"{
  "app": "notes",
  "components": [
    {"name": "Editor", "lifecycle": "activity",
     "callbacks": {"onCreate": "onCreate", "onPause": "onPause"}}
  ],
  "procedures": [
    {"name": "onCreate", "entry": "b0", "blocks": [
      {"id": "b0", "statements": [
        {"op": "acquire", "api": "open", "target": "rec"},
        {"op": "use", "target": "rec"},
        {"op": "return"}]}]},
    {"name": "onPause", "entry": "b0", "blocks": [
      {"id": "b0", "statements": [{"op": "other"}, {"op": "return"}]}]}
  ]
}"#;

const SPEC: &str = r#"{
  "resource": "Recorder",
  "reentrant": false,
  "pairs": [["open", "close"]],
  "release_callbacks": ["onPause"]
}"#;

#[test]
fn detects_patches_and_revalidates_through_json() {
    let app = parse_app(APP).unwrap();
    let spec = parse_resource_spec(SPEC).unwrap();
    let opts = AnalysisOptions::default();

    let found = analyze(&app, &spec, &opts).unwrap();
    assert_eq!(found.reports.len(), 1);
    let report = &found.reports[0];
    assert_eq!(report.component, "Editor");
    assert_eq!(report.acquire, Origin::new("onCreate", "b0", 0));
    assert_eq!(report.release_callback, "onPause");

    let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
    assert!(outcome.success());
    assert_eq!(outcome.fixes.len(), 1);
    let fix = &outcome.fixes[0];
    assert_eq!(fix.location.procedure, "onPause");
    let patched_block = &outcome.patched.procedures["onPause"].blocks["b0"];
    assert_eq!(
        patched_block.statements[fix.location.index],
        Statement::ReleaseIfHeld { api: "close".into(), target: "rec".into() }
    );

    let text = serialize_app(&outcome.patched);
    let reparsed = parse_app(&text).unwrap();
    assert_eq!(reparsed, outcome.patched);

    assert!(analyze(&reparsed, &spec, &opts).unwrap().reports.is_empty());
    assert!(validate(&reparsed, &spec, &opts).unwrap().valid);
}

#[test]
fn late_policy_defers_the_deadline_to_the_last_release_callback() {
    let app_text = APP
        .replace(r#""onPause": "onPause""#, r#""onStop": "onStop""#)
        .replace(r#""name": "onPause""#, r#""name": "onStop""#)
        .replace(
            r#"[{"op": "other"}, {"op": "return"}]"#,
            r#"[{"op": "release", "api": "close", "target": "rec"}, {"op": "return"}]"#,
        );
    let spec_text = SPEC.replace(
        r#""release_callbacks": ["onPause"]"#,
        r#""release_callbacks": ["onPause", "onStop"]"#,
    );
    let app = parse_app(&app_text).unwrap();
    let spec = parse_resource_spec(&spec_text).unwrap();

    let early = AnalysisOptions { policy: ReleasePolicy::Early, ..Default::default() };
    let late = AnalysisOptions { policy: ReleasePolicy::Late, ..Default::default() };
    assert_eq!(analyze(&app, &spec, &early).unwrap().reports.len(), 1);
    assert!(analyze(&app, &spec, &late).unwrap().reports.is_empty());
}
