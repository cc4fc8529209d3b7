//! Conditional-release fix synthesis and application.
//!
//! A fix for a leak report inserts one guarded release (`release_if_held`)
//! into the body of the report's release callback. The guard makes the
//! statement a no-op when the resource is not held, so the fix is safe on
//! every path through the callback sequence, not only on the leaking one.
//!
//! Placement inside the callback: after the last statement touching the
//! leaked reference when the callback uses or acquires it, otherwise
//! immediately before the callback's first return. When the reference is a
//! local of some helper procedure, the fix plumbs it through a fresh field:
//! the acquire is rewritten to bind the field and the guarded release reads
//! it. When the component does not implement the release callback at all,
//! an empty procedure is synthesized and bound first.
//!
//! `repair` drives the loop: detect, fix the first report, re-detect, until
//! nothing is left, then check the patched app against the full protocol
//! property. A fix that applies but breaks the protocol elsewhere (for
//! example by releasing earlier than a release the programmer wrote) shows
//! up as a failed validation, not as a silent success.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    analyze, validate, AnalysisError, AnalysisOptions, CycleWarning, LeakReport, Validation,
};
use crate::ir::{AppModel, BasicBlock, Origin, Procedure, ResourceSpec, Statement};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RepairError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("report does not match the app: {0}")]
    BadReport(String),
    #[error("fix no longer matches the app: {0}")]
    StaleFix(String),
}

/// Insertion point of the guarded release, as coordinates into the app the
/// fix was synthesized against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixLocation {
    pub procedure: String,
    pub block: String,
    pub index: usize,
}

/// Route a helper-local reference to the release site: `acquire` is
/// rewritten to bind `field`, which the guarded release then reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plumb {
    pub field: String,
    pub acquire: Origin,
    pub original_target: String,
}

/// Release-callback procedure to synthesize (a bare return) and bind before
/// inserting the guarded release into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewProcedure {
    pub name: String,
    pub callback: String,
}

/// A synthesized conditional-release fix for one leak report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fix {
    pub component: String,
    pub resource: String,
    /// Release operation paired with the leaked acquire.
    pub release_op: String,
    /// Reference the guarded release reads (the plumbed field if any).
    pub target: String,
    pub location: FixLocation,
    /// API backing the guard when the resource advertises one; otherwise the
    /// guard is a plain held-state check.
    pub held_check: Option<String>,
    pub plumb: Option<Plumb>,
    pub new_procedure: Option<NewProcedure>,
}

impl Fix {
    /// Statements the fix adds to the app: the guarded release, plus the
    /// return of a synthesized callback body.
    pub fn added_statements(&self) -> usize {
        1 + usize::from(self.new_procedure.is_some())
    }
}

fn all_targets(app: &AppModel) -> BTreeSet<&str> {
    app.procedures
        .values()
        .flat_map(|p| p.blocks.values())
        .flat_map(|b| &b.statements)
        .filter_map(Statement::target)
        .collect()
}

fn fresh_field(app: &AppModel, resource: &str) -> String {
    let taken = all_targets(app);
    (0..)
        .map(|k| format!("plumb_{resource}_{k}"))
        .find(|name| !taken.contains(name.as_str()))
        .expect("unbounded name space")
}

fn fresh_procedure_name(app: &AppModel, component: &str, callback: &str) -> String {
    let base = format!("{component}_{callback}");
    if !app.procedures.contains_key(&base) {
        return base;
    }
    (1..)
        .map(|k| format!("{base}_{k}"))
        .find(|name| !app.procedures.contains_key(name))
        .expect("unbounded name space")
}

/// Where to insert inside an existing fix procedure; see the module docs.
fn placement(proc: &Procedure, reference: &str) -> FixLocation {
    let mut touches: Vec<(&str, usize)> = Vec::new();
    let mut returns: Vec<(&str, usize)> = Vec::new();
    for (id, block) in &proc.blocks {
        for (i, stmt) in block.statements.iter().enumerate() {
            match stmt {
                Statement::Use { target } | Statement::Acquire { target, .. }
                    if target == reference =>
                {
                    touches.push((id, i));
                }
                Statement::Return => returns.push((id, i)),
                _ => {}
            }
        }
    }
    let (block, index) = if let Some(&(block, i)) = touches.iter().max() {
        (block, i + 1)
    } else if let Some(&(block, i)) = returns.iter().min() {
        (block, i)
    } else if let Some((block, b)) =
        proc.blocks.iter().find(|(_, b)| b.successors.is_empty())
    {
        (block.as_str(), b.statements.len())
    } else {
        (proc.entry.as_str(), proc.blocks[&proc.entry].statements.len())
    };
    FixLocation { procedure: proc.name.clone(), block: block.to_string(), index }
}

/// Builds the conditional-release fix for one leak report.
pub fn synthesize_fix(
    app: &AppModel,
    spec: &ResourceSpec,
    report: &LeakReport,
) -> Result<Fix, RepairError> {
    let component = app
        .component(&report.component)
        .ok_or_else(|| RepairError::BadReport(format!("no component `{}`", report.component)))?;
    let acquire_proc = app.procedure(&report.acquire.procedure).ok_or_else(|| {
        RepairError::BadReport(format!("no procedure `{}`", report.acquire.procedure))
    })?;
    let stmt = acquire_proc
        .blocks
        .get(&report.acquire.block)
        .and_then(|b| b.statements.get(report.acquire.index));
    let Some(Statement::Acquire { api, target }) = stmt else {
        return Err(RepairError::BadReport(format!(
            "no acquire at {}",
            report.acquire
        )));
    };
    let release_op = spec.release_for(api).ok_or_else(|| {
        RepairError::BadReport(format!("`{api}` is not an acquire of `{}`", spec.name))
    })?;

    let fix_proc = component
        .callbacks
        .get(&report.release_callback)
        .and_then(|name| app.procedure(name));

    // The reference is reachable from the fix site when the callback already
    // touches it or when it was acquired directly in one of the component's
    // callbacks; a helper-local reference must be plumbed through a field.
    let in_fix_proc = fix_proc.is_some_and(|p| {
        p.blocks
            .values()
            .flat_map(|b| &b.statements)
            .any(|s| s.target() == Some(target))
    });
    let acquired_in_callback =
        component.callbacks.values().any(|p| p == &report.acquire.procedure);
    let plumb = if in_fix_proc || acquired_in_callback {
        None
    } else {
        Some(Plumb {
            field: fresh_field(app, &spec.name),
            acquire: report.acquire.clone(),
            original_target: target.clone(),
        })
    };
    let fix_target = plumb.as_ref().map_or(target.clone(), |p| p.field.clone());

    let (location, new_procedure) = match fix_proc {
        Some(proc) => (placement(proc, target), None),
        None => {
            let name =
                fresh_procedure_name(app, &report.component, &report.release_callback);
            (
                FixLocation { procedure: name.clone(), block: "b0".into(), index: 0 },
                Some(NewProcedure { name, callback: report.release_callback.clone() }),
            )
        }
    };

    Ok(Fix {
        component: report.component.clone(),
        resource: spec.name.clone(),
        release_op: release_op.to_string(),
        target: fix_target,
        location,
        held_check: spec.held_check.clone(),
        plumb,
        new_procedure,
    })
}

/// Applies `fix` to a copy of `app`. Fails without touching anything when
/// the fix's coordinates no longer describe the app, or when an identical
/// guarded release already sits at the insertion point.
pub fn apply_fix(app: &AppModel, fix: &Fix) -> Result<AppModel, RepairError> {
    let mut app = app.clone();

    if let Some(np) = &fix.new_procedure {
        if app.procedures.contains_key(&np.name) {
            return Err(RepairError::StaleFix(format!(
                "procedure `{}` already exists",
                np.name
            )));
        }
        let component = app
            .components
            .iter_mut()
            .find(|c| c.name == fix.component)
            .ok_or_else(|| {
                RepairError::StaleFix(format!("no component `{}`", fix.component))
            })?;
        if component.callbacks.contains_key(&np.callback) {
            return Err(RepairError::StaleFix(format!(
                "`{}` already implements `{}`",
                fix.component, np.callback
            )));
        }
        component.callbacks.insert(np.callback.clone(), np.name.clone());
        app.procedures.insert(
            np.name.clone(),
            Procedure {
                name: np.name.clone(),
                entry: "b0".into(),
                blocks: [(
                    "b0".to_string(),
                    BasicBlock {
                        id: "b0".into(),
                        statements: vec![Statement::Return],
                        successors: vec![],
                    },
                )]
                .into(),
            },
        );
    }

    if let Some(p) = &fix.plumb {
        if all_targets(&app).contains(p.field.as_str()) {
            return Err(RepairError::StaleFix(format!(
                "field `{}` is already in use",
                p.field
            )));
        }
        let stmt = app
            .procedures
            .get_mut(&p.acquire.procedure)
            .and_then(|proc| proc.blocks.get_mut(&p.acquire.block))
            .and_then(|b| b.statements.get_mut(p.acquire.index));
        match stmt {
            Some(Statement::Acquire { target, .. }) if *target == p.original_target => {
                *target = p.field.clone();
            }
            _ => {
                return Err(RepairError::StaleFix(format!(
                    "no acquire of `{}` at {}",
                    p.original_target, p.acquire
                )));
            }
        }
    }

    let block = app
        .procedures
        .get_mut(&fix.location.procedure)
        .and_then(|proc| proc.blocks.get_mut(&fix.location.block))
        .ok_or_else(|| {
            RepairError::StaleFix(format!(
                "no block `{}/{}`",
                fix.location.procedure, fix.location.block
            ))
        })?;
    if fix.location.index > block.statements.len() {
        return Err(RepairError::StaleFix(format!(
            "index {} is past the end of `{}/{}`",
            fix.location.index, fix.location.procedure, fix.location.block
        )));
    }
    let rif =
        Statement::ReleaseIfHeld { api: fix.release_op.clone(), target: fix.target.clone() };
    let adjacent = [
        fix.location.index.checked_sub(1).and_then(|i| block.statements.get(i)),
        block.statements.get(fix.location.index),
    ];
    if adjacent.into_iter().flatten().any(|s| *s == rif) {
        return Err(RepairError::StaleFix("guarded release already present".into()));
    }
    block.statements.insert(fix.location.index, rif);
    Ok(app)
}

#[derive(Debug, Clone)]
pub struct RepairOptions {
    pub analysis: AnalysisOptions,
    /// Check the patched app against the full protocol property.
    pub run_validation: bool,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions { analysis: AnalysisOptions::default(), run_validation: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairOutcome {
    /// Reports of the initial detection pass, in report order.
    pub initial_reports: Vec<LeakReport>,
    /// Fixes applied, in application order.
    pub fixes: Vec<Fix>,
    pub patched: AppModel,
    /// Reports the applied fixes did not eliminate. Empty on success.
    pub remaining: Vec<LeakReport>,
    /// `None` when validation was not requested.
    pub validation: Option<Validation>,
    pub warnings: Vec<CycleWarning>,
}

impl RepairOutcome {
    /// All leaks fixed and, when validation ran, the protocol holds.
    pub fn success(&self) -> bool {
        self.remaining.is_empty() && self.validation.as_ref().is_none_or(|v| v.valid)
    }
}

/// Detects leaks of `spec` in `app` and patches them one at a time, re-running
/// detection after each fix so later fixes see the patched app. A fix can
/// surface a leak the patched release point does not cover (a release
/// callback that re-acquires afterwards), so the loop runs until detection
/// comes back clean, a fix fails to apply, or a leak it already targeted is
/// reported again; leftovers land in `remaining` rather than looping forever.
/// Termination: every round must target a previously unseen (component,
/// acquire, callback) key, and there are finitely many.
pub fn repair(
    app: &AppModel,
    spec: &ResourceSpec,
    opts: &RepairOptions,
) -> Result<RepairOutcome, RepairError> {
    let first = analyze(app, spec, &opts.analysis)?;
    let initial_reports = first.reports.clone();
    let warnings = first.warnings;
    let mut current = app.clone();
    let mut reports = first.reports;
    let mut fixes = Vec::new();
    let mut fixed: BTreeSet<(String, Origin, String)> = BTreeSet::new();
    while let Some(report) = reports.first().cloned() {
        let key =
            (report.component.clone(), report.acquire.clone(), report.release_callback.clone());
        if !fixed.insert(key) {
            // The guarded release did not cover this leak; stop rather than
            // synthesize the same fix again.
            break;
        }
        let fix = synthesize_fix(&current, spec, &report)?;
        match apply_fix(&current, &fix) {
            Ok(next) => current = next,
            Err(RepairError::StaleFix(_)) => break,
            Err(e) => return Err(e),
        }
        fixes.push(fix);
        reports = analyze(&current, spec, &opts.analysis)?.reports;
    }
    let validation = if opts.run_validation {
        Some(validate(&current, spec, &opts.analysis)?)
    } else {
        None
    };
    Ok(RepairOutcome { initial_reports, fixes, patched: current, remaining: reports, validation, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{ReleasePolicy, ViolationKind};
    use crate::ir::{parse_app, serialize_app};

    fn media_player_spec() -> ResourceSpec {
        ResourceSpec {
            name: "MediaPlayer".into(),
            reentrant: false,
            pairs: vec![("new".into(), "release".into()), ("start".into(), "stop".into())],
            release_callbacks: vec!["onPause".into(), "onStop".into()],
            held_check: None,
        }
    }

    fn player_app() -> AppModel {
        parse_app(
            r#"{
              "app": "demo",
              "components": [
                {"name": "Main", "lifecycle": "activity",
                 "callbacks": {"onCreate": "onCreate", "onPause": "onPause"}}
              ],
              "procedures": [
                {"name": "onCreate", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [
                    {"op": "acquire", "api": "new", "target": "player"},
                    {"op": "use", "target": "player"},
                    {"op": "return"}
                  ]}
                ]},
                {"name": "onPause", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [
                    {"op": "other"},
                    {"op": "call", "callee": "super_onPause"},
                    {"op": "return"}
                  ]}
                ]},
                {"name": "super_onPause", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [{"op": "return"}]}
                ]}
              ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn patches_the_player_leak_before_the_pause_return() {
        let app = player_app();
        let spec = media_player_spec();
        let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
        assert_eq!(outcome.initial_reports.len(), 1);
        assert_eq!(outcome.fixes.len(), 1);
        let fix = &outcome.fixes[0];
        assert_eq!(fix.release_op, "release");
        assert_eq!(fix.target, "player");
        assert_eq!(
            fix.location,
            FixLocation { procedure: "onPause".into(), block: "b0".into(), index: 2 }
        );
        assert_eq!(fix.plumb, None);
        assert_eq!(fix.new_procedure, None);
        assert!(fix.added_statements() <= 3);
        let patched = &outcome.patched.procedures["onPause"].blocks["b0"].statements;
        assert_eq!(
            patched,
            &vec![
                Statement::Other,
                Statement::Call { callee: "super_onPause".into() },
                Statement::ReleaseIfHeld { api: "release".into(), target: "player".into() },
                Statement::Return,
            ]
        );
        assert_eq!(outcome.remaining, vec![]);
        assert!(outcome.validation.unwrap().valid);
        let again = analyze(&outcome.patched, &spec, &AnalysisOptions::default()).unwrap();
        assert_eq!(again.reports, vec![]);
    }

    #[test]
    fn inserts_after_the_last_touch_of_the_reference() {
        // The acquire lives in the release callback itself: the guarded
        // release must land after it, and each lifecycle iteration then
        // acquires and releases in turn.
        let app = parse_app(
            r#"{
              "app": "touch",
              "components": [
                {"name": "Main", "lifecycle": "activity",
                 "callbacks": {"onPause": "onPause"}}
              ],
              "procedures": [
                {"name": "onPause", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [
                    {"op": "acquire", "api": "new", "target": "p"},
                    {"op": "other"},
                    {"op": "return"}
                  ]}
                ]}
              ]
            }"#,
        )
        .unwrap();
        let spec = media_player_spec();
        let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
        let fix = &outcome.fixes[0];
        assert_eq!(
            fix.location,
            FixLocation { procedure: "onPause".into(), block: "b0".into(), index: 1 }
        );
        let patched = &outcome.patched.procedures["onPause"].blocks["b0"].statements;
        assert_eq!(
            patched[..2],
            [
                Statement::Acquire { api: "new".into(), target: "p".into() },
                Statement::ReleaseIfHeld { api: "release".into(), target: "p".into() },
            ]
        );
        assert!(outcome.success());
    }

    #[test]
    fn use_in_a_looping_callback_defeats_the_fix() {
        // onPause uses the reference, and the lifecycle can run onPause
        // again after the inserted release: the second iteration's use is a
        // use after release, so the fix removes the leak but fails the
        // protocol check.
        let mut app = player_app();
        let proc = app.procedures.get_mut("onPause").unwrap();
        let block = proc.blocks.get_mut("b0").unwrap();
        block
            .statements
            .insert(0, Statement::Use { target: "player".into() });
        let spec = media_player_spec();
        let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
        let fix = &outcome.fixes[0];
        assert_eq!(
            fix.location,
            FixLocation { procedure: "onPause".into(), block: "b0".into(), index: 1 }
        );
        assert_eq!(outcome.remaining, vec![]);
        let validation = outcome.validation.as_ref().unwrap();
        assert!(!validation.valid);
        assert!(validation
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::UseAfterRelease
                && v.origin == Origin::new("onPause", "b0", 0)));
        assert!(!outcome.success());
    }

    #[test]
    fn plumbs_a_helper_local_reference_through_a_field() {
        let app = parse_app(
            r#"{
              "app": "plumbed",
              "components": [
                {"name": "Main", "lifecycle": "activity",
                 "callbacks": {"onCreate": "onCreate", "onPause": "onPause"}}
              ],
              "procedures": [
                {"name": "onCreate", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [
                    {"op": "call", "callee": "grab"},
                    {"op": "return"}
                  ]}
                ]},
                {"name": "grab", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [
                    {"op": "acquire", "api": "new", "target": "local_p"},
                    {"op": "return"}
                  ]}
                ]},
                {"name": "onPause", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [{"op": "return"}]}
                ]}
              ]
            }"#,
        )
        .unwrap();
        let spec = media_player_spec();
        let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
        assert_eq!(outcome.fixes.len(), 1);
        let fix = &outcome.fixes[0];
        let plumb = fix.plumb.as_ref().unwrap();
        assert_eq!(plumb.field, "plumb_MediaPlayer_0");
        assert_eq!(plumb.original_target, "local_p");
        assert_eq!(fix.target, "plumb_MediaPlayer_0");
        let rewritten = &outcome.patched.procedures["grab"].blocks["b0"].statements[0];
        assert_eq!(
            rewritten,
            &Statement::Acquire { api: "new".into(), target: "plumb_MediaPlayer_0".into() }
        );
        assert!(outcome.success());
        assert_eq!(
            analyze(&outcome.patched, &spec, &AnalysisOptions::default())
                .unwrap()
                .reports,
            vec![]
        );
    }

    #[test]
    fn synthesizes_a_missing_release_callback() {
        let app = parse_app(
            r#"{
              "app": "nocb",
              "components": [
                {"name": "Main", "lifecycle": "activity",
                 "callbacks": {"onCreate": "onCreate"}}
              ],
              "procedures": [
                {"name": "onCreate", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [
                    {"op": "acquire", "api": "new", "target": "player"},
                    {"op": "return"}
                  ]}
                ]}
              ]
            }"#,
        )
        .unwrap();
        let spec = media_player_spec();
        let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
        let fix = &outcome.fixes[0];
        assert_eq!(
            fix.new_procedure,
            Some(NewProcedure { name: "Main_onPause".into(), callback: "onPause".into() })
        );
        assert_eq!(fix.added_statements(), 2);
        let body = &outcome.patched.procedures["Main_onPause"].blocks["b0"].statements;
        assert_eq!(
            body,
            &vec![
                Statement::ReleaseIfHeld { api: "release".into(), target: "player".into() },
                Statement::Return,
            ]
        );
        assert_eq!(
            outcome.patched.component("Main").unwrap().callbacks["onPause"],
            "Main_onPause"
        );
        assert!(outcome.success());
    }

    #[test]
    fn stale_fixes_are_refused() {
        let app = player_app();
        let spec = media_player_spec();
        let report = analyze(&app, &spec, &AnalysisOptions::default())
            .unwrap()
            .reports
            .remove(0);
        let fix = synthesize_fix(&app, &spec, &report).unwrap();

        let mut moved = fix.clone();
        moved.location.index = 99;
        assert!(matches!(apply_fix(&app, &moved), Err(RepairError::StaleFix(_))));

        let mut gone = fix.clone();
        gone.location.procedure = "nothing".into();
        assert!(matches!(apply_fix(&app, &gone), Err(RepairError::StaleFix(_))));

        let patched = apply_fix(&app, &fix).unwrap();
        assert!(matches!(apply_fix(&patched, &fix), Err(RepairError::StaleFix(_))));
    }

    #[test]
    fn patched_app_survives_a_serialization_round_trip() {
        let app = player_app();
        let spec = media_player_spec();
        let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
        let json = serialize_app(&outcome.patched);
        let reparsed = parse_app(&json).unwrap();
        assert_eq!(reparsed, outcome.patched);
        assert_eq!(
            analyze(&reparsed, &spec, &AnalysisOptions::default()).unwrap().reports,
            vec![]
        );
    }

    // Programmer releases in onStop. Early policy calls that a leak and the
    // fix then releases in onPause, making the original release a double
    // release; the validation stage catches exactly that. Late policy agrees
    // with the programmer and has nothing to fix.
    fn late_release_app() -> AppModel {
        parse_app(
            r#"{
              "app": "late",
              "components": [
                {"name": "Chat", "lifecycle": "activity",
                 "callbacks": {"onCreate": "onCreate", "onStop": "onStop"}}
              ],
              "procedures": [
                {"name": "onCreate", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [
                    {"op": "acquire", "api": "new", "target": "player"},
                    {"op": "return"}
                  ]}
                ]},
                {"name": "onStop", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [
                    {"op": "release", "api": "release", "target": "player"},
                    {"op": "return"}
                  ]}
                ]}
              ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn early_fix_of_a_late_release_fails_validation() {
        let app = late_release_app();
        let spec = media_player_spec();
        let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
        assert_eq!(outcome.fixes.len(), 1);
        assert_eq!(outcome.remaining, vec![]);
        let validation = outcome.validation.as_ref().unwrap();
        assert!(!validation.valid);
        assert!(validation
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::DoubleRelease
                && v.origin == Origin::new("onStop", "b0", 0)));
        assert!(!outcome.success());
    }

    #[test]
    fn late_policy_accepts_the_programmers_release() {
        let app = late_release_app();
        let spec = media_player_spec();
        let opts = RepairOptions {
            analysis: AnalysisOptions { policy: ReleasePolicy::Late, ..Default::default() },
            run_validation: true,
        };
        let outcome = repair(&app, &spec, &opts).unwrap();
        assert_eq!(outcome.initial_reports, vec![]);
        assert_eq!(outcome.fixes, vec![]);
        assert!(outcome.success());
    }

    #[test]
    fn fixes_two_leaks_of_different_operations_in_turn() {
        let app = parse_app(
            r#"{
              "app": "branchy",
              "components": [
                {"name": "Main", "lifecycle": "activity",
                 "callbacks": {"onCreate": "onCreate", "onPause": "onPause"}}
              ],
              "procedures": [
                {"name": "onCreate", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [{"op": "other"}], "successors": ["b1", "b2"]},
                  {"id": "b1", "statements": [
                    {"op": "acquire", "api": "new", "target": "p"}
                  ], "successors": ["b3"]},
                  {"id": "b2", "statements": [
                    {"op": "acquire", "api": "start", "target": "p"}
                  ], "successors": ["b3"]},
                  {"id": "b3", "statements": [{"op": "return"}]}
                ]},
                {"name": "onPause", "entry": "b0", "blocks": [
                  {"id": "b0", "statements": [{"op": "return"}]}
                ]}
              ]
            }"#,
        )
        .unwrap();
        let spec = media_player_spec();
        let outcome = repair(&app, &spec, &RepairOptions::default()).unwrap();
        assert_eq!(outcome.initial_reports.len(), 2);
        assert_eq!(outcome.fixes.len(), 2);
        let ops: Vec<&str> =
            outcome.fixes.iter().map(|f| f.release_op.as_str()).collect();
        assert_eq!(ops, vec!["release", "stop"]);
        assert!(outcome.success());
        assert_eq!(
            analyze(&outcome.patched, &spec, &AnalysisOptions::default())
                .unwrap()
                .reports,
            vec![]
        );
    }
}
