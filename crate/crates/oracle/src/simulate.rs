//! Reference interpreter for leak and misuse checking.
//!
//! Deliberately primitive: no flow graphs, no automata, no summaries.
//! Callback sequences are enumerated straight off the lifecycle graph,
//! calls are inlined, and every control-flow path is walked with an
//! explicit stack of held acquisitions. Exhaustive and slow, but each rule
//! is one `match` arm away from the resource specification, which is what
//! makes it a trustworthy oracle for the production engine.
//!
//! Semantics mirrored from the engine, stated once here:
//! acquire/release/conditional-release statements participate only when
//! their API belongs to the specification, use statements only when their
//! target is a resource reference; a release must pair with the most recent
//! acquisition (the only one, for non-reentrant resources) or the execution
//! sinks; a sunk execution runs on without further protocol effect and is
//! never a leak; a leak is keyed by the earliest unmatched acquisition.

use std::collections::{BTreeMap, BTreeSet};

use leakfix_core::ir::{AppModel, Component, Origin, Procedure, ResourceSpec, Statement};
use thiserror::Error;

pub const DEFAULT_MAX_STEPS: u64 = 50_000_000;
pub const DEFAULT_LOOP_BOUND: usize = 3;
pub const DEFAULT_MAX_CALL_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct SimLimits {
    /// Total statements executed across all paths before giving up.
    pub max_steps: u64,
    /// How often one basic block may repeat on a single path through a
    /// procedure activation.
    pub loop_bound: usize,
    pub max_call_depth: usize,
}

impl Default for SimLimits {
    fn default() -> Self {
        SimLimits {
            max_steps: DEFAULT_MAX_STEPS,
            loop_bound: DEFAULT_LOOP_BOUND,
            max_call_depth: DEFAULT_MAX_CALL_DEPTH,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("simulation exceeded {0} steps")]
    BudgetExceeded(u64),
    #[error("call depth exceeded inlining `{0}`")]
    CallDepthExceeded(String),
}

/// Kinds mirror the validator's classification; `NewLeak` is an acquisition
/// still pending when a cut sequence ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SimViolation {
    UseAfterRelease,
    DoubleRelease,
    NewLeak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Sink {
    AcquireWhileHeld,
    DoubleRelease,
    UseAfterRelease,
}

/// Protocol state carried along one execution path. The stack holds (api,
/// origin) of pending acquisitions, earliest first; non-reentrant resources
/// never stack past one. Sinking freezes the state at the offending
/// statement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SimState {
    Live(Vec<(String, Origin)>),
    Sunk(Sink, Origin),
}

struct Sim<'a> {
    app: &'a AppModel,
    spec: &'a ResourceSpec,
    tracked: BTreeSet<String>,
    track_uses: bool,
    limits: SimLimits,
    steps: u64,
}

impl Sim<'_> {
    fn tick(&mut self) -> Result<(), OracleError> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(OracleError::BudgetExceeded(self.limits.max_steps));
        }
        Ok(())
    }

    /// Effect of one statement; `None` means control stops here (a return).
    fn step(&mut self, state: &SimState, stmt: &Statement, origin: Origin) -> Option<SimState> {
        if matches!(stmt, Statement::Return) {
            return None;
        }
        let SimState::Live(stack) = state else {
            return Some(state.clone());
        };
        let next = match stmt {
            Statement::Acquire { api, .. } if self.spec.is_acquire_op(api) => {
                if !self.spec.reentrant && !stack.is_empty() {
                    SimState::Sunk(Sink::AcquireWhileHeld, origin)
                } else {
                    let mut stack = stack.clone();
                    stack.push((api.clone(), origin));
                    SimState::Live(stack)
                }
            }
            Statement::Release { api, .. } if self.spec.is_release_op(api) => {
                match stack.last() {
                    Some((held, _)) if self.spec.is_pair(held, api) => {
                        let mut stack = stack.clone();
                        stack.pop();
                        SimState::Live(stack)
                    }
                    _ => SimState::Sunk(Sink::DoubleRelease, origin),
                }
            }
            Statement::ReleaseIfHeld { api, .. } if self.spec.is_release_op(api) => {
                let mut stack = stack.clone();
                if self.spec.reentrant {
                    while stack.last().is_some_and(|(held, _)| self.spec.is_pair(held, api)) {
                        stack.pop();
                    }
                } else if stack.last().is_some_and(|(held, _)| self.spec.is_pair(held, api)) {
                    stack.pop();
                }
                SimState::Live(stack)
            }
            Statement::Use { target }
                if self.track_uses && self.tracked.contains(target) =>
            {
                if stack.is_empty() {
                    SimState::Sunk(Sink::UseAfterRelease, origin)
                } else {
                    state.clone()
                }
            }
            _ => state.clone(),
        };
        Some(next)
    }

    /// All protocol states at the ends of complete paths through `proc`,
    /// starting from `state`. A path ends at a return or when a block
    /// without successors runs out of statements.
    fn exec_procedure(
        &mut self,
        proc: &Procedure,
        state: &SimState,
        depth: usize,
    ) -> Result<BTreeSet<SimState>, OracleError> {
        if depth > self.limits.max_call_depth {
            return Err(OracleError::CallDepthExceeded(proc.name.clone()));
        }
        let mut out = BTreeSet::new();
        let counts: BTreeMap<&str, usize> = [(proc.entry.as_str(), 1)].into();
        self.exec_block(proc, &proc.entry, 0, state.clone(), &counts, depth, &mut out)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn exec_block(
        &mut self,
        proc: &Procedure,
        block_id: &str,
        from_index: usize,
        mut state: SimState,
        counts: &BTreeMap<&str, usize>,
        depth: usize,
        out: &mut BTreeSet<SimState>,
    ) -> Result<(), OracleError> {
        let block = &proc.blocks[block_id];
        for (idx, stmt) in block.statements.iter().enumerate().skip(from_index) {
            self.tick()?;
            if let Statement::Call { callee } = stmt {
                if let Some(callee) = self.app.procedure(callee) {
                    // Inline: resume after the call from every exit state.
                    let results = self.exec_procedure(callee, &state, depth + 1)?;
                    for result in results {
                        self.exec_block(proc, block_id, idx + 1, result, counts, depth, out)?;
                    }
                    return Ok(());
                }
                continue;
            }
            match self.step(&state, stmt, Origin::new(&proc.name, block_id, idx)) {
                Some(next) => state = next,
                None => {
                    out.insert(state);
                    return Ok(());
                }
            }
        }
        if block.successors.is_empty() {
            out.insert(state);
            return Ok(());
        }
        for succ in &block.successors {
            let visits = counts.get(succ.as_str()).copied().unwrap_or(0);
            if visits >= self.limits.loop_bound {
                continue;
            }
            let mut counts = counts.clone();
            *counts.entry(succ.as_str()).or_insert(0) += 1;
            self.exec_block(proc, succ, 0, state.clone(), &counts, depth, out)?;
        }
        Ok(())
    }

    /// Protocol states after running the callbacks of `seq` on `component`,
    /// starting idle. Unimplemented callbacks are skipped.
    fn run_sequence(
        &mut self,
        component: &Component,
        seq: &[String],
    ) -> Result<BTreeSet<SimState>, OracleError> {
        let mut states: BTreeSet<SimState> = [SimState::Live(Vec::new())].into();
        for cb in seq {
            let Some(proc) = component.callbacks.get(cb).and_then(|p| self.app.procedure(p))
            else {
                continue;
            };
            let mut next = BTreeSet::new();
            for state in &states {
                next.extend(self.exec_procedure(proc, state, 0)?);
            }
            states = next;
        }
        Ok(states)
    }
}

/// Maximal callback sequences of the component's lifecycle: flattened
/// callback lists of state paths that visit no state more than `depth`
/// times and that no edge can extend.
fn maximal_sequences(component: &Component, depth: usize) -> Vec<Vec<String>> {
    let g = &component.lifecycle;
    let mut result: BTreeSet<Vec<String>> = BTreeSet::new();
    if depth == 0 {
        return Vec::new();
    }
    let mut work: Vec<(&str, BTreeMap<&str, usize>, Vec<String>)> =
        vec![(g.initial.as_str(), [(g.initial.as_str(), 1)].into(), Vec::new())];
    while let Some((state, counts, seq)) = work.pop() {
        let mut extended = false;
        for edge in &g.edges {
            if edge.from != state {
                continue;
            }
            if counts.get(edge.to.as_str()).copied().unwrap_or(0) + 1 > depth {
                continue;
            }
            extended = true;
            let mut counts = counts.clone();
            *counts.entry(edge.to.as_str()).or_insert(0) += 1;
            let mut seq = seq.clone();
            seq.extend(edge.callbacks.iter().cloned());
            work.push((edge.to.as_str(), counts, seq));
        }
        if !extended {
            result.insert(seq);
        }
    }
    result.into_iter().collect()
}

/// Prefixes of the maximal sequences ending right after an occurrence of
/// any of the specification's release callbacks.
fn cut_sequences(maximal: &[Vec<String>], spec: &ResourceSpec) -> Vec<Vec<String>> {
    let cuts: BTreeSet<&str> = spec.release_callbacks.iter().map(String::as_str).collect();
    let mut out: BTreeSet<Vec<String>> = BTreeSet::new();
    for seq in maximal {
        for (i, cb) in seq.iter().enumerate() {
            if cuts.contains(cb.as_str()) {
                out.insert(seq[..=i].to_vec());
            }
        }
    }
    out.into_iter().collect()
}

/// Acquisitions that can still be pending when some release-callback-ended
/// sequence finishes, as (component, acquire origin) pairs. Use statements
/// are ignored; sunk executions are protocol misuse, not leaks.
pub fn oracle_leaks(
    app: &AppModel,
    spec: &ResourceSpec,
    depth: usize,
    limits: &SimLimits,
) -> Result<BTreeSet<(String, Origin)>, OracleError> {
    let mut sim = Sim {
        app,
        spec,
        tracked: app.resource_refs(spec),
        track_uses: false,
        limits: *limits,
        steps: 0,
    };
    let mut leaks = BTreeSet::new();
    for component in &app.components {
        let maximal = maximal_sequences(component, depth);
        for seq in cut_sequences(&maximal, spec) {
            for state in sim.run_sequence(component, &seq)? {
                if let SimState::Live(stack) = state {
                    if let Some((_, origin)) = stack.first() {
                        leaks.insert((component.name.clone(), origin.clone()));
                    }
                }
            }
        }
    }
    Ok(leaks)
}

/// Protocol violations over the whole app: pending acquisitions at the ends
/// of release-callback-ended sequences, and misuse (use after release,
/// double release) anywhere along maximal sequences. Mirrors the
/// validator's classification so the two can be compared set-for-set.
pub fn oracle_violations(
    app: &AppModel,
    spec: &ResourceSpec,
    depth: usize,
    limits: &SimLimits,
) -> Result<BTreeSet<(String, SimViolation, Origin)>, OracleError> {
    let mut sim = Sim {
        app,
        spec,
        tracked: app.resource_refs(spec),
        track_uses: true,
        limits: *limits,
        steps: 0,
    };
    let mut violations = BTreeSet::new();
    for component in &app.components {
        let maximal = maximal_sequences(component, depth);
        for seq in cut_sequences(&maximal, spec) {
            for state in sim.run_sequence(component, &seq)? {
                if let SimState::Live(stack) = state {
                    if let Some((_, origin)) = stack.first() {
                        violations.insert((
                            component.name.clone(),
                            SimViolation::NewLeak,
                            origin.clone(),
                        ));
                    }
                }
            }
        }
        for seq in &maximal {
            for state in sim.run_sequence(component, seq)? {
                let SimState::Sunk(sink, origin) = state else {
                    continue;
                };
                let kind = match sink {
                    Sink::DoubleRelease => SimViolation::DoubleRelease,
                    Sink::UseAfterRelease => SimViolation::UseAfterRelease,
                    Sink::AcquireWhileHeld => continue,
                };
                violations.insert((component.name.clone(), kind, origin));
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use leakfix_core::ir::parse_app;

    fn player_spec() -> ResourceSpec {
        ResourceSpec {
            name: "Player".into(),
            reentrant: false,
            pairs: vec![("open".into(), "close".into())],
            release_callbacks: vec!["onPause".into()],
            held_check: None,
        }
    }

    fn lock_spec() -> ResourceSpec {
        ResourceSpec {
            name: "Lock".into(),
            reentrant: true,
            pairs: vec![("acquire".into(), "release".into())],
            release_callbacks: vec!["onPause".into()],
            held_check: Some("isHeld".into()),
        }
    }

    fn app(json: &str) -> AppModel {
        parse_app(json).unwrap()
    }

    #[test]
    fn flags_an_unreleased_acquire_at_the_cut() {
        let app = app(r#"{
          "app": "t",
          "components": [
            {"name": "Main", "lifecycle": "activity",
             "callbacks": {"onCreate": "onCreate"}}
          ],
          "procedures": [
            {"name": "onCreate", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "acquire", "api": "open", "target": "p"},
                {"op": "return"}
              ]}
            ]}
          ]
        }"#);
        let leaks = oracle_leaks(&app, &player_spec(), 3, &SimLimits::default()).unwrap();
        assert_eq!(
            leaks,
            [("Main".to_string(), Origin::new("onCreate", "b0", 0))].into()
        );
    }

    #[test]
    fn release_on_one_branch_still_leaks_on_the_other() {
        let app = app(r#"{
          "app": "t",
          "components": [
            {"name": "Main", "lifecycle": "activity",
             "callbacks": {"onCreate": "onCreate", "onPause": "onPause"}}
          ],
          "procedures": [
            {"name": "onCreate", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "acquire", "api": "open", "target": "p"}
              ], "successors": ["b1", "b2"]},
              {"id": "b1", "statements": [
                {"op": "release", "api": "close", "target": "p"}
              ], "successors": ["b3"]},
              {"id": "b2", "statements": [{"op": "other"}], "successors": ["b3"]},
              {"id": "b3", "statements": [{"op": "return"}]}
            ]},
            {"name": "onPause", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [{"op": "return"}]}
            ]}
          ]
        }"#);
        let leaks = oracle_leaks(&app, &player_spec(), 3, &SimLimits::default()).unwrap();
        assert_eq!(
            leaks,
            [("Main".to_string(), Origin::new("onCreate", "b0", 0))].into()
        );
    }

    #[test]
    fn inlines_calls_and_keys_by_earliest_unmatched() {
        // The callback acquires twice through a helper; the leak key is the
        // first acquisition.
        let app = app(r#"{
          "app": "t",
          "components": [
            {"name": "Main", "lifecycle": "activity",
             "callbacks": {"onResume": "onResume", "onPause": "onPause"}}
          ],
          "procedures": [
            {"name": "onResume", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "call", "callee": "grab"},
                {"op": "call", "callee": "grab"},
                {"op": "return"}
              ]}
            ]},
            {"name": "grab", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "acquire", "api": "acquire", "target": "w"},
                {"op": "return"}
              ]}
            ]},
            {"name": "onPause", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "release", "api": "release", "target": "w"},
                {"op": "return"}
              ]}
            ]}
          ]
        }"#);
        let leaks = oracle_leaks(&app, &lock_spec(), 3, &SimLimits::default()).unwrap();
        // One release pops the later acquisition; the earlier one remains.
        assert_eq!(
            leaks,
            [("Main".to_string(), Origin::new("grab", "b0", 0))].into()
        );
    }

    #[test]
    fn guarded_release_drains_and_never_violates() {
        let app = app(r#"{
          "app": "t",
          "components": [
            {"name": "Main", "lifecycle": "activity",
             "callbacks": {"onResume": "onResume", "onPause": "onPause"}}
          ],
          "procedures": [
            {"name": "onResume", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "acquire", "api": "acquire", "target": "w"},
                {"op": "acquire", "api": "acquire", "target": "w"},
                {"op": "return"}
              ]}
            ]},
            {"name": "onPause", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "release_if_held", "api": "release", "target": "w"},
                {"op": "return"}
              ]}
            ]}
          ]
        }"#);
        let spec = lock_spec();
        let leaks = oracle_leaks(&app, &spec, 3, &SimLimits::default()).unwrap();
        assert_eq!(leaks, BTreeSet::new());
        let violations = oracle_violations(&app, &spec, 3, &SimLimits::default()).unwrap();
        assert_eq!(violations, BTreeSet::new());
    }

    #[test]
    fn sees_misuse_past_the_cut_and_pending_leaks_at_it() {
        // The double release sits in onDestroy, past every onPause cut.
        let app = app(r#"{
          "app": "t",
          "components": [
            {"name": "Main", "lifecycle": "activity",
             "callbacks": {"onCreate": "onCreate", "onPause": "onPause",
                           "onStop": "onStop", "onDestroy": "onDestroy"}}
          ],
          "procedures": [
            {"name": "onCreate", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "acquire", "api": "open", "target": "p"},
                {"op": "return"}
              ]}
            ]},
            {"name": "onPause", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [{"op": "return"}]}
            ]},
            {"name": "onStop", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "release", "api": "close", "target": "p"},
                {"op": "return"}
              ]}
            ]},
            {"name": "onDestroy", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "release", "api": "close", "target": "p"},
                {"op": "return"}
              ]}
            ]}
          ]
        }"#);
        let violations =
            oracle_violations(&app, &player_spec(), 3, &SimLimits::default()).unwrap();
        assert_eq!(
            violations,
            [
                ("Main".to_string(), SimViolation::NewLeak, Origin::new("onCreate", "b0", 0)),
                (
                    "Main".to_string(),
                    SimViolation::DoubleRelease,
                    Origin::new("onDestroy", "b0", 0)
                ),
            ]
            .into()
        );
    }

    #[test]
    fn the_first_sink_on_a_path_absorbs_later_misuse() {
        // After the release, the use sinks every path before the second
        // release statement could; only the use is reported.
        let app = app(r#"{
          "app": "t",
          "components": [
            {"name": "Main", "lifecycle": "activity",
             "callbacks": {"onCreate": "onCreate", "onPause": "onPause"}}
          ],
          "procedures": [
            {"name": "onCreate", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "acquire", "api": "open", "target": "p"},
                {"op": "return"}
              ]}
            ]},
            {"name": "onPause", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "release", "api": "close", "target": "p"},
                {"op": "use", "target": "p"},
                {"op": "release", "api": "close", "target": "p"},
                {"op": "return"}
              ]}
            ]}
          ]
        }"#);
        let violations =
            oracle_violations(&app, &player_spec(), 3, &SimLimits::default()).unwrap();
        assert_eq!(
            violations,
            [(
                "Main".to_string(),
                SimViolation::UseAfterRelease,
                Origin::new("onPause", "b0", 1)
            )]
            .into()
        );
    }

    #[test]
    fn sunk_executions_are_not_leaks() {
        // Releasing while idle sinks; the acquire after it stays on a sunk
        // path and must not be reported.
        let app = app(r#"{
          "app": "t",
          "components": [
            {"name": "Main", "lifecycle": "activity",
             "callbacks": {"onCreate": "onCreate", "onPause": "onPause"}}
          ],
          "procedures": [
            {"name": "onCreate", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "release", "api": "close", "target": "p"},
                {"op": "acquire", "api": "open", "target": "p"},
                {"op": "return"}
              ]}
            ]},
            {"name": "onPause", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [{"op": "return"}]}
            ]}
          ]
        }"#);
        let leaks = oracle_leaks(&app, &player_spec(), 3, &SimLimits::default()).unwrap();
        assert_eq!(leaks, BTreeSet::new());
    }

    #[test]
    fn refuses_to_run_past_the_step_budget() {
        let app = app(r#"{
          "app": "t",
          "components": [
            {"name": "Main", "lifecycle": "activity",
             "callbacks": {"onCreate": "onCreate", "onPause": "onPause"}}
          ],
          "procedures": [
            {"name": "onCreate", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [
                {"op": "other"}, {"op": "other"}, {"op": "other"}
              ], "successors": ["b0", "b1"]},
              {"id": "b1", "statements": [{"op": "return"}]}
            ]},
            {"name": "onPause", "entry": "b0", "blocks": [
              {"id": "b0", "statements": [{"op": "return"}]}
            ]}
          ]
        }"#);
        let limits = SimLimits { max_steps: 10, ..Default::default() };
        assert_eq!(
            oracle_leaks(&app, &player_spec(), 3, &limits),
            Err(OracleError::BudgetExceeded(10))
        );
    }
}
