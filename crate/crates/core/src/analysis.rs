//! Leak detection across callback sequences.
//!
//! The detector walks the product of a resource-flow graph with the strict
//! protocol interpretation of a resource specification. Strict means any
//! transition the protocol does not define sends the execution to an
//! absorbing sink: sunk executions are protocol misuse, not leaks, so they
//! never produce a leak report, but they are still part of the complement
//! language and their paths still feed interprocedural summaries.
//!
//! A whole-component analysis proceeds in three layers:
//!
//! 1. `all_calls` summarizes every procedure bottom-up over the call graph,
//!    replacing each call with the callee's per-class shortest leak path
//!    fragments (plus a bypass when the callee has a leak-free path).
//! 2. `unroll_callbacks` enumerates the component's depth-bounded lifecycle
//!    sequences and cuts them after release-callback occurrences.
//! 3. `analyze` concatenates the summarized callback bodies of each cut
//!    sequence and reports one leak per (component, acquire origin,
//!    release callback), keyed by the earliest unmatched acquire.
//!
//! `validate` reuses the same product with use-tracking switched on: residual
//! leaks are checked at the policy cuts, use-after-release and double-release
//! are flagged along maximal sequences, and a guarded release is never a
//! violation because it releases exactly when the resource is held.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::engine::{self, Move, PushdownSystem, StackOp, SysMove};
use crate::automata::rif_symbol;
pub use crate::automata::UseMode;
use crate::ir::{AppModel, Component, Origin, ResourceSpec};
use crate::rfg::{build_rfg, Node, NodeId, NodeKind, Rfg, RfgBuilder};

pub const DEFAULT_DEPTH: usize = 3;

/// Which release callback a component analysis anchors on: the first or the
/// last entry of the specification's release-callback list that the
/// component's lifecycle actually invokes. The chosen callback is both where
/// sequences are cut for leak detection and where a synthesized fix releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReleasePolicy {
    Early,
    Late,
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Bound on how often one lifecycle state may repeat in a sequence.
    pub depth: usize,
    pub policy: ReleasePolicy,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { depth: DEFAULT_DEPTH, policy: ReleasePolicy::Early }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(
        "component `{component}`: lifecycle `{lifecycle}` never invokes a release callback of `{resource}`"
    )]
    NoReleaseCallback { component: String, lifecycle: String, resource: String },
}

/// A leak: `acquire` can still be pending when the component reaches the end
/// of `callback_sequence`, whose last element is the release callback the
/// fix should target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakReport {
    pub component: String,
    pub resource: String,
    pub acquire: Origin,
    pub release_callback: String,
    pub callback_sequence: Vec<String>,
    pub witness: LeakWitness,
}

/// Shortest framed operation string showing the leak, one origin per symbol
/// (`None` for the frame symbols and for nodes without coordinates).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakWitness {
    pub symbols: Vec<String>,
    pub origins: Vec<Option<Origin>>,
}

/// A call-graph cycle was broken by ignoring the summary of `callee` inside
/// `caller`; calls across the removed edge are treated as resource-neutral.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CycleWarning {
    pub caller: String,
    pub callee: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisResult {
    pub reports: Vec<LeakReport>,
    pub warnings: Vec<CycleWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UseAfterRelease,
    DoubleRelease,
    NewLeak,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub component: String,
    pub kind: ViolationKind,
    /// The violating statement for misuse; the pending acquire for NewLeak.
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

// ---------------------------------------------------------------------------
// The product of an RFG with the strict protocol machine
// ---------------------------------------------------------------------------

/// How an execution broke the protocol. Sunk executions stop updating the
/// protocol state but still run to the exit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SinkKind {
    /// Non-reentrant acquire while already held. Never reported; recorded so
    /// the path can still feed a summary fragment.
    AcquireWhileHeld,
    /// Release while not held, or a release that does not pair with what is
    /// held (for reentrant resources: with the latest acquire).
    DoubleRelease,
    /// Use of a tracked reference while the resource is not held.
    UseAfterRelease,
}

/// Why a path's operation string lies in the complement of the protocol
/// language.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PathClass {
    /// Held at exit, keyed by the earliest unmatched acquire. `None` only
    /// for hand-built graphs whose acquire nodes carry no coordinates.
    Pending(Option<Origin>),
    /// Protocol misuse at the given statement.
    Sunk(SinkKind, Option<Origin>),
}

/// Shortest path of its class through the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathWitness {
    /// Operation symbols consumed along the path, frame symbols excluded.
    pub symbols: Vec<String>,
    /// Statement origin per symbol.
    pub origins: Vec<Option<Origin>>,
    /// Nodes visited from entry to exit, consecutive repeats collapsed.
    pub nodes: Vec<NodeId>,
}

/// Per-class shortest leaking paths of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakPaths {
    pub classes: BTreeMap<PathClass, PathWitness>,
    /// Shortest entry-to-exit path that completes with the protocol
    /// satisfied. Its operations still matter to callers: a path that is
    /// clean from an idle context may release or sink from a held one, so
    /// summaries must keep it, not replace it with a no-op.
    pub clean: Option<PathWitness>,
}

impl LeakPaths {
    /// True exactly when the graph's operation language meets the complement
    /// of the protocol language.
    pub fn any(&self) -> bool {
        !self.classes.is_empty()
    }

    pub fn has_clean_path(&self) -> bool {
        self.clean.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum MState {
    /// Not held; for reentrant resources, the stack is empty.
    Free,
    /// Reentrant: held, with the origin of the earliest unmatched acquire.
    Bottom(Option<Origin>),
    /// Non-reentrant: held by `api`.
    Held { api: String, origin: Option<Origin> },
    Sunk { kind: SinkKind, origin: Option<Origin> },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct StackSym {
    api: String,
    /// Pushed onto the empty stack: popping it frees the resource.
    bottom: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct PState {
    node: NodeId,
    /// Mid-drain of a guarded release: keep popping tops paired with the
    /// operation, then resume at the node given.
    drain: Option<(String, NodeId)>,
    m: MState,
}

struct ProductSystem<'a> {
    rfg: &'a Rfg,
    spec: &'a ResourceSpec,
    mode: UseMode,
}

type PMove = Move<PState, String, StackSym>;

impl ProductSystem<'_> {
    /// Symbol consumed when control leaves a node; `None` for silent nodes.
    fn symbol(&self, kind: &NodeKind) -> Option<String> {
        match kind {
            NodeKind::Acquire { api, .. } | NodeKind::Release { api, .. } => Some(api.clone()),
            NodeKind::ReleaseIfHeld { api, .. } => Some(rif_symbol(api)),
            NodeKind::Use { .. } => match self.mode {
                UseMode::Ignore => None,
                UseMode::Track => Some("use".to_string()),
            },
            _ => None,
        }
    }

    fn node_moves(&self, st: &PState, top: Option<&StackSym>, succ: NodeId, out: &mut Vec<PMove>) {
        let node = self.rfg.node(st.node);
        let go = |m: MState| PState { node: succ, drain: None, m };
        // Sunk executions read on without touching the protocol state.
        if let MState::Sunk { .. } = st.m {
            out.push(Move {
                symbol: self.symbol(&node.kind),
                action: StackOp::Stay,
                to: go(st.m.clone()),
            });
            return;
        }
        let reentrant = self.spec.reentrant;
        match &node.kind {
            NodeKind::Entry
            | NodeKind::Exit
            | NodeKind::Trivial
            | NodeKind::ExitMarker
            | NodeKind::Transfer { .. } => {
                out.push(Move { symbol: None, action: StackOp::Stay, to: go(st.m.clone()) });
            }
            NodeKind::Acquire { api, .. } => {
                let symbol = Some(api.clone());
                if reentrant {
                    let (sym, m) = match top {
                        None => (
                            StackSym { api: api.clone(), bottom: true },
                            MState::Bottom(node.origin.clone()),
                        ),
                        Some(_) => (StackSym { api: api.clone(), bottom: false }, st.m.clone()),
                    };
                    out.push(Move { symbol, action: StackOp::Push(sym), to: go(m) });
                } else {
                    let m = match &st.m {
                        MState::Free => {
                            MState::Held { api: api.clone(), origin: node.origin.clone() }
                        }
                        _ => MState::Sunk {
                            kind: SinkKind::AcquireWhileHeld,
                            origin: node.origin.clone(),
                        },
                    };
                    out.push(Move { symbol, action: StackOp::Stay, to: go(m) });
                }
            }
            NodeKind::Release { api, .. } => {
                let symbol = Some(api.clone());
                let sunk = MState::Sunk { kind: SinkKind::DoubleRelease, origin: node.origin.clone() };
                if reentrant {
                    match top {
                        Some(g) if self.spec.is_pair(&g.api, api) => {
                            let m = if g.bottom { MState::Free } else { st.m.clone() };
                            out.push(Move { symbol, action: StackOp::Pop, to: go(m) });
                        }
                        _ => out.push(Move { symbol, action: StackOp::Stay, to: go(sunk) }),
                    }
                } else {
                    let m = match &st.m {
                        MState::Held { api: held, .. } if self.spec.is_pair(held, api) => {
                            MState::Free
                        }
                        _ => sunk,
                    };
                    out.push(Move { symbol, action: StackOp::Stay, to: go(m) });
                }
            }
            NodeKind::ReleaseIfHeld { api, .. } => {
                let symbol = Some(rif_symbol(api));
                if reentrant {
                    match top {
                        Some(g) if self.spec.is_pair(&g.api, api) => {
                            // Pop and stay on this node in drain phase; the
                            // remaining paired tops pop silently.
                            let m = if g.bottom { MState::Free } else { st.m.clone() };
                            out.push(Move {
                                symbol,
                                action: StackOp::Pop,
                                to: PState {
                                    node: st.node,
                                    drain: Some((api.clone(), succ)),
                                    m,
                                },
                            });
                        }
                        _ => out.push(Move { symbol, action: StackOp::Stay, to: go(st.m.clone()) }),
                    }
                } else {
                    let m = match &st.m {
                        MState::Held { api: held, .. } if self.spec.is_pair(held, api) => {
                            MState::Free
                        }
                        other => other.clone(),
                    };
                    out.push(Move { symbol, action: StackOp::Stay, to: go(m) });
                }
            }
            NodeKind::Use { .. } => match self.mode {
                UseMode::Ignore => {
                    out.push(Move { symbol: None, action: StackOp::Stay, to: go(st.m.clone()) });
                }
                UseMode::Track => {
                    let held = if reentrant {
                        top.is_some()
                    } else {
                        matches!(st.m, MState::Held { .. })
                    };
                    let m = if held {
                        st.m.clone()
                    } else {
                        MState::Sunk {
                            kind: SinkKind::UseAfterRelease,
                            origin: node.origin.clone(),
                        }
                    };
                    out.push(Move {
                        symbol: Some("use".to_string()),
                        action: StackOp::Stay,
                        to: go(m),
                    });
                }
            },
        }
    }
}

impl PushdownSystem for ProductSystem<'_> {
    type State = PState;
    type Sym = String;
    type Stack = StackSym;

    fn initial(&self) -> PState {
        PState { node: self.rfg.entry(), drain: None, m: MState::Free }
    }

    fn moves(&self, st: &PState, top: Option<&StackSym>) -> Vec<SysMove<Self>> {
        let mut out = Vec::new();
        if let Some((api, next)) = &st.drain {
            match top {
                Some(g) if self.spec.is_pair(&g.api, api) => {
                    let m = if g.bottom { MState::Free } else { st.m.clone() };
                    out.push(Move {
                        symbol: None,
                        action: StackOp::Pop,
                        to: PState { node: st.node, drain: st.drain.clone(), m },
                    });
                }
                _ => out.push(Move {
                    symbol: None,
                    action: StackOp::Stay,
                    to: PState { node: *next, drain: None, m: st.m.clone() },
                }),
            }
            return out;
        }
        for succ in self.rfg.successors(st.node) {
            self.node_moves(st, top, succ, &mut out);
        }
        out
    }
}

/// (cost length, symbols, item): symbols break cost ties per class.
type BestItem<'a> = (u32, Vec<String>, engine::Reached<'a, PState, StackSym>);

fn keep_shorter<'a>(slot: &mut Option<BestItem<'a>>, candidate: BestItem<'a>) {
    match slot {
        Some((len, syms, _)) if (*len, &*syms) <= (candidate.0, &candidate.1) => {}
        _ => *slot = Some(candidate),
    }
}

/// Runs the product and collects the per-class shortest complement paths.
pub fn leak_product(rfg: &Rfg, spec: &ResourceSpec, mode: UseMode) -> LeakPaths {
    let sys = ProductSystem { rfg, spec, mode };
    let ex = engine::explore(&sys);
    let exit = rfg.exit();
    let mut best: BTreeMap<PathClass, Option<BestItem<'_>>> = BTreeMap::new();
    let mut best_clean: Option<BestItem<'_>> = None;
    for r in ex.reached() {
        if r.state.node != exit || r.state.drain.is_some() {
            continue;
        }
        let class = match &r.state.m {
            MState::Free => None,
            MState::Bottom(origin) => Some(PathClass::Pending(origin.clone())),
            MState::Held { origin, .. } => Some(PathClass::Pending(origin.clone())),
            MState::Sunk { kind, origin } => Some(PathClass::Sunk(*kind, origin.clone())),
        };
        let candidate = (r.len, ex.symbols(&r), r);
        match class {
            None => keep_shorter(&mut best_clean, candidate),
            Some(class) => keep_shorter(best.entry(class).or_default(), candidate),
        }
    }
    let witness = |(_, symbols, r): BestItem<'_>| {
        let run = ex.run(&r);
        let mut nodes: Vec<NodeId> = Vec::with_capacity(run.steps.len() + 1);
        nodes.push(rfg.entry());
        for step in &run.steps {
            if nodes.last() != Some(&step.to.node) {
                nodes.push(step.to.node);
            }
        }
        let origins = run
            .steps
            .iter()
            .filter(|s| s.symbol.is_some())
            .map(|s| rfg.node(s.from.node).origin.clone())
            .collect();
        PathWitness { symbols, origins, nodes }
    };
    let classes = best
        .into_iter()
        .map(|(class, item)| (class, witness(item.expect("slot filled on insert"))))
        .collect();
    LeakPaths { classes, clean: best_clean.map(witness) }
}

/// Per-class shortest leaking paths of `rfg`, with use statements silent.
/// The classes are empty exactly when the framed operation language of the
/// graph avoids the complement of the protocol language.
pub fn leaking_paths(rfg: &Rfg, spec: &ResourceSpec) -> LeakPaths {
    leak_product(rfg, spec, UseMode::Ignore)
}

// ---------------------------------------------------------------------------
// Interprocedural summaries
// ---------------------------------------------------------------------------

fn sorted_back_edges(graph: &BTreeMap<String, BTreeSet<String>>) -> Vec<(String, String)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color: BTreeMap<&str, Color> =
        graph.keys().map(|k| (k.as_str(), Color::White)).collect();
    let mut back = Vec::new();
    for root in graph.keys() {
        if color[root.as_str()] != Color::White {
            continue;
        }
        // (node, next successor index)
        let mut stack: Vec<(&str, usize)> = vec![(root.as_str(), 0)];
        color.insert(root.as_str(), Color::Gray);
        while let Some((node, idx)) = stack.pop() {
            let succs: Vec<&str> = graph[node].iter().map(String::as_str).collect();
            if idx < succs.len() {
                stack.push((node, idx + 1));
                let next = succs[idx];
                match color.get(next).copied() {
                    Some(Color::White) => {
                        color.insert(next, Color::Gray);
                        stack.push((next, 0));
                    }
                    Some(Color::Gray) => back.push((node.to_string(), next.to_string())),
                    _ => {}
                }
            } else {
                color.insert(node, Color::Black);
            }
        }
    }
    back.sort();
    back
}

/// Callees-first order over the call graph. Cycles are broken by repeatedly
/// removing the lexicographically smallest (caller, callee) back edge found
/// by a sorted depth-first search; each removal is reported.
fn call_order(app: &AppModel) -> (Vec<String>, BTreeSet<(String, String)>, Vec<CycleWarning>) {
    let mut graph = app.call_graph();
    let mut broken = BTreeSet::new();
    let mut warnings = Vec::new();
    loop {
        let back = sorted_back_edges(&graph);
        let Some((caller, callee)) = back.into_iter().next() else {
            break;
        };
        graph.get_mut(&caller).expect("caller in graph").remove(&callee);
        warnings.push(CycleWarning { caller: caller.clone(), callee: callee.clone() });
        broken.insert((caller, callee));
    }
    // Post-order finish: on an acyclic graph, callees finish first.
    let mut finished: Vec<String> = Vec::new();
    let mut done: BTreeSet<&str> = BTreeSet::new();
    for root in graph.keys() {
        if done.contains(root.as_str()) {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(root.as_str(), 0)];
        let mut on_stack: BTreeSet<&str> = [root.as_str()].into();
        while let Some((node, idx)) = stack.pop() {
            let succs: Vec<&str> = graph[node].iter().map(String::as_str).collect();
            if idx < succs.len() {
                stack.push((node, idx + 1));
                let next = succs[idx];
                if !done.contains(next) && !on_stack.contains(next) {
                    on_stack.insert(next);
                    stack.push((next, 0));
                }
            } else {
                on_stack.remove(node);
                done.insert(node);
                finished.push(node.to_string());
            }
        }
    }
    (finished, broken, warnings)
}

fn trivial_bundle(name: &str) -> Rfg {
    let mut b = RfgBuilder::new(name);
    b.chain(&[Node { kind: NodeKind::Trivial, origin: None }]);
    b.finish()
}

/// Branch structure standing in for a call to the summarized procedure: one
/// chain per leak class plus one for the clean representative. Nodes keep
/// their origins and operations, so the caller re-runs each fragment in its
/// own protocol context; in particular a callee that is clean from an idle
/// context still releases (or sinks) correctly from a held one.
fn fragment_bundle(summary: &Rfg, spec: &ResourceSpec, mode: UseMode) -> Rfg {
    let paths = leak_product(summary, spec, mode);
    let mut b = RfgBuilder::new(summary.name());
    for w in paths.classes.values().chain(&paths.clean) {
        let nodes: Vec<Node> = w
            .nodes
            .iter()
            .filter(|&&id| id != summary.entry() && id != summary.exit())
            .map(|&id| summary.node(id).clone())
            .collect();
        b.chain(&nodes);
    }
    b.finish()
}

fn summarize(
    app: &AppModel,
    spec: &ResourceSpec,
    mode: UseMode,
) -> (BTreeMap<String, Rfg>, Vec<CycleWarning>) {
    let tracked = app.resource_refs(spec);
    let (order, broken, warnings) = call_order(app);
    let mut summaries: BTreeMap<String, Rfg> = BTreeMap::new();
    let mut bundles: BTreeMap<String, Rfg> = BTreeMap::new();
    for name in order {
        let proc = app.procedure(&name).expect("order lists app procedures");
        let raw = build_rfg(proc, spec, &tracked);
        let mut map: BTreeMap<String, Rfg> = BTreeMap::new();
        for (_, node) in raw.nodes() {
            if let NodeKind::Transfer { callee } = &node.kind {
                if broken.contains(&(name.clone(), callee.clone())) {
                    map.insert(callee.clone(), trivial_bundle(callee));
                } else if let Some(bundle) = bundles.get(callee) {
                    map.insert(callee.clone(), bundle.clone());
                }
            }
        }
        let summary = raw.substitute_transfers(&map);
        bundles.insert(name.clone(), fragment_bundle(&summary, spec, mode));
        summaries.insert(name, summary);
    }
    (summaries, warnings)
}

/// Transfer-free summary of every procedure, callees folded in bottom-up.
pub fn all_calls(
    app: &AppModel,
    spec: &ResourceSpec,
) -> (BTreeMap<String, Rfg>, Vec<CycleWarning>) {
    summarize(app, spec, UseMode::Ignore)
}

// ---------------------------------------------------------------------------
// Lifecycle unrolling
// ---------------------------------------------------------------------------

/// Depth-bounded callback sequences of one component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unrolling {
    /// Prefixes of maximal sequences ending right after an occurrence of a
    /// release callback (cuts may fall inside one lifecycle edge's list).
    pub cut_sequences: Vec<Vec<String>>,
    /// Flattened callback lists of maximal state paths: paths that no edge
    /// can extend without some state exceeding the depth bound.
    pub maximal_sequences: Vec<Vec<String>>,
}

fn maximal_sequences(component: &Component, depth: usize) -> Vec<Vec<String>> {
    let g = &component.lifecycle;
    let mut edges_from: BTreeMap<&str, Vec<(&str, &[String])>> = BTreeMap::new();
    for e in &g.edges {
        edges_from
            .entry(e.from.as_str())
            .or_default()
            .push((e.to.as_str(), e.callbacks.as_slice()));
    }
    for list in edges_from.values_mut() {
        list.sort();
    }
    let mut results: BTreeSet<Vec<String>> = BTreeSet::new();
    if depth == 0 {
        return Vec::new();
    }
    // (state, visit counts, flattened callbacks so far)
    let mut work: Vec<(&str, BTreeMap<&str, usize>, Vec<String>)> =
        vec![(g.initial.as_str(), [(g.initial.as_str(), 1)].into(), Vec::new())];
    while let Some((state, counts, seq)) = work.pop() {
        let mut extended = false;
        if let Some(nexts) = edges_from.get(state) {
            for (to, callbacks) in nexts {
                if counts.get(to).copied().unwrap_or(0) + 1 > depth {
                    continue;
                }
                extended = true;
                let mut counts2 = counts.clone();
                *counts2.entry(to).or_insert(0) += 1;
                let mut seq2 = seq.clone();
                seq2.extend(callbacks.iter().cloned());
                work.push((to, counts2, seq2));
            }
        }
        if !extended {
            results.insert(seq);
        }
    }
    results.into_iter().collect()
}

fn cut_prefixes(maximal: &[Vec<String>], cut_set: &BTreeSet<String>) -> Vec<Vec<String>> {
    let mut out: BTreeSet<Vec<String>> = BTreeSet::new();
    for seq in maximal {
        for (i, cb) in seq.iter().enumerate() {
            if cut_set.contains(cb) {
                out.insert(seq[..=i].to_vec());
            }
        }
    }
    out.into_iter().collect()
}

/// Release callbacks of `spec` the component's lifecycle can invoke, in
/// specification order.
fn invoked_release_callbacks(component: &Component, spec: &ResourceSpec) -> Vec<String> {
    spec.release_callbacks
        .iter()
        .filter(|cb| {
            component.lifecycle.edges.iter().any(|e| e.callbacks.contains(cb))
        })
        .cloned()
        .collect()
}

fn policy_callback(
    component: &Component,
    spec: &ResourceSpec,
    policy: ReleasePolicy,
) -> Result<String, AnalysisError> {
    let present = invoked_release_callbacks(component, spec);
    let chosen = match policy {
        ReleasePolicy::Early => present.first(),
        ReleasePolicy::Late => present.last(),
    };
    chosen.cloned().ok_or_else(|| AnalysisError::NoReleaseCallback {
        component: component.name.clone(),
        lifecycle: component.lifecycle_name.clone(),
        resource: spec.name.clone(),
    })
}

/// Enumerates the component's depth-bounded callback sequences and the cut
/// prefixes ending after each release-callback occurrence. Errors when the
/// lifecycle never invokes any of the specification's release callbacks.
pub fn unroll_callbacks(
    component: &Component,
    spec: &ResourceSpec,
    depth: usize,
) -> Result<Unrolling, AnalysisError> {
    let present = invoked_release_callbacks(component, spec);
    if present.is_empty() {
        return Err(AnalysisError::NoReleaseCallback {
            component: component.name.clone(),
            lifecycle: component.lifecycle_name.clone(),
            resource: spec.name.clone(),
        });
    }
    let maximal = maximal_sequences(component, depth);
    let cut_sequences = cut_prefixes(&maximal, &present.into_iter().collect());
    Ok(Unrolling { cut_sequences, maximal_sequences: maximal })
}

// ---------------------------------------------------------------------------
// Whole-app analysis
// ---------------------------------------------------------------------------

/// The concatenated summarized bodies of the implemented callbacks in `seq`.
/// Unimplemented callbacks contribute nothing (but stay in sequence labels).
fn sequence_rfg(
    component: &Component,
    seq: &[String],
    summaries: &BTreeMap<String, Rfg>,
) -> Rfg {
    let parts: Vec<&Rfg> = seq
        .iter()
        .filter_map(|cb| component.callbacks.get(cb))
        .filter_map(|proc| summaries.get(proc))
        .collect();
    Rfg::concat(format!("{}[{}]", component.name, seq.join(" ")), &parts)
}

/// Detects leaks of `spec` across `app`.
///
/// For every component, lifecycle sequences are cut after each occurrence of
/// the policy-selected release callback; a leak is an acquire that can still
/// be pending at the end of such a sequence. Reports are deduplicated by
/// (component, acquire origin, release callback) and ordered by component,
/// then cut sequence, then acquire origin.
pub fn analyze(
    app: &AppModel,
    spec: &ResourceSpec,
    opts: &AnalysisOptions,
) -> Result<AnalysisResult, AnalysisError> {
    let (summaries, warnings) = summarize(app, spec, UseMode::Ignore);
    let mut reports = Vec::new();
    let mut seen: BTreeSet<(String, Origin, String)> = BTreeSet::new();
    for component in &app.components {
        let cb = policy_callback(component, spec, opts.policy)?;
        let maximal = maximal_sequences(component, opts.depth);
        let cuts = cut_prefixes(&maximal, &[cb.clone()].into());
        for seq in cuts {
            let rfg = sequence_rfg(component, &seq, &summaries);
            let paths = leak_product(&rfg, spec, UseMode::Ignore);
            for (class, w) in &paths.classes {
                let PathClass::Pending(Some(origin)) = class else {
                    continue;
                };
                let key = (component.name.clone(), origin.clone(), cb.clone());
                if !seen.insert(key) {
                    continue;
                }
                let mut symbols = Vec::with_capacity(w.symbols.len() + 2);
                let mut origins = Vec::with_capacity(w.symbols.len() + 2);
                symbols.push(crate::automata::FRAME_ENTRY.to_string());
                origins.push(None);
                symbols.extend(w.symbols.iter().cloned());
                origins.extend(w.origins.iter().cloned());
                symbols.push(crate::automata::FRAME_EXIT.to_string());
                origins.push(None);
                reports.push(LeakReport {
                    component: component.name.clone(),
                    resource: spec.name.clone(),
                    acquire: origin.clone(),
                    release_callback: cb.clone(),
                    callback_sequence: seq.clone(),
                    witness: LeakWitness { symbols, origins },
                });
            }
        }
    }
    Ok(AnalysisResult { reports, warnings })
}

/// Checks `app` against the extended protocol property.
///
/// Residual leaks (`NewLeak`) are acquires still pending at the end of a
/// policy-cut sequence. `UseAfterRelease` and `DoubleRelease` are flagged
/// along maximal depth-bounded sequences, so misuse beyond the cut is still
/// seen. Guarded releases release exactly when held and never violate.
/// Violations are deduplicated by (component, kind, origin).
pub fn validate(
    app: &AppModel,
    spec: &ResourceSpec,
    opts: &AnalysisOptions,
) -> Result<Validation, AnalysisError> {
    let (summaries, _) = summarize(app, spec, UseMode::Track);
    let mut violations: BTreeSet<Violation> = BTreeSet::new();
    for component in &app.components {
        let cb = policy_callback(component, spec, opts.policy)?;
        let maximal = maximal_sequences(component, opts.depth);
        for seq in cut_prefixes(&maximal, &[cb.clone()].into()) {
            let rfg = sequence_rfg(component, &seq, &summaries);
            let paths = leak_product(&rfg, spec, UseMode::Track);
            for class in paths.classes.keys() {
                if let PathClass::Pending(Some(origin)) = class {
                    violations.insert(Violation {
                        component: component.name.clone(),
                        kind: ViolationKind::NewLeak,
                        origin: origin.clone(),
                    });
                }
            }
        }
        for seq in &maximal {
            let rfg = sequence_rfg(component, seq, &summaries);
            let paths = leak_product(&rfg, spec, UseMode::Track);
            for class in paths.classes.keys() {
                let PathClass::Sunk(kind, Some(origin)) = class else {
                    continue;
                };
                let kind = match kind {
                    SinkKind::DoubleRelease => ViolationKind::DoubleRelease,
                    SinkKind::UseAfterRelease => ViolationKind::UseAfterRelease,
                    SinkKind::AcquireWhileHeld => continue,
                };
                violations.insert(Violation {
                    component: component.name.clone(),
                    kind,
                    origin: origin.clone(),
                });
            }
        }
    }
    let violations: Vec<Violation> = violations.into_iter().collect();
    Ok(Validation { valid: violations.is_empty(), violations })
}
