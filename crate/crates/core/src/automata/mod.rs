//! Protocol automata for resource specifications and the language-level
//! machinery the leak check is defined with.
//!
//! A resource specification induces a protocol machine over framed strings
//! `s <op>... f`: a finite automaton when the resource is non-reentrant, a
//! pushdown automaton (one stack symbol per acquire operation) when nested
//! acquires must be balanced. A resource-flow graph induces a flow automaton
//! whose language is the set of framed operation strings of its paths. A
//! procedure can leak exactly when the flow language intersects the framed
//! complement of the protocol language, and the intersection's emptiness
//! check produces a shortest witness string.

mod fsa;
mod pda;
pub mod engine;

pub use engine::{Run, RunStep};
pub use fsa::Fsa;
pub use pda::{Pda, StackAction, Top};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ir::ResourceSpec;
use crate::rfg::{NodeKind, Rfg};

/// Frame symbol consumed when a procedure is entered.
pub const FRAME_ENTRY: &str = "s";
/// Frame symbol consumed when a procedure exits.
pub const FRAME_EXIT: &str = "f";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomataError {
    #[error("automaton is not deterministic")]
    NotDeterministic,
    #[error("alphabets differ on {0}")]
    AlphabetMismatch(String),
}

/// How `Use` nodes are rendered when building a flow automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UseMode {
    /// Use nodes are silent; paths differ only in acquire/release behavior.
    Ignore,
    /// Use nodes read the symbol `use`.
    Track,
}

/// Symbol read when a guarded release of `api` executes.
pub fn rif_symbol(api: &str) -> String {
    format!("rif:{api}")
}

/// Symbol read by a flow automaton when control leaves `kind`, or `None`
/// when the node is silent.
fn node_symbol(kind: &NodeKind, mode: UseMode) -> Option<String> {
    match kind {
        NodeKind::Entry => Some(FRAME_ENTRY.to_string()),
        NodeKind::Acquire { api, .. } | NodeKind::Release { api, .. } => Some(api.clone()),
        NodeKind::ReleaseIfHeld { api, .. } => Some(rif_symbol(api)),
        NodeKind::Use { .. } => match mode {
            UseMode::Ignore => None,
            UseMode::Track => Some("use".to_string()),
        },
        NodeKind::Exit
        | NodeKind::Trivial
        | NodeKind::ExitMarker
        | NodeKind::Transfer { .. } => None,
    }
}

/// Accepted string plus the state labels it visits, silent hops included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub symbols: Vec<String>,
    pub states: Vec<String>,
}

/// Protocol machine of a resource specification over framed strings.
#[derive(Debug, Clone)]
pub enum ResourceAutomaton {
    Fsa(Fsa),
    Pda(Pda),
}

/// Builds the protocol machine for `spec`.
///
/// Non-reentrant: a DFA `s ((a_k r_k) for any pair k)* f` where each acquire
/// moves to a held state that only its paired releases leave.
/// Reentrant: a PDA that pushes one symbol per acquire and pops it on a
/// paired release, so releases must match the most recent acquire and the
/// frame can only close on an empty stack.
pub fn resource_automaton(spec: &ResourceSpec) -> ResourceAutomaton {
    let mut alphabet: BTreeSet<String> = [FRAME_ENTRY.to_string(), FRAME_EXIT.to_string()].into();
    for (a, r) in &spec.pairs {
        alphabet.insert(a.clone());
        alphabet.insert(r.clone());
    }
    if spec.reentrant {
        let stack: BTreeSet<String> =
            spec.acquire_ops().into_iter().map(str::to_string).collect();
        let mut p = Pda::new(alphabet, stack.iter().cloned());
        let q0 = p.add_state("start");
        let q1 = p.add_state("main");
        let q2 = p.add_state("done");
        p.set_initial(q0);
        p.mark_final(q2);
        p.add_rule(q0, FRAME_ENTRY, Top::Bottom, q1, StackAction::Stay);
        p.add_rule(q1, FRAME_EXIT, Top::Bottom, q2, StackAction::Stay);
        for a in &stack {
            p.add_rule(q1, a, Top::Bottom, q1, StackAction::Push(a.clone()));
            for below in &stack {
                p.add_rule(q1, a, Top::Sym(below.clone()), q1, StackAction::Push(a.clone()));
            }
        }
        for (a, r) in &spec.pairs {
            p.add_rule(q1, r, Top::Sym(a.clone()), q1, StackAction::Pop);
        }
        ResourceAutomaton::Pda(p)
    } else {
        let mut m = Fsa::new(alphabet);
        let start = m.add_state("start");
        let free = m.add_state("free");
        let done = m.add_state("done");
        m.set_initial(start);
        m.mark_final(done);
        m.add_edge(start, FRAME_ENTRY, free);
        m.add_edge(free, FRAME_EXIT, done);
        for a in spec.acquire_ops() {
            let held = m.add_state(format!("held:{a}"));
            m.add_edge(free, a, held);
            for (pa, r) in &spec.pairs {
                if *pa == a {
                    m.add_edge(held, r, free);
                }
            }
        }
        ResourceAutomaton::Fsa(m)
    }
}

/// DFA for `s (anything but s or f)* f` over `alphabet`, which must contain
/// both frame symbols.
pub fn frame_checker(alphabet: &BTreeSet<String>) -> Fsa {
    debug_assert!(alphabet.contains(FRAME_ENTRY) && alphabet.contains(FRAME_EXIT));
    let mut d = Fsa::new(alphabet.iter().cloned());
    let pre = d.add_state("pre");
    let mid = d.add_state("mid");
    let post = d.add_state("post");
    d.set_initial(pre);
    d.mark_final(post);
    d.add_edge(pre, FRAME_ENTRY, mid);
    for sym in alphabet {
        if sym != FRAME_ENTRY && sym != FRAME_EXIT {
            d.add_edge(mid, sym, mid);
        }
    }
    d.add_edge(mid, FRAME_EXIT, post);
    d
}

impl ResourceAutomaton {
    pub fn accepts(&self, input: &[&str]) -> bool {
        match self {
            ResourceAutomaton::Fsa(m) => m.accepts(input),
            ResourceAutomaton::Pda(p) => p.accepts(input),
        }
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        match self {
            ResourceAutomaton::Fsa(m) => m.alphabet(),
            ResourceAutomaton::Pda(p) => p.alphabet(),
        }
    }

    /// Framed complement: accepts a string iff it has the shape
    /// `s (anything but s or f)* f` and this machine rejects it.
    pub fn complement(&self) -> ResourceAutomaton {
        match self {
            ResourceAutomaton::Fsa(m) => {
                let det = if m.is_deterministic() { m.clone() } else { m.determinize() };
                let flipped = det.complement().expect("determinized machine");
                let framed = flipped
                    .intersect(&frame_checker(m.alphabet()))
                    .expect("frame checker shares the alphabet");
                ResourceAutomaton::Fsa(framed)
            }
            ResourceAutomaton::Pda(p) => {
                let flipped = p.complement();
                let framed = flipped
                    .intersect_dfa(&frame_checker(p.alphabet()))
                    .expect("frame checker shares the alphabet");
                ResourceAutomaton::Pda(framed)
            }
        }
    }

    /// Product with a flow automaton. `flow` must be deterministic; its
    /// alphabet may be a subset of this machine's and is widened to match,
    /// but symbols unknown to this machine are an error.
    pub fn intersect(&self, flow: &Fsa) -> Result<ResourceAutomaton, AutomataError> {
        if !flow.alphabet().is_subset(self.alphabet()) {
            let extra: Vec<&String> =
                flow.alphabet().difference(self.alphabet()).collect();
            return Err(AutomataError::AlphabetMismatch(format!("{extra:?}")));
        }
        let mut flow = flow.clone();
        flow.widen_alphabet(self.alphabet().iter().cloned());
        match self {
            ResourceAutomaton::Fsa(m) => {
                let det = if flow.is_deterministic() { flow } else { flow.determinize() };
                Ok(ResourceAutomaton::Fsa(m.intersect(&det)?))
            }
            ResourceAutomaton::Pda(p) => Ok(ResourceAutomaton::Pda(p.intersect_dfa(&flow)?)),
        }
    }

    /// Shortest accepted string, or `None` when the language is empty.
    pub fn emptiness(&self) -> Option<Witness> {
        match self {
            ResourceAutomaton::Fsa(m) => m.shortest_accepted().map(|run| witness_of(&run, |s| {
                m.label(s).to_string()
            })),
            ResourceAutomaton::Pda(p) => p.shortest_accepted().map(|run| witness_of(&run, |s| {
                p.label(s).to_string()
            })),
        }
    }
}

fn witness_of(run: &Run<usize, String>, label: impl Fn(usize) -> String) -> Witness {
    let mut states = Vec::with_capacity(run.steps.len() + 1);
    if let Some(step) = run.steps.first() {
        states.push(label(step.from));
    }
    for step in &run.steps {
        states.push(label(step.to));
    }
    Witness { symbols: run.symbols.clone(), states }
}

/// Finite description of the framed operation strings of every
/// entry-to-exit path of `rfg`, determinized by subset construction.
///
/// The automaton reads the symbol of a node when control leaves it: `s` at
/// the entry, the operation name at acquire/release nodes, `rif:<api>` at
/// guarded releases, `use` at use nodes when `mode` tracks them, and nothing
/// at structural nodes. A final transition on `f` closes the frame at the
/// exit.
pub fn flow_automaton(rfg: &Rfg, mode: UseMode) -> Fsa {
    let mut alphabet: BTreeSet<String> =
        [FRAME_ENTRY.to_string(), FRAME_EXIT.to_string()].into();
    for (_, node) in rfg.nodes() {
        if let Some(sym) = node_symbol(&node.kind, mode) {
            alphabet.insert(sym);
        }
    }
    let mut nfa = Fsa::new(alphabet);
    for (id, _) in rfg.nodes() {
        nfa.add_state(format!("n{id}"));
    }
    let acc = nfa.add_state("acc");
    nfa.set_initial(rfg.entry());
    nfa.mark_final(acc);
    for (m, node) in rfg.nodes() {
        let sym = node_symbol(&node.kind, mode);
        for t in rfg.successors(m) {
            match &sym {
                Some(sym) => nfa.add_edge(m, sym, t),
                None => nfa.add_eps(m, t),
            }
        }
    }
    nfa.add_edge(rfg.exit(), FRAME_EXIT, acc);
    nfa.determinize()
}
