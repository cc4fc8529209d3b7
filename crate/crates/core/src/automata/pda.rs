//! Deterministic pushdown automata with top-of-stack rule dispatch.
//!
//! Every rule is keyed by (state, input symbol, top of stack), so the rule
//! map itself guarantees determinism. The stack bottom is a distinguished
//! `Top::Bottom` that is never pushed or popped. A configuration with no
//! applicable rule rejects; `complete` closes the machine with a dead state
//! so the accepting set can be flipped to complement the language.
//! Acceptance is by final state.

use std::collections::{BTreeMap, BTreeSet};

use super::engine::{self, Move, PushdownSystem, Run, StackOp, SysMove};
use super::fsa::Fsa;
use super::AutomataError;

/// Top-of-stack pattern a rule dispatches on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Top {
    Bottom,
    Sym(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum StackAction {
    Stay,
    Push(String),
    Pop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pda {
    alphabet: BTreeSet<String>,
    stack_alphabet: BTreeSet<String>,
    labels: Vec<String>,
    initial: usize,
    finals: BTreeSet<usize>,
    rules: BTreeMap<(usize, String, Top), (usize, StackAction)>,
}

impl Pda {
    pub fn new<I, J, S, U>(alphabet: I, stack_alphabet: J) -> Pda
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = U>,
        S: Into<String>,
        U: Into<String>,
    {
        Pda {
            alphabet: alphabet.into_iter().map(Into::into).collect(),
            stack_alphabet: stack_alphabet.into_iter().map(Into::into).collect(),
            labels: Vec::new(),
            initial: 0,
            finals: BTreeSet::new(),
            rules: BTreeMap::new(),
        }
    }

    pub fn add_state(&mut self, label: impl Into<String>) -> usize {
        self.labels.push(label.into());
        self.labels.len() - 1
    }

    pub fn set_initial(&mut self, state: usize) {
        assert!(state < self.labels.len());
        self.initial = state;
    }

    pub fn mark_final(&mut self, state: usize) {
        assert!(state < self.labels.len());
        self.finals.insert(state);
    }

    pub fn add_rule(&mut self, from: usize, symbol: &str, top: Top, to: usize, action: StackAction) {
        assert!(self.alphabet.contains(symbol), "symbol {symbol:?} not in alphabet");
        assert!(from < self.labels.len() && to < self.labels.len());
        if let Top::Sym(g) = &top {
            assert!(self.stack_alphabet.contains(g), "stack symbol {g:?} not declared");
        }
        if let StackAction::Push(g) = &action {
            assert!(self.stack_alphabet.contains(g), "stack symbol {g:?} not declared");
        }
        if let (Top::Bottom, StackAction::Pop) = (&top, &action) {
            panic!("rule pops the stack bottom");
        }
        let prev = self.rules.insert((from, symbol.to_string(), top), (to, action));
        assert!(prev.is_none(), "duplicate rule for (state, symbol, top)");
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn stack_alphabet(&self) -> &BTreeSet<String> {
        &self.stack_alphabet
    }

    pub fn state_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<usize> {
        &self.finals
    }

    pub fn accepts(&self, input: &[&str]) -> bool {
        if self.labels.is_empty() {
            return false;
        }
        let mut state = self.initial;
        let mut stack: Vec<String> = Vec::new();
        for sym in input {
            if !self.alphabet.contains(*sym) {
                return false;
            }
            let top = match stack.last() {
                Some(g) => Top::Sym(g.clone()),
                None => Top::Bottom,
            };
            match self.rules.get(&(state, sym.to_string(), top)) {
                None => return false,
                Some((to, action)) => {
                    match action {
                        StackAction::Stay => {}
                        StackAction::Push(g) => stack.push(g.clone()),
                        StackAction::Pop => {
                            stack.pop();
                        }
                    }
                    state = *to;
                }
            }
        }
        self.finals.contains(&state)
    }

    /// Adds a dead state so every (state, symbol, top) has a rule.
    pub fn complete(&self) -> Pda {
        let mut out = self.clone();
        if out.labels.is_empty() {
            out.add_state("dead");
        }
        let mut tops: Vec<Top> = vec![Top::Bottom];
        tops.extend(out.stack_alphabet.iter().map(|g| Top::Sym(g.clone())));
        let mut missing: Vec<(usize, String, Top)> = Vec::new();
        for s in 0..out.labels.len() {
            for sym in &out.alphabet {
                for top in &tops {
                    if !out.rules.contains_key(&(s, sym.clone(), top.clone())) {
                        missing.push((s, sym.clone(), top.clone()));
                    }
                }
            }
        }
        if missing.is_empty() {
            return out;
        }
        let dead = out.add_state("dead");
        for (s, sym, top) in missing {
            out.add_rule(s, &sym, top, dead, StackAction::Stay);
        }
        for sym in out.alphabet.clone() {
            for top in &tops {
                out.add_rule(dead, &sym, top.clone(), dead, StackAction::Stay);
            }
        }
        out
    }

    /// Accepts exactly the strings over the alphabet this machine rejects.
    /// Valid because the machine is deterministic and `complete` makes every
    /// configuration step.
    pub fn complement(&self) -> Pda {
        let mut out = self.complete();
        out.finals = (0..out.labels.len()).filter(|s| !out.finals.contains(s)).collect();
        out
    }

    /// Product with a deterministic silent-free automaton over the same
    /// alphabet; the stack discipline is inherited from `self`. The product
    /// accepts the intersection of both languages.
    pub fn intersect_dfa(&self, dfa: &Fsa) -> Result<Pda, AutomataError> {
        if self.alphabet != *dfa.alphabet() {
            let diff: Vec<&String> =
                self.alphabet.symmetric_difference(dfa.alphabet()).collect();
            return Err(AutomataError::AlphabetMismatch(format!("{diff:?}")));
        }
        if !dfa.is_deterministic() {
            return Err(AutomataError::NotDeterministic);
        }
        let mut out = Pda::new(
            self.alphabet.iter().cloned(),
            self.stack_alphabet.iter().cloned(),
        );
        if self.labels.is_empty() || dfa.state_count() == 0 {
            out.add_state("(-,-)");
            return Ok(out);
        }
        let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let start = (self.initial, dfa.initial());
        let s0 = out.add_state(format!("({},{})", self.labels[start.0], dfa.label(start.1)));
        ids.insert(start, s0);
        out.set_initial(s0);
        let mut work = vec![start];
        while let Some((p, q)) = work.pop() {
            let from = ids[&(p, q)];
            if self.finals.contains(&p) && dfa.finals().contains(&q) {
                out.mark_final(from);
            }
            for ((rp, sym, top), (to, action)) in &self.rules {
                if *rp != p {
                    continue;
                }
                let Some(q2) = dfa.step(q, sym) else {
                    continue;
                };
                let key = (*to, q2);
                let id = match ids.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = out
                            .add_state(format!("({},{})", self.labels[*to], dfa.label(q2)));
                        ids.insert(key, id);
                        work.push(key);
                        id
                    }
                };
                out.add_rule(from, sym, top.clone(), id, action.clone());
            }
        }
        Ok(out)
    }

    /// Shortest accepted string (then lexicographically least) with its run.
    /// `None` when the language is empty.
    pub fn shortest_accepted(&self) -> Option<Run<usize, String>> {
        if self.labels.is_empty() {
            return None;
        }
        let ex = engine::explore(&PdaSystem(self));
        let best = ex.best(|s, _| self.finals.contains(s))?;
        Some(ex.run(&best))
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_accepted().is_none()
    }
}

struct PdaSystem<'a>(&'a Pda);

impl PushdownSystem for PdaSystem<'_> {
    type State = usize;
    type Sym = String;
    type Stack = String;

    fn initial(&self) -> usize {
        self.0.initial
    }

    fn moves(&self, state: &usize, top: Option<&String>) -> Vec<SysMove<Self>> {
        let t = match top {
            Some(g) => Top::Sym(g.clone()),
            None => Top::Bottom,
        };
        let mut out = Vec::new();
        for sym in &self.0.alphabet {
            if let Some((to, action)) = self.0.rules.get(&(*state, sym.clone(), t.clone())) {
                let action = match action {
                    StackAction::Stay => StackOp::Stay,
                    StackAction::Push(g) => StackOp::Push(g.clone()),
                    StackAction::Pop => StackOp::Pop,
                };
                out.push(Move { symbol: Some(sym.clone()), action, to: *to });
            }
        }
        out
    }
}
