//! Finite-state automata over string alphabets.
//!
//! Machines may be nondeterministic and carry silent edges; `determinize`
//! produces an equivalent DFA by subset construction. Transition maps may be
//! partial: a missing transition rejects. `complete` closes a deterministic
//! machine with an explicit dead state so its complement can be taken by
//! flipping the accepting set.

use std::collections::{BTreeMap, BTreeSet};

use super::engine::{self, Move, PushdownSystem, Run, StackOp, SysMove};
use super::AutomataError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fsa {
    alphabet: BTreeSet<String>,
    labels: Vec<String>,
    initial: usize,
    finals: BTreeSet<usize>,
    delta: Vec<BTreeMap<String, BTreeSet<usize>>>,
    eps: Vec<BTreeSet<usize>>,
}

impl Fsa {
    pub fn new<I, S>(alphabet: I) -> Fsa
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Fsa {
            alphabet: alphabet.into_iter().map(Into::into).collect(),
            labels: Vec::new(),
            initial: 0,
            finals: BTreeSet::new(),
            delta: Vec::new(),
            eps: Vec::new(),
        }
    }

    pub fn add_state(&mut self, label: impl Into<String>) -> usize {
        self.labels.push(label.into());
        self.delta.push(BTreeMap::new());
        self.eps.push(BTreeSet::new());
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

    pub fn add_edge(&mut self, from: usize, symbol: &str, to: usize) {
        assert!(self.alphabet.contains(symbol), "symbol {symbol:?} not in alphabet");
        assert!(from < self.labels.len() && to < self.labels.len());
        self.delta[from].entry(symbol.to_string()).or_default().insert(to);
    }

    pub fn add_eps(&mut self, from: usize, to: usize) {
        assert!(from < self.labels.len() && to < self.labels.len());
        self.eps[from].insert(to);
    }

    /// Grows the alphabet; existing transitions are unaffected, so the new
    /// symbols reject everywhere until edges are added.
    pub fn widen_alphabet<I, S>(&mut self, symbols: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.alphabet.extend(symbols.into_iter().map(Into::into));
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
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

    /// The unique successor on `symbol`, meaningful for deterministic
    /// machines; `None` where the transition map is partial.
    pub fn step(&self, state: usize, symbol: &str) -> Option<usize> {
        self.delta[state].get(symbol).and_then(|ts| ts.iter().next().copied())
    }

    fn eps_closure(&self, set: &mut BTreeSet<usize>) {
        let mut work: Vec<usize> = set.iter().copied().collect();
        while let Some(s) = work.pop() {
            for &t in &self.eps[s] {
                if set.insert(t) {
                    work.push(t);
                }
            }
        }
    }

    pub fn accepts(&self, input: &[&str]) -> bool {
        if self.labels.is_empty() {
            return false;
        }
        let mut cur: BTreeSet<usize> = [self.initial].into();
        self.eps_closure(&mut cur);
        for sym in input {
            if !self.alphabet.contains(*sym) {
                return false;
            }
            let mut next = BTreeSet::new();
            for &s in &cur {
                if let Some(ts) = self.delta[s].get(*sym) {
                    next.extend(ts.iter().copied());
                }
            }
            self.eps_closure(&mut next);
            if next.is_empty() {
                return false;
            }
            cur = next;
        }
        cur.iter().any(|s| self.finals.contains(s))
    }

    /// No silent edges and at most one target per (state, symbol).
    pub fn is_deterministic(&self) -> bool {
        self.eps.iter().all(BTreeSet::is_empty)
            && self.delta.iter().all(|row| row.values().all(|ts| ts.len() <= 1))
    }

    /// Subset construction. The result is deterministic, silent-free, and
    /// possibly partial; its state labels list the member states.
    pub fn determinize(&self) -> Fsa {
        let mut out = Fsa::new(self.alphabet.iter().cloned());
        if self.labels.is_empty() {
            out.add_state("{}");
            return out;
        }
        let mut start: BTreeSet<usize> = [self.initial].into();
        self.eps_closure(&mut start);
        let mut ids: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::new();
        let label = |set: &BTreeSet<usize>| {
            let inner: Vec<String> = set.iter().map(|s| s.to_string()).collect();
            format!("{{{}}}", inner.join(","))
        };
        let s0 = out.add_state(label(&start));
        ids.insert(start.clone(), s0);
        out.set_initial(s0);
        let mut work = vec![start];
        while let Some(set) = work.pop() {
            let from = ids[&set];
            if set.iter().any(|s| self.finals.contains(s)) {
                out.mark_final(from);
            }
            for sym in &self.alphabet {
                let mut next = BTreeSet::new();
                for &s in &set {
                    if let Some(ts) = self.delta[s].get(sym) {
                        next.extend(ts.iter().copied());
                    }
                }
                self.eps_closure(&mut next);
                if next.is_empty() {
                    continue;
                }
                let to = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = out.add_state(label(&next));
                        ids.insert(next.clone(), id);
                        work.push(next.clone());
                        id
                    }
                };
                out.add_edge(from, sym, to);
            }
        }
        out
    }

    /// Adds a dead state so every (state, symbol) has a transition.
    /// Requires a deterministic machine.
    pub fn complete(&self) -> Result<Fsa, AutomataError> {
        if !self.is_deterministic() {
            return Err(AutomataError::NotDeterministic);
        }
        let mut out = self.clone();
        if out.labels.is_empty() {
            out.add_state("dead");
        }
        let mut missing: Vec<(usize, String)> = Vec::new();
        for s in 0..out.labels.len() {
            for sym in &out.alphabet {
                if !out.delta[s].contains_key(sym) {
                    missing.push((s, sym.clone()));
                }
            }
        }
        if missing.is_empty() {
            return Ok(out);
        }
        let dead = out.add_state("dead");
        for (s, sym) in missing {
            out.add_edge(s, &sym, dead);
        }
        for sym in out.alphabet.clone() {
            out.add_edge(dead, &sym, dead);
        }
        Ok(out)
    }

    /// Accepts exactly the strings over the alphabet this machine rejects.
    pub fn complement(&self) -> Result<Fsa, AutomataError> {
        let mut out = self.complete()?;
        out.finals = (0..out.labels.len()).filter(|s| !out.finals.contains(s)).collect();
        Ok(out)
    }

    /// Product automaton accepting the intersection of both languages.
    /// Alphabets must agree exactly.
    pub fn intersect(&self, other: &Fsa) -> Result<Fsa, AutomataError> {
        if self.alphabet != other.alphabet {
            let diff: Vec<&String> =
                self.alphabet.symmetric_difference(&other.alphabet).collect();
            return Err(AutomataError::AlphabetMismatch(format!("{diff:?}")));
        }
        let mut out = Fsa::new(self.alphabet.iter().cloned());
        if self.labels.is_empty() || other.labels.is_empty() {
            out.add_state("(-,-)");
            return Ok(out);
        }
        let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let start = (self.initial, other.initial);
        let label = |p: usize, q: usize| format!("({},{})", self.labels[p], other.labels[q]);
        let s0 = out.add_state(label(start.0, start.1));
        ids.insert(start, s0);
        out.set_initial(s0);
        let mut work = vec![start];
        while let Some((p, q)) = work.pop() {
            let from = ids[&(p, q)];
            if self.finals.contains(&p) && other.finals.contains(&q) {
                out.mark_final(from);
            }
            let mut succs: Vec<(Option<String>, (usize, usize))> = Vec::new();
            for &p2 in &self.eps[p] {
                succs.push((None, (p2, q)));
            }
            for &q2 in &other.eps[q] {
                succs.push((None, (p, q2)));
            }
            for (sym, ps) in &self.delta[p] {
                if let Some(qs) = other.delta[q].get(sym) {
                    for &p2 in ps {
                        for &q2 in qs {
                            succs.push((Some(sym.clone()), (p2, q2)));
                        }
                    }
                }
            }
            for (sym, to) in succs {
                let id = match ids.get(&to) {
                    Some(&id) => id,
                    None => {
                        let id = out.add_state(label(to.0, to.1));
                        ids.insert(to, id);
                        work.push(to);
                        id
                    }
                };
                match sym {
                    Some(sym) => out.add_edge(from, &sym, id),
                    None => out.add_eps(from, id),
                }
            }
        }
        Ok(out)
    }

    /// Shortest accepted string (then lexicographically least), with the
    /// run that produces it. `None` when the language is empty.
    pub fn shortest_accepted(&self) -> Option<Run<usize, String>> {
        if self.labels.is_empty() {
            return None;
        }
        let ex = engine::explore(&FsaSystem(self));
        let best = ex.best(|s, _| self.finals.contains(s))?;
        Some(ex.run(&best))
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_accepted().is_none()
    }
}

struct FsaSystem<'a>(&'a Fsa);

impl PushdownSystem for FsaSystem<'_> {
    type State = usize;
    type Sym = String;
    type Stack = ();

    fn initial(&self) -> usize {
        self.0.initial
    }

    fn moves(&self, state: &usize, _top: Option<&()>) -> Vec<SysMove<Self>> {
        let mut out = Vec::new();
        for &t in &self.0.eps[*state] {
            out.push(Move { symbol: None, action: StackOp::Stay, to: t });
        }
        for (sym, ts) in &self.0.delta[*state] {
            for &t in ts {
                out.push(Move { symbol: Some(sym.clone()), action: StackOp::Stay, to: t });
            }
        }
        out
    }
}
