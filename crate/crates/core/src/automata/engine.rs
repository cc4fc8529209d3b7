//! Weighted reachability for pushdown transition systems.
//!
//! Given a (possibly nondeterministic) pushdown system, computes every
//! reachable (control state, top-of-stack) pair together with a minimal
//! input string reaching it, where strings are ordered by length and then
//! lexicographically. Finite-state systems are the degenerate case with no
//! push moves and explore in plain Dijkstra fashion.
//!
//! The tabulation processes two item kinds in cost order:
//!
//! - `Rt(q, t)`: some run from the initial configuration ends in state `q`
//!   with `t` on top of the stack (`None` meaning the stack is empty).
//! - `Sl(p, g, q)`: a balanced excursion; from state `p` just after `g` was
//!   pushed, state `q` is reachable with that same `g` back on top.
//!
//! Pop moves are resolved only where the symbol below the top is known,
//! i.e. against the recorded contexts of matching push moves. Items are
//! settled in nondecreasing cost order and every rule combines settled
//! inputs only, so the first settled cost of an item is its minimum.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::rc::Rc;

/// A transition system with one unbounded stack.
///
/// `moves` must be a pure function of `(state, top)`; the engine sorts the
/// returned moves itself, so their order does not matter.
pub trait PushdownSystem {
    type State: Ord + Clone;
    type Sym: Ord + Clone;
    type Stack: Ord + Clone;

    fn initial(&self) -> Self::State;

    /// Moves enabled in `state` when `top` is on the stack (`None` = empty).
    /// A `Pop` move returned while the stack is empty is ignored.
    fn moves(&self, state: &Self::State, top: Option<&Self::Stack>) -> Vec<SysMove<Self>>;
}

pub type SysMove<T> = Move<
    <T as PushdownSystem>::State,
    <T as PushdownSystem>::Sym,
    <T as PushdownSystem>::Stack,
>;

/// One enabled move: an optional input symbol, a stack action, a successor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Move<St, Sy, Ga> {
    pub symbol: Option<Sy>,
    pub action: StackOp<Ga>,
    pub to: St,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum StackOp<G> {
    Stay,
    Push(G),
    Pop,
}

/// A reconstructed run: the consumed symbols plus every move taken,
/// including silent ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run<St, Sy> {
    pub symbols: Vec<Sy>,
    pub steps: Vec<RunStep<St, Sy>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStep<St, Sy> {
    pub from: St,
    pub symbol: Option<Sy>,
    pub to: St,
}

/// Handle to one settled `(state, top)` fact.
#[derive(Debug, Clone, Copy)]
pub struct Reached<'a, St, Ga> {
    pub state: &'a St,
    pub top: Option<&'a Ga>,
    /// Number of consumed symbols on the cheapest run to this fact.
    pub len: u32,
    item: usize,
}

// Persistent concatenation rope over input symbols. Costs are concatenated
// on every rule application, so sharing keeps that O(1).
#[derive(Clone)]
struct Rope<Sy> {
    len: u32,
    node: Option<Rc<RopeNode<Sy>>>,
}

enum RopeNode<Sy> {
    Leaf(Sy),
    Cat(Rope<Sy>, Rope<Sy>),
}

impl<Sy> Rope<Sy> {
    fn empty() -> Self {
        Rope { len: 0, node: None }
    }

    fn iter(&self) -> RopeIter<'_, Sy> {
        RopeIter { stack: vec![self] }
    }
}

impl<Sy: Clone> Rope<Sy> {

    fn leaf(sym: Sy) -> Self {
        Rope { len: 1, node: Some(Rc::new(RopeNode::Leaf(sym))) }
    }

    fn cat(a: &Rope<Sy>, b: &Rope<Sy>) -> Rope<Sy> {
        if a.len == 0 {
            return b.clone();
        }
        if b.len == 0 {
            return a.clone();
        }
        Rope {
            len: a.len + b.len,
            node: Some(Rc::new(RopeNode::Cat(a.clone(), b.clone()))),
        }
    }

    fn append(&self, sym: &Option<Sy>) -> Rope<Sy> {
        match sym {
            None => self.clone(),
            Some(s) => Rope::cat(self, &Rope::leaf(s.clone())),
        }
    }

    fn to_vec(&self) -> Vec<Sy> {
        self.iter().cloned().collect()
    }
}

struct RopeIter<'a, Sy> {
    stack: Vec<&'a Rope<Sy>>,
}

impl<'a, Sy> Iterator for RopeIter<'a, Sy> {
    type Item = &'a Sy;

    fn next(&mut self) -> Option<&'a Sy> {
        while let Some(rope) = self.stack.pop() {
            match rope.node.as_deref() {
                None => continue,
                Some(RopeNode::Leaf(sym)) => return Some(sym),
                Some(RopeNode::Cat(a, b)) => {
                    self.stack.push(b);
                    self.stack.push(a);
                }
            }
        }
        None
    }
}

fn rope_cmp<Sy: Ord>(a: &Rope<Sy>, b: &Rope<Sy>) -> Ordering {
    let mut ia = a.iter();
    let mut ib = b.iter();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => match x.cmp(y) {
                Ordering::Equal => continue,
                other => return other,
            },
        }
    }
}

fn cost_cmp<Sy: Ord>(alen: u32, arope: &Rope<Sy>, blen: u32, brope: &Rope<Sy>) -> Ordering {
    alen.cmp(&blen).then_with(|| rope_cmp(arope, brope))
}

// Heap key: (length, lexicographic string, insertion sequence).
struct HeapKey<Sy> {
    len: u32,
    rope: Rope<Sy>,
    seq: u64,
    item: usize,
}

impl<Sy: Ord> PartialEq for HeapKey<Sy> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<Sy: Ord> Eq for HeapKey<Sy> {}

impl<Sy: Ord> PartialOrd for HeapKey<Sy> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<Sy: Ord> Ord for HeapKey<Sy> {
    // Reversed so the BinaryHeap pops the minimum cost first.
    fn cmp(&self, other: &Self) -> Ordering {
        cost_cmp(self.len, &self.rope, other.len, &other.rope)
            .then_with(|| self.seq.cmp(&other.seq))
            .reverse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ItemKey {
    Rt { state: u32, top: Option<u32> },
    Sl { entry: u32, gamma: u32, state: u32 },
}

#[derive(Clone)]
struct MoveRec<Sy> {
    from: u32,
    sym: Option<Sy>,
    to: u32,
}

enum Deriv<Sy> {
    /// `Rt(q0, None)` with the empty string.
    Init,
    /// `Sl(q, g, q)` base fact with the empty string.
    SlBase,
    /// Parent item extended by one non-pop move at the same level.
    Step { parent: usize, mv: MoveRec<Sy> },
    /// `outer` + push + balanced excursion `inner` + pop.
    PopResolve { outer: usize, push: MoveRec<Sy>, inner: usize, pop: MoveRec<Sy> },
}

struct ItemData<Sy> {
    key: ItemKey,
    len: u32,
    rope: Rope<Sy>,
    deriv: Deriv<Sy>,
    settled: bool,
}

// Where to resume after the excursion opened by a recorded push returns.
enum Resume {
    Rt { below: Option<u32> },
    Sl { entry: u32, gamma: u32 },
}

struct Ctx<Sy> {
    parent: usize,
    push: MoveRec<Sy>,
    resume: Resume,
}

/// Exhaustive exploration result. Every reachable `(state, top)` fact is
/// settled with its minimal (length, then lexicographic) witness string.
pub struct Exploration<T: PushdownSystem> {
    states: Vec<T::State>,
    stacks: Vec<T::Stack>,
    items: Vec<ItemData<T::Sym>>,
    index: BTreeMap<ItemKey, usize>,
}

/// Runs the tabulation to exhaustion and returns the settled fact table.
pub fn explore<T: PushdownSystem>(sys: &T) -> Exploration<T> {
    Explorer::new(sys).run()
}

struct Explorer<'a, T: PushdownSystem> {
    sys: &'a T,
    states: Vec<T::State>,
    state_ids: BTreeMap<T::State, u32>,
    stacks: Vec<T::Stack>,
    stack_ids: BTreeMap<T::Stack, u32>,
    items: Vec<ItemData<T::Sym>>,
    index: BTreeMap<ItemKey, usize>,
    heap: BinaryHeap<HeapKey<T::Sym>>,
    seq: u64,
    // Keyed by (level entry state, pushed symbol).
    ctxs: BTreeMap<(u32, u32), Vec<Ctx<T::Sym>>>,
    settled_sl: BTreeMap<(u32, u32), Vec<usize>>,
}

impl<'a, T: PushdownSystem> Explorer<'a, T> {
    fn new(sys: &'a T) -> Self {
        Explorer {
            sys,
            states: Vec::new(),
            state_ids: BTreeMap::new(),
            stacks: Vec::new(),
            stack_ids: BTreeMap::new(),
            items: Vec::new(),
            index: BTreeMap::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            ctxs: BTreeMap::new(),
            settled_sl: BTreeMap::new(),
        }
    }

    fn intern_state(&mut self, s: T::State) -> u32 {
        if let Some(&id) = self.state_ids.get(&s) {
            return id;
        }
        let id = self.states.len() as u32;
        self.states.push(s.clone());
        self.state_ids.insert(s, id);
        id
    }

    fn intern_stack(&mut self, g: T::Stack) -> u32 {
        if let Some(&id) = self.stack_ids.get(&g) {
            return id;
        }
        let id = self.stacks.len() as u32;
        self.stacks.push(g.clone());
        self.stack_ids.insert(g, id);
        id
    }

    fn relax(&mut self, key: ItemKey, len: u32, rope: Rope<T::Sym>, deriv: Deriv<T::Sym>) {
        match self.index.get(&key) {
            None => {
                let item = self.items.len();
                self.items.push(ItemData { key, len, rope: rope.clone(), deriv, settled: false });
                self.index.insert(key, item);
                self.seq += 1;
                self.heap.push(HeapKey { len, rope, seq: self.seq, item });
            }
            Some(&item) => {
                let data = &mut self.items[item];
                if data.settled {
                    debug_assert!(
                        cost_cmp(len, &rope, data.len, &data.rope) != Ordering::Less,
                        "settled item relaxed with a cheaper cost"
                    );
                    return;
                }
                if cost_cmp(len, &rope, data.len, &data.rope) == Ordering::Less {
                    data.len = len;
                    data.rope = rope.clone();
                    data.deriv = deriv;
                    self.seq += 1;
                    self.heap.push(HeapKey { len, rope, seq: self.seq, item });
                }
            }
        }
    }

    fn sorted_moves(&self, state: u32, top: Option<u32>) -> Vec<SysMove<T>> {
        let st = &self.states[state as usize];
        let tp = top.map(|g| &self.stacks[g as usize]);
        let mut mvs = self.sys.moves(st, tp);
        mvs.sort();
        mvs.dedup();
        mvs
    }

    // Cost of `outer` + push symbol + `inner` + pop symbol.
    fn combine(
        &self,
        outer: usize,
        push: &MoveRec<T::Sym>,
        inner: usize,
        pop: &MoveRec<T::Sym>,
    ) -> (u32, Rope<T::Sym>) {
        let o = &self.items[outer];
        let i = &self.items[inner];
        let rope = o.rope.append(&push.sym);
        let rope = Rope::cat(&rope, &i.rope).append(&pop.sym);
        (rope.len, rope)
    }

    fn resolve(&mut self, ctx_at: (u32, u32), ctx_idx: usize, inner: usize, pop: MoveRec<T::Sym>) {
        let (outer, push, resume_key) = {
            let ctx = &self.ctxs[&ctx_at][ctx_idx];
            let resume = match ctx.resume {
                Resume::Rt { below } => ItemKey::Rt { state: pop.to, top: below },
                Resume::Sl { entry, gamma } => ItemKey::Sl { entry, gamma, state: pop.to },
            };
            (ctx.parent, ctx.push.clone(), resume)
        };
        let (len, rope) = self.combine(outer, &push, inner, &pop);
        self.relax(resume_key, len, rope, Deriv::PopResolve { outer, push, inner, pop });
    }

    fn register_ctx(&mut self, level_entry: u32, gamma: u32, ctx: Ctx<T::Sym>) {
        let key = (level_entry, gamma);
        // Base fact: the excursion of zero moves.
        self.relax(
            ItemKey::Sl { entry: level_entry, gamma, state: level_entry },
            0,
            Rope::empty(),
            Deriv::SlBase,
        );
        self.ctxs.entry(key).or_default().push(ctx);
        let ctx_idx = self.ctxs[&key].len() - 1;
        // Pair the new context with excursions that already settled.
        let settled = self.settled_sl.get(&key).cloned().unwrap_or_default();
        for inner in settled {
            let state = match self.items[inner].key {
                ItemKey::Sl { state, .. } => state,
                _ => unreachable!(),
            };
            for mv in self.sorted_moves(state, Some(gamma)) {
                if let StackOp::Pop = mv.action {
                    let to = self.intern_state(mv.to.clone());
                    let pop = MoveRec { from: state, sym: mv.symbol.clone(), to };
                    self.resolve(key, ctx_idx, inner, pop);
                }
            }
        }
    }

    fn settle_rt(&mut self, item: usize, state: u32, top: Option<u32>) {
        for mv in self.sorted_moves(state, top) {
            let to = self.intern_state(mv.to.clone());
            let mrec = MoveRec { from: state, sym: mv.symbol.clone(), to };
            let (len, rope) = {
                let d = &self.items[item];
                let rope = d.rope.append(&mrec.sym);
                (rope.len, rope)
            };
            match mv.action {
                StackOp::Stay => {
                    self.relax(ItemKey::Rt { state: to, top }, len, rope, Deriv::Step {
                        parent: item,
                        mv: mrec,
                    });
                }
                StackOp::Push(g) => {
                    let gid = self.intern_stack(g);
                    self.relax(ItemKey::Rt { state: to, top: Some(gid) }, len, rope, Deriv::Step {
                        parent: item,
                        mv: mrec.clone(),
                    });
                    self.register_ctx(to, gid, Ctx {
                        parent: item,
                        push: mrec,
                        resume: Resume::Rt { below: top },
                    });
                }
                // The symbol below the top is unknown here; pops are resolved
                // through the excursion items instead.
                StackOp::Pop => {}
            }
        }
    }

    fn settle_sl(&mut self, item: usize, entry: u32, gamma: u32, state: u32) {
        self.settled_sl.entry((entry, gamma)).or_default().push(item);
        for mv in self.sorted_moves(state, Some(gamma)) {
            let to = self.intern_state(mv.to.clone());
            let mrec = MoveRec { from: state, sym: mv.symbol.clone(), to };
            match mv.action {
                StackOp::Stay => {
                    let (len, rope) = {
                        let d = &self.items[item];
                        let rope = d.rope.append(&mrec.sym);
                        (rope.len, rope)
                    };
                    self.relax(ItemKey::Sl { entry, gamma, state: to }, len, rope, Deriv::Step {
                        parent: item,
                        mv: mrec,
                    });
                }
                StackOp::Push(g) => {
                    let gid = self.intern_stack(g);
                    self.register_ctx(to, gid, Ctx {
                        parent: item,
                        push: mrec,
                        resume: Resume::Sl { entry, gamma },
                    });
                }
                StackOp::Pop => {
                    let n = self.ctxs.get(&(entry, gamma)).map_or(0, |v| v.len());
                    for ctx_idx in 0..n {
                        self.resolve((entry, gamma), ctx_idx, item, mrec.clone());
                    }
                }
            }
        }
    }

    fn run(mut self) -> Exploration<T> {
        let q0 = self.intern_state(self.sys.initial());
        self.relax(ItemKey::Rt { state: q0, top: None }, 0, Rope::empty(), Deriv::Init);
        while let Some(entry) = self.heap.pop() {
            let item = entry.item;
            {
                let d = &self.items[item];
                if d.settled || cost_cmp(entry.len, &entry.rope, d.len, &d.rope) != Ordering::Equal
                {
                    continue;
                }
            }
            self.items[item].settled = true;
            match self.items[item].key {
                ItemKey::Rt { state, top } => self.settle_rt(item, state, top),
                ItemKey::Sl { entry, gamma, state } => self.settle_sl(item, entry, gamma, state),
            }
        }
        Exploration {
            states: self.states,
            stacks: self.stacks,
            items: self.items,
            index: self.index,
        }
    }
}

impl<T: PushdownSystem> Exploration<T> {
    /// All settled `(state, top)` facts in deterministic order.
    pub fn reached(&self) -> impl Iterator<Item = Reached<'_, T::State, T::Stack>> {
        self.index.iter().filter_map(move |(key, &item)| match *key {
            ItemKey::Rt { state, top } => Some(Reached {
                state: &self.states[state as usize],
                top: top.map(|g| &self.stacks[g as usize]),
                len: self.items[item].len,
                item,
            }),
            ItemKey::Sl { .. } => None,
        })
    }

    /// The minimal-cost fact satisfying `pred`, ties broken deterministically.
    pub fn best<F>(&self, mut pred: F) -> Option<Reached<'_, T::State, T::Stack>>
    where
        F: FnMut(&T::State, Option<&T::Stack>) -> bool,
    {
        let mut best: Option<Reached<'_, T::State, T::Stack>> = None;
        for r in self.reached() {
            if !pred(r.state, r.top) {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    cost_cmp(
                        r.len,
                        &self.items[r.item].rope,
                        b.len,
                        &self.items[b.item].rope,
                    ) == Ordering::Less
                }
            };
            if better {
                best = Some(r);
            }
        }
        best
    }

    /// The consumed symbols of the cheapest run to `r`.
    pub fn symbols(&self, r: &Reached<'_, T::State, T::Stack>) -> Vec<T::Sym> {
        self.items[r.item].rope.to_vec()
    }

    /// Reconstructs the cheapest run to `r`, silent moves included.
    pub fn run(&self, r: &Reached<'_, T::State, T::Stack>) -> Run<T::State, T::Sym> {
        enum Task {
            Item(usize),
            Emit(usize),
        }
        // Emitted moves are collected via an explicit stack; derivations can
        // be as deep as the run is long, so no recursion here.
        let mut moves: Vec<&MoveRec<T::Sym>> = Vec::new();
        let mut emit_pool: Vec<&MoveRec<T::Sym>> = Vec::new();
        let mut work = vec![Task::Item(r.item)];
        while let Some(task) = work.pop() {
            match task {
                Task::Emit(idx) => moves.push(emit_pool[idx]),
                Task::Item(id) => match &self.items[id].deriv {
                    Deriv::Init | Deriv::SlBase => {}
                    Deriv::Step { parent, mv } => {
                        emit_pool.push(mv);
                        work.push(Task::Emit(emit_pool.len() - 1));
                        work.push(Task::Item(*parent));
                    }
                    Deriv::PopResolve { outer, push, inner, pop } => {
                        emit_pool.push(pop);
                        work.push(Task::Emit(emit_pool.len() - 1));
                        work.push(Task::Item(*inner));
                        emit_pool.push(push);
                        work.push(Task::Emit(emit_pool.len() - 1));
                        work.push(Task::Item(*outer));
                    }
                },
            }
        }
        let symbols = moves.iter().filter_map(|m| m.sym.clone()).collect();
        let steps = moves
            .iter()
            .map(|m| RunStep {
                from: self.states[m.from as usize].clone(),
                symbol: m.sym.clone(),
                to: self.states[m.to as usize].clone(),
            })
            .collect();
        Run { symbols, steps }
    }
}
