//! App model IR and resource specifications.
//!
//! An app is a set of named procedures (CFGs of basic blocks over a small
//! statement vocabulary) plus components that bind lifecycle callback names
//! to procedures. Lifecycles are callback graphs: states with edges labeled
//! by ordered callback lists. The graph named `activity` is built in; others
//! are declared in the document.
//!
//! Models are immutable after construction: every mutation in the repair
//! stage produces a new `AppModel`. `parse_app` and `serialize_app` round-trip
//! (parse . serialize == identity on valid models).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the built-in lifecycle graph.
pub const ACTIVITY_LIFECYCLE: &str = "activity";

#[derive(Debug, Error)]
pub enum IrError {
    /// Malformed JSON or wrong fields for a statement kind.
    #[error("schema error: {0}")]
    Schema(String),
    /// Structurally well-formed document violating a model invariant.
    /// The message names the offending entity.
    #[error("validation error: {0}")]
    Validation(String),
}

/// Coordinates of a statement: (procedure, block, statement index).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub procedure: String,
    pub block: String,
    pub index: usize,
}

impl Origin {
    pub fn new(procedure: impl Into<String>, block: impl Into<String>, index: usize) -> Self {
        Origin { procedure: procedure.into(), block: block.into(), index }
    }
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}[{}]", self.procedure, self.block, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Statement {
    /// Acquire the resource through `api`, binding the symbolic reference `target`.
    Acquire { api: String, target: String },
    /// Release through `api` the resource bound to `target`.
    Release { api: String, target: String },
    /// Use of the reference `target`.
    Use { target: String },
    /// Invocation of another procedure of the app.
    Call { callee: String },
    Return,
    /// Any operation irrelevant to resource tracking.
    Other,
    /// Conditional release inserted by the repair stage: releases `target`
    /// through `api` only while the resource is actually held.
    ReleaseIfHeld { api: String, target: String },
}

impl Statement {
    /// The symbolic reference this statement touches, if any.
    pub fn target(&self) -> Option<&str> {
        match self {
            Statement::Acquire { target, .. }
            | Statement::Release { target, .. }
            | Statement::Use { target }
            | Statement::ReleaseIfHeld { target, .. } => Some(target),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: String,
    pub statements: Vec<Statement>,
    pub successors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub entry: String,
    pub blocks: BTreeMap<String, BasicBlock>,
}

impl Procedure {
    pub fn block(&self, id: &str) -> Option<&BasicBlock> {
        self.blocks.get(id)
    }
}

/// Lifecycle automaton: which callbacks run, in what order, along each
/// state transition of the component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallbackGraph {
    pub name: String,
    pub states: Vec<String>,
    pub initial: String,
    pub edges: Vec<CallbackEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallbackEdge {
    pub from: String,
    pub to: String,
    /// Callbacks invoked, in order, when this transition is taken.
    pub callbacks: Vec<String>,
}

/// The built-in three-state activity lifecycle.
pub fn activity_graph() -> CallbackGraph {
    let s = |x: &str| x.to_string();
    CallbackGraph {
        name: s(ACTIVITY_LIFECYCLE),
        states: vec![s("Starting"), s("Running"), s("Closed")],
        initial: s("Starting"),
        edges: vec![
            CallbackEdge {
                from: s("Starting"),
                to: s("Running"),
                callbacks: vec![s("onCreate"), s("onStart"), s("onResume")],
            },
            CallbackEdge {
                from: s("Running"),
                to: s("Running"),
                callbacks: vec![s("onPause"), s("onResume")],
            },
            CallbackEdge {
                from: s("Running"),
                to: s("Closed"),
                callbacks: vec![s("onPause"), s("onStop"), s("onDestroy")],
            },
        ],
    }
}

/// A component instance: a lifecycle plus a partial binding of its callback
/// names to procedures. Unbound callbacks are empty procedures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    /// Name of the lifecycle graph (`activity` or a document-declared one).
    pub lifecycle_name: String,
    /// The resolved graph; kept on the component so lifecycle questions
    /// need no side lookup.
    pub lifecycle: CallbackGraph,
    pub callbacks: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppModel {
    pub name: String,
    pub components: Vec<Component>,
    pub procedures: BTreeMap<String, Procedure>,
    /// Lifecycle graphs declared by the document (excluding the built-in).
    pub lifecycles: BTreeMap<String, CallbackGraph>,
}

impl AppModel {
    pub fn procedure(&self, name: &str) -> Option<&Procedure> {
        self.procedures.get(name)
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    /// Call edges (caller, callee), derived from Call statements. Only
    /// internal callees exist in the model: unresolvable calls were
    /// downgraded to `Other` at parse time.
    pub fn call_graph(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut graph: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (name, proc) in &self.procedures {
            let entry = graph.entry(name.clone()).or_default();
            for block in proc.blocks.values() {
                for stmt in &block.statements {
                    if let Statement::Call { callee } = stmt {
                        entry.insert(callee.clone());
                    }
                }
            }
        }
        graph
    }

    /// All symbolic references that appear as the target of an acquire,
    /// release, or conditional release of one of `spec`'s operations.
    /// These are the references whose `Use` statements are tracked in
    /// validation mode.
    pub fn resource_refs(&self, spec: &ResourceSpec) -> BTreeSet<String> {
        let mut refs = BTreeSet::new();
        for proc in self.procedures.values() {
            for block in proc.blocks.values() {
                for stmt in &block.statements {
                    let relevant = match stmt {
                        Statement::Acquire { api, .. } => spec.is_acquire_op(api),
                        Statement::Release { api, .. } | Statement::ReleaseIfHeld { api, .. } => {
                            spec.is_release_op(api)
                        }
                        _ => false,
                    };
                    if relevant {
                        refs.insert(stmt.target().unwrap().to_string());
                    }
                }
            }
        }
        refs
    }
}

/// Usage protocol of one resource type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceSpec {
    pub name: String,
    pub reentrant: bool,
    /// (acquire, release) operation pairs; all legal ways of acquiring the
    /// resource and then releasing it.
    pub pairs: Vec<(String, String)>,
    /// Callbacks where a release may be placed, in preference order.
    pub release_callbacks: Vec<String>,
    /// Query operation testing held-ness, when the API offers one.
    pub held_check: Option<String>,
}

impl ResourceSpec {
    pub fn is_acquire_op(&self, op: &str) -> bool {
        self.pairs.iter().any(|(a, _)| a == op)
    }

    pub fn is_release_op(&self, op: &str) -> bool {
        self.pairs.iter().any(|(_, r)| r == op)
    }

    pub fn is_pair(&self, acquire: &str, release: &str) -> bool {
        self.pairs.iter().any(|(a, r)| a == acquire && r == release)
    }

    /// The release mate of `acquire`: the first pair in spec order wins.
    pub fn release_for(&self, acquire: &str) -> Option<&str> {
        self.pairs.iter().find(|(a, _)| a == acquire).map(|(_, r)| r.as_str())
    }

    pub fn acquire_ops(&self) -> BTreeSet<&str> {
        self.pairs.iter().map(|(a, _)| a.as_str()).collect()
    }

    pub fn release_ops(&self) -> BTreeSet<&str> {
        self.pairs.iter().map(|(_, r)| r.as_str()).collect()
    }
}

// ---------------------------------------------------------------------------
// JSON documents
//
// Wire shapes are kept apart from the model types so the schema stays an
// explicit contract. Unknown fields are schema errors.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AppDoc {
    app: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    lifecycles: Vec<LifecycleDoc>,
    components: Vec<ComponentDoc>,
    procedures: Vec<ProcedureDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LifecycleDoc {
    name: String,
    states: Vec<String>,
    initial: String,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: String,
    to: String,
    callbacks: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    name: String,
    lifecycle: String,
    callbacks: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcedureDoc {
    name: String,
    entry: String,
    blocks: Vec<BlockDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    id: String,
    statements: Vec<StatementDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    successors: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatementDoc {
    op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    api: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    callee: Option<String>,
}

fn statement_from_doc(doc: StatementDoc, at: &str) -> Result<Statement, IrError> {
    let StatementDoc { op, api, target, callee } = doc;
    let fields = |api: Option<String>, target: Option<String>, op: &str| {
        match (api, target) {
            (Some(a), Some(t)) => Ok((a, t)),
            _ => Err(IrError::Schema(format!("{at}: op `{op}` requires `api` and `target`"))),
        }
    };
    let none = |have: bool, what: &str, op: &str| {
        if have {
            Err(IrError::Schema(format!("{at}: op `{op}` does not take `{what}`")))
        } else {
            Ok(())
        }
    };
    match op.as_str() {
        "acquire" => {
            none(callee.is_some(), "callee", "acquire")?;
            let (api, target) = fields(api, target, "acquire")?;
            Ok(Statement::Acquire { api, target })
        }
        "release" => {
            none(callee.is_some(), "callee", "release")?;
            let (api, target) = fields(api, target, "release")?;
            Ok(Statement::Release { api, target })
        }
        "release_if_held" => {
            none(callee.is_some(), "callee", "release_if_held")?;
            let (api, target) = fields(api, target, "release_if_held")?;
            Ok(Statement::ReleaseIfHeld { api, target })
        }
        "use" => {
            none(api.is_some(), "api", "use")?;
            none(callee.is_some(), "callee", "use")?;
            match target {
                Some(t) => Ok(Statement::Use { target: t }),
                None => Err(IrError::Schema(format!("{at}: op `use` requires `target`"))),
            }
        }
        "call" => {
            none(api.is_some(), "api", "call")?;
            none(target.is_some(), "target", "call")?;
            match callee {
                Some(c) => Ok(Statement::Call { callee: c }),
                None => Err(IrError::Schema(format!("{at}: op `call` requires `callee`"))),
            }
        }
        "return" | "other" => {
            none(api.is_some(), "api", &op)?;
            none(target.is_some(), "target", &op)?;
            none(callee.is_some(), "callee", &op)?;
            Ok(if op == "return" { Statement::Return } else { Statement::Other })
        }
        other => Err(IrError::Schema(format!("{at}: unknown op `{other}`"))),
    }
}

fn statement_to_doc(stmt: &Statement) -> StatementDoc {
    let (op, api, target, callee) = match stmt {
        Statement::Acquire { api, target } => ("acquire", Some(api), Some(target), None),
        Statement::Release { api, target } => ("release", Some(api), Some(target), None),
        Statement::ReleaseIfHeld { api, target } => {
            ("release_if_held", Some(api), Some(target), None)
        }
        Statement::Use { target } => ("use", None, Some(target), None),
        Statement::Call { callee } => ("call", None, None, Some(callee)),
        Statement::Return => ("return", None, None, None),
        Statement::Other => ("other", None, None, None),
    };
    StatementDoc {
        op: op.to_string(),
        api: api.cloned(),
        target: target.cloned(),
        callee: callee.cloned(),
    }
}

fn validate_callback_graph(g: &CallbackGraph) -> Result<(), IrError> {
    let name = &g.name;
    if g.name == ACTIVITY_LIFECYCLE {
        return Err(IrError::Validation(format!(
            "lifecycle `{name}`: the name `{ACTIVITY_LIFECYCLE}` is reserved for the built-in graph"
        )));
    }
    let mut seen = BTreeSet::new();
    for s in &g.states {
        if !seen.insert(s) {
            return Err(IrError::Validation(format!("lifecycle `{name}`: duplicate state `{s}`")));
        }
    }
    if !seen.contains(&g.initial) {
        let initial = &g.initial;
        return Err(IrError::Validation(format!(
            "lifecycle `{name}`: initial state `{initial}` is not a state"
        )));
    }
    for e in &g.edges {
        for endpoint in [&e.from, &e.to] {
            if !seen.contains(endpoint) {
                return Err(IrError::Validation(format!(
                    "lifecycle `{name}`: edge references unknown state `{endpoint}`"
                )));
            }
        }
    }
    Ok(())
}

/// Blocks reachable from the entry along successor edges.
fn reachable_blocks(proc: &Procedure) -> BTreeSet<&str> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut work = vec![proc.entry.as_str()];
    while let Some(id) = work.pop() {
        if !seen.insert(id) {
            continue;
        }
        if let Some(block) = proc.blocks.get(id) {
            for succ in &block.successors {
                if !seen.contains(succ.as_str()) {
                    work.push(succ);
                }
            }
        }
    }
    seen
}

/// Parse and validate an app document, also returning human-readable
/// warnings (unresolvable call downgraded, unreachable tail dropped).
pub fn parse_app_with_warnings(text: &str) -> Result<(AppModel, Vec<String>), IrError> {
    let doc: AppDoc =
        serde_json::from_str(text).map_err(|e| IrError::Schema(e.to_string()))?;
    let mut warnings = Vec::new();

    let mut lifecycles = BTreeMap::new();
    for lc in doc.lifecycles {
        let graph = CallbackGraph {
            name: lc.name,
            states: lc.states,
            initial: lc.initial,
            edges: lc
                .edges
                .into_iter()
                .map(|e| CallbackEdge { from: e.from, to: e.to, callbacks: e.callbacks })
                .collect(),
        };
        validate_callback_graph(&graph)?;
        let name = graph.name.clone();
        if lifecycles.insert(name.clone(), graph).is_some() {
            return Err(IrError::Validation(format!("lifecycle `{name}`: duplicate definition")));
        }
    }

    let mut procedures: BTreeMap<String, Procedure> = BTreeMap::new();
    let known_procs: BTreeSet<String> = doc.procedures.iter().map(|p| p.name.clone()).collect();
    for p in doc.procedures {
        let pname = p.name.clone();
        let mut blocks = BTreeMap::new();
        for b in p.blocks {
            let bid = b.id.clone();
            let at = format!("procedure `{pname}` block `{bid}`");
            let mut statements = Vec::new();
            let total = b.statements.len();
            for (idx, sd) in b.statements.into_iter().enumerate() {
                let mut stmt = statement_from_doc(sd, &at)?;
                if let Statement::Call { callee } = &stmt {
                    if !known_procs.contains(callee) {
                        warnings.push(format!(
                            "{at}[{idx}]: call to unknown procedure `{callee}` treated as other"
                        ));
                        stmt = Statement::Other;
                    }
                }
                let is_return = matches!(stmt, Statement::Return);
                statements.push(stmt);
                if is_return && idx + 1 < total {
                    warnings.push(format!(
                        "{at}: {} unreachable statement(s) after return dropped",
                        total - idx - 1
                    ));
                    break;
                }
            }
            let block = BasicBlock { id: b.id, statements, successors: b.successors };
            if blocks.insert(bid.clone(), block).is_some() {
                return Err(IrError::Validation(format!(
                    "procedure `{pname}`: duplicate block id `{bid}`"
                )));
            }
        }
        let proc = Procedure { name: pname.clone(), entry: p.entry, blocks };
        if !proc.blocks.contains_key(&proc.entry) {
            let entry = &proc.entry;
            return Err(IrError::Validation(format!(
                "procedure `{pname}`: entry block `{entry}` does not exist"
            )));
        }
        for block in proc.blocks.values() {
            for succ in &block.successors {
                if !proc.blocks.contains_key(succ) {
                    let bid = &block.id;
                    return Err(IrError::Validation(format!(
                        "procedure `{pname}` block `{bid}`: dangling successor `{succ}`"
                    )));
                }
            }
        }
        let reachable = reachable_blocks(&proc);
        for id in proc.blocks.keys() {
            if !reachable.contains(id.as_str()) {
                return Err(IrError::Validation(format!(
                    "procedure `{pname}`: block `{id}` is unreachable from entry"
                )));
            }
        }
        if procedures.insert(pname.clone(), proc).is_some() {
            return Err(IrError::Validation(format!("duplicate procedure name `{pname}`")));
        }
    }

    let mut components = Vec::new();
    let mut component_names = BTreeSet::new();
    for c in doc.components {
        let cname = c.name.clone();
        if !component_names.insert(cname.clone()) {
            return Err(IrError::Validation(format!("duplicate component name `{cname}`")));
        }
        let lifecycle = if c.lifecycle == ACTIVITY_LIFECYCLE {
            activity_graph()
        } else {
            lifecycles.get(&c.lifecycle).cloned().ok_or_else(|| {
                let lc = &c.lifecycle;
                IrError::Validation(format!("component `{cname}`: unknown lifecycle `{lc}`"))
            })?
        };
        for (cb, proc) in &c.callbacks {
            if !procedures.contains_key(proc) {
                return Err(IrError::Validation(format!(
                    "component `{cname}`: callback `{cb}` bound to unknown procedure `{proc}`"
                )));
            }
        }
        components.push(Component {
            name: c.name,
            lifecycle_name: c.lifecycle,
            lifecycle,
            callbacks: c.callbacks,
        });
    }

    Ok((AppModel { name: doc.app, components, procedures, lifecycles }, warnings))
}

pub fn parse_app(text: &str) -> Result<AppModel, IrError> {
    parse_app_with_warnings(text).map(|(app, _)| app)
}

pub fn serialize_app(app: &AppModel) -> String {
    let doc = AppDoc {
        app: app.name.clone(),
        lifecycles: app
            .lifecycles
            .values()
            .map(|g| LifecycleDoc {
                name: g.name.clone(),
                states: g.states.clone(),
                initial: g.initial.clone(),
                edges: g
                    .edges
                    .iter()
                    .map(|e| EdgeDoc {
                        from: e.from.clone(),
                        to: e.to.clone(),
                        callbacks: e.callbacks.clone(),
                    })
                    .collect(),
            })
            .collect(),
        components: app
            .components
            .iter()
            .map(|c| ComponentDoc {
                name: c.name.clone(),
                lifecycle: c.lifecycle_name.clone(),
                callbacks: c.callbacks.clone(),
            })
            .collect(),
        procedures: app
            .procedures
            .values()
            .map(|p| ProcedureDoc {
                name: p.name.clone(),
                entry: p.entry.clone(),
                blocks: p
                    .blocks
                    .values()
                    .map(|b| BlockDoc {
                        id: b.id.clone(),
                        statements: b.statements.iter().map(statement_to_doc).collect(),
                        successors: b.successors.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("app models serialize");
    out.push('\n');
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceDoc {
    resource: String,
    reentrant: bool,
    pairs: Vec<(String, String)>,
    release_callbacks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    held_check: Option<String>,
}

pub fn parse_resource_spec(text: &str) -> Result<ResourceSpec, IrError> {
    let doc: ResourceDoc =
        serde_json::from_str(text).map_err(|e| IrError::Schema(e.to_string()))?;
    let name = doc.resource.clone();
    if name.is_empty() {
        return Err(IrError::Validation("resource spec: empty resource name".into()));
    }
    if doc.pairs.is_empty() {
        return Err(IrError::Validation(format!("resource `{name}`: no operation pairs")));
    }
    let mut seen = BTreeSet::new();
    for (a, r) in &doc.pairs {
        if a.is_empty() || r.is_empty() {
            return Err(IrError::Validation(format!(
                "resource `{name}`: empty operation identifier in pair"
            )));
        }
        if !seen.insert((a.clone(), r.clone())) {
            return Err(IrError::Validation(format!(
                "resource `{name}`: duplicate pair ({a}, {r})"
            )));
        }
    }
    if doc.release_callbacks.is_empty() {
        return Err(IrError::Validation(format!("resource `{name}`: no release callbacks")));
    }
    Ok(ResourceSpec {
        name: doc.resource,
        reentrant: doc.reentrant,
        pairs: doc.pairs,
        release_callbacks: doc.release_callbacks,
        held_check: doc.held_check,
    })
}

pub fn serialize_resource_spec(spec: &ResourceSpec) -> String {
    let doc = ResourceDoc {
        resource: spec.name.clone(),
        reentrant: spec.reentrant,
        pairs: spec.pairs.clone(),
        release_callbacks: spec.release_callbacks.clone(),
        held_check: spec.held_check.clone(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("resource specs serialize");
    out.push('\n');
    out
}
