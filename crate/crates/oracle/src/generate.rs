//! Seeded random apps for differential testing.
//!
//! The shapes are deliberately constrained so that both the reference
//! interpreter and the production engine are exact on everything generated:
//! helper procedures are straight line and never acquire (a call summary
//! then loses nothing), reentrant resources use a single operation pair,
//! each specification names exactly one release callback, and the procedure
//! implementing that callback is a single basic block, so an inserted
//! conditional release dominates the callback's exit.

use std::collections::BTreeMap;

use leakfix_core::ir::{
    activity_graph, AppModel, BasicBlock, Component, Procedure, ResourceSpec, Statement,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct GeneratedApp {
    pub app: AppModel,
    pub spec: ResourceSpec,
}

const CALLBACKS: [&str; 6] =
    ["onCreate", "onStart", "onResume", "onPause", "onStop", "onDestroy"];

/// Generates one app/specification pair. The same seed always yields the
/// same pair.
pub fn generate(seed: u64) -> GeneratedApp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = gen_spec(&mut rng);
    let mut components = Vec::new();
    let mut procedures = BTreeMap::new();
    let n = rng.random_range(1..=2);
    for c in 0..n {
        components.push(gen_component(&mut rng, c, &spec, &mut procedures));
    }
    GeneratedApp {
        app: AppModel {
            name: format!("gen-{seed}"),
            components,
            procedures,
            lifecycles: BTreeMap::new(),
        },
        spec,
    }
}

fn gen_spec(rng: &mut ChaCha8Rng) -> ResourceSpec {
    let release_callback =
        (*["onPause", "onStop", "onDestroy"].choose(rng).unwrap()).to_string();
    if rng.random_bool(0.5) {
        ResourceSpec {
            name: "GenLock".into(),
            reentrant: true,
            pairs: vec![("grab".into(), "drop".into())],
            release_callbacks: vec![release_callback],
            held_check: Some("isHeld".into()),
        }
    } else {
        let mut pairs = vec![("open".into(), "close".into())];
        if rng.random_bool(0.4) {
            pairs.push(("begin".into(), "finish".into()));
        }
        ResourceSpec {
            name: "GenPlayer".into(),
            reentrant: false,
            pairs,
            release_callbacks: vec![release_callback],
            held_check: None,
        }
    }
}

fn gen_component(
    rng: &mut ChaCha8Rng,
    c: usize,
    spec: &ResourceSpec,
    procedures: &mut BTreeMap<String, Procedure>,
) -> Component {
    let refs: Vec<String> =
        (0..rng.random_range(1..=2)).map(|i| format!("r{c}{i}")).collect();
    let helpers: Vec<String> =
        (0..rng.random_range(0..=2)).map(|k| format!("screen{c}_help{k}")).collect();
    for h in &helpers {
        procedures.insert(h.clone(), gen_helper(rng, h, spec, &refs));
    }

    let release_cb = spec.release_callbacks[0].as_str();
    let mut implemented: Vec<&str> =
        CALLBACKS.iter().copied().filter(|_| rng.random_bool(0.45)).collect();
    if rng.random_bool(0.6) && !implemented.contains(&release_cb) {
        implemented.push(release_cb);
    }
    if implemented.is_empty() {
        implemented.push("onCreate");
    }

    let mut callbacks = BTreeMap::new();
    for cb in implemented {
        let pname = format!("screen{c}_{cb}");
        let proc = if cb == release_cb {
            gen_release_proc(rng, &pname, spec, &refs, &helpers)
        } else {
            gen_callback_proc(rng, &pname, spec, &refs, &helpers)
        };
        procedures.insert(pname.clone(), proc);
        callbacks.insert(cb.to_string(), pname);
    }

    Component {
        name: format!("Screen{c}"),
        lifecycle_name: "activity".into(),
        lifecycle: activity_graph(),
        callbacks,
    }
}

fn gen_statement(
    rng: &mut ChaCha8Rng,
    spec: &ResourceSpec,
    refs: &[String],
    helpers: &[String],
    allow_acquire: bool,
) -> Statement {
    let target = refs.choose(rng).unwrap().clone();
    let pair = spec.pairs.choose(rng).unwrap().clone();
    let roll: u32 = rng.random_range(0..100);
    match roll {
        0..=19 if allow_acquire => Statement::Acquire { api: pair.0, target },
        20..=34 => Statement::Release { api: pair.1, target },
        35..=41 => Statement::ReleaseIfHeld { api: pair.1, target },
        42..=59 => Statement::Use { target },
        60..=71 if !helpers.is_empty() => {
            Statement::Call { callee: helpers.choose(rng).unwrap().clone() }
        }
        _ => Statement::Other,
    }
}

/// Straight-line, acquire-free, call-free.
fn gen_helper(
    rng: &mut ChaCha8Rng,
    name: &str,
    spec: &ResourceSpec,
    refs: &[String],
) -> Procedure {
    let mut statements: Vec<Statement> = (0..rng.random_range(1..=3))
        .map(|_| gen_statement(rng, spec, refs, &[], false))
        .collect();
    if rng.random_bool(0.5) {
        statements.push(Statement::Return);
    }
    single_block(name, statements)
}

/// The release callback's body: one basic block, so any statement position
/// dominates the exit.
fn gen_release_proc(
    rng: &mut ChaCha8Rng,
    name: &str,
    spec: &ResourceSpec,
    refs: &[String],
    helpers: &[String],
) -> Procedure {
    let mut statements: Vec<Statement> = (0..rng.random_range(0..=3))
        .map(|_| gen_statement(rng, spec, refs, helpers, true))
        .collect();
    if rng.random_bool(0.8) {
        statements.push(Statement::Return);
    }
    single_block(name, statements)
}

/// Any other callback: a short block chain with optional forward skips.
fn gen_callback_proc(
    rng: &mut ChaCha8Rng,
    name: &str,
    spec: &ResourceSpec,
    refs: &[String],
    helpers: &[String],
) -> Procedure {
    let n = rng.random_range(1..=4);
    let mut blocks = BTreeMap::new();
    for i in 0..n {
        let statements: Vec<Statement> = (0..rng.random_range(0..=3))
            .map(|_| gen_statement(rng, spec, refs, helpers, true))
            .collect();
        let mut statements = statements;
        let mut successors = Vec::new();
        if i + 1 < n {
            successors.push(format!("b{}", i + 1));
            // A forward skip makes the chain branch.
            if i + 2 < n && rng.random_bool(0.4) {
                let j = rng.random_range(i + 2..n);
                successors.push(format!("b{j}"));
            }
        } else if rng.random_bool(0.7) {
            statements.push(Statement::Return);
        }
        let id = format!("b{i}");
        blocks.insert(id.clone(), BasicBlock { id, statements, successors });
    }
    Procedure { name: name.to_string(), entry: "b0".into(), blocks }
}

fn single_block(name: &str, statements: Vec<Statement>) -> Procedure {
    Procedure {
        name: name.to_string(),
        entry: "b0".into(),
        blocks: [(
            "b0".to_string(),
            BasicBlock { id: "b0".into(), statements, successors: vec![] },
        )]
        .into(),
    }
}
