mod common;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use common::{gen_nesting, is_subclass, program, run_off, EXCEPTIONS};
use npefix::frontend::ast::{Expr, ExprKind};
use npefix::frontend::types::Type;
use npefix::frontend::{parse, parse_units, print, CrashPointKey, SourceUnit};
use npefix::runtime::pool::{fits, get_var};
use npefix::runtime::value::Object;
use npefix::runtime::{
    new_var, run, CatchStack, Controller, Decision, Outcome, RepairMode, RunOptions, Strategy as Repair, StrategyId,
    Value,
};
use npefix::transform::{seed_remove_null_checks, transform_all, TransformConfig};
use proptest::prelude::*;

const EXCEPTION_CLASSES: &str = "class AppError extends Exception { } class DeepError extends AppError { }";

fn nesting_case() -> impl Strategy<Value = (u64, i64)> {
    (1u64..100_000).prop_flat_map(|seed| {
        let reached = gen_nesting(seed).simulate(-1).1;
        (Just(seed), -1..=reached)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_programs_round_trip((seed, target) in nesting_case()) {
        let p = program(&gen_nesting(seed).source(target));
        let again = parse_units(&print(&p.program)).unwrap();
        prop_assert_eq!(&again.program, &p.program);
    }

    #[test]
    fn instrumentation_preserves_behavior((seed, target) in nesting_case()) {
        let p = program(&gen_nesting(seed).source(target));
        let t = transform_all(&p, &TransformConfig::all()).unwrap();
        let original = run_off(&p, "Main");
        let idle = run_off(&t, "Main");
        prop_assert_eq!(&idle.stdout, &original.stdout);
        prop_assert_eq!(&idle.exit, &original.exit);
        let mut ctl = Controller::new(RepairMode::explore_all(), seed);
        let enabled = run(&t, "Main", &mut ctl, &RunOptions::default()).unwrap();
        prop_assert_eq!(&enabled.stdout, &original.stdout);
        prop_assert_eq!(&enabled.exit, &original.exit);
        prop_assert!(enabled.applied.is_empty());
    }

    #[test]
    fn transforming_twice_is_rejected(seed in 1u64..100_000) {
        let p = program(&gen_nesting(seed).source(1));
        let t = transform_all(&p, &TransformConfig::all()).unwrap();
        prop_assert!(transform_all(&t, &TransformConfig::all()).is_err());
        prop_assert!(transform_all(&t, &TransformConfig::none()).is_err());
    }
}

// Seeder: guard and non-guard statements in random order and nesting.

const GUARDS: &[&str] = &[
    "if (x != null) { print(1); }",
    "if (x == null) { print(2); } else { print(3); }",
    "if (null != this.f) { print(4); }",
    "if (!(x == null)) { print(5); }",
    "if (this.f == null) { return; }",
];

const OTHERS: &[&str] = &[
    "if (x != null && n > 0) { print(6); }",
    "if (n > 0) { print(7); }",
    "if (x == this.f) { print(8); }",
    "print(9);",
    "n = n + 1;",
];

fn seeder_body() -> impl Strategy<Value = Vec<(bool, usize, u8)>> {
    // (is guard, which, wrapper: 0 none, 1 while, 2 try)
    prop::collection::vec((any::<bool>(), 0usize..5, 0u8..3), 0..12)
}

fn seeder_source(body: &[(bool, usize, u8)]) -> (String, usize) {
    let mut out = String::from("class A {\n    A f;\n    void m(A x, int n) {\n");
    let mut guards = 0;
    for (is_guard, which, wrap) in body {
        let s = if *is_guard { GUARDS[*which] } else { OTHERS[*which] };
        guards += *is_guard as usize;
        match wrap {
            1 => out.push_str(&format!("        while (n < 0) {{ {s} }}\n")),
            2 => out.push_str(&format!("        try {{ {s} }} catch (Exception e) {{ }}\n")),
            _ => out.push_str(&format!("        {s}\n")),
        }
    }
    out.push_str("    }\n}\n");
    (out, guards)
}

proptest! {
    #[test]
    fn seeder_removes_exactly_the_guards(body in seeder_body()) {
        let (src, guards) = seeder_source(&body);
        let p = program(&src);
        let (seeded, report) = seed_remove_null_checks(p.program.clone());
        prop_assert_eq!(report.count(), guards);
        prop_assert_eq!(report.removed.len(), guards);
        let reparsed = parse_units(&print(&seeded)).unwrap();
        let (_, again) = seed_remove_null_checks(reparsed.program);
        prop_assert_eq!(again.count(), 0);
    }

    #[test]
    fn seeder_inputs_round_trip(body in seeder_body()) {
        let p = program(&seeder_source(&body).0);
        let again = parse_units(&print(&p.program)).unwrap();
        prop_assert_eq!(again.program, p.program);
    }
}

// Type table: random single-inheritance hierarchies.

fn hierarchy() -> impl Strategy<Value = Vec<Option<usize>>> {
    (1usize..9).prop_flat_map(|n| {
        (0..n).map(|i| if i == 0 { Just(None).boxed() } else { prop::option::of(0..i).boxed() }).collect::<Vec<_>>()
    })
}

proptest! {
    #[test]
    fn subtyping_is_a_partial_order(parents in hierarchy()) {
        let src: String = parents
            .iter()
            .enumerate()
            .map(|(i, p)| match p {
                Some(p) => format!("class K{i} extends K{p} {{ }}\n"),
                None => format!("class K{i} {{ }}\n"),
            })
            .collect();
        let t = program(&src).table;
        let names: Vec<String> = (0..parents.len()).map(|i| format!("K{i}")).collect();
        for a in &names {
            prop_assert!(t.is_subclass(a, a));
            for b in &names {
                if a != b && t.is_subclass(a, b) {
                    prop_assert!(!t.is_subclass(b, a));
                }
                for c in &names {
                    if t.is_subclass(a, b) && t.is_subclass(b, c) {
                        prop_assert!(t.is_subclass(a, c));
                    }
                }
            }
        }
        prop_assert!(t.is_subclass("NullPointerException", "Exception"));
    }

    #[test]
    fn inheritance_cycles_are_rejected(n in 1usize..5) {
        let src: String = (0..n).map(|i| format!("class K{i} extends K{} {{ }}\n", (i + 1) % n)).collect();
        prop_assert!(parse(&SourceUnit::new("t.mj", src)).is_err());
    }
}

// new_var over random constructor graphs, cycles included.

fn ctor_graph() -> impl Strategy<Value = Vec<Vec<Vec<usize>>>> {
    // class -> constructors -> parameter kinds (0 int, 1 string, 2.. class index + 2)
    (1usize..6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(prop::collection::vec(0..n + 2, 0..3), 0..3), n)
    })
}

fn news(e: &Expr) -> u32 {
    match &e.kind {
        ExprKind::New { args, .. } => 1 + args.iter().map(news).max().unwrap_or(0),
        _ => 0,
    }
}

proptest! {
    #[test]
    fn new_var_terminates_within_budget(graph in ctor_graph(), depth in 1u32..5) {
        let src: String = graph
            .iter()
            .enumerate()
            .map(|(i, ctors)| {
                let ks: String = ctors
                    .iter()
                    .map(|ps| {
                        let params: Vec<String> = ps
                            .iter()
                            .enumerate()
                            .map(|(j, k)| match k {
                                0 => format!("int p{j}"),
                                1 => format!("string p{j}"),
                                c => format!("K{} p{j}", c - 2),
                            })
                            .collect();
                        format!("    K{i}({}) {{ }}\n", params.join(", "))
                    })
                    .collect();
                format!("class K{i} {{\n{ks}}}\n")
            })
            .collect();
        // constructors must differ in arity
        let distinct = graph.iter().all(|ks| ks.len() < 2 || ks[0].len() != ks[1].len());
        prop_assume!(distinct);
        let t = program(&src).table;
        for i in 0..graph.len() {
            let name = format!("K{i}");
            let r = new_var(&t, &Type::Class(name.clone()), depth);
            for rec in &r {
                for e in &rec.recipes {
                    prop_assert!(news(e) <= depth, "{} deeper than {depth}", name);
                }
            }
            let trivially = graph[i].is_empty() || graph[i].iter().any(|ps| ps.iter().all(|k| *k < 2));
            if trivially {
                prop_assert!(!r.is_empty());
            }
        }
    }
}

// Catch stack against a plain list model.

#[derive(Debug, Clone)]
enum Op {
    Add(i64, Vec<usize>),
    Remove(i64),
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(
        prop_oneof![
            (0i64..6, prop::collection::vec(0..EXCEPTIONS.len(), 1..3)).prop_map(|(id, t)| Op::Add(id, t)),
            (0i64..8).prop_map(Op::Remove),
        ],
        0..30,
    )
}

proptest! {
    #[test]
    fn catch_stack_matches_model(ops in ops()) {
        let table = program(EXCEPTION_CLASSES).table;
        let mut stack = CatchStack::new();
        let mut model: Vec<(i64, Vec<&str>)> = Vec::new();
        for op in ops {
            match op {
                Op::Add(id, types) => {
                    let names: Vec<&str> = types.iter().map(|t| EXCEPTIONS[*t]).collect();
                    stack.add(id, names.iter().map(|s| s.to_string()).collect());
                    model.push((id, names));
                }
                Op::Remove(id) => {
                    stack.remove(id);
                    if let Some(i) = model.iter().rposition(|(m, _)| *m == id) {
                        model.remove(i);
                    }
                }
            }
            prop_assert_eq!(stack.frames().len(), model.len());
            for e in EXCEPTIONS {
                let expected = model.iter().any(|(_, ts)| ts.iter().any(|t| is_subclass(e, t)));
                prop_assert_eq!(stack.will_be_caught(&table, e), expected, "{}", e);
            }
        }
    }
}

// Value pool candidates.

const POOL_CLASSES: &str = "class T { } class U extends T { } class V { } abstract class W { } class X extends W { }";
const POOL_TYPES: &[&str] = &["T", "U", "V", "W", "X"];

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<i64>().prop_map(Value::Int),
        any::<bool>().prop_map(Value::Bool),
        "[a-z]{0,3}".prop_map(|s| Value::str(&s)),
        (0..POOL_TYPES.len()).prop_map(|i| Value::Obj(Rc::new(Object {
            id: i as u64,
            class: Rc::from(POOL_TYPES[i]),
            fields: RefCell::new(HashMap::new()),
        }))),
    ]
}

fn required() -> impl Strategy<Value = Type> {
    prop_oneof![
        Just(Type::Int),
        Just(Type::Bool),
        Just(Type::Str),
        (0..POOL_TYPES.len()).prop_map(|i| Type::Class(POOL_TYPES[i].into())),
    ]
}

proptest! {
    #[test]
    fn pool_offers_only_well_typed_non_null_values(
        locals in prop::collection::vec(value(), 0..5),
        fields in prop::collection::vec(value(), 0..4),
        statics in prop::collection::vec(value(), 0..3),
        req in required(),
    ) {
        let table = program(POOL_CLASSES).table;
        let mut pool = npefix::runtime::ValuePool::default();
        pool.start(1, Value::Null, Vec::new());
        for (i, v) in locals.iter().enumerate() {
            pool.set(1, &format!("l{i}"), Type::Int, v.clone());
        }
        let fields: Vec<(String, Value)> = fields.into_iter().enumerate().map(|(i, v)| (format!("f{i}"), v)).collect();
        let statics: Vec<(String, Value)> = statics.into_iter().enumerate().map(|(i, v)| (format!("S.s{i}"), v)).collect();
        let got = get_var(&table, &req, pool.top(), &fields, &statics);
        for (_, v) in &got {
            prop_assert!(!v.is_null());
            prop_assert!(fits(&table, v, &req));
        }
        let expected = locals.iter().chain(fields.iter().map(|(_, v)| v)).chain(statics.iter().map(|(_, v)| v));
        prop_assert_eq!(got.len(), expected.filter(|v| fits(&table, v, &req)).count());
    }

    #[test]
    fn pool_reflects_latest_value(writes in prop::collection::vec((0usize..3, any::<i64>()), 1..20)) {
        let mut pool = npefix::runtime::ValuePool::default();
        pool.start(7, Value::Null, Vec::new());
        let mut latest = BTreeMap::new();
        for (slot, v) in writes {
            pool.set(7, &format!("v{slot}"), Type::Int, Value::Int(v));
            latest.insert(slot, v);
        }
        let frame = pool.top().unwrap();
        for (slot, v) in latest {
            prop_assert_eq!(frame.lookup(&format!("v{slot}")).unwrap().value.as_int(), Some(v));
        }
    }
}

// Controller: no retries, sticky deployment, monotone state.

fn candidate_sets() -> impl Strategy<Value = Vec<Vec<Repair>>> {
    let one = (0..StrategyId::ALL.len(), prop::option::of(0u8..3)).prop_map(|(i, p)| {
        let id = StrategyId::ALL[i];
        Repair::new(id, p.map(|p| format!("p{p}")))
    });
    prop::collection::vec(prop::collection::vec(one, 0..6), 1..4)
}

proptest! {
    #[test]
    fn controller_never_retries_and_keeps_deployments(
        sets in candidate_sets(),
        runs in prop::collection::vec((prop::collection::vec(0usize..4, 1..4), any::<bool>()), 1..25),
        seed in any::<u64>(),
    ) {
        let keys: Vec<CrashPointKey> = (0..sets.len()).map(|i| CrashPointKey { file: "f".into(), start: i as u32, end: i as u32 + 1 }).collect();
        let mut ctl = Controller::new(RepairMode::explore_all(), seed);
        let mut deployed: BTreeMap<usize, Repair> = BTreeMap::new();
        let mut tried: BTreeMap<usize, Vec<Repair>> = BTreeMap::new();
        for (visits, success) in runs {
            ctl.begin_run();
            for v in visits {
                let k = v % sets.len();
                let mut set = sets[k].clone();
                set.dedup();
                let draws = ctl.draws();
                let d = ctl.decide(&keys[k], &mut |id| {
                    let c: Vec<Repair> = set.iter().filter(|s| s.id == id).cloned().collect();
                    if c.is_empty() { Err(Outcome::NoV) } else { Ok(c) }
                });
                match (&d, deployed.get(&k)) {
                    (Decision::Apply(s), Some(dep)) => {
                        prop_assert_eq!(s, dep);
                        prop_assert_eq!(ctl.draws(), draws);
                    }
                    (Decision::Apply(s), None) => prop_assert!(set.contains(s)),
                    (Decision::Exhausted, None) => {}
                    (other, dep) => prop_assert!(false, "{:?} with deployment {:?}", other, dep),
                }
                let state = ctl.state(&keys[k]).cloned().unwrap_or_default();
                let before = tried.entry(k).or_default();
                prop_assert!(state.tried.starts_with(before));
                let mut uniq = state.tried.clone();
                uniq.sort_by_key(|s| s.to_string());
                uniq.dedup();
                prop_assert_eq!(uniq.len(), state.tried.len());
                *before = state.tried.clone();
            }
            for (key, s) in ctl.end_run(success) {
                let k = keys.iter().position(|x| *x == key).unwrap();
                if let Some(old) = deployed.get(&k) {
                    prop_assert_eq!(old, &s);
                }
                deployed.insert(k, s);
            }
            for (k, s) in &deployed {
                prop_assert_eq!(ctl.state(&keys[*k]).unwrap().deployed.as_ref(), Some(s));
            }
        }
    }
}
