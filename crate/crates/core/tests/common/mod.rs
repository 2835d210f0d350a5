#![allow(dead_code)]

use std::path::PathBuf;

use npefix::frontend::check::CheckedProgram;
use npefix::frontend::{parse, SourceUnit};
use npefix::harness::{Corpus, OutcomeMatrix};
use npefix::runtime::{run, Controller, ExecutionResult, RunOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus() -> Corpus {
    Corpus::load(&corpus_dir().join("manifest.json")).expect("corpus manifest loads")
}

pub fn golden_matrix() -> OutcomeMatrix {
    let text = std::fs::read_to_string(corpus_dir().join("golden/matrix.json")).expect("golden matrix");
    serde_json::from_str(&text).expect("golden matrix parses")
}

pub fn program(src: &str) -> CheckedProgram {
    parse(&SourceUnit::new("t.mj", src)).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

pub fn run_off(p: &CheckedProgram, entry: &str) -> ExecutionResult {
    run(p, entry, &mut Controller::off(), &RunOptions::default()).expect("entry exists")
}

// Random try/catch/finally nestings.
//
// A program is a tree of nodes spread over a few methods. Every `Point`
// bumps a counter; the point whose number equals `Main.target` probes the
// catch stack and throws the site exception. Handlers print SITE when they
// catch it, which is the observed unwinding. Finally blocks never throw on
// their own (no raises, no calls), since a throwing finally replaces the
// exception in flight and the catch-stack model does not predict that.

pub const EXCEPTIONS: &[&str] =
    &["Exception", "NullPointerException", "ArithmeticException", "IllegalStateException", "AppError", "DeepError"];

pub fn parent(t: &str) -> Option<&'static str> {
    match t {
        "Exception" => None,
        "DeepError" => Some("AppError"),
        _ => Some("Exception"),
    }
}

pub fn is_subclass(t: &str, of: &str) -> bool {
    let mut cur = Some(t);
    while let Some(c) = cur {
        if c == of {
            return true;
        }
        cur = parent(c).map(|p| EXCEPTIONS.iter().find(|e| **e == p).copied().unwrap());
    }
    false
}

#[derive(Debug, Clone)]
pub enum Node {
    Point,
    Raise(&'static str),
    Call(usize),
    Try { body: Vec<Node>, catches: Vec<(&'static str, Vec<Node>)>, finally: Option<Vec<Node>> },
}

#[derive(Debug, Clone)]
pub struct Nesting {
    /// methods[0] is `main`; calls only go to higher indexes.
    pub methods: Vec<Vec<Node>>,
    pub site: &'static str,
}

fn gen_block(rng: &mut ChaCha8Rng, method: usize, n_methods: usize, depth: u32, in_finally: bool) -> Vec<Node> {
    let len = rng.gen_range(1..=3);
    (0..len)
        .map(|_| {
            let roll = rng.gen_range(0..10);
            match roll {
                0..=2 => Node::Point,
                3 if !in_finally => Node::Raise(EXCEPTIONS.choose(rng).unwrap()),
                4 | 5 if !in_finally && method + 1 < n_methods => Node::Call(rng.gen_range(method + 1..n_methods)),
                _ if depth < 3 => {
                    let n_catch = rng.gen_range(0..=2);
                    let finally = if n_catch == 0 || rng.gen_bool(0.4) {
                        Some(gen_block(rng, method, n_methods, depth + 1, true))
                    } else {
                        None
                    };
                    Node::Try {
                        body: gen_block(rng, method, n_methods, depth + 1, in_finally),
                        catches: (0..n_catch)
                            .map(|_| (*EXCEPTIONS.choose(rng).unwrap(), gen_block(rng, method, n_methods, depth + 1, in_finally)))
                            .collect(),
                        finally,
                    }
                }
                _ => Node::Point,
            }
        })
        .collect()
}

pub fn gen_nesting(seed: u64) -> Nesting {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=4);
    let methods = (0..n).map(|m| gen_block(&mut rng, m, n, 0, false)).collect();
    Nesting { methods, site: EXCEPTIONS.choose(&mut rng).unwrap() }
}

fn render_block(nodes: &[Node], indent: usize, out: &mut String, handler: &mut usize) {
    let pad = "    ".repeat(indent);
    for n in nodes {
        match n {
            Node::Point => out.push_str(&format!("{pad}point();\n")),
            Node::Raise(t) => out.push_str(&format!("{pad}throw new {t}(\"other\");\n")),
            Node::Call(m) => out.push_str(&format!("{pad}m{m}();\n")),
            Node::Try { body, catches, finally } => {
                out.push_str(&format!("{pad}try {{\n"));
                render_block(body, indent + 1, out, handler);
                for (t, b) in catches {
                    *handler += 1;
                    let v = format!("e{handler}");
                    out.push_str(&format!("{pad}}} catch ({t} {v}) {{\n"));
                    out.push_str(&format!("{pad}    if ({v}.getMessage() == \"site\") {{\n{pad}        print(\"SITE\");\n{pad}    }}\n"));
                    render_block(b, indent + 1, out, handler);
                }
                if let Some(f) = finally {
                    out.push_str(&format!("{pad}}} finally {{\n"));
                    render_block(f, indent + 1, out, handler);
                }
                out.push_str(&format!("{pad}}}\n"));
            }
        }
    }
}

impl Nesting {
    pub fn source(&self, target: i64) -> String {
        let mut out = String::from(
            "class AppError extends Exception {\n    AppError(string m) { message = m; }\n}\n\
             class DeepError extends AppError {\n    DeepError(string m) { message = m; }\n}\n\
             class Main {\n",
        );
        out.push_str(&format!("    static int target = {target};\n    static int n;\n"));
        out.push_str(&format!(
            "    void point() {{\n        n = n + 1;\n        print(\".\");\n        if (n == target) {{\n            \
             __npefix_probeCaught(\"{s}\");\n            throw new {s}(\"site\");\n        }}\n    }}\n",
            s = self.site
        ));
        let mut handler = 0;
        for (i, body) in self.methods.iter().enumerate() {
            let name = if i == 0 { "main".to_string() } else { format!("m{i}") };
            out.push_str(&format!("    void {name}() {{\n"));
            render_block(body, 2, &mut out, &mut handler);
            out.push_str("    }\n");
        }
        out.push_str("}\n");
        out
    }

    /// Independent model of the unwinding: whether a handler catches the
    /// site exception when point `target` fires, or `None` if it is never
    /// reached. Also returns the number of points reached.
    pub fn simulate(&self, target: i64) -> (Option<bool>, i64) {
        struct Sim<'a> {
            n: &'a Nesting,
            count: i64,
            target: i64,
            fired: bool,
            caught: bool,
        }
        #[derive(Clone, Copy)]
        struct Exc {
            ty: &'static str,
            site: bool,
        }
        impl Sim<'_> {
            fn block(&mut self, nodes: &[Node]) -> Result<(), Exc> {
                for node in nodes {
                    match node {
                        Node::Point => {
                            self.count += 1;
                            if self.count == self.target {
                                self.fired = true;
                                return Err(Exc { ty: self.n.site, site: true });
                            }
                        }
                        Node::Raise(t) => return Err(Exc { ty: t, site: false }),
                        Node::Call(m) => self.block(&self.n.methods[*m].clone())?,
                        Node::Try { body, catches, finally } => {
                            let mut r = self.block(body);
                            if let Err(e) = r {
                                if let Some((_, h)) = catches.iter().find(|(t, _)| is_subclass(e.ty, t)) {
                                    self.caught |= e.site;
                                    r = self.block(h);
                                }
                            }
                            if let Some(f) = finally {
                                self.block(f)?;
                            }
                            r?;
                        }
                    }
                }
                Ok(())
            }
        }
        let mut sim = Sim { n: self, count: 0, target, fired: false, caught: false };
        let _ = sim.block(&self.methods[0]);
        (sim.fired.then_some(sim.caught), sim.count)
    }
}

/// One catch-stack query: (will_be_caught, interpreter caught, model caught).
pub fn catch_query(n: &Nesting, target: i64) -> (bool, bool, bool) {
    use npefix::runtime::TraceEvent;
    use npefix::transform::{transform_all, TransformConfig};
    let src = n.source(target);
    let p = program(&src);
    let cfg = TransformConfig { enable_catch_stack: true, ..TransformConfig::none() };
    let t = transform_all(&p, &cfg).unwrap();
    let r = run_off(&t, "Main");
    let probes: Vec<bool> = r
        .trace
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Probe { caught, .. } => Some(*caught),
            _ => None,
        })
        .collect();
    assert_eq!(probes.len(), 1, "one probe expected\n{src}");
    let actual = r.stdout.lines().any(|l| l == "SITE");
    let model = n.simulate(target).0.expect("model reaches the site");
    (probes[0], actual, model)
}

/// Runs `count` random queries; returns (agreements, caught count, first disagreement).
pub fn catch_oracle(count: usize) -> (usize, usize, Option<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut queries, mut agree, mut caught, mut seed) = (0, 0, 0, 0u64);
    let mut first_bad = None;
    while queries < count {
        seed += 1;
        let n = gen_nesting(seed);
        let (_, reached) = n.simulate(-1);
        if reached == 0 {
            continue;
        }
        let target = rng.gen_range(1..=reached);
        let (predicted, actual, model) = catch_query(&n, target);
        queries += 1;
        caught += actual as usize;
        if predicted == actual && actual == model {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!(
                "seed {seed} target {target}: predicted {predicted}, interpreter {actual}, model {model}"
            ));
        }
    }
    (agree, caught, first_bad)
}

// After the repaired dereference the program reads the source variable
// again: local injection leaves it null, global injection rebinds it.
pub const INJECTION_PROBE: &str = "class B {
    int v = 5;
    int get() { return v; }
}
class Main {
    B keep = new B();
    void main() {
        B a = null;
        int x = a.get();
        print(x);
        print(a == null);
        print(a == keep);
    }
}";

pub fn injection_probe(id: npefix::runtime::StrategyId) -> Vec<String> {
    use npefix::runtime::RepairMode;
    use npefix::transform::{transform_all, TransformConfig};
    let t = transform_all(&program(INJECTION_PROBE), &TransformConfig::all()).unwrap();
    let mut ctl = Controller::new(RepairMode::Fixed(id), 1);
    let r = run(&t, "Main", &mut ctl, &RunOptions::default()).unwrap();
    assert!(r.exit.is_normal(), "{id}: {}", r.exit);
    assert_eq!(r.applied.len(), 1, "{id}");
    r.stdout.lines().map(String::from).collect()
}

pub const EXPLORATION_SEEDS: [u64; 5] = [1, 2, 3, 20150402, 987654321];

#[derive(Debug, Default)]
pub struct ExplorationSummary {
    pub sessions: usize,
    pub deployed: usize,
    pub exhausted: usize,
    pub violations: Vec<String>,
}

/// Seeded sessions over every crash case, checking no repeats, bounded
/// deployment, draw-free replay and exhaustion equivalence.
pub fn exploration_check(seeds: &[u64]) -> ExplorationSummary {
    use npefix::harness::session::{run_exploration_session, SessionEnd, DEFAULT_MAX_RUNS};
    use npefix::transform::{transform_all, TransformConfig};
    use std::collections::BTreeSet;

    let c = corpus();
    let golden = golden_matrix();
    let mut sum = ExplorationSummary::default();
    for case in c.crashing() {
        let original = c.program(case).unwrap();
        let instrumented = transform_all(&original, &TransformConfig::all()).unwrap();
        let baseline = run_off(&original, &case.entry);
        let viable = golden.cases.iter().find(|r| r.name == case.name).unwrap().success_count > 0;
        for &seed in seeds {
            let s = run_exploration_session(&original, &instrumented, &case.entry, seed, DEFAULT_MAX_RUNS).unwrap();
            sum.sessions += 1;
            let label = format!("{} seed {seed}", case.name);
            let mut bad = |m: String| sum.violations.push(format!("{label}: {m}"));

            let mut seen = BTreeSet::new();
            for r in s.log.iter().filter(|r| r.is_attempt()) {
                if !seen.insert((r.crash_point.clone(), r.strategy, r.parameter.clone())) {
                    bad(format!("repeated {:?} {:?} {:?}", r.crash_point, r.strategy, r.parameter));
                }
            }
            if viable && (s.end != SessionEnd::Deployed || s.invocations() > s.candidates) {
                bad(format!("{:?} after {} runs with {} candidates", s.end, s.invocations(), s.candidates));
            }
            match s.end {
                SessionEnd::Deployed => {
                    sum.deployed += 1;
                    let mut ctl = s.controller.clone();
                    let before = ctl.draws();
                    let again = run(&instrumented, &case.entry, &mut ctl, &RunOptions::default()).unwrap();
                    if ctl.draws() != before || !again.exit.is_normal() || again.stdout != s.final_stdout {
                        bad("replay of the deployed strategy drew again or diverged".into());
                    }
                }
                SessionEnd::Exhausted => {
                    sum.exhausted += 1;
                    if s.final_stdout != baseline.stdout || s.final_exit() != &baseline.exit {
                        bad("exhausted run differs from the uninstrumented crash".into());
                    }
                }
                other => bad(format!("unexpected end {other:?}")),
            }
        }
    }
    sum
}

pub fn inventory() -> Vec<npefix::harness::seeding::RemovedAt> {
    use npefix::harness::seeding::RemovedAt;
    #[derive(serde::Deserialize)]
    struct Inventory {
        checks: Vec<Check>,
    }
    #[derive(serde::Deserialize)]
    struct Check {
        file: String,
        line: usize,
        target: String,
    }
    let text = std::fs::read_to_string(corpus_dir().join("seeding/shop/inventory.json")).unwrap();
    let inv: Inventory = serde_json::from_str(&text).unwrap();
    let mut v: Vec<RemovedAt> =
        inv.checks.into_iter().map(|c| RemovedAt { file: c.file, line: c.line, target: c.target }).collect();
    v.sort();
    v
}

/// Suggests the patch for the first application of `id` on a crash case,
/// substitutes it and runs the patched original. Err describes the failure.
pub fn patch_check(case_name: &str, id: npefix::runtime::StrategyId) -> Result<String, String> {
    use npefix::frontend::parser::parse_statements;
    use npefix::runtime::{apply_patch, suggest_patch, RepairMode};
    use npefix::transform::{transform_all, TransformConfig};

    let c = corpus();
    let case = c.case(case_name).map_err(|e| e.to_string())?;
    let original = c.program(case).map_err(|e| e.to_string())?;
    if run_off(&original, &case.entry).exit.is_normal() {
        return Err("case does not fail".into());
    }
    let t = transform_all(&original, &TransformConfig::all()).unwrap();
    let mut ctl = Controller::new(RepairMode::Fixed(id), 1);
    let r = run(&t, &case.entry, &mut ctl, &RunOptions::default()).unwrap();
    let (key, strategy) = match (r.exit.is_normal(), r.applied.into_iter().next()) {
        (true, Some(a)) => a,
        _ => return Err(format!("{id} does not repair the case")),
    };
    let patch = suggest_patch(&original, &key, &strategy).map_err(|e| e.to_string())?;
    parse_statements("snippet.mj", &patch.snippet).map_err(|e| format!("snippet does not parse: {e}"))?;
    let patched = apply_patch(&original, &patch).map_err(|e| e.to_string())?;
    let after = run_off(&patched, &case.entry);
    if !after.exit.is_normal() {
        return Err(format!("patched program fails: {}", after.exit));
    }
    Ok(patch.snippet)
}
