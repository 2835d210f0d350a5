//! Strategy selection per crash point: fixed-strategy benchmarking and the
//! randomized explore-then-deploy loop.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::strategy::{Outcome, Strategy, StrategyId};
use crate::frontend::CrashPointKey;

pub const DEFAULT_SEED: u64 = 20150402;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepairMode {
    Off,
    /// Always apply the first candidate of one strategy.
    Fixed(StrategyId),
    /// Pick uniformly among untried candidates of the enabled strategies.
    Explore(Vec<StrategyId>),
}

impl RepairMode {
    pub fn explore_all() -> Self {
        RepairMode::Explore(StrategyId::ALL.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Crash,
    Try,
    Success,
    Deploy,
    Exhausted,
}

/// One line of the repair log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub event: Event,
    pub crash_point: Option<String>,
    pub strategy: Option<StrategyId>,
    pub parameter: Option<String>,
    pub rng_draw: Option<u64>,
    /// Logical clock: position of the record in the controller's log.
    pub timestamp: u64,
    pub run: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl LogRecord {
    /// A fresh attempt, as opposed to a deployed strategy being reapplied or
    /// a note that an attempt failed while being applied.
    pub fn is_attempt(&self) -> bool {
        self.event == Event::Try
            && !matches!(self.detail.as_deref(), Some(d) if d == DEPLOYED_NOTE || d.starts_with(FAILED_NOTE))
    }
}

const DEPLOYED_NOTE: &str = "deployed";
const FAILED_NOTE: &str = "failed: ";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CrashPointState {
    /// Candidates in the order they were tried; never shrinks.
    pub tried: Vec<Strategy>,
    /// Set once, never overwritten.
    pub deployed: Option<Strategy>,
    /// Size of the candidate set when the point was first explored.
    pub candidates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentEntry {
    pub strategy: StrategyId,
    #[serde(default)]
    pub parameter: Option<String>,
}

/// crash point → deployed strategy, as exported to and loaded from JSON.
pub type DeploymentTable = BTreeMap<String, DeploymentEntry>;

/// What to do at a harmful dereference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Apply(Strategy),
    /// Fixed strategy could not be applied here.
    NotApplicable(StrategyId, Outcome),
    /// Nothing left to try; the NullPointerException proceeds.
    Exhausted,
    /// Repair disabled.
    Pass,
}

#[derive(Debug, Clone)]
pub struct Controller {
    pub mode: RepairMode,
    pub seed: u64,
    pub depth: u32,
    rng: ChaCha8Rng,
    states: BTreeMap<CrashPointKey, CrashPointState>,
    log: Vec<LogRecord>,
    run: u32,
    draws: u64,
    // per run
    choices: HashMap<CrashPointKey, Decision>,
    applied: Vec<(CrashPointKey, Strategy)>,
    failure: Option<Outcome>,
    exhausted: bool,
}

impl Controller {
    pub fn new(mode: RepairMode, seed: u64) -> Self {
        Controller {
            mode,
            seed,
            depth: super::manufacture::DEFAULT_DEPTH,
            rng: ChaCha8Rng::seed_from_u64(seed),
            states: BTreeMap::new(),
            log: Vec::new(),
            run: 0,
            draws: 0,
            choices: HashMap::new(),
            applied: Vec::new(),
            failure: None,
            exhausted: false,
        }
    }

    pub fn off() -> Self {
        Controller::new(RepairMode::Off, DEFAULT_SEED)
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth.max(1);
        self
    }

    pub fn enabled(&self) -> bool {
        self.mode != RepairMode::Off
    }

    pub fn load_deployments(&mut self, table: &DeploymentTable) -> Result<(), String> {
        for (k, e) in table {
            let key: CrashPointKey = k.parse().map_err(|e| format!("{e}"))?;
            let st = self.states.entry(key).or_default();
            if st.deployed.is_none() {
                st.deployed = Some(Strategy::new(e.strategy, e.parameter.clone()));
            }
        }
        Ok(())
    }

    pub fn deployments(&self) -> DeploymentTable {
        self.states
            .iter()
            .filter_map(|(k, s)| {
                s.deployed
                    .as_ref()
                    .map(|d| (k.to_string(), DeploymentEntry { strategy: d.id, parameter: d.parameter.clone() }))
            })
            .collect()
    }

    pub fn state(&self, key: &CrashPointKey) -> Option<&CrashPointState> {
        self.states.get(key)
    }

    pub fn states(&self) -> &BTreeMap<CrashPointKey, CrashPointState> {
        &self.states
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    /// Total random draws so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn run_index(&self) -> u32 {
        self.run
    }

    pub fn begin_run(&mut self) {
        self.run += 1;
        self.choices.clear();
        self.applied.clear();
        self.failure = None;
        self.exhausted = false;
    }

    /// Closes a run. In explore mode a successful run deploys every strategy
    /// it applied. Returns the newly deployed crash points.
    pub fn end_run(&mut self, success: bool) -> Vec<(CrashPointKey, Strategy)> {
        let mut deployed = Vec::new();
        if success && !self.applied.is_empty() {
            self.record(Event::Success, None, None, None, None);
            if matches!(self.mode, RepairMode::Explore(_)) {
                for (k, s) in self.applied.clone() {
                    let st = self.states.entry(k.clone()).or_default();
                    if st.deployed.is_none() {
                        st.deployed = Some(s.clone());
                        deployed.push((k.clone(), s.clone()));
                        self.record(Event::Deploy, Some(&k), Some(&s), None, None);
                    }
                }
            }
        }
        deployed
    }

    pub fn applied(&self) -> &[(CrashPointKey, Strategy)] {
        &self.applied
    }

    pub fn failure(&self) -> Option<Outcome> {
        self.failure
    }

    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    /// Log records of the current run.
    pub fn run_log(&self) -> Vec<LogRecord> {
        self.log.iter().filter(|r| r.run == self.run).cloned().collect()
    }

    pub fn cached(&self, key: &CrashPointKey) -> Option<&Decision> {
        self.choices.get(key)
    }

    /// Chooses what to do at a harmful dereference. `candidates` yields the
    /// applicable parametrized candidates of one strategy or why there are none.
    /// Within one run a crash point keeps its first decision.
    pub fn decide(
        &mut self,
        key: &CrashPointKey,
        candidates: &mut dyn FnMut(StrategyId) -> Result<Vec<Strategy>, Outcome>,
    ) -> Decision {
        if let Some(d) = self.choices.get(key) {
            return d.clone();
        }
        if self.mode == RepairMode::Off {
            return Decision::Pass;
        }
        self.record(Event::Crash, Some(key), None, None, None);
        let deployed = self.states.get(key).and_then(|s| s.deployed.clone());
        let decision = if let Some(s) = deployed {
            self.record_try(key, &s, None, Some(DEPLOYED_NOTE.into()));
            Decision::Apply(s)
        } else {
            match self.mode.clone() {
                RepairMode::Off => Decision::Pass,
                RepairMode::Fixed(id) => match candidates(id) {
                    Ok(c) if !c.is_empty() => {
                        let s = c.into_iter().next().unwrap();
                        self.record_try(key, &s, None, None);
                        self.states.entry(key.clone()).or_default().tried.push(s.clone());
                        Decision::Apply(s)
                    }
                    Ok(_) => unreachable!("candidate enumerators report empty sets as an outcome"),
                    Err(code) => {
                        self.record_try(key, &Strategy::bare(id), None, Some(format!("not applicable: {code}")));
                        self.failure.get_or_insert(code);
                        Decision::NotApplicable(id, code)
                    }
                },
                RepairMode::Explore(enabled) => {
                    let tried = self.states.get(key).map(|s| s.tried.clone()).unwrap_or_default();
                    let pool: Vec<Strategy> = enabled
                        .iter()
                        .flat_map(|id| candidates(*id).unwrap_or_default())
                        .filter(|s| !tried.contains(s))
                        .collect();
                    if pool.is_empty() {
                        self.exhausted = true;
                        self.record(Event::Exhausted, Some(key), None, None, None);
                        Decision::Exhausted
                    } else {
                        let st = self.states.entry(key.clone()).or_default();
                        st.candidates.get_or_insert(pool.len() + tried.len());
                        let draw = self.rng.gen_range(0..pool.len());
                        self.draws += 1;
                        let s = pool[draw].clone();
                        self.states.entry(key.clone()).or_default().tried.push(s.clone());
                        self.record_try(key, &s, Some(draw as u64), Some(format!("{} untried", pool.len())));
                        Decision::Apply(s)
                    }
                }
            }
        };
        if let Decision::Apply(s) = &decision {
            self.applied.push((key.clone(), s.clone()));
        }
        self.choices.insert(key.clone(), decision.clone());
        decision
    }

    /// An applied strategy failed at runtime (e.g. manufacturing threw).
    pub fn application_failed(&mut self, key: &CrashPointKey, code: Outcome, why: &str) {
        self.failure.get_or_insert(code);
        self.applied.retain(|(k, _)| k != key);
        let s = match self.choices.get(key) {
            Some(Decision::Apply(s)) => Some(s.clone()),
            _ => None,
        };
        self.record(Event::Try, Some(key), s.as_ref(), None, Some(format!("{FAILED_NOTE}{why}")));
    }

    fn record_try(&mut self, key: &CrashPointKey, s: &Strategy, draw: Option<u64>, detail: Option<String>) {
        self.record(Event::Try, Some(key), Some(s), draw, detail);
    }

    fn record(
        &mut self,
        event: Event,
        key: Option<&CrashPointKey>,
        s: Option<&Strategy>,
        draw: Option<u64>,
        detail: Option<String>,
    ) {
        let timestamp = self.log.len() as u64;
        self.log.push(LogRecord {
            event,
            crash_point: key.map(|k| k.to_string()),
            strategy: s.map(|s| s.id),
            parameter: s.and_then(|s| s.parameter.clone()),
            rng_draw: draw,
            timestamp,
            run: self.run,
            detail,
        });
    }
}

pub fn log_to_json_lines(log: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in log {
        out.push_str(&serde_json::to_string(r).expect("log records serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> CrashPointKey {
        "a.mj:10-15".parse().unwrap()
    }

    fn three(id: StrategyId) -> Result<Vec<Strategy>, Outcome> {
        match id {
            StrategyId::S1a => Ok(vec![Strategy::new(id, Some("x".into())), Strategy::new(id, Some("y".into()))]),
            StrategyId::S3 => Ok(vec![Strategy::bare(id)]),
            _ => Err(Outcome::RI),
        }
    }

    #[test]
    fn fixed_mode_uses_first_candidate() {
        let mut c = Controller::new(RepairMode::Fixed(StrategyId::S1a), 1);
        c.begin_run();
        assert_eq!(c.decide(&key(), &mut three), Decision::Apply(Strategy::new(StrategyId::S1a, Some("x".into()))));
        assert_eq!(c.draws(), 0);
    }

    #[test]
    fn fixed_mode_reports_not_applicable() {
        let mut c = Controller::new(RepairMode::Fixed(StrategyId::S4d), 1);
        c.begin_run();
        assert_eq!(c.decide(&key(), &mut three), Decision::NotApplicable(StrategyId::S4d, Outcome::RI));
        assert_eq!(c.failure(), Some(Outcome::RI));
    }

    #[test]
    fn explore_never_repeats_and_exhausts() {
        let mut c = Controller::new(RepairMode::explore_all(), 7);
        let mut seen = Vec::new();
        for _ in 0..3 {
            c.begin_run();
            match c.decide(&key(), &mut three) {
                Decision::Apply(s) => seen.push(s),
                d => panic!("{d:?}"),
            }
            c.end_run(false);
        }
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 3);
        c.begin_run();
        assert_eq!(c.decide(&key(), &mut three), Decision::Exhausted);
        assert!(c.exhausted());
    }

    #[test]
    fn decision_is_stable_within_a_run() {
        let mut c = Controller::new(RepairMode::explore_all(), 7);
        c.begin_run();
        let a = c.decide(&key(), &mut three);
        let b = c.decide(&key(), &mut three);
        assert_eq!(a, b);
        assert_eq!(c.draws(), 1);
    }

    #[test]
    fn deployment_is_sticky_and_draw_free() {
        let mut c = Controller::new(RepairMode::explore_all(), 7);
        c.begin_run();
        let Decision::Apply(first) = c.decide(&key(), &mut three) else { panic!() };
        let deployed = c.end_run(true);
        assert_eq!(deployed, vec![(key(), first.clone())]);
        let draws = c.draws();
        c.begin_run();
        assert_eq!(c.decide(&key(), &mut three), Decision::Apply(first.clone()));
        assert_eq!(c.draws(), draws);
        c.end_run(false);
        assert_eq!(c.state(&key()).unwrap().deployed, Some(first));
    }

    #[test]
    fn same_seed_same_log() {
        let go = || {
            let mut c = Controller::new(RepairMode::explore_all(), 42);
            for _ in 0..3 {
                c.begin_run();
                c.decide(&key(), &mut three);
                c.end_run(false);
            }
            log_to_json_lines(c.log())
        };
        assert_eq!(go(), go());
    }

    #[test]
    fn deployments_round_trip() {
        let mut c = Controller::new(RepairMode::explore_all(), 3);
        c.begin_run();
        c.decide(&key(), &mut three);
        c.end_run(true);
        let table = c.deployments();
        let json = serde_json::to_string(&table).unwrap();
        let back: DeploymentTable = serde_json::from_str(&json).unwrap();
        let mut d = Controller::new(RepairMode::explore_all(), 9);
        d.load_deployments(&back).unwrap();
        assert_eq!(d.deployments(), table);
    }
}
