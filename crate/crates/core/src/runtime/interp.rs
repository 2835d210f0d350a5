//! Tree-walking interpreter for (instrumented) MiniJ.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use serde::Serialize;

use super::catch_stack::CatchStack;
use super::controller::{Controller, Decision, LogRecord};
use super::manufacture::new_var;
use super::pool::{fits, get_var, Entry, ValuePool};
use super::strategy::{Outcome, Strategy, StrategyId};
use super::value::{ObjRef, Object, Value};
use crate::frontend::ast::*;
use crate::frontend::check::CheckedProgram;
use crate::frontend::types::{Type, TypeTable, ARITHMETIC_EXCEPTION, ASSERTION_ERROR, NPE};
use crate::frontend::{prelude, CrashPointKey};
use crate::transform::hooks::*;

const STACK_BYTES: usize = 512 << 20;
const STRATEGY_FIELD: &str = "__strategy";
const VALUE_FIELD: &str = "__value";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    /// Statement and call budget; exceeding it aborts the run.
    pub fuel: u64,
    pub max_depth: usize,
    /// Record catch-stack and value-pool events.
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { fuel: 20_000_000, max_depth: 1500, trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Exit {
    Normal,
    Uncaught { exception: String, message: Option<String> },
    /// Step or depth limit; not catchable by the program.
    Aborted { reason: String },
}

impl Exit {
    pub fn is_normal(&self) -> bool {
        matches!(self, Exit::Normal)
    }

    pub fn is_npe(&self) -> bool {
        matches!(self, Exit::Uncaught { exception, .. } if exception == NPE)
    }

    pub fn exception(&self) -> Option<&str> {
        match self {
            Exit::Uncaught { exception, .. } => Some(exception),
            _ => None,
        }
    }
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exit::Normal => f.write_str("normal"),
            Exit::Uncaught { exception, message: Some(m) } => write!(f, "uncaught {exception}: {m}"),
            Exit::Uncaught { exception, message: None } => write!(f, "uncaught {exception}"),
            Exit::Aborted { reason } => write!(f, "aborted: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event")]
pub enum TraceEvent {
    CatchAdd { id: i64, types: Vec<String> },
    CatchRemove { id: i64 },
    /// `will_be_caught` evaluated by a probe hook.
    Probe { exception: String, caught: bool },
    MethodStart { id: i64 },
    MethodEnd { id: i64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ExecutionResult {
    pub stdout: String,
    pub exit: Exit,
    pub outcome: Outcome,
    pub log: Vec<LogRecord>,
    pub applied: Vec<(CrashPointKey, Strategy)>,
    /// Strategies deployed at the end of this run.
    pub deployed: Vec<(CrashPointKey, Strategy)>,
    pub trace: Vec<TraceEvent>,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("entry class `{0}` not found")]
    NoEntryClass(String),
    #[error("entry class `{0}` has no method `void {1}()`")]
    NoMain(String, String),
    #[error("entry class `{0}` cannot be instantiated without arguments")]
    NotInstantiable(String),
}

/// Classification of a run: the first inapplicable strategy, otherwise by exit.
pub fn classify(failure: Option<Outcome>, exit: &Exit) -> Outcome {
    if let Some(code) = failure {
        return code;
    }
    match exit {
        Exit::Normal => Outcome::OK,
        e if e.is_npe() => Outcome::NPE,
        _ => Outcome::Ex,
    }
}

/// Runs an entry point on a fresh interpreter: `Class` runs `main`,
/// `Class.method` runs that method. Opens and closes one run on the
/// controller.
pub fn run(
    program: &CheckedProgram,
    entry: &str,
    controller: &mut Controller,
    opts: &RunOptions,
) -> Result<ExecutionResult, RunError> {
    std::thread::scope(|s| {
        let handle = std::thread::Builder::new()
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, || run_here(program, entry, controller, opts))
            .expect("spawn interpreter thread");
        match handle.join() {
            Ok(r) => r,
            Err(p) => std::panic::resume_unwind(p),
        }
    })
}

/// Like [`run`] but on the calling thread's stack.
pub fn run_here(
    program: &CheckedProgram,
    entry: &str,
    controller: &mut Controller,
    opts: &RunOptions,
) -> Result<ExecutionResult, RunError> {
    let (class, method) = entry.split_once('.').unwrap_or((entry, "main"));
    let mut it = Interp::new(program, controller, opts);
    let main = it.entry_main(class, method)?;
    it.ctl.begin_run();
    let result = it.run_main(class, main);
    let exit = match result {
        Ok(()) => Exit::Normal,
        Err(Unwind::Throw(v)) => {
            let exception = v.as_obj().map(|o| o.class.to_string()).unwrap_or_else(|| "null".into());
            let message = match v.get_field("message") {
                Some(Value::Str(s)) => Some(s.to_string()),
                _ => None,
            };
            Exit::Uncaught { exception, message }
        }
        Err(Unwind::Abort(reason)) => Exit::Aborted { reason },
    };
    let outcome = classify(it.ctl.failure(), &exit);
    let applied = it.ctl.applied().to_vec();
    let deployed = it.ctl.end_run(exit.is_normal());
    Ok(ExecutionResult {
        stdout: std::mem::take(&mut it.out),
        exit,
        outcome,
        log: it.ctl.run_log(),
        applied,
        deployed,
        trace: std::mem::take(&mut it.trace),
        steps: it.steps,
    })
}

enum Unwind {
    Throw(Value),
    Abort(String),
}

type R<T> = Result<T, Unwind>;

enum Flow {
    Next,
    Return(Value),
}

enum Place<'p> {
    Var(&'p str),
    Field(ObjRef, &'p str),
    Static(&'p str, &'p str),
}

struct ClassRt<'p> {
    decl: &'p ClassDecl,
    /// Self first, then superclasses.
    chain: Vec<&'p ClassDecl>,
    methods: HashMap<&'p str, (&'p str, &'p MethodDecl)>,
    /// name → (owner, is_static)
    fields: HashMap<&'p str, (&'p str, bool)>,
}

struct Frame<'p> {
    this: Option<ObjRef>,
    class: &'p str,
    locals: Vec<(&'p str, Value)>,
    ret: Type,
    /// Whether a forced return can leave this activation.
    force_return: bool,
    /// Value-pool depth on entry; frames above it belong to this activation.
    pool_mark: usize,
}

struct Interp<'p, 'c> {
    table: &'p TypeTable,
    classes: HashMap<&'p str, ClassRt<'p>>,
    statics: HashMap<(&'p str, &'p str), Value>,
    static_order: Vec<(&'p str, &'p str)>,
    ctl: &'c mut Controller,
    /// Off while manufacturing values.
    repair: bool,
    out: String,
    catch: CatchStack,
    pool: ValuePool,
    frames: Vec<Frame<'p>>,
    next_obj: u64,
    next_id: i64,
    steps: u64,
    opts: RunOptions,
    trace: Vec<TraceEvent>,
}

fn lit(e: &Expr) -> &str {
    match &e.kind {
        ExprKind::Str(s) => s,
        _ => "",
    }
}

impl<'p, 'c> Interp<'p, 'c> {
    fn new(program: &'p CheckedProgram, ctl: &'c mut Controller, opts: &RunOptions) -> Self {
        let decls: HashMap<&str, &ClassDecl> = prelude()
            .classes
            .iter()
            .chain(&program.program.classes)
            .map(|c| (c.name.as_str(), c))
            .collect();
        let mut classes = HashMap::new();
        let mut statics = HashMap::new();
        let mut static_order = Vec::new();
        for c in prelude().classes.iter().chain(&program.program.classes) {
            let chain: Vec<&ClassDecl> =
                program.table.class_chain(&c.name).into_iter().filter_map(|t| decls.get(t.name.as_str()).copied()).collect();
            let mut methods = HashMap::new();
            let mut fields = HashMap::new();
            for d in &chain {
                for m in &d.methods {
                    if m.body.is_some() {
                        methods.entry(m.name.as_str()).or_insert((d.name.as_str(), m));
                    }
                }
                for f in &d.fields {
                    fields.entry(f.name.as_str()).or_insert((d.name.as_str(), f.is_static));
                }
            }
            for f in c.fields.iter().filter(|f| f.is_static) {
                statics.insert((c.name.as_str(), f.name.as_str()), Value::default_for(&Type::from_ref(&f.ty)));
                static_order.push((c.name.as_str(), f.name.as_str()));
            }
            classes.insert(c.name.as_str(), ClassRt { decl: c, chain, methods, fields });
        }
        Interp {
            table: &program.table,
            classes,
            statics,
            static_order,
            ctl,
            repair: true,
            out: String::new(),
            catch: CatchStack::new(),
            pool: ValuePool::default(),
            frames: Vec::new(),
            next_obj: 0,
            next_id: 0,
            steps: 0,
            opts: opts.clone(),
            trace: Vec::new(),
        }
    }

    fn entry_main(&self, entry: &str, method: &str) -> Result<&'p MethodDecl, RunError> {
        let rt = self.classes.get(entry).ok_or_else(|| RunError::NoEntryClass(entry.to_string()))?;
        if rt.decl.kind != ClassKind::Class {
            return Err(RunError::NotInstantiable(entry.to_string()));
        }
        if !rt.decl.ctors.is_empty() && !rt.decl.ctors.iter().any(|k| k.params.is_empty()) {
            return Err(RunError::NotInstantiable(entry.to_string()));
        }
        match rt.methods.get(method) {
            Some((_, m)) if m.params.is_empty() && m.ret.is_void() => Ok(m),
            _ => Err(RunError::NoMain(entry.to_string(), method.to_string())),
        }
    }

    fn run_main(&mut self, entry: &str, main: &'p MethodDecl) -> R<()> {
        let entry: &'p str = self.classes[entry].decl.name.as_str();
        self.frames.push(Frame { this: None, class: entry, locals: Vec::new(), ret: Type::Void, force_return: false, pool_mark: self.pool.depth() });
        for (class, name) in self.static_order.clone() {
            let decl = self.classes[class].decl;
            let f = decl.fields.iter().find(|f| f.name == name).unwrap();
            if let Some(init) = &f.init {
                self.frames.push(Frame { this: None, class, locals: Vec::new(), ret: Type::Void, force_return: false, pool_mark: self.pool.depth() });
                let v = self.eval(init);
                self.frames.pop();
                self.statics.insert((class, name), v?);
            }
        }
        let obj = self.instantiate(entry, Vec::new())?;
        let owner = self.classes[entry].methods[main.name.as_str()].0;
        self.call_method(obj, owner, main, Vec::new())?;
        Ok(())
    }

    // ---- helpers -------------------------------------------------------

    fn frame(&self) -> &Frame<'p> {
        self.frames.last().expect("active frame")
    }

    fn frame_mut(&mut self) -> &mut Frame<'p> {
        self.frames.last_mut().expect("active frame")
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.opts.fuel {
            return Err(Unwind::Abort(format!("step limit of {} exceeded", self.opts.fuel)));
        }
        Ok(())
    }

    fn alloc(&mut self, class: &str) -> ObjRef {
        self.next_obj += 1;
        Rc::new(Object { id: self.next_obj, class: Rc::from(class), fields: RefCell::new(HashMap::new()) })
    }

    fn exception(&mut self, class: &str, message: String) -> Unwind {
        let o = self.alloc(class);
        o.fields.borrow_mut().insert("message".into(), Value::str(&message));
        Unwind::Throw(Value::Obj(o))
    }

    fn npe(&mut self, what: &str) -> Unwind {
        self.exception(NPE, format!("{what} on null"))
    }

    fn static_owner(&self, class: &str, name: &str) -> Option<(&'p str, &'p str)> {
        let rt = self.classes.get(class)?;
        let (owner, _) = rt.fields.get(name)?;
        let decl = self.classes[owner].decl;
        let f = decl.fields.iter().find(|f| f.name == name)?;
        Some((decl.name.as_str(), f.name.as_str()))
    }

    fn lookup_var(&mut self, name: &str) -> R<Value> {
        let frame = self.frame();
        if let Some((_, v)) = frame.locals.iter().rev().find(|(n, _)| *n == name) {
            return Ok(v.clone());
        }
        let class = frame.class;
        match self.classes[class].fields.get(name).copied() {
            Some((owner, true)) => {
                let key = self.static_owner(owner, name).unwrap();
                Ok(self.statics[&key].clone())
            }
            Some((_, false)) => match &self.frame().this {
                Some(o) => Ok(o.fields.borrow().get(name).cloned().unwrap_or_default()),
                None => Err(Unwind::Abort(format!("instance field `{name}` read without `this`"))),
            },
            None => Err(Unwind::Abort(format!("unknown variable `{name}`"))),
        }
    }

    fn assign_var(&mut self, name: &'p str, v: Value) -> R<()> {
        let frame = self.frame_mut();
        if let Some(slot) = frame.locals.iter_mut().rev().find(|(n, _)| *n == name) {
            slot.1 = v;
            return Ok(());
        }
        let class = frame.class;
        match self.classes[class].fields.get(name).copied() {
            Some((owner, true)) => {
                let key = self.static_owner(owner, name).unwrap();
                self.statics.insert(key, v);
                Ok(())
            }
            Some((_, false)) => match &self.frame().this {
                Some(o) => {
                    o.fields.borrow_mut().insert(name.to_string(), v);
                    Ok(())
                }
                None => Err(Unwind::Abort(format!("instance field `{name}` written without `this`"))),
            },
            None => Err(Unwind::Abort(format!("unknown variable `{name}`"))),
        }
    }

    fn is_local(&self, name: &str) -> bool {
        self.frame().locals.iter().any(|(n, _)| *n == name)
    }

    // ---- statements ----------------------------------------------------

    fn exec_block(&mut self, b: &'p Block) -> R<Flow> {
        let mark = self.frame().locals.len();
        let mut result = Ok(Flow::Next);
        for s in &b.stmts {
            match self.exec_stmt(s) {
                Ok(Flow::Next) => {}
                other => {
                    result = other;
                    break;
                }
            }
        }
        self.frame_mut().locals.truncate(mark);
        result
    }

    fn exec_stmt(&mut self, s: &'p Stmt) -> R<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::VarDecl { ty, name, init } => {
                let v = match init {
                    Some(e) => self.eval(e)?,
                    None => Value::default_for(&Type::from_ref(ty)),
                };
                self.frame_mut().locals.push((name, v));
            }
            StmtKind::Assign { target, value } => match &target.kind {
                ExprKind::Var(n) => {
                    let v = self.eval(value)?;
                    self.assign_var(n, v)?;
                }
                ExprKind::Field { obj, name } => {
                    let o = self.eval(obj)?;
                    let Value::Obj(o) = o else { return Err(self.npe(&format!("write of field `{name}`"))) };
                    let v = self.eval(value)?;
                    o.fields.borrow_mut().insert(name.clone(), v);
                }
                ExprKind::StaticField { class, name } => {
                    let v = self.eval(value)?;
                    let key = self.static_owner(class, name).unwrap();
                    self.statics.insert(key, v);
                }
                _ => return Err(Unwind::Abort("invalid assignment target".into())),
            },
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
            StmtKind::If { cond, then, els } => {
                if self.eval_bool(cond)? {
                    return self.exec_block(then);
                } else if let Some(b) = els {
                    return self.exec_block(b);
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval_bool(cond)? {
                    if let Flow::Return(v) = self.exec_block(body)? {
                        return Ok(Flow::Return(v));
                    }
                    self.tick()?;
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e)?,
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Throw(e) => {
                let v = self.eval(e)?;
                if v.is_null() {
                    return Err(self.npe("throw"));
                }
                return Err(Unwind::Throw(v));
            }
            StmtKind::Try { body, catches, finally } => {
                let mut r = self.exec_block(body);
                if let Err(Unwind::Throw(v)) = &r {
                    let class = v.as_obj().map(|o| o.class.clone());
                    let handler = class.and_then(|c| catches.iter().find(|h| self.table.is_subclass(&c, &h.ty)));
                    if let Some(h) = handler {
                        let v = v.clone();
                        let mark = self.frame().locals.len();
                        self.frame_mut().locals.push((&h.name, v));
                        r = self.exec_block(&h.body);
                        self.frame_mut().locals.truncate(mark);
                    }
                }
                if let Some(f) = finally {
                    if matches!(r, Err(Unwind::Abort(_))) {
                        return r;
                    }
                    match self.exec_block(f)? {
                        Flow::Next => {}
                        ret => return Ok(ret),
                    }
                }
                return r;
            }
            StmtKind::Block(b) => return self.exec_block(b),
        }
        Ok(Flow::Next)
    }

    // ---- expressions ---------------------------------------------------

    fn eval_bool(&mut self, e: &'p Expr) -> R<bool> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            v => Err(Unwind::Abort(format!("expected bool, found {v}"))),
        }
    }

    fn eval_args(&mut self, args: &'p [Expr]) -> R<Vec<Value>> {
        args.iter().map(|a| self.eval(a)).collect()
    }

    fn eval(&mut self, e: &'p Expr) -> R<Value> {
        match &e.kind {
            ExprKind::Int(i) => Ok(Value::Int(*i)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Str(s) => Ok(Value::str(s)),
            ExprKind::Null => Ok(Value::Null),
            ExprKind::This => Ok(self.frame().this.clone().map(Value::Obj).unwrap_or_default()),
            ExprKind::Var(n) => self.lookup_var(n),
            ExprKind::StaticField { class, name } => {
                let key = self.static_owner(class, name).unwrap();
                Ok(self.statics[&key].clone())
            }
            ExprKind::Field { obj, name } => {
                let o = self.eval(obj)?;
                match o {
                    Value::Obj(o) => Ok(o.fields.borrow().get(name.as_str()).cloned().unwrap_or_default()),
                    _ => Err(self.npe(&format!("read of field `{name}`"))),
                }
            }
            ExprKind::Call { recv: Some(r), name, args } => {
                let rv = self.eval(r)?;
                let Value::Obj(o) = rv else { return Err(self.npe(&format!("call of `{name}()`"))) };
                let argv = self.eval_args(args)?;
                self.invoke(o, name, argv)
            }
            ExprKind::Call { recv: None, name, args } => {
                if is_hook(name) {
                    return self.hook(name, args);
                }
                match name.as_str() {
                    "print" => {
                        let v = self.eval(&args[0])?;
                        self.out.push_str(&v.to_string());
                        self.out.push('\n');
                        Ok(Value::Null)
                    }
                    "assertTrue" => {
                        if self.eval_bool(&args[0])? {
                            Ok(Value::Null)
                        } else {
                            Err(self.exception(ASSERTION_ERROR, "assertion failed".into()))
                        }
                    }
                    "assertEquals" => {
                        let a = self.eval(&args[0])?;
                        let b = self.eval(&args[1])?;
                        if a.same(&b) {
                            Ok(Value::Null)
                        } else {
                            Err(self.exception(ASSERTION_ERROR, format!("expected {a} but was {b}")))
                        }
                    }
                    _ => {
                        let Some(this) = self.frame().this.clone() else {
                            return Err(Unwind::Abort(format!("call of `{name}()` without `this`")));
                        };
                        let argv = self.eval_args(args)?;
                        self.invoke(this, name, argv)
                    }
                }
            }
            ExprKind::New { class, args } => {
                let argv = self.eval_args(args)?;
                self.instantiate(class, argv).map(Value::Obj)
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs),
            ExprKind::Unary { op, operand } => match (op, self.eval(operand)?) {
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
                (_, v) => Err(Unwind::Abort(format!("bad unary operand {v}"))),
            },
        }
    }

    fn binary(&mut self, op: BinOp, lhs: &'p Expr, rhs: &'p Expr) -> R<Value> {
        match op {
            BinOp::And => return Ok(Value::Bool(self.eval_bool(lhs)? && self.eval_bool(rhs)?)),
            BinOp::Or => return Ok(Value::Bool(self.eval_bool(lhs)? || self.eval_bool(rhs)?)),
            _ => {}
        }
        let a = self.eval(lhs)?;
        let b = self.eval(rhs)?;
        let v = match (op, &a, &b) {
            (BinOp::Eq, _, _) => Value::Bool(a.same(&b)),
            (BinOp::Ne, _, _) => Value::Bool(!a.same(&b)),
            (BinOp::Add, Value::Str(_), _) | (BinOp::Add, _, Value::Str(_)) => Value::str(&format!("{a}{b}")),
            (_, Value::Int(x), Value::Int(y)) => {
                let (x, y) = (*x, *y);
                match op {
                    BinOp::Add => Value::Int(x.wrapping_add(y)),
                    BinOp::Sub => Value::Int(x.wrapping_sub(y)),
                    BinOp::Mul => Value::Int(x.wrapping_mul(y)),
                    BinOp::Div | BinOp::Mod if y == 0 => {
                        return Err(self.exception(ARITHMETIC_EXCEPTION, "/ by zero".into()))
                    }
                    BinOp::Div => Value::Int(x.wrapping_div(y)),
                    BinOp::Mod => Value::Int(x.wrapping_rem(y)),
                    BinOp::Lt => Value::Bool(x < y),
                    BinOp::Le => Value::Bool(x <= y),
                    BinOp::Gt => Value::Bool(x > y),
                    BinOp::Ge => Value::Bool(x >= y),
                    _ => return Err(Unwind::Abort(format!("bad operands for {}", op.symbol()))),
                }
            }
            _ => return Err(Unwind::Abort(format!("bad operands for {}: {a}, {b}", op.symbol()))),
        };
        Ok(v)
    }

    fn invoke(&mut self, obj: ObjRef, name: &str, args: Vec<Value>) -> R<Value> {
        let Some(&(owner, m)) = self.classes[&*obj.class].methods.get(name) else {
            return Err(Unwind::Abort(format!("no implementation of `{name}` in `{}`", obj.class)));
        };
        self.call_method(obj, owner, m, args)
    }

    fn call_method(&mut self, this: ObjRef, owner: &'p str, m: &'p MethodDecl, args: Vec<Value>) -> R<Value> {
        let ret = Type::from_ref(&m.ret);
        let flow = self.activate(Some(this), owner, &m.params, args, ret.clone(), m.body.as_ref().unwrap())?;
        Ok(match flow {
            Flow::Return(v) => v,
            Flow::Next => Value::default_for(&ret),
        })
    }

    fn activate(
        &mut self,
        this: Option<ObjRef>,
        class: &'p str,
        params: &'p [Param],
        args: Vec<Value>,
        ret: Type,
        body: &'p Block,
    ) -> R<Flow> {
        self.tick()?;
        if self.frames.len() >= self.opts.max_depth {
            return Err(Unwind::Abort(format!("call depth limit of {} exceeded", self.opts.max_depth)));
        }
        let locals = params.iter().map(|p| p.name.as_str()).zip(args).collect();
        self.frames.push(Frame { this, class, locals, ret, force_return: true, pool_mark: self.pool.depth() });
        let r = self.exec_block(body);
        self.frames.pop();
        r
    }

    fn instantiate(&mut self, class: &str, args: Vec<Value>) -> R<ObjRef> {
        let Some(rt) = self.classes.get(class) else {
            return Err(Unwind::Abort(format!("unknown class `{class}`")));
        };
        if rt.decl.kind != ClassKind::Class {
            return Err(Unwind::Abort(format!("cannot instantiate `{class}`")));
        }
        let chain = rt.chain.clone();
        let obj = self.alloc(&rt.decl.name);
        {
            let mut fields = obj.fields.borrow_mut();
            for d in &chain {
                for f in d.fields.iter().filter(|f| !f.is_static) {
                    fields.entry(f.name.clone()).or_insert_with(|| Value::default_for(&Type::from_ref(&f.ty)));
                }
            }
        }
        let mut args = Some(args);
        for (i, d) in chain.iter().enumerate().rev() {
            for f in d.fields.iter().filter(|f| !f.is_static) {
                if let Some(init) = &f.init {
                    self.frames.push(Frame {
                        this: Some(obj.clone()),
                        class: &d.name,
                        locals: Vec::new(),
                        ret: Type::Void,
                        force_return: false,
                        pool_mark: self.pool.depth(),
                    });
                    let v = self.eval(init);
                    self.frames.pop();
                    obj.fields.borrow_mut().insert(f.name.clone(), v?);
                }
            }
            let ctor_args = if i == 0 { args.take().unwrap() } else { Vec::new() };
            if let Some(k) = d.ctors.iter().find(|k| k.params.len() == ctor_args.len()) {
                self.activate(Some(obj.clone()), &d.name, &k.params, ctor_args, Type::Void, &k.body)?;
            } else if i == 0 && !ctor_args.is_empty() {
                return Err(Unwind::Abort(format!("no constructor of `{class}` takes {} arguments", ctor_args.len())));
            }
        }
        Ok(obj)
    }

    // ---- hooks ---------------------------------------------------------

    fn eval_int(&mut self, e: &'p Expr) -> R<i64> {
        match self.eval(e)? {
            Value::Int(i) => Ok(i),
            v => Err(Unwind::Abort(format!("expected int, found {v}"))),
        }
    }

    fn hook(&mut self, name: &str, args: &'p [Expr]) -> R<Value> {
        match name {
            FREE_ID => {
                self.next_id += 1;
                Ok(Value::Int(self.next_id))
            }
            CATCH_ADD => {
                let id = self.eval_int(&args[0])?;
                let types: Vec<String> = args[1..].iter().map(|a| lit(a).to_string()).collect();
                if self.opts.trace {
                    self.trace.push(TraceEvent::CatchAdd { id, types: types.clone() });
                }
                self.catch.add(id, types);
                Ok(Value::Null)
            }
            CATCH_REMOVE => {
                let id = self.eval_int(&args[0])?;
                if self.opts.trace {
                    self.trace.push(TraceEvent::CatchRemove { id });
                }
                self.catch.remove(id);
                Ok(Value::Null)
            }
            START_METHOD => {
                let id = self.eval_int(&args[0])?;
                let this = self.eval(&args[1])?;
                let mut params = Vec::new();
                for c in args[2..].chunks(3) {
                    let value = self.eval(&c[2])?;
                    params.push(Entry { name: lit(&c[0]).to_string(), ty: Type::parse_name(lit(&c[1])), value });
                }
                if self.opts.trace {
                    self.trace.push(TraceEvent::MethodStart { id });
                }
                self.pool.start(id, this, params);
                Ok(Value::Null)
            }
            END_METHOD => {
                let id = self.eval_int(&args[0])?;
                if self.opts.trace {
                    self.trace.push(TraceEvent::MethodEnd { id });
                }
                self.pool.end(id);
                Ok(Value::Null)
            }
            INIT_VAR | MODIF_VAR => {
                let v = self.eval(&args[0])?;
                let id = self.eval_int(&args[1])?;
                self.pool.set(id, lit(&args[2]), Type::parse_name(lit(&args[3])), v.clone());
                Ok(v)
            }
            CHECK_FOR_NULL => self.check_for_null(args),
            SKIP_LINE => self.skip_line(args),
            IS_STRATEGY => {
                let f = self.eval(&args[0])?;
                let s = f.get_field(STRATEGY_FIELD);
                Ok(Value::Bool(matches!(s, Some(Value::Str(s)) if &*s == lit(&args[1]))))
            }
            GET_VAR | NEW_VAR => {
                let f = self.eval(&args[0])?;
                Ok(f.get_field(VALUE_FIELD).unwrap_or_default())
            }
            PROBE_CAUGHT => {
                let exception = lit(&args[0]).to_string();
                let caught = self.catch.will_be_caught(self.table, &exception);
                self.trace.push(TraceEvent::Probe { exception, caught });
                Ok(Value::Null)
            }
            _ => Err(Unwind::Abort(format!("unknown hook `{name}`"))),
        }
    }

    /// Evaluates a receiver and remembers where it came from, so global
    /// injection can rebind it.
    fn eval_place(&mut self, e: &'p Expr) -> R<(Value, Option<Place<'p>>)> {
        match &e.kind {
            ExprKind::Var(n) => Ok((self.lookup_var(n)?, Some(Place::Var(n)))),
            ExprKind::Field { obj, name } => {
                let o = self.eval(obj)?;
                let Value::Obj(o) = o else { return Err(self.npe(&format!("read of field `{name}`"))) };
                let v = o.fields.borrow().get(name.as_str()).cloned().unwrap_or_default();
                Ok((v, Some(Place::Field(o, name))))
            }
            ExprKind::StaticField { class, name } => {
                let key = self.static_owner(class, name).unwrap();
                Ok((self.statics[&key].clone(), Some(Place::Static(key.0, key.1))))
            }
            _ => Ok((self.eval(e)?, None)),
        }
    }

    /// Receiver value for `skipLine`: access paths evaluated without raising.
    fn eval_path(&mut self, e: &'p Expr) -> R<Value> {
        match &e.kind {
            ExprKind::Field { obj, name } => match self.eval_path(obj)? {
                Value::Obj(o) => Ok(o.fields.borrow().get(name.as_str()).cloned().unwrap_or_default()),
                _ => Ok(Value::Null),
            },
            _ => self.eval(e),
        }
    }

    fn harmful(&self) -> bool {
        self.repair && self.ctl.enabled() && !self.catch.will_be_caught(self.table, NPE)
    }

    fn check_for_null(&mut self, args: &'p [Expr]) -> R<Value> {
        let (v, place) = self.eval_place(&args[0])?;
        if !v.is_null() || !self.harmful() {
            return Ok(v);
        }
        let Ok(key) = lit(&args[1]).parse::<CrashPointKey>() else {
            return Ok(v);
        };
        let required = Type::parse_name(lit(&args[2]));
        match self.decide(&key, &required, false) {
            Decision::Apply(s) => self.apply(&key, &s, place),
            _ => Ok(Value::Null),
        }
    }

    fn skip_line(&mut self, args: &'p [Expr]) -> R<Value> {
        for pair in args.chunks(2) {
            let v = self.eval_path(&pair[1])?;
            if !v.is_null() {
                continue;
            }
            if !self.harmful() {
                return Ok(Value::Bool(true));
            }
            let Ok(key) = lit(&pair[0]).parse::<CrashPointKey>() else { continue };
            let required = pair[1].ty.clone().unwrap_or(Type::Null);
            return match self.decide(&key, &required, true) {
                Decision::Apply(s) if s.id == StrategyId::S3 => Ok(Value::Bool(false)),
                Decision::Apply(s) if s.id.is_method_skip() => self.force_return(&key, &s),
                _ => Ok(Value::Bool(true)),
            };
        }
        Ok(Value::Bool(true))
    }

    fn decide(&mut self, key: &CrashPointKey, required: &Type, at_skip_line: bool) -> Decision {
        if let Some(d) = self.ctl.cached(key) {
            return d.clone();
        }
        let table: HashMap<StrategyId, Result<Vec<Strategy>, Outcome>> =
            StrategyId::ALL.into_iter().map(|id| (id, self.candidates(id, required, at_skip_line))).collect();
        self.ctl.decide(key, &mut |id| table[&id].clone())
    }

    fn this_fields(&self) -> Vec<(String, Value)> {
        let Some(this) = &self.frame().this else { return Vec::new() };
        let fields = this.fields.borrow();
        let mut out = Vec::new();
        for d in self.classes[&*this.class].chain.iter().rev() {
            for f in d.fields.iter().filter(|f| !f.is_static) {
                out.push((f.name.clone(), fields.get(&f.name).cloned().unwrap_or_default()));
            }
        }
        out
    }

    fn static_values(&self) -> Vec<(String, Value)> {
        self.static_order.iter().map(|(c, f)| (format!("{c}.{f}"), self.statics[&(*c, *f)].clone())).collect()
    }

    /// The pool frame of the current activation, if it registered one.
    fn own_pool(&self) -> Option<&super::pool::PoolFrame> {
        self.pool.top().filter(|_| self.pool.depth() > self.frame().pool_mark)
    }

    fn pool_candidates(&self, required: &Type) -> Vec<(String, Value)> {
        get_var(self.table, required, self.own_pool(), &self.this_fields(), &self.static_values())
    }

    fn candidates(&self, id: StrategyId, required: &Type, at_skip_line: bool) -> Result<Vec<Strategy>, Outcome> {
        let frame = self.frame();
        let (ret, can_return) = (frame.ret.clone(), frame.force_return);
        let nonempty = |v: Vec<Strategy>, code| if v.is_empty() { Err(code) } else { Ok(v) };
        let reuse = |t: &Type| -> Vec<Strategy> {
            self.pool_candidates(t).into_iter().map(|(n, _)| Strategy::new(id, Some(n))).collect()
        };
        let create = |t: &Type| -> Vec<Strategy> {
            new_var(self.table, t, self.ctl.depth).into_iter().map(|r| Strategy::new(id, Some(r.type_name))).collect()
        };
        match id {
            StrategyId::S1a | StrategyId::S1b => nonempty(reuse(required), Outcome::NoV),
            StrategyId::S2a | StrategyId::S2b => nonempty(create(required), Outcome::NoI),
            StrategyId::S3 if at_skip_line => Ok(vec![Strategy::bare(id)]),
            StrategyId::S3 => Err(Outcome::US),
            _ if !can_return => Err(Outcome::RI),
            StrategyId::S4a if matches!(ret, Type::Class(_) | Type::Str) => Ok(vec![Strategy::bare(id)]),
            StrategyId::S4a => Err(Outcome::RI),
            StrategyId::S4b | StrategyId::S4c if ret == Type::Void => Err(Outcome::RI),
            StrategyId::S4b => nonempty(reuse(&ret), Outcome::NoV),
            StrategyId::S4c => nonempty(create(&ret), Outcome::NoI),
            StrategyId::S4d if ret == Type::Void => Ok(vec![Strategy::bare(id)]),
            StrategyId::S4d => Err(Outcome::RI),
        }
    }

    /// Current value of a pool entry named by a strategy parameter.
    fn pool_value(&mut self, name: &str) -> R<Value> {
        if let Some(f) = name.strip_prefix("this.") {
            let Some(this) = &self.frame().this else { return Ok(Value::Null) };
            return Ok(this.fields.borrow().get(f).cloned().unwrap_or_default());
        }
        if let Some((c, f)) = name.split_once('.') {
            return Ok(self.static_owner(c, f).map(|k| self.statics[&k].clone()).unwrap_or_default());
        }
        Ok(self.own_pool().and_then(|p| p.lookup(name)).map(|e| e.value.clone()).unwrap_or_default())
    }

    /// Builds a value of the named type, trying constructors in order with
    /// repair disabled.
    fn manufacture(&mut self, type_name: &str) -> R<Option<Value>> {
        let t = Type::parse_name(type_name);
        let Some(recipes) = new_var(self.table, &t, self.ctl.depth).into_iter().find(|r| r.type_name == type_name)
        else {
            return Ok(None);
        };
        let saved = self.repair;
        self.repair = false;
        let mut result = Ok(None);
        for r in &recipes.recipes {
            match self.eval_recipe(r) {
                Ok(v) => {
                    result = Ok(Some(v));
                    break;
                }
                Err(Unwind::Throw(_)) => continue,
                Err(abort) => {
                    result = Err(abort);
                    break;
                }
            }
        }
        self.repair = saved;
        result
    }

    fn eval_recipe(&mut self, e: &Expr) -> R<Value> {
        match &e.kind {
            ExprKind::Int(i) => Ok(Value::Int(*i)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Str(s) => Ok(Value::str(s)),
            ExprKind::New { class, args } => {
                let argv = args.iter().map(|a| self.eval_recipe(a)).collect::<R<Vec<_>>>()?;
                self.instantiate(class, argv).map(Value::Obj)
            }
            _ => Ok(Value::Null),
        }
    }

    /// The replacement value of an injection or method-skip strategy.
    fn replacement(&mut self, key: &CrashPointKey, s: &Strategy) -> R<Option<Value>> {
        let param = s.parameter.clone().unwrap_or_default();
        if s.id.reuses_value() {
            let v = self.pool_value(&param)?;
            if v.is_null() {
                self.ctl.application_failed(key, Outcome::NoV, &format!("`{param}` is null"));
                return Ok(None);
            }
            return Ok(Some(v));
        }
        if s.id.creates_value() {
            return match self.manufacture(&param)? {
                Some(v) => Ok(Some(v)),
                None => {
                    self.ctl.application_failed(key, Outcome::NoI, &format!("could not construct `{param}`"));
                    Ok(None)
                }
            };
        }
        Ok(Some(Value::Null))
    }

    fn apply(&mut self, key: &CrashPointKey, s: &Strategy, place: Option<Place<'p>>) -> R<Value> {
        if s.id.is_method_skip() {
            return self.force_return(key, s);
        }
        if s.id == StrategyId::S3 {
            // Reached only when the statement was not guarded by skipLine.
            self.ctl.application_failed(key, Outcome::US, "statement cannot be skipped");
            return Ok(Value::Null);
        }
        let Some(v) = self.replacement(key, s)? else { return Ok(Value::Null) };
        if s.id.is_global() {
            self.rebind(place, v.clone())?;
        }
        Ok(v)
    }

    fn rebind(&mut self, place: Option<Place<'p>>, v: Value) -> R<()> {
        match place {
            Some(Place::Var(n)) => {
                let local = self.is_local(n);
                self.assign_var(n, v.clone())?;
                if local {
                    if let Some(id) = self.pool.top_id() {
                        if let Some(e) = self.pool.top().and_then(|p| p.lookup(n)) {
                            let ty = e.ty.clone();
                            self.pool.set(id, n, ty, v);
                        }
                    }
                }
            }
            Some(Place::Field(o, name)) => {
                o.fields.borrow_mut().insert(name.to_string(), v);
            }
            Some(Place::Static(c, f)) => {
                self.statics.insert((c, f), v);
            }
            // Not an lvalue: the injection stays local.
            None => {}
        }
        Ok(())
    }

    fn force_return(&mut self, key: &CrashPointKey, s: &Strategy) -> R<Value> {
        let Some(v) = self.replacement(key, s)? else { return Ok(Value::Bool(true)) };
        let ret = self.frame().ret.clone();
        if s.id != StrategyId::S4d && s.id != StrategyId::S4a && !fits(self.table, &v, &ret) {
            self.ctl.application_failed(key, Outcome::RI, "replacement does not fit the return type");
            return Ok(Value::Bool(true));
        }
        let signal = self.alloc(FORCE_RETURN);
        {
            let mut f = signal.fields.borrow_mut();
            f.insert(STRATEGY_FIELD.into(), Value::str(s.id.as_str()));
            f.insert(VALUE_FIELD.into(), v);
        }
        Err(Unwind::Throw(Value::Obj(signal)))
    }
}
