//! Loading (slot expansion, safety, stratification) and naive bottom-up
//! evaluation of rule programs.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};

use super::syntax::{Atom, CmpOp, Literal, Rule, Term};

/// A ground atom over string constants.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        GroundAtom {
            pred: pred.to_owned(),
            args: args.iter().map(|a| (*a).to_owned()).collect(),
        }
    }
}

impl std::fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.pred, self.args.join(", "))
    }
}

/// Relation key of an atom. `has` atoms are keyed per slot, so the slot
/// argument must be a constant.
fn key_of(atom: &Atom) -> Result<String> {
    if atom.pred != "has" {
        return Ok(atom.pred.clone());
    }
    match atom.args.as_slice() {
        [_, Term::Const(slot), _] => Ok(format!("has/{slot}")),
        [_, Term::Var(v), _] => Err(Error::Program(format!(
            "`{atom}`: slot variable `{v}` has no finite domain"
        ))),
        _ => Err(Error::Program(format!("`{atom}`: has/3 expected"))),
    }
}

fn ground_key(pred: &str, args: &[String]) -> String {
    if pred == "has" && args.len() == 3 {
        format!("has/{}", args[1])
    } else {
        pred.to_owned()
    }
}

fn vars_of<'a>(terms: impl IntoIterator<Item = &'a Term>) -> impl Iterator<Item = &'a str> {
    terms.into_iter().filter_map(|t| match t {
        Term::Var(v) => Some(v.as_str()),
        Term::Const(_) => None,
    })
}

fn substitute(atom: &Atom, var: &str, value: &str) -> Atom {
    Atom {
        pred: atom.pred.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) if v == var => Term::Const(value.to_owned()),
                other => other.clone(),
            })
            .collect(),
    }
}

fn substitute_rule(rule: &Rule, var: &str, value: &str) -> Rule {
    let sub_term = |t: &Term| match t {
        Term::Var(v) if v == var => Term::Const(value.to_owned()),
        other => other.clone(),
    };
    Rule {
        label: rule.label.clone(),
        heads: rule.heads.iter().map(|a| substitute(a, var, value)).collect(),
        body: rule
            .body
            .iter()
            .map(|l| match l {
                Literal::Pos(a) => Literal::Pos(substitute(a, var, value)),
                Literal::Neg(a) => Literal::Neg(substitute(a, var, value)),
                Literal::Cmp(a, op, b) => Literal::Cmp(sub_term(a), *op, sub_term(b)),
            })
            .collect(),
    }
}

/// Rewrites every rule whose `has` atoms use a variable slot into one rule
/// per slot, taking the slot values from a unary fact-only predicate that
/// constrains the variable in the body.
fn expand_slots(rules: &[Rule]) -> Result<Vec<Rule>> {
    let mut defined_by_rules: BTreeSet<&str> = BTreeSet::new();
    let mut domains: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in rules {
        for h in &r.heads {
            if r.is_fact() {
                if let [Term::Const(c)] = h.args.as_slice() {
                    domains.entry(&h.pred).or_default().push(c);
                }
            } else {
                defined_by_rules.insert(&h.pred);
            }
        }
    }
    domains.retain(|p, _| !defined_by_rules.contains(p));

    let mut out = Vec::new();
    for rule in rules {
        let mut work = vec![rule.clone()];
        while let Some(r) = work.pop() {
            let atoms = r.heads.iter().chain(r.body.iter().filter_map(|l| match l {
                Literal::Pos(a) | Literal::Neg(a) => Some(a),
                Literal::Cmp(..) => None,
            }));
            let slot_var = atoms
                .filter(|a| a.pred == "has")
                .find_map(|a| match a.args.get(1) {
                    Some(Term::Var(v)) => Some(v.clone()),
                    _ => None,
                });
            let Some(var) = slot_var else {
                out.push(r);
                continue;
            };
            let domain = r.body.iter().find_map(|l| match l {
                Literal::Pos(a) if a.args == [Term::Var(var.clone())] => domains.get(a.pred.as_str()),
                _ => None,
            });
            let Some(domain) = domain else {
                return Err(Error::Program(format!(
                    "rule {}: slot variable `{var}` needs a fact-defined domain",
                    r.label
                )));
            };
            // Reversed so the expansions come out in domain order.
            for value in domain.iter().rev() {
                work.push(substitute_rule(&r, &var, value));
            }
        }
    }
    Ok(out)
}

fn check_safety(rule: &Rule) -> Result<()> {
    let bound: BTreeSet<&str> = rule
        .body
        .iter()
        .filter_map(|l| match l {
            Literal::Pos(a) => Some(a),
            _ => None,
        })
        .flat_map(|a| vars_of(&a.args))
        .collect();
    let mut needed: Vec<&str> = rule.heads.iter().flat_map(|h| vars_of(&h.args)).collect();
    for l in &rule.body {
        match l {
            Literal::Neg(a) => needed.extend(vars_of(&a.args)),
            Literal::Cmp(a, _, b) => needed.extend(vars_of([a, b])),
            Literal::Pos(_) => {}
        }
    }
    match needed.into_iter().find(|v| !bound.contains(v)) {
        Some(v) => Err(Error::Program(format!(
            "rule {}: variable `{v}` is not bound by a positive body atom",
            rule.label
        ))),
        None => Ok(()),
    }
}

/// Strongly connected components, dependencies before dependants.
fn components(nodes: &[String], edges: &BTreeMap<usize, BTreeSet<usize>>) -> Vec<Vec<usize>> {
    struct State<'a> {
        edges: &'a BTreeMap<usize, BTreeSet<usize>>,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        let succ: Vec<usize> = s.edges.get(&v).into_iter().flatten().copied().collect();
        for w in succ {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().expect("on stack");
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }
    let n = nodes.len();
    let mut s = State {
        edges,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

/// A loaded program: slot-expanded rules split into strata.
#[derive(Debug, Clone)]
pub struct Program {
    source: Vec<Rule>,
    facts: Vec<Atom>,
    rules: Vec<Rule>,
    strata: Vec<Vec<usize>>,
}

impl Program {
    /// Expands slot variables, checks safety and arities, and stratifies.
    /// Negation inside a recursive component is an error.
    pub fn load(source: Vec<Rule>) -> Result<Program> {
        let expanded = expand_slots(&source)?;
        let mut facts = Vec::new();
        let mut rules = Vec::new();
        for r in expanded {
            check_safety(&r)?;
            if r.is_fact() {
                for h in &r.heads {
                    if h.args.iter().any(Term::is_var) {
                        return Err(Error::Program(format!("fact `{h}` in {} is not ground", r.label)));
                    }
                    facts.push(h.clone());
                }
            } else {
                rules.push(r);
            }
        }

        let mut keys: Vec<String> = Vec::new();
        let mut key_ids: HashMap<String, usize> = HashMap::new();
        let mut arity: HashMap<String, usize> = HashMap::new();
        let mut intern = |atom: &Atom| -> Result<usize> {
            let key = key_of(atom)?;
            if let Some(&a) = arity.get(&key) {
                if a != atom.args.len() {
                    return Err(Error::Program(format!("`{key}` used with arities {a} and {}", atom.args.len())));
                }
            }
            arity.insert(key.clone(), atom.args.len());
            Ok(*key_ids.entry(key.clone()).or_insert_with(|| {
                keys.push(key);
                keys.len() - 1
            }))
        };
        for f in &facts {
            intern(f)?;
        }
        let mut deps: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        let mut negative: Vec<(usize, usize)> = Vec::new();
        let mut heads = Vec::new();
        for r in &rules {
            let head = intern(&r.heads[0])?;
            heads.push(head);
            for l in &r.body {
                match l {
                    Literal::Pos(a) => {
                        let b = intern(a)?;
                        deps.entry(head).or_default().insert(b);
                    }
                    Literal::Neg(a) => {
                        let b = intern(a)?;
                        deps.entry(head).or_default().insert(b);
                        negative.push((head, b));
                    }
                    Literal::Cmp(..) => {}
                }
            }
        }
        let comps = components(&keys, &deps);
        let mut comp_of = vec![0; keys.len()];
        for (i, c) in comps.iter().enumerate() {
            for &k in c {
                comp_of[k] = i;
            }
        }
        if let Some((h, b)) = negative.iter().find(|(h, b)| comp_of[*h] == comp_of[*b]) {
            return Err(Error::Program(format!(
                "not stratified: `{}` depends negatively on `{}` within a recursive component",
                keys[*h], keys[*b]
            )));
        }
        let mut strata: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
        for (i, h) in heads.iter().enumerate() {
            strata[comp_of[*h]].push(i);
        }
        strata.retain(|s| !s.is_empty());
        Ok(Program {
            source,
            facts,
            rules,
            strata,
        })
    }

    /// The statements as written.
    pub fn source(&self) -> &[Rule] {
        &self.source
    }

    pub fn rule(&self, label: &str) -> Option<&Rule> {
        self.source.iter().find(|r| r.label == label)
    }

    /// Labelled statements per group (`e`, `ma`, ...).
    pub fn group_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.source {
            *counts.entry(r.group().to_owned()).or_insert(0) += 1;
        }
        counts
    }

    pub fn strata_count(&self) -> usize {
        self.strata.len()
    }

    /// Rules after slot expansion, stratum by stratum.
    pub fn strata(&self) -> impl Iterator<Item = Vec<&Rule>> {
        self.strata
            .iter()
            .map(|s| s.iter().map(|&i| &self.rules[i]).collect())
    }
}

type Tuple = Box<[u32]>;

#[derive(Debug, Default)]
struct Relation {
    tuples: Vec<Tuple>,
    set: HashSet<Tuple>,
    index: RefCell<HashMap<usize, HashMap<u32, Vec<usize>>>>,
}

impl Relation {
    fn insert(&mut self, t: Tuple) -> bool {
        if self.set.contains(&t) {
            return false;
        }
        let pos = self.tuples.len();
        for (col, idx) in self.index.get_mut().iter_mut() {
            idx.entry(t[*col]).or_default().push(pos);
        }
        self.set.insert(t.clone());
        self.tuples.push(t);
        true
    }

    /// Positions of tuples with `value` in column `col`.
    fn lookup(&self, col: usize, value: u32) -> Vec<usize> {
        let mut index = self.index.borrow_mut();
        let idx = index.entry(col).or_insert_with(|| {
            let mut m: HashMap<u32, Vec<usize>> = HashMap::new();
            for (i, t) in self.tuples.iter().enumerate() {
                m.entry(t[col]).or_default().push(i);
            }
            m
        });
        idx.get(&value).cloned().unwrap_or_default()
    }
}

/// The evaluated model: every derived and given atom.
#[derive(Debug, Default)]
pub struct Model {
    symbols: Vec<String>,
    symbol_ids: HashMap<String, u32>,
    relations: BTreeMap<String, Relation>,
}

impl Model {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.symbol_ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_owned());
        self.symbol_ids.insert(s.to_owned(), id);
        id
    }

    fn insert(&mut self, key: &str, tuple: Tuple) -> bool {
        self.relations.entry(key.to_owned()).or_default().insert(tuple)
    }

    fn render(&self, t: &[u32]) -> Vec<String> {
        t.iter().map(|s| self.symbols[*s as usize].clone()).collect()
    }

    /// Argument tuples of a relation, sorted. For `has`, pass `has/slot`.
    pub fn tuples(&self, key: &str) -> BTreeSet<Vec<String>> {
        self.relations
            .get(key)
            .map(|r| r.tuples.iter().map(|t| self.render(t)).collect())
            .unwrap_or_default()
    }

    pub fn contains(&self, pred: &str, args: &[&str]) -> bool {
        let args_owned: Vec<String> = args.iter().map(|a| (*a).to_owned()).collect();
        let key = ground_key(pred, &args_owned);
        let Some(rel) = self.relations.get(&key) else {
            return false;
        };
        let ids: Option<Vec<u32>> = args.iter().map(|a| self.symbol_ids.get(*a).copied()).collect();
        ids.is_some_and(|ids| rel.set.contains(ids.as_slice()))
    }

    pub fn has(&self, s: &str, p: &str, v: &str) -> bool {
        self.contains("has", &[s, p, v])
    }

    /// Every atom of the model, sorted.
    pub fn atoms(&self) -> BTreeSet<GroundAtom> {
        let mut out = BTreeSet::new();
        for (key, rel) in &self.relations {
            let pred = key.split('/').next().expect("non-empty key");
            for t in &rel.tuples {
                out.insert(GroundAtom {
                    pred: pred.to_owned(),
                    args: self.render(t),
                });
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(|r| r.tuples.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
enum Arg {
    Var(usize),
    Const(u32),
}

#[derive(Debug)]
enum Step {
    Scan { key: String, args: Vec<Arg> },
    Absent { key: String, args: Vec<Arg> },
    Cmp { left: Arg, op: CmpOp, right: Arg },
}

#[derive(Debug)]
struct Compiled {
    head_key: String,
    head: Vec<Arg>,
    steps: Vec<Step>,
    vars: usize,
}

const UNBOUND: u32 = u32::MAX;

fn compile(rule: &Rule, model: &mut Model) -> Compiled {
    let mut var_ids: HashMap<String, usize> = HashMap::new();
    let mut arg = |t: &Term, model: &mut Model| match t {
        Term::Var(v) => {
            let n = var_ids.len();
            Arg::Var(*var_ids.entry(v.clone()).or_insert(n))
        }
        Term::Const(c) => Arg::Const(model.intern(c)),
    };
    let head_atom = &rule.heads[0];
    let head: Vec<Arg> = head_atom.args.iter().map(|t| arg(t, model)).collect();

    let mut positives: Vec<(String, Vec<Arg>)> = Vec::new();
    let mut filters: Vec<Step> = Vec::new();
    for l in &rule.body {
        match l {
            Literal::Pos(a) => positives.push((key_of(a).expect("checked at load"), a.args.iter().map(|t| arg(t, model)).collect())),
            Literal::Neg(a) => filters.push(Step::Absent {
                key: key_of(a).expect("checked at load"),
                args: a.args.iter().map(|t| arg(t, model)).collect(),
            }),
            Literal::Cmp(l, op, r) => filters.push(Step::Cmp {
                left: arg(l, model),
                op: *op,
                right: arg(r, model),
            }),
        }
    }
    let vars = var_ids.len();

    // Greedy join order: next the atom with the most bound arguments.
    let mut bound = vec![false; vars];
    let is_bound = |a: &Arg, bound: &[bool]| match a {
        Arg::Const(_) => true,
        Arg::Var(v) => bound[*v],
    };
    let mut steps = Vec::new();
    let mut pending_filters: Vec<Option<Step>> = filters.into_iter().map(Some).collect();
    while !positives.is_empty() {
        let best = (0..positives.len())
            .max_by_key(|&i| {
                let n = positives[i].1.iter().filter(|a| is_bound(a, &bound)).count();
                (n, std::cmp::Reverse(i))
            })
            .expect("non-empty");
        let (key, args) = positives.remove(best);
        for a in &args {
            if let Arg::Var(v) = a {
                bound[*v] = true;
            }
        }
        steps.push(Step::Scan { key, args });
        for f in pending_filters.iter_mut() {
            let ready = match f {
                Some(Step::Absent { args, .. }) => args.iter().all(|a| is_bound(a, &bound)),
                Some(Step::Cmp { left, right, .. }) => is_bound(left, &bound) && is_bound(right, &bound),
                _ => false,
            };
            if ready {
                steps.push(f.take().expect("ready filter"));
            }
        }
    }
    steps.extend(pending_filters.into_iter().flatten());
    Compiled {
        head_key: key_of(head_atom).expect("checked at load"),
        head,
        steps,
        vars,
    }
}

fn value(a: Arg, env: &[u32]) -> u32 {
    match a {
        Arg::Const(c) => c,
        Arg::Var(v) => env[v],
    }
}

fn solve(rule: &Compiled, step: usize, env: &mut Vec<u32>, model: &Model, out: &mut Vec<Tuple>) {
    let Some(s) = rule.steps.get(step) else {
        out.push(rule.head.iter().map(|a| value(*a, env)).collect());
        return;
    };
    match s {
        Step::Cmp { left, op, right } => {
            let equal = value(*left, env) == value(*right, env);
            if equal == matches!(op, CmpOp::Eq) {
                solve(rule, step + 1, env, model, out);
            }
        }
        Step::Absent { key, args } => {
            let t: Vec<u32> = args.iter().map(|a| value(*a, env)).collect();
            let present = model
                .relations
                .get(key)
                .is_some_and(|r| r.set.contains(t.as_slice()));
            if !present {
                solve(rule, step + 1, env, model, out);
            }
        }
        Step::Scan { key, args } => {
            let Some(rel) = model.relations.get(key) else {
                return;
            };
            let first_bound = args.iter().enumerate().find_map(|(i, a)| {
                let v = value(*a, env);
                (v != UNBOUND).then_some((i, v))
            });
            let candidates: Vec<usize> = match first_bound {
                Some((col, v)) => rel.lookup(col, v),
                None => (0..rel.tuples.len()).collect(),
            };
            for pos in candidates {
                let t = &rel.tuples[pos];
                let mut newly = Vec::new();
                let mut ok = true;
                for (i, a) in args.iter().enumerate() {
                    match *a {
                        Arg::Const(c) => ok = t[i] == c,
                        Arg::Var(v) if env[v] == UNBOUND => {
                            env[v] = t[i];
                            newly.push(v);
                        }
                        Arg::Var(v) => ok = env[v] == t[i],
                    }
                    if !ok {
                        break;
                    }
                }
                if ok {
                    solve(rule, step + 1, env, model, out);
                }
                for v in newly {
                    env[v] = UNBOUND;
                }
            }
        }
    }
}

/// The unique stratified model of `program` over `base`: strata in order,
/// each evaluated to a naive fixpoint (every rule re-run on the full
/// relations until nothing new appears).
pub fn evaluate(program: &Program, base: &[GroundAtom]) -> Model {
    let mut model = Model::default();
    for atom in base {
        let t: Tuple = atom.args.iter().map(|a| model.intern(a)).collect();
        model.insert(&ground_key(&atom.pred, &atom.args), t);
    }
    for f in &program.facts {
        let args: Vec<String> = f.args.iter().map(Term::to_string).collect();
        let t: Tuple = args.iter().map(|a| model.intern(a)).collect();
        model.insert(&ground_key(&f.pred, &args), t);
    }
    for stratum in &program.strata {
        let compiled: Vec<Compiled> = stratum
            .iter()
            .map(|&i| compile(&program.rules[i], &mut model))
            .collect();
        loop {
            let mut fresh: Vec<(&str, Tuple)> = Vec::new();
            for rule in &compiled {
                let mut env = vec![UNBOUND; rule.vars];
                let mut out = Vec::new();
                solve(rule, 0, &mut env, &model, &mut out);
                let existing = model.relations.get(&rule.head_key);
                fresh.extend(
                    out.into_iter()
                        .filter(|t| existing.is_none_or(|r| !r.set.contains(t)))
                        .map(|t| (rule.head_key.as_str(), t)),
                );
            }
            let mut grew = false;
            for (key, t) in fresh {
                grew |= model.insert(key, t);
            }
            if !grew {
                break;
            }
        }
    }
    model
}
