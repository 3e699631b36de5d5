//! Complete propositional decision procedure.
//!
//! Formulas are translated under the injection I: propositionally atomic
//! pieces (atoms, boxed formulas, the toy atom families) become
//! propositional variables, connectives pass through, and the logical
//! constant stays `false`. Satisfiability is decided by Tseitin encoding
//! plus a plain DPLL with unit propagation, which is complete and more
//! than fast enough at the sizes this workbench produces.

use crate::formula::Formula;
use crate::toy::ToyFormula;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub enum Prop {
    False,
    Var(u32),
    Not(Box<Prop>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
    Imp(Box<Prop>, Box<Prop>),
}

impl Prop {
    #[allow(clippy::should_implement_trait)] // builder, not an operator
    pub fn not(self) -> Prop {
        Prop::Not(Box::new(self))
    }
}

/// Interner mapping propositionally-atomic formulas to variable ids.
#[derive(Default)]
pub struct VarPool<K: Ord> {
    map: BTreeMap<K, u32>,
}

impl<K: Ord + Clone> VarPool<K> {
    pub fn new() -> Self {
        VarPool { map: BTreeMap::new() }
    }

    pub fn var(&mut self, key: &K) -> u32 {
        if let Some(&v) = self.map.get(key) {
            return v;
        }
        let v = self.map.len() as u32;
        self.map.insert(key.clone(), v);
        v
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Injection I for the modal language: atoms and boxed subformulas become
/// propositional variables.
pub fn modal_to_prop(f: &Formula, pool: &mut VarPool<Formula>) -> Prop {
    match f {
        Formula::Bot => Prop::False,
        Formula::Atom(_) | Formula::Box(_) => Prop::Var(pool.var(f)),
        Formula::Not(x) => modal_to_prop(x, pool).not(),
        Formula::And(l, r) => Prop::And(
            Box::new(modal_to_prop(l, pool)),
            Box::new(modal_to_prop(r, pool)),
        ),
        Formula::Or(l, r) => Prop::Or(
            Box::new(modal_to_prop(l, pool)),
            Box::new(modal_to_prop(r, pool)),
        ),
        Formula::Imp(l, r) => Prop::Imp(
            Box::new(modal_to_prop(l, pool)),
            Box::new(modal_to_prop(r, pool)),
        ),
    }
}

/// Injection I for the toy language. The toy language is already
/// propositional, so I only maps its atom families to variables.
pub fn toy_to_prop(f: &ToyFormula, pool: &mut VarPool<ToyFormula>) -> Prop {
    match f {
        ToyFormula::Bot => Prop::False,
        ToyFormula::Falsum
        | ToyFormula::Lam(_)
        | ToyFormula::Letter(_)
        | ToyFormula::BoxMarker(_) => Prop::Var(pool.var(f)),
        ToyFormula::Not(x) => toy_to_prop(x, pool).not(),
        ToyFormula::And(l, r) => Prop::And(
            Box::new(toy_to_prop(l, pool)),
            Box::new(toy_to_prop(r, pool)),
        ),
        ToyFormula::Or(l, r) => Prop::Or(
            Box::new(toy_to_prop(l, pool)),
            Box::new(toy_to_prop(r, pool)),
        ),
        ToyFormula::Imp(l, r) => Prop::Imp(
            Box::new(toy_to_prop(l, pool)),
            Box::new(toy_to_prop(r, pool)),
        ),
    }
}

struct Cnf {
    nvars: u32,
    clauses: Vec<Vec<i64>>,
}

impl Cnf {
    fn fresh(&mut self) -> i64 {
        self.nvars += 1;
        self.nvars as i64
    }

    fn tseitin(&mut self, p: &Prop) -> i64 {
        match p {
            Prop::False => {
                let x = self.fresh();
                self.clauses.push(vec![-x]);
                x
            }
            Prop::Var(v) => (*v as i64) + 1,
            Prop::Not(a) => -self.tseitin(a),
            Prop::And(a, b) => {
                let (la, lb) = (self.tseitin(a), self.tseitin(b));
                let x = self.fresh();
                self.clauses.push(vec![-x, la]);
                self.clauses.push(vec![-x, lb]);
                self.clauses.push(vec![x, -la, -lb]);
                x
            }
            Prop::Or(a, b) => {
                let (la, lb) = (self.tseitin(a), self.tseitin(b));
                let x = self.fresh();
                self.clauses.push(vec![-x, la, lb]);
                self.clauses.push(vec![x, -la]);
                self.clauses.push(vec![x, -lb]);
                x
            }
            Prop::Imp(a, b) => {
                let (la, lb) = (self.tseitin(a), self.tseitin(b));
                let x = self.fresh();
                self.clauses.push(vec![-x, -la, lb]);
                self.clauses.push(vec![x, la]);
                self.clauses.push(vec![x, -lb]);
                x
            }
        }
    }
}

/// Is the conjunction of `props` satisfiable? `input_vars` is the number
/// of variables handed out by the pool (indices 0..input_vars).
pub fn satisfiable(props: &[Prop], input_vars: u32) -> bool {
    let mut cnf = Cnf { nvars: input_vars, clauses: Vec::new() };
    for p in props {
        let root = cnf.tseitin(p);
        cnf.clauses.push(vec![root]);
    }
    Dpll::new(cnf.nvars, cnf.clauses).solve()
}

pub fn is_tautology(p: &Prop, input_vars: u32) -> bool {
    !satisfiable(&[p.clone().not()], input_vars)
}

/// Tautological consequence: do the premises propositionally entail the goal?
pub fn entails(premises: &[Prop], goal: &Prop, input_vars: u32) -> bool {
    let mut props: Vec<Prop> = premises.to_vec();
    props.push(goal.clone().not());
    !satisfiable(&props, input_vars)
}

struct Dpll {
    nvars: u32,
    clauses: Vec<Vec<i64>>,
    assign: Vec<i8>, // index 1..=nvars; 0 unknown, 1 true, -1 false
    trail: Vec<u32>,
}

impl Dpll {
    fn new(nvars: u32, clauses: Vec<Vec<i64>>) -> Self {
        Dpll {
            nvars,
            clauses,
            assign: vec![0; nvars as usize + 1],
            trail: Vec::new(),
        }
    }

    fn lit_value(&self, lit: i64) -> i8 {
        let v = self.assign[lit.unsigned_abs() as usize];
        if lit > 0 {
            v
        } else {
            -v
        }
    }

    fn set(&mut self, lit: i64) {
        let var = lit.unsigned_abs() as u32;
        self.assign[var as usize] = if lit > 0 { 1 } else { -1 };
        self.trail.push(var);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let var = self.trail.pop().unwrap();
            self.assign[var as usize] = 0;
        }
    }

    /// Unit propagation; returns false on conflict.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for ci in 0..self.clauses.len() {
                let mut unassigned: Option<i64> = None;
                let mut n_unassigned = 0;
                let mut satisfied = false;
                for idx in 0..self.clauses[ci].len() {
                    let lit = self.clauses[ci][idx];
                    match self.lit_value(lit) {
                        1 => {
                            satisfied = true;
                            break;
                        }
                        0 => {
                            n_unassigned += 1;
                            unassigned = Some(lit);
                        }
                        _ => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match n_unassigned {
                    0 => return false,
                    1 => {
                        self.set(unassigned.unwrap());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn solve(&mut self) -> bool {
        if !self.propagate() {
            return false;
        }
        let var = (1..=self.nvars).find(|&v| self.assign[v as usize] == 0);
        let var = match var {
            Some(v) => v,
            None => return true,
        };
        for phase in [1i64, -1] {
            let mark = self.trail.len();
            self.set(phase * var as i64);
            if self.solve() {
                return true;
            }
            self.undo_to(mark);
        }
        false
    }
}
