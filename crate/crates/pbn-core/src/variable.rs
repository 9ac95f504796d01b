//! Discrete variables, (partial) assignments, per-variable event sets
//! and real-valued state functions.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

/// A named discrete random variable with an ordered finite domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    name: String,
    states: Vec<String>,
}

impl Variable {
    /// State identifiers must be unique and nonempty.
    pub fn new(name: impl Into<String>, states: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let name = name.into();
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if states.is_empty() {
            return Err(Error::Invalid {
                reason: alloc::format!("variable `{name}` must have at least one state"),
            });
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::Invalid {
                    reason: alloc::format!("variable `{name}` repeats state `{s}`"),
                });
            }
        }
        Ok(Variable { name, states })
    }

    /// Convenience constructor for tests and fixtures; panics on bad input.
    pub fn binary(name: &str, lo: &str, hi: &str) -> Self {
        Variable::new(name, [lo, hi]).unwrap()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == state)
            .ok_or_else(|| Error::UnknownState {
                variable: self.name.clone(),
                state: state.to_string(),
            })
    }
}

/// A partial mapping from variable names to states; serves as an event
/// or as evidence over a scope.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    bindings: BTreeMap<String, String>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn bind(&mut self, variable: impl Into<String>, state: impl Into<String>) -> Result<()> {
        let variable = variable.into();
        if self.bindings.contains_key(&variable) {
            return Err(Error::DuplicateVariable { variable });
        }
        self.bindings.insert(variable, state.into());
        Ok(())
    }

    pub fn of(pairs: &[(&str, &str)]) -> Result<Self> {
        let mut a = Assignment::new();
        for (v, s) in pairs {
            a.bind(*v, *s)?;
        }
        Ok(a)
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.bindings.get(variable).map(String::as_str)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.bindings.iter().map(|(v, s)| (v.as_str(), s.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    /// One single-state [`EventSet`] per binding.
    pub fn to_events(&self) -> Vec<EventSet> {
        self.bindings
            .iter()
            .map(|(v, s)| EventSet {
                variable: v.clone(),
                states: alloc::vec![s.clone()],
            })
            .collect()
    }
}

/// A nonempty subset of one variable's domain, used as (disjunctive)
/// evidence: the variable took one of these states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSet {
    variable: String,
    states: Vec<String>,
}

impl EventSet {
    pub fn new(variable: impl Into<String>, states: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let variable = variable.into();
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if states.is_empty() {
            return Err(Error::Invalid {
                reason: alloc::format!("event set over `{variable}` must be nonempty"),
            });
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::Invalid {
                    reason: alloc::format!("event set over `{variable}` repeats state `{s}`"),
                });
            }
        }
        Ok(EventSet { variable, states })
    }

    pub fn point(variable: &str, state: &str) -> Self {
        EventSet {
            variable: variable.to_string(),
            states: alloc::vec![state.to_string()],
        }
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn contains(&self, state: &str) -> bool {
        self.states.iter().any(|s| s == state)
    }

    /// Checks membership of every listed state in `var`'s domain.
    pub fn check_against(&self, var: &Variable) -> Result<()> {
        for s in &self.states {
            var.state_index(s)?;
        }
        Ok(())
    }
}

/// A real-valued function of a set of variables, given by a total table
/// over the Cartesian product of their domains.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFunction {
    variables: Vec<String>,
    table: BTreeMap<Vec<String>, f64>,
}

impl StateFunction {
    /// `table` must be total: one entry per full assignment of `vars`.
    pub fn new(vars: &[Variable], table: BTreeMap<Vec<String>, f64>) -> Result<Self> {
        let expected: usize = vars.iter().map(Variable::cardinality).product();
        if table.len() != expected {
            return Err(Error::Invalid {
                reason: alloc::format!(
                    "function table has {} entries, expected {expected}",
                    table.len()
                ),
            });
        }
        for key in table.keys() {
            if key.len() != vars.len() {
                return Err(Error::Invalid {
                    reason: "function table key arity mismatch".to_string(),
                });
            }
            for (var, state) in vars.iter().zip(key) {
                var.state_index(state)?;
            }
        }
        Ok(StateFunction {
            variables: vars.iter().map(|v| v.name().to_string()).collect(),
            table,
        })
    }

    /// The indicator of `state`: 1 on it, 0 elsewhere.
    pub fn indicator(var: &Variable, state: &str) -> Result<Self> {
        var.state_index(state)?;
        let table = var
            .states()
            .iter()
            .map(|s| (alloc::vec![s.clone()], if s == state { 1.0 } else { 0.0 }))
            .collect();
        StateFunction::new(core::slice::from_ref(var), table)
    }

    /// Maps each state of `var` to its domain index (0, 1, 2, ...).
    pub fn state_index_values(var: &Variable) -> Self {
        let table = var
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| (alloc::vec![s.clone()], i as f64))
            .collect();
        StateFunction::new(core::slice::from_ref(var), table).unwrap()
    }

    /// The constant function 1.
    pub fn one(vars: &[Variable]) -> Self {
        let mut table = BTreeMap::new();
        let cards: Vec<usize> = vars.iter().map(Variable::cardinality).collect();
        let total: usize = cards.iter().product();
        for i in 0..total {
            let mut key = Vec::with_capacity(vars.len());
            let mut rem = i;
            for (var, &card) in vars.iter().zip(&cards).rev() {
                key.push(var.states()[rem % card].clone());
                rem /= card;
            }
            key.reverse();
            table.insert(key, 1.0);
        }
        StateFunction::new(vars, table).unwrap()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn value(&self, assignment: &Assignment) -> Result<f64> {
        let key: Vec<String> = self
            .variables
            .iter()
            .map(|v| {
                assignment
                    .get(v)
                    .map(str::to_string)
                    .ok_or_else(|| Error::UnknownVariable { variable: v.clone() })
            })
            .collect::<Result<_>>()?;
        self.table.get(&key).copied().ok_or_else(|| Error::Invalid {
            reason: "assignment outside the function's table".to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_state_rejected() {
        assert!(Variable::new("X", ["a", "a"]).is_err());
    }

    #[test]
    fn empty_domain_rejected() {
        assert!(Variable::new("X", Vec::<String>::new()).is_err());
    }

    #[test]
    fn assignment_rejects_double_bind() {
        let mut a = Assignment::new();
        a.bind("X", "x0").unwrap();
        assert_eq!(a.bind("X", "x1"), Err(Error::DuplicateVariable { variable: "X".into() }));
    }

    #[test]
    fn event_set_membership_checked() {
        let x = Variable::new("X", ["a", "b"]).unwrap();
        let ev = EventSet::new("X", ["a", "c"]).unwrap();
        assert!(ev.check_against(&x).is_err());
    }

    #[test]
    fn indicator_values() {
        let x = Variable::new("X", ["a", "b"]).unwrap();
        let f = StateFunction::indicator(&x, "b").unwrap();
        let a = Assignment::of(&[("X", "a")]).unwrap();
        let b = Assignment::of(&[("X", "b")]).unwrap();
        assert_eq!(f.value(&a).unwrap(), 0.0);
        assert_eq!(f.value(&b).unwrap(), 1.0);
    }

    #[test]
    fn function_table_must_be_total() {
        let x = Variable::new("X", ["a", "b"]).unwrap();
        let mut table = BTreeMap::new();
        table.insert(vec!["a".to_string()], 1.0);
        assert!(StateFunction::new(core::slice::from_ref(&x), table).is_err());
    }
}
