//! Dense factor tables over discrete variables and their algebra.
//!
//! A [`Factor`] stores a nonnegative real table over an ordered scope of
//! variables, indexed mixed-radix with the *last* scope variable varying
//! fastest. All operations are pure and return fresh factors.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::variable::{Assignment, EventSet, StateFunction, Variable};
use crate::{Error, Result};

/// Tolerance for the `normalized` flag: a normalized factor sums to 1
/// within this bound.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<Variable>,
    values: Vec<f64>,
    normalized: bool,
}

impl Factor {
    /// Builds a factor, checking scope uniqueness, table length and
    /// cell nonnegativity.
    pub fn new(scope: Vec<Variable>, values: Vec<f64>) -> Result<Self> {
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].iter().any(|w| w.name() == v.name()) {
                return Err(Error::DuplicateVariable {
                    variable: v.name().to_string(),
                });
            }
        }
        let expected: usize = scope.iter().map(Variable::cardinality).product();
        if values.len() != expected {
            return Err(Error::Invalid {
                reason: alloc::format!(
                    "factor table has {} cells, scope requires {expected}",
                    values.len()
                ),
            });
        }
        if let Some(bad) = values.iter().find(|&&v| v.is_nan() || v < 0.0) {
            return Err(Error::Invalid {
                reason: alloc::format!("factor cell {bad} is negative or NaN"),
            });
        }
        Ok(Factor {
            scope,
            values,
            normalized: false,
        })
    }

    /// A scalar factor: empty scope, a single cell.
    pub fn scalar(value: f64) -> Result<Self> {
        Factor::new(Vec::new(), alloc::vec![value])
    }

    /// The point-mass distribution on `state` of `var`.
    pub fn point_mass(var: &Variable, state: &str) -> Result<Self> {
        let idx = var.state_index(state)?;
        let mut values = alloc::vec![0.0; var.cardinality()];
        values[idx] = 1.0;
        let mut f = Factor::new(alloc::vec![var.clone()], values)?;
        f.normalized = true;
        Ok(f)
    }

    pub fn scope(&self) -> &[Variable] {
        &self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.scope
            .iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable {
                variable: name.to_string(),
            })
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.scope.iter().position(|v| v.name() == name)
    }

    /// Strides for mixed-radix indexing, last variable fastest.
    fn strides(&self) -> Vec<usize> {
        let mut strides = alloc::vec![1usize; self.scope.len()];
        for k in (0..self.scope.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.scope[k + 1].cardinality();
        }
        strides
    }

    fn decode(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = alloc::vec![0usize; self.scope.len()];
        for k in (0..self.scope.len()).rev() {
            let card = self.scope[k].cardinality();
            idx[k] = cell % card;
            cell /= card;
        }
        idx
    }

    /// Cell value at a full assignment of the scope.
    pub fn value_at(&self, assignment: &Assignment) -> Result<f64> {
        let strides = self.strides();
        let mut cell = 0usize;
        for (k, var) in self.scope.iter().enumerate() {
            let state = assignment
                .get(var.name())
                .ok_or_else(|| Error::UnknownVariable {
                    variable: var.name().to_string(),
                })?;
            cell += strides[k] * var.state_index(state)?;
        }
        Ok(self.values[cell])
    }

    /// Iterates (full assignment, value) over every cell.
    pub fn cells(&self) -> impl Iterator<Item = (Assignment, f64)> + '_ {
        (0..self.values.len()).map(move |cell| {
            let idx = self.decode(cell);
            let mut a = Assignment::new();
            for (var, &i) in self.scope.iter().zip(&idx) {
                a.bind(var.name(), var.states()[i].as_str()).unwrap();
            }
            (a, self.values[cell])
        })
    }

    /// Pointwise product. Scope of the result is `self`'s order followed
    /// by `other`'s variables not already present. Shared variables must
    /// have identical definitions.
    pub fn product(&self, other: &Factor) -> Result<Factor> {
        for v in &self.scope {
            if let Some(w) = other.scope.iter().find(|w| w.name() == v.name()) {
                if w.states() != v.states() {
                    return Err(Error::DomainMismatch {
                        variable: v.name().to_string(),
                    });
                }
            }
        }
        let mut scope = self.scope.clone();
        scope.extend(
            other
                .scope
                .iter()
                .filter(|w| self.position(w.name()).is_none())
                .cloned(),
        );
        let n: usize = scope.iter().map(Variable::cardinality).product();
        let mut out = Factor::new(scope, alloc::vec![0.0; n])?;

        let a_pos: Vec<usize> = self
            .scope
            .iter()
            .map(|v| out.position(v.name()).unwrap())
            .collect();
        let b_pos: Vec<usize> = other
            .scope
            .iter()
            .map(|v| out.position(v.name()).unwrap())
            .collect();
        let a_str = self.strides();
        let b_str = other.strides();
        for cell in 0..n {
            let idx = out.decode(cell);
            let ai: usize = a_pos.iter().zip(&a_str).map(|(&p, &s)| idx[p] * s).sum();
            let bi: usize = b_pos.iter().zip(&b_str).map(|(&p, &s)| idx[p] * s).sum();
            out.values[cell] = self.values[ai] * other.values[bi];
        }
        Ok(out)
    }

    /// Marginalizes the named variables out, one at a time in scope
    /// order so the accumulation order is deterministic: eliminating
    /// {X} then {Y} is bit-identical to eliminating {X, Y}. An empty
    /// list returns the factor unchanged.
    pub fn sum_out(&self, vars: &[&str]) -> Result<Factor> {
        for name in vars {
            if self.position(name).is_none() {
                return Err(Error::UnknownVariable {
                    variable: name.to_string(),
                });
            }
        }
        if vars.is_empty() {
            return Ok(self.clone());
        }
        let in_scope_order: Vec<&str> = self
            .scope
            .iter()
            .map(Variable::name)
            .filter(|n| vars.contains(n))
            .collect();
        let mut out = self.clone();
        for name in in_scope_order {
            out = out.sum_out_one(name);
        }
        Ok(out)
    }

    fn sum_out_one(&self, name: &str) -> Factor {
        let kept: Vec<Variable> = self
            .scope
            .iter()
            .filter(|v| v.name() != name)
            .cloned()
            .collect();
        let n: usize = kept.iter().map(Variable::cardinality).product();
        let mut out = Factor {
            scope: kept,
            values: alloc::vec![0.0; n],
            normalized: false,
        };
        let kept_pos: Vec<usize> = out
            .scope
            .iter()
            .map(|v| self.position(v.name()).unwrap())
            .collect();
        let out_str = out.strides();
        for cell in 0..self.values.len() {
            let idx = self.decode(cell);
            let oi: usize = kept_pos
                .iter()
                .zip(&out_str)
                .map(|(&p, &s)| idx[p] * s)
                .sum();
            out.values[oi] += self.values[cell];
        }
        out
    }

    /// Sums every variable out, leaving a scalar factor.
    pub fn sum_all(&self) -> Factor {
        Factor {
            scope: Vec::new(),
            values: alloc::vec![self.total()],
            normalized: false,
        }
    }

    /// Zeroes every cell whose state falls outside an event set. The
    /// result keeps the scope and is unnormalized.
    pub fn restrict(&self, evidence: &[EventSet]) -> Result<Factor> {
        let mut masks: Vec<Option<Vec<bool>>> = alloc::vec![None; self.scope.len()];
        for ev in evidence {
            let pos = self.position(ev.variable()).ok_or_else(|| Error::UnknownVariable {
                variable: ev.variable().to_string(),
            })?;
            let var = &self.scope[pos];
            ev.check_against(var)?;
            let mask = masks[pos].get_or_insert_with(|| alloc::vec![true; var.cardinality()]);
            // repeated event sets on the same variable intersect
            for (i, state) in var.states().iter().enumerate() {
                if !ev.contains(state) {
                    mask[i] = false;
                }
            }
        }
        let mut out = self.clone();
        out.normalized = false;
        for cell in 0..out.values.len() {
            let idx = out.decode(cell);
            let keep = masks
                .iter()
                .zip(&idx)
                .all(|(mask, &i)| mask.as_ref().is_none_or(|m| m[i]));
            if !keep {
                out.values[cell] = 0.0;
            }
        }
        Ok(out)
    }

    /// Scales the table to total mass 1 and flags it normalized.
    /// Idempotent: a factor already flagged normalized is returned as is.
    pub fn normalize(&self) -> Result<Factor> {
        if self.normalized {
            return Ok(self.clone());
        }
        let total = self.total();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let mut out = self.clone();
        for v in &mut out.values {
            *v /= total;
        }
        out.normalized = true;
        Ok(out)
    }

    /// The conditional table P(targets | evidence) as a normalized
    /// factor over `targets`. Targets must be disjoint from the
    /// evidence variables.
    pub fn condition(&self, evidence: &[EventSet], targets: &[&str]) -> Result<Factor> {
        for t in targets {
            if evidence.iter().any(|ev| ev.variable() == *t) {
                return Err(Error::Invalid {
                    reason: alloc::format!("target `{t}` also appears in the evidence"),
                });
            }
            if self.position(t).is_none() {
                return Err(Error::UnknownVariable {
                    variable: t.to_string(),
                });
            }
        }
        let restricted = self.restrict(evidence)?;
        let drop: Vec<&str> = self
            .scope
            .iter()
            .map(|v| v.name())
            .filter(|n| !targets.contains(n))
            .collect();
        let kept = restricted.sum_out(&drop)?;
        kept.normalize().map_err(|e| match e {
            Error::ZeroMass => Error::ImpossibleEvidence,
            other => other,
        })
    }

    /// E[func | given] under this distribution: the sum of
    /// `func(x) * P(x | given)` over the function's variables.
    pub fn expectation(&self, func: &StateFunction, given: &[EventSet]) -> Result<f64> {
        let targets: Vec<&str> = func.variables().iter().map(String::as_str).collect();
        let cond = self.condition(given, &targets)?;
        let mut acc = 0.0;
        for (assignment, p) in cond.cells() {
            acc += func.value(&assignment)? * p;
        }
        Ok(acc)
    }

    /// Permutes the scope to `order` (which must name exactly the scope
    /// variables), reindexing the table accordingly.
    pub fn reorder(&self, order: &[&str]) -> Result<Factor> {
        if order.len() != self.scope.len() {
            return Err(Error::NotAPermutation);
        }
        let scope: Vec<Variable> = order
            .iter()
            .map(|name| self.variable(name).cloned())
            .collect::<Result<_>>()?;
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].iter().any(|w| w.name() == v.name()) {
                return Err(Error::NotAPermutation);
            }
        }
        let mut out = Factor {
            scope,
            values: alloc::vec![0.0; self.values.len()],
            normalized: self.normalized,
        };
        let pos: Vec<usize> = out
            .scope
            .iter()
            .map(|v| self.position(v.name()).unwrap())
            .collect();
        let src_str = self.strides();
        for cell in 0..out.values.len() {
            let idx = out.decode(cell);
            let si: usize = pos.iter().zip(idx.iter()).map(|(&p, &i)| src_str[p] * i).sum();
            out.values[cell] = self.values[si];
        }
        Ok(out)
    }
}
