use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Sparse `(variable, coefficient)` terms, no duplicates, no zeros.
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            RowSense::Le => (act - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - act).max(0.0),
            RowSense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjSense {
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: ObjSense,
    pub coeffs: Vec<(VarId, f64)>,
}

/// `(Vars, IntVars, Constrs)` as reported in model summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub vars: usize,
    pub int_vars: usize,
    pub constrs: usize,
}

/// A solver-agnostic mixed-integer linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    var_index: HashMap<String, VarId>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>) -> Self {
        ModelSpec {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective { sense: ObjSense::Minimize, coeffs: Vec::new() },
            var_index: HashMap::new(),
        }
    }

    /// Declares a variable. Names must be unique.
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let name = name.into();
        let id = self.variables.len();
        let prev = self.var_index.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate variable name {name}");
        self.variables.push(Variable { name, kind, lower, upper });
        id
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    /// Adds a row; duplicate terms are merged and zero terms dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let coeffs = merge_terms(terms);
        self.constraints.push(Constraint { name: name.into(), coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (VarId, f64)>) {
        self.objective.coeffs = merge_terms(terms);
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn stats(&self) -> ModelStats {
        ModelStats {
            vars: self.variables.len(),
            int_vars: self.variables.iter().filter(|v| v.kind == VarKind::Binary).count(),
            constrs: self.constraints.len(),
        }
    }

    pub fn is_integer(&self, j: VarId) -> bool {
        self.variables[j].kind == VarKind::Binary
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.coeffs.iter().map(|&(j, c)| c * values[j]).sum()
    }

    /// Structural problems: dangling references, binaries not on `[0, 1]`,
    /// inverted bounds, non-finite data.
    pub fn validate(&self) -> Result<(), String> {
        let nv = self.variables.len();
        for v in &self.variables {
            if v.kind == VarKind::Binary && (v.lower != 0.0 || v.upper != 1.0) {
                return Err(format!("binary {} has bounds [{}, {}]", v.name, v.lower, v.upper));
            }
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() {
                return Err(format!("variable {} has bounds [{}, {}]", v.name, v.lower, v.upper));
            }
        }
        let check_terms = |what: &str, terms: &[(VarId, f64)]| -> Result<(), String> {
            for &(j, a) in terms {
                if j >= nv {
                    return Err(format!("{what} references undeclared variable #{j}"));
                }
                if !a.is_finite() {
                    return Err(format!("{what} has a non-finite coefficient"));
                }
            }
            Ok(())
        };
        for c in &self.constraints {
            check_terms(&format!("row {}", c.name), &c.coeffs)?;
            if !c.rhs.is_finite() {
                return Err(format!("row {} has a non-finite right-hand side", c.name));
            }
        }
        check_terms("objective", &self.objective.coeffs)
    }

    /// Rows violated by more than `tol`, as `(row index, violation)`.
    pub fn violated_rows(&self, values: &[f64], tol: f64) -> Vec<(usize, f64)> {
        self.constraints
            .iter()
            .enumerate()
            .filter_map(|(r, c)| {
                let v = c.violation(values);
                (v > tol).then_some((r, v))
            })
            .collect()
    }

    /// Variables outside their bounds (or fractional binaries) by more than `tol`.
    pub fn violated_bounds(&self, values: &[f64], tol: f64) -> Vec<VarId> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(j, v)| {
                let x = values[*j];
                x < v.lower - tol || x > v.upper + tol || (v.kind == VarKind::Binary && (x - x.round()).abs() > tol)
            })
            .map(|(j, _)| j)
            .collect()
    }
}

fn merge_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut v: Vec<(VarId, f64)> = terms.into_iter().collect();
    v.sort_by_key(|t| t.0);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(v.len());
    for (j, a) in v {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}
