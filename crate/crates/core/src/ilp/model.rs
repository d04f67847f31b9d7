use std::fmt;

use super::IlpError;

pub type VarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: i64,
    pub upper: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Constraint {
    pub fn activity(&self, values: &[i64]) -> i128 {
        self.terms
            .iter()
            .map(|&(v, a)| a as i128 * values[v] as i128)
            .sum()
    }

    pub fn is_satisfied(&self, values: &[i64]) -> bool {
        let act = self.activity(values);
        let rhs = self.rhs as i128;
        match self.sense {
            Sense::Le => act <= rhs,
            Sense::Ge => act >= rhs,
            Sense::Eq => act == rhs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

/// An integer linear program with integer data.
///
/// Terms referring to undeclared variables are accepted by the builder
/// methods and reported by [`IlpModel::validate`], so models can be assembled
/// in any order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IlpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(VarId, i64)>,
    pub objective_constant: i64,
    pub direction: Direction,
}

impl IlpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.push_var(name.into(), VarKind::Binary, 0, 1)
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: i64, upper: i64) -> VarId {
        self.push_var(name.into(), VarKind::Integer, lower, upper)
    }

    fn push_var(&mut self, name: String, kind: VarKind, lower: i64, upper: i64) -> VarId {
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, i64)>,
        sense: Sense,
        rhs: i64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, direction: Direction, terms: Vec<(VarId, i64)>) {
        self.direction = direction;
        self.objective = terms;
    }

    pub fn var_count(&self) -> usize {
        self.variables.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<(), IlpError> {
        let n = self.variables.len();
        let mut seen = std::collections::HashSet::new();
        for (id, v) in self.variables.iter().enumerate() {
            if v.lower > v.upper {
                return Err(IlpError::ModelMalformed(format!(
                    "variable `{}` has empty domain [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.kind == VarKind::Binary && (v.lower < 0 || v.upper > 1) {
                return Err(IlpError::ModelMalformed(format!(
                    "binary variable `{}` has bounds outside [0, 1]",
                    v.name
                )));
            }
            if v.name.is_empty() || v.name.chars().any(char::is_whitespace) {
                return Err(IlpError::ModelMalformed(format!(
                    "variable {id} has an unusable name `{}`",
                    v.name
                )));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(IlpError::ModelMalformed(format!(
                    "duplicate variable name `{}`",
                    v.name
                )));
            }
        }
        let check = |terms: &[(VarId, i64)], what: &str| {
            for &(v, _) in terms {
                if v >= n {
                    return Err(IlpError::ModelMalformed(format!(
                        "{what} references undeclared variable {v}"
                    )));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for c in &self.constraints {
            check(&c.terms, &format!("constraint `{}`", c.name))?;
        }
        Ok(())
    }

    /// Objective value of an assignment, including the constant.
    pub fn evaluate(&self, values: &[i64]) -> i64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .map(|&(v, c)| c * values[v])
                .sum::<i64>()
    }

    /// Exact feasibility check against bounds and the raw constraint list.
    pub fn is_feasible(&self, values: &[i64]) -> bool {
        self.first_violation(values).is_none()
    }

    /// Index of the first violated constraint, or `usize::MAX` for a bound
    /// or length violation.
    pub fn first_violation(&self, values: &[i64]) -> Option<usize> {
        if values.len() != self.variables.len() {
            return Some(usize::MAX);
        }
        if self
            .variables
            .iter()
            .zip(values)
            .any(|(v, &x)| x < v.lower || x > v.upper)
        {
            return Some(usize::MAX);
        }
        self.constraints.iter().position(|c| !c.is_satisfied(values))
    }
}
