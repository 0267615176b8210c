//! Truss problem definition, solution-vector encoding and a numeric FEM
//! reference solver.
//!
//! Units are N, mm and MPa throughout.

mod assignment;
mod fem;
mod fixtures;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assignment::{Assignment, Layout};
pub use fem::{assemble_numeric, numeric_fem_solve, FemSolution};
pub use fixtures::{builtin_problem, BuiltinProblem};

#[derive(Debug, Error)]
pub enum TrussError {
    #[error("unknown builtin problem {0:?} (expected two_truss, three_truss or four_truss)")]
    UnknownProblem(String),
    #[error("cannot parse problem file: {0}")]
    Parse(String),
    #[error("invalid problem: {0}")]
    Validation(String),
    #[error("assignment has {got} bits, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("assignment {0} does not select exactly one area per element")]
    InvalidAssignment(String),
    #[error("solution index {index} outside 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("stiffness matrix is singular (zero area or mechanism)")]
    SingularStiffness,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    #[serde(rename = "x_mm")]
    pub x: f64,
    #[serde(rename = "y_mm")]
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Element {
    pub id: String,
    pub start: String,
    pub end: String,
    /// Discrete cross-sectional areas in mm², strictly increasing.
    #[serde(rename = "choices_mm2")]
    pub choices: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    #[serde(rename = "E_MPa")]
    pub youngs_modulus: f64,
    #[serde(rename = "sigma_limit_MPa")]
    pub sigma_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub node: String,
    #[serde(rename = "fx_N")]
    pub fx: f64,
    #[serde(rename = "fy_N")]
    pub fy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Support {
    pub node: String,
    pub fix_x: bool,
    pub fix_y: bool,
}

/// A 2D truss with discrete area choices per element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrussProblem {
    pub nodes: Vec<Node>,
    pub elements: Vec<Element>,
    pub material: Material,
    pub loads: Vec<Load>,
    pub supports: Vec<Support>,
}

impl TrussProblem {
    /// Parses and validates a problem from its JSON document.
    pub fn from_json(text: &str) -> Result<Self, TrussError> {
        let p: TrussProblem = serde_json::from_str(text).map_err(|e| TrussError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), TrussError> {
        let invalid = |msg: String| Err(TrussError::Validation(msg));

        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return invalid(format!("duplicate node id {:?}", n.id));
            }
            if !n.x.is_finite() || !n.y.is_finite() {
                return invalid(format!("node {:?} has non-finite coordinates", n.id));
            }
        }
        if !(self.material.youngs_modulus > 0.0) || !(self.material.sigma_limit > 0.0) {
            return invalid("material constants must be positive".into());
        }
        if self.elements.is_empty() {
            return invalid("no elements".into());
        }
        let mut element_ids = HashSet::new();
        let choice_count = self.elements[0].choices.len();
        for e in &self.elements {
            if !element_ids.insert(e.id.as_str()) {
                return invalid(format!("duplicate element id {:?}", e.id));
            }
            let (Some(s), Some(t)) = (self.node_index(&e.start), self.node_index(&e.end)) else {
                return invalid(format!("element {:?} references a missing node", e.id));
            };
            if s == t {
                return invalid(format!("element {:?} starts and ends at the same node", e.id));
            }
            let (a, b) = (&self.nodes[s], &self.nodes[t]);
            if a.x == b.x && a.y == b.y {
                return invalid(format!("element {:?} has zero length", e.id));
            }
            if e.choices.is_empty() {
                return invalid(format!("element {:?} has no area choices", e.id));
            }
            if e.choices.len() != choice_count {
                return invalid(format!(
                    "element {:?} has {} choices, expected {choice_count} like the first element",
                    e.id,
                    e.choices.len()
                ));
            }
            if e.choices.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
                return invalid(format!("element {:?} has a non-positive area choice", e.id));
            }
            if e.choices.windows(2).any(|w| w[0] >= w[1]) {
                return invalid(format!("element {:?} choices are not strictly increasing", e.id));
            }
        }
        for l in &self.loads {
            if self.node_index(&l.node).is_none() {
                return invalid(format!("load references missing node {:?}", l.node));
            }
        }
        for s in &self.supports {
            if self.node_index(&s.node).is_none() {
                return invalid(format!("support references missing node {:?}", s.node));
            }
        }
        if self.free_dofs().is_empty() {
            return invalid("supports leave no free degree of freedom".into());
        }
        Ok(())
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.elements.len(), self.elements.first().map_or(0, |e| e.choices.len()))
    }

    /// Node indices of element `e`.
    pub fn element_nodes(&self, e: usize) -> (usize, usize) {
        let el = &self.elements[e];
        let s = self.node_index(&el.start).expect("validated start node");
        let t = self.node_index(&el.end).expect("validated end node");
        (s, t)
    }

    /// Undeformed `(dx, dy)` from start to end node of element `e`.
    pub fn element_vector(&self, e: usize) -> (f64, f64) {
        let (s, t) = self.element_nodes(e);
        (self.nodes[t].x - self.nodes[s].x, self.nodes[t].y - self.nodes[s].y)
    }

    /// Global DoF indices (`2 * node + axis`) left free by the supports.
    pub fn free_dofs(&self) -> Vec<usize> {
        let mut fixed = vec![false; 2 * self.nodes.len()];
        for s in &self.supports {
            if let Some(n) = self.node_index(&s.node) {
                fixed[2 * n] |= s.fix_x;
                fixed[2 * n + 1] |= s.fix_y;
            }
        }
        (0..fixed.len()).filter(|&d| !fixed[d]).collect()
    }

    /// Applied load on every global DoF, summing repeated entries.
    pub fn load_vector(&self) -> Vec<f64> {
        let mut f = vec![0.0; 2 * self.nodes.len()];
        for l in &self.loads {
            let n = self.node_index(&l.node).expect("validated load node");
            f[2 * n] += l.fx;
            f[2 * n + 1] += l.fy;
        }
        f
    }

    /// Applied load restricted to the free DoFs, in [`Self::free_dofs`] order.
    pub fn free_load_vector(&self) -> Vec<f64> {
        let f = self.load_vector();
        self.free_dofs().into_iter().map(|d| f[d]).collect()
    }

    /// `A_n = Σ_c a_{n,c} A_{n,c}` for every element. Invalid assignments give
    /// zero or summed areas.
    pub fn areas_from_assignment(&self, a: &Assignment) -> Result<Vec<f64>, TrussError> {
        let layout = self.layout();
        layout.check_len(a)?;
        Ok(self
            .elements
            .iter()
            .enumerate()
            .map(|(n, e)| {
                e.choices
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| a.bit(layout.var(n, c)))
                    .map(|(_, area)| area)
                    .sum()
            })
            .collect())
    }
}

/// Reads and validates a problem JSON file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<TrussProblem, TrussError> {
    let text = std::fs::read_to_string(path)?;
    TrussProblem::from_json(&text)
}
