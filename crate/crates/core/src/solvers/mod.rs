//! QUBO samplers behind one contract, plus brute-force oracles over the
//! valid solution set.

mod anneal;
mod exhaustive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolpoly::{BoolPoly, PolyError, RationalExpr, VarId};
use crate::pipeline::QuboModel;
use crate::symfem::{Objective, ObjectiveFractional};
use crate::truss::{Assignment, Layout, TrussError, TrussProblem};

pub use anneal::{simulated_anneal, SimulatedAnnealer};
pub use exhaustive::{brute_force_qubo, BruteForceResult, ExhaustiveSampler, DEFAULT_MAX_VARS};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{vars} variables exceed the brute-force cap of {cap}")]
    TooManyVariables { vars: usize, cap: usize },
    #[error("invalid sampler parameters: {0}")]
    InvalidParams(String),
    #[error("sample has {got} bits, QUBO has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("objective denominator vanishes at valid solution {0}")]
    SingularPoint(usize),
    #[error(transparent)]
    Truss(#[from] TrussError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: Assignment,
    pub energy: f64,
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerParams {
    pub num_reads: usize,
    pub sweeps_per_read: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams { num_reads: 256, sweeps_per_read: 1000, beta_start: 0.1, beta_end: 10.0, seed: 0 }
    }
}

impl SamplerParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.num_reads == 0 {
            return Err(SolverError::InvalidParams("num_reads must be at least 1".into()));
        }
        if self.sweeps_per_read == 0 {
            return Err(SolverError::InvalidParams("sweeps_per_read must be at least 1".into()));
        }
        if !(self.beta_start > 0.0 && self.beta_end > self.beta_start && self.beta_end.is_finite()) {
            return Err(SolverError::InvalidParams(format!(
                "need 0 < beta_start < beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }
}

/// Minimizes a QUBO. Samples come back sorted by energy, then bitstring.
pub trait Sampler: Sync {
    fn sample(&self, q: &QuboModel, seed: u64) -> Result<Vec<Sample>, SolverError>;
}

/// Sorts by `(energy, bitstring)` after merging duplicates.
pub(crate) fn aggregate(q: &QuboModel, reads: Vec<Vec<bool>>) -> Vec<Sample> {
    let mut counts = std::collections::BTreeMap::new();
    for r in reads {
        *counts.entry(r).or_insert(0usize) += 1;
    }
    let mut out: Vec<Sample> = counts
        .into_iter()
        .map(|(bits, occurrences)| Sample { energy: q.energy(&bits), assignment: Assignment::new(bits), occurrences })
        .collect();
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.assignment.cmp(&b.assignment)));
    out
}

/// A sample reduced to the original variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub assignment: Assignment,
    /// One area selected per element.
    pub valid: bool,
    /// Auxiliaries whose value differs from the product they replace.
    pub penalty_violations: Vec<VarId>,
}

pub fn decode_sample(sample: &Sample, q: &QuboModel, layout: &Layout) -> Result<Decoded, SolverError> {
    let bits = sample.assignment.bits();
    if bits.len() != q.num_vars {
        return Err(SolverError::LengthMismatch { expected: q.num_vars, got: bits.len() });
    }
    if q.num_original() != layout.num_vars() {
        return Err(SolverError::LengthMismatch { expected: layout.num_vars(), got: q.num_original() });
    }
    let penalty_violations = q
        .aux_registry
        .iter()
        .filter(|(&y, &(i, j))| bits[y] != (bits[i] && bits[j]))
        .map(|(&y, _)| y)
        .collect();
    let assignment = Assignment::new(bits[..q.num_original()].to_vec());
    let valid = layout.is_valid(&assignment)?;
    Ok(Decoded { assignment, valid, penalty_violations })
}

/// Anything that can be evaluated at a solution vector given as a mask.
pub trait PointObjective: Sync {
    fn value_mask(&self, mask: u64) -> Result<f64, PolyError>;
}

impl PointObjective for BoolPoly {
    fn value_mask(&self, mask: u64) -> Result<f64, PolyError> {
        Ok(self.evaluate_mask(mask))
    }
}

impl PointObjective for RationalExpr {
    fn value_mask(&self, mask: u64) -> Result<f64, PolyError> {
        self.evaluate_mask(mask)
    }
}

impl PointObjective for ObjectiveFractional {
    fn value_mask(&self, mask: u64) -> Result<f64, PolyError> {
        self.expr.evaluate_mask(mask)
    }
}

impl PointObjective for Objective {
    fn value_mask(&self, mask: u64) -> Result<f64, PolyError> {
        self.evaluate_mask(mask)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeEntry {
    pub solution_index: usize,
    pub assignment: Assignment,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    /// One entry per valid solution, in solution-index order.
    pub entries: Vec<LandscapeEntry>,
    /// Position of the minimum in `entries`; ties go to the lowest index.
    pub argmin: usize,
}

impl Landscape {
    pub fn best(&self) -> &LandscapeEntry {
        &self.entries[self.argmin]
    }
}

/// Evaluates the objective on every valid assignment.
pub fn brute_force_valid<O: PointObjective + ?Sized>(obj: &O, p: &TrussProblem) -> Result<Landscape, SolverError> {
    let layout = p.layout();
    let entries = crate::par::map_range(layout.num_valid(), |k| {
        let assignment = layout.index_to_solution(k + 1)?;
        let value = match obj.value_mask(assignment.mask()) {
            Err(PolyError::SingularPoint) => return Err(SolverError::SingularPoint(k + 1)),
            other => other?,
        };
        Ok(LandscapeEntry { solution_index: k + 1, assignment, value })
    })
    .into_iter()
    .collect::<Result<Vec<_>, SolverError>>()?;
    let argmin = entries
        .iter()
        .enumerate()
        .fold(0, |best, (k, e)| if e.value < entries[best].value { k } else { best });
    Ok(Landscape { entries, argmin })
}
