use super::{Sample, Sampler, SolverError};
use crate::par;
use crate::pipeline::QuboModel;
use crate::truss::Assignment;

pub const DEFAULT_MAX_VARS: usize = 24;

/// Low bits enumerated per parallel chunk.
const CHUNK_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub assignment: Assignment,
    pub energy: f64,
}

/// Exact sampler: one sample, the global minimum.
#[derive(Debug, Clone)]
pub struct ExhaustiveSampler {
    pub max_vars: usize,
}

impl Default for ExhaustiveSampler {
    fn default() -> Self {
        ExhaustiveSampler { max_vars: DEFAULT_MAX_VARS }
    }
}

impl Sampler for ExhaustiveSampler {
    fn sample(&self, q: &QuboModel, _seed: u64) -> Result<Vec<Sample>, SolverError> {
        let best = brute_force_qubo(q, self.max_vars)?;
        Ok(vec![Sample { assignment: best.assignment, energy: best.energy, occurrences: 1 }])
    }
}

/// Lexicographic bitstring order on masks (variable 0 is the first bit).
fn lex_key(mask: u64) -> u64 {
    mask.reverse_bits()
}

fn mask_bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Exact minimum over all `2^n` assignments. Each chunk walks its low bits
/// in Gray-code order with incremental energy updates; candidates within
/// rounding distance of the running minimum are re-evaluated exactly, and
/// ties go to the lexicographically smallest bitstring.
pub fn brute_force_qubo(q: &QuboModel, max_vars: usize) -> Result<BruteForceResult, SolverError> {
    let n = q.num_vars;
    if n > max_vars || n > 63 {
        return Err(SolverError::TooManyVariables { vars: n, cap: max_vars.min(63) });
    }
    let (h, adj) = q.to_dense();
    let low = n.min(CHUNK_BITS);
    let chunks = 1usize << (n - low);
    let tol = 1e-9 * (1.0 + q.offset.abs() + h.iter().map(|c| c.abs()).sum::<f64>() + q.quadratic.values().map(|c| c.abs()).sum::<f64>());
    let exact = |mask: u64| q.energy(&mask_bits(mask, n));
    let better = |a: (f64, u64), b: (f64, u64)| a.0 < b.0 || (a.0 == b.0 && lex_key(a.1) < lex_key(b.1));

    let per_chunk = par::map_range(chunks, |chunk| {
        let mut mask = (chunk as u64) << low;
        let mut x = mask_bits(mask, n);
        let mut field = h.clone();
        for (i, row) in adj.iter().enumerate() {
            if x[i] {
                for &(j, c) in row {
                    field[j] += c;
                }
            }
        }
        let mut running = exact(mask);
        let mut inc_best = running;
        let mut best = (running, mask);
        for t in 1u64..(1u64 << low) {
            let i = t.trailing_zeros() as usize;
            running += if x[i] { -field[i] } else { field[i] };
            x[i] = !x[i];
            mask ^= 1 << i;
            let sign = if x[i] { 1.0 } else { -1.0 };
            for &(j, c) in &adj[i] {
                field[j] += sign * c;
            }
            if running <= inc_best + tol {
                let cand = (exact(mask), mask);
                if better(cand, best) {
                    best = cand;
                }
                inc_best = inc_best.min(running);
            }
        }
        best
    });
    let (energy, mask) = per_chunk.into_iter().fold(None, |acc: Option<(f64, u64)>, c| match acc {
        Some(a) if !better(c, a) => Some(a),
        _ => Some(c),
    }).expect("at least one chunk");
    Ok(BruteForceResult { assignment: Assignment::new(mask_bits(mask, n)), energy })
}
