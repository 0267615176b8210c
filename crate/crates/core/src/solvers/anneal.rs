use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{aggregate, Sample, Sampler, SamplerParams, SolverError};
use crate::boolpoly::VarId;
use crate::par;
use crate::pipeline::QuboModel;

/// Simulated annealing with the given schedule; `seed` in [`Sampler::sample`]
/// replaces `params.seed`.
#[derive(Debug, Clone, Default)]
pub struct SimulatedAnnealer {
    pub params: SamplerParams,
}

impl SimulatedAnnealer {
    pub fn new(params: SamplerParams) -> Self {
        SimulatedAnnealer { params }
    }
}

impl Sampler for SimulatedAnnealer {
    fn sample(&self, q: &QuboModel, seed: u64) -> Result<Vec<Sample>, SolverError> {
        simulated_anneal(q, &SamplerParams { seed, ..self.params.clone() })
    }
}

/// Independent single-flip Metropolis reads over a geometric β schedule.
/// Read `r` draws from its own generator seeded with `seed + r`, so the
/// result does not depend on how reads are scheduled.
pub fn simulated_anneal(q: &QuboModel, params: &SamplerParams) -> Result<Vec<Sample>, SolverError> {
    params.validate()?;
    let (h, adj) = q.to_dense();
    let betas = schedule(params);
    let reads = par::map_range(params.num_reads, |r| anneal_read(&h, &adj, &betas, params.seed.wrapping_add(r as u64)));
    Ok(aggregate(q, reads))
}

fn schedule(params: &SamplerParams) -> Vec<f64> {
    let n = params.sweeps_per_read;
    if n == 1 {
        return vec![params.beta_end];
    }
    let ratio = params.beta_end / params.beta_start;
    (0..n).map(|k| params.beta_start * ratio.powf(k as f64 / (n - 1) as f64)).collect()
}

fn anneal_read(h: &[f64], adj: &[Vec<(VarId, f64)>], betas: &[f64], seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h.len();
    let mut x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    // field[i] is the energy change of setting x_i from 0 to 1.
    let mut field = h.to_vec();
    for (i, row) in adj.iter().enumerate() {
        if x[i] {
            for &(j, c) in row {
                field[j] += c;
            }
        }
    }
    for &beta in betas {
        for i in 0..n {
            let delta = if x[i] { -field[i] } else { field[i] };
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                x[i] = !x[i];
                let sign = if x[i] { 1.0 } else { -1.0 };
                for &(j, c) in &adj[i] {
                    field[j] += sign * c;
                }
            }
        }
    }
    x
}
