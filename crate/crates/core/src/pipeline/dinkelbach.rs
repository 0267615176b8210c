use serde::{Deserialize, Serialize};

use super::{process_objective, PipelineError, PipelineParams, QuboModel};
use crate::boolpoly::BoolPoly;
use crate::solvers::{brute_force_valid, decode_sample, Sampler};
use crate::symfem::ObjectiveFractional;
use crate::truss::{Assignment, TrussProblem};

/// Size of the polynomials handled in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PolyStats {
    pub terms: usize,
    pub degree: usize,
    pub qubo_vars: usize,
    pub aux_vars: usize,
    pub qubo_linear: usize,
    pub qubo_quadratic: usize,
}

impl PolyStats {
    pub fn of(nf: &BoolPoly, q: Option<&QuboModel>) -> Self {
        let mut s = PolyStats { terms: nf.len(), degree: nf.degree(), ..Default::default() };
        if let Some(q) = q {
            s.qubo_vars = q.num_vars;
            s.aux_vars = q.aux_registry.len();
            s.qubo_linear = q.linear.len();
            s.qubo_quadratic = q.quadratic.len();
        }
        s
    }
}

/// What the inner solver found for one step polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub assignment: Assignment,
    pub valid: bool,
    /// Energy of the best sample under whatever model was minimized.
    pub energy: f64,
    pub stats: PolyStats,
    pub penalty_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub lambda_in: f64,
    pub objective_poly_stats: PolyStats,
    pub best_sample: Assignment,
    pub best_energy: f64,
    pub sample_valid: bool,
    pub penalty_violations: usize,
    /// Objective value at the sample, when it is valid.
    pub sample_objective: Option<f64>,
    pub lambda_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub final_assignment: Assignment,
    pub final_solution_index: Option<usize>,
    pub final_objective_value: f64,
    pub rng_seed: u64,
}

/// SplitMix64 finalizer over `(seed, stream)`, for per-iteration and
/// per-trial seeds whose read ranges never overlap.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The iteration itself. Starting from `λ = 0`, each step minimizes
/// `N − λD` through `step`; a valid result moves `obj ← λ`, `λ ← N/D` at the
/// sample. Invalid results leave both untouched but still use up an
/// iteration. Stops once `|λ − obj| ≤ δ` or after `max_iters` steps.
pub fn dinkelbach_loop<S>(
    num: &BoolPoly,
    den: &BoolPoly,
    params: &PipelineParams,
    rng_seed: u64,
    mut step: S,
) -> Result<SolveReport, PipelineError>
where
    S: FnMut(usize, &BoolPoly) -> Result<StepResult, PipelineError>,
{
    params.validate()?;
    let mut lambda = 0.0;
    let mut obj = f64::INFINITY;
    let mut iterations = Vec::new();
    let mut last_valid: Option<(Assignment, f64)> = None;
    while (lambda - obj).abs() > params.delta && iterations.len() < params.max_iters {
        let iter = iterations.len() + 1;
        let nf = num.sub(&den.scale(lambda));
        let found = step(iter, &nf)?;
        let lambda_in = lambda;
        let mut sample_objective = None;
        if found.valid {
            let mask = found.assignment.mask();
            let value = num.evaluate_mask(mask) / den.evaluate_mask(mask);
            sample_objective = Some(value);
            obj = lambda;
            lambda = value;
            last_valid = Some((found.assignment.clone(), value));
        }
        iterations.push(IterationRecord {
            iter,
            lambda_in,
            objective_poly_stats: found.stats,
            best_sample: found.assignment,
            best_energy: found.energy,
            sample_valid: found.valid,
            penalty_violations: found.penalty_violations,
            sample_objective,
            lambda_out: lambda,
        });
    }
    let (final_assignment, final_objective_value) =
        last_valid.ok_or(PipelineError::AllIterationsInvalid { iterations: iterations.len() })?;
    Ok(SolveReport {
        converged: (lambda - obj).abs() <= params.delta,
        iterations,
        final_assignment,
        final_solution_index: None,
        final_objective_value,
        rng_seed,
    })
}

fn with_index(mut report: SolveReport, p: &TrussProblem) -> SolveReport {
    report.final_solution_index = p.layout().solution_index(&report.final_assignment).ok();
    report
}

/// Sampler-driven solve: every step is processed to a QUBO and sampled;
/// iteration `k` uses seed `derive_seed(seed, k)`.
pub fn dinkelbach_solve(
    obj: &ObjectiveFractional,
    p: &TrussProblem,
    sampler: &dyn Sampler,
    params: &PipelineParams,
    seed: u64,
) -> Result<SolveReport, PipelineError> {
    let report = dinkelbach_loop(obj.expr.num(), obj.expr.den(), params, seed, |iter, nf| {
        sample_step(nf, p, sampler, params, derive_seed(seed, iter as u64))
    })?;
    Ok(with_index(report, p))
}

/// Same loop with an exact inner step: `N − λD` minimized over the valid
/// assignments only.
pub fn dinkelbach_solve_exact(
    obj: &ObjectiveFractional,
    p: &TrussProblem,
    params: &PipelineParams,
) -> Result<SolveReport, PipelineError> {
    let report = dinkelbach_loop(obj.expr.num(), obj.expr.den(), params, 0, |_, nf| {
        let land = brute_force_valid(nf, p).map_err(|e| PipelineError::SamplerFailure(e.to_string()))?;
        let best = land.best();
        Ok(StepResult {
            assignment: best.assignment.clone(),
            valid: true,
            energy: best.value,
            stats: PolyStats::of(nf, None),
            penalty_violations: 0,
        })
    })?;
    Ok(with_index(report, p))
}

/// One-shot minimization of a plain polynomial objective through the same
/// processing and sampler; used for the non-fractional objective.
pub fn minimize_directly(
    poly: &BoolPoly,
    p: &TrussProblem,
    sampler: &dyn Sampler,
    params: &PipelineParams,
    seed: u64,
) -> Result<SolveReport, PipelineError> {
    let found = sample_step(poly, p, sampler, params, derive_seed(seed, 1))?;
    let value = found.valid.then(|| poly.evaluate_mask(found.assignment.mask()));
    let record = IterationRecord {
        iter: 1,
        lambda_in: 0.0,
        objective_poly_stats: found.stats,
        best_sample: found.assignment.clone(),
        best_energy: found.energy,
        sample_valid: found.valid,
        penalty_violations: found.penalty_violations,
        sample_objective: value,
        lambda_out: 0.0,
    };
    let value = value.ok_or(PipelineError::AllIterationsInvalid { iterations: 1 })?;
    Ok(with_index(
        SolveReport {
            iterations: vec![record],
            converged: true,
            final_assignment: found.assignment,
            final_solution_index: None,
            final_objective_value: value,
            rng_seed: seed,
        },
        p,
    ))
}

fn sample_step(
    nf: &BoolPoly,
    p: &TrussProblem,
    sampler: &dyn Sampler,
    params: &PipelineParams,
    seed: u64,
) -> Result<StepResult, PipelineError> {
    let q = process_objective(nf, p, params)?;
    let samples = sampler.sample(&q, seed).map_err(|e| PipelineError::SamplerFailure(e.to_string()))?;
    let best = samples.first().ok_or_else(|| PipelineError::SamplerFailure("sampler returned no samples".into()))?;
    let decoded = decode_sample(best, &q, &p.layout()).map_err(|e| PipelineError::SamplerFailure(e.to_string()))?;
    Ok(StepResult {
        assignment: decoded.assignment,
        valid: decoded.valid,
        energy: best.energy,
        stats: PolyStats::of(nf, Some(&q)),
        penalty_violations: decoded.penalty_violations.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolpoly::Monomial;
    use crate::symfem::{objective_fractional, SymbolicTruss};
    use crate::truss::{builtin_problem, BuiltinProblem};

    #[test]
    fn toy_fraction_converges_in_three_steps() {
        // (2 + x) / (1 + x): minimum 1.5 at x = 1.
        let num = BoolPoly::from_terms([(Monomial::ONE, 2.0), (Monomial::var(0), 1.0)]);
        let den = BoolPoly::from_terms([(Monomial::ONE, 1.0), (Monomial::var(0), 1.0)]);
        let params = PipelineParams::for_elements(1);
        let report = dinkelbach_loop(&num, &den, &params, 0, |_, nf| {
            let x = nf.evaluate_mask(1) < nf.evaluate_mask(0);
            Ok(StepResult {
                assignment: Assignment::new(vec![x]),
                valid: true,
                energy: nf.evaluate_mask(x as u64),
                stats: PolyStats::of(nf, None),
                penalty_violations: 0,
            })
        })
        .unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations.len(), 3);
        assert_eq!(report.final_assignment.bits(), &[true]);
        assert_eq!(report.final_objective_value, 1.5);
        let lambdas: Vec<f64> = report.iterations.iter().map(|r| r.lambda_out).collect();
        assert_eq!(lambdas, [2.0, 1.5, 1.5]);
    }

    #[test]
    fn invalid_steps_do_not_converge_falsely() {
        let num = BoolPoly::constant(1.0);
        let den = BoolPoly::constant(1.0);
        let params = PipelineParams { max_iters: 4, ..PipelineParams::for_elements(2) };
        let err = dinkelbach_loop(&num, &den, &params, 0, |_, nf| {
            Ok(StepResult {
                assignment: Assignment::new(vec![false]),
                valid: false,
                energy: 0.0,
                stats: PolyStats::of(nf, None),
                penalty_violations: 0,
            })
        })
        .unwrap_err();
        assert!(matches!(err, PipelineError::AllIterationsInvalid { iterations: 4 }));
    }

    #[test]
    fn exact_inner_solver_reaches_optima() {
        for (b, want) in [(BuiltinProblem::TwoTruss, 7), (BuiltinProblem::ThreeTruss, 21), (BuiltinProblem::FourTruss, 7)] {
            let p = b.problem();
            let sym = SymbolicTruss::build(&p).unwrap();
            let obj = objective_fractional(&p, &sym.stresses).unwrap();
            let report = dinkelbach_solve_exact(&obj, &p, &PipelineParams::for_problem(&p)).unwrap();
            assert!(report.converged, "{b}");
            assert!(report.iterations.len() <= 15);
            assert_eq!(report.final_solution_index, Some(want), "{b}");
            let last = report.iterations.last().unwrap();
            assert!((last.lambda_out - last.lambda_in).abs() <= 1e-6);
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..100).map(|k| derive_seed(42, k)).collect();
        assert_eq!(seeds.len(), 100);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }

    #[test]
    fn two_truss_with_annealer() {
        use crate::solvers::{SamplerParams, SimulatedAnnealer};
        let p = builtin_problem("two_truss").unwrap();
        let sym = SymbolicTruss::build(&p).unwrap();
        let obj = objective_fractional(&p, &sym.stresses).unwrap();
        let sa = SimulatedAnnealer::new(SamplerParams { num_reads: 16, ..Default::default() });
        let report = dinkelbach_solve(&obj, &p, &sa, &PipelineParams::for_problem(&p), 1).unwrap();
        assert_eq!(report.final_solution_index, Some(7));
    }
}
