use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::Value;

use qtruss_core::pipeline::{derive_seed, dinkelbach_solve, minimize_directly, process_objective, PipelineError, SolveReport};
use qtruss_core::solvers::{brute_force_valid, Landscape, SimulatedAnnealer};
use qtruss_core::symfem::Objective;
use qtruss_core::truss::Assignment;

use crate::config::RunConfig;
use crate::Failure;

fn bitstring(a: &Assignment) -> String {
    a.bits().iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Writes `contents` to `<out>/<file>`, or prints it when no directory is set.
fn emit(out: Option<&Path>, file: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(file);
            std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn landscape_of(cfg: &RunConfig) -> Result<(Objective, Landscape)> {
    let obj = Objective::build(&cfg.problem, cfg.objective)?;
    let land = brute_force_valid(&obj, &cfg.problem)?;
    Ok((obj, land))
}

pub fn brute(cfg: &RunConfig) -> Result<(), Failure> {
    let start = Instant::now();
    let (_, land) = landscape_of(cfg)?;
    let elapsed = start.elapsed();
    let best = land.best();
    println!("problem        {}", cfg.name);
    println!("objective      {}", cfg.objective);
    println!("argmin         {}", best.assignment.to_list_string());
    println!("solution index {}", best.solution_index);
    println!("value          {:e}", best.value);
    println!("wall time      {:.3} s", elapsed.as_secs_f64());
    Ok(())
}

pub fn landscape(cfg: &RunConfig) -> Result<(), Failure> {
    let (_, land) = landscape_of(cfg)?;
    let mut csv = String::from("solution_index,bitstring,objective_value,is_argmin\n");
    for e in &land.entries {
        let flag = u8::from(e.solution_index == land.best().solution_index);
        writeln!(csv, "{},{},{},{}", e.solution_index, bitstring(&e.assignment), e.value, flag).expect("string write");
    }
    emit(cfg.out.as_deref(), &format!("landscape_{}_{}.csv", cfg.name, cfg.objective), &csv)?;
    Ok(())
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum TrialOutcome {
    Converged,
    NotConverged,
    NoValidSample,
}

#[derive(Debug, Serialize)]
struct TrialReport {
    trial: usize,
    seed: u64,
    outcome: TrialOutcome,
    report: Option<SolveReport>,
}

fn run_trial(cfg: &RunConfig, obj: &Objective, trial: usize) -> Result<TrialReport> {
    let seed = derive_seed(cfg.sampler.seed, trial as u64);
    let sampler = SimulatedAnnealer::new(cfg.sampler.clone());
    let result = match obj {
        Objective::Fractional(f) => dinkelbach_solve(f, &cfg.problem, &sampler, &cfg.pipeline, seed),
        Objective::Flawed(f) => minimize_directly(&f.poly, &cfg.problem, &sampler, &cfg.pipeline, seed),
    };
    let (outcome, report) = match result {
        Ok(r) if r.converged => (TrialOutcome::Converged, Some(r)),
        Ok(r) => (TrialOutcome::NotConverged, Some(r)),
        Err(PipelineError::AllIterationsInvalid { .. }) => (TrialOutcome::NoValidSample, None),
        Err(e) => return Err(e.into()),
    };
    Ok(TrialReport { trial, seed, outcome, report })
}

pub fn solve(cfg: &RunConfig) -> Result<(), Failure> {
    let obj = Objective::build(&cfg.problem, cfg.objective).map_err(anyhow::Error::from)?;
    let trials = (0..cfg.repeat).map(|t| run_trial(cfg, &obj, t)).collect::<Result<Vec<_>>>()?;

    let solutions = cfg.problem.layout().num_valid();
    let mut counts = vec![0usize; solutions + 1];
    let mut failed = 0;
    let mut jsonl = String::new();
    for t in &trials {
        match &t.report {
            Some(r) => {
                match r.final_solution_index {
                    Some(i) => counts[i] += 1,
                    None => counts[0] += 1,
                }
                for rec in &r.iterations {
                    let mut v = serde_json::to_value(rec).map_err(anyhow::Error::from)?;
                    if let Value::Object(m) = &mut v {
                        m.insert("trial".into(), t.trial.into());
                    }
                    jsonl.push_str(&serde_json::to_string(&v).map_err(anyhow::Error::from)?);
                    jsonl.push('\n');
                }
            }
            None => counts[0] += 1,
        }
        if !matches!(t.outcome, TrialOutcome::Converged) {
            failed += 1;
        }
    }
    let mut histogram = String::from("solution_index,count\n");
    for (i, c) in counts.iter().enumerate().skip(1) {
        writeln!(histogram, "{i},{c}").expect("string write");
    }
    writeln!(histogram, "invalid,{}", counts[0]).expect("string write");

    for t in &trials {
        match &t.report {
            Some(r) => eprintln!(
                "trial {:>3}: {:?} after {} iterations, solution {} {} value {:e}",
                t.trial,
                t.outcome,
                r.iterations.len(),
                r.final_solution_index.map_or_else(|| "-".to_string(), |i| i.to_string()),
                r.final_assignment.to_list_string(),
                r.final_objective_value
            ),
            None => eprintln!("trial {:>3}: {:?}", t.trial, t.outcome),
        }
    }
    match cfg.out.as_deref() {
        Some(dir) => {
            let reports = serde_json::to_string_pretty(&trials).map_err(anyhow::Error::from)? + "\n";
            emit(Some(dir), "solve_reports.json", &reports)?;
            emit(Some(dir), "iterations.jsonl", &jsonl)?;
            emit(Some(dir), "histogram.csv", &histogram)?;
        }
        None => emit(None, "histogram.csv", &histogram)?,
    }
    if failed > 0 {
        return Err(Failure::Solve(anyhow!("{failed} of {} trials did not converge to a valid solution", trials.len())));
    }
    Ok(())
}

pub fn export_qubo(cfg: &RunConfig, lambda: Option<f64>) -> Result<(), Failure> {
    let obj = Objective::build(&cfg.problem, cfg.objective).map_err(anyhow::Error::from)?;
    let nf = match (&obj, lambda) {
        (Objective::Fractional(f), l) => f.expr.num().sub(&f.expr.den().scale(l.unwrap_or(0.0))),
        (Objective::Flawed(_), Some(_)) => {
            return Err(Failure::Usage(anyhow!("--lambda applies only to the fractional objective")));
        }
        (Objective::Flawed(f), None) => f.poly.clone(),
    };
    let q = process_objective(&nf, &cfg.problem, &cfg.pipeline).map_err(anyhow::Error::from)?;
    emit(cfg.out.as_deref(), "qubo.json", &q.to_json())?;
    Ok(())
}
