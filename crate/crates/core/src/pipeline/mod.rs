//! From a high-order objective to a QUBO: scaling and truncation passes,
//! one-hot penalties, quadratization, and the Dinkelbach loop that drives
//! them for fractional objectives.

mod dinkelbach;
mod qubo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolpoly::{BoolPoly, Monomial, PolyError, VarId};
use crate::symfem::SymFemError;
use crate::truss::{TrussError, TrussProblem};

pub use dinkelbach::{
    derive_seed, dinkelbach_loop, dinkelbach_solve, dinkelbach_solve_exact, minimize_directly, IterationRecord,
    PolyStats, SolveReport, StepResult,
};
pub use qubo::{qubo_to_ising, quadratize, quadratize_with_vars, IsingModel, QuboModel};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline parameters: {0}")]
    InvalidParams(String),
    #[error("sampler failed: {0}")]
    SamplerFailure(String),
    #[error("no valid sample in any of {iterations} iterations")]
    AllIterationsInvalid { iterations: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Truss(#[from] TrussError),
    #[error(transparent)]
    SymFem(#[from] SymFemError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    pub max_iters: usize,
    pub delta: f64,
    pub max_order: usize,
    pub c_user: f64,
    #[serde(rename = "c_NL")]
    pub c_nl: f64,
    pub prec_eps: f64,
    pub unary_lambda: f64,
    pub quad_strength: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            max_iters: 15,
            delta: 1e-6,
            max_order: 3,
            c_user: 1.0,
            c_nl: 0.1,
            prec_eps: 1e-8,
            unary_lambda: 10.0,
            quad_strength: 10.0,
        }
    }
}

impl PipelineParams {
    /// Benchmark settings: truncation order equal to the element count, and
    /// penalty strength 20 from four elements up (10 below).
    pub fn for_elements(elements: usize) -> Self {
        let penalty = if elements >= 4 { 20.0 } else { 10.0 };
        PipelineParams {
            max_order: elements.max(2),
            unary_lambda: penalty,
            quad_strength: penalty,
            ..Self::default()
        }
    }

    pub fn for_problem(p: &TrussProblem) -> Self {
        Self::for_elements(p.elements.len())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = [
            ("delta", self.delta),
            ("c_user", self.c_user),
            ("c_NL", self.c_nl),
            ("prec_eps", self.prec_eps),
            ("unary_lambda", self.unary_lambda),
            ("quad_strength", self.quad_strength),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PipelineError::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(PipelineError::InvalidParams("max_iters must be at least 1".into()));
        }
        if self.max_order < 2 {
            return Err(PipelineError::InvalidParams(format!("max_order must be at least 2, got {}", self.max_order)));
        }
        Ok(())
    }
}

/// Rescales so the largest coefficient magnitude is exactly `c_user`.
pub fn linear_scale(p: &BoolPoly, c_user: f64) -> Result<BoolPoly, PolyError> {
    let max = p.max_abs_coeff()?;
    Ok(p.map_coeffs(|c| c / max * c_user))
}

/// Sign-split saturation `c ↦ c / (|c| + c_nl)`, applied per coefficient.
pub fn nonlinear_scale(p: &BoolPoly, c_nl: f64) -> BoolPoly {
    p.map_coeffs(|c| if c > 0.0 { c / (c + c_nl) } else { -c / (c - c_nl) })
}

/// One-hot penalty `λ (2 Σ_{c<c'} q_c q_c' − Σ_c q_c)`, worth `λ(k² − 2k)` at
/// Hamming weight `k`.
pub fn unary_constraint(vars: &[VarId], lambda: f64) -> BoolPoly {
    let mut p = BoolPoly::zero();
    for (i, &a) in vars.iter().enumerate() {
        p.add_term(Monomial::var(a), -lambda);
        for &b in &vars[i + 1..] {
            p.add_term(Monomial::var(a).union(Monomial::var(b)), 2.0 * lambda);
        }
    }
    p
}

/// Every pass except quadratization, in pipeline order.
pub fn prepare_high_order(nf: &BoolPoly, p: &TrussProblem, params: &PipelineParams) -> Result<BoolPoly, PipelineError> {
    params.validate()?;
    let truncated = nf.truncate_above_order(params.max_order);
    let scaled = linear_scale(&truncated, params.c_user)?;
    let saturated = nonlinear_scale(&scaled, params.c_nl);
    let mut out = saturated.truncate_below_magnitude(params.prec_eps);
    let layout = p.layout();
    for n in 0..layout.elements {
        let vars: Vec<VarId> = (0..layout.choices).map(|c| layout.var(n, c)).collect();
        out += &unary_constraint(&vars, params.unary_lambda);
    }
    Ok(out)
}

/// Full processing of a step polynomial into a labelled QUBO.
pub fn process_objective(nf: &BoolPoly, p: &TrussProblem, params: &PipelineParams) -> Result<QuboModel, PipelineError> {
    let high = prepare_high_order(nf, p, params)?;
    let layout = p.layout();
    let mut q = quadratize_with_vars(&high, params.quad_strength, layout.num_vars());
    for n in 0..layout.elements {
        for c in 0..layout.choices {
            q.var_labels[layout.var(n, c)] = format!("q{}_{}", n + 1, c + 1);
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truss::builtin_problem;

    fn poly(terms: &[(&[VarId], f64)]) -> BoolPoly {
        BoolPoly::from_terms(terms.iter().map(|(v, c)| (Monomial::from_vars(v.iter().copied()).unwrap(), *c)))
    }

    #[test]
    fn linear_scale_examples() {
        let p = poly(&[(&[0], 2.0), (&[0, 1], -4.0)]);
        assert_eq!(linear_scale(&p, 1.0).unwrap(), poly(&[(&[0], 0.5), (&[0, 1], -1.0)]));
        let unit = poly(&[(&[0], 1.0), (&[1], -0.25)]);
        assert_eq!(linear_scale(&unit, 1.0).unwrap(), unit);
        assert!(matches!(linear_scale(&BoolPoly::zero(), 1.0), Err(PolyError::EmptyPolynomial)));
        let odd = poly(&[(&[0], 49.0), (&[1], 3.0)]);
        assert_eq!(linear_scale(&odd, 2.5).unwrap().max_abs_coeff().unwrap(), 2.5);
    }

    #[test]
    fn nonlinear_scale_examples() {
        let f = |c: f64| nonlinear_scale(&BoolPoly::linear(0, c), 0.1).coeff(Monomial::var(0));
        assert_eq!(f(0.1), 0.5);
        assert_eq!(f(-0.1), -0.5);
        assert!((f(1.0) - 0.9091).abs() < 1e-4);
        assert!(nonlinear_scale(&BoolPoly::zero(), 0.1).is_zero());
    }

    #[test]
    fn unary_examples() {
        let u = unary_constraint(&[0, 1, 2], 10.0);
        assert_eq!(u.evaluate(&[false, true, false]).unwrap(), -10.0);
        assert_eq!(u.evaluate(&[false, false, false]).unwrap(), 0.0);
        assert_eq!(u.evaluate(&[true, true, true]).unwrap(), 30.0);
    }

    #[test]
    fn params_defaults_and_validation() {
        let two = PipelineParams::for_problem(&builtin_problem("two_truss").unwrap());
        assert_eq!((two.max_order, two.unary_lambda, two.quad_strength), (2, 10.0, 10.0));
        let four = PipelineParams::for_problem(&builtin_problem("four_truss").unwrap());
        assert_eq!((four.max_order, four.unary_lambda, four.quad_strength), (4, 20.0, 20.0));
        assert_eq!((four.max_iters, four.delta, four.c_user, four.c_nl, four.prec_eps), (15, 1e-6, 1.0, 0.1, 1e-8));
        assert!(PipelineParams { max_order: 1, ..two.clone() }.validate().is_err());
        assert!(PipelineParams { c_nl: 0.0, ..two.clone() }.validate().is_err());
        assert!(PipelineParams { max_iters: 0, ..two }.validate().is_err());
    }

    #[test]
    fn params_json_overrides() {
        let p: PipelineParams = serde_json::from_str(r#"{"c_NL": 0.2, "max_iters": 5}"#).unwrap();
        assert_eq!((p.c_nl, p.max_iters, p.delta), (0.2, 5, 1e-6));
        assert!(serde_json::from_str::<PipelineParams>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn order_truncation_is_exact_on_valid_assignments() {
        use crate::symfem::{Objective, ObjectiveKind};
        for name in ["two_truss", "three_truss", "four_truss"] {
            let p = builtin_problem(name).unwrap();
            let obj = Objective::build(&p, ObjectiveKind::Fractional).unwrap();
            let num = obj.numerator();
            let cut = num.truncate_above_order(p.elements.len());
            for a in p.layout().valid_assignments() {
                assert_eq!(num.evaluate_mask(a.mask()), cut.evaluate_mask(a.mask()), "{name} {a}");
            }
        }
    }

    #[test]
    fn processed_qubo_is_labelled() {
        let p = builtin_problem("two_truss").unwrap();
        let params = PipelineParams::for_problem(&p);
        let obj = crate::symfem::Objective::build(&p, crate::symfem::ObjectiveKind::Fractional).unwrap();
        let q = process_objective(obj.numerator(), &p, &params).unwrap();
        assert_eq!(q.num_original(), 6);
        assert_eq!(q.var_labels[0], "q1_1");
        assert_eq!(q.var_labels[5], "q2_3");
    }
}
