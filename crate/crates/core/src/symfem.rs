//! Symbolic FEM over boolean area-choice variables.
//!
//! Element areas are written as `A_n(q) = Σ_c a_{n,c} q_{n,c}`, so every
//! stiffness entry is a multilinear polynomial. Displacements come out as
//! `num_u_i / den` with `den = det K`, stresses as `S_n / den²`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolpoly::{BoolPoly, Monomial, PolyError, RationalExpr, VarId};
use crate::par;
use crate::truss::{TrussError, TrussProblem};

/// Free DoFs are tracked as bits of a `u32` subset mask in the determinant.
pub const MAX_FREE_DOFS: usize = 24;

#[derive(Debug, Error)]
pub enum SymFemError {
    #[error("element {0} has zero length")]
    ZeroLength(String),
    #[error("problem has no free degree of freedom")]
    NoFreeDof,
    #[error("{0} free degrees of freedom exceed the supported {MAX_FREE_DOFS}")]
    TooManyDofs(usize),
    #[error("stiffness determinant is identically zero")]
    ZeroDeterminant,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("objective file: {0}")]
    Format(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Truss(#[from] TrussError),
}

pub type ElementMatrix = [[BoolPoly; 4]; 4];

/// Bar stiffness `(E A(q) / L) · a aᵀ` with `a = [-c, -s, c, s]`, DoF order
/// `[start_x, start_y, end_x, end_y]`.
pub fn element_stiffness(
    start: [f64; 2],
    end: [f64; 2],
    choices: &[f64],
    vars: &[VarId],
    youngs_modulus: f64,
    id: &str,
) -> Result<ElementMatrix, SymFemError> {
    if choices.len() != vars.len() {
        return Err(SymFemError::DimensionMismatch { expected: choices.len(), got: vars.len() });
    }
    let (dx, dy) = (end[0] - start[0], end[1] - start[1]);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return Err(SymFemError::ZeroLength(id.to_string()));
    }
    let (c, s) = (dx / len, dy / len);
    let axis = [-c, -s, c, s];
    let k = youngs_modulus / len;
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let direction = axis[a] * axis[b];
            BoolPoly::from_terms(
                choices
                    .iter()
                    .zip(vars)
                    .map(|(&area, &v)| (Monomial::var(v), k * direction * area)),
            )
        })
    }))
}

/// Reduced global stiffness over the free DoFs.
#[derive(Debug, Clone, PartialEq)]
pub struct SymStiffness {
    pub entries: Vec<Vec<BoolPoly>>,
    /// Global DoF (`2 * node + axis`) of every row/column.
    pub dofs: Vec<usize>,
}

impl SymStiffness {
    pub fn size(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..i).all(|j| self.entries[i][j] == self.entries[j][i]))
    }

    /// Numeric matrix at the assignment given by `mask`, row-major.
    pub fn evaluate_mask(&self, mask: u64) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|p| p.evaluate_mask(mask)).collect())
            .collect()
    }
}

/// Scatter-adds the element matrices and drops fixed DoFs. Element `n`,
/// choice `c` uses variable `n * C + c`.
pub fn assemble(p: &TrussProblem) -> Result<SymStiffness, SymFemError> {
    let layout = p.layout();
    let free = p.free_dofs();
    if free.is_empty() {
        return Err(SymFemError::NoFreeDof);
    }
    if free.len() > MAX_FREE_DOFS {
        return Err(SymFemError::TooManyDofs(free.len()));
    }
    let mut slot = vec![None; 2 * p.nodes.len()];
    for (i, &d) in free.iter().enumerate() {
        slot[d] = Some(i);
    }
    let mut entries = vec![vec![BoolPoly::zero(); free.len()]; free.len()];
    for (n, el) in p.elements.iter().enumerate() {
        let (s, t) = p.element_nodes(n);
        let vars: Vec<VarId> = (0..layout.choices).map(|c| layout.var(n, c)).collect();
        let ke = element_stiffness(
            [p.nodes[s].x, p.nodes[s].y],
            [p.nodes[t].x, p.nodes[t].y],
            &el.choices,
            &vars,
            p.material.youngs_modulus,
            &el.id,
        )?;
        let dofs = [2 * s, 2 * s + 1, 2 * t, 2 * t + 1];
        for a in 0..4 {
            for b in 0..4 {
                if let (Some(i), Some(j)) = (slot[dofs[a]], slot[dofs[b]]) {
                    entries[i][j] += &ke[a][b];
                }
            }
        }
    }
    Ok(SymStiffness { entries, dofs: free })
}

/// Determinant by cofactor expansion with memoized column subsets.
///
/// Division-free, so it is exact in the idempotent ring where Bareiss-style
/// exact division is not available. Row `k` is expanded against every column
/// subset of size `k + 1`; cost is `O(n · 2ⁿ)` polynomial products.
pub fn determinant(m: &[Vec<BoolPoly>]) -> BoolPoly {
    let n = m.len();
    assert!(n <= MAX_FREE_DOFS, "determinant of a {n}x{n} matrix");
    let mut layer: BTreeMap<u32, BoolPoly> = BTreeMap::from([(0, BoolPoly::constant(1.0))]);
    for (k, row) in m.iter().enumerate() {
        let mut next: BTreeMap<u32, BoolPoly> = BTreeMap::new();
        for (&cols, minor) in &layer {
            for (j, entry) in row.iter().enumerate() {
                if cols & (1 << j) != 0 || entry.is_zero() {
                    continue;
                }
                let pos = (cols & ((1 << j) - 1)).count_ones() as usize;
                let term = entry.mul(minor);
                let slot = next.entry(cols | (1 << j)).or_default();
                if (k + pos).is_multiple_of(2) {
                    *slot += &term;
                } else {
                    *slot = slot.sub(&term);
                }
            }
        }
        next.retain(|_, p| !p.is_zero());
        layer = next;
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    layer.remove(&full).unwrap_or_default()
}

/// Cramer solution `u_i = num_u[i] / shared_den`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSolution {
    pub shared_den: BoolPoly,
    pub num_u: Vec<BoolPoly>,
    pub dofs: Vec<usize>,
}

impl SymSolution {
    /// Displacements of the free DoFs at `mask`.
    pub fn displacements_mask(&self, mask: u64) -> Result<Vec<f64>, PolyError> {
        let den = self.shared_den.evaluate_mask(mask);
        if den == 0.0 {
            return Err(PolyError::SingularPoint);
        }
        Ok(self.num_u.iter().map(|p| p.evaluate_mask(mask) / den).collect())
    }
}

pub fn solve_symbolic(k: &SymStiffness, f: &[f64]) -> Result<SymSolution, SymFemError> {
    let n = k.size();
    if f.len() != n {
        return Err(SymFemError::DimensionMismatch { expected: n, got: f.len() });
    }
    let shared_den = determinant(&k.entries);
    if shared_den.is_zero() {
        return Err(SymFemError::ZeroDeterminant);
    }
    let num_u = par::map_range(n, |i| {
        let replaced: Vec<Vec<BoolPoly>> = k
            .entries
            .iter()
            .zip(f)
            .map(|(row, &fi)| {
                let mut row = row.clone();
                row[i] = BoolPoly::constant(fi);
                row
            })
            .collect();
        determinant(&replaced)
    });
    Ok(SymSolution { shared_den, num_u, dofs: k.dofs.clone() })
}

/// Green-Lagrange stress per element, `σ_n = S_n / W` with `W = den²`.
///
/// With `Δ` the relative end displacement numerator,
/// `L² = L₀² + (2 den (d·Δ) + |Δ|²)/den²`, so `S_n = E/(2L₀²) · (2 den (d·Δ) + |Δ|²)`. The `L₀² den²`
/// parts cancel analytically and are never formed. `den` and `num_u` are
/// rescaled to unit max coefficient first; the ratio is unchanged.
pub fn stress_expressions(p: &TrussProblem, sol: &SymSolution) -> Result<Vec<RationalExpr>, SymFemError> {
    let scale = 1.0 / sol.shared_den.max_abs_coeff()?;
    let den = sol.shared_den.scale(scale);
    let mut nodal = vec![[BoolPoly::zero(), BoolPoly::zero()]; p.nodes.len()];
    for (num, &d) in sol.num_u.iter().zip(&sol.dofs) {
        nodal[d / 2][d % 2] = num.scale(scale);
    }
    let w = den.square();
    let e_mod = p.material.youngs_modulus;
    let stresses = par::map_range(p.elements.len(), |n| {
        let (s, t) = p.element_nodes(n);
        let (dx, dy) = p.element_vector(n);
        let delta_x = nodal[t][0].sub(&nodal[s][0]);
        let delta_y = nodal[t][1].sub(&nodal[s][1]);
        let along = delta_x.scale(dx).add(&delta_y.scale(dy));
        let stretch = den.mul(&along).scale(2.0).add(&delta_x.square()).add(&delta_y.square());
        stretch.scale(e_mod / (2.0 * (dx * dx + dy * dy)))
    });
    stresses
        .into_iter()
        .map(|s| RationalExpr::new(s, w.clone()).map_err(SymFemError::from))
        .collect()
}

/// Symbolic pipeline up to the stress expressions.
#[derive(Debug, Clone)]
pub struct SymbolicTruss {
    pub stiffness: SymStiffness,
    pub solution: SymSolution,
    pub stresses: Vec<RationalExpr>,
}

impl SymbolicTruss {
    pub fn build(p: &TrussProblem) -> Result<Self, SymFemError> {
        p.validate()?;
        let stiffness = assemble(p)?;
        let solution = solve_symbolic(&stiffness, &p.free_load_vector())?;
        let stresses = stress_expressions(p, &solution)?;
        Ok(SymbolicTruss { stiffness, solution, stresses })
    }

    /// Stresses (MPa) at `mask`.
    pub fn stresses_mask(&self, mask: u64) -> Result<Vec<f64>, PolyError> {
        self.stresses.iter().map(|s| s.evaluate_mask(mask)).collect()
    }
}

/// Stresses must share the denominator `W`; returns `(W, [S_n])`.
fn shared_stress_parts(stresses: &[RationalExpr]) -> Result<(&BoolPoly, Vec<&BoolPoly>), SymFemError> {
    let first = stresses.first().ok_or(SymFemError::DimensionMismatch { expected: 1, got: 0 })?;
    if stresses.iter().any(|s| s.den() != first.den()) {
        return Err(SymFemError::Format("stress expressions do not share a denominator".into()));
    }
    Ok((first.den(), stresses.iter().map(RationalExpr::num).collect()))
}

/// `Σ_n (σ_lim² W² − S_n²)²`, the numerator shared by both objectives.
fn limit_gap_numerator(sigma_limit: f64, w: &BoolPoly, nums: &[&BoolPoly]) -> BoolPoly {
    let target = w.square().scale(sigma_limit * sigma_limit);
    let parts = par::map_slice(nums, |s| target.sub(&s.square()).square());
    parts.iter().fold(BoolPoly::zero(), |acc, p| acc.add(p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveFractional {
    pub expr: RationalExpr,
    /// Factor the raw numerator and denominator were divided by.
    pub normalization_scale: f64,
}

/// `F = Σ_n (σ_lim² − σ_n²)²` as `[Σ_n (σ_lim² W² − S_n²)²] / W⁴`.
pub fn objective_fractional(p: &TrussProblem, stresses: &[RationalExpr]) -> Result<ObjectiveFractional, SymFemError> {
    let (w, nums) = shared_stress_parts(stresses)?;
    let num = limit_gap_numerator(p.material.sigma_limit, w, &nums);
    let den = w.square().square();
    let mut expr = RationalExpr::new(num, den)?;
    let normalization_scale = expr.normalize();
    Ok(ObjectiveFractional { expr, normalization_scale })
}

/// The reserve-factor-difference objective: the fractional numerator alone,
/// with the denominator dropped. Its minimizer is not the true optimum in
/// general; it is kept to reproduce that negative result.
#[derive(Debug, Clone, PartialEq)]
pub struct FlawedObjective {
    pub poly: BoolPoly,
    pub normalization_scale: f64,
}

pub fn objective_nonfractional_flawed(
    p: &TrussProblem,
    stresses: &[RationalExpr],
) -> Result<FlawedObjective, SymFemError> {
    let (w, nums) = shared_stress_parts(stresses)?;
    let raw = limit_gap_numerator(p.material.sigma_limit, w, &nums);
    let normalization_scale = raw.max_abs_coeff()?;
    Ok(FlawedObjective { poly: raw.scale(1.0 / normalization_scale), normalization_scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Fractional,
    Flawed,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Fractional => "fractional",
            ObjectiveKind::Flawed => "flawed",
        })
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fractional" => Ok(ObjectiveKind::Fractional),
            "flawed" => Ok(ObjectiveKind::Flawed),
            other => Err(format!("unknown objective kind {other:?} (expected fractional or flawed)")),
        }
    }
}

/// Either objective, evaluable pointwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Fractional(ObjectiveFractional),
    Flawed(FlawedObjective),
}

impl Objective {
    /// Builds the requested objective from scratch.
    pub fn build(p: &TrussProblem, kind: ObjectiveKind) -> Result<Objective, SymFemError> {
        let sym = SymbolicTruss::build(p)?;
        Ok(match kind {
            ObjectiveKind::Fractional => Objective::Fractional(objective_fractional(p, &sym.stresses)?),
            ObjectiveKind::Flawed => Objective::Flawed(objective_nonfractional_flawed(p, &sym.stresses)?),
        })
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self {
            Objective::Fractional(_) => ObjectiveKind::Fractional,
            Objective::Flawed(_) => ObjectiveKind::Flawed,
        }
    }

    /// Numerator (or the polynomial itself for the flawed kind).
    pub fn numerator(&self) -> &BoolPoly {
        match self {
            Objective::Fractional(o) => o.expr.num(),
            Objective::Flawed(o) => &o.poly,
        }
    }

    pub fn denominator(&self) -> Option<&BoolPoly> {
        match self {
            Objective::Fractional(o) => Some(o.expr.den()),
            Objective::Flawed(_) => None,
        }
    }

    pub fn normalization_scale(&self) -> f64 {
        match self {
            Objective::Fractional(o) => o.normalization_scale,
            Objective::Flawed(o) => o.normalization_scale,
        }
    }

    pub fn evaluate_mask(&self, mask: u64) -> Result<f64, PolyError> {
        match self {
            Objective::Fractional(o) => o.expr.evaluate_mask(mask),
            Objective::Flawed(o) => Ok(o.poly.evaluate_mask(mask)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveHeader {
    pub problem: String,
    pub num_vars: usize,
    pub kind: ObjectiveKind,
    pub normalization_scale: f64,
}

/// Text export: a JSON header line, then `[numerator]` and `[denominator]`
/// sections (or a single `[polynomial]`) in the polynomial text format.
pub fn objective_to_text(problem: &str, num_vars: usize, obj: &Objective) -> String {
    let header = ObjectiveHeader {
        problem: problem.to_string(),
        num_vars,
        kind: obj.kind(),
        normalization_scale: obj.normalization_scale(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    match obj {
        Objective::Fractional(o) => {
            out.push_str("[numerator]\n");
            out.push_str(&o.expr.num().to_text());
            out.push_str("[denominator]\n");
            out.push_str(&o.expr.den().to_text());
        }
        Objective::Flawed(o) => {
            out.push_str("[polynomial]\n");
            out.push_str(&o.poly.to_text());
        }
    }
    out
}

/// Splits `[name]`-delimited sections into polynomials.
pub fn parse_sections(text: &str) -> Result<BTreeMap<String, BoolPoly>, SymFemError> {
    let mut sections: BTreeMap<String, String> = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if sections.contains_key(name) {
                return Err(SymFemError::Format(format!("duplicate section [{name}]")));
            }
            sections.insert(name.to_string(), String::new());
            current = Some(name.to_string());
        } else if !trimmed.is_empty() {
            let name = current
                .as_ref()
                .ok_or_else(|| SymFemError::Format(format!("term outside a section: {trimmed:?}")))?;
            let body = sections.get_mut(name).expect("section exists");
            body.push_str(trimmed);
            body.push('\n');
        }
    }
    sections
        .into_iter()
        .map(|(name, body)| Ok((name, BoolPoly::from_text(&body)?)))
        .collect()
}

pub fn objective_from_text(text: &str) -> Result<(ObjectiveHeader, Objective), SymFemError> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let header: ObjectiveHeader =
        serde_json::from_str(first).map_err(|e| SymFemError::Format(format!("header: {e}")))?;
    let mut sections = parse_sections(rest)?;
    let mut take = |name: &str| {
        sections
            .remove(name)
            .ok_or_else(|| SymFemError::Format(format!("missing section [{name}]")))
    };
    let obj = match header.kind {
        ObjectiveKind::Fractional => {
            let num = take("numerator")?;
            let den = take("denominator")?;
            Objective::Fractional(ObjectiveFractional {
                expr: RationalExpr::new(num, den)?,
                normalization_scale: header.normalization_scale,
            })
        }
        ObjectiveKind::Flawed => Objective::Flawed(FlawedObjective {
            poly: take("polynomial")?,
            normalization_scale: header.normalization_scale,
        }),
    };
    if let Some(extra) = sections.keys().next() {
        return Err(SymFemError::Format(format!("unexpected section [{extra}]")));
    }
    let span = obj.numerator().var_span().max(obj.denominator().map_or(0, BoolPoly::var_span));
    if span > header.num_vars {
        return Err(SymFemError::Format(format!("polynomial uses v{} but num_vars is {}", span - 1, header.num_vars)));
    }
    Ok((header, obj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truss::{builtin_problem, numeric_fem_solve, Assignment, BuiltinProblem};

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            (a - b).abs() / b.abs()
        }
    }

    #[test]
    fn horizontal_unit_bar() {
        let k = element_stiffness([0.0, 0.0], [1.0, 0.0], &[1.0], &[0], 1.0, "E").unwrap();
        assert_eq!(k[0][0], BoolPoly::linear(0, 1.0));
        assert_eq!(k[0][2], BoolPoly::linear(0, -1.0));
        assert!(k[1][1].is_zero());
        assert!(k.iter().flatten().all(|p| p.degree() <= 1));
    }

    #[test]
    fn diagonal_bar_has_equal_blocks() {
        let k = element_stiffness([0.0, 0.0], [1.0, 1.0], &[1.0], &[0], 1.0, "E").unwrap();
        let mag = k[0][0].coeff(Monomial::var(0)).abs();
        for row in &k {
            for p in row {
                assert_eq!(p.coeff(Monomial::var(0)).abs(), mag);
            }
        }
    }

    #[test]
    fn element_matches_numeric_mid_choice() {
        let k = element_stiffness([0.0, 0.0], [300.0, 400.0], &[10.0, 20.0, 30.0], &[0, 1, 2], 7.0, "E").unwrap();
        let (c, s, len) = (0.6, 0.8, 500.0);
        let a = [-c, -s, c, s];
        for i in 0..4 {
            for j in 0..4 {
                let expected = 7.0 * 20.0 / len * a[i] * a[j];
                assert!((k[i][j].evaluate_mask(0b010) - expected).abs() <= 1e-12 * expected.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn zero_length_element() {
        assert!(matches!(
            element_stiffness([1.0, 1.0], [1.0, 1.0], &[1.0], &[0], 1.0, "E9"),
            Err(SymFemError::ZeroLength(id)) if id == "E9"
        ));
    }

    #[test]
    fn assembled_sizes_and_symmetry() {
        for (name, size) in [("two_truss", 2), ("three_truss", 2), ("four_truss", 4)] {
            let k = assemble(&builtin_problem(name).unwrap()).unwrap();
            assert_eq!(k.size(), size, "{name}");
            assert!(k.is_symmetric());
        }
    }

    #[test]
    fn assembled_matches_numeric() {
        for b in BuiltinProblem::ALL {
            let p = b.problem();
            let k = assemble(&p).unwrap();
            for a in p.layout().valid_assignments() {
                let (kn, _) = crate::truss::assemble_numeric(&p, &p.areas_from_assignment(&a).unwrap());
                let ks = k.evaluate_mask(a.mask());
                for i in 0..k.size() {
                    for j in 0..k.size() {
                        assert!(rel(ks[i][j], kn[(i, j)]) <= 1e-12, "{b} {a} ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_cramer() {
        let k = SymStiffness { entries: vec![vec![BoolPoly::linear(0, 2.0)]], dofs: vec![0] };
        let sol = solve_symbolic(&k, &[4.0]).unwrap();
        assert_eq!(sol.shared_den, BoolPoly::linear(0, 2.0));
        assert_eq!(sol.num_u, vec![BoolPoly::constant(4.0)]);
    }

    #[test]
    fn zero_determinant_is_an_error() {
        let k = SymStiffness { entries: vec![vec![BoolPoly::zero()]], dofs: vec![0] };
        assert!(matches!(solve_symbolic(&k, &[1.0]), Err(SymFemError::ZeroDeterminant)));
        let k = SymStiffness { entries: vec![vec![BoolPoly::linear(0, 1.0)]], dofs: vec![0] };
        assert!(matches!(solve_symbolic(&k, &[1.0, 2.0]), Err(SymFemError::DimensionMismatch { .. })));
    }

    #[test]
    fn determinant_of_constant_matrices() {
        let m = |rows: &[&[f64]]| -> Vec<Vec<BoolPoly>> {
            rows.iter().map(|r| r.iter().map(|&c| BoolPoly::constant(c)).collect()).collect()
        };
        assert_eq!(determinant(&m(&[&[1.0, 2.0], &[3.0, 4.0]])).constant_term(), -2.0);
        let d = determinant(&m(&[&[2.0, 0.0, 1.0], &[1.0, 3.0, 2.0], &[1.0, 1.0, 1.0]]));
        assert_eq!(d.constant_term(), 2.0 * (3.0 - 2.0) - 0.0 + 1.0 * (1.0 - 3.0));
        assert_eq!(determinant(&[]).constant_term(), 1.0);
    }

    #[test]
    fn determinant_matches_numeric_pointwise() {
        // A symbolic 4x4 matrix with entries a + b x_i evaluated on every
        // assignment of 6 variables.
        let entries: Vec<Vec<BoolPoly>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        let a = ((i * 7 + j * 3) % 5) as f64 - 2.0;
                        let b = ((i + 2 * j) % 3) as f64 + 0.5;
                        BoolPoly::constant(a).add(&BoolPoly::linear((i + j) % 6, b))
                    })
                    .collect()
            })
            .collect();
        let det = determinant(&entries);
        for mask in 0..64u64 {
            let num = nalgebra::DMatrix::from_fn(4, 4, |i, j| entries[i][j].evaluate_mask(mask));
            let expected = num.determinant();
            assert!((det.evaluate_mask(mask) - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{mask}");
        }
    }

    #[test]
    fn shared_den_vanishes_with_no_area() {
        let p = builtin_problem("two_truss").unwrap();
        let sol = solve_symbolic(&assemble(&p).unwrap(), &p.free_load_vector()).unwrap();
        assert_eq!(sol.shared_den.evaluate_mask(0), 0.0);
    }

    #[test]
    fn displacements_and_stresses_match_numeric() {
        for b in BuiltinProblem::ALL {
            let p = b.problem();
            let sym = SymbolicTruss::build(&p).unwrap();
            for a in p.layout().valid_assignments() {
                let fem = numeric_fem_solve(&p, &p.areas_from_assignment(&a).unwrap()).unwrap();
                assert!(sym.solution.shared_den.evaluate_mask(a.mask()) > 0.0);
                let u = sym.solution.displacements_mask(a.mask()).unwrap();
                for (x, y) in u.iter().zip(&fem.displacements) {
                    assert!(rel(*x, *y) <= 1e-6, "{b} {a}: {x} vs {y}");
                }
                for (x, y) in sym.stresses_mask(a.mask()).unwrap().iter().zip(&fem.stresses) {
                    assert!(rel(*x, *y) <= 1e-6, "{b} {a}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn zero_load_gives_zero_stress() {
        let mut p = builtin_problem("four_truss").unwrap();
        for l in &mut p.loads {
            l.fy = 0.0;
        }
        let sym = SymbolicTruss::build(&p).unwrap();
        for s in &sym.stresses {
            assert!(s.num().is_zero());
        }
    }

    #[test]
    fn two_truss_sigma1_near_statics() {
        let p = builtin_problem("two_truss").unwrap();
        let sym = SymbolicTruss::build(&p).unwrap();
        let s = sym.stresses_mask(Assignment::from_bits(&[0, 0, 1, 1, 0, 0]).mask()).unwrap();
        assert!(rel(s[0], 70.0 * 2f64.sqrt()) < 1e-3, "{}", s[0]);
    }

    #[test]
    fn sigma1_matches_reference_expression() {
        let text = include_str!("../fixtures/two_truss_sigma1_reference.txt");
        let sections = parse_sections(text).unwrap();
        let reference = RationalExpr::new(sections["numerator"].clone(), sections["denominator"].clone()).unwrap();
        assert_eq!(reference.den().max_abs_coeff().unwrap(), 8.1602493e32);
        let p = builtin_problem("two_truss").unwrap();
        let sym = SymbolicTruss::build(&p).unwrap();
        let mask = Assignment::from_bits(&[0, 1, 0, 0, 1, 0]).mask();
        let ours = sym.stresses[0].evaluate_mask(mask).unwrap();
        let theirs = reference.evaluate_mask(mask).unwrap();
        assert!(rel(ours, theirs) < 1e-4, "{ours} vs {theirs}");
    }

    #[test]
    fn stresses_share_a_plain_denominator() {
        let sym = SymbolicTruss::build(&builtin_problem("three_truss").unwrap()).unwrap();
        let w = sym.stresses[0].den();
        assert!(sym.stresses.iter().all(|s| s.den() == w));
        let den = &sym.solution.shared_den;
        assert_eq!(*w, den.scale(1.0 / den.max_abs_coeff().unwrap()).square());
    }

    fn argmin(p: &TrussProblem, obj: &Objective) -> usize {
        let layout = p.layout();
        let mut best = (f64::INFINITY, 0);
        for a in layout.valid_assignments() {
            let v = obj.evaluate_mask(a.mask()).unwrap();
            if v < best.0 {
                best = (v, layout.solution_index(&a).unwrap());
            }
        }
        best.1
    }

    #[test]
    fn fractional_argmins() {
        for (b, want) in [(BuiltinProblem::TwoTruss, 7), (BuiltinProblem::ThreeTruss, 21), (BuiltinProblem::FourTruss, 7)] {
            let p = b.problem();
            let obj = Objective::build(&p, ObjectiveKind::Fractional).unwrap();
            assert_eq!(argmin(&p, &obj), want, "{b}");
            for a in p.layout().valid_assignments() {
                assert!(obj.evaluate_mask(a.mask()).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn flawed_argmins() {
        for b in [BuiltinProblem::ThreeTruss, BuiltinProblem::FourTruss] {
            let p = b.problem();
            let obj = Objective::build(&p, ObjectiveKind::Flawed).unwrap();
            assert!(obj.denominator().is_none());
            assert_eq!(argmin(&p, &obj), 1, "{b}");
        }
    }

    // With a shared denominator the flawed objective is the true one
    // weighted by W⁴.
    #[test]
    fn flawed_is_weighted_fractional() {
        let p = builtin_problem("two_truss").unwrap();
        let sym = SymbolicTruss::build(&p).unwrap();
        let flawed = objective_nonfractional_flawed(&p, &sym.stresses).unwrap();
        for a in p.layout().valid_assignments() {
            let m = a.mask();
            let w = sym.stresses[0].den().evaluate_mask(m);
            let direct: f64 = sym.stresses_mask(m).unwrap().iter().map(|s| (1e4 - s * s).powi(2)).sum();
            let got = flawed.poly.evaluate_mask(m) * flawed.normalization_scale;
            assert!(rel(got, w.powi(4) * direct) < 1e-9, "{a}");
        }
    }

    #[test]
    fn fractional_matches_direct_formula() {
        let p = builtin_problem("three_truss").unwrap();
        let obj = Objective::build(&p, ObjectiveKind::Fractional).unwrap();
        for a in p.layout().valid_assignments() {
            let fem = numeric_fem_solve(&p, &p.areas_from_assignment(&a).unwrap()).unwrap();
            let direct: f64 = fem.stresses.iter().map(|s| (100.0f64.powi(2) - s * s).powi(2)).sum();
            assert!(rel(obj.evaluate_mask(a.mask()).unwrap(), direct) < 1e-6, "{a}");
        }
    }

    #[test]
    fn objective_text_round_trip() {
        let p = builtin_problem("two_truss").unwrap();
        for kind in [ObjectiveKind::Fractional, ObjectiveKind::Flawed] {
            let obj = Objective::build(&p, kind).unwrap();
            let text = objective_to_text("two_truss", 6, &obj);
            let (header, back) = objective_from_text(&text).unwrap();
            assert_eq!(header.kind, kind);
            assert_eq!(header.num_vars, 6);
            assert_eq!(back, obj);
        }
    }

    #[test]
    fn objective_text_errors() {
        let header = r#"{"problem":"x","num_vars":2,"kind":"fractional","normalization_scale":1.0}"#;
        assert!(objective_from_text(&format!("{header}\n[numerator]\n1e0\tv0\n")).is_err());
        assert!(objective_from_text(&format!("{header}\n[numerator]\n1e0\tv5\n[denominator]\n1e0\t1\n")).is_err());
        assert!(objective_from_text("not json\n").is_err());
        assert!(objective_from_text(&format!("{header}\n1e0\tv0\n")).is_err());
    }
}
