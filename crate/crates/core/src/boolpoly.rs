//! Multilinear (pseudo-boolean) polynomials.
//!
//! Every variable is boolean, so `x * x == x` and a monomial is just a set of
//! variables. Monomials are stored as 64-bit masks, which caps a [`BoolPoly`]
//! at 64 distinct variables. The truss benchmarks need at most twelve; the
//! quadratization pass keeps its auxiliaries in its own term list.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use thiserror::Error;

/// Index of one boolean variable. Dense `0..V` within one problem.
pub type VarId = usize;

/// Largest number of distinct variables a [`BoolPoly`] can reference.
pub const MAX_VARS: usize = 64;

/// Products whose term-pair count crosses this fraction of the dense buffer
/// are accumulated densely instead of through the ordered map.
const DENSE_MAX_BITS: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("assignment does not cover variable v{0}")]
    MissingVariable(VarId),
    #[error("polynomial has no terms")]
    EmptyPolynomial,
    #[error("variable v{0} exceeds the {MAX_VARS}-variable limit")]
    VariableOutOfRange(VarId),
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("denominator vanishes at the evaluation point")]
    SingularPoint,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A set of variables, i.e. a product of distinct boolean variables.
///
/// The empty set is the constant monomial `1`. Ordering is by degree first,
/// then lexicographically on the sorted variable list, which fixes the
/// canonical term order used by serialization.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Monomial(u64);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    /// Single-variable monomial. Panics if `v >= MAX_VARS`.
    pub fn var(v: VarId) -> Self {
        assert!(v < MAX_VARS, "variable v{v} exceeds the {MAX_VARS}-variable limit");
        Monomial(1 << v)
    }

    /// Builds a monomial from a list of variables; repeats collapse.
    pub fn from_vars<I: IntoIterator<Item = VarId>>(vars: I) -> Result<Self, PolyError> {
        let mut mask = 0u64;
        for v in vars {
            if v >= MAX_VARS {
                return Err(PolyError::VariableOutOfRange(v));
            }
            mask |= 1 << v;
        }
        Ok(Monomial(mask))
    }

    pub const fn from_mask(mask: u64) -> Self {
        Monomial(mask)
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub const fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_constant(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, v: VarId) -> bool {
        v < MAX_VARS && self.0 & (1 << v) != 0
    }

    /// Product of two monomials (set union, since `x * x = x`).
    pub const fn union(self, other: Monomial) -> Monomial {
        Monomial(self.0 | other.0)
    }

    /// Whether every variable of the monomial is set in `assignment_mask`.
    pub const fn is_satisfied_by(self, assignment_mask: u64) -> bool {
        self.0 & !assignment_mask == 0
    }

    /// Variables in increasing order.
    pub fn vars(self) -> impl Iterator<Item = VarId> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let v = rest.trailing_zeros() as VarId;
                rest &= rest - 1;
                Some(v)
            }
        })
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal if self.0 != other.0 => {
                // Equal degree: the lowest differing variable belongs to the
                // lexicographically smaller sorted list.
                let first_diff = (self.0 ^ other.0).trailing_zeros();
                if self.0 & (1 << first_diff) != 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            ord => ord,
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return f.write_str("1");
        }
        for (i, v) in self.vars().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "v{v}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Multilinear polynomial with real coefficients.
///
/// Zero coefficients are never stored.
#[derive(Clone, Default, PartialEq)]
pub struct BoolPoly {
    terms: BTreeMap<Monomial, f64>,
}

impl BoolPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([(Monomial::ONE, c)])
    }

    /// The polynomial `c * v`.
    pub fn linear(v: VarId, c: f64) -> Self {
        Self::from_terms([(Monomial::var(v), c)])
    }

    /// Sums the given terms; coefficients of equal monomials are merged.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(m).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored (nonzero) terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (Monomial, f64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn coeff(&self, m: Monomial) -> f64 {
        self.terms.get(&m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(Monomial::ONE)
    }

    /// Highest monomial degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().next_back().map_or(0, |m| m.degree())
    }

    /// Union of all variables referenced.
    pub fn support(&self) -> Monomial {
        Monomial(self.terms.keys().fold(0, |acc, m| acc | m.0))
    }

    /// One past the highest variable index referenced.
    pub fn var_span(&self) -> usize {
        let s = self.support().0;
        (u64::BITS - s.leading_zeros()) as usize
    }

    pub fn add(&self, other: &BoolPoly) -> BoolPoly {
        let mut out = self.clone();
        out += other;
        out
    }

    pub fn sub(&self, other: &BoolPoly) -> BoolPoly {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, -c);
        }
        out
    }

    pub fn scale(&self, factor: f64) -> BoolPoly {
        BoolPoly::from_terms(self.terms().map(|(m, c)| (m, c * factor)))
    }

    /// Applies `f` to every coefficient; results equal to zero are dropped.
    pub fn map_coeffs<F: FnMut(f64) -> f64>(&self, mut f: F) -> BoolPoly {
        BoolPoly::from_terms(self.terms().map(|(m, c)| (m, f(c))))
    }

    /// Product with idempotent reduction (`x * x = x`).
    pub fn mul(&self, other: &BoolPoly) -> BoolPoly {
        if self.is_zero() || other.is_zero() {
            return BoolPoly::zero();
        }
        let bits = self.var_span().max(other.var_span()) as u32;
        let pairs = self.len().saturating_mul(other.len());
        if bits <= DENSE_MAX_BITS && pairs >= (1usize << bits) / 4 {
            self.mul_dense(other, bits)
        } else {
            let mut out = BTreeMap::new();
            for (&ma, &ca) in &self.terms {
                for (&mb, &cb) in &other.terms {
                    *out.entry(ma.union(mb)).or_insert(0.0) += ca * cb;
                }
            }
            out.retain(|_, c| *c != 0.0);
            BoolPoly { terms: out }
        }
    }

    fn mul_dense(&self, other: &BoolPoly, bits: u32) -> BoolPoly {
        let mut acc = vec![0.0f64; 1usize << bits];
        for (&ma, &ca) in &self.terms {
            for (&mb, &cb) in &other.terms {
                acc[(ma.0 | mb.0) as usize] += ca * cb;
            }
        }
        let terms = acc
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0.0)
            .map(|(mask, c)| (Monomial(mask as u64), c))
            .collect();
        BoolPoly { terms }
    }

    pub fn square(&self) -> BoolPoly {
        self.mul(self)
    }

    /// Value at the assignment whose set variables are the bits of `mask`.
    pub fn evaluate_mask(&self, mask: u64) -> f64 {
        self.terms
            .iter()
            .filter(|(m, _)| m.is_satisfied_by(mask))
            .map(|(_, c)| c)
            .sum()
    }

    /// Value at a boolean assignment indexed by variable.
    pub fn evaluate(&self, assignment: &[bool]) -> Result<f64, PolyError> {
        let span = self.var_span();
        if span > assignment.len() {
            return Err(PolyError::MissingVariable(span - 1));
        }
        Ok(self.evaluate_mask(assignment_mask(assignment)))
    }

    /// Drops every monomial with more than `k` variables.
    pub fn truncate_above_order(&self, k: usize) -> BoolPoly {
        BoolPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= k)
                .map(|(&m, &c)| (m, c))
                .collect(),
        }
    }

    /// Drops every term with `|c| < eps`.
    pub fn truncate_below_magnitude(&self, eps: f64) -> BoolPoly {
        BoolPoly {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() >= eps)
                .map(|(&m, &c)| (m, c))
                .collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> Result<f64, PolyError> {
        self.terms
            .values()
            .map(|c| c.abs())
            .reduce(f64::max)
            .ok_or(PolyError::EmptyPolynomial)
    }

    /// Canonical text form: one `coeff<TAB>v_i*v_j*...` line per term, with
    /// `1` standing for the constant monomial.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (m, c) in self.terms() {
            s.push_str(&format!("{c:e}\t{m}\n"));
        }
        s
    }

    /// Parses the canonical text form. Blank lines are skipped.
    pub fn from_text(text: &str) -> Result<BoolPoly, PolyError> {
        let mut p = BoolPoly::zero();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (m, c) = parse_term(line).map_err(|message| PolyError::Parse { line: i + 1, message })?;
            p.add_term(m, c);
        }
        Ok(p)
    }
}

pub(crate) fn parse_term(line: &str) -> Result<(Monomial, f64), String> {
    let (coeff, mono) = line
        .split_once('\t')
        .ok_or_else(|| format!("expected `coeff<TAB>monomial`, got {line:?}"))?;
    let c: f64 = coeff.trim().parse().map_err(|e| format!("bad coefficient {coeff:?}: {e}"))?;
    let mono = mono.trim();
    if mono == "1" {
        return Ok((Monomial::ONE, c));
    }
    let mut vars = Vec::new();
    for tok in mono.split('*') {
        let idx = tok
            .strip_prefix('v')
            .and_then(|n| n.parse::<VarId>().ok())
            .ok_or_else(|| format!("bad variable token {tok:?}"))?;
        vars.push(idx);
    }
    let m = Monomial::from_vars(vars).map_err(|e| e.to_string())?;
    Ok((m, c))
}

/// Packs a boolean assignment into a mask. Only the first 64 entries count.
pub fn assignment_mask(assignment: &[bool]) -> u64 {
    assignment
        .iter()
        .take(MAX_VARS)
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0, |acc, (i, _)| acc | (1 << i))
}

impl fmt::Debug for BoolPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

impl AddAssign<&BoolPoly> for BoolPoly {
    fn add_assign(&mut self, rhs: &BoolPoly) {
        for (m, c) in rhs.terms() {
            self.add_term(m, c);
        }
    }
}

impl Add for &BoolPoly {
    type Output = BoolPoly;
    fn add(self, rhs: &BoolPoly) -> BoolPoly {
        BoolPoly::add(self, rhs)
    }
}

impl Sub for &BoolPoly {
    type Output = BoolPoly;
    fn sub(self, rhs: &BoolPoly) -> BoolPoly {
        BoolPoly::sub(self, rhs)
    }
}

impl Mul for &BoolPoly {
    type Output = BoolPoly;
    fn mul(self, rhs: &BoolPoly) -> BoolPoly {
        BoolPoly::mul(self, rhs)
    }
}

impl Neg for &BoolPoly {
    type Output = BoolPoly;
    fn neg(self) -> BoolPoly {
        self.scale(-1.0)
    }
}

/// Quotient of two polynomials sharing one variable space.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalExpr {
    num: BoolPoly,
    den: BoolPoly,
}

impl RationalExpr {
    pub fn new(num: BoolPoly, den: BoolPoly) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        Ok(RationalExpr { num, den })
    }

    pub fn num(&self) -> &BoolPoly {
        &self.num
    }

    pub fn den(&self) -> &BoolPoly {
        &self.den
    }

    pub fn into_parts(self) -> (BoolPoly, BoolPoly) {
        (self.num, self.den)
    }

    pub fn evaluate_mask(&self, mask: u64) -> Result<f64, PolyError> {
        let d = self.den.evaluate_mask(mask);
        if d == 0.0 {
            return Err(PolyError::SingularPoint);
        }
        Ok(self.num.evaluate_mask(mask) / d)
    }

    pub fn evaluate(&self, assignment: &[bool]) -> Result<f64, PolyError> {
        let span = self.num.var_span().max(self.den.var_span());
        if span > assignment.len() {
            return Err(PolyError::MissingVariable(span - 1));
        }
        self.evaluate_mask(assignment_mask(assignment))
    }

    /// Divides numerator and denominator by the larger of their maximum
    /// coefficient magnitudes and returns that divisor. The ratio is
    /// unchanged.
    pub fn normalize(&mut self) -> f64 {
        let scale = self
            .den
            .max_abs_coeff()
            .unwrap_or(1.0)
            .max(self.num.max_abs_coeff().unwrap_or(0.0));
        self.num = self.num.scale(1.0 / scale);
        self.den = self.den.scale(1.0 / scale);
        scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(vars: &[VarId]) -> Monomial {
        Monomial::from_vars(vars.iter().copied()).unwrap()
    }

    fn poly(terms: &[(&[VarId], f64)]) -> BoolPoly {
        BoolPoly::from_terms(terms.iter().map(|(v, c)| (mono(v), *c)))
    }

    #[test]
    fn additive_inverse_is_empty() {
        let p = poly(&[(&[], 1.0)]);
        let q = poly(&[(&[], -1.0)]);
        assert!(p.add(&q).is_zero());
    }

    #[test]
    fn add_merges_coefficients() {
        let p = poly(&[(&[0], 2.0)]);
        let q = poly(&[(&[0], 3.0), (&[1], 1.0)]);
        assert_eq!(&p + &q, poly(&[(&[0], 5.0), (&[1], 1.0)]));
    }

    #[test]
    fn mul_is_idempotent() {
        let x = poly(&[(&[0], 1.0)]);
        assert_eq!(x.mul(&x), x);
    }

    #[test]
    fn mul_distributes() {
        let p = poly(&[(&[0], 1.0), (&[], 1.0)]);
        let q = poly(&[(&[1], 1.0)]);
        assert_eq!(p.mul(&q), poly(&[(&[0, 1], 1.0), (&[1], 1.0)]));
    }

    #[test]
    fn dense_and_sparse_products_agree() {
        let p = poly(&[(&[0], 1.5), (&[1, 2], -2.0), (&[], 0.25), (&[3], 4.0)]);
        let q = poly(&[(&[2], 3.0), (&[0, 3], 1.0), (&[], -1.0)]);
        let dense = p.mul_dense(&q, 4);
        let mut sparse = BTreeMap::new();
        for (ma, ca) in p.terms() {
            for (mb, cb) in q.terms() {
                *sparse.entry(ma.union(mb)).or_insert(0.0) += ca * cb;
            }
        }
        sparse.retain(|_, c: &mut f64| *c != 0.0);
        assert_eq!(dense.terms, sparse);
    }

    #[test]
    fn evaluate_examples() {
        let p = poly(&[(&[0, 1], 2.0), (&[], 1.0)]);
        assert_eq!(p.evaluate(&[true, true]).unwrap(), 3.0);
        assert_eq!(p.evaluate(&[true, false]).unwrap(), 1.0);
        assert_eq!(p.evaluate(&[false, false]).unwrap(), p.constant_term());
    }

    #[test]
    fn evaluate_reports_missing_variable() {
        let p = poly(&[(&[0, 3], 1.0)]);
        assert_eq!(p.evaluate(&[true, true]), Err(PolyError::MissingVariable(3)));
    }

    #[test]
    fn truncate_above_order_example() {
        let p = poly(&[(&[0, 1, 2], 5.0), (&[0], 1.0)]);
        assert_eq!(p.truncate_above_order(2), poly(&[(&[0], 1.0)]));
    }

    #[test]
    fn truncate_below_magnitude_examples() {
        let p = poly(&[(&[0], 1e-12), (&[1], 0.5)]);
        assert_eq!(p.truncate_below_magnitude(1e-8), poly(&[(&[1], 0.5)]));
        let q = poly(&[(&[0], 1e-3), (&[1], -0.5)]);
        assert_eq!(q.truncate_below_magnitude(1e-8), q);
    }

    #[test]
    fn max_abs_coeff_examples() {
        assert_eq!(poly(&[(&[0], -3.0), (&[1], 2.0)]).max_abs_coeff(), Ok(3.0));
        assert_eq!(poly(&[(&[], 7.0)]).max_abs_coeff(), Ok(7.0));
        assert_eq!(BoolPoly::zero().max_abs_coeff(), Err(PolyError::EmptyPolynomial));
    }

    #[test]
    fn canonical_order_is_degree_then_lexicographic() {
        let mut ms = [mono(&[1, 2]), mono(&[3]), mono(&[]), mono(&[0, 5]), mono(&[0, 1, 2]), mono(&[0])];
        ms.sort();
        let names: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "v0", "v3", "v0*v5", "v1*v2", "v0*v1*v2"]);
    }

    #[test]
    fn text_format() {
        let p = poly(&[(&[0, 2], -0.5), (&[], 3.0), (&[1], 1.6833582e34)]);
        let text = p.to_text();
        assert_eq!(text, "3e0\t1\n1.6833582e34\tv1\n-5e-1\tv0*v2\n");
        assert_eq!(BoolPoly::from_text(&text).unwrap(), p);
    }

    #[test]
    fn text_parse_errors_carry_line_numbers() {
        let err = BoolPoly::from_text("1e0\t1\n2.0 v0\n").unwrap_err();
        assert!(matches!(err, PolyError::Parse { line: 2, .. }));
        let err = BoolPoly::from_text("1e0\tx0\n").unwrap_err();
        assert!(matches!(err, PolyError::Parse { line: 1, .. }));
    }

    #[test]
    fn rational_rejects_zero_denominator() {
        assert_eq!(
            RationalExpr::new(BoolPoly::constant(1.0), BoolPoly::zero()),
            Err(PolyError::ZeroDenominator)
        );
    }

    #[test]
    fn rational_evaluate_and_normalize() {
        let num = poly(&[(&[0], 6.0), (&[], 2.0)]);
        let den = poly(&[(&[1], 4.0)]);
        let mut r = RationalExpr::new(num, den).unwrap();
        assert_eq!(r.evaluate(&[true, true]).unwrap(), 2.0);
        assert_eq!(r.evaluate(&[true, false]), Err(PolyError::SingularPoint));
        let scale = r.normalize();
        assert_eq!(scale, 6.0);
        assert_eq!(r.evaluate(&[true, true]).unwrap(), 2.0);
        assert_eq!(r.num().max_abs_coeff().unwrap(), 1.0);
    }
}
