use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::boolpoly::{BoolPoly, VarId};

/// `E(x) = offset + Σ linear_i x_i + Σ_{i<j} quadratic_ij x_i x_j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuboModel {
    pub num_vars: usize,
    pub var_labels: Vec<String>,
    pub linear: BTreeMap<VarId, f64>,
    pub quadratic: BTreeMap<(VarId, VarId), f64>,
    pub offset: f64,
    /// Auxiliary variable → the product of two variables it stands for.
    pub aux_registry: BTreeMap<VarId, (VarId, VarId)>,
}

impl QuboModel {
    pub fn new(num_vars: usize) -> Self {
        QuboModel { num_vars, var_labels: (0..num_vars).map(|i| format!("x{i}")).collect(), ..Default::default() }
    }

    /// Variables that are not auxiliaries. Auxiliaries are always numbered
    /// after the originals.
    pub fn num_original(&self) -> usize {
        self.num_vars - self.aux_registry.len()
    }

    pub fn add_linear(&mut self, i: VarId, c: f64) {
        *self.linear.entry(i).or_insert(0.0) += c;
    }

    /// Adds `c x_i x_j`; `i == j` folds into the linear term.
    pub fn add_quadratic(&mut self, i: VarId, j: VarId, c: f64) {
        if i == j {
            self.add_linear(i, c);
        } else {
            *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
        }
    }

    /// Drops exact-zero coefficients.
    pub fn prune(&mut self) {
        self.linear.retain(|_, c| *c != 0.0);
        self.quadratic.retain(|_, c| *c != 0.0);
    }

    pub fn energy(&self, x: &[bool]) -> f64 {
        let lin: f64 = self.linear.iter().filter(|(&i, _)| x[i]).map(|(_, c)| c).sum();
        let quad: f64 = self.quadratic.iter().filter(|(&(i, j), _)| x[i] && x[j]).map(|(_, c)| c).sum();
        self.offset + lin + quad
    }

    /// Dense linear terms and symmetric adjacency lists.
    pub fn to_dense(&self) -> (Vec<f64>, Vec<Vec<(VarId, f64)>>) {
        let mut h = vec![0.0; self.num_vars];
        for (&i, &c) in &self.linear {
            h[i] += c;
        }
        let mut adj = vec![Vec::new(); self.num_vars];
        for (&(i, j), &c) in &self.quadratic {
            adj[i].push((j, c));
            adj[j].push((i, c));
        }
        (h, adj)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.linear.values().chain(self.quadratic.values()).fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("QUBO serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuboJson {
    num_vars: usize,
    var_labels: Vec<String>,
    linear: serde_json::Map<String, serde_json::Value>,
    quadratic: serde_json::Map<String, serde_json::Value>,
    offset: f64,
    #[serde(default)]
    aux_registry: serde_json::Map<String, serde_json::Value>,
}

impl Serialize for QuboModel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let num = |c: f64| serde_json::Value::from(c);
        QuboJson {
            num_vars: self.num_vars,
            var_labels: self.var_labels.clone(),
            linear: self.linear.iter().map(|(i, &c)| (i.to_string(), num(c))).collect(),
            quadratic: self.quadratic.iter().map(|((i, j), &c)| (format!("{i},{j}"), num(c))).collect(),
            offset: self.offset,
            aux_registry: self
                .aux_registry
                .iter()
                .map(|(y, &(i, j))| (y.to_string(), serde_json::json!([i, j])))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuboModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = QuboJson::deserialize(d)?;
        let index = |k: &str| k.trim().parse::<VarId>().map_err(|_| D::Error::custom(format!("bad variable key {k:?}")));
        let coeff = |v: &serde_json::Value| v.as_f64().ok_or_else(|| D::Error::custom(format!("bad coefficient {v}")));
        let in_range = |i: VarId| {
            if i < raw.num_vars {
                Ok(i)
            } else {
                Err(D::Error::custom(format!("variable {i} out of range (num_vars {})", raw.num_vars)))
            }
        };
        if raw.var_labels.len() != raw.num_vars {
            return Err(D::Error::custom("var_labels length differs from num_vars"));
        }
        let mut q = QuboModel { num_vars: raw.num_vars, var_labels: raw.var_labels.clone(), offset: raw.offset, ..Default::default() };
        for (k, v) in &raw.linear {
            q.add_linear(in_range(index(k)?)?, coeff(v)?);
        }
        for (k, v) in &raw.quadratic {
            let (a, b) = k.split_once(',').ok_or_else(|| D::Error::custom(format!("bad pair key {k:?}")))?;
            let (i, j) = (in_range(index(a)?)?, in_range(index(b)?)?);
            if i >= j {
                return Err(D::Error::custom(format!("pair key {k:?} must satisfy i < j")));
            }
            q.add_quadratic(i, j, coeff(v)?);
        }
        for (k, v) in &raw.aux_registry {
            let pair: (VarId, VarId) = serde_json::from_value(v.clone()).map_err(D::Error::custom)?;
            q.aux_registry.insert(in_range(index(k)?)?, (in_range(pair.0)?, in_range(pair.1)?));
        }
        Ok(q)
    }
}

/// Spin model `E(s) = offset + Σ h_i s_i + Σ_{i<j} J_ij s_i s_j`, `s ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IsingModel {
    pub h: BTreeMap<VarId, f64>,
    pub j: BTreeMap<(VarId, VarId), f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn energy(&self, spins: &[i8]) -> f64 {
        let s = |i: VarId| f64::from(spins[i]);
        self.offset
            + self.h.iter().map(|(&i, c)| c * s(i)).sum::<f64>()
            + self.j.iter().map(|(&(i, k), c)| c * s(i) * s(k)).sum::<f64>()
    }
}

/// Substitutes `x = (s + 1) / 2`.
pub fn qubo_to_ising(q: &QuboModel) -> IsingModel {
    let mut m = IsingModel { offset: q.offset, ..Default::default() };
    for (&i, &a) in &q.linear {
        *m.h.entry(i).or_insert(0.0) += a / 2.0;
        m.offset += a / 2.0;
    }
    for (&(i, k), &b) in &q.quadratic {
        m.j.insert((i, k), b / 4.0);
        *m.h.entry(i).or_insert(0.0) += b / 4.0;
        *m.h.entry(k).or_insert(0.0) += b / 4.0;
        m.offset += b / 4.0;
    }
    m.h.retain(|_, c| *c != 0.0);
    m
}

/// [`quadratize_with_vars`] with the original variable count taken from the
/// polynomial itself.
pub fn quadratize(p: &BoolPoly, strength: f64) -> QuboModel {
    quadratize_with_vars(p, strength, p.var_span())
}

/// Degree reduction by Rosenberg substitution. The pair occurring in the
/// most monomials of degree ≥ 3 is replaced by a fresh `y`, penalized by
/// `strength (x_i x_j − 2 x_i y − 2 x_j y + 3y)`, until every monomial has
/// degree ≤ 2. Ties go to the smallest pair.
pub fn quadratize_with_vars(p: &BoolPoly, strength: f64, num_original: usize) -> QuboModel {
    assert!(p.var_span() <= num_original, "polynomial uses variables beyond num_original");
    let mut terms: BTreeMap<Vec<VarId>, f64> = p.terms().map(|(m, c)| (m.vars().collect(), c)).collect();
    let mut registry = BTreeMap::new();
    let mut next = num_original;
    loop {
        let mut counts: BTreeMap<(VarId, VarId), usize> = BTreeMap::new();
        for vars in terms.keys().filter(|v| v.len() >= 3) {
            for (a, &i) in vars.iter().enumerate() {
                for &j in &vars[a + 1..] {
                    *counts.entry((i, j)).or_insert(0) += 1;
                }
            }
        }
        // BTreeMap iterates in ascending pair order, so `max_by_key` would pick
        // the largest tied pair; compare explicitly instead.
        let Some((&(i, j), _)) = counts.iter().fold(None, |best: Option<(&(VarId, VarId), &usize)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        }) else {
            break;
        };
        let y = next;
        next += 1;
        registry.insert(y, (i, j));
        let mut rewritten = BTreeMap::new();
        for (vars, c) in std::mem::take(&mut terms) {
            let key = if vars.len() >= 3 && vars.contains(&i) && vars.contains(&j) {
                let mut v: Vec<VarId> = vars.into_iter().filter(|&v| v != i && v != j).collect();
                v.push(y);
                v.sort_unstable();
                v
            } else {
                vars
            };
            *rewritten.entry(key).or_insert(0.0) += c;
        }
        for (key, c) in [(vec![i, j], strength), (vec![i, y], -2.0 * strength), (vec![j, y], -2.0 * strength), (vec![y], 3.0 * strength)] {
            *rewritten.entry(key).or_insert(0.0) += c;
        }
        terms = rewritten;
    }
    let mut q = QuboModel::new(next);
    for (k, y) in registry.keys().enumerate() {
        q.var_labels[*y] = format!("aux{}", k + 1);
    }
    q.aux_registry = registry;
    for (vars, c) in terms {
        match vars[..] {
            [] => q.offset += c,
            [i] => q.add_linear(i, c),
            [i, j] => q.add_quadratic(i, j, c),
            _ => unreachable!("quadratization left a monomial of degree {}", vars.len()),
        }
    }
    q.prune();
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolpoly::Monomial;

    fn bits(mask: u64, n: usize) -> Vec<bool> {
        (0..n).map(|i| mask >> i & 1 == 1).collect()
    }

    #[test]
    fn quadratic_input_needs_no_auxiliaries() {
        let p = BoolPoly::from_terms([(Monomial::from_vars([0, 1]).unwrap(), 2.0), (Monomial::var(2), -1.0), (Monomial::ONE, 0.5)]);
        let q = quadratize(&p, 10.0);
        assert!(q.aux_registry.is_empty());
        assert_eq!(q.num_vars, 3);
        for mask in 0..8 {
            assert_eq!(q.energy(&bits(mask, 3)), p.evaluate_mask(mask));
        }
    }

    #[test]
    fn cubic_monomial_gets_one_auxiliary() {
        let p = BoolPoly::from_terms([(Monomial::from_vars([0, 1, 2]).unwrap(), 1.0)]);
        let q = quadratize(&p, 10.0);
        assert_eq!(q.aux_registry, BTreeMap::from([(3, (0, 1))]));
        for mask in 0..8u64 {
            let best = (0..2u64).map(|y| q.energy(&bits(mask | y << 3, 4))).fold(f64::INFINITY, f64::min);
            assert_eq!(best, p.evaluate_mask(mask), "{mask:03b}");
        }
    }

    #[test]
    fn most_frequent_pair_is_substituted_first() {
        // (1,2) appears in both quartic terms; (0,1) only in one.
        let p = BoolPoly::from_terms([
            (Monomial::from_vars([0, 1, 2, 3]).unwrap(), 1.0),
            (Monomial::from_vars([1, 2, 4]).unwrap(), -2.0),
        ]);
        let q = quadratize(&p, 10.0);
        assert_eq!(q.aux_registry[&5], (1, 2));
        assert_eq!(q.var_labels[5], "aux1");
    }

    #[test]
    fn ising_examples() {
        let mut q = QuboModel::new(1);
        q.add_linear(0, 1.0);
        let m = qubo_to_ising(&q);
        assert_eq!(m.h, BTreeMap::from([(0, 0.5)]));
        assert_eq!(m.offset, 0.5);
        assert_eq!(qubo_to_ising(&QuboModel::new(3)), IsingModel::default());
    }

    #[test]
    fn json_round_trip_and_keys() {
        let p = BoolPoly::from_terms([(Monomial::from_vars([0, 1, 2]).unwrap(), 1.5), (Monomial::var(2), -0.25)]);
        let q = quadratize(&p, 4.0);
        let text = q.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["quadratic"].get("0,1").is_some());
        assert_eq!(v["aux_registry"]["3"], serde_json::json!([0, 1]));
        assert_eq!(QuboModel::from_json(&text).unwrap(), q);
    }

    #[test]
    fn json_rejects_bad_pairs() {
        let base = |quad: &str| format!(r#"{{"num_vars":2,"var_labels":["a","b"],"linear":{{}},"quadratic":{{{quad}}},"offset":0.0}}"#);
        assert!(QuboModel::from_json(&base(r#""0,1": 1.0"#)).is_ok());
        assert!(QuboModel::from_json(&base(r#""1,0": 1.0"#)).is_err());
        assert!(QuboModel::from_json(&base(r#""0,5": 1.0"#)).is_err());
        assert!(QuboModel::from_json(&base(r#""0;1": 1.0"#)).is_err());
    }
}
