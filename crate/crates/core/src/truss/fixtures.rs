//! The three benchmark trusses. Loads are given in kN by the source tables
//! and stored here in N.

use std::fmt;
use std::str::FromStr;

use super::{Element, Load, Material, Node, Support, TrussError, TrussProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinProblem {
    TwoTruss,
    ThreeTruss,
    FourTruss,
}

impl BuiltinProblem {
    pub const ALL: [BuiltinProblem; 3] = [Self::TwoTruss, Self::ThreeTruss, Self::FourTruss];

    pub const fn name(self) -> &'static str {
        match self {
            Self::TwoTruss => "two_truss",
            Self::ThreeTruss => "three_truss",
            Self::FourTruss => "four_truss",
        }
    }

    pub fn problem(self) -> TrussProblem {
        match self {
            Self::TwoTruss => build(
                &[("N1", 0.0, 0.0), ("N2", 1000.0, -1000.0), ("N3", 0.0, -1000.0)],
                &[("E1", "N1", "N2", [800.0, 900.0, 1000.0]), ("E2", "N2", "N3", [1400.0, 1500.0, 1600.0])],
                ("N2", 0.0, -70.0),
                &["N1", "N3"],
            ),
            Self::ThreeTruss => build(
                &[("N1", -500.0, 500.0), ("N2", -500.0, -500.0), ("N3", 500.0, 100.0), ("N4", 0.0, 0.0)],
                &[
                    ("E1", "N1", "N4", [400.0, 500.0, 600.0]),
                    ("E2", "N2", "N4", [950.0, 1050.0, 1150.0]),
                    ("E3", "N3", "N4", [700.0, 800.0, 900.0]),
                ],
                ("N4", 0.0, -100.0),
                &["N1", "N2", "N3"],
            ),
            Self::FourTruss => build(
                &[("N1", 0.0, 500.0), ("N2", 0.0, -500.0), ("N3", 500.0, 0.0), ("N4", 1000.0, 0.0)],
                &[
                    ("E1", "N1", "N3", [2400.0, 2500.0, 2600.0]),
                    ("E2", "N2", "N3", [2400.0, 2500.0, 2600.0]),
                    ("E3", "N1", "N4", [1900.0, 2000.0, 2100.0]),
                    ("E4", "N3", "N4", [2400.0, 2500.0, 2600.0]),
                ],
                ("N4", 0.0, -100.0),
                &["N1", "N2"],
            ),
        }
    }
}

impl fmt::Display for BuiltinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinProblem {
    type Err = TrussError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|p| p.name() == normalized)
            .ok_or_else(|| TrussError::UnknownProblem(s.to_string()))
    }
}

/// Looks a benchmark up by name (`two_truss`, `three_truss`, `four_truss`).
pub fn builtin_problem(name: &str) -> Result<TrussProblem, TrussError> {
    name.parse::<BuiltinProblem>().map(BuiltinProblem::problem)
}

fn build(
    nodes: &[(&str, f64, f64)],
    elements: &[(&str, &str, &str, [f64; 3])],
    load_kn: (&str, f64, f64),
    fixed: &[&str],
) -> TrussProblem {
    TrussProblem {
        nodes: nodes.iter().map(|&(id, x, y)| Node { id: id.into(), x, y }).collect(),
        elements: elements
            .iter()
            .map(|&(id, s, e, choices)| Element {
                id: id.into(),
                start: s.into(),
                end: e.into(),
                choices: choices.to_vec(),
            })
            .collect(),
        material: Material { youngs_modulus: 200_000.0, sigma_limit: 100.0 },
        loads: vec![Load { node: load_kn.0.into(), fx: load_kn.1 * 1000.0, fy: load_kn.2 * 1000.0 }],
        supports: fixed
            .iter()
            .map(|&n| Support { node: n.into(), fix_x: true, fix_y: true })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_truss_matches_table() {
        let p = builtin_problem("two_truss").unwrap();
        assert_eq!(p.nodes.len(), 3);
        assert_eq!((p.nodes[1].x, p.nodes[1].y), (1000.0, -1000.0));
        assert_eq!(p.loads, vec![Load { node: "N2".into(), fx: 0.0, fy: -70_000.0 }]);
        p.validate().unwrap();
    }

    #[test]
    fn three_truss_choices() {
        let p = builtin_problem("three_truss").unwrap();
        assert_eq!(p.elements[0].choices, vec![400.0, 500.0, 600.0]);
        p.validate().unwrap();
    }

    #[test]
    fn four_truss_supports() {
        let p = builtin_problem("four_truss").unwrap();
        assert_eq!(p.elements.len(), 4);
        let fixed: Vec<_> = p.supports.iter().filter(|s| s.fix_x && s.fix_y).map(|s| s.node.as_str()).collect();
        assert_eq!(fixed, ["N1", "N2"]);
        p.validate().unwrap();
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(builtin_problem("five_truss"), Err(TrussError::UnknownProblem(_))));
        assert_eq!("Two-Truss".parse::<BuiltinProblem>().unwrap(), BuiltinProblem::TwoTruss);
    }

    #[test]
    fn shipped_fixture_files_are_current() {
        for p in BuiltinProblem::ALL {
            let path = format!("{}/fixtures/{}.json", env!("CARGO_MANIFEST_DIR"), p.name());
            let text = std::fs::read_to_string(&path).unwrap();
            assert_eq!(text, p.problem().to_json(), "{path} is stale");
        }
    }
}
