use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TrussError;
use crate::boolpoly::assignment_mask;

/// Solution vector `[q_{1,1}, q_{1,2}, …, q_{N,C}]`, element-major and
/// choice-minor (small to large).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    /// From 0/1 integers; anything nonzero counts as set.
    pub fn from_bits(bits: &[u8]) -> Self {
        Assignment(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mask(&self) -> u64 {
        assignment_mask(&self.0)
    }

    /// Bracketed list form, e.g. `[0,0,1,1,0,0]`.
    pub fn to_list_string(&self) -> String {
        let inner: Vec<&str> = self.0.iter().map(|&b| if b { "1" } else { "0" }).collect();
        format!("[{}]", inner.join(","))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assignment({self})")
    }
}

impl FromStr for Assignment {
    type Err = String;

    /// Accepts a plain bitstring (`001100`) or the bracketed list form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits: Result<Vec<bool>, String> = s
            .chars()
            .filter(|c| !matches!(c, '[' | ']' | ',' | ' '))
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("unexpected character {other:?} in bitstring")),
            })
            .collect();
        bits.map(Assignment)
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shape of the solution vector: `elements` blocks of `choices` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub elements: usize,
    pub choices: usize,
}

impl Layout {
    pub const fn new(elements: usize, choices: usize) -> Self {
        Layout { elements, choices }
    }

    pub const fn num_vars(&self) -> usize {
        self.elements * self.choices
    }

    /// Variable index of choice `c` of element `n` (both 0-based).
    pub const fn var(&self, n: usize, c: usize) -> usize {
        n * self.choices + c
    }

    /// Number of valid assignments, `C^N`.
    pub fn num_valid(&self) -> usize {
        self.choices.pow(self.elements as u32)
    }

    pub(crate) fn check_len(&self, a: &Assignment) -> Result<(), TrussError> {
        if a.len() != self.num_vars() {
            return Err(TrussError::LengthMismatch { expected: self.num_vars(), got: a.len() });
        }
        Ok(())
    }

    /// True iff every element block has exactly one bit set.
    pub fn is_valid(&self, a: &Assignment) -> Result<bool, TrussError> {
        self.check_len(a)?;
        Ok(a.bits().chunks(self.choices).all(|block| block.iter().filter(|&&b| b).count() == 1))
    }

    /// Mask form of [`Self::is_valid`]; the caller guarantees the length.
    pub fn is_valid_mask(&self, mask: u64) -> bool {
        let block = (1u64 << self.choices) - 1;
        (0..self.elements).all(|n| ((mask >> (n * self.choices)) & block).count_ones() == 1)
    }

    /// 1-based mixed-radix index of a valid assignment, element-major with
    /// the first element most significant.
    pub fn solution_index(&self, a: &Assignment) -> Result<usize, TrussError> {
        if !self.is_valid(a)? {
            return Err(TrussError::InvalidAssignment(a.to_list_string()));
        }
        Ok(1 + a
            .bits()
            .chunks(self.choices)
            .map(|block| block.iter().position(|&b| b).expect("valid block"))
            .fold(0, |acc, choice| acc * self.choices + choice))
    }

    /// Inverse of [`Self::solution_index`].
    pub fn index_to_solution(&self, index: usize) -> Result<Assignment, TrussError> {
        let count = self.num_valid();
        if index == 0 || index > count {
            return Err(TrussError::IndexOutOfRange { index, count });
        }
        let mut rest = index - 1;
        let mut bits = vec![false; self.num_vars()];
        for n in (0..self.elements).rev() {
            bits[self.var(n, rest % self.choices)] = true;
            rest /= self.choices;
        }
        Ok(Assignment(bits))
    }

    /// Every valid assignment in solution-index order.
    pub fn valid_assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        (1..=self.num_valid()).map(|i| self.index_to_solution(i).expect("index in range"))
    }
}
