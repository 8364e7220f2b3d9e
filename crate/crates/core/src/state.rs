//! Entity states and state sets.

use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance used when comparing real-valued states.
pub const DEFAULT_REAL_TOLERANCE: f64 = 1e-9;

/// The set `s` of values an entity may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateSet {
    /// `{0, 1}`.
    Boolean,
    /// Finite real numbers.
    Real,
}

impl StateSet {
    pub fn contains(self, value: f64) -> bool {
        match self {
            StateSet::Boolean => value == 0.0 || value == 1.0,
            StateSet::Real => value.is_finite(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateSet::Boolean => "boolean",
            StateSet::Real => "real",
        }
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered states of the `p` entities of a system at one time step.
///
/// Boolean states are stored as `0.0`/`1.0` so both state sets share one
/// representation; construction rejects anything outside the declared set.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityTuple {
    set: StateSet,
    states: Vec<f64>,
}

impl EntityTuple {
    pub fn new(set: StateSet, states: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::DimensionMismatch("an entity tuple needs at least one entity".into()));
        }
        if let Some((index, &value)) = states.iter().enumerate().find(|(_, v)| !set.contains(**v)) {
            return Err(Error::StateDomainViolation { index, value, set: set.name() });
        }
        Ok(Self { set, states })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        Self::new(StateSet::Boolean, bits.iter().map(|&b| f64::from(b)).collect())
    }

    pub fn zeros(set: StateSet, p: usize) -> Result<Self> {
        Self::new(set, vec![0.0; p])
    }

    pub fn set(&self) -> StateSet {
        self.set
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn get(&self, index: usize) -> f64 {
        self.states[index]
    }

    /// States as bits. Only meaningful for Boolean tuples; real states are
    /// thresholded at zero (nonzero is 1).
    pub fn bits(&self) -> Vec<u8> {
        self.states.iter().map(|&v| u8::from(v != 0.0)).collect()
    }

    /// Copy of this tuple rotated right by `k` positions.
    pub fn rotated(&self, k: usize) -> Self {
        let mut states = self.states.clone();
        let n = states.len();
        states.rotate_right(k % n);
        Self { set: self.set, states }
    }

    pub(crate) fn from_parts_unchecked(set: StateSet, states: Vec<f64>) -> Self {
        Self { set, states }
    }
}

/// Fraction of positions at which `a` and `b` agree, using
/// [`DEFAULT_REAL_TOLERANCE`] for real-valued states.
pub fn match_score(a: &EntityTuple, b: &EntityTuple) -> Result<f64> {
    match_score_with_tolerance(a, b, DEFAULT_REAL_TOLERANCE)
}

/// Fraction of positions at which `a` and `b` agree. Boolean tuples are
/// compared exactly; if either side is real, positions agree when they differ
/// by at most `tolerance`.
pub fn match_score_with_tolerance(a: &EntityTuple, b: &EntityTuple, tolerance: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("cannot compare tuples of length {} and {}", a.len(), b.len())));
    }
    let exact = a.set == StateSet::Boolean && b.set == StateSet::Boolean;
    let equal = a
        .states
        .iter()
        .zip(&b.states)
        .filter(|(x, y)| if exact { x == y } else { (*x - *y).abs() <= tolerance })
        .count();
    Ok(equal as f64 / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_values_outside_set() {
        let err = EntityTuple::new(StateSet::Boolean, vec![0.0, 0.5]).unwrap_err();
        assert!(matches!(err, Error::StateDomainViolation { index: 1, .. }));
        assert!(EntityTuple::new(StateSet::Real, vec![f64::NAN]).is_err());
        assert!(EntityTuple::new(StateSet::Real, vec![f64::INFINITY]).is_err());
        assert!(EntityTuple::new(StateSet::Real, vec![]).is_err());
    }

    #[test]
    fn match_counts_equal_positions() {
        let a = EntityTuple::from_bits(&[1; 31]).unwrap();
        let mut bits = [1u8; 31];
        bits[0] = 0;
        bits[10] = 0;
        bits[30] = 0;
        let b = EntityTuple::from_bits(&bits).unwrap();
        assert_eq!(match_score(&a, &b).unwrap(), 28.0 / 31.0);
        assert!((match_score(&a, &b).unwrap() - 0.903).abs() < 1e-3);
    }

    #[test]
    fn match_complement_is_zero() {
        let a = EntityTuple::from_bits(&[1, 0, 1, 1]).unwrap();
        let b = EntityTuple::from_bits(&[0, 1, 0, 0]).unwrap();
        assert_eq!(match_score(&a, &b).unwrap(), 0.0);
        assert_eq!(match_score(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn match_real_uses_tolerance() {
        let a = EntityTuple::new(StateSet::Real, vec![0.1, 0.2]).unwrap();
        let b = EntityTuple::new(StateSet::Real, vec![0.1 + 5e-10, 0.2 + 1e-6]).unwrap();
        assert_eq!(match_score(&a, &b).unwrap(), 0.5);
        assert_eq!(match_score_with_tolerance(&a, &b, 1e-5).unwrap(), 1.0);
    }

    #[test]
    fn match_length_mismatch() {
        let a = EntityTuple::from_bits(&[1, 0]).unwrap();
        let b = EntityTuple::from_bits(&[1]).unwrap();
        assert!(matches!(match_score(&a, &b), Err(Error::DimensionMismatch(_))));
    }
}
