//! Recorded executions and their canonical text form.
//!
//! One state per line. Boolean states are written as a string of `0`/`1`
//! characters; real states as space-separated decimals with nine places.

use crate::error::{Error, Result};
use crate::state::{EntityTuple, StateSet};

/// Number of decimal places used for every real number written as text.
pub const DECIMAL_PLACES: usize = 9;

pub fn format_real(value: f64) -> String {
    let s = format!("{value:.9}");
    // "-0.000000000" and "0.000000000" must render identically.
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Render one state in the canonical line format.
pub fn format_line(state: &EntityTuple) -> String {
    match state.set() {
        StateSet::Boolean => state.states().iter().map(|&v| if v == 0.0 { '0' } else { '1' }).collect(),
        StateSet::Real => state.states().iter().map(|&v| format_real(v)).collect::<Vec<_>>().join(" "),
    }
}

/// Parse one line written by [`format_line`].
pub fn parse_line(set: StateSet, line: &str) -> Result<EntityTuple> {
    match set {
        StateSet::Boolean => {
            let bits = line
                .chars()
                .enumerate()
                .map(|(position, character)| match character {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    _ => Err(Error::BadCharacter { position, character }),
                })
                .collect::<Result<Vec<_>>>()?;
            EntityTuple::from_bits(&bits)
        }
        StateSet::Real => {
            let values = line
                .split_whitespace()
                .enumerate()
                .map(|(i, tok)| {
                    tok.parse::<f64>()
                        .map_err(|_| Error::DimensionMismatch(format!("value {i} ({tok:?}) is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            EntityTuple::new(StateSet::Real, values)
        }
    }
}

/// Snapshots of a run; index is the time step, snapshot 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    snapshots: Vec<EntityTuple>,
}

impl Trajectory {
    pub fn new(snapshots: Vec<EntityTuple>) -> Self {
        Self { snapshots }
    }

    pub fn snapshots(&self) -> &[EntityTuple] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> Option<&EntityTuple> {
        self.snapshots.last()
    }

    pub fn lines(&self) -> Vec<String> {
        self.snapshots.iter().map(format_line).collect()
    }

    /// Canonical text: one line per snapshot, each terminated by `\n`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in self.lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Parse canonical text, requiring every line to have `p` entities.
    pub fn parse(set: StateSet, p: usize, text: &str) -> Result<Self> {
        let snapshots = text
            .lines()
            .map(|line| {
                let state = parse_line(set, line)?;
                if state.len() != p {
                    return Err(Error::DimensionMismatch(format!("line has {} entities, expected {p}", state.len())));
                }
                Ok(state)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { snapshots })
    }
}
