//! Elementary (two-state, radius-one) cellular automata on a ring.

use std::fmt;

use crate::error::{Error, Result};
use crate::milieu::MilieuMatrix;
use crate::state::{EntityTuple, StateSet};
use crate::system::{modulate, MetastableSystem, Schedule, SystemSpec, UpdateFunction};
use crate::trajectory::format_line;

/// Wolfram rule number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleNumber(u8);

impl RuleNumber {
    pub const fn new(value: u8) -> Self {
        Self(value)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// All 256 rules in ascending order.
    pub fn all() -> impl Iterator<Item = RuleNumber> {
        (0..=255u8).map(RuleNumber)
    }
}

impl TryFrom<i64> for RuleNumber {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        u8::try_from(value).map(RuleNumber).map_err(|_| Error::OutOfRange(value))
    }
}

impl fmt::Display for RuleNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Truth table of an elementary update function.
///
/// Entry `4*left + 2*center + right` holds the output for that neighbourhood,
/// which is bit `4*left + 2*center + right` of the rule number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleTable {
    outputs: [u8; 8],
}

impl RuleTable {
    pub fn from_outputs(outputs: [u8; 8]) -> Result<Self> {
        if let Some(&bad) = outputs.iter().find(|&&b| b > 1) {
            return Err(Error::IncompatibleUpdate(format!("rule table entries must be 0 or 1, got {bad}")));
        }
        Ok(Self { outputs })
    }

    /// Outputs indexed by neighbourhood `4l + 2c + r`.
    pub fn outputs(&self) -> [u8; 8] {
        self.outputs
    }

    pub fn output(&self, left: u8, center: u8, right: u8) -> u8 {
        self.outputs[usize::from(4 * left + 2 * center + right)]
    }

    /// The rule number this table encodes.
    pub fn rule_number(&self) -> RuleNumber {
        RuleNumber(self.outputs.iter().enumerate().fold(0u8, |acc, (b, &out)| acc | (out << b)))
    }
}

pub fn rule_table(n: RuleNumber) -> RuleTable {
    let mut outputs = [0u8; 8];
    for (b, out) in outputs.iter_mut().enumerate() {
        *out = (n.0 >> b) & 1;
    }
    RuleTable { outputs }
}

pub fn ca_update(left: u8, center: u8, right: u8, table: &RuleTable) -> u8 {
    table.output(left, center, right)
}

/// Boolean `p`×`p` ring milieu: row `i` holds `i-1`, `i`, `i+1` (mod `p`).
pub fn ring_milieu(p: usize) -> Result<MilieuMatrix> {
    if p < 3 {
        return Err(Error::TooFewEntities(p));
    }
    MilieuMatrix::from_boolean_rows((0..p).map(|i| vec![(i + p - 1) % p, i, (i + 1) % p]).collect())
}

/// Positional `(left, center, right)` inputs of cell `i`, read off its milieu
/// row. The row must contain `i` and at most two other cells. With two
/// others, the left neighbour is the one reached first walking backwards
/// around the ring. Fewer others repeat (a self-only row gives `(i, i, i)`).
pub fn neighborhood(milieu: &MilieuMatrix, i: usize) -> Result<[usize; 3]> {
    let p = milieu.dimension();
    let row = milieu.row(i);
    if !milieu.contains(i, i) {
        return Err(Error::IncompatibleUpdate(format!("cell {i} is not in its own milieu")));
    }
    let others: Vec<usize> = row.iter().map(|l| l.source).filter(|&j| j != i).collect();
    match others.as_slice() {
        [] => Ok([i, i, i]),
        [j] => Ok([*j, i, *j]),
        [a, b] => {
            let back = |j: usize| (i + p - j) % p;
            if back(*a) <= back(*b) {
                Ok([*a, i, *b])
            } else {
                Ok([*b, i, *a])
            }
        }
        _ => Err(Error::IncompatibleUpdate(format!(
            "cell {i} has {} neighbours; an elementary rule reads at most two",
            others.len()
        ))),
    }
}

/// Parse a string of `0`/`1` characters; position `k` is entity `k`.
pub fn parse_state(text: &str) -> Result<EntityTuple> {
    if text.is_empty() {
        return Err(Error::DimensionMismatch("state string is empty".into()));
    }
    crate::trajectory::parse_line(StateSet::Boolean, text)
}

pub fn format_state(e: &EntityTuple) -> String {
    format_line(e)
}

/// Ring automaton with the given rule, started from `initial`.
pub fn ca_system(rule: RuleNumber, initial: EntityTuple) -> Result<MetastableSystem> {
    let p = initial.len();
    modulate(
        SystemSpec::new(StateSet::Boolean, p, Schedule::SynchronousAll),
        UpdateFunction::RuleTable(rule_table(rule)),
        ring_milieu(p)?,
        initial,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_110_table() {
        let t = rule_table(RuleNumber::new(110));
        let expected = [
            ((0, 0, 0), 0),
            ((0, 0, 1), 1),
            ((0, 1, 0), 1),
            ((1, 0, 0), 0),
            ((0, 1, 1), 1),
            ((1, 0, 1), 1),
            ((1, 1, 0), 1),
            ((1, 1, 1), 0),
        ];
        for ((l, c, r), out) in expected {
            assert_eq!(ca_update(l, c, r, &t), out, "phi({l},{c},{r})");
        }
        assert_eq!(t.rule_number(), RuleNumber::new(110));
    }

    #[test]
    fn extreme_rules() {
        assert_eq!(rule_table(RuleNumber::new(0)).outputs(), [0; 8]);
        assert_eq!(rule_table(RuleNumber::new(255)).outputs(), [1; 8]);
    }

    #[test]
    fn rule_204_returns_center() {
        let t = rule_table(RuleNumber::new(204));
        for n in 0..8u8 {
            let (l, c, r) = (n >> 2 & 1, n >> 1 & 1, n & 1);
            assert_eq!(ca_update(l, c, r, &t), c);
        }
    }

    #[test]
    fn rule_numbers_are_range_checked() {
        assert_eq!(RuleNumber::try_from(255).unwrap().value(), 255);
        assert_eq!(RuleNumber::try_from(256), Err(Error::OutOfRange(256)));
        assert_eq!(RuleNumber::try_from(-1), Err(Error::OutOfRange(-1)));
    }

    #[test]
    fn ring_rows() {
        let m = ring_milieu(31).unwrap();
        let row0: Vec<usize> = m.row(0).iter().map(|l| l.source).collect();
        assert_eq!(row0, vec![0, 1, 30]);
        assert_eq!(neighborhood(&m, 0).unwrap(), [30, 0, 1]);
        assert_eq!(neighborhood(&m, 30).unwrap(), [29, 30, 0]);
        assert!(m.milieu_sizes().iter().all(|&q| q == 3));

        let m3 = ring_milieu(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(m3.contains(i, j));
            }
        }
        assert_eq!(neighborhood(&m3, 0).unwrap(), [2, 0, 1]);
        assert_eq!(ring_milieu(2), Err(Error::TooFewEntities(2)));
    }

    #[test]
    fn parse_reference_states() {
        let e = parse_state("0000000000000001000000000000000").unwrap();
        assert_eq!(e.len(), 31);
        assert_eq!(e.bits().iter().position(|&b| b == 1), Some(15));
        assert_eq!(e.bits().iter().filter(|&&b| b == 1).count(), 1);
        let t = parse_state("1101011001111101000000000000000").unwrap();
        assert_eq!(format_state(&t), "1101011001111101000000000000000");
        assert!(matches!(parse_state("01x"), Err(Error::BadCharacter { position: 2, character: 'x' })));
        assert!(parse_state("").is_err());
    }

    #[test]
    fn neighborhood_rejects_wide_rows() {
        let m = MilieuMatrix::from_boolean_rows(vec![vec![0, 1, 2, 3], vec![1], vec![2], vec![3]]).unwrap();
        assert!(neighborhood(&m, 0).is_err());
        let no_self = MilieuMatrix::from_boolean_rows(vec![vec![1], vec![1]]).unwrap();
        assert!(neighborhood(&no_self, 0).is_err());
    }
}
