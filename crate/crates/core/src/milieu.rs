//! The milieu matrix `M`.
//!
//! Row `i` lists the entities that influence entity `i` (its milieu `m_i`).
//! Rows are stored sparsely with ascending source indices, so a link with a
//! zero weight is still a link.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    /// Entries are 0/1: presence of a relationship only.
    Boolean,
    /// Entries carry a real weight.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub source: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilieuMatrix {
    kind: LinkKind,
    rows: Vec<Vec<Link>>,
}

impl MilieuMatrix {
    /// A `p`×`p` matrix with no links.
    pub fn empty(kind: LinkKind, p: usize) -> Self {
        Self { kind, rows: vec![Vec::new(); p] }
    }

    /// Boolean matrix from per-row source lists.
    pub fn from_boolean_rows(rows: Vec<Vec<usize>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|sources| sources.into_iter().map(|source| Link { source, weight: 1.0 }).collect())
            .collect();
        Self::from_rows(LinkKind::Boolean, rows)
    }

    /// Build from rows of links. Each row is sorted; duplicates, indices
    /// `>= p`, non-unit Boolean weights and non-finite weights are rejected.
    pub fn from_rows(kind: LinkKind, mut rows: Vec<Vec<Link>>) -> Result<Self> {
        let p = rows.len();
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|l| l.source);
            for pair in row.windows(2) {
                if pair[0].source == pair[1].source {
                    return Err(Error::DimensionMismatch(format!("row {i} lists entity {} twice", pair[0].source)));
                }
            }
            for link in row.iter() {
                if link.source >= p {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i} references entity {} but p = {p}",
                        link.source
                    )));
                }
                let ok = match kind {
                    LinkKind::Boolean => link.weight == 1.0,
                    LinkKind::Weighted => link.weight.is_finite(),
                };
                if !ok {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i} has invalid {:?} entry {} for entity {}",
                        kind, link.weight, link.source
                    )));
                }
            }
        }
        Ok(Self { kind, rows })
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    /// Number of entities `p`.
    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[Link] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<Link>] {
        &self.rows
    }

    /// Dense entry `(i, j)`; zero when `j` is not in the milieu of `i`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].binary_search_by_key(&j, |l| l.source).map(|k| self.rows[i][k].weight).unwrap_or(0.0)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search_by_key(&j, |l| l.source).is_ok()
    }

    /// Milieu size `q_i` of every entity.
    pub fn milieu_sizes(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn link_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Overwrite the weight of an existing link.
    pub fn set_weight(&mut self, i: usize, j: usize, weight: f64) -> Result<()> {
        if self.kind == LinkKind::Boolean {
            return Err(Error::IncompatibleUpdate("boolean milieu entries carry no weight".into()));
        }
        let k = self.rows[i]
            .binary_search_by_key(&j, |l| l.source)
            .map_err(|_| Error::DimensionMismatch(format!("entity {j} is not in the milieu of {i}")))?;
        self.rows[i][k].weight = weight;
        Ok(())
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [Link] {
        &mut self.rows[i]
    }
}
