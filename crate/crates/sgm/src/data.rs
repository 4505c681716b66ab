//! Rectangular categorical data matrices.

use crate::error::{Error, Result};
use crate::strata::OutcomeSpace;

/// Class labels are 1-based: entry `i` gives the class of observation `i`.
pub type LabelVector = Vec<usize>;

/// An `n x d` matrix of category indices with column names and per-column
/// cardinalities. Every stored value is below its column's cardinality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataMatrix {
    names: Vec<String>,
    cards: Vec<usize>,
    values: Vec<u8>,
    rows: usize,
}

impl DataMatrix {
    pub fn new(names: Vec<String>, cards: Vec<usize>, rows: Vec<Vec<u8>>) -> Result<Self> {
        if names.len() != cards.len() {
            return Err(Error::InvalidArgument(format!(
                "{} column names for {} cardinalities",
                names.len(),
                cards.len()
            )));
        }
        OutcomeSpace::new(cards.clone())?;
        let mut m = DataMatrix {
            names,
            cards,
            values: Vec::new(),
            rows: 0,
        };
        for row in rows {
            m.push_row(&row)?;
        }
        Ok(m)
    }

    /// An empty matrix with binary columns named `x1..xd`.
    pub fn empty_binary(d: usize) -> Self {
        DataMatrix {
            names: (1..=d).map(|i| format!("x{i}")).collect(),
            cards: vec![2; d],
            values: Vec::new(),
            rows: 0,
        }
    }

    pub fn push_row(&mut self, row: &[u8]) -> Result<()> {
        if row.len() != self.cards.len() {
            return Err(Error::DataValidation(format!(
                "row has {} values, expected {}",
                row.len(),
                self.cards.len()
            )));
        }
        for (c, (&v, &k)) in row.iter().zip(&self.cards).enumerate() {
            if v as usize >= k {
                return Err(Error::DataValidation(format!(
                    "value {v} in column '{}' exceeds cardinality {k}",
                    self.names[c]
                )));
            }
        }
        self.values.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cards.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.cards.len() + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        let d = self.cards.len();
        &self.values[row * d..(row + 1) * d]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[u8]> {
        self.values
            .chunks_exact(self.cards.len().max(1))
            .take(self.rows)
    }

    pub fn outcome_space(&self) -> OutcomeSpace {
        OutcomeSpace::new(self.cards.clone()).expect("cards validated at construction")
    }

    /// New matrix keeping only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<DataMatrix> {
        for &c in cols {
            if c >= self.n_cols() {
                return Err(Error::InvalidArgument(format!("column {c} out of range")));
            }
        }
        let names = cols.iter().map(|&c| self.names[c].clone()).collect();
        let cards = cols.iter().map(|&c| self.cards[c]).collect();
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(DataMatrix {
            names,
            cards,
            values,
            rows: self.rows,
        })
    }

    /// New matrix keeping only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<DataMatrix> {
        let mut out = DataMatrix {
            names: self.names.clone(),
            cards: self.cards.clone(),
            values: Vec::with_capacity(rows.len() * self.n_cols()),
            rows: 0,
        };
        for &r in rows {
            if r >= self.rows {
                return Err(Error::InvalidArgument(format!("row {r} out of range")));
            }
            out.values.extend_from_slice(self.row(r));
            out.rows += 1;
        }
        Ok(out)
    }

    /// Vertical concatenation; column names and cardinalities must agree.
    pub fn concat(&self, other: &DataMatrix) -> Result<DataMatrix> {
        if self.names != other.names || self.cards != other.cards {
            return Err(Error::InvalidArgument(
                "cannot concatenate matrices with different columns".into(),
            ));
        }
        let mut out = self.clone();
        out.values.extend_from_slice(&other.values);
        out.rows += other.rows;
        Ok(out)
    }
}

/// Validate a label vector against a matrix: one 1-based label per row, and
/// every class in `1..=k` non-empty when `require_all` is set. Returns the
/// number of classes.
pub fn validate_labels(labels: &[usize], rows: usize, require_all: bool) -> Result<usize> {
    if labels.len() != rows {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {rows} rows",
            labels.len()
        )));
    }
    let k = labels.iter().copied().max().unwrap_or(0);
    if labels.iter().any(|&l| l == 0) {
        return Err(Error::InvalidArgument(
            "class labels are 1-based; found 0".into(),
        ));
    }
    if require_all {
        for class in 1..=k {
            if !labels.contains(&class) {
                return Err(Error::InvalidArgument(format!(
                    "class {class} has zero training observations"
                )));
            }
        }
    }
    Ok(k)
}
