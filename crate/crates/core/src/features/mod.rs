//! Named feature containers and the four feature families.

pub mod envelope;
pub mod psycho;
pub mod spectral;

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Ordered, named real features of one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                actual: values.len(),
            });
        }
        let mut seen = HashSet::with_capacity(names.len());
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::NameCollision(n.clone()));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature `{}`", names[i])));
        }
        Ok(Self { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    /// Concatenation; fails on a name present in both.
    pub fn concat(&self, other: &FeatureVector) -> Result<FeatureVector> {
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        FeatureVector::new(names, values)
    }
}

/// Dense real matrix with row and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    row_names: Vec<String>,
    col_names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(
        row_names: Vec<String>,
        col_names: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if row_names.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: row_names.len(),
                actual: values.len(),
            });
        }
        for row in &values {
            if row.len() != col_names.len() {
                return Err(Error::DimensionMismatch {
                    expected: col_names.len(),
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature matrix".into()));
            }
        }
        Ok(Self {
            row_names,
            col_names,
            values,
        })
    }

    /// Unnamed matrix; rows `r<i>`, columns `c<j>`.
    pub fn from_rows(values: Vec<Vec<f64>>) -> Result<Self> {
        let cols = values.first().map_or(0, Vec::len);
        let row_names = (0..values.len()).map(|i| format!("r{i}")).collect();
        let col_names = (0..cols).map(|j| format!("c{j}")).collect();
        Self::new(row_names, col_names, values)
    }

    /// Stacks vectors that share one name list.
    pub fn from_vectors(row_names: Vec<String>, vectors: &[FeatureVector]) -> Result<Self> {
        let col_names = vectors
            .first()
            .map(|v| v.names().to_vec())
            .unwrap_or_default();
        for v in vectors {
            if v.names() != col_names.as_slice() {
                return Err(Error::DimensionMismatch {
                    expected: col_names.len(),
                    actual: v.len(),
                });
            }
        }
        let values = vectors.iter().map(|v| v.values().to_vec()).collect();
        Self::new(row_names, col_names, values)
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn row_names(&self) -> &[String] {
        &self.row_names
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn row_vector(&self, i: usize) -> FeatureVector {
        FeatureVector {
            names: self.col_names.clone(),
            values: self.values[i].clone(),
        }
    }

    /// Rows selected by index, names kept.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            row_names: idx.iter().map(|&i| self.row_names[i].clone()).collect(),
            col_names: self.col_names.clone(),
            values: idx.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_names() {
        let r = FeatureVector::new(vec!["a".into(), "a".into()], vec![1.0, 2.0]);
        assert!(matches!(r, Err(Error::NameCollision(_))));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(FeatureVector::new(vec!["a".into()], vec![f64::NAN]).is_err());
        assert!(FeatureMatrix::from_rows(vec![vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn ragged_matrix_rejected() {
        assert!(FeatureMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
