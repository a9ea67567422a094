use rand::seq::index;

use crate::error::{Error, Result};
use crate::seeding::{rng_for, Purpose};

/// Binary state features; `v̂(s, w) = wᵀ x(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    rows: Vec<Vec<f64>>,
    zeros: Vec<f64>,
}

/// Number of states in the Collision task, one feature row each.
const NUM_ROWS: usize = 8;

/// Draws every row independently and uniformly among the `C(dim, ones)`
/// binary vectors with exactly `ones` ones. Rows may repeat across states.
pub fn generate_feature_map(seed: u64, dim: usize, ones: usize) -> Result<FeatureMap> {
    if ones == 0 || ones >= dim {
        return Err(Error::config(format!(
            "feature map needs 0 < ones < dim, got ones={ones}, dim={dim}"
        )));
    }
    let mut rng = rng_for(seed, Purpose::Features);
    let rows = (0..NUM_ROWS)
        .map(|_| {
            let mut row = vec![0.0; dim];
            for i in index::sample(&mut rng, dim, ones) {
                row[i] = 1.0;
            }
            row
        })
        .collect();
    Ok(FeatureMap {
        rows,
        zeros: vec![0.0; dim],
    })
}

impl FeatureMap {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::config("feature map has no rows"))?;
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::config("feature rows must share a nonzero length"));
        }
        if rows.iter().flatten().any(|&x| x != 0.0 && x != 1.0) {
            return Err(Error::config("feature entries must be 0 or 1"));
        }
        Ok(FeatureMap {
            rows,
            zeros: vec![0.0; dim],
        })
    }

    /// One-hot (tabular) features for `n` states.
    pub fn tabular(n: usize) -> Self {
        let rows = (0..n)
            .map(|s| {
                let mut row = vec![0.0; n];
                row[s] = 1.0;
                row
            })
            .collect();
        FeatureMap {
            rows,
            zeros: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.zeros.len()
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn features(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    /// Features of `state`, or the zero vector for the terminal pseudo-state.
    pub fn features_or_zero(&self, state: Option<usize>) -> &[f64] {
        match state {
            Some(s) => &self.rows[s],
            None => &self.zeros,
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Numerical rank of the feature matrix.
    pub fn rank(&self) -> usize {
        let m = nalgebra::DMatrix::from_fn(self.num_states(), self.dim(), |i, j| self.rows[i][j]);
        m.rank(1e-9)
    }

    /// `state,f0,f1,...` with 1-based states.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state");
        for j in 0..self.dim() {
            out.push_str(&format!(",f{j}"));
        }
        out.push('\n');
        for (s, row) in self.rows.iter().enumerate() {
            out.push_str(&(s + 1).to_string());
            for x in row {
                out.push_str(if *x == 1.0 { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::config(format!("feature csv: {e}")))?;
            let state: usize = super::parse_field(&record, 0)?;
            if state != i + 1 {
                return Err(Error::config("feature csv: states out of order"));
            }
            let row = (1..record.len())
                .map(|j| super::parse_field(&record, j))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        FeatureMap::from_rows(rows)
    }
}
