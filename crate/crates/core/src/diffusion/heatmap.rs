//! Similarity between learned inverse embeddings and forward embeddings.

use super::denoiser::Denoiser;
use super::DiffusionError;
use crate::action::Action;
use crate::metrics::cosine;

/// Row order of the heatmap. Column `j` holds the inverse of row `j`'s
/// action, so the expected pairing `(a, a^-1)` is the main diagonal.
pub const HEATMAP_ACTIONS: [Action; 4] = Action::MOVING;

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub rows: Vec<Action>,
    pub cols: Vec<Action>,
    /// `values[i][j] = cos(E_inv[rows[i]], E[cols[j]])`.
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    pub fn diagonal_mean(&self) -> f64 {
        let n = self.rows.len();
        (0..n).map(|i| self.values[i][i]).sum::<f64>() / n as f64
    }

    pub fn off_diagonal_mean(&self) -> f64 {
        let n = self.rows.len();
        let mut sum = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    sum += v;
                }
            }
        }
        sum / (n * n - n) as f64
    }

    /// Column action with the highest similarity for each row.
    pub fn row_argmax(&self) -> Vec<Action> {
        self.values
            .iter()
            .map(|row| {
                let mut best = 0;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                self.cols[best]
            })
            .collect()
    }

    /// Rows whose argmax column is the true inverse.
    pub fn inverse_hits(&self) -> usize {
        self.rows
            .iter()
            .zip(self.row_argmax())
            .filter(|(a, b)| a.inverse() == *b)
            .count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("action");
        for c in &self.cols {
            out.push_str(&format!(",{c:?}"));
        }
        out.push('\n');
        for (a, row) in self.rows.iter().zip(&self.values) {
            out.push_str(&format!("{a:?}"));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn embedding_heatmap(model: &Denoiser) -> Result<Heatmap, DiffusionError> {
    let rows = HEATMAP_ACTIONS.to_vec();
    let cols: Vec<Action> = rows.iter().map(|a| a.inverse()).collect();
    let values = rows
        .iter()
        .map(|&a| {
            let inv = model
                .inverse_embedding(a)
                .ok_or(DiffusionError::MissingInverseEmbeddings)?;
            Ok(cols.iter().map(|&b| cosine(inv, model.embedding(b))).collect())
        })
        .collect::<Result<Vec<Vec<f64>>, DiffusionError>>()?;
    Ok(Heatmap { rows, cols, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::DenoiserConfig;
    use crate::rng::seeded;

    #[test]
    fn permuted_forward_table_gives_unit_diagonal() {
        let mut m = Denoiser::new(DenoiserConfig { hidden: 4, ..Default::default() }, &mut seeded(1)).unwrap();
        assert_eq!(embedding_heatmap(&m), Err(DiffusionError::MissingInverseEmbeddings));
        let table: Vec<f64> = Action::ALL
            .iter()
            .flat_map(|a| m.embedding(a.inverse()).to_vec())
            .collect();
        m.set_inverse_embeddings(Some(table)).unwrap();
        let h = embedding_heatmap(&m).unwrap();
        assert_eq!(h.values.len(), 4);
        for i in 0..4 {
            assert_eq!(h.values[i][i], 1.0);
        }
        assert!(h.values.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(h.inverse_hits(), 4);
        assert!(h.diagonal_mean() > h.off_diagonal_mean());
        assert!(h.to_csv().starts_with("action,TurnRight,TurnLeft,Backward,Forward\n"));
    }
}
