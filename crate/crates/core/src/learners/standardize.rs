use serde::{Deserialize, Serialize};

/// Per-column affine map to zero mean and unit (population) variance.
/// Constant columns map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    0.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.scale[j] == 0.0
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }

    pub fn transform_all(&self, rows: &[&[f64]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transformed_columns_are_centered_and_unit_scaled() {
        let data = [vec![1.0, 5.0, 3.0], vec![2.0, 5.0, -1.0], vec![6.0, 5.0, 0.5], vec![-3.0, 5.0, 8.0]];
        let rows: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let s = Standardizer::fit(&rows);
        let out = s.transform_all(&rows);
        assert!(s.is_constant(1));
        for j in [0, 2] {
            let col: Vec<f64> = out.iter().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / 4.0;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
        assert!(out.iter().all(|r| r[1] == 0.0));
    }
}
