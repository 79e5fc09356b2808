use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-scoring with population statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    /// `names` labels columns in the error for a constant column; pass an
    /// empty slice to report indices only.
    pub fn fit(x: ArrayView2<f64>, names: &[&str]) -> Result<Self> {
        if x.nrows() < 2 {
            return Err(Error::InsufficientData("standardizer needs at least 2 rows".into()));
        }
        let means: Array1<f64> = x.mean_axis(Axis(0)).expect("non-empty");
        let sds = x.std_axis(Axis(0), 0.0);
        for (index, &sd) in sds.iter().enumerate() {
            if !(sd > 0.0) {
                return Err(Error::DegenerateFeature {
                    index,
                    name: names.get(index).map_or_else(|| format!("#{index}"), |s| s.to_string()),
                });
            }
        }
        Ok(Self {
            means: means.to_vec(),
            sds: sds.to_vec(),
        })
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.means.len() {
            return Err(Error::Dimension(format!(
                "standardizer fitted on {} columns, got {}",
                self.means.len(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.sds[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn fit_apply(x: ArrayView2<f64>, names: &[&str]) -> Result<(Self, Array2<f64>)> {
        let s = Self::fit(x, names)?;
        let z = s.apply(x)?;
        Ok((s, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_rows() {
        let x = array![[0.0], [2.0]];
        let (s, z) = Standardizer::fit_apply(x.view(), &[]).unwrap();
        assert_eq!(s.means, vec![1.0]);
        assert_eq!(s.sds, vec![1.0]);
        assert_eq!(z, array![[-1.0], [1.0]]);
    }

    #[test]
    fn constant_column_is_named() {
        let x = array![[1.0, 3.0], [2.0, 3.0], [4.0, 3.0]];
        match Standardizer::fit(x.view(), &["rms", "mdf"]) {
            Err(Error::DegenerateFeature { index, name }) => {
                assert_eq!(index, 1);
                assert_eq!(name, "mdf");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_checks() {
        let s = Standardizer::fit(array![[0.0, 1.0], [1.0, 0.0]].view(), &[]).unwrap();
        assert!(s.apply(array![[1.0]].view()).is_err());
        assert!(Standardizer::fit(array![[1.0, 2.0]].view(), &[]).is_err());
    }
}
