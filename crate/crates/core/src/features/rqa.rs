use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-delay embedding stored row-major: vector `i` is
/// `[x[i], x[i + tau], ..., x[i + (m - 1) tau]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayEmbedding {
    pub dim: usize,
    data: Vec<f64>,
}

impl DelayEmbedding {
    pub fn new(x: &[f64], m: usize, tau: usize) -> Result<Self> {
        if m == 0 || tau == 0 {
            return Err(Error::InvalidParameter(
                "embedding dimension and delay must be >= 1".into(),
            ));
        }
        let span = (m - 1) * tau;
        if x.len() < span + 1 {
            return Err(Error::InsufficientData(format!(
                "{} samples cannot be embedded with m = {m}, tau = {tau}",
                x.len()
            )));
        }
        let count = x.len() - span;
        let mut data = Vec::with_capacity(count * m);
        for i in 0..count {
            data.extend((0..m).map(|k| x[i + k * tau]));
        }
        Ok(Self { dim: m, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn euclidean(&self, i: usize, j: usize) -> f64 {
        self.vector(i)
            .iter()
            .zip(self.vector(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Square boolean matrix of thresholded state-space proximity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceMatrix {
    n: usize,
    cells: Vec<bool>,
}

impl RecurrenceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                cells.push(f(i, j));
            }
        }
        Self { n, cells }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// `R[i][j] = 1` iff the Euclidean distance between delay vectors `i` and
/// `j` is at most `eps`.
pub fn recurrence_matrix(x: &[f64], m: usize, tau: usize, eps: f64) -> Result<RecurrenceMatrix> {
    let emb = DelayEmbedding::new(x, m, tau)?;
    let n = emb.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "recurrence analysis needs at least 2 delay vectors".into(),
        ));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold {eps}")));
    }
    let mut cells = vec![false; n * n];
    for i in 0..n {
        cells[i * n + i] = true;
        for j in i + 1..n {
            if emb.euclidean(i, j) <= eps {
                cells[i * n + j] = true;
                cells[j * n + i] = true;
            }
        }
    }
    Ok(RecurrenceMatrix { n, cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RqaMeasures {
    /// Off-diagonal recurrence density over diagonals long enough to hold a
    /// line of `l_min` points.
    pub rec: f64,
    /// Fraction of off-diagonal recurrence points on diagonal lines of
    /// length at least `l_min`.
    pub det: f64,
}

pub fn rqa_measures(r: &RecurrenceMatrix, l_min: usize) -> Result<RqaMeasures> {
    if l_min < 2 {
        return Err(Error::InvalidParameter(format!("l_min must be >= 2 (got {l_min})")));
    }
    let n = r.size();
    if n < l_min {
        return Err(Error::InsufficientData(format!(
            "{n}x{n} recurrence matrix is smaller than l_min = {l_min}"
        )));
    }
    let mut points = 0usize;
    let mut on_lines = 0usize;
    let close_run = |run: usize, on_lines: &mut usize| {
        if run >= l_min {
            *on_lines += run;
        }
    };
    let mut pairs = 0usize;
    // Corner diagonals shorter than l_min can never hold a line; they are
    // excluded from both counts so a fully recurrent matrix has det = 1.
    for offset in 1..=n - l_min {
        pairs += 2 * (n - offset);
        // Upper and lower diagonals at this offset.
        for upper in [true, false] {
            let mut run = 0;
            for i in 0..n - offset {
                let hit = if upper {
                    r.get(i, i + offset)
                } else {
                    r.get(i + offset, i)
                };
                if hit {
                    points += 1;
                    run += 1;
                } else {
                    close_run(run, &mut on_lines);
                    run = 0;
                }
            }
            close_run(run, &mut on_lines);
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(RqaMeasures {
        rec: ratio(points, pairs),
        det: ratio(on_lines, points),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_recurs_everywhere() {
        let r = recurrence_matrix(&[2.0; 20], 3, 1, 0.0).unwrap();
        assert_eq!(r.size(), 18);
        assert!((0..18).all(|i| (0..18).all(|j| r.get(i, j))));
    }

    #[test]
    fn distant_vectors_do_not_recur() {
        let r = recurrence_matrix(&[0.0, 0.0, 10.0, 10.0], 2, 1, 1.0).unwrap();
        // vectors: (0,0), (0,10), (10,10)
        assert!(!r.get(0, 1) && !r.get(0, 2) && !r.get(1, 2));
        assert!(r.get(1, 1));
        assert!(r.is_symmetric());
    }

    #[test]
    fn full_and_identity_matrices() {
        let ones = RecurrenceMatrix::from_fn(10, |_, _| true);
        assert_eq!(rqa_measures(&ones, 2).unwrap(), RqaMeasures { rec: 1.0, det: 1.0 });
        let id = RecurrenceMatrix::from_fn(10, |i, j| i == j);
        assert_eq!(rqa_measures(&id, 2).unwrap(), RqaMeasures { rec: 0.0, det: 0.0 });
    }

    #[test]
    fn isolated_points_are_not_deterministic() {
        // A single off-diagonal pair (0,5)/(5,0) forms lines of length 1.
        let r = RecurrenceMatrix::from_fn(8, |i, j| i == j || (i.min(j) == 0 && i.max(j) == 5));
        let m = rqa_measures(&r, 2).unwrap();
        assert_eq!(m.det, 0.0);
        assert!((m.rec - 2.0 / 54.0).abs() < 1e-15);
    }

    #[test]
    fn parameter_errors() {
        let r = RecurrenceMatrix::from_fn(3, |_, _| true);
        assert!(rqa_measures(&r, 1).is_err());
        assert!(matches!(rqa_measures(&r, 4), Err(Error::InsufficientData(_))));
        assert!(matches!(
            recurrence_matrix(&[1.0, 2.0, 3.0], 3, 1, 1.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(DelayEmbedding::new(&[1.0; 5], 0, 1).is_err());
    }
}
