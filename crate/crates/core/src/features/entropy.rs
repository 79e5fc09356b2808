use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEntropy {
    /// Nats. When no template pair matches at length `m + 1` the value is
    /// capped at `ln(B) + ln(N)` and `capped` is set.
    pub value: f64,
    pub capped: bool,
    /// Matching template pairs at length `m`.
    pub b: u64,
    /// Matching template pairs at length `m + 1`.
    pub a: u64,
}

/// Sample entropy with Chebyshev template matching, excluding self-matches.
/// Both template lengths use the same `N - m` starting positions.
pub fn sample_entropy(x: &[f64], m: usize, r: f64) -> Result<SampleEntropy> {
    if !(r > 0.0) {
        return Err(Error::DegenerateTolerance(r));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("template length m must be >= 1".into()));
    }
    let n = x.len();
    if n < m + 2 {
        return Err(Error::InsufficientData(format!(
            "sample entropy with m = {m} needs at least {} samples (got {n})",
            m + 2
        )));
    }
    let templates = n - m;
    let (mut b, mut a) = (0u64, 0u64);
    for i in 0..templates {
        for j in i + 1..templates {
            let mut matched = true;
            for k in 0..m {
                if (x[i + k] - x[j + k]).abs() > r {
                    matched = false;
                    break;
                }
            }
            if matched {
                b += 1;
                if (x[i + m] - x[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    Ok(if a == 0 {
        SampleEntropy {
            value: (b.max(1) as f64).ln() + (n as f64).ln(),
            capped: true,
            b,
            a,
        }
    } else {
        SampleEntropy {
            value: -(a as f64 / b as f64).ln(),
            capped: false,
            b,
            a,
        }
    })
}
