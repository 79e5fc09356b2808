use crate::error::{Error, Result};
use crate::features::rqa::DelayEmbedding;

/// `count` logarithmically spaced radii from `lo` to `hi` inclusive.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo; count];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Correlation sums `C(r)` over all unordered pairs of delay vectors.
pub fn correlation_sums(emb: &DelayEmbedding, radii: &[f64]) -> Vec<f64> {
    let n = emb.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(emb.euclidean(i, j));
        }
    }
    dists.sort_by(f64::total_cmp);
    let pairs = dists.len() as f64;
    radii
        .iter()
        .map(|&r| dists.partition_point(|&d| d <= r) as f64 / pairs)
        .collect()
}

/// Grassberger–Procaccia estimate: least-squares slope of `ln C(r)` against
/// `ln r` over the radii where `0 < C(r) < 1`, clamped to `[0, m]`.
pub fn correlation_dimension(x: &[f64], m: usize, tau: usize, radii: &[f64]) -> Result<f64> {
    if radii.len() < 4 || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter(
            "correlation dimension needs at least 4 positive radii".into(),
        ));
    }
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    if hi / lo < 10.0 - 1e-9 {
        return Err(Error::InvalidParameter("radii must span at least one decade".into()));
    }
    let emb = DelayEmbedding::new(x, m, tau)?;
    if emb.len() < 50 {
        return Err(Error::InsufficientData(format!(
            "correlation dimension needs at least 50 delay vectors (got {})",
            emb.len()
        )));
    }
    let sums = correlation_sums(&emb, radii);
    if sums.iter().all(|&c| c >= 1.0) {
        // Collapsed attractor: every pair is within the smallest radius.
        return Ok(0.0);
    }
    let points: Vec<(f64, f64)> = radii
        .iter()
        .zip(&sums)
        .filter(|(_, &c)| c > 0.0 && c < 1.0)
        .map(|(r, c)| (r.ln(), c.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::UndefinedScaling);
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::UndefinedScaling);
    }
    Ok((sxy / sxx).clamp(0.0, m as f64))
}
