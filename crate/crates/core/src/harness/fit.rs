use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 10 points, got {0}")]
    TooFewPoints(usize),
    #[error("window {0} must lie in (0, 1]")]
    Window(f64),
    #[error("point {index} has non-positive t or value ({t}, {value})")]
    NonPositive { index: usize, t: f64, value: f64 },
    #[error("the window holds fewer than two distinct t values")]
    Degenerate,
}

/// Least-squares slope of `ln(value)` against `ln(t)` over the trailing
/// `window` fraction of the points.
pub fn fit_rate(series: &[(f64, f64)], window: f64) -> Result<f64, FitError> {
    if series.len() < 10 {
        return Err(FitError::TooFewPoints(series.len()));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(FitError::Window(window));
    }
    if let Some((index, &(t, value))) = series
        .iter()
        .enumerate()
        .find(|(_, (t, v))| !(*t > 0.0 && *v > 0.0))
    {
        return Err(FitError::NonPositive { index, t, value });
    }
    let keep = ((series.len() as f64 * window).ceil() as usize).clamp(2, series.len());
    let tail = &series[series.len() - keep..];
    let n = tail.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(t, v) in tail {
        sx += t.ln();
        sy += v.ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, v) in tail {
        let dx = t.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (v.ln() - my);
    }
    if tail.iter().all(|&(t, _)| t == tail[0].0) {
        return Err(FitError::Degenerate);
    }
    Ok(sxy / sxx)
}
