//! Small numerical helpers shared by the convergence checks.

/// Root mean square of a slice; `NaN` when empty.
pub fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Ratio of the RMS of `series` over `[2n, 4n)` to its RMS over `[n, 2n)`,
/// where `series[i]` belongs to horizon `i + 1`.
///
/// A pointwise `r(2n) / r(n)` of an oscillating `O(1/n)` residual can land
/// on a node of either factor; averaging over a dyadic window keeps the
/// `1/n` envelope and discards the phase.
pub fn dyadic_rate(series: &[f64], n: usize) -> Option<f64> {
    if n == 0 || series.len() < 4 * n {
        return None;
    }
    let first = rms(&series[n - 1..2 * n - 1]);
    let second = rms(&series[2 * n - 1..4 * n - 1]);
    Some(second / first)
}

/// RMS of `f` over `[a, b)` from `samples` points of the golden-ratio
/// (Kronecker) sequence, which avoids the aliasing of a uniform lattice.
pub fn window_rms(f: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> f64 {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    let values: Vec<f64> = (0..samples)
        .map(|i| f(a + (b - a) * (0.5 + GOLDEN * i as f64).fract()))
        .collect();
    rms(&values)
}

/// Least-squares line `y = slope * x + intercept` with its `R^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r2 })
}
