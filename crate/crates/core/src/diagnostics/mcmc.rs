//! Autocorrelation and effective sample size.

/// Biased sample autocorrelation at lags `0..=max_lag`.
///
/// A constant series has autocorrelation 1 at lag 0 and 0 elsewhere.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    let max_lag = max_lag.min(n.saturating_sub(1));
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    let mut out = vec![0.0; max_lag + 1];
    out[0] = 1.0;
    if !(c0 > 0.0) {
        return out;
    }
    for (lag, v) in out.iter_mut().enumerate().skip(1) {
        let c: f64 = (0..n - lag).map(|t| (series[t] - mean) * (series[t + lag] - mean)).sum();
        *v = c / c0;
    }
    out
}

fn lag_autocovariance(centred: &[f64], lag: usize) -> f64 {
    centred[..centred.len() - lag]
        .iter()
        .zip(&centred[lag..])
        .map(|(a, b)| a * b)
        .sum()
}

/// Effective sample size with Geyer's initial positive sequence.
///
/// Lags are computed only as far as the truncation point.
pub fn ess(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return n as f64;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0 = lag_autocovariance(&centred, 0);
    if !(c0 > 0.0) {
        return n as f64;
    }
    // Γ_m = ρ(2m) + ρ(2m+1), summed while positive.
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (lag_autocovariance(&centred, 2 * m) + lag_autocovariance(&centred, 2 * m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    if tau <= 0.0 {
        return n as f64;
    }
    n as f64 / tau
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn ar1(rho: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        let sd = (1.0 - rho * rho).sqrt();
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = rho * x + sd * e;
                x
            })
            .collect()
    }

    #[test]
    fn lag_zero_is_one_and_constant_convention() {
        assert_eq!(autocorrelation(&ar1(0.3, 100, 1), 5)[0], 1.0);
        assert_eq!(autocorrelation(&[2.0; 50], 3), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(ess(&[2.0; 50]), 50.0);
    }

    #[test]
    fn white_noise_band() {
        let x = ar1(0.0, 10_000, 2);
        let band = 3.0 / (x.len() as f64).sqrt();
        assert!(autocorrelation(&x, 20)[1..].iter().all(|r| r.abs() < band));
        let e = ess(&x);
        assert!(e > 8_000.0 && e < 12_000.0, "{e}");
    }

    #[test]
    fn ar1_lag_one_and_ess() {
        let x = ar1(0.8, 100_000, 3);
        let r1 = autocorrelation(&x, 1)[1];
        assert!((0.78..=0.82).contains(&r1), "{r1}");
        let y = ar1(0.5, 100_000, 4);
        let e = ess(&y);
        let expect = 100_000.0 / 3.0;
        assert!((e - expect).abs() < 0.15 * expect, "{e}");
    }
}
