use nalgebra::DMatrix;

/// Bartlett kernel weights `1 - l/(L+1)` for `l = 1..=L`.
pub fn bartlett_weights(lags: usize) -> Vec<f64> {
    (1..=lags).map(|l| 1.0 - l as f64 / (lags as f64 + 1.0)).collect()
}

/// Newey-West lag rule `floor(T^(1/4))`.
pub fn default_lags(n: usize) -> usize {
    (n as f64).powf(0.25).floor() as usize
}

/// Long-run covariance of the score rows `g_t` (an `n x p` matrix):
/// `S = G0 + sum_l w_l (G_l + G_l')` with `G_l = (1/n) sum_{t>=l} g_t g_{t-l}'`.
pub fn long_run_covariance(scores: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let n = scores.nrows();
    let p = scores.ncols();
    let mut s = DMatrix::zeros(p, p);
    if n == 0 {
        return s;
    }
    let gamma = |l: usize| {
        let mut g = DMatrix::zeros(p, p);
        for t in l..n {
            let a = scores.row(t);
            let b = scores.row(t - l);
            for i in 0..p {
                for j in 0..p {
                    g[(i, j)] += a[i] * b[j];
                }
            }
        }
        g / n as f64
    };
    s += gamma(0);
    for (l, w) in bartlett_weights(lags).into_iter().enumerate() {
        let g = gamma(l + 1);
        s += (&g + g.transpose()) * w;
    }
    s
}

/// `n * B S B` for a symmetric bread `B`.
pub fn sandwich(bread: &DMatrix<f64>, meat: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let v = bread * meat * bread * n as f64;
    (&v + v.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert_eq!(bartlett_weights(3), [0.75, 0.5, 0.25]);
        assert!(bartlett_weights(0).is_empty());
        assert_eq!(default_lags(80), 2);
        assert_eq!(default_lags(81), 3);
    }

    #[test]
    fn scalar_long_run_variance() {
        let g = DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 2.0, 0.5]);
        // G0 = 6.25/4, G1 = (-1 - 2 + 1)/4 = -0.5
        let s = long_run_covariance(&g, 1);
        assert!((s[(0, 0)] - (6.25 / 4.0 + 2.0 * 0.5 * -0.5)).abs() < 1e-15);
    }
}
