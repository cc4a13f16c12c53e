//! Matrix-pencil identification of a real exponential sum
//! `y_c(t) = Σ_j a_{j,c} e^{-μ_j t}` shared across channels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PencilOptions {
    /// Singular values below this fraction of the largest are noise.
    pub noise_floor: f64,
    /// Minimum ratio between the last kept and first dropped singular value.
    pub min_gap: f64,
    /// Relative tolerance of the reconstructed sum.
    pub fit_tolerance: f64,
}

impl Default for PencilOptions {
    fn default() -> Self {
        Self {
            noise_floor: 1e-10,
            min_gap: 1e2,
            fit_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    /// Ascending decay rates.
    pub exponents: Vec<f64>,
    /// `amplitudes[j][c]` multiplies `e^{-μ_j t}` in channel `c`.
    pub amplitudes: Vec<Vec<f64>>,
    /// Max reconstruction error relative to the max data value.
    pub residual: f64,
    /// Singular values of the stacked Hankel matrix.
    pub singular_values: Vec<f64>,
    /// `σ_M / σ_{M+1}` at the chosen order (infinite when nothing was dropped).
    pub gap: f64,
}

impl ExponentialFit {
    pub fn order(&self) -> usize {
        self.exponents.len()
    }

    pub fn evaluate(&self, channel: usize, t: f64) -> f64 {
        self.exponents
            .iter()
            .zip(&self.amplitudes)
            .map(|(mu, a)| a[channel] * (-mu * t).exp())
            .sum()
    }
}

pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::GridTooCoarse(format!("{} samples", times.len())));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::NonUniformGrid);
    }
    let uniform = times
        .iter()
        .enumerate()
        .all(|(j, &t)| (t - times[0] - dt * j as f64).abs() <= 1e-9 * dt.max(t.abs()));
    if !uniform {
        return Err(Error::NonUniformGrid);
    }
    Ok(dt)
}

/// Fits at most `budget` exponents jointly to every channel. `channels[c]`
/// holds the samples of channel `c` at `times`, which must be uniform with at
/// least `2·budget + 2` points.
pub fn extract_exponents(
    times: &[f64],
    channels: &[Vec<f64>],
    budget: usize,
    options: PencilOptions,
) -> Result<ExponentialFit> {
    let dt = uniform_step(times)?;
    let n = times.len();
    if budget == 0 || n < 2 * budget + 2 {
        return Err(Error::GridTooCoarse(format!(
            "{n} samples cannot identify {budget} exponents (need {})",
            2 * budget + 2
        )));
    }
    for c in channels {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: c.len(),
            });
        }
    }
    let scale = channels.iter().map(|c| linalg::max_abs(c)).fold(0.0_f64, f64::max);
    if channels.is_empty() || scale == 0.0 {
        return Ok(ExponentialFit {
            exponents: vec![],
            amplitudes: vec![],
            residual: 0.0,
            singular_values: vec![],
            gap: f64::INFINITY,
        });
    }

    let pencil = n / 2;
    let rows_per = n - pencil;
    let hankel = Matrix::from_fn(rows_per * channels.len(), pencil + 1, |r, j| {
        let (c, i) = (r / rows_per, r % rows_per);
        channels[c][i + j]
    });
    let svd = linalg::thin_svd(&hankel);
    let s = &svd.s;
    let above = s.iter().take_while(|&&x| x > options.noise_floor * s[0]).count();
    let order = above.min(budget);
    let gap = if order < s.len() {
        s[order - 1] / s[order]
    } else {
        f64::INFINITY
    };
    if gap < options.min_gap {
        return Err(Error::RankAmbiguous {
            gap,
            threshold: options.min_gap,
        });
    }

    let v1 = Matrix::from_fn(pencil, order, |i, j| svd.v[(i, j)]);
    let v2 = Matrix::from_fn(pencil, order, |i, j| svd.v[(i + 1, j)]);
    let z = linalg::lstsq(&v1, &v2);
    let roots = linalg::general_eigenvalues(&z)?;
    let mut exponents = Vec::with_capacity(order);
    for r in roots {
        if r.re <= 0.0 || r.im.abs() > 1e-6 * r.norm() {
            return Err(Error::FitFailed(format!("pencil root {r} is not a decaying real exponential")));
        }
        exponents.push(-r.re.ln() / dt);
    }
    exponents.sort_by(|a, b| a.total_cmp(b));

    let t0 = times[0];
    let vander = Matrix::from_fn(n, order, |j, k| (-exponents[k] * (times[j] - t0)).exp());
    let rhs = Matrix::from_fn(n, channels.len(), |j, c| channels[c][j]);
    let coef = linalg::lstsq(&vander, &rhs);
    let amplitudes: Vec<Vec<f64>> = (0..order)
        .map(|k| {
            let shift = (exponents[k] * t0).exp();
            (0..channels.len()).map(|c| coef[(k, c)] * shift).collect()
        })
        .collect();

    let mut fit = ExponentialFit {
        exponents,
        amplitudes,
        residual: 0.0,
        singular_values: s.clone(),
        gap,
    };
    let mut worst = 0.0_f64;
    for (c, data) in channels.iter().enumerate() {
        for (j, &y) in data.iter().enumerate() {
            worst = worst.max((fit.evaluate(c, times[j]) - y).abs());
        }
    }
    fit.residual = worst / scale;
    if fit.residual > options.fit_tolerance {
        return Err(Error::FitFailed(format!(
            "reconstruction error {:e} above {:e}",
            fit.residual, options.fit_tolerance
        )));
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn two_term_synthetic() {
        let t = grid(64, 0.0, 3.0);
        let y: Vec<f64> = t.iter().map(|&t| 2.0 * (-2.0 * t).exp() + 0.5 * (-5.0 * t).exp()).collect();
        let fit = extract_exponents(&t, &[y], 4, PencilOptions::default()).unwrap();
        assert_eq!(fit.order(), 2);
        assert!((fit.exponents[0] - 2.0).abs() < 1e-8);
        assert!((fit.exponents[1] - 5.0).abs() < 1e-8);
        assert!((fit.amplitudes[0][0] - 2.0).abs() < 1e-8);
        assert!((fit.amplitudes[1][0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn single_exponent_of_constant_mode() {
        let m = 2.0_f64;
        let t = grid(20, 0.05, 4.0);
        let amp = m * m.ln() * 0.3;
        let y: Vec<f64> = t.iter().map(|&t| amp * (-m * t).exp()).collect();
        let fit = extract_exponents(&t, &[y], 5, PencilOptions::default()).unwrap();
        assert_eq!(fit.order(), 1);
        assert!((fit.exponents[0] - m).abs() < 1e-10);
        assert!((fit.amplitudes[0][0] - amp).abs() < 1e-10);
    }

    #[test]
    fn vanishing_amplitude_in_one_channel() {
        let t = grid(30, 0.0, 2.0);
        let a: Vec<f64> = t.iter().map(|&t| (-t).exp() + 3.0 * (-4.0 * t).exp()).collect();
        let b: Vec<f64> = t.iter().map(|&t| -2.0 * (-t).exp()).collect();
        let fit = extract_exponents(&t, &[a, b], 3, PencilOptions::default()).unwrap();
        assert_eq!(fit.order(), 2);
        assert!((fit.exponents[1] - 4.0).abs() < 1e-8);
        assert!(fit.amplitudes[1][1].abs() < 1e-8);
        assert!((fit.amplitudes[0][1] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn grid_checks() {
        let y = vec![1.0; 6];
        assert!(matches!(
            extract_exponents(&[0.0, 0.1, 0.3, 0.4, 0.5, 0.6], std::slice::from_ref(&y), 2, PencilOptions::default()),
            Err(Error::NonUniformGrid)
        ));
        assert!(matches!(
            extract_exponents(&grid(6, 0.0, 1.0), &[y], 3, PencilOptions::default()),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn budget_below_true_order_is_ambiguous() {
        let t = grid(40, 0.0, 3.0);
        let y: Vec<f64> = t
            .iter()
            .map(|&t| (-t).exp() + (-2.0 * t).exp() + (-3.0 * t).exp())
            .collect();
        assert!(matches!(
            extract_exponents(&t, &[y], 1, PencilOptions::default()),
            Err(Error::RankAmbiguous { .. })
        ));
    }
}
