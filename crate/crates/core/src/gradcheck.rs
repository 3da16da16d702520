//! Central finite differences for verifying analytic gradients.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mcg::{cross_order_correlation, mcg_backward, mcg_forward, row_softmax, FeatureMap};

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let plus = f(&probe);
            probe[i] = orig - h;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Largest elementwise [`relative_error`] between two gradients.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n, floor))
        .fold(0.0, f64::max)
}

/// Outcome of a randomized gradient check of the attention block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McgCheckReport {
    pub trials: usize,
    pub max_rel_err_p: f64,
    pub max_rel_err_o: f64,
    pub max_rel_err_gamma: f64,
    /// Largest `|row sum - 1|` of the softmax attention over all trials.
    pub max_row_sum_err: f64,
    /// `gamma = 0` forward pass reproduced `O` bit for bit in every trial.
    pub identity_at_zero: bool,
}

impl McgCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.max_rel_err_p
            .max(self.max_rel_err_o)
            .max(self.max_rel_err_gamma)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err() < tolerance && self.max_row_sum_err <= 1e-12 && self.identity_at_zero
    }
}

/// Settings for [`check_mcg_gradients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McgCheckConfig {
    pub trials: usize,
    /// Each trial draws `n` uniformly from `1..=max_n`.
    pub max_n: usize,
    /// Each trial draws `d` uniformly from `1..=max_d`.
    pub max_d: usize,
    pub gamma: f64,
    pub step: f64,
    pub seed: u64,
}

impl Default for McgCheckConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            max_n: 8,
            max_d: 4,
            gamma: 0.5,
            step: 1e-5,
            seed: 0,
        }
    }
}

/// Floor on the denominator of relative gradient errors.
pub const REL_ERR_FLOOR: f64 = 1e-6;

/// Compare [`mcg_backward`] against central differences of
/// `<U, mcg_forward(P, O, gamma)>` on random inputs in `[-1, 1)`.
pub fn check_mcg_gradients(cfg: &McgCheckConfig) -> Result<McgCheckReport> {
    if cfg.trials == 0 || cfg.max_n == 0 || cfg.max_d == 0 {
        return invalid("gradient check needs trials, n and d >= 1");
    }
    if !(cfg.step > 0.0) || !cfg.gamma.is_finite() {
        return invalid("gradient check needs a positive step and finite gamma");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = McgCheckReport {
        trials: cfg.trials,
        max_rel_err_p: 0.0,
        max_rel_err_o: 0.0,
        max_rel_err_gamma: 0.0,
        max_row_sum_err: 0.0,
        identity_at_zero: true,
    };
    for _ in 0..cfg.trials {
        let n = rng.random_range(1..=cfg.max_n);
        let d = rng.random_range(1..=cfg.max_d);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let pv = draw(&mut rng);
        let ov = draw(&mut rng);
        let uv = draw(&mut rng);
        let p = FeatureMap::from_matrix(DMatrix::from_column_slice(n, d, &pv))?;
        let o = FeatureMap::from_matrix(DMatrix::from_column_slice(n, d, &ov))?;
        let up = DMatrix::from_column_slice(n, d, &uv);

        let identity = mcg_forward(&p, &o, 0.0)?;
        report.identity_at_zero &= identity
            .matrix()
            .iter()
            .zip(o.matrix().iter())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        let zhat = row_softmax(&cross_order_correlation(&p, &o)?);
        for row in zhat.row_iter() {
            report.max_row_sum_err = report.max_row_sum_err.max((row.sum() - 1.0).abs());
        }

        let g = mcg_backward(&p, &o, cfg.gamma, &up)?;
        let loss = |pv: &[f64], ov: &[f64], gamma: f64| -> f64 {
            let p = FeatureMap(DMatrix::from_column_slice(n, d, pv));
            let o = FeatureMap(DMatrix::from_column_slice(n, d, ov));
            up.dot(mcg_forward(&p, &o, gamma).expect("shapes match").matrix())
        };
        let num_p = central_difference(|x| loss(x, &ov, cfg.gamma), &pv, cfg.step);
        let num_o = central_difference(|x| loss(&pv, x, cfg.gamma), &ov, cfg.step);
        let num_g = central_difference(|x| loss(&pv, &ov, x[0]), &[cfg.gamma], cfg.step);
        report.max_rel_err_p = report.max_rel_err_p.max(max_relative_error(
            g.grad_p.as_slice(),
            &num_p,
            REL_ERR_FLOOR,
        ));
        report.max_rel_err_o = report.max_rel_err_o.max(max_relative_error(
            g.grad_o.as_slice(),
            &num_o,
            REL_ERR_FLOOR,
        ));
        report.max_rel_err_gamma = report.max_rel_err_gamma.max(max_relative_error(
            &[g.grad_gamma],
            &num_g,
            REL_ERR_FLOOR,
        ));
    }
    Ok(report)
}
