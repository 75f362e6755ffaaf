//! Diagonal-covariance Gaussian mixture fit by expectation-maximization.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, Stream};

/// Components whose responsibility mass falls to or below this are re-seeded.
const EMPTY_COMPONENT_MASS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmConfig {
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub covariance_floor: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            k: 5,
            max_iters: 200,
            tol: 1e-6,
            covariance_floor: 1e-6,
            seed: 0,
        }
    }
}

impl GmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("gmm.k must be positive".into()));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!(
                "gmm.tol must be non-negative, got {}",
                self.tol
            )));
        }
        if !(self.covariance_floor > 0.0 && self.covariance_floor.is_finite()) {
            return Err(Error::Config(format!(
                "gmm.covariance_floor must be positive, got {}",
                self.covariance_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub covariance_floor: f64,
}

/// A fitted model plus the EM trace.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Mean training log-likelihood evaluated before each M-step and at the
    /// returned parameters (last entry).
    pub log_likelihood: Vec<f64>,
    /// M-step indices in which at least one empty component was re-seeded.
    pub reseeded: Vec<usize>,
    pub converged: bool,
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Per-component `log w_j + log N(x; mu_j, diag(var_j))`.
    fn component_log_densities(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .iter()
                .zip(&self.means)
                .zip(&self.variances)
                .map(|((w, mean), var)| {
                    let quad: f64 = x
                        .iter()
                        .zip(mean)
                        .zip(var)
                        .map(|((xi, m), v)| (2.0 * PI * v).ln() + (xi - m) * (xi - m) / v)
                        .sum();
                    w.ln() - 0.5 * quad
                }),
        );
    }

    pub fn log_likelihood(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::WidthMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut buf = Vec::with_capacity(self.k());
        self.component_log_densities(x, &mut buf);
        Ok(log_sum_exp(&buf))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let k = self.k();
        let d = self.dim();
        if k == 0 || d == 0 {
            return Err(Error::InvalidArgument("mixture has no components".into()));
        }
        if self.means.len() != k
            || self.variances.len() != k
            || self
                .means
                .iter()
                .chain(&self.variances)
                .any(|v| v.len() != d)
        {
            return Err(Error::InvalidArgument(
                "mixture arrays have inconsistent shapes".into(),
            ));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| w.is_nan() || *w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights must be a simplex (sum {sum})"
            )));
        }
        if self
            .variances
            .iter()
            .flatten()
            .any(|v| !(v.is_finite() && *v >= self.covariance_floor))
        {
            return Err(Error::InvalidArgument(
                "variance below covariance floor".into(),
            ));
        }
        if self.means.iter().flatten().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mixture mean".into()));
        }
        Ok(())
    }
}

pub fn gmm_log_likelihood(model: &GmmModel, x: &[f64]) -> Result<f64> {
    model.log_likelihood(x)
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn check_samples(samples: &[Vec<f64>], k: usize) -> Result<usize> {
    if samples.len() < k {
        return Err(Error::TooFewSamples {
            k,
            samples: samples.len(),
        });
    }
    let dim = samples[0].len();
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "features must be non-empty vectors".into(),
        ));
    }
    for s in samples {
        if s.len() != dim {
            return Err(Error::WidthMismatch {
                expected: dim,
                actual: s.len(),
            });
        }
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                value: s[i],
            });
        }
    }
    Ok(dim)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: each new center is drawn with probability proportional
/// to its squared distance from the nearest chosen center.
fn seed_means<R: Rng>(samples: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = samples.len();
    let mut means = vec![samples[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = samples
        .iter()
        .map(|s| squared_distance(s, &means[0]))
        .collect();
    while means.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1))
        } else {
            rng.random_range(0..n)
        };
        let center = samples[pick].clone();
        for (d, s) in nearest.iter_mut().zip(samples) {
            *d = d.min(squared_distance(s, &center));
        }
        means.push(center);
    }
    means
}

fn global_variance(samples: &[Vec<f64>], dim: usize, floor: f64) -> Vec<f64> {
    let n = samples.len() as f64;
    (0..dim)
        .map(|d| {
            let mean = samples.iter().map(|s| s[d]).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / n;
            var.max(floor)
        })
        .collect()
}

pub fn fit_gmm(samples: &[Vec<f64>], cfg: &GmmConfig) -> Result<GmmFit> {
    cfg.validate()?;
    let k = cfg.k;
    let dim = check_samples(samples, k)?;
    let n = samples.len();
    let floor = cfg.covariance_floor;
    let mut rng = seeded(cfg.seed, Stream::Gmm);

    let spread = global_variance(samples, dim, floor);
    let mut model = GmmModel {
        weights: vec![1.0 / k as f64; k],
        means: seed_means(samples, k, &mut rng),
        variances: vec![spread.clone(); k],
        covariance_floor: floor,
    };

    let mut history = Vec::new();
    let mut reseeded = Vec::new();
    let mut converged = false;
    let mut resp = vec![0.0; n * k];
    let mut sample_ll = vec![0.0; n];
    let mut buf = Vec::with_capacity(k);

    for iter in 0..=cfg.max_iters {
        // E-step.
        for (i, x) in samples.iter().enumerate() {
            model.component_log_densities(x, &mut buf);
            let ll = log_sum_exp(&buf);
            sample_ll[i] = ll;
            for (r, l) in resp[i * k..(i + 1) * k].iter_mut().zip(&buf) {
                *r = (l - ll).exp();
            }
        }
        let mean_ll = sample_ll.iter().sum::<f64>() / n as f64;
        if !mean_ll.is_finite() {
            return Err(Error::Divergence {
                epoch: iter,
                loss: mean_ll,
            });
        }
        if let Some(&prev) = history.last() {
            // Relative change, with an absolute floor of `tol` near zero.
            let prev: f64 = prev;
            if (mean_ll - prev).abs() <= cfg.tol * prev.abs().max(1.0) {
                converged = true;
            }
        }
        history.push(mean_ll);
        if converged || iter == cfg.max_iters {
            break;
        }

        // M-step.
        let mut reseed_used = Vec::new();
        for j in 0..k {
            let mass: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            if mass <= EMPTY_COMPONENT_MASS {
                let worst = (0..n)
                    .filter(|i| !reseed_used.contains(i))
                    .min_by(|&a, &b| sample_ll[a].total_cmp(&sample_ll[b]))
                    .unwrap_or(0);
                reseed_used.push(worst);
                model.means[j] = samples[worst].clone();
                model.variances[j] = spread.clone();
                model.weights[j] = 1.0 / n as f64;
                continue;
            }
            let mean: Vec<f64> = (0..dim)
                .map(|d| (0..n).map(|i| resp[i * k + j] * samples[i][d]).sum::<f64>() / mass)
                .collect();
            let var: Vec<f64> = (0..dim)
                .map(|d| {
                    let v = (0..n)
                        .map(|i| resp[i * k + j] * (samples[i][d] - mean[d]).powi(2))
                        .sum::<f64>()
                        / mass;
                    v.max(floor)
                })
                .collect();
            model.means[j] = mean;
            model.variances[j] = var;
            model.weights[j] = mass / n as f64;
        }
        if !reseed_used.is_empty() {
            reseeded.push(iter);
        }
        let total: f64 = model.weights.iter().sum();
        model.weights.iter_mut().for_each(|w| *w /= total);
    }

    Ok(GmmFit {
        model,
        log_likelihood: history,
        reseeded,
        converged,
    })
}
