use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonic::DeviceParams;
use crate::seed;

use super::data::Dataset;
use super::model::{argmax, cross_entropy, Arch, ForwardNoise, SmallCnn, STAGES};
use super::noise::{log_grid, validate_grid, NoisePhase, NoiseSpec, SwingScope, WeightNoiseMode};

// Stream tags for seed derivation.
const TAG_SHUFFLE: u64 = 1;
const TAG_OUTPUT: u64 = 2;
const TAG_WEIGHT: u64 = 3;
const TAG_SPLIT: u64 = 4;
const TAG_EVAL: u64 = 5;

/// Mini-batch SGD with momentum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    /// Leading training samples used to measure the signal swing.
    pub calibration_samples: usize,
    /// Permit weight noise while training (destroys learning; for demonstration).
    pub allow_weight_noise: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 32,
            calibration_samples: 256,
            allow_weight_noise: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.calibration_samples == 0 {
            return Err(Error::Config(
                "train: epochs, batch_size and calibration_samples must be >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(
                "train: learning_rate must be > 0 and momentum in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean loss of the (possibly noisy) training passes.
    pub train_loss: f64,
    /// Mean clean loss on the validation set, when one was given.
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: SmallCnn,
    pub curve: Vec<EpochStats>,
}

fn calibration_batch(data: &Dataset, count: usize) -> &[crate::tensor::FeatureMap] {
    &data.images[..count.min(data.len())]
}

/// Mean clean cross-entropy over `data`.
pub fn mean_loss(model: &SmallCnn, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::domain("dataset is empty"));
    }
    let losses = data
        .images
        .par_iter()
        .zip(&data.labels)
        .map(|(x, &y)| Ok(cross_entropy(&model.forward(x, &ForwardNoise::clean(), None)?, y).0))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Trains `model` on `data`. Output noise from `noise` is injected in the
/// forward passes when it is enabled for training; gradients treat it as a
/// constant. Weight noise is refused unless `cfg.allow_weight_noise`.
pub fn train(
    mut model: SmallCnn,
    data: &Dataset,
    cfg: &TrainConfig,
    noise: &NoiseSpec,
    validation: Option<&Dataset>,
) -> Result<Trained> {
    cfg.validate()?;
    noise.validate()?;
    if data.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    let active = noise.in_training();
    let output_frac = if active { noise.output_noise_frac } else { 0.0 };
    let weight_frac = if active { noise.weight_noise_frac } else { 0.0 };
    if weight_frac > 0.0 && !cfg.allow_weight_noise {
        return Err(Error::Config(
            "weight noise must be off during training (set allow_weight_noise to override)".into(),
        ));
    }

    let mut params = model.parameters();
    let mut velocity = vec![0.0; params.len()];
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=cfg.epochs {
        model.calibrate(calibration_batch(data, cfg.calibration_samples))?;
        let sigma = model.output_sigmas(output_frac, noise.swing);
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::derive(cfg.seed, &[TAG_SHUFFLE, epoch as u64])));

        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| {
                    let site = [epoch as u64, i as u64];
                    let perturbed;
                    let net = if weight_frac > 0.0 {
                        perturbed = model.perturbed(
                            weight_frac,
                            seed::derive(noise.seed, &[TAG_WEIGHT, site[0], site[1]]),
                        );
                        &perturbed
                    } else {
                        &model
                    };
                    let fwd = ForwardNoise {
                        sigma,
                        seed: seed::derive(noise.seed, &[TAG_OUTPUT, site[0], site[1]]),
                    };
                    let x = &data.images[i];
                    let trace = net.trace(x, &fwd, None)?;
                    let (loss, g) = net.backward(x, &trace, data.labels[i])?;
                    Ok((loss, g.flatten()))
                })
                .collect::<Result<Vec<_>>>()?;

            let mut grad = vec![0.0; params.len()];
            for (loss, g) in &results {
                loss_sum += loss;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            if !loss_sum.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    last_stable: (epoch > 1).then(|| epoch - 1),
                });
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - scale * g;
                *p += *v;
            }
            model.set_parameters(&params).map_err(|_| Error::Divergence {
                epoch,
                last_stable: (epoch > 1).then(|| epoch - 1),
            })?;
        }
        curve.push(EpochStats {
            epoch,
            train_loss: loss_sum / data.len() as f64,
            val_loss: validation.map(|v| mean_loss(&model, v)).transpose()?,
        });
    }
    model.calibrate(calibration_batch(data, cfg.calibration_samples))?;
    Ok(Trained { model, curve })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// One accuracy per repeat.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over repeats (0 for one repeat).
    pub std: f64,
}

impl Evaluation {
    fn from_accuracies(accuracies: Vec<f64>) -> Self {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let std = if accuracies.len() > 1 {
            (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Evaluation { accuracies, mean, std }
    }
}

/// Classification accuracy over `repeats` passes with distinct derived seeds.
/// Noise applies when `noise` is enabled for inference; `dev` selects the
/// analog element-wise path.
pub fn evaluate(
    model: &SmallCnn,
    data: &Dataset,
    noise: &NoiseSpec,
    repeats: usize,
    eval_seed: u64,
    dev: Option<&DeviceParams>,
) -> Result<Evaluation> {
    noise.validate()?;
    if data.is_empty() {
        return Err(Error::domain("evaluation set is empty"));
    }
    if repeats == 0 {
        return Err(Error::domain("repeats must be >= 1"));
    }
    let active = noise.in_inference();
    let output_frac = if active { noise.output_noise_frac } else { 0.0 };
    let weight_frac = if active { noise.weight_noise_frac } else { 0.0 };
    let sigma: [f64; STAGES] = model.output_sigmas(output_frac, noise.swing);

    let mut accuracies = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let base = seed::derive(eval_seed, &[noise.seed, r as u64]);
        let fixed = model.perturbed(weight_frac, seed::derive(base, &[TAG_WEIGHT]));
        let correct = data
            .images
            .par_iter()
            .zip(&data.labels)
            .enumerate()
            .map(|(i, (x, &y))| {
                let redrawn;
                let net = if weight_frac > 0.0 && noise.weight_mode == WeightNoiseMode::Redraw {
                    redrawn = model.perturbed(weight_frac, seed::derive(base, &[TAG_WEIGHT, i as u64]));
                    &redrawn
                } else {
                    &fixed
                };
                let fwd = ForwardNoise {
                    sigma,
                    seed: seed::derive(base, &[TAG_OUTPUT, i as u64]),
                };
                let scores = net.forward(x, &fwd, dev)?;
                Ok(usize::from(argmax(&scores) == y))
            })
            .collect::<Result<Vec<usize>>>()?
            .into_iter()
            .sum::<usize>();
        accuracies.push(correct as f64 / data.len() as f64);
    }
    Ok(Evaluation::from_accuracies(accuracies))
}

/// Settings of the train-noise x inference-noise experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Output-noise fractions used while training, one model each.
    pub train_grid: Vec<f64>,
    /// Noise fractions applied at inference.
    pub infer_grid: Vec<f64>,
    pub repeats: usize,
    /// Samples in the training part of the split; the rest are the test set.
    pub train_count: usize,
    /// Every model starts from this initialization.
    pub init_seed: u64,
    /// Apply inference noise to the weights as well as the outputs.
    pub inference_weight_noise: bool,
    pub weight_mode: WeightNoiseMode,
    pub swing: SwingScope,
    pub arch: Arch,
    pub train: TrainConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            train_grid: vec![0.0, 1e-3, 5e-3],
            infer_grid: log_grid(1e-4, 1e-2, 5),
            repeats: 5,
            train_count: 1197,
            init_seed: 7,
            inference_weight_noise: true,
            weight_mode: WeightNoiseMode::Fixed,
            swing: SwingScope::PerLayer,
            arch: Arch::digits(),
            train: TrainConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        validate_grid("train", &self.train_grid)?;
        validate_grid("inference", &self.infer_grid)?;
        if self.repeats == 0 {
            return Err(Error::Config("noise.repeats must be >= 1".into()));
        }
        self.arch.validate()?;
        self.train.validate()
    }

    /// Inference-time noise for grid level `level`.
    pub fn inference_noise(&self, level: f64) -> NoiseSpec {
        NoiseSpec {
            output_noise_frac: level,
            weight_noise_frac: if self.inference_weight_noise { level } else { 0.0 },
            seed: 0,
            enabled_in: NoisePhase::Inference,
            weight_mode: self.weight_mode,
            swing: self.swing,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLevel {
    pub train_noise: f64,
    pub curve: Vec<EpochStats>,
    pub clean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub train_noise: f64,
    pub infer_noise: f64,
    pub eval: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub trained: Vec<TrainedLevel>,
    /// Row-major over (train level, inference level).
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, train_noise: f64, infer_noise: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.train_noise == train_noise && c.infer_noise == infer_noise)
    }

    /// Mean accuracies of one trained model across the inference grid.
    pub fn curve(&self, train_noise: f64) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.train_noise == train_noise)
            .map(|c| c.eval.mean)
            .collect()
    }

    /// Whether the `robust` model beats the `baseline` model at the highest
    /// inference level. `None` if either level is missing.
    pub fn crossover(&self, baseline: f64, robust: f64) -> Option<bool> {
        let top = self.cells.iter().map(|c| c.infer_noise).fold(f64::NEG_INFINITY, f64::max);
        let b = self.cell(baseline, top)?;
        let r = self.cell(robust, top)?;
        Some(r.eval.mean > b.eval.mean)
    }
}

/// Trains one model per training-noise level from a common initialization and
/// evaluates each across the inference grid.
pub fn noise_sweep(data: &Dataset, cfg: &SweepConfig, sweep_seed: u64) -> Result<SweepResult> {
    cfg.validate()?;
    let split = data.split(cfg.train_count, seed::derive(sweep_seed, &[TAG_SPLIT]))?;
    let train_cfg = TrainConfig {
        seed: seed::derive(sweep_seed, &[TAG_SHUFFLE]),
        ..cfg.train.clone()
    };
    let mut trained = Vec::with_capacity(cfg.train_grid.len());
    let mut cells = Vec::with_capacity(cfg.train_grid.len() * cfg.infer_grid.len());
    for &level in &cfg.train_grid {
        let init = SmallCnn::new(cfg.arch, cfg.init_seed)?;
        let noise = NoiseSpec {
            output_noise_frac: level,
            seed: seed::derive(sweep_seed, &[TAG_OUTPUT]),
            enabled_in: NoisePhase::Training,
            swing: cfg.swing,
            ..NoiseSpec::none()
        };
        let out = train(init, &split.train, &train_cfg, &noise, None)?;
        let clean = evaluate(&out.model, &split.test, &NoiseSpec::none(), 1, 0, None)?;
        for (j, &infer) in cfg.infer_grid.iter().enumerate() {
            let eval = evaluate(
                &out.model,
                &split.test,
                &cfg.inference_noise(infer),
                cfg.repeats,
                seed::derive(sweep_seed, &[TAG_EVAL, j as u64]),
                None,
            )?;
            cells.push(SweepCell {
                train_noise: level,
                infer_noise: infer,
                eval,
            });
        }
        trained.push(TrainedLevel {
            train_noise: level,
            curve: out.curve,
            clean_accuracy: clean.mean,
        });
    }
    Ok(SweepResult {
        train_indices: split.train_indices,
        test_indices: split.test_indices,
        trained,
        cells,
    })
}
