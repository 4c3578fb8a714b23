//! The small CNN: two Winograd convolutions with ReLU, a 2x2 mean pool and a
//! dense classifier.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonic::{AnalogEwmm, DeviceParams};
use crate::seed;
use crate::tensor::{FeatureMap, FilterBank, Mat};
use crate::winograd::{make_plan, winograd_conv2d, winograd_conv2d_with, TransformedFilters, WinogradPlan};

use super::noise::SwingScope;

const FILTER_EDGE: usize = 3;
/// Number of noisy stages: conv1 activation, conv2 activation, logits.
pub const STAGES: usize = 3;

/// Layer sizes of a [`SmallCnn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arch {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub classes: usize,
    /// Output tile edge of the Winograd plan.
    pub m: usize,
}

impl Arch {
    /// 1x8x8 input, 8 and 16 filters, 10 classes.
    pub fn digits() -> Self {
        Arch {
            channels: 1,
            height: 8,
            width: 8,
            conv1_filters: 8,
            conv2_filters: 16,
            classes: 10,
            m: 4,
        }
    }

    /// 1x6x6 input, 2 and 2 filters, 3 classes.
    pub fn micro() -> Self {
        Arch {
            channels: 1,
            height: 6,
            width: 6,
            conv1_filters: 2,
            conv2_filters: 2,
            classes: 3,
            m: 4,
        }
    }

    fn conv2_extent(&self) -> (usize, usize) {
        (self.height.saturating_sub(4), self.width.saturating_sub(4))
    }

    pub fn pooled_extent(&self) -> (usize, usize) {
        let (h, w) = self.conv2_extent();
        (h / 2, w / 2)
    }

    /// Length of the classifier input.
    pub fn features(&self) -> usize {
        let (h, w) = self.pooled_extent();
        self.conv2_filters * h * w
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.conv1_filters == 0 || self.conv2_filters == 0 || self.classes < 2 {
            return Err(Error::Config(
                "arch: channels and filter counts must be >= 1 and classes >= 2".into(),
            ));
        }
        let (h, w) = self.pooled_extent();
        if h == 0 || w == 0 {
            return Err(Error::Config(format!(
                "arch: {}x{} input leaves nothing after two 3x3 convolutions and pooling",
                self.height, self.width
            )));
        }
        make_plan(self.m, FILTER_EDGE)?;
        Ok(())
    }
}

/// Absolute output-noise levels and the seed for one forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardNoise {
    pub sigma: [f64; STAGES],
    pub seed: u64,
}

impl ForwardNoise {
    pub fn clean() -> Self {
        ForwardNoise {
            sigma: [0.0; STAGES],
            seed: 0,
        }
    }
}

/// Intermediate values kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub z1: FeatureMap,
    pub a1: FeatureMap,
    pub z2: FeatureMap,
    pub a2: FeatureMap,
    pub features: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Parameter gradients, laid out like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv1: Vec<f64>,
    pub bias1: Vec<f64>,
    pub conv2: Vec<f64>,
    pub bias2: Vec<f64>,
    pub dense: Vec<f64>,
    pub dense_bias: Vec<f64>,
}

impl Gradients {
    /// Same order as [`SmallCnn::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        [
            &self.conv1,
            &self.bias1,
            &self.conv2,
            &self.bias2,
            &self.dense,
            &self.dense_bias,
        ]
        .into_iter()
        .flat_map(|v| v.iter().copied())
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallCnn {
    pub arch: Arch,
    plan: WinogradPlan,
    pub conv1: FilterBank,
    pub bias1: Vec<f64>,
    pub conv2: FilterBank,
    pub bias2: Vec<f64>,
    /// `classes x features`.
    pub dense: Mat,
    pub dense_bias: Vec<f64>,
    /// Calibrated max |output| per noisy stage.
    pub swing: [f64; STAGES],
}

fn gaussian_fill(count: usize, sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    (0..count).map(|_| normal.sample(rng)).collect()
}

fn add_noise(values: &mut [f64], sigma: f64, noise_seed: u64) {
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        let mut rng = seed::rng(noise_seed);
        for v in values {
            *v += normal.sample(&mut rng);
        }
    }
}

fn relu(z: &FeatureMap) -> FeatureMap {
    let mut a = z.clone();
    for v in a.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    a
}

fn mean_pool(a: &FeatureMap) -> Vec<f64> {
    let (ph, pw) = (a.height() / 2, a.width() / 2);
    let mut out = Vec::with_capacity(a.channels() * ph * pw);
    for c in 0..a.channels() {
        for i in 0..ph {
            for j in 0..pw {
                let s = a.get(c, 2 * i, 2 * j)
                    + a.get(c, 2 * i, 2 * j + 1)
                    + a.get(c, 2 * i + 1, 2 * j)
                    + a.get(c, 2 * i + 1, 2 * j + 1);
                out.push(0.25 * s);
            }
        }
    }
    out
}

/// Mean cross-entropy pieces: `(loss, softmax - onehot)`.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() + max - logits[label];
    let mut d: Vec<f64> = exps.iter().map(|e| e / total).collect();
    d[label] -= 1.0;
    (loss, d)
}

/// Index of the largest score; the first one wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Gradients of `z = correlate(x, f) + b` with respect to `f`, `b` and `x`.
fn conv_backward(x: &FeatureMap, f: &FilterBank, dz: &FeatureMap, want_dx: bool) -> (Vec<f64>, Vec<f64>, Option<FeatureMap>) {
    let r = f.edge();
    let (kc, cc) = (f.count(), f.channels());
    let (oh, ow) = (dz.height(), dz.width());
    let mut df = vec![0.0; kc * cc * r * r];
    let mut db = vec![0.0; kc];
    let mut dx = want_dx.then(|| FeatureMap::zeros(cc, x.height(), x.width()));
    for k in 0..kc {
        for y in 0..oh {
            for xo in 0..ow {
                let g = dz.get(k, y, xo);
                if g == 0.0 {
                    continue;
                }
                db[k] += g;
                for c in 0..cc {
                    for u in 0..r {
                        for v in 0..r {
                            df[((k * cc + c) * r + u) * r + v] += g * x.get(c, y + u, xo + v);
                            if let Some(dx) = dx.as_mut() {
                                dx.add(c, y + u, xo + v, g * f.get(k, c, u, v));
                            }
                        }
                    }
                }
            }
        }
    }
    (df, db, dx)
}

impl SmallCnn {
    /// He-initialized convolutions, scaled-normal classifier, zero biases.
    pub fn new(arch: Arch, init_seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seed::rng(init_seed);
        let r2 = FILTER_EDGE * FILTER_EDGE;
        let c1 = FilterBank::from_vec(
            arch.conv1_filters,
            arch.channels,
            FILTER_EDGE,
            gaussian_fill(arch.conv1_filters * arch.channels * r2, (2.0 / (arch.channels * r2) as f64).sqrt(), &mut rng),
        )?;
        let c2 = FilterBank::from_vec(
            arch.conv2_filters,
            arch.conv1_filters,
            FILTER_EDGE,
            gaussian_fill(
                arch.conv2_filters * arch.conv1_filters * r2,
                (2.0 / (arch.conv1_filters * r2) as f64).sqrt(),
                &mut rng,
            ),
        )?;
        let features = arch.features();
        let dense = Mat::from_vec(
            arch.classes,
            features,
            gaussian_fill(arch.classes * features, (1.0 / features as f64).sqrt(), &mut rng),
        )?;
        Ok(SmallCnn {
            plan: make_plan(arch.m, FILTER_EDGE)?,
            arch,
            conv1: c1,
            bias1: vec![0.0; arch.conv1_filters],
            conv2: c2,
            bias2: vec![0.0; arch.conv2_filters],
            dense,
            dense_bias: vec![0.0; arch.classes],
            swing: [0.0; STAGES],
        })
    }

    pub fn plan(&self) -> &WinogradPlan {
        &self.plan
    }

    fn conv(
        &self,
        x: &FeatureMap,
        f: &FilterBank,
        bias: &[f64],
        stage: u64,
        noise_seed: u64,
        dev: Option<&DeviceParams>,
    ) -> Result<FeatureMap> {
        let mut z = match dev {
            None => winograd_conv2d(x, f, &self.plan)?,
            Some(d) => {
                let path = AnalogEwmm::new(d.clone(), seed::derive(noise_seed, &[stage, 1]));
                winograd_conv2d_with(x, &TransformedFilters::new(&self.plan, f)?, &self.plan, &path)?
            }
        };
        let plane = z.height() * z.width();
        for (k, chunk) in z.as_mut_slice().chunks_mut(plane).enumerate() {
            for v in chunk {
                *v += bias[k];
            }
        }
        Ok(z)
    }

    /// Forward pass keeping intermediates. Output noise is added after each
    /// activation and to the logits; `dev` routes the element-wise products
    /// through the analog path.
    pub fn trace(&self, x: &FeatureMap, noise: &ForwardNoise, dev: Option<&DeviceParams>) -> Result<Trace> {
        let a = &self.arch;
        if (x.channels(), x.height(), x.width()) != (a.channels, a.height, a.width) {
            return Err(Error::dim(format!(
                "model expects {}x{}x{} input, got {}x{}x{}",
                a.channels,
                a.height,
                a.width,
                x.channels(),
                x.height(),
                x.width()
            )));
        }
        let z1 = self.conv(x, &self.conv1, &self.bias1, 0, noise.seed, dev)?;
        let mut a1 = relu(&z1);
        add_noise(a1.as_mut_slice(), noise.sigma[0], seed::derive(noise.seed, &[0]));
        let z2 = self.conv(&a1, &self.conv2, &self.bias2, 1, noise.seed, dev)?;
        let mut a2 = relu(&z2);
        add_noise(a2.as_mut_slice(), noise.sigma[1], seed::derive(noise.seed, &[1]));
        let features = mean_pool(&a2);
        let mut logits: Vec<f64> = (0..a.classes)
            .map(|k| {
                self.dense.row(k).iter().zip(&features).map(|(w, p)| w * p).sum::<f64>() + self.dense_bias[k]
            })
            .collect();
        add_noise(&mut logits, noise.sigma[2], seed::derive(noise.seed, &[2]));
        Ok(Trace {
            z1,
            a1,
            z2,
            a2,
            features,
            logits,
        })
    }

    /// Class scores.
    pub fn forward(&self, x: &FeatureMap, noise: &ForwardNoise, dev: Option<&DeviceParams>) -> Result<Vec<f64>> {
        Ok(self.trace(x, noise, dev)?.logits)
    }

    pub fn predict(&self, x: &FeatureMap) -> Result<usize> {
        Ok(argmax(&self.forward(x, &ForwardNoise::clean(), None)?))
    }

    /// Cross-entropy loss and its parameter gradients at `trace`. Injected
    /// noise is treated as a constant.
    pub fn backward(&self, x: &FeatureMap, trace: &Trace, label: usize) -> Result<(f64, Gradients)> {
        if label >= self.arch.classes {
            return Err(Error::domain(format!("label {label} outside 0..{}", self.arch.classes)));
        }
        let (loss, ds) = cross_entropy(&trace.logits, label);
        let features = trace.features.len();

        let mut dense = vec![0.0; self.arch.classes * features];
        let mut dp = vec![0.0; features];
        for (k, &g) in ds.iter().enumerate() {
            let row = self.dense.row(k);
            for j in 0..features {
                dense[k * features + j] = g * trace.features[j];
                dp[j] += g * row[j];
            }
        }

        let mut dz2 = FeatureMap::zeros(trace.z2.channels(), trace.z2.height(), trace.z2.width());
        let (ph, pw) = self.arch.pooled_extent();
        for c in 0..trace.z2.channels() {
            for i in 0..ph {
                for j in 0..pw {
                    let g = 0.25 * dp[(c * ph + i) * pw + j];
                    for (y, xx) in [(2 * i, 2 * j), (2 * i, 2 * j + 1), (2 * i + 1, 2 * j), (2 * i + 1, 2 * j + 1)] {
                        if trace.z2.get(c, y, xx) > 0.0 {
                            dz2.set(c, y, xx, g);
                        }
                    }
                }
            }
        }
        let (conv2, bias2, da1) = conv_backward(&trace.a1, &self.conv2, &dz2, true);
        let mut dz1 = da1.expect("requested");
        for (g, &z) in dz1.as_mut_slice().iter_mut().zip(trace.z1.as_slice()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        let (conv1, bias1, _) = conv_backward(x, &self.conv1, &dz1, false);
        Ok((
            loss,
            Gradients {
                conv1,
                bias1,
                conv2,
                bias2,
                dense,
                dense_bias: ds,
            },
        ))
    }

    pub fn parameter_count(&self) -> usize {
        self.conv1.as_slice().len()
            + self.bias1.len()
            + self.conv2.as_slice().len()
            + self.bias2.len()
            + self.dense.as_slice().len()
            + self.dense_bias.len()
    }

    /// All parameters: conv1, bias1, conv2, bias2, dense, dense bias.
    pub fn parameters(&self) -> Vec<f64> {
        [
            self.conv1.as_slice(),
            &self.bias1,
            self.conv2.as_slice(),
            &self.bias2,
            self.dense.as_slice(),
            &self.dense_bias,
        ]
        .into_iter()
        .flat_map(|v| v.iter().copied())
        .collect()
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::dim(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("parameters must be finite"));
        }
        let mut rest = values;
        for dst in [
            self.conv1.as_mut_slice(),
            &mut self.bias1,
            self.conv2.as_mut_slice(),
            &mut self.bias2,
            self.dense.as_mut_slice(),
            &mut self.dense_bias,
        ] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Copy with Gaussian noise of sigma `frac * max|w|` on each layer's
    /// weights. Biases are left alone.
    pub fn perturbed(&self, frac: f64, noise_seed: u64) -> SmallCnn {
        let mut out = self.clone();
        if frac <= 0.0 {
            return out;
        }
        for (i, w) in [out.conv1.as_mut_slice(), out.conv2.as_mut_slice(), out.dense.as_mut_slice()]
            .into_iter()
            .enumerate()
        {
            let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            add_noise(w, frac * scale, seed::derive(noise_seed, &[i as u64]));
        }
        out
    }

    /// Sets [`swing`](Self::swing) to the max |output| of each noisy stage
    /// over clean forward passes of `images`.
    pub fn calibrate(&mut self, images: &[FeatureMap]) -> Result<()> {
        if images.is_empty() {
            return Err(Error::domain("calibration batch is empty"));
        }
        let mut swing = [0.0f64; STAGES];
        for x in images {
            let t = self.trace(x, &ForwardNoise::clean(), None)?;
            for (s, vals) in swing
                .iter_mut()
                .zip([t.a1.as_slice(), t.a2.as_slice(), t.logits.as_slice()])
            {
                *s = vals.iter().fold(*s, |m, v| m.max(v.abs()));
            }
        }
        self.swing = swing;
        Ok(())
    }

    /// Absolute output-noise sigmas for `frac` of the calibrated swing.
    pub fn output_sigmas(&self, frac: f64, scope: SwingScope) -> [f64; STAGES] {
        match scope {
            SwingScope::PerLayer => self.swing.map(|s| frac * s),
            SwingScope::Global => {
                let g = self.swing.iter().copied().fold(0.0, f64::max);
                [frac * g; STAGES]
            }
        }
    }
}
