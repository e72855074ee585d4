//! A self-contained convolutional network engine.
//!
//! Two architectures are supported: variant (a) for 100x100 inputs with five
//! convolutional groups, and variant (b) for 45x45 inputs with the first
//! four groups. Group channel plans are (2x64, 2x128, 3x256, 3x512, 3x512),
//! every kernel 3x3 stride 1 with same-padding, every pool 2x2 stride 2.
//! Three fully connected layers (4096, 1000, 200) feed a final projection
//! onto the class logits and a softmax. A `width_scale` factor shrinks all
//! channel and fc widths proportionally for CPU-scale runs.
//!
//! The engine is 8-byte floating point throughout and bit-deterministic for
//! a fixed seed: batch gradients accumulate in sample order regardless of
//! worker count.

mod layers;
mod tensor;

pub use layers::{
    adam_step, conv2d, conv2d_backward, fully_connected, fully_connected_backward, maxpool2,
    maxpool2_backward, relu, relu_backward, softmax, softmax_cross_entropy, AdamConfig, AdamState,
    ConvParams, FcParams,
};
pub use tensor::Tensor;

use crate::sampling::LandscapeImage;
use crate::seeding::derive_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("channel mismatch: layer expects {expected}, input has {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("shape mismatch: expected length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("input side mismatch: network expects {expected}, image is {got}")]
    SideMismatch { expected: usize, got: usize },
    #[error("spatial side {0} too small to pool")]
    SideTooSmall(usize),
    #[error("target class {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },
    #[error("invalid architecture: {0}")]
    Config(String),
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which convolutional stack to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Five conv groups; designed for 100x100 inputs.
    A,
    /// First four groups only; designed for 45x45 inputs.
    B,
}

impl Variant {
    pub fn tag(self) -> char {
        match self {
            Variant::A => 'a',
            Variant::B => 'b',
        }
    }

    pub fn from_tag(t: char) -> Option<Self> {
        match t {
            'a' => Some(Variant::A),
            'b' => Some(Variant::B),
            _ => None,
        }
    }
}

const GROUPS_A: &[(usize, usize)] = &[(2, 64), (2, 128), (3, 256), (3, 512), (3, 512)];
const FC_SIZES: &[usize] = &[4096, 1000, 200];

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureConfig {
    pub variant: Variant,
    pub input_side: usize,
    pub num_classes: usize,
    /// Width shrink factor in (0, 1]; 1 is the full published width.
    pub width_scale: f64,
}

impl ArchitectureConfig {
    pub fn new(variant: Variant, input_side: usize, num_classes: usize, width_scale: f64) -> Self {
        ArchitectureConfig { variant, input_side, num_classes, width_scale }
    }

    fn scaled(&self, base: usize) -> usize {
        ((base as f64 * self.width_scale).round() as usize).max(1)
    }

    /// (conv layer count, scaled output channels) per group.
    pub fn conv_groups(&self) -> Vec<(usize, usize)> {
        let count = match self.variant {
            Variant::A => 5,
            Variant::B => 4,
        };
        GROUPS_A[..count].iter().map(|&(n, ch)| (n, self.scaled(ch))).collect()
    }

    /// Scaled fully connected widths (before the class projection).
    pub fn fc_sizes(&self) -> Vec<usize> {
        FC_SIZES.iter().map(|&s| self.scaled(s)).collect()
    }

    /// Spatial side after each pooling stage, starting from the input.
    pub fn spatial_chain(&self) -> Vec<usize> {
        let mut chain = vec![self.input_side];
        let mut side = self.input_side;
        for _ in 0..self.conv_groups().len() {
            side /= 2;
            chain.push(side);
        }
        chain
    }

    /// Length of the flattened feature map entering the first fc layer.
    pub fn flatten_len(&self) -> usize {
        let side = *self.spatial_chain().last().unwrap();
        let channels = self.conv_groups().last().unwrap().1;
        side * side * channels
    }

    fn validate(&self) -> Result<(), NetError> {
        if !(self.width_scale > 0.0 && self.width_scale <= 1.0) {
            return Err(NetError::Config(format!(
                "width_scale must be in (0, 1], got {}",
                self.width_scale
            )));
        }
        if self.num_classes < 2 {
            return Err(NetError::Config("need at least 2 classes".into()));
        }
        let chain = self.spatial_chain();
        // every pool needs side >= 2, so nothing may collapse to 0
        for (i, &side) in chain.iter().enumerate().skip(1) {
            if side == 0 {
                return Err(NetError::Config(format!(
                    "input side {} collapses to 0 after {} pools",
                    self.input_side, i
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Layer {
    Conv(ConvParams),
    Relu,
    Pool,
    Flatten,
    Fc(FcParams),
}

/// Adam moments for one parameterized layer.
#[derive(Debug, Clone, PartialEq)]
struct LayerMoments {
    weights: AdamState,
    bias: AdamState,
}

/// A layer stack plus its training state.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: ArchitectureConfig,
    layers: Vec<Layer>,
    moments: Vec<Option<LayerMoments>>,
    step: u64,
}

/// Weight and bias gradients of one parameterized layer.
pub type ParamGrads = (Vec<f64>, Vec<f64>);

/// Per-layer parameter gradients, parallel to the layer stack.
#[derive(Debug, Clone)]
pub struct NetGrads {
    grads: Vec<Option<ParamGrads>>,
}

impl NetGrads {
    fn zeros_like(net: &Network) -> Self {
        NetGrads {
            grads: net
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Conv(p) => Some((vec![0.0; p.weights.len()], vec![0.0; p.bias.len()])),
                    Layer::Fc(p) => Some((vec![0.0; p.weights.len()], vec![0.0; p.bias.len()])),
                    _ => None,
                })
                .collect(),
        }
    }

    fn add(&mut self, other: &NetGrads) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            if let (Some((aw, ab)), Some((bw, bb))) = (a.as_mut(), b.as_ref()) {
                for (x, y) in aw.iter_mut().zip(bw) {
                    *x += y;
                }
                for (x, y) in ab.iter_mut().zip(bb) {
                    *x += y;
                }
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            for x in g.0.iter_mut() {
                *x *= factor;
            }
            for x in g.1.iter_mut() {
                *x *= factor;
            }
        }
    }

    /// Scales every gradient entry; the deliberately-wrong-gradient probe in
    /// the verification harness uses this.
    pub fn scale_all(&mut self, factor: f64) {
        self.scale(factor);
    }
}

/// Builds a seeded, He-initialized network. Initial weights are rounded to
/// f32-representable values so a freshly built network survives the 4-byte
/// checkpoint format bit-exactly.
pub fn build_network(config: &ArchitectureConfig, seed: u64) -> Result<Network, NetError> {
    config.validate()?;
    let mut rng = derive_rng("net-init", &[seed]);
    let mut layers = Vec::new();
    let mut in_ch = 1usize;
    for (count, out_ch) in config.conv_groups() {
        for _ in 0..count {
            layers.push(Layer::Conv(init_conv(in_ch, out_ch, &mut rng)));
            layers.push(Layer::Relu);
            in_ch = out_ch;
        }
        layers.push(Layer::Pool);
    }
    layers.push(Layer::Flatten);
    let mut in_dim = config.flatten_len();
    for width in config.fc_sizes() {
        layers.push(Layer::Fc(init_fc(in_dim, width, &mut rng)));
        layers.push(Layer::Relu);
        in_dim = width;
    }
    // no activation between the last hidden fc and the class projection
    layers.pop();
    layers.push(Layer::Fc(init_fc(in_dim, config.num_classes, &mut rng)));

    let moments = layers
        .iter()
        .map(|l| match l {
            Layer::Conv(p) => Some(LayerMoments {
                weights: AdamState::zeros(p.weights.len()),
                bias: AdamState::zeros(p.bias.len()),
            }),
            Layer::Fc(p) => Some(LayerMoments {
                weights: AdamState::zeros(p.weights.len()),
                bias: AdamState::zeros(p.bias.len()),
            }),
            _ => None,
        })
        .collect();
    Ok(Network { config: config.clone(), layers, moments, step: 0 })
}

fn he_draw(rng: &mut impl Rng, fan_in: usize) -> f64 {
    let std = (2.0 / fan_in as f64).sqrt();
    let v: f64 = rng.sample(StandardNormal);
    (v * std) as f32 as f64
}

fn init_conv(in_ch: usize, out_ch: usize, rng: &mut impl Rng) -> ConvParams {
    let fan_in = 9 * in_ch;
    ConvParams {
        in_ch,
        out_ch,
        weights: (0..9 * in_ch * out_ch).map(|_| he_draw(rng, fan_in)).collect(),
        bias: vec![0.0; out_ch],
    }
}

fn init_fc(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> FcParams {
    FcParams {
        in_dim,
        out_dim,
        weights: (0..in_dim * out_dim).map(|_| he_draw(rng, in_dim)).collect(),
        bias: vec![0.0; out_dim],
    }
}

impl Layer {
    fn forward(&self, input: &Tensor) -> Result<Tensor, NetError> {
        match self {
            Layer::Conv(p) => conv2d(input, p),
            Layer::Relu => Ok(relu(input)),
            Layer::Pool => maxpool2(input),
            Layer::Flatten => Ok(Tensor::flat(input.data.clone())),
            Layer::Fc(p) => Ok(Tensor::flat(fully_connected(&input.data, p)?)),
        }
    }

    fn backward(&self, input: &Tensor, grad_out: &Tensor) -> (Tensor, Option<ParamGrads>) {
        match self {
            Layer::Conv(p) => {
                let (gin, gw, gb) = conv2d_backward(input, p, grad_out);
                (gin, Some((gw, gb)))
            }
            Layer::Relu => (relu_backward(input, grad_out), None),
            Layer::Pool => (maxpool2_backward(input, grad_out), None),
            Layer::Flatten => (
                Tensor { h: input.h, w: input.w, c: input.c, data: grad_out.data.clone() },
                None,
            ),
            Layer::Fc(p) => {
                let (gin, gw, gb) = fully_connected_backward(&input.data, p, &grad_out.data);
                (Tensor::flat(gin), Some((gw, gb)))
            }
        }
    }
}

impl Network {
    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Conv(p) => p.weights.len() + p.bias.len(),
                Layer::Fc(p) => p.weights.len() + p.bias.len(),
                _ => 0,
            })
            .sum()
    }

    fn check_input(&self, img: &LandscapeImage) -> Result<(), NetError> {
        if img.side != self.config.input_side {
            return Err(NetError::SideMismatch { expected: self.config.input_side, got: img.side });
        }
        Ok(())
    }

    fn logits(&self, input: Tensor) -> Result<Tensor, NetError> {
        let mut act = input;
        for layer in &self.layers {
            act = layer.forward(&act)?;
        }
        Ok(act)
    }

    /// Class probabilities for one image.
    pub fn forward(&self, img: &LandscapeImage) -> Result<Vec<f64>, NetError> {
        self.check_input(img)?;
        let logits = self.logits(Tensor::from_image(img))?;
        Ok(softmax(&logits.data))
    }

    /// Index of the most probable class.
    pub fn predict(&self, img: &LandscapeImage) -> Result<usize, NetError> {
        let probs = self.forward(img)?;
        Ok(argmax(&probs))
    }

    /// Loss and parameter gradients for one (image, label) pair.
    fn backprop(&self, input: &Tensor, target: usize) -> Result<(f64, NetGrads), NetError> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.clone());
        for layer in &self.layers {
            let next = layer.forward(acts.last().unwrap())?;
            acts.push(next);
        }
        let logits = acts.last().unwrap();
        let (loss, grad_logits) = softmax_cross_entropy(&logits.data, target)?;
        let mut grad = Tensor::flat(grad_logits);
        let mut grads = NetGrads { grads: vec![None; self.layers.len()] };
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (gin, gparams) = layer.backward(&acts[i], &grad);
            grads.grads[i] = gparams;
            grad = gin;
        }
        Ok((loss, grads))
    }

    /// Loss only (used by the finite-difference oracle).
    fn loss_of(&self, input: &Tensor, target: usize) -> Result<f64, NetError> {
        let logits = self.logits(input.clone())?;
        Ok(softmax_cross_entropy(&logits.data, target)?.0)
    }

    fn apply_gradients(&mut self, grads: &NetGrads, adam: &AdamConfig) {
        self.step += 1;
        let t = self.step;
        for (layer, (moments, g)) in self
            .layers
            .iter_mut()
            .zip(self.moments.iter_mut().zip(&grads.grads))
        {
            let (Some(m), Some((gw, gb))) = (moments.as_mut(), g.as_ref()) else {
                continue;
            };
            match layer {
                Layer::Conv(p) => {
                    adam_step(&mut p.weights, gw, &mut m.weights, t, adam);
                    adam_step(&mut p.bias, gb, &mut m.bias, t, adam);
                }
                Layer::Fc(p) => {
                    adam_step(&mut p.weights, gw, &mut m.weights, t, adam);
                    adam_step(&mut p.bias, gb, &mut m.bias, t, adam);
                }
                _ => {}
            }
        }
    }

    // --- parameter indexing used by the checkpoint format and grad_check ---

    fn param_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Conv(_) | Layer::Fc(_)))
            .map(|(i, _)| i)
            .collect()
    }

    fn layer_params(&self, layer_idx: usize) -> (&[f64], &[f64]) {
        match &self.layers[layer_idx] {
            Layer::Conv(p) => (&p.weights, &p.bias),
            Layer::Fc(p) => (&p.weights, &p.bias),
            _ => unreachable!("not a parameterized layer"),
        }
    }

    fn layer_params_mut(&mut self, layer_idx: usize) -> (&mut [f64], &mut [f64]) {
        match &mut self.layers[layer_idx] {
            Layer::Conv(p) => (&mut p.weights, &mut p.bias),
            Layer::Fc(p) => (&mut p.weights, &mut p.bias),
            _ => unreachable!("not a parameterized layer"),
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// One labeled training/validation sample.
pub type Sample = (Tensor, usize);

/// Fraction of `set` classified correctly.
pub fn accuracy(net: &Network, set: &[Sample]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let correct: usize = set
        .par_iter()
        .map(|(img, label)| {
            let logits = net.logits(img.clone()).expect("shape-checked sample");
            usize::from(argmax(&logits.data) == *label)
        })
        .sum();
    correct as f64 / set.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 150,
            batch_size: 60,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Per-epoch training record; serialized as the history CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Samples whose per-sample gradients are computed concurrently before the
/// in-order reduction. Constant so the summation order never depends on the
/// worker count.
const GRAD_CHUNK: usize = 8;

fn batch_gradients(net: &Network, batch: &[&Sample]) -> (f64, NetGrads) {
    let mut total = NetGrads::zeros_like(net);
    let mut loss_sum = 0.0;
    for chunk in batch.chunks(GRAD_CHUNK) {
        let partials: Vec<(f64, NetGrads)> = chunk
            .par_iter()
            .map(|(img, label)| net.backprop(img, *label).expect("shape-checked sample"))
            .collect();
        for (loss, g) in &partials {
            loss_sum += loss;
            total.add(g);
        }
    }
    total.scale(1.0 / batch.len() as f64);
    (loss_sum, total)
}

/// Iterates seeded shuffled epochs, evaluating validation accuracy after
/// each one, and returns the checkpoint with the highest validation
/// accuracy (ties keep the earliest epoch) plus the full history.
pub fn train(
    net: &mut Network,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<(Network, Vec<EpochStats>), NetError> {
    if train_set.is_empty() {
        return Err(NetError::EmptySplit("train"));
    }
    if val_set.is_empty() {
        return Err(NetError::EmptySplit("validation"));
    }
    for (img, label) in train_set.iter().chain(val_set) {
        if img.h != net.config.input_side || img.w != net.config.input_side || img.c != 1 {
            return Err(NetError::SideMismatch { expected: net.config.input_side, got: img.h });
        }
        if *label >= net.config.num_classes {
            return Err(NetError::TargetOutOfRange {
                target: *label,
                classes: net.config.num_classes,
            });
        }
    }
    let batch_size = cfg.batch_size.max(1);
    let adam = cfg.adam();
    let mut rng = derive_rng("train-shuffle", &[cfg.seed]);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Network)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch_idx in order.chunks(batch_size) {
            let batch: Vec<&Sample> = batch_idx.iter().map(|&i| &train_set[i]).collect();
            let (batch_loss, grads) = batch_gradients(net, &batch);
            loss_sum += batch_loss;
            net.apply_gradients(&grads, &adam);
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_accuracy = accuracy(net, val_set);
        history.push(EpochStats { epoch, train_loss, val_accuracy });
        let improved = match &best {
            Some((acc, _)) => val_accuracy > *acc,
            None => true,
        };
        if improved {
            best = Some((val_accuracy, net.clone()));
        }
    }
    let (_, best_net) = best.expect("epochs >= 1 produces a checkpoint");
    Ok((best_net, history))
}

/// Runs `steps` full-batch updates on one tiny set; the overfit sanity oracle.
pub fn overfit_steps(
    net: &mut Network,
    set: &[Sample],
    steps: usize,
    adam: &AdamConfig,
) -> Result<f64, NetError> {
    if set.is_empty() {
        return Err(NetError::EmptySplit("train"));
    }
    let batch: Vec<&Sample> = set.iter().collect();
    let mut last = f64::INFINITY;
    for _ in 0..steps {
        let (loss_sum, grads) = batch_gradients(net, &batch);
        net.apply_gradients(&grads, adam);
        last = loss_sum / set.len() as f64;
        if last < 1e-3 {
            break;
        }
    }
    Ok(last)
}

// --- checkpoint format -----------------------------------------------------

const CKPT_MAGIC: &[u8; 4] = b"LSNN";
const CKPT_VERSION: u16 = 1;

/// Writes `LSNN` / version / architecture block / raw little-endian 4-byte
/// float parameters in layer order (weights then bias per layer). Parameters
/// are rounded to f32 on write; Adam state is not persisted.
pub fn save_checkpoint(net: &Network, path: &Path) -> Result<(), NetError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CKPT_MAGIC);
    buf.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    buf.push(match net.config.variant {
        Variant::A => 0,
        Variant::B => 1,
    });
    buf.extend_from_slice(&(net.config.input_side as u16).to_le_bytes());
    buf.extend_from_slice(&(net.config.num_classes as u16).to_le_bytes());
    buf.extend_from_slice(&net.config.width_scale.to_le_bytes());
    for idx in net.param_layers() {
        let (w, b) = net.layer_params(idx);
        for &v in w.iter().chain(b) {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let io_err = |source| NetError::Io { path: path.display().to_string(), source };
    let tmp = path.with_extension("lsnn.tmp");
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(&buf).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// Rebuilds a network from a checkpoint file.
pub fn load_checkpoint(path: &Path) -> Result<Network, NetError> {
    let ck_err = |reason: String| NetError::Checkpoint { path: path.display().to_string(), reason };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| NetError::Io { path: path.display().to_string(), source })?;
    if bytes.len() < 19 {
        return Err(ck_err("truncated header".into()));
    }
    if &bytes[0..4] != CKPT_MAGIC {
        return Err(ck_err("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != CKPT_VERSION {
        return Err(ck_err(format!("unsupported version {version}")));
    }
    let variant = match bytes[6] {
        0 => Variant::A,
        1 => Variant::B,
        v => return Err(ck_err(format!("unknown variant byte {v}"))),
    };
    let input_side = u16::from_le_bytes([bytes[7], bytes[8]]) as usize;
    let num_classes = u16::from_le_bytes([bytes[9], bytes[10]]) as usize;
    let width_scale = f64::from_le_bytes(bytes[11..19].try_into().unwrap());
    let config = ArchitectureConfig::new(variant, input_side, num_classes, width_scale);
    let mut net = build_network(&config, 0).map_err(|e| ck_err(e.to_string()))?;
    let expected = 19 + net.num_parameters() * 4;
    if bytes.len() != expected {
        return Err(ck_err(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut offset = 19;
    for idx in net.param_layers() {
        let (w, b) = net.layer_params_mut(idx);
        for v in w.iter_mut().chain(b.iter_mut()) {
            let chunk: [u8; 4] = bytes[offset..offset + 4].try_into().unwrap();
            *v = f32::from_le_bytes(chunk) as f64;
            offset += 4;
        }
    }
    net.step = 0;
    Ok(net)
}

// --- gradient verification harness ------------------------------------------

/// Outcome of a finite-difference sweep over randomly chosen parameters.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
}

const FD_STEP: f64 = 1e-5;
/// Relative-error denominator floor; keeps finite-difference noise on
/// near-zero gradients from registering as disagreement.
const FD_FLOOR: f64 = 1e-4;

/// Central-difference check of the analytic gradients on up to `samples`
/// randomly chosen parameters (8-byte precision, h = 1e-5).
pub fn grad_check(
    net: &mut Network,
    img: &LandscapeImage,
    target: usize,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, NetError> {
    net.check_input(img)?;
    let input = Tensor::from_image(img);
    let (_, analytic) = net.backprop(&input, target)?;
    grad_check_against(net, &input, target, &analytic, samples, seed)
}

/// Same sweep against a caller-supplied analytic gradient; lets tests verify
/// the harness flags deliberately corrupted gradients.
pub fn grad_check_against(
    net: &mut Network,
    input: &Tensor,
    target: usize,
    analytic: &NetGrads,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, NetError> {
    let mut rng = derive_rng("grad-check", &[seed]);
    let param_layers = net.param_layers();
    let mut report = GradCheckReport { checked: 0, max_rel_err: 0.0 };
    for _ in 0..samples {
        let layer_idx = param_layers[rng.random_range(0..param_layers.len())];
        let (w, b) = net.layer_params(layer_idx);
        let (wlen, blen) = (w.len(), b.len());
        let flat = rng.random_range(0..wlen + blen);
        let a = {
            let (gw, gb) = analytic.grads[layer_idx].as_ref().expect("param layer");
            if flat < wlen {
                gw[flat]
            } else {
                gb[flat - wlen]
            }
        };
        let read = |net: &mut Network| -> f64 {
            let (w, b) = net.layer_params_mut(layer_idx);
            if flat < w.len() {
                w[flat]
            } else {
                b[flat - w.len()]
            }
        };
        let write = |net: &mut Network, v: f64| {
            let (w, b) = net.layer_params_mut(layer_idx);
            if flat < w.len() {
                w[flat] = v;
            } else {
                let i = flat - w.len();
                b[i] = v;
            }
        };
        let orig = read(net);
        write(net, orig + FD_STEP);
        let plus = net.loss_of(input, target)?;
        write(net, orig - FD_STEP);
        let minus = net.loss_of(input, target)?;
        write(net, orig);
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
        report.checked += 1;
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
        }
    }
    Ok(report)
}

/// Analytic gradients for one labeled image; public for the harness tests.
pub fn sample_gradients(
    net: &Network,
    img: &LandscapeImage,
    target: usize,
) -> Result<(f64, NetGrads), NetError> {
    net.check_input(img)?;
    net.backprop(&Tensor::from_image(img), target)
}
