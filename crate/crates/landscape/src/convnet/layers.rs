//! Layer primitives with exact analytic gradients: 3x3 same-padding
//! convolution, ReLU, 2x2 max pooling, fully connected affine maps,
//! softmax cross-entropy and the Adam update rule.
//!
//! All arithmetic is 8-byte floating point and single-threaded per sample;
//! determinism comes from fixed loop orders.

use super::tensor::Tensor;
use super::NetError;

/// 3x3 kernels, stride 1, zero same-padding. Weight layout is
/// im2col-friendly: index `((ky * 3 + kx) * in_ch + ci) * out_ch + co`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub in_ch: usize,
    pub out_ch: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Affine map; weight layout `i * out_dim + o`.
#[derive(Debug, Clone, PartialEq)]
pub struct FcParams {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

const KSIZE: usize = 3;
const KAREA: usize = KSIZE * KSIZE;

/// Unrolls 3x3 neighborhoods: one row per output pixel, `9 * in_ch` columns.
fn im2col(input: &Tensor) -> Vec<f64> {
    let (h, w, c) = (input.h, input.w, input.c);
    let k = KAREA * c;
    let mut col = vec![0.0; h * w * k];
    for y in 0..h {
        for x in 0..w {
            let row_base = (y * w + x) * k;
            for ky in 0..KSIZE {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..KSIZE {
                    let sx = x as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let src = ((sy as usize) * w + sx as usize) * c;
                    let dst = row_base + (ky * KSIZE + kx) * c;
                    col[dst..dst + c].copy_from_slice(&input.data[src..src + c]);
                }
            }
        }
    }
    col
}

/// Spatial size is preserved; only pooling layers shrink feature maps.
pub fn conv2d(input: &Tensor, p: &ConvParams) -> Result<Tensor, NetError> {
    if input.c != p.in_ch {
        return Err(NetError::ChannelMismatch { expected: p.in_ch, got: input.c });
    }
    let (h, w) = (input.h, input.w);
    let k = KAREA * p.in_ch;
    let col = im2col(input);
    let mut out = Tensor::zeros(h, w, p.out_ch);
    for row in 0..h * w {
        let orow = &mut out.data[row * p.out_ch..(row + 1) * p.out_ch];
        orow.copy_from_slice(&p.bias);
        let crow = &col[row * k..(row + 1) * k];
        for (ki, &a) in crow.iter().enumerate() {
            if a == 0.0 {
                continue; // padding and ReLU zeros dominate; skipping is exact
            }
            let wrow = &p.weights[ki * p.out_ch..(ki + 1) * p.out_ch];
            for (o, &wv) in orow.iter_mut().zip(wrow) {
                *o += a * wv;
            }
        }
    }
    Ok(out)
}

/// Gradients of the convolution w.r.t. input, weights and bias.
pub fn conv2d_backward(
    input: &Tensor,
    p: &ConvParams,
    grad_out: &Tensor,
) -> (Tensor, Vec<f64>, Vec<f64>) {
    debug_assert_eq!(grad_out.c, p.out_ch);
    let (h, w, cin) = (input.h, input.w, input.c);
    let k = KAREA * cin;
    let col = im2col(input);
    let mut grad_w = vec![0.0; p.weights.len()];
    let mut grad_b = vec![0.0; p.out_ch];
    let mut grad_col = vec![0.0; h * w * k];
    for row in 0..h * w {
        let go = &grad_out.data[row * p.out_ch..(row + 1) * p.out_ch];
        for (b, &g) in grad_b.iter_mut().zip(go) {
            *b += g;
        }
        let crow = &col[row * k..(row + 1) * k];
        let gcol_row = &mut grad_col[row * k..(row + 1) * k];
        for ki in 0..k {
            let wrow = &p.weights[ki * p.out_ch..(ki + 1) * p.out_ch];
            let a = crow[ki];
            if a != 0.0 {
                let gw_row = &mut grad_w[ki * p.out_ch..(ki + 1) * p.out_ch];
                for (gw, &g) in gw_row.iter_mut().zip(go) {
                    *gw += a * g;
                }
            }
            let mut acc = 0.0;
            for (&g, &wv) in go.iter().zip(wrow) {
                acc += g * wv;
            }
            gcol_row[ki] = acc;
        }
    }
    // col2im: scatter column gradients back onto the padded input window
    let mut grad_in = Tensor::zeros(h, w, cin);
    for y in 0..h {
        for x in 0..w {
            let row_base = (y * w + x) * k;
            for ky in 0..KSIZE {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..KSIZE {
                    let sx = x as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let dst = ((sy as usize) * w + sx as usize) * cin;
                    let src = row_base + (ky * KSIZE + kx) * cin;
                    for ci in 0..cin {
                        grad_in.data[dst + ci] += grad_col[src + ci];
                    }
                }
            }
        }
    }
    (grad_in, grad_w, grad_b)
}

/// `max(0, x)` elementwise.
pub fn relu(input: &Tensor) -> Tensor {
    Tensor {
        h: input.h,
        w: input.w,
        c: input.c,
        data: input.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

/// Subgradient at 0 is 0.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Tensor {
    Tensor {
        h: input.h,
        w: input.w,
        c: input.c,
        data: input
            .data
            .iter()
            .zip(&grad_out.data)
            .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
            .collect(),
    }
}

/// 2x2 window, stride 2, floor mode: an odd trailing row/column is dropped.
pub fn maxpool2(input: &Tensor) -> Result<Tensor, NetError> {
    if input.h < 2 || input.w < 2 {
        return Err(NetError::SideTooSmall(input.h.min(input.w)));
    }
    let (h2, w2, c) = (input.h / 2, input.w / 2, input.c);
    let mut out = Tensor::zeros(h2, w2, c);
    for y in 0..h2 {
        for x in 0..w2 {
            for ch in 0..c {
                let mut best = input.at(2 * y, 2 * x, ch);
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let v = input.at(2 * y + dy, 2 * x + dx, ch);
                    if v > best {
                        best = v;
                    }
                }
                out.data[(y * w2 + x) * c + ch] = best;
            }
        }
    }
    Ok(out)
}

/// Routes gradients to the argmax of each window; ties resolve to the first
/// element in (0,0), (0,1), (1,0), (1,1) scan order.
pub fn maxpool2_backward(input: &Tensor, grad_out: &Tensor) -> Tensor {
    let (h2, w2, c) = (grad_out.h, grad_out.w, grad_out.c);
    let mut grad_in = Tensor::zeros(input.h, input.w, input.c);
    for y in 0..h2 {
        for x in 0..w2 {
            for ch in 0..c {
                let mut best = input.at(2 * y, 2 * x, ch);
                let mut arg = (0usize, 0usize);
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let v = input.at(2 * y + dy, 2 * x + dx, ch);
                    if v > best {
                        best = v;
                        arg = (dy, dx);
                    }
                }
                let (dy, dx) = arg;
                grad_in.data[((2 * y + dy) * input.w + (2 * x + dx)) * c + ch] +=
                    grad_out.at(y, x, ch);
            }
        }
    }
    grad_in
}

pub fn fully_connected(input: &[f64], p: &FcParams) -> Result<Vec<f64>, NetError> {
    if input.len() != p.in_dim {
        return Err(NetError::ShapeMismatch { expected: p.in_dim, got: input.len() });
    }
    let mut out = p.bias.clone();
    for (i, &a) in input.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let wrow = &p.weights[i * p.out_dim..(i + 1) * p.out_dim];
        for (o, &wv) in out.iter_mut().zip(wrow) {
            *o += a * wv;
        }
    }
    Ok(out)
}

pub fn fully_connected_backward(
    input: &[f64],
    p: &FcParams,
    grad_out: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    debug_assert_eq!(grad_out.len(), p.out_dim);
    let mut grad_w = vec![0.0; p.weights.len()];
    let mut grad_in = vec![0.0; p.in_dim];
    for (i, &a) in input.iter().enumerate() {
        let wrow = &p.weights[i * p.out_dim..(i + 1) * p.out_dim];
        if a != 0.0 {
            let gw_row = &mut grad_w[i * p.out_dim..(i + 1) * p.out_dim];
            for (gw, &g) in gw_row.iter_mut().zip(grad_out) {
                *gw += a * g;
            }
        }
        let mut acc = 0.0;
        for (&g, &wv) in grad_out.iter().zip(wrow) {
            acc += g * wv;
        }
        grad_in[i] = acc;
    }
    (grad_in, grad_w, grad_out.to_vec())
}

/// Numerically stabilized softmax probabilities.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Multiclass cross-entropy `-log p_target` with its gradient w.r.t. the
/// logits, `p - onehot(target)`.
pub fn softmax_cross_entropy(
    logits: &[f64],
    target: usize,
) -> Result<(f64, Vec<f64>), NetError> {
    if target >= logits.len() {
        return Err(NetError::TargetOutOfRange { target, classes: logits.len() });
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() - (logits[target] - max);
    let mut grad: Vec<f64> = exps.into_iter().map(|e| e / sum).collect();
    grad[target] -= 1.0;
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn zeros(len: usize) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len] }
    }
}

/// Standard Adam with bias correction; `t` is the 1-based step counter.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    t: u64,
    cfg: &AdamConfig,
) {
    debug_assert!(t >= 1);
    debug_assert_eq!(params.len(), grads.len());
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::seeding::derive_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_tensor(h: usize, w: usize, c: usize, seed: u64) -> Tensor {
        let mut rng = derive_rng("layer-test", &[seed]);
        Tensor {
            h,
            w,
            c,
            data: (0..h * w * c).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
    }

    #[test]
    fn conv_identity_kernel_passes_input_through() {
        // center tap 1 on the single in->out channel pair
        let input = random_tensor(5, 5, 1, 1);
        let mut weights = vec![0.0; KAREA];
        weights[KSIZE + 1] = 1.0; // (ky=1, kx=1) center tap
        let p = ConvParams { in_ch: 1, out_ch: 1, weights, bias: vec![0.0] };
        let out = conv2d(&input, &p).unwrap();
        assert_eq!(out.data, input.data);
    }

    #[test]
    fn conv_zero_weights_yield_bias() {
        let input = random_tensor(4, 6, 3, 2);
        let p = ConvParams {
            in_ch: 3,
            out_ch: 2,
            weights: vec![0.0; KAREA * 3 * 2],
            bias: vec![0.5, -1.5],
        };
        let out = conv2d(&input, &p).unwrap();
        for row in 0..out.h * out.w {
            assert_eq!(out.data[row * 2], 0.5);
            assert_eq!(out.data[row * 2 + 1], -1.5);
        }
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let input = random_tensor(4, 4, 2, 3);
        let p = ConvParams { in_ch: 3, out_ch: 1, weights: vec![0.0; KAREA * 3], bias: vec![0.0] };
        assert!(matches!(
            conv2d(&input, &p),
            Err(NetError::ChannelMismatch { expected: 3, got: 2 })
        ));
    }

    /// Central-difference oracle for a scalar loss over conv parameters.
    fn conv_loss(input: &Tensor, p: &ConvParams) -> f64 {
        // weight each output so the gradient is not uniform
        conv2d(input, p)
            .unwrap()
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| v * ((i % 7) as f64 - 3.0))
            .sum()
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let input = random_tensor(6, 6, 2, 4);
        let mut rng = derive_rng("conv-grad", &[0]);
        let p = ConvParams {
            in_ch: 2,
            out_ch: 3,
            weights: (0..KAREA * 2 * 3).map(|_| rng.sample(StandardNormal)).collect(),
            bias: (0..3).map(|_| rng.sample(StandardNormal)).collect(),
        };
        let out = conv2d(&input, &p).unwrap();
        let grad_out = Tensor {
            h: out.h,
            w: out.w,
            c: out.c,
            data: (0..out.len()).map(|i| (i % 7) as f64 - 3.0).collect(),
        };
        let (gin, gw, gb) = conv2d_backward(&input, &p, &grad_out);

        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in (0..p.weights.len()).step_by(5) {
            let mut pp = p.clone();
            pp.weights[i] += h;
            let plus = conv_loss(&input, &pp);
            pp.weights[i] -= 2.0 * h;
            let minus = conv_loss(&input, &pp);
            worst = worst.max(rel_err(gw[i], (plus - minus) / (2.0 * h)));
        }
        for i in 0..p.bias.len() {
            let mut pp = p.clone();
            pp.bias[i] += h;
            let plus = conv_loss(&input, &pp);
            pp.bias[i] -= 2.0 * h;
            let minus = conv_loss(&input, &pp);
            worst = worst.max(rel_err(gb[i], (plus - minus) / (2.0 * h)));
        }
        for i in (0..input.len()).step_by(7) {
            let mut ii = input.clone();
            ii.data[i] += h;
            let plus = conv_loss(&ii, &p);
            ii.data[i] -= 2.0 * h;
            let minus = conv_loss(&ii, &p);
            worst = worst.max(rel_err(gin.data[i], (plus - minus) / (2.0 * h)));
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn relu_examples() {
        let t = Tensor::flat(vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&t).data, vec![0.0, 0.0, 2.0]);
        let neg = Tensor::flat(vec![-3.0, -0.5]);
        assert_eq!(relu(&neg).data, vec![0.0, 0.0]);
    }

    #[test]
    fn relu_gradient_matches_finite_differences_away_from_zero() {
        let input = random_tensor(1, 1, 64, 9);
        let grad_out = random_tensor(1, 1, 64, 10);
        let g = relu_backward(&input, &grad_out);
        let h = 1e-6;
        for i in 0..input.len() {
            if input.data[i].abs() < 1e-3 {
                continue;
            }
            let mut plus = input.clone();
            plus.data[i] += h;
            let mut minus = input.clone();
            minus.data[i] -= h;
            let loss = |t: &Tensor| -> f64 {
                relu(t).data.iter().zip(&grad_out.data).map(|(a, b)| a * b).sum()
            };
            let num = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!(rel_err(g.data[i], num) < 1e-6, "at {i}: {} vs {num}", g.data[i]);
        }
    }

    #[test]
    fn maxpool_basics() {
        let t = Tensor { h: 2, w: 2, c: 1, data: vec![1.0, 2.0, 3.0, 4.0] };
        let out = maxpool2(&t).unwrap();
        assert_eq!((out.h, out.w), (1, 1));
        assert_eq!(out.data, vec![4.0]);

        let odd = Tensor::zeros(45, 45, 1);
        let pooled = maxpool2(&odd).unwrap();
        assert_eq!((pooled.h, pooled.w), (22, 22));

        let tiny = Tensor::zeros(1, 4, 1);
        assert!(matches!(maxpool2(&tiny), Err(NetError::SideTooSmall(1))));
    }

    #[test]
    fn maxpool_spatial_chains() {
        // variant (a): 100 -> 50 -> 25 -> 12 -> 6 -> 3
        let mut side = 100usize;
        let mut chain = vec![side];
        for _ in 0..5 {
            side /= 2;
            chain.push(side);
        }
        assert_eq!(chain, vec![100, 50, 25, 12, 6, 3]);
        // variant (b): 45 -> 22 -> 11 -> 5 -> 2
        let mut side = 45usize;
        let mut chain = vec![side];
        for _ in 0..4 {
            side /= 2;
            chain.push(side);
        }
        assert_eq!(chain, vec![45, 22, 11, 5, 2]);
    }

    #[test]
    fn maxpool_gradient_routes_to_argmax_with_first_index_ties() {
        let input = Tensor { h: 2, w: 2, c: 1, data: vec![5.0, 5.0, 1.0, 5.0] };
        let grad_out = Tensor { h: 1, w: 1, c: 1, data: vec![2.0] };
        let g = maxpool2_backward(&input, &grad_out);
        assert_eq!(g.data, vec![2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fc_identity_and_zero_input() {
        let n = 4;
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
        }
        let p = FcParams { in_dim: n, out_dim: n, weights, bias: vec![0.0; n] };
        let x = vec![0.5, -1.0, 2.0, 0.0];
        assert_eq!(fully_connected(&x, &p).unwrap(), x);

        let p2 = FcParams {
            in_dim: 2,
            out_dim: 3,
            weights: vec![1.0; 6],
            bias: vec![0.1, 0.2, 0.3],
        };
        assert_eq!(fully_connected(&[0.0, 0.0], &p2).unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(matches!(
            fully_connected(&[1.0], &p2),
            Err(NetError::ShapeMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn fc_gradients_match_finite_differences() {
        let mut rng = derive_rng("fc-grad", &[0]);
        let p = FcParams {
            in_dim: 6,
            out_dim: 4,
            weights: (0..24).map(|_| rng.sample(StandardNormal)).collect(),
            bias: (0..4).map(|_| rng.sample(StandardNormal)).collect(),
        };
        let x: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let grad_out: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
        let (gin, gw, gb) = fully_connected_backward(&x, &p, &grad_out);

        let loss = |x: &[f64], p: &FcParams| -> f64 {
            fully_connected(x, p).unwrap().iter().zip(&grad_out).map(|(a, b)| a * b).sum()
        };
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..p.weights.len() {
            let mut pp = p.clone();
            pp.weights[i] += h;
            let plus = loss(&x, &pp);
            pp.weights[i] -= 2.0 * h;
            let minus = loss(&x, &pp);
            worst = worst.max(rel_err(gw[i], (plus - minus) / (2.0 * h)));
        }
        for i in 0..x.len() {
            let mut xx = x.clone();
            xx[i] += h;
            let plus = loss(&xx, &p);
            xx[i] -= 2.0 * h;
            let minus = loss(&xx, &p);
            worst = worst.max(rel_err(gin[i], (plus - minus) / (2.0 * h)));
        }
        for i in 0..gb.len() {
            assert_eq!(gb[i], grad_out[i]);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn linear_stack_gradients_are_tight() {
        // without ReLU kinks the central-difference agreement is near
        // machine precision; the full-stack bound of 1e-4 leaves room for
        // pooling/activation switching, this one must be far tighter
        let mut rng = derive_rng("linear-grad", &[0]);
        let p1 = FcParams {
            in_dim: 8,
            out_dim: 6,
            weights: (0..48).map(|_| rng.sample(StandardNormal)).collect(),
            bias: (0..6).map(|_| rng.sample(StandardNormal)).collect(),
        };
        let p2 = FcParams {
            in_dim: 6,
            out_dim: 3,
            weights: (0..18).map(|_| rng.sample(StandardNormal)).collect(),
            bias: (0..3).map(|_| rng.sample(StandardNormal)).collect(),
        };
        let x: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
        let target = 1usize;

        let loss_of = |p1: &FcParams, p2: &FcParams| -> f64 {
            let h1 = fully_connected(&x, p1).unwrap();
            let logits = fully_connected(&h1, p2).unwrap();
            softmax_cross_entropy(&logits, target).unwrap().0
        };

        // analytic gradients by hand-chained backward passes
        let h1 = fully_connected(&x, &p1).unwrap();
        let logits = fully_connected(&h1, &p2).unwrap();
        let (_, g_logits) = softmax_cross_entropy(&logits, target).unwrap();
        let (g_h1, gw2, _gb2) = fully_connected_backward(&h1, &p2, &g_logits);
        let (_, gw1, _gb1) = fully_connected_backward(&x, &p1, &g_h1);

        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..p1.weights.len() {
            let mut pp = p1.clone();
            pp.weights[i] += h;
            let plus = loss_of(&pp, &p2);
            pp.weights[i] -= 2.0 * h;
            let minus = loss_of(&pp, &p2);
            worst = worst.max(rel_err(gw1[i], (plus - minus) / (2.0 * h)));
        }
        for i in 0..p2.weights.len() {
            let mut pp = p2.clone();
            pp.weights[i] += h;
            let plus = loss_of(&p1, &pp);
            pp.weights[i] -= 2.0 * h;
            let minus = loss_of(&p1, &pp);
            worst = worst.max(rel_err(gw2[i], (plus - minus) / (2.0 * h)));
        }
        assert!(worst < 1e-7, "max relative error {worst}");
    }

    #[test]
    fn softmax_uniform_logits() {
        let (loss, grad) = softmax_cross_entropy(&[0.7, 0.7, 0.7], 1).unwrap();
        assert!((loss - 3.0f64.ln()).abs() < 1e-12);
        assert!((grad[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((grad[1] - (1.0 / 3.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn softmax_dominant_logit_drives_loss_to_zero() {
        let (loss, _) = softmax_cross_entropy(&[50.0, 0.0, 0.0], 0).unwrap();
        assert!(loss < 1e-20, "loss {loss}");
        assert!(loss >= 0.0);
    }

    #[test]
    fn softmax_rejects_bad_target() {
        assert!(matches!(
            softmax_cross_entropy(&[0.0, 0.0], 2),
            Err(NetError::TargetOutOfRange { target: 2, classes: 2 })
        ));
    }

    #[test]
    fn softmax_gradient_matches_finite_differences() {
        let mut rng = derive_rng("softmax-grad", &[0]);
        let logits: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let (_, grad) = softmax_cross_entropy(&logits, 2).unwrap();
        let h = 1e-6;
        for i in 0..logits.len() {
            let mut plus = logits.clone();
            plus[i] += h;
            let mut minus = logits.clone();
            minus[i] -= h;
            let lp = softmax_cross_entropy(&plus, 2).unwrap().0;
            let lm = softmax_cross_entropy(&minus, 2).unwrap().0;
            let num = (lp - lm) / (2.0 * h);
            assert!(rel_err(grad[i], num) < 1e-6, "at {i}: {} vs {num}", grad[i]);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let logits = [0.4, -1.2, 2.0];
        let shifted: Vec<f64> = logits.iter().map(|l| l + 123.0).collect();
        let p1 = softmax(&logits);
        let p2 = softmax(&shifted);
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p1.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn adam_first_step_magnitude_is_learning_rate() {
        let mut params = vec![0.0];
        let mut state = AdamState::zeros(1);
        let cfg = AdamConfig::default();
        adam_step(&mut params, &[1.0], &mut state, 1, &cfg);
        assert!((params[0] + 1e-4).abs() <= 1e-8 * 1e-4 + 1e-12, "got {}", params[0]);
    }

    #[test]
    fn adam_zero_gradient_is_a_fixed_point() {
        let mut params = vec![0.7, -0.3];
        let mut state = AdamState::zeros(2);
        adam_step(&mut params, &[0.0, 0.0], &mut state, 1, &AdamConfig::default());
        assert_eq!(params, vec![0.7, -0.3]);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut params = vec![0.1, 0.2, 0.3];
            let mut state = AdamState::zeros(3);
            for t in 1..=50 {
                let grads: Vec<f64> = params.iter().map(|p| 2.0 * p).collect();
                adam_step(&mut params, &grads, &mut state, t, &AdamConfig::default());
            }
            params
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }
}
