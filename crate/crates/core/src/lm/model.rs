//! Two-layer LSTM language model conditioned on a learned language vector.
//!
//! Every input step is `[symbol embedding ; language vector]`; the output
//! layer is a softmax over the vocabulary. All parameters live in one flat
//! `f64` buffer addressed through [`Layout`], which keeps gradient
//! accumulation, SGD updates and finite-difference checks uniform.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub vocab: usize,
    pub languages: usize,
    pub symbol_dim: usize,
    pub lang_dim: usize,
    pub hidden: usize,
    pub lang_all_layers: bool,
}

impl ModelShape {
    pub fn layer_input(&self, layer: usize) -> usize {
        match layer {
            0 => self.symbol_dim + self.lang_dim,
            _ => self.hidden + if self.lang_all_layers { self.lang_dim } else { 0 },
        }
    }
}

/// Named parameter blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamBlock {
    SymbolEmbedding,
    LanguageEmbedding,
    /// Input weights of layer 0 or 1, `4H x input`, gate order i, f, g, o.
    Input(usize),
    /// Recurrent weights, `4H x H`.
    Recurrent(usize),
    Bias(usize),
    OutputWeight,
    OutputBias,
}

/// Offsets of each block in the flat parameter buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub shape: ModelShape,
    sym: usize,
    lang: usize,
    w: [usize; 2],
    u: [usize; 2],
    b: [usize; 2],
    out_w: usize,
    out_b: usize,
    total: usize,
}

impl Layout {
    pub fn new(shape: ModelShape) -> Self {
        let h4 = 4 * shape.hidden;
        let mut at = 0;
        let mut take = |n: usize| {
            let start = at;
            at += n;
            start
        };
        let sym = take(shape.vocab * shape.symbol_dim);
        let lang = take(shape.languages * shape.lang_dim);
        let w0 = take(h4 * shape.layer_input(0));
        let u0 = take(h4 * shape.hidden);
        let b0 = take(h4);
        let w1 = take(h4 * shape.layer_input(1));
        let u1 = take(h4 * shape.hidden);
        let b1 = take(h4);
        let out_w = take(shape.vocab * shape.hidden);
        let out_b = take(shape.vocab);
        Layout {
            shape,
            sym,
            lang,
            w: [w0, w1],
            u: [u0, u1],
            b: [b0, b1],
            out_w,
            out_b,
            total: at,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn range(&self, block: ParamBlock) -> std::ops::Range<usize> {
        let s = &self.shape;
        let h4 = 4 * s.hidden;
        let (start, len) = match block {
            ParamBlock::SymbolEmbedding => (self.sym, s.vocab * s.symbol_dim),
            ParamBlock::LanguageEmbedding => (self.lang, s.languages * s.lang_dim),
            ParamBlock::Input(l) => (self.w[l], h4 * s.layer_input(l)),
            ParamBlock::Recurrent(l) => (self.u[l], h4 * s.hidden),
            ParamBlock::Bias(l) => (self.b[l], h4),
            ParamBlock::OutputWeight => (self.out_w, s.vocab * s.hidden),
            ParamBlock::OutputBias => (self.out_b, s.vocab),
        };
        start..start + len
    }

    /// Random initialization: embeddings uniform in ±0.1, LSTM and output
    /// weights uniform in ±1/sqrt(H), forget-gate biases 1, language
    /// vectors Gaussian with standard deviation `lang_std`.
    pub fn init<R: Rng>(&self, rng: &mut R, lang_std: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.total];
        let h = self.shape.hidden;
        let scale = 1.0 / (h as f64).sqrt();
        for v in &mut p[self.range(ParamBlock::SymbolEmbedding)] {
            *v = rng.gen_range(-0.1..0.1);
        }
        let normal = Normal::new(0.0, lang_std).expect("positive std");
        for v in &mut p[self.range(ParamBlock::LanguageEmbedding)] {
            *v = normal.sample(rng);
        }
        for l in 0..2 {
            for block in [ParamBlock::Input(l), ParamBlock::Recurrent(l)] {
                for v in &mut p[self.range(block)] {
                    *v = rng.gen_range(-scale..scale);
                }
            }
            let b = self.range(ParamBlock::Bias(l));
            for v in &mut p[b.start + h..b.start + 2 * h] {
                *v = 1.0;
            }
        }
        for v in &mut p[self.range(ParamBlock::OutputWeight)] {
            *v = rng.gen_range(-scale..scale);
        }
        p
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out += W x` for row-major `W` of shape `rows x x.len()`.
fn matvec_add(out: &mut [f64], w: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `dx += W^T dy` and `dW += dy x^T`.
fn matvec_backward(dy: &[f64], w: &[f64], x: &[f64], dw: &mut [f64], dx: Option<&mut [f64]>) {
    let cols = x.len();
    for (&g, drow) in dy.iter().zip(dw.chunks_exact_mut(cols)) {
        if g == 0.0 {
            continue;
        }
        for (d, &xv) in drow.iter_mut().zip(x) {
            *d += g * xv;
        }
    }
    if let Some(dx) = dx {
        for (&g, row) in dy.iter().zip(w.chunks_exact(cols)) {
            if g == 0.0 {
                continue;
            }
            for (d, &wv) in dx.iter_mut().zip(row) {
                *d += g * wv;
            }
        }
    }
}

/// Per-step activations of one sequence, kept for backpropagation.
#[derive(Default)]
struct Tape {
    steps: usize,
    /// Layer inputs, `steps x layer_input(l)`.
    x: [Vec<f64>; 2],
    /// Activated gates i, f, g, o, `steps x 4H`.
    gates: [Vec<f64>; 2],
    c: [Vec<f64>; 2],
    tanh_c: [Vec<f64>; 2],
    h: [Vec<f64>; 2],
    probs: Vec<f64>,
}

impl Tape {
    fn reset(&mut self, shape: &ModelShape, steps: usize) {
        let hd = shape.hidden;
        self.steps = steps;
        for l in 0..2 {
            self.x[l].clear();
            self.x[l].resize(steps * shape.layer_input(l), 0.0);
            self.gates[l].clear();
            self.gates[l].resize(steps * 4 * hd, 0.0);
            for v in [&mut self.c[l], &mut self.tanh_c[l], &mut self.h[l]] {
                v.clear();
                v.resize(steps * hd, 0.0);
            }
        }
        self.probs.clear();
        self.probs.resize(steps * shape.vocab, 0.0);
    }
}

/// Scratch buffers reused across sequences.
#[derive(Default)]
pub struct Workspace {
    tape: Tape,
    pre: Vec<f64>,
    dh: [Vec<f64>; 2],
    dc: [Vec<f64>; 2],
    dh_next: [Vec<f64>; 2],
    da: Vec<f64>,
    dx: Vec<f64>,
    dlogits: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Forward pass over `inputs` for language `lang`, filling the tape.
fn forward(layout: &Layout, params: &[f64], lang: usize, inputs: &[usize], ws: &mut Workspace) {
    let s = layout.shape;
    let (hd, e, k, v) = (s.hidden, s.symbol_dim, s.lang_dim, s.vocab);
    let h4 = 4 * hd;
    let tape = &mut ws.tape;
    tape.reset(&s, inputs.len());
    let lang_vec = &params[layout.lang + lang * k..layout.lang + (lang + 1) * k];
    ws.pre.resize(h4.max(v), 0.0);

    for (t, &sym) in inputs.iter().enumerate() {
        for l in 0..2 {
            let din = s.layer_input(l);
            {
                let x = &mut tape.x[l][t * din..(t + 1) * din];
                if l == 0 {
                    x[..e].copy_from_slice(&params[layout.sym + sym * e..layout.sym + (sym + 1) * e]);
                    x[e..].copy_from_slice(lang_vec);
                } else {
                    x[..hd].copy_from_slice(&tape.h[0][t * hd..(t + 1) * hd]);
                    if s.lang_all_layers {
                        x[hd..].copy_from_slice(lang_vec);
                    }
                }
            }
            let pre = &mut ws.pre[..h4];
            pre.copy_from_slice(&params[layout.range(ParamBlock::Bias(l))]);
            matvec_add(pre, &params[layout.range(ParamBlock::Input(l))], &tape.x[l][t * din..(t + 1) * din]);
            if t > 0 {
                matvec_add(
                    pre,
                    &params[layout.range(ParamBlock::Recurrent(l))],
                    &tape.h[l][(t - 1) * hd..t * hd],
                );
            }
            let gates = &mut tape.gates[l][t * h4..(t + 1) * h4];
            for j in 0..hd {
                gates[j] = sigmoid(pre[j]);
                gates[hd + j] = sigmoid(pre[hd + j]);
                gates[2 * hd + j] = pre[2 * hd + j].tanh();
                gates[3 * hd + j] = sigmoid(pre[3 * hd + j]);
            }
            for j in 0..hd {
                let c_prev = if t > 0 { tape.c[l][(t - 1) * hd + j] } else { 0.0 };
                let c = gates[hd + j] * c_prev + gates[j] * gates[2 * hd + j];
                let tc = c.tanh();
                tape.c[l][t * hd + j] = c;
                tape.tanh_c[l][t * hd + j] = tc;
                tape.h[l][t * hd + j] = gates[3 * hd + j] * tc;
            }
        }
        let logits = &mut tape.probs[t * v..(t + 1) * v];
        logits.copy_from_slice(&params[layout.range(ParamBlock::OutputBias)]);
        matvec_add(logits, &params[layout.range(ParamBlock::OutputWeight)], &tape.h[1][t * hd..(t + 1) * hd]);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for p in logits.iter_mut() {
            *p = (*p - max).exp();
            z += *p;
        }
        for p in logits.iter_mut() {
            *p /= z;
        }
    }
}

/// Summed negative log-likelihood of `targets`; when `grad` is given, adds
/// `scale` times the gradient of that sum.
pub(crate) fn sequence_loss(
    layout: &Layout,
    params: &[f64],
    lang: usize,
    inputs: &[usize],
    targets: &[usize],
    ws: &mut Workspace,
    grad: Option<(&mut [f64], f64)>,
) -> f64 {
    debug_assert_eq!(inputs.len(), targets.len());
    forward(layout, params, lang, inputs, ws);
    let s = layout.shape;
    let v = s.vocab;
    let loss: f64 = targets
        .iter()
        .enumerate()
        .map(|(t, &y)| -ws.tape.probs[t * v + y].max(f64::MIN_POSITIVE).ln())
        .sum();
    if let Some((grad, scale)) = grad {
        backward(layout, params, lang, inputs, targets, ws, grad, scale);
    }
    loss
}

#[allow(clippy::too_many_arguments)]
fn backward(
    layout: &Layout,
    params: &[f64],
    lang: usize,
    inputs: &[usize],
    targets: &[usize],
    ws: &mut Workspace,
    grad: &mut [f64],
    scale: f64,
) {
    let s = layout.shape;
    let (hd, e, k, v) = (s.hidden, s.symbol_dim, s.lang_dim, s.vocab);
    let h4 = 4 * hd;
    let steps = inputs.len();
    let tape = &ws.tape;

    for l in 0..2 {
        ws.dh_next[l].clear();
        ws.dh_next[l].resize(hd, 0.0);
        ws.dc[l].clear();
        ws.dc[l].resize(hd, 0.0);
        ws.dh[l].resize(hd, 0.0);
    }
    ws.da.resize(h4, 0.0);
    ws.dlogits.resize(v, 0.0);
    let max_in = s.layer_input(0).max(s.layer_input(1));
    ws.dx.resize(max_in, 0.0);

    let out_w = layout.range(ParamBlock::OutputWeight);
    let out_b = layout.range(ParamBlock::OutputBias);
    let lang_off = layout.lang + lang * k;

    for t in (0..steps).rev() {
        // Softmax cross-entropy.
        for j in 0..v {
            ws.dlogits[j] = scale * tape.probs[t * v + j];
        }
        ws.dlogits[targets[t]] -= scale;
        for (g, d) in grad[out_b.clone()].iter_mut().zip(&ws.dlogits) {
            *g += d;
        }
        ws.dh[1].copy_from_slice(&ws.dh_next[1]);
        matvec_backward(
            &ws.dlogits,
            &params[out_w.clone()],
            &tape.h[1][t * hd..(t + 1) * hd],
            &mut grad[out_w.clone()],
            Some(&mut ws.dh[1]),
        );

        for l in (0..2).rev() {
            if l == 0 {
                // dh[0] already holds the contribution from layer 1's input.
                for j in 0..hd {
                    ws.dh[0][j] += ws.dh_next[0][j];
                }
            }
            let gates = &tape.gates[l][t * h4..(t + 1) * h4];
            for j in 0..hd {
                let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
                let tc = tape.tanh_c[l][t * hd + j];
                let c_prev = if t > 0 { tape.c[l][(t - 1) * hd + j] } else { 0.0 };
                let dh = ws.dh[l][j];
                let dc = dh * o * (1.0 - tc * tc) + ws.dc[l][j];
                ws.da[j] = dc * g * i * (1.0 - i);
                ws.da[hd + j] = dc * c_prev * f * (1.0 - f);
                ws.da[2 * hd + j] = dc * i * (1.0 - g * g);
                ws.da[3 * hd + j] = dh * tc * o * (1.0 - o);
                ws.dc[l][j] = dc * f;
            }
            let b = layout.range(ParamBlock::Bias(l));
            for (gb, d) in grad[b].iter_mut().zip(&ws.da) {
                *gb += d;
            }
            let din = s.layer_input(l);
            let dx = &mut ws.dx[..din];
            dx.iter_mut().for_each(|d| *d = 0.0);
            let wr = layout.range(ParamBlock::Input(l));
            matvec_backward(&ws.da, &params[wr.clone()], &tape.x[l][t * din..(t + 1) * din], &mut grad[wr], Some(dx));
            let ur = layout.range(ParamBlock::Recurrent(l));
            ws.dh_next[l].iter_mut().for_each(|d| *d = 0.0);
            if t > 0 {
                matvec_backward(
                    &ws.da,
                    &params[ur.clone()],
                    &tape.h[l][(t - 1) * hd..t * hd],
                    &mut grad[ur],
                    Some(&mut ws.dh_next[l]),
                );
            }
            let dx = &ws.dx[..din];
            if l == 1 {
                ws.dh[0].copy_from_slice(&dx[..hd]);
                if s.lang_all_layers {
                    for (g, d) in grad[lang_off..lang_off + k].iter_mut().zip(&dx[hd..]) {
                        *g += d;
                    }
                }
            } else {
                let sym = layout.sym + inputs[t] * e;
                for (g, d) in grad[sym..sym + e].iter_mut().zip(&dx[..e]) {
                    *g += d;
                }
                for (g, d) in grad[lang_off..lang_off + k].iter_mut().zip(&dx[e..]) {
                    *g += d;
                }
            }
        }
    }
}

/// Next-symbol distribution after consuming `inputs` from a zero state.
pub(crate) fn final_distribution(
    layout: &Layout,
    params: &[f64],
    lang: usize,
    inputs: &[usize],
    ws: &mut Workspace,
) -> Vec<f64> {
    forward(layout, params, lang, inputs, ws);
    let v = layout.shape.vocab;
    let t = inputs.len() - 1;
    ws.tape.probs[t * v..(t + 1) * v].to_vec()
}

pub(crate) fn check_finite(params: &[f64]) -> Result<()> {
    if params.iter().all(|p| p.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical("model parameters became non-finite".into()))
    }
}
