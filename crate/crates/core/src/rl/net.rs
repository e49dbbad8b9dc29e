//! Two-hidden-layer tanh actor-critic with a shared trunk.
//!
//! Parameters live in one flat `Vec<f64>` so optimizers, checkpoints and
//! finite-difference checks can treat them uniformly. The first layer is
//! stored one row per input feature, which makes the forward and backward
//! passes over binary sparse inputs touch only the active rows.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::features::FeatureVector;
use crate::env::Action;

pub const NUM_ACTIONS: usize = Action::COUNT;

/// Network input: binary sparse indices or a dense vector.
#[derive(Clone, Copy, Debug)]
pub enum Input<'a> {
    Sparse(&'a [u32]),
    Dense(&'a [f64]),
}

impl<'a> From<&'a FeatureVector> for Input<'a> {
    fn from(f: &'a FeatureVector) -> Self {
        Input::Sparse(&f.active)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    input_dim: usize,
    hidden: [usize; 2],
    params: Vec<f64>,
}

/// Offsets of each parameter block inside the flat vector.
#[derive(Clone, Copy, Debug)]
struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    wp: usize,
    bp: usize,
    wv: usize,
    bv: usize,
    total: usize,
}

fn offsets(input_dim: usize, [h1, h2]: [usize; 2]) -> Offsets {
    let w1 = 0;
    let b1 = w1 + input_dim * h1;
    let w2 = b1 + h1;
    let b2 = w2 + h1 * h2;
    let wp = b2 + h2;
    let bp = wp + h2 * NUM_ACTIONS;
    let wv = bp + NUM_ACTIONS;
    let bv = wv + h2;
    Offsets {
        w1,
        b1,
        w2,
        b2,
        wp,
        bp,
        wv,
        bv,
        total: bv + 1,
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub logits: [f64; NUM_ACTIONS],
    pub value: f64,
}

impl Forward {
    pub fn probs(&self) -> [f64; NUM_ACTIONS] {
        softmax(&self.logits)
    }
}

pub fn softmax(logits: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_ACTIONS];
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

pub fn log_softmax(logits: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let mut out = *logits;
    for o in &mut out {
        *o -= lse;
    }
    out
}

pub fn entropy(logits: &[f64; NUM_ACTIONS]) -> f64 {
    let logp = log_softmax(logits);
    -logp.iter().map(|&l| l.exp() * l).sum::<f64>()
}

impl PolicyNet {
    /// Xavier-uniform trunk, near-zero policy head (almost uniform initial
    /// policy), zero biases.
    pub fn new(input_dim: usize, hidden: [usize; 2], rng: &mut ChaCha8Rng) -> PolicyNet {
        let o = offsets(input_dim, hidden);
        let mut params = vec![0.0; o.total];
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize, gain: f64| {
            let limit = gain * (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.gen_range(-limit..limit);
            }
        };
        let [h1, h2] = hidden;
        fill(o.w1..o.b1, input_dim, h1, 1.0);
        fill(o.w2..o.b2, h1, h2, 1.0);
        fill(o.wp..o.bp, h2, NUM_ACTIONS, 0.01);
        fill(o.wv..o.bv, h2, 1, 1.0);
        PolicyNet {
            input_dim,
            hidden,
            params,
        }
    }

    pub fn from_params(input_dim: usize, hidden: [usize; 2], params: Vec<f64>) -> Option<PolicyNet> {
        (params.len() == offsets(input_dim, hidden).total).then_some(PolicyNet {
            input_dim,
            hidden,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> [usize; 2] {
        self.hidden
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, input: Input<'_>) -> Forward {
        let o = offsets(self.input_dim, self.hidden);
        let [h1, h2] = self.hidden;
        let p = &self.params;

        let mut a1 = p[o.b1..o.b1 + h1].to_vec();
        match input {
            Input::Sparse(idx) => {
                for &i in idx {
                    let row = &p[o.w1 + i as usize * h1..o.w1 + (i as usize + 1) * h1];
                    for (a, w) in a1.iter_mut().zip(row) {
                        *a += w;
                    }
                }
            }
            Input::Dense(x) => {
                debug_assert_eq!(x.len(), self.input_dim);
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let row = &p[o.w1 + i * h1..o.w1 + (i + 1) * h1];
                    for (a, w) in a1.iter_mut().zip(row) {
                        *a += xi * w;
                    }
                }
            }
        }
        for a in &mut a1 {
            *a = a.tanh();
        }

        let mut a2 = p[o.b2..o.b2 + h2].to_vec();
        for (j, &aj) in a1.iter().enumerate() {
            let row = &p[o.w2 + j * h2..o.w2 + (j + 1) * h2];
            for (a, w) in a2.iter_mut().zip(row) {
                *a += aj * w;
            }
        }
        for a in &mut a2 {
            *a = a.tanh();
        }

        let mut logits = [0.0; NUM_ACTIONS];
        logits.copy_from_slice(&p[o.bp..o.bp + NUM_ACTIONS]);
        let mut value = p[o.bv];
        for (j, &aj) in a2.iter().enumerate() {
            let row = &p[o.wp + j * NUM_ACTIONS..o.wp + (j + 1) * NUM_ACTIONS];
            for (l, w) in logits.iter_mut().zip(row) {
                *l += aj * w;
            }
            value += aj * p[o.wv + j];
        }
        Forward {
            a1,
            a2,
            logits,
            value,
        }
    }

    /// Accumulate into `grad` the parameter gradient of a scalar whose
    /// derivatives w.r.t. the logits and the value are `dlogits` and `dvalue`.
    pub fn backward(
        &self,
        input: Input<'_>,
        fwd: &Forward,
        dlogits: &[f64; NUM_ACTIONS],
        dvalue: f64,
        grad: &mut [f64],
    ) {
        let o = offsets(self.input_dim, self.hidden);
        let [h1, h2] = self.hidden;
        let p = &self.params;

        let mut dz2 = vec![0.0; h2];
        for j in 0..h2 {
            let aj = fwd.a2[j];
            let wrow = &p[o.wp + j * NUM_ACTIONS..o.wp + (j + 1) * NUM_ACTIONS];
            let grow = &mut grad[o.wp + j * NUM_ACTIONS..o.wp + (j + 1) * NUM_ACTIONS];
            let mut da = 0.0;
            for k in 0..NUM_ACTIONS {
                grow[k] += aj * dlogits[k];
                da += wrow[k] * dlogits[k];
            }
            grad[o.wv + j] += aj * dvalue;
            da += p[o.wv + j] * dvalue;
            dz2[j] = da * (1.0 - aj * aj);
        }
        for k in 0..NUM_ACTIONS {
            grad[o.bp + k] += dlogits[k];
        }
        grad[o.bv] += dvalue;

        let mut dz1 = vec![0.0; h1];
        for j in 0..h1 {
            let aj = fwd.a1[j];
            let wrow = &p[o.w2 + j * h2..o.w2 + (j + 1) * h2];
            let grow = &mut grad[o.w2 + j * h2..o.w2 + (j + 1) * h2];
            let mut da = 0.0;
            for m in 0..h2 {
                grow[m] += aj * dz2[m];
                da += wrow[m] * dz2[m];
            }
            dz1[j] = da * (1.0 - aj * aj);
        }
        for (g, d) in grad[o.b2..o.b2 + h2].iter_mut().zip(&dz2) {
            *g += d;
        }
        for (g, d) in grad[o.b1..o.b1 + h1].iter_mut().zip(&dz1) {
            *g += d;
        }

        match input {
            Input::Sparse(idx) => {
                for &i in idx {
                    let grow = &mut grad[o.w1 + i as usize * h1..o.w1 + (i as usize + 1) * h1];
                    for (g, d) in grow.iter_mut().zip(&dz1) {
                        *g += d;
                    }
                }
            }
            Input::Dense(x) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let grow = &mut grad[o.w1 + i * h1..o.w1 + (i + 1) * h1];
                    for (g, d) in grow.iter_mut().zip(&dz1) {
                        *g += xi * d;
                    }
                }
            }
        }
    }
}

/// Sampled (or greedy) action with its log-probability and the value estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActOutput {
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
}

pub fn act(net: &PolicyNet, input: Input<'_>, rng: &mut ChaCha8Rng, greedy: bool) -> ActOutput {
    let fwd = net.forward(input);
    let logp = log_softmax(&fwd.logits);
    let index = if greedy {
        // first maximum wins ties
        (0..NUM_ACTIONS).fold(0, |best, i| if fwd.logits[i] > fwd.logits[best] { i } else { best })
    } else {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = NUM_ACTIONS - 1;
        for (i, l) in logp.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                chosen = i;
                break;
            }
        }
        chosen
    };
    ActOutput {
        action: Action::from_code(index as u8).unwrap(),
        log_prob: logp[index],
        value: fwd.value,
    }
}
