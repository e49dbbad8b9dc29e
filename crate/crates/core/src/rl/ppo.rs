use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::gae::compute_gae;
use super::net::{log_softmax, Input, PolicyNet, NUM_ACTIONS};
use super::RlError;
use crate::exec::{self, ExecMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub horizon: usize,
    pub workers: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    pub frame_budget: u64,
    pub hidden: [usize; 2],
    pub adam_eps: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            learning_rate: 2.5e-4,
            epochs: 4,
            minibatch_size: 256,
            horizon: 128,
            workers: 8,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            frame_budget: 500_000,
            hidden: [128, 128],
            adam_eps: 1e-5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(format!("ppo.{key}: {msg}"))
            }
        };
        check((0.0..=1.0).contains(&self.gamma), "gamma", "must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.lambda), "lambda", "must lie in [0, 1]")?;
        check(self.clip > 0.0, "clip", "must be positive")?;
        check(self.learning_rate > 0.0, "learning_rate", "must be positive")?;
        check(self.epochs >= 1, "epochs", "must be at least 1")?;
        check(self.minibatch_size >= 1, "minibatch_size", "must be at least 1")?;
        check(self.horizon >= 1, "horizon", "must be at least 1")?;
        check(self.workers >= 1, "workers", "must be at least 1")?;
        check(self.value_coef >= 0.0, "value_coef", "must be non-negative")?;
        check(self.entropy_coef >= 0.0, "entropy_coef", "must be non-negative")?;
        check(self.max_grad_norm > 0.0, "max_grad_norm", "must be positive")?;
        check(self.frame_budget > 0, "frame_budget", "must be positive")?;
        check(self.hidden.iter().all(|&h| h > 0), "hidden", "widths must be positive")?;
        Ok(())
    }

    pub fn frames_per_phase(&self) -> u64 {
        (self.horizon * self.workers) as u64
    }
}

/// One environment step as seen by the learner.
#[derive(Clone, Debug)]
pub struct Transition {
    pub features: FeatureVector,
    pub action: u8,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// Transitions of one rollout phase, with advantages and returns once
/// [`RolloutBuffer::finish_segment`] has run for every segment.
#[derive(Clone, Debug, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new() -> RolloutBuffer {
        RolloutBuffer::default()
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Append one worker's contiguous segment and compute its advantages.
    pub fn push_segment(
        &mut self,
        segment: Vec<Transition>,
        last_value: f64,
        gamma: f64,
        lambda: f64,
    ) -> Result<(), RlError> {
        let rewards: Vec<f64> = segment.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = segment.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = segment.iter().map(|t| t.done).collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, last_value, gamma, lambda)?;
        self.transitions.extend(segment);
        self.advantages.extend(adv);
        self.returns.extend(ret);
        Ok(())
    }

    pub fn advantages_ready(&self) -> bool {
        !self.transitions.is_empty()
            && self.advantages.len() == self.transitions.len()
            && self.returns.len() == self.transitions.len()
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
        self.advantages.clear();
        self.returns.clear();
    }
}

/// A sample of the clipped-surrogate objective.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub input: Input<'a>,
    pub action: usize,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

impl LossStats {
    fn add(&mut self, o: &LossStats) {
        self.total += o.total;
        self.policy_loss += o.policy_loss;
        self.value_loss += o.value_loss;
        self.entropy += o.entropy;
        self.clip_fraction += o.clip_fraction;
    }
}

/// Objective weights shared by the loss and its gradient.
#[derive(Clone, Copy, Debug)]
pub struct LossWeights {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

impl From<&PpoConfig> for LossWeights {
    fn from(c: &PpoConfig) -> Self {
        LossWeights {
            clip: c.clip,
            value_coef: c.value_coef,
            entropy_coef: c.entropy_coef,
        }
    }
}

/// Per-sample loss terms and derivative w.r.t. logits and value, each
/// already divided by `n` (the batch size the mean is taken over).
fn sample_terms(
    net: &PolicyNet,
    s: &Sample<'_>,
    w: LossWeights,
    n: f64,
    grad: Option<&mut [f64]>,
) -> LossStats {
    let fwd = net.forward(s.input);
    let logp = log_softmax(&fwd.logits);
    let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    let ratio = (logp[s.action] - s.old_log_prob).exp();
    let clipped_ratio = ratio.clamp(1.0 - w.clip, 1.0 + w.clip);
    let unclipped = ratio * s.advantage;
    let clipped = clipped_ratio * s.advantage;
    let policy_loss = -unclipped.min(clipped);
    let entropy = -probs.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
    let value_err = fwd.value - s.ret;
    let value_loss = value_err * value_err;
    let total = policy_loss + w.value_coef * value_loss - w.entropy_coef * entropy;

    if let Some(grad) = grad {
        let mut dlogits = [0.0; NUM_ACTIONS];
        // The min picks the unclipped branch unless clipping makes it smaller.
        if unclipped <= clipped {
            let coef = -unclipped;
            for k in 0..NUM_ACTIONS {
                let indicator = if k == s.action { 1.0 } else { 0.0 };
                dlogits[k] += coef * (indicator - probs[k]);
            }
        }
        for k in 0..NUM_ACTIONS {
            dlogits[k] += w.entropy_coef * probs[k] * (logp[k] + entropy);
            dlogits[k] /= n;
        }
        let dvalue = 2.0 * w.value_coef * value_err / n;
        net.backward(s.input, &fwd, &dlogits, dvalue, grad);
    }

    let clip_hit = if (ratio - 1.0).abs() > w.clip { 1.0 } else { 0.0 };
    LossStats {
        total: total / n,
        policy_loss: policy_loss / n,
        value_loss: value_loss / n,
        entropy: entropy / n,
        clip_fraction: clip_hit / n,
    }
}

/// Mean objective over `samples`.
pub fn batch_loss(net: &PolicyNet, samples: &[Sample<'_>], w: LossWeights) -> LossStats {
    let n = samples.len() as f64;
    let mut stats = LossStats::default();
    for s in samples {
        stats.add(&sample_terms(net, s, w, n, None));
    }
    stats
}

const GRAD_CHUNK: usize = 64;

/// Mean objective and its gradient. Samples are split into fixed chunks whose
/// partial gradients are summed in chunk order, so the result is identical in
/// sequential and parallel mode.
pub fn batch_loss_and_grad(
    net: &PolicyNet,
    samples: &[Sample<'_>],
    w: LossWeights,
    mode: ExecMode,
) -> (LossStats, Vec<f64>) {
    let n = samples.len() as f64;
    let chunks: Vec<&[Sample<'_>]> = samples.chunks(GRAD_CHUNK).collect();
    let partials = exec::map_range(mode, chunks.len(), |c| {
        let mut grad = vec![0.0; net.param_count()];
        let mut stats = LossStats::default();
        for s in chunks[c] {
            stats.add(&sample_terms(net, s, w, n, Some(&mut grad)));
        }
        (stats, grad)
    });
    let mut iter = partials.into_iter();
    let (mut stats, mut grad) = iter.next().unwrap_or_default();
    for (s, g) in iter {
        stats.add(&s);
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    if grad.is_empty() {
        grad = vec![0.0; net.param_count()];
    }
    (stats, grad)
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64, eps: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let step_size = self.lr * bc2.sqrt() / bc1;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= step_size * self.m[i] / (self.v[i].sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Mean pre-clipping gradient norm over minibatches.
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// Standardize to zero mean and unit variance.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    adv.iter().map(|a| (a - mean) / (std + 1e-8)).collect()
}

/// Clipped-surrogate PPO update over a finished buffer.
pub fn ppo_update(
    net: &mut PolicyNet,
    opt: &mut Adam,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut ChaCha8Rng,
    mode: ExecMode,
) -> Result<UpdateStats, RlError> {
    if !buffer.advantages_ready() {
        return Err(RlError::AdvantagesMissing);
    }
    let adv = normalize_advantages(&buffer.advantages);
    let weights = LossWeights::from(config);
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut stats = UpdateStats::default();
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for batch in order.chunks(config.minibatch_size) {
            let samples: Vec<Sample<'_>> = batch
                .iter()
                .map(|&i| {
                    let t = &buffer.transitions[i];
                    Sample {
                        input: Input::from(&t.features),
                        action: t.action as usize,
                        old_log_prob: t.log_prob,
                        advantage: adv[i],
                        ret: buffer.returns[i],
                    }
                })
                .collect();
            let (loss, mut grad) = batch_loss_and_grad(net, &samples, weights, mode);
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !loss.total.is_finite() || !norm.is_finite() {
                return Err(RlError::NonFinite(format!(
                    "loss {:?}, grad norm {norm}, minibatch {}",
                    loss, stats.minibatches
                )));
            }
            if norm > config.max_grad_norm {
                let scale = config.max_grad_norm / norm;
                for g in &mut grad {
                    *g *= scale;
                }
            }
            opt.step(net.params_mut(), &grad);
            stats.policy_loss += loss.policy_loss;
            stats.value_loss += loss.value_loss;
            stats.entropy += loss.entropy;
            stats.clip_fraction += loss.clip_fraction;
            stats.grad_norm += norm;
            stats.minibatches += 1;
        }
    }
    let m = stats.minibatches.max(1) as f64;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.entropy /= m;
    stats.clip_fraction /= m;
    stats.grad_norm /= m;
    Ok(stats)
}
