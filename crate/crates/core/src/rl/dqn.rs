use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::{EnvStep, Environment};
use super::mlp::{argmax, Cache, Mlp};
use super::model::{save_model, SavedModel};
use super::replay::{ReplayBuffer, Transition};
use super::{huber_loss_and_grad, linear_schedule, Adam, HIDDEN};
use crate::error::{Error, Result};
use crate::escape::{Observation16, N_ACTIONS, OBS_DIM};
use crate::rng::Prng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_env: usize,
    pub buffer_capacity: usize,
    pub batch: usize,
    /// Environment steps before the first update.
    pub warmup: u64,
    /// Vector steps between updates.
    pub train_freq: u64,
    /// Environment steps between target syncs.
    pub target_sync: u64,
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_fraction: f64,
    pub lr: f64,
    pub huber_kappa: f64,
    /// Updates between evaluations.
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Environment steps to train for, summed over all environments and
    /// including the ignored global-phase frames.
    pub total_steps: u64,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Step the environments on the rayon pool. Results stay deterministic
    /// because every environment owns its generator.
    pub parallel: bool,
    /// Where a diagnostic checkpoint goes if training diverges.
    pub diagnostic_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_env: 8,
            buffer_capacity: 500_000,
            batch: 256,
            warmup: 5_000,
            train_freq: 4,
            target_sync: 1_000,
            gamma: 0.99,
            eps_start: 1.0,
            eps_end: 0.01,
            eps_fraction: 0.4,
            lr: 1e-4,
            huber_kappa: 1.0,
            eval_every: 5_000,
            eval_episodes: 50,
            total_steps: 1_000_000,
            hidden: HIDDEN.to_vec(),
            seed: 0,
            parallel: false,
            diagnostic_dir: None,
        }
    }
}

impl TrainConfig {
    /// The shorter run used for the bundled checkpoint.
    pub fn desk(seed: u64) -> Self {
        TrainConfig { total_steps: 200_000, seed, ..Self::default() }
    }

    pub fn epsilon(&self, step: u64) -> f64 {
        linear_schedule(step, self.total_steps, self.eps_fraction, self.eps_start, self.eps_end)
    }

    pub fn learning_rate(&self, step: u64) -> f64 {
        linear_schedule(step, self.total_steps, 1.0, self.lr, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.n_env as u64, self.buffer_capacity as u64, self.batch as u64, self.train_freq, self.target_sync, self.eval_every, self.eval_episodes as u64, self.total_steps];
        if counts.contains(&0) {
            return Err(Error::InvalidArgument("training counts must be positive".into()));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.eps_start) || !unit(self.eps_end) || !(self.eps_fraction > 0.0 && self.eps_fraction <= 1.0) {
            return Err(Error::InvalidArgument("epsilon schedule must stay in [0, 1]".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || !(self.lr > 0.0) || !(self.huber_kappa > 0.0) {
            return Err(Error::InvalidArgument("gamma, learning rate and kappa must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidArgument("hidden widths must be positive".into()));
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![OBS_DIM];
        s.extend(&self.hidden);
        s.push(N_ACTIONS);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
    /// Agent steps per episode.
    pub mean_length: f64,
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: u64,
    pub success_rate: f64,
    pub mean_return: f64,
    pub mean_length: f64,
    /// Snapshot index when this evaluation improved on the best.
    pub checkpoint: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_net: Mlp<f32>,
    pub best: Option<(Mlp<f32>, EvalRecord)>,
    pub history: Vec<EvalRecord>,
    pub steps: u64,
    /// Transitions that went into the replay buffer.
    pub stored: u64,
    pub updates: u64,
}

/// Trainer state after each vector step, for tests and progress output.
#[derive(Debug)]
pub struct TrainProbe<'a> {
    pub step: u64,
    pub updates: u64,
    pub epsilon: f64,
    pub buffer_len: usize,
    pub stored: u64,
    pub ignored: u64,
    pub synced: bool,
    pub online: &'a [f32],
    pub target: &'a [f32],
}

/// Runs `episodes` episodes and averages return, agent steps and success.
pub fn evaluate<E: Environment>(env: &mut E, episodes: usize, mut policy: impl FnMut(&Observation16) -> usize) -> Result<EvalReport> {
    let (mut wins, mut ret, mut len) = (0usize, 0.0, 0u64);
    for _ in 0..episodes {
        let mut obs = env.reset()?;
        loop {
            let a = if env.wants_action() { policy(&obs) } else { 0 };
            let s = env.step(a)?;
            if !s.info.ignore_transition {
                ret += s.reward;
                len += 1;
            }
            obs = s.obs;
            if s.done {
                wins += s.info.success as usize;
                break;
            }
        }
    }
    let n = episodes.max(1) as f64;
    Ok(EvalReport { episodes, success_rate: wins as f64 / n, mean_return: ret / n, mean_length: len as f64 / n })
}

/// Uniform over the nine actions.
pub fn random_policy(seed: u64) -> impl FnMut(&Observation16) -> usize {
    let mut rng = Prng::new(seed);
    move |_| rng.index(N_ACTIONS)
}

pub fn greedy_policy(net: &Mlp<f32>) -> impl FnMut(&Observation16) -> usize + '_ {
    move |o| argmax(&net.forward(&o.to_f32(), 1))
}

pub fn train<E: Environment>(config: &TrainConfig, factory: impl FnMut(u64) -> Result<E>, log: Option<&mut dyn Write>) -> Result<TrainOutcome> {
    train_observed(config, factory, log, |_| {})
}

struct Learner {
    net: Mlp<f32>,
    target: Mlp<f32>,
    adam: Adam<f32>,
    grad: Vec<f32>,
    cache: Cache<f32>,
}

impl Learner {
    fn update(&mut self, batch: &[&Transition], gamma: f64, kappa: f64, lr: f64) -> f64 {
        let b = batch.len();
        let mut x = Vec::with_capacity(b * OBS_DIM);
        let mut x_next = Vec::with_capacity(b * OBS_DIM);
        for t in batch {
            x.extend_from_slice(&t.obs);
            x_next.extend_from_slice(&t.next_obs);
        }
        let q_next = self.target.forward(&x_next, b);
        self.net.forward_cached(&x, b, &mut self.cache);
        let q = self.cache.output();
        let mut dout = vec![0.0f32; b * N_ACTIONS];
        let mut loss = 0.0;
        for (j, t) in batch.iter().enumerate() {
            let row: Vec<f64> = q_next[j * N_ACTIONS..(j + 1) * N_ACTIONS].iter().map(|&v| v as f64).collect();
            let y = super::td_target(t.reward as f64, t.done, &row, gamma);
            let k = j * N_ACTIONS + t.action as usize;
            let (l, g) = huber_loss_and_grad(q[k] as f64, y, kappa);
            loss += l;
            dout[k] = (g / b as f64) as f32;
        }
        self.net.backward(&self.cache, &dout, &mut self.grad);
        self.adam.step(self.net.params_mut(), &self.grad, lr);
        loss / b as f64
    }
}

/// DQN with a global/local switch: ignored transitions count as steps but
/// are never stored, the learner updates every `train_freq` vector steps after
/// warmup, and evaluations on a fresh environment snapshot the best policy.
pub fn train_observed<E: Environment>(
    config: &TrainConfig,
    mut factory: impl FnMut(u64) -> Result<E>,
    mut log: Option<&mut dyn Write>,
    mut observe: impl FnMut(&TrainProbe),
) -> Result<TrainOutcome> {
    config.validate()?;
    let root = Prng::new(config.seed);
    let net = Mlp::<f32>::new(&config.layer_sizes(), &mut root.split(1));
    let n_params = net.params().len();
    let mut learner = Learner { target: net.clone(), net, adam: Adam::new(n_params), grad: vec![0.0; n_params], cache: Cache::default() };
    let mut act_rng = root.split(2);
    let mut sample_rng = root.split(3);
    let eval_seed = root.split(4).next_u64();

    let mut envs = (0..config.n_env).map(|i| factory(root.split(100 + i as u64).next_u64())).collect::<Result<Vec<E>>>()?;
    let mut obs = envs.iter_mut().map(|e| e.reset()).collect::<Result<Vec<_>>>()?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let (mut step, mut vec_steps, mut updates, mut stored, mut ignored) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut next_sync = config.target_sync;
    let mut history = Vec::new();
    let mut best: Option<(Mlp<f32>, EvalRecord)> = None;
    let mut snapshots = 0u32;

    let mut run_eval = |net: &Mlp<f32>, step: u64, history: &mut Vec<EvalRecord>, best: &mut Option<(Mlp<f32>, EvalRecord)>, log: &mut Option<&mut dyn Write>| -> Result<()> {
        let mut env = factory(eval_seed)?;
        let r = evaluate(&mut env, config.eval_episodes, greedy_policy(net))?;
        let better = match best {
            None => true,
            Some((_, b)) => r.success_rate > b.success_rate || (r.success_rate == b.success_rate && r.mean_return > b.mean_return),
        };
        let mut rec = EvalRecord { step, success_rate: r.success_rate, mean_return: r.mean_return, mean_length: r.mean_length, checkpoint: None };
        if better {
            rec.checkpoint = Some(snapshots);
            snapshots += 1;
            *best = Some((net.clone(), rec));
        }
        if let Some(w) = log.as_mut() {
            serde_json::to_writer(&mut **w, &rec).map_err(|e| Error::Io(e.into()))?;
            w.write_all(b"\n")?;
        }
        history.push(rec);
        Ok(())
    };

    let mut last_eval_updates = None;
    while step < config.total_steps {
        let eps = config.epsilon(step);
        let mut actions = vec![0usize; envs.len()];
        let mut greedy = Vec::new();
        for (i, env) in envs.iter().enumerate() {
            if env.wants_action() {
                if act_rng.chance(eps) {
                    actions[i] = act_rng.index(N_ACTIONS);
                } else {
                    greedy.push(i);
                }
            }
        }
        if !greedy.is_empty() {
            let x: Vec<f32> = greedy.iter().flat_map(|&i| obs[i].to_f32()).collect();
            let q = learner.net.forward(&x, greedy.len());
            for (k, &i) in greedy.iter().enumerate() {
                actions[i] = argmax(&q[k * N_ACTIONS..(k + 1) * N_ACTIONS]);
            }
        }
        let results: Vec<Result<EnvStep>> = if config.parallel {
            envs.par_iter_mut().zip(&actions).map(|(e, &a)| e.step(a)).collect()
        } else {
            envs.iter_mut().zip(&actions).map(|(e, &a)| e.step(a)).collect()
        };
        for (i, s) in results.into_iter().enumerate() {
            let s = s?;
            if s.info.ignore_transition {
                ignored += 1;
            } else {
                buffer.push(Transition {
                    obs: obs[i].to_f32(),
                    action: actions[i] as u8,
                    reward: s.reward as f32,
                    next_obs: s.obs.to_f32(),
                    done: s.info.terminal(),
                });
                stored += 1;
            }
            step += 1;
            obs[i] = if s.done { envs[i].reset()? } else { s.obs };
        }
        vec_steps += 1;

        if step > config.warmup && vec_steps % config.train_freq == 0 && !buffer.is_empty() {
            let batch = buffer.sample(config.batch, &mut sample_rng);
            let loss = learner.update(&batch, config.gamma, config.huber_kappa, config.learning_rate(step));
            if !loss.is_finite() || learner.net.params().iter().any(|p| !p.is_finite()) {
                if let Some(dir) = &config.diagnostic_dir {
                    std::fs::create_dir_all(dir)?;
                    let m = SavedModel { net: learner.net.clone(), seed: config.seed, steps: Some(step) };
                    save_model(dir.join("diagnostic.qnet"), &m)?;
                }
                return Err(Error::TrainingAborted { step, reason: format!("non-finite loss {loss}") });
            }
            updates += 1;
            if updates % config.eval_every == 0 {
                run_eval(&learner.net, step, &mut history, &mut best, &mut log)?;
                last_eval_updates = Some(updates);
            }
        }
        let synced = step >= next_sync;
        if synced {
            learner.target.params_mut().copy_from_slice(learner.net.params());
            next_sync = (step / config.target_sync + 1) * config.target_sync;
        }
        observe(&TrainProbe {
            step,
            updates,
            epsilon: eps,
            buffer_len: buffer.len(),
            stored,
            ignored,
            synced,
            online: learner.net.params(),
            target: learner.target.params(),
        });
    }
    if last_eval_updates != Some(updates) {
        run_eval(&learner.net, step, &mut history, &mut best, &mut log)?;
    }
    Ok(TrainOutcome { final_net: learner.net, best, history, steps: step, stored, updates })
}
