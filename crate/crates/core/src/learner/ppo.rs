//! Clipped-surrogate actor-critic with separate policy and value networks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gae::compute_gae;
use super::mlp::Mlp;
use super::{episode_log, LearnerError, TrainSetup, TrainingLog, UpdateLog, CHECKPOINT_VERSION};
use crate::engine::{AgentView, Engine, Policy, PolicyError};
use crate::schedule::build_schedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rollout_episodes: usize,
    pub minibatch_size: usize,
    pub hidden: Vec<usize>,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global gradient-norm cap per minibatch step; 0 disables it.
    pub max_grad_norm: f64,
    /// Restrict the softmax to adjacent nodes.
    pub mask_invalid: bool,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            learning_rate: 3e-4,
            epochs: 4,
            rollout_episodes: 4,
            minibatch_size: 64,
            hidden: vec![64, 64],
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            mask_invalid: false,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if self.clip_eps.is_nan() || self.clip_eps <= 0.0 || self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("clip_eps and learning_rate must be positive");
        }
        if self.epochs == 0 || self.rollout_episodes == 0 || self.minibatch_size == 0 {
            return bad("epochs, rollout_episodes and minibatch_size must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }
}

/// Rollout samples aligned by index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryBatch {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl TrajectoryBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        let n = self.actions.len();
        let lens = [
            self.observations.len(),
            self.rewards.len(),
            self.values.len(),
            self.log_probs.len(),
            self.advantages.len(),
            self.returns.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(LearnerError::Batch(format!("{n} actions vs field lengths {lens:?}")));
        }
        if self.advantages.iter().any(|a| !a.is_finite()) {
            return Err(LearnerError::Batch("non-finite advantage".into()));
        }
        Ok(())
    }

    /// Appends one finished episode, computing its advantages with a zero
    /// terminal bootstrap.
    pub fn push_episode(&mut self, mut ep: TrajectoryBatch, gamma: f64, lambda: f64) -> Result<(), LearnerError> {
        let mut v = ep.values.clone();
        v.push(0.0);
        let (adv, ret) = compute_gae(&ep.rewards, &v, gamma, lambda)?;
        ep.advantages = adv;
        ep.returns = ret;
        self.observations.append(&mut ep.observations);
        self.actions.append(&mut ep.actions);
        self.rewards.append(&mut ep.rewards);
        self.values.append(&mut ep.values);
        self.log_probs.append(&mut ep.log_probs);
        self.advantages.append(&mut ep.advantages);
        self.returns.append(&mut ep.returns);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Softmax over `logits`, restricted to entries where the adjacency bit is set
/// when `mask` is on. Excluded entries get probability 0.
pub fn action_probs(logits: &[f64], obs: &[f64], mask: bool) -> Vec<f64> {
    let allowed = |j: usize| !mask || obs[j] > 0.5;
    let max = (0..logits.len()).filter(|&j| allowed(j)).map(|j| logits[j]).fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = (0..logits.len()).map(|j| if allowed(j) { (logits[j] - max).exp() } else { 0.0 }).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    p
}

/// Loss of the clipped objective over `idx` and its gradients with respect
/// to the policy and value parameters.
///
/// `L = -mean(min(r A, clip(r) A)) + c_v mean((V - R)^2) - c_e mean(H)`.
pub fn loss_and_grad(
    policy: &Mlp,
    pi: &[f64],
    value: &Mlp,
    v: &[f64],
    batch: &TrajectoryBatch,
    idx: &[usize],
    cfg: &LearnerConfig,
) -> (LossTerms, Vec<f64>, Vec<f64>) {
    let mut gpi = vec![0.0; pi.len()];
    let mut gv = vec![0.0; v.len()];
    let mut terms = LossTerms::default();
    let inv = 1.0 / idx.len().max(1) as f64;
    for &i in idx {
        let obs = &batch.observations[i];
        let a = batch.actions[i];
        let adv = batch.advantages[i];

        let cache = policy.forward(pi, obs);
        let p = action_probs(cache.output(), obs, cfg.mask_invalid);
        let logp = p[a].ln();
        let ratio = (logp - batch.log_probs[i]).exp();
        let clipped = ratio.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        let (s1, s2) = (ratio * adv, clipped * adv);
        terms.policy -= s1.min(s2) * inv;
        terms.approx_kl += (batch.log_probs[i] - logp) * inv;
        if (ratio - 1.0).abs() > cfg.clip_eps {
            terms.clip_fraction += inv;
        }
        let entropy: f64 = -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>();
        terms.entropy += entropy * inv;

        // d(-min)/d logp is -r A on the unclipped branch and 0 otherwise.
        let g_logp = if s1 <= s2 { -ratio * adv } else { 0.0 };
        let dlogits: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(j, &pj)| {
                if pj == 0.0 {
                    return 0.0;
                }
                let onehot = if j == a { 1.0 } else { 0.0 };
                inv * (g_logp * (onehot - pj) + cfg.entropy_coef * pj * (pj.ln() + entropy))
            })
            .collect();
        policy.backward(pi, &cache, &dlogits, &mut gpi);

        let vcache = value.forward(v, obs);
        let err = vcache.output()[0] - batch.returns[i];
        terms.value += err * err * inv;
        value.backward(v, &vcache, &[inv * cfg.value_coef * 2.0 * err], &mut gv);
    }
    terms.total = terms.policy + cfg.value_coef * terms.value - cfg.entropy_coef * terms.entropy;
    (terms, gpi, gv)
}

fn normalize(xs: &mut [f64]) {
    let n = xs.len().max(1) as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std < 1e-8 { 1.0 } else { std };
    xs.iter_mut().for_each(|x| *x = (*x - mean) / scale);
}

/// Actor-critic over observation features of a fixed-size scan.
#[derive(Debug, Clone)]
pub struct PpoAgent {
    cfg: LearnerConfig,
    policy: Mlp,
    value: Mlp,
    pi: Vec<f64>,
    v: Vec<f64>,
    opt_pi: Adam,
    opt_v: Adam,
    rng: ChaCha8Rng,
    updates: usize,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    kind: String,
    config: LearnerConfig,
    policy_sizes: Vec<usize>,
    value_sizes: Vec<usize>,
    policy_params: Vec<f64>,
    value_params: Vec<f64>,
}

impl PpoAgent {
    pub fn new(nodes: usize, cfg: LearnerConfig) -> Result<Self, LearnerError> {
        cfg.validate()?;
        let mut sizes = vec![nodes + 1];
        sizes.extend(&cfg.hidden);
        let policy = Mlp::new([sizes.clone(), vec![nodes]].concat());
        let value = Mlp::new([sizes, vec![1]].concat());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pi = policy.init(&mut rng, 0.01);
        let v = value.init(&mut rng, 1.0);
        Ok(PpoAgent {
            opt_pi: Adam::new(pi.len(), cfg.learning_rate),
            opt_v: Adam::new(v.len(), cfg.learning_rate),
            cfg,
            policy,
            value,
            pi,
            v,
            rng,
            updates: 0,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn nodes(&self) -> usize {
        self.policy.output_len()
    }

    pub fn probs(&self, features: &[f64]) -> Vec<f64> {
        action_probs(&self.policy.output(&self.pi, features), features, self.cfg.mask_invalid)
    }

    pub fn value_of(&self, features: &[f64]) -> f64 {
        self.value.output(&self.v, features)[0]
    }

    /// Samples an action; returns it with its log-probability and the value estimate.
    pub fn sample(&mut self, features: &[f64]) -> (usize, f64, f64) {
        let p = self.probs(features);
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut a = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);
        for (j, &pj) in p.iter().enumerate() {
            acc += pj;
            if u < acc && pj > 0.0 {
                a = j;
                break;
            }
        }
        (a, p[a].ln(), self.value_of(features))
    }

    pub fn greedy(&self, features: &[f64]) -> usize {
        let p = self.probs(features);
        (0..p.len()).fold(0, |best, j| if p[j] > p[best] { j } else { best })
    }

    /// Several epochs of minibatch gradient steps on one rollout batch.
    pub fn update(&mut self, batch: &mut TrajectoryBatch) -> Result<UpdateLog, LearnerError> {
        batch.validate()?;
        normalize(&mut batch.advantages);
        let mut order: Vec<usize> = (0..batch.len()).collect();
        let mut log = UpdateLog { update: self.updates, ..Default::default() };
        let mut steps = 0.0;
        for _ in 0..self.cfg.epochs {
            order.shuffle(&mut self.rng);
            for mb in order.chunks(self.cfg.minibatch_size) {
                let (terms, mut gpi, mut gv) =
                    loss_and_grad(&self.policy, &self.pi, &self.value, &self.v, batch, mb, &self.cfg);
                if !terms.total.is_finite() {
                    return Err(LearnerError::NonFinite { what: "loss", update: self.updates });
                }
                if self.cfg.max_grad_norm > 0.0 {
                    let norm = gpi.iter().chain(&gv).map(|g| g * g).sum::<f64>().sqrt();
                    if norm > self.cfg.max_grad_norm {
                        let s = self.cfg.max_grad_norm / norm;
                        gpi.iter_mut().chain(gv.iter_mut()).for_each(|g| *g *= s);
                    }
                }
                self.opt_pi.step(&mut self.pi, &gpi);
                self.opt_v.step(&mut self.v, &gv);
                log.policy_loss += terms.policy;
                log.value_loss += terms.value;
                log.entropy += terms.entropy;
                log.approx_kl += terms.approx_kl;
                log.clip_fraction += terms.clip_fraction;
                steps += 1.0;
            }
        }
        if self.pi.iter().chain(&self.v).any(|p| !p.is_finite()) {
            return Err(LearnerError::NonFinite { what: "parameters", update: self.updates });
        }
        let s = 1.0 / f64::max(steps, 1.0);
        log.policy_loss *= s;
        log.value_loss *= s;
        log.entropy *= s;
        log.approx_kl *= s;
        log.clip_fraction *= s;
        self.updates += 1;
        Ok(log)
    }

    pub fn to_checkpoint(&self) -> String {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: "ppo".into(),
            config: self.cfg.clone(),
            policy_sizes: self.policy.sizes().to_vec(),
            value_sizes: self.value.sizes().to_vec(),
            policy_params: self.pi.clone(),
            value_params: self.v.clone(),
        };
        serde_json::to_string(&ck).expect("checkpoint serializes")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, LearnerError> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| LearnerError::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION || ck.kind != "ppo" {
            return Err(LearnerError::Checkpoint(format!("unsupported {} checkpoint v{}", ck.kind, ck.version)));
        }
        let nodes = *ck.policy_sizes.last().ok_or_else(|| LearnerError::Checkpoint("empty sizes".into()))?;
        let mut agent = PpoAgent::new(nodes, ck.config)?;
        if agent.policy.sizes() != ck.policy_sizes.as_slice()
            || agent.value.sizes() != ck.value_sizes.as_slice()
            || ck.policy_params.len() != agent.pi.len()
            || ck.value_params.len() != agent.v.len()
        {
            return Err(LearnerError::Checkpoint("parameter shapes do not match the config".into()));
        }
        agent.pi = ck.policy_params;
        agent.v = ck.value_params;
        Ok(agent)
    }
}

impl Policy for PpoAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<usize, PolicyError> {
        Ok(self.greedy(&view.observation.features(view.horizon)))
    }
}

/// Trains a fresh agent over `setup.episodes` episodes.
pub fn train_ppo(setup: &TrainSetup<'_>, cfg: LearnerConfig) -> Result<(TrainingLog, PpoAgent), LearnerError> {
    let mut agent = PpoAgent::new(setup.scan.len(), cfg)?;
    let log = continue_ppo(setup, &mut agent)?;
    Ok((log, agent))
}

/// Trains `agent` in place.
pub fn continue_ppo(setup: &TrainSetup<'_>, agent: &mut PpoAgent) -> Result<TrainingLog, LearnerError> {
    let horizon = setup.schedule.horizon;
    let (gamma, lambda) = (agent.cfg.gamma, agent.cfg.gae_lambda);
    let mut log = TrainingLog::default();
    let mut batch = TrajectoryBatch::default();
    let mut pending = 0;
    for ep in 0..setup.episodes {
        let scheme = setup.plan.scheme_for(ep, setup.episodes);
        let schedule = build_schedule(setup.scan, setup.catalog, &setup.schedule, scheme, ep as u64)?;
        let mut engine = Engine::new(setup.scan, &schedule, &setup.start.spec(setup.schedule.base_seed, ep))?;
        let start = engine.state().current;
        let mut traj = TrajectoryBatch::default();
        let mut total = 0.0;
        while !engine.state().done {
            let x = engine.observation().features(horizon);
            let (a, logp, value) = agent.sample(&x);
            let r = engine.step(a)?;
            total += r.reward as f64;
            traj.observations.push(x);
            traj.actions.push(a);
            traj.rewards.push(r.reward as f64);
            traj.values.push(value);
            traj.log_probs.push(logp);
        }
        log.episodes.push(episode_log(ep, scheme, setup.scan, start, engine.state(), total));
        batch.push_episode(traj, gamma, lambda)?;
        pending += 1;
        if pending == agent.cfg.rollout_episodes || ep + 1 == setup.episodes {
            log.updates.push(agent.update(&mut batch)?);
            batch = TrajectoryBatch::default();
            pending = 0;
        }
    }
    Ok(log)
}
