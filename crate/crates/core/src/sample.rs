//! Particle belief propagation with particle-swarm refinement.
//!
//! Each node's belief is a set of weighted particles. Every iteration draws a
//! fresh set from the previous belief, optionally moves it with PSO towards
//! high-likelihood regions, and reweights it with the product of incoming
//! factor messages. A factor message is a mixture over the sender's particles,
//! so one weight update costs `O(L * P)` per link.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{BpOutput, Estimates, NodeEstimate, NodeKind, Trace};
use crate::geometry::{circular_gaussian_log_density, grid_initial_targets, log_likelihood_unchecked, Arena, Point2, TargetPrior};
use crate::problem::Problem;
use crate::rng::{stream, StreamRng, StreamTag};

/// Atoms this far (in log units) below the heaviest one are dropped from a message.
const LOG_SKIP: f64 = 50.0;

/// Re-draws from the prior allowed before a weight collapse becomes an error.
pub const MAX_REDRAWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Point2,
    pub weight: f64,
    pub velocity: Point2,
    pub local_best: Point2,
    /// Log objective at `local_best`.
    pub local_best_score: f64,
}

impl Particle {
    fn at(position: Point2, weight: f64) -> Self {
        Self { position, weight, velocity: Point2::ORIGIN, local_best: position, local_best_score: f64::NEG_INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleBelief {
    pub particles: Vec<Particle>,
    pub global_best: Point2,
    pub global_best_score: f64,
}

impl ParticleBelief {
    /// Equally weighted particles at `positions`.
    pub fn uniform(positions: impl IntoIterator<Item = Point2>) -> Self {
        let mut particles: Vec<Particle> = positions.into_iter().map(|p| Particle::at(p, 0.0)).collect();
        let w = 1.0 / particles.len().max(1) as f64;
        particles.iter_mut().for_each(|p| p.weight = w);
        let global_best = particles.first().map_or(Point2::ORIGIN, |p| p.position);
        Self { particles, global_best, global_best_score: f64::NEG_INFINITY }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// Weighted mean (the MMSE estimate) and per-coordinate weighted variance.
    pub fn estimate(&self) -> NodeEstimate {
        let total = self.weight_sum();
        let (mut mx, mut my) = (0.0, 0.0);
        for p in &self.particles {
            mx += p.weight * p.position.x;
            my += p.weight * p.position.y;
        }
        mx /= total;
        my /= total;
        let (mut vx, mut vy) = (0.0, 0.0);
        for p in &self.particles {
            vx += p.weight * (p.position.x - mx).powi(2);
            vy += p.weight * (p.position.y - my).powi(2);
        }
        NodeEstimate { mean: Point2::new(mx, my), var: [vx / total, vy / total] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub c1: f64,
    pub c2: f64,
    /// PSO iterations per BP iteration; 0 disables PSO.
    pub n_pso: usize,
    pub inertia: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self { c1: 1.5, c2: 1.5, n_pso: 10, inertia: 0.72 }
    }
}

impl PsoConfig {
    pub fn disabled() -> Self {
        Self { n_pso: 0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("inertia", self.inertia)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Where [`draw_particles`] samples from.
#[derive(Debug, Clone, Copy)]
pub enum ParticleSource<'a> {
    /// Uniform over the arena.
    Flat(Arena),
    /// Circular Gaussian with per-coordinate variance `var`.
    Gaussian { mean: Point2, var: f64 },
    /// A weighted particle belief, sampled by systematic resampling.
    Belief(&'a ParticleBelief),
}

pub fn draw_particles(source: ParticleSource<'_>, count: usize, rng: &mut StreamRng) -> Result<ParticleBelief> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!("particle count must be >= 2, got {count}")));
    }
    let belief = match source {
        ParticleSource::Flat(arena) => ParticleBelief::uniform((0..count).map(|_| {
            Point2::new(rng.gen_range(arena.min.x..=arena.max.x), rng.gen_range(arena.min.y..=arena.max.y))
        })),
        ParticleSource::Gaussian { mean, var } => {
            if !(var >= 0.0) || !var.is_finite() {
                return Err(Error::InvalidParameter(format!("Gaussian source variance must be finite, got {var}")));
            }
            let sd = var.sqrt();
            ParticleBelief::uniform((0..count).map(|_| {
                let dx: f64 = StandardNormal.sample(rng);
                let dy: f64 = StandardNormal.sample(rng);
                Point2::new(mean.x + sd * dx, mean.y + sd * dy)
            }))
        }
        ParticleSource::Belief(b) => resample_to(b, count, rng)?,
    };
    Ok(belief)
}

/// Systematic resampling to the same number of particles.
pub fn resample(belief: &ParticleBelief, rng: &mut StreamRng) -> Result<ParticleBelief> {
    resample_to(belief, belief.len(), rng)
}

/// Systematic resampling to `count` equally weighted particles; particle `j`
/// is copied `count * w_j` times in expectation.
pub fn resample_to(belief: &ParticleBelief, count: usize, rng: &mut StreamRng) -> Result<ParticleBelief> {
    let total = belief.weight_sum();
    if belief.is_empty() || !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidParameter("cannot resample a belief without positive weights".into()));
    }
    let step = total / count as f64;
    let mut u = rng.gen::<f64>() * step;
    let mut out = Vec::with_capacity(count);
    let mut cum = 0.0;
    let mut j = 0;
    for _ in 0..count {
        while j + 1 < belief.len() && cum + belief.particles[j].weight <= u {
            cum += belief.particles[j].weight;
            j += 1;
        }
        out.push(belief.particles[j].position);
        u += step;
    }
    Ok(ParticleBelief::uniform(out))
}

/// Particle representation of a variable-to-factor message: distinct atoms
/// with log weights normalized to sum to one, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageParticles {
    pub sender: NodeKind,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `|x|` for target senders, zero for receivers.
    offsets: Vec<f64>,
    log_weights: Vec<f64>,
    max_log_weight: f64,
}

impl MessageParticles {
    /// Merges coincident atoms, drops atoms with negligible weight and normalizes.
    pub fn new(sender: NodeKind, positions: &[Point2], log_weights: &[f64]) -> Result<Self> {
        if positions.len() != log_weights.len() {
            return Err(Error::DimensionMismatch(format!("{} positions, {} weights", positions.len(), log_weights.len())));
        }
        let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::InvalidParameter("message has no finite weights".into()));
        }
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut pos = Vec::new();
        let mut lin = Vec::new();
        for (p, lw) in positions.iter().zip(log_weights) {
            if *lw < max - LOG_SKIP {
                continue;
            }
            let w = (lw - max).exp();
            match index.entry((p.x.to_bits(), p.y.to_bits())) {
                std::collections::hash_map::Entry::Occupied(e) => lin[*e.get()] += w,
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(pos.len());
                    pos.push(*p);
                    lin.push(w);
                }
            }
        }
        let total: f64 = lin.iter().sum();
        let log_weights: Vec<f64> = lin.iter().map(|w| (w / total).ln()).collect();
        let offsets = match sender {
            NodeKind::Target => pos.iter().map(|p| p.norm()).collect(),
            NodeKind::Receiver => vec![0.0; pos.len()],
        };
        Ok(Self {
            sender,
            xs: pos.iter().map(|p| p.x).collect(),
            ys: pos.iter().map(|p| p.y).collect(),
            offsets,
            max_log_weight: log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            log_weights,
        })
    }

    /// All particles of a belief with their weights as given.
    pub fn from_belief(sender: NodeKind, belief: &ParticleBelief) -> Result<Self> {
        let pos: Vec<Point2> = belief.particles.iter().map(|p| p.position).collect();
        let lw: Vec<f64> = belief.particles.iter().map(|p| p.weight.ln()).collect();
        Self::new(sender, &pos, &lw)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Point2> + '_ {
        self.xs.iter().zip(&self.ys).map(|(x, y)| Point2::new(*x, *y))
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `log sum_k exp(lw_k - r_k^2 / 2s)` with `r_k = base - offset_k - |q - x_k|`.
    fn log_sum(&self, base: f64, q: Point2, inv2s: f64) -> f64 {
        const LANES: usize = 8;
        let reference = self.max_log_weight;
        let term = |x: f64, y: f64, off: f64, lw: f64| {
            let (dx, dy) = (q.x - x, q.y - y);
            let r = base - off - (dx * dx + dy * dy).sqrt();
            lw - r * r * inv2s
        };
        let mut acc = [0.0f64; LANES];
        let xs = self.xs.chunks_exact(LANES);
        let ys = self.ys.chunks_exact(LANES);
        let offs = self.offsets.chunks_exact(LANES);
        let lws = self.log_weights.chunks_exact(LANES);
        let tail = (xs.remainder(), ys.remainder(), offs.remainder(), lws.remainder());
        for (((x, y), o), w) in xs.zip(ys).zip(offs).zip(lws) {
            for l in 0..LANES {
                acc[l] += exp_nonpositive(term(x[l], y[l], o[l], w[l]) - reference);
            }
        }
        let mut sum: f64 = acc.iter().sum();
        for l in 0..tail.0.len() {
            sum += exp_nonpositive(term(tail.0[l], tail.1[l], tail.2[l], tail.3[l]) - reference);
        }
        if sum > 1e-250 {
            return reference + sum.ln();
        }
        // every term underflowed against the weight reference: rescale by the largest term
        let exps: Vec<f64> = (0..self.len()).map(|k| term(self.xs[k], self.ys[k], self.offsets[k], self.log_weights[k])).collect();
        let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + exps.iter().map(|e| (e - max).exp()).sum::<f64>().ln()
    }
}

/// `exp(x)` for `x <= 0`, written so the compiler can vectorize it; relative
/// error below 1e-14, flushes to zero under `-708`.
#[inline(always)]
fn exp_nonpositive(x: f64) -> f64 {
    const MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52
    const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    let x = x.max(-708.0);
    let t = x * std::f64::consts::LOG2_E + MAGIC;
    let k = t - MAGIC;
    let r = x - k * LN2_HI - k * LN2_LO;
    // Taylor polynomial on |r| <= ln2/2
    let mut p = 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let ki = (t.to_bits() as i64).wrapping_sub(MAGIC.to_bits() as i64);
    p * f64::from_bits((ki.wrapping_add(1023) << 52) as u64)
}

/// Log of the factor message `sum_j w_j p(R | query, sender_j)`.
pub fn log_message_at(sender: &MessageParticles, range: f64, meas_var: f64, query: Point2) -> f64 {
    let base = match sender.sender {
        NodeKind::Receiver => range - query.norm(),
        NodeKind::Target => range,
    };
    sender.log_sum(base, query, 1.0 / (2.0 * meas_var)) - 0.5 * (2.0 * PI * meas_var).ln()
}

/// Message density at `query`.
pub fn evaluate_message_at(sender: &MessageParticles, range: f64, meas_var: f64, query: Point2) -> f64 {
    log_message_at(sender, range, meas_var, query).exp()
}

/// One incoming factor message of a node.
#[derive(Debug, Clone, Copy)]
pub struct LinkMessage<'a> {
    pub sender: &'a MessageParticles,
    pub range: f64,
    pub meas_var: f64,
}

/// Sets `w_j ∝ prior(x_j) * prod_links message(x_j)` and normalizes.
///
/// Returns the log message values per link and particle, needed to form the
/// node's outgoing messages. Fails with a weight collapse when no particle
/// gets a finite positive weight.
pub fn update_weights(
    belief: &mut ParticleBelief,
    log_prior: &dyn Fn(Point2) -> f64,
    links: &[LinkMessage<'_>],
) -> Result<Vec<Vec<f64>>> {
    let n = belief.len();
    let mut msg = vec![vec![0.0; n]; links.len()];
    let mut logw = vec![0.0; n];
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for j in 0..n {
        let p = belief.particles[j].position;
        if let Some(&first) = seen.get(&(p.x.to_bits(), p.y.to_bits())) {
            for m in msg.iter_mut() {
                m[j] = m[first];
            }
            logw[j] = logw[first];
            continue;
        }
        seen.insert((p.x.to_bits(), p.y.to_bits()), j);
        let mut total = log_prior(p);
        for (l, link) in links.iter().enumerate() {
            let v = log_message_at(link.sender, link.range, link.meas_var, p);
            msg[l][j] = v;
            total += v;
        }
        logw[j] = total;
    }
    let max = logw.iter().cloned().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::WeightCollapse { node: String::new(), attempts: 0 });
    }
    let total: f64 = logw.iter().map(|v| if v.is_nan() { 0.0 } else { (v - max).exp() }).sum();
    for (p, v) in belief.particles.iter_mut().zip(&logw) {
        p.weight = if v.is_nan() { 0.0 } else { (v - max).exp() / total };
    }
    Ok(msg)
}

/// One PSO move: velocity and position update followed by the local/global best update.
pub fn pso_step(
    belief: &mut ParticleBelief,
    objective: &dyn Fn(Point2) -> f64,
    cfg: &PsoConfig,
    bounds: Option<&Arena>,
    rng: &mut StreamRng,
) {
    let g = belief.global_best;
    for p in belief.particles.iter_mut() {
        let (r1x, r1y, r2x, r2y): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
        p.velocity = Point2::new(
            cfg.inertia * p.velocity.x + cfg.c1 * r1x * (p.local_best.x - p.position.x) + cfg.c2 * r2x * (g.x - p.position.x),
            cfg.inertia * p.velocity.y + cfg.c1 * r1y * (p.local_best.y - p.position.y) + cfg.c2 * r2y * (g.y - p.position.y),
        );
        let moved = Point2::new(p.position.x + p.velocity.x, p.position.y + p.velocity.y);
        p.position = bounds.map_or(moved, |a| a.clamp(moved));
        let score = objective(p.position);
        if score >= p.local_best_score {
            p.local_best = p.position;
            p.local_best_score = score;
        }
    }
    refresh_global_best(belief);
}

fn refresh_global_best(belief: &mut ParticleBelief) {
    for p in &belief.particles {
        if p.local_best_score > belief.global_best_score {
            belief.global_best_score = p.local_best_score;
            belief.global_best = p.local_best;
        }
    }
}

/// Runs `cfg.n_pso` PSO iterations, then moves every particle to its local best
/// and resets the weights to uniform. A no-op when `n_pso == 0`.
pub fn pso_refine(
    belief: &mut ParticleBelief,
    objective: &dyn Fn(Point2) -> f64,
    cfg: &PsoConfig,
    bounds: Option<&Arena>,
    rng: &mut StreamRng,
) {
    if cfg.n_pso == 0 || belief.is_empty() {
        return;
    }
    belief.global_best_score = f64::NEG_INFINITY;
    for p in belief.particles.iter_mut() {
        p.local_best_score = objective(p.local_best);
    }
    refresh_global_best(belief);
    for _ in 0..cfg.n_pso {
        pso_step(belief, objective, cfg, bounds, rng);
    }
    let w = 1.0 / belief.len() as f64;
    for p in belief.particles.iter_mut() {
        p.position = p.local_best;
        p.weight = w;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub n_iter: usize,
    /// Particles per target (`L`).
    pub n_particles: usize,
    /// Particles per receiver (`P`); defaults to `n_particles`.
    pub n_receiver_particles: Option<usize>,
    pub pso: PsoConfig,
    pub seed: u64,
    /// Grid side for the target estimates the first receiver PSO objective uses.
    pub init_grid: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { n_iter: 40, n_particles: 100, n_receiver_particles: None, pso: PsoConfig::default(), seed: 0, init_grid: 21 }
    }
}

impl SampleConfig {
    pub fn receiver_particles(&self) -> usize {
        self.n_receiver_particles.unwrap_or(self.n_particles)
    }
}

/// Particle beliefs and per-link message values of one completed iteration.
struct NodeState {
    belief: ParticleBelief,
    /// `msgs[link][particle]`: log incoming message values at the particles.
    msgs: Vec<Vec<f64>>,
}

impl NodeState {
    fn fresh(belief: ParticleBelief, links: usize) -> Self {
        let n = belief.len();
        Self { belief, msgs: vec![vec![0.0; n]; links] }
    }

    /// Belief divided by the message that arrived over `link`.
    fn outgoing(&self, kind: NodeKind, link: usize) -> Result<MessageParticles> {
        let pos: Vec<Point2> = self.belief.particles.iter().map(|p| p.position).collect();
        let lw: Vec<f64> = self.belief.particles.iter().zip(&self.msgs[link]).map(|(p, m)| p.weight.ln() - m).collect();
        MessageParticles::new(kind, &pos, &lw)
    }
}

/// Called with `(iteration, kind, node, belief)` after every weight update.
pub type ParticleObserver<'o> = dyn FnMut(usize, NodeKind, usize, &ParticleBelief) + 'o;

pub fn run_sample_bp(problem: &Problem, cfg: &SampleConfig) -> Result<BpOutput> {
    run_sample_bp_observed(problem, cfg, &mut |_, _, _, _| {})
}

pub fn run_sample_bp_observed(problem: &Problem, cfg: &SampleConfig, observer: &mut ParticleObserver<'_>) -> Result<BpOutput> {
    if cfg.n_iter < 1 {
        return Err(Error::InvalidParameter("n_iter must be >= 1".into()));
    }
    if cfg.n_particles < 2 || cfg.receiver_particles() < 2 {
        return Err(Error::InvalidParameter("particle counts must be >= 2".into()));
    }
    cfg.pso.validate()?;
    let a = problem.num_targets();
    let m = problem.num_receivers();
    let l_t = cfg.n_particles;
    let l_r = cfg.receiver_particles();
    let seed = cfg.seed;

    let target_source = |i: usize| match problem.target_prior.for_target(i) {
        Some((mean, var)) => ParticleSource::Gaussian { mean, var },
        None => ParticleSource::Flat(problem.arena),
    };
    let receiver_source = |k: usize| ParticleSource::Gaussian { mean: problem.receiver_prior_means[k], var: problem.receiver_var(k) };
    let target_log_prior = |i: usize| {
        let prior = problem.target_prior.clone();
        move |p: Point2| match prior.for_target(i) {
            Some((mean, var)) => circular_gaussian_log_density(p, mean, var),
            None => 0.0,
        }
    };

    let mut targets = (0..a)
        .map(|i| Ok(NodeState::fresh(draw_particles(target_source(i), l_t, &mut stream(seed, StreamTag::TargetParticles, i as u64, 0))?, m)))
        .collect::<Result<Vec<_>>>()?;
    let mut receivers = (0..m)
        .map(|k| Ok(NodeState::fresh(draw_particles(receiver_source(k), l_r, &mut stream(seed, StreamTag::ReceiverParticles, k as u64, 0))?, a)))
        .collect::<Result<Vec<_>>>()?;

    let mut target_est = match &problem.target_prior {
        TargetPrior::Gaussian { means, .. } => means.clone(),
        TargetPrior::Flat => grid_initial_targets(
            &problem.measurements,
            &problem.receiver_prior_means,
            &problem.link_vars(),
            &problem.arena,
            cfg.init_grid,
        ),
    };
    let mut receiver_est = problem.receiver_prior_means.clone();
    let mut trace = Trace::default();

    for iter in 1..=cfg.n_iter {
        let l64 = iter as u64;
        // messages of iteration l - 1, [sender][link]
        let from_targets = targets
            .iter()
            .map(|s| (0..m).map(|k| s.outgoing(NodeKind::Target, k)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let from_receivers = receivers
            .iter()
            .map(|s| (0..a).map(|i| s.outgoing(NodeKind::Receiver, i)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;

        let mut new_targets = Vec::with_capacity(a);
        for i in 0..a {
            let links: Vec<LinkMessage> = (0..m)
                .map(|k| LinkMessage { sender: &from_receivers[k][i], range: problem.range(i, k), meas_var: problem.link_var(i, k) })
                .collect();
            let objective = |p: Point2| -> f64 {
                (0..m).map(|k| log_likelihood_unchecked(problem.range(i, k), p, receiver_est[k], problem.link_var(i, k))).sum()
            };
            let prior = target_log_prior(i);
            let state = advance_node(
                NodeKind::Target,
                i,
                &targets[i].belief,
                target_source(i),
                l_t,
                &links,
                &prior,
                &objective,
                cfg,
                Some(&problem.arena),
                (seed, StreamTag::TargetResample, StreamTag::TargetPso, StreamTag::TargetParticles, l64),
            )?;
            observer(iter, NodeKind::Target, i, &state.belief);
            new_targets.push(state);
        }

        let mut new_receivers = Vec::with_capacity(m);
        for k in 0..m {
            let links: Vec<LinkMessage> = (0..a)
                .map(|i| LinkMessage { sender: &from_targets[i][k], range: problem.range(i, k), meas_var: problem.link_var(i, k) })
                .collect();
            let mean = problem.receiver_prior_means[k];
            let var = problem.receiver_var(k);
            let prior = move |p: Point2| circular_gaussian_log_density(p, mean, var);
            let objective = |p: Point2| -> f64 {
                prior(p)
                    + (0..a)
                        .map(|i| log_likelihood_unchecked(problem.range(i, k), target_est[i], p, problem.link_var(i, k)))
                        .sum::<f64>()
            };
            let state = advance_node(
                NodeKind::Receiver,
                k,
                &receivers[k].belief,
                receiver_source(k),
                l_r,
                &links,
                &prior,
                &objective,
                cfg,
                None,
                (seed, StreamTag::ReceiverResample, StreamTag::ReceiverPso, StreamTag::ReceiverParticles, l64),
            )?;
            observer(iter, NodeKind::Receiver, k, &state.belief);
            new_receivers.push(state);
        }

        targets = new_targets;
        receivers = new_receivers;
        let estimates = Estimates {
            targets: targets.iter().map(|s| s.belief.estimate()).collect(),
            receivers: receivers.iter().map(|s| s.belief.estimate()).collect(),
        };
        target_est = estimates.target_means();
        receiver_est = estimates.receiver_means();
        trace.iterations.push(estimates);
    }

    let estimates = trace.iterations.last().cloned().expect("n_iter >= 1");
    Ok(BpOutput { estimates, trace })
}

/// Draw, PSO, reweight for one node, re-drawing from the prior on collapse.
#[allow(clippy::too_many_arguments)]
fn advance_node(
    kind: NodeKind,
    node: usize,
    previous: &ParticleBelief,
    prior_source: ParticleSource<'_>,
    count: usize,
    links: &[LinkMessage<'_>],
    log_prior: &dyn Fn(Point2) -> f64,
    objective: &dyn Fn(Point2) -> f64,
    cfg: &SampleConfig,
    bounds: Option<&Arena>,
    (seed, resample_tag, pso_tag, redraw_tag, iter): (u64, StreamTag, StreamTag, StreamTag, u64),
) -> Result<NodeState> {
    let n = node as u64;
    let mut belief = draw_particles(ParticleSource::Belief(previous), count, &mut stream(seed, resample_tag, n, iter))?;
    for attempt in 0..=MAX_REDRAWS {
        if attempt > 0 {
            log::warn!("{} {node}: particle weights collapsed at iteration {iter}, re-drawing from the prior", kind.as_str());
            let key = (iter << 8) | attempt as u64;
            belief = draw_particles(prior_source, count, &mut stream(seed, redraw_tag, n, key))?;
        }
        pso_refine(&mut belief, objective, &cfg.pso, bounds, &mut stream(seed, pso_tag, n, (iter << 8) | attempt as u64));
        match update_weights(&mut belief, log_prior, links) {
            Ok(msgs) => return Ok(NodeState { belief, msgs }),
            Err(Error::WeightCollapse { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::WeightCollapse { node: format!("{} {node}", kind.as_str()), attempts: MAX_REDRAWS })
}

/// Collects particle beliefs as CSV rows `iter,node_kind,node_id,particle_id,x,y,weight`.
#[derive(Debug, Clone, Default)]
pub struct ParticleDump {
    csv: String,
}

impl ParticleDump {
    pub fn new() -> Self {
        Self { csv: String::from("iter,node_kind,node_id,particle_id,x,y,weight\n") }
    }

    pub fn record(&mut self, iter: usize, kind: NodeKind, node: usize, belief: &ParticleBelief) {
        for (j, p) in belief.particles.iter().enumerate() {
            let _ = writeln!(self.csv, "{iter},{},{node},{j},{},{},{}", kind.as_str(), p.position.x, p.position.y, p.weight);
        }
    }

    pub fn into_csv(self) -> String {
        self.csv
    }
}
