//! The swarm loop: top-K lucky-global selection, truncated-Laplace moves,
//! contraction-expansion schedule and stagnation stopping.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tld::TruncatedLaplace;
use crate::error::{Error, Result};

/// A position and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub position: Vec<f64>,
    pub cost: f64,
}

/// Contraction-expansion schedule and stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CeSchedule {
    pub alpha0: f64,
    pub alpha1: f64,
    /// Iteration budget `T`.
    pub max_iters: usize,
    /// Consecutive unsuccessful iterations before stopping.
    pub max_try: usize,
    /// Minimum relative improvement for an iteration to count as successful.
    pub epsilon: f64,
}

impl Default for CeSchedule {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            alpha1: 0.4,
            max_iters: 1000,
            max_try: 20,
            epsilon: 1e-6,
        }
    }
}

impl CeSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 >= self.alpha1 && self.alpha1 > 0.0) {
            return Err(Error::BadConfig("need alpha0 >= alpha1 > 0".into()));
        }
        if self.max_iters == 0 || self.max_try == 0 {
            return Err(Error::BadConfig("max_iters and max_try must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::BadConfig("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// `α = (1 − mt/maxTry) (α1 + (α0 − α1)(T − t)/T)`.
    pub fn coefficient(&self, t: usize, mt: usize) -> f64 {
        ce_coefficient(self, t, mt)
    }
}

pub fn ce_coefficient(s: &CeSchedule, t: usize, mt: usize) -> f64 {
    let big_t = s.max_iters as f64;
    let stagnation = 1.0 - mt as f64 / s.max_try as f64;
    stagnation * (s.alpha1 + (s.alpha0 - s.alpha1) * (big_t - t as f64) / big_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PqpsoConfig {
    pub particles: usize,
    /// Size of the top-K list the lucky global best is drawn from.
    pub top_k: usize,
    pub schedule: CeSchedule,
    pub seed: u64,
}

impl Default for PqpsoConfig {
    fn default() -> Self {
        Self {
            particles: 40,
            top_k: 5,
            schedule: CeSchedule::default(),
            seed: 0,
        }
    }
}

/// Selection probabilities `r_k = c_k / Σc` with `c_k = 1 + (E_max − E_k)/(E_max − E_min)`.
pub fn lucky_global_probabilities(costs: &[f64]) -> Result<Vec<f64>> {
    if costs.is_empty() {
        return Err(Error::Empty("top-K list"));
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(Error::BadInput("top-K costs must be finite".into()));
    }
    let max = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let c: Vec<f64> = if max == min {
        vec![1.0; costs.len()]
    } else {
        costs.iter().map(|e| 1.0 + (max - e) / (max - min)).collect()
    };
    let total: f64 = c.iter().sum();
    Ok(c.into_iter().map(|v| v / total).collect())
}

/// Index of the member drawn from the point-mass distribution over the top-K list.
pub fn lucky_global_index<R: Rng + ?Sized>(costs: &[f64], rng: &mut R) -> Result<usize> {
    let probs = lucky_global_probabilities(costs)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(k);
        }
    }
    Ok(probs.len() - 1)
}

/// Draws the lucky global best position from the top-K list.
pub fn lucky_global<'a, R: Rng + ?Sized>(top: &'a [Member], rng: &mut R) -> Result<&'a [f64]> {
    let costs: Vec<f64> = top.iter().map(|m| m.cost).collect();
    Ok(&top[lucky_global_index(&costs, rng)?].position)
}

/// Live optimizer state.
#[derive(Debug, Clone)]
pub struct SwarmState {
    pub positions: Vec<Vec<f64>>,
    pub pbest: Vec<Member>,
    /// The K best personal bests, ascending by cost.
    pub top_k: Vec<Member>,
    pub iteration: usize,
    /// Consecutive unsuccessful iterations.
    pub mt: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_cost: f64,
    pub alpha: f64,
    pub mt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationBudget,
    Stagnation,
}

#[derive(Debug, Clone)]
pub struct PqpsoResult {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    /// Row 0 is the initial swarm; row `t` follows iteration `t`.
    pub trace: Vec<TraceRow>,
    pub stop: StopReason,
}

impl PqpsoResult {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.iteration)
    }
}

fn top_k_of(pbest: &[Member], k: usize) -> Vec<Member> {
    let mut idx: Vec<usize> = (0..pbest.len()).collect();
    idx.sort_by(|&a, &b| pbest[a].cost.total_cmp(&pbest[b].cost).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|i| pbest[i].clone()).collect()
}

fn check_costs(costs: &[f64], iteration: usize) -> Result<()> {
    if let Some((i, c)) = costs.iter().enumerate().find(|(_, c)| !c.is_finite()) {
        return Err(Error::AbortWithDiagnostics(format!(
            "objective returned {c} for particle {i} at iteration {iteration}"
        )));
    }
    Ok(())
}

/// Minimizes `cost` over the box `[lower, upper]^dims`.
pub fn pqpso_minimize<F>(cost: F, dims: usize, lower: f64, upper: f64, cfg: &PqpsoConfig) -> Result<PqpsoResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pqpso_minimize_seeded(cost, dims, lower, upper, cfg, &[])
}

/// Like [`pqpso_minimize`], with `seeds` replacing the first initial positions.
///
/// Seed positions are clamped to the box.
pub fn pqpso_minimize_seeded<F>(
    cost: F,
    dims: usize,
    lower: f64,
    upper: f64,
    cfg: &PqpsoConfig,
    seeds: &[Vec<f64>],
) -> Result<PqpsoResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.schedule.validate()?;
    if dims == 0 {
        return Err(Error::BadConfig("need at least one dimension".into()));
    }
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(Error::BadConfig(format!("bounds must be finite with lower < upper, got [{lower}, {upper}]")));
    }
    if cfg.top_k == 0 || cfg.particles < cfg.top_k {
        return Err(Error::BadConfig(format!(
            "need particles >= K >= 1, got {} particles, K = {}",
            cfg.particles, cfg.top_k
        )));
    }
    if seeds.iter().any(|s| s.len() != dims) {
        return Err(Error::BadConfig("seed particle has the wrong dimension".into()));
    }
    let sched = cfg.schedule;
    let min_scale = 1e-12 * (upper - lower);

    // Stream 0 drives the lucky-global draws; particle i owns stream i + 1.
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut streams: Vec<ChaCha8Rng> = (0..cfg.particles)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(i as u64 + 1);
            r
        })
        .collect();

    let positions: Vec<Vec<f64>> = streams
        .iter_mut()
        .enumerate()
        .map(|(i, rng)| match seeds.get(i) {
            Some(s) => s.iter().map(|v| v.clamp(lower, upper)).collect(),
            None => (0..dims).map(|_| rng.random_range(lower..=upper)).collect(),
        })
        .collect();
    let costs: Vec<f64> = positions.par_iter().map(|p| cost(p)).collect();
    check_costs(&costs, 0)?;
    let pbest: Vec<Member> = positions
        .iter()
        .zip(&costs)
        .map(|(p, &c)| Member {
            position: p.clone(),
            cost: c,
        })
        .collect();
    let top_k = top_k_of(&pbest, cfg.top_k);
    let mut state = SwarmState {
        positions,
        pbest,
        top_k,
        iteration: 0,
        mt: 0,
        seed: cfg.seed,
    };
    let mut trace = vec![TraceRow {
        iteration: 0,
        best_cost: state.top_k[0].cost,
        alpha: sched.coefficient(0, 0),
        mt: 0,
    }];

    let mut stop = StopReason::IterationBudget;
    for t in 0..sched.max_iters {
        let alpha = sched.coefficient(t, state.mt);
        let lg = lucky_global(&state.top_k, &mut master)?.to_vec();
        let prev_best = state.top_k[0].cost;

        let moved: Vec<(Vec<f64>, f64)> = streams
            .par_iter_mut()
            .zip(state.positions.par_iter())
            .zip(state.pbest.par_iter())
            .map(|((rng, x), pb)| {
                let next: Vec<f64> = (0..dims)
                    .map(|d| {
                        let phi: f64 = rng.random();
                        let mu = (phi * pb.position[d] + (1.0 - phi) * lg[d]).clamp(lower, upper);
                        let scale = (alpha * (lg[d] - x[d]).abs()).max(min_scale);
                        let u: f64 = rng.sample(Open01);
                        TruncatedLaplace::new(mu, scale, lower, upper)
                            .and_then(|tl| tl.inverse_cdf(u))
                            .expect("location lies inside the box and scale is positive")
                    })
                    .collect();
                let c = cost(&next);
                (next, c)
            })
            .collect();
        let costs: Vec<f64> = moved.iter().map(|(_, c)| *c).collect();
        check_costs(&costs, t + 1)?;

        for (i, (pos, c)) in moved.into_iter().enumerate() {
            if c < state.pbest[i].cost {
                state.pbest[i] = Member {
                    position: pos.clone(),
                    cost: c,
                };
            }
            state.positions[i] = pos;
        }
        state.top_k = top_k_of(&state.pbest, cfg.top_k);
        state.iteration = t + 1;
        let new_best = state.top_k[0].cost;
        let rel = (prev_best - new_best) / prev_best.abs().max(1e-300);
        if rel < sched.epsilon {
            state.mt += 1;
        } else {
            state.mt = 0;
        }
        trace.push(TraceRow {
            iteration: t + 1,
            best_cost: new_best,
            alpha,
            mt: state.mt,
        });
        log::trace!("iteration {} best {new_best:e} alpha {alpha:.4} mt {}", t + 1, state.mt);
        if state.mt >= sched.max_try {
            stop = StopReason::Stagnation;
            break;
        }
    }
    let best = &state.top_k[0];
    Ok(PqpsoResult {
        best_position: best.position.clone(),
        best_cost: best.cost,
        trace,
        stop,
    })
}
