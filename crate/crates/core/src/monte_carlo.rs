//! Sampling oracle for the closed-form analysis.
//!
//! With a Dirac reference, the squared Wasserstein distance of the state PDF
//! is exactly the mean-square norm of the state, so path simulation gives an
//! independent estimate of the distance history. Paths are simulated in
//! fixed blocks with per-path RNG streams derived from `(seed, path index)`,
//! and block statistics are merged in index order, so the output is
//! bit-identical regardless of how many worker threads run the blocks.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::gaussian_mixture::{GaussianMixture, MixtureSampler};
use crate::jump_process::{embed_semi_markov, JumpProcess, OccupationVector};
use crate::propagation::{Sjls, WassersteinTrajectory};
use crate::Result;

/// Paths per aggregation block; fixed so the partition does not depend on
/// the worker count.
const BLOCK: usize = 1024;

/// Slack for the non-increasing check in [`ms_stability_check`].
pub const MONOTONE_SLACK: f64 = 1e-12;

/// How modes are drawn along a sample path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    /// Draw the mode at step `r` from `pi(r)`, independently across time.
    /// This matches the weighting of the closed-form propagation exactly.
    IndependentDraw,
    /// Walk the Markov (or embedded semi-Markov) chain along the path. The
    /// hidden mode at time 0 is drawn from `pi(0)`, so the first applied
    /// jump is distributed as `pi(0) P`, matching the independent-draw
    /// marginal at `r = 1`.
    MarkovPath,
}

/// Simulation parameters. The seed is explicit; there is no wall-clock
/// fallback.
#[derive(Debug, Clone, Copy)]
pub struct SimulationConfig {
    pub samples: usize,
    pub horizon: usize,
    pub seed: u64,
    pub semantics: Semantics,
}

/// Estimated mean-square norm at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub k: usize,
    pub mean_sq_norm: f64,
    pub std_error: f64,
}

/// Outcome of the finite-horizon stability check. Finite data cannot prove
/// instability, so the negative verdict is merely inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVerdict {
    Stable,
    Inconclusive,
}

enum ModeDriver {
    Independent(Vec<OccupationVector>),
    /// Chain over (possibly expanded) states; the applied mode is
    /// `state / mode_divisor`.
    Chain {
        rows: Vec<Vec<f64>>,
        seed: Vec<f64>,
        mode_divisor: usize,
    },
}

fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn build_driver(sys: &Sjls, cfg: &SimulationConfig) -> Result<ModeDriver> {
    match cfg.semantics {
        Semantics::IndependentDraw => Ok(ModeDriver::Independent(
            sys.jump().occupation_sequence(cfg.horizon),
        )),
        Semantics::MarkovPath => match sys.jump() {
            JumpProcess::Markov(p) => {
                let m = p.pi0().len();
                let rows = (0..m)
                    .map(|i| (0..m).map(|j| p.transition()[(i, j)]).collect())
                    .collect();
                Ok(ModeDriver::Chain {
                    rows,
                    seed: p.pi0().as_slice().to_vec(),
                    mode_divisor: 1,
                })
            }
            JumpProcess::SemiMarkov(p) => {
                let emb = embed_semi_markov(p)?;
                let n = emb.chain.pi0().len();
                let rows = (0..n)
                    .map(|i| (0..n).map(|j| emb.chain.transition()[(i, j)]).collect())
                    .collect();
                Ok(ModeDriver::Chain {
                    rows,
                    seed: emb.chain.pi0().as_slice().to_vec(),
                    mode_divisor: emb.sojourn_cap(),
                })
            }
            JumpProcess::Iid(_) => Err(Error::SemanticsUnsupported(
                "markov-path semantics need a Markov or semi-Markov jump process".into(),
            )),
        },
    }
}

/// Per-step Welford accumulator over paths.
struct Accum {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accum {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, values: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for (i, &v) in values.iter().enumerate() {
            let delta = v - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (v - self.mean[i]);
        }
    }

    /// Chan-style exact merge; associative enough for fixed-order folding.
    fn merge(mut self, other: Accum) -> Accum {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
        self
    }
}

/// Simulates sample paths of the jump system and estimates the mean-square
/// norm of the state at every step `k = 0 ..= horizon`.
pub fn simulate(
    sys: &Sjls,
    rho0: &GaussianMixture,
    cfg: &SimulationConfig,
) -> Result<Vec<MomentEstimate>> {
    if cfg.samples == 0 {
        return Err(Error::WeightInvalid("samples must be at least 1".into()));
    }
    if rho0.dim() != sys.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial PDF has dimension {}, system has {}",
            rho0.dim(),
            sys.state_dim()
        )));
    }
    let driver = build_driver(sys, cfg)?;
    let sampler = MixtureSampler::new(rho0);
    let steps = cfg.horizon + 1;

    let blocks = cfg.samples.div_ceil(BLOCK);
    let partials: Vec<Accum> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Accum::new(steps);
            let mut sq = vec![0.0f64; steps];
            let start = b * BLOCK;
            let end = (start + BLOCK).min(cfg.samples);
            for path in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(path as u64);
                let mut x = sampler.draw(&mut rng);
                sq[0] = x.norm_squared();

                match &driver {
                    ModeDriver::Independent(pi_seq) => {
                        for (r, pi) in pi_seq.iter().enumerate() {
                            let u: f64 = rand::Rng::random(&mut rng);
                            let mode = inverse_cdf(pi.as_slice(), u);
                            x = apply_mode(sys, mode, &x);
                            sq[r + 1] = x.norm_squared();
                        }
                    }
                    ModeDriver::Chain {
                        rows,
                        seed,
                        mode_divisor,
                    } => {
                        let u: f64 = rand::Rng::random(&mut rng);
                        let mut state = inverse_cdf(seed, u);
                        for slot in sq.iter_mut().skip(1) {
                            let u: f64 = rand::Rng::random(&mut rng);
                            state = inverse_cdf(&rows[state], u);
                            x = apply_mode(sys, state / mode_divisor, &x);
                            *slot = x.norm_squared();
                        }
                    }
                }
                acc.push(&sq);
            }
            acc
        })
        .collect();

    let total = partials
        .into_iter()
        .fold(Accum::new(steps), |a, b| a.merge(b));

    Ok((0..steps)
        .map(|k| {
            let std_error = if total.count > 1 {
                (total.m2[k] / (total.count as f64 - 1.0) / total.count as f64).sqrt()
            } else {
                0.0
            };
            MomentEstimate {
                k,
                mean_sq_norm: total.mean[k],
                std_error,
            }
        })
        .collect())
}

fn apply_mode(sys: &Sjls, mode: usize, x: &DVector<f64>) -> DVector<f64> {
    &sys.modes()[mode] * x
}

/// Declares the trajectory mean-square stable when the distance stays below
/// `epsilon` and is non-increasing (within [`MONOTONE_SLACK`]) over the
/// final `window` steps.
pub fn ms_stability_check(
    traj: &WassersteinTrajectory,
    window: usize,
    epsilon: f64,
) -> Result<StabilityVerdict> {
    let len = traj.steps.len();
    if window == 0 || window > len {
        return Err(Error::WindowTooLarge { window, len });
    }
    let tail = &traj.steps[len - window..];
    let below = tail.iter().all(|s| s.w_hat.value() < epsilon);
    let non_increasing = tail
        .windows(2)
        .all(|p| p[1].w_hat.value() <= p[0].w_hat.value() + MONOTONE_SLACK);
    if below && non_increasing {
        Ok(StabilityVerdict::Stable)
    } else {
        Ok(StabilityVerdict::Inconclusive)
    }
}
