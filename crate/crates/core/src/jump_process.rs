//! Stochastic jump processes represented through their occupation
//! probability vectors `pi(k)`.
//!
//! The propagation engines never look at the law of the jump process itself,
//! only at the sequence `pi(1), pi(2), ...` where `pi(r)` weights the jump
//! applied between states `x(r-1)` and `x(r)`. `pi(0)` is only the seed of
//! the Markov recursion. This keeps the jump law pluggable: i.i.d., Markov,
//! semi-Markov, or anything else that can produce such a sequence.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::Error;
use crate::numerics::{kron, validate_stochastic, Matrix, PROBABILITY_DUST, STOCHASTIC_TOL};
use crate::Result;

/// Probability distribution over the modes at one time step.
///
/// Entries are clamped of negative round-off dust and renormalized on
/// construction, so long products of stochastic matrices stay on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationVector {
    probs: Vec<f64>,
}

impl OccupationVector {
    /// Validates and normalizes a probability vector.
    ///
    /// Entries must be `>= -1e-15` (dust is clamped to zero) and sum to one
    /// within [`STOCHASTIC_TOL`] before renormalization.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::WeightInvalid("occupation vector is empty".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < PROBABILITY_DUST || p > 1.0 + STOCHASTIC_TOL {
                return Err(Error::WeightInvalid(format!(
                    "entry {i} = {p} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::WeightInvalid(format!("entries sum to {sum}")));
        }
        let clamped: Vec<f64> = probs.iter().map(|&p| p.max(0.0)).collect();
        let norm: f64 = clamped.iter().sum();
        Ok(Self {
            probs: clamped.into_iter().map(|p| p / norm).collect(),
        })
    }

    /// Deterministic distribution concentrated on `mode`.
    pub fn unit(modes: usize, mode: usize) -> Self {
        let mut probs = vec![0.0; modes];
        probs[mode] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// i.i.d. jumps: the occupation vector is stationary in time.
#[derive(Debug, Clone, PartialEq)]
pub struct IidProcess {
    pub pi: OccupationVector,
}

/// Markov jumps: `pi(k+1) = pi(k) P` with a right-stochastic `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovProcess {
    transition: Matrix,
    pi0: OccupationVector,
}

impl MarkovProcess {
    pub fn new(transition: Matrix, pi0: OccupationVector) -> Result<Self> {
        validate_stochastic(&transition)?;
        if transition.nrows() != pi0.len() {
            return Err(Error::DimensionMismatch(format!(
                "transition is {}x{} but pi0 has {} modes",
                transition.nrows(),
                transition.ncols(),
                pi0.len()
            )));
        }
        Ok(Self { transition, pi0 })
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn pi0(&self) -> &OccupationVector {
        &self.pi0
    }
}

/// Discrete-time semi-Markov jumps given by a kernel
/// `q[i][j][t]` = P(next mode is `j` entered with a sojourn of `t+1` steps |
/// leaving mode `i`), with sojourns truncated at `sojourn_cap` steps.
///
/// The kernel mass must sum to one over `(j, t)` for every `i` on the
/// truncated support. The mode occupied at time 0 is drawn from `pi0` and
/// holds for exactly one step; the first kernel renewal happens on the step
/// to time 1 (the kernel does not define the sojourn of a mode that was
/// never entered).
#[derive(Debug, Clone, PartialEq)]
pub struct SemiMarkovProcess {
    kernel: Vec<Vec<Vec<f64>>>,
    pi0: OccupationVector,
    sojourn_cap: usize,
}

impl SemiMarkovProcess {
    pub fn new(kernel: Vec<Vec<Vec<f64>>>, pi0: OccupationVector) -> Result<Self> {
        let m = pi0.len();
        if kernel.len() != m {
            return Err(Error::KernelInvalid(format!(
                "kernel has {} source modes, pi0 has {m}",
                kernel.len()
            )));
        }
        let cap = kernel
            .first()
            .and_then(|row| row.first())
            .map(|q| q.len())
            .unwrap_or(0);
        if cap == 0 {
            return Err(Error::KernelInvalid("sojourn support is empty".into()));
        }
        for (i, row) in kernel.iter().enumerate() {
            if row.len() != m {
                return Err(Error::KernelInvalid(format!(
                    "kernel row {i} has {} target modes, expected {m}",
                    row.len()
                )));
            }
            let mut mass = 0.0;
            for (j, q) in row.iter().enumerate() {
                if q.len() != cap {
                    return Err(Error::KernelInvalid(format!(
                        "kernel[{i}][{j}] has {} sojourn entries, expected {cap}",
                        q.len()
                    )));
                }
                for (t, &v) in q.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::KernelInvalid(format!(
                            "kernel[{i}][{j}]({}) = {v} is negative",
                            t + 1
                        )));
                    }
                    mass += v;
                }
            }
            if (mass - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::KernelInvalid(format!(
                    "mass for source mode {i} sums to {mass}"
                )));
            }
        }
        Ok(Self {
            kernel,
            pi0,
            sojourn_cap: cap,
        })
    }

    pub fn kernel(&self) -> &[Vec<Vec<f64>>] {
        &self.kernel
    }

    pub fn pi0(&self) -> &OccupationVector {
        &self.pi0
    }

    /// Largest sojourn length carried by the kernel.
    pub fn sojourn_cap(&self) -> usize {
        self.sojourn_cap
    }
}

/// Any of the supported jump laws, as seen by the propagation engines.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpProcess {
    Iid(IidProcess),
    Markov(MarkovProcess),
    SemiMarkov(SemiMarkovProcess),
}

impl JumpProcess {
    pub fn iid(pi: OccupationVector) -> Self {
        Self::Iid(IidProcess { pi })
    }

    pub fn markov(transition: Matrix, pi0: OccupationVector) -> Result<Self> {
        Ok(Self::Markov(MarkovProcess::new(transition, pi0)?))
    }

    pub fn semi_markov(kernel: Vec<Vec<Vec<f64>>>, pi0: OccupationVector) -> Result<Self> {
        Ok(Self::SemiMarkov(SemiMarkovProcess::new(kernel, pi0)?))
    }

    pub fn mode_count(&self) -> usize {
        match self {
            Self::Iid(p) => p.pi.len(),
            Self::Markov(p) => p.pi0.len(),
            Self::SemiMarkov(p) => p.pi0.len(),
        }
    }

    /// Mode distribution at time 0 (the seed; no jump has been applied yet).
    pub fn initial_distribution(&self) -> OccupationVector {
        match self {
            Self::Iid(p) => p.pi.clone(),
            Self::Markov(p) => p.pi0.clone(),
            Self::SemiMarkov(p) => p.pi0.clone(),
        }
    }

    /// Occupation vectors `pi(1) ... pi(k_max)`; index `r = 1` is the
    /// distribution of the first applied jump.
    pub fn occupation_sequence(&self, k_max: usize) -> Vec<OccupationVector> {
        match self {
            Self::Iid(p) => vec![p.pi.clone(); k_max],
            Self::Markov(p) => {
                let mut seq = Vec::with_capacity(k_max);
                let mut pi = p.pi0.clone();
                for _ in 0..k_max {
                    pi = step_unchecked(&pi, &p.transition);
                    seq.push(pi.clone());
                }
                seq
            }
            Self::SemiMarkov(p) => {
                let embedded = embed_semi_markov(p).expect("kernel validated at construction");
                let mut seq = Vec::with_capacity(k_max);
                let mut pi = embedded.chain.pi0.clone();
                for _ in 0..k_max {
                    pi = step_unchecked(&pi, &embedded.chain.transition);
                    seq.push(embedded.marginalize(&pi));
                }
                seq
            }
        }
    }
}

/// One step of the occupation recursion: row-vector product `pi * p`.
pub fn step_markov(pi: &OccupationVector, p: &Matrix) -> Result<OccupationVector> {
    validate_stochastic(p)?;
    if pi.len() != p.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "pi has {} modes, transition is {}x{}",
            pi.len(),
            p.nrows(),
            p.ncols()
        )));
    }
    Ok(step_unchecked(pi, p))
}

fn step_unchecked(pi: &OccupationVector, p: &Matrix) -> OccupationVector {
    let m = p.ncols();
    let mut next = vec![0.0; m];
    for (j, slot) in next.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, &pi_i) in pi.as_slice().iter().enumerate() {
            acc += pi_i * p[(i, j)];
        }
        *slot = acc;
    }
    OccupationVector::new(next).expect("stochastic step stays on the simplex")
}

/// Markov chain on the expanded states `(mode, remaining sojourn)` that
/// realizes a semi-Markov law exactly for sojourns up to the truncation cap.
#[derive(Debug, Clone)]
pub struct EmbeddedChain {
    /// Chain over `modes * sojourn_cap` expanded states, state `(i, r)`
    /// at flat index `i * sojourn_cap + (r - 1)`.
    pub chain: MarkovProcess,
    modes: usize,
    sojourn_cap: usize,
}

impl EmbeddedChain {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sojourn_cap(&self) -> usize {
        self.sojourn_cap
    }

    /// Mode index of an expanded state.
    pub fn mode_of(&self, expanded_state: usize) -> usize {
        expanded_state / self.sojourn_cap
    }

    /// Collapses an expanded-state distribution to a mode distribution.
    pub fn marginalize(&self, expanded: &OccupationVector) -> OccupationVector {
        let mut probs = vec![0.0; self.modes];
        for (s, &p) in expanded.as_slice().iter().enumerate() {
            probs[self.mode_of(s)] += p;
        }
        OccupationVector::new(probs).expect("marginalization preserves the simplex")
    }
}

/// Expands a semi-Markov process into an ordinary Markov chain on
/// `(mode, remaining sojourn)` states.
///
/// From `(i, r)` with `r > 1` the chain moves to `(i, r-1)`; from `(i, 1)`
/// it draws `(j, t)` from the kernel row of `i` and moves to `(j, t)`. The
/// seed puts the mass of `pi0` on the `r = 1` states, so the first renewal
/// happens on the very first step.
pub fn embed_semi_markov(sm: &SemiMarkovProcess) -> Result<EmbeddedChain> {
    let m = sm.pi0().len();
    let cap = sm.sojourn_cap();
    let n = m * cap;
    let idx = |mode: usize, remaining: usize| mode * cap + (remaining - 1);

    let mut p = DMatrix::zeros(n, n);
    for i in 0..m {
        for r in 2..=cap {
            p[(idx(i, r), idx(i, r - 1))] = 1.0;
        }
        for j in 0..m {
            for t in 1..=cap {
                p[(idx(i, 1), idx(j, t))] = sm.kernel()[i][j][t - 1];
            }
        }
    }

    let mut seed = vec![0.0; n];
    for (i, &pi) in sm.pi0().as_slice().iter().enumerate() {
        seed[idx(i, 1)] = pi;
    }

    let chain = MarkovProcess::new(p, OccupationVector::new(seed)?)
        .map_err(|e| Error::KernelInvalid(format!("embedding is not stochastic: {e}")))?;
    Ok(EmbeddedChain {
        chain,
        modes: m,
        sojourn_cap: cap,
    })
}

/// Product of two independent jump processes of the same class.
///
/// Mode ordering is Kronecker: composite index `i_a * m_b + i_b`.
pub fn compose_independent(a: &JumpProcess, b: &JumpProcess) -> Result<JumpProcess> {
    match (a, b) {
        (JumpProcess::Iid(pa), JumpProcess::Iid(pb)) => {
            let mut probs = Vec::with_capacity(pa.pi.len() * pb.pi.len());
            for &x in pa.pi.as_slice() {
                for &y in pb.pi.as_slice() {
                    probs.push(x * y);
                }
            }
            Ok(JumpProcess::iid(OccupationVector::new(probs)?))
        }
        (JumpProcess::Markov(pa), JumpProcess::Markov(pb)) => {
            let transition = kron(pa.transition(), pb.transition());
            let mut seed = Vec::with_capacity(pa.pi0().len() * pb.pi0().len());
            for &x in pa.pi0().as_slice() {
                for &y in pb.pi0().as_slice() {
                    seed.push(x * y);
                }
            }
            JumpProcess::markov(transition, OccupationVector::new(seed)?)
        }
        _ => Err(Error::ClassMismatch(
            "independent composition is defined for two i.i.d. or two Markov processes".into(),
        )),
    }
}

/// Draws a mode index from `pi` by inverse CDF on a single uniform draw.
pub fn sample_mode<R: Rng + ?Sized>(pi: &OccupationVector, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in pi.as_slice().iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pi.len() - 1
}
