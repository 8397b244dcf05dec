//! The two uncertainty-propagation engines.
//!
//! [`exact_propagate`] enumerates every mode path and carries the full
//! mixture, whose component count grows like `m^k` — exact, but only usable
//! as a desk-scale oracle. [`analyze`] runs the split-and-merge loop: push
//! the current synthetic Gaussian through every mode (split), collapse the
//! resulting `m`-component mixture back to its matched Gaussian (merge).
//! The merged Gaussian is not the state PDF, but its Wasserstein distance to
//! the origin Dirac equals the exact mixture distance at every step, so the
//! whole distance history comes out of constant memory.

use crate::error::Error;
use crate::gaussian_mixture::{moment_match, pushforward, Gaussian, GaussianMixture};
use crate::jump_process::{JumpProcess, OccupationVector};
use crate::numerics::Matrix;
use crate::wasserstein::{w2_gaussian_to_dirac, w2_mixture_to_dirac, Distance};
use crate::Result;

/// Ceiling on the exact engine's component count when the caller does not
/// pick one.
pub const DEFAULT_COMPONENT_LIMIT: u64 = 1_000_000;

/// Stochastic jump linear system: mode matrices plus the jump process that
/// selects among them.
#[derive(Debug, Clone)]
pub struct Sjls {
    modes: Vec<Matrix>,
    jump: JumpProcess,
}

impl Sjls {
    pub fn new(modes: Vec<Matrix>, jump: JumpProcess) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::DimensionMismatch("no mode matrices".into()));
        }
        let n = modes[0].nrows();
        for (j, a) in modes.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "mode {j} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        if jump.mode_count() != modes.len() {
            return Err(Error::DimensionMismatch(format!(
                "jump process has {} modes, system has {}",
                jump.mode_count(),
                modes.len()
            )));
        }
        Ok(Self { modes, jump })
    }

    pub fn modes(&self) -> &[Matrix] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn state_dim(&self) -> usize {
        self.modes[0].nrows()
    }

    pub fn jump(&self) -> &JumpProcess {
        &self.jump
    }
}

/// One record of the split-and-merge analysis.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    /// Time index, starting at 0.
    pub k: usize,
    /// Occupation vector weighting the jump into this step (the seed
    /// distribution at `k = 0`).
    pub pi: OccupationVector,
    /// The synthetic merged Gaussian at this step.
    pub merged: Gaussian,
    /// Distance of the state PDF to the Dirac at the origin.
    pub w_hat: Distance,
}

/// Distance history produced by [`analyze`].
#[derive(Debug, Clone)]
pub struct WassersteinTrajectory {
    pub steps: Vec<TrajectoryStep>,
    /// Largest number of Gaussian components alive at once inside the loop
    /// (the split mixtures; the caller-provided initial PDF is not counted).
    pub peak_components: usize,
}

impl WassersteinTrajectory {
    pub fn w_hat(&self, k: usize) -> Distance {
        self.steps[k].w_hat
    }
}

/// The exact state PDF after `k` steps, with one component per
/// `(initial component, mode path)` pair.
#[derive(Debug, Clone)]
pub struct PathWeightedMixture {
    mixture: GaussianMixture,
    step: usize,
}

impl PathWeightedMixture {
    pub fn mixture(&self) -> &GaussianMixture {
        &self.mixture
    }

    pub fn into_mixture(self) -> GaussianMixture {
        self.mixture
    }

    pub fn step(&self) -> usize {
        self.step
    }
}

fn check_dims(sys: &Sjls, rho0: &GaussianMixture) -> Result<()> {
    if rho0.dim() != sys.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial PDF has dimension {}, system has {}",
            rho0.dim(),
            sys.state_dim()
        )));
    }
    Ok(())
}

/// Number of mixture components after `k` exact steps, or an explosion
/// error when it exceeds `limit`.
fn exact_component_count(m: usize, m0: usize, k: usize, limit: u64) -> Result<u128> {
    let count = (m as u128)
        .checked_pow(k as u32)
        .and_then(|p| p.checked_mul(m0 as u128));
    match count {
        Some(c) if c <= limit as u128 => Ok(c),
        Some(c) => Err(Error::ComponentExplosion {
            required: c,
            limit,
        }),
        None => Err(Error::ComponentExplosion {
            required: u128::MAX,
            limit,
        }),
    }
}

/// Largest horizon whose exact component count stays within `limit`.
pub fn feasible_exact_horizon(sys: &Sjls, rho0: &GaussianMixture, limit: u64) -> usize {
    let mut k = 0usize;
    while exact_component_count(sys.mode_count(), rho0.len(), k + 1, limit).is_ok() {
        k += 1;
    }
    k
}

/// Full mode-path enumeration: the state PDF after `k` steps.
///
/// Every path `(j_1, ..., j_k)` contributes, per initial component, a
/// Gaussian pushed forward by the path product `A_{j_k} ... A_{j_1}` whose
/// weight is the product of the occupation probabilities along the path.
/// Weights are normalized against the round-off of summing `m^k * m0`
/// products.
pub fn exact_propagate(
    sys: &Sjls,
    rho0: &GaussianMixture,
    k: usize,
    component_limit: u64,
) -> Result<PathWeightedMixture> {
    check_dims(sys, rho0)?;
    exact_component_count(sys.mode_count(), rho0.len(), k, component_limit)?;
    if k == 0 {
        return Ok(PathWeightedMixture {
            mixture: rho0.clone(),
            step: 0,
        });
    }

    let pi_seq = sys.jump().occupation_sequence(k);
    let mut weights = Vec::new();
    let mut components = Vec::new();

    // depth-first over mode paths, extending the matrix product on the left
    let mut stack: Vec<(usize, f64, Matrix)> = Vec::new();
    let identity = Matrix::identity(sys.state_dim(), sys.state_dim());
    stack.push((0, 1.0, identity));
    while let Some((depth, weight, product)) = stack.pop() {
        if depth == k {
            for (&alpha, c) in rho0.weights().iter().zip(rho0.components()) {
                weights.push(weight * alpha);
                components.push(pushforward(c, &product)?);
            }
            continue;
        }
        let pi = &pi_seq[depth];
        // reverse order keeps the popped traversal lexicographic
        for j in (0..sys.mode_count()).rev() {
            let w = weight * pi.as_slice()[j];
            stack.push((depth + 1, w, &sys.modes()[j] * &product));
        }
    }

    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(PathWeightedMixture {
        mixture: GaussianMixture::new(weights, components)?,
        step: k,
    })
}

/// Split step: push the synthetic Gaussian through every mode, weighting
/// the results with the next occupation vector.
pub fn split_step(g: &Gaussian, sys: &Sjls, pi_next: &OccupationVector) -> Result<GaussianMixture> {
    if pi_next.len() != sys.mode_count() {
        return Err(Error::DimensionMismatch(format!(
            "occupation vector has {} modes, system has {}",
            pi_next.len(),
            sys.mode_count()
        )));
    }
    let components = sys
        .modes()
        .iter()
        .map(|a| pushforward(g, a))
        .collect::<Result<Vec<_>>>()?;
    GaussianMixture::new(pi_next.as_slice().to_vec(), components)
}

/// Merge step: collapse a mixture to its moment-matched Gaussian.
pub fn merge_step(m: &GaussianMixture) -> Gaussian {
    moment_match(m)
}

/// Split-and-merge analysis over `k_max` steps.
///
/// At most `m` Gaussians are alive at any time, independent of the horizon.
pub fn analyze(sys: &Sjls, rho0: &GaussianMixture, k_max: usize) -> Result<WassersteinTrajectory> {
    check_dims(sys, rho0)?;
    let pi_seq = sys.jump().occupation_sequence(k_max);

    let mut steps = Vec::with_capacity(k_max + 1);
    let mut merged = moment_match(rho0);
    steps.push(TrajectoryStep {
        k: 0,
        pi: sys.jump().initial_distribution(),
        merged: merged.clone(),
        w_hat: w2_mixture_to_dirac(rho0),
    });

    let mut peak = 0usize;
    for (r, pi) in pi_seq.iter().enumerate() {
        let split = split_step(&merged, sys, pi)?;
        peak = peak.max(split.len());
        merged = merge_step(&split);
        steps.push(TrajectoryStep {
            k: r + 1,
            pi: pi.clone(),
            merged: merged.clone(),
            w_hat: w2_gaussian_to_dirac(&merged),
        });
    }
    Ok(WassersteinTrajectory {
        steps,
        peak_components: peak,
    })
}

/// Exact distance history `W(0) ... W(k_max)` from Theorem-style path
/// enumeration, streamed without materializing the mixture.
///
/// This is the independent oracle for [`analyze`]: the two must agree to
/// round-off at every step.
pub fn exact_w_series(
    sys: &Sjls,
    rho0: &GaussianMixture,
    k_max: usize,
    component_limit: u64,
) -> Result<Vec<Distance>> {
    check_dims(sys, rho0)?;
    exact_component_count(sys.mode_count(), rho0.len(), k_max, component_limit)?;

    let pi_seq = sys.jump().occupation_sequence(k_max);
    let mut squared = vec![0.0f64; k_max + 1];
    squared[0] = rho0
        .weights()
        .iter()
        .zip(rho0.components())
        .map(|(&a, c)| a * (c.mean().norm_squared() + c.cov().trace()))
        .sum();

    // per-path contribution at every depth along a single depth-first walk
    let mut stack: Vec<(usize, f64, Matrix)> = Vec::new();
    let identity = Matrix::identity(sys.state_dim(), sys.state_dim());
    if k_max > 0 {
        stack.push((0, 1.0, identity));
    }
    while let Some((depth, weight, product)) = stack.pop() {
        let pi = &pi_seq[depth];
        for j in (0..sys.mode_count()).rev() {
            let w = weight * pi.as_slice()[j];
            if w == 0.0 {
                // zero-probability subtree contributes exactly zero
                continue;
            }
            let a = &sys.modes()[j] * &product;
            let mut contrib = 0.0;
            for (&alpha, c) in rho0.weights().iter().zip(rho0.components()) {
                let mean_sq = (&a * c.mean()).norm_squared();
                let a_cov = &a * c.cov().as_matrix();
                // tr(A S A^T) without forming the full congruence
                let trace = a_cov.component_mul(&a).sum();
                contrib += alpha * (mean_sq + trace);
            }
            squared[depth + 1] += w * contrib;
            if depth + 1 < k_max {
                stack.push((depth + 1, w, a));
            }
        }
    }

    squared.into_iter().map(Distance::from_squared).collect()
}

/// Exact distance at a single horizon via the materialized mixture; mostly
/// a convenience for tests and the CLI `exact` verb at small horizons.
pub fn exact_w_at(
    sys: &Sjls,
    rho0: &GaussianMixture,
    k: usize,
    component_limit: u64,
) -> Result<Distance> {
    Ok(w2_mixture_to_dirac(
        exact_propagate(sys, rho0, k, component_limit)?.mixture(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump_process::OccupationVector;
    use crate::numerics::SymmetricPsd;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iid(probs: Vec<f64>) -> JumpProcess {
        JumpProcess::iid(OccupationVector::new(probs).unwrap())
    }

    fn gaussian(mean: &[f64], cov: Matrix) -> Gaussian {
        Gaussian::new(
            DVector::from_row_slice(mean),
            SymmetricPsd::new(cov).unwrap(),
        )
        .unwrap()
    }

    fn random_sjls(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Sjls {
        let modes: Vec<Matrix> = (0..m)
            .map(|_| Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let jump = if rng.random_bool(0.5) {
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let t: f64 = raw.iter().sum();
            iid(raw.iter().map(|v| v / t).collect())
        } else {
            let mut rows = Vec::with_capacity(m * m);
            for _ in 0..m {
                let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
                let t: f64 = raw.iter().sum();
                rows.extend(raw.iter().map(|v| v / t));
            }
            let raw0: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let t0: f64 = raw0.iter().sum();
            JumpProcess::markov(
                Matrix::from_row_slice(m, m, &rows),
                OccupationVector::new(raw0.iter().map(|v| v / t0).collect()).unwrap(),
            )
            .unwrap()
        };
        Sjls::new(modes, jump).unwrap()
    }

    fn random_mixture(rng: &mut ChaCha8Rng, n: usize, parts: usize) -> GaussianMixture {
        let raw: Vec<f64> = (0..parts).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let comps = (0..parts)
            .map(|_| {
                let l = Matrix::from_fn(n, n, |_, _| rng.random_range(-0.8..0.8));
                Gaussian::new(
                    DVector::from_fn(n, |_, _| rng.random_range(-1.5..1.5)),
                    SymmetricPsd::from_psd_construction(&l * l.transpose()),
                )
                .unwrap()
            })
            .collect();
        GaussianMixture::new(raw.iter().map(|w| w / total).collect(), comps).unwrap()
    }

    #[test]
    fn exact_zero_steps_returns_initial_pdf() {
        let sys = Sjls::new(vec![Matrix::identity(2, 2)], iid(vec![1.0])).unwrap();
        let rho0 = GaussianMixture::single(gaussian(&[1.0, 2.0], Matrix::identity(2, 2)));
        let out = exact_propagate(&sys, &rho0, 0, DEFAULT_COMPONENT_LIMIT).unwrap();
        assert_eq!(out.mixture(), &rho0);
        assert_eq!(out.step(), 0);
    }

    #[test]
    fn exact_single_mode_is_matrix_power() {
        let a = Matrix::from_row_slice(2, 2, &[0.5, 0.25, 0.0, 0.5]);
        let sys = Sjls::new(vec![a.clone()], iid(vec![1.0])).unwrap();
        let g = gaussian(&[1.0, -1.0], Matrix::identity(2, 2));
        let out = exact_propagate(&sys, &GaussianMixture::single(g.clone()), 3, 100).unwrap();
        assert_eq!(out.mixture().len(), 1);
        let a3 = &a * &a * &a;
        let expect = pushforward(&g, &a3).unwrap();
        let got = &out.mixture().components()[0];
        assert!((got.mean() - expect.mean()).norm() < 1e-14);
        assert!((got.cov().as_matrix() - expect.cov().as_matrix()).norm() < 1e-14);
    }

    #[test]
    fn exact_component_count_grows_and_explodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let sys = random_sjls(&mut rng, 2, 2);
        let rho0 = random_mixture(&mut rng, 2, 1);
        let out = exact_propagate(&sys, &rho0, 3, 100).unwrap();
        assert_eq!(out.mixture().len(), 8);
        let sum: f64 = out.mixture().weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);

        match exact_propagate(&sys, &rho0, 10, 100) {
            Err(Error::ComponentExplosion { required, limit }) => {
                assert_eq!(required, 1024);
                assert_eq!(limit, 100);
            }
            other => panic!("expected explosion, got {other:?}"),
        }
    }

    #[test]
    fn split_step_trivia() {
        let g = gaussian(&[0.0, 0.0], Matrix::identity(2, 2));
        let sys = Sjls::new(
            vec![Matrix::identity(2, 2), Matrix::identity(2, 2) * 2.0],
            iid(vec![0.5, 0.5]),
        )
        .unwrap();
        let pi = OccupationVector::new(vec![0.5, 0.5]).unwrap();
        let split = split_step(&g, &sys, &pi).unwrap();
        assert_eq!(split.len(), 2);
        assert_eq!(split.weights(), &[0.5, 0.5]);
        assert_eq!(split.components()[0].cov().as_matrix(), &Matrix::identity(2, 2));
        assert_eq!(
            split.components()[1].cov().as_matrix(),
            &(Matrix::identity(2, 2) * 4.0)
        );

        let all_on_first = OccupationVector::new(vec![1.0, 0.0]).unwrap();
        let split = split_step(&g, &sys, &all_on_first).unwrap();
        assert_eq!(split.weights(), &[1.0, 0.0]);
    }

    #[test]
    fn analyze_single_stable_mode_closed_form() {
        let a = Matrix::from_row_slice(2, 2, &[0.6, 0.1, 0.0, 0.7]);
        let sys = Sjls::new(vec![a.clone()], iid(vec![1.0])).unwrap();
        let g = gaussian(&[1.0, 0.5], Matrix::identity(2, 2) * 0.3);
        let traj = analyze(&sys, &GaussianMixture::single(g.clone()), 12).unwrap();

        let mut power = Matrix::identity(2, 2);
        for k in 0..=12 {
            let pushed = pushforward(&g, &power).unwrap();
            let expect = (pushed.mean().norm_squared() + pushed.cov().trace()).sqrt();
            let got = traj.w_hat(k).value();
            assert!(
                (got - expect).abs() <= 1e-12 * expect.max(1.0),
                "k={k}: {got} vs {expect}"
            );
            power = &a * &power;
        }
        // stable mode: the distance decays
        assert!(traj.w_hat(12).value() < traj.w_hat(0).value() * 0.1);
    }

    #[test]
    fn analyze_identity_modes_is_constant() {
        let sys = Sjls::new(
            vec![Matrix::identity(2, 2), Matrix::identity(2, 2)],
            iid(vec![0.3, 0.7]),
        )
        .unwrap();
        let rho0 = GaussianMixture::single(gaussian(&[1.0, 1.0], Matrix::identity(2, 2)));
        let traj = analyze(&sys, &rho0, 10).unwrap();
        let w0 = traj.w_hat(0).value();
        for step in &traj.steps {
            assert!((step.w_hat.value() - w0).abs() < 1e-12 * w0);
        }
    }

    #[test]
    fn analyze_keeps_at_most_m_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sys = random_sjls(&mut rng, 3, 2);
        let rho0 = random_mixture(&mut rng, 2, 4);
        let traj = analyze(&sys, &rho0, 50).unwrap();
        assert_eq!(traj.peak_components, 3);
        assert_eq!(traj.steps.len(), 51);
        for (i, step) in traj.steps.iter().enumerate() {
            assert_eq!(step.k, i);
        }
    }

    #[test]
    fn analyze_matches_exact_series_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..25 {
            let m = rng.random_range(2..=3);
            let n = rng.random_range(2..=3);
            let m0 = rng.random_range(1..=2);
            let sys = random_sjls(&mut rng, m, n);
            let rho0 = random_mixture(&mut rng, n, m0);
            let k_max = 8;

            let traj = analyze(&sys, &rho0, k_max).unwrap();
            let exact = exact_w_series(&sys, &rho0, k_max, DEFAULT_COMPONENT_LIMIT).unwrap();
            assert_eq!(exact.len(), k_max + 1);
            for k in 0..=k_max {
                let w_hat = traj.w_hat(k).value();
                let w = exact[k].value();
                assert!(
                    (w_hat - w).abs() <= 1e-10 * w.max(1.0),
                    "trial {trial}, k={k}: {w_hat} vs {w}"
                );
            }
        }
    }

    #[test]
    fn exact_series_matches_materialized_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let sys = random_sjls(&mut rng, 2, 2);
        let rho0 = random_mixture(&mut rng, 2, 2);
        let series = exact_w_series(&sys, &rho0, 6, DEFAULT_COMPONENT_LIMIT).unwrap();
        for k in 0..=6 {
            let via_mixture = exact_w_at(&sys, &rho0, k, DEFAULT_COMPONENT_LIMIT)
                .unwrap()
                .value();
            let direct = series[k].value();
            assert!(
                (via_mixture - direct).abs() <= 1e-11 * direct.max(1.0),
                "k={k}: {via_mixture} vs {direct}"
            );
        }
    }

    #[test]
    fn single_mode_series_matches_analyze_tightly() {
        let a = Matrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.8]);
        let sys = Sjls::new(vec![a], iid(vec![1.0])).unwrap();
        let rho0 = GaussianMixture::single(gaussian(&[1.0, -0.5], Matrix::identity(2, 2) * 0.2));
        let traj = analyze(&sys, &rho0, 10).unwrap();
        let series = exact_w_series(&sys, &rho0, 10, 1000).unwrap();
        for k in 0..=10 {
            let d = (traj.w_hat(k).value() - series[k].value()).abs();
            assert!(d <= 1e-13 * series[k].value().max(1.0), "k={k}");
        }
    }

    #[test]
    fn feasible_horizon_caps_correctly() {
        let sys = Sjls::new(
            vec![Matrix::identity(2, 2); 6],
            iid(vec![1.0 / 6.0; 6]),
        )
        .unwrap();
        let rho0 = random_mixture(&mut ChaCha8Rng::seed_from_u64(1), 2, 2);
        // 6^7 * 2 = 559872 <= 2e6 < 6^8 * 2
        assert_eq!(feasible_exact_horizon(&sys, &rho0, 2_000_000), 7);
    }
}
