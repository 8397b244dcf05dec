//! Gaussian and mixture-of-Gaussians state PDFs.
//!
//! The state PDF of a jump linear system stays a Gaussian mixture under the
//! mode dynamics: each component is pushed forward linearly, and the law of
//! total probability mixes the modal PDFs with the occupation weights.
//! Moment matching collapses a mixture to the single Gaussian with the same
//! mean and covariance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::numerics::{Matrix, SymmetricPsd, STOCHASTIC_TOL};
use crate::Result;

/// Multivariate Gaussian with a possibly rank-deficient covariance, so a
/// Dirac (deterministic state) is representable as zero covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: SymmetricPsd,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: SymmetricPsd) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean has dimension {}, covariance {}",
                mean.len(),
                cov.dim()
            )));
        }
        Ok(Self { mean, cov })
    }

    /// Dirac at `mean` (zero covariance).
    pub fn dirac(mean: DVector<f64>) -> Self {
        let dim = mean.len();
        Self {
            mean,
            cov: SymmetricPsd::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &SymmetricPsd {
        &self.cov
    }
}

/// Weighted list of Gaussians sharing one dimension. Weights live on the
/// probability simplex; zero weights are allowed (occupation probabilities
/// of unreachable modes are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<Gaussian>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, components: Vec<Gaussian>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::WeightInvalid("mixture needs at least one component".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::WeightInvalid(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || !(0.0..=1.0 + STOCHASTIC_TOL).contains(&w) {
                return Err(Error::WeightInvalid(format!("weight {i} = {w} outside [0, 1]")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::WeightInvalid(format!("weights sum to {sum}")));
        }
        let dim = components[0].dim();
        if let Some(bad) = components.iter().position(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "component {bad} has dimension {}, expected {dim}",
                components[bad].dim()
            )));
        }
        Ok(Self { weights, components })
    }

    /// Mixture with a single unit-weight component.
    pub fn single(g: Gaussian) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![g],
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }
}

/// Linear pushforward `x -> a x` of a Gaussian: the mean maps linearly and
/// the covariance congruently, re-symmetrized against round-off drift.
pub fn pushforward(g: &Gaussian, a: &Matrix) -> Result<Gaussian> {
    if a.nrows() != a.ncols() || a.ncols() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mode matrix is {}x{}, state dimension {}",
            a.nrows(),
            a.ncols(),
            g.dim()
        )));
    }
    let mean = a * g.mean();
    let cov = a * g.cov().as_matrix() * a.transpose();
    Gaussian::new(mean, SymmetricPsd::from_psd_construction(cov))
}

/// Law of total probability: concatenates the parts with their component
/// weights scaled by the outer weights.
pub fn mix(weights: &[f64], parts: &[GaussianMixture]) -> Result<GaussianMixture> {
    if weights.len() != parts.len() || parts.is_empty() {
        return Err(Error::WeightInvalid(format!(
            "{} weights for {} mixtures",
            weights.len(),
            parts.len()
        )));
    }
    let mut out_weights = Vec::new();
    let mut out_components = Vec::new();
    for (&alpha, part) in weights.iter().zip(parts) {
        for (&w, c) in part.weights().iter().zip(part.components()) {
            out_weights.push(alpha * w);
            out_components.push(c.clone());
        }
    }
    GaussianMixture::new(out_weights, out_components)
}

/// Mean and covariance of the mixture PDF, as the single matched Gaussian:
/// the weighted mean, and the weighted covariances plus the spread of the
/// component means around it.
pub fn moment_match(m: &GaussianMixture) -> Gaussian {
    let dim = m.dim();
    let mut mean = DVector::zeros(dim);
    for (&w, c) in m.weights().iter().zip(m.components()) {
        mean += c.mean() * w;
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for (&w, c) in m.weights().iter().zip(m.components()) {
        let delta = c.mean() - &mean;
        cov += (c.cov().as_matrix() + &delta * delta.transpose()) * w;
    }
    Gaussian::new(mean, SymmetricPsd::from_psd_construction(cov))
        .expect("matched moments share the mixture dimension")
}

/// Draws from a mixture with per-component factors precomputed, so repeated
/// sampling does not redo the eigendecompositions.
#[derive(Debug, Clone)]
pub struct MixtureSampler {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    factors: Vec<DMatrix<f64>>,
}

impl MixtureSampler {
    pub fn new(m: &GaussianMixture) -> Self {
        let mut means = Vec::with_capacity(m.len());
        let mut factors = Vec::with_capacity(m.len());
        for c in m.components() {
            means.push(c.mean().clone());
            factors.push(psd_factor(c.cov()));
        }
        Self {
            weights: m.weights().to_vec(),
            means,
            factors,
        }
    }

    /// One draw: component by inverse CDF on a single uniform, then an
    /// affine transform of standard normals.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = self.weights.len() - 1;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                idx = i;
                break;
            }
        }
        let dim = self.means[idx].len();
        let xi = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.means[idx] + &self.factors[idx] * xi
    }
}

/// Eigendecomposition-based factor `L` with `L L^T = cov`, valid for
/// rank-deficient covariances where a Cholesky factor does not exist.
fn psd_factor(cov: &SymmetricPsd) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(cov.as_matrix().clone());
    let mut vals = eig.eigenvalues;
    for v in vals.iter_mut() {
        *v = v.max(0.0).sqrt();
    }
    &eig.eigenvectors * DMatrix::from_diagonal(&vals)
}

/// One draw from the mixture. For bulk sampling build a [`MixtureSampler`].
pub fn sample<R: Rng + ?Sized>(m: &GaussianMixture, rng: &mut R) -> DVector<f64> {
    MixtureSampler::new(m).draw(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_gaussian(mean: DVector<f64>) -> Gaussian {
        let dim = mean.len();
        Gaussian::new(mean, SymmetricPsd::scaled_identity(dim, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn pushforward_identity_permutation_scaling() {
        let g = identity_gaussian(dvector![1.0, 0.0]);

        let same = pushforward(&g, &Matrix::identity(2, 2)).unwrap();
        assert_eq!(same, g);

        let perm = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let swapped = pushforward(&g, &perm).unwrap();
        assert_eq!(swapped.mean(), &dvector![0.0, 1.0]);
        assert_eq!(swapped.cov().as_matrix(), &Matrix::identity(2, 2));

        let doubled = pushforward(&identity_gaussian(dvector![1.0, 1.0]), &(Matrix::identity(2, 2) * 2.0)).unwrap();
        assert_eq!(doubled.mean(), &dvector![2.0, 2.0]);
        assert_eq!(doubled.cov().as_matrix(), &(Matrix::identity(2, 2) * 4.0));
    }

    #[test]
    fn mix_concatenates_with_weight_products() {
        let a = GaussianMixture::single(identity_gaussian(dvector![1.0]));
        let same = mix(&[1.0], &[a.clone()]).unwrap();
        assert_eq!(same, a);

        let b = GaussianMixture::single(identity_gaussian(dvector![-1.0]));
        let two = mix(&[0.5, 0.5], &[a.clone(), b.clone()]).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two.weights(), &[0.5, 0.5]);

        let ab = GaussianMixture::new(
            vec![0.25, 0.75],
            vec![identity_gaussian(dvector![1.0]), identity_gaussian(dvector![2.0])],
        )
        .unwrap();
        let cd = GaussianMixture::new(
            vec![0.4, 0.6],
            vec![identity_gaussian(dvector![3.0]), identity_gaussian(dvector![4.0])],
        )
        .unwrap();
        let four = mix(&[0.3, 0.7], &[ab, cd]).unwrap();
        assert_eq!(four.len(), 4);
        let expect = [0.3 * 0.25, 0.3 * 0.75, 0.7 * 0.4, 0.7 * 0.6];
        for (w, e) in four.weights().iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let g = identity_gaussian(dvector![0.0]);
        assert!(GaussianMixture::new(vec![0.5, 0.4], vec![g.clone(), g.clone()]).is_err());
        assert!(GaussianMixture::new(vec![1.5, -0.5], vec![g.clone(), g]).is_err());
    }

    #[test]
    fn moment_match_single_component_is_identity() {
        let g = Gaussian::new(
            dvector![1.0, -2.0],
            SymmetricPsd::new(Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap(),
        )
        .unwrap();
        let matched = moment_match(&GaussianMixture::single(g.clone()));
        assert_eq!(matched.mean(), g.mean());
        assert_eq!(matched.cov().as_matrix(), g.cov().as_matrix());
    }

    #[test]
    fn moment_match_two_diracs() {
        let m = GaussianMixture::new(
            vec![0.5, 0.5],
            vec![Gaussian::dirac(dvector![1.0]), Gaussian::dirac(dvector![-1.0])],
        )
        .unwrap();
        let matched = moment_match(&m);
        assert!(matched.mean()[0].abs() < 1e-15);
        assert!((matched.cov().as_matrix()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_match_against_sampling_oracle() {
        // three-component planar mixture, moments checked against 10^6 draws
        let m = GaussianMixture::new(
            vec![0.2, 0.5, 0.3],
            vec![
                Gaussian::new(
                    dvector![1.0, 0.0],
                    SymmetricPsd::new(Matrix::from_row_slice(2, 2, &[0.5, 0.2, 0.2, 0.3])).unwrap(),
                )
                .unwrap(),
                Gaussian::new(
                    dvector![-0.5, 0.8],
                    SymmetricPsd::new(Matrix::from_row_slice(2, 2, &[1.0, -0.4, -0.4, 0.6])).unwrap(),
                )
                .unwrap(),
                Gaussian::new(
                    dvector![0.3, -1.2],
                    SymmetricPsd::new(Matrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.9])).unwrap(),
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let matched = moment_match(&m);

        let n = 1_000_000usize;
        let sampler = MixtureSampler::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sum: DVector<f64> = DVector::zeros(2);
        let mut prod_sum: DMatrix<f64> = DMatrix::zeros(2, 2);
        let mut prod_sq: DMatrix<f64> = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let x = sampler.draw(&mut rng);
            sum += &x;
            let d = &x - matched.mean();
            for i in 0..2 {
                for j in 0..2 {
                    let p = d[i] * d[j];
                    prod_sum[(i, j)] += p;
                    prod_sq[(i, j)] += p * p;
                }
            }
        }
        let nf = n as f64;
        for i in 0..2 {
            let est = sum[i] / nf;
            let se = (matched.cov().as_matrix()[(i, i)] / nf).sqrt();
            assert!(
                (est - matched.mean()[i]).abs() <= 3.0 * se,
                "mean[{i}] {est} vs {}",
                matched.mean()[i]
            );
        }
        for i in 0..2 {
            for j in 0..2 {
                let est = prod_sum[(i, j)] / nf;
                let var = prod_sq[(i, j)] / nf - est * est;
                let se = (var / nf).sqrt();
                let truth = matched.cov().as_matrix()[(i, j)];
                assert!(
                    (est - truth).abs() <= 3.0 * se,
                    "cov[({i},{j})] {est} vs {truth}"
                );
            }
        }
    }

    #[test]
    fn sample_degenerate_covariance_is_exact() {
        let m = GaussianMixture::single(Gaussian::dirac(dvector![3.0, -1.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            assert_eq!(sample(&m, &mut rng), dvector![3.0, -1.0]);
        }
    }

    #[test]
    fn sample_unit_weight_always_first_component() {
        let m = GaussianMixture::new(
            vec![1.0, 0.0],
            vec![Gaussian::dirac(dvector![1.0]), Gaussian::dirac(dvector![2.0])],
        )
        .unwrap();
        let sampler = MixtureSampler::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            assert_eq!(sampler.draw(&mut rng)[0], 1.0);
        }
    }

    #[test]
    fn sample_covariance_three_sigma() {
        let m = GaussianMixture::single(identity_gaussian(dvector![0.0, 0.0]));
        let sampler = MixtureSampler::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000usize;
        let mut prod_sum: DMatrix<f64> = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let x = sampler.draw(&mut rng);
            for i in 0..2 {
                for j in 0..2 {
                    prod_sum[(i, j)] += x[i] * x[j];
                }
            }
        }
        let nf = n as f64;
        for i in 0..2 {
            for j in 0..2 {
                let est = prod_sum[(i, j)] / nf;
                let truth = if i == j { 1.0 } else { 0.0 };
                // var of x_i x_j is 2 on the diagonal, 1 off it
                let se = ((if i == j { 2.0 } else { 1.0 }) / nf as f64).sqrt();
                assert!((est - truth).abs() <= 3.0 * se, "({i},{j}): {est}");
            }
        }
    }

    fn arb_mixture() -> impl Strategy<Value = GaussianMixture> {
        // up to 4 components in 3 dimensions with random PSD covariances
        let comp = (
            proptest::collection::vec(-2.0f64..2.0, 3),
            proptest::collection::vec(-1.0f64..1.0, 9),
        )
            .prop_map(|(mean, l)| {
                let l = Matrix::from_row_slice(3, 3, &l);
                Gaussian::new(
                    DVector::from_vec(mean),
                    SymmetricPsd::from_psd_construction(&l * l.transpose()),
                )
                .unwrap()
            });
        (
            proptest::collection::vec(0.05f64..1.0, 1..=4),
            proptest::collection::vec(comp, 4),
        )
            .prop_map(|(raw_w, comps)| {
                let total: f64 = raw_w.iter().sum();
                let weights: Vec<f64> = raw_w.iter().map(|w| w / total).collect();
                let n = weights.len();
                GaussianMixture::new(weights, comps[..n].to_vec()).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // merging then transforming equals transforming then merging
        #[test]
        fn moment_match_commutes_with_pushforward(
            m in arb_mixture(),
            a_entries in proptest::collection::vec(-1.5f64..1.5, 9),
        ) {
            let a = Matrix::from_row_slice(3, 3, &a_entries);
            let pushed: Vec<Gaussian> = m
                .components()
                .iter()
                .map(|c| pushforward(c, &a).unwrap())
                .collect();
            let pushed_mix = GaussianMixture::new(m.weights().to_vec(), pushed).unwrap();
            let lhs = moment_match(&pushed_mix);
            let rhs = pushforward(&moment_match(&m), &a).unwrap();

            let mean_err = (lhs.mean() - rhs.mean()).norm()
                / rhs.mean().norm().max(1.0);
            let cov_err = (lhs.cov().as_matrix() - rhs.cov().as_matrix()).norm()
                / rhs.cov().as_matrix().norm().max(1.0);
            prop_assert!(mean_err < 1e-10, "mean error {mean_err}");
            prop_assert!(cov_err < 1e-10, "cov error {cov_err}");
        }

        // matched covariance stays PSD: the spread term is an outer product
        #[test]
        fn moment_match_output_is_psd(m in arb_mixture()) {
            let matched = moment_match(&m);
            let min_eig = SymmetricEigen::new(matched.cov().as_matrix().clone())
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            prop_assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");
        }

        #[test]
        fn mix_preserves_total_probability(
            m1 in arb_mixture(),
            m2 in arb_mixture(),
            alpha in 0.0f64..1.0,
        ) {
            let mixed = mix(&[alpha, 1.0 - alpha], &[m1, m2]).unwrap();
            let sum: f64 = mixed.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
    }
}
