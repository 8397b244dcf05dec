//! JSON system description: mode matrices (or a delayed-NCS block), the
//! jump law, and the initial Gaussian-mixture PDF.
//!
//! One schema covers every supported system. Matrices are flat row-major
//! arrays. Validation reports the JSON field path of the first violation.

use serde::{Deserialize, Serialize};
use sjls_core::gaussian_mixture::{Gaussian, GaussianMixture};
use sjls_core::jump_process::{JumpProcess, OccupationVector};
use sjls_core::model_builder::{augment, DelayedNcs};
use sjls_core::numerics::{Matrix, SymmetricPsd};
use sjls_core::propagation::Sjls;
use sjls_core::Error as CoreError;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Mode matrices, each a flat row-major n*n array. Exactly one of
    /// `modes` and `ncs` must be present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ncs: Option<NcsConfig>,
    pub jump: JumpConfig,
    pub initial: InitialConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcsConfig {
    /// Plant matrix, flat row-major n*n.
    pub plant: Vec<f64>,
    /// Input column, length n.
    pub input: Vec<f64>,
    /// One gain row per (tau, d) pair.
    pub gains: Vec<GainConfig>,
    pub tau_max: usize,
    pub d_max: usize,
    pub sample_time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainConfig {
    pub tau: usize,
    pub d: usize,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub kind: JumpKindConfig,
    /// Stationary occupation vector (iid only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    /// Seed distribution (markov / semi_markov).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi0: Option<Vec<f64>>,
    /// Transition matrix, flat row-major m*m (markov only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<f64>>,
    /// Kernel q[i][j][t] (semi_markov only), sojourns t = 1..=K.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKindConfig {
    Iid,
    Markov,
    SemiMarkov,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub weights: Vec<f64>,
    /// Component means, each of the state (or plant, with `ncs`) dimension.
    pub means: Vec<Vec<f64>>,
    /// Component covariances, flat row-major n*n each.
    pub covariances: Vec<Vec<f64>>,
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

/// Core errors raised while building a field: covariance PSD violations are
/// numerical failures, everything else is a config problem.
fn field_err(field: &str, err: CoreError) -> CliError {
    match err {
        CoreError::NotPsd { .. } => CliError::Numerical(format!("{field}: {err}")),
        other => config_err(field, other),
    }
}

fn square_matrix(field: &str, data: &[f64]) -> Result<Matrix, CliError> {
    let n = (data.len() as f64).sqrt().round() as usize;
    if n * n != data.len() || n == 0 {
        return Err(config_err(
            field,
            format!("length {} is not a positive square", data.len()),
        ));
    }
    if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
        return Err(config_err(field, format!("non-finite entry {bad}")));
    }
    Ok(Matrix::from_row_slice(n, n, data))
}

fn occupation(field: &str, data: &[f64]) -> Result<OccupationVector, CliError> {
    OccupationVector::new(data.to_vec()).map_err(|e| config_err(field, e))
}

fn build_jump(jump: &JumpConfig) -> Result<JumpProcess, CliError> {
    match jump.kind {
        JumpKindConfig::Iid => {
            let pi = jump
                .pi
                .as_ref()
                .ok_or_else(|| config_err("jump.pi", "required for kind \"iid\""))?;
            Ok(JumpProcess::iid(occupation("jump.pi", pi)?))
        }
        JumpKindConfig::Markov => {
            let pi0 = jump
                .pi0
                .as_ref()
                .ok_or_else(|| config_err("jump.pi0", "required for kind \"markov\""))?;
            let transition = jump
                .transition
                .as_ref()
                .ok_or_else(|| config_err("jump.transition", "required for kind \"markov\""))?;
            let p = square_matrix("jump.transition", transition)?;
            JumpProcess::markov(p, occupation("jump.pi0", pi0)?)
                .map_err(|e| config_err("jump.transition", e))
        }
        JumpKindConfig::SemiMarkov => {
            let pi0 = jump
                .pi0
                .as_ref()
                .ok_or_else(|| config_err("jump.pi0", "required for kind \"semi_markov\""))?;
            let kernel = jump
                .kernel
                .as_ref()
                .ok_or_else(|| config_err("jump.kernel", "required for kind \"semi_markov\""))?;
            JumpProcess::semi_markov(kernel.clone(), occupation("jump.pi0", pi0)?)
                .map_err(|e| config_err("jump.kernel", e))
        }
    }
}

fn build_initial(initial: &InitialConfig, dim: usize) -> Result<GaussianMixture, CliError> {
    if initial.means.len() != initial.weights.len()
        || initial.covariances.len() != initial.weights.len()
    {
        return Err(config_err(
            "initial",
            format!(
                "{} weights, {} means, {} covariances (must match)",
                initial.weights.len(),
                initial.means.len(),
                initial.covariances.len()
            ),
        ));
    }
    let mut components = Vec::with_capacity(initial.weights.len());
    for (i, (mean, cov)) in initial.means.iter().zip(&initial.covariances).enumerate() {
        if mean.len() != dim {
            return Err(config_err(
                &format!("initial.means[{i}]"),
                format!("dimension {} does not match the system dimension {dim}", mean.len()),
            ));
        }
        let cov_field = format!("initial.covariances[{i}]");
        let cov = square_matrix(&cov_field, cov)?;
        let cov = SymmetricPsd::new(cov).map_err(|e| field_err(&cov_field, e))?;
        let g = Gaussian::new(nalgebra_vec(mean), cov)
            .map_err(|e| config_err(&format!("initial.means[{i}]"), e))?;
        components.push(g);
    }
    GaussianMixture::new(initial.weights.clone(), components)
        .map_err(|e| config_err("initial.weights", e))
}

fn nalgebra_vec(data: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_row_slice(data)
}

impl SystemConfig {
    /// Parses a JSON document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config parse: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("config serializes");
        out.push('\n');
        out
    }

    /// Builds the jump system and its initial PDF, validating every
    /// invariant before returning.
    pub fn build(&self) -> Result<(Sjls, GaussianMixture), CliError> {
        let jump = build_jump(&self.jump)?;
        match (&self.modes, &self.ncs) {
            (Some(_), Some(_)) => Err(config_err(
                "modes",
                "give either mode matrices or an ncs block, not both",
            )),
            (None, None) => Err(config_err("modes", "missing (or provide an ncs block)")),
            (Some(modes), None) => {
                if modes.is_empty() {
                    return Err(config_err("modes", "at least one mode required"));
                }
                let mats = modes
                    .iter()
                    .enumerate()
                    .map(|(j, m)| square_matrix(&format!("modes[{j}]"), m))
                    .collect::<Result<Vec<_>, _>>()?;
                let dim = mats[0].nrows();
                let sys = Sjls::new(mats, jump).map_err(|e| config_err("modes", e))?;
                let rho0 = build_initial(&self.initial, dim)?;
                Ok((sys, rho0))
            }
            (None, Some(ncs)) => {
                let plant = square_matrix("ncs.plant", &ncs.plant)?;
                let n = plant.nrows();
                if ncs.input.len() != n {
                    return Err(config_err(
                        "ncs.input",
                        format!("length {} does not match plant dimension {n}", ncs.input.len()),
                    ));
                }
                let input = Matrix::from_row_slice(n, 1, &ncs.input);

                let pairs = (ncs.tau_max + 1) * (ncs.d_max + 1);
                let mut gains: Vec<Option<Matrix>> = vec![None; pairs];
                for (i, g) in ncs.gains.iter().enumerate() {
                    let field = format!("ncs.gains[{i}]");
                    if g.tau > ncs.tau_max || g.d > ncs.d_max {
                        return Err(config_err(
                            &field,
                            format!("delay pair ({}, {}) outside the delay sets", g.tau, g.d),
                        ));
                    }
                    if g.f.len() != n {
                        return Err(config_err(
                            &field,
                            format!("gain length {} does not match plant dimension {n}", g.f.len()),
                        ));
                    }
                    let slot = g.tau * (ncs.d_max + 1) + g.d;
                    if gains[slot].is_some() {
                        return Err(config_err(
                            &field,
                            format!("duplicate gain for delay pair ({}, {})", g.tau, g.d),
                        ));
                    }
                    gains[slot] = Some(Matrix::from_row_slice(1, n, &g.f));
                }
                let gains = gains
                    .into_iter()
                    .enumerate()
                    .map(|(slot, g)| {
                        g.ok_or_else(|| {
                            config_err(
                                "ncs.gains",
                                format!(
                                    "missing gain for delay pair ({}, {})",
                                    slot / (ncs.d_max + 1),
                                    slot % (ncs.d_max + 1)
                                ),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;

                let ncs_model = DelayedNcs::new(
                    plant,
                    input,
                    gains,
                    ncs.tau_max,
                    ncs.d_max,
                    ncs.sample_time,
                )
                .map_err(|e| config_err("ncs", e))?;
                let augmented = augment(&ncs_model, jump).map_err(|e| config_err("ncs", e))?;
                let plant_rho0 = build_initial(&self.initial, n)?;
                let rho0 = augmented
                    .lift_initial(&plant_rho0)
                    .map_err(|e| config_err("initial", e))?;
                Ok((augmented.into_sjls(), rho0))
            }
        }
    }
}

/// Serializes the built-in pendulum presets into the same schema the loader
/// accepts, so presets and config files are interchangeable.
pub fn preset_config(name: &str) -> Option<SystemConfig> {
    use sjls_core::model_builder as mb;

    let (jump_kind, init_kind) = match name {
        "pendulum-markov-gaussian" => (mb::JumpKind::Markov, mb::InitKind::Gaussian),
        "pendulum-markov-mog" => (mb::JumpKind::Markov, mb::InitKind::Mog),
        "pendulum-iid-gaussian" => (mb::JumpKind::Iid, mb::InitKind::Gaussian),
        "pendulum-iid-mog" => (mb::JumpKind::Iid, mb::InitKind::Mog),
        _ => return None,
    };

    let ncs = mb::pendulum_ncs();
    let mut gains = Vec::new();
    for tau in 0..=ncs.tau_max() {
        for d in 0..=ncs.d_max() {
            gains.push(GainConfig {
                tau,
                d,
                f: ncs.gain(tau, d).iter().copied().collect(),
            });
        }
    }
    let ncs_cfg = NcsConfig {
        plant: ncs.plant().transpose().as_slice().to_vec(),
        input: ncs.input().as_slice().to_vec(),
        gains,
        tau_max: ncs.tau_max(),
        d_max: ncs.d_max(),
        sample_time: ncs.sample_time(),
    };

    let jump = match mb::pendulum_jump(jump_kind) {
        JumpProcess::Iid(p) => JumpConfig {
            kind: JumpKindConfig::Iid,
            pi: Some(p.pi.as_slice().to_vec()),
            pi0: None,
            transition: None,
            kernel: None,
        },
        JumpProcess::Markov(p) => JumpConfig {
            kind: JumpKindConfig::Markov,
            pi: None,
            pi0: Some(p.pi0().as_slice().to_vec()),
            transition: Some(p.transition().transpose().as_slice().to_vec()),
            kernel: None,
        },
        JumpProcess::SemiMarkov(_) => unreachable!("pendulum presets are iid or Markov"),
    };

    let plant_rho0 = mb::pendulum_plant_initial(init_kind);
    let initial = InitialConfig {
        weights: plant_rho0.weights().to_vec(),
        means: plant_rho0
            .components()
            .iter()
            .map(|c| c.mean().iter().copied().collect())
            .collect(),
        covariances: plant_rho0
            .components()
            .iter()
            .map(|c| c.cov().as_matrix().transpose().as_slice().to_vec())
            .collect(),
    };

    Some(SystemConfig {
        modes: None,
        ncs: Some(ncs_cfg),
        jump,
        initial,
    })
}
