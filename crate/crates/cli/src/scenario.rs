//! Turns a resolved configuration into physics objects: transport spec,
//! one control signal and forced-response profile per selected model, and
//! solver grids. Failures here are configuration mistakes and exit as such;
//! solver-time guards surface from the command layer instead.

use crate::config::{ModelKind, ScenarioConfig};
use crate::{CliError, CliResult};
use shuttlesim::control::{
    make_reference_transport, volterra_response, ControlSignal, ForcedProfile, SmoothingKernel,
    TransportSpec,
};
use shuttlesim::distortion::{
    apply_derivative_model, apply_fourier_model, apply_piecewise_model, apply_smoothed_piecewise,
    DerivativeModel, FourierModel, PiecewiseModel,
};
use shuttlesim::quantum::SpatialGrid;
use shuttlesim::SimError;

pub struct ModelRun {
    pub kind: ModelKind,
    pub control: ControlSignal,
    pub profile: ForcedProfile,
}

fn config_err(e: SimError) -> CliError {
    CliError::Config(e.to_string())
}

pub fn transport_spec(config: &ScenarioConfig) -> CliResult<TransportSpec> {
    TransportSpec::new(config.delta_x, config.duration).map_err(config_err)
}

/// Builds the reference control and every selected distortion of it, each
/// paired with its driven-well response profile.
pub fn build_models(config: &ScenarioConfig) -> CliResult<Vec<ModelRun>> {
    let spec = transport_spec(config)?;
    let reference = make_reference_transport(spec).map_err(config_err)?;
    let step = config.duration / (config.control_samples - 1) as f64;
    let mut runs = Vec::with_capacity(config.models.len());
    for &kind in &config.models {
        let control = match kind {
            ModelKind::Reference => reference.clone(),
            ModelKind::Derivative => {
                let model = DerivativeModel::new(config.alpha).map_err(config_err)?;
                apply_derivative_model(&reference, &model).map_err(config_err)?
            }
            ModelKind::Piecewise => {
                let model = PiecewiseModel::new(config.steps, None).map_err(config_err)?;
                apply_piecewise_model(&reference, &model).map_err(config_err)?
            }
            ModelKind::Smoothed => {
                let kernel = SmoothingKernel::exponential(config.tau_c).map_err(config_err)?;
                let model =
                    PiecewiseModel::new(config.steps, Some(kernel)).map_err(config_err)?;
                apply_smoothed_piecewise(&reference, &model).map_err(config_err)?
            }
            ModelKind::Fourier => {
                let model = FourierModel::seeded(
                    config.fourier_harmonics,
                    config.fourier_period,
                    config.seed,
                )
                .map_err(config_err)?;
                apply_fourier_model(&reference, &model).map_err(config_err)?
            }
        };
        let profile = volterra_response(&control, step).map_err(config_err)?;
        runs.push(ModelRun {
            kind,
            control,
            profile,
        });
    }
    Ok(runs)
}

pub fn grid_for(config: &ScenarioConfig, control: &ControlSignal) -> CliResult<SpatialGrid> {
    SpatialGrid::for_transport(control, config.grid_points).map_err(config_err)
}
