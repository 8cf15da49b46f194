mod analysis;
mod checks;
mod localization;
mod moments;

use std::f64::consts::PI;

pub use analysis::{constants, decoupling, decoupling_grid};
pub use checks::{build_check, identities, spectrum};
pub use localization::{localization, LocalizationSummary};
pub use moments::{decay_check, moments, DecayCheck, MomentsReport, MomentsRun, MOMENTS_HEADER};

use ua_core::resolvent::SpectralParameter;

use crate::config::ConfigError;
use crate::{CliError, Context};

/// Configured spectral parameters with the configured guard; `what`
/// names the subcommand in the error when the list is empty.
fn spectral_parameters(ctx: &Context, what: &str) -> Result<Vec<SpectralParameter>, CliError> {
    if ctx.cfg.z.is_empty() {
        return Err(
            ConfigError::new("z", format!("{what} needs at least one spectral parameter")).into(),
        );
    }
    ctx.cfg
        .z
        .iter()
        .map(|&z| SpectralParameter::with_guard(z, ctx.cfg.guard).map_err(CliError::from))
        .collect()
}

/// Midpoints of `n` equal cells of `(-pi, pi]`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / n as f64)
        .collect()
}

fn dense_allowed(ctx: &Context, what: &str) -> Result<(), CliError> {
    ua_core::spectral::check_dense_size(ctx.params.lattice())
        .map_err(|e| ConfigError::new("model", format!("{what}: {e}")).into())
}

fn flag(b: bool) -> String {
    b.to_string()
}
