//! Fading intensity from simulated wander and its run-length distribution.
use beamwander::arma::ArmaModel;
use beamwander::channel;
use beamwander::rng::streams;
use beamwander::stats::{self, Side};

fn main() -> beamwander::Result<()> {
    let model = ArmaModel::reference_link();
    let omega = channel::omega_st_for_gamma(model.stationary_variance()?, 0.7)?;
    let burn = model.default_burn_in();
    let xs = model.simulate_stream(3000, 1, streams::X_AXIS, burn)?;
    let ys = model.simulate_stream(3000, 1, streams::Y_AXIS, burn)?;
    let fading = channel::fading_trace(&xs, &ys, omega, None, model.sample_period)?;

    let si = stats::scintillation_index(&fading.intensities)?;
    println!("omega_ST = {omega:.1} px, mean intensity {:.3}, sigma_I^2 = {:.3}", fading.mean(), si.sigma_i2);
    println!("gamma_hat = {:.3}", channel::estimate_gamma(&fading.intensities)?);

    let rld = stats::run_length_distribution(&fading.intensities, fading.mean());
    for side in [Side::Above, Side::Below] {
        let longest = rld.max_run_length_on(side);
        println!("{} mean: longest run {longest} samples = {:.1} ms", side.as_str(), longest as f64 * model.sample_period * 1e3);
    }
    Ok(())
}
