//! OAM mode crosstalk spectra for a displaced beam and a wander trace.
use beamwander::arma::ArmaModel;
use beamwander::channel;
use beamwander::rng::streams;
use beamwander::stats;

fn main() -> beamwander::Result<()> {
    for ratio in [0.0, 0.5, 1.0, 2.0] {
        let s = channel::oam_spectrum(ratio, 1.0, 3)?;
        let w: Vec<String> = s.modes().map(|l| format!("{:.3}", s.weight(l))).collect();
        println!("r_c/omega = {ratio}: C_-3..C_3 = [{}]", w.join(", "));
    }

    let model = ArmaModel::reference_link();
    let omega = channel::omega_st_for_gamma(model.stationary_variance()?, 0.7)?;
    let burn = model.default_burn_in();
    let xs = model.simulate_stream(3000, 4, streams::X_AXIS, burn)?;
    let ys = model.simulate_stream(3000, 4, streams::Y_AXIS, burn)?;
    let trace = channel::crosstalk_trace(&xs, &ys, omega, 5)?;
    let c0 = trace.mode_series(0);
    let acf = stats::acf(&c0, 5)?;
    println!("mean C_0 = {:.3}, ACF lags 1..5 = {:?} (band {:.3})", stats::mean(&c0), &acf.values[1..], acf.significance_bound);
    Ok(())
}
