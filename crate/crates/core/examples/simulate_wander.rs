//! Simulate two-axis beam wander from the reference ARMA(2,2) model.
use beamwander::arma::ArmaModel;
use beamwander::rng::streams;
use beamwander::stats;

fn main() -> beamwander::Result<()> {
    let model = ArmaModel::reference_link();
    let v = model.validate();
    println!("AR root moduli {:?}, MA root moduli {:?}", v.ar_root_moduli, v.ma_root_moduli);

    let burn = model.default_burn_in();
    let xs = model.simulate_stream(3000, 42, streams::X_AXIS, burn)?;
    let ys = model.simulate_stream(3000, 42, streams::Y_AXIS, burn)?;
    println!("stationary variance per axis: {:.1} px^2", model.stationary_variance()?);
    println!("sample variance x: {:.1}, y: {:.1}", stats::variance(&xs), stats::variance(&ys));
    println!("radial variance: {:.1} px^2", stats::radial_variance(&xs, &ys)?);
    for (t, (x, y)) in xs.iter().zip(&ys).take(5).enumerate() {
        println!("t = {:.4} s  x = {x:8.2}  y = {y:8.2}", t as f64 * model.sample_period);
    }
    Ok(())
}
