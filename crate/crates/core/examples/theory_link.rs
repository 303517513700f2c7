//! Wander variance, long-term beam size and Greenwood frequency for a link.
use beamwander::theory::{self, LinkParams};

fn main() -> beamwander::Result<()> {
    let mut link = LinkParams::collimated(4.1e-13, 150.0, 7e-3);
    let rc_var = theory::wander_variance(&link)?;
    println!("collimated, omega0 = 7 mm:   <r_c^2> = {rc_var:.4e} m^2");

    link.omega0 = 3.5e-3;
    println!("collimated, omega0 = 3.5 mm: <r_c^2> = {:.4e} m^2", theory::wander_variance(&link)?);

    link.theta0 = 0.5;
    println!("theta0 = 0.5:                <r_c^2> = {:.4e} m^2", theory::wander_variance(&link)?);

    link.theta0 = 1.0;
    link.kappa0 = 2.0 * std::f64::consts::PI / 10.0;
    println!("outer scale 10 m:            <r_c^2> = {:.4e} m^2", theory::wander_variance(&link)?);

    println!("W_LT for omega_ST = 5 mm:    {:.4e} m", theory::long_term_beam_size(5e-3, rc_var)?);
    println!("Greenwood, V = 10 km/h, r0 = 1 cm: {:.1} Hz", theory::greenwood_frequency(10.0 / 3.6, 0.01)?);
    Ok(())
}
