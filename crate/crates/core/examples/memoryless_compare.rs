//! ARMA-driven fading against the memoryless channel, seed by seed.
use beamwander::arma::ArmaModel;
use beamwander::channel;
use beamwander::commands::{geometric_decay, paired_rlds};

fn main() -> beamwander::Result<()> {
    let model = ArmaModel::reference_link();
    let omega = channel::omega_st_for_gamma(model.stationary_variance()?, 0.7)?;
    println!("seed  arma_max  memoryless_max  memoryless_geometric");
    for seed in 0..10 {
        let (arma, memless) = paired_rlds(&model, omega, 0.7, 3000, seed)?;
        println!(
            "{seed:>4}  {:>8}  {:>14}  {}",
            arma.max_run_length(),
            memless.max_run_length(),
            geometric_decay(&memless)
        );
    }
    Ok(())
}
