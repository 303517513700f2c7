//! Fit an ARMA(2,2) to a simulated trace by conditional least squares.
use beamwander::arma::{fit_css, ArmaModel};

fn main() -> beamwander::Result<()> {
    let truth = ArmaModel::reference_link();
    let series = truth.simulate(3000, 7, truth.default_burn_in())?;
    let fit = fit_css(&series, 2, 2, true)?;
    for ((name, value), se) in fit.param_names.iter().zip(&fit.params).zip(&fit.stderr) {
        println!("{name:>3} = {value:9.4} +/- {se:.4}");
    }
    println!("sigma2 = {:.1} (true {})", fit.model.sigma2, truth.sigma2);
    println!("AIC {:.1}  BIC {:.1}  admissible {}", fit.aic, fit.bic, fit.is_admissible());
    println!("{}", fit.model.to_json()?);
    Ok(())
}
