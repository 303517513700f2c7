//! Residual whiteness checks for a right and a wrong model.
use beamwander::arma::{diagnose_residuals, fit_css, ArmaModel, DiagnosticsConfig};

fn main() -> beamwander::Result<()> {
    let truth = ArmaModel::reference_link();
    let series = truth.simulate(3000, 9, truth.default_burn_in())?;
    for (p, q) in [(2, 2), (1, 0)] {
        let fit = fit_css(&series, p, q, true)?;
        let cfg = DiagnosticsConfig { fitted_params: p + q, ..Default::default() };
        let d = diagnose_residuals(&fit.model.conditional_residuals(&series, p), &cfg)?;
        println!(
            "ARMA({p},{q}): Q = {:.1} (crit {:.1}, df {}), lags outside band {}, skew {:.3}, kurt {:.3}, white {}",
            d.ljung_box_q, d.chi2_critical, d.ljung_box_df, d.lags_outside_band, d.skewness, d.excess_kurtosis, d.pass
        );
    }
    Ok(())
}
