//! Scan ARMA orders on a grid and pick the BIC minimum.
use beamwander::arma::{order_scan, ArmaModel};

fn main() -> beamwander::Result<()> {
    let truth = ArmaModel::reference_link();
    let series = truth.simulate(3000, 3, truth.default_burn_in())?;
    let scan = order_scan(&series, 3, 3)?;
    println!(" p q        BIC        AIC");
    for c in &scan.cells {
        println!("{:>2} {:>1} {:>10.1} {:>10.1}", c.p, c.q, c.bic, c.aic);
    }
    println!("selected by BIC: {:?}, by AIC: {:?}", scan.selected, scan.selected_aic);
    Ok(())
}
