//! Closed-form turbulence quantities for a Gaussian beam on a horizontal link.
//!
//! All lengths are SI metres and `cn2` is in m^(-2/3). The beam-wander
//! radial variance comes in three flavours: the general infinite outer
//! scale expression (with the hypergeometric focusing factor), its
//! collimated reduction, and the collimated finite outer scale correction.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Numerical prefactor shared by every beam-wander variance expression.
const WANDER_PREFACTOR: f64 = 2.42;

/// Greenwood frequency constant, `f_G = 0.43 V / r0`.
const GREENWOOD_CONSTANT: f64 = 0.43;

const HYP2F1_MAX_TERMS: usize = 10_000;
const HYP2F1_REL_TOL: f64 = 1e-16;

/// Physical description of a free-space link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Refractive-index structure constant, m^(-2/3).
    pub cn2: f64,
    /// Propagation distance, m.
    pub distance: f64,
    /// Transmit beam waist radius, m.
    pub omega0: f64,
    /// Beam parameter; 1 for a collimated beam, 0 for a beam focused on the receiver.
    pub theta0: f64,
    /// Outer-scale wavenumber, 1/m. Zero means infinite outer scale.
    pub kappa0: f64,
    /// Transverse wind speed, m/s.
    pub wind_speed: f64,
    /// Fried parameter, m. Only needed for the Greenwood frequency.
    pub r0: Option<f64>,
}

impl LinkParams {
    /// Collimated beam with infinite outer scale and no wind information.
    pub fn collimated(cn2: f64, distance: f64, omega0: f64) -> Self {
        Self {
            cn2,
            distance,
            omega0,
            theta0: 1.0,
            kappa0: 0.0,
            wind_speed: 0.0,
            r0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cn2 > 0.0 && self.cn2.is_finite()) {
            return domain(format!("cn2 must be positive, got {}", self.cn2));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return domain(format!("distance must be positive, got {}", self.distance));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return domain(format!("omega0 must be positive, got {}", self.omega0));
        }
        if !(0.0..=1.0).contains(&self.theta0) {
            return domain(format!("theta0 must lie in [0, 1], got {}", self.theta0));
        }
        if !(self.kappa0 >= 0.0 && self.kappa0.is_finite()) {
            return domain(format!("kappa0 must be non-negative, got {}", self.kappa0));
        }
        if !(self.wind_speed >= 0.0 && self.wind_speed.is_finite()) {
            return domain(format!("wind speed must be non-negative, got {}", self.wind_speed));
        }
        if let Some(r0) = self.r0 {
            if !(r0 > 0.0 && r0.is_finite()) {
                return domain(format!("r0 must be positive, got {r0}"));
            }
        }
        Ok(())
    }

    fn base_variance(&self) -> f64 {
        WANDER_PREFACTOR * self.cn2 * self.distance.powi(3) * self.omega0.powf(-1.0 / 3.0)
    }
}

/// Short- and long-term beam sizes at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub omega_st: f64,
    pub omega_lt: f64,
    pub rc_var: f64,
    /// On-axis intensity normalisation.
    pub i0: f64,
}

impl BeamGeometry {
    pub fn new(omega_st: f64, rc_var: f64) -> Result<Self> {
        let omega_lt = long_term_beam_size(omega_st, rc_var)?;
        Ok(Self {
            omega_st,
            omega_lt,
            rc_var,
            i0: 1.0,
        })
    }
}

/// Gauss hypergeometric function 2F1(1/3, 1; 4; z) on `[0, 1]`.
///
/// Summed directly from the Gauss series. Since `c - a - b = 8/3 > 0` the
/// series converges on the closed interval, although slowly at `z = 1`
/// where the 10,000-term cap leaves a tail of order 1e-11.
pub fn hyp2f1_beam(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return domain(format!("hyp2f1_beam argument must lie in [0, 1], got {z}"));
    }
    const A: f64 = 1.0 / 3.0;
    const C: f64 = 4.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..HYP2F1_MAX_TERMS {
        let k = k as f64;
        // (a)_k (b)_k / (c)_k k! with b = 1 cancels the factorial
        term *= (A + k) / (C + k) * z;
        sum += term;
        if term.abs() < HYP2F1_REL_TOL * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// Radial beam-wander variance for infinite outer scale Kolmogorov turbulence.
pub fn wander_variance_general(p: &LinkParams) -> Result<f64> {
    p.validate()?;
    let focus = hyp2f1_beam(1.0 - p.theta0.abs())?;
    Ok(p.base_variance() * focus)
}

/// Collimated-beam reduction, `2.42 Cn² L³ ω0^(-1/3)`.
pub fn wander_variance_collimated(p: &LinkParams) -> Result<f64> {
    p.validate()?;
    Ok(p.base_variance())
}

/// Collimated beam with a finite outer scale `kappa0 > 0`.
pub fn wander_variance_outer_scale(p: &LinkParams) -> Result<f64> {
    p.validate()?;
    if p.kappa0 <= 0.0 {
        return domain("finite outer scale variance needs kappa0 > 0; use the collimated form");
    }
    let k2w2 = (p.kappa0 * p.omega0).powi(2);
    // 1 - (x/(1+x))^(1/6), written via ln_1p to keep precision for tiny x
    let ratio_pow = ((k2w2.ln() - k2w2.ln_1p()) / 6.0).exp();
    let bracket = -(ratio_pow - 1.0);
    Ok(p.base_variance() * bracket)
}

/// Dispatches on `kappa0`: zero selects the infinite outer scale form,
/// anything positive the finite outer scale form (collimated beams only).
pub fn wander_variance(p: &LinkParams) -> Result<f64> {
    p.validate()?;
    if p.kappa0 == 0.0 {
        wander_variance_general(p)
    } else if p.theta0 == 1.0 {
        wander_variance_outer_scale(p)
    } else {
        domain("finite outer scale wander variance is only defined for a collimated beam (theta0 = 1)")
    }
}

/// `sqrt(omega_st² + rc_var)`.
pub fn long_term_beam_size(omega_st: f64, rc_var: f64) -> Result<f64> {
    if !(omega_st > 0.0) {
        return domain(format!("omega_st must be positive, got {omega_st}"));
    }
    if !(rc_var >= 0.0) {
        return domain(format!("radial variance must be non-negative, got {rc_var}"));
    }
    Ok(omega_st.hypot(rc_var.sqrt()))
}

/// Greenwood frequency in Hz for wind speed `V` (m/s) and Fried parameter `r0` (m).
pub fn greenwood_frequency(wind_speed: f64, r0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return domain(format!("r0 must be positive, got {r0}"));
    }
    if !(wind_speed >= 0.0) {
        return domain(format!("wind speed must be non-negative, got {wind_speed}"));
    }
    Ok(GREENWOOD_CONSTANT * wind_speed / r0)
}
