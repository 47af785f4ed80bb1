//! Conversion from laboratory quantities to the dimensionless problem.
//!
//! The model is driven by two dimensionless groups: `eps`, the ratio of the
//! conduction time scale in the wax to the growth time scale, and `k`, the
//! ratio of heat extracted by the coolant to heat supplied by the oil. The
//! temperature, length, and time scales come out alongside them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Laboratory inputs, SI units throughout; temperatures in any common scale
/// as long as differences are meaningful.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Pipe internal radius (m).
    pub pipe_radius: f64,
    /// Pipe wall thickness (m).
    pub pipe_wall_thickness: f64,
    /// Coolant jacket width (m).
    pub coolant_width: f64,
    /// Pipe wall conductivity (W/m/K).
    pub k_pipe: f64,
    /// Coolant conductivity (W/m/K).
    pub k_coolant: f64,
    /// Oil conductivity (W/m/K).
    pub k_oil: f64,
    /// Solid wax conductivity at the solidification temperature (W/m/K).
    pub k_wax: f64,
    /// Nusselt number of the oil flow.
    pub nu_oil: f64,
    /// Nusselt number of the coolant flow.
    pub nu_coolant: f64,
    /// Solid wax density (kg/m³).
    pub rho_wax: f64,
    /// Solid wax specific heat (J/kg/K).
    pub c_wax: f64,
    /// Latent heat of wax solidification (J/kg).
    pub latent_heat: f64,
    /// Coolant temperature.
    pub temp_coolant: f64,
    /// Wax solidification temperature.
    pub temp_melt: f64,
    /// Bulk oil temperature.
    pub temp_oil: f64,
}

/// Dimensionless groups plus the scales that non-dimensionalise the model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DimensionlessParams {
    pub eps: f64,
    pub k: f64,
    /// Temperature scale (melt minus coolant).
    pub temp_scale: f64,
    /// Length scale of the equilibrium layer (m).
    pub length_scale: f64,
    /// Growth time scale (s).
    pub time_scale: f64,
}

/// Map physical quantities to `(eps, k)` and the problem scales.
pub fn dimensional_to_dimensionless(p: &PhysicalParams) -> Result<DimensionlessParams> {
    let positive = [
        ("pipe_radius", p.pipe_radius),
        ("pipe_wall_thickness", p.pipe_wall_thickness),
        ("coolant_width", p.coolant_width),
        ("k_pipe", p.k_pipe),
        ("k_coolant", p.k_coolant),
        ("k_oil", p.k_oil),
        ("k_wax", p.k_wax),
        ("nu_oil", p.nu_oil),
        ("nu_coolant", p.nu_coolant),
        ("rho_wax", p.rho_wax),
        ("c_wax", p.c_wax),
        ("latent_heat", p.latent_heat),
    ];
    for (name, value) in positive {
        if !(value > 0.0) {
            return Err(Error::InvalidPhysical(format!(
                "{name} must be positive, got {value}"
            )));
        }
    }
    if !(p.temp_coolant < p.temp_melt && p.temp_melt < p.temp_oil) {
        return Err(Error::InvalidPhysical(format!(
            "temperatures must be ordered coolant < melt < oil, got {} / {} / {}",
            p.temp_coolant, p.temp_melt, p.temp_oil
        )));
    }

    let dt_cool = p.temp_melt - p.temp_coolant;
    let dt_oil = p.temp_oil - p.temp_melt;
    let oil_flux = p.k_oil * p.nu_oil * dt_oil;

    let temp_scale = dt_cool;
    let length_scale = p.pipe_radius * p.k_wax * dt_cool / oil_flux;
    let time_scale =
        p.pipe_radius * p.pipe_radius * p.rho_wax * p.latent_heat * p.k_wax * dt_cool
            / (oil_flux * oil_flux);
    let eps = p.c_wax * dt_cool / p.latent_heat;
    let k = p.k_pipe * p.k_coolant * p.nu_coolant * p.pipe_radius * dt_cool
        / (p.k_oil
            * p.nu_oil
            * (p.k_pipe * p.coolant_width + p.k_coolant * p.nu_coolant * p.pipe_wall_thickness)
            * dt_oil);

    Ok(DimensionlessParams {
        eps,
        k,
        temp_scale,
        length_scale,
        time_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Representative subsea magnitudes; drawn from standard property tables
    /// for paraffin wax, steel, and water rather than any single experiment.
    fn representative() -> PhysicalParams {
        PhysicalParams {
            pipe_radius: 0.1,
            pipe_wall_thickness: 0.01,
            coolant_width: 0.05,
            k_pipe: 45.0,
            k_coolant: 0.6,
            k_oil: 0.15,
            k_wax: 0.25,
            nu_oil: 1.0,
            nu_coolant: 50.0,
            rho_wax: 800.0,
            c_wax: 2500.0,
            latent_heat: 2.0e5,
            temp_coolant: 30.0,
            temp_melt: 40.0,
            temp_oil: 50.0,
        }
    }

    #[test]
    fn representative_scales_land_in_range() {
        // Order-of-magnitude targets: ~10 degrees, ~0.16 m, ~2e6 s.
        let d = dimensional_to_dimensionless(&representative()).unwrap();
        assert!((d.temp_scale - 10.0).abs() < 1e-12);
        assert!(d.length_scale > 0.08 && d.length_scale < 0.32, "{}", d.length_scale);
        assert!(d.time_scale > 1e6 && d.time_scale < 4e6, "{}", d.time_scale);
        assert!(d.eps > 0.05 && d.eps < 0.25, "{}", d.eps);
        assert!(d.k > 1.0);
    }

    #[test]
    fn equal_oil_and_melt_temperature_rejected() {
        let mut p = representative();
        p.temp_oil = p.temp_melt;
        assert!(matches!(
            dimensional_to_dimensionless(&p),
            Err(Error::InvalidPhysical(_))
        ));
        let mut p = representative();
        p.temp_coolant = p.temp_melt + 5.0;
        assert!(dimensional_to_dimensionless(&p).is_err());
        let mut p = representative();
        p.k_oil = 0.0;
        assert!(dimensional_to_dimensionless(&p).is_err());
    }

    #[test]
    fn doubling_oil_nusselt_halves_k_only() {
        let base = dimensional_to_dimensionless(&representative()).unwrap();
        let mut p = representative();
        p.nu_oil *= 2.0;
        let doubled = dimensional_to_dimensionless(&p).unwrap();
        assert!((doubled.k - 0.5 * base.k).abs() < 1e-12 * base.k);
        assert_eq!(doubled.eps, base.eps);
    }

    #[test]
    fn hotter_oil_lowers_k_at_fixed_eps() {
        let base = dimensional_to_dimensionless(&representative()).unwrap();
        let mut p = representative();
        p.temp_oil += 10.0;
        let hotter = dimensional_to_dimensionless(&p).unwrap();
        assert!(hotter.k < base.k);
        assert_eq!(hotter.eps, base.eps);
    }

    #[test]
    fn colder_coolant_raises_k_and_eps_together() {
        let base = dimensional_to_dimensionless(&representative()).unwrap();
        let mut p = representative();
        p.temp_coolant -= 5.0;
        let colder = dimensional_to_dimensionless(&p).unwrap();
        assert!(colder.k > base.k);
        assert!(colder.eps > base.eps);
    }
}
