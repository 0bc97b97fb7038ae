//! Liquid-crystal cell optics: molecular tilt, refractive index, Fresnel
//! transmission through the two cell faces and photorefractive gain.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PhotonicsError {
    #[error("refractive index {eta_c} outside ({low}, {high}]")]
    IndexOutOfRange { eta_c: f64, low: f64, high: f64 },
    #[error("total internal reflection: relative index {eta_rel} at angle {angle} rad")]
    TotalInternalReflection { angle: f64, eta_rel: f64 },
    #[error("angle {0} rad is not in [0, π/2)")]
    BadAngle(f64),
    #[error("wavelength must be positive, got {0}")]
    BadWavelength(f64),
}

/// Material and drive constants of one LC refractor element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcCell {
    pub eta_o: f64,
    pub eta_e: f64,
    pub eta_a: f64,
    /// Threshold voltage above which the molecules start to tilt (V).
    pub v_th: f64,
    /// Voltage scale of the tilt response (V).
    pub v_0: f64,
    /// Cell depth (m).
    pub depth: f64,
    /// Electro-optic coefficient (m/V).
    pub r_eff: f64,
}

impl Default for LcCell {
    fn default() -> Self {
        Self {
            eta_o: 1.5,
            eta_e: 1.7,
            eta_a: 1.0,
            v_th: 1.34,
            v_0: 1.0,
            depth: 0.75e-3,
            r_eff: 12e-12,
        }
    }
}

/// Fully resolved operating point of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcState {
    pub eta_c: f64,
    pub tilt: f64,
    pub voltage: f64,
    /// Gain coefficient Γ (1/m).
    pub gamma: f64,
    /// Field across the cell (V/m).
    pub e_field: f64,
}

impl LcCell {
    pub fn tilt_from_voltage(&self, v_e: f64) -> f64 {
        if v_e <= self.v_th {
            0.0
        } else {
            FRAC_PI_2 - 2.0 * ((self.v_th - v_e) / self.v_0).exp().atan()
        }
    }

    pub fn index_from_tilt(&self, tilt: f64) -> f64 {
        let (s, c) = tilt.sin_cos();
        let inv = c * c / (self.eta_e * self.eta_e) + s * s / (self.eta_o * self.eta_o);
        inv.sqrt().recip()
    }

    /// Tilt that yields `eta_c`; inverse of [`LcCell::index_from_tilt`].
    pub fn tilt_from_index(&self, eta_c: f64) -> Result<f64, PhotonicsError> {
        self.check_index(eta_c)?;
        let (sin_t, cos_t) = self.tilt_sin_cos(eta_c);
        Ok(sin_t.atan2(cos_t))
    }

    /// Drive voltage that produces refractive index `eta_c`. Diverges as
    /// `eta_c` approaches the ordinary index.
    pub fn voltage_from_index(&self, eta_c: f64) -> Result<f64, PhotonicsError> {
        self.check_index(eta_c)?;
        let (sin_t, cos_t) = self.tilt_sin_cos(eta_c);
        // tan(π/4 − Ξ/2) = cos Ξ / (1 + sin Ξ)
        let t = cos_t / (1.0 + sin_t);
        Ok(self.v_th - self.v_0 * t.ln())
    }

    fn check_index(&self, eta_c: f64) -> Result<(), PhotonicsError> {
        if eta_c > self.eta_o && eta_c <= self.eta_e {
            Ok(())
        } else {
            Err(PhotonicsError::IndexOutOfRange {
                eta_c,
                low: self.eta_o,
                high: self.eta_e,
            })
        }
    }

    fn tilt_sin_cos(&self, eta_c: f64) -> (f64, f64) {
        let (o, e, c) = (self.eta_o, self.eta_e, eta_c);
        let span = (e * e - o * o).sqrt();
        let sin_t = (o * ((e - c) * (e + c)).sqrt() / (c * span)).min(1.0);
        let cos_t = (e * ((c - o) * (c + o)).sqrt() / (c * span)).min(1.0);
        (sin_t, cos_t)
    }

    /// Γ = 2π η_c³ r_eff E / (cos ξ λ), with E = V_E / D.
    pub fn amplification_gamma(&self, eta_c: f64, xi: f64, wavelength: f64) -> Result<f64, PhotonicsError> {
        if !(0.0..FRAC_PI_2).contains(&xi) {
            return Err(PhotonicsError::BadAngle(xi));
        }
        if wavelength <= 0.0 || !wavelength.is_finite() {
            return Err(PhotonicsError::BadWavelength(wavelength));
        }
        let e_field = self.voltage_from_index(eta_c)? / self.depth;
        Ok(2.0 * PI * eta_c.powi(3) * self.r_eff * e_field / (xi.cos() * wavelength))
    }

    /// Power multiplier exp(Γ D) of the cell.
    pub fn amplification_factor(&self, eta_c: f64, xi: f64, wavelength: f64) -> Result<f64, PhotonicsError> {
        Ok((self.amplification_gamma(eta_c, xi, wavelength)? * self.depth).exp())
    }

    pub fn transition_coefficient(&self, eta_c: f64, xi: f64) -> Result<f64, PhotonicsError> {
        transition_coefficient(self, eta_c, xi)
    }

    pub fn state(&self, eta_c: f64, xi: f64, wavelength: f64) -> Result<LcState, PhotonicsError> {
        let voltage = self.voltage_from_index(eta_c)?;
        Ok(LcState {
            eta_c,
            tilt: self.tilt_from_index(eta_c)?,
            voltage,
            gamma: self.amplification_gamma(eta_c, xi, wavelength)?,
            e_field: voltage / self.depth,
        })
    }
}

fn fresnel_average(cos_i: f64, eta_sq: f64, root: f64) -> f64 {
    let a = (eta_sq * cos_i - root) / (eta_sq * cos_i + root);
    let b = (cos_i - root) / (cos_i + root);
    0.5 * a * a + 0.5 * b * b
}

fn radicand(angle: f64, eta_rel: f64) -> Result<f64, PhotonicsError> {
    if !(0.0..FRAC_PI_2).contains(&angle) {
        return Err(PhotonicsError::BadAngle(angle));
    }
    let s = angle.sin();
    let r = eta_rel * eta_rel - s * s;
    // allow rounding noise at the critical angle
    if r < -1e-12 {
        return Err(PhotonicsError::TotalInternalReflection { angle, eta_rel });
    }
    Ok(r.max(0.0))
}

/// Unpolarized reflectance entering the cell from air at angle `xi`, with
/// `eta_rel = η_c / η_a`.
pub fn reflectance_entry(xi: f64, eta_rel: f64) -> Result<f64, PhotonicsError> {
    let root = radicand(xi, eta_rel)?.sqrt();
    Ok(fresnel_average(xi.cos(), eta_rel * eta_rel, root))
}

/// Unpolarized reflectance leaving the cell into air at internal angle
/// `theta`, with `eta1_rel = η_a / η_c`.
pub fn reflectance_exit(theta: f64, eta1_rel: f64) -> Result<f64, PhotonicsError> {
    let root = radicand(theta, eta1_rel)?.sqrt();
    Ok(fresnel_average(theta.cos(), eta1_rel * eta1_rel, root))
}

/// Internal refraction angle for light hitting the cell at `xi`.
pub fn internal_angle(eta_a: f64, eta_c: f64, xi: f64) -> f64 {
    (xi.sin() * eta_a / eta_c).clamp(-1.0, 1.0).asin()
}

/// ψ_LC = (1 − R_ac(ξ)) (1 − R_ca(θ)), θ the Snell refraction angle inside
/// the cell.
pub fn transition_coefficient(cell: &LcCell, eta_c: f64, xi: f64) -> Result<f64, PhotonicsError> {
    let theta = internal_angle(cell.eta_a, eta_c, xi);
    let r_in = reflectance_entry(xi, eta_c / cell.eta_a)?;
    let r_out = reflectance_exit(theta, cell.eta_a / eta_c)?;
    Ok((1.0 - r_in) * (1.0 - r_out))
}

/// Output power of an amplifying cell.
pub fn amplify(p_in: f64, gamma: f64, depth: f64, psi: f64) -> f64 {
    p_in * (gamma * depth).exp() * psi
}

/// Voltage for a tilt of exactly π/4; handy reference point.
pub fn quarter_tilt_voltage(cell: &LcCell) -> f64 {
    cell.v_th - cell.v_0 * (FRAC_PI_4 / 2.0).tan().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Textbook s/p Fresnel amplitudes with Snell's law.
    fn fresnel_oracle(n1: f64, n2: f64, theta_i: f64) -> f64 {
        let theta_t = (n1 / n2 * theta_i.sin()).asin();
        let (ci, ct) = (theta_i.cos(), theta_t.cos());
        let rs = (n1 * ci - n2 * ct) / (n1 * ci + n2 * ct);
        let rp = (n2 * ci - n1 * ct) / (n2 * ci + n1 * ct);
        0.5 * (rs * rs + rp * rp)
    }

    #[test]
    fn tilt_below_and_at_threshold() {
        let cell = LcCell::default();
        assert_eq!(cell.tilt_from_voltage(1.34), 0.0);
        assert_eq!(cell.tilt_from_voltage(0.5), 0.0);
    }

    #[test]
    fn quarter_tilt_voltage_value() {
        let cell = LcCell::default();
        let v = quarter_tilt_voltage(&cell);
        assert_abs_diff_eq!(v, 2.2214, epsilon = 1e-4);
        assert_abs_diff_eq!(cell.tilt_from_voltage(v), FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn index_at_axes() {
        let cell = LcCell::default();
        assert_eq!(cell.index_from_tilt(0.0), 1.7);
        assert_abs_diff_eq!(cell.index_from_tilt(FRAC_PI_2), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cell.index_from_tilt(FRAC_PI_4), 1.5906, epsilon = 1e-4);
    }

    #[test]
    fn voltage_from_index_reference_points() {
        let cell = LcCell::default();
        assert_abs_diff_eq!(cell.voltage_from_index(1.7).unwrap(), 1.34, epsilon = 1e-12);
        let eta_q = cell.index_from_tilt(FRAC_PI_4);
        assert_abs_diff_eq!(cell.voltage_from_index(eta_q).unwrap(), 2.2214, epsilon = 1e-4);
        assert!(matches!(
            cell.voltage_from_index(1.5),
            Err(PhotonicsError::IndexOutOfRange { .. })
        ));
        assert!(cell.voltage_from_index(1.71).is_err());
    }

    #[test]
    fn normal_incidence_reflectance() {
        assert_abs_diff_eq!(reflectance_entry(0.0, 1.5).unwrap(), 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(reflectance_exit(0.0, 2.0 / 3.0).unwrap(), 0.04, epsilon = 1e-12);
    }

    #[test]
    fn grazing_and_critical_limits() {
        let r = reflectance_entry(FRAC_PI_2 - 1e-9, 1.5).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-6);
        let eta1 = 2.0 / 3.0;
        let crit = f64::asin(eta1);
        assert_abs_diff_eq!(reflectance_exit(crit, eta1).unwrap(), 1.0, epsilon = 1e-6);
        assert!(matches!(
            reflectance_exit(crit + 0.05, eta1),
            Err(PhotonicsError::TotalInternalReflection { .. })
        ));
    }

    #[test]
    fn reflectance_matches_fresnel_oracle() {
        let xi = 30f64.to_radians();
        assert_abs_diff_eq!(reflectance_entry(xi, 1.5).unwrap(), fresnel_oracle(1.0, 1.5, xi), epsilon = 1e-12);
        let th = 20f64.to_radians();
        assert_abs_diff_eq!(
            reflectance_exit(th, 2.0 / 3.0).unwrap(),
            fresnel_oracle(1.5, 1.0, th),
            epsilon = 1e-12
        );
    }

    #[test]
    fn transition_coefficient_cases() {
        let cell = LcCell::default();
        assert_abs_diff_eq!(transition_coefficient(&cell, 1.5, 0.0).unwrap(), 0.9216, epsilon = 1e-12);
        assert_abs_diff_eq!(transition_coefficient(&cell, 1.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);

        let xi = 45f64.to_radians();
        let psi = transition_coefficient(&cell, 1.6, xi).unwrap();
        let theta = (xi.sin() / 1.6).asin();
        let oracle = (1.0 - fresnel_oracle(1.0, 1.6, xi)) * (1.0 - fresnel_oracle(1.6, 1.0, theta));
        assert_abs_diff_eq!(psi, oracle, epsilon = 1e-12);
        assert!(psi > 0.0 && psi < 0.9216);
    }

    #[test]
    fn gamma_reference_value() {
        let cell = LcCell::default();
        let eta = cell.index_from_tilt(FRAC_PI_4);
        let g = cell.amplification_gamma(eta, 0.0, 510e-9).unwrap();
        assert_abs_diff_eq!(g, 1.762, epsilon = 1e-3);
        assert_abs_diff_eq!((g * cell.depth).exp(), 1.00132, epsilon = 1e-5);

        let g670 = cell.amplification_gamma(eta, 0.0, 670e-9).unwrap();
        assert_relative_eq!(g670 / g, 510.0 / 670.0, max_relative = 1e-12);
        let g60 = cell.amplification_gamma(eta, 60f64.to_radians(), 510e-9).unwrap();
        assert_relative_eq!(g60 / g, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn gamma_rejects_bad_inputs() {
        let cell = LcCell::default();
        assert!(matches!(
            cell.amplification_gamma(1.6, FRAC_PI_2, 510e-9),
            Err(PhotonicsError::BadAngle(_))
        ));
        assert!(cell.amplification_gamma(1.5, 0.0, 510e-9).is_err());
        assert!(cell.amplification_gamma(1.6, 0.0, 0.0).is_err());
    }

    #[test]
    fn amplify_cases() {
        assert_eq!(amplify(2.0, 0.0, 1e-3, 0.5), 1.0);
        assert_eq!(amplify(0.0, 1.762, 0.75e-3, 0.9216), 0.0);
        assert_abs_diff_eq!(amplify(1.0, 1.762, 0.75e-3, 0.9216), 0.92282, epsilon = 1e-5);
    }

    #[test]
    fn state_is_consistent() {
        let cell = LcCell::default();
        let s = cell.state(1.6, 0.0, 510e-9).unwrap();
        assert_abs_diff_eq!(cell.index_from_tilt(s.tilt), 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(cell.tilt_from_voltage(s.voltage), s.tilt, epsilon = 1e-12);
        assert_relative_eq!(s.e_field, s.voltage / cell.depth);
    }
}
