//! Consumed power of the access point, the panel and the receiver, and the
//! resulting sum energy efficiency.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PowerError {
    #[error("total power must be positive, got {0} W")]
    NonPositiveTotal(f64),
}

/// Hardware power draws, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub tx_circuit: f64,
    pub driver: f64,
    pub power_amp: f64,
    pub filter: f64,
    pub dac: f64,
    /// Per mirror element.
    pub mirror: f64,
    /// Per LC element.
    pub lc: f64,
    pub rx_circuit: f64,
    pub tia: f64,
    pub adc: f64,
    /// Number of receiver chains counted in the total.
    pub receivers: usize,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            tx_circuit: 3.250,
            driver: 2.758,
            power_amp: 0.280,
            filter: 0.0025,
            dac: 0.175,
            mirror: 0.100,
            lc: 0.320,
            rx_circuit: 0.0019,
            tia: 2.500,
            adc: 0.095,
            receivers: 1,
        }
    }
}

impl PowerModel {
    pub fn zero() -> Self {
        Self {
            tx_circuit: 0.0,
            driver: 0.0,
            power_amp: 0.0,
            filter: 0.0,
            dac: 0.0,
            mirror: 0.0,
            lc: 0.0,
            rx_circuit: 0.0,
            tia: 0.0,
            adc: 0.0,
            receivers: 1,
        }
    }

    /// Access point draw including the electrical signal power `p_s`.
    pub fn ap_power(&self, p_s: f64) -> f64 {
        self.tx_circuit + self.driver + self.power_amp + self.filter + self.dac + p_s
    }

    pub fn ris_power(&self, mirrors: usize, lc_cells: usize) -> f64 {
        self.mirror * mirrors as f64 + self.lc * lc_cells as f64
    }

    pub fn rx_power(&self) -> f64 {
        (self.rx_circuit + self.filter + self.tia + self.adc) * self.receivers as f64
    }

    pub fn total_power(&self, p_s: f64, mirrors: usize, lc_cells: usize) -> f64 {
        self.ap_power(p_s) + self.ris_power(mirrors, lc_cells) + self.rx_power()
    }
}

/// Sum energy efficiency in bit/J.
pub fn see(sum_rate: f64, total_power: f64) -> Result<f64, PowerError> {
    if total_power > 0.0 {
        Ok(sum_rate / total_power)
    } else {
        Err(PowerError::NonPositiveTotal(total_power))
    }
}
