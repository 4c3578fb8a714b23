use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementary charge, C.
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

const DEFAULT_WAVELENGTH_M: f64 = 1550e-9;
const DEFAULT_RESPONSIVITY_A_PER_W: f64 = 0.6;

/// Which analog-path impairments are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Impairments {
    pub dac_quantization: bool,
    pub memristor_quantization: bool,
    pub adc_quantization: bool,
    pub detector_noise: bool,
    pub crosstalk: bool,
    pub dynamic_range: bool,
}

impl Default for Impairments {
    fn default() -> Self {
        Impairments {
            dac_quantization: true,
            memristor_quantization: true,
            adc_quantization: true,
            detector_noise: true,
            crosstalk: false,
            dynamic_range: false,
        }
    }
}

impl Impairments {
    pub fn none() -> Self {
        Impairments {
            dac_quantization: false,
            memristor_quantization: false,
            adc_quantization: false,
            detector_noise: false,
            crosstalk: false,
            dynamic_range: false,
        }
    }
}

/// Photonic and electronic device constants.
///
/// Key names carry their unit. The quantum efficiency default is the value
/// that gives a 0.6 A/W germanium photodiode at 1550 nm; the 50 ohm shunt
/// resistance and 1 mW per-channel laser power are modelling choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    pub wavelength_m: f64,
    pub quantum_efficiency: f64,
    pub dark_current_a: f64,
    pub bandwidth_hz: f64,
    pub temperature_k: f64,
    pub shunt_resistance_ohm: f64,
    pub memristor_bits: u32,
    pub dac_bits: u32,
    pub adc_bits: u32,
    pub dynamic_range_db: f64,
    pub insertion_loss_db: f64,
    pub propagation_loss_db_per_cm: f64,
    pub channel_count_max: usize,
    pub channel_spacing_m: f64,
    pub crosstalk_db: f64,
    pub laser_power_per_channel_w: f64,
    pub pd_bias_voltage_v: f64,
    /// Reported only; not used by any noise equation.
    pub nep_w_per_sqrt_hz: f64,
    pub impairments: Impairments,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            wavelength_m: DEFAULT_WAVELENGTH_M,
            quantum_efficiency: super::efficiency_for_responsivity(
                DEFAULT_RESPONSIVITY_A_PER_W,
                DEFAULT_WAVELENGTH_M,
            ),
            dark_current_a: 1e-9,
            bandwidth_hz: 5e9,
            temperature_k: 300.0,
            shunt_resistance_ohm: 50.0,
            memristor_bits: 6,
            dac_bits: 8,
            adc_bits: 8,
            dynamic_range_db: 20.0,
            insertion_loss_db: 2.0,
            propagation_loss_db_per_cm: 1.0,
            channel_count_max: 50,
            channel_spacing_m: 0.8e-9,
            crosstalk_db: -10.0,
            laser_power_per_channel_w: 1e-3,
            pd_bias_voltage_v: -2.0,
            nep_w_per_sqrt_hz: 1e-12,
            impairments: Impairments::default(),
        }
    }
}

impl DeviceParams {
    /// Default parameters with every analog impairment switched off.
    pub fn ideal() -> Self {
        DeviceParams {
            impairments: Impairments::none(),
            ..DeviceParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("wavelength_m", self.wavelength_m),
            ("dark_current_a", self.dark_current_a),
            ("bandwidth_hz", self.bandwidth_hz),
            ("temperature_k", self.temperature_k),
            ("shunt_resistance_ohm", self.shunt_resistance_ohm),
            ("dynamic_range_db", self.dynamic_range_db),
            ("insertion_loss_db", self.insertion_loss_db),
            ("propagation_loss_db_per_cm", self.propagation_loss_db_per_cm),
            ("channel_spacing_m", self.channel_spacing_m),
            ("laser_power_per_channel_w", self.laser_power_per_channel_w),
            ("nep_w_per_sqrt_hz", self.nep_w_per_sqrt_hz),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("device.{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(Error::Config(format!(
                "device.quantum_efficiency must be in [0, 1], got {}",
                self.quantum_efficiency
            )));
        }
        for (name, bits) in [
            ("memristor_bits", self.memristor_bits),
            ("dac_bits", self.dac_bits),
            ("adc_bits", self.adc_bits),
        ] {
            if !(1..=52).contains(&bits) {
                return Err(Error::Config(format!(
                    "device.{name} must be in 1..=52, got {bits}"
                )));
            }
        }
        if self.channel_count_max == 0 {
            return Err(Error::Config("device.channel_count_max must be >= 1".into()));
        }
        if !self.crosstalk_db.is_finite() || !self.pd_bias_voltage_v.is_finite() {
            return Err(Error::Config(
                "device.crosstalk_db and device.pd_bias_voltage_v must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Photodiode responsivity for these parameters, A/W.
    pub fn responsivity(&self) -> f64 {
        super::responsivity(self.wavelength_m, self.quantum_efficiency)
            .expect("validated parameters")
    }

    /// Power transmission of one ring, `10^(-IL/10)`.
    pub fn ring_transmission(&self) -> f64 {
        10f64.powf(-self.insertion_loss_db / 10.0)
    }

    /// Linear power fraction leaked into each adjacent channel.
    pub fn crosstalk_fraction(&self) -> f64 {
        10f64.powf(self.crosstalk_db / 10.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let d = DeviceParams::default();
        d.validate().unwrap();
        assert!((d.responsivity() - 0.6).abs() < 1e-12);
        assert_eq!(d.memristor_bits, 6);
        assert_eq!(d.channel_count_max, 50);
        assert!((d.crosstalk_fraction() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = DeviceParams {
            quantum_efficiency: 1.5,
            ..DeviceParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = DeviceParams {
            adc_bits: 0,
            ..DeviceParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = DeviceParams {
            temperature_k: -1.0,
            ..DeviceParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
