use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

use super::device::{DeviceParams, BOLTZMANN, ELECTRON_CHARGE, PLANCK, SPEED_OF_LIGHT};

/// Photodiode responsivity `R = lambda q eta / (h c)`, in A/W.
pub fn responsivity(wavelength_m: f64, efficiency: f64) -> Result<f64> {
    if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
        return Err(Error::domain(format!("wavelength must be > 0, got {wavelength_m}")));
    }
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::domain(format!(
            "quantum efficiency must be in [0, 1], got {efficiency}"
        )));
    }
    Ok(wavelength_m * ELECTRON_CHARGE * efficiency / (PLANCK * SPEED_OF_LIGHT))
}

/// Quantum efficiency that yields `responsivity_a_per_w` at `wavelength_m`.
pub fn efficiency_for_responsivity(responsivity_a_per_w: f64, wavelength_m: f64) -> f64 {
    responsivity_a_per_w * PLANCK * SPEED_OF_LIGHT / (wavelength_m * ELECTRON_CHARGE)
}

/// Shot-noise RMS current `sqrt(2 q (I_ph + I_D) df)`.
pub fn shot_noise_rms(photocurrent_a: f64, dark_current_a: f64, bandwidth_hz: f64) -> Result<f64> {
    if photocurrent_a < 0.0 || dark_current_a < 0.0 || bandwidth_hz < 0.0 {
        return Err(Error::domain("shot noise inputs must be non-negative"));
    }
    Ok((2.0 * ELECTRON_CHARGE * (photocurrent_a + dark_current_a) * bandwidth_hz).sqrt())
}

/// Johnson-noise RMS current `sqrt(4 k_B T df / R_SH)`.
pub fn thermal_noise_rms(temperature_k: f64, shunt_ohm: f64, bandwidth_hz: f64) -> Result<f64> {
    if shunt_ohm <= 0.0 {
        return Err(Error::domain(format!("shunt resistance must be > 0, got {shunt_ohm}")));
    }
    if temperature_k < 0.0 || bandwidth_hz < 0.0 {
        return Err(Error::domain("temperature and bandwidth must be non-negative"));
    }
    Ok((4.0 * BOLTZMANN * temperature_k * bandwidth_hz / shunt_ohm).sqrt())
}

/// Noise budget of one detection event plus the seeded Gaussian draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSample {
    pub shot_rms: f64,
    pub thermal_rms: f64,
    /// Root-sum-square of the two independent sources.
    pub total_rms: f64,
    pub draw: f64,
}

/// Noise at signal current `current_a` (shot noise uses `|I|`).
pub fn noise_sample(current_a: f64, dev: &DeviceParams, rng_seed: u64) -> Result<NoiseSample> {
    let shot = shot_noise_rms(current_a.abs(), dev.dark_current_a, dev.bandwidth_hz)?;
    let thermal = thermal_noise_rms(dev.temperature_k, dev.shunt_resistance_ohm, dev.bandwidth_hz)?;
    let total = shot.hypot(thermal);
    let draw = if total > 0.0 {
        let normal = Normal::new(0.0, total).map_err(|e| Error::domain(e.to_string()))?;
        normal.sample(&mut seed::rng(rng_seed))
    } else {
        0.0
    };
    Ok(NoiseSample {
        shot_rms: shot,
        thermal_rms: thermal,
        total_rms: total,
        draw,
    })
}

/// Balanced photodetection of incoherently summed channels.
///
/// `channel_powers` are signed: the sign selects the arm of the differential
/// pair. Returns `R * sum(p)` plus one noise draw when detector noise is on.
pub fn photodiode_sum(channel_powers: &[f64], dev: &DeviceParams, rng_seed: u64) -> Result<f64> {
    if channel_powers.len() > dev.channel_count_max {
        return Err(Error::Capacity {
            used: channel_powers.len(),
            max: dev.channel_count_max,
        });
    }
    let signal = dev.responsivity() * channel_powers.iter().sum::<f64>();
    if !dev.impairments.detector_noise {
        return Ok(signal);
    }
    Ok(signal + noise_sample(signal, dev, rng_seed)?.draw)
}

/// Electrical power drawn by a reverse-biased photodiode, `|V_bias| I`.
pub fn photodiode_power(dev: &DeviceParams, optical_power_w: f64) -> f64 {
    dev.pd_bias_voltage_v.abs() * dev.responsivity() * optical_power_w
}
