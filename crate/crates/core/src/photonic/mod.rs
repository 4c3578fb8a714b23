//! Device-level models for the photonic element-wise multiply path.

mod analog;
mod detector;
mod device;
mod quantize;

pub use analog::{analog_ewmm, crosstalk_leak, mrr_weight, AnalogEwmm, OperandScales};
pub use detector::{
    efficiency_for_responsivity, noise_sample, photodiode_power, photodiode_sum, responsivity,
    shot_noise_rms, thermal_noise_rms, NoiseSample,
};
pub use device::{
    DeviceParams, Impairments, BOLTZMANN, ELECTRON_CHARGE, PLANCK, SPEED_OF_LIGHT,
};
pub use quantize::{clip_dynamic_range, dynamic_range_floor, quantize, quantize_signed, Clipped};
