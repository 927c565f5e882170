//! Classical and quantum kicked maps and the kicked-rotator environment.

pub mod classical;
pub mod kicked_env;
pub mod sawtooth;

pub use classical::{
    chirikov_step, classical_sawtooth_step, diffusion_coefficient, lyapunov, lyapunov_tangent,
    lyapunov_two_trajectory,
};
pub use kicked_env::{
    bessel_j0, environment_experiment, kicked_env_step, random_phase_kick_channel, KickedEnvParams,
};
pub use sawtooth::{
    noise_averaged_state, noisy_controlled_phase, noisy_one_qubit_gate, quantum_sawtooth_step_fft,
    quantum_sawtooth_step_gates, NoiseConfig, SawtoothParams,
};
