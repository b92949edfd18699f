//! Behavioral simulation of dual-input (electrical + optical) chalcogenide
//! memristors and of the neuromorphic circuits built from them.
//!
//! - [`device`]: phenomenological switching model of one optomemristor cell.
//! - [`optics`]: normal-incidence transfer-matrix model of the device cavity.
//! - [`neuro`]: three-factor synapses and shunting-inhibition dendrites.
//! - [`maze`]: grid-world reinforcement learning on a synapse array.
//! - [`xor`]: the two-dendrite XOR neuron experiment.
//! - [`config`] / [`experiments`]: configuration and the CLI experiment runners.

pub mod config;
pub mod device;
pub mod experiments;
pub mod maze;
pub mod neuro;
pub mod optics;
pub mod rng;
pub mod xor;

pub use device::{Device, DeviceKind, DeviceParams, DeviceState, Polarity, StimulusSample};
pub use rng::SimRng;
