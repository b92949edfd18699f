//! Neuromorphic primitives built on [`Device`] instances.
//!
//! * [`ThreeFactorSynapse`]: optical eligibility flag plus electrical reward.
//! * [`ShuntingDendrite`]: electrical excitation vetoed by coincident light.
//! * [`DendriticNeuron`]: two shunting dendrites summed at a thresholded soma.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{
    Device, DeviceError, DeviceKind, DeviceParams, Polarity, StimulusSample, Trace, TraceRow,
    SUBTHRESHOLD_BAND,
};

/// Number of time steps an eligibility flag stays raised.
pub const ELIGIBILITY_STEPS: u32 = 3;

#[derive(Debug, Error, PartialEq)]
pub enum NeuroError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("invalid protocol: {0}")]
    Protocol(String),
}

/// Drive protocol for a [`ThreeFactorSynapse`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynapseProtocol {
    /// Continuous read bias (V).
    pub bias_voltage: f64,
    /// Optical power of the eligibility flag (W).
    pub flag_power: f64,
    pub reward_amplitude: f64,
    /// Reward pulse width (s).
    pub reward_width: f64,
    /// Duration of one environment step at bias (s).
    pub step_duration: f64,
}

impl Default for SynapseProtocol {
    fn default() -> Self {
        SynapseProtocol {
            bias_voltage: 0.1,
            flag_power: 0.2e-3,
            reward_amplitude: 0.4,
            reward_width: 500e-9,
            step_duration: 1e-6,
        }
    }
}

/// Common interface of device-backed and ideal synapses.
pub trait PlasticSynapse {
    /// Raises the flag for [`ELIGIBILITY_STEPS`] steps; re-triggering re-arms.
    fn raise_eligibility(&mut self);
    /// Counts the flag down by one step, saturating at zero.
    fn tick_eligibility(&mut self);
    fn clear_eligibility(&mut self);
    fn eligibility_remaining(&self) -> u32;
    /// Holds the synapse at its read bias for one environment step.
    fn hold<R: Rng + ?Sized>(&mut self, rng: &mut R);
    /// Delivers the global reward. Returns whether this pulse potentiated the
    /// synapse. Eligibility is cleared afterwards.
    fn apply_reward<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool;
    fn conductance(&self) -> f64;
    fn is_potentiated(&self) -> bool;
}

/// Non-volatile cell with flipped polarity: light lowers its threshold below
/// the reward amplitude, so only flagged cells respond to the reward.
#[derive(Debug, Clone)]
pub struct ThreeFactorSynapse {
    device: Device,
    eligibility_remaining: u32,
    protocol: SynapseProtocol,
}

impl ThreeFactorSynapse {
    pub fn new(params: DeviceParams, protocol: SynapseProtocol) -> Result<Self, NeuroError> {
        if params.kind != DeviceKind::NonVolatile {
            return Err(NeuroError::Protocol("synapse needs a non-volatile device".into()));
        }
        if params.polarity != Polarity::Negative {
            return Err(NeuroError::Protocol("synapse needs polarity -1".into()));
        }
        let pr = &protocol;
        let finite = [pr.bias_voltage, pr.flag_power, pr.reward_amplitude, pr.reward_width, pr.step_duration];
        if finite.iter().any(|v| !v.is_finite()) || pr.reward_width <= 0.0 || pr.step_duration <= 0.0 {
            return Err(NeuroError::Protocol("non-finite or non-positive timing".into()));
        }
        let v_flag = params.effective_threshold(pr.flag_power);
        if pr.reward_amplitude >= SUBTHRESHOLD_BAND * params.v_th_dark {
            return Err(NeuroError::Protocol(format!(
                "reward amplitude {} V reaches the dark switching band ({} V)",
                pr.reward_amplitude,
                SUBTHRESHOLD_BAND * params.v_th_dark
            )));
        }
        if pr.reward_amplitude <= v_flag {
            return Err(NeuroError::Protocol(format!(
                "reward amplitude {} V does not exceed the flagged threshold {v_flag} V",
                pr.reward_amplitude
            )));
        }
        if pr.bias_voltage >= SUBTHRESHOLD_BAND * v_flag {
            return Err(NeuroError::Protocol(format!(
                "bias {} V reaches the flagged switching band",
                pr.bias_voltage
            )));
        }
        if pr.bias_voltage < params.v_hold {
            return Err(NeuroError::Protocol(format!(
                "bias {} V below holding voltage would let the flag erase the cell",
                pr.bias_voltage
            )));
        }
        Ok(ThreeFactorSynapse { device: Device::new(params)?, eligibility_remaining: 0, protocol })
    }

    /// Ag/Ag profile with flipped polarity and the default protocol.
    pub fn with_defaults() -> Self {
        let params = DeviceParams::ag_ag_nonvolatile().with_polarity(Polarity::Negative);
        Self::new(params, SynapseProtocol::default()).expect("default synapse protocol is valid")
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn protocol(&self) -> &SynapseProtocol {
        &self.protocol
    }

    fn optical_power(&self) -> f64 {
        if self.eligibility_remaining > 0 {
            self.protocol.flag_power
        } else {
            0.0
        }
    }

    fn drive<R: Rng + ?Sized>(&mut self, voltage: f64, duration: f64, rng: &mut R) {
        let power = self.optical_power();
        let sample = StimulusSample::new(voltage, power, duration).expect("protocol validated at construction");
        self.device.step(&sample, rng);
    }
}

impl PlasticSynapse for ThreeFactorSynapse {
    fn raise_eligibility(&mut self) {
        self.eligibility_remaining = ELIGIBILITY_STEPS;
    }

    fn tick_eligibility(&mut self) {
        self.eligibility_remaining = self.eligibility_remaining.saturating_sub(1);
    }

    fn clear_eligibility(&mut self) {
        self.eligibility_remaining = 0;
    }

    fn eligibility_remaining(&self) -> u32 {
        self.eligibility_remaining
    }

    fn hold<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (v, d) = (self.protocol.bias_voltage, self.protocol.step_duration);
        self.drive(v, d, rng);
    }

    fn apply_reward<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let before = self.device.state().latched;
        let (v, d) = (self.protocol.reward_amplitude, self.protocol.reward_width);
        self.drive(v, d, rng);
        self.eligibility_remaining = 0;
        self.device.state().latched && !before
    }

    fn conductance(&self) -> f64 {
        self.device.conductance()
    }

    fn is_potentiated(&self) -> bool {
        self.device.state().latched
    }
}

/// Ideal eligibility-window rule with no device underneath.
#[derive(Debug, Clone, PartialEq)]
pub struct BooleanSynapse {
    eligibility_remaining: u32,
    potentiated: bool,
    g_low: f64,
    g_high: f64,
}

impl BooleanSynapse {
    pub fn new(g_low: f64, g_high: f64) -> Self {
        BooleanSynapse { eligibility_remaining: 0, potentiated: false, g_low, g_high }
    }

    pub fn from_params(params: &DeviceParams) -> Self {
        Self::new(params.g_hrs, params.g_lrs)
    }
}

impl PlasticSynapse for BooleanSynapse {
    fn raise_eligibility(&mut self) {
        self.eligibility_remaining = ELIGIBILITY_STEPS;
    }

    fn tick_eligibility(&mut self) {
        self.eligibility_remaining = self.eligibility_remaining.saturating_sub(1);
    }

    fn clear_eligibility(&mut self) {
        self.eligibility_remaining = 0;
    }

    fn eligibility_remaining(&self) -> u32 {
        self.eligibility_remaining
    }

    fn hold<R: Rng + ?Sized>(&mut self, _rng: &mut R) {}

    fn apply_reward<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> bool {
        let switched = self.eligibility_remaining > 0 && !self.potentiated;
        self.potentiated |= self.eligibility_remaining > 0;
        self.eligibility_remaining = 0;
        switched
    }

    fn conductance(&self) -> f64 {
        if self.potentiated {
            self.g_high
        } else {
            self.g_low
        }
    }

    fn is_potentiated(&self) -> bool {
        self.potentiated
    }
}

/// Drive protocol for a [`ShuntingDendrite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DendriteProtocol {
    pub excit_amplitude: f64,
    pub excit_width: f64,
    /// Optical power of the inhibitory input (W).
    pub inhib_power: f64,
    /// Zero-bias dark interval after each pulse, at least `tau_relax`.
    pub relax_duration: f64,
}

impl Default for DendriteProtocol {
    fn default() -> Self {
        DendriteProtocol { excit_amplitude: 0.8, excit_width: 5e-6, inhib_power: 1.5e-3, relax_duration: 2e-6 }
    }
}

/// Volatile cell that switches on an excitatory pulse unless illuminated.
#[derive(Debug, Clone)]
pub struct ShuntingDendrite {
    device: Device,
    protocol: DendriteProtocol,
}

/// Read current of one dendrite evaluation plus the device trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DendriteReading {
    pub current: f64,
    pub trace: Trace,
}

impl ShuntingDendrite {
    pub fn new(params: DeviceParams, protocol: DendriteProtocol) -> Result<Self, NeuroError> {
        if params.kind != DeviceKind::Volatile {
            return Err(NeuroError::Protocol("dendrite needs a volatile device".into()));
        }
        if params.polarity != Polarity::Positive {
            return Err(NeuroError::Protocol("dendrite needs polarity +1".into()));
        }
        let p = &protocol;
        let finite = [p.excit_amplitude, p.excit_width, p.inhib_power, p.relax_duration];
        if finite.iter().any(|v| !v.is_finite()) || p.excit_width <= 0.0 || p.inhib_power < 0.0 {
            return Err(NeuroError::Protocol("non-finite or non-positive timing".into()));
        }
        if p.excit_amplitude <= params.v_th_dark {
            return Err(NeuroError::Protocol(format!(
                "excitatory amplitude {} V must exceed v_th_dark {} V",
                p.excit_amplitude, params.v_th_dark
            )));
        }
        let v_inhib = params.effective_threshold(p.inhib_power);
        if p.excit_amplitude >= SUBTHRESHOLD_BAND * v_inhib {
            return Err(NeuroError::Protocol(format!(
                "inhibitory power {} W leaves the pulse inside the switching band (threshold {v_inhib} V)",
                p.inhib_power
            )));
        }
        if p.relax_duration < params.tau_relax {
            return Err(NeuroError::Protocol("relax_duration shorter than tau_relax".into()));
        }
        Ok(ShuntingDendrite { device: Device::new(params)?, protocol })
    }

    pub fn with_defaults() -> Self {
        Self::new(DeviceParams::pt_ag_volatile(), DendriteProtocol::default())
            .expect("default dendrite protocol is valid")
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn protocol(&self) -> &DendriteProtocol {
        &self.protocol
    }

    /// Current read with the device in LRS at the excitatory amplitude.
    pub fn lrs_read_current(&self) -> f64 {
        let p = self.device.params();
        p.current(&crate::device::DeviceState::lrs(p), self.protocol.excit_amplitude, 0.0)
    }

    /// Applies one input pair; the current is read at the end of the pulse
    /// window, then the cell relaxes back to HRS.
    pub fn response<R: Rng + ?Sized>(&mut self, excitatory: bool, inhibitory: bool, rng: &mut R) -> f64 {
        self.response_traced(excitatory, inhibitory, rng).current
    }

    pub fn response_traced<R: Rng + ?Sized>(
        &mut self,
        excitatory: bool,
        inhibitory: bool,
        rng: &mut R,
    ) -> DendriteReading {
        let p = &self.protocol;
        let v = if excitatory { p.excit_amplitude } else { 0.0 };
        let power = if inhibitory { p.inhib_power } else { 0.0 };
        let pulse = StimulusSample::new(v, power, p.excit_width).expect("protocol validated");
        let relax = StimulusSample::new(0.0, 0.0, p.relax_duration).expect("protocol validated");
        let mut trace = Trace::default();
        let events = self.device.step(&pulse, rng);
        let current = self.device.current(v, power);
        trace.rows.push(TraceRow {
            time_s: self.device.clock(),
            voltage_v: v,
            optical_power_w: power,
            current_a: current,
            conductance_s: self.device.conductance(),
            events,
        });
        let events = self.device.step(&relax, rng);
        trace.rows.push(TraceRow {
            time_s: self.device.clock(),
            voltage_v: 0.0,
            optical_power_w: 0.0,
            current_a: self.device.current(0.0, 0.0),
            conductance_s: self.device.conductance(),
            events,
        });
        DendriteReading { current, trace }
    }
}

/// Two dendrites, D1 driven by (x excites, y inhibits) and D2 by
/// (y excites, x inhibits), summed at a strict-threshold soma.
#[derive(Debug, Clone)]
pub struct DendriticNeuron {
    pub d1: ShuntingDendrite,
    pub d2: ShuntingDendrite,
    soma_threshold: f64,
}

/// Dendrite currents and the soma decision for one input pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeuronReading {
    pub i_d1: f64,
    pub i_d2: f64,
    pub i_sum: f64,
    pub output: bool,
}

impl DendriticNeuron {
    /// `soma_threshold = None` uses half of the single-dendrite LRS read current.
    pub fn new(d1: ShuntingDendrite, d2: ShuntingDendrite, soma_threshold: Option<f64>) -> Result<Self, NeuroError> {
        let lrs = d1.lrs_read_current().min(d2.lrs_read_current());
        let thr = soma_threshold.unwrap_or(0.5 * lrs);
        if !(thr > 0.0 && thr < lrs) {
            return Err(NeuroError::Protocol(format!(
                "soma threshold {thr} A must lie in (0, {lrs}) A"
            )));
        }
        Ok(DendriticNeuron { d1, d2, soma_threshold: thr })
    }

    pub fn with_defaults() -> Self {
        Self::new(ShuntingDendrite::with_defaults(), ShuntingDendrite::with_defaults(), None)
            .expect("default neuron is valid")
    }

    /// Replaces the soma threshold without the range check, for threshold
    /// sweeps outside the operating window.
    pub fn override_threshold(&mut self, threshold: f64) {
        self.soma_threshold = threshold;
    }

    pub fn soma_threshold(&self) -> f64 {
        self.soma_threshold
    }

    pub fn evaluate<R: Rng + ?Sized>(&mut self, x: bool, y: bool, rng: &mut R) -> NeuronReading {
        let i_d1 = self.d1.response(x, y, rng);
        let i_d2 = self.d2.response(y, x, rng);
        let i_sum = i_d1 + i_d2;
        NeuronReading { i_d1, i_d2, i_sum, output: i_sum > self.soma_threshold }
    }

    pub fn output<R: Rng + ?Sized>(&mut self, x: bool, y: bool, rng: &mut R) -> bool {
        self.evaluate(x, y, rng).output
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn eligibility_counts_down_and_rearms() {
        let mut s = ThreeFactorSynapse::with_defaults();
        assert_eq!(s.eligibility_remaining(), 0);
        s.raise_eligibility();
        assert_eq!(s.eligibility_remaining(), 3);
        s.tick_eligibility();
        assert_eq!(s.eligibility_remaining(), 2);
        s.raise_eligibility();
        assert_eq!(s.eligibility_remaining(), 3);
        for _ in 0..3 {
            s.tick_eligibility();
        }
        assert_eq!(s.eligibility_remaining(), 0);
        s.tick_eligibility();
        assert_eq!(s.eligibility_remaining(), 0);
        assert_eq!(s.conductance(), s.device().params().g_hrs);
    }

    #[test]
    fn eligible_synapse_switches_on_reward() {
        let mut s = ThreeFactorSynapse::with_defaults();
        let mut rng = seeded(1);
        s.raise_eligibility();
        assert!(s.apply_reward(&mut rng));
        assert_eq!(s.conductance(), s.device().params().g_lrs);
        assert_eq!(s.eligibility_remaining(), 0);
        // Already potentiated: a second reward reports no new switch.
        s.raise_eligibility();
        assert!(!s.apply_reward(&mut rng));
    }

    #[test]
    fn dark_reward_does_not_switch() {
        let mut s = ThreeFactorSynapse::with_defaults();
        assert!(!s.apply_reward(&mut seeded(2)));
        assert_eq!(s.conductance(), s.device().params().g_hrs);
    }

    #[test]
    fn flag_alone_never_switches() {
        let mut s = ThreeFactorSynapse::with_defaults();
        let mut rng = seeded(3);
        for _ in 0..1000 {
            s.raise_eligibility();
            s.hold(&mut rng);
        }
        assert!(!s.is_potentiated());
        assert_eq!(s.device().state().step_index, 0);
    }

    #[test]
    fn synapse_protocol_is_validated() {
        let params = DeviceParams::ag_ag_nonvolatile().with_polarity(Polarity::Negative);
        let hot = SynapseProtocol { reward_amplitude: 0.55, ..SynapseProtocol::default() };
        assert!(ThreeFactorSynapse::new(params.clone(), hot).is_err());
        let dim = SynapseProtocol { flag_power: 1e-6, ..SynapseProtocol::default() };
        assert!(ThreeFactorSynapse::new(params.clone(), dim).is_err());
        let low_bias = SynapseProtocol { bias_voltage: 0.0, ..SynapseProtocol::default() };
        assert!(ThreeFactorSynapse::new(params.clone(), low_bias).is_err());
        let positive = params.clone().with_polarity(Polarity::Positive);
        assert!(ThreeFactorSynapse::new(positive, SynapseProtocol::default()).is_err());
        assert!(ThreeFactorSynapse::new(DeviceParams::pt_ag_volatile(), SynapseProtocol::default()).is_err());
    }

    #[test]
    fn boolean_synapse_follows_window_rule() {
        let mut b = BooleanSynapse::new(1.0, 2.0);
        let mut rng = seeded(0);
        assert!(!b.apply_reward(&mut rng));
        b.raise_eligibility();
        b.tick_eligibility();
        b.tick_eligibility();
        assert!(b.apply_reward(&mut rng));
        assert_eq!(b.conductance(), 2.0);
        b.raise_eligibility();
        for _ in 0..3 {
            b.tick_eligibility();
        }
        assert!(!b.apply_reward(&mut rng));
    }

    #[test]
    fn dendrite_truth_table() {
        let mut d = ShuntingDendrite::with_defaults();
        let mut rng = seeded(4);
        let g_lrs = d.device().params().g_lrs;
        let high = d.response(true, false, &mut rng);
        assert!((high - g_lrs * 0.8).abs() < 1e-12);
        assert_eq!(d.device().state().step_index, 0);
        let shunted = d.response(true, true, &mut rng);
        assert!(shunted.abs() < 1e-3 * high);
        let light = d.response(false, true, &mut rng);
        assert!(light.abs() < 1e-3 * high);
        assert_eq!(d.device().state().step_index, 0);
        assert_eq!(d.response(false, false, &mut rng), 0.0);
    }

    #[test]
    fn dendrite_protocol_is_validated() {
        let p = DeviceParams::pt_ag_volatile();
        let weak = DendriteProtocol { excit_amplitude: 0.3, ..DendriteProtocol::default() };
        assert!(ShuntingDendrite::new(p.clone(), weak).is_err());
        let dim = DendriteProtocol { inhib_power: 0.5e-3, ..DendriteProtocol::default() };
        assert!(ShuntingDendrite::new(p.clone(), dim).is_err());
        let short = DendriteProtocol { relax_duration: 1e-9, ..DendriteProtocol::default() };
        assert!(ShuntingDendrite::new(p, short).is_err());
    }

    #[test]
    fn neuron_threshold_is_validated() {
        let d = ShuntingDendrite::with_defaults;
        assert!(DendriticNeuron::new(d(), d(), Some(0.0)).is_err());
        assert!(DendriticNeuron::new(d(), d(), Some(1.0)).is_err());
        let n = DendriticNeuron::with_defaults();
        assert!((n.soma_threshold() - 40e-6).abs() < 1e-15);
    }

    #[test]
    fn neuron_computes_xor() {
        let mut n = DendriticNeuron::with_defaults();
        let mut rng = seeded(5);
        for (x, y) in [(false, false), (true, false), (false, true), (true, true)] {
            assert_eq!(n.output(x, y, &mut rng), x ^ y, "({x}, {y})");
        }
    }
}
