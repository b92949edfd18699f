//! Phenomenological state-machine model of a single optomemristor cell.
//!
//! The cell has a discrete conductance staircase between HRS (step 0) and LRS
//! (step `n_intermediate`). Illumination shifts the switching threshold and
//! adds a photovoltaic offset to the I-V characteristic; both scale as
//! `k * ln(1 + P / p_ref)`. Switching onset is stochastic with an exponential
//! latency whose mean falls exponentially with the overdrive voltage.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Optical power at which the calibrated threshold shift equals `v_th_dark`.
pub const THRESHOLD_CALIBRATION_POWER: f64 = 0.5e-3;
/// Optical power at which the calibrated open-circuit voltage is reached.
pub const V0_CALIBRATION_POWER: f64 = 1.0e-3;
/// Open-circuit voltage at [`V0_CALIBRATION_POWER`].
pub const V0_CALIBRATION_VOLTAGE: f64 = 0.455;
/// Lower clamp on the effective threshold, as a fraction of `v_th_dark`.
pub const THRESHOLD_CLAMP_FRACTION: f64 = 0.05;
/// Lower edge of the stochastic partial-switching band, as a fraction of the
/// effective threshold.
pub const SUBTHRESHOLD_BAND: f64 = 0.8;
/// Design wavelength at which photoresponse parameters are defined (nm).
pub const DESIGN_WAVELENGTH_NM: f64 = 637.0;

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("invalid device parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("malformed stimulus: {0}")]
    MalformedStimulus(String),
    #[error("unknown device profile `{0}`")]
    UnknownProfile(String),
    #[error("empty sweep grid: {0}")]
    EmptyGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceKind {
    /// Ag/GeSe3/Ag behavior: LRS persists at zero bias in the dark.
    NonVolatile,
    /// Pt/GeSe3/Ag behavior: relaxes to HRS below the holding voltage.
    Volatile,
}

/// Orientation of the device relative to the drive. `Positive` raises the
/// switching threshold under light, `Negative` lowers it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

impl TryFrom<i8> for Polarity {
    type Error = String;

    fn try_from(value: i8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Polarity::Positive),
            -1 => Ok(Polarity::Negative),
            other => Err(format!("polarity_sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        match p {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

/// Calibrated phenomenological parameters of one cell. Units are SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub kind: DeviceKind,
    #[serde(rename = "polarity_sign")]
    pub polarity: Polarity,
    pub v_th_dark: f64,
    pub v_hold: f64,
    pub g_hrs: f64,
    pub g_lrs: f64,
    pub n_intermediate: u32,
    pub k_vth: f64,
    pub k_v0: f64,
    pub p_ref: f64,
    pub tau0: f64,
    pub v_c: f64,
    pub tau_relax: f64,
    pub p_volatile: f64,
    pub i_compliance: f64,
}

/// `k_vth` giving a 100% threshold shift at [`THRESHOLD_CALIBRATION_POWER`].
pub fn calibrated_k_vth(v_th_dark: f64, p_ref: f64) -> f64 {
    v_th_dark / (THRESHOLD_CALIBRATION_POWER / p_ref).ln_1p()
}

/// `k_v0` giving [`V0_CALIBRATION_VOLTAGE`] at [`V0_CALIBRATION_POWER`].
pub fn calibrated_k_v0(p_ref: f64) -> f64 {
    V0_CALIBRATION_VOLTAGE / (V0_CALIBRATION_POWER / p_ref).ln_1p()
}

pub const PROFILE_NONVOLATILE: &str = "ag-ag-nonvolatile";
pub const PROFILE_VOLATILE: &str = "pt-ag-volatile";

impl DeviceParams {
    /// Ag/GeSe3/Ag cell. The threshold sits above the 0.4 V reward pulse so
    /// that the pulse alone stays outside the partial-switching band.
    pub fn ag_ag_nonvolatile() -> Self {
        let p_ref = 1e-4;
        let v_th_dark = 0.6;
        DeviceParams {
            kind: DeviceKind::NonVolatile,
            polarity: Polarity::Positive,
            v_th_dark,
            v_hold: 0.05,
            g_hrs: 1e-7,
            g_lrs: 1e-4,
            n_intermediate: 5,
            k_vth: calibrated_k_vth(v_th_dark, p_ref),
            k_v0: calibrated_k_v0(p_ref),
            p_ref,
            tau0: 1e-3,
            v_c: 0.015,
            tau_relax: 1e-6,
            p_volatile: 1e-4,
            i_compliance: 1e-3,
        }
    }

    /// Pt/GeSe3/Ag cell.
    pub fn pt_ag_volatile() -> Self {
        let p_ref = 1e-4;
        let v_th_dark = 0.4;
        DeviceParams {
            kind: DeviceKind::Volatile,
            polarity: Polarity::Positive,
            v_th_dark,
            v_hold: 0.1,
            g_hrs: 1e-7,
            g_lrs: 1e-4,
            n_intermediate: 5,
            k_vth: calibrated_k_vth(v_th_dark, p_ref),
            k_v0: calibrated_k_v0(p_ref),
            p_ref,
            tau0: 1e-3,
            v_c: 0.05,
            tau_relax: 1e-6,
            p_volatile: 1e-4,
            i_compliance: 1e-3,
        }
    }

    pub fn profile(name: &str) -> Result<Self, DeviceError> {
        match name {
            PROFILE_NONVOLATILE => Ok(Self::ag_ag_nonvolatile()),
            PROFILE_VOLATILE => Ok(Self::pt_ag_volatile()),
            other => Err(DeviceError::UnknownProfile(other.to_string())),
        }
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = polarity;
        self
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        fn check(ok: bool, name: &'static str, reason: &str) -> Result<(), DeviceError> {
            if ok {
                Ok(())
            } else {
                Err(DeviceError::InvalidParam { name, reason: reason.to_string() })
            }
        }
        let finite = [
            ("v_th_dark", self.v_th_dark),
            ("v_hold", self.v_hold),
            ("g_hrs", self.g_hrs),
            ("g_lrs", self.g_lrs),
            ("k_vth", self.k_vth),
            ("k_v0", self.k_v0),
            ("p_ref", self.p_ref),
            ("tau0", self.tau0),
            ("v_c", self.v_c),
            ("tau_relax", self.tau_relax),
            ("p_volatile", self.p_volatile),
            ("i_compliance", self.i_compliance),
        ];
        for (name, value) in finite {
            check(value.is_finite(), name, "must be finite")?;
        }
        check(self.g_hrs > 0.0, "g_hrs", "must be > 0")?;
        check(self.g_lrs > self.g_hrs, "g_lrs", "must exceed g_hrs")?;
        check(self.v_hold >= 0.0, "v_hold", "must be >= 0")?;
        check(self.v_th_dark > self.v_hold, "v_th_dark", "must exceed v_hold")?;
        check(self.tau0 > 0.0, "tau0", "must be > 0")?;
        check(self.v_c > 0.0, "v_c", "must be > 0")?;
        check(self.p_ref > 0.0, "p_ref", "must be > 0")?;
        check(self.tau_relax > 0.0, "tau_relax", "must be > 0")?;
        check(self.n_intermediate >= 1, "n_intermediate", "must be >= 1")?;
        check(self.k_vth >= 0.0, "k_vth", "must be >= 0")?;
        check(self.k_v0 >= 0.0, "k_v0", "must be >= 0")?;
        check(self.p_volatile >= 0.0, "p_volatile", "must be >= 0")?;
        check(self.i_compliance > 0.0, "i_compliance", "must be > 0")?;
        Ok(())
    }

    fn log_power(&self, optical_power: f64) -> f64 {
        (optical_power / self.p_ref).ln_1p()
    }

    /// Switching threshold under illumination, clamped below at
    /// `0.05 * v_th_dark`.
    pub fn effective_threshold(&self, optical_power: f64) -> f64 {
        let shifted =
            self.v_th_dark + self.polarity.sign() * self.k_vth * self.log_power(optical_power);
        shifted.max(THRESHOLD_CLAMP_FRACTION * self.v_th_dark)
    }

    /// Photovoltaic offset V0: the bias at which the illuminated current is zero.
    pub fn open_circuit_voltage(&self, optical_power: f64) -> f64 {
        self.polarity.sign() * self.k_v0 * self.log_power(optical_power)
    }

    pub fn conductance_at(&self, step_index: u32) -> f64 {
        let frac = f64::from(step_index.min(self.n_intermediate)) / f64::from(self.n_intermediate);
        self.g_hrs + frac * (self.g_lrs - self.g_hrs)
    }

    /// All conductance levels of the staircase, HRS first.
    pub fn staircase(&self) -> Vec<f64> {
        (0..=self.n_intermediate).map(|i| self.conductance_at(i)).collect()
    }

    /// Linear photovoltaic I-V: `G * (V - V0(P))`, capped at the compliance current.
    pub fn current(&self, state: &DeviceState, voltage: f64, optical_power: f64) -> f64 {
        let g = self.conductance_at(state.step_index);
        (g * (voltage - self.open_circuit_voltage(optical_power)))
            .clamp(-self.i_compliance, self.i_compliance)
    }

    /// Mean switching latency `tau0 * exp(-delta_v / v_c)`.
    pub fn latency_mean(&self, delta_v: f64) -> f64 {
        self.tau0 * (-delta_v / self.v_c).exp()
    }

    /// One exponential latency draw at overdrive `delta_v` (may be negative).
    pub fn sample_latency<R: Rng + ?Sized>(&self, delta_v: f64, rng: &mut R) -> f64 {
        let mean = self.latency_mean(delta_v);
        if !mean.is_finite() {
            return f64::INFINITY;
        }
        let draw = Exp::new(1.0 / mean).map(|d| d.sample(rng)).unwrap_or(f64::INFINITY);
        if draw > 0.0 {
            draw
        } else {
            f64::MIN_POSITIVE
        }
    }

    /// Bias where the device current crosses zero, found by bisection on the
    /// I-V characteristic of `state`. Independent of the closed form
    /// [`DeviceParams::open_circuit_voltage`].
    pub fn solve_open_circuit_voltage(
        &self,
        state: &DeviceState,
        optical_power: f64,
        bracket: (f64, f64),
        tol: f64,
    ) -> Option<f64> {
        let f = |v: f64| self.current(state, v, optical_power);
        let (mut lo, mut hi) = bracket;
        let (mut f_lo, f_hi) = (f(lo), f(hi));
        if f_lo == 0.0 {
            return Some(lo);
        }
        if f_hi == 0.0 {
            return Some(hi);
        }
        if f_lo.signum() == f_hi.signum() {
            return None;
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let f_mid = f(mid);
            if f_mid == 0.0 {
                return Some(mid);
            }
            if f_mid.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Mutable switching state of one cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviceState {
    /// 0 = HRS, `n_intermediate` = LRS.
    pub step_index: u32,
    /// A full SET has completed.
    pub latched: bool,
    /// Remaining time-to-switch at the drive it was sampled under.
    pub pending_latency: Option<f64>,
    pending_drive: Option<(f64, Region)>,
    /// Contiguous time spent below the holding voltage.
    sub_hold_time: f64,
}

impl DeviceState {
    pub fn hrs() -> Self {
        Self::default()
    }

    pub fn lrs(params: &DeviceParams) -> Self {
        DeviceState { step_index: params.n_intermediate, latched: true, ..Self::default() }
    }

    pub fn conductance(&self, params: &DeviceParams) -> f64 {
        params.conductance_at(self.step_index)
    }

    fn clear_pending(&mut self) {
        self.pending_latency = None;
        self.pending_drive = None;
    }
}

/// Clears the state to HRS.
pub fn reset_device(_state: &DeviceState) -> DeviceState {
    DeviceState::hrs()
}

/// One piece of a piecewise-constant drive waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSample")]
pub struct StimulusSample {
    voltage: f64,
    optical_power: f64,
    duration: f64,
}

#[derive(Deserialize)]
struct RawSample {
    voltage: f64,
    optical_power: f64,
    duration: f64,
}

impl TryFrom<RawSample> for StimulusSample {
    type Error = DeviceError;

    fn try_from(raw: RawSample) -> Result<Self, Self::Error> {
        StimulusSample::new(raw.voltage, raw.optical_power, raw.duration)
    }
}

impl StimulusSample {
    pub fn new(voltage: f64, optical_power: f64, duration: f64) -> Result<Self, DeviceError> {
        if !voltage.is_finite() {
            return Err(DeviceError::MalformedStimulus(format!("voltage {voltage}")));
        }
        if !optical_power.is_finite() || optical_power < 0.0 {
            return Err(DeviceError::MalformedStimulus(format!("optical power {optical_power}")));
        }
        if !duration.is_finite() || duration <= 0.0 {
            return Err(DeviceError::MalformedStimulus(format!("duration {duration}")));
        }
        Ok(StimulusSample { voltage, optical_power, duration })
    }

    pub fn voltage(&self) -> f64 {
        self.voltage
    }

    pub fn optical_power(&self) -> f64 {
        self.optical_power
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Transition {
    Set,
    PartialSet,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cause {
    Electrical,
    Optical,
    Coincident,
    Relaxation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub time: f64,
    pub transition: Transition,
    pub cause: Cause,
}

impl fmt::Display for SwitchEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}", self.transition, self.cause)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Region {
    /// V at or above the effective threshold: one expiry completes the SET.
    Full,
    /// V in the sub-threshold band: one staircase step per expiry.
    Partial,
}

/// A cell with its parameters, state and a local clock.
#[derive(Debug, Clone)]
pub struct Device {
    params: DeviceParams,
    state: DeviceState,
    clock: f64,
    optical_gain: f64,
}

impl Device {
    pub fn new(params: DeviceParams) -> Result<Self, DeviceError> {
        params.validate()?;
        Ok(Device { params, state: DeviceState::hrs(), clock: 0.0, optical_gain: 1.0 })
    }

    pub fn with_state(mut self, state: DeviceState) -> Self {
        self.state = state;
        self
    }

    /// Scales incident power by `A(lambda) / A(design)` when the drive
    /// wavelength differs from the design wavelength. Unity by default.
    pub fn with_optical_gain(mut self, gain: f64) -> Self {
        self.optical_gain = gain;
        self
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn state(&self) -> &DeviceState {
        &self.state
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn conductance(&self) -> f64 {
        self.state.conductance(&self.params)
    }

    pub fn current(&self, voltage: f64, optical_power: f64) -> f64 {
        self.params.current(&self.state, voltage, optical_power * self.optical_gain)
    }

    pub fn reset(&mut self) {
        self.state = reset_device(&self.state);
    }

    /// Advances the state machine by `sample.duration()`.
    ///
    /// Rules, in order: SET path (full above threshold, staircase in the
    /// sub-threshold band), volatile relaxation below `v_hold`, and loss of
    /// non-volatility under light at near-zero bias. In the dark a
    /// non-volatile cell at zero bias keeps its state.
    pub fn step<R: Rng + ?Sized>(&mut self, sample: &StimulusSample, rng: &mut R) -> Vec<SwitchEvent> {
        let p = &self.params;
        let v = sample.voltage;
        let power = sample.optical_power * self.optical_gain;
        let duration = sample.duration;
        let start = self.clock;
        let mut events = Vec::new();

        let v_th = p.effective_threshold(power);
        let region = if v >= v_th {
            Some(Region::Full)
        } else if v >= SUBTHRESHOLD_BAND * v_th {
            Some(Region::Partial)
        } else {
            None
        };
        let cause = if power > 0.0 && v < p.v_th_dark { Cause::Coincident } else { Cause::Electrical };

        match region {
            Some(region) if !self.state.latched => {
                let delta_v = v - v_th;
                if self.state.pending_drive != Some((delta_v, region)) {
                    self.state.pending_latency = None;
                }
                let mut elapsed = 0.0;
                loop {
                    let remaining = match self.state.pending_latency.take() {
                        Some(r) => r,
                        None => p.sample_latency(delta_v, rng),
                    };
                    if remaining > duration - elapsed {
                        self.state.pending_latency = Some(remaining - (duration - elapsed));
                        self.state.pending_drive = Some((delta_v, region));
                        break;
                    }
                    elapsed += remaining;
                    let time = start + elapsed;
                    let next = match region {
                        Region::Full => p.n_intermediate,
                        Region::Partial => self.state.step_index + 1,
                    };
                    self.state.step_index = next.min(p.n_intermediate);
                    if self.state.step_index == p.n_intermediate {
                        self.state.latched = true;
                        self.state.clear_pending();
                        events.push(SwitchEvent { time, transition: Transition::Set, cause });
                        break;
                    }
                    events.push(SwitchEvent { time, transition: Transition::PartialSet, cause });
                }
            }
            _ => self.state.clear_pending(),
        }

        let last_event = events.last().map_or(start, |e| e.time);

        if p.kind == DeviceKind::Volatile {
            if v < p.v_hold {
                let before = self.state.sub_hold_time;
                self.state.sub_hold_time += duration;
                if self.state.sub_hold_time >= p.tau_relax && self.state.step_index > 0 {
                    let time = (start + (p.tau_relax - before).max(0.0)).max(last_event);
                    self.state = DeviceState { sub_hold_time: self.state.sub_hold_time, ..DeviceState::hrs() };
                    events.push(SwitchEvent { time, transition: Transition::Reset, cause: Cause::Relaxation });
                }
            } else {
                self.state.sub_hold_time = 0.0;
            }
        }

        if p.kind == DeviceKind::NonVolatile
            && self.state.latched
            && v.abs() < p.v_hold
            && power > p.p_volatile
        {
            let time = events.last().map_or(start, |e| e.time);
            self.state = DeviceState::hrs();
            events.push(SwitchEvent { time, transition: Transition::Reset, cause: Cause::Optical });
        }

        self.clock = start + duration;
        events
    }

    /// Runs a waveform and records one trace row per sample.
    pub fn run<R: Rng + ?Sized>(&mut self, waveform: &[StimulusSample], rng: &mut R) -> Trace {
        let mut trace = Trace::default();
        for sample in waveform {
            let events = self.step(sample, rng);
            trace.rows.push(TraceRow {
                time_s: self.clock,
                voltage_v: sample.voltage,
                optical_power_w: sample.optical_power,
                current_a: self.current(sample.voltage, sample.optical_power),
                conductance_s: self.conductance(),
                events,
            });
        }
        trace
    }
}

/// Piecewise-constant drive signal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Waveform {
    pub samples: Vec<StimulusSample>,
}

impl Waveform {
    /// Holds `voltage` / `optical_power` for `duration`, split into `dt` samples.
    pub fn hold(voltage: f64, optical_power: f64, duration: f64, dt: f64) -> Result<Self, DeviceError> {
        let mut w = Waveform::default();
        w.push_hold(voltage, optical_power, duration, dt)?;
        Ok(w)
    }

    pub fn push_hold(
        &mut self,
        voltage: f64,
        optical_power: f64,
        duration: f64,
        dt: f64,
    ) -> Result<&mut Self, DeviceError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DeviceError::MalformedStimulus(format!("time step {dt}")));
        }
        let n = (duration / dt).round().max(1.0) as usize;
        let piece = duration / n as f64;
        let sample = StimulusSample::new(voltage, optical_power, piece)?;
        self.samples.extend(std::iter::repeat_n(sample, n));
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time_s: f64,
    pub voltage_v: f64,
    pub optical_power_w: f64,
    pub current_a: f64,
    pub conductance_s: f64,
    pub events: Vec<SwitchEvent>,
}

impl TraceRow {
    pub fn event_label(&self) -> String {
        self.events.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
    }
}

/// Time-indexed record of a device run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: [&str; 6] =
    ["time_s", "voltage_V", "optical_power_W", "current_A", "conductance_S", "event"];

impl Trace {
    pub fn events(&self) -> impl Iterator<Item = &SwitchEvent> {
        self.rows.iter().flat_map(|r| r.events.iter())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                format!("{:e}", r.time_s),
                format!("{:e}", r.voltage_v),
                format!("{:e}", r.optical_power_w),
                format!("{:e}", r.current_a),
                format!("{:e}", r.conductance_s),
                r.event_label(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trace CSV for several units, with a leading `unit_id` column.
pub fn write_unit_traces<W: std::io::Write>(units: &[(String, &Trace)], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["unit_id"];
    header.extend(TRACE_HEADER);
    w.write_record(&header)?;
    for (unit, trace) in units {
        for r in &trace.rows {
            w.write_record([
                unit.clone(),
                format!("{:e}", r.time_s),
                format!("{:e}", r.voltage_v),
                format!("{:e}", r.optical_power_w),
                format!("{:e}", r.current_a),
                format!("{:e}", r.conductance_s),
                r.event_label(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Monotone sweep grid from `start` to `stop` (inclusive) in steps of `step`.
pub fn sweep_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, DeviceError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 {
        return Err(DeviceError::EmptyGrid(format!("start={start} stop={stop} step={step}")));
    }
    let n = ((stop - start).abs() / step + 1e-9).floor() as usize;
    let dir = if stop >= start { 1.0 } else { -1.0 };
    Ok((0..=n).map(|i| start + dir * step * i as f64).collect())
}

/// Up-and-back sweep `start -> peak -> start`, without repeating the peak.
pub fn round_trip_grid(start: f64, peak: f64, step: f64) -> Result<Vec<f64>, DeviceError> {
    let mut up = sweep_grid(start, peak, step)?;
    let down: Vec<f64> = up.iter().rev().skip(1).copied().collect();
    up.extend(down);
    Ok(up)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvPoint {
    pub time_s: f64,
    pub voltage: f64,
    pub current: f64,
    pub conductance: f64,
    pub events: Vec<SwitchEvent>,
}

/// Quasi-static I-V sweep: the device dwells `dwell` seconds at each grid
/// voltage and the current is read at the end of the dwell.
pub fn sweep_iv<R: Rng + ?Sized>(
    device: &mut Device,
    voltages: &[f64],
    optical_power: f64,
    dwell: f64,
    rng: &mut R,
) -> Result<Vec<IvPoint>, DeviceError> {
    if voltages.is_empty() {
        return Err(DeviceError::EmptyGrid("no sweep points".into()));
    }
    voltages
        .iter()
        .map(|&v| {
            let sample = StimulusSample::new(v, optical_power, dwell)?;
            let events = device.step(&sample, rng);
            Ok(IvPoint {
                time_s: device.clock(),
                voltage: v,
                current: device.current(v, optical_power),
                conductance: device.conductance(),
                events,
            })
        })
        .collect()
}

/// Trace rows for an I-V sweep, in the shared trace CSV layout.
pub fn iv_trace(points: &[IvPoint], optical_power: f64) -> Trace {
    Trace {
        rows: points
            .iter()
            .map(|p| TraceRow {
                time_s: p.time_s,
                voltage_v: p.voltage,
                optical_power_w: optical_power,
                current_a: p.current,
                conductance_s: p.conductance,
                events: p.events.clone(),
            })
            .collect(),
    }
}

/// Linear interpolation of the first sign change of the current along the
/// sweep, or an exact zero if one is sampled.
pub fn zero_crossing(points: &[IvPoint]) -> Option<f64> {
    if let Some(p) = points.iter().find(|p| p.current == 0.0) {
        return Some(p.voltage);
    }
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.current.signum() != b.current.signum() {
            let frac = a.current / (a.current - b.current);
            Some(a.voltage + frac * (b.voltage - a.voltage))
        } else {
            None
        }
    })
}
