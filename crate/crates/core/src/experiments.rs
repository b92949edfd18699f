//! Experiment runners behind the CLI. Each writes CSV artifacts into an
//! output directory plus a `manifest.json` with SHA-256 checksums.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Config, ConfigError, SynapseBackend};
use crate::device::{
    iv_trace, round_trip_grid, sweep_iv, write_unit_traces, zero_crossing, Device, DeviceError, Polarity,
};
use crate::maze::{
    greedy_action, greedy_path, train, write_success_curve, write_trial_log, GreedyPath, MazeError,
    SynapseArray, TrainingReport,
};
use crate::neuro::{DendriticNeuron, NeuroError, PlasticSynapse, ShuntingDendrite};
use crate::optics::{
    pick_design, thickness_scan, CavityTemplate, LayerStack, MaterialTable, Materials, OpticsError,
};
use crate::rng::{stream, DEVICE_STREAM, POLICY_STREAM};
use crate::xor::{run_xor, threshold_plane_data, write_plane, write_truth_table};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Neuro(#[from] NeuroError),
    #[error(transparent)]
    Maze(#[from] MazeError),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// Configuration problems map to exit status 2, everything else to 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    IvSweep,
    LatencyStats,
    CavityDesign,
    MazeTrain,
    Xor,
}

impl Experiment {
    pub const ALL: [Experiment; 5] =
        [Experiment::IvSweep, Experiment::LatencyStats, Experiment::CavityDesign, Experiment::MazeTrain, Experiment::Xor];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::IvSweep => "iv_sweep",
            Experiment::LatencyStats => "latency_stats",
            Experiment::CavityDesign => "cavity_design",
            Experiment::MazeTrain => "maze_train",
            Experiment::Xor => "xor",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    /// Accepts `iv_sweep` and `iv-sweep` spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == norm)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: Experiment,
    pub seed: u64,
    pub config: Value,
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
    /// Seconds since the Unix epoch; not covered by any checksum.
    pub timestamp: u64,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, ExperimentError> {
        std::fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;
        Ok(Outputs { dir: dir.to_path_buf(), files: vec![] })
    }

    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(BufWriter<File>) -> Result<(), ExperimentError>,
    ) -> Result<(), ExperimentError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|source| io_err(&path, source))?;
        f(BufWriter::new(file))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn artifacts(&self) -> Result<Vec<Artifact>, ExperimentError> {
        self.files
            .iter()
            .map(|name| {
                let path = self.dir.join(name);
                let bytes = std::fs::read(&path).map_err(|source| io_err(&path, source))?;
                Ok(Artifact { file: name.clone(), sha256: hex::encode(Sha256::digest(&bytes)) })
            })
            .collect()
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io { path: path.display().to_string(), source }
}

/// Runs `experiment` with `config` and writes artifacts plus the manifest.
pub fn run_experiment(experiment: Experiment, config: &Config, out_dir: &Path) -> Result<Manifest, ExperimentError> {
    config.validate()?;
    let mut out = Outputs::new(out_dir)?;
    let summary = match experiment {
        Experiment::IvSweep => iv_sweep(config, &mut out)?,
        Experiment::LatencyStats => latency_stats(config, &mut out)?,
        Experiment::CavityDesign => cavity_design(config, &mut out)?,
        Experiment::MazeTrain => maze_train(config, &mut out)?,
        Experiment::Xor => xor(config, &mut out)?,
    };
    let manifest = Manifest {
        experiment,
        seed: config.seed,
        config: serde_json::to_value(config)?,
        artifacts: out.artifacts()?,
        summary,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let path = out_dir.join(MANIFEST);
    let file = File::create(&path).map_err(|source| io_err(&path, source))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    Ok(manifest)
}

fn iv_sweep(config: &Config, out: &mut Outputs) -> Result<Value, ExperimentError> {
    let c = &config.iv_sweep;
    let params = config.profile(&c.profile)?.clone();
    let grid = round_trip_grid(c.v_start, c.v_peak, c.v_step)?;
    let mut summary = serde_json::Map::new();
    for (i, (label, power)) in [("dark", 0.0), ("light", c.power)].into_iter().enumerate() {
        let mut device = Device::new(params.clone())?;
        let mut rng = stream(config.seed, DEVICE_STREAM + i as u64);
        let points = sweep_iv(&mut device, &grid, power, c.dwell, &mut rng)?;
        out.write(&format!("iv_{label}.csv"), |w| Ok(iv_trace(&points, power).write_csv(w)?))?;
        let set_v = points
            .iter()
            .find(|p| p.events.iter().any(|e| e.transition == crate::device::Transition::Set))
            .map(|p| p.voltage);
        summary.insert(
            label.into(),
            json!({
                "optical_power_W": power,
                "zero_crossing_V": zero_crossing(&points),
                "set_voltage_V": set_v,
                "predicted_v0_V": params.open_circuit_voltage(power),
            }),
        );
    }
    Ok(Value::Object(summary))
}

fn latency_stats(config: &Config, out: &mut Outputs) -> Result<Value, ExperimentError> {
    let c = &config.latency_stats;
    let params = config.profile(&c.profile)?.clone();
    let mut rows = Vec::new();
    let mut hist = Vec::new();
    for (i, &dv) in c.delta_v.iter().enumerate() {
        let mut rng = stream(config.seed, DEVICE_STREAM + i as u64);
        let samples: Vec<f64> = (0..c.samples).map(|_| params.sample_latency(dv, &mut rng)).collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let expected = params.latency_mean(dv);
        rows.push(json!({"delta_v_V": dv, "n": samples.len(), "mean_s": mean, "expected_mean_s": expected, "std_s": var.sqrt()}));
        // Equal-probability bins of the model distribution; each holds n/bins in expectation.
        let bins = c.histogram_bins;
        let edge = |k: usize| if k == bins { f64::INFINITY } else { -expected * (1.0 - k as f64 / bins as f64).ln() };
        let mut counts = vec![0usize; bins];
        for s in &samples {
            let k = ((1.0 - (-s / expected).exp()) * bins as f64).floor() as usize;
            counts[k.min(bins - 1)] += 1;
        }
        for (k, count) in counts.into_iter().enumerate() {
            hist.push((dv, edge(k), edge(k + 1), count, n / bins as f64));
        }
    }
    out.write("latency_stats.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["delta_v_V", "n", "mean_s", "expected_mean_s", "std_s"])?;
        for r in &rows {
            w.write_record([
                format!("{:e}", r["delta_v_V"].as_f64().unwrap_or(f64::NAN)),
                r["n"].to_string(),
                format!("{:e}", r["mean_s"].as_f64().unwrap_or(f64::NAN)),
                format!("{:e}", r["expected_mean_s"].as_f64().unwrap_or(f64::NAN)),
                format!("{:e}", r["std_s"].as_f64().unwrap_or(f64::NAN)),
            ])?;
        }
        w.flush().map_err(|e| io_err(Path::new("latency_stats.csv"), e))
    })?;
    out.write("latency_histogram.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["delta_v_V", "bin_lo_s", "bin_hi_s", "count", "expected_count"])?;
        for (dv, lo, hi, count, exp) in &hist {
            w.write_record([format!("{dv:e}"), format!("{lo:e}"), format!("{hi:e}"), count.to_string(), format!("{exp:e}")])?;
        }
        w.flush().map_err(|e| io_err(Path::new("latency_histogram.csv"), e))
    })?;
    Ok(json!({ "profile": c.profile, "rows": rows }))
}

/// Bundled tables plus any extra tables named in the cavity config.
pub fn materials_for(config: &Config) -> Result<Materials, ExperimentError> {
    let mut m = Materials::bundled();
    for (id, path) in &config.cavity_design.materials {
        m.insert(id, MaterialTable::load(Path::new(path))?);
    }
    Ok(m)
}

pub fn cavity_template(config: &Config) -> CavityTemplate {
    let c = &config.cavity_design;
    CavityTemplate {
        stack: LayerStack::ag_gese3_ag(c.top_nm, 0.0, c.bottom_nm),
        cavity_layer: 1,
        window_min_nm: c.window_min_nm,
        window_max_nm: c.window_max_nm,
        window_points: c.window_points,
    }
}

fn cavity_design(config: &Config, out: &mut Outputs) -> Result<Value, ExperimentError> {
    let c = &config.cavity_design;
    let materials = materials_for(config)?;
    let template = cavity_template(config);
    let scan = thickness_scan(&template, c.d_min_nm, c.d_max_nm, &materials)?;
    let design = pick_design(&scan, c.target_nm)?;
    out.write("cavity_scan.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["d_nm", "peak_wavelength_nm", "peak_A"])?;
        for s in &scan {
            w.write_record([
                format!("{}", s.thickness_nm),
                format!("{}", s.peak_wavelength_nm),
                format!("{:e}", s.peak_absorption),
            ])?;
        }
        w.flush().map_err(|e| io_err(Path::new("cavity_scan.csv"), e))
    })?;
    let mut spectra = Vec::new();
    for &d in &c.spectra_nm {
        spectra.push((d, template.spectrum(d, &materials)?));
    }
    out.write("cavity_spectra.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["d_nm", "wavelength_nm", "R", "T", "A"])?;
        for (d, s) in &spectra {
            for p in &s.points {
                w.write_record([
                    format!("{d}"),
                    format!("{}", p.wavelength_nm),
                    format!("{:e}", p.r),
                    format!("{:e}", p.t),
                    format!("{:e}", p.a),
                ])?;
            }
        }
        w.flush().map_err(|e| io_err(Path::new("cavity_spectra.csv"), e))
    })?;
    let peaks: Vec<Value> = spectra
        .iter()
        .map(|(d, s)| {
            let (wl, a) = crate::optics::peak_absorption(s).unwrap_or((f64::NAN, f64::NAN));
            json!({"d_nm": d, "peak_wavelength_nm": wl, "peak_A": a})
        })
        .collect();
    Ok(json!({
        "target_nm": c.target_nm,
        "d_nm": design.thickness_nm,
        "peak_wavelength_nm": design.peak_wavelength_nm,
        "A_peak": design.peak_absorption,
        "spectra_peaks": peaks,
    }))
}

/// Trains on the configured maze with the configured synapse backend.
pub fn train_maze(config: &Config, seed: u64) -> Result<TrainingReport, ExperimentError> {
    let c = &config.maze_train;
    let params = config.profile(&config.synapse.profile)?.clone().with_polarity(Polarity::Negative);
    let mut policy = stream(seed, POLICY_STREAM);
    let mut device = stream(seed, DEVICE_STREAM);
    fn go<S: PlasticSynapse>(
        c: &crate::config::MazeConfig,
        mut arr: SynapseArray<S>,
        policy: &mut crate::rng::SimRng,
        device: &mut crate::rng::SimRng,
    ) -> Result<TrainingReport, MazeError> {
        train(&c.layout, &mut arr, c.trials, policy, device, &c.epsilon)
    }
    let report = match c.backend {
        SynapseBackend::Device => go(
            c,
            SynapseArray::devices(&c.layout, &params, &config.synapse.protocol)?,
            &mut policy,
            &mut device,
        )?,
        SynapseBackend::Boolean => go(
            c,
            SynapseArray::boolean(&c.layout, params.g_hrs, params.g_lrs),
            &mut policy,
            &mut device,
        )?,
    };
    Ok(report)
}

fn maze_train(config: &Config, out: &mut Outputs) -> Result<Value, ExperimentError> {
    let c = &config.maze_train;
    let report = train_maze(config, config.seed)?;
    let path: GreedyPath = greedy_path(&report.qtable, &c.layout);
    out.write("qtable.csv", |w| Ok(report.qtable.write_csv(w)?))?;
    out.write("trials.csv", |w| Ok(write_trial_log(&report.trials, w)?))?;
    out.write("success_curve.csv", |w| Ok(write_success_curve(&report.trials, c.success_window, w)?))?;
    out.write("greedy_path.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["step", "place_row", "place_col", "action", "outcome"])?;
        for (i, s) in path.trajectory.iter().enumerate() {
            w.write_record([
                i.to_string(),
                s.place.row.to_string(),
                s.place.col.to_string(),
                s.action.to_string(),
                format!("{:?}", s.outcome),
            ])?;
        }
        w.flush().map_err(|e| io_err(Path::new("greedy_path.csv"), e))
    })?;
    let rewarded = report.trials.iter().filter(|t| t.outcome == crate::maze::Outcome::Cheese).count();
    Ok(json!({
        "backend": c.backend,
        "trials": c.trials,
        "rewarded_trials": rewarded,
        "greedy_end": path.end,
        "greedy_steps": path.trajectory.len(),
        "start_action": greedy_action(&report.qtable, &c.layout, c.layout.start).map(|a| a.to_string()),
    }))
}

pub fn neuron_for(config: &Config) -> Result<DendriticNeuron, ExperimentError> {
    let c = &config.xor;
    let params = config.profile(&c.profile)?.clone();
    let d = ShuntingDendrite::new(params, c.dendrite.clone())?;
    Ok(DendriticNeuron::new(d.clone(), d, c.soma_threshold)?)
}

fn xor(config: &Config, out: &mut Outputs) -> Result<Value, ExperimentError> {
    let c = &config.xor;
    let neuron = neuron_for(config)?;
    let seeds: Vec<u64> = (0..c.seeds).map(|i| config.seed.wrapping_add(i)).collect();
    let summary = run_xor(&neuron, &seeds).ok_or_else(|| ExperimentError::Failed("no seeds".into()))?;
    let first = &summary.reports[0];
    out.write("xor_truth_table.csv", |w| Ok(write_truth_table(first, w)?))?;
    out.write("xor_seeds.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["seed", "is_xor", "noise_margin_A"])?;
        for r in &summary.reports {
            w.write_record([r.seed.to_string(), u8::from(r.is_xor()).to_string(), format!("{:e}", r.noise_margin())])?;
        }
        w.flush().map_err(|e| io_err(Path::new("xor_seeds.csv"), e))
    })?;
    out.write("xor_plane.csv", |w| Ok(write_plane(&threshold_plane_data(&neuron, config.seed), w)?))?;
    // Device event log of both dendrites for the first seed.
    let mut n = neuron.clone();
    let mut rng = crate::rng::seeded(config.seed);
    let mut traces = Vec::new();
    for (x, y) in crate::xor::INPUT_PAIRS {
        traces.push((format!("D1[x={},y={}]", u8::from(x), u8::from(y)), n.d1.response_traced(x, y, &mut rng).trace));
        traces.push((format!("D2[x={},y={}]", u8::from(x), u8::from(y)), n.d2.response_traced(y, x, &mut rng).trace));
    }
    let units: Vec<(String, &crate::device::Trace)> = traces.iter().map(|(u, t)| (u.clone(), t)).collect();
    out.write("dendrite_events.csv", |w| Ok(write_unit_traces(&units, w)?))?;
    Ok(json!({
        "seeds": c.seeds,
        "passed": summary.passed,
        "min_noise_margin_A": summary.min_noise_margin,
        "soma_threshold_A": neuron.soma_threshold(),
    }))
}
