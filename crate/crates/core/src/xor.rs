//! Single-neuron XOR from two shunting dendrites.

use rayon::prelude::*;
use serde::Serialize;

use crate::neuro::DendriticNeuron;
use crate::rng::seeded;

pub const INPUT_PAIRS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XorRow {
    pub x: u8,
    pub y: u8,
    #[serde(rename = "i_d1_A")]
    pub i_d1: f64,
    #[serde(rename = "i_d2_A")]
    pub i_d2: f64,
    #[serde(rename = "i_sum_A")]
    pub i_sum: f64,
    pub output: u8,
}

/// Truth table from one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct XorReport {
    pub seed: u64,
    pub rows: [XorRow; 4],
    pub soma_threshold: f64,
}

impl XorReport {
    pub fn is_xor(&self) -> bool {
        self.rows.iter().all(|r| r.output == r.x ^ r.y)
    }

    /// Smallest distance between a summed current and the soma threshold.
    pub fn noise_margin(&self) -> f64 {
        self.rows.iter().map(|r| (r.i_sum - self.soma_threshold).abs()).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XorSummary {
    pub reports: Vec<XorReport>,
    pub passed: usize,
    pub min_noise_margin: f64,
}

impl XorSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.reports.len()
    }
}

/// Evaluates all four input pairs once, with device noise from `seed`.
pub fn evaluate_seed(neuron: &DendriticNeuron, seed: u64) -> XorReport {
    let mut n = neuron.clone();
    let mut rng = seeded(seed);
    let rows = INPUT_PAIRS.map(|(x, y)| {
        let r = n.evaluate(x, y, &mut rng);
        XorRow { x: x.into(), y: y.into(), i_d1: r.i_d1, i_d2: r.i_d2, i_sum: r.i_sum, output: r.output.into() }
    });
    XorReport { seed, rows, soma_threshold: n.soma_threshold() }
}

/// Truth tables over `seeds`, evaluated in parallel; order follows `seeds`.
/// `None` for an empty seed list.
pub fn run_xor(neuron: &DendriticNeuron, seeds: &[u64]) -> Option<XorSummary> {
    if seeds.is_empty() {
        return None;
    }
    let reports: Vec<XorReport> = seeds.par_iter().map(|&s| evaluate_seed(neuron, s)).collect();
    let passed = reports.iter().filter(|r| r.is_xor()).count();
    let min_noise_margin = reports.iter().map(XorReport::noise_margin).fold(f64::INFINITY, f64::min);
    Some(XorSummary { reports, passed, min_noise_margin })
}

/// Summed soma current over the binary input square, with the threshold plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanePoint {
    pub x: u8,
    pub y: u8,
    #[serde(rename = "i_sum_A")]
    pub i_sum: f64,
    #[serde(rename = "threshold_A")]
    pub threshold: f64,
}

pub fn threshold_plane_data(neuron: &DendriticNeuron, seed: u64) -> Vec<PlanePoint> {
    let report = evaluate_seed(neuron, seed);
    report
        .rows
        .iter()
        .map(|r| PlanePoint { x: r.x, y: r.y, i_sum: r.i_sum, threshold: report.soma_threshold })
        .collect()
}

pub fn write_truth_table<W: std::io::Write>(report: &XorReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_plane<W: std::io::Write>(points: &[PlanePoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
