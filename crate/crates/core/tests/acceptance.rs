//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always print; exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{airy_single_layer, eligibility_oracle, ks_critical, ks_exponential, Op};
use optomem::device::{
    Cause, Device, DeviceParams, DeviceState, Polarity, StimulusSample, Transition,
};
use optomem::maze::{greedy_action, greedy_path, train, Action, EpsilonSchedule, MazeSpec, SynapseArray};
use optomem::neuro::{DendriticNeuron, PlasticSynapse, ShuntingDendrite, ThreeFactorSynapse};
use optomem::optics::{
    design_thickness, peak_absorption, stack_response, CavityTemplate, Layer, LayerStack, MaterialTable,
    Materials, DEFAULT_TOP_AG_NM,
};
use optomem::rng::{seeded, stream, DEVICE_STREAM, POLICY_STREAM};
use optomem::xor::run_xor;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c1_photovoltaic() -> Outcome {
    let p = DeviceParams::ag_ag_nonvolatile();
    let lrs = DeviceState::lrs(&p);
    let v0 = p.solve_open_circuit_voltage(&lrs, 1e-3, (-1.0, 1.0), 1e-12).unwrap_or(f64::NAN);
    let v0_dark = p.solve_open_circuit_voltage(&lrs, 0.0, (-1.0, 1.0), 1e-12).unwrap_or(f64::NAN);
    let pass = (v0 - 0.455).abs() <= 1e-3 && v0_dark == 0.0 && p.open_circuit_voltage(0.0) == 0.0;
    check(pass, format!("V0(1 mW) = {:.4} mV, V0(0) = {v0_dark}", v0 * 1e3))
}

fn c2_threshold_shift() -> Outcome {
    let p = DeviceParams::pt_ag_volatile();
    let ratio = p.effective_threshold(0.5e-3) / p.effective_threshold(0.0);
    let n = p.clone().with_polarity(Polarity::Negative);
    let flipped = n.effective_threshold(0.2e-3) < n.v_th_dark && n.effective_threshold(0.0) == n.v_th_dark;
    let clamp = (n.effective_threshold(0.5e-3) - 0.02).abs() < 1e-12;
    check((ratio - 2.0).abs() <= 0.01 && flipped && clamp, format!("ratio = {ratio:.6}, -1 lowers = {flipped}, clamp = {clamp}"))
}

fn c3_coincidence() -> Outcome {
    let runs = 10_000u64;
    let (mut pulse_only, mut light_only, mut both) = (0, 0, 0);
    for seed in 0..runs {
        let mut rng = seeded(seed);
        let mut s = ThreeFactorSynapse::with_defaults();
        s.hold(&mut rng);
        if s.apply_reward(&mut rng) {
            pulse_only += 1;
        }
        let mut s = ThreeFactorSynapse::with_defaults();
        for _ in 0..10 {
            s.raise_eligibility();
            s.hold(&mut rng);
        }
        if s.is_potentiated() {
            light_only += 1;
        }
        let mut s = ThreeFactorSynapse::with_defaults();
        s.raise_eligibility();
        s.hold(&mut rng);
        if s.apply_reward(&mut rng) && s.conductance() == s.device().params().g_lrs {
            both += 1;
        }
    }
    let rate = both as f64 / runs as f64;
    check(
        pulse_only == 0 && light_only == 0 && rate >= 0.999,
        format!("pulse-only {pulse_only}, light-only {light_only}, light+pulse rate {rate:.4}"),
    )
}

fn c4_shunting() -> Outcome {
    let runs = 10_000u64;
    let (mut dark_set, mut light_set, mut light_only_change) = (0, 0, 0);
    for seed in 0..runs {
        let mut rng = seeded(seed);
        let mut d = ShuntingDendrite::with_defaults();
        let g_hrs = d.device().params().g_hrs;
        let sets = |r: &optomem::neuro::DendriteReading| {
            r.trace.events().any(|e| e.transition == Transition::Set)
        };
        if sets(&d.response_traced(true, false, &mut rng)) {
            dark_set += 1;
        }
        if sets(&d.response_traced(true, true, &mut rng)) {
            light_set += 1;
        }
        let r = d.response_traced(false, true, &mut rng);
        if r.trace.rows.iter().any(|row| row.conductance_s != g_hrs) || r.trace.events().next().is_some() {
            light_only_change += 1;
        }
    }
    let rate = dark_set as f64 / runs as f64;
    check(
        rate >= 0.999 && light_set == 0 && light_only_change == 0,
        format!("dark pulse rate {rate:.4}, lit pulse sets {light_set}, light-only changes {light_only_change}"),
    )
}

fn c5_xor() -> Outcome {
    let n = DendriticNeuron::with_defaults();
    let seeds: Vec<u64> = (0..100).collect();
    let s = run_xor(&n, &seeds).expect("seeds");
    check(
        s.passed == 100 && s.min_noise_margin > 0.0,
        format!("{}/100 seeds, min noise margin {:.3e} A", s.passed, s.min_noise_margin),
    )
}

fn c6_maze() -> Outcome {
    let maze = MazeSpec::default();
    let schedule = EpsilonSchedule::default();
    let params = DeviceParams::ag_ag_nonvolatile().with_polarity(Polarity::Negative);
    let protocol = optomem::neuro::SynapseProtocol::default();
    let (mut cheese, mut north, mut identical) = (0, 0, 0);
    for seed in 0..100u64 {
        let mut dev = SynapseArray::devices(&maze, &params, &protocol).expect("array");
        let rd = train(&maze, &mut dev, 200, &mut stream(seed, POLICY_STREAM), &mut stream(seed, DEVICE_STREAM), &schedule)
            .expect("train");
        let mut ideal = SynapseArray::boolean(&maze, params.g_hrs, params.g_lrs);
        let rb = train(&maze, &mut ideal, 200, &mut stream(seed, POLICY_STREAM), &mut stream(seed, DEVICE_STREAM), &schedule)
            .expect("train");
        let path = greedy_path(&rd.qtable, &maze);
        if path.reaches_cheese() && path.trajectory.iter().all(|s| s.outcome != optomem::maze::Outcome::Trap) {
            cheese += 1;
        }
        if greedy_action(&rd.qtable, &maze, maze.start) == Some(Action::N) {
            north += 1;
        }
        let per_trial = rd.results.iter().zip(&rb.results).all(|(a, b)| a.potentiated == b.potentiated);
        let set_d: BTreeSet<_> = dev.potentiated().into_iter().collect();
        let set_b: BTreeSet<_> = ideal.potentiated().into_iter().collect();
        if per_trial && set_d == set_b {
            identical += 1;
        }
    }
    check(
        cheese >= 95 && north >= 95 && identical == 100,
        format!("cheese {cheese}/100, center->N {north}/100, device==oracle {identical}/100"),
    )
}

fn c7_three_factor() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agree = 0;
    let n = 10_000;
    for i in 0..n {
        let len = rng.random_range(1..=20);
        let ops: Vec<Op> = (0..len)
            .map(|_| match rng.random_range(0..3) {
                0 => Op::Flag,
                1 => Op::Tick,
                _ => Op::Reward,
            })
            .collect();
        let mut dev_rng = seeded(i);
        let mut s = ThreeFactorSynapse::with_defaults();
        for op in &ops {
            match op {
                Op::Flag => s.raise_eligibility(),
                Op::Tick => {
                    s.hold(&mut dev_rng);
                    s.tick_eligibility();
                }
                Op::Reward => {
                    s.apply_reward(&mut dev_rng);
                }
            }
        }
        if s.is_potentiated() == eligibility_oracle(&ops) {
            agree += 1;
        }
    }
    check(agree == n, format!("{agree}/{n} schedules agree"))
}

fn c8_tmm() -> Outcome {
    let mats = Materials::bundled();
    let ids = ["Ag", "Pt", "Ta", "SiO2", "GeSe3", "air"];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_sum: f64 = 0.0;
    for _ in 0..10_000 {
        let layers = (0..rng.random_range(1..=6))
            .map(|_| Layer::new(ids[rng.random_range(0..ids.len())], rng.random_range(5.0..300.0)))
            .collect();
        let stack = LayerStack { ambient: "air".into(), layers, substrate: "SiO2".into() };
        let r = stack_response(&stack, rng.random_range(400.0..1100.0), &mats).expect("in range");
        worst_sum = worst_sum.max((r.r + r.t + r.a - 1.0).abs());
    }
    let mut lossless = Materials::default();
    for (i, n) in [1.0, 1.38, 1.5, 2.0, 2.35, 3.5].into_iter().enumerate() {
        lossless.insert(&format!("m{i}"), MaterialTable::constant(&format!("m{i}"), n, 0.0).unwrap());
    }
    let mut worst_lossless: f64 = 0.0;
    let mut worst_airy: f64 = 0.0;
    for _ in 0..10_000 {
        let layers = (0..rng.random_range(1..=6))
            .map(|_| Layer::new(&format!("m{}", rng.random_range(0..6)), rng.random_range(5.0..300.0)))
            .collect();
        let stack = LayerStack { ambient: "m0".into(), layers, substrate: format!("m{}", rng.random_range(0..6)) };
        let r = stack_response(&stack, rng.random_range(400.0..1100.0), &lossless).expect("in range");
        worst_lossless = worst_lossless.max(r.a.abs());
    }
    for i in 0..2_000 {
        let wl = 400.0 + 0.35 * i as f64;
        let d = 5.0 + (i % 300) as f64;
        let (n1, n2) = (rng.random_range(1.2..4.0), rng.random_range(1.0..2.5));
        let stack = LayerStack {
            ambient: "air".into(),
            layers: vec![Layer::new("film", d)],
            substrate: "sub".into(),
        };
        let mut m = Materials::bundled();
        m.insert("film", MaterialTable::constant("film", n1, 0.0).unwrap());
        m.insert("sub", MaterialTable::constant("sub", n2, 0.0).unwrap());
        let got = stack_response(&stack, wl, &m).unwrap();
        let c = |x: f64| Complex64::new(x, 0.0);
        let (r, t) = airy_single_layer(c(1.0), c(n1), c(n2), d, wl);
        worst_airy = worst_airy.max((got.r - r).abs()).max((got.t - t).abs());
    }
    check(
        worst_sum < 1e-9 && worst_lossless < 1e-9 && worst_airy < 1e-10,
        format!("|R+T+A-1| <= {worst_sum:.1e}, lossless A <= {worst_lossless:.1e}, Airy dev {worst_airy:.1e}"),
    )
}

fn c9_cavity() -> Outcome {
    let mats = Materials::bundled();
    let template = CavityTemplate::ag_gese3_ag(DEFAULT_TOP_AG_NM);
    let bands = [(28.0, 430.0, 500.0), (51.0, 495.0, 580.0), (78.0, 600.0, 750.0), (103.0, 750.0, 1100.0)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (d, lo, hi) in bands {
        let (wl, a) = peak_absorption(&template.spectrum(d, &mats).expect("spectrum")).expect("peak");
        pass &= (lo..=hi).contains(&wl);
        detail.push(format!("{d}nm->{wl}nm(A={a:.3})"));
    }
    for (_, lo, hi) in bands {
        let center = 0.5 * (lo + hi);
        let design = design_thickness(&template, center, 5.0, 300.0, &mats).expect("design");
        pass &= design.peak_absorption >= 0.9 && (lo..=hi).contains(&design.peak_wavelength_nm);
        detail.push(format!("{center}->d={}(A={:.3})", design.thickness_nm, design.peak_absorption));
    }
    check(pass, detail.join(" "))
}

fn c10_latency() -> Outcome {
    let p = DeviceParams::pt_ag_volatile();
    let dv = 0.05;
    let mut rng = seeded(10);
    let samples: Vec<f64> = (0..100_000).map(|_| p.sample_latency(dv, &mut rng)).collect();
    let expected = p.tau0 * (-dv / p.v_c).exp();
    let d = ks_exponential(&samples, expected);
    let crit = ks_critical(samples.len(), 0.01);
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let rel = (mean / expected - 1.0).abs();
    let means: Vec<f64> = [-0.05, 0.0, 0.05, 0.1]
        .iter()
        .map(|&v| {
            let mut r = seeded(11);
            (0..100_000).map(|_| p.sample_latency(v, &mut r)).sum::<f64>() / 100_000.0
        })
        .collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    check(
        d < crit && rel < 0.02 && decreasing,
        format!("KS D = {d:.5} (crit {crit:.5}), mean rel err {:.3}%, decreasing = {decreasing}", rel * 100.0),
    )
}

fn c11_volatility() -> Outcome {
    let vol = DeviceParams::pt_ag_volatile();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut restored = 0;
    for i in 0..1_000u64 {
        let mut dev_rng = seeded(i);
        let mut dev = Device::new(vol.clone()).unwrap();
        for _ in 0..rng.random_range(1..6) {
            let v = rng.random_range(-0.2..1.2);
            let p = if rng.random_bool(0.5) { rng.random_range(0.0..1e-3) } else { 0.0 };
            let dur = rng.random_range(1e-7..1e-3);
            dev.step(&StimulusSample::new(v, p, dur).unwrap(), &mut dev_rng);
        }
        // Guarantee at least some tails start from LRS.
        if rng.random_bool(0.5) {
            dev.step(&StimulusSample::new(1.0, 0.0, 1e-2).unwrap(), &mut dev_rng);
        }
        let tail_start = dev.clock();
        let mut elapsed = 0.0;
        let mut reset_time = None;
        while elapsed < vol.tau_relax * (1.0 + 1e-9) {
            let dur = rng.random_range(0.01..0.3) * vol.tau_relax;
            let v = rng.random_range(-0.99 * vol.v_hold..0.99 * vol.v_hold);
            let p = if rng.random_bool(0.5) { rng.random_range(0.0..1e-3) } else { 0.0 };
            for e in dev.step(&StimulusSample::new(v, p, dur).unwrap(), &mut dev_rng) {
                if e.transition == Transition::Reset {
                    reset_time = Some(e.time);
                }
            }
            elapsed += dur;
        }
        let in_time = reset_time.is_none_or(|t| t - tail_start <= vol.tau_relax * (1.0 + 1e-9));
        if dev.state().step_index == 0 && in_time {
            restored += 1;
        }
    }

    let nv = DeviceParams::ag_ag_nonvolatile();
    let mut dev = Device::new(nv.clone()).unwrap().with_state(DeviceState::lrs(&nv));
    let zero = StimulusSample::new(0.0, 0.0, 1e-6).unwrap();
    let mut r = seeded(0);
    let mut retained = true;
    for _ in 0..1_000_000 {
        retained &= dev.step(&zero, &mut r).is_empty();
    }
    retained &= dev.state().step_index == nv.n_intermediate;

    let mut lit = Device::new(nv.clone()).unwrap().with_state(DeviceState::lrs(&nv));
    let ev = lit.step(&StimulusSample::new(0.0, 2.0 * nv.p_volatile, 1e-6).unwrap(), &mut r);
    let erased = lit.state().step_index == 0
        && ev.iter().any(|e| e.transition == Transition::Reset && e.cause == Cause::Optical);
    check(
        restored == 1_000 && retained && erased,
        format!("volatile restored {restored}/1000, non-volatile retained {retained}, light erases {erased}"),
    )
}

fn c12_reproducibility() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_optomem");
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut diffs = Vec::new();
    for exp in ["iv_sweep", "latency_stats", "cavity_design", "maze_train", "xor"] {
        let mut dirs = Vec::new();
        for run in 0..2 {
            let dir = tmp.path().join(format!("{exp}-{run}"));
            let status = Command::new(exe)
                .args(["run", exp, "--seed", "7", "--out"])
                .arg(&dir)
                .output()
                .expect("spawn");
            if !status.status.success() {
                diffs.push(format!("{exp}: exit {:?}", status.status.code()));
            }
            dirs.push(dir);
        }
        diffs.extend(compare_dirs(&dirs[0], &dirs[1]).into_iter().map(|f| format!("{exp}/{f}")));
    }
    check(diffs.is_empty(), if diffs.is_empty() { "5 experiments byte-identical".into() } else { diffs.join(", ") })
}

fn compare_dirs(a: &Path, b: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let Ok(entries) = std::fs::read_dir(a) else { return vec!["missing output".into()] };
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().to_string();
        let (x, y) = (std::fs::read(a.join(&name)), std::fs::read(b.join(&name)));
        let same = match (x, y) {
            (Ok(x), Ok(y)) if name == "manifest.json" => strip_timestamp(&x) == strip_timestamp(&y),
            (Ok(x), Ok(y)) => x == y,
            _ => false,
        };
        if !same {
            out.push(name);
        }
    }
    out
}

fn strip_timestamp(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap_or_default();
    if let Some(o) = v.as_object_mut() {
        o.remove("timestamp");
    }
    v
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 12] = [
        ("1 photovoltaic calibration", c1_photovoltaic, Some(Duration::from_secs(1))),
        ("2 threshold-shift calibration", c2_threshold_shift, None),
        ("3 coincidence truth table", c3_coincidence, Some(Duration::from_secs(10))),
        ("4 shunting truth table", c4_shunting, Some(Duration::from_secs(10))),
        ("5 xor", c5_xor, Some(Duration::from_secs(5))),
        ("6 maze learning", c6_maze, Some(Duration::from_secs(30))),
        ("7 three-factor oracle equivalence", c7_three_factor, None),
        ("8 tmm conservation", c8_tmm, None),
        ("9 cavity design bands", c9_cavity, Some(Duration::from_secs(10))),
        ("10 latency statistics", c10_latency, None),
        ("11 volatility dichotomy", c11_volatility, None),
        ("12 reproducibility", c12_reproducibility, None),
    ];
    let mut failed = 0;
    for (name, f, limit) in criteria {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / {:.0?}", l));
        let late = if in_time { "" } else { " [over time budget]" };
        println!(
            "[{}] {name}: {} ({:.2?}{budget}){late}",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            took
        );
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
