//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;

/// Two-interface Airy summation for ambient / film / substrate at normal
/// incidence. Indices use the `n - ik` convention. Returns (R, T).
pub fn airy_single_layer(n0: Complex64, n1: Complex64, n2: Complex64, d_nm: f64, wl_nm: f64) -> (f64, f64) {
    let r01 = (n0 - n1) / (n0 + n1);
    let r12 = (n1 - n2) / (n1 + n2);
    let t01 = 2.0 * n0 / (n0 + n1);
    let t12 = 2.0 * n1 / (n1 + n2);
    let beta = n1 * (2.0 * std::f64::consts::PI * d_nm / wl_nm);
    let i = Complex64::i();
    let ph2 = (-2.0 * i * beta).exp();
    let den = 1.0 + r01 * r12 * ph2;
    let r = (r01 + r12 * ph2) / den;
    let t = t01 * t12 * (-i * beta).exp() / den;
    (r.norm_sqr(), n2.re / n0.re * t.norm_sqr())
}

/// One-sample Kolmogorov-Smirnov statistic against Exp(mean).
pub fn ks_exponential(samples: &[f64], mean: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x / mean).exp();
            (cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value `sqrt(-ln(alpha/2)/2) / sqrt(n)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Pearson chi-square statistic for observed counts against equal cells.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Flag,
    Tick,
    Reward,
}

/// Replays a schedule with the plain window rule: a reward potentiates iff a
/// flag was raised fewer than three ticks earlier and no reward intervened.
pub fn eligibility_oracle(ops: &[Op]) -> bool {
    ops.iter().enumerate().any(|(i, op)| {
        *op == Op::Reward
            && ops[..i].iter().rposition(|o| *o == Op::Flag).is_some_and(|j| {
                let between = &ops[j + 1..i];
                between.iter().filter(|o| **o == Op::Tick).count() < 3 && !between.contains(&Op::Reward)
            })
    })
}
