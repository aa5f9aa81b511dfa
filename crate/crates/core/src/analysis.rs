//! Closed-form fidelities, classification error rates, Monte Carlo
//! estimation and parameter sweeps.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::channels::{apply_channel, branch_table, ErrorPattern, StochasticChannel};
use crate::code::{classify, thresholds, CodeParams, Policy, Protocol, ProtocolRun, SyndromeClass};
use crate::mixture::GaussianMixture;
use crate::phase_space::GaussianState;
use crate::rng;
use crate::{Error, Result};

/// Fidelity of the unencoded signal after one channel.
pub fn fidelity_direct(gamma: f64, xbar2: f64) -> f64 {
    (1.0 - gamma) + gamma * (-xbar2 * xbar2).exp()
}

/// Encoded fidelity with infinitely squeezed ancillas.
pub fn fidelity_encoded_ideal(gamma: f64, xbar2: f64) -> f64 {
    let g3 = gamma.powi(3);
    (1.0 - g3) + g3 * (-3.0 * xbar2 * xbar2).exp()
}

/// Encoded fidelity at finite squeezing, assuming every syndrome is
/// classified correctly. A branch with feedforward gain `g` leaves excess
/// x-variance `v = g^2 e^{-2r}/4`, whose outcome-averaged fidelity is
/// `(1 + 2v)^{-1/2}`.
pub fn fidelity_encoded_semianalytic(gamma: f64, r: f64, xbar2: f64) -> f64 {
    let e = (-2.0 * r).exp();
    let f = |k: f64| (1.0 + k * e).powf(-0.5);
    let single = f(0.25) + 2.0 * f(1.0 / 3.0);
    let double = 2.0 * f(4.0 / 3.0) + f(1.0);
    (1.0 - gamma).powi(3)
        + gamma * (1.0 - gamma).powi(2) * single
        + gamma * gamma * (1.0 - gamma) * double
        + gamma.powi(3) * (-3.0 * xbar2 * xbar2).exp()
}

/// Probability of each assigned class (columns, [`SyndromeClass::ALL`]
/// order) for each true error pattern (rows, [`ErrorPattern::THREE_MODE`]
/// order).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationMatrix {
    pub params: CodeParams,
    pub policy: Policy,
    pub probs: [[f64; 7]; 8],
}

impl ClassificationMatrix {
    pub fn prob(&self, pattern: ErrorPattern, cls: SyndromeClass) -> f64 {
        let row = ErrorPattern::THREE_MODE
            .iter()
            .position(|&p| p == pattern)
            .expect("three-mode pattern");
        self.probs[row][cls.index()]
    }

    /// Probability that `pattern` decodes to its own class; for the triple
    /// error that is `NoError`.
    pub fn diagonal(&self, pattern: ErrorPattern) -> f64 {
        self.prob(pattern, SyndromeClass::from_pattern(pattern))
    }

    pub fn row_sums(&self) -> [f64; 8] {
        self.probs.map(|row| row.iter().sum())
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Mass of `N(0, 1)` on `[a, b]`, accurate in both tails.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    if a > 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Classification probabilities from the Gaussian syndrome distribution of
/// each pattern (independent axes, variance `e^{-2r}/4`).
///
/// For fixed `x2` every decision boundary is a point on the `x3` axis
/// (sign thresholds or crossings of two linear posterior scores), so the
/// conditional class probabilities are sums of error-function interval
/// masses. The remaining `x2` integral runs over panels split at every
/// boundary that is itself a vertical line.
pub fn misclassification_probs(p: &CodeParams, policy: Policy) -> ClassificationMatrix {
    let sigma = p.syndrome_variance().sqrt();
    let var = sigma * sigma;
    let table = branch_table(p.gamma, p.xbar2);
    let (t2, t3) = thresholds(p.xbar2);
    let ln_prior: Vec<f64> = table.iter().map(|b| b.weight.ln()).collect();
    let gl = gauss_legendre(16);
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * p.xbar2;

    // x2 positions of boundaries between hypotheses with equal x3 means
    let mut vertical = vec![-t2, t2];
    for a in 0..8 {
        for b in a + 1..8 {
            let (ma, mb) = (table[a].ancilla_shifts, table[b].ancilla_shifts);
            if same(ma[1], mb[1]) && !same(ma[0], mb[0]) && ln_prior[a].is_finite() && ln_prior[b].is_finite() {
                // lp_a - (x-ma)^2/2v = lp_b - (x-mb)^2/2v
                let x = (2.0 * var * (ln_prior[b] - ln_prior[a]) + ma[0] * ma[0] - mb[0] * mb[0])
                    / (2.0 * (ma[0] - mb[0]));
                vertical.push(x);
            }
        }
    }

    let x3_breaks = |x2: f64| -> Vec<f64> {
        let mut br = vec![-t3, t3];
        for a in 0..8 {
            for b in a + 1..8 {
                let (ma, mb) = (table[a].ancilla_shifts, table[b].ancilla_shifts);
                if same(ma[1], mb[1]) || !ln_prior[a].is_finite() || !ln_prior[b].is_finite() {
                    continue;
                }
                let c = 2.0 * var * (ln_prior[a] - ln_prior[b]) - (x2 - ma[0]).powi(2) + (x2 - mb[0]).powi(2)
                    - ma[1] * ma[1]
                    + mb[1] * mb[1];
                br.push(-c / (2.0 * (ma[1] - mb[1])));
            }
        }
        br.retain(|v| v.is_finite());
        br.sort_by(f64::total_cmp);
        br.dedup();
        br
    };

    let mut probs = [[0.0; 7]; 8];
    for (row, b) in table.iter().enumerate() {
        let [m2, m3] = b.ancilla_shifts;
        let (lo, hi) = (m2 - 12.0 * sigma, m2 + 12.0 * sigma);
        let mut edges: Vec<f64> = vertical.iter().copied().filter(|&v| v > lo && v < hi).collect();
        let panels = 256;
        edges.extend((0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64));
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        for w in edges.windows(2) {
            let (a, c) = (w[0], w[1]);
            let half = 0.5 * (c - a);
            let mid = 0.5 * (a + c);
            for &(node, weight) in &gl {
                let x2 = mid + half * node;
                let z = (x2 - m2) / sigma;
                let density = (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                let dens_w = density * weight * half;
                let br = x3_breaks(x2);
                let mut prev = f64::NEG_INFINITY;
                for k in 0..=br.len() {
                    let next = br.get(k).copied().unwrap_or(f64::INFINITY);
                    let probe = match (prev.is_finite(), next.is_finite()) {
                        (true, true) => 0.5 * (prev + next),
                        (false, true) => next - 1.0 - sigma,
                        (true, false) => prev + 1.0 + sigma,
                        (false, false) => m3,
                    };
                    let mass = normal_mass((prev - m3) / sigma, (next - m3) / sigma);
                    if mass > 0.0 {
                        let cls = classify(x2, probe, p, policy);
                        probs[row][cls.index()] += dens_w * mass;
                    }
                    prev = next;
                }
            }
        }
    }
    ClassificationMatrix {
        params: *p,
        policy,
        probs,
    }
}

/// Sample mean and standard error of a Monte Carlo quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_runs: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Standard error from the sample standard deviation (`n - 1`
    /// denominator); zero for a single sample.
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::domain("Monte Carlo estimate needs at least one run"));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = samples.iter().map(|s| (s - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            stderr,
            n_runs: n,
            seed,
        })
    }
}

/// Run `n_runs` protocol rounds in parallel, run `i` drawing from
/// `rng::stream(seed, point, i)`, and map each through `f`. Output is in run
/// order.
pub fn map_runs<T, F>(protocol: &Protocol, n_runs: usize, seed: u64, point: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(ProtocolRun) -> T + Sync,
{
    (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = rng::stream(seed, point, i);
            protocol.run(&mut s).map(&f)
        })
        .collect()
}

fn estimate_at_point(protocol: &Protocol, n_runs: usize, seed: u64, point: u64) -> Result<McEstimate> {
    if n_runs == 0 {
        return Err(Error::domain("n_runs must be at least 1"));
    }
    let fids = map_runs(protocol, n_runs, seed, point, |r| r.fidelity)?;
    McEstimate::from_samples(&fids, seed)
}

/// Monte Carlo estimate of the conditional output fidelity of the code.
pub fn estimate_fidelity_mc(
    signal: &GaussianState,
    p: &CodeParams,
    policy: Policy,
    n_runs: usize,
    seed: u64,
) -> Result<McEstimate> {
    let protocol = Protocol::new(signal.clone(), *p, policy)?;
    estimate_at_point(&protocol, n_runs, seed, 0)
}

/// Monte Carlo estimate of the unencoded fidelity: each run draws whether
/// the channel fired and scores the resulting state.
pub fn estimate_direct_mc(
    signal: &GaussianState,
    gamma: f64,
    xbar2: f64,
    n_runs: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_runs == 0 {
        return Err(Error::domain("n_runs must be at least 1"));
    }
    let channel = StochasticChannel::x_displacement(gamma, xbar2)?;
    let out = apply_channel(&GaussianMixture::pure(signal.clone()), &channel, 0)?;
    let fids = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = rng::stream(seed, 0, i);
            let k = out.sample_component(&mut s);
            out.components()[k].state.overlap_pure(signal)
        })
        .collect::<Result<Vec<f64>>>()?;
    McEstimate::from_samples(&fids, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Gamma,
    R,
    Xbar2,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::R => "r",
            SweepParam::Xbar2 => "xbar2",
        }
    }

    pub fn apply(self, base: &CodeParams, value: f64) -> Result<CodeParams> {
        match self {
            SweepParam::Gamma => CodeParams::new(base.r, base.xbar2, value),
            SweepParam::R => CodeParams::new(value, base.xbar2, base.gamma),
            SweepParam::Xbar2 => CodeParams::new(base.r, value, base.gamma),
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepParam::Gamma),
            "r" => Ok(SweepParam::R),
            "xbar2" => Ok(SweepParam::Xbar2),
            other => Err(Error::domain(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub base: CodeParams,
    pub signal: GaussianState,
    pub policy: Policy,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param_name: &'static str,
    pub param_value: f64,
    pub gamma: f64,
    pub r: f64,
    pub xbar2: f64,
    pub f_direct: f64,
    pub f_ideal: f64,
    pub f_semianalytic: f64,
    pub f_mc_mean: f64,
    pub f_mc_stderr: f64,
    pub n_runs: usize,
    pub seed: u64,
}

/// Evaluate every grid point; point `i` uses streams `(seed, i, run)`.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() {
        return Err(Error::domain("sweep grid is empty"));
    }
    if spec.runs == 0 {
        return Err(Error::domain("runs per point must be at least 1"));
    }
    let points = spec
        .values
        .iter()
        .map(|&v| spec.param.apply(&spec.base, v))
        .collect::<Result<Vec<_>>>()?;
    points
        .iter()
        .zip(&spec.values)
        .enumerate()
        .map(|(i, (p, &value))| {
            let protocol = Protocol::new(spec.signal.clone(), *p, spec.policy)?;
            let mc = estimate_at_point(&protocol, spec.runs, spec.seed, i as u64)?;
            Ok(SweepRow {
                param_name: spec.param.name(),
                param_value: value,
                gamma: p.gamma,
                r: p.r,
                xbar2: p.xbar2,
                f_direct: fidelity_direct(p.gamma, p.xbar2),
                f_ideal: fidelity_encoded_ideal(p.gamma, p.xbar2),
                f_semianalytic: fidelity_encoded_semianalytic(p.gamma, p.r, p.xbar2),
                f_mc_mean: mc.mean,
                f_mc_stderr: mc.stderr,
                n_runs: mc.n_runs,
                seed: spec.seed,
            })
        })
        .collect()
}

pub const CSV_HEADER: &str =
    "param_name,param_value,gamma,r,xbar2,f_direct,f_ideal,f_semianalytic,f_mc_mean,f_mc_stderr,n_runs,seed";

/// 17 significant digits in scientific notation, e.g. `9.9900000000000000e-1`.
pub fn format_f64(v: f64) -> Result<String> {
    if !v.is_finite() {
        return Err(Error::Numerical(format!("non-finite value {v} in output")));
    }
    Ok(format!("{v:.16e}"))
}

/// Render rows as CSV text. Nothing is produced unless every value is finite.
pub fn render_csv(rows: &[SweepRow]) -> Result<String> {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let nums = [
            row.param_value,
            row.gamma,
            row.r,
            row.xbar2,
            row.f_direct,
            row.f_ideal,
            row.f_semianalytic,
            row.f_mc_mean,
            row.f_mc_stderr,
        ]
        .iter()
        .map(|&v| format_f64(v))
        .collect::<Result<Vec<_>>>()?;
        writeln!(out, "{},{},{},{}", row.param_name, nums.join(","), row.n_runs, row.seed)
            .expect("writing to a String cannot fail");
    }
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    let text = render_csv(rows)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
