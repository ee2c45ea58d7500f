//! Orthogonal-measurement experiments over device chains.
//!
//! A run prepares the GHZ-like state at `phi` (default `phi_max(n)`) on each
//! chain, estimates the canonical `M_n` and `M'_n` per repeat, and reduces
//! the repeats to mean and population standard deviation. Normalized columns
//! divide by the local-realism bound.
//!
//! In this noise model the chain only names the qubits and seeds the shot
//! streams: every chain of length `n` shares one trajectory ensemble.

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::device::{enumerate_chains, Chain, CouplingGraph, ReferenceRow};
use crate::error::{Error, Result};
use crate::measurement::{sample_distribution, settings_for, EstimateResult};
use crate::mermin::{analytic_expectation, canonical_operator, lr_bound, normalize, phi_max, AnalyticSpec};
use crate::noise::{apply_readout_flip, NoiseSpec, TrajectoryEnsemble};
use crate::pauli::WeightedPauliSum;
use crate::rng::{derive_seed, rng_for};

const STREAM_TRAJECTORIES: u64 = 1;
const STREAM_SHOTS: u64 = 2;
const STREAM_READOUT: u64 = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact (trajectory-averaged) expectations, no shot noise.
    Exact,
    #[default]
    Sampled,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ChainSelection {
    #[default]
    All,
    List(Vec<Chain>),
}

impl Serialize for ChainSelection {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ChainSelection::All => serializer.serialize_str("all"),
            ChainSelection::List(chains) => chains.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for ChainSelection {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Word(String),
            List(Vec<Chain>),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Word(w) if w == "all" => Ok(ChainSelection::All),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "expected \"all\" or a list of chains, got {w:?}"
            ))),
            Repr::List(chains) => Ok(ChainSelection::List(chains)),
        }
    }
}

fn default_shots() -> u64 {
    1024
}
fn default_repeats() -> usize {
    5
}
fn default_trajectories() -> usize {
    128
}

/// `shots` is per measurement setting (one setting per Pauli term).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default)]
    pub chains: ChainSelection,
    /// Defaults to `phi_max(n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    /// Depolarizing trajectories per ensemble; ignored when `depol_p = 0`.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
}

impl ExperimentConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            chains: ChainSelection::All,
            phi: None,
            shots: default_shots(),
            repeats: default_repeats(),
            noise: NoiseSpec::default(),
            seed: 0,
            mode: Mode::Sampled,
            trajectories: default_trajectories(),
        }
    }

    pub fn phase(&self) -> f64 {
        self.phi.unwrap_or_else(|| phi_max(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidQubitCount {
                n: self.n,
                reason: "experiments need at least two qubits",
            });
        }
        if self.shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be at least 1".into()));
        }
        self.noise.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub chain: Chain,
    pub repeat: usize,
    pub m_estimate: f64,
    pub m_prime_estimate: f64,
    /// Shot-noise standard errors (zero in exact mode).
    pub m_se: f64,
    pub m_prime_se: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub repeats: usize,
    pub m_mean: f64,
    pub m_prime_mean: f64,
    /// Population standard deviations (divide by the repeat count).
    pub m_sigma: f64,
    pub m_prime_sigma: f64,
    pub m_norm: f64,
    pub m_prime_norm: f64,
    pub m_sigma_norm: f64,
    pub m_prime_sigma_norm: f64,
    /// Shot-noise standard error of the means.
    pub m_shot_se: f64,
    pub m_prime_shot_se: f64,
}

impl SummaryStats {
    /// Standard error of the mean estimated from the repeat spread,
    /// `sigma / sqrt(repeats - 1)`; zero for a single repeat.
    pub fn m_sem(&self) -> f64 {
        sem(self.m_sigma, self.repeats)
    }

    pub fn m_prime_sem(&self) -> f64 {
        sem(self.m_prime_sigma, self.repeats)
    }
}

fn sem(pop_sigma: f64, repeats: usize) -> f64 {
    if repeats < 2 {
        0.0
    } else {
        pop_sigma / ((repeats - 1) as f64).sqrt()
    }
}

/// Arithmetic mean and population standard deviation.
pub fn mean_and_sigma(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    Ok((mean, var.sqrt()))
}

/// Reduces the repeats of one chain on `n` qubits.
pub fn summarize(records: &[RunRecord], n: usize) -> Result<SummaryStats> {
    let m: Vec<f64> = records.iter().map(|r| r.m_estimate).collect();
    let mp: Vec<f64> = records.iter().map(|r| r.m_prime_estimate).collect();
    let (m_mean, m_sigma) = mean_and_sigma(&m)?;
    let (m_prime_mean, m_prime_sigma) = mean_and_sigma(&mp)?;
    let k = records.len() as f64;
    let pooled = |f: fn(&RunRecord) -> f64| {
        records.iter().map(|r| f(r).powi(2)).sum::<f64>().sqrt() / k
    };
    Ok(SummaryStats {
        repeats: records.len(),
        m_mean,
        m_prime_mean,
        m_sigma,
        m_prime_sigma,
        m_norm: normalize(m_mean, n),
        m_prime_norm: normalize(m_prime_mean, n),
        m_sigma_norm: normalize(m_sigma, n),
        m_prime_sigma_norm: normalize(m_prime_sigma, n),
        m_shot_se: pooled(|r| r.m_se),
        m_prime_shot_se: pooled(|r| r.m_prime_se),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub chain: Chain,
    pub n: usize,
    pub phi: f64,
    pub stats: SummaryStats,
    pub records: Vec<RunRecord>,
}

/// Per-setting outcome distributions of one operator, ready for sampling.
struct PreparedOperator {
    terms: Vec<(crate::pauli::PauliString, f64, Vec<f64>)>,
}

impl PreparedOperator {
    fn new(op: &WeightedPauliSum, ensemble: &TrajectoryEnsemble) -> Result<Self> {
        let terms = settings_for(op)?
            .into_iter()
            .map(|(s, c, setting)| Ok((s, c, ensemble.setting_distribution(&setting)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { terms })
    }

    fn sample(&self, n: usize, shots: u64, eps: f64, seed: u64) -> Result<EstimateResult> {
        let mut sampled = Vec::with_capacity(self.terms.len());
        for (t, (string, coeff, probs)) in self.terms.iter().enumerate() {
            let mut rng = rng_for(seed, &[STREAM_SHOTS, t as u64]);
            let mut counts = sample_distribution(probs, n, shots, &mut rng)?;
            if eps > 0.0 {
                counts = apply_readout_flip(&counts, eps, derive_seed(seed, &[STREAM_READOUT, t as u64]))?;
            }
            sampled.push((string, *coeff, counts));
        }
        Ok(EstimateResult::from_counts(sampled))
    }
}

/// Everything needed to produce per-repeat `(M, M')` estimates for one
/// `(n, phi, noise)` setting.
struct Estimator {
    n: usize,
    mode: Mode,
    shots: u64,
    eps: f64,
    exact: (f64, f64),
    m: Option<PreparedOperator>,
    m_prime: Option<PreparedOperator>,
}

impl Estimator {
    fn new(config: &ExperimentConfig, phi: f64) -> Result<Self> {
        let n = config.n;
        let pair = canonical_operator(n)?;
        let ensemble = TrajectoryEnsemble::prepare(
            n,
            phi,
            &config.noise,
            config.trajectories,
            derive_seed(config.seed, &[STREAM_TRAJECTORIES, n as u64]),
        )?;
        let eps = config.noise.readout_eps;
        let exact = (
            ensemble.expectation(&pair.m, eps)?,
            ensemble.expectation(&pair.m_prime, eps)?,
        );
        let (m, m_prime) = match config.mode {
            Mode::Exact => (None, None),
            Mode::Sampled => (
                Some(PreparedOperator::new(&pair.m, &ensemble)?),
                Some(PreparedOperator::new(&pair.m_prime, &ensemble)?),
            ),
        };
        Ok(Self {
            n,
            mode: config.mode,
            shots: config.shots,
            eps,
            exact,
            m,
            m_prime,
        })
    }

    /// `(m, m_prime, m_se, m_prime_se)` for one repeat.
    fn estimate(&self, seed: u64) -> Result<(f64, f64, f64, f64)> {
        match (self.mode, &self.m, &self.m_prime) {
            (Mode::Sampled, Some(m), Some(mp)) => {
                let a = m.sample(self.n, self.shots, self.eps, derive_seed(seed, &[0]))?;
                let b = mp.sample(self.n, self.shots, self.eps, derive_seed(seed, &[1]))?;
                Ok((a.value, b.value, a.standard_error, b.standard_error))
            }
            _ => Ok((self.exact.0, self.exact.1, 0.0, 0.0)),
        }
    }
}

fn chain_seed(seed: u64, chain: &Chain) -> u64 {
    let path: Vec<u64> = chain.qubits().iter().map(|&q| q as u64).collect();
    derive_seed(seed, &path)
}

/// Resolves the configured chains against `graph`.
pub fn resolve_chains(config: &ExperimentConfig, graph: &CouplingGraph) -> Result<Vec<Chain>> {
    match &config.chains {
        ChainSelection::All => Ok(enumerate_chains(graph, config.n)),
        ChainSelection::List(chains) => {
            for c in chains {
                if c.len() != config.n {
                    return Err(Error::InvalidParameter(format!(
                        "chain {c} has {} qubits, expected {}",
                        c.len(),
                        config.n
                    )));
                }
                if !graph.is_path(c) {
                    return Err(Error::NotAPath(c.to_string()));
                }
            }
            Ok(chains.clone())
        }
    }
}

/// Estimates canonical `M_n` and `M'_n` on every selected chain.
pub fn run_orthogonal_pair(config: &ExperimentConfig, graph: &CouplingGraph) -> Result<Vec<ChainResult>> {
    config.validate()?;
    let chains = resolve_chains(config, graph)?;
    run_on_chains(config, &chains)
}

/// Like [`run_orthogonal_pair`] for chains already checked by the caller.
pub fn run_on_chains(config: &ExperimentConfig, chains: &[Chain]) -> Result<Vec<ChainResult>> {
    config.validate()?;
    let phi = config.phase();
    let estimator = Estimator::new(config, phi)?;
    chains
        .par_iter()
        .map(|chain| {
            let base = chain_seed(config.seed, chain);
            let records = (0..config.repeats)
                .map(|repeat| {
                    let seed = derive_seed(base, &[repeat as u64]);
                    let (m, mp, m_se, mp_se) = estimator.estimate(seed)?;
                    Ok(RunRecord {
                        chain: chain.clone(),
                        repeat,
                        m_estimate: m,
                        m_prime_estimate: mp,
                        m_se,
                        m_prime_se: mp_se,
                        seed,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ChainResult {
                chain: chain.clone(),
                n: config.n,
                phi,
                stats: summarize(&records, config.n)?,
                records,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub phi: f64,
    pub m: f64,
    pub m_prime: f64,
    pub m_norm: f64,
    pub m_prime_norm: f64,
    pub analytic_m: f64,
    pub analytic_m_prime: f64,
}

/// `phis` evenly spaced on `[0, 2pi)`.
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| TAU * k as f64 / points as f64).collect()
}

/// `<M_n>(phi)` and `<M'_n>(phi)` over a phase grid. Sampled mode averages
/// `config.repeats` repeats; chains and `config.phi` are ignored.
pub fn sweep_phase(config: &ExperimentConfig, phis: &[f64]) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let n = config.n;
    phis.par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let estimator = Estimator::new(config, phi)?;
            let mut m = 0.0;
            let mut mp = 0.0;
            for repeat in 0..config.repeats {
                let seed = derive_seed(config.seed, &[i as u64, repeat as u64]);
                let (a, b, _, _) = estimator.estimate(seed)?;
                m += a;
                mp += b;
            }
            m /= config.repeats as f64;
            mp /= config.repeats as f64;
            let (am, amp) = analytic_expectation(AnalyticSpec::new(n, phi));
            Ok(SweepRow {
                phi,
                m,
                m_prime: mp,
                m_norm: normalize(m, n),
                m_prime_norm: normalize(mp, n),
                analytic_m: am,
                analytic_m_prime: amp,
            })
        })
        .collect()
}

/// Least-squares fit of `c + a cos(k phi) + b sin(k phi)`; returns the
/// amplitude `sqrt(a^2 + b^2)` and phase `atan2(b, a)`.
pub fn fit_harmonic(phis: &[f64], values: &[f64], k: f64) -> Result<(f64, f64)> {
    if phis.len() != values.len() || phis.len() < 3 {
        return Err(Error::InvalidParameter("need at least three matching samples".into()));
    }
    // Normal equations for the 3-parameter linear model.
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (&phi, &y) in phis.iter().zip(values) {
        let row = [1.0, (k * phi).cos(), (k * phi).sin()];
        for i in 0..3 {
            atb[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let x = solve3(ata, atb)
        .ok_or_else(|| Error::InvalidParameter("degenerate phase grid".into()))?;
    Ok((x[1].hypot(x[2]), x[2].atan2(x[1])))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Results sorted by descending `m_mean`, ties by chain.
pub fn ranked(results: &[ChainResult]) -> Vec<&ChainResult> {
    let mut rows: Vec<&ChainResult> = results.iter().collect();
    rows.sort_by(|a, b| {
        b.stats
            .m_mean
            .total_cmp(&a.stats.m_mean)
            .then_with(|| a.chain.cmp(&b.chain))
    });
    rows
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    /// Half-width of the local-realism square in normalized units.
    pub lr_square: f64,
    /// Optional subsystem circle radii supplied by the caller.
    #[serde(default)]
    pub circles: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub rank: usize,
    pub chain: Chain,
    pub n: usize,
    pub m_norm: f64,
    pub m_prime_norm: f64,
    pub m_sigma_norm: f64,
    pub m_prime_sigma_norm: f64,
    pub m_mean: f64,
    pub m_prime_mean: f64,
    pub m_sigma: f64,
    pub m_prime_sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_m_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_m_prime_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub annotations: Annotations,
    pub rows: Vec<ReportRow>,
}

/// Ranked rows, joined with `reference` on the canonical chain when given.
pub fn build_report(
    results: &[ChainResult],
    reference: Option<&[ReferenceRow]>,
    circles: &[f64],
) -> Report {
    let rows = ranked(results)
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let matched = reference.and_then(|rows| {
                let key = r.chain.canonical();
                rows.iter().find(|row| row.chain.canonical() == key)
            });
            let s = &r.stats;
            ReportRow {
                rank: i + 1,
                chain: r.chain.clone(),
                n: r.n,
                m_norm: s.m_norm,
                m_prime_norm: s.m_prime_norm,
                m_sigma_norm: s.m_sigma_norm,
                m_prime_sigma_norm: s.m_prime_sigma_norm,
                m_mean: s.m_mean,
                m_prime_mean: s.m_prime_mean,
                m_sigma: s.m_sigma,
                m_prime_sigma: s.m_prime_sigma,
                ref_m_mean: matched.map(|m| m.m_mean),
                ref_m_prime_mean: matched.map(|m| m.m_prime_mean),
                delta: matched.map(|m| s.m_mean - m.m_mean),
            }
        })
        .collect();
    Report {
        annotations: Annotations {
            lr_square: 1.0,
            circles: circles.to_vec(),
        },
        rows,
    }
}

const REPORT_COLUMNS: [&str; 11] = [
    "rank",
    "chain",
    "n",
    "m_norm",
    "m_prime_norm",
    "m_sigma_norm",
    "m_prime_sigma_norm",
    "m_mean",
    "m_prime_mean",
    "m_sigma",
    "m_prime_sigma",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Ranked CSV. Reference columns appear whenever a reference is supplied.
pub fn write_report_csv<W: Write>(report: &Report, with_reference: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = REPORT_COLUMNS.to_vec();
    if with_reference {
        header.extend(["ref_m_mean", "ref_m_prime_mean", "delta"]);
    }
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![
            r.rank.to_string(),
            r.chain.to_string(),
            r.n.to_string(),
            r.m_norm.to_string(),
            r.m_prime_norm.to_string(),
            r.m_sigma_norm.to_string(),
            r.m_prime_sigma_norm.to_string(),
            r.m_mean.to_string(),
            r.m_prime_mean.to_string(),
            r.m_sigma.to_string(),
            r.m_prime_sigma.to_string(),
        ];
        if with_reference {
            rec.extend([opt(r.ref_m_mean), opt(r.ref_m_prime_mean), opt(r.delta)]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "phi",
        "m",
        "m_prime",
        "m_norm",
        "m_prime_norm",
        "analytic_m",
        "analytic_m_prime",
    ])?;
    for r in rows {
        w.write_record([
            r.phi.to_string(),
            r.m.to_string(),
            r.m_prime.to_string(),
            r.m_norm.to_string(),
            r.m_prime_norm.to_string(),
            r.analytic_m.to_string(),
            r.analytic_m_prime.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of [`fit_noise_grid`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseFit {
    pub noise: NoiseSpec,
    pub target: f64,
    pub fitted: f64,
}

/// Grid search over `(depol_p, readout_eps)` matching the exact normalized
/// `M_n` at `phi_max(n)` to `target`. Ties keep the smallest `depol_p`, then
/// the smallest `readout_eps`.
pub fn fit_noise_grid(
    n: usize,
    target: f64,
    depol_grid: &[f64],
    readout_grid: &[f64],
    trajectories: usize,
    seed: u64,
) -> Result<NoiseFit> {
    let pair = canonical_operator(n)?;
    let phi = phi_max(n);
    let mut best: Option<NoiseFit> = None;
    for &p in depol_grid {
        let noise = NoiseSpec {
            depol_p: p,
            ..NoiseSpec::default()
        };
        let ensemble = TrajectoryEnsemble::prepare(
            n,
            phi,
            &noise,
            trajectories,
            derive_seed(seed, &[STREAM_TRAJECTORIES, n as u64]),
        )?;
        for &eps in readout_grid {
            let fitted = normalize(ensemble.expectation(&pair.m, eps)?, n);
            let better = best
                .as_ref()
                .is_none_or(|b| (fitted - target).abs() < (b.fitted - target).abs());
            if better {
                best = Some(NoiseFit {
                    noise: NoiseSpec {
                        theta: None,
                        depol_p: p,
                        readout_eps: eps,
                    },
                    target,
                    fitted,
                });
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty noise grid".into()))
}

/// Normalized violation at `phi_max(n)` without noise: `2^((n-1)/2)`.
pub fn ideal_normalized_max(n: usize) -> f64 {
    crate::mermin::analytic_amplitude(n) / lr_bound(n)
}
