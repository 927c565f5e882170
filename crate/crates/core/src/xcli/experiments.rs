//! Built-in experiments and the computations they share with `verify`.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, OutputFormat};
use super::table::{self, Column, ResultTable, RunMetadata};
use crate::chaosmaps::kicked_env::{environment_deviation, environment_experiment, KickedEnvParams};
use crate::chaosmaps::sawtooth::{
    momentum_eigenstate, noisy_final_states, NoiseConfig, SawtoothMap, SawtoothParams, MAX_DENSE_QUBITS,
};
use crate::entan::{
    bipartition_spectrum, distillable_bounds, fano_lower_bound, log_negativity, threshold_prediction, BipartitionSpectrum,
};
use crate::error::{Error, Result};
use crate::prcircuits::{markov_fixed_point, markov_gap, markov_matrix, purity_decay_experiment, CircuitKind, Representation};
use crate::qstate::{fidelity, partial_trace, vn_entropy, Bipartition, DensityMatrix, StateVector};
use crate::randgen::{haar_state_on, lubkin_mean, page_mean, SeededStream};
use crate::stats::{linear_fit, mean_std, Histogram, LinearFit};
use crate::witstats::{
    detection_probability, lambda_min_stats, sample_w, theory_pdf, EnsembleKind, WitnessEnsembleSpec,
};

/// Registers larger than this need `allow_large` for bipartition sweeps.
pub const MAX_SPECTRUM_QUBITS: usize = 14;

/// Reference value `n_q/2 - 1/(2 ln 2)` for the mean entanglement of a
/// random state across a balanced cut.
pub fn random_state_entanglement(n_q: usize) -> f64 {
    n_q as f64 / 2.0 - 1.0 / (2.0 * std::f64::consts::LN_2)
}

fn spectrum_guard(n_q: usize, allow_large: bool) -> Result<()> {
    if n_q > MAX_SPECTRUM_QUBITS && !allow_large {
        return Err(Error::ResourceGuard(format!(
            "bipartition sweeps limited to n_q <= {MAX_SPECTRUM_QUBITS}; set allow_large to override"
        )));
    }
    if n_q < 2 || n_q % 2 == 1 {
        return Err(Error::Config(format!("balanced bipartitions need an even n_q >= 2, got {n_q}")));
    }
    Ok(())
}

/// Sawtooth orbit from `|n = 0⟩`, `t = 0..=t_max`, each step handed to `f`.
pub fn sawtooth_orbit<T>(big_k: f64, n_q: usize, t_max: usize, mut f: impl FnMut(usize, &StateVector) -> Result<T>) -> Result<Vec<T>> {
    let params = SawtoothParams::new(big_k, n_q)?;
    let map = SawtoothMap::new(&params)?;
    let mut psi = momentum_eigenstate(n_q, 0);
    let mut out = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        if t > 0 {
            let mut amps = psi.into_amplitudes();
            map.step_fft(&mut amps);
            psi = StateVector::normalized(amps, vec![2; n_q])?;
        }
        out.push(f(t, &psi)?);
    }
    Ok(out)
}

/// Mean and spread of `E_AB` over balanced cuts along the ideal orbit.
pub fn entanglement_generation(big_k: f64, n_q: usize, t_max: usize) -> Result<Vec<(f64, f64)>> {
    sawtooth_orbit(big_k, n_q, t_max, |_, psi| {
        let s = bipartition_spectrum(psi, true)?;
        Ok((s.mean, s.std))
    })
}

/// Bipartition spectrum of the sawtooth state at time `t`.
pub fn sawtooth_spectrum(big_k: f64, n_q: usize, t: usize) -> Result<BipartitionSpectrum> {
    let mut out = sawtooth_orbit(big_k, n_q, t, |step, psi| {
        if step == t {
            bipartition_spectrum(psi, true).map(Some)
        } else {
            Ok(None)
        }
    })?;
    Ok(out.pop().flatten().expect("last step evaluated"))
}

/// Convergence time of `⟨E_AB⟩(t)` to its random-state value: `-1/slope` of
/// a log-linear fit of `|Δ(t)|` over the steps before `|Δ|` first falls
/// below three times the late-time fluctuation level.
pub fn convergence_time(mean_e: &[f64], target: f64) -> Option<f64> {
    let late = &mean_e[mean_e.len() / 2..];
    let (_, floor) = mean_std(late);
    let floor = floor.max(1e-12);
    let deltas: Vec<f64> = mean_e.iter().map(|e| (e - target).abs()).collect();
    let end = deltas.iter().position(|&d| d < 3.0 * floor).unwrap_or(deltas.len());
    let pts: Vec<(f64, f64)> = (0..end.max(2).min(deltas.len())).map(|t| (t as f64, deltas[t].max(1e-300).ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let fit = linear_fit(&x, &y);
    (fit.slope < 0.0).then(|| -1.0 / fit.slope)
}

/// Distillable-entanglement bounds of the noise-averaged state, averaged
/// over balanced cuts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoisyBounds {
    pub lower_mean: f64,
    pub lower_rel_std: f64,
    pub upper_mean: f64,
    pub upper_rel_std: f64,
    /// `⟨ψ_t|ρ_ε|ψ_t⟩`.
    pub fidelity: f64,
}

fn rel_std(xs: &[f64]) -> f64 {
    let (m, s) = mean_std(xs);
    if m.abs() > 0.0 {
        s / m
    } else {
        0.0
    }
}

/// Noise-history counts for the two bounds. The lower-bound ensemble is
/// the prefix of the upper-bound one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Realizations {
    pub lower: usize,
    pub upper: usize,
}

impl Realizations {
    /// `~√N` for the lower bound, `~N` for the upper, both capped at 256.
    pub fn defaults(n_q: usize) -> Self {
        Realizations { lower: (1usize << n_q.div_ceil(2)).min(256), upper: (1usize << n_q).min(256) }
    }

    fn from_config(cfg: &ExperimentConfig, n_q: usize) -> Result<Self> {
        let d = Self::defaults(n_q);
        let r = Realizations {
            lower: cfg.param_or("realizations_lower", d.lower)?,
            upper: cfg.param_or("realizations_upper", d.upper)?,
        };
        if r.lower == 0 || r.upper == 0 {
            return Err(Error::Config("realization counts must be positive".into()));
        }
        Ok(r)
    }
}

/// Noisy sawtooth after `t` steps.
pub fn noisy_bounds(
    big_k: f64,
    n_q: usize,
    t: usize,
    epsilon: f64,
    realizations: Realizations,
    stream: SeededStream,
    allow_large: bool,
) -> Result<NoisyBounds> {
    if n_q > MAX_DENSE_QUBITS && !allow_large {
        return Err(Error::ResourceGuard(format!(
            "dense noisy states limited to n_q <= {MAX_DENSE_QUBITS}; set allow_large to override"
        )));
    }
    spectrum_guard(n_q, allow_large)?;
    let params = SawtoothParams::new(big_k, n_q)?;
    let initial = momentum_eigenstate(n_q, 0);
    let ideal = sawtooth_orbit(big_k, n_q, t, |_, psi| Ok(psi.clone()))?.pop().expect("nonempty orbit");
    let cuts = Bipartition::balanced_qubit_cuts(n_q)?;
    let (rhos, fidelity) = if epsilon == 0.0 {
        (None, 1.0)
    } else {
        let r = realizations.lower.max(realizations.upper);
        let noise = NoiseConfig { epsilon, realizations: r, stream };
        let states = noisy_final_states(&params, &noise, &initial, t)?;
        let rho_lower = DensityMatrix::equal_mixture(&states[..realizations.lower])?;
        let rho_upper = DensityMatrix::equal_mixture(&states[..realizations.upper])?;
        let f = fidelity(&ideal, &rho_upper)?;
        (Some((rho_lower, rho_upper)), f)
    };
    let per_cut: Vec<Result<(f64, f64)>> = match &rhos {
        None => cuts
            .par_iter()
            .map(|cut| distillable_bounds(&ideal, cut).map(|b| (b.lower, b.upper)))
            .collect(),
        Some((rho_l, rho_u)) => {
            let s_total = vn_entropy(rho_l)?;
            cuts.par_iter()
                .map(|cut| {
                    let s_a = vn_entropy(&partial_trace(rho_l, cut.side_a())?)?;
                    Ok(((s_a - s_total).max(0.0), log_negativity(rho_u, cut)?))
                })
                .collect()
        }
    };
    let (lower, upper): (Vec<f64>, Vec<f64>) = per_cut.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(NoisyBounds {
        lower_mean: mean_std(&lower).0,
        lower_rel_std: rel_std(&lower),
        upper_mean: mean_std(&upper).0,
        upper_rel_std: rel_std(&upper),
        fidelity,
    })
}

/// First `ε` on the (increasing) grid where `values` drops to half of
/// `reference`, interpolated linearly in `ln ε`.
pub fn half_value_threshold(eps: &[f64], values: &[f64], reference: f64) -> Option<f64> {
    let half = 0.5 * reference;
    let i = values.iter().position(|&v| v <= half)?;
    if i == 0 {
        return None;
    }
    let (e0, e1) = (eps[i - 1].ln(), eps[i].ln());
    let (v0, v1) = (values[i - 1], values[i]);
    Some((e0 + (e1 - e0) * (v0 - half) / (v0 - v1)).exp())
}

/// Power-law exponent `a` in `y ∝ n^{-a}` with the log-log fit.
pub fn power_law_exponent(n: &[f64], y: &[f64]) -> LinearFit {
    let lx: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mut fit = linear_fit(&lx, &ly);
    fit.slope = -fit.slope;
    fit
}

pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(Error::Config("geometric grid needs 0 < min < max and at least two points".into()));
    }
    let r = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| lo * (r * i as f64).exp()).collect())
}

type Runner = fn(&ExperimentConfig, SeededStream) -> Result<Vec<ResultTable>>;

pub struct ExperimentInfo {
    pub name: &'static str,
    pub anchor: &'static str,
    pub description: &'static str,
    runner: Runner,
}

impl std::fmt::Debug for ExperimentInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExperimentInfo").field("name", &self.name).field("anchor", &self.anchor).finish()
    }
}

pub static REGISTRY: [ExperimentInfo; 7] = [
    ExperimentInfo {
        name: "fig1-entgen",
        anchor: "Fig. 1",
        description: "mean balanced-cut entanglement along the quantum sawtooth orbit",
        runner: run_fig1,
    },
    ExperimentInfo {
        name: "fig2-histogram",
        anchor: "Fig. 2",
        description: "distribution of balanced-cut entanglement and its relative width",
        runner: run_fig2,
    },
    ExperimentInfo {
        name: "fig3-noise-bounds",
        anchor: "Fig. 3",
        description: "distillable-entanglement bounds of the noisy gate-level sawtooth",
        runner: run_fig3,
    },
    ExperimentInfo {
        name: "fig4-threshold-scaling",
        anchor: "Fig. 4",
        description: "noise strength at which the bounds halve, versus register size",
        runner: run_fig4,
    },
    ExperimentInfo {
        name: "fig5-witness-pdfs",
        anchor: "Fig. 5",
        description: "witness expectation distributions and detection probabilities",
        runner: run_fig5,
    },
    ExperimentInfo {
        name: "fig6-dephasing-env",
        anchor: "Fig. 6",
        description: "two qubits dephased by a chaotic kicked rotator vs random phase kicks",
        runner: run_fig6,
    },
    ExperimentInfo {
        name: "markov-gap",
        anchor: "purity Markov chain",
        description: "spectral gap, fixed point and purity decay of the random-circuit chain",
        runner: run_markov,
    },
];

pub fn registry() -> &'static [ExperimentInfo] {
    &REGISTRY
}

pub fn find_experiment(name: &str) -> Result<&'static ExperimentInfo> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Config(format!("unknown experiment `{name}`; see `chaos-ent list`")))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metadata: RunMetadata,
    pub tables: Vec<ResultTable>,
    pub wall_time_s: f64,
}

/// Runs an experiment on a pool of `config.workers` threads (all cores
/// when unset).
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    let info = find_experiment(&config.experiment)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let stream = SeededStream::from_label(config.master_seed, info.name);
    let start = Instant::now();
    let tables = pool.install(|| (info.runner)(config, stream))?;
    let metadata = RunMetadata {
        experiment: info.name.into(),
        anchor: info.anchor.into(),
        config_sha256: config.hash(),
        master_seed: config.master_seed,
        code_version: env!("CARGO_PKG_VERSION").into(),
        config: config.embedded_text(),
    };
    Ok(RunOutput { metadata, tables, wall_time_s: start.elapsed().as_secs_f64() })
}

/// Writes every table in every requested format; returns the paths.
pub fn write_outputs(out: &RunOutput, config: &ExperimentConfig) -> Result<Vec<std::path::PathBuf>> {
    let dir = config.resolved_output_dir();
    let mut paths = Vec::new();
    for t in &out.tables {
        for f in &config.formats {
            let path = match f {
                OutputFormat::Csv => table::write_file(&dir, &format!("{}.csv", t.name), &table::to_csv(t, &out.metadata)?)?,
                OutputFormat::Json => {
                    table::write_file(&dir, &format!("{}.json", t.name), &table::to_json(t, &out.metadata, out.wall_time_s)?)?
                }
            };
            paths.push(path);
        }
    }
    Ok(paths)
}

fn run_fig1(cfg: &ExperimentConfig, _stream: SeededStream) -> Result<Vec<ResultTable>> {
    let n_qs: Vec<usize> = cfg.param("n_q")?;
    let big_k: f64 = cfg.param("big_k")?;
    let t_max: usize = cfg.param("t_max")?;
    for &n in &n_qs {
        spectrum_guard(n, cfg.allow_large)?;
    }
    let mut t = ResultTable::new(
        "fig1-entgen",
        vec![Column::new("t", "steps"), Column::new("mean_E", "bits"), Column::new("std_E", "bits"), Column::new("n_q", "")],
    );
    for &n in &n_qs {
        for (step, (m, s)) in entanglement_generation(big_k, n, t_max)?.into_iter().enumerate() {
            t.push(vec![step.into(), m.into(), s.into(), n.into()])?;
        }
    }
    Ok(vec![t])
}

fn histogram_with_width(values: &[f64], width: Option<f64>) -> Result<Histogram> {
    match width {
        None => Ok(Histogram::freedman_diaconis(values)),
        Some(w) if w > 0.0 => {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let start = (lo / w).floor() * w;
            let bins = (((hi - start) / w).floor() as usize + 1).max(1);
            Ok(Histogram::uniform(values, start, start + bins as f64 * w, bins))
        }
        Some(w) => Err(Error::Config(format!("`params.bin_width` must be positive, got {w}"))),
    }
}

fn run_fig2(cfg: &ExperimentConfig, stream: SeededStream) -> Result<Vec<ResultTable>> {
    let n_qs: Vec<usize> = cfg.param("n_q")?;
    let big_k: f64 = cfg.param("big_k")?;
    let t_step: usize = cfg.param("t")?;
    let width: Option<f64> = cfg.param_opt("bin_width")?;
    for &n in &n_qs {
        spectrum_guard(n, cfg.allow_large)?;
    }
    let mut hist = ResultTable::new(
        "fig2-histogram",
        vec![
            Column::new("n_q", ""),
            Column::new("source", ""),
            Column::new("E_center", "bits"),
            Column::new("density", "1/bits"),
            Column::new("count", ""),
        ],
    );
    let mut summary = ResultTable::new(
        "fig2-histogram-summary",
        vec![
            Column::new("n_q", ""),
            Column::new("mean_E", "bits"),
            Column::new("std_E", "bits"),
            Column::new("rel_std", ""),
            Column::new("rel_std_haar", ""),
            Column::new("page", "bits"),
        ],
    );
    for &n in &n_qs {
        let saw = sawtooth_spectrum(big_k, n, t_step)?;
        let mut rng = stream.child(&format!("haar/{n}")).rng();
        let haar = bipartition_spectrum(&haar_state_on(vec![2; n], &mut rng)?, true)?;
        for (label, spec) in [("sawtooth", &saw), ("haar", &haar)] {
            let vals: Vec<f64> = spec.entries.iter().map(|e| e.1).collect();
            let h = histogram_with_width(&vals, width)?;
            for ((c, d), k) in h.centers().into_iter().zip(h.density()).zip(&h.counts) {
                hist.push(vec![n.into(), label.into(), c.into(), d.into(), (*k).into()])?;
            }
        }
        let half = 1usize << (n / 2);
        summary.push(vec![
            n.into(),
            saw.mean.into(),
            saw.std.into(),
            saw.relative_std().into(),
            haar.relative_std().into(),
            (page_mean(half, half)? / std::f64::consts::LN_2).into(),
        ])?;
    }
    Ok(vec![hist, summary])
}

fn noise_stream(stream: SeededStream, n_q: usize, t: usize) -> SeededStream {
    // Shared across ε so the curves use common random numbers.
    stream.child(&format!("noise/n{n_q}/t{t}"))
}

fn run_fig3(cfg: &ExperimentConfig, stream: SeededStream) -> Result<Vec<ResultTable>> {
    let n_qs: Vec<usize> = cfg.param("n_q")?;
    let big_k: f64 = cfg.param("big_k")?;
    let t: usize = cfg.param("t")?;
    let eps: Vec<f64> = cfg.param("epsilon")?;
    let gamma: f64 = cfg.param_or("gamma", 0.28)?;
    let mut table = ResultTable::new(
        "fig3-noise-bounds",
        vec![
            Column::new("n_q", ""),
            Column::new("epsilon", ""),
            Column::new("lower", "bits"),
            Column::new("lower_rel_std", ""),
            Column::new("upper", "bits"),
            Column::new("upper_rel_std", ""),
            Column::new("fidelity", ""),
            Column::new("fano_lower", "bits"),
            Column::new("realizations_lower", ""),
            Column::new("realizations_upper", ""),
        ],
    );
    for &n in &n_qs {
        let r = Realizations::from_config(cfg, n)?;
        for &e in &eps {
            let b = noisy_bounds(big_k, n, t, e, r, noise_stream(stream, n, t), cfg.allow_large)?;
            table.push(vec![
                n.into(),
                e.into(),
                b.lower_mean.into(),
                b.lower_rel_std.into(),
                b.upper_mean.into(),
                b.upper_rel_std.into(),
                b.fidelity.into(),
                fano_lower_bound(n, e, t, gamma).into(),
                r.lower.into(),
                r.upper.into(),
            ])?;
        }
    }
    Ok(vec![table])
}

/// Bounds along an ε grid plus the half-value thresholds for one `(n_q, t)`.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdScan {
    pub n_q: usize,
    pub t: usize,
    pub reference: NoisyBounds,
    pub curve: Vec<(f64, NoisyBounds)>,
    pub eps_lower: Option<f64>,
    pub eps_upper: Option<f64>,
}

pub fn threshold_scan(
    big_k: f64,
    n_q: usize,
    t: usize,
    eps: &[f64],
    realizations: Realizations,
    stream: SeededStream,
    allow_large: bool,
) -> Result<ThresholdScan> {
    let reference = noisy_bounds(big_k, n_q, t, 0.0, realizations, stream, allow_large)?;
    let curve = eps
        .iter()
        .map(|&e| noisy_bounds(big_k, n_q, t, e, realizations, stream, allow_large).map(|b| (e, b)))
        .collect::<Result<Vec<_>>>()?;
    let lower: Vec<f64> = curve.iter().map(|c| c.1.lower_mean).collect();
    let upper: Vec<f64> = curve.iter().map(|c| c.1.upper_mean).collect();
    Ok(ThresholdScan {
        n_q,
        t,
        eps_lower: half_value_threshold(eps, &lower, reference.lower_mean),
        eps_upper: half_value_threshold(eps, &upper, reference.upper_mean),
        reference,
        curve,
    })
}

fn run_fig4(cfg: &ExperimentConfig, stream: SeededStream) -> Result<Vec<ResultTable>> {
    let n_qs: Vec<usize> = cfg.param("n_q")?;
    let big_k: f64 = cfg.param("big_k")?;
    let ts: Vec<usize> = cfg.param("t")?;
    let eps = geometric_grid(cfg.param("epsilon_min")?, cfg.param("epsilon_max")?, cfg.param("epsilon_points")?)?;
    let gamma: f64 = cfg.param_or("gamma", 0.28)?;
    let mut curves = ResultTable::new(
        "fig4-threshold-scaling-curves",
        vec![
            Column::new("n_q", ""),
            Column::new("t", "steps"),
            Column::new("epsilon", ""),
            Column::new("lower", "bits"),
            Column::new("upper", "bits"),
        ],
    );
    let mut thresholds = ResultTable::new(
        "fig4-threshold-scaling",
        vec![
            Column::new("n_q", ""),
            Column::new("t", "steps"),
            Column::new("eps_lower", "").nullable(),
            Column::new("eps_upper", "").nullable(),
            Column::new("eps_fano", ""),
        ],
    );
    let mut fits = ResultTable::new(
        "fig4-threshold-scaling-fit",
        vec![
            Column::new("t", "steps"),
            Column::new("exponent_lower", "").nullable(),
            Column::new("r2_lower", "").nullable(),
            Column::new("exponent_upper", "").nullable(),
            Column::new("r2_upper", "").nullable(),
        ],
    );
    for &t in &ts {
        let mut found: Vec<(f64, Option<f64>, Option<f64>)> = Vec::new();
        for &n in &n_qs {
            let r = Realizations::from_config(cfg, n)?;
            let scan = threshold_scan(big_k, n, t, &eps, r, noise_stream(stream, n, t), cfg.allow_large)?;
            curves.push(vec![n.into(), t.into(), 0.0.into(), scan.reference.lower_mean.into(), scan.reference.upper_mean.into()])?;
            for (e, b) in &scan.curve {
                curves.push(vec![n.into(), t.into(), (*e).into(), b.lower_mean.into(), b.upper_mean.into()])?;
            }
            thresholds.push(vec![
                n.into(),
                t.into(),
                scan.eps_lower.unwrap_or(f64::NAN).into(),
                scan.eps_upper.unwrap_or(f64::NAN).into(),
                threshold_prediction(n, t, gamma)?.into(),
            ])?;
            found.push((n as f64, scan.eps_lower, scan.eps_upper));
        }
        let fit_of = |sel: fn(&(f64, Option<f64>, Option<f64>)) -> Option<f64>| {
            let pts: Vec<(f64, f64)> = found.iter().filter_map(|p| sel(p).map(|e| (p.0, e))).collect();
            if pts.len() < 2 {
                return (f64::NAN, f64::NAN);
            }
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let f = power_law_exponent(&x, &y);
            (f.slope, f.r_squared)
        };
        let (al, rl) = fit_of(|p| p.1);
        let (au, ru) = fit_of(|p| p.2);
        fits.push(vec![t.into(), al.into(), rl.into(), au.into(), ru.into()])?;
    }
    Ok(vec![thresholds, fits, curves])
}

fn run_fig5(cfg: &ExperimentConfig, stream: SeededStream) -> Result<Vec<ResultTable>> {
    let n: usize = cfg.param("n")?;
    let samples: usize = cfg.param("samples")?;
    let lambdas: Vec<f64> = cfg.param_or("lambdas", vec![0.5, 1.0 / 26.0])?;
    let ranks: Vec<usize> = cfg.param_or("ranks", Vec::new())?;
    let mixtures: Vec<usize> = cfg.param_or("mixtures", vec![1, 2, 3, 4, 5, 6])?;
    let lm_samples: usize = cfg.param_or("lambda_min_samples", 0)?;
    let lm_m: Vec<usize> = cfg.param_or("lambda_min_m", vec![1])?;
    let mut pdf = ResultTable::new(
        "fig5-witness-pdfs",
        vec![
            Column::new("kind", ""),
            Column::new("param", ""),
            Column::new("w_center", ""),
            Column::new("density", ""),
            Column::new("theory_density", "").nullable(),
        ],
    );
    let mut det = ResultTable::new(
        "fig5-witness-pdfs-detection",
        vec![
            Column::new("kind", ""),
            Column::new("param", ""),
            Column::new("p_negative", ""),
            Column::new("p_negative_se", ""),
            Column::new("p_theory", "").nullable(),
            Column::new("mean_w", ""),
            Column::new("mean_w_se", ""),
        ],
    );
    let mut jobs: Vec<(&str, f64, EnsembleKind, usize)> = Vec::new();
    for &m in &mixtures {
        jobs.push(if m == 1 { ("random_phi", 1.0, EnsembleKind::RandomPhi, 1) } else { ("mixture", m as f64, EnsembleKind::RandomPhi, m) });
    }
    for &l in &lambdas {
        jobs.push(("schmidt_rank2", l, EnsembleKind::SchmidtRank2 { lambda: l }, 1));
    }
    for &k in &ranks {
        jobs.push(("rank_k", k as f64, EnsembleKind::RankK { k }, 1));
    }
    for (i, (label, param, kind, m)) in jobs.into_iter().enumerate() {
        let spec = WitnessEnsembleSpec::new(kind, n, m, samples, stream.substream(i as u64)).map_err(as_config)?;
        let s = sample_w(&spec)?;
        let theory = spec.theory();
        for (c, d) in s.histogram.centers().into_iter().zip(s.histogram.density()) {
            let th = theory.map(|k| theory_pdf(k, c)).transpose()?.unwrap_or(f64::NAN);
            pdf.push(vec![label.into(), param.into(), c.into(), d.into(), th.into()])?;
        }
        let p_th = theory.map(detection_probability).transpose()?.unwrap_or(f64::NAN);
        det.push(vec![
            label.into(),
            param.into(),
            s.negative.mean.into(),
            s.negative.std_err.into(),
            p_th.into(),
            s.mean.mean.into(),
            s.mean.std_err.into(),
        ])?;
    }
    let mut tables = vec![pdf, det];
    if lm_samples > 0 {
        let mut lm = ResultTable::new(
            "fig5-witness-pdfs-lambda-min",
            vec![
                Column::new("n", ""),
                Column::new("m", ""),
                Column::new("mean_lambda_min", ""),
                Column::new("se", ""),
                Column::new("reference", "").nullable(),
            ],
        );
        for &m in &lm_m {
            let st = lambda_min_stats(n, m, lm_samples, stream.child(&format!("lambda_min/{m}")))?;
            let reference = if m == 1 { -4.0 / (n as f64).sqrt() } else { f64::NAN };
            lm.push(vec![n.into(), m.into(), st.mean.mean.into(), st.mean.std_err.into(), reference.into()])?;
        }
        tables.push(lm);
    }
    Ok(tables)
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

fn run_fig6(cfg: &ExperimentConfig, stream: SeededStream) -> Result<Vec<ResultTable>> {
    let big_k: f64 = cfg.param("big_k")?;
    let epsilon: f64 = cfg.param("epsilon")?;
    let delta1: f64 = cfg.param("delta1")?;
    let sizes: Vec<usize> = cfg.param("n")?;
    let t_max: usize = cfg.param("t_max")?;
    let seeds: usize = cfg.param_or("deviation_seeds", 8)?;
    let mut traj = ResultTable::new(
        "fig6-dephasing-env",
        vec![
            Column::new("n", "levels"),
            Column::new("t", "kicks"),
            Column::new("S12_full", "bits"),
            Column::new("E12_full", "bits"),
            Column::new("S12_kick", "bits"),
            Column::new("E12_kick", "bits"),
        ],
    );
    let mut dev = ResultTable::new(
        "fig6-dephasing-env-deviation",
        vec![Column::new("n", "levels"), Column::new("entropy_rms", "bits"), Column::new("eof_rms", "bits")],
    );
    for &n in &sizes {
        let p = KickedEnvParams::new(big_k, n, epsilon, delta1).map_err(as_config)?;
        let tr = environment_experiment(&p, t_max, stream.child(&format!("trajectory/{n}")))?;
        for t in 0..=t_max {
            traj.push(vec![
                n.into(),
                t.into(),
                tr.entropy_full[t].into(),
                tr.eof_full[t].into(),
                tr.entropy_kick[t].into(),
                tr.eof_kick[t].into(),
            ])?;
        }
        if seeds > 0 {
            let d = environment_deviation(&p, t_max, seeds, stream.child(&format!("deviation/{n}")))?;
            dev.push(vec![n.into(), d.entropy_rms.into(), d.eof_rms.into()])?;
        }
    }
    Ok(vec![traj, dev])
}

fn run_markov(cfg: &ExperimentConfig, stream: SeededStream) -> Result<Vec<ResultTable>> {
    let n_qs: Vec<usize> = cfg.param("n_q")?;
    let decay_n: usize = cfg.param_or("purity_n_q", 4)?;
    let t_max: usize = cfg.param_or("t_max", 30)?;
    let samples: usize = cfg.param_or("samples", 1000)?;
    let kind = match cfg.param_or("circuit", "u4".to_string())?.as_str() {
        "u4" => CircuitKind::U4,
        "cnot" => CircuitKind::Cnot,
        other => return Err(Error::Config(format!("`params.circuit` must be \"u4\" or \"cnot\", got {other:?}"))),
    };
    let mut gaps = ResultTable::new(
        "markov-gap",
        vec![
            Column::new("n_q", ""),
            Column::new("gap", ""),
            Column::new("fixed_point_purity", ""),
            Column::new("lubkin", ""),
        ],
    );
    for &n in &n_qs {
        let model = markov_matrix(n, Representation::Reduced).map_err(as_config)?;
        let cut = Bipartition::qubits(n, &(0..n / 2).collect::<Vec<_>>())?;
        gaps.push(vec![
            n.into(),
            markov_gap(&model)?.into(),
            markov_fixed_point(&model, &cut)?.into(),
            lubkin_mean(cut.dim_a(), cut.dim_b()).into(),
        ])?;
    }
    let mut decay = ResultTable::new(
        "markov-gap-decay",
        vec![
            Column::new("t", "gates"),
            Column::new("mc_mean", ""),
            Column::new("mc_se", ""),
            Column::new("chain", "").nullable(),
        ],
    );
    if samples > 0 {
        let cut = Bipartition::qubits(decay_n, &(0..decay_n / 2).collect::<Vec<_>>()).map_err(as_config)?;
        let res = purity_decay_experiment(kind, &cut, t_max, samples, stream.child("decay")).map_err(as_config)?;
        for (t, est) in res.mean.iter().enumerate() {
            let chain = res.chain.as_ref().map_or(f64::NAN, |c| c[t]);
            decay.push(vec![t.into(), est.mean.into(), est.std_err.into(), chain.into()])?;
        }
    }
    Ok(vec![gaps, decay])
}

/// Config text for each built-in experiment at a small, fast size.
pub fn example_config(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1-entgen" => "experiment = \"fig1-entgen\"\nmaster_seed = 1\n\n[params]\nn_q = [4, 6]\nbig_k = 1.5\nt_max = 10\n",
        "fig2-histogram" => "experiment = \"fig2-histogram\"\nmaster_seed = 1\n\n[params]\nn_q = [4, 6]\nbig_k = 1.5\nt = 30\n",
        "fig3-noise-bounds" => {
            "experiment = \"fig3-noise-bounds\"\nmaster_seed = 1\n\n[params]\nn_q = [4]\nbig_k = 1.5\nt = 5\nepsilon = [0.0, 0.02]\nrealizations_lower = 4\nrealizations_upper = 8\n"
        }
        "fig4-threshold-scaling" => {
            "experiment = \"fig4-threshold-scaling\"\nmaster_seed = 1\n\n[params]\nn_q = [4]\nbig_k = 1.5\nt = [5]\nepsilon_min = 0.01\nepsilon_max = 0.3\nepsilon_points = 4\nrealizations_lower = 4\nrealizations_upper = 8\n"
        }
        "fig5-witness-pdfs" => {
            "experiment = \"fig5-witness-pdfs\"\nmaster_seed = 1\n\n[params]\nn = 64\nsamples = 300\nmixtures = [1, 2]\nlambdas = [0.5]\nranks = [2]\nlambda_min_samples = 8\nlambda_min_m = [1, 4]\n"
        }
        "fig6-dephasing-env" => {
            "experiment = \"fig6-dephasing-env\"\nmaster_seed = 1\n\n[params]\nbig_k = 99.72676\nepsilon = 0.008\ndelta1 = 0.01\nn = [64]\nt_max = 20\ndeviation_seeds = 2\n"
        }
        "markov-gap" => {
            "experiment = \"markov-gap\"\nmaster_seed = 1\n\n[params]\nn_q = [3, 4]\npurity_n_q = 4\nt_max = 10\nsamples = 100\n"
        }
        _ => return None,
    })
}
