//! Acceptance checks run by `chaos-ent verify`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, Overrides};
use super::experiments::{
    convergence_time, Realizations, entanglement_generation, example_config, geometric_grid,
    power_law_exponent, random_state_entanglement, registry, run_experiment, sawtooth_spectrum, threshold_scan,
};
use super::table;
use crate::chaosmaps::classical::{diffusion_coefficient, lyapunov, lyapunov_tangent};
use crate::chaosmaps::kicked_env::{
    bessel_j0, environment_deviation, phase_kick_multipliers, phase_kick_multipliers_quadrature,
    random_phase_kick_channel, KickedEnvParams, HEADLINE_K,
};
use crate::chaosmaps::sawtooth::{
    fidelity_decay, momentum_eigenstate, NoiseConfig, SawtoothCircuit, SawtoothMap, SawtoothParams,
};
use crate::entan::{bell, concurrence, fano_lower_bound};
use crate::error::Result;
use crate::linalg::C64;
use crate::prcircuits::{
    markov_fixed_point, markov_gap, markov_matrix, purity_decay_experiment, CircuitKind, Representation,
};
use crate::qstate::{entanglement_entropy, purity, reduced_density, Bipartition, Side};
use crate::randgen::{haar_state_on, lubkin_mean, par_samples, sphere_moment, SeededStream, SphereMoment};
use crate::stats::{fit_through_origin, linear_fit, sample_variance, Estimate};
use crate::witstats::{lambda_min_stats, mixture_w_experiment, sample_w, EnsembleKind, WitnessEnsembleSpec};

/// Seed shared by every check; each criterion derives its own stream.
pub const VERIFY_SEED: u64 = 2008;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scale {
    Full,
    /// Smaller samples and sizes.
    Quick,
}

impl Scale {
    fn pick<T>(self, full: T, quick: T) -> T {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Target value, or the lower end of an accepted range.
    pub expected: f64,
    /// Allowed deviation, or the upper end of an accepted range.
    pub tolerance: f64,
    pub passed: bool,
    pub rule: &'static str,
}

impl Check {
    fn abs(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        let passed = (measured - expected).abs() <= tolerance;
        Check { name: name.into(), measured, expected, tolerance, passed, rule: "abs" }
    }

    fn rel(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        let passed = ((measured - expected) / expected).abs() <= tolerance;
        Check { name: name.into(), measured, expected, tolerance, passed, rule: "rel" }
    }

    fn sigmas(name: impl Into<String>, est: Estimate, expected: f64, sigmas: f64) -> Self {
        let tolerance = sigmas * est.std_err;
        let passed = (est.mean - expected).abs() <= tolerance;
        Check { name: name.into(), measured: est.mean, expected, tolerance, passed, rule: "abs" }
    }

    fn range(name: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        let passed = measured >= lo && measured <= hi;
        Check { name: name.into(), measured, expected: lo, tolerance: hi, passed, rule: "range" }
    }

    fn at_least(name: impl Into<String>, measured: f64, lo: f64) -> Self {
        Check { name: name.into(), measured, expected: lo, tolerance: f64::INFINITY, passed: measured >= lo, rule: "range" }
    }

    fn at_most(name: impl Into<String>, measured: f64, hi: f64) -> Self {
        Check { name: name.into(), measured, expected: f64::NEG_INFINITY, tolerance: hi, passed: measured <= hi, rule: "range" }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Check { name: name.into(), measured: v, expected: 1.0, tolerance: 0.0, passed: ok, rule: "flag" }
    }

    fn render(&self) -> String {
        let mark = if self.passed { "ok  " } else { "FAIL" };
        let rule = match self.rule {
            "abs" => format!("target {:.6} ± {:.3e}", self.expected, self.tolerance),
            "rel" => format!("target {:.6} ± {:.1}%", self.expected, 100.0 * self.tolerance),
            "range" => format!("range [{:.4}, {:.4}]", self.expected, self.tolerance),
            _ => "must hold".to_string(),
        };
        format!("  [{mark}] {}: {:.6} ({rule})", self.name, self.measured)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub runtime_s: f64,
    pub runtime_limit_s: Option<f64>,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        format!(
            "{} criterion {}: {} ({} checks, {} failed, {:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.checks.len(),
            failed,
            self.runtime_s
        )
    }

    pub fn render(&self) -> String {
        let mut s = self.summary_line();
        for c in &self.checks {
            s.push('\n');
            s.push_str(&c.render());
        }
        s
    }
}

fn finish(id: usize, title: &'static str, limit: Option<f64>, start: Instant, checks: Result<Vec<Check>>) -> CriterionReport {
    let runtime_s = start.elapsed().as_secs_f64();
    let mut checks = checks.unwrap_or_else(|e| vec![Check::flag(format!("ran without error ({e})"), false)]);
    if let Some(l) = limit {
        checks.push(Check::at_most("runtime (s)", runtime_s, l));
    }
    let passed = checks.iter().all(|c| c.passed);
    CriterionReport { id, title, passed, checks, runtime_s, runtime_limit_s: limit }
}

fn stream(id: usize) -> SeededStream {
    SeededStream::from_label(VERIFY_SEED, &format!("criterion-{id}"))
}

fn first_half(n_q: usize) -> Result<Bipartition> {
    Bipartition::qubits(n_q, &(0..n_q / 2).collect::<Vec<_>>())
}

pub fn criterion_1(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        let states = scale.pick(200, 100);
        for (i, n_q) in [4usize, 6, 8, 10].into_iter().enumerate() {
            let cut = first_half(n_q)?;
            let dims = vec![2; n_q];
            let pairs: Vec<Result<(f64, f64)>> = par_samples(stream(1).substream(i as u64), states, |rng| {
                let psi = haar_state_on(dims.clone(), rng)?;
                Ok((entanglement_entropy(&psi, &cut)?, purity(&reduced_density(&psi, &cut, Side::A)?)))
            });
            let (e, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
            let n = (1usize << n_q) as f64;
            checks.push(Check::sigmas(format!("n_q={n_q} mean entropy"), Estimate::from_samples(&e), random_state_entanglement(n_q), 3.0));
            checks.push(Check::sigmas(format!("n_q={n_q} mean purity"), Estimate::from_samples(&p), lubkin_mean(cut.dim_a(), cut.dim_b()), 3.0));
            checks.push(Check::rel(format!("n_q={n_q} purity variance"), sample_variance(&p), 2.0 / (n * n), 0.2));
        }
        Ok(checks)
    };
    finish(1, "Haar entropy and purity statistics", Some(120.0), start, run())
}

pub fn criterion_2(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let samples = scale.pick(100_000, 20_000);
        let mut checks = Vec::new();
        for (i, n) in [2usize, 4, 16].into_iter().enumerate() {
            let nf = n as f64;
            for (j, (which, exact)) in
                [(SphereMoment::R0Fourth, 2.0 / (nf * (nf + 1.0))), (SphereMoment::R0SqR1Sq, 1.0 / (nf * (nf + 1.0)))]
                    .into_iter()
                    .enumerate()
            {
                let est = sphere_moment(n, which, samples, stream(2).substream((2 * i + j) as u64))?;
                checks.push(Check::sigmas(format!("N={n} {which:?}"), est, exact, 3.0));
            }
        }
        Ok(checks)
    };
    finish(2, "Haar sphere moments", Some(30.0), start, run())
}

pub fn criterion_3(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let sizes: Vec<usize> = scale.pick(vec![4, 6, 8], vec![4, 6, 8]);
        let t_max = 30;
        let mut checks = Vec::new();
        let mut taus = Vec::new();
        for &n_q in &sizes {
            let series: Vec<f64> = entanglement_generation(1.5, n_q, t_max)?.into_iter().map(|p| p.0).collect();
            checks.push(Check::rel(format!("n_q={n_q} <E_AB>(t=30)"), series[t_max], random_state_entanglement(n_q), 0.02));
            let plateau = series[t_max / 2..].iter().sum::<f64>() / (t_max - t_max / 2 + 1) as f64;
            let tau = convergence_time(&series, plateau);
            checks.push(Check::flag(format!("n_q={n_q} convergence time found ({:.3})", tau.unwrap_or(f64::NAN)), tau.is_some()));
            if let Some(t) = tau {
                taus.push((n_q as f64, t));
            }
        }
        if taus.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = taus.into_iter().unzip();
            let fit = linear_fit(&x, &y);
            checks.push(Check::at_least("timescale slope vs n_q", fit.slope, 0.0));
            checks.push(Check::at_least("timescale vs n_q R^2", fit.r_squared, 0.9));
        }
        Ok(checks)
    };
    finish(3, "Entanglement generation by the sawtooth map", Some(300.0), start, run())
}

pub fn criterion_4(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let sizes: Vec<usize> = scale.pick(vec![4, 6, 8, 10], vec![4, 6, 8]);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &n_q in &sizes {
            let s = sawtooth_spectrum(1.5, n_q, 30)?;
            x.push(n_q as f64);
            y.push(s.relative_std().ln());
        }
        let fit = linear_fit(&x, &y);
        Ok(vec![Check::range("decay rate c of sigma/<E>", -fit.slope, 0.3, 0.65)])
    };
    finish(4, "Relative width of the bipartite entanglement distribution", Some(600.0), start, run())
}

fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

pub fn criterion_5(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let t_max = scale.pick(50, 20);
        let mut checks = Vec::new();
        for n_q in 1..=8usize {
            let p = SawtoothParams::new(1.5, n_q)?;
            let circuit = SawtoothCircuit::new(&p);
            checks.push(Check::abs(format!("n_q={n_q} gates per step"), circuit.gate_count() as f64, (3 * n_q * n_q + n_q) as f64, 0.0));
            let map = SawtoothMap::new(&p)?;
            let haar = haar_state_on(vec![2; n_q], &mut stream(5).substream(n_q as u64).rng())?;
            let mut worst: f64 = 1.0;
            for init in [momentum_eigenstate(n_q, 0), haar] {
                let mut a = init.amplitudes().to_vec();
                let mut b = a.clone();
                for _ in 0..t_max {
                    map.step_fft(&mut a);
                    circuit.step_ideal(&mut b);
                    worst = worst.min(overlap(&a, &b));
                }
            }
            checks.push(Check::at_least(format!("n_q={n_q} min fidelity over t<={t_max}"), worst, 1.0 - 1e-10));
        }
        Ok(checks)
    };
    finish(5, "Gate-level and FFT sawtooth agree", None, start, run())
}

pub fn criterion_6(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let sizes: Vec<usize> = scale.pick(vec![6, 8], vec![6]);
        let eps = [3e-3, 5e-3, 1e-2, 2e-2];
        let t_max = 30;
        let realizations = scale.pick(64, 64);
        let mut checks = Vec::new();
        for &n_q in &sizes {
            let p = SawtoothParams::new(1.5, n_q)?;
            let n_g = p.gate_count() as f64;
            let init = momentum_eigenstate(n_q, 0);
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for (i, &e) in eps.iter().enumerate() {
                let noise = NoiseConfig { epsilon: e, realizations, stream: stream(6).child(&format!("n{n_q}")).substream(i as u64) };
                let f = fidelity_decay(&p, &noise, &init, t_max)?;
                for (t, ft) in f.iter().enumerate().skip(1) {
                    x.push(e * e * n_g * t as f64);
                    y.push(-ft.ln());
                }
            }
            checks.push(Check::range(format!("n_q={n_q} fitted gamma"), fit_through_origin(&x, &y), 0.18, 0.40));
        }
        Ok(checks)
    };
    finish(6, "Fidelity decay under gate noise", Some(1200.0), start, run())
}

pub fn criterion_7(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let sizes: Vec<usize> = scale.pick(vec![4, 6, 8], vec![4, 6]);
        let t = 30;
        let gamma = 0.28;
        let eps = geometric_grid(1e-3, 0.06, scale.pick(12, 8))?;
        let mut checks = Vec::new();
        let mut found = Vec::new();
        for &n_q in &sizes {
            let r = scale.pick(Realizations::defaults(n_q), Realizations { lower: 8, upper: 32 });
            let s = stream(7).child(&format!("noise/n{n_q}/t{t}"));
            let scan = threshold_scan(1.5, n_q, t, &eps, r, s, false)?;
            let mut lower = vec![scan.reference.lower_mean];
            let mut upper = vec![scan.reference.upper_mean];
            lower.extend(scan.curve.iter().map(|c| c.1.lower_mean));
            upper.extend(scan.curve.iter().map(|c| c.1.upper_mean));
            let mono = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
            checks.push(Check::flag(format!("n_q={n_q} lower bound non-increasing in eps"), mono(&lower)));
            checks.push(Check::flag(format!("n_q={n_q} upper bound non-increasing in eps"), mono(&upper)));
            let worst = std::iter::once((0.0, scan.reference))
                .chain(scan.curve.iter().copied())
                .map(|(e, b)| b.lower_mean - fano_lower_bound(n_q, e, t, gamma))
                .fold(f64::INFINITY, f64::min);
            checks.push(Check::at_least(format!("n_q={n_q} min(lower - Fano prediction)"), worst, 0.0));
            checks.push(Check::flag(format!("n_q={n_q} lower threshold found"), scan.eps_lower.is_some()));
            checks.push(Check::flag(format!("n_q={n_q} upper threshold found"), scan.eps_upper.is_some()));
            found.push((n_q as f64, scan.eps_lower, scan.eps_upper));
        }
        for (label, pick) in [("lower", 1usize), ("upper", 2)] {
            let pts: Vec<(f64, f64)> =
                found.iter().filter_map(|f| if pick == 1 { f.1 } else { f.2 }.map(|e| (f.0, e))).collect();
            if pts.len() >= 2 {
                let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                checks.push(Check::range(format!("{label} threshold exponent a"), power_law_exponent(&x, &y).slope, 0.6, 1.1));
            }
        }
        Ok(checks)
    };
    finish(7, "Noisy distillable-entanglement bounds and thresholds", Some(1800.0), start, run())
}

pub fn criterion_8(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for n_q in 2..=10usize {
            let model = markov_matrix(n_q, Representation::Reduced)?;
            let mut worst: f64 = 0.0;
            for k in 1..n_q {
                let cut = Bipartition::qubits(n_q, &(0..k).collect::<Vec<_>>())?;
                worst = worst.max((markov_fixed_point(&model, &cut)? - lubkin_mean(cut.dim_a(), cut.dim_b())).abs());
            }
            checks.push(Check::abs(format!("n_q={n_q} fixed point vs Lubkin"), worst, 0.0, 1e-12));
        }
        for n_q in 2..=4usize {
            let full = markov_matrix(n_q, Representation::Full)?;
            let reduced = markov_matrix(n_q, Representation::Reduced)?;
            let mut worst: f64 = 0.0;
            for k in 1..n_q {
                let cut = Bipartition::qubits(n_q, &(0..k).collect::<Vec<_>>())?;
                let a = full.trajectory(&cut, 40)?;
                let b = reduced.trajectory(&cut, 40)?;
                worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
            }
            checks.push(Check::abs(format!("n_q={n_q} full vs reduced chain"), worst, 0.0, 1e-10));
        }
        let cut = first_half(4)?;
        let decay = purity_decay_experiment(CircuitKind::U4, &cut, 30, scale.pick(2000, 500), stream(8))?;
        let chain = decay.chain.clone().unwrap_or_default();
        let mut outside = 0usize;
        let mut worst_z: f64 = 0.0;
        for (est, c) in decay.mean.iter().zip(&chain) {
            let ok = if est.std_err > 0.0 { est.within_sigmas(*c, 3.0) } else { (est.mean - c).abs() <= 1e-12 };
            if !ok {
                outside += 1;
            }
            if est.std_err > 0.0 {
                worst_z = worst_z.max(est.z_score(*c));
            }
        }
        checks.push(Check::abs(format!("n_q=4 circuit purity points beyond 3 s.e. (max |z| {worst_z:.2})"), outside as f64, 0.0, 0.0));
        let gaps: Vec<f64> = (3..=7).map(|n| markov_gap(&markov_matrix(n, Representation::Reduced)?)).collect::<Result<_>>()?;
        let mono = gaps.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check::flag(format!("gap decreasing on n_q=3..7 ({:?})", gaps.iter().map(|g| (g * 1e5).round() / 1e5).collect::<Vec<_>>()), mono));
        Ok(checks)
    };
    finish(8, "Purity Markov chain", Some(300.0), start, run())
}

pub fn criterion_9(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let n = 1 << 10;
        let samples = scale.pick(10_000, 4_000);
        let s = stream(9);
        let mut checks = Vec::new();
        let p = |kind, i| -> Result<f64> {
            Ok(sample_w(&WitnessEnsembleSpec::new(kind, n, 1, samples, s.substream(i))?)?.negative.mean)
        };
        checks.push(Check::abs("P(w<0) Gaussian kind", p(EnsembleKind::RandomPhi, 0)?, 0.159, 0.012));
        checks.push(Check::abs("P(w<0) rank 2, lambda=1/2", p(EnsembleKind::SchmidtRank2 { lambda: 0.5 }, 1)?, 0.125, 0.012));
        checks.push(Check::abs("P(w<0) rank 2, lambda=1/26", p(EnsembleKind::SchmidtRank2 { lambda: 1.0 / 26.0 }, 2)?, 0.0694, 0.01));
        let mix_samples = scale.pick(20_000, 5_000);
        let (mut ms, mut lp) = (Vec::new(), Vec::new());
        for m in 1..=6usize {
            let r = mixture_w_experiment(n, m, mix_samples, s.child("mixture").substream(m as u64))?;
            ms.push(m as f64);
            lp.push(r.probability.mean.ln());
        }
        checks.push(Check::abs("slope of ln P(w<0) vs m", linear_fit(&ms, &lp).slope, -0.5, 0.15));
        let lm = lambda_min_stats(n, 1, scale.pick(4000, 1000), s.child("lambda_min"))?;
        checks.push(Check::rel("mean lambda_min", lm.mean.mean, -4.0 / (n as f64).sqrt(), 0.05));
        Ok(checks)
    };
    finish(9, "Entanglement witness statistics", Some(600.0), start, run())
}

pub fn criterion_10(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        let eps = 8e-3;
        let sizes: Vec<usize> = scale.pick(vec![1 << 9, 1 << 10, 1 << 11, 1 << 12], vec![1 << 9, 1 << 10, 1 << 11]);
        let t_max = scale.pick(1000, 400);
        let seeds = scale.pick(8, 4);
        let mut devs = Vec::new();
        for &n in &sizes {
            let p = KickedEnvParams::new(HEADLINE_K, n, eps, 1e-2)?;
            devs.push(environment_deviation(&p, t_max, seeds, stream(10).child(&format!("n{n}")))?);
        }
        let fmt = |v: Vec<f64>| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ");
        let s: Vec<f64> = devs.iter().map(|d| d.entropy_rms).collect();
        let e: Vec<f64> = devs.iter().map(|d| d.eof_rms).collect();
        let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check::flag(format!("S12 deviation decreasing in N ({})", fmt(s.clone())), dec(&s)));
        checks.push(Check::flag(format!("E12 deviation decreasing in N ({})", fmt(e.clone())), dec(&e)));

        let mut worst: f64 = 0.0;
        for &x in &[1e-3, 8e-3, 0.05, 0.3] {
            let closed = phase_kick_multipliers(x);
            let quad = phase_kick_multipliers_quadrature(x, 4096);
            for i in 0..4 {
                for j in 0..4 {
                    worst = worst.max((quad[i][j] - C64::new(closed[i][j], 0.0)).norm());
                }
            }
        }
        checks.push(Check::abs("phase-kick multipliers vs Bessel form", worst, 0.0, 1e-10));

        let mut rho = bell().to_density();
        let mut worst: f64 = 0.0;
        for t in 1..=200 {
            rho = random_phase_kick_channel(&rho, eps, 0.0, 0.0)?;
            worst = worst.max((concurrence(&rho)? - bessel_j0(4.0 * eps).abs().powi(t)).abs());
        }
        checks.push(Check::abs("Bell concurrence vs |J0(4 eps)|^t", worst, 0.0, 1e-8));
        Ok(checks)
    };
    finish(10, "Chaotic environment vs random phase kicks", Some(900.0), start, run())
}

pub fn criterion_11(scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let k = 1.5;
        let lambda = lyapunov_tangent(k, scale.pick(10_000, 2_000));
        let d_k = 10.0;
        let d = diffusion_coefficient(d_k, scale.pick(10_000, 4_000), 50, stream(11));
        Ok(vec![
            Check::rel("tangent-map Lyapunov, K=1.5", lambda, lyapunov(k), 0.05),
            Check::rel("diffusion coefficient, K=10", d.coefficient, PI * PI * d_k * d_k / 3.0, 0.10),
        ])
    };
    finish(11, "Classical sawtooth dynamics", Some(60.0), start, run())
}

fn csv_bytes(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let out = run_experiment(cfg)?;
    out.tables.iter().map(|t| Ok((t.name.clone(), table::to_csv(t, &out.metadata)?))).collect()
}

pub fn criterion_12(_scale: Scale) -> CriterionReport {
    let start = Instant::now();
    let run = || -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for e in registry() {
            let text = example_config(e.name).expect("every experiment has an example");
            let runs = [1usize, 3]
                .into_iter()
                .map(|w| {
                    let o = Overrides { seed: Some(77), workers: Some(w), output_dir: None };
                    csv_bytes(&ExperimentConfig::from_toml_str(text, &o)?)
                })
                .collect::<Result<Vec<_>>>()?;
            checks.push(Check::flag(format!("{} identical with 1 and 3 workers", e.name), runs[0] == runs[1]));
        }
        Ok(checks)
    };
    finish(12, "Determinism across worker counts", None, start, run())
}

pub type CriterionFn = fn(Scale) -> CriterionReport;

pub const CRITERIA: [CriterionFn; 12] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
    criterion_12,
];

/// Runs every criterion in order and returns the reports with a
/// rendered summary.
pub fn verify(scale: Scale) -> (Vec<CriterionReport>, String) {
    let reports: Vec<CriterionReport> = CRITERIA.iter().map(|c| c(scale)).collect();
    let mut text = String::new();
    for r in &reports {
        let _ = writeln!(text, "{}", r.render());
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    let _ = writeln!(text, "{passed}/{} criteria passed ({scale:?} scale)", reports.len());
    (reports, text)
}
