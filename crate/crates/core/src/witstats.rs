//! Statistics of entanglement witnesses on random states: samplers for the
//! rescaled expectation `w = N ⟨ψ|W|ψ⟩`, their limiting densities, detection
//! probabilities and the minimal partial-transpose eigenvalue of mixtures.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::entan::{self, rank_one_pure_expectation, WitnessKind, WitnessSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::qstate::{partial_transpose_matrix, Bipartition, DensityMatrix, StateVector};
use crate::randgen::{complex_gaussian, haar_state_on, par_samples, SeededStream};
use crate::stats::{normal_cdf, Estimate, Histogram};

/// Largest `N` for dense partial-transpose spectra of mixtures.
pub const MAX_DENSE_N: usize = 1 << 10;

/// Witness family sampled on Haar states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleKind {
    /// `Q = |φ⟩⟨φ|` with Haar `φ` on the full space.
    RandomPhi,
    /// `φ = √λ |00⟩ + √(1-λ) |11⟩`.
    SchmidtRank2 { lambda: f64 },
    /// `Q` the normalized projector on `k` random orthonormal vectors.
    RankK { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessEnsembleSpec {
    pub kind: EnsembleKind,
    /// Total dimension; must be a perfect square (balanced cut).
    pub n: usize,
    /// States per mixture; `1` means pure states.
    pub m: usize,
    pub samples: usize,
    pub stream: SeededStream,
}

fn side_dim(n: usize) -> Result<usize> {
    let d = (n as f64).sqrt().round() as usize;
    if d < 2 || d * d != n {
        return Err(Error::param(format!("N must be a perfect square >= 4, got {n}")));
    }
    Ok(d)
}

fn balanced_cut(n: usize) -> Result<Bipartition> {
    let d = side_dim(n)?;
    Bipartition::new(&[d, d], &[0])
}

impl WitnessEnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize, m: usize, samples: usize, stream: SeededStream) -> Result<Self> {
        side_dim(n)?;
        if m == 0 || samples < 2 {
            return Err(Error::param("need m >= 1 and at least two samples"));
        }
        match kind {
            EnsembleKind::SchmidtRank2 { lambda } if !(lambda > 0.0 && lambda < 1.0) => {
                return Err(Error::param(format!("λ must lie in (0, 1), got {lambda}")))
            }
            EnsembleKind::RankK { k } if k == 0 || k > n => {
                return Err(Error::param(format!("rank k must be in 1..={n}, got {k}")))
            }
            _ => {}
        }
        Ok(WitnessEnsembleSpec { kind, n, m, samples, stream })
    }

    /// The fixed witness of this batch.
    pub fn witness(&self) -> Result<WitnessSpec> {
        let cut = balanced_cut(self.n)?;
        let mut rng = self.stream.child("witness").rng();
        match self.kind {
            EnsembleKind::RandomPhi => {
                WitnessSpec::new(WitnessKind::RankOne(haar_state_on(cut.dims().to_vec(), &mut rng)?), cut)
            }
            EnsembleKind::SchmidtRank2 { lambda } => WitnessSpec::new(WitnessKind::SchmidtRank2 { lambda }, cut),
            EnsembleKind::RankK { k } => WitnessSpec::random_rank_k(k, cut, &mut rng),
        }
    }

    /// Limiting density of `w`, when one is known.
    pub fn theory(&self) -> Option<TheoryKind> {
        match self.kind {
            EnsembleKind::RandomPhi => Some(TheoryKind::Gaussian { variance: 1.0 / self.m as f64 }),
            EnsembleKind::RankK { k } => Some(TheoryKind::Gaussian { variance: 1.0 / (k * self.m) as f64 }),
            EnsembleKind::SchmidtRank2 { lambda } if self.m == 1 => Some(TheoryKind::SchmidtRank2 { lambda }),
            EnsembleKind::SchmidtRank2 { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WSamples {
    pub samples: Vec<f64>,
    pub mean: Estimate,
    /// Fraction of samples with `w < 0`.
    pub negative: Estimate,
    pub histogram: Histogram,
}

impl WSamples {
    fn from_samples(samples: Vec<f64>) -> Self {
        let mean = Estimate::from_samples(&samples);
        let neg = samples.iter().filter(|&&w| w < 0.0).count();
        let negative = Estimate::proportion(neg, samples.len());
        let histogram = Histogram::freedman_diaconis(&samples);
        WSamples { samples, mean, negative, histogram }
    }
}

/// Haar state as an `N_A × N_B` matrix.
fn haar_matrix<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let mut m = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let norm = linalg::frobenius_sq(&m).sqrt();
    m /= C64::new(norm, 0.0);
    m
}

/// Samples `w = N Tr(W ρ)` with `ρ` an equal mixture of `m` Haar states
/// (`ρ` pure for `m = 1`); the witness is drawn once per batch.
pub fn sample_w(spec: &WitnessEnsembleSpec) -> Result<WSamples> {
    let w = spec.witness()?;
    let cut = w.cut.clone();
    let comps: Vec<(f64, CMatrix)> = w
        .components()
        .into_iter()
        .map(|(weight, phi)| phi.matricize(&cut).map(|m| (weight, m)))
        .collect::<Result<_>>()?;
    let d = cut.dim_a();
    let (n, m) = (spec.n as f64, spec.m);
    let samples = par_samples(spec.stream.child("states"), spec.samples, |rng| {
        let mut acc = 0.0;
        for _ in 0..m {
            let psi = haar_matrix(d, rng);
            acc += comps.iter().map(|(weight, phi)| weight * rank_one_pure_expectation(phi, &psi)).sum::<f64>();
        }
        n * acc / m as f64
    });
    Ok(WSamples::from_samples(samples))
}

/// Closed-form large-`N` densities of `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TheoryKind {
    /// Normal with mean one.
    Gaussian { variance: f64 },
    /// Rank-two `Q` with Schmidt weights `λ`, `1 - λ`.
    SchmidtRank2 { lambda: f64 },
}

impl TheoryKind {
    pub fn gaussian_rank(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("rank must be positive"));
        }
        Ok(TheoryKind::Gaussian { variance: 1.0 / k as f64 })
    }

    pub fn mixture(m: usize) -> Result<Self> {
        Self::gaussian_rank(m)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TheoryKind::Gaussian { variance } if !(variance > 0.0) => Err(Error::param("variance must be positive")),
            TheoryKind::SchmidtRank2 { lambda } if !(lambda > 0.0 && lambda < 1.0) => {
                Err(Error::param(format!("λ must lie in (0, 1), got {lambda}")))
            }
            _ => Ok(()),
        }
    }
}

/// Below this `|λ - ½|` the rank-two density switches to its `λ = ½` limit.
const HALF_LIMIT: f64 = 2e-5;

fn rank2_parts(lambda: f64) -> (f64, f64) {
    let s = (lambda * (1.0 - lambda)).sqrt();
    (s, 1.0 - 2.0 * lambda)
}

pub fn theory_pdf(kind: TheoryKind, w: f64) -> Result<f64> {
    kind.validate()?;
    Ok(match kind {
        TheoryKind::Gaussian { variance } => {
            (-(w - 1.0).powi(2) / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
        }
        TheoryKind::SchmidtRank2 { lambda } => {
            let (s, d) = rank2_parts(lambda);
            if w < 0.0 {
                (w / s).exp() / (4.0 * s + 2.0)
            } else if d.abs() < HALF_LIMIT {
                (-2.0 * w).exp() * (2.0 * w * w + w + 0.25)
            } else {
                let mu = 1.0 - lambda;
                (lambda * (-w / lambda).exp() + mu * (-w / mu).exp()) / (d * d) + (-w / s).exp() / (4.0 * s - 2.0)
            }
        }
    })
}

pub fn theory_cdf(kind: TheoryKind, w: f64) -> Result<f64> {
    kind.validate()?;
    Ok(match kind {
        TheoryKind::Gaussian { variance } => normal_cdf(w, 1.0, variance.sqrt()),
        TheoryKind::SchmidtRank2 { lambda } => {
            let (s, d) = rank2_parts(lambda);
            let p0 = s / (4.0 * s + 2.0);
            if w < 0.0 {
                p0 * (w / s).exp()
            } else if d.abs() < HALF_LIMIT {
                p0 + 0.875 - (-2.0 * w).exp() * (w * w + 1.5 * w + 0.875)
            } else {
                let mu = 1.0 - lambda;
                let pos = (lambda * lambda * (-(-w / lambda).exp_m1()) + mu * mu * (-(-w / mu).exp_m1())) / (d * d);
                p0 + pos + s * (-(-w / s).exp_m1()) / (4.0 * s - 2.0)
            }
        }
    })
}

/// `P(w < 0)`: `erfc(1/√(2v))/2` for the Gaussian kinds, `1/(4 + 2/s)` with
/// `s = √(λ(1-λ))` for rank two.
pub fn detection_probability(kind: TheoryKind) -> Result<f64> {
    kind.validate()?;
    Ok(match kind {
        TheoryKind::Gaussian { variance } => 0.5 * erfc(1.0 / (2.0 * variance).sqrt()),
        TheoryKind::SchmidtRank2 { lambda } => 1.0 / (4.0 + 2.0 / rank2_parts(lambda).0),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaMinStats {
    pub n: usize,
    pub m: usize,
    pub samples: Vec<f64>,
    pub mean: Estimate,
    pub histogram: Histogram,
}

/// Minimal eigenvalue of `ρ^{T_B}` across a balanced cut, `ρ` an equal
/// mixture of `m` Haar states. `m = 1` uses the Schmidt spectrum; larger
/// `m` diagonalize densely and require `N ≤ 2^10`.
pub fn lambda_min_stats(n: usize, m: usize, samples: usize, stream: SeededStream) -> Result<LambdaMinStats> {
    let cut = balanced_cut(n)?;
    if m == 0 || samples < 2 {
        return Err(Error::param("need m >= 1 and at least two samples"));
    }
    if m > 1 && n > MAX_DENSE_N {
        return Err(Error::ResourceGuard(format!("dense mixtures limited to N <= {MAX_DENSE_N}")));
    }
    let dims = cut.dims().to_vec();
    let values: Vec<Result<f64>> = par_samples(stream, samples, |rng| {
        if m == 1 {
            let psi = haar_state_on(dims.clone(), rng)?;
            Ok(entan::pure_pt_spectrum(&psi, &cut)?[0])
        } else {
            let comps = (0..m).map(|_| haar_state_on(dims.clone(), rng)).collect::<Result<Vec<_>>>()?;
            let rho = DensityMatrix::equal_mixture(&comps)?;
            Ok(linalg::hermitian_eigenvalues(&partial_transpose_matrix(rho.matrix(), &cut))[0])
        }
    });
    let samples = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let mean = Estimate::from_samples(&samples);
    let histogram = Histogram::freedman_diaconis(&samples);
    Ok(LambdaMinStats { n, m, samples, mean, histogram })
}

/// Dense `λ_min` of a single state, for cross-checks.
pub fn lambda_min_dense(psi: &StateVector, cut: &Bipartition) -> Result<f64> {
    Ok(entan::partial_transpose_spectrum(&psi.to_density(), cut)?[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct MStarScan {
    pub n: usize,
    /// `(m, mean λ_min)` along the grid.
    pub grid: Vec<(usize, Estimate)>,
    /// Last grid point with negative mean and first with nonnegative mean.
    pub bracket: Option<(usize, usize)>,
    /// Linear interpolation of the zero crossing inside the bracket.
    pub estimate: Option<f64>,
}

/// Scans `m` over a doubling grid starting at `m_start` until the mean
/// `λ_min` turns nonnegative or `m_max` is passed.
pub fn locate_m_star(n: usize, m_start: usize, m_max: usize, samples: usize, stream: SeededStream) -> Result<MStarScan> {
    if m_start == 0 {
        return Err(Error::param("m_start must be positive"));
    }
    let mut grid = Vec::new();
    let mut m = m_start;
    let mut bracket = None;
    while m <= m_max {
        let stats = lambda_min_stats(n, m, samples, stream.substream(m as u64))?;
        grid.push((m, stats.mean));
        if stats.mean.mean >= 0.0 {
            if grid.len() >= 2 {
                bracket = Some((grid[grid.len() - 2].0, m));
            }
            break;
        }
        m *= 2;
    }
    let estimate = bracket.map(|(lo, hi)| {
        let y_lo = grid[grid.len() - 2].1.mean;
        let y_hi = grid[grid.len() - 1].1.mean;
        lo as f64 + (hi - lo) as f64 * (-y_lo) / (y_hi - y_lo)
    });
    Ok(MStarScan { n, grid, bracket, estimate })
}

#[derive(Debug, Clone, Serialize)]
pub struct MixtureW {
    pub n: usize,
    pub m: usize,
    /// Empirical `P(w < 0)` with its binomial standard error.
    pub probability: Estimate,
    pub theory: f64,
    pub mean: Estimate,
}

/// `P(w < 0)` for a fixed random rank-one witness on equal mixtures of `m`
/// Haar states.
pub fn mixture_w_experiment(n: usize, m: usize, samples: usize, stream: SeededStream) -> Result<MixtureW> {
    let spec = WitnessEnsembleSpec::new(EnsembleKind::RandomPhi, n, m, samples, stream)?;
    let w = sample_w(&spec)?;
    Ok(MixtureW { n, m, probability: w.negative, theory: detection_probability(TheoryKind::mixture(m)?)?, mean: w.mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randgen::haar_unitary;
    use crate::stats::ks_test;

    fn integrate(kind: TheoryKind, lo: f64, hi: f64, steps: usize) -> f64 {
        // Composite Simpson.
        let h = (hi - lo) / steps as f64;
        let f = |x: f64| theory_pdf(kind, x).unwrap();
        let mut s = f(lo) + f(hi);
        for i in 1..steps {
            s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn detection_probability_values() {
        let g = detection_probability(TheoryKind::Gaussian { variance: 1.0 }).unwrap();
        assert!((g - 0.15865525393145707).abs() < 1e-10, "{g}");
        let r = detection_probability(TheoryKind::SchmidtRank2 { lambda: 0.5 }).unwrap();
        assert!((r - 0.125).abs() < 1e-14);
        let r = detection_probability(TheoryKind::SchmidtRank2 { lambda: 1.0 / 26.0 }).unwrap();
        assert!((r - 5.0 / 72.0).abs() < 1e-14);
        let m2 = detection_probability(TheoryKind::mixture(2).unwrap()).unwrap();
        assert!((m2 - 0.07864960352514257).abs() < 1e-10);
        assert!(detection_probability(TheoryKind::SchmidtRank2 { lambda: 1.5 }).is_err());
        assert!(TheoryKind::mixture(0).is_err());
    }

    #[test]
    fn densities_normalized_and_consistent() {
        for kind in [
            TheoryKind::Gaussian { variance: 1.0 },
            TheoryKind::Gaussian { variance: 0.25 },
            TheoryKind::SchmidtRank2 { lambda: 0.5 },
            TheoryKind::SchmidtRank2 { lambda: 1.0 / 26.0 },
            TheoryKind::SchmidtRank2 { lambda: 0.3 },
        ] {
            let total = integrate(kind, -30.0, 0.0, 20_000) + integrate(kind, 0.0, 60.0, 40_000);
            assert!((total - 1.0).abs() < 1e-6, "{kind:?}: {total}");
            let neg = if let TheoryKind::SchmidtRank2 { .. } = kind { integrate(kind, -30.0, 0.0, 20_000) } else { theory_cdf(kind, 0.0).unwrap() };
            assert!((neg - detection_probability(kind).unwrap()).abs() < 1e-8);
            assert!((theory_cdf(kind, 80.0).unwrap() - 1.0).abs() < 1e-9);
            for w in [-1.0f64, 0.3, 2.0] {
                let num = integrate(kind, -30.0, w.min(0.0), 20_000) + if w > 0.0 { integrate(kind, 0.0, w, 20_000) } else { 0.0 };
                assert!((num - theory_cdf(kind, w).unwrap()).abs() < 1e-8, "{kind:?} {w}");
            }
        }
    }

    #[test]
    fn rank2_density_continuous_at_zero() {
        for lambda in [0.5, 0.2, 1.0 / 26.0] {
            let kind = TheoryKind::SchmidtRank2 { lambda };
            let left = theory_pdf(kind, -1e-12).unwrap();
            let right = theory_pdf(kind, 1e-12).unwrap();
            assert!((left - right).abs() < 1e-9, "{lambda}: {left} {right}");
            assert!((left - 1.0 / (4.0 * (lambda * (1.0 - lambda)).sqrt() + 2.0)).abs() < 1e-9);
        }
        let exact = TheoryKind::SchmidtRank2 { lambda: 0.5 };
        let near = TheoryKind::SchmidtRank2 { lambda: 0.5 - 1e-3 };
        for w in [0.1, 1.0, 3.0] {
            assert!((theory_pdf(exact, w).unwrap() - theory_pdf(near, w).unwrap()).abs() < 1e-4);
        }
    }

    #[test]
    fn gaussian_kind_sampling() {
        let spec = WitnessEnsembleSpec::new(EnsembleKind::RandomPhi, 1 << 10, 1, 10_000, SeededStream::new(40, 0)).unwrap();
        let s = sample_w(&spec).unwrap();
        assert!(s.mean.within_sigmas(1.0, 3.0), "{:?}", s.mean);
        assert!((s.negative.mean - 0.1587).abs() < 0.012, "{:?}", s.negative);
        let ks = ks_test(&s.samples, |x| normal_cdf(x, 1.0, 1.0));
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn rank2_sampling() {
        for (lambda, p) in [(0.5, 0.125), (1.0 / 26.0, 5.0 / 72.0)] {
            let kind = EnsembleKind::SchmidtRank2 { lambda };
            let spec = WitnessEnsembleSpec::new(kind, 1 << 10, 1, 10_000, SeededStream::new(31, 0)).unwrap();
            let s = sample_w(&spec).unwrap();
            assert!(s.mean.within_sigmas(1.0, 3.0));
            assert!(s.negative.within_sigmas(p, 3.0), "{lambda}: {:?}", s.negative);
            let theory = spec.theory().unwrap();
            let ks = ks_test(&s.samples, |x| theory_cdf(theory, x).unwrap());
            assert!(ks.p_value > 0.01, "{lambda}: {ks:?}");
        }
        let spec = WitnessEnsembleSpec::new(EnsembleKind::SchmidtRank2 { lambda: 1e-6 }, 1 << 10, 1, 10_000, SeededStream::new(32, 0)).unwrap();
        assert!(sample_w(&spec).unwrap().negative.mean < 1e-3);
    }

    #[test]
    fn rank2_invariant_under_local_rotation() {
        let n = 1 << 8;
        let cut = balanced_cut(n).unwrap();
        let mut rng = SeededStream::new(33, 0).rng();
        let (ua, ub) = (haar_unitary(16, &mut rng), haar_unitary(16, &mut rng));
        let mut phi = CMatrix::zeros(16, 16);
        phi[(0, 0)] = C64::new(0.5f64.sqrt(), 0.0);
        phi[(1, 1)] = C64::new(0.5f64.sqrt(), 0.0);
        let rotated = StateVector::from_matrix(&(&ua * phi * ub.transpose()), &cut).unwrap();
        let w = WitnessSpec::new(WitnessKind::RankOne(rotated), cut.clone()).unwrap();
        let samples = par_samples(SeededStream::new(34, 0), 10_000, |rng| {
            let psi = haar_state_on(cut.dims().to_vec(), rng).unwrap();
            n as f64 * entan::witness_expectation(&w, &psi).unwrap()
        });
        let neg = Estimate::proportion(samples.iter().filter(|&&x| x < 0.0).count(), samples.len());
        assert!(neg.within_sigmas(0.125, 3.0), "{neg:?}");
    }

    #[test]
    fn rank_k_variance() {
        let spec = WitnessEnsembleSpec::new(EnsembleKind::RankK { k: 4 }, 1 << 8, 1, 4000, SeededStream::new(35, 0)).unwrap();
        let s = sample_w(&spec).unwrap();
        let var = crate::stats::sample_variance(&s.samples);
        assert!((var * 4.0 - 1.0).abs() < 0.15, "{var}");
        assert!(s.mean.within_sigmas(1.0, 3.0));
    }

    #[test]
    fn mixtures_detect_less() {
        for (m, tol) in [(1, 3.0), (2, 3.0), (4, 3.0)] {
            let r = mixture_w_experiment(1 << 10, m, 10_000, SeededStream::new(36, m as u64)).unwrap();
            assert!(r.probability.within_sigmas(r.theory, tol), "m={m}: {:?} vs {}", r.probability, r.theory);
            assert!(r.mean.within_sigmas(1.0, 3.0));
        }
    }

    #[test]
    fn fast_lambda_min_matches_dense() {
        let cut = balanced_cut(1 << 8).unwrap();
        let mut rng = SeededStream::new(37, 0).rng();
        for _ in 0..3 {
            let psi = haar_state_on(cut.dims().to_vec(), &mut rng).unwrap();
            let fast = entan::pure_pt_spectrum(&psi, &cut).unwrap()[0];
            assert!((fast - lambda_min_dense(&psi, &cut).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn lambda_min_grows_with_m() {
        let means: Vec<f64> = [1usize, 4, 16, 64]
            .iter()
            .map(|&m| lambda_min_stats(64, m, 40, SeededStream::new(38, m as u64)).unwrap().mean.mean)
            .collect();
        assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
        assert!(lambda_min_stats(1 << 12, 2, 4, SeededStream::new(1, 0)).is_err());
        assert!(lambda_min_stats(32, 1, 4, SeededStream::new(1, 0)).is_err());
    }

    #[test]
    fn m_star_near_4n() {
        let scan = locate_m_star(64, 32, 2048, 24, SeededStream::new(39, 0)).unwrap();
        let m_star = scan.estimate.expect("sign change found");
        assert!(m_star > 128.0 && m_star < 512.0, "{scan:?}");
    }
}
