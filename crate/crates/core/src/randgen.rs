//! Seeded random streams, Haar ensembles and the exact moment formulas they
//! reproduce.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaosmaps::sawtooth::{SawtoothMap, SawtoothParams};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::qstate::{DensityMatrix, StateVector};
use crate::stats::{self, Estimate, Histogram, KsResult};

/// Samples drawn from one substream before moving to the next. Fixed, so
/// results never depend on how work is split across threads.
pub const SAMPLE_CHUNK: usize = 64;

/// A reproducible ChaCha20 stream addressed by `(master_seed, stream_id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeededStream { master_seed, stream_id }
    }

    /// Stream for a named task under `master_seed`.
    pub fn from_label(master_seed: u64, label: &str) -> Self {
        SeededStream { master_seed, stream_id: splitmix64(fnv1a(label)) }
    }

    /// Derived stream for a named sub-task.
    pub fn child(&self, label: &str) -> Self {
        SeededStream {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ fnv1a(label)),
        }
    }

    /// Derived stream for the `index`-th independent task.
    pub fn substream(&self, index: u64) -> Self {
        SeededStream {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))),
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Draws `count` samples in parallel. Sample `i` always comes from chunk
/// `i / SAMPLE_CHUNK`, which owns its own substream, so the output is the
/// same for any thread count.
pub fn par_samples<T, F>(stream: SeededStream, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha20Rng) -> T + Sync,
{
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.substream(c as u64).rng();
            let len = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Runs `count` independent tasks in parallel, task `i` seeded by
/// `stream.substream(i)`. Results come back in task order.
pub fn par_tasks<T, F>(stream: SeededStream, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, SeededStream) -> T + Sync,
{
    (0..count).into_par_iter().map(|i| f(i, stream.substream(i as u64))).collect()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state of dimension `n`.
pub fn haar_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::param(format!("Haar state needs N >= 2, got {n}")));
    }
    haar_state_on(vec![n], rng)
}

/// Haar-random pure state on a tensor-product space.
pub fn haar_state_on<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Result<StateVector> {
    let n: usize = dims.iter().product();
    let amps = (0..n).map(|_| complex_gaussian(rng)).collect();
    StateVector::normalized(amps, dims)
}

/// Haar-random `d × d` unitary from the QR decomposition of a complex
/// Ginibre matrix, with the phases of `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Where the pure components of a mixture come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MixtureSource {
    IndependentHaar,
    /// States `ψ(t_0), ψ(t_0 + stride), ...` along a sawtooth-map orbit.
    /// The orbit starts from a Haar state drawn from the stream and
    /// `t_0 = stride`.
    MapOrbit { params: SawtoothParams, stride: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub m: usize,
    pub dims: Vec<usize>,
    pub source: MixtureSource,
}

impl MixtureSpec {
    pub fn haar(m: usize, dims: Vec<usize>) -> Self {
        MixtureSpec { m, dims, source: MixtureSource::IndependentHaar }
    }
}

/// The `m` pure components of a mixture, in order.
pub fn mixture_components<R: Rng + ?Sized>(spec: &MixtureSpec, rng: &mut R) -> Result<Vec<StateVector>> {
    if spec.m == 0 {
        return Err(Error::param("mixture needs m >= 1"));
    }
    match &spec.source {
        MixtureSource::IndependentHaar => {
            (0..spec.m).map(|_| haar_state_on(spec.dims.clone(), rng)).collect()
        }
        MixtureSource::MapOrbit { params, stride } => {
            if *stride == 0 {
                return Err(Error::param("orbit stride must be positive"));
            }
            let n = params.dim();
            if spec.dims.iter().product::<usize>() != n {
                return Err(Error::dim("mixture dims do not match the map dimension"));
            }
            let map = SawtoothMap::new(params)?;
            let mut amps = haar_state_on(spec.dims.clone(), rng)?.into_amplitudes();
            let mut out = Vec::with_capacity(spec.m);
            for _ in 0..spec.m {
                for _ in 0..*stride {
                    map.step_fft(&mut amps);
                }
                out.push(StateVector::normalized(amps.clone(), spec.dims.clone())?);
            }
            Ok(out)
        }
    }
}

/// Equal-weight mixture `ρ = Σ |ψ_i⟩⟨ψ_i| / m`.
pub fn random_mixture<R: Rng + ?Sized>(spec: &MixtureSpec, rng: &mut R) -> Result<DensityMatrix> {
    DensityMatrix::equal_mixture(&mixture_components(spec, rng)?)
}

/// Mean entanglement entropy (bits) of a Haar state with subsystem
/// dimensions `n_a ≤ n_b`. Rejects `n_a > n_b`; callers canonicalize.
pub fn page_mean(n_a: usize, n_b: usize) -> Result<f64> {
    if n_a < 1 || n_b < 1 {
        return Err(Error::param("dimensions must be positive"));
    }
    if n_a > n_b {
        return Err(Error::param(format!("page_mean expects N_A <= N_B, got {n_a} > {n_b}")));
    }
    let (a, b) = (n_a as f64, n_b as f64);
    Ok(a.log2() - a / (2.0 * b * std::f64::consts::LN_2))
}

/// Mean reduced purity of a Haar state.
pub fn lubkin_mean(n_a: usize, n_b: usize) -> f64 {
    let (a, b) = (n_a as f64, n_b as f64);
    (a + b) / (a * b + 1.0)
}

/// Large-N purity variance `2/N²` for a balanced cut of total dimension `n`.
pub fn lubkin_variance(n: usize) -> f64 {
    2.0 / (n as f64).powi(2)
}

/// Exact finite-size variance of the reduced purity of a Haar state.
pub fn purity_variance_exact(n_a: usize, n_b: usize) -> f64 {
    let (a, b) = (n_a as f64, n_b as f64);
    let n = a * b;
    2.0 * (a * a - 1.0) * (b * b - 1.0) / ((n + 1.0).powi(2) * (n + 2.0) * (n + 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SphereMoment {
    /// `⟨r_0⁴⟩ = 2/(N(N+1))`
    R0Fourth,
    /// `⟨r_0² r_1²⟩ = 1/(N(N+1))`
    R0SqR1Sq,
}

impl SphereMoment {
    pub fn exact(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            SphereMoment::R0Fourth => 2.0 / (n * (n + 1.0)),
            SphereMoment::R0SqR1Sq => 1.0 / (n * (n + 1.0)),
        }
    }
}

/// Monte-Carlo estimate of a moment of `r_i = |c_i|` over Haar states.
pub fn sphere_moment(n: usize, which: SphereMoment, samples: usize, stream: SeededStream) -> Result<Estimate> {
    if n < 2 {
        return Err(Error::param("sphere moments need N >= 2"));
    }
    let values = par_samples(stream, samples, |rng| {
        let psi = haar_state(n, rng).expect("N >= 2");
        let a = psi.amplitudes();
        match which {
            SphereMoment::R0Fourth => a[0].norm_sqr().powi(2),
            SphereMoment::R0SqR1Sq => a[0].norm_sqr() * a[1].norm_sqr(),
        }
    });
    Ok(Estimate::from_samples(&values))
}

#[derive(Debug, Clone, Serialize)]
pub struct PurityStats {
    pub samples: Vec<f64>,
    pub mean: Estimate,
    /// Unbiased sample variance with its normal-theory standard error.
    pub variance: Estimate,
    pub histogram: Histogram,
    /// KS test against a Gaussian with the sample mean and deviation.
    pub ks_gaussian: KsResult,
}

/// Reduced purity `Tr ρ_A²` of Haar states on `N_A × N_B`.
pub fn purity_histogram(n_a: usize, n_b: usize, samples: usize, stream: SeededStream) -> Result<PurityStats> {
    if samples < 2 {
        return Err(Error::param("need at least two samples"));
    }
    let values = par_samples(stream, samples, |rng| {
        let m = DMatrix::from_fn(n_a, n_b, |_, _| complex_gaussian(rng));
        let norm_sqr: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        let gram = &m * m.adjoint();
        gram.iter().map(|z| z.norm_sqr()).sum::<f64>() / (norm_sqr * norm_sqr)
    });
    let mean = Estimate::from_samples(&values);
    let var = stats::sample_variance(&values);
    let variance = Estimate { mean: var, std_err: var * (2.0 / (samples as f64 - 1.0)).sqrt() };
    let sd = var.sqrt();
    let ks_gaussian = stats::ks_test(&values, |x| stats::normal_cdf(x, mean.mean, sd));
    let histogram = Histogram::freedman_diaconis(&values);
    Ok(PurityStats { samples: values, mean, variance, histogram, ks_gaussian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{purity, reduced_density, Bipartition, Side};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = SeededStream::new(7, 3);
        let a: Vec<u64> = (0..4).map(|_| s.rng().random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut r1 = s.rng();
        let mut r2 = s.substream(0).rng();
        assert_ne!(r1.random::<u64>(), r2.random::<u64>());
        assert_ne!(s.child("a"), s.child("b"));
        assert_eq!(SeededStream::from_label(1, "x"), SeededStream::from_label(1, "x"));
    }

    #[test]
    fn par_samples_independent_of_pool_size() {
        let s = SeededStream::new(11, 0);
        let draw = |pool: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(pool)
                .build()
                .unwrap()
                .install(|| par_samples(s, 300, |rng| rng.random::<f64>()))
        };
        assert_eq!(draw(1), draw(4));
    }

    #[test]
    fn haar_state_rejects_small_n() {
        let mut rng = SeededStream::new(0, 0).rng();
        assert!(haar_state(1, &mut rng).is_err());
        assert!((haar_state(8, &mut rng).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = SeededStream::new(5, 0).rng();
        for d in [2, 4, 7] {
            let u = haar_unitary(d, &mut rng);
            let err = (u.adjoint() * &u - CMatrix::identity(d, d)).norm();
            assert!(err < 1e-10);
            assert!((u.determinant().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn haar_unitary_column_matches_state_moments() {
        // First column of U is a Haar vector: ⟨|u_00|⁴⟩ = 2/(d(d+1)).
        let d = 4;
        let values = par_samples(SeededStream::new(9, 1), 10_000, |rng| {
            haar_unitary(d, rng)[(0, 0)].norm_sqr().powi(2)
        });
        let est = Estimate::from_samples(&values);
        assert!(est.within_sigmas(SphereMoment::R0Fourth.exact(d), 3.0), "{est:?}");
    }

    #[test]
    fn haar_invariance_under_fixed_unitary() {
        let d = 4;
        let v = haar_unitary(d, &mut SeededStream::new(1, 1).rng());
        let values = par_samples(SeededStream::new(2, 2), 10_000, |rng| {
            let psi = haar_state(d, rng).unwrap();
            let x = nalgebra::DVector::from_column_slice(psi.amplitudes());
            (&v * x)[0].norm_sqr().powi(2)
        });
        let est = Estimate::from_samples(&values);
        assert!(est.within_sigmas(0.1, 3.0), "{est:?}");
    }

    #[test]
    fn mean_component_weight_is_uniform() {
        let n = 8;
        let values = par_samples(SeededStream::new(3, 0), 10_000, |rng| haar_state(n, rng).unwrap().amplitudes()[5].norm_sqr());
        assert!(Estimate::from_samples(&values).within_sigmas(1.0 / n as f64, 3.0));
    }

    #[test]
    fn bloch_cos_theta_is_uniform() {
        // For N = 2, cos θ = |c0|² − |c1|² is uniform on [−1, 1].
        let values = par_samples(SeededStream::new(4, 0), 5_000, |rng| {
            let a = haar_state(2, rng).unwrap().into_amplitudes();
            a[0].norm_sqr() - a[1].norm_sqr()
        });
        let ks = stats::ks_test(&values, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0));
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn closed_forms() {
        assert!((page_mean(64, 64).unwrap() - 5.278652479590914).abs() < 1e-9);
        for n_q in [4usize, 6, 8, 10] {
            let half = 1 << (n_q / 2);
            let expected = n_q as f64 / 2.0 - 1.0 / (2.0 * std::f64::consts::LN_2);
            assert!((page_mean(half, half).unwrap() - expected).abs() < 1e-12);
        }
        assert!(page_mean(4, 2).is_err());
        assert!((page_mean(4, 1 << 30).unwrap() - 2.0).abs() < 1e-8);
        assert!((lubkin_mean(2, 2) - 0.8).abs() < 1e-15);
        assert!((lubkin_mean(8, 8) - 16.0 / 65.0).abs() < 1e-15);
        assert!((lubkin_mean(4, 1 << 30) - 0.25).abs() < 1e-8);
        assert!((SphereMoment::R0Fourth.exact(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((SphereMoment::R0SqR1Sq.exact(4) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn sphere_moments_match() {
        let s = SeededStream::new(21, 0);
        let est = sphere_moment(4, SphereMoment::R0Fourth, 20_000, s).unwrap();
        assert!(est.within_sigmas(0.1, 3.0), "{est:?}");
        let est = sphere_moment(4, SphereMoment::R0SqR1Sq, 20_000, s.child("b")).unwrap();
        assert!(est.within_sigmas(0.05, 3.0), "{est:?}");
    }

    #[test]
    fn exact_purity_variance_matches_small_case() {
        let stats = purity_histogram(2, 2, 40_000, SeededStream::new(8, 8)).unwrap();
        assert!(stats.mean.within_sigmas(0.8, 3.0));
        assert!(stats.variance.within_sigmas(purity_variance_exact(2, 2), 3.0), "{:?}", stats.variance);
    }

    #[test]
    fn purity_sampler_agrees_with_reduced_density() {
        let mut rng = SeededStream::new(1, 2).rng();
        let psi = haar_state_on(vec![2; 4], &mut rng).unwrap();
        let cut = Bipartition::qubits(4, &[0, 1]).unwrap();
        let m = psi.matricize(&cut).unwrap();
        let gram = &m * m.adjoint();
        let p: f64 = gram.iter().map(|z| z.norm_sqr()).sum();
        assert!((p - purity(&reduced_density(&psi, &cut, Side::A).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn mixtures() {
        let mut rng = SeededStream::new(3, 3).rng();
        let pure = random_mixture(&MixtureSpec::haar(1, vec![16]), &mut rng).unwrap();
        assert!((purity(&pure) - 1.0).abs() < 1e-12);
        let mut last = 1.0;
        for m in [2, 8, 64, 512] {
            let rho = random_mixture(&MixtureSpec::haar(m, vec![16]), &mut rng).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            let p = purity(&rho);
            assert!(p < last);
            last = p;
        }
        assert!(last < 1.0 / 16.0 + 0.01);
    }

    #[test]
    fn map_orbit_mixture_has_bounded_rank() {
        let params = SawtoothParams::new(1.5, 4).unwrap();
        let spec = MixtureSpec { m: 3, dims: vec![16], source: MixtureSource::MapOrbit { params, stride: 2 } };
        let rho = random_mixture(&spec, &mut SeededStream::new(1, 1).rng()).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        let positive = rho.eigenvalues().iter().filter(|&&e| e > 1e-10).count();
        assert!(positive <= 3);
    }
}
