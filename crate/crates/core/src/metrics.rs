//! Information-theoretic functionals: entropies, entanglement fidelity,
//! coherent information, the QEC matrix with its Petz-optimality test, and
//! single-letter capacity estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{ChoiMatrix, DensityMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{self, re, C64, CMat, CVec, ZERO};

/// Eigenvalues below this floor are dropped from entropies.
const ENTROPY_EIG_FLOOR: f64 = 1e-12;

/// −Σ λ log₂ λ of a unit-trace PSD matrix, in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_bits(rho.matrix())
}

/// Entropy in bits of a Hermitian PSD matrix assumed unit-trace.
pub(crate) fn entropy_bits(m: &CMat) -> f64 {
    let (vals, _) = linalg::eigh(m);
    let mut s = 0.0;
    for &v in vals.iter() {
        if v > ENTROPY_EIG_FLOOR {
            s -= v * v.log2();
        }
    }
    s
}

/// Entropy of m / Tr(m); returns (bits, trace) so callers can report the
/// normalization deficit.
pub(crate) fn entropy_bits_renormalized(m: &CMat) -> (f64, f64) {
    let tr = linalg::trace(m).re;
    if tr <= 0.0 {
        return (0.0, tr);
    }
    (entropy_bits(&(m / re(tr))), tr)
}

/// Binary entropy h₂(x) in bits.
pub fn binary_entropy(x: f64) -> f64 {
    let mut s = 0.0;
    for p in [x, 1.0 - x] {
        if p > ENTROPY_EIG_FLOOR {
            s -= p * p.log2();
        }
    }
    s
}

/// Entanglement fidelity of a channel with equal leg dimension d:
/// F = (1/d²) Σ_k |Tr K_k|², renormalized by the output trace at the
/// maximally entangled input when the map is not trace-preserving.
pub fn entanglement_fidelity(ch: &KrausChannel) -> Result<f64> {
    if ch.in_dim() != ch.out_dim() {
        return Err(Error::DimensionMismatch(
            "entanglement fidelity needs in_dim = out_dim".into(),
        ));
    }
    let d = ch.in_dim() as f64;
    let mut num = 0.0;
    let mut denom = 0.0;
    for k in ch.ops() {
        num += linalg::trace(k).norm_sqr();
        denom += k.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok((num / (d * d)) / (denom / d))
}

/// The QEC matrix M[(μ,k),(ν,ℓ)] = ⟨μ_L| K_k† K_ℓ |ν_L⟩ with composite
/// index μ·K + k (logical index major).
#[derive(Clone, Debug)]
pub struct QecMatrix {
    matrix: CMat,
    logical_dim: usize,
    kraus_count: usize,
    /// ‖Gram(logical kets) − I‖_max; the construction assumes orthonormal
    /// codewords, so a non-trivial value here flags the inputs.
    gram_deviation: f64,
}

impl QecMatrix {
    pub fn new(matrix: CMat, logical_dim: usize, kraus_count: usize) -> Result<Self> {
        if matrix.nrows() != logical_dim * kraus_count {
            return Err(Error::DimensionMismatch("QEC matrix shape".into()));
        }
        Ok(Self {
            matrix: linalg::hermitize(&matrix),
            logical_dim,
            kraus_count,
            gram_deviation: 0.0,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn logical_dim(&self) -> usize {
        self.logical_dim
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus_count
    }

    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }
}

/// Build the QEC matrix of a Kraus set over orthonormal logical kets.
pub fn qec_matrix(logical: &[CVec], ch: &KrausChannel) -> Result<QecMatrix> {
    let d = logical.len();
    if d == 0 {
        return Err(Error::InvalidSpec("no logical kets".into()));
    }
    let dim = logical[0].len();
    if ch.in_dim() != dim {
        return Err(Error::DimensionMismatch(
            "logical kets do not match channel input".into(),
        ));
    }
    let mut gram_dev: f64 = 0.0;
    for (i, a) in logical.iter().enumerate() {
        for (j, b) in logical.iter().enumerate() {
            let g = a.dotc(b);
            let expect = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((g - re(expect)).norm());
        }
    }
    let kc = ch.ops().len();
    let images: Vec<Vec<CVec>> = logical
        .iter()
        .map(|ket| ch.ops().iter().map(|k| k * ket).collect())
        .collect();
    let mut m = CMat::zeros(d * kc, d * kc);
    for mu in 0..d {
        for k in 0..kc {
            for nu in 0..d {
                for l in 0..kc {
                    m[(mu * kc + k, nu * kc + l)] = images[mu][k].dotc(&images[nu][l]);
                }
            }
        }
    }
    let mut q = QecMatrix::new(m, d, kc)?;
    q.gram_deviation = gram_dev;
    Ok(q)
}

/// Commutator test [√M, 1_L ⊗ Tr_L √M] = 0: returns (max-norm, holds).
/// When it holds, the Petz decoder attains the optimal channel fidelity.
pub fn petz_optimality_check(m: &QecMatrix) -> (f64, bool) {
    let sqrt_m = linalg::sqrtm_psd(m.matrix());
    let t = linalg::ptrace_first(&sqrt_m, m.logical_dim(), m.kraus_count());
    let big = linalg::kron(&CMat::identity(m.logical_dim(), m.logical_dim()), &t);
    let comm = &sqrt_m * &big - &big * &sqrt_m;
    let norm = linalg::max_abs(&comm);
    (norm, norm < 1e-8)
}

/// Optimal channel fidelity from the QEC matrix:
/// F = (1/d²) ‖Tr_L √M‖²_F, exact when the Petz-optimality check holds
/// (otherwise a Petz lower bound).
pub fn optimal_fidelity_from_m(m: &QecMatrix) -> f64 {
    let d = m.logical_dim() as f64;
    let sqrt_m = linalg::sqrtm_psd(m.matrix());
    let t = linalg::ptrace_first(&sqrt_m, m.logical_dim(), m.kraus_count());
    linalg::frobenius(&t).powi(2) / (d * d)
}

/// A channel together with access to its complementary leg, in whichever
/// representation is available.
pub enum ChannelPair<'a> {
    /// Kraus form; the complementary output is computed from the Gram
    /// structure of the Kraus set, so the one-operator-per-output-vector
    /// complement never has to be materialized.
    Kraus(&'a KrausChannel),
    /// Explicit Kraus forms for both legs.
    KrausExplicit {
        channel: &'a KrausChannel,
        complement: &'a KrausChannel,
    },
    /// Compressed Choi matrices for both legs.
    Choi {
        sys: &'a ChoiMatrix,
        env: &'a ChoiMatrix,
    },
}

impl ChannelPair<'_> {
    pub fn in_dim(&self) -> usize {
        match self {
            Self::Kraus(ch) => ch.in_dim(),
            Self::KrausExplicit { channel, .. } => channel.in_dim(),
            Self::Choi { sys, .. } => sys.in_dim(),
        }
    }

    /// I_c(ρ) = S(ρ_S) − S(ρ_E) with both outputs renormalized before the
    /// entropies.
    pub fn coherent_information(&self, rho: &CMat) -> Result<f64> {
        match self {
            Self::Kraus(ch) => {
                let (s_sys, _) = entropy_bits_renormalized(&ch.apply(rho)?);
                let s_env = env_entropy_from_kraus(ch, rho)?;
                Ok(s_sys - s_env)
            }
            Self::KrausExplicit {
                channel,
                complement,
            } => {
                let (s_sys, _) = entropy_bits_renormalized(&channel.apply(rho)?);
                let (s_env, _) = entropy_bits_renormalized(&complement.apply(rho)?);
                Ok(s_sys - s_env)
            }
            Self::Choi { sys, env } => {
                let (s_sys, _) = entropy_bits_renormalized(&sys.apply(rho)?);
                let (s_env, _) = entropy_bits_renormalized(&env.apply(rho)?);
                Ok(s_sys - s_env)
            }
        }
    }
}

/// Entropy of the environment output of a Kraus channel at input ρ,
/// renormalized. Uses whichever Gram side is smaller: the K×K matrix
/// ρ_E[k,ℓ] = Tr[K_ℓ† K_k ρ], or its dual of size (out·in) when the Kraus
/// count is larger — the two share their nonzero spectrum.
fn env_entropy_from_kraus(ch: &KrausChannel, rho: &CMat) -> Result<f64> {
    if rho.nrows() != ch.in_dim() {
        return Err(Error::DimensionMismatch("input dimension".into()));
    }
    let kc = ch.ops().len();
    let dual_dim = ch.out_dim() * ch.in_dim();
    if kc <= dual_dim {
        let mut rho_e = CMat::zeros(kc, kc);
        for (k, kk) in ch.ops().iter().enumerate() {
            let k_rho = kk * rho;
            for (l, kl) in ch.ops().iter().enumerate() {
                let mut t = ZERO;
                for i in 0..ch.out_dim() {
                    for j in 0..ch.in_dim() {
                        t += kl[(i, j)].conj() * k_rho[(i, j)];
                    }
                }
                rho_e[(k, l)] = t;
            }
        }
        Ok(entropy_bits_renormalized(&rho_e).0)
    } else {
        let sqrt_rho = linalg::sqrtm_psd(rho);
        let mut m = CMat::zeros(dual_dim, dual_dim);
        for kk in ch.ops() {
            let w = kk * &sqrt_rho;
            let mut v = CVec::zeros(dual_dim);
            for a in 0..ch.out_dim() {
                for i in 0..ch.in_dim() {
                    v[a * ch.in_dim() + i] = w[(a, i)];
                }
            }
            for r in 0..dual_dim {
                if v[r] == ZERO {
                    continue;
                }
                for c in 0..dual_dim {
                    m[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        Ok(entropy_bits_renormalized(&m).0)
    }
}

/// I_c from an explicit channel/complement pair.
pub fn coherent_information(
    rho: &DensityMatrix,
    channel: &KrausChannel,
    complement: &KrausChannel,
) -> Result<f64> {
    ChannelPair::KrausExplicit {
        channel,
        complement,
    }
    .coherent_information(rho.matrix())
}

/// Result of the single-letter capacity maximization.
#[derive(Clone, Debug)]
pub struct CapacityEstimate {
    pub value: f64,
    pub argmax: DensityMatrix,
    /// number of optimizer starts
    pub starts: usize,
    /// total ascent iterations across starts
    pub iterations: usize,
    /// index of the winning start (0 = maximally mixed)
    pub best_start: usize,
    /// best value among the start points before ascent
    pub best_initial: f64,
}

fn params_to_rho(params: &[f64], d: usize) -> CMat {
    // lower-triangular Cholesky factor: real diagonal, complex below
    let mut l = CMat::zeros(d, d);
    let mut idx = 0;
    for i in 0..d {
        for j in 0..=i {
            if i == j {
                l[(i, j)] = re(params[idx]);
                idx += 1;
            } else {
                l[(i, j)] = C64::new(params[idx], params[idx + 1]);
                idx += 2;
            }
        }
    }
    let m = &l * l.adjoint();
    let tr = linalg::trace(&m).re.max(1e-300);
    m / re(tr)
}

fn rho_to_params(rho: &CMat, d: usize) -> Vec<f64> {
    // small diagonal shift keeps boundary states factorizable
    let shifted = rho + CMat::identity(d, d) * re(1e-12);
    let chol = shifted
        .clone()
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| linalg::sqrtm_psd(&shifted));
    let mut params = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..=i {
            if i == j {
                params.push(chol[(i, j)].re.max(1e-9));
            } else {
                params.push(chol[(i, j)].re);
                params.push(chol[(i, j)].im);
            }
        }
    }
    params
}

/// Maximize I_c over d-dimensional input states by multistart gradient
/// ascent on a Cholesky parametrization with finite-difference gradients.
/// Twenty starts: the maximally mixed state, the pure basis states, and
/// seeded random factors. Deterministic for a fixed seed.
pub fn maximize_coherent_info(pair: &ChannelPair, d: usize, seed: u64) -> Result<CapacityEstimate> {
    if pair.in_dim() != d {
        return Err(Error::DimensionMismatch(
            "channel input does not match logical dimension".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_starts = 20usize;
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(n_starts);
    starts.push(rho_to_params(DensityMatrix::maximally_mixed(d).matrix(), d));
    for b in 0..d.min(n_starts - 1) {
        let mut rho = CMat::zeros(d, d);
        rho[(b, b)] = re(1.0);
        starts.push(rho_to_params(&rho, d));
    }
    while starts.len() < n_starts {
        let v: Vec<f64> = (0..d * d).map(|_| rng.gen::<f64>() - 0.5).collect();
        starts.push(v);
    }

    let eval = |params: &[f64]| -> f64 {
        let rho = params_to_rho(params, d);
        pair.coherent_information(&rho).unwrap_or(f64::NEG_INFINITY)
    };

    let mut best_value = f64::NEG_INFINITY;
    let mut best_params = starts[0].clone();
    let mut best_start = 0;
    let mut best_initial = f64::NEG_INFINITY;
    let mut total_iters = 0;

    for (s_idx, start) in starts.iter().enumerate() {
        let mut p = start.clone();
        let mut f = eval(&p);
        best_initial = best_initial.max(f);
        let mut step = 0.25;
        let np = p.len();
        let h = 1e-6;
        for _iter in 0..200 {
            total_iters += 1;
            let mut g = vec![0.0; np];
            let mut gnorm = 0.0;
            for i in 0..np {
                let mut pp = p.clone();
                pp[i] += h;
                let fp = eval(&pp);
                pp[i] -= 2.0 * h;
                let fm = eval(&pp);
                g[i] = (fp - fm) / (2.0 * h);
                gnorm += g[i] * g[i];
            }
            gnorm = gnorm.sqrt();
            if gnorm < 1e-10 {
                break;
            }
            // backtracking ascent along the normalized gradient
            let mut converged = false;
            let mut accepted = false;
            while step > 1e-10 {
                let cand: Vec<f64> = p
                    .iter()
                    .zip(&g)
                    .map(|(x, gi)| x + step * gi / gnorm)
                    .collect();
                let fc = eval(&cand);
                if fc > f + 1e-14 {
                    converged = fc - f < 1e-11;
                    p = cand;
                    f = fc;
                    step = (step * 1.3).min(0.5);
                    accepted = true;
                    break;
                }
                step *= 0.4;
            }
            if !accepted || converged {
                break;
            }
        }
        if f > best_value + 1e-15 {
            best_value = f;
            best_params = p;
            best_start = s_idx;
        }
    }

    let rho = params_to_rho(&best_params, d);
    Ok(CapacityEstimate {
        value: best_value,
        argmax: DensityMatrix::new(rho).unwrap_or_else(|_| DensityMatrix::maximally_mixed(d)),
        starts: n_starts,
        iterations: total_iters,
        best_start,
        best_initial,
    })
}
