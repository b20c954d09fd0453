//! Quantum channel machinery: environment-assisted channel construction,
//! complementary channels, Choi matrices, encodings, and the Gram-isometry
//! compression that turns coherent-state schemes into small exact matrices.

use crate::error::{Error, Result};
use crate::fock::{beam_splitter, coherent_overlap, FockKet, FockOperator, TruncatedBasis};
use crate::linalg::{self, re, C64, CMat, CVec, ZERO};
#[cfg(test)]
use crate::linalg::ONE;

/// Kraus-extraction cutoff: environment-output indices are retained until
/// the cumulative trace reaches 1 − this.
const KRAUS_TRACE_TAIL: f64 = 1e-8;
/// Trace deficit beyond which a constructed channel is rejected.
const DEFICIT_LIMIT: f64 = 1e-4;
/// Eigenvalue cutoff for Kraus extraction from a Choi matrix.
const CHOI_EIG_CUTOFF: f64 = 1e-12;
/// Gram eigenvalue cutoff for pseudo-inverse square roots.
pub const GRAM_CUTOFF: f64 = 1e-10;

/// A density matrix with validated Hermiticity, trace, and positivity.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMat,
    dim: usize,
}

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch("density matrix not square".into()));
        }
        let herm_dev = linalg::max_abs(&(&matrix - matrix.adjoint())) / 2.0;
        if herm_dev > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "density matrix not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        let m = linalg::hermitize(&matrix);
        let tr = linalg::trace(&m).re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidSpec(format!(
                "density matrix trace {tr} is not 1"
            )));
        }
        let min_eig = linalg::min_eigenvalue(&m);
        if min_eig < -1e-10 {
            return Err(Error::NotPsd(min_eig));
        }
        Ok(Self { matrix: m, dim })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMat::identity(dim, dim) * re(1.0 / dim as f64),
            dim,
        }
    }

    pub fn from_ket(ket: &FockKet) -> Self {
        Self {
            matrix: ket.density(),
            dim: ket.dim(),
        }
    }

    /// Pure state from an arbitrary vector (normalized here).
    pub fn pure(v: &CVec) -> Self {
        let n = v.norm();
        let w = v / re(n);
        Self {
            matrix: CMat::from_fn(w.len(), w.len(), |i, j| w[i] * w[j].conj()),
            dim: w.len(),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let (vals, _) = linalg::eigh(&self.matrix);
        vals.iter().copied().collect()
    }
}

/// Index-ordering convention of a Choi matrix. Only the input-major
/// ordering J = Σ_{ij} |i⟩⟨j|_in ⊗ Λ(|i⟩⟨j|) is used; the tag exists so a
/// matrix built under a different convention can never be mixed in
/// silently.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChoiOrdering {
    InOut,
}

/// Choi matrix of a linear map, with leg dimensions and ordering tag.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    matrix: CMat,
    in_dim: usize,
    out_dim: usize,
    ordering: ChoiOrdering,
}

impl ChoiMatrix {
    pub fn new(matrix: CMat, in_dim: usize, out_dim: usize) -> Result<Self> {
        if matrix.nrows() != in_dim * out_dim || matrix.ncols() != in_dim * out_dim {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected {}",
                matrix.nrows(),
                matrix.ncols(),
                in_dim * out_dim
            )));
        }
        let herm_dev = linalg::max_abs(&(&matrix - matrix.adjoint())) / 2.0;
        if herm_dev > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "Choi matrix not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        Ok(Self {
            matrix: linalg::hermitize(&matrix),
            in_dim,
            out_dim,
            ordering: ChoiOrdering::InOut,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn ordering(&self) -> ChoiOrdering {
        self.ordering
    }

    /// Λ(|i⟩⟨j|), the (i, j) output-space block.
    pub fn block(&self, i: usize, j: usize) -> CMat {
        linalg::block(&self.matrix, self.out_dim, i, j)
    }

    /// Tr_out J, which equals I_in for a trace-preserving map.
    pub fn partial_trace_out(&self) -> CMat {
        let mut out = CMat::zeros(self.in_dim, self.in_dim);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let mut s = ZERO;
                for a in 0..self.out_dim {
                    s += self.matrix[(i * self.out_dim + a, j * self.out_dim + a)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// Apply the map: Λ(ρ) = Σ_{ij} ρ_{ij} Λ(|i⟩⟨j|).
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.in_dim || rho.ncols() != self.in_dim {
            return Err(Error::DimensionMismatch(
                "input does not match Choi in-dimension".into(),
            ));
        }
        let mut out = CMat::zeros(self.out_dim, self.out_dim);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                if rho[(i, j)] != ZERO {
                    out += self.block(i, j) * rho[(i, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix)
    }
}

/// A channel in Kraus representation with declared leg dimensions.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<CMat>,
    in_dim: usize,
    out_dim: usize,
    trace_preserving: bool,
    /// ‖Σ K†K − I‖_max; zero for an exactly trace-preserving channel.
    completeness_defect: f64,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| {
            Error::InvalidSpec("channel needs at least one Kraus operator".into())
        })?;
        let (out_dim, in_dim) = (first.nrows(), first.ncols());
        for k in &ops {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::DimensionMismatch(
                    "Kraus operators have inconsistent shapes".into(),
                ));
            }
        }
        let mut s = CMat::zeros(in_dim, in_dim);
        for k in &ops {
            s += k.adjoint() * k;
        }
        let defect = linalg::max_abs(&(&s - CMat::identity(in_dim, in_dim)));
        Ok(Self {
            ops,
            in_dim,
            out_dim,
            trace_preserving: defect < 1e-8,
            completeness_defect: defect,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(vec![CMat::identity(dim, dim)]).expect("identity channel")
    }

    pub fn from_unitary(u: &FockOperator) -> Self {
        Self::new(vec![u.matrix().clone()]).expect("unitary channel")
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    /// Largest eigenvalue of Σ K†K − I; positive values mean the map can
    /// inflate trace (encodings with non-orthogonal codewords do, by the
    /// codeword overlap).
    pub fn trace_excess(&self) -> f64 {
        let mut s = CMat::zeros(self.in_dim, self.in_dim);
        for k in &self.ops {
            s += k.adjoint() * k;
        }
        let (vals, _) = linalg::eigh(&(s - CMat::identity(self.in_dim, self.in_dim)));
        vals[vals.len() - 1]
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.in_dim || rho.ncols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel input is {}-dimensional, state is {}",
                self.in_dim,
                rho.nrows()
            )));
        }
        let mut out = CMat::zeros(self.out_dim, self.out_dim);
        for k in &self.ops {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }

    /// `self ∘ inner`; numerically null products are pruned.
    pub fn compose(&self, inner: &KrausChannel) -> Result<KrausChannel> {
        if self.in_dim != inner.out_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}→{} after {}→{}",
                self.in_dim, self.out_dim, inner.in_dim, inner.out_dim
            )));
        }
        let mut ops = Vec::new();
        for a in &self.ops {
            for b in &inner.ops {
                let p = a * b;
                if linalg::max_abs(&p) > 1e-14 {
                    ops.push(p);
                }
            }
        }
        if ops.is_empty() {
            ops.push(CMat::zeros(self.out_dim, inner.in_dim));
        }
        KrausChannel::new(ops)
    }

    /// The complementary channel: tracing out the original output leg.
    /// Its Kraus operators are indexed by the output basis, with
    /// C_j[k, i] = (K_k)[j, i].
    pub fn complement(&self) -> KrausChannel {
        let n_kraus = self.ops.len();
        let mut ops = Vec::with_capacity(self.out_dim);
        for j in 0..self.out_dim {
            let mut c = CMat::zeros(n_kraus, self.in_dim);
            for (k, op) in self.ops.iter().enumerate() {
                for i in 0..self.in_dim {
                    c[(k, i)] = op[(j, i)];
                }
            }
            if linalg::max_abs(&c) > 1e-14 {
                ops.push(c);
            }
        }
        if ops.is_empty() {
            ops.push(CMat::zeros(n_kraus, self.in_dim));
        }
        KrausChannel::new(ops).expect("complement construction is shape-consistent")
    }
}

/// The environment input of the beam splitter.
#[derive(Clone, Debug)]
pub enum EnvironmentState {
    Pure(FockKet),
    Mixed(DensityMatrix),
}

impl EnvironmentState {
    fn dim(&self) -> usize {
        match self {
            Self::Pure(k) => k.dim(),
            Self::Mixed(d) => d.dim(),
        }
    }

    /// Spectral components (weight, vector).
    fn components(&self) -> Vec<(f64, CVec)> {
        match self {
            Self::Pure(k) => vec![(1.0, k.amplitudes().clone())],
            Self::Mixed(d) => {
                let (vals, vecs) = linalg::eigh(d.matrix());
                let mut comps = Vec::new();
                for i in 0..vals.len() {
                    if vals[i] > 1e-12 {
                        comps.push((vals[i], CVec::from(vecs.column(i))));
                    }
                }
                comps
            }
        }
    }
}

/// Kraus operators of one spectral component: K_k = (I ⊗ ⟨k|) U (I ⊗ |ψ⟩),
/// or with the output legs swapped for the complementary channel.
fn component_kraus(
    u: &crate::fock::BeamSplitterUnitary,
    psi: &CVec,
    weight: f64,
    swap_legs: bool,
) -> Vec<CMat> {
    let dim = u.basis().dim();
    let mut ops = vec![CMat::zeros(dim, dim); dim];
    let w = re(weight.sqrt());
    for j in 0..u.num_sectors() {
        let (lo, hi) = u.sector_range(j);
        let blockm = u.sector(j);
        for m1 in lo..=hi {
            let k = j - m1; // second output leg index
            if k >= dim {
                continue;
            }
            for n1 in lo..=hi {
                let n2 = j - n1;
                if n2 >= dim {
                    continue;
                }
                let amp = re(blockm[(m1 - lo, n1 - lo)]) * psi[n2] * w;
                if swap_legs {
                    ops[m1][(k, n1)] += amp;
                } else {
                    ops[k][(m1, n1)] += amp;
                }
            }
        }
    }
    ops
}

fn assemble_channel(
    u: &crate::fock::BeamSplitterUnitary,
    env: &EnvironmentState,
    out_cutoff: Option<usize>,
    swap_legs: bool,
) -> Result<KrausChannel> {
    let dim = u.basis().dim();
    if env.dim() != dim {
        return Err(Error::DimensionMismatch(
            "environment state does not live on the channel basis".into(),
        ));
    }
    let cutoff = out_cutoff.unwrap_or(dim - 1).min(dim - 1);
    let mut kept = Vec::new();
    let mut total_trace = 0.0;
    for (weight, psi) in env.components() {
        let ops = component_kraus(u, &psi, weight, swap_legs);
        let mut cum = 0.0;
        for (k, op) in ops.into_iter().enumerate() {
            if k > cutoff {
                break;
            }
            let t: f64 = op.iter().map(|z| z.norm_sqr()).sum();
            cum += t;
            if t > 1e-30 {
                kept.push(op);
            }
            if cum >= weight * dim as f64 * (1.0 - KRAUS_TRACE_TAIL) {
                break;
            }
        }
        total_trace += cum;
    }
    let deficit = 1.0 - total_trace / dim as f64;
    if deficit > DEFICIT_LIMIT {
        return Err(Error::TruncationTooSmall(format!(
            "channel trace deficit {deficit:.3e} exceeds {DEFICIT_LIMIT:.0e}; \
             raise n_max or the output cutoff"
        )));
    }
    if kept.is_empty() {
        return Err(Error::InvalidSpec("no Kraus operators survived".into()));
    }
    KrausChannel::new(kept)
}

/// The passive environment-assisted channel
/// E_σ(ρ) = Tr_E[U_θ (ρ ⊗ σ) U_θ†] on the full truncated input space.
pub fn env_assisted_channel(
    env: &EnvironmentState,
    theta: f64,
    basis: TruncatedBasis,
    out_env_cutoff: Option<usize>,
) -> Result<KrausChannel> {
    let u = beam_splitter(theta, basis)?;
    assemble_channel(&u, env, out_env_cutoff, false)
}

/// The complementary channel ρ ↦ Tr_S[U_θ (ρ ⊗ σ) U_θ†]: the environment
/// output as a function of the system input.
pub fn complementary_channel(
    env: &EnvironmentState,
    theta: f64,
    basis: TruncatedBasis,
    out_sys_cutoff: Option<usize>,
) -> Result<KrausChannel> {
    let u = beam_splitter(theta, basis)?;
    assemble_channel(&u, env, out_sys_cutoff, true)
}

/// Both legs from a single beam-splitter build.
pub fn env_assisted_pair(
    env: &EnvironmentState,
    theta: f64,
    basis: TruncatedBasis,
    out_cutoff: Option<usize>,
) -> Result<(KrausChannel, KrausChannel)> {
    let u = beam_splitter(theta, basis)?;
    Ok((
        assemble_channel(&u, env, out_cutoff, false)?,
        assemble_channel(&u, env, out_cutoff, true)?,
    ))
}

/// The cat encoding: single Kraus Ĉ = |α⟩⟨0| + |−α⟩⟨1| mapping a qubit
/// onto the coherent-state pair. Trace-preserving only up to the codeword
/// overlap e^{−2α²}; consumers renormalize outputs.
pub fn cat_encoding(alpha: f64, basis: TruncatedBasis) -> Result<KrausChannel> {
    if alpha <= 0.0 {
        return Err(Error::InvalidSpec("cat encoding needs α > 0".into()));
    }
    let plus = crate::fock::make_state(&crate::fock::StateSpec::Coherent(re(alpha)), basis)?;
    let minus = crate::fock::make_state(&crate::fock::StateSpec::Coherent(re(-alpha)), basis)?;
    codeword_encoding(&[plus.amplitudes().clone(), minus.amplitudes().clone()])
}

/// Comb encoding Ĉ = Σ_μ |μ·spacing⟩⟨μ| onto coherent states.
pub fn comb_encoding(d: usize, spacing: f64, basis: TruncatedBasis) -> Result<KrausChannel> {
    if d < 2 {
        return Err(Error::InvalidSpec("encoding needs d ≥ 2".into()));
    }
    let mut codewords = Vec::with_capacity(d);
    for mu in 0..d {
        let ket = crate::fock::make_state(
            &crate::fock::StateSpec::Coherent(re(mu as f64 * spacing)),
            basis,
        )?;
        codewords.push(ket.amplitudes().clone());
    }
    codeword_encoding(&codewords)
}

/// Encoding from explicit codeword vectors: single Kraus Σ_μ |w_μ⟩⟨μ|.
/// Codewords need not be orthogonal.
pub fn codeword_encoding(codewords: &[CVec]) -> Result<KrausChannel> {
    let d = codewords.len();
    if d == 0 {
        return Err(Error::InvalidSpec("no codewords".into()));
    }
    let dim = codewords[0].len();
    let mut c = CMat::zeros(dim, d);
    for (mu, w) in codewords.iter().enumerate() {
        if w.len() != dim {
            return Err(Error::DimensionMismatch("codeword length mismatch".into()));
        }
        for i in 0..dim {
            c[(i, mu)] = w[i];
        }
    }
    KrausChannel::new(vec![c])
}

/// Choi matrix J = Σ_{ij} |i⟩⟨j|_in ⊗ Λ(|i⟩⟨j|).
pub fn kraus_to_choi(ch: &KrausChannel) -> ChoiMatrix {
    let (din, dout) = (ch.in_dim(), ch.out_dim());
    let n = din * dout;
    let mut j = CMat::zeros(n, n);
    for k in ch.ops() {
        // vec_k[(i, a)] = K_k[a, i]
        let mut v = CVec::zeros(n);
        for i in 0..din {
            for a in 0..dout {
                v[i * dout + a] = k[(a, i)];
            }
        }
        for r in 0..n {
            if v[r] == ZERO {
                continue;
            }
            for c in 0..n {
                j[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    ChoiMatrix::new(j, din, dout).expect("Choi built from Kraus is Hermitian")
}

/// Kraus extraction from a Choi matrix by eigendecomposition, eigenvalue
/// cutoff 1e-12. Errors if the matrix is negative beyond tolerance.
pub fn choi_to_kraus(j: &ChoiMatrix) -> Result<KrausChannel> {
    let (din, dout) = (j.in_dim(), j.out_dim());
    let (vals, vecs) = linalg::eigh(j.matrix());
    let scale = vals[vals.len() - 1].abs().max(1.0);
    if vals[0] < -1e-9 * scale {
        return Err(Error::NotPsd(vals[0]));
    }
    let mut ops = Vec::new();
    for l in 0..vals.len() {
        if vals[l] <= CHOI_EIG_CUTOFF {
            continue;
        }
        let s = re(vals[l].sqrt());
        let col = vecs.column(l);
        let mut k = CMat::zeros(dout, din);
        for i in 0..din {
            for a in 0..dout {
                k[(a, i)] = col[i * dout + a] * s;
            }
        }
        ops.push(k);
    }
    if ops.is_empty() {
        ops.push(CMat::zeros(dout, din));
    }
    KrausChannel::new(ops)
}

/// Isometry V = A (A†A)^{−1/2} onto the span of the given kets, built with
/// a pseudo-inverse square root (Gram eigenvalues below 1e-10 dropped).
/// Returns the isometry and the number of dropped directions.
pub fn gram_isometry(kets: &[FockKet]) -> Result<(FockOperator, usize)> {
    if kets.is_empty() {
        return Err(Error::InvalidSpec(
            "gram_isometry needs at least one ket".into(),
        ));
    }
    let dim = kets[0].dim();
    let m = kets.len();
    let mut a = CMat::zeros(dim, m);
    for (c, k) in kets.iter().enumerate() {
        if k.dim() != dim {
            return Err(Error::DimensionMismatch("kets on different bases".into()));
        }
        for i in 0..dim {
            a[(i, c)] = k.amplitudes()[i];
        }
    }
    let gram = a.adjoint() * &a;
    let (isqrt, dropped) = linalg::pinv_sqrt(&gram, GRAM_CUTOFF);
    Ok((FockOperator::new(&a * isqrt), dropped))
}

/// A coherent-state scheme: logical codewords |s_μ⟩ on mode 1 and the
/// environment superposition Σ_j f_j |t_j⟩ on mode 2. All Gram data is
/// analytic, so the compressed Choi matrices are exact (no truncation).
#[derive(Clone, Debug)]
pub struct CoherentScheme {
    pub logical_amps: Vec<C64>,
    pub env_amps: Vec<C64>,
    pub env_weights: Vec<C64>,
}

impl CoherentScheme {
    pub fn cat(alpha: f64, beta: f64) -> Self {
        // cat normalization includes the ⟨β|−β⟩ overlap
        let n = (2.0 * (1.0 + (-2.0 * beta * beta).exp())).sqrt();
        let w = re(1.0 / n);
        Self {
            logical_amps: vec![re(alpha), re(-alpha)],
            env_amps: vec![re(beta), re(-beta)],
            env_weights: vec![w, w],
        }
    }

    pub fn comb(d: usize, enc_spacing: f64, env_spacing: f64, f: &[C64]) -> Self {
        Self {
            logical_amps: (0..d).map(|mu| re(mu as f64 * enc_spacing)).collect(),
            env_amps: (0..f.len()).map(|j| re(j as f64 * env_spacing)).collect(),
            env_weights: f.to_vec(),
        }
    }

    /// Renormalize the environment weights so the superposition has unit
    /// norm including tooth overlaps.
    pub fn normalized_env(mut self) -> Self {
        let mut norm = 0.0;
        for (j, fj) in self.env_weights.iter().enumerate() {
            for (k, fk) in self.env_weights.iter().enumerate() {
                norm += (fj.conj() * *fk * coherent_overlap(self.env_amps[j], self.env_amps[k])).re;
            }
        }
        let s = re(1.0 / norm.sqrt());
        for w in &mut self.env_weights {
            *w *= s;
        }
        self
    }

    fn validate(&self) -> Result<()> {
        if self.logical_amps.len() < 2 {
            return Err(Error::InvalidSpec("scheme needs d ≥ 2".into()));
        }
        if self.env_amps.len() != self.env_weights.len() || self.env_amps.is_empty() {
            return Err(Error::InvalidSpec(
                "environment amplitude/weight mismatch".into(),
            ));
        }
        let mut norm = 0.0;
        for (j, fj) in self.env_weights.iter().enumerate() {
            for (k, fk) in self.env_weights.iter().enumerate() {
                norm += (fj.conj() * *fk * coherent_overlap(self.env_amps[j], self.env_amps[k])).re;
            }
        }
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidSpec(format!(
                "environment superposition norm {norm:.8} is not 1"
            )));
        }
        Ok(())
    }
}

/// Exact compressed Choi matrices (J̃, J̃ᶜ) of the scheme channel
/// Λ = E_env ∘ C at beam-splitter angle θ.
///
/// Output legs are compressed onto the span of the rotated coherent
/// amplitudes a_{μj} = s_μ cosθ + t_j sinθ (system side) and
/// b_{μj} = −s_μ sinθ + t_j cosθ (environment side). The (μ, ν) block of
/// J̃ is G_A^{1/2} E_{μν} G_A^{1/2} with
/// E_{μν}[(μ,j),(ν,k)] = f_j f_k* ⟨b_{νk}|b_{μj}⟩, and the complementary
/// matrix swaps the roles of the a and b amplitudes.
pub fn compressed_scheme_choi(
    scheme: &CoherentScheme,
    theta: f64,
) -> Result<(ChoiMatrix, ChoiMatrix)> {
    scheme.validate()?;
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::InvalidSpec("θ outside [0, π/2]".into()));
    }
    let d = scheme.logical_amps.len();
    let m = scheme.env_amps.len();
    let dm = d * m;
    let (ct, st) = (theta.cos(), theta.sin());
    let mut a_amp = vec![ZERO; dm];
    let mut b_amp = vec![ZERO; dm];
    for mu in 0..d {
        for j in 0..m {
            a_amp[mu * m + j] = scheme.logical_amps[mu] * re(ct) + scheme.env_amps[j] * re(st);
            b_amp[mu * m + j] = -scheme.logical_amps[mu] * re(st) + scheme.env_amps[j] * re(ct);
        }
    }
    let gram = |amps: &[C64]| CMat::from_fn(dm, dm, |r, c| coherent_overlap(amps[r], amps[c]));
    let g_a_sqrt = linalg::sqrtm_psd(&gram(&a_amp));
    let g_b_sqrt = linalg::sqrtm_psd(&gram(&b_amp));
    let f = &scheme.env_weights;

    let build = |g_sqrt: &CMat, other_amp: &[C64]| -> CMat {
        let mut j_full = CMat::zeros(d * dm, d * dm);
        for mu in 0..d {
            for nu in 0..d {
                let mut e = CMat::zeros(dm, dm);
                for j in 0..m {
                    for k in 0..m {
                        e[(mu * m + j, nu * m + k)] = f[j]
                            * f[k].conj()
                            * coherent_overlap(other_amp[nu * m + k], other_amp[mu * m + j]);
                    }
                }
                let blk = g_sqrt * e * g_sqrt;
                for r in 0..dm {
                    for c in 0..dm {
                        j_full[(mu * dm + r, nu * dm + c)] = blk[(r, c)];
                    }
                }
            }
        }
        j_full
    };

    let j_sys = ChoiMatrix::new(build(&g_a_sqrt, &b_amp), d, dm)?;
    let j_env = ChoiMatrix::new(build(&g_b_sqrt, &a_amp), d, dm)?;
    Ok((j_sys, j_env))
}

/// Compressed Choi pair for the cat scheme (|±α⟩ codewords, cat-β
/// environment): a pair of exact 8×8 matrices.
pub fn compressed_cat_choi(alpha: f64, beta: f64, theta: f64) -> Result<(ChoiMatrix, ChoiMatrix)> {
    if alpha <= 0.0 || beta <= 0.0 {
        return Err(Error::InvalidSpec("cat scheme needs α, β > 0".into()));
    }
    compressed_scheme_choi(&CoherentScheme::cat(alpha, beta), theta)
}

/// Compressed Choi pair for a coherent-comb scheme with `d` codewords at
/// spacing `enc_spacing` and `m` environment teeth at `env_spacing`.
pub fn compressed_comb_choi(
    d: usize,
    enc_spacing: f64,
    env_spacing: f64,
    f: &[C64],
    theta: f64,
) -> Result<(ChoiMatrix, ChoiMatrix)> {
    if d < 2 || f.len() < d {
        return Err(Error::InvalidSpec("comb scheme needs m ≥ d ≥ 2".into()));
    }
    // the environment ket must be normalized including tooth overlaps,
    // which matter once the teeth stop being well separated
    let scheme = CoherentScheme::comb(d, enc_spacing, env_spacing, f).normalized_env();
    compressed_scheme_choi(&scheme, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_state, StateSpec};
    use crate::linalg::kron;
    use rand::{Rng, SeedableRng};

    fn basis(n_max: usize) -> TruncatedBasis {
        TruncatedBasis::new(n_max).unwrap()
    }

    fn vacuum_env(b: TruncatedBasis) -> EnvironmentState {
        EnvironmentState::Pure(make_state(&StateSpec::Vacuum, b).unwrap())
    }

    #[test]
    fn vacuum_env_gives_pure_loss_kraus() {
        // oracle: analytic pure-loss operators
        // K_k[n−k, n] = √C(n,k) (√η)^{n−k} (−√(1−η))^k, from the coherent
        // transport U|α, 0⟩ = |α cosθ⟩ |−α sinθ⟩
        let b = basis(15);
        let theta = 0.72_f64;
        let (eta, lam) = (theta.cos().powi(2), theta.sin().powi(2));
        let ch = env_assisted_channel(&vacuum_env(b), theta, b, None).unwrap();
        assert!(ch.trace_preserving());
        let binom = |n: usize, k: usize| -> f64 {
            let mut v = 1.0;
            for i in 0..k {
                v *= (n - i) as f64 / (i + 1) as f64;
            }
            v
        };
        for (k, op) in ch.ops().iter().enumerate() {
            for n in 0..16 {
                for m in 0..16 {
                    let expect = if m + k == n {
                        binom(n, k).sqrt()
                            * eta.sqrt().powi((n - k) as i32)
                            * (-lam.sqrt()).powi(k as i32)
                    } else {
                        0.0
                    };
                    let got = op[(m, n)];
                    assert!(
                        (got.re - expect).abs() < 1e-9 && got.im.abs() < 1e-12,
                        "k={k} m={m} n={n}: got {got}, expect {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_angle_is_identity_channel() {
        let b = basis(8);
        let ch = env_assisted_channel(&vacuum_env(b), 0.0, b, None).unwrap();
        assert_eq!(ch.ops().len(), 1);
        assert!(linalg::max_abs(&(&ch.ops()[0] - CMat::identity(9, 9))) < 1e-12);
    }

    #[test]
    fn fock_env_matches_brute_force_partial_trace() {
        // oracle: dense two-mode product and partial trace
        let b = basis(12);
        let theta = (0.3_f64.sqrt()).acos(); // η = 0.3
        let env = make_state(&StateSpec::Fock(1), b).unwrap();
        let ch =
            env_assisted_channel(&EnvironmentState::Pure(env.clone()), theta, b, None).unwrap();
        let u = crate::fock::beam_splitter(theta, b).unwrap().dense();
        let dim = b.dim();
        let sigma = env.density();
        for (i, j) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
            let mut rho = CMat::zeros(dim, dim);
            rho[(i, j)] = ONE;
            let joint = u.matrix() * kron(&rho, &sigma) * u.matrix().adjoint();
            let expect = linalg::ptrace_second(&joint, dim, dim);
            let got = ch.apply(&rho).unwrap();
            assert!(
                linalg::max_abs(&(&got - &expect)) < 1e-10,
                "input |{i}⟩⟨{j}|"
            );
        }
    }

    #[test]
    fn complement_at_full_swap_returns_input() {
        let b = basis(10);
        let env = vacuum_env(b);
        let ch = complementary_channel(&env, std::f64::consts::FRAC_PI_2, b, None).unwrap();
        // E^c(|i⟩⟨j|) = (−1)^{i−j} |i⟩⟨j|: parity-conjugated identity
        let dim = b.dim();
        for (i, j) in [(0usize, 0usize), (1, 1), (2, 1), (3, 0)] {
            let mut rho = CMat::zeros(dim, dim);
            rho[(i, j)] = ONE;
            let got = ch.apply(&rho).unwrap();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let expect = &rho * re(sign);
            assert!(linalg::max_abs(&(&got - &expect)) < 1e-10);
        }
    }

    #[test]
    fn complement_of_vacuum_env_matches_partial_trace() {
        // oracle: direct partial trace over the system leg
        let b = basis(10);
        let theta = 0.5_f64;
        let env = vacuum_env(b);
        let ch = complementary_channel(&env, theta, b, None).unwrap();
        let u = crate::fock::beam_splitter(theta, b).unwrap().dense();
        let dim = b.dim();
        let vac = make_state(&StateSpec::Vacuum, b).unwrap().density();
        for (i, j) in [(0usize, 0usize), (1, 2), (2, 2)] {
            let mut rho = CMat::zeros(dim, dim);
            rho[(i, j)] = ONE;
            let joint = u.matrix() * kron(&rho, &vac) * u.matrix().adjoint();
            let expect = linalg::ptrace_first(&joint, dim, dim);
            let got = ch.apply(&rho).unwrap();
            assert!(linalg::max_abs(&(&got - &expect)) < 1e-10);
        }
    }

    #[test]
    fn mixed_environment_splits_into_components() {
        let b = basis(10);
        let theta = 0.8;
        let mut sigma = CMat::zeros(b.dim(), b.dim());
        sigma[(0, 0)] = re(0.25);
        sigma[(1, 1)] = re(0.75);
        let env = EnvironmentState::Mixed(DensityMatrix::new(sigma.clone()).unwrap());
        let ch = env_assisted_channel(&env, theta, b, None).unwrap();
        let u = crate::fock::beam_splitter(theta, b).unwrap().dense();
        let dim = b.dim();
        let mut rho = CMat::zeros(dim, dim);
        rho[(1, 1)] = ONE;
        let joint = u.matrix() * kron(&rho, &sigma) * u.matrix().adjoint();
        let expect = linalg::ptrace_second(&joint, dim, dim);
        let got = ch.apply(&rho).unwrap();
        assert!(linalg::max_abs(&(&got - &expect)) < 1e-10);
    }

    #[test]
    fn constructed_channels_are_subnormalized() {
        let b = basis(14);
        for theta in [0.3, 0.9, 1.4] {
            let env = EnvironmentState::Pure(make_state(&StateSpec::Fock(2), b).unwrap());
            let ch = env_assisted_channel(&env, theta, b, None).unwrap();
            assert!(ch.trace_excess() < 1e-8, "theta = {theta}");
        }
    }

    #[test]
    fn cat_encoding_gram_matrix() {
        let alpha = 1.3_f64;
        let b = basis(crate::fock::required_nmax(alpha));
        let enc = cat_encoding(alpha, b).unwrap();
        let c = &enc.ops()[0];
        let g = c.adjoint() * c;
        let e = (-2.0 * alpha * alpha).exp();
        assert!((g[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((g[(0, 1)].re - e).abs() < 1e-12);
        assert!((g[(1, 0)].re - e).abs() < 1e-12);
        assert!((g[(1, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_encoding_large_alpha_is_isometry() {
        let b = basis(crate::fock::required_nmax(4.0));
        let enc = cat_encoding(4.0, b).unwrap();
        let c = &enc.ops()[0];
        let g = c.adjoint() * c;
        assert!(linalg::max_abs(&(g - CMat::identity(2, 2))) < 1e-10);
    }

    #[test]
    fn cat_encoding_maps_plus_to_even_cat() {
        let alpha = 1.5_f64;
        let b = basis(crate::fock::required_nmax(alpha));
        let enc = cat_encoding(alpha, b).unwrap();
        let mut plus = CVec::zeros(2);
        plus[0] = re(1.0 / 2.0_f64.sqrt());
        plus[1] = re(1.0 / 2.0_f64.sqrt());
        let out = &enc.ops()[0] * plus;
        let cat = make_state(
            &StateSpec::Cat {
                alpha: re(alpha),
                parity: crate::fock::CatParity::Even,
            },
            b,
        )
        .unwrap();
        let out_n = &out / re(out.norm());
        assert!((out_n - cat.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn identity_choi_is_maximally_entangled() {
        let ch = KrausChannel::identity(2);
        let j = kraus_to_choi(&ch);
        // J = |Ω⟩⟨Ω| with |Ω⟩ = |00⟩ + |11⟩ (composite index i·2 + a)
        let mut omega = CVec::zeros(4);
        omega[0] = ONE;
        omega[3] = ONE;
        let expect = CMat::from_fn(4, 4, |r, c| omega[r] * omega[c].conj());
        assert!(linalg::max_abs(&(j.matrix() - expect)) < 1e-14);
        assert!(linalg::max_abs(&(j.partial_trace_out() - CMat::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn choi_kraus_round_trip_preserves_action() {
        // oracle: apply both representations to a basis of inputs
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut ops = Vec::new();
        for _ in 0..3 {
            ops.push(CMat::from_fn(3, 3, |_, _| {
                C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            }));
        }
        let mut s = CMat::zeros(3, 3);
        for k in &ops {
            s += k.adjoint() * k;
        }
        let (vals, _) = linalg::eigh(&s);
        let scale = re(1.0 / vals[vals.len() - 1].sqrt());
        for k in &mut ops {
            *k *= scale;
        }
        let ch = KrausChannel::new(ops).unwrap();
        let j = kraus_to_choi(&ch);
        let back = choi_to_kraus(&j).unwrap();
        for i in 0..3 {
            for jj in 0..3 {
                let mut rho = CMat::zeros(3, 3);
                rho[(i, jj)] = ONE;
                let a = ch.apply(&rho).unwrap();
                let b = back.apply(&rho).unwrap();
                assert!(linalg::max_abs(&(&a - &b)) < 1e-9);
            }
        }
    }

    #[test]
    fn dephasing_channel_has_diagonal_choi() {
        let s = re(1.0 / 2.0_f64.sqrt());
        let ident = CMat::identity(2, 2) * s;
        let mut z = CMat::zeros(2, 2);
        z[(0, 0)] = s;
        z[(1, 1)] = -s;
        let ch = KrausChannel::new(vec![ident, z]).unwrap();
        let j = kraus_to_choi(&ch);
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    assert!(j.matrix()[(r, c)].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn gram_isometry_orthonormal_inputs_pass_through() {
        let b = basis(6);
        let kets = vec![
            make_state(&StateSpec::Fock(0), b).unwrap(),
            make_state(&StateSpec::Fock(3), b).unwrap(),
        ];
        let (v, dropped) = gram_isometry(&kets).unwrap();
        assert_eq!(dropped, 0);
        assert!((v.matrix()[(0, 0)] - ONE).norm() < 1e-12);
        assert!((v.matrix()[(3, 1)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn gram_isometry_cat_pair() {
        // oracle: explicit 2×2 Gram with overlap e^{−2α²}
        let alpha = 2.0;
        let b = basis(crate::fock::required_nmax(alpha));
        let kets = vec![
            make_state(&StateSpec::Coherent(re(alpha)), b).unwrap(),
            make_state(&StateSpec::Coherent(re(-alpha)), b).unwrap(),
        ];
        let (v, dropped) = gram_isometry(&kets).unwrap();
        assert_eq!(dropped, 0);
        let vv = v.matrix().adjoint() * v.matrix();
        assert!(linalg::max_abs(&(vv - CMat::identity(2, 2))) < 1e-10);
    }

    #[test]
    fn gram_isometry_single_ket_normalizes() {
        let b = basis(crate::fock::required_nmax(0.7));
        let ket = make_state(&StateSpec::Coherent(re(0.7)), b).unwrap();
        let (v, _) = gram_isometry(std::slice::from_ref(&ket)).unwrap();
        assert!((v.matrix().column(0).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn compressed_choi_matrices_are_valid() {
        let (j, jc) = compressed_cat_choi(1.5, 3.0, 0.46).unwrap();
        for m in [j.matrix(), jc.matrix()] {
            assert!(linalg::max_abs(&(m - m.adjoint())) < 1e-9);
            assert!(linalg::min_eigenvalue(m) > -1e-9);
        }
        assert_eq!(j.matrix().nrows(), 8);
        assert_eq!(jc.matrix().nrows(), 8);
    }

    #[test]
    fn compressed_choi_small_angle_reduces_to_encoding_gram() {
        // at θ → 0 the system output is the encoded state itself, so block
        // traces equal codeword overlaps
        let (alpha, beta) = (1.2, 2.0);
        let (j, _) = compressed_cat_choi(alpha, beta, 1e-7).unwrap();
        let t00 = linalg::trace(&j.block(0, 0)).re;
        let t01 = linalg::trace(&j.block(0, 1));
        assert!((t00 - 1.0).abs() < 1e-8);
        let expect = coherent_overlap(re(-alpha), re(alpha));
        assert!((t01 - expect).norm() < 1e-6);
    }

    #[test]
    fn trace_excess_flags_encoding_inflation() {
        let alpha = 1.0;
        let b = basis(crate::fock::required_nmax(alpha));
        let enc = cat_encoding(alpha, b).unwrap();
        let excess = enc.trace_excess();
        assert!((excess - (-2.0 * alpha * alpha).exp()).abs() < 1e-10);
    }
}
