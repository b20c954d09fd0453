//! Truncated Fock-space linear algebra: mode operators, Gaussian unitaries,
//! the beam-splitter unitary, and constructors for every environment and
//! encoding state the schemes use.
//!
//! Everything is immutable after construction. Unitaries are built by
//! exponentiating the (anti-Hermitian) generator through a Hermitian
//! eigendecomposition, so they are unitary on the retained subspace to
//! solver precision rather than truncation precision.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, im, re, C64, CMat, CVec, ONE, ZERO};
#[cfg(test)]
use crate::linalg::kron;

/// Tolerance on the squared norm of constructed kets.
pub const NORM_TOL: f64 = 1e-10;
/// A constructed ket whose truncation leaks more than this errors out.
pub const LEAKAGE_TOL: f64 = 1e-8;
/// Envelope weight below which an approximate-GKP tooth is dropped.
const GKP_TOOTH_CUT: f64 = 0.02;

/// Photon-number cutoff needed to hold a displacement of magnitude `amp`.
pub fn required_nmax(amp: f64) -> usize {
    (amp * amp + 6.0 * amp + 10.0).ceil() as usize
}

/// A photon-number basis truncated at `n_max` (dimension `n_max + 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncatedBasis {
    n_max: usize,
}

impl TruncatedBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidSpec("n_max must be at least 1".into()));
        }
        Ok(Self { n_max })
    }

    /// Basis sized by the tail-bound rule `⌈|a|² + 6|a| + 10⌉` over all
    /// relevant displacement amplitudes.
    pub fn for_amplitudes(amps: &[f64]) -> Self {
        let n_max = amps
            .iter()
            .map(|&a| required_nmax(a.abs()))
            .max()
            .unwrap_or(10)
            .max(10);
        Self { n_max }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    fn check_displacement(&self, amp: f64) -> Result<()> {
        if required_nmax(amp.abs()) > self.n_max {
            return Err(Error::TruncationTooSmall(format!(
                "displacement amplitude {:.3} needs n_max >= {}, basis has {}",
                amp,
                required_nmax(amp.abs()),
                self.n_max
            )));
        }
        Ok(())
    }

    fn check_squeeze(&self, r: f64) -> Result<()> {
        let need = (4.0 * (2.0 * r.abs()).exp()).ceil() as usize;
        if need > self.n_max {
            return Err(Error::TruncationTooSmall(format!(
                "squeezing r = {:.3} needs n_max >= {}, basis has {}",
                r, need, self.n_max
            )));
        }
        Ok(())
    }
}

/// A normalized ket over a truncated basis, with its truncation-leakage
/// diagnostic (`1 - squared norm before renormalization`).
#[derive(Clone, Debug)]
pub struct FockKet {
    amplitudes: CVec,
    basis: TruncatedBasis,
    leakage: f64,
}

impl FockKet {
    /// Build from the truncation of an (assumed normalized) infinite vector.
    /// Errors if the truncation lost more than [`LEAKAGE_TOL`] of the norm.
    pub fn from_truncated(amplitudes: CVec, basis: TruncatedBasis) -> Result<Self> {
        Self::from_parts(amplitudes, basis, 1.0)
    }

    /// As [`from_truncated`](Self::from_truncated), but the untruncated
    /// squared norm is `true_norm_sqr` rather than 1.
    pub fn from_parts(amplitudes: CVec, basis: TruncatedBasis, true_norm_sqr: f64) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector has length {}, basis dimension is {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let kept = amplitudes.norm_squared();
        let leakage = (1.0 - kept / true_norm_sqr).max(0.0);
        if leakage > LEAKAGE_TOL {
            return Err(Error::TruncationTooSmall(format!(
                "ket leaks {:.3e} of its norm past n_max = {}",
                leakage,
                basis.n_max()
            )));
        }
        let normalized = &amplitudes / re(kept.sqrt());
        Ok(Self {
            amplitudes: normalized,
            basis,
            leakage,
        })
    }

    /// Build from a vector produced by truncated-operator arithmetic, where
    /// no exact tail mass is available. The leakage diagnostic is the
    /// occupation of the top few levels of the normalized vector, a proxy
    /// that grows whenever the true state presses against the cutoff.
    pub fn from_operator_output(amplitudes: CVec, basis: TruncatedBasis) -> Result<Self> {
        let n = amplitudes.len();
        let norm_sqr = amplitudes.norm_squared();
        if norm_sqr < 1e-300 {
            return Err(Error::InvalidSpec("zero vector".into()));
        }
        let window = 2;
        let top: f64 = (n - window..n).map(|i| amplitudes[i].norm_sqr()).sum();
        let leakage = top / norm_sqr;
        if leakage > LEAKAGE_TOL {
            return Err(Error::TruncationTooSmall(format!(
                "top {} levels hold {:.3e} of the state; raise n_max past {}",
                window,
                leakage,
                basis.n_max()
            )));
        }
        Ok(Self {
            amplitudes: &amplitudes / re(norm_sqr.sqrt()),
            basis,
            leakage,
        })
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn basis(&self) -> TruncatedBasis {
        self.basis
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn overlap(&self, other: &FockKet) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::DimensionMismatch(
                "kets live on different bases".into(),
            ));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// |ψ⟩⟨ψ| as a dense matrix.
    pub fn density(&self) -> CMat {
        let v = &self.amplitudes;
        CMat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn expectation(&self, op: &FockOperator) -> Result<C64> {
        if op.in_dim() != self.dim() || op.out_dim() != self.dim() {
            return Err(Error::DimensionMismatch(
                "operator does not match ket dimension".into(),
            ));
        }
        Ok(self.amplitudes.dotc(&(&op.matrix * &self.amplitudes)))
    }
}

/// A dense operator with explicit leg dimensions. Rectangular shapes are
/// isometries or truncated maps between bases.
#[derive(Clone, Debug)]
pub struct FockOperator {
    pub(crate) matrix: CMat,
    in_dim: usize,
    out_dim: usize,
}

impl FockOperator {
    pub fn new(matrix: CMat) -> Self {
        let (out_dim, in_dim) = (matrix.nrows(), matrix.ncols());
        Self {
            matrix,
            in_dim,
            out_dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(CMat::identity(dim, dim))
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

    pub fn dagger(&self) -> Self {
        Self::new(self.matrix.adjoint())
    }

    /// `self ∘ other`, refusing mixed dimensions.
    pub fn compose(&self, other: &FockOperator) -> Result<FockOperator> {
        if self.in_dim != other.out_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}x{} with {}x{}",
                self.out_dim, self.in_dim, other.out_dim, other.in_dim
            )));
        }
        Ok(Self::new(&self.matrix * &other.matrix))
    }

    pub fn apply(&self, ket: &FockKet) -> Result<CVec> {
        if self.in_dim != ket.dim() {
            return Err(Error::DimensionMismatch(
                "operator/ket dimension mismatch".into(),
            ));
        }
        Ok(&self.matrix * ket.amplitudes())
    }

    /// ‖U†U − I‖_max on the retained space.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.matrix.adjoint() * &self.matrix;
        let ident = CMat::identity(self.in_dim, self.in_dim);
        linalg::max_abs(&(g - ident))
    }
}

/// The single-mode ladder and quadrature operators on a basis.
pub struct ModeOperators {
    pub annihilation: FockOperator,
    pub creation: FockOperator,
    pub x: FockOperator,
    pub p: FockOperator,
}

/// â, â†, x̂ = (â + â†)/√2, p̂ = −i(â − â†)/√2.
pub fn mode_operators(basis: TruncatedBasis) -> ModeOperators {
    let dim = basis.dim();
    let mut a = CMat::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = re((n as f64).sqrt());
    }
    let adag = a.adjoint();
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    let x = (&a + &adag) * re(inv_sqrt2);
    let p = (&a - &adag) * im(-inv_sqrt2);
    ModeOperators {
        annihilation: FockOperator::new(a),
        creation: FockOperator::new(adag),
        x: FockOperator::new(x),
        p: FockOperator::new(p),
    }
}

/// exp(K) for anti-Hermitian K, through the eigendecomposition of iK.
fn exp_antihermitian(k: &CMat) -> CMat {
    let h = k * im(1.0); // Hermitian
    let (vals, vecs) = linalg::eigh(&h);
    let n = vals.len();
    let d = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::from_polar(1.0, -vals[i])
        } else {
            ZERO
        }
    });
    &vecs * d * vecs.adjoint()
}

/// Displacement D̂(α) = exp(α â† − α* â).
pub fn displacement(alpha: C64, basis: TruncatedBasis) -> Result<FockOperator> {
    basis.check_displacement(alpha.norm())?;
    let ops = mode_operators(basis);
    let k = ops.creation.matrix() * alpha - ops.annihilation.matrix() * alpha.conj();
    Ok(FockOperator::new(exp_antihermitian(&k)))
}

/// Squeeze Ŝ(r) = exp((r/2)(â² − â†²)); positive r narrows x̂.
pub fn squeeze(r: f64, basis: TruncatedBasis) -> Result<FockOperator> {
    basis.check_squeeze(r)?;
    let ops = mode_operators(basis);
    let a2 = ops.annihilation.matrix() * ops.annihilation.matrix();
    let k = (&a2 - a2.adjoint()) * re(r / 2.0);
    Ok(FockOperator::new(exp_antihermitian(&k)))
}

/// Phase rotation exp(iφ n̂).
pub fn rotation(phi: f64, basis: TruncatedBasis) -> FockOperator {
    let dim = basis.dim();
    FockOperator::new(CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::from_polar(1.0, phi * i as f64)
        } else {
            ZERO
        }
    }))
}

/// Bogoliubov parameters (u, v, γ) of a single-mode Gaussian unitary G with
/// G† â G = u â + v â† + γ and |u|² − |v|² = 1.
#[derive(Clone, Copy, Debug)]
pub struct GaussianParams {
    pub u: C64,
    pub v: C64,
    pub gamma: C64,
}

impl GaussianParams {
    pub fn identity() -> Self {
        Self {
            u: ONE,
            v: ZERO,
            gamma: ZERO,
        }
    }

    fn validate(&self) -> Result<()> {
        let s = self.u.norm_sqr() - self.v.norm_sqr();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGaussianParams(format!(
                "|u|^2 - |v|^2 = {s:.6}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Construct the Gaussian unitary realizing the given Bogoliubov transform,
/// as a product of rotations, a squeeze, and a displacement.
pub fn gaussian_unitary(params: GaussianParams, basis: TruncatedBasis) -> Result<FockOperator> {
    params.validate()?;
    let GaussianParams { u, v, gamma } = params;

    // Squeeze/rotation part B with B† â B = u â + v â†:
    // B = R(φ1) S(r) R(φ2) gives u = e^{i(φ1+φ2)} cosh r, v = −e^{i(φ1−φ2)} sinh r.
    let b = if v.norm() < 1e-14 {
        rotation(u.arg(), basis)
    } else {
        let r = u.norm().acosh();
        let phi_sum = u.arg();
        let phi_diff = (-v).arg();
        let phi1 = 0.5 * (phi_sum + phi_diff);
        let phi2 = 0.5 * (phi_sum - phi_diff);
        rotation(phi1, basis)
            .compose(&squeeze(r, basis)?)?
            .compose(&rotation(phi2, basis))?
    };

    // Trailing displacement: G = B D(δ) shifts the transform by uδ + vδ*,
    // so solve uδ + vδ* = γ as the real system
    //   [ Re(u+v)  -Im(u-v) ] [Re δ]   [Re γ]
    //   [ Im(u+v)   Re(u-v) ] [Im δ] = [Im γ]
    // whose determinant is |u|² − |v|² = 1 exactly.
    let (up, um) = (u + v, u - v);
    let det = up.re * um.re + up.im * um.im;
    let dx = (gamma.re * um.re + gamma.im * um.im) / det;
    let dy = (gamma.im * up.re - gamma.re * up.im) / det;
    let delta = C64::new(dx, dy);

    if delta.norm() < 1e-14 {
        Ok(b)
    } else {
        b.compose(&displacement(delta, basis)?)
    }
}

/// Two-mode beam-splitter unitary exp[θ(â₁†â₂ − â₁â₂†)], stored per
/// total-photon-number sector. The generator conserves n₁ + n₂, so each
/// retained block is exactly unitary.
pub struct BeamSplitterUnitary {
    theta: f64,
    basis: TruncatedBasis,
    /// blocks[j] is the real unitary on sector n₁ + n₂ = j, with rows and
    /// columns indexed by n₁ ∈ lo(j)..=hi(j).
    blocks: Vec<DMatrix<f64>>,
}

impl BeamSplitterUnitary {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn basis(&self) -> TruncatedBasis {
        self.basis
    }

    /// First-mode photon range (lo, hi) of sector j.
    pub fn sector_range(&self, j: usize) -> (usize, usize) {
        let n_max = self.basis.n_max();
        (j.saturating_sub(n_max), j.min(n_max))
    }

    pub fn sector(&self, j: usize) -> &DMatrix<f64> {
        &self.blocks[j]
    }

    pub fn num_sectors(&self) -> usize {
        self.blocks.len()
    }

    /// ⟨m₁, m₂|U|n₁, n₂⟩; zero across sectors by construction.
    pub fn element(&self, m1: usize, m2: usize, n1: usize, n2: usize) -> f64 {
        if m1 + m2 != n1 + n2 {
            return 0.0;
        }
        let j = n1 + n2;
        if j >= self.blocks.len() {
            return 0.0;
        }
        let (lo, hi) = self.sector_range(j);
        if m1 < lo || m1 > hi || n1 < lo || n1 > hi {
            return 0.0;
        }
        self.blocks[j][(m1 - lo, n1 - lo)]
    }

    /// Dense two-mode matrix with composite index |n₁, n₂⟩ = n₁·dim + n₂.
    pub fn dense(&self) -> FockOperator {
        let dim = self.basis.dim();
        let mut m = CMat::zeros(dim * dim, dim * dim);
        for j in 0..self.blocks.len() {
            let (lo, hi) = self.sector_range(j);
            for m1 in lo..=hi {
                for n1 in lo..=hi {
                    m[(m1 * dim + (j - m1), n1 * dim + (j - n1))] =
                        re(self.blocks[j][(m1 - lo, n1 - lo)]);
                }
            }
        }
        FockOperator::new(m)
    }

    /// Apply to a dense two-mode vector (same composite index convention).
    pub fn apply_two_mode(&self, v: &CVec) -> CVec {
        let dim = self.basis.dim();
        assert_eq!(v.len(), dim * dim);
        let mut out = CVec::zeros(dim * dim);
        for j in 0..self.blocks.len() {
            let (lo, hi) = self.sector_range(j);
            let width = hi - lo + 1;
            for row in 0..width {
                let m1 = lo + row;
                let mut acc = ZERO;
                for col in 0..width {
                    let n1 = lo + col;
                    acc += re(self.blocks[j][(row, col)]) * v[n1 * dim + (j - n1)];
                }
                out[m1 * dim + (j - m1)] = acc;
            }
        }
        out
    }
}

/// Beam splitter with mixing angle θ ∈ [0, π/2]; transmissivity η = cos²θ.
pub fn beam_splitter(theta: f64, basis: TruncatedBasis) -> Result<BeamSplitterUnitary> {
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::InvalidSpec(format!(
            "beam-splitter angle {theta} outside [0, π/2]"
        )));
    }
    let n_max = basis.n_max();
    let mut blocks = Vec::with_capacity(2 * n_max + 1);
    for j in 0..=(2 * n_max) {
        let lo = j.saturating_sub(n_max);
        let hi = j.min(n_max);
        let width = hi - lo + 1;
        if width == 1 {
            blocks.push(DMatrix::from_element(1, 1, 1.0));
            continue;
        }
        // The sector generator is real antisymmetric tridiagonal with
        // super/sub-diagonal ±θ√((n₁+1)(j−n₁)). Conjugating i·G by
        // diag(i^k) gives a real symmetric tridiagonal matrix, so the
        // block exponential reduces to one tridiagonal eigensolve.
        let diag = vec![0.0; width];
        let off: Vec<f64> = (0..width - 1)
            .map(|row| {
                let n1 = lo + row;
                theta * (((n1 + 1) * (j - n1)) as f64).sqrt()
            })
            .collect();
        let (vals, vecs) = linalg::sym_tridiag_eigen(&diag, &off);
        // exp(G)[a,b] = Re[ i^{a−b} Σ_m V[a,m] V[b,m] e^{−iλ_m} ], which by
        // the i^{a−b} cycle reduces to ±(V cosΛ Vᵀ) on even a−b and
        // ±(V sinΛ Vᵀ) on odd a−b.
        let vc = DMatrix::<f64>::from_fn(width, width, |a, m| vecs[(a, m)] * vals[m].cos());
        let vs = DMatrix::<f64>::from_fn(width, width, |a, m| vecs[(a, m)] * vals[m].sin());
        let cmat = &vc * vecs.transpose();
        let smat = &vs * vecs.transpose();
        let block = DMatrix::<f64>::from_fn(width, width, |a, b| {
            match (a as i64 - b as i64).rem_euclid(4) {
                0 => cmat[(a, b)],
                1 => smat[(a, b)],
                2 => -cmat[(a, b)],
                _ => -smat[(a, b)],
            }
        });
        blocks.push(block);
    }
    Ok(BeamSplitterUnitary {
        theta,
        basis,
        blocks,
    })
}

/// Cat-state parity: even is |α⟩ + |−α⟩, odd is |α⟩ − |−α⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatParity {
    Even,
    Odd,
}

/// GKP lattice kind; the stabilizer vectors live in [`crate::phase_space`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeKind {
    Square,
    Hexagonal,
}

/// Tagged description of a constructible state.
#[derive(Clone, Debug)]
pub enum StateSpec {
    Vacuum,
    Fock(usize),
    Coherent(C64),
    Cat { alpha: C64, parity: CatParity },
    SqueezedCat { alpha: C64, r: f64 },
    /// Coherent comb Σ_j f_j |j·spacing⟩.
    Comb { spacing: C64, amplitudes: Vec<C64> },
    /// Finite-energy GKP codeword `logical` on the given lattice.
    ApproxGkp {
        lattice: LatticeKind,
        delta: f64,
        logical: usize,
    },
}

/// Untruncated coherent-state amplitudes ⟨n|α⟩ up to the basis cutoff.
fn coherent_amplitudes(alpha: C64, dim: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[0] = re((-alpha.norm_sqr() / 2.0).exp());
    for n in 1..dim {
        v[n] = v[n - 1] * alpha / re((n as f64).sqrt());
    }
    v
}

/// ⟨a|b⟩ = exp(−|a|²/2 − |b|²/2 + a* b) for coherent states.
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (-re(a.norm_sqr() / 2.0) - re(b.norm_sqr() / 2.0) + a.conj() * b).exp()
}

/// Construct the state described by `spec` on `basis`.
pub fn make_state(spec: &StateSpec, basis: TruncatedBasis) -> Result<FockKet> {
    let dim = basis.dim();
    match spec {
        StateSpec::Vacuum => {
            let mut v = CVec::zeros(dim);
            v[0] = ONE;
            FockKet::from_truncated(v, basis)
        }
        StateSpec::Fock(n) => {
            if *n > basis.n_max() {
                return Err(Error::TruncationTooSmall(format!(
                    "Fock |{n}⟩ does not fit in n_max = {}",
                    basis.n_max()
                )));
            }
            let mut v = CVec::zeros(dim);
            v[*n] = ONE;
            FockKet::from_truncated(v, basis)
        }
        StateSpec::Coherent(alpha) => {
            basis.check_displacement(alpha.norm())?;
            FockKet::from_truncated(coherent_amplitudes(*alpha, dim), basis)
        }
        StateSpec::Cat { alpha, parity } => {
            basis.check_displacement(alpha.norm())?;
            let plus = coherent_amplitudes(*alpha, dim);
            let minus = coherent_amplitudes(-alpha, dim);
            let sign = match parity {
                CatParity::Even => 1.0,
                CatParity::Odd => -1.0,
            };
            let v = &plus + &minus * re(sign);
            // exact normalization including the ⟨α|−α⟩ overlap
            let overlap = coherent_overlap(*alpha, -alpha).re;
            let true_norm_sqr = 2.0 * (1.0 + sign * overlap);
            FockKet::from_parts(v, basis, true_norm_sqr)
        }
        StateSpec::SqueezedCat { alpha, r } => {
            let cat = make_state(
                &StateSpec::Cat {
                    alpha: *alpha,
                    parity: CatParity::Even,
                },
                basis,
            )?;
            let s = squeeze(*r, basis)?;
            FockKet::from_operator_output(s.apply(&cat)?, basis)
        }
        StateSpec::Comb {
            spacing,
            amplitudes,
        } => {
            if amplitudes.is_empty() {
                return Err(Error::InvalidSpec("comb needs at least one tooth".into()));
            }
            let m = amplitudes.len();
            basis.check_displacement(spacing.norm() * (m - 1) as f64)?;
            let mut v = CVec::zeros(dim);
            let mut true_norm_sqr = 0.0;
            for (j, fj) in amplitudes.iter().enumerate() {
                let aj = spacing * re(j as f64);
                v += coherent_amplitudes(aj, dim) * *fj;
                for (k, fk) in amplitudes.iter().enumerate() {
                    let ak = spacing * re(k as f64);
                    true_norm_sqr += (fj.conj() * fk * coherent_overlap(aj, ak)).re;
                }
            }
            FockKet::from_parts(v, basis, true_norm_sqr)
        }
        StateSpec::ApproxGkp {
            lattice,
            delta,
            logical,
        } => {
            if *delta <= 0.0 {
                return Err(Error::InvalidSpec("GKP envelope Δ must be positive".into()));
            }
            if *logical > 1 {
                return Err(Error::InvalidSpec("GKP codeword index must be 0 or 1".into()));
            }
            approx_gkp(*lattice, *delta, *logical, basis)
        }
    }
}

/// Phase-space points (t, weight) of the retained GKP teeth for codeword μ.
pub fn gkp_teeth(lattice: LatticeKind, delta: f64, logical: usize) -> Vec<([f64; 2], f64)> {
    let (u, v) = crate::phase_space::lattice_vectors(lattice);
    let half_v = [v[0] / 2.0, v[1] / 2.0];
    let mut teeth = Vec::new();
    let reach = 3 + (3.0 / delta / u[1].abs().max(1.0)) as i64;
    let range = -(reach + 2)..=(reach + 2);
    for s1 in range.clone() {
        for s2 in range.clone() {
            let t = [
                s1 as f64 * u[0] + s2 as f64 * v[0] + logical as f64 * half_v[0],
                s1 as f64 * u[1] + s2 as f64 * v[1] + logical as f64 * half_v[1],
            ];
            let w = (-delta * delta * (t[0] * t[0] + t[1] * t[1]) / 2.0).exp();
            if w >= GKP_TOOTH_CUT {
                // stabilizer phases cancel on the 4π lattice except for the
                // logical offset, which contributes (−1)^{s1·μ}
                let sign = if s1.rem_euclid(2) == 1 && logical == 1 {
                    -1.0
                } else {
                    1.0
                };
                teeth.push((t, sign * w));
            }
        }
    }
    teeth
}

/// n_max large enough to hold every retained tooth of the codeword pair.
///
/// Each tooth is a displaced squeezed state; the anti-squeezed quadrature
/// widens the photon-number tail by a factor e^r, so the plain coherent
/// rule underestimates. The constants are calibrated so the constructed
/// codewords pass the leakage check with margin for Δ ∈ [0.2, 0.45].
pub fn gkp_required_nmax(lattice: LatticeKind, delta: f64) -> usize {
    let r = -delta.ln();
    let mut amax = 0.0_f64;
    for logical in 0..2 {
        for (t, _) in gkp_teeth(lattice, delta, logical) {
            amax = amax.max(((t[0] * t[0] + t[1] * t[1]) / 2.0).sqrt());
        }
    }
    let reach = amax + 1.45 * r.abs().exp() + 2.0;
    (reach * reach).ceil() as usize + 20
}

fn approx_gkp(
    lattice: LatticeKind,
    delta: f64,
    logical: usize,
    basis: TruncatedBasis,
) -> Result<FockKet> {
    let r = -delta.ln();
    let fiducial = squeeze(r, basis)?;
    let dim = basis.dim();
    let mut vac = CVec::zeros(dim);
    vac[0] = ONE;
    let ssv = fiducial.matrix() * vac;
    let mut acc = CVec::zeros(dim);
    for (t, w) in gkp_teeth(lattice, delta, logical) {
        let alpha = C64::new(t[0], t[1]) / re(2.0_f64.sqrt());
        let d = displacement(alpha, basis)?;
        acc += (d.matrix() * &ssv) * re(w);
    }
    FockKet::from_operator_output(acc, basis)
}

/// Max deviation ‖(G₁′G₂′)† U_θ (G₁G₂) − U_θ‖_max over the subspace of
/// total photon number at most n_max/2 on both legs. The deviation is
/// small exactly when the Bogoliubov parameters satisfy the equivalence
/// conditions (equal u across all four, equal v, rotated displacements).
pub fn gaussian_conjugation_check(
    g1: GaussianParams,
    g2: GaussianParams,
    g1p: GaussianParams,
    g2p: GaussianParams,
    theta: f64,
    basis: TruncatedBasis,
) -> Result<f64> {
    for g in [&g1, &g2, &g1p, &g2p] {
        g.validate()?;
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) || theta <= 0.0 {
        return Err(Error::InvalidSpec(
            "conjugation check needs θ in (0, π/2)".into(),
        ));
    }
    let dim = basis.dim();
    let u = beam_splitter(theta, basis)?;
    let op1 = gaussian_unitary(g1, basis)?;
    let op2 = gaussian_unitary(g2, basis)?;
    let op1p = gaussian_unitary(g1p, basis)?;
    let op2p = gaussian_unitary(g2p, basis)?;

    let interior = basis.n_max() / 4;
    let mut dev: f64 = 0.0;
    for n1 in 0..=interior {
        for n2 in 0..=(interior - n1) {
            // (G1 ⊗ G2)|n1, n2⟩ as a two-mode matrix (rows mode 1, cols mode 2)
            let col1 = op1.matrix.column(n1);
            let col2 = op2.matrix.column(n2);
            let w = CMat::from_fn(dim, dim, |a, b| col1[a] * col2[b]);
            // U (G1 ⊗ G2)|n1, n2⟩
            let mut wv = CVec::zeros(dim * dim);
            for a in 0..dim {
                for b in 0..dim {
                    wv[a * dim + b] = w[(a, b)];
                }
            }
            let uv = u.apply_two_mode(&wv);
            // (G1' ⊗ G2')† applied via the reshape identity
            let uvm = CMat::from_fn(dim, dim, |a, b| uv[a * dim + b]);
            let z = op1p.matrix.adjoint() * uvm * op2p.matrix.conjugate();
            // compare against U|n1, n2⟩ on the interior output entries
            for m1 in 0..=interior {
                for m2 in 0..=(interior - m1) {
                    let ref_val = re(u.element(m1, m2, n1, n2));
                    dev = dev.max((z[(m1, m2)] - ref_val).norm());
                }
            }
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn basis(n_max: usize) -> TruncatedBasis {
        TruncatedBasis::new(n_max).unwrap()
    }

    #[test]
    fn annihilation_lowers_fock_one() {
        let b = basis(6);
        let ops = mode_operators(b);
        let one = make_state(&StateSpec::Fock(1), b).unwrap();
        let lowered = ops.annihilation.apply(&one).unwrap();
        let vac = make_state(&StateSpec::Vacuum, b).unwrap();
        assert!((lowered - vac.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn vacuum_x_variance_is_half() {
        // oracle: direct matrix product at n_max = 20
        let b = basis(20);
        let ops = mode_operators(b);
        let x2 = FockOperator::new(ops.x.matrix() * ops.x.matrix());
        let vac = make_state(&StateSpec::Vacuum, b).unwrap();
        let v = vac.expectation(&x2).unwrap();
        assert!((v.re - 0.5).abs() < 1e-12);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn canonical_commutator_on_interior() {
        let b = basis(20);
        let ops = mode_operators(b);
        let comm = ops.x.matrix() * ops.p.matrix() - ops.p.matrix() * ops.x.matrix();
        // interior: last row/column excluded
        let mut dev: f64 = 0.0;
        for i in 0..20 {
            for j in 0..20 {
                let expect = if i == j { im(1.0) } else { ZERO };
                dev = dev.max((comm[(i, j)] - expect).norm());
            }
        }
        assert!(dev < 1e-12);
    }

    #[test]
    fn displacement_zero_is_identity() {
        let b = basis(12);
        let d = displacement(ZERO, b).unwrap();
        assert!(linalg::max_abs(&(d.matrix() - CMat::identity(13, 13))) < 1e-12);
    }

    #[test]
    fn displaced_vacuum_overlap() {
        // |⟨0|D(2)|0⟩| = e^{−|α|²/2} at α = 2
        let b = basis(required_nmax(2.0));
        let d = displacement(re(2.0), b).unwrap();
        let got = d.matrix()[(0, 0)].norm();
        assert!((got - (-2.0_f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn displacement_poisson_statistics() {
        let alpha = 1.3;
        let b = basis(required_nmax(alpha));
        let d = displacement(re(alpha), b).unwrap();
        let mut fact = 1.0;
        for n in 0..8 {
            if n > 0 {
                fact *= n as f64;
            }
            let p = d.matrix()[(n, 0)].norm_sqr();
            let expect = (-alpha * alpha).exp() * alpha.powi(2 * n as i32) / fact;
            assert!((p - expect).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn displacement_group_inverse() {
        let b = basis(required_nmax(1.0));
        let d1 = displacement(re(1.0), b).unwrap();
        let d2 = displacement(re(-1.0), b).unwrap();
        let prod = d1.compose(&d2).unwrap();
        // the product deviates from identity only near the cutoff; check low block
        let mut dev: f64 = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { ONE } else { ZERO };
                dev = dev.max((prod.matrix()[(i, j)] - expect).norm());
            }
        }
        assert!(dev < 1e-9);
    }

    #[test]
    fn displacement_rejects_small_basis() {
        let b = basis(10);
        assert!(matches!(
            displacement(re(3.0), b),
            Err(Error::TruncationTooSmall(_))
        ));
    }

    #[test]
    fn squeeze_zero_is_identity() {
        let b = basis(8);
        let s = squeeze(0.0, b).unwrap();
        assert!(linalg::max_abs(&(s.matrix() - CMat::identity(9, 9))) < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_x_variance() {
        // oracle: exact Gaussian variance e^{−2r}/2
        let r = 0.7;
        let b = basis(40);
        let s = squeeze(r, b).unwrap();
        let vac = make_state(&StateSpec::Vacuum, b).unwrap();
        let sv = FockKet::from_operator_output(s.apply(&vac).unwrap(), b).unwrap();
        let ops = mode_operators(b);
        let x2 = FockOperator::new(ops.x.matrix() * ops.x.matrix());
        let var = sv.expectation(&x2).unwrap().re;
        assert!((var - (-2.0 * r).exp() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn squeeze_displacement_braiding() {
        // Ŝ(r) D̂(α e^r) = D̂(α) Ŝ(r) for real α, r
        let (alpha, r) = (0.5, 0.4);
        let b = basis(80);
        let lhs = squeeze(r, b)
            .unwrap()
            .compose(&displacement(re(alpha * r.exp()), b).unwrap())
            .unwrap();
        let rhs = displacement(re(alpha), b)
            .unwrap()
            .compose(&squeeze(r, b).unwrap())
            .unwrap();
        let mut dev: f64 = 0.0;
        for i in 0..20 {
            for j in 0..20 {
                dev = dev.max((lhs.matrix()[(i, j)] - rhs.matrix()[(i, j)]).norm());
            }
        }
        assert!(dev < 1e-8, "dev = {dev:.3e}");
    }

    #[test]
    fn unitarity_of_constructors() {
        let b = basis(30);
        assert!(displacement(re(1.5), b).unwrap().unitarity_defect() < 1e-9);
        assert!(squeeze(0.6, b).unwrap().unitarity_defect() < 1e-9);
        assert!(rotation(0.83, b).unitarity_defect() < 1e-12);
    }

    #[test]
    fn beam_splitter_single_photon() {
        // oracle: the 2x2 sector rotation, U|1,0⟩ = cosθ|1,0⟩ − sinθ|0,1⟩
        let theta = 0.6;
        let b = basis(5);
        let u = beam_splitter(theta, b).unwrap();
        assert!((u.element(1, 0, 1, 0) - theta.cos()).abs() < 1e-12);
        assert!((u.element(0, 1, 1, 0) + theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_hong_ou_mandel() {
        // oracle: 3x3 sector exponential; U_{π/4}|1,1⟩ = (|2,0⟩ − |0,2⟩)/√2
        let b = basis(5);
        let u = beam_splitter(FRAC_PI_4, b).unwrap();
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((u.element(2, 0, 1, 1) - inv_sqrt2).abs() < 1e-12);
        assert!((u.element(0, 2, 1, 1) + inv_sqrt2).abs() < 1e-12);
        assert!(u.element(1, 1, 1, 1).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_zero_angle_is_identity() {
        let b = basis(4);
        let u = beam_splitter(0.0, b).unwrap().dense();
        assert!(linalg::max_abs(&(u.matrix() - CMat::identity(25, 25))) < 1e-12);
    }

    #[test]
    fn beam_splitter_blocks_are_unitary() {
        let b = basis(24);
        let u = beam_splitter(0.9, b).unwrap();
        for j in 0..u.num_sectors() {
            let blk = u.sector(j);
            let ident = DMatrix::<f64>::identity(blk.nrows(), blk.nrows());
            let dev = (blk.transpose() * blk - ident).abs().max();
            assert!(dev < 1e-9, "sector {j}: {dev:.2e}");
        }
    }

    #[test]
    fn beam_splitter_heisenberg_covariance() {
        // U† x₁ U = cosθ x₁ + sinθ x₂ on interior sectors
        let theta = 0.7;
        let b = basis(16);
        let dim = b.dim();
        let u = beam_splitter(theta, b).unwrap().dense();
        let ops = mode_operators(b);
        let ident = CMat::identity(dim, dim);
        let x1 = kron(ops.x.matrix(), &ident);
        let x2 = kron(&ident, ops.x.matrix());
        let lhs = u.matrix().adjoint() * &x1 * u.matrix();
        let rhs = &x1 * re(theta.cos()) + &x2 * re(theta.sin());
        let mut dev: f64 = 0.0;
        let interior = 8;
        for m1 in 0..interior {
            for m2 in 0..interior {
                for n1 in 0..interior {
                    for n2 in 0..interior {
                        let (r, c) = (m1 * dim + m2, n1 * dim + n2);
                        dev = dev.max((lhs[(r, c)] - rhs[(r, c)]).norm());
                    }
                }
            }
        }
        assert!(dev < 1e-8, "dev = {dev:.3e}");
    }

    #[test]
    fn full_swap_limit() {
        let b = basis(6);
        let u = beam_splitter(FRAC_PI_2, b).unwrap();
        // U_{π/2}|n1, n2⟩ = (−1)^{n1}|n2, n1⟩
        for n1 in 0..3 {
            for n2 in 0..3 {
                let expect = if n1 % 2 == 0 { 1.0 } else { -1.0 };
                assert!((u.element(n2, n1, n1, n2) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cat_state_has_even_support() {
        let b = basis(required_nmax(1.5));
        let cat = make_state(
            &StateSpec::Cat {
                alpha: re(1.5),
                parity: CatParity::Even,
            },
            b,
        )
        .unwrap();
        let odd_mass: f64 = cat
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(n, _)| n % 2 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        assert!(odd_mass < 1e-20);
    }

    #[test]
    fn cat_codeword_overlap() {
        // ⟨0_L|1_L⟩ = ⟨α|−α⟩ = e^{−2α²}
        let alpha = 1.5;
        let b = basis(required_nmax(alpha) + 4);
        let plus = make_state(&StateSpec::Coherent(re(alpha)), b).unwrap();
        let minus = make_state(&StateSpec::Coherent(re(-alpha)), b).unwrap();
        let got = plus.overlap(&minus).unwrap().re;
        assert!((got - (-2.0 * alpha * alpha).exp()).abs() < 1e-12);
    }

    #[test]
    fn fock_spec_is_unit_amplitude() {
        let b = basis(6);
        let two = make_state(&StateSpec::Fock(2), b).unwrap();
        assert!((two.amplitudes()[2] - ONE).norm() < 1e-15);
        assert_eq!(two.leakage(), 0.0);
    }

    #[test]
    fn comb_state_normalizes_with_overlaps() {
        let b = basis(40);
        let f = vec![re(1.0 / 2.0_f64.sqrt()); 2];
        let comb = make_state(
            &StateSpec::Comb {
                spacing: re(2.5),
                amplitudes: f,
            },
            b,
        )
        .unwrap();
        assert!((comb.amplitudes().norm_squared() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn gaussian_unitary_realizes_bogoliubov() {
        let b = basis(80);
        let ops = mode_operators(b);
        let params = GaussianParams {
            u: re(0.3_f64.cosh()),
            v: re(0.3_f64.sinh()),
            gamma: C64::new(0.2, -0.1),
        };
        let g = gaussian_unitary(params, b).unwrap();
        let lhs = g.matrix().adjoint() * ops.annihilation.matrix() * g.matrix();
        let rhs = ops.annihilation.matrix() * params.u
            + ops.creation.matrix() * params.v
            + CMat::identity(b.dim(), b.dim()) * params.gamma;
        let mut dev: f64 = 0.0;
        for i in 0..20 {
            for j in 0..20 {
                dev = dev.max((lhs[(i, j)] - rhs[(i, j)]).norm());
            }
        }
        assert!(dev < 1e-8, "dev = {dev:.3e}");
    }

    #[test]
    fn conjugation_check_identity_triples() {
        let b = basis(20);
        let id = GaussianParams::identity();
        let dev = gaussian_conjugation_check(id, id, id, id, 0.7, b).unwrap();
        assert!(dev < 1e-12);
    }

    #[test]
    fn conjugation_check_matched_squeezing() {
        let b = basis(40);
        let g = GaussianParams {
            u: re(0.3_f64.cosh()),
            v: re(0.3_f64.sinh()),
            gamma: ZERO,
        };
        let dev = gaussian_conjugation_check(g, g, g, g, FRAC_PI_4, b).unwrap();
        assert!(dev < 1e-6, "dev = {dev:.3e}");
    }

    #[test]
    fn conjugation_check_mismatched_squeezing() {
        // oracle: direct product; unequal squeezing must break the identity
        let b = basis(40);
        let g1 = GaussianParams {
            u: re(0.3_f64.cosh()),
            v: re(0.3_f64.sinh()),
            gamma: ZERO,
        };
        let g2 = GaussianParams {
            u: re(0.5_f64.cosh()),
            v: re(0.5_f64.sinh()),
            gamma: ZERO,
        };
        let dev = gaussian_conjugation_check(g1, g2, g1, g2, FRAC_PI_4, b).unwrap();
        assert!(dev > 0.01, "dev = {dev:.3e}");
    }

    #[test]
    fn conjugation_check_rotated_displacements() {
        // pure displacements satisfying the rotation condition
        let theta: f64 = 1.1;
        let b = basis(30);
        let (g1, g2) = (0.4, -0.3);
        let (g1p, g2p) = (
            theta.cos() * g1 + theta.sin() * g2,
            -theta.sin() * g1 + theta.cos() * g2,
        );
        let mk = |gamma: f64| GaussianParams {
            u: ONE,
            v: ZERO,
            gamma: re(gamma),
        };
        let dev = gaussian_conjugation_check(mk(g1), mk(g2), mk(g1p), mk(g2p), theta, b).unwrap();
        assert!(dev < 1e-7, "dev = {dev:.3e}");
    }

    #[test]
    fn truncation_rule_matches_formula() {
        let b = TruncatedBasis::for_amplitudes(&[2.0]);
        assert_eq!(b.n_max(), 26);
        assert_eq!(required_nmax(0.0), 10);
    }

    #[test]
    fn gkp_codewords_are_stabilized() {
        // Z̄ eigenvalue ±1 up to finite-envelope corrections
        let delta = 0.35;
        let b = basis(gkp_required_nmax(LatticeKind::Square, delta));
        for logical in 0..2 {
            let ket = make_state(
                &StateSpec::ApproxGkp {
                    lattice: LatticeKind::Square,
                    delta,
                    logical,
                },
                b,
            )
            .unwrap();
            let zbar = displacement(C64::new(0.0, PI.sqrt()) / re(2.0_f64.sqrt()), b).unwrap();
            let val = ket.amplitudes().dotc(&(zbar.matrix() * ket.amplitudes()));
            let expect = if logical == 0 { 1.0 } else { -1.0 };
            assert!(
                (val.re - expect).abs() < 0.15 && val.im.abs() < 0.05,
                "logical {logical}: ⟨Z̄⟩ = {val}"
            );
        }
    }
}
