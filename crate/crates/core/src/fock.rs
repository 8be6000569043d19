//! Truncated Fock-space states and the dense primitives built on them.
//!
//! A single bosonic mode is represented on the basis `|0⟩ … |n_max⟩`. Pure
//! states store complex amplitudes, mixed states a Hermitian density matrix
//! with a flag marking the diagonal (phase-insensitive) case, and two-mode
//! pure states a coefficient matrix `c[n][m]` over `|n⟩ ⊗ |m⟩`.
//!
//! Every constructor renormalizes, so the stored state always has unit norm
//! (or unit trace) to round-off. Values are immutable after construction.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Eigenvalues above this (negative) bound are treated as round-off and
/// clipped to zero before taking logarithms.
pub const EIGEN_CLIP: f64 = -1e-10;

/// Truncation of a single-mode Fock space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockCutoff {
    n_max: usize,
    tail_tol: f64,
}

impl FockCutoff {
    pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

    pub fn new(n_max: usize, tail_tol: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(invalid(format!("tail_tol must lie in (0, 1), got {tail_tol}")));
        }
        Ok(Self { n_max, tail_tol })
    }

    /// Cutoff with the default tail tolerance of `1e-10`.
    pub fn with_n_max(n_max: usize) -> Result<Self> {
        Self::new(n_max, Self::DEFAULT_TAIL_TOL)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Hilbert-space dimension `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Anything with a photon-number distribution over the retained basis.
pub trait FockPopulations {
    /// `p_n = ⟨n|ϱ|n⟩` for `n = 0..=n_max`.
    fn populations(&self) -> Vec<f64>;
}

fn normalize(amplitudes: &mut [Complex64]) -> Result<()> {
    let norm_sqr: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
    if !(norm_sqr.is_finite() && norm_sqr > 0.0) {
        return Err(invalid(format!("cannot normalize a vector with squared norm {norm_sqr}")));
    }
    let scale = norm_sqr.sqrt().recip();
    amplitudes.iter_mut().for_each(|c| *c *= scale);
    Ok(())
}

/// Pure single-mode state `Σ c_n |n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleModePureState {
    amplitudes: Vec<Complex64>,
    cutoff: FockCutoff,
}

impl SingleModePureState {
    /// Builds a state from raw amplitudes, renormalizing them. The amplitude
    /// vector must have exactly `cutoff.dim()` entries.
    pub fn from_amplitudes(mut amplitudes: Vec<Complex64>, cutoff: FockCutoff) -> Result<Self> {
        if amplitudes.len() != cutoff.dim() {
            return Err(invalid(format!(
                "expected {} amplitudes, got {}",
                cutoff.dim(),
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("non-finite amplitude"));
        }
        normalize(&mut amplitudes)?;
        Ok(Self { amplitudes, cutoff })
    }

    /// Number state `|n⟩`.
    pub fn fock(n: usize, cutoff: FockCutoff) -> Result<Self> {
        if n > cutoff.n_max() {
            return Err(invalid(format!("|{n}⟩ is outside the cutoff n_max = {}", cutoff.n_max())));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff.dim()];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, cutoff })
    }

    pub fn vacuum(cutoff: FockCutoff) -> Self {
        Self::fock(0, cutoff).expect("vacuum is always inside the cutoff")
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    /// `|ψ⟩⟨ψ|` as a density state.
    pub fn to_density(&self) -> SingleModeDensityState {
        let dim = self.cutoff.dim();
        let c = &self.amplitudes;
        let matrix = DMatrix::from_fn(dim, dim, |n, m| c[n] * c[m].conj());
        SingleModeDensityState {
            matrix,
            is_diagonal: false,
            cutoff: self.cutoff,
        }
    }

    /// Largest absolute amplitude difference to another state of equal dimension.
    pub fn distance(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl FockPopulations for SingleModePureState {
    fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Mixed single-mode state given by its density matrix `ϱ_{nm} = ⟨n|ϱ|m⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleModeDensityState {
    matrix: DMatrix<Complex64>,
    is_diagonal: bool,
    cutoff: FockCutoff,
}

impl SingleModeDensityState {
    /// Diagonal state from (unnormalized, non-negative) populations.
    pub fn from_populations(populations: &[f64], cutoff: FockCutoff) -> Result<Self> {
        if populations.len() != cutoff.dim() {
            return Err(invalid(format!(
                "expected {} populations, got {}",
                cutoff.dim(),
                populations.len()
            )));
        }
        if populations.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(invalid("populations must be finite and non-negative"));
        }
        let total: f64 = populations.iter().sum();
        if total <= 0.0 {
            return Err(invalid("populations sum to zero"));
        }
        let dim = cutoff.dim();
        let mut matrix = DMatrix::zeros(dim, dim);
        for (n, p) in populations.iter().enumerate() {
            matrix[(n, n)] = Complex64::new(p / total, 0.0);
        }
        Ok(Self {
            matrix,
            is_diagonal: true,
            cutoff,
        })
    }

    /// General density matrix. The input must be Hermitian to `1e-12`; the
    /// stored matrix is made exactly Hermitian and trace-normalized.
    pub fn from_matrix(matrix: DMatrix<Complex64>, cutoff: FockCutoff) -> Result<Self> {
        let dim = cutoff.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(invalid(format!(
                "expected a {dim}x{dim} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut asym: f64 = 0.0;
        for n in 0..dim {
            for m in 0..dim {
                asym = asym.max((matrix[(n, m)] - matrix[(m, n)].conj()).norm());
            }
        }
        if asym > 1e-12 {
            return Err(Error::NonPhysical(format!("matrix is not Hermitian (deviation {asym:e})")));
        }
        let trace: f64 = (0..dim).map(|n| matrix[(n, n)].re).sum();
        if !(trace.is_finite() && trace > 0.0) {
            return Err(Error::NonPhysical(format!("trace {trace} is not positive")));
        }
        let mut clean = DMatrix::zeros(dim, dim);
        let mut is_diagonal = true;
        for n in 0..dim {
            clean[(n, n)] = Complex64::new(matrix[(n, n)].re / trace, 0.0);
            for m in (n + 1)..dim {
                let v = matrix[(n, m)] / trace;
                if v != Complex64::new(0.0, 0.0) {
                    is_diagonal = false;
                }
                clean[(n, m)] = v;
                clean[(m, n)] = v.conj();
            }
        }
        Ok(Self {
            matrix: clean,
            is_diagonal,
            cutoff,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_diagonal
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    /// `Tr ϱ²`.
    pub fn purity(&self) -> f64 {
        if self.is_diagonal {
            return self.populations().iter().map(|p| p * p).sum();
        }
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Eigenvalues of ϱ in ascending order, clipped at zero when they fall in
    /// `[EIGEN_CLIP, 0)`.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut values = if self.is_diagonal {
            self.populations()
        } else {
            self.matrix.clone().symmetric_eigenvalues().iter().copied().collect()
        };
        values.sort_by(f64::total_cmp);
        if let Some(&min) = values.first() {
            if min < EIGEN_CLIP {
                return Err(Error::NonPhysical(format!("negative eigenvalue {min:e}")));
            }
        }
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(values)
    }

    /// Largest absolute entry of `self − other`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl FockPopulations for SingleModeDensityState {
    fn populations(&self) -> Vec<f64> {
        (0..self.cutoff.dim()).map(|n| self.matrix[(n, n)].re).collect()
    }
}

/// Which mode of a two-mode state is kept by a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Pure two-mode state `Σ c_{nm} |n⟩ ⊗ |m⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModePureState {
    coeffs: DMatrix<Complex64>,
    cutoff_a: FockCutoff,
    cutoff_b: FockCutoff,
    schmidt_diagonal: bool,
}

impl TwoModePureState {
    pub fn from_coeffs(
        coeffs: DMatrix<Complex64>,
        cutoff_a: FockCutoff,
        cutoff_b: FockCutoff,
    ) -> Result<Self> {
        if coeffs.nrows() != cutoff_a.dim() || coeffs.ncols() != cutoff_b.dim() {
            return Err(invalid(format!(
                "expected a {}x{} coefficient matrix, got {}x{}",
                cutoff_a.dim(),
                cutoff_b.dim(),
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        let mut coeffs = coeffs;
        normalize(coeffs.as_mut_slice())?;
        let zero = Complex64::new(0.0, 0.0);
        let schmidt_diagonal = coeffs.row_iter().enumerate().all(|(n, row)| {
            row.iter().enumerate().all(|(m, c)| n == m || *c == zero)
        });
        Ok(Self {
            coeffs,
            cutoff_a,
            cutoff_b,
            schmidt_diagonal,
        })
    }

    /// State `Σ s_n |n, n⟩` with both modes truncated at the same cutoff.
    pub fn from_schmidt(schmidt: &[Complex64], cutoff: FockCutoff) -> Result<Self> {
        if schmidt.len() != cutoff.dim() {
            return Err(invalid(format!(
                "expected {} Schmidt coefficients, got {}",
                cutoff.dim(),
                schmidt.len()
            )));
        }
        let mut diag = schmidt.to_vec();
        normalize(&mut diag)?;
        let dim = cutoff.dim();
        let mut coeffs = DMatrix::zeros(dim, dim);
        for (n, s) in diag.into_iter().enumerate() {
            coeffs[(n, n)] = s;
        }
        Ok(Self {
            coeffs,
            cutoff_a: cutoff,
            cutoff_b: cutoff,
            schmidt_diagonal: true,
        })
    }

    /// `|ψ_a⟩ ⊗ |ψ_b⟩`.
    pub fn product(a: &SingleModePureState, b: &SingleModePureState) -> Result<Self> {
        let (ca, cb) = (a.amplitudes(), b.amplitudes());
        let coeffs = DMatrix::from_fn(ca.len(), cb.len(), |n, m| ca[n] * cb[m]);
        Self::from_coeffs(coeffs, a.cutoff(), b.cutoff())
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn cutoff_a(&self) -> FockCutoff {
        self.cutoff_a
    }

    pub fn cutoff_b(&self) -> FockCutoff {
        self.cutoff_b
    }

    /// True when only `c_{nn}` entries are non-zero.
    pub fn is_schmidt_diagonal(&self) -> bool {
        self.schmidt_diagonal
    }

    /// Population of the Fock basis of one mode.
    pub fn mode_populations(&self, mode: Mode) -> Vec<f64> {
        match mode {
            Mode::A => self
                .coeffs
                .row_iter()
                .map(|row| row.iter().map(|c| c.norm_sqr()).sum())
                .collect(),
            Mode::B => self
                .coeffs
                .column_iter()
                .map(|col| col.iter().map(|c| c.norm_sqr()).sum())
                .collect(),
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Reduced state of the mode `keep`, tracing out the other one.
pub fn partial_trace(state: &TwoModePureState, keep: Mode) -> SingleModeDensityState {
    let c = state.coeffs();
    let cutoff = match keep {
        Mode::A => state.cutoff_a(),
        Mode::B => state.cutoff_b(),
    };
    if state.is_schmidt_diagonal() {
        let dim = cutoff.dim();
        let mut matrix = DMatrix::zeros(dim, dim);
        for n in 0..dim.min(c.nrows()).min(c.ncols()) {
            matrix[(n, n)] = Complex64::new(c[(n, n)].norm_sqr(), 0.0);
        }
        return SingleModeDensityState {
            matrix,
            is_diagonal: true,
            cutoff,
        };
    }
    let reduced = match keep {
        Mode::A => c * c.adjoint(),
        Mode::B => (c.adjoint() * c).transpose(),
    };
    let dim = cutoff.dim();
    let mut matrix = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        matrix[(n, n)] = Complex64::new(reduced[(n, n)].re, 0.0);
        for m in (n + 1)..dim {
            matrix[(n, m)] = reduced[(n, m)];
            matrix[(m, n)] = reduced[(n, m)].conj();
        }
    }
    SingleModeDensityState {
        matrix,
        is_diagonal: false,
        cutoff,
    }
}

/// `ϱ_a = Tr_b |Ψ⟩⟨Ψ|`.
pub fn partial_trace_b(state: &TwoModePureState) -> SingleModeDensityState {
    partial_trace(state, Mode::A)
}

/// `⟨â†â⟩`.
pub fn expectation_number(state: &impl FockPopulations) -> f64 {
    state
        .populations()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

/// `−Σ λ ln λ` over a probability vector, with `0 ln 0 = 0`.
pub(crate) fn shannon_entropy(probabilities: &[f64]) -> f64 {
    -probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Von Neumann entropy `−Tr ϱ ln ϱ` in nats.
pub fn von_neumann_entropy(state: &SingleModeDensityState) -> Result<f64> {
    Ok(shannon_entropy(&state.eigenvalues()?))
}

/// Matrix of `⟨m|D(α)|n⟩` on the retained basis.
///
/// Elements come from the associated-Laguerre closed form, evaluated through a
/// factorial-normalized three-term recurrence along each diagonal so that no
/// factorial or power is ever formed explicitly. Entries are exact for the
/// truncated indices; only the leakage out of the subspace is lost.
pub fn displacement_matrix(alpha: Complex64, cutoff: FockCutoff) -> Result<DMatrix<Complex64>> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(invalid("displacement amplitude must be finite"));
    }
    let dim = cutoff.dim();
    if dim < 2 {
        return Err(invalid("displacement needs at least two basis states"));
    }
    let x = alpha.norm_sqr();
    let mut d = DMatrix::zeros(dim, dim);
    // prefactor e^{-|α|²/2} α^k / √k! for the k-th lower diagonal
    let mut prefactor = Complex64::new((-0.5 * x).exp(), 0.0);
    let mut column = vec![0.0; dim];
    for k in 0..dim {
        if k > 0 {
            prefactor *= alpha / (k as f64).sqrt();
        }
        laguerre_normalized(k, x, &mut column[..dim - k]);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..dim - k {
            let lower = prefactor * column[n];
            d[(n + k, n)] = lower;
            if k > 0 {
                d[(n, n + k)] = lower.conj() * sign;
            }
        }
    }
    Ok(d)
}

/// Fills `out[n] = √(n!/(n+k)!) · √k! · L_n^{(k)}(x)`, the factor `√k!`
/// being carried by the caller's prefactor.
pub(crate) fn laguerre_normalized(k: usize, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let kf = k as f64;
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = (1.0 + kf - x) / (1.0 + kf).sqrt();
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0 + kf - x) * out[n] - (nf * (nf + kf)).sqrt() * out[n - 1])
            / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
    }
}
