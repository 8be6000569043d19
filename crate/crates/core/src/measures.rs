//! Covariance matrices, entropic non-Gaussianity and entanglement.
//!
//! Quadratures are `x̂ = (â + â†)/√2` and `p̂ = i(â† − â)/√2`, so the vacuum
//! has covariance `I/2`. The reference Gaussian state sharing a state's first
//! and second moments is never built; only its entropy is needed.

use std::borrow::Cow;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fock::{
    self, expectation_number, partial_trace, FockPopulations, Mode, SingleModeDensityState,
    SingleModePureState, TwoModePureState,
};

/// Values of `δ` in `[-CLAMP_TOL, 0)` are reported as zero.
pub const CLAMP_TOL: f64 = 1e-10;

/// First moments `(⟨x̂⟩, ⟨p̂⟩)` and covariance matrix of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstMomentsAndCM {
    pub mean: [f64; 2],
    pub cm: Matrix2<f64>,
}

impl FirstMomentsAndCM {
    pub fn det(&self) -> f64 {
        self.cm.determinant()
    }

    /// Largest eigenvalue of the covariance matrix.
    pub fn largest_variance(&self) -> f64 {
        let (a, b, c) = (self.cm[(0, 0)], self.cm[(1, 1)], self.cm[(0, 1)]);
        0.5 * (a + b) + (0.25 * (a - b).powi(2) + c * c).sqrt()
    }
}

/// Normally ordered low moments `⟨â⟩`, `⟨â²⟩`, `⟨â†â⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderMoments {
    pub a: Complex64,
    pub a2: Complex64,
    pub n: f64,
}

impl LadderMoments {
    fn moments_and_cm(&self) -> FirstMomentsAndCM {
        let s = std::f64::consts::SQRT_2;
        let (mx, mp) = (s * self.a.re, s * self.a.im);
        let xx = (2.0 * self.a2.re + 2.0 * self.n + 1.0) / 2.0 - mx * mx;
        let pp = (2.0 * self.n + 1.0 - 2.0 * self.a2.re) / 2.0 - mp * mp;
        let xp = self.a2.im - mx * mp;
        FirstMomentsAndCM {
            mean: [mx, mp],
            cm: Matrix2::new(xx, xp, xp, pp),
        }
    }
}

/// Single-mode states the measures accept.
pub trait SingleModeState: FockPopulations {
    fn ladder_moments(&self) -> LadderMoments;
    fn as_density(&self) -> Cow<'_, SingleModeDensityState>;
    /// `Some(0)` for pure states, otherwise the von Neumann entropy.
    fn entropy(&self) -> Result<f64>;
    fn is_pure(&self) -> bool;
}

impl SingleModeState for SingleModePureState {
    fn ladder_moments(&self) -> LadderMoments {
        let c = self.amplitudes();
        let mut a = Complex64::new(0.0, 0.0);
        let mut a2 = Complex64::new(0.0, 0.0);
        for n in 1..c.len() {
            a += c[n - 1].conj() * c[n] * (n as f64).sqrt();
            if n >= 2 {
                a2 += c[n - 2].conj() * c[n] * ((n * (n - 1)) as f64).sqrt();
            }
        }
        LadderMoments {
            a,
            a2,
            n: expectation_number(self),
        }
    }

    fn as_density(&self) -> Cow<'_, SingleModeDensityState> {
        Cow::Owned(self.to_density())
    }

    fn entropy(&self) -> Result<f64> {
        Ok(0.0)
    }

    fn is_pure(&self) -> bool {
        true
    }
}

impl SingleModeState for SingleModeDensityState {
    fn ladder_moments(&self) -> LadderMoments {
        let n_bar = expectation_number(self);
        if self.is_diagonal() {
            return LadderMoments {
                a: Complex64::new(0.0, 0.0),
                a2: Complex64::new(0.0, 0.0),
                n: n_bar,
            };
        }
        // Tr[ϱ â] = Σ ϱ_{n,n-1} √n
        let m = self.matrix();
        let mut a = Complex64::new(0.0, 0.0);
        let mut a2 = Complex64::new(0.0, 0.0);
        for n in 1..m.nrows() {
            a += m[(n, n - 1)] * (n as f64).sqrt();
            if n >= 2 {
                a2 += m[(n, n - 2)] * ((n * (n - 1)) as f64).sqrt();
            }
        }
        LadderMoments { a, a2, n: n_bar }
    }

    fn as_density(&self) -> Cow<'_, SingleModeDensityState> {
        Cow::Borrowed(self)
    }

    fn entropy(&self) -> Result<f64> {
        fock::von_neumann_entropy(self)
    }

    fn is_pure(&self) -> bool {
        false
    }
}

/// Mean vector and covariance matrix from Fock-basis matrix elements.
pub fn moments_and_cm(state: &impl SingleModeState) -> Result<FirstMomentsAndCM> {
    let m = state.ladder_moments().moments_and_cm();
    let det = m.det();
    if det < 0.25 - CLAMP_TOL {
        return Err(Error::NonPhysical(format!(
            "covariance determinant {det} violates the uncertainty bound (cutoff too low?)"
        )));
    }
    Ok(m)
}

/// `h(x) = (x+½) ln(x+½) − (x−½) ln(x−½)`, the entropy of a Gaussian mode with
/// symplectic eigenvalue `x`. Arguments below `½` are treated as `½`.
pub fn symplectic_entropy(x: f64) -> f64 {
    let lo = x - 0.5;
    if lo <= 0.0 {
        return 0.0;
    }
    let hi = x + 0.5;
    hi * hi.ln() - lo * lo.ln()
}

/// Entropy `h(√det σ)` of the Gaussian state with the given moments.
pub fn reference_gaussian_entropy(moments: &FirstMomentsAndCM) -> Result<f64> {
    let det = moments.det();
    if !(det >= 0.25 - CLAMP_TOL) {
        return Err(invalid(format!("covariance determinant {det} is below 1/4")));
    }
    Ok(symplectic_entropy(det.max(0.25).sqrt()))
}

fn clamp_non_negative(value: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -CLAMP_TOL {
        Ok(0.0)
    } else {
        Err(Error::NumericalConsistency(format!("{what} evaluated to {value:e}")))
    }
}

/// Relative entropy of non-Gaussianity `S(ϱ_G) − S(ϱ)` of one mode.
pub fn delta_ng_single(state: &impl SingleModeState) -> Result<f64> {
    let moments = moments_and_cm(state)?;
    let value = if state.is_pure() {
        reference_gaussian_entropy(&moments)?
    } else {
        let density = state.as_density();
        if density.is_diagonal() {
            // reference is thermal with the same photon number
            let n_bar = expectation_number(density.as_ref());
            let pops = density.populations();
            symplectic_entropy(0.5 + n_bar) - fock::shannon_entropy(&pops)
        } else {
            reference_gaussian_entropy(&moments)? - fock::von_neumann_entropy(&density)?
        }
    };
    clamp_non_negative(value, "non-Gaussianity")
}

/// Block form `[[A, C], [Cᵀ, B]]` of a two-mode covariance matrix together
/// with its symplectic invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCM {
    pub a: Matrix2<f64>,
    pub b: Matrix2<f64>,
    pub c: Matrix2<f64>,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub delta: f64,
    pub d_plus: f64,
    pub d_minus: f64,
}

impl TwoModeCM {
    pub fn full(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.a);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.b);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.c);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.c.transpose());
        m
    }
}

struct TwoModeLadder {
    a: LadderMoments,
    b: LadderMoments,
    ab: Complex64,
    adag_b: Complex64,
}

fn two_mode_ladder(state: &TwoModePureState) -> TwoModeLadder {
    let c = state.coeffs();
    let (rows, cols) = (c.nrows(), c.ncols());
    let zero = Complex64::new(0.0, 0.0);
    let (mut a, mut a2, mut b, mut b2, mut ab, mut adag_b) = (zero, zero, zero, zero, zero, zero);
    let (mut na, mut nb) = (0.0, 0.0);
    let at = |n: usize, m: usize| c[(n, m)];
    for n in 0..rows {
        for m in 0..cols {
            let v = at(n, m);
            if v == zero {
                continue;
            }
            let w = v.norm_sqr();
            na += n as f64 * w;
            nb += m as f64 * w;
            if n >= 1 {
                a += at(n - 1, m).conj() * v * (n as f64).sqrt();
            }
            if n >= 2 {
                a2 += at(n - 2, m).conj() * v * ((n * (n - 1)) as f64).sqrt();
            }
            if m >= 1 {
                b += at(n, m - 1).conj() * v * (m as f64).sqrt();
            }
            if m >= 2 {
                b2 += at(n, m - 2).conj() * v * ((m * (m - 1)) as f64).sqrt();
            }
            if n >= 1 && m >= 1 {
                ab += at(n - 1, m - 1).conj() * v * ((n * m) as f64).sqrt();
            }
            // â†b̂|n,m⟩ = √((n+1)m) |n+1,m−1⟩
            if m >= 1 && n + 1 < rows {
                adag_b += at(n + 1, m - 1).conj() * v * (((n + 1) * m) as f64).sqrt();
            }
        }
    }
    TwoModeLadder {
        a: LadderMoments { a, a2, n: na },
        b: LadderMoments { a: b, a2: b2, n: nb },
        ab,
        adag_b,
    }
}

/// Symplectic eigenvalues as the positive eigenvalues of the Hermitian
/// matrix `σ^{1/2} iΩ σ^{1/2}`. Going through `Δ² − 4I₄` instead loses half
/// the digits when `d₊ ≈ d₋`, which is the twin-beam case.
fn symplectic_eigenvalues(sigma: &Matrix4<f64>, delta: f64) -> Result<(f64, f64)> {
    let eig = sigma.symmetric_eigen();
    if eig.eigenvalues.min() <= 0.0 {
        return Err(Error::NonPhysical(format!(
            "two-mode covariance matrix is not positive definite (smallest eigenvalue {:e})",
            eig.eigenvalues.min()
        )));
    }
    let root = &eig.eigenvectors * Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let mut omega = Matrix4::<Complex64>::zeros();
    for k in [0, 2] {
        omega[(k, k + 1)] = Complex64::new(0.0, 1.0);
        omega[(k + 1, k)] = Complex64::new(0.0, -1.0);
    }
    let root = root.map(|v| Complex64::new(v, 0.0));
    let mut d: Vec<f64> = (&root * omega * &root).symmetric_eigenvalues().iter().copied().collect();
    d.sort_by(|a, b| b.total_cmp(a));
    let (plus, minus) = (d[0], d[1]);
    if (plus * plus + minus * minus - delta).abs() > 1e-8 * delta.abs().max(1.0) {
        return Err(Error::NumericalConsistency(format!(
            "symplectic spectrum ({plus}, {minus}) disagrees with Δ = {delta}"
        )));
    }
    Ok((plus, minus))
}

/// Covariance blocks, invariants `I₁…I₄` and symplectic eigenvalues.
pub fn two_mode_cm(state: &TwoModePureState) -> Result<TwoModeCM> {
    let l = two_mode_ladder(state);
    let ma = l.a.moments_and_cm();
    let mb = l.b.moments_and_cm();
    let (xa, pa) = (ma.mean[0], ma.mean[1]);
    let (xb, pb) = (mb.mean[0], mb.mean[1]);
    let (y, x) = (l.ab, l.adag_b);
    let c = Matrix2::new(
        y.re + x.re - xa * xb,
        y.im + x.im - xa * pb,
        y.im - x.im - pa * xb,
        x.re - y.re - pa * pb,
    );
    let mut out = TwoModeCM {
        a: ma.cm,
        b: mb.cm,
        c,
        i1: ma.cm.determinant(),
        i2: mb.cm.determinant(),
        i3: c.determinant(),
        i4: 0.0,
        delta: 0.0,
        d_plus: 0.0,
        d_minus: 0.0,
    };
    out.i4 = out.full().determinant();
    out.delta = out.i1 + out.i2 + 2.0 * out.i3;
    let (dp, dm) = symplectic_eigenvalues(&out.full(), out.delta)?;
    out.d_plus = dp;
    out.d_minus = dm;
    Ok(out)
}

/// Non-Gaussianity of a pure two-mode state, `h(d₊) + h(d₋)`.
pub fn delta_ng_two_mode(state: &TwoModePureState) -> Result<f64> {
    let cm = two_mode_cm(state)?;
    if cm.d_minus < 0.5 - 1e-8 {
        return Err(Error::NonPhysical(format!(
            "symplectic eigenvalue {} below 1/2",
            cm.d_minus
        )));
    }
    clamp_non_negative(
        symplectic_entropy(cm.d_plus) + symplectic_entropy(cm.d_minus),
        "two-mode non-Gaussianity",
    )
}

/// Entropy of entanglement, the entropy of the reduced state of mode `a`.
pub fn entanglement_entropy(state: &TwoModePureState) -> Result<f64> {
    fock::von_neumann_entropy(&partial_trace(state, Mode::A))
}

/// Quadrature-grid convergence information attached to a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    pub n_max: usize,
    pub tail_tol: f64,
    pub accuracy: Option<f64>,
    pub quadrature_intervals: Option<usize>,
    pub total_integral: Option<f64>,
}

/// Measures for one amplified state. Inapplicable entries are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub p_success: Option<f64>,
    pub nbar: Option<f64>,
    pub delta_ng: Option<f64>,
    pub delta_nc: Option<f64>,
    pub wln: Option<f64>,
    pub ent_entropy: Option<f64>,
    pub convergence: Convergence,
}
