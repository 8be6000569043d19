//! Gaussian input states expressed in the Fock basis.
//!
//! Each family knows its exact (untruncated) photon-number law, which is
//! used both to size cutoffs and to evaluate success probabilities without
//! truncation error.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{FockCutoff, SingleModePureState, TwoModePureState};
use crate::measures::FirstMomentsAndCM;

/// Largest cutoff any constructor or search will propose.
pub const MAX_CUTOFF: usize = 512;

/// Coherent state `|α⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentSpec {
    pub alpha: Complex64,
}

impl CoherentSpec {
    pub fn new(alpha: Complex64) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(invalid("coherent amplitude must be finite"));
        }
        Ok(Self { alpha })
    }

    pub fn real(alpha: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha, 0.0))
    }

    pub fn mean_photons(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// Amplitudes `e^{-|α|²/2} α^n / √n!`.
    pub fn amplitudes(&self, dim: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(dim);
        let mut c = Complex64::new((-0.5 * self.alpha.norm_sqr()).exp(), 0.0);
        for n in 0..dim {
            if n > 0 {
                c *= self.alpha / (n as f64).sqrt();
            }
            out.push(c);
        }
        out
    }

    pub fn moments(&self) -> FirstMomentsAndCM {
        let s = std::f64::consts::SQRT_2;
        FirstMomentsAndCM {
            mean: [s * self.alpha.re, s * self.alpha.im],
            cm: Matrix2::identity() * 0.5,
        }
    }
}

/// Squeezed vacuum `|ξ⟩`, `ξ = r e^{iφ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedVacSpec {
    pub r: f64,
    pub phi: f64,
}

impl SqueezedVacSpec {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid(format!("squeezing modulus must be finite and non-negative, got {r}")));
        }
        if !phi.is_finite() {
            return Err(invalid("squeezing phase must be finite"));
        }
        Ok(Self { r, phi })
    }

    pub fn real(r: f64) -> Result<Self> {
        Self::new(r, 0.0)
    }

    pub fn mu(&self) -> f64 {
        self.r.cosh()
    }

    pub fn nu(&self) -> Complex64 {
        Complex64::from_polar(self.r.sinh(), self.phi)
    }

    pub fn mean_photons(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    /// Coefficients `x_n = μ^{-1/2} (ν/2μ)^n √(2n)!/n!` of `|2n⟩`, `n < count`.
    ///
    /// The modulus is accumulated in log space; the phase is `n φ`.
    pub fn pair_coefficients(&self, count: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(count);
        let mut log_mod = -0.5 * self.mu().ln();
        let log_ratio = (0.5 * self.r.tanh()).ln();
        for n in 0..count {
            if n > 0 {
                let nf = n as f64;
                log_mod += log_ratio + 0.5 * (2.0 * nf * (2.0 * nf - 1.0)).ln() - nf.ln();
            }
            out.push(Complex64::from_polar(log_mod.exp(), n as f64 * self.phi));
        }
        out
    }

    /// Fock amplitudes over `dim` basis states, odd entries exactly zero.
    pub fn amplitudes(&self, dim: usize) -> Vec<Complex64> {
        let pairs = self.pair_coefficients(dim.div_ceil(2));
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (n, x) in pairs.into_iter().enumerate() {
            out[2 * n] = x;
        }
        out
    }

    pub fn moments(&self) -> FirstMomentsAndCM {
        let (c, s) = ((2.0 * self.r).cosh(), (2.0 * self.r).sinh());
        let (cp, sp) = (self.phi.cos(), self.phi.sin());
        FirstMomentsAndCM {
            mean: [0.0, 0.0],
            cm: Matrix2::new(c + s * cp, s * sp, s * sp, c - s * cp) * 0.5,
        }
    }
}

/// Twin beam `√(1−χ²) Σ χ^n |n, n⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwbSpec {
    pub chi: f64,
}

impl TwbSpec {
    /// Accepts `0 ≤ χ < 1`; `χ = 0` is the two-mode vacuum.
    pub fn new(chi: f64) -> Result<Self> {
        if !(chi.is_finite() && (0.0..1.0).contains(&chi)) {
            return Err(invalid(format!("twin-beam parameter must satisfy 0 <= chi < 1, got {chi}")));
        }
        Ok(Self { chi })
    }

    /// Per-mode mean photon number `χ²/(1−χ²)`.
    pub fn mean_photons_per_mode(&self) -> f64 {
        let c2 = self.chi * self.chi;
        c2 / (1.0 - c2)
    }

    /// Total photon number of both modes.
    pub fn mean_photons_total(&self) -> f64 {
        2.0 * self.mean_photons_per_mode()
    }

    /// Schmidt coefficients `√(1−χ²) χ^n`.
    pub fn schmidt(&self, dim: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(dim);
        let mut s = (1.0 - self.chi * self.chi).sqrt();
        for n in 0..dim {
            if n > 0 {
                s *= self.chi;
            }
            out.push(s);
        }
        out
    }
}

/// One of the three Gaussian inputs, viewed through the photon statistics of
/// the mode the amplifier acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Coherent(CoherentSpec),
    Squeezed(SqueezedVacSpec),
    Twb(TwbSpec),
}

impl Source {
    /// Exact photon-number probabilities `p_0 … p_{count-1}` of the amplified
    /// mode (a reduced thermal law for the twin beam).
    pub fn populations(&self, count: usize) -> Vec<f64> {
        match self {
            Source::Coherent(spec) => spec.amplitudes(count).iter().map(|c| c.norm_sqr()).collect(),
            Source::Squeezed(spec) => spec.amplitudes(count).iter().map(|c| c.norm_sqr()).collect(),
            Source::Twb(spec) => spec.schmidt(count).iter().map(|s| s * s).collect(),
        }
    }

    /// Exact probability of finding more than `n_max` photons.
    pub fn tail_beyond(&self, n_max: usize) -> f64 {
        match self {
            Source::Twb(spec) => {
                let c2 = spec.chi * spec.chi;
                c2.powi(n_max as i32 + 1)
            }
            _ => {
                // summed term by term; both laws decay at least geometrically
                // once past their mean
                let mut total = 0.0;
                let mut n = n_max + 1;
                let mut chunk = 64;
                loop {
                    let pops = self.populations(n + chunk);
                    let part: f64 = pops[n..].iter().sum();
                    total += part;
                    let last = pops.last().copied().unwrap_or(0.0);
                    if last <= 1e-30 * total.max(1e-300) || last == 0.0 || n + chunk > 100_000 {
                        break;
                    }
                    n += chunk;
                    chunk *= 2;
                }
                total
            }
        }
    }

    /// Smallest `n_max` whose exact tail mass is at most `tail_tol`.
    pub fn min_cutoff_for_tail(&self, tail_tol: f64) -> usize {
        let mut hi = 1;
        while self.tail_beyond(hi) > tail_tol {
            hi *= 2;
            if hi > 1 << 20 {
                return hi;
            }
        }
        let mut lo = hi / 2;
        if self.tail_beyond(lo) <= tail_tol {
            return lo.max(1);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.tail_beyond(mid) <= tail_tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn check_cutoff(&self, cutoff: FockCutoff) -> Result<()> {
        let tail = self.tail_beyond(cutoff.n_max());
        if tail > cutoff.tail_tol() {
            let suggested = self.min_cutoff_for_tail(cutoff.tail_tol());
            if suggested > MAX_CUTOFF {
                return Err(Error::ResourceLimit {
                    n_max: suggested,
                    limit: MAX_CUTOFF,
                });
            }
            return Err(Error::Truncation {
                n_max: cutoff.n_max(),
                tail,
                suggested_n_max: suggested,
            });
        }
        Ok(())
    }
}

/// `|α⟩` truncated at `cutoff` and renormalized.
pub fn coherent_state(spec: CoherentSpec, cutoff: FockCutoff) -> Result<SingleModePureState> {
    Source::Coherent(spec).check_cutoff(cutoff)?;
    SingleModePureState::from_amplitudes(spec.amplitudes(cutoff.dim()), cutoff)
}

/// `|ξ⟩` truncated at `cutoff` and renormalized.
pub fn squeezed_vacuum_state(spec: SqueezedVacSpec, cutoff: FockCutoff) -> Result<SingleModePureState> {
    Source::Squeezed(spec).check_cutoff(cutoff)?;
    SingleModePureState::from_amplitudes(spec.amplitudes(cutoff.dim()), cutoff)
}

/// `|χ⟩` with both modes truncated at `cutoff`.
pub fn twin_beam_state(spec: TwbSpec, cutoff: FockCutoff) -> Result<TwoModePureState> {
    Source::Twb(spec).check_cutoff(cutoff)?;
    let s: Vec<Complex64> = spec
        .schmidt(cutoff.dim())
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    TwoModePureState::from_schmidt(&s, cutoff)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateFamily {
    Coherent,
    Squeezed,
    Twb,
}

/// How the twin-beam energy is counted when matching input energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TwbEnergyConvention {
    /// `n̄ = χ²/(1−χ²)`, the photon number of one mode.
    #[default]
    PerMode,
    /// `n̄ = χ/√(1−χ²) = sinh r`, the unsquared variant.
    Unsquared,
}

/// Mean photon number of the family's input at parameter `param`
/// (`|α|`, `r` or `χ`).
pub fn mean_energy(family: StateFamily, param: f64, convention: TwbEnergyConvention) -> f64 {
    match family {
        StateFamily::Coherent => param * param,
        StateFamily::Squeezed => param.sinh().powi(2),
        StateFamily::Twb => match convention {
            TwbEnergyConvention::PerMode => param * param / (1.0 - param * param),
            TwbEnergyConvention::Unsquared => param / (1.0 - param * param).sqrt(),
        },
    }
}

/// Real, non-negative family parameter giving mean photon number `nbar`.
pub fn parameter_for_mean_energy(family: StateFamily, nbar: f64) -> Result<f64> {
    parameter_for_mean_energy_with(family, nbar, TwbEnergyConvention::PerMode)
}

pub fn parameter_for_mean_energy_with(
    family: StateFamily,
    nbar: f64,
    convention: TwbEnergyConvention,
) -> Result<f64> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(invalid(format!("mean photon number must be finite and >= 0, got {nbar}")));
    }
    Ok(match family {
        StateFamily::Coherent => nbar.sqrt(),
        StateFamily::Squeezed => nbar.sqrt().asinh(),
        StateFamily::Twb => match convention {
            TwbEnergyConvention::PerMode => (nbar / (1.0 + nbar)).sqrt(),
            TwbEnergyConvention::Unsquared => nbar / (1.0 + nbar * nbar).sqrt(),
        },
    })
}
