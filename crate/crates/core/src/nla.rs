//! Post-selected noiseless linear amplification.
//!
//! The success Kraus operator is diagonal in the Fock basis with entries
//! `g^{n-p}` up to the threshold `p` and `1` above it. Only the success branch
//! is ever materialized; the failure branch exists solely as `1 − P_s`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{
    FockCutoff, FockPopulations, Mode, SingleModeDensityState, SingleModePureState,
    TwoModePureState,
};
use crate::gaussian::{CoherentSpec, Source, SqueezedVacSpec, TwbSpec, MAX_CUTOFF};

/// Smallest success probability accepted before reporting underflow.
pub const MIN_PROBABILITY: f64 = 1e-300;

/// Gain `g ≥ 1` and amplification threshold `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlaSetting {
    g: f64,
    p: usize,
}

impl NlaSetting {
    pub fn new(g: f64, p: usize) -> Result<Self> {
        if !g.is_finite() || g < 1.0 {
            return Err(invalid(format!("gain must be finite and >= 1, got {g}")));
        }
        Ok(Self { g, p })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// True when the success operator is the identity.
    pub fn is_identity(&self) -> bool {
        self.g == 1.0 || self.p == 0
    }

    /// Diagonal entry `⟨n|Ê_s|n⟩`.
    pub fn weight(&self, n: usize) -> f64 {
        if n >= self.p || self.g == 1.0 {
            1.0
        } else {
            self.g.powi(n as i32 - self.p as i32)
        }
    }

    fn check_against(&self, cutoff: FockCutoff) -> Result<()> {
        if self.p >= cutoff.n_max() {
            return Err(invalid(format!(
                "threshold p = {} must be below the cutoff n_max = {}",
                self.p,
                cutoff.n_max()
            )));
        }
        Ok(())
    }
}

/// Conditional state after a successful amplification.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationResult<S> {
    pub state: S,
    pub success_probability: f64,
}

/// Diagonal of `Ê_s^p` over the retained basis.
pub fn success_operator(setting: NlaSetting, cutoff: FockCutoff) -> Result<Vec<f64>> {
    setting.check_against(cutoff)?;
    Ok((0..cutoff.dim()).map(|n| setting.weight(n)).collect())
}

/// States the amplifier can act on; for two-mode states it acts on mode `a`.
pub trait NlaTarget {
    fn amplified_mode_populations(&self) -> Vec<f64>;
}

impl NlaTarget for SingleModePureState {
    fn amplified_mode_populations(&self) -> Vec<f64> {
        self.populations()
    }
}

impl NlaTarget for SingleModeDensityState {
    fn amplified_mode_populations(&self) -> Vec<f64> {
        self.populations()
    }
}

impl NlaTarget for TwoModePureState {
    fn amplified_mode_populations(&self) -> Vec<f64> {
        self.mode_populations(Mode::A)
    }
}

fn probability_from_populations(populations: &[f64], setting: NlaSetting) -> f64 {
    if setting.is_identity() {
        return 1.0;
    }
    populations
        .iter()
        .enumerate()
        .map(|(n, p)| setting.weight(n).powi(2) * p)
        .sum()
}

/// `⟨Ê_s^† Ê_s⟩` evaluated on the truncated state.
pub fn success_probability(state: &impl NlaTarget, setting: NlaSetting) -> f64 {
    probability_from_populations(&state.amplified_mode_populations(), setting)
}

impl Source {
    /// Success probability from the exact photon law, free of truncation.
    pub fn success_probability(&self, setting: NlaSetting) -> f64 {
        if setting.is_identity() {
            return 1.0;
        }
        let p = setting.p();
        let head: f64 = self
            .populations(p + 1)
            .iter()
            .enumerate()
            .map(|(n, pn)| setting.weight(n).powi(2) * pn)
            .sum();
        head + self.tail_beyond(p)
    }

    /// Tail mass beyond `n_max` of the normalized amplified state.
    pub fn amplified_tail(&self, setting: NlaSetting, n_max: usize) -> f64 {
        if n_max < setting.p() {
            return 1.0;
        }
        self.tail_beyond(n_max) / self.success_probability(setting)
    }

    /// Smallest `n_max ≥ max(lower, p+1)` for which the amplified tail is
    /// within `tail_tol`, by doubling followed by bisection.
    pub fn cutoff_for_amplified_tail(
        &self,
        setting: NlaSetting,
        tail_tol: f64,
        lower: usize,
        limit: usize,
    ) -> Result<FockCutoff> {
        let start = lower.max(setting.p() + 1).max(1);
        let ok = |n: usize| self.amplified_tail(setting, n) <= tail_tol;
        let mut hi = start;
        while !ok(hi) {
            if hi >= limit {
                return Err(Error::ResourceLimit { n_max: hi, limit });
            }
            hi = (hi * 2).min(limit);
        }
        if hi > start {
            let mut lo = (hi / 2).max(start);
            if ok(lo) {
                hi = lo;
            } else {
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if ok(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
        }
        FockCutoff::new(hi, tail_tol)
    }

    fn checked_probability(&self, setting: NlaSetting, cutoff: FockCutoff) -> Result<f64> {
        setting.check_against(cutoff)?;
        let prob = self.success_probability(setting);
        if !(prob >= MIN_PROBABILITY) {
            return Err(Error::ProbabilityUnderflow(prob));
        }
        let tail = self.tail_beyond(cutoff.n_max()) / prob;
        if tail > cutoff.tail_tol() {
            let suggested = self
                .cutoff_for_amplified_tail(setting, cutoff.tail_tol(), 1, MAX_CUTOFF)?
                .n_max();
            return Err(Error::Truncation {
                n_max: cutoff.n_max(),
                tail,
                suggested_n_max: suggested,
            });
        }
        Ok(prob)
    }
}

/// `Ê_s|ψ⟩ / √P_s` for a truncated pure state.
pub fn amplify_single_mode_pure(
    state: &SingleModePureState,
    setting: NlaSetting,
) -> Result<AmplificationResult<SingleModePureState>> {
    setting.check_against(state.cutoff())?;
    if setting.is_identity() {
        return Ok(AmplificationResult {
            state: state.clone(),
            success_probability: 1.0,
        });
    }
    let amps: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, c)| c * setting.weight(n))
        .collect();
    let prob: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    if !(prob >= MIN_PROBABILITY) {
        return Err(Error::ProbabilityUnderflow(prob));
    }
    Ok(AmplificationResult {
        state: SingleModePureState::from_amplitudes(amps, state.cutoff())?,
        success_probability: prob,
    })
}

/// `Ê_s ϱ Ê_s / P_s` for a truncated mixed state.
pub fn amplify_single_mode_density(
    state: &SingleModeDensityState,
    setting: NlaSetting,
) -> Result<AmplificationResult<SingleModeDensityState>> {
    setting.check_against(state.cutoff())?;
    if setting.is_identity() {
        return Ok(AmplificationResult {
            state: state.clone(),
            success_probability: 1.0,
        });
    }
    let prob = success_probability(state, setting);
    if !(prob >= MIN_PROBABILITY) {
        return Err(Error::ProbabilityUnderflow(prob));
    }
    let out = if state.is_diagonal() {
        let pops: Vec<f64> = state
            .populations()
            .iter()
            .enumerate()
            .map(|(n, p)| p * setting.weight(n).powi(2))
            .collect();
        SingleModeDensityState::from_populations(&pops, state.cutoff())?
    } else {
        let mut m = state.matrix().clone();
        let dim = m.nrows();
        for n in 0..dim {
            for k in 0..dim {
                m[(n, k)] *= setting.weight(n) * setting.weight(k);
            }
        }
        SingleModeDensityState::from_matrix(m, state.cutoff())?
    };
    Ok(AmplificationResult {
        state: out,
        success_probability: prob,
    })
}

fn amplify_source_pure(
    source: Source,
    amplitudes: Vec<Complex64>,
    setting: NlaSetting,
    cutoff: FockCutoff,
) -> Result<AmplificationResult<SingleModePureState>> {
    let prob = source.checked_probability(setting, cutoff)?;
    let amps = amplitudes
        .into_iter()
        .enumerate()
        .map(|(n, c)| c * setting.weight(n))
        .collect();
    Ok(AmplificationResult {
        state: SingleModePureState::from_amplitudes(amps, cutoff)?,
        success_probability: prob,
    })
}

/// Amplified coherent state with the exact (untruncated) success probability.
pub fn amplify_coherent(
    spec: CoherentSpec,
    setting: NlaSetting,
    cutoff: FockCutoff,
) -> Result<AmplificationResult<SingleModePureState>> {
    amplify_source_pure(Source::Coherent(spec), spec.amplitudes(cutoff.dim()), setting, cutoff)
}

/// Amplified squeezed vacuum with the exact success probability.
pub fn amplify_squeezed(
    spec: SqueezedVacSpec,
    setting: NlaSetting,
    cutoff: FockCutoff,
) -> Result<AmplificationResult<SingleModePureState>> {
    amplify_source_pure(Source::Squeezed(spec), spec.amplitudes(cutoff.dim()), setting, cutoff)
}

/// Closed-form success probability for amplifying one arm of a twin beam.
pub fn twb_success_probability(spec: TwbSpec, setting: NlaSetting) -> f64 {
    Source::Twb(spec).success_probability(setting)
}

/// Non-destructive amplification of mode `a` of a twin beam; the result is a
/// pure Schmidt-diagonal two-mode state.
pub fn amplify_twb_nondestructive(
    spec: TwbSpec,
    setting: NlaSetting,
    cutoff: FockCutoff,
) -> Result<AmplificationResult<TwoModePureState>> {
    let prob = Source::Twb(spec).checked_probability(setting, cutoff)?;
    let schmidt: Vec<Complex64> = spec
        .schmidt(cutoff.dim())
        .iter()
        .enumerate()
        .map(|(n, s)| Complex64::new(s * setting.weight(n), 0.0))
        .collect();
    Ok(AmplificationResult {
        state: TwoModePureState::from_schmidt(&schmidt, cutoff)?,
        success_probability: prob,
    })
}

/// Heralded (destructive) amplification: the conditional diagonal state of
/// mode `b` after mode `a` is consumed by a successful measurement.
pub fn amplify_twb_destructive(
    spec: TwbSpec,
    setting: NlaSetting,
    cutoff: FockCutoff,
) -> Result<AmplificationResult<SingleModeDensityState>> {
    let prob = Source::Twb(spec).checked_probability(setting, cutoff)?;
    let pops: Vec<f64> = spec
        .schmidt(cutoff.dim())
        .iter()
        .enumerate()
        .map(|(n, s)| (s * setting.weight(n)).powi(2))
        .collect();
    Ok(AmplificationResult {
        state: SingleModeDensityState::from_populations(&pops, cutoff)?,
        success_probability: prob,
    })
}

/// First-order expansion of the amplifier at `g = 1 + γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowGainExpansion {
    /// Diagonal of `I − γ Σ_{n≤p} (p−n)|n⟩⟨n|`.
    pub operator: Vec<f64>,
    /// `1 − 2γ Σ_{n≤p} (p−n) |⟨n|ψ⟩|²`; the error against the exact value is
    /// `O(γ²)`.
    pub probability: f64,
    /// Set when γ exceeds 0.05 and second-order terms start to matter.
    pub beyond_recommended_gain: bool,
}

pub const LOW_GAIN_MAX: f64 = 0.1;
pub const LOW_GAIN_ADVISORY: f64 = 0.05;

pub fn low_gain_expansion(state: &impl NlaTarget, gamma: f64, p: usize) -> Result<LowGainExpansion> {
    if !(gamma > 0.0 && gamma <= LOW_GAIN_MAX) {
        return Err(invalid(format!("low-gain expansion needs 0 < gamma <= {LOW_GAIN_MAX}, got {gamma}")));
    }
    let pops = state.amplified_mode_populations();
    let n_max = pops.len() - 1;
    if p >= n_max {
        return Err(invalid(format!("threshold p = {p} must be below the cutoff n_max = {n_max}")));
    }
    let beyond = gamma > LOW_GAIN_ADVISORY;
    if beyond {
        log::warn!("low-gain expansion used at gamma = {gamma}; O(gamma^2) error is no longer small");
    }
    let operator = (0..pops.len())
        .map(|n| if n <= p { 1.0 - gamma * (p - n) as f64 } else { 1.0 })
        .collect();
    let shift: f64 = (0..=p).map(|n| (p - n) as f64 * pops[n]).sum();
    Ok(LowGainExpansion {
        operator,
        probability: 1.0 - 2.0 * gamma * shift,
        beyond_recommended_gain: beyond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{expectation_number, partial_trace, partial_trace_b};
    use crate::gaussian::{coherent_state, squeezed_vacuum_state, twin_beam_state};
    use approx::assert_abs_diff_eq;

    fn cutoff(n: usize) -> FockCutoff {
        FockCutoff::with_n_max(n).unwrap()
    }

    fn setting(g: f64, p: usize) -> NlaSetting {
        NlaSetting::new(g, p).unwrap()
    }

    #[test]
    fn rejects_deamplification() {
        assert!(NlaSetting::new(0.9, 2).is_err());
        assert!(NlaSetting::new(f64::INFINITY, 2).is_err());
    }

    #[test]
    fn operator_identities() {
        assert!(success_operator(setting(1.0, 5), cutoff(10)).unwrap().iter().all(|&e| e == 1.0));
        assert!(success_operator(setting(7.0, 0), cutoff(10)).unwrap().iter().all(|&e| e == 1.0));
    }

    #[test]
    fn operator_g4_p3() {
        let e = success_operator(setting(4.0, 3), cutoff(8)).unwrap();
        let expected = [1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(e, expected);
    }

    #[test]
    fn threshold_must_sit_below_cutoff() {
        assert!(success_operator(setting(2.0, 8), cutoff(8)).is_err());
    }

    #[test]
    fn probability_is_one_at_unit_gain() {
        let s = squeezed_vacuum_state(SqueezedVacSpec::real(0.73).unwrap(), cutoff(60)).unwrap();
        assert_eq!(success_probability(&s, setting(1.0, 3)), 1.0);
    }

    #[test]
    fn vacuum_probability() {
        let vac = SingleModePureState::vacuum(cutoff(10));
        assert_abs_diff_eq!(success_probability(&vac, setting(3.0, 4)), 3f64.powi(-8), epsilon = 1e-18);
    }

    #[test]
    fn coherent_probability_against_brute_force_series() {
        // reference: P = e^{-|α|²}[g^{-2p} Σ_{n≤p} (g|α|)^{2n}/n! + Σ_{n>p} |α|^{2n}/n!] to n = 200
        let (alpha, g, p) = (0.8f64, 4.0f64, 3usize);
        let mut series = 0.0;
        let mut fact = 1.0;
        for n in 0..=200usize {
            if n > 0 {
                fact *= n as f64;
            }
            let term = if n <= p {
                g.powi(-2 * p as i32) * (g * alpha).powi(2 * n as i32) / fact
            } else {
                alpha.powi(2 * n as i32) / fact
            };
            series += term;
        }
        series *= (-alpha * alpha).exp();
        let exact = Source::Coherent(CoherentSpec::real(alpha).unwrap()).success_probability(setting(g, p));
        assert_abs_diff_eq!(exact, series, epsilon = 1e-12);
        let state = coherent_state(CoherentSpec::real(alpha).unwrap(), FockCutoff::new(60, 1e-15).unwrap()).unwrap();
        assert_abs_diff_eq!(success_probability(&state, setting(g, p)), series, epsilon = 1e-12);
    }

    #[test]
    fn unit_gain_leaves_state_untouched() {
        let spec = CoherentSpec::real(0.8).unwrap();
        let s = coherent_state(spec, cutoff(30)).unwrap();
        let out = amplify_single_mode_pure(&s, setting(1.0, 3)).unwrap();
        assert_eq!(out.success_probability, 1.0);
        assert!(out.state.distance(&s) < 1e-12);
    }

    #[test]
    fn amplified_coherent_follows_closed_form() {
        let (alpha, g, p) = (0.8f64, 2.5f64, 3usize);
        let spec = CoherentSpec::real(alpha).unwrap();
        let cut = FockCutoff::new(50, 1e-12).unwrap();
        let out = amplify_coherent(spec, setting(g, p), cut).unwrap();
        let norm = (-0.5 * alpha * alpha).exp() / out.success_probability.sqrt();
        let mut fact = 1.0f64;
        for (n, c) in out.state.amplitudes().iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = if n <= p {
                norm * g.powi(-(p as i32)) * (g * alpha).powi(n as i32) / fact.sqrt()
            } else {
                norm * alpha.powi(n as i32) / fact.sqrt()
            };
            assert_abs_diff_eq!(c.re, expected, epsilon = 1e-12);
            assert_eq!(c.im, 0.0);
        }
        let generic = amplify_single_mode_pure(&coherent_state(spec, cut).unwrap(), setting(g, p)).unwrap();
        assert!(generic.state.distance(&out.state) < 1e-12);
    }

    #[test]
    fn squeezed_parity_is_preserved() {
        let spec = SqueezedVacSpec::real(0.73).unwrap();
        for &(g, p) in &[(2.0, 2), (4.0, 3), (8.0, 4)] {
            let st = setting(g, p);
            let cut = Source::Squeezed(spec).cutoff_for_amplified_tail(st, 1e-10, 16, 512).unwrap();
            let out = amplify_squeezed(spec, st, cut).unwrap();
            assert!(out.state.amplitudes().iter().skip(1).step_by(2).all(|c| *c == Complex64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn twb_unit_gain_is_input() {
        let spec = TwbSpec::new(0.63).unwrap();
        let cut = cutoff(80);
        let out = amplify_twb_nondestructive(spec, setting(1.0, 3), cut).unwrap();
        assert_eq!(out.success_probability, 1.0);
        assert!(out.state.distance(&twin_beam_state(spec, cut).unwrap()) < 1e-12);
        let red = amplify_twb_destructive(spec, setting(1.0, 3), cut).unwrap();
        for (n, p) in red.state.populations().iter().enumerate() {
            assert_abs_diff_eq!(*p, (1.0 - 0.63f64.powi(2)) * 0.63f64.powi(2 * n as i32), epsilon = 1e-15);
        }
    }

    #[test]
    fn twb_vacuum_limit() {
        let out = amplify_twb_destructive(TwbSpec::new(0.0).unwrap(), setting(3.0, 2), cutoff(16)).unwrap();
        assert_abs_diff_eq!(out.success_probability, 3f64.powi(-4), epsilon = 1e-18);
        assert_abs_diff_eq!(out.state.populations()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn twb_destructive_against_direct_formula() {
        let (chi, g, p) = (0.63f64, 4.0f64, 3usize);
        let spec = TwbSpec::new(chi).unwrap();
        let cut = cutoff(200);
        let out = amplify_twb_destructive(spec, setting(g, p), cut).unwrap();
        let c2 = chi * chi;
        let head: f64 = (0..=p).map(|n| (g * chi).powi(2 * n as i32)).sum::<f64>() * g.powi(-2 * p as i32);
        let prob = (1.0 - c2) * (head + c2.powi(p as i32 + 1) / (1.0 - c2));
        assert_abs_diff_eq!(out.success_probability, prob, epsilon = 1e-15);
        for (n, r) in out.state.populations().iter().enumerate() {
            let direct = if n <= p {
                (1.0 - c2) * g.powi(2 * (n as i32 - p as i32)) * c2.powi(n as i32) / prob
            } else {
                (1.0 - c2) * c2.powi(n as i32) / prob
            };
            assert_abs_diff_eq!(*r, direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn twb_schmidt_pattern() {
        let out = amplify_twb_nondestructive(TwbSpec::new(0.63).unwrap(), setting(4.0, 3), cutoff(60)).unwrap();
        let c = out.state.coeffs();
        // head grows by gχ > 1, tail decays by χ
        for n in 0..3 {
            assert!(c[(n + 1, n + 1)].re > c[(n, n)].re);
        }
        for n in 3..20 {
            assert_abs_diff_eq!(c[(n + 1, n + 1)].re / c[(n, n)].re, 0.63, epsilon = 1e-12);
        }
        let reduced = partial_trace(&out.state, Mode::A);
        let other = partial_trace(&out.state, Mode::B);
        assert!(reduced.distance(&other) < 1e-15);
    }

    #[test]
    fn nondestructive_trace_equals_destructive() {
        for &chi in &[0.2, 0.5, 0.63, 0.8] {
            for &g in &[1.0, 2.0, 4.0, 8.0] {
                for &p in &[2usize, 3, 4] {
                    let spec = TwbSpec::new(chi).unwrap();
                    let st = setting(g, p);
                    let cut = Source::Twb(spec).cutoff_for_amplified_tail(st, 1e-10, 16, 512).unwrap();
                    let nd = amplify_twb_nondestructive(spec, st, cut).unwrap();
                    let d = amplify_twb_destructive(spec, st, cut).unwrap();
                    assert!(partial_trace_b(&nd.state).distance(&d.state) < 1e-12);
                    assert_eq!(nd.success_probability, d.success_probability);
                }
            }
        }
    }

    #[test]
    fn probability_decreases_with_gain() {
        let s = coherent_state(CoherentSpec::real(0.8).unwrap(), cutoff(40)).unwrap();
        let mut last = 1.0;
        for i in 1..40 {
            let g = 1.0 + 0.2 * i as f64;
            let prob = success_probability(&s, setting(g, 3));
            assert!(prob < last && prob > 0.0);
            last = prob;
        }
    }

    #[test]
    fn support_above_threshold_passes_with_certainty() {
        let s = SingleModePureState::fock(5, cutoff(10)).unwrap();
        assert_eq!(success_probability(&s, setting(6.0, 5)), 1.0);
    }

    #[test]
    fn density_amplification_matches_pure() {
        let s = coherent_state(CoherentSpec::new(Complex64::new(0.5, 0.4)).unwrap(), cutoff(30)).unwrap();
        let st = setting(3.0, 2);
        let pure = amplify_single_mode_pure(&s, st).unwrap();
        let mixed = amplify_single_mode_density(&s.to_density(), st).unwrap();
        assert!(mixed.state.distance(&pure.state.to_density()) < 1e-14);
        assert_abs_diff_eq!(mixed.success_probability, pure.success_probability, epsilon = 1e-15);
    }

    #[test]
    fn truncation_is_checked_after_amplification() {
        let spec = TwbSpec::new(0.8).unwrap();
        let err = amplify_twb_destructive(spec, setting(8.0, 4), FockCutoff::new(20, 1e-10).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn heavier_tail_needs_larger_cutoff() {
        let st = setting(8.0, 4);
        let small = Source::Twb(TwbSpec::new(0.2).unwrap()).cutoff_for_amplified_tail(st, 1e-10, 16, 512).unwrap();
        let large = Source::Twb(TwbSpec::new(0.8).unwrap()).cutoff_for_amplified_tail(st, 1e-10, 16, 512).unwrap();
        assert!(large.n_max() > small.n_max());
        assert_eq!(small.n_max(), 16);
    }

    #[test]
    fn low_gain_limits() {
        let s = coherent_state(CoherentSpec::real(0.8).unwrap(), cutoff(30)).unwrap();
        assert!(low_gain_expansion(&s, 0.0, 2).is_err());
        assert!(low_gain_expansion(&s, 0.2, 2).is_err());
        let tiny = low_gain_expansion(&s, 1e-12, 2).unwrap();
        assert!(tiny.operator.iter().all(|e| (e - 1.0).abs() < 1e-11));
        assert_abs_diff_eq!(tiny.probability, 1.0, epsilon = 1e-11);
        assert!(low_gain_expansion(&s, 0.08, 2).unwrap().beyond_recommended_gain);
    }

    #[test]
    fn low_gain_coherent_substitution() {
        let s = coherent_state(CoherentSpec::real(0.8).unwrap(), FockCutoff::new(40, 1e-14).unwrap()).unwrap();
        let lambda: f64 = 0.64;
        let poisson = |n: i32, fact: f64| (-lambda).exp() * lambda.powi(n) / fact;
        let expected = 1.0 - 0.02 * (2.0 * poisson(0, 1.0) + poisson(1, 1.0));
        let approx = low_gain_expansion(&s, 0.01, 2).unwrap();
        assert_abs_diff_eq!(approx.probability, expected, epsilon = 1e-13);
        assert_eq!(&approx.operator[..4], &[0.98, 0.99, 1.0, 1.0]);
    }

    #[test]
    fn low_gain_error_is_second_order() {
        let s = coherent_state(CoherentSpec::real(0.8).unwrap(), cutoff(40)).unwrap();
        let err = |gamma: f64| {
            let exact = success_probability(&s, setting(1.0 + gamma, 2));
            (exact - low_gain_expansion(&s, gamma, 2).unwrap().probability).abs()
        };
        let (e1, e2, e3) = (err(1e-2), err(5e-3), err(2.5e-3));
        assert!((e1 / e2 - 4.0).abs() < 0.1, "{}", e1 / e2);
        assert!((e2 / e3 - 4.0).abs() < 0.1, "{}", e2 / e3);
    }

    #[test]
    fn mean_photons_grow_under_amplification() {
        let spec = CoherentSpec::real(0.8).unwrap();
        let st = setting(4.0, 3);
        let cut = Source::Coherent(spec).cutoff_for_amplified_tail(st, 1e-10, 16, 512).unwrap();
        let out = amplify_coherent(spec, st, cut).unwrap();
        assert!(expectation_number(&out.state) > 0.64);
    }
}
