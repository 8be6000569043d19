//! Parameter sweeps over gain and threshold, and the frozen figure presets.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::fock::{expectation_number, FockCutoff, Mode, SingleModeDensityState, SingleModePureState, TwoModePureState};
use crate::gaussian::{
    parameter_for_mean_energy, CoherentSpec, Source, SqueezedVacSpec, StateFamily, TwbSpec, MAX_CUTOFF,
};
use crate::measures::{
    delta_ng_single, delta_ng_two_mode, entanglement_entropy, moments_and_cm, Convergence, MeasureReport,
};
use crate::nla::{
    amplify_coherent, amplify_squeezed, amplify_twb_destructive, amplify_twb_nondestructive, NlaSetting,
};
use crate::phase_space::{negativity_volume, NegativityEstimate, wigner_field, wigner_log_negativity, PhaseGrid, WignerField};

pub const DEFAULT_ACCURACY: f64 = 1e-6;
pub const DEFAULT_G_MIN: f64 = 1.0;
pub const DEFAULT_G_MAX: f64 = 8.0;
pub const DEFAULT_G_STEPS: usize = 100;
/// Smallest cutoff the automatic choice returns.
pub const AUTO_CUTOFF_FLOOR: usize = 16;
pub const DEFAULT_WIGNER_POINTS: usize = 401;
/// Tail tolerance of the automatic cutoff when phase-space measures are
/// requested. `∫|W|` responds to the truncated amplitudes, so a discarded mass
/// `ε` moves it by about `2√ε`; keep that below a tenth of the accuracy.
pub fn wigner_tail_tol(accuracy: f64) -> f64 {
    (accuracy / 20.0).powi(2).min(FockCutoff::DEFAULT_TAIL_TOL)
}

pub const CSV_HEADER: &str = "g,p,psuccess,nbar,delta_ng,delta_nc,wln,ent_entropy,n_max,accuracy";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Coherent,
    Squeezed,
    TwbDestructive,
    TwbNondestructive,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Coherent => "coherent",
            Family::Squeezed => "squeezed",
            Family::TwbDestructive => "twb-destructive",
            Family::TwbNondestructive => "twb-nondestructive",
        }
    }

    fn state_family(&self) -> StateFamily {
        match self {
            Family::Coherent => StateFamily::Coherent,
            Family::Squeezed => StateFamily::Squeezed,
            Family::TwbDestructive | Family::TwbNondestructive => StateFamily::Twb,
        }
    }

    pub fn supports(&self, measure: Measure) -> bool {
        match measure {
            Measure::PSuccess | Measure::NBar | Measure::Ng => true,
            Measure::Nc | Measure::Wln => *self != Family::TwbNondestructive,
            Measure::Entanglement => *self == Family::TwbNondestructive,
        }
    }

    /// Every measure the family supports, in column order.
    pub fn default_measures(&self) -> Vec<Measure> {
        Measure::ALL.into_iter().filter(|m| self.supports(*m)).collect()
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "coherent" => Ok(Family::Coherent),
            "squeezed" => Ok(Family::Squeezed),
            "twb-destructive" => Ok(Family::TwbDestructive),
            "twb-nondestructive" => Ok(Family::TwbNondestructive),
            other => Err(invalid(format!("unknown family '{other}'"))),
        }
    }
}

/// Input parameter given directly (`|α|`, `r` or `χ`) or through the mean
/// photon number it should carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StateParam {
    Value(f64),
    Energy(f64),
}

impl FromStr for StateParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("cannot parse state parameter '{s}'")))
        };
        match s.strip_prefix("energy:") {
            Some(rest) => Ok(StateParam::Energy(parse(rest)?)),
            None => Ok(StateParam::Value(parse(s)?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    PSuccess,
    NBar,
    Ng,
    Nc,
    Wln,
    Entanglement,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::PSuccess,
        Measure::NBar,
        Measure::Ng,
        Measure::Nc,
        Measure::Wln,
        Measure::Entanglement,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::PSuccess => "psuccess",
            Measure::NBar => "nbar",
            Measure::Ng => "ng",
            Measure::Nc => "nc",
            Measure::Wln => "wln",
            Measure::Entanglement => "entanglement",
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| invalid(format!("unknown measure '{}'", s.trim())))
    }
}

/// Parses a comma-separated measure list.
pub fn parse_measures(s: &str) -> Result<Vec<Measure>> {
    let mut out: Vec<Measure> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(Measure::from_str)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutoffChoice {
    Auto,
    Fixed(usize),
}

impl FromStr for CutoffChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(CutoffChoice::Auto),
            other => other
                .parse::<usize>()
                .map(CutoffChoice::Fixed)
                .map_err(|_| invalid(format!("cutoff must be 'auto' or an integer, got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GainRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min < 1.0 || max < min {
            return Err(invalid(format!("gain range must satisfy 1 <= g_min <= g_max, got [{min}, {max}]")));
        }
        if steps < 2 && !(steps == 1 && min == max) {
            return Err(invalid("a gain range needs at least two steps unless g_min == g_max"));
        }
        Ok(Self { min, max, steps })
    }

    pub fn single(g: f64) -> Result<Self> {
        Self::new(g, g, 1)
    }

    /// Uniform grid including both ends.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i == self.steps - 1 {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub family: Family,
    pub param: StateParam,
    pub gains: GainRange,
    pub p_list: Vec<usize>,
    pub measures: Vec<Measure>,
    pub accuracy: f64,
    pub cutoff: CutoffChoice,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p_list.is_empty() {
            return Err(invalid("the threshold list is empty"));
        }
        if self.measures.is_empty() {
            return Err(invalid("no measures requested"));
        }
        for m in &self.measures {
            if !self.family.supports(*m) {
                return Err(invalid(format!(
                    "measure '{}' is not available for family '{}'",
                    m.name(),
                    self.family.name()
                )));
            }
        }
        if !(1e-8..=1e-2).contains(&self.accuracy) {
            return Err(invalid(format!("accuracy must lie in [1e-8, 1e-2], got {}", self.accuracy)));
        }
        GainRange::new(self.gains.min, self.gains.max, self.gains.steps)?;
        resolve_parameter(self.family, self.param)?;
        Ok(())
    }

    fn wants(&self, m: Measure) -> bool {
        self.measures.contains(&m)
    }
}

/// Family parameter (`|α|`, `r` or `χ`) after energy matching.
pub fn resolve_parameter(family: Family, param: StateParam) -> Result<f64> {
    let value = match param {
        StateParam::Value(v) => v,
        StateParam::Energy(n) => parameter_for_mean_energy(family.state_family(), n)?,
    };
    source(family, value)?;
    Ok(value)
}

fn source(family: Family, value: f64) -> Result<Source> {
    Ok(match family.state_family() {
        StateFamily::Coherent => Source::Coherent(CoherentSpec::real(value)?),
        StateFamily::Squeezed => Source::Squeezed(SqueezedVacSpec::real(value)?),
        StateFamily::Twb => Source::Twb(TwbSpec::new(value)?),
    })
}

/// Smallest cutoff (at least [`AUTO_CUTOFF_FLOOR`]) leaving amplified tail mass
/// below the default tail tolerance.
pub fn choose_cutoff(family: Family, value: f64, setting: NlaSetting) -> Result<FockCutoff> {
    choose_cutoff_with(family, value, setting, FockCutoff::DEFAULT_TAIL_TOL, MAX_CUTOFF)
}

pub fn choose_cutoff_with(
    family: Family,
    value: f64,
    setting: NlaSetting,
    tail_tol: f64,
    limit: usize,
) -> Result<FockCutoff> {
    let cutoff = source(family, value)?.cutoff_for_amplified_tail(setting, tail_tol, AUTO_CUTOFF_FLOOR, limit)?;
    log::debug!("{} {value}: g = {}, p = {} -> n_max = {}", family.name(), setting.g(), setting.p(), cutoff.n_max());
    Ok(cutoff)
}

/// Conditional state produced by the amplifier for one family.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplifiedState {
    Pure(SingleModePureState),
    Diagonal(SingleModeDensityState),
    TwoMode(TwoModePureState),
}

pub fn amplified_state(
    family: Family,
    value: f64,
    setting: NlaSetting,
    cutoff: FockCutoff,
) -> Result<(AmplifiedState, f64)> {
    Ok(match family {
        Family::Coherent => {
            let r = amplify_coherent(CoherentSpec::real(value)?, setting, cutoff)?;
            (AmplifiedState::Pure(r.state), r.success_probability)
        }
        Family::Squeezed => {
            let r = amplify_squeezed(SqueezedVacSpec::real(value)?, setting, cutoff)?;
            (AmplifiedState::Pure(r.state), r.success_probability)
        }
        Family::TwbDestructive => {
            let r = amplify_twb_destructive(TwbSpec::new(value)?, setting, cutoff)?;
            (AmplifiedState::Diagonal(r.state), r.success_probability)
        }
        Family::TwbNondestructive => {
            let r = amplify_twb_nondestructive(TwbSpec::new(value)?, setting, cutoff)?;
            (AmplifiedState::TwoMode(r.state), r.success_probability)
        }
    })
}

fn point_cutoff(spec: &SweepSpec, value: f64, setting: NlaSetting) -> Result<FockCutoff> {
    match spec.cutoff {
        CutoffChoice::Auto if spec.wants(Measure::Nc) || spec.wants(Measure::Wln) => {
            choose_cutoff_with(spec.family, value, setting, wigner_tail_tol(spec.accuracy), MAX_CUTOFF)
        }
        CutoffChoice::Auto => choose_cutoff(spec.family, value, setting),
        CutoffChoice::Fixed(n) => {
            if n > MAX_CUTOFF {
                return Err(Error::ResourceLimit { n_max: n, limit: MAX_CUTOFF });
            }
            FockCutoff::new(n, FockCutoff::DEFAULT_TAIL_TOL)
        }
    }
}

/// All requested measures of the amplified state at gain `g` and threshold `p`.
pub fn evaluate_point(spec: &SweepSpec, g: f64, p: usize) -> Result<MeasureReport> {
    let value = resolve_parameter(spec.family, spec.param)?;
    let setting = NlaSetting::new(g, p)?;
    let cutoff = point_cutoff(spec, value, setting)?;
    evaluate_with_cutoff(spec, value, setting, cutoff)
}

pub fn evaluate_with_cutoff(
    spec: &SweepSpec,
    value: f64,
    setting: NlaSetting,
    cutoff: FockCutoff,
) -> Result<MeasureReport> {
    let (state, prob) = amplified_state(spec.family, value, setting, cutoff)?;
    let mut report = MeasureReport {
        p_success: spec.wants(Measure::PSuccess).then_some(prob),
        nbar: None,
        delta_ng: None,
        delta_nc: None,
        wln: None,
        ent_entropy: None,
        convergence: Convergence {
            n_max: cutoff.n_max(),
            tail_tol: cutoff.tail_tol(),
            accuracy: None,
            quadrature_intervals: None,
            total_integral: None,
        },
    };
    let want_nc = spec.wants(Measure::Nc) || spec.wants(Measure::Wln);
    let fill_single = |report: &mut MeasureReport, nbar: f64, ng: Result<f64>, nc: &dyn Fn() -> Result<NegativityEstimate>| -> Result<()> {
        if spec.wants(Measure::NBar) {
            report.nbar = Some(nbar);
        }
        if spec.wants(Measure::Ng) {
            report.delta_ng = Some(ng?);
        }
        if want_nc {
            let est = nc()?;
            report.convergence.accuracy = Some(spec.accuracy);
            report.convergence.quadrature_intervals = Some(est.intervals);
            report.convergence.total_integral = Some(est.total_integral);
            if spec.wants(Measure::Nc) {
                report.delta_nc = Some(est.delta_nc);
            }
            if spec.wants(Measure::Wln) {
                report.wln = Some(wigner_log_negativity(est.delta_nc)?);
            }
        }
        Ok(())
    };
    match &state {
        AmplifiedState::Pure(s) => {
            let ng = if spec.wants(Measure::Ng) { delta_ng_single(s) } else { Ok(0.0) };
            fill_single(&mut report, expectation_number(s), ng, &|| negativity_volume(s, spec.accuracy))?;
        }
        AmplifiedState::Diagonal(s) => {
            let ng = if spec.wants(Measure::Ng) { delta_ng_single(s) } else { Ok(0.0) };
            fill_single(&mut report, expectation_number(s), ng, &|| negativity_volume(s, spec.accuracy))?;
        }
        AmplifiedState::TwoMode(s) => {
            if spec.wants(Measure::NBar) {
                let pops = s.mode_populations(Mode::B);
                report.nbar = Some(pops.iter().enumerate().map(|(n, q)| n as f64 * q).sum());
            }
            if spec.wants(Measure::Ng) {
                report.delta_ng = Some(delta_ng_two_mode(s)?);
            }
            if spec.wants(Measure::Entanglement) {
                report.ent_entropy = Some(entanglement_entropy(s)?);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub g: f64,
    pub p: usize,
    pub result: Result<MeasureReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl SweepOutput {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.result.is_err())
    }

    /// Most severe failure, used to pick the process exit status.
    pub fn first_error(&self) -> Option<&Error> {
        self.rows.iter().find_map(|r| r.result.as_ref().err())
    }

    /// CSV body rows without the header. Failed rows carry `nan` in every
    /// requested measure column.
    pub fn csv_rows(&self, prefix: &str) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let line = match &row.result {
                Ok(r) => [
                    cell(r.p_success),
                    cell(r.nbar),
                    cell(r.delta_ng),
                    cell(r.delta_nc),
                    cell(r.wln),
                    cell(r.ent_entropy),
                    r.convergence.n_max.to_string(),
                    cell(r.convergence.accuracy),
                ]
                .join(","),
                Err(_) => {
                    let mark = |m: Measure| if self.spec.wants(m) { "nan" } else { "" };
                    [
                        mark(Measure::PSuccess),
                        mark(Measure::NBar),
                        mark(Measure::Ng),
                        mark(Measure::Nc),
                        mark(Measure::Wln),
                        mark(Measure::Entanglement),
                        "",
                        "",
                    ]
                    .join(",")
                }
            };
            let _ = writeln!(out, "{prefix}{},{},{line}", num(row.g), row.p);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows(""))
    }

    pub fn summary(&self) -> serde_json::Value {
        let failures: Vec<_> = self
            .failures()
            .map(|r| {
                let err = r.result.as_ref().unwrap_err();
                json!({ "g": r.g, "p": r.p, "error": err.to_string(), "kind": format!("{:?}", err.kind()) })
            })
            .collect();
        let cutoffs: Vec<usize> = self
            .rows
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|m| m.convergence.n_max))
            .collect();
        json!({
            "spec": self.spec,
            "points": self.rows.len(),
            "max_n_max": cutoffs.iter().max(),
            "tail_tol": FockCutoff::DEFAULT_TAIL_TOL,
            "failures": failures,
        })
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| invalid(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Evaluates every `(p, g)` point of the sweep, `p` outermost. Points run
/// concurrently and are gathered in grid order.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepOutput> {
    spec.validate()?;
    let points: Vec<(f64, usize)> = spec
        .p_list
        .iter()
        .flat_map(|&p| spec.gains.values().into_iter().map(move |g| (g, p)))
        .collect();
    let rows = with_jobs(jobs, || {
        points
            .par_iter()
            .map(|&(g, p)| SweepRow {
                g,
                p,
                result: evaluate_point(spec, g, p),
            })
            .collect::<Vec<_>>()
    })?;
    for row in &rows {
        if let Err(e) = &row.result {
            log::warn!("g = {}, p = {}: {e}", row.g, row.p);
        }
    }
    Ok(SweepOutput {
        spec: spec.clone(),
        rows,
    })
}

/// Wigner field of one amplified single-mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerRequest {
    pub family: Family,
    pub param: StateParam,
    pub g: f64,
    pub p: usize,
    pub points_per_axis: usize,
    pub half_width: Option<f64>,
    pub cutoff: CutoffChoice,
}

pub fn run_wigner(req: &WignerRequest) -> Result<(WignerField, FockCutoff)> {
    if req.family == Family::TwbNondestructive {
        return Err(invalid("Wigner fields are single-mode; use twb-destructive for the conditional state"));
    }
    let value = resolve_parameter(req.family, req.param)?;
    let setting = NlaSetting::new(req.g, req.p)?;
    let spec = SweepSpec {
        family: req.family,
        param: req.param,
        gains: GainRange::single(req.g)?,
        p_list: vec![req.p],
        measures: vec![Measure::Nc],
        accuracy: DEFAULT_ACCURACY,
        cutoff: req.cutoff,
    };
    let cutoff = point_cutoff(&spec, value, setting)?;
    let (state, _) = amplified_state(req.family, value, setting, cutoff)?;
    let field = match &state {
        AmplifiedState::Pure(s) => field_for(s, req)?,
        AmplifiedState::Diagonal(s) => field_for(s, req)?,
        AmplifiedState::TwoMode(_) => unreachable!("rejected above"),
    };
    Ok((field, cutoff))
}

fn field_for(s: &impl crate::measures::SingleModeState, req: &WignerRequest) -> Result<WignerField> {
    let moments = moments_and_cm(s)?;
    let mut grid = PhaseGrid::for_moments(&moments, req.points_per_axis)?;
    if let Some(hw) = req.half_width {
        grid = PhaseGrid::new(grid.center, hw, req.points_per_axis)?;
    }
    wigner_field(s, grid)
}

/// Figure dataset presets with frozen parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetId {
    Fig1,
    Fig2,
    Fig3,
    Fig3Twb,
    Fig4,
    Fig5,
}

impl PresetId {
    pub const ALL: [PresetId; 6] = [
        PresetId::Fig1,
        PresetId::Fig2,
        PresetId::Fig3,
        PresetId::Fig3Twb,
        PresetId::Fig4,
        PresetId::Fig5,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PresetId::Fig1 => "fig1",
            PresetId::Fig2 => "fig2",
            PresetId::Fig3 => "fig3",
            PresetId::Fig3Twb => "fig3-twb",
            PresetId::Fig4 => "fig4",
            PresetId::Fig5 => "fig5",
        }
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| invalid(format!("unknown preset '{}'", s.trim())))
    }
}

pub mod constants {
    pub const FIG1_ALPHA: f64 = 0.8;
    pub const FIG1_R: f64 = 0.73;
    pub const FIG1_CHI: f64 = 0.63;
    pub const FIG1_G: f64 = 4.0;
    pub const FIG1_P: usize = 3;
    pub const FIG1_NBAR: f64 = 0.64;
    pub const FIG2_ALPHA: f64 = 0.8;
    pub const FIG3_R: f64 = 0.73;
    pub const FIG3_TWB_CHI: f64 = 0.63;
    pub const CURVE_P: [usize; 3] = [2, 3, 4];
    pub const FIG4_G: f64 = 3.0;
    pub const FIG4_P: usize = 2;
    /// `n̄ = 0.1, 0.2, …, 1.5`.
    pub const FIG4_NBAR_STEPS: usize = 15;
    pub const FIG5_CHI1: f64 = 0.63;
    pub const FIG5_CHI2: f64 = 0.50;
    pub const FIG5_ENTANGLEMENT_CHI: [f64; 3] = [0.20, 0.63, 0.80];
    /// Threshold for the fig5 curves.
    pub const FIG5_P: usize = 3;
}

pub fn fig4_energies() -> Vec<f64> {
    (1..=constants::FIG4_NBAR_STEPS).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetOptions {
    pub gains: GainRange,
    pub accuracy: f64,
    pub jobs: Option<usize>,
    pub points_per_axis: usize,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            gains: GainRange {
                min: DEFAULT_G_MIN,
                max: DEFAULT_G_MAX,
                steps: DEFAULT_G_STEPS,
            },
            accuracy: DEFAULT_ACCURACY,
            jobs: None,
            points_per_axis: DEFAULT_WIGNER_POINTS,
        }
    }
}

/// Named gain sweeps making up a preset (the fig4 energy scan and the
/// fig1 fields are handled separately).
pub fn preset_sweeps(id: PresetId, opts: &PresetOptions) -> Vec<(String, SweepSpec)> {
    use constants::*;
    use Measure::*;
    let sweep = |family: Family, value: f64, p_list: Vec<usize>, measures: Vec<Measure>, gains: GainRange| SweepSpec {
        family,
        param: StateParam::Value(value),
        gains,
        p_list,
        measures,
        accuracy: opts.accuracy,
        cutoff: CutoffChoice::Auto,
    };
    let curves = CURVE_P.to_vec();
    let g = opts.gains;
    let single_mode = vec![PSuccess, NBar, Ng, Nc, Wln];
    match id {
        PresetId::Fig1 => vec![
            ("fig1d_coherent".into(), sweep(Family::Coherent, FIG1_ALPHA, vec![FIG1_P], vec![PSuccess, NBar], g)),
            ("fig1d_squeezed".into(), sweep(Family::Squeezed, FIG1_R, vec![FIG1_P], vec![PSuccess, NBar], g)),
            ("fig1d_twb_destructive".into(), sweep(Family::TwbDestructive, FIG1_CHI, vec![FIG1_P], vec![PSuccess, NBar], g)),
            ("fig1d_twb_nondestructive".into(), sweep(Family::TwbNondestructive, FIG1_CHI, vec![FIG1_P], vec![PSuccess, NBar], g)),
        ],
        PresetId::Fig2 => vec![("fig2".into(), sweep(Family::Coherent, FIG2_ALPHA, curves, single_mode, g))],
        PresetId::Fig3 => vec![("fig3".into(), sweep(Family::Squeezed, FIG3_R, curves, single_mode, g))],
        PresetId::Fig3Twb => vec![("fig3-twb".into(), sweep(Family::TwbDestructive, FIG3_TWB_CHI, curves, single_mode, g))],
        PresetId::Fig4 => Vec::new(),
        PresetId::Fig5 => {
            let mut out = vec![
                ("fig5_left_destructive_chi1".into(), sweep(Family::TwbDestructive, FIG5_CHI1, vec![FIG5_P], vec![PSuccess, Ng], g)),
                ("fig5_left_nondestructive_chi1".into(), sweep(Family::TwbNondestructive, FIG5_CHI1, vec![FIG5_P], vec![PSuccess, Ng], g)),
                ("fig5_left_nondestructive_chi2".into(), sweep(Family::TwbNondestructive, FIG5_CHI2, vec![FIG5_P], vec![PSuccess, Ng], g)),
            ];
            for chi in FIG5_ENTANGLEMENT_CHI {
                out.push((
                    format!("fig5_right_chi{:03}", (chi * 100.0).round() as u32),
                    sweep(Family::TwbNondestructive, chi, vec![FIG5_P], vec![PSuccess, Entanglement], g),
                ));
            }
            out
        }
    }
}

/// Energy-matched comparison at fixed gain and threshold: one row per family
/// and input photon number.
pub fn run_energy_scan(
    families: &[Family],
    energies: &[f64],
    g: f64,
    p: usize,
    measures: &[Measure],
    accuracy: f64,
    jobs: Option<usize>,
) -> Result<Vec<(Family, f64, SweepOutput)>> {
    let mut out = Vec::new();
    for &family in families {
        for &nbar in energies {
            let spec = SweepSpec {
                family,
                param: StateParam::Energy(nbar),
                gains: GainRange::single(g)?,
                p_list: vec![p],
                measures: measures.iter().copied().filter(|m| family.supports(*m)).collect(),
                accuracy,
                cutoff: CutoffChoice::Auto,
            };
            out.push((family, nbar, run_sweep(&spec, jobs)?));
        }
    }
    Ok(out)
}

/// Files written by a preset and whether any point failed.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetReport {
    pub files: Vec<PathBuf>,
    pub first_error: Option<Error>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

/// Writes a sweep CSV and its summary JSON, returning the CSV path.
pub fn write_sweep(out: &SweepOutput, csv_path: &Path) -> Result<PathBuf> {
    write_file(csv_path, &out.to_csv())?;
    let summary = serde_json::to_string_pretty(&out.summary()).expect("summary serializes");
    write_file(&csv_path.with_extension("summary.json"), &(summary + "\n"))?;
    Ok(csv_path.to_path_buf())
}

pub fn run_preset(id: PresetId, opts: &PresetOptions, dir: &Path) -> Result<PresetReport> {
    use constants::*;
    std::fs::create_dir_all(dir).map_err(|e| invalid(format!("cannot create {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    let mut first_error = None;
    for (name, spec) in preset_sweeps(id, opts) {
        let out = run_sweep(&spec, opts.jobs)?;
        if first_error.is_none() {
            first_error = out.first_error().cloned();
        }
        files.push(write_sweep(&out, &dir.join(format!("{name}.csv")))?);
    }
    match id {
        PresetId::Fig1 => {
            for (tag, family, value) in [
                ("fig1a", Family::Coherent, FIG1_ALPHA),
                ("fig1b", Family::Squeezed, FIG1_R),
                ("fig1c", Family::TwbDestructive, FIG1_CHI),
            ] {
                let req = WignerRequest {
                    family,
                    param: StateParam::Value(value),
                    g: FIG1_G,
                    p: FIG1_P,
                    points_per_axis: opts.points_per_axis,
                    half_width: None,
                    cutoff: CutoffChoice::Auto,
                };
                let (field, cutoff) = run_wigner(&req)?;
                let path = dir.join(format!("{tag}_wigner.csv"));
                field
                    .save(&path, cutoff.n_max())
                    .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
                files.push(path);
            }
        }
        PresetId::Fig4 => {
            let families = [Family::Coherent, Family::Squeezed, Family::TwbDestructive];
            let scan = run_energy_scan(
                &families,
                &fig4_energies(),
                FIG4_G,
                FIG4_P,
                &[Measure::PSuccess, Measure::Ng, Measure::Nc],
                opts.accuracy,
                opts.jobs,
            )?;
            let mut csv = format!("family,nbar_in,{CSV_HEADER}\n");
            let mut failures = Vec::new();
            for (family, nbar, out) in &scan {
                csv.push_str(&out.csv_rows(&format!("{},{},", family.name(), num(*nbar))));
                if let Some(e) = out.first_error() {
                    failures.push(json!({ "family": family.name(), "nbar_in": nbar, "error": e.to_string() }));
                    if first_error.is_none() {
                        first_error = Some(e.clone());
                    }
                }
            }
            let path = dir.join("fig4.csv");
            write_file(&path, &csv)?;
            let summary = json!({
                "g": FIG4_G,
                "p": FIG4_P,
                "energies": fig4_energies(),
                "accuracy": opts.accuracy,
                "failures": failures,
            });
            write_file(
                &path.with_extension("summary.json"),
                &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"),
            )?;
            files.push(path);
        }
        _ => {}
    }
    Ok(PresetReport { files, first_error })
}
