//! Wigner functions on phase-space grids and the negativity volume.
//!
//! Normalization is `∫ W dx dp = 1`, i.e. `W(x, p) = Tr[ϱ D(β) Π] / π` with
//! `β = √2 (x + i p)`; the vacuum takes the value `1/π` at the origin.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fock::{displacement_matrix, SingleModeDensityState};
use crate::measures::{moments_and_cm, FirstMomentsAndCM, SingleModeState};

/// Deviation of the total integral from one tolerated before a grid is
/// rejected as not covering the state.
pub const COVERAGE_TOL: f64 = 1e-4;

/// Negativity volumes below this are indistinguishable from round-off.
pub const NOISE_FLOOR: f64 = 1e-13;

/// `|W|` below this is treated as round-off when locating negative regions.
const ROUNDOFF_OFFSET: f64 = 1e-15;
const DEFAULT_SPACING: f64 = 0.04;
const MAX_HALF_WIDTH: f64 = 64.0;
const SEGMENT_PIECE: f64 = 0.5;
const SEGMENT_DEGREE: usize = 12;
const OUTER_DEGREE: usize = 8;
const OUTER_BUDGET: usize = 600;
const WINDOW_MARGIN: f64 = 0.5;

/// Uniform square grid centred on a phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub center: (f64, f64),
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl PhaseGrid {
    pub fn new(center: (f64, f64), half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("grid half-width must be positive and finite"));
        }
        if !(center.0.is_finite() && center.1.is_finite()) {
            return Err(invalid("grid centre must be finite"));
        }
        if points_per_axis < 33 || points_per_axis % 2 == 0 {
            return Err(invalid(format!(
                "points per axis must be odd and at least 33, got {points_per_axis}"
            )));
        }
        Ok(Self {
            center,
            half_width,
            points_per_axis,
        })
    }

    /// Grid centred on the state's first moments reaching out to where the
    /// Gaussian envelope has dropped below `1e-12` of its peak.
    pub fn for_moments(moments: &FirstMomentsAndCM, points_per_axis: usize) -> Result<Self> {
        let reach = (2.0 * 1e12f64.ln()).sqrt() * moments.largest_variance().sqrt();
        Self::new((moments.mean[0], moments.mean[1]), reach.max(6.0), points_per_axis)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.center.0 - self.half_width + i as f64 * self.spacing()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.center.1 - self.half_width + j as f64 * self.spacing()
    }
}

fn envelope_half_width(moments: &FirstMomentsAndCM) -> f64 {
    (4.0 * (2.0 * moments.largest_variance()).sqrt()).max(6.0)
}

/// Fast evaluator of `W(x, p)` for a fixed state.
///
/// Each Fock-space diagonal `k` of `ϱ` contributes
/// `Re[β^k/√k! Σ_n ϱ_{n,n+k} (−1)^n F_n^{(k)}(|β|²)]` times `e^{−|β|²/2}/π`,
/// with `F` the normalized Laguerre recurrence. Vanishing diagonals are
/// skipped.
#[derive(Debug, Clone)]
pub struct WignerFunction {
    bands: Vec<Band>,
    top: usize,
    real: bool,
    even_only: bool,
    diagonal: bool,
}

#[derive(Debug, Clone)]
struct Band {
    k: usize,
    coeff: Vec<Complex64>,
    shift: Vec<f64>,
    lower: Vec<f64>,
    scale: Vec<f64>,
}

impl WignerFunction {
    pub fn new(state: &impl SingleModeState) -> Self {
        Self::from_density(&state.as_density())
    }

    pub fn from_density(state: &SingleModeDensityState) -> Self {
        let m = state.matrix();
        let dim = m.nrows();
        let mut bands = Vec::new();
        let mut real = true;
        let mut even_only = true;
        for k in 0..dim {
            let len = dim - k;
            let weight = if k == 0 { 1.0 } else { 2.0 };
            let coeff: Vec<Complex64> = (0..len)
                .map(|n| {
                    let sign = if n % 2 == 0 { weight } else { -weight };
                    m[(n, n + k)] * sign
                })
                .collect();
            if coeff.iter().all(|c| c.norm_sqr() == 0.0) {
                continue;
            }
            real &= coeff.iter().all(|c| c.im == 0.0);
            even_only &= k % 2 == 0;
            let kf = k as f64;
            bands.push(Band {
                k,
                shift: (0..len).map(|n| 2.0 * n as f64 + 1.0 + kf).collect(),
                lower: (0..len).map(|n| (n as f64 * (n as f64 + kf)).sqrt()).collect(),
                scale: (0..len)
                    .map(|n| 1.0 / ((n as f64 + 1.0) * (n as f64 + kf + 1.0)).sqrt())
                    .collect(),
                coeff,
            });
        }
        let top = bands.last().map_or(0, |b| b.k);
        let diagonal = bands.iter().all(|b| b.k == 0);
        Self {
            bands,
            top,
            real,
            even_only,
            diagonal,
        }
    }

    /// True when `W(x, −p) = W(x, p)` about `p = 0`.
    pub fn is_p_symmetric(&self) -> bool {
        self.real
    }

    /// True when `W(−x, −p) = W(x, p)`.
    pub fn is_parity_symmetric(&self) -> bool {
        self.even_only
    }

    /// True when `W` depends only on `x² + p²`.
    pub fn is_rotationally_symmetric(&self) -> bool {
        self.diagonal
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let beta = Complex64::new(x, p) * std::f64::consts::SQRT_2;
        let big_x = beta.norm_sqr();
        let mut power = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        let mut bands = self.bands.iter().peekable();
        for k in 0..=self.top {
            if k > 0 {
                power *= beta / (k as f64).sqrt();
            }
            let Some(band) = bands.next_if(|b| b.k == k) else {
                continue;
            };
            let mut f_prev = 0.0;
            let mut f = 1.0;
            let mut sum = band.coeff[0];
            for n in 1..band.coeff.len() {
                let next = ((band.shift[n - 1] - big_x) * f - band.lower[n - 1] * f_prev)
                    * band.scale[n - 1];
                f_prev = f;
                f = next;
                sum += band.coeff[n] * f;
            }
            let term = power * sum;
            acc += if band.k == 0 { sum.re } else { term.re };
        }
        acc * (-0.5 * big_x).exp() / PI
    }

    /// `out[i] = W(xs[i], ps[i])`, evaluated in small batches so the
    /// recurrence vectorizes across points.
    pub fn eval_many(&self, xs: &[f64], ps: &[f64], out: &mut [f64]) {
        assert!(xs.len() == ps.len() && ps.len() == out.len());
        const L: usize = 8;
        let mut start = 0;
        while start < xs.len() {
            let len = L.min(xs.len() - start);
            if len < L {
                for i in start..start + len {
                    out[i] = self.eval(xs[i], ps[i]);
                }
                break;
            }
            let mut br = [0.0; L];
            let mut bi = [0.0; L];
            let mut big_x = [0.0; L];
            for j in 0..L {
                br[j] = xs[start + j] * std::f64::consts::SQRT_2;
                bi[j] = ps[start + j] * std::f64::consts::SQRT_2;
                big_x[j] = br[j] * br[j] + bi[j] * bi[j];
            }
            let mut pr = [1.0; L];
            let mut pi = [0.0; L];
            let mut acc = [0.0; L];
            let mut bands = self.bands.iter().peekable();
            for k in 0..=self.top {
                if k > 0 {
                    let s = 1.0 / (k as f64).sqrt();
                    for j in 0..L {
                        let re = (pr[j] * br[j] - pi[j] * bi[j]) * s;
                        pi[j] = (pr[j] * bi[j] + pi[j] * br[j]) * s;
                        pr[j] = re;
                    }
                }
                let Some(band) = bands.next_if(|b| b.k == k) else {
                    continue;
                };
                let mut f_prev = [0.0; L];
                let mut f = [1.0; L];
                let mut sr = [band.coeff[0].re; L];
                let mut si = [band.coeff[0].im; L];
                for n in 1..band.coeff.len() {
                    let (shift, lower, scale) = (band.shift[n - 1], band.lower[n - 1], band.scale[n - 1]);
                    let c = band.coeff[n];
                    for j in 0..L {
                        let next = ((shift - big_x[j]) * f[j] - lower * f_prev[j]) * scale;
                        f_prev[j] = f[j];
                        f[j] = next;
                        sr[j] += c.re * next;
                        si[j] += c.im * next;
                    }
                }
                for j in 0..L {
                    acc[j] += if k == 0 { sr[j] } else { pr[j] * sr[j] - pi[j] * si[j] };
                }
            }
            for j in 0..L {
                out[start + j] = acc[j] * (-0.5 * big_x[j]).exp() / PI;
            }
            start += L;
        }
    }
}

/// `W(x, p)` from the trace of `ϱ D(β) Π` over the full displacement matrix.
pub fn wigner_point(state: &impl SingleModeState, x: f64, p: f64) -> Result<f64> {
    if !(x.is_finite() && p.is_finite()) {
        return Err(invalid("phase-space point must be finite"));
    }
    let rho = state.as_density();
    let beta = Complex64::new(x, p) * std::f64::consts::SQRT_2;
    let d = displacement_matrix(beta, rho.cutoff())?;
    let m = rho.matrix();
    let dim = m.nrows();
    let mut trace = Complex64::new(0.0, 0.0);
    for n in 0..dim {
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..dim {
            trace += m[(n, k)] * d[(k, n)] * parity;
        }
    }
    if trace.im.abs() > 1e-8 {
        return Err(Error::NumericalConsistency(format!(
            "Wigner value has imaginary residual {:e}",
            trace.im
        )));
    }
    Ok(trace.re / PI)
}

/// Gaussian Wigner function with the given first moments and covariance.
pub fn wigner_gaussian_closed_form(moments: &FirstMomentsAndCM, x: f64, p: f64) -> Result<f64> {
    let det = moments.det();
    if !(moments.cm[(0, 0)] > 0.0 && det > 0.0) {
        return Err(invalid("covariance matrix must be positive definite"));
    }
    let dx = x - moments.mean[0];
    let dp = p - moments.mean[1];
    let (a, b, c) = (moments.cm[(0, 0)], moments.cm[(1, 1)], moments.cm[(0, 1)]);
    let quad = (b * dx * dx - 2.0 * c * dx * dp + a * dp * dp) / det;
    Ok((-0.5 * quad).exp() / (2.0 * PI * det.sqrt()))
}

/// Wigner function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    /// `values[(i, j)] = W(x_i, p_j)`.
    pub values: DMatrix<f64>,
    pub grid: PhaseGrid,
    pub total_integral: f64,
    pub negative_volume: f64,
}

#[derive(Serialize)]
struct FieldMetadata<'a> {
    grid: &'a PhaseGrid,
    spacing: f64,
    n_max: usize,
    total_integral: f64,
    negative_volume: f64,
}

impl WignerField {
    /// Writes `x,p,w` rows with `x` outermost.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x,p,w")?;
        let n = self.grid.points_per_axis;
        for i in 0..n {
            for j in 0..n {
                writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e}",
                    self.grid.x(i),
                    self.grid.p(j),
                    self.values[(i, j)]
                )?;
            }
        }
        Ok(())
    }

    pub fn metadata_json(&self, n_max: usize) -> String {
        let meta = FieldMetadata {
            grid: &self.grid,
            spacing: self.grid.spacing(),
            n_max,
            total_integral: self.total_integral,
            negative_volume: self.negative_volume,
        };
        serde_json::to_string_pretty(&meta).expect("metadata serializes")
    }

    /// `(⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩)` by Simpson over the grid.
    pub fn moments(&self) -> [f64; 4] {
        let n = self.grid.points_per_axis;
        let w = simpson_weights(n);
        let h = self.grid.spacing();
        let mut m = [0.0; 4];
        for i in 0..n {
            let x = self.grid.x(i);
            for j in 0..n {
                let p = self.grid.p(j);
                let v = w[i] * w[j] * self.values[(i, j)];
                m[0] += v * x;
                m[1] += v * p;
                m[2] += v * x * x;
                m[3] += v * p * p;
            }
        }
        m.map(|t| t * h * h / 9.0)
    }

    /// CSV at `path` and the JSON sidecar next to it.
    pub fn save(&self, path: &Path, n_max: usize) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf)?;
        buf.flush()?;
        std::fs::write(path.with_extension("json"), self.metadata_json(n_max) + "\n")
    }
}

fn simpson_weights(n: usize) -> Vec<f64> {
    // n odd, so the number of intervals is even
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect()
}

/// Evaluates `W` on every node of `grid` and integrates with composite
/// Simpson in both directions.
pub fn wigner_field(state: &impl SingleModeState, grid: PhaseGrid) -> Result<WignerField> {
    let w = WignerFunction::new(state);
    let n = grid.points_per_axis;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| w.eval(grid.x(i), grid.p(j))).collect())
        .collect();
    let values = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let weights = simpson_weights(n);
    let h = grid.spacing();
    let cell = h * h / 9.0;
    let mut total = 0.0;
    let mut negative = 0.0;
    for i in 0..n {
        let mut row_total = 0.0;
        let mut row_neg = 0.0;
        for j in 0..n {
            let v = values[(i, j)];
            row_total += weights[j] * v;
            row_neg += weights[j] * v.min(0.0);
        }
        total += weights[i] * row_total;
        negative += weights[i] * row_neg;
    }
    total *= cell;
    negative *= -cell;
    if (total - 1.0).abs() > COVERAGE_TOL {
        return Err(Error::Coverage {
            total_integral: total,
        });
    }
    Ok(WignerField {
        values,
        grid,
        total_integral: total,
        negative_volume: negative.max(0.0),
    })
}

/// Result of [`negativity_volume`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityEstimate {
    /// `∫|W| − 1`, computed as twice the negative volume.
    pub delta_nc: f64,
    pub accuracy: f64,
    pub total_integral: f64,
    pub half_width: f64,
    pub spacing: f64,
    /// Phase-space lines sampled by the detection pass.
    pub lines: usize,
    /// Sub-intervals used by the final adaptive pass.
    pub intervals: usize,
}

impl NegativityEstimate {
    /// `∫ max(−W, 0)`, half of `δ_nC`.
    pub fn negative_volume(&self) -> f64 {
        0.5 * self.delta_nc
    }
}

/// Sampling options for [`negativity_volume_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityOptions {
    pub accuracy: f64,
    /// Node spacing of the detection pass.
    pub spacing: f64,
}

impl NegativityOptions {
    pub fn new(accuracy: f64) -> Self {
        Self {
            accuracy,
            spacing: DEFAULT_SPACING,
        }
    }
}

/// Wigner non-classicality `δ_nC = ∫|W| dx dp − 1`.
pub fn negativity_volume(state: &impl SingleModeState, accuracy: f64) -> Result<NegativityEstimate> {
    negativity_volume_with(state, NegativityOptions::new(accuracy))
}

/// [`negativity_volume`] with an explicit detection spacing.
///
/// The integral of `W` is split as `1 + 2 ∫ max(−W, 0)`. Along sampled lines
/// the sign changes of `W` (plus any between-node dips through zero) are
/// located by bisection, so the negative part is integrated as a smooth
/// function on each negative segment. The outer direction is handled the same
/// way using the per-line minimum, then integrated adaptively.
pub fn negativity_volume_with(
    state: &impl SingleModeState,
    options: NegativityOptions,
) -> Result<NegativityEstimate> {
    let accuracy = options.accuracy;
    if !(1e-8..=1e-2).contains(&accuracy) {
        return Err(invalid(format!("accuracy must lie in [1e-8, 1e-2], got {accuracy}")));
    }
    if !(options.spacing > 0.0 && options.spacing <= 0.25) {
        return Err(invalid("detection spacing must lie in (0, 0.25]"));
    }
    let moments = moments_and_cm(state)?;
    let w = WignerFunction::new(state);
    let quad = Quadrature::new(0.1 * accuracy)?;
    let (x0, p0) = (moments.mean[0], moments.mean[1]);
    let mut hw = envelope_half_width(&moments);
    while boundary_estimate(&w, x0, p0, hw, options.spacing) > accuracy / 10.0 {
        hw *= 1.25;
        if hw > MAX_HALF_WIDTH {
            return Err(Error::Coverage {
                total_integral: f64::NAN,
            });
        }
    }

    let est = if w.is_rotationally_symmetric() {
        radial_negativity(&w, hw, options.spacing, &quad)?
    } else {
        planar_negativity(&w, x0, p0, hw, options.spacing, &quad)?
    };
    if (est.total - 1.0).abs() > COVERAGE_TOL {
        return Err(Error::Coverage {
            total_integral: est.total,
        });
    }
    let delta = if est.negative < NOISE_FLOOR { 0.0 } else { 2.0 * est.negative };
    Ok(NegativityEstimate {
        delta_nc: delta,
        accuracy,
        total_integral: est.total,
        half_width: hw,
        spacing: options.spacing,
        lines: est.lines,
        intervals: est.intervals,
    })
}

/// `ln(δ_nC + 1)`.
pub fn wigner_log_negativity(delta_nc: f64) -> Result<f64> {
    if !(delta_nc >= 0.0) {
        return Err(invalid(format!("negativity must be non-negative, got {delta_nc}")));
    }
    Ok(delta_nc.ln_1p())
}

fn boundary_estimate(w: &WignerFunction, x0: f64, p0: f64, hw: f64, h: f64) -> f64 {
    let n = (2.0 * hw / h).ceil() as usize;
    let mut peak: f64 = 0.0;
    for i in 0..=n {
        let t = -hw + 2.0 * hw * i as f64 / n as f64;
        for (x, p) in [(t, -hw), (t, hw), (-hw, t), (hw, t)] {
            peak = peak.max(w.eval(x0 + x, p0 + p).abs());
        }
    }
    // perimeter times a unit decay length
    peak * 8.0 * hw
}

struct Quadrature {
    segment: GaussLegendre,
    outer: GaussLegendre,
    /// Relative error target of the outer adaptive pass.
    rtol: f64,
}

impl Quadrature {
    fn new(rtol: f64) -> Result<Self> {
        let build = |deg| {
            GaussLegendre::new(deg).map_err(|e| Error::NumericalConsistency(e.to_string()))
        };
        Ok(Self {
            segment: build(SEGMENT_DEGREE)?,
            outer: build(OUTER_DEGREE)?,
            rtol,
        })
    }

    /// `∫_a^b f` over a segment on which `f` has one sign.
    fn segment<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: &F) -> f64 {
        let pieces = ((b - a) / SEGMENT_PIECE).ceil().max(1.0) as usize;
        let step = (b - a) / pieces as f64;
        (0..pieces)
            .map(|i| {
                let lo = a + i as f64 * step;
                self.segment.integrate(lo, lo + step, f)
            })
            .sum()
    }
}

/// Summary of one sampled line.
#[derive(Debug, Clone, Copy)]
struct LineResult {
    /// `∫ max(−f, 0)`.
    negative: f64,
    /// Composite Simpson estimate of `∫ f`.
    total: f64,
    /// Smallest value found, including refined dips.
    min: f64,
    /// Hull of the negative segments.
    span: Option<(f64, f64)>,
    /// Whether an end sample of the line is negative.
    negative_end: bool,
}

/// Root of `f` bracketed by `[lo, hi]`, by the Illinois variant of regula
/// falsi.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let mut flo = f_lo;
    let mut fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    let tol = 1e-13 * (1.0 + lo.abs().max(hi.abs()));
    let mut side = 0;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mut mid = (lo * fhi - hi * flo) / (fhi - flo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            fhi = fm;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the minimum of `sign·f` on `[a, b]`; returns the
/// location and the value of `f` there.
fn golden_extremum<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, sign: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = sign * f(c);
    let mut fd = sign * f(d);
    for _ in 0..80 {
        if (b - a) <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = sign * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = sign * f(d);
        }
    }
    if fc < fd {
        (c, sign * fc)
    } else {
        (d, sign * fd)
    }
}

/// Roots of `f` on `[a, b]` from uniform samples `ys`, including pairs of
/// roots hidden between nodes next to a sampled extremum that approaches
/// zero. Also returns the smallest value seen.
fn sign_changes<F: Fn(f64) -> f64>(f: &F, a: f64, h: f64, ys: &[f64]) -> (Vec<f64>, f64) {
    let mut roots = Vec::new();
    let mut min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let t = |i: usize| a + i as f64 * h;
    for i in 0..ys.len() - 1 {
        if (ys[i] < 0.0) != (ys[i + 1] < 0.0) {
            roots.push(bisect(f, t(i), t(i + 1), ys[i]));
        }
    }
    for i in 1..ys.len() - 1 {
        let (l, c, r) = (ys[i - 1], ys[i], ys[i + 1]);
        // only extrema on the far side of zero from their own sign can hide a crossing
        let sign = if c >= 0.0 { 1.0 } else { -1.0 };
        if (l < 0.0) != (c < 0.0) || (r < 0.0) != (c < 0.0) {
            continue;
        }
        if !(sign * c <= sign * l && sign * c <= sign * r) {
            continue;
        }
        let curvature = l - 2.0 * c + r;
        let predicted = if curvature != 0.0 {
            c - (r - l).powi(2) / (8.0 * curvature)
        } else {
            c
        };
        if sign * predicted >= 0.5 * sign * c && c != 0.0 {
            continue;
        }
        let (te, fe) = golden_extremum(f, t(i - 1), t(i + 1), sign);
        min = min.min(fe);
        if (fe < 0.0) != (c < 0.0) {
            roots.push(bisect(f, t(i - 1), te, l));
            roots.push(bisect(f, te, t(i + 1), fe));
        }
    }
    roots.sort_by(f64::total_cmp);
    (roots, min)
}

/// Samples `f` on `[a, b]` with about `h` spacing and integrates its negative
/// part segment by segment. `sample` fills a batch of values of `f`.
///
/// `f` carries a small positive offset so that round-off in the far tails
/// never registers as negativity; `offset(lo, hi)` is the integral of that
/// offset and is removed from every negative segment.
fn line_negative<F, S>(
    f: &F,
    sample: &S,
    offset: &dyn Fn(f64, f64) -> f64,
    (a, b): (f64, f64),
    h: f64,
    quad: &Quadrature,
) -> LineResult
where
    F: Fn(f64) -> f64,
    S: Fn(&[f64], &mut [f64]),
{
    let mut n = ((b - a) / h).ceil().max(2.0) as usize;
    n += n % 2;
    let h = (b - a) / n as f64;
    let ts: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
    let mut ys = vec![0.0; n + 1];
    sample(&ts, &mut ys);
    let weights = simpson_weights(n + 1);
    let total = h / 3.0 * ys.iter().zip(&weights).map(|(y, w)| y * w).sum::<f64>();
    let (roots, min) = sign_changes(f, a, h, &ys);
    let mut negative = 0.0;
    let mut span: Option<(f64, f64)> = None;
    if min < 0.0 {
        let mut edges = Vec::with_capacity(roots.len() + 2);
        edges.push(a);
        edges.extend(roots);
        edges.push(b);
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi <= lo || f(0.5 * (lo + hi)) >= 0.0 {
                continue;
            }
            negative -= quad.segment(lo, hi, f) - offset(lo, hi);
            span = Some(span.map_or((lo, hi), |(s0, s1)| (s0.min(lo), s1.max(hi))));
        }
    }
    LineResult {
        negative: negative.max(0.0),
        total,
        min,
        span,
        negative_end: ys[0] < 0.0 || ys[n] < 0.0,
    }
}

struct Integrals {
    negative: f64,
    total: f64,
    lines: usize,
    intervals: usize,
}

fn radial_negativity(
    w: &WignerFunction,
    hw: f64,
    h: f64,
    quad: &Quadrature,
) -> Result<Integrals> {
    // the box edge bounds the radius; the corners add nothing measurable
    let radius = hw * std::f64::consts::SQRT_2;
    let f = |r: f64| 2.0 * PI * r * (w.eval(r, 0.0) + ROUNDOFF_OFFSET);
    let sample = |rs: &[f64], out: &mut [f64]| {
        let zeros = vec![0.0; rs.len()];
        w.eval_many(rs, &zeros, out);
        for (o, r) in out.iter_mut().zip(rs) {
            *o = 2.0 * PI * r * (*o + ROUNDOFF_OFFSET);
        }
    };
    let offset = |lo: f64, hi: f64| PI * ROUNDOFF_OFFSET * (hi * hi - lo * lo);
    let line = line_negative(&f, &sample, &offset, (0.0, radius), h, quad);
    Ok(Integrals {
        negative: line.negative,
        total: line.total,
        lines: 1,
        intervals: 0,
    })
}

fn planar_negativity(
    w: &WignerFunction,
    x0: f64,
    p0: f64,
    hw: f64,
    h: f64,
    quad: &Quadrature,
) -> Result<Integrals> {
    let fold_p = w.is_p_symmetric() && p0 == 0.0;
    let fold_x = fold_p && w.is_parity_symmetric() && x0 == 0.0;
    let (p_lo, p_factor) = if fold_p { (p0, 2.0) } else { (p0 - hw, 1.0) };
    let (x_lo, x_factor) = if fold_x { (x0, 2.0) } else { (x0 - hw, 1.0) };
    let (p_hi, x_hi) = (p0 + hw, x0 + hw);

    let line_on = |x: f64, lo: f64, hi: f64| {
        let sample = |ps: &[f64], out: &mut [f64]| {
            let xs = vec![x; ps.len()];
            w.eval_many(&xs, ps, out);
            out.iter_mut().for_each(|o| *o += ROUNDOFF_OFFSET);
        };
        let offset = |lo: f64, hi: f64| ROUNDOFF_OFFSET * (hi - lo);
        line_negative(&|p: f64| w.eval(x, p) + ROUNDOFF_OFFSET, &sample, &offset, (lo, hi), h, quad)
    };
    let line = |x: f64| line_on(x, p_lo, p_hi);

    let mut n = ((x_hi - x_lo) / h).ceil() as usize;
    n += n % 2;
    let hx = (x_hi - x_lo) / n as f64;
    let lines: Vec<LineResult> = (0..=n)
        .into_par_iter()
        .map(|i| line(x_lo + i as f64 * hx))
        .collect();
    let weights = simpson_weights(n + 1);
    let total = hx / 3.0
        * lines
            .iter()
            .zip(&weights)
            .map(|(l, wt)| l.total * wt)
            .sum::<f64>();

    // Between detection lines the negative set stays close to that of the
    // neighbouring lines, so only a window around it is sampled. A window
    // whose edge is negative falls back to the full line.
    let windowed = |x: f64| -> LineResult {
        let i = (((x - x_lo) / hx).floor().max(0.0) as usize).min(n);
        let hull = lines[i.saturating_sub(1)..(i + 3).min(n + 1)]
            .iter()
            .filter_map(|l| l.span)
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)));
        let Some((lo, hi)) = hull else {
            return line(x);
        };
        let (lo, hi) = ((lo - WINDOW_MARGIN).max(p_lo), (hi + WINDOW_MARGIN).min(p_hi));
        let result = line_on(x, lo, hi);
        let clipped = (lo > p_lo || hi < p_hi) && result.negative_end;
        if clipped {
            line(x)
        } else {
            result
        }
    };

    let mins: Vec<f64> = lines.iter().map(|l| l.min).collect();
    let line_min = |x: f64| line(x).min;
    let (roots, min) = sign_changes(&line_min, x_lo, hx, &mins);
    let mut negative = 0.0;
    let mut intervals = 0;
    if min < 0.0 {
        let mut edges = Vec::with_capacity(roots.len() + 2);
        edges.push(x_lo);
        edges.extend(roots);
        edges.push(x_hi);
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi <= lo || windowed(0.5 * (lo + hi)).min >= 0.0 {
                continue;
            }
            let (value, used) = adaptive_outer(&|x| windowed(x).negative, lo, hi, quad)?;
            negative += value;
            intervals += used;
        }
    }
    Ok(Integrals {
        negative: negative * x_factor * p_factor,
        total: total * x_factor * p_factor,
        lines: n + 1,
        intervals,
    })
}

/// Adaptive Gauss-Legendre integration of a non-negative function that
/// vanishes with a power law at both ends of `[a, b]`. The substitution
/// `x = a + (b − a)(1 − cos πu)/2` removes the endpoint behaviour.
fn adaptive_outer<F: Fn(f64) -> f64 + Sync>(
    f: &F,
    a: f64,
    b: f64,
    quad: &Quadrature,
) -> Result<(f64, usize)> {
    let half = 0.5 * (b - a);
    let g = |u: f64| {
        let x = a + half * (1.0 - (PI * u).cos());
        f(x) * half * PI * (PI * u).sin()
    };
    let rule = |lo: f64, hi: f64| {
        let nodes = quad.outer.as_node_weight_pairs();
        let mid = 0.5 * (lo + hi);
        let rad = 0.5 * (hi - lo);
        let values: Vec<f64> = nodes.par_iter().map(|(n, _)| g(mid + rad * n)).collect();
        rad * values.iter().zip(nodes).map(|(v, (_, w))| v * w).sum::<f64>()
    };
    struct Piece {
        lo: f64,
        hi: f64,
        value: f64,
        error: f64,
    }
    let split = |lo: f64, hi: f64, whole: f64| -> (Piece, Piece) {
        let mid = 0.5 * (lo + hi);
        let left = rule(lo, mid);
        let right = rule(mid, hi);
        let error = (left + right - whole).abs() / 2.0;
        (
            Piece { lo, hi: mid, value: left, error },
            Piece { lo: mid, hi, value: right, error },
        )
    };
    let whole = rule(0.0, 1.0);
    let (l, r) = split(0.0, 1.0, whole);
    let mut pieces = vec![l, r];
    let mut previous = whole;
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= (quad.rtol * value).max(1e-16) {
            return Ok((value, pieces.len()));
        }
        if pieces.len() >= OUTER_BUDGET {
            return Err(Error::Convergence {
                last: value,
                previous,
            });
        }
        previous = value;
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one piece");
        let piece = pieces.swap_remove(worst);
        let (l, r) = split(piece.lo, piece.hi, piece.value);
        pieces.push(l);
        pieces.push(r);
        pieces.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    }
}
