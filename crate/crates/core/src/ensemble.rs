//! Ensembles over random initial phases and disorder, and the statistics drawn
//! from them: second moments, local exponents, averaged densities and tail fits.
//!
//! Run `r = j * n_phase + i` uses phase stream `r` and disorder realization `j`;
//! the 1D model also draws its quasimomentum from stream `r`. Runs are evaluated
//! in parallel and summed in index order, so averages do not depend on the
//! execution order or thread count.

use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{incoherent_packet_1d, incoherent_packet_2d, Field1D, Field2D, FieldError};
use crate::observables::ObservableSeries;
use crate::params::ModelParams;
use crate::propagate::{
    evolve_1d, evolve_2d_staticgauge, PropagationConfig, PropagationError, Sampling,
};
use crate::rng::{disorder, uniform_at, Purpose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("an ensemble needs at least one realization")]
    NoRealizations,
    #[error("sample times must be positive and strictly increasing")]
    BadTimes,
    #[error("snapshot time {0} is not a sample time")]
    BadSnapshot(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("run {run}: {source}")]
    Propagation {
        run: usize,
        source: PropagationError,
    },
    #[error("need at least {needed} usable points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
}

/// Which model an ensemble evolves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum Model {
    /// The reduced chain with a random quasimomentum per run.
    OneD,
    /// The full lattice (static gauge) with RMS width `sigma_y` along m.
    TwoD { sigma_y: f64 },
}

/// Description of one ensemble experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub params: ModelParams,
    pub model: Model,
    /// RMS width of the initial density along l.
    pub sigma_x: f64,
    pub n_phase: usize,
    pub n_disorder: usize,
    /// Sample times, positive and strictly increasing; `t = 0` is always sampled.
    pub times: Vec<f64>,
    /// Increasing times (`0` or members of `times`) at which the averaged density
    /// is recorded.
    pub snapshots: Vec<f64>,
    /// Step control; its end time and sampling are replaced from `times`.
    pub propagation: PropagationConfig,
}

impl EnsembleSpec {
    pub fn new(params: ModelParams, model: Model, sigma_x: f64, times: Vec<f64>) -> Self {
        EnsembleSpec {
            params,
            model,
            sigma_x,
            n_phase: 32,
            n_disorder: if params.eps > 0.0 { 8 } else { 1 },
            times,
            snapshots: Vec::new(),
            // statistics tolerate the coarser time-ordering allowed by the phase bound
            propagation: PropagationConfig {
                max_phase_step: 0.1,
                ..PropagationConfig::default()
            },
        }
    }

    pub fn realizations(&self) -> usize {
        self.n_phase * self.n_disorder
    }

    fn validate(&self) -> Result<(), EnsembleError> {
        if self.realizations() == 0 {
            return Err(EnsembleError::NoRealizations);
        }
        let ok = !self.times.is_empty()
            && self.times[0] > 0.0
            && self.times.windows(2).all(|w| w[1] > w[0])
            && self.times.iter().all(|t| t.is_finite());
        if !ok {
            return Err(EnsembleError::BadTimes);
        }
        if let Some(&s) = self
            .snapshots
            .iter()
            .find(|s| !self.times.contains(s) && **s != 0.0)
        {
            return Err(EnsembleError::BadSnapshot(s));
        }
        if !self.snapshots.windows(2).all(|w| w[1] > w[0]) {
            return Err(EnsembleError::BadTimes);
        }
        Ok(())
    }
}

/// Averaged density `P(l, t)` along l (projected over m in 2D) at each snapshot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AveragedDensity {
    pub times: Vec<f64>,
    /// First site of each snapshot.
    pub offsets: Vec<i64>,
    pub values: Vec<Vec<f64>>,
    /// Standard error of each value: over the disorder realizations when there are
    /// several (runs sharing one are correlated), otherwise over the runs.
    pub std_errors: Vec<Vec<f64>>,
    pub realizations: usize,
}

impl AveragedDensity {
    /// `(l, P)` pairs of snapshot `k`.
    pub fn snapshot(&self, k: usize) -> (Vec<i64>, &[f64]) {
        let ls = (0..self.values[k].len() as i64)
            .map(|i| self.offsets[k] + i)
            .collect();
        (ls, &self.values[k])
    }

    /// `(l, P)` of snapshot `k` restricted to sites where `P` is at least `z`
    /// standard errors. Sites carried by a few rare realizations are dropped.
    pub fn significant(&self, k: usize, z: f64) -> (Vec<i64>, Vec<f64>) {
        self.values[k]
            .iter()
            .zip(&self.std_errors[k])
            .enumerate()
            .filter(|(_, (p, se))| **p > 0.0 && **p >= z * **se)
            .map(|(i, (p, _))| (self.offsets[k] + i as i64, *p))
            .unzip()
    }

    /// Index of the snapshot recorded at `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }
}

/// Density along l accumulated over runs, growing to cover every window.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    offset: i64,
    values: Vec<f64>,
    squares: Vec<f64>,
}

impl Accumulator {
    fn add(&mut self, offset: i64, density: &[f64]) {
        if density.is_empty() {
            return;
        }
        if self.values.is_empty() {
            self.offset = offset;
            self.values = density.to_vec();
            self.squares = density.iter().map(|d| d * d).collect();
            return;
        }
        let lo = self.offset.min(offset);
        let hi = (self.offset + self.values.len() as i64).max(offset + density.len() as i64);
        if lo < self.offset || hi > self.offset + self.values.len() as i64 {
            let shift = (self.offset - lo) as usize;
            for v in [&mut self.values, &mut self.squares] {
                let mut grown = vec![0.0; (hi - lo) as usize];
                grown[shift..shift + v.len()].copy_from_slice(v);
                *v = grown;
            }
            self.offset = lo;
        }
        let shift = (offset - self.offset) as usize;
        for ((a, q), d) in self.values[shift..]
            .iter_mut()
            .zip(&mut self.squares[shift..])
            .zip(density)
        {
            *a += d;
            *q += d * d;
        }
    }
}

/// Everything one run contributes.
#[derive(Debug, Clone)]
struct RunOutput {
    disorder: usize,
    series: ObservableSeries,
    snapshots: Vec<(i64, Vec<f64>)>,
}

/// Ensemble averages plus the per-run moments needed for error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// `sigma` is the root of the averaged raw second moment, `mean_x` the averaged
    /// first moment, `centered_width` the width of the averaged density.
    pub series: ObservableSeries,
    pub density: AveragedDensity,
    /// Raw second moment of every run, `[run][sample]`.
    pub run_second_moments: Vec<Vec<f64>>,
    /// First moment of every run, `[run][sample]`.
    pub run_means: Vec<Vec<f64>>,
    pub realizations: usize,
}

/// Quasimomentum of run `r` of the 1D model.
pub fn run_kappa(p: &ModelParams, run: usize) -> f64 {
    TAU * uniform_at(p.seed, run as u64, Purpose::Quasimomentum, 0)
}

fn sample_config(spec: &EnsembleSpec) -> PropagationConfig {
    let t_end = *spec.times.last().unwrap_or(&0.0);
    PropagationConfig {
        t_start: 0.0,
        t_end,
        sampling: Sampling::Times(spec.times.clone()),
        ..spec.propagation.clone()
    }
}

fn one_run(spec: &EnsembleSpec, run: usize) -> Result<RunOutput, EnsembleError> {
    let p = &spec.params;
    let dis = disorder(p, (run / spec.n_phase) as u64);
    let cfg = sample_config(spec);
    let mut snapshots = Vec::with_capacity(spec.snapshots.len());
    let wrap = |source| EnsembleError::Propagation { run, source };
    let series = match spec.model {
        Model::OneD => {
            let b = incoherent_packet_1d(p, spec.sigma_x, run as u64)?;
            let mut obs = |t: f64, f: &Field1D| {
                if spec.snapshots.contains(&t) {
                    snapshots.push((f.offset, f.density()));
                }
            };
            evolve_1d(b, p, run_kappa(p, run), &dis, &cfg, &mut obs)
                .map_err(wrap)?
                .series
        }
        Model::TwoD { sigma_y } => {
            let psi = incoherent_packet_2d(p, spec.sigma_x, sigma_y, run as u64)?;
            let mut obs = |t: f64, f: &Field2D| {
                if spec.snapshots.contains(&t) {
                    snapshots.push((f.offset_l, f.projected_density()));
                }
            };
            evolve_2d_staticgauge(psi, p, &dis, &cfg, &mut obs)
                .map_err(wrap)?
                .series
        }
    };
    Ok(RunOutput {
        disorder: run / spec.n_phase,
        series,
        snapshots,
    })
}

/// Evolves every realization of `spec` and averages the results.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult, EnsembleError> {
    spec.validate()?;
    let n = spec.realizations();
    let runs: Vec<Result<RunOutput, EnsembleError>> =
        (0..n).into_par_iter().map(|r| one_run(spec, r)).collect();
    let mut outputs = Vec::with_capacity(n);
    for r in runs {
        outputs.push(r?);
    }
    Ok(reduce(spec, outputs))
}

fn reduce(spec: &EnsembleSpec, outputs: Vec<RunOutput>) -> EnsembleResult {
    let n = outputs.len();
    let times = outputs[0].series.times.clone();
    let k = times.len();
    let mut second = vec![0.0; k];
    let mut first = vec![0.0; k];
    let mut norm = vec![0.0; k];
    let mut edge = vec![0.0; k];
    let mut wy = vec![0.0; k];
    let has_y = !outputs[0].series.width_y.is_empty();
    let mut acc = vec![Accumulator::default(); spec.snapshots.len()];
    // runs sharing a disorder realization are correlated, so with several
    // realizations the error is taken over the per-realization means
    let clustered = spec.n_disorder > 1;
    let mut groups = vec![acc.clone(); if clustered { spec.n_disorder } else { 0 }];
    let mut run_second_moments = Vec::with_capacity(n);
    let mut run_means = Vec::with_capacity(n);
    for o in &outputs {
        let s2 = o.series.second_moment();
        for i in 0..k {
            second[i] += s2[i];
            first[i] += o.series.mean_x[i];
            norm[i] += o.series.norm[i];
            edge[i] += o.series.edge_norm[i];
            if has_y {
                wy[i] += o.series.width_y[i];
            }
        }
        let target = if clustered {
            &mut groups[o.disorder]
        } else {
            &mut acc
        };
        for (a, (off, d)) in target.iter_mut().zip(&o.snapshots) {
            a.add(*off, d);
        }
        run_second_moments.push(s2);
        run_means.push(o.series.mean_x.clone());
    }
    for g in &groups {
        for (a, ga) in acc.iter_mut().zip(g) {
            let mean: Vec<f64> = ga.values.iter().map(|v| v / spec.n_phase as f64).collect();
            a.add(ga.offset, &mean);
        }
    }
    let units = if clustered { spec.n_disorder } else { n };
    let inv = 1.0 / n as f64;
    let mut series = ObservableSeries::default();
    for i in 0..k {
        let m2 = second[i] * inv;
        let m1 = first[i] * inv;
        series.times.push(times[i]);
        series.sigma.push(m2.max(0.0).sqrt());
        series.mean_x.push(m1);
        series.centered_width.push((m2 - m1 * m1).max(0.0).sqrt());
        series.edge_norm.push(edge[i] * inv);
        series.norm.push(norm[i] * inv);
        if has_y {
            series.width_y.push(wy[i] * inv);
        }
    }
    let mut density = AveragedDensity {
        realizations: n,
        ..Default::default()
    };
    for (t, a) in spec.snapshots.iter().zip(acc) {
        density.times.push(*t);
        density.offsets.push(a.offset);
        let se = a
            .values
            .iter()
            .zip(&a.squares)
            .map(|(s, q)| {
                if units > 1 {
                    ((q - s * s / units as f64).max(0.0) / ((units - 1) * units) as f64).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        density
            .values
            .push(a.values.iter().map(|v| v / units as f64).collect());
        density.std_errors.push(se);
    }
    EnsembleResult {
        series,
        density,
        run_second_moments,
        run_means,
        realizations: n,
    }
}

/// Runs the 1D and 2D models on the same parameters, widths, times and
/// realization indices.
pub fn compare_1d_2d(
    spec: &EnsembleSpec,
    sigma_y: f64,
) -> Result<(EnsembleResult, EnsembleResult), EnsembleError> {
    let one = EnsembleSpec {
        model: Model::OneD,
        ..spec.clone()
    };
    let two = EnsembleSpec {
        model: Model::TwoD { sigma_y },
        ..spec.clone()
    };
    Ok((run_ensemble(&one)?, run_ensemble(&two)?))
}

/// Half-width, in decades of time, of the window used for local exponents.
pub const EXPONENT_HALF_WINDOW: f64 = 0.25;

/// Local exponent `d log sigma^2 / d log t` on a sliding log-time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExponent {
    pub times: Vec<f64>,
    pub nu: Vec<f64>,
    /// Half-width of the window in decades.
    pub half_window: f64,
}

/// Least-squares slope of `ln sigma^2` against `ln t` over all samples within
/// `half_window` decades of each time. Times without at least three usable
/// neighbours (including themselves) are skipped.
pub fn local_exponent(
    times: &[f64],
    sigma2: &[f64],
    half_window: f64,
) -> Result<LocalExponent, EnsembleError> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(sigma2)
        .filter(|(t, s)| **t > 0.0 && **s > 0.0)
        .map(|(t, s)| (t.log10(), s.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(EnsembleError::InsufficientPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    let mut out = LocalExponent {
        times: Vec::new(),
        nu: Vec::new(),
        half_window,
    };
    let mut lo = 0;
    let mut hi = 0;
    for i in 0..pts.len() {
        let c = pts[i].0;
        while pts[lo].0 < c - half_window {
            lo += 1;
        }
        while hi < pts.len() && pts[hi].0 <= c + half_window {
            hi += 1;
        }
        if hi - lo < 3 || pts[lo].0 >= c || pts[hi - 1].0 <= c {
            continue;
        }
        let x: Vec<f64> = pts[lo..hi]
            .iter()
            .map(|p| p.0 * std::f64::consts::LN_10)
            .collect();
        let y: Vec<f64> = pts[lo..hi].iter().map(|p| p.1).collect();
        out.times.push(10f64.powf(c));
        out.nu.push(line_fit(&x, &y).slope);
    }
    if out.nu.is_empty() {
        return Err(EnsembleError::InsufficientPoints { needed: 3, got: 0 });
    }
    Ok(out)
}

/// Ordinary least-squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rms_residual: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit {
        slope,
        intercept,
        r_squared,
        rms_residual: (ss_res / n).sqrt(),
    }
}

/// Least-squares parabola through `(x, y)`; returns the ratio of its slopes at
/// the largest and smallest `x`, or `NaN` if they differ in sign.
fn slope_ratio(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sx = x
        .iter()
        .map(|v| (v - mx).abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let u: Vec<f64> = x.iter().map(|v| (v - mx) / sx).collect();
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut r = nalgebra::Vector3::<f64>::zeros();
    for (ui, yi) in u.iter().zip(y) {
        let b = [1.0, *ui, ui * ui];
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += b[i] * b[j];
            }
            r[i] += b[i] * yi;
        }
    }
    let Some(c) = m.lu().solve(&r) else {
        return f64::NAN;
    };
    let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (s_lo, s_hi) = (c[1] + 2.0 * c[2] * lo, c[1] + 2.0 * c[2] * hi);
    if s_lo * s_hi <= 0.0 {
        return f64::NAN;
    }
    s_hi / s_lo
}

/// Densities below this are treated as noise by the tail fits.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Fits with `r_squared` below this are flagged as poor.
pub const GOOD_FIT: f64 = 0.9;

/// Largest change of the local log-slope across a tail (either way) that still
/// counts as following the model.
pub const MAX_SLOPE_RATIO: f64 = 2.0;

/// Fewest tail points a side needs to be fitted.
pub const MIN_SIDE_POINTS: usize = 5;

/// Standard errors a site of an averaged density must clear to enter a tail fit.
pub const SIGNIFICANCE_Z: f64 = 2.0;

/// Fit of one side (`l < 0` or `l > 0`) of a tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideFit {
    /// `-1` for the left tail, `+1` for the right.
    pub side: i8,
    /// The localization length `L` or the diffusion constant `D`; `NaN` when the
    /// fitted slope has the wrong sign.
    pub parameter: f64,
    pub fit: LineFit,
    pub points: usize,
    /// Decades of `P` spanned by the tail points.
    pub decades: f64,
    /// Local slope at the outer end of the tail over the slope at the inner end,
    /// from a quadratic fit; `1` for an exact match of the model.
    pub slope_ratio: f64,
}

/// Result of a tail fit. The two sides are fitted separately because the
/// spreading in a tilted lattice is asymmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub sides: Vec<SideFit>,
    /// Point-weighted mean of the side parameters.
    pub parameter: f64,
    /// Point-weighted mean of the side `r_squared`.
    pub r_squared: f64,
    /// Set when no side could be fitted, a slope has the wrong sign, the tails
    /// span less than two decades, `r_squared < GOOD_FIT` or the local slope of a
    /// side changes by more than [`MAX_SLOPE_RATIO`] across it.
    pub poor: bool,
}

/// Sites with `|l|` beyond the 90th percentile of the density and `P` above the
/// noise floor, ordered by `|l|`.
pub fn tail_region(ls: &[i64], density: &[f64]) -> Vec<(i64, f64)> {
    let total: f64 = density.iter().sum();
    let mut by_dist: Vec<(i64, f64)> = ls.iter().copied().zip(density.iter().copied()).collect();
    by_dist.sort_by_key(|(l, _)| l.abs());
    let mut cum = 0.0;
    let mut cut = i64::MAX;
    for (l, d) in &by_dist {
        cum += d;
        if cum >= 0.9 * total {
            cut = l.abs();
            break;
        }
    }
    by_dist
        .into_iter()
        .filter(|(l, d)| l.abs() > cut && *d > DENSITY_FLOOR)
        .collect()
}

fn tail_fit(tail: &[(i64, f64)], x_of: impl Fn(i64) -> f64) -> Result<TailFit, EnsembleError> {
    let mut sides = Vec::new();
    for side in [-1i8, 1] {
        let pts: Vec<&(i64, f64)> = tail
            .iter()
            .filter(|(l, _)| l.signum() == side as i64)
            .collect();
        if pts.len() < MIN_SIDE_POINTS {
            continue;
        }
        let x: Vec<f64> = pts.iter().map(|(l, _)| x_of(*l)).collect();
        let y: Vec<f64> = pts.iter().map(|(_, d)| d.ln()).collect();
        let fit = line_fit(&x, &y);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let parameter = if fit.slope < 0.0 {
            -1.0 / fit.slope
        } else {
            f64::NAN
        };
        let decades = (hi - lo) / std::f64::consts::LN_10;
        let slope_ratio = slope_ratio(&x, &y);
        sides.push(SideFit {
            side,
            parameter,
            fit,
            points: pts.len(),
            decades,
            slope_ratio,
        });
    }
    if sides.is_empty() {
        let got = tail.len();
        return Err(EnsembleError::InsufficientPoints {
            needed: MIN_SIDE_POINTS,
            got,
        });
    }
    let n: f64 = sides.iter().map(|s| s.points as f64).sum();
    let parameter = sides
        .iter()
        .map(|s| s.parameter * s.points as f64)
        .sum::<f64>()
        / n;
    let r_squared = sides
        .iter()
        .map(|s| s.fit.r_squared * s.points as f64)
        .sum::<f64>()
        / n;
    let decades = sides.iter().map(|s| s.decades).fold(0.0, f64::max);
    let curved = sides
        .iter()
        .any(|s| !(s.slope_ratio <= MAX_SLOPE_RATIO && s.slope_ratio >= 1.0 / MAX_SLOPE_RATIO));
    let poor = parameter.is_nan() || decades < 2.0 || r_squared < GOOD_FIT || curved;
    Ok(TailFit {
        sides,
        parameter,
        r_squared,
        poor,
    })
}

/// Fits `P ~ exp(-|l| / L)` to each tail of a density.
pub fn fit_exponential_tail(ls: &[i64], density: &[f64]) -> Result<TailFit, EnsembleError> {
    tail_fit(&tail_region(ls, density), |l| l.abs() as f64)
}

/// Fits `P ~ exp(-l^2 / (D t))` to each tail of a density recorded at time `t`.
pub fn fit_diffusive(ls: &[i64], density: &[f64], t: f64) -> Result<TailFit, EnsembleError> {
    tail_fit(&tail_region(ls, density), |l| (l * l) as f64 / t)
}

/// Bootstrap confidence that `mean(a) > mean(b)`: the fraction of `n_boot`
/// paired resamples (each sample resampled with replacement) in which it holds.
pub fn bootstrap_greater(a: &[f64], b: &[f64], n_boot: usize, seed: u64) -> f64 {
    if a.is_empty() || b.is_empty() || n_boot == 0 {
        return 0.0;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut wins = 0usize;
    let mean_of = |xs: &[f64], rng: &mut ChaCha12Rng| {
        (0..xs.len())
            .map(|_| xs[rng.gen_range(0..xs.len())])
            .sum::<f64>()
            / xs.len() as f64
    };
    for _ in 0..n_boot {
        let ma = mean_of(a, &mut rng);
        let mb = mean_of(b, &mut rng);
        if ma > mb {
            wins += 1;
        }
    }
    wins as f64 / n_boot as f64
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if n < 2.0 {
        return f64::INFINITY;
    }
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// A local maximum of a smoothed density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Position refined by a parabola through the peak and its neighbours.
    pub position: f64,
    pub height: f64,
}

/// Local maxima of the density after Gaussian smoothing with RMS width `smooth`
/// sites, keeping those at least `min_relative` of the highest, ordered by position.
pub fn density_modes(ls: &[i64], density: &[f64], smooth: f64, min_relative: f64) -> Vec<Mode> {
    let n = density.len();
    if n < 3 {
        return Vec::new();
    }
    let reach = (4.0 * smooth).ceil() as usize;
    let kernel: Vec<f64> = (0..=reach)
        .map(|k| (-(k as f64).powi(2) / (2.0 * smooth * smooth).max(1e-300)).exp())
        .collect();
    let smoothed: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = density[i] * kernel[0];
            let mut w = kernel[0];
            for k in 1..=reach {
                if i >= k {
                    s += density[i - k] * kernel[k];
                    w += kernel[k];
                }
                if i + k < n {
                    s += density[i + k] * kernel[k];
                    w += kernel[k];
                }
            }
            s / w
        })
        .collect();
    let top = smoothed.iter().cloned().fold(0.0, f64::max);
    let mut modes = Vec::new();
    for i in 1..n - 1 {
        let (a, b, c) = (smoothed[i - 1], smoothed[i], smoothed[i + 1]);
        if b > a && b >= c && b >= min_relative * top {
            let curv = a - 2.0 * b + c;
            let dx = if curv < 0.0 {
                0.5 * (a - c) / curv
            } else {
                0.0
            };
            modes.push(Mode {
                position: ls[i] as f64 + dx,
                height: b,
            });
        }
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_grows_both_ways() {
        let mut a = Accumulator::default();
        a.add(0, &[1.0, 2.0]);
        a.add(-1, &[1.0, 1.0]);
        a.add(1, &[1.0, 1.0]);
        assert_eq!(a.offset, -1);
        assert_eq!(a.values, vec![1.0, 2.0, 3.0, 1.0]);
    }

    #[test]
    fn exponents_of_power_laws() {
        let t: Vec<f64> = (1..=200).map(|k| 10f64.powf(k as f64 / 40.0)).collect();
        let diff: Vec<f64> = t.iter().map(|t| 3.0 * t).collect();
        let flat = vec![5.0; t.len()];
        let ballistic: Vec<f64> = t.iter().map(|t| 400.0 + t * t / 2.0).collect();
        let nu = local_exponent(&t, &diff, EXPONENT_HALF_WINDOW).unwrap();
        assert!(nu.nu.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let nu = local_exponent(&t, &flat, EXPONENT_HALF_WINDOW).unwrap();
        assert!(nu.nu.iter().all(|v| v.abs() < 1e-10));
        let nu = local_exponent(&t, &ballistic, EXPONENT_HALF_WINDOW).unwrap();
        assert!(*nu.nu.last().unwrap() > 1.99);
        assert!(nu.nu.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(local_exponent(&t[..2], &diff[..2], 0.25).is_err());
    }

    #[test]
    fn exponential_tail_of_exact_input() {
        let ls: Vec<i64> = (-200..=200).collect();
        let d: Vec<f64> = ls.iter().map(|l| (-(l.abs() as f64) / 7.0).exp()).collect();
        let f = fit_exponential_tail(&ls, &d).unwrap();
        assert!((f.parameter - 7.0).abs() < 0.07, "{f:?}");
        assert!(!f.poor);
    }

    #[test]
    fn diffusive_tail_of_exact_input() {
        let t = 50.0;
        let ls: Vec<i64> = (-80..=80).collect();
        let d: Vec<f64> = ls
            .iter()
            .map(|l| (-(l * l) as f64 / (4.0 * t)).exp())
            .collect();
        let f = fit_diffusive(&ls, &d, t).unwrap();
        assert!((f.parameter - 4.0).abs() < 0.08, "{f:?}");
        let e = fit_exponential_tail(&ls, &d).unwrap();
        assert!(f.r_squared > e.r_squared);
        assert_eq!(f.sides.len(), 2);
    }

    #[test]
    fn ballistic_density_is_a_poor_fit() {
        // |J_l(t)|^2 spreading from one site of a clean chain
        let t = 60.0;
        let ls: Vec<i64> = (-120..=120).collect();
        let j = crate::chebyshev::bessel_j_sequence(t, 120);
        let d: Vec<f64> = ls
            .iter()
            .map(|l| j[l.unsigned_abs() as usize].powi(2))
            .collect();
        let f = fit_exponential_tail(&ls, &d).unwrap();
        assert!(f.poor, "{f:?}");
    }

    #[test]
    fn one_sided_tail_is_fitted_alone() {
        let ls: Vec<i64> = (0..=300).collect();
        let d: Vec<f64> = ls.iter().map(|&l| (-(l as f64) / 12.0).exp()).collect();
        let f = fit_exponential_tail(&ls, &d).unwrap();
        assert_eq!(f.sides.len(), 1);
        assert_eq!(f.sides[0].side, 1);
        assert!((f.parameter - 12.0).abs() < 0.1);
    }

    #[test]
    fn flat_density_is_a_poor_fit() {
        let ls: Vec<i64> = (-50..=50).collect();
        let d = vec![1.0 / 101.0; ls.len()];
        let f = fit_exponential_tail(&ls, &d).unwrap();
        assert!(f.poor, "{f:?}");
    }

    #[test]
    fn bootstrap_separates_shifted_samples() {
        let a: Vec<f64> = (0..40).map(|k| 10.0 + (k % 7) as f64).collect();
        let b: Vec<f64> = (0..40).map(|k| 5.0 + (k % 7) as f64).collect();
        assert!(bootstrap_greater(&a, &b, 2000, 1) > 0.99);
        assert!(bootstrap_greater(&b, &a, 2000, 1) < 0.01);
        assert_eq!(
            bootstrap_greater(&a, &b, 500, 9),
            bootstrap_greater(&a, &b, 500, 9)
        );
    }

    #[test]
    fn two_bumps_give_two_modes() {
        let ls: Vec<i64> = (-100..=100).collect();
        let d: Vec<f64> = ls
            .iter()
            .map(|&l| {
                (-((l + 40) as f64).powi(2) / 50.0).exp()
                    + 0.5 * (-((l - 30) as f64).powi(2) / 50.0).exp()
            })
            .collect();
        let m = density_modes(&ls, &d, 2.0, 0.1);
        assert_eq!(m.len(), 2);
        assert!((m[0].position + 40.0).abs() < 0.1 && (m[1].position - 30.0).abs() < 0.1);
    }

    #[test]
    fn empty_ensemble_is_rejected() {
        let p = crate::params::symmetric(0.1, 3.0);
        let mut spec = EnsembleSpec::new(p, Model::OneD, 5.0, vec![1.0]);
        spec.n_phase = 0;
        assert_eq!(run_ensemble(&spec), Err(EnsembleError::NoRealizations));
        spec.n_phase = 1;
        spec.times = vec![2.0, 1.0];
        assert_eq!(run_ensemble(&spec), Err(EnsembleError::BadTimes));
    }
}
