//! Classical single-band limit: `H = -Jx cos p - Jy cos(x - F t)` in scaled
//! coordinates `x = 2 pi alpha l`, with time carrying the factor `2 pi alpha`
//! so that the drift `F / (2 pi alpha)` and the threshold `F_cr` match the
//! quantum model.
//!
//! Equations of motion:
//! `dx/dt = 2 pi alpha Jx sin p`, `dp/dt = -2 pi alpha Jy sin(x - F t)`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::params::ModelParams;

/// Scaled position `x = 2 pi alpha l` and momentum, both in radians and unreduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub x: f64,
    pub p: f64,
}

impl ClassicalState {
    pub fn new(x: f64, p: f64) -> Self {
        ClassicalState { x, p }
    }

    /// Unscaled lattice position `x / (2 pi alpha)`.
    pub fn lattice_position(&self, alpha: f64) -> f64 {
        self.x / (TAU * alpha)
    }
}

/// Splitting scheme used by [`flow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Kick-drift-kick, second order.
    #[default]
    Leapfrog,
    /// Triple-jump composition of kick-drift-kick, fourth order.
    Yoshida4,
}

/// `H(x, p, t)` without the `2 pi alpha` time scale.
pub fn energy(s: ClassicalState, p: &ModelParams, t: f64) -> f64 {
    -p.jx * s.p.cos() - p.jy * (s.x - p.field * t).cos()
}

/// The largest step the flow should take: 1% of the shorter of the cyclotron and
/// Bloch periods.
pub fn max_step(p: &ModelParams) -> f64 {
    let d = p.derived();
    let mut limit = f64::INFINITY;
    if d.cyclotron_frequency > 0.0 {
        limit = TAU / d.cyclotron_frequency;
    }
    if let Some(tb) = d.bloch_period {
        limit = limit.min(tb);
    }
    if !limit.is_finite() {
        limit = 1.0;
    }
    0.01 * limit
}

#[derive(Debug, Clone, Copy)]
struct Rates {
    drift: f64,
    kick: f64,
    field: f64,
}

impl Rates {
    fn of(p: &ModelParams) -> Self {
        let s = TAU * p.alpha;
        Rates {
            drift: s * p.jx,
            kick: s * p.jy,
            field: p.field,
        }
    }

    /// Kick-drift-kick over `[t, t + h]` in the extended phase space (time drifts
    /// with x), so the scheme stays symmetric for the explicit time dependence.
    #[inline]
    fn leapfrog(&self, s: &mut ClassicalState, t: f64, h: f64) {
        s.p -= 0.5 * h * self.kick * (s.x - self.field * t).sin();
        s.x += h * self.drift * s.p.sin();
        s.p -= 0.5 * h * self.kick * (s.x - self.field * (t + h)).sin();
    }

    #[inline]
    fn step(&self, s: &mut ClassicalState, t: f64, h: f64, scheme: Integrator) {
        match scheme {
            Integrator::Leapfrog => self.leapfrog(s, t, h),
            Integrator::Yoshida4 => {
                let c = 2f64.cbrt();
                let w1 = 1.0 / (2.0 - c);
                let w0 = -c * w1;
                self.leapfrog(s, t, w1 * h);
                self.leapfrog(s, t + w1 * h, w0 * h);
                self.leapfrog(s, t + (w1 + w0) * h, w1 * h);
            }
        }
    }
}

/// Integrates from `t0` to `t1` with equal steps no longer than `dt`.
pub fn flow(
    s: ClassicalState,
    p: &ModelParams,
    t0: f64,
    t1: f64,
    dt: f64,
    scheme: Integrator,
) -> ClassicalState {
    let span = t1 - t0;
    if span == 0.0 {
        return s;
    }
    let n = (span.abs() / dt.abs()).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let r = Rates::of(p);
    let mut s = s;
    for k in 0..n {
        r.step(&mut s, t0 + k as f64 * h, h, scheme);
    }
    s
}

/// Samples the trajectory every `h` up to `t1`, including both ends.
pub fn trajectory(
    s: ClassicalState,
    p: &ModelParams,
    t1: f64,
    dt: f64,
    scheme: Integrator,
) -> Vec<(f64, ClassicalState)> {
    let n = (t1.abs() / dt.abs()).ceil().max(1.0) as usize;
    let h = t1 / n as f64;
    let r = Rates::of(p);
    let mut s = s;
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, s));
    for k in 0..n {
        r.step(&mut s, k as f64 * h, h, scheme);
        out.push(((k + 1) as f64 * h, s));
    }
    out
}

/// Period of the orbit from the mean spacing of upward zero crossings of
/// `x - <x>` over `t_max`. `None` if fewer than two crossings occur.
pub fn orbit_period(s: ClassicalState, p: &ModelParams, t_max: f64, dt: f64) -> Option<f64> {
    let traj = trajectory(s, p, t_max, dt, Integrator::Yoshida4);
    let mean = traj.iter().map(|(_, s)| s.x).sum::<f64>() / traj.len() as f64;
    let mut crossings = Vec::new();
    for w in traj.windows(2) {
        let (ta, a) = (w[0].0, w[0].1.x - mean);
        let (tb, b) = (w[1].0, w[1].1.x - mean);
        if a < 0.0 && b >= 0.0 {
            crossings.push(ta + (tb - ta) * (-a) / (b - a));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// One point of a stroboscopic section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub seed: usize,
    pub period: usize,
    /// Co-moving `x - F t` reduced to `[0, 2 pi)`.
    pub x: f64,
    /// `p` reduced to `[0, 2 pi)`.
    pub p: f64,
}

/// Strobe period: `T_B` when the field is nonzero, otherwise `fallback`.
pub fn strobe_period(p: &ModelParams, fallback: f64) -> f64 {
    p.derived().bloch_period.unwrap_or(fallback)
}

fn steps_per_period(p: &ModelParams, period: f64) -> usize {
    (period / max_step(p)).ceil().max(1.0) as usize
}

/// Samples every seed at `t = n T` for `n = 1..=n_periods` in the co-moving frame.
/// `period` is used only when `F = 0`. Points are ordered by seed, then period.
pub fn strobe_map(
    initials: &[ClassicalState],
    p: &ModelParams,
    n_periods: usize,
    period: f64,
) -> Vec<SectionPoint> {
    let tp = strobe_period(p, period);
    let steps = steps_per_period(p, tp);
    let h = tp / steps as f64;
    let r = Rates::of(p);
    let per_seed: Vec<Vec<SectionPoint>> = initials
        .par_iter()
        .enumerate()
        .map(|(seed, &s0)| {
            let mut s = s0;
            let mut out = Vec::with_capacity(n_periods);
            for n in 0..n_periods {
                let t0 = n as f64 * tp;
                for k in 0..steps {
                    r.leapfrog(&mut s, t0 + k as f64 * h, h);
                }
                let t = (n + 1) as f64 * tp;
                out.push(SectionPoint {
                    seed,
                    period: n + 1,
                    x: (s.x - p.field * t).rem_euclid(TAU),
                    p: s.p.rem_euclid(TAU),
                });
            }
            out
        })
        .collect();
    per_seed.into_iter().flatten().collect()
}

/// `n x n` seeds at the cell centres of `[0, 2 pi)^2`, row-major in `p`.
pub fn seed_grid(n: usize) -> Vec<ClassicalState> {
    let d = TAU / n as f64;
    (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| ClassicalState::new((j as f64 + 0.5) * d, (i as f64 + 0.5) * d))
        })
        .collect()
}

/// Trapping summary of a seed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandReport {
    pub exists: bool,
    /// Fraction of trapped seeds.
    pub measure: f64,
    pub trapped: Vec<bool>,
    /// Mean drift of the trapped seeds in lattice sites per strobe period.
    pub mean_drift_per_period: Option<f64>,
}

/// Follows `s0` for `n_periods` strobe periods. Returns the final state, or
/// `None` as soon as the co-moving excursion `|(x - F t) - x0|` reaches `pi`.
fn trapped_run(
    s0: ClassicalState,
    r: &Rates,
    tp: f64,
    steps: usize,
    n_periods: usize,
) -> Option<ClassicalState> {
    let h = tp / steps as f64;
    let mut s = s0;
    for n in 0..n_periods {
        let t0 = n as f64 * tp;
        for k in 0..steps {
            let t = t0 + k as f64 * h;
            r.leapfrog(&mut s, t, h);
            if (s.x - r.field * (t + h) - s0.x).abs() >= PI {
                return None;
            }
        }
    }
    Some(s)
}

/// A seed is trapped when its co-moving excursion in `x` stays below `pi` for
/// `n_periods` strobe periods (a proxy for lying inside the resonance island).
/// `period` is the strobe period used when `F = 0`.
pub fn island_exists(
    p: &ModelParams,
    seeds: &[ClassicalState],
    n_periods: usize,
    period: f64,
) -> IslandReport {
    let tp = strobe_period(p, period);
    let steps = steps_per_period(p, tp);
    let r = Rates::of(p);
    let finals: Vec<Option<ClassicalState>> = seeds
        .par_iter()
        .map(|&s| trapped_run(s, &r, tp, steps, n_periods))
        .collect();
    let trapped: Vec<bool> = finals.iter().map(Option::is_some).collect();
    let count = trapped.iter().filter(|&&b| b).count();
    let mean_drift_per_period = (count > 0 && n_periods > 0).then(|| {
        let total: f64 = seeds
            .iter()
            .zip(&finals)
            .filter_map(|(s0, f)| {
                f.map(|f| f.lattice_position(p.alpha) - s0.lattice_position(p.alpha))
            })
            .sum();
        total / count as f64 / n_periods as f64
    });
    IslandReport {
        exists: count > 0,
        measure: if seeds.is_empty() {
            0.0
        } else {
            count as f64 / seeds.len() as f64
        },
        trapped,
        mean_drift_per_period,
    }
}

/// Trapped fraction at each field of `fields`, other parameters from `p`.
pub fn trapped_fraction_sweep(
    p: &ModelParams,
    fields: &[f64],
    grid: usize,
    n_periods: usize,
    period: f64,
) -> Vec<(f64, f64)> {
    let seeds = seed_grid(grid);
    fields
        .iter()
        .map(|&f| {
            (
                f,
                island_exists(&p.with_field(f), &seeds, n_periods, period).measure,
            )
        })
        .collect()
}

/// The bracket `(last field with trapping, first field without)` of an ascending
/// sweep, if the fraction vanishes somewhere after being positive.
pub fn threshold_bracket(sweep: &[(f64, f64)]) -> Option<(f64, f64)> {
    let first_zero = sweep.iter().position(|&(_, m)| m == 0.0)?;
    if first_zero == 0 {
        return None;
    }
    Some((sweep[first_zero - 1].0, sweep[first_zero].0))
}
