//! Unitary time evolution of the lattice wave equations.
//!
//! Three systems are supported:
//!
//! * the 1D driven Harper chain obtained for states that are plane waves along y,
//! * the 2D lattice in the time-dependent gauge, where the field enters as a
//!   time-dependent Peierls phase on the y bonds,
//! * the 2D lattice in the static gauge, where the field is a Stark ramp `F m`.
//!
//! Time-dependent Hamiltonians are integrated with a fourth-order
//! commutator-free Magnus scheme (two exponentials per step, each evaluated at
//! the Gauss–Legendre nodes). Every exponential is applied with a Chebyshev
//! expansion accurate to machine precision, so the only discretization error is
//! the Magnus truncation. The static gauge needs no time ordering and takes
//! one exponential per step.
//!
//! Windows are hard-walled. After every step the population of the outermost
//! ring is checked and the window is extended on any side where it exceeds
//! `edge_tol`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::chebyshev::{self, HermitianOperator, Workspace};
use crate::field::{Field1D, Field2D};
use crate::observables::{ObservableSeries, Sample};
use crate::params::ModelParams;
use crate::rng::DisorderRealization;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid propagation config: {0}")]
    Config(String),
    #[error("norm drift {drift:e} at t = {t} could not be brought under tolerance with dt >= {dt_min:e}")]
    StepFailure { t: f64, drift: f64, dt_min: f64 },
    #[error("the static gauge has a Stark ramp along m and cannot use a periodic m boundary")]
    PeriodicStaticGauge,
}

/// When observables are recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// Every `n` nominal steps, plus the final time.
    Stride(usize),
    /// At the listed times (ordered in the direction of evolution), plus the final time.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    pub t_start: f64,
    /// May lie before `t_start` for backward evolution.
    pub t_end: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// Largest allowed change of the drive phase `F t` within one step.
    pub max_phase_step: f64,
    /// Allowed relative norm drift per unit time.
    pub norm_tol: f64,
    /// Largest population tolerated in the outermost ring before growing.
    pub edge_tol: f64,
    /// Width of the ring checked by `edge_tol`, in sites.
    pub edge_width: usize,
    pub grow: bool,
    /// Sites added per side on growth; `None` means one magnetic period (at least 8).
    pub growth: Option<usize>,
    /// Padding around the initial support; `None` means `8 lambda` in 1D and `2 lambda` in 2D.
    pub initial_pad: Option<usize>,
    /// Periodic boundary along m (time gauge only).
    pub periodic_m: bool,
    pub sampling: Sampling,
    /// Truncation threshold for the Chebyshev coefficients.
    pub expansion_tol: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            t_start: 0.0,
            t_end: 1.0,
            dt_max: 0.5,
            dt_min: 1e-6,
            max_phase_step: 0.03,
            norm_tol: 1e-9,
            edge_tol: 1e-10,
            edge_width: 4,
            grow: true,
            growth: None,
            initial_pad: None,
            periodic_m: false,
            sampling: Sampling::Stride(10),
            expansion_tol: 1e-17,
        }
    }
}

impl PropagationConfig {
    pub fn until(t_end: f64) -> Self {
        PropagationConfig {
            t_end,
            ..Default::default()
        }
    }

    /// Fixed window, no growth.
    pub fn fixed_window(mut self) -> Self {
        self.grow = false;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        let bad = |m: &str| Err(PropagationError::Config(m.to_string()));
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return bad("times must be finite");
        }
        if !(self.dt_max > 0.0 && self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return bad("need 0 < dt_min <= dt_max");
        }
        if !(self.max_phase_step > 0.0
            && self.norm_tol > 0.0
            && self.edge_tol > 0.0
            && self.expansion_tol > 0.0)
        {
            return bad("tolerances must be positive");
        }
        if self.edge_width == 0 {
            return bad("edge_width must be positive");
        }
        match &self.sampling {
            Sampling::Stride(0) => return bad("observer stride must be positive"),
            Sampling::Times(ts) => {
                let dir = (self.t_end - self.t_start).signum();
                let mut prev = self.t_start;
                for &t in ts {
                    if !t.is_finite() || (t - prev) * dir < 0.0 || (self.t_end - t) * dir < 0.0 {
                        return bad("sample times must be ordered and lie within [t_start, t_end]");
                    }
                    prev = t;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Final state, recorded observables and bookkeeping of one evolution.
#[derive(Debug, Clone)]
pub struct Evolution<F> {
    pub field: F,
    pub series: ObservableSeries,
    pub steps: usize,
    pub growths: usize,
}

/// Receives the state at every sample time.
pub trait Observer<F> {
    fn observe(&mut self, t: f64, state: &F);
}

/// Observer that ignores everything.
pub struct NoObserver;

impl<F> Observer<F> for NoObserver {
    fn observe(&mut self, _t: f64, _state: &F) {}
}

impl<F, C: FnMut(f64, &F)> Observer<F> for C {
    fn observe(&mut self, t: f64, state: &F) {
        self(t, state)
    }
}

// Gauss–Legendre nodes and weights of the fourth-order commutator-free Magnus scheme.
const SQRT3: f64 = 1.732_050_807_568_877_2;
const NODE_1: f64 = 0.5 - SQRT3 / 6.0;
const NODE_2: f64 = 0.5 + SQRT3 / 6.0;
const WEIGHT_A: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const WEIGHT_B: f64 = (3.0 + 2.0 * SQRT3) / 12.0;

/// `y_i = hop (x_{i-1} + x_{i+1}) + diag_i x_i` with hard walls.
#[derive(Debug, Clone, Default)]
pub struct ChainOperator {
    pub hop: f64,
    pub diag: Vec<f64>,
}

impl HermitianOperator for ChainOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = x.len();
        let h = self.hop;
        match n {
            0 => {}
            1 => y[0] = x[0] * self.diag[0],
            _ => {
                y[0] = x[0] * self.diag[0] + x[1] * h;
                for i in 1..n - 1 {
                    y[i] = x[i] * self.diag[i] + (x[i - 1] + x[i + 1]) * h;
                }
                y[n - 1] = x[n - 1] * self.diag[n - 1] + x[n - 2] * h;
            }
        }
    }

    fn spectral_bounds(&self) -> (f64, f64) {
        let (lo, hi) = min_max(&self.diag);
        let r = 2.0 * self.hop.abs();
        (lo - r, hi + r)
    }
}

/// Square-lattice operator, l-major storage with contiguous m:
///
/// `y_{l,m} = xhop (x_{l+1,m} + x_{l-1,m}) + yhop_l x_{l,m+1} + conj(yhop_l) x_{l,m-1} + diag_{l,m} x_{l,m}`.
#[derive(Debug, Clone, Default)]
pub struct LatticeOperator {
    pub nl: usize,
    pub nm: usize,
    pub xhop: f64,
    pub yhop: Vec<Complex64>,
    pub diag: Vec<f64>,
    pub periodic_m: bool,
}

impl HermitianOperator for LatticeOperator {
    fn dim(&self) -> usize {
        self.nl * self.nm
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let (nl, nm) = (self.nl, self.nm);
        let xh = self.xhop;
        for i in 0..nl {
            let base = i * nm;
            let up = self.yhop[i];
            let dn = up.conj();
            let row = &x[base..base + nm];
            let out = &mut y[base..base + nm];
            let d = &self.diag[base..base + nm];
            for j in 0..nm {
                let mut acc = row[j] * d[j];
                if j + 1 < nm {
                    acc += up * row[j + 1];
                }
                if j > 0 {
                    acc += dn * row[j - 1];
                }
                out[j] = acc;
            }
            if self.periodic_m && nm > 2 {
                out[nm - 1] += up * row[0];
                out[0] += dn * row[nm - 1];
            }
            if i > 0 {
                let prev = &x[base - nm..base];
                for (o, v) in out.iter_mut().zip(prev) {
                    *o += v * xh;
                }
            }
            if i + 1 < nl {
                let next = &x[base + nm..base + 2 * nm];
                for (o, v) in out.iter_mut().zip(next) {
                    *o += v * xh;
                }
            }
        }
    }

    fn spectral_bounds(&self) -> (f64, f64) {
        let (lo, hi) = min_max(&self.diag);
        let ymax = self.yhop.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let r = 2.0 * self.xhop.abs() + 2.0 * ymax;
        (lo - r, hi + r)
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        })
}

/// The pieces every propagated system provides to the shared driver.
trait System {
    type Field: Clone;
    fn nominal_step(&self, cfg: &PropagationConfig) -> f64;
    /// Rebuilds window-dependent caches.
    fn prepare(&mut self, field: &Self::Field);
    /// Advances from `t` to `t + h`.
    fn step(&mut self, field: &mut Self::Field, t: f64, h: f64);
    /// Grows the window where the edge ring is too populated; returns whether it grew.
    fn grow(&mut self, field: &mut Self::Field) -> bool;
    fn edge_population(&self, field: &Self::Field) -> f64;
    fn sample(&self, t: f64, field: &Self::Field) -> Sample;
    fn norm_sqr(field: &Self::Field) -> f64;
}

fn sample_times(cfg: &PropagationConfig, nominal: f64) -> Vec<f64> {
    let span = cfg.t_end - cfg.t_start;
    let dir = span.signum();
    let mut out = match &cfg.sampling {
        Sampling::Stride(k) => {
            let every = nominal * *k as f64;
            let n = (span.abs() / every + 1e-9).floor() as usize;
            (1..=n)
                .map(|j| cfg.t_start + dir * every * j as f64)
                .collect::<Vec<_>>()
        }
        Sampling::Times(ts) => ts.iter().copied().filter(|&t| t != cfg.t_start).collect(),
    };
    if out.last().map_or(true, |&t| {
        (cfg.t_end - t).abs() > 1e-12 * (1.0 + cfg.t_end.abs())
    }) {
        out.push(cfg.t_end);
    } else if let Some(last) = out.last_mut() {
        *last = cfg.t_end;
    }
    out.dedup();
    out
}

fn drive<S: System, O: Observer<S::Field>>(
    sys: &mut S,
    mut field: S::Field,
    cfg: &PropagationConfig,
    observer: &mut O,
) -> Result<Evolution<S::Field>, PropagationError> {
    cfg.validate()?;
    sys.prepare(&field);
    let norm0 = S::norm_sqr(&field);
    let mut series = ObservableSeries::default();
    series.push(sys.sample(cfg.t_start, &field));
    observer.observe(cfg.t_start, &field);

    let nominal = sys.nominal_step(cfg);
    let mut steps = 0;
    let mut growths = 0;
    let mut ta = cfg.t_start;
    for tb in sample_times(cfg, nominal) {
        let mut dt = nominal;
        loop {
            let saved = field.clone();
            let n = ((tb - ta).abs() / dt - 1e-9).ceil().max(1.0) as usize;
            let h = (tb - ta) / n as f64;
            let mut seg_growths = 0;
            for k in 0..n {
                sys.step(&mut field, ta + k as f64 * h, h);
                if cfg.grow && sys.grow(&mut field) {
                    seg_growths += 1;
                }
            }
            let drift = ((S::norm_sqr(&field) - norm0) / norm0).abs();
            if drift <= cfg.norm_tol * (tb - cfg.t_start).abs() + 1e-13 {
                steps += n;
                growths += seg_growths;
                break;
            }
            dt *= 0.5;
            if dt < cfg.dt_min {
                return Err(PropagationError::StepFailure {
                    t: tb,
                    drift,
                    dt_min: cfg.dt_min,
                });
            }
            field = saved;
            sys.prepare(&field);
        }
        ta = tb;
        series.push(sys.sample(tb, &field));
        observer.observe(tb, &field);
    }
    Ok(Evolution {
        field,
        series,
        steps,
        growths,
    })
}

fn default_growth(p: &ModelParams, cfg: &PropagationConfig) -> usize {
    cfg.growth.unwrap_or_else(|| p.magnetic_period_sites(8))
}

// ---------------------------------------------------------------------------
// 1D driven Harper chain

struct HarperChain<'a> {
    p: ModelParams,
    kappa: f64,
    dis: &'a DisorderRealization,
    edge_width: usize,
    edge_tol: f64,
    growth: usize,
    tol: f64,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    disorder: Vec<f64>,
    op: ChainOperator,
    ws: Workspace,
}

impl HarperChain<'_> {
    /// `a * V(t1) + b * V(t2) + (a + b) * disorder`, with `V_l(t) = -Jy cos(2 pi alpha l + kappa - F t)`.
    fn set_diag(&mut self, a: f64, t1: f64, b: f64, t2: f64) {
        let (s1, c1) = (self.p.field * t1).sin_cos();
        let (s2, c2) = (self.p.field * t2).sin_cos();
        let jy = self.p.jy;
        let ab = a + b;
        for i in 0..self.op.diag.len() {
            let (c, s) = (self.cos_theta[i], self.sin_theta[i]);
            let v1 = c * c1 + s * s1;
            let v2 = c * c2 + s * s2;
            self.op.diag[i] = -jy * (a * v1 + b * v2) + ab * self.disorder[i];
        }
    }
}

impl System for HarperChain<'_> {
    type Field = Field1D;

    fn nominal_step(&self, cfg: &PropagationConfig) -> f64 {
        if self.p.field == 0.0 {
            cfg.dt_max
        } else {
            cfg.dt_max.min(cfg.max_phase_step / self.p.field.abs())
        }
    }

    fn prepare(&mut self, field: &Field1D) {
        let two_pi_alpha = 2.0 * PI * self.p.alpha;
        let n = field.len();
        self.cos_theta.clear();
        self.sin_theta.clear();
        for i in 0..n {
            let theta = two_pi_alpha * (field.offset + i as i64) as f64 + self.kappa;
            let (s, c) = theta.sin_cos();
            self.cos_theta.push(c);
            self.sin_theta.push(s);
        }
        self.disorder = self.dis.values_1d(field.sites());
        self.op.diag = vec![0.0; n];
    }

    fn step(&mut self, field: &mut Field1D, t: f64, h: f64) {
        if self.p.field == 0.0 {
            self.op.hop = -0.5 * self.p.jx;
            self.set_diag(0.5, t, 0.5, t);
            chebyshev::propagate(&self.op, &mut field.amps, h, self.tol, &mut self.ws);
            return;
        }
        let t1 = t + NODE_1 * h;
        let t2 = t + NODE_2 * h;
        self.op.hop = -0.25 * self.p.jx;
        self.set_diag(WEIGHT_B, t1, WEIGHT_A, t2);
        chebyshev::propagate(&self.op, &mut field.amps, h, self.tol, &mut self.ws);
        self.set_diag(WEIGHT_A, t1, WEIGHT_B, t2);
        chebyshev::propagate(&self.op, &mut field.amps, h, self.tol, &mut self.ws);
    }

    fn grow(&mut self, field: &mut Field1D) -> bool {
        let w = self.edge_width.min(field.len());
        let left: f64 = field.amps[..w].iter().map(|a| a.norm_sqr()).sum();
        let right: f64 = field.amps[field.len() - w..]
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        let gl = if left > self.edge_tol { self.growth } else { 0 };
        let gr = if right > self.edge_tol {
            self.growth
        } else {
            0
        };
        if gl + gr == 0 {
            return false;
        }
        field.pad(gl, gr);
        self.prepare(field);
        true
    }

    fn edge_population(&self, field: &Field1D) -> f64 {
        let n = field.len();
        let w = self.edge_width.min(n / 2);
        let ring = field.amps[..w].iter().chain(&field.amps[n - w..]);
        ring.map(|a| a.norm_sqr()).sum()
    }

    fn sample(&self, t: f64, field: &Field1D) -> Sample {
        Sample::of_1d(t, field, self.edge_population(field))
    }

    fn norm_sqr(field: &Field1D) -> f64 {
        field.norm_sqr()
    }
}

/// Evolves the 1D driven Harper equation
/// `i db_l/dt = -(Jx/2)(b_{l+1} + b_{l-1}) - Jy cos(2 pi alpha l + kappa - F t) b_l + eps_l b_l`.
pub fn evolve_1d<O: Observer<Field1D>>(
    b: Field1D,
    p: &ModelParams,
    kappa: f64,
    dis: &DisorderRealization,
    cfg: &PropagationConfig,
    observer: &mut O,
) -> Result<Evolution<Field1D>, PropagationError> {
    if b.is_empty() {
        return Err(PropagationError::Config("empty initial field".into()));
    }
    let mut b = b;
    if cfg.grow {
        b.trim(0.0);
        let pad = cfg.initial_pad.unwrap_or(8 * p.magnetic_period_sites(8));
        b.pad(pad, pad);
    }
    let mut sys = HarperChain {
        p: *p,
        kappa,
        dis,
        edge_width: cfg.edge_width,
        edge_tol: cfg.edge_tol,
        growth: default_growth(p, cfg),
        tol: cfg.expansion_tol,
        cos_theta: Vec::new(),
        sin_theta: Vec::new(),
        disorder: Vec::new(),
        op: ChainOperator::default(),
        ws: Workspace::default(),
    };
    drive(&mut sys, b, cfg, observer)
}

// ---------------------------------------------------------------------------
// 2D lattice

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gauge {
    /// Peierls phase `2 pi alpha l - F t` on the y bonds.
    Time,
    /// Peierls phase `2 pi alpha l` on the y bonds and a Stark ramp `F m`.
    Static,
}

struct Lattice<'a> {
    p: ModelParams,
    gauge: Gauge,
    dis: &'a DisorderRealization,
    edge_width: usize,
    edge_tol: f64,
    growth: usize,
    periodic_m: bool,
    tol: f64,
    /// `exp(i 2 pi alpha l)` for every row.
    peierls: Vec<Complex64>,
    disorder: Vec<f64>,
    op: LatticeOperator,
    ws: Workspace,
}

impl Lattice<'_> {
    fn ring_populations(&self, f: &Field2D) -> [f64; 4] {
        let w_l = self.edge_width.min(f.nl);
        let w_m = self.edge_width.min(f.nm);
        let row_sum = |i: usize| -> f64 {
            f.amps[i * f.nm..(i + 1) * f.nm]
                .iter()
                .map(|a| a.norm_sqr())
                .sum()
        };
        let l_lo: f64 = (0..w_l).map(row_sum).sum();
        let l_hi: f64 = (f.nl - w_l..f.nl).map(row_sum).sum();
        let (mut m_lo, mut m_hi) = (0.0, 0.0);
        if !self.periodic_m {
            for row in f.amps.chunks(f.nm) {
                m_lo += row[..w_m].iter().map(|a| a.norm_sqr()).sum::<f64>();
                m_hi += row[f.nm - w_m..].iter().map(|a| a.norm_sqr()).sum::<f64>();
            }
        }
        [l_lo, l_hi, m_lo, m_hi]
    }
}

impl System for Lattice<'_> {
    type Field = Field2D;

    fn nominal_step(&self, cfg: &PropagationConfig) -> f64 {
        match self.gauge {
            Gauge::Time if self.p.field != 0.0 => {
                cfg.dt_max.min(cfg.max_phase_step / self.p.field.abs())
            }
            _ => cfg.dt_max,
        }
    }

    fn prepare(&mut self, f: &Field2D) {
        let two_pi_alpha = 2.0 * PI * self.p.alpha;
        self.peierls = f
            .l_sites()
            .map(|l| Complex64::from_polar(1.0, two_pi_alpha * l as f64))
            .collect();
        self.disorder.clear();
        self.disorder.reserve(f.nl * f.nm);
        for l in f.l_sites() {
            for m in f.m_sites() {
                self.disorder.push(self.dis.energy_2d(l, m));
            }
        }
        self.op.nl = f.nl;
        self.op.nm = f.nm;
        self.op.periodic_m = self.periodic_m;
        match self.gauge {
            Gauge::Static => {
                self.op.xhop = -0.5 * self.p.jx;
                self.op.yhop = self
                    .peierls
                    .iter()
                    .map(|e| e * (-0.5 * self.p.jy))
                    .collect();
                self.op.diag = self.disorder.clone();
                for row in self.op.diag.chunks_mut(f.nm) {
                    for (j, d) in row.iter_mut().enumerate() {
                        *d += self.p.field * (f.offset_m + j as i64) as f64;
                    }
                }
            }
            Gauge::Time => {
                self.op.yhop = vec![Complex64::new(0.0, 0.0); f.nl];
                self.op.diag = vec![0.0; f.nl * f.nm];
            }
        }
    }

    fn step(&mut self, f: &mut Field2D, t: f64, h: f64) {
        match self.gauge {
            Gauge::Static => {
                chebyshev::propagate(&self.op, &mut f.amps, h, self.tol, &mut self.ws);
            }
            Gauge::Time => {
                let t1 = t + NODE_1 * h;
                let t2 = t + NODE_2 * h;
                let e1 = Complex64::from_polar(1.0, -self.p.field * t1);
                let e2 = Complex64::from_polar(1.0, -self.p.field * t2);
                for (a, b) in [(WEIGHT_B, WEIGHT_A), (WEIGHT_A, WEIGHT_B)] {
                    let drive = e1 * a + e2 * b;
                    self.op.xhop = -0.5 * self.p.jx * (a + b);
                    for (y, e) in self.op.yhop.iter_mut().zip(&self.peierls) {
                        *y = e * drive * (-0.5 * self.p.jy);
                    }
                    for (d, e) in self.op.diag.iter_mut().zip(&self.disorder) {
                        *d = (a + b) * e;
                    }
                    chebyshev::propagate(&self.op, &mut f.amps, h, self.tol, &mut self.ws);
                }
            }
        }
    }

    fn grow(&mut self, f: &mut Field2D) -> bool {
        let [l_lo, l_hi, m_lo, m_hi] = self.ring_populations(f);
        let g = |v: f64| if v > self.edge_tol { self.growth } else { 0 };
        let pads = [g(l_lo), g(l_hi), g(m_lo), g(m_hi)];
        if pads.iter().all(|&v| v == 0) {
            return false;
        }
        f.pad(pads[0], pads[1], pads[2], pads[3]);
        self.prepare(f);
        true
    }

    fn edge_population(&self, f: &Field2D) -> f64 {
        self.ring_populations(f).iter().sum()
    }

    fn sample(&self, t: f64, f: &Field2D) -> Sample {
        Sample::of_2d(t, f, self.edge_population(f))
    }

    fn norm_sqr(f: &Field2D) -> f64 {
        f.norm_sqr()
    }
}

fn evolve_2d<O: Observer<Field2D>>(
    psi: Field2D,
    p: &ModelParams,
    gauge: Gauge,
    dis: &DisorderRealization,
    cfg: &PropagationConfig,
    observer: &mut O,
) -> Result<Evolution<Field2D>, PropagationError> {
    if psi.amps.is_empty() {
        return Err(PropagationError::Config("empty initial field".into()));
    }
    if cfg.periodic_m && gauge == Gauge::Static {
        return Err(PropagationError::PeriodicStaticGauge);
    }
    if cfg.periodic_m && psi.nm < 3 {
        return Err(PropagationError::Config(
            "a periodic ring needs at least 3 sites".into(),
        ));
    }
    let mut psi = psi;
    if cfg.grow {
        let (m0, nm) = (psi.offset_m, psi.nm);
        psi.trim(0.0);
        let pad = cfg.initial_pad.unwrap_or(2 * p.magnetic_period_sites(8));
        if cfg.periodic_m {
            // keep the ring intact
            let lo = (psi.offset_m - m0) as usize;
            let hi = nm - lo - psi.nm;
            psi.pad(pad, pad, lo, hi);
        } else {
            psi.pad(pad, pad, pad, pad);
        }
    }
    let mut sys = Lattice {
        p: *p,
        gauge,
        dis,
        edge_width: cfg.edge_width,
        edge_tol: cfg.edge_tol,
        growth: default_growth(p, cfg),
        periodic_m: cfg.periodic_m,
        tol: cfg.expansion_tol,
        peierls: Vec::new(),
        disorder: Vec::new(),
        op: LatticeOperator::default(),
        ws: Workspace::default(),
    };
    drive(&mut sys, psi, cfg, observer)
}

/// Evolves the 2D lattice in the gauge where the field enters through the
/// time-dependent Peierls phase `exp(i (2 pi alpha l - F t))` on the y bonds.
pub fn evolve_2d_timegauge<O: Observer<Field2D>>(
    psi: Field2D,
    p: &ModelParams,
    dis: &DisorderRealization,
    cfg: &PropagationConfig,
    observer: &mut O,
) -> Result<Evolution<Field2D>, PropagationError> {
    evolve_2d(psi, p, Gauge::Time, dis, cfg, observer)
}

/// Evolves the 2D lattice in the gauge with a static Stark ramp `F m`.
///
/// Densities agree with [`evolve_2d_timegauge`]; amplitudes differ by the phase `exp(-i F m t)`.
pub fn evolve_2d_staticgauge<O: Observer<Field2D>>(
    psi: Field2D,
    p: &ModelParams,
    dis: &DisorderRealization,
    cfg: &PropagationConfig,
    observer: &mut O,
) -> Result<Evolution<Field2D>, PropagationError> {
    evolve_2d(psi, p, Gauge::Static, dis, cfg, observer)
}

/// Maps a static-gauge state at time `t` to the time gauge, `psi_{l,m} -> psi_{l,m} exp(i F m t)`.
pub fn static_to_time_gauge(psi: &Field2D, field: f64, t: f64) -> Field2D {
    let mut out = psi.clone();
    for row in out.amps.chunks_mut(psi.nm) {
        for (j, a) in row.iter_mut().enumerate() {
            let m = (psi.offset_m + j as i64) as f64;
            *a *= Complex64::from_polar(1.0, field * m * t);
        }
    }
    out
}
