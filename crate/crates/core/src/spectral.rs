//! Landau–Stark spectrum of the static-gauge lattice.
//!
//! With eigenfunctions `psi_{l,m} = exp(i kappa l) c_m exp(-i 2 pi alpha l m)`
//! the 2D problem reduces, for each quasimomentum `kappa`, to the tridiagonal
//! eigenproblem
//!
//! `-(Jy/2)(c_{m+1} + c_{m-1}) + [F m - Jx cos(2 pi alpha m - kappa)] c_m = E c_m`
//!
//! on a finite window of m. The Stark ramp confines every eigenstate, so a
//! window a few localization lengths wider than the states of interest is
//! exact up to exponentially small edge effects.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::params::ModelParams;
use crate::rng::DisorderRealization;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("window [{lo}, {hi}] has fewer than 3 sites")]
    WindowTooSmall { lo: i64, hi: i64 },
    #[error("eigensolver did not converge at kappa = {kappa} (residual {residual:e})")]
    Convergence { kappa: f64, residual: f64 },
    #[error("|F| = {field} is not below the critical field {critical}; the potential has no local extrema")]
    NoExtremum { field: f64, critical: f64 },
    #[error("a band scan needs at least one kappa value")]
    EmptyGrid,
    #[error("kappa grid must be strictly increasing inside [0, 2 pi)")]
    BadGrid,
}

/// Real symmetric tridiagonal matrix on the sites `offset ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub offset: i64,
    pub diag: Vec<f64>,
    /// `off[i]` couples sites `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &o) in self.off.iter().enumerate() {
            m[(i, i + 1)] = o;
            m[(i + 1, i)] = o;
        }
        m
    }

    /// `H x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }
}

fn check_window(window: &RangeInclusive<i64>) -> Result<usize, SpectralError> {
    let (lo, hi) = (*window.start(), *window.end());
    if hi - lo + 1 < 3 {
        return Err(SpectralError::WindowTooSmall { lo, hi });
    }
    Ok((hi - lo + 1) as usize)
}

/// Reduced Hamiltonian at quasimomentum `kappa` on the m-window, optionally with on-site disorder.
pub fn build_hamiltonian_1d(
    p: &ModelParams,
    kappa: f64,
    window: RangeInclusive<i64>,
    dis: Option<&DisorderRealization>,
) -> Result<Tridiagonal, SpectralError> {
    let n = check_window(&window)?;
    let two_pi_alpha = 2.0 * PI * p.alpha;
    let diag = window
        .clone()
        .map(|m| {
            let v = p.field * m as f64 - p.jx * (two_pi_alpha * m as f64 - kappa).cos();
            v + dis.map_or(0.0, |d| d.energy_1d(m))
        })
        .collect();
    Ok(Tridiagonal {
        offset: *window.start(),
        diag,
        off: vec![-0.5 * p.jy; n - 1],
    })
}

/// Default m-window centred on `center`: half-width `max(4/alpha, 8 Jy/F, 32)`.
pub fn default_window(p: &ModelParams, center: i64) -> RangeInclusive<i64> {
    let mut half = 32.0f64;
    if p.alpha != 0.0 {
        half = half.max(4.0 / p.alpha.abs());
    }
    if p.field != 0.0 {
        half = half.max(8.0 * p.jy / p.field.abs());
    }
    let half = half.min(1e6).ceil() as i64;
    center - half..=center + half
}

/// Eigen-decomposition of the reduced Hamiltonian at one quasimomentum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSlice {
    pub kappa: f64,
    pub window: RangeInclusive<i64>,
    /// Ascending.
    pub energies: Vec<f64>,
    /// `vectors[nu][m - window.start()]`; each has its largest component positive.
    pub vectors: Vec<Vec<f64>>,
    /// Mean current `Jx sum_m |c_m|^2 sin(2 pi alpha m - kappa)` of each state.
    pub currents: Vec<f64>,
}

impl SpectralSlice {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn sites(&self) -> RangeInclusive<i64> {
        self.window.clone()
    }

    /// Probability of state `nu` on the `width` outermost sites at each end.
    pub fn edge_weight(&self, nu: usize, width: usize) -> f64 {
        let v = &self.vectors[nu];
        let w = width.min(v.len() / 2);
        v[..w].iter().chain(&v[v.len() - w..]).map(|c| c * c).sum()
    }

    /// States whose edge amplitude is below `tol` (not influenced by the truncation).
    pub fn interior_states(&self, tol: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&nu| {
                let v = &self.vectors[nu];
                v[0].abs() < tol && v[v.len() - 1].abs() < tol
            })
            .collect()
    }
}

/// Mean current of a state on the given window.
pub fn state_current(p: &ModelParams, kappa: f64, offset: i64, c: &[f64]) -> f64 {
    let two_pi_alpha = 2.0 * PI * p.alpha;
    p.jx * c
        .iter()
        .enumerate()
        .map(|(i, v)| v * v * (two_pi_alpha * (offset + i as i64) as f64 - kappa).sin())
        .sum::<f64>()
}

/// Inverse participation ratio `1 / sum c^4` (for normalized `c`), a site count.
pub fn participation_length(c: &[f64]) -> f64 {
    let s2: f64 = c.iter().map(|v| v * v).sum();
    let s4: f64 = c.iter().map(|v| v.powi(4)).sum();
    s2 * s2 / s4
}

fn fix_sign(v: &mut [f64]) {
    let big = v
        .iter()
        .copied()
        .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Ascending eigenpairs of a tridiagonal matrix, verified for orthonormality and residual.
pub fn eigen_tridiagonal(
    h: &Tridiagonal,
    kappa: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), SpectralError> {
    let n = h.len();
    let eig =
        SymmetricEigen::try_new(h.to_dense(), 1e-15, 10_000).ok_or(SpectralError::Convergence {
            kappa,
            residual: f64::INFINITY,
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();

    let scale = h.norm_bound().max(1.0);
    let mut worst = 0.0f64;
    for (e, v) in energies.iter().zip(&vectors) {
        let hv = h.apply(v);
        let r = hv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - e * b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / scale);
        let norm = v.iter().map(|x| x * x).sum::<f64>();
        worst = worst.max((norm - 1.0).abs());
    }
    if worst > 1e-10 {
        return Err(SpectralError::Convergence {
            kappa,
            residual: worst,
        });
    }
    Ok((energies, vectors))
}

/// Solves the reduced eigenproblem at `kappa` on `window`.
pub fn solve_slice(
    p: &ModelParams,
    kappa: f64,
    window: RangeInclusive<i64>,
) -> Result<SpectralSlice, SpectralError> {
    solve_slice_with(p, kappa, window, None)
}

/// As [`solve_slice`], with optional on-site disorder along m.
pub fn solve_slice_with(
    p: &ModelParams,
    kappa: f64,
    window: RangeInclusive<i64>,
    dis: Option<&DisorderRealization>,
) -> Result<SpectralSlice, SpectralError> {
    let h = build_hamiltonian_1d(p, kappa, window.clone(), dis)?;
    let (energies, vectors) = eigen_tridiagonal(&h, kappa)?;
    let currents = vectors
        .iter()
        .map(|v| state_current(p, kappa, h.offset, v))
        .collect();
    Ok(SpectralSlice {
        kappa,
        window,
        energies,
        vectors,
        currents,
    })
}

/// Sum of all currents of a slice.
pub fn sum_rule(slice: &SpectralSlice) -> f64 {
    slice.currents.iter().sum()
}

/// The value the current sum must take on a truncated window: the trace of
/// the current operator, `Jx sum_m sin(2 pi alpha m - kappa)`.
pub fn current_trace(p: &ModelParams, kappa: f64, window: RangeInclusive<i64>) -> f64 {
    let two_pi_alpha = 2.0 * PI * p.alpha;
    p.jx * window
        .map(|m| (two_pi_alpha * m as f64 - kappa).sin())
        .sum::<f64>()
}

/// `n` equally spaced quasimomenta `2 pi j / n`.
pub fn uniform_kappa_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Spectral slices over a grid of quasimomenta on a common window.
#[derive(Debug, Clone, PartialEq)]
pub struct BandScan {
    pub params: ModelParams,
    pub window: RangeInclusive<i64>,
    pub kappas: Vec<f64>,
    pub slices: Vec<SpectralSlice>,
}

impl BandScan {
    /// Rows `(kappa, nu, E, v)` for plotting.
    pub fn records(&self) -> impl Iterator<Item = (f64, usize, f64, f64)> + '_ {
        self.slices.iter().flat_map(|s| {
            s.energies
                .iter()
                .zip(&s.currents)
                .enumerate()
                .map(move |(nu, (&e, &v))| (s.kappa, nu, e, v))
        })
    }
}

/// Solves every slice of the grid in parallel; the result is in grid order.
pub fn band_scan(
    p: &ModelParams,
    kappas: &[f64],
    window: RangeInclusive<i64>,
) -> Result<BandScan, SpectralError> {
    if kappas.is_empty() {
        return Err(SpectralError::EmptyGrid);
    }
    let ordered = kappas.windows(2).all(|w| w[1] > w[0]);
    let inside = kappas.iter().all(|&k| (0.0..2.0 * PI).contains(&k));
    if !ordered || !inside {
        return Err(SpectralError::BadGrid);
    }
    check_window(&window)?;
    let slices = kappas
        .par_iter()
        .map(|&k| solve_slice(p, k, window.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BandScan {
        params: *p,
        window,
        kappas: kappas.to_vec(),
        slices,
    })
}

/// Which local extremum of `V(m) = F m - Jx cos(2 pi alpha m - kappa)` a state sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extremum {
    /// The well around `2 pi alpha m - kappa = 2 pi k`.
    Minimum(i64),
    /// The hill around `2 pi alpha m - kappa = pi + 2 pi k`.
    Maximum(i64),
}

impl Extremum {
    /// Phase of `2 pi alpha m - kappa` at the extremum of the cosine.
    fn phase(self) -> f64 {
        match self {
            Extremum::Minimum(k) => 2.0 * PI * k as f64,
            Extremum::Maximum(k) => PI + 2.0 * PI * k as f64,
        }
    }

    /// Site (possibly fractional) of the extremum at quasimomentum `kappa`.
    pub fn center(self, p: &ModelParams, kappa: f64) -> f64 {
        (self.phase() + kappa) / (2.0 * PI * p.alpha)
    }
}

/// A localized state of the quadratic expansion of `V(m)` about one extremum.
#[derive(Debug, Clone, PartialEq)]
pub struct MathieuState {
    pub kappa: f64,
    pub extremum: Extremum,
    pub window: RangeInclusive<i64>,
    pub energy: f64,
    pub vector: Vec<f64>,
}

impl MathieuState {
    /// Amplitude at site `m`, zero outside the window.
    pub fn at(&self, m: i64) -> f64 {
        if self.window.contains(&m) {
            self.vector[(m - self.window.start()) as usize]
        } else {
            0.0
        }
    }
}

fn require_subcritical(p: &ModelParams) -> Result<(), SpectralError> {
    if p.is_subcritical() {
        Ok(())
    } else {
        Err(SpectralError::NoExtremum {
            field: p.field.abs(),
            critical: p.critical_field().abs(),
        })
    }
}

/// Ground state of `-(Jy/2)(c_{m+1} + c_{m-1}) + [F m + (Jx/2)(2 pi alpha m - kappa - 2 pi k)^2] c_m`
/// for a minimum, or the highest state of the inverted parabola for a maximum.
pub fn mathieu_state(
    p: &ModelParams,
    kappa: f64,
    extremum: Extremum,
) -> Result<MathieuState, SpectralError> {
    require_subcritical(p)?;
    let two_pi_alpha = 2.0 * PI * p.alpha;
    let center = extremum.center(p, kappa).round() as i64;
    let half = ((2.0 / p.alpha.abs()).ceil() as i64).max(24);
    let window = center - half..=center + half;
    let sign = match extremum {
        Extremum::Minimum(_) => 1.0,
        Extremum::Maximum(_) => -1.0,
    };
    let phase = extremum.phase();
    let diag = window
        .clone()
        .map(|m| {
            p.field * m as f64
                + sign * 0.5 * p.jx * (two_pi_alpha * m as f64 - kappa - phase).powi(2)
        })
        .collect::<Vec<_>>();
    let n = diag.len();
    let h = Tridiagonal {
        offset: *window.start(),
        diag,
        off: vec![-0.5 * p.jy; n - 1],
    };
    let (energies, mut vectors) = eigen_tridiagonal(&h, kappa)?;
    let pick = match extremum {
        Extremum::Minimum(_) => 0,
        Extremum::Maximum(_) => n - 1,
    };
    Ok(MathieuState {
        kappa,
        extremum,
        window,
        energy: energies[pick],
        vector: vectors.swap_remove(pick),
    })
}

/// Order-of-magnitude localization lengths along m.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationLengths {
    /// `max(1, 2 Jy/F)` above the critical field, `1/alpha` below.
    pub max: f64,
    /// `1/sqrt(alpha)` below the critical field; absent above.
    pub min: Option<f64>,
    /// Set when the parameters are outside the regime the estimate assumes.
    pub advisory: Option<String>,
}

/// Estimates the m-extent of Landau–Stark states. `|F| = F_cr` counts as over-critical.
pub fn localization_length_y(p: &ModelParams) -> LocalizationLengths {
    let a = p.alpha.abs();
    let mut notes = Vec::new();
    if a > 0.2 {
        notes.push(format!("alpha = {a} is not small"));
    }
    if (p.jx - p.jy).abs() > 1e-12 * p.jx.max(p.jy) {
        notes.push("Jx != Jy".to_string());
    }
    let advisory = (!notes.is_empty()).then(|| notes.join("; "));
    if p.is_subcritical() {
        LocalizationLengths {
            max: 1.0 / a,
            min: Some(1.0 / a.sqrt()),
            advisory,
        }
    } else {
        let l = if p.field == 0.0 {
            f64::INFINITY
        } else {
            2.0 * p.jy / p.field.abs()
        };
        LocalizationLengths {
            max: l.max(1.0),
            min: None,
            advisory,
        }
    }
}
