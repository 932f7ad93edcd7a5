//! Straight-line spectral families and the transporting states built from them.
//!
//! A family is followed through the band scan by eigenvector overlap, so it
//! passes avoided crossings diabatically. Superposing the family over the
//! quasimomentum gives a state that is localized in both directions and, as
//! long as `E(kappa)` is a straight line, translates rigidly along l with the
//! group velocity `dE/dkappa`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use thiserror::Error;

use crate::field::Field2D;
use crate::params::ModelParams;
use crate::propagate::{
    evolve_2d_staticgauge, NoObserver, PropagationConfig, PropagationError, Sampling,
};
use crate::rng::DisorderRealization;
use crate::spectral::{mathieu_state, BandScan, Extremum, SpectralError, SpectralSlice};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("diabatic continuity lost at kappa = {kappa}: best overlap {overlap} < 0.9")]
    ContinuityBreak { kappa: f64, overlap: f64 },
    #[error("the kappa grid must start at 0 and have at least 2 points")]
    BadGrid,
    #[error("seed state {0} does not exist in the first slice")]
    NoSeed(usize),
    #[error("drift verification requires a clean lattice (eps = 0)")]
    Disordered,
    #[error("duration must be positive and finite")]
    BadDuration,
}

/// Minimum overlap between consecutive members of a family.
pub const CONTINUITY: f64 = 0.9;

/// An eigenstate followed diabatically across the quasimomentum grid.
///
/// Members are eigenvectors of their slice except inside avoided crossings,
/// where they are the diabatic combination of the hybridized eigenvectors and
/// the energy is the expectation value.
#[derive(Debug, Clone, PartialEq)]
pub struct DiabaticFamily {
    pub params: ModelParams,
    /// The extremum whose approximate state seeded the family, if any.
    pub extremum: Option<Extremum>,
    pub window: RangeInclusive<i64>,
    pub kappas: Vec<f64>,
    pub energies: Vec<f64>,
    /// Real eigenvectors, sign-aligned so consecutive overlaps are positive.
    pub vectors: Vec<Vec<f64>>,
    /// Overlap of every member with its predecessor (1 for the first).
    pub overlaps: Vec<f64>,
    /// Number of eigenvectors combined into each member; above 1 only inside avoided crossings.
    pub mixed: Vec<usize>,
    /// Least-squares `dE/dkappa`.
    pub slope: f64,
    pub intercept: f64,
}

impl DiabaticFamily {
    pub fn min_overlap(&self) -> f64 {
        self.overlaps.iter().copied().fold(1.0, f64::min)
    }

    /// Largest deviation of the energies from the fitted line.
    pub fn max_line_deviation(&self) -> f64 {
        self.kappas
            .iter()
            .zip(&self.energies)
            .map(|(k, e)| (e - self.intercept - self.slope * k).abs())
            .fold(0.0, f64::max)
    }
}

/// Least-squares line `y = a + b x`; returns `(b, a)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (b, my - b * mx)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// m-window suitable for tracking the family of `extremum` over a full period of kappa.
pub fn family_window(p: &ModelParams, extremum: Extremum) -> RangeInclusive<i64> {
    let center = extremum.center(p, PI).round() as i64;
    crate::spectral::default_window(p, center)
}

fn check_grid(scan: &BandScan) -> Result<(), TransportError> {
    if scan.kappas.len() < 2 || scan.kappas[0] != 0.0 {
        return Err(TransportError::BadGrid);
    }
    Ok(())
}

/// Eigenvectors whose overlap with the diabatic target exceeds this are mixed into
/// the family member; a lone eigenvector above it is used as is.
pub const MIXING: f64 = 0.2;

/// Follows the family of `extremum`.
///
/// At each grid point the target is the localized state of the quadratic
/// expansion about the extremum, which has no avoided crossings. The member is
/// the normalized projection of that target onto the eigenvectors overlapping
/// it by more than [`MIXING`]: away from crossings this is a single eigenvector,
/// inside a crossing it is the diabatic combination of the hybridized pair.
pub fn track_family(scan: &BandScan, extremum: Extremum) -> Result<DiabaticFamily, TransportError> {
    check_grid(scan)?;
    let p = scan.params;
    let mut fam = track(scan, Rule::Threshold, |slice, _prev| {
        let seed = mathieu_state(&p, slice.kappa, extremum)?;
        Ok(slice.window.clone().map(|m| seed.at(m)).collect())
    })?;
    fam.extremum = Some(extremum);
    Ok(fam)
}

/// Follows the family that contains state `seed` of the first slice, using the
/// previous member as the diabatic target.
///
/// Without a reference state the overlap threshold alone is resolution
/// dependent: on fine grids a crossing is resolved into many small steps and the
/// weak partner drops below [`MIXING`]. Instead the member combines the best
/// eigenvector with every eigenvector that overlaps the previous member by at
/// least [`CLUSTER_OVERLAP`] and lies within `FAMILY_GATE * F` of its energy.
pub fn track_from(scan: &BandScan, seed: usize) -> Result<DiabaticFamily, TransportError> {
    check_grid(scan)?;
    let first = &scan.slices[0];
    if seed >= first.len() {
        return Err(TransportError::NoSeed(seed));
    }
    let gate = FAMILY_GATE * scan.params.field.abs();
    let rule = Rule::Gated { gate };
    track(scan, rule, |_, prev| {
        Ok(prev.map_or_else(|| first.vectors[seed].clone(), |v| v.to_vec()))
    })
}

/// Smallest overlap for an eigenvector to join an energy-gated cluster.
pub const CLUSTER_OVERLAP: f64 = 0.01;

/// Energy window of an energy-gated cluster in units of the field.
pub const FAMILY_GATE: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
enum Rule {
    Threshold,
    Gated { gate: f64 },
}

/// Projection of `target` onto a set of eigenvectors of `slice`. Returns the
/// normalized member, its energy expectation and the number of eigenvectors
/// combined.
///
/// `Threshold` takes the eigenvectors overlapping the target by at least
/// [`MIXING`], or the best one if none does (near ties go to the smaller energy
/// change). `Gated` takes the best one plus the energy-gated cluster.
fn diabatic_member(
    target: &[f64],
    slice: &SpectralSlice,
    prev_energy: Option<f64>,
    rule: Rule,
) -> (Vec<f64>, f64, usize) {
    let overlaps: Vec<f64> = slice.vectors.iter().map(|v| dot(target, v)).collect();
    let top = overlaps.iter().map(|o| o.abs()).fold(0.0, f64::max);
    let mut best = None::<usize>;
    for (i, o) in overlaps.iter().enumerate() {
        if o.abs() < top - 1e-9 {
            continue;
        }
        best = Some(match (best, prev_energy) {
            (Some(j), Some(e))
                if (slice.energies[j] - e).abs() <= (slice.energies[i] - e).abs() =>
            {
                j
            }
            (Some(j), None) => j,
            _ => i,
        });
    }
    let best = best.unwrap_or(0);
    let chosen: Vec<usize> = match (rule, prev_energy) {
        (Rule::Threshold, _) => {
            let c: Vec<usize> = (0..overlaps.len())
                .filter(|&i| overlaps[i].abs() >= MIXING)
                .collect();
            if c.len() <= 1 {
                vec![best]
            } else {
                c
            }
        }
        (Rule::Gated { gate }, Some(e)) => (0..overlaps.len())
            .filter(|&i| {
                i == best
                    || (overlaps[i].abs() >= CLUSTER_OVERLAP
                        && (slice.energies[i] - e).abs() < gate)
            })
            .collect(),
        (Rule::Gated { .. }, None) => vec![best],
    };
    let weight: f64 = chosen
        .iter()
        .map(|&i| overlaps[i].powi(2))
        .sum::<f64>()
        .sqrt();
    let mut member = vec![0.0; target.len()];
    let mut energy = 0.0;
    for &i in &chosen {
        let c = overlaps[i] / weight;
        for (x, y) in member.iter_mut().zip(&slice.vectors[i]) {
            *x += c * y;
        }
        energy += c * c * slice.energies[i];
    }
    (member, energy, chosen.len())
}

fn track<T>(scan: &BandScan, rule: Rule, mut target: T) -> Result<DiabaticFamily, TransportError>
where
    T: FnMut(&SpectralSlice, Option<&[f64]>) -> Result<Vec<f64>, TransportError>,
{
    let n = scan.kappas.len();
    let mut energies = Vec::with_capacity(n);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut overlaps = Vec::with_capacity(n);
    let mut mixed = Vec::with_capacity(n);
    for slice in &scan.slices {
        let prev = vectors.last().map(|v| v.as_slice());
        let t = target(slice, prev)?;
        let (mut v, e, k) = diabatic_member(&t, slice, energies.last().copied(), rule);
        let o = match prev {
            None => 1.0,
            Some(pv) => {
                let o = dot(pv, &v);
                if o.abs() <= CONTINUITY {
                    return Err(TransportError::ContinuityBreak {
                        kappa: slice.kappa,
                        overlap: o.abs(),
                    });
                }
                if o < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                o.abs()
            }
        };
        energies.push(e);
        vectors.push(v);
        overlaps.push(o);
        mixed.push(k);
    }
    let (slope, intercept) = fit_line(&scan.kappas, &energies);
    Ok(DiabaticFamily {
        params: scan.params,
        extremum: None,
        window: scan.window.clone(),
        kappas: scan.kappas.clone(),
        energies,
        vectors,
        overlaps,
        mixed,
        slope,
        intercept,
    })
}

/// Tracks every state of the first slice whose edge amplitudes are below `edge_tol`
/// and returns the families that stay continuous over the whole grid and stay
/// away from the window edges, ordered by seed energy.
pub fn find_families(
    scan: &BandScan,
    edge_tol: f64,
) -> Result<Vec<DiabaticFamily>, TransportError> {
    use rayon::prelude::*;
    check_grid(scan)?;
    let seeds = scan.slices[0].interior_states(edge_tol);
    let found: Vec<Option<DiabaticFamily>> = seeds
        .par_iter()
        .map(|&s| {
            let fam = track_from(scan, s).ok()?;
            let interior = fam
                .vectors
                .iter()
                .all(|v| v[0].abs() < edge_tol && v[v.len() - 1].abs() < edge_tol);
            interior.then_some(fam)
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

/// Weight function applied across the quasimomentum integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Taper {
    /// Equal weights: the literal integral over one period.
    Uniform,
    /// `exp(-beta (1/sin^2(kappa/2) - 1))`, which vanishes with all derivatives at
    /// `kappa = 0, 2 pi`. The family is not periodic in kappa (after one period it
    /// belongs to the neighbouring extremum), so uniform weights leave algebraic
    /// tails along l; the taper makes them decay faster than any power.
    Smooth { beta: f64 },
}

impl Default for Taper {
    fn default() -> Self {
        Taper::Smooth { beta: 0.5 }
    }
}

impl Taper {
    pub fn weight(self, kappa: f64) -> f64 {
        match self {
            Taper::Uniform => 1.0,
            Taper::Smooth { beta } => {
                let s = (0.5 * kappa).sin().powi(2);
                if s < 1e-300 {
                    0.0
                } else {
                    (-beta * (1.0 / s - 1.0)).exp()
                }
            }
        }
    }
}

/// A state localized in both directions, built from one family.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportingState {
    pub field: Field2D,
    pub extremum: Option<Extremum>,
    pub n_kappa: usize,
    pub slope: f64,
    pub taper: Taper,
}

impl TransportingState {
    /// RMS extent along m.
    pub fn width_m(&self) -> f64 {
        let (m1, m2) = self.field.moments_m();
        let n = self.field.norm_sqr();
        (m2 / n - (m1 / n).powi(2)).max(0.0).sqrt()
    }

    /// RMS extent along l.
    pub fn width_l(&self) -> f64 {
        let (m1, m2) = self.field.moments_l();
        let n = self.field.norm_sqr();
        (m2 / n - (m1 / n).powi(2)).max(0.0).sqrt()
    }
}

/// Superposes the family over the quasimomentum with the periodic trapezoid rule:
///
/// `psi_{l,m} = exp(-i 2 pi alpha l m) sum_j w(kappa_j) exp(i kappa_j l) c_m(kappa_j)`,
///
/// evaluated on `l` in `[-N/2, N/2)` (the quadrature is N-periodic in l), trimmed
/// to densities above `1e-16` of the peak and normalized.
pub fn build_transporting_state(fam: &DiabaticFamily, taper: Taper) -> TransportingState {
    let p = &fam.params;
    let n = fam.kappas.len();
    let half = (n / 2) as i64;
    let two_pi_alpha = 2.0 * PI * p.alpha;
    let m_lo = *fam.window.start();
    let nm = fam.vectors[0].len();
    let weights: Vec<f64> = fam.kappas.iter().map(|&k| taper.weight(k)).collect();
    let ls = -half..=(n as i64 - half - 1);
    let mut field = Field2D::zeros(ls.clone(), m_lo..=m_lo + nm as i64 - 1);
    for (i, l) in ls.enumerate() {
        // exp(i kappa_j l) for all j
        let phases: Vec<Complex64> = fam
            .kappas
            .iter()
            .zip(&weights)
            .map(|(&k, &w)| Complex64::from_polar(w, k * l as f64))
            .collect();
        for j in 0..nm {
            let m = m_lo + j as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (ph, v) in phases.iter().zip(&fam.vectors) {
                acc += ph * v[j];
            }
            let gauge = Complex64::from_polar(1.0, -two_pi_alpha * (l * m) as f64);
            field.amps[i * nm + j] = acc * gauge;
        }
    }
    let peak = field.amps.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    field.trim(1e-16 * peak);
    field.normalize();
    TransportingState {
        field,
        extremum: fam.extremum,
        n_kappa: n,
        slope: fam.slope,
        taper,
    }
}

/// Outcome of evolving a transporting state.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    /// Slope of a least-squares line through the mean position.
    pub v_measured: f64,
    /// Mean position at the end minus at the start.
    pub displacement: f64,
    /// Peak normalized density cross-correlation over shifts along l.
    pub shape_fidelity: f64,
    /// The shift that attains `shape_fidelity`.
    pub best_shift: f64,
    /// Probability at the end behind the launch region, opposite to the family's
    /// drift direction (`l < <l>_0 - 2 w_0 - 1` for a positive slope, mirrored for a
    /// negative one), with `w_0` the initial RMS width along l.
    pub backscatter_norm: f64,
    pub times: Vec<f64>,
    pub mean_l: Vec<f64>,
    pub final_state: Field2D,
}

/// Normalized cross-correlation of two densities with `b` shifted by `s` sites along l,
/// using linear interpolation between sites.
pub fn shifted_overlap(a: &Field2D, b: &Field2D, s: f64) -> f64 {
    let da: Vec<f64> = a.amps.iter().map(|z| z.norm_sqr()).collect();
    let db: Vec<f64> = b.amps.iter().map(|z| z.norm_sqr()).collect();
    let na = da.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = db.iter().map(|x| x * x).sum::<f64>().sqrt();
    let floor = s.floor();
    let frac = s - floor;
    let shift = floor as i64;
    let rho_b = |l: i64, m: i64| -> f64 { b.index(l, m).map_or(0.0, |k| db[k]) };
    let mut acc = 0.0;
    for (i, l) in a.l_sites().enumerate() {
        for (j, m) in a.m_sites().enumerate() {
            let x = da[i * a.nm + j];
            if x == 0.0 {
                continue;
            }
            // b(l - s) between sites l - shift - 1 and l - shift
            let y = (1.0 - frac) * rho_b(l - shift, m) + frac * rho_b(l - shift - 1, m);
            acc += x * y;
        }
    }
    acc / (na * nb)
}

/// Best shift (to 1e-3 sites) of `b` onto `a` near `guess`, and the overlap there.
pub fn best_shift(a: &Field2D, b: &Field2D, guess: f64, search: f64) -> (f64, f64) {
    let f = |s: f64| shifted_overlap(a, b, s);
    let mut best = (guess, f(guess));
    let steps = (2.0 * search).ceil() as i64;
    for k in -steps..=steps {
        let s = guess + 0.5 * k as f64;
        let v = f(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    // golden-section refinement within half a site
    let (mut lo, mut hi) = (best.0 - 0.5, best.0 + 0.5);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-3 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let v = f(mid);
    if v > best.1 {
        (mid, v)
    } else {
        best
    }
}

/// Evolves the state for `duration` in the static gauge and measures its drift.
pub fn verify_drift(
    state: &TransportingState,
    p: &ModelParams,
    duration: f64,
) -> Result<DriftReport, TransportError> {
    if p.eps != 0.0 {
        return Err(TransportError::Disordered);
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(TransportError::BadDuration);
    }
    let samples = 40;
    let times: Vec<f64> = (1..=samples)
        .map(|k| duration * k as f64 / samples as f64)
        .collect();
    let cfg = PropagationConfig {
        t_end: duration,
        sampling: Sampling::Times(times),
        ..PropagationConfig::default()
    };
    let ev = evolve_2d_staticgauge(
        state.field.clone(),
        p,
        &DisorderRealization::none(),
        &cfg,
        &mut NoObserver,
    )?;
    let series = &ev.series;
    let (v, _) = fit_line(&series.times, &series.mean_x);
    let norm0 = state.field.norm_sqr();
    let l0 = state.field.moments_l().0 / norm0;
    let w0 = state.width_l();
    let displacement = series.mean_x[series.len() - 1] - l0;
    let (shift, fidelity) = best_shift(&ev.field, &state.field, displacement, 4.0 + 0.5 * w0);
    let dir = if state.slope < 0.0 { -1.0 } else { 1.0 };
    let cut = dir * l0 - 2.0 * w0 - 1.0;
    let density = ev.field.projected_density();
    let behind: f64 = ev
        .field
        .l_sites()
        .zip(&density)
        .filter(|(l, _)| dir * (*l as f64) < cut)
        .map(|(_, d)| d)
        .sum();
    Ok(DriftReport {
        v_measured: v,
        displacement,
        shape_fidelity: fidelity,
        best_shift: shift,
        backscatter_norm: behind / ev.field.norm_sqr(),
        times: series.times.clone(),
        mean_l: series.mean_x.clone(),
        final_state: ev.field,
    })
}

/// Rows `(l, m, |psi|^2)` of a 2D state.
pub fn density_records(f: &Field2D) -> Vec<(i64, i64, f64)> {
    let mut out = Vec::with_capacity(f.amps.len());
    for (i, l) in f.l_sites().enumerate() {
        for (j, m) in f.m_sites().enumerate() {
            out.push((l, m, f.amps[i * f.nm + j].norm_sqr()));
        }
    }
    out
}
