//! Lattice wavefunctions on explicit integer windows and their constructors.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use thiserror::Error;

use crate::params::ModelParams;
use crate::rng::{phase_at, site_key_1d, site_key_2d, Purpose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("window of {sites} sites leaves tail norm {tail:e} outside (limit 1e-12)")]
    WindowTooSmall { sites: usize, tail: f64 },
    #[error("the Landau packet needs a positive flux, got alpha = {0}")]
    NonPositiveFlux(f64),
    #[error("packet width must be positive, got {0}")]
    BadWidth(f64),
    #[error("empty window")]
    EmptyWindow,
}

const TAIL_LIMIT: f64 = 1e-12;

/// Amplitudes `b_l` for `l = offset .. offset + len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    pub offset: i64,
    pub amps: Vec<Complex64>,
}

/// Amplitudes `psi_{l,m}` stored l-major: index `(l - offset_l) * nm + (m - offset_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub offset_l: i64,
    pub offset_m: i64,
    pub nl: usize,
    pub nm: usize,
    pub amps: Vec<Complex64>,
}

impl Field1D {
    pub fn zeros(sites: RangeInclusive<i64>) -> Self {
        let n = (sites.end() - sites.start() + 1).max(0) as usize;
        Field1D {
            offset: *sites.start(),
            amps: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn delta(site: i64, sites: RangeInclusive<i64>) -> Self {
        let mut f = Self::zeros(sites);
        f.amps[(site - f.offset) as usize] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn from_fn(sites: RangeInclusive<i64>, f: impl Fn(i64) -> Complex64) -> Self {
        Field1D {
            offset: *sites.start(),
            amps: sites.map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn last_site(&self) -> i64 {
        self.offset + self.amps.len() as i64 - 1
    }

    pub fn sites(&self) -> RangeInclusive<i64> {
        self.offset..=self.last_site()
    }

    pub fn get(&self, l: i64) -> Complex64 {
        let i = l - self.offset;
        if i < 0 || i as usize >= self.amps.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amps[i as usize]
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `(sum l |b|^2, sum l^2 |b|^2)`, not divided by the norm.
    pub fn moments(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let l = (self.offset + i as i64) as f64;
            let w = a.norm_sqr();
            m1 += l * w;
            m2 += l * l * w;
        }
        (m1, m2)
    }

    /// Extends the window by `left` and `right` zero sites.
    pub fn pad(&mut self, left: usize, right: usize) {
        if left > 0 {
            let mut v = vec![Complex64::new(0.0, 0.0); left];
            v.extend_from_slice(&self.amps);
            self.amps = v;
            self.offset -= left as i64;
        }
        self.amps
            .resize(self.amps.len() + right, Complex64::new(0.0, 0.0));
    }

    /// Shrinks the window to the sites whose density exceeds `floor`.
    pub fn trim(&mut self, floor: f64) {
        let first = self.amps.iter().position(|a| a.norm_sqr() > floor);
        let last = self.amps.iter().rposition(|a| a.norm_sqr() > floor);
        if let (Some(a), Some(b)) = (first, last) {
            self.amps = self.amps[a..=b].to_vec();
            self.offset += a as i64;
        }
    }
}

impl Field2D {
    pub fn zeros(ls: RangeInclusive<i64>, ms: RangeInclusive<i64>) -> Self {
        let nl = (ls.end() - ls.start() + 1).max(0) as usize;
        let nm = (ms.end() - ms.start() + 1).max(0) as usize;
        Field2D {
            offset_l: *ls.start(),
            offset_m: *ms.start(),
            nl,
            nm,
            amps: vec![Complex64::new(0.0, 0.0); nl * nm],
        }
    }

    pub fn from_fn(
        ls: RangeInclusive<i64>,
        ms: RangeInclusive<i64>,
        f: impl Fn(i64, i64) -> Complex64,
    ) -> Self {
        let mut out = Self::zeros(ls.clone(), ms.clone());
        let nm = out.nm;
        for (i, l) in ls.enumerate() {
            for (j, m) in ms.clone().enumerate() {
                out.amps[i * nm + j] = f(l, m);
            }
        }
        out
    }

    pub fn l_sites(&self) -> RangeInclusive<i64> {
        self.offset_l..=self.offset_l + self.nl as i64 - 1
    }

    pub fn m_sites(&self) -> RangeInclusive<i64> {
        self.offset_m..=self.offset_m + self.nm as i64 - 1
    }

    #[inline]
    pub fn index(&self, l: i64, m: i64) -> Option<usize> {
        let i = l - self.offset_l;
        let j = m - self.offset_m;
        (i >= 0 && j >= 0 && (i as usize) < self.nl && (j as usize) < self.nm)
            .then(|| i as usize * self.nm + j as usize)
    }

    pub fn get(&self, l: i64, m: i64) -> Complex64 {
        self.index(l, m)
            .map_or(Complex64::new(0.0, 0.0), |k| self.amps[k])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// Density summed over m, indexed from `offset_l`.
    pub fn projected_density(&self) -> Vec<f64> {
        self.amps
            .chunks(self.nm.max(1))
            .map(|row| row.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    /// Density summed over l, indexed from `offset_m`.
    pub fn projected_density_m(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nm];
        for row in self.amps.chunks(self.nm.max(1)) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.norm_sqr();
            }
        }
        out
    }

    /// Raw moments along l, as in [`Field1D::moments`].
    pub fn moments_l(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, w) in self.projected_density().into_iter().enumerate() {
            let l = (self.offset_l + i as i64) as f64;
            m1 += l * w;
            m2 += l * l * w;
        }
        (m1, m2)
    }

    pub fn moments_m(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (j, w) in self.projected_density_m().into_iter().enumerate() {
            let m = (self.offset_m + j as i64) as f64;
            m1 += m * w;
            m2 += m * m * w;
        }
        (m1, m2)
    }

    /// Extends the window with zeros on each side.
    pub fn pad(&mut self, l_lo: usize, l_hi: usize, m_lo: usize, m_hi: usize) {
        if l_lo + l_hi + m_lo + m_hi == 0 {
            return;
        }
        let nl = self.nl + l_lo + l_hi;
        let nm = self.nm + m_lo + m_hi;
        let mut amps = vec![Complex64::new(0.0, 0.0); nl * nm];
        for i in 0..self.nl {
            let src = &self.amps[i * self.nm..(i + 1) * self.nm];
            let dst = (i + l_lo) * nm + m_lo;
            amps[dst..dst + self.nm].copy_from_slice(src);
        }
        self.amps = amps;
        self.offset_l -= l_lo as i64;
        self.offset_m -= m_lo as i64;
        self.nl = nl;
        self.nm = nm;
    }

    /// Shrinks the window to the bounding box of sites with density above `floor`.
    pub fn trim(&mut self, floor: f64) {
        let (mut il0, mut il1, mut jm0, mut jm1) = (usize::MAX, 0, usize::MAX, 0);
        for i in 0..self.nl {
            for j in 0..self.nm {
                if self.amps[i * self.nm + j].norm_sqr() > floor {
                    il0 = il0.min(i);
                    il1 = il1.max(i);
                    jm0 = jm0.min(j);
                    jm1 = jm1.max(j);
                }
            }
        }
        if il0 == usize::MAX {
            return;
        }
        let nm = jm1 - jm0 + 1;
        let mut amps = Vec::with_capacity((il1 - il0 + 1) * nm);
        for i in il0..=il1 {
            amps.extend_from_slice(&self.amps[i * self.nm + jm0..=i * self.nm + jm1]);
        }
        self.offset_l += il0 as i64;
        self.offset_m += jm0 as i64;
        self.nl = il1 - il0 + 1;
        self.nm = nm;
        self.amps = amps;
    }
}

/// The ground Landau state of the effective-mass problem, `b_l ~ exp(-pi alpha (l - c)^2)`.
///
/// Fails when the window cuts off more than `1e-12` of the norm.
pub fn landau_packet_1d(
    p: &ModelParams,
    center: i64,
    window: RangeInclusive<i64>,
) -> Result<Field1D, FieldError> {
    if p.alpha <= 0.0 {
        return Err(FieldError::NonPositiveFlux(p.alpha));
    }
    if window.is_empty() {
        return Err(FieldError::EmptyWindow);
    }
    let weight = |l: i64| (-2.0 * PI * p.alpha * ((l - center) as f64).powi(2)).exp();
    // full normalization, summed out to where the terms underflow
    let reach = ((750.0 / (2.0 * PI * p.alpha)).sqrt().ceil() as i64).max(1);
    let total: f64 = (center - reach..=center + reach).map(weight).sum();
    let inside: f64 = window.clone().map(weight).sum();
    let tail = ((total - inside) / total).max(0.0);
    if tail >= TAIL_LIMIT {
        let sites = (window.end() - window.start() + 1) as usize;
        return Err(FieldError::WindowTooSmall { sites, tail });
    }
    let mut f = Field1D::from_fn(window, |l| Complex64::new(weight(l).sqrt(), 0.0));
    f.normalize();
    Ok(f)
}

/// Half-width (in sites) beyond which a Gaussian density of RMS width `sigma`
/// is below `1e-17` of its peak.
pub fn gaussian_half_width(sigma: f64) -> i64 {
    (sigma * (2.0 * 17.0 * std::f64::consts::LN_10).sqrt()).ceil() as i64 + 1
}

/// Wide Gaussian envelope with independent uniform site phases, centred at 0.
///
/// The density has RMS width `sigma_x`, i.e. magnitudes `exp(-l^2 / (4 sigma_x^2))`.
pub fn incoherent_packet_1d(
    p: &ModelParams,
    sigma_x: f64,
    realization: u64,
) -> Result<Field1D, FieldError> {
    if !(sigma_x > 0.0) {
        return Err(FieldError::BadWidth(sigma_x));
    }
    let h = gaussian_half_width(sigma_x);
    let mut f = Field1D::from_fn(-h..=h, |l| {
        let mag = (-(l as f64).powi(2) / (4.0 * sigma_x * sigma_x)).exp();
        let phase = phase_at(p.seed, realization, Purpose::Phase1d, site_key_1d(l));
        Complex64::from_polar(mag, phase)
    });
    f.normalize();
    Ok(f)
}

/// Two-dimensional incoherent packet with RMS widths `sigma_x` along l and `sigma_y` along m.
pub fn incoherent_packet_2d(
    p: &ModelParams,
    sigma_x: f64,
    sigma_y: f64,
    realization: u64,
) -> Result<Field2D, FieldError> {
    for s in [sigma_x, sigma_y] {
        if !(s > 0.0) {
            return Err(FieldError::BadWidth(s));
        }
    }
    let hl = gaussian_half_width(sigma_x);
    let hm = gaussian_half_width(sigma_y);
    let mut f = Field2D::from_fn(-hl..=hl, -hm..=hm, |l, m| {
        let mag = (-(l as f64).powi(2) / (4.0 * sigma_x * sigma_x)
            - (m as f64).powi(2) / (4.0 * sigma_y * sigma_y))
            .exp();
        let phase = phase_at(p.seed, realization, Purpose::Phase2d, site_key_2d(l, m));
        Complex64::from_polar(mag, phase)
    });
    f.normalize();
    Ok(f)
}

/// Maps a low-energy state onto its high-energy counterpart, `b_l -> (-1)^l b_l`.
/// The map is an involution.
pub fn staggered_transform(b: &Field1D) -> Field1D {
    let amps = b
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if (b.offset + i as i64).rem_euclid(2) == 1 {
                -a
            } else {
                *a
            }
        })
        .collect();
    Field1D {
        offset: b.offset,
        amps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::symmetric;

    #[test]
    fn landau_packet_width() {
        let p = symmetric(1.0 / 20.0, 0.1);
        let f = landau_packet_1d(&p, 0, -30..=30).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        let (m1, m2) = f.moments();
        assert!(m1.abs() < 1e-14);
        let expected = (1.0 / (4.0 * PI * p.alpha)).sqrt();
        assert!(
            (m2.sqrt() - expected).abs() < 1e-10,
            "{} vs {expected}",
            m2.sqrt()
        );
    }

    #[test]
    fn landau_packet_is_centred() {
        let p = symmetric(0.1, 0.1);
        let f = landau_packet_1d(&p, 5, -20..=30).unwrap();
        let argmax = f
            .amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(f.offset + argmax as i64, 5);
    }

    #[test]
    fn landau_packet_rejects_narrow_window() {
        let p = symmetric(0.1, 0.1);
        assert!(matches!(
            landau_packet_1d(&p, 0, -1..=1),
            Err(FieldError::WindowTooSmall { sites: 3, .. })
        ));
        assert!(landau_packet_1d(&symmetric(-0.1, 0.1), 0, -20..=20).is_err());
    }

    #[test]
    fn incoherent_packet_second_moment() {
        let p = symmetric(0.1, 3.0).with_seed(1);
        let f = incoherent_packet_1d(&p, 20.0, 0).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        let (_, m2) = f.moments();
        assert!((m2 / 400.0 - 1.0).abs() < 0.05, "{m2}");
    }

    #[test]
    fn incoherent_packet_determinism() {
        let p = symmetric(0.1, 3.0).with_seed(42);
        let a = incoherent_packet_1d(&p, 20.0, 0).unwrap();
        let b = incoherent_packet_1d(&p, 20.0, 0).unwrap();
        assert_eq!(a, b);
        let c = incoherent_packet_1d(&p, 20.0, 1).unwrap();
        assert_ne!(a, c);
        for (x, y) in a.amps.iter().zip(&c.amps) {
            assert!((x.norm() - y.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn incoherent_packet_2d_widths() {
        let p = symmetric(0.1, 0.3).with_seed(3);
        let f = incoherent_packet_2d(&p, 6.0, 3.0, 0).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        let (_, ml) = f.moments_l();
        let (_, mm) = f.moments_m();
        assert!((ml / 36.0 - 1.0).abs() < 1e-6);
        assert!((mm / 9.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn staggered_transform_signs() {
        let d0 = Field1D::delta(0, -3..=3);
        assert_eq!(staggered_transform(&d0), d0);
        let d1 = Field1D::delta(1, -3..=3);
        assert_eq!(staggered_transform(&d1).get(1), Complex64::new(-1.0, 0.0));
        let dm1 = Field1D::delta(-1, -3..=3);
        assert_eq!(staggered_transform(&dm1).get(-1), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn pad_and_trim() {
        let mut f = Field1D::delta(2, 0..=4);
        f.pad(3, 1);
        assert_eq!(f.sites(), -3..=5);
        assert_eq!(f.get(2), Complex64::new(1.0, 0.0));
        f.trim(0.0);
        assert_eq!(f.sites(), 2..=2);

        let mut g = Field2D::from_fn(0..=1, 0..=1, |l, m| Complex64::new((l * 2 + m) as f64, 0.0));
        g.pad(1, 2, 3, 0);
        assert_eq!(g.l_sites(), -1..=3);
        assert_eq!(g.m_sites(), -3..=1);
        assert_eq!(g.get(1, 1), Complex64::new(3.0, 0.0));
        g.trim(0.0);
        assert_eq!(g.l_sites(), 0..=1);
        assert_eq!(g.m_sites(), 0..=1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn staggered_is_involution(re in proptest::collection::vec(-1.0f64..1.0, 1..40), off in -50i64..50) {
                let f = Field1D { offset: off, amps: re.iter().map(|&x| Complex64::new(x, 0.5 * x)).collect() };
                prop_assert_eq!(staggered_transform(&staggered_transform(&f)), f);
            }

            #[test]
            fn packets_have_unit_norm(s in 1.0f64..30.0, r in 0u64..1000) {
                let p = symmetric(0.1, 0.3).with_seed(r);
                let f = incoherent_packet_1d(&p, s, r).unwrap();
                prop_assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }
}
