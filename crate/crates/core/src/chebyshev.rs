//! Chebyshev expansion of the short-time propagator `exp(-i H dt)`.
//!
//! The expansion converges to machine precision once the number of terms
//! exceeds the scaled time `r * dt`, where `r` is the half-width of the
//! spectral interval, so the error is controlled independently of the step.

use num_complex::Complex64;

/// A Hermitian operator that can be applied to a vector and bounded spectrally.
pub trait HermitianOperator {
    fn dim(&self) -> usize;
    /// `y = H x`.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
    /// An interval `[lo, hi]` containing the spectrum.
    fn spectral_bounds(&self) -> (f64, f64);
}

/// Bessel functions `J_0(x) .. J_n(x)` for `x >= 0` by Miller's backward recurrence.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    assert!(x >= 0.0);
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    // start well above both n and x so the recurrence has settled
    let start = {
        let s = n.max(x.ceil() as usize) + 30 + (10.0 * x.cbrt()).ceil() as usize;
        s + (s & 1)
    };
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    let mut vals = vec![0.0; start + 1];
    vals[start] = j;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        vals[k - 1] = j;
        if j.abs() > 1e250 {
            // rescale to stay finite
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            j *= 1e-250;
            jp1 *= 1e-250;
        }
    }
    // J_0 + 2 sum_{k>=1} J_{2k} = 1
    for (k, v) in vals.iter().enumerate() {
        if k == 0 {
            norm += v;
        } else if k % 2 == 0 {
            norm += 2.0 * v;
        }
    }
    for k in 0..=n {
        out[k] = vals[k] / norm;
    }
    out
}

/// Expansion coefficients `J_k(z)` truncated where they drop below `tol`.
fn coefficients(z: f64, tol: f64) -> Vec<f64> {
    let guess = (z.abs() * 1.2) as usize + 40;
    let mut js = bessel_j_sequence(z.abs(), guess);
    let mut keep = js.len();
    while keep > 1 && js[keep - 1].abs() < tol && keep > z.abs() as usize + 1 {
        keep -= 1;
    }
    js.truncate(keep + 1);
    js
}

/// Scratch buffers reused across propagation steps.
#[derive(Debug, Default)]
pub struct Workspace {
    prev: Vec<Complex64>,
    cur: Vec<Complex64>,
    next: Vec<Complex64>,
    acc: Vec<Complex64>,
}

impl Workspace {
    fn ensure(&mut self, n: usize) {
        for v in [&mut self.prev, &mut self.cur, &mut self.next, &mut self.acc] {
            v.clear();
            v.resize(n, Complex64::new(0.0, 0.0));
        }
    }
}

/// Replaces `psi` by `exp(-i H dt) psi`. Returns the number of operator applications.
pub fn propagate<H: HermitianOperator>(
    h: &H,
    psi: &mut [Complex64],
    dt: f64,
    tol: f64,
    ws: &mut Workspace,
) -> usize {
    let n = h.dim();
    assert_eq!(psi.len(), n);
    if dt == 0.0 || n == 0 {
        return 0;
    }
    let (lo, hi) = h.spectral_bounds();
    let center = 0.5 * (hi + lo);
    let radius = (0.5 * (hi - lo)).max(1e-12) * 1.0001;
    let z = radius * dt;
    let js = coefficients(z, tol);
    // exp(-i x z) = sum_k (2 - d_k0) (-i)^k J_k(z) T_k(x), and J_k(-z) = (-1)^k J_k(z)
    let sign = if z < 0.0 { -1.0 } else { 1.0 };
    let coef = |k: usize| -> Complex64 {
        let mag = if k == 0 { js[0] } else { 2.0 * js[k] };
        let s = if sign < 0.0 && k % 2 == 1 { -mag } else { mag };
        match k % 4 {
            0 => Complex64::new(s, 0.0),
            1 => Complex64::new(0.0, -s),
            2 => Complex64::new(-s, 0.0),
            _ => Complex64::new(0.0, s),
        }
    };

    ws.ensure(n);
    let inv_r = 1.0 / radius;
    ws.prev.copy_from_slice(psi);
    let c0 = coef(0);
    for (a, p) in ws.acc.iter_mut().zip(&ws.prev) {
        *a = c0 * p;
    }
    let mut applications = 0;
    if js.len() > 1 {
        h.apply(&ws.prev, &mut ws.cur);
        applications += 1;
        for (c, p) in ws.cur.iter_mut().zip(&ws.prev) {
            *c = (*c - center * p) * inv_r;
        }
        let c1 = coef(1);
        for (a, c) in ws.acc.iter_mut().zip(&ws.cur) {
            *a += c1 * c;
        }
    }
    for k in 2..js.len() {
        h.apply(&ws.cur, &mut ws.next);
        applications += 1;
        let ck = coef(k);
        for i in 0..n {
            let t = 2.0 * (ws.next[i] - center * ws.cur[i]) * inv_r - ws.prev[i];
            ws.next[i] = t;
            ws.acc[i] += ck * t;
        }
        std::mem::swap(&mut ws.prev, &mut ws.cur);
        std::mem::swap(&mut ws.cur, &mut ws.next);
    }
    let phase = Complex64::from_polar(1.0, -center * dt);
    for (p, a) in psi.iter_mut().zip(&ws.acc) {
        *p = phase * a;
    }
    applications
}
