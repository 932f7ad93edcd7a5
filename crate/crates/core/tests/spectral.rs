//! Reduced eigenproblem against an independent cyclic Jacobi diagonalization,
//! plus sum rules, Hellmann-Feynman currents and the ladder symmetry.

use std::f64::consts::PI;

use cyclobloch::params::symmetric;
use cyclobloch::spectral::{
    band_scan, build_hamiltonian_1d, current_trace, localization_length_y, mathieu_state,
    participation_length, solve_slice, sum_rule, uniform_kappa_grid, Extremum,
};
use cyclobloch::ModelParams;
use proptest::prelude::*;

/// Dense reduced Hamiltonian written out from the model, not from the library.
fn dense(p: &ModelParams, kappa: f64, lo: i64, hi: i64) -> Vec<Vec<f64>> {
    let n = (hi - lo + 1) as usize;
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        let m = lo + i as i64;
        h[i][i] = p.field * m as f64 - p.jx * (2.0 * PI * p.alpha * m as f64 - kappa).cos();
        if i + 1 < n {
            h[i][i + 1] = -p.jy / 2.0;
            h[i + 1][i] = -p.jy / 2.0;
        }
    }
    h
}

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes; ascending eigenvalues.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn eigenvalues_match_jacobi_on_31_sites() {
    let p = symmetric(0.1, 0.3);
    for kappa in [0.0, 0.1, 2.0, 5.5] {
        let slice = solve_slice(&p, kappa, -15..=15).unwrap();
        let want = jacobi_eigenvalues(dense(&p, kappa, -15, 15));
        let err = slice
            .energies
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "kappa {kappa}: {err:e}");
    }
}

#[test]
fn matrix_entries_match_the_model() {
    let p = symmetric(0.1, 0.3);
    let h = build_hamiltonian_1d(&p, 0.4, -1..=1, None)
        .unwrap()
        .to_dense();
    let want = dense(&p, 0.4, -1, 1);
    for i in 0..3 {
        for j in 0..3 {
            assert!((h[(i, j)] - want[i][j]).abs() < 1e-15);
        }
    }
}

#[test]
fn eigenpairs_satisfy_the_dense_equation() {
    let p = symmetric(1.0 / 10.1417, 0.3);
    let slice = solve_slice(&p, 1.3, -32..=31).unwrap();
    let h = dense(&p, 1.3, -32, 31);
    for (e, v) in slice.energies.iter().zip(&slice.vectors) {
        let r: f64 = h
            .iter()
            .zip(v)
            .map(|(row, vi)| (row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() - e * vi).powi(2))
            .sum();
        assert!(r.sqrt() < 1e-10);
    }
}

#[test]
fn currents_are_energy_slopes() {
    // dE/dkappa = <dH/dkappa> = -Jx sum |c|^2 sin(2 pi alpha m - kappa) = -v
    let p = symmetric(0.1, 0.3);
    let h = 1e-5;
    let (k0, window) = (0.7, -40..=40);
    let mid = solve_slice(&p, k0, window.clone()).unwrap();
    let up = solve_slice(&p, k0 + h, window.clone()).unwrap();
    let down = solve_slice(&p, k0 - h, window).unwrap();
    for nu in mid.interior_states(1e-10) {
        let gaps = [
            nu.checked_sub(1)
                .map(|j| mid.energies[nu] - mid.energies[j]),
            mid.energies.get(nu + 1).map(|e| e - mid.energies[nu]),
        ];
        if gaps.iter().flatten().any(|g| *g < 1e-3) {
            continue;
        }
        let slope = (up.energies[nu] - down.energies[nu]) / (2.0 * h);
        assert!(
            (slope + mid.currents[nu]).abs() < 1e-6,
            "state {nu}: {slope} vs {}",
            mid.currents[nu]
        );
    }
}

#[test]
fn full_period_windows_have_zero_current_sum() {
    let p = symmetric(0.1, 0.3);
    for k in 1..=4 {
        let slice = solve_slice(&p, 0.37, 0..=10 * k - 1).unwrap();
        assert!(sum_rule(&slice).abs() < 1e-10);
    }
    let odd = solve_slice(&p, 0.1, -16..=16).unwrap();
    let trace: f64 = (-16..=16)
        .map(|m| (2.0 * PI * m as f64 / 10.0 - 0.1).sin())
        .sum();
    assert!((sum_rule(&odd) - trace).abs() < 1e-12);
    assert!((current_trace(&p, 0.1, -16..=16) - trace).abs() < 1e-12);
}

#[test]
fn ladder_shift_by_one_magnetic_period() {
    let p = symmetric(0.1, 0.3);
    let a = solve_slice(&p, 0.9, -60..=60).unwrap();
    let b = solve_slice(&p, 0.9, -50..=70).unwrap();
    let shift = p.field * 10.0;
    let interior_a: Vec<f64> = a
        .interior_states(1e-10)
        .into_iter()
        .map(|nu| a.energies[nu])
        .collect();
    let interior_b: Vec<f64> = b
        .interior_states(1e-10)
        .into_iter()
        .map(|nu| b.energies[nu])
        .collect();
    assert!(interior_a.len() > 20);
    let mut matched = 0;
    for e in &interior_a {
        if let Some(f) = interior_b.iter().find(|f| (*f - e - shift).abs() < 1e-8) {
            assert!((f - e - shift).abs() < 1e-8);
            matched += 1;
        }
    }
    assert!(
        matched >= interior_a.len() * 3 / 4,
        "{matched} of {}",
        interior_a.len()
    );
}

#[test]
fn scan_of_one_point_equals_the_slice() {
    let p = symmetric(0.1, 1.0);
    let scan = band_scan(&p, &[0.2], -20..=20).unwrap();
    assert_eq!(scan.slices[0], solve_slice(&p, 0.2, -20..=20).unwrap());
}

#[test]
fn mathieu_ground_state_matches_exact_state() {
    let p = symmetric(0.1, 0.3);
    // quasimomenta away from the avoided crossings
    for j in [1, 4, 8, 11] {
        let kappa = 2.0 * PI * j as f64 / 32.0;
        let slice = solve_slice(&p, kappa, -40..=40).unwrap();
        let ms = mathieu_state(&p, kappa, Extremum::Minimum(0)).unwrap();
        let best = slice
            .vectors
            .iter()
            .map(|v| {
                let o: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * ms.at(-40 + i as i64))
                    .sum();
                o * o
            })
            .fold(0.0, f64::max);
        // the expansion about the cosine extremum ignores the tilt-shifted minimum
        assert!(best > 0.97, "kappa {kappa}: best overlap {best}");
    }
}

#[test]
fn interior_state_extent_follows_the_estimate() {
    for alpha in [0.1, 0.05] {
        for field in [0.3, 3.0] {
            let p = symmetric(alpha, field);
            let est = localization_length_y(&p);
            let slice = solve_slice(&p, 0.3, -80..=80).unwrap();
            let interior = slice.interior_states(1e-10);
            let lengths: Vec<f64> = interior
                .iter()
                .map(|&nu| participation_length(&slice.vectors[nu]))
                .collect();
            let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
            let lo = est.min.unwrap_or(est.max) / 3.0;
            let hi = est.max * 3.0;
            assert!(
                mean > lo && mean < hi,
                "alpha {alpha} F {field}: mean extent {mean} vs [{lo}, {hi}]"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slices_are_orthonormal(alpha in 0.02f64..0.5, field in 0.05f64..3.0, kappa in 0.0f64..6.28) {
        let p = symmetric(alpha, field);
        let s = solve_slice(&p, kappa, -20..=20).unwrap();
        for i in 0..s.len() {
            for j in i..s.len() {
                let d: f64 = s.vectors[i].iter().zip(&s.vectors[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-10);
            }
        }
        prop_assert!(s.energies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trace_identity_holds(alpha in 0.02f64..0.5, kappa in 0.0f64..6.28, lo in -30i64..0, len in 3i64..40) {
        let p = symmetric(alpha, 0.7);
        let s = solve_slice(&p, kappa, lo..=lo + len).unwrap();
        prop_assert!((sum_rule(&s) - current_trace(&p, kappa, lo..=lo + len)).abs() < 1e-10);
    }
}

#[test]
fn grid_covers_the_circle() {
    let g = uniform_kappa_grid(8);
    assert_eq!(g.len(), 8);
    assert!(g.windows(2).all(|w| w[1] > w[0]) && *g.last().unwrap() < 2.0 * PI);
}
