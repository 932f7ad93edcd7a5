//! Ensemble statistics against closed forms and their own invariances.

use cyclobloch::ensemble::{
    compare_1d_2d, fit_diffusive, fit_exponential_tail, local_exponent, run_ensemble, EnsembleSpec,
    Model,
};
use cyclobloch::params::symmetric;

fn log_times(t_max: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| t_max * 10f64.powf(-2.0 * (n - k) as f64 / (n - 1) as f64))
        .collect()
}

#[test]
fn free_chain_spreads_ballistically() {
    // without the y hopping the chain is free: <v^2> = Jx^2 / 2 over the random phases
    let mut p = symmetric(0.1, 0.0);
    p.jy = 0.0;
    let mut spec = EnsembleSpec::new(p, Model::OneD, 10.0, log_times(60.0, 12));
    spec.n_phase = 64;
    let r = run_ensemble(&spec).unwrap();
    for (t, s) in r.series.times.iter().zip(&r.series.sigma) {
        let want = (100.0 + t * t / 2.0).sqrt();
        assert!((s / want - 1.0).abs() < 0.03, "t {t}: {s} vs {want}");
    }
}

#[test]
fn averages_do_not_depend_on_thread_count() {
    let p = symmetric(0.1, 0.3).with_eps(0.5).with_seed(3);
    let mut spec = EnsembleSpec::new(p, Model::OneD, 4.0, vec![5.0, 10.0]);
    spec.n_phase = 3;
    spec.n_disorder = 3;
    spec.snapshots = vec![10.0];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&spec).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a, b);
    assert_eq!(a.density.std_errors[0].len(), a.density.values[0].len());
}

#[test]
fn seeds_change_the_disorder() {
    let times = vec![20.0];
    let spec = |seed| {
        let mut s = EnsembleSpec::new(
            symmetric(0.1, 3.0).with_eps(1.0).with_seed(seed),
            Model::OneD,
            2.0,
            times.clone(),
        );
        s.n_phase = 1;
        s.n_disorder = 2;
        s
    };
    let a = run_ensemble(&spec(1)).unwrap();
    let b = run_ensemble(&spec(2)).unwrap();
    assert_ne!(a.series.sigma, b.series.sigma);
}

#[test]
fn clean_models_agree_in_one_and_two_dimensions() {
    let p = symmetric(0.1, 0.3);
    let mut spec = EnsembleSpec::new(p, Model::OneD, 3.0, vec![10.0, 20.0, 40.0]);
    spec.n_phase = 4;
    let (one, two) = compare_1d_2d(&spec, 2.0).unwrap();
    for (a, b) in one.series.sigma.iter().zip(&two.series.sigma) {
        assert!((a / b - 1.0).abs() < 0.3, "1D {a} vs 2D {b}");
    }
}

#[test]
fn ballistic_exponent_approaches_two() {
    let mut p = symmetric(0.1, 0.0);
    p.jy = 0.0;
    let mut spec = EnsembleSpec::new(p, Model::OneD, 2.0, log_times(200.0, 30));
    spec.n_phase = 8;
    let r = run_ensemble(&spec).unwrap();
    let nu = local_exponent(&r.series.times, &r.series.second_moment(), 0.25).unwrap();
    let late = nu.nu.last().unwrap();
    assert!((late - 2.0).abs() < 0.05, "nu {late}");
}

#[test]
fn moderate_disorder_spreads_diffusively() {
    let p = symmetric(0.1, 0.3).with_eps(0.5).with_seed(11);
    let mut spec = EnsembleSpec::new(p, Model::OneD, 5.0, vec![100.0]);
    spec.n_phase = 1;
    spec.n_disorder = 16;
    spec.snapshots = vec![100.0];
    let r = run_ensemble(&spec).unwrap();
    let (ls, d) = r.density.snapshot(0);
    let diff = fit_diffusive(&ls, d, 100.0).unwrap();
    let exp = fit_exponential_tail(&ls, d).unwrap();
    assert!(
        diff.r_squared > exp.r_squared,
        "diffusive {} vs exponential {}",
        diff.r_squared,
        exp.r_squared
    );
}
