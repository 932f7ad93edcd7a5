//! One runner per experiment kind. Runners compute tables and leave writing to the caller.

use std::f64::consts::TAU;

use cyclobloch::classical::{island_exists, seed_grid, strobe_map, trapped_fraction_sweep};
use cyclobloch::ensemble::{
    bootstrap_greater, compare_1d_2d, density_modes, fit_diffusive, fit_exponential_tail,
    local_exponent, run_ensemble, standard_error, EnsembleResult, EnsembleSpec, Model, TailFit,
    EXPONENT_HALF_WINDOW, SIGNIFICANCE_Z,
};
use cyclobloch::field::{incoherent_packet_1d, incoherent_packet_2d, landau_packet_1d};
use cyclobloch::propagate::{evolve_1d, evolve_2d_staticgauge, evolve_2d_timegauge};
use cyclobloch::rng::disorder;
use cyclobloch::spectral::{band_scan, current_trace, mathieu_state, sum_rule, Extremum};
use cyclobloch::transport::{
    build_transporting_state, find_families, track_family, verify_drift, DiabaticFamily, Taper,
    CONTINUITY,
};
use cyclobloch::{Field1D, Field2D, ModelParams, ObservableSeries, PropagationConfig, Sampling};
use thiserror::Error;

use crate::config::{
    log_times, ExperimentConfig, FamilyChoice, GaugeChoice, Initial1d, Kind, ModelChoice,
};
use crate::table::{Cell, Table};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Field(#[from] cyclobloch::FieldError),
    #[error(transparent)]
    Propagation(#[from] cyclobloch::PropagationError),
    #[error(transparent)]
    Spectral(#[from] cyclobloch::spectral::SpectralError),
    #[error(transparent)]
    Transport(#[from] cyclobloch::transport::TransportError),
    #[error(transparent)]
    Ensemble(#[from] cyclobloch::ensemble::EnsembleError),
    #[error("{0}")]
    Other(String),
}

/// Runs a resolved configuration.
pub fn run(cfg: &ExperimentConfig, p: &ModelParams) -> Result<Vec<Table>, RunError> {
    match cfg.kind {
        Kind::Evolve1d => evolve1d(cfg, p),
        Kind::Evolve2d => evolve2d(cfg, p),
        Kind::Spectrum => spectrum(cfg, p),
        Kind::Transport => transport(cfg, p),
        Kind::ClassicalMap => classical_map(cfg, p),
        Kind::Ensemble => ensemble(cfg, p),
        Kind::Compare => compare(cfg, p),
    }
}

fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

fn series_rows(table: &mut Table, prefix: &[Cell], s: &ObservableSeries) {
    for i in 0..s.len() {
        let mut row = prefix.to_vec();
        row.extend([
            s.times[i].into(),
            s.sigma[i].into(),
            s.mean_x[i].into(),
            s.centered_width[i].into(),
            s.norm[i].into(),
            s.edge_norm[i].into(),
        ]);
        table.push(row);
    }
}

const SERIES_COLUMNS: [&str; 6] = ["t", "sigma", "mean_x", "width", "norm", "edge_norm"];

fn with_prefix<'a>(prefix: &[&'a str], rest: &[&'a str]) -> Vec<&'a str> {
    prefix.iter().chain(rest).copied().collect()
}

fn evolve1d(cfg: &ExperimentConfig, p: &ModelParams) -> Result<Vec<Table>, RunError> {
    let o = cfg.evolve1d.as_ref().expect("resolved");
    let mut series = Table::new("series", &with_prefix(&["F"], &SERIES_COLUMNS));
    let mut density = Table::new("density", &["F", "t", "l", "P"]);
    for &f in o.fields.as_ref().expect("resolved") {
        let p = p.with_field(f);
        let tb = if f == 0.0 { TAU } else { TAU / f.abs() };
        let t_end = o.bloch_periods.expect("resolved") * tb;
        let b = match o.initial.expect("resolved") {
            Initial1d::Landau => landau_packet_1d(&p, 0, -40..=40)?,
            Initial1d::Delta => Field1D::delta(0, 0..=0),
            Initial1d::Incoherent => incoherent_packet_1d(&p, o.sigma.expect("resolved"), 0)?,
        };
        let cfg = PropagationConfig::until(t_end).with_sampling(Sampling::Times(uniform_times(
            t_end,
            o.samples.expect("resolved"),
        )));
        let dis = disorder(&p, 0);
        let mut obs = |t: f64, b: &Field1D| {
            for (l, d) in b.sites().zip(b.density()) {
                density.push(vec![f.into(), t.into(), l.into(), d.into()]);
            }
        };
        let ev = evolve_1d(b, &p, o.kappa.expect("resolved"), &dis, &cfg, &mut obs)?;
        series_rows(&mut series, &[f.into()], &ev.series);
    }
    Ok(vec![series, density])
}

fn evolve2d(cfg: &ExperimentConfig, p: &ModelParams) -> Result<Vec<Table>, RunError> {
    let o = cfg.evolve2d.as_ref().expect("resolved");
    let psi = incoherent_packet_2d(
        p,
        o.sigma_x.expect("resolved"),
        o.sigma_y.expect("resolved"),
        o.realization.expect("resolved"),
    )?;
    let t_end = o.t_end.expect("resolved");
    let pc = PropagationConfig::until(t_end).with_sampling(Sampling::Times(uniform_times(
        t_end,
        o.samples.expect("resolved"),
    )));
    let dis = disorder(p, 0);
    let mut projected = Table::new("projected", &["t", "l", "P"]);
    let mut obs = |t: f64, f: &Field2D| {
        for (l, d) in f.l_sites().zip(f.projected_density()) {
            projected.push(vec![t.into(), l.into(), d.into()]);
        }
    };
    let ev = match o.gauge.expect("resolved") {
        GaugeChoice::Static => evolve_2d_staticgauge(psi, p, &dis, &pc, &mut obs)?,
        GaugeChoice::Time => evolve_2d_timegauge(psi, p, &dis, &pc, &mut obs)?,
    };
    let mut series = Table::new(
        "series",
        &with_prefix(&[], &[&SERIES_COLUMNS[..], &["width_y"]].concat()),
    );
    let s = &ev.series;
    for i in 0..s.len() {
        series.push(vec![
            s.times[i].into(),
            s.sigma[i].into(),
            s.mean_x[i].into(),
            s.centered_width[i].into(),
            s.norm[i].into(),
            s.edge_norm[i].into(),
            s.width_y.get(i).copied().unwrap_or(f64::NAN).into(),
        ]);
    }
    let density = density_table("density", &[], &[], t_end, &ev.field);
    Ok(vec![series, projected, density])
}

fn density_table(name: &str, prefix_cols: &[&str], prefix: &[Cell], t: f64, f: &Field2D) -> Table {
    let mut table = Table::new(name, &with_prefix(prefix_cols, &["t", "l", "m", "P"]));
    for (i, l) in f.l_sites().enumerate() {
        for (j, m) in f.m_sites().enumerate() {
            let mut row = prefix.to_vec();
            row.extend([
                t.into(),
                l.into(),
                m.into(),
                f.amps[i * f.nm + j].norm_sqr().into(),
            ]);
            table.push(row);
        }
    }
    table
}

fn window_of(w: [i64; 2]) -> std::ops::RangeInclusive<i64> {
    w[0]..=w[1]
}

fn spectrum(cfg: &ExperimentConfig, p: &ModelParams) -> Result<Vec<Table>, RunError> {
    let o = cfg.spectrum.as_ref().expect("resolved");
    let kappas = o.kappas.as_ref().expect("resolved");
    let window = window_of(o.window.expect("resolved"));
    let scan = band_scan(p, kappas, window.clone())?;
    let mut spec = Table::new("spectrum", &["kappa", "nu", "E", "v", "interior"]);
    let mut sums = Table::new("sum_rule", &["kappa", "sum", "trace"]);
    for s in &scan.slices {
        let interior = s.interior_states(1e-10);
        for nu in 0..s.len() {
            spec.push(vec![
                s.kappa.into(),
                nu.into(),
                s.energies[nu].into(),
                s.currents[nu].into(),
                interior.contains(&nu).into(),
            ]);
        }
        sums.push(vec![
            s.kappa.into(),
            sum_rule(s).into(),
            current_trace(p, s.kappa, window.clone()).into(),
        ]);
    }
    let mut tables = vec![spec, sums];
    if o.mathieu.expect("resolved") {
        let mut states = Table::new("mathieu", &["kappa", "m", "exact", "approximate"]);
        let mut overlaps = Table::new(
            "mathieu_overlap",
            &["kappa", "nu", "overlap", "E_exact", "E_approximate"],
        );
        for s in &scan.slices {
            let ms = mathieu_state(p, s.kappa, Extremum::Minimum(0))?;
            let (nu, o) = s
                .vectors
                .iter()
                .enumerate()
                .map(|(nu, v)| {
                    (
                        nu,
                        window
                            .clone()
                            .zip(v)
                            .map(|(m, c)| c * ms.at(m))
                            .sum::<f64>(),
                    )
                })
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("non-empty slice");
            overlaps.push(vec![
                s.kappa.into(),
                nu.into(),
                (o * o).into(),
                s.energies[nu].into(),
                ms.energy.into(),
            ]);
            for (m, c) in window.clone().zip(&s.vectors[nu]) {
                states.push(vec![
                    s.kappa.into(),
                    m.into(),
                    c.abs().into(),
                    ms.at(m).abs().into(),
                ]);
            }
        }
        tables.extend([states, overlaps]);
    }
    Ok(tables)
}

fn choose_family(
    choice: FamilyChoice,
    scan: &cyclobloch::spectral::BandScan,
) -> Result<DiabaticFamily, RunError> {
    match choice {
        FamilyChoice::Minimum => Ok(track_family(scan, Extremum::Minimum(0))?),
        FamilyChoice::Maximum => Ok(track_family(scan, Extremum::Maximum(0))?),
        FamilyChoice::SteepestNegative | FamilyChoice::SteepestPositive => {
            let sign = if choice == FamilyChoice::SteepestNegative {
                -1.0
            } else {
                1.0
            };
            find_families(scan, 1e-10)?
                .into_iter()
                .filter(|f| {
                    f.slope * sign > 0.0
                        && f.max_line_deviation() < 0.05
                        && f.min_overlap() > CONTINUITY
                })
                .max_by(|a, b| (a.slope * sign).total_cmp(&(b.slope * sign)))
                .ok_or_else(|| {
                    RunError::Other(
                        "no straight continuous family with the requested slope sign".into(),
                    )
                })
        }
    }
}

fn transport(cfg: &ExperimentConfig, p: &ModelParams) -> Result<Vec<Table>, RunError> {
    let o = cfg.transport.as_ref().expect("resolved");
    let grid = cyclobloch::spectral::uniform_kappa_grid(o.kappa_points.expect("resolved"));
    let scan = band_scan(p, &grid, window_of(o.window.expect("resolved")))?;
    let fam = choose_family(o.family.expect("resolved"), &scan)?;
    let beta = o.taper_beta.expect("resolved");
    let taper = if beta == 0.0 {
        Taper::Uniform
    } else {
        Taper::Smooth { beta }
    };
    let state = build_transporting_state(&fam, taper);
    let duration = o.bloch_periods.expect("resolved") * TAU / p.field.abs();
    let report = verify_drift(&state, p, duration)?;

    let mut family = Table::new("family", &["kappa", "E", "overlap", "mixed"]);
    for i in 0..fam.kappas.len() {
        family.push(vec![
            fam.kappas[i].into(),
            fam.energies[i].into(),
            fam.overlaps[i].into(),
            fam.mixed[i].into(),
        ]);
    }
    let mut track = Table::new("track", &["t", "mean_l"]);
    for (t, l) in report.times.iter().zip(&report.mean_l) {
        track.push(vec![(*t).into(), (*l).into()]);
    }
    let mut density = density_table("density", &[], &[], 0.0, &state.field);
    density
        .rows
        .extend(density_table("density", &[], &[], duration, &report.final_state).rows);
    let mut drift = Table::new(
        "drift",
        &[
            "slope",
            "v_star",
            "v_measured",
            "displacement",
            "shape_fidelity",
            "best_shift",
            "backscatter",
            "width_l",
            "width_m",
            "min_overlap",
            "line_deviation",
        ],
    );
    drift.push(vec![
        fam.slope.into(),
        p.derived().drift_velocity.unwrap_or(f64::NAN).into(),
        report.v_measured.into(),
        report.displacement.into(),
        report.shape_fidelity.into(),
        report.best_shift.into(),
        report.backscatter_norm.into(),
        state.width_l().into(),
        state.width_m().into(),
        fam.min_overlap().into(),
        fam.max_line_deviation().into(),
    ]);
    Ok(vec![family, track, density, drift])
}

fn classical_map(cfg: &ExperimentConfig, p: &ModelParams) -> Result<Vec<Table>, RunError> {
    let o = cfg.classical_map.as_ref().expect("resolved");
    let seeds = seed_grid(o.grid.expect("resolved"));
    let periods = o.periods.expect("resolved");
    let fallback = o.period_fallback.expect("resolved");
    let mut tables = Vec::new();
    let mut islands = Table::new("island", &["F", "trapped_fraction", "drift_per_period"]);
    for (k, &f) in o.fields.as_ref().expect("resolved").iter().enumerate() {
        let pf = p.with_field(f);
        let mut section = Table::new(format!("section_{k}"), &["F", "seed", "period", "x", "p"]);
        for pt in strobe_map(&seeds, &pf, periods, fallback) {
            section.push(vec![
                f.into(),
                pt.seed.into(),
                pt.period.into(),
                pt.x.into(),
                pt.p.into(),
            ]);
        }
        tables.push(section);
        let report = island_exists(&pf, &seeds, periods, fallback);
        islands.push(vec![
            f.into(),
            report.measure.into(),
            report.mean_drift_per_period.unwrap_or(f64::NAN).into(),
        ]);
    }
    tables.push(islands);
    if let Some(fields) = &o.sweep {
        let mut sweep = Table::new("sweep", &["F", "trapped_fraction"]);
        for (f, frac) in
            trapped_fraction_sweep(p, fields, o.grid.expect("resolved"), periods, fallback)
        {
            sweep.push(vec![f.into(), frac.into()]);
        }
        tables.push(sweep);
    }
    Ok(tables)
}

fn fit_rows(table: &mut Table, prefix: &[Cell], t: f64, kind: &str, fit: &TailFit) {
    for s in &fit.sides {
        let mut row = prefix.to_vec();
        row.extend([
            t.into(),
            kind.into(),
            i64::from(s.side).into(),
            s.parameter.into(),
            s.fit.r_squared.into(),
            s.points.into(),
            s.decades.into(),
            s.slope_ratio.into(),
            fit.poor.into(),
        ]);
        table.push(row);
    }
}

const FIT_COLUMNS: [&str; 9] = [
    "t",
    "fit",
    "side",
    "parameter",
    "r_squared",
    "points",
    "decades",
    "slope_ratio",
    "poor",
];

/// Series, densities and tail fits of one ensemble result, with a common row prefix.
fn ensemble_rows(
    r: &EnsembleResult,
    prefix: &[Cell],
    series: &mut Table,
    density: &mut Table,
    fits: &mut Table,
) {
    let s2 = r.series.second_moment();
    let nu = local_exponent(&r.series.times, &s2, EXPONENT_HALF_WINDOW).ok();
    for i in 0..r.series.len() {
        let t = r.series.times[i];
        let v = nu
            .as_ref()
            .and_then(|n| n.times.iter().position(|&x| x == t).map(|k| n.nu[k]))
            .unwrap_or(f64::NAN);
        let mut row = prefix.to_vec();
        row.extend([
            t.into(),
            r.series.sigma[i].into(),
            r.series.mean_x[i].into(),
            v.into(),
        ]);
        series.push(row);
    }
    let d = &r.density;
    for k in 0..d.times.len() {
        let t = d.times[k];
        let (ls, vals) = d.snapshot(k);
        for ((l, p), se) in ls.iter().zip(vals).zip(&d.std_errors[k]) {
            let mut row = prefix.to_vec();
            row.extend([t.into(), (*l).into(), (*p).into(), (*se).into()]);
            density.push(row);
        }
        if t > 0.0 {
            let (ls, vals) = d.significant(k, SIGNIFICANCE_Z);
            if let Ok(f) = fit_exponential_tail(&ls, &vals) {
                fit_rows(fits, prefix, t, "exponential", &f);
            }
            if let Ok(f) = fit_diffusive(&ls, &vals, t) {
                fit_rows(fits, prefix, t, "diffusive", &f);
            }
        }
    }
}

fn ensemble(cfg: &ExperimentConfig, p: &ModelParams) -> Result<Vec<Table>, RunError> {
    let o = cfg.ensemble.as_ref().expect("resolved");
    let times = log_times(o.t_max.expect("resolved"), o.n_times.expect("resolved"));
    let model = match o.model.expect("resolved") {
        ModelChoice::OneD => Model::OneD,
        ModelChoice::TwoD => Model::TwoD {
            sigma_y: o.sigma_y.expect("resolved"),
        },
    };
    let mut series = Table::new("series", &["eps", "t", "sigma", "mean_x", "nu"]);
    let mut density = Table::new("density", &["eps", "t", "l", "P", "std_error"]);
    let mut fits = Table::new("fits", &with_prefix(&["eps"], &FIT_COLUMNS));
    for &eps in o.eps_values.as_ref().expect("resolved") {
        let mut spec = EnsembleSpec::new(
            p.with_eps(eps),
            model,
            o.sigma_x.expect("resolved"),
            times.clone(),
        );
        spec.n_phase = o.n_phase.expect("resolved");
        spec.n_disorder = if eps > 0.0 {
            o.n_disorder.expect("resolved")
        } else {
            1
        };
        spec.snapshots = o.snapshots.clone().expect("resolved");
        let r = run_ensemble(&spec)?;
        ensemble_rows(&r, &[eps.into()], &mut series, &mut density, &mut fits);
    }
    Ok(vec![series, density, fits])
}

fn compare(cfg: &ExperimentConfig, p: &ModelParams) -> Result<Vec<Table>, RunError> {
    let o = cfg.compare.as_ref().expect("resolved");
    let times = log_times(o.t_max.expect("resolved"), o.n_times.expect("resolved"));
    let sigma_y = o.sigma_y.expect("resolved");
    let mut series = Table::new("series", &["eps", "model", "t", "sigma", "mean_x", "nu"]);
    let mut density = Table::new("density", &["eps", "model", "t", "l", "P", "std_error"]);
    let mut fits = Table::new("fits", &with_prefix(&["eps", "model"], &FIT_COLUMNS));
    let mut modes = Table::new("modes", &["eps", "model", "t", "position", "height"]);
    let mut ordering = Table::new(
        "ordering",
        &[
            "eps",
            "t",
            "sigma2_1d",
            "sigma2_2d",
            "se_1d",
            "se_2d",
            "confidence_2d_greater",
        ],
    );
    let smooth = if p.alpha == 0.0 {
        5.0
    } else {
        1.0 / p.alpha.abs()
    };
    for &eps in o.eps_values.as_ref().expect("resolved") {
        let mut spec = EnsembleSpec::new(
            p.with_eps(eps),
            Model::OneD,
            o.sigma_x.expect("resolved"),
            times.clone(),
        );
        spec.n_phase = o.n_phase.expect("resolved");
        spec.n_disorder = if eps > 0.0 {
            o.n_disorder.expect("resolved")
        } else {
            1
        };
        spec.snapshots = o.snapshots.clone().expect("resolved");
        let (one, two) = compare_1d_2d(&spec, sigma_y)?;
        for (name, r) in [("1d", &one), ("2d", &two)] {
            let prefix = [Cell::from(eps), Cell::from(name)];
            ensemble_rows(r, &prefix, &mut series, &mut density, &mut fits);
            for k in 0..r.density.times.len() {
                let (ls, vals) = r.density.snapshot(k);
                for m in density_modes(&ls, vals, smooth, 0.05) {
                    modes.push(vec![
                        eps.into(),
                        name.into(),
                        r.density.times[k].into(),
                        m.position.into(),
                        m.height.into(),
                    ]);
                }
            }
        }
        let last = |r: &EnsembleResult| -> Vec<f64> {
            r.run_second_moments
                .iter()
                .map(|s| *s.last().expect("sampled"))
                .collect()
        };
        let (a, b) = (last(&one), last(&two));
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        ordering.push(vec![
            eps.into(),
            (*times.last().expect("times")).into(),
            mean(&a).into(),
            mean(&b).into(),
            standard_error(&a).into(),
            standard_error(&b).into(),
            bootstrap_greater(&b, &a, o.bootstrap.expect("resolved"), p.seed).into(),
        ]);
    }
    Ok(vec![series, density, fits, modes, ordering])
}
