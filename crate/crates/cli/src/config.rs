//! Experiment configuration: parsing, layering and resolution of defaults.
//!
//! A configuration is a TOML table with the model parameters at top level and
//! one section for the chosen kind. Layers are merged in the order figure
//! preset, file, flags; resolution then fills every unset option, so the
//! resolved table written next to the outputs re-runs the same experiment.

use std::f64::consts::TAU;
use std::path::PathBuf;

use cyclobloch::spectral::default_window;
use cyclobloch::ModelParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Evolve1d,
    Evolve2d,
    Spectrum,
    Transport,
    ClassicalMap,
    Ensemble,
    Compare,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Evolve1d => "evolve1d",
            Kind::Evolve2d => "evolve2d",
            Kind::Spectrum => "spectrum",
            Kind::Transport => "transport",
            Kind::ClassicalMap => "classical-map",
            Kind::Ensemble => "ensemble",
            Kind::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Ndjson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initial1d {
    /// Gaussian `exp(-pi alpha l^2)` centred on site 0.
    Landau,
    /// Single occupied site 0.
    Delta,
    /// Gaussian envelope with random site phases.
    Incoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeChoice {
    Static,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyChoice {
    /// Family of the potential minimum near the window centre.
    Minimum,
    /// Family of the potential maximum near the window centre.
    Maximum,
    /// Straightest family with the most negative slope among all interior families.
    SteepestNegative,
    /// Straightest family with the most positive slope among all interior families.
    SteepestPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "2d")]
    TwoD,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evolve1d {
    /// Fields to run; each gets its own rows. Defaults to `[F]`.
    pub fields: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub initial: Option<Initial1d>,
    /// RMS width of the incoherent packet.
    pub sigma: Option<f64>,
    /// Duration in Bloch periods; `T_B = 2 pi` is used for a vanishing field.
    pub bloch_periods: Option<f64>,
    /// Number of sample times after `t = 0`.
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evolve2d {
    pub gauge: Option<GaugeChoice>,
    pub sigma_x: Option<f64>,
    pub sigma_y: Option<f64>,
    pub t_end: Option<f64>,
    pub samples: Option<usize>,
    /// Phase realization of the initial packet.
    pub realization: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectrum {
    /// Explicit quasimomenta; overrides `kappa_points`.
    pub kappas: Option<Vec<f64>>,
    pub kappa_points: Option<usize>,
    /// Inclusive m-window `[lo, hi]`.
    pub window: Option<[i64; 2]>,
    /// Also tabulate the quadratic-expansion state of the minimum at site 0.
    pub mathieu: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transport {
    pub family: Option<FamilyChoice>,
    pub kappa_points: Option<usize>,
    pub window: Option<[i64; 2]>,
    /// Strength of the smooth quasimomentum taper; 0 selects uniform weights.
    pub taper_beta: Option<f64>,
    pub bloch_periods: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalMap {
    /// One section per field. Defaults to `[F]`.
    pub fields: Option<Vec<f64>>,
    /// Seeds per axis.
    pub grid: Option<usize>,
    pub periods: Option<usize>,
    /// Strobe period used when the field vanishes.
    pub period_fallback: Option<f64>,
    /// Fields of an optional trapped-fraction sweep.
    pub sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ensemble {
    pub model: Option<ModelChoice>,
    /// Disorder strengths to run. Defaults to `[eps]`.
    pub eps_values: Option<Vec<f64>>,
    pub sigma_x: Option<f64>,
    /// Width along m of 2D packets; defaults to one magnetic period.
    pub sigma_y: Option<f64>,
    pub n_phase: Option<usize>,
    pub n_disorder: Option<usize>,
    pub t_max: Option<f64>,
    /// Number of log-spaced sample times over three decades up to `t_max`.
    pub n_times: Option<usize>,
    /// Times of averaged-density snapshots; each must be a sample time.
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Compare {
    pub eps_values: Option<Vec<f64>>,
    pub sigma_x: Option<f64>,
    pub sigma_y: Option<f64>,
    pub n_phase: Option<usize>,
    pub n_disorder: Option<usize>,
    pub t_max: Option<f64>,
    pub n_times: Option<usize>,
    pub snapshots: Option<Vec<f64>>,
    /// Bootstrap resamples for the ordering of the final second moments.
    pub bootstrap: Option<usize>,
}

/// The on-disk configuration. Everything but `kind` is optional until resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(rename = "Jx", skip_serializing_if = "Option::is_none")]
    pub jx: Option<f64>,
    #[serde(rename = "Jy", skip_serializing_if = "Option::is_none")]
    pub jy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub field: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve1d: Option<Evolve1d>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve2d: Option<Evolve2d>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transport: Option<Transport>,
    #[serde(rename = "classical-map", skip_serializing_if = "Option::is_none")]
    pub classical_map: Option<ClassicalMap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Ensemble>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<Compare>,
}

/// Parses TOML text into a raw table; `origin` names the source in errors.
pub fn parse_table(text: &str, origin: &str) -> Result<toml::Table, ConfigError> {
    text.parse::<toml::Table>().map_err(|e| ConfigError::Parse {
        origin: origin.to_string(),
        message: e.to_string(),
    })
}

/// Merges `over` into `base`; nested tables merge key by key, everything else is replaced.
pub fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Deserializes a merged table; unknown keys are rejected.
pub fn from_table(table: toml::Table, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    ExperimentConfig::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::Parse {
        origin: origin.to_string(),
        message: e.to_string(),
    })
}

/// Parses a complete configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    from_table(parse_table(text, "config")?, "config")
}

/// Outcome of resolution besides the filled-in configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub params: ModelParams,
    pub warnings: Vec<String>,
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("`{name}` must be positive and finite, got {v}"))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        invalid(format!("`{name}` must be at least {min}, got {v}"))
    }
}

fn finite_list(name: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        invalid(format!(
            "`{name}` must be a non-empty list of finite numbers"
        ))
    } else {
        Ok(())
    }
}

fn window_ok(name: &str, w: [i64; 2]) -> Result<(), ConfigError> {
    if w[1] - w[0] + 1 >= 3 {
        Ok(())
    } else {
        invalid(format!("`{name}` must span at least 3 sites, got {w:?}"))
    }
}

/// Log-spaced sample times over three decades ending at `t_max`.
pub fn log_times(t_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t_max];
    }
    (0..n)
        .map(|k| t_max * 10f64.powf(-3.0 * (n - 1 - k) as f64 / (n - 1) as f64))
        .collect()
}

fn check_snapshots(snapshots: &[f64], times: &[f64]) -> Result<(), ConfigError> {
    for s in snapshots {
        if *s != 0.0 && !times.contains(s) {
            return invalid(format!(
                "snapshot {s} is not a sample time; sample times are {times:?}"
            ));
        }
    }
    if !snapshots.windows(2).all(|w| w[1] > w[0]) {
        return invalid("snapshots must be strictly increasing");
    }
    Ok(())
}

impl ExperimentConfig {
    /// A configuration of `kind` with nothing else set.
    pub fn empty(kind: Kind) -> Self {
        ExperimentConfig {
            kind,
            jx: None,
            jy: None,
            alpha: None,
            field: None,
            eps: None,
            seed: None,
            format: None,
            out: None,
            evolve1d: None,
            evolve2d: None,
            spectrum: None,
            transport: None,
            classical_map: None,
            ensemble: None,
            compare: None,
        }
    }

    fn sections(&self) -> [(Kind, bool); 7] {
        [
            (Kind::Evolve1d, self.evolve1d.is_some()),
            (Kind::Evolve2d, self.evolve2d.is_some()),
            (Kind::Spectrum, self.spectrum.is_some()),
            (Kind::Transport, self.transport.is_some()),
            (Kind::ClassicalMap, self.classical_map.is_some()),
            (Kind::Ensemble, self.ensemble.is_some()),
            (Kind::Compare, self.compare.is_some()),
        ]
    }

    /// Validates the configuration and fills every unset option with its default.
    pub fn resolve(&mut self) -> Result<Resolution, ConfigError> {
        if let Some((k, _)) = self
            .sections()
            .into_iter()
            .find(|(k, set)| *set && *k != self.kind)
        {
            return invalid(format!(
                "section [{}] does not apply to kind `{}`",
                k.name(),
                self.kind.name()
            ));
        }
        let jx = *self.jx.get_or_insert(1.0);
        let jy = *self.jy.get_or_insert(1.0);
        let alpha = *self.alpha.get_or_insert(0.1);
        let field = *self.field.get_or_insert(0.0);
        let eps = *self.eps.get_or_insert(0.0);
        let seed = *self.seed.get_or_insert(0);
        self.format.get_or_insert(Format::Csv);
        let (params, reduction) = ModelParams::with_reduction(jx, jy, alpha, field, eps, seed)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut warnings = Vec::new();
        if reduction.changed() {
            warnings.push(format!(
                "alpha = {} reduced to {} (flux is defined modulo 1)",
                reduction.input, reduction.reduced
            ));
            self.alpha = Some(reduction.reduced);
        }
        let p = params;
        let tb = |f: f64| if f == 0.0 { TAU } else { TAU / f.abs() };
        match self.kind {
            Kind::Evolve1d => {
                let o = self.evolve1d.get_or_insert_with(Default::default);
                let fields = o.fields.get_or_insert_with(|| vec![p.field]);
                finite_list("evolve1d.fields", fields)?;
                o.kappa.get_or_insert(0.0);
                let init = *o.initial.get_or_insert(Initial1d::Landau);
                if init == Initial1d::Landau && p.alpha == 0.0 {
                    return invalid("a Landau packet needs a nonzero alpha");
                }
                positive("evolve1d.sigma", *o.sigma.get_or_insert(10.0))?;
                positive(
                    "evolve1d.bloch_periods",
                    *o.bloch_periods.get_or_insert(5.0),
                )?;
                at_least("evolve1d.samples", *o.samples.get_or_insert(200), 1)?;
            }
            Kind::Evolve2d => {
                let o = self.evolve2d.get_or_insert_with(Default::default);
                o.gauge.get_or_insert(GaugeChoice::Static);
                positive("evolve2d.sigma_x", *o.sigma_x.get_or_insert(5.0))?;
                positive("evolve2d.sigma_y", *o.sigma_y.get_or_insert(3.0))?;
                positive("evolve2d.t_end", *o.t_end.get_or_insert(tb(p.field)))?;
                at_least("evolve2d.samples", *o.samples.get_or_insert(50), 1)?;
                o.realization.get_or_insert(0);
            }
            Kind::Spectrum => {
                let o = self.spectrum.get_or_insert_with(Default::default);
                let kappas = match (&o.kappas, o.kappa_points) {
                    (Some(k), _) => k.clone(),
                    (None, n) => {
                        let n = *o.kappa_points.get_or_insert(n.unwrap_or(64));
                        at_least("spectrum.kappa_points", n, 1)?;
                        cyclobloch::spectral::uniform_kappa_grid(n)
                    }
                };
                finite_list("spectrum.kappas", &kappas)?;
                if !kappas.windows(2).all(|w| w[1] > w[0]) {
                    return invalid("spectrum.kappas must be strictly increasing");
                }
                o.kappas = Some(kappas);
                o.kappa_points = None;
                let w = default_window(&p, 0);
                window_ok(
                    "spectrum.window",
                    *o.window.get_or_insert([*w.start(), *w.end()]),
                )?;
                let m = *o.mathieu.get_or_insert(false);
                if m && !p.is_subcritical() {
                    return invalid("spectrum.mathieu needs |F| below the critical field");
                }
            }
            Kind::Transport => {
                let o = self.transport.get_or_insert_with(Default::default);
                let fam = *o.family.get_or_insert(FamilyChoice::Minimum);
                if p.field == 0.0 {
                    return invalid("transport needs a nonzero field");
                }
                if matches!(fam, FamilyChoice::Minimum | FamilyChoice::Maximum)
                    && !p.is_subcritical()
                {
                    return invalid("extremum families need |F| below the critical field");
                }
                at_least(
                    "transport.kappa_points",
                    *o.kappa_points.get_or_insert(128),
                    8,
                )?;
                let w = match fam {
                    FamilyChoice::Minimum => cyclobloch::transport::family_window(
                        &p,
                        cyclobloch::spectral::Extremum::Minimum(0),
                    ),
                    FamilyChoice::Maximum => cyclobloch::transport::family_window(
                        &p,
                        cyclobloch::spectral::Extremum::Maximum(0),
                    ),
                    _ => default_window(&p, 0),
                };
                window_ok(
                    "transport.window",
                    *o.window.get_or_insert([*w.start(), *w.end()]),
                )?;
                let beta = *o.taper_beta.get_or_insert(0.5);
                if !(beta >= 0.0 && beta.is_finite()) {
                    return invalid("transport.taper_beta must be non-negative");
                }
                positive(
                    "transport.bloch_periods",
                    *o.bloch_periods.get_or_insert(1.0),
                )?;
            }
            Kind::ClassicalMap => {
                let o = self.classical_map.get_or_insert_with(Default::default);
                finite_list(
                    "classical-map.fields",
                    o.fields.get_or_insert_with(|| vec![p.field]),
                )?;
                at_least("classical-map.grid", *o.grid.get_or_insert(8), 1)?;
                at_least("classical-map.periods", *o.periods.get_or_insert(200), 1)?;
                positive(
                    "classical-map.period_fallback",
                    *o.period_fallback.get_or_insert(TAU),
                )?;
                if let Some(s) = &o.sweep {
                    finite_list("classical-map.sweep", s)?;
                }
            }
            Kind::Ensemble => {
                let o = self.ensemble.get_or_insert_with(Default::default);
                o.model.get_or_insert(ModelChoice::OneD);
                let eps_values = o.eps_values.get_or_insert_with(|| vec![p.eps]);
                finite_list("ensemble.eps_values", eps_values)?;
                let any_disorder = eps_values.iter().any(|&e| e > 0.0);
                resolve_statistics(
                    "ensemble",
                    &p,
                    any_disorder,
                    StatisticsFields {
                        sigma_x: &mut o.sigma_x,
                        sigma_y: &mut o.sigma_y,
                        n_phase: &mut o.n_phase,
                        n_disorder: &mut o.n_disorder,
                        t_max: &mut o.t_max,
                        n_times: &mut o.n_times,
                        snapshots: &mut o.snapshots,
                    },
                )?;
            }
            Kind::Compare => {
                let o = self.compare.get_or_insert_with(Default::default);
                let eps_values = o.eps_values.get_or_insert_with(|| vec![p.eps]);
                finite_list("compare.eps_values", eps_values)?;
                let any_disorder = eps_values.iter().any(|&e| e > 0.0);
                resolve_statistics(
                    "compare",
                    &p,
                    any_disorder,
                    StatisticsFields {
                        sigma_x: &mut o.sigma_x,
                        sigma_y: &mut o.sigma_y,
                        n_phase: &mut o.n_phase,
                        n_disorder: &mut o.n_disorder,
                        t_max: &mut o.t_max,
                        n_times: &mut o.n_times,
                        snapshots: &mut o.snapshots,
                    },
                )?;
                at_least("compare.bootstrap", *o.bootstrap.get_or_insert(2000), 1)?;
            }
        }
        Ok(Resolution { params, warnings })
    }

    /// The resolved configuration as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

struct StatisticsFields<'a> {
    sigma_x: &'a mut Option<f64>,
    sigma_y: &'a mut Option<f64>,
    n_phase: &'a mut Option<usize>,
    n_disorder: &'a mut Option<usize>,
    t_max: &'a mut Option<f64>,
    n_times: &'a mut Option<usize>,
    snapshots: &'a mut Option<Vec<f64>>,
}

fn resolve_statistics(
    section: &str,
    p: &ModelParams,
    any_disorder: bool,
    f: StatisticsFields,
) -> Result<(), ConfigError> {
    positive(
        &format!("{section}.sigma_x"),
        *f.sigma_x.get_or_insert(20.0),
    )?;
    let lambda = if p.alpha == 0.0 {
        10.0
    } else {
        1.0 / p.alpha.abs()
    };
    positive(
        &format!("{section}.sigma_y"),
        *f.sigma_y.get_or_insert(lambda),
    )?;
    at_least(
        &format!("{section}.n_phase"),
        *f.n_phase.get_or_insert(32),
        1,
    )?;
    let nd = *f.n_disorder.get_or_insert(if any_disorder { 8 } else { 1 });
    at_least(&format!("{section}.n_disorder"), nd, 1)?;
    let t_max = *f.t_max.get_or_insert(1000.0);
    positive(&format!("{section}.t_max"), t_max)?;
    let n = *f.n_times.get_or_insert(40);
    at_least(&format!("{section}.n_times"), n, 1)?;
    let times = log_times(t_max, n);
    check_snapshots(f.snapshots.get_or_insert_with(|| vec![t_max]), &times)
}
