//! Figure presets. Each preset sets the parameters printed for that figure;
//! every other value is a documented default, listed in `assumed` and recorded
//! in the run manifest.

/// One preset: a configuration fragment plus the keys it had to assume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure {
    pub name: &'static str,
    pub description: &'static str,
    pub config: &'static str,
    pub assumed: &'static [&'static str],
}

pub const FIGURES: &[Figure] = &[
    Figure {
        name: "fig1",
        description: "stroboscopic map of the classical driven Harper model at four fields",
        config: r#"
kind = "classical-map"
Jx = 1
Jy = 1
alpha = 0.1
[classical-map]
fields = [0.0, 0.05, 0.4, 0.8]
grid = 8
periods = 200
"#,
        assumed: &[
            "alpha",
            "classical-map.fields",
            "classical-map.grid",
            "classical-map.periods",
        ],
    },
    Figure {
        name: "fig2",
        description: "space-time density of a Landau packet on the chain at F = 0, 0.5, 0.1",
        config: r#"
kind = "evolve1d"
Jx = 1
Jy = 1
alpha = 0.05
[evolve1d]
fields = [0.0, 0.5, 0.1]
kappa = 0.0
initial = "landau"
bloch_periods = 5
"#,
        assumed: &["evolve1d.bloch_periods", "evolve1d.samples"],
    },
    Figure {
        name: "fig3a",
        description: "spectrum of the reduced chain at alpha = 1/10, F = 1",
        config: r#"
kind = "spectrum"
Jx = 1
Jy = 1
alpha = 0.1
F = 1.0
[spectrum]
kappa_points = 64
"#,
        assumed: &["spectrum.kappa_points", "spectrum.window"],
    },
    Figure {
        name: "fig3b",
        description: "spectrum of the reduced chain at alpha = 1/10, F = 0.3",
        config: r#"
kind = "spectrum"
Jx = 1
Jy = 1
alpha = 0.1
F = 0.3
[spectrum]
kappa_points = 64
"#,
        assumed: &["spectrum.kappa_points", "spectrum.window"],
    },
    Figure {
        name: "fig4a",
        description: "currents of all states at kappa = 0.1, alpha = 1/10, F = 0.3",
        config: r#"
kind = "spectrum"
Jx = 1
Jy = 1
alpha = 0.1
F = 0.3
[spectrum]
kappas = [0.1]
"#,
        assumed: &["spectrum.window"],
    },
    Figure {
        name: "fig4b",
        description: "currents of all states at kappa = 0.1, alpha = 1/10.1417, F = 0.3",
        config: r#"
kind = "spectrum"
Jx = 1
Jy = 1
alpha = 0.09860279539722532
F = 0.3
[spectrum]
kappas = [0.1]
"#,
        assumed: &["spectrum.window"],
    },
    Figure {
        name: "fig5",
        description:
            "exact and quadratic-expansion localized states over kappa, alpha = 1/10, F = 0.3",
        config: r#"
kind = "spectrum"
Jx = 1
Jy = 1
alpha = 0.1
F = 0.3
[spectrum]
kappa_points = 64
mathieu = true
"#,
        assumed: &["spectrum.kappa_points", "spectrum.window"],
    },
    Figure {
        name: "fig6a",
        description: "transporting state at alpha = 1/10, F = 0.1",
        config: r#"
kind = "transport"
Jx = 1
Jy = 1
alpha = 0.1
F = 0.1
[transport]
family = "minimum"
"#,
        assumed: &[
            "transport.kappa_points",
            "transport.taper_beta",
            "transport.bloch_periods",
        ],
    },
    Figure {
        name: "fig6b",
        description: "transporting state at alpha = 1/20, F = 0.1",
        config: r#"
kind = "transport"
Jx = 1
Jy = 1
alpha = 0.05
F = 0.1
[transport]
family = "minimum"
"#,
        assumed: &[
            "transport.kappa_points",
            "transport.taper_beta",
            "transport.bloch_periods",
        ],
    },
    Figure {
        name: "fig7",
        description: "reversed transporting state at alpha = 1/2.2, F = 0.1",
        config: r#"
kind = "transport"
Jx = 1
Jy = 1
alpha = 0.45454545454545453
F = 0.1
[transport]
family = "steepest-negative"
"#,
        assumed: &[
            "transport.kappa_points",
            "transport.window",
            "transport.taper_beta",
            "transport.bloch_periods",
        ],
    },
    Figure {
        name: "fig8a",
        description: "packet width in the 1D and 2D models at F = 3 for increasing disorder",
        config: r#"
kind = "compare"
Jx = 1
Jy = 1
alpha = 0.1
F = 3.0
[compare]
eps_values = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0]
"#,
        assumed: &[
            "compare.sigma_x",
            "compare.sigma_y",
            "compare.n_phase",
            "compare.n_disorder",
            "compare.t_max",
            "compare.n_times",
        ],
    },
    Figure {
        name: "fig8b",
        description: "packet width in the 1D and 2D models at F = 0.3 for increasing disorder",
        config: r#"
kind = "compare"
Jx = 1
Jy = 1
alpha = 0.1
F = 0.3
[compare]
eps_values = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0]
"#,
        assumed: &[
            "compare.sigma_x",
            "compare.sigma_y",
            "compare.n_phase",
            "compare.n_disorder",
            "compare.t_max",
            "compare.n_times",
        ],
    },
    Figure {
        name: "fig9",
        description: "averaged 2D packet and its 1D projection at t = 2000, alpha = 1/10, F = 0.3",
        config: r#"
kind = "compare"
Jx = 1
Jy = 1
alpha = 0.1
F = 0.3
[compare]
eps_values = [0.0]
t_max = 2000
snapshots = [2000.0]
"#,
        assumed: &[
            "compare.sigma_x",
            "compare.sigma_y",
            "compare.n_phase",
            "compare.n_times",
        ],
    },
    Figure {
        name: "fig10a",
        description: "local exponents at F = 0.3 for eps = 0 ... 0.4",
        config: r#"
kind = "ensemble"
Jx = 1
Jy = 1
alpha = 0.1
F = 0.3
[ensemble]
model = "1d"
eps_values = [0.0, 0.1, 0.2, 0.3, 0.4]
"#,
        assumed: &[
            "ensemble.model",
            "ensemble.sigma_x",
            "ensemble.n_phase",
            "ensemble.n_disorder",
            "ensemble.t_max",
            "ensemble.n_times",
        ],
    },
    Figure {
        name: "fig10b",
        description: "local exponents at F = 3 for eps = 0 ... 0.4",
        config: r#"
kind = "ensemble"
Jx = 1
Jy = 1
alpha = 0.1
F = 3.0
[ensemble]
model = "1d"
eps_values = [0.0, 0.1, 0.2, 0.3, 0.4]
"#,
        assumed: &[
            "ensemble.model",
            "ensemble.sigma_x",
            "ensemble.n_phase",
            "ensemble.n_disorder",
            "ensemble.t_max",
            "ensemble.n_times",
        ],
    },
];

pub fn find(name: &str) -> Option<&'static Figure> {
    FIGURES.iter().find(|f| f.name == name)
}

pub fn names() -> Vec<&'static str> {
    FIGURES.iter().map(|f| f.name).collect()
}
