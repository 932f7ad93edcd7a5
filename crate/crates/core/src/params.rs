//! Model parameters and the closed-form constants derived from them.
//!
//! Units follow the usual lattice convention: hbar, the charge, the speed of
//! light and the lattice constant are all set to one, so the Bloch frequency
//! equals the field magnitude.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
}

/// The five physical parameters of the lattice model plus a reproducibility seed.
///
/// `alpha` is stored already reduced into `(-1/2, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Hopping energy along x (the direction orthogonal to the field).
    pub jx: f64,
    /// Hopping energy along y.
    pub jy: f64,
    /// Magnetic flux per plaquette in units of the flux quantum.
    pub alpha: f64,
    /// Electric field along y; also the Bloch frequency.
    pub field: f64,
    /// Width of the uniform on-site disorder distribution.
    pub eps: f64,
    pub seed: u64,
}

/// Result of folding a flux value into the fundamental interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxReduction {
    pub input: f64,
    pub reduced: f64,
}

impl FluxReduction {
    pub fn changed(&self) -> bool {
        self.input != self.reduced
    }
}

/// Folds `alpha` into `(-1/2, 1/2]`.
pub fn reduce_flux(alpha: f64) -> f64 {
    let r = alpha - (alpha - 0.5).ceil();
    // ceil can land exactly on -1/2 for inputs like -0.5 + 1e-17
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// Closed-form constants. Quantities that diverge for vanishing flux or field
/// are `None` rather than infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Critical field `2 pi alpha Jx` above which directed drift disappears.
    pub critical_field: f64,
    /// Cyclotron frequency `2 pi alpha sqrt(Jx Jy)`.
    pub cyclotron_frequency: f64,
    /// Drift velocity `F / (2 pi alpha)`.
    pub drift_velocity: Option<f64>,
    /// Magnetic period `1 / alpha` in lattice sites.
    pub magnetic_period: Option<f64>,
    /// Bloch period `2 pi / F`.
    pub bloch_period: Option<f64>,
}

impl ModelParams {
    /// Validates the parameters and reduces the flux. Use [`ModelParams::with_reduction`]
    /// when the caller needs to know whether the flux was folded.
    pub fn new(
        jx: f64,
        jy: f64,
        alpha: f64,
        field: f64,
        eps: f64,
        seed: u64,
    ) -> Result<Self, ParamError> {
        Self::with_reduction(jx, jy, alpha, field, eps, seed).map(|(p, _)| p)
    }

    pub fn with_reduction(
        jx: f64,
        jy: f64,
        alpha: f64,
        field: f64,
        eps: f64,
        seed: u64,
    ) -> Result<(Self, FluxReduction), ParamError> {
        for (name, value) in [
            ("jx", jx),
            ("jy", jy),
            ("alpha", alpha),
            ("field", field),
            ("eps", eps),
        ] {
            if !value.is_finite() {
                return Err(ParamError::NotFinite { name, value });
            }
        }
        for (name, value) in [("jx", jx), ("jy", jy), ("eps", eps)] {
            if value < 0.0 {
                return Err(ParamError::Negative { name, value });
            }
        }
        let reduced = reduce_flux(alpha);
        Ok((
            ModelParams {
                jx,
                jy,
                alpha: reduced,
                field,
                eps,
                seed,
            },
            FluxReduction {
                input: alpha,
                reduced,
            },
        ))
    }

    /// Re-checks the invariants of a value that may have been built by hand or
    /// deserialized.
    pub fn validated(self) -> Result<Self, ParamError> {
        Self::new(
            self.jx, self.jy, self.alpha, self.field, self.eps, self.seed,
        )
    }

    pub fn with_field(mut self, field: f64) -> Self {
        self.field = field;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = reduce_flux(alpha);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn derived(&self) -> DerivedConstants {
        let two_pi_alpha = 2.0 * PI * self.alpha;
        let has_flux = self.alpha != 0.0;
        DerivedConstants {
            critical_field: two_pi_alpha * self.jx,
            cyclotron_frequency: two_pi_alpha * (self.jx * self.jy).sqrt(),
            drift_velocity: has_flux.then(|| self.field / two_pi_alpha),
            magnetic_period: has_flux.then(|| 1.0 / self.alpha),
            bloch_period: (self.field != 0.0).then(|| 2.0 * PI / self.field),
        }
    }

    pub fn critical_field(&self) -> f64 {
        2.0 * PI * self.alpha * self.jx
    }

    /// Whether `|F| < F_cr`, the regime with transporting islands and straight spectral lines.
    pub fn is_subcritical(&self) -> bool {
        self.field.abs() < self.critical_field().abs()
    }

    /// Magnetic period rounded up to whole sites, with a floor used for window
    /// padding when the flux is tiny or zero.
    pub fn magnetic_period_sites(&self, floor: usize) -> usize {
        match self.derived().magnetic_period {
            Some(l) if l.abs() < 1e6 => (l.abs().ceil() as usize).max(floor),
            _ => floor,
        }
    }
}

/// Shorthand used across tests and presets: `Jx = Jy = 1`, no disorder, seed 0.
pub fn symmetric(alpha: f64, field: f64) -> ModelParams {
    ModelParams::new(1.0, 1.0, alpha, field, 0.0, 0).expect("finite symmetric parameters")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_field_and_cyclotron_frequency() {
        let p = symmetric(0.1, 0.3);
        let d = p.derived();
        assert!((d.critical_field - 0.628_318_530_717_958_6).abs() < 1e-15);
        assert!((d.cyclotron_frequency - 0.628_318_530_717_958_6).abs() < 1e-15);
    }

    #[test]
    fn drift_covers_one_magnetic_period_per_bloch_period() {
        let p = symmetric(1.0 / 20.0, 0.1);
        let d = p.derived();
        let v = d.drift_velocity.unwrap();
        assert!((v - 0.318_309_886_183_790_7).abs() < 1e-12);
        let lambda = d.magnetic_period.unwrap();
        assert!((v * d.bloch_period.unwrap() - lambda).abs() < 1e-12);
        assert!((lambda - 20.0).abs() < 1e-12);
    }

    #[test]
    fn zero_flux_has_no_drift_or_period() {
        let d = symmetric(0.0, 0.5).derived();
        assert_eq!(d.drift_velocity, None);
        assert_eq!(d.magnetic_period, None);
        assert!(d.bloch_period.is_some());
        let d = symmetric(0.1, 0.0).derived();
        assert_eq!(d.bloch_period, None);
        assert_eq!(d.drift_velocity, Some(0.0));
    }

    #[test]
    fn flux_reduction() {
        assert_eq!(reduce_flux(0.5), 0.5);
        assert_eq!(reduce_flux(-0.5), 0.5);
        assert!((reduce_flux(0.6) + 0.4).abs() < 1e-15);
        assert!((reduce_flux(1.1) - 0.1).abs() < 1e-15);
        assert_eq!(reduce_flux(0.0), 0.0);
        let (p, r) = ModelParams::with_reduction(1.0, 1.0, 0.6, 0.1, 0.0, 0).unwrap();
        assert!(r.changed());
        assert!((p.alpha + 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_and_non_finite() {
        assert!(matches!(
            ModelParams::new(-1.0, 1.0, 0.1, 0.1, 0.0, 0),
            Err(ParamError::Negative { name: "jx", .. })
        ));
        assert!(matches!(
            ModelParams::new(1.0, 1.0, f64::NAN, 0.1, 0.0, 0),
            Err(ParamError::NotFinite { name: "alpha", .. })
        ));
        assert!(ModelParams::new(1.0, 1.0, 0.1, 0.1, -0.1, 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reduced_flux_in_fundamental_interval(a in -20.0f64..20.0) {
                let r = reduce_flux(a);
                prop_assert!(r > -0.5 && r <= 0.5);
                let k = a - r;
                prop_assert!((k - k.round()).abs() < 1e-9);
            }

            #[test]
            fn drift_times_bloch_period_times_flux_is_one(
                a in prop_oneof![-0.5f64..-1e-3, 1e-3f64..0.5],
                f in prop_oneof![-5.0f64..-1e-3, 1e-3f64..5.0],
            ) {
                let d = symmetric(a, f).derived();
                let v = d.drift_velocity.unwrap();
                let tb = d.bloch_period.unwrap();
                prop_assert!((v * tb * reduce_flux(a) - 1.0).abs() < 1e-14);
            }
        }
    }
}
