//! Wave-packet dynamics of a charged particle on a square lattice in crossed
//! magnetic and electric fields.
//!
//! The crate covers the quantum lattice dynamics (1D reduced chain and full 2D
//! lattice), the instantaneous spectrum of the reduced chain, construction and
//! verification of transporting states, the classical single-band limit, and
//! ensemble statistics over random initial phases and disorder.

pub mod chebyshev;
pub mod classical;
pub mod ensemble;
pub mod field;
pub mod observables;
pub mod params;
pub mod propagate;
pub mod rng;
pub mod spectral;
pub mod transport;

pub use field::{Field1D, Field2D, FieldError};
pub use observables::ObservableSeries;
pub use params::{DerivedConstants, ModelParams, ParamError};
pub use propagate::{
    Evolution, NoObserver, Observer, PropagationConfig, PropagationError, Sampling,
};
pub use rng::DisorderRealization;
