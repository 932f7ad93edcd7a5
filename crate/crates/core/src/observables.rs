//! Time series of wave-packet observables.

use crate::field::{Field1D, Field2D};

/// Sampled observables of one evolution or of an ensemble mean.
///
/// `sigma` is the square root of the raw second moment about the origin,
/// `sum_l l^2 P(l)`; `centered_width` is the RMS width about `mean_x`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub sigma: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub centered_width: Vec<f64>,
    /// Probability in the outermost ring of the propagation window.
    pub edge_norm: Vec<f64>,
    pub norm: Vec<f64>,
    /// RMS width along m about its mean; empty for 1D runs.
    pub width_y: Vec<f64>,
}

/// One row of an [`ObservableSeries`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub norm: f64,
    pub first: f64,
    pub second: f64,
    pub edge: f64,
    pub width_y: Option<f64>,
}

impl Sample {
    pub fn of_1d(t: f64, f: &Field1D, edge: f64) -> Self {
        let (first, second) = f.moments();
        Sample {
            t,
            norm: f.norm_sqr(),
            first,
            second,
            edge,
            width_y: None,
        }
    }

    pub fn of_2d(t: f64, f: &Field2D, edge: f64) -> Self {
        let (first, second) = f.moments_l();
        let (my1, my2) = f.moments_m();
        let norm = f.norm_sqr();
        let wy = (my2 / norm - (my1 / norm).powi(2)).max(0.0).sqrt();
        Sample {
            t,
            norm,
            first,
            second,
            edge,
            width_y: Some(wy),
        }
    }
}

impl ObservableSeries {
    pub fn push(&mut self, s: Sample) {
        let n = if s.norm > 0.0 { s.norm } else { 1.0 };
        let mean = s.first / n;
        let second = s.second / n;
        self.times.push(s.t);
        self.sigma.push(second.max(0.0).sqrt());
        self.mean_x.push(mean);
        self.centered_width
            .push((second - mean * mean).max(0.0).sqrt());
        self.edge_norm.push(s.edge);
        self.norm.push(s.norm);
        if let Some(w) = s.width_y {
            self.width_y.push(w);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `sigma^2` at every sample.
    pub fn second_moment(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s * s).collect()
    }

    pub fn last(&self) -> Option<Sample> {
        let i = self.times.len().checked_sub(1)?;
        Some(Sample {
            t: self.times[i],
            norm: self.norm[i],
            first: self.mean_x[i] * self.norm[i],
            second: self.sigma[i].powi(2) * self.norm[i],
            edge: self.edge_norm[i],
            width_y: self.width_y.get(i).copied(),
        })
    }
}
