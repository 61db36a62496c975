//! Comparison detectors: Canny edges with a polynomial baseline, and a
//! per-pixel Gaussian-mixture background model.

pub mod canny;
pub mod edgefit;
pub mod gmm;
pub mod polyfit;

pub use canny::{canny, EdgeMap};
pub use edgefit::{edge_deviation_score, edge_profile, fit_baseline, EdgeDeviation};
pub use gmm::{GmmModel, PixelMixture};
pub use polyfit::{polyfit_least_squares, EdgeFitModel};
