//! Independent ground truth for the closed forms: the selected-gain laws,
//! numerical integration of the success events, exact Monte Carlo and a
//! Kolmogorov–Smirnov distance.

pub mod ks;
pub mod monte_carlo;
pub mod pdf;
pub mod quadrature;

pub use ks::ks_distance;
pub use monte_carlo::{monte_carlo_success, McEstimate};
pub use pdf::{cdf, pdf, Link, PdfSpec};
pub use quadrature::{integrate, quadrature_f_rstar, Estimate};
