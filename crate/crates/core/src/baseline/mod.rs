//! Classical reference links: Gray-mapped modulations, coherent ML
//! detection, Monte-Carlo BER curves and curve comparison.

pub mod compare;
pub mod curve;
pub mod modulation;
pub mod montecarlo;

pub use compare::{compare_curves, ComparisonReport};
pub use curve::{BerCurve, BerPoint, CurveMeta};
pub use modulation::{ml_detect, modulate, ModScheme};
pub use montecarlo::{monte_carlo_ber, LinkKind, McConfig};
