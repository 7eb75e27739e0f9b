//! Integration against dv_lambda: product rules on the disk and on B^2,
//! one-dimensional radial averages, and an oscillatory evaluator for
//! profiles of the form exp(i omega / |z|^2).

mod adaptive;
mod gauss;
mod oscillatory;
mod radial;
mod rule;

pub use adaptive::{integrate_adaptive, integrate_adaptive_rel};
pub use gauss::{gauss_jacobi, gauss_legendre, GaussRule};
pub use oscillatory::{oscillatory_gamma0, oscillatory_half_line, OscillatoryPlan, OscillatoryValue};
pub use radial::{beta_averages, beta_averages_oscillatory, radial_weighted_integral, RadialFn};
pub use rule::{build_rule, build_rule_sized, integrate, integrate_values, ProductRule, RuleSize};
