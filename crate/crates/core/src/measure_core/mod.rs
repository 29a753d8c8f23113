//! Product measures on `ℝ^ℕ` and the projective-limit machinery around them.
//!
//! Borel sets are represented by finite unions of axis-aligned boxes; a
//! [`CylinderSet`] constrains finitely many coordinates, and a
//! [`CountableConstraint`] constrains countably many through a closed-form
//! tail rule.

pub mod component;
pub mod cylinder;
pub mod interval;
pub mod product;
pub mod projective;
pub mod pushforward;

pub use component::{normal_cdf, normal_interval, normal_sf, Component1DMeasure, ProductMeasureSpec};
pub use cylinder::{cylinder_measure, increasing_limit, BaseEntry, CylinderSet, IncreasingLimit};
pub use interval::{Interval, IntervalUnion};
pub use product::{
    countable_product_measure, CountableConstraint, LimitVerdict, ProductLimit, ProductOptions, TailRule,
};
pub use projective::{consistency_check, Consistency, MarginalTable, Violation, CONSISTENCY_TOL};
pub use pushforward::{pushforward_integral_mc, ProductSampler, Sampler};
