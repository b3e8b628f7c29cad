//! Generalized convexity criteria for isotropic planar energies on GL⁺(2).

pub mod builtins;
pub mod energy;
pub mod error;
pub mod expr;
pub mod planar;
pub mod polyconvexity;
pub mod rank_one;
pub mod report;
pub mod sublevel;
pub mod verdict;

pub use energy::{DomainGrid, OrderedSVEnergy, Seam, Smoothness, VolIsoSplitEnergy};
pub use error::{Error, Result};
pub use planar::{Mat2, OrderedSV, RankOneDir};
pub use verdict::Verdict;
