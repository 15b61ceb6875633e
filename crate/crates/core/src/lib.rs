pub mod basis;
pub mod model;
pub mod observability;
pub mod placement;
pub mod quadrature;
pub mod reconstruct;
pub mod report;
pub mod semigroup;
pub mod sensing;
