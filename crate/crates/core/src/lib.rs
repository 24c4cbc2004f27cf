//! Induced connections, curvature, focal varieties and frame-based numerical
//! checks for normalized submanifolds of projective, affine and Euclidean
//! space.

pub mod cli;
pub mod curvature;
pub mod expr;
pub mod focal;
pub mod immersion;
pub mod jet;
pub mod parser;
pub mod poly;
pub mod random;
pub mod scalar;
pub mod tensor;
pub mod transport;
pub mod variety;
