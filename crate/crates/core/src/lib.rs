//! Slab-geometry P_N transport: model definitions, a physics-informed
//! neural network solver, a least-squares finite element solver and a Monte
//! Carlo reference.

pub mod banded;
pub mod cases;
pub mod lsfe;
pub mod neuralnet;
pub mod pinn;
pub mod pn_model;
pub mod quasirandom;
pub mod reference;
pub mod solution;
