//! Desk-scale toolkit for simulated local Dirichlet-to-Neumann measurements
//! on piecewise-homogeneous anisotropic elastic bodies, and block-by-block
//! recovery of the stiffness tensor: surface-impedance boundary
//! determination, a P1 tetrahedral forward solver, and layer stripping of
//! the DN map across interior interfaces.

pub mod par;
pub mod stroh;
pub mod tensor;
