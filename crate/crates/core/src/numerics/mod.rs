//! Numerical building blocks: integrator, quadrature, stencils, FFT, root finding.

pub mod interp;
pub mod ode;
pub mod quadrature;
pub mod roots;
pub mod spectral;
