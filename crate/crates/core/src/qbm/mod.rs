//! Quantum Brownian motion: bath kernels, the propagator function, the
//! exact time-dependent master-equation coefficients and their
//! small-coupling limits, Gaussian moments and a number-basis oracle.

pub mod coefficients;
pub mod fock;
pub mod kernels;
pub mod moments;
pub mod propagator;

pub use coefficients::{
    exact_coefficients, exact_lambda_theta, kernel_logdensity, lambda_coefficients, limit_coefficients,
    limit_lambda_theta, theta_coefficients, theta_integrals, ExactTable, LambdaTheta, QbmCoefficients, ThetaIntegrals,
    NODE_THRESHOLD,
};
pub use fock::{oscillator_gks, truncated_basis_propagate, FockBasis, FockTrajectory, OscillatorGks};
pub use kernels::{
    dissipation_double_integral, dissipation_integral, dissipation_kernel, laplace_dissipation_kernel, noise_kernel,
    KernelSet,
};
pub use moments::{propagate_moments, CoefficientSchedule, ConstantSchedule, MomentTrajectory, TabulatedSchedule};
pub use propagator::{propagator_via_laplace, solve_propagator, PropagatorFunction};
