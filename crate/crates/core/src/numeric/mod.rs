//! Dense numerics sized for `2n × 2n` problems: matrices, symmetric
//! eigenvalues, finite differences, quadrature, RK4 and shooting.

mod eigen;
mod fd;
mod matrix;
mod ode;
mod quadrature;
mod shoot;

pub use eigen::{signature, symmetric_eigen, symmetric_eigenvalues, SymmetricEigen};
pub use fd::{central_fd, central_fd_checked, gradient, jacobian, FiniteDifferenceScheme};
pub use matrix::{axpy, dot, max_abs_diff, norm, scaled, sub, Lu, Matrix, Rank3, Rank4, Slot, DEGENERACY_CONDITION};
pub use ode::{integrate_ode, integrate_ode_within, rk4_step, Trajectory, MIN_STEPS};
pub use quadrature::{gauss_legendre, gauss_legendre_on, integrate_1d, quadrature_triangle};
pub use shoot::{shoot_bvp, shoot_bvp_with, ShootingOptions};
