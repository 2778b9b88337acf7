//! Long-range repulsive potentials on the half line: Jost extraction and
//! generalized Fourier transforms, a finite-difference wave solver with
//! energy-flux diagnostics, modified wave operators, and the radial
//! reductions used for `ℝ³` experiments.
//!
//! Grid, transform and evolution types are generic over [`Scalar`]
//! (`f32` or `f64`); the spectral and ODE machinery runs in `f64`.

pub mod error;
pub mod evolution;
pub mod highdim;
pub mod modified_propagator;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod transforms;

pub use error::{Error, Result};
pub use evolution::{EnergyReport, FieldState, FluxResidual, MorawetzScan, NodePotential, Region, Simulation};
pub use highdim::{
    dispersion_shell_3d, mu_coefficient, ode_asymptotics_check, radial3d_bridge, HarmonicSector, OdeAsymptoticsReport,
    OdeCase, ShellReport,
};
pub use modified_propagator::{
    intertwine_residual, oscillatory_packet, phase_shift, u_vec, u_vec_inverse, w_vec, waveop_residual, PhaseShift,
    PhaseShiftVariant, WaveOperator,
};
pub use potentials::{classify, truncate_to_type1, MomentCache, PotentialClass, PotentialKind, PotentialSpec};
pub use scalar::Scalar;
pub use spectral::{extract_a, JostEntry, JostOptions, JostTable, SpectralBasis, WaveFunction};
pub use transforms::{sine_forward, sine_inverse, GridFunction, GridSpec, SpectrumFunction};

pub type GridSpec64 = GridSpec<f64>;
pub type GridSpec32 = GridSpec<f32>;
pub type GridFunction64 = GridFunction<f64>;
pub type GridFunction32 = GridFunction<f32>;
pub type SpectrumFunction64 = SpectrumFunction<f64>;
pub type SpectrumFunction32 = SpectrumFunction<f32>;
pub type FieldState64 = FieldState<f64>;
pub type FieldState32 = FieldState<f32>;
pub type Simulation64 = Simulation<f64>;
pub type Simulation32 = Simulation<f32>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
