//! Float spectra, spectral staircases and the spectral runs built on them.

mod eigen;
mod runs;
mod staircase;

pub use eigen::{eigenvalues_sym, eigh_sym, operator_norm, FloatMatrix};
pub use runs::{
    eigenspace_run, extrapolate_to_zero, ground_state_run, ids_run, logdet_run, moment_run, nearest_rational,
    norm_check, staircase_logdet, uniform_convergence_diag, Atom, EigenspaceLevel, EigenspaceReport, GroundStateReport,
    IdsEstimate, IdsLevel, JumpTrack, KernelLevel, LogDetLevel, LogDetRunReport, MomentLevel, MomentReport, NormCheck,
    RunOptions, UniformReport,
};
pub use staircase::{sup_distance, AnalyticCdf, Cdf, Jump, SpectralStaircase};
