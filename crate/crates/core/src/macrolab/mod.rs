//! Macroscopic models: particle discretizations, grid solvers, baselines and
//! functionals.

pub mod arz;
pub mod field;
pub mod functionals;
pub mod heat;
pub mod lwr;
pub mod meanflow;
pub mod ncc_fv;
pub mod params;
pub mod particles;
pub mod setups;

pub use arz::{arz_nt_step, arz_run, ArzParams};
pub use field::{run_field, FieldHistory, MacroField, SupportWindow};
pub use functionals::{field_functionals, log_slope, particle_functionals, Functionals};
pub use heat::{heat_eq_run, heat_eq_step};
pub use lwr::{lwr_godunov_step, lwr_run, LwrParams};
pub use meanflow::{mean_flow, mean_flow_particles};
pub use ncc_fv::{macro_ncc_fv_step, ncc_fv_run, FarField};
pub use params::{micro_to_macro, MacroParams, MacroRelaxation, PressureLaw, ViscosityLaw};
pub use particles::{integrate_particles, particle_init, MacroModel, ParticleEnsemble, ParticleRun};
