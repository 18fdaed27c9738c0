//! Conserved and monitored quantities along trajectories.

mod laws;
mod monitor;
mod record;

pub use laws::{
    delta_r, dispersive_ratio, pc_law_residual, pc_quantity, scattering_residual, ScatteringSeries,
};
pub use monitor::{update_blowup_monitor, BlowupMonitor, DEFAULT_GRAD_THRESHOLD};
pub use record::{peak_location, record, DiagnosticsRecord, Recorder};
