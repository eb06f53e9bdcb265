pub mod complex_str;
pub mod equations;
pub mod fluctuation;
pub mod mean_field;
pub mod model;
pub mod quantum_stats;
pub mod scan;

pub use model::{BoundaryConditions, InputState, Mode, ModeInput, WaveguideParams, C64};
