//! Mean-field ODEs of both algorithms, a fixed-step RK4 integrator, and the
//! analytic tools used to check regret along their flows.

mod analysis;
mod integrator;
mod rhs;

pub use analysis::{
    closed_form_samba, lyapunov_value, regret_diagnostics, theorem1_cumulative_bound,
    theorem1_regret_bound, theorem2_log_slope, theorem2_regret_bound, LyapunovConfig,
    RegretDiagnostics,
};
pub use integrator::{
    integrate_refining, rk4_integrate, OdeState, Record, Trajectory, TrajectorySample,
    MAX_REFINEMENTS, SIMPLEX_DRIFT_LIMIT,
};
pub use rhs::{samba_ode_rhs, softmax_ode_rhs, OdeProblem, SystemTag};
