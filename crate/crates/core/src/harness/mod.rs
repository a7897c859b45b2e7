//! Synthetic corpora, evaluation protocol and scenario replay.

pub mod eval;
pub mod gen;
pub mod oracle;
pub mod scenario;

pub use eval::{
    prox_suite, run_prox_evaluation, run_tap_evaluation, tap_suite, AccelCorpus, Cell, EvalError, EvalReport,
    ProxCorpus, ProxSuiteConfig, TapSuiteConfig,
};
pub use gen::{
    embed_gesture, gen_activity_stream, gen_activity_trace, gen_prox_stream, gen_tap_trace, Activity, GenError,
    GenParams, ProxKind, TapGesture,
};
pub use oracle::brute_force_pair_matrix;
pub use scenario::{
    builtin_database, builtin_scenario, run_scenario, BuiltinScenario, ReplayConfig, Scenario, ScenarioError,
};
