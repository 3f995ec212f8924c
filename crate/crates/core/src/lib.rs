//! Influence diagrams solved over strong junction trees, with myopic
//! value-of-information computed by direct propagation, the Cooper
//! transformation, junction-tree table expansion, and an explicit
//! observe/don't-observe model. An exhaustive oracle evaluates small diagrams
//! independently of all of the above.

pub mod jtree;
pub mod model;
pub mod oracle;
pub mod potentials;
pub mod solve;
pub mod synth;
pub mod voi;

pub use model::{
    parse_model, serialize_model, validate_model, Evidence, InfluenceDiagram, ModelDocument,
    ModelError, ObservationScenario, VarId, Variable, VariableKind, Violation,
};
pub use oracle::{oracle_meu, oracle_voi, OracleBudget, OracleError};
pub use solve::{bn_posterior, solve_meu, DecisionPolicy, Policy, Solution, SolveError};
pub use voi::{voi_report, Method, VoiError, VoiQuery, VoiReport};
