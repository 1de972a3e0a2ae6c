pub mod arbor;
pub mod catgraph;
pub mod corpus;
pub mod esa;
pub mod eval;
pub mod exec;
pub mod pipeline;
pub mod strata;
pub mod textproc;
