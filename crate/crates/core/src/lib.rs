// Negated comparisons deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod limits;
pub mod noise;
pub mod pointproc;
pub mod process;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use estimate::{Estimate, Normalization};
pub use limits::{
    hitting_constant, marginal_tail_constant, order_stat_constant, partial_sum_constant,
    ruin_constant, LimitConstant, McConfig, Method,
};
pub use noise::{MuInterval, RegVarLaw, Side};
pub use pointproc::{
    build_point_measure, empirical_f_mc, eval_f, limit_f_mc, make_plan, metric_d, AnnulusTestFn,
    LimitF, LimitOptions, NormalizationPlan, Point, PointMeasure, TestFunctional,
};
pub use process::{
    coeff_sequence_sample, simulate_path, simulate_sparse, validate_conditions, ConditionEntry,
    ConditionId, ConditionReport, Diagonal, FiniteLaw, MaCoeffs, Path, ProcessKind, ProcessSpec,
    RandomCoefLaw, SimPath, Status,
};
pub use rng::{StreamRng, Streams};
