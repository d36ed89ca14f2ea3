//! Passage functionals and their Monte Carlo estimators.

mod emit;
mod gamma;
mod greedy;
mod passage;
mod shape;
mod zeta;

pub use emit::{cell_records, write_cells_jsonl, write_summary_csv, CellRecord, SUMMARY_HEADER};
pub use gamma::{gamma_estimate, sample_passages, ClosedForm, GammaConfig, GammaEstimate, LadderRecord, Method, Z95};
pub use greedy::{greedy_e1_path, greedy_success_rate, min_valid_k, GreedyOutcome};
pub use passage::{passage, passage_chain, Margins, PassageValue, Variant};
pub use shape::{direction_grid, shape_sample, ChiPoint, ShapeConfig, ShapeDirection, ShapeSample};
pub use zeta::{left_boundary_at, zeta_estimate, ZetaConfig, ZetaEstimate};
