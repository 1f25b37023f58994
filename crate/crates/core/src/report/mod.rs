//! CSV export and SVG regret plots.

mod csv;
mod svg;

pub use csv::{
    format_sig6, read_traces, traces_to_string, write_summary, write_traces, SUMMARY_HEADER,
    TRACE_HEADER,
};
pub use svg::{render_svg, PLOT_BOTTOM, PLOT_TOP};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("traces.csv line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("agent name {0:?} cannot be written to CSV")]
    AgentName(String),
    #[error("no curves to plot")]
    EmptyCurves,
}
