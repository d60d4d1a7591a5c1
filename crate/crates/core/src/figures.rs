//! Named figure presets: fixed sweep grids and the per-cell overlay tables
//! they produce.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::config::{Axis, ConfigError, ModelFamily, RunParams, ShareMode, SweepGrid};
use crate::decision::Projection;
use crate::engine::{sweep, EngineError, SweepReport};
use crate::metrics::{complementary_ecdf, overlay, skew_summary, EcdfCurve, OverlayRow, Panel, SummaryRow};

const LEVELS: [f64; 4] = [0.01, 0.05, 0.1, 0.2];
const P_K_LEVELS: [f64; 3] = [0.05, 0.1, 0.2];
const M_LEVELS: [i64; 4] = [1, 2, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    /// Null model: exposure probability (rows) by join probability (columns).
    Fig3,
    /// Social exposure: share mode (rows) by communities shared (columns).
    Fig4,
    /// Expected benefits, linear projection: exposure (rows) by p_k (columns).
    Fig5,
    /// Combined: p_k (rows) by communities shared (columns).
    Fig6,
    /// Expected benefits with quadratic projection. Same grid as `FigA1`.
    Fig7,
    FigA1,
    /// Social exposure with exposure and join probabilities of .05.
    FigB1,
    /// Combined with initial exposure .05.
    FigB2,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::FigA1,
        FigureId::FigB1,
        FigureId::FigB2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::FigA1 => "figA1",
            FigureId::FigB1 => "figB1",
            FigureId::FigB2 => "figB2",
        }
    }

    /// Base parameters and axes (row axis first, column axis second).
    pub fn grid(self) -> SweepGrid {
        let mut base = RunParams::default();
        let axes = match self {
            FigureId::Fig3 => {
                base.model = Some(ModelFamily::Null);
                base.p_l = Some(0.56);
                vec![Axis::new("p_e", LEVELS), Axis::new("p_j", LEVELS)]
            }
            FigureId::Fig4 | FigureId::FigB1 => {
                let p = if self == FigureId::Fig4 { 0.1 } else { 0.05 };
                base.model = Some(ModelFamily::SocialExposure);
                base.p_e = Some(p);
                base.p_j = Some(p);
                base.p_l = Some(0.56);
                vec![
                    Axis::new("share", ["random", "largest"]),
                    Axis::new("m", M_LEVELS),
                ]
            }
            FigureId::Fig5 | FigureId::Fig7 | FigureId::FigA1 => {
                base.model = Some(ModelFamily::Ieb);
                base.projection = Some(if self == FigureId::Fig5 {
                    Projection::Linear
                } else {
                    Projection::Quadratic
                });
                vec![Axis::new("p_e", LEVELS), Axis::new("p_k", P_K_LEVELS)]
            }
            FigureId::Fig6 | FigureId::FigB2 => {
                base.model = Some(ModelFamily::Combined);
                base.share = Some(ShareMode::Largest);
                base.projection = Some(Projection::Quadratic);
                base.p_e = Some(if self == FigureId::Fig6 { 0.1 } else { 0.05 });
                vec![Axis::new("p_k", P_K_LEVELS), Axis::new("m", M_LEVELS)]
            }
        };
        SweepGrid {
            base,
            axes,
            replicates: 1,
        }
    }

    pub fn columns(self) -> usize {
        self.grid().axes.last().map_or(1, |a| a.values.len())
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConfigError::BadValue {
                name: "figure".into(),
                value: s.to_string(),
            })
    }
}

/// The figure's grid with `overrides` applied to the base and the given
/// replicate count.
pub fn figure_grid(id: FigureId, overrides: &RunParams, replicates: u32) -> Result<SweepGrid, ConfigError> {
    let mut grid = id.grid();
    grid.base.overlay(overrides);
    grid.replicates = replicates;
    grid.validate()?;
    Ok(grid)
}

#[derive(Debug)]
pub struct CellOverlay {
    pub cell: usize,
    pub replicate: u32,
    pub title: String,
    pub sim: EcdfCurve,
    pub rows: Vec<OverlayRow>,
}

#[derive(Debug)]
pub struct FigureOutput {
    pub id: FigureId,
    pub report: SweepReport,
    pub summaries: Vec<SummaryRow>,
    /// Present when a baseline was supplied.
    pub overlays: Vec<CellOverlay>,
}

impl FigureOutput {
    pub fn panels(&self, baseline: Option<&EcdfCurve>) -> Vec<Panel> {
        self.report
            .results()
            .filter_map(|(o, r)| {
                let sim = complementary_ecdf(&r.final_sizes, true).ok()?;
                Some(Panel {
                    title: cell_title(&o.coords),
                    sim,
                    baseline: baseline.cloned(),
                })
            })
            .collect()
    }
}

pub fn cell_title(coords: &[(String, crate::config::ParamValue)]) -> String {
    coords
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Per-result summaries for a report.
pub fn summarize(report: &SweepReport) -> Vec<SummaryRow> {
    report
        .results()
        .map(|(o, r)| SummaryRow {
            cell_id: o.cell,
            replicate: o.replicate,
            summary: skew_summary(&r.final_sizes).ok(),
        })
        .collect()
}

/// Runs the figure's grid and builds one overlay table per completed cell
/// when `baseline` is given.
pub fn reproduce_figure(
    id: FigureId,
    overrides: &RunParams,
    replicates: u32,
    jobs: usize,
    baseline: Option<&EcdfCurve>,
) -> Result<FigureOutput, EngineError> {
    let grid = figure_grid(id, overrides, replicates)?;
    let report = sweep(&grid, jobs)?;
    let summaries = summarize(&report);
    let overlays = match baseline {
        None => Vec::new(),
        Some(base) => report
            .results()
            .map(|(o, r)| {
                // Every run has at least one community, so this cannot fail.
                let sim = complementary_ecdf(&r.final_sizes, true).unwrap_or_default();
                CellOverlay {
                    cell: o.cell,
                    replicate: o.replicate,
                    title: cell_title(&o.coords),
                    rows: overlay(&sim, base),
                    sim,
                }
            })
            .collect(),
    };
    Ok(FigureOutput {
        id,
        report,
        summaries,
        overlays,
    })
}
