//! The results summary table, recomputed from the engine.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::exact::worst_case;
use crate::lowerbound::{named_distribution, optimal_deterministic_cost};
use crate::montecarlo::simulate;
use crate::protocols::Protocol;
use crate::scalar::consts;

/// Agreement required between a computed cell and its published value.
pub const CELL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub scenario: &'static str,
    pub column: &'static str,
    pub label: String,
    pub computed: Option<f64>,
    pub expected: Option<f64>,
    /// Text shown instead of a number for cells without a value.
    pub annotation: Option<&'static str>,
    pub pass: bool,
}

impl Cell {
    fn number(
        scenario: &'static str,
        column: &'static str,
        label: impl Into<String>,
        computed: f64,
        expected: f64,
    ) -> Self {
        Cell {
            scenario,
            column,
            label: label.into(),
            computed: Some(computed),
            expected: Some(expected),
            annotation: None,
            pass: (computed - expected).abs() <= CELL_TOLERANCE,
        }
    }

    fn note(scenario: &'static str, column: &'static str, annotation: &'static str) -> Self {
        Cell {
            scenario,
            column,
            label: String::new(),
            computed: None,
            expected: None,
            annotation: Some(annotation),
            pass: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1 {
    pub cells: Vec<Cell>,
    /// Monte Carlo spot check of randomized rounding at `x = 1/2`.
    pub simulation_check: Cell,
}

impl Table1 {
    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(|c| c.pass) && self.simulation_check.pass
    }

    pub fn render<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{:<44} {:<9} {:<22} {:>20} {:>20}  status",
            "scenario", "column", "cell", "computed", "expected"
        )?;
        for c in self
            .cells
            .iter()
            .chain(std::iter::once(&self.simulation_check))
        {
            let (computed, expected) = match (c.computed, c.expected, c.annotation) {
                (Some(a), Some(b), _) => (format!("{a:.15}"), format!("{b:.15}")),
                (_, _, Some(note)) => (note.to_string(), String::new()),
                _ => (String::new(), String::new()),
            };
            let status = if c.annotation.is_some() {
                "-"
            } else if c.pass {
                "pass"
            } else {
                "FAIL"
            };
            writeln!(
                out,
                "{:<44} {:<9} {:<22} {:>20} {:>20}  {status}",
                c.scenario, c.column, c.label, computed, expected
            )?;
        }
        writeln!(
            out,
            "{}",
            if self.all_pass() {
                "all cells pass"
            } else {
                "some cells FAIL"
            }
        )
    }
}

const UNBIASED: &str = "unbiased";
const BIASED: &str = "biased";

/// Recomputes every numeric cell of the summary table.
pub fn table1() -> Result<Table1> {
    let s2 = consts::sqrt2::<f64>();
    let s5 = consts::sqrt5::<f64>();
    let s10 = consts::sqrt10::<f64>();
    let mut cells = Vec::new();

    let none = "no shared randomness";
    cells.push(Cell::number(
        none,
        UNBIASED,
        "randomized rounding",
        worst_case(&Protocol::randomized_rounding())?.cost,
        0.25,
    ));
    cells.push(Cell::number(
        none,
        BIASED,
        "deterministic rounding",
        worst_case(&Protocol::deterministic_rounding())?.cost,
        1.0 / 16.0,
    ));

    let private = "l-bit shared, private randomness";
    for (l, expected) in [(1u32, 1.0 / 8.0), (8, 1.0 / 12.0 + 1.0 / 393216.0)] {
        let cost = worst_case(&Protocol::shared_unbiased(l)?)?.cost;
        cells.push(Cell::number(
            private,
            UNBIASED,
            format!("l={l}"),
            cost,
            expected,
        ));
    }
    cells.push(Cell::note(private, BIASED, "Open"));

    let no_private = "l-bit shared, no private randomness";
    cells.push(Cell::note(no_private, UNBIASED, "Impossible"));
    cells.push(Cell::number(
        no_private,
        BIASED,
        "l=1",
        worst_case(&Protocol::biased_shared(1)?)?.cost,
        1.0 / 18.0,
    ));
    cells.push(Cell::number(
        no_private,
        BIASED,
        "l=8 (hybrid)",
        worst_case(&Protocol::hybrid_one_byte())?.cost,
        (1830635.0 - 1232945.0 * s2) / 1858592.0,
    ));
    cells.push(Cell::number(
        no_private,
        BIASED,
        "l->inf (hybrid)",
        worst_case(&Protocol::hybrid_limit())?.cost,
        (6.0 * s10 + 11.0 * s5 - 18.0 * s2 - 17.0) / 24.0,
    ));

    let golden = optimal_deterministic_cost(&named_distribution::<f64>("golden4")?, 1).bound;
    cells.push(Cell::number(
        "lower bound, x in [0,1]",
        "both",
        "golden4 prior",
        golden,
        (5.0 * s5 - 11.0) / 4.0,
    ));

    let three = "x in {0,1/2,1}, 1 shared bit";
    cells.push(Cell::number(
        three,
        UNBIASED,
        "three-point unbiased",
        worst_case(&Protocol::three_point_unbiased())?.cost,
        1.0 / 16.0,
    ));
    cells.push(Cell::number(
        three,
        BIASED,
        "three-point biased",
        worst_case(&Protocol::three_point_biased())?.cost,
        0.75 - 1.0 / s2,
    ));

    let sqrt2 = optimal_deterministic_cost(&named_distribution::<f64>("sqrt2-3")?, 1).bound;
    cells.push(Cell::number(
        "lower bound, x in {0,1/2,1}",
        "both",
        "sqrt2-3 prior",
        sqrt2,
        0.75 - 1.0 / s2,
    ));

    let sim = simulate(&Protocol::<f64>::randomized_rounding(), 0.5, 100_000, 0)?;
    let mut simulation_check = Cell::number(
        "Monte Carlo spot check",
        UNBIASED,
        "rr, x=1/2, 1e5 trials",
        sim.mse,
        0.25,
    );
    simulation_check.pass = (sim.mse - 0.25).abs() <= 4.0 * sim.mse_std_error + 1e-12;

    Ok(Table1 {
        cells,
        simulation_check,
    })
}
