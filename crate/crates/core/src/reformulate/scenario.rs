use crate::model::{CcProgram, Relation, ScenarioSet};
use crate::program::{DeterministicProgram, Method, Provenance};

use super::{frame_program, row_at, ReformError};

/// `(SP)_N`: every inner row enforced at every scenario.
pub fn scenario_problem(
    prog: &CcProgram,
    scen: &ScenarioSet,
) -> Result<DeterministicProgram, ReformError> {
    if scen.dim() != prog.d() {
        return Err(ReformError::ScenarioDim {
            expected: prog.d(),
            got: scen.dim(),
        });
    }
    Ok(scenario_problem_from(prog, scen.iter().enumerate()))
}

/// Scenario program over an arbitrary (possibly empty) list of
/// `(label, ξ)` pairs; labels name the rows.
pub fn scenario_problem_from<'a>(
    prog: &CcProgram,
    scenarios: impl IntoIterator<Item = (usize, &'a [f64])>,
) -> DeterministicProgram {
    let mut dp = frame_program(
        prog.frame(), Provenance::new(Method::Scenario, "", None));
    let mut count = 0;
    for (j, xi) in scenarios {
        count += 1;
        for (i, row) in prog.rows().iter().enumerate() {
            dp.add_row(format!("sc_{}_{}", j + 1, i + 1), row_at(row, xi), Relation::Le);
        }
    }
    dp.provenance.scenarios = Some(count);
    dp
}
