//! End-to-end helpers: build a relaxation from homogenized data, lower it,
//! solve it and map the solution back.

use std::time::Instant;

use crate::error::Result;
use crate::graph::{chordal_extension, maximal_cliques, overlap_set, Graph};
use crate::model::{aggregate_pattern, HomogenizedData};
use crate::relax::{
    build_dual_fsocp, build_dual_ssocp, build_fsdp, build_fsocp, build_ssdp, build_ssocp,
    ConicProgram, RelaxationKind,
};
use crate::solver::{solve, Solution, SolverConfig, Status};
use crate::standard::{to_standard_form, Form, StandardForm};

/// Builds `kind` for `data`; sparse variants use the aggregate pattern
/// (and its chordal extension for the SDP).
pub fn build(data: &HomogenizedData, kind: RelaxationKind) -> Result<ConicProgram> {
    let pattern = aggregate_pattern(data);
    match kind {
        RelaxationKind::Fsdp => Ok(build_fsdp(data)),
        RelaxationKind::Fsocp => Ok(build_fsocp(data)),
        RelaxationKind::Ssocp => build_ssocp(data, &pattern),
        RelaxationKind::DualFsocp => Ok(build_dual_fsocp(data)),
        RelaxationKind::DualSsocp => build_dual_ssocp(data, &pattern),
        RelaxationKind::Ssdp => {
            let ext = chordal_extension(&Graph::from_pattern(&pattern));
            let cs = maximal_cliques(&ext)?;
            let u = overlap_set(&cs);
            build_ssdp(data, &ext, &cs, &u)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub program: ConicProgram,
    pub standard: StandardForm,
    pub solution: Solution,
    /// Program objective in its own sense, when solved to optimality.
    pub objective: Option<f64>,
    /// Program variable values recovered from the solver output.
    pub values: Vec<f64>,
    pub build_seconds: f64,
    pub solve_seconds: f64,
}

impl Outcome {
    pub fn status(&self) -> Status {
        self.solution.status
    }

    /// Total build + lowering + solve time.
    pub fn seconds(&self) -> f64 {
        self.build_seconds + self.solve_seconds
    }
}

/// Builds, lowers to `form`, and solves.
pub fn run(
    data: &HomogenizedData,
    kind: RelaxationKind,
    form: Form,
    cfg: &SolverConfig,
) -> Result<Outcome> {
    let t0 = Instant::now();
    let program = build(data, kind)?;
    let standard = to_standard_form(&program, form)?;
    let build_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let solution = solve(&standard, cfg)?;
    let solve_seconds = t1.elapsed().as_secs_f64();
    let objective = (solution.status == Status::Optimal).then(|| standard.program_objective(&solution));
    let values = standard.recover(&solution).unwrap_or_default();
    Ok(Outcome {
        program,
        standard,
        solution,
        objective,
        values,
        build_seconds,
        solve_seconds,
    })
}
