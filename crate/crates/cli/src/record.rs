use std::io::Write;

use qcqp_conic::pipeline::Outcome;
use qcqp_conic::relax::ConeInventory;
use qcqp_conic::{Form, RelaxationKind, Status};
use serde::Serialize;

/// One solve: what was built, how big it was, and how it went.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub relax: String,
    pub form: String,
    pub status: String,
    /// Set only when the solve reached `Optimal`.
    pub objective: Option<f64>,
    pub soc: usize,
    pub psd_sides: Vec<usize>,
    pub nonneg: usize,
    pub free: usize,
    pub zero: usize,
    pub variables: usize,
    pub constraints: usize,
    pub iterations: usize,
    pub seconds: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
}

impl RunRecord {
    pub const HEADER: [&'static str; 17] = [
        "instance",
        "relax",
        "form",
        "status",
        "objective",
        "soc",
        "psd_sides",
        "nonneg",
        "free",
        "zero",
        "variables",
        "constraints",
        "iterations",
        "seconds",
        "primal_res",
        "dual_res",
        "gap",
    ];

    pub fn new(instance: &str, kind: RelaxationKind, form: Form, out: &Outcome) -> Self {
        let ConeInventory { nonneg, soc, psd_sides, free, zero } = out.program.inventory();
        let sol = &out.solution;
        let optimal = sol.status == Status::Optimal;
        Self {
            instance: instance.to_string(),
            relax: kind.to_string(),
            form: form.to_string(),
            status: format!("{:?}", sol.status),
            objective: if optimal { out.objective } else { None },
            soc,
            psd_sides,
            nonneg,
            free,
            zero,
            variables: out.standard.cols(),
            constraints: out.standard.rows(),
            iterations: sol.iterations,
            seconds: out.seconds(),
            primal_res: sol.residuals.primal,
            dual_res: sol.residuals.dual,
            gap: sol.residuals.gap,
        }
    }

    /// A row for a run that never reached the solver.
    pub fn failed(instance: &str, kind: RelaxationKind, form: Form, err: &str) -> Self {
        Self {
            instance: instance.to_string(),
            relax: kind.to_string(),
            form: form.to_string(),
            status: format!("Error: {err}"),
            objective: None,
            soc: 0,
            psd_sides: Vec::new(),
            nonneg: 0,
            free: 0,
            zero: 0,
            variables: 0,
            constraints: 0,
            iterations: 0,
            seconds: 0.0,
            primal_res: f64::NAN,
            dual_res: f64::NAN,
            gap: f64::NAN,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.objective.is_some()
    }

    pub fn fields(&self) -> Vec<String> {
        let sides: Vec<String> = self.psd_sides.iter().map(|s| s.to_string()).collect();
        vec![
            self.instance.clone(),
            self.relax.clone(),
            self.form.clone(),
            self.status.clone(),
            self.objective.map(|v| format!("{v:.10e}")).unwrap_or_default(),
            self.soc.to_string(),
            sides.join(";"),
            self.nonneg.to_string(),
            self.free.to_string(),
            self.zero.to_string(),
            self.variables.to_string(),
            self.constraints.to_string(),
            self.iterations.to_string(),
            format!("{:.6}", self.seconds),
            format!("{:.3e}", self.primal_res),
            format!("{:.3e}", self.dual_res),
            format!("{:.3e}", self.gap),
        ]
    }
}

/// A comparison row: the record plus cross-relaxation columns.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    #[serde(flatten)]
    pub record: RunRecord,
    /// `OK` when the objective matches the instance's reference objective,
    /// `DIFF` when it does not, `-` when there is nothing to compare.
    pub agreement: String,
    /// F-SOCP time over S-SOCP time on the same instance and form.
    pub speed_ratio: Option<f64>,
}

impl CompareRow {
    pub fn header() -> Vec<&'static str> {
        let mut h = RunRecord::HEADER.to_vec();
        h.extend(["agreement", "speed_ratio"]);
        h
    }

    pub fn fields(&self) -> Vec<String> {
        let mut f = self.record.fields();
        f.push(self.agreement.clone());
        f.push(self.speed_ratio.map(|r| format!("{r:.3}")).unwrap_or_default());
        f
    }
}

pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_markdown<W: Write>(mut out: W, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    writeln!(out, "| {} |", header.join(" | "))?;
    writeln!(out, "|{}|", vec!["---"; header.len()].join("|"))?;
    for r in rows {
        writeln!(out, "| {} |", r.join(" | "))?;
    }
    Ok(())
}
