//! Serialized results. The JSON layout is documented in `docs/output-schema.md`.

use std::io::{BufRead, Write};

use fiducial_core::inference::CiMethod;
use fiducial_core::npmle::EvalRule;
use fiducial_core::ExperimentResult;
use serde::{Deserialize, Serialize};

use crate::args::Command;

pub const TOOL: &str = "fiducial";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    /// every resolved flag, defaults included
    pub flags: Command,
}

impl Provenance {
    pub fn new(flags: &Command) -> Self {
        let seed = match flags {
            Command::Fit(a) => Some(a.seed),
            Command::Simulate(a) => Some(a.seed),
            Command::Npmle(_) => None,
        };
        Self {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            seed,
            flags: flags.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputBundle {
    pub provenance: Provenance,
    pub result: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Fit(FitOutput),
    Npmle(NpmleOutput),
    Simulation(SimulationOutput),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub n: usize,
    pub uninformative: usize,
    /// samples whose outer interpolation values were pinned to a bound
    pub pinned_samples: usize,
    pub grid: Vec<f64>,
    pub estimates: Vec<CurveOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<SampleCurves>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOutput {
    pub method: CiMethod,
    pub alpha: f64,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCurves {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub interp: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassInterval {
    pub left: f64,
    /// `null` for `+inf`
    pub right: Option<f64>,
    pub atom: bool,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpmleOutput {
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub intervals: Vec<MassInterval>,
    pub rule: EvalRule,
    pub grid: Vec<f64>,
    /// F under `rule`
    pub point: Vec<f64>,
    /// smallest F compatible with the fit (right rule)
    pub lower: Vec<f64>,
    /// largest F compatible with the fit (left rule)
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub rows: Vec<ExperimentResult>,
}

impl OutputBundle {
    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)
    }

    pub fn read_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    fn write_provenance<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# tool: {} {}", self.provenance.tool, self.provenance.version)?;
        writeln!(w, "# provenance: {}", serde_json::to_string(&self.provenance)?)
    }

    /// Curve table `t,point,lower,upper` preceded by `#` provenance lines.
    /// A fit with both methods appends `conservative_lower,conservative_upper`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), csv::Error> {
        self.write_provenance(&mut w)?;
        let mut out = csv::Writer::from_writer(w);
        match &self.result {
            Payload::Fit(fit) => {
                let main = &fit.estimates[0];
                let extra = fit.estimates.get(1);
                let mut header = vec!["t", "point", "lower", "upper"];
                if extra.is_some() {
                    header.extend(["conservative_lower", "conservative_upper"]);
                }
                out.write_record(&header)?;
                for (k, t) in fit.grid.iter().enumerate() {
                    let mut row = vec![*t, main.point[k], main.lower[k], main.upper[k]];
                    if let Some(c) = extra {
                        row.extend([c.lower[k], c.upper[k]]);
                    }
                    out.write_record(row.iter().map(f64::to_string))?;
                }
            }
            Payload::Npmle(fit) => {
                out.write_record(["t", "point", "lower", "upper"])?;
                for (k, t) in fit.grid.iter().enumerate() {
                    out.write_record(
                        [*t, fit.point[k], fit.lower[k], fit.upper[k]]
                            .iter()
                            .map(f64::to_string),
                    )?;
                }
            }
            Payload::Simulation(sim) => {
                out.write_record([
                    "scenario", "n", "reps", "t0", "lr", "ur", "width", "mse_fiducial", "mse_npmle_i",
                    "mse_npmle_l", "mse_npmle_r",
                ])?;
                for r in &sim.rows {
                    out.write_record([
                        r.scenario.id().to_string(),
                        r.n.to_string(),
                        r.reps.to_string(),
                        r.t0.to_string(),
                        r.lr.to_string(),
                        r.ur.to_string(),
                        r.width.to_string(),
                        r.mse_fiducial.to_string(),
                        r.mse_npmle_i.to_string(),
                        r.mse_npmle_l.to_string(),
                        r.mse_npmle_r.to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Fixed-width table in percent (LR, UR) and `1e-4` units (MSEs).
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        self.write_provenance(&mut w)?;
        let Payload::Simulation(sim) = &self.result else {
            return Ok(());
        };
        writeln!(
            w,
            "{:>8} {:>6} {:>6} {:>6} {:>6} {:>7} {:>8} {:>8} {:>8} {:>8}",
            "scenario", "n", "reps", "LR", "UR", "WD", "MSE", "MLE-I", "MLE-L", "MLE-R"
        )?;
        for r in &sim.rows {
            writeln!(
                w,
                "{:>8} {:>6} {:>6} {:>6.1} {:>6.1} {:>7.3} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
                r.scenario.id(),
                r.n,
                r.reps,
                100.0 * r.lr,
                100.0 * r.ur,
                r.width,
                1e4 * r.mse_fiducial,
                1e4 * r.mse_npmle_i,
                1e4 * r.mse_npmle_l,
                1e4 * r.mse_npmle_r,
            )?;
        }
        Ok(())
    }
}

/// Provenance, header and numeric rows of a CSV export.
pub type CsvExport = (Provenance, Vec<String>, Vec<Vec<f64>>);

/// Reads the provenance line and data rows back from a CSV export.
pub fn read_csv<R: BufRead>(r: R) -> Result<CsvExport, String> {
    let mut provenance = None;
    let mut body = String::new();
    for line in r.lines() {
        let line = line.map_err(|e| e.to_string())?;
        match line.strip_prefix("# provenance: ") {
            Some(json) => provenance = Some(serde_json::from_str(json).map_err(|e| e.to_string())?),
            None if line.starts_with('#') => {}
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rdr
        .records()
        .map(|rec| {
            rec.map_err(|e| e.to_string())?
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| e.to_string()))
                .collect()
        })
        .collect::<Result<_, String>>()?;
    Ok((provenance.ok_or("missing provenance line")?, header, rows))
}
