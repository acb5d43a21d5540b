use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use fiducial_core::gibbs::{self, GibbsConfig};
use fiducial_core::inference::{estimate, CiMethod};
use fiducial_core::npmle::{fit_em, EmOptions, EvalRule};
use fiducial_core::simulation::{run_experiment, ExperimentConfig, Scenario};
use fiducial_core::{default_grid, parse_dataset, Dataset, TimeGrid};

use crate::args::{Command, FitArgs, Format, MethodArg, NpmleArgs, RuleArg, SimulateArgs, TableFormat};
use crate::bundle::{
    CurveOutput, FitOutput, MassInterval, NpmleOutput, OutputBundle, Payload, Provenance, SampleCurves,
    SimulationOutput,
};
use crate::CliError;

fn read_input(path: &Path) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let ds = parse_dataset(file).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let skipped = ds.uninformative_count();
    if skipped > 0 {
        eprintln!("warning: {skipped} row(s) are (0, inf) and carry no information");
    }
    Ok(ds)
}

fn grid_for(ds: &Dataset, intervals: u32) -> Result<TimeGrid, CliError> {
    default_grid(ds, intervals as usize + 1).map_err(|e| CliError::Input(e.to_string()))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(bundle: &OutputBundle, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let mut w = open_out(out)?;
    match format {
        Format::Json => bundle.write_json(&mut w)?,
        Format::Csv => bundle.write_csv(&mut w).map_err(|e| CliError::Io(e.into()))?,
    }
    w.flush()?;
    Ok(())
}

pub fn fit(args: &FitArgs, flags: &Command) -> Result<OutputBundle, CliError> {
    if args.keep_samples && args.format == Format::Csv {
        return Err(CliError::Usage("--keep-samples requires --format json".into()));
    }
    let ds = read_input(&args.input)?;
    let grid = grid_for(&ds, args.grid_size)?;
    let cfg = GibbsConfig {
        n_burn: args.burn_in as usize,
        n_mcmc: args.n_mcmc as usize,
        seed: args.seed,
    };
    let samples = gibbs::run(&ds, &grid, &cfg).map_err(|e| CliError::Numerical(e.to_string()))?;

    let methods: &[CiMethod] = match args.method {
        MethodArg::Interpolation => &[CiMethod::Interpolation],
        MethodArg::Conservative => &[CiMethod::Conservative],
        MethodArg::Both => &[CiMethod::Interpolation, CiMethod::Conservative],
    };
    let estimates = methods
        .iter()
        .map(|&m| {
            let est = estimate(&samples, &grid, args.alpha, m).map_err(|e| CliError::Numerical(e.to_string()))?;
            Ok(CurveOutput {
                method: m,
                alpha: args.alpha,
                point: est.point,
                lower: est.ci_lower,
                upper: est.ci_upper,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let pinned_samples = samples.iter().filter(|s| s.pinned_endpoints).count();
    let kept = args.keep_samples.then(|| {
        samples
            .iter()
            .map(|s| SampleCurves {
                lower: s.lower.clone(),
                upper: s.upper.clone(),
                interp: s.interp.clone(),
            })
            .collect()
    });
    Ok(OutputBundle {
        provenance: Provenance::new(flags),
        result: Payload::Fit(FitOutput {
            n: ds.len(),
            uninformative: ds.uninformative_count(),
            pinned_samples,
            grid: grid.times().to_vec(),
            estimates,
            samples: kept,
        }),
    })
}

pub fn npmle(args: &NpmleArgs, flags: &Command) -> Result<OutputBundle, CliError> {
    let ds = read_input(&args.input)?;
    let grid = grid_for(&ds, args.grid_size)?;
    let fit = fit_em(
        &ds,
        EmOptions {
            tol: args.tol,
            max_iter: args.max_iter as usize,
            accelerate: !args.plain,
        },
    );
    if !fit.converged {
        eprintln!(
            "warning: self-consistency did not converge within {} iterations",
            fit.iterations
        );
    }
    if !fit.log_likelihood.is_finite() {
        return Err(CliError::Numerical("log-likelihood is not finite".into()));
    }
    let rule = match args.rule {
        RuleArg::Interpolation => EvalRule::Interpolation,
        RuleArg::Left => EvalRule::Left,
        RuleArg::Right => EvalRule::Right,
    };
    let curve = |r: EvalRule| grid.times().iter().map(|&t| fit.evaluate(t, r)).collect::<Vec<_>>();
    let intervals = fit
        .intervals
        .as_slice()
        .iter()
        .zip(&fit.masses)
        .map(|(j, &mass)| MassInterval {
            left: j.left,
            right: j.right.is_finite().then_some(j.right),
            atom: j.atom,
            mass,
        })
        .collect();
    Ok(OutputBundle {
        provenance: Provenance::new(flags),
        result: Payload::Npmle(NpmleOutput {
            n: ds.len(),
            converged: fit.converged,
            iterations: fit.iterations,
            log_likelihood: fit.log_likelihood,
            intervals,
            rule,
            grid: grid.times().to_vec(),
            point: curve(rule),
            lower: curve(EvalRule::Right),
            upper: curve(EvalRule::Left),
        }),
    })
}

pub fn simulate(args: &SimulateArgs, flags: &Command) -> Result<OutputBundle, CliError> {
    let base = ExperimentConfig {
        reps: args.reps as usize,
        n_burn: args.burn_in as usize,
        n_mcmc: args.n_mcmc as usize,
        seed: args.seed,
        alpha: args.alpha,
        ..ExperimentConfig::default()
    };
    let jobs = args.jobs.map(|j| j as usize);
    let mut rows = Vec::new();
    for &id in &args.scenario {
        let scenario = Scenario::from_id(id).map_err(|e| CliError::Usage(e.to_string()))?;
        for &n in &args.n {
            let cfg = ExperimentConfig { n: n as usize, ..base };
            let row = run_experiment(scenario, &cfg, jobs).map_err(|e| CliError::Numerical(e.to_string()))?;
            if row.npmle_nonconverged > 0 {
                eprintln!(
                    "warning: scenario {id}, n = {n}: NPMLE did not converge in {} replicate(s)",
                    row.npmle_nonconverged
                );
            }
            rows.push(row);
        }
    }
    Ok(OutputBundle {
        provenance: Provenance::new(flags),
        result: Payload::Simulation(SimulationOutput { rows }),
    })
}

pub fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Fit(a) => emit(&fit(a, command)?, a.format, a.out.as_deref()),
        Command::Npmle(a) => emit(&npmle(a, command)?, a.format, a.out.as_deref()),
        Command::Simulate(a) => {
            let bundle = simulate(a, command)?;
            let mut w = open_out(a.out.as_deref())?;
            match a.format {
                TableFormat::Table => bundle.write_table(&mut w)?,
                TableFormat::Json => bundle.write_json(&mut w)?,
            }
            w.flush()?;
            Ok(())
        }
    }
}
