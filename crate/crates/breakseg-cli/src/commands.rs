use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;

use breakseg::annotation::{incomplete_error, negative_regions, zero_one_error};
use breakseg::breakpoint::{breakpoint_error, GuessSet};
use breakseg::io;
use breakseg::segment::{segment_least_squares, smoothed_breaks};
use breakseg::sim::{SampleScheme, TrueModel};
use breakseg::sweep::{experiments, sweep_exponents, sweep_flsa, SweepTable};
use breakseg::tv::flsa_solve;

use crate::{
    AnnotationErrorArgs, CliError, ExactErrorArgs, ExperimentArg, SchemeArg, SegmentArgs,
    SimulateArgs, SweepArgs,
};

type CliResult = Result<(), CliError>;

/// Open an output file up front so path problems surface before any work.
fn create_output(path: &str) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot write '{path}': {e}")))
}

fn open_input(path: &str) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Usage(format!("cannot read '{path}': {e}")))
}

fn float_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn simulate(args: &SimulateArgs) -> CliResult {
    let model = TrueModel::evenly_spaced(args.positions, args.spacing, &args.means, &args.sds)?;
    let scheme = match args.scheme {
        SchemeArg::UniformSpaced => SampleScheme::UniformSpaced,
        SchemeArg::UniformRandom => SampleScheme::UniformRandom,
    };
    let signal = model.sample(args.density, args.seed, scheme)?;

    let mut signal_out = create_output(&args.out_signal)?;
    let mut truth_out = create_output(&args.out_truth)?;

    let scheme_name = match args.scheme {
        SchemeArg::UniformSpaced => "uniform-spaced",
        SchemeArg::UniformRandom => "uniform-random",
    };
    let comments = vec![
        format!(
            "simulate spacing={} d={} scheme={scheme_name}",
            args.spacing, args.density
        ),
        format!(
            "means={} sds={}",
            float_list(&args.means),
            float_list(&args.sds)
        ),
    ];
    io::write_signal_csv(&mut signal_out, &signal, &comments)?;
    io::write_model_json(
        &mut truth_out,
        &model,
        Some(json!({
            "seed": args.seed,
            "spacing": args.spacing,
            "d": args.density,
            "scheme": scheme_name,
            "means": args.means,
            "sds": args.sds,
        })),
    )?;
    signal_out
        .flush()
        .and(truth_out.flush())
        .map_err(|e| CliError::Internal(e.to_string()))?;
    eprintln!(
        "wrote {} ({} samples) and {} ({} breakpoints)",
        args.out_signal,
        signal.len(),
        args.out_truth,
        model.breakpoints().len()
    );
    Ok(())
}

pub fn segment(args: &SegmentArgs) -> CliResult {
    if args.kmax.is_none() && args.flsa.is_none() {
        return Err(CliError::Usage(
            "nothing to do: pass --kmax and/or --flsa".to_string(),
        ));
    }
    let signal = io::read_signal_csv(open_input(&args.input)?)?;
    let mut output = serde_json::Map::new();

    if let Some(kmax) = args.kmax {
        let fit = segment_least_squares(signal.values(), kmax)?;
        let models: Vec<serde_json::Value> = fit
            .models()
            .iter()
            .map(|m| {
                json!({
                    "k": m.k,
                    "changes": m.changes,
                    "means": m.means,
                    "sse": m.sse,
                    "sigma2": m.sse / signal.len() as f64,
                })
            })
            .collect();
        output.insert("models".to_string(), json!(models));
    }

    if let Some(lambda2) = args.flsa {
        let smoothed = flsa_solve(signal.values(), lambda2)?;
        let breaks = smoothed_breaks(&smoothed, signal.positions())?;
        output.insert(
            "flsa".to_string(),
            json!({
                "lambda2": lambda2,
                "smoothed": smoothed.values(),
                "breaks": breaks.positions(),
            }),
        );
    }

    println!("{}", serde_json::Value::Object(output));
    Ok(())
}

/// Parse a one-integer-per-line guess file, de-duplicating with a warning
/// and rejecting out-of-range entries with their line number. `positions`
/// bounds guesses to `1..=P-1` when the caller knows P.
fn read_guesses(path: &str, positions: Option<usize>) -> Result<GuessSet, CliError> {
    let entries = io::read_position_list(open_input(path)?)?;
    for (line, value) in &entries {
        let out_of_range = match positions {
            Some(p) => *value < 1 || *value > p - 1,
            None => *value < 1,
        };
        if out_of_range {
            return Err(CliError::Usage(format!(
                "{path}: line {line}: guess {value} outside 1..={}",
                positions.map_or("..".to_string(), |p| (p - 1).to_string())
            )));
        }
    }
    let (set, dropped) = GuessSet::new_dedup(entries.into_iter().map(|(_, v)| v).collect());
    if dropped > 0 {
        eprintln!("warning: {path}: dropped {dropped} duplicate guess(es)");
    }
    Ok(set)
}

pub fn exact_error(args: &ExactErrorArgs) -> CliResult {
    if args.positions < 2 {
        return Err(CliError::Usage(format!(
            "P must be >= 2; got {}",
            args.positions
        )));
    }
    let mut breaks: Vec<usize> = io::read_position_list(open_input(&args.breaks)?)?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    breaks.sort_unstable();
    let guesses = read_guesses(&args.guesses, Some(args.positions))?;
    let breakdown = breakpoint_error(&breaks, args.positions, &guesses)?;
    println!(
        "{}",
        serde_json::to_string(&breakdown).expect("breakdown serializes")
    );
    Ok(())
}

pub fn annotation_error(args: &AnnotationErrorArgs) -> CliResult {
    let mut set = io::read_annotations_csv(open_input(&args.annotations)?)?;
    if let Some(p) = args.with_negatives {
        set = set.union(&negative_regions(&set, p)?);
    }
    // Without a P, guesses beyond every region are legal and cost nothing.
    let guesses = read_guesses(&args.guesses, args.with_negatives)?;
    if args.zero_one {
        println!(
            "{}",
            json!({ "incorrect_regions": zero_one_error(&set, &guesses) })
        );
    } else {
        let counts = incomplete_error(&set, &guesses);
        println!(
            "{}",
            serde_json::to_string(&counts).expect("counts serialize")
        );
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("grid '{spec}' must be lo:hi:step")));
    }
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad grid number '{s}'")))
    };
    let (lo, hi, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if !step.is_finite() || step <= 0.0 || hi < lo {
        return Err(CliError::Usage(format!(
            "grid '{spec}' must have lo <= hi and step > 0"
        )));
    }
    let n = ((hi - lo) / step).round() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

pub fn sweep(args: &SweepArgs) -> CliResult {
    let alpha_override = args.alpha_grid.as_deref().map(parse_grid).transpose()?;
    let beta_override = args.beta_grid.as_deref().map(parse_grid).transpose()?;
    let mut out = create_output(&args.out)?;
    if let Some(dir) = &args.curves_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create '{dir}': {e}")))?;
    }

    let (name, table): (&str, SweepTable) = match args.experiment {
        ExperimentArg::Density => (
            "density",
            sweep_exponents(
                &experiments::density_db(args.seed),
                &alpha_override.unwrap_or_else(experiments::density_alpha_grid),
                &beta_override.unwrap_or_else(|| vec![0.0]),
                args.with_variance,
                experiments::DENSITY_K_MAX,
            )?,
        ),
        ExperimentArg::Length => (
            "length",
            sweep_exponents(
                &experiments::length_db(args.seed),
                &alpha_override.unwrap_or_else(|| vec![0.0]),
                &beta_override.unwrap_or_else(experiments::length_beta_grid),
                args.with_variance,
                experiments::LENGTH_K_MAX,
            )?,
        ),
        ExperimentArg::Composite => (
            "composite",
            sweep_exponents(
                &experiments::composite_db(args.seed),
                &alpha_override.unwrap_or_else(experiments::composite_grid),
                &beta_override.unwrap_or_else(experiments::composite_grid),
                args.with_variance,
                experiments::COMPOSITE_K_MAX,
            )?,
        ),
        ExperimentArg::Flsa => (
            "flsa",
            sweep_flsa(
                &experiments::flsa_db(args.seed),
                &alpha_override.unwrap_or_else(experiments::flsa_alpha_grid),
                &experiments::flsa_lambda_grid(),
            )?,
        ),
    };

    let write_err = |e: std::io::Error| CliError::Internal(e.to_string());
    writeln!(out, "# experiment={name} seed={}", args.seed).map_err(write_err)?;
    writeln!(out, "alpha,beta,train_error,test_error,sd_test").map_err(write_err)?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.alpha, row.beta, row.train_error, row.test_error, row.sd_test
        )
        .map_err(write_err)?;
    }
    out.flush().map_err(write_err)?;

    if let Some(dir) = &args.curves_dir {
        for (i, (dump, lambda_hat)) in table
            .argmin_curves
            .iter()
            .zip(&table.argmin_lambdas)
            .enumerate()
        {
            let path = Path::new(dir).join(format!("curve_{i:03}.csv"));
            let mut curve_out = File::create(&path).map(BufWriter::new).map_err(|e| {
                CliError::Internal(format!("cannot write '{}': {e}", path.display()))
            })?;
            writeln!(
                curve_out,
                "# experiment={name} seed={} signal={i} lambda_hat={lambda_hat}",
                args.seed
            )
            .map_err(write_err)?;
            writeln!(curve_out, "lambda_lo,lambda_hi,k,error").map_err(write_err)?;
            for piece in dump {
                writeln!(
                    curve_out,
                    "{},{},{},{}",
                    piece.lambda_lo, piece.lambda_hi, piece.k, piece.error
                )
                .map_err(write_err)?;
            }
            curve_out.flush().map_err(write_err)?;
        }
    }

    println!(
        "argmin: alpha={} beta={} train_error={} test_error={}",
        table.argmin.alpha, table.argmin.beta, table.argmin.train_error, table.argmin.test_error
    );
    Ok(())
}
