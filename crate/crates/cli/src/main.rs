use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use crpsdecomp::io::{
    prepare_input, render_mcb_dsc_svg, run_decompose, run_validate, Format, InputDocument, ReportDocument,
    TruncationOptions,
};
use crpsdecomp::{Method, QsMode};

const THREADS_VAR: &str = "CRPSDECOMP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "crpsdecomp", version, about = "Decompose mean CRPS into miscalibration, discrimination and uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose the mean CRPS of a forecast collection.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: InputFormat,
        /// Comma-separated subset of ct,iso,bs,qs,hb,hb-orig, or `all`.
        #[arg(long, default_value = "all")]
        methods: String,
        /// Tail tolerance for threshold selection.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(long)]
        grid_size: Option<usize>,
        /// `exact`, `auto` or `grid:N`.
        #[arg(long, default_value = "auto")]
        qs_mode: String,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        output_format: OutputFormat,
    },
    /// Draw an MCB-DSC plot from one or more JSON reports.
    Plot {
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Put DSC on the x-axis and MCB on the y-axis.
        #[arg(long)]
        swap_axes: bool,
    },
    /// Audit the decomposition inequalities and cross-check against oracles.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: InputFormat,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_methods(spec: &str) -> anyhow::Result<Vec<Method>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Method::ALL.to_vec());
    }
    let methods = spec
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Method>().with_context(|| format!("unknown method '{s}'")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if methods.is_empty() {
        bail!("no methods given");
    }
    Ok(methods)
}

fn read_document(path: &Path, format: InputFormat) -> anyhow::Result<InputDocument> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let format = match format {
        InputFormat::Json => Format::Json,
        InputFormat::Csv => Format::Csv,
    };
    InputDocument::parse(&bytes, format).with_context(|| format!("invalid input {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var(THREADS_VAR) {
        let n: usize = value
            .parse()
            .with_context(|| format!("{THREADS_VAR} must be a positive integer, got '{value}'"))?;
        if n == 0 {
            bail!("{THREADS_VAR} must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Returns whether every check passed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Decompose {
            input,
            format,
            methods,
            epsilon,
            a,
            b,
            grid_size,
            qs_mode,
            output,
            output_format,
        } => {
            let methods = parse_methods(&methods)?;
            let qs_mode: QsMode = qs_mode.parse()?;
            let doc = read_document(&input, format)?;
            let prepared = prepare_input(
                &doc,
                &TruncationOptions {
                    epsilon,
                    a,
                    b,
                    grid_size,
                },
            )?;
            let report = run_decompose(&prepared, &methods, qs_mode)?;
            let text = match output_format {
                OutputFormat::Json => report.to_json() + "\n",
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Table => report.to_table(),
            };
            emit(output.as_deref(), &text)?;
            Ok(true)
        }
        Command::Plot {
            input,
            output,
            swap_axes,
        } => {
            let reports = input
                .iter()
                .map(|path| {
                    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
                    ReportDocument::from_json(&bytes).with_context(|| format!("invalid report {}", path.display()))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let svg = render_mcb_dsc_svg(&reports, swap_axes)?;
            emit(Some(&output), &svg)?;
            Ok(true)
        }
        Command::Validate { input, format, seed } => {
            let doc = read_document(&input, format)?;
            let prepared = prepare_input(&doc, &TruncationOptions::default())?;
            let report = run_validate(&prepared.cases, seed)?;
            print!("{}", report.text);
            Ok(report.ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
