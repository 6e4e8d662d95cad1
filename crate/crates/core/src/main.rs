use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mlgen::pipeline::select_machine;
use mlgen::{
    check, eval_for_block, generate, CommandValue, ContextRegistry, EvalRequestError, GenerateError, GenerateOptions,
    GenerationReport, MappingConfig, Model, QualifiedName,
};

#[derive(Parser)]
#[command(name = "mlgen", version, about = "Generate Jupyter notebooks from stereotyped block models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a notebook for one state machine.
    Generate(GenerateArgs),
    /// Report problems without generating anything; exits 1 if any are found.
    Check(CheckArgs),
    /// Print model elements or the computed block contexts.
    Inspect(InspectArgs),
    /// Evaluate one model command against a block's context.
    Eval(EvalArgs),
}

#[derive(Args)]
struct Inputs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    mapping: PathBuf,
    #[arg(long, value_name = "DIR", env = "MLGEN_TEMPLATES")]
    templates: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, value_name = "NAME")]
    machine: Option<String>,
    #[arg(long, value_name = "NAME")]
    kernel: Option<String>,
    /// External validator; `{file}` is replaced by the notebook path.
    #[arg(long, value_name = "CMD")]
    validate_cmd: Option<String>,
    /// Treat warnings as failures (the notebook is still written).
    #[arg(long)]
    strict: bool,
    /// Also write the report as JSON.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    inputs: Inputs,
}

#[derive(Clone, Copy, ValueEnum)]
enum InspectWhat {
    Blocks,
    Contexts,
    Machines,
}

#[derive(Args)]
struct InspectArgs {
    what: InspectWhat,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "NAME")]
    machine: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Qualified name of the block whose context is `THIS`.
    #[arg(long, value_name = "QNAME")]
    block: String,
    #[arg(long, value_name = "COMMAND")]
    command: String,
    /// With a mapping, predecessor snippets are rendered so OUTPUT resolves.
    #[arg(long, value_name = "FILE")]
    mapping: Option<PathBuf>,
    #[arg(long, value_name = "DIR", env = "MLGEN_TEMPLATES")]
    templates: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    machine: Option<String>,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CliResult = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    Model::load(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_mapping(path: &Path) -> Result<MappingConfig, Failure> {
    MappingConfig::parse(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn print_report(report: &GenerationReport) {
    print!("{report}");
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn run_generate(args: GenerateArgs) -> CliResult {
    let model = load_model(&args.inputs.model)?;
    let mapping = load_mapping(&args.inputs.mapping)?;
    let options = GenerateOptions {
        machine: args.machine,
        kernel: args.kernel,
        validate_cmd: args.validate_cmd,
        strict: args.strict,
    };
    match generate(&model, &mapping, &args.inputs.templates, &args.out, &options) {
        Ok(report) => {
            print_report(&report);
            if let Some(path) = &args.report {
                std::fs::write(path, report.to_json())
                    .map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(GenerateError::Strict(warnings)) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "error: {} warning(s) in strict mode; {} was written",
                warnings.len(),
                args.out.display()
            );
            Ok(ExitCode::FAILURE)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_check(args: CheckArgs) -> CliResult {
    let model = load_model(&args.inputs.model)?;
    let mapping = load_mapping(&args.inputs.mapping)?;
    let diagnostics = check(&model, &mapping, &args.inputs.templates);
    for d in &diagnostics {
        eprintln!("{d}");
    }
    if diagnostics.is_empty() {
        println!("ok");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} problem(s) found", diagnostics.len());
        Ok(ExitCode::FAILURE)
    }
}

fn run_inspect(args: InspectArgs) -> CliResult {
    let model = load_model(&args.model)?;
    match args.what {
        InspectWhat::Blocks => {
            for block in model.blocks() {
                let stereotypes: Vec<&str> = block.applied_stereotypes.iter().map(|a| a.stereotype.as_str()).collect();
                let parts: Vec<String> = block.parts.iter().map(ToString::to_string).collect();
                println!(
                    "{} [{}] parts: [{}]",
                    block.qualified_name,
                    stereotypes.join(", "),
                    parts.join(", ")
                );
            }
        }
        InspectWhat::Machines => {
            for machine in model.machines() {
                println!("{}", machine.name);
                for state in &machine.states {
                    println!("  {:>4}  {}  -> {}", state.order, state.name, state.block);
                }
            }
        }
        InspectWhat::Contexts => {
            let machine = select_machine(&model, args.machine.as_deref())?;
            let registry = ContextRegistry::build(&model, machine)?;
            for ctx in registry.iter() {
                let connected: Vec<String> = ctx.connected.iter().map(ToString::to_string).collect();
                println!("{} {}", ctx.execution_order, ctx.block_ref);
                println!("  connected: [{}]", connected.join(", "));
                for name in ctx.attributes.keys() {
                    let value = registry.resolve_attribute(ctx, name)?;
                    println!("  {name} = {}", format_value(&value));
                }
                println!("  comments: {}", ctx.comments.len());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn format_value(value: &CommandValue) -> String {
    match value {
        CommandValue::Text(t) => t.clone(),
        list => serde_json::to_string(list).expect("command values serialize"),
    }
}

fn run_eval(args: EvalArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let block: QualifiedName = args.block.parse()?;
    let mapping = args.mapping.as_deref().map(load_mapping).transpose()?;
    let rendering = match (&mapping, args.templates.as_deref()) {
        (Some(m), Some(root)) => Some((m, root)),
        (Some(_), None) => return Err(Failure("--mapping needs --templates (or MLGEN_TEMPLATES)".into())),
        (None, _) => None,
    };
    match eval_for_block(&model, &block, &args.command, args.machine.as_deref(), rendering) {
        Ok(value) => {
            println!("{}", format_value(&value));
            Ok(ExitCode::SUCCESS)
        }
        Err(EvalRequestError::Parse(e)) => Err(Failure(format!(
            "{e}\n  {}\n  {}^",
            args.command,
            " ".repeat(e.offset)
        ))),
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Check(a) => run_check(a),
        Command::Inspect(a) => run_inspect(a),
        Command::Eval(a) => run_eval(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
