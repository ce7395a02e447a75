//! Thin command-line front end over the library: `check` runs the full
//! pipeline, `flow` dumps one trajectory as CSV, `lattice` runs only the
//! period-lattice search, `report --schema` prints the report layout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use liouville::flows::{integrate_trajectory, IntegratorOptions};
use liouville::pipeline;
use liouville::report::{self, Stage, Status};
use liouville::spec::SystemSpec;

#[derive(Parser)]
#[command(name = "liouville", version, about = "Verification toolkit for integrable Hamiltonian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full check pipeline on a system file and emit a JSON report.
    Check {
        spec: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Also write <name>.report.json into this directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Integrate one named field from the representative point, CSV output.
    Flow {
        spec: PathBuf,
        /// Conserved-quantity name (Hamiltonian flow) or Casimir name
        /// (derived fiber flow).
        #[arg(long)]
        field: String,
        /// Flow time, may be negative.
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[command(flatten)]
        overrides: Overrides,
        /// Write <name>.<field>.csv into this directory instead of stdout.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run only the period-lattice search and print the basis.
    Lattice {
        spec: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Report facilities.
    Report {
        /// Print the published report schema.
        #[arg(long, required = true)]
        schema: bool,
    },
}

#[derive(Args)]
struct Overrides {
    /// Override the sampling seed from the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the sample count from the spec.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "tol-involution", value_name = "TOL")]
    tol_involution: Option<f64>,
    #[arg(long = "tol-closure", value_name = "TOL")]
    tol_closure: Option<f64>,
    #[arg(long = "tol-lattice", value_name = "TOL")]
    tol_lattice: Option<f64>,
    #[arg(long = "tol-darboux", value_name = "TOL")]
    tol_darboux: Option<f64>,
}

fn load(path: &Path, o: &Overrides) -> Result<(SystemSpec, String), String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let mut spec = SystemSpec::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(s) = o.seed {
        spec.seed = s;
    }
    if let Some(c) = o.samples {
        if c == 0 {
            return Err("--samples must be at least 1".into());
        }
        spec.sample_count = c;
    }
    if let Some(t) = o.tol_involution {
        spec.tolerances.involution = t;
    }
    if let Some(t) = o.tol_closure {
        spec.tolerances.closure = t;
    }
    if let Some(t) = o.tol_lattice {
        spec.tolerances.lattice = t;
    }
    if let Some(t) = o.tol_darboux {
        spec.tolerances.darboux = t;
    }
    Ok((spec, text))
}

fn write_out(dir: &Path, file: &str, contents: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let path = dir.join(file);
    fs::write(&path, contents).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn check(spec_path: &Path, overrides: &Overrides, out: Option<&Path>) -> Result<u8, String> {
    let (spec, text) = load(spec_path, overrides)?;
    let rep = pipeline::run(&spec, &text);
    let json = rep.to_json();
    print!("{json}");
    if let Some(dir) = out {
        write_out(dir, &format!("{}.report.json", rep.system.name), &json)?;
    }
    Ok(rep.exit_code as u8)
}

fn flow(
    spec_path: &Path,
    field_name: &str,
    t: f64,
    overrides: &Overrides,
    out: Option<&Path>,
) -> Result<u8, String> {
    let (spec, _) = load(spec_path, overrides)?;
    let field = pipeline::field_by_name(&spec, field_name).ok_or_else(|| {
        let mut known: Vec<&str> = spec.function_names.iter().map(String::as_str).collect();
        known.extend(spec.casimir_names.iter().map(String::as_str));
        format!("unknown field `{field_name}`; known: {}", known.join(", "))
    })?;
    let start = pipeline::representative_point(&spec);
    let opts = IntegratorOptions::with_tol(spec.tolerances.integrator);
    let traj = match integrate_trajectory(field.as_ref(), &start, t, &opts) {
        Ok(tr) => tr,
        Err(e) => {
            eprintln!("flow of `{field_name}` failed: {e}");
            return Ok(2);
        }
    };
    let mut csv = Vec::new();
    traj.write_csv(&mut csv).map_err(|e| e.to_string())?;
    let csv = String::from_utf8(csv).expect("csv is ascii");
    match out {
        Some(dir) => write_out(dir, &format!("{}.{field_name}.csv", spec.name), &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn lattice(spec_path: &Path, overrides: &Overrides) -> Result<u8, String> {
    let (spec, _) = load(spec_path, overrides)?;
    if spec.lattice.is_none() {
        return Err("the spec has no [lattice] section".into());
    }
    let stage = pipeline::lattice_stage(&spec);
    match stage.status {
        Status::Skipped => Err(stage.reason.unwrap_or_else(|| "lattice skipped".into())),
        Status::Error => {
            eprintln!(
                "lattice search errored: {}",
                stage.reason.as_deref().unwrap_or("unknown")
            );
            Ok(3)
        }
        status => {
            print_lattice(&stage);
            Ok(if status == Status::Passed { 0 } else { 2 })
        }
    }
}

fn print_lattice(stage: &Stage<report::LatticeStage>) {
    let Some(data) = &stage.data else {
        if let Some(reason) = &stage.reason {
            println!("no lattice result: {reason}");
        }
        return;
    };
    println!(
        "legs [{}], m = {}, h = {}, fiber {}",
        data.legs.join(", "),
        data.m,
        data.h,
        data.fiber
    );
    if data.basis.is_empty() {
        println!("no returns found in the radius-{} box (not a proof)", data.search_radius);
    }
    for (b, r) in data.basis.iter().zip(&data.residuals) {
        let entries: Vec<String> = b.iter().map(|x| format!("{x:.9}")).collect();
        println!(
            "  ({})  residual {:.3e} (tol {:.1e})",
            entries.join(", "),
            r.value,
            r.tol
        );
    }
    if let Some(reason) = &stage.reason {
        println!("FAILED: {reason}");
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    match &cli.command {
        Command::Check {
            spec,
            overrides,
            out,
        } => check(spec, overrides, out.as_deref()),
        Command::Flow {
            spec,
            field,
            t,
            overrides,
            out,
        } => flow(spec, field, *t, overrides, out.as_deref()),
        Command::Lattice { spec, overrides } => lattice(spec, overrides),
        Command::Report { schema } => {
            if *schema {
                print!("{}", report::SCHEMA);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
