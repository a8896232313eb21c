// SPDX-License-Identifier: Apache-2.0

//! `treegate` command-line tool: fit a feature quantizer, quantize data,
//! compile a model to Verilog, and check or evaluate the integer model.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use treegate::dataset::{load_csv, Dataset, LabelColumn};
use treegate::ensemble::load_model_file;
use treegate::eval::{cross_check, evaluate_dataset, evaluate_float};
use treegate::netlist::{debug_dump, stats};
use treegate::verilog::{emit, vector_file_contents, write_atomic, write_files, EmitOptions, DEFAULT_TOP_NAME};
use treegate::{build_netlist, quantize, Exec, FeatureQuantizer, Netlist, PipelineConfig, QuantizedEnsemble};

/// Exit code for a disagreement between the software and hardware models.
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "treegate",
    version,
    about = "Compile gradient-boosted tree classifiers to pipelined Verilog"
)]
struct Cli {
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a min-max feature quantizer on a CSV file.
    FitQuantizer {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        w_feature: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the quantized integer form of a CSV file.
    QuantizeData {
        #[arg(long)]
        quantizer: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit RTL for a model and print netlist statistics.
    Compile {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "0,0,0")]
        pipeline: PipelineConfig,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = DEFAULT_TOP_NAME)]
        top: String,
        /// Also emit `<top>_tb.v`, reading vectors from the `--vectors` path.
        #[arg(long, requires = "vectors")]
        emit_testbench: bool,
        /// Vector file path as the testbench should open it.
        #[arg(long, requires = "emit_testbench")]
        vectors: Option<PathBuf>,
    },
    /// Write a testbench vector file (inputs and expected outputs) for a CSV file.
    Vectors {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the integer model on a CSV file.
    Predict {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        data: DataArgs,
        /// Use the float model on quantized inputs instead.
        #[arg(long)]
        float: bool,
        /// Print the full report (per-row predictions included) as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Cross-check evaluator, netlist interpreter and cycle simulator on a CSV file.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "0,0,0")]
        pipeline: PipelineConfig,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Print netlist statistics as JSON.
    Report {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "0,0,0")]
        pipeline: PipelineConfig,
        /// Print a readable netlist dump instead.
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// XGBoost JSON or canonical ensemble JSON.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    quantizer: PathBuf,
    #[arg(long)]
    w_tree: u32,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// last, first or none.
    #[arg(long, default_value = "last")]
    label_col: LabelColumn,
    /// Skip the first CSV line.
    #[arg(long)]
    header: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_csv(&self.data, self.label_col, self.header).with_context(|| format!("{}", self.data.display()))
    }
}

struct Loaded {
    quantizer: FeatureQuantizer,
    ensemble: treegate::GbdtEnsemble,
    q: QuantizedEnsemble,
}

impl ModelArgs {
    fn load(&self) -> Result<Loaded> {
        let quantizer =
            FeatureQuantizer::load(&self.quantizer).with_context(|| format!("{}", self.quantizer.display()))?;
        let ensemble = load_model_file(&self.model).with_context(|| format!("{}", self.model.display()))?;
        if ensemble.num_features != quantizer.num_features() {
            bail!(
                "model has {} features but the quantizer has {}",
                ensemble.num_features,
                quantizer.num_features()
            );
        }
        let q = quantize(&ensemble, quantizer.w_feature, self.w_tree)?;
        Ok(Loaded { quantizer, ensemble, q })
    }

    fn netlist(&self, pipeline: PipelineConfig) -> Result<(Loaded, Netlist)> {
        let loaded = self.load()?;
        let n = build_netlist(&loaded.q, pipeline)?;
        Ok((loaded, n))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text)?;
    Ok(())
}

fn quantized_csv(quantizer: &FeatureQuantizer, data: &Dataset, label: LabelColumn, exec: Exec) -> String {
    let rows = quantizer.transform_batch(&data.rows, exec);
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(u32::to_string).collect();
        if let Some(labels) = &data.labels {
            let l = labels[i].to_string();
            match label {
                LabelColumn::First => fields.insert(0, l),
                _ => fields.push(l),
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn summary(n: &Netlist) -> String {
    let s = stats(n);
    let mut out = String::new();
    let _ = writeln!(out, "keys            {}", s.num_keys);
    let _ = writeln!(out, "trees           {}", s.num_trees);
    let _ = writeln!(
        out,
        "paths           {} ({} in selectors)",
        s.total_paths, s.selector_paths
    );
    let _ = writeln!(out, "adder depth     {}", s.adder_depth);
    let _ = writeln!(out, "output width    {}", s.output_width);
    let _ = writeln!(out, "register bits   {}", s.register_bits);
    let _ = write!(
        out,
        "latency         {} cycle(s), pipeline {}",
        s.latency_cycles, s.pipeline
    );
    if s.constant_classifier {
        out.push_str("\nnote            constant classifier (output tied to 1)");
    }
    out
}

fn run(cli: Cli) -> Result<u8> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    match cli.command {
        Command::FitQuantizer { data, w_feature, out } => {
            let d = data.load()?;
            let quantizer = FeatureQuantizer::fit(&d.rows, w_feature)?;
            write_text(&out, &quantizer.to_json())?;
            println!(
                "wrote {} ({} features, w_feature {w_feature})",
                out.display(),
                quantizer.num_features()
            );
        }
        Command::QuantizeData { quantizer, data, out } => {
            let quantizer = FeatureQuantizer::load(&quantizer).with_context(|| format!("{}", quantizer.display()))?;
            let d = data.load()?;
            if d.num_features() != quantizer.num_features() {
                bail!(
                    "data has {} features but the quantizer has {}",
                    d.num_features(),
                    quantizer.num_features()
                );
            }
            write_text(&out, &quantized_csv(&quantizer, &d, data.label_col, exec))?;
            println!("wrote {} ({} rows)", out.display(), d.rows.len());
        }
        Command::Compile {
            model,
            pipeline,
            out_dir,
            top,
            emit_testbench,
            vectors,
        } => {
            let (_, n) = model.netlist(pipeline)?;
            let opts = EmitOptions {
                top_name: top,
                emit_testbench,
                vector_file: vectors,
            };
            let files = emit(&n, &opts)?;
            for path in write_files(&out_dir, &files)? {
                println!("wrote {}", path.display());
            }
            println!("{}", summary(&n));
        }
        Command::Vectors { model, data, out } => {
            let (loaded, n) = model.netlist(PipelineConfig::default())?;
            let d = data.load()?;
            let inputs = loaded.quantizer.transform_batch(&d.rows, exec);
            write_text(&out, &vector_file_contents(&n, &inputs)?)?;
            println!("wrote {} ({} vectors)", out.display(), inputs.len());
        }
        Command::Predict {
            model,
            data,
            float,
            json,
        } => {
            let loaded = model.load()?;
            let d = data.load()?;
            let labels = d.labels.as_deref();
            let report = if float {
                evaluate_float(&loaded.ensemble, &loaded.quantizer, &d.rows, labels, exec)?
            } else {
                evaluate_dataset(&loaded.q, &loaded.quantizer, &d.rows, labels, exec)?
            };
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.table());
            }
        }
        Command::Simulate { model, pipeline, data } => {
            let (loaded, n) = model.netlist(pipeline)?;
            let d = data.load()?;
            let inputs = loaded.quantizer.transform_batch(&d.rows, exec);
            let check = cross_check(&loaded.q, &n, &inputs, exec)?;
            println!("samples                  {}", check.total);
            println!("latency                  {} cycle(s)", n.latency());
            println!("evaluator = interpreter  {}", check.evaluator_vs_interpreter);
            println!("evaluator = simulator    {}", check.evaluator_vs_simulator);
            println!("agreement {:.2}%", 100.0 * check.agreement());
            if !check.all_agree() {
                eprintln!(
                    "error: software and hardware models disagree (first mismatch at row {})",
                    check.first_mismatch.map_or_else(|| "?".into(), |r| r.to_string())
                );
                return Ok(EXIT_MISMATCH);
            }
        }
        Command::Report { model, pipeline, dump } => {
            let (_, n) = model.netlist(pipeline)?;
            if dump {
                print!("{}", debug_dump(&n));
            } else {
                println!("{}", serde_json::to_string_pretty(&stats(&n))?);
            }
        }
    }
    Ok(0)
}

/// Error chain on one line. Library errors often embed their source in
/// their own message, so causes already shown are skipped.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if text.contains(&msg) {
            msg = text;
        } else if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg.replace('\n', " ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
