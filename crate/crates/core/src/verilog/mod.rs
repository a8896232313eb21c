// SPDX-License-Identifier: Apache-2.0

//! Verilog-2001 emission.
//!
//! Port contract of the top module:
//! - `clk` exists only when the pipeline latency is non-zero;
//! - `features[num_features*w_feature-1:0]`, feature `i` at `[i*w +: w]`;
//! - binary: `y`; multiclass: `scores[N*w_sum-1:0]`, class `n` at
//!   `[n*w_sum +: w_sum]`, each sum zero-extended.
//!
//! Output text depends only on the netlist and the options.

mod testbench;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use testbench::{emit_testbench, vector_file_contents};

use crate::bits_for;
use crate::netlist::{AdderOp, Netlist, NetlistError, OperandSource, OutputStage, Path as LogicPath, TreeLogic};

pub const DEFAULT_TOP_NAME: &str = "treegate_top";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitOptions {
    pub top_name: String,
    pub emit_testbench: bool,
    /// Stimulus file the testbench reads at simulation time.
    pub vector_file: Option<PathBuf>,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            top_name: DEFAULT_TOP_NAME.to_string(),
            emit_testbench: false,
            vector_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFile {
    pub name: String,
    pub contents: String,
}

const KEYWORDS: &[&str] = &[
    "always",
    "and",
    "assign",
    "automatic",
    "begin",
    "buf",
    "bufif0",
    "bufif1",
    "case",
    "casex",
    "casez",
    "cell",
    "cmos",
    "config",
    "deassign",
    "default",
    "defparam",
    "design",
    "disable",
    "edge",
    "else",
    "end",
    "endcase",
    "endconfig",
    "endfunction",
    "endgenerate",
    "endmodule",
    "endprimitive",
    "endspecify",
    "endtable",
    "endtask",
    "event",
    "for",
    "force",
    "forever",
    "fork",
    "function",
    "generate",
    "genvar",
    "highz0",
    "highz1",
    "if",
    "ifnone",
    "incdir",
    "include",
    "initial",
    "inout",
    "input",
    "instance",
    "integer",
    "join",
    "large",
    "liblist",
    "library",
    "localparam",
    "macromodule",
    "medium",
    "module",
    "nand",
    "negedge",
    "nmos",
    "nor",
    "noshowcancelled",
    "not",
    "notif0",
    "notif1",
    "or",
    "output",
    "parameter",
    "pmos",
    "posedge",
    "primitive",
    "pull0",
    "pull1",
    "pulldown",
    "pullup",
    "pulsestyle_onevent",
    "pulsestyle_ondetect",
    "rcmos",
    "real",
    "realtime",
    "reg",
    "release",
    "repeat",
    "rnmos",
    "rpmos",
    "rtran",
    "rtranif0",
    "rtranif1",
    "scalared",
    "showcancelled",
    "signed",
    "small",
    "specify",
    "specparam",
    "strong0",
    "strong1",
    "supply0",
    "supply1",
    "table",
    "task",
    "time",
    "tran",
    "tranif0",
    "tranif1",
    "tri",
    "tri0",
    "tri1",
    "triand",
    "trior",
    "trireg",
    "unsigned",
    "use",
    "vectored",
    "wait",
    "wand",
    "weak0",
    "weak1",
    "while",
    "wire",
    "wor",
    "xnor",
    "xor",
];

fn is_tree_module_name(name: &str) -> bool {
    let Some(rest) = name.strip_prefix("tree_") else {
        return false;
    };
    let mut parts = rest.split('_');
    let digits = |p: Option<&str>| p.is_some_and(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
    digits(parts.next()) && digits(parts.next()) && parts.next().is_none()
}

/// Legal, non-reserved and distinct from every generated module name.
pub fn validate_top_name(name: &str) -> Result<(), EmitError> {
    let mut chars = name.chars();
    let legal = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$');
    if !legal {
        return Err(EmitError::Config(format!("`{name}` is not a legal Verilog identifier")));
    }
    if KEYWORDS.contains(&name) {
        return Err(EmitError::Config(format!("`{name}` is a Verilog keyword")));
    }
    if is_tree_module_name(name) || name.ends_with("_tb") {
        return Err(EmitError::Config(format!(
            "`{name}` collides with a generated module name"
        )));
    }
    Ok(())
}

/// Sized decimal constant.
fn lit(width: u32, value: u64) -> String {
    format!("{width}'d{value}")
}

/// `name` widened from `from` to `to` bits with explicit zero padding.
fn zext(name: &str, from: u32, to: u32) -> String {
    if from >= to {
        name.to_string()
    } else {
        format!("{{{}, {name}}}", lit(to - from, 0))
    }
}

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

fn tree_module_name(t: &TreeLogic) -> String {
    format!("tree_{}_{}", t.class_index, t.tree_index)
}

fn product(path: &LogicPath) -> String {
    if path.is_empty() {
        return "1'b1".into();
    }
    let terms: Vec<String> = path
        .iter()
        .map(|l| {
            if l.positive {
                format!("k{}", l.key)
            } else {
                format!("~k{}", l.key)
            }
        })
        .collect();
    terms.join(" & ")
}

fn emit_tree_module(out: &mut String, t: &TreeLogic) {
    let used = t.keys_used();
    let _ = writeln!(
        out,
        "// class {}, tree {}: values {:?}, default {}",
        t.class_index, t.tree_index, t.unique_values, t.default_value
    );
    let _ = writeln!(out, "module {} (", tree_module_name(t));
    for k in &used {
        let _ = writeln!(out, "    input  wire k{k},");
    }
    let _ = writeln!(out, "    output wire {}value", range(t.out_width));
    let _ = writeln!(out, ");");
    for s in &t.selectors {
        let terms: Vec<String> = s.paths.iter().map(|p| format!("({})", product(p))).collect();
        let _ = writeln!(out, "    wire sel_{} = {};", s.value, terms.join(" | "));
    }
    let mut cascade = String::new();
    for s in &t.selectors {
        let _ = write!(cascade, "sel_{} ? {} : ", s.value, lit(t.out_width, u64::from(s.value)));
    }
    let _ = writeln!(
        out,
        "    assign value = {}{};",
        cascade,
        lit(t.out_width, u64::from(t.default_value))
    );
    let _ = writeln!(out, "endmodule\n");
}

/// Collects the register assignments of one pipeline boundary.
struct RegisterStage {
    lines: Vec<String>,
}

impl RegisterStage {
    fn new() -> Self {
        RegisterStage { lines: Vec::new() }
    }

    fn flush(self, out: &mut String) {
        if self.lines.is_empty() {
            return;
        }
        let _ = writeln!(out, "    always @(posedge clk) begin");
        for l in self.lines {
            let _ = writeln!(out, "        {l}");
        }
        let _ = writeln!(out, "    end");
    }
}

/// Declares `name` as the combinational value `expr`; when `registered`,
/// also declares `name_q` and returns that as the downstream name.
fn signal(out: &mut String, regs: &mut RegisterStage, width: u32, name: &str, expr: &str, registered: bool) -> String {
    let _ = writeln!(out, "    wire {}{name} = {expr};", range(width));
    if registered {
        let _ = writeln!(out, "    reg  {}{name}_q;", range(width));
        regs.lines.push(format!("{name}_q <= {name};"));
        format!("{name}_q")
    } else {
        name.to_string()
    }
}

fn header(out: &mut String, n: &Netlist, top: &str) {
    let task = match n.output {
        OutputStage::Binary { .. } => "binary".to_string(),
        OutputStage::Multiclass { .. } => format!("multiclass, {} classes", n.num_outputs()),
    };
    let _ = writeln!(out, "// {top}: generated by treegate {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "// task: {task}");
    let _ = writeln!(
        out,
        "// features: {} x {} bits, tree outputs up to {} bits, {} trees, {} keys",
        n.num_features,
        n.w_feature,
        n.w_tree,
        n.tree_logics.len(),
        n.keys.len()
    );
    let _ = writeln!(out, "// pipeline {}, latency {} cycle(s)", n.pipeline, n.latency());
    match n.output {
        OutputStage::Binary { threshold, constant } => {
            let _ = writeln!(
                out,
                "// y = (sum of tree outputs >= {threshold}){}",
                if constant { ", constant 1" } else { "" }
            );
        }
        OutputStage::Multiclass { w_sum } => {
            let _ = writeln!(out, "// scores: class n at [n*{w_sum} +: {w_sum}], biases folded in");
        }
    }
    if n.latency() > 0 {
        let _ = writeln!(
            out,
            "// Registers have no reset. Outputs are valid {} cycle(s) after the first input.",
            n.latency()
        );
    }
    let _ = writeln!(out);
}

/// The design file: tree modules followed by the top module.
pub fn emit_verilog(n: &Netlist, top: &str) -> Result<String, EmitError> {
    validate_top_name(top)?;
    let mut out = String::new();
    header(&mut out, n, top);
    for t in &n.tree_logics {
        emit_tree_module(&mut out, t);
    }

    let wf = n.w_feature;
    let in_width = n.num_features as u32 * wf;
    let _ = writeln!(out, "module {top} (");
    if n.latency() > 0 {
        let _ = writeln!(out, "    input  wire clk,");
    }
    let _ = writeln!(out, "    input  wire [{}:0] features,", in_width - 1);
    match n.output {
        OutputStage::Binary { .. } => {
            let _ = writeln!(out, "    output wire y");
        }
        OutputStage::Multiclass { .. } => {
            let _ = writeln!(out, "    output wire [{}:0] scores", n.output_width() - 1);
        }
    }
    let _ = writeln!(out, ");");

    // Key generator.
    let _ = writeln!(out, "\n    // keys: k = features[f] < t");
    let mut regs = RegisterStage::new();
    let keys: Vec<String> = n
        .keys
        .iter()
        .map(|k| {
            let expr = format!(
                "features[{} +: {wf}] < {}",
                k.feature as u32 * wf,
                lit(wf, u64::from(k.threshold))
            );
            signal(&mut out, &mut regs, 1, &format!("k{}", k.id), &expr, n.pipeline.p0)
        })
        .collect();
    regs.flush(&mut out);

    // Trees.
    let _ = writeln!(out, "\n    // trees");
    let mut regs = RegisterStage::new();
    let mut trees = Vec::with_capacity(n.tree_logics.len());
    for t in &n.tree_logics {
        let name = tree_module_name(t);
        let _ = writeln!(out, "    wire {}{name}_out;", range(t.out_width));
        let mut ports: Vec<String> = t.keys_used().iter().map(|&k| format!(".k{k}({})", keys[k])).collect();
        ports.push(format!(".value({name}_out)"));
        let _ = writeln!(out, "    {name} u_{name} ({});", ports.join(", "));
        trees.push(if n.pipeline.p1 {
            let _ = writeln!(out, "    reg  {}{name}_q;", range(t.out_width));
            regs.lines.push(format!("{name}_q <= {name}_out;"));
            format!("{name}_q")
        } else {
            format!("{name}_out")
        });
    }
    regs.flush(&mut out);

    // Adders, level by level across classes so that each register boundary
    // is one always block. Operands are zero-extended to the node width.
    let mut current: Vec<Vec<String>> = Vec::with_capacity(n.adder_trees.len());
    for (c, a) in n.adder_trees.iter().enumerate() {
        let mut names = Vec::with_capacity(a.operands.len());
        for (i, o) in a.operands.iter().enumerate() {
            names.push(match o.source {
                OperandSource::Tree(t) => trees[t].clone(),
                OperandSource::Constant(value) => {
                    let name = format!("const_{c}_{i}");
                    let _ = writeln!(out, "    wire {}{name} = {};", range(o.width), lit(o.width, value));
                    name
                }
            });
        }
        current.push(names);
    }
    for level in 1..=n.adder_depth() {
        let _ = writeln!(out, "\n    // adder level {level}");
        let mut regs = RegisterStage::new();
        for (c, a) in n.adder_trees.iter().enumerate() {
            let registered = a.is_registered(level);
            current[c] = a.levels[level - 1]
                .iter()
                .enumerate()
                .map(|(i, node)| {
                    let operand = |x: usize| zext(&current[c][x], a.width_at(level - 1, x), node.width);
                    let expr = match node.op {
                        AdderOp::Add(x, y) => format!("{} + {}", operand(x), operand(y)),
                        AdderOp::Pass(x) => operand(x),
                    };
                    signal(
                        &mut out,
                        &mut regs,
                        node.width,
                        &format!("sum_{c}_{level}_{i}"),
                        &expr,
                        registered,
                    )
                })
                .collect();
        }
        regs.flush(&mut out);
    }

    let _ = writeln!(out, "\n    // outputs");
    match n.output {
        OutputStage::Binary { constant: true, .. } => {
            let _ = writeln!(out, "    assign y = 1'b1;");
        }
        OutputStage::Binary { threshold, .. } => {
            let root_width = n.adder_trees[0].root_width();
            let threshold = threshold.max(0) as u64;
            let width = root_width.max(bits_for(threshold));
            let root = zext(&current[0][0], root_width, width);
            let _ = writeln!(out, "    assign y = {root} >= {};", lit(width, threshold));
        }
        OutputStage::Multiclass { w_sum } => {
            for (c, a) in n.adder_trees.iter().enumerate() {
                let value = zext(&current[c][0], a.root_width(), w_sum);
                let _ = writeln!(out, "    assign scores[{} +: {w_sum}] = {value};", c as u32 * w_sum);
            }
        }
    }
    let _ = writeln!(out, "endmodule");
    Ok(out)
}

/// `<top>.v`, plus `<top>_tb.v` when requested.
pub fn emit(n: &Netlist, opts: &EmitOptions) -> Result<Vec<EmittedFile>, EmitError> {
    let mut files = vec![EmittedFile {
        name: format!("{}.v", opts.top_name),
        contents: emit_verilog(n, &opts.top_name)?,
    }];
    if opts.emit_testbench {
        files.push(EmittedFile {
            name: format!("{}_tb.v", opts.top_name),
            contents: emit_testbench(n, opts)?,
        });
    }
    Ok(files)
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), EmitError> {
    let io = |source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes every file into `dir`, returning the paths.
pub fn write_files(dir: &Path, files: &[EmittedFile]) -> Result<Vec<PathBuf>, EmitError> {
    std::fs::create_dir_all(dir).map_err(|source| EmitError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            write_atomic(&path, &f.contents)?;
            Ok(path)
        })
        .collect()
}
