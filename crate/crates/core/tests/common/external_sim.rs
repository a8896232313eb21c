// SPDX-License-Identifier: Apache-2.0

//! Optional external Verilog simulation.
//!
//! Icarus Verilog or Verilator (with `--timing`) runs the emitted testbench
//! as is. Yosys' CXXRTL backend only compiles the design; a small C++
//! harness then replays the same vector file with the testbench's timing
//! (inputs applied while the clock is low, outputs checked `latency`
//! cycles later).

use std::path::{Path, PathBuf};
use std::process::Command;

use treegate::netlist::OutputStage;
use treegate::Netlist;

#[derive(Debug, Clone)]
pub enum ExternalSim {
    Icarus,
    Verilator(String),
    Cxxrtl {
        yosys: String,
        include: PathBuf,
        cxx: String,
    },
}

impl ExternalSim {
    pub fn describe(&self) -> String {
        match self {
            ExternalSim::Icarus => "iverilog testbench".into(),
            ExternalSim::Verilator(cmd) => format!("{cmd} testbench"),
            ExternalSim::Cxxrtl { yosys, .. } => format!("{yosys} cxxrtl + vector harness"),
        }
    }
}

fn runs(cmd: &str, arg: &str) -> bool {
    Command::new(cmd).arg(arg).output().is_ok_and(|o| o.status.success())
}

fn cxxrtl_include(yosys: &str) -> Option<PathBuf> {
    if let Some(dir) = std::env::var_os("TREEGATE_CXXRTL_INCLUDE") {
        return Some(PathBuf::from(dir));
    }
    let suffix = "include/backends/cxxrtl/runtime";
    let datdir = Command::new(format!("{yosys}-config"))
        .arg("--datdir")
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| PathBuf::from(String::from_utf8_lossy(&o.stdout).trim()))
        .or_else(|| {
            let o = Command::new("python3")
                .args([
                    "-c",
                    "import os, yowasp_yosys; print(os.path.dirname(yowasp_yosys.__file__))",
                ])
                .output()
                .ok()
                .filter(|o| o.status.success())?;
            Some(PathBuf::from(String::from_utf8_lossy(&o.stdout).trim()).join("share"))
        })?;
    let dir = datdir.join(suffix);
    dir.join("cxxrtl/cxxrtl.h").exists().then_some(dir)
}

/// Every simulator found, testbench runners first.
pub fn detect_all() -> Vec<ExternalSim> {
    let mut found = Vec::new();
    if runs("iverilog", "-V") && runs("vvp", "-V") {
        found.push(ExternalSim::Icarus);
    }
    if let Some(v) = ["verilator", "verilator-cli"]
        .into_iter()
        .find(|v| runs(v, "--version"))
    {
        found.push(ExternalSim::Verilator(v.into()));
    }
    let yosys = ["yosys", "yowasp-yosys"].into_iter().find(|y| runs(y, "-V"));
    let cxx = ["c++", "g++", "clang++"].into_iter().find(|c| runs(c, "--version"));
    if let (Some(yosys), Some(cxx)) = (yosys, cxx) {
        if let Some(include) = cxxrtl_include(yosys) {
            found.push(ExternalSim::Cxxrtl {
                yosys: yosys.into(),
                include,
                cxx: cxx.into(),
            });
        }
    }
    found
}

/// First available simulator, if any.
pub fn detect() -> Option<ExternalSim> {
    detect_all().into_iter().next()
}

const HARNESS: &str = r#"
#include <cstdio>
#include <cstdlib>
#include <vector>
#include "design.cc"

using cxxrtl::chunk_t;

static void put(chunk_t *dst, size_t lsb, size_t width, unsigned long long v) {
    for (size_t b = 0; b < width; b++) {
        size_t bit = lsb + b;
        chunk_t mask = chunk_t(1) << (bit % 32);
        if ((v >> b) & 1) dst[bit / 32] |= mask; else dst[bit / 32] &= ~mask;
    }
}

static unsigned long long get(const chunk_t *src, size_t lsb, size_t width) {
    unsigned long long v = 0;
    for (size_t b = 0; b < width; b++) {
        size_t bit = lsb + b;
        if ((src[bit / 32] >> (bit % 32)) & 1) v |= 1ull << b;
    }
    return v;
}

int main(int argc, char **argv) {
    if (argc != 8) return 2;
    FILE *fd = fopen(argv[1], "r");
    if (!fd) { printf("ERROR cannot open vector file %s\n", argv[1]); return 1; }
    size_t nf = atoi(argv[2]), wf = atoi(argv[3]), no = atoi(argv[4]), wo = atoi(argv[5]);
    size_t latency = atoi(argv[6]);
    const char *out_port = argv[7];
    std::vector<std::vector<unsigned long long>> vin, vexp;
    unsigned long long value;
    while (fscanf(fd, "%llu", &value) == 1) {
        std::vector<unsigned long long> row(1, value), exp;
        for (size_t i = 1; i < nf; i++) { if (fscanf(fd, "%llu", &value) != 1) return 3; row.push_back(value); }
        for (size_t i = 0; i < no; i++) { if (fscanf(fd, "%llu", &value) != 1) return 3; exp.push_back(value); }
        vin.push_back(row);
        vexp.push_back(exp);
    }
    fclose(fd);

    TOP top;
    cxxrtl::debug_items items;
    top.debug_info(&items, nullptr, "");
    const cxxrtl::debug_item &features = items.at("features").at(0);
    const cxxrtl::debug_item &out = items.at(out_port).at(0);
    const cxxrtl::debug_item *clk = items.count("clk") ? &items.at("clk").at(0) : nullptr;
    if (clk) put(clk->next, 0, 1, 0);
    top.step();

    size_t pass = 0, fail = 0;
    for (size_t c = 0; c < vin.size() + latency; c++) {
        if (c < vin.size())
            for (size_t i = 0; i < nf; i++) put(features.next, i * wf, wf, vin[c][i]);
        top.step();
        if (c >= latency) {
            bool ok = true;
            for (size_t j = 0; j < no; j++) ok = ok && get(out.curr, j * wo, wo) == vexp[c - latency][j];
            if (ok) pass++;
            else { fail++; printf("FAIL vector %zu\n", c - latency); }
        }
        if (clk) {
            put(clk->next, 0, 1, 1);
            top.step();
            put(clk->next, 0, 1, 0);
            top.step();
        }
    }
    printf("PASS %zu FAIL %zu\n", pass, fail);
    return 0;
}
"#;

fn run_checked(cmd: &mut Command) -> Result<String, String> {
    let o = cmd.output().map_err(|e| format!("{cmd:?}: {e}"))?;
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    if !o.status.success() {
        return Err(format!(
            "{cmd:?} failed: {}{}",
            stdout,
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    Ok(stdout)
}

/// Parses the `PASS <n> FAIL <m>` summary line.
pub fn parse_summary(text: &str) -> Option<(usize, usize)> {
    let line = text.lines().rev().find(|l| l.starts_with("PASS "))?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    match parts[..] {
        ["PASS", p, "FAIL", f] => Some((p.parse().ok()?, f.parse().ok()?)),
        _ => None,
    }
}

fn mangle(name: &str) -> String {
    format!("p_{}", name.replace('_', "__"))
}

/// Runs design + testbench (or harness) over `vectors` in `dir`; returns
/// (pass, fail). The testbench must reference the vector file as
/// `vectors.txt`.
pub fn simulate(
    sim: &ExternalSim,
    dir: &Path,
    n: &Netlist,
    top: &str,
    design: &str,
    testbench: &str,
    vectors: &str,
) -> Result<(usize, usize), String> {
    let write = |name: &str, text: &str| std::fs::write(dir.join(name), text).map_err(|e| e.to_string());
    write("design.v", design)?;
    write("vectors.txt", vectors)?;
    let stdout = match sim {
        ExternalSim::Icarus => {
            write("testbench.v", testbench)?;
            run_checked(Command::new("iverilog").current_dir(dir).args([
                "-g2001",
                "-o",
                "tb.vvp",
                "design.v",
                "testbench.v",
            ]))?;
            run_checked(Command::new("vvp").current_dir(dir).args(["-n", "tb.vvp"]))?
        }
        ExternalSim::Verilator(cmd) => {
            write("testbench.v", testbench)?;
            let mut build = Command::new(cmd);
            build.current_dir(dir).args([
                "--binary",
                "--timing",
                "-j",
                "0",
                "-Wno-fatal",
                "-Wno-lint",
                "-Wno-style",
            ]);
            // Its generated makefiles call `python`, which may be missing.
            if !runs("python", "--version") {
                build.args(["-MAKEFLAGS", "PYTHON3=python3"]);
            }
            build.args([
                "--top-module",
                &format!("{top}_tb"),
                "design.v",
                "testbench.v",
                "-o",
                "tb",
            ]);
            run_checked(&mut build)?;
            run_checked(Command::new(dir.join("obj_dir/tb")).current_dir(dir))?
        }
        ExternalSim::Cxxrtl { yosys, include, cxx } => {
            let script =
                format!("read_verilog design.v; hierarchy -check -top {top}; proc; flatten; write_cxxrtl design.cc");
            run_checked(Command::new(yosys).current_dir(dir).args(["-q", "-p", &script]))?;
            write("harness.cc", HARNESS)?;
            run_checked(
                Command::new(cxx)
                    .current_dir(dir)
                    .arg("-std=c++14")
                    .arg("-O1")
                    .arg("-I")
                    .arg(include)
                    .arg(format!("-DTOP=cxxrtl_design::{}", mangle(top)))
                    .args(["harness.cc", "-o", "harness"]),
            )?;
            let (port, no, wo) = match n.output {
                OutputStage::Binary { .. } => ("y", 1, 1),
                OutputStage::Multiclass { w_sum } => ("scores", n.num_outputs(), w_sum),
            };
            run_checked(Command::new(dir.join("harness")).current_dir(dir).args([
                "vectors.txt".to_string(),
                n.num_features.to_string(),
                n.w_feature.to_string(),
                no.to_string(),
                wo.to_string(),
                n.latency().to_string(),
                port.to_string(),
            ]))?
        }
    };
    parse_summary(&stdout).ok_or_else(|| format!("no PASS/FAIL summary in simulator output:\n{stdout}"))
}
