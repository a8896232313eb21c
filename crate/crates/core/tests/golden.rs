// SPDX-License-Identifier: Apache-2.0

//! Byte-for-byte snapshots of the emitted Verilog for the two fixture
//! netlists. Regenerate with `TREEGATE_BLESS=1 cargo test --test golden`.

mod common;

use treegate::verilog::{emit, EmitOptions};

fn files(n: &treegate::Netlist) -> Vec<treegate::verilog::EmittedFile> {
    let opts = EmitOptions {
        emit_testbench: true,
        vector_file: Some("vectors.txt".into()),
        ..EmitOptions::default()
    };
    emit(n, &opts).unwrap()
}

#[test]
fn binary_design_matches_snapshot() {
    let (_, n) = common::binary_fixture();
    let f = files(&n);
    common::check_golden("binary_top.v", &f[0].contents).unwrap();
    common::check_golden("binary_top_tb.v", &f[1].contents).unwrap();
}

#[test]
fn multiclass_design_matches_snapshot() {
    let (_, n) = common::multiclass_fixture();
    let f = files(&n);
    common::check_golden("multiclass_top.v", &f[0].contents).unwrap();
    common::check_golden("multiclass_top_tb.v", &f[1].contents).unwrap();
}
