// SPDX-License-Identifier: Apache-2.0

//! Self-checking testbench and its stimulus file.
//!
//! Vector file: one row per vector, space-separated decimal feature values
//! followed by the expected output (`y`, or one score per class).

use std::fmt::Write as _;

use super::{validate_top_name, EmitError, EmitOptions};
use crate::netlist::{interpret_netlist, Netlist, NetlistError, NetlistOutput, OutputStage};

/// Upper bound on vectors the bench loads.
const MAX_VECTORS: usize = 1 << 16;

/// Rows of `inputs` with the interpreter's expected outputs appended.
pub fn vector_file_contents(n: &Netlist, inputs: &[Vec<u32>]) -> Result<String, NetlistError> {
    let mut out = String::new();
    for qx in inputs {
        let mut row: Vec<String> = qx.iter().map(u32::to_string).collect();
        match interpret_netlist(n, qx)? {
            NetlistOutput::Binary(y) => row.push(u8::from(y).to_string()),
            NetlistOutput::Scores(s) => row.extend(s.iter().map(u64::to_string)),
        }
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

fn verilog_string(path: &str) -> Result<String, EmitError> {
    if path.chars().any(|c| c == '"' || c == '\\' || c.is_control()) {
        return Err(EmitError::Config(format!(
            "vector file path `{path}` cannot be written as a Verilog string"
        )));
    }
    Ok(format!("\"{path}\""))
}

/// Bench that applies one vector per cycle and checks each output
/// `latency` cycles later. Prints `PASS <n> FAIL <m>` at the end.
pub fn emit_testbench(n: &Netlist, opts: &EmitOptions) -> Result<String, EmitError> {
    validate_top_name(&opts.top_name)?;
    let path = opts
        .vector_file
        .as_ref()
        .ok_or_else(|| EmitError::Config("the testbench needs a vector file".into()))?;
    let path_text = verilog_string(&path.to_string_lossy())?;
    let top = &opts.top_name;
    let nf = n.num_features;
    let wf = n.w_feature;
    let latency = n.latency();
    let out_width = n.output_width();
    let (out_port, outputs_per_row, out_slot) = match n.output {
        OutputStage::Binary { .. } => ("y", 1, 1),
        OutputStage::Multiclass { w_sum } => ("scores", n.num_outputs(), w_sum),
    };

    if out_slot > 64 {
        return Err(EmitError::Config(format!(
            "output slots of {out_slot} bits do not fit the bench's 64-bit reads"
        )));
    }

    let mut s = String::new();
    let _ = writeln!(s, "// Self-checking bench for {top}; latency {latency} cycle(s).");
    let _ = writeln!(s, "module {top}_tb;");
    let _ = writeln!(s, "    localparam NF = {nf};");
    let _ = writeln!(s, "    localparam WF = {wf};");
    let _ = writeln!(s, "    localparam NO = {outputs_per_row};");
    let _ = writeln!(s, "    localparam WO = {out_slot};");
    let _ = writeln!(s, "    localparam LATENCY = {latency};");
    let _ = writeln!(s, "    localparam MAX_VECTORS = {MAX_VECTORS};");
    let _ = writeln!(s);
    let _ = writeln!(s, "    reg  [NF*WF-1:0] features;");
    let _ = writeln!(s, "    wire [{}:0] out;", out_width - 1);
    let _ = writeln!(s, "    reg  [NF*WF-1:0] vin [0:MAX_VECTORS-1];");
    let _ = writeln!(s, "    reg  [{}:0] vexp [0:MAX_VECTORS-1];", out_width - 1);
    let _ = writeln!(s, "    reg  [NF*WF-1:0] row_in;");
    let _ = writeln!(s, "    reg  [{}:0] row_exp;", out_width - 1);
    let _ = writeln!(s, "    reg  [63:0] value;");
    let _ = writeln!(s, "    integer fd, status, count, i, c, pass, fail;");
    if latency > 0 {
        let _ = writeln!(s, "    reg clk;");
        let _ = writeln!(s, "    initial clk = 1'b0;");
        let _ = writeln!(s, "    always #5 clk = ~clk;");
        let _ = writeln!(s, "\n    {top} dut (.clk(clk), .features(features), .{out_port}(out));");
    } else {
        let _ = writeln!(s, "\n    {top} dut (.features(features), .{out_port}(out));");
    }
    let _ = writeln!(
        s,
        r#"
    initial begin
        fd = $fopen({path_text}, "r");
        if (fd == 0) begin
            $display("ERROR cannot open vector file %s", {path_text});
            $finish;
        end
        count = 0;
        status = 1;
        while (status == 1 && count < MAX_VECTORS) begin
            status = $fscanf(fd, "%d", value);
            if (status == 1) begin
                row_in = 0;
                row_exp = 0;
                row_in[0 +: WF] = value[WF-1:0];
                for (i = 1; i < NF; i = i + 1) begin
                    status = $fscanf(fd, "%d", value);
                    row_in[i*WF +: WF] = value[WF-1:0];
                end
                for (i = 0; i < NO; i = i + 1) begin
                    status = $fscanf(fd, "%d", value);
                    row_exp[i*WO +: WO] = value[WO-1:0];
                end
                vin[count] = row_in;
                vexp[count] = row_exp;
                count = count + 1;
            end
        end
        $fclose(fd);

        pass = 0;
        fail = 0;
        features = 0;
        for (c = 0; c < count + LATENCY; c = c + 1) begin"#
    );
    if latency > 0 {
        let _ = writeln!(s, "            @(negedge clk);");
    } else {
        let _ = writeln!(s, "            #10;");
    }
    let _ = writeln!(
        s,
        r#"            if (c < count) features = vin[c];
            #1;
            if (c >= LATENCY) begin
                if (out === vexp[c - LATENCY]) pass = pass + 1;
                else begin
                    fail = fail + 1;
                    $display("FAIL vector %0d: got %0d expected %0d", c - LATENCY, out, vexp[c - LATENCY]);
                end
            end
        end
        $display("PASS %0d FAIL %0d", pass, fail);
        $finish;
    end
endmodule"#
    );
    Ok(s)
}
