// SPDX-License-Identifier: Apache-2.0

use super::{Netlist, NetlistError, NetlistOutput, Wires};

/// Cycle-accurate model of the pipelined netlist.
///
/// Every register boundary holds explicit state. Registers have no reset;
/// until the first valid sample reaches a boundary its content is `None`
/// (unknown), and outputs driven from it are reported as `None`.
#[derive(Debug)]
pub struct Simulator<'a> {
    netlist: &'a Netlist,
    registers: Vec<Option<Wires>>,
    cycle: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(netlist: &'a Netlist) -> Self {
        Simulator {
            netlist,
            registers: vec![None; netlist.latency()],
            cycle: 0,
        }
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// One clock cycle: drives `input` (or nothing) into the first stage,
    /// returns the value on the outputs during this cycle, then clocks every
    /// register at once.
    pub fn step(&mut self, input: Option<&[u32]>) -> Result<Option<NetlistOutput>, NetlistError> {
        if let Some(qx) = input {
            self.netlist.check_input(qx)?;
        }
        let mut next = Vec::with_capacity(self.registers.len());
        let mut wires = input.map(|qx| Wires::Features(qx.to_vec()));
        let mut boundary = 0;
        for (stage, registered) in self.netlist.stages() {
            wires = wires.map(|w| self.netlist.apply(stage, w));
            if registered {
                next.push(wires);
                wires = self.registers[boundary].take();
                boundary += 1;
            }
        }
        debug_assert_eq!(boundary, self.registers.len());
        self.registers = next;
        self.cycle += 1;
        Ok(wires.map(|w| self.netlist.finish(w)))
    }

    /// Streams one input per cycle, then flushes with `latency` idle cycles.
    /// `result[t]` is the output for `inputs[t]`.
    pub fn run(&mut self, inputs: &[Vec<u32>]) -> Result<Vec<NetlistOutput>, NetlistError> {
        let latency = self.registers.len();
        let mut out = Vec::with_capacity(inputs.len());
        for t in 0..inputs.len() + latency {
            let y = self.step(inputs.get(t).map(Vec::as_slice))?;
            if t >= latency {
                out.push(y.expect("a valid sample reaches the outputs after `latency` cycles"));
            }
        }
        Ok(out)
    }
}
