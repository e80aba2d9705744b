//! Reversible boolean circuits.
//!
//! A circuit is a list of generalized Toffoli gates over a fixed set of
//! wires. Each gate toggles its target exactly when every control matches
//! its polarity; a gate with no controls is a NOT. Non-input wires start
//! false. Every gate is its own inverse, so a circuit runs backwards by
//! reversing its gate list.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Control {
    pub wire: usize,
    pub positive: bool,
}

pub fn pos(wire: usize) -> Control {
    Control { wire, positive: true }
}

pub fn neg(wire: usize) -> Control {
    Control { wire, positive: false }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub target: usize,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn new(target: usize, controls: Vec<Control>) -> Gate {
        Gate { target, controls }
    }

    pub fn fires(&self, valuation: &[bool]) -> bool {
        self.controls.iter().all(|c| valuation[c.wire] == c.positive)
    }

    pub fn apply(&self, valuation: &mut [bool]) {
        if self.fires(valuation) {
            valuation[self.target] ^= true;
        }
    }

    /// Controls sorted with duplicates collapsed, or None when two controls
    /// on the same wire disagree (the gate can never fire).
    pub fn simplified_controls(&self) -> Option<Vec<Control>> {
        let mut cs = self.controls.clone();
        cs.sort();
        cs.dedup();
        for w in cs.windows(2) {
            if w[0].wire == w[1].wire {
                return None;
            }
        }
        Some(cs)
    }

    /// Every wire the gate touches: target plus control wires.
    pub fn wires(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.target).chain(self.controls.iter().map(|c| c.wire))
    }
}

/// Gate list under construction, newest gate at the front. Iterating in
/// reverse yields chronological order.
pub type RawCircuit = VecDeque<Gate>;

pub fn chronological(raw: &RawCircuit) -> Vec<Gate> {
    raw.iter().rev().cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_wires: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    /// Chronological order: gates[0] acts first.
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn validate(&self) -> Result<(), String> {
        let check_wire = |w: usize, what: &str| {
            if w < self.num_wires {
                Ok(())
            } else {
                Err(format!("{what} wire {w} out of range for {} wires", self.num_wires))
            }
        };
        for &w in &self.inputs {
            check_wire(w, "input")?;
        }
        for &w in &self.outputs {
            check_wire(w, "output")?;
        }
        let mut seen = vec![false; self.num_wires];
        for &w in &self.inputs {
            if seen[w] {
                return Err(format!("input wire {w} repeats"));
            }
            seen[w] = true;
        }
        for (i, g) in self.gates.iter().enumerate() {
            check_wire(g.target, "gate target")?;
            for c in &g.controls {
                check_wire(c.wire, "gate control")?;
                if c.wire == g.target {
                    return Err(format!("gate {i} controls its own target wire {}", g.target));
                }
            }
        }
        Ok(())
    }

    /// Run on a full valuation of every wire; returns the final valuation.
    pub fn run_valuation(&self, valuation: &[bool]) -> Vec<bool> {
        assert_eq!(valuation.len(), self.num_wires, "valuation covers every wire");
        let mut val = valuation.to_vec();
        for g in &self.gates {
            g.apply(&mut val);
        }
        val
    }

    /// Standard execution: non-input wires start false.
    pub fn execute_full(&self, input_bits: &[bool]) -> (Vec<bool>, Vec<bool>) {
        assert_eq!(input_bits.len(), self.inputs.len(), "one bit per input wire");
        let mut val = vec![false; self.num_wires];
        for (&w, &b) in self.inputs.iter().zip(input_bits) {
            val[w] = b;
        }
        let val = self.run_valuation(&val);
        let out = self.outputs.iter().map(|&w| val[w]).collect();
        (out, val)
    }

    pub fn execute(&self, input_bits: &[bool]) -> Vec<bool> {
        self.execute_full(input_bits).0
    }

    /// The inverse circuit: gates reversed, inputs and outputs swapped.
    pub fn invert(&self) -> Circuit {
        Circuit {
            num_wires: self.num_wires,
            inputs: self.outputs.clone(),
            outputs: self.inputs.clone(),
            gates: self.gates.iter().rev().cloned().collect(),
        }
    }

    /// Feed this circuit's outputs into `next`'s inputs. `next` keeps its
    /// own auxiliary wires, renamed past this circuit's.
    pub fn compose(&self, next: &Circuit) -> Result<Circuit, String> {
        if self.outputs.len() != next.inputs.len() {
            return Err(format!(
                "arity mismatch: {} outputs feeding {} inputs",
                self.outputs.len(),
                next.inputs.len()
            ));
        }
        let mut distinct = self.outputs.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != self.outputs.len() {
            return Err("cannot compose out of a circuit with repeated output wires".into());
        }
        let mut map: Vec<Option<usize>> = vec![None; next.num_wires];
        for (&hw, &gw) in next.inputs.iter().zip(&self.outputs) {
            if map[hw].is_some() {
                return Err("cannot compose into a circuit with repeated input wires".into());
            }
            map[hw] = Some(gw);
        }
        let mut fresh = self.num_wires;
        for slot in map.iter_mut() {
            if slot.is_none() {
                *slot = Some(fresh);
                fresh += 1;
            }
        }
        let rename = |w: usize| map[w].unwrap();
        let mut gates = self.gates.clone();
        for g in &next.gates {
            gates.push(Gate {
                target: rename(g.target),
                controls: g.controls.iter().map(|c| Control { wire: rename(c.wire), ..*c }).collect(),
            });
        }
        Ok(Circuit {
            num_wires: fresh,
            inputs: self.inputs.clone(),
            outputs: next.outputs.iter().map(|&w| rename(w)).collect(),
            gates,
        })
    }

    /// The uncomputation construction: run the circuit, copy each output to
    /// a fresh wire, run the circuit backwards. Maps (x, y) to
    /// (x, y xor f(x)) and returns every auxiliary wire to false.
    pub fn bennett(&self) -> Result<Circuit, String> {
        let mut distinct = self.inputs.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != self.inputs.len() {
            return Err("uncomputation needs distinct input wires".into());
        }
        let m = self.outputs.len();
        let copy_wire = |j: usize| self.num_wires + j;
        let mut gates = self.gates.clone();
        for (j, &o) in self.outputs.iter().enumerate() {
            gates.push(Gate::new(copy_wire(j), vec![pos(o)]));
        }
        gates.extend(self.gates.iter().rev().cloned());
        let ys: Vec<usize> = (0..m).map(copy_wire).collect();
        Ok(Circuit {
            num_wires: self.num_wires + m,
            inputs: self.inputs.iter().copied().chain(ys.iter().copied()).collect(),
            outputs: self.inputs.iter().copied().chain(ys).collect(),
            gates,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuits serialize")
    }

    pub fn from_json(src: &str) -> Result<Circuit, String> {
        let c: Circuit = serde_json::from_str(src).map_err(|e| e.to_string())?;
        c.validate()?;
        Ok(c)
    }

    /// One row per wire; gates left to right. `X` target, `*` positive
    /// control, `o` negative control, `|` between the extremes of a gate.
    pub fn render_ascii(&self) -> String {
        let mut rows: Vec<String> = (0..self.num_wires).map(|w| format!("{w:>3}: -")).collect();
        for g in &self.gates {
            let lo = g.wires().min().unwrap_or(g.target);
            let hi = g.wires().max().unwrap_or(g.target);
            for (w, row) in rows.iter_mut().enumerate() {
                let ch = if w == g.target {
                    'X'
                } else if let Some(c) = g.controls.iter().find(|c| c.wire == w) {
                    if c.positive {
                        '*'
                    } else {
                        'o'
                    }
                } else if lo < w && w < hi {
                    '|'
                } else {
                    '-'
                };
                row.push(ch);
                row.push('-');
            }
        }
        let mark = |w: usize| {
            let mut m = Vec::new();
            if let Some(k) = self.inputs.iter().position(|&i| i == w) {
                m.push(format!("in{k}"));
            }
            for (k, &o) in self.outputs.iter().enumerate() {
                if o == w {
                    m.push(format!("out{k}"));
                }
            }
            m.join(",")
        };
        let mut out = String::new();
        for (w, row) in rows.into_iter().enumerate() {
            let m = mark(w);
            if m.is_empty() {
                out.push_str(&row);
            } else {
                out.push_str(&format!("{row}  {m}"));
            }
            out.push('\n');
        }
        out
    }
}
