//! Circuit-level optimizations.
//!
//! The machine emits one gate per boolean step, so its circuits carry
//! plenty of slack: wires that provably hold constants, wires that merely
//! copy other wires, xor cascades through fresh wires, and garbage gates
//! whose targets nobody reads. Each rewrite here removes one kind of
//! slack, justified by a forward dataflow analysis over the gates.
//!
//! Every pass preserves the input/output function of the circuit, and
//! [`optimize`] runs them to a bounded fixpoint, compacting unused wires
//! between rounds. Gate and wire counts never increase. [`equivalent`]
//! checks two circuits against each other exhaustively and is the oracle
//! the tests hold every pass to.

use std::collections::{BTreeMap, BTreeSet};

use crate::circuit::{pos, Circuit, Control, Gate};

/// What is known about a wire's value at one point in the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WireFact {
    ConstFalse,
    ConstTrue,
    /// Holds the same value as another wire at this point.
    Copy(usize),
    Unknown,
}

/// How one gate looks once constant controls are accounted for.
enum GateView {
    /// The gate can never fire; it has no effect.
    Dead,
    /// The gate fires when the remaining controls do.
    Fires(Vec<Control>),
}

fn initial_facts(c: &Circuit) -> Vec<WireFact> {
    let mut facts = vec![WireFact::ConstFalse; c.num_wires];
    for &w in &c.inputs {
        facts[w] = WireFact::Unknown;
    }
    facts
}

/// Update the facts across one gate and report what the gate reduces to.
fn step_fact(facts: &mut [WireFact], g: &Gate) -> GateView {
    let mut remaining = Vec::new();
    for c in &g.controls {
        match facts[c.wire] {
            WireFact::ConstTrue => {
                if !c.positive {
                    return GateView::Dead;
                }
            }
            WireFact::ConstFalse => {
                if c.positive {
                    return GateView::Dead;
                }
            }
            _ => remaining.push(*c),
        }
    }
    for c in &remaining {
        if remaining.contains(&Control { wire: c.wire, positive: !c.positive }) {
            return GateView::Dead;
        }
    }
    let t = g.target;
    let new_fact = if remaining.is_empty() {
        match facts[t] {
            WireFact::ConstFalse => WireFact::ConstTrue,
            WireFact::ConstTrue => WireFact::ConstFalse,
            _ => WireFact::Unknown,
        }
    } else if remaining.len() == 1
        && ((facts[t] == WireFact::ConstFalse && remaining[0].positive)
            || (facts[t] == WireFact::ConstTrue && !remaining[0].positive))
    {
        // t was constant and one conditional flip lands it on the control's
        // value: false xor a = a, true xor not a = a
        let a = remaining[0].wire;
        match facts[a] {
            WireFact::Copy(b) => WireFact::Copy(b),
            _ => WireFact::Copy(a),
        }
    } else {
        WireFact::Unknown
    };
    for f in facts.iter_mut() {
        if *f == WireFact::Copy(t) {
            *f = WireFact::Unknown;
        }
    }
    facts[t] = new_fact;
    GateView::Fires(remaining)
}

/// Facts before each gate; the last entry holds at the end of the circuit.
fn facts_trace(c: &Circuit) -> Vec<Vec<WireFact>> {
    let mut facts = initial_facts(c);
    let mut trace = vec![facts.clone()];
    for g in &c.gates {
        step_fact(&mut facts, g);
        trace.push(facts.clone());
    }
    trace
}

fn used_after(c: &Circuit, k: usize, w: usize) -> bool {
    c.gates[k + 1..].iter().any(|g| g.wires().any(|x| x == w)) || c.outputs.contains(&w)
}

fn rename_wire(g: &mut Gate, from: usize, to: usize) {
    if g.target == from {
        g.target = to;
    }
    for c in &mut g.controls {
        if c.wire == from {
            c.wire = to;
        }
    }
}

/// Drop controls on wires of known constant value and delete gates such a
/// control keeps from ever firing.
pub fn remove_constant_gates(c: &Circuit) -> Circuit {
    let mut facts = initial_facts(c);
    let mut gates = Vec::new();
    for g in &c.gates {
        match step_fact(&mut facts, g) {
            GateView::Dead => {}
            GateView::Fires(controls) => gates.push(Gate::new(g.target, controls)),
        }
    }
    Circuit { gates, ..c.clone() }
}

/// Delete gates whose target is never read afterwards, working backwards
/// so chains of garbage die in one sweep.
pub fn remove_dead_gates(c: &Circuit) -> Circuit {
    let mut live: BTreeSet<usize> = c.outputs.iter().copied().collect();
    let mut kept = Vec::new();
    for g in c.gates.iter().rev() {
        if live.contains(&g.target) {
            live.extend(g.controls.iter().map(|x| x.wire));
            kept.push(g.clone());
        }
    }
    kept.reverse();
    Circuit { gates: kept, ..c.clone() }
}

/// A gate `t ^= a` onto a constantly-false `t` makes `t` a copy of `a`.
/// When `a` is never used again the copy is pointless: delete the gate
/// and let every later mention of `t` read `a` directly.
pub fn eliminate_copies(c: &Circuit) -> Circuit {
    let mut cur = c.clone();
    'retry: loop {
        let trace = facts_trace(&cur);
        for (k, g) in cur.gates.iter().enumerate() {
            if g.controls.len() != 1 || !g.controls[0].positive {
                continue;
            }
            let (u, a) = (g.target, g.controls[0].wire);
            if trace[k][u] != WireFact::ConstFalse || used_after(&cur, k, a) {
                continue;
            }
            let mut gates = cur.gates.clone();
            gates.remove(k);
            for g2 in gates.iter_mut().skip(k) {
                rename_wire(g2, u, a);
            }
            let outputs = cur.outputs.iter().map(|&w| if w == u { a } else { w }).collect();
            cur = Circuit { outputs, gates, ..cur };
            continue 'retry;
        }
        return cur;
    }
}

/// Two xor gates `cw ^= a; cw ^= b` onto a constantly-false `cw` compute
/// `a xor b` on a fresh wire. When `b` dies at the second gate the pair
/// collapses to the single CNOT `b ^= a`, and `cw` is retired in favor
/// of `b`.
pub fn fuse_xor(c: &Circuit) -> Circuit {
    let mut cur = c.clone();
    'retry: loop {
        let trace = facts_trace(&cur);
        for (i, tr) in trace.iter().enumerate().take(cur.gates.len()) {
            let gi = &cur.gates[i];
            if gi.controls.len() != 1 || !gi.controls[0].positive {
                continue;
            }
            let (cw, a) = (gi.target, gi.controls[0].wire);
            if tr[cw] != WireFact::ConstFalse {
                continue;
            }
            let Some(j) = (i + 1..cur.gates.len()).find(|&j| cur.gates[j].wires().any(|w| w == cw))
            else {
                continue;
            };
            let gj = &cur.gates[j];
            if gj.target != cw || gj.controls.len() != 1 || !gj.controls[0].positive {
                continue;
            }
            let b = gj.controls[0].wire;
            if b == a
                || cur.gates[i + 1..j].iter().any(|g| g.target == a)
                || used_after(&cur, j, b)
            {
                continue;
            }
            let mut gates = cur.gates.clone();
            gates[j] = Gate::new(b, vec![pos(a)]);
            for g2 in gates.iter_mut().skip(j + 1) {
                rename_wire(g2, cw, b);
            }
            gates.remove(i);
            let outputs = cur.outputs.iter().map(|&w| if w == cw { b } else { w }).collect();
            cur = Circuit { outputs, gates, ..cur };
            continue 'retry;
        }
        return cur;
    }
}

fn commutes(g1: &Gate, g2: &Gate) -> bool {
    !g2.wires().any(|w| w == g1.target) && !g1.wires().any(|w| w == g2.target)
}

fn shuffle_key(g: &Gate) -> (usize, usize, &Vec<Control>) {
    let cnot = (g.controls.len() == 1 && g.controls[0].positive) as usize;
    (cnot, g.target, &g.controls)
}

/// Swap adjacent commuting gates towards a canonical order that carries
/// plain CNOTs as far right as they will go, exposing copy and xor
/// patterns for the other passes. A swap happens only when it reduces the
/// key order, so the sweep terminates and a second call changes nothing.
pub fn shuffle_right(c: &Circuit) -> Circuit {
    let mut gates = c.gates.clone();
    loop {
        let mut changed = false;
        for i in 0..gates.len().saturating_sub(1) {
            if commutes(&gates[i], &gates[i + 1]) && shuffle_key(&gates[i]) > shuffle_key(&gates[i + 1]) {
                gates.swap(i, i + 1);
                changed = true;
            }
        }
        if !changed {
            return Circuit { gates, ..c.clone() };
        }
    }
}

/// Renumber wires contiguously, dropping any wire no gate, input or
/// output mentions.
pub fn compact_wires(c: &Circuit) -> Circuit {
    let mut used: BTreeSet<usize> = c.inputs.iter().copied().collect();
    used.extend(c.outputs.iter().copied());
    for g in &c.gates {
        used.extend(g.wires());
    }
    let map: BTreeMap<usize, usize> = used.iter().enumerate().map(|(n, &w)| (w, n)).collect();
    Circuit {
        num_wires: used.len(),
        inputs: c.inputs.iter().map(|w| map[w]).collect(),
        outputs: c.outputs.iter().map(|w| map[w]).collect(),
        gates: c
            .gates
            .iter()
            .map(|g| {
                Gate::new(
                    map[&g.target],
                    g.controls.iter().map(|x| Control { wire: map[&x.wire], ..*x }).collect(),
                )
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    Constants,
    Dead,
    Copies,
    XorFusion,
    Shuffle,
}

impl Pass {
    pub const ALL: [Pass; 5] =
        [Pass::Constants, Pass::Dead, Pass::Copies, Pass::XorFusion, Pass::Shuffle];

    pub fn run(self, c: &Circuit) -> Circuit {
        match self {
            Pass::Constants => remove_constant_gates(c),
            Pass::Dead => remove_dead_gates(c),
            Pass::Copies => eliminate_copies(c),
            Pass::XorFusion => fuse_xor(c),
            Pass::Shuffle => shuffle_right(c),
        }
    }
}

impl std::str::FromStr for Pass {
    type Err = String;

    fn from_str(s: &str) -> Result<Pass, String> {
        match s {
            "constant" => Ok(Pass::Constants),
            "dead" => Ok(Pass::Dead),
            "copy" => Ok(Pass::Copies),
            "xor" => Ok(Pass::XorFusion),
            "shuffle" => Ok(Pass::Shuffle),
            other => Err(format!(
                "unknown pass '{other}'; expected constant, dead, copy, xor or shuffle"
            )),
        }
    }
}

/// Run the passes round-robin until the circuit stops changing or the
/// iteration budget runs out. Returns the circuit, the rounds used, and
/// whether a fixpoint was reached.
pub fn optimize_with(c: &Circuit, passes: &[Pass], max_rounds: usize) -> (Circuit, usize, bool) {
    let mut cur = c.clone();
    for round in 1..=max_rounds {
        let mut next = cur.clone();
        for p in passes {
            next = p.run(&next);
        }
        next = compact_wires(&next);
        if next == cur {
            return (cur, round, true);
        }
        cur = next;
    }
    (cur, max_rounds, false)
}

/// The full pipeline with the default iteration budget.
pub fn optimize(c: &Circuit) -> Circuit {
    optimize_with(c, &Pass::ALL, 100).0
}

/// Exhaustively compare two circuits as functions from input bits to
/// output bits. Interfaces of different shape are simply not equivalent;
/// more inputs than `max_bits` is an error, not an answer.
pub fn equivalent(a: &Circuit, b: &Circuit, max_bits: u32) -> Result<bool, String> {
    if a.inputs.len() != b.inputs.len() || a.outputs.len() != b.outputs.len() {
        return Ok(false);
    }
    let n = a.inputs.len() as u32;
    if n > max_bits {
        return Err(format!(
            "checking {n} input bits needs 2^{n} simulations; raise --max-bits past {max_bits} to allow it"
        ));
    }
    let total: u64 = 1 << n;
    let check_range = |from: u64, to: u64| {
        for v in from..to {
            let bits: Vec<bool> = (0..n).map(|i| v >> i & 1 == 1).collect();
            if a.execute(&bits) != b.execute(&bits) {
                return false;
            }
        }
        true
    };
    if total < 512 {
        return Ok(check_range(0, total));
    }
    let threads = 4;
    let chunk = total.div_ceil(threads);
    Ok(std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let from = t * chunk;
                let to = ((t + 1) * chunk).min(total);
                s.spawn(move || check_range(from, to))
            })
            .collect();
        handles.into_iter().all(|h| h.join().unwrap())
    }))
}
