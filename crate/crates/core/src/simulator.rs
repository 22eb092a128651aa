//! Deterministic cycle-based two-valued logic simulation.
//!
//! Each cycle: primary inputs are driven from their stimulus policies,
//! DFF outputs present the stored state (initially 0), combinational gates
//! evaluate in topological order, DFF states latch their fanin values, and
//! every wire's value is appended to its waveform. Identical
//! `(netlist, spec)` always produces a bit-identical store.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::netlist::{GateKind, Netlist};
use crate::rng::{substream_seed, SplitMix64};
use crate::store::{fnv1a64, WaveformStore};

/// Drive policy for one primary input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputPolicy {
    #[serde(rename = "random")]
    FullRandom,
    #[serde(rename = "const0")]
    Const0,
    #[serde(rename = "const1")]
    Const1,
}

/// Stimulus for a simulation campaign.
///
/// JSON form: `{"seed":u64,"cycles":u64,"inputs":{"<name>":"random"|"const0"|"const1"}}`.
/// Inputs not listed default to `random`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub seed: u64,
    pub cycles: u64,
    #[serde(default)]
    pub inputs: BTreeMap<String, InputPolicy>,
}

impl StimulusSpec {
    pub fn full_random(seed: u64, cycles: u64) -> Self {
        StimulusSpec {
            seed,
            cycles,
            inputs: BTreeMap::new(),
        }
    }

    /// FNV-1a digest of the canonical JSON encoding, recorded in stores for
    /// provenance. `inputs` is a BTreeMap so the encoding is stable.
    pub fn digest(&self) -> u64 {
        fnv1a64(
            serde_json::to_string(self)
                .expect("stimulus spec serializes")
                .as_bytes(),
        )
    }
}

#[derive(Error, Debug)]
pub enum SimError {
    #[error("stimulus names unknown primary input {0:?}")]
    InvalidSpec(String),
    #[error("cycle count {0} too small: an encoded waveform needs at least 2 samples")]
    CyclesTooSmall(u64),
    #[error("exhaustive simulation limited to 20 inputs, netlist has {0}")]
    TooManyInputs(usize),
    #[error("exhaustive simulation requires a purely combinational netlist (found DFF)")]
    SequentialNotSupported,
}

/// Compiled combinational operation. Two-input gates (the bulk of any
/// netlist) carry their fanins inline; wider gates index into the pool.
#[derive(Clone, Copy)]
enum Op {
    Binary {
        code: BinCode,
        out: u32,
        a: u32,
        b: u32,
    },
    Unary {
        invert: bool,
        out: u32,
        a: u32,
    },
    Wide {
        code: WideCode,
        /// XORed onto the reduction: turns AND/OR/XOR into NAND/NOR/XNOR.
        invert: u8,
        out: u32,
        lo: u32,
        hi: u32,
    },
}

#[derive(Clone, Copy)]
enum BinCode {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
}

#[derive(Clone, Copy)]
enum WideCode {
    And,
    Or,
    Xor,
}

struct Compiled {
    num_wires: usize,
    ops: Vec<Op>, // combinational gates in topo order
    fanin_pool: Vec<u32>,
    dffs: Vec<(u32, u32)>, // (output wire, data-in wire)
}

fn compile(netlist: &Netlist) -> Compiled {
    let mut ops = Vec::with_capacity(netlist.topo_order.len());
    let mut fanin_pool = Vec::new();
    for &gi in &netlist.topo_order {
        let g = &netlist.gates[gi];
        let out = g.output;
        let op = match (g.kind, g.fanins.len()) {
            (GateKind::Not, _) => Op::Unary {
                invert: true,
                out,
                a: g.fanins[0],
            },
            (GateKind::Buff, _) => Op::Unary {
                invert: false,
                out,
                a: g.fanins[0],
            },
            (kind, 2) => {
                let code = match kind {
                    GateKind::And => BinCode::And,
                    GateKind::Nand => BinCode::Nand,
                    GateKind::Or => BinCode::Or,
                    GateKind::Nor => BinCode::Nor,
                    GateKind::Xor => BinCode::Xor,
                    GateKind::Xnor => BinCode::Xnor,
                    _ => unreachable!(),
                };
                Op::Binary {
                    code,
                    out,
                    a: g.fanins[0],
                    b: g.fanins[1],
                }
            }
            (kind, _) => {
                let lo = fanin_pool.len() as u32;
                fanin_pool.extend_from_slice(&g.fanins);
                let hi = fanin_pool.len() as u32;
                let (code, invert) = match kind {
                    GateKind::And => (WideCode::And, 0),
                    GateKind::Nand => (WideCode::And, 1),
                    GateKind::Or => (WideCode::Or, 0),
                    GateKind::Nor => (WideCode::Or, 1),
                    GateKind::Xor => (WideCode::Xor, 0),
                    GateKind::Xnor => (WideCode::Xor, 1),
                    _ => unreachable!(),
                };
                Op::Wide {
                    code,
                    invert,
                    out,
                    lo,
                    hi,
                }
            }
        };
        ops.push(op);
    }
    let dffs: Vec<(u32, u32)> = netlist
        .gates
        .iter()
        .filter(|g| g.kind == GateKind::Dff)
        .map(|g| (g.output, g.fanins[0]))
        .collect();
    // the eval loop uses unchecked indexing; pin its safety invariant here
    let m = netlist.num_wires() as u32;
    for op in &ops {
        match *op {
            Op::Binary { out, a, b, .. } => assert!(out < m && a < m && b < m),
            Op::Unary { out, a, .. } => assert!(out < m && a < m),
            Op::Wide { out, lo, hi, .. } => {
                assert!(out < m && hi as usize <= fanin_pool.len() && lo <= hi);
                assert!(fanin_pool[lo as usize..hi as usize].iter().all(|&f| f < m));
            }
        }
    }
    for &(out, din) in &dffs {
        assert!(out < m && din < m);
    }
    Compiled {
        num_wires: netlist.num_wires(),
        ops,
        fanin_pool,
        dffs,
    }
}

/// Evaluates one compiled op and records the fresh output bit into the
/// pending waveform word. Every wire is written exactly once per cycle, so
/// the pending update is a plain OR.
///
/// Safety: all wire and pool indices were bounds-asserted in [`compile`],
/// and `values`/`pending` are sized to the wire count.
#[inline(always)]
fn eval_op(op: &Op, fanin_pool: &[u32], values: &mut [u8], pending: &mut [u64], bit: u32) {
    let val = |w: u32| -> u8 { unsafe { *values.get_unchecked(w as usize) } };
    let (out, v) = match *op {
        Op::Binary { code, out, a, b } => {
            let x = val(a);
            let y = val(b);
            let v = match code {
                BinCode::And => x & y,
                BinCode::Nand => (x & y) ^ 1,
                BinCode::Or => x | y,
                BinCode::Nor => (x | y) ^ 1,
                BinCode::Xor => x ^ y,
                BinCode::Xnor => (x ^ y) ^ 1,
            };
            (out, v)
        }
        Op::Unary { invert, out, a } => (out, val(a) ^ invert as u8),
        Op::Wide {
            code,
            invert,
            out,
            lo,
            hi,
        } => {
            let fanins = unsafe { fanin_pool.get_unchecked(lo as usize..hi as usize) };
            let v = match code {
                WideCode::And => fanins.iter().fold(1u8, |acc, &f| acc & val(f)),
                WideCode::Or => fanins.iter().fold(0u8, |acc, &f| acc | val(f)),
                WideCode::Xor => fanins.iter().fold(0u8, |acc, &f| acc ^ val(f)),
            };
            (out, v ^ invert)
        }
    };
    unsafe {
        *values.get_unchecked_mut(out as usize) = v;
        *pending.get_unchecked_mut(out as usize) |= (v as u64) << bit;
    }
}

/// Simulates `netlist` under `spec`, recording every wire.
pub fn simulate(netlist: &Netlist, spec: &StimulusSpec) -> Result<WaveformStore, SimError> {
    if spec.cycles < 2 {
        return Err(SimError::CyclesTooSmall(spec.cycles));
    }
    let input_names = netlist.input_names();
    for name in spec.inputs.keys() {
        if !input_names.iter().any(|n| n == name) {
            return Err(SimError::InvalidSpec(name.clone()));
        }
    }
    let policies: Vec<InputPolicy> = input_names
        .iter()
        .map(|n| {
            spec.inputs
                .get(n)
                .copied()
                .unwrap_or(InputPolicy::FullRandom)
        })
        .collect();

    let compiled = compile(netlist);
    let cycles = spec.cycles as usize;
    let words_per_row = cycles.div_ceil(64);
    let m = compiled.num_wires;

    let mut rows: Vec<Vec<u64>> = (0..m).map(|_| vec![0u64; words_per_row]).collect();
    let mut values = vec![0u8; m];
    let mut pending = vec![0u64; m];
    let mut dff_state = vec![0u8; compiled.dffs.len()];

    // one substream per input index; constants never draw, so their streams
    // simply go unused and the others are unaffected
    let mut random_inputs: Vec<(usize, u32)> = Vec::new(); // (input idx, wire)
    let mut const_words: Vec<(usize, u64)> = Vec::new(); // (wire, full-word pattern)
    for (j, (&wire, policy)) in netlist.inputs.iter().zip(&policies).enumerate() {
        match policy {
            InputPolicy::FullRandom => random_inputs.push((j, wire)),
            InputPolicy::Const0 => const_words.push((wire as usize, 0)),
            InputPolicy::Const1 => {
                values[wire as usize] = 1;
                const_words.push((wire as usize, u64::MAX));
            }
        }
    }
    let mut streams: Vec<SplitMix64> = netlist
        .inputs
        .iter()
        .enumerate()
        .map(|(j, _)| SplitMix64::new(substream_seed(spec.seed, j)))
        .collect();
    let mut rand_words = vec![0u64; netlist.inputs.len()];

    let fanin_pool = &compiled.fanin_pool[..];
    let flush = |pending: &mut Vec<u64>, rows: &mut Vec<Vec<u64>>, word_idx: usize| {
        for (w, row) in rows.iter_mut().enumerate() {
            row[word_idx] = pending[w];
            pending[w] = 0;
        }
        for &(w, pattern) in &const_words {
            rows[w][word_idx] = pattern;
        }
    };

    let mut word_idx = 0usize;
    for cycle in 0..cycles {
        let bit = (cycle & 63) as u32;
        if bit == 0 {
            for &(j, _) in &random_inputs {
                rand_words[j] = streams[j].next_u64();
            }
        }
        for &(j, wire) in &random_inputs {
            let v = ((rand_words[j] >> bit) & 1) as u8;
            values[wire as usize] = v;
            pending[wire as usize] |= (v as u64) << bit;
        }
        for (k, &(out, _)) in compiled.dffs.iter().enumerate() {
            let v = dff_state[k];
            values[out as usize] = v;
            pending[out as usize] |= (v as u64) << bit;
        }
        for op in &compiled.ops {
            eval_op(op, fanin_pool, &mut values, &mut pending, bit);
        }
        for (k, &(_, din)) in compiled.dffs.iter().enumerate() {
            dff_state[k] = values[din as usize];
        }
        if bit == 63 {
            flush(&mut pending, &mut rows, word_idx);
            word_idx += 1;
        }
    }
    if cycles % 64 != 0 {
        flush(&mut pending, &mut rows, word_idx);
    }

    let bit_rows: Vec<Bits> = rows
        .into_iter()
        .map(|r| Bits::from_words(r, cycles))
        .collect();
    Ok(WaveformStore::new(
        netlist.name.clone(),
        spec.seed,
        spec.cycles,
        spec.digest(),
        netlist.wires.clone(),
        bit_rows,
        input_names,
    ))
}

/// One cycle per input assignment, all `2^l` assignments in ascending
/// binary order with the first declared input as the most significant bit.
/// Only defined for purely combinational netlists with at most 20 inputs.
pub fn exhaustive_simulate(netlist: &Netlist) -> Result<WaveformStore, SimError> {
    let l = netlist.inputs.len();
    if l > 20 {
        return Err(SimError::TooManyInputs(l));
    }
    if netlist.gates.iter().any(|g| g.kind == GateKind::Dff) {
        return Err(SimError::SequentialNotSupported);
    }
    let compiled = compile(netlist);
    let cycles = 1usize << l;
    let words_per_row = cycles.div_ceil(64);
    let m = compiled.num_wires;
    let mut rows: Vec<Vec<u64>> = (0..m).map(|_| vec![0u64; words_per_row]).collect();
    let mut values = vec![0u8; m];
    let mut pending = vec![0u64; m];
    let mut word_idx = 0usize;
    for assignment in 0..cycles {
        let bit = (assignment & 63) as u32;
        for (j, &wire) in netlist.inputs.iter().enumerate() {
            let v = ((assignment >> (l - 1 - j)) & 1) as u8;
            values[wire as usize] = v;
            pending[wire as usize] |= (v as u64) << bit;
        }
        for op in &compiled.ops {
            eval_op(op, &compiled.fanin_pool, &mut values, &mut pending, bit);
        }
        if bit == 63 || assignment + 1 == cycles {
            for (w, row) in rows.iter_mut().enumerate() {
                row[word_idx] = pending[w];
                pending[w] = 0;
            }
            word_idx += 1;
        }
    }
    let rows: Vec<Bits> = rows
        .into_iter()
        .map(|r| Bits::from_words(r, cycles))
        .collect();
    Ok(WaveformStore::new(
        netlist.name.clone(),
        0,
        cycles as u64,
        fnv1a64(b"exhaustive"),
        netlist.wires.clone(),
        rows,
        netlist.input_names(),
    ))
}

/// Plain Boolean reference semantics, independent of the compiled fast
/// path; used by the replay auditor.
fn eval_reference(kind: GateKind, fanins: &[bool]) -> bool {
    match kind {
        GateKind::And => fanins.iter().all(|&v| v),
        GateKind::Nand => !fanins.iter().all(|&v| v),
        GateKind::Or => fanins.iter().any(|&v| v),
        GateKind::Nor => !fanins.iter().any(|&v| v),
        GateKind::Xor => fanins.iter().fold(false, |a, &v| a ^ v),
        GateKind::Xnor => !fanins.iter().fold(false, |a, &v| a ^ v),
        GateKind::Not => !fanins[0],
        GateKind::Buff => fanins[0],
        GateKind::Dff => unreachable!("DFF handled by the auditor directly"),
    }
}

/// Replay auditor: re-derives every gate output from the recorded fanin
/// values on sampled cycles and reports the first mismatch.
pub fn verify_store_consistency(
    netlist: &Netlist,
    store: &WaveformStore,
    stride: usize,
) -> Result<(), String> {
    let stride = stride.max(1);
    let cycles = store.cycles as usize;
    let row_of = |wire: u32| -> Result<&Bits, String> {
        store
            .row_by_name(netlist.wire_name(wire))
            .ok_or_else(|| format!("store is missing wire {:?}", netlist.wire_name(wire)))
    };
    for g in &netlist.gates {
        let out_row = row_of(g.output)?;
        let fanin_rows: Vec<&Bits> = g
            .fanins
            .iter()
            .map(|&f| row_of(f))
            .collect::<Result<_, _>>()?;
        let mut c = 0;
        while c < cycles {
            let got = out_row.get(c);
            let expect = if g.kind == GateKind::Dff {
                c > 0 && fanin_rows[0].get(c - 1)
            } else {
                let vals: Vec<bool> = fanin_rows.iter().map(|r| r.get(c)).collect();
                eval_reference(g.kind, &vals)
            };
            if got != expect {
                return Err(format!(
                    "wire {:?} cycle {}: recorded {} but fanins imply {}",
                    netlist.wire_name(g.output),
                    c,
                    got as u8,
                    expect as u8
                ));
            }
            c += stride;
        }
    }
    Ok(())
}
