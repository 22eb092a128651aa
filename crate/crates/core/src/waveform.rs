//! Waveform transition encoding and VCD import.
//!
//! An original waveform `<s_1 .. s_{n+1}>` is encoded pairwise: each
//! adjacent pair maps to 1 when the value changed and 0 when it held
//! (`<0,0> -> 0`, `<0,1> -> 1`, `<1,0> -> 1`, `<1,1> -> 0`), giving an
//! encoded sequence of length n. Downstream entropy and mutual-information
//! analysis runs on these encoded sequences, never on the raw samples.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use thiserror::Error;

use crate::bits::Bits;
use crate::real::Real;
use crate::store::{fnv1a64, WaveformStore};

#[derive(Error, Debug)]
pub enum WaveformError {
    #[error("waveform needs at least 2 samples to encode, got {0}")]
    SequenceTooShort(usize),
}

/// Transition-encoded waveform of one wire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedWaveform {
    pub wire: String,
    pub symbols: Bits,
    pub transition_count: usize,
}

/// Applies the pairwise transition rule to a sampled waveform.
pub fn encode_transitions(
    wire: impl Into<String>,
    samples: &Bits,
) -> Result<EncodedWaveform, WaveformError> {
    let symbols = samples
        .adjacent_xor()
        .ok_or(WaveformError::SequenceTooShort(samples.len()))?;
    let transition_count = symbols.count_ones();
    Ok(EncodedWaveform {
        wire: wire.into(),
        symbols,
        transition_count,
    })
}

/// Fraction of encoded symbols that are transitions.
pub fn transition_probability<F: Real>(encoded: &EncodedWaveform) -> F {
    assert!(!encoded.symbols.is_empty());
    F::from_count(encoded.transition_count) / F::from_count(encoded.symbols.len())
}

#[derive(Error, Debug)]
pub enum VcdError {
    #[error("VCD syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no VCD signals match scope filter {0:?}")]
    NoMatchingSignals(String),
    #[error("VCD variable {0:?} is {1} bits wide; multi-bit vectors must be pre-split")]
    VectorUnsupported(String, u32),
    #[error("VCD sample period must be positive")]
    BadSamplePeriod,
    #[error("VCD read: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-wire counts of `x`/`z` (and pre-dump unknown) samples that were
/// mapped to 0 during import.
#[derive(Debug, Default, Clone)]
pub struct VcdImportReport {
    pub xz_warnings: BTreeMap<String, u64>,
}

#[derive(Clone, Copy, PartialEq)]
enum VcdValue {
    Zero,
    One,
    Unknown,
}

struct VcdVar {
    name: String,
    value: VcdValue,
    samples: Bits,
    xz_count: u64,
}

/// Imports an IEEE-1364-style VCD dump with scalar variables, resampling on
/// a fixed grid: one sample at every multiple of `sample_period` ticks from
/// 0 through the last timestamp. A sample takes the value in effect after
/// all changes at or before that time; `x`/`z` map to 0 and are counted in
/// the report.
pub fn import_vcd<R: Read>(
    reader: R,
    scope_filter: &str,
    sample_period: u64,
    source_name: &str,
) -> Result<(WaveformStore, VcdImportReport), VcdError> {
    if sample_period == 0 {
        return Err(VcdError::BadSamplePeriod);
    }
    let mut lines = BufReader::new(reader).lines();
    let mut line_no = 0usize;

    let mut scope_stack: Vec<String> = Vec::new();
    let mut vars: Vec<VcdVar> = Vec::new();
    let mut by_code: BTreeMap<String, usize> = BTreeMap::new();
    let mut header_done = false;

    // --- header ---
    'header: while let Some(line) = lines.next() {
        line_no += 1;
        let line = line?;
        let mut tok = line.split_whitespace().peekable();
        while let Some(word) = tok.next() {
            match word {
                "$scope" => {
                    let _kind = tok.next();
                    if let Some(name) = tok.next() {
                        scope_stack.push(name.to_string());
                    }
                }
                "$upscope" => {
                    scope_stack.pop();
                }
                "$var" => {
                    let _ty = tok.next();
                    let width: u32 = tok
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| VcdError::Syntax {
                            line: line_no,
                            message: "bad $var width".into(),
                        })?;
                    let code = tok
                        .next()
                        .ok_or_else(|| VcdError::Syntax {
                            line: line_no,
                            message: "missing $var id code".into(),
                        })?
                        .to_string();
                    // reference name may contain a bit-select token; take the
                    // identifier part
                    let refname = tok
                        .next()
                        .ok_or_else(|| VcdError::Syntax {
                            line: line_no,
                            message: "missing $var reference".into(),
                        })?
                        .to_string();
                    let full = if scope_stack.is_empty() {
                        refname.clone()
                    } else {
                        format!("{}.{}", scope_stack.join("."), refname)
                    };
                    if full.starts_with(scope_filter) {
                        if width != 1 {
                            return Err(VcdError::VectorUnsupported(full, width));
                        }
                        by_code.insert(code, vars.len());
                        vars.push(VcdVar {
                            name: full,
                            value: VcdValue::Unknown,
                            samples: Bits::new(),
                            xz_count: 0,
                        });
                    }
                }
                "$enddefinitions" => {
                    header_done = true;
                    break 'header;
                }
                _ => {} // $date, $timescale, $comment bodies, $end, ...
            }
        }
    }
    if !header_done {
        return Err(VcdError::Syntax {
            line: line_no,
            message: "missing $enddefinitions".into(),
        });
    }
    if vars.is_empty() {
        return Err(VcdError::NoMatchingSignals(scope_filter.to_string()));
    }

    // --- value changes, resampled on the fly ---
    let mut next_sample: u64 = 0; // next grid time to emit
    let mut current_time: u64 = 0;

    let emit_until = |vars: &mut Vec<VcdVar>, t_exclusive: u64, next_sample: &mut u64| {
        while *next_sample < t_exclusive {
            for v in vars.iter_mut() {
                match v.value {
                    VcdValue::Zero => v.samples.push(false),
                    VcdValue::One => v.samples.push(true),
                    VcdValue::Unknown => {
                        v.samples.push(false);
                        v.xz_count += 1;
                    }
                }
            }
            *next_sample += sample_period;
        }
    };

    while let Some(line) = lines.next() {
        line_no += 1;
        let line = line?;
        for word in line.split_whitespace() {
            if let Some(stripped) = word.strip_prefix('#') {
                let t: u64 = stripped.parse().map_err(|_| VcdError::Syntax {
                    line: line_no,
                    message: format!("bad timestamp {:?}", word),
                })?;
                // grid points strictly before the new time use the old values
                emit_until(&mut vars, t, &mut next_sample);
                current_time = t;
            } else if word.starts_with('$') {
                // $dumpvars / $end and friends carry no values themselves
                continue;
            } else if let Some(first) = word.chars().next() {
                match first {
                    '0' | '1' | 'x' | 'X' | 'z' | 'Z' => {
                        let code = &word[1..];
                        if let Some(&vi) = by_code.get(code) {
                            vars[vi].value = match first {
                                '0' => VcdValue::Zero,
                                '1' => VcdValue::One,
                                _ => VcdValue::Unknown,
                            };
                        }
                    }
                    'b' | 'B' | 'r' | 'R' => {
                        // vector/real change: value and id come as two words;
                        // unmatched vectors are skipped wholesale, so just
                        // ignore this word and the id that follows.
                        break;
                    }
                    _ => {
                        return Err(VcdError::Syntax {
                            line: line_no,
                            message: format!("unrecognized token {:?}", word),
                        });
                    }
                }
            }
        }
    }
    // close the grid: one sample at every grid point up to and including the
    // final timestamp
    emit_until(&mut vars, current_time + 1, &mut next_sample);

    let cycles = vars[0].samples.len() as u64;
    let mut report = VcdImportReport::default();
    for v in &vars {
        if v.xz_count > 0 {
            report.xz_warnings.insert(v.name.clone(), v.xz_count);
        }
    }
    let names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
    let rows: Vec<Bits> = vars.into_iter().map(|v| v.samples).collect();
    let store = WaveformStore::new(
        source_name,
        0,
        cycles,
        fnv1a64(format!("vcd:{}:{}:{}", source_name, scope_filter, sample_period).as_bytes()),
        names,
        rows,
        Vec::new(),
    );
    Ok((store, report))
}
