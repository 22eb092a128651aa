//! Gate-level netlists in the ISCAS-89 `.bench` dialect.
//!
//! The accepted grammar is line-oriented:
//!
//! ```text
//! # comment
//! INPUT(<wire>)
//! OUTPUT(<wire>)
//! <wire> = <KIND>(<wire>{, <wire>})
//! ```
//!
//! Gate keywords are case-insensitive; wire names are case-sensitive
//! identifiers over `[A-Za-z0-9_.\[\]]`. `DFF` takes exactly one argument
//! (its next-state input) and is the only sequential element; there is one
//! implicit global clock and no reset port. Whitespace around tokens is
//! insignificant.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index into [`Netlist::wires`].
pub type WireId = u32;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buff,
    Dff,
}

impl GateKind {
    fn from_keyword(kw: &str) -> Option<GateKind> {
        match kw.to_ascii_uppercase().as_str() {
            "AND" => Some(GateKind::And),
            "NAND" => Some(GateKind::Nand),
            "OR" => Some(GateKind::Or),
            "NOR" => Some(GateKind::Nor),
            "XOR" => Some(GateKind::Xor),
            "XNOR" => Some(GateKind::Xnor),
            "NOT" => Some(GateKind::Not),
            "BUFF" | "BUF" => Some(GateKind::Buff),
            "DFF" => Some(GateKind::Dff),
            _ => None,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buff => "BUFF",
            GateKind::Dff => "DFF",
        }
    }

    /// Single-fanin kinds: NOT, BUFF and DFF.
    pub fn is_unary(&self) -> bool {
        matches!(self, GateKind::Not | GateKind::Buff | GateKind::Dff)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub output: WireId,
    pub fanins: Vec<WireId>,
}

/// A parsed, simulation-ready circuit.
///
/// `wires` holds every wire name in canonical order: primary inputs in
/// declaration order, then gate outputs in declaration order. Every legal
/// wire is one or the other (single-driver rule), so the list is complete.
#[derive(Clone, Debug)]
pub struct Netlist {
    pub name: String,
    pub wires: Vec<String>,
    pub inputs: Vec<WireId>,
    pub outputs: Vec<WireId>,
    pub gates: Vec<Gate>,
    /// Evaluation order over combinational gates (indices into `gates`,
    /// DFFs excluded).
    pub topo_order: Vec<usize>,
    index: HashMap<String, WireId>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {token:?} ({reason})")]
    Syntax {
        line: usize,
        column: usize,
        token: String,
        reason: String,
    },
    #[error("line {line}: wire {wire:?} is driven more than once")]
    DuplicateDriver { line: usize, wire: String },
    #[error("line {line}: wire {wire:?} is not declared by any INPUT or gate")]
    UndeclaredWire { line: usize, wire: String },
    #[error("combinational loop through wires: {}", cycle.join(" -> "))]
    CombinationalLoop { cycle: Vec<String> },
    #[error("line {line}: unsupported gate kind {kind:?}")]
    UnsupportedGateKind { line: usize, kind: String },
}

fn is_wire_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']')
}

fn syntax(line: usize, column: usize, token: &str, reason: &str) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        token: token.to_string(),
        reason: reason.to_string(),
    }
}

enum Statement {
    Input(String),
    Output(String),
    Assign {
        output: String,
        kind_token: String,
        fanins: Vec<String>,
    },
}

/// Splits one non-comment line into a statement. `line_no` is 1-based.
fn parse_line(raw: &str, line_no: usize) -> Result<Option<Statement>, ParseError> {
    let text = match raw.find('#') {
        Some(pos) => &raw[..pos],
        None => raw,
    };
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }

    let col_of = |sub: &str| {
        // byte offset of `sub` within the raw line, 1-based; best effort
        raw.find(sub).map(|p| p + 1).unwrap_or(1)
    };

    let take_wire = |tok: &str| -> Result<String, ParseError> {
        let t = tok.trim();
        if t.is_empty() {
            return Err(syntax(line_no, 1, tok, "expected a wire name"));
        }
        if !t.chars().all(is_wire_char) {
            return Err(syntax(line_no, col_of(t), t, "invalid wire name"));
        }
        Ok(t.to_string())
    };

    // INPUT(x) / OUTPUT(x)
    for (kw, is_input) in [("INPUT", true), ("OUTPUT", false)] {
        let head = trimmed.split('(').next().unwrap_or("").trim();
        if head.eq_ignore_ascii_case(kw) && !trimmed.contains('=') {
            let open = trimmed.find('(');
            let close = trimmed.rfind(')');
            let (open, close) = match (open, close) {
                (Some(o), Some(c)) if o < c => (o, c),
                _ => {
                    return Err(syntax(line_no, 1, trimmed, "expected KIND(wire)"));
                }
            };
            if !trimmed[close + 1..].trim().is_empty() {
                return Err(syntax(
                    line_no,
                    col_of(trimmed[close + 1..].trim()),
                    trimmed[close + 1..].trim(),
                    "trailing characters after ')'",
                ));
            }
            let wire = take_wire(&trimmed[open + 1..close])?;
            return Ok(Some(if is_input {
                Statement::Input(wire)
            } else {
                Statement::Output(wire)
            }));
        }
    }

    // wire = KIND(a, b, ...)
    let eq = trimmed.find('=').ok_or_else(|| {
        syntax(
            line_no,
            1,
            trimmed,
            "expected INPUT(..), OUTPUT(..) or an assignment",
        )
    })?;
    let output = take_wire(&trimmed[..eq])?;
    let rhs = trimmed[eq + 1..].trim();
    let open = rhs
        .find('(')
        .ok_or_else(|| syntax(line_no, col_of(rhs), rhs, "expected KIND(fanins)"))?;
    let close = rhs
        .rfind(')')
        .ok_or_else(|| syntax(line_no, col_of(rhs), rhs, "missing ')'"))?;
    if close < open || !rhs[close + 1..].trim().is_empty() {
        return Err(syntax(line_no, col_of(rhs), rhs, "malformed gate expression"));
    }
    let kind_token = rhs[..open].trim().to_string();
    if kind_token.is_empty() {
        return Err(syntax(line_no, col_of(rhs), rhs, "missing gate kind"));
    }
    let mut fanins = Vec::new();
    for part in rhs[open + 1..close].split(',') {
        fanins.push(take_wire(part)?);
    }
    Ok(Some(Statement::Assign {
        output,
        kind_token,
        fanins,
    }))
}

/// Parses `.bench` text into a validated [`Netlist`].
pub fn parse_bench(text: &str, name: &str) -> Result<Netlist, ParseError> {
    let mut statements = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(stmt) = parse_line(raw, i + 1)? {
            statements.push((i + 1, stmt));
        }
    }

    let mut wires: Vec<String> = Vec::new();
    let mut index: HashMap<String, WireId> = HashMap::new();
    let mut driven: HashMap<String, usize> = HashMap::new(); // wire -> line
    let mut input_names: Vec<String> = Vec::new();
    let mut output_names: Vec<(usize, String)> = Vec::new();

    let declare = |wires: &mut Vec<String>, index: &mut HashMap<String, WireId>, name: &str| {
        if !index.contains_key(name) {
            index.insert(name.to_string(), wires.len() as WireId);
            wires.push(name.to_string());
        }
    };

    // first pass: establish drivers and canonical wire order
    for (line, stmt) in &statements {
        match stmt {
            Statement::Input(w) => {
                if driven.insert(w.clone(), *line).is_some() {
                    return Err(ParseError::DuplicateDriver {
                        line: *line,
                        wire: w.clone(),
                    });
                }
                declare(&mut wires, &mut index, w);
                input_names.push(w.clone());
            }
            Statement::Output(w) => output_names.push((*line, w.clone())),
            Statement::Assign { output, .. } => {
                if driven.insert(output.clone(), *line).is_some() {
                    return Err(ParseError::DuplicateDriver {
                        line: *line,
                        wire: output.clone(),
                    });
                }
                declare(&mut wires, &mut index, output);
            }
        }
    }

    // second pass: build gates, resolving fanins
    let mut gates = Vec::new();
    for (line, stmt) in &statements {
        if let Statement::Assign {
            output,
            kind_token,
            fanins,
        } = stmt
        {
            let kind = GateKind::from_keyword(kind_token).ok_or_else(|| {
                ParseError::UnsupportedGateKind {
                    line: *line,
                    kind: kind_token.clone(),
                }
            })?;
            if kind.is_unary() && fanins.len() != 1 {
                return Err(syntax(
                    *line,
                    1,
                    kind_token,
                    &format!("{} takes exactly one fanin, got {}", kind, fanins.len()),
                ));
            }
            if !kind.is_unary() && fanins.len() < 2 {
                return Err(syntax(
                    *line,
                    1,
                    kind_token,
                    &format!("{} needs at least two fanins, got {}", kind, fanins.len()),
                ));
            }
            let mut ids = Vec::with_capacity(fanins.len());
            for f in fanins {
                let id = index.get(f).ok_or_else(|| ParseError::UndeclaredWire {
                    line: *line,
                    wire: f.clone(),
                })?;
                ids.push(*id);
            }
            gates.push(Gate {
                kind,
                output: index[output],
                fanins: ids,
            });
        }
    }

    let inputs: Vec<WireId> = input_names.iter().map(|n| index[n]).collect();
    let mut outputs = Vec::new();
    for (line, w) in &output_names {
        let id = index.get(w).ok_or_else(|| ParseError::UndeclaredWire {
            line: *line,
            wire: w.clone(),
        })?;
        outputs.push(*id);
    }

    let topo_order = topo_sort(&wires, &gates)?;

    Ok(Netlist {
        name: name.to_string(),
        wires,
        inputs,
        outputs,
        gates,
        topo_order,
        index,
    })
}

/// Kahn topological sort over combinational gates; DFF outputs act as
/// sources (cycles through a DFF are legal).
fn topo_sort(wires: &[String], gates: &[Gate]) -> Result<Vec<usize>, ParseError> {
    let comb: Vec<usize> = (0..gates.len())
        .filter(|&i| gates[i].kind != GateKind::Dff)
        .collect();
    // wire -> driving combinational gate
    let mut driver: HashMap<WireId, usize> = HashMap::new();
    for &gi in &comb {
        driver.insert(gates[gi].output, gi);
    }
    let mut indegree: HashMap<usize, usize> = comb.iter().map(|&g| (g, 0)).collect();
    let mut dependents: HashMap<usize, Vec<usize>> = HashMap::new();
    for &gi in &comb {
        for &f in &gates[gi].fanins {
            if let Some(&src) = driver.get(&f) {
                *indegree.get_mut(&gi).unwrap() += 1;
                dependents.entry(src).or_default().push(gi);
            }
        }
    }
    let mut ready: Vec<usize> = comb
        .iter()
        .copied()
        .filter(|g| indegree[g] == 0)
        .collect();
    ready.sort_unstable();
    let mut order = Vec::with_capacity(comb.len());
    let mut queue = std::collections::VecDeque::from(ready);
    while let Some(g) = queue.pop_front() {
        order.push(g);
        if let Some(deps) = dependents.get(&g) {
            for &d in deps {
                let e = indegree.get_mut(&d).unwrap();
                *e -= 1;
                if *e == 0 {
                    queue.push_back(d);
                }
            }
        }
    }
    if order.len() != comb.len() {
        // find one cycle among unplaced gates for the diagnostic
        let placed: std::collections::HashSet<usize> = order.iter().copied().collect();
        let stuck: Vec<usize> = comb.iter().copied().filter(|g| !placed.contains(g)).collect();
        let cycle = find_cycle(&stuck, gates, &driver, wires);
        return Err(ParseError::CombinationalLoop { cycle });
    }
    Ok(order)
}

fn find_cycle(
    stuck: &[usize],
    gates: &[Gate],
    driver: &HashMap<WireId, usize>,
    wires: &[String],
) -> Vec<String> {
    let in_stuck: std::collections::HashSet<usize> = stuck.iter().copied().collect();
    // walk fanin edges until a gate repeats
    let mut seen: Vec<usize> = Vec::new();
    let mut cur = stuck[0];
    loop {
        if let Some(pos) = seen.iter().position(|&g| g == cur) {
            let mut cycle: Vec<String> = seen[pos..]
                .iter()
                .map(|&g| wires[gates[g].output as usize].clone())
                .collect();
            cycle.push(wires[gates[seen[pos]].output as usize].clone());
            return cycle;
        }
        seen.push(cur);
        let next = gates[cur]
            .fanins
            .iter()
            .filter_map(|f| driver.get(f).copied())
            .find(|g| in_stuck.contains(g));
        match next {
            Some(g) => cur = g,
            None => return vec![wires[gates[cur].output as usize].clone()],
        }
    }
}

impl Netlist {
    pub fn wire_id(&self, name: &str) -> Option<WireId> {
        self.index.get(name).copied()
    }

    pub fn wire_name(&self, id: WireId) -> &str {
        &self.wires[id as usize]
    }

    pub fn num_wires(&self) -> usize {
        self.wires.len()
    }

    pub fn input_names(&self) -> Vec<String> {
        self.inputs
            .iter()
            .map(|&id| self.wires[id as usize].clone())
            .collect()
    }

    pub fn is_input(&self, id: WireId) -> bool {
        self.inputs.contains(&id)
    }

    /// Wires in the analysis universe: every wire except pure primary
    /// inputs. (An input that is also declared OUTPUT stays in.)
    pub fn analysis_wires(&self) -> Vec<WireId> {
        let input_set: std::collections::HashSet<WireId> = self.inputs.iter().copied().collect();
        let output_set: std::collections::HashSet<WireId> = self.outputs.iter().copied().collect();
        (0..self.wires.len() as WireId)
            .filter(|id| !input_set.contains(id) || output_set.contains(id))
            .collect()
    }

    /// Serializes back to `.bench`; reparsing yields a structurally
    /// identical circuit.
    pub fn to_bench(&self) -> String {
        let mut out = String::new();
        for &id in &self.inputs {
            out.push_str(&format!("INPUT({})\n", self.wires[id as usize]));
        }
        for &id in &self.outputs {
            out.push_str(&format!("OUTPUT({})\n", self.wires[id as usize]));
        }
        for g in &self.gates {
            let fanins: Vec<&str> = g
                .fanins
                .iter()
                .map(|&f| self.wires[f as usize].as_str())
                .collect();
            out.push_str(&format!(
                "{} = {}({})\n",
                self.wires[g.output as usize],
                g.kind.keyword(),
                fanins.join(", ")
            ));
        }
        out
    }
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateDriver { wire: String },
    UndeclaredWire { wire: String },
    CombinationalLoop { cycle: Vec<String> },
    BadArity { wire: String, kind: GateKind, arity: usize },
    BadTopoOrder { gate_output: String },
    InconsistentSets { detail: String },
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-checks every structural invariant on an already-built netlist.
/// Violations are data, not failures; the parser never produces any.
pub fn validate(netlist: &Netlist) -> ValidationReport {
    let mut violations = Vec::new();
    let num_wires = netlist.wires.len() as WireId;

    let mut drivers: HashMap<WireId, usize> = HashMap::new();
    for (i, g) in netlist.gates.iter().enumerate() {
        if g.output >= num_wires {
            violations.push(Violation::UndeclaredWire {
                wire: format!("<gate {} output id {}>", i, g.output),
            });
            continue;
        }
        if drivers.insert(g.output, i).is_some() || netlist.inputs.contains(&g.output) {
            violations.push(Violation::DuplicateDriver {
                wire: netlist.wires[g.output as usize].clone(),
            });
        }
        for &f in &g.fanins {
            if f >= num_wires {
                violations.push(Violation::UndeclaredWire {
                    wire: format!("<gate {} fanin id {}>", i, f),
                });
            }
        }
        let arity_ok = if g.kind.is_unary() {
            g.fanins.len() == 1
        } else {
            g.fanins.len() >= 2
        };
        if !arity_ok {
            violations.push(Violation::BadArity {
                wire: netlist
                    .wires
                    .get(g.output as usize)
                    .cloned()
                    .unwrap_or_default(),
                kind: g.kind,
                arity: g.fanins.len(),
            });
        }
    }

    // every wire must be an input or a gate output
    for (id, name) in netlist.wires.iter().enumerate() {
        let id = id as WireId;
        if !netlist.inputs.contains(&id) && !drivers.contains_key(&id) {
            violations.push(Violation::UndeclaredWire { wire: name.clone() });
        }
    }
    for &o in &netlist.outputs {
        if o >= num_wires {
            violations.push(Violation::InconsistentSets {
                detail: format!("output id {} out of range", o),
            });
        }
    }

    // acyclicity (ignoring DFF fanin edges) and topo_order validity
    match topo_sort(&netlist.wires, &netlist.gates) {
        Ok(_) => {
            let mut position: HashMap<usize, usize> = HashMap::new();
            for (pos, &g) in netlist.topo_order.iter().enumerate() {
                position.insert(g, pos);
            }
            let comb_driver: HashMap<WireId, usize> = netlist
                .gates
                .iter()
                .enumerate()
                .filter(|(_, g)| g.kind != GateKind::Dff)
                .map(|(i, g)| (g.output, i))
                .collect();
            for &gi in &netlist.topo_order {
                for &f in &netlist.gates[gi].fanins {
                    if let Some(&src) = comb_driver.get(&f) {
                        if position.get(&src).map_or(true, |&p| p >= position[&gi]) {
                            violations.push(Violation::BadTopoOrder {
                                gate_output: netlist.wires[netlist.gates[gi].output as usize]
                                    .clone(),
                            });
                        }
                    }
                }
            }
            let comb_count = netlist
                .gates
                .iter()
                .filter(|g| g.kind != GateKind::Dff)
                .count();
            if netlist.topo_order.len() != comb_count {
                violations.push(Violation::InconsistentSets {
                    detail: "topo_order does not cover all combinational gates".into(),
                });
            }
        }
        Err(ParseError::CombinationalLoop { cycle }) => {
            violations.push(Violation::CombinationalLoop { cycle });
        }
        Err(_) => unreachable!("topo_sort only fails with CombinationalLoop"),
    }

    ValidationReport { violations }
}
