//! Two-qubit circuit IR, depth and layering, routed circuits, and routing
//! metrics.
//!
//! Only two-qubit gates matter for routing, so a [`LogicalCircuit`] is just an
//! ordered list of qubit pairs. Single-qubit statements are dropped at parse
//! time.

use std::fmt;

use crate::architecture::{Architecture, Placement};
use crate::error::{Error, Result};

/// A two-qubit gate at position `index` (counted from 1) in its circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LogicalGate {
    pub index: usize,
    pub q0: usize,
    pub q1: usize,
}

impl LogicalGate {
    pub fn qubits(&self) -> (usize, usize) {
        (self.q0, self.q1)
    }

    pub fn touches(&self, q: usize) -> bool {
        self.q0 == q || self.q1 == q
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalCircuit {
    n_qubits: usize,
    gates: Vec<LogicalGate>,
}

impl LogicalCircuit {
    /// Builds a circuit from qubit pairs, numbering gates from 1.
    pub fn new(n_qubits: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut gates = Vec::with_capacity(pairs.len());
        for (i, &(q0, q1)) in pairs.iter().enumerate() {
            if q0 >= n_qubits || q1 >= n_qubits {
                return Err(Error::input(format!(
                    "gate {} acts on ({q0},{q1}) but the circuit has {n_qubits} qubits",
                    i + 1
                )));
            }
            if q0 == q1 {
                return Err(Error::input(format!("gate {} acts twice on qubit {q0}", i + 1)));
            }
            gates.push(LogicalGate { index: i + 1, q0, q1 });
        }
        Ok(Self { n_qubits, gates })
    }

    pub fn empty(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[LogicalGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Looks up a gate by its 1-based index.
    pub fn gate(&self, index: usize) -> Option<&LogicalGate> {
        index.checked_sub(1).and_then(|i| self.gates.get(i))
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.gates.iter().map(LogicalGate::qubits).collect()
    }

    pub fn depth(&self) -> usize {
        fold_depths(self.n_qubits, self.gates.iter().map(LogicalGate::qubits)).0
    }

    /// Partner qubits of each qubit's interactions, in circuit order.
    pub fn interaction_queues(&self) -> Vec<Vec<usize>> {
        let mut queues = vec![Vec::new(); self.n_qubits];
        for g in &self.gates {
            queues[g.q0].push(g.q1);
            queues[g.q1].push(g.q0);
        }
        queues
    }

    /// Gate indices of each qubit's interactions, aligned with
    /// [`interaction_queues`](Self::interaction_queues).
    pub fn interaction_gate_ids(&self) -> Vec<Vec<usize>> {
        let mut ids = vec![Vec::new(); self.n_qubits];
        for g in &self.gates {
            ids[g.q0].push(g.index);
            ids[g.q1].push(g.index);
        }
        ids
    }

    /// Mean fraction of the `floor(n/2)` possible gates present per layer.
    pub fn layer_density(&self) -> f64 {
        let depth = self.depth();
        let max_per_layer = self.n_qubits / 2;
        if depth == 0 || max_per_layer == 0 {
            return 0.0;
        }
        self.gates.len() as f64 / (depth * max_per_layer) as f64
    }

    /// Renders the circuit in gatelist format with a `qubits N` header.
    pub fn to_gatelist(&self) -> String {
        let mut out = format!("qubits {}\n", self.n_qubits);
        for g in &self.gates {
            out.push_str(&format!("{} {}\n", g.q0, g.q1));
        }
        out
    }
}

/// Folds the per-qubit depth counters over the gates, returning the circuit
/// depth and the timestep (from 1) assigned to each gate.
fn fold_depths(n_qubits: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> (usize, Vec<usize>) {
    let mut counter = vec![0usize; n_qubits];
    let mut slots = Vec::new();
    for (a, b) in pairs {
        let t = counter[a].max(counter[b]) + 1;
        counter[a] = t;
        counter[b] = t;
        slots.push(t);
    }
    (counter.into_iter().max().unwrap_or(0), slots)
}

/// Depth of an ordered list of two-qubit gates over `n_qubits` qubits.
pub fn circuit_depth(gates: &[(usize, usize)], n_qubits: usize) -> Result<usize> {
    if let Some(&(a, b)) = gates.iter().find(|&&(a, b)| a >= n_qubits || b >= n_qubits) {
        return Err(Error::input(format!("gate ({a},{b}) out of range for {n_qubits} qubits")));
    }
    Ok(fold_depths(n_qubits, gates.iter().copied()).0)
}

/// Splits the circuit into as-soon-as-possible layers.
pub fn decompose_layers(circuit: &LogicalCircuit) -> Vec<Vec<LogicalGate>> {
    let (depth, slots) = fold_depths(circuit.n_qubits, circuit.gates.iter().map(LogicalGate::qubits));
    let mut layers = vec![Vec::new(); depth];
    for (gate, t) in circuit.gates.iter().zip(slots) {
        layers[t - 1].push(*gate);
    }
    layers
}

/// An exact non-negative rational, always stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(Self { num: num / g, den: den / g })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthMetrics {
    pub original_depth: usize,
    pub routed_depth: usize,
    pub cdo: usize,
    pub cdr: Ratio,
}

/// Circuit depth overhead and ratio of a routed circuit against its original.
pub fn cdo_cdr(original_depth: usize, routed_depth: usize) -> Result<DepthMetrics> {
    if original_depth == 0 {
        return Err(Error::UndefinedRatio);
    }
    if routed_depth < original_depth {
        return Err(Error::contract(format!(
            "routed depth {routed_depth} is below original depth {original_depth}"
        )));
    }
    Ok(DepthMetrics {
        original_depth,
        routed_depth,
        cdo: routed_depth - original_depth,
        cdr: Ratio::new(routed_depth as u64, original_depth as u64).expect("non-zero denominator"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Cnot,
    Swap,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Cnot => "CNOT",
            OpKind::Swap => "SWAP",
        })
    }
}

/// A hardware-level operation on two nodes at a given timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutedOp {
    pub kind: OpKind,
    pub n0: usize,
    pub n1: usize,
    pub timestep: usize,
    /// Index of the logical gate this CNOT implements.
    pub source_gate: Option<usize>,
}

impl RoutedOp {
    pub fn cnot(n0: usize, n1: usize, timestep: usize, gate: usize) -> Self {
        Self { kind: OpKind::Cnot, n0, n1, timestep, source_gate: Some(gate) }
    }

    pub fn swap(n0: usize, n1: usize, timestep: usize) -> Self {
        Self { kind: OpKind::Swap, n0, n1, timestep, source_gate: None }
    }
}

impl fmt::Display for RoutedOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} {} {} {}", self.timestep, self.kind, self.n0, self.n1)?;
        if let Some(g) = self.source_gate {
            write!(f, " g={g}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutedCircuit {
    pub arch_id: String,
    pub initial_placement: Placement,
    pub ops: Vec<RoutedOp>,
    pub final_placement: Placement,
}

impl RoutedCircuit {
    /// Depth after compacting every op into its earliest free timestep.
    pub fn depth(&self) -> usize {
        relayer_ops(&self.ops).iter().map(|op| op.timestep).max().unwrap_or(0)
    }

    /// Largest timestep stamp as emitted, without compaction.
    pub fn stamped_depth(&self) -> usize {
        self.ops.iter().map(|op| op.timestep).max().unwrap_or(0)
    }

    pub fn swap_count(&self) -> usize {
        self.ops.iter().filter(|op| op.kind == OpKind::Swap).count()
    }

    /// Returns a copy with timesteps reassigned by earliest-slot layering.
    pub fn relayered(&self) -> Self {
        Self { ops: relayer_ops(&self.ops), ..self.clone() }
    }

    /// Renders the routed-circuit dump: `#` header lines, then one op per line.
    pub fn to_dump(&self) -> String {
        let join =
            |p: &Placement| p.node_to_qubit().iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!("# arch {}\n", self.arch_id);
        out.push_str(&format!("# initial {}\n", join(&self.initial_placement)));
        out.push_str(&format!("# final {}\n", join(&self.final_placement)));
        for op in &self.ops {
            out.push_str(&op.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses a dump produced by [`to_dump`](Self::to_dump).
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut arch_id = None;
        let mut initial = None;
        let mut final_ = None;
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let mut words = header.split_whitespace();
                match words.next() {
                    Some("arch") => arch_id = words.next().map(str::to_owned),
                    Some(key @ ("initial" | "final")) => {
                        let nodes = words
                            .map(|w| w.parse::<usize>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|e| Error::parse(line_no, e.to_string()))?;
                        let p = Placement::from_node_to_qubit(nodes)?;
                        if key == "initial" {
                            initial = Some(p);
                        } else {
                            final_ = Some(p);
                        }
                    }
                    _ => {}
                }
                continue;
            }
            ops.push(parse_op(line).map_err(|msg| Error::parse(line_no, msg))?);
        }
        let missing = |what: &str| Error::parse(0, format!("dump lacks '# {what}' header"));
        Ok(Self {
            arch_id: arch_id.ok_or_else(|| missing("arch"))?,
            initial_placement: initial.ok_or_else(|| missing("initial"))?,
            ops,
            final_placement: final_.ok_or_else(|| missing("final"))?,
        })
    }
}

fn parse_op(line: &str) -> std::result::Result<RoutedOp, String> {
    let mut words = line.split_whitespace();
    let timestep = words
        .next()
        .and_then(|w| w.strip_prefix("t="))
        .ok_or("expected t=<timestep>")?
        .parse::<usize>()
        .map_err(|e| e.to_string())?;
    let kind = match words.next() {
        Some("CNOT") => OpKind::Cnot,
        Some("SWAP") => OpKind::Swap,
        other => return Err(format!("unknown op kind {other:?}")),
    };
    let mut node = || -> std::result::Result<usize, String> {
        words.next().ok_or("missing node")?.parse::<usize>().map_err(|e| e.to_string())
    };
    let n0 = node()?;
    let n1 = node()?;
    let source_gate = match words.next() {
        None => None,
        Some(w) => Some(
            w.strip_prefix("g=")
                .ok_or("expected g=<gate index>")?
                .parse::<usize>()
                .map_err(|e| e.to_string())?,
        ),
    };
    if words.next().is_some() {
        return Err("trailing tokens".into());
    }
    if n0 == n1 {
        return Err(format!("op acts twice on node {n0}"));
    }
    Ok(RoutedOp { kind, n0, n1, timestep, source_gate })
}

/// Reassigns timesteps by earliest-slot layering over nodes, preserving the
/// relative order of ops that share a node.
pub fn relayer_ops(ops: &[RoutedOp]) -> Vec<RoutedOp> {
    let mut order: Vec<usize> = (0..ops.len()).collect();
    order.sort_by_key(|&i| ops[i].timestep);
    let n = ops.iter().map(|op| op.n0.max(op.n1) + 1).max().unwrap_or(0);
    let mut last = vec![0usize; n];
    let mut out: Vec<RoutedOp> = order
        .into_iter()
        .map(|i| {
            let mut op = ops[i];
            let t = last[op.n0].max(last[op.n1]) + 1;
            last[op.n0] = t;
            last[op.n1] = t;
            op.timestep = t;
            op
        })
        .collect();
    out.sort_by_key(|op| op.timestep);
    out
}

/// Replaces every SWAP with three CNOTs on the same node pair and re-layers.
pub fn decompose_swaps(routed: &RoutedCircuit) -> RoutedCircuit {
    let mut ops = Vec::with_capacity(routed.ops.len() + 2 * routed.swap_count());
    let mut sorted = routed.ops.clone();
    sorted.sort_by_key(|op| op.timestep);
    for op in sorted {
        match op.kind {
            OpKind::Cnot => ops.push(op),
            // Same-pair CNOTs share both nodes, so layering keeps them sequential.
            OpKind::Swap => {
                ops.extend(std::iter::repeat_n(RoutedOp { kind: OpKind::Cnot, source_gate: None, ..op }, 3))
            }
        }
    }
    RoutedCircuit { ops: relayer_ops(&ops), ..routed.clone() }
}

/// Which routing contract a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// (a) op on a node pair that is not an architecture edge.
    NonEdge,
    /// (b) tagged CNOT does not act on the nodes holding its gate's qubits.
    WrongNodes,
    /// (c) tagged CNOTs out of order for some qubit.
    OutOfOrder,
    /// (d) an original gate is missing or appears more than once.
    GateCount,
    /// (e) a node is used twice within one timestep.
    NodeReuse,
    /// A tag names no gate in the original circuit.
    UnknownGate,
    /// Untagged CNOTs that do not form complete three-CNOT SWAPs.
    BrokenSwap,
    /// Replayed placement differs from the recorded final placement.
    FinalPlacement,
    /// Placement sizes disagree with the architecture.
    PlacementSize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Position of the offending op in `routed.ops`, when there is one.
    pub op: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            Some(i) => write!(f, "{:?} at op {i}: {}", self.kind, self.detail),
            None => write!(f, "{:?}: {}", self.kind, self.detail),
        }
    }
}

/// Checks a routed circuit against the original circuit and architecture.
///
/// Untagged CNOTs are accepted only as consecutive triples on one node pair
/// (a decomposed SWAP) and are replayed as a SWAP once complete.
pub fn validate_routed(
    original: &LogicalCircuit,
    routed: &RoutedCircuit,
    arch: &Architecture,
) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut push = |kind, op, detail: String| violations.push(Violation { kind, op, detail });
    let n = arch.n_nodes();
    let mut placement = routed.initial_placement.clone();
    if placement.len() != n || routed.final_placement.len() != n {
        push(ViolationKind::PlacementSize, None, format!("placements must cover {n} nodes"));
        return Err(violations);
    }

    let gate_ids = original.interaction_gate_ids();
    let mut next_interaction = vec![0usize; original.n_qubits()];
    let mut seen = vec![0usize; original.len() + 1];
    // node -> (partner node, untagged CNOTs seen so far)
    let mut pending: Vec<Option<(usize, u8)>> = vec![None; n];
    let mut used_at: Vec<usize> = vec![0; n];

    let mut order: Vec<usize> = (0..routed.ops.len()).collect();
    order.sort_by_key(|&i| routed.ops[i].timestep);

    for i in order {
        let op = routed.ops[i];
        if op.n0 >= n || op.n1 >= n || !arch.is_edge(op.n0, op.n1) {
            push(ViolationKind::NonEdge, Some(i), format!("({},{}) is not an edge", op.n0, op.n1));
            continue;
        }
        for node in [op.n0, op.n1] {
            if used_at[node] == op.timestep {
                push(
                    ViolationKind::NodeReuse,
                    Some(i),
                    format!("node {node} used twice at t={}", op.timestep),
                );
            }
            used_at[node] = op.timestep;
        }

        let untagged_cnot = op.kind == OpKind::Cnot && op.source_gate.is_none();
        for (a, b) in [(op.n0, op.n1), (op.n1, op.n0)] {
            if let Some((partner, _)) = pending[a] {
                if !(untagged_cnot && partner == b) {
                    push(
                        ViolationKind::BrokenSwap,
                        Some(i),
                        format!("node {a} interrupted inside a decomposed SWAP"),
                    );
                    pending[a] = None;
                    pending[partner] = None;
                }
            }
        }

        match (op.kind, op.source_gate) {
            (OpKind::Swap, _) => placement.swap_nodes(op.n0, op.n1),
            (OpKind::Cnot, None) => {
                let count = pending[op.n0].map_or(0, |(_, c)| c) + 1;
                if count == 3 {
                    placement.swap_nodes(op.n0, op.n1);
                    pending[op.n0] = None;
                    pending[op.n1] = None;
                } else {
                    pending[op.n0] = Some((op.n1, count));
                    pending[op.n1] = Some((op.n0, count));
                }
            }
            (OpKind::Cnot, Some(g)) => {
                let Some(gate) = original.gate(g) else {
                    push(ViolationKind::UnknownGate, Some(i), format!("no gate {g}"));
                    continue;
                };
                seen[g] += 1;
                let (qa, qb) = (placement.qubit_at(op.n0), placement.qubit_at(op.n1));
                if !((qa == gate.q0 && qb == gate.q1) || (qa == gate.q1 && qb == gate.q0)) {
                    push(
                        ViolationKind::WrongNodes,
                        Some(i),
                        format!("gate {g} needs qubits ({},{}) but nodes hold ({qa},{qb})", gate.q0, gate.q1),
                    );
                }
                for q in [gate.q0, gate.q1] {
                    let expected = gate_ids[q].get(next_interaction[q]).copied();
                    if expected != Some(g) {
                        push(
                            ViolationKind::OutOfOrder,
                            Some(i),
                            format!("qubit {q} expected gate {expected:?}, got {g}"),
                        );
                    } else {
                        next_interaction[q] += 1;
                    }
                }
            }
        }
    }

    if pending.iter().any(Option::is_some) {
        push(ViolationKind::BrokenSwap, None, "incomplete decomposed SWAP at end of circuit".into());
    }
    for (g, &count) in seen.iter().enumerate().skip(1) {
        if count != 1 {
            push(ViolationKind::GateCount, None, format!("gate {g} appears {count} times"));
        }
    }
    if placement != routed.final_placement {
        push(ViolationKind::FinalPlacement, None, "replayed placement differs from final placement".into());
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitFormat {
    Gatelist,
    QasmSubset,
}

impl CircuitFormat {
    /// Guesses the format from a file extension; `.qasm` means the QASM subset.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("qasm") => CircuitFormat::QasmSubset,
            _ => CircuitFormat::Gatelist,
        }
    }
}

pub fn parse_circuit(text: &str, format: CircuitFormat) -> Result<LogicalCircuit> {
    match format {
        CircuitFormat::Gatelist => parse_gatelist(text),
        CircuitFormat::QasmSubset => parse_qasm(text),
    }
}

fn parse_gatelist(text: &str) -> Result<LogicalCircuit> {
    let mut declared = None;
    let mut pairs = Vec::new();
    let mut seen_gate = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        if words[0] == "qubits" {
            if seen_gate || declared.is_some() {
                return Err(Error::parse(line_no, "'qubits' header must come first"));
            }
            let [_, n] = words[..] else {
                return Err(Error::parse(line_no, "expected 'qubits N'"));
            };
            declared = Some(n.parse::<usize>().map_err(|e| Error::parse(line_no, e.to_string()))?);
            continue;
        }
        let [a, b] = words[..] else {
            return Err(Error::parse(line_no, "expected two qubit indices"));
        };
        let q = |w: &str| {
            w.parse::<usize>().map_err(|e| Error::parse(line_no, format!("bad qubit index '{w}': {e}")))
        };
        let (q0, q1) = (q(a)?, q(b)?);
        if let Some(n) = declared {
            if q0 >= n || q1 >= n {
                return Err(Error::input(format!("line {line_no}: qubit index exceeds declared size {n}")));
            }
        }
        if q0 == q1 {
            return Err(Error::input(format!("line {line_no}: gate acts twice on qubit {q0}")));
        }
        pairs.push((q0, q1));
        seen_gate = true;
    }
    let n = declared.unwrap_or_else(|| pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
    LogicalCircuit::new(n, &pairs)
}

fn parse_qasm(text: &str) -> Result<LogicalCircuit> {
    // Strip line comments, keeping line structure for error reporting.
    let cleaned: Vec<&str> = text.lines().map(|l| l.split("//").next().unwrap_or("")).collect();
    let mut statements = Vec::new();
    let mut current = String::new();
    let mut start_line = 0;
    for (i, line) in cleaned.iter().enumerate() {
        for ch in line.chars() {
            if ch == ';' {
                statements.push((start_line, std::mem::take(&mut current)));
                start_line = 0;
            } else {
                if start_line == 0 && !ch.is_whitespace() {
                    start_line = i + 1;
                }
                current.push(ch);
            }
        }
        current.push(' ');
    }
    if !current.trim().is_empty() {
        return Err(Error::parse(start_line, "statement missing ';'"));
    }

    let mut register: Option<(String, usize)> = None;
    let mut pairs = Vec::new();
    for (line_no, stmt) in statements {
        let stmt = stmt.trim();
        let (head, rest) = match stmt.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (stmt, ""),
        };
        match head {
            "qreg" => {
                if register.is_some() {
                    return Err(Error::input(format!(
                        "line {line_no}: only one quantum register is supported"
                    )));
                }
                let (name, size) =
                    parse_indexed(rest).ok_or_else(|| Error::parse(line_no, "expected qreg name[N]"))?;
                register = Some((name.to_owned(), size));
            }
            "cx" | "CX" => {
                let (reg, size) = register.as_ref().ok_or_else(|| Error::parse(line_no, "cx before qreg"))?;
                let (a, b) =
                    rest.split_once(',').ok_or_else(|| Error::parse(line_no, "expected cx a[i],b[j]"))?;
                let operand = |s: &str| -> Result<usize> {
                    let (name, idx) = parse_indexed(s.trim())
                        .ok_or_else(|| Error::parse(line_no, format!("bad operand '{s}'")))?;
                    if name != reg {
                        return Err(Error::parse(line_no, format!("unknown register '{name}'")));
                    }
                    if idx >= *size {
                        return Err(Error::input(format!(
                            "line {line_no}: index {idx} out of range for register {reg}[{size}]"
                        )));
                    }
                    Ok(idx)
                };
                let q0 = operand(a)?;
                let q1 = operand(b)?;
                if q0 == q1 {
                    return Err(Error::input(format!("line {line_no}: cx acts twice on qubit {q0}")));
                }
                pairs.push((q0, q1));
            }
            _ => {}
        }
    }
    let n = register.map_or(0, |(_, n)| n);
    LogicalCircuit::new(n, &pairs)
}

/// Parses `name[N]`.
fn parse_indexed(s: &str) -> Option<(&str, usize)> {
    let (name, rest) = s.split_once('[')?;
    let idx = rest.strip_suffix(']')?.trim().parse().ok()?;
    let name = name.trim();
    (!name.is_empty()).then_some((name, idx))
}
