//! Classical leveled oblivious branching programs.
//!
//! One matrix encoding covers deterministic, nondeterministic and probabilistic
//! programs: level `i` holds a pair of `w x w` nonnegative matrices, entry
//! `[a][b]` being the weight of the edge from node `a` to node `b` when the bit
//! read at that level is 0 or 1. Deterministic and nondeterministic programs are
//! special entry patterns. Probabilistic rows may be sub-stochastic; the
//! missing mass is an immediate reject.
//!
//! Matrices are stored row-sparse so that wide deterministic programs stay cheap.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::{self, ensure_exhaustive, index_to_bits, Acceptor, InputSelection, Mode, Verdict, PROB_TOL};
use crate::error::{Error, Result};
use crate::functions::BooleanFunction;
use crate::order::Order;

/// Row-sum slack allowed for probabilistic rows.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Largest classical width any builder will produce.
pub const WIDTH_CAP: usize = 65536;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Deterministic,
    Nondeterministic,
    Probabilistic,
}

/// A square nonnegative matrix stored as sparse rows `(column, weight)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Transition {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        Transition { rows }
    }

    /// Dense row-major input; zero entries are dropped.
    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let w = dense.len();
        let rows = dense
            .iter()
            .enumerate()
            .map(|(a, row)| {
                if row.len() != w {
                    return Err(Error::InvalidProgram(format!(
                        "row {a} has {} entries, expected {w}",
                        row.len()
                    )));
                }
                Ok(row
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x != 0.0)
                    .map(|(b, &x)| (b, x))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(Transition { rows })
    }

    /// Deterministic matrix sending node `a` to `targets[a]`.
    pub fn from_targets(targets: &[usize]) -> Self {
        Transition {
            rows: targets.iter().map(|&b| vec![(b, 1.0)]).collect(),
        }
    }

    pub fn identity(w: usize) -> Self {
        Self::from_targets(&(0..w).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, a: usize) -> &[(usize, f64)] {
        &self.rows[a]
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let w = self.rows.len();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; w];
                for &(b, x) in row {
                    if b < w {
                        dense[b] += x;
                    }
                }
                dense
            })
            .collect()
    }
}

/// One invariant breach reported by [`LeveledProgram::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    LevelCount {
        expected: usize,
        got: usize,
    },
    MatrixShape {
        level: usize,
        bit: u8,
        rows: usize,
    },
    ColumnOutOfRange {
        level: usize,
        bit: u8,
        node: usize,
        column: usize,
    },
    NotOneHot {
        level: usize,
        bit: u8,
        node: usize,
    },
    NonBinaryEntry {
        level: usize,
        bit: u8,
        node: usize,
    },
    NegativeEntry {
        level: usize,
        bit: u8,
        node: usize,
    },
    SuperStochastic {
        level: usize,
        bit: u8,
        node: usize,
        sum: f64,
    },
    StartOutOfRange(usize),
    AcceptOutOfRange(usize),
    LayerMismatch {
        layer: usize,
        what: &'static str,
    },
    ConnectorShape {
        layer: usize,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Diagnostic::*;
        match self {
            LevelCount { expected, got } => write!(f, "level count {got} != n {expected}"),
            MatrixShape { level, bit, rows } => {
                write!(f, "matrix at level {level}, bit {bit} has {rows} rows")
            }
            ColumnOutOfRange {
                level,
                bit,
                node,
                column,
            } => write!(
                f,
                "edge to node {column} out of range at level {level}, bit {bit}, node {node}"
            ),
            NotOneHot { level, bit, node } => {
                write!(f, "row not one-hot at level {level}, bit {bit}, node {node}")
            }
            NonBinaryEntry { level, bit, node } => {
                write!(f, "entry not in {{0,1}} at level {level}, bit {bit}, node {node}")
            }
            NegativeEntry { level, bit, node } => {
                write!(f, "negative entry at level {level}, bit {bit}, node {node}")
            }
            SuperStochastic { level, bit, node, sum } => write!(
                f,
                "super-stochastic row (sum {sum}) at level {level}, bit {bit}, node {node}"
            ),
            StartOutOfRange(s) => write!(f, "start node {s} out of range"),
            AcceptOutOfRange(a) => write!(f, "accepting node {a} out of range"),
            LayerMismatch { layer, what } => write!(f, "layer {layer} differs in {what}"),
            ConnectorShape { layer } => write!(f, "connector after layer {layer} malformed"),
        }
    }
}

/// A leveled oblivious program of uniform width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProgramJson", into = "ProgramJson")]
pub struct LeveledProgram {
    kind: Kind,
    width: usize,
    order: Order,
    levels: Vec<[Transition; 2]>,
    start: usize,
    accept: Vec<usize>,
}

impl LeveledProgram {
    /// Builds and validates a program; `accept` is sorted and deduplicated.
    pub fn new(
        kind: Kind,
        width: usize,
        order: Order,
        levels: Vec<[Transition; 2]>,
        start: usize,
        accept: Vec<usize>,
    ) -> Result<Self> {
        let p = Self::new_unchecked(kind, width, order, levels, start, accept);
        p.ensure_valid()?;
        Ok(p)
    }

    /// Builds without validation; [`LeveledProgram::validate`] reports any breach.
    pub fn new_unchecked(
        kind: Kind,
        width: usize,
        order: Order,
        levels: Vec<[Transition; 2]>,
        start: usize,
        mut accept: Vec<usize>,
    ) -> Self {
        accept.sort_unstable();
        accept.dedup();
        LeveledProgram {
            kind,
            width,
            order,
            levels,
            start,
            accept,
        }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(levels + 1) * width`, an upper bound on the node count.
    pub fn size_bound(&self) -> usize {
        (self.n() + 1) * self.width
    }

    pub fn order(&self) -> &Order {
        &self.order
    }

    pub fn levels(&self) -> &[[Transition; 2]] {
        &self.levels
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn accept(&self) -> &[usize] {
        &self.accept
    }

    pub fn is_accepting(&self, node: usize) -> bool {
        self.accept.binary_search(&node).is_ok()
    }

    /// Same matrices under another kind tag.
    pub fn with_kind(&self, kind: Kind) -> Self {
        LeveledProgram { kind, ..self.clone() }
    }

    pub fn with_accept(&self, accept: Vec<usize>) -> Result<Self> {
        Self::new(
            self.kind,
            self.width,
            self.order.clone(),
            self.levels.clone(),
            self.start,
            accept,
        )
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let w = self.width;
        if self.levels.len() != self.n() {
            out.push(Diagnostic::LevelCount {
                expected: self.n(),
                got: self.levels.len(),
            });
        }
        for (level, pair) in self.levels.iter().enumerate() {
            for (bit, m) in pair.iter().enumerate() {
                validate_matrix(self.kind, w, level, bit as u8, m, &mut out);
            }
        }
        if self.start >= w {
            out.push(Diagnostic::StartOutOfRange(self.start));
        }
        out.extend(
            self.accept
                .iter()
                .filter(|&&a| a >= w)
                .map(|&a| Diagnostic::AcceptOutOfRange(a)),
        );
        out
    }

    fn ensure_valid(&self) -> Result<()> {
        diagnostics_to_result(self.validate())
    }

    fn initial_state(&self) -> State {
        State::single(self.kind, self.width, self.start)
    }

    fn run(&self, input: &[bool], mut state: State) -> State {
        for (level, pair) in self.levels.iter().enumerate() {
            let bit = input[self.order.var_at(level)];
            state = state.step(&pair[bit as usize]);
        }
        state
    }

    /// Acceptance on `input`: 0 or 1 for deterministic and nondeterministic
    /// programs, the acceptance probability for probabilistic ones.
    pub fn eval(&self, input: &[bool]) -> Result<f64> {
        check_len(self.n(), input)?;
        Ok(self.run(input, self.initial_state()).acceptance(&self.accept))
    }

    pub fn accepts(&self, input: &[bool]) -> Result<bool> {
        Ok(self.eval(input)? > 0.5)
    }

    /// Program with order `new_order` whose level `i` carries the matrix pair
    /// this program uses for variable `new_order(i)`.
    pub fn permute_transitions(&self, new_order: &Order) -> Result<Self> {
        if new_order.len() != self.n() {
            return Err(Error::InvalidOrder(format!(
                "order has {} entries, program reads {}",
                new_order.len(),
                self.n()
            )));
        }
        let level_of = self.order.inverse();
        let levels = (0..self.n())
            .map(|i| self.levels[level_of[new_order.var_at(i)]].clone())
            .collect();
        Ok(LeveledProgram {
            order: new_order.clone(),
            levels,
            ..self.clone()
        })
    }

    /// Checks that every supplied order yields the same function.
    pub fn is_commutative(&self, orders: &[Order], inputs: &InputSelection) -> Result<CommutativityReport> {
        commutativity(self, orders, inputs, |o| self.permute_transitions(o))
    }

    pub fn represents(&self, f: &BooleanFunction, mode: Mode, inputs: &InputSelection) -> Result<Verdict> {
        check::check(self, f, mode, inputs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses and validates.
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn validate_matrix(kind: Kind, w: usize, level: usize, bit: u8, m: &Transition, out: &mut Vec<Diagnostic>) {
    if m.dim() != w {
        out.push(Diagnostic::MatrixShape {
            level,
            bit,
            rows: m.dim(),
        });
    }
    for (node, row) in m.rows.iter().enumerate() {
        if let Some(&(column, _)) = row.iter().find(|(c, _)| *c >= w) {
            out.push(Diagnostic::ColumnOutOfRange {
                level,
                bit,
                node,
                column,
            });
        }
        if row.iter().any(|&(_, x)| x < 0.0 || !x.is_finite()) {
            out.push(Diagnostic::NegativeEntry { level, bit, node });
            continue;
        }
        let nonzero: Vec<f64> = row.iter().map(|&(_, x)| x).filter(|&x| x != 0.0).collect();
        match kind {
            Kind::Deterministic => {
                if nonzero.len() != 1 || nonzero[0] != 1.0 {
                    out.push(Diagnostic::NotOneHot { level, bit, node });
                }
            }
            Kind::Nondeterministic => {
                if nonzero.iter().any(|&x| x != 1.0) {
                    out.push(Diagnostic::NonBinaryEntry { level, bit, node });
                }
            }
            Kind::Probabilistic => {
                let sum: f64 = nonzero.iter().sum();
                if sum > 1.0 + STOCHASTIC_TOL {
                    out.push(Diagnostic::SuperStochastic { level, bit, node, sum });
                }
            }
        }
    }
}

fn diagnostics_to_result(diags: Vec<Diagnostic>) -> Result<()> {
    if diags.is_empty() {
        return Ok(());
    }
    let msg: Vec<String> = diags.iter().take(5).map(|d| d.to_string()).collect();
    Err(Error::InvalidProgram(format!(
        "{} violation(s): {}",
        diags.len(),
        msg.join("; ")
    )))
}

fn check_len(n: usize, input: &[bool]) -> Result<()> {
    if input.len() != n {
        return Err(Error::InputShape {
            expected: n,
            got: input.len(),
        });
    }
    Ok(())
}

/// Evaluation state: a node, a reachable set, or a distribution.
#[derive(Clone, Debug)]
enum State {
    Node(Option<usize>),
    Set(Vec<bool>),
    Dist(Vec<f64>),
}

impl State {
    fn single(kind: Kind, w: usize, node: usize) -> State {
        match kind {
            Kind::Deterministic => State::Node(Some(node)),
            Kind::Nondeterministic => {
                let mut s = vec![false; w];
                s[node] = true;
                State::Set(s)
            }
            Kind::Probabilistic => {
                let mut d = vec![0.0; w];
                d[node] = 1.0;
                State::Dist(d)
            }
        }
    }

    fn step(self, m: &Transition) -> State {
        match self {
            State::Node(node) => State::Node(node.and_then(|a| m.rows[a].first().map(|&(b, _)| b))),
            State::Set(set) => {
                let mut next = vec![false; set.len()];
                for (a, _) in set.iter().enumerate().filter(|(_, &on)| on) {
                    for &(b, _) in &m.rows[a] {
                        next[b] = true;
                    }
                }
                State::Set(next)
            }
            State::Dist(dist) => {
                let mut next = vec![0.0; dist.len()];
                for (a, &mass) in dist.iter().enumerate().filter(|(_, &x)| x != 0.0) {
                    for &(b, x) in &m.rows[a] {
                        next[b] += mass * x;
                    }
                }
                State::Dist(next)
            }
        }
    }

    fn relabel(self, map: &[usize]) -> State {
        match self {
            State::Node(node) => State::Node(node.map(|a| map[a])),
            State::Set(set) => {
                let mut next = vec![false; set.len()];
                for (a, &on) in set.iter().enumerate() {
                    next[map[a]] |= on;
                }
                State::Set(next)
            }
            State::Dist(dist) => {
                let mut next = vec![0.0; dist.len()];
                for (a, &x) in dist.iter().enumerate() {
                    next[map[a]] += x;
                }
                State::Dist(next)
            }
        }
    }

    fn acceptance(&self, accept: &[usize]) -> f64 {
        match self {
            State::Node(node) => match node {
                Some(a) if accept.binary_search(a).is_ok() => 1.0,
                _ => 0.0,
            },
            State::Set(set) => {
                if accept.iter().any(|&a| set[a]) {
                    1.0
                } else {
                    0.0
                }
            }
            State::Dist(dist) => accept.iter().map(|&a| dist[a]).sum(),
        }
    }
}

impl Acceptor for LeveledProgram {
    fn arity(&self) -> usize {
        self.n()
    }

    fn acceptance(&self, input: &[bool]) -> Result<f64> {
        self.eval(input)
    }
}

/// `k` stacked layers sharing one order and width.
///
/// Layer `i + 1` starts from wherever layer `i` ended, relabeled through
/// `connectors[i]` (a node map on `0..w`). Only the first layer's start node
/// and the last layer's accepting set are used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KLayerJson", into = "KLayerJson")]
pub struct KLayerProgram {
    layers: Vec<LeveledProgram>,
    connectors: Vec<Vec<usize>>,
}

impl KLayerProgram {
    pub fn new(layers: Vec<LeveledProgram>, connectors: Vec<Vec<usize>>) -> Result<Self> {
        let p = KLayerProgram { layers, connectors };
        diagnostics_to_result(p.validate())?;
        Ok(p)
    }

    /// Layers chained through identity connectors.
    pub fn stacked(layers: Vec<LeveledProgram>) -> Result<Self> {
        let w = layers.first().map_or(0, |l| l.width());
        let k = layers.len();
        Self::new(layers, vec![(0..w).collect(); k.saturating_sub(1)])
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let Some(first) = self.layers.first() else {
            out.push(Diagnostic::LayerMismatch {
                layer: 0,
                what: "count (no layers)",
            });
            return out;
        };
        for (i, layer) in self.layers.iter().enumerate() {
            out.extend(layer.validate());
            if layer.n() != first.n() {
                out.push(Diagnostic::LayerMismatch {
                    layer: i,
                    what: "arity",
                });
            }
            if layer.width() != first.width() {
                out.push(Diagnostic::LayerMismatch {
                    layer: i,
                    what: "width",
                });
            }
            if layer.order() != first.order() {
                out.push(Diagnostic::LayerMismatch {
                    layer: i,
                    what: "order",
                });
            }
            if layer.kind() != first.kind() {
                out.push(Diagnostic::LayerMismatch { layer: i, what: "kind" });
            }
        }
        if self.connectors.len() + 1 != self.layers.len() {
            out.push(Diagnostic::ConnectorShape {
                layer: self.connectors.len(),
            });
        }
        for (i, c) in self.connectors.iter().enumerate() {
            if c.len() != first.width() || c.iter().any(|&b| b >= first.width()) {
                out.push(Diagnostic::ConnectorShape { layer: i });
            }
        }
        out
    }

    pub fn k(&self) -> usize {
        self.layers.len()
    }

    pub fn n(&self) -> usize {
        self.layers[0].n()
    }

    pub fn width(&self) -> usize {
        self.layers[0].width()
    }

    pub fn kind(&self) -> Kind {
        self.layers[0].kind()
    }

    pub fn order(&self) -> &Order {
        self.layers[0].order()
    }

    pub fn layers(&self) -> &[LeveledProgram] {
        &self.layers
    }

    pub fn connectors(&self) -> &[Vec<usize>] {
        &self.connectors
    }

    /// `(k * n + 1) * width`.
    pub fn size_bound(&self) -> usize {
        (self.k() * self.n() + 1) * self.width()
    }

    pub fn eval_k(&self, input: &[bool]) -> Result<f64> {
        check_len(self.n(), input)?;
        let mut state = self.layers[0].initial_state();
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                state = state.relabel(&self.connectors[i - 1]);
            }
            state = layer.run(input, state);
        }
        Ok(state.acceptance(self.layers.last().expect("nonempty").accept()))
    }

    /// Permutes every layer's transitions by the same order.
    pub fn permute_transitions(&self, new_order: &Order) -> Result<Self> {
        Ok(KLayerProgram {
            layers: self
                .layers
                .iter()
                .map(|l| l.permute_transitions(new_order))
                .collect::<Result<_>>()?,
            connectors: self.connectors.clone(),
        })
    }

    pub fn is_commutative(&self, orders: &[Order], inputs: &InputSelection) -> Result<CommutativityReport> {
        commutativity(self, orders, inputs, |o| self.permute_transitions(o))
    }

    pub fn represents(&self, f: &BooleanFunction, mode: Mode, inputs: &InputSelection) -> Result<Verdict> {
        check::check(self, f, mode, inputs)
    }
}

impl Acceptor for KLayerProgram {
    fn arity(&self) -> usize {
        self.n()
    }

    fn acceptance(&self, input: &[bool]) -> Result<f64> {
        self.eval_k(input)
    }
}

/// Result of a commutativity scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutativityReport {
    pub commutative: bool,
    pub orders_checked: usize,
    /// First failing order and input.
    pub counterexample: Option<(Order, Vec<bool>)>,
}

/// Shared commutativity scan: compare each permuted program with the base on
/// the selected inputs, stopping at the first disagreement.
pub(crate) fn commutativity<P: Acceptor>(
    base: &P,
    orders: &[Order],
    inputs: &InputSelection,
    permute: impl Fn(&Order) -> Result<P> + Sync,
) -> Result<CommutativityReport> {
    let n = base.arity();
    let points: Vec<Vec<bool>> = match inputs {
        InputSelection::Exhaustive => {
            ensure_exhaustive(n)?;
            Vec::new()
        }
        InputSelection::Sampled { count, seed } => InputSelection::sample(n, *count, *seed),
    };
    let table = |p: &P| -> Result<Vec<f64>> {
        match inputs {
            InputSelection::Exhaustive => p.acceptance_table(),
            InputSelection::Sampled { .. } => points.par_iter().map(|x| p.acceptance(x)).collect(),
        }
    };
    let reference = table(base)?;
    for (checked, order) in orders.iter().enumerate() {
        let permuted = permute(order)?;
        let probs = table(&permuted)?;
        if let Some(pos) = reference.iter().zip(&probs).position(|(a, b)| (a - b).abs() > PROB_TOL) {
            let witness = match inputs {
                InputSelection::Exhaustive => index_to_bits(pos as u64, n),
                InputSelection::Sampled { .. } => points[pos].clone(),
            };
            return Ok(CommutativityReport {
                commutative: false,
                orders_checked: checked + 1,
                counterexample: Some((order.clone(), witness)),
            });
        }
    }
    Ok(CommutativityReport {
        commutative: true,
        orders_checked: orders.len(),
        counterexample: None,
    })
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Clone, Serialize, Deserialize)]
struct ProgramJson {
    kind: Kind,
    n: usize,
    width: usize,
    order: Order,
    start: usize,
    accept: Vec<usize>,
    levels: Vec<[Vec<Vec<f64>>; 2]>,
}

impl From<LeveledProgram> for ProgramJson {
    fn from(p: LeveledProgram) -> Self {
        ProgramJson {
            kind: p.kind,
            n: p.n(),
            width: p.width,
            levels: p.levels.iter().map(|[m0, m1]| [m0.to_dense(), m1.to_dense()]).collect(),
            order: p.order,
            start: p.start,
            accept: p.accept,
        }
    }
}

impl TryFrom<ProgramJson> for LeveledProgram {
    type Error = Error;

    fn try_from(j: ProgramJson) -> Result<Self> {
        if j.order.len() != j.n {
            return Err(Error::InvalidProgram(format!(
                "order length {} != n {}",
                j.order.len(),
                j.n
            )));
        }
        let levels = j
            .levels
            .iter()
            .map(|[m0, m1]| Ok([Transition::from_dense(m0)?, Transition::from_dense(m1)?]))
            .collect::<Result<_>>()?;
        LeveledProgram::new(j.kind, j.width, j.order, levels, j.start, j.accept)
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct KLayerJson {
    k: usize,
    layers: Vec<LeveledProgram>,
    connectors: Vec<Vec<usize>>,
}

impl From<KLayerProgram> for KLayerJson {
    fn from(p: KLayerProgram) -> Self {
        KLayerJson {
            k: p.k(),
            layers: p.layers,
            connectors: p.connectors,
        }
    }
}

impl TryFrom<KLayerJson> for KLayerProgram {
    type Error = Error;

    fn try_from(j: KLayerJson) -> Result<Self> {
        if j.k != j.layers.len() {
            return Err(Error::InvalidProgram(format!(
                "k = {} but {} layers",
                j.k,
                j.layers.len()
            )));
        }
        KLayerProgram::new(j.layers, j.connectors)
    }
}
