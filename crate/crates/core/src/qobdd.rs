//! Quantum OBDDs: per-level pairs of unitaries, a start basis state and an
//! accepting basis set, simulated exactly on state vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{commutativity, CommutativityReport};
use crate::check::{self, ensure_exhaustive, Acceptor, InputSelection, Mode, Verdict};
use crate::error::{Error, Result};
use crate::functions::BooleanFunction;
use crate::linalg::{norm_sqr, CMatrix, C64};
use crate::order::Order;

pub const DIM_CAP: usize = 4096;

/// Unitarity tolerance used at construction.
pub const UNITARY_TOL: f64 = 1e-9;

/// Depth up to which the exhaustive scan forks rayon tasks.
const PAR_DEPTH: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryViolation {
    pub level: usize,
    pub bit: u8,
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantumJson", into = "QuantumJson")]
pub struct QuantumProgram {
    dim: usize,
    order: Order,
    gates: Vec<[CMatrix; 2]>,
    start: usize,
    accept: Vec<usize>,
}

impl QuantumProgram {
    /// Builds a program, checking shapes, the dimension cap and unitarity.
    pub fn new(dim: usize, order: Order, gates: Vec<[CMatrix; 2]>, start: usize, accept: Vec<usize>) -> Result<Self> {
        let p = Self::new_unchecked(dim, order, gates, start, accept)?;
        let bad = p.validate_unitary(UNITARY_TOL);
        if let Some(v) = bad.first() {
            return Err(Error::InvalidProgram(format!(
                "{} non-unitary gate(s), first at level {}, bit {} (defect {:.3e})",
                bad.len(),
                v.level,
                v.bit,
                v.defect
            )));
        }
        Ok(p)
    }

    /// Checks shapes and caps but not unitarity.
    pub fn new_unchecked(
        dim: usize,
        order: Order,
        gates: Vec<[CMatrix; 2]>,
        start: usize,
        mut accept: Vec<usize>,
    ) -> Result<Self> {
        if dim > DIM_CAP {
            return Err(Error::CapExceeded {
                what: "quantum dimension",
                value: dim,
                cap: DIM_CAP,
            });
        }
        if gates.len() != order.len() {
            return Err(Error::InvalidProgram(format!(
                "{} gate pairs for {} variables",
                gates.len(),
                order.len()
            )));
        }
        if let Some(level) = gates.iter().position(|[g0, g1]| g0.dim() != dim || g1.dim() != dim) {
            return Err(Error::InvalidProgram(format!(
                "gate at level {level} is not {dim}x{dim}"
            )));
        }
        accept.sort_unstable();
        accept.dedup();
        if start >= dim || accept.last().is_some_and(|&a| a >= dim) {
            return Err(Error::InvalidProgram("start or accepting state out of range".into()));
        }
        Ok(QuantumProgram {
            dim,
            order,
            gates,
            start,
            accept,
        })
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> &Order {
        &self.order
    }

    pub fn gates(&self) -> &[[CMatrix; 2]] {
        &self.gates
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn accept(&self) -> &[usize] {
        &self.accept
    }

    /// Every `(level, bit)` whose gate misses `G^dagger G = I` by more than `tol`.
    pub fn validate_unitary(&self, tol: f64) -> Vec<UnitaryViolation> {
        let defects: Vec<_> = self
            .gates
            .par_iter()
            .enumerate()
            .flat_map_iter(|(level, pair)| {
                pair.iter()
                    .enumerate()
                    .map(move |(bit, g)| (level, bit as u8, g.unitarity_defect()))
            })
            .collect();
        defects
            .into_iter()
            .filter(|&(_, _, d)| d > tol || d.is_nan())
            .map(|(level, bit, defect)| UnitaryViolation { level, bit, defect })
            .collect()
    }

    fn initial_state(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim];
        v[self.start] = C64::new(1.0, 0.0);
        v
    }

    fn gate_for(&self, level: usize, input: &[bool]) -> &CMatrix {
        &self.gates[level][input[self.order.var_at(level)] as usize]
    }

    fn check_len(&self, input: &[bool]) -> Result<()> {
        if input.len() != self.n() {
            return Err(Error::InputShape {
                expected: self.n(),
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn final_state(&self, input: &[bool]) -> Result<Vec<C64>> {
        self.check_len(input)?;
        let mut state = self.initial_state();
        let mut next = state.clone();
        for level in 0..self.n() {
            self.gate_for(level, input).apply_into(&state, &mut next);
            std::mem::swap(&mut state, &mut next);
            debug_assert!((norm_sqr(&state) - 1.0).abs() < 1e-9, "norm drift at level {level}");
        }
        Ok(state)
    }

    /// Squared norm of the state before the first gate and after each gate.
    pub fn norm_trace(&self, input: &[bool]) -> Result<Vec<f64>> {
        self.check_len(input)?;
        let mut state = self.initial_state();
        let mut trace = vec![norm_sqr(&state)];
        for level in 0..self.n() {
            state = self.gate_for(level, input).apply(&state);
            trace.push(norm_sqr(&state));
        }
        Ok(trace)
    }

    fn measure(&self, state: &[C64]) -> f64 {
        let p: f64 = self.accept.iter().map(|&a| state[a].norm_sqr()).sum();
        p.clamp(0.0, 1.0)
    }

    pub fn accept_probability(&self, input: &[bool]) -> Result<f64> {
        Ok(self.measure(&self.final_state(input)?))
    }

    /// Program with order `new_order`, level `i` carrying the gates this
    /// program uses for variable `new_order(i)`.
    pub fn permute_matrices(&self, new_order: &Order) -> Result<Self> {
        if new_order.len() != self.n() {
            return Err(Error::InvalidOrder(format!(
                "order has {} entries, program reads {}",
                new_order.len(),
                self.n()
            )));
        }
        let level_of = self.order.inverse();
        Ok(QuantumProgram {
            order: new_order.clone(),
            gates: (0..self.n())
                .map(|i| self.gates[level_of[new_order.var_at(i)]].clone())
                .collect(),
            ..self.clone()
        })
    }

    pub fn represents(&self, f: &BooleanFunction, mode: Mode, inputs: &InputSelection) -> Result<Verdict> {
        check::check(self, f, mode, inputs)
    }

    pub fn represents_bounded_error(
        &self,
        f: &BooleanFunction,
        epsilon: f64,
        inputs: &InputSelection,
    ) -> Result<Verdict> {
        self.represents(f, Mode::Bounded(epsilon), inputs)
    }

    pub fn is_commutative_q(&self, orders: &[Order], inputs: &InputSelection) -> Result<CommutativityReport> {
        commutativity(self, orders, inputs, |o| self.permute_matrices(o))
    }

    /// Depth-first walk over the reading order sharing prefix states; returns
    /// probabilities indexed by the bits in level order.
    fn dfs(&self, level: usize, state: Vec<C64>) -> Vec<f64> {
        if level == self.n() {
            return vec![self.measure(&state)];
        }
        let [g0, g1] = &self.gates[level];
        let branch = |g: &CMatrix| self.dfs(level + 1, g.apply(&state));
        let (mut lo, hi) = if level < PAR_DEPTH {
            rayon::join(|| branch(g0), || branch(g1))
        } else {
            (branch(g0), branch(g1))
        };
        lo.extend(hi);
        lo
    }
}

impl Acceptor for QuantumProgram {
    fn arity(&self) -> usize {
        self.n()
    }

    fn acceptance(&self, input: &[bool]) -> Result<f64> {
        self.accept_probability(input)
    }

    fn acceptance_table(&self) -> Result<Vec<f64>> {
        let n = self.n();
        ensure_exhaustive(n)?;
        let by_level = self.dfs(0, self.initial_state());
        let mut table = vec![0.0; by_level.len()];
        for (li, p) in by_level.into_iter().enumerate() {
            let idx = (0..n)
                .filter(|&level| (li >> (n - 1 - level)) & 1 == 1)
                .fold(0usize, |acc, level| acc | 1 << (n - 1 - self.order.var_at(level)));
            table[idx] = p;
        }
        Ok(table)
    }
}

// ---------------------------------------------------------------------------
// JSON

type DenseJson = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Serialize, Deserialize)]
struct QuantumJson {
    n: usize,
    dim: usize,
    order: Order,
    start: usize,
    accept: Vec<usize>,
    gates: Vec<[DenseJson; 2]>,
}

fn to_json_matrix(m: &CMatrix) -> DenseJson {
    m.to_dense()
        .into_iter()
        .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn from_json_matrix(m: &DenseJson) -> Result<CMatrix> {
    let rows: Vec<Vec<C64>> = m
        .iter()
        .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    CMatrix::from_dense(&rows).ok_or_else(|| Error::InvalidProgram("gate is not square".into()))
}

impl From<QuantumProgram> for QuantumJson {
    fn from(p: QuantumProgram) -> Self {
        QuantumJson {
            n: p.n(),
            dim: p.dim,
            gates: p
                .gates
                .iter()
                .map(|[g0, g1]| [to_json_matrix(g0), to_json_matrix(g1)])
                .collect(),
            order: p.order,
            start: p.start,
            accept: p.accept,
        }
    }
}

impl TryFrom<QuantumJson> for QuantumProgram {
    type Error = Error;

    fn try_from(j: QuantumJson) -> Result<Self> {
        if j.order.len() != j.n {
            return Err(Error::InvalidProgram(format!(
                "order length {} != n {}",
                j.order.len(),
                j.n
            )));
        }
        let gates = j
            .gates
            .iter()
            .map(|[g0, g1]| Ok([from_json_matrix(g0)?, from_json_matrix(g1)?]))
            .collect::<Result<_>>()?;
        QuantumProgram::new(j.dim, j.order, gates, j.start, j.accept)
    }
}
