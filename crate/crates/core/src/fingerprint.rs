//! Quantum fingerprinting of linear forms mod `m`.
//!
//! A program of dimension `2t` holds `t` blocks of one qubit each (basis index
//! `2j + s`). Reading a 1 on a variable with coefficient `c` applies
//! `C R(c) C`, where `R(c)` rotates block `j` by `2 pi k_j c / m` and
//! `C = H^{(x)log t} (x) I_2` spreads `|0>` over the blocks. `C` is its own
//! inverse, so a run multiplies out to `C R(g) C` and the all-zero state ends
//! with amplitude `(1/t) sum_j cos(2 pi k_j g / m)`. Gates of different
//! variables commute.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{ceil_log2, req_layout};
use crate::linalg::{hadamard_power, rotation, CMatrix};
use crate::order::Order;
use crate::qobdd::{QuantumProgram, DIM_CAP};
use crate::reorder::{address_flip, AddressMode, ReorderLayout};

pub const DEFAULT_RETRY_BUDGET: usize = 1000;

/// Slack on the goodness inequality. At `m = 3` every parameter set sits
/// exactly on `eps = 1/4`, so the comparison is `<=` up to rounding.
pub const GOOD_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FingerprintParams {
    pub m: u64,
    pub epsilon: f64,
    pub t: usize,
    #[serde(rename = "K")]
    pub k: Vec<u64>,
    pub seed: Option<u64>,
    /// Angle denominator when it differs from `m` (parity parameters only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_modulus: Option<u64>,
}

/// `t = ceil((2/eps) ln 2m)` rounded up to a power of two.
pub fn block_count(m: u64, epsilon: f64) -> usize {
    let raw = ((2.0 / epsilon) * (2.0 * m as f64).ln()).ceil() as usize;
    raw.max(1).next_power_of_two()
}

/// `(1/t^2) (sum_j cos(2 pi k_j g / modulus))^2`.
pub fn fingerprint_value(k: &[u64], modulus: u64, g: u64) -> f64 {
    let t = k.len() as f64;
    let s: f64 = k
        .iter()
        .map(|&kj| {
            let r = ((kj as u128 * g as u128) % modulus as u128) as f64;
            (2.0 * std::f64::consts::PI * r / modulus as f64).cos()
        })
        .sum();
    (s / t).powi(2)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Goodness {
    pub good: bool,
    /// Nonzero residue with the largest value; `None` when `m = 1`.
    pub worst_g: Option<u64>,
    pub worst_value: f64,
}

pub fn is_good(k: &[u64], m: u64, epsilon: f64) -> Goodness {
    let (worst_g, worst_value) =
        (1..m)
            .map(|g| (g, fingerprint_value(k, m, g)))
            .fold((None, 0.0), |(bg, bv), (g, v)| {
                if bg.is_none() || v > bv {
                    (Some(g), v)
                } else {
                    (bg, bv)
                }
            });
    Goodness {
        good: worst_value <= epsilon + GOOD_TOL,
        worst_g,
        worst_value,
    }
}

pub fn find_good_set(m: u64, epsilon: f64, seed: u64) -> Result<FingerprintParams> {
    find_good_set_with_budget(m, epsilon, seed, DEFAULT_RETRY_BUDGET)
}

/// Draws `K` uniformly from `{1..m-1}^t` until it is good.
pub fn find_good_set_with_budget(m: u64, epsilon: f64, seed: u64, budget: usize) -> Result<FingerprintParams> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("modulus must be >= 2, got {m}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} not in (0, 1)")));
    }
    let t = block_count(m, epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<u64>, Goodness)> = None;
    for _ in 0..budget {
        let k: Vec<u64> = (0..t).map(|_| rng.gen_range(1..m)).collect();
        let verdict = is_good(&k, m, epsilon);
        if verdict.good {
            return Ok(FingerprintParams {
                m,
                epsilon,
                t,
                k,
                seed: Some(seed),
                angle_modulus: None,
            });
        }
        if best.as_ref().is_none_or(|(_, b)| verdict.worst_value < b.worst_value) {
            best = Some((k, verdict));
        }
    }
    let (best_k, best) = best.unwrap_or_default();
    Err(Error::GoodSetSearch {
        m,
        epsilon,
        attempts: budget,
        best_value: best.worst_value,
        best_g: best.worst_g.unwrap_or(0),
        best_k,
    })
}

impl FingerprintParams {
    /// Exact parameters for `m = 2`: one block rotated by a quarter turn per
    /// unit, so the amplitude is `cos(pi g / 2)`, 0 on odd `g`.
    pub fn parity(epsilon: f64) -> Self {
        FingerprintParams {
            m: 2,
            epsilon,
            t: 1,
            k: vec![1],
            seed: None,
            angle_modulus: Some(4),
        }
    }

    /// Parity parameters for `m = 2`, a seeded good-set search otherwise.
    pub fn for_modulus(m: u64, epsilon: f64, seed: u64) -> Result<Self> {
        if m == 2 {
            Ok(Self::parity(epsilon))
        } else {
            find_good_set(m, epsilon, seed)
        }
    }

    pub fn modulus_for_angles(&self) -> u64 {
        self.angle_modulus.unwrap_or(self.m)
    }

    pub fn dim(&self) -> usize {
        2 * self.t
    }

    /// Acceptance probability of a compiled program when the form evaluates to `g`.
    pub fn closed_form(&self, g: u64) -> f64 {
        fingerprint_value(&self.k, self.modulus_for_angles(), g % self.m)
    }

    /// Largest closed-form value over nonzero residues.
    pub fn worst_value(&self) -> f64 {
        (1..self.m).map(|g| self.closed_form(g)).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.t.is_power_of_two() || self.k.len() != self.t {
            return bad(format!("t = {} with {} parameters", self.t, self.k.len()));
        }
        let modulus = self.modulus_for_angles();
        if self.k.iter().any(|&k| k == 0 || k >= modulus) {
            return bad(format!("parameters must lie in 1..{modulus}"));
        }
        if self.worst_value() > self.epsilon + GOOD_TOL {
            return bad(format!(
                "parameter set not good: worst value {} > {}",
                self.worst_value(),
                self.epsilon
            ));
        }
        if self.dim() > DIM_CAP {
            return Err(Error::CapExceeded {
                what: "quantum dimension",
                value: self.dim(),
                cap: DIM_CAP,
            });
        }
        Ok(())
    }

    fn spread(&self) -> CMatrix {
        hadamard_power(self.t.trailing_zeros()).kron(&CMatrix::identity(2))
    }

    /// `C R(c) C` for coefficient `c`; the identity when `c = 0`.
    pub fn gate(&self, c: u64) -> CMatrix {
        if c.is_multiple_of(self.m) && self.angle_modulus.is_none() {
            return CMatrix::identity(self.dim());
        }
        let modulus = self.modulus_for_angles();
        let blocks: Vec<CMatrix> = self
            .k
            .iter()
            .map(|&kj| {
                let r = ((kj as u128 * c as u128) % modulus as u128) as f64;
                rotation(2.0 * std::f64::consts::PI * r / modulus as f64)
            })
            .collect();
        let r = CMatrix::block_diag(&blocks.iter().collect::<Vec<_>>());
        let spread = self.spread();
        spread.mul(&r).mul(&spread)
    }
}

/// `g(x) = sum_i C_i x_i mod m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    coefficients: Vec<u64>,
    modulus: u64,
}

impl LinearForm {
    pub fn new(coefficients: Vec<u64>, modulus: u64) -> Result<Self> {
        if modulus == 0 || coefficients.iter().any(|&c| c >= modulus) {
            return Err(Error::InvalidParameter(format!(
                "coefficients must lie in 0..{modulus}"
            )));
        }
        Ok(LinearForm { coefficients, modulus })
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn value(&self, x: &[bool]) -> u64 {
        self.coefficients
            .iter()
            .zip(x)
            .filter(|(_, &b)| b)
            .fold(0, |acc, (&c, _)| (acc + c) % self.modulus)
    }
}

/// Gate pairs `[I, C R(c) C]`, reusing the gate for repeated coefficients.
struct GateCache<'a> {
    params: &'a FingerprintParams,
    cache: HashMap<u64, CMatrix>,
}

impl<'a> GateCache<'a> {
    fn new(params: &'a FingerprintParams) -> Self {
        GateCache {
            params,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, c: u64) -> CMatrix {
        let params = self.params;
        self.cache.entry(c).or_insert_with(|| params.gate(c)).clone()
    }
}

pub fn compile_linear(form: &LinearForm, params: &FingerprintParams) -> Result<QuantumProgram> {
    if form.modulus != params.m {
        return Err(Error::InvalidParameter(format!(
            "form modulus {} != parameter modulus {}",
            form.modulus, params.m
        )));
    }
    params.validate()?;
    let id = CMatrix::identity(params.dim());
    let mut cache = GateCache::new(params);
    let gates = form.coefficients.iter().map(|&c| [id.clone(), cache.get(c)]).collect();
    QuantumProgram::new(
        params.dim(),
        Order::identity(form.coefficients.len()),
        gates,
        0,
        vec![0],
    )
}

fn eq_modulus(q: usize) -> Result<u64> {
    if q == 0 || q > 32 {
        return Err(Error::InvalidParameter(format!("q must lie in 1..=32, got {q}")));
    }
    Ok(1u64 << q)
}

/// Coefficients `2^i` on `x_i` and `-2^i` on `y_i`, mod `2^q`.
pub fn eq_form(q: usize) -> Result<LinearForm> {
    let m = eq_modulus(q)?;
    let pow = |i: usize| (1u64 << i) % m;
    let coefficients = (0..q).map(pow).chain((0..q).map(|i| (m - pow(i)) % m)).collect();
    LinearForm::new(coefficients, m)
}

pub fn build_eq_qobdd(q: usize, epsilon: f64, seed: u64) -> Result<QuantumProgram> {
    let params = FingerprintParams::for_modulus(eq_modulus(q)?, epsilon, seed)?;
    build_eq_qobdd_with(q, &params)
}

pub fn build_eq_qobdd_with(q: usize, params: &FingerprintParams) -> Result<QuantumProgram> {
    compile_linear(&eq_form(q)?, params)
}

pub fn build_mod_qobdd(p: u64, n: usize, epsilon: f64, seed: u64) -> Result<QuantumProgram> {
    if p < 3 {
        return Err(Error::InvalidParameter(format!(
            "MOD fingerprinting needs p >= 3, got {p}"
        )));
    }
    let params = find_good_set(p, epsilon, seed)?;
    compile_linear(&LinearForm::new(vec![1; n], p)?, &params)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > DIM_CAP {
        return Err(Error::CapExceeded {
            what: "quantum dimension",
            value: dim,
            cap: DIM_CAP,
        });
    }
    Ok(())
}

/// Coefficient of a value bit read at address `a`: `2^a` below `q`,
/// `-2^(a-q)` in `q..2q`, none above.
pub fn req_coefficient(q: usize, a: usize) -> Option<u64> {
    let m = 1u64 << q;
    if a < q {
        Some((1u64 << a) % m)
    } else if a < 2 * q {
        Some((m - (1u64 << (a - q)) % m) % m)
    } else {
        None
    }
}

pub fn build_req_qobdd(q: usize, epsilon: f64, seed: u64) -> Result<QuantumProgram> {
    let params = FingerprintParams::for_modulus(eq_modulus(q)?, epsilon, seed)?;
    build_req_qobdd_with(q, &params)
}

/// The address register accumulates the XOR prefix; each value bit rotates
/// the fingerprint by the coefficient its current address selects.
pub fn build_req_qobdd_with(q: usize, params: &FingerprintParams) -> Result<QuantumProgram> {
    if params.m != eq_modulus(q)? {
        return Err(Error::InvalidParameter(format!("REQ_{q} needs modulus 2^{q}")));
    }
    params.validate()?;
    let (blocks, l) = req_layout(q);
    let layout = ReorderLayout::new(blocks, AddressMode::Xor);
    debug_assert_eq!(layout.l, l);
    let (inner, states) = (params.dim(), 1usize << l);
    let dim = states * inner;
    check_dim(dim)?;

    let id_inner = CMatrix::identity(inner);
    let id = CMatrix::identity(dim);
    let mut cache = GateCache::new(params);
    let per_address: Vec<CMatrix> = (0..states)
        .map(|a| req_coefficient(q, a).map_or_else(|| id_inner.clone(), |c| cache.get(c)))
        .collect();
    let value_gate = CMatrix::block_diag(&per_address.iter().collect::<Vec<_>>());

    let mut gates = Vec::with_capacity(layout.arity());
    for _stage in 0..blocks {
        for j in 0..l {
            gates.push([id.clone(), address_flip(l, j, inner)]);
        }
        gates.push([id.clone(), value_gate.clone()]);
    }
    let accept = (0..states).map(|a| a * inner).collect();
    QuantumProgram::new(dim, layout.order(), gates, 0, accept)
}

pub fn build_seq_qobdd(q: usize, epsilon: f64, seed: u64) -> Result<QuantumProgram> {
    let params = FingerprintParams::for_modulus(eq_modulus(q)?, epsilon, seed)?;
    build_seq_qobdd_with(q, &params)
}

/// Reads the shift bits into a register, then compares `x` against the
/// shifted `y` by fingerprint. Shift values `>= q` act as their residue.
pub fn build_seq_qobdd_with(q: usize, params: &FingerprintParams) -> Result<QuantumProgram> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("SEQ needs q >= 2, got {q}")));
    }
    let m = eq_modulus(q)?;
    if params.m != m {
        return Err(Error::InvalidParameter(format!("SEQ_{q} needs modulus 2^{q}")));
    }
    params.validate()?;
    let l = ceil_log2(q);
    let (inner, states) = (params.dim(), 1usize << l);
    let dim = states * inner;
    check_dim(dim)?;

    let id = CMatrix::identity(dim);
    let id_states = CMatrix::identity(states);
    let mut cache = GateCache::new(params);
    let pow = |i: usize| (1u64 << i) % m;

    let mut gates = Vec::with_capacity(2 * q + l);
    for j in 0..l {
        gates.push([id.clone(), address_flip(l, j, inner)]);
    }
    for i in 0..q {
        gates.push([id.clone(), id_states.kron(&cache.get(pow(i)))]);
    }
    for j in 0..q {
        let blocks: Vec<CMatrix> = (0..states)
            .map(|s| {
                let i = (j + q - s % q) % q;
                cache.get((m - pow(i)) % m)
            })
            .collect();
        gates.push([id.clone(), CMatrix::block_diag(&blocks.iter().collect::<Vec<_>>())]);
    }
    // Oracle layout is x, y, s; the program reads s, x, y.
    let order = Order::new((2 * q..2 * q + l).chain(0..2 * q).collect())?;
    let accept = (0..states).map(|s| s * inner).collect();
    QuantumProgram::new(dim, order, gates, 0, accept)
}
