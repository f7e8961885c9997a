//! Ground-truth Boolean functions.
//!
//! Every function here is evaluated straight from its definition and serves as
//! the oracle against which constructed programs are checked. Partial
//! functions return `None` outside their domain.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::check::{ensure_exhaustive, index_to_bits, Acceptor};
use crate::error::{Error, Result};

type Eval = dyn Fn(&[bool]) -> Option<bool> + Send + Sync;

/// A named Boolean function, possibly partial.
#[derive(Clone)]
pub struct BooleanFunction {
    arity: usize,
    name: String,
    total: bool,
    eval: Arc<Eval>,
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BooleanFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("total", &self.total)
            .finish()
    }
}

impl BooleanFunction {
    pub fn total(name: impl Into<String>, arity: usize, f: impl Fn(&[bool]) -> bool + Send + Sync + 'static) -> Self {
        BooleanFunction {
            arity,
            name: name.into(),
            total: true,
            eval: Arc::new(move |x| Some(f(x))),
        }
    }

    pub fn partial(
        name: impl Into<String>,
        arity: usize,
        f: impl Fn(&[bool]) -> Option<bool> + Send + Sync + 'static,
    ) -> Self {
        BooleanFunction {
            arity,
            name: name.into(),
            total: false,
            eval: Arc::new(f),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_total(&self) -> bool {
        self.total
    }

    /// Value on `x`, `None` off the domain.
    ///
    /// Panics if `x.len() != self.arity()`; use [`BooleanFunction::evaluate`] for a checked call.
    pub fn value(&self, x: &[bool]) -> Option<bool> {
        assert_eq!(x.len(), self.arity, "input length for {}", self.name);
        (self.eval)(x)
    }

    pub fn evaluate(&self, x: &[bool]) -> Result<Option<bool>> {
        if x.len() != self.arity {
            return Err(Error::InputShape {
                expected: self.arity,
                got: x.len(),
            });
        }
        Ok((self.eval)(x))
    }

    pub fn in_domain(&self, x: &[bool]) -> bool {
        self.value(x).is_some()
    }

    pub fn truth_table(&self) -> Result<Vec<Option<bool>>> {
        ensure_exhaustive(self.arity)?;
        let n = self.arity;
        Ok((0..1u64 << n)
            .into_par_iter()
            .map(|idx| (self.eval)(&index_to_bits(idx, n)))
            .collect())
    }

    /// Same function under a different display name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

// ---------------------------------------------------------------------------
// Small arithmetic helpers

pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// Big-endian value of a bit string.
pub fn bin(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub fn popcount(x: &[bool]) -> usize {
    x.iter().filter(|&&b| b).count()
}

pub fn smallest_prime_greater(n: u64) -> u64 {
    fn is_prime(p: u64) -> bool {
        if p < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= p {
            if p.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }
    (n + 1..).find(|&p| is_prime(p)).expect("primes are unbounded")
}

/// `(sum_i i * x_i) mod p(len)`, with 1-based weights.
pub fn weighted_index(x: &[bool]) -> usize {
    let p = smallest_prime_greater(x.len() as u64) as usize;
    x.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i + 1)
        .sum::<usize>()
        % p
}

/// `x_s` with 1-based `s`; index 0 or past the end reads as 0.
fn select_bit(x: &[bool], s: usize) -> bool {
    s >= 1 && s <= x.len() && x[s - 1]
}

// ---------------------------------------------------------------------------
// Total functions

/// `EQ_q` over `2q` bits: first half equals second half.
pub fn eq(q: usize) -> BooleanFunction {
    BooleanFunction::total(format!("eq:q={q}"), 2 * q, move |x| x[..q] == x[q..])
}

/// `MOD_{p,n}`: 1 iff the number of ones is divisible by `p`.
pub fn mod_fn(p: usize, n: usize) -> Result<BooleanFunction> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("MOD needs p >= 2, got {p}")));
    }
    Ok(BooleanFunction::total(format!("mod:p={p},n={n}"), n, move |x| {
        popcount(x).is_multiple_of(p)
    }))
}

/// Weighted-sum function `WS_n`.
pub fn ws(n: usize) -> BooleanFunction {
    BooleanFunction::total(format!("ws:n={n}"), n, |x| select_bit(x, weighted_index(x)))
}

/// `WS^b_n`: `WS_b` on the first `b` bits, the rest ignored.
pub fn ws_padded(b: usize, n: usize) -> Result<BooleanFunction> {
    if b == 0 || b > n {
        return Err(Error::InvalidParameter(format!("need 1 <= b <= n, got b={b}, n={n}")));
    }
    Ok(padded(&ws(b), n)?.renamed(format!("ws-padded:b={b},n={n}")))
}

/// Mixed weighted sum `MSW_n` (n even). The `z = r` guard is applied before the XOR.
pub fn msw(n: usize) -> Result<BooleanFunction> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("MSW needs even n >= 2, got {n}")));
    }
    let h = n / 2;
    Ok(BooleanFunction::total(format!("msw:n={n}"), n, move |x| {
        let z = weighted_index(&x[..h]);
        let r = weighted_index(&x[h..]);
        if z != r || z == 0 || z > h {
            return false;
        }
        x[z - 1] ^ x[r + h - 1]
    }))
}

/// Shifted equality over `(x_1..x_q, y_1..y_q, s_1..s_l)`, `l = ceil(log q)`.
///
/// Value 1 iff `x_i = y_{((i + s - 1) mod q) + 1}` for all `i`, where `s = bin(s_1..s_l)`.
pub fn seq(q: usize) -> Result<BooleanFunction> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("SEQ needs q >= 2, got {q}")));
    }
    let l = ceil_log2(q);
    Ok(BooleanFunction::total(format!("seq:q={q}"), 2 * q + l, move |x| {
        let shift = bin(&x[2 * q..]) % q;
        (0..q).all(|i| x[i] == x[q + (i + shift) % q])
    }))
}

/// Number of bits per vertex field in the pointer-jumping encoding.
pub fn pj_field_bits(m: usize) -> usize {
    ceil_log2(m)
}

/// Decodes one side's function table: vertex `v`'s image is the big-endian
/// field at bits `v*L .. (v+1)*L`, reduced mod `m`.
pub fn pj_decode(bits: &[bool], m: usize) -> Vec<usize> {
    let l = pj_field_bits(m);
    (0..m).map(|v| bin(&bits[v * l..(v + 1) * l]) % m).collect()
}

/// `f^{(k)}(v_0)` with `v_0` vertex 0 of `V_A`; odd steps use `f^A`, even steps `f^B`.
pub fn pj_chase(fa: &[usize], fb: &[usize], k: usize) -> usize {
    (1..=k).fold(0, |v, step| if step % 2 == 1 { fa[v] } else { fb[v] })
}

/// Pointer jumping `PJ_{k,m}` over `2 m ceil(log m)` bits: parity of `f^{(k)}(v_0)`.
pub fn pj(k: usize, m: usize) -> Result<BooleanFunction> {
    if m < 2 || k < 1 {
        return Err(Error::InvalidParameter(format!(
            "PJ needs m >= 2, k >= 1, got m={m}, k={k}"
        )));
    }
    let half = m * pj_field_bits(m);
    Ok(BooleanFunction::total(format!("pj:k={k},m={m}"), 2 * half, move |x| {
        let fa = pj_decode(&x[..half], m);
        let fb = pj_decode(&x[half..], m);
        pj_chase(&fa, &fb, k).count_ones() % 2 == 1
    }))
}

// ---------------------------------------------------------------------------
// Addressed inputs, reordering and REQ

/// Split view of an input laid out as `z_{1,1}..z_{N,l}, y_1..y_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressedInput {
    pub blocks: usize,
    pub l: usize,
    pub z: Vec<Vec<bool>>,
    pub y: Vec<bool>,
}

impl AddressedInput {
    pub fn arity(blocks: usize, l: usize) -> usize {
        blocks * (l + 1)
    }

    /// Variable index (0-based) of `z_{i,j}` with 0-based block `i` and bit `j`.
    pub fn z_var(blocks: usize, l: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < blocks && j < l);
        i * l + j
    }

    /// Variable index (0-based) of `y_i` with 0-based block `i`.
    pub fn y_var(blocks: usize, l: usize, i: usize) -> usize {
        blocks * l + i
    }

    pub fn split(x: &[bool], blocks: usize, l: usize) -> Self {
        assert_eq!(x.len(), Self::arity(blocks, l));
        AddressedInput {
            blocks,
            l,
            z: (0..blocks).map(|i| x[i * l..(i + 1) * l].to_vec()).collect(),
            y: x[blocks * l..].to_vec(),
        }
    }

    pub fn to_bits(&self) -> Vec<bool> {
        self.z.iter().flatten().chain(&self.y).copied().collect()
    }

    /// Plain addresses `bin(z_i)` (0-based).
    pub fn plain_addresses(&self) -> Vec<usize> {
        self.z.iter().map(|row| bin(row)).collect()
    }

    /// XOR-prefix addresses `Adr(i)` for `i = 1..N` (0-based values).
    pub fn xor_addresses(&self) -> Vec<usize> {
        self.plain_addresses()
            .iter()
            .scan(0, |acc, &a| {
                *acc ^= a;
                Some(*acc)
            })
            .collect()
    }
}

/// `Adr(i, z)`: XOR of address rows `1..=i` read big-endian.
pub fn adr(i: usize, z: &[Vec<bool>]) -> Result<usize> {
    if i == 0 || i > z.len() {
        return Err(Error::OutOfRange { index: i, max: z.len() });
    }
    Ok(z[..i].iter().fold(0, |acc, row| acc ^ bin(row)))
}

/// `f(y_{theta^{-1}(1)}, ..)` when the 0-based addresses form a permutation, else `None`.
fn apply_reordered(f: &BooleanFunction, addresses: &[usize], y: &[bool]) -> Option<bool> {
    let q = y.len();
    let mut x = vec![false; q];
    let mut seen = vec![false; q];
    for (&a, &bit) in addresses.iter().zip(y) {
        if a >= q || std::mem::replace(&mut seen[a], true) {
            return None;
        }
        x[a] = bit;
    }
    f.value(&x)
}

fn reordered(f: &BooleanFunction, xor: bool) -> BooleanFunction {
    let q = f.arity();
    let l = ceil_log2(q);
    let inner = f.clone();
    let prefix = if xor { "xorreorder" } else { "reorder" };
    BooleanFunction::partial(
        format!("{prefix}/{}", f.name()),
        AddressedInput::arity(q, l),
        move |x| {
            let input = AddressedInput::split(x, q, l);
            let addresses = if xor {
                input.xor_addresses()
            } else {
                input.plain_addresses()
            };
            apply_reordered(&inner, &addresses, &input.y)
        },
    )
}

/// Reordered partial function with plain addresses `theta(i) = bin(z_i) + 1`.
pub fn reorder_of(f: &BooleanFunction) -> BooleanFunction {
    reordered(f, false)
}

/// Reordered partial function with XOR-prefix addresses.
pub fn xorreorder_of(f: &BooleanFunction) -> BooleanFunction {
    reordered(f, true)
}

/// Layout parameters of `REQ_q`: `(blocks, l) = (2q, ceil(log 2q))`.
pub fn req_layout(q: usize) -> (usize, usize) {
    (2 * q, ceil_log2(2 * q))
}

/// The `(u, v)` pair of `REQ_q`.
pub fn req_sums(q: usize, x: &[bool]) -> (u64, u64) {
    let (blocks, l) = req_layout(q);
    let input = AddressedInput::split(x, blocks, l);
    let modulus = 1u64 << q;
    let (mut u, mut v) = (0u64, 0u64);
    for (a, &y) in input.xor_addresses().into_iter().zip(&input.y) {
        if !y {
            continue;
        }
        // 2^e mod 2^q vanishes once e >= q
        let pow = |e: usize| if e >= q { 0 } else { 1u64 << e };
        if a < q {
            u = (u + pow(a)) % modulus;
        } else {
            v = (v + pow(a - q)) % modulus;
        }
    }
    (u, v)
}

/// Total reordered equality `REQ_q` over `2q (ceil(log 2q) + 1)` bits.
pub fn req(q: usize) -> Result<BooleanFunction> {
    if q < 1 {
        return Err(Error::InvalidParameter("REQ needs q >= 1".into()));
    }
    let (blocks, l) = req_layout(q);
    Ok(BooleanFunction::total(
        format!("req:q={q}"),
        AddressedInput::arity(blocks, l),
        move |x| {
            let (u, v) = req_sums(q, x);
            u == v
        },
    ))
}

/// Total function equal to `f_partial` on its domain and to `program`'s output elsewhere.
pub fn total_extension(
    f_partial: &BooleanFunction,
    program: Arc<dyn Acceptor + Send + Sync>,
) -> Result<BooleanFunction> {
    if program.arity() != f_partial.arity() {
        return Err(Error::ArityMismatch {
            left: f_partial.arity(),
            right: program.arity(),
        });
    }
    let inner = f_partial.clone();
    Ok(BooleanFunction::total(
        format!("ext/{}", f_partial.name()),
        f_partial.arity(),
        move |x| match inner.value(x) {
            Some(v) => v,
            None => program.acceptance(x).expect("arity checked") > 0.5,
        },
    ))
}

/// `f` on the first `f.arity()` of `n` bits.
pub fn padded(f: &BooleanFunction, n: usize) -> Result<BooleanFunction> {
    let b = f.arity();
    if b > n {
        return Err(Error::ArityMismatch { left: b, right: n });
    }
    let inner = f.clone();
    let name = format!("pad:n={n}/{}", f.name());
    Ok(if f.is_total() {
        BooleanFunction::total(name, n, move |x| inner.value(&x[..b]).expect("total"))
    } else {
        BooleanFunction::partial(name, n, move |x| inner.value(&x[..b]))
    })
}

// ---------------------------------------------------------------------------
// Registry

/// Parses `k=v,k=v` into a map, rejecting malformed pairs.
pub fn parse_params(s: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for pair in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {pair:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub(crate) struct Params {
    map: BTreeMap<String, String>,
    context: String,
}

impl Params {
    pub(crate) fn parse(context: &str, s: &str) -> Result<Self> {
        Ok(Params {
            map: parse_params(s)?,
            context: context.to_string(),
        })
    }

    pub(crate) fn get<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self
            .map
            .remove(key)
            .ok_or_else(|| Error::Parse(format!("{}: missing parameter {key}", self.context)))?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("{}: bad value {raw:?} for {key}", self.context)))
    }

    pub(crate) fn get_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        if self.map.contains_key(key) {
            self.get(key)
        } else {
            Ok(default)
        }
    }

    pub(crate) fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::Parse(format!("{}: unknown parameter {k}", self.context))),
            None => Ok(()),
        }
    }
}

/// Resolves a function descriptor such as `eq:q=3`, `pj:k=2,m=4`, `xorreorder/eq:q=1`
/// or `pad:n=6/mod:p=2,n=2`.
pub fn parse_function(desc: &str) -> Result<BooleanFunction> {
    let desc = desc.trim();
    if let Some((head, rest)) = desc.split_once('/') {
        let (op, args) = head.split_once(':').unwrap_or((head, ""));
        let inner = parse_function(rest)?;
        return match op {
            "reorder" | "xorreorder" => {
                Params::parse(op, args)?.finish()?;
                Ok(if op == "reorder" {
                    reorder_of(&inner)
                } else {
                    xorreorder_of(&inner)
                })
            }
            "pad" => {
                let mut p = Params::parse(op, args)?;
                let n = p.get("n")?;
                p.finish()?;
                padded(&inner, n)
            }
            _ => Err(Error::Unknown {
                kind: "function operator",
                name: op.to_string(),
            }),
        };
    }
    let (name, args) = desc.split_once(':').unwrap_or((desc, ""));
    let mut p = Params::parse(name, args)?;
    let f = match name {
        "eq" => {
            let q: usize = p.get("q")?;
            if q == 0 {
                return Err(Error::InvalidParameter("EQ needs q >= 1".into()));
            }
            eq(q)
        }
        "mod" => mod_fn(p.get("p")?, p.get("n")?)?,
        "ws" => ws(p.get("n")?),
        "ws-padded" => ws_padded(p.get("b")?, p.get("n")?)?,
        "msw" => msw(p.get("n")?)?,
        "seq" => seq(p.get("q")?)?,
        "pj" => pj(p.get("k")?, p.get("m")?)?,
        "req" => req(p.get("q")?)?,
        "const" => {
            let n: usize = p.get("n")?;
            let v: u8 = p.get_or("v", 1)?;
            BooleanFunction::total(format!("const:n={n},v={v}"), n, move |_| v != 0)
        }
        _ => {
            return Err(Error::Unknown {
                kind: "function",
                name: name.to_string(),
            })
        }
    };
    p.finish()?;
    Ok(f)
}
