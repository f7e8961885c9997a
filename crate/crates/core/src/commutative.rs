//! Commutative deterministic programs: folds of a commutative operation over
//! coefficient-scaled inputs, and the pointer-jumping layers built from them.

use serde::{Deserialize, Serialize};

use crate::bp::{KLayerProgram, Kind, LeveledProgram, Transition};
use crate::error::{Error, Result};
use crate::functions::pj_field_bits;
use crate::order::Order;
use crate::reorder::{reorder_klayer, AddressMode};

/// Width of a PJ layer is exactly `PJ_WIDTH_CONSTANT * m^2`.
pub const PJ_WIDTH_CONSTANT: usize = 1;

/// Reordered PJ width is at most `RPJ_WIDTH_CONSTANT * n^3`, `n` the reordered
/// arity: with `N = 2 m L` blocks, `2^l <= 2N` and `m^2 <= N^2 / 4`.
pub const RPJ_WIDTH_CONSTANT: usize = 1;

/// `f(x) = acceptor(init (.) C_1 x_1 (.) ... (.) C_n x_n)` over `{0..w-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwqForm {
    w: usize,
    op: Vec<Vec<usize>>,
    coefficients: Vec<usize>,
    acceptor: Vec<bool>,
    init: usize,
}

impl SwqForm {
    pub fn new(op: Vec<Vec<usize>>, coefficients: Vec<usize>, acceptor: Vec<bool>, init: usize) -> Result<Self> {
        let w = op.len();
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if w == 0 {
            return bad("operation table is empty");
        }
        if op.iter().any(|row| row.len() != w || row.iter().any(|&v| v >= w)) {
            return bad("operation table must be w x w with entries below w");
        }
        if (0..w).any(|a| (0..a).any(|b| op[a][b] != op[b][a])) {
            return bad("operation table is not commutative");
        }
        if coefficients.iter().any(|&c| c >= w) || acceptor.len() != w || init >= w {
            return bad("coefficients, acceptor or init out of range");
        }
        Ok(SwqForm {
            w,
            op,
            coefficients,
            acceptor,
            init,
        })
    }

    /// Addition mod `w` from 0.
    pub fn additive(w: usize, coefficients: Vec<usize>, acceptor: Vec<bool>) -> Result<Self> {
        let op = (0..w).map(|a| (0..w).map(|b| (a + b) % w).collect()).collect();
        Self::new(op, coefficients, acceptor, 0)
    }

    /// `MOD_{p,n}`: count of ones is 0 mod `p`.
    pub fn mod_count(p: usize, n: usize) -> Result<Self> {
        let acceptor = (0..p).map(|z| z == 0).collect();
        Self::additive(p, vec![1; n], acceptor)
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    /// Commutativity of the table alone does not make the fold
    /// order-independent; associativity does.
    pub fn is_associative(&self) -> bool {
        let op = &self.op;
        (0..self.w).all(|a| (0..self.w).all(|b| (0..self.w).all(|c| op[op[a][b]][c] == op[a][op[b][c]])))
    }

    pub fn evaluate(&self, x: &[bool]) -> bool {
        let z = self
            .coefficients
            .iter()
            .zip(x)
            .fold(self.init, |z, (&c, &b)| self.op[z][if b { c } else { 0 }]);
        self.acceptor[z]
    }
}

/// Width-`w` OBDD over the natural order; node = running value.
pub fn compile_swq(form: &SwqForm) -> Result<LeveledProgram> {
    let levels = form
        .coefficients
        .iter()
        .map(|&c| {
            let zero: Vec<usize> = (0..form.w).map(|z| form.op[z][0]).collect();
            let one: Vec<usize> = (0..form.w).map(|z| form.op[z][c]).collect();
            [Transition::from_targets(&zero), Transition::from_targets(&one)]
        })
        .collect();
    let accept = (0..form.w).filter(|&z| form.acceptor[z]).collect();
    LeveledProgram::new(
        Kind::Deterministic,
        form.w,
        Order::identity(form.n()),
        levels,
        form.init,
        accept,
    )
}

/// One side of a pointer-jumping instance: `m` fields of `L` bits.
///
/// Node `(z, u)` sits at `z * m + u`: branch `z` only reads the field of vertex
/// `z`, adding its bits with big-endian weights into `u` mod `m`. Entering at
/// `(v, 0)` exits at `(v, f(v))`. Accepts nowhere; composition sets the
/// accepting nodes.
pub fn build_pj_layer(m: usize) -> Result<LeveledProgram> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("PJ needs m >= 2, got {m}")));
    }
    let l = pj_field_bits(m);
    let node = |z: usize, u: usize| z * m + u;
    let id = Transition::identity(m * m);
    let mut levels = Vec::with_capacity(m * l);
    for v in 0..m {
        for j in 0..l {
            let weight = (1usize << (l - 1 - j)) % m;
            let targets: Vec<usize> = (0..m * m)
                .map(|x| {
                    let (z, u) = (x / m, x % m);
                    if z == v {
                        node(z, (u + weight) % m)
                    } else {
                        x
                    }
                })
                .collect();
            levels.push([id.clone(), Transition::from_targets(&targets)]);
        }
    }
    LeveledProgram::new(Kind::Deterministic, m * m, Order::identity(m * l), levels, 0, vec![])
}

/// Places a one-side layer at variables `offset..offset + layer.n()` of a
/// `total`-variable program; other variables are identity levels.
fn embed(layer: &LeveledProgram, offset: usize, total: usize, accept: Vec<usize>) -> Result<LeveledProgram> {
    let w = layer.width();
    let id = Transition::identity(w);
    let level_of = layer.order().inverse();
    let levels = (0..total)
        .map(|v| {
            if (offset..offset + layer.n()).contains(&v) {
                layer.levels()[level_of[v - offset]].clone()
            } else {
                [id.clone(), id.clone()]
            }
        })
        .collect();
    LeveledProgram::new(layer.kind(), w, Order::identity(total), levels, 0, accept)
}

/// `2k` layers alternating A/B computing `PJ_{2k-1,m}`.
///
/// Exit `(z, u)` of each layer enters the next at `(u, 0)`. After layer
/// `2k - 1` the branch holds `f^{(2k-1)}(v_0)`; the last layer only carries it
/// through, and the accepting set is every node whose branch has odd parity.
pub fn build_pj_2kobdd(k: usize, m: usize) -> Result<KLayerProgram> {
    if k < 1 {
        return Err(Error::InvalidParameter("PJ needs k >= 1".into()));
    }
    let side = build_pj_layer(m)?;
    let half = side.n();
    let accept: Vec<usize> = (0..m * m).filter(|&x| (x / m).count_ones() % 2 == 1).collect();
    let layers = (0..2 * k)
        .map(|i| {
            let offset = if i % 2 == 0 { 0 } else { half };
            let acc = if i + 1 == 2 * k { accept.clone() } else { vec![] };
            embed(&side, offset, 2 * half, acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let connector: Vec<usize> = (0..m * m).map(|x| x % m * m).collect();
    KLayerProgram::new(layers, vec![connector; 2 * k - 1])
}

/// Plain reordering of [`build_pj_2kobdd`], layer by layer.
pub fn build_rpj_2kobdd(k: usize, m: usize) -> Result<KLayerProgram> {
    reorder_klayer(&build_pj_2kobdd(k, m)?, AddressMode::Plain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{InputSelection, Mode};
    use crate::functions::{mod_fn, pj, BooleanFunction};

    #[test]
    fn swq_mod3_matches_oracle() {
        let p = compile_swq(&SwqForm::mod_count(3, 6).unwrap()).unwrap();
        assert!(
            p.represents(&mod_fn(3, 6).unwrap(), Mode::Exact, &InputSelection::Exhaustive)
                .unwrap()
                .pass
        );
        let orders: Vec<_> = Order::all(6).collect();
        assert_eq!(orders.len(), 720);
        assert!(
            p.is_commutative(&orders, &InputSelection::Exhaustive)
                .unwrap()
                .commutative
        );
    }

    #[test]
    fn swq_small_cases() {
        let always = SwqForm::additive(3, vec![1, 2], vec![true; 3]).unwrap();
        let p = compile_swq(&always).unwrap();
        for x in [[false, false], [true, true], [false, true]] {
            assert_eq!(p.eval(&x).unwrap(), 1.0);
        }
        let f = SwqForm::additive(4, vec![1, 2], vec![false, false, false, true]).unwrap();
        assert!(f.evaluate(&[true, true]));
        assert_eq!(compile_swq(&f).unwrap().eval(&[true, true]).unwrap(), 1.0);
        assert!(f.is_associative());
    }

    #[test]
    fn swq_rejects_bad_tables() {
        assert!(SwqForm::new(vec![vec![0, 1], vec![0, 1]], vec![], vec![true, false], 0).is_err());
        assert!(SwqForm::new(vec![vec![0, 2], vec![2, 0]], vec![], vec![true, false], 0).is_err());
    }

    #[test]
    fn pj_layer_trace() {
        let layer = build_pj_layer(2).unwrap();
        assert_eq!(layer.width(), 4);
        assert_eq!(layer.n(), 2);
        // branch 0, f(0) = 1: exit accumulator 1
        let exit = layer.with_accept(vec![1]).unwrap();
        assert_eq!(exit.eval(&[true, false]).unwrap(), 1.0);
        let zero = layer.with_accept(vec![0]).unwrap();
        assert_eq!(zero.eval(&[false, false]).unwrap(), 1.0);
        let orders: Vec<_> = Order::all(2).collect();
        assert!(
            layer
                .is_commutative(&orders, &InputSelection::Exhaustive)
                .unwrap()
                .commutative
        );
    }

    #[test]
    fn pj_small_instances() {
        for (k, m) in [(1, 2), (2, 2), (1, 4)] {
            let p = build_pj_2kobdd(k, m).unwrap();
            assert_eq!(p.k(), 2 * k);
            assert_eq!(p.width(), PJ_WIDTH_CONSTANT * m * m);
            let f = pj(2 * k - 1, m).unwrap();
            assert!(
                p.represents(&f, Mode::Exact, &InputSelection::Exhaustive).unwrap().pass,
                "k={k} m={m}"
            );
        }
    }

    #[test]
    fn two_layer_permutation_invariance() {
        let p = build_pj_2kobdd(1, 2).unwrap();
        let f: BooleanFunction = pj(1, 2).unwrap();
        for o in Order::all(4) {
            let q = p.permute_transitions(&o).unwrap();
            assert!(q.represents(&f, Mode::Exact, &InputSelection::Exhaustive).unwrap().pass);
        }
    }
}
