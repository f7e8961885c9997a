//! Reordering and xor-reordering of commutative programs.
//!
//! The output reads `N` stages `z_{i,1} .. z_{i,l}, y_i`. Nodes are pairs
//! `(a, b)` with `a` an `l`-bit address register and `b` a node of the input
//! program, indexed `a * w + b`. Reading `z_{i,j}` writes (plain) or XORs
//! (xor) bit `j` of `a`, big-endian. Reading `y_i` applies the input program's
//! transition for variable `a` to `b`; addresses `a >= N` leave `b` alone.
//! Plain mode clears `a` after each stage, xor mode keeps the running prefix.

use serde::{Deserialize, Serialize};

use crate::bp::{KLayerProgram, LeveledProgram, Transition, WIDTH_CAP};
use crate::error::{Error, Result};
use crate::functions::{ceil_log2, AddressedInput};
use crate::linalg::CMatrix;
use crate::order::Order;
use crate::qobdd::{QuantumProgram, DIM_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AddressMode {
    Plain,
    Xor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReorderLayout {
    /// Block count, the arity of the base function.
    pub q: usize,
    pub l: usize,
    pub mode: AddressMode,
}

impl ReorderLayout {
    pub fn new(q: usize, mode: AddressMode) -> Self {
        ReorderLayout {
            q,
            l: ceil_log2(q),
            mode,
        }
    }

    pub fn arity(&self) -> usize {
        AddressedInput::arity(self.q, self.l)
    }

    pub fn address_states(&self) -> usize {
        1 << self.l
    }

    /// Stage-interleaved reading order.
    pub fn order(&self) -> Order {
        let (q, l) = (self.q, self.l);
        let perm = (0..q)
            .flat_map(|i| {
                (0..l)
                    .map(move |j| AddressedInput::z_var(q, l, i, j))
                    .chain(std::iter::once(AddressedInput::y_var(q, l, i)))
            })
            .collect();
        Order::new(perm).expect("stage order is a permutation")
    }

    /// Width `2^l * w` of the register construction.
    pub fn width(&self, w: usize) -> usize {
        self.address_states() * w
    }

    /// The `q * w` count quoted for the construction; below [`Self::width`]
    /// when `q` is not a power of two.
    pub fn nominal_width(&self, w: usize) -> usize {
        self.q * w
    }

    /// Bit mask of address bit `j` (0-based, big-endian).
    fn mask(&self, j: usize) -> usize {
        1 << (self.l - 1 - j)
    }
}

fn check_width(w: usize) -> Result<()> {
    if w > WIDTH_CAP {
        return Err(Error::CapExceeded {
            what: "classical width",
            value: w,
            cap: WIDTH_CAP,
        });
    }
    Ok(())
}

/// Reorders a commutative leveled program. Commutativity is the caller's
/// responsibility; see [`LeveledProgram::is_commutative`].
pub fn reorder_obdd(p: &LeveledProgram, mode: AddressMode) -> Result<LeveledProgram> {
    let layout = ReorderLayout::new(p.n(), mode);
    let (w, states) = (p.width(), layout.address_states());
    check_width(layout.width(w))?;
    let node = |a: usize, b: usize| a * w + b;
    let level_of = p.order().inverse();

    let mut levels = Vec::with_capacity(layout.arity());
    for _stage in 0..layout.q {
        for j in 0..layout.l {
            let mask = layout.mask(j);
            let pair = [false, true].map(|bit| {
                let targets: Vec<usize> = (0..states * w)
                    .map(|x| {
                        let (a, b) = (x / w, x % w);
                        let a = match (mode, bit) {
                            (AddressMode::Plain, false) => a & !mask,
                            (AddressMode::Plain, true) => a | mask,
                            (AddressMode::Xor, false) => a,
                            (AddressMode::Xor, true) => a ^ mask,
                        };
                        node(a, b)
                    })
                    .collect();
                Transition::from_targets(&targets)
            });
            levels.push(pair);
        }
        let pair = [0usize, 1].map(|bit| {
            let rows = (0..states * w)
                .map(|x| {
                    let (a, b) = (x / w, x % w);
                    let next_a = if mode == AddressMode::Plain { 0 } else { a };
                    if a < layout.q {
                        let m = &p.levels()[level_of[a]][bit];
                        m.row(b).iter().map(|&(c, wt)| (node(next_a, c), wt)).collect()
                    } else {
                        vec![(node(next_a, b), 1.0)]
                    }
                })
                .collect();
            Transition::from_rows(rows)
        });
        levels.push(pair);
    }

    let accept = (0..states)
        .flat_map(|a| p.accept().iter().map(move |&b| node(a, b)))
        .collect();
    LeveledProgram::new(
        p.kind(),
        layout.width(w),
        layout.order(),
        levels,
        node(0, p.start()),
        accept,
    )
}

/// Layer-wise reordering. Each connector lifts `(a, b)` to `(0, conn(b))`, so
/// every layer recomputes its addresses from scratch.
pub fn reorder_klayer(p: &KLayerProgram, mode: AddressMode) -> Result<KLayerProgram> {
    let layers = p
        .layers()
        .iter()
        .map(|layer| reorder_obdd(layer, mode))
        .collect::<Result<Vec<_>>>()?;
    let w = p.width();
    let states = ReorderLayout::new(p.n(), mode).address_states();
    let connectors = p
        .connectors()
        .iter()
        .map(|conn| (0..states * w).map(|x| conn[x % w]).collect())
        .collect();
    KLayerProgram::new(layers, connectors)
}

/// Flips address bit `j` (0-based, big-endian) of an `l`-bit register that
/// sits above an `inner`-dimensional register.
pub fn address_flip(l: usize, j: usize, inner: usize) -> CMatrix {
    let mask = 1 << (l - 1 - j);
    let perm: Vec<usize> = (0..(1 << l) * inner)
        .map(|x| ((x / inner) ^ mask) * inner + x % inner)
        .collect();
    CMatrix::permutation(&perm)
}

/// Xor-reorders a commutative quantum program. The address register is the
/// high part of the basis; accepting states keep every address value.
pub fn xorreorder_qobdd(p: &QuantumProgram) -> Result<QuantumProgram> {
    let layout = ReorderLayout::new(p.n(), AddressMode::Xor);
    let (d, states) = (p.dim(), layout.address_states());
    let dim = states * d;
    if dim > DIM_CAP {
        return Err(Error::CapExceeded {
            what: "quantum dimension",
            value: dim,
            cap: DIM_CAP,
        });
    }
    let level_of = p.order().inverse();
    let id_inner = CMatrix::identity(d);
    let id = CMatrix::identity(dim);

    let mut gates = Vec::with_capacity(layout.arity());
    for _stage in 0..layout.q {
        for j in 0..layout.l {
            gates.push([id.clone(), address_flip(layout.l, j, d)]);
        }
        let pair = [0usize, 1].map(|bit| {
            let blocks: Vec<&CMatrix> = (0..states)
                .map(|a| {
                    if a < layout.q {
                        &p.gates()[level_of[a]][bit]
                    } else {
                        &id_inner
                    }
                })
                .collect();
            CMatrix::block_diag(&blocks)
        });
        gates.push(pair);
    }
    let accept = (0..states)
        .flat_map(|a| p.accept().iter().map(move |&s| a * d + s))
        .collect();
    QuantumProgram::new(dim, layout.order(), gates, p.start(), accept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::Kind;
    use crate::check::{InputSelection, Mode};
    use crate::functions::{mod_fn, reorder_of, xorreorder_of};

    /// Width-p counter of ones mod p, accepting at 0.
    fn mod_counter(p: usize, n: usize) -> LeveledProgram {
        let inc: Vec<usize> = (0..p).map(|z| (z + 1) % p).collect();
        let levels = vec![[Transition::identity(p), Transition::from_targets(&inc)]; n];
        LeveledProgram::new(Kind::Deterministic, p, Order::identity(n), levels, 0, vec![0]).unwrap()
    }

    #[test]
    fn layout_order_interleaves_stages() {
        let layout = ReorderLayout::new(4, AddressMode::Plain);
        assert_eq!(layout.l, 2);
        assert_eq!(layout.arity(), 12);
        // z_{1,1} z_{1,2} y_1 z_{2,1} ...
        assert_eq!(&layout.order().as_slice()[..6], &[0, 1, 8, 2, 3, 9]);
        assert_eq!(ReorderLayout::new(3, AddressMode::Xor).width(3), 12);
        assert_eq!(ReorderLayout::new(3, AddressMode::Xor).nominal_width(3), 9);
    }

    #[test]
    fn plain_reorder_of_mod2() {
        let base = mod_counter(2, 2);
        let r = reorder_obdd(&base, AddressMode::Plain).unwrap();
        assert_eq!(r.width(), 4);
        // z = (0, 1), y = (1, 1)
        assert_eq!(r.eval(&[false, true, true, true]).unwrap(), 1.0);
        let f = reorder_of(&mod_fn(2, 2).unwrap());
        assert!(r.represents(&f, Mode::Exact, &InputSelection::Exhaustive).unwrap().pass);
    }

    #[test]
    fn reorder_width_counts() {
        let r = reorder_obdd(&mod_counter(3, 4), AddressMode::Xor).unwrap();
        assert_eq!(r.width(), 12);
        let f = xorreorder_of(&mod_fn(3, 4).unwrap());
        let v = r.represents(&f, Mode::Exact, &InputSelection::Exhaustive).unwrap();
        assert!(v.pass);
        assert!(v.skipped > 0);
    }

    #[test]
    fn klayer_reorder_matches_layers() {
        let base = KLayerProgram::stacked(vec![mod_counter(3, 4), mod_counter(3, 4)]).unwrap();
        let r = reorder_klayer(&base, AddressMode::Plain).unwrap();
        // two passes count every one twice
        let f = reorder_of(&crate::functions::BooleanFunction::total("twice", 4, |x| {
            (2 * x.iter().filter(|&&b| b).count()) % 3 == 0
        }));
        assert!(r.represents(&f, Mode::Exact, &InputSelection::Exhaustive).unwrap().pass);
    }

    #[test]
    fn address_flip_is_involution() {
        let f = address_flip(2, 1, 3);
        assert_eq!(f.mul(&f), CMatrix::identity(12));
    }
}
