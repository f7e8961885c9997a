//! Exact minimal OBDD width by subfunction counting.
//!
//! The truth table is rearranged so bits run in reading order; then the
//! subfunctions after `i` levels are the `2^i` consecutive slices of length
//! `2^(n-i)`, compared in full. For partial functions two slices are
//! compatible when they agree wherever both are defined, and the count is the
//! size of a greedily built set of pairwise incompatible slices: a lower bound
//! on the width of any program consistent with the function.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{Kind, LeveledProgram, Transition};
use crate::check::ensure_exhaustive;
use crate::error::{Error, Result};
use crate::functions::BooleanFunction;
use crate::order::Order;

pub const ALL_ORDERS_ARITY_CAP: usize = 8;

const UNDEFINED: u8 = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidthProfile {
    pub order: Order,
    /// Class count after `i` levels, `i = 0..=n`; the last entry is the sink level.
    pub per_level: Vec<usize>,
    /// Maximum over all levels including the sink level.
    pub width: usize,
}

impl WidthProfile {
    fn new(order: Order, per_level: Vec<usize>) -> Self {
        let width = per_level.iter().copied().max().unwrap_or(1);
        WidthProfile {
            order,
            per_level,
            width,
        }
    }

    /// Maximum over the levels before the sink.
    pub fn width_without_sink(&self) -> usize {
        let n = self.per_level.len() - 1;
        self.per_level[..n].iter().copied().max().unwrap_or(1)
    }
}

/// Truth table as bytes (0, 1, or [`UNDEFINED`]) indexed by variable bits.
fn byte_table(f: &BooleanFunction) -> Result<Vec<u8>> {
    Ok(f.truth_table()?
        .into_iter()
        .map(|v| v.map_or(UNDEFINED, u8::from))
        .collect())
}

/// Rearranges a table so that index bits follow the reading order.
fn in_level_order(table: &[u8], order: &Order) -> Vec<u8> {
    let n = order.len();
    // shift[level] is the index-bit position of the variable read at `level`
    let shift: Vec<usize> = (0..n).map(|level| n - 1 - order.var_at(level)).collect();
    (0..table.len())
        .map(|li| {
            let idx = (0..n)
                .filter(|&level| (li >> (n - 1 - level)) & 1 == 1)
                .fold(0usize, |acc, level| acc | 1 << shift[level]);
            table[idx]
        })
        .collect()
}

fn compatible(a: &[u8], b: &[u8]) -> bool {
    a.iter()
        .zip(b)
        .all(|(&x, &y)| x == y || x == UNDEFINED || y == UNDEFINED)
}

/// Distinct slices, in first-occurrence order, and each slice's class id.
fn classes(slices: &[&[u8]]) -> (Vec<usize>, Vec<usize>) {
    let mut ids: HashMap<&[u8], usize> = HashMap::new();
    let mut reps = Vec::new();
    let assignment = slices
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            *ids.entry(s).or_insert_with(|| {
                reps.push(i);
                reps.len() - 1
            })
        })
        .collect();
    (reps, assignment)
}

fn incompatible_clique(distinct: &[&[u8]]) -> usize {
    let mut candidates: Vec<&[u8]> = distinct
        .iter()
        .copied()
        .filter(|s| s.iter().any(|&v| v != UNDEFINED))
        .collect();
    candidates.sort_by_key(|s| std::cmp::Reverse(s.iter().filter(|&&v| v != UNDEFINED).count()));
    let mut chosen: Vec<&[u8]> = Vec::new();
    for c in candidates {
        if chosen.iter().all(|s| !compatible(s, c)) {
            chosen.push(c);
        }
    }
    chosen.len().max(1)
}

fn profile_from_table(table: &[u8], order: &Order, total: bool) -> WidthProfile {
    let n = order.len();
    let leveled = in_level_order(table, order);
    let per_level = (0..=n)
        .map(|i| {
            let slices: Vec<&[u8]> = leveled.chunks(1 << (n - i)).collect();
            let (reps, _) = classes(&slices);
            if total {
                reps.len()
            } else {
                let distinct: Vec<&[u8]> = reps.iter().map(|&r| slices[r]).collect();
                incompatible_clique(&distinct)
            }
        })
        .collect();
    WidthProfile::new(order.clone(), per_level)
}

fn check_order(f: &BooleanFunction, order: &Order) -> Result<()> {
    if order.len() != f.arity() {
        return Err(Error::ArityMismatch {
            left: order.len(),
            right: f.arity(),
        });
    }
    Ok(())
}

pub fn min_width_fixed_order(f: &BooleanFunction, order: &Order) -> Result<WidthProfile> {
    check_order(f, order)?;
    ensure_exhaustive(f.arity())?;
    Ok(profile_from_table(&byte_table(f)?, order, f.is_total()))
}

/// Profiles for a list of orders, sharing one truth table.
pub fn profiles(f: &BooleanFunction, orders: &[Order]) -> Result<Vec<WidthProfile>> {
    ensure_exhaustive(f.arity())?;
    for o in orders {
        check_order(f, o)?;
    }
    let table = byte_table(f)?;
    Ok(orders
        .par_iter()
        .map(|o| profile_from_table(&table, o, f.is_total()))
        .collect())
}

/// Smallest width; ties go to the lexicographically smallest order.
fn best(profiles: &[WidthProfile]) -> WidthProfile {
    profiles
        .iter()
        .min_by(|a, b| a.width.cmp(&b.width).then_with(|| a.order.cmp(&b.order)))
        .expect("at least one order")
        .clone()
}

/// Every order's profile, in lexicographic order of the orders.
pub fn all_order_profiles(f: &BooleanFunction) -> Result<Vec<WidthProfile>> {
    if f.arity() > ALL_ORDERS_ARITY_CAP {
        return Err(Error::CapExceeded {
            what: "all-orders arity",
            value: f.arity(),
            cap: ALL_ORDERS_ARITY_CAP,
        });
    }
    profiles(f, &Order::all(f.arity()).collect::<Vec<_>>())
}

pub fn min_width_all_orders(f: &BooleanFunction) -> Result<WidthProfile> {
    Ok(best(&all_order_profiles(f)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledWidth {
    pub best: WidthProfile,
    /// Width -> number of sampled orders with that width.
    pub histogram: BTreeMap<usize, usize>,
    pub orders_checked: usize,
    pub seed: u64,
}

/// Minimum over the identity order plus `samples` seeded random orders.
pub fn min_width_sampled_orders(f: &BooleanFunction, samples: usize, seed: u64) -> Result<SampledWidth> {
    let n = f.arity();
    let orders: Vec<Order> = std::iter::once(Order::identity(n))
        .chain(Order::sample(n, samples, seed))
        .collect();
    let all = profiles(f, &orders)?;
    let mut histogram = BTreeMap::new();
    for p in &all {
        *histogram.entry(p.width).or_insert(0) += 1;
    }
    Ok(SampledWidth {
        best: best(&all),
        histogram,
        orders_checked: all.len(),
        seed,
    })
}

/// The minimal OBDD of a total function under `order`: level-`i` nodes are the
/// subfunction classes, padded with self-looping dummies to the profile width.
pub fn quotient_obdd(f: &BooleanFunction, order: &Order) -> Result<LeveledProgram> {
    check_order(f, order)?;
    ensure_exhaustive(f.arity())?;
    if !f.is_total() {
        return Err(Error::InvalidParameter(
            "quotient construction needs a total function".into(),
        ));
    }
    let n = f.arity();
    let leveled = in_level_order(&byte_table(f)?, order);
    let assignments: Vec<(Vec<usize>, Vec<usize>)> = (0..=n)
        .map(|i| {
            let slices: Vec<&[u8]> = leveled.chunks(1 << (n - i)).collect();
            classes(&slices)
        })
        .collect();
    let width = assignments.iter().map(|(reps, _)| reps.len()).max().unwrap_or(1);

    let levels = (0..n)
        .map(|i| {
            let (reps, _) = &assignments[i];
            let (_, next) = &assignments[i + 1];
            [0usize, 1].map(|bit| {
                let targets: Vec<usize> = (0..width)
                    .map(|c| match reps.get(c) {
                        Some(&slice) => next[2 * slice + bit],
                        None => c,
                    })
                    .collect();
                Transition::from_targets(&targets)
            })
        })
        .collect();
    let (sink_reps, _) = &assignments[n];
    let accept = sink_reps
        .iter()
        .enumerate()
        .filter(|(_, &slice)| leveled[slice] == 1)
        .map(|(c, _)| c)
        .collect();
    LeveledProgram::new(Kind::Deterministic, width, order.clone(), levels, 0, accept)
}

/// One CSV row per profile: order, width, width without sink, per-level counts.
pub fn write_profiles_csv<W: Write>(out: W, profiles: &[WidthProfile]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["order", "width", "width_no_sink", "per_level"])?;
    for p in profiles {
        w.write_record([
            p.order.to_one_based().iter().join(" "),
            p.width.to_string(),
            p.width_without_sink().to_string(),
            p.per_level.iter().join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{InputSelection, Mode};
    use crate::functions::{eq, padded, xorreorder_of};

    fn parity(n: usize) -> BooleanFunction {
        BooleanFunction::total("parity", n, |x| x.iter().filter(|&&b| b).count() % 2 == 1)
    }

    #[test]
    fn constant_and_parity() {
        let c = BooleanFunction::total("one", 3, |_| true);
        assert_eq!(min_width_fixed_order(&c, &Order::identity(3)).unwrap().width, 1);
        assert_eq!(min_width_all_orders(&parity(4)).unwrap().width, 2);
    }

    #[test]
    fn eq_widths() {
        let p = min_width_fixed_order(&eq(1), &Order::identity(2)).unwrap();
        assert_eq!(p.per_level, vec![1, 2, 2]);
        assert_eq!(min_width_fixed_order(&eq(2), &Order::identity(4)).unwrap().width, 4);
        assert_eq!(min_width_all_orders(&eq(1)).unwrap().width, 2);
        let best = min_width_all_orders(&eq(2)).unwrap();
        assert_eq!(best.width, 3);
        assert_eq!(best.order.to_one_based(), vec![1, 3, 2, 4]);
    }

    #[test]
    fn partial_function_lower_bound() {
        let f = xorreorder_of(&eq(1));
        let best = min_width_all_orders(&f).unwrap();
        assert!(best.width >= 2);
    }

    #[test]
    fn sampled_with_identity_only() {
        let s = min_width_sampled_orders(&eq(2), 0, 1).unwrap();
        assert_eq!(s.best, min_width_fixed_order(&eq(2), &Order::identity(4)).unwrap());
        assert_eq!(s.orders_checked, 1);
    }

    #[test]
    fn padding_last_does_not_increase_width() {
        let base = min_width_fixed_order(&eq(2), &Order::identity(4)).unwrap();
        let pad = min_width_fixed_order(&padded(&eq(2), 6).unwrap(), &Order::identity(6)).unwrap();
        assert!(pad.width <= base.width);
    }

    #[test]
    fn quotient_is_sound() {
        let f = eq(2);
        let o = Order::from_one_based(&[1, 3, 2, 4]).unwrap();
        let p = quotient_obdd(&f, &o).unwrap();
        assert_eq!(p.width(), 3);
        assert!(p.represents(&f, Mode::Exact, &InputSelection::Exhaustive).unwrap().pass);
    }

    #[test]
    fn csv_rows() {
        let all = all_order_profiles(&eq(1)).unwrap();
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, &all).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("1 2,2,2,1;2;2"));
    }
}
