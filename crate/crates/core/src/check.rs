//! Input enumeration and program-vs-oracle verdicts shared by the classical and
//! quantum simulators.
//!
//! Inputs are indexed big-endian: variable `i` (0-based) of an `n`-bit input is
//! bit `n - 1 - i` of the index, so index order is lexicographic order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::BooleanFunction;

/// Largest arity for which exhaustive scans are allowed.
pub const EXHAUSTIVE_ARITY_CAP: usize = 24;

/// Absolute tolerance used for every probability comparison.
pub const PROB_TOL: f64 = 1e-9;

pub fn index_to_bits(index: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect()
}

pub fn bits_to_index(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}

pub fn ensure_exhaustive(n: usize) -> Result<()> {
    if n > EXHAUSTIVE_ARITY_CAP {
        return Err(Error::CapExceeded {
            what: "exhaustive arity",
            value: n,
            cap: EXHAUSTIVE_ARITY_CAP,
        });
    }
    Ok(())
}

/// Which inputs a verification pass visits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InputSelection {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

impl InputSelection {
    /// Materializes the sampled inputs; exhaustive selections are walked by index instead.
    pub fn sample(n: usize, count: usize, seed: u64) -> Vec<Vec<bool>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (0..n).map(|_| rng.gen::<bool>()).collect())
            .collect()
    }
}

/// How a program's acceptance probability is compared with the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// Acceptance must equal the oracle bit (within [`PROB_TOL`]).
    Exact,
    /// Acceptance at least 1/2 + eps on 1-points and at most 1/2 - eps on 0-points.
    Bounded(f64),
}

impl Mode {
    fn agrees(self, expected: bool, p: f64) -> bool {
        match self {
            Mode::Exact => (p - if expected { 1.0 } else { 0.0 }).abs() <= PROB_TOL,
            Mode::Bounded(eps) => {
                if expected {
                    p >= 0.5 + eps - PROB_TOL
                } else {
                    p <= 0.5 - eps + PROB_TOL
                }
            }
        }
    }
}

/// Anything that assigns an acceptance probability to every input of a fixed arity.
pub trait Acceptor: Sync {
    fn arity(&self) -> usize;

    fn acceptance(&self, input: &[bool]) -> Result<f64>;

    /// Acceptance for all `2^n` inputs, by index.
    fn acceptance_table(&self) -> Result<Vec<f64>> {
        let n = self.arity();
        ensure_exhaustive(n)?;
        (0..1u64 << n)
            .into_par_iter()
            .map(|idx| self.acceptance(&index_to_bits(idx, n)))
            .collect()
    }
}

/// Outcome of comparing a program with an oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// In-domain points visited.
    pub checked: usize,
    /// Off-domain points skipped.
    pub skipped: usize,
    pub agree: usize,
    /// Smallest acceptance over points where the oracle is 1.
    pub min_accept: Option<f64>,
    /// Largest acceptance over points where the oracle is 0.
    pub max_reject: Option<f64>,
    /// First disagreeing input in visiting order.
    pub witness: Option<Vec<bool>>,
}

#[derive(Default)]
struct Tally {
    checked: usize,
    skipped: usize,
    agree: usize,
    min_accept: Option<f64>,
    max_reject: Option<f64>,
    witness: Option<Vec<bool>>,
}

impl Tally {
    fn push(&mut self, mode: Mode, expected: Option<bool>, p: f64, input: impl FnOnce() -> Vec<bool>) {
        let Some(expected) = expected else {
            self.skipped += 1;
            return;
        };
        self.checked += 1;
        if expected {
            self.min_accept = Some(self.min_accept.map_or(p, |m| m.min(p)));
        } else {
            self.max_reject = Some(self.max_reject.map_or(p, |m| m.max(p)));
        }
        if mode.agrees(expected, p) {
            self.agree += 1;
        } else if self.witness.is_none() {
            self.witness = Some(input());
        }
    }

    fn finish(self) -> Verdict {
        Verdict {
            pass: self.agree == self.checked,
            checked: self.checked,
            skipped: self.skipped,
            agree: self.agree,
            min_accept: self.min_accept,
            max_reject: self.max_reject,
            witness: self.witness,
        }
    }
}

/// Compares `program` against `f` on the selected inputs.
pub fn check(program: &dyn Acceptor, f: &BooleanFunction, mode: Mode, inputs: &InputSelection) -> Result<Verdict> {
    let n = program.arity();
    if n != f.arity() {
        return Err(Error::ArityMismatch {
            left: n,
            right: f.arity(),
        });
    }
    if let Mode::Bounded(eps) = mode {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::InvalidParameter(format!("epsilon {eps} not in (0, 1/2]")));
        }
    }
    let mut tally = Tally::default();
    match inputs {
        InputSelection::Exhaustive => {
            let probs = program.acceptance_table()?;
            let truth = f.truth_table()?;
            for (idx, (&p, &expected)) in probs.iter().zip(&truth).enumerate() {
                tally.push(mode, expected, p, || index_to_bits(idx as u64, n));
            }
        }
        InputSelection::Sampled { count, seed } => {
            let points = InputSelection::sample(n, *count, *seed);
            let probs: Vec<f64> = points
                .par_iter()
                .map(|x| program.acceptance(x))
                .collect::<Result<_>>()?;
            for (x, p) in points.iter().zip(probs) {
                tally.push(mode, f.value(x), p, || x.clone());
            }
        }
    }
    Ok(tally.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_indexing_is_big_endian() {
        assert_eq!(index_to_bits(0b110, 3), vec![true, true, false]);
        assert_eq!(bits_to_index(&[false, true, true]), 3);
    }

    #[test]
    fn bounded_mode_margins() {
        assert!(Mode::Bounded(0.25).agrees(true, 0.75));
        assert!(!Mode::Bounded(0.25).agrees(true, 0.7));
        assert!(Mode::Bounded(0.25).agrees(false, 0.25));
        assert!(!Mode::Exact.agrees(false, 0.5));
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(InputSelection::sample(10, 4, 3), InputSelection::sample(10, 4, 3));
    }
}
