//! End-to-end acceptance criteria. Each test prints one PASS/FAIL line to
//! stderr (unbuffered, so it shows even when output is captured).

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use obddlab::check::{index_to_bits, Acceptor, InputSelection, Mode};
use obddlab::commutative::{
    build_pj_2kobdd, build_rpj_2kobdd, compile_swq, SwqForm, PJ_WIDTH_CONSTANT, RPJ_WIDTH_CONSTANT,
};
use obddlab::fingerprint::{
    build_eq_qobdd, build_mod_qobdd, build_req_qobdd, build_seq_qobdd, compile_linear, find_good_set,
    FingerprintParams, LinearForm,
};
use obddlab::functions::{eq, mod_fn, pj, reorder_of, req, seq, xorreorder_of, BooleanFunction};
use obddlab::reorder::{reorder_obdd, xorreorder_qobdd, AddressMode};
use obddlab::width::{min_width_all_orders, min_width_fixed_order, min_width_sampled_orders, quotient_obdd};
use obddlab::{Error, Order, QuantumProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 0.25;
const TOL: f64 = 1e-9;
const SEED: u64 = 7;

struct Outcome {
    id: u32,
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new(id: u32, name: &'static str) -> Self {
        Outcome {
            id,
            name,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self) {
        let pass = self.failures.is_empty();
        let detail = if pass {
            self.notes.join("; ")
        } else {
            self.failures.join("; ")
        };
        let line = format!(
            "{} criterion {:>2} ({}): {}\n",
            if pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            detail
        );
        let _ = std::io::stderr().write_all(line.as_bytes());
        assert!(pass, "{line}");
    }
}

/// `2 * pow2(ceil((2/eps) ln 2m))` computed here rather than by the library.
fn expected_dim(modulus_bits: u32, eps: f64) -> usize {
    let raw = ((2.0 / eps) * ((modulus_bits + 1) as f64 * std::f64::consts::LN_2)).ceil() as usize;
    2 * raw.next_power_of_two()
}

/// Checks one-sided fingerprint acceptance against an oracle on all inputs.
fn one_sided(out: &mut Outcome, label: &str, prog: &QuantumProgram, f: &BooleanFunction) {
    let table = prog.acceptance_table().expect("table");
    let mut worst_accept: f64 = 1.0;
    let mut worst_reject: f64 = 0.0;
    for (idx, &p) in table.iter().enumerate() {
        match f.value(&index_to_bits(idx as u64, f.arity())) {
            Some(true) => worst_accept = worst_accept.min(p),
            Some(false) => worst_reject = worst_reject.max(p),
            None => {}
        }
    }
    out.require(
        (worst_accept - 1.0).abs() <= TOL,
        format!("{label}: min accept {worst_accept}"),
    );
    out.require(worst_reject <= EPS + TOL, format!("{label}: max reject {worst_reject}"));
    out.note(format!(
        "{label}: min acc {worst_accept:.12}, max rej {worst_reject:.4}"
    ));
}

#[test]
fn criterion_01_eq_fingerprint() {
    let mut out = Outcome::new(1, "EQ fingerprint, q = 2..6");
    for q in 2..=6 {
        let start = Instant::now();
        let prog = build_eq_qobdd(q, EPS, SEED).unwrap();
        one_sided(&mut out, &format!("q={q}"), &prog, &eq(q));
        out.require(
            prog.dim() == expected_dim(q as u32, EPS),
            format!("q={q}: dim {} != {}", prog.dim(), expected_dim(q as u32, EPS)),
        );
        let elapsed = start.elapsed();
        out.require(elapsed < Duration::from_secs(60), format!("q={q}: took {elapsed:?}"));
    }
    out.finish();
}

#[test]
fn criterion_02_mod_fingerprint() {
    let mut out = Outcome::new(2, "MOD fingerprint, p = 3, 5, 7, n = 12");
    for p in [3u64, 5, 7] {
        let prog = build_mod_qobdd(p, 12, EPS, SEED).unwrap();
        one_sided(&mut out, &format!("p={p}"), &prog, &mod_fn(p as usize, 12).unwrap());
        let small = build_mod_qobdd(p, 4, EPS, SEED).unwrap();
        out.require(small.dim() == prog.dim(), format!("p={p}: dim depends on n"));
    }
    out.finish();
}

#[test]
fn criterion_03_req_fingerprint() {
    let mut out = Outcome::new(3, "REQ, q = 1, 2");
    for q in [1usize, 2] {
        let prog = build_req_qobdd(q, EPS, SEED).unwrap();
        let f = req(q).unwrap();
        out.require(prog.n() == [4, 12][q - 1], format!("q={q}: arity {}", prog.n()));
        let v = prog
            .represents_bounded_error(&f, EPS, &InputSelection::Exhaustive)
            .unwrap();
        out.require(
            v.pass && v.checked == 1 << prog.n(),
            format!("q={q}: bounded-error verdict {v:?}"),
        );
        let address = (2 * q).next_power_of_two();
        let bound = address * expected_dim(q as u32, EPS);
        out.require(prog.dim() <= bound, format!("q={q}: dim {} > {bound}", prog.dim()));
        out.note(format!(
            "q={q}: dim {}, max rej {:.4}",
            prog.dim(),
            v.max_reject.unwrap_or(0.0)
        ));
    }
    out.finish();
}

#[test]
fn criterion_04_seq_fingerprint() {
    let mut out = Outcome::new(4, "SEQ, q = 4");
    let q = 4;
    let prog = build_seq_qobdd(q, EPS, SEED).unwrap();
    out.require(prog.n() == 10, format!("arity {}", prog.n()));
    one_sided(&mut out, "q=4", &prog, &seq(q).unwrap());
    let bound = q.next_power_of_two() * expected_dim(q as u32, EPS);
    out.require(prog.dim() <= bound, format!("dim {} > {bound}", prog.dim()));
    out.finish();
}

#[test]
fn criterion_05_classical_reordering() {
    let mut out = Outcome::new(5, "reordering of MOD programs, q = 2, 4");
    for q in [2usize, 4] {
        for p in [2usize, 3] {
            let base = compile_swq(&SwqForm::mod_count(p, q).unwrap()).unwrap();
            let f = mod_fn(p, q).unwrap();
            for (mode, oracle) in [
                (AddressMode::Plain, reorder_of(&f)),
                (AddressMode::Xor, xorreorder_of(&f)),
            ] {
                let prog = reorder_obdd(&base, mode).unwrap();
                let v = prog
                    .represents(&oracle, Mode::Exact, &InputSelection::Exhaustive)
                    .unwrap();
                let label = format!("q={q} p={p} {mode:?}");
                out.require(v.pass && v.checked > 0, format!("{label}: {v:?}"));
                let expected = q.next_power_of_two() * base.width();
                out.require(
                    prog.width() == expected,
                    format!("{label}: width {} != {expected}", prog.width()),
                );
            }
        }
    }
    out.note("plain and xor agree with the oracles on every in-domain input");
    out.finish();
}

#[test]
fn criterion_06_quantum_reordering() {
    let mut out = Outcome::new(6, "quantum xor-reordering of EQ_1 vs REQ_1");
    let reordered = xorreorder_qobdd(&build_eq_qobdd(1, EPS, SEED).unwrap()).unwrap();
    let direct = build_req_qobdd(1, EPS, SEED).unwrap();
    out.require(reordered.n() == 4 && direct.n() == 4, "arity");
    let mut worst: f64 = 0.0;
    for idx in 0..16 {
        let x = index_to_bits(idx, 4);
        let a = reordered.accept_probability(&x).unwrap();
        let b = direct.accept_probability(&x).unwrap();
        worst = worst.max((a - b).abs());
    }
    out.require(worst <= TOL, format!("max difference {worst}"));
    for (label, p) in [("reordered", &reordered), ("direct", &direct)] {
        let bad = p.validate_unitary(TOL);
        out.require(bad.is_empty(), format!("{label}: {} non-unitary gates", bad.len()));
    }
    out.note(format!("max |difference| {worst:.2e} over 16 inputs"));
    out.finish();
}

#[test]
fn criterion_07_width_witnesses() {
    let mut out = Outcome::new(7, "width lower-bound witnesses");
    let limit = Duration::from_secs(120);
    for q in 1..=4 {
        let start = Instant::now();
        let w = min_width_fixed_order(&eq(q), &Order::identity(2 * q)).unwrap().width;
        out.require(w == 1 << q, format!("eq({q}) width {w}"));
        out.require(start.elapsed() < limit, format!("eq({q}) slow"));
    }
    let start = Instant::now();
    let best = min_width_all_orders(&xorreorder_of(&eq(1))).unwrap();
    out.require(best.width >= 2, format!("xorreorder(eq(1)) min width {}", best.width));
    out.require(start.elapsed() < limit, "all-orders scan slow");

    let start = Instant::now();
    let sampled = min_width_sampled_orders(&req(2).unwrap(), 200, SEED).unwrap();
    out.require(sampled.orders_checked == 201, "order count");
    out.require(
        sampled.best.width >= 4,
        format!("req(2) sampled min {}", sampled.best.width),
    );
    out.require(start.elapsed() < limit, "sampled scan slow");
    out.note(format!(
        "eq widths 2,4,8,16; xorreorder(eq(1)) min {}; req(2) sampled min {} at {}",
        best.width, sampled.best.width, sampled.best.order
    ));
    out.finish();
}

#[test]
fn criterion_08_pointer_jumping() {
    let mut out = Outcome::new(8, "PJ / RPJ constructions");
    for (m, k) in [(2usize, 1usize), (2, 2), (4, 1), (4, 2)] {
        let prog = build_pj_2kobdd(k, m).unwrap();
        let v = prog
            .represents(&pj(2 * k - 1, m).unwrap(), Mode::Exact, &InputSelection::Exhaustive)
            .unwrap();
        out.require(v.pass, format!("m={m} k={k}: {}/{} agree", v.agree, v.checked));
        out.require(
            prog.width() <= PJ_WIDTH_CONSTANT * m * m,
            format!("m={m} k={k}: width {}", prog.width()),
        );
    }
    for m in [2usize, 4] {
        let prog = build_pj_2kobdd(1, m).unwrap();
        let n = prog.n();
        let orders: Vec<Order> = if m == 2 {
            Order::all(n).collect()
        } else {
            Order::sample(n, 100, SEED)
        };
        for (i, layer) in prog.layers().iter().enumerate() {
            let r = layer.is_commutative(&orders, &InputSelection::Exhaustive).unwrap();
            out.require(r.commutative, format!("m={m} layer {i}: {:?}", r.counterexample));
        }
    }
    let rpj = build_rpj_2kobdd(1, 2).unwrap();
    let v = rpj
        .represents(
            &reorder_of(&pj(1, 2).unwrap()),
            Mode::Exact,
            &InputSelection::Exhaustive,
        )
        .unwrap();
    out.require(v.pass && v.checked > 0, format!("rpj: {}/{} agree", v.agree, v.checked));
    let n = rpj.n();
    out.require(
        rpj.width() <= RPJ_WIDTH_CONSTANT * n.pow(3),
        format!("rpj width {} vs n^3 = {}", rpj.width(), n.pow(3)),
    );
    out.note(format!(
        "PJ width m^2 (c = {PJ_WIDTH_CONSTANT}); RPJ(1,2) arity {n}, width {}, {} in-domain points (c = {RPJ_WIDTH_CONSTANT})",
        rpj.width(),
        v.checked
    ));
    out.finish();
}

/// The goodness value recomputed from scratch.
fn cosine_value(k: &[u64], m: u64, g: u64) -> f64 {
    let s: f64 = k
        .iter()
        .map(|&kj| (2.0 * PI * ((kj * g) % m) as f64 / m as f64).cos())
        .sum();
    (s / k.len() as f64).powi(2)
}

#[test]
fn criterion_09_good_sets() {
    let mut out = Outcome::new(9, "good-set search, m = 3..64");
    let mut worst: f64 = 0.0;
    for m in 3..=64u64 {
        match find_good_set(m, EPS, SEED) {
            Ok(params) => {
                let value = (1..m).map(|g| cosine_value(&params.k, m, g)).fold(0.0, f64::max);
                worst = worst.max(value);
                out.require(value <= EPS + TOL, format!("m={m}: value {value}"));
                out.require(params.k.iter().all(|&k| (1..m).contains(&k)), format!("m={m}: K range"));
            }
            Err(e) => out.require(false, format!("m={m}: {e}")),
        }
    }
    match find_good_set(2, EPS, SEED) {
        Err(Error::GoodSetSearch { best_value, .. }) => {
            out.require((best_value - 1.0).abs() < TOL, format!("m=2 best value {best_value}"));
        }
        other => out.require(false, format!("m=2 did not fail: {other:?}")),
    }
    out.note(format!(
        "largest worst-case value {worst:.4}; m=2 reported as search failure"
    ));
    out.finish();
}

#[test]
fn criterion_10_cross_checks() {
    let mut out = Outcome::new(10, "simulator, norm and quotient cross-checks");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut pairs = 0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    while pairs < 10_000 {
        let m = rng.gen_range(3..=16u64);
        let n = rng.gen_range(1..=10usize);
        let eps = [0.25, 0.3, 0.4][rng.gen_range(0..3)];
        let coefficients: Vec<u64> = (0..n).map(|_| rng.gen_range(0..m)).collect();
        let form = LinearForm::new(coefficients.clone(), m).unwrap();
        let params: FingerprintParams = find_good_set(m, eps, rng.gen()).unwrap();
        let prog = compile_linear(&form, &params).unwrap();
        for _ in 0..100 {
            let x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let g = coefficients
                .iter()
                .zip(&x)
                .filter(|(_, &b)| b)
                .map(|(&c, _)| c)
                .sum::<u64>()
                % m;
            let expected = cosine_value(&params.k, m, g);
            worst_gap = worst_gap.max((prog.accept_probability(&x).unwrap() - expected).abs());
            for norm in prog.norm_trace(&x).unwrap() {
                worst_norm = worst_norm.max((norm - 1.0).abs());
            }
            pairs += 1;
        }
    }
    out.require(worst_gap <= TOL, format!("closed-form gap {worst_gap}"));
    out.require(worst_norm <= TOL, format!("norm drift {worst_norm}"));

    for trial in 0..20 {
        let table: Vec<bool> = (0..256).map(|_| rng.gen()).collect();
        let f = BooleanFunction::total(format!("random{trial}"), 8, move |x| {
            table[x.iter().fold(0usize, |a, &b| a << 1 | b as usize)]
        });
        let order = Order::random(8, &mut rng);
        let profile = min_width_fixed_order(&f, &order).unwrap();
        let q = quotient_obdd(&f, &order).unwrap();
        out.require(
            q.width() == profile.width,
            format!("trial {trial}: width {} vs {}", q.width(), profile.width),
        );
        let v = q.represents(&f, Mode::Exact, &InputSelection::Exhaustive).unwrap();
        out.require(v.pass, format!("trial {trial}: quotient disagrees"));
    }
    out.note(format!(
        "{pairs} pairs, max gap {worst_gap:.2e}, max norm drift {worst_norm:.2e}; 20 quotient programs sound"
    ));
    out.finish();
}
