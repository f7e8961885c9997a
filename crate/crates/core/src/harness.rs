//! Named experiments with CSV/JSON reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bp::{KLayerProgram, LeveledProgram};
use crate::check::{InputSelection, Mode, Verdict};
use crate::commutative::{
    build_pj_2kobdd, build_rpj_2kobdd, compile_swq, SwqForm, PJ_WIDTH_CONSTANT, RPJ_WIDTH_CONSTANT,
};
use crate::error::{Error, Result};
use crate::fingerprint::{
    block_count, build_eq_qobdd, build_mod_qobdd, build_req_qobdd, build_seq_qobdd, find_good_set, is_good,
};
use crate::functions::{ceil_log2, eq, mod_fn, parse_function, pj, reorder_of, req, seq, xorreorder_of, Params};
use crate::order::Order;
use crate::qobdd::QuantumProgram;
use crate::reorder::{reorder_obdd, AddressMode, ReorderLayout};
use crate::width::{all_order_profiles, min_width_fixed_order, min_width_sampled_orders, profiles, write_profiles_csv};

pub const COMMANDS: &[&str] = &[
    "eq-demo",
    "mod-demo",
    "req-demo",
    "seq-demo",
    "pj-demo",
    "rpj-demo",
    "reorder-verify",
    "commutativity-check",
    "good-set",
    "width-table",
    "width-search",
    "export",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags, or the same keys in a JSON config file. Flags win over the file.
#[derive(Clone, Debug, Default, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "obddlab", version, about = "Classical and quantum OBDD experiments")]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment to run.
    #[arg(long)]
    pub cmd: Option<String>,
    /// Function descriptor, e.g. "eq:q=2" or "xorreorder/eq:q=1".
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    pub function: Option<String>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Arity where the command needs one (mod-demo).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampled orders (width-search, width-table --mode sampled).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random orders tried by commutativity-check.
    #[arg(long)]
    pub orders: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// width-table order set: all-orders, sampled or fixed.
    #[arg(long)]
    pub mode: Option<String>,
    /// 1-based order for width-table --mode fixed, e.g. "1 3 2 4".
    #[arg(long)]
    pub order: Option<String>,
    /// Program descriptor for export and commutativity-check, e.g. "mod-qobdd:p=3,n=6".
    #[arg(long)]
    pub builder: Option<String>,
    /// Extra per-order CSV (order, width, per-level counts) for width commands.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// JSON file with any of the above keys.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($top:expr, $base:expr, $($f:ident),*) => {
        ExperimentConfig { $($f: $top.$f.or($base.$f),)* }
    };
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Fields set here override `base`.
    pub fn overlay(self, base: ExperimentConfig) -> Self {
        overlay_fields!(
            self, base, cmd, function, q, p, m, k, n, epsilon, seed, samples, orders, out, format, mode, order,
            builder, profiles, config
        )
    }

    /// Resolves `--config` and fills the defaults every report records.
    pub fn resolve(self) -> Result<Self> {
        let mut cfg = match &self.config {
            Some(path) => self.clone().overlay(Self::from_json_file(path)?),
            None => self,
        };
        cfg.config = None;
        cfg.seed.get_or_insert(0);
        cfg.epsilon.get_or_insert(0.25);
        Ok(cfg)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(0.25)
    }

    fn function_desc(&self) -> Result<&str> {
        self.function
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("--fn is required".into()))
    }
}

/// One CSV line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub function: String,
    pub n: usize,
    pub width_or_dim: usize,
    pub min_accept: Option<f64>,
    pub max_reject: Option<f64>,
    pub agree: usize,
    pub total: usize,
    pub seed: u64,
    pub runtime_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

impl ExperimentReport {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    /// Zeroes run times so reports can be compared byte for byte.
    pub fn without_timing(mut self) -> Self {
        for r in &mut self.rows {
            r.runtime_ms = 0;
        }
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for row in &self.rows {
                    w.serialize(row)?;
                }
                if self.rows.is_empty() {
                    w.write_record([
                        "experiment",
                        "function",
                        "n",
                        "width_or_dim",
                        "min_accept",
                        "max_reject",
                        "agree",
                        "total",
                        "seed",
                        "runtime_ms",
                    ])?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
            }
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        s
    }
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Builder {
    config: ExperimentConfig,
    rows: Vec<ReportRow>,
    checks: Vec<Check>,
    extra: Option<serde_json::Value>,
    started: Instant,
}

impl Builder {
    fn new(config: &ExperimentConfig) -> Self {
        Builder {
            config: config.clone(),
            rows: Vec::new(),
            checks: Vec::new(),
            extra: None,
            started: Instant::now(),
        }
    }

    fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        });
    }

    fn verdict_row(&mut self, experiment: &str, function: &str, n: usize, size: usize, v: &Verdict) {
        let runtime_ms = self.elapsed_ms();
        self.rows.push(ReportRow {
            experiment: experiment.into(),
            function: function.into(),
            n,
            width_or_dim: size,
            min_accept: v.min_accept,
            max_reject: v.max_reject,
            agree: v.agree,
            total: v.checked,
            seed: self.config.seed(),
            runtime_ms,
        });
    }

    fn finish(self) -> ExperimentReport {
        let pass = self.checks.iter().all(|c| c.pass);
        ExperimentReport {
            config: self.config,
            rows: self.rows,
            checks: self.checks,
            pass,
            extra: self.extra,
        }
    }
}

/// Runs one experiment. Usage problems come back as `Err`; failed checks as a
/// report with `pass = false`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let cmd = config
        .cmd
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("--cmd is required".into()))?;
    let mut b = Builder::new(config);
    match cmd {
        "eq-demo" => fingerprint_demo(&mut b, Fp::Eq)?,
        "mod-demo" => fingerprint_demo(&mut b, Fp::Mod)?,
        "req-demo" => fingerprint_demo(&mut b, Fp::Req)?,
        "seq-demo" => fingerprint_demo(&mut b, Fp::Seq)?,
        "pj-demo" => pj_demo(&mut b)?,
        "rpj-demo" => rpj_demo(&mut b)?,
        "reorder-verify" => reorder_verify(&mut b)?,
        "commutativity-check" => commutativity_check(&mut b)?,
        "good-set" => good_set(&mut b)?,
        "width-table" => width_table(&mut b)?,
        "width-search" => width_search(&mut b)?,
        "export" => export(&mut b)?,
        other => {
            return Err(Error::Unknown {
                kind: "command",
                name: other.into(),
            })
        }
    }
    Ok(b.finish())
}

#[derive(Clone, Copy)]
enum Fp {
    Eq,
    Mod,
    Req,
    Seq,
}

fn fingerprint_demo(b: &mut Builder, which: Fp) -> Result<()> {
    let (eps, seed) = (b.config.epsilon(), b.config.seed());
    let (name, prog, f, modulus, address_states) = match which {
        Fp::Eq => {
            let q = b.config.q.unwrap_or(3);
            (format!("eq:q={q}"), build_eq_qobdd(q, eps, seed)?, eq(q), 1u64 << q, 1)
        }
        Fp::Mod => {
            let (p, n) = (b.config.p.unwrap_or(3), b.config.n.unwrap_or(12));
            (
                format!("mod:p={p},n={n}"),
                build_mod_qobdd(p, n, eps, seed)?,
                mod_fn(p as usize, n)?,
                p,
                1,
            )
        }
        Fp::Req => {
            let q = b.config.q.unwrap_or(1);
            (
                format!("req:q={q}"),
                build_req_qobdd(q, eps, seed)?,
                req(q)?,
                1u64 << q,
                1 << ceil_log2(2 * q),
            )
        }
        Fp::Seq => {
            let q = b.config.q.unwrap_or(4);
            (
                format!("seq:q={q}"),
                build_seq_qobdd(q, eps, seed)?,
                seq(q)?,
                1u64 << q,
                1 << ceil_log2(q),
            )
        }
    };
    let v = prog.represents_bounded_error(&f, eps, &InputSelection::Exhaustive)?;
    let experiment = b.config.cmd.clone().unwrap_or_default();
    b.verdict_row(&experiment, &name, prog.n(), prog.dim(), &v);
    b.check(
        "bounded-error",
        v.pass,
        format!("{}/{} inputs within margin", v.agree, v.checked),
    );
    let one_sided = v.min_accept.is_none_or(|p| p >= 1.0 - 1e-9);
    b.check("one-sided", one_sided, format!("min accept {:?}", v.min_accept));
    let bound = address_states * 2 * block_count(modulus, eps);
    b.check(
        "dimension",
        prog.dim() <= bound,
        format!("dim {} (formula bound {bound})", prog.dim()),
    );
    Ok(())
}

fn pj_params(b: &Builder) -> (usize, usize) {
    (b.config.k.unwrap_or(1), b.config.m.unwrap_or(2) as usize)
}

fn pj_demo(b: &mut Builder) -> Result<()> {
    let (k, m) = pj_params(b);
    let prog = build_pj_2kobdd(k, m)?;
    let f = pj(2 * k - 1, m)?;
    let v = prog.represents(&f, Mode::Exact, &InputSelection::Exhaustive)?;
    b.verdict_row("pj-demo", f.name(), prog.n(), prog.width(), &v);
    b.check("exact", v.pass, format!("{}/{} inputs agree", v.agree, v.checked));
    let bound = PJ_WIDTH_CONSTANT * m * m;
    b.check(
        "width",
        prog.width() <= bound,
        format!("width {} <= {PJ_WIDTH_CONSTANT}*m^2 = {bound}", prog.width()),
    );
    Ok(())
}

fn rpj_demo(b: &mut Builder) -> Result<()> {
    let (k, m) = pj_params(b);
    let prog = build_rpj_2kobdd(k, m)?;
    let f = reorder_of(&pj(2 * k - 1, m)?);
    let v = prog.represents(&f, Mode::Exact, &InputSelection::Exhaustive)?;
    b.verdict_row("rpj-demo", f.name(), prog.n(), prog.width(), &v);
    b.check(
        "exact-on-domain",
        v.pass,
        format!("{}/{} in-domain inputs agree", v.agree, v.checked),
    );
    let bound = RPJ_WIDTH_CONSTANT * prog.n().pow(3);
    b.check(
        "width",
        prog.width() <= bound,
        format!("width {} <= {RPJ_WIDTH_CONSTANT}*n^3 = {bound}", prog.width()),
    );
    Ok(())
}

fn reorder_verify(b: &mut Builder) -> Result<()> {
    let (p, q) = (b.config.p.unwrap_or(3) as usize, b.config.q.unwrap_or(4));
    let base = compile_swq(&SwqForm::mod_count(p, q)?)?;
    let orders: Vec<Order> = if q <= 6 {
        Order::all(q).collect()
    } else {
        Order::sample(q, b.config.orders.unwrap_or(100), b.config.seed())
    };
    let cert = base.is_commutative(&orders, &InputSelection::Exhaustive)?;
    if !cert.commutative {
        return Err(Error::NotCommutative);
    }
    let base_fn = mod_fn(p, q)?;
    for (mode, f) in [
        (AddressMode::Plain, reorder_of(&base_fn)),
        (AddressMode::Xor, xorreorder_of(&base_fn)),
    ] {
        let prog = reorder_obdd(&base, mode)?;
        let v = prog.represents(&f, Mode::Exact, &InputSelection::Exhaustive)?;
        let label = format!("{mode:?}").to_lowercase();
        b.verdict_row(&format!("reorder-verify/{label}"), f.name(), prog.n(), prog.width(), &v);
        b.check(
            &format!("{label}-exact"),
            v.pass,
            format!("{}/{} in-domain inputs agree", v.agree, v.checked),
        );
        let expected = ReorderLayout::new(q, mode).width(base.width());
        b.check(
            &format!("{label}-width"),
            prog.width() == expected,
            format!("width {} (2^l * {} = {expected})", prog.width(), base.width()),
        );
    }
    Ok(())
}

/// Programs addressable by name for export and commutativity checks.
pub enum Built {
    Leveled(LeveledProgram),
    KLayer(KLayerProgram),
    Quantum(QuantumProgram),
}

impl Built {
    pub fn to_json(&self) -> Result<String> {
        Ok(match self {
            Built::Leveled(p) => serde_json::to_string(p)?,
            Built::KLayer(p) => serde_json::to_string(p)?,
            Built::Quantum(p) => serde_json::to_string(p)?,
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Built::Leveled(p) => p.n(),
            Built::KLayer(p) => p.n(),
            Built::Quantum(p) => p.n(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Built::Leveled(p) => p.width(),
            Built::KLayer(p) => p.width(),
            Built::Quantum(p) => p.dim(),
        }
    }
}

/// Loads any exported program; validation runs during parsing.
pub fn load_program(text: &str) -> Result<Built> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("dim").is_some() {
        Ok(Built::Quantum(serde_json::from_value(value)?))
    } else if value.get("layers").is_some() {
        Ok(Built::KLayer(serde_json::from_value(value)?))
    } else {
        Ok(Built::Leveled(serde_json::from_value(value)?))
    }
}

/// `name:key=value,...` with names eq-qobdd, mod-qobdd, req-qobdd, seq-qobdd
/// (keys eps, seed), swq-mod, reorder-mod (key mode), pj and rpj.
pub fn parse_builder(desc: &str) -> Result<Built> {
    let (name, rest) = desc.split_once(':').unwrap_or((desc, ""));
    let mut params = Params::parse(name, rest)?;
    let built = match name {
        "eq-qobdd" | "req-qobdd" | "seq-qobdd" | "mod-qobdd" => {
            let eps = params.get_or("eps", 0.25)?;
            let seed = params.get_or("seed", 0u64)?;
            Built::Quantum(match name {
                "eq-qobdd" => build_eq_qobdd(params.get("q")?, eps, seed)?,
                "req-qobdd" => build_req_qobdd(params.get("q")?, eps, seed)?,
                "seq-qobdd" => build_seq_qobdd(params.get("q")?, eps, seed)?,
                _ => build_mod_qobdd(params.get("p")?, params.get("n")?, eps, seed)?,
            })
        }
        "swq-mod" => Built::Leveled(compile_swq(&SwqForm::mod_count(params.get("p")?, params.get("n")?)?)?),
        "reorder-mod" => {
            let base = compile_swq(&SwqForm::mod_count(params.get("p")?, params.get("n")?)?)?;
            let mode = match params.get_or("mode", "plain".to_string())?.as_str() {
                "plain" => AddressMode::Plain,
                "xor" => AddressMode::Xor,
                other => return Err(Error::Parse(format!("unknown reorder mode {other}"))),
            };
            Built::Leveled(reorder_obdd(&base, mode)?)
        }
        "pj" => Built::KLayer(build_pj_2kobdd(params.get("k")?, params.get("m")?)?),
        "rpj" => Built::KLayer(build_rpj_2kobdd(params.get("k")?, params.get("m")?)?),
        other => {
            return Err(Error::Unknown {
                kind: "builder",
                name: other.into(),
            })
        }
    };
    params.finish()?;
    Ok(built)
}

fn commutativity_check(b: &mut Builder) -> Result<()> {
    let desc = b
        .config
        .builder
        .clone()
        .ok_or_else(|| Error::InvalidParameter("--builder is required".into()))?;
    let built = parse_builder(&desc)?;
    let n = built.n();
    let count = b.config.orders.unwrap_or(50);
    let orders = Order::sample(n, count, b.config.seed());
    let inputs = InputSelection::Exhaustive;
    let report = match &built {
        Built::Leveled(p) => p.is_commutative(&orders, &inputs)?,
        Built::KLayer(p) => p.is_commutative(&orders, &inputs)?,
        Built::Quantum(p) => p.is_commutative_q(&orders, &inputs)?,
    };
    let runtime_ms = b.elapsed_ms();
    let agree = if report.commutative {
        report.orders_checked
    } else {
        report.orders_checked - 1
    };
    b.rows.push(ReportRow {
        experiment: "commutativity-check".into(),
        function: desc,
        n,
        width_or_dim: built.size(),
        min_accept: None,
        max_reject: None,
        agree,
        total: report.orders_checked,
        seed: b.config.seed(),
        runtime_ms,
    });
    let detail = match &report.counterexample {
        Some((order, x)) => format!(
            "differs under order {order} on input {:?}",
            x.iter().map(|&v| v as u8).collect::<Vec<_>>()
        ),
        None => format!("{} orders agree", report.orders_checked),
    };
    b.check("commutative", report.commutative, detail);
    Ok(())
}

fn good_set(b: &mut Builder) -> Result<()> {
    let m = b
        .config
        .m
        .ok_or_else(|| Error::InvalidParameter("--m is required".into()))?;
    let (eps, seed) = (b.config.epsilon(), b.config.seed());
    let runtime = |b: &Builder| b.elapsed_ms();
    match find_good_set(m, eps, seed) {
        Ok(params) => {
            let g = is_good(&params.k, m, eps);
            let runtime_ms = runtime(b);
            b.rows.push(ReportRow {
                experiment: "good-set".into(),
                function: format!("m={m}"),
                n: params.t,
                width_or_dim: params.dim(),
                min_accept: None,
                max_reject: Some(g.worst_value),
                agree: 1,
                total: 1,
                seed,
                runtime_ms,
            });
            b.check(
                "good",
                g.good,
                format!(
                    "t = {}, worst value {:.6} at g = {:?}",
                    params.t, g.worst_value, g.worst_g
                ),
            );
            b.extra = Some(serde_json::to_value(&params)?);
        }
        Err(e @ Error::GoodSetSearch { .. }) => {
            let Error::GoodSetSearch {
                best_value, attempts, ..
            } = &e
            else {
                unreachable!()
            };
            let runtime_ms = runtime(b);
            b.rows.push(ReportRow {
                experiment: "good-set".into(),
                function: format!("m={m}"),
                n: block_count(m, eps),
                width_or_dim: 2 * block_count(m, eps),
                min_accept: None,
                max_reject: Some(*best_value),
                agree: 0,
                total: *attempts,
                seed,
                runtime_ms,
            });
            b.check("good", false, e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn parse_order_arg(s: &str) -> Result<Order> {
    let perm = s
        .split([' ', ','])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad order entry {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Order::from_one_based(&perm)
}

fn width_rows(b: &mut Builder, experiment: &str, desc: &str, profiles: &[crate::width::WidthProfile]) -> Result<()> {
    let runtime_ms = b.elapsed_ms();
    for p in profiles {
        b.rows.push(ReportRow {
            experiment: experiment.into(),
            function: format!("{desc} order={}", p.order),
            n: p.order.len(),
            width_or_dim: p.width,
            min_accept: None,
            max_reject: None,
            agree: 0,
            total: 0,
            seed: b.config.seed(),
            runtime_ms,
        });
    }
    if let Some(path) = &b.config.profiles {
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, profiles)?;
        write_atomic(path, &buf)?;
    }
    Ok(())
}

fn width_table(b: &mut Builder) -> Result<()> {
    let desc = b.config.function_desc()?.to_string();
    let f = parse_function(&desc)?;
    let mode = b.config.mode.clone().unwrap_or_else(|| "all-orders".into());
    let all = match mode.as_str() {
        "all-orders" => all_order_profiles(&f)?,
        "sampled" => {
            let n = f.arity();
            let orders: Vec<Order> = std::iter::once(Order::identity(n))
                .chain(Order::sample(n, b.config.samples.unwrap_or(200), b.config.seed()))
                .collect();
            profiles(&f, &orders)?
        }
        "fixed" => {
            let order = match &b.config.order {
                Some(s) => parse_order_arg(s)?,
                None => Order::identity(f.arity()),
            };
            vec![min_width_fixed_order(&f, &order)?]
        }
        other => {
            return Err(Error::Unknown {
                kind: "width-table mode",
                name: other.into(),
            })
        }
    };
    width_rows(b, "width-table", &desc, &all)?;
    let min = all.iter().map(|p| p.width).min().unwrap_or(0);
    b.check(
        "min-width",
        true,
        format!("minimum width {min} over {} orders", all.len()),
    );
    Ok(())
}

fn width_search(b: &mut Builder) -> Result<()> {
    let desc = b.config.function_desc()?.to_string();
    let f = parse_function(&desc)?;
    let sampled = min_width_sampled_orders(&f, b.config.samples.unwrap_or(200), b.config.seed())?;
    width_rows(b, "width-search", &desc, std::slice::from_ref(&sampled.best))?;
    b.check(
        "min-width",
        true,
        format!(
            "sampled minimum {} at {} over {} orders",
            sampled.best.width, sampled.best.order, sampled.orders_checked
        ),
    );
    b.extra = Some(serde_json::to_value(&sampled)?);
    Ok(())
}

fn export(b: &mut Builder) -> Result<()> {
    let desc = b
        .config
        .builder
        .clone()
        .ok_or_else(|| Error::InvalidParameter("--builder is required".into()))?;
    let out = b
        .config
        .out
        .clone()
        .ok_or_else(|| Error::InvalidParameter("export needs --out".into()))?;
    let built = parse_builder(&desc)?;
    write_atomic(&out, built.to_json()?.as_bytes())?;
    let runtime_ms = b.elapsed_ms();
    b.rows.push(ReportRow {
        experiment: "export".into(),
        function: desc,
        n: built.n(),
        width_or_dim: built.size(),
        min_accept: None,
        max_reject: None,
        agree: 0,
        total: 0,
        seed: b.config.seed(),
        runtime_ms,
    });
    b.check("written", true, out.display().to_string());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(cmd: &str) -> ExperimentConfig {
        ExperimentConfig {
            cmd: Some(cmd.into()),
            ..Default::default()
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn eq_demo_passes() {
        let mut c = cfg("eq-demo");
        c.q = Some(3);
        c.seed = Some(7);
        let r = run(&c).unwrap();
        assert!(r.pass, "{}", r.summary());
        assert!((r.rows[0].min_accept.unwrap() - 1.0).abs() < 1e-9);
        assert!(r.rows[0].max_reject.unwrap() <= 0.25 + 1e-9);
    }

    #[test]
    fn good_set_m2_fails_with_reason() {
        let mut c = cfg("good-set");
        c.m = Some(2);
        c.epsilon = Some(0.5);
        let r = run(&c).unwrap();
        assert_eq!(r.exit_code(), 1);
        assert!(r.checks[0].detail.contains("no good set"));
    }

    #[test]
    fn width_table_all_orders() {
        let mut c = cfg("width-table");
        c.function = Some("eq:q=2".into());
        let r = run(&c).unwrap();
        assert_eq!(r.rows.len(), 24);
        assert_eq!(r.rows.iter().map(|r| r.width_or_dim).min(), Some(3));
        let csv = r.render(Format::Csv).unwrap();
        assert_eq!(csv.lines().count(), 25);
        assert!(csv.starts_with("experiment,function,n,width_or_dim,min_accept,max_reject,agree,total,seed,runtime_ms"));
    }

    #[test]
    fn unknown_command_and_builder() {
        assert!(run(&cfg("nope")).is_err());
        assert!(parse_builder("nope:q=1").is_err());
        assert!(parse_builder("eq-qobdd:q=1,bogus=2").is_err());
    }

    #[test]
    fn config_overlay_prefers_flags() {
        let file = ExperimentConfig {
            q: Some(2),
            seed: Some(5),
            ..Default::default()
        };
        let flags = ExperimentConfig {
            q: Some(4),
            ..Default::default()
        };
        let merged = flags.overlay(file);
        assert_eq!((merged.q, merged.seed), (Some(4), Some(5)));
    }
}
