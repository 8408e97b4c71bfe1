use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use distort_core::acceptance::Suite;
use distort_core::circle::{sample, Diffeo};
use distort_core::distortion::{assemble_word, bfs_distance, choose_m, distortion_demo, slot_pairs, verify_word};
use distort_core::flows::{FlowFamily, VectorField};
use distort_core::generators::{build_f45, build_gadgets, GeneratorSet};
use distort_core::io::{map_samples, write_csv, write_json, Provenance};
use distort_core::perfect::decompose;
use distort_core::rotation::{linearize, rotation_number, FamilySolver};
use distort_core::word::Word;
use distort_core::Config;

#[derive(Parser)]
#[command(name = "distort", version, about = "Explicit distortion words for circle diffeomorphisms")]
struct Cli {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Fixes the family parameter instead of scanning for it.
    #[arg(long, global = true)]
    t0: Option<f64>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    grid_size: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the generators and gadget slots `1..=n_max`.
    Gen,
    /// Rotation number of a serialized map.
    Rotnum { map: PathBuf },
    /// Linearizing conjugacy of a serialized map.
    Linearize { map: PathBuf },
    /// Four-commutator factorization of a serialized map near the identity.
    Decompose { map: PathBuf },
    /// Word in the generators for a serialized map near the identity.
    Assemble { map: PathBuf },
    /// Words for the convergent powers of a rotation.
    Demo {
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        /// Also report lengths with the rotation itself as a generator.
        #[arg(long)]
        append_f: bool,
    },
    /// Runs the acceptance checks (all, or the listed ids).
    VerifySuite { ids: Vec<u8> },
    /// Word-metric distance of a serialized map by breadth-first search.
    Bfs {
        map: PathBuf,
        #[arg(long)]
        radius: Option<usize>,
    },
    /// Prints the effective configuration as TOML.
    Config,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path).with_context(|| format!("reading config {}", path.display()))?,
        None => Config::default(),
    };
    if let Some(v) = &cli.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = cli.alpha {
        cfg.generators.alpha = v;
    }
    if let Some(v) = cli.lambda {
        cfg.generators.lambda = v;
    }
    if let Some(v) = cli.t0 {
        cfg.rotation.t0 = Some(v);
    }
    if let Some(v) = cli.n_max {
        cfg.generators.n_max = v;
    }
    if let Some(v) = cli.grid_size {
        cfg.metric.grid_size = v;
    }
    if let Command::Demo { beta, count, append_f } = &cli.command {
        cfg.demo.append_f |= *append_f;
        if let Some(v) = beta {
            cfg.demo.beta = *v;
        }
        if let Some(v) = count {
            cfg.demo.count = *v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_map(path: &Path) -> Result<Diffeo> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Diffeo::from_json(&text).with_context(|| format!("parsing map file {}", path.display()))
}

struct Run {
    cfg: Config,
    prov: Provenance,
}

impl Run {
    fn dir(&self) -> &Path {
        &self.cfg.output_dir
    }

    fn json<T: Serialize>(&self, name: &str, data: &T) -> Result<()> {
        let path = write_json(self.dir(), name, &self.prov, data)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        let path = write_csv(self.dir(), name, &self.prov, rows)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn family(&mut self) -> Result<FlowFamily> {
        let fam = self.cfg.family()?;
        self.prov.t0 = Some(fam.t0);
        println!("t0 = {}, rho0 = {}", fam.t0, fam.rho0);
        Ok(fam)
    }

    fn solver(&mut self) -> Result<FamilySolver> {
        let fam = self.family()?;
        let solver = FamilySolver::new(fam, self.cfg.solve_params());
        solver.base()?;
        Ok(solver)
    }

    fn generators(&self) -> Result<GeneratorSet> {
        Ok(GeneratorSet::new(self.cfg.generators.alpha, self.cfg.generators.lambda)?)
    }
}

#[derive(Serialize)]
struct FieldSample {
    x: f64,
    v: f64,
    w: f64,
}

#[derive(Serialize)]
struct GeneratorSummary {
    alpha: f64,
    lambda: f64,
    mu: f64,
    m: i64,
}

#[derive(Serialize)]
struct LinearizationSummary {
    rho: f64,
    residual: f64,
    iterations: usize,
    residual_history: Vec<f64>,
    cf_quality: u64,
    method: distort_core::rotation::Method,
}

#[derive(Serialize)]
struct AssemblySummary {
    slots: [usize; 4],
    m: i64,
    letters: usize,
    ledger_length: usize,
    slot_lengths: [usize; 4],
    slot_residual: f64,
    residual: f64,
    t: f64,
    decomposition_residual: f64,
}

/// Letters as `(generator, sign)` records.
#[derive(Serialize)]
struct WordRecord {
    q: Option<u64>,
    length: usize,
    compact: String,
    letters: Vec<distort_core::word::Letter>,
}

impl WordRecord {
    fn new(q: Option<u64>, w: &Word) -> Self {
        WordRecord { q, length: w.len(), compact: w.to_compact(), letters: w.letters.clone() }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = load_config(&cli)?;
    let mut r = Run { prov: Provenance::new(&cfg)?, cfg };
    match cli.command {
        Command::Config => {
            print!("{}", r.cfg.to_toml()?);
        }
        Command::Gen => {
            let gens = r.generators()?;
            let m = choose_m(gens.alpha, r.cfg.generators.search_cap)?;
            r.prov.m = Some(m);
            let gadgets = build_gadgets(r.cfg.generators.n_max, &gens, r.cfg.generators.search_cap)?;
            for g in &gadgets {
                println!("slot {}: a = {}, b = {}, a_hat = {}, b_hat = {}, k' = {}", g.n, g.a, g.b, g.a_hat, g.b_hat, g.letters_k_prime);
            }
            r.json("generators.json", &GeneratorSummary { alpha: gens.alpha, lambda: gens.lambda, mu: gens.mu, m })?;
            r.json("gadgets.json", &gadgets)?;
            let n = r.cfg.metric.grid_size;
            r.csv("f1.csv", &map_samples(&gens.f1, n)?)?;
            r.csv("f2.csv", &map_samples(&gens.f2, n)?)?;
            let (v, w) = (VectorField::v(), VectorField::w());
            let fields: Vec<FieldSample> = (0..n)
                .map(|i| {
                    let x = i as f64 / n as f64;
                    FieldSample { x, v: v.value(x), w: w.value(x) }
                })
                .collect();
            r.csv("fields.csv", &fields)?;
        }
        Command::Rotnum { map } => {
            let f = read_map(&map)?;
            let est = rotation_number(&f, r.cfg.rotation.iterates)?;
            println!("{} ± {:e}", est.value, est.error_bound);
            r.json("rotnum.json", &est)?;
        }
        Command::Linearize { map } => {
            let f = read_map(&map)?;
            let res = linearize(&f, &r.cfg.linearize_params())?;
            println!("rho = {}, residual = {:e} ({:?})", res.rho, res.residual, res.method);
            r.json(
                "linearization.json",
                &LinearizationSummary {
                    rho: res.rho,
                    residual: res.residual,
                    iterations: res.iterations,
                    residual_history: res.residual_history.clone(),
                    cf_quality: res.cf_quality,
                    method: res.method,
                },
            )?;
            r.csv("conjugacy.csv", &sample(&res.c, r.cfg.metric.grid_size)?)?;
        }
        Command::Decompose { map } => {
            let x = read_map(&map)?;
            let solver = r.solver()?;
            let d = decompose(&x, &solver, &r.cfg.decompose_params())?;
            println!("t = {:e}, theta = {}, residual = {:e}", d.t, d.solution.theta, d.residual);
            r.json("family.json", &solver.family)?;
            r.json("decomposition.json", &serde_json::json!({
                "t": d.t,
                "theta": d.solution.theta,
                "residual": d.residual,
                "supports": d.supports,
                "solution": d.solution,
            }))?;
        }
        Command::Assemble { map } => {
            let x = read_map(&map)?;
            let solver = r.solver()?;
            let d = decompose(&x, &solver, &r.cfg.decompose_params())?;
            let base = r.generators()?;
            let cap = r.cfg.generators.search_cap;
            let m = choose_m(base.alpha, cap)?;
            r.prov.m = Some(m);
            let gadgets = build_gadgets(4, &base, cap)?;
            let (f4, f5, encoding) = build_f45(&slot_pairs(&d, &base.f3, m), &gadgets, &base, &r.cfg.encode_params())?;
            let gens = base.with_encoders(f4, f5);
            let a = assemble_word(&gadgets, [1, 2, 3, 4], &gens, m, 512, 1e-6)?;
            let residual = verify_word(&a.word, &x, &gens, r.cfg.demo.verify_grid)?;
            println!("{} letters (ledger {}), residual {:e}", a.word.len(), a.ledger_length, residual);
            r.json("assemble.json", &AssemblySummary {
                slots: a.slots,
                m,
                letters: a.word.len(),
                ledger_length: a.ledger_length,
                slot_lengths: a.slot_lengths,
                slot_residual: a.slot_residual,
                residual,
                t: d.t,
                decomposition_residual: d.residual,
            })?;
            r.json("encoding.json", &encoding)?;
            r.json("word.json", &WordRecord::new(None, &a.word))?;
        }
        Command::Demo { .. } => {
            let solver = r.solver()?;
            let report = distortion_demo(&r.generators()?, &solver, &r.cfg.demo_params())?;
            r.prov.m = Some(report.m);
            for row in &report.rows {
                match (row.word_length, &row.failure) {
                    (Some(k), None) => println!("q = {}: k = {k}, k/q = {:.2}", row.q, k as f64 / row.q as f64),
                    (_, Some(f)) => println!("q = {}: failed ({f})", row.q),
                    _ => println!("q = {}: no word", row.q),
                }
            }
            r.csv("report.csv", &report.rows.iter().map(ReportRow::from).collect::<Vec<_>>())?;
            r.json("report.json", &report)?;
            let words: Vec<WordRecord> = report
                .rows
                .iter()
                .zip(&report.words)
                .filter_map(|(row, w)| w.as_ref().map(|w| WordRecord::new(Some(row.q), w)))
                .collect();
            r.json("word.json", &words)?;
            if report.successful().next().is_none() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::VerifySuite { ids } => {
            let ids = if ids.is_empty() { (1..=9).collect() } else { ids };
            let suite = Suite::new(r.cfg.clone());
            if ids.iter().any(|id| (5..=7).contains(id)) {
                let s = suite.prepare()?;
                let fam = suite.family()?;
                r.prov.t0 = Some(fam.t0);
                println!("setup: t0 = {}, rho0 = {} ({s:.1} s)", fam.t0, fam.rho0);
            }
            let mut results = Vec::new();
            for id in ids {
                let res = suite.criterion(id);
                println!("{}", res.line());
                results.push(res);
            }
            r.json("verify.json", &results)?;
            if results.iter().any(|c| !c.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bfs { map, radius } => {
            let target = read_map(&map)?;
            let mut p = r.cfg.bfs_params();
            if let Some(v) = radius {
                if v > 6 {
                    bail!("radius {v} exceeds 6");
                }
                p.max_radius = v;
            }
            let gens = r.generators()?;
            match bfs_distance(&gens.array(), &target, &p)? {
                Some((d, w)) => {
                    println!("distance {d}: {w}");
                    r.json("bfs.json", &serde_json::json!({ "distance": d, "word": WordRecord::new(None, &w) }))?;
                }
                None => {
                    println!("not found within radius {}", p.max_radius);
                    r.json("bfs.json", &serde_json::json!({ "distance": null, "radius": p.max_radius }))?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Flat CSV form of a demo row.
#[derive(Serialize)]
struct ReportRow {
    j: usize,
    q: u64,
    closeness: f64,
    word_length: Option<usize>,
    ratio: Option<f64>,
    length_with_f: Option<usize>,
    residual: Option<f64>,
    t: Option<f64>,
    decomposition_residual: Option<f64>,
    success: bool,
    failure: Option<String>,
}

impl From<&distort_core::distortion::DemoRow> for ReportRow {
    fn from(r: &distort_core::distortion::DemoRow) -> Self {
        ReportRow {
            j: r.j,
            q: r.q,
            closeness: r.closeness,
            word_length: r.word_length,
            ratio: r.ratio,
            length_with_f: r.length_with_f,
            residual: r.residual,
            t: r.t,
            decomposition_residual: r.decomposition_residual,
            success: r.success,
            failure: r.failure.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<distort_core::Error>() {
                Some(distort_core::Error::Parse(_) | distort_core::Error::Domain(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
