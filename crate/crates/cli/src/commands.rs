use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::Path;
use std::time::Instant;

use anyhow::anyhow;
use log::{info, warn};
use mvpir::decode::{
    decoding_search, find_fixture, lagrange_decoding, load_fixture, BUILTIN_FIXTURES,
};
use mvpir::mvf::{grolmusz_shape, MAX_GROLMUSZ_H};
use mvpir::pir::{privacy_audit_sampled, CostModel, ServerTraffic};
use mvpir::wire::serve as serve_forever;
use mvpir::{
    canonical_set, comm_cost, primitive_root_of_unity, privacy_audit, remote_query, rng_from_seed,
    run_protocol, write_bundle, AuditOutcome, Bundle, Database, DecoderSource, DecodingPoly, Error,
    Field, MvFamily, MvfSource, PirParams, RootOfUnity, ServerState, Settings, Transcript,
};

use crate::{
    AuditArgs, BenchArgs, DecoderKind, MvfKind, QueryArgs, SearchArgs, ServeArgs, SetupArgs,
    ValidateArgs,
};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

const DEFAULT_AUDIT_BUDGET: u64 = 1_000_000;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }

    fn failed(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_FAILURE,
            error: error.into(),
        }
    }

    fn context(self, context: impl Display + Send + Sync + 'static) -> Self {
        Failure {
            code: self.code,
            error: self.error.context(context),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Protocol(_) | Error::Server { .. } => Failure::failed(e),
            _ => Failure::usage(e),
        }
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

fn load_bundle(path: &Path) -> CmdResult<Bundle> {
    Bundle::load(path).map_err(|e| Failure::usage(e).context(format!("bundle {}", path.display())))
}

fn read_database(field: &Field, path: &Path) -> CmdResult<Database> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(anyhow!("cannot read {}: {e}", path.display())))?;
    Ok(Database::from_text(field, &text)?)
}

fn bundle_database(bundle: &Bundle, override_path: Option<&Path>) -> CmdResult<Database> {
    match override_path {
        Some(path) => read_database(bundle.params.field(), path),
        None => bundle
            .db
            .clone()
            .ok_or_else(|| Failure::usage(anyhow!("the bundle has no database; pass --db"))),
    }
}

/// Converts a 1-based position to an index below `len`.
fn one_based(value: usize, len: usize, flag: &str) -> CmdResult<usize> {
    if value == 0 || value > len {
        return Err(Failure::usage(anyhow!(
            "--{flag} {value} is outside 1..={len}"
        )));
    }
    Ok(value - 1)
}

fn parse_field(text: &str) -> CmdResult<Field> {
    if text.contains(':') {
        return Ok(Field::from_descriptor(text)?);
    }
    let (p, d) = text.split_once('^').ok_or_else(|| {
        Failure::usage(anyhow!("field {text:?} is neither p^d nor GF(p^d):modulus"))
    })?;
    let p = p
        .trim()
        .parse()
        .map_err(|_| Failure::usage(anyhow!("bad characteristic in {text:?}")))?;
    let d = d
        .trim()
        .parse()
        .map_err(|_| Failure::usage(anyhow!("bad degree in {text:?}")))?;
    Ok(Field::with_degree(p, d)?)
}

fn join(values: &[u64]) -> String {
    values
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Plain table with fixed headers: aligned columns, or comma separated.
struct Table {
    headers: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&'static str]) -> Self {
        Table {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self, csv: bool) -> String {
        let mut out = String::new();
        if csv {
            out.push_str(&self.headers.join(","));
            out.push('\n');
            for row in &self.rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            return out;
        }
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].len())
                    .chain([self.headers[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: Vec<&str>| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(cell, &w)| format!("{cell:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        out.push_str(&line(self.headers.clone()));
        for row in &self.rows {
            out.push_str(&line(row.iter().map(String::as_str).collect()));
        }
        out
    }
}

fn print_cost(cost: &CostModel) {
    println!("up_elements={}", cost.up_elements);
    println!("down_elements={}", cost.down_elements);
    println!("up_bytes={}", cost.up_bytes);
    println!("down_bytes={}", cost.down_bytes);
    println!("up_wire_bytes={}", cost.up_wire_bytes());
    println!("down_wire_bytes={}", cost.down_wire_bytes());
}

fn resolve_decoder(a: &SetupArgs, roots: &RootOfUnity, target: &[u64]) -> CmdResult<DecodingPoly> {
    let m = roots.order();
    let search = || decoding_search(roots, target, a.tmax, a.search_budget);
    match a.decoder {
        DecoderKind::Lagrange => Ok(lagrange_decoding(roots, target)?),
        DecoderKind::Search => search()?.ok_or_else(|| {
            Failure::usage(anyhow!(
                "no decoding polynomial with at most {} terms for m={m}",
                a.tmax
            ))
        }),
        DecoderKind::Auto => {
            if let Some(path) = &a.fixture {
                if let Some(poly) = load_fixture(path, roots, target)? {
                    info!("decoder for m={m} from {}", path.display());
                    return Ok(poly);
                }
            }
            if let Some(poly) = find_fixture(BUILTIN_FIXTURES, roots, target)? {
                info!("decoder for m={m} from the built-in fixtures");
                return Ok(poly);
            }
            match search() {
                Ok(Some(poly)) => return Ok(poly),
                Ok(None) => warn!("no decoder with at most {} terms for m={m}", a.tmax),
                Err(Error::BudgetExceeded { budget }) => {
                    warn!("decoder search for m={m} ran out of its budget of {budget}")
                }
                Err(e) => return Err(e.into()),
            }
            warn!("falling back to the Lagrange decoder");
            Ok(lagrange_decoding(roots, target)?)
        }
    }
}

/// Symmetric family with the smallest dimension that fits `k` and holds `n`
/// records.
fn smallest_symmetric(big_m: u64, k: usize, n: usize) -> CmdResult<MvfSource> {
    let mut best: Option<(usize, usize, usize)> = None;
    for h in 1..=MAX_GROLMUSZ_H {
        for weight in 1..=h {
            let Ok(shape) = grolmusz_shape(big_m, h, weight) else {
                continue;
            };
            if shape.dim <= k && shape.size >= n && best.is_none_or(|(dim, _, _)| shape.dim < dim) {
                best = Some((shape.dim, h, weight));
            }
        }
    }
    let (_, h, weight) = best.ok_or_else(|| {
        Failure::usage(anyhow!(
            "no symmetric family over Z_{big_m} with dimension <= {k} and at least {n} vectors"
        ))
    })?;
    info!("symmetric family with h={h}, weight={weight}");
    Ok(MvfSource::Grolmusz { h, weight })
}

fn resolve_mvf(a: &SetupArgs, big_m: u64) -> CmdResult<MvfSource> {
    let brute = MvfSource::BruteForce {
        dim: a.k,
        size: a.n,
        budget: a.search_budget,
    };
    match (a.mvf, a.h) {
        (MvfKind::Brute, _) => Ok(brute),
        (MvfKind::Grolmusz | MvfKind::Auto, Some(h)) => Ok(MvfSource::Grolmusz {
            h,
            weight: a.weight.unwrap_or((h / 2).max(1)),
        }),
        (MvfKind::Grolmusz, None) => smallest_symmetric(big_m, a.k, a.n),
        (MvfKind::Auto, None) => {
            let space = u32::try_from(a.k).ok().and_then(|k| big_m.checked_pow(k));
            if space.is_some_and(|s| s <= a.search_budget) {
                Ok(brute)
            } else {
                smallest_symmetric(big_m, a.k, a.n)
            }
        }
    }
}

fn setup_database(a: &SetupArgs, params: &PirParams) -> CmdResult<Database> {
    let field = params.field();
    let db = match &a.bits {
        Some(bits) => {
            let bits = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(Failure::usage(anyhow!(
                        "--bits takes 0 and 1, got {other:?}"
                    ))),
                })
                .collect::<CmdResult<Vec<bool>>>()?;
            Database::from_bits(field, &bits)
        }
        None => Database::random(field, a.n, &mut rng_from_seed(a.seed)),
    };
    if db.len() > params.n() {
        return Err(Failure::usage(anyhow!(
            "{} records requested, the family holds {}",
            db.len(),
            params.n()
        )));
    }
    Ok(db)
}

pub fn setup(a: &SetupArgs) -> CmdResult {
    let field = match &a.field {
        Some(text) => parse_field(text)?,
        None => Field::containing_roots_of_unity(a.p, a.m)?,
    };
    if field.characteristic() != a.p {
        return Err(Failure::usage(anyhow!(
            "{} does not have characteristic {}",
            field.descriptor(),
            a.p
        )));
    }
    let roots = primitive_root_of_unity(&field, a.m)?;
    let small = canonical_set(a.m)?;
    let decoder = resolve_decoder(a, &roots, small.elements())?;
    let mvf = resolve_mvf(a, a.m * a.p)?;
    let params = PirParams::build(&field, a.m, a.e, mvf, DecoderSource::Poly(decoder))?;
    let db = setup_database(a, &params)?;
    let settings = Settings {
        addr: None,
        servers: a.servers.clone(),
        seed: a.seed,
        budget: a.budget,
    };
    let path = write_bundle(&a.out, &params, Some(&db), &settings)?;

    println!("bundle={}", path.display());
    println!("field={}", field.descriptor());
    println!("m={}", params.m());
    println!("M={}", params.big_m());
    println!("e={}", params.multiplicity());
    println!("t={}", params.t());
    println!("k={}", params.k());
    println!("n={}", params.n());
    println!("records={}", db.len());
    println!("S_m={}", join(small.elements()));
    println!("S_M={}", join(params.big_target()));
    print_cost(&comm_cost(&params));
    Ok(())
}

pub fn serve(a: &ServeArgs) -> CmdResult {
    let bundle = load_bundle(&a.bundle)?;
    let params = &bundle.params;
    let db = bundle_database(&bundle, a.db.as_deref())?;
    let index = a
        .index
        .map(|i| one_based(i, params.t(), "index"))
        .transpose()?;
    let addr = a
        .addr
        .clone()
        .or_else(|| bundle.settings.addr.clone())
        .or_else(|| index.and_then(|i| bundle.settings.servers.get(i).cloned()))
        .ok_or_else(|| Failure::usage(anyhow!("no listen address; pass --addr")))?;
    let state = ServerState::new(params, &db, index)?;
    let listener = TcpListener::bind(&addr)
        .map_err(|e| Failure::usage(anyhow!("cannot listen on {addr}: {e}")))?;
    let local = listener
        .local_addr()
        .map_err(|e| Failure::usage(anyhow!("cannot listen on {addr}: {e}")))?;
    println!("listening={local}");
    let _ = std::io::stdout().flush();
    serve_forever(state, listener).map_err(Failure::failed)
}

fn transcript_table(transcript: &Transcript) -> Table {
    let mut table = Table::new(&[
        "server",
        "up_elements",
        "down_elements",
        "up_bytes",
        "down_bytes",
        "up_wire_bytes",
        "down_wire_bytes",
    ]);
    let row = |name: String, s: &ServerTraffic| {
        vec![
            name,
            s.up_elements.to_string(),
            s.down_elements.to_string(),
            s.up_bytes.to_string(),
            s.down_bytes.to_string(),
            s.up_wire_bytes.to_string(),
            s.down_wire_bytes.to_string(),
        ]
    };
    for (i, s) in transcript.servers.iter().enumerate() {
        table.push(row((i + 1).to_string(), s));
    }
    table.push(row("total".into(), &transcript.total()));
    table
}

pub fn query(a: &QueryArgs) -> CmdResult {
    let bundle = load_bundle(&a.bundle)?;
    let params = &bundle.params;
    let mut rng = rng_from_seed(a.seed.or(bundle.settings.seed));
    let (value, transcript) = if a.local {
        let db = bundle_database(&bundle, a.db.as_deref())?;
        let index = one_based(a.tau, db.len(), "tau")?;
        run_protocol(params, &db, index, &mut rng)?
    } else {
        let index = one_based(a.tau, params.n(), "tau")?;
        let servers = if a.servers.is_empty() {
            &bundle.settings.servers
        } else {
            &a.servers
        };
        if servers.len() != params.t() {
            return Err(Failure::usage(anyhow!(
                "{} server addresses given, the scheme uses {}",
                servers.len(),
                params.t()
            )));
        }
        remote_query(params, servers, index, &mut rng)?
    };
    println!("value={}", params.field().to_hex(value));
    print!("{}", transcript_table(&transcript).render(a.csv));
    Ok(())
}

pub fn audit(a: &AuditArgs) -> CmdResult {
    let bundle = load_bundle(&a.bundle)?;
    let params = &bundle.params;
    let first = one_based(a.tau1, params.n(), "tau1")?;
    let second = one_based(a.tau2, params.n(), "tau2")?;

    if let Some(samples) = a.samples {
        let mut rng = rng_from_seed(a.seed.or(bundle.settings.seed));
        let sampled = privacy_audit_sampled(params, first, second, samples, &mut rng)?;
        println!("sampled samples={samples} exact=false");
        for (i, d) in sampled.distances.iter().enumerate() {
            println!("server={} distance={d:.6}", i + 1);
        }
        println!("max_distance={:.6}", sampled.max_distance());
        return Ok(());
    }

    let budget = a
        .budget
        .or(bundle.settings.budget)
        .unwrap_or(DEFAULT_AUDIT_BUDGET);
    match privacy_audit(params, first, second, budget) {
        Ok(AuditOutcome::Identical { uniform, betas }) => {
            println!("identical uniform={uniform} betas={betas}");
            Ok(())
        }
        Ok(AuditOutcome::Distinguishing(report)) => {
            let field = params.field();
            let point: Vec<String> = report.point.iter().map(|&x| field.to_hex(x)).collect();
            println!(
                "distinguishing server={} point={} count1={} count2={}",
                report.server + 1,
                point.join(","),
                report.count_first,
                report.count_second
            );
            Err(Failure::failed(anyhow!("query distributions differ")))
        }
        Err(Error::BudgetExceeded { budget }) => Err(Failure::usage(anyhow!(
            "the exact audit enumerates m^k = {}^{} choices, over the budget of {budget}; \
             raise --budget or pass --samples N for a sampled estimate",
            params.m(),
            params.k()
        ))),
        Err(e) => Err(e.into()),
    }
}

fn bench_metrics(s: &ServerTraffic) -> [u64; 6] {
    [
        s.up_elements,
        s.down_elements,
        s.up_bytes,
        s.down_bytes,
        s.up_wire_bytes,
        s.down_wire_bytes,
    ]
}

fn model_metrics(c: &CostModel) -> [u64; 6] {
    [
        c.up_elements,
        c.down_elements,
        c.up_bytes,
        c.down_bytes,
        c.up_wire_bytes(),
        c.down_wire_bytes(),
    ]
}

pub fn bench(a: &BenchArgs) -> CmdResult {
    if a.trials == 0 {
        return Err(Failure::usage(anyhow!("--trials must be positive")));
    }
    let bundle = load_bundle(&a.bundle)?;
    let params = &bundle.params;
    let mut rng = rng_from_seed(a.seed.or(bundle.settings.seed));
    let db = match &bundle.db {
        Some(db) => db.clone(),
        None => Database::random(params.field(), params.n(), &mut rng),
    };
    let model = comm_cost(params);
    let baseline = CostModel::new(params.t(), params.k(), 1, params.field().element_width());

    let started = Instant::now();
    let mut measured = Vec::with_capacity(a.trials);
    for trial in 0..a.trials {
        let (_, transcript) = run_protocol(params, &db, trial % db.len(), &mut rng)?;
        measured.push(bench_metrics(&transcript.total()));
    }
    let elapsed = started.elapsed();

    let names = [
        "up_elements",
        "down_elements",
        "up_bytes",
        "down_bytes",
        "up_wire_bytes",
        "down_wire_bytes",
    ];
    let formula = model_metrics(&model);
    let e1 = model_metrics(&baseline);
    let mut table = Table::new(&[
        "metric",
        "formula",
        "measured_min",
        "measured_max",
        "e1_formula",
        "match",
    ]);
    let mut all_match = true;
    for (c, name) in names.iter().enumerate() {
        let min = measured.iter().map(|m| m[c]).min().unwrap_or(0);
        let max = measured.iter().map(|m| m[c]).max().unwrap_or(0);
        let ok = min == formula[c] && max == formula[c];
        all_match &= ok;
        table.push(vec![
            name.to_string(),
            formula[c].to_string(),
            min.to_string(),
            max.to_string(),
            e1[c].to_string(),
            ok.to_string(),
        ]);
    }
    if !a.csv {
        println!(
            "t={} k={} e={} trials={} mean_ms={:.3}",
            params.t(),
            params.k(),
            params.multiplicity(),
            a.trials,
            elapsed.as_secs_f64() * 1000.0 / a.trials as f64
        );
    }
    print!("{}", table.render(a.csv));
    if all_match {
        Ok(())
    } else {
        Err(Failure::failed(anyhow!(
            "measured traffic differs from the formula"
        )))
    }
}

pub fn search_decoder(a: &SearchArgs) -> CmdResult {
    let field = parse_field(&a.field)?;
    let roots = primitive_root_of_unity(&field, a.m)?;
    let target = canonical_set(a.m)?;
    let started = Instant::now();
    let found = decoding_search(&roots, target.elements(), a.tmax, a.budget)?;
    let elapsed = started.elapsed();
    let Some(poly) = found else {
        println!("none tmax={}", a.tmax);
        return Err(Failure::failed(anyhow!(
            "no decoding polynomial with at most {} terms for m={}",
            a.tmax,
            a.m
        )));
    };
    let line = poly.to_fixture_line(target.elements());
    println!("t={}", poly.sparsity());
    println!("elapsed_ms={}", elapsed.as_millis());
    println!("{line}");
    if let Some(path) = &a.out {
        if load_fixture(path, &roots, target.elements())?.is_none() {
            let mut file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Failure::usage(anyhow!("cannot write {}: {e}", path.display())))?;
            writeln!(file, "{line}")
                .map_err(|e| Failure::usage(anyhow!("cannot write {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

pub fn validate_mvf(a: &ValidateArgs) -> CmdResult {
    let text = fs::read_to_string(&a.file)
        .map_err(|e| Failure::usage(anyhow!("cannot read {}: {e}", a.file.display())))?;
    let family = MvFamily::from_text(&text)?;
    match family.validate() {
        Ok(()) => {
            println!(
                "valid M={} k={} n={} S={}",
                family.modulus(),
                family.dim(),
                family.len(),
                join(family.target())
            );
            Ok(())
        }
        Err(violation) => {
            println!("violation {violation}");
            Err(Failure::failed(anyhow!(
                "{} is not a matching vector family",
                a.file.display()
            )))
        }
    }
}
