//! The t-server scheme: setup, query generation, answers, reconstruction,
//! privacy audit and communication accounting.
//!
//! Record indices are 0-based throughout the library.

use std::collections::HashMap;
use std::path::PathBuf;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::algebra::{compose_hasse, hasse_len, Curve, HasseVector, SparseMultiPoly};
use crate::decode::{
    decoding_search, interp_from_decoding, lagrange_decoding, lift_multiplicity, load_fixture,
    recover_constant, DecodingPoly, InterpSet,
};
use crate::error::{Error, Result};
use crate::field::{gcd, primitive_root_of_unity, Field, FieldElement, RootOfUnity};
use crate::mvf::{canonical_set, mvf_bruteforce, mvf_grolmusz_with_weight, CanonicalSet, MvFamily};
use crate::wire;

/// Where the matching vector family comes from.
#[derive(Clone, Debug)]
pub enum MvfSource {
    Family(MvFamily),
    /// Exhaustive search over `Z_M^dim` for `size` pairs.
    BruteForce {
        dim: usize,
        size: usize,
        budget: u64,
    },
    /// The symmetric-polynomial family indexed by `weight`-subsets of `[h]`.
    Grolmusz {
        h: usize,
        weight: usize,
    },
}

/// Where the decoding polynomial comes from.
#[derive(Clone, Debug)]
pub enum DecoderSource {
    Poly(DecodingPoly),
    Search {
        t_max: usize,
        budget: u64,
    },
    /// A fixture file; see [`crate::decode::load_fixture`].
    Fixture(PathBuf),
    /// The dense Lagrange polynomial, one server per element of S_m.
    Lagrange,
}

#[derive(Clone, Debug)]
pub struct PirParams {
    field: Field,
    roots: RootOfUnity,
    m: u64,
    multiplicity: usize,
    small_target: CanonicalSet,
    big_target: Vec<u64>,
    family: MvFamily,
    decoder: DecodingPoly,
    interp: InterpSet,
}

impl PirParams {
    /// Resolves both sources and assembles the parameters.
    pub fn build(
        field: &Field,
        m: u64,
        multiplicity: usize,
        mvf: MvfSource,
        decoder: DecoderSource,
    ) -> Result<Self> {
        let p = field.characteristic();
        check_coprime(m, p)?;
        let roots = primitive_root_of_unity(field, m)?;
        let small_target = canonical_set(m)?;
        let decoder = match decoder {
            DecoderSource::Poly(poly) => poly,
            DecoderSource::Search { t_max, budget } => {
                decoding_search(&roots, small_target.elements(), t_max, budget)?.ok_or_else(
                    || {
                        Error::InvalidArgument(format!(
                            "no decoding polynomial with at most {t_max} terms for m={m}"
                        ))
                    },
                )?
            }
            DecoderSource::Fixture(path) => load_fixture(&path, &roots, small_target.elements())?
                .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "{} has no decoding polynomial for m={m} over {}",
                    path.display(),
                    field.descriptor()
                ))
            })?,
            DecoderSource::Lagrange => lagrange_decoding(&roots, small_target.elements())?,
        };
        let big = m * p;
        let family = match mvf {
            MvfSource::Family(family) => family,
            MvfSource::BruteForce { dim, size, budget } => {
                let target = lifted_target(m, p, multiplicity)?;
                mvf_bruteforce(big, &target, dim, size, budget)?.ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "no matching vector family of size {size} in Z_{big}^{dim}"
                    ))
                })?
            }
            MvfSource::Grolmusz { h, weight } => mvf_grolmusz_with_weight(big, h, weight)?,
        };
        Self::assemble(roots, multiplicity, family, decoder)
    }

    fn assemble(
        roots: RootOfUnity,
        multiplicity: usize,
        family: MvFamily,
        decoder: DecodingPoly,
    ) -> Result<Self> {
        let field = roots.field().clone();
        let m = roots.order();
        let p = field.characteristic();
        let small_target = canonical_set(m)?;
        if decoder.m() != m || decoder.field() != &field {
            return Err(Error::InvalidArgument(format!(
                "decoding polynomial is for m={} over {}, expected m={m} over {}",
                decoder.m(),
                decoder.field().descriptor(),
                field.descriptor()
            )));
        }
        if let Err(v) = decoder.validate(&roots, small_target.elements()) {
            return Err(Error::InvalidArgument(format!(
                "not a decoding polynomial for the canonical set of {m}: {v}"
            )));
        }
        let big = m * p;
        let big_target = lifted_target(m, p, multiplicity)?;
        let interp = lift_multiplicity(
            &interp_from_decoding(&decoder, &roots, small_target.elements()),
            p,
            multiplicity,
            &big_target,
        )?;
        if family.modulus() != big {
            return Err(Error::InvalidArgument(format!(
                "matching vector family is over Z_{}, expected Z_{big}",
                family.modulus()
            )));
        }
        if let Some(&s) = family
            .target()
            .iter()
            .find(|&&s| big_target.binary_search(&s).is_err())
        {
            return Err(Error::InvalidArgument(format!(
                "family target element {s} is outside S_{big} = {big_target:?}"
            )));
        }
        if let Err(v) = family.validate() {
            return Err(Error::InvalidArgument(format!(
                "matching vector family is invalid: {v}"
            )));
        }
        debug!(
            "params: m={m}, M={big}, e={multiplicity}, t={}, k={}, n={}",
            interp.len(),
            family.dim(),
            family.len()
        );
        Ok(PirParams {
            field,
            roots,
            m,
            multiplicity,
            small_target,
            big_target,
            family,
            decoder,
            interp,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn roots(&self) -> &RootOfUnity {
        &self.roots
    }

    pub fn p(&self) -> u64 {
        self.field.characteristic()
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// M = mp.
    pub fn big_m(&self) -> u64 {
        self.m * self.p()
    }

    /// Multiplicity e.
    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn small_target(&self) -> &CanonicalSet {
        &self.small_target
    }

    /// S_M, the target set over Z_M.
    pub fn big_target(&self) -> &[u64] {
        &self.big_target
    }

    pub fn family(&self) -> &MvFamily {
        &self.family
    }

    pub fn decoder(&self) -> &DecodingPoly {
        &self.decoder
    }

    pub fn interp(&self) -> &InterpSet {
        &self.interp
    }

    /// Number of servers.
    pub fn t(&self) -> usize {
        self.interp.len()
    }

    /// Query dimension.
    pub fn k(&self) -> usize {
        self.family.dim()
    }

    /// Database capacity.
    pub fn n(&self) -> usize {
        self.family.len()
    }

    /// Elements per answer, `C(k + e - 1, e - 1)`.
    pub fn answer_len(&self) -> usize {
        hasse_len(self.k(), self.multiplicity)
    }
}

/// The idempotents s of Z_{mp} with `s mod p < e`. For `e >= 2` this is the
/// whole canonical set; for `e = 1` only the residues divisible by p remain.
pub fn lifted_target(m: u64, p: u64, multiplicity: usize) -> Result<Vec<u64>> {
    let big = m
        .checked_mul(p)
        .ok_or_else(|| Error::InvalidArgument(format!("m * p overflows for m={m}, p={p}")))?;
    Ok(canonical_set(big)?
        .elements()
        .iter()
        .copied()
        .filter(|&s| s % p < multiplicity as u64)
        .collect())
}

fn check_coprime(m: u64, p: u64) -> Result<()> {
    let g = gcd(m, p);
    if g != 1 {
        return Err(Error::NotCoprime { a: m, b: p, gcd: g });
    }
    Ok(())
}

/// Deterministic generator for a seed, OS entropy otherwise.
pub fn rng_from_seed(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_os_rng(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    field: Field,
    values: Vec<FieldElement>,
}

impl Database {
    pub fn new(field: &Field, values: Vec<FieldElement>) -> Result<Self> {
        if values.iter().any(|&a| !field.contains(a)) {
            return Err(Error::FieldMismatch);
        }
        Ok(Database {
            field: field.clone(),
            values,
        })
    }

    /// Embeds bits as 0 and 1.
    pub fn from_bits(field: &Field, bits: &[bool]) -> Self {
        let values = bits
            .iter()
            .map(|&b| if b { field.one() } else { field.zero() })
            .collect();
        Database {
            field: field.clone(),
            values,
        }
    }

    pub fn random<R: Rng + ?Sized>(field: &Field, n: usize, rng: &mut R) -> Self {
        let values = (0..n).map(|_| field.random(rng)).collect();
        Database {
            field: field.clone(),
            values,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<FieldElement> {
        self.values
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.values.len(),
            })
    }

    /// One hex element per line.
    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .map(|&a| format!("{}\n", self.field.to_hex(a)))
            .collect()
    }

    pub fn from_text(field: &Field, text: &str) -> Result<Self> {
        let values = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| field.from_hex(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Database {
            field: field.clone(),
            values,
        })
    }
}

/// The point sent to one server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub server: usize,
    pub point: Vec<FieldElement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Answer {
    pub server: usize,
    pub values: HasseVector,
}

/// Client-side secrets of one retrieval.
#[derive(Clone, Debug)]
pub struct QueryContext {
    pub index: usize,
    /// β as exponents of gamma.
    pub beta_exponents: Vec<u64>,
    pub curve: Curve,
}

/// Draws β uniformly from H_m^k and builds one query per server.
pub fn client_query<R: Rng + ?Sized>(
    params: &PirParams,
    index: usize,
    rng: &mut R,
) -> Result<(QueryContext, Vec<Query>)> {
    let beta: Vec<u64> = (0..params.k())
        .map(|_| rng.random_range(0..params.m))
        .collect();
    client_query_with_beta(params, index, &beta)
}

/// [`client_query`] for a fixed β, given as exponents of gamma.
pub fn client_query_with_beta(
    params: &PirParams,
    index: usize,
    beta_exponents: &[u64],
) -> Result<(QueryContext, Vec<Query>)> {
    if index >= params.n() {
        return Err(Error::IndexOutOfRange {
            index,
            len: params.n(),
        });
    }
    if beta_exponents.len() != params.k() {
        return Err(Error::ShapeMismatch(format!(
            "beta has {} coordinates, expected {}",
            beta_exponents.len(),
            params.k()
        )));
    }
    let beta = beta_exponents
        .iter()
        .map(|&x| params.roots.pow(x))
        .collect();
    let curve = Curve::new(&params.roots, beta, params.family.v(index).to_vec())?;
    let queries = params
        .interp
        .points()
        .iter()
        .enumerate()
        .map(|(server, &b)| Query {
            server,
            point: curve.eval(b),
        })
        .collect();
    let ctx = QueryContext {
        index,
        beta_exponents: beta_exponents.to_vec(),
        curve,
    };
    Ok((ctx, queries))
}

/// A server holding `F = sum_i a_i X^{u_i}`.
#[derive(Clone, Debug)]
pub struct PirServer {
    roots: RootOfUnity,
    multiplicity: usize,
    k: usize,
    poly: SparseMultiPoly,
}

impl PirServer {
    pub fn new(params: &PirParams, db: &Database) -> Result<Self> {
        if db.field() != params.field() {
            return Err(Error::FieldMismatch);
        }
        if db.len() > params.n() {
            return Err(Error::InvalidArgument(format!(
                "database has {} records, the family supports {}",
                db.len(),
                params.n()
            )));
        }
        let terms = db
            .values()
            .iter()
            .enumerate()
            .map(|(i, &a)| (params.family.u(i).to_vec(), a))
            .collect();
        let poly = SparseMultiPoly::new(params.field(), params.k(), params.big_m(), terms)?;
        Ok(PirServer {
            roots: params.roots.clone(),
            multiplicity: params.multiplicity,
            k: params.k(),
            poly,
        })
    }

    /// Hasse derivatives of F of weight below e at the queried point.
    pub fn answer(&self, query: &Query) -> Result<Answer> {
        if query.point.len() != self.k {
            return Err(Error::Protocol(format!(
                "query point has {} coordinates, expected {}",
                query.point.len(),
                self.k
            )));
        }
        if let Some(t) = query.point.iter().position(|&x| !self.roots.contains(x)) {
            return Err(Error::Protocol(format!(
                "query coordinate {t} is not an m-th root of unity"
            )));
        }
        Ok(Answer {
            server: query.server,
            values: self.poly.hasse_eval(&query.point, self.multiplicity)?,
        })
    }
}

pub fn server_answer(params: &PirParams, db: &Database, query: &Query) -> Result<Answer> {
    PirServer::new(params, db)?.answer(query)
}

/// `prod_t beta_t^{u(t)}`, 1 for the empty product.
pub fn beta_power(params: &PirParams, beta_exponents: &[u64], u: &[u64]) -> FieldElement {
    let m = params.m as u128;
    let log: u128 = beta_exponents
        .iter()
        .zip(u)
        .map(|(&b, &x)| b as u128 * x as u128 % m)
        .sum();
    params.roots.pow((log % m) as u64)
}

/// Recovers `a_index` from one answer per server, in server order.
pub fn client_reconstruct(
    params: &PirParams,
    ctx: &QueryContext,
    answers: &[Answer],
) -> Result<FieldElement> {
    let t = params.t();
    if answers.len() != t {
        return Err(Error::Protocol(format!(
            "expected {t} answers, got {}",
            answers.len()
        )));
    }
    let expected = params.answer_len();
    let mut local = Vec::with_capacity(t);
    for (i, (answer, &b)) in answers.iter().zip(params.interp.points()).enumerate() {
        if answer.server != i {
            return Err(Error::Protocol(format!(
                "answer in slot {i} comes from server {}",
                answer.server
            )));
        }
        if answer.values.arity != params.k()
            || answer.values.multiplicity != params.multiplicity
            || answer.values.values.len() != expected
        {
            return Err(Error::Protocol(format!(
                "answer from server {i} has {} values, expected {expected}",
                answer.values.values.len()
            )));
        }
        local.push(compose_hasse(
            &answer.values,
            &ctx.curve,
            b,
            params.multiplicity,
        )?);
    }
    let c0 = recover_constant(&params.interp, &local)?;
    let scale = beta_power(params, &ctx.beta_exponents, params.family.u(ctx.index));
    Ok(params.field.mul(c0, params.field.inv(scale)?))
}

/// Traffic with one server.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ServerTraffic {
    pub up_elements: u64,
    pub down_elements: u64,
    /// Encoded field elements only.
    pub up_bytes: u64,
    pub down_bytes: u64,
    /// Whole frames, headers included.
    pub up_wire_bytes: u64,
    pub down_wire_bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    pub servers: Vec<ServerTraffic>,
}

impl Transcript {
    pub fn total(&self) -> ServerTraffic {
        self.servers
            .iter()
            .fold(ServerTraffic::default(), |acc, s| ServerTraffic {
                up_elements: acc.up_elements + s.up_elements,
                down_elements: acc.down_elements + s.down_elements,
                up_bytes: acc.up_bytes + s.up_bytes,
                down_bytes: acc.down_bytes + s.down_bytes,
                up_wire_bytes: acc.up_wire_bytes + s.up_wire_bytes,
                down_wire_bytes: acc.down_wire_bytes + s.down_wire_bytes,
            })
    }

    /// Element counts per direction, summed over servers.
    pub fn element_counts(&self) -> (u64, u64) {
        let total = self.total();
        (total.up_elements, total.down_elements)
    }

    /// Records one exchange from its encoded frames.
    pub fn record(
        &mut self,
        field: &Field,
        query: &Query,
        answer: &Answer,
        up: usize,
        down: usize,
    ) {
        let width = field.element_width() as u64;
        let up_elements = query.point.len() as u64;
        let down_elements = answer.values.values.len() as u64;
        self.servers.push(ServerTraffic {
            up_elements,
            down_elements,
            up_bytes: up_elements * width,
            down_bytes: down_elements * width,
            up_wire_bytes: up as u64,
            down_wire_bytes: down as u64,
        });
    }
}

/// Closed-form communication of one retrieval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub t: usize,
    pub k: usize,
    pub multiplicity: usize,
    pub element_width: usize,
    pub up_elements: u64,
    pub down_elements: u64,
    pub up_bytes: u64,
    pub down_bytes: u64,
    /// Frame and payload headers added per message.
    pub overhead_per_message: u64,
}

impl CostModel {
    pub fn new(t: usize, k: usize, multiplicity: usize, element_width: usize) -> Self {
        let up_elements = (t * k) as u64;
        let down_elements = (t * hasse_len(k, multiplicity)) as u64;
        let width = element_width as u64;
        CostModel {
            t,
            k,
            multiplicity,
            element_width,
            up_elements,
            down_elements,
            up_bytes: up_elements * width,
            down_bytes: down_elements * width,
            overhead_per_message: wire::MESSAGE_OVERHEAD as u64,
        }
    }

    pub fn total_elements(&self) -> u64 {
        self.up_elements + self.down_elements
    }

    pub fn total_bytes(&self) -> u64 {
        self.up_bytes + self.down_bytes
    }

    pub fn up_wire_bytes(&self) -> u64 {
        self.up_bytes + self.t as u64 * self.overhead_per_message
    }

    pub fn down_wire_bytes(&self) -> u64 {
        self.down_bytes + self.t as u64 * self.overhead_per_message
    }

    /// Whether a measured transcript matches this model in every count.
    pub fn matches(&self, transcript: &Transcript) -> bool {
        let total = transcript.total();
        transcript.servers.len() == self.t
            && total.up_elements == self.up_elements
            && total.down_elements == self.down_elements
            && total.up_bytes == self.up_bytes
            && total.down_bytes == self.down_bytes
            && total.up_wire_bytes == self.up_wire_bytes()
            && total.down_wire_bytes == self.down_wire_bytes()
    }
}

pub fn comm_cost(params: &PirParams) -> CostModel {
    CostModel::new(
        params.t(),
        params.k(),
        params.multiplicity,
        params.field.element_width(),
    )
}

/// Full in-process retrieval. Every query and answer goes through the wire
/// codec, so the transcript holds real frame sizes.
pub fn run_protocol<R: Rng + ?Sized>(
    params: &PirParams,
    db: &Database,
    index: usize,
    rng: &mut R,
) -> Result<(FieldElement, Transcript)> {
    let server = PirServer::new(params, db)?;
    let expected = db.get(index)?;
    let (ctx, queries) = client_query(params, index, rng)?;
    let mut transcript = Transcript::default();
    let mut answers = Vec::with_capacity(queries.len());
    for query in &queries {
        let up = wire::encode_query(params.field(), query);
        let received = wire::decode_query_frame(params.field(), &up)?;
        let down = wire::encode_answer(params.field(), &server.answer(&received)?);
        let answer = wire::decode_answer_frame(params, &down)?;
        transcript.record(params.field(), query, &answer, up.len(), down.len());
        answers.push(answer);
    }
    let recovered = client_reconstruct(params, &ctx, &answers)?;
    if recovered != expected {
        return Err(Error::Protocol(format!(
            "record {index}: recovered {}, database holds {}",
            params.field.display(recovered),
            params.field.display(expected)
        )));
    }
    Ok((recovered, transcript))
}

/// First difference between the per-server query distributions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistinguishingReport {
    pub server: usize,
    pub point: Vec<FieldElement>,
    pub count_first: u64,
    pub count_second: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AuditOutcome {
    /// Every server sees the same multiset of points for both indices.
    /// `uniform` is set when each multiset hits every point of H_m^k once.
    Identical {
        uniform: bool,
        betas: u64,
    },
    Distinguishing(DistinguishingReport),
}

impl AuditOutcome {
    pub fn is_identical(&self) -> bool {
        matches!(self, AuditOutcome::Identical { .. })
    }
}

/// Exact audit over every β in H_m^k.
pub fn privacy_audit(
    params: &PirParams,
    first: usize,
    second: usize,
    budget: u64,
) -> Result<AuditOutcome> {
    privacy_audit_with(params, first, second, budget, |params, index, beta| {
        Ok(client_query_with_beta(params, index, beta)?.1)
    })
}

type Counts = HashMap<Vec<FieldElement>, (u64, u64)>;

/// [`privacy_audit`] with a custom query generator
/// `(params, index, beta exponents) -> queries`.
pub fn privacy_audit_with<G>(
    params: &PirParams,
    first: usize,
    second: usize,
    budget: u64,
    generate: G,
) -> Result<AuditOutcome>
where
    G: Fn(&PirParams, usize, &[u64]) -> Result<Vec<Query>>,
{
    let k = params.k();
    let m = params.m;
    let total = m
        .checked_pow(k as u32)
        .filter(|&s| s <= budget)
        .ok_or(Error::BudgetExceeded { budget })?;
    let mut counts: Vec<Counts> = vec![HashMap::new(); params.t()];
    let mut beta = vec![0u64; k];
    for code in 0..total {
        let mut rest = code;
        for slot in beta.iter_mut().rev() {
            *slot = rest % m;
            rest /= m;
        }
        for (which, index) in [(0, first), (1, second)] {
            for query in generate(params, index, &beta)? {
                let slot = counts
                    .get_mut(query.server)
                    .ok_or(Error::IndexOutOfRange {
                        index: query.server,
                        len: params.t(),
                    })?
                    .entry(query.point)
                    .or_default();
                if which == 0 {
                    slot.0 += 1;
                } else {
                    slot.1 += 1;
                }
            }
        }
    }
    for (server, server_counts) in counts.iter().enumerate() {
        let mut diffs: Vec<_> = server_counts.iter().filter(|(_, (a, b))| a != b).collect();
        diffs.sort();
        if let Some((point, &(a, b))) = diffs.first() {
            return Ok(AuditOutcome::Distinguishing(DistinguishingReport {
                server,
                point: point.to_vec(),
                count_first: a,
                count_second: b,
            }));
        }
    }
    let uniform = counts.iter().all(|c| {
        c.len() as u64 == total
            && c.iter()
                .all(|(point, &(a, _))| a == 1 && point.iter().all(|&x| params.roots.contains(x)))
    });
    Ok(AuditOutcome::Identical {
        uniform,
        betas: total,
    })
}

/// Monte Carlo estimate of the per-server total variation distance between
/// the query distributions of two indices. Not a proof of privacy.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledAudit {
    pub samples: u64,
    pub distances: Vec<f64>,
}

impl SampledAudit {
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

pub fn privacy_audit_sampled<R: Rng + ?Sized>(
    params: &PirParams,
    first: usize,
    second: usize,
    samples: u64,
    rng: &mut R,
) -> Result<SampledAudit> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mut counts: Vec<Counts> = vec![HashMap::new(); params.t()];
    for _ in 0..samples {
        for (which, index) in [(0, first), (1, second)] {
            let (_, queries) = client_query(params, index, rng)?;
            for query in queries {
                let slot = counts[query.server].entry(query.point).or_default();
                if which == 0 {
                    slot.0 += 1;
                } else {
                    slot.1 += 1;
                }
            }
        }
    }
    let distances = counts
        .iter()
        .map(|c| {
            c.values()
                .map(|&(a, b)| (a as f64 - b as f64).abs())
                .sum::<f64>()
                / (2.0 * samples as f64)
        })
        .collect();
    Ok(SampledAudit { samples, distances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::SparseUniPoly;

    // The toy instance with the family u = ((1,0),(0,1)), v = ((0,1),(1,0)).
    fn toy() -> PirParams {
        let f = Field::gf4();
        let h = primitive_root_of_unity(&f, 3).unwrap();
        let g = h.gamma();
        let decoder = DecodingPoly::new(3, &f, vec![(0, f.mul(g, g)), (1, g)]).unwrap();
        let family = MvFamily::new(
            6,
            2,
            vec![0, 1, 3, 4],
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![0, 1], vec![1, 0]],
        )
        .unwrap();
        PirParams::build(
            &f,
            3,
            2,
            MvfSource::Family(family),
            DecoderSource::Poly(decoder),
        )
        .unwrap()
    }

    #[test]
    fn build_toy() {
        let params = toy();
        assert_eq!(params.t(), 2);
        assert_eq!(params.big_m(), 6);
        assert_eq!(params.big_target(), &[0, 1, 3, 4]);
        assert_eq!(params.answer_len(), 3);
    }

    #[test]
    fn multiplicity_one() {
        assert_eq!(lifted_target(3, 2, 1).unwrap(), vec![0, 4]);
        let f = Field::gf4();
        let params = PirParams::build(
            &f,
            3,
            1,
            MvfSource::BruteForce {
                dim: 2,
                size: 2,
                budget: 1_000_000,
            },
            DecoderSource::Search {
                t_max: 2,
                budget: 1000,
            },
        )
        .unwrap();
        assert_eq!(params.big_target(), &[0, 4]);
        let db = Database::from_bits(&f, &[true, false]);
        let mut rng = rng_from_seed(Some(2));
        for index in 0..2 {
            let (value, transcript) = run_protocol(&params, &db, index, &mut rng).unwrap();
            assert_eq!(value, db.get(index).unwrap());
            assert_eq!(transcript.element_counts(), (4, 2));
        }
        // the e = 2 family has inner products equal to 1 mod 2
        let err = PirParams::build(
            &f,
            3,
            1,
            MvfSource::Family(toy().family().clone()),
            DecoderSource::Search {
                t_max: 2,
                budget: 1000,
            },
        );
        assert!(err.is_err());
    }

    #[test]
    fn build_rejects_shared_factor() {
        let f = Field::gf4();
        let err = PirParams::build(
            &f,
            4,
            2,
            MvfSource::Grolmusz { h: 4, weight: 1 },
            DecoderSource::Lagrange,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotCoprime { gcd: 2, .. }));
    }

    #[test]
    fn build_from_searches() {
        let f = Field::gf4();
        let params = PirParams::build(
            &f,
            3,
            2,
            MvfSource::BruteForce {
                dim: 2,
                size: 2,
                budget: 1_000_000,
            },
            DecoderSource::Search {
                t_max: 2,
                budget: 1000,
            },
        )
        .unwrap();
        assert_eq!((params.t(), params.k(), params.n()), (2, 2, 2));
    }

    #[test]
    fn query_example() {
        let params = toy();
        let f = params.field().clone();
        let g = params.roots().gamma();
        // beta = (gamma, gamma^2)
        let (_, queries) = client_query_with_beta(&params, 0, &[1, 2]).unwrap();
        assert_eq!(queries[1].point, vec![g, f.one()]);
        assert_eq!(queries[0].point, vec![g, f.mul(g, g)]);
        assert!(client_query_with_beta(&params, 2, &[1, 2]).is_err());
    }

    #[test]
    fn answer_example() {
        let params = toy();
        let f = params.field().clone();
        let g = params.roots().gamma();
        let db = Database::new(&f, vec![f.one(), g]).unwrap();
        let q = Query {
            server: 1,
            point: vec![g, f.one()],
        };
        let a = server_answer(&params, &db, &q).unwrap();
        assert_eq!(a.values.values, vec![f.zero(), f.one(), g]);

        let zero = Database::new(&f, vec![f.zero(); 2]).unwrap();
        let a = server_answer(&params, &zero, &q).unwrap();
        assert!(a.values.values.iter().all(|x| x.is_zero()));

        let outside = Query {
            server: 0,
            point: vec![f.zero(), f.one()],
        };
        assert!(matches!(
            server_answer(&params, &db, &outside),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn reconstruct_example() {
        let params = toy();
        let f = params.field().clone();
        let g = params.roots().gamma();
        let db = Database::new(&f, vec![f.one(), g]).unwrap();
        let server = PirServer::new(&params, &db).unwrap();
        let (ctx, queries) = client_query_with_beta(&params, 0, &[1, 2]).unwrap();
        // A(Z) = gamma + Z
        let explicit = ctx
            .curve
            .compose(
                &SparseMultiPoly::new(&f, 2, 6, vec![(vec![1, 0], f.one()), (vec![0, 1], g)])
                    .unwrap(),
            )
            .unwrap();
        assert_eq!(explicit, SparseUniPoly::new(&f, vec![(0, g), (1, f.one())]));
        let answers: Vec<_> = queries.iter().map(|q| server.answer(q).unwrap()).collect();
        assert_eq!(
            client_reconstruct(&params, &ctx, &answers).unwrap(),
            f.one()
        );
        assert!(client_reconstruct(&params, &ctx, &answers[..1]).is_err());
    }

    #[test]
    fn toy_run_and_costs() {
        let params = toy();
        let f = params.field().clone();
        let db = Database::new(&f, vec![f.one(), params.roots().gamma()]).unwrap();
        let mut rng = rng_from_seed(Some(7));
        for index in 0..2 {
            let (value, transcript) = run_protocol(&params, &db, index, &mut rng).unwrap();
            assert_eq!(value, db.get(index).unwrap());
            assert_eq!(transcript.element_counts(), (4, 6));
            assert!(comm_cost(&params).matches(&transcript));
        }
        let cost = comm_cost(&params);
        assert_eq!(cost.total_bytes(), 10);
    }

    #[test]
    fn audit_toy() {
        let params = toy();
        for (a, b) in [(0, 1), (1, 0), (0, 0)] {
            assert_eq!(
                privacy_audit(&params, a, b, 1000).unwrap(),
                AuditOutcome::Identical {
                    uniform: true,
                    betas: 9
                }
            );
        }
        assert!(matches!(
            privacy_audit(&params, 0, 1, 8),
            Err(Error::BudgetExceeded { budget: 8 })
        ));
    }

    #[test]
    fn audit_catches_leaky_client() {
        let params = toy();
        let leaky = |params: &PirParams, index: usize, _beta: &[u64]| {
            let v = params.family().v(index);
            Ok((0..params.t())
                .map(|server| Query {
                    server,
                    point: v.iter().map(|&x| params.roots().pow(x)).collect(),
                })
                .collect())
        };
        let outcome = privacy_audit_with(&params, 0, 1, 1000, leaky).unwrap();
        match outcome {
            AuditOutcome::Distinguishing(r) => {
                assert_eq!(r.server, 0);
                assert_ne!(r.count_first, r.count_second);
            }
            other => panic!("leaky client passed the audit: {other:?}"),
        }
    }

    #[test]
    fn sampled_audit_is_small() {
        let params = toy();
        let mut rng = rng_from_seed(Some(1));
        let s = privacy_audit_sampled(&params, 0, 1, 20_000, &mut rng).unwrap();
        assert_eq!(s.distances.len(), 2);
        assert!(s.max_distance() < 0.05, "{s:?}");
    }

    #[test]
    fn database_text() {
        let mut rng = rng_from_seed(Some(3));
        for f in [Field::gf512(), Field::gf9()] {
            let db = Database::random(&f, 50, &mut rng);
            assert_eq!(Database::from_text(&f, &db.to_text()).unwrap(), db);
            assert!(db.get(50).is_err());
        }
    }
}
