//! `isolab`: batch front end. Every command prints one JSON document on
//! stdout. Exit status is 0 on success, 1 on a domain error (printed as
//! `{"error": {"kind", "message"}}`) and 2 on a usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isolab::classgroup::{
    class_to_module, deligne_to_class, enumerate_reduced_capped, form_above, FrobeniusMatrix, QuadForm,
    DEFAULT_DISC_CAP,
};
use isolab::curve::{
    count_points, count_points_bsgs, count_points_naive, frobenius_data, mapgen, Curve, DiscriminantPolicy,
};
use isolab::invariantmap::{build_orbit_table_capped, IsogenyTable, DEFAULT_CLASS_CAP};
use isolab::isogeny::{apply_ideal_vector, sample_walk_excluding, walk_basis, walk_distance_profile, IdealVector, WalkParams};
use isolab::products::{build_product_isomorphism, check_class_condition, verify_matrix_identity, SubgroupDescriptor};
use isolab::protocols::{
    nike_derive, nike_publish, nike_setup, prf_constrain, prf_eval, prf_eval_constrained, prf_setup, sig_keygen,
    sig_sign, sig_verify, BoardEntry, ConstrainedKey, PartySecret, PrfKey, PublicParams, SecurityLevel, SigKeys,
    SigPublic, DEFAULT_PROTOCOL_PRIME_CAP,
};
use isolab::thetacount::{prop_b6_feasible, theta_null_bound};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

const INT_CAP_VAR: &str = "ISOLAB_INT_CAP";

#[derive(Parser)]
#[command(name = "isolab", version, about = "Class-group actions on ordinary curves over small prime fields")]
#[command(after_help = "JSON arguments are given inline or as @path to a file.\n\
Environment: ISOLAB_INT_CAP overrides the |D| cap of `class enumerate` and the class-number cap of `table`.")]
struct Cli {
    /// Seed for every random choice; echoed as "seed" by randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    walk: WalkFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WalkFlags {
    /// Exponent B of the walk prime bound (ln|D|)^B.
    #[arg(long = "walk-B", global = true)]
    walk_b: Option<f64>,
    #[arg(long = "walk-eps", global = true)]
    walk_eps: Option<f64>,
    #[arg(long = "walk-delta", global = true)]
    walk_delta: Option<f64>,
    /// Constant C of the walk length.
    #[arg(long = "walk-C", global = true)]
    walk_c: Option<f64>,
    /// Largest walk prime; protocols default to 31, `walk` to no cap.
    #[arg(long = "walk-max-prime", global = true)]
    walk_max_prime: Option<u64>,
}

impl WalkFlags {
    fn params(&self, max_prime: Option<u64>) -> WalkParams {
        let d = WalkParams::default();
        WalkParams {
            b_exponent: self.walk_b.unwrap_or(d.b_exponent),
            eps: self.walk_eps.unwrap_or(d.eps),
            delta: self.walk_delta.unwrap_or(d.delta),
            c: self.walk_c.unwrap_or(d.c),
            max_prime: self.walk_max_prime.or(max_prime),
            ..d
        }
    }

    fn protocol(&self) -> WalkParams {
        self.params(Some(DEFAULT_PROTOCOL_PRIME_CAP))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Random ordinary curve with conductor 1 and accepted discriminant.
    #[command(after_help = "Output: {\"seed\", \"curve\": {p,a,b}, \"frobenius\": {t, N, D_pi, conductor_m, D_fund, factorization}}")]
    Gen {
        #[arg(long)]
        bits: u32,
        /// any | prime | small-times-prime
        #[arg(long, default_value = "any")]
        policy: String,
    },
    /// Group order and Frobenius data of a curve.
    #[command(after_help = "Output: {\"curve\", \"N\", \"t\", \"j\", \"frobenius\": FrobeniusData | null}")]
    Count {
        #[arg(long)]
        curve: String,
        /// auto | naive | bsgs
        #[arg(long, default_value = "auto")]
        method: String,
    },
    /// Binary quadratic forms.
    #[command(subcommand)]
    Class(ClassCommand),
    /// Sample a random walk word for a discriminant.
    #[command(after_help = "Output: {\"seed\", \"D\", \"basis\": [ell], \"length\", \"ideal\": [[ell, sign, exp]]}")]
    Walk {
        #[arg(long, allow_hyphen_values = true)]
        d: i128,
        /// Primes to leave out of the basis, comma separated.
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<u64>,
    },
    /// Act on a curve with an ideal word.
    #[command(after_help = "Output: {\"curve\": {p,a,b}, \"j\"}")]
    Act {
        #[arg(long)]
        curve: String,
        /// [[ell, sign, exp], ...]
        #[arg(long)]
        ideal: String,
    },
    /// Orbit table: j-invariant to ideal class over the isogeny class of a curve.
    #[command(after_help = "Output: {\"base\": Curve, \"D\", \"entries\": [{\"j\", \"form\": {a,b,c}}]}")]
    Table {
        #[arg(long)]
        curve: String,
        /// Starting prime bound, doubled until the primes generate.
        #[arg(long, default_value_t = 11)]
        bound: u64,
    },
    /// n-party key exchange.
    #[command(subcommand)]
    Nike(NikeCommand),
    /// Unique signatures.
    #[command(subcommand)]
    Sign(SignCommand),
    /// Bit-fixing constrained PRF.
    #[command(subcommand)]
    Prf(PrfCommand),
    /// Isomorphisms of products of curves.
    #[command(subcommand)]
    Products(ProductsCommand),
    /// Frobenius modules and ideal classes.
    #[command(subcommand)]
    Deligne(DeligneCommand),
    /// Theta-null counting bounds.
    #[command(name = "theta-bounds")]
    #[command(after_help = "Output: {\"bound\"} or, with --h, {\"bound\", \"feasible\"}")]
    ThetaBounds {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u64,
        /// Class number to test against m^4 |Sp_4(Z/m)| (requires 4 | m).
        #[arg(long)]
        h: Option<u128>,
    },
    /// Exact and sampled distance to uniform of walk endpoints.
    #[command(name = "experiment-mixing")]
    #[command(after_help = "Output: {\"seed\", \"D\", \"basis\", \"walk_length\", \"distances\": [r = 0..], \
\"distance_at_walk_length\", \"empirical\": {\"trials\", \"histogram\", \"distance\"} | null}")]
    ExperimentMixing {
        #[arg(long, allow_hyphen_values = true, default_value_t = -59)]
        d: i128,
        /// Largest r reported; defaults to the walk length.
        #[arg(long)]
        r_max: Option<usize>,
        /// Walks sampled for the empirical histogram.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<u64>,
    },
}

#[derive(Subcommand)]
enum ClassCommand {
    /// All reduced forms of a discriminant.
    #[command(after_help = "Output: {\"D\", \"h\", \"forms\": [{a,b,c}]}")]
    Enumerate {
        #[arg(long, allow_hyphen_values = true)]
        d: i128,
    },
    /// Reduced composition of two forms.
    #[command(after_help = "Output: {\"form\": {a,b,c}}")]
    Compose {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
    },
    /// Reduced representative of a form.
    #[command(after_help = "Output: {\"form\": {a,b,c}}")]
    Reduce {
        #[arg(long)]
        form: String,
    },
}

#[derive(Args)]
struct BaseCurve {
    /// The base curve x of the public parameters.
    #[arg(long)]
    curve: String,
}

#[derive(Subcommand)]
enum NikeCommand {
    /// Public parameters from a security level (toy = 12-bit p, small = 20-bit p) or a given curve.
    #[command(after_help = "Output: {\"seed\", \"lambda\", \"x\": Curve, \"D\", \"h\", \"walk\", \"walk_basis\"}")]
    Setup {
        #[arg(long, conflicts_with = "curve")]
        lambda: Option<String>,
        #[arg(long)]
        curve: Option<String>,
    },
    /// Sample a secret and the share to post on the board.
    #[command(after_help = "Output: {\"seed\", \"entry\": {\"party\", \"share\": Curve}, \"secret\": {\"secret\": ideal} | \"secret_file\"}\n\
With --secret-out the secret is written to that file with mode 0600 and left out of stdout.")]
    Publish {
        #[command(flatten)]
        base: BaseCurve,
        #[arg(long)]
        party: usize,
        #[arg(long)]
        secret_out: Option<PathBuf>,
    },
    /// Shared key of one party from its secret and the full board.
    #[command(after_help = "Output: {\"party\", \"value\": {form, encoding}, \"key\": hex}")]
    Derive {
        #[command(flatten)]
        base: BaseCurve,
        #[arg(long)]
        party: usize,
        /// {"secret": ideal}
        #[arg(long)]
        secret: String,
        /// [{"party", "share"}]
        #[arg(long)]
        board: String,
    },
}

#[derive(Subcommand)]
enum SignCommand {
    #[command(after_help = "Output: {\"seed\", \"keys\": {\"secrets\": [[ideal, ideal]], \"publics\": {\"x\", \"y\": [[Curve, Curve]]}}}")]
    Keygen {
        #[command(flatten)]
        base: BaseCurve,
        #[arg(long)]
        n: usize,
    },
    #[command(after_help = "Output: {\"sigma\": Curve}")]
    Sign {
        #[command(flatten)]
        base: BaseCurve,
        /// SigKeys as printed by keygen (the "keys" field)
        #[arg(long)]
        keys: String,
        /// Bit string such as 0110
        #[arg(long)]
        message: String,
    },
    #[command(after_help = "Output: {\"valid\": bool}")]
    Verify {
        #[command(flatten)]
        base: BaseCurve,
        /// {"x", "y"}
        #[arg(long)]
        publics: String,
        #[arg(long)]
        message: String,
        #[arg(long)]
        sigma: String,
    },
}

#[derive(Subcommand)]
enum PrfCommand {
    #[command(after_help = "Output: {\"seed\", \"key\": {\"alpha\": ideal, \"d\": [[ideal, ideal]]}}")]
    Setup {
        #[command(flatten)]
        base: BaseCurve,
        #[arg(long)]
        n: usize,
    },
    #[command(after_help = "Output: {\"value\": {form, encoding}}")]
    Eval {
        #[command(flatten)]
        base: BaseCurve,
        #[arg(long)]
        key: String,
        #[arg(long)]
        input: String,
    },
    /// Key for the inputs matching a pattern over {0, 1, *}.
    #[command(after_help = "Output: {\"seed\", \"ckey\": {\"v\": [bool | null], \"d_curves\": [[Curve, Curve] | null], \"h\": [Curve | null]}}")]
    Constrain {
        #[command(flatten)]
        base: BaseCurve,
        #[arg(long)]
        key: String,
        /// e.g. *1**0*
        #[arg(long)]
        pattern: String,
    },
    #[command(after_help = "Output: {\"value\": {form, encoding} | null} (null outside the pattern)")]
    Ceval {
        #[command(flatten)]
        base: BaseCurve,
        #[arg(long)]
        ckey: String,
        #[arg(long)]
        input: String,
    },
}

#[derive(Args)]
struct Kernels {
    #[arg(long)]
    curve: String,
    /// Ideal word of the first kernel.
    #[arg(long)]
    k1: String,
    /// Ideal word of the second kernel.
    #[arg(long)]
    k2: String,
}

#[derive(Subcommand)]
enum ProductsCommand {
    /// Mat(f) and Mat(g) for E x E/(K1+K2) -> E/K1 x E/K2.
    #[command(after_help = "Output: {\"m1\", \"m2\", \"a\", \"b\", \"f\": [[{mult, map}]], \"g\": [[{mult, map}]]}")]
    Build {
        #[command(flatten)]
        kernels: Kernels,
    },
    /// Check g o f and f o g on random points.
    #[command(after_help = "Output: {\"seed\", \"samples\", \"verified\", \"vacuous\", \"a\", \"b\"}")]
    Verify {
        #[command(flatten)]
        kernels: Kernels,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Whether two tuples of classes give isomorphic products.
    #[command(after_help = "Output: {\"isomorphic\": bool}")]
    Classcheck {
        #[arg(long)]
        classes1: String,
        #[arg(long)]
        classes2: String,
    },
}

#[derive(Subcommand)]
enum DeligneCommand {
    /// Class carrying the first module to the second.
    #[command(name = "to-class", after_help = "Output: {\"form\": {a,b,c}}")]
    ToClass {
        /// [[m11, m12], [m21, m22]]
        #[arg(long)]
        m1: String,
        #[arg(long)]
        m2: String,
        #[arg(long, allow_hyphen_values = true)]
        t: i128,
        #[arg(long)]
        q: i128,
    },
    /// Frobenius matrix on the lattice of a class.
    #[command(name = "to-module", after_help = "Output: {\"matrix\": [[m11, m12], [m21, m22]], \"t\", \"q\"}")]
    ToModule {
        #[arg(long)]
        form: String,
        #[arg(long, allow_hyphen_values = true)]
        t: i128,
        #[arg(long)]
        q: i128,
    },
}

enum Failure {
    Usage(String),
    Domain(isolab::Error),
}

impl From<isolab::Error> for Failure {
    fn from(e: isolab::Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<Value, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Inline JSON, or the contents of a file when prefixed with '@'.
fn parse_json<T: DeserializeOwned>(raw: &str, what: &str) -> Result<T, Failure> {
    let text = match raw.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| usage(format!("{what}: cannot read {path}: {e}")))?,
        None => raw.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("{what}: {e}")))
}

fn parse_bits(raw: &str) -> Result<Vec<bool>, Failure> {
    raw.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(usage(format!("bit string {raw:?} may only contain 0 and 1"))),
        })
        .collect()
}

fn parse_pattern(raw: &str) -> Result<Vec<Option<bool>>, Failure> {
    raw.chars()
        .map(|c| match c {
            '0' => Ok(Some(false)),
            '1' => Ok(Some(true)),
            '*' => Ok(None),
            _ => Err(usage(format!("pattern {raw:?} may only contain 0, 1 and *"))),
        })
        .collect()
}

fn int_cap() -> Result<Option<u128>, Failure> {
    match std::env::var(INT_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{INT_CAP_VAR}={v:?} is not a nonnegative integer"))),
        Err(_) => Ok(None),
    }
}

fn params(curve: &str, walk: &WalkFlags) -> Result<PublicParams, Failure> {
    let x: Curve = parse_json(curve, "curve")?;
    Ok(PublicParams::from_curve(&x, walk.protocol())?)
}

fn describe(pp: &PublicParams) -> Value {
    json!({
        "x": pp.x(),
        "D": pp.d(),
        "h": pp.table().class_number(),
        "walk": pp.walk,
        "walk_basis": pp.walk_basis(),
    })
}

fn write_secret(path: &Path, secret: &PartySecret) -> Result<(), Failure> {
    let text = serde_json::to_string(secret).expect("secrets serialize");
    let mut opts = fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let mut file = opts
        .open(path)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    writeln!(file, "{text}").map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn table_for(curve: &Curve, start: u64) -> Result<IsogenyTable, Failure> {
    let cap = match int_cap()? {
        Some(c) => usize::try_from(c).unwrap_or(usize::MAX),
        None => DEFAULT_CLASS_CAP,
    };
    let mut bound = start.max(3);
    loop {
        match build_orbit_table_capped(curve, bound, cap) {
            Err(isolab::Error::NotGenerated { .. }) if bound < 1 << 16 => bound *= 2,
            other => return Ok(other?),
        }
    }
}

fn run_class(cmd: ClassCommand) -> Outcome {
    Ok(match cmd {
        ClassCommand::Enumerate { d } => {
            let cap = match int_cap()? {
                Some(c) => i128::try_from(c).unwrap_or(i128::MAX),
                None => DEFAULT_DISC_CAP,
            };
            let table = enumerate_reduced_capped(d, cap)?;
            json!({"D": d, "h": table.class_number(), "forms": table.reduced_forms})
        }
        ClassCommand::Compose { f, g } => {
            let f: QuadForm = parse_json(&f, "f")?;
            let g: QuadForm = parse_json(&g, "g")?;
            json!({"form": f.compose(&g)?})
        }
        ClassCommand::Reduce { form } => {
            let f: QuadForm = parse_json(&form, "form")?;
            json!({"form": f.reduce()})
        }
    })
}

fn run_nike(cmd: NikeCommand, seed: u64, walk: &WalkFlags) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match cmd {
        NikeCommand::Setup { lambda, curve } => {
            let (pp, lambda) = match (lambda, curve) {
                (Some(l), None) => {
                    let level: SecurityLevel = l.parse()?;
                    let pp = if walk_overridden(walk) {
                        let (base, _) = mapgen(level.bits(), DiscriminantPolicy::AnyFundamental, &mut rng)?;
                        PublicParams::from_curve(&base, walk.protocol())?
                    } else {
                        nike_setup(level, &mut rng)?
                    };
                    (pp, Some(level))
                }
                (None, Some(c)) => (params(&c, walk)?, None),
                _ => return Err(usage("give exactly one of --lambda and --curve")),
            };
            let mut out = describe(&pp);
            out["seed"] = json!(seed);
            out["lambda"] = json!(lambda);
            out
        }
        NikeCommand::Publish { base, party, secret_out } => {
            let pp = params(&base.curve, walk)?;
            let (secret, share) = nike_publish(&pp, &mut rng)?;
            let entry = BoardEntry { party, share };
            match secret_out {
                Some(path) => {
                    write_secret(&path, &secret)?;
                    json!({"seed": seed, "entry": entry, "secret_file": path})
                }
                None => json!({"seed": seed, "entry": entry, "secret": secret}),
            }
        }
        NikeCommand::Derive { base, party, secret, board } => {
            let pp = params(&base.curve, walk)?;
            let secret: PartySecret = parse_json(&secret, "secret")?;
            let mut board: Vec<BoardEntry> = parse_json(&board, "board")?;
            board.sort_by_key(|e| e.party);
            if board.iter().enumerate().any(|(i, e)| e.party != i) {
                return Err(isolab::Error::Mismatch("board parties must be 0..n-1, each once".into()).into());
            }
            let shares: Vec<Curve> = board.iter().map(|e| e.share).collect();
            let key = nike_derive(&pp, party, &secret, &shares)?;
            json!({"party": party, "value": key.value, "key": key.key})
        }
    })
}

fn walk_overridden(w: &WalkFlags) -> bool {
    w.walk_b.is_some() || w.walk_eps.is_some() || w.walk_delta.is_some() || w.walk_c.is_some() || w.walk_max_prime.is_some()
}

fn run_sign(cmd: SignCommand, seed: u64, walk: &WalkFlags) -> Outcome {
    Ok(match cmd {
        SignCommand::Keygen { base, n } => {
            let pp = params(&base.curve, walk)?;
            let keys = sig_keygen(&pp, n, &mut ChaCha8Rng::seed_from_u64(seed))?;
            json!({"seed": seed, "keys": keys})
        }
        SignCommand::Sign { base, keys, message } => {
            let pp = params(&base.curve, walk)?;
            let keys: SigKeys = parse_json(&keys, "keys")?;
            json!({"sigma": sig_sign(&pp, &keys, &parse_bits(&message)?)?})
        }
        SignCommand::Verify { base, publics, message, sigma } => {
            let pp = params(&base.curve, walk)?;
            let publics: SigPublic = parse_json(&publics, "publics")?;
            let sigma: Curve = parse_json(&sigma, "sigma")?;
            json!({"valid": sig_verify(&pp, &publics, &parse_bits(&message)?, &sigma)?})
        }
    })
}

fn run_prf(cmd: PrfCommand, seed: u64, walk: &WalkFlags) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match cmd {
        PrfCommand::Setup { base, n } => {
            let pp = params(&base.curve, walk)?;
            json!({"seed": seed, "key": prf_setup(&pp, n, &mut rng)?})
        }
        PrfCommand::Eval { base, key, input } => {
            let pp = params(&base.curve, walk)?;
            let key: PrfKey = parse_json(&key, "key")?;
            json!({"value": prf_eval(&pp, &key, &parse_bits(&input)?)?})
        }
        PrfCommand::Constrain { base, key, pattern } => {
            let pp = params(&base.curve, walk)?;
            let key: PrfKey = parse_json(&key, "key")?;
            let ck = prf_constrain(&pp, &key, &parse_pattern(&pattern)?, &mut rng)?;
            json!({"seed": seed, "ckey": ck})
        }
        PrfCommand::Ceval { base, ckey, input } => {
            let pp = params(&base.curve, walk)?;
            let ck: ConstrainedKey = parse_json(&ckey, "ckey")?;
            json!({"value": prf_eval_constrained(&pp, &ck, &parse_bits(&input)?)?})
        }
    })
}

fn kernels(k: &Kernels) -> Result<(Curve, SubgroupDescriptor, SubgroupDescriptor), Failure> {
    let curve: Curve = parse_json(&k.curve, "curve")?;
    let k1: IdealVector = parse_json(&k.k1, "k1")?;
    let k2: IdealVector = parse_json(&k.k2, "k2")?;
    Ok((curve, SubgroupDescriptor::Word(k1), SubgroupDescriptor::Word(k2)))
}

fn run_products(cmd: ProductsCommand, seed: u64) -> Outcome {
    Ok(match cmd {
        ProductsCommand::Build { kernels: k } => {
            let (e, k1, k2) = kernels(&k)?;
            build_product_isomorphism(&e, &k1, &k2)?.to_json()
        }
        ProductsCommand::Verify { kernels: k, samples } => {
            let (e, k1, k2) = kernels(&k)?;
            let pair = build_product_isomorphism(&e, &k1, &k2)?;
            let verdict = verify_matrix_identity(&pair, samples, &mut ChaCha8Rng::seed_from_u64(seed));
            json!({
                "seed": seed,
                "samples": samples,
                "verified": verdict.ok,
                "vacuous": verdict.vacuous,
                "a": pair.a,
                "b": pair.b,
            })
        }
        ProductsCommand::Classcheck { classes1, classes2 } => {
            let c1: Vec<QuadForm> = parse_json(&classes1, "classes1")?;
            let c2: Vec<QuadForm> = parse_json(&classes2, "classes2")?;
            json!({"isomorphic": check_class_condition(&c1, &c2)?})
        }
    })
}

fn run_deligne(cmd: DeligneCommand) -> Outcome {
    Ok(match cmd {
        DeligneCommand::ToClass { m1, m2, t, q } => {
            let r1: [[i128; 2]; 2] = parse_json(&m1, "m1")?;
            let r2: [[i128; 2]; 2] = parse_json(&m2, "m2")?;
            let form = deligne_to_class(&FrobeniusMatrix::new(r1, t, q)?, &FrobeniusMatrix::new(r2, t, q)?)?;
            json!({"form": form})
        }
        DeligneCommand::ToModule { form, t, q } => {
            let f: QuadForm = parse_json(&form, "form")?;
            let m = class_to_module(&f, t, q)?;
            json!({"matrix": m.rows(), "t": t, "q": q})
        }
    })
}

fn run_mixing(d: i128, r_max: Option<usize>, trials: usize, workers: usize, exclude: &[u64], seed: u64, walk: &WalkFlags) -> Outcome {
    let params = walk.params(None);
    let basis = walk_basis(d, &params, exclude)?;
    let r = params.walk_length(d);
    let distances = walk_distance_profile(d, &params, exclude, r_max.unwrap_or(r))?;
    let empirical = if trials == 0 {
        Value::Null
    } else {
        let classes = enumerate_reduced_capped(d, DEFAULT_DISC_CAP)?.reduced_forms;
        let workers = workers.clamp(1, trials);
        let chunks: Vec<Vec<usize>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let classes = &classes;
                    s.spawn(move || -> isolab::Result<Vec<usize>> {
                        let mut hist = vec![0usize; classes.len()];
                        for trial in (w..trials).step_by(workers) {
                            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
                            let word = sample_walk_excluding(d, &params, exclude, &mut rng)?;
                            let mut c = QuadForm::identity(d)?;
                            for e in word.entries() {
                                let g = form_above(d, e.ell)?;
                                let g = if e.sign == 1 { g } else { g.invert() };
                                c = c.compose(&g.pow(e.exp as i64))?;
                            }
                            hist[classes.binary_search(&c).expect("reduced")] += 1;
                        }
                        Ok(hist)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker")).collect::<isolab::Result<_>>()
        })?;
        let hist: Vec<usize> = (0..classes.len()).map(|i| chunks.iter().map(|c| c[i]).sum()).collect();
        let h = classes.len() as f64;
        let dist = hist.iter().map(|&c| (c as f64 / trials as f64 - 1.0 / h).abs()).sum::<f64>() / 2.0;
        json!({"trials": trials, "histogram": hist, "distance": dist})
    };
    Ok(json!({
        "seed": seed,
        "D": d,
        "basis": basis,
        "walk_length": r,
        "distance_at_walk_length": distances.get(r),
        "distances": distances,
        "empirical": empirical,
    }))
}

fn run(cli: Cli) -> Outcome {
    let seed = cli.seed;
    let walk = &cli.walk;
    match cli.command {
        Command::Gen { bits, policy } => {
            let policy: DiscriminantPolicy = policy.parse()?;
            let (curve, data) = mapgen(bits, policy, &mut ChaCha8Rng::seed_from_u64(seed))?;
            Ok(json!({"seed": seed, "curve": curve, "frobenius": data}))
        }
        Command::Count { curve, method } => {
            let e: Curve = parse_json(&curve, "curve")?;
            let n = match method.as_str() {
                "auto" => count_points(&e)?,
                "naive" => count_points_naive(&e),
                "bsgs" => count_points_bsgs(&e)?,
                other => return Err(usage(format!("unknown method {other:?}"))),
            };
            let t = e.p() as i64 + 1 - n as i64;
            let frob = match frobenius_data(&e) {
                Ok(fd) => json!(fd),
                Err(isolab::Error::SupersingularCurve(_)) => Value::Null,
                Err(err) => return Err(err.into()),
            };
            Ok(json!({"curve": e, "N": n, "t": t, "j": e.j(), "frobenius": frob}))
        }
        Command::Class(c) => run_class(c),
        Command::Walk { d, exclude } => {
            let params = walk.params(None);
            let basis = walk_basis(d, &params, &exclude)?;
            let word = sample_walk_excluding(d, &params, &exclude, &mut ChaCha8Rng::seed_from_u64(seed))?;
            Ok(json!({"seed": seed, "D": d, "basis": basis, "length": params.walk_length(d), "ideal": word}))
        }
        Command::Act { curve, ideal } => {
            let e: Curve = parse_json(&curve, "curve")?;
            let v: IdealVector = parse_json(&ideal, "ideal")?;
            let image = apply_ideal_vector(&e, &v)?;
            Ok(json!({"curve": image, "j": image.j()}))
        }
        Command::Table { curve, bound } => {
            let e: Curve = parse_json(&curve, "curve")?;
            Ok(table_for(&e, bound)?.to_json())
        }
        Command::Nike(c) => run_nike(c, seed, walk),
        Command::Sign(c) => run_sign(c, seed, walk),
        Command::Prf(c) => run_prf(c, seed, walk),
        Command::Products(c) => run_products(c, seed),
        Command::Deligne(c) => run_deligne(c),
        Command::ThetaBounds { n, m, h } => {
            let bound = theta_null_bound(n, m)?;
            Ok(match h {
                Some(h) => json!({"bound": bound, "feasible": prop_b6_feasible(h, m)?}),
                None => json!({"bound": bound}),
            })
        }
        Command::ExperimentMixing { d, r_max, trials, workers, exclude } => {
            run_mixing(d, r_max, trials, workers, &exclude, seed, walk)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(e)) => {
            println!("{}", json!({"error": {"kind": e.kind(), "message": e.to_string()}}));
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", json!({"error": {"kind": "Usage", "message": msg}}));
            ExitCode::from(2)
        }
    }
}
