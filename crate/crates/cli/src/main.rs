mod statefile;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use luequiv::equivalence::{
    decide_equivalence, genericity, GenericityReport, Outcome, Tolerances, Verdict, Witness,
};
use luequiv::invariants::invariant_profile;
use luequiv::lusearch::{alternating_search, SearchConfig, SearchResult};
use luequiv::sampling::{random_pure_state, RandomStream};
use luequiv::selfcheck::{run_all, Mode};
use luequiv::statespace::{partial_trace, PureState, SubsystemDims};
use luequiv::{CMatrix, Complex64};
use serde_json::{json, Value};

use statefile::LoadError;

const EXIT_INDETERMINATE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_DIMS: u8 = 4;

#[derive(Parser)]
#[command(
    name = "luequiv",
    version,
    about = "Local unitary equivalence of multipartite pure states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Relative tolerance for profile, spectrum and Gram comparisons.
    #[arg(long, default_value_t = 1e-8)]
    tol_profile: f64,
    /// Relative eigenvalue gap below which eigenvalues count as equal.
    #[arg(long, default_value_t = 1e-8)]
    tol_gap: f64,
    /// Eigenvalues at or below this are treated as zero.
    #[arg(long, default_value_t = 1e-10)]
    rank_cutoff: f64,
    #[arg(long, env = "LUEQUIV_SEED", default_value_t = 0)]
    seed: u64,
    /// Restarts for the alternating search.
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Emit a JSON object instead of text.
    #[arg(long)]
    json: bool,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            profile: self.tol_profile,
            gap: self.tol_gap,
            rank_cutoff: self.rank_cutoff,
        }
    }

    fn search(&self, max_iters: usize) -> SearchConfig {
        SearchConfig {
            restarts: self.restarts,
            max_iters,
            seed: self.seed,
            ..SearchConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the invariant profile of a tripartite state.
    Invariants {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether two states are related by local unitaries.
    Equiv {
        first: PathBuf,
        second: PathBuf,
        /// Also run the alternating search oracle.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Search for local unitaries maximizing the overlap of two states.
    Search {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Write a state file to stdout or `--output`.
    Gen {
        kind: Kind,
        /// Comma-separated local dimensions, e.g. 2,2,2.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, env = "LUEQUIV_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the built-in acceptance suites.
    Selfcheck {
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        #[arg(long)]
        full: bool,
        #[arg(long, env = "LUEQUIV_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Ghz,
    W,
    Product,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }

    fn dims(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DIMS,
            message: message.into(),
        }
    }
}

impl From<luequiv::Error> for Failure {
    fn from(e: luequiv::Error) -> Self {
        use luequiv::Error::*;
        match e {
            InvalidDims(_) | DimsMismatch(..) | NotTripartite(_) => Self::dims(e.to_string()),
            _ => Self::parse(e.to_string()),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Parse(m) => Self::parse(m),
            LoadError::Dims(m) => Self::dims(m),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn load(path: &Path) -> Result<PureState, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))?;
    let state = statefile::parse(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })?;
    if state.was_renormalized() {
        eprintln!(
            "warning: {} renormalized (norm off by {:.3e})",
            path.display(),
            state.norm_deviation()
        );
    }
    Ok(state)
}

fn print_json(v: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("JSON values serialize")
    );
}

fn cmd_invariants(file: &Path, common: &Common) -> CmdResult {
    let state = load(file)?;
    let profile = invariant_profile(&state)?;
    if common.json {
        let entries: Vec<Value> = profile
            .iter()
            .map(|(l, v)| json!({"label": l.to_string(), "value": v}))
            .collect();
        print_json(&json!({"dims": state.dims().as_slice(), "entries": entries}));
    } else {
        for (label, value) in profile.iter() {
            println!("{label} = {value:.14e}");
        }
    }
    Ok(0)
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Invariant { label, left, right } => {
            json!({"kind": "invariant", "label": label.to_string(), "left": left, "right": right})
        }
        Witness::Eigenvalue { index, left, right } => {
            json!({"kind": "eigenvalue", "index": index, "left": left, "right": right})
        }
        Witness::Gram { entry, left, right } => json!({
            "kind": "gram",
            "entry": entry.to_string(),
            "left": complex_json(*left),
            "right": complex_json(*right),
        }),
    }
}

fn genericity_json(r: &GenericityReport) -> Value {
    json!({
        "is_generic": r.is_generic,
        "failure": r.failure.map(|f| f.code()),
        "n_eff": r.n_eff,
        "side": r.side,
        "dims_ok": r.dims_ok,
        "theta_min_gap": r.theta_min_gap,
        "omega_min_gap": r.omega_min_gap,
        "theta_min_abs": r.theta_min_abs,
        "omega_min_abs": r.omega_min_abs,
        "spectrum_degenerate": r.spectrum_degenerate,
    })
}

fn optional(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), |v| format!("{v:.14e}"))
}

fn genericity_text(name: &str, r: &GenericityReport) -> String {
    format!(
        "genericity[{name}]: generic={} failure={} n_eff={} side={} dims_ok={} theta_min_gap={} omega_min_gap={} theta_min_abs={} omega_min_abs={} spectrum_degenerate={}",
        r.is_generic,
        r.failure.map_or("none", |f| f.code()),
        r.n_eff,
        r.side,
        r.dims_ok,
        optional(r.theta_min_gap),
        optional(r.omega_min_gap),
        optional(r.theta_min_abs),
        optional(r.omega_min_abs),
        r.spectrum_degenerate
    )
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

fn search_json(r: &SearchResult) -> Value {
    json!({
        "best_fidelity": r.best_fidelity,
        "best_restart": r.best_restart,
        "iterations": r.iterations,
        "best_tuple": r.best_tuple.iter().map(matrix_json).collect::<Vec<_>>(),
    })
}

fn search_text(r: &SearchResult) -> String {
    format!(
        "oracle: best_fidelity={:.14e} best_restart={} iterations={}",
        r.best_fidelity, r.best_restart, r.iterations[r.best_restart]
    )
}

fn exit_code(v: &Verdict) -> u8 {
    match v.outcome {
        Outcome::Equivalent => 0,
        Outcome::Inequivalent => 1,
        Outcome::Indeterminate => EXIT_INDETERMINATE,
    }
}

fn cmd_equiv(first: &Path, second: &Path, oracle: bool, common: &Common) -> CmdResult {
    let (a, b) = (load(first)?, load(second)?);
    let tol = common.tolerances();
    let verdict = decide_equivalence(&a, &b, &tol)?;
    let (ga, gb) = match &verdict.genericity {
        Some(pair) => pair.clone(),
        None => (
            genericity(&partial_trace(&a, &[0])?, &tol)?,
            genericity(&partial_trace(&b, &[0])?, &tol)?,
        ),
    };
    let search = if oracle {
        Some(alternating_search(
            &a,
            &b,
            &common.search(SearchConfig::default().max_iters),
        )?)
    } else {
        None
    };
    if common.json {
        print_json(&json!({
            "outcome": verdict.outcome.to_string(),
            "reason": verdict.reason.as_str(),
            "witness": verdict.witness.as_ref().map(witness_json),
            "genericity": [genericity_json(&ga), genericity_json(&gb)],
            "oracle": search.as_ref().map(search_json),
        }));
    } else {
        println!("verdict: {}", verdict.outcome);
        println!("reason: {}", verdict.reason);
        if let Some(w) = &verdict.witness {
            println!("witness: {w}");
        }
        println!("{}", genericity_text("first", &ga));
        println!("{}", genericity_text("second", &gb));
        if let Some(r) = &search {
            println!("{}", search_text(r));
        }
    }
    Ok(exit_code(&verdict))
}

fn cmd_search(first: &Path, second: &Path, max_iters: usize, common: &Common) -> CmdResult {
    let (a, b) = (load(first)?, load(second)?);
    let r = alternating_search(&a, &b, &common.search(max_iters))?;
    if common.json {
        print_json(&search_json(&r));
    } else {
        println!("{}", search_text(&r));
        for (k, u) in r.best_tuple.iter().enumerate() {
            println!("U[{}]:", luequiv::subsystem_name(k));
            for i in 0..u.nrows() {
                let row: Vec<String> = (0..u.ncols())
                    .map(|j| format!("{:+.9e}{:+.9e}i", u[(i, j)].re, u[(i, j)].im))
                    .collect();
                println!("  {}", row.join("  "));
            }
        }
    }
    Ok(0)
}

fn random_product(dims: &SubsystemDims, stream: &mut RandomStream) -> luequiv::Result<PureState> {
    let factors: Vec<Vec<Complex64>> = dims
        .as_slice()
        .iter()
        .map(|&d| (0..d).map(|_| stream.complex_gaussian()).collect())
        .collect();
    let amps = factors
        .iter()
        .fold(vec![Complex64::new(1.0, 0.0)], |acc, f| {
            acc.iter()
                .flat_map(|a| f.iter().map(move |b| a * b))
                .collect()
        });
    PureState::new(dims.clone(), amps)
}

fn generate(kind: Kind, dims: Vec<usize>, seed: u64) -> Result<PureState, Failure> {
    let dims = SubsystemDims::new(dims)?;
    let mut stream = RandomStream::new(seed).split("gen");
    let state = match kind {
        Kind::Random => random_pure_state(&dims, &mut stream),
        Kind::Product => random_product(&dims, &mut stream),
        Kind::Ghz => PureState::ghz(dims.clone()),
        Kind::W => PureState::w(dims.clone()),
    };
    state.map_err(|e| Failure::dims(format!("cannot generate this kind for dims {dims}: {e}")))
}

fn cmd_gen(kind: Kind, dims: Vec<usize>, seed: u64, output: Option<&Path>) -> CmdResult {
    let text = statefile::render(&generate(kind, dims, seed)?);
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::parse(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_selfcheck(full: bool, seed: u64) -> CmdResult {
    let mode = if full { Mode::Full } else { Mode::Quick };
    let start = Instant::now();
    let results = run_all(mode, seed);
    for r in &results {
        println!(
            "criterion {} ({}): {} [{:.2}s] {}",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.elapsed.as_secs_f64(),
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!(
        "selfcheck ({}): {} passed, {failed} failed [{:.2}s]",
        if full { "full" } else { "quick" },
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    Ok(u8::from(failed > 0))
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Invariants { file, common } => cmd_invariants(&file, &common),
        Command::Equiv {
            first,
            second,
            oracle,
            common,
        } => cmd_equiv(&first, &second, oracle, &common),
        Command::Search {
            first,
            second,
            max_iters,
            common,
        } => cmd_search(&first, &second, max_iters, &common),
        Command::Gen {
            kind,
            dims,
            seed,
            output,
        } => cmd_gen(kind, dims, seed, output.as_deref()),
        Command::Selfcheck { full, seed, .. } => cmd_selfcheck(full, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
