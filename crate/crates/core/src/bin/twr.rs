use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use twr_core::db::{GestureDatabase, GestureKind, GesturePolicy, DEFAULT_CAPTURE_WINDOW_MS};
use twr_core::engine::CheckOptions;
use twr_core::harness::gen::{
    gen_activity_stream, gen_activity_trace, gen_prox_stream, gen_tap_trace, Activity, GenParams, ProxKind,
    RNG_ALGORITHM,
};
use twr_core::harness::scenario::{
    builtin_database, builtin_scenario, run_scenario, BuiltinScenario, ReplayConfig, Scenario,
};
use twr_core::harness::{prox_suite, tap_suite, ProxSuiteConfig, TapSuiteConfig};
use twr_core::prox::{run_detector, ProxConfig, DEFAULT_EPSILON_CM};
use twr_core::sensor::{parse_accel_trace, parse_prox_trace, AccelTrace, Millis, ProxTrace};
use twr_core::tap::{default_stride, match_trace, scan_stream, AxisRule};

/// Gesture-gated permission checks: training, detection, policy database,
/// scenario replay and synthetic evaluation.
///
/// Exit status: 0 success or match, 1 clean negative, 2 usage or input error.
#[derive(Parser)]
#[command(name = "twr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tap template from training traces and store it in the database.
    Train(TrainArgs),
    /// Score one accelerometer trace against a stored template.
    Match(MatchArgs),
    /// Run the proximity gesture detector over a proximity trace.
    ProxRun(ProxRunArgs),
    /// Inspect or edit the gesture database.
    Db(DbArgs),
    /// Replay a scenario through the detectors and the permission checker.
    Replay(ReplayArgs),
    /// Run a synthetic evaluation suite and print its confusion matrix.
    Eval(EvalArgs),
    /// Write a synthetic trace or scenario.
    Gen(GenArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Gesture database file (created if absent).
    #[arg(long)]
    db: PathBuf,
    /// Template identifier.
    #[arg(long = "id")]
    template_id: String,
    /// Samples per resampled trace.
    #[arg(short, long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value = "mean")]
    axis_rule: AxisRule,
    /// Also protect this service with the new template.
    #[arg(long)]
    service: Option<String>,
    /// Training traces in the accelerometer text format.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long = "id")]
    template_id: String,
    /// Slide the template over the trace instead of matching it whole.
    #[arg(long)]
    scan: bool,
    /// Scan stride in samples (default: a tenth of the template length).
    #[arg(long, requires = "scan")]
    stride: Option<usize>,
    trace: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct ProxFlags {
    #[arg(long, default_value_t = ProxConfig::default().wind_sz)]
    wind_sz: usize,
    #[arg(long, default_value_t = ProxConfig::default().wave_time_limit)]
    wave_time_limit_ms: Millis,
    #[arg(long, default_value_t = ProxConfig::default().unlock_time_frame)]
    unlock_time_frame_ms: Millis,
    /// Minimum reading difference that counts as a proximity change.
    #[arg(long, default_value_t = DEFAULT_EPSILON_CM)]
    prox_epsilon_cm: f64,
}

impl ProxFlags {
    fn config(&self) -> ProxConfig {
        ProxConfig {
            wind_sz: self.wind_sz,
            wave_time_limit: self.wave_time_limit_ms,
            unlock_time_frame: self.unlock_time_frame_ms,
        }
    }
}

#[derive(Args)]
struct ProxRunArgs {
    #[command(flatten)]
    prox: ProxFlags,
    trace: PathBuf,
}

#[derive(Args)]
struct DbArgs {
    #[arg(long)]
    db: PathBuf,
    #[command(subcommand)]
    action: DbAction,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Tap,
    Prox,
    Unprotected,
}

#[derive(Subcommand)]
enum DbAction {
    /// Print policies and templates.
    List,
    /// Add or replace the policy for a service.
    AddPolicy {
        #[arg(long)]
        service: String,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Template for tap policies.
        #[arg(long = "template")]
        template_id: Option<String>,
        #[arg(long, default_value_t = DEFAULT_CAPTURE_WINDOW_MS)]
        capture_window_ms: Millis,
    },
    /// Remove the policy for a service.
    RmPolicy { service: String },
    /// Remove a template no policy refers to.
    RmTemplate { id: String },
}

#[derive(Args)]
struct ReplayArgs {
    /// Scenario file.
    scenario: PathBuf,
    /// Gesture database (default: db.toml beside the scenario).
    #[arg(long)]
    db: Option<PathBuf>,
    /// Let tap checks also see accelerometer data up to this long after the request.
    #[arg(long)]
    wait_forward_ms: Option<Millis>,
    #[command(flatten)]
    prox: ProxFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Tap,
    Prox,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = GenParams::default().rng_seed)]
    seed: u64,
    /// Traces per test corpus.
    #[arg(long, default_value_t = 150)]
    corpus_size: usize,
    /// Training traces per tap template.
    #[arg(long, default_value_t = 30)]
    train_size: usize,
    #[arg(long, default_value = "mean")]
    axis_rule: AxisRule,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenWhat,
    #[arg(long, global = true, default_value_t = GenParams::default().rng_seed)]
    seed: u64,
    /// Output file (trace kinds) or directory (scenarios).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenWhat {
    /// Tap gesture window.
    Tap {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        taps: u8,
    },
    /// Benign accelerometer activity: walking, stairs, still, screen-touch, phone-movement.
    Accel {
        kind: Activity,
        /// Stream length; defaults to one 2 s window.
        #[arg(long)]
        duration_ms: Option<Millis>,
    },
    /// Proximity stream: wave, tap-rub, prox-walking, drop-fall, daily,
    /// prox-screen-touch, game-o1, game-o2, bump.
    Prox { kind: ProxKind },
    /// Built-in scenario directory with its database.
    Scenario {
        #[arg(value_enum)]
        name: ScenarioArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Pickpocket,
    LegitNfc,
    LegitSms,
}

impl From<ScenarioArg> for BuiltinScenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Pickpocket => BuiltinScenario::Pickpocket,
            ScenarioArg::LegitNfc => BuiltinScenario::LegitNfc,
            ScenarioArg::LegitSms => BuiltinScenario::LegitSms,
        }
    }
}

struct Failure(String);

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<ExitCode, Failure>;

const NEGATIVE: u8 = 1;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn read_accel(path: &Path) -> Result<AccelTrace, Failure> {
    parse_accel_trace(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn read_prox(path: &Path) -> Result<ProxTrace, Failure> {
    parse_prox_trace(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_or_new(path: &Path) -> Result<GestureDatabase, Failure> {
    if path.exists() {
        Ok(GestureDatabase::load(path)?)
    } else {
        Ok(GestureDatabase::new())
    }
}

fn train(a: TrainArgs) -> CmdResult {
    if a.traces.len() < 2 {
        return Err(Failure("need at least 2 traces".into()));
    }
    let traces = a.traces.iter().map(|p| read_accel(p)).collect::<Result<Vec<_>, _>>()?;
    let mut db = load_or_new(&a.db)?;
    let threshold = db.create_template(&a.template_id, &traces, a.n, a.axis_rule)?.threshold();
    if let Some(service) = a.service {
        db.register_policy(GesturePolicy::tap(service, &a.template_id))?;
    }
    db.save(&a.db)?;
    println!("threshold={threshold}");
    Ok(ExitCode::SUCCESS)
}

fn match_cmd(a: MatchArgs) -> CmdResult {
    let db = GestureDatabase::load(&a.db)?;
    let template =
        db.template(&a.template_id).ok_or_else(|| Failure(format!("unknown template {:?}", a.template_id)))?;
    let trace = read_accel(&a.trace)?;
    let matched = if a.scan {
        let stride = a.stride.unwrap_or_else(|| default_stride(template));
        let hits = scan_stream(&trace, template, stride)?;
        for h in &hits {
            println!("hit,{},{}", trace.samples()[h.offset].t, h.score);
        }
        let best = hits.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        if hits.is_empty() {
            println!("hits=0 matched=false");
        } else {
            println!("hits={} score={best} matched=true", hits.len());
        }
        !hits.is_empty()
    } else {
        let r = match_trace(&trace, template)?;
        println!("score={} matched={}", r.score, r.matched);
        r.matched
    };
    Ok(if matched { ExitCode::SUCCESS } else { ExitCode::from(NEGATIVE) })
}

fn prox_run(a: ProxRunArgs) -> CmdResult {
    let trace = read_prox(&a.trace)?;
    for w in run_detector(&trace, &a.prox.config(), a.prox.prox_epsilon_cm)? {
        println!("unlock,{},{}", w.start, w.end);
    }
    Ok(ExitCode::SUCCESS)
}

fn db_cmd(a: DbArgs) -> CmdResult {
    match a.action {
        DbAction::List => {
            let db = GestureDatabase::load(&a.db)?;
            for p in db.policies() {
                println!(
                    "policy,{},{},{},{}",
                    p.service,
                    p.kind.as_str(),
                    p.template_id.as_deref().unwrap_or(""),
                    p.capture_window
                );
            }
            for (id, t) in db.templates() {
                println!(
                    "template,{id},n={},threshold={},axis_rule={},from={}",
                    t.n(),
                    t.threshold(),
                    t.axis_rule(),
                    t.created_from()
                );
            }
        }
        DbAction::AddPolicy { service, kind, template_id, capture_window_ms } => {
            let mut db = load_or_new(&a.db)?;
            let kind = match kind {
                KindArg::Tap => GestureKind::UserDependentTap,
                KindArg::Prox => GestureKind::UserIndependentProx,
                KindArg::Unprotected => GestureKind::Unprotected,
            };
            db.register_policy(GesturePolicy { service, kind, template_id, capture_window: capture_window_ms })?;
            db.save(&a.db)?;
        }
        DbAction::RmPolicy { service } => {
            let mut db = GestureDatabase::load(&a.db)?;
            if db.remove_policy(&service) {
                db.save(&a.db)?;
            } else {
                eprintln!("warning: no policy for service {service:?}");
            }
        }
        DbAction::RmTemplate { id } => {
            let mut db = GestureDatabase::load(&a.db)?;
            if db.remove_template(&id)? {
                db.save(&a.db)?;
            } else {
                eprintln!("warning: no template {id:?}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn replay(a: ReplayArgs) -> CmdResult {
    let scenario = Scenario::load(&a.scenario)?;
    let db_path = a.db.unwrap_or_else(|| a.scenario.parent().unwrap_or(Path::new(".")).join("db.toml"));
    let db = GestureDatabase::load(&db_path)?;
    let cfg = ReplayConfig {
        prox: a.prox.config(),
        epsilon: a.prox.prox_epsilon_cm,
        check: CheckOptions { wait_forward_ms: a.wait_forward_ms, ..CheckOptions::default() },
    };
    let outcome = run_scenario(&scenario, &db, &cfg)?;
    print!("{}", outcome.log_text());
    for m in &outcome.mismatches {
        let reason = m.expected.reason.map(|r| format!(",{}", r.as_str())).unwrap_or_default();
        eprintln!("mismatch: {} expected {}{reason}", m.record, m.expected.outcome.as_str());
    }
    println!("forwards={} rejects={}", outcome.forwards(), outcome.rejects());
    println!("mismatches={}", outcome.mismatches.len());
    Ok(if outcome.mismatches.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(NEGATIVE) })
}

fn eval(a: EvalArgs) -> CmdResult {
    let params = GenParams::default().with_seed(a.seed);
    let report = match a.suite {
        Suite::Tap => tap_suite(&TapSuiteConfig {
            params,
            train_size: a.train_size,
            corpus_size: a.corpus_size,
            axis_rule: a.axis_rule,
            ..TapSuiteConfig::default()
        })?,
        Suite::Prox => {
            prox_suite(&ProxSuiteConfig { params, corpus_size: a.corpus_size, ..ProxSuiteConfig::default() })?
        }
    };
    print!("{}", report.table());
    print!("{}", report.machine_lines());
    eprintln!("runtime_ms={:.1}", report.runtime.as_secs_f64() * 1e3);
    Ok(ExitCode::SUCCESS)
}

fn gen(a: GenArgs) -> CmdResult {
    let p = GenParams::default().with_seed(a.seed);
    let (what, text) = match a.what {
        GenWhat::Scenario { name } => {
            let which = BuiltinScenario::from(name);
            let dir = a.out.unwrap_or_else(|| PathBuf::from(which.slug()));
            let scenario = builtin_scenario(which, &p)?;
            let path = scenario.save(&dir)?;
            builtin_database(&p)?.save(dir.join("db.toml"))?;
            println!("wrote {}", path.display());
            return Ok(ExitCode::SUCCESS);
        }
        GenWhat::Tap { taps } => (format!("tap taps={taps}"), gen_tap_trace(&p.with_taps(taps))?.to_text()),
        GenWhat::Accel { kind, duration_ms } => {
            let trace = match duration_ms {
                Some(d) => gen_activity_stream(kind, d, &p)?,
                None => gen_activity_trace(kind, &p)?,
            };
            (format!("accel {kind}"), trace.to_text())
        }
        GenWhat::Prox { kind } => (format!("prox {}", kind.slug()), gen_prox_stream(kind, &p)?.to_text()),
    };
    let text = format!("# generator: twr gen {what} seed={} rng={RNG_ALGORITHM}\n{text}", a.seed);
    match a.out {
        Some(path) => fs::write(&path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Match(a) => match_cmd(a),
        Command::ProxRun(a) => prox_run(a),
        Command::Db(a) => db_cmd(a),
        Command::Replay(a) => replay(a),
        Command::Eval(a) => eval(a),
        Command::Gen(a) => gen(a),
    };
    result.unwrap_or_else(|Failure(msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    })
}
