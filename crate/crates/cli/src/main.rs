use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use padicx::anticyclo::{finite_character, trivial_character, ClassGroupTower, FiniteCharacter, LevelIndex, LogFunctional};
use padicx::checks;
use padicx::distribution::{default_z0, j_of_q, l_invariant, tate_parameter, DistError};
use padicx::harmonic::{HarmonicCocycle, HarmonicError};
use padicx::local_factors::{parse_rational, toric_p_value, LocalParams, LocalParamsFile, ToricCase};
use padicx::padic::{default_precision, LogBranch, PadicNumber};
use padicx::theta::{l_series, l_value, script_l, theta_element, GrossPointData, GrossPointFile, ThetaError};
use padicx::tree::HyperbolicAxis;

#[derive(Parser)]
#[command(name = "padicx", version, about = "p-adic L-invariants, theta elements and local factors")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Absolute p-adic precision; defaults to PADICX_PRECISION or 20.
    #[arg(long, global = true)]
    precision: Option<i64>,
    /// Logarithm branch: `iwasawa` (u = p) or `u:<value>`.
    #[arg(long, default_value = "iwasawa", global = true)]
    branch: String,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Teitelbaum L-invariant of a periodic cocycle, or log(q)/ord(q) for a Tate parameter.
    Linvariant {
        #[arg(long, conflicts_with = "j", required_unless_present = "j")]
        cocycle: Option<PathBuf>,
        /// j-invariant with negative valuation, as `p^v * u + O(p^N)` or a rational with --p.
        #[arg(long)]
        j: Option<String>,
        /// Period q̃ for a cocycle file without one.
        #[arg(long)]
        qtilde: Option<String>,
        #[arg(long)]
        p: Option<u32>,
        /// Riemann-sum depth.
        #[arg(long, default_value_t = 8)]
        depth: i64,
    },
    /// Tate parameter q with j(q) = j.
    TateQ {
        #[arg(long)]
        j: String,
        #[arg(long)]
        p: Option<u32>,
    },
    /// Theta elements of a Gross-point data file.
    Theta {
        #[arg(long)]
        data: PathBuf,
        /// Level such as `[3]`; all levels when absent.
        #[arg(long)]
        level: Option<String>,
    },
    /// Θ(χ) and its square at a finite character (trivial when --chi is absent).
    LfunEval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        chi: Option<PathBuf>,
        /// Unit constant multiplied into the reported square.
        #[arg(long)]
        prefactor: Option<String>,
    },
    /// Taylor coefficients of the family in a direction s.
    LfunDeriv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        chi: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// JSON map from σ to the direction component.
        #[arg(long)]
        direction: Option<PathBuf>,
        #[arg(long)]
        prefactor: Option<String>,
    },
    /// Local toric integral for one case.
    LocalFactor {
        #[arg(long)]
        case: String,
        #[arg(long)]
        params: PathBuf,
    },
    /// Runs an acceptance suite.
    Check { suite: String },
}

enum Failure {
    Usage(String),
    Validation(String, Value),
    Convergence(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(..) => 1,
            Failure::Convergence(_) => 2,
            Failure::Usage(_) => 3,
        }
    }
}

fn validation(msg: impl ToString) -> Failure {
    Failure::Validation(msg.to_string(), Value::Null)
}

impl From<ThetaError> for Failure {
    fn from(e: ThetaError) -> Self {
        match e {
            ThetaError::NoStabilization { .. } | ThetaError::DepthTooShallow(_) => Failure::Convergence(e.to_string()),
            ThetaError::Dist(d) => d.into(),
            other => validation(other),
        }
    }
}

impl From<DistError> for Failure {
    fn from(e: DistError) -> Self {
        match e {
            DistError::DepthTooShallow { .. } | DistError::OutOfTable(_) => Failure::Convergence(e.to_string()),
            other => validation(other),
        }
    }
}

impl From<HarmonicError> for Failure {
    fn from(e: HarmonicError) -> Self {
        match e {
            HarmonicError::Invalid(report) => {
                let list: Vec<Value> = report.violations.iter().map(|v| json!(v.to_string())).collect();
                Failure::Validation("invalid cocycle".into(), Value::Array(list))
            }
            HarmonicError::OutOfTable(_) => Failure::Convergence(e.to_string()),
            other => validation(other),
        }
    }
}

struct Config {
    global: Global,
    prec: i64,
}

impl Config {
    fn echo(&self, command: &str) -> Value {
        json!({ "command": command, "precision": self.prec, "branch": self.global.branch })
    }

    /// Parses a p-adic value: the canonical string, or a rational when the prime is known.
    fn padic(&self, s: &str, p: Option<u32>) -> Result<PadicNumber, Failure> {
        if s.contains("O(") {
            return s.parse::<PadicNumber>().map_err(|e| Failure::Usage(format!("{s}: {e}")));
        }
        let p = p.ok_or_else(|| Failure::Usage(format!("{s} needs --p or the form p^v * u + O(p^N)")))?;
        let q = parse_rational(s).map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(PadicNumber::from_rational(p, &q, self.prec))
    }

    fn branch(&self, p: u32) -> Result<LogBranch, Failure> {
        let spec = self.global.branch.trim();
        if spec == "iwasawa" {
            return Ok(LogBranch::iwasawa(p, self.prec));
        }
        let u = spec.strip_prefix("u:").ok_or_else(|| Failure::Usage(format!("branch {spec:?}: use iwasawa or u:<value>")))?;
        let u = self.padic(u, Some(p))?;
        if u.p() != p {
            return Err(Failure::Usage(format!("branch point is {}-adic, data is {p}-adic", u.p())));
        }
        LogBranch::new(u).map_err(|e| Failure::Usage(format!("branch: {e}")))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn num(x: &PadicNumber) -> Value {
    json!(x.to_string())
}

fn linvariant(
    cfg: &Config,
    cocycle: Option<&Path>,
    j: Option<&str>,
    qtilde: Option<&str>,
    p: Option<u32>,
    depth: i64,
) -> Result<Value, Failure> {
    if let Some(j) = j {
        let j = cfg.padic(j, p)?;
        let q = tate_parameter(&j)?;
        let ord = q.valuation().ok_or_else(|| validation("q vanishes"))?;
        let br = cfg.branch(q.p())?;
        let log = br.log(&q).map_err(validation)?;
        return Ok(json!({
            "source": "tate",
            "p": q.p(),
            "q": num(&q),
            "ord": ord,
            "log": num(&log),
            "l_invariant": num(&log.div_int(ord)),
        }));
    }
    let path = cocycle.expect("clap requires one input");
    let c = HarmonicCocycle::from_json(&read(path)?)?;
    let axis = match (qtilde, c.period()) {
        (Some(q), _) => HyperbolicAxis::new(&cfg.padic(q, Some(c.p()))?).map_err(validation)?,
        (None, Some(a)) => a.clone(),
        (None, None) => return Err(Failure::Usage("cocycle has no period; pass --qtilde".into())),
    };
    let br = cfg.branch(c.p())?;
    let prec = cfg.prec.min(c.prec());
    let li = l_invariant(&c, &axis, &br, &default_z0(c.p(), prec), depth)?;
    Ok(json!({
        "source": "cocycle",
        "p": c.p(),
        "depth": depth,
        "translation_length": axis.translation_length(),
        "lambda": num(&li.lambda.value),
        "delta": num(&li.delta),
        "l_invariant": num(&li.value.value),
        "reported_precision": li.value.precision(),
    }))
}

fn tate_q(cfg: &Config, j: &str, p: Option<u32>) -> Result<Value, Failure> {
    let j = cfg.padic(j, p)?;
    let q = tate_parameter(&j)?;
    let back = j_of_q(&q)?;
    Ok(json!({
        "p": q.p(),
        "q": num(&q),
        "ord": q.valuation(),
        "j_recomputed_agreement": back.agreement(&j),
    }))
}

/// Loads a data file and the tower it names (relative to the data file).
fn load_data(path: &Path) -> Result<(GrossPointData, Vec<LogFunctional>), Failure> {
    let f: GrossPointFile = serde_json::from_str(&read(path)?).map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let tower_path = path.parent().unwrap_or(Path::new(".")).join(&f.tower);
    let (tower, logs) = ClassGroupTower::from_json(&read(&tower_path)?).map_err(validation)?;
    let data = GrossPointData::from_file(&f, tower)?;
    let violations = data.trace_violations()?;
    if !violations.is_empty() {
        let list = violations.into_iter().map(Value::String).collect();
        return Err(Failure::Validation("U_p-trace invariant fails".into(), Value::Array(list)));
    }
    Ok((data, logs))
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CharacterFile {
    level: String,
    values: Vec<String>,
}

fn load_character(cfg: &Config, data: &GrossPointData, path: Option<&Path>) -> Result<FiniteCharacter, Failure> {
    let Some(path) = path else {
        return trivial_character(data.tower(), data.p(), data.prec()).map_err(validation);
    };
    let f: CharacterFile = serde_json::from_str(&read(path)?).map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let level: LevelIndex = f.level.parse().map_err(validation)?;
    let values = f.values.iter().map(|v| cfg.padic(v, Some(data.p()))).collect::<Result<Vec<_>, _>>()?;
    finite_character(data.tower(), &level, values).map_err(validation)
}

fn prefactor(cfg: &Config, s: Option<&str>, p: u32) -> Result<Option<PadicNumber>, Failure> {
    s.map(|s| cfg.padic(s, Some(p))).transpose()
}

fn theta(path: &Path, level: Option<&str>) -> Result<Value, Failure> {
    let (data, _) = load_data(path)?;
    let levels: Vec<LevelIndex> = match level {
        Some(l) => vec![l.parse().map_err(validation)?],
        None => data.levels().cloned().collect(),
    };
    let mut out = Map::new();
    for n in levels {
        let th = theta_element(&data, &n)?;
        let coeffs: Map<String, Value> =
            th.coeffs().iter().filter(|(_, v)| !v.is_zero()).map(|(g, v)| (g.to_string(), num(v))).collect();
        out.insert(format!("n={n}"), Value::Object(coeffs));
    }
    Ok(json!({ "p": data.p(), "theta": out }))
}

fn lfun_eval(cfg: &Config, path: &Path, chi: Option<&Path>, pre: Option<&str>) -> Result<Value, Failure> {
    let (data, _) = load_data(path)?;
    let chi = load_character(cfg, &data, chi)?;
    let t = script_l(&data, &chi)?;
    let sq = l_value(&data, &chi)?;
    let mut out = json!({ "p": data.p(), "conductor": chi.conductor().to_string(), "theta_chi": num(&t), "l_value": num(&sq) });
    if let Some(c) = prefactor(cfg, pre, data.p())? {
        out["l_value_normalized"] = num(&(&c * &sq));
    }
    Ok(out)
}

fn lfun_deriv(
    cfg: &Config,
    path: &Path,
    chi: Option<&Path>,
    order: u32,
    direction: Option<&Path>,
    pre: Option<&str>,
) -> Result<Value, Failure> {
    let (data, logs) = load_data(path)?;
    if logs.is_empty() {
        return Err(validation("the tower file carries no log functionals"));
    }
    let chi = load_character(cfg, &data, chi)?;
    let dir: BTreeMap<String, PadicNumber> = match direction {
        None => logs.iter().map(|l| (l.sigma().to_string(), PadicNumber::one(data.p(), data.prec()))).collect(),
        Some(d) => {
            let raw: BTreeMap<String, String> =
                serde_json::from_str(&read(d)?).map_err(|e| validation(format!("{}: {e}", d.display())))?;
            raw.iter().map(|(k, v)| Ok((k.clone(), cfg.padic(v, Some(data.p()))?))).collect::<Result<_, Failure>>()?
        }
    };
    let s = l_series(&data, &chi, &logs, &dir, order)?;
    let mut out = json!({
        "p": data.p(),
        "order": order,
        "coeffs": s.coeffs.iter().map(num).collect::<Vec<_>>(),
        "square": s.square.iter().map(num).collect::<Vec<_>>(),
        "levels": s.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
    });
    if let Some(c) = prefactor(cfg, pre, data.p())? {
        out["square_normalized"] = Value::Array(s.square.iter().map(|x| num(&(&c * x))).collect());
    }
    Ok(out)
}

fn local_factor(case: &str, params: &Path) -> Result<Value, Failure> {
    let case = ToricCase::parse(case).ok_or_else(|| {
        let names: Vec<&str> = ToricCase::ALL.iter().map(|c| c.name()).collect();
        Failure::Usage(format!("unknown case {case:?}; expected one of {}", names.join(", ")))
    })?;
    let f: LocalParamsFile =
        serde_json::from_str(&read(params)?).map_err(|e| validation(format!("{}: {e}", params.display())))?;
    let p = LocalParams::try_from(f).map_err(validation)?;
    let v = toric_p_value(case, &p).map_err(validation)?;
    Ok(json!({ "case": case.name(), "place": p.place, "value": v.to_string(), "exact": true }))
}

fn check(suite: &str) -> Result<Value, Failure> {
    let names: Vec<&str> = checks::SUITES.iter().map(|(n, _)| *n).collect();
    let outcomes = checks::run_suite(suite)
        .ok_or_else(|| Failure::Usage(format!("unknown suite {suite:?}; expected one of {}", names.join(", "))))?;
    let rows: Vec<Value> = outcomes
        .iter()
        .map(|o| json!({ "id": o.id, "name": o.name, "passed": o.passed, "detail": o.detail }))
        .collect();
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let report = json!({ "suite": suite, "passed": outcomes.len() - failed, "failed": failed, "criteria": rows });
    if failed > 0 {
        return Err(Failure::Validation(format!("{failed} criteria failed"), report));
    }
    Ok(report)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") }, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn render(format: Format, v: &Value) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(v).expect("serializable"),
        Format::Tsv => {
            let mut rows = Vec::new();
            flatten("", v, &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            rows.iter().map(|(k, x)| format!("{k:<width$}\t{x}")).collect::<Vec<_>>().join("\n")
        }
    }
}

fn dispatch(cfg: &Config, cmd: &Command) -> Result<(&'static str, Value), Failure> {
    Ok(match cmd {
        Command::Linvariant { cocycle, j, qtilde, p, depth } => {
            ("linvariant", linvariant(cfg, cocycle.as_deref(), j.as_deref(), qtilde.as_deref(), *p, *depth)?)
        }
        Command::TateQ { j, p } => ("tate-q", tate_q(cfg, j, *p)?),
        Command::Theta { data, level } => ("theta", theta(data, level.as_deref())?),
        Command::LfunEval { data, chi, prefactor } => {
            ("lfun-eval", lfun_eval(cfg, data, chi.as_deref(), prefactor.as_deref())?)
        }
        Command::LfunDeriv { data, chi, order, direction, prefactor } => (
            "lfun-deriv",
            lfun_deriv(cfg, data, chi.as_deref(), *order, direction.as_deref(), prefactor.as_deref())?,
        ),
        Command::LocalFactor { case, params } => ("local-factor", local_factor(case, params)?),
        Command::Check { suite } => ("check", check(suite)?),
    })
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Linvariant { .. } => "linvariant",
        Command::TateQ { .. } => "tate-q",
        Command::Theta { .. } => "theta",
        Command::LfunEval { .. } => "lfun-eval",
        Command::LfunDeriv { .. } => "lfun-deriv",
        Command::LocalFactor { .. } => "local-factor",
        Command::Check { .. } => "check",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let prec = cli.global.precision.unwrap_or_else(default_precision);
    if prec <= 0 {
        eprintln!("error: precision must be positive");
        return ExitCode::from(3);
    }
    let cfg = Config { global: cli.global.clone(), prec };
    match dispatch(&cfg, &cli.command) {
        Ok((name, result)) => {
            let out = json!({ "config": cfg.echo(name), "result": result });
            println!("{}", render(cfg.global.format, &out));
            ExitCode::SUCCESS
        }
        Err(f) => {
            let code = f.code();
            let (kind, msg, details) = match f {
                Failure::Usage(m) => ("usage", m, Value::Null),
                Failure::Validation(m, d) => ("validation", m, d),
                Failure::Convergence(m) => ("convergence", m, Value::Null),
            };
            let out = json!({ "config": cfg.echo(command_name(&cli.command)), "error": { "kind": kind, "message": msg, "details": details } });
            if kind == "validation" && !details.is_null() {
                println!("{}", render(cfg.global.format, &out));
            }
            eprintln!("error ({kind}): {msg}");
            ExitCode::from(code)
        }
    }
}
