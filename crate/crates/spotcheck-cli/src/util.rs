//! CLI plumbing: exit-code-bearing errors, the flat key=value configuration
//! file, a 17-significant-digit JSON emitter, atomic file writes, and the
//! input readers shared by the subcommands.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use spotcheck::baselines::BaselineError;
use spotcheck::calibration::CalibError;
use spotcheck::chsh::ChshError;
use spotcheck::core::{CoreError, ReferenceDistribution, TrialRecord};
use spotcheck::optimizer::OptError;
use spotcheck::analytic::AnalyticError;

/// Error with a stable exit code: 2 input, 3 domain, 4 protocol violation.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or missing input (files, flags, overrides): exit 2.
    Input(String),
    /// Typed domain/infeasibility error from the library: exit 3.
    Domain { name: &'static str, msg: String },
    /// Workflow-discipline violation (β pre-registration mismatch): exit 4.
    Protocol(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Domain { .. } => 3,
            CliError::Protocol(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Domain { name, msg } => write!(f, "{name}: {msg}"),
            CliError::Protocol(m) => write!(f, "protocol violation: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn core_err_name(e: &CoreError) -> &'static str {
    match e {
        CoreError::NonPositiveFactor { .. } => "NonPositiveFactor",
        CoreError::MixedPower { .. } => "MixedPower",
        CoreError::LengthMismatch { .. } => "LengthMismatch",
        CoreError::InvalidParameter(_) => "InvalidParameter",
        CoreError::InvalidRecord { .. } => "InvalidRecord",
    }
}

pub fn core_err(e: CoreError) -> CliError {
    CliError::Domain { name: core_err_name(&e), msg: e.to_string() }
}

pub fn analytic_err(e: AnalyticError) -> CliError {
    let name = match &e {
        AnalyticError::DomainError { .. } => "DomainError",
        AnalyticError::BelowThreshold { .. } => "BelowThreshold",
        AnalyticError::GapTooLarge { .. } => "GapTooLarge",
        AnalyticError::PreconditionFailed(_) => "PreconditionFailed",
        AnalyticError::InvalidParameter(_) => "InvalidParameter",
        AnalyticError::Core(inner) => core_err_name(inner),
    };
    CliError::Domain { name, msg: e.to_string() }
}

pub fn calib_err(e: CalibError) -> CliError {
    let name = match &e {
        CalibError::TooFewSamples { .. } => "TooFewSamples",
        CalibError::InvalidParameter(_) => "InvalidParameter",
        CalibError::InfeasiblePlan { .. } => "InfeasiblePlan",
        CalibError::LadderExhausted { .. } => "LadderExhausted",
    };
    CliError::Domain { name, msg: e.to_string() }
}

pub fn opt_err(e: OptError) -> CliError {
    let name = match &e {
        OptError::NoFeasibleBeta => "NoFeasibleBeta",
        OptError::Divergent => "Divergent",
        OptError::InvalidParameter(_) => "InvalidParameter",
    };
    CliError::Domain { name, msg: e.to_string() }
}

pub fn baseline_err(e: BaselineError) -> CliError {
    let name = match &e {
        BaselineError::DomainError { .. } => "DomainError",
        BaselineError::NonBinaryValue { .. } => "NonBinaryValue",
        BaselineError::InvalidParameter(_) => "InvalidParameter",
        BaselineError::InvalidRecord { .. } => "InvalidRecord",
    };
    CliError::Domain { name, msg: e.to_string() }
}

/// Simulation errors: configuration problems are *input* errors (bad
/// overrides, exit 2); anything the inner machinery raises stays a domain
/// error.
pub fn chsh_err(e: ChshError) -> CliError {
    match e {
        ChshError::IHatOutOfRange(_) | ChshError::InvalidParameter(_) => {
            input_err(e.to_string())
        }
        ChshError::Core(inner) => core_err(inner),
        ChshError::Analytic(inner) => analytic_err(inner),
        ChshError::Optimizer(inner) => opt_err(inner),
        ChshError::Baseline(inner) => baseline_err(inner),
        ChshError::Csv(m) => input_err(format!("csv write failed: {m}")),
    }
}

// ---------------------------------------------------------------------------
// Flat key=value configuration file.
// ---------------------------------------------------------------------------

/// Key-value pairs from a `--config` file; keys normalized to snake_case.
/// Flags always override file values.
#[derive(Debug, Default)]
pub struct FileConfig(HashMap<String, String>);

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(input_err(format!(
                    "{} line {}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            map.insert(normalize_key(k.trim()), v.trim().to_string());
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| input_err(format!("config key {key}: not a number: {v:?}")))
            })
            .transpose()
    }

    pub fn u64(&self, key: &str) -> CliResult<Option<u64>> {
        self.raw(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| input_err(format!("config key {key}: not an integer: {v:?}")))
            })
            .transpose()
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(String::from)
    }
}

fn normalize_key(key: &str) -> String {
    key.replace('-', "_")
}

/// Flag value, else config value, else a "missing parameter" input error.
pub fn need_f64(cli: Option<f64>, cfg: &FileConfig, key: &str) -> CliResult<f64> {
    resolve(cli, cfg.f64(key)?, key)
}

pub fn need_u64(cli: Option<u64>, cfg: &FileConfig, key: &str) -> CliResult<u64> {
    resolve(cli, cfg.u64(key)?, key)
}

pub fn need_path(cli: Option<PathBuf>, cfg: &FileConfig, key: &str) -> CliResult<PathBuf> {
    resolve(cli, cfg.string(key).map(PathBuf::from), key)
}

fn resolve<T>(cli: Option<T>, cfg: Option<T>, key: &str) -> CliResult<T> {
    cli.or(cfg).ok_or_else(|| {
        input_err(format!(
            "missing required parameter `{key}` (pass --{} or set it in --config)",
            key.replace('_', "-")
        ))
    })
}

pub fn opt_f64(cli: Option<f64>, cfg: &FileConfig, key: &str, default: f64) -> CliResult<f64> {
    Ok(cli.or(cfg.f64(key)?).unwrap_or(default))
}

pub fn opt_string(cli: Option<String>, cfg: &FileConfig, key: &str, default: &str) -> String {
    cli.or_else(|| cfg.string(key)).unwrap_or_else(|| default.to_string())
}

// ---------------------------------------------------------------------------
// JSON output at 17 significant digits.
// ---------------------------------------------------------------------------

/// Minimal ordered JSON object builder. Floats print as `{:.16e}` (17
/// significant digits, round-trip exact); non-finite floats become the
/// strings `"inf"`, `"-inf"`, `"nan"` since JSON numbers cannot carry them.
#[derive(Debug)]
pub struct Json {
    buf: String,
    first: bool,
}

impl Json {
    pub fn new() -> Self {
        Self { buf: String::from("{"), first: true }
    }

    fn key(&mut self, k: &str) {
        if !self.first {
            self.buf.push(',');
        }
        self.first = false;
        self.buf.push('"');
        self.buf.push_str(k);
        self.buf.push_str("\":");
    }

    pub fn num(&mut self, k: &str, v: f64) -> &mut Self {
        self.key(k);
        if v.is_finite() {
            self.buf.push_str(&format!("{v:.16e}"));
        } else if v.is_nan() {
            self.buf.push_str("\"nan\"");
        } else if v > 0.0 {
            self.buf.push_str("\"inf\"");
        } else {
            self.buf.push_str("\"-inf\"");
        }
        self
    }

    pub fn int(&mut self, k: &str, v: u64) -> &mut Self {
        self.key(k);
        self.buf.push_str(&v.to_string());
        self
    }

    pub fn str_(&mut self, k: &str, v: &str) -> &mut Self {
        self.key(k);
        self.buf.push('"');
        for c in v.chars() {
            match c {
                '"' => self.buf.push_str("\\\""),
                '\\' => self.buf.push_str("\\\\"),
                '\n' => self.buf.push_str("\\n"),
                c if (c as u32) < 0x20 => self.buf.push_str(&format!("\\u{:04x}", c as u32)),
                c => self.buf.push(c),
            }
        }
        self.buf.push('"');
        self
    }

    pub fn bool_(&mut self, k: &str, v: bool) -> &mut Self {
        self.key(k);
        self.buf.push_str(if v { "true" } else { "false" });
        self
    }

    /// Nests a finished [`Json`] object under `k`.
    pub fn obj(&mut self, k: &str, v: Json) -> &mut Self {
        self.key(k);
        self.buf.push_str(&v.end());
        self
    }

    pub fn end(mut self) -> String {
        self.buf.push('}');
        self.buf
    }
}

// ---------------------------------------------------------------------------
// Atomic writes and output routing.
// ---------------------------------------------------------------------------

/// Write-temp-then-rename in the destination directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| input_err(format!("cannot create temp file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .map_err(|e| input_err(format!("write failed: {e}")))?;
    tmp.persist(path)
        .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Routes a JSON document to `--output` (atomically) or stdout.
pub fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    let doc = format!("{text}\n");
    match output {
        Some(path) => write_atomic(path, doc.as_bytes()),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Input readers.
// ---------------------------------------------------------------------------

/// One numeric value per line (the calibration-sample format). Blank lines
/// are skipped; anything unparsable is an input error naming the line.
pub fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            input_err(format!(
                "{} line {}: not a number: {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Reference-distribution file: CSV with header `x,p`.
pub fn read_dist(path: &Path) -> CliResult<ReferenceDistribution> {
    let file = std::fs::File::open(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut support = Vec::new();
    for (rowno, row) in rdr.deserialize::<(f64, f64)>().enumerate() {
        let (x, p) = row.map_err(|e| {
            input_err(format!("{} row {}: {e}", path.display(), rowno + 1))
        })?;
        support.push((x, p));
    }
    ReferenceDistribution::new(support)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))
}

/// Trial records, CSV (`i,y,x` header) or JSONL by extension or `--format`.
/// All parse/validation failures are input errors (exit 2).
pub fn read_records(path: &Path, format: Option<&str>) -> CliResult<Vec<TrialRecord>> {
    let fmt = match format {
        Some(f) => f.to_string(),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => "csv".into(),
            Some("jsonl") | Some("json") => "jsonl".into(),
            _ => {
                return Err(input_err(format!(
                    "cannot infer record format of {}; pass --format csv|jsonl",
                    path.display()
                )))
            }
        },
    };
    let file = std::fs::File::open(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let result = match fmt.as_str() {
        "csv" => spotcheck::core::read_records_csv(reader),
        "jsonl" => spotcheck::core::read_records_jsonl(reader),
        other => return Err(input_err(format!("unknown record format {other:?}"))),
    };
    result.map_err(|e| input_err(format!("{}: {e}", path.display())))
}
