//! End-to-end driver: parse, infer and specialize, compress, emit, verify.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambda_ir::{beta_reduce, parse_program, pretty_print, print_program, ParseError, Prim, Program, Term};
use crate::lex::Dialect;
use crate::mdl::{compress_program, CompressionPlan, MdlConfig, MdlError};
use crate::metrics::{compression_rate, symbolic_density, tokenize, DensityReport, MetricsError, DEFAULT_C};
use crate::ski::{behavioral_equal, gael_print, gael_print_program, ski_decode, SkiProgram, SkiTerm, Verdict};
use crate::types::{infer_map, specialize_operators, ContextEnv, TypeTag, VarOrigin, DEFAULT_MAX_VARIABLES};

pub const SCHEMA_VERSION: u32 = 1;
pub const SOURCE_EXTENSION: &str = "lc";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("program has no definitions and no main expression")]
    EmptyProgram,
    #[error(transparent)]
    Compress(#[from] MdlError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no .{SOURCE_EXTENSION} files in {0}")]
    EmptyCorpus(PathBuf),
    #[error("{0}")]
    Emit(#[from] EmitError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mdl: MdlConfig,
    /// Constant of the density lower-bound diagnostic.
    pub c: f64,
    pub env: ContextEnv,
    /// Largest independent group of type variables enumerated exactly.
    pub type_limit: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mdl: MdlConfig::default(),
            c: DEFAULT_C,
            env: ContextEnv::default(),
            type_limit: DEFAULT_MAX_VARIABLES,
        }
    }
}

/// Milliseconds per stage. Never part of any determinism comparison.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub parse_ms: f64,
    pub infer_ms: f64,
    pub compress_ms: f64,
    pub emit_ms: f64,
    pub verify_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    pub name: String,
    pub rule_set: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema_version: u32,
    pub program_id: String,
    pub p_tokens: usize,
    pub s_tokens: usize,
    pub cr: f64,
    pub density_source: DensityReport,
    pub density_gael: DensityReport,
    /// `equal`, `different` or `unknown`; the worst unit verdict.
    pub equivalence: String,
    pub units: Vec<UnitReport>,
    pub objective: f64,
    pub lambda_weight: f64,
    /// Encoding length in the unit the objective was computed with.
    pub length: usize,
    pub distance: f64,
    pub map_types: Vec<String>,
    pub timings: Timings,
}

impl PipelineReport {
    pub fn is_faithful(&self) -> bool {
        self.equivalence == "equal"
    }

    /// The report with timings zeroed, for byte comparisons.
    pub fn without_timings(&self) -> PipelineReport {
        PipelineReport {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub gael: String,
    pub lambda: String,
    pub pseudo: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub plan: CompressionPlan,
    pub artifacts: Artifacts,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Infer MAP types per unit and rewrite generic operators. Units whose
/// inference does not fit the limit are left as they are. References to
/// earlier definitions that are lambdas are typed `Func` unless the
/// configured environment says otherwise.
pub fn specialize(prog: &Program, cfg: &PipelineConfig) -> (Program, Vec<String>) {
    let mut summary = Vec::new();
    let mut env = cfg.env.clone();
    let mut one = |name: &str, body: &Term, env: &ContextEnv| match infer_map(body, env, cfg.type_limit) {
        Ok(inf) => {
            for v in &inf.variables {
                if !matches!(v.origin, VarOrigin::Literal(_)) {
                    summary.push(format!("{name}.{v}={}", inf.map[&v.id]));
                }
            }
            specialize_operators(body, env, &inf.map)
        }
        Err(e) => {
            summary.push(format!("{name}: {e}"));
            body.clone()
        }
    };
    let mut defs = Vec::new();
    for (n, b) in &prog.defs {
        defs.push((n.clone(), one(n, b, &env)));
        if matches!(b, Term::Lam(..)) && !env.bindings.contains_key(n) {
            env.bindings.insert(n.clone(), TypeTag::Func);
        }
    }
    let main = prog.main.as_ref().map(|m| one("main", m, &env));
    (Program { defs, main }, summary)
}

fn worst(verdicts: &[Verdict]) -> &'static str {
    if verdicts.iter().any(|v| matches!(v, Verdict::Different { .. })) {
        "different"
    } else if verdicts.iter().any(|v| *v == Verdict::Unknown) {
        "unknown"
    } else {
        "equal"
    }
}

/// Compare each original unit (all definitions inlined) against its
/// encoding (all definitions, including extracted ones, inlined).
fn verify(source: &Program, encoded: &SkiProgram, cfg: &MdlConfig) -> Vec<Verdict> {
    let mut out = Vec::new();
    for (i, (name, _)) in source.defs.iter().enumerate() {
        let src = source.inlined_def(i);
        let idx = encoded
            .defs
            .iter()
            .position(|(n, _)| n == name)
            .expect("encoded program keeps every source definition");
        let enc = encoded.inlined_def(idx);
        out.push(behavioral_equal(&src, &enc, &cfg.probes, cfg.fuel));
    }
    if let (Some(src), Some(enc)) = (source.inlined_main(), encoded.inlined_main()) {
        out.push(behavioral_equal(&src, &enc, &cfg.probes, cfg.fuel));
    }
    out
}

pub fn run_pipeline(source: &str, program_id: &str, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let t = Instant::now();
    let prog = parse_program(source)?;
    if prog.defs.is_empty() && prog.main.is_none() {
        return Err(PipelineError::EmptyProgram);
    }
    let p_tokens = tokenize(source, Dialect::Source).map_err(ParseError::from)?.len();
    let parse_ms = ms(t);

    let t = Instant::now();
    let (specialized, map_types) = specialize(&prog, cfg);
    let infer_ms = ms(t);

    let t = Instant::now();
    let plan = compress_program(&specialized, &cfg.mdl)?;
    let compress_ms = ms(t);

    let t = Instant::now();
    let gael = gael_print_program(&plan.encoded);
    let artifacts = Artifacts {
        lambda: emit_program_lambda(&plan.encoded),
        pseudo: emit_program_pseudo(&plan.encoded, cfg.mdl.fuel),
        gael,
    };
    let s_tokens = tokenize(&artifacts.gael, Dialect::Gael).map_err(ParseError::from)?.len();
    let emit_ms = ms(t);

    let t = Instant::now();
    let verdicts = verify(&prog, &plan.encoded, &cfg.mdl);
    let verify_ms = ms(t);

    let units = plan
        .rules
        .iter()
        .zip(&verdicts)
        .map(|((name, rule), v)| UnitReport {
            name: name.clone(),
            rule_set: rule.to_string(),
            verdict: v.clone(),
        })
        .collect();
    let report = PipelineReport {
        schema_version: SCHEMA_VERSION,
        program_id: program_id.to_string(),
        p_tokens,
        s_tokens,
        cr: compression_rate(s_tokens, p_tokens)?,
        density_source: symbolic_density(source.as_bytes(), cfg.c)?,
        density_gael: symbolic_density(artifacts.gael.as_bytes(), cfg.c)?,
        equivalence: worst(&verdicts).to_string(),
        units,
        objective: plan.objective,
        lambda_weight: cfg.mdl.lambda_weight,
        length: plan.token_length,
        distance: plan.distance,
        map_types,
        timings: Timings {
            parse_ms,
            infer_ms,
            compress_ms,
            emit_ms,
            verify_ms,
        },
    };
    Ok(PipelineOutput {
        report,
        plan,
        artifacts,
    })
}

pub fn run_file(path: &Path, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let source = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    run_pipeline(&source, &id, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub file: String,
    pub report: Option<PipelineReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusAggregates {
    pub programs: usize,
    pub failed: usize,
    pub mean_cr: f64,
    pub median_cr: f64,
    /// Fraction of all files whose verdict is `equal`.
    pub equivalence_pass_rate: f64,
    pub mean_rho_source: f64,
    pub mean_rho_gael: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub schema_version: u32,
    pub entries: Vec<CorpusEntry>,
    pub aggregates: CorpusAggregates,
}

impl CorpusReport {
    pub fn reports(&self) -> impl Iterator<Item = &PipelineReport> {
        self.entries.iter().filter_map(|e| e.report.as_ref())
    }

    pub fn without_timings(&self) -> CorpusReport {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.report = e.report.as_ref().map(|r| r.without_timings());
        }
        out
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let io = |source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == SOURCE_EXTENSION) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if files.is_empty() {
        return Err(PipelineError::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(files)
}

/// Run every source file in `dir`, in parallel, reporting in filename
/// order.
pub fn run_corpus(dir: &Path, cfg: &PipelineConfig) -> Result<CorpusReport, PipelineError> {
    let files = corpus_files(dir)?;
    let entries: Vec<CorpusEntry> = std::thread::scope(|scope| {
        let handles: Vec<_> = files
            .iter()
            .map(|f| scope.spawn(move || run_file(f, cfg)))
            .collect();
        files
            .iter()
            .zip(handles)
            .map(|(f, h)| {
                let file = f.file_name().unwrap().to_string_lossy().into_owned();
                match h.join().expect("pipeline worker panicked") {
                    Ok(out) => CorpusEntry {
                        file,
                        report: Some(out.report),
                        error: None,
                    },
                    Err(e) => CorpusEntry {
                        file,
                        report: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    let reports: Vec<&PipelineReport> = entries.iter().filter_map(|e| e.report.as_ref()).collect();
    let crs: Vec<f64> = reports.iter().map(|r| r.cr).collect();
    let aggregates = CorpusAggregates {
        programs: entries.len(),
        failed: entries.len() - reports.len(),
        mean_cr: mean(&crs),
        median_cr: median(&crs),
        equivalence_pass_rate: reports.iter().filter(|r| r.is_faithful()).count() as f64 / entries.len() as f64,
        mean_rho_source: mean(&reports.iter().map(|r| r.density_source.rho).collect::<Vec<_>>()),
        mean_rho_gael: mean(&reports.iter().map(|r| r.density_gael.rho).collect::<Vec<_>>()),
    };
    Ok(CorpusReport {
        schema_version: SCHEMA_VERSION,
        entries,
        aggregates,
    })
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    program_id: &'a str,
    p_tokens: usize,
    s_tokens: usize,
    cr: f64,
    equivalence: &'a str,
    objective: f64,
    distance: f64,
    rho_source: f64,
    rho_gael: f64,
}

/// One summary row per successful report.
pub fn reports_csv<'a>(reports: impl IntoIterator<Item = &'a PipelineReport>) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(CsvRow {
            program_id: &r.program_id,
            p_tokens: r.p_tokens,
            s_tokens: r.s_tokens,
            cr: r.cr,
            equivalence: &r.equivalence,
            objective: r.objective,
            distance: r.distance,
            rho_source: r.density_source.rho,
            rho_gael: r.density_gael.rho,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Gael,
    Lambda,
    Pseudo,
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gael" => Ok(Target::Gael),
            "lambda" => Ok(Target::Lambda),
            "pseudo" | "pseudocode" => Ok(Target::Pseudo),
            other => Err(format!("unknown target {other:?} (expected gael, lambda or pseudo)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("term contains a lambda and cannot be emitted as GAEL: {0}")]
    Incompatible(String),
}

#[derive(Debug, Clone, Copy)]
pub enum Emittable<'a> {
    Lambda(&'a Term),
    Ski(&'a SkiTerm),
}

impl<'a> From<&'a Term> for Emittable<'a> {
    fn from(t: &'a Term) -> Self {
        Emittable::Lambda(t)
    }
}

impl<'a> From<&'a SkiTerm> for Emittable<'a> {
    fn from(t: &'a SkiTerm) -> Self {
        Emittable::Ski(t)
    }
}

fn lambda_free(t: &Term) -> Option<SkiTerm> {
    Some(match t {
        Term::Lam(..) => return None,
        Term::Var(v) => SkiTerm::Var(v.clone()),
        Term::App(f, a) => SkiTerm::app(lambda_free(f)?, lambda_free(a)?),
        Term::Int(n) => SkiTerm::Int(*n),
        Term::Bool(b) => SkiTerm::Bool(*b),
        Term::Prim(p) => SkiTerm::Prim(*p),
    })
}

pub fn emit_target<'a>(t: impl Into<Emittable<'a>>, target: Target, fuel: u64) -> Result<String, EmitError> {
    let t = t.into();
    Ok(match (t, target) {
        (Emittable::Ski(s), Target::Gael) => gael_print(s),
        (Emittable::Lambda(l), Target::Gael) => {
            gael_print(&lambda_free(l).ok_or_else(|| EmitError::Incompatible(pretty_print(l)))?)
        }
        (Emittable::Ski(s), Target::Lambda) => pretty_print(&ski_decode(s)),
        (Emittable::Lambda(l), Target::Lambda) => pretty_print(l),
        (Emittable::Ski(s), Target::Pseudo) => render_procedure("f", &ski_decode(s), fuel),
        (Emittable::Lambda(l), Target::Pseudo) => render_procedure("f", l, fuel),
    })
}

fn emit_program_lambda(p: &SkiProgram) -> String {
    print_program(&Program {
        defs: p.defs.iter().map(|(n, t)| (n.clone(), ski_decode(t))).collect(),
        main: p.main.as_ref().map(ski_decode),
    })
}

fn emit_program_pseudo(p: &SkiProgram, fuel: u64) -> String {
    let mut out = String::new();
    for (n, t) in &p.defs {
        out.push_str(&render_procedure(n, &ski_decode(t), fuel));
        out.push('\n');
    }
    if let Some(m) = &p.main {
        out.push_str(&render_procedure("main", &ski_decode(m), fuel));
    }
    out
}

const INDENT: &str = "    ";

/// Indented procedure rendering of the beta normal form of `t`; falls back
/// to `t` itself when normalization runs out of fuel.
pub fn render_procedure(name: &str, t: &Term, fuel: u64) -> String {
    let mut t = beta_reduce(t, fuel).unwrap_or_else(|_| t.clone());
    let mut params = Vec::new();
    while let Term::Lam(x, b) = t {
        params.push(x);
        t = *b;
    }
    // Saturate a partially applied primitive so it reads as a call.
    let (head, args) = t.spine();
    if let Term::Prim(p) = head {
        let missing = p.arity().saturating_sub(args.len());
        if missing > 0 {
            let mut extra = Vec::new();
            let mut k = 0;
            while extra.len() < missing {
                let cand = format!("a{k}");
                k += 1;
                if !params.contains(&cand) && !t.free_vars().contains(&cand) {
                    extra.push(cand);
                }
            }
            t = Term::apply(t.clone(), extra.iter().map(Term::var));
            params.extend(extra);
        }
    }
    let mut out = format!("procedure {name}({}):\n", params.join(", "));
    statement(&t, 1, &mut out);
    out
}

fn statement(t: &Term, level: usize, out: &mut String) {
    let pad = INDENT.repeat(level);
    let (head, args) = t.spine();
    if let (Term::Prim(Prim::If), [c, a, b]) = (head, args.as_slice()) {
        out.push_str(&format!("{pad}if {}:\n", expr(c)));
        statement(a, level + 1, out);
        out.push_str(&format!("{pad}else:\n"));
        statement(b, level + 1, out);
        return;
    }
    out.push_str(&format!("{pad}return {}\n", expr(t)));
}

fn expr(t: &Term) -> String {
    crate::lambda_ir::deep(|| match t {
        Term::Var(v) => v.clone(),
        Term::Int(n) => n.to_string(),
        Term::Bool(b) => b.to_string(),
        Term::Prim(p) => p.name().to_string(),
        Term::Lam(..) => {
            let mut params = Vec::new();
            let mut body = t;
            while let Term::Lam(x, b) = body {
                params.push(x.as_str());
                body = b;
            }
            format!("(lambda {}: {})", params.join(", "), expr(body))
        }
        Term::App(..) => {
            let (head, args) = t.spine();
            let infix = |p: &Prim| match p {
                Prim::Add => Some("+"),
                Prim::Sub => Some("-"),
                Prim::Mul => Some("*"),
                Prim::Eq => Some("=="),
                _ => None,
            };
            match (head, args.as_slice()) {
                (Term::Prim(p), [a, b]) if infix(p).is_some() => {
                    format!("({} {} {})", expr(a), infix(p).unwrap(), expr(b))
                }
                (Term::Prim(Prim::If), [c, a, b]) => {
                    format!("({} if {} else {})", expr(a), expr(c), expr(b))
                }
                _ => {
                    let f = match head {
                        Term::Lam(..) => format!("({})", expr(head)),
                        _ => expr(head),
                    };
                    let args: Vec<String> = args.iter().map(|a| expr(a)).collect();
                    format!("{f}({})", args.join(", "))
                }
            }
        }
    })
}
