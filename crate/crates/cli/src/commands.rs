//! Subcommand implementations.

use std::path::{Path, PathBuf};

use ltvr_core::analysis::{analyze, Analysis};
use ltvr_core::catalog::{fixture, fixtures, SystemSpecFile};
use ltvr_core::floquet::classify_stability;
use ltvr_core::oracle::{compare_stm, rk_transition_grid, OracleConfig, OracleMethod};
use ltvr_core::solution::forced_response;
use ltvr_core::timefn::linspace;
use ltvr_core::{LtvError, C64};
use nalgebra::{Matrix2, Vector2};
use serde_json::{json, Value};

use crate::output::{cell, complex_json, emit, sha256_hex, Format, Table};

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(LtvError),
    Verification(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Verification(m) => f.write_str(m),
            CliError::Numeric(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<LtvError> for CliError {
    fn from(e: LtvError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Where the system comes from and the flags shared by the analysis commands.
#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub target: Option<String>,
    pub spec: Option<PathBuf>,
    pub example: Option<String>,
    pub grid: Option<usize>,
    pub t_ref: Option<f64>,
    pub period: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

pub struct Loaded {
    pub source: String,
    pub spec: SystemSpecFile,
    pub hash: String,
}

impl RunArgs {
    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    /// Resolve `--spec`, `--example` or the positional target, which names an
    /// example when it matches a catalog key and a spec file otherwise.
    pub fn load(&self) -> CliResult<Loaded> {
        let given = [self.target.is_some(), self.spec.is_some(), self.example.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(CliError::Input("give exactly one of --spec FILE, --example KEY or a positional target".into()));
        }
        let (source, mut spec) = if let Some(key) = &self.example {
            (format!("example:{key}"), fixture(key)?.spec)
        } else if let Some(path) = &self.spec {
            (path.display().to_string(), read_spec(path)?)
        } else {
            let target = self.target.as_deref().unwrap();
            if fixtures().iter().any(|f| f.key == target) {
                (format!("example:{target}"), fixture(target)?.spec)
            } else {
                (target.to_string(), read_spec(Path::new(target))?)
            }
        };
        if let Some(p) = self.period {
            spec.period = Some(p);
        }
        if let Some(n) = self.grid {
            spec.grid_points = Some(n);
        }
        spec.validate()?;
        let hash = sha256_hex(spec.to_json().as_bytes());
        Ok(Loaded { source, spec, hash })
    }
}

fn read_spec(path: &Path) -> CliResult<SystemSpecFile> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(SystemSpecFile::from_json(&src)?)
}

fn run_analysis(loaded: &Loaded) -> CliResult<Analysis> {
    let sys = loaded.spec.system()?;
    Ok(analyze(&sys, &loaded.spec.options())?)
}

fn grid(loaded: &Loaded) -> Vec<f64> {
    let (lo, hi) = loaded.spec.domain();
    linspace(lo, hi, loaded.spec.grid_points())
}

fn t_ref(args: &RunArgs, an: &Analysis) -> f64 {
    args.t_ref.unwrap_or(an.fund.t_ref)
}

fn meta(command: &str, loaded: &Loaded, an: &Analysis, extra: Value) -> Value {
    let mut m = json!({
        "command": command,
        "source": loaded.source,
        "spec_sha256": loaded.hash,
        "spec": serde_json::from_str::<Value>(&loaded.spec.to_json()).unwrap(),
        "grid_points": loaded.spec.grid_points(),
        "route": an.route.to_string(),
        "csv_columns": "t, then real and imaginary part of each quantity; poles as \"pole\"",
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut m, extra) {
        m.extend(extra);
    }
    m
}

fn entries(m: Option<Matrix2<C64>>) -> [Option<C64>; 4] {
    match m {
        Some(m) => [Some(m[(0, 0)]), Some(m[(0, 1)]), Some(m[(1, 0)]), Some(m[(1, 1)])],
        None => [None; 4],
    }
}

fn matrix_cell(m: ltvr_core::Result<Matrix2<C64>>) -> CliResult<Option<Matrix2<C64>>> {
    match m {
        Ok(m) if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(Some(m)),
        Ok(_) | Err(LtvError::Pole { .. }) | Err(LtvError::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:+.9} {:+.9}j", z.re, z.im)
}

pub fn examples(show: Option<&str>) -> CliResult<()> {
    match show {
        None => {
            for f in fixtures() {
                println!("{:<6} {}", f.key, f.title);
            }
        }
        Some(key) => {
            let f = fixture(key)?;
            let s = &f.spec;
            println!("{}: {}", f.key, f.title);
            println!("A(t) = [[{}, {}],", s.matrix[0][0], s.matrix[0][1]);
            println!("        [{}, {}]]", s.matrix[1][0], s.matrix[1][1]);
            println!("u(t) = [{}, {}]", s.input[0], s.input[1]);
            println!("domain = [{}, {}]", s.domain.t0, s.domain.t1);
            if let Some(p) = s.period {
                println!("period = {p}");
            }
            println!("expected: {}", f.summary);
            println!("{}", s.to_json());
        }
    }
    Ok(())
}

pub fn analyze_cmd(args: &RunArgs) -> CliResult<()> {
    let loaded = args.load()?;
    let an = run_analysis(&loaded)?;
    let mf = &an.mf;
    let mut table = Table::new(&[
        "sigma0", "omega01", "omega02", "alpha", "v1", "v2", "lambda1", "lambda2", "V11", "V12", "V21", "V22",
    ]);
    for t in grid(&loaded) {
        let mut row = Vec::with_capacity(12);
        for f in [&mf.sigma0, &mf.omega01, &mf.omega02, &mf.alpha, &an.v1().v, &an.v2().v, &an.spectrum.lambda1, &an.spectrum.lambda2] {
            row.push(cell(f.eval(t))?);
        }
        row.extend(entries(matrix_cell(an.eigvec.eval(t))?));
        table.push(t, &row);
    }
    let kinds = json!({
        "v1": format!("{:?}", an.v1().kind),
        "v2": format!("{:?}", an.v2().kind),
        "intrinsic": an.primitive.as_ref().map(|p| format!("{:?}", p.intrinsic)),
        "poles": an.spectrum.poles(),
    });
    eprintln!("route {}; v1 {}, v2 {}", an.route, kinds["v1"], kinds["v2"]);
    emit(&table, args.format(), args.out.as_deref(), &meta("analyze", &loaded, &an, json!({ "rce": kinds })))?;
    Ok(())
}

pub fn stm_cmd(args: &RunArgs) -> CliResult<()> {
    let loaded = args.load()?;
    let an = run_analysis(&loaded)?;
    let t0 = t_ref(args, &an);
    let phi = an.stm(t0)?;
    let mut table = Table::new(&["phi11", "phi12", "phi21", "phi22"]);
    for t in grid(&loaded) {
        table.push(t, &entries(matrix_cell(phi.eval(t))?));
    }
    eprintln!("route {}; t_ref {t0}", an.route);
    emit(&table, args.format(), args.out.as_deref(), &meta("stm", &loaded, &an, json!({ "t_ref": t0 })))?;
    Ok(())
}

pub fn parse_x0(s: &str) -> CliResult<Vector2<C64>> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Input(format!("--x0 expects two numbers 'a,b', got '{s}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    Ok(Vector2::new(C64::new(a, 0.0), C64::new(b, 0.0)))
}

pub fn simulate_cmd(args: &RunArgs, x0: &str) -> CliResult<()> {
    let x0 = parse_x0(x0)?;
    let loaded = args.load()?;
    let an = run_analysis(&loaded)?;
    let t0 = t_ref(args, &an);
    let phi = an.stm(t0)?;
    let mut table = Table::new(&["x1", "x2"]);
    for t in grid(&loaded) {
        let x = match forced_response(&an.sys, &phi, x0, t) {
            Ok(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => [Some(x[0]), Some(x[1])],
            Ok(_) | Err(LtvError::Pole { .. }) | Err(LtvError::NonFinite { .. }) => [None, None],
            Err(e) => return Err(e.into()),
        };
        table.push(t, &x);
    }
    let extra = json!({ "t_ref": t0, "x0": [x0[0].re, x0[1].re] });
    emit(&table, args.format(), args.out.as_deref(), &meta("simulate", &loaded, &an, extra))?;
    Ok(())
}

pub fn floquet_cmd(args: &RunArgs) -> CliResult<()> {
    let loaded = args.load()?;
    let period = loaded
        .spec
        .period
        .ok_or_else(|| CliError::Input("floquet needs a period: set it in the spec file or pass --period".into()))?;
    let an = run_analysis(&loaded)?;
    let fd = an.floquet(period)?;
    let verdict = classify_stability(&fd);

    let (lo, hi) = loaded.spec.domain();
    let mut frozen = (f64::INFINITY, f64::NEG_INFINITY);
    for t in linspace(lo, hi, loaded.spec.grid_points()) {
        let (a, b) = an.sys.frozen_eigenvalues(t)?;
        frozen = (frozen.0.min(a.re.min(b.re)), frozen.1.max(a.re.max(b.re)));
    }

    let report = json!({
        "period": period,
        "t_ref": fd.t_ref,
        "exponents": fd.exponents.map(complex_json),
        "multipliers": fd.multipliers.map(complex_json),
        "monodromy": [[complex_json(fd.monodromy[(0, 0)]), complex_json(fd.monodromy[(0, 1)])],
                      [complex_json(fd.monodromy[(1, 0)]), complex_json(fd.monodromy[(1, 1)])]],
        "stability": verdict.name(),
        "frozen_eigenvalue_re_range": [frozen.0, frozen.1],
    });
    match (args.format(), &args.out) {
        (Format::Json, None) => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        _ => {
            println!("period {period}");
            for (i, (r, m)) in fd.exponents.iter().zip(&fd.multipliers).enumerate() {
                println!("r{} = {}   multiplier{} = {}", i + 1, fmt_c(*r), i + 1, fmt_c(*m));
            }
            println!("frozen eigenvalue real parts in [{:.6}, {:.6}]", frozen.0, frozen.1);
            println!("stability {verdict}");
        }
    }
    if let Some(out) = &args.out {
        let mut table = Table::new(&["Q11", "Q12", "Q21", "Q22"]);
        for t in linspace(fd.t_ref, fd.t_ref + period, loaded.spec.grid_points()) {
            table.push(t, &entries(matrix_cell(fd.q(t))?));
        }
        emit(&table, args.format(), Some(out), &meta("floquet", &loaded, &an, json!({ "floquet": report })))?;
    }
    Ok(())
}

pub fn verify_cmd(args: &RunArgs, tol: f64) -> CliResult<()> {
    let loaded = args.load()?;
    let an = run_analysis(&loaded)?;
    let t0 = t_ref(args, &an);
    let phi = an.stm(t0)?;
    let cfg = OracleConfig::default();
    cfg.validate()?;
    let times = grid(&loaded);
    let report = compare_stm(&phi, &an.sys, &times, &cfg)?;
    let pass = report.max_error <= tol;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict} max_error={:.3e} at t={} tol={tol:e} points={} route={}",
        report.max_error, report.worst_t, report.points, an.route
    );
    if let Some(out) = &args.out {
        let oracle = rk_transition_grid(&an.sys, t0, &times, &cfg)?;
        let mut table = Table::new(&["err11", "err12", "err21", "err22"]);
        for (&t, o) in times.iter().zip(&oracle) {
            let d = phi.eval_complex(t)? - o;
            table.push(t, &entries(Some(d)));
        }
        let oracle_tol = match cfg.method {
            OracleMethod::Rk45Adaptive { tol } => tol,
            OracleMethod::Rk4Fixed { step } => step,
        };
        let extra = json!({
            "t_ref": t0,
            "tolerances": { "verify": tol, "oracle": oracle_tol },
            "verdict": verdict,
            "max_error": report.max_error,
            "worst_t": report.worst_t,
        });
        emit(&table, args.format(), Some(out), &meta("verify", &loaded, &an, extra))?;
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!("max error {:.3e} exceeds tolerance {tol:e}", report.max_error)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x0_parsing() {
        assert_eq!(parse_x0("1, -2.5").unwrap(), Vector2::new(C64::new(1.0, 0.0), C64::new(-2.5, 0.0)));
        assert!(parse_x0("1").is_err());
        assert!(parse_x0("a,b").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(LtvError::Spec("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(LtvError::SingularReference { t_ref: 0.0, reason: String::new() }).exit_code(), 3);
        assert_eq!(CliError::Verification(String::new()).exit_code(), 4);
    }

    #[test]
    fn one_source_only() {
        let a = RunArgs { target: Some("eq31".into()), example: Some("eq31".into()), ..Default::default() };
        assert_eq!(a.load().err().unwrap().exit_code(), 2);
        let a = RunArgs { target: Some("eq31".into()), period: Some(1.0), ..Default::default() };
        assert_eq!(a.load().unwrap().spec.period, Some(1.0));
    }
}
