//! Line-oriented problem files: `[section]` headers followed by
//! `key = value` lines, `#` comments.
//!
//! Lists of names or numbers are comma separated; lists of expressions are
//! separated by `;`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use nonholo::expr::ParseError;
use nonholo::geometry::{PfaffForm, VectorField};
use nonholo::ocp::{Boundary, BoundaryKind, ControlBox, CostFunctional, CostKind, Horizon, OCProblem, Sense};
use nonholo::riemann::Metric;
use nonholo::{parse, Expr};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {}", render(.diagnostics))]
    Invalid {
        path: String,
        diagnostics: Vec<Diagnostic>,
    },
}

fn render(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Solver {
    pub steps: Option<usize>,
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub guess: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RiemannSpec {
    pub metric: Metric,
    pub field: VectorField,
    pub x0: Vec<f64>,
    pub t1: f64,
    pub perturbations: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub path: PathBuf,
    pub name: String,
    pub problem: Option<OCProblem>,
    pub solver: Solver,
    pub riemann: Option<RiemannSpec>,
}

impl ProblemFile {
    pub fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.name.clone())
    }
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    // 1-based column of the first value character.
    column: usize,
}

#[derive(Debug, Clone, Default)]
struct Section {
    line: usize,
    entries: Vec<Entry>,
}

const SECTIONS: [(&str, &[&str]); 8] = [
    ("meta", &["name", "m", "n", "sense"]),
    ("state", &["names"]),
    ("controls", &["names", "bounds"]),
    ("dynamics", &["pfaff", "field"]),
    ("cost", &["kind", "lagrangian", "forms", "payoff", "terminal"]),
    ("boundary", &["x0", "x1", "horizon", "kind"]),
    ("solver", &["steps", "nodes", "tol", "eps", "max_iter", "guess"]),
    ("riemann", &["coords", "metric", "field", "x0", "t1", "perturbations", "amplitude"]),
];

const REPEATABLE: [(&str, &str); 2] = [("dynamics", "field"), ("riemann", "metric")];

struct Reader {
    sections: BTreeMap<String, Section>,
    diags: Vec<Diagnostic>,
    last_line: usize,
}

impl Reader {
    fn new(text: &str) -> Reader {
        let mut r = Reader {
            sections: BTreeMap::new(),
            diags: Vec::new(),
            last_line: text.lines().count(),
        };
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    r.error(line, None, format!("malformed section header `{trimmed}`"));
                    continue;
                };
                let name = name.trim().to_string();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    r.error(line, None, format!("unknown section [{name}]"));
                    current = None;
                    continue;
                }
                if r.sections.contains_key(&name) {
                    r.error(line, None, format!("duplicate section [{name}]"));
                }
                r.sections.insert(name.clone(), Section { line, entries: Vec::new() });
                current = Some(name);
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                r.error(line, None, format!("expected `key = value`, got `{trimmed}`"));
                continue;
            };
            let Some(section) = current.clone() else {
                r.error(line, None, "entry outside of any section".into());
                continue;
            };
            let key = key.trim().to_string();
            let lead = value.len() - value.trim_start().len();
            let column = content.len() - value.len() + lead + 1;
            r.push(&section, Entry {
                key,
                value: value.trim().to_string(),
                line,
                column,
            });
        }
        r
    }

    fn push(&mut self, section: &str, e: Entry) {
        let allowed = SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
        let is_law = section == "controls" && e.key.starts_with("law.");
        if !allowed.contains(&e.key.as_str()) && !is_law {
            self.error(e.line, None, format!("unknown key `{}` in [{section}]", e.key));
            return;
        }
        let repeatable = REPEATABLE.contains(&(section, e.key.as_str()));
        let sec = self.sections.get_mut(section).expect("section exists");
        if !repeatable && sec.entries.iter().any(|o| o.key == e.key) {
            let line = e.line;
            let key = e.key.clone();
            self.error(line, None, format!("duplicate key `{key}` in [{section}]"));
            return;
        }
        sec.entries.push(e);
    }

    fn error(&mut self, line: usize, column: Option<usize>, message: String) {
        self.diags.push(Diagnostic {
            line: Some(line),
            column,
            message,
        });
    }

    fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn line_of(&self, section: &str) -> usize {
        self.sections.get(section).map_or(self.last_line.max(1), |s| s.line)
    }

    fn get(&self, section: &str, key: &str) -> Option<Entry> {
        self.sections.get(section)?.entries.iter().find(|e| e.key == key).cloned()
    }

    fn all(&self, section: &str, key: &str) -> Vec<Entry> {
        self.sections
            .get(section)
            .map(|s| s.entries.iter().filter(|e| e.key == key).cloned().collect())
            .unwrap_or_default()
    }

    fn number<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Option<T> {
        let e = self.get(section, key)?;
        match e.value.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.error(e.line, Some(e.column), format!("[{section}] {key}: cannot read `{}` as a number", e.value));
                None
            }
        }
    }

    fn names(&self, section: &str, key: &str) -> Option<Vec<String>> {
        let e = self.get(section, key)?;
        Some(split_list(&e.value, ',').into_iter().map(|(_, s)| s.to_string()).collect())
    }

    fn numbers(&mut self, e: &Entry, allow_free: bool) -> Option<Vec<Option<f64>>> {
        let mut out = Vec::new();
        let mut ok = true;
        for (off, item) in split_list(&e.value, ',') {
            if allow_free && item == "free" {
                out.push(None);
                continue;
            }
            match item.parse::<f64>() {
                Ok(v) => out.push(Some(v)),
                Err(_) => {
                    ok = false;
                    self.error(e.line, Some(e.column + off), format!("{}: cannot read `{item}` as a number", e.key));
                }
            }
        }
        ok.then_some(out)
    }

    fn fixed_numbers(&mut self, e: &Entry) -> Option<Vec<f64>> {
        self.numbers(e, false).map(|v| v.into_iter().map(|x| x.unwrap_or(0.0)).collect())
    }

    fn exprs(&mut self, e: &Entry, vars: &[String]) -> Option<Vec<Expr>> {
        let mut out = Vec::new();
        let mut ok = true;
        for (off, item) in split_list(&e.value, ';') {
            match parse(item, vars) {
                Ok(x) => out.push(x),
                Err(err) => {
                    ok = false;
                    let (pos, msg) = describe(&err);
                    self.error(e.line, Some(e.column + off + pos), format!("{}: {msg}", e.key));
                }
            }
        }
        ok.then_some(out)
    }

    fn expr(&mut self, e: &Entry, vars: &[String]) -> Option<Expr> {
        let mut v = self.exprs(e, vars)?;
        if v.len() != 1 {
            self.error(e.line, Some(e.column), format!("{}: expected one expression, got {}", e.key, v.len()));
            return None;
        }
        v.pop()
    }
}

/// Items with their byte offsets into `s`, trimmed, empty items kept.
fn split_list(s: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for part in s.split(sep) {
        let lead = part.len() - part.trim_start().len();
        out.push((start + lead, part.trim()));
        start += part.len() + sep.len_utf8();
    }
    out
}

fn describe(e: &ParseError) -> (usize, String) {
    let off = match e {
        ParseError::Syntax { offset, .. }
        | ParseError::UnknownIdentifier { offset, .. }
        | ParseError::UnknownFunction { offset, .. }
        | ParseError::Arity { offset, .. } => *offset,
        ParseError::NoVariables => 0,
    };
    let msg = e.to_string();
    let msg = match msg.find(" at offset") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    };
    (off, msg)
}

pub fn load(path: &Path) -> Result<ProblemFile, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&text, path)
}

pub fn load_str(text: &str, path: &Path) -> Result<ProblemFile, LoadError> {
    let mut r = Reader::new(text);
    let name = r
        .get("meta", "name")
        .map(|e| e.value)
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "problem".into());
    let solver = read_solver(&mut r);
    let problem = if r.has("dynamics") || r.has("state") {
        read_problem(&mut r, &name)
    } else {
        None
    };
    let riemann = if r.has("riemann") { read_riemann(&mut r) } else { None };
    if !r.has("dynamics") && !r.has("riemann") {
        r.diags.push(Diagnostic {
            line: None,
            column: None,
            message: "no [dynamics] or [riemann] section".into(),
        });
    }
    if let Some(p) = &problem {
        let diags = p.validate();
        for d in diags {
            let line = r.line_of(section_for(&d.message));
            r.error(line, None, d.message);
        }
    }
    if !r.diags.is_empty() {
        r.diags.sort_by_key(|d| (d.line, d.column));
        return Err(LoadError::Invalid {
            path: path.display().to_string(),
            diagnostics: r.diags,
        });
    }
    Ok(ProblemFile {
        path: path.to_path_buf(),
        name,
        problem,
        solver,
        riemann,
    })
}

fn section_for(message: &str) -> &'static str {
    let m = message.to_lowercase();
    if m.contains("[boundary]") || m.contains("horizon") || m.contains("initial") || m.contains("rectangle") {
        "boundary"
    } else if m.contains("cost") {
        "cost"
    } else if m.contains("control box") || m.contains("law") {
        "controls"
    } else if m.contains("pfaff") || m.contains("generator") {
        "dynamics"
    } else if m.contains("state") || m.contains("duplicate variable") {
        "state"
    } else {
        "meta"
    }
}

fn read_solver(r: &mut Reader) -> Solver {
    let guess = r.get("solver", "guess").and_then(|e| r.fixed_numbers(&e));
    Solver {
        steps: r.number("solver", "steps"),
        nodes: r.number("solver", "nodes"),
        tol: r.number("solver", "tol"),
        eps: r.number("solver", "eps"),
        max_iter: r.number("solver", "max_iter"),
        guess,
    }
}

fn read_problem(r: &mut Reader, name: &str) -> Option<OCProblem> {
    let m: usize = r.number("meta", "m").unwrap_or(1);
    let Some(state) = r.names("state", "names") else {
        let line = r.line_of("state");
        r.error(line, None, "[state] needs names".into());
        return None;
    };
    if let Some(n) = r.number::<usize>("meta", "n") {
        if n != state.len() {
            let line = r.get("meta", "n").map_or(1, |e| e.line);
            r.error(line, None, format!("[meta] n = {n} but [state] declares {} names", state.len()));
        }
    }
    let sense = match r.get("meta", "sense") {
        None => Sense::Minimize,
        Some(e) => match e.value.as_str() {
            "minimize" | "min" => Sense::Minimize,
            "maximize" | "max" => Sense::Maximize,
            other => {
                r.error(e.line, Some(e.column), format!("sense must be minimize or maximize, got `{other}`"));
                Sense::Minimize
            }
        },
    };
    let state_refs: Vec<&str> = state.iter().map(String::as_str).collect();
    let pfaff = r.get("dynamics", "pfaff");
    let fields = r.all("dynamics", "field");
    let named_controls = r.names("controls", "names");
    let times: Vec<String> = if m == 1 {
        vec!["t".into()]
    } else {
        (1..=m).map(|a| format!("t{a}")).collect()
    };
    let mut problem = match (pfaff, fields.is_empty()) {
        (Some(p), false) => {
            let line = fields[0].line.min(p.line);
            r.error(line, None, "ambiguous dynamics: both pfaff and field given".into());
            return None;
        }
        (None, true) => {
            let line = r.line_of("dynamics");
            r.error(line, None, "[dynamics] needs pfaff or field".into());
            return None;
        }
        (Some(p), true) => {
            let controls = named_controls.clone().unwrap_or_default();
            let vars: Vec<String> = times.iter().chain(&state).chain(&controls).cloned().collect();
            let coeffs = r.exprs(&p, &vars)?;
            let form = match PfaffForm::new(coeffs) {
                Ok(f) => f,
                Err(e) => {
                    r.error(p.line, Some(p.column), e.to_string());
                    return None;
                }
            };
            let refs: Vec<&str> = controls.iter().map(String::as_str).collect();
            let mut pr = OCProblem::pfaff(name, &state_refs, &refs, form);
            pr.m = m;
            pr
        }
        (None, false) => {
            let mut gens = Vec::new();
            for f in &fields {
                gens.push(VectorField::new(r.exprs(f, &state)?));
            }
            let mut pr = if m == 1 {
                OCProblem::span(name, &state_refs, gens)
            } else {
                OCProblem::span_multitime(name, &state_refs, gens, m)
            };
            if let Some(c) = named_controls.clone() {
                pr.controls = c;
                pr.bounds = ControlBox::unbounded(pr.controls.len());
            }
            pr
        }
    };
    if m >= 2 {
        problem.horizon = Horizon::Rectangle(vec![1.0; m]);
    }
    read_bounds(r, &mut problem);
    read_laws(r, &mut problem, &times);
    problem.cost = read_cost(r, &problem, &times)?;
    problem.sense = sense;
    read_boundary(r, &mut problem)?;
    Some(problem)
}

fn read_bounds(r: &mut Reader, p: &mut OCProblem) {
    let Some(e) = r.get("controls", "bounds") else {
        return;
    };
    let items = split_list(&e.value, ',');
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (off, item) in &items {
        let parsed = item
            .split_once(':')
            .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
        match parsed {
            Some((a, b)) => {
                lower.push(a);
                upper.push(b);
            }
            None => r.error(e.line, Some(e.column + off), format!("bounds: expected `lo:hi`, got `{item}`")),
        }
    }
    let k = p.controls.len();
    if lower.len() == 1 && k > 1 {
        lower = vec![lower[0]; k];
        upper = vec![upper[0]; k];
    }
    p.bounds = ControlBox { lower, upper };
}

fn read_laws(r: &mut Reader, p: &mut OCProblem, times: &[String]) {
    let entries: Vec<Entry> = r
        .sections
        .get("controls")
        .map(|s| s.entries.iter().filter(|e| e.key.starts_with("law.")).cloned().collect())
        .unwrap_or_default();
    let vars: Vec<String> = times.iter().chain(&p.state).cloned().collect();
    for e in entries {
        let target = e.key["law.".len()..].to_string();
        if let Some(x) = r.expr(&e, &vars) {
            p.laws.insert(target, x);
        }
    }
}

fn read_cost(r: &mut Reader, p: &OCProblem, times: &[String]) -> Option<CostFunctional> {
    let aux = p.state.iter().map(|s| format!("w_{s}"));
    let vars: Vec<String> = times.iter().chain(&p.state).chain(&p.controls).cloned().chain(aux).collect();
    let line = r.line_of("cost");
    let kind_entry = r.get("cost", "kind");
    let kind = kind_entry.as_ref().map_or("integral", |e| e.value.as_str()).to_string();
    let need = |r: &mut Reader, key: &str| -> Option<Entry> {
        let e = r.get("cost", key);
        if e.is_none() {
            r.error(line, None, format!("[cost] kind = {kind} needs `{key}`"));
        }
        e
    };
    let kind = match kind.as_str() {
        "integral" => match r.get("cost", "lagrangian") {
            Some(e) => CostKind::SimpleIntegral(r.expr(&e, &vars)?),
            None => CostKind::SimpleIntegral(Expr::zero()),
        },
        "volume" => {
            let e = need(r, "lagrangian")?;
            CostKind::MultipleIntegral(r.expr(&e, &vars)?)
        }
        "curvilinear" => {
            let e = need(r, "forms")?;
            CostKind::Curvilinear(r.exprs(&e, &vars)?)
        }
        "terminal" => {
            let e = need(r, "payoff")?;
            CostKind::Terminal(r.expr(&e, &vars)?)
        }
        "time" => CostKind::Time,
        other => {
            let e = kind_entry.expect("kind was given");
            r.error(
                e.line,
                Some(e.column),
                format!("unknown cost kind `{other}` (integral, volume, curvilinear, terminal, time)"),
            );
            return None;
        }
    };
    let terminal = match r.get("cost", "terminal") {
        Some(e) => Some(r.expr(&e, &vars)?),
        None => None,
    };
    Some(CostFunctional { kind, terminal })
}

fn read_boundary(r: &mut Reader, p: &mut OCProblem) -> Option<()> {
    let Some(e0) = r.get("boundary", "x0") else {
        let line = r.line_of("boundary");
        let msg = if r.has("boundary") {
            "[boundary] is missing x0"
        } else {
            "missing [boundary] section with x0"
        };
        r.error(line, None, msg.into());
        return None;
    };
    let x0 = r.numbers(&e0, true)?;
    let x1 = match r.get("boundary", "x1") {
        Some(e) => Some(r.numbers(&e, true)?),
        None => None,
    };
    let kind = match r.get("boundary", "kind") {
        None => BoundaryKind::Transversality,
        Some(e) => match e.value.as_str() {
            "transversality" => BoundaryKind::Transversality,
            "zero_costate" => BoundaryKind::ZeroCostate,
            other => {
                r.error(e.line, Some(e.column), format!("boundary kind must be transversality or zero_costate, got `{other}`"));
                return None;
            }
        },
    };
    p.boundary = Boundary { x0, x1, kind };
    if let Some(e) = r.get("boundary", "horizon") {
        let h = r.fixed_numbers(&e)?;
        p.horizon = if p.m == 1 {
            if h.len() != 2 {
                r.error(e.line, Some(e.column), format!("horizon needs `t0, t1`, got {} numbers", h.len()));
                return None;
            }
            Horizon::Interval(h[0], h[1])
        } else {
            Horizon::Rectangle(h)
        };
    }
    Some(())
}

fn read_riemann(r: &mut Reader) -> Option<RiemannSpec> {
    let line = r.line_of("riemann");
    let Some(coords) = r.names("riemann", "coords").or_else(|| r.names("state", "names")) else {
        r.error(line, None, "[riemann] needs coords".into());
        return None;
    };
    let rows = r.all("riemann", "metric");
    if rows.is_empty() {
        r.error(line, None, "[riemann] needs metric rows".into());
        return None;
    }
    let mut g = Vec::new();
    for e in &rows {
        g.push(r.exprs(e, &coords)?);
    }
    let metric = match Metric::new(&coords, g) {
        Ok(m) => m,
        Err(err) => {
            r.error(rows[0].line, None, format!("metric: {err}"));
            return None;
        }
    };
    let Some(fe) = r.get("riemann", "field") else {
        r.error(line, None, "[riemann] needs field".into());
        return None;
    };
    let field = VectorField::new(r.exprs(&fe, &coords)?);
    if field.dim() != coords.len() {
        r.error(fe.line, None, format!("field has {} components for {} coordinates", field.dim(), coords.len()));
        return None;
    }
    let Some(xe) = r.get("riemann", "x0") else {
        r.error(line, None, "[riemann] needs x0".into());
        return None;
    };
    let x0 = r.fixed_numbers(&xe)?;
    if x0.len() != coords.len() {
        r.error(xe.line, None, format!("x0 has {} entries for {} coordinates", x0.len(), coords.len()));
        return None;
    }
    Some(RiemannSpec {
        metric,
        field,
        x0,
        t1: r.number("riemann", "t1").unwrap_or(1.0),
        perturbations: r.number("riemann", "perturbations").unwrap_or(20),
        amplitude: r.number("riemann", "amplitude").unwrap_or(0.3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_text(t: &str) -> Result<ProblemFile, LoadError> {
        load_str(t, Path::new("test.ocp"))
    }

    const BASE: &str = "[meta]\nname = t\n[state]\nnames = x, y\n[dynamics]\nfield = 1; 0\nfield = 0; x\n[boundary]\nx0 = 0, 0\n";

    #[test]
    fn reads_span_problem() {
        let f = load_text(BASE).unwrap();
        let p = f.problem.unwrap();
        assert_eq!(p.controls, ["u1", "u2"]);
        assert_eq!(p.sense, Sense::Minimize);
    }

    #[test]
    fn bad_expression_reports_column() {
        let t = BASE.replace("field = 0; x", "field = 0; x +* 2");
        let Err(LoadError::Invalid { diagnostics, .. }) = load_text(&t) else {
            panic!("expected a diagnostic");
        };
        assert_eq!(diagnostics[0].line, Some(7));
        assert!(diagnostics[0].column.unwrap() > 11, "{diagnostics:?}");
    }

    #[test]
    fn unknown_key_and_section() {
        let t = format!("{BASE}[solver]\nspeed = 3\n[extra]\n");
        let Err(LoadError::Invalid { diagnostics, .. }) = load_text(&t) else {
            panic!("expected diagnostics");
        };
        assert_eq!(diagnostics.len(), 2);
    }

    #[test]
    fn bounds_broadcast_and_free_components() {
        let t = BASE.replace("x0 = 0, 0", "x0 = 0, free\nkind = zero_costate") + "[controls]\nbounds = -1:1\n";
        let p = load_text(&t).unwrap().problem.unwrap();
        assert_eq!(p.bounds.lower, vec![-1.0, -1.0]);
        assert_eq!(p.boundary.x0, vec![Some(0.0), None]);
    }

    #[test]
    fn split_offsets() {
        assert_eq!(split_list("a,  b ,c", ','), vec![(0, "a"), (4, "b"), (7, "c")]);
    }

    fn fixture(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
    }

    #[test]
    fn bundled_martinet_fixture() {
        let f = load(&fixture("martinet.ocp")).unwrap();
        let p = f.problem.unwrap();
        assert_eq!((p.m, p.n()), (1, 3));
        assert_eq!(f.name, "martinet");
    }

    #[test]
    fn pfaff_and_fields_are_ambiguous() {
        let t = BASE.replace("[dynamics]\n", "[dynamics]\npfaff = 1; 0\n");
        let err = load_text(&t).unwrap_err().to_string();
        assert!(err.contains("ambiguous dynamics"), "{err}");
    }

    #[test]
    fn missing_x0_names_boundary() {
        let t = BASE.replace("x0 = 0, 0\n", "x1 = 0, 0\n");
        let Err(LoadError::Invalid { diagnostics, .. }) = load_text(&t) else {
            panic!("expected diagnostics");
        };
        assert!(diagnostics[0].message.contains("[boundary]"));
        assert_eq!(diagnostics[0].line, Some(8));
        let t = BASE.replace("[boundary]\nx0 = 0, 0\n", "");
        assert!(load_text(&t).unwrap_err().to_string().contains("[boundary]"));
    }

    #[test]
    fn validation_diagnostics_carry_lines() {
        let t = BASE.replace("x0 = 0, 0", "x0 = 0, 0, 0");
        let Err(LoadError::Invalid { diagnostics, .. }) = load_text(&t) else {
            panic!("expected diagnostics");
        };
        assert_eq!(diagnostics[0].line, Some(8), "{diagnostics:?}");
    }
}
