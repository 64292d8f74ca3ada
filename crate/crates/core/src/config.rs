//! Run configuration: a TOML document with one parameter source and optional
//! per-subcommand sections.
//!
//! Parsing never stops at the first problem. Every unknown key, type mismatch
//! and constraint violation is collected with its key path and, where the
//! document provides one, its line and column.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use toml_edit::{ImDocument, Item, TableLike, Value};

use crate::model::{DimensionlessParams, MeanFieldState};
use crate::ode::Tolerances;
use crate::quantum;
use crate::wannier::{CavityGeometry, DoubleWellSpec, WellForm};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// Dotted key path, empty for document-level problems.
    pub path: String,
    /// 1-based line and column.
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((line, col)) = self.location {
            write!(f, "{line}:{col}: ")?;
        }
        if !self.path.is_empty() {
            write!(f, "{}: ", self.path)?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Inputs of the Wannier pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedSource {
    pub well: DoubleWellSpec,
    pub cavity: CavityGeometry,
    pub g_gg: f64,
    pub n_atoms: u64,
    /// Photon number used for the two-mode validity margin.
    pub xi_sq_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Direct(DimensionlessParams),
    Derived(DerivedSource),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateSection {
    pub horizon: f64,
    pub stride: f64,
    pub max_energy_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitSection {
    pub n_theta: usize,
    pub n_z: usize,
    pub horizon: f64,
    pub stride: f64,
    /// Extra `(z, θ)` seeds.
    pub seeds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSection {
    pub horizon: f64,
    pub stride: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumSection {
    pub n_atoms: u64,
    /// `None` picks the cutoff from the mean-field photon maximum.
    pub cutoff: Option<usize>,
    pub horizon: f64,
    pub stride: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub output: Option<PathBuf>,
    pub source: ParamSource,
    pub initial: Option<MeanFieldState>,
    pub tolerances: Tolerances,
    pub simulate: SimulateSection,
    pub portrait: PortraitSection,
    pub reduced: ReducedSection,
    /// Required by the quantum subcommand; no default.
    pub quantum: Option<QuantumSection>,
}

/// Parses `"pi"`, `"-pi"`, `"pi/2"`, `"3*pi/4"`, `"2pi"` or a plain number.
pub fn parse_angle(text: &str) -> Option<f64> {
    let t = text.trim().to_ascii_lowercase();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim_start()),
        None => (1.0, t.strip_prefix('+').unwrap_or(&t).trim_start()),
    };
    let Some(pos) = body.find("pi") else {
        return body.parse::<f64>().ok().filter(|v| v.is_finite()).map(|v| sign * v);
    };
    let coef_text = body[..pos].trim().trim_end_matches('*').trim();
    let coef = if coef_text.is_empty() { 1.0 } else { coef_text.parse::<f64>().ok()? };
    let rest = body[pos + 2..].trim();
    let den = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/')?.trim().parse::<f64>().ok().filter(|d| *d != 0.0)?
    };
    let v = sign * coef * PI / den;
    v.is_finite().then_some(v)
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |p| before[p + 1..].chars().count()) + 1;
    (line, col)
}

struct Walker<'s> {
    src: &'s str,
    issues: Vec<ConfigIssue>,
}

struct Section<'d> {
    path: String,
    table: &'d dyn TableLike,
    span: Option<Range<usize>>,
    used: Vec<&'static str>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() { key.to_string() } else { format!("{path}.{key}") }
}

fn type_name(item: &Item) -> &'static str {
    match item {
        Item::None => "nothing",
        Item::Table(_) | Item::Value(Value::InlineTable(_)) => "a table",
        Item::ArrayOfTables(_) | Item::Value(Value::Array(_)) => "an array",
        Item::Value(Value::String(_)) => "a string",
        Item::Value(Value::Integer(_)) => "an integer",
        Item::Value(Value::Float(_)) => "a float",
        Item::Value(Value::Boolean(_)) => "a boolean",
        Item::Value(Value::Datetime(_)) => "a datetime",
    }
}

impl<'s> Walker<'s> {
    fn issue(&mut self, path: String, span: Option<Range<usize>>, message: impl Into<String>) {
        let location = span.map(|s| line_col(self.src, s.start));
        self.issues.push(ConfigIssue { path, location, message: message.into() });
    }

    fn raw<'d>(&mut self, sec: &mut Section<'d>, key: &'static str) -> Option<(&'d Item, Option<Range<usize>>)> {
        sec.used.push(key);
        let (k, item) = sec.table.get_key_value(key)?;
        let span = item.span().or_else(|| k.span());
        Some((item, span))
    }

    fn number<'d>(&mut self, sec: &mut Section<'d>, key: &'static str) -> Option<f64> {
        let (item, span) = self.raw(sec, key)?;
        match item.as_value() {
            Some(Value::Float(f)) => Some(*f.value()),
            Some(Value::Integer(i)) => Some(*i.value() as f64),
            _ => {
                self.issue(join(&sec.path, key), span, format!("expected a number, found {}", type_name(item)));
                None
            }
        }
    }

    fn positive<'d>(&mut self, sec: &mut Section<'d>, key: &'static str) -> Option<f64> {
        let v = self.number(sec, key)?;
        if !(v > 0.0 && v.is_finite()) {
            let span = sec.table.get(key).and_then(|i| i.span());
            self.issue(join(&sec.path, key), span, format!("must be positive, got {v}"));
            return None;
        }
        Some(v)
    }

    fn bounded<'d>(&mut self, sec: &mut Section<'d>, key: &'static str, ok: fn(f64) -> bool, what: &str) -> Option<f64> {
        let v = self.finite(sec, key)?;
        if !ok(v) {
            let span = sec.table.get(key).and_then(|i| i.span());
            self.issue(join(&sec.path, key), span, format!("{what}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn finite<'d>(&mut self, sec: &mut Section<'d>, key: &'static str) -> Option<f64> {
        let v = self.number(sec, key)?;
        if !v.is_finite() {
            let span = sec.table.get(key).and_then(|i| i.span());
            self.issue(join(&sec.path, key), span, "must be finite");
            return None;
        }
        Some(v)
    }

    fn angle<'d>(&mut self, sec: &mut Section<'d>, key: &'static str) -> Option<f64> {
        let (item, span) = self.raw(sec, key)?;
        match item.as_value() {
            Some(Value::Float(f)) if f.value().is_finite() => Some(*f.value()),
            Some(Value::Integer(i)) => Some(*i.value() as f64),
            Some(Value::String(s)) => {
                let parsed = parse_angle(s.value());
                if parsed.is_none() {
                    self.issue(join(&sec.path, key), span, format!("cannot read angle {:?}", s.value()));
                }
                parsed
            }
            _ => {
                self.issue(join(&sec.path, key), span, format!("expected an angle, found {}", type_name(item)));
                None
            }
        }
    }

    fn count<'d>(&mut self, sec: &mut Section<'d>, key: &'static str, min: u64) -> Option<u64> {
        let (item, span) = self.raw(sec, key)?;
        match item.as_value() {
            Some(Value::Integer(i)) if *i.value() >= min as i64 => Some(*i.value() as u64),
            Some(Value::Integer(i)) => {
                self.issue(join(&sec.path, key), span, format!("must be at least {min}, got {}", i.value()));
                None
            }
            _ => {
                self.issue(join(&sec.path, key), span, format!("expected an integer, found {}", type_name(item)));
                None
            }
        }
    }

    fn string<'d>(&mut self, sec: &mut Section<'d>, key: &'static str) -> Option<String> {
        let (item, span) = self.raw(sec, key)?;
        match item.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.issue(join(&sec.path, key), span, format!("expected a string, found {}", type_name(item)));
                None
            }
        }
    }

    fn section<'d>(&mut self, parent: &mut Section<'d>, key: &'static str) -> Option<Section<'d>> {
        let (item, span) = self.raw(parent, key)?;
        match item.as_table_like() {
            Some(table) => Some(Section { path: join(&parent.path, key), table, span, used: Vec::new() }),
            None => {
                self.issue(join(&parent.path, key), span, format!("expected a table, found {}", type_name(item)));
                None
            }
        }
    }

    fn missing(&mut self, sec: &Section<'_>, key: &str) {
        self.issue(join(&sec.path, key), sec.span.clone(), "required key is missing");
    }

    fn required<T>(&mut self, sec: &mut Section<'_>, key: &'static str, get: impl FnOnce(&mut Self, &mut Section<'_>) -> Option<T>) -> Option<T> {
        if sec.table.get(key).is_none() {
            sec.used.push(key);
            self.missing(sec, key);
            return None;
        }
        get(self, sec)
    }

    fn finish(&mut self, sec: Section<'_>) {
        for (key, item) in sec.table.iter() {
            if !sec.used.contains(&key) {
                let span = sec.table.key(key).and_then(|k| k.span()).or_else(|| item.span());
                self.issue(join(&sec.path, key), span, "unknown key");
            }
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let doc = ImDocument::parse(text.to_string()).map_err(|e| {
            let location = e.span().map(|s| line_col(text, s.start));
            ConfigError {
                issues: vec![ConfigIssue { path: String::new(), location, message: format!("syntax error: {}", e.message()) }],
            }
        })?;
        let mut w = Walker { src: text, issues: Vec::new() };
        let mut root = Section { path: String::new(), table: doc.as_table(), span: None, used: Vec::new() };
        let cfg = read_root(&mut w, &mut root);
        w.finish(root);
        w.issues.sort_by_key(|i| i.location.unwrap_or((usize::MAX, 0)));
        match cfg {
            Some(cfg) if w.issues.is_empty() => Ok(cfg),
            _ => Err(ConfigError { issues: w.issues }),
        }
    }

    pub fn params_source_name(&self) -> &'static str {
        match self.source {
            ParamSource::Direct(_) => "direct",
            ParamSource::Derived(_) => "derived",
        }
    }
}

fn read_root(w: &mut Walker<'_>, root: &mut Section<'_>) -> Option<RunConfig> {
    let name = w.string(root, "name").unwrap_or_else(|| "run".to_string());
    let output = w.string(root, "output").map(PathBuf::from);

    let has_direct = root.table.get("params").is_some();
    let has_derived = root.table.get("derived").is_some();
    let source = match (has_direct, has_derived) {
        (true, true) => {
            let span = root.table.get("derived").and_then(|i| i.span());
            w.issue(
                "derived".into(),
                span,
                "both [params] and [derived] are present; give exactly one parameter source",
            );
            root.used.extend(["params", "derived"]);
            None
        }
        (false, false) => {
            w.issue(String::new(), None, "no parameter source; add a [params] or a [derived] section");
            None
        }
        (true, false) => w.section(root, "params").and_then(|mut s| {
            let p = read_direct(w, &mut s);
            w.finish(s);
            p.map(ParamSource::Direct)
        }),
        (false, true) => w.section(root, "derived").and_then(|mut s| {
            let d = read_derived(w, &mut s);
            w.finish(s);
            d.map(ParamSource::Derived)
        }),
    };

    let initial = if root.table.get("initial").is_some() {
        w.section(root, "initial").and_then(|mut s| {
            let z = w.required(&mut s, "z", |w, s| w.bounded(s, "z", |v| v.abs() <= 1.0, "must lie in [-1, 1]"));
            let theta = w.required(&mut s, "theta", |w, s| w.angle(s, "theta"));
            let xi = if s.table.get("xi").is_some() {
                w.bounded(&mut s, "xi", |v| v >= 0.0, "must be non-negative")
            } else {
                Some(0.0)
            };
            let phi = if s.table.get("phi").is_some() { w.angle(&mut s, "phi") } else { Some(0.0) };
            let state = match (z, theta, xi, phi) {
                (Some(z), Some(theta), Some(xi), Some(phi)) => {
                    let st = MeanFieldState::new(z, theta, xi, phi);
                    match st.validate() {
                        Ok(()) => Some(st),
                        Err(e) => {
                            w.issue(s.path.clone(), s.span.clone(), e.to_string());
                            None
                        }
                    }
                }
                _ => None,
            };
            w.finish(s);
            state
        })
    } else {
        None
    };

    let mut tolerances = Tolerances::default();
    if root.table.get("tolerances").is_some() {
        if let Some(mut s) = w.section(root, "tolerances") {
            if s.table.get("rtol").is_some() {
                tolerances.rtol = w.positive(&mut s, "rtol").unwrap_or(tolerances.rtol);
            }
            if s.table.get("atol").is_some() {
                tolerances.atol = w.positive(&mut s, "atol").unwrap_or(tolerances.atol);
            }
            w.finish(s);
        }
    }

    let mut simulate = SimulateSection { horizon: 100.0, stride: 0.1, max_energy_drift: Some(1e-6) };
    if let Some(mut s) = optional_section(w, root, "simulate") {
        opt_positive(w, &mut s, "horizon", &mut simulate.horizon);
        opt_positive(w, &mut s, "stride", &mut simulate.stride);
        if s.table.get("max_energy_drift").is_some() {
            simulate.max_energy_drift = w.positive(&mut s, "max_energy_drift");
        }
        w.finish(s);
    }

    let mut portrait = PortraitSection { n_theta: 201, n_z: 201, horizon: 20.0, stride: 0.05, seeds: Vec::new() };
    if let Some(mut s) = optional_section(w, root, "portrait") {
        if s.table.get("n_theta").is_some() {
            portrait.n_theta = w.count(&mut s, "n_theta", 2).map_or(portrait.n_theta, |v| v as usize);
        }
        if s.table.get("n_z").is_some() {
            portrait.n_z = w.count(&mut s, "n_z", 2).map_or(portrait.n_z, |v| v as usize);
        }
        opt_positive(w, &mut s, "horizon", &mut portrait.horizon);
        opt_positive(w, &mut s, "stride", &mut portrait.stride);
        if s.table.get("seeds").is_some() {
            portrait.seeds = read_seeds(w, &mut s);
        }
        w.finish(s);
    }

    let mut reduced = ReducedSection { horizon: 50.0, stride: 0.1, floor: crate::reduced::DEFAULT_SINGULARITY_FLOOR };
    if let Some(mut s) = optional_section(w, root, "reduced") {
        opt_positive(w, &mut s, "horizon", &mut reduced.horizon);
        opt_positive(w, &mut s, "stride", &mut reduced.stride);
        opt_positive(w, &mut s, "floor", &mut reduced.floor);
        w.finish(s);
    }

    let mut quantum_present = None;
    if let Some(mut s) = optional_section(w, root, "quantum") {
        let mut quantum_sec = QuantumSection { n_atoms: 20, cutoff: None, horizon: 20.0, stride: 0.1 };
        if s.table.get("n_atoms").is_some() {
            if let Some(n) = w.count(&mut s, "n_atoms", 1) {
                if n > 60 {
                    let span = s.table.get("n_atoms").and_then(|i| i.span());
                    w.issue(join(&s.path, "n_atoms"), span, format!("{n} atoms exceeds the comparison limit of 60"));
                } else {
                    quantum_sec.n_atoms = n;
                }
            }
        }
        if s.table.get("cutoff").is_some() {
            quantum_sec.cutoff = w.count(&mut s, "cutoff", 1).map(|v| v as usize);
        }
        opt_positive(w, &mut s, "horizon", &mut quantum_sec.horizon);
        opt_positive(w, &mut s, "stride", &mut quantum_sec.stride);
        if let Some(c) = quantum_sec.cutoff {
            let dim = (quantum_sec.n_atoms as usize + 1) * (c + 1);
            if dim > quantum::DEFAULT_DIMENSION_LIMIT {
                w.issue(join(&s.path, "cutoff"), s.span.clone(), format!("basis dimension {dim} exceeds the limit"));
            }
        }
        w.finish(s);
        quantum_present = Some(quantum_sec);
    }

    Some(RunConfig {
        name,
        output,
        source: source?,
        initial,
        tolerances,
        simulate,
        portrait,
        reduced,
        quantum: quantum_present,
    })
}

fn optional_section<'d>(w: &mut Walker<'_>, root: &mut Section<'d>, key: &'static str) -> Option<Section<'d>> {
    if root.table.get(key).is_some() {
        w.section(root, key)
    } else {
        root.used.push(key);
        None
    }
}

fn opt_positive(w: &mut Walker<'_>, s: &mut Section<'_>, key: &'static str, target: &mut f64) {
    if s.table.get(key).is_some() {
        if let Some(v) = w.positive(s, key) {
            *target = v;
        }
    }
}

fn read_seeds(w: &mut Walker<'_>, s: &mut Section<'_>) -> Vec<(f64, f64)> {
    let Some((item, span)) = w.raw(s, "seeds") else { return Vec::new() };
    let path = join(&s.path, "seeds");
    let Some(arr) = item.as_array() else {
        w.issue(path, span, format!("expected an array of [z, theta] pairs, found {}", type_name(item)));
        return Vec::new();
    };
    let mut out = Vec::new();
    for (k, v) in arr.iter().enumerate() {
        let here = format!("{path}[{k}]");
        let pair = v.as_array().filter(|a| a.len() == 2);
        let Some(pair) = pair else {
            w.issue(here, v.span(), "expected a [z, theta] pair");
            continue;
        };
        let z = match pair.get(0) {
            Some(Value::Float(f)) => Some(*f.value()),
            Some(Value::Integer(i)) => Some(*i.value() as f64),
            _ => None,
        };
        let theta = match pair.get(1) {
            Some(Value::Float(f)) => Some(*f.value()),
            Some(Value::Integer(i)) => Some(*i.value() as f64),
            Some(Value::String(t)) => parse_angle(t.value()),
            _ => None,
        };
        match (z, theta) {
            (Some(z), Some(theta)) if z.abs() <= 1.0 && theta.is_finite() => out.push((z, theta)),
            _ => w.issue(here, v.span(), "seed needs |z| <= 1 and a finite angle"),
        }
    }
    out
}

fn read_direct(w: &mut Walker<'_>, s: &mut Section<'_>) -> Option<DimensionlessParams> {
    let d_c = w.required(s, "d_c", |w, s| w.finite(s, "d_c"));
    let w0 = w.required(s, "w0", |w, s| w.finite(s, "w0"));
    let w12 = w.required(s, "w12", |w, s| w.finite(s, "w12"));
    let u = w.required(s, "u", |w, s| w.finite(s, "u"));
    let e = w.required(s, "e", |w, s| w.bounded(s, "e", |v| v >= 0.0, "must be non-negative"));
    let n = w.required(s, "n_atoms", |w, s| w.count(s, "n_atoms", 1));
    let p = DimensionlessParams { d_c: d_c?, w0: w0?, w12: w12?, u: u?, e: e?, n_atoms: n? };
    if let Err(err) = p.validate() {
        w.issue(s.path.clone(), s.span.clone(), err.to_string());
        return None;
    }
    Some(p)
}

fn read_derived(w: &mut Walker<'_>, s: &mut Section<'_>) -> Option<DerivedSource> {
    let n_atoms = w.required(s, "n_atoms", |w, s| w.count(s, "n_atoms", 1));
    let g_gg = w.required(s, "g_gg", |w, s| w.finite(s, "g_gg"));
    let xi_sq_max = if s.table.get("xi_sq_max").is_some() { w.finite(s, "xi_sq_max") } else { Some(0.0) };
    if let Some(x) = xi_sq_max {
        if x < 0.0 {
            w.issue(join(&s.path, "xi_sq_max"), s.table.get("xi_sq_max").and_then(|i| i.span()), "must be non-negative");
        }
    }
    let well = if s.table.get("well").is_some() {
        w.section(s, "well").and_then(|mut ws| {
            let r = read_well(w, &mut ws);
            w.finish(ws);
            r
        })
    } else {
        s.used.push("well");
        Some(DoubleWellSpec::default())
    };
    let cavity = w.required(s, "cavity", |w, s| {
        w.section(s, "cavity").and_then(|mut cs| {
            let r = read_cavity(w, &mut cs);
            w.finish(cs);
            r
        })
    });
    Some(DerivedSource { well: well?, cavity: cavity?, g_gg: g_gg?, n_atoms: n_atoms?, xi_sq_max: xi_sq_max?.max(0.0) })
}

fn read_well(w: &mut Walker<'_>, s: &mut Section<'_>) -> Option<DoubleWellSpec> {
    let def = DoubleWellSpec::default();
    let form_name = w.required(s, "form", |w, s| w.string(s, "form"));
    let form = match form_name.as_deref() {
        Some("quartic") => {
            let v0 = w.required(s, "v0", |w, s| w.positive(s, "v0"));
            let a = w.required(s, "a", |w, s| w.positive(s, "a"));
            Some(WellForm::Quartic { v0: v0?, a: a? })
        }
        Some("harmonic_barrier") => {
            let omega = w.required(s, "omega", |w, s| w.positive(s, "omega"));
            let height = w.required(s, "height", |w, s| w.finite(s, "height"));
            let width = w.required(s, "width", |w, s| w.positive(s, "width"));
            Some(WellForm::HarmonicBarrier { omega: omega?, height: height?, width: width? })
        }
        Some(other) => {
            let span = s.table.get("form").and_then(|i| i.span());
            w.issue(join(&s.path, "form"), span, format!("unknown well form {other:?} (quartic or harmonic_barrier)"));
            None
        }
        None => None,
    };
    let mut spec = DoubleWellSpec { form: form?, ..def };
    opt_positive(w, s, "half_width", &mut spec.half_width);
    opt_positive(w, s, "mass", &mut spec.mass);
    if s.table.get("points").is_some() {
        spec.points = w.count(s, "points", 20).map_or(spec.points, |v| v as usize);
    }
    if let Err(e) = spec.validate() {
        w.issue(s.path.clone(), s.span.clone(), e.to_string());
        return None;
    }
    Some(spec)
}

fn read_cavity(w: &mut Walker<'_>, s: &mut Section<'_>) -> Option<CavityGeometry> {
    let sigma = w.required(s, "sigma", |w, s| w.positive(s, "sigma"));
    let k = w.required(s, "k", |w, s| w.finite(s, "k"));
    let length = w.required(s, "length", |w, s| w.positive(s, "length"));
    let l_h = w.required(s, "l_h", |w, s| w.positive(s, "l_h"));
    let u0 = w.required(s, "u0", |w, s| w.finite(s, "u0"));
    let eta = w.required(s, "eta", |w, s| w.finite(s, "eta"));
    let delta_c = w.required(s, "delta_c", |w, s| w.finite(s, "delta_c"));
    let g = CavityGeometry {
        sigma: sigma?,
        k: k?,
        length: length?,
        l_h: l_h?,
        u0: u0?,
        eta: eta?,
        delta_c: delta_c?,
    };
    if let Err(e) = g.validate() {
        w.issue(s.path.clone(), s.span.clone(), e.to_string());
        return None;
    }
    Some(g)
}
