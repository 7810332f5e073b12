//! Line-oriented schedule files.
//!
//! ```text
//! # W state on four ions
//! config N=4 nmax=8 ratio=100
//! seed 7
//! init fock=0 dicke=0
//! pulse blue k0=0 n0=0 angle=pi phase=pi/2
//! expect fock=1 dicke=1
//! ```
//!
//! Stanzas:
//! - `config N= nmax= (ratio= | omega0=) [omega_eff= eta1= eta2= delta= nu= phase= inhom=a,b,..]`
//! - `init fock= (dicke= | bits=)`, default `fock=0 dicke=0`
//! - `pulse blue|red k0= [n0=] angle= [phase=] [model=] [branch=]`
//! - `pulse carrier angle= [phase=]`
//! - `pulse ancilla_red [n0=] angle= [phase=] [model=]`
//! - `measure ancilla`
//! - `expect fock= (dicke= | bits=) [ancilla=e|g]`
//! - `seed <u64>`
//!
//! Angles accept decimals and `pi` rationals: `pi`, `-pi/2`, `3pi/4`.
//! Bit strings list ions in order, `e`/`1` excited and `g`/`0` ground.
//! `model` is `two-level`, `symmetric` or `full`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;

use crate::config::ConfigSpec;
use crate::hamiltonians::{DoubletTarget, Sideband};
use crate::protocols::{FidelityModel, IonicState, PulseKind, PulseSchedule, PulseStep, StateSpec};

/// A diagnostic anchored at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DslError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for DslError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceLocation {
    pub line: usize,
    pub column: usize,
}

/// Parsed schedule file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDocument {
    pub raw: String,
    pub config: ConfigSpec,
    pub schedule: PulseSchedule,
    /// Location of each step, parallel to `schedule.steps`.
    pub step_locations: Vec<SourceLocation>,
}

impl ScheduleDocument {
    /// Canonical text; reparsing it yields the same config and schedule.
    pub fn to_text(&self) -> Result<String, DslError> {
        serialize_schedule(&self.config, &self.schedule)
    }

    /// Same config and schedule, ignoring the source text and locations.
    pub fn same_schedule(&self, other: &ScheduleDocument) -> bool {
        self.config == other.config && self.schedule == other.schedule
    }
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in content.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &content[s..i],
                    column: content[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &content[s..],
            column: content[..s].chars().count() + 1,
        });
    }
    tokens
}

struct Field<'a> {
    key: &'a str,
    value: &'a str,
    column: usize,
    value_column: usize,
}

struct Line<'a> {
    number: usize,
    fields: Vec<Field<'a>>,
    used: HashSet<&'a str>,
}

impl<'a> Line<'a> {
    fn err(&self, column: usize, message: impl Into<String>) -> DslError {
        DslError {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    fn parse(number: usize, tokens: &[Token<'a>], stanza: &str) -> Result<Self, DslError> {
        let mut fields: Vec<Field<'a>> = Vec::new();
        for t in tokens {
            let Some((key, value)) = t.text.split_once('=') else {
                return Err(DslError {
                    line: number,
                    column: t.column,
                    message: format!("expected key=value in {stanza}, found `{}`", t.text),
                });
            };
            if key.is_empty() || value.is_empty() {
                return Err(DslError {
                    line: number,
                    column: t.column,
                    message: format!("malformed key=value `{}`", t.text),
                });
            }
            if fields.iter().any(|f| f.key == key) {
                return Err(DslError {
                    line: number,
                    column: t.column,
                    message: format!("duplicate key `{key}`"),
                });
            }
            fields.push(Field {
                key,
                value,
                column: t.column,
                value_column: t.column + key.chars().count() + 1,
            });
        }
        Ok(Self {
            number,
            fields,
            used: HashSet::new(),
        })
    }

    fn take(&mut self, key: &'a str) -> Option<(&'a str, usize)> {
        let found = self.fields.iter().find(|f| f.key == key).map(|f| (f.value, f.value_column));
        if found.is_some() {
            self.used.insert(key);
        }
        found
    }

    fn require(&mut self, key: &'a str, stanza: &str, column: usize) -> Result<(&'a str, usize), DslError> {
        self.take(key)
            .ok_or_else(|| self.err(column, format!("{stanza} needs `{key}=`")))
    }

    fn finish(&self, stanza: &str) -> Result<(), DslError> {
        match self.fields.iter().find(|f| !self.used.contains(f.key)) {
            Some(f) => Err(self.err(f.column, format!("unknown key `{}` for {stanza}", f.key))),
            None => Ok(()),
        }
    }

    fn number(&self, value: &str, column: usize) -> Result<f64, DslError> {
        match value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(column, format!("malformed number `{value}`"))),
        }
    }

    fn integer(&self, value: &str, column: usize) -> Result<usize, DslError> {
        value
            .parse::<usize>()
            .map_err(|_| self.err(column, format!("malformed non-negative integer `{value}`")))
    }

    fn angle(&self, value: &str, column: usize) -> Result<f64, DslError> {
        parse_angle(value).ok_or_else(|| self.err(column, format!("malformed angle `{value}`")))
    }
}

/// Parses a decimal or a `pi` rational such as `3pi/4`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, text),
    };
    let Some(pos) = body.find("pi") else {
        return text.parse::<f64>().ok().filter(|v| v.is_finite());
    };
    let (coef, rest) = (&body[..pos], &body[pos + 2..]);
    let coef: f64 = if coef.is_empty() {
        1.0
    } else {
        let c: u32 = coef.parse().ok()?;
        c as f64
    };
    let den: f64 = if rest.is_empty() {
        1.0
    } else {
        let d: u32 = rest.strip_prefix('/')?.parse().ok()?;
        if d == 0 {
            return None;
        }
        d as f64
    };
    Some(sign * coef * PI / den)
}

/// Shortest text that [`parse_angle`] maps back to `value` exactly,
/// preferring `pi` rationals with denominators up to 64.
pub fn format_angle(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let sign = if value < 0.0 { "-" } else { "" };
    let mag = value.abs();
    for den in 1..=64u32 {
        let coef = (mag * den as f64 / PI).round();
        if coef < 1.0 || coef > u32::MAX as f64 {
            continue;
        }
        if coef * PI / den as f64 == mag {
            let c = coef as u32;
            let head = if c == 1 { String::new() } else { c.to_string() };
            let tail = if den == 1 { String::new() } else { format!("/{den}") };
            return format!("{sign}{head}pi{tail}");
        }
    }
    format!("{value}")
}

fn parse_bits(line: &Line<'_>, value: &str, column: usize) -> Result<Vec<bool>, DslError> {
    value
        .chars()
        .enumerate()
        .map(|(i, c)| match c {
            'e' | '1' => Ok(true),
            'g' | '0' => Ok(false),
            _ => Err(line.err(column + i, format!("bit strings use e/g or 1/0, found `{c}`"))),
        })
        .collect()
}

fn parse_model(line: &Line<'_>, value: &str, column: usize) -> Result<FidelityModel, DslError> {
    FidelityModel::from_name(value)
        .ok_or_else(|| line.err(column, format!("unknown model `{value}` (two-level, symmetric, full)")))
}

fn parse_config(line: &mut Line<'_>, column: usize) -> Result<ConfigSpec, DslError> {
    let (n_text, n_col) = line.require("N", "config", column)?;
    let n = line.integer(n_text, n_col)?;
    if n == 0 {
        return Err(line.err(n_col, "N must be at least 1"));
    }
    let (m_text, m_col) = line.require("nmax", "config", column)?;
    let n_max = line.integer(m_text, m_col)?;
    if n_max == 0 {
        return Err(line.err(m_col, "nmax must be at least 1"));
    }
    let mut spec = ConfigSpec::new(n, n_max);
    let real = |line: &mut Line<'_>, key: &'static str| -> Result<Option<f64>, DslError> {
        match line.take(key) {
            Some((v, c)) => Ok(Some(line.number(v, c)?)),
            None => Ok(None),
        }
    };
    spec.ratio = real(line, "ratio")?;
    spec.omega0 = real(line, "omega0")?;
    spec.omega_eff = real(line, "omega_eff")?;
    spec.eta1 = real(line, "eta1")?;
    spec.eta2 = real(line, "eta2")?;
    spec.delta = real(line, "delta")?;
    spec.nu = real(line, "nu")?;
    if let Some((v, c)) = line.take("phase") {
        spec.phase = Some(line.angle(v, c)?);
    }
    if let Some((v, c)) = line.take("inhom") {
        let mut scales = Vec::new();
        let mut offset = 0;
        for part in v.split(',') {
            scales.push(line.number(part, c + offset)?);
            offset += part.chars().count() + 1;
        }
        if scales.len() != n {
            return Err(line.err(c, format!("inhom lists {} scale factors for N = {n}", scales.len())));
        }
        spec.inhom = Some(scales);
    }
    line.finish("config")?;
    if spec.ratio.is_some() && spec.omega0.is_some() {
        return Err(line.err(column, "give either ratio or omega0, not both"));
    }
    if spec.ratio.is_none() && spec.omega0.is_none() {
        return Err(line.err(column, "config needs `ratio=` or `omega0=`"));
    }
    spec.build().map_err(|e| line.err(column, e.to_string()))?;
    Ok(spec)
}

fn parse_state(
    line: &mut Line<'_>,
    stanza: &str,
    column: usize,
    spec: &ConfigSpec,
    allow_ancilla: bool,
) -> Result<StateSpec, DslError> {
    let fock = match line.take("fock") {
        Some((v, c)) => {
            let f = line.integer(v, c)?;
            if f > spec.n_max {
                return Err(line.err(c, format!("fock exceeds nmax = {}", spec.n_max)));
            }
            f
        }
        None => 0,
    };
    let dicke = line.take("dicke");
    let bits = line.take("bits");
    let ionic = match (dicke, bits) {
        (Some(_), Some((_, c))) => return Err(line.err(c, format!("{stanza} takes dicke= or bits=, not both"))),
        (Some((v, c)), None) => {
            let k = line.integer(v, c)?;
            if k > spec.n_ions {
                return Err(line.err(c, format!("dicke exceeds N = {}", spec.n_ions)));
            }
            IonicState::Dicke(k)
        }
        (None, Some((v, c))) => {
            let b = parse_bits(line, v, c)?;
            if b.len() != spec.n_ions {
                return Err(line.err(c, format!("bit string has {} ions, N = {}", b.len(), spec.n_ions)));
            }
            IonicState::Bits(b)
        }
        (None, None) => {
            if stanza == "expect" {
                return Err(line.err(column, "expect needs `dicke=` or `bits=`"));
            }
            IonicState::Dicke(0)
        }
    };
    let ancilla = if allow_ancilla {
        match line.take("ancilla") {
            Some(("e", _)) => Some(true),
            Some(("g", _)) => Some(false),
            Some((v, c)) => return Err(line.err(c, format!("ancilla is `e` or `g`, found `{v}`"))),
            None => None,
        }
    } else {
        None
    };
    line.finish(stanza)?;
    Ok(StateSpec { fock, ionic, ancilla })
}

fn parse_pulse(line: &mut Line<'_>, kind: &Token<'_>, spec: &ConfigSpec) -> Result<PulseStep, DslError> {
    let stanza = format!("pulse {}", kind.text);
    let (angle_text, angle_col) = line.require("angle", &stanza, kind.column)?;
    let angle = line.angle(angle_text, angle_col)?;
    if angle < 0.0 {
        return Err(line.err(angle_col, "angle must be non-negative"));
    }
    let phase = match line.take("phase") {
        Some((v, c)) => line.angle(v, c)?,
        None => 0.0,
    };
    let n_max = spec.n_max;
    let n0 = |line: &mut Line<'_>| -> Result<usize, DslError> {
        match line.take("n0") {
            Some((v, c)) => {
                let n0 = line.integer(v, c)?;
                if n0 + 1 > n_max {
                    return Err(line.err(c, format!("n0 exceeds nmax-1 = {}", n_max as i64 - 1)));
                }
                Ok(n0)
            }
            None if n_max >= 1 => Ok(0),
            None => Err(line.err(kind.column, "nmax leaves no room for a sideband")),
        }
    };
    let kind_value = match kind.text {
        "blue" | "red" => {
            let (k_text, k_col) = line.require("k0", &stanza, kind.column)?;
            let k0 = line.integer(k_text, k_col)?;
            if k0 + 1 > spec.n_ions {
                return Err(line.err(k_col, format!("k0 exceeds N-1 = {}", spec.n_ions as i64 - 1)));
            }
            let n0 = n0(line)?;
            let mut target = if kind.text == "blue" {
                DoubletTarget::blue(n0, k0)
            } else {
                DoubletTarget::red(n0, k0)
            };
            if let Some((v, c)) = line.take("branch") {
                target.branch = Some(line.integer(v, c)?);
            }
            PulseKind::SelectiveSideband { target }
        }
        "carrier" => PulseKind::Carrier,
        "ancilla_red" => PulseKind::AncillaRedSideband { n0: n0(line)? },
        other => {
            return Err(line.err(
                kind.column,
                format!("unknown pulse `{other}` (blue, red, carrier, ancilla_red)"),
            ))
        }
    };
    let model = if kind.text == "carrier" {
        None
    } else {
        match line.take("model") {
            Some((v, c)) => Some(parse_model(line, v, c)?),
            None => None,
        }
    };
    line.finish(&stanza)?;
    Ok(PulseStep {
        kind: kind_value,
        rabi_angle: angle,
        phase,
        model,
    })
}

/// Parses a schedule file, reporting the first problem with its line and column.
pub fn parse_schedule(text: &str) -> Result<ScheduleDocument, DslError> {
    let mut config: Option<ConfigSpec> = None;
    let mut initial: Option<StateSpec> = None;
    let mut steps = Vec::new();
    let mut locations = Vec::new();
    let mut expect = Vec::new();
    let mut seed: Option<u64> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let number = idx + 1;
        let tokens = tokenize(raw_line);
        let Some(head) = tokens.first() else { continue };
        let anchor = |column: usize, message: String| DslError {
            line: number,
            column,
            message,
        };
        if head.text == "config" {
            if config.is_some() {
                return Err(anchor(head.column, "second config stanza".into()));
            }
            let mut line = Line::parse(number, &tokens[1..], "config")?;
            config = Some(parse_config(&mut line, head.column)?);
            continue;
        }
        let spec = match &config {
            Some(c) => c,
            None if matches!(head.text, "init" | "pulse" | "measure" | "expect" | "seed") => {
                return Err(anchor(head.column, "missing config stanza".into()))
            }
            None => return Err(anchor(head.column, format!("unknown stanza `{}`", head.text))),
        };
        match head.text {
            "init" => {
                if initial.is_some() {
                    return Err(anchor(head.column, "second init stanza".into()));
                }
                let mut line = Line::parse(number, &tokens[1..], "init")?;
                initial = Some(parse_state(&mut line, "init", head.column, spec, false)?);
            }
            "expect" => {
                let mut line = Line::parse(number, &tokens[1..], "expect")?;
                expect.push(parse_state(&mut line, "expect", head.column, spec, true)?);
            }
            "pulse" => {
                let Some(kind) = tokens.get(1) else {
                    return Err(anchor(head.column, "pulse needs a kind (blue, red, carrier, ancilla_red)".into()));
                };
                let mut line = Line::parse(number, &tokens[2..], "pulse")?;
                steps.push(parse_pulse(&mut line, kind, spec)?);
                locations.push(SourceLocation {
                    line: number,
                    column: head.column,
                });
            }
            "measure" => {
                match tokens.get(1) {
                    Some(t) if t.text == "ancilla" => {}
                    Some(t) => return Err(anchor(t.column, format!("only `measure ancilla` is supported, found `{}`", t.text))),
                    None => return Err(anchor(head.column, "measure needs a target: `measure ancilla`".into())),
                }
                if let Some(extra) = tokens.get(2) {
                    return Err(anchor(extra.column, format!("unexpected `{}` after measure ancilla", extra.text)));
                }
                steps.push(PulseStep::measure());
                locations.push(SourceLocation {
                    line: number,
                    column: head.column,
                });
            }
            "seed" => {
                if seed.is_some() {
                    return Err(anchor(head.column, "second seed stanza".into()));
                }
                let Some(value) = tokens.get(1) else {
                    return Err(anchor(head.column, "seed needs a value".into()));
                };
                if let Some(extra) = tokens.get(2) {
                    return Err(anchor(extra.column, format!("unexpected `{}` after seed", extra.text)));
                }
                seed = Some(
                    value
                        .text
                        .parse()
                        .map_err(|_| anchor(value.column, format!("malformed seed `{}`", value.text)))?,
                );
            }
            other => return Err(anchor(head.column, format!("unknown stanza `{other}`"))),
        }
    }

    let Some(spec) = config else {
        return Err(DslError {
            line: 1,
            column: 1,
            message: "missing config stanza".into(),
        });
    };
    let chain = spec.build().map_err(|e| DslError {
        line: 1,
        column: 1,
        message: e.to_string(),
    })?;
    let mut schedule = PulseSchedule::new(chain, initial.unwrap_or_else(|| StateSpec::dicke(0, 0)));
    schedule.steps = steps;
    schedule.expect = expect;
    schedule.seed = seed.unwrap_or(0);
    Ok(ScheduleDocument {
        raw: text.to_string(),
        config: spec,
        schedule,
        step_locations: locations,
    })
}

fn format_state(spec: &StateSpec) -> Result<String, DslError> {
    let ionic = match &spec.ionic {
        IonicState::Dicke(k) => format!("dicke={k}"),
        IonicState::Bits(b) => format!("bits={}", b.iter().map(|x| if *x { 'e' } else { 'g' }).collect::<String>()),
        _ => {
            return Err(DslError {
                line: 0,
                column: 0,
                message: "amplitude lists have no schedule-file form".into(),
            })
        }
    };
    let mut out = format!("fock={} {ionic}", spec.fock);
    if let Some(a) = spec.ancilla {
        out.push_str(if a { " ancilla=e" } else { " ancilla=g" });
    }
    Ok(out)
}

fn format_config(spec: &ConfigSpec) -> String {
    let mut out = format!("config N={} nmax={}", spec.n_ions, spec.n_max);
    for (key, value) in [
        ("ratio", spec.ratio),
        ("omega0", spec.omega0),
        ("omega_eff", spec.omega_eff),
        ("eta1", spec.eta1),
        ("eta2", spec.eta2),
        ("delta", spec.delta),
        ("nu", spec.nu),
    ] {
        if let Some(v) = value {
            out.push_str(&format!(" {key}={v}"));
        }
    }
    if let Some(p) = spec.phase {
        out.push_str(&format!(" phase={}", format_angle(p)));
    }
    if let Some(s) = &spec.inhom {
        let list: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(" inhom={}", list.join(",")));
    }
    out
}

fn format_step(step: &PulseStep) -> String {
    let model = step.model.map(|m| format!(" model={}", m.name())).unwrap_or_default();
    let tail = format!("angle={} phase={}", format_angle(step.rabi_angle), format_angle(step.phase));
    match step.kind {
        PulseKind::SelectiveSideband { target } => {
            let name = match target.sideband {
                Sideband::Blue => "blue",
                Sideband::Red => "red",
            };
            let branch = target.branch.map(|b| format!(" branch={b}")).unwrap_or_default();
            format!("pulse {name} k0={} n0={} {tail}{model}{branch}", target.k0, target.n0)
        }
        PulseKind::Carrier => format!("pulse carrier {tail}"),
        PulseKind::AncillaRedSideband { n0 } => format!("pulse ancilla_red n0={n0} {tail}{model}"),
        PulseKind::Measure => "measure ancilla".to_string(),
    }
}

/// Canonical schedule-file text.
pub fn serialize_schedule(config: &ConfigSpec, schedule: &PulseSchedule) -> Result<String, DslError> {
    if config.delta0.is_some() || !schedule.require_reachable {
        return Err(DslError {
            line: 0,
            column: 0,
            message: "schedule uses settings that have no schedule-file form".into(),
        });
    }
    let mut lines = vec![format_config(config)];
    if schedule.seed != 0 {
        lines.push(format!("seed {}", schedule.seed));
    }
    lines.push(format!("init {}", format_state(&schedule.initial)?));
    for step in &schedule.steps {
        lines.push(format_step(step));
    }
    for e in &schedule.expect {
        lines.push(format!("expect {}", format_state(e)?));
    }
    lines.push(String::new());
    Ok(lines.join("\n"))
}
