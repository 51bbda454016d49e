//! The plain-text model language.
//!
//! One command per line, `keyword (arg, arg, ...)`, where each argument is a
//! number or an identifier. Blank lines and `#` comments are ignored.
//! [`parse`] collects syntax diagnostics for the whole file, [`validate`]
//! turns the commands into a [`Model`] and reports every semantic problem
//! with the line it comes from, and [`print`] writes a model back out.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::cpml::CpmlParams;
use crate::debye::DebyePole;
use crate::excitation::{HeidlerTerm, SourceKind, Waveform};
use crate::model::{Block, DebyeDef, Item, Model, ProbeDef, SourceDef, Volume, WaveformDef};
use crate::probes::ProbeKind;
use crate::wires::{WireModel, WireSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Volume,
    Calctime,
    Output,
    Abc,
    Block,
    Debye,
    Wire,
    Source,
    Calculate,
    Function,
}

impl Keyword {
    pub const ALL: [Keyword; 10] = [
        Keyword::Volume,
        Keyword::Calctime,
        Keyword::Output,
        Keyword::Abc,
        Keyword::Block,
        Keyword::Debye,
        Keyword::Wire,
        Keyword::Source,
        Keyword::Calculate,
        Keyword::Function,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Keyword::Volume => "volume",
            Keyword::Calctime => "calctime",
            Keyword::Output => "output",
            Keyword::Abc => "abc",
            Keyword::Block => "block",
            Keyword::Debye => "debye",
            Keyword::Wire => "wire",
            Keyword::Source => "source",
            Keyword::Calculate => "calculate",
            Keyword::Function => "function",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Keyword::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether `n` arguments are allowed.
    fn arity_ok(self, n: usize) -> bool {
        match self {
            Keyword::Volume => n == 4,
            Keyword::Calctime | Keyword::Output => n == 1,
            Keyword::Abc => n == 7,
            Keyword::Block => (8..=9).contains(&n),
            Keyword::Debye => (3..=9).contains(&n) && n % 2 == 1,
            Keyword::Wire => (8..=9).contains(&n),
            Keyword::Source => n == 9,
            Keyword::Calculate => (7..=8).contains(&n),
            Keyword::Function => n >= 3,
        }
    }

    fn arity_text(self) -> &'static str {
        match self {
            Keyword::Volume => "4",
            Keyword::Calctime | Keyword::Output => "1",
            Keyword::Abc => "7",
            Keyword::Block => "8 or 9",
            Keyword::Debye => "3, 5, 7 or 9",
            Keyword::Wire => "8 or 9",
            Keyword::Source => "9",
            Keyword::Calculate => "7 or 8",
            Keyword::Function => "at least 3",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Number(f64),
    Ident(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub value: ArgValue,
    /// 1-based column of the argument's first character.
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub keyword: Keyword,
    pub args: Vec<Arg>,
    /// 1-based line number.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

fn parse_line(raw: &str, line: usize, diags: &mut Vec<Diagnostic>) -> Option<Command> {
    let text = raw.strip_suffix('\r').unwrap_or(raw);
    // Columns count characters; `#` starts a comment anywhere on the line.
    let chars: Vec<char> = text.chars().collect();
    let end = chars.iter().position(|&c| c == '#').unwrap_or(chars.len());
    let chars = &chars[..end];
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    skip_ws(&mut pos);
    if pos == chars.len() {
        return None;
    }
    let mut diag = |col: usize, message: String| {
        diags.push(Diagnostic { line, col: col + 1, message });
        None
    };
    let kw_start = pos;
    while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_') {
        pos += 1;
    }
    let word: String = chars[kw_start..pos].iter().collect();
    let Some(keyword) = Keyword::from_name(&word) else {
        return if word.is_empty() {
            diag(kw_start, format!("expected a keyword, found '{}'", chars[kw_start]))
        } else {
            diag(kw_start, format!("unknown keyword '{word}'"))
        };
    };
    skip_ws(&mut pos);
    if pos == chars.len() || chars[pos] != '(' {
        return diag(pos, format!("expected '(' after {word}"));
    }
    pos += 1;
    let close = match chars[pos..].iter().position(|&c| c == ')') {
        Some(off) => pos + off,
        None => return diag(chars.len(), format!("missing ')' in {word} command")),
    };
    let mut rest = close + 1;
    skip_ws(&mut rest);
    if rest < chars.len() {
        return diag(rest, "unexpected text after ')'".into());
    }
    let mut args = Vec::new();
    let mut ok = true;
    let inner: String = chars[pos..close].iter().collect();
    if !inner.trim().is_empty() {
        let mut col = pos;
        for piece in inner.split(',') {
            let lead = piece.len() - piece.trim_start().len();
            let token = piece.trim();
            let at = col + piece[..lead].chars().count();
            if token.is_empty() {
                diag(at, "empty argument".into());
                ok = false;
            } else if is_ident(token) {
                args.push(Arg { value: ArgValue::Ident(token.to_string()), col: at + 1 });
            } else if let Some(v) = token.parse::<f64>().ok().filter(|v| v.is_finite()) {
                args.push(Arg { value: ArgValue::Number(v), col: at + 1 });
            } else {
                diag(at, format!("invalid argument '{token}'"));
                ok = false;
            }
            col += piece.chars().count() + 1;
        }
    }
    if !ok {
        return None;
    }
    if !keyword.arity_ok(args.len()) {
        return diag(kw_start, format!("{word} takes {} arguments, got {}", keyword.arity_text(), args.len()));
    }
    Some(Command { keyword, args, line })
}

/// Parses a model file. Every line is examined; malformed lines produce
/// diagnostics and are left out of the command list.
pub fn parse(text: &str) -> (Vec<Command>, Vec<Diagnostic>) {
    let mut cmds = Vec::new();
    let mut diags = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        if let Some(c) = parse_line(raw, i + 1, &mut diags) {
            cmds.push(c);
        }
    }
    (cmds, diags)
}

struct Reader<'a> {
    cmd: &'a Command,
    diags: &'a mut Vec<Diagnostic>,
    failed: bool,
}

impl<'a> Reader<'a> {
    fn fail(&mut self, i: usize, message: String) {
        let col = self.cmd.args.get(i).map_or(1, |a| a.col);
        self.diags.push(Diagnostic { line: self.cmd.line, col, message });
        self.failed = true;
    }

    fn num(&mut self, i: usize) -> f64 {
        match &self.cmd.args[i].value {
            ArgValue::Number(v) => *v,
            ArgValue::Ident(s) => {
                let msg = format!("{}: expected a number, found '{s}'", self.cmd.keyword.name());
                self.fail(i, msg);
                0.0
            }
        }
    }

    fn ident(&mut self, i: usize) -> String {
        match &self.cmd.args[i].value {
            ArgValue::Ident(s) => s.clone(),
            ArgValue::Number(v) => {
                let msg = format!("{}: expected a name, found {v}", self.cmd.keyword.name());
                self.fail(i, msg);
                String::new()
            }
        }
    }

    fn point(&mut self, i: usize) -> [f64; 3] {
        [self.num(i), self.num(i + 1), self.num(i + 2)]
    }

    fn nums(&mut self, from: usize) -> Vec<f64> {
        (from..self.cmd.args.len()).map(|i| self.num(i)).collect()
    }
}

#[derive(Default)]
struct Lines {
    block: Vec<usize>,
    debye: Vec<usize>,
    wire: Vec<usize>,
    source: Vec<usize>,
    probe: Vec<usize>,
    waveform: Vec<usize>,
    volume: usize,
    timing: Vec<usize>,
    abc: usize,
}

/// Builds a model from parsed commands, reporting every problem found.
pub fn validate(commands: &[Command]) -> Result<Model, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut seen: HashMap<Keyword, usize> = HashMap::new();
    let mut lines = Lines::default();
    let mut volume = None;
    let mut calctime = None;
    let mut output = None;
    let mut cpml = None;
    let mut model_parts = Model::new(Volume { size: [0.0; 3], delta: 0.0 }, 0.0, 0.0);

    for cmd in commands {
        if matches!(cmd.keyword, Keyword::Volume | Keyword::Calctime | Keyword::Output | Keyword::Abc) {
            if let Some(first) = seen.get(&cmd.keyword) {
                diags.push(Diagnostic {
                    line: cmd.line,
                    col: 1,
                    message: format!("duplicate {} command (first on line {first})", cmd.keyword.name()),
                });
                continue;
            }
            seen.insert(cmd.keyword, cmd.line);
        }
        let mut r = Reader { cmd, diags: &mut diags, failed: false };
        match cmd.keyword {
            Keyword::Volume => {
                let p = r.point(0);
                let delta = r.num(3);
                if !r.failed {
                    volume = Some(Volume { size: p, delta });
                    lines.volume = cmd.line;
                }
            }
            Keyword::Calctime => {
                calctime = Some(r.num(0));
                lines.timing.push(cmd.line);
            }
            Keyword::Output => {
                output = Some(r.num(0));
                lines.timing.push(cmd.line);
            }
            Keyword::Abc => {
                let kind = r.ident(0);
                if !r.failed && kind != "cpml" {
                    r.fail(0, format!("unsupported absorbing boundary '{kind}', expected cpml"));
                }
                let v = r.nums(1);
                if !r.failed {
                    cpml = Some(CpmlParams {
                        depth_m: v[0],
                        kappa_max: v[1],
                        sigma_factor: v[2],
                        alpha_max: v[3],
                        poly_order: v[4],
                        alpha_order: v[5],
                    });
                    lines.abc = cmd.line;
                }
            }
            Keyword::Block => {
                let lo = r.point(0);
                let hi = r.point(3);
                let eps_r = r.num(6);
                let sigma = r.num(7);
                let debye = (cmd.args.len() == 9).then(|| r.ident(8));
                if !r.failed {
                    model_parts.blocks.push(Block { lo, hi, eps_r, sigma, debye });
                    lines.block.push(cmd.line);
                }
            }
            Keyword::Debye => {
                let name = r.ident(0);
                let v = r.nums(1);
                if !r.failed {
                    let poles = v.chunks(2).map(|p| DebyePole { delta_eps: p[0], tau: p[1] }).collect();
                    model_parts.debye.push(DebyeDef { name, poles });
                    lines.debye.push(cmd.line);
                }
            }
            Keyword::Wire => {
                let model = match r.ident(0).as_str() {
                    "thin" => Some(WireModel::Thin),
                    "staircase" => Some(WireModel::Staircase),
                    "" => None,
                    other => {
                        r.fail(0, format!("unknown wire model '{other}', expected thin or staircase"));
                        None
                    }
                };
                let start = r.point(1);
                let end = r.point(4);
                let radius = r.num(7);
                let terminal = if cmd.args.len() == 9 {
                    let f = r.ident(8);
                    if !r.failed && f != "t" {
                        r.fail(8, format!("unknown wire flag '{f}', expected t"));
                    }
                    true
                } else {
                    false
                };
                if let (false, Some(model)) = (r.failed, model) {
                    model_parts.wires.push(WireSegment { model, start, end, radius, terminal });
                    lines.wire.push(cmd.line);
                }
            }
            Keyword::Source => {
                let kind_name = r.ident(0);
                let kind = SourceKind::parse(&kind_name);
                if !r.failed && kind.is_none() {
                    r.fail(
                        0,
                        format!("unknown source kind '{kind_name}', expected current, voltage, hard_e or soft_e"),
                    );
                }
                let start = r.point(1);
                let end = r.point(4);
                let resistance = r.num(7);
                let waveform = r.ident(8);
                if let (false, Some(kind)) = (r.failed, kind) {
                    model_parts.sources.push(SourceDef { kind, start, end, resistance, waveform });
                    lines.source.push(cmd.line);
                }
            }
            Keyword::Calculate => {
                let kind = match r.ident(0).as_str() {
                    "current" => Some(ProbeKind::Current),
                    "voltage" => Some(ProbeKind::Voltage),
                    "" => None,
                    other => {
                        r.fail(0, format!("unknown probe kind '{other}', expected current or voltage"));
                        None
                    }
                };
                let start = r.point(1);
                let end = r.point(4);
                let name = (cmd.args.len() == 8).then(|| r.ident(7));
                if let (false, Some(kind)) = (r.failed, kind) {
                    model_parts.probes.push(ProbeDef { kind, start, end, name });
                    lines.probe.push(cmd.line);
                }
            }
            Keyword::Function => {
                let name = r.ident(0);
                let kind = r.ident(1);
                let v = r.nums(2);
                if r.failed {
                    continue;
                }
                let waveform = match kind.as_str() {
                    "heidler" => {
                        if v.is_empty() || !v.len().is_multiple_of(4) {
                            r.fail(2, "heidler takes groups of four values: i0, tau1, tau2, n".into());
                            continue;
                        }
                        let terms =
                            v.chunks(4).map(|t| HeidlerTerm { i0: t[0], tau1: t[1], tau2: t[2], n: t[3] }).collect();
                        Waveform::Heidler(terms)
                    }
                    "custom" => {
                        if v.len() < 2 {
                            r.fail(2, "custom takes a sample interval followed by at least one value".into());
                            continue;
                        }
                        Waveform::Sampled { sample_dt: v[0], values: v[1..].to_vec() }
                    }
                    other => {
                        r.fail(1, format!("unknown function kind '{other}', expected heidler or custom"));
                        continue;
                    }
                };
                model_parts.waveforms.push(WaveformDef { name, waveform });
                lines.waveform.push(cmd.line);
            }
        }
    }

    let first_line = commands.first().map_or(1, |c| c.line);
    for (kw, what) in [
        (Keyword::Volume, seen.contains_key(&Keyword::Volume)),
        (Keyword::Calctime, seen.contains_key(&Keyword::Calctime)),
        (Keyword::Output, seen.contains_key(&Keyword::Output)),
        (Keyword::Abc, seen.contains_key(&Keyword::Abc)),
    ] {
        if !what {
            diags.push(Diagnostic { line: first_line, col: 1, message: format!("missing {} command", kw.name()) });
        }
    }
    if !diags.is_empty() {
        diags.sort_by_key(|d| (d.line, d.col));
        return Err(diags);
    }

    let mut model = model_parts;
    model.volume = volume.expect("checked");
    model.calctime = calctime.expect("checked");
    model.output_interval = output.expect("checked");
    model.cpml = cpml;
    for issue in model.issues() {
        let line = match issue.item {
            Item::Volume => lines.volume,
            Item::Timing => lines.timing.first().copied().unwrap_or(lines.volume),
            Item::Cpml => lines.abc,
            Item::Block(i) => lines.block[i],
            Item::Debye(i) => lines.debye[i],
            Item::Wire(i) => lines.wire[i],
            Item::Source(i) => lines.source[i],
            Item::Probe(i) => lines.probe[i],
            Item::Waveform(i) => lines.waveform[i],
            Item::Lumped(_) => first_line,
        };
        diags.push(Diagnostic { line, col: 1, message: issue.message });
    }
    if diags.is_empty() {
        Ok(model)
    } else {
        diags.sort_by_key(|d| (d.line, d.col));
        Err(diags)
    }
}

/// Parses and validates in one go.
pub fn load(text: &str) -> Result<Model, Vec<Diagnostic>> {
    let (cmds, diags) = parse(text);
    if !diags.is_empty() {
        return Err(diags);
    }
    validate(&cmds)
}

/// Error returned by [`print`] for models the language cannot express.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("model cannot be written as commands: {0}")]
pub struct PrintError(pub String);

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn pt(p: &[f64; 3]) -> String {
    format!("{}, {}, {}", num(p[0]), num(p[1]), num(p[2]))
}

/// Writes a model as command text that [`load`] reads back to an equal
/// model.
pub fn print(model: &Model) -> Result<String, PrintError> {
    if !model.lumped.is_empty() {
        return Err(PrintError("lumped elements have no command".into()));
    }
    let Some(c) = &model.cpml else {
        return Err(PrintError("an absorbing boundary is required".into()));
    };
    if model.cfl != crate::model::DEFAULT_CFL {
        return Err(PrintError("a non-default CFL number has no command".into()));
    }
    let mut s = String::new();
    let v = &model.volume;
    let _ = writeln!(s, "volume ({}, {})", pt(&v.size), num(v.delta));
    let _ = writeln!(s, "calctime ({})", num(model.calctime));
    let _ = writeln!(s, "output ({})", num(model.output_interval));
    let _ = writeln!(
        s,
        "abc (cpml, {}, {}, {}, {}, {}, {})",
        num(c.depth_m),
        num(c.kappa_max),
        num(c.sigma_factor),
        num(c.alpha_max),
        num(c.poly_order),
        num(c.alpha_order)
    );
    for b in &model.blocks {
        let _ = write!(s, "block ({}, {}, {}, {}", pt(&b.lo), pt(&b.hi), num(b.eps_r), num(b.sigma));
        if let Some(d) = &b.debye {
            let _ = write!(s, ", {d}");
        }
        s.push_str(")\n");
    }
    for d in &model.debye {
        let _ = write!(s, "debye ({}", d.name);
        for p in &d.poles {
            let _ = write!(s, ", {}, {}", num(p.delta_eps), num(p.tau));
        }
        s.push_str(")\n");
    }
    for w in &model.wires {
        let _ = write!(s, "wire ({}, {}, {}, {}", w.model.name(), pt(&w.start), pt(&w.end), num(w.radius));
        if w.terminal {
            s.push_str(", t");
        }
        s.push_str(")\n");
    }
    for src in &model.sources {
        let _ = writeln!(
            s,
            "source ({}, {}, {}, {}, {})",
            src.kind.name(),
            pt(&src.start),
            pt(&src.end),
            num(src.resistance),
            src.waveform
        );
    }
    for p in &model.probes {
        let _ = write!(s, "calculate ({}, {}, {}", p.kind.name(), pt(&p.start), pt(&p.end));
        if let Some(n) = &p.name {
            let _ = write!(s, ", {n}");
        }
        s.push_str(")\n");
    }
    for w in &model.waveforms {
        let _ = write!(s, "function ({}, ", w.name);
        match &w.waveform {
            Waveform::Heidler(terms) => {
                s.push_str("heidler");
                for t in terms {
                    let _ = write!(s, ", {}, {}, {}, {}", num(t.i0), num(t.tau1), num(t.tau2), num(t.n));
                }
            }
            Waveform::Sampled { sample_dt, values } => {
                let _ = write!(s, "custom, {}", num(*sample_dt));
                for x in values {
                    let _ = write!(s, ", {}", num(*x));
                }
            }
        }
        s.push_str(")\n");
    }
    Ok(s)
}
