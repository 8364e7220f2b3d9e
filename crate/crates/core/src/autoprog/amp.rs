//! The AMP text format.
//!
//! ```text
//! amp 1
//! kind ca
//! p 31
//! states boolean
//! schedule synchronous
//! milieu boolean
//! row 0: 0 1 30
//! ...
//! update table 01101110
//! init 0000000000000001000000000000000
//! steps 15
//! target 1101011001111101000000000000000
//! ```
//!
//! Sections appear in exactly this order; `#` starts a comment line and blank
//! lines are ignored. `row i:` lines list the milieu of entity `i` (ascending
//! row order, rows without links may be omitted); weighted rows write
//! `j=w`. A rule table is written as the eight outputs for neighbourhoods
//! `111, 110, ..., 000`, i.e. the binary form of the rule number. A network
//! writes `update perceptron layers L width w [strategy s]` followed by one
//! `bias ℓ: ...` line per non-input layer. Reals use nine decimal places.

use std::fmt::{self, Write as _};

use super::{AutoprogError, Result};
use crate::ann::{LayeredTopology, PerceptronUpdate, Strategy};
use crate::ca::RuleTable;
use crate::milieu::{Link, LinkKind, MilieuMatrix};
use crate::state::{EntityTuple, StateSet};
use crate::system::{modulate, MetastableSystem, Schedule, SystemSpec, UpdateFunction};
use crate::trajectory::{format_line, format_real, parse_line, Trajectory};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Ca,
    Ann,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ca => "ca",
            ModelKind::Ann => "ann",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdatePayload {
    Table(RuleTable),
    Perceptron {
        layers: usize,
        width: usize,
        strategy: Option<Strategy>,
        /// Biases of layers `1..layers`, entity order.
        biases: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpDocument {
    pub version: u32,
    pub kind: ModelKind,
    pub p: usize,
    pub states: StateSet,
    pub schedule: Schedule,
    pub milieu: MilieuMatrix,
    pub update: UpdatePayload,
    pub init: EntityTuple,
    pub steps: u64,
    /// Metadata only; execution never reads it.
    pub target: Option<EntityTuple>,
}

/// Serialize a system, a step count and an optional target.
pub fn emit(system: &MetastableSystem, steps: u64, target: Option<&EntityTuple>) -> Result<AmpDocument> {
    if let Some(t) = target {
        if t.len() != system.p() {
            return Err(AutoprogError::Semantic {
                line: None,
                message: format!("target has {} entities but p = {}", t.len(), system.p()),
            });
        }
    }
    let (kind, update) = match system.phi() {
        UpdateFunction::RuleTable(table) => (ModelKind::Ca, UpdatePayload::Table(*table)),
        UpdateFunction::Perceptron(u) => (
            ModelKind::Ann,
            UpdatePayload::Perceptron {
                layers: u.layers(),
                width: u.width(),
                strategy: None,
                biases: u.biases().to_vec(),
            },
        ),
    };
    let states = system.spec().states;
    Ok(AmpDocument {
        version: FORMAT_VERSION,
        kind,
        p: system.p(),
        states,
        schedule: system.spec().schedule,
        milieu: system.milieu().clone(),
        update,
        init: system.initial().clone(),
        steps,
        target: target.map(|t| EntityTuple::new(states, t.states().to_vec())).transpose()?,
    })
}

/// Execute a document in-process.
pub fn interpret(doc: &AmpDocument) -> Result<Trajectory> {
    Ok(doc.to_system()?.run(doc.steps)?)
}

impl AmpDocument {
    /// Rebuild the system the document describes.
    pub fn to_system(&self) -> Result<MetastableSystem> {
        let phi = match &self.update {
            UpdatePayload::Table(t) => UpdateFunction::RuleTable(*t),
            UpdatePayload::Perceptron { layers, width, biases, .. } => {
                UpdateFunction::Perceptron(PerceptronUpdate::new(*layers, *width, biases.clone())?)
            }
        };
        let spec = SystemSpec::new(self.states, self.p, self.schedule);
        modulate(spec, phi, self.milieu.clone(), self.init.clone())
            .map_err(|e| AutoprogError::Semantic { line: None, message: e.to_string() })
    }

    /// The network of an `ann` document.
    pub fn topology(&self) -> Result<LayeredTopology> {
        Ok(LayeredTopology::from_system(&self.to_system()?)?)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).document()
    }
}

impl fmt::Display for AmpDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "amp {}", self.version)?;
        writeln!(f, "kind {}", self.kind.name())?;
        writeln!(f, "p {}", self.p)?;
        writeln!(f, "states {}", self.states.name())?;
        writeln!(f, "schedule {}", self.schedule.name())?;
        let weighted = self.milieu.kind() == LinkKind::Weighted;
        writeln!(f, "milieu {}", if weighted { "weighted" } else { "boolean" })?;
        for (i, row) in self.milieu.rows().iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            let mut line = format!("row {i}:");
            for link in row {
                if weighted {
                    let _ = write!(line, " {}={}", link.source, format_real(link.weight));
                } else {
                    let _ = write!(line, " {}", link.source);
                }
            }
            writeln!(f, "{line}")?;
        }
        match &self.update {
            UpdatePayload::Table(table) => {
                let outputs = table.outputs();
                let bits: String = outputs.iter().rev().map(|b| if *b == 1 { '1' } else { '0' }).collect();
                writeln!(f, "update table {bits}")?;
            }
            UpdatePayload::Perceptron { layers, width, strategy, biases } => {
                write!(f, "update perceptron layers {layers} width {width}")?;
                if let Some(s) = strategy {
                    write!(f, " strategy {}", s.name())?;
                }
                writeln!(f)?;
                for (k, chunk) in biases.chunks(*width).enumerate() {
                    let values: Vec<String> = chunk.iter().map(|&b| format_real(b)).collect();
                    writeln!(f, "bias {}: {}", k + 1, values.join(" "))?;
                }
            }
        }
        writeln!(f, "init {}", format_line(&self.init))?;
        writeln!(f, "steps {}", self.steps)?;
        if let Some(t) = &self.target {
            writeln!(f, "target {}", format_line(t))?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> AutoprogError {
    AutoprogError::Parse { line, message: message.into() }
}

fn semantic(line: usize, message: impl Into<String>) -> AutoprogError {
    AutoprogError::Semantic { line: Some(line), message: message.into() }
}

fn number<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("{what}: expected a number, found {tok:?}")))
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { lines, pos: 0 }
    }

    fn last_line(&self) -> usize {
        self.lines.last().map(|(n, _)| *n).unwrap_or(0)
    }

    fn peek_keyword(&self) -> Option<&'a str> {
        self.lines.get(self.pos).and_then(|(_, l)| l.split_whitespace().next())
    }

    /// Next line, which must start with `keyword`; returns the line number
    /// and the rest of the line.
    fn expect(&mut self, keyword: &str) -> Result<(usize, &'a str)> {
        let Some(&(n, line)) = self.lines.get(self.pos) else {
            return Err(parse_err(self.last_line() + 1, format!("missing `{keyword}` section")));
        };
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        if head != keyword {
            return Err(parse_err(n, format!("expected `{keyword}`, found `{head}`")));
        }
        self.pos += 1;
        Ok((n, rest.trim()))
    }

    fn document(mut self) -> Result<AmpDocument> {
        if self.lines.is_empty() {
            return Err(parse_err(1, "empty document"));
        }
        let (n, v) = self.expect("amp")?;
        let version: u32 = number(n, v, "amp")?;
        if version != FORMAT_VERSION {
            return Err(parse_err(n, format!("unsupported format version {version}")));
        }

        let (_, k) = self.expect("kind")?;
        let kind = match k {
            "ca" => ModelKind::Ca,
            "ann" => ModelKind::Ann,
            other => return Err(AutoprogError::UnsupportedKind(other.to_string())),
        };

        let (n, ptext) = self.expect("p")?;
        let p: usize = number(n, ptext, "p")?;
        if p == 0 {
            return Err(semantic(n, "p must be at least 1"));
        }

        let (n, s) = self.expect("states")?;
        let states = match s {
            "boolean" => StateSet::Boolean,
            "real" => StateSet::Real,
            other => return Err(parse_err(n, format!("unknown state set {other:?}"))),
        };

        let (n, s) = self.expect("schedule")?;
        let schedule = match s {
            "synchronous" => Schedule::SynchronousAll,
            "layered" => Schedule::LayeredSweep,
            other => return Err(parse_err(n, format!("unknown schedule {other:?}"))),
        };

        let milieu = self.milieu(p)?;
        let (update_line, update) = self.update(p)?;

        let (n, init_text) = self.expect("init")?;
        let init = self.state_line(n, states, p, init_text)?;

        let (n, steps_text) = self.expect("steps")?;
        let steps: u64 = number(n, steps_text, "steps")?;

        let target = if self.peek_keyword() == Some("target") {
            let (n, t) = self.expect("target")?;
            Some(self.state_line(n, states, p, t)?)
        } else {
            None
        };
        if let Some(&(n, line)) = self.lines.get(self.pos) {
            return Err(parse_err(n, format!("unexpected line {line:?}")));
        }

        match (kind, &update) {
            (ModelKind::Ca, UpdatePayload::Table(_)) | (ModelKind::Ann, UpdatePayload::Perceptron { .. }) => {}
            _ => return Err(semantic(update_line, format!("update payload does not match kind {}", kind.name()))),
        }

        let doc = AmpDocument { version, kind, p, states, schedule, milieu, update, init, steps, target };
        doc.to_system()?;
        Ok(doc)
    }

    fn milieu(&mut self, p: usize) -> Result<MilieuMatrix> {
        let (n, k) = self.expect("milieu")?;
        let kind = match k {
            "boolean" => LinkKind::Boolean,
            "weighted" => LinkKind::Weighted,
            other => return Err(parse_err(n, format!("unknown milieu kind {other:?}"))),
        };
        let mut rows: Vec<Vec<Link>> = vec![Vec::new(); p];
        let mut previous: Option<usize> = None;
        while self.peek_keyword() == Some("row") {
            let (n, rest) = self.expect("row")?;
            let (index, links) =
                rest.split_once(':').ok_or_else(|| parse_err(n, "row lines look like `row i: ...`"))?;
            let i: usize = number(n, index.trim(), "row index")?;
            if i >= p {
                return Err(semantic(n, format!("row {i} is out of range for p = {p}")));
            }
            if previous.is_some_and(|prev| i <= prev) {
                return Err(parse_err(n, format!("row {i} is out of order or repeated")));
            }
            previous = Some(i);
            for tok in links.split_whitespace() {
                let link = match kind {
                    LinkKind::Boolean => Link { source: number(n, tok, "milieu entry")?, weight: 1.0 },
                    LinkKind::Weighted => {
                        let (j, w) = tok
                            .split_once('=')
                            .ok_or_else(|| parse_err(n, format!("weighted entries look like `j=w`, found {tok:?}")))?;
                        let weight: f64 = number(n, w, "weight")?;
                        if !weight.is_finite() {
                            return Err(semantic(n, format!("weight {w} is not finite")));
                        }
                        Link { source: number(n, j, "milieu entry")?, weight }
                    }
                };
                if link.source >= p {
                    return Err(semantic(n, format!("row {i} references entity {} but p = {p}", link.source)));
                }
                rows[i].push(link);
            }
            let mut sources: Vec<usize> = rows[i].iter().map(|l| l.source).collect();
            sources.sort_unstable();
            if sources.windows(2).any(|w| w[0] == w[1]) {
                return Err(semantic(n, format!("row {i} lists an entity twice")));
            }
        }
        MilieuMatrix::from_rows(kind, rows).map_err(|e| semantic(n, e.to_string()))
    }

    fn update(&mut self, p: usize) -> Result<(usize, UpdatePayload)> {
        let (n, rest) = self.expect("update")?;
        let toks: Vec<&str> = rest.split_whitespace().collect();
        match toks.as_slice() {
            ["table", bits] => {
                if bits.len() != 8 || !bits.chars().all(|c| c == '0' || c == '1') {
                    return Err(parse_err(n, "a rule table is eight 0/1 characters"));
                }
                let mut outputs = [0u8; 8];
                for (k, c) in bits.chars().rev().enumerate() {
                    outputs[k] = u8::from(c == '1');
                }
                let table = RuleTable::from_outputs(outputs).map_err(|e| parse_err(n, e.to_string()))?;
                Ok((n, UpdatePayload::Table(table)))
            }
            ["perceptron", "layers", l, "width", w, tail @ ..] => {
                let layers: usize = number(n, l, "layers")?;
                let width: usize = number(n, w, "width")?;
                let strategy = match tail {
                    [] => None,
                    ["strategy", s] => {
                        Some(Strategy::from_name(s).ok_or_else(|| parse_err(n, format!("unknown strategy {s:?}")))?)
                    }
                    _ => return Err(parse_err(n, "trailing text after perceptron header")),
                };
                if layers < 2 || width == 0 {
                    return Err(semantic(n, "a network needs at least 2 layers of width at least 1"));
                }
                if layers * width != p {
                    return Err(semantic(n, format!("{layers} layers of width {width} is not p = {p}")));
                }
                let mut biases = Vec::with_capacity((layers - 1) * width);
                for layer in 1..layers {
                    let (bn, rest) = self.expect("bias")?;
                    let (index, values) =
                        rest.split_once(':').ok_or_else(|| parse_err(bn, "bias lines look like `bias l: ...`"))?;
                    let index: usize = number(bn, index.trim(), "bias layer")?;
                    if index != layer {
                        return Err(parse_err(bn, format!("expected biases of layer {layer}, found {index}")));
                    }
                    let values =
                        values.split_whitespace().map(|v| number::<f64>(bn, v, "bias")).collect::<Result<Vec<_>>>()?;
                    if values.len() != width || values.iter().any(|v| !v.is_finite()) {
                        return Err(semantic(bn, format!("layer {layer} needs {width} finite biases")));
                    }
                    biases.extend(values);
                }
                Ok((n, UpdatePayload::Perceptron { layers, width, strategy, biases }))
            }
            _ => Err(parse_err(n, format!("unrecognised update payload {rest:?}"))),
        }
    }

    fn state_line(&self, n: usize, states: StateSet, p: usize, text: &str) -> Result<EntityTuple> {
        let tuple = parse_line(states, text).map_err(|e| semantic(n, e.to_string()))?;
        if tuple.len() != p {
            return Err(semantic(n, format!("state has {} entities but p = {p}", tuple.len())));
        }
        Ok(tuple)
    }
}
