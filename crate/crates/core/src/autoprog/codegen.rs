//! Source generation. A program is assembled from four text blocks, one per
//! building block, concatenated in order: structure, milieu, update
//! function, main loop.

use std::fmt::Write as _;

use super::amp::{AmpDocument, UpdatePayload};
use super::{AutoprogError, Result};
use crate::milieu::LinkKind;
use crate::state::StateSet;
use crate::trajectory::format_real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Standalone C99 program; build with any C compiler.
    C,
}

impl Backend {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "c" | "C" => Ok(Backend::C),
            other => Err(AutoprogError::NoBackendConfigured(other.to_string())),
        }
    }

    /// File name the program text is written to before building.
    pub fn source_file(self) -> &'static str {
        match self {
            Backend::C => "model.c",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramText {
    pub backend: Backend,
    pub structure: String,
    pub milieu: String,
    pub update: String,
    pub main_loop: String,
}

impl ProgramText {
    pub fn text(&self) -> String {
        [&self.structure, &self.milieu, &self.update, &self.main_loop].into_iter().map(String::as_str).collect()
    }
}

pub fn generate_source(doc: &AmpDocument, backend: Backend) -> Result<ProgramText> {
    // Reject documents that do not describe a runnable system.
    doc.to_system()?;
    match backend {
        Backend::C => Ok(ProgramText {
            backend,
            structure: c_structure(doc),
            milieu: c_milieu(doc),
            update: c_update(doc),
            main_loop: c_main_loop(doc),
        }),
    }
}

fn c_list<I: IntoIterator<Item = String>>(items: I) -> String {
    let mut out = String::new();
    for (k, item) in items.into_iter().enumerate() {
        if k > 0 {
            out.push_str(if k % 16 == 0 { ",\n    " } else { ", " });
        }
        out.push_str(&item);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn c_structure(doc: &AmpDocument) -> String {
    let boolean = doc.states == StateSet::Boolean;
    let init = doc.init.states().iter().map(|&v| {
        if boolean {
            if v == 0.0 {
                "0".to_string()
            } else {
                "1".to_string()
            }
        } else {
            format_real(v)
        }
    });
    format!(
        "/* structure: entities and their initial states */\n\
         #include <stdio.h>\n\
         #include <string.h>\n\
         \n\
         #define P {p}\n\
         #define BOOLEAN_STATES {b}\n\
         static double state[P] = {{\n    {init}\n}};\n\n",
        p = doc.p,
        b = u8::from(boolean),
        init = c_list(init),
    )
}

fn c_milieu(doc: &AmpDocument) -> String {
    let rows = doc.milieu.rows();
    let mut starts = Vec::with_capacity(rows.len() + 1);
    let mut total = 0usize;
    starts.push("0".to_string());
    for row in rows {
        total += row.len();
        starts.push(total.to_string());
    }
    let sources = rows.iter().flatten().map(|l| l.source.to_string());
    let mut out = String::from("/* milieu: row i lists the entities influencing entity i */\n");
    let _ = writeln!(out, "#define LINKS {}", total.max(1));
    let _ = writeln!(out, "static const int row_start[P + 1] = {{\n    {}\n}};", c_list(starts));
    let _ = writeln!(out, "static const int source[LINKS] = {{\n    {}\n}};", c_list(sources));
    if doc.milieu.kind() == LinkKind::Weighted {
        let weights = rows.iter().flatten().map(|l| format_real(l.weight));
        let _ = writeln!(out, "static const double weight[LINKS] = {{\n    {}\n}};", c_list(weights));
    }
    out.push('\n');
    out
}

fn c_update(doc: &AmpDocument) -> String {
    match &doc.update {
        UpdatePayload::Table(table) => {
            let outputs = table.outputs().into_iter().map(|b| b.to_string());
            format!(
                "/* update function: elementary rule table indexed by 4*left + 2*center + right */\n\
                 static const unsigned char table[8] = {{ {} }};\n\
                 \n\
                 static int bit(double v) {{ return v != 0.0; }}\n\
                 \n\
                 static void step_model(const double *cur, double *next, long t) {{\n\
                 \x20   (void)t;\n\
                 \x20   for (int i = 0; i < P; i++) {{\n\
                 \x20       int others[2];\n\
                 \x20       int n = 0;\n\
                 \x20       for (int k = row_start[i]; k < row_start[i + 1]; k++) {{\n\
                 \x20           if (source[k] != i) others[n++] = source[k];\n\
                 \x20       }}\n\
                 \x20       int left = i, right = i;\n\
                 \x20       if (n == 1) {{\n\
                 \x20           left = right = others[0];\n\
                 \x20       }} else if (n == 2) {{\n\
                 \x20           int back0 = (i + P - others[0]) % P;\n\
                 \x20           int back1 = (i + P - others[1]) % P;\n\
                 \x20           left = back0 <= back1 ? others[0] : others[1];\n\
                 \x20           right = back0 <= back1 ? others[1] : others[0];\n\
                 \x20       }}\n\
                 \x20       next[i] = table[4 * bit(cur[left]) + 2 * bit(cur[i]) + bit(cur[right])];\n\
                 \x20   }}\n\
                 }}\n\n",
                c_list(outputs)
            )
        }
        UpdatePayload::Perceptron { layers, width, biases, .. } => {
            let biases = biases.iter().map(|&b| format_real(b));
            format!(
                "/* update function: threshold perceptrons, one layer per step */\n\
                 #define LAYERS {layers}\n\
                 #define WIDTH {width}\n\
                 static const double bias[(LAYERS - 1) * WIDTH] = {{\n    {}\n}};\n\
                 \n\
                 static void step_model(const double *cur, double *next, long t) {{\n\
                 \x20   int layer = (int)(t % (LAYERS - 1)) + 1;\n\
                 \x20   memcpy(next, cur, sizeof(double) * P);\n\
                 \x20   for (int j = layer * WIDTH; j < (layer + 1) * WIDTH; j++) {{\n\
                 \x20       double in = bias[j - WIDTH];\n\
                 \x20       for (int k = row_start[j]; k < row_start[j + 1]; k++) {{\n\
                 \x20           in += weight[k] * cur[source[k]];\n\
                 \x20       }}\n\
                 \x20       next[j] = in >= 0.5 ? 1.0 : 0.0;\n\
                 \x20   }}\n\
                 }}\n\n",
                c_list(biases)
            )
        }
    }
}

fn c_main_loop(doc: &AmpDocument) -> String {
    format!(
        "/* main loop: print every state from t = 0 to STEPS */\n\
         #define STEPS {steps}L\n\
         \n\
         static void print_state(const double *s) {{\n\
         \x20   for (int i = 0; i < P; i++) {{\n\
         #if BOOLEAN_STATES\n\
         \x20       putchar(s[i] != 0.0 ? '1' : '0');\n\
         #else\n\
         \x20       char buf[64];\n\
         \x20       snprintf(buf, sizeof buf, \"%.9f\", s[i]);\n\
         \x20       const char *text = buf;\n\
         \x20       if (buf[0] == '-' && strspn(buf + 1, \"0.\") == strlen(buf + 1)) text = buf + 1;\n\
         \x20       if (i > 0) putchar(' ');\n\
         \x20       fputs(text, stdout);\n\
         #endif\n\
         \x20   }}\n\
         \x20   putchar('\\n');\n\
         }}\n\
         \n\
         int main(void) {{\n\
         \x20   static double next[P];\n\
         \x20   for (long t = 0; t < STEPS; t++) {{\n\
         \x20       print_state(state);\n\
         \x20       step_model(state, next, t);\n\
         \x20       memcpy(state, next, sizeof state);\n\
         \x20   }}\n\
         \x20   print_state(state);\n\
         \x20   return fflush(stdout) == 0 ? 0 : 1;\n\
         }}\n",
        steps = doc.steps
    )
}
