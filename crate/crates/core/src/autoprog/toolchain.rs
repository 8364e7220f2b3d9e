//! Building and running generated programs with the host toolchain.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use wait_timeout::ChildExt;

use super::amp::emit;
use super::codegen::{generate_source, Backend};
use super::{AutoprogError, Result};
use crate::state::StateSet;
use crate::system::MetastableSystem;
use crate::trajectory::{parse_line, Trajectory};

/// Environment variable holding the build command template.
pub const TOOLCHAIN_ENV: &str = "METAMODEL_TOOLCHAIN";

/// Build command used when a C compiler named `cc` is on the path.
/// Contraction is disabled so floating-point sums round exactly as in Rust.
pub const DEFAULT_BUILD_TEMPLATE: &str = "cc -std=c99 -O2 -ffp-contract=off -o {bin} {src}";

/// Program output beyond this many bytes is discarded and reported as an error.
const OUTPUT_LIMIT: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ToolchainConfig {
    /// Build command; `{src}`, `{bin}` and `{dir}` are replaced by the
    /// shell-quoted source path, binary path and work directory.
    pub build: String,
    /// Run command, `{bin}` by default.
    pub run: String,
    /// Limit for the build and for the run, each.
    pub timeout: Duration,
    /// Parent of the per-call work directories; the system temp dir if unset.
    pub work_root: Option<PathBuf>,
    pub backend: Backend,
}

impl ToolchainConfig {
    pub fn new(build: impl Into<String>) -> Result<Self> {
        let config = Self {
            build: build.into(),
            run: "{bin}".into(),
            timeout: Duration::from_secs(60),
            work_root: None,
            backend: Backend::C,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for placeholder in ["{src}", "{bin}"] {
            if !self.build.contains(placeholder) {
                return Err(AutoprogError::InvalidToolchain(format!(
                    "build template {:?} lacks {placeholder}",
                    self.build
                )));
            }
        }
        if !self.run.contains("{bin}") {
            return Err(AutoprogError::InvalidToolchain(format!("run template {:?} lacks {{bin}}", self.run)));
        }
        if self.timeout.is_zero() {
            return Err(AutoprogError::InvalidToolchain("timeout must be positive".into()));
        }
        Ok(())
    }

    /// Parse `key value` lines (`build`, `run`, `timeout`, `work-root`,
    /// `backend`); `#` starts a comment. Keys other than these are errors.
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut build = None;
        let mut run = None;
        let mut timeout = None;
        let mut work_root = None;
        let mut backend = Backend::C;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let value = value.trim();
            match key {
                "build" => build = Some(value.to_string()),
                "run" => run = Some(value.to_string()),
                "timeout" => {
                    let secs: f64 = value.parse().map_err(|_| {
                        AutoprogError::InvalidToolchain(format!("line {}: bad timeout {value:?}", n + 1))
                    })?;
                    if !(secs > 0.0 && secs.is_finite()) {
                        return Err(AutoprogError::InvalidToolchain(format!(
                            "line {}: timeout must be positive",
                            n + 1
                        )));
                    }
                    timeout = Some(Duration::from_secs_f64(secs));
                }
                "work-root" => work_root = Some(PathBuf::from(value)),
                "backend" => backend = Backend::from_name(value)?,
                other => return Err(AutoprogError::InvalidToolchain(format!("line {}: unknown key {other:?}", n + 1))),
            }
        }
        let mut config =
            Self::new(build.ok_or_else(|| AutoprogError::InvalidToolchain("missing `build` line".into()))?)?;
        if let Some(run) = run {
            config.run = run;
        }
        if let Some(t) = timeout {
            config.timeout = t;
        }
        config.work_root = work_root;
        config.backend = backend;
        config.validate()?;
        Ok(config)
    }

    /// Configuration from [`TOOLCHAIN_ENV`], or the default C compiler when
    /// `cc` is on the path. `None` when neither is available.
    pub fn detect() -> Option<Self> {
        if let Ok(template) = std::env::var(TOOLCHAIN_ENV) {
            if !template.trim().is_empty() {
                return Self::new(template).ok();
            }
        }
        let on_path = std::env::var_os("PATH")
            .map(|paths| std::env::split_paths(&paths).any(|dir| dir.join("cc").is_file()))
            .unwrap_or(false);
        on_path.then(|| Self::new(DEFAULT_BUILD_TEMPLATE).expect("default template is valid"))
    }
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

fn expand(template: &str, src: &Path, bin: &Path, dir: &Path) -> String {
    template.replace("{src}", &shell_quote(src)).replace("{bin}", &shell_quote(bin)).replace("{dir}", &shell_quote(dir))
}

fn drain<R: Read + Send + 'static>(mut reader: R) -> JoinHandle<(Vec<u8>, bool)> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut overflow = false;
        let mut buf = [0u8; 64 * 1024];
        loop {
            match reader.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    if kept.len() + n <= OUTPUT_LIMIT {
                        kept.extend_from_slice(&buf[..n]);
                    } else {
                        overflow = true;
                    }
                }
            }
        }
        (kept, overflow)
    })
}

fn kill_group(child: &mut Child) {
    #[cfg(unix)]
    // SAFETY: kill(2) on our own child's process group; no memory is touched.
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

struct Finished {
    status: ExitStatus,
    stdout: Vec<u8>,
    stderr: Vec<u8>,
    overflow: bool,
}

/// Run a shell command in `dir`. `Ok(None)` means it timed out and was killed.
fn run_shell(command: &str, dir: &Path, timeout: Duration) -> Result<Option<Finished>> {
    let mut cmd = Command::new("sh");
    cmd.arg("-c").arg(command).current_dir(dir).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn()?;
    let out = drain(child.stdout.take().expect("piped"));
    let err = drain(child.stderr.take().expect("piped"));
    let status = match child.wait_timeout(timeout)? {
        Some(status) => status,
        None => {
            kill_group(&mut child);
            let _ = out.join();
            let _ = err.join();
            return Ok(None);
        }
    };
    let (stdout, overflow) = out.join().unwrap_or_default();
    let (stderr, _) = err.join().unwrap_or_default();
    Ok(Some(Finished { status, stdout, stderr, overflow }))
}

fn status_text(status: &ExitStatus) -> String {
    match status.code() {
        Some(code) => format!("exit status {code}"),
        None => format!("terminated: {status}"),
    }
}

/// Parse program output as a trajectory. Lines made only of `0`/`1` are
/// Boolean states, anything else real states; all lines must agree in kind
/// and width.
pub(crate) fn parse_output(text: &str) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    let mut shape: Option<(StateSet, usize)> = None;
    for (n, line) in text.lines().enumerate() {
        let set = if !line.is_empty() && line.bytes().all(|b| b == b'0' || b == b'1') {
            StateSet::Boolean
        } else {
            StateSet::Real
        };
        let state = parse_line(set, line).map_err(|e| AutoprogError::OutputParse(format!("line {}: {e}", n + 1)))?;
        match shape {
            None => shape = Some((set, state.len())),
            Some(s) if s == (set, state.len()) => {}
            Some(_) => {
                return Err(AutoprogError::OutputParse(format!("line {} does not match the shape of line 1", n + 1)))
            }
        }
        snapshots.push(state);
    }
    if snapshots.is_empty() {
        return Err(AutoprogError::OutputParse("no output".into()));
    }
    Ok(Trajectory::new(snapshots))
}

/// Write `text` into a fresh work directory, build it, run it and parse its
/// standard output as a trajectory.
pub fn compile_and_run(text: &str, config: &ToolchainConfig) -> Result<Trajectory> {
    config.validate()?;
    let root = config.work_root.clone().unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&root)?;
    let dir = tempfile::Builder::new().prefix("metamodel-").tempdir_in(&root)?;
    let src = dir.path().join(config.backend.source_file());
    let bin = dir.path().join("model");
    std::fs::write(&src, text)?;

    let build = expand(&config.build, &src, &bin, dir.path());
    match run_shell(&build, dir.path(), config.timeout)? {
        None => {
            return Err(AutoprogError::CompileFailed {
                status: format!("timed out after {} s", config.timeout.as_secs_f64()),
                diagnostics: String::new(),
            })
        }
        Some(f) if !f.status.success() => {
            let mut diagnostics = String::from_utf8_lossy(&f.stderr).into_owned();
            diagnostics.push_str(&String::from_utf8_lossy(&f.stdout));
            return Err(AutoprogError::CompileFailed { status: status_text(&f.status), diagnostics });
        }
        Some(_) => {}
    }

    let run = expand(&config.run, &src, &bin, dir.path());
    let finished = run_shell(&run, dir.path(), config.timeout)?
        .ok_or(AutoprogError::RunTimeout { seconds: config.timeout.as_secs_f64() })?;
    if !finished.status.success() {
        return Err(AutoprogError::RunFailed {
            status: status_text(&finished.status),
            stderr: String::from_utf8_lossy(&finished.stderr).into_owned(),
        });
    }
    if finished.overflow {
        return Err(AutoprogError::OutputParse(format!("output exceeded {OUTPUT_LIMIT} bytes")));
    }
    let stdout =
        String::from_utf8(finished.stdout).map_err(|_| AutoprogError::OutputParse("output is not UTF-8".into()))?;
    parse_output(&stdout)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    /// First differing step; `None` when that route ended early.
    Mismatch {
        step: usize,
        expected: Option<String>,
        actual: Option<String>,
    },
}

pub fn compare_trajectories(expected: &Trajectory, actual: &Trajectory) -> Verdict {
    let a = expected.lines();
    let b = actual.lines();
    for step in 0..a.len().max(b.len()) {
        if a.get(step) != b.get(step) {
            return Verdict::Mismatch { step, expected: a.get(step).cloned(), actual: b.get(step).cloned() };
        }
    }
    Verdict::Equal
}

/// Compare the in-process run of `system` with a given program's output.
pub fn verify_program(
    system: &MetastableSystem,
    steps: u64,
    program: &str,
    config: &ToolchainConfig,
) -> Result<Verdict> {
    let expected = system.run(steps)?;
    let actual = compile_and_run(program, config)?;
    Ok(compare_trajectories(&expected, &actual))
}

/// Run `system` both in-process and as a generated, built program.
pub fn verify_equivalence(system: &MetastableSystem, steps: u64, config: &ToolchainConfig) -> Result<Verdict> {
    let doc = emit(system, steps, None)?;
    let program = generate_source(&doc, config.backend)?;
    verify_program(system, steps, &program.text(), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_need_placeholders() {
        assert!(ToolchainConfig::new("cc -o {bin} {src}").is_ok());
        assert!(matches!(ToolchainConfig::new("cc {src}"), Err(AutoprogError::InvalidToolchain(_))));
        let mut c = ToolchainConfig::new("cc -o {bin} {src}").unwrap();
        c.timeout = Duration::ZERO;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_text() {
        let c = ToolchainConfig::from_config_text("# cc\nbuild gcc -o {bin} {src}\ntimeout 2.5\nrun {bin}\n").unwrap();
        assert_eq!(c.build, "gcc -o {bin} {src}");
        assert_eq!(c.timeout, Duration::from_millis(2500));
        assert!(ToolchainConfig::from_config_text("build cc -o {bin} {src}\ncolour blue\n").is_err());
        assert!(ToolchainConfig::from_config_text("timeout 3\n").is_err());
        assert!(ToolchainConfig::from_config_text("build cc -o {bin} {src}\ntimeout 0\n").is_err());
    }

    #[test]
    fn quoting_survives_spaces_and_quotes() {
        let s = expand("cc -o {bin} {src}", Path::new("/tmp/a b/m.c"), Path::new("/tmp/it's"), Path::new("/tmp"));
        assert_eq!(s, r"cc -o '/tmp/it'\''s' '/tmp/a b/m.c'");
    }

    #[test]
    fn output_parsing() {
        let t = parse_output("010\n111\n").unwrap();
        assert_eq!(t.len(), 2);
        assert!(parse_output("010\n11\n").is_err());
        assert!(parse_output("").is_err());
        let r = parse_output("0.500000000 1.000000000\n").unwrap();
        assert_eq!(r.snapshots()[0].set(), StateSet::Real);
        assert!(parse_output("01x\n").is_err());
    }

    #[test]
    fn compare_reports_first_difference() {
        let a = parse_output("000\n010\n111\n").unwrap();
        let b = parse_output("000\n011\n111\n").unwrap();
        assert_eq!(compare_trajectories(&a, &a), Verdict::Equal);
        assert!(matches!(compare_trajectories(&a, &b), Verdict::Mismatch { step: 1, .. }));
        let short = parse_output("000\n").unwrap();
        assert!(matches!(compare_trajectories(&a, &short), Verdict::Mismatch { step: 1, actual: None, .. }));
    }
}
