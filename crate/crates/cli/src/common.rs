//! Shared plumbing: exit-code-carrying errors, model file sniffing, and
//! small parsing/printing helpers.

use std::fmt;
use std::path::Path;

use sympflow::{Fnn, PhaseMap, SympNet};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliFail {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliFail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<sympflow::Error> for CliFail {
    fn from(e: sympflow::Error) -> Self {
        runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliFail>;

pub fn usage(message: impl Into<String>) -> CliFail {
    CliFail {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

pub fn runtime(message: impl Into<String>) -> CliFail {
    CliFail {
        code: EXIT_RUNTIME,
        message: message.into(),
    }
}

pub fn threshold_violation(message: impl Into<String>) -> CliFail {
    CliFail {
        code: EXIT_THRESHOLD,
        message: message.into(),
    }
}

/// "0,1.5" -> [0.0, 1.5]
pub fn parse_point(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| usage(format!("bad coordinate {f:?}: {e}")))
        })
        .collect()
}

/// Coordinate labels in (p.., q..) order: `p,q` for d = 1, `p1..pd,q1..qd`
/// otherwise.
pub fn coord_names(d: usize) -> Vec<String> {
    if d == 1 {
        vec!["p".to_string(), "q".to_string()]
    } else {
        let mut names: Vec<String> = (1..=d).map(|i| format!("p{i}")).collect();
        names.extend((1..=d).map(|i| format!("q{i}")));
        names
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| runtime(format!("creating {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| runtime(format!("writing {}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| runtime(format!("reading {}: {e}", path.display())))
}

/// A trained model of either family, loaded by sniffing the `kind` field.
pub enum AnyModel {
    SympNet(SympNet),
    Fnn(Fnn),
}

impl AnyModel {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_file(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| runtime(format!("{}: not valid JSON: {e}", path.display())))?;
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("sympnet") => Ok(AnyModel::SympNet(SympNet::from_json(&text)?)),
            Some("fnn") => Ok(AnyModel::Fnn(Fnn::from_json(&text)?)),
            Some(other) => Err(runtime(format!(
                "{}: unknown model kind {other:?}",
                path.display()
            ))),
            None => Err(runtime(format!(
                "{}: missing \"kind\" field",
                path.display()
            ))),
        }
    }

    pub fn phase_map(&self) -> &dyn PhaseMap {
        match self {
            AnyModel::SympNet(m) => m,
            AnyModel::Fnn(m) => m,
        }
    }

    pub fn dof(&self) -> usize {
        self.phase_map().dof()
    }

    /// The step scale a SympNet was built with; FNNs carry none.
    pub fn step_h(&self) -> Option<f64> {
        match self {
            AnyModel::SympNet(m) => Some(m.h()),
            AnyModel::Fnn(_) => None,
        }
    }
}

/// Resolution for a value that can come from an explicit flag, a config
/// file, or a built-in default.
pub fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

pub fn pick_opt<T>(cli: Option<T>, file: Option<T>) -> Option<T> {
    cli.or(file)
}

pub fn pick_required<T>(cli: Option<T>, file: Option<T>, flag: &str) -> CliResult<T> {
    cli.or(file)
        .ok_or_else(|| usage(format!("missing required --{flag} (flag or config key)")))
}

/// Renders a path for display inside reports, always with forward slashes so
/// output files are platform-independent.
pub fn rel_display(path: &Path) -> String {
    let native = path.display().to_string();
    if std::path::MAIN_SEPARATOR == '/' {
        native
    } else {
        native.replace(std::path::MAIN_SEPARATOR, "/")
    }
}
