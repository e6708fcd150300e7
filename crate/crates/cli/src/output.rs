use std::fmt::Display;
use std::io::{Read, Write};
use std::path::Path;

/// Exit status plus message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Display) -> Self {
        Failure { code: 1, message: message.to_string() }
    }

    pub fn data(message: impl Display) -> Self {
        Failure { code: 2, message: message.to_string() }
    }

    /// Exit 2 with the details already printed.
    pub fn silent() -> Self {
        Failure { code: 2, message: String::new() }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

/// Reads a file, or stdin when the path is "-".
pub fn read_input(path: &Path) -> Outcome<String> {
    let mut text = String::new();
    if is_stdio(path) {
        std::io::stdin().read_to_string(&mut text).map_err(|e| Failure::data(format!("stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

/// Writes to stdout when `path` is None or "-", otherwise replaces the
/// file atomically.
pub fn write_output(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) if !is_stdio(p) => write_atomic(p, text.as_bytes()),
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::data(format!("stdout: {e}")))
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Outcome {
    let fail = |e: std::io::Error| Failure::data(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn print_json(value: &impl serde::Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(Failure::data)?;
    write_output(None, &(text + "\n"))
}
