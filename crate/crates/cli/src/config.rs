//! JSON config files. A config file is a flat object whose keys are the
//! long flag names of the invoked subcommand (kebab-case); explicit flags
//! always win. Unknown keys are usage errors so typos fail loudly.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::common::{usage, CliResult};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}
