//! Report emission. JSON reports carry the resolved config under `"config"`;
//! CSV reports start with a `# config: {...}` line ahead of the header.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{io_error, CliError};

/// 17 significant digits, fixed exponent form.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn csv_report<C: Serialize>(
    config: &C,
    header: &[String],
    rows: &[Vec<String>],
) -> Result<String, CliError> {
    let mut buf = format!("# config: {}\n", serde_json::to_string(config)?).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    String::from_utf8(buf).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn json_report<C: Serialize, R: Serialize>(
    config: &C,
    key: &str,
    result: &R,
) -> Result<String, CliError> {
    let mut map = serde_json::Map::new();
    map.insert("config".into(), serde_json::to_value(config)?);
    map.insert(key.into(), serde_json::to_value(result)?);
    Ok(serde_json::to_string_pretty(&map)? + "\n")
}

pub struct Sink {
    pub out_dir: Option<PathBuf>,
}

impl Sink {
    /// Writes `<out_dir>/<name>` when an output directory is set, stdout otherwise.
    pub fn emit(&self, name: &str, content: &str) -> Result<(), CliError> {
        match &self.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
                let path = dir.join(name);
                write_file(&path, content)?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(content.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }

    /// Path for an auxiliary file: `explicit` if given, else inside the output directory.
    pub fn aux_path(&self, explicit: &Option<String>, default_name: &str) -> Option<PathBuf> {
        explicit
            .as_ref()
            .map(PathBuf::from)
            .or_else(|| self.out_dir.as_ref().map(|d| d.join(default_name)))
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    std::fs::write(path, content).map_err(|e| io_error(path, e))
}

pub fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_error(Path::new(path), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(2.0), "2.0000000000000000e0");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn csv_has_config_line() {
        let s = csv_report(
            &serde_json::json!({"a": 1}),
            &["x".into()],
            &[vec!["1".into()]],
        )
        .unwrap();
        assert_eq!(s, "# config: {\"a\":1}\nx\n1\n");
    }
}
