//! Sectioned flat key-value configuration: parsing, schema validation, and
//! typed resolution with provenance tracking.
//!
//! Format, one directive per line:
//!
//! ```text
//! # comment (a '#' starts a comment anywhere on a line)
//! [section]
//! key = value
//! ```
//!
//! Section and key names use `a-z`, `0-9`, `_`. Every key is optional and has
//! a documented default; the full resolved set (with per-key provenance) is
//! embedded in the run summary so runs are self-describing. Unknown sections
//! or keys are rejected with the offending line number.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use saddle_core::io::fmt_sig;

/// Errors carrying the process exit code contract: validation problems
/// (including config syntax) exit 2, convergence failures exit 3.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input, bad parameter, unusable environment.
    Validation(String),
    /// A solver failed to reach its tolerance.
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Convergence(m) => write!(f, "{m}"),
        }
    }
}

impl From<saddle_core::Error> for CliError {
    fn from(e: saddle_core::Error) -> Self {
        match e {
            saddle_core::Error::Convergence { .. } => CliError::Convergence(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Allowed sections and keys; parse-time validation rejects anything else
/// so typos fail fast regardless of which subcommand runs.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "layer",
        &["kind", "x_max", "lambda_max", "h", "h_lambda", "tol", "write_extension"],
    ),
    (
        "saddle",
        &[
            "kind",
            "m",
            "r",
            "l",
            "h",
            "h_lambda",
            "energy_tol",
            "residual_tol",
            "max_sweeps",
            "s_list",
            "exponent_s_list",
            "probes",
            "comparison_probes",
            "c_grad",
        ],
    ),
    (
        "maximal",
        &[
            "kind",
            "m",
            "r",
            "l",
            "h",
            "h_lambda",
            "shift",
            "c_grad",
            "tol",
            "corner_margin",
            "maximality",
            "write_bottom",
        ],
    ),
    (
        "asymptotics",
        &["kind", "m", "r", "l", "h", "h_lambda", "shift", "c_grad", "tol", "radii"],
    ),
    (
        "stability",
        &[
            "kind",
            "m",
            "r",
            "l",
            "h",
            "h_lambda",
            "shift",
            "c_grad",
            "tol",
            "a_list",
            "n_list",
            "phi_rayleigh",
            "phi_sin",
            "refine",
        ],
    ),
    ("hardy", &["m_list", "rho_min", "rho_max", "nodes", "n", "n_list"]),
];

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed, schema-validated configuration file.
#[derive(Clone, Debug)]
pub struct Config {
    path: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl Config {
    /// Reads and parses `path`; any problem is a validation error (exit 2).
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config '{}': {e}", path.display()))
        })?;
        Config::parse(&path.display().to_string(), &text)
    }

    /// Parses `text`, attributing messages to `path` with line numbers.
    pub fn parse(path: &str, text: &str) -> CliResult<Config> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut section_lines: BTreeMap<String, usize> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let s = stripped.trim();
            if s.is_empty() {
                continue;
            }
            if let Some(inner) = s.strip_prefix('[') {
                let name = inner.strip_suffix(']').map(str::trim).unwrap_or("");
                if !valid_name(name) {
                    return Err(CliError::Validation(format!(
                        "{path}:{line}: malformed section header '{s}'"
                    )));
                }
                if !SCHEMA.iter().any(|(sec, _)| *sec == name) {
                    let known: Vec<&str> = SCHEMA.iter().map(|(sec, _)| *sec).collect();
                    return Err(CliError::Validation(format!(
                        "{path}:{line}: unknown section '[{name}]' (known: {})",
                        known.join(", ")
                    )));
                }
                if let Some(prev) = section_lines.get(name) {
                    return Err(CliError::Validation(format!(
                        "{path}:{line}: duplicate section '[{name}]' (first at line {prev})"
                    )));
                }
                section_lines.insert(name.to_string(), line);
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = s.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "{path}:{line}: expected 'key = value' or '[section]', found '{s}'"
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !valid_name(key) {
                return Err(CliError::Validation(format!(
                    "{path}:{line}: malformed key '{key}'"
                )));
            }
            let Some(section) = current.clone() else {
                return Err(CliError::Validation(format!(
                    "{path}:{line}: key '{key}' appears before any [section] header"
                )));
            };
            let allowed = SCHEMA.iter().find(|(sec, _)| *sec == section).map(|(_, k)| *k);
            if let Some(allowed) = allowed {
                if !allowed.contains(&key) {
                    return Err(CliError::Validation(format!(
                        "{path}:{line}: unknown key '{key}' in [{section}] (known: {})",
                        allowed.join(", ")
                    )));
                }
            }
            let entries = sections.entry(section.clone()).or_default();
            if let Some(prev) = entries.get(key) {
                return Err(CliError::Validation(format!(
                    "{path}:{line}: duplicate key '{key}' in [{section}] (first at line {})",
                    prev.line
                )));
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        Ok(Config { path: path.to_string(), sections })
    }
}

/// Where a resolved value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    File,
    Default,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::File => "file",
            Source::Default => "default",
        }
    }
}

/// Typed view over a [`Config`] that records every resolved value (with
/// provenance) for the run summary.
pub struct Resolver {
    config: Config,
    resolved: BTreeMap<String, (String, Source)>,
    sections_touched: BTreeSet<String>,
}

impl Resolver {
    pub fn new(config: Config) -> Resolver {
        Resolver { config, resolved: BTreeMap::new(), sections_touched: BTreeSet::new() }
    }

    pub fn path(&self) -> &str {
        &self.config.path
    }

    fn lookup(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.sections_touched.insert(section.to_string());
        self.config.sections.get(section).and_then(|s| s.get(key)).cloned()
    }

    fn record(&mut self, section: &str, key: &str, value: String, source: Source) {
        self.resolved.insert(format!("{section}.{key}"), (value, source));
    }

    fn parse_error(&self, entry: &Entry, section: &str, key: &str, what: &str) -> CliError {
        CliError::Validation(format!(
            "{}:{}: [{section}] {key}: cannot parse '{}' as {what}",
            self.config.path, entry.line, entry.value
        ))
    }

    /// String value with a default.
    pub fn str(&mut self, section: &str, key: &str, default: &str) -> String {
        match self.lookup(section, key) {
            Some(e) => {
                self.record(section, key, e.value.clone(), Source::File);
                e.value
            }
            None => {
                self.record(section, key, default.to_string(), Source::Default);
                default.to_string()
            }
        }
    }

    /// Floating-point value with a default; recorded at 12 significant digits.
    pub fn f64(&mut self, section: &str, key: &str, default: f64) -> CliResult<f64> {
        let v = match self.lookup(section, key) {
            Some(e) => {
                let v: f64 = e
                    .value
                    .parse()
                    .map_err(|_| self.parse_error(&e, section, key, "a number"))?;
                if !v.is_finite() {
                    return Err(self.parse_error(&e, section, key, "a finite number"));
                }
                self.record(section, key, fmt_sig(v), Source::File);
                v
            }
            None => {
                self.record(section, key, fmt_sig(default), Source::Default);
                default
            }
        };
        Ok(v)
    }

    /// Unsigned integer value with a default.
    pub fn usize(&mut self, section: &str, key: &str, default: usize) -> CliResult<usize> {
        let v = match self.lookup(section, key) {
            Some(e) => {
                let v: usize = e
                    .value
                    .parse()
                    .map_err(|_| self.parse_error(&e, section, key, "a nonnegative integer"))?;
                self.record(section, key, v.to_string(), Source::File);
                v
            }
            None => {
                self.record(section, key, default.to_string(), Source::Default);
                default
            }
        };
        Ok(v)
    }

    /// Boolean value (`true`/`false`) with a default.
    pub fn bool(&mut self, section: &str, key: &str, default: bool) -> CliResult<bool> {
        let v = match self.lookup(section, key) {
            Some(e) => {
                let v: bool = e
                    .value
                    .parse()
                    .map_err(|_| self.parse_error(&e, section, key, "'true' or 'false'"))?;
                self.record(section, key, v.to_string(), Source::File);
                v
            }
            None => {
                self.record(section, key, default.to_string(), Source::Default);
                default
            }
        };
        Ok(v)
    }

    /// Comma-separated list of numbers with a default (given in the same
    /// syntax); an empty string resolves to an empty list.
    pub fn f64_list(&mut self, section: &str, key: &str, default: &str) -> CliResult<Vec<f64>> {
        let (raw, source) = match self.lookup(section, key) {
            Some(e) => (e.value.clone(), Source::File),
            None => (default.to_string(), Source::Default),
        };
        let mut out = Vec::new();
        for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let v: f64 = part.parse().map_err(|_| {
                let entry = Entry { value: raw.clone(), line: self.line_of(section, key) };
                self.parse_error(&entry, section, key, "a comma-separated list of numbers")
            })?;
            out.push(v);
        }
        let rendered: Vec<String> = out.iter().map(|v| fmt_sig(*v)).collect();
        self.record(section, key, rendered.join(","), source);
        Ok(out)
    }

    /// Raw presence check without recording (for alias resolution).
    pub fn has(&mut self, section: &str, key: &str) -> bool {
        self.lookup(section, key).is_some()
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.config
            .sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|e| e.line)
            .unwrap_or(0)
    }

    /// Formats a fresh validation error pointing at `section.key` (at its
    /// config line when file-sourced).
    pub fn value_error(&self, section: &str, key: &str, message: &str) -> CliError {
        let line = self.line_of(section, key);
        if line > 0 {
            CliError::Validation(format!(
                "{}:{line}: [{section}] {key}: {message}",
                self.config.path
            ))
        } else {
            CliError::Validation(format!("[{section}] {key}: {message}"))
        }
    }

    /// The resolved entries as a JSON object mapping `section.key` to
    /// `{value, source}`.
    pub fn resolved_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, (value, source)) in &self.resolved {
            map.insert(
                k.clone(),
                serde_json::json!({ "value": value, "source": source.name() }),
            );
        }
        serde_json::Value::Object(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_values() {
        let cfg = Config::parse(
            "t.conf",
            "# heading\n[hardy]\nnodes = 400  # trailing\n\n[layer]\nkind = allen_cahn\n",
        )
        .unwrap();
        let mut r = Resolver::new(cfg);
        assert_eq!(r.usize("hardy", "nodes", 4000).unwrap(), 400);
        assert_eq!(r.str("layer", "kind", "peierls_nabarro"), "allen_cahn");
        assert_eq!(r.str("layer", "h", "0.05"), "0.05");
        let json = r.resolved_json();
        assert_eq!(json["hardy.nodes"]["source"], "file");
        assert_eq!(json["layer.h"]["source"], "default");
    }

    #[test]
    fn rejects_unknown_sections_and_keys_with_line_numbers() {
        let err = Config::parse("t.conf", "[nope]\n").unwrap_err();
        assert!(err.to_string().contains("t.conf:1"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let err = Config::parse("t.conf", "[hardy]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("t.conf:2"), "{err}");
        assert!(err.to_string().contains("unknown key 'bogus'"), "{err}");
    }

    #[test]
    fn rejects_malformed_lines_duplicates_and_orphan_keys() {
        let err = Config::parse("c", "[hardy]\nwhat is this\n").unwrap_err();
        assert!(err.to_string().contains("c:2: expected 'key = value'"), "{err}");
        let err = Config::parse("c", "[hardy]\nnodes = 1\nnodes = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate key"), "{err}");
        assert!(err.to_string().contains("first at line 2"), "{err}");
        let err = Config::parse("c", "nodes = 1\n").unwrap_err();
        assert!(err.to_string().contains("before any [section]"), "{err}");
        let err = Config::parse("c", "[hardy]\n[hardy]\n").unwrap_err();
        assert!(err.to_string().contains("duplicate section"), "{err}");
    }

    #[test]
    fn typed_getters_report_the_offending_line() {
        let cfg = Config::parse("c", "[hardy]\nnodes = lots\nrho_min = tiny\n").unwrap();
        let mut r = Resolver::new(cfg);
        let err = r.usize("hardy", "nodes", 1).unwrap_err();
        assert!(err.to_string().contains("c:2"), "{err}");
        let err = r.f64("hardy", "rho_min", 1.0).unwrap_err();
        assert!(err.to_string().contains("c:3"), "{err}");
    }

    #[test]
    fn lists_parse_and_render_canonically() {
        let cfg = Config::parse("c", "[hardy]\nm_list = 2, 4\n").unwrap();
        let mut r = Resolver::new(cfg);
        assert_eq!(r.f64_list("hardy", "m_list", "").unwrap(), vec![2.0, 4.0]);
        assert_eq!(r.f64_list("hardy", "n_list", "4,6,8").unwrap(), vec![4.0, 6.0, 8.0]);
        let empty = r.f64_list("stability", "phi_sin", "").unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn an_empty_config_resolves_entirely_from_defaults() {
        let cfg = Config::parse("c", "").unwrap();
        let mut r = Resolver::new(cfg);
        assert_eq!(r.f64("layer", "x_max", 20.0).unwrap(), 20.0);
        assert_eq!(r.resolved_json()["layer.x_max"]["source"], "default");
    }
}
