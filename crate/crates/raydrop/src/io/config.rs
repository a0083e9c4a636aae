//! Line-oriented config grammar used by scene and sensor description files.
//!
//! ```text
//! # comment (also allowed after a value)
//! [section]           # sections may repeat, e.g. one [box] per box
//! key = value         # duplicate keys within one section are errors
//! ```
//!
//! Values parse as booleans (`true`/`false`), comma-separated numeric
//! triples (`0.1, 0.2, 0.3`), numbers, or bare text, tried in that order.
//! Because `#` always starts a comment, values cannot contain `#`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate key {key:?} in [{section}] (first at line {first_line})")]
    DuplicateKey {
        line: usize,
        first_line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: section [{name}] may not repeat")]
    RepeatedSection { line: usize, name: String },
    #[error("line {line}: unknown key {key:?} in [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("missing required key {key:?} in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("missing required section [{name}]")]
    MissingSection { name: String },
    #[error("line {line}: {key:?} must be a {expected}")]
    WrongType {
        line: usize,
        key: String,
        expected: &'static str,
    },
    #[error("line {line}: {key} = {value} outside [{min}, {max}]")]
    OutOfRange {
        line: usize,
        key: String,
        value: f64,
        min: f64,
        max: f64,
    },
}

/// A parsed `key = value`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Number(f64),
    Bool(bool),
    Triple([f64; 3]),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: ConfigValue,
    pub line: usize,
}

/// One `[section]` instance, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSection {
    pub name: String,
    pub line: usize,
    pub entries: Vec<ConfigEntry>,
}

impl ConfigSection {
    pub fn entry(&self, key: &str) -> Option<&ConfigEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => match e.value {
                ConfigValue::Number(v) => Ok(Some(v)),
                _ => Err(ConfigError::WrongType {
                    line: e.line,
                    key: key.to_string(),
                    expected: "number",
                }),
            },
        }
    }

    pub fn require_number(&self, key: &str) -> Result<f64, ConfigError> {
        self.number(key)?.ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => match e.value {
                ConfigValue::Number(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                    Ok(Some(v as usize))
                }
                _ => Err(ConfigError::WrongType {
                    line: e.line,
                    key: key.to_string(),
                    expected: "non-negative integer",
                }),
            },
        }
    }

    pub fn require_usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.usize(key)?.ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => match e.value {
                ConfigValue::Bool(v) => Ok(Some(v)),
                _ => Err(ConfigError::WrongType {
                    line: e.line,
                    key: key.to_string(),
                    expected: "boolean",
                }),
            },
        }
    }

    pub fn triple(&self, key: &str) -> Result<Option<[f64; 3]>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => match e.value {
                ConfigValue::Triple(v) => Ok(Some(v)),
                _ => Err(ConfigError::WrongType {
                    line: e.line,
                    key: key.to_string(),
                    expected: "triple",
                }),
            },
        }
    }

    pub fn require_triple(&self, key: &str) -> Result<[f64; 3], ConfigError> {
        self.triple(key)?.ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn text(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => match &e.value {
                ConfigValue::Text(v) => Ok(Some(v)),
                _ => Err(ConfigError::WrongType {
                    line: e.line,
                    key: key.to_string(),
                    expected: "text",
                }),
            },
        }
    }

    pub fn require_text(&self, key: &str) -> Result<&str, ConfigError> {
        self.text(key)?.ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }
}

/// A parsed config file: sections in file order, possibly repeating.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub sections: Vec<ConfigSection>,
}

impl ConfigFile {
    /// First section with the given name.
    pub fn section(&self, name: &str) -> Option<&ConfigSection> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// All sections with the given name, in file order.
    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a ConfigSection> {
        self.sections.iter().filter(move |s| s.name == name)
    }
}

pub fn parse_config(source: &str) -> Result<ConfigFile, ConfigError> {
    let mut file = ConfigFile::default();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(at) => &raw[..at],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let name = inner.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: "empty section name".into(),
                });
            }
            file.sections.push(ConfigSection {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value` or `[section]`, got {content:?}"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "empty key".into(),
            });
        }
        let section = file.sections.last_mut().ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("key {key:?} appears before any [section]"),
        })?;
        if let Some(first) = section.entries.iter().find(|e| e.key == key) {
            return Err(ConfigError::DuplicateKey {
                line,
                first_line: first.line,
                section: section.name.clone(),
                key: key.to_string(),
            });
        }
        let value = parse_value(value.trim(), line)?;
        section.entries.push(ConfigEntry {
            key: key.to_string(),
            value,
            line,
        });
    }
    Ok(file)
}

fn parse_value(raw: &str, line: usize) -> Result<ConfigValue, ConfigError> {
    if raw.is_empty() {
        return Err(ConfigError::Syntax {
            line,
            message: "empty value".into(),
        });
    }
    match raw {
        "true" => return Ok(ConfigValue::Bool(true)),
        "false" => return Ok(ConfigValue::Bool(false)),
        _ => {}
    }
    if raw.contains(',') {
        let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected three comma-separated numbers, got {}", parts.len()),
            });
        }
        let mut triple = [0.0; 3];
        for (slot, part) in triple.iter_mut().zip(&parts) {
            *slot = part.parse::<f64>().map_err(|_| ConfigError::Syntax {
                line,
                message: format!("{part:?} is not a number"),
            })?;
            if !slot.is_finite() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("{part:?} is not finite"),
                });
            }
        }
        return Ok(ConfigValue::Triple(triple));
    }
    if let Ok(v) = raw.parse::<f64>() {
        if v.is_finite() {
            return Ok(ConfigValue::Number(v));
        }
    }
    Ok(ConfigValue::Text(raw.to_string()))
}

/// What a key is allowed to hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Number,
    Bool,
    Triple,
    Text,
}

/// Schema entry for one key.
#[derive(Debug, Clone, Copy)]
pub struct KeySchema {
    pub name: &'static str,
    pub kind: ValueKind,
    /// Inclusive numeric range; applies per component for triples.
    pub range: Option<(f64, f64)>,
    pub required: bool,
}

/// Schema entry for one section name.
#[derive(Debug, Clone, Copy)]
pub struct SectionSchema {
    pub name: &'static str,
    pub repeatable: bool,
    pub required: bool,
    pub keys: &'static [KeySchema],
}

/// Validates a parsed file against a schema: unknown sections or keys,
/// repeated non-repeatable sections, missing required items, type and range
/// violations are all reported with their line numbers.
pub fn validate_schema(file: &ConfigFile, schema: &[SectionSchema]) -> Result<(), ConfigError> {
    for section in &file.sections {
        let spec = schema
            .iter()
            .find(|s| s.name == section.name)
            .ok_or_else(|| ConfigError::UnknownSection {
                line: section.line,
                name: section.name.clone(),
            })?;
        if !spec.repeatable
            && file
                .sections
                .iter()
                .filter(|s| s.name == section.name)
                .count()
                > 1
            && file.section(&section.name).unwrap().line != section.line
        {
            return Err(ConfigError::RepeatedSection {
                line: section.line,
                name: section.name.clone(),
            });
        }
        for entry in &section.entries {
            let key_spec = spec
                .keys
                .iter()
                .find(|k| k.name == entry.key)
                .ok_or_else(|| ConfigError::UnknownKey {
                    line: entry.line,
                    section: section.name.clone(),
                    key: entry.key.clone(),
                })?;
            let matches = matches!(
                (&entry.value, key_spec.kind),
                (ConfigValue::Number(_), ValueKind::Number)
                    | (ConfigValue::Bool(_), ValueKind::Bool)
                    | (ConfigValue::Triple(_), ValueKind::Triple)
                    | (ConfigValue::Text(_), ValueKind::Text)
            );
            if !matches {
                return Err(ConfigError::WrongType {
                    line: entry.line,
                    key: entry.key.clone(),
                    expected: match key_spec.kind {
                        ValueKind::Number => "number",
                        ValueKind::Bool => "boolean",
                        ValueKind::Triple => "triple",
                        ValueKind::Text => "text",
                    },
                });
            }
            if let Some((min, max)) = key_spec.range {
                let components: &[f64] = match &entry.value {
                    ConfigValue::Number(v) => std::slice::from_ref(v),
                    ConfigValue::Triple(t) => &t[..],
                    _ => &[],
                };
                for &v in components {
                    if v < min || v > max {
                        return Err(ConfigError::OutOfRange {
                            line: entry.line,
                            key: entry.key.clone(),
                            value: v,
                            min,
                            max,
                        });
                    }
                }
            }
        }
        for key_spec in spec.keys.iter().filter(|k| k.required) {
            if section.entry(key_spec.name).is_none() {
                return Err(ConfigError::MissingKey {
                    section: section.name.clone(),
                    key: key_spec.name.to_string(),
                });
            }
        }
    }
    for spec in schema.iter().filter(|s| s.required) {
        if file.section(spec.name).is_none() {
            return Err(ConfigError::MissingSection {
                name: spec.name.to_string(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_value_types() {
        let src = "\
# leading comment
[sensor]
preset = kitti64
rows = 64          # trailing comment
max_range = 80.5

[material]
color = 0.3, 0.8, 0.9
transparent = true

[material]
color = 0.1,0.2,0.3
transparent = false
";
        let cfg = parse_config(src).unwrap();
        assert_eq!(cfg.sections.len(), 3);
        let sensor = cfg.section("sensor").unwrap();
        assert_eq!(sensor.require_text("preset").unwrap(), "kitti64");
        assert_eq!(sensor.require_usize("rows").unwrap(), 64);
        assert_eq!(sensor.require_number("max_range").unwrap(), 80.5);
        let mats: Vec<_> = cfg.sections_named("material").collect();
        assert_eq!(mats.len(), 2);
        assert_eq!(mats[0].require_triple("color").unwrap(), [0.3, 0.8, 0.9]);
        assert_eq!(mats[0].bool("transparent").unwrap(), Some(true));
        assert_eq!(mats[1].bool("transparent").unwrap(), Some(false));
    }

    #[test]
    fn reports_syntax_errors_with_line_numbers() {
        let err = parse_config("[sensor]\nrows 64\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Syntax {
                line: 2,
                message: "expected `key = value` or `[section]`, got \"rows 64\"".into()
            }
        );
        assert!(matches!(
            parse_config("rows = 64\n").unwrap_err(),
            ConfigError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_config("[sensor\nrows = 4\n").unwrap_err(),
            ConfigError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_config("[s]\nx = 1, 2\n").unwrap_err(),
            ConfigError::Syntax { line: 2, .. }
        ));
    }

    #[test]
    fn duplicate_keys_are_rejected_per_section_instance() {
        let err = parse_config("[s]\na = 1\na = 2\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::DuplicateKey {
                line: 3,
                first_line: 2,
                section: "s".into(),
                key: "a".into()
            }
        );
        // The same key in two instances of a repeatable section is fine.
        assert!(parse_config("[s]\na = 1\n[s]\na = 2\n").is_ok());
    }

    const MATERIAL_KEYS: &[KeySchema] = &[
        KeySchema {
            name: "color",
            kind: ValueKind::Triple,
            range: Some((0.0, 1.0)),
            required: true,
        },
        KeySchema {
            name: "rho",
            kind: ValueKind::Number,
            range: Some((0.0, 1.0)),
            required: true,
        },
        KeySchema {
            name: "transparent",
            kind: ValueKind::Bool,
            range: None,
            required: false,
        },
    ];
    const SCHEMA: &[SectionSchema] = &[SectionSchema {
        name: "material",
        repeatable: true,
        required: false,
        keys: MATERIAL_KEYS,
    }];

    #[test]
    fn schema_catches_unknown_and_out_of_range() {
        let ok = parse_config("[material]\ncolor = 0,0.5,1\nrho = 0.7\n").unwrap();
        assert!(validate_schema(&ok, SCHEMA).is_ok());

        let bad_range = parse_config("[material]\ncolor = 0,0,0\nrho = 1.5\n").unwrap();
        assert!(matches!(
            validate_schema(&bad_range, SCHEMA).unwrap_err(),
            ConfigError::OutOfRange { line: 3, value, .. } if value == 1.5
        ));

        let unknown_key = parse_config("[material]\ncolor = 0,0,0\nrho = 0.5\nshine = 3\n").unwrap();
        assert!(matches!(
            validate_schema(&unknown_key, SCHEMA).unwrap_err(),
            ConfigError::UnknownKey { line: 4, .. }
        ));

        let unknown_section = parse_config("[lights]\nintensity = 1\n").unwrap();
        assert!(matches!(
            validate_schema(&unknown_section, SCHEMA).unwrap_err(),
            ConfigError::UnknownSection { line: 1, .. }
        ));

        let missing_key = parse_config("[material]\ncolor = 0,0,0\n").unwrap();
        assert!(matches!(
            validate_schema(&missing_key, SCHEMA).unwrap_err(),
            ConfigError::MissingKey { .. }
        ));

        let wrong_type = parse_config("[material]\ncolor = red\nrho = 0.5\n").unwrap();
        assert!(matches!(
            validate_schema(&wrong_type, SCHEMA).unwrap_err(),
            ConfigError::WrongType { line: 2, .. }
        ));
    }
}
