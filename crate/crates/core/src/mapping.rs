//! Mapping configuration: binds stereotypes and block names to templates,
//! property-to-variable maps and model commands.

use std::collections::HashSet;
use std::fmt;
use std::marker::PhantomData;

use indexmap::IndexMap;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::model::{Block, Model};
use crate::shape::{self, Expect};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("mapping parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("mapping schema violation at {path}: {reason}")]
    Schema { path: String, reason: &'static str },
    #[error("template variable `{variable}` is bound more than once in {entry}")]
    DuplicateTarget { entry: String, variable: String },
    #[error("no mapping applies to block `{0}`")]
    NoMapping(String),
    #[error("ambiguous mapping for block `{block}`: stereotypes `{first}` and `{second}` are both mapped")]
    Ambiguous {
        block: String,
        first: String,
        second: String,
    },
}

/// Map whose deserializer rejects duplicate keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UniqueMap<V>(pub IndexMap<String, V>);

impl<V> Default for UniqueMap<V> {
    fn default() -> Self {
        UniqueMap(IndexMap::new())
    }
}

impl<V> std::ops::Deref for UniqueMap<V> {
    type Target = IndexMap<String, V>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for UniqueMap<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct UniqueVisitor<V>(PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for UniqueVisitor<V> {
            type Value = UniqueMap<V>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object with unique keys")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut map = IndexMap::new();
                while let Some((key, value)) = access.next_entry::<String, V>()? {
                    if map.contains_key(&key) {
                        return Err(serde::de::Error::custom(format!("duplicate key `{key}`")));
                    }
                    map.insert(key, value);
                }
                Ok(UniqueMap(map))
            }
        }

        deserializer.deserialize_map(UniqueVisitor(PhantomData))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MappingEntry {
    /// Template name relative to the template root; may contain `/`.
    pub template: String,
    /// Attribute or property name -> template variable.
    #[serde(default)]
    pub properties: UniqueMap<String>,
    /// Command text -> template variable.
    #[serde(default)]
    pub model_commands: UniqueMap<String>,
}

impl MappingEntry {
    /// Every template variable this entry binds.
    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.properties
            .values()
            .chain(self.model_commands.values())
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MappingConfig {
    #[serde(default)]
    pub trim_empty_lines: bool,
    #[serde(default)]
    pub constants: UniqueMap<String>,
    #[serde(default)]
    pub stereotype_mappings: UniqueMap<MappingEntry>,
    #[serde(default)]
    pub name_mappings: UniqueMap<MappingEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Provenance {
    ByName,
    ByStereotype,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ByName => "byName",
            Provenance::ByStereotype => "byStereotype",
        })
    }
}

/// Result of [`MappingConfig::select`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection<'c> {
    pub entry: &'c MappingEntry,
    pub provenance: Provenance,
    /// Block name or stereotype name the entry is keyed by.
    pub key: &'c str,
}

const MAPPING_SHAPE: &[(&str, Expect)] = &[
    ("", Expect::Object),
    ("constants", Expect::Object),
    ("stereotypeMappings", Expect::Object),
    ("stereotypeMappings.*", Expect::Object),
    ("stereotypeMappings.*.properties", Expect::Object),
    ("stereotypeMappings.*.modelCommands", Expect::Object),
    ("nameMappings", Expect::Object),
    ("nameMappings.*", Expect::Object),
    ("nameMappings.*.properties", Expect::Object),
    ("nameMappings.*.modelCommands", Expect::Object),
];

impl MappingConfig {
    pub fn parse(bytes: &[u8]) -> Result<MappingConfig, MappingError> {
        let parse_error = |e: serde_json::Error| MappingError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        };
        let doc: serde_json::Value = serde_json::from_slice(bytes).map_err(parse_error)?;
        shape::check(&doc, MAPPING_SHAPE).map_err(|(path, reason)| MappingError::Schema { path, reason })?;
        let config: MappingConfig = serde_json::from_slice(bytes).map_err(parse_error)?;
        config.check_targets()?;
        Ok(config)
    }

    fn check_targets(&self) -> Result<(), MappingError> {
        for (label, entry) in self.entries() {
            let mut seen = HashSet::new();
            for target in entry.targets().chain(self.constants.keys().map(String::as_str)) {
                if !seen.insert(target) {
                    return Err(MappingError::DuplicateTarget {
                        entry: label,
                        variable: target.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Every entry with a human-readable label, name mappings last.
    pub fn entries(&self) -> impl Iterator<Item = (String, &MappingEntry)> {
        self.stereotype_mappings
            .iter()
            .map(|(k, e)| (format!("stereotype mapping `{k}`"), e))
            .chain(
                self.name_mappings
                    .iter()
                    .map(|(k, e)| (format!("name mapping `{k}`"), e)),
            )
    }

    /// Pick the entry for `block`. Name mappings win; otherwise each applied
    /// stereotype contributes its nearest mapped ancestor, and at most one
    /// distinct entry may result.
    pub fn select<'c>(&'c self, model: &Model, block: &Block) -> Result<Selection<'c>, MappingError> {
        if let Some((key, entry)) = self.name_mappings.get_key_value(&block.name) {
            return Ok(Selection {
                entry,
                provenance: Provenance::ByName,
                key,
            });
        }
        let mut found: Option<(&str, &'c str, &'c MappingEntry)> = None;
        for applied in &block.applied_stereotypes {
            let hit = model
                .linearize(&applied.stereotype)
                .into_iter()
                .find_map(|s| self.stereotype_mappings.get_key_value(&s.name));
            let Some((key, entry)) = hit else { continue };
            match found {
                Some((_, prev_key, _)) if prev_key == key.as_str() => {}
                Some((prev_applied, _, _)) => {
                    return Err(MappingError::Ambiguous {
                        block: block.qualified_name.to_string(),
                        first: prev_applied.to_string(),
                        second: applied.stereotype.clone(),
                    })
                }
                None => found = Some((applied.stereotype.as_str(), key.as_str(), entry)),
            }
        }
        found
            .map(|(_, key, entry)| Selection {
                entry,
                provenance: Provenance::ByStereotype,
                key,
            })
            .ok_or_else(|| MappingError::NoMapping(block.qualified_name.to_string()))
    }
}
