//! Name-keyed registries for the interchangeable strategies: LP formulations,
//! solvers, calibrators and phantom generators.
//!
//! Each family exposes a process-wide registry built on first use. Lookups are
//! by the same lowercase names used in run configuration files.

use std::collections::BTreeMap;

use crate::error::{Result, SipoError};

/// A constructor table mapping a strategy name to a factory.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, fn() -> Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &'static str, build: fn() -> Box<T>) -> Self {
        self.entries.insert(name, build);
        self
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn build(&self, name: &str) -> Result<Box<T>> {
        self.entries
            .get(name)
            .map(|build| build())
            .ok_or_else(|| SipoError::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().collect::<Vec<_>>().join(", "),
            })
    }
}
