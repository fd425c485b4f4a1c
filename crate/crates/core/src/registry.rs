//! Name-keyed registries of interchangeable strategies.
//!
//! Each numerical family with more than one implementation (Mittag-Leffler
//! evaluators, noise models, reconstruction bases) exposes a trait and a
//! [`Registry`] of factories for it, so configuration files and the command
//! line can pick an implementation by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

type Factory<T> = Box<dyn Fn() -> Arc<T> + Send + Sync>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    factories: BTreeMap<String, Factory<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            factories: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register<F>(&mut self, name: &str, factory: F) -> &mut Self
    where
        F: Fn() -> Arc<T> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_owned(), Box::new(factory));
        self
    }

    pub fn create(&self, name: &str) -> Result<Arc<T>> {
        match self.factories.get(name) {
            Some(f) => Ok(f()),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_owned(),
                available: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}
