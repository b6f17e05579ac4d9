//! Dictionary encoding of raw values to dense 32-bit ids.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::StorageError;

/// A bijection between raw string values and ids contiguous in `[0, n)`.
/// Ids are handed out in first-seen order; [`Dictionary::remap`] reassigns
/// them under a node-ordering permutation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Dictionary {
    map: HashMap<String, u32>,
    inverse: Vec<String>,
}

impl Dictionary {
    pub fn new() -> Dictionary {
        Dictionary::default()
    }

    pub fn len(&self) -> usize {
        self.inverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inverse.is_empty()
    }

    pub fn intern(&mut self, value: &str) -> Result<u32, StorageError> {
        if let Some(&id) = self.map.get(value) {
            return Ok(id);
        }
        let id = u32::try_from(self.inverse.len()).map_err(|_| StorageError::DictionaryOverflow)?;
        self.map.insert(value.to_string(), id);
        self.inverse.push(value.to_string());
        Ok(id)
    }

    pub fn lookup(&self, value: &str) -> Option<u32> {
        self.map.get(value).copied()
    }

    pub fn decode(&self, id: u32) -> &str {
        &self.inverse[id as usize]
    }

    /// Reassigns every id `i` to `perm[i]`. `perm` must be a bijection on
    /// `[0, len)`.
    pub fn remap(&mut self, perm: &[u32]) {
        assert_eq!(perm.len(), self.inverse.len());
        let mut inverse = vec![String::new(); self.inverse.len()];
        for (old, value) in self.inverse.drain(..).enumerate() {
            inverse[perm[old] as usize] = value;
        }
        for value in &inverse {
            debug_assert!(!value.is_empty() || self.map.contains_key(value));
        }
        self.inverse = inverse;
        for (id, value) in self.inverse.iter().enumerate() {
            self.map.insert(value.clone(), id as u32);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.inverse.iter().map(|s| s.as_str())
    }
}

/// Builds a dictionary from a value stream in first-seen order, then
/// optionally remaps ids by a permutation.
pub fn build_dictionary<'a>(
    values: impl IntoIterator<Item = &'a str>,
    ordering: Option<&[u32]>,
) -> Result<Dictionary, StorageError> {
    let mut dict = Dictionary::new();
    for v in values {
        dict.intern(v)?;
    }
    if let Some(perm) = ordering {
        dict.remap(perm);
    }
    Ok(dict)
}
