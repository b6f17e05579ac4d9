//! The relation catalog: named, dictionary-encoded relations with their
//! tries. Binary relations store both column orders up front; other orders
//! are built on demand and cached.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use crate::setkernel::Granularity;

use super::dictionary::Dictionary;
use super::trie::{build_trie, Trie};
use super::StorageError;

pub type DictRef = Arc<Dictionary>;

/// Declared type of an annotation value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AnnotType {
    Int,
    Long,
    Float,
}

impl AnnotType {
    pub fn is_integral(self) -> bool {
        matches!(self, AnnotType::Int | AnnotType::Long)
    }

    pub fn parse(s: &str) -> Option<AnnotType> {
        Some(match s {
            "int" => AnnotType::Int,
            "long" => AnnotType::Long,
            "float" => AnnotType::Float,
            _ => return None,
        })
    }
}

/// Encoded tuple storage shared by every alias of a relation.
#[derive(Debug)]
pub struct RelationData {
    pub arity: usize,
    /// Row-major ids, `arity` per tuple.
    pub tuples: Vec<u32>,
    pub annotations: Option<Vec<f64>>,
    granularity: Granularity,
    tries: RwLock<BTreeMap<Vec<usize>, Arc<Trie>>>,
}

impl RelationData {
    pub fn new(
        arity: usize,
        tuples: Vec<u32>,
        annotations: Option<Vec<f64>>,
        granularity: Granularity,
    ) -> RelationData {
        RelationData {
            arity,
            tuples,
            annotations,
            granularity,
            tries: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn tuple_count(&self) -> usize {
        if self.arity == 0 {
            usize::from(self.annotations.as_ref().is_some_and(|a| !a.is_empty()))
        } else {
            self.tuples.len() / self.arity
        }
    }

    /// The trie for a column order, building and caching it on first use.
    pub fn trie(&self, attr_order: &[usize]) -> Result<Arc<Trie>, StorageError> {
        if let Some(t) = self.tries.read().unwrap().get(attr_order) {
            return Ok(Arc::clone(t));
        }
        let trie = Arc::new(build_trie(
            self.arity,
            &self.tuples,
            self.annotations.as_deref(),
            attr_order,
            self.granularity,
        )?);
        let mut cache = self.tries.write().unwrap();
        Ok(Arc::clone(cache.entry(attr_order.to_vec()).or_insert(trie)))
    }
}

/// One named relation: schema plus shared data.
#[derive(Debug, Clone)]
pub struct StoredRelation {
    pub name: String,
    pub key_arity: usize,
    /// Dictionary for each key column; columns of the same domain share.
    pub dicts: Vec<DictRef>,
    pub annotation: Option<AnnotType>,
    pub data: Arc<RelationData>,
}

impl StoredRelation {
    /// A scalar relation is one with no key columns, just an annotation.
    pub fn scalar_value(&self) -> Option<f64> {
        if self.key_arity == 0 {
            self.data.annotations.as_ref().and_then(|a| a.first()).copied()
        } else {
            None
        }
    }
}

#[derive(Debug, Default)]
pub struct Catalog {
    relations: BTreeMap<String, StoredRelation>,
}

impl Catalog {
    pub fn new() -> Catalog {
        Catalog::default()
    }

    pub fn get(&self, name: &str) -> Option<&StoredRelation> {
        self.relations.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(|s| s.as_str())
    }

    pub fn insert(&mut self, relation: StoredRelation) {
        self.relations.insert(relation.name.clone(), relation);
    }

    /// Registers `alias` as another name for an existing relation; the
    /// underlying data and tries are shared.
    pub fn alias(&mut self, alias: &str, existing: &str) -> Result<(), StorageError> {
        let mut rel = self
            .relations
            .get(existing)
            .cloned()
            .ok_or_else(|| StorageError::UnknownRelation(existing.to_string()))?;
        rel.name = alias.to_string();
        self.relations.insert(alias.to_string(), rel);
        Ok(())
    }

    /// Registers an encoded extensional or intensional relation. Binary
    /// key relations get both tries built eagerly.
    pub fn register(
        &mut self,
        name: &str,
        key_arity: usize,
        dicts: Vec<DictRef>,
        tuples: Vec<u32>,
        annotations: Option<Vec<f64>>,
        annotation: Option<AnnotType>,
        granularity: Granularity,
    ) -> Result<(), StorageError> {
        let data = Arc::new(RelationData::new(key_arity, tuples, annotations, granularity));
        if key_arity == 2 {
            data.trie(&[0, 1])?;
            data.trie(&[1, 0])?;
        } else if key_arity >= 1 {
            let natural: Vec<usize> = (0..key_arity).collect();
            data.trie(&natural)?;
        }
        self.insert(StoredRelation {
            name: name.to_string(),
            key_arity,
            dicts,
            annotation,
            data,
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict_of(values: &[&str]) -> DictRef {
        let mut d = Dictionary::new();
        for v in values {
            d.intern(v).unwrap();
        }
        Arc::new(d)
    }

    #[test]
    fn binary_relations_store_both_orders() {
        let mut catalog = Catalog::new();
        let d = dict_of(&["0", "1", "2"]);
        catalog
            .register(
                "Edge",
                2,
                vec![Arc::clone(&d), d],
                vec![0, 1, 1, 2],
                None,
                None,
                Granularity::SetLevel,
            )
            .unwrap();
        let rel = catalog.get("Edge").unwrap();
        let fwd = rel.data.trie(&[0, 1]).unwrap();
        let rev = rel.data.trie(&[1, 0]).unwrap();
        assert_eq!(fwd.lookup(&[0]).decode(), vec![1]);
        assert_eq!(rev.lookup(&[1]).decode(), vec![0]);
    }

    #[test]
    fn aliases_share_data() {
        let mut catalog = Catalog::new();
        let d = dict_of(&["a", "b"]);
        catalog
            .register("Edge", 2, vec![Arc::clone(&d), d], vec![0, 1], None, None, Granularity::SetLevel)
            .unwrap();
        catalog.alias("R", "Edge").unwrap();
        let edge = catalog.get("Edge").unwrap();
        let r = catalog.get("R").unwrap();
        assert!(Arc::ptr_eq(&edge.data, &r.data));
        assert!(catalog.alias("S", "Missing").is_err());
    }
}
