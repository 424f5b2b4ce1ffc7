//! Persistence diagrams: multisets of (birth, death) pairs anchored to their
//! birth/death simplices, with a stable JSON representation.
//!
//! For dimension-1 pairs the reported death simplex is canonical: the
//! filtration-first triangle whose longest edge is the death edge. Both
//! persistence engines emit this same representative, so diagrams are
//! comparable across engines even when several triangles share the death
//! edge's filtration value.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub birth: f64,
    #[serde(serialize_with = "ser_death", deserialize_with = "de_death")]
    pub death: f64,
    pub birth_simplex: Vec<u32>,
    pub death_simplex: Option<Vec<u32>>,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_positive(&self) -> bool {
        self.death > self.birth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub dim: u8,
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn new(dim: u8, mut pairs: Vec<PersistencePair>) -> PersistenceDiagram {
        sort_pairs(&mut pairs);
        PersistenceDiagram { dim, pairs }
    }

    pub fn empty(dim: u8) -> PersistenceDiagram {
        PersistenceDiagram { dim, pairs: Vec::new() }
    }

    /// Finite (birth, death) points, diagonal points excluded on request.
    pub fn finite_points(&self, include_zero: bool) -> Vec<(f64, f64)> {
        self.pairs
            .iter()
            .filter(|p| !p.is_essential() && (include_zero || p.is_positive()))
            .map(|p| (p.birth, p.death))
            .collect()
    }

    pub fn essential_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_essential()).count()
    }

    pub fn positive_pairs(&self) -> Vec<&PersistencePair> {
        let mut v: Vec<&PersistencePair> =
            self.pairs.iter().filter(|p| p.is_positive() && !p.is_essential()).collect();
        v.sort_by(|a, b| a.death.total_cmp(&b.death).then(a.birth.total_cmp(&b.birth)));
        v
    }

    pub fn max_finite_persistence(&self) -> f64 {
        self.pairs
            .iter()
            .filter(|p| !p.is_essential())
            .map(|p| p.persistence())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagram serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<PersistenceDiagram, serde_json::Error> {
        serde_json::from_str(s)
    }
}

pub fn sort_pairs(pairs: &mut [PersistencePair]) {
    pairs.sort_by(|a, b| {
        a.birth
            .total_cmp(&b.birth)
            .then(a.death.total_cmp(&b.death))
            .then_with(|| a.birth_simplex.cmp(&b.birth_simplex))
    });
}

fn ser_death<S: Serializer>(death: &f64, ser: S) -> Result<S::Ok, S::Error> {
    if death.is_infinite() {
        ser.serialize_str("inf")
    } else {
        ser.serialize_f64(*death)
    }
}

fn de_death<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum DeathRepr {
        Finite(f64),
        Tag(String),
    }
    match DeathRepr::deserialize(de)? {
        DeathRepr::Finite(v) => Ok(v),
        DeathRepr::Tag(s) if s == "inf" => Ok(f64::INFINITY),
        DeathRepr::Tag(s) => Err(D::Error::custom(format!("bad death value {s:?}"))),
    }
}
