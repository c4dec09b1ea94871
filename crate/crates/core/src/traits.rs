//! The Big Five trait enumeration and a fixed-size per-trait map.

use core::fmt;
use core::ops::{Index, IndexMut};
use core::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One of the five personality traits.
///
/// The declaration order is the canonical column order used everywhere:
/// AGR, CON, EXT, OPN, NEU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Trait {
    #[serde(rename = "AGR")]
    Agreeableness,
    #[serde(rename = "CON")]
    Conscientiousness,
    #[serde(rename = "EXT")]
    Extraversion,
    #[serde(rename = "OPN")]
    Openness,
    #[serde(rename = "NEU")]
    Neuroticism,
}

impl Trait {
    pub const ALL: [Trait; 5] = [
        Trait::Agreeableness,
        Trait::Conscientiousness,
        Trait::Extraversion,
        Trait::Openness,
        Trait::Neuroticism,
    ];

    pub const fn code(self) -> &'static str {
        match self {
            Trait::Agreeableness => "AGR",
            Trait::Conscientiousness => "CON",
            Trait::Extraversion => "EXT",
            Trait::Openness => "OPN",
            Trait::Neuroticism => "NEU",
        }
    }

    pub const fn position(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown trait code")]
pub struct UnknownTrait;

impl FromStr for Trait {
    type Err = UnknownTrait;

    /// Accepts the three-letter codes, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Trait::ALL
            .into_iter()
            .find(|t| t.code().eq_ignore_ascii_case(s.trim()))
            .ok_or(UnknownTrait)
    }
}

/// A value for every trait, stored in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TraitMap<T>(pub [T; 5]);

impl<T> TraitMap<T> {
    pub fn from_fn(mut f: impl FnMut(Trait) -> T) -> Self {
        TraitMap(Trait::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Trait, &T)> {
        Trait::ALL.into_iter().zip(self.0.iter())
    }

    pub fn map<U>(self, mut f: impl FnMut(Trait, T) -> U) -> TraitMap<U> {
        let mut i = 0;
        TraitMap(self.0.map(|v| {
            let t = Trait::ALL[i];
            i += 1;
            f(t, v)
        }))
    }
}

impl<T> Index<Trait> for TraitMap<T> {
    type Output = T;
    fn index(&self, t: Trait) -> &T {
        &self.0[t.position()]
    }
}

impl<T> IndexMut<Trait> for TraitMap<T> {
    fn index_mut(&mut self, t: Trait) -> &mut T {
        &mut self.0[t.position()]
    }
}

impl<T: Serialize> Serialize for TraitMap<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(5))?;
        for (t, v) in self.iter() {
            map.serialize_entry(t.code(), v)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for TraitMap<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MapVisitor<T>(core::marker::PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for MapVisitor<T> {
            type Value = TraitMap<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map with keys AGR, CON, EXT, OPN, NEU")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut slots: [Option<T>; 5] = [None, None, None, None, None];
                while let Some(key) = access.next_key::<alloc::string::String>()? {
                    let t: Trait = key.parse().map_err(|_| {
                        de::Error::unknown_field(&key, &["AGR", "CON", "EXT", "OPN", "NEU"])
                    })?;
                    if slots[t.position()].is_some() {
                        return Err(de::Error::duplicate_field(t.code()));
                    }
                    slots[t.position()] = Some(access.next_value()?);
                }
                let mut out = slots.into_iter();
                let mut take = |t: Trait| {
                    out.next()
                        .flatten()
                        .ok_or_else(|| de::Error::missing_field(t.code()))
                };
                Ok(TraitMap([
                    take(Trait::Agreeableness)?,
                    take(Trait::Conscientiousness)?,
                    take(Trait::Extraversion)?,
                    take(Trait::Openness)?,
                    take(Trait::Neuroticism)?,
                ]))
            }
        }

        deserializer.deserialize_map(MapVisitor(core::marker::PhantomData))
    }
}
