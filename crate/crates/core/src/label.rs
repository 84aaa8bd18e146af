use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Stable node name across family members: a lattice coordinate, or a
/// single integer for one-dimensional families and plain matrices.
///
/// Displayed and parsed as comma-separated integers (`0,0`, `-3`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub Vec<i64>);

impl Label {
    pub fn int(v: i64) -> Self {
        Label(vec![v])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl From<i64> for Label {
    fn from(v: i64) -> Self {
        Label::int(v)
    }
}

impl From<Vec<i64>> for Label {
    fn from(v: Vec<i64>) -> Self {
        Label(v)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let coords = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::param(format!("bad node label {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Label(coords))
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.len() == 1 {
            s.serialize_i64(self.0[0])
        } else {
            self.0.serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Coords(Vec<i64>),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Int(v) => Label::int(v),
            Repr::Coords(v) => Label(v),
        })
    }
}
