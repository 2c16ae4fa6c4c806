//! Identifiers and value types shared across the simulator.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdParseError {
    #[error("invalid {kind} id {text:?}: expected \"{prefix}<n>\" or a bare integer")]
    Malformed {
        kind: &'static str,
        prefix: char,
        text: String,
    },
}

macro_rules! node_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal, $kind:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> u32 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = IdParseError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let digits = s.strip_prefix($prefix).unwrap_or(s);
                digits.parse::<u32>().map($name).map_err(|_| IdParseError::Malformed {
                    kind: $kind,
                    prefix: $prefix.chars().next().unwrap(),
                    text: s.to_string(),
                })
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                struct IdVisitor;

                impl<'de> de::Visitor<'de> for IdVisitor {
                    type Value = $name;

                    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                        write!(f, concat!("a ", $kind, " id like \"", $prefix, "1\" or an integer"))
                    }

                    fn visit_u64<E: de::Error>(self, v: u64) -> Result<$name, E> {
                        u32::try_from(v).map($name).map_err(E::custom)
                    }

                    fn visit_i64<E: de::Error>(self, v: i64) -> Result<$name, E> {
                        u32::try_from(v).map($name).map_err(E::custom)
                    }

                    fn visit_str<E: de::Error>(self, v: &str) -> Result<$name, E> {
                        v.parse().map_err(E::custom)
                    }
                }

                deserializer.deserialize_any(IdVisitor)
            }
        }
    };
}

node_id!(
    /// A controller, rendered `C1`, `C2`, ...
    ControllerId,
    "C",
    "controller"
);
node_id!(
    /// A switch, rendered `S1`, `S2`, ...
    SwitchId,
    "S",
    "switch"
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Drop,
    Allow,
}

impl Action {
    pub fn flipped(self) -> Self {
        match self {
            Action::Drop => Action::Allow,
            Action::Allow => Action::Drop,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("policy {0:?} has an empty match")]
    EmptyMatch(String),
    #[error("policy id must not be empty")]
    EmptyId,
}

/// A match/action flow rule that a controller must install.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", deny_unknown_fields)]
pub struct Policy {
    id: String,
    #[serde(rename = "match")]
    fields: BTreeMap<String, String>,
    action: Action,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    id: String,
    #[serde(rename = "match")]
    fields: BTreeMap<String, String>,
    action: Action,
}

impl TryFrom<RawPolicy> for Policy {
    type Error = PolicyError;

    fn try_from(raw: RawPolicy) -> Result<Self, Self::Error> {
        Policy::new(raw.id, raw.fields, raw.action)
    }
}

impl Policy {
    pub fn new(
        id: impl Into<String>,
        fields: BTreeMap<String, String>,
        action: Action,
    ) -> Result<Self, PolicyError> {
        let id = id.into();
        if id.is_empty() {
            return Err(PolicyError::EmptyId);
        }
        if fields.is_empty() {
            return Err(PolicyError::EmptyMatch(id));
        }
        Ok(Self { id, fields, action })
    }

    /// Single-field rule, e.g. `Policy::single("p1", "srcIP", "8.8.8.8", Action::Drop)`.
    pub fn single(
        id: impl Into<String>,
        field: impl Into<String>,
        value: impl Into<String>,
        action: Action,
    ) -> Self {
        let mut fields = BTreeMap::new();
        fields.insert(field.into(), value.into());
        Self::new(id, fields, action).expect("non-empty match with explicit id")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn fields(&self) -> &BTreeMap<String, String> {
        &self.fields
    }

    pub fn action(&self) -> Action {
        self.action
    }

    pub fn with_action(&self, action: Action) -> Self {
        Self {
            action,
            ..self.clone()
        }
    }

    /// Same match fields and same action. The id is only a handle.
    pub fn same_rule(&self, other: &Policy) -> bool {
        self.action == other.action && self.fields == other.fields
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {{", self.id)?;
        for (k, v) in &self.fields {
            write!(f, "{k}='{v}', ")?;
        }
        let action = match self.action {
            Action::Drop => "drop",
            Action::Allow => "allow",
        };
        write!(f, "action='{action}'}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub policy: Policy,
    pub installed_by: ControllerId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComparisonOutcome {
    /// `G`: the expected rule is installed verbatim.
    Match,
    /// `B`: the rule is missing or tampered with.
    Mismatch,
}

/// Checks one assigned policy against a fetched flow table.
///
/// Entries that do not correspond to `expected` are ignored, so extra rules on
/// a switch never count against its owner.
pub fn compare_policy<'a, I>(expected: &Policy, flow_table: I) -> ComparisonOutcome
where
    I: IntoIterator<Item = &'a FlowEntry>,
{
    if flow_table
        .into_iter()
        .any(|entry| entry.policy.same_rule(expected))
    {
        ComparisonOutcome::Match
    } else {
        ComparisonOutcome::Mismatch
    }
}
