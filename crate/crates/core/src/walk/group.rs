use std::fmt::Debug;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::WalkError;
use crate::free_group::ReducedWord;

/// A discrete group with a textual element encoding.
pub trait Group: Clone + Debug + Send + Sync {
    type Element: Clone + Ord + Hash + Debug + Send + Sync;

    fn identity(&self) -> Self::Element;
    fn multiply(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn inverse(&self, a: &Self::Element) -> Self::Element;
    fn parse_element(&self, text: &str) -> Result<Self::Element, WalkError>;
    fn format_element(&self, e: &Self::Element) -> String;
    fn spec(&self) -> GroupSpec;
}

/// JSON descriptor of a group: `{"kind":"free","d":2}` or `{"kind":"int"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GroupSpec {
    #[serde(rename = "free")]
    Free { d: u32 },
    #[serde(rename = "int")]
    Int,
}

/// The free group `F_d`, `d ≥ 2`, with elements as reduced words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeGroup {
    rank: u32,
}

impl FreeGroup {
    pub fn new(rank: u32) -> Result<Self, WalkError> {
        if rank < 2 {
            return Err(WalkError::InvalidSequence(format!(
                "free group rank must be at least 2, got {rank}"
            )));
        }
        Ok(Self { rank })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }
}

impl Group for FreeGroup {
    type Element = ReducedWord;

    fn identity(&self) -> ReducedWord {
        ReducedWord::identity(self.rank)
    }

    fn multiply(&self, a: &ReducedWord, b: &ReducedWord) -> ReducedWord {
        a.mul(b)
    }

    fn inverse(&self, a: &ReducedWord) -> ReducedWord {
        a.inverse()
    }

    /// Comma-joined signed letters, `""` for the identity; reduced on parse.
    fn parse_element(&self, text: &str) -> Result<ReducedWord, WalkError> {
        Ok(ReducedWord::parse_key(text, self.rank)?)
    }

    fn format_element(&self, e: &ReducedWord) -> String {
        e.to_key()
    }

    fn spec(&self) -> GroupSpec {
        GroupSpec::Free { d: self.rank }
    }
}

/// The integers under addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Integers;

impl Group for Integers {
    type Element = i64;

    fn identity(&self) -> i64 {
        0
    }

    fn multiply(&self, a: &i64, b: &i64) -> i64 {
        a + b
    }

    fn inverse(&self, a: &i64) -> i64 {
        -a
    }

    fn parse_element(&self, text: &str) -> Result<i64, WalkError> {
        text.trim()
            .parse()
            .map_err(|_| WalkError::Parse(format!("bad integer element '{text}'")))
    }

    fn format_element(&self, e: &i64) -> String {
        e.to_string()
    }

    fn spec(&self) -> GroupSpec {
        GroupSpec::Int
    }
}
