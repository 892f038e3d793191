//! Reduced words in the free group `F_d = ⟨a_1, …, a_d⟩`.
//!
//! Letters are non-zero integers in `{±1, …, ±d}`; `-j` stands for `a_j⁻¹`.
//! Words of a fixed length are indexed in lexicographic order of their
//! signed letters (`-d < … < -1 < 1 < … < d`), which is the order in which
//! every cylinder table in this crate is stored.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Letter = i32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreeGroupError {
    #[error("letter {letter} is not in ±1..=±{rank}")]
    BadLetter { letter: Letter, rank: u32 },
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(u32, u32),
    #[error("rank must be at least 1, got {0}")]
    BadRank(u32),
    #[error("cannot parse word '{0}'")]
    Parse(String),
}

/// A cancellation-free word in `F_d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReducedWord {
    rank: u32,
    letters: Vec<Letter>,
}

fn check_letter(letter: Letter, rank: u32) -> Result<(), FreeGroupError> {
    if letter == 0 || letter.unsigned_abs() > rank {
        Err(FreeGroupError::BadLetter { letter, rank })
    } else {
        Ok(())
    }
}

/// Free reduction by a single stack pass.
pub fn reduce(letters: &[Letter], rank: u32) -> Result<ReducedWord, FreeGroupError> {
    if rank == 0 {
        return Err(FreeGroupError::BadRank(rank));
    }
    let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        check_letter(l, rank)?;
        if stack.last() == Some(&-l) {
            stack.pop();
        } else {
            stack.push(l);
        }
    }
    Ok(ReducedWord {
        rank,
        letters: stack,
    })
}

/// `reduce(g·h)`.
pub fn multiply(g: &ReducedWord, h: &ReducedWord) -> Result<ReducedWord, FreeGroupError> {
    if g.rank != h.rank {
        return Err(FreeGroupError::RankMismatch(g.rank, h.rank));
    }
    Ok(g.mul(h))
}

impl ReducedWord {
    pub fn identity(rank: u32) -> Self {
        Self {
            rank,
            letters: Vec::new(),
        }
    }

    pub fn generator(rank: u32, letter: Letter) -> Result<Self, FreeGroupError> {
        check_letter(letter, rank)?;
        Ok(Self {
            rank,
            letters: vec![letter],
        })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn inverse(&self) -> Self {
        Self {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    /// Product of words of the same rank. Panics in debug builds on rank mismatch.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.rank, other.rank);
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            if letters.last() == Some(&-l) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Self {
            rank: self.rank,
            letters,
        }
    }

    /// The first `n` letters (the whole word if shorter).
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            rank: self.rank,
            letters: self.letters[..n.min(self.letters.len())].to_vec(),
        }
    }

    pub fn starts_with(&self, other: &Self) -> bool {
        self.letters.starts_with(&other.letters)
    }

    /// Comma-joined signed letters; the identity is the empty string.
    pub fn to_key(&self) -> String {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        parts.join(",")
    }

    /// Parses a comma-joined key and reduces it.
    pub fn parse_key(key: &str, rank: u32) -> Result<Self, FreeGroupError> {
        let key = key.trim();
        if key.is_empty() {
            return Ok(Self::identity(rank));
        }
        let letters = key
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<Letter>()
                    .map_err(|_| FreeGroupError::Parse(key.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        reduce(&letters, rank)
    }

    /// Parses a key that must already be reduced.
    pub fn parse_reduced_key(key: &str, rank: u32) -> Result<Self, FreeGroupError> {
        let w = Self::parse_key(key, rank)?;
        let raw_len = if key.trim().is_empty() {
            0
        } else {
            key.split(',').count()
        };
        if w.len() != raw_len {
            return Err(FreeGroupError::Parse(format!("'{key}' is not reduced")));
        }
        Ok(w)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            f.write_str("e")
        } else {
            f.write_str(&self.to_key())
        }
    }
}

/// All generator letters in lexicographic order: `-d, …, -1, 1, …, d`.
pub fn generator_letters(rank: u32) -> Vec<Letter> {
    let d = rank as Letter;
    (-d..=-1).chain(1..=d).collect()
}

/// Position of a letter in [`generator_letters`].
#[inline]
pub fn letter_code(rank: u32, letter: Letter) -> usize {
    let d = rank as Letter;
    if letter < 0 {
        (letter + d) as usize
    } else {
        (letter + d - 1) as usize
    }
}

#[inline]
pub fn code_letter(rank: u32, code: usize) -> Letter {
    let d = rank as Letter;
    let c = code as Letter;
    if c < d {
        c - d
    } else {
        c - d + 1
    }
}

/// Bijection between reduced words of a fixed length `n ≥ 1` and
/// `0..count`, increasing in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordIndexer {
    rank: u32,
    depth: usize,
}

impl WordIndexer {
    pub fn new(rank: u32, depth: usize) -> Self {
        debug_assert!(depth >= 1 && rank >= 1);
        Self { rank, depth }
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `2d (2d - 1)^{n-1}`.
    pub fn count(&self) -> usize {
        let k = 2 * self.rank as usize;
        k * (k - 1).pow(self.depth as u32 - 1)
    }

    /// Index of the reduced word formed by the first `depth` letters of `letters`.
    pub fn index_of(&self, letters: &[Letter]) -> usize {
        debug_assert!(letters.len() >= self.depth);
        let branching = 2 * self.rank as usize - 1;
        let mut idx = letter_code(self.rank, letters[0]);
        for k in 1..self.depth {
            let c = letter_code(self.rank, letters[k]);
            let forbidden = letter_code(self.rank, -letters[k - 1]);
            let rel = if c > forbidden { c - 1 } else { c };
            idx = idx * branching + rel;
        }
        idx
    }

    /// Like [`Self::index_of`] but over the concatenation `head ++ tail`
    /// without allocating.
    pub fn index_of_concat(&self, head: &[Letter], tail: &[Letter]) -> usize {
        let branching = 2 * self.rank as usize - 1;
        let mut letters = head.iter().chain(tail.iter()).copied();
        let mut prev = letters.next().expect("non-empty word");
        let mut idx = letter_code(self.rank, prev);
        for _ in 1..self.depth {
            let l = letters.next().expect("word shorter than depth");
            let c = letter_code(self.rank, l);
            let forbidden = letter_code(self.rank, -prev);
            idx = idx * branching + if c > forbidden { c - 1 } else { c };
            prev = l;
        }
        idx
    }

    pub fn letters_at(&self, mut index: usize) -> Vec<Letter> {
        let branching = 2 * self.rank as usize - 1;
        let mut rels = vec![0usize; self.depth];
        for k in (1..self.depth).rev() {
            rels[k] = index % branching;
            index /= branching;
        }
        rels[0] = index;
        let mut letters = Vec::with_capacity(self.depth);
        let first = code_letter(self.rank, rels[0]);
        letters.push(first);
        for k in 1..self.depth {
            let forbidden = letter_code(self.rank, -letters[k - 1]);
            let c = if rels[k] >= forbidden {
                rels[k] + 1
            } else {
                rels[k]
            };
            letters.push(code_letter(self.rank, c));
        }
        letters
    }

    pub fn word_at(&self, index: usize) -> ReducedWord {
        ReducedWord {
            rank: self.rank,
            letters: self.letters_at(index),
        }
    }

    pub fn words(&self) -> impl Iterator<Item = ReducedWord> + '_ {
        (0..self.count()).map(move |i| self.word_at(i))
    }
}
