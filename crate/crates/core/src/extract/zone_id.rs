//! Zone identifiers of the form `Γ-x.yΔ`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One of the four positions of a zone id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Gamma,
    X,
    Y,
    Delta,
}

impl Symbol {
    pub const ALL: [Symbol; 4] = [Symbol::Gamma, Symbol::X, Symbol::Y, Symbol::Delta];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Symbol::Gamma => "G",
            Symbol::X => "x",
            Symbol::Y => "y",
            Symbol::Delta => "D",
        }
    }
}

/// A subset of the four symbols, as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolSet(u8);

impl SymbolSet {
    pub const FULL: SymbolSet = SymbolSet(0b1111);

    pub fn of(symbols: &[Symbol]) -> SymbolSet {
        SymbolSet(symbols.iter().fold(0, |m, s| m | 1 << s.index()))
    }

    pub fn contains(self, s: Symbol) -> bool {
        self.0 & (1 << s.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: SymbolSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn symbols(self) -> impl Iterator<Item = Symbol> {
        Symbol::ALL.into_iter().filter(move |&s| self.contains(s))
    }

    /// Symbols of `self` missing from `other`.
    pub fn minus(self, other: SymbolSet) -> SymbolSet {
        SymbolSet(self.0 & !other.0)
    }
}

impl fmt::Display for SymbolSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.symbols().map(Symbol::name).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// A parsed zone id. Ordering compares `(Γ, x, y, Δ)` with x and y numeric.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZoneId {
    pub gamma: char,
    pub x: u32,
    pub y: u32,
    pub delta: char,
    pub raw: String,
}

impl ZoneId {
    pub fn parse(raw: &str) -> Result<ZoneId> {
        let bad = || Error::ZoneId(raw.to_string());
        let mut chars = raw.chars();
        let gamma = chars.next().filter(char::is_ascii_uppercase).ok_or_else(bad)?;
        let rest = chars.as_str().strip_prefix('-').ok_or_else(bad)?;
        let delta = rest.chars().last().filter(char::is_ascii_uppercase).ok_or_else(bad)?;
        let (x, y) = rest[..rest.len() - 1].split_once('.').ok_or_else(bad)?;
        let num = |s: &str| -> Result<u32> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            s.parse().map_err(|_| bad())
        };
        Ok(ZoneId {
            gamma,
            x: num(x)?,
            y: num(y)?,
            delta,
            raw: raw.to_string(),
        })
    }

    /// Numeric value of one symbol; letters map to their code point.
    pub fn value(&self, s: Symbol) -> u32 {
        match s {
            Symbol::Gamma => self.gamma as u32,
            Symbol::X => self.x,
            Symbol::Y => self.y,
            Symbol::Delta => self.delta as u32,
        }
    }

    /// Sort key restricted to `set`; symbols outside it compare equal.
    pub fn key(&self, set: SymbolSet) -> [u32; 4] {
        Symbol::ALL.map(|s| if set.contains(s) { self.value(s) } else { 0 })
    }

    /// Name of the group of zones that agree with this one on `set`, with
    /// the other symbols written as `*`, e.g. `A-2.*E`.
    pub fn group_name(&self, set: SymbolSet) -> String {
        let show = |s: Symbol, v: String| if set.contains(s) { v } else { "*".to_string() };
        format!(
            "{}-{}.{}{}",
            show(Symbol::Gamma, self.gamma.to_string()),
            show(Symbol::X, self.x.to_string()),
            show(Symbol::Y, self.y.to_string()),
            show(Symbol::Delta, self.delta.to_string()),
        )
    }
}

impl FromStr for ZoneId {
    type Err = Error;

    fn from_str(s: &str) -> Result<ZoneId> {
        ZoneId::parse(s)
    }
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl Ord for ZoneId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key(SymbolSet::FULL)
            .cmp(&other.key(SymbolSet::FULL))
            .then_with(|| self.raw.cmp(&other.raw))
    }
}

impl PartialOrd for ZoneId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
