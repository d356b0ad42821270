//! Mechanistic reaction records and fish-hook arrow codes.
//!
//! Line format: `reactants >> products | arrows [| category]`, where arrows
//! are `;`-separated `SRC>DST` tokens and each orbital designator is an atom
//! map (`7`) or a bond between two maps (`7-8`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::canon::write_smiles;
use super::molecule::{MoleculeSet, Role};
use super::smiles::{parse_smiles, SmilesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrbitalRef {
    Atom(u32),
    /// Bond between two maps, stored with the smaller map first.
    Bond(u32, u32),
}

impl OrbitalRef {
    pub fn bond(a: u32, b: u32) -> Self {
        OrbitalRef::Bond(a.min(b), a.max(b))
    }

    pub fn maps(&self) -> Vec<u32> {
        match *self {
            OrbitalRef::Atom(a) => vec![a],
            OrbitalRef::Bond(a, b) => vec![a, b],
        }
    }

    pub fn relabel(&self, f: impl Fn(u32) -> u32) -> Self {
        match *self {
            OrbitalRef::Atom(a) => OrbitalRef::Atom(f(a)),
            OrbitalRef::Bond(a, b) => OrbitalRef::bond(f(a), f(b)),
        }
    }
}

impl fmt::Display for OrbitalRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitalRef::Atom(a) => write!(f, "{a}"),
            OrbitalRef::Bond(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

impl FromStr for OrbitalRef {
    type Err = ReactionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReactionError::Arrow(format!("bad orbital designator '{s}'"));
        let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
        match s.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a == b {
                    return Err(bad());
                }
                Ok(OrbitalRef::bond(a, b))
            }
            None => Ok(OrbitalRef::Atom(num(s)?)),
        }
    }
}

/// One single-electron (fish-hook) arrow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfArrow {
    pub source: OrbitalRef,
    pub target: OrbitalRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ArrowCode {
    pub arrows: Vec<HalfArrow>,
}

impl ArrowCode {
    pub fn new(arrows: Vec<HalfArrow>) -> Self {
        ArrowCode { arrows }
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }

    /// Arrow order carries no meaning for single-electron moves; sorting gives
    /// a comparable form.
    pub fn canonical(&self) -> ArrowCode {
        let mut arrows = self.arrows.clone();
        arrows.sort();
        ArrowCode { arrows }
    }

    pub fn maps(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .arrows
            .iter()
            .flat_map(|a| a.source.maps().into_iter().chain(a.target.maps()))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn relabel(&self, f: impl Fn(u32) -> u32 + Copy) -> ArrowCode {
        ArrowCode {
            arrows: self
                .arrows
                .iter()
                .map(|a| HalfArrow { source: a.source.relabel(f), target: a.target.relabel(f) })
                .collect(),
        }
    }

    /// Every bond losing electrons loses both (two fish-hooks), and every
    /// bond formed receives two.
    pub fn check_pairing(&self) -> Result<(), ReactionError> {
        let mut sources: BTreeMap<OrbitalRef, usize> = BTreeMap::new();
        let mut targets: BTreeMap<OrbitalRef, usize> = BTreeMap::new();
        for a in &self.arrows {
            if let OrbitalRef::Bond(..) = a.source {
                *sources.entry(a.source).or_default() += 1;
            }
            if let OrbitalRef::Bond(..) = a.target {
                *targets.entry(a.target).or_default() += 1;
            }
        }
        for (bond, n) in sources.iter().chain(targets.iter()) {
            if *n != 2 {
                return Err(ReactionError::Arrow(format!("bond {bond} has {n} fish-hooks; expected 2")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ArrowCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.arrows.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{}>{}", a.source, a.target)?;
        }
        Ok(())
    }
}

impl FromStr for ArrowCode {
    type Err = ReactionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut arrows = Vec::new();
        for tok in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (src, dst) = tok
                .split_once('>')
                .ok_or_else(|| ReactionError::Arrow(format!("arrow '{tok}' lacks '>'")))?;
            arrows.push(HalfArrow { source: src.parse()?, target: dst.parse()? });
        }
        Ok(ArrowCode { arrows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    #[default]
    Core,
    Specific,
}

impl FromStr for Category {
    type Err = ReactionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "core" => Ok(Category::Core),
            "specific" => Ok(Category::Specific),
            other => Err(ReactionError::Format(format!("unknown category '{other}'"))),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Core => "core",
            Category::Specific => "specific",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReactionError {
    #[error("malformed reaction line: {0}")]
    Format(String),
    #[error("{side}: {source}")]
    Smiles {
        side: &'static str,
        #[source]
        source: SmilesError,
    },
    #[error("arrow code: {0}")]
    Arrow(String),
    #[error("unbalanced reaction: {0}")]
    Unbalanced(String),
    #[error("arrow references map {0}, absent from the reactants")]
    DanglingMap(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionRecord {
    pub reactants: MoleculeSet,
    pub products: MoleculeSet,
    pub arrows: ArrowCode,
    pub category: Category,
    pub split: Split,
}

impl ReactionRecord {
    pub fn new(
        reactants: MoleculeSet,
        products: MoleculeSet,
        arrows: ArrowCode,
        category: Category,
        split: Split,
    ) -> Result<Self, ReactionError> {
        check_balance(&reactants, &products)?;
        for map in arrows.maps() {
            if reactants.locate(map).is_none() {
                return Err(ReactionError::DanglingMap(map));
            }
        }
        arrows.check_pairing()?;
        Ok(ReactionRecord {
            reactants: reactants.with_role(Role::Reactants),
            products: products.with_role(Role::Products),
            arrows,
            category,
            split,
        })
    }

    /// Serializes in the line format with canonical, mapped SMILES.
    pub fn to_line(&self) -> String {
        format!(
            "{}>>{}|{}|{}",
            write_smiles(&self.reactants, true, true),
            write_smiles(&self.products, true, true),
            self.arrows,
            self.category
        )
    }
}

/// Reactant and product sides must carry the same atom maps and the same
/// element counts.
pub fn check_balance(reactants: &MoleculeSet, products: &MoleculeSet) -> Result<(), ReactionError> {
    let (r, p) = (reactants.map_multiset(), products.map_multiset());
    if r != p {
        let missing: Vec<u32> = r.keys().filter(|k| !p.contains_key(k)).copied().collect();
        let extra: Vec<u32> = p.keys().filter(|k| !r.contains_key(k)).copied().collect();
        return Err(ReactionError::Unbalanced(format!(
            "maps missing from products {missing:?}, extra in products {extra:?}"
        )));
    }
    if reactants.formula() != products.formula() {
        return Err(ReactionError::Unbalanced("element counts differ".into()));
    }
    Ok(())
}

pub fn parse_reaction(line: &str) -> Result<ReactionRecord, ReactionError> {
    let parts: Vec<&str> = line.trim().split('|').map(str::trim).collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(ReactionError::Format("expected 'reactants>>products|arrows[|category]'".into()));
    }
    let (lhs, rhs) = parts[0]
        .split_once(">>")
        .ok_or_else(|| ReactionError::Format("missing '>>'".into()))?;
    let reactants = parse_smiles(lhs).map_err(|source| ReactionError::Smiles { side: "reactants", source })?;
    let products = parse_smiles(rhs).map_err(|source| ReactionError::Smiles { side: "products", source })?;
    let arrows: ArrowCode = parts[1].parse()?;
    let category = match parts.get(2) {
        Some(c) if !c.is_empty() => c.parse()?,
        _ => Category::Core,
    };
    ReactionRecord::new(reactants, products, arrows, category, Split::Train)
}
