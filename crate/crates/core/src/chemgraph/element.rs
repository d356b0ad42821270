use std::fmt;

use serde::{Deserialize, Serialize};

/// Chemical elements understood by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

/// Which mass table to use when summing atomic masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassMode {
    Monoisotopic,
    Average,
}

impl Element {
    pub const COUNT: usize = 10;

    pub const ALL: [Element; Element::COUNT] = [
        Element::H,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn from_symbol(symbol: &str) -> Option<Self> {
        Some(match symbol {
            "H" => Element::H,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "P" => Element::P,
            "S" => Element::S,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    /// Position in [`Element::ALL`]; used for one-hot encodings.
    pub fn ordinal(self) -> usize {
        Element::ALL.iter().position(|e| *e == self).unwrap()
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    pub fn valence_electrons(self) -> u8 {
        match self {
            Element::H => 1,
            Element::C => 4,
            Element::N | Element::P => 5,
            Element::O | Element::S => 6,
            Element::F | Element::Cl | Element::Br | Element::I => 7,
        }
    }

    /// Pauling electronegativity.
    pub fn electronegativity(self) -> f64 {
        match self {
            Element::H => 2.20,
            Element::C => 2.55,
            Element::N => 3.04,
            Element::O => 3.44,
            Element::F => 3.98,
            Element::P => 2.19,
            Element::S => 2.58,
            Element::Cl => 3.16,
            Element::Br => 2.96,
            Element::I => 2.66,
        }
    }

    /// Mass of the most abundant isotope (IUPAC/AME values).
    pub fn monoisotopic_mass(self) -> f64 {
        match self {
            Element::H => 1.007_825_032_23,
            Element::C => 12.0,
            Element::N => 14.003_074_004_43,
            Element::O => 15.994_914_619_57,
            Element::F => 18.998_403_162_73,
            Element::P => 30.973_761_998_42,
            Element::S => 31.972_071_174_4,
            Element::Cl => 34.968_852_682,
            Element::Br => 78.918_337_6,
            Element::I => 126.904_471_9,
        }
    }

    /// IUPAC 2021 abridged standard atomic weight.
    pub fn average_mass(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.90,
        }
    }

    pub fn mass(self, mode: MassMode) -> f64 {
        match mode {
            MassMode::Monoisotopic => self.monoisotopic_mass(),
            MassMode::Average => self.average_mass(),
        }
    }

    /// Elements that may be written without brackets in SMILES.
    pub fn is_organic_subset(self) -> bool {
        !matches!(self, Element::H)
    }

    /// First-row elements obey the octet rule strictly (four valence orbitals).
    pub fn is_octet_bound(self) -> bool {
        matches!(self, Element::C | Element::N | Element::O | Element::F)
    }

    pub fn is_halogen(self) -> bool {
        matches!(self, Element::F | Element::Cl | Element::Br | Element::I)
    }

    /// Normal valences of the neutral atom, smallest first.
    pub fn default_valences(self) -> &'static [u8] {
        match self {
            Element::H => &[1],
            Element::C => &[4],
            Element::N => &[3, 5],
            Element::O => &[2],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
        }
    }

    /// Valences allowed at a given formal charge, smallest first.
    ///
    /// Charged atoms are treated as isoelectronic with their neighbour in the
    /// row: N+ behaves like C (4), O- like F (1), C+ and C- both drop to 3.
    pub fn allowed_valences(self, charge: i8) -> Vec<u8> {
        let shift = |v: u8| -> Option<u8> {
            let adjusted = match self {
                Element::C => v as i16 - (charge as i16).abs(),
                Element::H => v as i16 - (charge as i16).abs(),
                _ => v as i16 + charge as i16,
            };
            u8::try_from(adjusted).ok()
        };
        let mut out: Vec<u8> = self.default_valences().iter().filter_map(|v| shift(*v)).collect();
        out.dedup();
        out
    }

    /// Number of unpaired electrons implied by `used` valence (bond orders +
    /// hydrogens), or `None` if `used` exceeds every allowed valence.
    pub fn inferred_radicals(self, charge: i8, used: u8) -> Option<u8> {
        self.allowed_valences(charge)
            .into_iter()
            .find(|v| *v >= used)
            .map(|v| v - used)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
