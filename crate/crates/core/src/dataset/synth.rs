//! A deterministic stand-in corpus. A rule-based teacher picks one step per
//! reactant set from the full candidate list using local chemistry
//! preferences (recombination over addition over abstraction from weak C–H
//! bonds, and so on); its products seed the next step of a chain.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use super::{canonical_reaction, split_name, CorpusRecord};
use crate::chemgraph::{make_explicit, parse_reaction, parse_smiles, Category, Element, Molecule, MoleculeSet, Split};
use crate::featurize::fnv1a;
use crate::orbchain::{check_rules, enumerate_candidates, Family, MechanisticStep, OrbitalKind, RuleSet};

/// Closed-shell molecules, from methane up to C34.
pub const POOL: &[&str] = &[
    "C",
    "CC",
    "CCC",
    "CC(C)C",
    "CCCC",
    "C=C",
    "CC=C",
    "C=CC=C",
    "C=CC(C)=C",
    "CC#C",
    "CO",
    "CCO",
    "OCCO",
    "CC(C)(C)O",
    "C=O",
    "CC=O",
    "C=CC=O",
    "CC(C)=O",
    "COC",
    "CC(=O)O",
    "CCl",
    "ClC(Cl)Cl",
    "C1CCCC1",
    "C1CCCCC1",
    "C1=CC=CC=C1",
    "CC1=CC=CC=C1",
    "CCCCCCCCCC",
    "CC1=CCC(CC1)C(C)=C",
    "CC1=CCC2CC1C2(C)C",
    "C=CC(=C)CCC=C(C)C",
    "CC(C)=CCCC(C)(O)C=C",
    "CC(C)=CCCC(C)=CCO",
    "CCCCCC(=O)OCC",
    "CC(C)CCCC(C)CCCO",
    "CCCCCCCCCCCC",
    "CCCCCCCCCCCCCCC",
    "CC(C)=CCCC(C)=CCCC(C)=CCO",
    "CCCCCCCCC=CCCCCCCCC(=O)O",
    "CCCCCCCCCCCCCCCCCCCCCC",
    "CCCCCCCCCCCCCCCC(=O)OCCCC",
    "CCCCCCCCCCCCCCCCCCCCCCCCC",
    "CC(C)=CCCC(C)=CCCC(C)=CCCC=C(C)CCC=C(C)CCC=C(C)C",
    "CCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCC",
    "CCCCCCCCCCCCCCCCCC(=O)OCCCCCCCCCCCCCCCC",
    "CCCCCCCCCCCCCCCCCCCCO",
    "CC(C)CCCCCCCCCCCCCCCCCCC",
    "CCCCCCCCCCCCOCCCCCCCCCCC",
    "CCCCCCCCCCCCCCCCCCCCCCCCCCC",
    "CCCCCCCCCC=CCCCCCCCCCCC(=O)OC",
    "OCCCCCCCCCCCCCCCCCCCCCCCCCO",
    "CCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCC",
    "CCCCCCCCCCCCCCCCOCCCCCCCCCCCCCCCC",
    "CCCCCCCCC=CCCCCCCCC(=O)OCCCCCCCCCCCCCCCC",
    "CC(C)CCCCCCCCCCCCCCCCCCCCCCCCCCCC",
    "OCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCO",
    "C=CCCCCCCCCCCCCCCCCCCCCCCCCCCCCCC",
];

pub const RADICALS: &[&str] = &["[OH]", "[Cl]", "[Br]", "[CH3]", "[H]", "[O]O"];

/// Single molecules whose weakest bond breaks first.
pub const PRECURSORS: &[&str] = &["ClCl", "BrBr", "OO", "CCOOCC", "CC(C)(C)OOC(C)(C)C", "CC(=O)OOC(C)=O"];

pub const OXYGEN: &str = "[O][O]";

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub test_fraction: f64,
    /// Steps per chain, including the first.
    pub chain_length: usize,
    /// Add O2 to states holding a carbon-centred radical.
    pub add_oxygen: bool,
    pub pool: Vec<String>,
    pub radicals: Vec<String>,
    pub precursors: Vec<String>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 17,
            test_fraction: 0.2,
            chain_length: 3,
            add_oxygen: true,
            pool: POOL.iter().map(|s| s.to_string()).collect(),
            radicals: RADICALS.iter().map(|s| s.to_string()).collect(),
            precursors: PRECURSORS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

struct Site<'a> {
    m: &'a Molecule,
    i: usize,
}

impl Site<'_> {
    fn element(&self) -> Element {
        self.m.atom(self.i).element
    }

    fn h(&self) -> f64 {
        self.m.hydrogen_count(self.i) as f64
    }

    fn heavy_degree(&self) -> f64 {
        self.m.heavy_degree(self.i) as f64
    }

    /// Allylic/benzylic: a heavy neighbour carries a π bond.
    fn next_to_pi(&self) -> bool {
        self.m.neighbors(self.i).iter().any(|&(j, b)| self.m.bonds()[b].order.value() == 1 && self.m.pi_bond_count(j) > 0)
    }

    fn is_dioxygen(&self) -> bool {
        self.m.len() == 2 && self.m.atoms().iter().all(|a| a.element == Element::O)
    }

    fn next_to_heteroatom(&self) -> bool {
        self.m.neighbors(self.i).iter().any(|&(j, _)| matches!(self.m.atom(j).element, Element::O | Element::N))
    }
}

fn site(ms: &MoleculeSet, map: u32) -> Option<Site<'_>> {
    let (mi, ai) = ms.locate(map)?;
    Some(Site { m: &ms.molecules[mi], i: ai })
}

fn radical_strength(e: Element) -> f64 {
    match e {
        Element::O | Element::F | Element::Cl => 5.0,
        Element::H => 4.0,
        _ => 3.0,
    }
}

/// Hand-set preference for a candidate step. Uses the two reactive atoms,
/// their neighbours, and the ring size of intramolecular attacks.
pub fn teacher_score(step: &MechanisticStep) -> f64 {
    let ms = &step.reactants.set;
    let pair = &step.pair;
    let (somo, other) = if pair.m1.kind == OrbitalKind::Somo { (&pair.m1, &pair.m2) } else { (&pair.m2, &pair.m1) };
    let (Some(r), Some(kept)) = (site(ms, somo.atom), site(ms, other.atom)) else { return f64::NEG_INFINITY };
    let attacked = other.neighbor.and_then(|n| site(ms, n));
    let can_close_ring = matches!(step.family, Family::Addition | Family::ConjugateAddition | Family::Abstraction);
    let strained = can_close_ring && attacked.as_ref().is_some_and(|a| small_ring(&r, a));
    let base = family_score(step, &r, &kept, attacked);
    if strained {
        base - STRAIN_PENALTY
    } else {
        base
    }
}

/// Intramolecular transition states with fewer than five ring atoms are
/// disfavoured.
const STRAIN_PENALTY: f64 = 6.0;

fn small_ring(r: &Site<'_>, a: &Site<'_>) -> bool {
    std::ptr::eq(r.m, a.m) && r.i != a.i && r.m.distances(r.i, 3)[a.i] < 4
}

fn family_score(step: &MechanisticStep, r: &Site<'_>, kept: &Site<'_>, attacked: Option<Site<'_>>) -> f64 {
    let ms = &step.reactants.set;
    let other = if step.pair.m1.kind == OrbitalKind::Somo { &step.pair.m2 } else { &step.pair.m1 };
    match step.family {
        // O2 traps carbon radicals; HO-O2 and Cl-O2 adducts are too weak to count.
        Family::Recombination if (r.is_dioxygen() && kept.element() != Element::C) || (kept.is_dioxygen() && r.element() != Element::C) => 1.0,
        Family::Recombination => 10.0 + 0.1 * (kept.element() == Element::O) as u8 as f64,
        Family::Addition | Family::ConjugateAddition => {
            let a = attacked.as_ref().map_or(0.0, Site::h);
            let conj = if step.family == Family::ConjugateAddition { 0.5 } else { 0.0 };
            let carbonyl = if kept.element() == Element::O { -2.0 } else { 0.0 };
            7.0 + 0.4 * a + conj + carbonyl + 0.1 * radical_strength(r.element())
        }
        Family::Abstraction => {
            let Some(a) = attacked else { return 0.0 };
            if a.element() != Element::H {
                // X2 + R -> RX + X
                let weak = a.element().is_halogen() && kept.element().is_halogen();
                return if weak { 6.5 } else { 0.5 };
            }
            let mut s = radical_strength(r.element());
            match kept.element() {
                Element::C => {
                    s += 0.3 * kept.heavy_degree();
                    if kept.next_to_pi() {
                        s += 1.5;
                    }
                    if kept.next_to_heteroatom() {
                        s += 1.0;
                    }
                    if kept.m.pi_bond_count(kept.i) > 0 {
                        s -= 1.5;
                    }
                }
                Element::O => s += 0.5 - if kept.next_to_pi() { 0.0 } else { 1.0 },
                _ => s -= 0.5,
            }
            s
        }
        Family::BetaScission => 2.0 + if r.element() == Element::O { 1.5 } else { 0.0 },
        Family::Substitution => 0.5,
        Family::Homolysis => {
            let n = other.neighbor.and_then(|n| site(ms, n)).map(|s| s.element());
            match (kept.element(), n) {
                (Element::O, Some(Element::O)) => 2.5,
                (x, Some(y)) if x.is_halogen() && y.is_halogen() => 2.0,
                _ => 0.0,
            }
        }
    }
}

/// The highest-scoring rule-passing candidate; ties go to the smaller key.
pub fn teacher_choice(steps: &[MechanisticStep]) -> Option<&MechanisticStep> {
    let rules = RuleSet::all();
    steps.iter().filter(|s| check_rules(s, &rules).is_ok()).min_by(|a, b| {
        teacher_score(b).total_cmp(&teacher_score(a)).then_with(|| a.key.cmp(&b.key))
    })
}

fn has_oo_bond(ms: &MoleculeSet) -> bool {
    ms.molecules.iter().any(|m| {
        m.bonds().iter().any(|b| m.atom(b.a).element == Element::O && m.atom(b.b).element == Element::O)
    })
}

fn category_of(ms: &MoleculeSet) -> Category {
    if has_oo_bond(ms) {
        Category::Specific
    } else {
        Category::Core
    }
}

/// Radical-bearing molecules of a product set, plus O2 when one of them is
/// carbon-centred.
fn next_state(products: &MoleculeSet, add_oxygen: bool) -> Option<String> {
    let radicals: Vec<&Molecule> = products.molecules.iter().filter(|m| m.radical_count() > 0).collect();
    if radicals.is_empty() {
        return None;
    }
    let text = crate::chemgraph::write_molecules(
        &radicals.iter().map(|m| (*m).clone()).collect::<Vec<_>>(),
        &crate::chemgraph::WriteOptions::new(true, false),
    );
    let carbon_radical = radicals
        .iter()
        .any(|m| m.atoms().iter().any(|a| a.element == Element::C && a.radical_electrons > 0));
    let oxygen_present = radicals.iter().any(|m| m.len() == 2 && m.atoms().iter().all(|a| a.element == Element::O));
    if add_oxygen && carbon_radical && !oxygen_present {
        Some(format!("{text}.{OXYGEN}"))
    } else {
        Some(text)
    }
}

/// Train or test by hashing a canonical reaction.
pub fn split_for(seed: u64, canonical: &str, test_fraction: f64) -> Split {
    let h = fnv1a(seed, canonical.as_bytes());
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    if u < test_fraction {
        Split::Test
    } else {
        Split::Train
    }
}

/// Runs the teacher over every start state and its chained successors.
/// Identical reactions are kept once; splits are assigned by hashing the
/// unmapped reaction, so train and test never share one.
pub fn generate(cfg: &SynthConfig) -> Vec<CorpusRecord> {
    let mut starts: Vec<String> = Vec::new();
    for m in &cfg.pool {
        for r in &cfg.radicals {
            starts.push(format!("{r}.{m}"));
        }
    }
    starts.extend(cfg.precursors.iter().cloned());

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for start in starts {
        let mut state = start;
        for _ in 0..cfg.chain_length {
            let Ok(ms) = parse_smiles(&state) else {
                tracing::warn!(%state, "unparseable synthetic state");
                break;
            };
            let ex = Arc::new(make_explicit(&ms));
            let steps = enumerate_candidates(&ex, None);
            let Some(choice) = teacher_choice(&steps) else { break };
            let category = category_of(&ms);
            let line = format!("{}|{}", choice.mapped_line(), category);
            let mut record = match parse_reaction(&line) {
                Ok(r) => r,
                Err(e) => {
                    tracing::warn!(%line, "teacher step does not parse back: {e}");
                    break;
                }
            };
            let canonical = canonical_reaction(&record);
            if seen.insert(canonical.clone()) {
                record.split = split_for(cfg.seed, &canonical, cfg.test_fraction);
                let id = format!("syn{:05}", out.len());
                out.push(CorpusRecord { id, source: "synthetic".into(), line: out.len() + 1, raw: line, record });
            }
            match next_state(&choice.products, cfg.add_oxygen) {
                Some(s) => state = s,
                None => break,
            }
        }
    }
    out
}

/// Writes `{core,specific}_{train,test}.rxn` in the line format.
pub fn write_corpus_dir(dir: &Path, records: &[CorpusRecord]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for cat in [Category::Core, Category::Specific] {
        for split in [Split::Train, Split::Test] {
            let path = dir.join(format!("{cat}_{}.rxn", split_name(split)));
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(f, "# synthetic teacher corpus: {cat} {}", split_name(split))?;
            for r in records.iter().filter(|r| r.record.category == cat && r.record.split == split) {
                writeln!(f, "{}\t{}", r.id, r.record.to_line())?;
            }
            f.flush()?;
        }
    }
    Ok(())
}
