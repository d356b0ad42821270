//! Corpus file formats, selected by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{CorpusRecord, LoadFailure};
use crate::chemgraph::{parse_reaction, Category, Split};

/// Category and split implied by a file name such as `specific_test.rxn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FileDefaults {
    pub category: Category,
    pub split: Split,
}

impl FileDefaults {
    pub fn from_file_name(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        FileDefaults {
            category: if lower.contains("specific") { Category::Specific } else { Category::Core },
            split: if lower.contains("test") { Split::Test } else { Split::Train },
        }
    }
}

pub trait CorpusAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn extensions(&self) -> &[&'static str];
    /// One result per record in `text`; failures carry 1-based line numbers.
    fn parse(&self, source: &str, text: &str, defaults: FileDefaults) -> Vec<Result<CorpusRecord, LoadFailure>>;
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        other => Err(format!("unknown split '{other}'")),
    }
}

fn build(
    source: &str,
    line: usize,
    id: Option<&str>,
    reaction_line: &str,
    split: Split,
    raw: &str,
) -> Result<CorpusRecord, LoadFailure> {
    let fail = |message: String| LoadFailure { source: source.to_string(), line, message };
    let mut record = parse_reaction(reaction_line).map_err(|e| fail(e.to_string()))?;
    record.split = split;
    Ok(CorpusRecord {
        id: id.map_or_else(|| format!("{source}:{line}"), str::to_string),
        source: source.to_string(),
        line,
        raw: raw.to_string(),
        record,
    })
}

/// The native line format: `[id<TAB>]reactants>>products|arrows[|category][<TAB>split]`.
/// Blank lines and `#` comments are skipped; a category field overrides the
/// file default.
#[derive(Debug, Clone, Copy, Default)]
pub struct LineAdapter;

impl CorpusAdapter for LineAdapter {
    fn name(&self) -> &str {
        "rxn"
    }

    fn extensions(&self) -> &[&'static str] {
        &["rxn", "txt"]
    }

    fn parse(&self, source: &str, text: &str, defaults: FileDefaults) -> Vec<Result<CorpusRecord, LoadFailure>> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            let (id, body, split) = match fields.as_slice() {
                [body] => (None, *body, None),
                [id, body] => (Some(*id), *body, None),
                [id, body, split] => (Some(*id), *body, Some(*split)),
                _ => {
                    out.push(Err(LoadFailure {
                        source: source.into(),
                        line,
                        message: format!("expected at most 3 tab-separated fields, found {}", fields.len()),
                    }));
                    continue;
                }
            };
            let split = match split.map(parse_split).transpose() {
                Ok(s) => s.unwrap_or(defaults.split),
                Err(message) => {
                    out.push(Err(LoadFailure { source: source.into(), line, message }));
                    continue;
                }
            };
            let body = if body.split('|').count() == 2 { format!("{body}|{}", defaults.category) } else { body.into() };
            out.push(build(source, line, id, &body, split, raw));
        }
        out
    }
}

/// Header-driven CSV export: `reaction` (alias `smirks`, `rxn`) and `arrows`
/// (alias `arrow_code`) are required; `id`, `category` and `split` are
/// optional.
#[derive(Debug, Clone, Copy, Default)]
pub struct CsvAdapter;

const REACTION_COLUMNS: [&str; 3] = ["reaction", "smirks", "rxn"];
const ARROW_COLUMNS: [&str; 2] = ["arrows", "arrow_code"];

impl CorpusAdapter for CsvAdapter {
    fn name(&self) -> &str {
        "csv"
    }

    fn extensions(&self) -> &[&'static str] {
        &["csv"]
    }

    fn parse(&self, source: &str, text: &str, defaults: FileDefaults) -> Vec<Result<CorpusRecord, LoadFailure>> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
        let headers: Vec<String> = match reader.headers() {
            Ok(h) => h.iter().map(|s| s.trim().to_ascii_lowercase()).collect(),
            Err(e) => return vec![Err(LoadFailure { source: source.into(), line: 1, message: e.to_string() })],
        };
        if headers.iter().all(|h| h.is_empty()) {
            return Vec::new();
        }
        let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.as_str()));
        let (Some(rc), Some(ac)) = (col(&REACTION_COLUMNS), col(&ARROW_COLUMNS)) else {
            return vec![Err(LoadFailure {
                source: source.into(),
                line: 1,
                message: "header needs a reaction column and an arrows column".into(),
            })];
        };
        let (idc, cc, sc) = (col(&["id"]), col(&["category"]), col(&["split"]));

        let mut out = Vec::new();
        for row in reader.records() {
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    out.push(Err(LoadFailure { source: source.into(), line, message: e.to_string() }));
                    continue;
                }
            };
            let line = row.position().map_or(0, |p| p.line() as usize);
            let get = |c: Option<usize>| c.and_then(|c| row.get(c)).map(str::trim).filter(|s| !s.is_empty());
            let category = get(cc).map(str::to_string).unwrap_or_else(|| defaults.category.to_string());
            let split = match get(sc).map(parse_split).transpose() {
                Ok(s) => s.unwrap_or(defaults.split),
                Err(message) => {
                    out.push(Err(LoadFailure { source: source.into(), line, message }));
                    continue;
                }
            };
            let body = format!("{}|{}|{}", get(Some(rc)).unwrap_or(""), get(Some(ac)).unwrap_or(""), category);
            let raw = row.iter().collect::<Vec<_>>().join(",");
            out.push(build(source, line, get(idc), &body, split, &raw));
        }
        out
    }
}

#[derive(Clone)]
pub struct AdapterRegistry {
    adapters: BTreeMap<String, Arc<dyn CorpusAdapter>>,
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        let mut r = AdapterRegistry { adapters: BTreeMap::new() };
        r.register(Arc::new(LineAdapter));
        r.register(Arc::new(CsvAdapter));
        r
    }
}

impl AdapterRegistry {
    pub fn register(&mut self, a: Arc<dyn CorpusAdapter>) {
        self.adapters.insert(a.name().to_string(), a);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CorpusAdapter>, super::DatasetError> {
        self.adapters.get(name).cloned().ok_or_else(|| super::DatasetError::UnknownAdapter(name.into()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.adapters.keys().map(String::as_str).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOMOLYSIS: &str = "[Cl:1][Cl:2]>>[Cl:1].[Cl:2]|1-2>1;1-2>2";

    #[test]
    fn line_adapter_reports_bad_lines() {
        let text = format!("# header\n{HOMOLYSIS}\n\nnot a reaction\nr7\t{HOMOLYSIS}|specific\ttest\n");
        let d = FileDefaults::from_file_name("core_train.rxn");
        let out = LineAdapter.parse("f.rxn", &text, d);
        assert_eq!(out.len(), 3);
        let ok: Vec<_> = out.iter().filter_map(|r| r.as_ref().ok()).collect();
        assert_eq!(ok[0].id, "f.rxn:2");
        assert_eq!(ok[1].id, "r7");
        assert_eq!(ok[1].record.category, Category::Specific);
        assert_eq!(ok[1].record.split, Split::Test);
        let bad = out[1].as_ref().unwrap_err();
        assert_eq!(bad.line, 4);
    }

    #[test]
    fn csv_adapter_columns() {
        let text = "id,smirks,arrow_code,split\na,[Cl:1][Cl:2]>>[Cl:1].[Cl:2],1-2>1;1-2>2,test\nb,CC(>>CC,1>1,train\n";
        let out = CsvAdapter.parse("x.csv", text, FileDefaults::from_file_name("x.csv"));
        assert_eq!(out.len(), 2);
        let a = out[0].as_ref().unwrap();
        assert_eq!(a.id, "a");
        assert_eq!(a.record.split, Split::Test);
        assert_eq!(out[1].as_ref().unwrap_err().line, 3);
    }

    #[test]
    fn csv_without_required_columns() {
        let out = CsvAdapter.parse("x.csv", "id,foo\n1,2\n", FileDefaults::from_file_name("x.csv"));
        assert_eq!(out.len(), 1);
        assert!(out[0].is_err());
    }

    #[test]
    fn registry_lookup() {
        let r = AdapterRegistry::default();
        assert_eq!(r.names(), vec!["csv", "rxn"]);
        assert!(r.get("rxn").is_ok());
        assert!(r.get("sdf").is_err());
    }
}
