use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CategoryRecord, CorpusError, CorpusStore, PageRecord};

pub const CORPUS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Meta { root: u64, version: u32 },
    Page(PageRecord),
    Category(CategoryRecord),
}

/// Parses the line-delimited JSON corpus format. The first non-blank line
/// must be the `meta` header.
pub fn parse_corpus<R: BufRead>(input: R) -> Result<CorpusStore, CorpusError> {
    let mut root = None;
    let mut pages = Vec::new();
    let mut categories = Vec::new();

    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: line_no, message: e.to_string() })?;
        match (record, root) {
            (Record::Meta { root: r, version }, None) => {
                if version != CORPUS_VERSION {
                    return Err(CorpusError::UnsupportedVersion(version));
                }
                root = Some(r);
            }
            (Record::Meta { .. }, Some(_)) => return Err(CorpusError::DuplicateHeader { line: line_no }),
            (_, None) => return Err(CorpusError::MissingHeader { line: line_no }),
            (Record::Page(p), Some(_)) => pages.push(p),
            (Record::Category(c), Some(_)) => categories.push(c),
        }
    }

    let root = root.ok_or(CorpusError::Empty)?;
    CorpusStore::new(root, pages, categories)
}

pub fn read_corpus(path: &Path) -> Result<CorpusStore, CorpusError> {
    parse_corpus(BufReader::new(File::open(path)?))
}

/// Canonical serialization: header, then categories, then pages, each in
/// id order.
pub fn write_corpus<W: Write>(store: &CorpusStore, mut out: W) -> io::Result<()> {
    let meta = Record::Meta { root: store.root(), version: CORPUS_VERSION };
    writeln!(out, "{}", serde_json::to_string(&meta)?)?;
    for c in store.categories() {
        writeln!(out, "{}", serde_json::to_string(&Record::Category(c.clone()))?)?;
    }
    for p in store.pages() {
        writeln!(out, "{}", serde_json::to_string(&Record::Page(p.clone()))?)?;
    }
    Ok(())
}

pub fn serialize_corpus(store: &CorpusStore) -> String {
    let mut buf = Vec::new();
    write_corpus(store, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{NodeKind, SyntheticConfig};
    use proptest::prelude::*;

    #[test]
    fn minimal_corpus() {
        let s = parse_corpus(
            "{\"kind\":\"meta\",\"root\":0,\"version\":1}\n{\"kind\":\"category\",\"id\":0,\"title\":\"Root\",\"parents\":[]}\n"
                .as_bytes(),
        )
        .unwrap();
        assert_eq!(s.pages().len(), 0);
        assert_eq!(s.categories().len(), 1);
    }

    #[test]
    fn unknown_category_is_named() {
        let input = concat!(
            "{\"kind\":\"meta\",\"root\":0,\"version\":1}\n",
            "{\"kind\":\"category\",\"id\":0,\"title\":\"Root\",\"parents\":[]}\n",
            "{\"kind\":\"page\",\"id\":3,\"title\":\"A\",\"text\":\"x\",\"categories\":[9],\"links\":[]}\n",
        );
        let err = parse_corpus(input.as_bytes()).unwrap_err();
        match err {
            CorpusError::DanglingReference { id, kind, .. } => {
                assert_eq!(id, 9);
                assert_eq!(kind, NodeKind::Category);
            }
            other => panic!("unexpected {other}"),
        }
        assert!(err_string(input).contains("9"));
    }

    fn err_string(input: &str) -> String {
        parse_corpus(input.as_bytes()).unwrap_err().to_string()
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "{\"kind\":\"meta\",\"root\":0,\"version\":1}\n\n{not json}\n";
        match parse_corpus(input.as_bytes()).unwrap_err() {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_must_come_first() {
        let input = "{\"kind\":\"category\",\"id\":0,\"title\":\"Root\",\"parents\":[]}\n";
        assert!(matches!(parse_corpus(input.as_bytes()), Err(CorpusError::MissingHeader { line: 1 })));
        assert!(matches!(parse_corpus("".as_bytes()), Err(CorpusError::Empty)));
        assert!(matches!(
            parse_corpus("{\"kind\":\"meta\",\"root\":0,\"version\":2}\n".as_bytes()),
            Err(CorpusError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn missing_root() {
        let input = "{\"kind\":\"meta\",\"root\":4,\"version\":1}\n";
        assert!(matches!(parse_corpus(input.as_bytes()), Err(CorpusError::MissingRoot(4))));
    }

    #[test]
    fn page_line_layout() {
        let wiki = SyntheticConfig::new(1, 2, 1, 5, 1).generate();
        let text = serialize_corpus(&wiki.store);
        let first = text.lines().next().unwrap();
        assert_eq!(first, "{\"kind\":\"meta\",\"root\":0,\"version\":1}");
        let page_line = text.lines().find(|l| l.contains("\"page\"")).unwrap();
        assert!(page_line.starts_with("{\"kind\":\"page\",\"id\":"));
        let keys = ["\"title\"", "\"text\"", "\"categories\"", "\"links\""];
        let pos: Vec<usize> = keys.iter().map(|k| page_line.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn parse_serialize_round_trip(seed in 0u64..1000, topics in 1usize..4, pages in 1usize..6, depth in 1usize..4) {
            let wiki = SyntheticConfig::new(seed, topics, pages, 6, depth).generate();
            let text = serialize_corpus(&wiki.store);
            let parsed = parse_corpus(text.as_bytes()).unwrap();
            prop_assert_eq!(&parsed, &wiki.store);
            prop_assert_eq!(serialize_corpus(&parsed), text);
        }
    }
}
