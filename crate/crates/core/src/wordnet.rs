//! Reader for WordNet database (WNDB) flat files.
//!
//! Only what the lexical manipulations need: the `index.*` files are loaded
//! into a lemma table and `data.*` lines are decoded on demand (lazy) or all at
//! load time (eager). Lines are addressed by their byte offset, as in the
//! original C library.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WordnetError {
    #[error("missing WordNet file {0}")]
    MissingFile(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("invalid lemma key `{0}`")]
    InvalidKey(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl PartOfSpeech {
    pub const ALL: [PartOfSpeech; 4] = [
        PartOfSpeech::Noun,
        PartOfSpeech::Verb,
        PartOfSpeech::Adjective,
        PartOfSpeech::Adverb,
    ];

    fn file_suffix(self) -> &'static str {
        match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adj",
            PartOfSpeech::Adverb => "adv",
        }
    }

    /// Decodes a WNDB pos letter; satellites (`s`) live with adjectives.
    fn from_letter(letter: &str) -> Option<PartOfSpeech> {
        match letter {
            "n" => Some(PartOfSpeech::Noun),
            "v" => Some(PartOfSpeech::Verb),
            "a" | "s" => Some(PartOfSpeech::Adjective),
            "r" => Some(PartOfSpeech::Adverb),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adjective",
            PartOfSpeech::Adverb => "adverb",
        };
        f.write_str(name)
    }
}

impl FromStr for PartOfSpeech {
    type Err = WordnetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "n" | "noun" => Ok(PartOfSpeech::Noun),
            "v" | "verb" => Ok(PartOfSpeech::Verb),
            "a" | "adj" | "adjective" => Ok(PartOfSpeech::Adjective),
            "r" | "adv" | "adverb" => Ok(PartOfSpeech::Adverb),
            _ => Err(WordnetError::InvalidKey(s.to_string())),
        }
    }
}

/// A lemma in WordNet's spelling: lowercase, underscores for spaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LemmaKey {
    lemma: String,
    pos: PartOfSpeech,
}

impl LemmaKey {
    pub fn new(lemma: &str, pos: PartOfSpeech) -> Result<Self, WordnetError> {
        let lemma = lemma.trim().to_lowercase().replace([' ', '-'], "_");
        if lemma.is_empty() || has_sense_suffix(&lemma) {
            return Err(WordnetError::InvalidKey(lemma));
        }
        Ok(LemmaKey { lemma, pos })
    }

    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    pub fn pos(&self) -> PartOfSpeech {
        self.pos
    }
}

fn has_sense_suffix(lemma: &str) -> bool {
    let bytes = lemma.as_bytes();
    bytes.len() >= 3
        && bytes[bytes.len() - 1].is_ascii_digit()
        && bytes[bytes.len() - 2].is_ascii_digit()
        && matches!(bytes[bytes.len() - 3], b'-' | b'_')
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pointer {
    pub symbol: String,
    pub target: u64,
    pub target_pos: PartOfSpeech,
    /// 1-based word number in the source synset; 0 for semantic pointers.
    pub source_word: u16,
    /// 1-based word number in the target synset; 0 for semantic pointers.
    pub target_word: u16,
}

impl Pointer {
    pub fn is_antonym(&self) -> bool {
        self.symbol == "!"
    }

    pub fn is_hypernym(&self) -> bool {
        self.symbol == "@" || self.symbol == "@i"
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub offset: u64,
    pub pos: PartOfSpeech,
    pub satellite: bool,
    /// Lemmas as written in the file minus adjective markers like `(a)`.
    pub lemmas: Vec<String>,
    pub pointers: Vec<Pointer>,
}

impl Synset {
    fn lemma_position(&self, lemma: &str) -> Option<u16> {
        self.lemmas
            .iter()
            .position(|l| l.eq_ignore_ascii_case(lemma))
            .map(|i| i as u16 + 1)
    }
}

/// Whether data lines are decoded at load time or per query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    #[default]
    Lazy,
    Eager,
}

/// Which antonym pointers count for a lemma.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AntonymScope {
    /// Only pointers whose source word is the lemma itself.
    Lemma,
    /// Any antonym pointer leaving a synset that contains the lemma; every
    /// lemma of the target synset is an antonym.
    #[default]
    Synset,
}

enum SynsetStore {
    Raw(String),
    Parsed(HashMap<u64, Synset>),
}

/// An immutable, loaded WordNet database.
pub struct WordnetDb {
    root: PathBuf,
    index: [HashMap<String, Vec<u64>>; 4],
    data: [SynsetStore; 4],
}

impl fmt::Debug for WordnetDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WordnetDb")
            .field("root", &self.root)
            .field("lemmas", &self.index.iter().map(HashMap::len).collect::<Vec<_>>())
            .finish()
    }
}

/// Loads the database in `dir` lazily.
pub fn load_database(dir: impl AsRef<Path>) -> Result<WordnetDb, WordnetError> {
    WordnetDb::load(dir, LoadMode::Lazy)
}

fn read(path: &Path) -> Result<String, WordnetError> {
    if !path.is_file() {
        return Err(WordnetError::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| WordnetError::Io { path: path.to_path_buf(), source })
}

impl WordnetDb {
    pub fn load(dir: impl AsRef<Path>, mode: LoadMode) -> Result<Self, WordnetError> {
        let dir = dir.as_ref();
        let mut index: [HashMap<String, Vec<u64>>; 4] = Default::default();
        let mut data: Vec<SynsetStore> = Vec::with_capacity(4);
        for pos in PartOfSpeech::ALL {
            let name = format!("index.{}", pos.file_suffix());
            let text = read(&dir.join(&name))?;
            index[pos.index()] = parse_index(&name, &text)?;

            let name = format!("data.{}", pos.file_suffix());
            let text = read(&dir.join(&name))?;
            let store = match mode {
                LoadMode::Lazy => SynsetStore::Raw(text),
                LoadMode::Eager => SynsetStore::Parsed(parse_all_data(&name, &text)?),
            };
            data.push(store);
        }
        let data: [SynsetStore; 4] = data.try_into().unwrap_or_else(|_| unreachable!());
        Ok(WordnetDb { root: dir.to_path_buf(), index, data })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Number of lemmas in the index for `pos`.
    pub fn lemma_count(&self, pos: PartOfSpeech) -> usize {
        self.index[pos.index()].len()
    }

    pub fn contains(&self, key: &LemmaKey) -> bool {
        self.index[key.pos.index()].contains_key(&key.lemma)
    }

    /// Synset offsets for a lemma in sense order.
    pub fn offsets(&self, key: &LemmaKey) -> &[u64] {
        self.index[key.pos.index()].get(&key.lemma).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn synset(&self, pos: PartOfSpeech, offset: u64) -> Option<Synset> {
        match &self.data[pos.index()] {
            SynsetStore::Parsed(map) => map.get(&offset).cloned(),
            SynsetStore::Raw(text) => {
                let start = usize::try_from(offset).ok()?;
                let rest = text.get(start..)?;
                let line = rest.split('\n').next()?;
                match parse_data_line(line) {
                    Ok(s) if s.offset == offset => Some(s),
                    Ok(_) | Err(_) => {
                        tracing::warn!(%pos, offset, "unreadable synset line");
                        None
                    }
                }
            }
        }
    }

    pub fn synsets(&self, key: &LemmaKey) -> Vec<Synset> {
        self.offsets(key).iter().filter_map(|&o| self.synset(key.pos, o)).collect()
    }

    /// Antonyms with the default [`AntonymScope::Synset`].
    pub fn antonyms(&self, key: &LemmaKey) -> Vec<String> {
        self.antonyms_with(key, AntonymScope::default())
    }

    pub fn antonyms_with(&self, key: &LemmaKey, scope: AntonymScope) -> Vec<String> {
        let mut out = Vec::new();
        for synset in self.synsets(key) {
            let own = synset.lemma_position(&key.lemma);
            for ptr in synset.pointers.iter().filter(|p| p.is_antonym()) {
                let Some(target) = self.synset(ptr.target_pos, ptr.target) else {
                    continue;
                };
                match scope {
                    AntonymScope::Lemma => {
                        let from_us = ptr.source_word == 0 || Some(ptr.source_word) == own;
                        if !from_us {
                            continue;
                        }
                        if ptr.target_word == 0 {
                            out.extend(target.lemmas.iter().cloned());
                        } else if let Some(l) = target.lemmas.get(usize::from(ptr.target_word) - 1) {
                            out.push(l.clone());
                        }
                    }
                    AntonymScope::Synset => out.extend(target.lemmas.iter().cloned()),
                }
            }
        }
        finish(out, &key.lemma)
    }

    /// Lemmas of the direct hypernym synsets (`@` and `@i`) of every sense.
    pub fn hypernyms(&self, key: &LemmaKey) -> Vec<String> {
        self.hypernyms_to_depth(key, 1)
    }

    /// Lemmas of all hypernym synsets up to `depth` levels above each sense.
    pub fn hypernyms_to_depth(&self, key: &LemmaKey, depth: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen: HashSet<(PartOfSpeech, u64)> = HashSet::new();
        let mut frontier: Vec<Synset> = self.synsets(key);
        for _ in 0..depth {
            let mut next = Vec::new();
            for synset in &frontier {
                for ptr in synset.pointers.iter().filter(|p| p.is_hypernym()) {
                    if !seen.insert((ptr.target_pos, ptr.target)) {
                        continue;
                    }
                    if let Some(parent) = self.synset(ptr.target_pos, ptr.target) {
                        out.extend(parent.lemmas.iter().cloned());
                        next.push(parent);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        finish(out, &key.lemma)
    }

    /// Every lemma on any hypernym path up to the top of the hierarchy.
    pub fn hypernym_closure(&self, key: &LemmaKey) -> Vec<String> {
        self.hypernyms_to_depth(key, usize::MAX)
    }
}

/// Lowercases, drops the query lemma, deduplicates keeping first occurrence.
fn finish(lemmas: Vec<String>, query: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    lemmas
        .into_iter()
        .map(|l| l.to_lowercase())
        .filter(|l| l != query)
        .filter(|l| seen.insert(l.clone()))
        .collect()
}

fn malformed(file: &str, line: usize, message: impl Into<String>) -> WordnetError {
    WordnetError::Malformed { file: file.to_string(), line, message: message.into() }
}

fn is_header(line: &str) -> bool {
    line.starts_with("  ") || line.trim().is_empty()
}

/// `lemma pos synset_cnt p_cnt [ptr_symbol...] sense_cnt tagsense_cnt synset_offset...`
fn parse_index(file: &str, text: &str) -> Result<HashMap<String, Vec<u64>>, WordnetError> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if is_header(line) {
            continue;
        }
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 6 {
            return Err(malformed(file, line_no, "too few fields"));
        }
        let count = |s: &str, what: &str| -> Result<usize, WordnetError> {
            s.parse().map_err(|_| malformed(file, line_no, format!("bad {what} `{s}`")))
        };
        let synset_cnt = count(fields[2], "synset_cnt")?;
        let p_cnt = count(fields[3], "p_cnt")?;
        let offsets_at = 4 + p_cnt + 2;
        if fields.len() != offsets_at + synset_cnt {
            return Err(malformed(file, line_no, "field count does not match synset_cnt/p_cnt"));
        }
        let offsets = fields[offsets_at..]
            .iter()
            .map(|f| f.parse::<u64>().map_err(|_| malformed(file, line_no, format!("bad offset `{f}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        map.insert(fields[0].to_string(), offsets);
    }
    Ok(map)
}

fn parse_all_data(file: &str, text: &str) -> Result<HashMap<u64, Synset>, WordnetError> {
    let mut map = HashMap::new();
    let mut byte = 0usize;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let line = raw.trim_end_matches(['\n', '\r']);
        if !is_header(line) {
            let synset = parse_data_line(line).map_err(|m| malformed(file, i + 1, m))?;
            if synset.offset != byte as u64 {
                return Err(malformed(
                    file,
                    i + 1,
                    format!("synset offset {} does not match byte position {byte}", synset.offset),
                ));
            }
            map.insert(synset.offset, synset);
        }
        byte += raw.len();
    }
    Ok(map)
}

/// `offset lex_filenum ss_type w_cnt word lex_id [...] p_cnt [ptr...] [frames] | gloss`
fn parse_data_line(line: &str) -> Result<Synset, String> {
    let body = line.split(" | ").next().unwrap_or(line);
    let fields: Vec<&str> = body.split_whitespace().collect();
    let get = |i: usize| fields.get(i).copied().ok_or_else(|| "truncated line".to_string());
    let offset: u64 = get(0)?.parse().map_err(|_| "bad synset offset".to_string())?;
    let ss_type = get(2)?;
    let pos = PartOfSpeech::from_letter(ss_type).ok_or_else(|| format!("bad ss_type `{ss_type}`"))?;
    let w_cnt = usize::from_str_radix(get(3)?, 16).map_err(|_| "bad w_cnt".to_string())?;
    if w_cnt == 0 {
        return Err("synset without lemmas".to_string());
    }
    let mut lemmas = Vec::with_capacity(w_cnt);
    for k in 0..w_cnt {
        let word = get(4 + 2 * k)?;
        let word = match word.find('(') {
            Some(p) if word.ends_with(')') => &word[..p],
            _ => word,
        };
        lemmas.push(word.to_string());
    }
    let mut at = 4 + 2 * w_cnt;
    let p_cnt: usize = get(at)?.parse().map_err(|_| "bad p_cnt".to_string())?;
    at += 1;
    let mut pointers = Vec::with_capacity(p_cnt);
    for _ in 0..p_cnt {
        let symbol = get(at)?.to_string();
        let target: u64 = get(at + 1)?.parse().map_err(|_| "bad pointer offset".to_string())?;
        let target_pos = PartOfSpeech::from_letter(get(at + 2)?).ok_or_else(|| "bad pointer pos".to_string())?;
        let st = get(at + 3)?;
        if st.len() != 4 {
            return Err(format!("bad source/target field `{st}`"));
        }
        let source_word = u16::from_str_radix(&st[..2], 16).map_err(|_| "bad source word".to_string())?;
        let target_word = u16::from_str_radix(&st[2..], 16).map_err(|_| "bad target word".to_string())?;
        pointers.push(Pointer { symbol, target, target_pos, source_word, target_word });
        at += 4;
    }
    Ok(Synset { offset, pos, satellite: ss_type == "s", lemmas, pointers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_key_normalizes() {
        let key = LemmaKey::new("Ice Cream", PartOfSpeech::Noun).unwrap();
        assert_eq!(key.lemma(), "ice_cream");
        assert_eq!(LemmaKey::new("well-being", PartOfSpeech::Noun).unwrap().lemma(), "well_being");
        assert!(LemmaKey::new("  ", PartOfSpeech::Noun).is_err());
        assert!(LemmaKey::new("go-01", PartOfSpeech::Verb).is_err());
    }

    #[test]
    fn data_line_decoding() {
        let line = "01385012 00 a 02 large 0 big 0 003 ! 01394303 a 0101 ! 01394303 a 0202 & 01385500 a 0000 | above average";
        let s = parse_data_line(line).unwrap();
        assert_eq!(s.offset, 1385012);
        assert_eq!(s.lemmas, vec!["large", "big"]);
        assert_eq!(s.pointers.len(), 3);
        assert_eq!(s.pointers[1].source_word, 2);
        assert_eq!(s.pointers[1].target_word, 2);
        assert!(parse_data_line("01385012 00 q 01 x 0 000").is_err());
        assert!(parse_data_line("01385012 00 a 02 large 0").is_err());
    }

    #[test]
    fn adjective_markers_are_stripped() {
        let s = parse_data_line("00000010 00 a 01 much(a) 0 000 | x").unwrap();
        assert_eq!(s.lemmas, vec!["much"]);
    }

    #[test]
    fn index_field_count_checked() {
        let err = parse_index("index.noun", "  header\nsnake n 2 1 @ 2 1 01729333\n").unwrap_err();
        assert!(err.to_string().starts_with("index.noun:2:"), "{err}");
        let ok = parse_index("index.noun", "snake n 1 1 @ 1 1 01729333\n").unwrap();
        assert_eq!(ok["snake"], vec![1729333]);
    }

    #[test]
    fn empty_directory_is_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        match load_database(dir.path()).unwrap_err() {
            WordnetError::MissingFile(p) => assert!(p.ends_with("index.noun")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn offsets_must_match_byte_positions() {
        let text = "  1 header\n00000000 00 n 01 x 0 000 | y\n";
        let err = parse_all_data("data.noun", text).unwrap_err();
        assert!(err.to_string().contains("does not match byte position 11"), "{err}");
    }
}
