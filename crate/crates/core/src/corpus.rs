//! Dialogue corpora, exchange extraction and the aggregated exchange table.
//!
//! The interchange format is UTF-8 JSON Lines, one utterance per line:
//!
//! ```text
//! {"dialogue_id": "case-17", "speaker_id": "roberts", "role": "judge", "turn_index": 0, "text": "..."}
//! ```
//!
//! `dialogue_id`, `speaker_id`, `turn_index` (non-negative integer) and `text`
//! are required, `role` is optional and other keys are ignored. Blank lines
//! are skipped.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markers::MarkerDictionary;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub dialogue_id: String,
    pub speaker_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    pub turn_index: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    /// Sorted by `turn_index`.
    pub utterances: Vec<Utterance>,
}

/// Dialogues in order of first appearance in the input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub dialogues: Vec<Dialogue>,
}

impl Corpus {
    /// Read a JSON Lines stream.
    pub fn parse<R: BufRead>(input: R) -> Result<Self> {
        let mut order: Vec<String> = Vec::new();
        let mut grouped: HashMap<String, Vec<Utterance>> = HashMap::new();
        for (i, line) in input.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let u: Utterance = serde_json::from_str(&line)
                .map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
            let slot = grouped.entry(u.dialogue_id.clone()).or_insert_with(|| {
                order.push(u.dialogue_id.clone());
                Vec::new()
            });
            slot.push(u);
        }
        let mut dialogues = Vec::with_capacity(order.len());
        for id in order {
            let mut utterances = grouped.remove(&id).unwrap_or_default();
            utterances.sort_by_key(|u| u.turn_index);
            if let Some(w) = utterances.windows(2).find(|w| w[0].turn_index == w[1].turn_index) {
                return Err(Error::DuplicateTurn { dialogue: id, turn: w[0].turn_index });
            }
            dialogues.push(Dialogue { id, utterances });
        }
        Ok(Corpus { dialogues })
    }

    pub fn parse_str(input: &str) -> Result<Self> {
        Self::parse(input.as_bytes())
    }

    /// Serialize in the interchange format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for u in self.utterances() {
            out.push_str(&serde_json::to_string(u).expect("utterance serializes"));
            out.push('\n');
        }
        out
    }

    pub fn utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.dialogues.iter().flat_map(|d| d.utterances.iter())
    }

    pub fn utterance_count(&self) -> usize {
        self.dialogues.iter().map(|d| d.utterances.len()).sum()
    }

    /// Collapse runs of consecutive turns by one speaker into a single
    /// utterance. The merged utterance keeps the first turn's index and role,
    /// and joins texts with a space.
    pub fn merge_consecutive_turns(&self) -> Corpus {
        let dialogues = self
            .dialogues
            .iter()
            .map(|d| {
                let mut merged: Vec<Utterance> = Vec::with_capacity(d.utterances.len());
                for u in &d.utterances {
                    match merged.last_mut() {
                        Some(prev) if prev.speaker_id == u.speaker_id => {
                            if !u.text.is_empty() {
                                if !prev.text.is_empty() {
                                    prev.text.push(' ');
                                }
                                prev.text.push_str(&u.text);
                            }
                        }
                        _ => merged.push(u.clone()),
                    }
                }
                Dialogue { id: d.id.clone(), utterances: merged }
            })
            .collect();
        Corpus { dialogues }
    }

    /// Keep dialogues in which every speaker originates at least
    /// `min_exchanges` exchanges. Originating means speaking at some turn
    /// that is immediately followed by a different speaker.
    pub fn filter_min_exchanges(&self, min_exchanges: usize) -> Corpus {
        let dialogues = self
            .dialogues
            .iter()
            .filter(|d| {
                let mut originated: HashMap<&str, usize> = HashMap::new();
                for u in &d.utterances {
                    originated.entry(u.speaker_id.as_str()).or_insert(0);
                }
                for w in d.utterances.windows(2) {
                    if w[0].speaker_id != w[1].speaker_id {
                        *originated.get_mut(w[0].speaker_id.as_str()).unwrap() += 1;
                    }
                }
                originated.values().all(|&n| n >= min_exchanges)
            })
            .cloned()
            .collect();
        Corpus { dialogues }
    }
}

/// Predicate choosing the utterances on one side of an exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Role(String),
    Speakers(BTreeSet<String>),
}

impl Selector {
    pub fn matches(&self, u: &Utterance) -> bool {
        match self {
            Selector::Role(r) => u.role.as_deref() == Some(r.as_str()),
            Selector::Speakers(s) => s.contains(&u.speaker_id),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Selector::Role(r) => r.clone(),
            Selector::Speakers(s) => s.iter().cloned().collect::<Vec<_>>().join("+"),
        }
    }
}

/// An adjacent ordered pair of utterances by different speakers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exchange<'a> {
    pub dialogue_id: &'a str,
    pub originator: &'a Utterance,
    pub respondent: &'a Utterance,
}

/// Every adjacent cross-speaker pair whose first utterance matches
/// `originator` and second matches `respondent`, over all dialogues.
///
/// Adjacency is by position in the turn-sorted dialogue, so gaps in
/// `turn_index` do not break a pair. Any utterance matching both selectors
/// makes the request ambiguous and is rejected.
pub fn extract_exchanges<'a>(
    corpus: &'a Corpus,
    originator: &Selector,
    respondent: &Selector,
) -> Result<Vec<Exchange<'a>>> {
    if originator == respondent {
        return Err(Error::Config(format!(
            "originator and respondent filters are identical (`{}`)",
            originator.label()
        )));
    }
    if let Some(u) = corpus.utterances().find(|u| originator.matches(u) && respondent.matches(u)) {
        return Err(Error::Config(format!(
            "speaker `{}` in dialogue `{}` matches both the originator and respondent filters",
            u.speaker_id, u.dialogue_id
        )));
    }
    let mut out = Vec::new();
    for d in &corpus.dialogues {
        for w in d.utterances.windows(2) {
            let (o, r) = (&w[0], &w[1]);
            if o.speaker_id != r.speaker_id && originator.matches(o) && respondent.matches(r) {
                out.push(Exchange { dialogue_id: &d.id, originator: o, respondent: r });
            }
        }
    }
    Ok(out)
}

/// Columnar aggregated exchange sample: one row per exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExchangeTable {
    markers: Vec<String>,
    dialogue_names: Vec<String>,
    speaker_names: Vec<String>,
    #[serde(skip)]
    dialogue_ix: HashMap<String, u32>,
    #[serde(skip)]
    speaker_ix: HashMap<String, u32>,
    pub dialogue: Vec<u32>,
    pub originator: Vec<u32>,
    pub respondent: Vec<u32>,
    pub len_o: Vec<u32>,
    pub len_r: Vec<u32>,
    /// `bits_o[m][row]`.
    pub bits_o: Vec<Vec<u8>>,
    pub bits_r: Vec<Vec<u8>>,
}

/// One row in owned form, for building tables by hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeRow {
    pub dialogue: String,
    pub originator: String,
    pub respondent: String,
    pub len_o: u32,
    pub len_r: u32,
    pub bits_o: Vec<u8>,
    pub bits_r: Vec<u8>,
}

impl ExchangeTable {
    pub fn new<S: AsRef<str>>(markers: &[S]) -> Self {
        let m = markers.len();
        ExchangeTable {
            markers: markers.iter().map(|s| s.as_ref().to_string()).collect(),
            dialogue_names: Vec::new(),
            speaker_names: Vec::new(),
            dialogue_ix: HashMap::new(),
            speaker_ix: HashMap::new(),
            dialogue: Vec::new(),
            originator: Vec::new(),
            respondent: Vec::new(),
            len_o: Vec::new(),
            len_r: Vec::new(),
            bits_o: vec![Vec::new(); m],
            bits_r: vec![Vec::new(); m],
        }
    }

    /// Build the table for `exchanges`, preserving their order.
    pub fn build(exchanges: &[Exchange<'_>], dict: &MarkerDictionary) -> Self {
        let mut table = ExchangeTable::new(dict.categories());
        for e in exchanges {
            let fo = dict.extract_features(&e.originator.text);
            let fr = dict.extract_features(&e.respondent.text);
            table.push_parts(
                e.dialogue_id,
                &e.originator.speaker_id,
                &e.respondent.speaker_id,
                fo.length,
                fr.length,
                &fo.bits,
                &fr.bits,
            );
        }
        table
    }

    pub fn push(&mut self, row: &ExchangeRow) {
        self.push_parts(
            &row.dialogue,
            &row.originator,
            &row.respondent,
            row.len_o,
            row.len_r,
            &row.bits_o,
            &row.bits_r,
        );
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push_parts(
        &mut self,
        dialogue: &str,
        originator: &str,
        respondent: &str,
        len_o: u32,
        len_r: u32,
        bits_o: &[u8],
        bits_r: &[u8],
    ) {
        assert_eq!(bits_o.len(), self.markers.len(), "originator bit count");
        assert_eq!(bits_r.len(), self.markers.len(), "respondent bit count");
        let d = intern(&mut self.dialogue_ix, &mut self.dialogue_names, dialogue);
        let o = intern(&mut self.speaker_ix, &mut self.speaker_names, originator);
        let r = intern(&mut self.speaker_ix, &mut self.speaker_names, respondent);
        self.dialogue.push(d);
        self.originator.push(o);
        self.respondent.push(r);
        self.len_o.push(len_o);
        self.len_r.push(len_r);
        for m in 0..self.markers.len() {
            debug_assert!(bits_o[m] <= 1 && bits_r[m] <= 1);
            self.bits_o[m].push(bits_o[m]);
            self.bits_r[m].push(bits_r[m]);
        }
    }

    pub fn len(&self) -> usize {
        self.dialogue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogue.is_empty()
    }

    pub fn markers(&self) -> &[String] {
        &self.markers
    }

    pub fn marker_index(&self, name: &str) -> Option<usize> {
        self.markers.iter().position(|m| m == name)
    }

    pub fn dialogue_names(&self) -> &[String] {
        &self.dialogue_names
    }

    pub fn dialogue_count(&self) -> usize {
        self.dialogue_names.len()
    }

    pub fn row(&self, i: usize) -> ExchangeRow {
        ExchangeRow {
            dialogue: self.dialogue_names[self.dialogue[i] as usize].clone(),
            originator: self.speaker_names[self.originator[i] as usize].clone(),
            respondent: self.speaker_names[self.respondent[i] as usize].clone(),
            len_o: self.len_o[i],
            len_r: self.len_r[i],
            bits_o: self.bits_o.iter().map(|c| c[i]).collect(),
            bits_r: self.bits_r.iter().map(|c| c[i]).collect(),
        }
    }

    /// Row indices grouped by (originator, respondent, dialogue), groups in
    /// order of first appearance and rows in table order.
    pub fn pair_dialogue_groups(&self) -> Vec<Vec<usize>> {
        let mut index: HashMap<(u32, u32, u32), usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.len() {
            let key = (self.originator[i], self.respondent[i], self.dialogue[i]);
            let g = *index.entry(key).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
        }
        groups
    }

    /// Copy in which row `i` carries the respondent tuple (length and every
    /// marker bit) of row `source[i]`. Originator columns, dialogue ids and
    /// speaker ids are untouched.
    pub fn with_respondents_from(&self, source: &[usize]) -> ExchangeTable {
        assert_eq!(source.len(), self.len());
        let mut out = self.clone();
        out.len_r = source.iter().map(|&j| self.len_r[j]).collect();
        for (m, col) in self.bits_r.iter().enumerate() {
            out.bits_r[m] = source.iter().map(|&j| col[j]).collect();
        }
        out
    }
}

fn intern(ix: &mut HashMap<String, u32>, names: &mut Vec<String>, key: &str) -> u32 {
    if let Some(&i) = ix.get(key) {
        return i;
    }
    let i = names.len() as u32;
    names.push(key.to_string());
    ix.insert(key.to_string(), i);
    i
}
