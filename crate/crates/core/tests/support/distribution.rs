#![allow(dead_code)]

//! The shipped tagged corpus and sense lexicon with a hand count of the
//! distribution matrix they produce. Also run by the acceptance suite.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use num_rational::Ratio;
use sensecrowd_core::corpus::{
    distribution_matrix, extract_pairs, parse_tagged_corpus, OrderFilter, TaggedSentence, Tagset,
};
use sensecrowd_core::lexicon_file::{read_records, sense_lexicon};
use sensecrowd_core::{SenseInventory, SenseLexicon};

/// Reads the fixtures from core's `fixtures` directory.
pub fn load_fixture(dir: &Path) -> (Vec<TaggedSentence>, SenseLexicon) {
    let tagset = Tagset::load(dir.join("tagset.toml")).unwrap();
    let corpus = BufReader::new(File::open(dir.join("tagged_corpus.txt")).unwrap());
    let sentences = parse_tagged_corpus(corpus, &tagset, true).unwrap();
    let records = read_records(BufReader::new(File::open(dir.join("sense_lexicon.jsonl")).unwrap())).unwrap();
    (sentences, sense_lexicon(&records))
}

// Hand count of fixtures/tagged_corpus.txt against fixtures/sense_lexicon.jsonl.
// Columns: ToKnow ToMove ToDo ToHave ToBe ToCut ToBound.
//
//   s1  cālā>anipiṃciṃdi         AV Measure/ToKnow
//   s2  nerugā>naḍicāḍu          AV Spatial/ToMove
//   s3  ninna>veḷḷāḍu            AV Temporal/ToMove
//   s4  vēgaṃgā>cēśāḍu           AV Force/ToDo
//   s5  emoṣanalgā>ālocistāḍu    AV Force/ToKnow
//   s6  ikkaḍa>unnāḍu            AV Spatial/ToBe
//   s7  māṭlāḍutāḍu>nerugā       VA Spatial/ToDo
//   s8  cālā>tinnāḍu             AV skipped (verb entry removed)
//   s9  koṭṭāḍu>vēgaṃgā          VA Force/ToCut
//   s10 mari>veḷḷāḍu             AV skipped (adverb not in lexicon)
//   s11 cālā>telusu              AV Measure/ToKnow
//   s12 ninna>unnāḍu             AV Temporal/ToBe
//       unnāḍu>ikkaḍa            VA Spatial/ToBe
//   s13 vēgaṃgā>naḍicāḍu         AV Force/ToMove
//   s14 (no verb)
//   s15 bahuśā>vastāḍu           AV skipped (adverb resolved Uncertain)
//   s16 ninna>cēśāḍu             AV Temporal/ToDo
pub const POOLED: [[u64; 7]; 4] = [
    [0, 1, 1, 0, 2, 0, 0],
    [0, 1, 1, 0, 1, 0, 0],
    [1, 1, 1, 0, 0, 1, 0],
    [2, 0, 0, 0, 0, 0, 0],
];
pub const AV_ONLY: [[u64; 7]; 4] = [
    [0, 1, 0, 0, 1, 0, 0],
    [0, 1, 1, 0, 1, 0, 0],
    [1, 1, 1, 0, 0, 0, 0],
    [2, 0, 0, 0, 0, 0, 0],
];
pub const VA_ONLY: [[u64; 7]; 4] = [
    [0, 0, 1, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0],
];

/// Rendered pooled table for the fixture.
pub const GOLDEN_TABLE: &str = "         |  ToKnow |  ToMove |    ToDo |  ToHave |    ToBe |   ToCut | ToBound |      n\n\
---------------------------------------------------------------------------------------
Spatial  |    0.0% |   25.0% |   25.0% |    0.0% |   50.0% |    0.0% |    0.0% |      4
Temporal |    0.0% |   33.3% |   33.3% |    0.0% |   33.3% |    0.0% |    0.0% |      3
Force    |   25.0% |   25.0% |   25.0% |    0.0% |    0.0% |   25.0% |    0.0% |      4
Measure  |  100.0% |    0.0% |    0.0% |    0.0% |    0.0% |    0.0% |    0.0% |      2
skipped (unannotated): 3
";

/// Compares the fixture matrices with the hand count, checks every non-empty
/// row sums to exactly 100 and the table shape and text.
pub fn check_fixture(dir: &Path) -> Result<(), String> {
    let (sentences, lex) = load_fixture(dir);
    let inv = SenseInventory::default();
    let pairs = extract_pairs(&sentences, 1);
    for (filter, expected, skipped, excluded) in [
        (OrderFilter::Pooled, POOLED, 3, 0),
        (OrderFilter::AdverbVerbOnly, AV_ONLY, 3, 3),
        (OrderFilter::VerbAdverbOnly, VA_ONLY, 0, 13),
    ] {
        let m = distribution_matrix(&pairs, &lex, &inv, filter).map_err(|e| e.to_string())?;
        if m.counts != expected.map(|r| r.to_vec()).to_vec() {
            return Err(format!("{filter:?}: counts {:?}", m.counts));
        }
        if (m.skipped, m.excluded) != (skipped, excluded) {
            return Err(format!("{filter:?}: skipped/excluded {}/{}", m.skipped, m.excluded));
        }
        for r in 0..4 {
            let sum: Ratio<u64> = (0..7).map(|c| m.percentage(r, c)).sum();
            let want = if m.is_row_empty(r) { 0 } else { 100 };
            if sum != Ratio::from_integer(want) {
                return Err(format!("{filter:?}: row {r} sums to {sum}"));
            }
        }
    }
    let table = distribution_matrix(&pairs, &lex, &inv, OrderFilter::Pooled)
        .map_err(|e| e.to_string())?
        .render_table();
    if table != GOLDEN_TABLE {
        return Err(format!("table differs:\n{table}"));
    }
    let lines: Vec<&str> = table.lines().collect();
    // 4 data rows, 7 percentage columns each, one decimal.
    for row in &lines[2..6] {
        let cells: Vec<&str> = row.split('|').map(str::trim).collect();
        if cells.len() != 9 {
            return Err(format!("row has {} cells: {row}", cells.len()));
        }
        for cell in &cells[1..8] {
            let digits = cell.trim_end_matches('%');
            if digits.split('.').nth(1).map(str::len) != Some(1) {
                return Err(format!("cell `{cell}` is not one-decimal"));
            }
        }
    }
    Ok(())
}
