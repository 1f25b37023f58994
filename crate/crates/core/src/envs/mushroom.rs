//! The UCI mushroom task: eat or decline a randomly drawn mushroom.
//!
//! Eating pays 1 for an edible mushroom and 0 for a poisonous one; declining
//! pays 1 with a fixed probability regardless of the mushroom.

use std::io::{BufRead, BufReader, Read};
use std::sync::Arc;

use rand::Rng;

use super::{bernoulli, EnvError, EnvStep};

/// Categorical attributes per row in `agaricus-lepiota.data`.
pub const MUSHROOM_FEATURES: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MushroomRecord {
    pub edible: bool,
    /// One single-character category code per attribute.
    pub features: Vec<u8>,
}

/// One-hot encoded rows with per-attribute vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    /// Sorted category codes seen for each attribute; `?` is an ordinary code.
    vocab: Vec<Vec<u8>>,
    /// Column offset of each attribute's block.
    offsets: Vec<usize>,
    dim: usize,
    /// Row-major `rows × dim` one-hot matrix.
    contexts: Vec<f64>,
    edible: Vec<bool>,
}

impl EncodedDataset {
    pub fn rows(&self) -> usize {
        self.edible.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.edible.is_empty()
    }

    pub fn context(&self, row: usize) -> &[f64] {
        &self.contexts[row * self.dim..(row + 1) * self.dim]
    }

    pub fn is_edible(&self, row: usize) -> bool {
        self.edible[row]
    }

    pub fn edible_count(&self) -> usize {
        self.edible.iter().filter(|e| **e).count()
    }

    pub fn vocabulary(&self, attribute: usize) -> &[u8] {
        &self.vocab[attribute]
    }

    /// Recovers the category codes of a row from its one-hot vector.
    pub fn decode(&self, row: usize) -> Vec<u8> {
        let ctx = self.context(row);
        self.vocab
            .iter()
            .zip(&self.offsets)
            .map(|(codes, &off)| {
                let hot = (0..codes.len())
                    .find(|&k| ctx[off + k] == 1.0)
                    .expect("every attribute has one hot bit");
                codes[hot]
            })
            .collect()
    }
}

/// Parses the 23-field UCI mushroom format and one-hot encodes it.
pub fn load_mushroom_dataset<R: Read>(source: R) -> Result<EncodedDataset, EnvError> {
    load_categorical_dataset(source, MUSHROOM_FEATURES)
}

/// Parses lines of `class,attr1,...,attrN` single-character fields, where the
/// class is `e` (edible) or `p` (poisonous). Columns are ordered by attribute
/// and then by category code.
pub fn load_categorical_dataset<R: Read>(
    source: R,
    attributes: usize,
) -> Result<EncodedDataset, EnvError> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_record(line, i + 1, attributes)?);
    }
    if records.is_empty() {
        return Err(EnvError::EmptyDataset);
    }

    let mut vocab = vec![Vec::<u8>::new(); attributes];
    for rec in &records {
        for (codes, &c) in vocab.iter_mut().zip(&rec.features) {
            if let Err(pos) = codes.binary_search(&c) {
                codes.insert(pos, c);
            }
        }
    }
    let mut offsets = Vec::with_capacity(attributes);
    let mut dim = 0;
    for codes in &vocab {
        offsets.push(dim);
        dim += codes.len();
    }

    let mut contexts = vec![0.0; records.len() * dim];
    for (r, rec) in records.iter().enumerate() {
        for (a, &c) in rec.features.iter().enumerate() {
            let k = vocab[a].binary_search(&c).expect("code is in vocabulary");
            contexts[r * dim + offsets[a] + k] = 1.0;
        }
    }
    Ok(EncodedDataset {
        vocab,
        offsets,
        dim,
        contexts,
        edible: records.iter().map(|r| r.edible).collect(),
    })
}

fn parse_record(line: &str, number: usize, attributes: usize) -> Result<MushroomRecord, EnvError> {
    let err = |message: String| EnvError::Parse {
        line: number,
        message,
    };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != attributes + 1 {
        return Err(err(format!(
            "expected {} fields, found {}",
            attributes + 1,
            fields.len()
        )));
    }
    let mut codes = Vec::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        let f = f.trim();
        match f.as_bytes() {
            [c] => codes.push(*c),
            _ => return Err(err(format!("field {} is not a single character: {f:?}", i + 1))),
        }
    }
    let edible = match codes[0] {
        b'e' => true,
        b'p' => false,
        other => return Err(err(format!("unknown class code {:?}", other as char))),
    };
    Ok(MushroomRecord {
        edible,
        features: codes.split_off(1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MushroomConfig {
    /// Probability that declining pays out.
    pub decline_reward: f64,
}

impl Default for MushroomConfig {
    fn default() -> Self {
        Self {
            decline_reward: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MushroomEnv {
    data: Arc<EncodedDataset>,
    cfg: MushroomConfig,
}

impl MushroomEnv {
    pub fn new(data: Arc<EncodedDataset>, cfg: MushroomConfig) -> Result<Self, EnvError> {
        if data.is_empty() {
            return Err(EnvError::EmptyDataset);
        }
        if !(0.0..=1.0).contains(&cfg.decline_reward) {
            return Err(EnvError::Config(format!(
                "decline reward probability {} outside [0,1]",
                cfg.decline_reward
            )));
        }
        Ok(Self { data, cfg })
    }

    pub fn context_dim(&self) -> usize {
        self.data.dim()
    }

    pub fn dataset(&self) -> &EncodedDataset {
        &self.data
    }

    /// The step for a specific row.
    pub fn step_for_row<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> EnvStep {
        let edible = self.data.is_edible(row);
        let eat = if edible { 1.0 } else { 0.0 };
        EnvStep {
            context: self.data.context(row).to_vec(),
            expected: vec![eat, self.cfg.decline_reward],
            realized: vec![u8::from(edible), bernoulli(self.cfg.decline_reward, rng)],
        }
    }

    /// Draws a mushroom uniformly with replacement.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvStep {
        let row = rng.random_range(0..self.data.rows());
        self.step_for_row(row, rng)
    }
}
