//! The bundled copy of the UCI mushroom file and checks for other copies.

use std::path::{Path, PathBuf};

use crate::envs::{load_mushroom_dataset, EncodedDataset, EnvError};

pub const MUSHROOM_FILE_NAME: &str = "agaricus-lepiota.data";
pub const MUSHROOM_FILE_SIZE: usize = 373_704;
pub const MUSHROOM_ROWS: usize = 8124;
/// Edible rows in the canonical file.
pub const MUSHROOM_EDIBLE: usize = 4208;
/// Variable naming the dataset cache directory.
pub const DATA_DIR_VAR: &str = "BANDIT_DATA_DIR";

/// The canonical `agaricus-lepiota.data`.
pub static MUSHROOM_DATA: &[u8] = include_bytes!("../data/agaricus-lepiota.data");

/// Sixteen rows of the canonical file, eight of each class.
pub static MUSHROOM_FIXTURE: &[u8] = include_bytes!("../data/mushroom-fixture.data");

pub fn bundled_mushrooms() -> EncodedDataset {
    load_mushroom_dataset(MUSHROOM_DATA).expect("bundled dataset parses")
}

/// Checks that `bytes` is the canonical file by size and row count.
pub fn verify_mushroom_file(bytes: &[u8]) -> Result<EncodedDataset, String> {
    if bytes.len() != MUSHROOM_FILE_SIZE {
        return Err(format!(
            "expected {MUSHROOM_FILE_SIZE} bytes, found {}",
            bytes.len()
        ));
    }
    let ds = load_mushroom_dataset(bytes).map_err(|e| e.to_string())?;
    if ds.rows() != MUSHROOM_ROWS {
        return Err(format!("expected {MUSHROOM_ROWS} rows, found {}", ds.rows()));
    }
    Ok(ds)
}

/// `$BANDIT_DATA_DIR/agaricus-lepiota.data`, if the variable is set.
pub fn cached_mushroom_path() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_VAR).map(|dir| Path::new(&dir).join(MUSHROOM_FILE_NAME))
}

pub fn load_mushroom_file(path: &Path) -> Result<EncodedDataset, EnvError> {
    load_mushroom_dataset(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_is_canonical() {
        let ds = verify_mushroom_file(MUSHROOM_DATA).unwrap();
        assert_eq!(ds.edible_count(), MUSHROOM_EDIBLE);
    }

    #[test]
    fn fixture_is_balanced() {
        let ds = load_mushroom_dataset(MUSHROOM_FIXTURE).unwrap();
        assert_eq!(ds.rows(), 16);
        assert_eq!(ds.edible_count(), 8);
        assert!(verify_mushroom_file(MUSHROOM_FIXTURE).is_err());
    }
}
