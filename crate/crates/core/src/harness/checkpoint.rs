use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::Experiment;
use super::HarnessError;

pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON dump of a whole run: networks, optimiser moments, replay memory,
/// automata and every random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub experiment: Experiment,
}

impl Checkpoint {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            experiment,
        }
    }

    /// Writes to a sibling temp file first so a crash never leaves a torn
    /// checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let tmp = path.with_extension("tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            serde_json::to_writer(&mut out, self)?;
            out.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let cp: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(HarnessError::CheckpointVersion {
                found: cp.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        Ok(cp)
    }
}
