pub mod gset;
pub mod instances;
pub mod report;
pub mod sdpa;

pub use gset::GsetGraph;
pub use instances::{gen_matrix_completion, gen_maxcut, gen_mc_random, McInstance};
pub use sdpa::{parse_sdpa, write_sdpa};

use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::SdpProblem;

pub fn read_sdpa_file(path: &Path) -> Result<SdpProblem> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sdpa(&text)
}
