use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CorpusError;
use crate::score::Song;

/// Train/valid/test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.90,
            valid: 0.05,
            test: 0.05,
        }
    }
}

/// Train, valid and test songs.
pub type Splits = (Vec<Song>, Vec<Song>, Vec<Song>);

/// Shuffles whole songs with `seed` and cuts them into three parts. The
/// valid and test sizes are floored; the remainder goes to training.
pub fn split_corpus(songs: &[Song], ratios: SplitRatios, seed: u64) -> Result<Splits, CorpusError> {
    let r = [ratios.train, ratios.valid, ratios.test];
    if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CorpusError::BadRatios(r));
    }
    let parts = r.iter().filter(|&&x| x > 0.0).count();
    if songs.len() < parts {
        return Err(CorpusError::TooFewSongs {
            songs: songs.len(),
            parts,
        });
    }
    let n = songs.len();
    let size = |ratio: f64| ((n as f64) * ratio + 1e-9).floor() as usize;
    let (n_valid, n_test) = (size(ratios.valid), size(ratios.test));

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&k| songs[k].clone()).collect::<Vec<_>>();
    let valid = pick(&order[..n_valid]);
    let test = pick(&order[n_valid..n_valid + n_test]);
    let train = pick(&order[n_valid + n_test..]);
    Ok((train, valid, test))
}
