use std::fmt::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use wick_core::{det_elimination, det_leibniz, perm_naive, perm_ryser, ContractionMatrix, ExactScalar, Statistics};

use crate::{BenchMode, CliError};

/// Sizes at or below this are also checked against the n! reference.
const VERIFY_LIMIT: usize = 8;

fn rng_for(seed: u64, n: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.rotate_left(17) ^ n as u64)
}

/// Entries p/q with |p| ≤ 9, 1 ≤ q ≤ 9.
pub fn random_rational_matrix(statistics: Statistics, n: usize, seed: u64) -> ContractionMatrix<ExactScalar> {
    let mut rng = rng_for(seed, n);
    let rows = (0..n)
        .map(|_| (0..n).map(|_| ExactScalar::new(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=9))).collect())
        .collect();
    ContractionMatrix::from_rows(statistics, rows)
}

/// Entries uniform in [0, 1).
pub fn random_float_matrix(n: usize, seed: u64) -> ContractionMatrix<f64> {
    let mut rng = rng_for(seed, n);
    let rows = (0..n).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
    ContractionMatrix::from_rows(Statistics::Bose, rows)
}

fn checksum(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn run(mode: BenchMode, sizes: &[usize], float: bool, seed: u64) -> Result<String, CliError> {
    if float && mode == BenchMode::Det {
        return Err(CliError::Schema("--float is only available for --mode perm".into()));
    }
    let mut out = String::from("n,mode,arithmetic,seconds,checksum,verified\n");
    for &n in sizes {
        let start = Instant::now();
        let ((value, seconds), verified) = match (mode, float) {
            (BenchMode::Det, _) => {
                let m = random_rational_matrix(Statistics::Fermi, n, seed);
                let v = det_elimination(&m);
                let seconds = start.elapsed().as_secs_f64();
                let verified = (n <= VERIFY_LIMIT).then(|| det_leibniz(&m) == v);
                ((v.to_fraction_string(), seconds), verified)
            }
            (BenchMode::Perm, false) => {
                let m = random_rational_matrix(Statistics::Bose, n, seed);
                let v = perm_ryser(&m);
                let seconds = start.elapsed().as_secs_f64();
                let verified = (n <= VERIFY_LIMIT).then(|| perm_naive(&m) == v);
                ((v.to_fraction_string(), seconds), verified)
            }
            (BenchMode::Perm, true) => {
                let m = random_float_matrix(n, seed);
                let v = perm_ryser(&m);
                let seconds = start.elapsed().as_secs_f64();
                let verified = (n <= VERIFY_LIMIT).then(|| close(perm_naive(&m), v));
                ((format!("{v:.17e}"), seconds), verified)
            }
        };
        let mode_name = match mode {
            BenchMode::Det => "det",
            BenchMode::Perm => "perm",
        };
        let arithmetic = if float { "float" } else { "exact" };
        let verified = match verified {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "-",
        };
        let _ = writeln!(out, "{n},{mode_name},{arithmetic},{seconds:.6},{},{verified}", checksum(&value));
    }
    Ok(out)
}
