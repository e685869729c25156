//! Restricted-isometry diagnostics for small measurement operators.
//!
//! The restricted isometry constant delta_s of an operator with unit-norm
//! columns is the worst deviation of any s-column Gram spectrum from the
//! identity. It is only computable by enumeration at toy sizes, which is
//! exactly what these probes are for: checking directional claims (more
//! measurements help, larger supports hurt) rather than certifying bounds.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::{compose_operator, MeasurementOperator, SamplingPattern, WaveformFrame};

/// Cap on the number of supports exhaustive mode will enumerate.
pub const EXHAUSTIVE_SUPPORT_CAP: u64 = 1_000_000;

/// How supports are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RicMethod {
    /// All `C(in_dim, s)` supports; exact.
    Exhaustive,
    /// This many random supports; a lower bound on delta_s.
    Sampled(usize),
}

/// Result of one RIC measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RicEstimate {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub delta_s: f64,
    pub method: RicMethod,
    pub supports_checked: usize,
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn support_deviation(columns: &[Vec<Complex64>], support: &[usize]) -> f64 {
    let s = support.len();
    let mut gram = DMatrix::<Complex64>::zeros(s, s);
    for (a, &ia) in support.iter().enumerate() {
        for (b, &ib) in support.iter().enumerate().skip(a) {
            let mut dot = Complex64::default();
            for (x, y) in columns[ia].iter().zip(&columns[ib]) {
                dot += x.conj() * y;
            }
            gram[(a, b)] = dot;
            gram[(b, a)] = dot.conj();
        }
    }
    SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&l| (l - 1.0).abs())
        .fold(0.0, f64::max)
}

fn enumerate_supports(in_dim: usize, s: usize) -> Vec<Vec<usize>> {
    let mut supports = Vec::new();
    let mut current: Vec<usize> = (0..s).collect();
    loop {
        supports.push(current.clone());
        // next lexicographic s-combination of {0..in_dim}
        let mut i = s;
        loop {
            if i == 0 {
                return supports;
            }
            i -= 1;
            if current[i] != i + in_dim - s {
                break;
            }
            if i == 0 {
                return supports;
            }
        }
        current[i] += 1;
        for j in i + 1..s {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Measures delta_s of `operator` with columns normalized to unit norm.
pub fn estimate_ric(
    operator: &MeasurementOperator,
    s: usize,
    method: RicMethod,
    seed: u64,
) -> Result<RicEstimate> {
    let in_dim = operator.in_dim();
    if s == 0 || s > in_dim {
        return Err(Error::InvalidInput(format!(
            "sparsity {s} outside [1, {in_dim}]"
        )));
    }

    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(in_dim);
    let mut basis = vec![Complex64::default(); in_dim];
    for i in 0..in_dim {
        basis[i] = Complex64::new(1.0, 0.0);
        let mut col = operator.forward(&basis)?;
        basis[i] = Complex64::default();
        let norm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut col {
                *v /= norm;
            }
        }
        columns.push(col);
    }

    let supports: Vec<Vec<usize>> = match method {
        RicMethod::Exhaustive => {
            let count = binomial(in_dim, s);
            if count > EXHAUSTIVE_SUPPORT_CAP {
                return Err(Error::TooLarge(format!(
                    "C({in_dim}, {s}) = {count} supports exceeds the exhaustive cap"
                )));
            }
            enumerate_supports(in_dim, s)
        }
        RicMethod::Sampled(count) => {
            if count == 0 {
                return Err(Error::InvalidInput("sampled mode needs >= 1 support".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let mut sup = rand::seq::index::sample(&mut rng, in_dim, s).into_vec();
                    sup.sort_unstable();
                    sup
                })
                .collect()
        }
    };

    let supports_checked = supports.len();
    let delta_s = supports
        .par_iter()
        .map(|sup| support_deviation(&columns, sup))
        .reduce(|| 0.0, f64::max);

    Ok(RicEstimate {
        n: operator.block_len(),
        m: operator.out_dim(),
        s,
        delta_s,
        method,
        supports_checked,
    })
}

/// Distribution of delta_s over independently seeded Rademacher waveforms.
#[derive(Debug, Clone, PartialEq)]
pub struct RicSummary {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    /// `(waveform seed, delta_s)` per probe.
    pub records: Vec<(u64, f64)>,
    pub mean: f64,
    pub std_dev: f64,
    /// `(lambda, fraction of probes with delta_s > lambda)`.
    pub exceedance: Vec<(f64, f64)>,
}

/// Runs `seed_count` exhaustive RIC measurements on freshly seeded Rademacher
/// partial circulants and summarizes the delta_s distribution.
pub fn ric_concentration_probe(
    n: usize,
    m: usize,
    s: usize,
    seed_count: usize,
    base_seed: u64,
) -> Result<RicSummary> {
    if seed_count == 0 {
        return Err(Error::InvalidInput("need at least one waveform seed".into()));
    }
    let cp_len = (n / 4).max(1);
    let mut records = Vec::with_capacity(seed_count);
    for k in 0..seed_count as u64 {
        let wseed = base_seed + k;
        let frame = WaveformFrame::rademacher(n, cp_len, wseed)?;
        let pattern = SamplingPattern::uniform_random(n, m, wseed ^ 0x9e37_79b9_7f4a_7c15)?;
        let op = compose_operator(std::slice::from_ref(&frame), false, &pattern)?;
        let est = estimate_ric(&op, s, RicMethod::Exhaustive, wseed)?;
        records.push((wseed, est.delta_s));
    }

    let count = records.len() as f64;
    let mean = records.iter().map(|r| r.1).sum::<f64>() / count;
    let var = records
        .iter()
        .map(|r| (r.1 - mean) * (r.1 - mean))
        .sum::<f64>()
        / count;
    let exceedance = (1..10)
        .map(|i| {
            let lambda = i as f64 / 10.0;
            let frac = records.iter().filter(|r| r.1 > lambda).count() as f64 / count;
            (lambda, frac)
        })
        .collect();

    Ok(RicSummary {
        n,
        m,
        s,
        records,
        mean,
        std_dev: var.sqrt(),
        exceedance,
    })
}
