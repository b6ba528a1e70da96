//! Symbol labelings: Gray labels for Cartesian products, quasi-Gray order,
//! and GA-optimized binary and `GF(2^n)` labelings.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::constellation::{neighbor_graph, Constellation4D};
use crate::error::{parse_err, Error, Result};
use crate::ga::{self, GaConfig, Genome};
use crate::infometrics::{sigma2_from_snr_db, CommonNoise, PosteriorTable};
use crate::rng::{self, Rng};

/// Largest supported field exponent `n` of `GF(2^n)`.
pub const MAX_FIELD_EXPONENT: u32 = 6;

/// Assignment of a digit string over `GF(2^n)` to each symbol index.
///
/// Labels are stored as integers; digit `p` (most significant first) is the
/// `p`-th base-`2^n` digit of the value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    n: u32,
    digits: u32,
    labels: Vec<u32>,
}

/// Number of `GF(2^n)` digits needed to label `2^m` symbols.
pub fn digits_for(m: u32, n: u32) -> u32 {
    m.div_ceil(n)
}

impl Labeling {
    pub fn new(n: u32, labels: Vec<u32>) -> Result<Self> {
        if !(1..=MAX_FIELD_EXPONENT).contains(&n) {
            return Err(Error::InvalidArgument(format!("field exponent n = {n} not in 1..=6")));
        }
        let size = labels.len();
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::InvalidCardinality(format!("{size} labels")));
        }
        let digits = digits_for(size.trailing_zeros(), n);
        let limit = 1u64 << (n * digits);
        let mut seen = std::collections::HashSet::with_capacity(size);
        for (i, &l) in labels.iter().enumerate() {
            if u64::from(l) >= limit {
                return Err(Error::InvalidArgument(format!(
                    "label {l} of symbol {i} needs more than {digits} digits"
                )));
            }
            if !seen.insert(l) {
                return Err(Error::InvalidArgument(format!("label {l} used twice")));
            }
        }
        Ok(Labeling { n, digits, labels })
    }

    /// Label `i` for symbol `i`.
    pub fn natural(size: usize, n: u32) -> Result<Self> {
        Labeling::new(n, (0..size as u32).collect())
    }

    pub fn field_exponent(&self) -> u32 {
        self.n
    }

    pub fn digits_per_symbol(&self) -> u32 {
        self.digits
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn digit(&self, symbol: usize, pos: u32) -> u32 {
        let shift = self.n * (self.digits - 1 - pos);
        (self.labels[symbol] >> shift) & ((1 << self.n) - 1)
    }

    pub fn digit_string(&self, symbol: usize) -> Vec<u32> {
        (0..self.digits).map(|p| self.digit(symbol, p)).collect()
    }

    pub fn check_matches(&self, c: &Constellation4D) -> Result<()> {
        if self.len() != c.len() {
            return Err(Error::LabelingMismatch(format!(
                "{} labels for {} symbols",
                self.len(),
                c.len()
            )));
        }
        Ok(())
    }

    /// Relabels after a symbol reordering: symbol `i` of the reordered
    /// constellation was symbol `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Labeling> {
        Labeling::new(self.n, order.iter().map(|&i| self.labels[i]).collect())
    }
}

/// Binary labeling of a Cartesian product: the RH constituent's Gray label
/// followed by the LH one.
pub fn gray_product_labeling(c: &Constellation4D) -> Result<Labeling> {
    let p = c.product().ok_or(Error::NotProduct)?;
    let n_lh = p.lh.points.len();
    let labels = (0..c.len())
        .map(|i| (p.rh.gray[i / n_lh] << p.lh.bits) | p.lh.gray[i % n_lh])
        .collect();
    Labeling::new(1, labels)
}

/// Largest Hamming distance between the labels of two nearest neighbors.
pub fn quasi_gray_order(c: &Constellation4D, labeling: &Labeling) -> Result<u32> {
    if labeling.field_exponent() != 1 {
        return Err(Error::InvalidArgument("quasi-Gray order needs a binary labeling".into()));
    }
    labeling.check_matches(c)?;
    let adj = neighbor_graph(c);
    let l = labeling.labels();
    Ok(adj
        .iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.iter().map(move |&j| (l[i] ^ l[j]).count_ones()))
        .max()
        .unwrap_or(0))
}

/// Chromosome: the label carried by each symbol.
#[derive(Debug, Clone, PartialEq)]
struct LabelPermutation(Vec<u32>);

impl Genome for LabelPermutation {
    /// Order crossover: a slice of `self` is kept in place, the remaining labels
    /// follow the order they have in `other`.
    fn crossover(&self, other: &Self, rng: &mut Rng) -> Self {
        let len = self.0.len();
        let mut a = rng.random_range(0..len);
        let mut b = rng.random_range(0..len);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let kept: std::collections::HashSet<u32> = self.0[a..=b].iter().copied().collect();
        let mut fill = other.0.iter().copied().filter(|l| !kept.contains(l));
        let child = (0..len)
            .map(|i| {
                if (a..=b).contains(&i) {
                    self.0[i]
                } else {
                    fill.next().expect("labels are a permutation")
                }
            })
            .collect();
        LabelPermutation(child)
    }

    fn mutate(&mut self, rng: &mut Rng) {
        let len = self.0.len();
        let i = rng.random_range(0..len);
        let j = rng.random_range(0..len);
        self.0.swap(i, j);
    }
}

/// Result of a labeling optimization.
#[derive(Debug, Clone)]
pub struct LabelingSearch {
    pub labeling: Labeling,
    pub fitness: f64,
    /// Best fitness per generation, starting with the initial population.
    pub history: Vec<f64>,
}

/// Fitness of labelings on a fixed constellation: mean PAIR over a set of SNR
/// points, all evaluated on the same noise draws.
pub struct LabelingFitness {
    tables: Vec<PosteriorTable>,
    n: u32,
    digits: u32,
}

impl LabelingFitness {
    pub fn new(c: &Constellation4D, n: u32, snr_points: &[f64], samples: usize, seed: u64) -> Result<Self> {
        if snr_points.is_empty() {
            return Err(Error::InvalidArgument("no SNR points".into()));
        }
        if !(1..=MAX_FIELD_EXPONENT).contains(&n) {
            return Err(Error::InvalidArgument(format!("field exponent n = {n} not in 1..=6")));
        }
        let noise = CommonNoise::new(samples, seed);
        let tables = snr_points
            .iter()
            .map(|&s| PosteriorTable::new(c, sigma2_from_snr_db(s), &noise))
            .collect();
        Ok(LabelingFitness {
            tables,
            n,
            digits: digits_for(c.bits(), n),
        })
    }

    /// Mean PAIR of the labeling given as one label per symbol.
    pub fn evaluate(&self, labels: &[u32]) -> f64 {
        self.tables
            .iter()
            .map(|t| t.pair(labels, self.n, self.digits))
            .sum::<f64>()
            / self.tables.len() as f64
    }
}

/// Searches for the labeling over `GF(2^n)` that maximizes the mean PAIR over
/// `snr_points`.
///
/// The canonical label set `0..M` is permuted over the symbols, so every
/// candidate is injective. For Cartesian products the Gray labeling is placed
/// in the initial population.
pub fn ga_optimize_labeling(
    c: &Constellation4D,
    n: u32,
    snr_points: &[f64],
    cfg: &GaConfig,
) -> Result<LabelingSearch> {
    cfg.validate()?;
    let fitness = LabelingFitness::new(c, n, snr_points, cfg.sample_budget, rng::child_seed(cfg.seed, 1))?;
    let size = c.len();
    let mut init_rng = rng::stream(cfg.seed, 0);
    let mut population: Vec<LabelPermutation> = (0..cfg.population)
        .map(|_| {
            let mut l: Vec<u32> = (0..size as u32).collect();
            l.shuffle(&mut init_rng);
            LabelPermutation(l)
        })
        .collect();
    if let Ok(g) = gray_product_labeling(c) {
        population[0] = LabelPermutation(g.labels().to_vec());
    }
    let result = ga::evolve(
        cfg,
        population,
        |g: &LabelPermutation| fitness.evaluate(&g.0),
        rng::child_seed(cfg.seed, 2),
    );
    Ok(LabelingSearch {
        labeling: Labeling::new(n, result.best.0)?,
        fitness: result.best_fitness,
        history: result.history,
    })
}

/// Writes the labeling CSV: `# n=<int> digits=<int>` then
/// `symbol_index,digit0,digit1,...` rows.
pub fn export_labeling(l: &Labeling, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, labeling_to_csv(l))?;
    Ok(())
}

pub fn labeling_to_csv(l: &Labeling) -> String {
    let mut out = format!("# n={} digits={}\n", l.n, l.digits);
    for i in 0..l.len() {
        let digits: Vec<String> = l.digit_string(i).iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{i},{}", digits.join(","));
    }
    out
}

pub fn import_labeling(path: impl AsRef<Path>) -> Result<Labeling> {
    labeling_from_csv(&std::fs::read_to_string(path)?)
}

pub fn labeling_from_csv(text: &str) -> Result<Labeling> {
    let mut n: Option<u32> = None;
    let mut digits: Option<u32> = None;
    let mut rows: Vec<(usize, u32)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            for kv in h.split_whitespace() {
                match kv.split_once('=') {
                    Some(("n", v)) => n = Some(v.parse().map_err(|_| parse_err(line_no, "bad n"))?),
                    Some(("digits", v)) => {
                        digits = Some(v.parse().map_err(|_| parse_err(line_no, "bad digits"))?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        let (n, digits) = match (n, digits) {
            (Some(n), Some(d)) if (1..=MAX_FIELD_EXPONENT).contains(&n) => (n, d),
            _ => return Err(parse_err(line_no, "missing or invalid `# n=.. digits=..` header")),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != digits as usize + 1 {
            return Err(parse_err(line_no, format!("expected {} columns", digits + 1)));
        }
        let index: usize = fields[0].parse().map_err(|_| parse_err(line_no, "bad symbol index"))?;
        let mut value = 0u32;
        for f in &fields[1..] {
            let d: u32 = f.parse().map_err(|_| parse_err(line_no, format!("bad digit {f}")))?;
            if d >= 1 << n {
                return Err(parse_err(line_no, format!("digit {d} outside GF(2^{n})")));
            }
            value = (value << n) | d;
        }
        rows.push((index, value));
    }
    let n = n.ok_or_else(|| parse_err(1, "missing header"))?;
    rows.sort_unstable();
    if rows.iter().enumerate().any(|(i, (idx, _))| *idx != i) {
        return Err(Error::Validation("symbol indices must be 0..M-1, each once".into()));
    }
    let l = Labeling::new(n, rows.into_iter().map(|(_, v)| v).collect())?;
    if Some(l.digits) != digits {
        return Err(Error::Validation(format!(
            "header digits={} but {} labels need {}",
            digits.unwrap_or(0),
            l.len(),
            l.digits
        )));
    }
    Ok(l)
}
