//! 4D constellations: Cartesian QAM products, D4 lattice (LAM) designs,
//! geometry queries and the constellation CSV format.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng as _;

use crate::error::{parse_err, Error, Result};
use crate::ga::{self, GaConfig, Genome};
use crate::infometrics::CommonNoise;
use crate::rng::{self, Rng};

/// Average energy of a normalized 4D symbol (unit power per polarization).
pub const NORMALIZED_ENERGY: f64 = 2.0;

/// Largest supported log2 cardinality.
pub const MAX_BITS: u32 = 12;

/// One 4D symbol: the two polarization components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symbol4D {
    pub rh: Complex64,
    pub lh: Complex64,
}

impl Symbol4D {
    pub fn new(rh: Complex64, lh: Complex64) -> Self {
        Symbol4D { rh, lh }
    }

    pub fn from_real(coords: [f64; 4]) -> Self {
        Symbol4D {
            rh: Complex64::new(coords[0], coords[1]),
            lh: Complex64::new(coords[2], coords[3]),
        }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.rh.re, self.rh.im, self.lh.re, self.lh.im]
    }

    pub fn energy(&self) -> f64 {
        self.rh.norm_sqr() + self.lh.norm_sqr()
    }

    pub fn dist2(&self, other: &Symbol4D) -> f64 {
        (self.rh - other.rh).norm_sqr() + (self.lh - other.lh).norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    fn scale(&self, alpha: f64) -> Symbol4D {
        Symbol4D::new(self.rh * alpha, self.lh * alpha)
    }
}

/// Splits a 4D symbol into the two 2D symbols sent on the RH and LH
/// polarizations.
pub fn project(sym: &Symbol4D) -> (Complex64, Complex64) {
    (sym.rh, sym.lh)
}

/// A 2D constituent constellation with its Gray labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Constituent {
    pub name: String,
    pub points: Vec<Complex64>,
    /// Gray label of each point, `bits` wide.
    pub gray: Vec<u32>,
    pub bits: u32,
}

/// Cartesian product metadata: symbol `i` is `(rh.points[i / n_lh], lh.points[i % n_lh])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductStructure {
    pub rh: Constituent,
    pub lh: Constituent,
}

/// A set of `M = 2^m` distinct 4D symbols.
#[derive(Debug, Clone)]
pub struct Constellation4D {
    symbols: Vec<Symbol4D>,
    m: u32,
    name: String,
    energy_norm: f64,
    product: Option<ProductStructure>,
}

/// Equality covers the symbol list, order and name. Product metadata is not
/// carried by the CSV format and is ignored.
impl PartialEq for Constellation4D {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.name == other.name && self.symbols == other.symbols
    }
}

impl Constellation4D {
    /// Validates and wraps a symbol list. The symbols are kept as given.
    pub fn new(symbols: Vec<Symbol4D>, name: impl Into<String>) -> Result<Self> {
        let size = symbols.len();
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::InvalidCardinality(format!(
                "M = {size} is not a power of two >= 2"
            )));
        }
        let m = size.trailing_zeros();
        if m > MAX_BITS {
            return Err(Error::InvalidCardinality(format!(
                "M = 2^{m} exceeds 2^{MAX_BITS}"
            )));
        }
        if let Some(i) = symbols.iter().position(|s| !s.is_finite()) {
            return Err(Error::Validation(format!("symbol {i} is not finite")));
        }
        check_distinct(&symbols)?;
        let energy_norm = symbols.iter().map(Symbol4D::energy).sum::<f64>() / size as f64;
        Ok(Constellation4D {
            symbols,
            m,
            name: name.into(),
            energy_norm,
            product: None,
        })
    }

    pub fn symbols(&self) -> &[Symbol4D] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Bits per 4D symbol.
    pub fn bits(&self) -> u32 {
        self.m
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Average symbol energy `(1/M) sum |x|^2`.
    pub fn energy_norm(&self) -> f64 {
        self.energy_norm
    }

    pub fn product(&self) -> Option<&ProductStructure> {
        self.product.as_ref()
    }

    /// Returns a copy scaled to average energy [`NORMALIZED_ENERGY`].
    pub fn normalized(&self) -> Constellation4D {
        self.scaled((NORMALIZED_ENERGY / self.energy_norm).sqrt())
    }

    pub fn scaled(&self, alpha: f64) -> Constellation4D {
        let symbols: Vec<Symbol4D> = self.symbols.iter().map(|s| s.scale(alpha)).collect();
        let energy_norm = symbols.iter().map(Symbol4D::energy).sum::<f64>() / symbols.len() as f64;
        Constellation4D {
            symbols,
            m: self.m,
            name: self.name.clone(),
            energy_norm,
            product: self.product.as_ref().map(|p| ProductStructure {
                rh: scale_constituent(&p.rh, alpha),
                lh: scale_constituent(&p.lh, alpha),
            }),
        }
    }

    /// Returns the constellation with its symbols reordered: symbol `i` of the
    /// result is symbol `order[i]` of `self`. Product metadata is dropped.
    pub fn permuted(&self, order: &[usize]) -> Result<Constellation4D> {
        if order.len() != self.len() {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        let symbols = order
            .iter()
            .map(|&i| {
                self.symbols
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Constellation4D::new(symbols, self.name.clone())
    }
}

fn scale_constituent(c: &Constituent, alpha: f64) -> Constituent {
    Constituent {
        points: c.points.iter().map(|p| p * alpha).collect(),
        ..c.clone()
    }
}

fn check_distinct(symbols: &[Symbol4D]) -> Result<()> {
    let mut seen = std::collections::HashMap::with_capacity(symbols.len());
    for (i, s) in symbols.iter().enumerate() {
        // +0.0 and -0.0 are the same point
        let key = s.coords().map(|c| (c + 0.0).to_bits());
        if let Some(j) = seen.insert(key, i) {
            return Err(Error::DuplicateSymbol(j, i));
        }
    }
    Ok(())
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

/// Unit-energy rectangular QAM with `bits` bits per symbol and a Gray labeling
/// built per axis. Odd `bits` give a `2^ceil(b/2) x 2^floor(b/2)` grid.
pub fn rect_qam(bits: u32) -> Result<Constituent> {
    if bits == 0 || bits > MAX_BITS / 2 {
        return Err(Error::UnsupportedOrder(format!(
            "constituent QAM with {bits} bits"
        )));
    }
    if bits == 2 {
        // QPSK in phase order, e^{j(pi/4 + k pi/2)}
        let points = (0..4)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * (1 + 2 * k) as f64))
            .collect();
        return Ok(Constituent {
            name: "QPSK".into(),
            points,
            gray: (0..4).map(gray).collect(),
            bits,
        });
    }
    let bi = bits.div_ceil(2);
    let bq = bits / 2;
    let (ni, nq) = (1u32 << bi, 1u32 << bq);
    let level = |k: u32, n: u32| if n == 1 { 0.0 } else { 2.0 * k as f64 - (n - 1) as f64 };
    let mut points = Vec::with_capacity((ni * nq) as usize);
    let mut labels = Vec::with_capacity(points.capacity());
    for i in 0..ni {
        for q in 0..nq {
            points.push(Complex64::new(level(i, ni), level(q, nq)));
            labels.push((gray(i) << bq) | gray(q));
        }
    }
    let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
    let scale = energy.sqrt().recip();
    for p in &mut points {
        *p *= scale;
    }
    let name = match bits {
        1 => "BPSK".to_string(),
        2 => "QPSK".to_string(),
        b if b % 2 == 0 => format!("{}-QAM", 1u32 << b),
        _ => format!("{}-QAM(rect {}x{})", 1u32 << bits, ni, nq),
    };
    Ok(Constituent {
        name,
        points,
        gray: labels,
        bits,
    })
}

/// Unit-energy 32-point cross QAM (6x6 grid without its corners).
pub fn cross_qam32() -> Vec<Complex64> {
    let levels = [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0];
    let mut points = Vec::with_capacity(32);
    for &i in &levels {
        for &q in &levels {
            if f64::abs(i) == 5.0 && f64::abs(q) == 5.0 {
                continue;
            }
            points.push(Complex64::new(i, q));
        }
    }
    let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
    points.iter().map(|p| p / energy.sqrt()).collect()
}

/// Builds the `sqrt(M) x sqrt(M)` Cartesian product of two identical
/// rectangular QAM constituents carrying `m_total / 2` bits each.
pub fn gen_cartesian_qam(m_total: u32) -> Result<Constellation4D> {
    if !m_total.is_multiple_of(2) || !(2..=MAX_BITS).contains(&m_total) {
        return Err(Error::UnsupportedOrder(format!(
            "Cartesian QAM needs an even number of bits in 2..={MAX_BITS}, got {m_total}"
        )));
    }
    let constituent = rect_qam(m_total / 2)?;
    let side = constituent.points.len();
    let mut symbols = Vec::with_capacity(side * side);
    for a in &constituent.points {
        for b in &constituent.points {
            symbols.push(Symbol4D::new(*a, *b));
        }
    }
    let name = format!("{side}x{side}-QAM [{}]", constituent.name);
    let mut c = Constellation4D::new(symbols, name)?;
    c.product = Some(ProductStructure {
        rh: constituent.clone(),
        lh: constituent,
    });
    Ok(c.normalized())
}

/// A point of the integer lattice Z^4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint(pub [i32; 4]);

impl LatticePoint {
    pub fn norm2(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    /// D4 membership: even coordinate sum.
    pub fn in_d4(&self) -> bool {
        self.0.iter().map(|&c| c as i64).sum::<i64>() % 2 == 0
    }

    pub fn to_symbol(&self) -> Symbol4D {
        Symbol4D::from_real(self.0.map(f64::from))
    }
}

/// Enumerates D4 points by increasing squared norm (ties in lexicographic
/// order) until at least `max_points` are found. The last shell is returned
/// whole.
pub fn enumerate_d4_shells(max_points: usize) -> Vec<LatticePoint> {
    let target = max_points.max(1);
    let mut radius2: i64 = 2;
    loop {
        let pts = d4_points_within(radius2);
        if pts.len() >= target {
            let cut = pts[target - 1].norm2();
            return pts.into_iter().take_while(|p| p.norm2() <= cut).collect();
        }
        radius2 *= 2;
    }
}

fn d4_points_within(radius2: i64) -> Vec<LatticePoint> {
    let r = (radius2 as f64).sqrt().floor() as i32;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                for d in -r..=r {
                    let p = LatticePoint([a, b, c, d]);
                    if p.in_d4() && p.norm2() <= radius2 {
                        out.push(p);
                    }
                }
            }
        }
    }
    out.sort_by_key(|p| (p.norm2(), *p));
    out
}

/// Groups sorted lattice points into `(norm2, points)` shells.
pub fn shells(points: &[LatticePoint]) -> Vec<(i64, Vec<LatticePoint>)> {
    let mut out: Vec<(i64, Vec<LatticePoint>)> = Vec::new();
    for p in points {
        match out.last_mut() {
            Some((n, v)) if *n == p.norm2() => v.push(*p),
            _ => out.push((p.norm2(), vec![*p])),
        }
    }
    out
}

/// Selection of `k` points out of a boundary shell of `n` points.
#[derive(Debug, Clone, PartialEq)]
struct ShellSubset {
    chosen: Vec<usize>,
    n: usize,
}

impl Genome for ShellSubset {
    fn crossover(&self, other: &Self, rng: &mut Rng) -> Self {
        // Keep the common points, fill the rest from the union.
        let a: HashSet<usize> = self.chosen.iter().copied().collect();
        let mut chosen: Vec<usize> = other.chosen.iter().copied().filter(|i| a.contains(i)).collect();
        let mut rest: Vec<usize> = self
            .chosen
            .iter()
            .chain(other.chosen.iter())
            .copied()
            .filter(|i| !chosen.contains(i))
            .collect();
        rest.sort_unstable();
        rest.dedup();
        while chosen.len() < self.chosen.len() {
            let j = rng.random_range(0..rest.len());
            chosen.push(rest.swap_remove(j));
        }
        chosen.sort_unstable();
        ShellSubset { chosen, n: self.n }
    }

    fn mutate(&mut self, rng: &mut Rng) {
        if self.chosen.len() == self.n {
            return;
        }
        let out: Vec<usize> = (0..self.n).filter(|i| !self.chosen.contains(i)).collect();
        let slot = rng.random_range(0..self.chosen.len());
        self.chosen[slot] = out[rng.random_range(0..out.len())];
        self.chosen.sort_unstable();
    }
}

impl ShellSubset {
    fn random(k: usize, n: usize, rng: &mut Rng) -> Self {
        let mut chosen = rand::seq::index::sample(rng, n, k).into_vec();
        chosen.sort_unstable();
        ShellSubset { chosen, n }
    }
}

/// Builds an `M`-point lattice amplitude modulation from the lowest-energy
/// points of D4.
///
/// All shells strictly inside the spherical cut are taken. When only part of
/// the boundary shell is needed, a genetic algorithm picks the subset that
/// maximizes the AIR at `snr_eval_db`, estimated with `cfg.sample_budget`
/// common noise samples. The result is normalized.
pub fn gen_lam(size: usize, cfg: &GaConfig, snr_eval_db: f64, seed: u64) -> Result<Constellation4D> {
    if size < 2 || !size.is_power_of_two() {
        return Err(Error::UnsupportedOrder(format!("M = {size} is not a power of two")));
    }
    if size > 1 << MAX_BITS {
        return Err(Error::Capacity(format!(
            "M = {size} exceeds the lattice budget of {} points",
            1 << MAX_BITS
        )));
    }
    cfg.validate()?;
    let pts = enumerate_d4_shells(size);
    let shells = shells(&pts);
    let (_, boundary) = shells.last().expect("at least the origin");
    let inner: Vec<LatticePoint> = shells[..shells.len() - 1]
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    let need = size - inner.len();
    let name = format!("{size}-LAM");

    let build = |chosen: &[usize]| -> Vec<Symbol4D> {
        inner
            .iter()
            .chain(chosen.iter().map(|&i| &boundary[i]))
            .map(LatticePoint::to_symbol)
            .collect()
    };

    let chosen: Vec<usize> = if need == boundary.len() {
        (0..need).collect()
    } else {
        let noise = CommonNoise::new(cfg.sample_budget, rng::child_seed(seed, 1));
        let energy_of = |syms: &[Symbol4D]| syms.iter().map(Symbol4D::energy).sum::<f64>() / syms.len() as f64;
        let fitness = |g: &ShellSubset| {
            let syms = build(&g.chosen);
            let scale = (NORMALIZED_ENERGY / energy_of(&syms)).sqrt();
            let syms: Vec<Symbol4D> = syms.iter().map(|s| s.scale(scale)).collect();
            noise.air(&syms, crate::infometrics::sigma2_from_snr_db(snr_eval_db))
        };
        let mut init_rng = rng::stream(seed, 0);
        let population: Vec<ShellSubset> = (0..cfg.population)
            .map(|_| ShellSubset::random(need, boundary.len(), &mut init_rng))
            .collect();
        let result = ga::evolve(cfg, population, fitness, rng::child_seed(seed, 2));
        result.best.chosen
    };
    let c = Constellation4D::new(build(&chosen), name)?;
    Ok(c.normalized())
}

/// Exact minimum pairwise Euclidean distance.
pub fn min_distance(c: &Constellation4D) -> f64 {
    min_distance2(c.symbols()).sqrt()
}

fn min_distance2(symbols: &[Symbol4D]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in symbols.iter().enumerate() {
        for b in &symbols[i + 1..] {
            best = best.min(a.dist2(b));
        }
    }
    best
}

/// Adjacency lists of symbol pairs within `(1 + 1e-9)` times the minimum
/// distance.
pub fn neighbor_graph(c: &Constellation4D) -> Vec<Vec<usize>> {
    let s = c.symbols();
    let thr = min_distance2(s) * (1.0 + 1e-9) * (1.0 + 1e-9);
    let mut adj = vec![Vec::new(); s.len()];
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if s[i].dist2(&s[j]) <= thr {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Writes the constellation CSV: a `# M=<int> name=<text>` header followed by
/// one `re_rh,im_rh,re_lh,im_lh` row per symbol at 17 significant digits.
pub fn export_constellation(c: &Constellation4D, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, constellation_to_csv(c))?;
    Ok(())
}

pub fn constellation_to_csv(c: &Constellation4D) -> String {
    let mut out = format!("# M={} name={}\n", c.len(), c.name());
    for s in c.symbols() {
        let [a, b, x, y] = s.coords();
        let _ = writeln!(out, "{a:.16e},{b:.16e},{x:.16e},{y:.16e}");
    }
    out
}

pub fn import_constellation(path: impl AsRef<Path>) -> Result<Constellation4D> {
    constellation_from_csv(&std::fs::read_to_string(path)?)
}

pub fn constellation_from_csv(text: &str) -> Result<Constellation4D> {
    let mut declared: Option<usize> = None;
    let mut name = String::from("imported");
    let mut symbols = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let header = header.trim();
            if let Some(rest) = header.strip_prefix("M=") {
                let (m_txt, tail) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                declared = Some(
                    m_txt
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad M in header: {m_txt}")))?,
                );
                if let Some(n) = tail.trim().strip_prefix("name=") {
                    name = n.to_string();
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(
                line_no,
                format!("expected 4 columns, found {}", fields.len()),
            ));
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            let x: f64 = f
                .parse()
                .map_err(|_| parse_err(line_no, format!("not a number: {f}")))?;
            if !x.is_finite() {
                return Err(parse_err(line_no, format!("non-finite component: {f}")));
            }
            *slot = x;
        }
        symbols.push(Symbol4D::from_real(v));
    }
    if let Some(m) = declared {
        if m != symbols.len() {
            return Err(Error::InvalidCardinality(format!(
                "header declares M={m} but file has {} rows",
                symbols.len()
            )));
        }
    }
    Constellation4D::new(symbols, name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bpsk_product_is_unit_square() {
        let c = gen_cartesian_qam(2).unwrap();
        assert_eq!(c.len(), 4);
        for s in c.symbols() {
            assert_abs_diff_eq!(s.rh.re.abs(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.lh.re.abs(), 1.0, epsilon = 1e-12);
            assert_eq!(s.rh.im, 0.0);
        }
    }

    #[test]
    fn qpsk_product_has_unit_power_per_polarization() {
        let c = gen_cartesian_qam(4).unwrap();
        assert_eq!(c.len(), 16);
        let rh = c.symbols().iter().map(|s| s.rh.norm_sqr()).sum::<f64>() / 16.0;
        let lh = c.symbols().iter().map(|s| s.lh.norm_sqr()).sum::<f64>() / 16.0;
        assert_abs_diff_eq!(rh, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lh, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(min_distance(&c), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn eight_by_eight_qam_uses_rectangular_constituent() {
        let c = gen_cartesian_qam(6).unwrap();
        assert_eq!(c.len(), 64);
        assert_eq!(c.bits(), 6);
        assert!(c.name().contains("rect 4x2"), "{}", c.name());
        assert_abs_diff_eq!(c.energy_norm(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn odd_order_is_rejected() {
        assert!(matches!(gen_cartesian_qam(5), Err(Error::UnsupportedOrder(_))));
        assert!(matches!(gen_cartesian_qam(14), Err(Error::UnsupportedOrder(_))));
    }

    #[test]
    fn product_symbol_order_is_rh_major() {
        let c = gen_cartesian_qam(4).unwrap();
        let p = c.product().unwrap();
        for (i, s) in c.symbols().iter().enumerate() {
            assert_eq!(s.rh, p.rh.points[i / 4]);
            assert_eq!(s.lh, p.lh.points[i % 4]);
        }
    }

    #[test]
    fn projection_recovers_constituent() {
        let c = gen_cartesian_qam(6).unwrap();
        let constituent = &c.product().unwrap().rh.points;
        let mut rh: Vec<(u64, u64)> = c
            .symbols()
            .iter()
            .map(|s| project(s).0)
            .map(|z| (z.re.to_bits(), z.im.to_bits()))
            .collect();
        let mut expected: Vec<(u64, u64)> = constituent
            .iter()
            .flat_map(|z| std::iter::repeat_n((z.re.to_bits(), z.im.to_bits()), 8))
            .collect();
        rh.sort_unstable();
        expected.sort_unstable();
        assert_eq!(rh, expected);
    }

    #[test]
    fn d4_theta_series_prefix() {
        let pts = enumerate_d4_shells(146);
        assert_eq!(pts[0], LatticePoint([0, 0, 0, 0]));
        let counts: Vec<(i64, usize)> = shells(&pts).iter().map(|(n, v)| (*n, v.len())).collect();
        assert_eq!(counts, vec![(0, 1), (2, 24), (4, 24), (6, 96), (8, 24)]);
        assert!(pts.iter().all(LatticePoint::in_d4));
    }

    #[test]
    fn enumeration_returns_whole_last_shell() {
        assert_eq!(enumerate_d4_shells(1).len(), 1);
        assert_eq!(enumerate_d4_shells(2).len(), 25);
        assert_eq!(enumerate_d4_shells(25).len(), 25);
        assert_eq!(enumerate_d4_shells(26).len(), 49);
    }

    #[test]
    fn min_distance_is_homogeneous() {
        let c = gen_cartesian_qam(6).unwrap();
        let d = min_distance(&c);
        assert_abs_diff_eq!(min_distance(&c.scaled(3.5)), 3.5 * d, epsilon = 1e-12);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let c = gen_cartesian_qam(4).unwrap();
        let back = constellation_from_csv(&constellation_to_csv(&c)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn csv_rejects_bad_input() {
        let three = "# M=3 name=x\n1,0,0,0\n0,1,0,0\n0,0,1,0\n";
        assert!(matches!(constellation_from_csv(three), Err(Error::InvalidCardinality(_))));
        let nan = "# M=2 name=x\n1,0,0,0\nNaN,0,0,0\n";
        assert!(matches!(constellation_from_csv(nan), Err(Error::Parse { line: 3, .. })));
        let dup = "1,0,0,0\n1,0,0,0\n";
        assert!(matches!(constellation_from_csv(dup), Err(Error::DuplicateSymbol(0, 1))));
        let short = "1,0,0\n0,1,0,0\n";
        assert!(matches!(constellation_from_csv(short), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn lam_rejects_bad_sizes() {
        let cfg = GaConfig::default();
        assert!(matches!(gen_lam(48, &cfg, 10.0, 1), Err(Error::UnsupportedOrder(_))));
        assert!(matches!(gen_lam(1 << 13, &cfg, 10.0, 1), Err(Error::Capacity(_))));
    }
}
