//! Binary words, the 4-symbol subshift on `{0_L, 1_L, 0_R, 1_R}` and its
//! Parry measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{Result, SkewError};
use crate::fiber::Side;

/// A finite word over `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.iter().any(|&s| s > 1) {
            return Err(SkewError::InvalidParameter("word symbols must be 0 or 1".into()));
        }
        Ok(Word(symbols))
    }

    pub fn zeros(n: usize) -> Self {
        Word(vec![0; n])
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&s| s == 1).count()
    }

    pub fn count_zeros(&self) -> usize {
        self.0.len() - self.count_ones()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, s: u8) {
        assert!(s <= 1);
        self.0.push(s);
    }

    pub fn pow(&self, k: usize) -> Word {
        Word(self.0.repeat(k))
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Cyclic rotation starting at index `i`.
    pub fn rotated(&self, i: usize) -> Word {
        let n = self.0.len();
        Word((0..n).map(|k| self.0[(i + k) % n]).collect())
    }
}

impl Deref for Word {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = SkewError;
    fn from_str(s: &str) -> Result<Self> {
        let v: Option<Vec<u8>> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Some(0),
                '1' => Some(1),
                _ => None,
            })
            .collect();
        v.map(Word).ok_or_else(|| SkewError::InvalidParameter(format!("not a binary word: {s:?}")))
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for Word {
    type Error = SkewError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A symbol of the exposed subshift: the base symbol together with the side
/// (0 for `L`, 1 for `R`) of the fiber coordinate at that time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExSymbol {
    pub symbol: u8,
    pub side: Side,
}

impl ExSymbol {
    /// Index in the order `0_L, 1_L, 0_R, 1_R`.
    pub fn index(&self) -> usize {
        let s = match self.side {
            Side::Left => 0,
            Side::Right => 2,
        };
        s + self.symbol as usize
    }

    pub fn from_index(i: usize) -> Self {
        ExSymbol {
            symbol: (i % 2) as u8,
            side: if i < 2 { Side::Left } else { Side::Right },
        }
    }

    pub fn mirrored(&self) -> Self {
        ExSymbol { symbol: self.symbol, side: self.side.flip() }
    }
}

impl fmt::Display for ExSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.side {
            Side::Left => 'L',
            Side::Right => 'R',
        };
        write!(f, "{}{}", self.symbol, s)
    }
}

/// Parse a word such as `"0R 1R 0L 1L"`.
pub fn parse_ex_word(s: &str) -> Result<Vec<ExSymbol>> {
    s.split_whitespace()
        .map(|tok| {
            let b = tok.as_bytes();
            if b.len() != 2 {
                return Err(SkewError::InvalidParameter(format!("bad symbol {tok:?}")));
            }
            let symbol = match b[0] {
                b'0' => 0,
                b'1' => 1,
                _ => return Err(SkewError::InvalidParameter(format!("bad symbol {tok:?}"))),
            };
            let side = match b[1] {
                b'L' | b'l' => Side::Left,
                b'R' | b'r' => Side::Right,
                _ => return Err(SkewError::InvalidParameter(format!("bad side in {tok:?}"))),
            };
            Ok(ExSymbol { symbol, side })
        })
        .collect()
}

pub fn format_ex_word(w: &[ExSymbol]) -> String {
    w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

/// Transition matrix on `{0_L, 1_L, 0_R, 1_R}`: a `0` keeps the side, a `1` flips it.
pub const TRANSITIONS: [[u8; 4]; 4] = [[1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChain {
    pub a: [[u8; 4]; 4],
}

impl Default for MarkovChain {
    fn default() -> Self {
        MarkovChain { a: TRANSITIONS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParryData {
    pub perron: f64,
    pub pi: [f64; 4],
    pub p: [[f64; 4]; 4],
    pub entropy: f64,
    pub iterations: usize,
}

impl MarkovChain {
    pub fn allowed(&self, from: ExSymbol, to: ExSymbol) -> bool {
        self.a[from.index()][to.index()] == 1
    }

    /// Cyclic admissibility.
    pub fn is_admissible(&self, w: &[ExSymbol]) -> bool {
        let n = w.len();
        n > 0 && (0..n).all(|i| self.allowed(w[i], w[(i + 1) % n]))
    }

    /// Admissibility as a finite (non-cyclic) path.
    pub fn is_admissible_path(&self, w: &[ExSymbol]) -> bool {
        w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    fn power_vector(&self, transpose: bool) -> (f64, [f64; 4], usize) {
        let mut v = [1.0, 2.0, 3.0, 4.0];
        let mut rho = 0.0;
        for it in 1..=10_000 {
            let mut w = [0.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    let aij = if transpose { self.a[j][i] } else { self.a[i][j] } as f64;
                    w[i] += aij * v[j];
                }
            }
            let norm: f64 = w.iter().sum();
            let new_rho = norm / v.iter().sum::<f64>();
            for x in w.iter_mut() {
                *x /= norm;
            }
            let diff = (0..4).map(|i| (w[i] - v[i]).abs()).fold(0.0, f64::max);
            v = w;
            let settled = (new_rho - rho).abs() < 1e-14 && diff < 1e-14;
            rho = new_rho;
            if settled {
                return (rho, v, it);
            }
        }
        (rho, v, 10_000)
    }

    /// Perron eigendata, stationary vector and transition probabilities of
    /// the measure of maximal entropy.
    pub fn parry_measure(&self) -> ParryData {
        let (perron, r, it1) = self.power_vector(false);
        let (_, l, it2) = self.power_vector(true);
        let z: f64 = (0..4).map(|i| l[i] * r[i]).sum();
        let mut pi = [0.0; 4];
        for i in 0..4 {
            pi[i] = l[i] * r[i] / z;
        }
        let mut p = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                p[i][j] = self.a[i][j] as f64 * r[j] / (perron * r[i]);
            }
        }
        let mut entropy = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if p[i][j] > 0.0 {
                    entropy -= pi[i] * p[i][j] * p[i][j].ln();
                }
            }
        }
        ParryData { perron, pi, p, entropy, iterations: it1.max(it2) }
    }
}

impl ParryData {
    /// A stationary path of length `len`.
    pub fn sample_path(&self, len: usize, seed: u64) -> Vec<ExSymbol> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut state = pick_index(&self.pi, rng.random::<f64>());
        out.push(ExSymbol::from_index(state));
        for _ in 1..len {
            state = pick_index(&self.p[state], rng.random::<f64>());
            out.push(ExSymbol::from_index(state));
        }
        out
    }
}

fn pick_index(weights: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    (0..4).rev().find(|&i| weights[i] > 0.0).unwrap_or(3)
}

pub fn mirror(w: &[ExSymbol]) -> Vec<ExSymbol> {
    w.iter().map(ExSymbol::mirrored).collect()
}

pub fn project_pi(w: &[ExSymbol]) -> Word {
    Word(w.iter().map(|s| s.symbol).collect())
}

/// A periodic point of the exposed piece, as an admissible cyclic word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExPeriodicPoint {
    pub symbols: Vec<ExSymbol>,
}

impl ExPeriodicPoint {
    pub fn word(&self) -> Word {
        project_pi(&self.symbols)
    }

    pub fn start_side(&self) -> Side {
        self.symbols[0].side
    }

    pub fn mirrored(&self) -> ExPeriodicPoint {
        ExPeriodicPoint { symbols: mirror(&self.symbols) }
    }

    pub fn period(&self) -> usize {
        self.symbols.len()
    }
}

/// Follow the fiber orbit of `x0 in {0,1}` under `xi`, tagging every symbol
/// with the current side.
pub fn encode_ex_orbit(xi: &Word, x0: Side) -> Result<ExPeriodicPoint> {
    if xi.is_empty() {
        return Err(SkewError::InvalidParameter("empty word".into()));
    }
    let mut side = x0;
    let mut symbols = Vec::with_capacity(xi.len());
    for &s in xi.iter() {
        symbols.push(ExSymbol { symbol: s, side });
        if s == 1 {
            side = side.flip();
        }
    }
    if side != x0 {
        return Err(SkewError::NotPeriodic);
    }
    Ok(ExPeriodicPoint { symbols })
}

/// Every admissible cyclic ex-word of length `1..=max_period`, listed as
/// (binary word, starting side) pairs with an even number of ones.
pub fn enumerate_ex_orbits(max_period: usize) -> Vec<ExPeriodicPoint> {
    let mut out = Vec::new();
    for len in 1..=max_period {
        for bits in 0u32..(1u32 << len) {
            if bits.count_ones() % 2 == 1 {
                continue;
            }
            let w = Word((0..len).map(|i| ((bits >> i) & 1) as u8).collect());
            for side in [Side::Left, Side::Right] {
                out.push(encode_ex_orbit(&w, side).expect("even number of ones closes up"));
            }
        }
    }
    out
}
