//! Random walks hidden in the symmetric models where `f0 f1 = f1 f0^-1`.
//!
//! Under the commutation identity every word collapses to `x -> f0^j(x)` or
//! `x -> f0^j(1 - x)`, so the fiber orbit under random symbols is a walk on
//! the integers `j` together with a sign.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SkewError};
use crate::fiber::{FiberModel, FiberPoint};
use crate::symbolic::Word;

/// Tolerance on the commutation defect for a model to count as symmetric.
pub const COMMUTATION_TOL: f64 = 1e-8;

/// `f_[w](x) = f0^j(x)` if `sign = 1`, `f0^j(1 - x)` if `sign = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedWord {
    pub sign: i8,
    pub j: i64,
}

impl ReducedWord {
    pub const IDENTITY: ReducedWord = ReducedWord { sign: 1, j: 0 };

    /// Append one symbol (applied after the word read so far).
    pub fn push(self, sym: u8) -> Self {
        if sym == 0 {
            ReducedWord { sign: self.sign, j: self.j + 1 }
        } else {
            ReducedWord { sign: -self.sign, j: -self.j }
        }
    }

    pub fn apply(&self, model: &FiberModel, p: FiberPoint) -> FiberPoint {
        let mut q = if self.sign > 0 { p } else { p.reflect() };
        for _ in 0..self.j.unsigned_abs() {
            q = if self.j > 0 { model.f0(q) } else { model.f0_inv(q) };
        }
        q
    }

    /// Action on a lifted coordinate where `f0` is translation by `shift`.
    pub fn apply_lifted(&self, t: f64, shift: f64) -> f64 {
        self.sign as f64 * t + self.j as f64 * shift
    }
}

pub fn reduce_word(w: &[u8]) -> ReducedWord {
    w.iter().fold(ReducedWord::IDENTITY, |r, &s| r.push(s))
}

fn require_commutation(model: &FiberModel) -> Result<f64> {
    let d = model.commutation_defect();
    if d > COMMUTATION_TOL {
        Err(SkewError::CommutationViolated(d))
    } else {
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NontransitivityWitness {
    pub x: f64,
    pub commutation_defect: f64,
    pub words_checked: usize,
    pub max_word_len: usize,
    pub max_deviation: f64,
    /// `{f0^j(x)}` and `{f0^j(1-x)}`, sorted
    pub closure: Vec<f64>,
    pub max_gap: f64,
    pub gap: (f64, f64),
}

/// Check the reduced form on `words` random words of length `1..=max_len`
/// and report the gaps left by the two orbits that contain every image of `x`.
pub fn nontransitivity_witness(
    model: &FiberModel,
    x: f64,
    words: usize,
    max_len: usize,
    seed: u64,
) -> Result<NontransitivityWitness> {
    if !(x > 0.0 && x < 1.0) || max_len == 0 {
        return Err(SkewError::InvalidParameter("need x in (0,1) and max_len >= 1".into()));
    }
    let commutation_defect = require_commutation(model)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let p = FiberPoint::new(x);
    let mut max_deviation = 0.0f64;
    for _ in 0..words {
        let len = rng.random_range(1..=max_len);
        let w: Vec<u8> = (0..len).map(|_| rng.random_range(0..2u8)).collect();
        let direct = model.eval_word(&w, p).0;
        let reduced = reduce_word(&w).apply(model, p);
        max_deviation = max_deviation.max(direct.minus(&reduced).abs());
    }
    let mut closure = Vec::new();
    for start in [p, p.reflect()] {
        closure.push(start.value());
        for inverse in [false, true] {
            let mut q = start;
            for _ in 0..100_000 {
                q = if inverse { model.f0_inv(q) } else { model.f0(q) };
                if q.dist < 1e-15 {
                    break;
                }
                closure.push(q.value());
            }
        }
    }
    closure.sort_by(f64::total_cmp);
    closure.dedup();
    let mut pts = vec![0.0];
    pts.extend(&closure);
    pts.push(1.0);
    let (max_gap, gap) = pts
        .windows(2)
        .map(|w| (w[1] - w[0], (w[0], w[1])))
        .fold((0.0, (0.0, 0.0)), |a, b| if b.0 > a.0 { b } else { a });
    Ok(NontransitivityWitness {
        x,
        commutation_defect,
        words_checked: words,
        max_word_len: max_len,
        max_deviation,
        closure,
        max_gap,
        gap,
    })
}

/// Fair bits from a seeded counter-based generator.
pub struct BitStream {
    rng: ChaCha12Rng,
    buf: u64,
    left: u32,
}

impl BitStream {
    pub fn new(seed: u64) -> Self {
        BitStream { rng: ChaCha12Rng::seed_from_u64(seed), buf: 0, left: 0 }
    }

    pub fn next_bit(&mut self) -> u8 {
        if self.left == 0 {
            self.buf = self.rng.next_u64();
            self.left = 64;
        }
        let b = (self.buf & 1) as u8;
        self.buf >>= 1;
        self.left -= 1;
        b
    }

    /// Distance to the next 0-symbol (at least 1).
    pub fn next_gap(&mut self) -> usize {
        let mut g = 1;
        while self.next_bit() == 1 {
            g += 1;
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub seed: u64,
    pub gaps: usize,
    /// frequency of an even number of ones between consecutive zeros
    pub ones_even: f64,
    /// frequency of an even gap `n_i - n_{i-1}`
    pub gap_even: f64,
    /// empirical `P(d = 1), P(d = 3), ...` for `d = 1, 3, ..., 2 * len - 1`
    pub d_law: Vec<f64>,
    pub mean_d: f64,
    /// correlation between `d_i` and the indicator of an even gap
    pub d_parity_correlation: f64,
    /// S-walk steps in the same direction as the previous step
    pub same_direction: f64,
}

/// Gaps between consecutive zeros of a fair bit sequence.
pub fn gap_statistics(seed: u64, gaps: usize) -> Result<GapStatistics> {
    if gaps < 10_000 {
        return Err(SkewError::InvalidParameter("need at least 10^4 gaps".into()));
    }
    let mut bits = BitStream::new(seed);
    // position the stream on a zero
    while bits.next_bit() == 1 {}
    let mut even_gaps = 0usize;
    let mut counts = vec![0usize; 16];
    let (mut sd, mut sdd, mut sdp) = (0.0f64, 0.0f64, 0.0f64);
    let mut same = 0usize;
    let mut direction = 1i8;
    for _ in 0..gaps {
        let g = bits.next_gap();
        let even = g % 2 == 0;
        let d = if even { g - 1 } else { g };
        if even {
            even_gaps += 1;
        }
        let k = (d - 1) / 2;
        if k < counts.len() {
            counts[k] += 1;
        }
        let (df, pf) = (d as f64, if even { 1.0 } else { 0.0 });
        sd += df;
        sdd += df * df;
        sdp += df * pf;
        // an odd gap means an even number of ones: the S-walk keeps direction
        let step = if even { -direction } else { direction };
        if step == direction {
            same += 1;
        }
        direction = step;
    }
    let n = gaps as f64;
    let pe = even_gaps as f64 / n;
    let md = sd / n;
    let var_d = sdd / n - md * md;
    let var_p = pe * (1.0 - pe);
    let cov = sdp / n - md * pe;
    let d_parity_correlation = if var_d > 0.0 && var_p > 0.0 { cov / (var_d * var_p).sqrt() } else { 0.0 };
    Ok(GapStatistics {
        seed,
        gaps,
        ones_even: 1.0 - pe,
        gap_even: pe,
        d_law: counts.iter().map(|&c| c as f64 / n).collect(),
        mean_d: md,
        d_parity_correlation,
        same_direction: same as f64 / n,
    })
}

/// `P(V+ step = -k) = 2^k / 3^(k+2)`.
pub fn vplus_down_probability(k: u32) -> f64 {
    2f64.powi(k as i32) / 3f64.powi(k as i32 + 2)
}

/// Steps of `V+` drawn directly from their law.
pub fn vplus_steps_direct(seed: u64, steps: usize) -> Vec<i64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..steps)
        .map(|_| {
            if rng.random::<f64>() < 2.0 / 3.0 {
                1
            } else {
                let mut k = 0;
                while rng.random::<f64>() < 2.0 / 3.0 {
                    k += 1;
                }
                -k
            }
        })
        .collect()
}

/// Steps of `V+` obtained as first returns of the walk `U` on
/// `Z x {-1, +1}` to the `+1` sheet, with `U` driven by fair bits.
pub fn vplus_steps_first_return(seed: u64, steps: usize) -> Vec<i64> {
    let mut bits = BitStream::new(seed);
    while bits.next_bit() == 1 {}
    let mut out = Vec::with_capacity(steps);
    let (mut x, mut j) = (0i64, 1i64);
    let mut start = 0i64;
    while out.len() < steps {
        // U keeps its direction when the gap is odd (even number of ones)
        if bits.next_gap() % 2 == 1 {
            x += j;
        } else {
            x -= j;
            j = -j;
        }
        if j == 1 {
            out.push(x - start);
            start = x;
        }
    }
    out
}

/// Two-sample Kolmogorov-Smirnov statistic of integer samples.
pub fn ks_statistic(a: &[i64], b: &[i64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut k) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && k < b.len() {
        let v = a[i].min(b[k]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while k < b.len() && b[k] == v {
            k += 1;
        }
        d = d.max((i as f64 / na - k as f64 / nb).abs());
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub seed: u64,
    pub steps: usize,
    pub mean_step: f64,
    pub step_variance: f64,
    pub final_position: i64,
    /// visits of the walk started at 0 to 0 during steps `1..=steps`
    pub zero_visits: usize,
}

pub fn vplus_walk(seed: u64, steps: usize) -> Result<WalkTrace> {
    if steps == 0 {
        return Err(SkewError::InvalidParameter("steps must be at least 1".into()));
    }
    let s = vplus_steps_direct(seed, steps);
    let n = steps as f64;
    let mean = s.iter().sum::<i64>() as f64 / n;
    let var = s.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let mut x = 0i64;
    let mut zero_visits = 0;
    for &v in &s {
        x += v;
        if x == 0 {
            zero_visits += 1;
        }
    }
    Ok(WalkTrace { seed, steps, mean_step: mean, step_variance: var, final_position: x, zero_visits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationRow {
    pub n: usize,
    pub mean_fraction: f64,
    pub stderr: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationTable {
    pub eps: f64,
    pub particles: usize,
    pub rows: Vec<OccupationRow>,
}

/// Average over steps `1..=n` and over the particles of the indicator of
/// `(eps, 1 - eps)`, for each `n` of the grid, with one fair bit sequence per
/// seed shared by all particles.
pub fn occupation_decay(
    model: &FiberModel,
    particles: &[f64],
    eps: f64,
    n_grid: &[usize],
    seeds: &[u64],
) -> Result<OccupationTable> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(SkewError::InvalidParameter("eps must lie in (0, 1/2)".into()));
    }
    if particles.is_empty() || particles.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(SkewError::InvalidParameter("particles must lie in (0,1)".into()));
    }
    if seeds.is_empty() || n_grid.is_empty() || n_grid.contains(&0) {
        return Err(SkewError::InvalidParameter("need seeds and a grid of positive n".into()));
    }
    require_commutation(model)?;
    let lift = model
        .lift()
        .ok_or_else(|| SkewError::InvalidParameter("occupation runs need a model with a translation lift".into()))?;
    let shift = lift.shift();
    let big_t = lift.lift(FiberPoint::right(eps));
    let mut t0: Vec<f64> = particles.iter().map(|&x| lift.lift(FiberPoint::new(x))).collect();
    t0.sort_by(f64::total_cmp);
    let count_in = |lo: f64, hi: f64| {
        let a = t0.partition_point(|&t| t <= lo);
        let b = t0.partition_point(|&t| t < hi);
        b.saturating_sub(a)
    };
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let n_max = *grid.last().unwrap();
    let np = t0.len() as f64;
    let mut per_seed: Vec<Vec<f64>> = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut bits = BitStream::new(seed);
        let mut r = ReducedWord::IDENTITY;
        let mut acc = 0usize;
        let mut fr = Vec::with_capacity(grid.len());
        let mut gi = 0;
        for i in 1..=n_max {
            r = r.push(bits.next_bit());
            let c = r.j as f64 * shift;
            acc += if r.sign > 0 { count_in(-big_t - c, big_t - c) } else { count_in(c - big_t, c + big_t) };
            while gi < grid.len() && grid[gi] == i {
                fr.push(acc as f64 / (np * i as f64));
                gi += 1;
            }
        }
        per_seed.push(fr);
    }
    let ns = seeds.len() as f64;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let vals: Vec<f64> = per_seed.iter().map(|f| f[k]).collect();
            let mean = vals.iter().sum::<f64>() / ns;
            let var = if seeds.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ns - 1.0)
            } else {
                0.0
            };
            OccupationRow { n, mean_fraction: mean, stderr: (var / ns).sqrt(), seeds: seeds.len() }
        })
        .collect();
    Ok(OccupationTable { eps, particles: particles.len(), rows })
}

/// `count` evenly spaced particles strictly inside `(lo, hi)`.
pub fn particle_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / count as f64).collect()
}

/// Random word of a given length from the bit stream, for tests and CLI use.
pub fn random_word(bits: &mut BitStream, len: usize) -> Word {
    Word::new((0..len).map(|_| bits.next_bit()).collect()).expect("binary symbols")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(reduce_word(&w("00100010")), ReducedWord { sign: 1, j: 0 });
        assert_eq!(reduce_word(&w("01")), ReducedWord { sign: -1, j: -1 });
        assert_eq!(reduce_word(&w("11")), ReducedWord::IDENTITY);
        let m = FiberModel::mobius(2.0);
        let x = FiberPoint::new(1.0 / 3.0);
        let lhs = m.eval_word(&w("01"), x).0.value();
        let rhs = reduce_word(&w("01")).apply(&m, x).value();
        assert!((lhs - 0.5).abs() < 1e-15 && (rhs - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lifted_position_matches_reduction() {
        let m = FiberModel::mobius(2.0);
        let lift = m.lift().unwrap();
        let mut bits = BitStream::new(7);
        for _ in 0..200 {
            let word = random_word(&mut bits, 30);
            let t0 = 0.37;
            let t = word.iter().fold(t0, |t, &s| lift.step(s, t));
            let r = reduce_word(&word).apply_lifted(t0, lift.shift());
            assert!((t - r).abs() < 1e-12);
        }
    }

    #[test]
    fn witness_and_violation() {
        let m = FiberModel::mobius(2.0);
        let wit = nontransitivity_witness(&m, 0.3, 2000, 20, 1).unwrap();
        assert!(wit.max_deviation <= 1e-9);
        assert!((wit.max_gap - 0.0931).abs() < 1e-3);
        let a = FiberModel::arctan();
        let wit = nontransitivity_witness(&a, 0.3, 2000, 20, 1).unwrap();
        assert!(wit.max_deviation <= 1e-8);
        let p = FiberModel::pld_default();
        assert!(matches!(nontransitivity_witness(&p, 0.3, 10, 5, 1), Err(SkewError::CommutationViolated(_))));
    }

    #[test]
    fn vplus_law_sums_to_one_and_has_zero_mean() {
        let tail: f64 = (0..200).map(vplus_down_probability).sum();
        assert!((2.0 / 3.0 + tail - 1.0).abs() < 1e-14);
        let mean: f64 = 2.0 / 3.0 - (0..200).map(|k| k as f64 * vplus_down_probability(k)).sum::<f64>();
        assert!(mean.abs() < 1e-14);
        let var: f64 = 2.0 / 3.0 + (0..200).map(|k| (k * k) as f64 * vplus_down_probability(k)).sum::<f64>();
        assert!((var - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ks_of_identical_samples() {
        let a = vplus_steps_direct(3, 1000);
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&[0, 0], &[1, 1]), 1.0);
    }

    #[test]
    fn gap_law_small_run() {
        let g = gap_statistics(5, 100_000).unwrap();
        assert!((g.ones_even - 2.0 / 3.0).abs() < 0.01);
        assert!((g.d_law[0] - 0.75).abs() < 0.01);
        assert!((g.same_direction - g.ones_even).abs() < 1e-12);
        assert!(gap_statistics(5, 10).is_err());
    }

    #[test]
    fn occupation_degenerate_target() {
        let m = FiberModel::mobius(2.0);
        let t = occupation_decay(&m, &[0.5], 0.5 - 1e-12, &[1000], &[1, 2]).unwrap();
        assert!(t.rows[0].mean_fraction < 0.1);
        let p = FiberModel::pld_default();
        assert!(occupation_decay(&p, &[0.5], 0.25, &[10], &[1]).is_err());
    }
}
