//! Orbit measures, a weak* metric, and the construction of core periodic
//! orbits approaching a nonhyperbolic measure on the exposed piece.

use serde::{Deserialize, Serialize};

use crate::dynamics::{exposed_exponent, orbit_points, PeriodicOrbit};
use crate::error::{Result, SkewError};
use crate::fiber::{distortion, FiberModel, FiberPoint, Side};
use crate::symbolic::{ExPeriodicPoint, Word};

/// Length of the symbolic window stored with every atom.
pub const WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub window: Vec<u8>,
    pub x: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<Atom>,
}

impl EmpiricalMeasure {
    pub fn dirac(window: &[u8], x: f64) -> Self {
        EmpiricalMeasure { atoms: vec![Atom { window: window.to_vec(), x, weight: 1.0 }] }
    }

    /// Uniform measure on the atoms `(window starting at i, x_i)` of a cyclic
    /// symbol sequence with fiber values `xs`.
    pub fn cyclic(symbols: &[u8], xs: &[f64]) -> Self {
        let n = symbols.len();
        let w = 1.0 / n as f64;
        let atoms = (0..n)
            .map(|i| Atom {
                window: (0..WINDOW).map(|k| symbols[(i + k) % n]).collect(),
                x: xs[i],
                weight: w,
            })
            .collect();
        EmpiricalMeasure { atoms }
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn integrate(&self, g: impl Fn(&[u8], f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * g(&a.window, a.x)).sum()
    }

    /// Same atoms, relabelled by one step of the dynamics (cyclic shift).
    pub fn shifted(&self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.rotate_left(1);
        EmpiricalMeasure { atoms }
    }
}

/// Test functions `g(xi, x) = [xi starts with w] x^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub functions: Vec<TestFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub prefix: Vec<u8>,
    pub power: i32,
    pub weight: f64,
}

impl Default for TestFamily {
    /// Prefixes of length at most 3 (including the empty one) and powers
    /// 0..=3, weighted by `2^-(|w|+m)` and normalised to total weight 1.
    fn default() -> Self {
        let mut functions = Vec::new();
        for len in 0..=WINDOW {
            for bits in 0..(1u32 << len) {
                let prefix: Vec<u8> = (0..len).map(|i| ((bits >> i) & 1) as u8).collect();
                for power in 0..=3 {
                    let weight = 0.5f64.powi(len as i32 + power);
                    functions.push(TestFunction { prefix: prefix.clone(), power, weight });
                }
            }
        }
        let total: f64 = functions.iter().map(|f| f.weight).sum();
        for f in functions.iter_mut() {
            f.weight /= total;
        }
        TestFamily { functions }
    }
}

impl TestFunction {
    pub fn eval(&self, window: &[u8], x: f64) -> f64 {
        if window.starts_with(&self.prefix) {
            x.powi(self.power)
        } else {
            0.0
        }
    }
}

/// `sum_g weight_g |int g dmu - int g dnu|`.
pub fn weakstar_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, family: &TestFamily) -> f64 {
    family
        .functions
        .iter()
        .map(|g| {
            let a = mu.integrate(|w, x| g.eval(w, x));
            let b = nu.integrate(|w, x| g.eval(w, x));
            g.weight * (a - b).abs()
        })
        .sum()
}

/// Invariant probability measure on a periodic orbit.
pub fn periodic_measure(model: &FiberModel, orbit: &PeriodicOrbit) -> EmpiricalMeasure {
    let xs: Vec<f64> = orbit_points(model, &orbit.word, orbit.point).iter().map(|p| p.value()).collect();
    EmpiricalMeasure::cyclic(&orbit.word, &xs)
}

/// Periodic measure of an orbit on the exposed piece.
pub fn ex_periodic_measure(ex: &ExPeriodicPoint) -> EmpiricalMeasure {
    let symbols: Vec<u8> = ex.symbols.iter().map(|s| s.symbol).collect();
    let xs: Vec<f64> = ex
        .symbols
        .iter()
        .map(|s| match s.side {
            Side::Left => 0.0,
            Side::Right => 1.0,
        })
        .collect();
    EmpiricalMeasure::cyclic(&symbols, &xs)
}

/// Driving sequence for the boundary approximation; the generic point sits at
/// fiber coordinate 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTarget {
    pub sequence: Word,
    /// `true`: the sequence is one period of a periodic orbit; `false`: it is
    /// a finite piece of a generic sequence and must be at least `n` long.
    pub periodic: bool,
}

impl BoundaryTarget {
    pub fn periodic(word: Word) -> Self {
        BoundaryTarget { sequence: word, periodic: true }
    }

    fn symbol(&self, i: usize) -> Option<u8> {
        if self.periodic {
            Some(self.sequence[i % self.sequence.len()])
        } else {
            self.sequence.get(i).copied()
        }
    }

    /// Measure on the exposed piece carried by the orbit of `(xi, 1)`.
    pub fn measure(&self) -> EmpiricalMeasure {
        let n = self.sequence.len();
        let mut side = Side::Right;
        let mut xs = Vec::with_capacity(n);
        for &s in self.sequence.iter() {
            xs.push(if side == Side::Right { 1.0 } else { 0.0 });
            if s == 1 {
                side = side.flip();
            }
        }
        if self.periodic {
            EmpiricalMeasure::cyclic(&self.sequence, &xs)
        } else {
            let m = n.saturating_sub(WINDOW - 1).max(1);
            let w = 1.0 / m as f64;
            let atoms = (0..m)
                .map(|i| Atom {
                    window: self.sequence[i..(i + WINDOW).min(n)].to_vec(),
                    x: xs[i],
                    weight: w,
                })
                .collect();
            EmpiricalMeasure { atoms }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryApproxTrace {
    pub requested_n: usize,
    pub n: usize,
    pub delta: f64,
    pub prefix: Word,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
    pub phi: f64,
    /// `log|(f_xi^n)'(1)|` computed directly, for cross-checking `phi`
    pub phi_direct: f64,
    pub psi: f64,
    pub local_distortion: f64,
    pub delta_n: f64,
    pub big_n: usize,
    pub big_m: usize,
    pub eta: Word,
    pub y: f64,
    pub return_derivative: f64,
    pub orbit: PeriodicOrbit,
    /// smallest `min(x, 1-x)` along the orbit
    pub min_boundary_distance: f64,
    pub distance_to_target: f64,
    pub measure: EmpiricalMeasure,
}

/// Periodic orbit in the core shadowing the exposed orbit of `(xi, 1)` for
/// `n` steps, with a fundamental-domain fixed point `y in [1/2, f0(1/2))`.
pub fn boundary_approx(
    model: &FiberModel,
    target: &BoundaryTarget,
    delta: f64,
    n: usize,
) -> Result<BoundaryApproxTrace> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(SkewError::InvalidParameter("delta must lie in (0, 1/2)".into()));
    }
    if n == 0 || target.sequence.is_empty() {
        return Err(SkewError::InvalidParameter("need n >= 1 and a nonempty target".into()));
    }
    if target.periodic {
        if target.sequence.count_ones() % 2 == 1 {
            return Err(SkewError::InvalidParameter(
                "a periodic target word needs an even number of ones".into(),
            ));
        }
        let chi = exposed_exponent(model, &target.sequence, Side::Right);
        if chi.abs() > 1e-9 {
            return Err(SkewError::InvalidParameter(format!(
                "target exponent {chi} is not zero"
            )));
        }
    }
    // advance n until the prefix contains an odd number of ones
    let requested_n = n;
    let mut n = n;
    let mut ones = (0..n)
        .map(|i| target.symbol(i).map(|s| s as usize))
        .sum::<Option<usize>>()
        .ok_or_else(|| SkewError::InvalidParameter("target sequence shorter than n".into()))?;
    while ones % 2 == 0 {
        let s = target
            .symbol(n)
            .ok_or_else(|| SkewError::InvalidParameter("target sequence has no odd prefix".into()))?;
        ones += s as usize;
        n += 1;
        if n > requested_n + 100_000 {
            return Err(SkewError::InvalidParameter("target sequence has no odd prefix".into()));
        }
    }
    let prefix = Word::new((0..n).map(|i| target.symbol(i).unwrap()).collect())?;

    let l0 = [model.f0_deriv(FiberPoint::ZERO).ln(), model.f0_deriv(FiberPoint::ONE).ln()];
    let l1 = [
        model.deriv(1, FiberPoint::ZERO).abs().ln(),
        model.deriv(1, FiberPoint::ONE).abs().ln(),
    ];
    let (mut p, mut q, mut r, mut s) = (0usize, 0usize, 0usize, 0usize);
    let mut phi = 0.0f64;
    let mut psi = 0.0f64;
    let mut side = Side::Right;
    for &sym in prefix.iter() {
        match (sym, side) {
            (0, Side::Right) => {
                p += 1;
                phi += l0[1];
            }
            (0, Side::Left) => {
                q += 1;
                phi += l0[0];
            }
            (_, Side::Right) => {
                r += 1;
                phi += l1[1];
            }
            (_, Side::Left) => {
                s += 1;
                phi += l1[0];
            }
        }
        if sym == 1 {
            side = side.flip();
        }
        psi = psi.max(phi.abs());
    }
    let phi_direct = model.eval_word_log(&prefix, FiberPoint::ONE).1;

    let root_n = (n as f64).sqrt();
    let local_distortion = distortion(model, delta * (-root_n).exp())?;
    let delta_n = delta * (-2.0 * psi.max(root_n)).exp() * (-(n as f64) * local_distortion).exp();
    if !(delta_n > 0.0) {
        return Err(SkewError::PrecisionLoss(format!("delta(n) underflows at n = {n}")));
    }

    const CAP: usize = 10_000_000;
    let half = FiberPoint::new(0.5);
    let mut x = half;
    let mut big_n = 0usize;
    loop {
        x = model.f0(x);
        big_n += 1;
        if x.side == Side::Right && x.dist <= delta_n {
            break;
        }
        if big_n > CAP {
            return Err(SkewError::PrecisionLoss("N(n) search did not terminate".into()));
        }
    }
    if x.is_boundary() {
        return Err(SkewError::PrecisionLoss("f0^N(1/2) rounded onto the endpoint".into()));
    }
    for &sym in prefix.iter() {
        x = model.apply(sym, x);
        if x.is_boundary() {
            return Err(SkewError::PrecisionLoss("orbit rounded onto an endpoint".into()));
        }
    }
    let mut big_m = 0usize;
    while x.value() < 0.5 {
        x = model.f0(x);
        big_m += 1;
        if big_m > CAP {
            return Err(SkewError::PrecisionLoss("M(n) search did not terminate".into()));
        }
    }

    let mut eta = Word::zeros(big_n);
    for &sym in prefix.iter() {
        eta.push(sym);
    }
    for _ in 0..big_m {
        eta.push(0);
    }
    let (_, dg, sign) = model.eval_word_log(&eta, half);
    if sign > 0.0 {
        return Err(SkewError::OrientationError(dg.exp()));
    }
    let h = |y: f64| model.eval_word(&eta, FiberPoint::new(y)).0.value() - y;
    let lo = 0.5;
    let hi = model.f0(half).value();
    let y = if h(lo) == 0.0 {
        lo
    } else {
        if !(h(lo) > 0.0 && h(hi) < 0.0) {
            return Err(SkewError::NoSolution(
                "return map has no sign change on [1/2, f0(1/2))".into(),
            ));
        }
        crate::fiber::bisect(h, lo, hi, 1e-16)
    };
    if !(y >= lo && y < hi) {
        return Err(SkewError::NoSolution(format!("fixed point {y} left [1/2, f0(1/2))")));
    }
    let yp = FiberPoint::new(y);
    let orbit = PeriodicOrbit::from_fixed_point(model, eta.clone(), yp);
    let pts = orbit_points(model, &eta, yp);
    let min_boundary_distance = pts.iter().map(|p| p.dist).fold(f64::INFINITY, f64::min);
    if !(min_boundary_distance > 0.0) {
        return Err(SkewError::PrecisionLoss("orbit touches the exposed piece".into()));
    }
    let measure = periodic_measure(model, &orbit);
    let distance_to_target = weakstar_distance(&measure, &target.measure(), &TestFamily::default());
    Ok(BoundaryApproxTrace {
        requested_n,
        n,
        delta,
        prefix,
        p,
        q,
        r,
        s,
        phi,
        phi_direct,
        psi,
        local_distortion,
        delta_n,
        big_n,
        big_m,
        eta,
        y,
        return_derivative: sign * dg.exp(),
        orbit,
        min_boundary_distance,
        distance_to_target,
        measure,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTriple {
    pub abs_exponent: f64,
    pub middle_mass: f64,
    pub local_distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentBoundaryReport {
    pub delta: f64,
    pub triples: Vec<BoundaryTriple>,
    pub k1: f64,
    pub k2: f64,
    pub feasible: bool,
}

/// Fraction of the orbit inside `[delta, 1 - delta]`.
pub fn middle_mass(model: &FiberModel, orbit: &PeriodicOrbit, delta: f64) -> f64 {
    let pts = orbit_points(model, &orbit.word, orbit.point);
    pts.iter().filter(|p| p.dist >= delta).count() as f64 / pts.len() as f64
}

/// Triples `(|chi|, middle mass, Delta(delta))` and the smallest `K1 + K2`
/// with `|chi| <= K1 * mass + K2 * Delta` for every orbit of the batch.
pub fn exponent_boundary_check(
    model: &FiberModel,
    orbits: &[PeriodicOrbit],
    delta: f64,
) -> Result<ExponentBoundaryReport> {
    let dist = distortion(model, delta)?;
    let triples: Vec<BoundaryTriple> = orbits
        .iter()
        .map(|o| BoundaryTriple {
            abs_exponent: o.exponent.abs(),
            middle_mass: middle_mass(model, o, delta),
            local_distortion: dist,
        })
        .collect();
    let rows: Vec<[f64; 3]> =
        triples.iter().map(|t| [t.middle_mass, t.local_distortion, t.abs_exponent]).collect();
    let (k1, k2, feasible) = match min_sum_lp(&rows) {
        Some((a, b)) => (a, b, true),
        None => (f64::INFINITY, f64::INFINITY, false),
    };
    Ok(ExponentBoundaryReport { delta, triples, k1, k2, feasible })
}

/// Minimise `k1 + k2` subject to `a k1 + b k2 >= c` for every row `[a, b, c]`
/// and `k1, k2 >= 0`, by enumerating the vertices of the feasible region.
pub fn min_sum_lp(rows: &[[f64; 3]]) -> Option<(f64, f64)> {
    let mut lines: Vec<[f64; 3]> = rows.to_vec();
    lines.push([1.0, 0.0, 0.0]);
    lines.push([0.0, 1.0, 0.0]);
    let feasible = |k1: f64, k2: f64| {
        k1 >= 0.0
            && k2 >= 0.0
            && rows.iter().all(|r| r[0] * k1 + r[1] * k2 >= r[2] - 1e-12 * r[2].abs().max(1.0))
    };
    let mut best: Option<(f64, f64)> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let [a1, b1, c1] = lines[i];
            let [a2, b2, c2] = lines[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-300 {
                continue;
            }
            let k1 = (c1 * b2 - c2 * b1) / det;
            let k2 = (a1 * c2 - a2 * c1) / det;
            if feasible(k1, k2) && best.map_or(true, |(x, y)| k1 + k2 < x + y) {
                best = Some((k1.max(0.0), k2.max(0.0)));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorRelation {
    pub chi: f64,
    pub chi_mirror: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub zero_frequency: f64,
    pub same_period: bool,
    /// the mirrored orbit's endpoint derivatives equal the original symbols
    /// evaluated at the opposite endpoint
    pub derivative_multiset_matches: bool,
}

/// Sum of the exponents of an exposed periodic measure and its mirror image,
/// against `N0 log(f0'(0) f0'(1)) + N1 log|f1'(0) f1'(1)|` with `N0` the
/// frequency of the base symbol 0.
pub fn mirror_exponent_relation(model: &FiberModel, ex: &ExPeriodicPoint) -> MirrorRelation {
    let word = ex.word();
    let mirrored = ex.mirrored();
    let chi = exposed_exponent(model, &word, ex.start_side());
    let chi_mirror = exposed_exponent(model, &mirrored.word(), mirrored.start_side());
    let n = word.len() as f64;
    let zero_frequency = word.count_zeros() as f64 / n;
    let d = |sym: u8, side: Side| model.deriv(sym, FiberPoint { side, dist: 0.0 }).abs();
    let rhs = zero_frequency * (d(0, Side::Left) * d(0, Side::Right)).ln()
        + (1.0 - zero_frequency) * (d(1, Side::Left) * d(1, Side::Right)).ln();
    let mut mine: Vec<f64> = mirrored.symbols.iter().map(|s| d(s.symbol, s.side)).collect();
    let mut swapped: Vec<f64> = ex.symbols.iter().map(|s| d(s.symbol, s.side.flip())).collect();
    mine.sort_by(f64::total_cmp);
    swapped.sort_by(f64::total_cmp);
    MirrorRelation {
        chi,
        chi_mirror,
        lhs: chi + chi_mirror,
        rhs,
        zero_frequency,
        same_period: mirrored.period() == ex.period(),
        derivative_multiset_matches: mine == swapped,
    }
}
