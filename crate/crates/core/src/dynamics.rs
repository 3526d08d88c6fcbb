//! Orbits of the skew product, fiber Lyapunov exponents and periodic orbits.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkewError};
use crate::fiber::{FiberModel, FiberPoint, Side, TranslationLift};
use crate::symbolic::Word;

/// Values of `chi` within this distance of 0 are called nonhyperbolic.
pub const HYPERBOLICITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Side + distance-to-endpoint arithmetic; works for every model.
    Direct,
    /// Exact translation coordinates (Möbius and arctan models only).
    Lifted,
}

#[derive(Debug, Clone)]
pub struct SkewSystem {
    pub model: FiberModel,
    pub engine: Engine,
}

impl SkewSystem {
    pub fn new(model: FiberModel) -> Self {
        SkewSystem { model, engine: Engine::Direct }
    }

    pub fn lifted(model: FiberModel) -> Result<Self> {
        if model.lift().is_none() {
            return Err(SkewError::InvalidParameter(
                "lifted engine needs a model conjugate to a translation".into(),
            ));
        }
        Ok(SkewSystem { model, engine: Engine::Lifted })
    }

    /// `F(xi, x) = (sigma xi, f_{xi_0}(x))`, returning the new fiber point and
    /// `log|f_{xi_0}'(x)|`.
    pub fn step(&self, sym: u8, p: FiberPoint) -> (FiberPoint, f64) {
        let d = self.model.deriv(sym, p).abs().ln();
        (self.model.apply(sym, p), d)
    }
}

/// A point in translation coordinates; `t = ±inf` are the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedPoint {
    pub t: f64,
}

impl LiftedPoint {
    pub fn from_fiber(lift: &TranslationLift, p: FiberPoint) -> Self {
        LiftedPoint { t: lift.lift(p) }
    }
    pub fn to_fiber(&self, lift: &TranslationLift) -> FiberPoint {
        lift.unlift(self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitClass {
    Expanding,
    Contracting,
    Nonhyperbolic,
}

impl OrbitClass {
    pub fn of(chi: f64) -> Self {
        if chi > HYPERBOLICITY_TOL {
            OrbitClass::Expanding
        } else if chi < -HYPERBOLICITY_TOL {
            OrbitClass::Contracting
        } else {
            OrbitClass::Nonhyperbolic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Core,
    Exposed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub word: Word,
    pub point: FiberPoint,
    pub x: f64,
    pub period: usize,
    pub exponent: f64,
    pub class: OrbitClass,
    pub location: Location,
}

impl PeriodicOrbit {
    /// Build the orbit record for a fixed point `p` of `f_[w]`.
    pub fn from_fixed_point(model: &FiberModel, word: Word, p: FiberPoint) -> Self {
        let (_, log_abs, _) = model.eval_word_log(&word, p);
        let exponent = log_abs / word.len() as f64;
        let location = if orbit_points(model, &word, p).iter().any(|q| q.is_boundary()) {
            Location::Exposed
        } else {
            Location::Core
        };
        PeriodicOrbit {
            period: word.len(),
            word,
            point: p,
            x: p.value(),
            exponent,
            class: OrbitClass::of(exponent),
            location,
        }
    }

    /// `|f_[w](x*) - x*|`.
    pub fn residual(&self, model: &FiberModel) -> f64 {
        model.eval_word(&self.word, self.point).0.minus(&self.point).abs()
    }
}

/// The points `x, f_{w0}(x), ..., f_{[w0..w_{n-2}]}(x)` visited along one period.
pub fn orbit_points(model: &FiberModel, word: &[u8], p: FiberPoint) -> Vec<FiberPoint> {
    let mut out = Vec::with_capacity(word.len());
    let mut q = p;
    for &s in word {
        out.push(q);
        q = model.apply(s, q);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSample {
    pub n: usize,
    pub x0: f64,
    /// at most the first 64 symbols of the driving sequence
    pub prefix: Word,
    pub value: f64,
}

/// Finite-time exponent `(1/n) log|(f_xi^n)'(x0)|`; a word shorter than `n`
/// is repeated periodically.
pub fn lyapunov_finite(system: &SkewSystem, xi: &[u8], x0: FiberPoint, n: usize) -> Result<ExponentSample> {
    if n == 0 || xi.is_empty() {
        return Err(SkewError::InvalidParameter("need n >= 1 and a nonempty word".into()));
    }
    let sum = match system.engine {
        Engine::Direct => {
            let mut p = x0;
            let mut sum = 0.0;
            for i in 0..n {
                let (q, d) = system.step(xi[i % xi.len()], p);
                sum += d;
                p = q;
            }
            sum
        }
        Engine::Lifted => {
            let lift = system.model.lift().expect("checked at construction");
            let mut t = lift.lift(x0);
            let mut sum = 0.0;
            for i in 0..n {
                let s = xi[i % xi.len()];
                if s == 0 {
                    sum += system.model.f0_deriv(lift.unlift(t)).ln();
                }
                t = lift.step(s, t);
            }
            sum
        }
    };
    let value = sum / n as f64;
    if !value.is_finite() {
        return Err(SkewError::PrecisionLoss("non-finite exponent".into()));
    }
    let prefix = Word::new(xi.iter().cycle().take(n.min(64)).copied().collect())?;
    Ok(ExponentSample { n, x0: x0.value(), prefix, value })
}

/// Exponent of the measure of maximal entropy on the exposed piece: the
/// average of `log|f_i'|` over the four endpoint derivatives.
pub fn mme_ex_exponent(model: &FiberModel) -> f64 {
    let mut s = 0.0;
    for sym in [0u8, 1] {
        for p in [FiberPoint::ZERO, FiberPoint::ONE] {
            s += model.deriv(sym, p).abs().ln();
        }
    }
    s / 4.0
}

/// Sign of `f_[w](p) - p`, measured in logit space so that it stays reliable
/// near the endpoints.
fn displacement(model: &FiberModel, word: &[u8], p: FiberPoint) -> f64 {
    model.eval_word(word, p).0.logit() - p.logit()
}

fn scan_grid() -> Vec<FiberPoint> {
    let mut g = Vec::new();
    let exps = [300, 200, 100, 60, 40, 30, 20, 16, 14, 12, 10, 9, 8, 7, 6, 5];
    for e in exps {
        g.push(FiberPoint::left(10f64.powi(-e)));
    }
    for k in 1..10_000 {
        g.push(FiberPoint::new(k as f64 * 1e-4));
    }
    for e in exps.iter().rev() {
        g.push(FiberPoint::right(10f64.powi(-e)));
    }
    g
}

fn bisect_fixed(model: &FiberModel, word: &[u8], a: FiberPoint, b: FiberPoint) -> FiberPoint {
    let (mut lo, mut hi) = (a.logit(), b.logit());
    let sign_lo = displacement(model, word, a) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let pm = FiberPoint::from_logit(mid);
        let pa = FiberPoint::from_logit(lo);
        let pb = FiberPoint::from_logit(hi);
        if pb.minus(&pa).abs() < 1e-15 * pa.dist.max(1e-300).min(1.0) {
            break;
        }
        let dm = displacement(model, word, pm);
        if dm == 0.0 {
            return pm;
        }
        if (dm > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    FiberPoint::from_logit(0.5 * (lo + hi))
}

/// All fixed points of `f_[w]` on [0,1]: a sign-change scan on a `1e-4`
/// grid (plus logarithmically spaced points near the ends), refined by
/// bisection, together with the endpoints when `w` has an even number of ones.
pub fn fiber_fixed_points(model: &FiberModel, word: &Word) -> Result<Vec<PeriodicOrbit>> {
    if word.is_empty() {
        return Err(SkewError::InvalidParameter("empty word".into()));
    }
    let even = word.count_ones() % 2 == 0;
    let mut roots: Vec<FiberPoint> = Vec::new();
    if even {
        roots.push(FiberPoint::ZERO);
    }
    let grid = scan_grid();
    let vals: Vec<f64> = grid.iter().map(|&p| displacement(model, word, p)).collect();
    let mut flat_run = 0;
    for (i, &v) in vals.iter().enumerate() {
        let scale = 1e-12 * (1.0 + grid[i].logit().abs());
        if v.abs() <= scale {
            flat_run += 1;
            if flat_run >= 3 {
                return Err(SkewError::DegenerateRoot { x: grid[i].value() });
            }
        } else {
            flat_run = 0;
        }
    }
    for i in 0..grid.len() {
        if vals[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && vals[i + 1] != 0.0 && (vals[i] > 0.0) != (vals[i + 1] > 0.0) {
            roots.push(bisect_fixed(model, word, grid[i], grid[i + 1]));
        }
    }
    if even {
        roots.push(FiberPoint::ONE);
    }
    Ok(roots
        .into_iter()
        .map(|p| PeriodicOrbit::from_fixed_point(model, word.clone(), p))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinPair {
    /// orbit with `chi >= -1e-9`
    pub nonnegative: PeriodicOrbit,
    /// orbit with `chi <= 1e-9`
    pub nonpositive: PeriodicOrbit,
}

/// Two periodic orbits following the same base word, one with nonnegative
/// and one with nonpositive exponent. For words with an odd number of ones
/// the candidates include the fixed points of `ww` (e.g. the endpoint 2-cycle).
pub fn twin_pair(model: &FiberModel, word: &Word) -> Result<TwinPair> {
    // A word acting as the identity (e.g. `11`) fixes everything; the
    // endpoints are then the natural representatives.
    let candidates = |w: &Word| match fiber_fixed_points(model, w) {
        Err(SkewError::DegenerateRoot { .. }) if w.count_ones() % 2 == 0 => Ok([FiberPoint::ZERO, FiberPoint::ONE]
            .into_iter()
            .map(|p| PeriodicOrbit::from_fixed_point(model, w.clone(), p))
            .collect()),
        r => r,
    };
    let mut cands = candidates(word)?;
    let pick = |c: &[PeriodicOrbit]| {
        let pos = c.iter().find(|o| o.exponent >= -HYPERBOLICITY_TOL).cloned();
        let neg = c.iter().find(|o| o.exponent <= HYPERBOLICITY_TOL).cloned();
        (pos, neg)
    };
    let (mut pos, mut neg) = pick(&cands);
    if (pos.is_none() || neg.is_none()) && word.count_ones() % 2 == 1 {
        cands = candidates(&word.pow(2))?;
        let (p2, n2) = pick(&cands);
        pos = pos.or(p2);
        neg = neg.or(n2);
    }
    match (pos, neg) {
        (Some(nonnegative), Some(nonpositive)) => Ok(TwinPair { nonnegative, nonpositive }),
        _ => Err(SkewError::NotFound(format!("no twin pair for word {word}"))),
    }
}

/// Exponent of an exposed periodic orbit given by its binary word and the
/// starting side.
pub fn exposed_exponent(model: &FiberModel, word: &[u8], start: Side) -> f64 {
    let p = FiberPoint { side: start, dist: 0.0 };
    model.eval_word_log(word, p).1 / word.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{MarkovChain, project_pi};

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn finite_exponents() {
        let sys = SkewSystem::new(FiberModel::mobius(2.0));
        let e = lyapunov_finite(&sys, &[0, 1, 0, 1], FiberPoint::ONE, 4).unwrap();
        assert!(e.value.abs() < 1e-15);
        let pld = SkewSystem::new(FiberModel::pld_default());
        let e = lyapunov_finite(&pld, &[0], FiberPoint::ZERO, 77).unwrap();
        assert!((e.value - 1.05f64.ln()).abs() < 1e-14);
        let lifted = SkewSystem::lifted(FiberModel::mobius(2.0)).unwrap();
        let a = lyapunov_finite(&sys, &[0, 0, 1], FiberPoint::new(0.3), 300).unwrap();
        let b = lyapunov_finite(&lifted, &[0, 0, 1], FiberPoint::new(0.3), 300).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn mme_exponent_values() {
        assert!(mme_ex_exponent(&FiberModel::mobius(2.0)).abs() < 1e-15);
        let v = mme_ex_exponent(&FiberModel::pld_default());
        assert!((v - 0.25 * 0.7f64.ln()).abs() < 1e-12);
        assert!((v + 0.0891687).abs() < 1e-6);
        assert!(mme_ex_exponent(&FiberModel::arctan()).abs() < 1e-12);
    }

    #[test]
    fn mobius_01_fixed_point() {
        let m = FiberModel::mobius(2.0);
        let fps = fiber_fixed_points(&m, &w("01")).unwrap();
        assert_eq!(fps.len(), 1);
        assert!((fps[0].x - (2.0f64.sqrt() - 1.0)).abs() < 1e-12);
        assert_eq!(fps[0].class, OrbitClass::Nonhyperbolic);
        let tp = twin_pair(&m, &w("01")).unwrap();
        assert_eq!(tp.nonnegative, tp.nonpositive);
    }

    #[test]
    fn degenerate_words_are_reported() {
        let m = FiberModel::mobius(2.0);
        assert!(matches!(fiber_fixed_points(&m, &w("0101")), Err(SkewError::DegenerateRoot { .. })));
    }

    #[test]
    fn single_zero_fixes_both_ends() {
        for m in [FiberModel::pld_default(), FiberModel::mobius(2.0)] {
            let fps = fiber_fixed_points(&m, &w("0")).unwrap();
            assert_eq!(fps.len(), 2);
            assert_eq!(fps[0].class, OrbitClass::Expanding);
            assert!((fps[0].exponent - m.beta().ln()).abs() < 1e-14);
            assert_eq!(fps[1].class, OrbitClass::Contracting);
            assert!((fps[1].exponent - m.lambda().ln()).abs() < 1e-14);
            assert!(fps.iter().all(|o| o.location == Location::Exposed));
        }
    }

    #[test]
    fn pld_orientation_reversing_word() {
        let m = FiberModel::pld_default();
        let fps = fiber_fixed_points(&m, &w("01")).unwrap();
        assert_eq!(fps.len(), 1);
        assert_eq!(fps[0].location, Location::Core);
        assert!(fps[0].residual(&m) < 1e-12);
    }

    #[test]
    fn pld_twin_with_endpoint_cycle() {
        let m = FiberModel::pld_default();
        let tp = twin_pair(&m, &w("001")).unwrap();
        let expect = (m.beta() * m.lambda()).ln() / 3.0;
        assert!(tp.nonnegative.exponent >= -HYPERBOLICITY_TOL);
        assert!(tp.nonpositive.exponent <= HYPERBOLICITY_TOL);
        let cycle = fiber_fixed_points(&m, &w("001001")).unwrap();
        let ends: Vec<_> = cycle.iter().filter(|o| o.location == Location::Exposed).collect();
        assert_eq!(ends.len(), 2);
        for e in ends {
            assert!((e.exponent - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_word_twins_are_endpoints() {
        let m = FiberModel::pld_default();
        assert!(matches!(fiber_fixed_points(&m, &w("11")), Err(SkewError::DegenerateRoot { .. })));
        let tp = twin_pair(&m, &w("11")).unwrap();
        assert_eq!(tp.nonnegative.exponent, 0.0);
        assert_eq!(tp.nonnegative.location, Location::Exposed);
        let tp = twin_pair(&m, &w("1")).unwrap();
        assert!((tp.nonnegative.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn periodic_exponent_matches_finite_time() {
        let m = FiberModel::pld_default();
        let sys = SkewSystem::new(m.clone());
        for word in ["01", "0011", "00101"] {
            for o in fiber_fixed_points(&m, &w(word)).unwrap() {
                for k in [1usize, 10, 100] {
                    let e = lyapunov_finite(&sys, &o.word, o.point, k * o.period).unwrap();
                    assert!((e.value - o.exponent).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn mobius_interior_orbits_have_zero_exponent() {
        let m = FiberModel::mobius(2.0);
        for word in ["01", "001", "0001", "00011", "0100011", "1000"] {
            for o in fiber_fixed_points(&m, &w(word)).unwrap() {
                if o.location == Location::Core {
                    assert!(o.exponent.abs() <= 1e-10, "{word}: {}", o.exponent);
                }
            }
        }
    }

    #[test]
    fn parry_sampled_exponent_is_close() {
        let chain = MarkovChain::default();
        let path = chain.parry_measure().sample_path(200_000, 3);
        let xi = project_pi(&path);
        let m = FiberModel::pld_default();
        let x0 = FiberPoint { side: path[0].side, dist: 0.0 };
        let e = lyapunov_finite(&SkewSystem::new(m.clone()), &xi, x0, xi.len()).unwrap();
        assert!((e.value - mme_ex_exponent(&m)).abs() < 5e-3);
    }

    #[test]
    fn exponent_continuity_in_the_middle() {
        let m = FiberModel::pld_default();
        let sys = SkewSystem::new(m.clone());
        let o = &fiber_fixed_points(&m, &w("01")).unwrap()[0];
        let a = lyapunov_finite(&sys, &[0, 1], o.point, 1000).unwrap();
        let b = lyapunov_finite(&sys, &[0, 1], FiberPoint::new(o.x + 1e-6), 1000).unwrap();
        assert!((a.value - b.value).abs() <= 1e-3);
    }
}
