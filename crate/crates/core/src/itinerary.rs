//! Fundamental domains, expanding and contracting itineraries, periodic
//! orbits near prescribed points, density scans and connecting words.
//!
//! The contracting side works in the inverse system `g0 = f0^-1, g1 = f1`,
//! where contracting orbits of `f` become expanding ones.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::dynamics::{OrbitClass, PeriodicOrbit};
use crate::error::{Result, SkewError};
use crate::fiber::{check_hypotheses, FiberModel, FiberPoint};
use crate::symbolic::Word;

const GRID: usize = 128;
const COVER_CAP: usize = 10_000;
const PULLBACK_CAP: usize = 1_000;
const MAX_HALVINGS: usize = 40;
const MAX_G_POWER: usize = 2_000;

/// Which iterated function system a word is read in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `f0, f1`
    Forward,
    /// `f0^-1, f1`
    Backward,
}

/// One step of the chosen system: image point and `log|derivative|`.
fn step(model: &FiberModel, dir: Direction, sym: u8, p: FiberPoint) -> (FiberPoint, f64) {
    match (dir, sym) {
        (_, 1) => (p.reflect(), 0.0),
        (Direction::Forward, _) => (model.f0(p), model.f0_deriv(p).ln()),
        (Direction::Backward, _) => {
            let q = model.f0_inv(p);
            (q, -model.f0_deriv(q).ln())
        }
    }
}

/// Image, `log|derivative|` and orientation of a word read in `dir`.
pub fn eval_in(model: &FiberModel, dir: Direction, word: &[u8], p: FiberPoint) -> (FiberPoint, f64, f64) {
    let mut q = p;
    let mut log_abs = 0.0;
    let mut sign = 1.0;
    for &s in word {
        let (r, l) = step(model, dir, s, q);
        if s == 1 {
            sign = -sign;
        }
        log_abs += l;
        q = r;
    }
    (q, log_abs, sign)
}

/// Closed interval with endpoints ordered by value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: FiberPoint,
    pub hi: FiberPoint,
}

fn less(a: &FiberPoint, b: &FiberPoint) -> bool {
    a.minus(b) < 0.0
}

impl Interval {
    pub fn new(a: FiberPoint, b: FiberPoint) -> Self {
        if less(&b, &a) {
            Interval { lo: b, hi: a }
        } else {
            Interval { lo: a, hi: b }
        }
    }

    pub fn from_values(a: f64, b: f64) -> Self {
        Interval::new(FiberPoint::new(a), FiberPoint::new(b))
    }

    pub fn length(&self) -> f64 {
        self.hi.minus(&self.lo)
    }

    pub fn contains(&self, p: &FiberPoint) -> bool {
        !less(p, &self.lo) && !less(&self.hi, p)
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Evenly spaced points, endpoints included.
    pub fn grid(&self, n: usize) -> Vec<FiberPoint> {
        let len = self.length();
        (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                if t <= 0.5 {
                    offset(self.lo, t * len)
                } else {
                    offset(self.hi, -(1.0 - t) * len)
                }
            })
            .collect()
    }

    fn image(&self, model: &FiberModel, dir: Direction, word: &[u8]) -> Interval {
        Interval::new(eval_in(model, dir, word, self.lo).0, eval_in(model, dir, word, self.hi).0)
    }
}

/// `p + h`, keeping the accuracy of `p`'s representation where possible.
fn offset(p: FiberPoint, h: f64) -> FiberPoint {
    match p.side {
        crate::fiber::Side::Left => FiberPoint::left(p.dist + h),
        crate::fiber::Side::Right => FiberPoint::right(p.dist - h),
    }
}

fn min_log_deriv(model: &FiberModel, dir: Direction, word: &[u8], iv: &Interval) -> f64 {
    iv.grid(GRID)
        .into_iter()
        .map(|p| eval_in(model, dir, word, p).1)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDomains {
    pub eps0: f64,
    /// solved `eps*` with `f0^N(eps*) = 1 - eps*`
    pub eps: f64,
    pub n: usize,
    pub i0: Interval,
    pub i1: Interval,
    /// `f0^-1(eps*)`, the lower end of the pullback strip
    pub strip_lo: f64,
    pub matching_residual: f64,
    pub lambda: f64,
    pub kappa: f64,
    /// `kappa / lambda`
    pub expansion_floor: f64,
    /// smallest `(f0^N)'` over a `10^4` grid of `I0`
    pub min_derivative: f64,
    /// `1 - f0^2(1 - eps*)`
    pub delta_eps: f64,
    /// bound on `M(H)` implied by the geometry of the domains
    pub m_bound: usize,
}

/// Solve `f0^N(eps) = 1 - eps` near `eps0`. With `n_hint = None`, `N` is the
/// smallest integer with `f0^N(eps0) >= 1 - eps0`.
pub fn fundamental_domains(model: &FiberModel, eps0: f64, n_hint: Option<usize>) -> Result<FundamentalDomains> {
    if !(eps0 > 0.0 && eps0 < 0.25) {
        return Err(SkewError::InvalidParameter("eps0 must lie in (0, 0.25)".into()));
    }
    for k in 0..=100 {
        let d = eps0 * k as f64 / 100.0;
        if model.f0_deriv(FiberPoint::left(d)) <= 1.0 || model.f0_deriv(FiberPoint::right(d)) >= 1.0 {
            return Err(SkewError::InvalidParameter(format!(
                "eps0 = {eps0} is not inside the expanding/contracting end regions of f0"
            )));
        }
    }
    let iterate = |p: FiberPoint, n: usize| (0..n).fold(p, |q, _| model.f0(q));
    let n = match n_hint {
        Some(n) if n >= 1 => n,
        Some(_) => return Err(SkewError::InvalidParameter("N must be at least 1".into())),
        None => {
            let target = FiberPoint::right(eps0);
            let mut p = FiberPoint::left(eps0);
            let mut n = 0;
            while less(&p, &target) {
                p = model.f0(p);
                n += 1;
                if n > 1_000_000 {
                    return Err(SkewError::NoSolution("f0-orbit of eps0 does not reach 1 - eps0".into()));
                }
            }
            n
        }
    };
    // h(eps) = f0^N(eps) - (1 - eps), increasing in eps
    let h = |e: f64| iterate(FiberPoint::left(e), n).minus(&FiberPoint::right(e));
    let (mut a, mut b) = (eps0, eps0);
    let mut steps = 0;
    if h(eps0) >= 0.0 {
        while h(a) >= 0.0 {
            b = a;
            a = model.f0_inv(FiberPoint::left(a)).value();
            steps += 1;
            if steps > 200 || a <= 0.0 {
                return Err(SkewError::NoSolution(format!("no lower bracket for N = {n}")));
            }
        }
    } else {
        while h(b) < 0.0 {
            a = b;
            b = model.f0(FiberPoint::left(b)).value();
            steps += 1;
            if steps > 200 || b >= 0.5 {
                return Err(SkewError::NoSolution(format!("no upper bracket for N = {n}")));
            }
        }
    }
    let eps = crate::fiber::bisect(h, a, b, 0.0);
    let p0 = FiberPoint::left(eps);
    let matching_residual = h(eps).abs();
    let i0 = Interval::new(p0, model.f0(p0));
    let i1 = Interval::new(FiberPoint::right(eps), model.f0(FiberPoint::right(eps)));
    let lambda = model.lambda();
    let beta = model.beta();
    let kappa = lambda * lambda * (1.0 - lambda) / (beta * (beta - 1.0));
    let word = Word::zeros(n);
    let min_derivative = i0
        .grid(10_000)
        .into_iter()
        .map(|p| model.eval_word_log(&word, p).1)
        .fold(f64::INFINITY, f64::min)
        .exp();
    let delta_eps = iterate(FiberPoint::right(eps), 2).complement();
    let mut m_bound = 0;
    let mut q = FiberPoint::left(delta_eps);
    while !less(&p0, &q) {
        q = model.f0(q);
        m_bound += 1;
    }
    Ok(FundamentalDomains {
        eps0,
        eps,
        n,
        i0,
        i1,
        strip_lo: model.f0_inv(p0).value(),
        matching_residual,
        lambda,
        kappa,
        expansion_floor: kappa / lambda,
        min_derivative,
        delta_eps,
        m_bound,
    })
}

/// An interval together with a word and a lower bound for the word's
/// derivative on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalWord {
    pub domain: Interval,
    /// word in the system given by `direction`
    pub word: Word,
    pub direction: Direction,
    pub image: Interval,
    /// smallest `|derivative|` over a grid of `domain`
    pub floor: f64,
    /// number of successor steps concatenated in `word`
    pub successors: usize,
}

impl IntervalWord {
    fn build(model: &FiberModel, dir: Direction, domain: Interval, word: Word, successors: usize) -> Self {
        let image = domain.image(model, dir, &word);
        let floor = min_log_deriv(model, dir, &word, &domain).exp();
        IntervalWord { domain, word, direction: dir, image, floor, successors }
    }
}

impl FundamentalDomains {
    fn eps_point(&self) -> FiberPoint {
        self.i0.lo
    }

    /// `[f0^-1(eps*), f0(eps*)]`, where expanding successors are defined.
    pub fn successor_domain(&self) -> Interval {
        Interval::new(FiberPoint::new(self.strip_lo), self.i0.hi)
    }
}

/// Image of `H` under `0^N(H) 1 0^M(H)`, which lands back over the
/// fundamental domain.
pub fn expanding_successor(model: &FiberModel, fd: &FundamentalDomains, h: Interval) -> Result<IntervalWord> {
    let dom = fd.successor_domain();
    let slack = 1e-12;
    if h.lo.logit() < dom.lo.logit() - slack || h.hi.logit() > dom.hi.logit() + slack {
        return Err(SkewError::InvalidParameter("H must lie in [f0^-1(eps), f0(eps)]".into()));
    }
    let eps = fd.eps_point();
    let big_n = if fd.i0.contains_interval(&h) { fd.n } else { fd.n + 1 };
    let mut word = Word::zeros(big_n);
    word.push(1);
    let mut img = h.image(model, Direction::Forward, &word);
    let mut m = 0;
    while !less(&eps, &img.hi) {
        img = Interval::new(model.f0(img.lo), model.f0(img.hi));
        word.push(0);
        m += 1;
        if m > fd.m_bound.max(1) {
            return Err(SkewError::MBoundExceeded { found: m, bound: fd.m_bound });
        }
    }
    Ok(IntervalWord::build(model, Direction::Forward, h, word, 1))
}

/// Concatenate expanding successors until the image covers `[f0^-1(eps), eps]`.
pub fn expanding_cover(model: &FiberModel, fd: &FundamentalDomains, h: Interval) -> Result<IntervalWord> {
    if !(h.length() > 0.0) {
        return Err(SkewError::InvalidParameter("H must have positive length".into()));
    }
    let strip_lo = FiberPoint::new(fd.strip_lo);
    let mut word = Word::default();
    let mut cur = h;
    for k in 1..=COVER_CAP {
        let s = expanding_successor(model, fd, cur)?;
        word = word.concat(&s.word);
        cur = s.image;
        if !less(&strip_lo, &cur.lo) {
            return Ok(IntervalWord::build(model, Direction::Forward, h, word, k));
        }
    }
    Err(SkewError::IterationCap(COVER_CAP))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionData {
    /// `f0'(c) = 1`
    pub c: f64,
    pub f0_c: f64,
    pub f0_sq_c: f64,
    /// `1 / f0'(f0(c))`
    pub upsilon: f64,
    /// `f1(f0^2(c)) - f0^2(c)`, positive under (H3)
    pub h3_margin: f64,
}

impl ContractionData {
    pub fn new(model: &FiberModel) -> Result<Self> {
        let rep = check_hypotheses(model)?;
        match (rep.c, rep.upsilon, rep.f0_sq_c) {
            (Some(c), Some(upsilon), Some(f0_sq_c)) => {
                let f0_c = model.f0(FiberPoint::new(c)).value();
                Ok(ContractionData { c, f0_c, f0_sq_c, upsilon, h3_margin: 1.0 - 2.0 * f0_sq_c })
            }
            _ => Err(SkewError::InvalidParameter("model has no point with f0' = 1".into())),
        }
    }

    /// `[c, f0^2(c)]`, where contracting successors are defined.
    pub fn domain(&self) -> Interval {
        Interval::from_values(self.c, self.f0_sq_c)
    }

    /// `[f0(c), f0^2(c)]`
    pub fn target(&self) -> Interval {
        Interval::from_values(self.f0_c, self.f0_sq_c)
    }
}

/// Image of `H` under `g1` followed by the first run of `g0` that brings the
/// lower end below `f0(c)`; the word is read in the inverse system.
pub fn contracting_successor(model: &FiberModel, cd: &ContractionData, h: Interval) -> Result<IntervalWord> {
    let dom = cd.domain();
    let slack = 1e-12;
    if h.lo.value() < dom.lo.value() - slack || h.hi.value() > dom.hi.value() + slack {
        return Err(SkewError::InvalidParameter("H must lie in [c, f0^2(c)]".into()));
    }
    let f0c = FiberPoint::new(cd.f0_c);
    let mut word = Word::new(vec![1])?;
    let mut img = h.image(model, Direction::Backward, &word);
    let mut i = 0;
    while !less(&img.lo, &f0c) {
        img = Interval::new(model.f0_inv(img.lo), model.f0_inv(img.hi));
        word.push(0);
        i += 1;
        if i > PULLBACK_CAP {
            return Err(SkewError::IterationCap(PULLBACK_CAP));
        }
    }
    Ok(IntervalWord::build(model, Direction::Backward, h, word, 1))
}

/// Concatenate contracting successors until the image covers `[f0(c), f0^2(c)]`.
pub fn contracting_cover(model: &FiberModel, cd: &ContractionData, h: Interval) -> Result<IntervalWord> {
    if !(h.length() > 0.0) {
        return Err(SkewError::InvalidParameter("H must have positive length".into()));
    }
    let top = FiberPoint::new(cd.f0_sq_c);
    let mut word = Word::default();
    let mut cur = h;
    for k in 1..=COVER_CAP {
        let s = contracting_successor(model, cd, cur)?;
        word = word.concat(&s.word);
        cur = s.image;
        if !less(&cur.hi, &top) {
            return Ok(IntervalWord::build(model, Direction::Backward, h, word, k));
        }
    }
    Err(SkewError::IterationCap(COVER_CAP))
}

/// Candidate return words `0^j`, `0^j 1`, `1 0^j` in increasing length.
fn return_words() -> impl Iterator<Item = Word> {
    (0..=MAX_G_POWER).flat_map(|j| {
        let z = Word::zeros(j);
        let mut a = z.clone();
        a.push(1);
        let mut b = Word::new(vec![1]).unwrap();
        b = b.concat(&z);
        [z, a, b]
    })
}

/// Root of `f_[w](x) - x` (read in `dir`) on `iv`, where the displacement
/// changes sign.
fn fixed_point_in(model: &FiberModel, dir: Direction, word: &[u8], iv: &Interval) -> Option<FiberPoint> {
    let disp = |p: FiberPoint| eval_in(model, dir, word, p).0.logit() - p.logit();
    let (da, db) = (disp(iv.lo), disp(iv.hi));
    if da == 0.0 {
        return Some(iv.lo);
    }
    if db == 0.0 {
        return Some(iv.hi);
    }
    if (da > 0.0) == (db > 0.0) {
        return None;
    }
    let (mut lo, mut hi) = (iv.lo.logit(), iv.hi.logit());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let dm = disp(FiberPoint::from_logit(mid));
        if dm == 0.0 {
            return Some(FiberPoint::from_logit(mid));
        }
        if (dm > 0.0) == (da > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(FiberPoint::from_logit(0.5 * (lo + hi)))
}

fn orbit_from(model: &FiberModel, dir: Direction, word: Word, p: FiberPoint) -> PeriodicOrbit {
    let forward = match dir {
        Direction::Forward => word,
        Direction::Backward => word.reversed(),
    };
    PeriodicOrbit::from_fixed_point(model, forward, p)
}

fn neighbourhood(p: f64, r: f64) -> Option<Interval> {
    if p - r <= 0.0 || p + r >= 1.0 {
        None
    } else {
        Some(Interval::from_values(p - r, p + r))
    }
}

/// Word `R` taking `p` into the interior of the successor domain, plus
/// the landing point.
type Pullback = (Word, FiberPoint);

fn expanding_pullback(model: &FiberModel, fd: &FundamentalDomains, p: f64, radius: f64) -> Result<Pullback> {
    let strip_lo = FiberPoint::new(fd.strip_lo);
    let eps = fd.eps_point();
    let mut q = FiberPoint::new(p);
    let mut word = Word::default();
    let not_found = || SkewError::NotFound(format!("pullback of p = {p} at radius {radius}"));
    let push = |q: &mut FiberPoint, s: u8, word: &mut Word| -> Result<()> {
        *q = model.apply(s, *q);
        word.push(s);
        if word.len() > PULLBACK_CAP {
            Err(not_found())
        } else {
            Ok(())
        }
    };
    if !less(&q, &eps) {
        let one_minus_eps = FiberPoint::right(fd.eps);
        while !less(&one_minus_eps, &q) {
            push(&mut q, 0, &mut word)?;
        }
        push(&mut q, 1, &mut word)?;
    }
    while less(&q, &strip_lo) {
        push(&mut q, 0, &mut word)?;
    }
    let mid = 0.5 * (fd.strip_lo + fd.eps);
    if q.value() < mid {
        push(&mut q, 0, &mut word)?;
    }
    Ok((word, q))
}

fn contracting_pullback(model: &FiberModel, cd: &ContractionData, p: f64, radius: f64) -> Result<Pullback> {
    let top = FiberPoint::new(cd.f0_sq_c);
    let mut q = FiberPoint::new(p);
    let mut word = Word::default();
    if q.value() < cd.c {
        q = q.reflect();
        word.push(1);
    }
    while less(&top, &q) {
        q = model.f0_inv(q);
        word.push(0);
        if word.len() > PULLBACK_CAP {
            return Err(SkewError::NotFound(format!("pullback of p = {p} at radius {radius}")));
        }
    }
    if q.value() > 0.5 * (cd.f0_c + cd.f0_sq_c) {
        q = model.f0_inv(q);
        word.push(0);
    }
    Ok((word, q))
}

/// Shared construction: `W = R . cover . G` with `f_W(I_p) ⊇ I_p` and
/// `|f_W'| > 1` on `I_p`, shrinking the radius until both hold.
fn periodic_near(
    model: &FiberModel,
    dir: Direction,
    p: f64,
    radius: f64,
    pullback: &Word,
    domain: &Interval,
    cover: &dyn Fn(Interval) -> Result<IntervalWord>,
) -> Result<PeriodicOrbit> {
    let mut r = radius;
    for _ in 0..=MAX_HALVINGS {
        let attempt = (|| -> Option<PeriodicOrbit> {
            let ip = neighbourhood(p, r)?;
            let h = ip.image(model, dir, pullback);
            if !domain.contains_interval(&h) {
                return None;
            }
            let c = cover(h).ok()?;
            let g = return_words().find(|g| c.image.image(model, dir, g).contains_interval(&ip))?;
            let w = pullback.concat(&c.word).concat(&g);
            if !ip.image(model, dir, &w).contains_interval(&ip) || min_log_deriv(model, dir, &w, &ip) <= 0.0 {
                return None;
            }
            let x = fixed_point_in(model, dir, &w, &ip)?;
            Some(orbit_from(model, dir, w, x))
        })();
        if let Some(o) = attempt {
            return Ok(o);
        }
        r *= 0.5;
    }
    Err(SkewError::NotFound(format!("no periodic orbit near {p} within radius {radius}")))
}

/// For models acting by isometries of a translation lift every word is
/// `t -> ±t + k`, so no cover ever grows. Search `0^a 1 0^b` directly.
fn isometric_periodic_near(model: &FiberModel, p: f64, radius: f64) -> Result<PeriodicOrbit> {
    let ip = neighbourhood(p, radius)
        .ok_or_else(|| SkewError::NotFound(format!("radius {radius} leaves (0,1) around {p}")))?;
    let mut best: Option<(usize, Word)> = None;
    for a in 0..=64usize {
        for b in 0..=64usize {
            if best.as_ref().is_some_and(|(len, _)| a + b >= *len) {
                continue;
            }
            let mut w = Word::zeros(a);
            w.push(1);
            w = w.concat(&Word::zeros(b));
            if fixed_point_in(model, Direction::Forward, &w, &ip).is_some() {
                best = Some((a + b, w));
            }
        }
    }
    let (_, w) = best.ok_or_else(|| SkewError::NotFound(format!("no periodic orbit near {p} within radius {radius}")))?;
    let x = fixed_point_in(model, Direction::Forward, &w, &ip).unwrap();
    Ok(PeriodicOrbit::from_fixed_point(model, w, x))
}

/// Expanding periodic orbit of the core through a point within `radius` of
/// `p`. Models with a translation lift fall back to a direct search and
/// report their orbits as nonhyperbolic.
pub fn expanding_periodic_near(model: &FiberModel, fd: &FundamentalDomains, p: f64, radius: f64) -> Result<PeriodicOrbit> {
    validate_target(p, radius)?;
    if model.lift().is_some() {
        return isometric_periodic_near(model, p, radius);
    }
    let (pull, _) = expanding_pullback(model, fd, p, radius)?;
    let dom = fd.successor_domain();
    periodic_near(model, Direction::Forward, p, radius, &pull, &dom, &|h| expanding_cover(model, fd, h))
}

/// Contracting periodic orbit of the core through a point within `radius`
/// of `p`.
pub fn contracting_periodic_near(model: &FiberModel, cd: &ContractionData, p: f64, radius: f64) -> Result<PeriodicOrbit> {
    validate_target(p, radius)?;
    if model.lift().is_some() {
        return isometric_periodic_near(model, p, radius);
    }
    let (pull, _) = contracting_pullback(model, cd, p, radius)?;
    let dom = cd.domain();
    periodic_near(model, Direction::Backward, p, radius, &pull, &dom, &|h| contracting_cover(model, cd, h))
}

fn validate_target(p: f64, radius: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SkewError::InvalidParameter("p must lie in (0,1)".into()));
    }
    if !(radius > 0.0) {
        return Err(SkewError::InvalidParameter("radius must be positive".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityScan {
    pub x0: f64,
    pub direction: Direction,
    pub mesh: f64,
    pub nodes: usize,
    pub cells: usize,
    pub max_gap: f64,
    /// the largest gap, as `(left, right)`
    pub gap: (f64, f64),
}

fn max_gap(values: &mut Vec<f64>) -> (f64, (f64, f64)) {
    values.push(0.0);
    values.push(1.0);
    values.sort_by(f64::total_cmp);
    let mut best = (0.0, (0.0, 0.0));
    for w in values.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], (w[0], w[1]));
        }
    }
    best
}

/// Breadth-first exploration of the orbit of `x0` under the IFS (or the
/// inverse IFS), keeping one representative per cell of size `mesh/4`.
pub fn density_scan(model: &FiberModel, x0: f64, direction: Direction, mesh: f64, budget: usize) -> Result<DensityScan> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(SkewError::InvalidParameter("x0 must lie in (0,1)".into()));
    }
    if !(mesh > 0.0 && mesh < 1.0) {
        return Err(SkewError::InvalidParameter("mesh must lie in (0,1)".into()));
    }
    let cell = mesh / 4.0;
    let key = |p: &FiberPoint| (p.value() / cell).floor() as i64;
    let start = FiberPoint::new(x0);
    let mut seen = HashSet::from([key(&start)]);
    let mut reps = vec![x0];
    let mut queue = VecDeque::from([start]);
    let mut nodes = 0;
    while let Some(p) = queue.pop_front() {
        nodes += 1;
        if nodes > budget {
            let (g, _) = max_gap(&mut reps);
            return Err(SkewError::BudgetExhausted { budget, partial_gap: g });
        }
        for s in [0u8, 1] {
            let q = step(model, direction, s, p).0;
            if seen.insert(key(&q)) {
                reps.push(q.value());
                queue.push_back(q);
            }
        }
    }
    let cells = seen.len();
    let (g, gap) = max_gap(&mut reps);
    Ok(DensityScan { x0, direction, mesh, nodes, cells, max_gap: g, gap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectingWord {
    /// word read in `direction`
    pub word: Word,
    pub direction: Direction,
    /// the same connection as a word of the forward system
    pub forward_word: Word,
    pub start: f64,
    pub landing: f64,
    /// local stable (forward) or unstable (backward) interval of the target
    pub target_interval: (f64, f64),
    pub nodes: usize,
}

/// Radius of the neighbourhood of `r` attracted by `word` in `dir`: the
/// largest `s = 0.25 * 2^-k` such that `r ± s` end within `s/2` of `r`
/// after 50 applications and never touch an endpoint.
fn basin_radius(model: &FiberModel, dir: Direction, word: &[u8], r: FiberPoint) -> Option<f64> {
    (0..60).map(|k| 0.25 * 0.5f64.powi(k)).find(|&s| {
        [s, -s].iter().all(|&h| {
            let mut q = offset(r, h);
            if !(q.value() > 0.0 && q.value() < 1.0) {
                return false;
            }
            for _ in 0..50 {
                q = eval_in(model, dir, word, q).0;
                if q.is_boundary() {
                    return false;
                }
            }
            q.minus(&r).abs() <= 0.5 * s
        })
    })
}

/// Word carrying the fiber point of `from` into the local stable interval of
/// `to` (contracting orbits) or, in the inverse system, into its local
/// unstable interval (expanding orbits).
pub fn connecting_word(model: &FiberModel, from: &PeriodicOrbit, to: &PeriodicOrbit, budget: usize) -> Result<ConnectingWord> {
    if from.class != to.class || to.class == OrbitClass::Nonhyperbolic {
        return Err(SkewError::InvalidParameter(
            "connecting words need two hyperbolic orbits of the same type".into(),
        ));
    }
    let (dir, target_word) = match to.class {
        OrbitClass::Contracting => (Direction::Forward, to.word.clone()),
        _ => (Direction::Backward, to.word.reversed()),
    };
    let s = basin_radius(model, dir, &target_word, to.point)
        .ok_or_else(|| SkewError::NotFound("target orbit has no measurable basin".into()))?;
    let target = Interval::new(offset(to.point, -0.5 * s), offset(to.point, 0.5 * s));
    let key = |p: &FiberPoint| (p.value() * 1e10).round() as i64;
    let mut parents: Vec<(usize, u8)> = vec![(usize::MAX, 0)];
    let mut points = vec![from.point];
    let mut seen = HashSet::from([key(&from.point)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let p = points[i];
        if target.contains(&p) {
            let mut syms = Vec::new();
            let mut j = i;
            while parents[j].0 != usize::MAX {
                syms.push(parents[j].1);
                j = parents[j].0;
            }
            syms.reverse();
            let word = Word::new(syms)?;
            let forward_word = match dir {
                Direction::Forward => word.clone(),
                Direction::Backward => word.reversed(),
            };
            return Ok(ConnectingWord {
                word,
                direction: dir,
                forward_word,
                start: from.x,
                landing: p.value(),
                target_interval: (target.lo.value(), target.hi.value()),
                nodes: points.len(),
            });
        }
        if points.len() >= budget {
            break;
        }
        for s in [0u8, 1] {
            let q = step(model, dir, s, p).0;
            if seen.insert(key(&q)) {
                parents.push((i, s));
                points.push(q);
                queue.push_back(points.len() - 1);
            }
        }
    }
    Err(SkewError::NotFound(format!(
        "no connecting word from x = {} to x = {} within {} nodes",
        from.x,
        to.x,
        points.len()
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicCertificate {
    pub forward: ConnectingWord,
    pub backward: ConnectingWord,
}

/// Connecting words both ways between two orbits.
pub fn homoclinic_certificate(model: &FiberModel, a: &PeriodicOrbit, b: &PeriodicOrbit, budget: usize) -> Result<HomoclinicCertificate> {
    Ok(HomoclinicCertificate {
        forward: connecting_word(model, a, b, budget)?,
        backward: connecting_word(model, b, a, budget)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{fiber_fixed_points, Location};

    #[test]
    fn mobius_domains_closed_form() {
        let m = FiberModel::mobius(2.0);
        let fd = fundamental_domains(&m, 0.1, None).unwrap();
        assert_eq!(fd.n, 7);
        let expect = 1.0 / (1.0 + 2f64.powf(3.5));
        assert!((fd.eps - expect).abs() < 1e-13, "{}", fd.eps);
        assert!(fd.matching_residual < 1e-12);
    }

    #[test]
    fn pld_domains_floor() {
        let p = FiberModel::pld_default();
        let fd = fundamental_domains(&p, 0.01, None).unwrap();
        assert!(fd.matching_residual < 1e-12);
        assert!((fd.expansion_floor - 1.5 * fd.kappa).abs() < 1e-12);
        assert!(fd.min_derivative >= fd.expansion_floor);
    }

    #[test]
    fn expanding_successor_on_i0() {
        let p = FiberModel::pld_default();
        let fd = fundamental_domains(&p, 0.01, None).unwrap();
        let s = expanding_successor(&p, &fd, fd.i0).unwrap();
        assert_eq!(&s.word[..fd.n + 1], &Word::zeros(fd.n).concat(&Word::new(vec![1]).unwrap())[..]);
        assert!(s.floor >= fd.kappa);
        assert!(s.image.length() >= fd.kappa * fd.i0.length());
        assert!(s.image.lo.value() >= fd.delta_eps - 1e-15);
        assert!(s.image.hi.value() <= fd.i0.hi.value() + 1e-15);
        assert!(s.image.hi.value() > fd.eps);
    }

    #[test]
    fn expanding_cover_tiny_interval() {
        let p = FiberModel::pld_default();
        let fd = fundamental_domains(&p, 0.01, None).unwrap();
        let mid = 0.5 * (fd.i0.lo.value() + fd.i0.hi.value());
        let h = Interval::from_values(mid, mid + 1e-6);
        let c = expanding_cover(&p, &fd, h).unwrap();
        let strip = fd.strip_lo..fd.eps;
        let bound = ((strip.end - strip.start) / 1e-6).ln() / fd.kappa.ln();
        assert!(c.successors as f64 <= bound.ceil());
        assert!(c.image.lo.value() <= fd.strip_lo && c.image.hi.value() >= fd.eps);
        assert!(c.floor >= fd.kappa);
    }

    #[test]
    fn contraction_data_and_successor() {
        let p = FiberModel::pld_default();
        let cd = ContractionData::new(&p).unwrap();
        assert!(cd.upsilon > 1.0 && cd.h3_margin > 0.0);
        let s = contracting_successor(&p, &cd, cd.target()).unwrap();
        assert!(s.word.len() >= 3);
        assert!(s.floor >= cd.upsilon);
        assert!(s.image.length() >= cd.upsilon * cd.target().length());
        let h = Interval::from_values(cd.c + 1e-3, cd.c + 1e-3 + 1e-7);
        let c = contracting_cover(&p, &cd, h).unwrap();
        assert!(c.image.contains_interval(&cd.target()));
        assert!(c.floor >= cd.upsilon);
    }

    #[test]
    fn periodic_near_pld() {
        let p = FiberModel::pld_default();
        let fd = fundamental_domains(&p, 0.01, None).unwrap();
        let o = expanding_periodic_near(&p, &fd, 0.5, 0.05).unwrap();
        assert_eq!(o.class, OrbitClass::Expanding);
        assert_eq!(o.location, Location::Core);
        assert!((o.x - 0.5).abs() <= 0.05);
        assert!(o.residual(&p) < 1e-10);
        let o = expanding_periodic_near(&p, &fd, fd.eps / 2.0, 0.05).unwrap();
        assert_eq!(o.class, OrbitClass::Expanding);
        assert!((o.x - fd.eps / 2.0).abs() <= 0.05);
        let cd = ContractionData::new(&p).unwrap();
        let o = contracting_periodic_near(&p, &cd, 0.5, 0.05).unwrap();
        assert_eq!(o.class, OrbitClass::Contracting);
        assert!((o.x - 0.5).abs() <= 0.05);
        assert!(o.residual(&p) < 1e-10);
        let roots = fiber_fixed_points(&p, &o.word).unwrap();
        assert!(roots.iter().any(|r| (r.x - o.x).abs() < 1e-9 && (r.exponent - o.exponent).abs() < 1e-9));
    }

    #[test]
    fn periodic_near_mobius_is_nonhyperbolic() {
        let m = FiberModel::mobius(2.0);
        let fd = fundamental_domains(&m, 0.1, None).unwrap();
        let o = expanding_periodic_near(&m, &fd, 0.5, 0.05).unwrap();
        assert!(o.exponent.abs() <= 1e-10);
        assert_eq!(o.class, OrbitClass::Nonhyperbolic);
    }

    #[test]
    fn density_scans() {
        let p = FiberModel::pld_default();
        let d = density_scan(&p, 0.3, Direction::Forward, 0.01, 1_000_000).unwrap();
        assert!(d.max_gap <= 0.02, "{}", d.max_gap);
        let m = FiberModel::mobius(2.0);
        let d = density_scan(&m, 0.3, Direction::Forward, 0.01, 1_000_000).unwrap();
        assert!((d.max_gap - 0.0931).abs() < 2e-3, "{}", d.max_gap);
        assert!(matches!(
            density_scan(&p, 0.3, Direction::Forward, 0.01, 5),
            Err(SkewError::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn connecting_words_pld() {
        let p = FiberModel::pld_default();
        let cd = ContractionData::new(&p).unwrap();
        let a = contracting_periodic_near(&p, &cd, 0.3, 0.05).unwrap();
        let b = contracting_periodic_near(&p, &cd, 0.7, 0.05).unwrap();
        let cert = homoclinic_certificate(&p, &a, &b, 1_000_000).unwrap();
        let land = p.eval_word(&cert.forward.word, a.point).0.value();
        assert!(land >= cert.forward.target_interval.0 && land <= cert.forward.target_interval.1);
        let exposed = fiber_fixed_points(&p, &"0".parse().unwrap()).unwrap();
        let top = exposed.iter().find(|o| o.x == 1.0).unwrap();
        assert!(matches!(connecting_word(&p, top, &a, 1_000_000), Err(SkewError::NotFound(_))));
        assert!(homoclinic_certificate(&p, &a, top, 1_000_000).is_err());
    }
}
