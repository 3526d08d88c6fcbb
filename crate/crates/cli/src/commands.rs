use std::fmt::Write as _;

use serde_json::{json, Value};
use skewprod::dynamics::{
    fiber_fixed_points, lyapunov_finite, mme_ex_exponent, Location, OrbitClass, PeriodicOrbit, SkewSystem,
};
use skewprod::fiber::{check_hypotheses, FiberModel, FiberPoint};
use skewprod::itinerary::{
    contracting_periodic_near, contracting_successor, density_scan, expanding_periodic_near, expanding_successor,
    fundamental_domains, homoclinic_certificate, ContractionData,
};
use skewprod::measure::{boundary_approx, exponent_boundary_check, mirror_exponent_relation, BoundaryTarget};
use skewprod::symbolic::{enumerate_ex_orbits, project_pi, MarkovChain, Word};
use skewprod::walk::{
    gap_statistics, ks_statistic, nontransitivity_witness, occupation_decay, particle_grid, reduce_word,
    vplus_steps_direct, vplus_steps_first_return, vplus_walk,
};
use skewprod::{ErrorCategory, SkewError};

use crate::config::{check_open_unit, section, EngineChoice, ExperimentConfig, MmeConfig, OrbitKind};
use crate::report::{Output, Table};

#[derive(Debug)]
pub enum CmdError {
    Validation(String),
    Lib(SkewError),
}

impl From<SkewError> for CmdError {
    fn from(e: SkewError) -> Self {
        CmdError::Lib(e)
    }
}

impl From<String> for CmdError {
    fn from(e: String) -> Self {
        CmdError::Validation(e)
    }
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Validation(_) => 2,
            CmdError::Lib(e) => match e.category() {
                ErrorCategory::Validation => 2,
                ErrorCategory::Search => 3,
                ErrorCategory::Numerical => 4,
            },
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Validation(s) => write!(f, "invalid config: {s}"),
            CmdError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CmdResult = Result<Output<Value>, CmdError>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

fn parse_word(name: &str, s: &str) -> Result<Word, CmdError> {
    s.parse::<Word>().map_err(|e| CmdError::Validation(format!("`{name}`: {e}")))
}

fn output(result: Value, summary: String) -> Output<Value> {
    Output { result, summary, tables: Vec::new() }
}

pub fn check_hypotheses_cmd(model: &FiberModel) -> CmdResult {
    let r = check_hypotheses(model)?;
    let mut s = String::new();
    writeln!(s, "beta = {:.10}, lambda = {:.10}, kappa = {:.10}", r.beta, r.lambda, r.kappa).unwrap();
    if let (Some(c), Some(u)) = (r.c, r.upsilon) {
        writeln!(s, "c = {c:.10}, upsilon = {u:.10}").unwrap();
    }
    writeln!(s, "H1 {:?}  H2 {:?}  H3 {:?}  H4 {:?}", r.h1, r.h2, r.h3, r.h4).unwrap();
    writeln!(s, "commutation defect = {:.3e}", r.commutation_defect).unwrap();
    Ok(output(
        json!({ "model": to_value(model.spec()), "solved_knots": model.solved_knots(), "hypotheses": to_value(&r) }),
        s,
    ))
}

pub fn parry_cmd() -> CmdResult {
    let d = MarkovChain::default().parry_measure();
    let s = format!(
        "entropy = {:.15} (log 2 = {:.15})\nperron root = {:.15}\npi = {:?}\n",
        d.entropy,
        2f64.ln(),
        d.perron,
        d.pi
    );
    Ok(output(to_value(&d), s))
}

pub fn mme_cmd(model: &FiberModel, cfg: Option<&MmeConfig>) -> CmdResult {
    let default = MmeConfig::default();
    let cfg = cfg.unwrap_or(&default);
    if cfg.samples == 0 {
        return Err(CmdError::Validation("`samples` must be at least 1".into()));
    }
    let d = MarkovChain::default().parry_measure();
    let exact = mme_ex_exponent(model);
    let path = d.sample_path(cfg.samples, cfg.seed);
    let xi = project_pi(&path);
    let x0 = FiberPoint { side: path[0].side, dist: 0.0 };
    let mc = lyapunov_finite(&SkewSystem::new(model.clone()), &xi, x0, xi.len())?;
    let s = format!(
        "entropy = {:.15}\nexponent (formula) = {exact:.10}\nexponent (Monte Carlo, {} samples, seed {}) = {:.10}\n",
        d.entropy, cfg.samples, cfg.seed, mc.value
    );
    Ok(output(
        json!({
            "entropy": d.entropy,
            "stationary": d.pi,
            "exponent": exact,
            "monte_carlo": { "samples": cfg.samples, "seed": cfg.seed, "exponent": mc.value },
        }),
        s,
    ))
}

pub fn lyapunov_cmd(model: &FiberModel, cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.lyapunov, "lyapunov")?;
    let w = parse_word("word", &c.word)?;
    if !(0.0..=1.0).contains(&c.x0) || c.n == 0 {
        return Err(CmdError::Validation("need `x0` in [0,1] and `n` >= 1".into()));
    }
    let sys = match c.engine {
        EngineChoice::Direct => SkewSystem::new(model.clone()),
        EngineChoice::Lifted => SkewSystem::lifted(model.clone())?,
    };
    let mut ns = Vec::new();
    let mut k = 1usize;
    while k < c.n {
        ns.push(k);
        k *= 10;
    }
    ns.push(c.n);
    let samples = ns
        .iter()
        .map(|&n| lyapunov_finite(&sys, &w, FiberPoint::new(c.x0), n))
        .collect::<Result<Vec<_>, _>>()?;
    let last = samples.last().unwrap();
    let s = format!("word {w}, x0 = {}, n = {}: exponent = {:.10}\n", c.x0, c.n, last.value);
    let rows = samples.iter().map(|e| vec![e.n.to_string(), format!("{:e}", e.value)]).collect();
    Ok(Output {
        result: json!({ "word": w, "samples": to_value(&samples) }),
        summary: s,
        tables: vec![Table { name: "lyapunov".into(), header: vec!["n", "exponent"], rows }],
    })
}

/// Primitive binary words of length `p` that are minimal among their rotations.
fn necklaces(p: usize) -> Vec<Word> {
    (0u32..(1 << p))
        .filter_map(|bits| {
            let syms: Vec<u8> = (0..p).map(|i| ((bits >> (p - 1 - i)) & 1) as u8).collect();
            let w = Word::new(syms).ok()?;
            let rots: Vec<Word> = (1..p).map(|r| w.rotated(r)).collect();
            rots.iter().all(|r| r.symbols() > w.symbols()).then_some(w)
        })
        .collect()
}

pub fn periodic_scan_cmd(model: &FiberModel, cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.periodic_scan, "periodic_scan")?;
    if !(1..=16).contains(&c.max_period) {
        return Err(CmdError::Validation("`max_period` must lie in 1..=16".into()));
    }
    check_open_unit("delta", c.delta, 0.5)?;
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut degenerate = Vec::new();
    for p in 1..=c.max_period {
        for w in necklaces(p) {
            match fiber_fixed_points(model, &w) {
                Ok(v) => orbits.extend(v),
                Err(SkewError::DegenerateRoot { .. }) => degenerate.push(w.to_string()),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let core: Vec<PeriodicOrbit> = orbits.iter().filter(|o| o.location == Location::Core).cloned().collect();
    let check = exponent_boundary_check(model, &core, c.delta)?;
    let ex = enumerate_ex_orbits(c.max_period);
    let mirror_err = ex
        .iter()
        .map(|e| {
            let r = mirror_exponent_relation(model, e);
            (r.lhs - r.rhs).abs()
        })
        .fold(0.0f64, f64::max);
    let count = |k: OrbitClass| core.iter().filter(|o| o.class == k).count();
    let s = format!(
        "{} orbits ({} core: {} expanding, {} contracting, {} nonhyperbolic); {} degenerate words\n\
         exponent bound K1 = {:.6}, K2 = {:.6} at delta = {}\nmirror relation: {} exposed orbits, max error {:.2e}\n",
        orbits.len(),
        core.len(),
        count(OrbitClass::Expanding),
        count(OrbitClass::Contracting),
        count(OrbitClass::Nonhyperbolic),
        degenerate.len(),
        check.k1,
        check.k2,
        c.delta,
        ex.len(),
        mirror_err
    );
    let rows = orbits
        .iter()
        .map(|o| {
            vec![
                o.word.to_string(),
                format!("{:e}", o.x),
                o.period.to_string(),
                format!("{:e}", o.exponent),
                to_value(&o.class).as_str().unwrap_or_default().to_string(),
                to_value(&o.location).as_str().unwrap_or_default().to_string(),
            ]
        })
        .collect();
    Ok(Output {
        result: json!({
            "orbits": to_value(&orbits),
            "degenerate_words": degenerate,
            "exponent_boundary": to_value(&check),
            "mirror_relation": { "orbits": ex.len(), "max_error": mirror_err },
        }),
        summary: s,
        tables: vec![Table {
            name: "periodic_orbits".into(),
            header: vec!["word", "x", "period", "exponent", "class", "location"],
            rows,
        }],
    })
}

fn err_string<T>(r: &Result<T, SkewError>) -> Option<String> {
    r.as_ref().err().map(|e| e.to_string())
}

pub fn fundamental_domains_cmd(model: &FiberModel, cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.fundamental_domains, "fundamental_domains")?;
    check_open_unit("eps0", c.eps0, 0.25)?;
    for &p in &c.points {
        check_open_unit("points", p, 1.0)?;
    }
    let fd = fundamental_domains(model, c.eps0, c.n_hint)?;
    let succ = expanding_successor(model, &fd, fd.i0);
    let cd = ContractionData::new(model);
    let csucc = cd.as_ref().ok().map(|cd| contracting_successor(model, cd, cd.target()));
    let mut near = Vec::new();
    for &p in &c.points {
        let e = expanding_periodic_near(model, &fd, p, c.radius);
        let k = cd.as_ref().map_err(|e| e.clone()).and_then(|cd| contracting_periodic_near(model, cd, p, c.radius));
        near.push(json!({
            "p": p,
            "expanding": e.as_ref().ok().map(to_value),
            "expanding_error": err_string(&e),
            "contracting": k.as_ref().ok().map(to_value),
            "contracting_error": err_string(&k),
        }));
    }
    let mut s = format!(
        "N = {}, eps* = {:.12e}, matching residual = {:.2e}\nmin (f0^N)' on I0 = {:.6} (floor kappa/lambda = {:.6})\n",
        fd.n, fd.eps, fd.matching_residual, fd.min_derivative, fd.expansion_floor
    );
    if let Ok(sw) = &succ {
        writeln!(s, "expanding successor of I0: word length {}, floor {:.6}", sw.word.len(), sw.floor).unwrap();
    }
    Ok(output(
        json!({
            "domains": to_value(&fd),
            "expanding_successor": succ.as_ref().ok().map(to_value),
            "expanding_successor_error": err_string(&succ),
            "contraction": cd.as_ref().ok().map(to_value),
            "contracting_successor": csucc.as_ref().and_then(|r| r.as_ref().ok()).map(to_value),
            "periodic_near": near,
        }),
        s,
    ))
}

pub fn boundary_approx_cmd(model: &FiberModel, cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.boundary_approx, "boundary_approx")?;
    check_open_unit("delta", c.delta, 0.5)?;
    if c.n.is_empty() || c.n.contains(&0) {
        return Err(CmdError::Validation("`n` must be a nonempty list of positive integers".into()));
    }
    let target = BoundaryTarget { sequence: parse_word("target", &c.target)?, periodic: c.periodic };
    let traces = c.n.iter().map(|&n| boundary_approx(model, &target, c.delta, n)).collect::<Result<Vec<_>, _>>()?;
    let mut s = String::from("    n      N      M      delta(n)    chi            distance\n");
    let mut rows = Vec::new();
    for t in &traces {
        writeln!(
            s,
            "{:5} {:6} {:6} {:12.4e} {:14.4e} {:10.6}",
            t.n, t.big_n, t.big_m, t.delta_n, t.orbit.exponent, t.distance_to_target
        )
        .unwrap();
        rows.push(vec![
            t.n.to_string(),
            format!("{:e}", t.distance_to_target),
            format!("{:e}", t.orbit.exponent),
            t.big_n.to_string(),
            t.big_m.to_string(),
            format!("{:e}", t.delta_n),
        ]);
    }
    Ok(Output {
        result: json!({ "target": target, "delta": c.delta, "traces": to_value(&traces) }),
        summary: s,
        tables: vec![Table {
            name: "boundary_trace".into(),
            header: vec!["n", "distance", "chi", "N", "M", "delta_n"],
            rows,
        }],
    })
}

pub fn connect_cmd(model: &FiberModel, cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.connect, "connect")?;
    check_open_unit("from", c.from, 1.0)?;
    check_open_unit("to", c.to, 1.0)?;
    if !(c.radius > 0.0) || c.budget == 0 {
        return Err(CmdError::Validation("need `radius` > 0 and `budget` >= 1".into()));
    }
    let (a, b) = match c.class {
        OrbitKind::Expanding => {
            check_open_unit("eps0", c.eps0, 0.25)?;
            let fd = fundamental_domains(model, c.eps0, None)?;
            (expanding_periodic_near(model, &fd, c.from, c.radius)?, expanding_periodic_near(model, &fd, c.to, c.radius)?)
        }
        OrbitKind::Contracting => {
            let cd = ContractionData::new(model)?;
            (
                contracting_periodic_near(model, &cd, c.from, c.radius)?,
                contracting_periodic_near(model, &cd, c.to, c.radius)?,
            )
        }
    };
    let cert = homoclinic_certificate(model, &a, &b, c.budget)?;
    let s = format!(
        "orbits: period {} (x = {:.6}, chi = {:.4e}) and period {} (x = {:.6}, chi = {:.4e})\nforward word {} ({} nodes), backward word {} ({} nodes)\n",
        a.period, a.x, a.exponent, b.period, b.x, b.exponent, cert.forward.word, cert.forward.nodes, cert.backward.word, cert.backward.nodes
    );
    Ok(output(json!({ "from": to_value(&a), "to": to_value(&b), "certificate": to_value(&cert) }), s))
}

pub fn density_cmd(model: &FiberModel, cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.density, "density")?;
    check_open_unit("x0", c.x0, 1.0)?;
    check_open_unit("mesh", c.mesh, 1.0)?;
    let d = density_scan(model, c.x0, c.direction, c.mesh, c.budget)?;
    let s = format!(
        "{} nodes, {} cells; max gap {:.6} on ({:.6}, {:.6}) at mesh {}\n",
        d.nodes, d.cells, d.max_gap, d.gap.0, d.gap.1, d.mesh
    );
    Ok(output(to_value(&d), s))
}

pub fn reduce_word_cmd(model: &FiberModel, cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.reduce_word, "reduce_word")?;
    check_open_unit("x", c.x, 1.0)?;
    let mut reduced = Vec::new();
    let mut s = String::new();
    for w in &c.words {
        let word = parse_word("words", w)?;
        let r = reduce_word(&word);
        writeln!(s, "{word} -> sign {:+}, j = {}", r.sign, r.j).unwrap();
        reduced.push(json!({ "word": word, "sign": r.sign, "j": r.j }));
    }
    let wit = nontransitivity_witness(model, c.x, c.random_words, c.max_len, c.seed)?;
    writeln!(
        s,
        "{} random words: max deviation {:.2e}; closure gap {:.6} on ({:.6}, {:.6})",
        wit.words_checked, wit.max_deviation, wit.max_gap, wit.gap.0, wit.gap.1
    )
    .unwrap();
    Ok(output(json!({ "reduced": reduced, "witness": to_value(&wit) }), s))
}

pub fn walk_stats_cmd(cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.walk_stats, "walk_stats")?;
    if c.vplus_steps == 0 || c.ks_samples == 0 {
        return Err(CmdError::Validation("`vplus_steps` and `ks_samples` must be positive".into()));
    }
    let g = gap_statistics(c.seed, c.gaps)?;
    let v = vplus_walk(c.seed, c.vplus_steps)?;
    let a = vplus_steps_direct(c.seed.wrapping_add(1), c.ks_samples);
    let b = vplus_steps_first_return(c.seed.wrapping_add(2), c.ks_samples);
    let ks = ks_statistic(&a, &b);
    let s = format!(
        "gaps: even number of ones {:.5} (2/3), even gap {:.5} (1/3), P(d=1) {:.5} (3/4), P(d=3) {:.5} (3/16), corr(d, parity) {:+.5}\n\
         S-walk same direction {:.5}\nV+: mean step {:+.6}, variance {:.4}, {} visits to 0\nKS(direct, first return) = {ks:.5}\n",
        g.ones_even, g.gap_even, g.d_law[0], g.d_law[1], g.d_parity_correlation, g.same_direction, v.mean_step, v.step_variance, v.zero_visits
    );
    Ok(output(json!({ "gaps": to_value(&g), "vplus": to_value(&v), "ks": ks }), s))
}

pub fn occupation_cmd(model: &FiberModel, cfg: &ExperimentConfig) -> CmdResult {
    let c = section(&cfg.occupation, "occupation")?;
    check_open_unit("eps", c.eps, 0.5)?;
    let particles = match (&c.x0, &c.particles) {
        (Some(x), None) => {
            check_open_unit("x0", *x, 1.0)?;
            vec![*x]
        }
        (None, Some(p)) => {
            if p.count == 0 || !(0.0 <= p.lo && p.lo < p.hi && p.hi <= 1.0) {
                return Err(CmdError::Validation("`particles` needs count >= 1 and 0 <= lo < hi <= 1".into()));
            }
            particle_grid(p.lo, p.hi, p.count)
        }
        _ => return Err(CmdError::Validation("give exactly one of `x0` and `particles`".into())),
    };
    if c.seeds == 0 {
        return Err(CmdError::Validation("`seeds` must be at least 1".into()));
    }
    let seeds: Vec<u64> = (1..=c.seeds).collect();
    let tab = occupation_decay(model, &particles, c.eps, &c.n, &seeds)?;
    let mut s = String::from("         n   mean_fraction      stderr\n");
    let mut rows = Vec::new();
    for r in &tab.rows {
        writeln!(s, "{:10} {:15.6e} {:11.3e}", r.n, r.mean_fraction, r.stderr).unwrap();
        rows.push(vec![
            r.n.to_string(),
            format!("{:e}", r.mean_fraction),
            format!("{:e}", r.stderr),
            r.seeds.to_string(),
        ]);
    }
    Ok(Output {
        result: to_value(&tab),
        summary: s,
        tables: vec![Table { name: "occupation".into(), header: vec!["n", "mean_fraction", "stderr", "seeds"], rows }],
    })
}
