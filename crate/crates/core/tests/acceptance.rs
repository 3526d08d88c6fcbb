//! Acceptance criteria. Every test prints one `criterion N: PASS|FAIL` line
//! (written straight to stderr so it shows without `--nocapture`) and then
//! asserts the same condition.

use std::io::Write;
use std::time::Instant;

use skewprod::dynamics::{lyapunov_finite, twin_pair, OrbitClass, Location, SkewSystem};
use skewprod::fiber::{check_hypotheses, Check, FiberModel, FiberPoint, Side};
use skewprod::itinerary::{
    connecting_word, contracting_periodic_near, density_scan, expanding_periodic_near, fundamental_domains,
    homoclinic_certificate, ContractionData, Direction,
};
use skewprod::measure::{
    boundary_approx, mirror_exponent_relation, periodic_measure, weakstar_distance, BoundaryTarget,
    EmpiricalMeasure, TestFamily,
};
use skewprod::symbolic::{enumerate_ex_orbits, project_pi, MarkovChain, Word, TRANSITIONS};
use skewprod::walk::{
    gap_statistics, ks_statistic, nontransitivity_witness, occupation_decay, vplus_steps_direct,
    vplus_steps_first_return, vplus_walk, BitStream,
};
use skewprod::SkewError;

fn report(n: u32, pass: bool, detail: &str, start: Instant) {
    let line = format!(
        "criterion {n:>2}: {} — {detail} [{:.2} s]\n",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn word(s: &str) -> Word {
    s.parse().unwrap()
}

#[test]
fn criterion_01_parry() {
    let t = Instant::now();
    let d = MarkovChain::default().parry_measure();
    let ent = (d.entropy - 2f64.ln()).abs();
    let pi = d.pi.iter().map(|p| (p - 0.25).abs()).fold(0.0, f64::max);
    let mut p_err = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            p_err = p_err.max((d.p[i][j] - TRANSITIONS[i][j] as f64 / 2.0).abs());
        }
    }
    let pass = ent <= 1e-12 && pi <= 1e-12 && p_err <= 1e-12 && t.elapsed().as_secs_f64() < 1.0;
    report(1, pass, &format!("|h - log 2| = {ent:.1e}, |pi - 1/4| = {pi:.1e}, |P - A/2| = {p_err:.1e}"), t);
    assert!(pass);
}

fn mme_monte_carlo(model: &FiberModel, seed: u64) -> f64 {
    let path = MarkovChain::default().parry_measure().sample_path(1_000_000, seed);
    let xi = project_pi(&path);
    let x0 = FiberPoint { side: path[0].side, dist: 0.0 };
    lyapunov_finite(&SkewSystem::new(model.clone()), &xi, x0, xi.len()).unwrap().value
}

#[test]
fn criterion_02_mme_exponent() {
    let t = Instant::now();
    let pld = FiberModel::pld_default();
    let mob = FiberModel::mobius(2.0);
    // oracle: 1/4 (log 1.05 + log(2/3)) and 1/4 (log 2 + log(1/2))
    let want_pld = 0.25 * (1.05f64 * 2.0 / 3.0).ln();
    let got_pld = mme_monte_carlo(&pld, 1);
    let got_mob = mme_monte_carlo(&mob, 2);
    let pass = (got_pld - want_pld).abs() <= 5e-3 && got_mob.abs() <= 5e-3 && t.elapsed().as_secs_f64() < 30.0;
    report(
        2,
        pass,
        &format!("PLD {got_pld:.6} vs {want_pld:.6}; Mobius {got_mob:.2e} vs 0 (tol 5e-3)"),
        t,
    );
    assert!(pass);
}

#[test]
fn criterion_03_hypotheses() {
    let t = Instant::now();
    let r = check_hypotheses(&FiberModel::pld_default()).unwrap();
    // oracle from the default knot table: beta = 1.05, lambda = 2/3
    let (b, l) = (1.05f64, 2.0f64 / 3.0);
    let kappa = l * l * (1.0 - l) / (b * (b - 1.0));
    let pld_ok = [r.h1, r.h2, r.h3, r.h4].iter().all(|c| *c == Check::Pass) && (r.kappa - kappa).abs() <= 1e-6;
    let m = check_hypotheses(&FiberModel::mobius(2.0)).unwrap();
    let mob_ok = m.h4 == Check::Fail && m.kappa == 1.0 / 16.0;
    let pass = pld_ok && mob_ok && t.elapsed().as_secs_f64() < 1.0;
    report(3, pass, &format!("PLD kappa {:.7} (oracle {kappa:.7}), Mobius kappa {}", r.kappa, m.kappa), t);
    assert!(pass);
}

#[test]
fn criterion_04_expansion_floor() {
    let t = Instant::now();
    let p = FiberModel::pld_default();
    let fd = fundamental_domains(&p, 0.01, None).unwrap();
    let (a, b) = (fd.i0.lo.value(), fd.i0.hi.value());
    let word = Word::zeros(fd.n);
    let min = (0..=10_000)
        .map(|k| p.eval_word(&word, FiberPoint::new(a + (b - a) * k as f64 / 10_000.0)).1)
        .fold(f64::INFINITY, f64::min);
    let floor = fd.kappa / fd.lambda;
    let pass = min >= floor && floor > 1.0 && fd.matching_residual <= 1e-12 && t.elapsed().as_secs_f64() < 5.0;
    report(
        4,
        pass,
        &format!("N = {}, eps* = {:.6e}, min (f0^N)' = {min:.4} >= {floor:.4}", fd.n, fd.eps),
        t,
    );
    assert!(pass);
}

/// Closed-form oracle for the Mobius construction in logit coordinates:
/// `(delta(n), N, M, y)`.
fn mobius_oracle(delta: f64, n: usize, prefix: &[u8]) -> (f64, usize, usize, f64) {
    let s = 2f64.ln();
    // psi for (0101) from x = 1: phi oscillates between 0 and -log 2
    let psi = s;
    let z = delta * (-(n as f64).sqrt()).exp();
    let dist = 2.0 * z.ln_1p();
    let dn = delta * (-2.0 * psi.max((n as f64).sqrt())).exp() * (-(n as f64) * dist).exp();
    let need = ((1.0 - dn) / dn).ln();
    let big_n = (need / s).ceil() as usize;
    let mut t = big_n as f64 * s;
    for &sym in prefix {
        t = if sym == 0 { t + s } else { -t };
    }
    let big_m = if t >= 0.0 { 0 } else { (-t / s).ceil() as usize };
    // the return map t -> a t + b
    let (mut a, mut b) = (1.0f64, 0.0f64);
    let eta: Vec<u8> = std::iter::repeat(0)
        .take(big_n)
        .chain(prefix.iter().copied())
        .chain(std::iter::repeat(0).take(big_m))
        .collect();
    for &sym in &eta {
        if sym == 0 {
            b += s;
        } else {
            a = -a;
            b = -b;
        }
    }
    let ts = b / (1.0 - a);
    (dn, big_n, big_m, 1.0 / (1.0 + (-ts).exp()))
}

#[test]
fn criterion_05_boundary_approximation() {
    let t = Instant::now();
    let m = FiberModel::mobius(2.0);
    let target = BoundaryTarget::periodic(word("0101"));
    let ns = [6usize, 18, 38, 66];
    let traces: Vec<_> = ns.iter().map(|&n| boundary_approx(&m, &target, 0.1, n).unwrap()).collect();
    let a = traces.iter().all(|tr| tr.min_boundary_distance > 0.0 && tr.orbit.location == Location::Core);
    let b = traces.iter().all(|tr| tr.orbit.exponent.abs() <= 1e-10);
    let d: Vec<f64> = traces.iter().map(|tr| tr.distance_to_target).collect();
    let c_mono = d.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    let c_end = d[3] <= 0.05;
    let ratio: Vec<f64> = traces.iter().map(|tr| (tr.big_n + tr.big_m) as f64 / tr.n as f64).collect();
    let dd = ratio.windows(2).all(|w| w[1] < w[0]);
    let mut oracle_ok = true;
    for tr in &traces {
        let (dn, bn, bm, y) = mobius_oracle(0.1, tr.n, &tr.prefix);
        oracle_ok &= (tr.delta_n / dn - 1.0).abs() < 1e-6 && tr.big_n == bn && tr.big_m == bm && (tr.y - y).abs() < 1e-9;
    }
    let t18 = &traces[1];
    let e = t18.big_n == 16 && (t18.delta_n / 1.96e-5 - 1.0).abs() <= 0.01 && oracle_ok;
    let pass = a && b && c_mono && c_end && dd && e && t.elapsed().as_secs_f64() < 10.0;
    report(
        5,
        pass,
        &format!(
            "(a) {a} (b) {b} (c) distances {:?} monotone {c_mono}, <=0.05 at n=66 {c_end} (d) (N+M)/n {:?} {dd} (e) N(18) = {}, delta(18) = {:.4e}, oracle {oracle_ok}",
            d.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            ratio.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            t18.big_n,
            t18.delta_n
        ),
        t,
    );
    assert!(pass);
}

#[test]
fn criterion_06_positive_distance_from_hyperbolic_point_mass() {
    let t = Instant::now();
    let family = TestFamily::default();
    let dirac = EmpiricalMeasure::dirac(&[0, 0, 0], 0.0);
    let mut measures = Vec::new();
    let m = FiberModel::mobius(2.0);
    let target = BoundaryTarget::periodic(word("0101"));
    for n in [6, 18, 38, 66] {
        measures.push(("boundary", boundary_approx(&m, &target, 0.1, n).unwrap().measure));
    }
    let p = FiberModel::pld_default();
    let fd = fundamental_domains(&p, 0.01, None).unwrap();
    let cd = ContractionData::new(&p).unwrap();
    for x in [0.3, 0.5, 0.7] {
        let o = expanding_periodic_near(&p, &fd, x, 0.05).unwrap();
        measures.push(("expanding", periodic_measure(&p, &o)));
        let o = contracting_periodic_near(&p, &cd, x, 0.05).unwrap();
        measures.push(("contracting", periodic_measure(&p, &o)));
    }
    let mfd = fundamental_domains(&m, 0.1, None).unwrap();
    let o = expanding_periodic_near(&m, &mfd, 0.5, 0.05).unwrap();
    measures.push(("mobius", periodic_measure(&m, &o)));
    let dmin = measures
        .iter()
        .map(|(_, mu)| weakstar_distance(mu, &dirac, &family))
        .fold(f64::INFINITY, f64::min);
    let pass = dmin > 0.01 && t.elapsed().as_secs_f64() < 5.0;
    report(6, pass, &format!("min distance over {} measures = {dmin:.4}", measures.len()), t);
    assert!(pass);
}

#[test]
fn criterion_07_mirror_relation() {
    let t = Instant::now();
    let orbits = enumerate_ex_orbits(10);
    let mut worst = 0.0f64;
    let mut sym_ok = true;
    for model in [FiberModel::pld_default(), FiberModel::mobius(2.0)] {
        for ex in &orbits {
            let r = mirror_exponent_relation(&model, ex);
            worst = worst.max((r.lhs - r.rhs).abs());
            sym_ok &= r.same_period && r.derivative_multiset_matches;
        }
    }
    let pass = !orbits.is_empty() && worst <= 1e-10 && sym_ok && t.elapsed().as_secs_f64() < 10.0;
    report(7, pass, &format!("{} orbits, max |lhs - rhs| = {worst:.1e}, symmetry {sym_ok}", orbits.len()), t);
    assert!(pass);
}

#[test]
fn criterion_08_twin_pairs() {
    let t = Instant::now();
    let p = FiberModel::pld_default();
    let mut bits = BitStream::new(8);
    let mut ok = 0;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let len = 1 + k % 12;
        let w = Word::new((0..len).map(|_| bits.next_bit()).collect()).unwrap();
        let tp = twin_pair(&p, &w).unwrap();
        let r = tp.nonnegative.residual(&p).max(tp.nonpositive.residual(&p));
        worst = worst.max(r);
        if tp.nonnegative.exponent >= -1e-9 && tp.nonpositive.exponent <= 1e-9 && r <= 1e-10 {
            ok += 1;
        }
    }
    let pass = ok == 100 && t.elapsed().as_secs_f64() < 20.0;
    report(8, pass, &format!("{ok}/100 words, worst residual {worst:.1e}"), t);
    assert!(pass);
}

#[test]
fn criterion_09_transitivity_contrast() {
    let t = Instant::now();
    let mesh = 0.01;
    let pld = density_scan(&FiberModel::pld_default(), 0.3, Direction::Forward, mesh, 1_000_000).unwrap();
    let mut detail = format!("PLD gap {:.4}", pld.max_gap);
    let mut pass = pld.max_gap <= 2.0 * mesh;
    for (name, model) in [("Mobius", FiberModel::mobius(2.0)), ("Arctan", FiberModel::arctan())] {
        let w = nontransitivity_witness(&model, 0.3, 10_000, 20, 9).unwrap();
        let scan = density_scan(&model, 0.3, Direction::Forward, mesh, 1_000_000).unwrap();
        // a finer mesh leaves the same gap: it is a property of the closure
        let fine = density_scan(&model, 0.3, Direction::Forward, mesh / 10.0, 1_000_000).unwrap();
        let ok = w.max_deviation <= 1e-8 && scan.max_gap >= 10.0 * mesh;
        detail += &format!(
            "; {name} deviation {:.1e}, gap {:.4} (mesh/10: {:.4}, closure {:.4}) {}",
            w.max_deviation,
            scan.max_gap,
            fine.max_gap,
            w.max_gap,
            if ok { "ok" } else { "below 10*mesh" }
        );
        pass &= ok;
    }
    pass &= t.elapsed().as_secs_f64() < 60.0;
    report(9, pass, &detail, t);
    assert!(pass);
}

#[test]
fn criterion_10_walk_statistics() {
    let t = Instant::now();
    let g = gap_statistics(10, 1_000_000).unwrap();
    let v = vplus_walk(1, 1_000_000).unwrap();
    let ks = ks_statistic(&vplus_steps_direct(11, 100_000), &vplus_steps_first_return(12, 100_000));
    let checks = [
        (g.ones_even - 2.0 / 3.0).abs() <= 0.005,
        (g.d_law[0] - 0.75).abs() <= 0.005,
        (g.d_law[1] - 3.0 / 16.0).abs() <= 0.005,
        v.mean_step.abs() <= 0.004,
        ks <= 0.01,
    ];
    let pass = checks.iter().all(|c| *c) && t.elapsed().as_secs_f64() < 60.0;
    report(
        10,
        pass,
        &format!(
            "even ones {:.4}, P(d=1) {:.4}, P(d=3) {:.4}, V+ mean step {:+.5}, KS {ks:.4}",
            g.ones_even, g.d_law[0], g.d_law[1], v.mean_step
        ),
        t,
    );
    assert!(pass);
}

#[test]
fn criterion_11_occupation_decay() {
    let t = Instant::now();
    let seeds: Vec<u64> = (1..=50).collect();
    let mut pass = true;
    let mut detail = String::new();
    for (name, model) in [("Mobius", FiberModel::mobius(2.0)), ("Arctan", FiberModel::arctan())] {
        let tab = occupation_decay(&model, &[0.5], 0.25, &[10_000, 1_000_000], &seeds).unwrap();
        let (a, b) = (tab.rows[0].mean_fraction, tab.rows[1].mean_fraction);
        pass &= b <= 0.5 * a;
        detail += &format!("{name} {a:.4} -> {b:.4} (ratio {:.3}); ", b / a);
    }
    pass &= t.elapsed().as_secs_f64() < 120.0;
    report(11, pass, detail.trim_end_matches("; "), t);
    assert!(pass);
}

#[test]
fn criterion_12_homoclinic_certificates() {
    let t = Instant::now();
    let p = FiberModel::pld_default();
    let cd = ContractionData::new(&p).unwrap();
    let fd = fundamental_domains(&p, 0.01, None).unwrap();
    let budget = 1_000_000;
    let c1 = contracting_periodic_near(&p, &cd, 0.3, 0.05).unwrap();
    let c2 = contracting_periodic_near(&p, &cd, 0.7, 0.05).unwrap();
    let e1 = expanding_periodic_near(&p, &fd, 0.3, 0.05).unwrap();
    let e2 = expanding_periodic_near(&p, &fd, 0.7, 0.05).unwrap();
    let classes = c1.class == OrbitClass::Contracting && e1.class == OrbitClass::Expanding;
    let contracting = homoclinic_certificate(&p, &c1, &c2, budget);
    let expanding = homoclinic_certificate(&p, &e1, &e2, budget);
    let one = skewprod::dynamics::PeriodicOrbit::from_fixed_point(&p, word("0"), FiberPoint { side: Side::Right, dist: 0.0 });
    let zero = skewprod::dynamics::PeriodicOrbit::from_fixed_point(&p, word("0"), FiberPoint::ZERO);
    let nf = |r: &Result<_, SkewError>| matches!(r, Err(SkewError::NotFound(_)));
    let exposed = nf(&connecting_word(&p, &one, &c1, budget).map(|_| ()))
        && nf(&homoclinic_certificate(&p, &c1, &one, budget).map(|_| ()))
        && nf(&connecting_word(&p, &zero, &e1, budget).map(|_| ()))
        && nf(&homoclinic_certificate(&p, &e1, &zero, budget).map(|_| ()));
    let lens = |r: &Result<skewprod::itinerary::HomoclinicCertificate, SkewError>| {
        r.as_ref().map(|c| (c.forward.word.len(), c.backward.word.len())).ok()
    };
    let pass = classes && contracting.is_ok() && expanding.is_ok() && exposed && t.elapsed().as_secs_f64() < 60.0;
    report(
        12,
        pass,
        &format!(
            "contracting pair words {:?}, expanding pair words {:?}, core<->exposed NotFound {exposed}",
            lens(&contracting),
            lens(&expanding)
        ),
        t,
    );
    assert!(pass);
}
