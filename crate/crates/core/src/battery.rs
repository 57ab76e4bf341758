//! The acceptance battery: one deterministic, self-contained check per
//! criterion, shared by the `verify` CLI subcommand and the acceptance test
//! target. Every tolerance is pinned here.

use crate::bifurcation::{
    trace_double_cycle_at, trace_grazing_at, DoubleCycleKind,
};
use crate::integrate::IntegratorCtrl;
use crate::math::abs;
use crate::melnikov::{
    b1_of_a, b2_of_a, b3_of_a, m1_at_zero, m_at_zero, melnikov, melnikov_deriv, melnikov_oracle,
    melnikov_zeros, s1, s1_sign_structure, special_points,
};
use crate::model::{
    energy, equilibrium_report, lienard_data, vector_field, EquilibriumClass, Params, PhasePoint,
};
use crate::poincare::{find_cycles, shoot, verify_surround, CycleKind, ScanCtrl, Stability};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Check {
    passed: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Check { passed: true, detail: String::new() }
    }

    fn ok(&mut self, cond: bool, what: &str) {
        if !cond {
            self.passed = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str("FAILED: ");
            self.detail.push_str(what);
        }
    }

    fn note(&mut self, what: &str) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(what);
    }
}

pub const CRITERIA: [&str; 11] = [
    "Melnikov golden values",
    "closed form vs quadrature oracle",
    "limit formulas at h = 0",
    "zero-count diagram",
    "special points and curve ordering",
    "example 1 (a = 4)",
    "example 2 (a = 1.2)",
    "example 3 (a = 1.4)",
    "property suites",
    "small-delta consistency",
    "appendix S1 structure",
];

/// Runs one criterion; `seed` perturbs the randomized batteries (0 is the
/// canonical run).
pub fn run_criterion(id: usize, seed: u64) -> CriterionResult {
    let name = CRITERIA[id - 1];
    let c = match id {
        1 => c1(),
        2 => c2(seed),
        3 => c3(seed),
        4 => c4(seed),
        5 => c5(),
        6 => c6(),
        7 => c7(),
        8 => c8(),
        9 => c9(seed),
        10 => c10(),
        11 => c11(),
        _ => {
            let mut c = Check::new();
            c.ok(false, "unknown criterion");
            c
        }
    };
    CriterionResult { id, name, passed: c.passed, detail: c.detail }
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    (1..=11).map(|id| run_criterion(id, seed)).collect()
}

fn c1() -> Check {
    let mut c = Check::new();
    let m = melnikov(0.5, 1.2, -6.05).unwrap();
    c.ok(abs(m - 0.882421) <= 1e-5, &format!("M(1/2, 6/5, -6.05) = {m}"));
    let m1 = melnikov_deriv(0.2, 1.4, -7.2, 1).unwrap();
    c.ok(abs(m1 - 0.358647) <= 1e-5, &format!("M'(1/5, 7/5, -7.2) = {m1}"));
    c
}

fn c2(seed: u64) -> Check {
    let mut c = Check::new();
    let mut pts: Vec<(f64, f64, f64)> = Vec::with_capacity(200);
    for &a in &[1.2, 1.4, 2.0, 3.0, 4.0] {
        for &bf in &[-1.25, -1.5, -2.0] {
            for &h in &[0.1, 0.5, 1.0, 2.0, 5.0] {
                pts.push((h, a, bf * (a + 1.0) * (a + 1.0)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5d02 ^ seed);
    while pts.len() < 200 {
        let a = rng.gen_range(1.1..5.0);
        let bf: f64 = rng.gen_range(-2.5..-1.05);
        let h = rng.gen_range(0.05..8.0);
        pts.push((h, a, bf * (a + 1.0) * (a + 1.0)));
    }
    let mut worst = 0.0f64;
    let n = pts.len();
    for (h, a, b) in pts {
        let mc = melnikov(h, a, b).unwrap();
        let mq = melnikov_oracle(h, a, b).unwrap();
        let rel = abs(mc - mq) / (1.0 + abs(mc));
        if rel > worst {
            worst = rel;
        }
    }
    c.ok(worst <= 1e-8, &format!("max relative discrepancy {worst:.3e} over {n} points"));
    if c.passed {
        c.note(&format!("max relative discrepancy {worst:.3e} over {n} points"));
    }
    c
}

fn c3(seed: u64) -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5d03 ^ seed);
    for _ in 0..50 {
        let a: f64 = rng.gen_range(1.05..5.0);
        let b: f64 = rng.gen_range(-80.0..-1.0);
        let m0 = melnikov(0.0, a, b).unwrap();
        let ref0 = -0.25 * (a + 1.0) * (a + 1.0)
            * (5.0 + 10.0 * a + 5.0 * a * a + 4.0 * b)
            * core::f64::consts::PI;
        c.ok(
            abs(m0 - ref0) <= 1e-12 * (1.0 + abs(ref0)),
            &format!("M(0) at a={a} b={b}: {m0} vs {ref0}"),
        );
        let m1 = m1_at_zero(a, b);
        let ref1 = -(3.0 + 6.0 * a + 3.0 * a * a + 2.0 * b) * core::f64::consts::PI;
        c.ok(abs(m1 - ref1) <= 1e-12 * (1.0 + abs(ref1)), "M'(0) formula");
        // scaled exact-zero checks on the two degenerate loci
        let a1 = a + 1.0;
        let z0 = m_at_zero(a, -1.25 * a1 * a1);
        c.ok(abs(z0) <= 1e-12 * a1 * a1 * a1 * a1, &format!("M(0) at b=-5/4(a+1)^2: {z0:e}"));
        let z1 = m1_at_zero(a, -1.5 * a1 * a1);
        c.ok(abs(z1) <= 1e-12 * a1 * a1, &format!("M'(0) at b=-3/2(a+1)^2: {z1:e}"));
    }
    c
}

fn c4(seed: u64) -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5d04 ^ seed);
    let mut counts = [0usize; 5];
    for k in 0..200 {
        let zone = k % 5;
        // sample each named zone through its defining inequalities
        let (a, b, expect) = match zone {
            0 => {
                // below -3/2 (a+1)^2: one simple zero
                let a = rng.gen_range(1.05..4.0);
                let a1: f64 = a + 1.0;
                (a, -1.5 * a1 * a1 * rng.gen_range(1.02..1.8), 1)
            }
            1 => {
                // D1: max(-5/4 (a+1)^2, b1) < b < -(a+1)^2, no zeros
                let a = rng.gen_range(1.05..4.0);
                let a1: f64 = a + 1.0;
                let lo = (-1.25 * a1 * a1).max(b1_of_a(a, 1e-10).unwrap());
                let t = rng.gen_range(0.05..0.95);
                (a, lo + t * (-a1 * a1 - lo), 0)
            }
            2 => {
                // D2: a > a*, b1 < b < -5/4 (a+1)^2, one zero
                let a = rng.gen_range(2.1..4.0);
                let a1: f64 = a + 1.0;
                let lo = b1_of_a(a, 1e-10).unwrap();
                let hi = -1.25 * a1 * a1;
                let t = rng.gen_range(0.05..0.95);
                (a, lo + t * (hi - lo), 1)
            }
            3 => {
                // D4: b2 < b < min(-5/4 (a+1)^2, b3), three zeros
                let a = rng.gen_range(1.1..1.32);
                let a1: f64 = a + 1.0;
                let lo = b2_of_a(a, 1e-10).unwrap();
                let hi = (-1.25 * a1 * a1).min(b3_of_a(a, 1e-10).unwrap());
                let t = rng.gen_range(0.05..0.95);
                (a, lo + t * (hi - lo), 3)
            }
            _ => {
                // D5: -5/4 (a+1)^2 < b < b3, a < a3, two zeros
                let a = rng.gen_range(1.1..1.24);
                let a1: f64 = a + 1.0;
                let lo = -1.25 * a1 * a1;
                let hi = b3_of_a(a, 1e-10).unwrap();
                if hi <= lo {
                    continue;
                }
                let t = rng.gen_range(0.05..0.95);
                (a, lo + t * (hi - lo), 2)
            }
        };
        let r = melnikov_zeros(a, b).unwrap();
        c.ok(
            r.total_with_multiplicity == expect,
            &format!("zone {zone} at a={a:.4} b={b:.4}: {} zeros, expected {expect}",
                r.total_with_multiplicity),
        );
        counts[zone] += 1;
        if !c.passed {
            break;
        }
    }
    // multiplicity-2 samples on b2 and b3, multiplicity-3 at B
    for a in [1.22, 1.3] {
        let b2 = b2_of_a(a, 1e-12).unwrap();
        let r = melnikov_zeros(a, b2).unwrap();
        c.ok(
            r.zeros.iter().any(|z| z.multiplicity == 2),
            &format!("multiplicity-2 zero on b2({a})"),
        );
        let b3 = b3_of_a(a, 1e-12).unwrap();
        let r = melnikov_zeros(a, b3).unwrap();
        c.ok(
            r.zeros.iter().any(|z| z.multiplicity == 2),
            &format!("multiplicity-2 zero on b3({a})"),
        );
    }
    let sp = special_points(1e-12).unwrap();
    let r = melnikov_zeros(sp.point_b.0, sp.point_b.1).unwrap();
    c.ok(r.zeros.iter().any(|z| z.multiplicity == 3), "multiplicity-3 zero at B");
    c.note(&format!("{} region samples", counts.iter().sum::<usize>()));
    c
}

fn c5() -> Check {
    let mut c = Check::new();
    let sp = special_points(1e-10).unwrap();
    c.ok(sp.a_star > 1.4 && sp.a_star < 2.0, &format!("a* = {}", sp.a_star));
    c.ok(sp.a3 > 1.2 && sp.a3 < sp.a_star, &format!("a3 = {}", sp.a3));
    c.ok(sp.a_double_star > sp.a_star, &format!("a** = {}", sp.a_double_star));
    // strict decrease of the three curves, with b2 < b3 < b1
    let grid: Vec<f64> = (0..8).map(|i| 1.18 + (sp.a_double_star - 0.02 - 1.18) * i as f64 / 7.0).collect();
    let (mut p1, mut p2, mut p3) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for &a in &grid {
        let b1 = b1_of_a(a, 1e-10).unwrap();
        let b2 = b2_of_a(a, 1e-10).unwrap();
        let b3 = b3_of_a(a, 1e-10).unwrap();
        c.ok(b1 < p1 && b2 < p2 && b3 < p3, &format!("monotone decrease at a={a}"));
        c.ok(b2 < b3 && b3 < b1, &format!("ordering b2 < b3 < b1 at a={a}"));
        (p1, p2, p3) = (b1, b2, b3);
    }
    // merge at B: the strip collapses approaching a**
    let eps = 1e-5;
    let a_near = sp.a_double_star - eps;
    let gap = b1_of_a(a_near, 1e-12).unwrap() - b2_of_a(a_near, 1e-12).unwrap();
    c.ok(gap.abs() < 1e-2, &format!("b1 - b2 = {gap:e} at a** - {eps}"));
    c.note(&format!("a*={:.6} a3={:.6} a**={:.6}", sp.a_star, sp.a3, sp.a_double_star));
    c
}

fn inventory(a: f64, b: f64, delta: f64) -> (Vec<(CycleKind, Stability)>, String) {
    let params = Params::new(a, b, delta).unwrap();
    let ctrl = IntegratorCtrl::for_params(&params);
    let cycles = find_cycles(&params, &ctrl, &ScanCtrl::default()).unwrap_or_default();
    let list: Vec<(CycleKind, Stability)> =
        cycles.iter().map(|x| (x.kind, x.stability)).collect();
    let desc = format!("{list:?}");
    (list, desc)
}

fn c6() -> Check {
    let mut c = Check::new();
    // sink, no cycles
    let p1 = Params::new(4.0, -24.9, 0.1).unwrap();
    c.ok(
        equilibrium_report(&p1).classification == EquilibriumClass::Sink,
        "E_r should be a sink at b = -24.9",
    );
    let (inv, desc) = inventory(4.0, -24.9, 0.1);
    c.ok(inv.is_empty(), &format!("no cycles at b = -24.9, got {desc}"));
    // one stable small cycle
    let p2 = Params::new(4.0, -25.7, 0.1).unwrap();
    c.ok(
        equilibrium_report(&p2).classification == EquilibriumClass::Source,
        "E_r should be a source at b = -25.7",
    );
    let (inv, desc) = inventory(4.0, -25.7, 0.1);
    c.ok(
        inv == [(CycleKind::Small, Stability::Stable)],
        &format!("one stable small cycle at b = -25.7, got {desc}"),
    );
    // grazing at the traced phi1
    let (phi1, residual) = trace_grazing_at(4.0, 0.1, 1e-6).unwrap();
    c.ok(abs(phi1 + 26.083) <= 0.02, &format!("phi1(4, 0.1) = {phi1}"));
    c.ok(residual < 1e-3, &format!("|d(0)| = {residual:e} at traced phi1"));
    // one stable crossing cycle
    let (inv, desc) = inventory(4.0, -26.1, 0.1);
    c.ok(
        inv == [(CycleKind::Crossing, Stability::Stable)],
        &format!("one stable crossing cycle at b = -26.1, got {desc}"),
    );
    c.note(&format!("phi1(4, 0.1) = {phi1:.4}"));
    c
}

fn c7() -> Check {
    let mut c = Check::new();
    let (phi1, _) = trace_grazing_at(1.2, 0.1, 1e-7).unwrap();
    c.ok(abs(phi1 + 5.93) <= 0.01, &format!("phi1(1.2, 0.1) = {phi1}"));
    let (rho1, r1res) = trace_double_cycle_at(DoubleCycleKind::Dl1, 1.2, 0.1, 1e-8).unwrap();
    c.ok(abs(rho1 + 5.908) <= 0.01, &format!("rho1(1.2, 0.1) = {rho1}"));
    let (rho2, r2res) = trace_double_cycle_at(DoubleCycleKind::Dl2, 1.2, 0.1, 1e-8).unwrap();
    c.ok(abs(rho2 + 5.9337) <= 0.01, &format!("rho2(1.2, 0.1) = {rho2}"));
    c.ok(r1res < 1e-7 && r2res < 1e-7, "fold residuals");

    // inventories; the two fold rows are sampled at the traced fold values
    let (inv, desc) = inventory(1.2, -5.2, 0.1);
    c.ok(inv == [(CycleKind::Small, Stability::Stable)], &format!("b=-5.2: {desc}"));
    let (inv, desc) = inventory(1.2, rho1, 0.1);
    c.ok(
        inv == [
            (CycleKind::Small, Stability::Stable),
            (CycleKind::Crossing, Stability::SemiStableExtStable),
        ],
        &format!("b=rho1: {desc}"),
    );
    let (inv, desc) = inventory(1.2, -5.93, 0.1);
    c.ok(
        inv == [
            (CycleKind::Small, Stability::Stable),
            (CycleKind::Crossing, Stability::Unstable),
            (CycleKind::Crossing, Stability::Stable),
        ],
        &format!("b=-5.93: {desc}"),
    );
    let (inv, desc) = inventory(1.2, rho2, 0.1);
    c.ok(
        inv == [
            (CycleKind::Crossing, Stability::SemiStableExtUnstable),
            (CycleKind::Crossing, Stability::Stable),
        ],
        &format!("b=rho2: {desc}"),
    );
    let (inv, desc) = inventory(1.2, -6.0, 0.1);
    c.ok(inv == [(CycleKind::Crossing, Stability::Stable)], &format!("b=-6: {desc}"));
    c.note(&format!("phi1={phi1:.4} rho1={rho1:.4} rho2={rho2:.4}"));
    c
}

fn c8() -> Check {
    let mut c = Check::new();
    let (phi1, _) = trace_grazing_at(1.4, 0.1, 1e-7).unwrap();
    c.ok(abs(phi1 + 7.0) <= 0.01, &format!("phi1(1.4, 0.1) = {phi1}"));
    match trace_double_cycle_at(DoubleCycleKind::Dl1, 1.4, 0.1, 1e-7) {
        Ok((rho1, _)) => c.ok(abs(rho1 + 7.018) <= 0.01, &format!("rho1(1.4, 0.1) = {rho1}")),
        Err(e) => c.ok(false, &format!("rho1(1.4, 0.1): {e}")),
    }
    match trace_double_cycle_at(DoubleCycleKind::Dl2, 1.4, 0.1, 1e-7) {
        Ok((rho2, _)) => c.ok(abs(rho2 + 7.018) <= 0.01, &format!("rho2(1.4, 0.1) = {rho2}")),
        Err(e) => c.ok(false, &format!("rho2(1.4, 0.1): {e}")),
    }
    let (inv, desc) = inventory(1.4, -7.018, 0.1);
    let crossings = inv.iter().filter(|(k, _)| *k == CycleKind::Crossing).count();
    c.ok(crossings == 3, &format!("three crossing cycles at b = -7.018, got {desc}"));
    if !c.passed {
        c.note(
            "known irreproducible: at integration tolerances 1e-10/1e-12 the \
             three-cycle window closes near a = 1.34 < 1.4 (deepest inner-fold \
             displacement extremum at a = 1.4 stays above +0.029)",
        );
    }
    c
}

fn c9(seed: u64) -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5d09 ^ seed);
    let mut checked_surround = 0usize;
    for k in 0..100 {
        let a: f64 = rng.gen_range(1.05..4.0);
        let delta = rng.gen_range(0.02..0.4);
        let a1 = a + 1.0;
        // mix of parameter zones
        let bf: f64 = match k % 4 {
            0 => rng.gen_range(-0.9..0.5),    // b >= -(a+1)^2
            1 => rng.gen_range(-1.32..-1.01), // around the small-cycle band
            2 => rng.gen_range(-1.6..-1.34),  // below the small-cycle band
            _ => rng.gen_range(-2.8..-1.05),
        };
        let b = bf * a1 * a1;
        let params = Params::new(a, b, delta).unwrap();
        let ctrl = IntegratorCtrl::for_params(&params);
        let cycles = match find_cycles(&params, &ctrl, &ScanCtrl::default()) {
            Ok(cy) => cy,
            Err(e) => {
                c.ok(false, &format!("find_cycles({a:.3}, {b:.3}, {delta:.3}): {e}"));
                continue;
            }
        };
        if b >= -a1 * a1 {
            c.ok(cycles.is_empty(), &format!("no cycles for b >= -(a+1)^2 at ({a:.3}, {b:.3})"));
        }
        let smalls = cycles.iter().filter(|x| x.kind == CycleKind::Small).count();
        c.ok(smalls <= 1, &format!("at most one small cycle at ({a:.3}, {b:.3}, {delta:.3})"));
        if b <= -4.0 / 3.0 * a1 * a1 {
            c.ok(smalls == 0, &format!("no small cycle for b <= -4/3 (a+1)^2 at ({a:.3}, {b:.3})"));
        }
        c.ok(cycles.len() <= 3, &format!("at most three cycles at ({a:.3}, {b:.3}, {delta:.3})"));
        if b < -a1 * a1 {
            for cy in cycles.iter().filter(|x| x.kind == CycleKind::Crossing) {
                match verify_surround(cy, &params) {
                    Ok(true) => checked_surround += 1,
                    Ok(false) => c.ok(false, &format!("crossing cycle at ({a:.3}, {b:.3}) does not surround (sqrt(-3b), 0)")),
                    Err(e) => c.ok(false, &format!("verify_surround: {e}")),
                }
            }
        }
        if !c.passed {
            break;
        }
    }

    // displacement monotone in b_tilde and in delta at fixed b_tilde
    for _ in 0..12 {
        let a = rng.gen_range(1.1..2.5);
        let a1 = a + 1.0;
        let c0 = -rng.gen_range(0.1..0.8);
        let delta = rng.gen_range(0.05..0.3);
        let b_lo = rng.gen_range(-1.6..-1.2) * a1 * a1;
        let b_hi = b_lo + rng.gen_range(0.05..0.3) * a1 * a1;
        let d = |bb: f64, dd: f64| {
            let p = Params::new(a, bb, dd).unwrap();
            shoot(c0, &p, &IntegratorCtrl::for_params(&p))
                .ok()
                .and_then(|s| s.displacement())
        };
        if let (Some(dl), Some(dh)) = (d(b_lo, delta), d(b_hi, delta)) {
            c.ok(dl > dh, &format!("monotone in b at a={a:.3}: d({b_lo:.3})={dl:.6} d({b_hi:.3})={dh:.6}"));
        }
        // same b_tilde, larger delta => smaller displacement
        let delta2 = delta * 1.5;
        let b2 = b_lo * delta / delta2;
        if let (Some(dl), Some(dh)) = (d(b_lo, delta), d(b2, delta2)) {
            c.ok(dl > dh, &format!("monotone in delta at fixed b_tilde, a={a:.3}"));
        }
    }

    // energy identity along flows, away from the switching line
    for _ in 0..10 {
        let a = rng.gen_range(1.2..3.0);
        let b = rng.gen_range(-2.0..-1.1) * (a + 1.0) * (a + 1.0);
        let delta = rng.gen_range(0.05..0.3);
        let params = Params::new(a, b, delta).unwrap();
        let ctrl = IntegratorCtrl { t_max: 8.0, ..IntegratorCtrl::for_params(&params) };
        let start = PhasePoint::sd(rng.gen_range(1.0..4.0), rng.gen_range(-2.0..2.0));
        let tr = crate::integrate::flow(
            &start,
            &params,
            &[],
            &ctrl,
            crate::integrate::TimeDirection::Forward,
        )
        .unwrap();
        for (_, q) in tr.samples.iter().step_by(9) {
            if abs(q.x) < 0.3 {
                continue;
            }
            let de = flow_energy_rate(q, &params);
            let d = lienard_data(q.x, &params);
            let expect = -d.f_int * d.g;
            c.ok(
                abs(de - expect) <= 1e-8 * (1.0 + abs(expect)),
                &format!("energy identity at ({}, {})", q.x, q.y),
            );
        }
        if !c.passed {
            break;
        }
    }
    c.note(&format!("{checked_surround} surround checks"));
    c
}

/// Two-sided difference quotient of the energy along the flow with tiny RK4
/// steps; independent of the adaptive integrator.
fn flow_energy_rate(p: &PhasePoint, params: &Params) -> f64 {
    let rk4 = |p0: &PhasePoint, h: f64| -> PhasePoint {
        let f = |q: &PhasePoint| vector_field(q, params).unwrap();
        let k1 = f(p0);
        let q2 = PhasePoint { x: p0.x + 0.5 * h * k1.0, y: p0.y + 0.5 * h * k1.1, ..*p0 };
        let k2 = f(&q2);
        let q3 = PhasePoint { x: p0.x + 0.5 * h * k2.0, y: p0.y + 0.5 * h * k2.1, ..*p0 };
        let k3 = f(&q3);
        let q4 = PhasePoint { x: p0.x + h * k3.0, y: p0.y + h * k3.1, ..*p0 };
        let k4 = f(&q4);
        PhasePoint {
            x: p0.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y: p0.y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            ..*p0
        }
    };
    // scale the step down with the state so the quotient's truncation error
    // stays below the 1e-8 relative target even on large orbits
    let h = 1e-5 / (1.0 + crate::math::hypot(p.x, p.y));
    (energy(&rk4(p, h), params) - energy(&rk4(p, -h), params)) / (2.0 * h)
}

fn c10() -> Check {
    let mut c = Check::new();
    let delta = 1e-3;
    for a in [1.25, 1.3] {
        let a1: f64 = a + 1.0;
        // Melnikov prediction of the three-zero window
        let b2 = b2_of_a(a, 1e-10).unwrap();
        let b3 = b3_of_a(a, 1e-10).unwrap();
        let top_mel = (-1.25 * a1 * a1).min(b3);
        // shooting window at small delta
        let (rho2, _) = match trace_double_cycle_at(DoubleCycleKind::Dl2, a, delta, 1e-8) {
            Ok(v) => v,
            Err(e) => {
                c.ok(false, &format!("rho2({a}, 1e-3): {e}"));
                continue;
            }
        };
        let (phi1, _) = trace_grazing_at(a, delta, 1e-8).unwrap();
        let rho1 = trace_double_cycle_at(DoubleCycleKind::Dl1, a, delta, 1e-8)
            .map(|v| v.0)
            .unwrap_or(f64::INFINITY);
        let top_shoot = phi1.min(rho1);
        let lo_rel = abs(rho2 - b2) / abs(b2);
        let hi_rel = abs(top_shoot - top_mel) / abs(top_mel);
        c.ok(lo_rel <= 0.02, &format!("window bottom at a={a}: {rho2:.5} vs b2={b2:.5} ({lo_rel:.4} rel)"));
        c.ok(hi_rel <= 0.02, &format!("window top at a={a}: {top_shoot:.5} vs {top_mel:.5} ({hi_rel:.4} rel)"));
        c.note(&format!(
            "a={a}: shooting ({rho2:.5}, {top_shoot:.5}) vs Melnikov ({b2:.5}, {top_mel:.5})"
        ));
    }
    c
}

fn c11() -> Check {
    let mut c = Check::new();
    let grid: Vec<f64> = (1..=80).map(|i| 0.8 * i as f64 / 81.0).collect();
    for a in [1.5, 2.0, 3.0, 8.0, 12.0] {
        for &h in &grid {
            let v = s1(h, a).unwrap();
            if v >= 0.0 {
                c.ok(false, &format!("S1({h:.3}, {a}) = {v:e} >= 0"));
                break;
            }
        }
        let s = s1_sign_structure(a, &grid).unwrap();
        c.ok(
            s.sign_changes_of_ds1 <= 1,
            &format!("dS1/dh sign changes at a={a}: {}", s.sign_changes_of_ds1),
        );
    }
    c
}
