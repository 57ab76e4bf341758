//! Diagram-slice assembly and global classification at delta = 0.1.

use sdosc_core::bifurcation::{classify_global, diagram_slice, GlobalRegionLabel};

#[test]
fn slice_orderings_and_classification() {
    let delta = 0.1;
    let grid = [1.2, 1.3, 1.33, 1.35];
    let slice = diagram_slice(delta, &grid, 1e-7).unwrap();

    // grazing samples strictly decreasing in b as a increases
    let mut prev = f64::INFINITY;
    for s in slice.grazing.iter().filter(|s| s.valid) {
        assert!(s.b < prev, "grazing not decreasing at a = {}", s.a);
        prev = s.b;
    }

    // window ordering at every a with a valid fold pair:
    // -3(a+1)^2 < rho2 < min(phi1, rho1) and phi1, rho1, rho2 < -(a+1)^2
    for (i, d2) in slice.dl2.iter().enumerate() {
        if !d2.valid {
            continue;
        }
        let a1 = d2.a + 1.0;
        let phi1 = slice.grazing[i].b;
        assert!(d2.b > -3.0 * a1 * a1);
        assert!(d2.b < phi1);
        if slice.dl1[i].valid {
            assert!(d2.b < slice.dl1[i].b);
            assert!(slice.dl1[i].b < -a1 * a1);
        }
        assert!(phi1 < -a1 * a1);
    }

    // the grazing and outer-fold curves cross once on this grid, between
    // the a = 1.2 ordering (rho1 above phi1) and the window's closure
    assert!(
        !slice.p_points.is_empty(),
        "no P point found: dl1 = {:?}",
        slice.dl1
    );
    let p = slice.p_points[0];
    assert!(p.0 > 1.2 && p.0 < 1.4, "P at a = {}", p.0);

    // region labels of the section-5 sample points
    let classify = |a: f64, b: f64| classify_global(a, b, delta, &slice).unwrap();
    assert_eq!(classify(1.2, -5.2), GlobalRegionLabel::II);
    assert_eq!(classify(1.2, -6.0), GlobalRegionLabel::V);
    assert_eq!(classify(1.2, -4.0), GlobalRegionLabel::I);
    assert_eq!(classify(1.2, -4.84), GlobalRegionLabel::H);
    // between the grazing and outer-fold curves at a = 1.2: small + two
    // crossing cycles
    let phi1 = slice.grazing[0].b;
    let rho1 = slice.dl1[0].b;
    assert!(rho1 > phi1, "at a = 1.2 the outer fold sits above grazing");
    assert_eq!(classify(1.2, 0.5 * (phi1 + rho1)), GlobalRegionLabel::III);
    // between the inner fold and grazing: three crossing cycles
    let rho2 = slice.dl2[0].b;
    assert_eq!(classify(1.2, 0.5 * (rho2 + phi1)), GlobalRegionLabel::IV);
    // snapped boundary labels (the DL1 sub-label keys on the phi1/rho1
    // order: phi1 < rho1 at a = 1.2)
    assert_eq!(classify(1.2, rho1), GlobalRegionLabel::DL12);
    assert_eq!(classify(1.2, rho2), GlobalRegionLabel::DL2);
    assert_eq!(classify(1.2, phi1), GlobalRegionLabel::G1);

    // out of coverage reports the offending abscissa
    assert!(classify_global(0.9, -5.0, delta, &slice).is_err());
    assert!(classify_global(4.4, -20.0, delta, &slice).is_err());
}

#[test]
fn classification_matches_cycle_inventory() {
    use rand::{Rng, SeedableRng};
    use sdosc_core::integrate::IntegratorCtrl;
    use sdosc_core::model::Params;
    use sdosc_core::poincare::{find_cycles, CycleKind, ScanCtrl, Stability};

    let delta = 0.1;
    let grid = [1.21, 1.27, 1.33];
    let slice = diagram_slice(delta, &grid, 1e-7).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);

    let mut checked = 0;
    let mut tries = 0;
    while checked < 24 && tries < 200 {
        tries += 1;
        let a = rng.gen_range(1.215..1.325);
        let a1: f64 = a + 1.0;
        // half the samples target the thin bands between the curves
        let b = if tries % 2 == 0 {
            rng.gen_range(-2.0..-0.6) * a1 * a1
        } else {
            let g = slice.grazing.iter().filter(|s| s.valid).min_by(|u, v| {
                (u.a - a).abs().partial_cmp(&(v.a - a).abs()).unwrap()
            });
            let Some(g) = g else { continue };
            g.b + rng.gen_range(-0.03..0.03)
        };
        let label = match classify_global(a, b, delta, &slice) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let expect: &[(CycleKind, Option<Stability>)] = match label {
            GlobalRegionLabel::I => &[],
            GlobalRegionLabel::II => &[(CycleKind::Small, Some(Stability::Stable))],
            GlobalRegionLabel::III => &[
                (CycleKind::Small, Some(Stability::Stable)),
                (CycleKind::Crossing, Some(Stability::Unstable)),
                (CycleKind::Crossing, Some(Stability::Stable)),
            ],
            GlobalRegionLabel::IV => &[
                (CycleKind::Crossing, Some(Stability::Stable)),
                (CycleKind::Crossing, Some(Stability::Unstable)),
                (CycleKind::Crossing, Some(Stability::Stable)),
            ],
            GlobalRegionLabel::V => &[(CycleKind::Crossing, Some(Stability::Stable))],
            _ => continue, // boundary labels are measure-zero; skip
        };
        let params = Params::new(a, b, delta).unwrap();
        let cycles =
            find_cycles(&params, &IntegratorCtrl::for_params(&params), &ScanCtrl::default())
                .unwrap();
        let got: Vec<(CycleKind, Stability)> =
            cycles.iter().map(|c| (c.kind, c.stability)).collect();
        assert_eq!(
            got.len(),
            expect.len(),
            "label {label:?} at (a={a:.4}, b={b:.4}): inventory {got:?}"
        );
        for (g, e) in got.iter().zip(expect) {
            assert_eq!(g.0, e.0, "kind at (a={a:.4}, b={b:.4}), label {label:?}");
            if let Some(st) = e.1 {
                assert_eq!(g.1, st, "stability at (a={a:.4}, b={b:.4}), label {label:?}");
            }
        }
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} classified samples out of {tries} tries");
}

#[test]
fn small_delta_window_closure_approaches_melnikov_merge_point() {
    // as delta -> 0 the fold window closes where the b2/b3 curves merge
    let a0 = sdosc_core::bifurcation::estimate_a0(1e-3, 0.02).unwrap();
    let sp = sdosc_core::melnikov::special_points(1e-8).unwrap();
    let rel = (a0 - sp.a_double_star).abs() / sp.a_double_star;
    assert!(rel < 0.05, "a0(1e-3) = {a0} vs a** = {}", sp.a_double_star);
}
