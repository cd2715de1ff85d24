use symchord_core::chords::{partner_chord, relative_determinant, shoot, shooting_data, Chord, ShootOptions};
use symchord_core::continuation::{
    branch_switch, continue_family, locate_index_jump, scan_bifurcation_diagram, BranchSwitchOptions,
    ContinuationOptions, EventKind, Family, FamilySeed, ScanDiagramOptions, Side,
};
use symchord_core::flow::{integrate_variational, FlowOptions};
use symchord_core::index::degeneracy_measure;
use symchord_core::kepler::{circular_data, tau_kl, ResonanceLabel};
use symchord_core::systems::{make_system, ReversibleSystem};

fn kepler() -> ReversibleSystem {
    make_system("rotating-kepler").unwrap()
}

fn cover_family(sys: &ReversibleSystem, cover: u64, range: (f64, f64)) -> Family {
    let c = circular_data(range.0).unwrap();
    let seed = shoot(sys, "rho0", range.0, c.r, c.cover_duration(cover), &ShootOptions::default()).unwrap();
    continue_family(sys, &seed, range, &ContinuationOptions::default()).unwrap()
}

fn tau(k: u64, l: u64) -> f64 {
    tau_kl(ResonanceLabel::new(k, l).unwrap())
}

#[test]
fn triple_cover_jumps_at_its_resonances() {
    let sys = kepler();
    let fam = cover_family(&sys, 3, (-2.0, -1.62));
    let events = locate_index_jump(&sys, &fam, &ContinuationOptions::default()).unwrap();
    let taus: Vec<f64> = events.iter().map(|e| e.tau_star).collect();
    assert_eq!(events.len(), 2, "{taus:?}");
    assert!((taus[0] - tau(4, 1)).abs() < 1e-6);
    assert!((taus[1] - tau(5, 2)).abs() < 1e-6);
    assert!(events.iter().all(|e| e.kind == EventKind::IndexJump && e.p.abs() == 1));
    assert!(events.iter().all(|e| e.inherited_from_cover.is_none()));
    // plateaus are separated exactly at the events
    let plateaus = fam.plateaus();
    assert_eq!(plateaus.len(), 3);
    for (p, e) in plateaus.windows(2).zip(&events) {
        assert!(fam.points[p[0].last].tau() < e.tau_star && e.tau_star < fam.points[p[1].first].tau());
    }
}

#[test]
fn reversed_range_gives_the_same_events() {
    let sys = kepler();
    let t31 = tau(3, 1);
    let opts = ContinuationOptions::default();
    let forward = cover_family(&sys, 2, (t31 - 0.05, t31 + 0.05));
    let c = circular_data(t31 + 0.05).unwrap();
    let seed = shoot(&sys, "rho0", t31 + 0.05, c.r, c.cover_duration(2), &opts.shoot).unwrap();
    let backward = continue_family(&sys, &seed, (t31 + 0.05, t31 - 0.05), &opts).unwrap();
    assert!(backward.points.windows(2).all(|w| w[0].tau() < w[1].tau()));
    let a = locate_index_jump(&sys, &forward, &opts).unwrap();
    let b = locate_index_jump(&sys, &backward, &opts).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(b.len(), 1);
    assert!((a[0].tau_star - b[0].tau_star).abs() < 1e-7);
    assert_eq!((a[0].mu_left_x2, a[0].mu_right_x2), (b[0].mu_left_x2, b[0].mu_right_x2));
    let ends = |f: &Family| (f.points[0].mu_x2, f.points.last().unwrap().mu_x2);
    assert_eq!(ends(&forward), ends(&backward));
}

/// The shooting Jacobian and the index measure lose transversality together.
#[test]
fn shooting_determinant_vanishes_with_the_measure() {
    let sys = kepler();
    let t31 = tau(3, 1);
    let fam = cover_family(&sys, 2, (t31 - 0.02, t31 + 0.02));
    let event = &locate_index_jump(&sys, &fam, &ContinuationOptions::default()).unwrap()[0];
    let spec = event.chord.spec();
    // the family member is the closed-form circular chord
    let det_at = |t: f64| -> f64 {
        let c = circular_data(t).unwrap();
        let data = shooting_data(&sys, &spec.with_tau(t), c.r, c.cover_duration(2), &FlowOptions::default()).unwrap();
        relative_determinant(&data.jacobian)
    };
    let (mut a, mut b) = (event.tau_star - 1e-3, event.tau_star + 1e-3);
    let (da, db) = (det_at(a), det_at(b));
    assert!(da * db < 0.0, "{da} {db}");
    while b - a > 1e-9 {
        let m = 0.5 * (a + b);
        if det_at(m) * da > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    assert!((0.5 * (a + b) - event.tau_star).abs() < 1e-6);
}

#[test]
fn covered_circular_chords_degenerate_at_their_resonances() {
    let sys = kepler();
    let rho = sys.involution("rho0").unwrap();
    for k in 2..=7u64 {
        for l in 1..k {
            let Ok(lbl) = ResonanceLabel::new(k, l) else { continue };
            if lbl.cover() > 3 {
                continue;
            }
            let c = circular_data(tau_kl(lbl)).unwrap();
            let seg = integrate_variational(&sys, &c.point, c.cover_duration(lbl.cover()), &FlowOptions::default()).unwrap();
            let m = degeneracy_measure(&sys, &seg, rho, rho).unwrap();
            assert!(m.abs() < 1e-6, "({k},{l}): {m:e}");
        }
    }
}

fn branches_at_tau31(sys: &ReversibleSystem) -> Vec<Chord> {
    let t31 = tau(3, 1);
    let fam = cover_family(sys, 2, (t31 - 0.02, t31 + 0.02));
    let event = locate_index_jump(sys, &fam, &ContinuationOptions::default()).unwrap().remove(0);
    branch_switch(sys, &event, Side::Plus, &BranchSwitchOptions::default()).unwrap()
}

#[test]
fn partner_of_a_branch_chord_returns_to_it() {
    let sys = kepler();
    let opts = ShootOptions::default();
    let branches = branches_at_tau31(&sys);
    assert!(!branches.is_empty());
    for ch in &branches {
        let partner = partner_chord(&sys, ch, &opts).unwrap();
        let back = partner_chord(&sys, &partner, &opts).unwrap();
        assert!((back.s - ch.s).abs() < 1e-8 && (back.duration - ch.duration).abs() < 1e-8);
        assert!((partner.duration - ch.duration).abs() < 1e-8);
        assert_eq!(partner.nondegenerate, ch.nondegenerate);
    }
}

#[test]
fn inherited_events_are_not_primary() {
    let sys = kepler();
    let forest = scan_bifurcation_diagram(
        &sys,
        "rho0",
        &FamilySeed::KeplerCircular { cover: 2 },
        (-2.2, -1.55),
        &ScanDiagramOptions::default(),
    )
    .unwrap();
    assert_eq!(forest.events.len(), 2);
    let inherited: Vec<Option<u64>> = forest.events.iter().map(|e| e.inherited_from_cover).collect();
    assert_eq!(inherited, vec![None, Some(1)]);
    let primary: Vec<f64> = forest.primary_events().map(|e| e.tau_star).collect();
    assert_eq!(primary.len(), 1);
    assert!((primary[0] - tau(3, 1)).abs() < 1e-6);
    assert!(forest.csv().starts_with("family_id,tau,s,T,eta,mu_x2,m\n"));
    // main family plus one continued branch per switched chord
    let switched: usize = forest.events.iter().map(|e| e.branches.len()).sum();
    assert!(forest.families.len() > 1 && forest.families.len() <= 1 + switched);
}
