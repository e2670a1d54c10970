use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use lagca::engine::rebuild_occupancy;
use lagca::engine::rng::Rng;
use lagca::grid::{Boundary, Grid};
use lagca::interaction::rules::canonical_spin;
use lagca::interaction::{
    apply_combine, apply_split, detect_interaction, enumerate_channels, form_interaction_object, generate_out_pw,
    merge_channels, momentum_grid, perform_interaction, process_channels, Equivalence, InteractionConfig,
    InteractionError, MemberState, MergedChannels, Momentum, PathRow, PwCollection, RuleTable, SignTable, Template,
    UniformAmplitude, VertexRule,
};
use lagca::state::{Dynamics, ObjectId, ParticleType, ParticleWave, SystemState};

const DX: f64 = 0.25;

fn grid() -> Grid {
    Grid::new_1d(64, DX, -8.0, Boundary::Periodic)
}

fn member(kind: ParticleType, x: f64, p: f64) -> MemberState {
    MemberState {
        t: 0.0,
        x,
        p,
        spin: canonical_spin(kind),
        kind,
    }
}

/// Adds a particle whose paths sit at `paths` (position, momentum) with
/// equal amplitudes.
fn add_particle(s: &mut SystemState, id: &str, kind: ParticleType, paths: &[(f64, f64)]) {
    let amp = Complex64::new(1.0 / (paths.len() as f64).sqrt(), 0.0);
    let rows = paths
        .iter()
        .map(|&(x, p)| PathRow {
            members: vec![member(kind, x, p)],
            amplitude: amp,
        })
        .collect();
    let collection = s.add_collection(PwCollection { rows });
    s.particles.insert(
        ObjectId::new(id),
        ParticleWave {
            id: ObjectId::new(id),
            kind,
            mass: if kind == ParticleType::Photon { 0.0 } else { 1.0 },
            relativistic: false,
            tau: 0.0,
            collection,
            member: 0,
            dynamics: Dynamics::Free,
        },
    );
    rebuild_occupancy(s);
}

fn pair_state(e: &[(f64, f64)], g: &[(f64, f64)]) -> SystemState {
    let mut s = SystemState::empty(grid(), 5);
    add_particle(&mut s, "e", ParticleType::Electron, e);
    add_particle(&mut s, "g", ParticleType::Photon, g);
    s
}

fn config(granularity: usize, window: f64) -> InteractionConfig {
    InteractionConfig {
        granularity,
        window,
        pairs: vec![(ObjectId::new("e"), ObjectId::new("g"))],
        ..InteractionConfig::default()
    }
}

fn ids() -> (ObjectId, ObjectId) {
    (ObjectId::new("e"), ObjectId::new("g"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_stage_conserves_momentum(
        pe in prop::collection::vec(-3.0f64..3.0, 1..4),
        pg in -3.0f64..3.0,
        granularity in 1usize..10,
        window in 0.1f64..2.0,
    ) {
        // All electron paths share the interaction cell.
        let e: Vec<(f64, f64)> = pe.iter().enumerate().map(|(i, &p)| (0.01 * i as f64, p)).collect();
        let s = pair_state(&e, &[(0.0, pg)]);
        let cfg = config(granularity, window);
        let (ei, gi) = ids();
        let cell = s.grid.cell_of(0.0);
        let obj = form_interaction_object(&s, &ei, &gi, cell, cfg.hbar).unwrap();
        let totals: Vec<Momentum> = obj.table.rows.iter().map(|r| r.total_momentum()).collect();
        let channels = enumerate_channels((ParticleType::Electron, ParticleType::Photon), &cfg.rules, cfg.equivalence);
        for (ch, c) in process_channels(&obj, &channels, &cfg).unwrap() {
            for row in &c.rows {
                prop_assert!(totals.contains(&row.total_momentum()), "{} broke conservation", ch.template);
            }
        }
        for row in &obj.table.rows {
            let g = momentum_grid(row.total_momentum(), granularity, window);
            for rule in cfg.rules.enabled() {
                if rule.splits(ParticleType::Electron) {
                    for r in apply_split(row, 0, rule, &g, 0, &UniformAmplitude).unwrap() {
                        prop_assert_eq!(r.total_momentum(), row.total_momentum());
                    }
                }
                if rule.combines(ParticleType::Electron, ParticleType::Photon) {
                    let r = apply_combine(row, 0, 1, rule, &UniformAmplitude).unwrap();
                    prop_assert_eq!(r.total_momentum(), row.total_momentum());
                }
            }
        }
        let mut s = s;
        let event = perform_interaction(&mut s, &ei, &gi, cell, &cfg).unwrap().unwrap();
        let out = &s.collections[&s.particles[&event.out_ids[0]].collection];
        prop_assert!((out.norm2() - 1.0).abs() < 1e-9);
        for row in &out.rows {
            prop_assert!(totals.contains(&row.total_momentum()));
        }
    }

    #[test]
    fn momentum_grid_is_symmetric_about_half_the_total(total in -4_000_000i64..4_000_000, n in 1usize..12) {
        let total = Momentum(2 * total);
        let g = momentum_grid(total, n, 1.0);
        prop_assert_eq!(g.len(), n);
        for (a, b) in g.iter().zip(g.iter().rev()) {
            prop_assert_eq!(*a + *b, total);
        }
    }
}

#[test]
fn detection_matches_a_direct_overlap_count() {
    let e: Vec<(f64, f64)> = (10..=16).map(|c| (grid().x(c), 0.0)).collect();
    let g: Vec<(f64, f64)> = (12..=18).map(|c| (grid().x(c), 1.0)).collect();
    let s = pair_state(&e, &g);
    let cands = detect_interaction(&s, &config(4, 1.0));
    let cells: Vec<usize> = cands.iter().map(|c| c.cell).collect();
    assert_eq!(cells, vec![12, 13, 14, 15, 16]);
    for c in &cands {
        assert!((c.weight - 1.0 / 49.0).abs() < 1e-15);
    }
}

#[test]
fn detection_ignores_pairs_not_listed() {
    let s = pair_state(&[(0.0, 0.0)], &[(0.0, 1.0)]);
    let mut cfg = config(4, 1.0);
    cfg.pairs = vec![(ObjectId::new("e"), ObjectId::new("nobody"))];
    assert!(detect_interaction(&s, &cfg).is_empty());
}

#[test]
fn interaction_object_keeps_only_covering_paths() {
    let s = pair_state(&[(0.0, 0.5), (0.1, 0.5), (3.0, 0.5)], &[(0.05, 1.0)]);
    let (e, g) = ids();
    let cell = s.grid.cell_of(0.0);
    let obj = form_interaction_object(&s, &e, &g, cell, 1.0).unwrap();
    assert_eq!(obj.table.rows.len(), 2);
    assert_eq!(obj.covering_paths, [vec![0, 1], vec![0]]);
    for r in &obj.table.rows {
        assert!((r.amplitude.norm_sqr() - 0.5).abs() < 1e-15);
        assert!(r.members.iter().all(|m| m.x == s.grid.x(cell)));
        assert_eq!(r.members[0].kind, ParticleType::Electron);
        assert_eq!(r.members[1].kind, ParticleType::Photon);
    }
    let far = s.grid.cell_of(-6.0);
    assert!(matches!(
        form_interaction_object(&s, &e, &g, far, 1.0),
        Err(InteractionError::ContractViolation(_))
    ));
}

fn electron_row(p: f64, amplitude: f64) -> PathRow {
    PathRow {
        members: vec![member(ParticleType::Electron, 0.0, p), member(ParticleType::Photon, 0.0, 0.0)],
        amplitude: Complex64::new(amplitude, 0.0),
    }
}

#[test]
fn split_with_one_grid_point() {
    let rule = VertexRule::split(ParticleType::Electron, ParticleType::Electron, ParticleType::Photon, 0.3);
    let row = electron_row(1.0, 0.5);
    let g = [Momentum::snap(0.25)];
    let out = apply_split(&row, 0, &rule, &g, 1, &UniformAmplitude).unwrap();
    assert_eq!(out.len(), 1);
    let kinds: Vec<ParticleType> = out[0].members.iter().map(|m| m.kind).collect();
    assert_eq!(kinds, [ParticleType::Electron, ParticleType::Photon, ParticleType::Photon]);
    assert_eq!(out[0].members[0].p, 0.75);
    assert_eq!(out[0].members[1].p, 0.25);
    assert!((out[0].amplitude.re - 0.15).abs() < 1e-15);
}

#[test]
fn split_of_a_particle_at_rest_over_four_points() {
    let rule = VertexRule::split(ParticleType::Electron, ParticleType::Electron, ParticleType::Photon, 1.0);
    let row = electron_row(0.0, 1.0);
    let g = momentum_grid(Momentum(0), 4, 1.0);
    assert_eq!(g.iter().map(|m| m.value()).collect::<Vec<_>>(), [-0.75, -0.25, 0.25, 0.75]);
    let out = apply_split(&row, 0, &rule, &g, 0, &UniformAmplitude).unwrap();
    assert_eq!(out.len(), 4);
    for (r, gp) in out.iter().zip(&g) {
        assert_eq!(r.members[0].p, gp.value());
        assert_eq!(r.members[1].p, -gp.value());
        assert!((r.amplitude.norm_sqr() - 0.25).abs() < 1e-15);
    }
    let total: f64 = out.iter().map(|r| r.amplitude.norm_sqr()).sum();
    assert!((total - 1.0).abs() < 1e-15);
}

#[test]
fn split_rejects_the_wrong_parent() {
    let rule = VertexRule::split(ParticleType::Photon, ParticleType::Electron, ParticleType::Positron, 1.0);
    let err = apply_split(&electron_row(0.0, 1.0), 0, &rule, &[Momentum(0)], 0, &UniformAmplitude).unwrap_err();
    assert!(matches!(err, InteractionError::RuleMismatch { .. }));
    assert_eq!(
        apply_split(&electron_row(0.0, 1.0), 0, &rule, &[], 0, &UniformAmplitude).unwrap_err(),
        InteractionError::Granularity
    );
}

#[test]
fn combine_multiplies_by_the_coupling() {
    let rule = VertexRule::combine(ParticleType::Electron, ParticleType::Photon, ParticleType::Electron, 0.3);
    let mut row = electron_row(0.5, 0.5);
    row.members[1].p = 0.25;
    let out = apply_combine(&row, 0, 1, &rule, &UniformAmplitude).unwrap();
    assert_eq!(out.members.len(), 1);
    assert_eq!(out.members[0].kind, ParticleType::Electron);
    assert_eq!(out.members[0].p, 0.75);
    assert!((out.amplitude.re - 0.15).abs() < 1e-15);
    let pair = VertexRule::combine(ParticleType::Electron, ParticleType::Positron, ParticleType::Photon, 1.0);
    assert!(apply_combine(&row, 0, 1, &pair, &UniformAmplitude).is_err());
}

fn table(rows: &[(f64, f64)]) -> PwCollection {
    PwCollection {
        rows: rows.iter().map(|&(p, a)| electron_row(p, a)).collect(),
    }
}

#[test]
fn merging_adds_signed_amplitudes() {
    let a = table(&[(0.0, 0.6), (1.0, 0.0)]);
    let b = table(&[(0.0, 0.2), (1.0, 0.4)]);
    let mut signs = SignTable::default();
    let merged = merge_channels(&[(Template::T2, a.clone()), (Template::T3, b.clone())], &signs, 1e-12).unwrap();
    assert!((merged.weight - (0.64 + 0.16)).abs() < 1e-12);
    assert!((merged.collection.norm2() - 1.0).abs() < 1e-12);
    assert_eq!(merged.templates, [Template::T2, Template::T3]);

    signs.set(Template::T2, Template::T3, -1.0);
    let merged = merge_channels(&[(Template::T2, a.clone()), (Template::T3, b)], &signs, 1e-12).unwrap();
    assert!((merged.weight - (0.16 + 0.16)).abs() < 1e-12);

    let cancelled = merge_channels(&[(Template::T2, a.clone()), (Template::T3, a)], &signs, 1e-12);
    assert_eq!(cancelled, Err(InteractionError::NoInteractionResult));
}

#[test]
fn merging_rejects_channels_with_different_rows() {
    let a = table(&[(0.0, 0.6)]);
    let b = table(&[(1.0, 0.6)]);
    let r = merge_channels(&[(Template::T2, a), (Template::T3, b)], &SignTable::default(), 1e-12);
    assert!(matches!(r, Err(InteractionError::ContractViolation(_))));
}

fn out_pair_counts(weights: [f64; 2], trials: u64) -> [u64; 2] {
    let s = pair_state(&[(0.0, 0.5)], &[(0.0, 1.0)]);
    let (e, g) = ids();
    let cell = s.grid.cell_of(0.0);
    let obj = form_interaction_object(&s, &e, &g, cell, 1.0).unwrap();
    let pairs = [
        [ParticleType::Electron, ParticleType::Photon],
        [ParticleType::Electron, ParticleType::Electron],
    ];
    let merged: Vec<([ParticleType; 2], MergedChannels)> = (0..2)
        .map(|k| {
            let mut c = obj.table.clone();
            c.rows[0].members[1].kind = pairs[k][1];
            (
                pairs[k],
                MergedChannels {
                    collection: c,
                    weight: weights[k],
                    templates: vec![Template::T1],
                },
            )
        })
        .collect();
    let cfg = config(4, 1.0);
    let mut counts = [0u64; 2];
    let mut rng = Rng::seeded(99);
    for _ in 0..trials {
        let mut st = s.clone();
        st.rng = Rng::seeded(rng.next_u64());
        let ev = generate_out_pw(&mut st, &obj, merged.clone(), &cfg).unwrap();
        counts[pairs.iter().position(|p| *p == ev.out_types).unwrap()] += 1;
    }
    counts
}

fn chi_square_p(counts: [u64; 2], probs: [f64; 2]) -> f64 {
    let n: u64 = counts.iter().sum();
    let chi2: f64 = (0..2)
        .map(|i| {
            let e = probs[i] * n as f64;
            (counts[i] as f64 - e).powi(2) / e
        })
        .sum();
    ChiSquared::new(1.0).unwrap().sf(chi2)
}

#[test]
fn out_pair_draw_follows_weights() {
    let counts = out_pair_counts([0.8, 0.2], 20_000);
    let frac = counts[0] as f64 / 20_000.0;
    assert!((frac - 0.8).abs() < 0.015, "{frac}");
    assert!(chi_square_p(counts, [0.8, 0.2]) > 0.001);
}

#[test]
fn equal_weights_draw_evenly() {
    let counts = out_pair_counts([0.5, 0.5], 20_000);
    assert!(chi_square_p(counts, [0.5, 0.5]) > 0.001, "{counts:?}");
}

#[test]
fn out_particles_share_one_table() {
    let mut s = pair_state(&[(0.0, 0.5)], &[(0.0, 1.0)]);
    let (e, g) = ids();
    let cell = s.grid.cell_of(0.0);
    let ev = perform_interaction(&mut s, &e, &g, cell, &config(6, 1.0)).unwrap().unwrap();
    let [a, b] = &ev.out_ids;
    assert_eq!(s.particles[a].collection, s.particles[b].collection);
    assert_ne!(s.particles[a].member, s.particles[b].member);
    assert!(!s.contains(&e) && !s.contains(&g));
    assert_eq!(ev.rows, s.collections[&s.particles[a].collection].rows.len());
}

#[test]
fn types_without_channels_leave_the_state_alone() {
    let mut s = SystemState::empty(grid(), 3);
    add_particle(&mut s, "e", ParticleType::Generic, &[(0.0, 0.0)]);
    add_particle(&mut s, "g", ParticleType::Generic, &[(0.0, 1.0)]);
    let before = s.clone();
    let (e, g) = ids();
    let cell = s.grid.cell_of(0.0);
    assert_eq!(perform_interaction(&mut s, &e, &g, cell, &config(4, 1.0)).unwrap(), None);
    assert_eq!(s, before);
}

#[test]
fn electron_photon_channels() {
    let table = RuleTable::qed(1.0);
    let by_eq: BTreeMap<&str, usize> = [Equivalence::VertexPartition, Equivalence::RuleBinding]
        .into_iter()
        .map(|eq| {
            (
                eq.name(),
                enumerate_channels((ParticleType::Electron, ParticleType::Photon), &table, eq).len(),
            )
        })
        .collect();
    assert_eq!(by_eq["vertex-partition"], 2);
    assert!(by_eq.values().all(|&n| n >= 2));
}
