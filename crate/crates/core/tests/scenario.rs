use std::collections::BTreeMap;

use proptest::prelude::*;

use lagca::dsl::SystemKind;
use lagca::engine::init::{build_simulation, derive_model, SetupError, Simulation};
use lagca::engine::run;
use lagca::grid::Boundary;
use lagca::interaction::{Equivalence, Template};
use lagca::output::{emit_plot_data, read_snapshots, write_snapshots, RunRecord, SNAPSHOT_HEADER};
use lagca::scenario::{
    load_scenario, parse_scenario, write_scenario, ConstantSpec, Diagnostic, FieldSpec, GridSpec, HistoryPolicy,
    InitialVelocity, InteractionSpec, LoadedScenario, Model, ParticleSpec, PotentialSpec, Profile, RunSpec, Scenario,
    ScenarioError, Severity,
};
use lagca::state::{Dynamics, ParticleType};
use lagca::stencil::SchrodingerMode;

fn load(text: &str) -> LoadedScenario {
    parse_scenario(text, "s.toml").unwrap()
}

fn diagnostics(text: &str) -> Vec<Diagnostic> {
    let l = load(text);
    match build_simulation(&l.scenario, &l.provenance) {
        Err(SetupError::Invalid(d)) => d,
        Ok(sim) => sim.warnings.clone(),
        Err(e) => panic!("unexpected {e}"),
    }
}

fn errors(text: &str) -> Vec<Diagnostic> {
    diagnostics(text).into_iter().filter(|d| d.severity == Severity::Error).collect()
}

fn wave(dt: f64) -> String {
    format!(
        r#"[model]
lagrangian = "1/2*d(psi,t)^2 - 1/2*v^2*d(psi,x)^2"
[constants]
v = 1.0
[grid]
cells = 100
dx = 0.1
[run]
dt = {dt:e}
[field.f]
profile = "gaussian"
"#
    )
}

fn schrodinger(dt: f64) -> String {
    format!(
        r#"[model]
equation = "d(psi,t) = i*hbar/(2*m)*d2(psi,x)"
[constants]
hbar = 1.0
m = 1.0
[grid]
cells = 100
dx = 0.1
[run]
dt = {dt:e}
[field.f]
profile = "gaussian"
"#
    )
}

const OSCILLATOR: &str = include_str!("../../../scenarios/oscillator.toml");
const COMPTON: &str = include_str!("../../../scenarios/compton.toml");

fn simulation(text: &str) -> (LoadedScenario, Simulation) {
    let l = load(text);
    let sim = build_simulation(&l.scenario, &l.provenance).unwrap();
    (l, sim)
}

#[test]
fn oscillator_is_a_particle_model() {
    let l = load(OSCILLATOR);
    assert_eq!(derive_model(&l.scenario).unwrap().kind, SystemKind::Particle);
}

#[test]
fn seed_defaults_to_zero() {
    let l = load(&wave(0.05));
    assert_eq!(l.scenario.run.seed, 0);
    assert_eq!(l.provenance.of("run.seed"), "default");
    assert_eq!(l.provenance.of("run.dt"), "s.toml:9");
}

#[test]
fn field_scenarios_need_a_grid() {
    let text = wave(0.05).replace("[grid]\ncells = 100\ndx = 0.1\n", "");
    let errs = errors(&text);
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert!(errs[0].message.contains("grid"));
}

#[test]
fn courant_number_above_one_is_an_error() {
    let errs = errors(&wave(0.2));
    assert_eq!(errs.len(), 1);
    assert!(errs[0].message.contains("Courant number 2"), "{}", errs[0].message);
    assert_eq!(errs[0].location, "s.toml:9");
    let text = wave(0.2).replace("[run]\n", "[run]\nallow_unstable = true\n");
    let d = diagnostics(&text);
    assert!(d.iter().all(|d| d.severity == Severity::Warning) && !d.is_empty());
}

#[test]
fn small_diffusion_numbers_pass_quietly() {
    assert!(diagnostics(&schrodinger(0.001)).is_empty());
    let d = diagnostics(&schrodinger(0.004));
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].severity, Severity::Warning);
}

#[test]
fn unknown_pair_ids_are_located() {
    let text = COMPTON.replace(r#"pairs = [["e", "g"]]"#, r#"pairs = [["e", "nobody"]]"#);
    let errs = errors(&text);
    assert_eq!(errs.len(), 1);
    let line = text.lines().position(|l| l.starts_with("pairs")).unwrap() + 1;
    assert_eq!(errs[0].location, format!("s.toml:{line}"));
    assert!(errs[0].to_string().starts_with(&format!("s.toml:{line}: error:")));
}

#[test]
fn parse_errors_point_into_the_file() {
    match parse_scenario("[model]\nlagrangian = \n", "bad.toml") {
        Err(ScenarioError::Parse { file, line, .. }) => assert_eq!((file.as_str(), line), ("bad.toml", 2)),
        other => panic!("unexpected {other:?}"),
    }
    match parse_scenario("[model]\nlagrangian = \"x\"\n[grid]\ncells = 10\ndx = \"wide\"\n", "bad.toml") {
        Err(e @ ScenarioError::Invalid { .. }) => assert!(e.to_string().starts_with("bad.toml:5"), "{e}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_keys_only_warn() {
    let l = load(&wave(0.05).replace("[run]\n", "[run]\ncolour = \"blue\"\n"));
    assert_eq!(l.warnings.len(), 1);
    assert!(l.warnings[0].contains("colour"));
}

#[test]
fn digest_tracks_file_bytes() {
    let a = load(&wave(0.05));
    let b = load(&wave(0.05));
    let c = load(&(wave(0.05) + "\n"));
    assert_eq!(a.digest, b.digest);
    assert_ne!(a.digest, c.digest);
    assert_eq!(a.digest.len(), 64);
}

#[test]
fn loading_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.toml");
    std::fs::write(&path, wave(0.05)).unwrap();
    assert_eq!(load_scenario(&path).unwrap().scenario, load(&wave(0.05)).scenario);
    assert!(matches!(load_scenario(&dir.path().join("missing.toml")), Err(ScenarioError::Io { .. })));
}

#[test]
fn zero_ticks_write_only_the_initial_block() {
    let (_, mut sim) = simulation(&wave(0.05).replace("[run]\n", "[run]\nticks = 0\n"));
    let out = run(&sim.engine, &mut sim.state, sim.stop, sim.cadence).unwrap();
    let mut buf = Vec::new();
    write_snapshots(&out.snapshots, &mut buf).unwrap();
    let lines = read_snapshots(buf.as_slice()).unwrap();
    assert_eq!(lines.len(), 100);
    assert!(lines.iter().all(|l| l.tick == 0 && l.t == 0.0));
}

#[test]
fn snapshots_are_plain_csv() {
    let (_, mut sim) = simulation(&wave(0.05).replace("[run]\n", "[run]\nticks = 4\nsnapshot_every = 2\n"));
    let out = run(&sim.engine, &mut sim.state, sim.stop, sim.cadence).unwrap();
    let mut buf = Vec::new();
    write_snapshots(&out.snapshots, &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert!(rd.headers().unwrap().iter().eq(SNAPSHOT_HEADER));
    let mut ticks = std::collections::BTreeSet::new();
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        ticks.insert(rec[0].parse::<u64>().unwrap());
        let re: f64 = rec[5].parse().unwrap();
        let im: f64 = rec[6].parse().unwrap();
        let abs2: f64 = rec[7].parse().unwrap();
        assert!((re * re + im * im - abs2).abs() <= 1e-15 * (1.0 + abs2));
        rows += 1;
    }
    assert_eq!(ticks.into_iter().collect::<Vec<_>>(), [0, 2, 4]);
    assert_eq!(rows, 300);
    let typed = read_snapshots(buf.as_slice()).unwrap();
    assert_eq!(typed.len(), 300);
    assert!(read_snapshots("a,b\n1,2\n".as_bytes()).is_err());
}

#[test]
fn plot_data_has_one_row_per_particle_snapshot() {
    let text = OSCILLATOR.replace("ticks = 1000", "ticks = 2").replace("snapshot_every = 10", "snapshot_every = 1");
    let (l, mut sim) = simulation(&text);
    let mut record = RunRecord::start(&l.digest, &l.scenario, &sim);
    let out = run(&sim.engine, &mut sim.state, sim.stop, sim.cadence).unwrap();
    record.finish(out, &sim.state);
    let mut buf = Vec::new();
    emit_plot_data(&record, &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let x0: f64 = rows[0][4].parse().unwrap();
    assert_eq!(x0, 1.0);
}

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b2", "w_0", "left", "p"]).prop_map(str::to_string)
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3f64..1e3, Just(0.0), Just(1.0e-9), Just(-2.5)]
}

fn positive() -> impl Strategy<Value = f64> {
    1e-6f64..1e3
}

fn kind() -> impl Strategy<Value = ParticleType> {
    prop::sample::select(ParticleType::ALL.to_vec())
}

fn profile() -> impl Strategy<Value = Profile> {
    prop_oneof![
        (finite(), finite(), finite(), positive(), finite()).prop_map(|(amplitude, center, center_y, width, wavenumber)| {
            Profile::Gaussian {
                amplitude,
                center,
                center_y,
                width,
                wavenumber,
            }
        }),
        (finite(), finite(), finite()).prop_map(|(amplitude, wavenumber, phase)| Profile::Sine {
            amplitude,
            wavenumber,
            phase
        }),
        finite().prop_map(|value| Profile::Constant { value }),
        (finite(), finite()).prop_map(|(amplitude, center)| Profile::Impulse { amplitude, center }),
        (finite(), 1u32..9).prop_map(|(amplitude, mode)| Profile::WellMode { amplitude, mode }),
    ]
}

fn field() -> impl Strategy<Value = FieldSpec> {
    (
        name(),
        kind(),
        profile(),
        prop::sample::select(vec![InitialVelocity::Zero, InitialVelocity::Right, InitialVelocity::Left]),
        any::<bool>(),
    )
        .prop_map(|(name, kind, profile, velocity, normalize)| FieldSpec {
            name,
            kind,
            profile,
            velocity,
            normalize,
        })
}

fn particle() -> impl Strategy<Value = ParticleSpec> {
    (
        (name(), kind(), finite()),
        (
            prop::option::of(finite()),
            prop::option::of(finite()),
            prop::option::of(finite()),
            prop::option::of(positive()),
        ),
        (any::<bool>(), 1usize..6, positive(), any::<bool>()),
    )
        .prop_map(|((name, kind, x), (velocity, momentum, spin, mass), (relativistic, paths, spread, law))| {
            ParticleSpec {
                name,
                kind,
                x,
                velocity,
                momentum,
                spin,
                mass,
                relativistic,
                paths,
                spread,
                dynamics: if law { Dynamics::Law } else { Dynamics::Free },
            }
        })
}

fn potential() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        Just(PotentialSpec::None),
        finite().prop_map(PotentialSpec::Force),
        (finite(), finite()).prop_map(|(k, center)| PotentialSpec::Harmonic { k, center }),
        finite().prop_map(PotentialSpec::Constant),
        (finite(), finite(), finite()).prop_map(|(height, left, right)| PotentialSpec::Barrier { height, left, right }),
    ]
}

fn interaction() -> impl Strategy<Value = InteractionSpec> {
    (
        prop::collection::vec((name(), name()), 0..3),
        (positive(), 1usize..20, positive()),
        any::<bool>(),
        prop::collection::vec(
            (
                prop::sample::select(Template::ALL.to_vec()),
                prop::sample::select(Template::ALL.to_vec()),
                prop::sample::select(vec![1.0, -1.0]),
            ),
            0..3,
        ),
        (0.0f64..1.0, 0.0f64..1.0, positive(), any::<bool>()),
    )
        .prop_map(
            |(pairs, (coupling, granularity, window), rb, signs, (occupancy_threshold, prune_threshold, lepton_mass, relativistic))| {
                InteractionSpec {
                    pairs,
                    rules: "qed".into(),
                    coupling,
                    granularity,
                    window,
                    equivalence: if rb { Equivalence::RuleBinding } else { Equivalence::VertexPartition },
                    signs,
                    occupancy_threshold,
                    prune_threshold,
                    lepton_mass,
                    relativistic,
                }
            },
        )
}

fn unique_by_name<T>(v: Vec<T>, key: impl Fn(&T) -> &str) -> Vec<T> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out: Vec<T> = v.into_iter().filter(|x| seen.insert(key(x).to_string())).collect();
    out.sort_by(|a, b| key(a).cmp(key(b)));
    out
}

prop_compose! {
    fn run_spec()(
        dt in prop::option::of(positive()),
        ticks in prop::option::of(0u64..100_000),
        max_time in prop::option::of(positive()),
        stop_below in prop::option::of(positive()),
        seed in 0u64..(1 << 62),
        snapshot_every in 1u64..1000,
        literal in any::<bool>(),
        taylor in any::<bool>(),
        norm_guard in 0.0f64..1.0,
        allow_unstable in any::<bool>(),
    ) -> RunSpec {
        RunSpec {
            dt,
            ticks,
            max_time,
            stop_below,
            seed,
            snapshot_every,
            mode: if literal { SchrodingerMode::Literal } else { SchrodingerMode::Corrected },
            history: if taylor { HistoryPolicy::Taylor2 } else { HistoryPolicy::BackwardEuler },
            norm_guard,
            allow_unstable,
        }
    }
}

prop_compose! {
    fn scenario()(
        lagrangian in any::<bool>(),
        constants in prop::collection::btree_map(
            prop::sample::select(vec!["m", "k", "q", "F", "omega"]),
            (finite(), prop::sample::select(vec!["", "kg", "eV"]), any::<bool>()),
            0..4,
        ),
        grid in prop::option::of((prop::collection::vec(3usize..500, 1..3), positive(), prop::option::of(finite()), any::<bool>())),
        run in run_spec(),
        fields in prop::collection::vec(field(), 0..3),
        particles in prop::collection::vec(particle(), 0..3),
        potential in potential(),
        interaction in prop::option::of(interaction()),
    ) -> Scenario {
        Scenario {
            model: if lagrangian {
                Model::Lagrangian("1/2*m*d(x,t)^2 - 1/2*k*x^2".into())
            } else {
                Model::Equation("d(psi,t) = i*hbar/(2*m)*d2(psi,x)".into())
            },
            constants: constants
                .into_iter()
                .map(|(k, (value, unit, complex))| (k.to_string(), ConstantSpec { value, unit: unit.into(), complex }))
                .collect::<BTreeMap<_, _>>(),
            grid: grid.map(|(extents, dx, origin, periodic)| GridSpec {
                extents,
                dx,
                origin,
                boundary: if periodic { Boundary::Periodic } else { Boundary::Fixed },
            }),
            run,
            fields: unique_by_name(fields, |f| &f.name),
            particles: unique_by_name(particles, |p| &p.name),
            potential,
            interaction,
        }
    }
}

proptest! {
    #[test]
    fn written_scenarios_load_back_unchanged(s in scenario()) {
        let text = write_scenario(&s);
        let l = parse_scenario(&text, "rt.toml").map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert!(l.warnings.is_empty(), "{:?}", l.warnings);
        prop_assert_eq!(&l.scenario, &s);
        prop_assert_eq!(write_scenario(&l.scenario), text);
    }
}
