use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use lagca::dsl::{equation_of_motion, euler_lagrange, parse_equation, parse_lagrangian, Vocabulary};
use lagca::grid::{Boundary, Grid};
use lagca::stencil::{
    compile_stencil, field_rhs, first_difference, particle_step, schrodinger_step, second_difference, wave_step,
    CellOrder, ParticlePotential, SchrodingerMode, StencilProgram,
};
use lagca::state::{FieldHistory, FieldState, ObjectId, ParticleType};

fn consts(c: &[(&str, f64)]) -> BTreeMap<String, f64> {
    c.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn from_lagrangian(l: &str, c: &[(&str, f64)]) -> StencilProgram {
    let vocab = Vocabulary::default();
    compile_stencil(&euler_lagrange(&parse_lagrangian(l, &vocab).unwrap(), &vocab).unwrap(), &consts(c)).unwrap()
}

fn from_equation(e: &str, c: &[(&str, f64)]) -> StencilProgram {
    let vocab = Vocabulary::default();
    let (l, r) = parse_equation(e, &vocab).unwrap();
    compile_stencil(&equation_of_motion(&l, &r, &vocab).unwrap(), &consts(c)).unwrap()
}

fn wave() -> StencilProgram {
    from_lagrangian("1/2*d(psi,t)^2 - 1/2*v^2*d(psi,x)^2", &[("v", 1.0)])
}

fn free_schrodinger() -> StencilProgram {
    from_equation("d(psi,t) = i*hbar/(2*m)*d2(psi,x)", &[("hbar", 1.0), ("m", 1.0)])
}

fn field(values: Vec<Complex64>, history: FieldHistory) -> FieldState {
    let n = values.len();
    FieldState {
        id: ObjectId::new("f"),
        kind: ParticleType::Generic,
        values,
        history,
        potential: vec![0.0; n],
    }
}

fn lattice(samples: &[(f64, f64)]) -> Vec<Complex64> {
    samples.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
}

proptest! {
    #[test]
    fn differences_are_exact_on_quadratics(
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        c in -5.0f64..5.0,
        dx in 0.01f64..0.5,
        origin in -3.0f64..3.0,
    ) {
        let grid = Grid::new_1d(16, dx, origin, Boundary::Fixed);
        let psi: Vec<Complex64> = (0..16)
            .map(|i| {
                let x = grid.x(i);
                Complex64::new(a * x * x + b * x + c, 0.0)
            })
            .collect();
        for i in 1..15 {
            let d2 = second_difference(&psi, &grid, i).re;
            let d1 = first_difference(&psi, &grid, i).re;
            let scale = psi.iter().map(|z| z.norm()).fold(1.0, f64::max) / (dx * dx);
            prop_assert!((d2 - 2.0 * a).abs() <= 1e-11 * scale, "Δ² {} vs {}", d2, 2.0 * a);
            prop_assert!((d1 - (2.0 * a * grid.x(i) + b)).abs() <= 1e-11 * scale * dx);
        }
    }

    #[test]
    fn wave_step_ignores_cell_order(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24),
        prev in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24),
        order in Just((0..24).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let grid = Grid::new_1d(24, 0.1, 0.0, Boundary::Periodic);
        let f = field(lattice(&values), FieldHistory::Previous(lattice(&prev)));
        let prog = wave();
        let natural = wave_step(&f, &grid, &prog.rhs, 0.05, &CellOrder::Natural).unwrap();
        let shuffled = wave_step(&f, &grid, &prog.rhs, 0.05, &CellOrder::Custom(order)).unwrap();
        prop_assert_eq!(natural, shuffled);
    }

    /// Each Fourier mode of the free first-order update grows by
    /// 1 + 16 r² sin⁴(k dx/2), so one step never shrinks the norm and never
    /// grows it by more than 16 r².
    #[test]
    fn schrodinger_step_growth_is_bounded(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32),
        r in 0.001f64..0.1,
    ) {
        let dx = 0.1;
        let dt = r * 2.0 * dx * dx;
        let grid = Grid::new_1d(32, dx, 0.0, Boundary::Periodic);
        let prog = free_schrodinger();
        let psi = lattice(&values);
        let n0: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        prop_assume!(n0 > 1e-6);
        let stored = field_rhs(&psi, &[0.0; 32], &grid, &prog.rhs);
        let f = field(psi, FieldHistory::Derivative(stored));
        let next = schrodinger_step(&f, &grid, &prog.rhs, dt, SchrodingerMode::Corrected, &CellOrder::Natural).unwrap();
        let n1: f64 = next.values.iter().map(|z| z.norm_sqr()).sum();
        let growth = n1 / n0 - 1.0;
        prop_assert!(growth >= -1e-12, "growth {}", growth);
        prop_assert!(growth <= 16.0 * r * r * (1.0 + 1e-9), "growth {} above {}", growth, 16.0 * r * r);
    }

    #[test]
    fn literal_and_corrected_agree_when_the_stored_derivative_is_current(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
    ) {
        let grid = Grid::new_1d(16, 0.1, 0.0, Boundary::Fixed);
        let prog = free_schrodinger();
        let psi = lattice(&values);
        let stored = field_rhs(&psi, &[0.0; 16], &grid, &prog.rhs);
        let f = field(psi, FieldHistory::Derivative(stored));
        let a = schrodinger_step(&f, &grid, &prog.rhs, 1e-4, SchrodingerMode::Corrected, &CellOrder::Natural).unwrap();
        let b = schrodinger_step(&f, &grid, &prog.rhs, 1e-4, SchrodingerMode::Literal, &CellOrder::Natural).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm()));
        }
    }
}

#[test]
fn periodic_second_difference_matches_the_lattice_symbol() {
    let n = 64;
    let dx = 0.2;
    let grid = Grid::new_1d(n, dx, 0.0, Boundary::Periodic);
    let k = 2.0 * PI * 5.0 / grid.length();
    let psi: Vec<Complex64> = (0..n).map(|i| Complex64::new((k * grid.x(i)).sin(), 0.0)).collect();
    let symbol = -4.0 / (dx * dx) * (k * dx / 2.0).sin().powi(2);
    for i in 0..n {
        let got = second_difference(&psi, &grid, i).re;
        assert!((got - symbol * psi[i].re).abs() < 1e-10, "cell {i}");
    }
}

#[test]
fn fixed_boundary_reads_zero_outside() {
    let grid = Grid::new_1d(4, 1.0, 0.0, Boundary::Fixed);
    let psi = vec![Complex64::new(1.0, 0.0); 4];
    assert_eq!(second_difference(&psi, &grid, 0).re, -1.0);
    assert_eq!(second_difference(&psi, &grid, 1).re, 0.0);
    assert_eq!(first_difference(&psi, &grid, 3).re, -0.5);
}

#[test]
fn leapfrog_invariant_is_conserved() {
    let n = 200;
    let dx = 0.1;
    let dt = 0.08;
    let grid = Grid::new_1d(n, dx, 0.0, Boundary::Periodic);
    let prog = wave();
    let bump = |x: f64| (-(x - 10.0).powi(2)).exp();
    let now: Vec<Complex64> = (0..n).map(|i| Complex64::new(bump(grid.x(i)), 0.0)).collect();
    let prev: Vec<Complex64> = (0..n).map(|i| Complex64::new(bump(grid.x(i) + dt), 0.0)).collect();
    let energy = |old: &[Complex64], new: &[Complex64]| {
        (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                let vt = (new[i].re - old[i].re) / dt;
                0.5 * vt * vt + 0.5 * (new[j].re - new[i].re) * (old[j].re - old[i].re) / (dx * dx)
            })
            .sum::<f64>()
            * dx
    };
    let e0 = energy(&prev, &now);
    let mut f = field(now, FieldHistory::Previous(prev));
    for _ in 0..2000 {
        f = wave_step(&f, &grid, &prog.rhs, dt, &CellOrder::Natural).unwrap();
        let FieldHistory::Previous(old) = &f.history else { unreachable!() };
        let e = energy(old, &f.values);
        assert!((e - e0).abs() < 1e-10 * e0, "energy {e} vs {e0}");
    }
}

#[test]
fn particle_step_oscillates_with_the_expected_period() {
    let prog = from_lagrangian("1/2*m*d(x,t)^2 - 1/2*k*x^2", &[("m", 2.0), ("k", 8.0)]);
    let dtau = 1e-4;
    let (mut x, mut v) = (1.0, 0.0);
    let mut crossings = Vec::new();
    let mut t = 0.0;
    while crossings.len() < 3 {
        let (x1, v1) = particle_step(x, v, &prog.rhs, &ParticlePotential::None, dtau).unwrap();
        t += dtau;
        if x > 0.0 && x1 <= 0.0 {
            crossings.push(t - dtau * x1 / (x1 - x));
        }
        x = x1;
        v = v1;
    }
    let period = (crossings[2] - crossings[0]) / 2.0;
    assert!((period - PI).abs() < 1e-3, "period {period}");
}

#[test]
fn constant_force_potential_drives_particles() {
    let vocab = Vocabulary::default();
    let eom = euler_lagrange(&parse_lagrangian("1/2*m*d(x,t)^2 - V(x)", &vocab).unwrap(), &vocab).unwrap();
    let prog = compile_stencil(&eom, &consts(&[("m", 1.0)])).unwrap();
    let (x, v) = particle_step(0.0, 0.0, &prog.rhs, &ParticlePotential::Force(3.0), 0.5).unwrap();
    assert_eq!((x, v), (0.75, 1.5));
}
