mod common;

use rand::Rng;
use sveno::euler::{euler_flux, sound_speed, PrimitiveState};
use sveno::reference::{exact_riemann, Wave};
use sveno::Error;

const G: f64 = 1.4;

/// Pressure function written out separately from the library.
fn f_side(p: f64, w: PrimitiveState) -> f64 {
    let c = (G * w.p / w.rho).sqrt();
    if p > w.p {
        let a = 2.0 / ((G + 1.0) * w.rho);
        let b = (G - 1.0) / (G + 1.0) * w.p;
        (p - w.p) * (a / (p + b)).sqrt()
    } else {
        2.0 * c / (G - 1.0) * ((p / w.p).powf((G - 1.0) / (2.0 * G)) - 1.0)
    }
}

fn bisect_star_pressure(l: PrimitiveState, r: PrimitiveState) -> f64 {
    let f = |p: f64| f_side(p, l) + f_side(p, r) + r.v - l.v;
    let (mut lo, mut hi) = (1e-12, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn random_state(rng: &mut impl Rng) -> PrimitiveState {
    PrimitiveState::new(
        rng.gen_range(0.1..5.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.1..10.0),
    )
}

#[test]
fn star_pressure_matches_bisection() {
    let mut rng = common::rng(11);
    for _ in 0..500 {
        let (l, r) = (random_state(&mut rng), random_state(&mut rng));
        let s = exact_riemann(l, r, G).unwrap();
        let p = bisect_star_pressure(l, r);
        assert!((s.p_star - p).abs() <= 1e-10 * p, "{} vs {p}", s.p_star);
        let v = 0.5 * (l.v + r.v) + 0.5 * (f_side(p, r) - f_side(p, l));
        assert!((s.v_star - v).abs() < 1e-9);
    }
}

#[test]
fn sod_star_state() {
    let s = exact_riemann(
        PrimitiveState::new(1.0, 0.0, 1.0),
        PrimitiveState::new(0.125, 0.0, 0.1),
        G,
    )
    .unwrap();
    // tabulated in Toro's book
    assert!((s.p_star - 0.30313).abs() < 1e-5);
    assert!((s.v_star - 0.92745).abs() < 1e-5);
    assert!((s.left_wave.rho_star() - 0.42632).abs() < 1e-5);
    assert!((s.right_wave.rho_star() - 0.26557).abs() < 1e-5);
}

#[test]
fn shocks_satisfy_rankine_hugoniot() {
    let mut rng = common::rng(12);
    let mut shocks = 0;
    for _ in 0..300 {
        let (l, r) = (random_state(&mut rng), random_state(&mut rng));
        let s = exact_riemann(l, r, G).unwrap();
        for wave in [s.left_wave, s.right_wave] {
            let Wave::Shock { speed, .. } = wave else {
                continue;
            };
            shocks += 1;
            let eps = 1e-9 * (1.0 + speed.abs());
            let before = s.sample_xi(speed - eps).to_conserved(G);
            let after = s.sample_xi(speed + eps).to_conserved(G);
            let (fb, fa) = (euler_flux(before, G).unwrap(), euler_flux(after, G).unwrap());
            let (ub, ua) = (before.to_array(), after.to_array());
            for c in 0..3 {
                let lhs = speed * (ua[c] - ub[c]);
                let rhs = fa[c] - fb[c];
                assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()), "component {c}");
            }
        }
    }
    assert!(shocks > 50);
}

#[test]
fn rarefactions_keep_riemann_invariants() {
    let l = PrimitiveState::new(1.0, 0.0, 1.0);
    let r = PrimitiveState::new(0.125, 0.0, 0.1);
    let s = exact_riemann(l, r, G).unwrap();
    let Wave::Rarefaction { head, tail, .. } = s.left_wave else {
        panic!("expected a left rarefaction");
    };
    let invariant = |w: PrimitiveState| w.v + 2.0 * sound_speed(w, G) / (G - 1.0);
    let entropy = |w: PrimitiveState| w.p / w.rho.powf(G);
    for i in 0..=20 {
        let xi = head + (tail - head) * i as f64 / 20.0;
        let w = s.sample_xi(xi);
        assert!((invariant(w) - invariant(l)).abs() < 1e-12);
        assert!((entropy(w) - entropy(l)).abs() < 1e-12);
    }
}

#[test]
fn contact_keeps_pressure_and_velocity() {
    let s = exact_riemann(
        PrimitiveState::new(0.445, 0.698, 3.528),
        PrimitiveState::new(0.5, 0.0, 0.571),
        G,
    )
    .unwrap();
    let (a, b) = (s.sample_xi(s.v_star - 1e-9), s.sample_xi(s.v_star + 1e-9));
    assert!((a.p - b.p).abs() < 1e-12 && (a.v - b.v).abs() < 1e-12);
    assert!((a.rho - b.rho).abs() > 0.1);
}

#[test]
fn solution_is_self_similar() {
    let mut rng = common::rng(13);
    for _ in 0..50 {
        let s = exact_riemann(random_state(&mut rng), random_state(&mut rng), G).unwrap();
        for _ in 0..20 {
            let x = rng.gen_range(-3.0..3.0);
            let t = rng.gen_range(0.1..2.0);
            assert_eq!(s.sample(x, t), s.sample(2.0 * x, 2.0 * t));
        }
    }
}

#[test]
fn cell_average_matches_fine_quadrature() {
    let s = exact_riemann(
        PrimitiveState::new(1.0, 0.0, 1.0),
        PrimitiveState::new(0.125, 0.0, 0.1),
        G,
    )
    .unwrap();
    let (a, b, t) = (-1.0, 2.0, 1.0);
    let n = 200_000;
    let h = (b - a) / n as f64;
    let mut total = [0.0; 3];
    for i in 0..n {
        let u = s.sample(a + (i as f64 + 0.5) * h, t).to_conserved(G).to_array();
        for c in 0..3 {
            total[c] += u[c] * h / (b - a);
        }
    }
    let avg = s.average(a, b, t).to_array();
    for c in 0..3 {
        assert!((avg[c] - total[c]).abs() < 1e-5);
    }
}

#[test]
fn vacuum_generation_is_reported() {
    let r = exact_riemann(
        PrimitiveState::new(1.0, -10.0, 1.0),
        PrimitiveState::new(1.0, 10.0, 1.0),
        G,
    );
    assert!(matches!(r, Err(Error::Vacuum)));
}
