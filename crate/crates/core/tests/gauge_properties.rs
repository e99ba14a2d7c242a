use proptest::prelude::*;
use wulff_tvl1::{Exponent, Gauge};

fn gauges() -> Vec<(&'static str, Gauge)> {
    vec![
        ("l1", Gauge::l1()),
        ("l2", Gauge::l2()),
        ("linf", Gauge::linf()),
        ("l3", Gauge::p_norm(Exponent::Finite(3.0))),
        ("l1.5", Gauge::p_norm(Exponent::Finite(1.5))),
        ("weighted-l2", Gauge::weighted(Exponent::Finite(2.0), vec![2.0, 0.5]).unwrap()),
        ("weighted-l1", Gauge::weighted(Exponent::Finite(1.0), vec![1.0, 3.0]).unwrap()),
        ("weighted-linf", Gauge::weighted(Exponent::Infinity, vec![0.5, 1.5]).unwrap()),
        (
            "hexagon",
            Gauge::polyhedral(&[[1.0, 0.0], [0.6, 0.9], [-0.4, 1.0], [-1.2, 0.1], [-0.5, -0.8], [0.7, -1.0]]).unwrap(),
        ),
        ("triangle", Gauge::polyhedral(&[[1.0, -0.5], [0.0, 1.0], [-1.0, -0.5]]).unwrap()),
        ("asym", Gauge::asymmetric(vec![0.5, 0.0]).unwrap()),
        ("asym2", Gauge::asymmetric(vec![0.3, -0.4]).unwrap()),
    ]
}

fn vec2() -> impl Strategy<Value = [f64; 2]> {
    [-10.0..10.0f64, -10.0..10.0f64]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn cauchy_schwarz(x in vec2(), y in vec2()) {
        for (name, g) in gauges() {
            let lhs = dot(&x, &y);
            let rhs = g.eval(&y) * g.eval_dual(&x);
            prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()), "{name}: {lhs} > {rhs}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn bipolar_identity(y in vec2()) {
        for (name, g) in gauges() {
            let dual = g.dual().unwrap();
            let back = dual.eval_dual(&y);
            // the shifted-disk dual is a 4096-gon
            let tol = if name.starts_with("asym") { 1e-5 } else { 1e-10 };
            prop_assert!((back - g.eval(&y)).abs() <= tol * (1.0 + g.eval(&y)), "{name}: {back} vs {}", g.eval(&y));
        }
    }

    #[test]
    fn dual_extremal_attains(x in vec2()) {
        prop_assume!(x[0].abs() + x[1].abs() > 1e-6);
        for (name, g) in gauges() {
            let eta = g.dual_extremal(&x).unwrap();
            prop_assert!((g.eval(&eta) - 1.0).abs() < 1e-9, "{name}: phi(eta) = {}", g.eval(&eta));
            let dual = g.eval_dual(&x);
            prop_assert!((dot(&x, &eta) - dual).abs() < 1e-9 * (1.0 + dual), "{name}");
        }
    }

    #[test]
    fn projection_is_a_nonexpansive_retraction(x in vec2(), y in vec2()) {
        for (name, g) in gauges() {
            let (px, py) = (g.project_minus_wulff(&x), g.project_minus_wulff(&y));
            prop_assert!(g.eval_dual(&px) <= 1.0 + 1e-9, "{name}: outside -W");
            let d = ((px[0] - py[0]).powi(2) + (px[1] - py[1]).powi(2)).sqrt();
            let d0 = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            prop_assert!(d <= d0 + 1e-9, "{name}: {d} > {d0}");
            let again = g.project_minus_wulff(&px);
            prop_assert!((again[0] - px[0]).abs() + (again[1] - px[1]).abs() < 1e-9, "{name}: not idempotent");
            if g.eval_dual(&x) < 1.0 - 1e-9 {
                prop_assert!((px[0] - x[0]).abs() + (px[1] - x[1]).abs() < 1e-12, "{name}: moved an interior point");
            }
        }
    }

    #[test]
    fn positive_homogeneity(y in vec2(), t in 0.0..100.0f64) {
        for (name, g) in gauges() {
            let ty = [t * y[0], t * y[1]];
            prop_assert!((g.eval(&ty) - t * g.eval(&y)).abs() <= 1e-12 * (1.0 + t * g.eval(&y)), "{name}");
            prop_assert!((g.eval_dual(&ty) - t * g.eval_dual(&y)).abs() <= 1e-12 * (1.0 + t * g.eval_dual(&y)), "{name}");
        }
    }

    #[test]
    fn subadditivity(y in vec2(), z in vec2()) {
        for (name, g) in gauges() {
            let s = [y[0] + z[0], y[1] + z[1]];
            prop_assert!(g.eval(&s) <= g.eval(&y) + g.eval(&z) + 1e-12, "{name}");
            prop_assert!(g.eval_dual(&s) <= g.eval_dual(&y) + g.eval_dual(&z) + 1e-12, "{name}");
        }
    }

    #[test]
    fn euclidean_bounds_hold(y in vec2()) {
        for (name, g) in gauges() {
            let (r, big_r) = g.euclidean_bounds();
            let n = (y[0] * y[0] + y[1] * y[1]).sqrt();
            let v = g.eval(&y);
            prop_assert!(r * n <= v + 1e-12 && v <= big_r * n + 1e-12, "{name}: {r} {v} {big_r}");
        }
    }

    #[test]
    fn higher_dimensional_pnorms(y in prop::array::uniform3(-5.0..5.0f64), x in prop::array::uniform3(-5.0..5.0f64)) {
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinity] {
            let g = Gauge::p_norm_nd(p, 3).unwrap();
            prop_assert!(dot(&x, &y) <= g.eval(&y) * g.eval_dual(&x) + 1e-12);
            let px = g.project_minus_wulff(&x);
            prop_assert!(g.eval_dual(&px) <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn wulff_vertices_lie_on_the_dual_unit_sphere() {
    for (name, g) in gauges() {
        let shape = g.wulff_shape().unwrap();
        for v in shape.polygon.vertices() {
            let r = g.eval_dual(&[-v[0], -v[1]]);
            assert!((r - 1.0).abs() < 1e-9, "{name}: {r}");
        }
    }
}

#[test]
fn spec_json_round_trip() {
    for (name, g) in gauges() {
        let text = serde_json::to_string(&g.spec()).unwrap();
        let back = Gauge::from_json(&text).unwrap();
        for y in [[1.0, 0.0], [0.3, -2.0], [-1.5, 0.7]] {
            assert!((back.eval(&y) - g.eval(&y)).abs() < 1e-12, "{name}: {text}");
        }
    }
}
