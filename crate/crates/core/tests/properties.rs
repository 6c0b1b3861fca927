//! Randomized invariants over small clouds.

use kslab::energy::*;
use kslab::graphform::*;
use kslab::smoothing::*;
use kslab::space::CloudOrigin;
use kslab::{MeasuredPointCloud, ScalarField, SpaceSpec};
use proptest::prelude::*;

fn cloud_from(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> MeasuredPointCloud {
    MeasuredPointCloud::euclidean(dim, coords, weights, None, None, CloudOrigin::Imported).unwrap()
}

/// Random Euclidean cloud of 5..=60 points in dimension 1 or 2, a field on
/// it and a scale in `[kappa h, diam]`.
fn setup() -> impl Strategy<Value = (MeasuredPointCloud, Vec<f64>, f64)> {
    (1usize..=2, 5usize..=60)
        .prop_flat_map(|(dim, n)| {
            (
                Just(dim),
                prop::collection::vec(0.0f64..1.0, n * dim),
                prop::collection::vec(0.2f64..2.0, n),
                prop::collection::vec(-3.0f64..3.0, n),
                0.0f64..1.0,
            )
        })
        .prop_map(|(dim, coords, weights, f, t)| {
            let c = cloud_from(dim, coords, weights);
            let lo = c.min_scale();
            let r = lo + t * (c.diameter() - lo).max(0.0);
            (c, f, r)
        })
}

fn energy(c: &MeasuredPointCloud, f: &ScalarField, r: f64, d_w: f64) -> f64 {
    ks_energy(c, f, r, d_w, &Region::All).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn balls_are_nested((c, _f, r) in setup(), x in 0usize..1000) {
        let x = x % c.len();
        let small = c.ball(x, r);
        let large = c.ball(x, 1.5 * r);
        prop_assert!(small.members.iter().all(|y| large.members.binary_search(y).is_ok()));
        prop_assert!(small.mass <= large.mass);
        prop_assert!(small.members.contains(&x));
    }

    #[test]
    fn index_matches_brute_force((c, _f, r) in setup(), x in 0usize..1000) {
        let x = x % c.len();
        prop_assert_eq!(c.ball(x, r), c.ball_brute(x, r));
    }

    #[test]
    fn energy_matches_double_sum((c, f, r) in setup(), d_w in 2.0f64..3.0) {
        let field = ScalarField::new(f.clone()).unwrap();
        let w = c.weights();
        let mut want = 0.0;
        for x in 0..c.len() {
            let (mut acc, mut mass) = (0.0, 0.0);
            for y in 0..c.len() {
                if c.dist(x, y) < r {
                    acc += w[y] * (f[x] - f[y]).powi(2);
                    mass += w[y];
                }
            }
            want += w[x] * acc / mass;
        }
        want /= r.powf(d_w);
        prop_assert!(close(energy(&c, &field, r, d_w), want, 1e-12));
    }

    #[test]
    fn energy_is_quadratic_and_shift_free((c, f, r) in setup(), s in -4.0f64..4.0, k in -5.0f64..5.0) {
        let f = ScalarField::new(f).unwrap();
        let e = energy(&c, &f, r, 2.0);
        prop_assert!(close(energy(&c, &f.scaled(s), r, 2.0), s * s * e, 1e-10));
        prop_assert!(close(energy(&c, &f.shifted(k), r, 2.0), e, 1e-9) || e < 1e-12);
    }

    #[test]
    fn unit_contraction_lowers_energy((c, f, r) in setup()) {
        let f = ScalarField::new(f).unwrap();
        prop_assert!(energy(&c, &f.unit_truncation(), r, 2.0) <= energy(&c, &f, r, 2.0) * (1.0 + 1e-12));
    }

    #[test]
    fn regions_add((c, f, r) in setup(), split in 0usize..1000) {
        let f = ScalarField::new(f).unwrap();
        let cut = split % c.len();
        let a: Vec<usize> = (0..cut).collect();
        let b: Vec<usize> = (cut..c.len()).collect();
        let whole = energy(&c, &f, r, 2.3);
        let parts = ks_energy(&c, &f, r, 2.3, &Region::Ids(a)).unwrap() + ks_energy(&c, &f, r, 2.3, &Region::Ids(b)).unwrap();
        prop_assert!(close(whole, parts, 1e-12));
    }

    #[test]
    fn rescaled_weights_keep_energy_proportional((c, f, r) in setup(), lam in 0.1f64..10.0) {
        let f = ScalarField::new(f).unwrap();
        let scaled = c.rescaled_weights(lam).unwrap();
        prop_assert!(close(energy(&scaled, &f, r, 2.0), lam * energy(&c, &f, r, 2.0), 1e-10));
    }

    #[test]
    fn mollifier_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let c = SpaceSpec::IntervalGrid(101).build().unwrap();
        let pou = partition_of_unity(&c, &build_net(&c, 0.1).unwrap()).unwrap();
        let f = ScalarField::from_ids(&c, |i| ((i as u64 * 2654435761 + seed) % 97) as f64 / 97.0).unwrap();
        let g = ScalarField::from_ids(&c, |i| ((i as u64 * 40503 + 7 * seed) % 89) as f64 / 89.0).unwrap();
        let lhs = mollify(&c, &f.axpby(a, &g, b), &pou).unwrap();
        let rhs = mollify(&c, &f, &pou).unwrap().axpby(a, &mollify(&c, &g, &pou).unwrap(), b);
        for i in 0..c.len() {
            prop_assert!((lhs[i] - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn form_is_markov_and_local(vals in prop::collection::vec(-3.0f64..3.0, 31), cut in 5usize..25) {
        let c = SpaceSpec::IntervalGrid(31).build().unwrap();
        let form = default_form(&c).unwrap();
        let f = ScalarField::new(vals).unwrap();
        prop_assert!(form_energy(&form, &f.unit_truncation()).unwrap() <= form_energy(&form, &f).unwrap() * (1.0 + 1e-12));
        // supports two hops apart do not interact
        let g = ScalarField::from_ids(&c, |i| if i < cut { f[i] } else { 0.0 }).unwrap();
        let h = ScalarField::from_ids(&c, |i| if i > cut { f[i] } else { 0.0 }).unwrap();
        prop_assert!(form_bilinear(&form, &g, &h).unwrap().abs() < 1e-12);
    }

    #[test]
    fn parseval_on_full_spectrum(vals in prop::collection::vec(-3.0f64..3.0, 15)) {
        let c = SpaceSpec::Gasket(1).build().unwrap();
        let form = default_form(&c).unwrap();
        let s = spectrum(&form, &SpectrumOptions::default()).unwrap();
        let f = ScalarField::new(vals[..c.len()].to_vec()).unwrap();
        let mut norm = 0.0;
        let mut en = 0.0;
        for (k, u) in s.vectors.iter().enumerate() {
            let a = c.inner(&f, &ScalarField::new(u.clone()).unwrap());
            norm += a * a;
            en += s.eigenvalues[k] * a * a;
        }
        let l2 = c.l2_norm(&f).powi(2);
        prop_assert!(close(norm, l2, 1e-10));
        prop_assert!(close(en, form_energy(&form, &f).unwrap(), 1e-9) || en < 1e-12);
    }
}

#[test]
fn weak_null_perturbations_decay() {
    // high modes are nearly orthogonal to smooth test fields
    let c = SpaceSpec::IntervalGrid(401).build().unwrap();
    let form = default_form(&c).unwrap();
    let s = spectrum(&form, &SpectrumOptions::default()).unwrap();
    let g = ScalarField::from_coords(&c, |p| p[0] * p[0]).unwrap();
    let low = c.inner(&g, &ScalarField::new(s.vectors[1].clone()).unwrap()).abs();
    let high = c.inner(&g, &ScalarField::new(s.vectors[40].clone()).unwrap()).abs();
    assert!(high < 0.05 * low, "{high} vs {low}");
}
