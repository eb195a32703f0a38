mod common;

use common::*;
use iwsn::scattering::{
    feature_vector, scatter, Boundary, FeatureFile, FeatureHeader, ImagePlane, ScatterConfig, Selection, SmoothWith,
    Variant,
};
use iwsn::wavelet::Basis;
use iwsn::Error;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_config(rng: &mut ChaCha8Rng, variant: Variant) -> ScatterConfig {
    let depth = rng.random_range(1..=3);
    ScatterConfig {
        depth,
        level_bases: (0..depth).map(|_| *Basis::ALL.choose(rng).unwrap()).collect(),
        boundary: if rng.random() { Boundary::Symmetric } else { Boundary::Periodic },
        variant,
        selection: Selection::all(depth),
        smooth_with: if rng.random() { SmoothWith::First } else { SmoothWith::Last },
        decimate_smoothing: rng.random(),
        ..ScatterConfig::default()
    }
}

#[test]
fn matches_direct_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 40 {
        let variant = if checked % 2 == 0 { Variant::Classic } else { Variant::Improved };
        let cfg = random_config(&mut rng, variant);
        let (w, h) = (rng.random_range(8..=32), rng.random_range(8..=32));
        let x = random_plane(&mut rng, w, h);
        let out = match scatter(&x, &cfg) {
            Ok(o) => o,
            Err(Error::KernelTooLarge { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let want = oracle(&grid(&x), &cfg);
        assert!(rel_err(&out.s0, &want.s0) <= 1e-12);
        for m in 0..cfg.depth {
            assert!(rel_err(&out.u_levels[m], &want.u[m]) <= 1e-12, "{cfg:?} U{}", m + 1);
            assert!(rel_err(&out.s_levels[m], &want.s[m]) <= 1e-12, "{cfg:?} S{}", m + 1);
        }
        checked += 1;
    }
}

#[test]
fn depth_one_variants_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for b in Basis::ALL {
        for _ in 0..5 {
            let x = random_plane(&mut rng, 24, 20);
            let c = scatter(&x, &ScatterConfig::uniform(b, 1, Variant::Classic)).unwrap();
            let i = scatter(&x, &ScatterConfig::uniform(b, 1, Variant::Improved)).unwrap();
            assert_eq!(c.s0, i.s0);
            assert!(c.u_levels[0].max_abs_diff(&i.u_levels[0]) <= 1e-12);
            assert!(c.s_levels[0].max_abs_diff(&i.s_levels[0]) <= 1e-12);
        }
    }
}

fn roll(x: &ImagePlane, dx: usize, dy: usize) -> ImagePlane {
    let (w, h) = (x.width(), x.height());
    ImagePlane::from_fn(w, h, |i, j| x.get((i + w - dx % w) % w, (j + h - dy % h) % h)).unwrap()
}

#[test]
fn periodic_shift_moves_level_planes_by_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..20 {
        let variant = if case % 2 == 0 { Variant::Classic } else { Variant::Improved };
        let cfg = ScatterConfig {
            boundary: Boundary::Periodic,
            decimate_smoothing: false,
            smooth_with: SmoothWith::Last,
            ..ScatterConfig::uniform(Basis::Bior11, 3, variant)
        };
        let (w, h) = (8 * rng.random_range(2..=4), 8 * rng.random_range(2..=4));
        let x = random_plane(&mut rng, w, h);
        let m = rng.random_range(1..=3);
        let shifted = scatter(&roll(&x, 1 << m, 1 << m), &cfg).unwrap();
        let base = scatter(&x, &cfg).unwrap();
        let level = m - 1;
        assert_eq!(shifted.u_levels[level], roll(&base.u_levels[level], 1, 1));
        assert_eq!(shifted.s_levels[level], roll(&base.s_levels[level], 1, 1));
    }
}

#[test]
fn scattering_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random_plane(&mut rng, 31, 17);
    for variant in [Variant::Classic, Variant::Improved] {
        let cfg = ScatterConfig { variant, ..ScatterConfig::default() };
        let a = scatter(&x, &cfg).unwrap();
        let b = scatter(&x, &cfg).unwrap();
        for (p, q) in a.u_levels.iter().zip(&b.u_levels) {
            assert!(p.values().iter().zip(q.values()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }
}

#[test]
fn feature_file_rejects_corruption() {
    let cfg = ScatterConfig::default();
    let header = FeatureHeader::new(&cfg, 16, 16, vec!["a".into(), "b".into()]).unwrap();
    let n = header.vector_len;
    let file = FeatureFile { header, records: vec![(1, vec![0.5; n])] };
    let bytes = file.encode().unwrap();
    let mut bad = bytes.clone();
    let len = bad.len();
    bad.truncate(len - 3);
    assert!(matches!(FeatureFile::decode(&bad), Err(Error::Malformed { .. })));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(FeatureFile::decode(&extra).is_err());
}

fn small_plane() -> impl Strategy<Value = ImagePlane> {
    (4usize..=16, 4usize..=16).prop_flat_map(|(w, h)| {
        prop::collection::vec(-10.0f64..10.0, w * h).prop_map(move |v| ImagePlane::new(w, h, v).unwrap())
    })
}

fn any_basis() -> impl Strategy<Value = Basis> {
    prop::sample::select(Basis::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn modulus_planes_are_non_negative(x in small_plane(), b in any_basis(), improved in any::<bool>()) {
        let variant = if improved { Variant::Improved } else { Variant::Classic };
        let cfg = ScatterConfig { decimate_smoothing: false, ..ScatterConfig::uniform(b, 1, variant) };
        match scatter(&x, &cfg) {
            Ok(out) => {
                prop_assert!(out.u_levels.iter().all(|p| p.values().iter().all(|&v| v >= 0.0)));
            }
            Err(Error::KernelTooLarge { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn s0_is_linear(
        (x, y) in (8usize..=20, 8usize..=20).prop_flat_map(|(w, h)| {
            let v = prop::collection::vec(-1.0f64..1.0, w * h);
            (v.clone(), v).prop_map(move |(a, b)| (ImagePlane::new(w, h, a).unwrap(), ImagePlane::new(w, h, b).unwrap()))
        }),
        a in -3.0f64..3.0,
        c in -3.0f64..3.0,
        b in any_basis(),
    ) {
        let cfg = ScatterConfig::uniform(b, 1, Variant::Improved);
        let combo = ImagePlane::new(
            x.width(),
            x.height(),
            x.values().iter().zip(y.values()).map(|(p, q)| a * p + c * q).collect(),
        ).unwrap();
        let (sx, sy, sc) = match (scatter(&x, &cfg), scatter(&y, &cfg), scatter(&combo, &cfg)) {
            (Ok(p), Ok(q), Ok(r)) => (p.s0, q.s0, r.s0),
            _ => return Ok(()),
        };
        for ((p, q), r) in sx.values().iter().zip(sy.values()).zip(sc.values()) {
            prop_assert!((a * p + c * q - r).abs() <= 1e-12 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn feature_file_round_trips(
        records in prop::collection::vec((0u32..3, prop::collection::vec(-1e6f32..1e6, 16)), 0..8)
    ) {
        let cfg = ScatterConfig { selection: Selection::empty().with_u(1), ..ScatterConfig::default() };
        let header = FeatureHeader::new(&cfg, 8, 8, vec!["x".into(), "y".into(), "z".into()]).unwrap();
        prop_assert_eq!(header.vector_len, 16);
        let file = FeatureFile { header, records };
        let back = FeatureFile::decode(&file.encode().unwrap()).unwrap();
        prop_assert_eq!(back, file);
    }
}

#[test]
fn selection_order_is_declared_order() {
    let x = ImagePlane::from_fn(16, 16, |i, j| (i * j) as f64 / 100.0).unwrap();
    let cfg = ScatterConfig { selection: Selection::all(3), ..ScatterConfig::default() };
    let out = scatter(&x, &cfg).unwrap();
    let v = feature_vector(&out, cfg.selection).unwrap();
    let mut expected = out.s0.values().to_vec();
    for u in &out.u_levels {
        expected.extend_from_slice(u.values());
    }
    for s in &out.s_levels {
        expected.extend_from_slice(s.values());
    }
    assert_eq!(v, expected);
}
