use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use motion_icl::data::{MotionSample, MotionSequence, Pose};
use motion_icl::fixtures;
use motion_icl::gateway::{predict_with_repair, MockProvider, MockSettings, ProviderConfig};
use motion_icl::metrics::{mpjpe_table, sample_distance, DEFAULT_HORIZONS_MS};
use motion_icl::prompt::{build_practice_script, parse_prediction, render_sequence, ScriptLayout, Sender};
use motion_icl::selection::{
    brute_force_optimum, exact_expected_spread, greedy_bound_factor, greedy_exact, random_enumerable, ExactSpread,
    NormalizedSimilarityMatrix,
};
use motion_icl::skeleton::SkeletonSpec;

fn seq_from(values: &[f64], frames: usize, joints: usize) -> MotionSequence {
    let poses = values
        .chunks(joints * 3)
        .take(frames)
        .map(|f| Pose::new(f.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()).unwrap())
        .collect();
    MotionSequence::new(poses, 25.0).unwrap()
}

fn coords(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2000.0..2000.0f64, len)
}

fn sample(id: &str, values: &[f64], l: usize, j: usize, joints: usize) -> MotionSample {
    let per = joints * 3;
    MotionSample::new(
        id,
        "a",
        seq_from(&values[..l * per], l, joints),
        seq_from(&values[l * per..], j, joints),
    )
    .unwrap()
}

fn instance(seed: u64) -> NormalizedSimilarityMatrix {
    random_enumerable(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn pick(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn traversal_lists_parents_first(seed in any::<u64>()) {
        let sk = if seed % 2 == 0 { fixtures::h36m_skeleton() } else { fixtures::toy_skeleton() };
        for &j in sk.traversal() {
            if let Some(p) = sk.parent(j) {
                prop_assert!(sk.traversal_position(p) < sk.traversal_position(j));
            }
        }
    }

    #[test]
    fn distance_is_a_symmetric_premetric(a in coords(5 * 15), b in coords(5 * 15)) {
        let sk = fixtures::toy_skeleton();
        let (x, y) = (sample("x", &a, 3, 2, 5), sample("y", &b, 3, 2, 5));
        let xy = sample_distance(&x, &y, &sk).unwrap();
        let yx = sample_distance(&y, &x, &sk).unwrap();
        prop_assert_eq!(&xy, &yx);
        prop_assert!(xy.combined >= 0.0 && xy.global >= 0.0);
        prop_assert!(xy.per_part.values().all(|&d| d >= 0.0));
        prop_assert_eq!(sample_distance(&x, &x, &sk).unwrap().combined, 0.0);
        prop_assert_eq!(xy.combined == 0.0, a == b);
    }

    #[test]
    fn translation_error_is_its_length(
        values in coords(17 * 3 * 25),
        t in prop::array::uniform3(-50i32..50),
    ) {
        let gt = seq_from(&values, 25, 17);
        let shift = [t[0] as f64, t[1] as f64, t[2] as f64];
        let report = mpjpe_table(&gt.translated(shift), &gt, &DEFAULT_HORIZONS_MS).unwrap();
        let want = (shift[0].powi(2) + shift[1].powi(2) + shift[2].powi(2)).sqrt();
        for e in report.per_horizon.values() {
            prop_assert!((e - want).abs() <= 1e-9 * want.max(1.0));
        }
        let mean = report.per_horizon.values().sum::<f64>() / report.per_horizon.len() as f64;
        prop_assert!((report.average - mean).abs() <= 1e-12);
    }

    /// Grid values `k / 10^p` have exact decimal renderings, and integer
    /// division is correctly rounded, so parsing must give back the same
    /// doubles.
    #[test]
    fn render_parse_round_trip_on_grid(
        ks in prop::collection::vec(-99_999_999i64..99_999_999, 17 * 3 * 4),
        precision in 0usize..=6,
    ) {
        let sk = fixtures::h36m_skeleton();
        let scale = 10f64.powi(precision as i32);
        let values: Vec<f64> = ks.iter().map(|&k| k as f64 / scale).collect();
        let seq = seq_from(&values, 4, 17);
        let text = render_sequence(&seq, 51, &sk, precision).unwrap();
        let parsed = parse_prediction(&text, 4, &sk).unwrap();
        prop_assert_eq!(parsed.sequence, seq);
    }

    #[test]
    fn render_parse_rounds_to_precision(values in coords(5 * 3 * 3), precision in 0usize..=4) {
        let sk = fixtures::toy_skeleton();
        let seq = seq_from(&values, 3, 5);
        let text = render_sequence(&seq, 1, &sk, precision).unwrap();
        let parsed = parse_prediction(&text, 3, &sk).unwrap();
        let half = 0.5 * 10f64.powi(-(precision as i32)) * (1.0 + 1e-9);
        for (p, q) in parsed.sequence.frames().iter().zip(seq.frames()) {
            for (a, b) in p.coords().iter().flatten().zip(q.coords().iter().flatten()) {
                prop_assert!((a - b).abs() <= half + 1e-9, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn exact_spread_is_monotone_and_submodular(seed in any::<u64>(), a in any::<u32>(), b in any::<u32>(), m in 0usize..6) {
        let mn = instance(seed);
        let n = mn.len();
        let m = m % n;
        let big = pick(b | a, n).into_iter().filter(|&x| x != m).collect::<Vec<_>>();
        let small: Vec<usize> = pick(a, n).into_iter().filter(|x| big.contains(x)).collect();
        // The empty set spreads to nobody.
        let f = |s: &[usize]| {
            if s.is_empty() { ExactSpread::from_count(0) } else { exact_expected_spread(s, &mn).unwrap() }
        };
        let with = |s: &[usize]| { let mut v = s.to_vec(); v.push(m); v };
        // Monotone: adding elements never lowers the spread.
        prop_assert!(f(&with(&small)) >= f(&small));
        prop_assert!(f(&big) >= f(&small));
        // Diminishing returns: f(A+m) - f(A) >= f(B+m) - f(B), compared as sums.
        prop_assert!(&f(&with(&small)) + &f(&big) >= &f(&with(&big)) + &f(&small));
    }

    #[test]
    fn greedy_meets_the_approximation_bound(seed in any::<u64>()) {
        let mn = instance(seed);
        for p in 1..=mn.eligible().len() {
            let (_, r) = greedy_exact(p, &mn).unwrap();
            let (_, best) = brute_force_optimum(p, &mn).unwrap();
            prop_assert!(r <= best);
            prop_assert!(r.to_f64() >= greedy_bound_factor(p) * best.to_f64());
        }
    }

    #[test]
    fn normalized_rows_sum_to_one_or_zero(values in coords(6 * 15)) {
        let sk = fixtures::toy_skeleton();
        let samples: Vec<MotionSample> = values
            .chunks(15)
            .enumerate()
            .map(|(i, c)| {
                let frames: Vec<f64> = c.iter().chain(c.iter().map(|v| v + i as f64).collect::<Vec<_>>().iter()).copied().collect();
                sample(&format!("s{i}"), &frames, 1, 1, 5)
            })
            .collect();
        let base = motion_icl::SampleCollection::new(samples, motion_icl::CollectionRole::BaseTrainingSet).unwrap();
        let (_, mn) = motion_icl::selection::build_matrices(&base, &sk, Default::default()).unwrap();
        for i in 0..mn.len() {
            let s: f64 = mn.row(i).iter().sum();
            prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
            prop_assert_eq!(mn.get(i, i), 0.0);
        }
    }
}

fn linear(id: &str, sk: &SkeletonSpec, offset: f64, l: usize, j: usize) -> MotionSample {
    let seq = |range: std::ops::Range<usize>| {
        let poses = range
            .map(|f| {
                Pose::new(
                    (0..sk.joint_count())
                        .map(|k| [offset + f as f64, k as f64, 2.0 * f as f64])
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        MotionSequence::new(poses, 25.0).unwrap()
    };
    MotionSample::new(id, "a", seq(0..l), seq(l..l + j)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scripts_and_transcripts_keep_their_shape(
        p in 0usize..4,
        n in 1usize..4,
        faults in 0usize..4,
        max_repairs in 0usize..3,
    ) {
        let sk = fixtures::toy_skeleton();
        let (l, j) = (4, 3);
        let base: Vec<_> = (0..p).map(|i| linear(&format!("b{i}"), &sk, i as f64, l, j)).collect();
        let support: Vec<_> = (0..n).map(|i| linear(&format!("s{i}"), &sk, 10.0 + i as f64, l, j)).collect();
        let test = linear("t", &sk, 50.0, l, j);
        let layout = ScriptLayout { p, n, l_frames: l, j_frames: j, precision: 1, stride: 1 };
        let script = build_practice_script(&base, &support, &test.observed, &sk, &layout).unwrap();
        prop_assert_eq!(script.turns.len(), 2 * (p + n) + 2);

        let settings = MockSettings { malformed_answers: faults, ..MockSettings::default() };
        let mut mock = MockProvider::new(sk.clone(), j, 1, settings, "t");
        let result = predict_with_repair(&script, &mut mock, &ProviderConfig::mock(), &sk, max_repairs);
        let transcript = match &result {
            Ok((parsed, t)) => {
                prop_assert!(faults <= max_repairs);
                prop_assert_eq!(&parsed.sequence, &test.future);
                t.clone()
            }
            Err(e) => {
                prop_assert!(faults > max_repairs);
                e.transcript().unwrap().clone()
            }
        };
        for (i, turn) in transcript.turns().iter().enumerate() {
            let want = if i % 2 == 0 { Sender::User } else { Sender::Assistant };
            prop_assert_eq!(turn.sender, want);
        }
        let repairs = faults.min(max_repairs);
        prop_assert_eq!(transcript.turns().len(), 2 * (script.turns.len() + repairs));
    }
}
