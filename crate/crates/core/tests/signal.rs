use proptest::prelude::*;
use speller_core::classifier::Label;
use speller_core::rng::Seed;
use speller_core::signal::*;

fn trial_from(values: Vec<f64>) -> Trial {
    Trial::new(values, Label::NonOddball, Vec::new(), 0).unwrap()
}

proptest! {
    #[test]
    fn preprocess_is_linear(
        x in prop::collection::vec(-50.0..50.0f64, CHANNELS * TRIAL_SAMPLES),
        y in prop::collection::vec(-50.0..50.0f64, CHANNELS * TRIAL_SAMPLES),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let px = preprocess(&trial_from(x)).unwrap();
        let py = preprocess(&trial_from(y)).unwrap();
        let pm = preprocess(&trial_from(mix)).unwrap();
        for i in 0..FEATURE_DIM {
            let expected = a * px.as_slice()[i] + b * py.as_slice()[i];
            prop_assert!((pm.as_slice()[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }
}

#[test]
fn zero_and_indicator_layouts() {
    let zero = preprocess(&trial_from(vec![0.0; CHANNELS * TRIAL_SAMPLES])).unwrap();
    assert_eq!(zero.as_slice().len(), 480);
    assert!(zero.as_slice().iter().all(|&v| v == 0.0));
    for c in 0..CHANNELS {
        let mut s = vec![0.0; CHANNELS * TRIAL_SAMPLES];
        s[c * TRIAL_SAMPLES..(c + 1) * TRIAL_SAMPLES].fill(1.0);
        let v = preprocess(&trial_from(s)).unwrap();
        for (i, &x) in v.as_slice().iter().enumerate() {
            assert_eq!(x, if i / KEPT_SAMPLES == c { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn bad_trials_rejected() {
    assert!(Trial::new(vec![0.0; 10], Label::Oddball, Vec::new(), 0).is_err());
    let mut s = vec![0.0; CHANNELS * TRIAL_SAMPLES];
    s[7] = f64::NAN;
    assert!(Trial::new(s, Label::Oddball, Vec::new(), 0).is_err());
}

#[test]
fn background_moments() {
    let sigma = 3.0;
    let subject = SubjectModel::noisy(sigma);
    let mut rng = Seed(21).rng();
    let n = 10_000;
    let mut sum = vec![0.0; CHANNELS * TRIAL_SAMPLES];
    let mut sum2 = vec![0.0; CHANNELS * TRIAL_SAMPLES];
    for _ in 0..n {
        let t = synthesize_trial(&subject, Label::NonOddball, &mut rng).unwrap();
        for (i, &v) in t.samples().iter().enumerate() {
            sum[i] += v;
            sum2[i] += v * v;
        }
    }
    let nf = n as f64;
    let grand_var = sum2.iter().sum::<f64>() / (nf * sum2.len() as f64);
    assert!((grand_var / (sigma * sigma) - 1.0).abs() < 0.05);
    for i in 0..sum.len() {
        let mean = sum[i] / nf;
        // Five standard errors of the mean.
        assert!(mean.abs() < 5.0 * sigma / nf.sqrt());
        let var = sum2[i] / nf - mean * mean;
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.05, "sample {i}: {var}");
    }
}

#[test]
fn averaged_difference_peaks_at_template_latencies() {
    let subject = SubjectModel::noisy(4.0);
    let mut rng = Seed(22).rng();
    let n = 500;
    let mut diff = vec![0.0; CHANNELS * TRIAL_SAMPLES];
    for _ in 0..n {
        let o = synthesize_trial(&subject, Label::Oddball, &mut rng).unwrap();
        let e = synthesize_trial(&subject, Label::NonOddball, &mut rng).unwrap();
        for i in 0..diff.len() {
            diff[i] += (o.samples()[i] - e.samples()[i]) / n as f64;
        }
    }
    let period_ms = 1000.0 / f64::from(SAMPLE_RATE_HZ);
    let t_of = |j: usize| j as f64 * period_ms;
    for c in 0..CHANNELS {
        let w = &diff[c * TRIAL_SAMPLES..(c + 1) * TRIAL_SAMPLES];
        let jmax = (0..TRIAL_SAMPLES).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        assert!((285.0 - period_ms..=300.0 + period_ms).contains(&t_of(jmax)), "{} max at {}", CHANNEL_NAMES[c], t_of(jmax));
    }
    for c in [6, 7] {
        let w = &diff[c * TRIAL_SAMPLES..(c + 1) * TRIAL_SAMPLES];
        let jmin = (0..TRIAL_SAMPLES).min_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        assert!((t_of(jmin) - 190.0).abs() <= period_ms, "{} min at {}", CHANNEL_NAMES[c], t_of(jmin));
    }
}

#[test]
fn schedule_overlaps() {
    for (iti, overlap) in [(400, 0), (240, 160), (160, 240), (500, 0)] {
        let s = overlap_schedule(iti, 400).unwrap();
        assert_eq!(s.overlap_ms(), overlap);
        assert_eq!(s.window(3), (3 * u64::from(iti), 3 * u64::from(iti) + 400));
    }
    assert!(overlap_schedule(0, 400).is_err());
}

#[test]
fn streams_are_reproducible() {
    let run = || {
        let mut s = SignalStream::new(SubjectModel::mid_snr(), Seed(5).rng()).unwrap();
        (0..50u64)
            .map(|k| s.acquire(k * 160_000, k % 7 == 2, Vec::new()).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
