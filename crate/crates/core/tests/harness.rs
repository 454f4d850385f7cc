use speller_core::alphabet::FrequencyTable;
use speller_core::classifier::Label;
use speller_core::harness::*;
use speller_core::rng::Seed;
use speller_core::signal::SubjectModel;
use speller_core::speller::{Dictionary, Mechanism, BENCHMARK_SENTENCE};

fn trained(iti: u32, subject: &SubjectModel, seed: u64) -> (ProtocolConfig, TrainingSet, FittedModel) {
    let cfg = ProtocolConfig::with_iti(iti);
    let (set, model) = train_and_fit(&cfg, subject, &FrequencyTable::english(), Seed(seed)).unwrap();
    (cfg, set, model)
}

fn online(cfg: &ProtocolConfig, subject: &SubjectModel, model: &FittedModel, seed: u64) -> (SessionLog, SessionReport) {
    run_online(cfg, subject, model, &FrequencyTable::english(), &Dictionary::bundled(), BENCHMARK_SENTENCE, Seed(seed))
        .unwrap()
}

#[test]
fn oracle_sessions_are_error_free_at_every_iti() {
    let subject = SubjectModel::oracle();
    for iti in [400, 240, 160] {
        let (cfg, set, model) = trained(iti, &subject, 1);
        let expected = [750, 1250, 1875][[400, 240, 160].iter().position(|&i| i == iti).unwrap()];
        assert!(set.trials.len().abs_diff(expected) <= 5);
        let (log, rep) = online(&cfg, &subject, &model, 2);
        assert!(rep.completed && rep.exited);
        assert_eq!(rep.n_correct, 44);
        assert_eq!(rep.selections, 44);
        assert_eq!(rep.clock.pause_total_us, 129_000_000);
        // Every trial decision is the true label, so the time is the minimum
        // the logged illumination sequence allows.
        assert!(log.trials().all(|t| t.decision.is_oddball() == t.attended));
        let slot = (iti as u64) * 1000 + cfg.overhead_us;
        assert_eq!(rep.clock.elapsed_us, rep.clock.trials * slot + 129_000_000);
        assert_eq!(log.trials().last().unwrap().clock_us, rep.clock.elapsed_us);
        assert!(rep.practical.bits_per_sec <= rep.active.bits_per_sec);
        let practical = 44.0 * 42f64.log2() / rep.time_s;
        assert!((rep.practical.bits_per_sec - practical).abs() < 1e-12);
    }
}

#[test]
fn online_runs_are_reproducible() {
    let subject = SubjectModel::mid_snr();
    let (cfg, _, model) = trained(240, &subject, 3);
    let a = online(&cfg, &subject, &model, 4);
    let b = online(&cfg, &subject, &model, 4);
    assert_eq!(a, b);
    let c = online(&cfg, &subject, &model, 5);
    assert_ne!(a.0, c.0);
    let identity = a.1.clock.iti_total_us + a.1.clock.overhead_total_us + a.1.clock.pause_total_us;
    assert_eq!(a.1.clock.elapsed_us, identity);
    if a.1.completed {
        assert!(a.1.practical.bits_per_sec <= a.1.active.bits_per_sec);
    }
}

#[test]
fn inattentive_user_exhausts_the_budget() {
    let (mut cfg, _, model) = trained(400, &SubjectModel::oracle(), 6);
    cfg.trial_budget = 3000;
    let (log, rep) = online(&cfg, &SubjectModel::inattentive(0.0), &model, 7);
    assert!(!rep.completed && !rep.exited);
    assert_eq!(rep.clock.trials, 3000);
    assert_eq!(rep.selections_by_mechanism[0], 0);
    assert!(log.selections().all(|s| s.mechanism != Mechanism::Stage2));
}

#[test]
fn mismatched_model_is_rejected() {
    let (_, _, model) = trained(400, &SubjectModel::oracle(), 8);
    let cfg = ProtocolConfig::with_iti(160);
    let r = run_online(
        &cfg,
        &SubjectModel::oracle(),
        &model,
        &FrequencyTable::english(),
        &Dictionary::bundled(),
        BENCHMARK_SENTENCE,
        Seed(0),
    );
    assert!(r.is_err());
}

#[test]
fn oracle_cross_validation_is_perfect() {
    let (cfg, set, _) = trained(160, &SubjectModel::oracle(), 9);
    let v = set.features().unwrap();
    let l = set.labels();
    let cv = cross_validate(&v, &l, 10, 2, cfg.cpca, Seed(10)).unwrap();
    assert_eq!(cv.mean_accuracy, 1.0);
    assert_eq!(cv.std_accuracy, 0.0);
    let sub = subsample_check(&v, &l, 750, 10, 2, cfg.cpca, Seed(11)).unwrap();
    assert_eq!(sub.mean_accuracy, 1.0);
    assert_eq!(sub.counts.total(), 2 * 750);
    assert_eq!(sub.counts.oddballs(), 2 * (750 / 7));
}

#[test]
fn stratified_subsample_preserves_ratio() {
    let labels: Vec<Label> = (0..1875).map(|i| if i % 7 == 3 { Label::Oddball } else { Label::NonOddball }).collect();
    for target in [70, 700, 750, 1000] {
        let idx = stratified_subsample(&labels, target, Seed(target as u64)).unwrap();
        assert_eq!(idx.len(), target);
        let o = idx.iter().filter(|&&i| labels[i].is_oddball()).count();
        assert_eq!(o, target / 7);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }
    assert!(stratified_subsample(&labels, 5000, Seed(0)).is_err());
}

#[test]
fn noise_collapses_to_the_majority_class() {
    let (cfg, set, _) = trained(400, &SubjectModel::noise_only(), 12);
    let cv = cross_validate(&set.features().unwrap(), &set.labels(), 10, 3, cfg.cpca, Seed(13)).unwrap();
    // Two binomial standard errors of a single pass over the set.
    let p = 6.0 / 7.0;
    let se = (p * (1.0 - p) / set.trials.len() as f64).sqrt();
    assert!((cv.mean_accuracy - p).abs() <= 2.0 * se, "{}", cv.mean_accuracy);
    assert!(cv.bits_per_trial <= 0.01);
}

#[test]
fn mid_snr_subsample_tracks_the_full_set() {
    let (cfg, set, _) = trained(160, &SubjectModel::mid_snr(), 14);
    let v = set.features().unwrap();
    let l = set.labels();
    let full = cross_validate(&v, &l, 10, 3, cfg.cpca, Seed(15)).unwrap();
    let sub = subsample_check(&v, &l, 750, 10, 3, cfg.cpca, Seed(16)).unwrap();
    assert!(full.mean_accuracy > 6.0 / 7.0 && full.mean_accuracy < 1.0);
    assert!(full.bits_per_trial > 0.0);
    assert!((full.mean_accuracy - sub.mean_accuracy).abs() <= 0.02, "{} vs {}", full.mean_accuracy, sub.mean_accuracy);
    let again = cross_validate(&v, &l, 10, 3, cfg.cpca, Seed(15)).unwrap();
    assert_eq!(full, again);
}
