use proptest::prelude::*;
use speller_core::alphabet::{FrequencyTable, SymbolId, GROUP_SIZE, SYMBOL_COUNT};
use speller_core::classifier::Label;
use speller_core::rng::Seed;
use speller_core::speller::*;

const TIMING: TrialTiming = TrialTiming { iti_us: 160_000, overhead_us: 12_000 };

fn speller(seed: u64) -> Speller {
    Speller::new(&FrequencyTable::english(), Dictionary::bundled(), SpellerConfig::default(), Seed(seed).rng()).unwrap()
}

/// Decides oddball exactly when the next wanted symbol is lit.
fn oracle_spell(sp: &mut Speller, target: &str, max_trials: usize) -> Vec<SelectionEvent> {
    let mut events = Vec::new();
    for _ in 0..max_trials {
        match sp.mode() {
            Mode::Exited => break,
            Mode::Paused => {
                sp.resume().unwrap();
                continue;
            }
            _ => {}
        }
        let n = correct_prefix_len(sp.prompt(), target);
        let want = if n == sp.prompt().chars().count() { target.chars().nth(n).unwrap() } else { '<' };
        let want = sp.charset().id_of(want).unwrap();
        let hit = sp.illuminated().contains(&want);
        let (label, p) = if hit { (Label::Oddball, 1.0) } else { (Label::NonOddball, 0.0) };
        if let Some(e) = sp.step(label, p, TIMING).unwrap() {
            events.push(e);
        }
    }
    events
}

#[test]
fn oracle_types_the_benchmark() {
    for seed in 0..5 {
        let mut sp = speller(seed);
        let events = oracle_spell(&mut sp, BENCHMARK_SENTENCE, 100_000);
        assert_eq!(sp.mode(), Mode::Exited);
        assert_eq!(sp.prompt(), BENCHMARK_SENTENCE);
        assert_eq!(correct_prefix_len(sp.prompt(), BENCHMARK_SENTENCE), 44);
        assert_eq!(events.len(), 44);
        assert_eq!(sp.clock().pause_total_us, 129_000_000);
        assert!(events.iter().all(|e| e.mechanism != Mechanism::Integration));
    }
}

#[test]
fn trial_frequency_with_overhead() {
    let mut clock = SessionClock::default();
    for _ in 0..1000 {
        clock.advance(TIMING, &[]);
    }
    let rate = clock.trials as f64 / clock.elapsed_s();
    assert!((5.81..=5.86).contains(&rate), "{rate}");
    assert_eq!(SessionClock::default().elapsed_us, 0);
}

fn inputs() -> impl Strategy<Value = Vec<(bool, f64)>> {
    prop::collection::vec((any::<bool>(), 0.0f64..=1.0), 1..1500)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_machine_invariants(seed in any::<u64>(), oddball_rate in 0.0f64..0.6, script in inputs()) {
        let mut sp = speller(seed);
        let mut iti = 0u64;
        let mut overhead = 0u64;
        let mut pauses = 0u64;
        for (flip, p) in script {
            if sp.mode() == Mode::Exited {
                prop_assert!(sp.step(Label::NonOddball, 0.5, TIMING).is_err());
                break;
            }
            if sp.mode() == Mode::Paused {
                prop_assert!(sp.step(Label::NonOddball, 0.5, TIMING).is_err());
                sp.resume().unwrap();
            }
            if sp.mode() == Mode::Stage2 {
                prop_assert_eq!(sp.single_members().unwrap().len(), GROUP_SIZE);
            }
            let lit: Vec<SymbolId> = sp.illuminated().to_vec();
            prop_assert!(!lit.is_empty());
            let before = sp.integrator().clone();
            let decision = if flip && p < oddball_rate { Label::Oddball } else { Label::NonOddball };
            let event = sp.step(decision, p, TIMING).unwrap();
            iti += TIMING.iti_us;
            overhead += TIMING.overhead_us;

            let ig = sp.integrator();
            prop_assert!(ig.streak() <= 10);
            prop_assert!(ig.log_evidence().iter().all(|v| v.is_finite()));
            prop_assert!(sp.charset().contains_str(sp.prompt()));

            if let Some(e) = event {
                pauses += e.pause_us;
                if e.mechanism == Mechanism::Integration {
                    prop_assert_eq!(before.leader(), Some(e.symbol));
                    prop_assert_eq!(before.streak(), 9);
                } else {
                    prop_assert!(lit.contains(&e.symbol));
                }
                if e.character == '*' {
                    prop_assert_eq!(e.pause_us, 0);
                    prop_assert_eq!(sp.mode(), Mode::Exited);
                } else {
                    prop_assert_eq!(e.pause_us, 3_000_000);
                    prop_assert_eq!(sp.mode(), Mode::Paused);
                }
                let probs = sp.integrator().probabilities();
                prop_assert!(probs.iter().all(|&q| q == 1.0 / SYMBOL_COUNT as f64));
                prop_assert_eq!(sp.integrator().streak(), 0);
            }
            let c = sp.clock();
            prop_assert_eq!(c.iti_total_us, iti);
            prop_assert_eq!(c.overhead_total_us, overhead);
            prop_assert_eq!(c.pause_total_us, pauses);
            prop_assert_eq!(c.elapsed_us, iti + overhead + pauses);
        }
    }

    #[test]
    fn completions_extend_dictionary_words(prefix in "[A-Z]{1,4}") {
        let dict = Dictionary::bundled();
        let sp = speller(0);
        let cands = completion_candidates(&dict, sp.charset(), &prefix, 5);
        prop_assert!(cands.len() <= 5);
        for id in cands {
            let c = sp.charset().symbol(id);
            if c == '>' {
                prop_assert!(dict.contains(&prefix));
            } else {
                let longer = format!("{prefix}{c}");
                prop_assert!(dict.words().any(|w| w.starts_with(&longer)));
            }
        }
    }

    #[test]
    fn backspace_undoes_append(prompt in "[A-Z>]{0,12}", c in "[A-Z0-9>]") {
        let mut s = prompt.clone();
        let c = c.chars().next().unwrap();
        prop_assert_eq!(apply_selection(&mut s, c), SelectionEffect::Appended);
        prop_assert_eq!(apply_selection(&mut s, '<'), SelectionEffect::Deleted);
        prop_assert_eq!(s, prompt);
    }
}
