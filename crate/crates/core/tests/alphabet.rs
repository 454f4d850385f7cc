use proptest::prelude::*;
use speller_core::alphabet::*;
use speller_core::rng::Seed;

proptest! {
    #[test]
    fn every_draw_is_a_bijection(seed in any::<u64>()) {
        let cdf = build_cdf(&FrequencyTable::english()).unwrap();
        let perm = cdf.draw_permutation(&mut Seed(seed).rng());
        let mut idx: Vec<usize> = perm.iter().map(|s| s.index()).collect();
        idx.sort_unstable();
        prop_assert_eq!(idx, (0..SYMBOL_COUNT).collect::<Vec<_>>());
        let cycle = form_cycle(perm).unwrap();
        prop_assert_eq!(cycle.groups().count(), GROUPS_PER_CYCLE);
        for g in cycle.groups() {
            prop_assert_eq!(g.len(), GROUP_SIZE);
        }
    }

    #[test]
    fn inverse_lookup_inside_intervals(k in 0usize..SYMBOL_COUNT, frac in 0.001..0.999f64) {
        let cdf = build_cdf(&FrequencyTable::english()).unwrap();
        let lo = if k == 0 { 0.0 } else { cdf.breakpoints()[k - 1] };
        let hi = cdf.breakpoints()[k];
        let u = lo + frac * (hi - lo);
        prop_assert_eq!(cdf.inverse(u), cdf.order()[k]);
    }

    #[test]
    fn breakpoints_are_monotone_and_end_at_one(weights in prop::collection::vec(0.001..1.0f64, SYMBOL_COUNT)) {
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let table = FrequencyTable::new(CharacterSet::default(), probs, "random").unwrap();
        let cdf = build_cdf(&table).unwrap();
        prop_assert!(cdf.breakpoints().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((cdf.breakpoints()[SYMBOL_COUNT - 1] - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn identity_permutation_slices_in_order() {
    let ids: Vec<SymbolId> = (0..SYMBOL_COUNT).map(|i| SymbolId::new(i).unwrap()).collect();
    let cycle = form_cycle(ids.clone()).unwrap();
    for g in 0..GROUPS_PER_CYCLE {
        assert_eq!(cycle.group(g), &ids[g * 6..g * 6 + 6]);
    }
    assert!(form_cycle(ids[..41].to_vec()).is_err());
    let mut dup = ids.clone();
    dup[5] = dup[4];
    assert!(form_cycle(dup).is_err());
}

/// First-draw frequencies against the table, chi-square with 41 degrees of
/// freedom at significance 0.01 (critical value 64.950).
#[test]
fn first_draw_matches_table() {
    let table = FrequencyTable::english();
    let cdf = build_cdf(&table).unwrap();
    let mut rng = Seed(11).rng();
    let n = 100_000;
    let mut counts = vec![0u64; SYMBOL_COUNT];
    for _ in 0..n {
        counts[cdf.draw_permutation(&mut rng)[0].index()] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(table.probabilities())
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e) * (c as f64 - e) / e
        })
        .sum();
    assert!(chi2 < 64.950, "chi2 = {chi2}");
}

#[test]
fn uniform_positions_are_uniform() {
    let table = FrequencyTable::uniform(CharacterSet::default());
    let cdf = build_cdf(&table).unwrap();
    let mut rng = Seed(12).rng();
    let n = 42_000;
    let mut at_pos = vec![[0u32; SYMBOL_COUNT]; SYMBOL_COUNT];
    for _ in 0..n {
        for (pos, s) in cdf.draw_permutation(&mut rng).iter().enumerate() {
            at_pos[pos][s.index()] += 1;
        }
    }
    // Each cell has expectation 1000 and standard deviation about 31.
    for row in &at_pos {
        for &c in row {
            assert!((c as f64 - 1000.0).abs() < 5.0 * 31.0);
        }
    }
}

#[test]
fn consecutive_cycles_are_uncorrelated() {
    let cdf = build_cdf(&FrequencyTable::english()).unwrap();
    let e = CharacterSet::default().id_of('E').unwrap();
    let mut rng = Seed(13).rng();
    let n = 20_000;
    let groups: Vec<f64> = (0..n)
        .map(|_| form_cycle(cdf.draw_permutation(&mut rng)).unwrap().group_of(e) as f64)
        .collect();
    let mean = groups.iter().sum::<f64>() / n as f64;
    let var = groups.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n as f64;
    let cov = groups.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1) as f64;
    // Lag-one correlation of independent draws has standard error 1/sqrt(n).
    assert!((cov / var).abs() < 4.0 / (n as f64).sqrt());
}

#[test]
fn monte_carlo_is_deterministic() {
    let t = FrequencyTable::english();
    let a = monte_carlo_group_stats(&t, 500, &mut Seed(4).rng()).unwrap();
    let b = monte_carlo_group_stats(&t, 500, &mut Seed(4).rng()).unwrap();
    assert_eq!(a, b);
}
