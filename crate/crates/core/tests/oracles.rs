//! Cross-checks against independently written reference implementations and
//! statistical properties of the learners and estimators.

use epsfc::distributions::{size_interval, DistSpec};
use epsfc::game::{blocks, check_single_peaked, natural_ordering, BlockingOracle};
use epsfc::instances::{
    adversarial_family, extend_anon_sp, find_empty_core_sp, random_anon, random_anon_sp, random_fhg,
};
use epsfc::learning::{anon_sample_size, draw_samples, learn_anonymous, learn_fhg, mean_confidence_m, SampleRecord};
use epsfc::partition::validate_partition;
use epsfc::stabilizers::{stabilize_anonymous, stabilize_fhg, stabilize_fhg_with, FhgStep, FhgThresholds};
use epsfc::verification::{
    audit_green_anonymous, certify_empty_core, exact_blocking, exact_blocking_mass, find_core_stable, gr_decomposition,
    mc_blocking,
};
use epsfc::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_partition(n: usize, rng: &mut ChaCha8Rng) -> Partition {
    let k = rng.gen_range(1..=n);
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    Partition::from_labels(&labels)
}

/// Blocking count straight from the adjacency matrix, with utilities
/// compared by cross-multiplication.
fn naive_fhg_blocking(adj: &[Vec<bool>], blocks_of: &[Vec<usize>]) -> u64 {
    let n = adj.len();
    let mut home = vec![0; n];
    for (b, block) in blocks_of.iter().enumerate() {
        for &i in block {
            home[i] = b;
        }
    }
    let mut count = 0;
    for mask in 1u32..1 << n {
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let all_better = members.iter().all(|&i| {
            let here = members.iter().filter(|&&j| adj[i][j]).count() as i64;
            let block = &blocks_of[home[i]];
            let there = block.iter().filter(|&&j| adj[i][j]).count() as i64;
            here * block.len() as i64 > there * members.len() as i64
        });
        if all_better {
            count += 1;
        }
    }
    count
}

#[test]
fn exact_blocking_matches_naive_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for k in 0..6 {
        let g = random_fhg(10, [0.2, 0.5, 0.8][k % 3], k as u64).unwrap();
        let p = random_partition(10, &mut rng);
        let lists: Vec<Vec<usize>> = p.blocks().iter().map(|b| b.members().collect()).collect();
        let want = naive_fhg_blocking(&g.to_matrix(), &lists);
        let got = exact_blocking(&Game::Fhg(g), &p).unwrap();
        assert_eq!(got.blocking_count, want);
        assert_eq!(got.total_coalitions, 1023);
    }
}

/// Step-by-step replay of the degree-split stabilizer, written directly from
/// the prose rules with plain vectors.
fn simulate(adj: &[Vec<bool>], h: usize, budget: usize, cut: usize) -> (Vec<Vec<usize>>, Vec<usize>, Vec<Vec<usize>>) {
    let n = adj.len();
    let deg: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&x| x).count()).collect();
    let phi = deg.iter().filter(|&&d| d <= cut).count();
    let mut gr = Vec::new();
    let mut picked = Vec::new();
    if phi >= h {
        let mut blocks: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| deg[a].cmp(&deg[b]).then(a.cmp(&b)));
        let mut pool: Vec<usize> = order[..h].to_vec();
        for _ in 0..budget {
            if pool.is_empty() {
                break;
            }
            let i = pool[0];
            gr.push(i);
            let want = (2 * deg[i]).div_ceil(n - deg[i]);
            let find = |a: usize, blocks: &Vec<Vec<usize>>| blocks.iter().position(|b| b.contains(&a)).unwrap();
            let mut cands: Vec<(usize, usize)> = (0..n)
                .filter(|&j| adj[i][j])
                .map(|j| {
                    let tier = if pool.contains(&j) {
                        2
                    } else if blocks[find(j, &blocks)].len() == 1 {
                        0
                    } else {
                        1
                    };
                    (tier, j)
                })
                .collect();
            cands.sort();
            let f: Vec<usize> = cands.iter().take(want).map(|&(_, j)| j).collect();
            let mut merged = blocks.remove(find(i, &blocks));
            for &j in &f {
                if merged.contains(&j) {
                    continue;
                }
                merged.extend(blocks.remove(find(j, &blocks)));
            }
            merged.sort();
            blocks.push(merged);
            pool.retain(|a| *a != i && !f.contains(a));
            picked.push(f);
        }
        blocks.sort();
        (blocks, gr, picked)
    } else {
        let mut f: Vec<usize> = (0..n).collect();
        for _ in 0..budget {
            let Some(&i) = f.iter().filter(|a| !gr.contains(*a)).max_by(|&&a, &&b| deg[a].cmp(&deg[b]).then(b.cmp(&a)))
            else {
                break;
            };
            let gone: Vec<usize> = f.iter().copied().filter(|&a| a != i && !adj[i][a]).collect();
            f.retain(|a| !gone.contains(a));
            gr.push(i);
            picked.push(gone);
        }
        let rest: Vec<usize> = (0..n).filter(|a| !f.contains(a)).collect();
        let mut blocks = vec![f];
        if !rest.is_empty() {
            blocks.push(rest);
        }
        blocks.sort();
        (blocks, gr, picked)
    }
}

fn run_stabilizer(g: &SimpleFhg, t: FhgThresholds) -> (Vec<Vec<usize>>, Vec<usize>, Vec<Vec<usize>>) {
    let (p, trace) = stabilize_fhg_with(g, t);
    let mut blocks: Vec<Vec<usize>> = p.blocks().iter().map(|b| b.members().collect()).collect();
    blocks.sort();
    let picked = trace
        .steps
        .iter()
        .map(|s| match s {
            FhgStep::Matching { f_i, .. } => f_i.clone(),
            FhgStep::Clique { deleted, .. } => deleted.clone(),
        })
        .collect();
    (blocks, trace.gr, picked)
}

#[test]
fn star_replay_matches_simulator() {
    let n = 8;
    let mut out_star = vec![vec![false; n]; n];
    let mut in_star = vec![vec![false; n]; n];
    for leaf in 1..n {
        out_star[0][leaf] = true;
        in_star[leaf][0] = true;
    }
    let settings = [
        FhgThresholds::clamped(n),
        FhgThresholds { h: 3, budget: 2, degree_cut: 1 },
        FhgThresholds { h: 8, budget: 4, degree_cut: 7 },
        FhgThresholds { h: 2, budget: 3, degree_cut: 0 },
        FhgThresholds { h: 9, budget: 3, degree_cut: 0 },
    ];
    for adj in [&out_star, &in_star] {
        let g = SimpleFhg::from_matrix(adj).unwrap();
        for t in settings {
            assert_eq!(run_stabilizer(&g, t), simulate(adj, t.h, t.budget, t.degree_cut), "{t:?}");
        }
    }
}

#[test]
fn random_graphs_match_simulator() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..300 {
        let n = rng.gen_range(2..14);
        let g = random_fhg(n, rng.gen_range(0.0..1.0), k).unwrap();
        let t =
            FhgThresholds { h: rng.gen_range(1..=n), budget: rng.gen_range(1..=n), degree_cut: rng.gen_range(0..n) };
        assert_eq!(run_stabilizer(&g, t), simulate(&g.to_matrix(), t.h, t.budget, t.degree_cut));
    }
}

#[test]
fn stabilizer_outputs_split_blocking_by_gr() {
    for seed in 0..20 {
        let g = random_fhg(14, 0.05 + 0.045 * seed as f64, seed).unwrap();
        let (p, trace) = stabilize_fhg(&g);
        let d = gr_decomposition(&g, &p, &trace.gr).unwrap();
        let r = exact_blocking(&Game::Fhg(g), &p).unwrap();
        assert_eq!(d.blocking, r.blocking_count);
        assert_eq!(d.blocking_avoiding + d.blocking_meeting, d.blocking);
        assert!(d.fraction() <= d.bound() + 1e-15);
    }
}

#[test]
fn learned_fhg_replays_every_sample() {
    let u = CoalitionDistribution::uniform(9).unwrap();
    let mut successes = 0;
    for seed in 0..40 {
        let truth = random_fhg(9, 0.4, seed).unwrap();
        let game = Game::Fhg(truth.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 20 + seed as usize * 3;
        let samples = draw_samples(&game, &u, m, &mut rng);
        if let Ok(learned) = learn_fhg(9, &samples) {
            successes += 1;
            let replay = Game::Fhg(learned.clone());
            for s in &samples {
                assert_eq!(replay.member_values(s.coalition()), game.member_values(s.coalition()));
            }
            assert_eq!(learned, truth);
        }
    }
    assert!(successes > 10);
}

#[test]
fn learn_fhg_reports_missing_agents() {
    let recs = vec![SampleRecord::new(Coalition::from_agents([0, 1]), vec![0.5, 0.0]).unwrap()];
    match learn_fhg(3, &recs) {
        Err(Error::Underdetermined { agents }) => assert_eq!(agents, vec![0, 1, 2]),
        other => panic!("{other:?}"),
    }
    let g = learn_fhg(2, &recs).unwrap();
    assert!(g.has_arc(0, 1) && !g.has_arc(1, 0));
}

#[test]
fn mean_estimate_within_alpha() {
    let (n, alpha, delta) = (10, 0.5, 0.1);
    let m = mean_confidence_m(n, alpha, delta);
    assert_eq!(m, 600);
    let d = DistSpec::linear_tilt(n, 3.0).build(n).unwrap();
    let mu = d.mean_size();
    let game = Game::Anon(random_anon(n, 1));
    let trials = 200;
    let mut hits = 0;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let learned = learn_anonymous(n, &draw_samples(&game, &d, m, &mut rng)).unwrap();
        if (learned.mean_size().unwrap() - mu).abs() < alpha {
            hits += 1;
        }
    }
    assert!(hits as f64 >= (1.0 - delta) * trials as f64, "{hits}/{trials}");
}

#[test]
fn interval_sizes_are_learned() {
    let (n, eps, delta, lambda) = (6, 0.2, 0.2, 2.0);
    let m = anon_sample_size(n, delta, eps, lambda);
    let d = DistSpec::linear_tilt(n, lambda).build(n).unwrap();
    let target = size_interval(d.mean_size(), lambda, eps, n);
    let game = Game::Anon(random_anon(n, 2));
    let trials = 40;
    let mut covered = 0;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let learned = learn_anonymous(n, &draw_samples(&game, &d, m, &mut rng)).unwrap();
        let known = learned.learned_sizes();
        if target.sizes.iter().all(|s| known.contains(s)) {
            covered += 1;
        }
    }
    assert!(covered as f64 >= (1.0 - delta) * trials as f64);
}

#[test]
fn monte_carlo_converges() {
    let g = Game::Fhg(random_fhg(12, 0.5, 3).unwrap());
    let p = Partition::singletons(12);
    let u = CoalitionDistribution::uniform(12).unwrap();
    let exact = exact_blocking_mass(&g, &p, &u).unwrap();
    assert!(exact > 0.01);
    let mut widths = Vec::new();
    for m in [1_000, 10_000, 100_000] {
        let e = mc_blocking(&g, &p, &u, m, 0.01, 99).unwrap();
        assert!(e.contains(exact), "m = {m}: {} vs {exact}", e.p_hat);
        widths.push(e.ci_halfwidth);
    }
    assert!(widths[2] < widths[1] && widths[1] < widths[0]);
}

#[test]
fn blocking_mass_within_interval_and_green_bound() {
    let n = 10;
    let u = CoalitionDistribution::uniform(n).unwrap();
    let pmf = u.size_pmf();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..30 {
        let g = random_anon(n, seed);
        let lo = rng.gen_range(1..=n);
        let hi = rng.gen_range(lo..=n);
        let interval = SizeInterval::from_sizes((lo..=hi).collect());
        let (p, _) = stabilize_anonymous(&g, &interval).unwrap();
        let greens = audit_green_anonymous(&g, &p, &interval).unwrap().len();
        let mass = exact_blocking_mass(&Game::Anon(g), &p, &u).unwrap();
        let outside: f64 = (1..=n).filter(|s| !interval.contains(*s)).map(|s| pmf[s]).sum();
        let (_, hi_b) = epsfc::distributions::bartlett_bounds((-(greens as f64)).exp2(), 1.0);
        assert!(mass <= outside + hi_b + 1e-12);
    }
}

#[test]
fn extension_keeps_an_always_blocking_family_when_large_enough() {
    let hit = find_empty_core_sp(7, 100_000, 1).unwrap();
    let n = 15;
    let (ext, _) = extend_anon_sp(&hit.game, n).unwrap();
    let family = adversarial_family(7, n);
    let game = Game::Anon(ext.clone());
    let fam = CoalitionDistribution::family_uniform(n, family.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for lambda in [2.0, 10.0] {
        let adv = CoalitionDistribution::adversarial_bounded(family.clone(), n, lambda).unwrap();
        let (_, p_on, _) = adv.adversarial_parts().unwrap();
        for _ in 0..200 {
            let p = random_partition(n, &mut rng);
            let o = BlockingOracle::new(&ext, &p);
            assert!(family.iter().any(|c| o.blocks(c)));
            assert!(exact_blocking_mass(&game, &p, &fam).unwrap() >= 1.0 / 128.0);
            assert!(exact_blocking_mass(&game, &p, &adv).unwrap() >= p_on);
        }
    }
}

#[test]
fn small_extensions_can_absorb_new_agents() {
    // With only two added agents they fit inside blocks of base sizes, where
    // base valuations apply unchanged, so a stable partition can exist.
    let hit = find_empty_core_sp(7, 100_000, 1).unwrap();
    assert!(certify_empty_core(&Game::Anon(hit.game.clone())).unwrap());
    let (ext, cert) = extend_anon_sp(&hit.game, 9).unwrap();
    assert_eq!(&cert.peaks[7..], &[9, 9]);
    let stable = find_core_stable(&Game::Anon(ext)).unwrap().expect("stable partition");
    let added = stable.block_of(7);
    assert!(added.size() <= 7 && added.members().any(|a| a < 7));
}

fn arb_partition(n: usize) -> impl Strategy<Value = Partition> {
    proptest::collection::vec(0..n, n).prop_map(|labels| Partition::from_labels(&labels))
}

proptest! {
    #[test]
    fn blocks_is_conjunction_of_member_improvements(
        seed in any::<u64>(),
        n in 1usize..9,
        mask in 1u64..512,
        labels in proptest::collection::vec(0usize..9, 9),
    ) {
        let g = random_fhg(n, 0.5, seed).unwrap();
        let p = Partition::from_labels(&labels[..n]);
        let s = Coalition::from_mask(mask & ((1 << n) - 1));
        prop_assume!(!s.is_empty());
        let direct = s.members().all(|i| g.value(i, &s).unwrap() > g.utility(i, &p));
        prop_assert_eq!(blocks(&g, &s, &p), direct);

        let a = random_anon(n, seed);
        let direct = s.members().all(|i| a.value(i, &s).unwrap() > a.utility(i, &p));
        prop_assert_eq!(blocks(&a, &s, &p), direct);
    }

    #[test]
    fn validate_accepts_covers_and_rejects_corruptions(p in arb_partition(8), which in 0usize..8, into in 0usize..8) {
        prop_assert!(validate_partition(p.blocks(), 8).is_ok());
        let mut dup: Vec<Coalition> = p.blocks().to_vec();
        let k = into % dup.len();
        if !dup[k].contains(which) {
            dup[k].insert(which);
            prop_assert!(validate_partition(&dup, 8).is_err());
        }
        let mut missing: Vec<Coalition> = p.blocks().to_vec();
        for b in &mut missing {
            b.remove(which);
        }
        missing.retain(|b| !b.is_empty());
        prop_assert!(validate_partition(&missing, 8).is_err());
    }

    #[test]
    fn unimodal_tables_pass_and_two_peaks_fail(n in 3usize..10, seed in any::<u64>()) {
        let (g, cert) = random_anon_sp(n, seed);
        prop_assert!(check_single_peaked(&g, &natural_ordering(n)).is_ok());
        prop_assert_eq!(cert.peaks.len(), n);

        let mut rows = g.rows().to_vec();
        // two strict local maxima at the ends with a dip between
        rows[0] = (1..=n).map(|s| if s == 1 || s == n { 2.0 } else { 1.0 }).collect();
        let bad = AnonymousHg::new(rows).unwrap();
        prop_assert!(check_single_peaked(&bad, &natural_ordering(n)).is_err());
    }

    #[test]
    fn stabilizers_return_valid_deterministic_partitions(n in 2usize..16, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_fhg(n, p, seed).unwrap();
        let (a, ta) = stabilize_fhg(&g);
        let (b, tb) = stabilize_fhg(&g);
        prop_assert!(validate_partition(a.blocks(), n).is_ok());
        prop_assert_eq!(a, b);
        prop_assert_eq!(ta, tb);

        let an = random_anon(n, seed);
        let interval = SizeInterval::from_sizes((1..=n).collect());
        let (q, t) = stabilize_anonymous(&an, &interval).unwrap();
        prop_assert!(validate_partition(q.blocks(), n).is_ok());
        prop_assert_eq!(n, t.q * t.s_star + t.r);
        prop_assert!(t.r < t.s_star);
    }

    #[test]
    fn learned_fhg_is_sound(seed in any::<u64>(), m in 1usize..60) {
        let truth = random_fhg(6, 0.5, seed).unwrap();
        let game = Game::Fhg(truth);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = draw_samples(&game, &CoalitionDistribution::uniform(6).unwrap(), m, &mut rng);
        if let Ok(learned) = learn_fhg(6, &samples) {
            let replay = Game::Fhg(learned);
            for s in &samples {
                prop_assert_eq!(replay.member_values(s.coalition()), game.member_values(s.coalition()));
            }
        }
    }
}
