use std::collections::{BTreeMap, HashSet};

use dakg_core::Schema;
use dakg_kge::data::IdTriple;
use dakg_kge::{
    fine_tune, fixtures, split, train, BernoulliSampler, EarlyStopConfig, EarlyStopper, EvalContext, EvalMode, FineTuneConfig,
    KgData, ModelConfig, ModelKind, Sides, Slot, SplitSpec,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy() -> KgData {
    KgData::build(&fixtures::toy_graph(), &Schema::bootstrap(), &SplitSpec::default())
}

fn toy_config() -> ModelConfig {
    ModelConfig { model: ModelKind::TransE, dim: 16, lr: 0.01, npp: 5, batch_size: 10, ..Default::default() }
}

#[test]
fn toy_graph_is_memorized() {
    let data = toy();
    assert_eq!(data.all.len(), 50);
    let (s, h) = train(&data.view, &data.entities, &data.relations, &data.all, &[], &toy_config(), &EarlyStopConfig::default())
        .unwrap();
    assert!(h.losses.len() <= 300);
    assert!(h.losses.last().unwrap() < &(0.1 * h.losses[0]));
    let ctx = EvalContext { candidates: Some(&data.candidates), known: None };
    let r = dakg_kge::evaluate(&s, &data.all, EvalMode::RangeFiltered, Sides::Tail, &ctx);
    assert!(r.tail.unwrap().hits1 >= 0.9, "{:?}", r.tail);
    s.check_invariants().unwrap();
}

#[test]
fn training_is_deterministic_per_seed() {
    let data = toy();
    let cfg = ModelConfig { max_epochs: 20, ..toy_config() };
    let run = |c: &ModelConfig| train(&data.view, &data.entities, &data.relations, &data.all, &[], c, &EarlyStopConfig::default()).unwrap();
    let (a, ha) = run(&cfg);
    let (b, hb) = run(&cfg);
    assert_eq!(a.ent, b.ent);
    assert_eq!(ha, hb);
    let (c, _) = run(&ModelConfig { seed: 1, ..cfg });
    assert_ne!(a.ent, c.ent);
}

#[test]
fn bad_config_is_rejected() {
    let data = toy();
    let cfg = ModelConfig { dim: 0, ..toy_config() };
    assert!(train(&data.view, &data.entities, &data.relations, &data.all, &[], &cfg, &EarlyStopConfig::default()).is_err());
}

#[test]
fn patience_stops_after_two_flat_evaluations() {
    let mut s = EarlyStopper::new(EarlyStopConfig::default());
    let trace = [0.2, 0.3, 0.3, 0.25, 0.9];
    let mut stopped = None;
    for (i, h) in trace.iter().enumerate() {
        let epoch = 15 * (i + 1);
        assert!(s.due(epoch) && !s.due(epoch + 1));
        if s.observe(*h).1 {
            stopped = Some(epoch);
            break;
        }
    }
    assert_eq!(stopped, Some(60));

    let mut m = EarlyStopper::new(EarlyStopConfig::monitor_only(15));
    assert!(trace.iter().all(|h| !m.observe(*h).1));
}

#[test]
fn fine_tune_with_nothing_new_is_identity() {
    let data = toy();
    let cfg = ModelConfig { max_epochs: 30, ..toy_config() };
    let (s, _) = train(&data.view, &data.entities, &data.relations, &data.all, &[], &cfg, &EarlyStopConfig::default()).unwrap();
    let t = fine_tune(&s, &[], &FineTuneConfig::default(), &BTreeMap::new()).unwrap();
    assert_eq!(t.ent, s.ent);
    assert_eq!(t.rel, s.rel);
}

#[test]
fn fine_tune_embeds_new_entity_near_its_peers() {
    let data = toy();
    let cfg = ModelConfig { max_epochs: 200, ..toy_config() };
    let (s, _) = train(&data.view, &data.entities, &data.relations, &data.all, &[], &cfg, &EarlyStopConfig::default()).unwrap();
    // A newcomer sharing person0's home town and employer.
    let home = data.all.iter().find(|t| data.entities.name(t[0]) == "ex:person0" && data.relations.name(t[1]) == "ex:livesIn").unwrap();
    let job = data.all.iter().find(|t| data.entities.name(t[0]) == "ex:person0" && data.relations.name(t[1]) == "ex:worksAt").unwrap();
    let new = vec![
        ["ex:newcomer".to_string(), "ex:livesIn".to_string(), data.entities.name(home[2]).to_string()],
        ["ex:newcomer".to_string(), "ex:worksAt".to_string(), data.entities.name(job[2]).to_string()],
    ];
    let t = fine_tune(&s, &new, &FineTuneConfig::default(), &BTreeMap::new()).unwrap();
    let id = t.entities.get("ex:newcomer").expect("embedded");
    assert_eq!(t.entities.len(), s.entities.len() + 1);
    assert_eq!(t.train.len(), s.train.len() + 2);
    t.check_invariants().unwrap();
    let near: Vec<&str> = t.nearest(id, 5).iter().map(|(e, _)| t.entities.name(*e)).collect();
    assert!(near.iter().any(|n| n.starts_with("ex:person")), "{near:?}");
    // The newcomer's livesIn tail ranks near the top.
    let ids = t.ids(&new[0][0], &new[0][1], &new[0][2]).unwrap();
    let ctx = EvalContext { candidates: None, known: None };
    let r = dakg_kge::evaluate(&t, &[ids], EvalMode::Raw, Sides::Tail, &ctx);
    assert!(r.tail.unwrap().hits3 == 1.0);
}

#[test]
fn bernoulli_head_rates() {
    // r0 one-to-one, r1 one-to-many, r2 many-to-one.
    let mut train: Vec<IdTriple> = (0..20).map(|i| [i, 0, i + 20]).collect();
    for h in 0..4 {
        train.extend((0..10).map(|k| [h, 1, 20 + h * 10 + k]));
    }
    for t in 0..4 {
        train.extend((0..10).map(|k| [20 + t * 10 + k, 2, t]));
    }
    let sampler = BernoulliSampler::new(&train, 80, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (r, expected) in [(0u32, 0.5), (1, 10.0 / 11.0), (2, 1.0 / 11.0)] {
        assert!((sampler.head_probability(r) - expected).abs() < 1e-12);
        let pos = *train.iter().find(|t| t[1] == r).unwrap();
        let n = 100_000;
        let heads = (0..n).filter(|_| sampler.corrupt(&pos, &mut rng).slot == Slot::Head).count();
        let rate = heads as f64 / n as f64;
        assert!((rate - expected).abs() < 0.02, "relation {r}: {rate} vs {expected}");
    }
}

#[test]
fn corrupted_triples_avoid_known_positives() {
    // Every head is known for tail 0; of the tails only 4 is free.
    let mut train: Vec<IdTriple> = (0..4).map(|t| [0, 0, t]).collect();
    train.extend((1..5).map(|h| [h, 0, 0]));
    let sampler = BernoulliSampler::new(&train, 5, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tails: Vec<_> = sampler.sample(&[0, 0, 0], 200, &mut rng).into_iter().filter(|s| s.slot == Slot::Tail).collect();
    assert!(!tails.is_empty());
    assert!(tails.iter().all(|s| s.corrupted == [0, 0, 4]));
}

fn random_graph() -> impl Strategy<Value = Vec<IdTriple>> {
    (5u32..60, 1u32..8, 20usize..400).prop_flat_map(|(ne, nr, n)| prop::collection::vec((0..ne, 0..nr, 0..ne), n))
        .prop_map(|v| {
            let mut t: Vec<IdTriple> = v.into_iter().map(|(h, r, t)| [h, r, t]).collect();
            t.sort_unstable();
            t.dedup();
            t
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn split_keeps_held_out_vocabulary_in_train(triples in random_graph(), seed in any::<u64>()) {
        let s = split(&triples, &SplitSpec { seed, ..Default::default() });
        prop_assert_eq!(s.train.len() + s.valid.len() + s.test.len(), triples.len());
        let ents: HashSet<u32> = s.train.iter().flat_map(|t| [t[0], t[2]]).collect();
        let rels: HashSet<u32> = s.train.iter().map(|t| t[1]).collect();
        for t in s.valid.iter().chain(&s.test) {
            prop_assert!(ents.contains(&t[0]) && ents.contains(&t[2]) && rels.contains(&t[1]));
        }
        let all: HashSet<IdTriple> = s.train.iter().chain(&s.valid).chain(&s.test).copied().collect();
        prop_assert_eq!(all.len(), triples.len());
    }
}
