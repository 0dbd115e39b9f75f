//! Acceptance suite: one pass/fail line per criterion on stderr, then a
//! single assertion over all of them.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use aggft::baseline::{
    baseline_network, default_step_cap, eavesdrop, run_baseline_round, BaselineOutcome, BaselineParams, StuckReason,
};
use aggft::game::adversary::{coin_flip, sum_only};
use aggft::game::attacks::{attack_he_dc_plus_neighbor, attack_masking_dc_plus_neighbor};
use aggft::game::fuzz::{invalid_variant, MUTATIONS};
use aggft::game::{check_setup, empirical_unlinkability, trial_seed, Corruption, GameSetup};
use aggft::masking::{self, MaskShare, MaskingParams, Modulus};
use aggft::net::MessageKind;
use aggft::model::fixtures::{five_sm_scenario, four_sm_scenario};
use aggft::model::{BackendKind, Edge, FailureGraph, PartyId, ProtocolMessage, RoundOutcome, Scenario, SendingList};
use aggft::paillier::{self, keygen, PaillierKeys};
use aggft::protocol::{classify_steps, network_for, run_round, run_scenario, step_cap, MaskingBackend, PaillierBackend, ProofCase};
use common::{predict, random_scenario, HE, MASK};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const DC: PartyId = PartyId::Dc;
fn sm(i: u32) -> PartyId {
    PartyId::Sm(i)
}

const RANDOM_SCENARIOS: u64 = 10_000;

fn shared_keys() -> &'static PaillierKeys {
    static KEYS: std::sync::OnceLock<PaillierKeys> = std::sync::OnceLock::new();
    KEYS.get_or_init(|| keygen(256, 0xacce97))
}

/// Runs a scenario with masking, or with Paillier under the shared key.
fn run_with(s: &Scenario) -> RoundOutcome {
    let valid = s.clone().validate().expect("generated scenarios are valid");
    let mut net = network_for(&valid);
    match s.backend {
        BackendKind::Masking { .. } => run_round(&valid, &MaskingBackend::new(&valid).unwrap(), &mut net),
        BackendKind::Paillier { .. } => {
            run_round(&valid, &PaillierBackend::with_keys(&valid, shared_keys().clone()), &mut net)
        }
    }
    .expect("rounds never fail on valid scenarios")
}

fn with_backend(mut s: Scenario, b: BackendKind) -> Scenario {
    s.backend = b;
    s
}

fn criterion_1() {
    let out = run_scenario(four_sm_scenario(MASK)).unwrap();
    assert_eq!(out.remaining_at_init, [1, 3]);
    assert_eq!(out.active, [1, 3]);
    assert_eq!(out.reported_active, [1, 3]);
    assert_eq!(out.eor_sender, Some(sm(3)));
    assert_eq!(out.aggregate, Some(10 + 20));

    let valid = four_sm_scenario(MASK).validate().unwrap();
    let params = BaselineParams::for_scenario(&valid);
    let base = run_baseline_round(&valid, &params, &mut baseline_network(&valid), default_step_cap(4)).unwrap();
    match base {
        BaselineOutcome::Stuck { reason, run } => {
            assert_eq!(reason, StuckReason::NoInstruction { holder: 4 });
            assert_eq!(run.active, [1, 3, 4]);
        }
        other => panic!("baseline should be stuck, got {}", other.status()),
    }
}

fn criterion_2() {
    let out = run_scenario(five_sm_scenario(MASK)).unwrap();
    assert_eq!(out.remaining_at_init, [1, 3, 4, 5]);
    assert_eq!(out.active, [1, 3, 5]);
    assert_eq!(out.eor_sender, Some(sm(5)));
    let cases = classify_steps(&out).unwrap();
    assert_eq!(cases, [ProofCase::C2, ProofCase::C3_2, ProofCase::C2, ProofCase::C1]);
    assert_eq!(out.message_steps(), 8);
    assert_eq!(out.aggregate, Some(3 + 5 + 7));

    let initial: Vec<_> = out
        .trace
        .iter()
        .filter(|r| matches!(r.message, ProtocolMessage::InitialData { .. }))
        .map(|r| (r.from, r.delivered, r.step))
        .collect();
    assert_eq!(
        initial,
        [(sm(1), true, 1), (sm(2), false, 1), (sm(3), true, 1), (sm(4), true, 1), (sm(5), true, 1)]
    );
    let rest: Vec<_> = out
        .trace
        .iter()
        .filter(|r| !matches!(r.message, ProtocolMessage::InitialData { .. }))
        .map(|r| (r.message.kind(), r.from, r.to, r.delivered))
        .collect();
    assert_eq!(
        rest,
        [
            ("activation", DC, sm(1), true),
            ("activation", sm(1), sm(3), true),
            ("ack_s", sm(3), sm(1), true),
            ("activation", sm(3), sm(4), false),
            ("activation", sm(3), sm(5), true),
            ("ack_s", sm(5), sm(3), true),
            ("end_of_round", sm(5), DC, true),
        ]
    );
}

fn check_invariants(s: &Scenario, out: &RoundOutcome) {
    assert!(out.terminated);
    assert!(out.steps <= step_cap(s.n_sm), "{} steps for N = {}", out.steps, s.n_sm);
    let receivers = out.activation_receivers();
    let mut seen = receivers.clone();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), receivers.len(), "double activation: {receivers:?}");
    let active: Vec<_> = out.active.iter().map(|&i| sm(i)).collect();
    assert_eq!(receivers, active);
    if let Some(from) = out.eor_sender {
        assert!(!from.is_dc());
    }
    if !out.active.is_empty() {
        assert!(out.eor_sender.is_some());
        let last = *out.active.last().unwrap();
        assert_eq!(out.eor_sender, Some(sm(last)));
    }
    if out.aggregate.is_some() {
        assert_eq!(out.reported_active, out.active);
    }
}

fn random_batch(backend: BackendKind) -> impl Iterator<Item = Scenario> {
    (0..RANDOM_SCENARIOS).map(move |seed| random_scenario(seed, 12, backend))
}

fn criterion_3() {
    for backend in [MASK, HE] {
        for s in random_batch(backend) {
            let out = run_with(&s);
            check_invariants(&s, &out);
            classify_steps(&out).expect("well-formed trace");
        }
    }
}

fn criterion_4() {
    for backend in [MASK, HE] {
        for s in random_batch(backend) {
            let out = run_with(&s);
            let p = predict(&s);
            assert_eq!(out.remaining_at_init, p.responders, "{s:?}");
            assert_eq!(out.active, p.active, "{s:?}");
            assert_eq!(out.aggregate, p.aggregate, "{s:?}");
        }
    }
}

fn strip_payload(out: &RoundOutcome) -> Vec<(PartyId, PartyId, bool, &'static str, Vec<u32>)> {
    out.trace
        .iter()
        .map(|r| {
            let lists = match &r.message {
                ProtocolMessage::Activation { remaining, active, .. } => {
                    remaining.iter().chain([&0]).chain(active.iter()).copied().collect()
                }
                ProtocolMessage::EndOfRound { active, .. } => active.clone(),
                _ => vec![],
            };
            (r.from, r.to, r.delivered, r.message.kind(), lists)
        })
        .collect()
}

fn criterion_5() {
    for seed in 0..1000 {
        let s = random_scenario(seed, 12, MASK);
        let a = run_with(&s);
        let b = run_with(&with_backend(s, HE));
        assert_eq!(a.active, b.active);
        assert_eq!(a.aggregate, b.aggregate);
        assert_eq!(strip_payload(&a), strip_payload(&b));
        assert_eq!(a.elapsed, b.elapsed);
    }
}

fn criterion_6() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (mut non_initial, mut meters) = (0usize, 0usize);
    for _ in 0..100 {
        let n = rng.random_range(1..=12);
        let mut s = random_scenario(rng.random(), 12, MASK);
        s.n_sm = n;
        s.graph = FailureGraph::complete(n);
        s.sending_list = SendingList::new((1..=n).collect());
        s.measurements = (1..=n).map(|i| (i, u64::from(i))).collect();
        s.sm_online.clear();
        s.n_min = rng.random_range(1..=n);
        let out = run_with(&s);
        let [initial, act, ack, eor] = out.counts_by_kind();
        assert_eq!(initial, n as usize);
        assert_eq!((act, ack, eor), (n as usize, n as usize - 1, 1));
        non_initial += act + ack + eor;
        meters += n as usize;
    }
    assert_eq!(non_initial, 2 * meters, "average of exactly two extra messages per meter");

    for s in random_batch(MASK) {
        let out = run_with(&s);
        assert!(
            out.elapsed <= 4 * u64::from(s.n_sm) * s.delta_t,
            "elapsed {} > 4·{}·{}",
            out.elapsed,
            s.n_sm,
            s.delta_t
        );
    }
}

fn criterion_7() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let bits = rng.random_range(24..=64);
        let k = Modulus::from_bits(bits).unwrap();
        let n = rng.random_range(1..=12u32);
        let ms: Vec<u64> = (0..n).map(|_| rng.random_range(0..1 << 20)).collect();
        let params = MaskingParams::derive(n, k, rng.random(), &BTreeMap::new());
        let t = rng.random();
        let (s0, mut sum) = masking::init_share(&params);
        let (mut masked, mut prfs) = (BTreeMap::new(), BTreeMap::new());
        for (i, &m) in (1..=n).zip(&ms) {
            let s_i = MaskShare::new(k.sample(&mut rng), k).unwrap();
            let p = masking::prf(&params.keys[&i], t, k);
            masked.insert(i, masking::mask(m, s_i, p, k).unwrap());
            prfs.insert(i, p);
            sum = masking::update_share(sum, s_i, k);
        }
        let a = masking::unmask_aggregate(sum, s0, &masked, &prfs, k).unwrap();
        assert_eq!(u128::from(a), ms.iter().map(|&m| u128::from(m)).sum::<u128>() % k.value());
    }

    let keys = shared_keys();
    let pk = &keys.public;
    let below_n = |rng: &mut ChaCha20Rng| {
        let mut b = [0u8; 32];
        rng.fill(&mut b);
        BigUint::from_bytes_be(&b) % pk.n()
    };
    for _ in 0..1000 {
        let m = below_n(&mut rng);
        let c = paillier::encrypt_with_rng(pk, &m, &mut rng).unwrap();
        assert_eq!(paillier::decrypt_aggregate(keys, &c).unwrap(), m);
    }
    for _ in 0..1000 {
        let (a, b) = (below_n(&mut rng), below_n(&mut rng));
        let ca = paillier::encrypt_with_rng(pk, &a, &mut rng).unwrap();
        let cb = paillier::encrypt_with_rng(pk, &b, &mut rng).unwrap();
        let sum = paillier::decrypt_aggregate(keys, &paillier::add_encrypted(pk, &ca, &cb)).unwrap();
        assert_eq!(sum, (a + b) % pk.n());
    }
}

/// A complete network where the DC and the meter after `i*` collude and
/// `L` starts with `i*`.
fn attack_setup(rng: &mut ChaCha20Rng, backend: BackendKind) -> GameSetup {
    let n = rng.random_range(3..=8);
    let mut s = GameSetup::complete(n, backend);
    let mut order: Vec<u32> = (1..=n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    let (i, j, k) = (order[0], order[2], order[1]);
    s.challenged = [i, j];
    s.sending_list = std::iter::once(DC).chain(order.iter().map(|&x| sm(x))).chain([DC]).collect();
    s.corruption = Corruption { dc: true, sms: [k].into() };
    s.m0 = rng.random_range(0..1000);
    s.m1 = rng.random_range(0..1000);
    s.mlist = (1..=n)
        .filter(|x| *x != i && *x != j)
        .map(|x| (sm(x), rng.random_range(0..1000)))
        .collect();
    s.seed = rng.random();
    s
}

fn criterion_8() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    for backend in [MASK, HE] {
        let mut exact = 0;
        for _ in 0..100 {
            let s = attack_setup(&mut rng, backend);
            let r = match backend {
                BackendKind::Masking { .. } => attack_masking_dc_plus_neighbor(&s),
                BackendKind::Paillier { .. } => attack_he_dc_plus_neighbor(&s),
            }
            .unwrap();
            exact += usize::from(r.recovered == r.actual);
        }
        assert_eq!(exact, 100, "{} attack recovered {exact}/100", backend.name());
    }

    let coin = empirical_unlinkability(&GameSetup::complete(5, MASK), coin_flip, 2000, 81).unwrap();
    let mut he_dc = GameSetup::complete(5, HE);
    he_dc.corruption.dc = true;
    let sum = empirical_unlinkability(&he_dc, sum_only, 2000, 82).unwrap();
    for (name, r) in [("coin-flip", coin), ("sum-only", sum)] {
        assert_eq!(r.aborts, 0, "{name}");
        assert!((0.45..=0.55).contains(&r.rate), "{name}: {r:?}");
        assert!(r.contains(0.5), "{name}: {r:?}");
    }

    let mut fuzzed = 0;
    for t in 0..1000 {
        let base = attack_setup(&mut rng, MASK).with_seed(trial_seed(88, t));
        assert!(check_setup(&base).is_ok());
        let bad = invalid_variant(&base, t % MUTATIONS, &mut rng);
        assert!(check_setup(&bad).is_err(), "accepted {bad:?}");
        fuzzed += 1;
    }
    assert_eq!(fuzzed, 1000);
}

fn criterion_9() {
    let run = |s: Scenario| {
        let v = s.validate().unwrap();
        let p = BaselineParams::for_scenario(&v);
        run_baseline_round(&v, &p, &mut baseline_network(&v), default_step_cap(v.n_sm)).unwrap()
    };
    let complete = |n: u32| {
        let mut s = five_sm_scenario(MASK);
        s.n_sm = n;
        s.graph = FailureGraph::complete(n);
        s.sending_list = SendingList::new((1..=n).collect());
        s.measurements = (1..=n).map(|i| (i, 100 + u64::from(i))).collect();
        s
    };
    let done = run(complete(5));
    assert_eq!(done.aggregate(), Some(101 + 102 + 103 + 104 + 105));
    assert_eq!(done, run(complete(5)));

    assert_eq!(run(four_sm_scenario(MASK)).status(), "stuck");

    let mut mid = complete(5);
    let off = Edge::new(sm(3), DC).unwrap();
    let working: Vec<_> = mid.graph.working().iter().filter(|&&e| e != off).map(|e| e.endpoints()).collect();
    mid.graph = mid.graph.with_working(working).unwrap();
    assert_eq!(run(mid.clone()).status(), "detected_inconsistency");
    assert_eq!(run(mid.clone()), run(mid.clone()));
    assert_eq!(run_scenario(mid).unwrap().aggregate, Some(101 + 102 + 104 + 105));

    // Same meter, two rounds: the eavesdropper's difference is m_t - m_t'.
    let k = Modulus::from_bits(32).unwrap();
    let mut seen = Vec::new();
    for (round, m) in [(7u64, 1234u64), (8, 987)] {
        let mut s = complete(4);
        s.round = round;
        s.measurements.insert(2, m);
        let v = s.validate().unwrap();
        let p = BaselineParams::for_scenario(&v);
        let out = run_baseline_round(&v, &p, &mut baseline_network(&v), default_step_cap(4)).unwrap();
        seen.push(eavesdrop(&out.run().trace, 2, k).unwrap());
    }
    assert_eq!(k.sub(seen[0], seen[1]), 1234 - 987);
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn(),
}

#[test]
fn acceptance_criteria() {
    let criteria = [
        Criterion { id: 1, name: "four-meter network: new protocol completes, baseline stuck", limit: Some(Duration::from_secs(1)), run: criterion_1 },
        Criterion { id: 2, name: "five-meter network: skip of SM4 and 8 message steps", limit: Some(Duration::from_secs(1)), run: criterion_2 },
        Criterion { id: 3, name: "termination and activation invariants on 10,000 random scenarios", limit: Some(Duration::from_secs(60)), run: criterion_3 },
        Criterion { id: 4, name: "aggregates match the reference walker", limit: None, run: criterion_4 },
        Criterion { id: 5, name: "masking and Paillier agree on 1,000 scenarios", limit: None, run: criterion_5 },
        Criterion { id: 6, name: "two extra messages per meter, elapsed <= 4 N dt", limit: None, run: criterion_6 },
        Criterion { id: 7, name: "masking cancellation and Paillier laws", limit: Some(Duration::from_secs(120)), run: criterion_7 },
        Criterion { id: 8, name: "privacy games, attacks and challenger checks", limit: Some(Duration::from_secs(300)), run: criterion_8 },
        Criterion { id: 9, name: "baseline outcomes and eavesdropper leak", limit: None, run: criterion_9 },
    ];
    shared_keys();
    let mut failures = Vec::new();
    let mut err = std::io::stderr();
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run));
        let took = start.elapsed();
        let verdict = match (&result, c.limit) {
            (Err(_), _) => "FAIL",
            (Ok(()), Some(limit)) if took > limit => "FAIL (too slow)",
            (Ok(()), _) => "PASS",
        };
        writeln!(err, "acceptance {}: {verdict} in {:.2?}: {}", c.id, took, c.name).unwrap();
        if verdict != "PASS" {
            failures.push(c.id);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
