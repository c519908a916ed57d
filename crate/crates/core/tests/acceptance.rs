//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the test harness so the lines always show.

mod common;

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;
use std::time::{Duration, Instant};

use ipredict::decoder::{beam_search, constrained_search, LengthNormalization, SearchConfig};
use ipredict::metrics::{
    bleu, character_ter, damerau_levenshtein, ksmr, meteor_lite, InteractionTrace, KsmrConvention,
};
use ipredict::scorers::{NgramConfig, NgramScorer, RandomScorer, Scorer};
use ipredict::seqcore::{
    split_prefix, FeedbackSignal, PrefixConstraint, SourceContext, TokenId, VocabEntry, Vocabulary,
};
use ipredict::simulator::{run_experiment, simulate_session, LatencyStats, SimulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    let started = Instant::now();
    let (pass, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(p) => (
            false,
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()),
        ),
    };
    let o = Outcome {
        name,
        pass,
        detail: format!("{detail} [{:.1}s]", started.elapsed().as_secs_f64()),
    };
    println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    o
}

fn prefix_compliance() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alphabet: Vec<char> = "abcdé z".chars().collect();
    let mut failures = Vec::new();
    let trials = 1000;
    for trial in 0..trials {
        let n_words = rng.random_range(3..=12);
        let words = common::word_list(n_words, &mut rng);
        // short words over a small alphabet so fragments often match several
        let words: Vec<String> = words.iter().map(|w| w[..w.len().min(3)].replace(['x', 'y'], "a")).collect();
        let mut uniq = words.clone();
        uniq.sort();
        uniq.dedup();
        let vocab = Arc::new(Vocabulary::from_words(uniq.iter().map(String::as_str)).unwrap());
        let scorer: Box<dyn Scorer> = if trial % 4 == 3 {
            let pairs: Vec<(String, String)> = (0..5)
                .map(|_| {
                    let t: Vec<&str> = (0..rng.random_range(1..5))
                        .map(|_| uniq[rng.random_range(0..uniq.len())].as_str())
                        .collect();
                    ("s t".to_owned(), t.join(" "))
                })
                .collect();
            Box::new(NgramScorer::train(Arc::clone(&vocab), pairs, NgramConfig::default()).unwrap())
        } else {
            Box::new(RandomScorer::new(Arc::clone(&vocab), rng.random()))
        };
        let source = SourceContext::text("s t");
        let cfg = SearchConfig {
            beam_size: rng.random_range(1..=6),
            max_length: rng.random_range(1..=10),
            ..Default::default()
        };
        let hyp = beam_search(&*scorer, &source, &cfg).unwrap().render(&vocab).unwrap();

        // either a correction of the actual output or an arbitrary typed prefix
        let constraint = match trial % 3 {
            0 => {
                let len = hyp.chars().count();
                let pos = rng.random_range(0..=len);
                if rng.random_bool(0.1) {
                    split_prefix(&hyp, &FeedbackSignal::end_of_text(pos), &vocab).unwrap()
                } else {
                    let c = alphabet[rng.random_range(0..alphabet.len())];
                    split_prefix(&hyp, &FeedbackSignal::char(pos, c), &vocab).unwrap()
                }
            }
            _ => {
                let len = rng.random_range(0..12);
                let typed: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
                PrefixConstraint::from_validated(&typed, &vocab)
            }
        };
        let out = constrained_search(&*scorer, &source, &constraint, &cfg)
            .map_err(|e| format!("trial {trial}: {e}"))?
            .render(&vocab)
            .unwrap();
        let ok = if constraint.is_closed() {
            out == constraint.as_str()
        } else {
            out.starts_with(constraint.as_str())
        };
        if !ok {
            failures.push(format!("trial {trial}: {:?} !^ {:?}", out, constraint.as_str()));
        }
    }
    if failures.is_empty() {
        Ok(format!("{trials}/{trials} outputs start with their constraint"))
    } else {
        Err(format!("{} violations, first: {}", failures.len(), failures[0]))
    }
}

/// Every terminated sequence up to `max_len` tokens, best by score with
/// ties to the lexicographically smaller id sequence.
fn brute_force(scorer: &dyn Scorer, src: &SourceContext, max_len: usize) -> (Vec<TokenId>, f64) {
    let eos = scorer.vocab().eos();
    let mut best: Option<(Vec<TokenId>, f64)> = None;
    let mut stack = vec![(scorer.init_state(src).unwrap(), Vec::<TokenId>::new(), 0.0f64)];
    while let Some((state, seq, score)) = stack.pop() {
        if seq.len() == max_len {
            continue;
        }
        let lp = scorer.next_distribution(&state).unwrap();
        for (i, &l) in lp.iter().enumerate() {
            let t = TokenId(i as u32);
            let mut s = seq.clone();
            s.push(t);
            let total = score + l;
            if t == eos {
                let better = match &best {
                    None => true,
                    Some((bs, bv)) => total > *bv || (total == *bv && s < *bs),
                };
                if better {
                    best = Some((s, total));
                }
            } else {
                stack.push((scorer.advance(&state, t).unwrap(), s, total));
            }
        }
    }
    best.unwrap()
}

fn exhaustive_equivalence() -> Result<String, String> {
    let mut instances = 0;
    for size in 3..=5usize {
        let mut entries = vec![VocabEntry::Eos, VocabEntry::Unk];
        entries.extend((0..size - 2).map(|i| VocabEntry::Word(format!("w{i}"))));
        let vocab = Arc::new(Vocabulary::from_entries(entries).unwrap());
        for max_len in 1..=4usize {
            for seed in 0..5u64 {
                let scorer = RandomScorer::new(Arc::clone(&vocab), seed * 31 + size as u64);
                let src = SourceContext::text("x");
                let cfg = SearchConfig {
                    beam_size: size.pow(max_len as u32),
                    max_length: max_len,
                    ..Default::default()
                };
                let hyp = beam_search(&scorer, &src, &cfg).unwrap();
                let (seq, score) = brute_force(&scorer, &src, max_len);
                if hyp.tokens.ids() != seq.as_slice() || hyp.log_prob != score {
                    return Err(format!(
                        "|V|={size} L={max_len} seed={seed}: beam {:?} ({}) vs oracle {:?} ({score})",
                        hyp.tokens.ids(),
                        hyp.log_prob,
                        seq
                    ));
                }
                instances += 1;
            }
        }
    }
    Ok(format!("{instances} instances (|V| 3..=5, L 1..=4, 5 scorers each) match exactly"))
}

fn simulation_convergence() -> Result<String, String> {
    let data = common::synthetic(200, 60, 11);
    let ds = common::text_dataset(&data.pairs);
    let vocab = Arc::new(Vocabulary::from_words(data.lexicon.iter().map(String::as_str)).unwrap());
    let scorer = NgramScorer::train(vocab, data.pairs.iter().cloned(), NgramConfig::default()).unwrap();
    // unnormalized scores favour the empty output under this model
    let cfg = SimulationConfig {
        search: SearchConfig {
            length_normalization: LengthNormalization::DivideByLength,
            ..Default::default()
        },
        ..Default::default()
    };
    let report = run_experiment(&ds, &scorer, &cfg).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    for s in &report.samples {
        if !s.converged || s.keystrokes > s.reference_characters {
            bad.push(format!(
                "{}: converged={} keystrokes={} chars={}",
                s.id, s.converged, s.keystrokes, s.reference_characters
            ));
        }
    }
    // re-check convergence character-exactly on the trace itself
    for (s, sample) in report.samples.iter().zip(&ds.samples).take(20) {
        let sim = simulate_session(&scorer, &sample.source, &sample.references[0], &cfg)
            .map_err(|e| e.to_string())?;
        let last = sim.hypotheses.last().unwrap_or(&sim.initial_hypothesis);
        if last != &sample.references[0] || sim.trace.keystrokes() != s.keystrokes {
            bad.push(format!("{}: replay ended at {last:?}", s.id));
        }
    }
    if bad.is_empty() {
        Ok(format!(
            "{}/{} converged, {} keystrokes for {} reference chars, KSMR {:.2}, static CharacTER {:.2}",
            report.converged,
            report.samples.len(),
            report.effort.keystrokes,
            report.reference_characters,
            report.effort.ksmr,
            report.effort.character_ter
        ))
    } else {
        Err(format!("{} bad samples, first: {}", bad.len(), bad[0]))
    }
}

fn effort_halving() -> Result<String, String> {
    let (scorer, ds) = common::nbest_corpus(100, 5);
    let report = run_experiment(&ds, &scorer, &SimulationConfig::default()).map_err(|e| e.to_string())?;
    let n = report.samples.len() as f64;
    let keys = report.effort.keystrokes as f64 / n;
    let edits = report.static_edit_operations as f64 / n;
    let ratio = keys / edits;
    let detail = format!("mean keystrokes {keys:.2} vs mean static edit operations {edits:.2} (ratio {ratio:.3}, limit 0.5)");
    if ratio <= 0.5 && report.converged == ds.samples.len() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn caption_regression() -> Result<String, String> {
    let scorer = common::caption_scorer();
    let sim = simulate_session(&scorer, &common::caption_source(), common::CAPTION_FINAL, &SimulationConfig::default())
        .map_err(|e| e.to_string())?;
    if sim.initial_hypothesis != common::CAPTION_INITIAL {
        return Err(format!("initial caption {:?}", sim.initial_hypothesis));
    }
    let typed: Vec<char> = sim
        .trace
        .events
        .iter()
        .filter_map(|e| match e.correction {
            ipredict::seqcore::Correction::Char(c) => Some(c),
            ipredict::seqcore::Correction::EndOfText => None,
        })
        .collect();
    if typed != ['b', 'u', 'n'] || sim.trace.events.len() != 3 {
        return Err(format!("corrections {typed:?}"));
    }
    let expected_prefixes = [
        "A group of people sit on a b",
        "A group of people sit on a bench u",
        "A group of people sit on a bench under an",
    ];
    for (h, p) in sim.hypotheses.iter().zip(expected_prefixes) {
        if !h.starts_with(p) {
            return Err(format!("{h:?} does not extend {p:?}"));
        }
    }
    if sim.hypotheses.last().map(String::as_str) != Some(common::CAPTION_FINAL) || !sim.trace.accepted {
        return Err(format!("final {:?}", sim.hypotheses.last()));
    }
    let a: Vec<char> = common::CAPTION_INITIAL.chars().collect();
    let b: Vec<char> = common::CAPTION_FINAL.chars().collect();
    let ops = damerau_levenshtein(&a, &b);
    // a script of exactly 4 deletions and 23 insertions: drop "ramp", add the rest
    let stem = "A group of people sit on a ";
    let deleted = common::CAPTION_INITIAL.strip_prefix(stem).and_then(|s| s.strip_suffix('.'));
    let inserted = common::CAPTION_FINAL.strip_prefix(stem).and_then(|s| s.strip_suffix('.'));
    let script_ok = deleted.map(|s| s.chars().count()) == Some(4) && inserted.map(|s| s.chars().count()) == Some(23);
    if ops > 27 || !script_ok {
        return Err(format!("static edit distance {ops}"));
    }
    let k = ksmr(&sim.trace, KsmrConvention::default()).unwrap();
    Ok(format!(
        "corrections b,u,n at {:?}; static DL distance {ops} <= 4 del + 23 ins; KSMR {k:.2} (7 actions / 51 chars)",
        sim.trace.events.iter().map(|e| e.position).collect::<Vec<_>>()
    ))
}

fn edit_oracle(alphabet: &[u8], max_len: usize) -> Result<usize, String> {
    let mut strings: Vec<Vec<u8>> = vec![Vec::new()];
    let mut layer = strings.clone();
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| alphabet.iter().map(move |&c| [s.as_slice(), &[c]].concat()))
            .collect();
        strings.extend(layer.iter().cloned());
    }
    let bound = max_len + 2;
    let mut pairs = 0;
    for a in &strings {
        // breadth-first search over single edits from `a`
        let mut dist: HashMap<Vec<u8>, usize> = HashMap::from([(a.clone(), 0)]);
        let mut queue = VecDeque::from([a.clone()]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            let mut next = Vec::new();
            for i in 0..s.len() {
                let mut t = s.clone();
                t.remove(i);
                next.push(t);
                for &c in alphabet {
                    let mut t = s.clone();
                    t[i] = c;
                    next.push(t);
                }
                if i + 1 < s.len() {
                    let mut t = s.clone();
                    t.swap(i, i + 1);
                    next.push(t);
                }
            }
            if s.len() < bound {
                for i in 0..=s.len() {
                    for &c in alphabet {
                        let mut t = s.clone();
                        t.insert(i, c);
                        next.push(t);
                    }
                }
            }
            for t in next {
                dist.entry(t.clone()).or_insert_with(|| {
                    queue.push_back(t);
                    d + 1
                });
            }
        }
        for b in &strings {
            let got = damerau_levenshtein(a, b);
            if got != dist[b] {
                return Err(format!("{a:?} -> {b:?}: {got} vs oracle {}", dist[b]));
            }
            pairs += 1;
        }
    }
    Ok(pairs)
}

fn metric_oracles() -> Result<String, String> {
    let close = |name: &str, got: f64, want: f64| {
        if (got - want).abs() <= 0.05 {
            Ok(())
        } else {
            Err(format!("{name}: {got} vs {want}"))
        }
    };
    let r = |s: &str| vec![vec![s.to_owned()]];
    close("bleu identity", bleu(&["the cat sat on the mat"], &r("the cat sat on the mat")).unwrap(), 100.0)?;
    close("bleu no bigram", bleu(&["the the the the"], &r("the cat")).unwrap(), 0.0)?;
    close("bleu brevity", bleu(&["a b c d"], &r("a b c d e")).unwrap(), 100.0 * (-0.25f64).exp())?;
    close("bleu brevity hand", bleu(&["a b c d"], &r("a b c d e")).unwrap(), 77.9)?;

    let m = 6.0f64;
    close(
        "meteor identity",
        meteor_lite("the cat sat on the mat", &["the cat sat on the mat"]),
        100.0 * (1.0 - 0.5 / (m * m * m)),
    )?;
    close("meteor disjoint", meteor_lite("x y", &["a b"]), 0.0)?;
    close("meteor scrambled", meteor_lite("a c b", &["a b c"]), 50.0)?;

    close("character identity", character_ter("abc", "abc"), 0.0)?;
    close("character swap", character_ter("acb", "abc"), 33.3)?;
    close("character empty", character_ter("", "abc"), 100.0)?;

    let trace = |events: &[FeedbackSignal], len: usize| {
        let mut t = InteractionTrace::new();
        for e in events {
            t.record(e);
        }
        t.accept("x".repeat(len));
        t
    };
    let conv = KsmrConvention::default();
    close("ksmr acceptance only", ksmr(&trace(&[], 20), conv).unwrap(), 5.0)?;
    let scattered = [FeedbackSignal::char(1, 'a'), FeedbackSignal::char(10, 'b'), FeedbackSignal::char(20, 'c')];
    close("ksmr scattered", ksmr(&trace(&scattered, 30), conv).unwrap(), 23.3)?;
    let adjacent = [FeedbackSignal::char(3, 'a'), FeedbackSignal::char(4, 'b')];
    close("ksmr contiguous", ksmr(&trace(&adjacent, 10), conv).unwrap(), 40.0)?;

    let pairs = edit_oracle(b"abc", 4)?;
    Ok(format!("16 hand values within 0.05; Damerau-Levenshtein equals edit-script search on {pairs} pairs"))
}

fn latency() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lexicon = common::word_list(9_997, &mut rng);
    let vocab = Arc::new(Vocabulary::from_words(lexicon.iter().map(String::as_str)).unwrap());
    assert_eq!(vocab.len(), 10_000);
    let data = common::synthetic(3_000, 9_997, 21);
    let index: HashMap<&str, usize> = data.lexicon.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let pairs: Vec<(String, String)> = data
        .pairs
        .iter()
        .map(|(s, t)| {
            let mapped: Vec<&str> = t.split(' ').map(|w| lexicon[index[w]].as_str()).collect();
            (s.clone(), mapped.join(" "))
        })
        .collect();
    let scorer = NgramScorer::train(Arc::clone(&vocab), pairs.iter().cloned(), NgramConfig::default()).unwrap();
    let cfg = SimulationConfig {
        search: SearchConfig {
            beam_size: 6,
            max_length: 64,
            length_normalization: LengthNormalization::DivideByLength,
        },
        ..Default::default()
    };
    let mut latencies: Vec<Duration> = Vec::new();
    for (s, t) in pairs.iter().take(40) {
        let sim = simulate_session(&scorer, &SourceContext::text(s.clone()), t, &cfg).map_err(|e| e.to_string())?;
        latencies.extend(sim.latencies);
    }
    let stats = LatencyStats::from_durations(&latencies).ok_or("no interactions")?;
    let detail = format!(
        "{} constrained searches, p50 {:.1} ms, p90 {:.1} ms, p99 {:.1} ms, max {:.1} ms (limit p99 < 200 ms)",
        stats.calls, stats.p50_ms, stats.p90_ms, stats.p99_ms, stats.max_ms
    );
    if stats.p99_ms < 200.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    println!("acceptance criteria");
    let results = [
        check("prefix compliance (1000 randomized trials)", prefix_compliance),
        check("exhaustive equivalence (|V|<=5, L<=4)", exhaustive_equivalence),
        check("simulation convergence and bound (200-sample n-gram corpus)", simulation_convergence),
        check("effort halving (reference in 5-best at rank <= 3)", effort_halving),
        check("captioning example regression", caption_regression),
        check("metric oracles", metric_oracles),
        check("latency (10k vocab, n-gram, beam 6, max_length 64)", latency),
    ];
    let failed: Vec<&str> = results.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        for o in results.iter().filter(|o| !o.pass) {
            eprintln!("failed: {} ({})", o.name, o.detail);
        }
        std::process::exit(1);
    }
}
