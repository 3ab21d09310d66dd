use std::collections::BTreeSet;
use std::io::{BufReader, Cursor};
use std::path::PathBuf;
use std::time::Duration;

use jsonmask::compiler::{compile, CompileOptions, ConstraintAutomaton, MatcherState, SyntaxMode};
use jsonmask::json::parse_json;
use jsonmask::schema::{normalize, parse_schema, validate_instance};
use jsonmask::token::adapter::serve;
use jsonmask::token::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn automaton(text: &str) -> ConstraintAutomaton {
    let ir = normalize(&parse_schema(text.as_bytes()).unwrap()).unwrap();
    compile(&ir, &CompileOptions::default()).automaton().unwrap()
}

fn bytes_vocab() -> (Vocabulary, TokenTrie) {
    let v = Vocabulary::load(&data("vocab/bytes.json")).unwrap();
    let t = TokenTrie::new(&v);
    (v, t)
}

fn bpe_vocab() -> (Vocabulary, TokenTrie) {
    let v = Vocabulary::load(&data("vocab/bpe-1000.json")).unwrap();
    let t = TokenTrie::new(&v);
    (v, t)
}

/// Mask computed by trying every token separately.
fn oracle_mask(a: &ConstraintAutomaton, s: &MatcherState, v: &Vocabulary) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for (id, bytes) in v.iter() {
        let ok = if id == v.eos_id() { s.can_terminate(a) } else { s.advanced(a, bytes).is_ok() };
        if ok {
            out.insert(id);
        }
    }
    out
}

fn ids(bytes: &[u8]) -> BTreeSet<u32> {
    bytes.iter().map(|&b| u32::from(b)).collect()
}

const WS: &[u8] = b" \t\n\r";

#[test]
fn fixtures_load() {
    let (v, _) = bytes_vocab();
    assert_eq!(v.len(), 257);
    assert_eq!(v, Vocabulary::bytes());
    let (bpe, trie) = bpe_vocab();
    assert_eq!(bpe.len(), 1000);
    // Independent count: distinct non-empty prefixes plus the root.
    let mut prefixes = BTreeSet::new();
    for (_, t) in bpe.iter() {
        for i in 1..=t.len() {
            prefixes.insert(t[..i].to_vec());
        }
    }
    assert_eq!(trie.len(), prefixes.len() + 1);
}

#[test]
fn boolean_masks() {
    let (v, trie) = bytes_vocab();
    let a = automaton(r#"{"type":"boolean"}"#);
    let s = MatcherState::new(&a, SyntaxMode::Lenient);
    let m: BTreeSet<u32> = compute_mask(&a, &s, &trie, &v).iter().collect();
    assert_eq!(m, oracle_mask(&a, &s, &v));
    assert_eq!(m, ids(b"tf").union(&ids(WS)).copied().collect());
    let done = s.advanced(&a, b"true").unwrap();
    let m: BTreeSet<u32> = compute_mask(&a, &done, &trie, &v).iter().collect();
    let mut expected = ids(WS);
    expected.insert(256);
    assert_eq!(m, expected);
    let mut dead = s.clone();
    assert!(dead.advance_byte(&a, b'x').is_err());
    assert!(compute_mask(&a, &dead, &trie, &v).is_empty());
}

#[test]
fn tokens_fold_bytes() {
    let tokens = vec![b"true".to_vec(), b"tr".to_vec(), b"ue".to_vec(), Vec::new()];
    let v = Vocabulary::new(tokens, 3).unwrap();
    let a = automaton(r#"{"type":"boolean"}"#);
    let s = MatcherState::new(&a, SyntaxMode::Lenient);
    let whole = advance_token(&a, &s, &v, 0).unwrap();
    let parts = advance_token(&a, &advance_token(&a, &s, &v, 1).unwrap(), &v, 2).unwrap();
    assert_eq!(whole, parts);
    assert!(whole.can_terminate(&a));
    let err = advance_token(&a, &whole, &v, 1).unwrap_err();
    assert_eq!(err.offset, 0);
}

#[test]
fn random_token_walks_agree_with_masks() {
    let (v, trie) = bpe_vocab();
    let schemas = [
        r#"{"type":"object","properties":{"name":{"type":"string"},"id":{"type":"integer"}},"required":["id"]}"#,
        r#"{"type":"array","items":{"enum":["foo","bar",null,12]},"maxItems":4}"#,
        r#"{"anyOf":[{"type":"string","format":"date"},{"type":"number"}]}"#,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for schema in schemas {
        let a = automaton(schema);
        for _ in 0..20 {
            let mut s = MatcherState::new(&a, SyntaxMode::Lenient);
            for _ in 0..30 {
                let mask = compute_mask(&a, &s, &trie, &v);
                // Mostly follow the mask so walks go deep, sometimes probe anything.
                let allowed: Vec<u32> = mask.iter().filter(|&t| t != v.eos_id()).collect();
                let t = if allowed.is_empty() || rng.gen_bool(0.3) { rng.gen_range(0..v.len() as u32 - 1) } else { allowed[rng.gen_range(0..allowed.len())] };
                let result = advance_token(&a, &s, &v, t);
                assert_eq!(result.is_ok(), mask.get(t), "{schema}: token {t} after {} bytes", s.consumed());
                if let Ok(next) = result {
                    s = next;
                }
            }
        }
    }
}

#[test]
fn fast_forward_forces_fixed_prefixes() {
    let (v, trie) = bytes_vocab();
    let a = automaton(r#"{"type":"object","properties":{"a":{"type":"integer"}},"required":["a"],"additionalProperties":false}"#);
    let s = MatcherState::new(&a, SyntaxMode::Compact);
    let (forced, after) = fast_forward(&a, &s, &trie, &v, 100);
    assert_eq!(v.decode(&forced), br#"{"a":"#);
    // Each forced step really was the only option.
    let mut check = s.clone();
    for &t in &forced {
        assert_eq!(oracle_mask(&a, &check, &v), BTreeSet::from([t]));
        check = advance_token(&a, &check, &v, t).unwrap();
    }
    assert_eq!(check, after);
    assert!(oracle_mask(&a, &after, &v).len() > 1);

    let b = automaton(r#"{"type":"boolean"}"#);
    assert!(fast_forward(&b, &MatcherState::new(&b, SyntaxMode::Compact), &trie, &v, 100).0.is_empty());

    let c = automaton(r#"{"const":"xy"}"#);
    let (forced, end) = fast_forward(&c, &MatcherState::new(&c, SyntaxMode::Compact), &trie, &v, 100);
    assert_eq!(v.decode(&forced), br#""xy""#);
    assert_eq!(oracle_mask(&c, &end, &v), BTreeSet::from([v.eos_id()]));
}

#[test]
fn replay_reproduces_instances() {
    let (v, trie) = bpe_vocab();
    let a = automaton(r#"{"type":"object","properties":{"foo":{"type":"array","items":{"type":"integer"}}}}"#);
    let text = br#"{"foo":[1,20,300],"bar":"baz"}"#;
    let script = trie.tokenize(text).unwrap();
    let mut src = ReplaySource::new(&v, script.clone());
    let r = constrained_decode(&a, &mut src, &v, &trie, &[], &DecodeOptions::default(), Duration::ZERO).unwrap();
    assert_eq!(r.bytes, text);
    assert_eq!(r.tokens, script);
    assert_eq!(r.terminated_by, Termination::Eos);
    assert!(r.timing.tgt >= r.timing.ttft);
    assert!(r.timing.tgt >= r.timing.per_token.iter().sum::<f64>());
}

#[test]
fn random_sources_only_produce_valid_booleans() {
    let (v, trie) = bytes_vocab();
    let text = r#"{"type":"boolean"}"#;
    let ir = normalize(&parse_schema(text.as_bytes()).unwrap()).unwrap();
    let a = compile(&ir, &CompileOptions::default()).automaton().unwrap();
    for seed in 0..1000 {
        let mut src = UniformSource::new(&v, seed);
        let r = constrained_decode(&a, &mut src, &v, &trie, &[], &DecodeOptions::default(), Duration::ZERO).unwrap();
        assert_eq!(r.terminated_by, Termination::Eos);
        assert!(r.bytes == b"true" || r.bytes == b"false", "{:?}", r.bytes);
        assert!(validate_instance(&ir, &parse_json(&r.bytes).unwrap()).unwrap().valid);
    }
}

#[test]
fn decode_limits() {
    let (v, trie) = bytes_vocab();
    let a = automaton(r#"{"type":"object"}"#);
    let opts = DecodeOptions { max_tokens: 1, ..DecodeOptions::default() };
    let mut src = AdversarialSource::new(&v, 1);
    let r = constrained_decode(&a, &mut src, &v, &trie, &[], &opts, Duration::ZERO).unwrap();
    assert_eq!(r.terminated_by, Termination::MaxTokens);
    assert_eq!(r.bytes, b"{");
    let opts = DecodeOptions { generation_timeout: Duration::ZERO, ..DecodeOptions::default() };
    let r = constrained_decode(&a, &mut src, &v, &trie, &[], &opts, Duration::ZERO).unwrap();
    assert_eq!(r.terminated_by, Termination::Timeout);
}

#[test]
fn fast_forward_keeps_outputs() {
    let (v, trie) = bytes_vocab();
    let a = automaton(r#"{"type":"object","properties":{"alpha":{"const":"fixed value"},"beta":{"type":"boolean"}},"required":["alpha","beta"],"additionalProperties":false}"#);
    for seed in 0..20 {
        let plain = constrained_decode(&a, &mut AdversarialSource::new(&v, seed), &v, &trie, &[], &DecodeOptions::default(), Duration::ZERO).unwrap();
        let opts = DecodeOptions { fast_forward: true, ..DecodeOptions::default() };
        let ff = constrained_decode(&a, &mut AdversarialSource::new(&v, seed), &v, &trie, &[], &opts, Duration::ZERO).unwrap();
        assert!(ff.ff_tokens > 0);
        assert!(ff.sampled_steps < ff.tokens.len());
        assert_eq!(ff.tokens.len(), ff.timing.per_token.len());
        // The adversarial source draws one score vector per call, so its
        // stream only lines up when both runs consult it equally often.
        let mut replay = ReplaySource::new(&v, plain.tokens.clone());
        let replayed = constrained_decode(&a, &mut replay, &v, &trie, &[], &opts, Duration::ZERO).unwrap();
        assert_eq!(replayed.tokens, plain.tokens);
    }
}

#[test]
fn walking_instances() {
    let (v, trie) = bytes_vocab();
    let a = automaton(r#"{"type":"boolean"}"#);
    assert_eq!(walk_instance(&a, &v, &trie, b"true"), WalkOutcome::Accepted);
    assert_eq!(walk_instance(&a, &v, &trie, b"\"true\""), WalkOutcome::RejectedAt(0));
    let obj = automaton(r#"{"type":"object","properties":{"a":{"type":"integer"}},"required":["a"]}"#);
    let outcome = walk_instance(&obj, &v, &trie, b"{}");
    assert!(matches!(outcome, WalkOutcome::RejectedAt(_) | WalkOutcome::PrematureEnd), "{outcome:?}");
    assert_eq!(walk_instance(&obj, &v, &trie, br#"{"a":1"#), WalkOutcome::PrematureEnd);
    let partial = Vocabulary::new(vec![b"t".to_vec(), b"rue".to_vec(), Vec::new()], 2).unwrap();
    let ptrie = TokenTrie::new(&partial);
    assert_eq!(walk_instance(&a, &partial, &ptrie, b"trux"), WalkOutcome::UntokenizableBytes(1));
}

#[test]
fn adapter_round_trips_through_pipes() {
    let (v, trie) = bpe_vocab();
    let a = automaton(r#"{"type":"object","properties":{"name":{"type":"string"},"age":{"type":"integer"}},"required":["name","age"]}"#);
    let script = trie.tokenize(br#"{"name":"Ada Lovelace","age":36}"#).unwrap();
    let direct = constrained_decode(&a, &mut ReplaySource::new(&v, script.clone()), &v, &trie, &[1, 2, 3], &DecodeOptions::default(), Duration::ZERO).unwrap();

    let (req_read, req_write) = std::io::pipe().unwrap();
    let (resp_read, resp_write) = std::io::pipe().unwrap();
    let server_vocab = v.clone();
    let server = std::thread::spawn(move || {
        let mut src = ReplaySource::new(&server_vocab, script);
        serve(&mut src, BufReader::new(req_read), resp_write)
    });
    let mut adapter = AdapterSource::new(BufReader::new(resp_read), req_write, v.len());
    let remote = constrained_decode(&a, &mut adapter, &v, &trie, &[1, 2, 3], &DecodeOptions::default(), Duration::ZERO).unwrap();
    drop(adapter);
    server.join().unwrap().unwrap();
    assert_eq!(remote.tokens, direct.tokens);
    assert_eq!(remote.terminated_by, direct.terminated_by);
}

#[test]
fn adapter_errors_are_data() {
    let mut sink = Vec::new();
    let mut bad = AdapterSource::new(Cursor::new(b"not json\n".to_vec()), &mut sink, 3);
    assert!(matches!(bad.score(&[], &[]), Err(SourceError::Protocol(_))));
    let mut wrong_len = AdapterSource::new(Cursor::new(b"{\"id\":0,\"scores\":[1.0]}\n".to_vec()), Vec::new(), 3);
    assert!(matches!(wrong_len.score(&[], &[]), Err(SourceError::Protocol(_))));
    let mut closed = AdapterSource::new(Cursor::new(Vec::new()), Vec::new(), 3);
    assert_eq!(closed.score(&[], &[]), Err(SourceError::StreamClosed));
    let mut echo = AdapterSource::new(Cursor::new(b"{\"id\":0,\"scores\":[0.5,1,2]}\n".to_vec()), Vec::new(), 3);
    assert_eq!(echo.score(&[7], &[]).unwrap(), vec![0.5, 1.0, 2.0]);
    let request = String::from_utf8(sink).unwrap();
    assert_eq!(request, "{\"id\":0,\"prompt\":[],\"output\":[]}\n");
}

#[test]
fn adversarial_source_copies_required_keys_from_the_prompt() {
    let (v, trie) = bytes_vocab();
    let schema = r#"{"type":"object","properties":{"name":{"type":"string"}},"required":["name"]}"#;
    let a = automaton(schema);
    let ir = normalize(&parse_schema(schema.as_bytes()).unwrap()).unwrap();
    let prompt = trie.tokenize(schema.as_bytes()).unwrap();
    let mut ended = 0;
    for seed in 0..20 {
        let r = constrained_decode(&a, &mut AdversarialSource::new(&v, seed), &v, &trie, &prompt, &DecodeOptions::default(), Duration::ZERO).unwrap();
        if r.terminated_by == Termination::Eos {
            ended += 1;
            assert!(validate_instance(&ir, &parse_json(&r.bytes).unwrap()).unwrap().valid);
        }
    }
    // Without the prompt the key is never spelled and no decode ends.
    let blind = constrained_decode(&a, &mut AdversarialSource::new(&v, 0), &v, &trie, &[], &DecodeOptions::default(), Duration::ZERO).unwrap();
    assert_eq!(blind.terminated_by, Termination::MaxTokens);
    assert!(ended >= 10, "{ended} of 20 decodes ended");
}
