use std::path::{Path, PathBuf};

use ipredict::corpus::{
    load_features, load_parallel, validate, CorpusDir, CorpusError, ScorerConfig, ScorerKind, HISTOGRAM_BIN,
};
use ipredict::decoder::{beam_search, SearchConfig};
use ipredict::seqcore::{Modality, SourceContext, Vocabulary};
use proptest::prelude::*;
use tempfile::TempDir;

fn write(dir: &Path, name: &str, content: impl AsRef<[u8]>) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, content).unwrap();
    p
}

fn matrix(rows: usize, cols: usize) -> String {
    let mut s = format!("{rows} {cols}\n");
    for r in 0..rows {
        let row: Vec<String> = (0..cols).map(|c| format!("{}", (r * cols + c) as f32 * 0.5)).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

#[test]
fn parallel_lines_become_samples() {
    let d = TempDir::new().unwrap();
    let src = write(d.path(), "src.txt", "ein Haus\nzwei Katzen\n");
    let r = write(d.path(), "ref.txt", "a house\ntwo cats\n");
    let ds = load_parallel(&src, &[&r]).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.modality, Modality::Text);
    assert_eq!(ds.samples[1].id, "1");
    assert_eq!(ds.samples[1].source, SourceContext::text_with_id("1", "zwei Katzen"));
    assert_eq!(ds.samples[1].references, ["two cats"]);
}

#[test]
fn mismatched_line_counts_name_both_counts() {
    let d = TempDir::new().unwrap();
    let src = write(d.path(), "src.txt", "a\nb\nc\n");
    let r = write(d.path(), "ref.txt", "x\ny\n");
    let err = load_parallel(&src, &[&r]).unwrap_err();
    assert!(matches!(
        err,
        CorpusError::LineCountMismatch {
            source_lines: 3,
            reference_lines: 2,
            ..
        }
    ));
    assert!(err.to_string().contains("3 vs 2"), "{err}");
    assert!(matches!(load_parallel::<&Path>(&src, &[]), Err(CorpusError::NoReferences)));
}

#[test]
fn reference_files_keep_their_order() {
    let d = TempDir::new().unwrap();
    let src = write(d.path(), "src.txt", "s\n");
    let r1 = write(d.path(), "b.txt", "second file\n");
    let r2 = write(d.path(), "a.txt", "third file\n");
    let ds = load_parallel(&src, &[&r1, &r2]).unwrap();
    assert_eq!(ds.samples[0].references, ["second file", "third file"]);
}

#[test]
fn invalid_utf8_reports_the_byte_offset() {
    let d = TempDir::new().unwrap();
    let src = write(d.path(), "src.txt", b"ok\nbad \xff here\n");
    let r = write(d.path(), "ref.txt", "x\ny\n");
    match load_parallel(&src, &[&r]).unwrap_err() {
        CorpusError::Utf8 { offset, path } => {
            assert_eq!(offset, 7);
            assert!(path.ends_with("src.txt"));
        }
        e => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn parallel_text_round_trips(lines in prop::collection::vec(("[^\n]{0,12}", "[^\n]{0,12}"), 1..8)) {
        let d = TempDir::new().unwrap();
        let src: Vec<&str> = lines.iter().map(|l| l.0.as_str()).collect();
        let tgt: Vec<&str> = lines.iter().map(|l| l.1.as_str()).collect();
        let s = write(d.path(), "s.txt", src.join("\n") + "\n");
        let t = write(d.path(), "t.txt", tgt.join("\n") + "\n");
        let ds = load_parallel(&s, &[&t]).unwrap();
        let (s_text, refs) = ds.to_parallel_text().unwrap();
        prop_assert_eq!(s_text, src.join("\n"));
        prop_assert_eq!(refs, vec![tgt.join("\n")]);
    }
}

#[test]
fn feature_manifest_loads_matrices_and_captions() {
    let d = TempDir::new().unwrap();
    write(d.path(), "a.feat", matrix(4, 8));
    let captions: Vec<String> = (0..5).map(|i| format!("caption number {i}")).collect();
    let manifest = format!(
        "{}\n",
        serde_json::json!({"id": "img1", "features": "a.feat", "refs": captions})
    );
    let m = write(d.path(), "manifest.jsonl", manifest);
    let ds = load_features(&m).unwrap();
    assert_eq!(ds.modality, Modality::ImageFeatures);
    let s = &ds.samples[0];
    assert_eq!(s.references.len(), 5);
    match &s.source {
        SourceContext::Features { id, matrix, modality } => {
            assert_eq!(id, "img1");
            assert_eq!(*modality, Modality::ImageFeatures);
            assert_eq!((matrix.rows(), matrix.cols()), (4, 8));
            assert_eq!(matrix.row(1)[0], 4.0);
        }
        other => panic!("{other:?}"),
    }
    assert!(ds.to_parallel_text().is_none());
}

#[test]
fn video_manifests_accept_any_frame_count() {
    let d = TempDir::new().unwrap();
    write(d.path(), "v1.feat", matrix(26, 3));
    write(d.path(), "v2.feat", matrix(2, 3));
    let m = write(
        d.path(),
        "manifest.jsonl",
        "{\"id\":\"v1\",\"features\":\"v1.feat\",\"refs\":[\"a man cooks\"],\"modality\":\"video-features\"}\n\
         {\"id\":\"v2\",\"features\":\"v2.feat\",\"refs\":[\"a dog runs\"],\"modality\":\"video-features\"}\n",
    );
    let ds = load_features(&m).unwrap();
    assert_eq!(ds.modality, Modality::VideoFeatures);
    assert_eq!(ds.len(), 2);
}

#[test]
fn manifest_errors_are_specific() {
    let d = TempDir::new().unwrap();
    write(d.path(), "ok.feat", matrix(2, 4));
    write(d.path(), "wide.feat", matrix(2, 5));

    let m = write(
        d.path(),
        "missing.jsonl",
        "{\"id\":\"x\",\"features\":\"nowhere.feat\",\"refs\":[\"r\"]}\n",
    );
    let err = load_features(&m).unwrap_err();
    assert!(err.to_string().contains("nowhere.feat"), "{err}");

    let m = write(
        d.path(),
        "ragged.jsonl",
        "{\"id\":\"first\",\"features\":\"ok.feat\",\"refs\":[\"r\"]}\n\
         {\"id\":\"second\",\"features\":\"wide.feat\",\"refs\":[\"r\"]}\n",
    );
    match load_features(&m).unwrap_err() {
        CorpusError::RaggedColumns { id, expected, found } => {
            assert_eq!((id.as_str(), expected, found), ("second", 4, 5));
        }
        e => panic!("{e}"),
    }

    let m = write(
        d.path(),
        "dup.jsonl",
        "{\"id\":\"a\",\"features\":\"ok.feat\",\"refs\":[\"r\"]}\n{\"id\":\"a\",\"features\":\"ok.feat\",\"refs\":[\"r\"]}\n",
    );
    assert!(matches!(load_features(&m), Err(CorpusError::DuplicateId(_))));

    let m = write(d.path(), "norefs.jsonl", "{\"id\":\"a\",\"features\":\"ok.feat\",\"refs\":[]}\n");
    assert!(matches!(load_features(&m), Err(CorpusError::Manifest { line: 1, .. })));
}

#[test]
fn validation_counts_oov_and_lengths() {
    let d = TempDir::new().unwrap();
    let words: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::from_words(words.iter().map(String::as_str)).unwrap();
    let src = write(d.path(), "s.txt", "x\ny\n");
    let r = write(d.path(), "r.txt", "w0 w1 w2 w3 w4\nw5 w6 w7 w8 w9\n");
    let ds = load_parallel(&src, &[&r]).unwrap();
    let rep = validate(&ds, &vocab, None);
    assert_eq!(rep.target.oov_percent, Some(0.0));
    assert_eq!(rep.source.as_ref().unwrap().oov_percent, None);

    let r = write(d.path(), "r2.txt", "w0 w1 w2 w3 zz\nw5 w6 w7 w8 w9\n");
    let ds = load_parallel(&src, &[&r]).unwrap();
    let rep = validate(&ds, &vocab, Some(&vocab));
    assert_eq!(rep.target.oov_tokens, 1);
    assert!((rep.target.oov_percent.unwrap() - 10.0).abs() < 1e-9);
    assert_eq!(rep.source.unwrap().oov_percent, Some(100.0));
    assert_eq!(rep.target.lengths.total(), 2);
    assert_eq!(rep.target.lengths.bins[&5], 2);
    assert_eq!(rep.target.lengths.bin_width, HISTOGRAM_BIN);
}

#[test]
fn corpus_directory_builds_both_scorers() {
    let d = TempDir::new().unwrap();
    write(d.path(), "source.txt", "ein Haus\nzwei Katzen\n");
    write(d.path(), "ref0.txt", "a house\ntwo cats\n");
    write(d.path(), "ref1.txt", "one house\ntwo kittens\n");
    write(d.path(), "nbest.tsv", "0\t-0.5\ta house\n0\t-1\tone house\n1\t-0.2\ttwo cats\n");
    let dir = CorpusDir::open(d.path()).unwrap();
    assert_eq!(dir.dataset.samples[0].references, ["a house", "one house"]);
    assert!(dir.vocab.id_of("kittens").is_some());
    assert_eq!(dir.train.len(), 2);

    let ngram = dir.build_scorer(&ScorerConfig::default()).unwrap();
    let src = &dir.dataset.samples[0].source;
    let out = beam_search(&*ngram, src, &SearchConfig::default()).unwrap();
    assert!(out.is_terminated(ngram.vocab()));

    let nbest = dir
        .build_scorer(&ScorerConfig {
            kind: ScorerKind::Nbest,
            ..Default::default()
        })
        .unwrap();
    let out = beam_search(&*nbest, src, &SearchConfig::default()).unwrap();
    assert_eq!(out.render(nbest.vocab()).unwrap(), "a house");
}

#[test]
fn corpus_directory_needs_a_dataset() {
    let d = TempDir::new().unwrap();
    assert!(matches!(CorpusDir::open(d.path()), Err(CorpusError::NoDataset(_))));
    write(d.path(), "source.txt", "a\n");
    write(d.path(), "ref.txt", "b\n");
    let dir = CorpusDir::open(d.path()).unwrap();
    let err = dir
        .build_scorer(&ScorerConfig {
            kind: ScorerKind::Nbest,
            ..Default::default()
        })
        .err()
        .unwrap();
    assert!(err.to_string().contains("nbest.tsv"));
}
