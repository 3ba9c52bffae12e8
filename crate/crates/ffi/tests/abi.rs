use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;
use std::sync::OnceLock;

use hanforge::pipeline::corpus::{read_corpus, Corpus};
use hanforge::pipeline::train::{train_corpora, EncoderSettings, TrainOptions};
use hanforge::pipeline::container;
use hanforge::scheme::Task;
use hanforge_ffi::*;

fn mini(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/mini").join(name)
}

/// A small CWS + POS model, trained once and saved to a temporary file.
fn model_path() -> &'static Path {
    static MODEL: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    let (_, path) = MODEL.get_or_init(|| {
        let load = |file: &str, tag: &str, task| Corpus {
            tag: tag.into(),
            task,
            sentences: read_corpus(&mini(file), task).unwrap().into_iter().take(80).collect(),
        };
        let corpora = vec![load("cws_coarse.txt", "coarse", Task::Cws), load("pos.txt", "pos", Task::Pos)];
        let options = TrainOptions {
            epochs: 3,
            batch_size: 8,
            learning_rate: 3e-3,
            eval_fraction: 0.0,
            encoder: EncoderSettings {
                num_layers: 1,
                hidden_dim: 16,
                num_heads: 2,
                ffn_dim: 32,
            },
            ..TrainOptions::default()
        };
        let outcome = train_corpora(&corpora, &options).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.fh");
        container::save(&outcome.model, &path).unwrap();
        (dir, path)
    });
    path
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hf_last_error()) }.to_str().unwrap().to_owned()
}

struct Session {
    model: *mut HfModel,
    analyzer: *mut HfAnalyzer,
}

impl Session {
    fn open() -> Session {
        let path = cstr(model_path().to_str().unwrap());
        let mut model = ptr::null_mut();
        let mut analyzer = ptr::null_mut();
        unsafe {
            assert_eq!(hf_model_load(path.as_ptr(), &mut model), HfStatus::Ok);
            assert_eq!(hf_analyzer_new(model, &mut analyzer), HfStatus::Ok);
        }
        Session { model, analyzer }
    }

    fn analyze(&self, text: &str, task: HfTask, format: HfFormat) -> Result<String, HfStatus> {
        let text = cstr(text);
        let mut out = ptr::null_mut();
        let status = unsafe { hf_analyze(self.analyzer, text.as_ptr(), task, format, &mut out) };
        if status != HfStatus::Ok {
            assert!(out.is_null());
            return Err(status);
        }
        let s = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
        unsafe { hf_string_free(out) };
        Ok(s)
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        unsafe {
            hf_analyzer_free(self.analyzer);
            hf_model_free(self.model);
        }
    }
}

#[test]
fn segmentation_round_trips_through_json() {
    let s = Session::open();
    assert_eq!(unsafe { hf_model_num_layers(s.model) }, 1);
    let json = s.analyze("我喜欢踢足球", HfTask::Cws, HfFormat::Json).unwrap();
    let words: Vec<String> = serde_json::from_str(&json).unwrap();
    assert_eq!(words.concat(), "我喜欢踢足球");
    let plain = s.analyze("我喜欢踢足球", HfTask::Cws, HfFormat::Plain).unwrap();
    assert_eq!(plain, words.join(" "));
}

#[test]
fn pos_output_tags_every_word() {
    let s = Session::open();
    let plain = s.analyze("他们参观了北京大学。", HfTask::Pos, HfFormat::Plain).unwrap();
    let forms: String = plain
        .split(' ')
        .map(|t| {
            let (form, tag) = t.rsplit_once('/').expect("form/tag");
            assert!(!tag.is_empty());
            form
        })
        .collect();
    assert_eq!(forms, "他们参观了北京大学。");
}

#[test]
fn errors_carry_codes_and_messages() {
    let s = Session::open();
    assert_eq!(s.analyze("   ", HfTask::Cws, HfFormat::Json), Err(HfStatus::InputError));
    assert!(!last_error().is_empty());
    let long = "我".repeat(300);
    assert_eq!(s.analyze(&long, HfTask::Cws, HfFormat::Json), Err(HfStatus::InputError));
    assert_eq!(s.analyze("我", HfTask::Ner, HfFormat::Json), Err(HfStatus::Unsupported));

    unsafe {
        assert_eq!(hf_analyzer_set_style(s.analyzer, cstr("nope").as_ptr()), HfStatus::UnknownTag);
        assert!(last_error().contains("nope"));
        assert_eq!(hf_analyzer_set_style(s.analyzer, cstr("coarse").as_ptr()), HfStatus::Ok);

        let bad_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(hf_analyzer_set_style(s.analyzer, bad_utf8.as_ptr().cast()), HfStatus::InvalidUtf8);
        assert_eq!(hf_analyzer_set_style(ptr::null_mut(), cstr("coarse").as_ptr()), HfStatus::NullArgument);

        let mut out = ptr::null_mut();
        assert_eq!(hf_analyze(s.analyzer, ptr::null(), HfTask::Cws, HfFormat::Json, &mut out), HfStatus::NullArgument);
    }
}

#[test]
fn model_load_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = ptr::null_mut();
    let missing = cstr(dir.path().join("none.fh").to_str().unwrap());
    assert_eq!(unsafe { hf_model_load(missing.as_ptr(), &mut model) }, HfStatus::ModelError);
    assert!(model.is_null());

    let mut bytes = std::fs::read(model_path()).unwrap();
    let n = bytes.len();
    bytes[n - 40] ^= 1;
    let bad = dir.path().join("bad.fh");
    std::fs::write(&bad, bytes).unwrap();
    let bad = cstr(bad.to_str().unwrap());
    assert_eq!(unsafe { hf_model_load(bad.as_ptr(), &mut model) }, HfStatus::ModelError);
    assert!(last_error().contains("checksum"), "{}", last_error());
    assert_eq!(unsafe { hf_model_load(bad.as_ptr(), ptr::null_mut()) }, HfStatus::NullArgument);
}

#[test]
fn lexicon_install_and_removal() {
    let s = Session::open();
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("words.txt");
    std::fs::write(&dict, "足球\n喜欢\n").unwrap();
    let dict = cstr(dict.to_str().unwrap());
    let before = s.analyze("我喜欢踢足球", HfTask::Cws, HfFormat::Json).unwrap();
    unsafe {
        assert_eq!(hf_analyzer_set_lexicon(s.analyzer, dict.as_ptr(), -1.0), HfStatus::Unsupported);
        assert_eq!(hf_analyzer_set_lexicon(s.analyzer, dict.as_ptr(), 1e6), HfStatus::Ok);
    }
    let forced: Vec<String> =
        serde_json::from_str(&s.analyze("我喜欢踢足球", HfTask::Cws, HfFormat::Json).unwrap()).unwrap();
    assert!(forced.contains(&"喜欢".to_string()) && forced.contains(&"足球".to_string()), "{forced:?}");
    unsafe { assert_eq!(hf_analyzer_set_lexicon(s.analyzer, ptr::null(), 0.0), HfStatus::Ok) };
    assert_eq!(s.analyze("我喜欢踢足球", HfTask::Cws, HfFormat::Json).unwrap(), before);
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(hf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hanforge.h")).unwrap();
    for name in [
        "typedef struct HfModel HfModel;",
        "typedef struct HfAnalyzer HfAnalyzer;",
        "HF_STATUS_MODEL_ERROR = 3",
        "HF_STATUS_INPUT_ERROR = 4",
        "hf_model_load(",
        "hf_analyzer_new(",
        "hf_analyzer_set_style(",
        "hf_analyzer_set_lexicon(",
        "hf_analyze(",
        "hf_string_free(",
        "hf_last_error(",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Directory holding the shared library built alongside this test binary.
fn library_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_shared_library() {
    let libdir = library_dir();
    assert!(libdir.join("libhanforge_ffi.so").exists() || libdir.join("libhanforge_ffi.dylib").exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "hanforge.h"

int main(int argc, char **argv) {
    HfModel *model = NULL;
    HfAnalyzer *analyzer = NULL;
    char *out = NULL;
    if (argc < 2) return 10;
    if (hf_model_load(argv[1], &model) != HF_STATUS_OK) return 11;
    if (hf_analyzer_new(model, &analyzer) != HF_STATUS_OK) return 12;
    if (hf_analyze(analyzer, "我喜欢踢足球", HF_TASK_CWS, HF_FORMAT_JSON, &out) != HF_STATUS_OK) return 13;
    printf("%s\n", out);
    hf_string_free(out);
    HfStatus s = hf_analyze(analyzer, "", HF_TASK_CWS, HF_FORMAT_JSON, &out);
    printf("%d %s\n", (int)s, hf_last_error());
    hf_analyzer_free(analyzer);
    hf_model_free(model);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("demo");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("include"))
        .arg("-L")
        .arg(&libdir)
        .arg(format!("-Wl,-rpath,{}", libdir.display()))
        .arg("-lhanforge_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&exe).arg(model_path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let words: Vec<String> = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(words.concat(), "我喜欢踢足球");
    assert!(lines.next().unwrap().starts_with("4 "));
}
