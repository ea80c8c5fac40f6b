use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use bnqa::corpus::QaDataset;
use bnqa::encoder::ModelConfig;
use bnqa::evaluation::{exact_match, normalize_answer, token_f1};
use bnqa::inference::Model;
use bnqa::tokenizer::build_vocab;
use bnqa::training::{train, TrainConfig};
use bnqa_ffi::*;
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a returned string.
fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { bnqa_string_free(p) };
    s
}

fn last_error() -> Option<String> {
    let p = bnqa_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned())
}

/// One epoch over the fixture: enough for a loadable checkpoint.
fn checkpoint(dir: &Path) -> QaDataset {
    let ds = QaDataset::load(&fixtures().join("overfit.json")).unwrap();
    let texts: Vec<String> = ds
        .paragraphs()
        .iter()
        .flat_map(|(_, p)| std::iter::once(p.context.clone()).chain(p.qas.iter().map(|q| q.question.clone())))
        .collect();
    let vocab = build_vocab(texts.iter().map(String::as_str), 4000, 1).unwrap();
    let model = ModelConfig {
        num_layers: 1,
        hidden_size: 16,
        num_heads: 2,
        ff_size: 32,
        vocab_size: vocab.len(),
        max_positions: 128,
        type_vocab_size: 2,
        dropout_rate: 0.1,
    };
    let config = TrainConfig { epochs: 1, max_len: 128, doc_stride: 64, ..TrainConfig::default() };
    train(&ds, &vocab, &model, &config, Some(dir)).unwrap();
    ds
}

#[test]
fn answers_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let ds = checkpoint(dir.path());
    let reference = Model::load(dir.path()).unwrap();

    let mut handle: *mut BnqaModel = ptr::null_mut();
    let path = c(dir.path().to_str().unwrap());
    assert_eq!(unsafe { bnqa_model_load(path.as_ptr(), &mut handle) }, BnqaStatus::Ok);
    assert!(!handle.is_null());
    assert_eq!(last_error(), None);

    let mut id = ptr::null_mut();
    assert_eq!(unsafe { bnqa_model_id(handle, &mut id) }, BnqaStatus::Ok);
    assert_eq!(take(id), reference.model_id);

    for (_, p) in ds.paragraphs().iter().take(3) {
        let q = &p.qas[0].question;
        let mut out = ptr::null_mut();
        let status = unsafe { bnqa_answer(handle, c(&p.context).as_ptr(), c(q).as_ptr(), 3, 30, &mut out) };
        assert_eq!(status, BnqaStatus::Ok, "{:?}", last_error());
        let got: Vec<Value> = serde_json::from_str(&take(out)).unwrap();
        let want = reference.predict(&p.context, q, 3, 30).unwrap();
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert_eq!(g["text"], w.text.as_str());
            assert_eq!(g["char_start"], w.char_start);
            assert_eq!(g["char_end"], w.char_end);
            assert_eq!(g["score"].as_f64().unwrap(), w.score);
        }
    }

    // bad arguments leave the handle usable
    let mut out = ptr::null_mut();
    let status = unsafe { bnqa_answer(handle, ptr::null(), c("কী?").as_ptr(), 3, 30, &mut out) };
    assert_eq!(status, BnqaStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("context"));
    assert!(out.is_null());
    let status = unsafe { bnqa_answer(handle, c("ক খ").as_ptr(), c("কী?").as_ptr(), 3, 0, &mut out) };
    assert_eq!(status, BnqaStatus::InvalidArgument);
    let status = unsafe { bnqa_answer(handle, c("ক খ").as_ptr(), c("কী?").as_ptr(), 1, 30, &mut out) };
    assert_eq!(status, BnqaStatus::Ok);
    assert_eq!(last_error(), None);
    take(out);

    unsafe { bnqa_model_free(handle) };
    unsafe { bnqa_model_free(ptr::null_mut()) };
}

#[test]
fn load_failures_have_status_and_message() {
    let mut handle: *mut BnqaModel = ptr::null_mut();
    let missing = c("/nonexistent/checkpoint");
    assert_eq!(unsafe { bnqa_model_load(missing.as_ptr(), &mut handle) }, BnqaStatus::Io);
    assert!(handle.is_null());
    assert!(last_error().is_some());

    assert_eq!(unsafe { bnqa_model_load(ptr::null(), &mut handle) }, BnqaStatus::InvalidArgument);
    assert_eq!(unsafe { bnqa_model_load(missing.as_ptr(), ptr::null_mut()) }, BnqaStatus::InvalidArgument);

    let bad_utf8 = [0xffu8, 0xfe, 0];
    let status = unsafe { bnqa_model_load(bad_utf8.as_ptr().cast(), &mut handle) };
    assert_eq!(status, BnqaStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("UTF-8"));

    let mut id = ptr::null_mut();
    assert_eq!(unsafe { bnqa_model_id(ptr::null(), &mut id) }, BnqaStatus::InvalidArgument);
}

#[test]
fn metrics_match_the_library() {
    let cases: [(&str, &[&str]); 5] = [
        ("ঢাকা", &["ঢাকা।"]),
        ("বাংলাদেশের রাজধানী ঢাকা", &["ঢাকা", "রাজধানী ঢাকা"]),
        ("", &["কিছু"]),
        ("১৯৭১ সালে", &["১৯৭১"]),
        ("কিছু", &[]),
    ];
    for (pred, golds) in cases {
        let owned: Vec<CString> = golds.iter().map(|g| c(g)).collect();
        let ptrs: Vec<*const c_char> = owned.iter().map(|g| g.as_ptr()).collect();
        let mut em = 9u8;
        let mut f1 = -1.0;
        let p = c(pred);
        assert_eq!(unsafe { bnqa_exact_match(p.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut em) }, BnqaStatus::Ok);
        assert_eq!(unsafe { bnqa_token_f1(p.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut f1) }, BnqaStatus::Ok);
        assert_eq!(em, exact_match(pred, golds));
        assert_eq!(f1, token_f1(pred, golds));

        let mut norm = ptr::null_mut();
        assert_eq!(unsafe { bnqa_normalize_answer(p.as_ptr(), &mut norm) }, BnqaStatus::Ok);
        assert_eq!(take(norm), normalize_answer(pred));
    }
    let p = c("ক");
    let mut f1 = 0.0;
    assert_eq!(unsafe { bnqa_token_f1(p.as_ptr(), ptr::null(), 2, &mut f1) }, BnqaStatus::InvalidArgument);
    let golds = [p.as_ptr(), ptr::null()];
    assert_eq!(unsafe { bnqa_token_f1(p.as_ptr(), golds.as_ptr(), 2, &mut f1) }, BnqaStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("golds[1]"));
    assert_eq!(unsafe { bnqa_exact_match(p.as_ptr(), golds.as_ptr(), 1, ptr::null_mut()) }, BnqaStatus::InvalidArgument);
}

#[test]
fn validation_reports_as_json() {
    let validate = |name: &str| {
        let path = c(fixtures().join("validator").join(name).to_str().unwrap());
        let mut out = ptr::null_mut();
        let status = unsafe { bnqa_validate_dataset(path.as_ptr(), &mut out) };
        (status, (!out.is_null()).then(|| serde_json::from_str::<Value>(&take(out)).unwrap()))
    };
    let (status, report) = validate("valid.json");
    assert_eq!(status, BnqaStatus::Ok);
    assert_eq!(report.unwrap()["errors"].as_array().unwrap().len(), 0);

    let (status, report) = validate("dup_id.json");
    assert_eq!(status, BnqaStatus::Ok);
    let report = report.unwrap();
    let errors = report["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert!(errors[0]["code"].is_string());

    let (status, report) = validate("missing.json");
    assert_eq!(status, BnqaStatus::Io);
    assert!(report.is_none());

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"data\": 3}").unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { bnqa_validate_dataset(c(broken.to_str().unwrap()).as_ptr(), &mut out) };
    assert_eq!(status, BnqaStatus::Data);
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(bnqa_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    unsafe { bnqa_string_free(ptr::null_mut()) };
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bnqa.h");
    let header = std::fs::read_to_string(&header_path).unwrap();
    for name in [
        "bnqa_last_error",
        "bnqa_version",
        "bnqa_string_free",
        "bnqa_model_load",
        "bnqa_model_free",
        "bnqa_model_id",
        "bnqa_answer",
        "bnqa_exact_match",
        "bnqa_token_f1",
        "bnqa_normalize_answer",
        "bnqa_validate_dataset",
        "typedef struct BnqaModel BnqaModel",
        "BNQA_STATUS_INVALID_ARGUMENT = 1",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"bnqa.h\"\n\
         int main(void) {\n\
           BnqaModel *m = 0;\n\
           char *json = 0;\n\
           BnqaStatus s = bnqa_model_load(\"ckpt\", &m);\n\
           if (s == BNQA_STATUS_OK) s = bnqa_answer(m, \"c\", \"q\", 3, 30, &json);\n\
           bnqa_string_free(json);\n\
           bnqa_model_free(m);\n\
           return s == BNQA_STATUS_OK ? 0 : (int)s;\n\
         }\n",
    )
    .unwrap();
    let Ok(output) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_path.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler found; skipping compile check");
        return;
    };
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}
