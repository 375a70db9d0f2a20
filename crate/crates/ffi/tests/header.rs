use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/taxoforge.h")).unwrap()
}

#[test]
fn header_declares_the_api() {
    let h = header();
    assert!(h.starts_with("#ifndef TAXOFORGE_H"));
    for decl in [
        "typedef struct TxfCorpus TxfCorpus;",
        "typedef struct TxfTaxonomy TxfTaxonomy;",
        "TXF_STATUS_OK = 0",
        "TXF_STATUS_PANIC = 11",
        "const char *txf_version(void);",
        "const char *txf_last_error(void);",
        "void txf_string_free(char *s);",
        "enum TxfStatus txf_corpus_from_text(",
        "enum TxfStatus txf_taxonomy_load(",
        "enum TxfStatus txf_relation_f1(",
        "enum TxfStatus txf_kl_from_uniform(",
        "enum TxfStatus txf_run(",
    ] {
        assert!(h.contains(decl), "header lacks `{decl}`");
    }
    // opaque: no field layout leaks
    assert!(!h.contains("Corpus inner"));
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "taxoforge.h"

int main(void) {
    TxfTaxonomy *tax = NULL;
    size_t n = 0;
    double p = 0, r = 0, f = 0, kl = -1;
    const double peaked[3] = {0.98, 0.01, 0.01};
    if (txf_taxonomy_load("food\tmeat\nmeat\tbeef\n", &tax) != TXF_STATUS_OK) return 1;
    if (txf_taxonomy_node_count(tax, &n) != TXF_STATUS_OK || n != 3) return 2;
    if (txf_relation_f1(tax, "food\tmeat\nmeat\tbeef\nfood\tbeef\n", 1, &p, &r, &f) != TXF_STATUS_OK) return 3;
    if (f != 1.0) return 4;
    txf_taxonomy_free(tax);
    if (txf_kl_from_uniform(peaked, &kl) != TXF_STATUS_OK || kl < 1.95 || kl > 2.0) return 5;
    if (txf_taxonomy_load("{", &tax) != TXF_STATUS_PARSE) return 6;
    if (strlen(txf_last_error()) == 0) return 7;
    printf("ok %s\n", txf_version());
    return 0;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libtaxoforge_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("ok {}", env!("CARGO_PKG_VERSION")));
}
