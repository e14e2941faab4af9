//! The generated header must compile as C and declare the whole API.

use std::path::PathBuf;
use std::process::Command;

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("causalid.h")
}

#[test]
fn declares_every_export() {
    let text = std::fs::read_to_string(header()).expect("build.rs writes the header");
    for f in [
        "cid_version",
        "cid_last_error",
        "cid_string_free",
        "cid_graph_parse",
        "cid_graph_free",
        "cid_graph_len",
        "cid_graph_to_dsl",
        "cid_d_separated",
        "cid_identify",
        "cid_model_parse",
        "cid_model_free",
        "cid_eval",
    ] {
        assert!(text.contains(&format!("{f}(")), "{f} missing");
    }
    assert!(text.contains("typedef struct CidGraph CidGraph;"));
    assert!(text.contains("CID_STATUS_OK = 0"));
}

#[test]
fn compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    if !cc.status.success() {
        return;
    }
    let dir = std::env::temp_dir().join(format!("causalid-header-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        r#"#include "causalid.h"
int run(void) {
    CidGraph *g = NULL;
    if (cid_graph_parse("var X\nvar Y\nedge X -> Y\n", &g) != CID_STATUS_OK) return 1;
    CidIdentifyStatus st;
    char *formula = NULL;
    CidStatus rc = cid_identify(g, "X", "Y", 16, &st, &formula);
    cid_string_free(formula);
    cid_graph_free(g);
    return rc == CID_STATUS_OK && st == CID_IDENTIFY_STATUS_IDENTIFIED ? 0 : 1;
}
"#,
    )
    .unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
