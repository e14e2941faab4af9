use std::path::PathBuf;

use causalid::expr::{parse_expr, render_latex, render_text};
use causalid::identify::{backdoor_formula, frontdoor_formula};

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.trim_end().to_string()
}

#[test]
fn backdoor_text_and_latex() {
    let e = backdoor_formula(&["x"], &["y"], &["z"]);
    assert_eq!(render_text(&e), golden("backdoor.txt"));
    assert_eq!(render_latex(&e), golden("backdoor_latex.txt"));
    assert_eq!(parse_expr(&golden("backdoor.txt")).unwrap(), e);
}

#[test]
fn frontdoor_text_and_latex() {
    let e = frontdoor_formula(&["x"], &["y"], &["z"]);
    assert_eq!(render_text(&e), golden("frontdoor.txt"));
    assert_eq!(render_latex(&e), golden("frontdoor_latex.txt"));
    assert_eq!(parse_expr(&golden("frontdoor.txt")).unwrap(), e);
}
