use super::{base_name, prime_count, Expr, ProbTerm};

fn text_name(name: &str) -> String {
    format!("{}{}", base_name(name), "'".repeat(prime_count(name)))
}

fn latex_name(name: &str) -> String {
    format!("{}{}", base_name(name).replace('_', "\\_"), "'".repeat(prime_count(name)))
}

fn join(names: &[String], f: fn(&str) -> String, sep: &str) -> String {
    names.iter().map(|n| f(n)).collect::<Vec<_>>().join(sep)
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Top,
    Factor { last: bool },
    Numerator,
    Denominator,
}

fn needs_parens(e: &Expr, slot: Slot) -> bool {
    let multi = matches!(e, Expr::Product(fs) if !fs.is_empty());
    match (e, slot) {
        (_, Slot::Top) => false,
        (Expr::Sum { .. }, Slot::Factor { last }) => !last,
        (Expr::Product(_), Slot::Factor { .. }) => multi,
        (Expr::Sum { .. }, _) => true,
        (Expr::Product(_), _) => multi,
        (Expr::Quotient(..), Slot::Denominator) => true,
        _ => false,
    }
}

/// Renders in the text grammar accepted by [`super::parse_expr`].
pub fn render_text(e: &Expr) -> String {
    text(e, Slot::Top)
}

fn text_term(t: &ProbTerm) -> String {
    let mut cond = Vec::new();
    if !t.interventions.is_empty() {
        cond.push(format!("do({})", join(&t.interventions, text_name, ",")));
    }
    if !t.given.is_empty() {
        cond.push(join(&t.given, text_name, ","));
    }
    let targets = join(&t.targets, text_name, ",");
    if cond.is_empty() {
        format!("p({targets})")
    } else {
        format!("p({targets}|{})", cond.join(","))
    }
}

fn text(e: &Expr, slot: Slot) -> String {
    let inner = match e {
        Expr::Prob(t) => text_term(t),
        Expr::Sum { vars, body } => {
            let head = if vars.len() == 1 && prime_count(&vars[0]) == 0 {
                text_name(&vars[0])
            } else {
                format!("{{{}}}", join(vars, text_name, ","))
            };
            format!("sum_{head} {}", text(body, Slot::Top))
        }
        Expr::Product(fs) if fs.is_empty() => "1".to_string(),
        Expr::Product(fs) => fs
            .iter()
            .enumerate()
            .map(|(i, f)| text(f, Slot::Factor { last: i + 1 == fs.len() }))
            .collect::<Vec<_>>()
            .join(" "),
        Expr::Quotient(a, b) => format!("{}/{}", text(a, Slot::Numerator), text(b, Slot::Denominator)),
    };
    if needs_parens(e, slot) {
        format!("({inner})")
    } else {
        inner
    }
}

/// LaTeX math-mode rendering.
pub fn render_latex(e: &Expr) -> String {
    latex(e, Slot::Top)
}

fn latex(e: &Expr, slot: Slot) -> String {
    let inner = match e {
        Expr::Prob(t) => {
            let mut cond = Vec::new();
            if !t.interventions.is_empty() {
                cond.push(format!("\\mathrm{{do}}({})", join(&t.interventions, latex_name, ", ")));
            }
            if !t.given.is_empty() {
                cond.push(join(&t.given, latex_name, ", "));
            }
            let targets = join(&t.targets, latex_name, ", ");
            if cond.is_empty() {
                format!("p({targets})")
            } else {
                format!("p({targets} \\mid {})", cond.join(", "))
            }
        }
        Expr::Sum { vars, body } => {
            format!("\\sum_{{{}}} {}", join(vars, latex_name, ", "), latex(body, Slot::Top))
        }
        Expr::Product(fs) if fs.is_empty() => "1".to_string(),
        Expr::Product(fs) => fs
            .iter()
            .enumerate()
            .map(|(i, f)| latex(f, Slot::Factor { last: i + 1 == fs.len() }))
            .collect::<Vec<_>>()
            .join(" "),
        Expr::Quotient(a, b) => format!("\\frac{{{}}}{{{}}}", latex(a, Slot::Top), latex(b, Slot::Top)),
    };
    let wrap = match (e, slot) {
        (Expr::Quotient(..), _) => false,
        (_, Slot::Numerator | Slot::Denominator) => false,
        _ => needs_parens(e, slot),
    };
    if wrap {
        format!("\\left({inner}\\right)")
    } else {
        inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_forms() {
        assert_eq!(render_text(&Expr::p(&["y"], &["w"], &["x"])), "p(y|do(x),w)");
        let bd = Expr::sum(&["z"], Expr::product(vec![Expr::p(&["y"], &["x", "z"], &[]), Expr::p(&["z"], &[], &[])]));
        assert_eq!(render_text(&bd), "sum_z p(y|x,z) p(z)");
        let q = Expr::quotient(Expr::p(&["y", "w"], &[], &[]), Expr::p(&["w"], &[], &[]));
        assert_eq!(render_text(&q), "p(y,w)/p(w)");
        let pre = Expr::product(vec![bd.clone(), Expr::p(&["a"], &[], &[])]);
        assert_eq!(render_text(&pre), "(sum_z p(y|x,z) p(z)) p(a)");
        assert_eq!(render_text(&Expr::one()), "1");
        assert_eq!(render_text(&Expr::sum(&["x__1"], Expr::p(&["x__1"], &[], &[]))), "sum_{x'} p(x')");
    }

    #[test]
    fn latex_forms() {
        let e = Expr::sum(
            &["z"],
            Expr::product(vec![
                Expr::p(&["z"], &["x"], &[]),
                Expr::sum(
                    &["x__1"],
                    Expr::product(vec![Expr::p(&["y"], &["x__1", "z"], &[]), Expr::p(&["x__1"], &[], &[])]),
                ),
            ]),
        );
        assert_eq!(render_latex(&e), "\\sum_{z} p(z \\mid x) \\sum_{x'} p(y \\mid x', z) p(x')");
        assert_eq!(render_latex(&Expr::p(&["y"], &[], &["x"])), "p(y \\mid \\mathrm{do}(x))");
    }
}
