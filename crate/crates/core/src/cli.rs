//! The `causalid` command-line front end.
//!
//! Exit codes: 0 on success, 1 for a negative verdict (graphs distinct,
//! effect not identified, corpus failures, a nonzero `--check`
//! difference), 2 for usage, parse and query errors, 3 for an internal
//! invariant breach.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num::Signed;
use serde_json::{json, Value};

use crate::dsep::{d_separated, equivalence_witness, open_path, pattern, Statement};
use crate::error::{Error, Result};
use crate::expr::{base_name, parse_expr, render_latex, render_text, Evaluator, Expr};
use crate::graph::{parse_graph, parse_graph_json, CausalGraph, NodeSet};
use crate::identify::{
    catalog, identify, run_entry, unavailable, CatalogEntry, DerivationStep, Expectation, Guard, Query, Status,
    DEFAULT_BUDGET,
};
use crate::scm::{fmt_rational, parse_model, Assignment, DiscreteModel, Prob, Rational};

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "causalid", version, about = "Causal identification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test a d-separation statement, optionally on a mutilated graph.
    Dsep(DsepArgs),
    /// Derive a do-free formula for p(y|do(x)).
    Identify(IdentifyArgs),
    /// Evaluate a formula or an intervention on a discrete model.
    Eval(EvalArgs),
    /// Compare two graphs for observational equivalence.
    Equiv(EquivArgs),
    /// Print the equivalence-class pattern of a graph.
    Pattern(PatternArgs),
    /// List or run the built-in graph corpus.
    Corpus(CorpusArgs),
}

#[derive(Args, Debug)]
struct DsepArgs {
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    /// Remove the edges into these variables first.
    #[arg(long, value_delimiter = ',')]
    cut_incoming: Vec<String>,
    /// Remove the edges out of these variables first.
    #[arg(long, value_delimiter = ',')]
    cut_outgoing: Vec<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct IdentifyArgs {
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    /// Maximum number of rewrite steps.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u32,
    #[arg(long)]
    latex: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    model: PathBuf,
    /// Expression in the text grammar, e.g. "sum_z p(y|x,z) p(z)".
    #[arg(long)]
    formula: Option<String>,
    /// Intervened variables, `X=value` or just `X` for every value.
    #[arg(long = "do", value_delimiter = ',')]
    intervene: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    target: Vec<String>,
    /// Fixed values for free variables, `name=value`.
    #[arg(long, value_delimiter = ',')]
    bind: Vec<String>,
    /// Compare against graph surgery and print the difference.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct EquivArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct PatternArgs {
    graph: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    #[arg(long, conflicts_with = "run", required_unless_present = "run")]
    list: bool,
    #[arg(long)]
    run: bool,
    /// Only entries whose name contains this text.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    json: bool,
}

struct Ctx<'a> {
    out: &'a mut dyn Write,
    color: bool,
    // Set once the reader has gone away; later output is dropped.
    closed: bool,
}

impl Ctx<'_> {
    fn line(&mut self, s: impl AsRef<str>) -> Result<()> {
        if self.closed {
            return Ok(());
        }
        match writeln!(self.out, "{}", s.as_ref()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {
                self.closed = true;
                Ok(())
            }
            r => Ok(r?),
        }
    }

    fn json(&mut self, mut v: Value) -> Result<i32> {
        v.as_object_mut().expect("object").insert("schema".into(), json!(SCHEMA));
        let text = serde_json::to_string_pretty(&v).map_err(|e| Error::Internal(e.to_string()))?;
        self.line(text)?;
        Ok(0)
    }

    fn paint(&self, s: &str, good: bool) -> String {
        if self.color {
            format!("\x1b[{}m{s}\x1b[0m", if good { 32 } else { 31 })
        } else {
            s.to_string()
        }
    }
}

/// Entry point for the binary: real arguments and streams, color unless
/// `NO_COLOR` is set or standard output is not a terminal.
pub fn main() -> i32 {
    let color = std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = run_with(std::env::args_os(), &mut out, &mut std::io::stderr(), color);
    let _ = out.flush();
    code
}

/// Runs one command line (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, out, err, false)
}

fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let mut ctx = Ctx { out, color, closed: false };
    let result = match cli.command {
        Command::Dsep(a) => dsep(&mut ctx, a),
        Command::Identify(a) => cmd_identify(&mut ctx, a),
        Command::Eval(a) => eval(&mut ctx, a),
        Command::Equiv(a) => equiv(&mut ctx, a),
        Command::Pattern(a) => cmd_pattern(&mut ctx, a),
        Command::Corpus(a) => corpus(&mut ctx, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Internal(_)) {
                3
            } else {
                2
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { line, token, message } => {
            Error::Parse { line, token, message: format!("{}: {message}", path.display()) }
        }
        other => other,
    })
}

fn load_graph(path: &Path) -> Result<CausalGraph> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_graph_json(&text)
    } else {
        with_path(path, parse_graph(&text))
    }
}

fn load_model(path: &Path) -> Result<DiscreteModel> {
    with_path(path, parse_model(&read(path)?))
}

fn graph_label(g: &CausalGraph, cut_in: &NodeSet, cut_out: &NodeSet) -> String {
    let mut parts = Vec::new();
    if !cut_in.is_empty() {
        parts.push(format!("in: {}", g.names(cut_in).join(",")));
    }
    if !cut_out.is_empty() {
        parts.push(format!("out: {}", g.names(cut_out).join(",")));
    }
    if parts.is_empty() {
        "G".into()
    } else {
        format!("G[{}]", parts.join("; "))
    }
}

fn dsep(ctx: &mut Ctx, a: DsepArgs) -> Result<i32> {
    let g = load_graph(&a.graph)?;
    let (x, y, z) = (g.set(&a.x)?, g.set(&a.y)?, g.set(&a.given)?);
    let (cut_in, cut_out) = (g.set(&a.cut_incoming)?, g.set(&a.cut_outgoing)?);
    let m = g.mutilate(&cut_in, &cut_out);
    let separated = d_separated(&m, &x, &y, &z)?;
    let path = if separated { None } else { open_path(&m, &x, &y, &z)? };
    let path_text = path.as_ref().map(|p| p.render(&m));
    let statement = Statement::new(&g, &x, &y, &z).to_string();
    let label = graph_label(&g, &cut_in, &cut_out);
    if a.json {
        return ctx.json(json!({
            "command": "dsep",
            "statement": statement,
            "graph": label,
            "separated": separated,
            "path": path_text,
        }));
    }
    match path_text {
        None if separated => ctx.line(ctx.paint("SEPARATED", true))?,
        Some(p) => ctx.line(format!("{} {p}", ctx.paint("CONNECTED", false)))?,
        None => return Err(Error::Internal("connected sets without an open path".into())),
    }
    Ok(0)
}

fn guard_json(g: &Guard) -> Value {
    json!({
        "statement": g.statement.to_string(),
        "cut_incoming": g.cut_incoming,
        "cut_outgoing": g.cut_outgoing,
        "holds": g.holds,
        "text": g.to_string(),
    })
}

fn step_json(i: usize, s: &DerivationStep, latex: bool) -> Value {
    let r = |e: &Expr| if latex { render_latex(e) } else { render_text(e) };
    json!({
        "step": i + 1,
        "rule": s.rule.as_str(),
        "guard": s.guard.as_ref().map(guard_json),
        "before": r(&s.before),
        "after": r(&s.after),
    })
}

fn cmd_identify(ctx: &mut Ctx, a: IdentifyArgs) -> Result<i32> {
    let g = load_graph(&a.graph)?;
    let q = Query::from_names(g, &a.x, &a.y)?;
    let r = identify(&q, a.budget)?;
    let render = |e: &Expr| if a.latex { render_latex(e) } else { render_text(e) };
    let code = if r.status == Status::Identified { 0 } else { 1 };
    if a.json {
        ctx.json(json!({
            "command": "identify",
            "query": render_text(&q.target()),
            "status": r.status,
            "formula": r.formula.as_ref().map(render),
            "budget": r.budget,
            "budget_spent": r.budget_spent,
            "steps": r.steps,
            "verified_models": r.verified_models,
            "catalog_entry": r.catalog_entry,
            "derivation": r.derivation.iter().enumerate().map(|(i, s)| step_json(i, s, a.latex)).collect::<Vec<_>>(),
        }))?;
        return Ok(code);
    }
    ctx.line(ctx.paint(&r.status.to_string(), code == 0))?;
    match (&r.formula, r.status) {
        (Some(f), _) => {
            ctx.line(format!("{} = {}", render(&q.target()), render(f)))?;
            ctx.line(format!("{} rewrite steps; checked against {} random models", r.steps, r.verified_models))?;
            ctx.line("")?;
            for (i, s) in r.derivation.iter().enumerate() {
                match &s.guard {
                    Some(gd) => ctx.line(format!("{:>2}. {} by {gd}", i + 1, s.rule.as_str()))?,
                    None => ctx.line(format!("{:>2}. {}", i + 1, s.rule.as_str()))?,
                }
                ctx.line(format!("      {}", render(&s.before)))?;
                ctx.line(format!("    = {}", render(&s.after)))?;
            }
        }
        (None, Status::KnownNonIdentifiable) => {
            ctx.line(format!("the query graph matches catalog entry `{}`", r.catalog_entry.as_deref().unwrap_or("?")))?
        }
        (None, _) => ctx.line(format!("no derivation of {} within {} steps", render_text(&q.target()), r.budget))?,
    }
    Ok(code)
}

fn split_binding(s: &str) -> Result<(&str, Option<&str>)> {
    match s.split_once('=') {
        Some((n, v)) if !n.is_empty() && !v.is_empty() => Ok((n.trim(), Some(v.trim()))),
        None if !s.is_empty() => Ok((s.trim(), None)),
        _ => Err(Error::InvalidQuery(format!("expected `name` or `name=value`, got `{s}`"))),
    }
}

/// Every combination of values, each variable fixed or free.
fn combos(m: &DiscreteModel, vars: &[(String, Option<usize>)]) -> Result<Vec<Assignment>> {
    let mut out: Vec<Assignment> = vec![Vec::new()];
    for (name, fixed) in vars {
        let values: Vec<usize> = match fixed {
            Some(v) => vec![*v],
            None => (0..m.domain(name)?.len()).collect(),
        };
        out = out
            .into_iter()
            .flat_map(|a| {
                values.iter().map(move |&v| {
                    let mut b = a.clone();
                    b.push((name.clone(), v));
                    b
                })
            })
            .collect();
    }
    Ok(out)
}

fn show(m: &DiscreteModel, a: &Assignment) -> Result<String> {
    let mut parts = Vec::new();
    for (n, v) in a {
        parts.push(format!("{n}={}", m.domain(base_name(n))?[*v]));
    }
    Ok(parts.join(","))
}

fn parse_vars(m: &DiscreteModel, specs: &[String]) -> Result<Vec<(String, Option<usize>)>> {
    let mut out: Vec<(String, Option<usize>)> = Vec::new();
    for s in specs {
        let (name, value) = split_binding(s)?;
        m.graph().id(name)?;
        if out.iter().any(|(n, _)| n == name) {
            return Err(Error::InvalidQuery(format!("`{name}` given twice")));
        }
        let value = value.map(|v| m.value_index(name, v)).transpose()?;
        out.push((name.to_string(), value));
    }
    Ok(out)
}

fn decimal(r: &Rational) -> String {
    format!("{:.6}", r.to_f64())
}

struct Row {
    assignment: String,
    value: Rational,
    oracle: Option<Rational>,
}

fn eval(ctx: &mut Ctx, a: EvalArgs) -> Result<i32> {
    let m = load_model(&a.model)?;
    let dos = parse_vars(&m, &a.intervene)?;
    let targets = parse_vars(&m, &a.target)?;
    let binds = parse_vars(&m, &a.bind)?;
    if let Some(b) = binds.iter().find(|(_, v)| v.is_none()) {
        return Err(Error::InvalidQuery(format!("--bind {} needs a value", b.0)));
    }
    let ev = Evaluator::<Rational>::new(&m);
    let (title, rows) = match &a.formula {
        Some(text) => {
            let e = parse_expr(text)?;
            let mut vars: Vec<(String, Option<usize>)> = Vec::new();
            if a.check {
                if dos.is_empty() || targets.is_empty() {
                    return Err(Error::InvalidQuery("--check with --formula needs --do and --target".into()));
                }
                vars.extend(dos.iter().cloned());
                vars.extend(targets.iter().cloned());
                for (n, v) in &binds {
                    if let Some(slot) = vars.iter_mut().find(|(m, _)| m == n) {
                        slot.1 = *v;
                    }
                }
                if let Some(v) = e.free_vars().into_iter().find(|v| !vars.iter().any(|(n, _)| n == v)) {
                    return Err(Error::InvalidQuery(format!("free variable `{v}` is not a --do or --target variable")));
                }
            } else {
                for v in e.free_vars() {
                    let fixed = binds.iter().chain(&dos).chain(&targets).find(|(n, _)| n == &v).and_then(|(_, x)| *x);
                    vars.push((v, fixed));
                }
            }
            let mut rows = Vec::new();
            for assignment in combos(&m, &vars)? {
                let value = ev.eval(&e, &assignment)?;
                let oracle = if a.check {
                    let (xa, ya) = assignment.split_at(dos.len());
                    let ys: Vec<&str> = ya.iter().map(|(n, _)| n.as_str()).collect();
                    let idx: Vec<usize> = ya.iter().map(|(_, v)| *v).collect();
                    Some(m.do_marginal::<Rational, _>(&xa.to_vec(), &ys)?.get(&idx).clone())
                } else {
                    None
                };
                rows.push(Row { assignment: show(&m, &assignment)?, value, oracle });
            }
            (render_text(&e), rows)
        }
        None => {
            if targets.is_empty() {
                return Err(Error::InvalidQuery("eval needs --formula or --target".into()));
            }
            let mut rows = Vec::new();
            let tnames: Vec<&str> = targets.iter().map(|(n, _)| n.as_str()).collect();
            for xa in combos(&m, &dos)? {
                let dist = m.do_marginal::<Rational, _>(&xa, &tnames)?;
                for ya in combos(&m, &targets)? {
                    let idx: Vec<usize> = ya.iter().map(|(_, v)| *v).collect();
                    let value = dist.get(&idx).clone();
                    let oracle = if a.check {
                        if xa.len() != 1 {
                            return Err(Error::InvalidQuery(
                                "--check without --formula compares against the truncated factorization and takes one --do variable".into(),
                            ));
                        }
                        let t = m.truncated::<Rational>(&xa[0].0, xa[0].1)?.marginal(&tnames)?;
                        Some(t.get(&idx).clone())
                    } else {
                        None
                    };
                    let mut all = ya.clone();
                    all.extend(xa.iter().cloned());
                    rows.push(Row { assignment: show(&m, &all)?, value, oracle });
                }
            }
            let title = if dos.is_empty() {
                format!("p({})", tnames.join(","))
            } else {
                let d: Vec<&str> = dos.iter().map(|(n, _)| n.as_str()).collect();
                format!("p({}|do({}))", tnames.join(","), d.join(","))
            };
            (title, rows)
        }
    };
    let diff = |r: &Row| r.oracle.as_ref().map(|o| (&r.value - o).abs());
    let worst = rows.iter().filter_map(diff).max();
    let code = match &worst {
        Some(w) if *w != Rational::from_integer(0.into()) => 1,
        _ => 0,
    };
    if a.json {
        ctx.json(json!({
            "command": "eval",
            "expression": title,
            "rows": rows.iter().map(|r| json!({
                "assignment": r.assignment,
                "value": fmt_rational(&r.value),
                "decimal": r.value.to_f64(),
                "oracle": r.oracle.as_ref().map(fmt_rational),
                "difference": diff(r).as_ref().map(fmt_rational),
            })).collect::<Vec<_>>(),
            "max_difference": worst.as_ref().map(fmt_rational),
        }))?;
        return Ok(code);
    }
    ctx.line(title)?;
    let width = rows.iter().map(|r| r.assignment.len()).max().unwrap_or(0);
    for r in &rows {
        let mut line = format!("{:<width$}  {:>9}  {}", r.assignment, fmt_rational(&r.value), decimal(&r.value));
        if let (Some(o), Some(d)) = (&r.oracle, diff(r)) {
            line.push_str(&format!("  oracle {}  difference {}", fmt_rational(o), fmt_rational(&d)));
        }
        ctx.line(line.trim_end())?;
    }
    if let Some(w) = &worst {
        ctx.line(format!("max difference: {}", fmt_rational(w)))?;
    }
    Ok(code)
}

fn equiv(ctx: &mut Ctx, a: EquivArgs) -> Result<i32> {
    let (g1, g2) = (load_graph(&a.first)?, load_graph(&a.second)?);
    let witness = equivalence_witness(&g1, &g2)?;
    let code = if witness.is_none() { 0 } else { 1 };
    if a.json {
        ctx.json(json!({
            "command": "equiv",
            "equivalent": witness.is_none(),
            "witness": witness.as_ref().map(|w| w.to_string()),
        }))?;
        return Ok(code);
    }
    match witness {
        None => ctx.line(ctx.paint("EQUIVALENT", true))?,
        Some(w) => ctx.line(format!("{} {w}", ctx.paint("DISTINCT", false)))?,
    }
    Ok(code)
}

fn cmd_pattern(ctx: &mut Ctx, a: PatternArgs) -> Result<i32> {
    let g = load_graph(&a.graph)?;
    let p = pattern(&g)?;
    if a.json {
        let n = |i: usize| p.variables[i].clone();
        return ctx.json(json!({
            "command": "pattern",
            "directed": p.directed.iter().map(|&(t, h)| [n(t), n(h)]).collect::<Vec<_>>(),
            "undirected": p.undirected.iter().map(|&(x, y)| [n(x), n(y)]).collect::<Vec<_>>(),
            "members": p.members,
        }));
    }
    ctx.line(p.render())?;
    Ok(0)
}

fn describe(e: &Expectation) -> String {
    match e {
        Expectation::Backdoor { z } => format!("back-door over {{{}}}", z.join(",")),
        Expectation::Frontdoor { z } => format!("front-door over {{{}}}", z.join(",")),
        Expectation::Identified => "identified".into(),
        Expectation::ObservationalEqualsInterventional => "p(y|do(x)) = p(y|x)".into(),
        Expectation::BackdoorSets { admissible, inadmissible } => {
            let sets =
                |v: &Vec<Vec<&str>>| v.iter().map(|s| format!("{{{}}}", s.join(","))).collect::<Vec<_>>().join(" ");
            format!("admissible {} / not {}", sets(admissible), sets(inadmissible))
        }
        Expectation::KnownNonIdentifiable { .. } => "known non-identifiable".into(),
    }
}

fn selected(filter: &Option<String>) -> Vec<CatalogEntry> {
    catalog().into_iter().filter(|e| filter.as_ref().is_none_or(|f| e.name.contains(f.as_str()))).collect()
}

fn corpus(ctx: &mut Ctx, a: CorpusArgs) -> Result<i32> {
    let entries = selected(&a.filter);
    if a.list {
        let gone: Vec<(&str, &str)> = unavailable()
            .into_iter()
            .filter(|(n, _)| a.filter.as_ref().is_none_or(|f| n.contains(f.as_str())))
            .collect();
        if a.json {
            return ctx.json(json!({
                "command": "corpus",
                "entries": entries.iter().map(|e| json!({
                    "name": e.name,
                    "description": e.description,
                    "x": e.x,
                    "y": e.y,
                    "expectation": describe(&e.expectation),
                    "reconstructed": e.reconstructed,
                    "graph": e.graph,
                })).collect::<Vec<_>>(),
                "unavailable": gone.iter().map(|(n, r)| json!({"name": n, "reason": r})).collect::<Vec<_>>(),
            }));
        }
        let width = entries.iter().map(|e| e.name.len()).chain(gone.iter().map(|(n, _)| n.len())).max().unwrap_or(0);
        for e in &entries {
            let mark = if e.reconstructed { " (reconstructed)" } else { "" };
            ctx.line(format!("{:<width$}  {}{mark}  {}", e.name, describe(&e.expectation), e.description))?;
        }
        for (n, r) in &gone {
            ctx.line(format!("{n:<width$}  unavailable  {r}"))?;
        }
        return Ok(0);
    }
    let mut reports = Vec::new();
    for e in &entries {
        reports.push(run_entry(e)?);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let code = if failed == 0 { 0 } else { 1 };
    if a.json {
        ctx.json(json!({
            "command": "corpus",
            "reports": reports,
            "passed": reports.len() - failed,
            "failed": failed,
        }))?;
        return Ok(code);
    }
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &reports {
        let verdict = if r.passed { ctx.paint("PASS", true) } else { ctx.paint("FAIL", false) };
        let mut line = format!("{verdict} {:<width$}  {}", r.name, r.status);
        if let Some(f) = &r.formula {
            line.push_str(&format!("  {f}"));
        }
        if !r.passed {
            line.push_str(&format!("  ({})", r.detail));
        }
        ctx.line(line)?;
    }
    ctx.line(format!("{} passed, {failed} failed", reports.len() - failed))?;
    Ok(code)
}
