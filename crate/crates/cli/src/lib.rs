//! Command dispatch for the `ctxdbn` binary.
//!
//! [`run`] is a pure function of the request and the knowledge-base text,
//! so identical invocations produce identical bytes. Exit codes: 0 on
//! success, 1 when a query cannot be answered, 2 when the knowledge base,
//! the request or one of its arguments does not parse or validate.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use ctxdbn::context::satisfying_worlds;
use ctxdbn::kbformat::{parse_gci, parse_kb};
use ctxdbn::markov::stationary_residual;
use ctxdbn::reasoner::DEFAULT_HORIZON;
use ctxdbn::{
    entails, Context, Error, EventualKind, KnowledgeBase, Reasoner, TimedEvidence,
    World, TOLERANCE,
};

pub const DEFAULT_PRECISION: usize = 6;
pub const MAX_PRECISION: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Parse and validate the knowledge base.
    Check,
    /// Decide whether the ontology restricted to `--world` entails the query.
    Entail,
    /// Print the context formula of the query.
    ContextFormula,
    /// Probability of the query under the initial network.
    Prob,
    /// Probability that the query holds at `--time`.
    ProbAt,
    /// Probability that the query holds at some time in `1..=--time`.
    ProbWithin,
    /// Limit behaviour of the query.
    ProbEventually,
    /// Recurrent classes and stationary distributions of the chain.
    Stationary,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Entail => "entail",
            Command::ContextFormula => "context-formula",
            Command::Prob => "prob",
            Command::ProbAt => "prob-at",
            Command::ProbWithin => "prob-within",
            Command::ProbEventually => "prob-eventually",
            Command::Stationary => "stationary",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryRequest {
    pub command: Command,
    pub kb: PathBuf,
    pub query: Option<String>,
    pub time: Option<usize>,
    pub horizon: Option<usize>,
    pub evidence: Option<String>,
    pub given: Option<String>,
    pub world: Option<String>,
    pub oracle: bool,
    pub format: Format,
    pub precision: usize,
}

impl QueryRequest {
    pub fn new(command: Command, kb: impl Into<PathBuf>) -> Self {
        QueryRequest {
            command,
            kb: kb.into(),
            query: None,
            time: None,
            horizon: None,
            evidence: None,
            given: None,
            world: None,
            oracle: false,
            format: Format::Text,
            precision: DEFAULT_PRECISION,
        }
    }

    /// Rejects missing and unsupported flags for the command.
    pub fn validate(&self) -> Result<(), String> {
        use Command::*;
        let c = self.command;
        let needs_query = !matches!(c, Check | Stationary);
        if needs_query && self.query.is_none() {
            return Err(format!("`{}` requires --query", c.name()));
        }
        if matches!(c, ProbAt | ProbWithin) && self.time.is_none() {
            return Err(format!("`{}` requires --time", c.name()));
        }
        if c == Entail && self.world.is_none() {
            return Err("`entail` requires --world".into());
        }
        let allowed = |flag: &str, ok: bool, set: bool| {
            if set && !ok {
                Err(format!("`{}` does not take {flag}", c.name()))
            } else {
                Ok(())
            }
        };
        allowed("--query", needs_query || c == Stationary, self.query.is_some())?;
        allowed("--time", matches!(c, ProbAt | ProbWithin), self.time.is_some())?;
        allowed("--horizon", c == ProbEventually, self.horizon.is_some())?;
        allowed("--evidence", c == ProbAt, self.evidence.is_some())?;
        allowed("--given", c == Prob, self.given.is_some())?;
        allowed("--world", c == Entail, self.world.is_some())?;
        if self.time == Some(0) || self.horizon == Some(0) {
            return Err("time and horizon start at 1".into());
        }
        if self.precision > MAX_PRECISION {
            return Err(format!("--precision is at most {MAX_PRECISION}"));
        }
        Ok(())
    }
}

/// What the binary prints and returns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code: 0,
        }
    }

    fn fail(code: i32, stderr: String) -> Self {
        Outcome {
            stdout: String::new(),
            stderr,
            code,
        }
    }
}

enum Failure {
    /// The query cannot be answered (exit 1).
    Query(String),
    /// Bad input (exit 2).
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Query(e.to_string())
    }
}

fn input(e: impl ToString) -> Failure {
    Failure::Input(e.to_string())
}

/// Reads the knowledge base named by the request and runs it.
pub fn run(req: &QueryRequest) -> Outcome {
    match std::fs::read_to_string(&req.kb) {
        Ok(text) => run_on(req, &text),
        Err(e) => Outcome::fail(2, format!("error: cannot read {}: {e}\n", req.kb.display())),
    }
}

/// Runs a request against knowledge-base text.
pub fn run_on(req: &QueryRequest, kb_text: &str) -> Outcome {
    if let Err(e) = req.validate() {
        return Outcome::fail(2, format!("error: {e}\n"));
    }
    let kb = match parse_kb(kb_text) {
        Ok(kb) => kb,
        Err(errors) => {
            let mut msg = String::new();
            for d in &errors.0 {
                let _ = writeln!(msg, "{}:{d}", req.kb.display());
            }
            return Outcome::fail(2, msg);
        }
    };
    match dispatch(req, &kb) {
        Ok(out) => Outcome::ok(out),
        Err(Failure::Query(m)) => Outcome::fail(1, format!("error: {m}\n")),
        Err(Failure::Input(m)) => Outcome::fail(2, format!("error: {m}\n")),
    }
}

/// Fixed-precision rendering shared by text and JSON output.
pub fn render_prob(p: f64, precision: usize) -> String {
    let p = if p.abs() < 0.5 * 10f64.powi(-(precision as i32)) {
        0.0
    } else {
        p
    };
    format!("{p:.precision$}")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// A flat JSON object whose values are already rendered.
struct JsonObject(Vec<(&'static str, String)>);

impl JsonObject {
    fn new() -> Self {
        JsonObject(Vec::new())
    }

    fn raw(mut self, key: &'static str, value: String) -> Self {
        self.0.push((key, value));
        self
    }

    fn str(self, key: &'static str, value: &str) -> Self {
        self.raw(key, json_str(value))
    }

    fn render(&self) -> String {
        let body = self
            .0
            .iter()
            .map(|(k, v)| format!("{}: {v}", json_str(k)))
            .collect::<Vec<_>>()
            .join(", ");
        format!("{{{body}}}")
    }
}

fn agree(what: &str, fast: f64, oracle: f64) -> Result<(), Failure> {
    if (fast - oracle).abs() <= TOLERANCE {
        Ok(())
    } else {
        Err(Failure::Query(format!(
            "oracle disagreement on {what}: {fast:e} vs {oracle:e}"
        )))
    }
}

fn dispatch(req: &QueryRequest, kb: &KnowledgeBase) -> Result<String, Failure> {
    let reasoner = Reasoner::new(kb);
    let vars = kb.vars();
    let prec = req.precision;
    let p = |x: f64| render_prob(x, prec);
    let json = req.format == Format::Json;
    let query = match &req.query {
        Some(q) => Some(parse_gci(q).map_err(input)?),
        None => None,
    };
    let compiled = query.as_ref().map(|q| reasoner.compile(q));
    let mut out = String::new();
    match req.command {
        Command::Check => {
            if json {
                out = JsonObject::new()
                    .str("status", "ok")
                    .raw("variables", vars.len().to_string())
                    .raw("axioms", kb.ontology().axioms().len().to_string())
                    .render();
            } else {
                out.push_str("OK");
            }
        }
        Command::Entail => {
            let q = query.as_ref().expect("validated");
            let w = World::parse(req.world.as_deref().expect("validated"), vars).map_err(input)?;
            let entailed = entails(&kb.ontology().restrict(w), q);
            if req.oracle {
                let phi = &compiled.as_ref().expect("validated").formula;
                if phi.eval(w) != entailed {
                    return Err(Failure::Query(format!(
                        "oracle disagreement on entailment in world {}",
                        w.render(vars)
                    )));
                }
            }
            if json {
                out = JsonObject::new()
                    .raw("entailed", entailed.to_string())
                    .str("world", &w.render(vars))
                    .render();
            } else {
                out.push_str(if entailed { "true" } else { "false" });
            }
        }
        Command::ContextFormula => {
            let c = compiled.as_ref().expect("validated");
            if req.oracle {
                let cap = reasoner.limits().enumeration_vars;
                let fast = satisfying_worlds(&c.formula, vars, cap)?;
                let slow = kb.ontology().entailing_worlds(&c.query, cap)?;
                if fast != slow {
                    return Err(Failure::Query(
                        "oracle disagreement: context formula and per-world entailment differ".into(),
                    ));
                }
            }
            let text = c.formula.render(vars);
            if json {
                let disjuncts = serde_json::to_string(&c.formula.literal_lists(vars))
                    .expect("string lists always serialize");
                out = JsonObject::new()
                    .str("formula", &text)
                    .raw("disjuncts", disjuncts)
                    .render();
            } else {
                out = text;
            }
        }
        Command::Prob => {
            let c = compiled.as_ref().expect("validated");
            let (value, given) = match &req.given {
                None => {
                    let v = reasoner.prob(c)?;
                    if req.oracle {
                        agree("prob", v, reasoner.prob_by_entailment(&c.query)?)?;
                    }
                    (v, None)
                }
                Some(text) => {
                    let kappa = Context::parse(text, vars).map_err(input)?;
                    let v = reasoner.prob_given(c, kappa)?;
                    if req.oracle {
                        agree("prob --given", v, given_by_entailment(kb, &c.query, kappa)?)?;
                    }
                    (v, Some(kappa.render(vars)))
                }
            };
            if json {
                let mut o = JsonObject::new().raw("probability", p(value));
                if let Some(g) = &given {
                    o = o.str("given", g);
                }
                out = o.render();
            } else {
                out = p(value);
            }
        }
        Command::ProbAt => {
            let c = compiled.as_ref().expect("validated");
            let t = req.time.expect("validated");
            let evidence = match &req.evidence {
                Some(text) => Some(TimedEvidence::parse(text, vars).map_err(input)?),
                None => None,
            };
            let value = match &evidence {
                None => {
                    let v = reasoner.prob_at(c, t)?;
                    if req.oracle {
                        agree("prob-at", v, reasoner.prob_at_by_entailment(&c.query, t)?)?;
                    }
                    v
                }
                Some(e) => {
                    let v = reasoner.prob_at_evidence(c, t, e)?;
                    if req.oracle {
                        agree("prob-at --evidence", v, reasoner.prob_at_evidence_by_elimination(c, t, e)?)?;
                    }
                    v
                }
            };
            if json {
                let mut o = JsonObject::new()
                    .raw("probability", p(value))
                    .raw("time", t.to_string());
                if let Some(e) = &evidence {
                    o = o.str("evidence", &e.render(vars));
                }
                out = o.render();
            } else {
                out = p(value);
            }
        }
        Command::ProbWithin => {
            let c = compiled.as_ref().expect("validated");
            let t = req.time.expect("validated");
            let v = reasoner.prob_within(c, t)?;
            if req.oracle {
                agree("prob-within", v, reasoner.prob_within_oracle(c, t)?)?;
            }
            if json {
                out = JsonObject::new()
                    .raw("probability", p(v))
                    .raw("time", t.to_string())
                    .render();
            } else {
                out = p(v);
            }
        }
        Command::ProbEventually => {
            let c = compiled.as_ref().expect("validated");
            let horizon = req.horizon.unwrap_or(DEFAULT_HORIZON);
            let r = reasoner.prob_eventually(c, horizon)?;
            if req.oracle {
                agree("lower bound", r.lower_bound, reasoner.prob_within_oracle(c, horizon)?)?;
                if (r.delta_value > 0.0) != (r.kind == EventualKind::CertainOne) {
                    return Err(Failure::Query(
                        "oracle disagreement: delta sign and stationary support differ".into(),
                    ));
                }
            }
            let kind = match r.kind {
                EventualKind::CertainOne => "certain",
                EventualKind::Indeterminate => "indeterminate",
            };
            let probability = r.probability().map_or_else(|| "null".to_string(), p);
            if json {
                out = JsonObject::new()
                    .str("kind", kind)
                    .raw("probability", probability)
                    .raw("delta", p(r.delta_value))
                    .raw("lower_bound", p(r.lower_bound))
                    .raw("horizon", horizon.to_string())
                    .render();
            } else {
                let _ = writeln!(out, "kind: {kind}");
                let _ = writeln!(out, "probability: {}", r.probability().map_or("unknown".into(), p));
                let _ = writeln!(out, "delta: {}", p(r.delta_value));
                let _ = writeln!(out, "lower_bound: {}", p(r.lower_bound));
                let _ = write!(out, "horizon: {horizon}");
            }
        }
        Command::Stationary => {
            let analysis = reasoner.analysis()?;
            let m = reasoner.transition_matrix()?;
            if req.oracle {
                for class in &analysis.recurrent {
                    let res = stationary_residual(m, &class.stationary);
                    if res > TOLERANCE {
                        return Err(Failure::Query(format!(
                            "oracle disagreement: stationary residual {res:e}"
                        )));
                    }
                }
            }
            let n = vars.len();
            let delta = compiled.as_ref().map(|c| analysis.delta(&c.formula));
            if json {
                let classes: Vec<String> = analysis
                    .recurrent
                    .iter()
                    .map(|class| {
                        let dist = class
                            .states
                            .iter()
                            .map(|&s| {
                                let w = World::from_index(s, n);
                                format!("{}: {}", json_str(&w.render(vars)), p(class.stationary.prob(w)))
                            })
                            .collect::<Vec<_>>()
                            .join(", ");
                        JsonObject::new()
                            .raw("period", class.period.to_string())
                            .raw("stationary", format!("{{{dist}}}"))
                            .render()
                    })
                    .collect();
                let mut o = JsonObject::new()
                    .raw("irreducible", analysis.irreducible.to_string())
                    .raw("aperiodic", analysis.aperiodic.to_string())
                    .raw("classes", format!("[{}]", classes.join(", ")));
                if let Some(d) = delta {
                    o = o.raw("delta", p(d));
                }
                out = o.render();
            } else {
                let _ = writeln!(out, "irreducible: {}", analysis.irreducible);
                let _ = write!(out, "aperiodic: {}", analysis.aperiodic);
                for (i, class) in analysis.recurrent.iter().enumerate() {
                    let _ = write!(out, "\nclass {} (period {}):", i + 1, class.period);
                    for &s in &class.states {
                        let w = World::from_index(s, n);
                        let _ = write!(out, "\n  {} {}", w.render(vars), p(class.stationary.prob(w)));
                    }
                }
                if let Some(d) = delta {
                    let _ = write!(out, "\ndelta: {}", p(d));
                }
            }
        }
    }
    out.push('\n');
    Ok(out)
}

/// `P(c | κ)` summed world by world with classical entailment.
fn given_by_entailment(kb: &KnowledgeBase, query: &ctxdbn::Gci, kappa: Context) -> Result<f64, Failure> {
    let bn = kb.dbn().initial();
    let mut joint = 0.0;
    let mut total = 0.0;
    for w in kb.vars().worlds().filter(|w| kappa.holds_in(*w)) {
        let pw = bn.world_prob(w);
        total += pw;
        if entails(&kb.ontology().restrict(w), query) {
            joint += pw;
        }
    }
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityCondition.into());
    }
    Ok(joint / total)
}
