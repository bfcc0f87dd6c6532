//! Learning and computation phases shared by `stabilize` and `experiment`.

use epsfc::distributions::size_interval;
use epsfc::game::check_single_peaked;
use epsfc::learning::{estimate_interval, learn_anonymous, learn_fhg, SampleRecord};
use epsfc::stabilizers::{stabilize_anonymous, stabilize_fhg, stabilize_single_peaked, EpsClass};
use epsfc::{CoalitionDistribution, Error, Game, HedonicGame, Partition, Result, SizeInterval};
use serde_json::{json, Value};

/// Where valuations come from.
pub enum Input<'a> {
    Game(&'a Game),
    Samples { n: usize, records: &'a [SampleRecord] },
}

pub struct Params<'a> {
    pub class: EpsClass,
    pub eps: f64,
    pub lambda: f64,
    pub alpha: Option<f64>,
    /// Size distribution used to place the interval when valuations are given.
    pub dist: &'a CoalitionDistribution,
    /// Size ordering for the single-peaked construction (1-based sizes).
    pub ordering: Option<Vec<usize>>,
}

pub struct Stabilized {
    pub partition: Partition,
    pub interval: Option<SizeInterval>,
    pub trace: Value,
}

pub fn stabilize(input: Input<'_>, params: &Params<'_>) -> Result<Stabilized> {
    let learned_from = match &input {
        Input::Game(_) => Value::Null,
        Input::Samples { records, .. } => json!(records.len()),
    };
    let (partition, interval, trace) = match params.class {
        EpsClass::Fhg => {
            let g = match input {
                Input::Game(Game::Fhg(g)) => g.clone(),
                Input::Game(Game::Anon(_)) => return Err(class_mismatch("fhg", "anon")),
                Input::Samples { n, records } => learn_fhg(n, records)?,
            };
            let (p, t) = stabilize_fhg(&g);
            (p, None, serde_json::to_value(t)?)
        }
        EpsClass::Anon | EpsClass::AnonSp => {
            let (p, interval, t) = match input {
                Input::Game(Game::Anon(g)) => {
                    let interval = size_interval(params.dist.mean_size(), params.lambda, params.eps, g.n());
                    let (p, t) = match params.class {
                        EpsClass::AnonSp => {
                            let ordering = params.ordering.clone().unwrap_or_else(|| (1..=g.n()).collect());
                            check_single_peaked(g, &ordering)
                                .map_err(|v| Error::InvalidGame(format!("not single-peaked: {v}")))?;
                            stabilize_single_peaked(g, &ordering, &interval)?
                        }
                        _ => stabilize_anonymous(g, &interval)?,
                    };
                    (p, interval, t)
                }
                Input::Game(Game::Fhg(_)) => return Err(class_mismatch(params.class.as_str(), "fhg")),
                Input::Samples { n, records } => {
                    let learned = learn_anonymous(n, records)?;
                    let interval = estimate_interval(&learned, params.lambda, params.eps, params.alpha)?;
                    let (p, t) = match params.class {
                        EpsClass::AnonSp => {
                            let ordering = params.ordering.clone().unwrap_or_else(|| (1..=n).collect());
                            stabilize_single_peaked(&learned, &ordering, &interval)?
                        }
                        _ => stabilize_anonymous(&learned, &interval)?,
                    };
                    (p, interval, t)
                }
            };
            (p, Some(interval), serde_json::to_value(t)?)
        }
    };
    let trace = json!({
        "class": params.class,
        "learned_from_samples": learned_from,
        "eps": params.eps,
        "lambda": params.lambda,
        "trace": trace,
    });
    Ok(Stabilized { partition, interval, trace })
}

fn class_mismatch(class: &str, kind: &str) -> Error {
    Error::InvalidParameter(format!("class {class} does not apply to a {kind} game"))
}
