use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use zsomg::bounds::LipschitzMode;
use zsomg::hsvi::{extract_strategies, solve as run_hsvi, SolverConfig};
use zsomg::occupancy::initial_occupancy;
use zsomg::oracle::{best_response_value, normal_form, solve_matrix_game, Golden};
use zsomg::strategy::{evaluate_profile, StrategyFile};
use zsomg::{builtin, load_model, Error, Execution, Horizon, Player, PosgModel};

use crate::args::{EvalArgs, Lipschitz, ModelSource, OracleArgs, SolveArgs, ValidateArgs};
use crate::manifest::{git_blob_sha256, RunManifest};

/// Exit status for a failed command.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 2,
        Some(Error::ExplosionGuard { .. }) => 4,
        Some(Error::MissingRule { .. }) => 5,
        _ => 1,
    }
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

struct Loaded {
    model: PosgModel,
    label: String,
    hash: String,
}

fn load(source: &ModelSource, horizon: Option<usize>) -> Result<Loaded> {
    let (model, label) = match (&source.model, &source.builtin) {
        (Some(path), _) => {
            let m = load_model(path).with_context(|| format!("loading {}", path.display()))?;
            (m, path.display().to_string())
        }
        (None, Some(name)) => (builtin(name)?, format!("builtin:{name}")),
        (None, None) => unreachable!("clap requires a model source"),
    };
    let model = match horizon {
        Some(0) => return Err(Error::Config("horizon must be positive".into()).into()),
        Some(h) => model.with_horizon(Horizon::Finite(h)),
        None => model,
    };
    let hash = git_blob_sha256(model.to_canonical_json().as_bytes());
    Ok(Loaded { model, label, hash })
}

fn finite_horizon(m: &PosgModel) -> Result<usize> {
    m.horizon()
        .finite()
        .ok_or_else(|| Error::Config("an infinite-horizon model needs --horizon here".into()).into())
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn manifest<C: Serialize>(command: &str, loaded: &Loaded, config: &C, outputs: Vec<String>) -> Result<()> {
    if outputs.is_empty() {
        return Ok(());
    }
    RunManifest {
        command,
        model: loaded.label.clone(),
        model_hash: loaded.hash.clone(),
        config,
        outputs,
        version: env!("CARGO_PKG_VERSION"),
    }
    .write_all()
}

pub fn solve(a: &SolveArgs) -> Result<u8> {
    let loaded = load(&a.source, a.horizon)?;
    let m = &loaded.model;
    let cfg = SolverConfig {
        epsilon: a.epsilon,
        rho: a.rho,
        local_tol: a.local_tol,
        max_trials: a.max_trials,
        lipschitz: match a.lipschitz {
            Lipschitz::Static => LipschitzMode::Static,
            Lipschitz::Refined => LipschitzMode::Refined,
        },
        seed: a.seed,
        exec: exec(a.sequential),
        ..SolverConfig::default()
    };
    let result = run_hsvi(m, &cfg)?;
    let summary = serde_json::to_string_pretty(&result.summary())? + "\n";
    print!("{summary}");
    let mut outputs = Vec::new();
    if let Some(path) = &a.out {
        write(path, &summary)?;
        outputs.push(path.display().to_string());
    }
    if let Some(path) = &a.trace {
        write(path, &result.trace_csv())?;
        outputs.push(path.display().to_string());
    }
    if let Some(dir) = &a.strategies {
        std::fs::create_dir_all(dir)?;
        let (s1, s2) = extract_strategies(m, &result, &cfg)?;
        for (name, s) in [("p1.json", &s1), ("p2.json", &s2)] {
            let path = dir.join(name);
            write(&path, &(serde_json::to_string_pretty(&StrategyFile::from_strategy(m, s))? + "\n"))?;
            outputs.push(path.display().to_string());
        }
    }
    manifest("solve", &loaded, a, outputs)?;
    if result.converged {
        Ok(0)
    } else {
        eprintln!(
            "trial budget of {} exhausted with gap {:.6} > epsilon {}",
            a.max_trials, result.gap, a.epsilon
        );
        Ok(3)
    }
}

pub fn oracle(a: &OracleArgs) -> Result<u8> {
    let loaded = load(&a.source, a.horizon)?;
    let m = &loaded.model;
    let horizon = finite_horizon(m)?;
    let nf = normal_form(m, &initial_occupancy(m), horizon, exec(a.sequential))?;
    let sol = solve_matrix_game(&nf.game)?;
    let golden = Golden {
        model: m.name().to_string(),
        horizon,
        value: sol.value,
        row_mix: sol.row_mix,
        col_mix: sol.col_mix,
    };
    let text = serde_json::to_string_pretty(&golden)? + "\n";
    print!("{text}");
    if let Some(path) = &a.write_golden {
        write(path, &text)?;
        manifest("oracle", &loaded, a, vec![path.display().to_string()])?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct Evaluation {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_response_p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_response_p2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exploitability: Option<f64>,
}

fn read_strategy(path: &Path, m: &PosgModel, p: Player) -> Result<zsomg::strategy::BehavioralStrategy> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: StrategyFile = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(file.into_strategy(m, p)?)
}

pub fn eval(a: &EvalArgs) -> Result<u8> {
    let loaded = load(&a.source, a.horizon)?;
    let m = &loaded.model;
    let horizon = finite_horizon(m)?;
    let s1 = read_strategy(&a.p1, m, Player::One)?;
    let s2 = read_strategy(&a.p2, m, Player::Two)?;
    let o0 = initial_occupancy(m);
    let value = evaluate_profile(m, &o0, &s1, &s2)?;
    let mut e = Evaluation {
        value,
        best_response_p1: None,
        best_response_p2: None,
        exploitability: None,
    };
    if a.exploitability {
        let x = exec(a.sequential);
        let b1 = best_response_value(m, &o0, &s2, Player::One, horizon, x)?;
        let b2 = best_response_value(m, &o0, &s1, Player::Two, horizon, x)?;
        e.best_response_p1 = Some(b1);
        e.best_response_p2 = Some(b2);
        e.exploitability = Some(b1 - b2);
    }
    let text = serde_json::to_string_pretty(&e)? + "\n";
    print!("{text}");
    if let Some(path) = &a.out {
        write(path, &text)?;
        manifest("eval", &loaded, a, vec![path.display().to_string()])?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct ModelInfo<'a> {
    name: &'a str,
    states: usize,
    actions: [usize; 2],
    observations: [usize; 2],
    horizon: Option<usize>,
    gamma: f64,
    r_min: f64,
    r_max: f64,
    lambda_r: f64,
    hash: &'a str,
}

pub fn validate(a: &ValidateArgs) -> Result<u8> {
    let loaded = load(&a.source, None)?;
    let m = &loaded.model;
    m.validate()?;
    let rb = m.reward_bounds();
    let info = ModelInfo {
        name: m.name(),
        states: m.num_states(),
        actions: [m.num_actions(Player::One), m.num_actions(Player::Two)],
        observations: [m.num_observations(Player::One), m.num_observations(Player::Two)],
        horizon: m.horizon().finite(),
        gamma: m.gamma(),
        r_min: rb.r_min,
        r_max: rb.r_max,
        lambda_r: rb.lambda_r,
        hash: &loaded.hash,
    };
    print!("{}", serde_json::to_string_pretty(&info)? + "\n");
    if let Some(path) = &a.write_canonical {
        m.save(path)?;
        manifest("validate", &loaded, a, vec![path.display().to_string()])?;
    }
    Ok(0)
}
