use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};

use qtruss_core::pipeline::PipelineParams;
use qtruss_core::solvers::SamplerParams;
use qtruss_core::symfem::ObjectiveKind;
use qtruss_core::truss::{builtin_problem, load_problem, TrussProblem};

/// Everything a subcommand needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub problem: TrussProblem,
    pub objective: ObjectiveKind,
    pub pipeline: PipelineParams,
    pub sampler: SamplerParams,
    pub repeat: usize,
    pub out: Option<PathBuf>,
}

/// A builtin name, or a path to a problem JSON file when one exists there.
pub fn resolve_problem(arg: &str) -> Result<(String, TrussProblem)> {
    let path = Path::new(arg);
    if path.is_file() {
        let p = load_problem(path).with_context(|| format!("loading problem file {}", path.display()))?;
        let name = path.file_stem().map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok((name, p));
    }
    let p = builtin_problem(arg)?;
    Ok((arg.trim().to_ascii_lowercase().replace('-', "_"), p))
}

/// Applies a `--params` document on top of the per-benchmark defaults.
/// Top-level keys override [`PipelineParams`]; an optional `sampler` object
/// overrides [`SamplerParams`].
pub fn apply_overrides(pipeline: &mut PipelineParams, sampler: &mut SamplerParams, text: &str) -> Result<()> {
    let Value::Object(mut doc) = serde_json::from_str::<Value>(text).context("params file is not valid JSON")? else {
        bail!("params file must hold a JSON object");
    };
    if let Some(s) = doc.remove("sampler") {
        let Value::Object(s) = s else { bail!("\"sampler\" must be a JSON object") };
        *sampler = merged(&*sampler, s).context("invalid sampler parameters")?;
    }
    *pipeline = merged(&*pipeline, doc).context("invalid pipeline parameters")?;
    Ok(())
}

fn merged<T: serde::Serialize + serde::de::DeserializeOwned>(base: &T, overrides: Map<String, Value>) -> Result<T> {
    let Value::Object(mut fields) = serde_json::to_value(base)? else {
        unreachable!("parameter structs serialize to objects")
    };
    fields.extend(overrides);
    Ok(serde_json::from_value(Value::Object(fields))?)
}
