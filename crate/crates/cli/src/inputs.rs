//! Loading command inputs. Every structured argument accepts either a path to
//! a JSON file or an inline JSON document starting with `{` or `[`.

use std::fmt::Debug;
use std::str::FromStr;

use furstenberg_core::boundary::{BoundaryError, CylinderMeasure, GeneratorMeasure};
use furstenberg_core::divergence::{ConvexGenerator, FiniteMeasure, MeasureFamily};
use furstenberg_core::free_group::{Letter, ReducedWord};
use furstenberg_core::majorant::{Majorant, VpGenerator, WeightedFunction};
use furstenberg_core::walk::AnySequence;
use serde::de::DeserializeOwned;

use crate::error::CliError;

pub fn read_json(field: &str, arg: &str) -> Result<serde_json::Value, CliError> {
    let trimmed = arg.trim_start();
    let (text, source) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        (arg.to_string(), format!("--{field} (inline)"))
    } else {
        let text = std::fs::read_to_string(arg).map_err(|e| CliError::Parse {
            path: arg.to_string(),
            message: e.to_string(),
        })?;
        (text, arg.to_string())
    };
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: source,
        message: e.to_string(),
    })
}

fn decode<T: DeserializeOwned>(field: &str, value: serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::validation(field, e))
}

/// `uniform:<d>` or a JSON generating measure.
pub fn generator_measure(field: &str, arg: &str) -> Result<GeneratorMeasure, CliError> {
    if let Some(d) = arg.strip_prefix("uniform:") {
        let d: u32 = d
            .parse()
            .map_err(|_| CliError::validation(field, format!("bad rank in '{arg}'")))?;
        if d < 2 {
            return Err(CliError::from_core(field, BoundaryError::RankTooSmall(d)));
        }
        return Ok(GeneratorMeasure::uniform(d));
    }
    let mu: GeneratorMeasure = decode(field, read_json(field, arg)?)?;
    if mu.rank() < 2 {
        return Err(CliError::from_core(
            field,
            BoundaryError::RankTooSmall(mu.rank()),
        ));
    }
    Ok(mu)
}

pub fn finite_measure<K>(field: &str, arg: &str) -> Result<FiniteMeasure<K>, CliError>
where
    K: Ord + Clone + Debug + DeserializeOwned,
{
    let m: FiniteMeasure<K> = decode(field, read_json(field, arg)?)?;
    m.validate().map_err(|e| CliError::from_core(field, e))?;
    Ok(m)
}

pub fn measure_family(field: &str, arg: &str) -> Result<MeasureFamily, CliError> {
    let fam: MeasureFamily = decode(field, read_json(field, arg)?)?;
    for m in std::iter::once(&fam.base)
        .chain(fam.translates.values())
        .chain(std::iter::once(&fam.lambda))
    {
        m.validate().map_err(|e| CliError::from_core(field, e))?;
    }
    fam.validate().map_err(|e| CliError::from_core(field, e))?;
    Ok(fam)
}

pub fn cylinder_measure(
    field: &str,
    arg: &str,
    mu: Option<&GeneratorMeasure>,
) -> Result<CylinderMeasure, CliError> {
    CylinderMeasure::from_json_value(read_json(field, arg)?, mu)
        .map_err(|e| CliError::from_core(field, e))
}

pub fn sequence(field: &str, arg: &str) -> Result<AnySequence, CliError> {
    AnySequence::from_json_value(read_json(field, arg)?).map_err(|e| CliError::from_core(field, e))
}

pub fn majorant(field: &str, arg: &str) -> Result<Majorant, CliError> {
    decode(field, read_json(field, arg)?)
}

pub fn weighted_function(field: &str, arg: &str) -> Result<WeightedFunction, CliError> {
    decode(field, read_json(field, arg)?)
}

pub fn convex_generator(field: &str, arg: &str) -> Result<ConvexGenerator, CliError> {
    ConvexGenerator::from_str(arg).map_err(|e| CliError::from_core(field, e))
}

pub fn vp_generator(field: &str, arg: &str) -> Result<VpGenerator, CliError> {
    decode(field, serde_json::Value::String(arg.to_string()))
}

/// Comma-joined signed letters, reduced on parse.
pub fn word(field: &str, arg: &str, rank: u32) -> Result<ReducedWord, CliError> {
    ReducedWord::parse_key(arg, rank).map_err(|e| CliError::from_core(field, e))
}

pub fn letter(field: &str, arg: Letter, rank: u32) -> Result<Letter, CliError> {
    ReducedWord::generator(rank, arg)
        .map(|_| arg)
        .map_err(|e| CliError::from_core(field, e))
}
