//! Flag-value grammars: cost specifications, initial data, grids, and the
//! function families of the `classf` subcommand.
//!
//! Costs use `pow:p=<real>[,scale=<real>]` (scale defaults to 1). Custom
//! costs are available through the library API only, which keeps the CLI
//! surface closed and testable.

use weakot::classf::{MonotoneMap, SmoothFunctionND, VectorFieldND};
use weakot::costs::make_power_cost;
use weakot::{ConvexFunction64, CostSpec64, Grid64, SmoothFunction64, VectorField64};

use crate::CliError;

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Splits `name:key=val,key=val` into the name and its key/value pairs.
type SpecParams<'a> = Vec<(&'a str, &'a str)>;

fn split_spec(spec: &str) -> Result<(&str, SpecParams<'_>), CliError> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n, r),
        None => (spec, ""),
    };
    let mut pairs = Vec::new();
    if !rest.is_empty() {
        for part in rest.split(',') {
            match part.split_once('=') {
                Some((k, v)) => pairs.push((k, v)),
                None => return usage(format!("malformed parameter `{part}` in `{spec}`")),
            }
        }
    }
    Ok((name, pairs))
}

fn parse_real(spec: &str, key: &str, val: &str) -> Result<f64, CliError> {
    val.parse::<f64>().map_err(|_| {
        CliError::Usage(format!(
            "parameter {key} of `{spec}` is not a number: {val}"
        ))
    })
}

/// Parses a cost: `pow:p=2`, `pow:p=4,scale=0.25`.
pub fn parse_cost(spec: &str) -> Result<CostSpec64, CliError> {
    let (name, pairs) = split_spec(spec)?;
    match name {
        "pow" => {
            let mut p = None;
            let mut scale = 1.0;
            for (k, v) in pairs {
                match k {
                    "p" => p = Some(parse_real(spec, k, v)?),
                    "scale" => scale = parse_real(spec, k, v)?,
                    _ => return usage(format!("unknown cost parameter `{k}` in `{spec}`")),
                }
            }
            let p = match p {
                Some(p) => p,
                None => return usage(format!("cost `{spec}` is missing p")),
            };
            make_power_cost(p, scale).map_err(|e| CliError::Usage(format!("cost `{spec}`: {e}")))
        }
        other => usage(format!(
            "unknown cost family `{other}` (expected pow:p=..,scale=..)"
        )),
    }
}

/// Parses convex initial data for the Hopf-Lax commands:
/// `pow:p=2,scale=0.5`, `linear:slope=1,intercept=0`, `softplus`,
/// `const:c=0`.
pub fn parse_datum(spec: &str) -> Result<ConvexFunction64, CliError> {
    let (name, pairs) = split_spec(spec)?;
    match name {
        "pow" => {
            let mut p = None;
            let mut scale = 1.0;
            for (k, v) in pairs {
                match k {
                    "p" => p = Some(parse_real(spec, k, v)?),
                    "scale" => scale = parse_real(spec, k, v)?,
                    _ => return usage(format!("unknown parameter `{k}` in `{spec}`")),
                }
            }
            let p = match p {
                Some(p) => p,
                None => return usage(format!("datum `{spec}` is missing p")),
            };
            ConvexFunction64::power_abs(p, scale)
                .map_err(|e| CliError::Usage(format!("datum `{spec}`: {e}")))
        }
        "linear" => {
            let mut slope = 0.0;
            let mut intercept = 0.0;
            for (k, v) in pairs {
                match k {
                    "slope" => slope = parse_real(spec, k, v)?,
                    "intercept" => intercept = parse_real(spec, k, v)?,
                    _ => return usage(format!("unknown parameter `{k}` in `{spec}`")),
                }
            }
            Ok(ConvexFunction64::linear(slope, intercept))
        }
        "softplus" => Ok(ConvexFunction64::softplus()),
        "const" => {
            let mut c = 0.0;
            for (k, v) in pairs {
                match k {
                    "c" => c = parse_real(spec, k, v)?,
                    _ => return usage(format!("unknown parameter `{k}` in `{spec}`")),
                }
            }
            Ok(ConvexFunction64::constant(c))
        }
        other => usage(format!(
            "unknown datum family `{other}` (expected pow | linear | softplus | const)"
        )),
    }
}

/// Parses `min:max:step` into a grid.
pub fn parse_grid(spec: &str) -> Result<Grid64, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return usage(format!("grid `{spec}` must be min:max:step"));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
    let nums = nums.map_err(|_| CliError::Usage(format!("grid `{spec}` has non-numeric parts")))?;
    Grid64::from_range(nums[0], nums[1], nums[2])
        .map_err(|e| CliError::Usage(format!("grid `{spec}`: {e}")))
}

/// Parses a semicolon-separated coordinate vector `a;b;...`.
pub fn parse_vector(spec: &str) -> Result<Vec<f64>, CliError> {
    let vals: Result<Vec<f64>, _> = spec.split(';').map(|p| p.parse::<f64>()).collect();
    vals.map_err(|_| CliError::Usage(format!("vector `{spec}` has non-numeric parts")))
}

/// Parses the `classf` function families:
/// `linear:coeffs=1;0`, `sqnorm:a=1`, `quadlin:a=1,coeffs=1;0`,
/// `radial:profile=square|cosh`, `diag:coeffs=1;2`.
pub fn parse_nd_function(spec: &str, dim: usize) -> Result<SmoothFunction64, CliError> {
    let (name, pairs) = split_spec(spec)?;
    let find = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    match name {
        "linear" => {
            let coeffs = parse_vector(find("coeffs").unwrap_or("1"))?;
            if coeffs.len() != dim {
                return usage(format!("linear coeffs must have {dim} entries"));
            }
            Ok(SmoothFunctionND::linear_form(coeffs))
        }
        "sqnorm" => {
            let a = parse_real(spec, "a", find("a").unwrap_or("1"))?;
            Ok(SmoothFunctionND::quad_plus_linear(a, vec![0.0; dim]))
        }
        "quadlin" => {
            let a = parse_real(spec, "a", find("a").unwrap_or("1"))?;
            let coeffs = parse_vector(find("coeffs").unwrap_or("1;0"))?;
            if coeffs.len() != dim {
                return usage(format!("quadlin coeffs must have {dim} entries"));
            }
            Ok(SmoothFunctionND::quad_plus_linear(a, coeffs))
        }
        "radial" => match find("profile").unwrap_or("square") {
            "square" => Ok(SmoothFunctionND::radial(
                dim,
                |s: f64| s * s,
                |s| 2.0 * s,
                |_| 2.0,
            )),
            "cosh" => Ok(SmoothFunctionND::radial(
                dim,
                |s: f64| s.cosh() - 1.0,
                |s: f64| s.sinh(),
                |s: f64| s.cosh(),
            )),
            other => usage(format!("unknown radial profile `{other}` (square | cosh)")),
        },
        "diag" => {
            let coeffs = parse_vector(find("coeffs").unwrap_or("1;1"))?;
            if coeffs.len() != dim {
                return usage(format!("diag coeffs must have {dim} entries"));
            }
            let mat: Vec<Vec<f64>> = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| if i == j { coeffs[i] } else { 0.0 })
                        .collect()
                })
                .collect();
            SmoothFunctionND::quadratic_form(mat)
                .map_err(|e| CliError::Usage(format!("diag `{spec}`: {e}")))
        }
        other => usage(format!(
            "unknown function family `{other}` (linear | sqnorm | quadlin | radial | diag)"
        )),
    }
}

/// Parses the monotone profile for `classf --op potential`:
/// `identity` or `power:p=K`.
pub fn parse_gmap(spec: &str) -> Result<MonotoneMap<f64>, CliError> {
    let (name, pairs) = split_spec(spec)?;
    match name {
        "identity" | "id" => Ok(MonotoneMap::identity()),
        "power" => {
            let mut p = 2.0;
            for (k, v) in pairs {
                match k {
                    "p" => p = parse_real(spec, k, v)?,
                    _ => return usage(format!("unknown parameter `{k}` in `{spec}`")),
                }
            }
            Ok(MonotoneMap::power(p))
        }
        other => usage(format!("unknown profile `{other}` (identity | power:p=..)")),
    }
}

/// Parses the monotone map for `classf --op verify`:
/// `identity`, `contraction:s=0.5`, or `shift:c=a;b`.
pub fn parse_map(spec: &str, dim: usize) -> Result<VectorField64, CliError> {
    let (name, pairs) = split_spec(spec)?;
    let find = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    match name {
        "identity" | "id" => Ok(VectorFieldND::from_fn(dim, |x: &[f64]| x.to_vec())),
        "contraction" => {
            let s = parse_real(spec, "s", find("s").unwrap_or("0.5"))?;
            Ok(VectorFieldND::from_fn(dim, move |x: &[f64]| {
                x.iter().map(|v| (1.0 - s) * v).collect()
            }))
        }
        "shift" => {
            let c = parse_vector(find("c").unwrap_or("0;0"))?;
            if c.len() != dim {
                return usage(format!("shift vector must have {dim} entries"));
            }
            Ok(VectorFieldND::from_fn(dim, move |x: &[f64]| {
                x.iter().zip(&c).map(|(v, ci)| v - ci).collect()
            }))
        }
        other => usage(format!(
            "unknown map `{other}` (identity | contraction:s=.. | shift:c=..)"
        )),
    }
}
