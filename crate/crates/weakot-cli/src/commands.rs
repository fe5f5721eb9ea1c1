//! Subcommand dispatch.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use weakot::classf::{
    build_potential, class_f_test, curl_residual, verify_map_optimality, BoxGrid, VectorFieldND,
};
use weakot::costs::{split_proportional, CostSpec, CostSplit};
use weakot::hopflax::{hopf_lax, split_cost, GridFunction};
use weakot::transport::{classical_cost, duality_lower_bound, equality_certificate, weak_cost};
use weakot::DiscreteMeasure64;

use crate::format::{grid_to_csv, measure_to_file, parse_measure_spec};
use crate::grammar::{
    parse_cost, parse_datum, parse_gmap, parse_grid, parse_map, parse_nd_function, parse_vector,
};
use crate::ic::{default_family, ic_check};
use crate::report::{coupling_checks, measure_value, plan_value, scalar_field, Check, Report};
use crate::CliError;

const USAGE: &str = "weakot — weak and classical transport costs on the line

Usage: weakot <subcommand> [flags]

Subcommands:
  transport       classical quantile-coupling cost        (--mu --nu --cost)
  weak            weak barycentric cost and optimal nu1   (--mu --nu --cost)
  check-equality  weak-equals-classical certificate       (--mu --nu)
  hopflax         Q_t f on a grid, CSV output             (--f --cost --t --grid)
  split           f = f1 + f2 along a cost split          (--f --cost --lambda | --alpha --beta)
  classf          membership / potential / map checks     (--op test|potential|verify ...)
  ic              infimum-convolution inequality check    (--mu --cost [--t])

Common flags:
  --mu SPEC --nu SPEC    measure file path or inline {\"atoms\":[..],\"weights\":[..]?}
  --cost SPEC            cost grammar pow:p=<real>[,scale=<real>]
  --t REAL[,REAL..]      evaluation times (default 1)
  --grid MIN:MAX:STEP    uniform grid
  --tol REAL             check tolerance (command-specific default)
  --kinks N              kink budget (duality tooling)
  --out PATH             write the report there instead of stdout

classf flags:
  --op test|potential|verify   --function SPEC   --gmap identity|power:p=K
  --map identity|contraction:s=S|shift:c=a;b     --costs SPEC+SPEC
  --dim N --box LO:HI --h STEP --points N --samples N --seed N --base a;b

Environment:
  WEAKOT_THREADS         caps internal parallelism (0 or unset = auto)

Exit codes: 0 success, 1 a report check failed, 2 usage/input error.";

/// What a command produced.
#[derive(Debug)]
pub struct Output {
    /// Rendered report (JSON) or CSV.
    pub text: String,
    /// Destination file, when `--out` was given.
    pub out_path: Option<String>,
    /// Whether any self-check failed (drives exit code 1).
    pub check_failed: bool,
}

struct Flags {
    values: BTreeMap<String, String>,
}

impl Flags {
    fn parse(args: &[String], allowed: &[&str]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(name) = arg.strip_prefix("--") else {
                return Err(CliError::Usage(format!(
                    "unexpected positional argument `{arg}`"
                )));
            };
            if !allowed.contains(&name) {
                return Err(CliError::Usage(format!("unknown flag --{name}")));
            }
            let Some(value) = it.next() else {
                return Err(CliError::Usage(format!("flag --{name} needs a value")));
            };
            values.insert(name.to_string(), value.clone());
        }
        Ok(Self { values })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    fn require(&self, name: &str) -> Result<&str, CliError> {
        self.get(name)
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{name}")))
    }

    fn real(&self, name: &str, default: f64) -> Result<f64, CliError> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("flag --{name} is not a number: {v}"))),
        }
    }

    fn integer(&self, name: &str, default: usize) -> Result<usize, CliError> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("flag --{name} is not an integer: {v}"))),
        }
    }

    fn echo(&self) -> Value {
        json!(self.values)
    }
}

/// Runs a command line and returns the exit code, printing the report to
/// stdout (or `--out`) and errors to stderr.
pub fn run_command<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let args: Vec<String> = args.into_iter().collect();
    match execute(&args) {
        Ok(out) => {
            match &out.out_path {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &out.text) {
                        eprintln!("error: cannot write {path}: {e}");
                        return 2;
                    }
                }
                None => print!("{}", out.text),
            }
            if out.check_failed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("{e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("\n{USAGE}");
            }
            2
        }
    }
}

/// Parses and executes a command line, returning its output.
pub fn execute(args: &[String]) -> Result<Output, CliError> {
    let Some(cmd) = args.first() else {
        return Err(CliError::Usage("no subcommand given".into()));
    };
    let rest = &args[1..];
    match cmd.as_str() {
        "transport" => cmd_transport(rest),
        "weak" => cmd_weak(rest),
        "check-equality" => cmd_check_equality(rest),
        "hopflax" => cmd_hopflax(rest),
        "split" => cmd_split(rest),
        "classf" => cmd_classf(rest),
        "ic" => cmd_ic(rest),
        "help" | "--help" | "-h" => Ok(Output {
            text: format!("{USAGE}\n"),
            out_path: None,
            check_failed: false,
        }),
        other => Err(CliError::Usage(format!("unknown subcommand `{other}`"))),
    }
}

fn load_measures(flags: &Flags) -> Result<(DiscreteMeasure64, DiscreteMeasure64), CliError> {
    let mu = parse_measure_spec(flags.require("mu")?)?;
    let nu = parse_measure_spec(flags.require("nu")?)?;
    Ok((mu, nu))
}

fn finish(report: Report, flags: &Flags) -> Result<Output, CliError> {
    Ok(Output {
        check_failed: !report.all_passed(),
        text: report.render(),
        out_path: flags.get("out").map(|s| s.to_string()),
    })
}

fn measures_input(flags: &Flags, mu: &DiscreteMeasure64, nu: &DiscreteMeasure64) -> Value {
    json!({
        "flags": flags.echo(),
        "mu": serde_json::to_value(measure_to_file(mu)).expect("measure serializes"),
        "nu": serde_json::to_value(measure_to_file(nu)).expect("measure serializes"),
    })
}

fn cmd_transport(args: &[String]) -> Result<Output, CliError> {
    let flags = Flags::parse(args, &["mu", "nu", "cost", "out"])?;
    let (mu, nu) = load_measures(&flags)?;
    let theta = parse_cost(flags.require("cost")?)?;
    let r = classical_cost(&mu, &nu, &theta);
    let checks = coupling_checks(&r, &mu, &nu, &theta);
    let report = Report {
        command: "transport".into(),
        inputs: measures_input(&flags, &mu, &nu),
        result: json!({
            "cost": scalar_field(r.cost),
            "plan": plan_value(&r.plan),
        }),
        checks,
    };
    finish(report, &flags)
}

fn cmd_weak(args: &[String]) -> Result<Output, CliError> {
    let flags = Flags::parse(args, &["mu", "nu", "cost", "kinks", "out"])?;
    let (mu, nu) = load_measures(&flags)?;
    let theta = parse_cost(flags.require("cost")?)?;
    let r = weak_cost(&mu, &nu, &theta);
    let classical = classical_cost(&mu, &nu, &theta);
    let nu1 = r.effective_nu1.clone().expect("weak transport reports nu1");

    let mut checks = coupling_checks(&r, &mu, &nu, &theta);
    let jensen = r.cost - classical.cost;
    checks.push(Check {
        name: "jensen_weak_le_classical".into(),
        passed: jensen <= 1e-9,
        residual: jensen.max(0.0),
    });
    checks.push(Check {
        name: "nu1_convex_order".into(),
        passed: weakot::measures::convex_order_leq(&nu1, &nu),
        residual: 0.0,
    });

    // optional Kantorovich duality cross-check over piecewise-linear
    // potentials with the requested kink budget
    let mut dual = Value::Null;
    if let Some(k) = flags.get("kinks") {
        let budget = k
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("flag --kinks is not an integer: {k}")))?;
        let bound = duality_lower_bound(&mu, &nu, &theta, budget)?;
        checks.push(Check {
            name: "duality_bound_le_cost".into(),
            passed: bound <= r.cost + 1e-7,
            residual: (bound - r.cost).max(0.0),
        });
        dual = scalar_field(bound);
    }

    let report = Report {
        command: "weak".into(),
        inputs: measures_input(&flags, &mu, &nu),
        result: json!({
            "cost": scalar_field(r.cost),
            "classical_cost": scalar_field(classical.cost),
            "duality_lower_bound": dual,
            "nu1": measure_value(&nu1),
            "nu1_route": "quadratic projection (cost-independent optimum)",
            "kernel": plan_value(&r.plan),
        }),
        checks,
    };
    finish(report, &flags)
}

fn cmd_check_equality(args: &[String]) -> Result<Output, CliError> {
    let flags = Flags::parse(args, &["mu", "nu", "out"])?;
    let (mu, nu) = load_measures(&flags)?;
    let cert = equality_certificate(&mu, &nu);

    // contract: holds iff the costs agree for strictly convex costs
    let sq = parse_cost("pow:p=2")?;
    let gap = (classical_cost(&mu, &nu, &sq).cost - weak_cost(&mu, &nu, &sq).cost).abs();
    let consistent = cert.holds == (gap <= 1e-6);
    let checks = vec![Check {
        name: "certificate_matches_costs".into(),
        passed: consistent,
        residual: gap,
    }];

    let report = Report {
        command: "check-equality".into(),
        inputs: measures_input(&flags, &mu, &nu),
        result: json!({
            "holds": cert.holds,
            "witness": cert.witness.map(|(u1, u2)| json!({ "u1": u1, "u2": u2 })),
            "profile": cert.profile.iter()
                .map(|(u, d)| json!({ "level": u, "difference": d }))
                .collect::<Vec<_>>(),
        }),
        checks,
    };
    finish(report, &flags)
}

fn cmd_hopflax(args: &[String]) -> Result<Output, CliError> {
    let flags = Flags::parse(args, &["f", "cost", "t", "grid", "out"])?;
    let f = parse_datum(flags.require("f")?)?;
    let theta = parse_cost(flags.require("cost")?)?;
    let t = flags.real("t", 1.0)?;
    let grid = parse_grid(flags.require("grid")?)?;

    let mut values = Vec::with_capacity(grid.len());
    for x in grid.points() {
        values.push(hopf_lax(&f, &theta, t, x)?.value);
    }
    let gf = GridFunction::new(grid, values)?;
    Ok(Output {
        text: grid_to_csv(&gf),
        out_path: flags.get("out").map(|s| s.to_string()),
        check_failed: false,
    })
}

fn cmd_split(args: &[String]) -> Result<Output, CliError> {
    let flags = Flags::parse(
        args,
        &[
            "f", "cost", "lambda", "alpha", "beta", "t", "grid", "tol", "out",
        ],
    )?;
    let f = parse_datum(flags.require("f")?)?;
    let tol = flags.real("tol", 1e-5)?;
    let grid = parse_grid(flags.get("grid").unwrap_or("-2:2:0.5"))?;
    let times: Vec<f64> = match flags.get("t") {
        None => vec![0.5, 1.0, 2.0],
        Some(spec) => spec
            .split(',')
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad time value `{p}` in --t")))
            })
            .collect::<Result<_, _>>()?,
    };

    let split: CostSplit<f64> = match (flags.get("lambda"), flags.get("alpha"), flags.get("beta")) {
        (Some(lam), None, None) => {
            let theta = parse_cost(flags.require("cost")?)?;
            let lam = lam
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad --lambda value `{lam}`")))?;
            split_proportional(&theta, lam).map_err(CliError::from)?
        }
        (None, Some(a), Some(b)) => CostSplit::from_parts(parse_cost(a)?, parse_cost(b)?),
        _ => {
            return Err(CliError::Usage(
                "split needs either --lambda with --cost, or --alpha and --beta".into(),
            ))
        }
    };

    let (f1, f2) = split_cost(&f, &split)?;
    let mut table = Vec::new();
    let mut worst: f64 = 0.0;
    for &t in &times {
        for x in grid.points() {
            let total = hopf_lax(&f, &split.theta, t, x)?.value;
            let a = hopf_lax(&f1, &split.alpha, t, x)?.value;
            let b = hopf_lax(&f2, &split.beta, t, x)?.value;
            let residual = (total - a - b).abs();
            worst = worst.max(residual);
            table.push(json!({
                "t": t, "x": x,
                "q_theta": total, "q_alpha": a, "q_beta": b,
                "residual": residual,
            }));
        }
    }

    let checks = vec![Check {
        name: "split_identity".into(),
        passed: worst <= tol,
        residual: worst,
    }];
    let report = Report {
        command: "split".into(),
        inputs: json!({ "flags": flags.echo() }),
        result: json!({
            "worst_residual": scalar_field(worst),
            "table": table,
        }),
        checks,
    };
    finish(report, &flags)
}

/// Deterministic points in `[lo, hi]^dim` from a seeded xorshift stream.
fn sample_points(seed: u64, count: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).max(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..count)
        .map(|_| (0..dim).map(|_| lo + (hi - lo) * next()).collect())
        .collect()
}

fn parse_box(spec: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("box `{spec}` must be LO:HI")));
    }
    let lo = parts[0]
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("box `{spec}` has a non-numeric bound")))?;
    let hi = parts[1]
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("box `{spec}` has a non-numeric bound")))?;
    if !(hi > lo) {
        return Err(CliError::Usage(format!(
            "box `{spec}` must satisfy LO < HI"
        )));
    }
    Ok((lo, hi))
}

fn cmd_classf(args: &[String]) -> Result<Output, CliError> {
    let flags = Flags::parse(
        args,
        &[
            "op", "function", "gmap", "map", "costs", "dim", "box", "h", "points", "samples",
            "seed", "base", "tol", "out",
        ],
    )?;
    let op = flags.get("op").unwrap_or("test");
    let dim = flags.integer("dim", 2)?;
    let seed = flags.integer("seed", 7)? as u64;
    let (lo, hi) = parse_box(flags.get("box").unwrap_or("-2:2"))?;

    match op {
        "test" => {
            let f = parse_nd_function(flags.require("function")?, dim)?;
            let tol = flags.real("tol", 1e-6)?;
            let count = flags.integer("points", 100)?;
            let points = sample_points(seed, count, dim, lo, hi);
            let r = class_f_test(&f, &points, tol)?;
            let report = Report {
                command: "classf".into(),
                inputs: json!({ "flags": flags.echo() }),
                result: json!({
                    "op": "test",
                    "in_class": r.in_class,
                    "max_symmetry_residual": scalar_field(r.max_symmetry_residual),
                    "convexity_violations": r.convexity_violations,
                    "failing_point": r.failing_point,
                }),
                checks: vec![],
            };
            finish(report, &flags)
        }
        "potential" => {
            let f = parse_nd_function(flags.require("function")?, dim)?;
            let gmap = parse_gmap(flags.get("gmap").unwrap_or("identity"))?;
            let base = match flags.get("base") {
                Some(spec) => parse_vector(spec)?,
                None => vec![0.0; dim],
            };
            if base.len() != dim {
                return Err(CliError::Usage(format!("--base must have {dim} entries")));
            }
            let tol = flags.real("tol", 1e-6)?;
            let count = flags.integer("points", 40)?;
            let points = sample_points(seed, count, dim, lo, hi);

            let phi = build_potential(&f, &gmap, &base)?;
            let curl = curl_residual(&VectorFieldND::gradient_of(&phi), &points)?;
            let membership = class_f_test(&phi, &points, tol)?;
            let checks = vec![
                Check {
                    name: "curl_free".into(),
                    passed: curl <= tol,
                    residual: curl,
                },
                Check {
                    name: "potential_in_class".into(),
                    passed: membership.in_class,
                    residual: membership.max_symmetry_residual,
                },
            ];
            let report = Report {
                command: "classf".into(),
                inputs: json!({ "flags": flags.echo() }),
                result: json!({
                    "op": "potential",
                    "curl_residual": scalar_field(curl),
                    "potential_membership": {
                        "in_class": membership.in_class,
                        "max_symmetry_residual": scalar_field(membership.max_symmetry_residual),
                        "convexity_violations": membership.convexity_violations,
                    },
                    "value_at_base": scalar_field(phi.eval(&base)),
                }),
                checks,
            };
            finish(report, &flags)
        }
        "verify" => {
            let map = parse_map(flags.get("map").unwrap_or("contraction:s=0.5"), dim)?;
            let costs: Vec<CostSpec<f64>> = flags
                .get("costs")
                .unwrap_or("pow:p=2+pow:p=4")
                .split('+')
                .map(parse_cost)
                .collect::<Result<_, _>>()?;
            let h = flags.real("h", 0.02)?;
            let tol = flags.real("tol", 5e-2)?;
            let count = flags.integer("samples", 20)?;
            let samples = sample_points(seed, count, dim, lo * 0.5, hi * 0.5);
            let grid = BoxGrid {
                lo,
                hi,
                step: h,
                dim,
            };
            let r = verify_map_optimality(&map, &costs, &samples, &grid)?;

            let mut checks = Vec::new();
            let mut per_cost = Vec::new();
            for (i, dev) in r.per_cost.iter().enumerate() {
                checks.push(Check {
                    name: format!("map_optimal_cost_{i}"),
                    passed: dev.worst_deviation <= tol && dev.samples_checked > 0,
                    residual: dev.worst_deviation,
                });
                per_cost.push(json!({
                    "worst_deviation": scalar_field(dev.worst_deviation),
                    "samples_checked": dev.samples_checked,
                    "worst_sample": dev.worst_sample,
                }));
            }
            let report = Report {
                command: "classf".into(),
                inputs: json!({ "flags": flags.echo() }),
                result: json!({ "op": "verify", "per_cost": per_cost }),
                checks,
            };
            finish(report, &flags)
        }
        other => Err(CliError::Usage(format!(
            "unknown --op `{other}` (test | potential | verify)"
        ))),
    }
}

fn cmd_ic(args: &[String]) -> Result<Output, CliError> {
    let flags = Flags::parse(args, &["mu", "cost", "t", "out"])?;
    let mu = parse_measure_spec(flags.require("mu")?)?;
    let theta = parse_cost(flags.require("cost")?)?;
    let t = flags.real("t", 1.0)?;
    let family = default_family(&mu);
    let r = ic_check(&mu, &family, &theta, t)?;

    let finite = r.per_function.iter().all(|e| e.lhs_product.is_finite());
    let checks = vec![Check {
        name: "integrals_finite".into(),
        passed: finite,
        residual: if finite { 0.0 } else { f64::INFINITY },
    }];
    let report = Report {
        command: "ic".into(),
        inputs: json!({
            "flags": flags.echo(),
            "mu": serde_json::to_value(measure_to_file(&mu)).expect("measure serializes"),
        }),
        result: json!({
            "lhs_product": scalar_field(r.lhs_product),
            "margin": scalar_field(r.margin),
            "satisfied": r.satisfied,
            "clipped": r.clipped,
            "per_function": r.per_function,
        }),
        checks,
    };
    finish(report, &flags)
}
