//! Text and JSON output formats.
//!
//! Trajectory files are plain text: `#` header lines, then one row per
//! sample with the columns `t x y z vx vy vz ax ay az field`, tab separated.
//! Numbers are written in the shortest form that reads back to the same
//! `f64`, so reruns produce byte-identical files.
//!
//! Field files use the columns `x y z value gx gy gz status`, where status is
//! `ok`, `inside:<body>` or `boundary`; value and gradient are `nan` when the
//! point is not in free space.

use std::io::{self, Write};

use navfield_core::analysis::{CriticalClass, CriticalPointReport, EpsilonBounds, Region};
use navfield_core::simulate::{BatchSummary, Trajectory};
use navfield_core::validate::{PairClass, ValidationReport};
use navfield_core::{FieldError, SimError, Vec3};
use serde_json::{json, Value};

pub const TRAJECTORY_COLUMNS: &str = "t\tx\ty\tz\tvx\tvy\tvz\tax\tay\taz\tfield";
pub const FIELD_COLUMNS: &str = "x\ty\tz\tvalue\tgx\tgy\tgz\tstatus";

fn vec_json(v: Vec3) -> Value {
    json!([v.x, v.y, v.z])
}

pub fn write_trajectory(mut w: impl Write, traj: &Trajectory) -> io::Result<()> {
    let s = traj.start;
    writeln!(w, "# start {} {} {}", s.x, s.y, s.z)?;
    writeln!(w, "# outcome {}", traj.outcome.name())?;
    writeln!(w, "# {TRAJECTORY_COLUMNS}")?;
    for p in &traj.samples {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.t, p.x.x, p.x.y, p.x.z, p.v.x, p.v.y, p.v.z, p.a.x, p.a.y, p.a.z, p.field_value
        )?;
    }
    Ok(())
}

/// Parses the rows of a trajectory file back into `[t, x, y, z, ..., field]`.
pub fn read_trajectory_rows(text: &str) -> Result<Vec<[f64; 11]>, String> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split('\t')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", n + 1))?;
        let row: [f64; 11] = vals
            .try_into()
            .map_err(|v: Vec<f64>| format!("line {}: expected 11 columns, found {}", n + 1, v.len()))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn summary_json(results: &[Result<Trajectory, SimError>], summary: &BatchSummary) -> Value {
    let runs: Vec<Value> = results
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            Ok(t) => json!({
                "index": i,
                "start": vec_json(t.start),
                "outcome": t.outcome.name(),
                "end_time": t.end_time,
                "final_position": vec_json(t.final_state().x),
                "max_speed": t.max_speed,
                "max_accel": t.max_accel,
                "min_factor": t.min_factor,
            }),
            Err(e) => json!({ "index": i, "outcome": "invalid_start", "error": e.to_string() }),
        })
        .collect();
    json!({
        "total": summary.total,
        "converged": summary.converged,
        "local_minimum": summary.local_minimum,
        "timeout": summary.timeout,
        "collision": summary.collision,
        "invalid_start": summary.invalid_start,
        "max_speed": summary.max_speed,
        "max_accel": summary.max_accel,
        "times": summary.times,
        "runs": runs,
    })
}

fn pair_class_name(c: PairClass) -> &'static str {
    match c {
        PairClass::Disjoint => "disjoint",
        PairClass::AllowedIntersecting => "intersecting",
        PairClass::Tangent => "tangent",
        PairClass::Forbidden => "forbidden",
    }
}

pub fn validation_json(report: &ValidationReport) -> Value {
    let pairs: Vec<Value> = report
        .pairs
        .iter()
        .map(|p| json!({ "i": p.i, "j": p.j, "class": pair_class_name(p.class), "gap": p.gap }))
        .collect();
    json!({
        "valid": report.is_valid(),
        "target_free": report.target_free,
        "triple_intersection": report.triple_intersection_found,
        "triples": report.triples,
        "errors": report.errors,
        "warnings": report.warnings,
        "pairs": pairs,
    })
}

fn class_name(c: CriticalClass) -> &'static str {
    match c {
        CriticalClass::Minimum => "minimum",
        CriticalClass::Saddle => "saddle",
        CriticalClass::Maximum => "maximum",
        CriticalClass::Degenerate => "degenerate",
    }
}

fn region_json(r: Region) -> Value {
    match r {
        Region::Target => json!("target"),
        Region::NearObstacle(i) => json!({ "near_obstacle": i }),
        Region::NearBoundary => json!("near_boundary"),
        Region::Interior => json!("interior"),
    }
}

pub fn critical_json(report: &CriticalPointReport, eps: Option<&EpsilonBounds>) -> Value {
    let points: Vec<Value> = report
        .points
        .iter()
        .map(|p| {
            json!({
                "x": vec_json(p.x),
                "class": class_name(p.class),
                "region": region_json(p.region),
                "grad_norm": p.grad_norm,
                "eigenvalues": p.eigenvalues,
            })
        })
        .collect();
    let eps = eps.map(|e| {
        json!({
            "eps0": e.eps0,
            "n_of_eps": e.n_of_eps,
            "low_confidence": e.low_confidence,
            "per_obstacle": e.per_obstacle.iter().map(|o| json!({
                "body": o.body,
                "eps0_prime": o.eps0_prime,
                "eps0_doubleprime": o.eps0_doubleprime,
                "samples": o.samples,
                "excluded": o.excluded,
            })).collect::<Vec<_>>(),
            "per_pair": e.per_pair.iter().map(|p| json!({
                "i": p.i,
                "j": p.j,
                "eps0l_prime": p.eps0l_prime,
                "eps0l_doubleprime": p.eps0l_doubleprime,
                "samples": p.samples,
                "excluded": p.excluded,
            })).collect::<Vec<_>>(),
        })
    });
    json!({
        "starts": report.starts,
        "unconverged": report.unconverged,
        "spurious_minima": report.spurious_minima(),
        "points": points,
        "messages": report.messages,
        "epsilon": eps,
    })
}

pub fn write_field_row(
    mut w: impl Write,
    x: Vec3,
    eval: Result<(f64, Vec3), FieldError>,
) -> io::Result<()> {
    match eval {
        Ok((v, g)) => writeln!(w, "{}\t{}\t{}\t{}\t{}\t{}\t{}\tok", x.x, x.y, x.z, v, g.x, g.y, g.z),
        Err(e) => {
            let status = match e {
                FieldError::InsideObstacle { index: 0, .. } => "boundary".to_string(),
                FieldError::InsideObstacle { index, .. } => format!("inside:{}", index - 1),
                FieldError::BoundarySingularity => "boundary".to_string(),
                other => format!("error:{other}"),
            };
            writeln!(w, "{}\t{}\t{}\tnan\tnan\tnan\tnan\t{status}", x.x, x.y, x.z)
        }
    }
}
