//! Execution of validated plans.

use anyhow::Result;
use gwtree::analytic::{alpha, f_bounds, GWParams};
use gwtree::domination::{sample_coupled_trees, verify_tail_domination};
use gwtree::report::EstimateReport;
use gwtree::rng::substream;
use gwtree::{spanning, walk};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::Plan;
use crate::output::Table;

fn s<T: ToString>(x: T) -> String {
    x.to_string()
}

fn reports(rs: Vec<EstimateReport>) -> Table {
    Table {
        columns: EstimateReport::CSV_HEADER.to_vec(),
        rows: rs.iter().map(|r| r.csv_record()).collect(),
        json: json!(rs),
    }
}

#[derive(Serialize)]
struct ParamsRow {
    c: f64,
    q: f64,
    theta: f64,
    residual: f64,
    duality_residual: f64,
}

#[derive(Serialize)]
struct CoupleRow {
    index: u64,
    lo_nodes: usize,
    hi_nodes: usize,
    lo_root_degree: usize,
    hi_root_degree: usize,
    embedding_valid: bool,
    le1: bool,
}

#[derive(Serialize)]
struct CrossRow {
    c: f64,
    walk_f: f64,
    walk_stderr: f64,
    spanning_f: f64,
    spanning_stderr: f64,
    discrepancy: f64,
    tolerance: f64,
    within_tolerance: bool,
}

pub fn run(plan: &Plan) -> Result<Table> {
    Ok(match plan {
        Plan::Params { c } => {
            let rows = c
                .iter()
                .map(|&c| {
                    let p = GWParams::new(c)?;
                    Ok(ParamsRow {
                        c,
                        q: p.q,
                        theta: p.theta,
                        residual: p.residual(),
                        duality_residual: p.duality_residual(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Table {
                columns: vec!["c", "q", "theta", "residual", "duality_residual"],
                rows: rows
                    .iter()
                    .map(|r| vec![s(r.c), s(r.q), s(r.theta), s(r.residual), s(r.duality_residual)])
                    .collect(),
                json: json!(rows),
            }
        }
        Plan::Bounds { c, kmax } => {
            let rows = c
                .iter()
                .map(|&c| Ok(f_bounds(&GWParams::new(c)?, *kmax)))
                .collect::<Result<Vec<_>>>()?;
            Table {
                columns: vec!["c", "f_lower", "f_upper", "fprime_lower"],
                rows: rows
                    .iter()
                    .map(|r| vec![s(r.c), s(r.f_lower), s(r.f_upper), s(r.fprime_lower)])
                    .collect(),
                json: json!(rows),
            }
        }
        Plan::VerifyDomination { pairs, beta, kmax } => {
            let rows = pairs
                .iter()
                .map(|&(l, m)| {
                    let b = match beta {
                        Some(b) => *b,
                        None => alpha(l, m)?,
                    };
                    Ok(verify_tail_domination(l, m, b, *kmax)?)
                })
                .collect::<Result<Vec<_>>>()?;
            Table {
                columns: vec!["lambda", "mu", "beta", "kmax", "min_margin", "violated_at"],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            s(r.lambda),
                            s(r.mu),
                            s(r.beta),
                            s(r.kmax),
                            s(r.min_margin),
                            r.violated_at.map(s).unwrap_or_default(),
                        ]
                    })
                    .collect(),
                json: json!(rows),
            }
        }
        Plan::Couple {
            lambda,
            mu,
            depth,
            samples,
            seed,
        } => {
            let rows = (0..*samples)
                .into_par_iter()
                .map(|i| {
                    let p = sample_coupled_trees(*lambda, *mu, *depth, substream(*seed, "cli.couple", i))?;
                    Ok(CoupleRow {
                        index: i,
                        lo_nodes: p.lo().len(),
                        hi_nodes: p.hi().len(),
                        lo_root_degree: p.lo().degree(0),
                        hi_root_degree: p.hi().degree(0),
                        embedding_valid: p.validate_embedding().is_ok(),
                        le1: p.check_le1_everywhere(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let all_ok = rows.iter().all(|r| r.embedding_valid && r.le1);
            Table {
                columns: vec![
                    "index",
                    "lo_nodes",
                    "hi_nodes",
                    "lo_root_degree",
                    "hi_root_degree",
                    "embedding_valid",
                    "le1",
                ],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            s(r.index),
                            s(r.lo_nodes),
                            s(r.hi_nodes),
                            s(r.lo_root_degree),
                            s(r.hi_root_degree),
                            s(r.embedding_valid),
                            s(r.le1),
                        ]
                    })
                    .collect(),
                json: json!({ "all_sound": all_ok, "samples": rows }),
            }
        }
        Plan::Returns { c, k, samples, seed } => reports(
            c.iter()
                .map(|&c| Ok(walk::estimate_return_integral(c, *k, *samples, *seed)?))
                .collect::<Result<_>>()?,
        ),
        Plan::EstimateF { c, k, samples, seed } => reports(
            c.iter()
                .map(|&c| Ok(walk::estimate_f(c, *k, *samples, *seed)?))
                .collect::<Result<_>>()?,
        ),
        Plan::EmpiricalF { c, n, reps, seed } => reports(
            c.iter()
                .map(|&c| Ok(spanning::empirical_f(*n, c, *reps, *seed)?))
                .collect::<Result<_>>()?,
        ),
        Plan::Decay { c, k, samples, seed } => {
            let tables = c
                .iter()
                .map(|&c| Ok(walk::pbar_decay_diagnostic(c, *k, *samples, *seed)?))
                .collect::<Result<Vec<_>>>()?;
            Table {
                columns: vec!["c", "k", "pbar", "stderr", "fit_intercept", "fit_slope"],
                rows: tables
                    .iter()
                    .flat_map(|t| {
                        t.rows
                            .iter()
                            .map(|&(k, m, se)| vec![s(t.c), s(k), s(m), s(se), s(t.fit_intercept), s(t.fit_slope)])
                    })
                    .collect(),
                json: json!(tables),
            }
        }
        Plan::Crosscheck {
            c,
            k,
            samples,
            n,
            reps,
            seed,
            tolerance,
        } => {
            let rows = c
                .iter()
                .map(|&c| {
                    let w = walk::estimate_f(c, *k, *samples, *seed)?;
                    let e = spanning::empirical_f(*n, c, *reps, *seed)?;
                    let d = e.value - w.value;
                    Ok(CrossRow {
                        c,
                        walk_f: w.value,
                        walk_stderr: w.stderr,
                        spanning_f: e.value,
                        spanning_stderr: e.stderr,
                        discrepancy: d,
                        tolerance: *tolerance,
                        within_tolerance: d.abs() <= *tolerance,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Table {
                columns: vec![
                    "c",
                    "walk_f",
                    "walk_stderr",
                    "spanning_f",
                    "spanning_stderr",
                    "discrepancy",
                    "tolerance",
                    "within_tolerance",
                ],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            s(r.c),
                            s(r.walk_f),
                            s(r.walk_stderr),
                            s(r.spanning_f),
                            s(r.spanning_stderr),
                            s(r.discrepancy),
                            s(r.tolerance),
                            s(r.within_tolerance),
                        ]
                    })
                    .collect(),
                json: json!(rows),
            }
        }
    })
}
