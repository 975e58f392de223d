//! The identity sweep behind `run` and `verify-identities`.

use std::path::PathBuf;

use jetcurv::curvature::{
    det_jet_curvature_routes, jet_bundle_curvature, jet_curvature_block_formula,
    leading_columns_ratio, rank_ratio, trace_formula_residual, wedge_formula_residual,
};
use jetcurv::identities::{
    self, cocycle_check, det_bundle_equiv_test, det_recursion_check, frame_change_check,
    gauge_covariance_check, jet_descent_check, random_frame, IdentityVerdict,
};
use jetcurv::linalg::{self, CMat, C64};
use jetcurv::oracle::{fd_table, relative_error, FDConfig};
use jetcurv::{assemble_jet_metric, curvature, BiOrder, Catalog, Error, HoloFrame, MetricModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{sample_grid, RunConfig, IDENTITIES};
use crate::report::{curvature_csv, Json, SCHEMA};
use crate::CliError;

/// Orders `p, q <= CERT_ORDER` are certified against the oracle.
pub const CERT_ORDER: usize = 3;
/// Points per model used for jet certification.
pub const CERT_POINTS: usize = 20;
/// Certified points keep at least this distance from the domain boundary.
pub const CERT_MIN_DISTANCE: f64 = 0.2;

pub const SIGN_CONVENTION: &str =
    "theta is the coefficient of dzbar^dz in dbar(h^-1 dh); the classical curvature is -theta";
pub const EQUIVALENCE_NOTE: &str =
    "local equivalence tested on a finite grid: equivalent means no obstruction found at this resolution and tolerance";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResult {
    pub identity: &'static str,
    pub model: Option<String>,
    pub k: Option<usize>,
    pub max_residual: f64,
    pub at: Option<C64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub points: usize,
    pub note: Option<String>,
    pub witness: Option<String>,
}

impl IdentityResult {
    fn skipped(
        identity: &'static str,
        model: Option<&str>,
        k: Option<usize>,
        tol: f64,
        note: &str,
    ) -> Self {
        IdentityResult {
            identity,
            model: model.map(str::to_string),
            k,
            max_residual: 0.0,
            at: None,
            tolerance: tol,
            verdict: Verdict::Skipped,
            points: 0,
            note: Some(note.to_string()),
            witness: None,
        }
    }

    fn from_verdict(
        identity: &'static str,
        v: IdentityVerdict,
        points: usize,
        note: Option<String>,
    ) -> Self {
        IdentityResult {
            identity,
            model: None,
            k: None,
            max_residual: v.residual,
            at: None,
            tolerance: v.tolerance,
            verdict: if v.pass { Verdict::Pass } else { Verdict::Fail },
            points,
            note,
            witness: v.witness,
        }
    }

    pub fn to_json(&self) -> Json {
        let mut f = vec![
            ("identity".to_string(), Json::str(self.identity)),
            (
                "model".into(),
                self.model.clone().map_or(Json::Null, Json::Str),
            ),
            (
                "k".into(),
                self.k.map_or(Json::Null, |k| Json::Int(k as i64)),
            ),
            ("max_residual".into(), Json::Num(self.max_residual)),
            ("at".into(), self.at.map_or(Json::Null, Json::complex)),
            ("tolerance".into(), Json::Num(self.tolerance)),
            ("verdict".into(), Json::str(self.verdict.as_str())),
            ("points".into(), Json::Int(self.points as i64)),
        ];
        if let Some(n) = &self.note {
            f.push(("note".into(), Json::str(n.clone())));
        }
        if let Some(w) = &self.witness {
            f.push(("witness".into(), Json::str(w.clone())));
        }
        Json::Obj(f)
    }

    /// One line for terminal output.
    pub fn summary(&self) -> String {
        let scope = match (&self.model, self.k) {
            (Some(m), Some(k)) => format!(" [{m}, k={k}]"),
            (Some(m), None) => format!(" [{m}]"),
            (None, Some(k)) => format!(" [k={k}]"),
            (None, None) => String::new(),
        };
        format!(
            "{:<7} {}{} residual {:.3e} tol {:.1e}",
            self.verdict.as_str().to_uppercase(),
            self.identity,
            scope,
            self.max_residual,
            self.tolerance
        )
    }
}

/// Running maximum with the first point of the maximum kept; NaN always wins.
#[derive(Clone, Copy, Debug, Default)]
struct Worst {
    residual: f64,
    at: Option<C64>,
    points: usize,
}

impl Worst {
    fn push(&mut self, r: Option<f64>, z: C64) {
        let Some(r) = r else {
            return;
        };
        self.points += 1;
        let worse =
            r > self.residual || (r.is_nan() && !self.residual.is_nan()) || self.at.is_none();
        if worse && !self.residual.is_nan() {
            self.residual = r;
            self.at = Some(z);
        }
    }

    fn result(
        self,
        identity: &'static str,
        model: &str,
        k: Option<usize>,
        tol: f64,
        skip_note: &str,
    ) -> IdentityResult {
        if self.points == 0 {
            return IdentityResult::skipped(identity, Some(model), k, tol, skip_note);
        }
        let pass = self.residual <= tol;
        IdentityResult {
            identity,
            model: Some(model.to_string()),
            k,
            max_residual: self.residual,
            at: self.at,
            tolerance: tol,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            points: self.points,
            note: None,
            witness: None,
        }
    }
}

/// Residuals at one grid point; `None` marks an identity that does not apply.
struct PointOutcome {
    wedge: f64,
    gauge: f64,
    cert: Option<f64>,
    per_k: Vec<KOutcome>,
}

struct KOutcome {
    frame_change: f64,
    routes: f64,
    rank: f64,
    block: f64,
    det_recursion: f64,
    det_curvature: Option<f64>,
    trace: Option<f64>,
    theta: CMat,
}

fn at_point(model: &str, z: C64) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Degenerate(format!("model {model} at z = {z}: {e}"))
}

/// Largest relative error of the lifted partials `p, q <= CERT_ORDER` against the oracle.
pub fn certify(m: &MetricModel, z: C64) -> jetcurv::Result<f64> {
    let order = BiOrder::square(CERT_ORDER);
    let jet = m.lift(z, order)?;
    let fd = fd_table(m, z, order, &FDConfig::fitted(m.domain_radius() - z.norm()))?;
    let mut worst: f64 = 0.0;
    for (p, row) in fd.iter().enumerate() {
        for (q, v) in row.iter().enumerate() {
            worst = worst.max(relative_error(v, &jet.derivative(p, q)?));
        }
    }
    Ok(worst)
}

fn point_outcome(
    id: &str,
    m: &MetricModel,
    frame: &HoloFrame,
    z: C64,
    ks: &[usize],
    certify_here: bool,
) -> Result<PointOutcome, CliError> {
    let err = at_point(id, z);
    let n = m.rank();
    let top = ks.iter().copied().max().unwrap_or(0);
    let hjet = m.lift(z, BiOrder::square(top + 1)).map_err(&err)?;
    for &k in ks {
        assemble_jet_metric(&hjet, k).map_err(&err)?;
    }
    let wedge = wedge_formula_residual(&hjet).map_err(&err)?;
    let gauge = gauge_covariance_check(m, frame, z, 0.0)
        .map_err(&err)?
        .residual;
    let mut per_k = Vec::with_capacity(ks.len());
    for &k in ks {
        let form = jet_bundle_curvature(&hjet, k).map_err(&err)?;
        let block = jet_curvature_block_formula(&hjet, k).map_err(&err)?;
        let det_curvature = if n == 1 {
            Some(
                det_jet_curvature_routes(&hjet, k)
                    .map_err(&err)?
                    .discrepancy,
            )
        } else {
            None
        };
        let trace = if k >= 1 {
            Some(trace_formula_residual(&hjet, k).map_err(&err)?.residual)
        } else {
            None
        };
        per_k.push(KOutcome {
            frame_change: frame_change_check(m, frame, z, k, 0.0)
                .map_err(&err)?
                .residual,
            routes: relative_error(&block, &form.theta),
            rank: rank_ratio(&form.theta, n),
            block: leading_columns_ratio(&form.theta, n),
            det_recursion: det_recursion_check(m, z, k, 0.0).map_err(&err)?.residual,
            det_curvature,
            trace,
            theta: form.theta,
        });
    }
    let cert = if certify_here {
        Some(certify(m, z).map_err(&err)?)
    } else {
        None
    };
    Ok(PointOutcome {
        wedge,
        gauge,
        cert,
        per_k,
    })
}

/// A frame of the given rank, invertible on the whole grid, drawn from the seed.
pub fn gauge_frame(rank: usize, seed: u64, grid: &[C64]) -> HoloFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1000 + rank as u64);
    loop {
        let f = random_frame(&mut rng, rank, 2);
        if grid.iter().all(|&z| linalg::det(&f.eval(z)).norm() >= 0.1) {
            return f;
        }
    }
}

/// Indices of up to `CERT_POINTS` grid points, evenly spread, at least
/// `CERT_MIN_DISTANCE` inside the domain.
pub fn certification_points(m: &MetricModel, grid: &[C64]) -> Vec<usize> {
    let ok: Vec<usize> = (0..grid.len())
        .filter(|&i| grid[i].norm() + CERT_MIN_DISTANCE <= m.domain_radius())
        .collect();
    if ok.len() <= CERT_POINTS {
        return ok;
    }
    (0..CERT_POINTS)
        .map(|i| ok[i * ok.len() / CERT_POINTS])
        .collect()
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Randomized linear-algebra identities: corner minors, Gram quotient, frame cocycle.
pub fn global_identities(
    seed: u64,
    trials: usize,
    ks: &[usize],
    tol: impl Fn(&str) -> f64,
) -> Vec<IdentityResult> {
    let mut out = Vec::new();
    let v =
        identities::desnanot_jacobi_trials(&mut rng_for(seed, 1), trials, tol("desnanot_jacobi"));
    out.push(IdentityResult::from_verdict(
        "desnanot_jacobi",
        v,
        trials,
        None,
    ));
    let v = identities::gram_quotient_trials(&mut rng_for(seed, 2), trials, tol("gram_quotient"));
    out.push(IdentityResult::from_verdict(
        "gram_quotient",
        v,
        trials,
        None,
    ));

    let mut rng = rng_for(seed, 3);
    let t = tol("cocycle");
    let mut acc = IdentityVerdict::new("cocycle", 0.0, t, String::new);
    for _ in 0..trials {
        let n = rng.random_range(1..=3);
        let (da, db) = (rng.random_range(0..=3), rng.random_range(0..=3));
        let a = random_frame(&mut rng, n, da);
        let b = random_frame(&mut rng, n, db);
        let z = C64::from_polar(
            rng.random_range(0.0..0.5),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        for &k in ks {
            acc = acc.merge(cocycle_check(&a, &b, z, k, t).expect("equal ranks"));
        }
    }
    out.push(IdentityResult::from_verdict("cocycle", acc, trials, None));
    out
}

/// Verdicts for one pair of line-bundle models.
#[derive(Clone, Debug, PartialEq)]
pub struct PairOutcome {
    pub a: String,
    pub b: String,
    pub k: usize,
    pub equivalent: Option<bool>,
    pub line_deviation: f64,
    pub det_deviation: f64,
    pub contradiction: Option<String>,
}

fn equivalence_pairs(
    catalog: &Catalog,
    grid: &[C64],
    ks: &[usize],
    tol: f64,
) -> Result<Vec<PairOutcome>, CliError> {
    let lines: Vec<_> = catalog
        .models
        .iter()
        .filter(|e| e.model.rank() == 1)
        .collect();
    let mut tasks = Vec::new();
    for &k in ks {
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                tasks.push((k, i, j));
            }
        }
    }
    tasks
        .par_iter()
        .map(|&(k, i, j)| {
            let (a, b) = (lines[i], lines[j]);
            match det_bundle_equiv_test(&a.model, &b.model, k, grid, tol) {
                Ok(v) => Ok(PairOutcome {
                    a: a.id.clone(),
                    b: b.id.clone(),
                    k,
                    equivalent: Some(v.equivalent),
                    line_deviation: v.line.deviation,
                    det_deviation: v.level_k.deviation.max(v.level_k1.deviation),
                    contradiction: None,
                }),
                Err(Error::InternalInconsistency { what, discrepancy }) => Ok(PairOutcome {
                    a: a.id.clone(),
                    b: b.id.clone(),
                    k,
                    equivalent: None,
                    line_deviation: discrepancy,
                    det_deviation: discrepancy,
                    contradiction: Some(what),
                }),
                Err(e) => Err(CliError::Degenerate(format!(
                    "models {} / {}: {e}",
                    a.id, b.id
                ))),
            }
        })
        .collect()
}

fn descent_violations(
    catalog: &Catalog,
    grid: &[C64],
    k: usize,
    tol: f64,
) -> Result<(usize, usize, Option<String>), CliError> {
    let lines: Vec<_> = catalog
        .models
        .iter()
        .filter(|e| e.model.rank() == 1)
        .collect();
    let pairs: Vec<(usize, usize)> = (0..lines.len())
        .flat_map(|i| (i + 1..lines.len()).map(move |j| (i, j)))
        .collect();
    let res: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| {
            jet_descent_check(&lines[i].model, &lines[j].model, k, grid, tol)
                .map(|v| v.chain_holds)
                .map_err(|e| {
                    CliError::Degenerate(format!("models {} / {}: {e}", lines[i].id, lines[j].id))
                })
        })
        .collect::<Result<_, _>>()?;
    let bad: Vec<String> = pairs
        .iter()
        .zip(&res)
        .filter(|(_, ok)| !**ok)
        .map(|(&(i, j), _)| format!("{} / {}", lines[i].id, lines[j].id))
        .collect();
    let witness = (!bad.is_empty()).then(|| bad.join(", "));
    Ok((bad.len(), pairs.len(), witness))
}

/// `theta` of `J_k` over the grid for one model.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTable {
    pub model: String,
    pub k: usize,
    pub rows: Vec<(C64, CMat)>,
}

type KResidual<'a> = (
    &'static str,
    &'a dyn Fn(&KOutcome) -> Option<f64>,
    &'static str,
);

/// Everything a run produces, before it is written to disk.
pub struct RunOutcome {
    pub results: Vec<IdentityResult>,
    pub pairs: Vec<PairOutcome>,
    pub tables: Vec<CurvatureTable>,
    pub report: String,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.verdict != Verdict::Fail)
    }
}

/// SHA-256 of the effective configuration (without paths) and the catalog contents.
pub fn config_hash(cfg: &RunConfig, catalog: &Catalog) -> String {
    let tolerances: Vec<(String, f64)> = IDENTITIES
        .iter()
        .map(|(n, _)| (n.to_string(), cfg.tolerance(n)))
        .collect();
    let key = serde_json::json!({
        "grid": cfg.grid,
        "jet_orders": cfg.jet_orders,
        "tolerances": tolerances,
        "seed": cfg.seed,
        "trials": cfg.trials,
    });
    let mut h = Sha256::new();
    h.update(key.to_string().as_bytes());
    h.update(b"\n");
    h.update(catalog.to_canonical_json().as_bytes());
    hex::encode(h.finalize())
}

/// Runs the full suite; identity failures are recorded, degenerate input is an error.
pub fn run(cfg: &RunConfig, catalog: &Catalog) -> Result<RunOutcome, CliError> {
    cfg.validate(catalog)?;
    let grid = sample_grid(&cfg.grid)?;
    let ks = &cfg.jet_orders;
    let tol = |n: &str| cfg.tolerance(n);

    let ranks: std::collections::BTreeSet<usize> =
        catalog.models.iter().map(|e| e.model.rank()).collect();
    let frames: Vec<(usize, HoloFrame)> = ranks
        .into_iter()
        .map(|n| (n, gauge_frame(n, cfg.seed, &grid)))
        .collect();
    let frame_for = |n: usize| {
        &frames
            .iter()
            .find(|(r, _)| *r == n)
            .expect("frame per rank")
            .1
    };

    let cert: Vec<Vec<usize>> = catalog
        .models
        .iter()
        .map(|e| certification_points(&e.model, &grid))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..catalog.models.len())
        .flat_map(|m| (0..grid.len()).map(move |p| (m, p)))
        .collect();
    let outcomes: Vec<Result<PointOutcome, CliError>> = tasks
        .par_iter()
        .map(|&(mi, pi)| {
            let e = &catalog.models[mi];
            point_outcome(
                &e.id,
                &e.model,
                frame_for(e.model.rank()),
                grid[pi],
                ks,
                cert[mi].contains(&pi),
            )
        })
        .collect();
    // first error in (model, point) order
    let outcomes: Vec<PointOutcome> = outcomes.into_iter().collect::<Result<_, _>>()?;

    let mut results = Vec::new();
    let mut tables = Vec::new();
    for (mi, e) in catalog.models.iter().enumerate() {
        let rows = &outcomes[mi * grid.len()..(mi + 1) * grid.len()];
        let id = e.id.as_str();
        let mut w = Worst::default();
        for (pi, r) in rows.iter().enumerate() {
            if r.cert.is_some() {
                w.push(r.cert, grid[pi]);
            }
        }
        let mut cert_result = w.result(
            "jet_certification",
            id,
            None,
            tol("jet_certification"),
            "no grid point is far enough inside the domain",
        );
        if cert_result.verdict != Verdict::Skipped {
            cert_result.note = Some(format!(
                "orders p, q <= {CERT_ORDER} against finite differences"
            ));
        }
        results.push(cert_result);
        let fold = |f: &dyn Fn(&PointOutcome) -> Option<f64>| {
            let mut w = Worst::default();
            for (pi, r) in rows.iter().enumerate() {
                w.push(f(r), grid[pi]);
            }
            w
        };
        results.push(fold(&|r| Some(r.wedge)).result(
            "curvature_wedge_formula",
            id,
            None,
            tol("curvature_wedge_formula"),
            "",
        ));
        results.push(fold(&|r| Some(r.gauge)).result(
            "gauge_covariance",
            id,
            None,
            tol("gauge_covariance"),
            "",
        ));
        for (ki, &k) in ks.iter().enumerate() {
            let per: [KResidual; 7] = [
                ("frame_change", &|o| Some(o.frame_change), ""),
                ("jet_curvature_routes", &|o| Some(o.routes), ""),
                ("rank_bound", &|o| Some(o.rank), ""),
                ("jet_block_structure", &|o| Some(o.block), ""),
                ("det_recursion", &|o| Some(o.det_recursion), ""),
                (
                    "det_curvature",
                    &|o| o.det_curvature,
                    "applies to line bundles only",
                ),
                ("trace_formula", &|o| o.trace, "needs k >= 1"),
            ];
            for (name, f, skip) in per {
                results.push(fold(&|r| f(&r.per_k[ki])).result(name, id, Some(k), tol(name), skip));
            }
            tables.push(CurvatureTable {
                model: e.id.clone(),
                k,
                rows: rows
                    .iter()
                    .enumerate()
                    .map(|(pi, r)| (grid[pi], r.per_k[ki].theta.clone()))
                    .collect(),
            });
        }
    }

    results.extend(global_identities(cfg.seed, cfg.trials, ks, tol));

    let eq_tol = tol("equivalence_biconditional");
    let pairs = equivalence_pairs(catalog, &grid, ks, eq_tol)?;
    if pairs.is_empty() {
        results.push(IdentityResult::skipped(
            "equivalence_biconditional",
            None,
            None,
            eq_tol,
            "needs two line-bundle models",
        ));
    } else {
        let bad: Vec<&PairOutcome> = pairs.iter().filter(|p| p.contradiction.is_some()).collect();
        let witness = (!bad.is_empty()).then(|| {
            bad.iter()
                .map(|p| format!("{} / {} (k = {})", p.a, p.b, p.k))
                .collect::<Vec<_>>()
                .join(", ")
        });
        results.push(IdentityResult {
            identity: "equivalence_biconditional",
            model: None,
            k: None,
            max_residual: bad.len() as f64,
            at: None,
            tolerance: eq_tol,
            verdict: if bad.is_empty() {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            points: pairs.len(),
            note: Some(format!(
                "residual counts pairs where the two tests disagree; {EQUIVALENCE_NOTE}"
            )),
            witness,
        });
    }
    let top = ks.iter().copied().max().expect("non-empty jet orders");
    let d_tol = tol("jet_descent");
    let (bad, total, witness) = descent_violations(catalog, &grid, top, d_tol)?;
    if total == 0 {
        results.push(IdentityResult::skipped(
            "jet_descent",
            None,
            Some(top),
            d_tol,
            "needs two line-bundle models",
        ));
    } else {
        results.push(IdentityResult {
            identity: "jet_descent",
            model: None,
            k: Some(top),
            max_residual: bad as f64,
            at: None,
            tolerance: d_tol,
            verdict: if bad == 0 {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            points: total,
            note: Some("residual counts pairs whose agreement fails to descend".into()),
            witness,
        });
    }

    let report = build_report(cfg, catalog, grid.len(), &results, &pairs, &tables);
    Ok(RunOutcome {
        results,
        pairs,
        tables,
        report,
    })
}

fn build_report(
    cfg: &RunConfig,
    catalog: &Catalog,
    grid_points: usize,
    results: &[IdentityResult],
    pairs: &[PairOutcome],
    tables: &[CurvatureTable],
) -> String {
    let all_pass = results.iter().all(|r| r.verdict != Verdict::Fail);
    let rank_of = |id: &str| catalog.get(id).map_or(0, |m| m.rank());
    let curvature: Vec<Json> = tables
        .iter()
        .map(|CurvatureTable { model: id, k, rows }| {
            Json::obj([
                ("model", Json::str(id.clone())),
                ("k", Json::Int(*k as i64)),
                ("rank", Json::Int(rank_of(id) as i64)),
                ("csv", Json::str(csv_name(id, *k))),
                (
                    "table",
                    Json::Arr(
                        rows.iter()
                            .map(|(z, t)| {
                                Json::obj([("z", Json::complex(*z)), ("theta", Json::matrix(t))])
                            })
                            .collect(),
                    ),
                ),
            ])
        })
        .collect();
    let pairs: Vec<Json> = pairs
        .iter()
        .map(|p| {
            Json::obj([
                ("a", Json::str(p.a.clone())),
                ("b", Json::str(p.b.clone())),
                ("k", Json::Int(p.k as i64)),
                ("equivalent", p.equivalent.map_or(Json::Null, Json::Bool)),
                ("line_deviation", Json::Num(p.line_deviation)),
                ("det_deviation", Json::Num(p.det_deviation)),
            ])
        })
        .collect();
    Json::obj([
        ("schema", Json::str(SCHEMA)),
        ("version", Json::str(env!("CARGO_PKG_VERSION"))),
        ("config_sha256", Json::str(config_hash(cfg, catalog))),
        ("seed", Json::Int(cfg.seed as i64)),
        ("trials", Json::Int(cfg.trials as i64)),
        (
            "grid",
            Json::obj([
                (
                    "shape",
                    Json::str(format!("{:?}", cfg.grid.shape).to_lowercase()),
                ),
                ("radius", Json::Num(cfg.grid.radius)),
                ("margin", Json::Num(cfg.grid.margin)),
                ("points", Json::Int(grid_points as i64)),
            ]),
        ),
        (
            "jet_orders",
            Json::Arr(
                cfg.jet_orders
                    .iter()
                    .map(|&k| Json::Int(k as i64))
                    .collect(),
            ),
        ),
        ("sign_convention", Json::str(SIGN_CONVENTION)),
        ("all_pass", Json::Bool(all_pass)),
        (
            "identities",
            Json::Arr(results.iter().map(IdentityResult::to_json).collect()),
        ),
        ("equivalence_pairs", Json::Arr(pairs)),
        ("curvature", Json::Arr(curvature)),
    ])
    .to_pretty()
}

/// File-name-safe `{id}_k{k}.csv`.
pub fn csv_name(id: &str, k: usize) -> String {
    let safe: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{safe}_k{k}.csv")
}

/// Writes `report.json` and the curvature tables; returns the report path.
pub fn write_outputs(outcome: &RunOutcome, dir: &std::path::Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        Ok::<PathBuf, CliError>(p)
    };
    for CurvatureTable { model: id, k, rows } in &outcome.tables {
        write(&csv_name(id, *k), &curvature_csv(rows))?;
    }
    write("report.json", &outcome.report)
}

/// `theta` of `J_k` over a grid, for the `curvature` subcommand.
pub fn curvature_table(
    id: &str,
    m: &MetricModel,
    k: usize,
    grid: &[C64],
) -> Result<Vec<(C64, CMat)>, CliError> {
    m.validate()
        .map_err(|e| CliError::Config(format!("model {id}: {e}")))?;
    grid.par_iter()
        .map(|&z| {
            let err = at_point(id, z);
            let h = m.lift(z, BiOrder::square(k + 1)).map_err(&err)?;
            let theta = if k == 0 {
                curvature(&h).map_err(&err)?.theta
            } else {
                jet_bundle_curvature(&h, k).map_err(&err)?.theta
            };
            Ok((z, theta))
        })
        .collect()
}
