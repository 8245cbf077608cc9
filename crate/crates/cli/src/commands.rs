use anyhow::{anyhow, bail};
use liouville_core::builders::{
    build_factorial_tree, build_lattice, load_graph_json, FactorialTree,
    FactorialTreeSpec, HomogeneousTreeSpec, LatticePoint, LatticeSpec,
};
use liouville_core::graph::{FiniteGraph, TableFunction, VertexFunction, WeightedGraph};
use liouville_core::growth::{volume_growth_report, volume_growth_report_levels, GrowthVerdict, VolumeGrowthReport};
use liouville_core::levels::LevelProfile;
use liouville_core::metric::{ball, jump_size, PseudoMetric};
use liouville_core::radial::{bisect_positive_threshold, shoot};
use liouville_core::supersolution::{
    scan_levels, tune_lattice_parameters, tune_tree_parameters, verify_supersolution, LatticeSupersolution,
    TreeSupersolution,
};
use liouville_core::verifier::{
    capacity_certificate, capacity_certificate_levels, check_hypotheses, check_hypotheses_levels,
    strong_maximum_principle_check, CapacityCertificate, CapacityVerdict, MaxPrincipleVerdict, ProblemSpec,
    RadialProblem, Verdict,
};
use liouville_core::{Error, TableMetric};
use serde_json::json;

use crate::config::{Command, Family, RunConfig};
use crate::functions::{
    file_variables, lattice_variables, level_fn, level_variables, FileExpr, FunctionSpec, LatticeExpr,
};
use crate::report::{cell, Outcome, Status, Table};

const DEFAULT_RADIUS: f64 = 20.0;
const DEFAULT_LEVELS: usize = 10_000;
const DEFAULT_SHOOT_DEPTH: usize = 1_000;
const DEFAULT_INFO_DEPTH: usize = 8;
const FACTORIAL_ENUMERATION_DEPTH: usize = 25;

/// Potential or test function on an explicitly enumerated graph.
enum Func<V, E> {
    One,
    Expr(E),
    Table(TableFunction<V>),
}

impl<V, E> VertexFunction<V> for Func<V, E>
where
    V: Ord + Clone + Send + Sync,
    E: VertexFunction<V>,
{
    fn value(&self, x: &V) -> Option<f64> {
        match self {
            Func::One => Some(1.0),
            Func::Expr(e) => e.value(x),
            Func::Table(t) => t.value(x),
        }
    }
}

struct LatticeSetup {
    graph: liouville_core::builders::Lattice,
    metric: liouville_core::builders::Euclidean,
    base: LatticePoint,
    dim: usize,
}

fn lattice(cfg: &RunConfig) -> anyhow::Result<LatticeSetup> {
    let dim = cfg.dim.expect("lattice has a dimension");
    let (graph, metric) = build_lattice(LatticeSpec { dim })?;
    let base = match &cfg.x0 {
        Some(s) => s.parse::<LatticePoint>().map_err(|e| anyhow!("x0: {e}"))?,
        None => graph.origin(),
    };
    Ok(LatticeSetup { graph, metric, base, dim })
}

fn lattice_func(text: &str, setup: &LatticeSetup) -> anyhow::Result<Func<LatticePoint, LatticeExpr>> {
    let names = lattice_variables(setup.dim);
    Ok(match FunctionSpec::parse(text, &names)? {
        FunctionSpec::One => Func::One,
        FunctionSpec::Expr(node) => Func::Expr(LatticeExpr {
            node,
            names,
            base: setup.base,
        }),
        spec @ FunctionSpec::Table(_) => Func::Table(spec.table()?.expect("table")),
    })
}

struct FileSetup {
    graph: FiniteGraph<String>,
    metric: TableMetric<String>,
    base: String,
}

fn file(cfg: &RunConfig) -> anyhow::Result<FileSetup> {
    let path = cfg.input.as_ref().expect("validated");
    let (graph, metric) = load_graph_json(path)?;
    let base = match &cfg.x0 {
        Some(id) if graph.index_of(id).is_some() => id.clone(),
        Some(id) => bail!("x0: vertex {id:?} is not in {}", path.display()),
        None => graph.vertices().first().cloned().ok_or_else(|| anyhow!("graph is empty"))?,
    };
    Ok(FileSetup { graph, metric, base })
}

type FileFunc<'a> = Func<String, FileExpr<Box<dyn Fn(&String) -> f64 + Sync + 'a>, Box<dyn Fn(&String) -> f64 + Sync + 'a>>>;

fn file_func<'a>(text: &str, setup: &'a FileSetup) -> anyhow::Result<FileFunc<'a>> {
    Ok(match FunctionSpec::parse(text, &file_variables())? {
        FunctionSpec::One => Func::One,
        FunctionSpec::Expr(node) => Func::Expr(FileExpr {
            node,
            distance: Box::new(move |x: &String| setup.metric.distance(x, &setup.base)),
            measure: Box::new(move |x: &String| setup.graph.measure(x)),
        }),
        spec @ FunctionSpec::Table(_) => Func::Table(spec.table()?.expect("table")),
    })
}

fn homogeneous_spec(cfg: &RunConfig, offset: u64, max_depth: usize) -> anyhow::Result<HomogeneousTreeSpec> {
    let spec = HomogeneousTreeSpec {
        degree: cfg.degree.expect("homogeneous has a degree"),
        sigma: cfg.sigma.ok_or_else(|| anyhow!("sigma: required to weight the homogeneous tree"))?,
        epsilon: cfg.epsilon.expect("homogeneous has epsilon"),
        offset,
        max_depth,
    };
    spec.validate()?;
    Ok(spec)
}

fn factorial() -> anyhow::Result<FactorialTree> {
    Ok(build_factorial_tree(FactorialTreeSpec {
        max_depth: FACTORIAL_ENUMERATION_DEPTH,
    })?
    .0)
}

fn level_potential(cfg: &RunConfig) -> anyhow::Result<Box<dyn Fn(usize) -> f64 + Sync>> {
    Ok(match FunctionSpec::parse(&cfg.v, &level_variables())? {
        FunctionSpec::One => Box::new(|_| 1.0),
        FunctionSpec::Expr(node) => Box::new(level_fn(node)),
        FunctionSpec::Table(_) => bail!("v: table potentials need an explicit graph"),
    })
}

/// Runs `body` with the tree family's level profile.
fn with_profile<T>(cfg: &RunConfig, body: impl FnOnce(&dyn LevelProfile) -> anyhow::Result<T>) -> anyhow::Result<T> {
    match cfg.family {
        Family::Factorial => body(&factorial()?),
        Family::Homogeneous => body(&homogeneous_spec(cfg, cfg.n0.unwrap_or(2), 0)?),
        _ => unreachable!("tree family"),
    }
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match cfg.subcommand {
        Command::BuildInfo => build_info(cfg),
        Command::CheckHypotheses => hypotheses(cfg),
        Command::VolumeGrowth => growth(cfg),
        Command::VerifySupersolution => verify(cfg),
        Command::Tune => tune(cfg),
        Command::Certificate => certificate(cfg),
        Command::Shoot => shoot_cmd(cfg),
        Command::MaxPrinciple => max_principle(cfg),
    }
}

fn level_table(profile: &dyn LevelProfile, depth: usize) -> Table {
    Table {
        file: "levels.csv",
        header: &["n", "level_size", "level_mass", "outward_fraction", "inward_fraction"],
        rows: (0..=depth)
            .map(|n| {
                vec![
                    n.to_string(),
                    cell(Some(profile.level_size(n))),
                    cell(Some(profile.level_mass(n))),
                    cell(Some(profile.outward_fraction(n))),
                    cell(Some(profile.inward_fraction(n))),
                ]
            })
            .collect(),
    }
}

fn build_info(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let depth = cfg.depth.unwrap_or(DEFAULT_INFO_DEPTH);
    match cfg.family {
        Family::Lattice => {
            let s = lattice(cfg)?;
            let ball_size = cfg
                .radius
                .map(|r| ball(&s.graph, &s.metric, &s.base, r, 0.0, cfg.budget).map(|b| b.size))
                .transpose()?;
            let degree = 2 * s.dim;
            Outcome::new(
                Status::Complete,
                json!({
                    "family": "lattice",
                    "dim": s.dim,
                    "degree": degree,
                    "measure": degree,
                    "edge_weight": 1,
                    "jump": 1,
                    "base": s.base.to_string(),
                    "ball_radius": cfg.radius,
                    "ball_size": ball_size,
                }),
            )
        }
        Family::Factorial => {
            let t = factorial()?;
            let mut volume = 0.0;
            let rows: Vec<_> = (0..=depth)
                .map(|n| {
                    volume += t.level_mass(n);
                    json!({"n": n, "level_size": t.level_size(n), "measure": t.level_mass(n) / t.level_size(n), "volume": volume})
                })
                .collect();
            Ok(Outcome::new(Status::Complete, json!({"family": "factorial", "levels": rows}))?
                .with_table(level_table(&t, depth)))
        }
        Family::Homogeneous => {
            let spec = homogeneous_spec(cfg, cfg.n0.unwrap_or(2), 0)?;
            let rows: Vec<_> = (0..=depth)
                .map(|n| {
                    json!({
                        "n": n,
                        "outward_weight": spec.level_weight(n),
                        "distance_laplacian": spec.outward_fraction(n) - spec.inward_fraction(n),
                    })
                })
                .collect();
            Ok(Outcome::new(
                Status::Complete,
                json!({
                    "family": "homogeneous",
                    "degree": spec.degree,
                    "weight_exponent": spec.weight_exponent(),
                    "offset": spec.offset,
                    "max_representable_depth": spec.max_representable_depth(),
                    "levels": rows,
                }),
            )?
            .with_table(level_table(&spec, depth)))
        }
        Family::File => {
            let s = file(cfg)?;
            let edges = s.graph.edges();
            let jump = jump_size(&s.graph, &s.metric, s.graph.vertices());
            let component = ball(&s.graph, &s.metric, &s.base, f64::INFINITY, 0.0, cfg.budget)?;
            Outcome::new(
                Status::Complete,
                json!({
                    "family": "file",
                    "vertices": s.graph.len(),
                    "edges": edges.len(),
                    "connected": component.size == s.graph.len(),
                    "jump": jump.explored,
                    "base": s.base,
                }),
            )
        }
    }
}

fn growth_table(report: &VolumeGrowthReport) -> Table {
    Table {
        file: "growth.csv",
        header: &["R", "W", "ratio", "slope_so_far"],
        rows: report
            .rows
            .iter()
            .map(|r| vec![cell(Some(r.r)), cell(Some(r.w)), cell(Some(r.ratio)), cell(r.slope_so_far)])
            .collect(),
    }
}

fn hypotheses(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sigma = cfg.sigma();
    let report = match cfg.family {
        Family::Lattice => {
            let s = lattice(cfg)?;
            let v = lattice_func(&cfg.v, &s)?;
            let mut spec = ProblemSpec::new(&s.graph, &s.metric, s.base, &v, sigma, cfg.alpha);
            configure(&mut spec, cfg);
            check_hypotheses(&spec, &cfg.radii)?
        }
        Family::File => {
            let s = file(cfg)?;
            let v = file_func(&cfg.v, &s)?;
            let mut spec = ProblemSpec::new(&s.graph, &s.metric, s.base.clone(), &v, sigma, cfg.alpha);
            configure(&mut spec, cfg);
            check_hypotheses(&spec, &cfg.radii)?
        }
        _ => with_profile(cfg, |profile| {
            let mut problem = RadialProblem::new(profile, level_potential(cfg)?, sigma, cfg.alpha);
            problem.r0 = cfg.r0;
            problem.s = cfg.cutoff_power();
            Ok(check_hypotheses_levels(&problem, &cfg.radii)?)
        })?,
    };
    let status = match report.overall {
        Verdict::Pass => Status::Pass,
        Verdict::Fail => Status::Fail,
        Verdict::Inconclusive => Status::Inconclusive,
    };
    let table = report.growth.as_ref().map(growth_table);
    let mut out = Outcome::new(status, &report)?;
    if let Some(t) = table {
        out = out.with_table(t);
    }
    Ok(out)
}

fn configure<G, M, P>(spec: &mut ProblemSpec<'_, G, M, P>, cfg: &RunConfig)
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    spec.r0 = cfg.r0;
    spec.s = cfg.cutoff_power();
    spec.budget = cfg.budget;
}

fn growth(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (sigma, alpha) = (cfg.sigma(), cfg.alpha);
    let report = match cfg.family {
        Family::Lattice => {
            let s = lattice(cfg)?;
            let v = lattice_func(&cfg.v, &s)?;
            volume_growth_report(&s.graph, &s.metric, &s.base, &v, sigma, alpha, &cfg.radii, cfg.budget)?
        }
        Family::File => {
            let s = file(cfg)?;
            let v = file_func(&cfg.v, &s)?;
            volume_growth_report(&s.graph, &s.metric, &s.base, &v, sigma, alpha, &cfg.radii, cfg.budget)?
        }
        _ => with_profile(cfg, |profile| {
            Ok(volume_growth_report_levels(profile, level_potential(cfg)?, sigma, alpha, &cfg.radii)?)
        })?,
    };
    let status = match report.verdict {
        GrowthVerdict::Consistent => Status::Pass,
        GrowthVerdict::ExceedsBound => Status::Fail,
    };
    let table = growth_table(&report);
    Ok(Outcome::new(status, &report)?.with_table(table))
}

/// Turns a subcritical exponent into a rejection report.
fn rejected(err: Error) -> anyhow::Result<Outcome> {
    match err {
        Error::Subcritical { .. } => Outcome::new(Status::Rejected, json!({ "rejected": err.to_string() })),
        other => Err(other.into()),
    }
}

fn verify(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (sigma, delta) = (cfg.sigma(), cfg.delta.expect("validated"));
    match cfg.family {
        Family::Lattice => {
            let s = lattice(cfg)?;
            let u = match LatticeSupersolution::new(s.dim, sigma, delta, cfg.shift.expect("validated")) {
                Ok(u) => u,
                Err(e) => return rejected(e),
            };
            let v = lattice_func(&cfg.v, &s)?;
            let region = ball(&s.graph, &s.metric, &s.base, cfg.radius.unwrap_or(DEFAULT_RADIUS), 0.0, cfg.budget)?;
            let scan = verify_supersolution(&s.graph, &u, &v, sigma, &region, cfg.tol)?;
            Outcome::new(if scan.pass { Status::Pass } else { Status::Fail }, json!({"candidate": u, "scan": scan}))
        }
        Family::Homogeneous => {
            let n0 = cfg.n0.expect("validated");
            let spec = homogeneous_spec(cfg, n0, 0)?;
            let u = TreeSupersolution::new(sigma, spec.epsilon, n0, delta)?;
            u.bind(&spec)?;
            let v = level_potential(cfg)?;
            let levels = cfg.depth.unwrap_or(DEFAULT_LEVELS);
            let scan = scan_levels(&spec, |n| u.level_value(n), v, sigma, 0..=levels, cfg.tol);
            Outcome::new(if scan.pass { Status::Pass } else { Status::Fail }, json!({"candidate": u, "scan": scan}))
        }
        _ => unreachable!("validated"),
    }
}

fn tune(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    if cfg.v != "one" {
        bail!("v: the tuners assume v = one");
    }
    let sigma = cfg.sigma();
    let tuned = match cfg.family {
        Family::Lattice => tune_lattice_parameters(
            cfg.dim.expect("lattice"),
            sigma,
            cfg.radius.unwrap_or(DEFAULT_RADIUS),
            cfg.budget,
        )
        .map(|t| serde_json::to_value(t)),
        Family::Homogeneous => tune_tree_parameters(
            cfg.degree.expect("homogeneous"),
            sigma,
            cfg.epsilon.expect("homogeneous"),
            cfg.depth.unwrap_or(DEFAULT_LEVELS),
        )
        .map(|t| serde_json::to_value(t)),
        _ => unreachable!("validated"),
    };
    match tuned {
        Ok(value) => Outcome::new(Status::Pass, value?),
        Err(Error::Tuning(msg)) => Outcome::new(Status::Fail, json!({ "tuning_failed": msg })),
        Err(e) => rejected(e),
    }
}

fn certificate_table(c: &CapacityCertificate) -> Table {
    Table {
        file: "certificate.csv",
        header: &["R", "LHS", "annulus_mass", "hoelder_bound", "C_hat", "tail_mass"],
        rows: c
            .rows
            .iter()
            .map(|r| {
                [r.r, r.lhs, r.annulus_mass, r.hoelder_bound, r.c_hat, r.tail_mass]
                    .map(|x| cell(Some(x)))
                    .to_vec()
            })
            .collect(),
    }
}

fn certificate(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (sigma, delta) = (cfg.sigma(), cfg.delta.expect("validated"));
    let (cert, candidate) = match cfg.family {
        Family::Lattice => {
            let s = lattice(cfg)?;
            let u = LatticeSupersolution::family_member(s.dim, sigma, delta, cfg.shift.expect("validated"))?;
            let v = lattice_func(&cfg.v, &s)?;
            let mut spec = ProblemSpec::new(&s.graph, &s.metric, s.base, &v, sigma, cfg.alpha);
            configure(&mut spec, cfg);
            (capacity_certificate(&spec, &u, &cfg.radii)?, serde_json::to_value(u)?)
        }
        Family::Homogeneous => {
            let n0 = cfg.n0.expect("validated");
            let spec = homogeneous_spec(cfg, n0, 0)?;
            let u = TreeSupersolution::new(sigma, spec.epsilon, n0, delta)?;
            let mut problem = RadialProblem::new(&spec, level_potential(cfg)?, sigma, cfg.alpha);
            problem.r0 = cfg.r0;
            problem.s = cfg.cutoff_power();
            (capacity_certificate_levels(&problem, |n| u.level_value(n), &cfg.radii)?, serde_json::to_value(u)?)
        }
        _ => unreachable!("validated"),
    };
    let status = match cert.verdict {
        CapacityVerdict::ConsistentWithChain => Status::Pass,
        CapacityVerdict::InconsistentWithBeingASolution { .. } => Status::Fail,
    };
    let table = certificate_table(&cert);
    Ok(Outcome::new(status, json!({"candidate": candidate, "certificate": cert}))?.with_table(table))
}

fn shoot_cmd(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sigma = cfg.sigma();
    let depth = cfg.depth.unwrap_or(DEFAULT_SHOOT_DEPTH);
    with_profile(cfg, |profile| {
        let mut result = serde_json::Map::new();
        let mut tables = Vec::new();
        if let Some(u0) = cfg.u0 {
            let p = shoot(profile, sigma, u0, depth)?;
            let rows = p.rows(profile);
            tables.push(Table {
                file: "profile.csv",
                header: &["n", "u_n", "residual"],
                rows: rows
                    .iter()
                    .map(|r| vec![r.n.to_string(), cell(Some(r.u_n)), cell(r.residual)])
                    .collect(),
            });
            result.insert(
                "profile".into(),
                json!({
                    "u0": u0,
                    "max_depth": depth,
                    "stop": p.stop,
                    "stays_positive": p.stays_positive(),
                    "levels": p.values.len(),
                    "last_value": p.values.last(),
                    "max_relative_residual": p.max_relative_residual(profile),
                }),
            );
        }
        if let Some(bracket) = cfg.bracket {
            let t = bisect_positive_threshold(profile, sigma, depth, bracket)?;
            result.insert("threshold".into(), serde_json::to_value(&t)?);
        }
        let mut out = Outcome::new(Status::Complete, result)?;
        out.tables = tables;
        Ok(out)
    })
}

fn smp_status(v: &MaxPrincipleVerdict) -> Status {
    match v {
        MaxPrincipleVerdict::StrictlyPositive { .. } | MaxPrincipleVerdict::IdenticallyZero { .. } => Status::Pass,
        MaxPrincipleVerdict::Violation { .. } | MaxPrincipleVerdict::NotSuperharmonic { .. } => Status::Fail,
    }
}

fn max_principle(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let u_text = cfg.u.as_deref().expect("validated");
    let verdict = match cfg.family {
        Family::Lattice => {
            let s = lattice(cfg)?;
            let u = lattice_func(u_text, &s)?;
            let region = ball(&s.graph, &s.metric, &s.base, cfg.radius.unwrap_or(10.0), 0.0, cfg.budget)?;
            strong_maximum_principle_check(&s.graph, &u, &region.vertices, cfg.tol)?
        }
        Family::File => {
            let s = file(cfg)?;
            let u = file_func(u_text, &s)?;
            let radius = cfg.radius.unwrap_or(f64::INFINITY);
            let region = ball(&s.graph, &s.metric, &s.base, radius, 0.0, cfg.budget)?;
            strong_maximum_principle_check(&s.graph, &u, &region.vertices, cfg.tol)?
        }
        _ => unreachable!("validated"),
    };
    Outcome::new(smp_status(&verdict), &verdict)
}
