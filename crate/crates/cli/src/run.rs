//! The three commands and their artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rotopt::drivecycle::{evaluate_cycle, rpm_to_rad_per_s, TraceSample};
use rotopt::materials::{IronCurve, TabulatedCurve};
use rotopt::mesh::vtk::{write_vtk, Field};
use rotopt::optimizer::{write_history, Evaluation, LevelSetField, Terms};
use rotopt::{cluster_cycle, read_trace, CurrentExcitation, DesignState, EfficiencyReport, MqsModel, MtpaTable, Problem};
use serde::Serialize;

use crate::config::RunConfig;

const BUNDLED_TRACE: &str = include_str!("../../../data/wltp3_scaled.csv");

pub type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Problem and initial design assembled from a config.
pub fn setup(cfg: &RunConfig) -> AnyResult<(Problem, DesignState)> {
    let curve = match &cfg.materials.bh_table {
        Some(p) => Some(IronCurve::Table(TabulatedCurve::parse(&std::fs::read_to_string(p)?)?)),
        None => None,
    };
    let materials = cfg.materials.constants.build(curve)?;
    let mqs = MqsModel::new(&cfg.geometry, cfg.mesh.edge_length, materials)?;
    let design = cfg.layout.design(&mqs.mesh);
    let trace: Vec<TraceSample> = match &cfg.cycle.trace {
        Some(p) => read_trace(File::open(p)?)?,
        None => read_trace(BUNDLED_TRACE.as_bytes())?,
    };
    let cycle = cluster_cycle(&trace, (cfg.cycle.grid[0], cfg.cycle.grid[1]))?;
    log::info!(
        "{} nodes, {} triangles, {} operating points",
        mqs.mesh.n_nodes(),
        mqs.mesh.n_triangles(),
        cycle.points.len()
    );
    let excitation = CurrentExcitation {
        turns_per_slot: cfg.winding.turns_per_slot,
        fill_factor: cfg.winding.fill_factor,
        ..CurrentExcitation::new(0.0, 0.0)
    };
    let mut problem = Problem::new(
        mqs,
        cfg.thermal,
        cycle,
        cfg.optimizer.weights(),
        cfg.winding.resistance,
        excitation,
        cfg.mtpa,
    )?;
    if let Some(rpm) = cfg.optimizer.stress_speed_rpm {
        problem.elastic_speed = rpm_to_rad_per_s(rpm);
    }
    Ok((problem, design))
}

fn create(path: &Path) -> AnyResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot create {}: {e}", path.display()).into())
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    command: &'a str,
    seed: u64,
    workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<toml::Table>,
    config: &'a RunConfig,
}

pub struct Context<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub seed: u64,
    pub workers: usize,
}

impl Context<'_> {
    fn out(&self) -> &Path {
        &self.config.output.dir
    }

    /// Writes `manifest.toml` with the resolved config echo.
    fn manifest(&self, result: Option<toml::Table>) -> AnyResult<()> {
        let m = Manifest {
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            workers: self.workers,
            result,
            config: self.config,
        };
        let mut w = create(&self.out().join("manifest.toml"))?;
        w.write_all(toml::to_string(&m)?.as_bytes())?;
        w.flush()?;
        Ok(())
    }
}

pub fn run(ctx: &Context) -> AnyResult<()> {
    std::fs::create_dir_all(ctx.out())?;
    ctx.manifest(None)?;
    let (problem, design) = setup(ctx.config)?;
    let result = match ctx.command {
        "mtpa" => mtpa(ctx, &problem, &design)?,
        "analyze" => analyze(ctx, &problem, &design)?,
        "optimize" => optimize(ctx, &problem, &design)?,
        other => return Err(format!("unknown command {other}").into()),
    };
    ctx.manifest(Some(result))
}

fn write_mtpa(path: &Path, table: &MtpaTable) -> AnyResult<()> {
    let mut w = create(path)?;
    writeln!(w, "current_A,angle_rad,torque_Nm")?;
    for s in &table.samples {
        writeln!(w, "{:.9e},{:.9e},{:.9e}", s.current, s.angle, s.torque)?;
    }
    w.flush()?;
    Ok(())
}

fn mtpa(ctx: &Context, problem: &Problem, design: &DesignState) -> AnyResult<toml::Table> {
    let table = problem.mtpa_table(design)?;
    write_mtpa(&ctx.out().join("mtpa.csv"), &table)?;
    let mut r = toml::Table::new();
    r.insert("samples".into(), (table.samples.len() as i64).into());
    r.insert("max_torque_Nm".into(), table.max_torque().into());
    Ok(r)
}

fn efficiency(problem: &Problem, design: &DesignState) -> AnyResult<(MtpaTable, EfficiencyReport)> {
    let table = problem.mtpa_table(design)?;
    let report = evaluate_cycle(
        &problem.mqs,
        design,
        &problem.cycle,
        &table,
        problem.resistance,
        &problem.excitation,
        None,
    )?;
    Ok((table, report))
}

fn write_efficiency(path: &Path, report: &EfficiencyReport) -> AnyResult<()> {
    let mut w = create(path)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// `E`, max ϑ and max √s_VM of one evaluation.
fn summary(problem: &Problem, eval: &Evaluation, efficiency: f64) -> [(&'static str, f64); 6] {
    let th = eval.thermal.as_ref().expect("thermal term evaluated");
    let el = eval.elastic.as_ref().expect("stress term evaluated");
    let svm = el.field.von_mises_sq();
    let max_stress = problem
        .elastic
        .rotor
        .triangles
        .iter()
        .map(|&t| svm[t])
        .fold(0.0, f64::max)
        .sqrt();
    [
        ("efficiency", efficiency),
        ("max_theta_C", th.field.max()),
        ("max_magnet_theta_C", rotopt::thermal::max_magnet_temperature(&problem.mqs.mesh, &th.field, &eval.design)),
        ("max_sqrt_sVM_Pa", max_stress),
        ("C_t", th.constraint),
        ("C_VM", el.constraint),
    ]
}

fn analyze(ctx: &Context, problem: &Problem, design: &DesignState) -> AnyResult<toml::Table> {
    let (table, report) = efficiency(problem, design)?;
    write_mtpa(&ctx.out().join("mtpa.csv"), &table)?;
    write_efficiency(&ctx.out().join("efficiency.csv"), &report)?;
    let currents = problem.currents(&table)?;
    let eddy = report.fields[problem.cycle.thermal_op].clone();
    let eval = problem.evaluate(design, &currents, Terms::ALL, None, Some(eddy))?;
    let cols = summary(problem, &eval, report.efficiency);
    let mut w = create(&ctx.out().join("summary.csv"))?;
    writeln!(w, "{}", cols.map(|c| c.0).join(","))?;
    writeln!(w, "{}", cols.map(|c| format!("{:.9e}", c.1)).join(","))?;
    w.flush()?;
    write_snapshot(&ctx.out().join("design.vtk"), problem, &eval, None)?;
    Ok(cols.into_iter().map(|(k, v)| (k.to_string(), v.into())).collect())
}

fn optimize(ctx: &Context, problem: &Problem, design: &DesignState) -> AnyResult<toml::Table> {
    let snapshots = ctx.out().join("snapshots");
    std::fs::create_dir_all(&snapshots)?;
    let stride = ctx.config.output.snapshot_stride;
    let mut last: Option<(usize, LevelSetField, Evaluation)> = None;
    let mut failure: Option<Box<dyn std::error::Error>> = None;
    let result = rotopt::run_optimization(problem, design, &ctx.config.optimizer.options(), &mut |rec, ls, eval| {
        let m = rec.iteration;
        if m == 0 || (stride > 0 && m % stride == 0) {
            let path = snapshots.join(format!("iter_{m:04}.vtk"));
            if let Err(e) = write_snapshot(&path, problem, eval, Some(ls)) {
                failure.get_or_insert(e);
            }
        }
        last = Some((m, ls.clone(), eval.clone()));
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut w = create(&ctx.out().join("history.csv"))?;
    write_history(&result.history, &mut w)?;
    w.flush()?;
    if let Some((m, ls, eval)) = &last {
        write_snapshot(&snapshots.join(format!("final_{m:04}.vtk")), problem, eval, Some(ls))?;
    }
    let (_, initial) = efficiency(problem, &result.initial_design)?;
    write_efficiency(&ctx.out().join("efficiency_initial.csv"), &initial)?;
    let (_, fin) = efficiency(problem, &result.design)?;
    write_efficiency(&ctx.out().join("efficiency_final.csv"), &fin)?;
    let mut r = toml::Table::new();
    r.insert("termination".into(), format!("{:?}", result.termination).into());
    r.insert("iterations".into(), (result.history.len() as i64).into());
    r.insert("initial_efficiency".into(), initial.efficiency.into());
    r.insert("final_efficiency".into(), fin.efficiency.into());
    Ok(r)
}

/// Fields of `eval` at the thermal operating point, first time step.
pub fn write_snapshot(path: &Path, problem: &Problem, eval: &Evaluation, ls: Option<&LevelSetField>) -> AnyResult<()> {
    let mqs = &problem.mqs;
    let mesh = &mqs.mesh;
    let (nn, nt) = (mesh.n_nodes(), mesh.n_triangles());
    let th = eval.thermal.as_ref();
    let el = eval.elastic.as_ref();
    let a: Vec<f64> = match (th, eval.fields.first()) {
        (Some(th), _) => th.eddy.snapshots[0].clone(),
        (None, Some(f)) => f.snapshots[0].clone(),
        _ => vec![0.0; nn],
    };
    let mut b_node = vec![0.0; nn];
    let mut weight = vec![0.0; nn];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let e = &mqs.elements[t];
        let b = e.curl_of(tri.map(|v| a[v]));
        for &v in tri {
            b_node[v] += e.area * b[0].hypot(b[1]);
            weight[v] += e.area;
        }
    }
    b_node.iter_mut().zip(&weight).for_each(|(b, w)| *b /= w);
    let theta = th.map_or_else(|| vec![problem.thermal.params.ambient; nn], |s| s.field.temperature.clone());
    let u = el.map_or_else(|| vec![[0.0; 2]; nn], |s| s.field.displacement.clone());
    let svm: Vec<f64> = el.map_or_else(|| vec![0.0; nt], |s| s.field.von_mises_sq().iter().map(|x| x.sqrt()).collect());
    let pec = th.map_or_else(|| vec![0.0; nt], |s| s.density.clone());
    let material: Vec<f64> = (0..nt).map(|t| eval.design.material(t).index() as f64).collect();
    let psi: Vec<Vec<f64>> = match ls {
        Some(ls) => (0..ls.dim)
            .map(|c| {
                let mut p = vec![0.0; nn];
                for (l, &v) in ls.nodes.iter().enumerate() {
                    p[v] = ls.node(l)[c];
                }
                p
            })
            .collect(),
        None => Vec::new(),
    };
    let names: Vec<String> = (0..psi.len()).map(|c| format!("psi_{}", c + 1)).collect();
    let mut points = vec![
        ("a", Field::Scalar(&a)),
        ("b_abs", Field::Scalar(&b_node)),
        ("theta", Field::Scalar(&theta)),
        ("u", Field::Vector(&u)),
    ];
    for (n, p) in names.iter().zip(&psi) {
        points.push((n.as_str(), Field::Scalar(p)));
    }
    let cells = [
        ("p_ec", Field::Scalar(&pec)),
        ("sqrt_s_vm", Field::Scalar(&svm)),
        ("material", Field::Scalar(&material)),
    ];
    let mut w = create(path)?;
    write_vtk(&mut w, mesh, "rotor design", &points, &cells)?;
    w.flush()?;
    Ok(())
}
