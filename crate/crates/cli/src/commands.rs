use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use curlgrid::diffops;
use curlgrid::io::{self, read_pgm_file};
use curlgrid::monitor;
use curlgrid::optimizer::{self, OptimizerTrace, StopReason};
use curlgrid::poisson::{self, SolverConfig};
use curlgrid::synthetic;
use curlgrid::uniqueness::{self, ChainReport};
use curlgrid::{GridSpec, Transformation, VectorField};

use crate::failure::Failure;
use crate::output::{OutputDir, RunManifest};
use crate::{
    BoundsArgs, CheckArgs, ExportVtkArgs, FixedPointArgs, GenerateArgs, Image2MonitorArgs, OptimizerArgs,
    ReconstructArgs,
};

type Outcome = Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn grid(dim: usize, n: usize) -> Result<GridSpec, Failure> {
    Ok(GridSpec::new(dim, n)?)
}

fn finish<W: Write>(mut w: W) -> Outcome {
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}

fn with_optimizer(manifest: RunManifest, args: &OptimizerArgs) -> Result<RunManifest, Failure> {
    manifest.config_of("optimizer", &args.config())
}

pub fn image2monitor(a: &Image2MonitorArgs) -> Outcome {
    let out = OutputDir::claim(&a.out.out, a.out.force, &[monitor::MANIFEST_NAME, "f0.fld", "g0.fld"])?;
    out.write_manifest(
        &RunManifest::new("image2monitor", &a.out.out)
            .input(&a.image)
            .grid(Some(a.n), Some(a.dim))
            .set("beta", a.beta)
            .set("use_curl", a.use_curl),
    )?;
    let g = grid(a.dim, a.n)?;
    let image = read_pgm_file(&a.image)?;
    let m = monitor::monitor_from_image(&image, a.beta, g, a.use_curl)?;
    let path = monitor::save_monitor(&m, &a.out.out)?;
    println!(
        "monitor {} ({}x{} image, N={}, f0 in [{:.6}, {:.6}])",
        path.display(),
        image.width(),
        image.height(),
        a.n,
        m.f0().min_value(),
        m.f0().values().iter().cloned().fold(f64::MIN, f64::max)
    );
    Ok(())
}

const MESH_OUTPUTS: [&str; 4] = ["mesh.fld", "mesh.vtk", "trace.csv", "summary.txt"];

/// Writes the mesh, trace and summary; a failed solve still flushes the trace.
fn write_run(out: &OutputDir, phi: &Transformation, trace: &OptimizerTrace, title: &str) -> Outcome {
    trace.write_csv(out.create("trace.csv")?)?;
    let mut fld = out.create("mesh.fld")?;
    io::write_field(phi.positions(), &mut fld)?;
    finish(fld)?;
    let jac = diffops::jacobian_det(phi);
    let mut vtk = out.create("mesh.vtk")?;
    io::write_structured_grid(phi, &[("jacobian", &jac)], title, &mut vtk)?;
    finish(vtk)?;

    let last = trace.final_record();
    let stop = match &trace.stop {
        StopReason::Converged => "converged".to_string(),
        StopReason::SigmaExhausted => "sigma exhausted".to_string(),
        StopReason::MaxOuter => "iteration limit".to_string(),
        StopReason::SolverFailure(m) => format!("solver failure ({m})"),
    };
    let mut summary = format!(
        "final ssd {:e}, min J {:.6}, {} iterations, {stop}",
        last.ssd,
        last.min_jacobian,
        trace.accepted_iterations()
    );
    if trace.folded {
        summary.push_str(", FOLDED");
    }
    if let Some(bias) = trace.normalization_bias {
        summary.push_str(&format!(", normalization bias {bias:e}"));
    }
    if let Some(e) = trace.target_errors.last() {
        summary.push_str(&format!(", final error {e:e}"));
    }
    println!("{summary}");
    std::fs::write(out.path("summary.txt"), format!("{summary}\n"))
        .map_err(|e| Failure::Input(e.to_string()))?;
    match &trace.stop {
        StopReason::SolverFailure(m) => Err(Failure::Solver(m.clone())),
        _ => Ok(()),
    }
}

pub fn generate(a: &GenerateArgs) -> Outcome {
    let out = OutputDir::claim(&a.out.out, a.out.force, &MESH_OUTPUTS)?;
    out.write_manifest(
        &with_optimizer(
            RunManifest::new("generate", &a.out.out)
                .input(&a.monitor)
                .grid(a.n, None)
                .set("use_curl", a.use_curl),
            &a.optimizer,
        )?,
    )?;
    let m = monitor::load_monitor(&a.monitor)?;
    if let Some(n) = a.n {
        if n != m.grid().n() {
            return Err(Failure::Input(format!("--n {n} but the monitor lives on N={}", m.grid().n())));
        }
    }
    let m = if a.use_curl { m.with_curl_enabled(true) } else { m };
    let start = Transformation::identity(*m.grid());
    let (phi, trace) = optimizer::minimize(&start, &m, &a.optimizer.config())?;
    write_run(&out, &phi, &trace, "curlgrid generate")
}

pub fn reconstruct(a: &ReconstructArgs) -> Outcome {
    let mut outputs = MESH_OUTPUTS.to_vec();
    outputs.push("errors.csv");
    let out = OutputDir::claim(&a.out.out, a.out.force, &outputs)?;
    let mut manifest = RunManifest::new("reconstruct", &a.out.out).set("use_curl", a.use_curl);
    manifest = match (&a.t0, a.sine) {
        (Some(path), _) => manifest.input(path),
        (None, Some(amp)) => manifest.grid(Some(a.n), Some(a.dim)).set("sine_amplitude", amp),
        (None, None) => unreachable!("clap requires one target"),
    };
    out.write_manifest(&with_optimizer(manifest, &a.optimizer)?)?;

    let t0 = match (&a.t0, a.sine) {
        (Some(path), _) => Transformation::from_positions(io::read_field(open(path)?)?)?,
        (None, Some(amp)) => synthetic::sine_target(grid(a.dim, a.n)?, amp)?,
        (None, None) => unreachable!("clap requires one target"),
    };
    let (phi, trace) = optimizer::reconstruct(&t0, a.use_curl, &a.optimizer.config())?;
    let mut w = csv::Writer::from_writer(out.create("errors.csv")?);
    w.write_record(["iter", "error_l2"]).map_err(csv_failure)?;
    for (rec, e) in trace.records.iter().zip(&trace.target_errors) {
        w.write_record(&[rec.iteration.to_string(), format!("{e:e}")]).map_err(csv_failure)?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))?;
    write_run(&out, &phi, &trace, "curlgrid reconstruct")
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure::Input(e.to_string())
}

pub fn check(a: &CheckArgs) -> Outcome {
    let out = OutputDir::claim(&a.out.out, a.out.force, &["chain.csv"])?;
    out.write_manifest(
        &RunManifest::new("check", &a.out.out)
            .grid(Some(a.n), Some(a.dim))
            .seed(a.seed)
            .set("trials", a.trials as i64),
    )?;
    let g = grid(a.dim, a.n)?;
    let c = poisson::poincare_constant(&g);
    let mut w = csv::Writer::from_writer(out.create("chain.csv")?);
    w.write_record(ChainReport::CSV_HEADER).map_err(csv_failure)?;
    let mut passed = 0;
    for trial in 0..a.trials {
        let u = uniqueness::random_zero_boundary(g, a.dim, a.seed.wrapping_add(trial as u64));
        let report = uniqueness::chain_report(&u, c)?;
        if report.all_pass() {
            passed += 1;
        }
        report.write_csv_rows(trial, &mut w)?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))?;
    println!("{passed} of {} trials pass every unconditional relation (C = {c:e})", a.trials);
    Ok(())
}

pub fn bounds(a: &BoundsArgs) -> Outcome {
    let out = OutputDir::claim(&a.out.out, a.out.force, &["bounds.csv"])?;
    let mut manifest = RunManifest::new("bounds", &a.out.out)
        .set("epsilon", a.epsilon)
        .set("k_max", a.k_max as i64);
    if let Some(c) = a.c {
        manifest = manifest.set("c", c);
    } else {
        manifest = manifest.grid(a.grid, Some(a.dim));
    }
    out.write_manifest(&manifest)?;
    let c = match (a.c, a.grid) {
        (Some(c), _) => c,
        (None, Some(n)) => poisson::poincare_constant(&grid(a.dim, n)?),
        (None, None) => unreachable!("clap requires C or a grid"),
    };
    let seq = uniqueness::bound_sequence(a.epsilon, c, a.k_max)?;
    seq.write_csv(out.create("bounds.csv")?)?;
    println!("epsilon {:e}, C {c:e}, convergent={}", a.epsilon, u8::from(seq.convergent));
    Ok(())
}

enum Init {
    Zero,
    Triple(f64),
    Sup(f64),
}

fn parse_init(spec: &str) -> Result<Init, Failure> {
    let bad = || Failure::Input(format!("--init {spec:?}: expected zero, triple:<eps> or sup:<a>"));
    if spec == "zero" {
        return Ok(Init::Zero);
    }
    let (kind, value) = spec.split_once(':').ok_or_else(bad)?;
    let value: f64 = value.parse().map_err(|_| bad())?;
    if !(value >= 0.0 && value.is_finite()) {
        return Err(bad());
    }
    match kind {
        "triple" => Ok(Init::Triple(value)),
        "sup" => Ok(Init::Sup(value)),
        _ => Err(bad()),
    }
}

pub fn fixed_point(a: &FixedPointArgs) -> Outcome {
    let out = OutputDir::claim(&a.out.out, a.out.force, &["fixed_point.csv"])?;
    out.write_manifest(
        &RunManifest::new("fixed-point", &a.out.out)
            .grid(Some(a.n), Some(a.dim))
            .seed(a.seed)
            .set("init", a.init.clone())
            .set("m_max", a.m_max as i64),
    )?;
    let g = grid(a.dim, a.n)?;
    let seed = match parse_init(&a.init)? {
        Init::Zero => VectorField::zeros(g, a.dim),
        Init::Triple(eps) => uniqueness::scaled_seed(g, a.seed, eps)?,
        Init::Sup(amp) => uniqueness::sup_scaled_seed(g, a.seed, amp),
    };
    let run = uniqueness::fixed_point_iteration(&seed, a.m_max, &SolverConfig::default())?;
    run.write_csv(out.create("fixed_point.csv")?)?;
    let last = run.triples.last().expect("seed row");
    let mut line = format!("{} iterations, final u_l2 {:e}", run.triples.len() - 1, last.u_l2);
    if run.diverged {
        line.push_str(", DIVERGED");
    }
    println!("{line}");
    Ok(())
}

pub fn export_vtk(a: &ExportVtkArgs) -> Outcome {
    if a.out.exists() && !a.force {
        return Err(Failure::Input(format!("{} exists; pass --force to overwrite", a.out.display())));
    }
    let field = io::read_field(open(&a.input)?)?;
    let g = *field.grid();
    let (mesh, name, data) = if field.component_count() == g.dim() {
        let mesh = Transformation::from_positions(field)?;
        let jac = diffops::jacobian_det(&mesh);
        (mesh, "jacobian", jac)
    } else if field.component_count() == 1 {
        (Transformation::identity(g), "value", field.into_components().remove(0))
    } else {
        return Err(Failure::Input(format!(
            "{} holds {} components; expected 1 or {}",
            a.input.display(),
            field.component_count(),
            g.dim()
        )));
    };
    let mut sink = File::create(&a.out)
        .map(std::io::BufWriter::new)
        .map_err(|e| Failure::Input(format!("{}: {e}", a.out.display())))?;
    let title = format!("curlgrid export of {}", a.input.display());
    io::write_structured_grid(&mesh, &[(name, &data)], &title, &mut sink)?;
    finish(sink)?;
    println!("wrote {} ({} points)", a.out.display(), g.len());
    Ok(())
}
