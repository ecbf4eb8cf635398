//! One function per subcommand.

use fracle_core::exponents::{sample_region, ThetaWindow};
use fracle_core::hamiltonian::{self, audit_growth, AuditBox};
use fracle_core::operators::{assemble_generalized, OperatorKind, OperatorMatrix, OperatorSpec};
use fracle_core::solver::{self, palais_smale_trace, Method, PalaisSmaleDiagnostic, SolveError, SolveReport};
use fracle_core::spectral::{eig_decompose, EigenSystem, ProductElement};
use fracle_core::variational::{
    pick_munu, verify_i3, verify_i4_i5, InvertibilityReport, LinkingFace, LinkingGeometry, ResidualReport,
};
use fracle_core::{make_grid, DomainGrid};
use serde::Serialize;

use crate::cli::{AuditArgs, LinkingArgs, RegionArgs, SolveArgs, SpectrumArgs, SpectrumKind, VerifyArgs};
use crate::config::{load, prepare, Prepared};
use crate::formats::{
    region_csv, region_svg, solution_csv, solution_json, to_json, trace_csv, write_text, BinaryMatrix, GridDescriptor,
};
use crate::CliError;

pub fn region(a: &RegionArgs) -> Result<(), CliError> {
    let r = sample_region(a.n, a.s, a.p_range, a.q_range, a.resolution).map_err(|e| CliError::model("region", e))?;
    write_text(&a.out, &region_csv(&r))?;
    if let Some(svg) = &a.svg {
        write_text(svg, &region_svg(&r))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ExponentSummary {
    n: usize,
    s: f64,
    p: f64,
    q: f64,
    theta: f64,
    window: (f64, f64),
}

impl ExponentSummary {
    fn of(p: &Prepared) -> Self {
        let ThetaWindow { lo, hi, .. } = p.window;
        Self { n: p.exponents.n, s: p.exponents.s, p: p.exponents.p, q: p.exponents.q, theta: p.theta, window: (lo, hi) }
    }
}

#[derive(Serialize)]
struct SolveSummary {
    outcome: &'static str,
    message: Option<String>,
    method: Method,
    hamiltonian: String,
    operator: String,
    grid: GridDescriptor,
    exponents: ExponentSummary,
    converged: bool,
    nontrivial: bool,
    iterations: usize,
    energy: f64,
    residuals: ResidualReport,
    sup_norm: f64,
    min_u: f64,
    min_v: f64,
    symmetry_gap: f64,
    palais_smale: Option<PalaisSmaleDiagnostic>,
}

fn summarize(p: &Prepared, op: &OperatorMatrix, r: &SolveReport, outcome: &'static str, message: Option<String>) -> SolveSummary {
    let (u, v) = (r.z.u.values(), r.z.v.values());
    let min = |x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min);
    SolveSummary {
        outcome,
        message,
        method: r.method,
        hamiltonian: p.hamiltonian.name.clone(),
        operator: op.kind().to_string(),
        grid: GridDescriptor::of(&p.grid),
        exponents: ExponentSummary::of(p),
        converged: r.converged,
        nontrivial: r.nontrivial,
        iterations: r.iterations,
        energy: r.energy,
        residuals: r.residuals.clone(),
        sup_norm: r.z.sup_norm(),
        min_u: min(u),
        min_v: min(v),
        symmetry_gap: u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        palais_smale: palais_smale_trace(r).ok(),
    }
}

pub fn solve(a: &SolveArgs) -> Result<(), CliError> {
    let prepared = prepare(load(&a.config)?, &a.config)?;
    let out = a.out.clone().unwrap_or_else(|| prepared.output_dir());
    let functional = prepared.functional()?;
    let cfg = prepared.solver_config()?;
    let result = solver::solve(&functional, &cfg);
    let (report, outcome, err) = match result {
        Ok(r) => (r, "converged", None),
        Err(SolveError::Model(e)) => return Err(CliError::model("solve", e)),
        Err(e) => {
            let (outcome, mapped) = match &e {
                SolveError::ConvergedToTrivial { .. } => ("trivial", CliError::Trivial(format!("solve: {e}"))),
                SolveError::MaxIterExceeded(_) => ("max_iter_exceeded", CliError::NotConverged(format!("solve: {e}"))),
                SolveError::SingularJacobian(_) => ("singular_jacobian", CliError::NotConverged(format!("solve: {e}"))),
                SolveError::Stagnation(_) => ("stagnation", CliError::NotConverged(format!("solve: {e}"))),
                SolveError::NegativePhase { .. } => ("negative_phase", CliError::NotConverged(format!("solve: {e}"))),
                SolveError::Model(_) => unreachable!(),
            };
            let report = e.report().cloned().expect("iteration failures carry a report");
            (report, outcome, Some(mapped))
        }
    };
    let summary = summarize(&prepared, functional.operator(), &report, outcome, err.as_ref().map(ToString::to_string));
    write_text(&out.join("report.json"), &to_json(&summary))?;
    write_text(&out.join("solution.json"), &solution_json(&report.z))?;
    write_text(&out.join("solution.csv"), &solution_csv(&report.z))?;
    write_text(&out.join("trace.csv"), &trace_csv(&report.ps_trace))?;
    err.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct VerifySummary {
    hamiltonian: String,
    exponents: ExponentSummary,
    threshold: f64,
    passed: bool,
    nontrivial: bool,
    e_norm: f64,
    residuals: ResidualReport,
}

/// Tolerance on `||z||_E` below which a solution counts as the trivial one.
const TRIVIAL_NORM: f64 = 1e-8;

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let prepared = prepare(load(&a.config)?, &a.config)?;
    let z = crate::formats::read_solution(&a.solution)?;
    if *z.grid() != prepared.grid {
        return Err(CliError::Invalid(format!("{}: grid differs from the config grid", a.solution.display())));
    }
    let f = prepared.functional()?;
    let residuals = f.residuals(&z).map_err(|e| CliError::model("verify", e))?;
    let e_norm = f.eigensystem().e_norm(f.theta(), &z).map_err(|e| CliError::model("verify", e))?;
    let threshold = prepared.config.verify.threshold;
    let passed = residuals.max_residual() < threshold;
    let summary = VerifySummary {
        hamiltonian: prepared.hamiltonian.name.clone(),
        exponents: ExponentSummary::of(&prepared),
        threshold,
        passed,
        nontrivial: e_norm > TRIVIAL_NORM,
        e_norm,
        residuals,
    };
    let text = to_json(&summary);
    match &a.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "verify: largest residual {:e} is not below {threshold:e}",
            summary.residuals.max_residual()
        )))
    }
}

fn spectrum_operator(kind: SpectrumKind, s: Option<f64>, grid: &DomainGrid) -> Result<OperatorMatrix, CliError> {
    let need_s = || s.ok_or_else(|| CliError::Invalid(String::from("spectrum: --s is required for fractional kinds")));
    let kind = match kind {
        SpectrumKind::Local => OperatorKind::Local,
        SpectrumKind::SpectralFractional => OperatorKind::SpectralFractional(need_s()?),
        SpectrumKind::IntegralFractional => OperatorKind::IntegralFractional(need_s()?),
    };
    assemble_generalized(grid, &OperatorSpec::new(kind)).map_err(|e| CliError::model("spectrum", e))
}

#[derive(Serialize)]
struct RefinementRow {
    k: usize,
    lambda: f64,
    lambda_refined: f64,
    relative_difference: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    operator: String,
    grid: GridDescriptor,
    count: usize,
    lambda_min: f64,
    lambda_max: f64,
    orthonormality_defect: f64,
    refinement: Option<Vec<RefinementRow>>,
}

pub fn spectrum(a: &SpectrumArgs) -> Result<(), CliError> {
    if a.extent.len() != a.n.len() {
        return Err(CliError::Invalid(format!("spectrum: {} extents but {} node counts", a.extent.len(), a.n.len())));
    }
    let grid = make_grid(a.n.len(), &a.extent, &a.n).map_err(|e| CliError::model("spectrum", e))?;
    let op = spectrum_operator(a.kind, a.s, &grid)?;
    let e = eig_decompose(&op).map_err(|e| CliError::model("spectrum", e))?;
    let count = a.count.unwrap_or(e.len()).min(e.len());
    if count == 0 {
        return Err(CliError::Invalid(String::from("spectrum: --count must be positive")));
    }
    let lam = e.eigenvalues();
    let mut csv = String::from("k,lambda\n");
    for (k, l) in lam.iter().take(count).enumerate() {
        csv.push_str(&format!("{},{l}\n", k + 1));
    }
    write_text(&a.out, &csv)?;

    if let Some(path) = &a.summary {
        let refinement = if a.refine {
            let fine_grid = grid.refined();
            let fine = eig_decompose(&spectrum_operator(a.kind, a.s, &fine_grid)?).map_err(|e| CliError::model("spectrum", e))?;
            Some(
                lam.iter()
                    .zip(fine.eigenvalues())
                    .take(count)
                    .enumerate()
                    .map(|(k, (&c, &f))| RefinementRow { k: k + 1, lambda: c, lambda_refined: f, relative_difference: (c - f).abs() / f.abs() })
                    .collect(),
            )
        } else {
            None
        };
        let summary = SpectrumSummary {
            operator: op.kind().to_string(),
            grid: GridDescriptor::of(&grid),
            count,
            lambda_min: lam[0],
            lambda_max: lam[lam.len() - 1],
            orthonormality_defect: e.orthonormality_defect(),
            refinement,
        };
        write_text(path, &to_json(&summary))?;
    }
    if let Some(path) = &a.eigensystem {
        eigensystem_binary(&op, &e).write(path)?;
    }
    if let Some(path) = &a.matrix {
        let n = op.len();
        BinaryMatrix {
            n,
            kind: op.kind().to_string(),
            s: op.order(),
            entries: op.entries().transpose().as_slice().to_vec(),
            aux: op.mass().to_vec(),
        }
        .write(path)?;
    }
    Ok(())
}

fn eigensystem_binary(op: &OperatorMatrix, e: &EigenSystem) -> BinaryMatrix {
    BinaryMatrix {
        n: e.len(),
        kind: op.kind().to_string(),
        s: op.order(),
        entries: e.eigenvectors().transpose().as_slice().to_vec(),
        aux: e.eigenvalues().to_vec(),
    }
}

pub fn audit(a: &AuditArgs, seed: u64) -> Result<(), CliError> {
    let spec = hamiltonian::parse(&a.hamiltonian).map_err(|e| CliError::model("audit-hamiltonian", e))?;
    if !(a.half_width > 0.0 && a.half_width.is_finite()) {
        return Err(CliError::Invalid(format!("audit-hamiltonian: half width {} must be positive", a.half_width)));
    }
    let report = audit_growth(&spec, &AuditBox::square(a.half_width), a.samples, seed)
        .map_err(|e| CliError::model("audit-hamiltonian", e))?;
    write_text(&a.out, &to_json(&report))?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.conditions.iter().filter(|c| c.violations > 0).map(|c| c.condition.as_str()).collect();
        Err(CliError::CheckFailed(format!("audit-hamiltonian: violated {}", failed.join(", "))))
    }
}

#[derive(Serialize)]
struct SampleSummary {
    face: LinkingFace,
    t: f64,
    radius: f64,
    energy: f64,
}

#[derive(Serialize)]
struct LinkingSummary {
    hamiltonian: String,
    exponents: ExponentSummary,
    mu: f64,
    nu: f64,
    rho: f64,
    sigma: f64,
    sigma_lower_bound: f64,
    big_m: f64,
    mode: usize,
    samples: usize,
    seed: u64,
    delta: f64,
    min_on_s: SampleSummary,
    max_on_boundary: SampleSummary,
    i4_pass: bool,
    i5_pass: bool,
    i3: Vec<InvertibilityReport>,
    passed: bool,
}

pub fn linking(a: &LinkingArgs, seed: Option<u64>) -> Result<(), CliError> {
    let prepared = prepare(load(&a.config)?, &a.config)?;
    let seed = seed.unwrap_or(prepared.config.seed);
    let f = prepared.functional()?;
    let e = f.eigensystem();
    let theta = f.theta();
    let model = |err| CliError::model("linking", err);
    let munu = pick_munu(prepared.hamiltonian.p, prepared.hamiltonian.q).map_err(model)?;
    let big_m = if a.big_m == "auto" {
        if a.mode >= e.len() {
            return Err(CliError::Invalid(format!("linking: mode {} beyond {} eigenpairs", a.mode, e.len())));
        }
        let z_plus = e.eigenspace_element(theta, &e.mode(a.mode), 1.0).map_err(model)?;
        2.0 * a.sigma * e.e_norm(theta, &z_plus).map_err(model)? + a.rho
    } else {
        a.big_m.parse().map_err(|_| CliError::Invalid(format!("linking: --big-m '{}' is neither a number nor auto", a.big_m)))?
    };
    let geom = LinkingGeometry::new(e, theta, munu, a.rho, a.sigma, big_m, a.mode, a.delta).map_err(model)?;
    let report = verify_i4_i5(&f, &geom, a.samples, seed).map_err(model)?;
    let i3 = a.omega.iter().map(|&w| verify_i3(e, theta, &geom, w)).collect::<Result<Vec<_>, _>>().map_err(model)?;
    let energy = |z: &ProductElement| f.energy(z).map_err(model);
    let passed = report.i4_pass && report.i5_pass && i3.iter().all(|r| r.passed);
    let summary = LinkingSummary {
        hamiltonian: prepared.hamiltonian.name.clone(),
        exponents: ExponentSummary::of(&prepared),
        mu: geom.mu,
        nu: geom.nu,
        rho: geom.rho,
        sigma: geom.sigma,
        sigma_lower_bound: geom.sigma_bound(e).map_err(model)?,
        big_m,
        mode: a.mode,
        samples: a.samples,
        seed,
        delta: report.delta,
        min_on_s: SampleSummary {
            face: report.argmin.face,
            t: report.argmin.t,
            radius: report.argmin.radius,
            energy: energy(&report.argmin.point)?,
        },
        max_on_boundary: SampleSummary {
            face: report.argmax.face,
            t: report.argmax.t,
            radius: report.argmax.radius,
            energy: energy(&report.argmax.point)?,
        },
        i4_pass: report.i4_pass,
        i5_pass: report.i5_pass,
        i3,
        passed,
    };
    write_text(&a.out, &to_json(&summary))?;
    if passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "linking: I4 {}, I5 {}, I3 {}",
            pass_word(report.i4_pass),
            pass_word(report.i5_pass),
            pass_word(summary.i3.iter().all(|r| r.passed))
        )))
    }
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}
