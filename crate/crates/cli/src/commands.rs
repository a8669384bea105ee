use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use toricsol_core::guillemin::direct_det;
use toricsol_core::soliton::{futaki_vanishes, solve_soliton_vector, SolitonError};
use toricsol_core::{DualPolytope, GuilleminPotential, LatticePolytope};

use crate::args::{CommonArgs, GuilleminArgs, ReportArgs, SolitonArgs};
use crate::error::{CliError, Result};
use crate::input::{self, PolytopeDoc};
use crate::output::{self, short};
use crate::report::{Combinatorics, ReportDocument, RunConfig, ScanRowOut, ScanSection, SolitonSection};

/// Self-test sample count for the Cauchy-Binet and round-trip checks.
const SELF_TEST_SAMPLES: usize = 100;

pub fn run_config(command: &str, common: &CommonArgs, args: &impl Serialize) -> RunConfig {
    RunConfig {
        command: command.to_string(),
        input_path: common.input.clone(),
        out: common.out.clone(),
        args: serde_json::to_value(args).expect("arguments serialize"),
    }
}

/// Reads the input and opens the report in the output directory.
pub fn open(
    command: &str,
    common: &CommonArgs,
    args: &impl Serialize,
) -> Result<(PolytopeDoc, LatticePolytope, ReportDocument)> {
    let (doc, q) = input::read(&common.input)?;
    output::create_dir(&common.out)?;
    let report = ReportDocument::open(&common.out, &doc, run_config(command, common, args))?;
    Ok((doc, q, report))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn combinatorics(q: &LatticePolytope, p: &DualPolytope) -> Combinatorics {
    let r = q.fano_report_with(p);
    let a0 = p
        .normals_f64()
        .iter()
        .map(|n| 1.0 / n.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    let vol = p.volume();
    let bary = p.barycenter();
    Combinatorics {
        is_fano: r.is_fano,
        origin_interior: r.origin_interior,
        vertices_primitive: r.vertices_primitive,
        faces_simplicial: r.faces_simplicial,
        is_gorenstein: r.is_gorenstein,
        gorenstein_index: r.gorenstein_index,
        failures: r.failures,
        notes: r.notes,
        facet_complex: q.facet_complex(),
        dual_vertices: p
            .vertices()
            .iter()
            .map(|v| v.coords().iter().map(|c| c.to_string()).collect())
            .collect(),
        dual_vertices_f64: p.vertices_f64(),
        facet_normals: p.normals().iter().map(|n| n.coords().to_vec()).collect(),
        volume: vol.to_string(),
        volume_f64: toricsol_core::RationalPoint(vec![vol]).to_f64()[0],
        barycenter: bary.coords().iter().map(|c| c.to_string()).collect(),
        barycenter_f64: bary.to_f64(),
        futaki_vanishes: futaki_vanishes(p),
        a0,
    }
}

pub fn summary_line(c: &Combinatorics) -> String {
    let gorenstein = if c.is_gorenstein {
        "yes".to_string()
    } else {
        format!("no (index {})", c.gorenstein_index)
    };
    format!(
        "Fano: {}, Gorenstein: {gorenstein}, Futaki vanishes: {}",
        yes(c.is_fano),
        yes(c.futaki_vanishes)
    )
}

pub fn check(args: &CommonArgs) -> Result<()> {
    let (_, q, mut report) = open("check", args, args)?;
    let p = q.dual();
    let c = combinatorics(&q, &p);
    println!("{}", summary_line(&c));
    for f in &c.failures {
        println!("  finding: {f}");
    }
    for n in &c.notes {
        println!("  note: {n}");
    }
    report.combinatorics = Some(c);
    report.save(&args.out)
}

pub fn dual(args: &CommonArgs) -> Result<()> {
    let (_, q, mut report) = open("dual", args, args)?;
    let p = q.dual();
    let c = combinatorics(&q, &p);
    println!("dual polytope P (dimension {})", p.dim());
    println!("  vertices:");
    for v in p.vertices() {
        println!("    {v}");
    }
    println!("  facets:");
    for (i, n) in p.normals().iter().enumerate() {
        println!("    l_{}(y) = <y, {n}> + 1", i + 1);
    }
    println!("  volume: {}", c.volume);
    println!("  barycenter: {}", p.barycenter());
    println!("  {}", summary_line(&c));
    report.combinatorics = Some(c);
    report.save(&args.out)
}

pub fn soliton_section(p: &DualPolytope, tol: f64) -> Result<SolitonSection> {
    let s = solve_soliton_vector(p, tol).map_err(|e| match e {
        SolitonError::BadTolerance(_) => CliError::Invalid(e.to_string()),
        _ => CliError::NotConverged(e.to_string()),
    })?;
    Ok(SolitonSection {
        tol,
        relative_residual: s.relative_residual(),
        c: s.c,
        residual_norm: s.residual_norm,
        iterations: s.iterations,
        converged: s.converged,
        f_history: s.f_history,
        volume: s.volume,
    })
}

fn print_soliton(s: &SolitonSection) {
    let c: Vec<String> = s.c.iter().map(|&v| short(v)).collect();
    println!(
        "soliton vector c = ({}), |grad F|/vol = {}, iterations {}, converged {}",
        c.join(", "),
        short(s.relative_residual),
        s.iterations,
        yes(s.converged)
    );
}

pub fn soliton_vector(args: &SolitonArgs) -> Result<()> {
    let (_, q, mut report) = open("soliton-vector", &args.common, args)?;
    let p = q.dual();
    let s = soliton_section(&p, args.tol)?;
    print_soliton(&s);
    let converged = s.converged;
    let residual = s.relative_residual;
    report.soliton = Some(s);
    report.save(&args.common.out)?;
    if !converged {
        return Err(CliError::NotConverged(format!(
            "soliton vector stalled at |grad F|/vol = {residual:e}"
        )));
    }
    Ok(())
}

pub fn scan_section(p: &DualPolytope, radii: &[f64], samples: usize, seed: u64) -> Result<ScanSection> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Invalid(format!(
            "radii must be positive and increasing, got {radii:?}"
        )));
    }
    if samples == 0 {
        return Err(CliError::Invalid("samples must be positive".into()));
    }
    let g = GuilleminPotential::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: f64 = rng.gen();
    let scan = g
        .lemma_scan(radii, samples, offset)
        .map_err(|e| CliError::NotConverged(e.to_string()))?;

    let verts = p.vertices_f64();
    let n = p.dim();
    let (mut cb, mut rt, mut li) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..SELF_TEST_SAMPLES {
        // shrinking a convex combination of vertices toward 0 keeps it interior
        let w: Vec<f64> = (0..verts.len()).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        let shrink = rng.gen_range(0.0..0.999);
        let y: Vec<f64> = (0..n)
            .map(|k| shrink * verts.iter().zip(&w).map(|(v, wi)| v[k] * wi).sum::<f64>() / total)
            .collect();
        let u = g.u0_eval(&y).map_err(|e| CliError::NotConverged(e.to_string()))?;
        let direct = direct_det(&u.hessian, n);
        let expansion = g.det_hess_u0(&y).map_err(|e| CliError::NotConverged(e.to_string()))?;
        cb = cb.max((expansion - direct).abs() / direct.abs());
        let back = g
            .legendre_phi0(&u.gradient)
            .map_err(|e| CliError::NotConverged(e.to_string()))?;
        rt = rt.max(back.y.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        // φ⁰(Du⁰(y)) + u⁰(y) = ⟨Du⁰(y), y⟩ at the sampled y, not the recovered one
        let pairing: f64 = u.gradient.iter().zip(&y).map(|(a, b)| a * b).sum();
        li = li.max((back.value + u.value - pairing).abs());
    }
    let sat = scan.saturation();
    let last = match scan.rows.as_slice() {
        [.., a, b] => scan.relative_change(a.radius, b.radius).map(|(x, y)| [x, y]),
        _ => None,
    };
    Ok(ScanSection {
        seed,
        offset,
        samples: scan.samples,
        rows: scan
            .rows
            .iter()
            .map(|r| ScanRowOut {
                radius: r.radius,
                sup_lemma21: r.sup_lemma21,
                sup_lemma22: r.sup_lemma22,
                running_sup_lemma21: r.running_sup_lemma21,
                running_sup_lemma22: r.running_sup_lemma22,
                min_slack: r.min_slack,
            })
            .collect(),
        max_newton_iterations: scan.max_iterations,
        saturation: [sat.0, sat.1],
        last_relative_change: last,
        self_test_samples: SELF_TEST_SAMPLES,
        cauchy_binet_max_rel: cb,
        round_trip_max: rt,
        legendre_identity_max: li,
    })
}

fn print_scan(s: &ScanSection) {
    println!("{:>10} {:>14} {:>14}", "radius", "sup|L2.1|", "sup|L2.2|");
    for r in &s.rows {
        println!(
            "{:>10} {:>14} {:>14}",
            short(r.radius),
            short(r.sup_lemma21),
            short(r.sup_lemma22)
        );
    }
    println!(
        "saturation ratio: lemma 2.1 {}, lemma 2.2 {}",
        short(s.saturation[0]),
        short(s.saturation[1])
    );
    if let Some([a, b]) = s.last_relative_change {
        println!("relative change over the last two radii: {}, {}", short(a), short(b));
    }
    println!(
        "Cauchy-Binet max relative deviation: {}; Legendre round trip max error: {}; Legendre identity max error: {}",
        short(s.cauchy_binet_max_rel),
        short(s.round_trip_max),
        short(s.legendre_identity_max)
    );
}

pub fn guillemin(args: &GuilleminArgs) -> Result<()> {
    let (_, q, mut report) = open("guillemin", &args.common, args)?;
    let p = q.dual();
    let s = scan_section(&p, &args.radii, args.samples, args.seed)?;
    print_scan(&s);
    output::write_scan(&args.common.out, &s.rows)?;
    report.scan = Some(s);
    report.save(&args.common.out)
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let (_, q, mut report) = open("report", &args.common, args)?;
    let p = q.dual();
    let c = combinatorics(&q, &p);
    println!("{}", summary_line(&c));
    println!(
        "dual vertices: {}",
        c.dual_vertices
            .iter()
            .map(|v| format!("({})", v.join(", ")))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("barycenter: ({})", c.barycenter.join(", "));
    report.combinatorics = Some(c);
    if report.soliton.is_none() {
        report.soliton = Some(soliton_section(&p, args.tol)?);
    }
    if let Some(s) = &report.soliton {
        print_soliton(s);
    }
    if report.scan.is_none() {
        let s = scan_section(&p, &args.radii, args.samples, args.seed)?;
        output::write_scan(&args.common.out, &s.rows)?;
        report.scan = Some(s);
    }
    if let Some(s) = &report.scan {
        print_scan(s);
    }
    match &report.solve {
        Some(s) => crate::solve::print_summary(s),
        None => println!("no continuity solve recorded (run `toricsol solve`)"),
    }
    report.save(&args.common.out)
}
