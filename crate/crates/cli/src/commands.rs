use anyhow::{bail, Result};
use parvol::acceptance::{run_acceptance, SuiteConfig};
use parvol::analysis::{
    characterize_differentiability, default_threshold, detect_nondiff, detect_nondiff_exact_1d,
    jump_profile, scan_critical_values, weak_convergence_report, CriticalValues, CriticalityReport,
    ScanScope, WindowSpec,
};
use parvol::constructions::{
    construct_boxes_dimd, construct_dim1, construct_dim2_eps, construct_dim2_full,
    predicted_nondiff_1d,
};
use parvol::engine::{
    fmt17, volume_from_exact, volume_function, write_volume_csv, DistanceField, ExactVolume,
    Projector, RadiiGrid, VolumeMode,
};
use parvol::fractal::{
    cantor_gallery, check_dim2_conditions, tail_gap_csv, ConditionReport, TargetRadii,
};
use serde::Serialize;
use serde_json::json;

use crate::input::{parse_geometry, ConstructionParams, Planar, Source};
use crate::output::{print_json, Sink};
use crate::{AnalyzeArgs, ConstructArgs, ConvergenceArgs, GalleryArgs, VerifyArgs};

/// Prints `report` when no output directory is set, otherwise the list of
/// files written.
fn finish<T: Serialize>(sink: &Sink, report: &T) -> Result<()> {
    if sink.enabled() {
        print_json(&json!({ "written": sink.written() }))
    } else {
        print_json(report)
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        bail!("grid spacing must be positive, got {h}");
    }
    Ok(())
}

pub fn construct(args: &ConstructArgs) -> Result<()> {
    let n = crate::input::parse_radii(&args.radii)?;
    let params = ConstructionParams {
        eps: args.eps,
        gamma0: args.gamma0,
    };
    let mut sink = Sink::new(args.out.as_deref())?;
    match args.dim {
        0 => bail!("dimension must be at least 1"),
        1 => {
            let set = construct_dim1(&n)?;
            sink.json("set.json", &set)?;
            sink.json("predicted.json", &predicted_nondiff_1d(&set))?;
            finish(&sink, &set)
        }
        2 if args.max_level.is_some() || n.generator().is_some() => {
            let full = construct_dim2_full(&n, args.max_level.unwrap_or(4), &params.policy())?;
            sink.json("geometry.json", &full.geometry)?;
            sink.json("metadata.json", &full)?;
            finish(&sink, &full)
        }
        2 => {
            let meta = construct_dim2_eps(&n, params.eps, &params.policy())?;
            sink.json("geometry.json", &meta.geometry)?;
            sink.json("metadata.json", &meta)?;
            finish(&sink, &meta)
        }
        d => {
            let boxes = construct_boxes_dimd(&n, d)?;
            sink.json("boxes.json", &boxes)?;
            finish(&sink, &boxes)
        }
    }
}

#[derive(Serialize)]
struct AnalyzeReport {
    label: String,
    h: f64,
    band: (f64, f64),
    nondiff: parvol::analysis::NondiffReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_values: Option<CriticalValues>,
    criticality: Vec<CriticalityReport>,
}

/// The point of the nearest critical-value cluster within `tol` of `r`, or
/// `r` itself.
fn snap_to_critical(cv: &CriticalValues, r: f64, tol: f64) -> f64 {
    cv.clusters
        .iter()
        .map(|c| r.clamp(c.lo, c.hi))
        .filter(|v| (v - r).abs() <= tol)
        .min_by(|a, b| (a - r).abs().total_cmp(&(b - r).abs()))
        .unwrap_or(r)
}

fn band_of(args: &[f64]) -> Result<(f64, f64)> {
    match args {
        [lo, hi] if lo < hi && *lo > 0.0 => Ok((*lo, *hi)),
        _ => bail!("band must be two increasing positive radii"),
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    check_h(args.h)?;
    let band = band_of(&crate::input::parse_list(&args.band)?)?;
    let params = ConstructionParams {
        eps: args.eps,
        gamma0: args.gamma0,
    };
    let window = WindowSpec::default();
    let mut sink = Sink::new(args.out.as_deref())?;
    match parse_geometry(&args.geometry, &params)? {
        Source::Line { label, set } => {
            let predicted = predicted_nondiff_1d(&set);
            let mut rep = detect_nondiff_exact_1d(&set, args.threshold.unwrap_or(1e-9));
            if !predicted.is_empty() {
                rep = rep.match_predicted(&predicted, 1e-9);
            }
            let radii = RadiiGrid::uniform(band.0, band.1, 0.5 * args.h)?;
            let vs = volume_from_exact(&ExactVolume::IntervalUnion1d { set }, &radii);
            write_volume(&mut sink, &vs, window)?;
            let report = AnalyzeReport {
                label,
                h: args.h,
                band,
                nondiff: rep,
                critical_values: None,
                criticality: Vec::new(),
            };
            sink.json("nondiff.json", &report.nondiff)?;
            finish(&sink, &report)
        }
        Source::Planar(p) => {
            let pad = args.pad.unwrap_or(band.1 + 0.1);
            let field = DistanceField::from_geometry(&p.geometry, pad, args.h, &p.label)?;
            let radii = RadiiGrid::for_field(&field, band.0, band.1)?;
            let vs = volume_function(&field, &radii, VolumeMode::Coverage)?;
            let jumps: Vec<f64> = p.expected.iter().map(|e| e.1).collect();
            let threshold = args
                .threshold
                .unwrap_or_else(|| default_threshold(0.0, &jumps));
            let mut rep = detect_nondiff(&vs, threshold, window);
            if !p.expected.is_empty() {
                let n = TargetRadii::finite(p.expected.iter().map(|e| e.0).collect())?;
                rep = rep.match_predicted(&n, 2.0 * args.h);
            }
            let projector = Projector::for_geometry(&p.geometry, &field);
            let cv = scan_critical_values(&projector, &field, &ScanScope::Full, 2.0 * args.h)?;
            // level sets are classified at the exact critical value: a
            // detected radius is only known to a fraction of h
            let mut at: Vec<f64> = rep
                .detected_radii()
                .into_iter()
                .map(|r| snap_to_critical(&cv, r, 2.0 * args.h))
                .collect();
            at.extend(crate::input::parse_list(args.at.as_deref().unwrap_or(""))?);
            let criticality = at
                .iter()
                .map(|&r| characterize_differentiability(&projector, &field, r, args.c))
                .collect::<Result<Vec<_>, _>>()?;
            write_volume(&mut sink, &vs, window)?;
            let report = AnalyzeReport {
                label: p.label,
                h: args.h,
                band,
                nondiff: rep,
                critical_values: Some(cv),
                criticality,
            };
            sink.json("nondiff.json", &report.nondiff)?;
            sink.json("criticality.json", &report.criticality)?;
            finish(&sink, &report)
        }
    }
}

fn write_volume(
    sink: &mut Sink,
    vs: &parvol::engine::VolumeSamples,
    window: WindowSpec,
) -> Result<()> {
    if !sink.enabled() {
        return Ok(());
    }
    let mut buf = Vec::new();
    write_volume_csv(vs, &mut buf)?;
    sink.bytes("volume.csv", &buf)?;
    sink.csv(
        "jumps.csv",
        "r,left,right,jump,noise",
        jump_profile(vs, window).into_iter().map(|e| {
            vec![
                fmt17(e.r),
                fmt17(e.left),
                fmt17(e.right),
                fmt17(e.stat),
                fmt17(e.noise),
            ]
        }),
    )
}

pub fn verify(args: &VerifyArgs) -> Result<bool> {
    check_h(args.h)?;
    let cfg = SuiteConfig {
        h: args.h,
        seed: args.seed,
        ..SuiteConfig::default()
    };
    let results = run_acceptance(&cfg, |r| eprintln!("{}", r.line()));
    let mut sink = Sink::new(args.out.as_deref())?;
    let passed = results.iter().all(|r| r.passed);
    let report = json!({ "passed": passed, "criteria": results });
    sink.json("acceptance.json", &report)?;
    finish(&sink, &report)?;
    Ok(passed)
}

#[derive(Serialize)]
struct GalleryReport {
    q: f64,
    depth: u32,
    set_depth: u32,
    alpha: f64,
    /// Of the depth-limited string continued by its geometric tail.
    #[serde(with = "parvol::ext")]
    gap_sum: f64,
    #[serde(with = "parvol::ext")]
    closed_form_gap_sum: f64,
    minkowski_dimension: f64,
    e_q: ConditionReport,
    e_q_prime: ConditionReport,
}

pub fn gallery(args: &GalleryArgs) -> Result<()> {
    if !(args.alpha > 0.0) {
        bail!("alpha must be positive");
    }
    let g = cantor_gallery(args.q, args.depth)?;
    let e_q = check_dim2_conditions(&g.e_q, 0.0)?;
    let e_q_prime = check_dim2_conditions(&g.e_q_prime, 0.0)?;
    let report = GalleryReport {
        q: g.q,
        depth: g.depth,
        set_depth: g.set_depth,
        alpha: args.alpha,
        gap_sum: g.f_q_string.gap_sum(args.alpha),
        closed_form_gap_sum: g.closed_form_gap_sum(args.alpha),
        minkowski_dimension: g.minkowski_dimension(),
        e_q,
        e_q_prime,
    };
    let mut sink = Sink::new(args.out.as_deref())?;
    let q = g.q;
    sink.csv(
        "gaps.csv",
        "level,count,length",
        g.level_counts().into_iter().enumerate().map(|(k, c)| {
            vec![
                k.to_string(),
                c.to_string(),
                fmt17((1.0 - 2.0 * q) * q.powi(k as i32)),
            ]
        }),
    )?;
    let radii: Vec<f64> = (1..=200).map(|i| i as f64 / 200.0).collect();
    if sink.enabled() {
        sink.bytes("tail_gap_e_q.csv", tail_gap_csv(&g.e_q, &radii).as_bytes())?;
        sink.bytes(
            "tail_gap_e_q_prime.csv",
            tail_gap_csv(&g.e_q_prime, &radii).as_bytes(),
        )?;
    }
    sink.json("gallery.json", &report)?;
    finish(&sink, &report)
}

pub fn convergence(args: &ConvergenceArgs) -> Result<()> {
    check_h(args.h)?;
    let params = ConstructionParams {
        eps: args.eps,
        gamma0: args.gamma0,
    };
    let Source::Planar(Planar {
        label,
        geometry,
        expected,
    }) = parse_geometry(&args.geometry, &params)?
    else {
        bail!("surface measures need a planar geometry");
    };
    let mut nondiff: Vec<f64> = expected.iter().map(|e| e.0).collect();
    nondiff.extend(crate::input::parse_list(
        args.nondiff.as_deref().unwrap_or(""),
    )?);
    let pad = args.r0 + args.delta + 0.1 + 4.0 * args.h;
    let field = DistanceField::from_geometry(&geometry, pad, args.h, &label)?;
    let rep = weak_convergence_report(&field, args.r0, args.delta, args.kmax, &nondiff, args.tol)?;
    let mut sink = Sink::new(args.out.as_deref())?;
    sink.json("convergence.json", &rep)?;
    sink.csv(
        "convergence.csv",
        "k,r_minus,r_plus,flat_minus,flat_plus,mass_minus,mass_plus,mass_gap",
        rep.rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                fmt17(r.r_minus),
                fmt17(r.r_plus),
                fmt17(r.flat_minus),
                fmt17(r.flat_plus),
                fmt17(r.mass_minus),
                fmt17(r.mass_plus),
                fmt17(r.mass_gap),
            ]
        }),
    )?;
    finish(&sink, &rep)
}
