use std::fs::File;
use std::path::Path;

use serde_json::{json, Value};
use sos_core::contours::{contour_energy, decompose, peierls_sum};
use sos_core::exact::{self, EnsembleSpec, Monotone, TruncationPolicy};
use sos_core::formulas::{self, DenominatorConvention, LayeringCoefficients};
use sos_core::freeenergy::{self, PowerOptions, SideBoundary, TransferSpec};
use sos_core::lattice::{build_rect_region, HeightField, Region, Site};
use sos_core::sampler::{self, ChainConfig, EstimateSummary};
use sos_core::ModelParams;

use crate::args::*;
use crate::emit::{Cell, Table};
use crate::error::{CliError, Result};

/// What a subcommand hands back for emission.
pub struct Output {
    pub record: Value,
    pub table: Table,
    /// Names of failed checks; a nonempty list makes the exit status nonzero.
    pub failures: Vec<String>,
}

impl Output {
    fn ok(record: Value, table: Table) -> Self {
        Output { record, table, failures: Vec::new() }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn summary_json(e: &EstimateSummary) -> Value {
    json!({
        "mean": e.mean,
        "stderr": e.stderr,
        "n_batches": e.n_batches,
        "raw_count": e.raw_count,
        "provenance": "mcmc",
    })
}

pub fn formulas(a: &FormulasArgs) -> Result<Output> {
    let beta = a.beta;
    let h_w = formulas::wetting_critical_point(beta)?;
    let (lo, hi) = formulas::chalker_bounds(beta)?;
    let c = formulas::small_cluster_constants(beta)?;
    let j = formulas::coupling(beta);
    let mut record = json!({
        "provenance": "closed_form",
        "beta": beta,
        "J": j,
        "h_w": h_w,
        "chalker": [lo, hi],
        "H1": c.H1,
        "H2": c.H2,
        "c1": c.c1,
        "c2": c.c2,
    });
    let mut table = Table::new(&["quantity", "value", "provenance"]);
    for (k, v) in [("J", j), ("h_w", h_w), ("chalker_lo", lo), ("chalker_hi", hi), ("H1", c.H1), ("H2", c.H2), ("c1", c.c1), ("c2", c.c2)] {
        table.push(vec![k.into(), v.into(), "closed_form".into()]);
    }
    if let Some(u) = a.u {
        let mut layering = serde_json::Map::new();
        for (tag, conv) in [("AS_PRINTED", DenominatorConvention::AsPrinted), ("AS_DERIVED", DenominatorConvention::AsDerived)] {
            let coeffs = LayeringCoefficients::new(a.alpha1, a.alpha2, conv)?;
            // F vanishes for u <= 0, approached as n grows without bound
            let (f, n_star) = if u > 0.0 {
                let v = formulas::layering_f_auto(j, u, &coeffs)?;
                (v.value, Some(v.maximizers[0]))
            } else {
                (0.0, None)
            };
            let bps: Vec<f64> = (0..a.breakpoints).map(|n| formulas::breakpoint(&coeffs, j, n)).collect::<sos_core::Result<_>>()?;
            table.push(vec![format!("F_{tag}").into(), f.into(), "closed_form".into()]);
            if let Some(n) = n_star {
                table.push(vec![format!("n_star_{tag}").into(), (n as f64).into(), "closed_form".into()]);
            }
            for (n, b) in bps.iter().enumerate() {
                table.push(vec![format!("breakpoint_{tag}_{n}").into(), (*b).into(), "closed_form".into()]);
            }
            layering.insert(tag.into(), json!({ "F": f, "n_star": n_star, "breakpoints": bps }));
        }
        record["layering"] = json!({
            "u": u,
            "alpha1": a.alpha1,
            "alpha2": a.alpha2,
            "conventions": layering,
        });
    }
    Ok(Output::ok(record, table))
}

pub fn parse_region(s: &str) -> Result<(i64, i64)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("region must look like NxM, got `{s}`")))?;
    let w: i64 = w.trim().parse().map_err(|_| usage(format!("bad region width in `{s}`")))?;
    let h: i64 = h.trim().parse().map_err(|_| usage(format!("bad region height in `{s}`")))?;
    Ok((w, h))
}

fn centre(w: i64, h: i64) -> Site {
    Site::new(((w + 1) / 2) as i32, ((h + 1) / 2) as i32)
}

/// Single site, horizontal pair and horizontal triple through the centre,
/// with their Peierls prefactor and edge cost; patterns that do not fit are
/// left out.
fn peak_patterns(region: &Region, w: i64, h: i64) -> Vec<(&'static str, Vec<Site>, f64, f64)> {
    let c = centre(w, h);
    let all = vec![
        ("single", vec![c], 0.5, 4.0),
        ("pair", vec![c, c.offset(1, 0)], 0.25, 6.0),
        ("triple", vec![c.offset(-1, 0), c, c.offset(1, 0)], 0.125, 8.0),
    ];
    all.into_iter().filter(|(_, s, _, _)| s.iter().all(|&x| region.contains(x))).collect()
}

fn ensemble_spec(e: Ensemble, h: f64) -> EnsembleSpec {
    match e {
        Ensemble::Free => EnsembleSpec::Free { boundary_level: 0 },
        Ensemble::Positive => EnsembleSpec::Positive,
        Ensemble::Wetting => EnsembleSpec::Wetting { h },
    }
}

pub fn exact_cmd(a: &ExactArgs) -> Result<Output> {
    let (w, ht) = parse_region(&a.region)?;
    let region = build_rect_region(w, ht)?;
    let params = ModelParams::with_h(a.beta, a.h)?;
    let mut trunc = TruncationPolicy::default_for(a.beta);
    if let Some(h) = a.hmax {
        trunc.h_max = h;
    }
    trunc.tol = a.tol;
    let ens = ensemble_spec(a.ensemble, a.h);
    let inputs = json!({
        "region": [w, ht],
        "beta": a.beta,
        "ensemble": ens,
        "h": a.h,
        "n": a.n,
        "truncation": trunc,
        "check": a.check,
    });
    let mut values = serde_json::Map::new();
    let mut gaps = serde_json::Map::new();
    let mut table = Table::new(&["quantity", "value", "kind"]);
    let mut put = |vals: &mut serde_json::Map<String, Value>, k: String, v: f64| {
        table.push(vec![k.clone().into(), v.into(), "value".into()]);
        vals.insert(k, json!(v));
    };
    let pass;
    match a.check {
        None => {
            let cert = exact::certify(&region, &params, &ens, &trunc)?;
            put(&mut values, "log_partition".into(), cert.value);
            values.insert("h_max_certified".into(), json!(cert.h_max));
            match ens {
                EnsembleSpec::Wetting { .. } => {
                    let cf = exact::contact_fraction(&region, &params, &trunc)?;
                    put(&mut values, "contact_fraction".into(), cf);
                }
                EnsembleSpec::Free { .. } => {
                    let p = exact::site_tail_prob(&region, &params, &[centre(w, ht)], a.n, &trunc)?;
                    put(&mut values, format!("P[phi(centre)>={}]", a.n), p);
                }
                EnsembleSpec::Positive => {}
            }
            pass = true;
        }
        Some(Check::Identity) => {
            let g = exact::wetting_identity_check(&region, &params, &trunc)?;
            put(&mut values, "lhs".into(), g.lhs);
            put(&mut values, "rhs".into(), g.rhs);
            gaps.insert("gap".into(), json!(g.gap));
            pass = g.gap < 1e-8;
        }
        Some(Check::Lehagga) => {
            let c = formulas::small_cluster_constants(a.beta)?;
            let pos = EnsembleSpec::Positive;
            let single = exact::log_partition(&Region::from_sites([Site::new(0, 0)]), &params, &pos, &trunc)?;
            let pair = exact::log_partition(&Region::from_sites([Site::new(0, 0), Site::new(1, 0)]), &params, &pos, &trunc)?;
            put(&mut values, "logZ_single".into(), single);
            put(&mut values, "logZ_pair".into(), pair);
            put(&mut values, "H1".into(), c.H1);
            put(&mut values, "H2".into(), c.H2);
            let r1 = ((single - c.H1) / c.H1).abs();
            let r2 = ((pair - c.H2) / c.H2).abs();
            gaps.insert("H1_relative".into(), json!(r1));
            gaps.insert("H2_relative".into(), json!(r2));
            pass = r1 < 1e-9 && r2 < 1e-9;
        }
        Some(Check::StimaG) => {
            let mut worst = 0.0f64;
            let mut rows = Vec::new();
            for k in 0..4 {
                for u in [0.0, 0.1, 0.5] {
                    let got = exact::g_exact(&[Site::new(0, 0)], &params, k, u, &trunc)?;
                    let want = formulas::g1(a.beta, k, u)?;
                    worst = worst.max((got - want).abs());
                    rows.push(json!({"set": "single", "k": k, "u": u, "exact": got, "closed_form": want}));
                }
                let got = exact::g_exact(&[Site::new(0, 0), Site::new(1, 0)], &params, k, 0.0, &trunc)?;
                let want = formulas::g2_zero(a.beta, k)?;
                worst = worst.max((got - want).abs());
                rows.push(json!({"set": "pair", "k": k, "u": 0.0, "exact": got, "closed_form": want}));
            }
            for r in &rows {
                let label = format!("G[{},k={},u={}]", r["set"].as_str().unwrap(), r["k"], r["u"]);
                table.push(vec![label.into(), r["exact"].as_f64().unwrap().into(), "value".into()]);
            }
            values.insert("G".into(), Value::Array(rows));
            gaps.insert("max_abs".into(), json!(worst));
            pass = worst < 1e-9;
        }
        Some(Check::Rourou) => {
            if a.n < 1 {
                return Err(usage("the peak bands need --n >= 1"));
            }
            let mut ok = true;
            for (name, sites, pre, cost) in peak_patterns(&region, w, ht) {
                let p = exact::site_tail_prob(&region, &params, &sites, a.n, &trunc)?;
                let band = pre * (-a.beta * cost * a.n as f64).exp();
                put(&mut values, format!("P[{name}>={}]", a.n), p);
                put(&mut values, format!("band[{name}]"), band);
                gaps.insert(format!("{name}_margin"), json!(p - band));
                ok &= p >= band;
            }
            pass = ok;
        }
        Some(Check::Shift) => {
            let mut ok = true;
            for (name, sites, _, cost) in peak_patterns(&region, w, ht) {
                let s = exact::shift_inequality_check(&region, &params, &sites, a.n, &trunc)?;
                put(&mut values, format!("ratio[{name}]"), s.ratio);
                put(&mut values, format!("bound[{name}]"), s.bound);
                put(&mut values, format!("P[{name}_first>=0]"), s.p_nonneg);
                gaps.insert(format!("{name}_margin"), json!(s.ratio - (-a.beta * cost).exp()));
                ok &= s.holds;
            }
            pass = ok;
        }
        Some(Check::Fkg) => {
            if ens == EnsembleSpec::Positive {
                return Err(usage("the FKG check runs on the free or wetting ensemble"));
            }
            let c = centre(w, ht);
            let other = if region.contains(c.offset(1, 0)) { c.offset(1, 0) } else { c };
            let cov = exact::fkg_check(&region, &params, &ens, &trunc, &Monotone::Min(vec![c]), &Monotone::Min(vec![other]))?;
            put(&mut values, "covariance".into(), cov);
            gaps.insert("negative_part".into(), json!((-cov).max(0.0)));
            pass = cov >= -1e-12;
        }
    }
    for (k, v) in &gaps {
        table.push(vec![k.clone().into(), v.as_f64().unwrap_or(f64::NAN).into(), "gap".into()]);
    }
    let record = json!({
        "provenance": "exact",
        "inputs": inputs,
        "values": values,
        "gaps": gaps,
        "pass": pass,
    });
    let failures = if pass { Vec::new() } else { vec![format!("exact --check {}", check_name(a.check))] };
    Ok(Output { record, table, failures })
}

fn check_name(c: Option<Check>) -> String {
    c.map(|c| serde_json::to_value(c).unwrap().as_str().unwrap().to_string()).unwrap_or_default()
}

pub fn contours_cmd(a: &ContoursArgs) -> Result<Output> {
    if let Some(path) = &a.decompose {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let field: HeightField = serde_json::from_str(&text)?;
        let cs = decompose(&field)?;
        let mut table = Table::new(&["index", "sign", "intensity", "length"]);
        for (i, c) in cs.iter().enumerate() {
            table.push(vec![Cell::Int(i as i64), Cell::Int(c.sign.value() as i64), c.intensity.into(), c.contour.length().into()]);
        }
        let record = json!({
            "provenance": "exact",
            "field": field,
            "cylinders": cs.cylinders,
            "energy": contour_energy(&cs),
        });
        return Ok(Output::ok(record, table));
    }
    let l = a.enumerate.expect("clap enforces one mode");
    let beta = a.beta.ok_or_else(|| usage("--enumerate needs --beta"))?;
    let ps = peierls_sum(beta, l)?;
    let mut table = Table::new(&["length", "count", "weight"]);
    let mut counts = Vec::new();
    for (&len, &count) in &ps.counts {
        let weight = count as f64 * (-beta * len as f64).exp();
        table.push(vec![len.into(), Cell::Int(count as i64), weight.into()]);
        counts.push(json!({"length": len, "count": count, "weight": weight}));
    }
    let record = json!({
        "provenance": "exact",
        "max_length": l,
        "beta": beta,
        "counts": counts,
        "partial_sum": ps.partial_sum,
        "growth_rate": ps.growth_rate,
    });
    Ok(Output::ok(record, table))
}

fn parse_levels(s: &str) -> Result<Vec<u32>> {
    let levels: Vec<u32> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| usage(format!("bad level `{t}` in --n-levels"))))
        .collect::<Result<_>>()?;
    if levels.is_empty() {
        return Err(usage("--n-levels is empty"));
    }
    Ok(levels)
}

pub fn resolve_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None if std::env::var_os("CI").is_some() => Err(usage(format!("{what} is randomized; pass --seed explicitly in CI"))),
        None => Ok(0),
    }
}

fn write_trace(path: &Path, config: &ChainConfig, levels: &[u32]) -> Result<()> {
    let region = config.region()?;
    let block = sampler::measurement_block(config.nx, config.ny);
    let pairs = sampler::measurement_pairs(&region, &block);
    let bi: Vec<usize> = block.iter().map(|&s| region.index_of(s).unwrap()).collect();
    let pi: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (region.index_of(a).unwrap(), region.index_of(b).unwrap())).collect();
    let file = File::create(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec!["sweep".to_string(), "contact_fraction".to_string()];
    header.extend(levels.iter().map(|n| format!("p1[{n}]")));
    header.extend(levels.iter().map(|n| format!("p2[{n}]")));
    w.write_record(&header)?;
    let size = region.len() as f64;
    let mut err = None;
    sampler::run_chain(config, 0, |sweep, hs| {
        if err.is_some() {
            return;
        }
        let mut row = vec![sweep.to_string()];
        row.push(crate::emit::format_float(hs.iter().filter(|&&h| h == 0).count() as f64 / size));
        for &n in levels {
            let n = n as i32;
            row.push(crate::emit::format_float(bi.iter().filter(|&&i| hs[i] >= n).count() as f64 / bi.len() as f64));
        }
        for &n in levels {
            let n = n as i32;
            let v = if pi.is_empty() { f64::NAN } else { pi.iter().filter(|&&(a, b)| hs[a].min(hs[b]) >= n).count() as f64 / pi.len() as f64 };
            row.push(crate::emit::format_float(v));
        }
        if let Err(e) = w.write_record(&row) {
            err = Some(e);
        }
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

pub fn sample_cmd(a: &SampleArgs, seed: Option<u64>) -> Result<Output> {
    let seed = resolve_seed(seed, "sample")?;
    let levels = parse_levels(&a.n_levels)?;
    let ens = match a.ensemble {
        SampleEnsemble::Free => EnsembleSpec::Free { boundary_level: 0 },
        SampleEnsemble::Wetting => EnsembleSpec::Wetting { h: a.h },
    };
    let mut config = ChainConfig::new(a.nx, a.ny, ModelParams::with_h(a.beta, a.h)?, ens);
    config.seed = seed;
    config.sweeps = a.sweeps;
    config.burn_in = a.burn_in;
    config.thin = a.thin;
    config.chains = a.chains;
    config.batches = a.batches;
    config.validate()?;
    let region = config.region()?;
    let block = sampler::measurement_block(a.nx, a.ny);
    let distance = block.iter().map(|&s| region.distance_to_boundary(region.index_of(s).unwrap())).min().unwrap_or(0);
    let mut table = Table::new(&["quantity", "n", "mean", "stderr", "n_batches", "provenance"]);
    let mut row = |q: &str, n: Option<u32>, e: &EstimateSummary| {
        table.push(vec![q.into(), n.map_or(Cell::Empty, Cell::from), e.mean.into(), e.stderr.into(), Cell::Int(e.n_batches as i64), "mcmc".into()]);
    };
    let mut record = json!({
        "provenance": "mcmc",
        "sites": block,
        "distance_to_boundary": distance,
        "recorded_sweeps_per_chain": config.recorded(),
    });
    match ens {
        EnsembleSpec::Wetting { .. } => {
            let cf = sampler::estimate_contact_fraction(&config)?;
            row("contact_fraction", None, &cf);
            let lv: Vec<i32> = levels.iter().map(|&n| n as i32).collect();
            let c = centre(a.nx as i64, a.ny as i64);
            let tails = sampler::estimate_tail_probabilities(&config, &[c], &lv)?;
            let mut tj = Vec::new();
            for (n, t) in levels.iter().zip(&tails) {
                row("p_centre", Some(*n), t);
                tj.push(json!({"n": n, "p": summary_json(t)}));
            }
            record["contact_fraction"] = summary_json(&cf);
            record["centre"] = json!(c);
            record["centre_tail"] = Value::Array(tj);
        }
        _ => {
            let peaks = sampler::estimate_peak_amplitudes(&config, &levels)?;
            let mut pj = Vec::new();
            for r in &peaks.records {
                row("p1", Some(r.n), &r.p1);
                row("p2", Some(r.n), &r.p2);
                pj.push(json!({
                    "n": r.n,
                    "p1": summary_json(&r.p1),
                    "p2": summary_json(&r.p2),
                    "alpha1_hat": r.alpha1_hat,
                    "alpha1_stderr": r.alpha1_stderr,
                    "alpha2_hat": r.alpha2_hat,
                    "alpha2_stderr": r.alpha2_stderr,
                    "reliable": r.reliable,
                    "heuristic": true,
                }));
            }
            let mut hj = Vec::new();
            for &n in &levels {
                let h = sampler::estimate_cluster_histogram(&config, n as i32)?;
                for (label, b) in ["q0", "q1", "q2", "q3plus"].iter().zip(&h.bins) {
                    row(label, Some(n), b);
                }
                hj.push(json!({
                    "n": n,
                    "sites": h.sites,
                    "bins": h.bins.iter().map(summary_json).collect::<Vec<_>>(),
                }));
            }
            record["pairs"] = json!(peaks.pairs);
            record["peaks"] = Value::Array(pj);
            record["cluster_histograms"] = Value::Array(hj);
            record["note"] = json!("amplitude estimates at finite beta and box size are heuristic");
        }
    }
    if let Some(path) = &a.trace {
        write_trace(path, &config, &levels)?;
        record["trace"] = json!(path);
    }
    Ok(Output::ok(record, table))
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("grid must look like START:STOP:COUNT, got `{s}`")));
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| usage(format!("bad grid start in `{s}`")))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| usage(format!("bad grid stop in `{s}`")))?;
    let n: usize = parts[2].trim().parse().map_err(|_| usage(format!("bad grid count in `{s}`")))?;
    match n {
        0 => Ok(Vec::new()),
        1 => Ok(vec![a]),
        _ => {
            let step = (b - a) / (n - 1) as f64;
            // pin the end point and snap rounding noise at u = 0
            Ok((0..n)
                .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
                .map(|u| if u.abs() < 1e-9 * step.abs() { 0.0 } else { u })
                .collect())
        }
    }
}

pub fn freeenergy_cmd(a: &FreeEnergyArgs) -> Result<Output> {
    let mut header = vec!["u", "f_wet", "f_free", "fbar", "F_printed", "F_derived"];
    if a.compare {
        header.push("ratio");
    }
    header.push("provenance");
    let mut table = Table::new(&header);
    let h_w = formulas::wetting_critical_point(a.beta)?;
    let j = formulas::coupling(a.beta);
    let f_of = |u: f64, conv| -> Result<f64> {
        let c = LayeringCoefficients::new(a.alpha1, a.alpha2, conv)?;
        Ok(if u > 0.0 { formulas::layering_f_auto(j, u, &c)?.value } else { 0.0 })
    };
    if let Some(h) = a.h {
        let side = match a.side {
            Side::Level => SideBoundary::Level(0),
            Side::Periodic => SideBoundary::Periodic,
        };
        let params = ModelParams::with_h(a.beta, h)?;
        let wet = TransferSpec::new(a.width, a.hmax, params, EnsembleSpec::Wetting { h }).with_side(side);
        let free = TransferSpec::new(a.width, a.hmax, params, EnsembleSpec::Free { boundary_level: 0 }).with_side(side);
        let f_wet = freeenergy::strip_free_energy(&wet, a.tol)?;
        let f_free = freeenergy::strip_free_energy(&free, a.tol)?;
        let contact = freeenergy::strip_contact_fraction(&wet, &PowerOptions::new(a.tol))?;
        let u = h - h_w;
        let fp = f_of(u, DenominatorConvention::AsPrinted)?;
        let fd = f_of(u, DenominatorConvention::AsDerived)?;
        let fbar = f_wet - f_free;
        let mut row: Vec<Cell> = vec![u.into(), f_wet.into(), f_free.into(), fbar.into(), fp.into(), fd.into()];
        if a.compare {
            row.push(if fp > 0.0 { (fbar / fp).into() } else { f64::NAN.into() });
        }
        row.push("transfer".into());
        table.push(row);
        let record = json!({
            "provenance": "transfer",
            "beta": a.beta,
            "width": a.width,
            "h_max": a.hmax,
            "side": side,
            "h": h,
            "u": u,
            "f_wet": f_wet,
            "f_free": f_free,
            "fbar": fbar,
            "contact_fraction": contact,
            "F_printed": fp,
            "F_derived": fd,
        });
        return Ok(Output::ok(record, table));
    }
    let grid = parse_grid(a.u_grid.as_deref().expect("clap enforces one mode"))?;
    let rep = freeenergy::compare_to_f(a.beta, &grid, a.alpha1, a.alpha2, &[a.width], a.hmax, a.tol)?;
    let mut rows = Vec::new();
    for r in &rep.rows {
        let mut row: Vec<Cell> = vec![r.u.into(), r.f_wet[0].into(), r.f_free[0].into(), r.fbar[0].into(), r.f_printed.into(), r.f_derived.into()];
        if a.compare {
            row.push(r.ratio[0].into());
        }
        row.push("transfer".into());
        table.push(row);
        let mut j = json!({
            "u": r.u,
            "f_wet": r.f_wet[0],
            "f_free": r.f_free[0],
            "fbar": r.fbar[0],
            "F_printed": r.f_printed,
            "F_derived": r.f_derived,
            "provenance": "transfer",
        });
        if a.compare {
            j["ratio"] = json!(r.ratio[0]);
        }
        rows.push(j);
    }
    let record = json!({
        "provenance": "transfer",
        "beta": a.beta,
        "width": a.width,
        "h_max": a.hmax,
        "side": SideBoundary::Periodic,
        "h_w": h_w,
        "rows": rows,
        "baseline": "fbar is the periodic-strip excess free energy minus its value at u = 0",
        "caveat": rep.caveat,
    });
    Ok(Output::ok(record, table))
}
