use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use lpstab_core::dense::check_capacity;
use lpstab_core::format::{read_matrix_file, read_matrix_str, read_vector_str, write_atomic, write_matrix_file};
use lpstab_core::inverse::{build_left_inverse, decay_profile, default_radii, stability_pipeline};
use lpstab_core::opmat::{
    cd_norm, check_disjoint_supports, check_gram_banded, op_norm, schur_norm, sparse_sparse_bound, weighted_schur_norm,
};
use lpstab_core::stability::{lambda_estimate, localize as localize_fn, stability_report, LambdaEstimate};
use lpstab_core::suites::{criterion_name, run_criterion, run_suite, summary_table, CriterionResult, Suite};
use lpstab_core::{zoo, Exponent, IndexedMatrix, MetricSpace};

use crate::config::resolve;
use crate::Global;

/// An error together with the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type CmdResult = Result<(), Failure>;

fn out_path(global: &Global, name: &Path) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(&global.out_dir).with_context(|| format!("creating {}", global.out_dir.display()))?;
    Ok(if name.is_absolute() { name.to_path_buf() } else { global.out_dir.join(name) })
}

fn write_text(global: &Global, name: &str, text: &str) -> anyhow::Result<PathBuf> {
    let path = out_path(global, Path::new(name))?;
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> anyhow::Result<Vec<T>> {
    text.split(',').map(|s| s.trim().parse::<T>().map_err(|_| anyhow!("bad value {s:?} in {flag}"))).collect()
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Generator {
    RandomWalk,
    Elliptic,
    Identity,
    Staircase,
    Dilation,
    Slanted,
    ThinSparse,
    Banded,
    ThinEmpty,
    PolyDecay,
    ExpDecay,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    pub generator: Generator,
    /// Output file (relative paths land in --out-dir).
    #[arg(long)]
    pub out: PathBuf,
    /// Window size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Box dimensions for lattice generators, e.g. `20,20`.
    #[arg(long)]
    pub dims: Option<String>,
    /// Staircase exponent.
    #[arg(long)]
    pub p: Option<f64>,
    /// Staircase column count.
    #[arg(long = "N")]
    pub big_n: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Thickness / band radius.
    #[arg(long)]
    pub r: Option<f64>,
    /// Column sparseness cap.
    #[arg(long)]
    pub v: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    /// Diagonal shift of the elliptic operator.
    #[arg(long, default_value_t = 0.5)]
    pub shift: f64,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub rows: Option<usize>,
    /// Diagonal dominance margin for banded matrices.
    #[arg(long)]
    pub margin: Option<f64>,
}

fn need<T>(v: Option<T>, flag: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| anyhow!("this generator needs --{flag}"))
}

fn lattice(args: &GenArgs) -> anyhow::Result<Arc<MetricSpace>> {
    Ok(Arc::new(match (&args.dims, args.n) {
        (Some(d), _) => MetricSpace::zd_box(&parse_list::<usize>(d, "--dims")?)?,
        (None, Some(n)) => MetricSpace::z_interval(n)?,
        (None, None) => bail!("this generator needs --n or --dims"),
    }))
}

pub fn gen(global: &Global, args: &GenArgs) -> CmdResult {
    let seed = global.seed.unwrap_or(0);
    let r_usize = |r: Option<f64>| -> anyhow::Result<usize> {
        let r = need(r, "r")?;
        if r < 0.0 || r.fract() != 0.0 {
            bail!("--r must be a non-negative integer for this generator");
        }
        Ok(r as usize)
    };
    let a = match args.generator {
        Generator::RandomWalk => zoo::random_walk_operator(need(args.n, "n")?)?,
        Generator::Elliptic => zoo::elliptic_operator(need(args.n, "n")?, args.shift)?,
        Generator::Identity => zoo::identity(need(args.n, "n")?)?,
        Generator::Staircase => zoo::staircase_matrix(need(args.p, "p")?, need(args.big_n, "N")?)?,
        Generator::Dilation => zoo::dilation_matrix(need(args.n, "n")?, args.lambda.unwrap_or(1.0))?,
        Generator::Slanted => {
            zoo::slanted_matrix(need(args.alpha, "alpha")?, args.width.unwrap_or(1.0), need(args.n, "n")?, seed)?
        }
        Generator::ThinSparse => {
            zoo::random_thin_sparse(lattice(args)?, need(args.r, "r")?, need(args.v, "v")?, args.density, seed)?
        }
        Generator::Banded => zoo::random_banded(need(args.n, "n")?, r_usize(args.r)?, args.margin, seed)?,
        Generator::ThinEmpty => {
            let n = need(args.n, "n")?;
            zoo::random_thin_empty(args.rows.unwrap_or(n), n, r_usize(args.r)?, seed)?
        }
        Generator::PolyDecay => zoo::polynomial_decay_matrix(lattice(args)?, need(args.beta, "beta")?, seed)?,
        Generator::ExpDecay => zoo::exponential_decay_matrix(lattice(args)?, need(args.rate, "rate")?, seed)?,
    };
    let path = out_path(global, &args.out)?;
    write_matrix_file(&path, &a)?;
    let summary = json!({ "file": path, "rows": a.nrows(), "cols": a.ncols(), "stats": a.stats() });
    if global.json {
        println!("{}", pretty(&summary));
    } else {
        let st = a.stats();
        println!(
            "wrote {}: {}x{}, {} entries, thickness {}, sparseness {}, band width {}",
            path.display(),
            a.nrows(),
            a.ncols(),
            a.nnz(),
            st.thickness.map_or("none".into(), |v| v.to_string()),
            st.sparseness,
            st.band_width.map_or("none".into(), |v| v.to_string())
        );
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub file: PathBuf,
    /// Weight for the weighted Schur norm: `poly:ALPHA` or `subexp:C,DELTA`.
    #[arg(long)]
    pub weight: Option<String>,
}

pub fn analyze(global: &Global, args: &AnalyzeArgs) -> CmdResult {
    let cfg = resolve(global, args.weight.as_deref())?;
    let a = read_matrix_file(&args.file)?;
    let space = a.col_space().expect("matrix files carry a column metric");
    let two = op_norm(&a, Exponent::TWO)?;
    let norms = json!({
        "norm_1": op_norm(&a, Exponent::ONE)?.value,
        "norm_2": two.value,
        "norm_2_kind": two.kind,
        "norm_inf": op_norm(&a, Exponent::INFINITY)?.value,
        "schur": schur_norm(&a),
        "weighted_schur": weighted_schur_norm(&a, &cfg.weight)?,
        "weight": cfg.weight,
        "cd": cd_norm(&a).ok(),
    });
    let n = a.ncols();
    let far = (0..n).max_by(|&x, &y| space.dist(0, x).total_cmp(&space.dist(0, y))).unwrap_or(0);
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    if n > 0 {
        u[0] = 1.0;
        v[far] = 1.0;
    }
    let checks = json!({
        "disjoint_supports": check_disjoint_supports(&a, &u, &v)?,
        "gram_banded": check_gram_banded(&a).ok(),
        "sparse_sparse": sparse_sparse_bound(&a),
    });
    let decay = if a.is_square_metric() { decay_profile(&a, &default_radii(n)).ok() } else { None };
    let report = json!({
        "file": args.file,
        "rows": a.nrows(),
        "cols": n,
        "space": space.kind(),
        "stats": a.stats(),
        "growth": space.growth(),
        "diameter": space.diameter(),
        "norms": norms,
        "checks": checks,
        "decay": decay,
    });
    let text = pretty(&report);
    let path = write_text(global, "analyze.json", &text)?;
    if global.json {
        println!("{text}");
    } else {
        let st = a.stats();
        println!("{}x{} matrix, {} entries", a.nrows(), n, a.nnz());
        println!(
            "thickness {}, sparseness {}, band width {}",
            st.thickness.map_or("none".into(), |v| v.to_string()),
            st.sparseness,
            st.band_width.map_or("none".into(), |v| v.to_string())
        );
        println!(
            "norms: 1 -> {}, 2 -> {}, inf -> {}, schur {}, weighted schur {}",
            report["norms"]["norm_1"], report["norms"]["norm_2"], report["norms"]["norm_inf"], report["norms"]["schur"],
            report["norms"]["weighted_schur"]
        );
        if let Some(d) = &decay {
            println!("decay: fitted_t {}, super-polynomial {}", d.fitted_t, d.super_polynomial);
        }
        println!("report written to {}", path.display());
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct LambdaArgs {
    pub file: PathBuf,
    /// Window sweep for square matrices on an integer window, e.g. `100,200,400`.
    #[arg(long)]
    pub windows: Option<String>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
}

fn estimates_csv(estimates: &[LambdaEstimate]) -> String {
    let mut out = String::from("p,lambda_hat,method,witness_support_radius,seed\n");
    for e in estimates {
        let _ = writeln!(out, "{},{:e},{},,{}", e.p, e.value, e.method.as_str(), e.seed);
    }
    out
}

pub fn lambda(global: &Global, args: &LambdaArgs) -> CmdResult {
    let mut cfg = resolve(global, None)?;
    if let Some(s) = args.starts {
        cfg.budget.starts = s;
    }
    if let Some(i) = args.iters {
        cfg.budget.iters = i;
    }
    let a = read_matrix_file(&args.file)?;
    let windows = match &args.windows {
        Some(t) => Some(parse_list::<usize>(t, "--windows")?),
        None => cfg.windows.clone(),
    };
    let targets: Vec<(Option<usize>, IndexedMatrix)> = match &windows {
        Some(ws) => ws.iter().map(|&n| Ok((Some(n), a.restrict_window(n)?))).collect::<lpstab_core::Result<_>>()?,
        None => vec![(None, a)],
    };
    let mut json_out = Vec::new();
    let mut csv_out = String::new();
    let mut summary = String::new();
    let mut lambda_2 = Vec::new();
    for (window, m) in &targets {
        if let Err(e) = check_capacity(m.nrows(), m.ncols()) {
            return Err(Failure { code: 3, error: anyhow!("{e} (select smaller windows with --windows)") });
        }
        let suffix = window.map_or(String::new(), |n| format!("-{n}"));
        let (js, csv, verdict, estimates) = if cfg.full_grid {
            let rep = stability_report(m, &cfg.grid, cfg.budget, cfg.seed)?;
            (serde_json::to_value(&rep).expect("serializes"), rep.to_csv(), Some(rep.verdict), rep.estimates)
        } else {
            let est = cfg
                .grid
                .iter()
                .map(|&p| lambda_estimate(m, p, cfg.budget, cfg.seed))
                .collect::<lpstab_core::Result<Vec<_>>>()?;
            (json!({ "estimates": est, "seed": cfg.seed }), estimates_csv(&est), None, est)
        };
        write_text(global, &format!("lambda{suffix}.json"), &pretty(&js))?;
        write_text(global, &format!("lambda{suffix}.csv"), &csv)?;
        if let Some(n) = window {
            let _ = writeln!(summary, "window {n}:");
        }
        for e in &estimates {
            let _ = writeln!(summary, "  p={:<8} lambda_hat={:.6e} ({})", e.p.to_string(), e.value, e.method.as_str());
        }
        if let Some(v) = verdict {
            let _ = writeln!(summary, "  verdict: {}", v.as_str());
        }
        if let Some(e) = estimates.iter().find(|e| e.p == Exponent::TWO) {
            lambda_2.push((*window, e.value));
        }
        json_out.push(json!({ "window": window, "report": js }));
        csv_out.push_str(&csv);
    }
    if lambda_2.len() > 1 {
        let _ = writeln!(summary, "lambda_2 ratios between consecutive windows:");
        for w in lambda_2.windows(2) {
            let _ = writeln!(summary, "  {:?} -> {:?}: {:.3}", w[0].0.unwrap_or(0), w[1].0.unwrap_or(0), w[0].1 / w[1].1);
        }
    }
    if global.json {
        let v = if json_out.len() == 1 { json_out.remove(0)["report"].take() } else { Value::Array(json_out) };
        println!("{}", pretty(&v));
    } else if global.csv {
        print!("{csv_out}");
    } else {
        print!("{summary}");
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct LocalizeArgs {
    pub file: PathBuf,
    /// The function: a JSON file holding an array of numbers.
    #[arg(long)]
    pub f: PathBuf,
    /// Localization lengths, e.g. `8,16,32`.
    #[arg(long)]
    pub length: Option<String>,
    /// Exponent (`inf` allowed).
    #[arg(long, default_value = "2")]
    pub p: String,
}

pub fn localize(global: &Global, args: &LocalizeArgs) -> CmdResult {
    let cfg = resolve(global, None)?;
    let a = read_matrix_file(&args.file)?;
    let text = std::fs::read_to_string(&args.f)
        .map_err(|e| lpstab_core::Error::Format(format!("{}: {e}", args.f.display())))?;
    let f = read_vector_str(&text)?;
    let p = args.p.parse::<Exponent>()?;
    let lengths = match &args.length {
        Some(t) => parse_list::<f64>(t, "--length")?,
        None => cfg.lengths.clone().ok_or_else(|| anyhow!("localize needs --length or \"lengths\" in the config"))?,
    };
    let mut results = Vec::new();
    let mut summary = String::new();
    for &l in &lengths {
        let loc = localize_fn(&a, &f, l, p)?;
        let _ = writeln!(
            summary,
            "L={l}: center {}, radius {}, ratio_f {:.6e}, ratio_h {:.6e}, bound {:.6e}, holds {}",
            loc.center,
            loc.support_radius,
            loc.ratio_f,
            loc.ratio_h,
            loc.integer_line.as_ref().map_or(loc.general.bound, |c| c.bound),
            loc.holds()
        );
        results.push(json!({ "length": l, "p": p, "result": loc }));
    }
    let text = pretty(&results);
    write_text(global, "localize.json", &text)?;
    if global.json {
        println!("{text}");
    } else {
        print!("{summary}");
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct InvertArgs {
    pub file: PathBuf,
    /// Windows for the pipeline, e.g. `100,200,400`; defaults to the whole matrix.
    #[arg(long)]
    pub windows: Option<String>,
    /// Weight for the weighted Schur norm: `poly:ALPHA` or `subexp:C,DELTA`.
    #[arg(long)]
    pub weight: Option<String>,
    /// Write the left inverse of the largest window as a matrix file.
    #[arg(long)]
    pub emit_inverse: bool,
}

pub fn invert(global: &Global, args: &InvertArgs) -> CmdResult {
    let cfg = resolve(global, args.weight.as_deref())?;
    if !cfg.full_grid {
        return Err(anyhow!("invert needs a grid containing 1, 2 and inf").into());
    }
    let a = read_matrix_file(&args.file)?;
    if !a.is_square_metric() {
        return Err(lpstab_core::Error::Structure("invert needs Y = X".into()).into());
    }
    let n = a.ncols();
    let windows = match &args.windows {
        Some(t) => parse_list::<usize>(t, "--windows")?,
        None => cfg.windows.clone().unwrap_or_else(|| vec![n]),
    };
    let family = |w: usize| if w == n { Ok(a.clone()) } else { a.restrict_window(w) };
    let rep = stability_pipeline(&family, &windows, cfg.weight, &cfg.grid, cfg.budget, cfg.seed)?;
    let text = rep.to_json();
    write_text(global, "invert.json", &text)?;
    write_text(global, "invert.csv", &rep.to_csv())?;
    let mut emitted = None;
    if args.emit_inverse {
        let largest = *windows.iter().max().expect("non-empty");
        match build_left_inverse(&family(largest)?, cfg.tolerance) {
            Ok(li) => {
                let path = out_path(global, Path::new("inverse.json"))?;
                write_matrix_file(&path, &li.b)?;
                emitted = Some(path);
            }
            Err(e) => eprintln!("left inverse not emitted: {e}"),
        }
    }
    if global.json {
        println!("{text}");
    } else if global.csv {
        print!("{}", rep.to_csv());
    } else {
        for w in &rep.windows {
            let l2 = w.stability.estimates.iter().find(|e| e.p == Exponent::TWO).map_or(f64::NAN, |e| e.value);
            let residual = w.inverse.as_ref().map_or(f64::NAN, |i| i.residual_max);
            println!("window {}: lambda_2 {:.6e}, sigma_min {:.6e}, |BA-I|_max {:.2e}", w.window, l2, w.sigma_min, residual);
        }
        println!("decay: fitted_t {}", rep.decay.fitted_t);
        for note in &rep.notes {
            println!("note: {note}");
        }
        println!("verdict: {}", rep.verdict.as_str());
        if let Some(p) = emitted {
            println!("left inverse written to {}", p.display());
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// structure, localization, propagation, sequences, inverse, zoo or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Run a single criterion (1 to 10) instead of a suite.
    #[arg(long)]
    pub criterion: Option<u8>,
    /// Also check a matrix file: its format invariants and structural properties.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

// Format invariants and structural properties of a user-supplied file.
fn check_matrix_file(path: &Path) -> CriterionResult {
    let start = std::time::Instant::now();
    let raw = std::fs::read_to_string(path);
    let fail = |detail: String, case: Value| CriterionResult {
        id: 0,
        name: format!("matrix file {}", path.display()),
        passed: false,
        trials: 1,
        failures: 1,
        detail,
        elapsed_secs: start.elapsed().as_secs_f64(),
        counterexample: Some(json!({ "input": path, "case": case })),
        data: None,
    };
    let text = match raw {
        Ok(t) => t,
        Err(e) => return fail(format!("unreadable: {e}"), json!({ "error": e.to_string() })),
    };
    let a = match read_matrix_str(&text) {
        Ok(a) => a,
        Err(e) => return fail(format!("invalid matrix file: {e}"), json!({ "error": e.to_string(), "content": text })),
    };
    let n = a.ncols();
    let mut failures = Vec::new();
    if let Ok(g) = check_gram_banded(&a) {
        if !g.banded {
            failures.push(json!({ "check": "gram_banded", "result": g }));
        }
    }
    let ss = sparse_sparse_bound(&a);
    if !ss.verified {
        failures.push(json!({ "check": "sparse_sparse", "result": ss }));
    }
    let mut trials = 2;
    if n > 0 {
        let space = a.col_space().expect("metric columns");
        let far = (0..n).max_by(|&x, &y| space.dist(0, x).total_cmp(&space.dist(0, y))).unwrap_or(0);
        let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
        u[0] = 1.0;
        v[far] = 1.0;
        if let Ok(d) = check_disjoint_supports(&a, &u, &v) {
            trials += 1;
            if !d.holds() {
                failures.push(json!({ "check": "disjoint_supports", "result": d }));
            }
        }
    }
    CriterionResult {
        id: 0,
        name: format!("matrix file {}", path.display()),
        passed: failures.is_empty(),
        trials,
        failures: failures.len(),
        detail: format!("{}/{} checks passed", trials - failures.len(), trials),
        elapsed_secs: start.elapsed().as_secs_f64(),
        counterexample: (!failures.is_empty()).then(|| json!({ "input": path, "content": text, "failures": failures })),
        data: None,
    }
}

pub fn verify(global: &Global, args: &VerifyArgs) -> CmdResult {
    let seed = resolve(global, None).map(|c| c.seed).unwrap_or_else(|_| global.seed.unwrap_or(0));
    let mut results = match args.criterion {
        Some(id) => {
            if !(1..=10).contains(&id) {
                return Err(anyhow!("--criterion must lie in 1..=10, got {id}").into());
            }
            vec![run_criterion(id, seed).unwrap_or_else(|e| CriterionResult {
                id,
                name: criterion_name(id).into(),
                passed: false,
                trials: 0,
                failures: 1,
                detail: format!("error: {e}"),
                elapsed_secs: 0.0,
                counterexample: Some(json!({ "criterion": id, "seed": seed, "error": e.to_string() })),
                data: None,
            })]
        }
        None => run_suite(args.suite.parse::<Suite>()?, seed),
    };
    if let Some(path) = &args.matrix {
        results.push(check_matrix_file(path));
    }
    let text = pretty(&results);
    write_text(global, "verify.json", &text)?;
    let mut dumps = Vec::new();
    for r in results.iter().filter(|r| !r.passed) {
        if let Some(c) = &r.counterexample {
            let name = if r.id == 0 { "counterexample-matrix.json".to_string() } else { format!("counterexample-{}.json", r.id) };
            dumps.push(write_text(global, &name, &pretty(c))?);
        }
    }
    if global.json {
        println!("{text}");
    } else {
        print!("{}", summary_table(&results));
        for d in &dumps {
            println!("counterexample written to {}", d.display());
        }
    }
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure { code: 1, error: anyhow!("{} of {} checks failed", results.iter().filter(|r| !r.passed).count(), results.len()) })
    }
}
