use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rug::{Integer, Rational};
use serde::Serialize;
use serde_json::{json, Value};

use twisted_thue::classify::{classify_family, SetFilter};
use twisted_thue::density::{
    cm_field_check, count_lattice_points, density_series, region_volume, Frame, RegionKind, RegionSpec, VolumeMethod,
};
use twisted_thue::error::{Error, Result};
use twisted_thue::field::{parse_rational, FieldElement, NumberField};
use twisted_thue::forms::{norm_side, twisted_form_exponent};
use twisted_thue::io::{self as out, Emitter, FieldSpecFile, Format};
use twisted_thue::solver::{empirical_exponent, solve_box, solve_family, SolutionRecord};
use twisted_thue::trace::trace;
use twisted_thue::units::{exponent_box_points, HouseBound, UnitExponent, UnitGroupBasis};

const MAX_PRECISION: u32 = 4096;

#[derive(Parser, Debug)]
#[command(name = "twisted-thue", version, about = "Twisted Thue families: forms, unit sets, solutions, traces and densities")]
struct Cli {
    #[command(flatten)]
    cfg: Config,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Config {
    /// Field specification (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Starting working precision in bits.
    #[arg(long, global = true, default_value_t = 128)]
    precision: u32,
    #[arg(long, global = true, default_value = "1/2")]
    nu: String,
    #[arg(long, global = true, default_value = "2")]
    m: String,
    /// Search box X for |x|, |y|.
    #[arg(long = "box", global = true, default_value_t = 1000)]
    xbound: u64,
    /// House bound N: a number, a fraction, or `e^x`.
    #[arg(long, global = true, default_value = "100")]
    house_bound: String,
    /// List every unit with exponents in [-R, R]^r instead of bounding the house.
    #[arg(long, global = true)]
    exp_box: Option<u64>,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// E, Enu or tildeEnu.
    #[arg(long, global = true, default_value = "Enu")]
    set: String,
    /// jsonl or csv.
    #[arg(long, global = true, default_value = "jsonl")]
    format: String,
    /// Exponents a_1,…,a_r of ε.
    #[arg(long, global = true, allow_hyphen_values = true)]
    unit_exponent: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    torsion_power: u64,
    /// Power-basis coordinates of α (default: the generator).
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    x: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    y: Option<i64>,
    /// H, D, Dp, Dt, Dpp or Dtp.
    #[arg(long, global = true, default_value = "H")]
    region: String,
    /// Region parameter M.
    #[arg(long, global = true, default_value = "1")]
    region_m: String,
    /// Signature r1,r2 for volumes without a field.
    #[arg(long, global = true)]
    signature: Option<String>,
    /// Comma-separated increasing house bounds.
    #[arg(long, global = true, default_value = "e^10,e^20,e^30")]
    grid: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    #[command(subcommand)]
    Field(FieldCmd),
    #[command(subcommand)]
    Units(UnitsCmd),
    #[command(subcommand)]
    Form(FormCmd),
    #[command(subcommand)]
    Thue(ThueCmd),
    /// Trace one solution (x, y, ε) through the proof.
    Trace,
    #[command(subcommand)]
    Density(DensityCmd),
}

#[derive(Subcommand, Debug)]
enum FieldCmd {
    /// Validate the field spec and report invariants.
    Check,
}

#[derive(Subcommand, Debug)]
enum UnitsCmd {
    /// Units ε with house(αε) ≤ N.
    Enum,
    /// Classify the enumerated units into E, E_ν and Ẽ_ν.
    Classify,
}

#[derive(Subcommand, Debug)]
enum FormCmd {
    /// Twisted form F_ε.
    Build,
}

#[derive(Subcommand, Debug)]
enum ThueCmd {
    /// Solve |F_ε(x, y)| ≤ m in the box.
    Solve,
    /// Solve every form of the family selected by --set.
    Family,
}

#[derive(Subcommand, Debug)]
enum DensityCmd {
    /// Lattice points of λ(α) + λ(units) in a region.
    Count,
    /// Region volume: exact or inscribed box plus Monte Carlo.
    Volume,
    /// Unit counts against (log N)^r over a grid.
    Series,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Field(FieldCmd::Check) => "field check",
            Command::Units(UnitsCmd::Enum) => "units enum",
            Command::Units(UnitsCmd::Classify) => "units classify",
            Command::Form(FormCmd::Build) => "form build",
            Command::Thue(ThueCmd::Solve) => "thue solve",
            Command::Thue(ThueCmd::Family) => "thue family",
            Command::Trace => "trace",
            Command::Density(DensityCmd::Count) => "density count",
            Command::Density(DensityCmd::Volume) => "density volume",
            Command::Density(DensityCmd::Series) => "density series",
        }
    }
}

struct Ctx {
    cfg: Config,
    header: Value,
    format: Format,
    p: u32,
}

impl Ctx {
    fn spec(&self) -> Result<FieldSpecFile> {
        let path = self
            .cfg
            .spec
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("--spec is required".into()))?;
        FieldSpecFile::read(path)
    }

    fn field(&self) -> Result<(FieldSpecFile, NumberField)> {
        let spec = self.spec()?;
        let k = out::load_field(&spec, MAX_PRECISION)?;
        Ok((spec, k))
    }

    fn basis(&self) -> Result<UnitGroupBasis> {
        let (spec, k) = self.field()?;
        out::validate_basis(&k, &spec)
    }

    fn alpha(&self, k: &NumberField) -> Result<FieldElement> {
        match &self.cfg.alpha {
            None => Ok(k.alpha()),
            Some(s) => {
                let coords: Vec<String> = s.split(',').map(|c| c.trim().to_string()).collect();
                k.parse_element(&coords)
            }
        }
    }

    fn nu(&self) -> Result<Rational> {
        let nu = parse_rational(&self.cfg.nu)?;
        if nu <= 0 || nu >= 1 {
            return Err(Error::InvalidInput("--nu must lie in (0, 1)".into()));
        }
        Ok(nu)
    }

    fn m(&self) -> Result<Integer> {
        let m = Integer::from_str_radix(self.cfg.m.trim(), 10)
            .map_err(|_| Error::InvalidInput(format!("--m {:?} is not an integer", self.cfg.m)))?;
        if m < 1 {
            return Err(Error::InvalidInput("--m must be positive".into()));
        }
        Ok(m)
    }

    fn house_bound(&self) -> Result<HouseBound> {
        HouseBound::parse(&self.cfg.house_bound)
    }

    fn exponent(&self, r: usize) -> Result<UnitExponent> {
        let a: Vec<i64> = match &self.cfg.unit_exponent {
            None => vec![0; r],
            Some(s) => s
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::InvalidInput(format!("bad unit exponent {t:?}")))
                })
                .collect::<Result<_>>()?,
        };
        if a.len() != r {
            return Err(Error::InvalidInput(format!("--unit-exponent needs {r} entries")));
        }
        Ok(UnitExponent::new(self.cfg.torsion_power, a))
    }

    fn region(&self, r1: usize, r2: usize, frame: Frame) -> Result<RegionSpec> {
        let m = parse_rational(&self.cfg.region_m)?;
        let kind = RegionKind::parse(&self.cfg.region)?;
        RegionSpec::new(kind, m, parse_rational(&self.cfg.nu)?, r1, r2, frame)
    }

    fn emitter<'a>(&self, w: &'a mut dyn Write) -> Result<Emitter<&'a mut dyn Write>> {
        Emitter::new(w, self.format, &self.header)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let code = match run(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            let code = out::error_code(&e);
            let doc = json!({"type": "error", "command": cli.cmd.name(), "exit": code, "reason": e.to_string()});
            let _ = writeln!(lock, "{doc}");
            eprintln!("error: {e}");
            code
        }
    };
    let _ = lock.flush();
    ExitCode::from(code as u8)
}

fn run(cli: &Cli, w: &mut dyn Write) -> Result<i32> {
    let cfg = &cli.cfg;
    if cfg.precision < 2 || cfg.precision > MAX_PRECISION {
        return Err(Error::InvalidInput(format!("--precision must lie in [2, {MAX_PRECISION}]")));
    }
    let format = Format::parse(&cfg.format)?;
    let header = json!({
        "type": "header",
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.cmd.name(),
        "config": cfg,
        "seed": cfg.seed,
        "precision": cfg.precision,
    });
    let ctx = Ctx {
        cfg: cfg.clone(),
        header,
        format,
        p: cfg.precision,
    };
    match &cli.cmd {
        Command::Field(FieldCmd::Check) => field_check(&ctx, w),
        Command::Units(UnitsCmd::Enum) => units_enum(&ctx, w),
        Command::Units(UnitsCmd::Classify) => units_classify(&ctx, w),
        Command::Form(FormCmd::Build) => form_build(&ctx, w),
        Command::Thue(ThueCmd::Solve) => thue_solve(&ctx, w),
        Command::Thue(ThueCmd::Family) => thue_family(&ctx, w),
        Command::Trace => trace_cmd(&ctx, w),
        Command::Density(DensityCmd::Count) => density_count(&ctx, w),
        Command::Density(DensityCmd::Volume) => density_volume(&ctx, w),
        Command::Density(DensityCmd::Series) => density_series_cmd(&ctx, w),
    }
}

fn field_check(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let mut em = ctx.emitter(w)?;
    let (spec, k) = ctx.field()?;
    let basis = out::validate_basis(&k, &spec)?;
    let p = ctx.p;
    let reg = basis.regulator_at(p)?;
    let index = basis.regulator_index()?;
    let reference_matches = basis
        .reference_regulator()
        .map(|rr| (reg.to_f64() - rr.to_f64()).abs() <= 1e-4 * rr.to_f64().abs().max(1.0));
    let cm = cm_field_check(&k, p)?;
    em.row(&json!({
        "type": "field",
        "poly": k.coeffs().iter().map(out::integer).collect::<Vec<_>>(),
        "degree": k.degree(),
        "signature": [k.r1(), k.r2()],
        "rank": basis.rank(),
        "delta": basis.delta(),
        "torsion_order": basis.torsion_order(),
        "torsion_gen": out::element(basis.torsion_gen()),
        "units": basis.fund_units().iter().map(out::element).collect::<Vec<_>>(),
        "regulator": out::interval(&reg),
        "reference_regulator": basis.reference_regulator().map(out::rational),
        "reference_matches": reference_matches,
        "regulator_index": index.as_ref().map(out::interval),
        "non_fundamental": basis.is_non_fundamental()?,
        "cm": cm,
        "kappa3": out::interval(&basis.kappa3(p)?),
        "lemma4_c": out::interval(&basis.lemma4_constant(p)?),
        "house_alpha": out::interval(&k.house_at(&k.alpha(), p)?),
        "height_alpha": out::interval(&k.abs_log_height_at(&k.alpha(), p)?),
    }))?;
    Ok(0)
}

fn units_enum(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let basis = ctx.basis()?;
    let k = basis.field();
    let alpha = ctx.alpha(k)?;
    let p = ctx.p;
    let mut em = ctx.emitter(w)?;
    let row = |e: &UnitExponent| -> Result<Value> {
        let eps = basis.unit_from_exponent(e)?;
        let ae = k.mul(&alpha, &eps);
        Ok(json!({
            "type": "unit",
            "eps": out::exponent(e),
            "house_alpha_eps": out::interval(&k.house_at(&ae, p)?),
        }))
    };
    if let Some(rad) = ctx.cfg.exp_box {
        let rad = rad as i64;
        let bx = vec![(-rad, rad); basis.rank()];
        for t in 0..basis.torsion_order() {
            for a in exponent_box_points(&bx) {
                em.row(&row(&UnitExponent::new(t, a))?)?;
            }
        }
        return Ok(0);
    }
    let n = ctx.house_bound()?;
    let en = basis.enumerate_units(&alpha, &n, p)?;
    for e in &en.units {
        em.row(&row(e)?)?;
    }
    em.row(&json!({
        "type": "summary",
        "units": en.units.len(),
        "borderline": en.borderline.iter().map(out::exponent).collect::<Vec<_>>(),
        "exponent_box": en.exponent_box,
        "M_plus": out::interval(&en.m_plus),
        "M_minus": out::interval(&en.m_minus),
    }))?;
    Ok(out::exit_code(!en.borderline.is_empty(), false))
}

fn units_classify(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let basis = ctx.basis()?;
    let alpha = ctx.alpha(basis.field())?;
    let nu = ctx.nu()?;
    let n = ctx.house_bound()?;
    let fc = classify_family(&basis, &alpha, &n, &nu, ctx.p)?;
    let mut em = ctx.emitter(w)?;
    for r in &fc.records {
        em.row(&out::classification(r))?;
    }
    em.row(&json!({
        "type": "summary",
        "counts": fc.counts,
        "enumeration_borderline": fc.enumeration_borderline.iter().map(out::exponent).collect::<Vec<_>>(),
    }))?;
    Ok(out::exit_code(fc.counts.borderline > 0, false))
}

fn form_build(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let basis = ctx.basis()?;
    let alpha = ctx.alpha(basis.field())?;
    let e = ctx.exponent(basis.rank())?;
    let (f, delta) = twisted_form_exponent(&basis, &alpha, &e)?;
    let mut em = ctx.emitter(w)?;
    em.row(&json!({
        "type": "form",
        "eps": out::exponent(&e),
        "coefficients": f.coeffs().iter().map(out::integer).collect::<Vec<_>>(),
        "degree": delta,
        "squarefree": f.is_squarefree(),
    }))?;
    Ok(0)
}

fn thue_solve(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let basis = ctx.basis()?;
    let alpha = ctx.alpha(basis.field())?;
    let e = ctx.exponent(basis.rank())?;
    let m = ctx.m()?;
    let (f, _) = twisted_form_exponent(&basis, &alpha, &e)?;
    let sols = solve_box(&f, &m, ctx.cfg.xbound)?;
    let mut em = ctx.emitter(w)?;
    for s in &sols {
        em.row(&json!({"type": "solution", "x": s.x, "y": s.y, "value": out::integer(&s.value)}))?;
    }
    em.row(&json!({
        "type": "summary",
        "eps": out::exponent(&e),
        "coefficients": f.coeffs().iter().map(out::integer).collect::<Vec<_>>(),
        "solutions": sols.len(),
    }))?;
    Ok(0)
}

fn thue_family(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let basis = ctx.basis()?;
    let k = basis.field();
    let alpha = ctx.alpha(k)?;
    let nu = ctx.nu()?;
    let m = ctx.m()?;
    let n = ctx.house_bound()?;
    let filter = SetFilter::parse(&ctx.cfg.set)?;
    let run = solve_family(&basis, &alpha, &nu, &m, &n, ctx.cfg.xbound, filter, ctx.p)?;
    let mut mismatches = 0usize;
    let mut em = ctx.emitter(w)?;
    for r in &run.records {
        let eps = basis.unit_from_exponent(&r.e)?;
        let gamma = k.mul(&alpha, &eps);
        let (f, _) = twisted_form_exponent(&basis, &alpha, &r.e)?;
        let norm = norm_side(k, &gamma, f.lead(), &Integer::from(r.x), &Integer::from(r.y));
        let ok = norm == r.value.clone();
        mismatches += !ok as usize;
        let mut v = out::solution(r);
        v["norm_bridge"] = json!(ok);
        em.row(&v)?;
    }
    let kappa = if m >= 2 {
        empirical_exponent(&run.records, &basis, &alpha, &m, ctx.p)?
            .kappa_emp
            .as_ref()
            .map(out::interval)
    } else {
        None
    };
    em.row(&json!({
        "type": "summary",
        "set": filter.name(),
        "solutions": run.records.len(),
        "solved_units": run.solved_units.len(),
        "skipped_borderline": run.skipped_borderline.iter().map(out::exponent).collect::<Vec<_>>(),
        "counts": run.classification.counts,
        "kappa_emp": kappa,
        "norm_bridge_mismatches": mismatches,
    }))?;
    Ok(out::exit_code(!run.skipped_borderline.is_empty(), mismatches > 0))
}

fn trace_cmd(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let basis = ctx.basis()?;
    let k = basis.field();
    let alpha = ctx.alpha(k)?;
    let nu = ctx.nu()?;
    let m = ctx.m()?;
    let e = ctx.exponent(basis.rank())?;
    let (x, y) = match (ctx.cfg.x, ctx.cfg.y) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::InvalidInput("trace needs --x and --y".into())),
    };
    let (f, _) = twisted_form_exponent(&basis, &alpha, &e)?;
    let sol = SolutionRecord {
        x,
        y,
        value: f.evaluate_i64(x, y),
        e,
        m: m.clone(),
        swapped: x.unsigned_abs() > y.unsigned_abs(),
    };
    let t = trace(&basis, &alpha, &sol, &nu, &m, ctx.p)?;
    let mut doc = out::trace(&t);
    doc["header"] = ctx.header.clone();
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(out::exit_code(out::trace_has_borderline(&t), !t.inconsistencies().is_empty()))
}

fn density_count(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let basis = ctx.basis()?;
    let k = basis.field();
    let spec = ctx.region(k.r1(), k.r2(), Frame::T)?;
    let alpha = match &ctx.cfg.alpha {
        Some(_) => Some(ctx.alpha(k)?),
        None => None,
    };
    let c = count_lattice_points(&basis, alpha.as_ref(), &spec, ctx.p)?;
    let mut em = ctx.emitter(w)?;
    for pt in &c.points {
        em.row(&json!({"type": "point", "exponents": pt}))?;
    }
    em.row(&json!({
        "type": "count",
        "region": spec.kind.name(),
        "M": out::rational(&spec.m),
        "nu": out::rational(&spec.nu),
        "translated": alpha.is_some(),
        "count": c.count,
        "exponent_box": c.exponent_box,
    }))?;
    Ok(0)
}

fn density_volume(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let (r1, r2) = match &ctx.cfg.signature {
        Some(s) => {
            let parts: Vec<usize> = s
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidInput(format!("bad signature {s:?}")))?;
            match parts[..] {
                [a, b] => (a, b),
                _ => return Err(Error::InvalidInput("--signature needs r1,r2".into())),
            }
        }
        None => {
            let (_, k) = ctx.field()?;
            (k.r1(), k.r2())
        }
    };
    let spec = ctx.region(r1, r2, Frame::X)?;
    let mut rep = region_volume(&spec, &VolumeMethod::AnalyticBox)?;
    if ctx.cfg.samples > 0 {
        let mc = region_volume(
            &spec,
            &VolumeMethod::MonteCarlo {
                seed: ctx.cfg.seed,
                samples: ctx.cfg.samples,
            },
        )?;
        rep.estimate = mc.estimate;
        rep.stderr = mc.stderr;
        rep.hits = mc.hits;
        rep.samples = mc.samples;
        rep.seed = mc.seed;
    }
    let mut em = ctx.emitter(w)?;
    let mut v = out::volume(&rep);
    v["signature"] = json!([r1, r2]);
    v["M"] = out::rational(&spec.m);
    v["nu"] = out::rational(&spec.nu);
    em.row(&v)?;
    Ok(0)
}

fn density_series_cmd(ctx: &Ctx, w: &mut dyn Write) -> Result<i32> {
    let basis = ctx.basis()?;
    let alpha = ctx.alpha(basis.field())?;
    let nu = ctx.nu()?;
    let grid = ctx
        .cfg
        .grid
        .split(',')
        .map(HouseBound::parse)
        .collect::<Result<Vec<_>>>()?;
    let rows = density_series(&basis, &alpha, &nu, &grid, ctx.p)?;
    let mut em = ctx.emitter(w)?;
    for r in &rows {
        em.row(&out::density_row(r))?;
    }
    Ok(out::exit_code(rows.iter().any(|r| r.borderline > 0), false))
}
