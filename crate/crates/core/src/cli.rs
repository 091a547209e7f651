//! Batch front end: config in, CSV/JSON artifacts out.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_config, Command, ProblemSetup, ResolvedRun, Settings};
use crate::error::{Error, Result};
use crate::interface::{interface_study, InterfaceSettings};
use crate::io::{self, CsvTable};
use crate::numerics::{SpectrumSample, Window};
use crate::potentials::{laminate_coefficient, Laminate, ProblemKind, QuasiperiodicProblem};
use crate::supercell::{
    band_diagram, band_diagram_for, convergence_study, extract_gaps, shared_gaps, BandSettings, GapSet,
};
use crate::superspace::{
    fd_alpha_sweep, pollution_report, pollution_report_counts, pwe_alpha_sweep, superspace_mode, LiftedProblem,
    PlaneWaveProblem,
};
use crate::tiling::{
    is_primitive, perron_frobenius, substitute, substitution_matrix, word_length, SubstitutionRule, TilingWord,
};
use crate::transfermap::{merge_certified, trace_scan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Words longer than this are summarised by their length only.
const WORD_PRINT_LIMIT: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "quasispec",
    version,
    about = "Spectra of quasiperiodic differential operators"
)]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// `key=value` applied to the config before parsing; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Parses arguments, runs, reports, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok(out) => {
            println!("wrote {}", out.display());
            EXIT_OK
        }
        Err(Failure { code, error }) => {
            eprintln!("error[{}]: {error}", error.name());
            code
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

fn classify(stage_config: bool) -> impl Fn(Error) -> Failure {
    move |error| {
        let code = match &error {
            Error::Io(_) => EXIT_IO,
            Error::Config(_) => EXIT_CONFIG,
            _ if stage_config => EXIT_CONFIG,
            _ => EXIT_NUMERIC,
        };
        Failure { code, error }
    }
}

/// Runs the configured command; returns the output directory.
pub fn execute(args: &Args) -> std::result::Result<PathBuf, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Io(format!("{}: {e}", args.config.display())))
        .map_err(classify(true))?;
    let run = parse_config(&text, &args.overrides)
        .and_then(|c| c.resolve())
        .map_err(classify(true))?;
    let out = args
        .out
        .clone()
        .or_else(|| run.output.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output".into()))
        .map_err(classify(true))?;
    fs::create_dir_all(&out)
        .map_err(|e| Error::Io(format!("{}: {e}", out.display())))
        .map_err(classify(false))?;
    let work = || run_command(&run, &out);
    let result = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
            .map_err(classify(true))?
            .install(work),
        None => work(),
    };
    result.map_err(classify(false))?;
    Ok(out)
}

struct Meta {
    extra: serde_json::Map<String, Value>,
}

impl Meta {
    fn new() -> Self {
        Self {
            extra: serde_json::Map::new(),
        }
    }

    fn set(&mut self, key: &str, value: impl Serialize) {
        self.extra
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn write(self, run: &ResolvedRun, out: &Path) -> Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        doc.insert(
            "command".into(),
            serde_json::to_value(run.command).unwrap_or(Value::Null),
        );
        doc.insert("preset".into(), serde_json::to_value(run.preset).unwrap_or(Value::Null));
        doc.insert(
            "problem".into(),
            serde_json::to_value(&run.problem_spec).unwrap_or(Value::Null),
        );
        doc.insert(
            "settings".into(),
            serde_json::to_value(&run.settings).unwrap_or(Value::Null),
        );
        doc.insert(
            "defaults".into(),
            serde_json::to_value(&run.defaults).unwrap_or(Value::Null),
        );
        if let Some(ProblemSetup::Smooth { problem, .. }) = &run.problem {
            doc.insert("theta".into(), json!(problem.field.theta));
        }
        doc.extend(self.extra);
        io::write_json(&out.join("meta.json"), &Value::Object(doc))
    }
}

fn run_command(run: &ResolvedRun, out: &Path) -> Result<()> {
    let mut meta = Meta::new();
    match (run.command, &run.problem) {
        (Command::TilingInfo, setup) => {
            let rule = match setup {
                Some(ProblemSetup::Laminate { rule, .. }) => rule.clone(),
                _ => SubstitutionRule::fibonacci(),
            };
            tiling_info(&rule, &run.settings, out)?;
        }
        (Command::Bands, Some(ProblemSetup::Smooth { problem, theta, .. })) => {
            let levels = theta.approximants(&run.settings.levels)?;
            let settings = band_settings(&run.settings, Window::new(0.0, 30.0)?);
            let mut sets = Vec::new();
            let mut files = Vec::new();
            for a in &levels {
                let bd = band_diagram(problem, a, &settings)?;
                let name = format!("bands_q{}", a.q);
                io::band_table(&bd).write(&out.join(format!("{name}.csv")))?;
                let gaps = extract_gaps(&bd, settings.window, None);
                io::write_json(&out.join(format!("gaps_q{}.json", a.q)), &gaps.gaps)?;
                files.push((name, bd.n_bands()));
                sets.push(gaps);
            }
            if sets.len() > 1 {
                io::write_json(&out.join("shared_gaps.json"), &shared_gaps(&sets, 0.0).gaps)?;
            }
            write_band_script(out, &files)?;
            meta.set("approximants", &levels);
        }
        (Command::Bands, Some(ProblemSetup::Laminate { tiles, rule })) => {
            let settings = band_settings(&run.settings, Window::new(0.0, 30.0)?);
            let mut sets = Vec::new();
            let mut files = Vec::new();
            for &g in &run.settings.generations {
                let word = generation_word(rule, g)?;
                let lam = Laminate::new(tiles.clone(), word)?;
                let coef = laminate_coefficient(&lam, true)?;
                let bd = band_diagram_for(&coef, ProblemKind::WaveSpeed, lam.total_length()?, &settings)?;
                let name = format!("bands_gen{g}");
                io::band_table(&bd).write(&out.join(format!("{name}.csv")))?;
                let gaps = extract_gaps(&bd, settings.window, None);
                io::write_json(&out.join(format!("gaps_gen{g}.json")), &gaps.gaps)?;
                files.push((name, bd.n_bands()));
                sets.push(gaps);
            }
            if sets.len() > 1 {
                io::write_json(&out.join("shared_gaps.json"), &shared_gaps(&sets, 0.0).gaps)?;
            }
            write_band_script(out, &files)?;
        }
        (Command::Superspace, Some(ProblemSetup::Smooth { problem, .. })) => {
            superspace_fd(problem, &run.settings, out, &mut meta)?;
        }
        (Command::Pwe, Some(ProblemSetup::Smooth { problem, theta, .. })) => {
            let levels = theta.approximants(&run.settings.levels)?;
            plane_waves(problem, &levels, &run.settings, out, &mut meta)?;
        }
        (Command::TraceScan, Some(ProblemSetup::Laminate { tiles, rule })) => {
            if *rule != SubstitutionRule::fibonacci() {
                return Err(Error::Config(
                    "trace-scan uses the Fibonacci rule a -> ab, b -> a".into(),
                ));
            }
            let s = &run.settings;
            let window = s.window.unwrap_or(Window::new(0.05, 6.0)?);
            let samples = trace_scan(tiles, window, s.resolution, s.epsilon, s.n_max)?;
            io::scan_table(&samples).write(&out.join("scan.csv"))?;
            let certs = merge_certified(&samples);
            io::write_json(&out.join("gaps.json"), &certs)?;
            let script = "set datafile separator ','\nset xlabel 'omega'\nset ylabel 'log10 |x_n|'\n\
                plot for [c=2:6] 'scan.csv' using 1:(log10(abs(column(c))+1e-300)) with lines title columnhead(c)\n";
            fs::write(out.join("scan.gp"), script).map_err(|e| Error::Io(e.to_string()))?;
            meta.set("certified_intervals", certs.len());
        }
        (Command::Interface, Some(ProblemSetup::Smooth { problem, .. })) => {
            let s = &run.settings;
            let st = InterfaceSettings {
                half_width: s.half_width,
                h: s.h,
                boundary: s.boundary,
                gap_denominators: s.levels.clone(),
                bands: band_settings(s, Window::new(0.0, 30.0)?),
                min_gap_width: s.min_gap_width,
                window: s.window,
                ..InterfaceSettings::default()
            };
            let study = interface_study(problem, &st)?;
            io::write_json(&out.join("gaps.json"), &study.gaps.gaps)?;
            let mut summary = Vec::new();
            for (k, f) in study.findings.iter().enumerate() {
                io::interface_mode_table(&f.mode).write(&out.join(format!("mode_{k}.csv")))?;
                summary.push(json!({
                    "eigenvalue": f.mode.eigenvalue,
                    "gap": f.mode.gap,
                    "isolation_margin": f.mode.isolation_margin,
                    "fitted_rate": f.mode.rate,
                    "fitted_rate_left": f.mode.rate_left,
                    "fitted_rate_right": f.mode.rate_right,
                    "estimated_rate": f.estimate.as_ref().map(|e| e.rate),
                    "deviation": f.relative_error,
                    "edge_ratio": f.mode.edge_ratio,
                }));
            }
            io::write_json(&out.join("summary.json"), &summary)?;
            let plots: Vec<String> = (0..summary.len())
                .map(|k| format!("'mode_{k}.csv' using 1:2 with lines title 'mode {k}'"))
                .collect();
            let script = format!(
                "set datafile separator ','\nset xlabel 'x'\nset ylabel 'u'\nplot {}\n",
                if plots.is_empty() {
                    "0 notitle".to_string()
                } else {
                    plots.join(", \\\n     ")
                }
            );
            fs::write(out.join("modes.gp"), script).map_err(|e| Error::Io(e.to_string()))?;
            meta.set("interface", &st);
        }
        (Command::Convergence, Some(ProblemSetup::Smooth { problem, theta, .. })) => {
            let levels = theta.approximants(&run.settings.levels)?;
            let window = run.settings.window.unwrap_or(Window::new(0.0, 20.0)?);
            let table = convergence_study(problem, &levels, window, &band_settings(&run.settings, window))?;
            let mut t = CsvTable::new(["q", "q_next", "distance"]);
            for r in &table.rows {
                t.push(vec![r.q.to_string(), r.q_next.to_string(), io::fmt_f64(r.distance)]);
            }
            t.write(&out.join("convergence.csv"))?;
            io::write_json(&out.join("convergence.json"), &table)?;
            let script =
                "set datafile separator ','\nset logscale xy\nset xlabel 'q'\nset ylabel 'Hausdorff distance'\n\
                plot 'convergence.csv' using 1:3 with linespoints notitle\n";
            fs::write(out.join("convergence.gp"), script).map_err(|e| Error::Io(e.to_string()))?;
        }
        (cmd, _) => {
            return Err(Error::Config(format!("{cmd:?} does not apply to this kind of problem")));
        }
    }
    meta.write(run, out)
}

fn band_settings(s: &Settings, fallback: Window) -> BandSettings {
    BandSettings {
        alpha_count: s.alpha_count,
        n_bands: s.n_bands,
        points_per_unit: s.points_per_unit,
        window: s.window.unwrap_or(fallback),
    }
}

fn generation_word(rule: &SubstitutionRule, generation: usize) -> Result<TilingWord> {
    let seed = rule.alphabet()[0].to_string();
    substitute(rule, &TilingWord::new(seed, 1), generation - 1)
}

fn write_band_script(out: &Path, files: &[(String, usize)]) -> Result<()> {
    let mut s = String::from("set datafile separator ','\nset xlabel 'alpha'\nset ylabel 'lambda'\n");
    for (name, n) in files {
        s.push_str(&format!(
            "set title '{name}'\nplot for [c=2:{}] '{name}.csv' using 1:c with lines notitle\npause -1\n",
            n + 1
        ));
    }
    fs::write(out.join("bands.gp"), s).map_err(|e| Error::Io(e.to_string()))
}

fn alpha_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| j as f64 * 2.0 * std::f64::consts::PI / count as f64)
        .collect()
}

fn superspace_fd(problem: &QuasiperiodicProblem, s: &Settings, out: &Path, meta: &mut Meta) -> Result<()> {
    let window = s.window.unwrap_or(Window::new(0.0, 30.0)?);
    let p = LiftedProblem::new(problem.clone(), s.h, 0.0, s.beta)?;
    let alphas = alpha_grid(s.alpha_count);
    let spectra = fd_alpha_sweep(&p, &alphas, window)?;
    io::sweep_table(&alphas, &spectra).write(&out.join("sweep.csv"))?;
    io::spectrum_table(&SpectrumSample::union(&spectra)).write(&out.join("spectrum.csv"))?;
    for (k, &target) in s.modes.iter().enumerate() {
        let m = superspace_mode(&p, target)?;
        io::superspace_mode_table(&m).write(&out.join(format!("mode_{k}.csv")))?;
        let mut t = CsvTable::new(["x", "re_u", "im_u"]);
        for (x, u) in m.slice_trace(problem.field.theta, 10.0) {
            t.push_floats(&[x, u.re, u.im]);
        }
        t.write(&out.join(format!("slice_{k}.csv")))?;
    }
    let script = "set datafile separator ','\nset xlabel 'alpha'\nset ylabel 'lambda'\n\
        plot 'sweep.csv' using 1:3 with points pt 7 ps 0.3 notitle\n";
    fs::write(out.join("sweep.gp"), script).map_err(|e| Error::Io(e.to_string()))?;
    let (nx, ny) = p.mesh();
    meta.set("mesh", [nx, ny]);
    meta.set("theta_mesh", p.theta_mesh());
    meta.set("alphas", &alphas);
    Ok(())
}

fn plane_waves(
    problem: &QuasiperiodicProblem,
    levels: &[crate::contfrac::RationalApproximant],
    s: &Settings,
    out: &Path,
    meta: &mut Meta,
) -> Result<()> {
    let window = s.window.unwrap_or(Window::new(9.0, 11.0)?);
    let alphas = alpha_grid(s.alpha_count);
    let pw = PlaneWaveProblem::new(problem.clone(), s.n_pw, 0.0, s.beta)?;
    let pwe = pwe_alpha_sweep(&pw, &alphas, &[window], s.tol)?;
    io::sweep_table(&alphas, &pwe).write(&out.join("sweep.csv"))?;
    io::spectrum_table(&SpectrumSample::union(&pwe)).write(&out.join("spectrum.csv"))?;
    let band_window = Window::new(0.0, 30.0)?;
    let gaps_at = |ppu: usize| -> Result<GapSet> {
        let settings = BandSettings {
            points_per_unit: ppu,
            ..band_settings(s, band_window)
        };
        let sets = levels
            .iter()
            .map(|a| Ok(extract_gaps(&band_diagram(problem, a, &settings)?, band_window, None)))
            .collect::<Result<Vec<GapSet>>>()?;
        Ok(shared_gaps(&sets, s.min_gap_width))
    };
    let h = crate::superspace::DEFAULT_H;
    let fd_ppu = (1.0 / h).round() as usize;
    let fd_gaps = gaps_at(fd_ppu)?;
    let pwe_gaps = gaps_at(s.points_per_unit)?;
    let lifted = LiftedProblem::new(problem.clone(), h, 0.0, s.beta)?;
    let fd_all = SpectrumSample::union(&fd_alpha_sweep(&lifted, &alphas, band_window)?);
    let empty = SpectrumSample::new(Vec::new());
    let fd_report: Vec<Value> = pollution_report(&fd_all, &empty, &fd_gaps, s.margin)
        .iter()
        .map(|r| json!({"gap": r.gap, "count": r.fd}))
        .collect();
    let pwe_report: Vec<Value> = pollution_report_counts(&empty, &pw, &alphas, &pwe_gaps, s.margin)?
        .iter()
        .map(|r| json!({"gap": r.gap, "count": r.pwe}))
        .collect();
    let report = json!({
        "margin": s.margin,
        "fd": {"h": h, "points_per_unit": fd_ppu, "gaps": fd_report},
        "pwe": {"n_pw": s.n_pw, "points_per_unit": s.points_per_unit, "gaps": pwe_report},
    });
    io::write_json(&out.join("pollution.json"), &report)?;
    let script = "set datafile separator ','\nset xlabel 'alpha'\nset ylabel 'lambda'\n\
        plot 'sweep.csv' using 1:3 with points pt 7 ps 0.3 notitle\n";
    fs::write(out.join("sweep.gp"), script).map_err(|e| Error::Io(e.to_string()))?;
    meta.set("alphas", &alphas);
    meta.set("fd_h", crate::superspace::DEFAULT_H);
    meta.set("fd_theta_mesh", lifted.theta_mesh());
    meta.set("gap_levels", levels);
    Ok(())
}

fn tiling_info(rule: &SubstitutionRule, s: &Settings, out: &Path) -> Result<()> {
    let m = substitution_matrix(rule);
    let primitive = is_primitive(&m, None);
    let pf = if primitive { Some(perron_frobenius(&m)?) } else { None };
    let seed = rule.alphabet()[0].to_string();
    let mut generations = Vec::new();
    for &g in &s.generations {
        let length = word_length(rule, &seed, g - 1)?;
        let word = if length as usize <= WORD_PRINT_LIMIT {
            Some(generation_word(rule, g)?.letters)
        } else {
            None
        };
        generations.push(json!({ "generation": g, "length": length, "word": word }));
    }
    let doc = json!({
        "alphabet": rule.alphabet(),
        "matrix": m.rows(),
        "primitive": primitive,
        "perron_frobenius": pf.map(|p| p.eigenvalue),
        "pisot": pf.map(|p| p.is_pisot),
        "generations": generations,
    });
    io::write_json(&out.join("tiling.json"), &doc)
}
