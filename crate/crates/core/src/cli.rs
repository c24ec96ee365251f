//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use crate::bgu::{bgu_update, rotations_csv};
use crate::bhu::{bhu_update, HouseholderCompactState};
use crate::bounds::{diff_bounds, exact_diff_sq_with};
use crate::dense::{bidiagonal_values, bidiagonalize_dense};
use crate::error::{Error, Result};
use crate::gkb::{gkb, Reorth};
use crate::io;
use crate::jacobi::{jacobi_svd, DEFAULT_TOL};
use crate::matrix::{compose, BidiagonalMatrix, DenseMatrix};
use crate::profile::performance_profile;
use crate::rbd::{rbd, SketchConfig, SketchKind};
use crate::synth;
use crate::tracking::{FrobeniusAccumulator, IncrementalSvd, ReorthPolicy, TrackedFactorization};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Largest order handled by the `bounds` command.
pub const BOUNDS_MAX_ORDER: usize = 512;

#[derive(Debug, Parser)]
#[command(
    name = "bdupdate",
    version,
    about = "Bidiagonal factorizations and their rank-1 updates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FactorMethod {
    Dense,
    Gkb,
    Rbd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateMethod {
    Bgu,
    Bhu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackMethod {
    Bgu,
    Isvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMethod {
    Bgu,
    Bhu,
    Dense,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bidiagonalize a matrix file (Matrix Market or dense CSV).
    Factor {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FactorMethod::Dense)]
        method: FactorMethod,
        /// Steps for gkb, target rank for rbd.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// gkb reorthogonalization: none, full or short.
        #[arg(long, default_value = "full")]
        reorth: String,
        /// rbd oversampling.
        #[arg(long, default_value_t = SketchConfig::DEFAULT_OVERSAMPLE)]
        oversample: usize,
        #[arg(long)]
        rademacher: bool,
        #[arg(long, default_value = "bdupdate-out")]
        out: PathBuf,
    },
    /// Apply a rank-1 update `B + b cᵀ` to a band file.
    Update {
        band: PathBuf,
        b: PathBuf,
        c: PathBuf,
        #[arg(long, value_enum, default_value_t = UpdateMethod::Bgu)]
        method: UpdateMethod,
        /// bhu only: write a resumable state every K reflector steps.
        #[arg(long)]
        snapshot_every: Option<usize>,
        /// bhu only: continue from a saved state instead of the inputs.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long, default_value = "bdupdate-out")]
        out: PathBuf,
    },
    /// Replay an event stream with a rank-r tracker.
    Track {
        stream: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value_t = TrackMethod::Bgu)]
        method: TrackMethod,
        /// never, every:K or adaptive[:THRESHOLD].
        #[arg(long, default_value = "adaptive")]
        reorth: String,
        #[arg(long)]
        snapshot_every: Option<u64>,
        /// Also report ‖A − Q B Pᵀ‖_F, formed densely.
        #[arg(long)]
        dense_residual: bool,
        #[arg(long, default_value = "bdupdate-out")]
        out: PathBuf,
    },
    /// Time rank-1 updates over a corpus and emit a performance profile.
    Bench {
        /// Directory of Matrix Market files.
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [BenchMethod::Bgu, BenchMethod::Bhu, BenchMethod::Dense])]
        methods: Vec<BenchMethod>,
        /// Synthetic square problem sizes, used in addition to the corpus.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "bdupdate-out")]
        out: PathBuf,
    },
    /// Tabulate truncation errors and SVD/BD difference bounds per rank.
    Bounds {
        input: PathBuf,
        /// Inclusive range `LO..HI` or single rank; all ranks by default.
        #[arg(long)]
        rank: Option<String>,
        #[arg(long, default_value = "bdupdate-out")]
        out: PathBuf,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli.command) {
        Ok(report) => {
            println!("{report}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// Runs one command and returns its JSON report.
pub fn execute(cmd: &Command) -> Result<String> {
    match cmd {
        Command::Factor {
            input,
            method,
            rank,
            seed,
            reorth,
            oversample,
            rademacher,
            out,
        } => {
            let kind = if *rademacher {
                SketchKind::Rademacher
            } else {
                SketchKind::Gaussian
            };
            let opts = FactorOptions {
                method: *method,
                rank: *rank,
                seed: *seed,
                reorth,
                oversample: *oversample,
                kind,
            };
            to_json(&cmd_factor(input, &opts, out)?)
        }
        Command::Update {
            band,
            b,
            c,
            method,
            snapshot_every,
            resume,
            out,
        } => to_json(&cmd_update(
            band,
            b,
            c,
            *method,
            *snapshot_every,
            resume.as_deref(),
            out,
        )?),
        Command::Track {
            stream,
            rank,
            method,
            reorth,
            snapshot_every,
            dense_residual,
            out,
        } => {
            let policy: ReorthPolicy = reorth.parse()?;
            let opts = TrackOptions {
                rank: *rank,
                method: *method,
                policy,
                snapshot_every: *snapshot_every,
                dense_residual: *dense_residual,
            };
            to_json(&cmd_track(stream, &opts, out)?)
        }
        Command::Bench {
            corpus,
            methods,
            sizes,
            seed,
            out,
        } => to_json(&cmd_bench(corpus.as_deref(), methods, sizes, *seed, out)?),
        Command::Bounds { input, rank, out } => to_json(&cmd_bounds(input, rank.as_deref(), out)?),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    io::write_file(path, to_json(v)? + "\n")
}

pub struct FactorOptions<'a> {
    pub method: FactorMethod,
    pub rank: Option<usize>,
    pub seed: u64,
    pub reorth: &'a str,
    pub oversample: usize,
    pub kind: SketchKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorReport {
    pub method: String,
    pub m: usize,
    pub n: usize,
    pub order: usize,
    pub residual: f64,
    pub relative_residual: f64,
    pub seconds: f64,
    pub breakdown: bool,
    pub rank_deficient: bool,
    pub drift_q: f64,
    pub drift_p: f64,
}

fn parse_reorth(s: &str) -> Result<Reorth> {
    match s {
        "none" => Ok(Reorth::None),
        "full" => Ok(Reorth::Full),
        "short" | "short-space" => Ok(Reorth::ShortSpace),
        _ => Err(Error::InvalidArgument(format!(
            "reorth must be none, full or short, not '{s}'"
        ))),
    }
}

fn read_finite(input: &Path) -> Result<DenseMatrix> {
    let a = io::read_matrix(input)?;
    if !a.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    Ok(a)
}

pub fn cmd_factor(input: &Path, opts: &FactorOptions, out: &Path) -> Result<FactorReport> {
    let a = read_finite(input)?;
    let (m, n) = a.shape();
    let t = m.min(n);
    let start = Instant::now();
    let (q, b, p, breakdown, deficient) = match opts.method {
        FactorMethod::Dense => {
            let d = bidiagonalize_dense(&a);
            (d.q.into_matrix(), d.b, d.p.into_matrix(), false, false)
        }
        FactorMethod::Gkb => {
            let steps = opts.rank.unwrap_or(t);
            let reorth = parse_reorth(opts.reorth)?;
            let mut p1 = synth::gaussian_vector(n, opts.seed);
            let nrm = p1.iter().map(|v| v * v).sum::<f64>().sqrt();
            p1.iter_mut().for_each(|v| *v /= nrm);
            let r = gkb(&a, &p1, steps, reorth)?;
            (
                r.q.into_matrix(),
                r.b,
                r.p.into_matrix(),
                r.breakdown,
                false,
            )
        }
        FactorMethod::Rbd => {
            let rank = opts.rank.unwrap_or(t);
            let oversample = opts.oversample.min(n.saturating_sub(rank));
            let cfg = SketchConfig {
                kind: opts.kind,
                rank,
                oversample,
                seed: opts.seed,
            };
            let r = rbd(&a, &cfg)?;
            (
                r.q.into_matrix(),
                r.b,
                r.p.into_matrix(),
                false,
                r.rank_deficient,
            )
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let residual = compose(&q, &b, &p).sub(&a).frob_norm();
    let an = a.frob_norm();
    io::write_file(&out.join("band.txt"), io::write_band(&b))?;
    io::write_file(&out.join("q.mtx"), io::write_matrix_market(&q))?;
    io::write_file(&out.join("p.mtx"), io::write_matrix_market(&p))?;
    let report = FactorReport {
        method: format!("{:?}", opts.method).to_lowercase(),
        m,
        n,
        order: b.order(),
        residual,
        relative_residual: if an > 0.0 { residual / an } else { residual },
        seconds,
        breakdown,
        rank_deficient: deficient,
        drift_q: q.orthogonality_defect(),
        drift_p: p.orthogonality_defect(),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct UpdateReport {
    pub method: String,
    pub m: usize,
    pub n: usize,
    pub seconds: f64,
    pub mult_count: u64,
    pub rotations: usize,
    pub spike_rotations: usize,
    pub sign_flips: usize,
    pub reflectors: usize,
    /// `|‖B + b cᵀ‖_F − ‖Bnew‖_F|`.
    pub norm_gap: f64,
    pub complete: bool,
}

pub fn cmd_update(
    band: &Path,
    bfile: &Path,
    cfile: &Path,
    method: UpdateMethod,
    snapshot_every: Option<usize>,
    resume: Option<&Path>,
    out: &Path,
) -> Result<UpdateReport> {
    let b = io::read_band(band)?;
    let bv = io::read_vector(bfile)?;
    let cv = io::read_vector(cfile)?;
    if bv.len() != b.m || cv.len() != b.n {
        return Err(Error::Dimension(format!(
            "vectors of length {} and {} for a {}x{} band",
            bv.len(),
            cv.len(),
            b.m,
            b.n
        )));
    }
    let mut full = b.to_dense();
    full.add_outer(1.0, &bv, &cv);
    let target = full.frob_norm();
    let mut report = UpdateReport {
        method: format!("{method:?}").to_lowercase(),
        m: b.m,
        n: b.n,
        seconds: 0.0,
        mult_count: 0,
        rotations: 0,
        spike_rotations: 0,
        sign_flips: 0,
        reflectors: 0,
        norm_gap: 0.0,
        complete: true,
    };
    match method {
        UpdateMethod::Bgu => {
            let start = Instant::now();
            let o = bgu_update(&b, &bv, &cv)?;
            report.seconds = start.elapsed().as_secs_f64();
            report.mult_count = o.audit.mult_counter;
            report.rotations = o.audit.rotations;
            report.spike_rotations = o.audit.spike_rotations;
            report.sign_flips = o.audit.sign_flips;
            report.norm_gap = (target - o.b.frob_norm()).abs();
            io::write_file(&out.join("band.txt"), io::write_band(&o.b))?;
            io::write_file(&out.join("rotations.csv"), rotations_csv(&o.left, &o.right))?;
        }
        UpdateMethod::Bhu => {
            let mut state = match resume {
                Some(path) => {
                    let bytes = std::fs::read(path)
                        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    HouseholderCompactState::from_bytes(&bytes)?
                }
                None => HouseholderCompactState::new(b.clone(), bv.clone(), cv.clone())?,
            };
            let start = Instant::now();
            match snapshot_every {
                Some(0) => {
                    return Err(Error::InvalidArgument(
                        "snapshot interval must be positive".into(),
                    ))
                }
                Some(k) => {
                    while !state.is_complete() {
                        state.run(Some(k))?;
                        io::write_file(&out.join("bhu_state.bin"), state.to_bytes())?;
                    }
                }
                None => state.run(None)?,
            }
            report.seconds = start.elapsed().as_secs_f64();
            let o = state.output()?;
            report.mult_count = o.mults;
            report.reflectors = state.k_left() + state.k_right();
            report.norm_gap = (target - o.b.frob_norm()).abs();
            io::write_file(&out.join("band.txt"), io::write_band(&o.b))?;
            io::write_file(&out.join("y.mtx"), io::write_matrix_market(&o.y))?;
            io::write_file(&out.join("w.mtx"), io::write_matrix_market(&o.w))?;
            io::write_file(&out.join("t.mtx"), io::write_matrix_market(&o.t))?;
            io::write_file(&out.join("r.mtx"), io::write_matrix_market(&o.r))?;
        }
    }
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

pub struct TrackOptions {
    pub rank: usize,
    pub method: TrackMethod,
    pub policy: ReorthPolicy,
    pub snapshot_every: Option<u64>,
    pub dense_residual: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackRow {
    pub step: usize,
    pub wall_seconds: f64,
    pub mult_count: u64,
    pub rotations: usize,
    pub residual: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackSummary {
    pub steps: usize,
    pub wall_seconds: f64,
    pub mult_count: u64,
    pub rotations: usize,
    /// Sum of the per-step residuals.
    pub residual: f64,
    pub max_drift: f64,
    pub reorthogonalizations: u64,
    pub dense_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackReport {
    pub rows: Vec<TrackRow>,
    pub summary: TrackSummary,
}

impl TrackReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,wall_seconds,mult_count,rotations,residual,drift\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{},{},{:e},{:e}",
                r.step, r.wall_seconds, r.mult_count, r.rotations, r.residual, r.drift
            );
        }
        out
    }

    fn summarize(rows: Vec<TrackRow>, reorth: u64, dense: Option<f64>) -> Self {
        let summary = TrackSummary {
            steps: rows.len(),
            wall_seconds: rows.iter().map(|r| r.wall_seconds).sum(),
            mult_count: rows.iter().map(|r| r.mult_count).sum(),
            rotations: rows.iter().map(|r| r.rotations).sum(),
            residual: rows.iter().map(|r| r.residual).sum(),
            max_drift: rows.iter().map(|r| r.drift).fold(0.0, f64::max),
            reorthogonalizations: reorth,
            dense_residual: dense,
        };
        Self { rows, summary }
    }
}

pub fn cmd_track(stream: &Path, opts: &TrackOptions, out: &Path) -> Result<TrackReport> {
    let s = io::read_stream(stream)?;
    let report = replay(&s, opts, Some(out))?;
    io::write_file(&out.join("track.csv"), report.to_csv())?;
    write_json(&out.join("summary.json"), &report.summary)?;
    Ok(report)
}

/// Replays a parsed stream. Snapshots and the final tracker state go to
/// `out` when given.
pub fn replay(s: &io::StreamFile, opts: &TrackOptions, out: Option<&Path>) -> Result<TrackReport> {
    let mut acc = FrobeniusAccumulator::new();
    let mut rows = Vec::with_capacity(s.events.len());
    let mut dense = opts.dense_residual.then(|| DenseMatrix::zeros(s.m, s.n));
    let at_line = |line: usize, e: Error| match e {
        Error::IndexOutOfRange { .. } | Error::NonFinite { .. } => Error::Parse {
            line,
            msg: e.to_string(),
        },
        other => other,
    };
    match opts.method {
        TrackMethod::Bgu => {
            let mut t = TrackedFactorization::new(s.m, s.n, opts.rank)?.with_policy(opts.policy);
            for (step, e) in s.events.iter().enumerate() {
                let start = Instant::now();
                t.update(&e.to_update())
                    .map_err(|err| at_line(e.line, err))?;
                let wall_seconds = start.elapsed().as_secs_f64();
                if !matches!(opts.policy, ReorthPolicy::Adaptive(_)) {
                    t.drift_check();
                }
                acc.add(e.i, e.j, e.theta);
                if let Some(a) = dense.as_mut() {
                    a[(e.i, e.j)] += e.theta;
                }
                let st = t.last_stats();
                let (dq, dp) = t.drift();
                rows.push(TrackRow {
                    step: step + 1,
                    wall_seconds,
                    mult_count: st.mults,
                    rotations: st.rotations,
                    residual: t.residual(acc.norm()),
                    drift: dq.max(dp),
                });
                if let (Some(dir), Some(k)) = (out, opts.snapshot_every) {
                    if k > 0 && (step as u64 + 1).is_multiple_of(k) {
                        io::write_file(
                            &dir.join(format!("tracker_{:06}.bin", step + 1)),
                            t.to_bytes(),
                        )?;
                    }
                }
            }
            if let Some(dir) = out {
                io::write_file(&dir.join("tracker.bin"), t.to_bytes())?;
            }
            let dres = dense.map(|a| t.represented().sub(&a).frob_norm());
            Ok(TrackReport::summarize(rows, t.reorth_count(), dres))
        }
        TrackMethod::Isvd => {
            let mut t = IncrementalSvd::new(s.m, s.n, opts.rank)?;
            for (step, e) in s.events.iter().enumerate() {
                let start = Instant::now();
                t.update(&e.to_update())
                    .map_err(|err| at_line(e.line, err))?;
                let wall_seconds = start.elapsed().as_secs_f64();
                acc.add(e.i, e.j, e.theta);
                if let Some(a) = dense.as_mut() {
                    a[(e.i, e.j)] += e.theta;
                }
                let sn = t.sigma().iter().map(|v| v * v).sum::<f64>().sqrt();
                rows.push(TrackRow {
                    step: step + 1,
                    wall_seconds,
                    mult_count: 0,
                    rotations: 0,
                    residual: (acc.norm() - sn).abs(),
                    drift: 0.0,
                });
            }
            let dres = dense.map(|a| t.represented().sub(&a).frob_norm());
            Ok(TrackReport::summarize(rows, 0, dres))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub problem: String,
    pub m: usize,
    pub n: usize,
    pub density: f64,
    pub method: BenchMethod,
    pub seconds: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<String>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("problem,m,n,density,method,seconds,residual\n");
        for r in &self.rows {
            let method = format!("{:?}", r.method).to_lowercase();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:e},{:e}",
                r.problem, r.m, r.n, r.density, method, r.seconds, r.residual
            );
        }
        out
    }
}

/// One timed rank-1 update of `a` with the given method. Wide problems are
/// transposed first. Returns `(seconds, |‖A + b cᵀ‖_F − ‖B⁺‖_F|)`.
pub fn bench_one(a: &DenseMatrix, method: BenchMethod, seed: u64) -> Result<(f64, f64)> {
    let a = if a.rows() < a.cols() {
        a.transpose()
    } else {
        a.clone()
    };
    let (m, n) = a.shape();
    let mut rng = synth::rng(seed);
    let bv: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
    let cv: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut updated = a.clone();
    updated.add_outer(1.0, &bv, &cv);
    let target = updated.frob_norm();
    let (secs, band) = match method {
        BenchMethod::Dense => {
            let start = Instant::now();
            let (b, _) = bidiagonal_values(&updated);
            (start.elapsed().as_secs_f64(), b)
        }
        BenchMethod::Bgu | BenchMethod::Bhu => {
            let d = bidiagonalize_dense(&a);
            let bhat = d.q.matrix().tmatvec(&bv);
            let chat = d.p.matrix().tmatvec(&cv);
            let start = Instant::now();
            let b = if method == BenchMethod::Bgu {
                bgu_update(&d.b, &bhat, &chat)?.b
            } else {
                bhu_update(&d.b, &bhat, &chat)?.b
            };
            (start.elapsed().as_secs_f64(), b)
        }
    };
    Ok((secs, (target - band.frob_norm()).abs()))
}

fn density(a: &DenseMatrix) -> f64 {
    a.data().iter().filter(|v| **v != 0.0).count() as f64 / a.data().len() as f64
}

pub fn cmd_bench(
    corpus: Option<&Path>,
    methods: &[BenchMethod],
    sizes: &[usize],
    seed: u64,
    out: &Path,
) -> Result<BenchReport> {
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods selected".into()));
    }
    let mut problems: Vec<(String, DenseMatrix)> = Vec::new();
    let mut skipped = Vec::new();
    if let Some(dir) = corpus {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "mtx"))
            .collect();
        paths.sort();
        for p in paths {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            match io::read_matrix(&p) {
                Ok(a) => problems.push((name, a)),
                Err(e) => {
                    eprintln!("warning: skipping {}: {e}", p.display());
                    skipped.push(format!("{}: {e}", p.display()));
                }
            }
        }
    }
    for (k, &n) in sizes.iter().enumerate() {
        if n == 0 {
            return Err(Error::InvalidArgument("sizes must be positive".into()));
        }
        problems.push((
            format!("gauss{n}"),
            synth::gaussian_matrix(n, n, seed.wrapping_add(k as u64)),
        ));
    }
    let mut rows = Vec::new();
    let mut times = Vec::new();
    for (pi, (name, a)) in problems.iter().enumerate() {
        let mut trow = Vec::new();
        for &method in methods {
            let (seconds, residual) = bench_one(a, method, seed.wrapping_add(1000 + pi as u64))?;
            trow.push(Some(seconds.max(1e-9)));
            rows.push(BenchRow {
                problem: name.clone(),
                m: a.rows(),
                n: a.cols(),
                density: density(a),
                method,
                seconds,
                residual,
            });
        }
        times.push(trow);
    }
    let report = BenchReport { rows, skipped };
    io::write_file(&out.join("bench.csv"), report.to_csv())?;
    if !times.is_empty() {
        let names: Vec<String> = methods
            .iter()
            .map(|m| format!("{m:?}").to_lowercase())
            .collect();
        let prof = performance_profile(&names, &times)?;
        io::write_file(&out.join("profile.csv"), prof.to_csv())?;
    }
    write_json(&out.join("bench.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsRow {
    pub r: usize,
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
    pub bd_tail: f64,
    pub svd_tail: f64,
}

fn parse_range(s: &str, t: usize) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("rank range '{s}' is not LO..HI within 1..={t}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let r = s.trim().parse().map_err(|_| bad())?;
            (r, r)
        }
    };
    if lo == 0 || lo > hi || hi > t {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Rows for ranks `lo..=hi`, each checked for `lower ≤ exact ≤ upper`.
pub fn bounds_table(a: &DenseMatrix, lo: usize, hi: usize) -> Result<Vec<BoundsRow>> {
    let (b, _) = bidiagonal_values(a);
    let t = b.order();
    let sq = BidiagonalMatrix::new(t, t, b.alphas.clone(), b.betas.clone())?;
    let svd = jacobi_svd(&sq.to_dense(), DEFAULT_TOL)?;
    let scale = a.frob_norm_sq().max(f64::MIN_POSITIVE);
    let mut rows = Vec::with_capacity(hi + 1 - lo);
    for r in lo..=hi {
        let d = diff_bounds(&svd.sigma, &b, r)?;
        let exact = exact_diff_sq_with(&svd.sigma, svd.v.matrix(), &b, r);
        let slack = 1e-9 * scale;
        if d.lower > exact + slack || exact > d.upper + slack {
            return Err(Error::BoundViolation {
                rank: r,
                lower: d.lower,
                exact,
                upper: d.upper,
            });
        }
        rows.push(BoundsRow {
            r,
            lower: d.lower,
            exact,
            upper: d.upper,
            bd_tail: (r..t).map(|i| b.pair_energy(i)).sum(),
            svd_tail: svd.sigma[r..].iter().map(|s| s * s).sum(),
        });
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("r,lower,exact,upper,bd_tail,svd_tail\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e}",
            r.r, r.lower, r.exact, r.upper, r.bd_tail, r.svd_tail
        );
    }
    out
}

pub fn cmd_bounds(input: &Path, range: Option<&str>, out: &Path) -> Result<Vec<BoundsRow>> {
    let a = read_finite(input)?;
    let t = a.rows().min(a.cols());
    if t > BOUNDS_MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "order {t} exceeds {BOUNDS_MAX_ORDER}"
        )));
    }
    let (lo, hi) = match range {
        Some(s) => parse_range(s, t)?,
        None => (1, t),
    };
    let rows = bounds_table(&a, lo, hi)?;
    io::write_file(&out.join("bounds.csv"), bounds_csv(&rows))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("1..40", 40).unwrap(), (1, 40));
        assert_eq!(parse_range("7", 40).unwrap(), (7, 7));
        assert!(parse_range("0..3", 40).is_err());
        assert!(parse_range("5..41", 40).is_err());
        assert!(parse_range("x", 40).is_err());
    }

    #[test]
    fn bad_arguments_exit_two() {
        assert_eq!(run(["bdupdate", "factor"]), EXIT_INVALID);
        assert_eq!(
            run(["bdupdate", "bounds", "/nonexistent/file.mtx"]),
            EXIT_INVALID
        );
    }

    #[test]
    fn exit_code_classes() {
        assert_eq!(exit_code(&Error::Singular(1)), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Dimension("x".into())), EXIT_INVALID);
    }
}
