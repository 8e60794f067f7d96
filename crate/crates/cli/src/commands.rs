use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use mmchan_core::beams::{decode_ml_table, dft_codebook, stream_ml_export, BeamEvalConfig, MlFormat};
use mmchan_core::dataset::{
    build_dataset_with, export_dataset, shard_file_name, stream_export, ExportFormat, Manifest, ShardReader,
    MANIFEST_FILE, SHARD_MAGIC,
};
use mmchan_core::fsutil::{create_dir, write_atomic, write_bytes_atomic};
use mmchan_core::genparams::{canonical_key, ParamSet};
use mmchan_core::hash::{hash_file, hash_hex};
use mmchan_core::kv::{self, Entry};
use mmchan_core::rayio::{
    decode_rayfile_unchecked, read_rayfile, validate_rayfile, write_rayfile, RayFile, RayFileMeta, RAYFILE_MAGIC,
};
use mmchan_core::{build_o1_scene, Error, Scene, SceneConfig, Tracer};
use rayon::ThreadPool;
use serde::Serialize;

use crate::manifest::{FileRecord, RunManifest, RunRecorder};
use crate::pool::{build_pool, default_workers, PoolExec};
use crate::progress::Progress;
use crate::{
    BeamsArgs, BuildArgs, Cli, Command, DataFormat, ParamArgs, SceneArgs, TraceArgs, ValidateArgs, OUT_DIR_ENV,
};

#[derive(Debug)]
pub(crate) enum Failure {
    Usage(String),
    Failed(String),
}

impl Failure {
    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Failed(m) => m,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Failed(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Failed(e.to_string())
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

type CmdResult<T = ()> = Result<T, Failure>;

struct Ctx {
    quiet: bool,
    pool: ThreadPool,
}

impl Ctx {
    fn progress(&self, stage: &str, total: u64) -> Progress {
        Progress::stderr(stage, total, self.quiet)
    }
}

pub(crate) fn dispatch(cli: Cli) -> CmdResult {
    let workers = cli.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let pool = build_pool(workers).map_err(|e| Failure::Failed(format!("cannot start workers: {e}")))?;
    let ctx = Ctx { quiet: cli.quiet, pool };
    match cli.command {
        Command::Scene(a) => scene(&ctx, a),
        Command::Trace(a) => trace(&ctx, a),
        Command::Build(a) => build(&ctx, a),
        Command::Beams(a) => beams(&ctx, a),
        Command::Validate(a) => validate(a),
    }
}

fn out_dir(opt: Option<PathBuf>) -> PathBuf {
    opt.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Failed(format!("reading {}: {e}", path.display())))
}

fn run_manifest_path(dir: &Path, subcommand: &str) -> PathBuf {
    dir.join(format!("run-{subcommand}.json"))
}

fn load_params(args: &ParamArgs, rec: Option<&mut RunRecorder>) -> CmdResult<ParamSet> {
    let mut p = ParamSet::default();
    if let Some(path) = &args.config {
        for e in kv::parse_document(&read_text(path)?).map_err(usage)? {
            p.apply(&e).map_err(usage)?;
        }
        if let Some(rec) = rec {
            rec.input(path)?;
        }
    }
    let flags = [
        ("active_BS", &args.active_bs),
        ("active_user_first", &args.active_user_first),
        ("active_user_last", &args.active_user_last),
        ("num_ant_x", &args.num_ant_x),
        ("num_ant_y", &args.num_ant_y),
        ("num_ant_z", &args.num_ant_z),
        ("ant_spacing", &args.ant_spacing),
        ("bandwidth", &args.bandwidth),
        ("num_OFDM", &args.num_ofdm),
        ("OFDM_sampling_factor", &args.ofdm_sampling_factor),
        ("OFDM_limit", &args.ofdm_limit),
        ("num_paths", &args.num_paths),
    ];
    for (key, value) in flags {
        debug_assert_eq!(canonical_key(key), Some(key));
        if let Some(v) = value {
            p.apply(&Entry::new(key, v.as_str())).map_err(usage)?;
        }
    }
    p.check().map_err(usage)?;
    Ok(p)
}

fn load_scene(path: &Path, rec: &mut RunRecorder) -> CmdResult<Scene> {
    let scene = Scene::from_json(&read_text(path)?)?;
    rec.input(path)?;
    Ok(scene)
}

fn scene(ctx: &Ctx, a: SceneArgs) -> CmdResult {
    let cfg = match &a.config {
        Some(p) => SceneConfig::parse(&read_text(p)?).map_err(usage)?,
        None => SceneConfig::default(),
    };
    let mut rec = RunRecorder::new("scene", &format!("{:?}|{cfg:?}", a.preset));
    if let Some(p) = &a.config {
        rec.input(p)?;
    }
    let scene = build_o1_scene(&cfg)?;
    let out = a.out.unwrap_or_else(|| out_dir(None).join("scene.json"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let written = write_bytes_atomic(&out, scene.to_json()?.as_bytes())?;
    rec.output(&written);
    if !ctx.quiet {
        eprintln!(
            "scene {}: {} base stations, {} rows, {} users",
            scene.name,
            scene.base_stations.len(),
            scene.row_count(),
            scene.user_count()
        );
    }
    let mut manifest_path = out.clone().into_os_string();
    manifest_path.push(".run.json");
    rec.write(Path::new(&manifest_path))?;
    Ok(())
}

fn trace(ctx: &Ctx, a: TraceArgs) -> CmdResult {
    if a.max_paths == 0 || a.max_paths > mmchan_core::tracer::MAX_RECORDED_PATHS {
        return Err(Failure::Usage(format!(
            "--max-paths must be in 1..={}",
            mmchan_core::tracer::MAX_RECORDED_PATHS
        )));
    }
    let mut rec = RunRecorder::new("trace", "");
    let params = load_params(&a.params, Some(&mut rec))?;
    let scene = load_scene(&a.scene, &mut rec)?;
    let users: Vec<u64> = if a.all_users {
        (1..=scene.user_count()).collect()
    } else {
        scene.users_in_row_range(params.active_user_first, params.active_user_last)?
    };
    for &b in &params.active_bs {
        scene.base_station(b)?;
    }
    let rec_config = format!(
        "{}|all={}|refl={}|paths={}",
        params.to_document(),
        a.all_users,
        a.max_reflections,
        a.max_paths
    );
    let mut rec = rec.with_config(&rec_config);
    let dir = out_dir(a.out_dir);
    create_dir(&dir)?;
    let progress = ctx.progress("TRACE", users.len() as u64 * params.active_bs.len() as u64);
    let exec = PoolExec {
        pool: &ctx.pool,
        progress: Some(&progress),
    };
    for &b in &params.active_bs {
        let tracer = Tracer::new(&scene, b, a.max_reflections, a.max_paths)?;
        let lists = tracer.trace_users(&scene, &users, &exec)?;
        let meta = RayFileMeta {
            bs_id: b,
            carrier_freq: scene.carrier_freq,
            scenario_name: scene.name.clone(),
        };
        let path = dir.join(rayfile_name(b));
        let written = write_atomic(&path, |w| write_rayfile(&lists, &meta, w).map(|_| ()))?;
        rec.output(&written);
    }
    progress.finish();
    rec.write(&run_manifest_path(&dir, "trace"))?;
    Ok(())
}

pub fn rayfile_name(bs_id: u32) -> String {
    format!("bs{bs_id}.dmrf")
}

fn build(ctx: &Ctx, a: BuildArgs) -> CmdResult {
    let mut rec = RunRecorder::new("build", "");
    let params = load_params(&a.params, Some(&mut rec))?;
    let mut rec = rec.with_config(&format!("{}|{:?}|{}", params.to_document(), a.format, a.chunk));
    let scene = load_scene(&a.scene, &mut rec)?;
    let mut sources: Vec<RayFile> = Vec::new();
    for &b in &params.active_bs {
        let path = a.rays.join(rayfile_name(b));
        if !path.is_file() {
            return Err(Error::MissingRayFile { bs_id: b }.into());
        }
        let f = File::open(&path).map_err(|e| Failure::Failed(format!("opening {}: {e}", path.display())))?;
        let rf = read_rayfile(BufReader::new(f)).map_err(|e| Failure::Failed(format!("{}: {e}", path.display())))?;
        if rf.header.bs_id != b {
            return Err(Failure::Failed(format!(
                "{} holds rays for BS {}, expected BS {b}",
                path.display(),
                rf.header.bs_id
            )));
        }
        rec.input(&path)?;
        sources.push(rf);
    }
    let users = scene.users_in_row_range(params.active_user_first, params.active_user_last)?;
    let dir = out_dir(a.out_dir);
    let progress = ctx.progress("BUILD", users.len() as u64 * params.active_bs.len() as u64);
    let exec = PoolExec {
        pool: &ctx.pool,
        progress: Some(&progress),
    };
    let manifest = match a.format {
        DataFormat::Binary => stream_export(&sources, &params, &scene, &dir, &exec, a.chunk)?,
        DataFormat::Csv => {
            let ds = build_dataset_with(&sources, &params, &scene, &exec)?;
            export_dataset(&ds, &dir, ExportFormat::Csv)?
        }
    };
    progress.finish();
    record_manifest_outputs(&mut rec, &dir, &manifest)?;
    rec.write(&run_manifest_path(&dir, "build"))?;
    Ok(())
}

fn record_manifest_outputs(rec: &mut RunRecorder, dir: &Path, m: &Manifest) -> CmdResult {
    for e in &m.entries {
        rec.output_record(FileRecord {
            path: dir.join(&e.file).display().to_string(),
            bytes: e.bytes,
            hash: hash_hex(e.hash),
        });
    }
    let mpath = dir.join(MANIFEST_FILE);
    let (hash, bytes) = hash_file(&mpath)?;
    rec.output_record(FileRecord {
        path: mpath.display().to_string(),
        bytes,
        hash: hash_hex(hash),
    });
    Ok(())
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn beams(ctx: &Ctx, a: BeamsArgs) -> CmdResult {
    let dir = out_dir(a.out_dir);
    if same_dir(&dir, &a.dataset) {
        return Err(Failure::Usage(
            "--out-dir must differ from --dataset (both use manifest.txt)".into(),
        ));
    }
    let mpath = a.dataset.join(MANIFEST_FILE);
    let manifest = Manifest::parse(&read_text(&mpath)?)?;
    let first = manifest
        .entries
        .first()
        .ok_or_else(|| Failure::Failed(format!("{} lists no shards", mpath.display())))?;
    let spath = a.dataset.join(&first.file);
    let f = File::open(&spath).map_err(|e| Failure::Failed(format!("opening {}: {e}", spath.display())))?;
    let header = ShardReader::new(BufReader::new(f))?.header().clone();
    let codebook = dft_codebook(header.params.array_dims(), a.oversampling);
    let mut cfg = BeamEvalConfig::new(a.snr, codebook).map_err(usage)?;
    cfg.conjugate = a.conjugate;
    let mut rec = RunRecorder::new(
        "beams",
        &format!(
            "snr={:?}|os={}|conj={}|{:?}|{}",
            a.snr, a.oversampling, a.conjugate, a.format, a.chunk
        ),
    );
    rec.input(&mpath)?;
    for e in &manifest.entries {
        rec.input(&a.dataset.join(&e.file))?;
    }
    let format = match a.format {
        DataFormat::Binary => MlFormat::Binary,
        DataFormat::Csv => MlFormat::Csv,
    };
    let progress = ctx.progress("BEAMS", header.user_count);
    let exec = PoolExec {
        pool: &ctx.pool,
        progress: Some(&progress),
    };
    let out = stream_ml_export(&a.dataset, &cfg, &dir, format, &exec, a.chunk)?;
    progress.finish();
    record_manifest_outputs(&mut rec, &dir, &out)?;
    rec.write(&run_manifest_path(&dir, "beams"))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Report {
    path: String,
    kind: String,
    ok: bool,
    violations: Vec<String>,
    run: RunManifest,
}

fn validate(a: ValidateArgs) -> CmdResult {
    let mut rec = RunRecorder::new("validate", "");
    let (kind, violations) = inspect(&a.path)?;
    if a.path.is_file() {
        rec.input(&a.path)?;
    }
    for v in &violations {
        eprintln!("{}: {v}", a.path.display());
    }
    let ok = violations.is_empty();
    eprintln!(
        "{} {}: {kind}, {} violation(s)",
        if ok { "OK" } else { "INVALID" },
        a.path.display(),
        violations.len()
    );
    if let Some(report_path) = &a.report {
        let report = Report {
            path: a.path.display().to_string(),
            kind: kind.clone(),
            ok,
            violations: violations.clone(),
            run: rec.finish(),
        };
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        write_bytes_atomic(report_path, text.as_bytes())?;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Failed(format!("{} violation(s) in {kind}", violations.len())))
    }
}

fn read_magic(path: &Path) -> CmdResult<Vec<u8>> {
    let mut f = File::open(path).map_err(|e| Failure::Failed(format!("opening {}: {e}", path.display())))?;
    let mut head = Vec::new();
    f.by_ref()
        .take(4)
        .read_to_end(&mut head)
        .map_err(|e| Failure::Failed(format!("reading {}: {e}", path.display())))?;
    Ok(head)
}

fn shard_violations(path: &Path, expected_bs: Option<u32>) -> CmdResult<Vec<String>> {
    let f = File::open(path).map_err(|e| Failure::Failed(format!("opening {}: {e}", path.display())))?;
    let mut out = Vec::new();
    let result = ShardReader::new(BufReader::new(f)).and_then(|mut r| {
        if let Some(b) = expected_bs.filter(|&b| b != r.header().bs_id) {
            out.push(format!("shard holds BS {}, manifest says BS {b}", r.header().bs_id));
        }
        while r.next_entry()?.is_some() {}
        Ok(())
    });
    if let Err(e) = result {
        out.push(e.to_string());
    }
    Ok(out)
}

/// Classifies the artifact at `path` and lists its violations.
fn inspect(path: &Path) -> CmdResult<(String, Vec<String>)> {
    if path.is_dir() {
        return inspect_export(path);
    }
    if path.file_name().is_some_and(|n| n == MANIFEST_FILE) {
        let parent = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        return inspect_export(parent);
    }
    let head = read_magic(path)?;
    if head.as_slice() == RAYFILE_MAGIC {
        let bytes = fs::read(path).map_err(|e| Failure::Failed(format!("reading {}: {e}", path.display())))?;
        let v = match decode_rayfile_unchecked(&bytes) {
            Ok(rf) => validate_rayfile(&rf).iter().map(ToString::to_string).collect(),
            Err(e) => vec![e.to_string()],
        };
        return Ok(("ray file".into(), v));
    }
    if head.as_slice() == SHARD_MAGIC {
        return Ok(("dataset shard".into(), shard_violations(path, None)?));
    }
    if head.as_slice() == b"DMFT" || head.as_slice() == b"DMLB" {
        let bytes = fs::read(path).map_err(|e| Failure::Failed(format!("reading {}: {e}", path.display())))?;
        let v = decode_ml_table(&bytes)
            .err()
            .map(|e| e.to_string())
            .into_iter()
            .collect();
        return Ok(("feature/label file".into(), v));
    }
    if head.first() == Some(&b'{') {
        let text = read_text(path)?;
        if serde_json::from_str::<RunManifest>(&text).is_ok() {
            return Ok(("run manifest".into(), Vec::new()));
        }
        let v = match Scene::from_json_unchecked(&text) {
            Ok(s) => s.validate().iter().map(ToString::to_string).collect(),
            Err(e) => vec![e.to_string()],
        };
        return Ok(("scene".into(), v));
    }
    Err(Failure::Failed(format!("{}: unrecognized artifact", path.display())))
}

fn inspect_export(dir: &Path) -> CmdResult<(String, Vec<String>)> {
    let mpath = dir.join(MANIFEST_FILE);
    let manifest = match Manifest::parse(&read_text(&mpath)?) {
        Ok(m) => m,
        Err(e) => return Ok(("export directory".into(), vec![e.to_string()])),
    };
    let mut v = Vec::new();
    for e in &manifest.entries {
        let path = dir.join(&e.file);
        match hash_file(&path) {
            Err(err) => {
                v.push(err.to_string());
                continue;
            }
            Ok((hash, bytes)) if hash != e.hash || bytes != e.bytes => {
                v.push(format!("{}: size/hash differ from the manifest", e.file));
                continue;
            }
            Ok(_) => {}
        }
        if e.file.ends_with(".dmds") {
            v.extend(
                shard_violations(&path, Some(e.bs_id))?
                    .into_iter()
                    .map(|m| format!("{}: {m}", e.file)),
            );
        } else if e.file.ends_with(".dmft") || e.file.ends_with(".dmlb") {
            let bytes = fs::read(&path).map_err(|err| Failure::Failed(format!("reading {}: {err}", path.display())))?;
            if let Err(err) = decode_ml_table(&bytes) {
                v.push(format!("{}: {err}", e.file));
            }
        }
    }
    if manifest.entries.iter().any(|e| e.file == shard_file_name(e.bs_id)) {
        return Ok(("dataset export".into(), v));
    }
    Ok(("export directory".into(), v))
}
