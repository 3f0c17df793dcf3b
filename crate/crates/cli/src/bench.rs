use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use loopsynth::synth::{synthesize, SynthOutcome};
use serde::Serialize;

use crate::commands::{load_spec, prepare, reverify, Failure};
use crate::{exit, BenchArgs};

/// One CSV line.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub instance: String,
    pub status: String,
    pub tier: String,
    pub partition: String,
    pub permutation: String,
    pub millis: u128,
    pub verified: bool,
}

impl Row {
    fn failed(instance: &str, status: &str, millis: u128) -> Row {
        Row {
            instance: instance.to_string(),
            status: status.to_string(),
            tier: String::new(),
            partition: String::new(),
            permutation: String::new(),
            millis,
            verified: false,
        }
    }
}

fn status_of(code: u8) -> &'static str {
    match code {
        exit::PARSE => "parse-error",
        exit::SOLVER => "solver-error",
        _ => "error",
    }
}

fn instance(path: &Path, a: &BenchArgs) -> Option<Row> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string();
    let started = Instant::now();
    let elapsed = || started.elapsed().as_millis();
    let run = || -> Result<Option<Row>, Failure> {
        let mut spec = load_spec(path)?;
        if a.strict && spec.has_tag("reconstructed") {
            return Ok(None);
        }
        let (req, cfg) = prepare(&mut spec, None, a.tier, &a.solver)?;
        let rep = synthesize(&req, &cfg).map_err(crate::commands::synth_failure)?;
        Ok(Some(match &rep.outcome {
            SynthOutcome::Found(ls) => {
                let l = &ls[0];
                let o = l.origin.as_ref();
                Row {
                    instance: name.clone(),
                    status: "found".into(),
                    tier: o.map(|o| o.tier.to_string()).unwrap_or_default(),
                    partition: o.map(|o| o.partition.to_string()).unwrap_or_default(),
                    permutation: o.map(|o| o.permutation.join(" ")).unwrap_or_default(),
                    millis: elapsed(),
                    verified: reverify(l, &spec),
                }
            }
            SynthOutcome::NotFound { .. } => Row::failed(&name, "not-found", elapsed()),
            SynthOutcome::Exhausted => Row::failed(&name, "timeout", elapsed()),
        }))
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
        Ok(Ok(row)) => row,
        Ok(Err(f)) => {
            log::warn!("{name}: {}", f.msg);
            Some(Row::failed(&name, status_of(f.code), elapsed()))
        }
        Err(_) => Some(Row::failed(&name, "error", elapsed())),
    }
}

fn table(rows: &[Row]) -> String {
    let head = ["instance", "status", "tier", "partition", "permutation", "millis", "verified"];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.instance.clone(),
                r.status.clone(),
                r.tier.clone(),
                r.partition.clone(),
                r.permutation.clone(),
                r.millis.to_string(),
                if r.verified { "yes".into() } else { "no".into() },
            ]
        })
        .collect();
    let width: Vec<usize> = (0..7)
        .map(|k| cells.iter().map(|c| c[k].len()).chain([head[k].len()]).max().unwrap_or(0))
        .collect();
    let line = |c: &[&str]| -> String {
        let parts: Vec<String> = c.iter().zip(&width).map(|(s, w)| format!("{s:<w$}")).collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&head);
    out += &line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>());
    for c in &cells {
        out += &line(&c.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let found = rows.iter().filter(|r| r.status == "found").count();
    out += &format!("{found}/{} found\n", rows.len());
    out
}

fn write_csv(path: &Path, rows: &[Row]) -> Result<(), Failure> {
    let fail = |e: csv::Error| Failure::new(exit::FAILURE, format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    if rows.is_empty() {
        w.write_record(["instance", "status", "tier", "partition", "permutation", "millis", "verified"])
            .map_err(fail)?;
    }
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::new(exit::FAILURE, e.to_string()))
}

pub fn run(a: &BenchArgs) -> u8 {
    let mut specs: Vec<PathBuf> = match std::fs::read_dir(&a.dir) {
        Ok(d) => d
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "inv"))
            .collect(),
        Err(e) => {
            eprintln!("error: {}: {e}", a.dir.display());
            return exit::FAILURE;
        }
    };
    specs.sort();
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, specs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Row>>> = Mutex::new(vec![None; specs.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = specs.get(k) else { break };
                let row = instance(path, a);
                if let Some(r) = &row {
                    log::info!("{}: {}", r.instance, r.status);
                }
                slots.lock().unwrap()[k] = row;
            });
        }
    });
    let rows: Vec<Row> = slots.into_inner().unwrap().into_iter().flatten().collect();
    if let Some(p) = &a.csv {
        if let Err(f) = write_csv(p, &rows) {
            eprintln!("error: {}", f.msg);
            return f.code;
        }
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("serializable"));
    } else {
        print!("{}", table(&rows));
    }
    exit::OK
}
