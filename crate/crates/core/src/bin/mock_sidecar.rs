//! Stand-in for a neural re-ranking sidecar, used by tests.
//!
//! Usage: `mock-sidecar [MODE]` where MODE is one of
//! identity (default), reverse, omit-last, malformed, hang, exit, error, wrong-qid.
//! Scores are derived from candidate position only.

use std::io::{self, BufRead, Write};

use serde_json::{json, Value};

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "identity".into());
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let req: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                let _ = writeln!(out, "{}", json!({"qid": "", "error": e.to_string()}));
                let _ = out.flush();
                continue;
            }
        };
        let qid = req["qid"].as_str().unwrap_or_default().to_string();
        let docids: Vec<&str> = req["candidates"]
            .as_array()
            .map(|c| c.iter().filter_map(|c| c["docid"].as_str()).collect())
            .unwrap_or_default();
        let n = docids.len() as f64;
        let scored = |keep: usize, flip: bool| -> Vec<Value> {
            docids
                .iter()
                .take(keep)
                .enumerate()
                .rev() // answer in a different order than asked
                .map(|(i, d)| {
                    let s = if flip { i as f64 } else { n - i as f64 };
                    json!({"docid": d, "score": s})
                })
                .collect()
        };
        let reply = match mode.as_str() {
            "identity" => json!({"qid": qid, "scores": scored(docids.len(), false)}).to_string(),
            "reverse" => json!({"qid": qid, "scores": scored(docids.len(), true)}).to_string(),
            "omit-last" => json!({"qid": qid, "scores": scored(docids.len().saturating_sub(1), true)}).to_string(),
            "wrong-qid" => json!({"qid": format!("{qid}-x"), "scores": []}).to_string(),
            "error" => json!({"qid": qid, "error": "model failed to load"}).to_string(),
            "malformed" => "{not json".to_string(),
            "hang" => loop {
                std::thread::sleep(std::time::Duration::from_secs(60));
            },
            "exit" => std::process::exit(3),
            other => {
                eprintln!("unknown mode {other}");
                std::process::exit(2);
            }
        };
        if writeln!(out, "{reply}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
}
