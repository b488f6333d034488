//! Evaluates a TREC run file against qrels.
//!
//! cargo run --example evaluate_run -- run.trec qrels.txt
//! Without arguments a small inline run is scored.

use tot_cascade::eval::{evaluate, Metric};
use tot_cascade::model::{parse_qrels, read_run_file};

const RUN: &str = "q1 Q0 d3 1 2.5 demo\nq1 Q0 d1 2 2.1 demo\nq1 Q0 d2 3 1.0 demo\n\
q2 Q0 d5 1 3.0 demo\nq2 Q0 d4 2 1.5 demo\n";
const QRELS: &str = "q1 0 d1 1\nq2 0 d9 1\nq3 0 d1 0\n";

fn main() -> tot_cascade::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (run, qrels) = match args.as_slice() {
        [r, q] => (std::fs::read(r)?, std::fs::read(q)?),
        _ => (RUN.as_bytes().to_vec(), QRELS.as_bytes().to_vec()),
    };
    let runs = read_run_file(run.as_slice())?;
    let qrels = parse_qrels(qrels.as_slice())?;
    let report = evaluate(&runs, &qrels, &Metric::defaults());
    print!("{}", report.table());
    for (qid, values) in &report.per_query {
        println!("{qid}: {values:?}");
    }
    Ok(())
}
