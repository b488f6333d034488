//! Query reformulation against a chat endpoint.
//!
//! With `REWRITE_URL` set (an OpenAI-style chat completions endpoint) the
//! query is sent there; otherwise a fixed mock reply is used. Also shows the
//! reproducibility statistic and the seeded query sample.

use tot_cascade::model::Query;
use tot_cascade::rewrite::{deterministic_sample, reproducibility_cv, rewrite_query, RewriteConfig};
use tot_cascade::services::mock::FixedChat;
use tot_cascade::services::{ChatClient, HttpChat, HttpService};

fn main() -> tot_cascade::Result<()> {
    let client: Box<dyn ChatClient> = match std::env::var("REWRITE_URL") {
        Ok(url) => Box::new(HttpChat(
            HttpService::new(url, std::env::var("REWRITE_API_KEY").ok())
                .map_err(|e| tot_cascade::Error::Config(e.to_string()))?,
        )),
        Err(_) => Box::new(FixedChat("\"space movie stranded astronaut potatoes\"".into())),
    };
    let query = Query::new(
        "q1",
        "I think it was a movie, not sure if it was from the 2010s, where a guy is stuck \
         on another planet and he grows potatoes in his own... you know.",
    )?;
    let out = rewrite_query(&query, client.as_ref(), &RewriteConfig::default())?;
    println!("original : {}", query.text);
    println!("rewritten: {} (fallback: {})", out.query.text, out.fallback);

    let stats = reproducibility_cv(&[0.71, 0.70, 0.75])?;
    println!("\nRecall@1000 over three runs: mu={:.4} sigma={:.4} CV={:.2}%", stats.mu, stats.sigma, stats.cv_percent);

    let ids: Vec<String> = (1..=20).map(|i| format!("q-{i:03}")).collect();
    println!("sample of 5 (seed 42): {:?}", deterministic_sample(&ids, 5, 42)?);
    Ok(())
}
