//! Mission log replayer. Feeds a recorded mission into a running explanation
//! service (or an in-process session) at a chosen time compression, asking
//! scripted questions along the way.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use axv_explain::model::DEMO_MODEL_SOURCE;
use axv_explain::sim::{
    gen_demo_mission, interleave, load_log, parse_questions, replay_steps, write_log, CancelToken,
    ReplaySink, ScriptedQuestion, Speed, Step, DEMO_QUESTIONS,
};
use axv_explain::{AnswerPolicy, AnswerRecord, MissionEvent, MissionSession, PolicyMode};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "axv-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay a JSONL mission log.
    Replay(ReplayArgs),
    /// Write the canned demo mission log.
    Demo {
        #[arg(long)]
        out: PathBuf,
        /// Also write the matching question script.
        #[arg(long)]
        questions_out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Complete,
    Sound,
}

#[derive(Debug, clap::Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Time compression factor, or `max`.
    #[arg(long, default_value = "1")]
    speed: Speed,
    /// Base URL of a running service. Without it, replay runs in-process.
    #[arg(long)]
    target: Option<String>,
    /// Existing mission to feed. A new one is created when omitted.
    #[arg(long, requires = "target")]
    mission: Option<String>,
    /// Model source for a new mission; defaults to the demo model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Question script: `time<TAB>question` per line.
    #[arg(long)]
    questions: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "complete")]
    policy: Mode,
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    #[arg(long)]
    hide_numbers: bool,
}

impl ReplayArgs {
    fn policy(&self) -> AnswerPolicy {
        match self.policy {
            Mode::Complete => AnswerPolicy::complete(),
            Mode::Sound => AnswerPolicy::sound(self.threshold),
        }
    }

    fn model_source(&self) -> Result<String> {
        match &self.model {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
            None => Ok(DEMO_MODEL_SOURCE.to_string()),
        }
    }
}

fn print_exchange(t: f64, question: &str, answer: &AnswerRecord) {
    println!("[t={t}] Q: {question}");
    println!("[t={t}] A: {}", answer.answer);
}

struct Remote {
    client: reqwest::blocking::Client,
    base: String,
    mission: String,
    clock: f64,
}

impl Remote {
    fn check(resp: reqwest::blocking::Response) -> Result<reqwest::blocking::Response, String> {
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status();
        Err(format!("{status}: {}", resp.text().unwrap_or_default()))
    }
}

impl ReplaySink for Remote {
    type Error = String;

    fn event(&mut self, e: &MissionEvent) -> Result<(), String> {
        let url = format!("{}/api/missions/{}/events", self.base, self.mission);
        self.client.post(url).json(e).send().map_err(|e| e.to_string()).and_then(Self::check)?;
        self.clock = self.clock.max(e.t);
        Ok(())
    }

    fn ask(&mut self, q: &ScriptedQuestion) -> Result<(), String> {
        let url = format!("{}/api/missions/{}/ask", self.base, self.mission);
        let resp = self
            .client
            .post(url)
            .json(&json!({ "text": q.text }))
            .send()
            .map_err(|e| e.to_string())
            .and_then(Self::check)?;
        let answer: serde_json::Value = resp.json().map_err(|e| e.to_string())?;
        println!("[t={}] Q: {}", self.clock, q.text);
        println!("[t={}] A: {}", self.clock, answer["answer"].as_str().unwrap_or_default());
        Ok(())
    }
}

struct Local(MissionSession);

impl ReplaySink for Local {
    type Error = String;

    fn event(&mut self, e: &MissionEvent) -> Result<(), String> {
        self.0.post_event(e.clone()).map_err(|e| e.to_string())
    }

    fn ask(&mut self, q: &ScriptedQuestion) -> Result<(), String> {
        let answer = self.0.ask(&q.text);
        print_exchange(self.0.state.clock, &q.text, &answer);
        Ok(())
    }
}

fn create_remote(client: &reqwest::blocking::Client, base: &str, args: &ReplayArgs) -> Result<String> {
    let policy = args.policy();
    let mode = match policy.mode {
        PolicyMode::Complete => "complete",
        PolicyMode::Sound => "sound",
    };
    let body = json!({
        "model": args.model_source()?,
        "policy": { "mode": mode, "threshold": policy.threshold },
        "show_numbers": !args.hide_numbers,
    });
    let resp = client.post(format!("{base}/api/missions")).json(&body).send()?;
    if !resp.status().is_success() {
        bail!("creating mission failed: {} {}", resp.status(), resp.text().unwrap_or_default());
    }
    let v: serde_json::Value = resp.json()?;
    v["mission_id"].as_str().map(str::to_string).context("service returned no mission_id")
}

fn replay_cmd(args: ReplayArgs) -> Result<()> {
    let events = load_log(&args.log).with_context(|| format!("loading {}", args.log.display()))?;
    let questions = match &args.questions {
        Some(p) => parse_questions(&std::fs::read_to_string(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Vec::new(),
    };
    let steps: Vec<Step> = interleave(&events, &questions);

    let cancel = CancelToken::new();

    let report = match &args.target {
        Some(target) => {
            let base = target.trim_end_matches('/').to_string();
            let client = reqwest::blocking::Client::new();
            let mission = match &args.mission {
                Some(m) => m.clone(),
                None => create_remote(&client, &base, &args)?,
            };
            eprintln!("mission {mission}");
            let mut sink = Remote { client, base, mission, clock: 0.0 };
            replay_steps(&steps, args.speed, &mut sink, &cancel)?
        }
        None => {
            let session = MissionSession::create(&args.model_source()?, args.policy(), !args.hide_numbers)?;
            replay_steps(&steps, args.speed, &mut Local(session), &cancel)?
        }
    };
    eprintln!(
        "delivered {} steps in {:.3}s{}",
        report.delivered,
        report.wall_time.as_secs_f64(),
        if report.cancelled { " (cancelled)" } else { "" }
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Replay(args) => replay_cmd(args),
        Command::Demo { out, questions_out } => {
            std::fs::write(&out, write_log(&gen_demo_mission()))
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(q) = questions_out {
                std::fs::write(&q, DEMO_QUESTIONS).with_context(|| format!("writing {}", q.display()))?;
            }
            Ok(())
        }
    }
}
