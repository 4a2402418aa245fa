use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use logic_forge::agent::{
    check_solution, format_output, run_pipeline, Fault, FaultInjector, Formalizer, FormalizerError,
    LlmClientConfig, LlmFormalizer, OutputFormat, PipelineConfig, PipelineResult, PipelineStatus,
    RecordingFormalizer, ReplayFormalizer, Stage, TranscriptEntry,
};
use logic_forge::bench::{paper_instance, OracleFormalizer};
use logic_forge::frontend::{compile, SourceText};
use logic_forge::model::{Cell, SolutionTable};

const PAPER: &str = include_str!("fixtures/paper_puzzle.py");
const FIG3_FIG4: &str = include_str!("fixtures/fig3_fig4.py");

fn config() -> PipelineConfig {
    PipelineConfig {
        format: paper_instance().to_task().format,
        ..PipelineConfig::default()
    }
}

// ---- check_solution ----

#[test]
fn table_one_satisfies_the_hand_written_program() {
    let program = compile(&SourceText::new("paper.py", PAPER)).unwrap();
    assert!(check_solution(&program, &paper_instance().truth).unwrap());
}

#[test]
fn swapping_alice_and_peter_breaks_clue_three() {
    let program = compile(&SourceText::new("paper.py", PAPER)).unwrap();
    let mut t = paper_instance().truth;
    let name = t.column_index("name").unwrap();
    t.rows[0][name] = Cell::Str("peter".into());
    t.rows[1][name] = Cell::Str("alice".into());
    assert!(!check_solution(&program, &t).unwrap());
}

#[test]
fn empty_validator_accepts_distinct_table() {
    let src = PAPER.split("def validate").next().unwrap().to_string()
        + "def validate(solution: PuzzleSolution) -> None:\n  pass\n";
    let program = compile(&SourceText::new("empty.py", src)).unwrap();
    let mut t = paper_instance().truth;
    t.rows.swap(0, 3);
    assert!(check_solution(&program, &t).unwrap());
    // repeated value in a Unique column
    let book = t.column_index("book").unwrap();
    t.rows[0][book] = t.rows[1][book].clone();
    assert!(!check_solution(&program, &t).unwrap());
}

#[test]
fn mis_shaped_table_is_an_error() {
    let program = compile(&SourceText::new("paper.py", PAPER)).unwrap();
    let t = SolutionTable {
        columns: vec!["house".into()],
        rows: vec![vec![Cell::Int(1)]],
        position_column: Some("house".into()),
    };
    assert!(check_solution(&program, &t).is_err());
}

// ---- format_output ----

#[test]
fn format_output_of_table_one() {
    let doc = format_output(&paper_instance().truth, &config().format).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(
        serde_json::to_string(&rows[0]).unwrap(),
        r#"{"house":1,"name":"alice","occupation":"engineer","book":"romance","phone":"google pixel 6"}"#
    );
    assert!(format_output(&paper_instance().truth, &OutputFormat::columns(["color"])).is_err());
}

// ---- pipeline retry edges ----

#[test]
fn garbage_always_fails_syntax_after_max_attempts() {
    let f = FaultInjector::always(OracleFormalizer, Fault::Garbage);
    let r = run_pipeline(&paper_instance().text, &f, &config());
    assert_eq!(r.status, PipelineStatus::FailedSyntax);
    assert_eq!(r.attempts, 5);
    assert!(r.solution.is_none());
    assert_eq!(r.log.len(), 5);
    assert!(r.log.iter().all(|l| l.stage == Stage::Compile));
}

#[test]
fn one_fault_then_correct_solves_on_second_attempt() {
    for fault in [Fault::Garbage, Fault::Transport] {
        let f = FaultInjector::first(OracleFormalizer, 1, fault);
        let r = run_pipeline(&paper_instance().text, &f, &config());
        assert_eq!(r.status, PipelineStatus::Solved);
        assert_eq!(r.attempts, 2);
        assert_eq!(r.solution.unwrap(), paper_instance().truth);
        assert_eq!(r.log[1].stage, Stage::Solved);
    }
}

/// Adds the negation of clue 2 ("fantasy is in house 2") right after it.
fn contradict_clue_two(src: &str) -> String {
    let line = "  assert c2_a.house == 2\n";
    assert!(src.contains(line), "{src}");
    src.replace(line, &format!("{line}  assert c2_a.house != 2\n"))
}

#[test]
fn contradiction_is_unsat_then_recovers() {
    let f = FaultInjector::first(OracleFormalizer, 1, Fault::Rewrite(Arc::new(contradict_clue_two)));
    let r = run_pipeline(&paper_instance().text, &f, &config());
    assert_eq!(r.status, PipelineStatus::Solved);
    assert_eq!(r.attempts, 2);
    assert_eq!(r.log[0].stage, Stage::Solve);

    let always = FaultInjector::always(OracleFormalizer, Fault::Rewrite(Arc::new(contradict_clue_two)));
    let r = run_pipeline(&paper_instance().text, &always, &PipelineConfig { max_attempts: 2, ..config() });
    assert_eq!(r.status, PipelineStatus::FailedUnsat);
    assert_eq!(r.attempts, 2);
}

fn drop_clue_one(src: &str) -> String {
    src.lines()
        .filter(|l| !l.contains("c1_") && !l.starts_with("  # Clue 1:"))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[test]
fn ambiguity_check_catches_missing_clue() {
    let f = FaultInjector::always(OracleFormalizer, Fault::Rewrite(Arc::new(drop_clue_one)));
    let on = PipelineConfig { ambiguity_check: true, max_attempts: 3, ..config() };
    let r = run_pipeline(&paper_instance().text, &f, &on);
    assert_eq!(r.status, PipelineStatus::FailedAmbiguous);
    assert_eq!(r.attempts, 3);
    assert!(r.log.iter().all(|l| l.stage == Stage::Ambiguity));
    // off by default: the first table found is accepted
    let r = run_pipeline(&paper_instance().text, &f, &config());
    assert_eq!(r.status, PipelineStatus::Solved);
}

#[test]
fn unknown_column_is_a_semantic_failure() {
    let bad = PipelineConfig {
        format: OutputFormat::columns(["color"]),
        max_attempts: 2,
        ..config()
    };
    let r = run_pipeline(&paper_instance().text, &OracleFormalizer, &bad);
    assert_eq!(r.status, PipelineStatus::FailedSemantic);
    assert_eq!(r.attempts, 2);
    assert_eq!(r.log[0].stage, Stage::Format);
}

#[test]
fn solved_results_pass_check_solution() {
    let inst = paper_instance();
    let r = run_pipeline(&inst.text, &OracleFormalizer, &config());
    let ds = OracleFormalizer.gen_data_structure(&inst.text, &config().format).unwrap();
    let v = OracleFormalizer.gen_constraints(&ds, &inst.text).unwrap();
    let program = compile(&logic_forge::agent::merge_sources(&ds, &v)).unwrap();
    assert!(check_solution(&program, &r.solution.unwrap()).unwrap());
}

// ---- transcripts ----

#[derive(Clone, Default)]
struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(b);
        Ok(b.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn record_paper_run() -> (String, PipelineResult) {
    let buf = SharedBuf::default();
    let inner = FaultInjector::first(OracleFormalizer, 1, Fault::Garbage);
    let rec = RecordingFormalizer::new(inner, Box::new(buf.clone()));
    let r = run_pipeline(&paper_instance().text, &rec, &config());
    drop(rec);
    let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
    (text, r)
}

fn golden(path: &str, actual: &str) -> String {
    let full = format!("{}/tests/fixtures/{path}", env!("CARGO_MANIFEST_DIR"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&full, actual).unwrap();
    }
    std::fs::read_to_string(&full).unwrap()
}

#[test]
fn recording_matches_checked_in_transcript() {
    let (text, result) = record_paper_run();
    assert_eq!(text, golden("paper_transcript.jsonl", &text));
    let json = serde_json::to_string_pretty(&result).unwrap() + "\n";
    assert_eq!(json, golden("paper_transcript.result.json", &json));
    // four calls: two per attempt
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn replaying_transcript_reproduces_result_bit_for_bit() {
    let transcript = include_str!("fixtures/paper_transcript.jsonl");
    let expected = include_str!("fixtures/paper_transcript.result.json");
    let replay = ReplayFormalizer::from_jsonl(transcript.as_bytes()).unwrap();
    let r = run_pipeline(&paper_instance().text, &replay, &config());
    assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", expected);
    assert_eq!(r.status, PipelineStatus::Solved);
    assert_eq!(r.attempts, 2);
}

#[test]
fn replay_past_the_end_is_exhausted() {
    let replay = ReplayFormalizer::new(Vec::new());
    let r = run_pipeline("x", &replay, &PipelineConfig { max_attempts: 2, ..config() });
    assert_eq!(r.status, PipelineStatus::FailedSyntax);
    assert_eq!(r.attempts, 2);
    assert!(ReplayFormalizer::from_jsonl("{oops\n".as_bytes()).is_err());
    let e: TranscriptEntry = serde_json::from_str(include_str!("fixtures/paper_transcript.jsonl").lines().next().unwrap()).unwrap();
    assert_eq!(e.input, paper_instance().text);
}

// ---- LLM client against a stub server ----

struct Stub {
    url: String,
    requests: Arc<Mutex<Vec<(String, serde_json::Value)>>>,
}

/// Serves `replies` (chat-completion message contents) one per connection.
fn stub_server(replies: Vec<(u16, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = requests.clone();
    thread::spawn(move || {
        for (status, content) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut headers = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                headers.push_str(&line);
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push((headers, serde_json::from_slice(&body).unwrap()));
            let reply = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string();
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    Stub { url, requests }
}

fn client(url: &str) -> LlmFormalizer {
    let mut c = LlmClientConfig::new(url, "test-model");
    c.api_key = Some("secret".into());
    LlmFormalizer::new(c).unwrap()
}

#[test]
fn fenced_reply_is_extracted() {
    let ds = FIG3_FIG4.split("def ").next().unwrap().to_string();
    let stub = stub_server(vec![(200, format!("Here it is:\n```python\n{ds}```\n"))]);
    let got = client(&stub.url).gen_data_structure("a puzzle", &OutputFormat::columns(["house"])).unwrap();
    assert_eq!(got.text, ds);
    let reqs = stub.requests.lock().unwrap();
    let (headers, body) = &reqs[0];
    assert!(headers.to_ascii_lowercase().contains("authorization: bearer secret"), "{headers}");
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["messages"][0]["role"], "system");
    assert!(body["messages"][1]["content"].as_str().unwrap().contains("a puzzle"));
}

#[test]
fn prose_reply_is_an_extraction_error() {
    let stub = stub_server(vec![(200, "I cannot write code today.".into())]);
    let err = client(&stub.url).gen_constraints(&SourceText::new("ds", "class A:\n  x: int\n"), "p");
    assert_eq!(err.unwrap_err(), FormalizerError::Extraction);
}

#[test]
fn two_blocks_take_the_first() {
    let stub = stub_server(vec![(200, "```\nfirst\n```\ntext\n```python\nsecond\n```".into())]);
    let got = client(&stub.url).gen_constraints(&SourceText::new("ds", ""), "p").unwrap();
    assert_eq!(got.text, "first\n");
}

#[test]
fn http_error_is_transport() {
    let stub = stub_server(vec![(500, "```\nx\n```".into())]);
    let err = client(&stub.url).gen_constraints(&SourceText::new("ds", ""), "p").unwrap_err();
    assert!(matches!(err, FormalizerError::Transport(m) if m.contains("500")));
}

#[test]
fn llm_pipeline_end_to_end_through_stub() {
    let inst = paper_instance();
    let ds = OracleFormalizer.gen_data_structure(&inst.text, &config().format).unwrap();
    let v = OracleFormalizer.gen_constraints(&ds, &inst.text).unwrap();
    let fence = |s: &str| format!("```python\n{s}```");
    let stub = stub_server(vec![
        (200, fence(&ds.text)),
        (200, "no code, sorry".into()),
        (200, fence(&ds.text)),
        (200, fence(&v.text)),
    ]);
    let r = run_pipeline(&inst.text, &client(&stub.url), &config());
    assert_eq!(r.status, PipelineStatus::Solved);
    assert_eq!(r.attempts, 2);
    assert_eq!(r.solution.unwrap(), inst.truth);
}
